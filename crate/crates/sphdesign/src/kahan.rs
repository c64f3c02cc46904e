//! Neumaier-compensated summation. The design quantities are sums that
//! cancel to zero at a design, so plain accumulation would bury the signal
//! under rounding.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct KahanSum<T: Scalar> {
    sum: T,
    compensation: T,
}

impl<T: Scalar> KahanSum<T> {
    pub fn new() -> Self {
        KahanSum {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, value: T) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.compensation
    }
}

impl<T: Scalar> Default for KahanSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_tail() {
        let mut k = KahanSum::<f64>::new();
        k.add(1e16);
        k.add(1.0);
        k.add(-1e16);
        assert_eq!(k.value(), 1.0);
    }

    #[test]
    fn matches_plain_sum_on_benign_input() {
        let mut k = KahanSum::<f64>::new();
        let mut s = 0.0;
        for i in 0..1000 {
            let v = (i as f64).sin();
            k.add(v);
            s += v;
        }
        assert!((k.value() - s).abs() < 1e-12);
    }
}
