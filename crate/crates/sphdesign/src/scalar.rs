//! Scalar abstraction: every numerical routine in this crate is generic over
//! a real floating-point type. `f64` is the default used by the CLI; `f32`
//! works through the same code paths.

use nalgebra::RealField;
use num_traits::FromPrimitive;

/// Real scalar type usable throughout the crate (f32 or f64).
pub trait Scalar: RealField + FromPrimitive + Copy {
    /// Machine epsilon of the concrete type.
    fn eps() -> Self;

    /// Widening (or identity) conversion to f64, for reporting.
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }

    fn to_f64(self) -> f64 {
        self
    }
}

/// Lossy cast from `f64`, panics only for values not representable at all.
#[inline]
pub fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 value not representable in scalar type")
}

/// Cast from `usize`.
#[inline]
pub fn cast_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("usize value not representable in scalar type")
}

#[inline]
pub fn max<T: Scalar>(a: T, b: T) -> T {
    if a > b {
        a
    } else {
        b
    }
}

#[inline]
pub fn min<T: Scalar>(a: T, b: T) -> T {
    if a < b {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn casts_round_trip() {
        let x: f64 = cast::<f64>(1.5);
        assert_eq!(x, 1.5);
        let y: f32 = cast::<f32>(0.25);
        assert_eq!(y, 0.25);
        assert_eq!(cast_usize::<f64>(7), 7.0);
    }

    #[test]
    fn scalar_methods_resolve() {
        // sqrt/acos/abs come from nalgebra's ComplexField; make sure method
        // syntax resolves without ambiguity under the Scalar bound.
        fn f<T: Scalar>(x: T) -> T {
            let y = x.sqrt().acos();
            y.abs() + T::pi() + T::eps()
        }
        assert!(f(0.5f64).is_finite());
    }
}
