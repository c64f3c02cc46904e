//! Dimensions of harmonic and polynomial spaces on S^d, sphere surface
//! areas, Delsarte-Goethals-Seidel lower bounds, and evaluation of the
//! normalized Gegenbauer (generalized Legendre) polynomials P_l^{(d+1)}
//! with P_l^{(d+1)}(1) = 1, including derivatives.

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use serde::{Deserialize, Serialize};

/// Dimension d of the sphere S^d embedded in R^{d+1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SphereDim(u32);

impl SphereDim {
    /// S^d lives in R^{d+1}. Rejects d < 1; d = 1 (the circle) is accepted
    /// for surface areas and kernel evaluation even though the design
    /// machinery targets d >= 2.
    pub fn new(d: u32) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidDimension(d));
        }
        Ok(SphereDim(d))
    }

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    /// Ambient dimension d + 1.
    #[inline]
    pub fn ambient(self) -> usize {
        self.0 as usize + 1
    }
}

fn checked_binom(n: u64, k: u64) -> Result<u64> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or_else(|| Error::overflow("binomial coefficient"))?;
        acc /= (i + 1) as u128;
    }
    u64::try_from(acc).map_err(|_| Error::overflow("binomial coefficient"))
}

/// binom(n, k) with checked 64-bit arithmetic.
pub fn binom(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    checked_binom(n, k)
}

fn harmonic_dim_raw(d: u64, l: u64) -> Result<u64> {
    // M(d,l) = (2l+d-1)(l+d-2)! / ((d-1)! l!) = binom(l+d, l) - binom(l+d-2, l-2)
    let a = binom(l + d, l)?;
    let b = if l >= 2 { binom(l + d - 2, l - 2)? } else { 0 };
    a.checked_sub(b)
        .ok_or_else(|| Error::overflow("harmonic dimension"))
}

/// M(d, l): dimension of the space of spherical harmonics of exact degree l
/// on S^d.
pub fn harmonic_dim(d: SphereDim, l: usize) -> Result<u64> {
    harmonic_dim_raw(d.value() as u64, l as u64)
}

/// d_t = dim(P_t(S^d)) = sum_{l<=t} M(d, l) = M(d+1, t).
pub fn poly_space_dim(d: SphereDim, t: usize) -> Result<u64> {
    harmonic_dim_raw(d.value() as u64 + 1, t as u64)
}

/// Delsarte-Goethals-Seidel lower bound on the number of points of a
/// spherical t-design on S^d.
pub fn dgs_lower_bound(d: SphereDim, t: usize) -> Result<u64> {
    assert!(t >= 1, "DGS bound requires t >= 1");
    let d = d.value() as u64;
    let t = t as u64;
    if t % 2 == 1 {
        let s = (t - 1) / 2;
        binom(d + s, d)?
            .checked_mul(2)
            .ok_or_else(|| Error::overflow("DGS lower bound"))
    } else {
        let s = t / 2;
        binom(d + s, d)?
            .checked_add(binom(d + s - 1, d)?)
            .ok_or_else(|| Error::overflow("DGS lower bound"))
    }
}

/// Surface area omega_d of the unit sphere S^d, via the recurrence
/// omega_d = 2 pi / (d - 1) * omega_{d-2} with omega_0 = 2, omega_1 = 2 pi.
pub fn sphere_area<T: Scalar>(d: SphereDim) -> T {
    let two = cast::<T>(2.0);
    let two_pi = two * T::pi();
    let mut k = if d.value().is_multiple_of(2) { 0u32 } else { 1u32 };
    let mut area = if k == 0 { two } else { two_pi };
    while k < d.value() {
        k += 2;
        area = area * two_pi / cast::<T>((k - 1) as f64);
    }
    area
}

/// Evaluator for the normalized Gegenbauer polynomials P_l^{(d+1)} on
/// [-1, 1], with parameter lambda = (d-1)/2 and P_l^{(d+1)}(1) = 1.
///
/// Uses the divide-through three-term recurrence
///
///   (l + d - 2) R_l(x) = (2l + d - 3) x R_{l-1}(x) - (l - 1) R_{l-2}(x)
///
/// whose coefficients are precomputed per degree; the normalization is
/// built into the recurrence, so no post-division by C_l(1) is needed.
#[derive(Debug, Clone)]
pub struct GegenbauerEvaluator<T: Scalar> {
    d: SphereDim,
    max_degree: usize,
    // (a_l, b_l) for l = 2..=max_degree: R_l = a_l x R_{l-1} - b_l R_{l-2}
    coeffs: Vec<(T, T)>,
}

impl<T: Scalar> GegenbauerEvaluator<T> {
    pub fn new(d: SphereDim, max_degree: usize) -> Self {
        let dd = d.value() as f64;
        let coeffs = (2..=max_degree)
            .map(|l| {
                let l = l as f64;
                let denom = l + dd - 2.0;
                (cast::<T>((2.0 * l + dd - 3.0) / denom), cast::<T>((l - 1.0) / denom))
            })
            .collect();
        GegenbauerEvaluator {
            d,
            max_degree,
            coeffs,
        }
    }

    #[inline]
    pub fn dim(&self) -> SphereDim {
        self.d
    }

    #[inline]
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Clamp a dot product into [-1, 1]; values exceeding 1 by a few ulps
    /// are produced routinely by dot products of unit vectors.
    #[inline]
    fn clamp(x: T) -> T {
        if x > T::one() {
            T::one()
        } else if x < -T::one() {
            -T::one()
        } else {
            x
        }
    }

    fn check_degree(&self, l: usize) -> Result<()> {
        if l > self.max_degree {
            return Err(Error::DegreeOutOfRange {
                degree: l,
                max_degree: self.max_degree,
            });
        }
        Ok(())
    }

    /// P_l^{(d+1)}(x), normalized so the value at x = 1 is exactly 1.
    /// The endpoints are handled exactly: P_l(1) = 1 and P_l(-1) = (-1)^l
    /// (parity), sidestepping the rounding of the recurrence coefficients.
    pub fn eval(&self, l: usize, x: T) -> Result<T> {
        self.check_degree(l)?;
        let x = Self::clamp(x);
        if l == 0 {
            return Ok(T::one());
        }
        if x == T::one() {
            return Ok(T::one());
        }
        if x == -T::one() {
            return Ok(if l.is_multiple_of(2) { T::one() } else { -T::one() });
        }
        if l == 1 {
            return Ok(x);
        }
        let mut prev = T::one();
        let mut cur = x;
        for &(a, b) in &self.coeffs[..l - 1] {
            let next = a * x * cur - b * prev;
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }

    /// d/dx of the normalized polynomial, by the differentiated recurrence.
    pub fn eval_deriv(&self, l: usize, x: T) -> Result<T> {
        self.check_degree(l)?;
        let x = Self::clamp(x);
        if l == 0 {
            return Ok(T::zero());
        }
        if l == 1 {
            return Ok(T::one());
        }
        let mut prev = T::one();
        let mut cur = x;
        let mut dprev = T::zero();
        let mut dcur = T::one();
        for &(a, b) in &self.coeffs[..l - 1] {
            let next = a * x * cur - b * prev;
            let dnext = a * (cur + x * dcur) - b * dprev;
            prev = cur;
            cur = next;
            dprev = dcur;
            dcur = dnext;
        }
        Ok(dcur)
    }

    /// Weighted kernel sum sum_l w_l R_l(x) in a single pass of the
    /// recurrence. `weights[l]` multiplies degree l; degrees beyond the
    /// slice are skipped.
    pub fn weighted_sum(&self, weights: &[T], x: T) -> T {
        let x = Self::clamp(x);
        if x == T::one() {
            return weights.iter().fold(T::zero(), |a, &w| a + w);
        }
        if x == -T::one() {
            return weights
                .iter()
                .enumerate()
                .fold(T::zero(), |a, (l, &w)| if l % 2 == 0 { a + w } else { a - w });
        }
        let mut acc = T::zero();
        if let Some(&w0) = weights.first() {
            acc += w0;
        }
        if let Some(&w1) = weights.get(1) {
            acc += w1 * x;
        }
        let mut prev = T::one();
        let mut cur = x;
        for (i, &(a, b)) in self.coeffs.iter().enumerate() {
            let next = a * x * cur - b * prev;
            prev = cur;
            cur = next;
            if let Some(&w) = weights.get(i + 2) {
                acc += w * next;
            } else {
                break;
            }
        }
        acc
    }

    /// Weighted sum of derivatives sum_l w_l R_l'(x), used by the gradient
    /// of the design quantity.
    pub fn weighted_deriv_sum(&self, weights: &[T], x: T) -> T {
        let x = Self::clamp(x);
        let mut acc = T::zero();
        if let Some(&w1) = weights.get(1) {
            acc += w1;
        }
        let mut prev = T::one();
        let mut cur = x;
        let mut dprev = T::zero();
        let mut dcur = T::one();
        for (i, &(a, b)) in self.coeffs.iter().enumerate() {
            let next = a * x * cur - b * prev;
            let dnext = a * (cur + x * dcur) - b * dprev;
            prev = cur;
            cur = next;
            dprev = dcur;
            dcur = dnext;
            if let Some(&w) = weights.get(i + 2) {
                acc += w * dnext;
            } else {
                break;
            }
        }
        acc
    }
}
