//! Explicit real orthonormal spherical harmonics on S^2, used as an
//! independent brute-force oracle for the kernel-side quantities.
//!
//! Basis and ordering (fixed): for each degree l = 0..=t the block is
//! ordered zonal first, then cosine terms for m = 1..=l, then sine terms
//! for m = 1..=l:
//!
//!   Y_{l,0}(theta,phi)      = N_{l,0} P_l(cos theta)
//!   Y_{l,m}^{cos}           = sqrt(2) N_{l,m} P_l^m(cos theta) cos(m phi)
//!   Y_{l,m}^{sin}           = sqrt(2) N_{l,m} P_l^m(cos theta) sin(m phi)
//!
//! with N_{l,m} = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) and Condon-Shortley-free
//! associated Legendre functions. Any fixed real orthonormal basis gives the
//! same design quantities; this is the simplest stable one.

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::scalar::{cast, Scalar};
use nalgebra::{DMatrix, DVector};

/// Real orthonormal spherical harmonic basis on S^2 up to degree t.
#[derive(Debug, Clone)]
pub struct HarmonicBasisS2<T: Scalar> {
    t: usize,
    // norm[l][m] = sqrt((2l+1)/(4pi) (l-m)!/(l+m)!)
    norms: Vec<Vec<T>>,
}

impl<T: Scalar> HarmonicBasisS2<T> {
    pub fn new(t: usize) -> Self {
        let mut norms = Vec::with_capacity(t + 1);
        for l in 0..=t {
            let mut row = Vec::with_capacity(l + 1);
            for m in 0..=l {
                let mut ratio = 1.0f64; // (l-m)!/(l+m)!
                for k in (l - m + 1)..=(l + m) {
                    ratio /= k as f64;
                }
                let v = ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) * ratio).sqrt();
                row.push(cast::<T>(v));
            }
            norms.push(row);
        }
        HarmonicBasisS2 { t, norms }
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.t
    }

    /// Number of basis functions, (t+1)^2.
    #[inline]
    pub fn len(&self) -> usize {
        (self.t + 1) * (self.t + 1)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Associated Legendre values P_l^m(z) (no Condon-Shortley phase) for
    /// all 0 <= m <= l <= t, packed as plm[l][m].
    #[allow(clippy::needless_range_loop)]
    fn assoc_legendre(&self, z: T) -> Vec<Vec<T>> {
        let t = self.t;
        let s = crate::scalar::max(T::one() - z * z, T::zero()).sqrt(); // sin(theta)
        let mut plm = vec![Vec::new(); t + 1];
        for l in 0..=t {
            plm[l] = vec![T::zero(); l + 1];
        }
        plm[0][0] = T::one();
        for m in 1..=t {
            // P_m^m = (2m-1)!! s^m
            plm[m][m] = plm[m - 1][m - 1] * cast::<T>((2 * m - 1) as f64) * s;
        }
        for m in 0..t {
            // P_{m+1}^m = (2m+1) z P_m^m
            plm[m + 1][m] = cast::<T>((2 * m + 1) as f64) * z * plm[m][m];
        }
        for m in 0..=t {
            for l in (m + 2)..=t {
                let a = cast::<T>((2 * l - 1) as f64);
                let b = cast::<T>((l + m - 1) as f64);
                let c = cast::<T>((l - m) as f64);
                plm[l][m] = (a * z * plm[l - 1][m] - b * plm[l - 2][m]) / c;
            }
        }
        plm
    }

    /// All (t+1)^2 harmonic values at one point, ordered by (l; zonal,
    /// cos ascending, sin ascending).
    #[allow(clippy::needless_range_loop)]
    pub fn eval_point(&self, p: &DVector<T>) -> Vec<T> {
        debug_assert_eq!(p.len(), 3);
        let z = p[2];
        let phi = p[1].atan2(p[0]);
        let plm = self.assoc_legendre(z);
        let sqrt2 = cast::<T>(std::f64::consts::SQRT_2);
        let mut out = Vec::with_capacity(self.len());
        for l in 0..=self.t {
            out.push(self.norms[l][0] * plm[l][0]);
            for m in 1..=l {
                let mphi = cast::<T>(m as f64) * phi;
                out.push(sqrt2 * self.norms[l][m] * plm[l][m] * mphi.cos());
            }
            for m in 1..=l {
                let mphi = cast::<T>(m as f64) * phi;
                out.push(sqrt2 * self.norms[l][m] * plm[l][m] * mphi.sin());
            }
        }
        out
    }
}

fn require_s2<T: Scalar>(x: &PointSet<T>) -> Result<()> {
    if x.dim().value() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: x.dim().ambient(),
        });
    }
    Ok(())
}

/// Y_t: the d_t x N matrix of all harmonics of degree 0..=t evaluated on
/// the configuration. Row 1 is the constant 1/sqrt(4 pi).
pub fn y_matrix<T: Scalar>(x: &PointSet<T>, t: usize) -> Result<DMatrix<T>> {
    require_s2(x)?;
    let basis = HarmonicBasisS2::new(t);
    let rows = basis.len();
    let n = x.len();
    let mut y = DMatrix::zeros(rows, n);
    for (j, p) in x.points().iter().enumerate() {
        for (i, v) in basis.eval_point(p).into_iter().enumerate() {
            y[(i, j)] = v;
        }
    }
    Ok(y)
}

/// Explicit Weyl sums r(X) = Y_t^0 e: every harmonic of degree 1..=t summed
/// over the configuration. Length d_t - 1.
pub fn weyl_sums_explicit<T: Scalar>(x: &PointSet<T>, t: usize) -> Result<DVector<T>> {
    assert!(t >= 1);
    require_s2(x)?;
    let y = y_matrix(x, t)?;
    let n = x.len();
    let rows = y.nrows();
    let mut r = DVector::zeros(rows - 1);
    for i in 1..rows {
        let mut acc = crate::kahan::KahanSum::new();
        for j in 0..n {
            acc.add(y[(i, j)]);
        }
        r[i - 1] = acc.value();
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{octahedron, random_uniform, tetrahedron, PointSet};
    use crate::quantities::{gram, weyl_residual_sq};
    use crate::special::{harmonic_dim, GegenbauerEvaluator, SphereDim};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn s2() -> SphereDim {
        SphereDim::new(2).unwrap()
    }

    #[test]
    fn degree_zero_is_constant() {
        let basis = HarmonicBasisS2::<f64>::new(3);
        let x = random_uniform::<f64>(s2(), 20, 3);
        for p in x.points() {
            let v = basis.eval_point(p);
            assert_abs_diff_eq!(v[0], 1.0 / (4.0 * PI).sqrt(), epsilon = 1e-15);
        }
    }

    #[test]
    fn north_pole_column_is_zonal() {
        let pole = DVector::from_column_slice(&[0.0, 0.0, 1.0]);
        let x = PointSet::new(s2(), vec![pole]).unwrap();
        let y = y_matrix(&x, 1).unwrap();
        // ordering for t=1: Y00, Y10, Y11cos, Y11sin
        assert_abs_diff_eq!(y[(0, 0)], 1.0 / (4.0 * PI).sqrt(), epsilon = 1e-15);
        assert!(y[(1, 0)] > 0.0, "zonal degree-1 entry nonzero at pole");
        assert_abs_diff_eq!(y[(2, 0)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y[(3, 0)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn addition_theorem_identity() {
        // the oracle's core correctness test
        let ev = GegenbauerEvaluator::<f64>::new(s2(), 8);
        let basis = HarmonicBasisS2::<f64>::new(8);
        let pts = random_uniform::<f64>(s2(), 40, 17);
        for a in 0..20 {
            let x = pts.point(a);
            let y = pts.point(a + 20);
            let vx = basis.eval_point(x);
            let vy = basis.eval_point(y);
            let dot = x.dot(y);
            let mut offset = 0usize;
            for l in 0..=8usize {
                let m = harmonic_dim(s2(), l).unwrap() as usize;
                let lhs: f64 = (offset..offset + m).map(|k| vx[k] * vy[k]).sum();
                let rhs = m as f64 / (4.0 * PI) * ev.eval(l, dot).unwrap();
                assert!((lhs - rhs).abs() < 1e-10, "l={l}: {lhs} vs {rhs}");
                offset += m;
            }
        }
    }

    #[test]
    fn monte_carlo_orthonormality() {
        // Gram of the basis over uniform points approximates I / omega * omega
        // = I after weighting by omega/N
        let basis = HarmonicBasisS2::<f64>::new(3);
        let n = 100_000;
        let x = random_uniform::<f64>(s2(), n, 99);
        let k = basis.len();
        let mut g = DMatrix::<f64>::zeros(k, k);
        for p in x.points() {
            let v = basis.eval_point(p);
            for i in 0..k {
                for j in i..k {
                    g[(i, j)] += v[i] * v[j];
                }
            }
        }
        let w = 4.0 * PI / n as f64;
        for i in 0..k {
            for j in i..k {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g[(i, j)] * w - expected).abs() < 2e-2,
                    "({i},{j}): {}",
                    g[(i, j)] * w
                );
            }
        }
    }

    #[test]
    fn gram_matches_oracle() {
        for (seed, t) in [(1u64, 1usize), (2, 3), (3, 5), (4, 8)] {
            let x = random_uniform::<f64>(s2(), 15, seed);
            let y = y_matrix(&x, t).unwrap();
            let g_oracle = y.transpose() * &y;
            let g = gram(&x, t).unwrap();
            for i in 0..15 {
                for j in 0..15 {
                    assert!(
                        (g.entries[(i, j)] - g_oracle[(i, j)]).abs() < 1e-10,
                        "t={t} ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn weyl_sums_octahedron_vanish() {
        let r = weyl_sums_explicit(&octahedron::<f64>(), 3).unwrap();
        for v in r.iter() {
            assert!(v.abs() < 1e-12, "residual entry {v}");
        }
    }

    #[test]
    fn weyl_sums_antipodal_pair_vanish() {
        let pair = PointSet::new(
            s2(),
            vec![
                DVector::from_column_slice(&[0.6, 0.8, 0.0]),
                DVector::from_column_slice(&[-0.6, -0.8, 0.0]),
            ],
        )
        .unwrap();
        let r = weyl_sums_explicit(&pair, 1).unwrap();
        for v in r.iter() {
            assert!(f64::abs(*v) < 1e-15);
        }
    }

    #[test]
    fn weyl_sums_tetrahedron_t3_nonzero() {
        let r = weyl_sums_explicit(&tetrahedron::<f64>(), 3).unwrap();
        assert!(r.norm() > 1e-2, "tetrahedron is not a 3-design");
    }

    #[test]
    fn explicit_residual_matches_kernel() {
        for seed in 0..5u64 {
            let x = random_uniform::<f64>(s2(), 12, 100 + seed);
            for t in 1..=6usize {
                let r = weyl_sums_explicit(&x, t).unwrap();
                let explicit = r.norm_squared();
                let kernel = weyl_residual_sq(&x, t).unwrap();
                assert!(
                    (explicit - kernel).abs() <= 1e-10 * explicit.max(1.0),
                    "seed={seed} t={t}: {explicit} vs {kernel}"
                );
            }
        }
    }

    #[test]
    fn y_matrix_full_rank_for_random_points() {
        for t in [2usize, 4] {
            let dt = (t + 1) * (t + 1);
            for n in [dt, dt + 5] {
                let x = random_uniform::<f64>(s2(), n, 7 * t as u64 + n as u64);
                let y = y_matrix(&x, t).unwrap();
                let svd = y.svd(false, false);
                let max = svd.singular_values.max();
                let rank = svd
                    .singular_values
                    .iter()
                    .filter(|&&s| s > 1e-10 * max)
                    .count();
                assert_eq!(rank, dt, "t={t} n={n}");
            }
        }
    }

    #[test]
    fn rejects_non_s2() {
        let d3 = SphereDim::new(3).unwrap();
        let x = random_uniform::<f64>(d3, 4, 1);
        assert!(y_matrix(&x, 2).is_err());
        assert!(weyl_sums_explicit(&x, 2).is_err());
    }
}
