//! Point configurations on S^d: geodesic distances, separation distance,
//! mesh-norm estimation with deterministic candidate sets, mesh ratio,
//! and uniform random generation.

use crate::error::{Error, Result};
use crate::scalar::{cast, cast_usize, max, min, Scalar};
use crate::special::{sphere_area, SphereDim};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Norm deviation tolerated (and repaired by renormalization) at
/// construction; anything worse is rejected.
const NORM_REPAIR_TOL: f64 = 1e-8;

/// An ordered configuration of N unit vectors on S^d. Ordering is
/// significant: the nonlinear residual C_t pivots on the first point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T: Scalar> {
    d: SphereDim,
    points: Vec<DVector<T>>,
}

impl<T: Scalar> PointSet<T> {
    /// Build a point set, renormalizing points whose norm deviates from 1
    /// by at most 1e-8 and rejecting anything worse.
    pub fn new(d: SphereDim, points: Vec<DVector<T>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFewPoints {
                required: 1,
                actual: 0,
            });
        }
        let ambient = d.ambient();
        let mut normalized = Vec::with_capacity(points.len());
        for (index, p) in points.into_iter().enumerate() {
            if p.len() != ambient {
                return Err(Error::DimensionMismatch {
                    expected: ambient,
                    actual: p.len(),
                });
            }
            let norm = p.norm();
            if !norm.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("norm of point {index}"),
                });
            }
            let dev = (norm - T::one()).abs().to_f64();
            if dev.is_nan() || dev > NORM_REPAIR_TOL {
                return Err(Error::NotOnSphere {
                    index,
                    norm: norm.to_f64(),
                });
            }
            // leave already-unit points untouched so a write/read round
            // trip is bit-exact
            if dev <= 4.0 * T::eps().to_f64() {
                normalized.push(p);
            } else {
                normalized.push(p / norm);
            }
        }
        Ok(PointSet {
            d,
            points: normalized,
        })
    }

    /// Build from rows of coordinates.
    pub fn from_coords(d: SphereDim, rows: &[Vec<T>]) -> Result<Self> {
        let points = rows
            .iter()
            .map(|r| DVector::from_column_slice(r))
            .collect();
        Self::new(d, points)
    }

    #[inline]
    pub fn dim(&self) -> SphereDim {
        self.d
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[DVector<T>] {
        &self.points
    }

    #[inline]
    pub fn point(&self, i: usize) -> &DVector<T> {
        &self.points[i]
    }

    /// Replace the points with already-normalized vectors of the right
    /// ambient dimension (used by the optimizers on their own iterates).
    pub(crate) fn with_points_unchecked(&self, points: Vec<DVector<T>>) -> Self {
        debug_assert!(points.iter().all(|p| p.len() == self.d.ambient()));
        PointSet {
            d: self.d,
            points,
        }
    }
}

#[inline]
fn clamp_unit<T: Scalar>(x: T) -> T {
    min(max(x, -T::one()), T::one())
}

/// Geodesic distance arccos(x . y) in [0, pi].
pub fn geodesic_distance<T: Scalar>(x: &DVector<T>, y: &DVector<T>) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(clamp_unit(x.dot(y)).acos())
}

/// Minimum pairwise geodesic distance. Requires N >= 2.
pub fn separation_distance<T: Scalar>(x: &PointSet<T>) -> Result<T> {
    if x.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            actual: x.len(),
        });
    }
    let mut best = T::pi();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            // min distance = max dot
            let dot = clamp_unit(x.point(i).dot(x.point(j)));
            let dist = dot.acos();
            best = min(best, dist);
        }
    }
    Ok(best)
}

/// How a mesh-norm estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshNormMethod {
    Grid,
    Refined,
}

/// Lower bound on the mesh norm h_{X_N}, obtained by maximizing the
/// nearest-point distance over finitely many candidates. Never exceeds
/// the true mesh norm.
#[derive(Debug, Clone, Copy)]
pub struct MeshNormEstimate<T: Scalar> {
    pub lower_bound: T,
    pub candidate_count: usize,
    pub method: MeshNormMethod,
}

/// Heuristic upper bound on the covering radius of the candidate set used
/// by [`mesh_norm_estimate`]; `estimate + margin` is the working upper
/// bound on the true mesh norm, as reported by the mesh-norm condition.
pub fn mesh_norm_margin<T: Scalar>(d: SphereDim, resolution: usize) -> T {
    let r = resolution as f64;
    if d.value() == 2 {
        // spiral candidates sit roughly hexagonally; 3.5/sqrt(R) bounds
        // the hole radius with slack
        cast::<T>(3.5 / r.sqrt())
    } else {
        let area: T = sphere_area::<T>(d);
        let exp = cast::<T>(1.0 / d.value() as f64);
        cast::<T>(2.5) * (area / cast::<T>(r)).powf(exp)
    }
}

/// Generalized spiral points on S^2, a deterministic low-discrepancy set.
pub fn spiral_points<T: Scalar>(n: usize) -> PointSet<T> {
    let d = SphereDim::new(2).unwrap();
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let points = (0..n)
        .map(|k| {
            let z = -1.0 + 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            DVector::from_column_slice(&[
                cast::<T>(r * phi.cos()),
                cast::<T>(r * phi.sin()),
                cast::<T>(z),
            ])
        })
        .collect();
    PointSet::new(d, points).expect("spiral points are unit vectors")
}

fn halton_1d(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Halton-type candidates on S^d for d > 2: pairs of Halton
/// coordinates are pushed through Box-Muller to Gaussians, then normalized.
fn halton_sphere_points<T: Scalar>(d: SphereDim, n: usize) -> PointSet<T> {
    let ambient = d.ambient();
    let pairs = ambient.div_ceil(2);
    let mut points = Vec::with_capacity(n);
    let mut index = 17; // skip the degenerate start of the sequence
    while points.len() < n {
        let mut coords = Vec::with_capacity(ambient);
        for p in 0..pairs {
            let u = halton_1d(index, PRIMES[2 * p]);
            let v = halton_1d(index, PRIMES[2 * p + 1]);
            let u = u.max(1e-12);
            let radius = (-2.0 * u.ln()).sqrt();
            let angle = 2.0 * std::f64::consts::PI * v;
            coords.push(radius * angle.cos());
            if coords.len() < ambient {
                coords.push(radius * angle.sin());
            }
        }
        index += 1;
        let norm: f64 = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        points.push(DVector::from_iterator(
            ambient,
            coords.iter().map(|&c| cast::<T>(c / norm)),
        ));
    }
    PointSet::new(d, points).expect("normalized Halton points are unit vectors")
}

fn min_distance_to_set<T: Scalar>(y: &DVector<T>, x: &PointSet<T>) -> T {
    // min over arccos of dots = arccos of max dot
    let mut best_dot = -T::one();
    for p in x.points() {
        best_dot = max(best_dot, p.dot(y));
    }
    clamp_unit(best_dot).acos()
}

/// Orthonormal basis of the tangent space at a unit vector, by Gram-Schmidt
/// against the coordinate axes.
pub(crate) fn tangent_basis<T: Scalar>(x: &DVector<T>) -> Vec<DVector<T>> {
    let n = x.len();
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(n - 1);
    for axis in 0..n {
        if basis.len() == n - 1 {
            break;
        }
        let mut v = DVector::zeros(n);
        v[axis] = T::one();
        v -= x * x.dot(&v);
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let norm = v.norm();
        if norm > cast::<T>(1e-6) {
            basis.push(v / norm);
        }
    }
    debug_assert_eq!(basis.len(), n - 1);
    basis
}

/// Hill-climb the nearest-point distance from a starting candidate; every
/// iterate is an actual sphere point, so the result stays a lower bound.
fn refine_candidate<T: Scalar>(start: DVector<T>, x: &PointSet<T>, initial_step: T) -> T {
    let mut y = start;
    let mut value = min_distance_to_set(&y, x);
    let mut step = initial_step;
    let floor = cast::<T>(1e-9);
    while step > floor {
        let basis = tangent_basis(&y);
        let mut improved = false;
        for b in &basis {
            for sign in [T::one(), -T::one()] {
                let cand = (&y + b * (sign * step)).normalize();
                let v = min_distance_to_set(&cand, x);
                if v > value {
                    value = v;
                    y = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= cast::<T>(0.5);
        }
    }
    value
}

/// Certified lower bound on the mesh norm: maximize the nearest-point
/// distance over `resolution` deterministic candidates (generalized spiral
/// for d = 2, normalized Halton for d > 2), then locally refine the best
/// candidate.
pub fn mesh_norm_estimate<T: Scalar>(
    x: &PointSet<T>,
    resolution: usize,
) -> MeshNormEstimate<T> {
    assert!(resolution >= 1, "resolution must be at least 1");
    let d = x.dim();
    let candidates = if d.value() == 2 {
        spiral_points::<T>(resolution)
    } else {
        halton_sphere_points::<T>(d, resolution)
    };
    let mut best_value = T::zero();
    let mut best_point = candidates.point(0).clone();
    for c in candidates.points() {
        let v = min_distance_to_set(c, x);
        if v > best_value {
            best_value = v;
            best_point = c.clone();
        }
    }
    let refined = refine_candidate(best_point, x, mesh_norm_margin::<T>(d, resolution));
    MeshNormEstimate {
        lower_bound: max(best_value, refined),
        candidate_count: resolution,
        method: MeshNormMethod::Refined,
    }
}

/// Mesh ratio rho = 2 h / delta. The mesh-norm term is a lower bound, so
/// the ratio may undershoot its theoretical floor of 1 slightly.
pub fn mesh_ratio<T: Scalar>(x: &PointSet<T>, resolution: usize) -> Result<T> {
    let sep = separation_distance(x)?;
    if sep == T::zero() {
        return Err(Error::DegenerateSeparation);
    }
    let h = mesh_norm_estimate(x, resolution).lower_bound;
    Ok(cast::<T>(2.0) * h / sep)
}

/// Separation test delta_{X_N} >= c / N^d.
pub fn well_separated<T: Scalar>(x: &PointSet<T>, c: T) -> Result<bool> {
    let sep = separation_distance(x)?;
    let n = cast_usize::<T>(x.len());
    let threshold = c / n.powi(x.dim().value() as i32);
    Ok(sep >= threshold)
}

/// N i.i.d. uniform points on S^d: normalized Gaussian vectors from a
/// seeded ChaCha stream. Deterministic per seed.
pub fn random_uniform<T: Scalar>(d: SphereDim, n: usize, seed: u64) -> PointSet<T> {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ambient = d.ambient();
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let coords: Vec<f64> = (0..ambient)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let norm: f64 = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        points.push(DVector::from_iterator(
            ambient,
            coords.iter().map(|&c| cast::<T>(c / norm)),
        ));
    }
    PointSet::new(d, points).expect("normalized Gaussian points are unit vectors")
}

/// The octahedron {+-e_1, +-e_2, +-e_3} on S^2 (a spherical 3-design).
pub fn octahedron<T: Scalar>() -> PointSet<T> {
    cross_polytope(SphereDim::new(2).unwrap())
}

/// The cross-polytope {+-e_i} on S^d (a spherical 3-design for every d).
pub fn cross_polytope<T: Scalar>(d: SphereDim) -> PointSet<T> {
    let ambient = d.ambient();
    let mut points = Vec::with_capacity(2 * ambient);
    for i in 0..ambient {
        for sign in [T::one(), -T::one()] {
            let mut v = DVector::zeros(ambient);
            v[i] = sign;
            points.push(v);
        }
    }
    PointSet::new(d, points).unwrap()
}

/// Regular tetrahedron on S^2 (a spherical 2-design).
pub fn tetrahedron<T: Scalar>() -> PointSet<T> {
    let s = 1.0 / 3.0f64.sqrt();
    let rows: Vec<Vec<T>> = [
        [s, s, s],
        [s, -s, -s],
        [-s, s, -s],
        [-s, -s, s],
    ]
    .iter()
    .map(|r| r.iter().map(|&c| cast::<T>(c)).collect())
    .collect();
    PointSet::from_coords(SphereDim::new(2).unwrap(), &rows).unwrap()
}

/// Regular icosahedron on S^2 (a spherical 5-design).
pub fn icosahedron<T: Scalar>() -> PointSet<T> {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let norm = (1.0 + phi * phi).sqrt();
    let a = 1.0 / norm;
    let b = phi / norm;
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(12);
    for &s1 in &[1.0, -1.0] {
        for &s2 in &[1.0, -1.0] {
            rows.push(vec![T::zero(), cast::<T>(s1 * a), cast::<T>(s2 * b)]);
            rows.push(vec![cast::<T>(s1 * a), cast::<T>(s2 * b), T::zero()]);
            rows.push(vec![cast::<T>(s2 * b), T::zero(), cast::<T>(s1 * a)]);
        }
    }
    PointSet::from_coords(SphereDim::new(2).unwrap(), &rows).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn s2() -> SphereDim {
        SphereDim::new(2).unwrap()
    }

    fn e(i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(3);
        v[i] = 1.0;
        v
    }

    #[test]
    fn constructor_normalizes_and_rejects() {
        let slightly_off = DVector::from_column_slice(&[1.0 + 5e-9, 0.0, 0.0]);
        let ps = PointSet::new(s2(), vec![slightly_off]).unwrap();
        assert_abs_diff_eq!(ps.point(0).norm(), 1.0, epsilon = 1e-12);

        let bad = DVector::from_column_slice(&[1.1, 0.0, 0.0]);
        assert!(matches!(
            PointSet::new(s2(), vec![bad]),
            Err(Error::NotOnSphere { index: 0, .. })
        ));

        let wrong_dim = DVector::from_column_slice(&[1.0, 0.0]);
        assert!(matches!(
            PointSet::new(s2(), vec![wrong_dim]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn geodesic_basics() {
        let x = e(0);
        assert_eq!(geodesic_distance(&x, &x).unwrap(), 0.0);
        assert_abs_diff_eq!(geodesic_distance(&x, &(-&x)).unwrap(), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(
            geodesic_distance(&e(0), &e(1)).unwrap(),
            PI / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn separation_cases() {
        let pair = PointSet::new(s2(), vec![e(0), -e(0)]).unwrap();
        assert_abs_diff_eq!(separation_distance(&pair).unwrap(), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(
            separation_distance(&octahedron::<f64>()).unwrap(),
            PI / 2.0,
            epsilon = 1e-15
        );
        let dup = PointSet::new(s2(), vec![e(0), e(0)]).unwrap();
        assert_eq!(separation_distance(&dup).unwrap(), 0.0);
        let single = PointSet::new(s2(), vec![e(0)]).unwrap();
        assert!(separation_distance(&single).is_err());
    }

    #[test]
    fn mesh_norm_single_point() {
        let single = PointSet::new(s2(), vec![e(2)]).unwrap();
        let est = mesh_norm_estimate(&single, 2000);
        assert!(est.lower_bound <= PI + 1e-12);
        assert!(est.lower_bound > PI - 1e-3, "got {}", est.lower_bound);
    }

    #[test]
    fn mesh_norm_antipodal_pair() {
        let pair = PointSet::new(s2(), vec![e(2), -e(2)]).unwrap();
        let est = mesh_norm_estimate(&pair, 100_000);
        assert_abs_diff_eq!(est.lower_bound, PI / 2.0, epsilon = 0.01);
    }

    #[test]
    fn mesh_norm_octahedron() {
        let est = mesh_norm_estimate(&octahedron::<f64>(), 10_000);
        let exact = (1.0 / 3.0f64.sqrt()).acos();
        assert_abs_diff_eq!(est.lower_bound, exact, epsilon = 0.01);
        assert!(est.lower_bound <= exact + 1e-9, "must stay a lower bound");
    }

    #[test]
    fn mesh_ratio_cases() {
        let pair = PointSet::new(s2(), vec![e(2), -e(2)]).unwrap();
        assert_abs_diff_eq!(mesh_ratio(&pair, 100_000).unwrap(), 1.0, epsilon = 0.02);

        let exact = 2.0 * (1.0 / 3.0f64.sqrt()).acos() / (PI / 2.0);
        assert_abs_diff_eq!(
            mesh_ratio(&octahedron::<f64>(), 10_000).unwrap(),
            exact,
            epsilon = 0.02
        );

        // two points at angle theta: farthest point is opposite the midpoint
        let theta = 1.0f64;
        let q = DVector::from_column_slice(&[theta.cos(), theta.sin(), 0.0]);
        let pair = PointSet::new(s2(), vec![e(0), q]).unwrap();
        let expected = 2.0 * (PI - theta / 2.0) / theta;
        assert_abs_diff_eq!(
            mesh_ratio(&pair, 100_000).unwrap(),
            expected,
            epsilon = 0.02
        );

        let dup = PointSet::new(s2(), vec![e(0), e(0)]).unwrap();
        assert!(matches!(
            mesh_ratio(&dup, 100),
            Err(Error::DegenerateSeparation)
        ));
    }

    #[test]
    fn well_separated_cases() {
        assert!(well_separated(&octahedron::<f64>(), 1.0).unwrap());
        let pair = PointSet::new(s2(), vec![e(0), -e(0)]).unwrap();
        assert!(well_separated(&pair, 4.0).unwrap());
        let dup = PointSet::new(s2(), vec![e(0), e(0)]).unwrap();
        assert!(!well_separated(&dup, 1e-9).unwrap());
    }

    #[test]
    fn random_uniform_deterministic_and_unit() {
        let a = random_uniform::<f64>(s2(), 50, 42);
        let b = random_uniform::<f64>(s2(), 50, 42);
        assert_eq!(a, b);
        for p in a.points() {
            assert_abs_diff_eq!(p.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn random_uniform_mean_is_small() {
        let x = random_uniform::<f64>(s2(), 10_000, 7);
        let mut mean = DVector::<f64>::zeros(3);
        for p in x.points() {
            mean += p;
        }
        mean /= 10_000.0;
        assert!(mean.norm() < 0.03, "mean norm {}", mean.norm());
    }

    #[test]
    fn mesh_norm_lower_bound_tightens() {
        // all resolutions stay below the exact value; finer grids get
        // within tighter tolerances
        let exact = (1.0 / 3.0f64.sqrt()).acos();
        let x = octahedron::<f64>();
        for (res, tol) in [(100usize, 0.05), (1_000, 0.02), (10_000, 0.01)] {
            let est = mesh_norm_estimate(&x, res).lower_bound;
            assert!(est <= exact + 1e-9, "res {res}: {est} exceeds exact");
            assert!(exact - est <= tol, "res {res}: {est} too far below {exact}");
        }
    }

    #[test]
    fn halton_candidates_are_unit_and_spread() {
        let d3 = SphereDim::new(3).unwrap();
        let pts = halton_sphere_points::<f64>(d3, 500);
        assert_eq!(pts.len(), 500);
        let mut mean = DVector::<f64>::zeros(4);
        for p in pts.points() {
            assert_abs_diff_eq!(p.norm(), 1.0, epsilon = 1e-12);
            mean += p;
        }
        mean /= 500.0;
        assert!(mean.norm() < 0.1, "mean norm {}", mean.norm());
    }

    fn random_rotation(seed: u64) -> nalgebra::DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = nalgebra::DMatrix::from_fn(3, 3, |_, _| StandardNormal.sample(&mut rng));
        let qr = g.qr();
        qr.q()
    }

    #[test]
    fn separation_rotation_invariant() {
        let x = random_uniform::<f64>(s2(), 20, 11);
        let q = random_rotation(5);
        let rotated: Vec<_> = x.points().iter().map(|p| &q * p).collect();
        let xr = PointSet::new(s2(), rotated).unwrap();
        assert_abs_diff_eq!(
            separation_distance(&x).unwrap(),
            separation_distance(&xr).unwrap(),
            epsilon = 1e-12
        );
    }

    proptest! {
        #[test]
        fn geodesic_symmetric_and_triangle(seed in 0u64..500) {
            let x = random_uniform::<f64>(s2(), 3, seed);
            let (a, b, c) = (x.point(0), x.point(1), x.point(2));
            let ab = geodesic_distance(a, b).unwrap();
            let ba = geodesic_distance(b, a).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
            let bc = geodesic_distance(b, c).unwrap();
            let ac = geodesic_distance(a, c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn well_separated_monotone_in_c(seed in 0u64..100, c in 0.0f64..2.0) {
            let x = random_uniform::<f64>(s2(), 8, seed);
            if well_separated(&x, c).unwrap() {
                prop_assert!(well_separated(&x, c * 0.5).unwrap());
            }
        }
    }
}
