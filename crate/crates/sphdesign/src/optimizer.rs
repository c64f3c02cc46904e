//! Riemannian minimization of A_{N,t} over the product of spheres,
//! Levenberg-Marquardt on the nonlinear residual C_t, and design
//! certification along the two logical routes:
//!
//!   variational: stationary point of A + fundamental system for P_{t+1}
//!   nonlinear:   fundamental system for P_t + D_{N,t} = 0
//!
//! The optimizer treats (S^d)^N extrinsically: Euclidean gradients are
//! projected to tangent spaces and steps are retracted by renormalization.

use crate::error::{Error, Result};
use crate::fundamental::{default_rank_tolerance, is_fundamental_system, RankReport};
use crate::geometry::{random_uniform, tangent_basis, PointSet};
use crate::kahan::KahanSum;
use crate::quantities::{a_quantity, c_vector, d_quantity};
use crate::scalar::{cast, cast_usize, max, min, Scalar};
use crate::special::{
    dgs_lower_bound, harmonic_dim, poly_space_dim, sphere_area, GegenbauerEvaluator, SphereDim,
};
use nalgebra::{DMatrix, DVector};

/// A per-point tangent vector field on (S^d)^N.
#[derive(Debug, Clone)]
pub struct TangentField<T: Scalar> {
    vectors: Vec<DVector<T>>,
}

impl<T: Scalar> TangentField<T> {
    pub fn vectors(&self) -> &[DVector<T>] {
        &self.vectors
    }

    /// max_i ||g_i||_2: the grad norm used for stationarity tests.
    pub fn inf_norm(&self) -> T {
        self.vectors
            .iter()
            .fold(T::zero(), |acc, v| max(acc, v.norm()))
    }

    /// Sum of squared entries over all points.
    pub fn norm_sq(&self) -> T {
        self.vectors
            .iter()
            .fold(T::zero(), |acc, v| acc + v.norm_squared())
    }
}

/// Degree weights M(d, l) for l = 1..=t (degree 0 contributes nothing to
/// A or its gradient).
fn degree_weights<T: Scalar>(d: SphereDim, t: usize) -> Result<Vec<T>> {
    (0..=t)
        .map(|l| {
            if l == 0 {
                Ok(T::zero())
            } else {
                Ok(cast::<T>(harmonic_dim(d, l)? as f64))
            }
        })
        .collect()
}

/// Magnitude of the kernel at dot = 1: sum of the degree weights, i.e.
/// dim(P_t) - 1. Sets the absolute rounding-noise scale of A.
fn ev_kernel_scale<T: Scalar>(d: SphereDim, t: usize) -> Result<T> {
    Ok(cast::<T>(poly_space_dim(d, t)? as f64 - 1.0))
}

/// A_{N,t} and its Riemannian gradient in one pass over the point pairs.
fn a_and_gradient<T: Scalar>(x: &PointSet<T>, t: usize) -> Result<(T, TangentField<T>)> {
    let d = x.dim();
    let n = x.len();
    let weights = degree_weights::<T>(d, t)?;
    let ev = GegenbauerEvaluator::new(d, t);
    let nf = cast_usize::<T>(n);
    let inv_n2 = T::one() / (nf * nf);

    let mut value = KahanSum::new();
    let mut grads: Vec<DVector<T>> = vec![DVector::zeros(d.ambient()); n];
    // diagonal terms of the value: kernel at dot = 1
    let diag = ev.weighted_sum(&weights, T::one());
    for _ in 0..n {
        value.add(diag);
    }
    for i in 0..n {
        for j in i + 1..n {
            let dot = x.point(i).dot(x.point(j));
            let k = ev.weighted_sum(&weights, dot);
            value.add(k + k);
            let kd = ev.weighted_deriv_sum(&weights, dot);
            grads[i].axpy(kd, x.point(j), T::one());
            grads[j].axpy(kd, x.point(i), T::one());
        }
    }
    let two = cast::<T>(2.0);
    let vectors = grads
        .into_iter()
        .enumerate()
        .map(|(i, mut g)| {
            g *= two * inv_n2;
            // project to the tangent space at x_i
            let xi = x.point(i);
            let r = g.dot(xi);
            g.axpy(-r, xi, T::one());
            g
        })
        .collect();
    Ok((inv_n2 * value.value(), TangentField { vectors }))
}

/// Riemannian gradient of A_{N,t}: the Euclidean gradient
/// (2/N^2) sum_l M(d,l) sum_j P_l'(x_i . x_j) x_j projected to the tangent
/// space at each x_i.
pub fn gradient_a<T: Scalar>(x: &PointSet<T>, t: usize) -> Result<TangentField<T>> {
    assert!(t >= 1);
    Ok(a_and_gradient(x, t)?.1)
}

/// Options for [`minimize_a`].
#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions<T: Scalar> {
    pub max_iter: usize,
    /// Stop when the gradient inf-norm drops below this.
    pub grad_tol: T,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: T,
    /// Backtracking factor.
    pub backtrack: T,
    /// First trial step of the first iteration.
    pub initial_step: T,
}

impl<T: Scalar> Default for MinimizeOptions<T> {
    fn default() -> Self {
        MinimizeOptions {
            max_iter: 20_000,
            grad_tol: cast::<T>(1e-10),
            armijo_c: cast::<T>(1e-4),
            backtrack: cast::<T>(0.5),
            initial_step: T::one(),
        }
    }
}

/// Result of an optimization run ([`minimize_a`] or [`solve_c`]).
///
/// For `minimize_a` the trace records (A, gradient inf-norm) pairs; for
/// `solve_c` it records (D, ||C||) pairs. In both cases the first trace
/// component is nonincreasing up to the rounding-noise floor of A.
#[derive(Debug, Clone)]
pub struct OptimizeResult<T: Scalar> {
    pub final_points: PointSet<T>,
    pub a_final: T,
    pub grad_norm_final: T,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<(T, T)>,
}

/// Nudge near-coincident points apart: whenever a pairwise dot exceeds
/// 1 - 1e-14, the later point is moved by a 1e-7 tangent perturbation.
/// Coincident points make the Gram rank-deficient and stall certification.
fn decollide<T: Scalar>(points: &mut [DVector<T>]) {
    let threshold = T::one() - cast::<T>(1e-14);
    let step = cast::<T>(1e-7);
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            if points[i].dot(&points[j]) > threshold {
                let basis = tangent_basis(&points[j]);
                let dir = &basis[0];
                let p = (&points[j] + dir * step).normalize();
                points[j] = p;
            }
        }
    }
}

fn retract<T: Scalar>(x: &PointSet<T>, dir: &[DVector<T>], step: T) -> PointSet<T> {
    let points = x
        .points()
        .iter()
        .zip(dir)
        .map(|(p, v)| (p + v * step).normalize())
        .collect();
    x.with_points_unchecked(points)
}

/// Projected-gradient descent with Armijo backtracking on A_{N,t};
/// retraction is renormalization. The initial trial step of each iteration
/// is a Barzilai-Borwein estimate, backtracked until sufficient decrease,
/// so the recorded A-trace is nonincreasing.
pub fn minimize_a<T: Scalar>(
    x0: &PointSet<T>,
    t: usize,
    opts: &MinimizeOptions<T>,
) -> Result<OptimizeResult<T>> {
    assert!(t >= 1);
    let mut points = x0.points().to_vec();
    decollide(&mut points);
    let mut x = x0.with_points_unchecked(points);

    let (mut a, mut grad) = a_and_gradient(&x, t)?;
    if !a.is_finite() {
        return Err(Error::NonFinite {
            context: "initial A value".into(),
        });
    }
    let mut trace = Vec::new();
    let mut step = opts.initial_step;
    let mut iterations = 0usize;
    let mut converged = grad.inf_norm() < opts.grad_tol;
    trace.push((a, grad.inf_norm()));

    let step_floor = cast::<T>(1e-16);
    for iter in 0..opts.max_iter {
        let gnorm = grad.inf_norm();
        if gnorm < opts.grad_tol {
            converged = true;
            break;
        }
        iterations = iter + 1;
        let gsq = grad.norm_sq();
        let descent: Vec<DVector<T>> = grad.vectors().iter().map(|g| -g).collect();

        // Near the minimum A bottoms out at its rounding-noise floor while
        // the gradient (a sum of O(1) terms) stays accurate much further;
        // below that floor a step is accepted on gradient-norm decrease
        // instead of sufficient decrease in A.
        let noise_floor = T::eps() * cast_usize::<T>(x.len()) * ev_kernel_scale::<T>(x.dim(), t)?;

        // backtracking line search
        let mut alpha = step;
        let mut accepted = None;
        while alpha > step_floor {
            let cand = retract(&x, &descent, alpha);
            let (a_new, grad_new) = a_and_gradient(&cand, t)?;
            if !a_new.is_finite() {
                return Err(Error::NonFinite {
                    context: "A value during line search".into(),
                });
            }
            let armijo = a_new <= a - opts.armijo_c * alpha * gsq;
            let noise_limited = a_new <= a + noise_floor
                && grad_new.inf_norm() < gnorm * cast::<T>(0.9);
            if armijo || noise_limited {
                accepted = Some((cand, a_new, grad_new, alpha));
                break;
            }
            alpha *= opts.backtrack;
        }
        let Some((x_new, a_new, grad_new, used_alpha)) = accepted else {
            // no decrease possible at representable step sizes
            break;
        };

        // Barzilai-Borwein estimate for the next trial step
        let mut s_dot_s = T::zero();
        let mut s_dot_y = T::zero();
        for ((p_new, p_old), (g_new, g_old)) in x_new
            .points()
            .iter()
            .zip(x.points())
            .zip(grad_new.vectors().iter().zip(grad.vectors()))
        {
            let s = p_new - p_old;
            let y = g_new - g_old;
            s_dot_s += s.norm_squared();
            s_dot_y += s.dot(&y);
        }
        step = if s_dot_y > T::zero() {
            min(max(s_dot_s / s_dot_y, cast::<T>(1e-12)), cast::<T>(1e4))
        } else {
            used_alpha * cast::<T>(2.0)
        };

        x = x_new;
        a = a_new;
        grad = grad_new;
        trace.push((a, grad.inf_norm()));

        let mut pts = x.points().to_vec();
        decollide(&mut pts);
        x = x.with_points_unchecked(pts);
    }
    if grad.inf_norm() < opts.grad_tol {
        converged = true;
    }

    Ok(OptimizeResult {
        a_final: a,
        grad_norm_final: grad.inf_norm(),
        final_points: x,
        iterations,
        converged,
        trace,
    })
}

/// Options for [`solve_c`].
#[derive(Debug, Clone, Copy)]
pub struct SolveCOptions<T: Scalar> {
    pub max_iter: usize,
    /// Stop once D_{N,t} falls below this.
    pub target_d: T,
    /// Initial Levenberg-Marquardt damping.
    pub initial_damping: T,
}

impl<T: Scalar> Default for SolveCOptions<T> {
    fn default() -> Self {
        SolveCOptions {
            max_iter: 200,
            target_d: cast::<T>(1e-26),
            initial_damping: cast::<T>(1e-3),
        }
    }
}

/// Kernel weights (M(d,l)/omega) for the Gram row sums, degree 0 included.
fn full_kernel_weights<T: Scalar>(d: SphereDim, t: usize) -> Result<Vec<T>> {
    let omega: T = sphere_area(d);
    (0..=t)
        .map(|l| Ok(cast::<T>(harmonic_dim(d, l)? as f64) / omega))
        .collect()
}

/// Analytic Jacobian of C_t in tangent coordinates. Row i, column (m, s):
/// derivative of (G e)_1 - (G e)_{i+1} along the s-th tangent basis vector
/// at point m.
fn c_jacobian<T: Scalar>(
    x: &PointSet<T>,
    t: usize,
    bases: &[Vec<DVector<T>>],
) -> Result<DMatrix<T>> {
    let d = x.dim();
    let n = x.len();
    let dd = d.value() as usize;
    let weights = full_kernel_weights::<T>(d, t)?;
    let ev = GegenbauerEvaluator::new(d, t);

    // kd[(k, j)] = K'(x_k . x_j)
    let mut kd = DMatrix::zeros(n, n);
    for k in 0..n {
        for j in k + 1..n {
            let v = ev.weighted_deriv_sum(&weights, x.point(k).dot(x.point(j)));
            kd[(k, j)] = v;
            kd[(j, k)] = v;
        }
    }

    // dg[(k, m*dd + s)] = d (G e)_k / d (point m, tangent direction s)
    let mut dg = DMatrix::zeros(n, n * dd);
    for k in 0..n {
        for m in 0..n {
            for (s, b) in bases[m].iter().enumerate() {
                let col = m * dd + s;
                if m == k {
                    let mut acc = T::zero();
                    for j in 0..n {
                        if j != k {
                            acc += kd[(k, j)] * x.point(j).dot(b);
                        }
                    }
                    dg[(k, col)] = acc;
                } else {
                    dg[(k, col)] = kd[(k, m)] * x.point(k).dot(b);
                }
            }
        }
    }

    let mut jac = DMatrix::zeros(n - 1, n * dd);
    for i in 0..n - 1 {
        for col in 0..n * dd {
            jac[(i, col)] = dg[(0, col)] - dg[(i + 1, col)];
        }
    }
    Ok(jac)
}

/// Gauss-Newton / Levenberg-Marquardt least squares on C_t(X) = 0 over the
/// product manifold, with the analytic kernel-derivative Jacobian in
/// tangent coordinates and min-norm damped steps
/// delta = J^T (J J^T + lambda I)^{-1} (-C). Progress is measured by
/// D_{N,t}; the first point stays the pivot of E throughout.
pub fn solve_c<T: Scalar>(
    x0: &PointSet<T>,
    t: usize,
    opts: &SolveCOptions<T>,
) -> Result<OptimizeResult<T>> {
    assert!(t >= 1);
    if x0.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            actual: x0.len(),
        });
    }
    let n = x0.len();
    let d = x0.dim();
    let dd = d.value() as usize;
    let omega: T = sphere_area(d);
    let nf = cast_usize::<T>(n);
    let d_scale = omega * omega / (nf * nf);

    let mut x = x0.clone();
    let mut c = c_vector(&x, t)?;
    let mut cn2 = c.norm_squared();
    if !cn2.is_finite() {
        return Err(Error::NonFinite {
            context: "initial C residual".into(),
        });
    }
    let mut damping = opts.initial_damping;
    let mut trace = vec![(d_scale * cn2, cn2.sqrt())];
    let mut iterations = 0usize;
    let mut converged = d_scale * cn2 < opts.target_d;

    'outer: for iter in 0..opts.max_iter {
        if d_scale * cn2 < opts.target_d {
            converged = true;
            break;
        }
        iterations = iter + 1;
        let bases: Vec<Vec<DVector<T>>> = x.points().iter().map(tangent_basis).collect();
        let jac = c_jacobian(&x, t, &bases)?;
        let jjt = &jac * jac.transpose();

        let mut improved = false;
        for _ in 0..25 {
            let mut damped = jjt.clone();
            for i in 0..n - 1 {
                damped[(i, i)] += damping;
            }
            let Some(chol) = damped.cholesky() else {
                damping *= cast::<T>(4.0);
                continue;
            };
            let y = chol.solve(&(-&c));
            let delta = jac.transpose() * y;
            let points: Vec<DVector<T>> = x
                .points()
                .iter()
                .enumerate()
                .map(|(m, p)| {
                    let mut q = p.clone();
                    for (s, b) in bases[m].iter().enumerate() {
                        q.axpy(delta[m * dd + s], b, T::one());
                    }
                    q.normalize()
                })
                .collect();
            let cand = x.with_points_unchecked(points);
            let c_new = c_vector(&cand, t)?;
            let cn2_new = c_new.norm_squared();
            if !cn2_new.is_finite() {
                return Err(Error::NonFinite {
                    context: "C residual during LM step".into(),
                });
            }
            if cn2_new < cn2 {
                x = cand;
                c = c_new;
                cn2 = cn2_new;
                damping = max(damping / cast::<T>(3.0), cast::<T>(1e-14));
                trace.push((d_scale * cn2, cn2.sqrt()));
                improved = true;
                break;
            }
            damping *= cast::<T>(4.0);
            if damping > cast::<T>(1e12) {
                break 'outer;
            }
        }
        if !improved {
            break;
        }
    }
    if d_scale * cn2 < opts.target_d {
        converged = true;
    }

    let a_final = a_quantity(&x, t)?;
    let grad_norm_final = gradient_a(&x, t)?.inf_norm();
    Ok(OptimizeResult {
        final_points: x,
        a_final,
        grad_norm_final,
        iterations,
        converged,
        trace,
    })
}

/// Tolerances for certification.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances<T: Scalar> {
    /// Stationarity: gradient inf-norm bound.
    pub tol_stat: T,
    /// A_{N,t} zero test (absolute; A is scale-fixed by its definition).
    pub tol_a: T,
    /// D_{N,t} zero test (absolute).
    pub tol_d: T,
    /// Numerical-rank relative tolerance; None uses the N-scaled default.
    pub rank_tol: Option<T>,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            tol_stat: cast::<T>(1e-10),
            tol_a: cast::<T>(1e-12),
            tol_d: cast::<T>(1e-12),
            rank_tol: None,
        }
    }
}

/// Certification verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    CertifiedDesign,
    StationaryButUncertified,
    NotDesign,
}

/// Which theorem route certified the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Stationary point of A + fundamental for P_{t+1}.
    Variational,
    /// Fundamental for P_t + D = 0.
    Nonlinear,
}

/// Evidence-carrying certification outcome.
#[derive(Debug, Clone)]
pub struct CertificationReport<T: Scalar> {
    pub verdict: Verdict,
    pub route: Option<Route>,
    pub a_value: T,
    pub d_value: T,
    pub grad_norm: T,
    pub rank_t: RankReport<T>,
    pub rank_t_plus_1: Option<RankReport<T>>,
    pub tolerances: Tolerances<T>,
    /// Set when the variational hypotheses could not separate the theorem's
    /// two branches (rank test at t+1 failed at a stationary point).
    pub note: Option<String>,
}

/// Certify a configuration as a spherical t-design.
///
/// Requires N >= dim(P_t). With N >= dim(P_{t+1}) the variational route is
/// tried first (stationarity + fundamental for P_{t+1} + A below
/// tolerance); the nonlinear route (fundamental for P_t + D below
/// tolerance) serves as the fallback and as the only route for
/// dim(P_t) <= N < dim(P_{t+1}).
pub fn certify<T: Scalar>(
    x: &PointSet<T>,
    t: usize,
    tolerances: &Tolerances<T>,
) -> Result<CertificationReport<T>> {
    assert!(t >= 1);
    let n = x.len();
    let dim_pt = poly_space_dim(x.dim(), t)? as usize;
    if n < dim_pt {
        return Err(Error::InsufficientPoints { n, dim_pt });
    }
    let dim_pt1 = poly_space_dim(x.dim(), t + 1)? as usize;
    let rank_tol = tolerances
        .rank_tol
        .unwrap_or_else(|| default_rank_tolerance::<T>(n));

    let a_value = a_quantity(x, t)?;
    let d_value = d_quantity(x, t)?;
    let grad_norm = gradient_a(x, t)?.inf_norm();
    let rank_t = is_fundamental_system(x, t, rank_tol)?;
    let rank_t_plus_1 = if n >= dim_pt1 {
        Some(is_fundamental_system(x, t + 1, rank_tol)?)
    } else {
        None
    };

    let stationary = grad_norm < tolerances.tol_stat;
    let fundamental_t1 = rank_t_plus_1.as_ref().is_some_and(|r| r.is_fundamental);
    let fundamentality_established = rank_t.is_fundamental || fundamental_t1;

    let mut note = None;
    let (verdict, route) = if stationary && fundamental_t1 && a_value < tolerances.tol_a {
        (Verdict::CertifiedDesign, Some(Route::Variational))
    } else if rank_t.is_fundamental && d_value < tolerances.tol_d {
        (Verdict::CertifiedDesign, Some(Route::Nonlinear))
    } else if a_value >= tolerances.tol_a && fundamentality_established {
        (Verdict::NotDesign, None)
    } else {
        if stationary && rank_t_plus_1.as_ref().is_some_and(|r| !r.is_fundamental) {
            note = Some(
                "stationary point, but X is not fundamental for P_{t+1}: \
                 the alternative branch (a nonzero polynomial vanishing on X) \
                 is possible"
                    .into(),
            );
        }
        (Verdict::StationaryButUncertified, None)
    };

    Ok(CertificationReport {
        verdict,
        route,
        a_value,
        d_value,
        grad_norm,
        rank_t,
        rank_t_plus_1,
        tolerances: *tolerances,
        note,
    })
}

/// Options for the end-to-end construction pipeline.
#[derive(Debug, Clone, Copy)]
pub struct ConstructOptions<T: Scalar> {
    pub n: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub grad_tol: T,
    /// Number of seeded restarts when a stationary non-design is reached.
    pub restarts: usize,
    pub tolerances: Tolerances<T>,
    /// Polish the gradient-descent output by Levenberg-Marquardt on C.
    pub polish: bool,
}

impl<T: Scalar> ConstructOptions<T> {
    pub fn new(n: usize, seed: u64) -> Self {
        ConstructOptions {
            n,
            seed,
            max_iter: 20_000,
            grad_tol: cast::<T>(1e-10),
            restarts: 5,
            tolerances: Tolerances::default(),
            polish: true,
        }
    }
}

/// Outcome of [`construct`].
#[derive(Debug, Clone)]
pub struct ConstructOutcome<T: Scalar> {
    pub result: OptimizeResult<T>,
    /// None when N < dim(P_t) (no certification route exists).
    pub certification: Option<CertificationReport<T>>,
    pub attempts: usize,
    /// N is below the Delsarte-Goethals-Seidel bound; no design can exist.
    pub below_dgs_bound: bool,
}

impl<T: Scalar> ConstructOutcome<T> {
    pub fn certified(&self) -> bool {
        self.certification
            .as_ref()
            .is_some_and(|c| c.verdict == Verdict::CertifiedDesign)
    }
}

/// Random start, gradient descent on A, optional LM polish on C, then
/// certification; restarts with fresh seeds until certified or exhausted.
pub fn construct<T: Scalar>(
    d: SphereDim,
    t: usize,
    opts: &ConstructOptions<T>,
) -> Result<ConstructOutcome<T>> {
    assert!(t >= 1);
    let below_dgs_bound = (opts.n as u64) < dgs_lower_bound(d, t)?;
    let attempts_max = opts.restarts.max(1);
    let mut best: Option<ConstructOutcome<T>> = None;

    for attempt in 0..attempts_max {
        let x0 = random_uniform::<T>(d, opts.n, opts.seed.wrapping_add(attempt as u64));
        let min_opts = MinimizeOptions {
            max_iter: opts.max_iter,
            grad_tol: opts.grad_tol,
            ..MinimizeOptions::default()
        };
        let mut result = minimize_a(&x0, t, &min_opts)?;

        if opts.polish && opts.n >= 2 {
            let d_before = d_quantity(&result.final_points, t)?;
            let polished = solve_c(&result.final_points, t, &SolveCOptions::default())?;
            let d_after = d_quantity(&polished.final_points, t)?;
            // the polish targets D; keep it whenever D improved, even when
            // a_final only moved within its noise floor
            if d_after < d_before || polished.a_final <= result.a_final {
                result = polished;
            }
        }

        let certification = match certify(&result.final_points, t, &opts.tolerances) {
            Ok(report) => Some(report),
            Err(Error::InsufficientPoints { .. }) => None,
            Err(e) => return Err(e),
        };
        let outcome = ConstructOutcome {
            result,
            certification,
            attempts: attempt + 1,
            below_dgs_bound,
        };
        if outcome.certified() {
            return Ok(outcome);
        }
        let better = match &best {
            None => true,
            Some(b) => outcome.result.a_final < b.result.a_final,
        };
        if better {
            best = Some(outcome);
        }
    }
    Ok(best.expect("at least one attempt runs"))
}
