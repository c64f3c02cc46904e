//! The characterizing quantities of a configuration: the kernel-built Gram
//! matrix G_t, the squared Weyl residual r^T r, A_{N,t}, the nonlinear
//! residual C_t and D_{N,t}, and the a-priori upper bound on D.
//!
//! Everything is computed kernel-side through the addition theorem
//!
//!   sum_k Y_{l,k}(x) Y_{l,k}(y) = (M(d,l)/omega_d) P_l^{(d+1)}(x . y)
//!
//! so no explicit harmonic basis is ever formed and the same code serves
//! every d.

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::kahan::KahanSum;
use crate::scalar::{cast, cast_usize, Scalar};
use crate::special::{harmonic_dim, poly_space_dim, sphere_area, GegenbauerEvaluator, SphereDim};
use nalgebra::{DMatrix, DVector};

/// Kernel weights M(d,l)/omega_d for l = 0..=t, with degree 0 optionally
/// dropped (the Weyl residual ignores the constant).
pub(crate) fn kernel_weights<T: Scalar>(
    d: SphereDim,
    t: usize,
    include_constant: bool,
) -> Result<Vec<T>> {
    let omega: T = sphere_area(d);
    (0..=t)
        .map(|l| {
            if l == 0 && !include_constant {
                return Ok(T::zero());
            }
            Ok(cast::<T>(harmonic_dim(d, l)? as f64) / omega)
        })
        .collect()
}

/// N x N Gram matrix G_t = Y_t^T Y_t, built from the addition-theorem
/// kernel: entry (i,j) = (1/omega_d) sum_l M(d,l) P_l(x_i . x_j).
#[derive(Debug, Clone)]
pub struct GramMatrix<T: Scalar> {
    pub t: usize,
    pub d: SphereDim,
    pub entries: DMatrix<T>,
}

pub fn gram<T: Scalar>(x: &PointSet<T>, t: usize) -> Result<GramMatrix<T>> {
    let d = x.dim();
    let weights = kernel_weights::<T>(d, t, true)?;
    let ev = GegenbauerEvaluator::new(d, t);
    let n = x.len();
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = ev.weighted_sum(&weights, x.point(i).dot(x.point(j)));
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(GramMatrix { t, d, entries })
}

/// Squared Weyl residual r(X)^T r(X), computed kernel-side as
/// sum_{l>=1} (M(d,l)/omega_d) sum_{i,j} P_l(x_i . x_j) with compensated
/// accumulation over the pair sum.
pub fn weyl_residual_sq<T: Scalar>(x: &PointSet<T>, t: usize) -> Result<T> {
    assert!(t >= 1, "Weyl residual requires t >= 1");
    let d = x.dim();
    let weights = kernel_weights::<T>(d, t, false)?;
    let ev = GegenbauerEvaluator::new(d, t);
    let n = x.len();
    let mut acc = KahanSum::new();
    for i in 0..n {
        // diagonal term once, off-diagonal twice by symmetry
        acc.add(ev.weighted_sum(&weights, T::one()));
        for j in i + 1..n {
            let v = ev.weighted_sum(&weights, x.point(i).dot(x.point(j)));
            acc.add(v + v);
        }
    }
    Ok(acc.value())
}

/// A_{N,t}(X) = (omega_d / N^2) r(X)^T r(X). Zero exactly at spherical
/// t-designs.
pub fn a_quantity<T: Scalar>(x: &PointSet<T>, t: usize) -> Result<T> {
    let omega: T = sphere_area(x.dim());
    let n = cast_usize::<T>(x.len());
    Ok(omega / (n * n) * weyl_residual_sq(x, t)?)
}

/// Row sums G_t e of the kernel Gram matrix, without forming the matrix.
fn gram_row_sums<T: Scalar>(x: &PointSet<T>, t: usize) -> Result<Vec<T>> {
    let d = x.dim();
    let weights = kernel_weights::<T>(d, t, true)?;
    let ev = GegenbauerEvaluator::new(d, t);
    let n = x.len();
    let mut sums = vec![KahanSum::new(); n];
    for i in 0..n {
        sums[i].add(ev.weighted_sum(&weights, T::one()));
        for j in i + 1..n {
            let v = ev.weighted_sum(&weights, x.point(i).dot(x.point(j)));
            sums[i].add(v);
            sums[j].add(v);
        }
    }
    Ok(sums.iter().map(|k| k.value()).collect())
}

/// C_t(X) = E G_t e with E = [e, -I_{N-1}]: entry i is
/// (G_t e)_1 - (G_t e)_{i+1}. The pivot is the first point of the set.
pub fn c_vector<T: Scalar>(x: &PointSet<T>, t: usize) -> Result<DVector<T>> {
    assert!(t >= 1, "C_t requires t >= 1");
    if x.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            actual: x.len(),
        });
    }
    let sums = gram_row_sums(x, t)?;
    let pivot = sums[0];
    Ok(DVector::from_iterator(
        x.len() - 1,
        sums[1..].iter().map(|&s| pivot - s),
    ))
}

/// D_{N,t}(X) = (omega_d^2 / N^2) ||C_t(X)||^2.
pub fn d_quantity<T: Scalar>(x: &PointSet<T>, t: usize) -> Result<T> {
    let c = c_vector(x, t)?;
    let omega: T = sphere_area(x.dim());
    let n = cast_usize::<T>(x.len());
    let mut acc = KahanSum::new();
    for v in c.iter() {
        acc.add(*v * *v);
    }
    Ok(omega * omega / (n * n) * acc.value())
}

/// Upper bound 4 (N-1) M(d+1,t)^2 on D_{N,t}.
pub fn d_upper_bound<T: Scalar>(n: usize, d: SphereDim, t: usize) -> Result<T> {
    assert!(n >= 2);
    let m = poly_space_dim(d, t)? as f64;
    Ok(cast::<T>(4.0 * (n as f64 - 1.0) * m * m))
}

/// Bundle of the characterizing quantities for one (X, t).
#[derive(Debug, Clone, Copy)]
pub struct DesignQuantities<T: Scalar> {
    pub a_value: T,
    pub d_value: Option<T>,
    pub c_norm_inf: Option<T>,
    pub weyl_residual_sq: T,
}

/// Compute all quantities at once. D and the C sup-norm need N >= 2 and
/// are omitted for a single point.
pub fn design_quantities<T: Scalar>(x: &PointSet<T>, t: usize) -> Result<DesignQuantities<T>> {
    let rsq = weyl_residual_sq(x, t)?;
    let omega: T = sphere_area(x.dim());
    let n = cast_usize::<T>(x.len());
    let a_value = omega / (n * n) * rsq;
    let (d_value, c_norm_inf) = if x.len() >= 2 {
        let c = c_vector(x, t)?;
        let mut acc = KahanSum::new();
        let mut sup = T::zero();
        for v in c.iter() {
            acc.add(*v * *v);
            if v.abs() > sup {
                sup = v.abs();
            }
        }
        (
            Some(omega * omega / (n * n) * acc.value()),
            Some(sup),
        )
    } else {
        (None, None)
    };
    Ok(DesignQuantities {
        a_value,
        d_value,
        c_norm_inf,
        weyl_residual_sq: rsq,
    })
}
