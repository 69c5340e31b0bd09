//! Rank reduction for relaxed bound maximizers.
//!
//! Given a PSD `W = VVᴴ` of rank `r`, any Hermitian `D` with
//! `Tr(D VᴴHV) = Tr(D VᴴAV) = Tr(D VᴴV) = 0` yields
//! `W' = V(I − D/λ)Vᴴ`, where `λ` is the eigenvalue of `D` of largest
//! magnitude. `W'` is PSD, has rank at most `r − 1`, and has the same
//! `Tr(HW)`, `Tr(AW)` and `Tr(W)`, so objective and feasibility are unchanged.
//! Such a `D` exists while `r² > 3`, so repeating ends at rank one.

use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

/// Eigenvalue threshold, relative to the largest, for the numerical rank.
pub const RANK_TOL: f64 = 1e-9;

/// Null-direction acceptance threshold when the system is not underdetermined.
const DIRECTION_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ReductionStep {
    /// Factor with `W = VVᴴ`, `K × r`.
    pub v: CMat,
    pub d: CMat,
    pub lambda_max: f64,
}

impl ReductionStep {
    pub fn rank(&self) -> usize {
        self.v.ncols()
    }

    pub fn apply(&self) -> CMat {
        let r = self.rank();
        let inner = CMat::identity(r, r) - &self.d * c(1.0 / self.lambda_max, 0.0);
        linalg::hermitian_part(&(&self.v * inner * self.v.adjoint()))
    }

    /// The three trace functionals of `D`, as `(H, A, I)` residuals.
    pub fn residuals(&self, h: &CMat, a: &CMat) -> [f64; 3] {
        trace_residuals(&self.v, &self.d, h, a)
    }
}

fn trace_residuals(v: &CMat, d: &CMat, h: &CMat, a: &CMat) -> [f64; 3] {
    let vh = v.adjoint();
    [
        linalg::trace_product_re(d, &(&vh * h * v)),
        linalg::trace_product_re(d, &(&vh * a * v)),
        linalg::trace_product_re(d, &(&vh * v)),
    ]
}

/// `V = U diag(√λ)` over the eigenpairs above the rank threshold.
pub fn factor(w: &CMat) -> CMat {
    let (vals, vecs) = linalg::eigh(w);
    let top = vals.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = if top > 0.0 {
        (0..vals.len())
            .filter(|&k| vals[k] > RANK_TOL * top)
            .collect()
    } else {
        Vec::new()
    };
    let mut v = CMat::zeros(w.nrows(), keep.len());
    for (dst, &k) in keep.iter().enumerate() {
        v.set_column(dst, &(vecs.column(k) * c(vals[k].sqrt(), 0.0)));
    }
    v
}

/// Real coordinates of a Hermitian `r × r` matrix: the diagonal, then for each
/// `k < l` the real and imaginary parts of entry `(k, l)`.
fn hermitian_from_coords(r: usize, x: &[f64]) -> CMat {
    let mut d = CMat::zeros(r, r);
    let mut idx = 0;
    for k in 0..r {
        d[(k, k)] = c(x[idx], 0.0);
        idx += 1;
    }
    for k in 0..r {
        for l in k + 1..r {
            let z = c(x[idx], x[idx + 1]);
            d[(k, l)] = z;
            d[(l, k)] = z.conj();
            idx += 2;
        }
    }
    d
}

/// Coefficients of `Tr(D B)` in the coordinates of [`hermitian_from_coords`].
fn trace_coefficients(b: &CMat) -> Vec<f64> {
    let r = b.nrows();
    let mut row = Vec::with_capacity(r * r);
    for k in 0..r {
        row.push(b[(k, k)].re);
    }
    for k in 0..r {
        for l in k + 1..r {
            row.push(2.0 * b[(k, l)].re);
            row.push(2.0 * b[(k, l)].im);
        }
    }
    row
}

/// A nonzero Hermitian `D` annihilating the three trace functionals, or
/// `None` when only the zero matrix does.
pub fn find_direction(v: &CMat, h: &CMat, a: &CMat) -> Option<CMat> {
    let r = v.ncols();
    if r == 0 {
        return None;
    }
    let n = r * r;
    let vh = v.adjoint();
    let rows = [
        trace_coefficients(&(&vh * h * v)),
        trace_coefficients(&(&vh * a * v)),
        trace_coefficients(&(&vh * v)),
    ];
    // Pad to at least n rows so the SVD returns a complete right basis.
    let m = n.max(3);
    let mut system = DMatrix::<f64>::zeros(m, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            system[(i, j)] = x;
        }
    }
    let svd = SVD::new(system, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let (kmin, smin) = sigma
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, s)| (k, *s))?;
    let smax = sigma.iter().fold(0.0f64, |m, s| m.max(*s));
    if n <= 3 && smin > DIRECTION_TOL * smax {
        return None;
    }
    let x: Vec<f64> = v_t.row(kmin).iter().copied().collect();
    Some(hermitian_from_coords(r, &x))
}

/// Largest-magnitude eigenvalue, preferring the positive one on a tie.
pub fn lambda_max(d: &CMat) -> f64 {
    let (vals, _) = linalg::eigh(d);
    let hi = vals.first().copied().unwrap_or(0.0);
    let lo = vals.last().copied().unwrap_or(0.0);
    if hi >= -lo {
        hi
    } else {
        lo
    }
}

pub fn reduction_step(w: &CMat, h: &CMat, a: &CMat) -> Result<ReductionStep> {
    let v = factor(w);
    let r = v.ncols();
    if r <= 1 {
        return Err(Error::NoDirection { rank: r });
    }
    let d = find_direction(&v, h, a).ok_or(Error::NoDirection { rank: r })?;
    let lambda_max = lambda_max(&d);
    if lambda_max == 0.0 {
        return Err(Error::NoDirection { rank: r });
    }
    Ok(ReductionStep { v, d, lambda_max })
}

/// One rank-reducing step.
pub fn reduce_step(w: &CMat, h: &CMat, a: &CMat) -> Result<CMat> {
    reduction_step(w, h, a).map(|s| s.apply())
}

#[derive(Clone, Debug)]
pub struct RankReduction {
    pub w: CMat,
    pub steps: Vec<ReductionStep>,
}

/// Repeat [`reduce_step`] until the numerical rank is one.
pub fn reduce_to_rank_one(w: &CMat, h: &CMat, a: &CMat) -> Result<RankReduction> {
    let mut current = linalg::hermitian_part(w);
    let mut steps = Vec::new();
    for _ in 0..w.nrows() {
        if linalg::numerical_rank(&current, RANK_TOL) <= 1 {
            break;
        }
        let step = reduction_step(&current, h, a)?;
        current = step.apply();
        steps.push(step);
    }
    Ok(RankReduction { w: current, steps })
}
