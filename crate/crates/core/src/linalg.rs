//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type C64 = Complex<f64>;
pub type CVec = DVector<C64>;
pub type CMat = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `v vᴴ`.
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// `hᴴ W h`, real for Hermitian `W`.
pub fn quad_form(h: &CVec, w: &CMat) -> f64 {
    h.dotc(&(w * h)).re
}

/// `|hᴴ w|²`, the rank-1 case of [`quad_form`].
pub fn beam_gain(h: &CVec, w: &CVec) -> f64 {
    h.dotc(w).norm_sqr()
}

pub fn trace_re(w: &CMat) -> f64 {
    w.trace().re
}

/// `Tr(A B)` real part, without forming the product.
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// `(W + Wᴴ)/2`.
pub fn hermitian_part(w: &CMat) -> CMat {
    (w + w.adjoint()) * c(0.5, 0.0)
}

pub fn fro_norm(w: &CMat) -> f64 {
    w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
/// Column `k` of the returned matrix is the eigenvector of value `k`.
pub fn eigh(w: &CMat) -> (Vec<f64>, CMat) {
    let n = w.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(w));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(w: &CMat) -> f64 {
    eigh(w).0.last().copied().unwrap_or(0.0)
}

/// Count of eigenvalues above `rel_tol · λ_max`. Zero for a zero matrix.
pub fn numerical_rank(w: &CMat, rel_tol: f64) -> usize {
    let (vals, _) = eigh(w);
    let top = vals.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    vals.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Pseudoinverse of a Hermitian matrix, eigenvalues with `|λ| ≤ rel_tol · max|λ|`
/// treated as zero.
pub fn pinv_hermitian(w: &CMat, rel_tol: f64) -> CMat {
    let (vals, vecs) = eigh(w);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n = w.nrows();
    let mut out = CMat::zeros(n, n);
    if scale == 0.0 {
        return out;
    }
    for (k, &v) in vals.iter().enumerate() {
        if v.abs() > rel_tol * scale {
            let u = vecs.column(k).into_owned();
            out += (&u * u.adjoint()) * c(1.0 / v, 0.0);
        }
    }
    out
}

/// Circularly symmetric complex Gaussian vector with total variance `var` per entry.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, len: usize, var: f64) -> CVec {
    let sd = (var / 2.0).sqrt();
    CVec::from_iterator(
        len,
        (0..len).map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c(sd * re, sd * im)
        }),
    )
}

/// Uniform point on the complex unit sphere in `Cᴷ`.
pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVec {
    loop {
        let v = complex_gaussian(rng, len, 1.0);
        let n = v.norm();
        if n > 1e-12 {
            return v.unscale(n);
        }
    }
}

/// Random Hermitian matrix with i.i.d. Gaussian entries, unit Frobenius norm.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = complex_gaussian(rng, n * n, 1.0);
    let m = CMat::from_iterator(n, n, g.iter().copied());
    let h = hermitian_part(&m);
    let norm = fro_norm(&h);
    if norm == 0.0 {
        h
    } else {
        h * c(1.0 / norm, 0.0)
    }
}

/// Random PSD matrix `G Gᴴ` of the given rank, scaled to trace `tr`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize, tr: f64) -> CMat {
    let g = complex_gaussian(rng, n * rank, 1.0);
    let g = CMat::from_iterator(n, rank, g.iter().copied());
    let w = &g * g.adjoint();
    let t = trace_re(&w);
    if t == 0.0 {
        w
    } else {
        hermitian_part(&(w * c(tr / t, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigh_sorts_descending_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_psd(&mut rng, 4, 4, 3.0);
        let (vals, vecs) = eigh(&w);
        assert!(vals.windows(2).all(|p| p[0] >= p[1]));
        let d = CMat::from_diagonal(&CVec::from_iterator(4, vals.iter().map(|&v| c(v, 0.0))));
        let back = &vecs * d * vecs.adjoint();
        assert!(fro_norm(&(back - &w)) < 1e-12);
    }

    #[test]
    fn pinv_of_rank_one() {
        let v = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let w = outer(&v);
        let p = pinv_hermitian(&w, 1e-12);
        // (v vᴴ)† = v vᴴ / ‖v‖⁴
        let expect = outer(&v) * c(0.25, 0.0);
        assert!(fro_norm(&(p - expect)) < 1e-12);
    }

    #[test]
    fn quad_form_matches_beam_gain_for_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = complex_gaussian(&mut rng, 3, 1.0);
        let w = complex_gaussian(&mut rng, 3, 1.0);
        let a = quad_form(&h, &outer(&w));
        let b = beam_gain(&h, &w);
        assert!((a - b).abs() < 1e-12 * (1.0 + b));
    }

    #[test]
    fn rank_of_zero_is_zero() {
        assert_eq!(numerical_rank(&CMat::zeros(3, 3), 1e-9), 0);
    }
}
