//! Dense Hermitian helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::C64;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let eig = m.clone().symmetric_eigenvalues();
    let mut vals: Vec<f64> = eig.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Eigen-decomposition `m = V diag(λ) V*` of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    // the smaller Gram matrix has the same top eigenvalue
    let gram = if m.nrows() <= m.ncols() {
        m * m.adjoint()
    } else {
        m.adjoint() * m
    };
    hermitian_eigenvalues(&gram)
        .last()
        .map_or(0.0, |v| v.max(0.0).sqrt())
}

/// `Σ_i v_i v_i*` for a list of column vectors.
pub fn outer_sum<'a>(dim: usize, vectors: impl IntoIterator<Item = &'a DVector<C64>>) -> DMatrix<C64> {
    let mut acc = DMatrix::<C64>::zeros(dim, dim);
    for v in vectors {
        acc.gerc(C64::new(1.0, 0.0), v, v, C64::new(1.0, 0.0));
    }
    acc
}

/// Thin SVD `a = U diag(σ) V*` of a tall matrix, σ descending.
///
/// Householder QR followed by one-sided Jacobi on the square factor. Columns of
/// `U` belonging to zero singular values are left zero.
pub struct ThinSvd {
    pub u: DMatrix<C64>,
    pub singular: Vec<f64>,
    pub v: DMatrix<C64>,
}

pub fn thin_svd(a: &DMatrix<C64>) -> ThinSvd {
    let (m, n) = a.shape();
    assert!(m >= n, "thin_svd needs a tall matrix, got {m}x{n}");
    if n == 0 {
        return ThinSvd {
            u: DMatrix::zeros(m, 0),
            singular: Vec::new(),
            v: DMatrix::zeros(0, 0),
        };
    }
    let qr = a.clone().qr();
    let q = qr.q();
    let mut w = qr.r();
    let mut v = DMatrix::<C64>::identity(n, n);
    jacobi_sweeps(&mut w, &mut v);

    let norms: Vec<f64> = (0..n).map(|k| w.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let top = norms[order[0]];
    let mut u_r = DMatrix::<C64>::zeros(n, n);
    let mut v_sorted = DMatrix::<C64>::zeros(n, n);
    let mut singular = Vec::with_capacity(n);
    for (c, &k) in order.iter().enumerate() {
        let s = norms[k];
        singular.push(s);
        v_sorted.set_column(c, &v.column(k));
        if s > top * f64::EPSILON * n as f64 {
            u_r.set_column(c, &(w.column(k) / C64::new(s, 0.0)));
        }
    }
    ThinSvd {
        u: q * u_r,
        singular,
        v: v_sorted,
    }
}

/// One-sided Jacobi: rotates column pairs of `w` until mutually orthogonal,
/// accumulating the rotations into `v`.
fn jacobi_sweeps(w: &mut DMatrix<C64>, v: &mut DMatrix<C64>) {
    let n = w.ncols();
    let tol = f64::EPSILON * (w.nrows() as f64).sqrt();
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = (1.0 + t * t).sqrt().recip();
                let s = c * t;
                let phase = gamma / g;
                rotate(w, p, q, c, s, phase);
                rotate(v, p, q, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }
}

/// `[x_p, x_q] ← [c x_p − s e^{-iφ} x_q, s e^{iφ} x_p + c x_q]` with `phase = e^{iφ}`.
fn rotate(x: &mut DMatrix<C64>, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let cc = C64::new(c, 0.0);
    let sp = phase * s;
    let sm = phase.conj() * s;
    for r in 0..x.nrows() {
        let a = x[(r, p)];
        let b = x[(r, q)];
        x[(r, p)] = cc * a - sm * b;
        x[(r, q)] = sp * a + cc * b;
    }
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
