//! Jacobi-preconditioned conjugate gradients.

use super::{axpy, diagonal, dot, norm2, spmv_into, Csr};

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves A x = b for symmetric positive (semi)definite A. For a singular
/// but consistent system the iterates stay in the range of A plus `x0`.
pub fn pcg(a: &Csr, b: &[f64], x0: Option<&[f64]>, tol: f64, maxit: usize) -> CgOutcome {
    let n = b.len();
    let dinv: Vec<f64> = diagonal(a).iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut ax = vec![0.0; n];
    spmv_into(a, &x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut res = norm2(&r) / bnorm;
    if norm2(b) == 0.0 && norm2(&r) == 0.0 {
        return CgOutcome { x, iterations: 0, relative_residual: 0.0, converged: true };
    }
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut it = 0;
    while res > tol && it < maxit {
        spmv_into(a, &p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            break;
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        it += 1;
        res = norm2(&r) / bnorm;
        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&dinv) {
            *zi = ri * di;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    // Report the true residual rather than the recursively updated one.
    spmv_into(a, &x, &mut ax);
    let true_res = norm2(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;
    CgOutcome { x, iterations: it, relative_residual: true_res, converged: true_res <= tol * 10.0 }
}
