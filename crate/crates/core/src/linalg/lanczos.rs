//! Lanczos with full reorthogonalization for extreme Ritz values.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, norm2, spmv_into, Csr};

#[derive(Clone, Debug)]
pub struct RitzExtremes {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

/// Extreme Ritz values from at most `m` Lanczos steps with a seeded random
/// start vector.
pub fn ritz_extremes(a: &Csr, m: usize, seed: u64) -> RitzExtremes {
    let n = a.rows();
    if n == 0 {
        return RitzExtremes { min: 0.0, max: 0.0, steps: 0 };
    }
    let m = m.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nq = norm2(&q);
    q.iter_mut().for_each(|x| *x /= nq);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![0.0; n];
    let scale = super::norm_inf(a).max(f64::MIN_POSITIVE);
    for k in 0..m {
        spmv_into(a, &basis[k], &mut w);
        let ak = dot(&w, &basis[k]);
        alpha.push(ak);
        // Two passes of classical Gram–Schmidt against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(-c, b, &mut w);
            }
        }
        let bk = norm2(&w);
        if k + 1 == m || bk <= 1e-12 * scale {
            break;
        }
        beta.push(bk);
        basis.push(w.iter().map(|x| x / bk).collect());
    }
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    RitzExtremes { min, max, steps: k }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Triplets;

    #[test]
    fn finds_negative_eigenvalue() {
        let n = 30;
        let mut t = Triplets::symmetric(n);
        for i in 0..n {
            t.add(i, i, if i == 7 { -0.5 } else { 1.0 + i as f64 });
        }
        let r = ritz_extremes(&t.build(), n, 1);
        assert!((r.min + 0.5).abs() < 1e-10);
        assert!((r.max - n as f64).abs() < 1e-10);
    }
}
