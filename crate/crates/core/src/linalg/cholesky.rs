//! Envelope (skyline) Cholesky factorization with reverse Cuthill–McKee
//! ordering.

use super::Csr;

#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    n: usize,
    /// perm[new] = old.
    perm: Vec<usize>,
    /// First stored column of each row of L (permuted numbering).
    first: Vec<usize>,
    /// Offset of row i in `vals`; row i stores columns first[i]..=i.
    start: Vec<usize>,
    vals: Vec<f64>,
    pub min_pivot: f64,
    pub max_diag: f64,
}

/// A pivot that was not safely positive.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotFailure {
    pub row: usize,
    pub pivot: f64,
    pub min_pivot: f64,
    pub max_diag: f64,
}

/// Relative pivot threshold below which a matrix is not treated as
/// positive definite.
pub const PIVOT_RTOL: f64 = 1e-12;

fn rcm(a: &Csr) -> Vec<usize> {
    let ord = sprs::linalg::reverse_cuthill_mckee(a.view());
    ord.perm.vec()
}

impl EnvelopeCholesky {
    /// Factors a symmetric matrix. Stops at the first pivot that is not
    /// larger than `PIVOT_RTOL · max|a_ii|`.
    pub fn factor(a: &Csr) -> Result<Self, PivotFailure> {
        assert_eq!(a.rows(), a.cols());
        let n = a.rows();
        let perm = if n > 0 { rcm(a) } else { Vec::new() };
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (v, (i, j)) in a.iter() {
            if *v != 0.0 {
                let (pi, pj) = (inv[i], inv[j]);
                let (hi, lo) = if pi >= pj { (pi, pj) } else { (pj, pi) };
                first[hi] = first[hi].min(lo);
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut vals = vec![0.0; start[n]];
        for (v, (i, j)) in a.iter() {
            let (pi, pj) = (inv[i], inv[j]);
            if pj <= pi {
                vals[start[pi] + pj - first[pi]] = *v;
            }
        }
        let max_diag = (0..n).map(|i| vals[start[i] + i - first[i]].abs()).fold(0.0, f64::max);
        let threshold = PIVOT_RTOL * max_diag;
        let mut min_pivot = f64::INFINITY;

        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = vals[start[i] + j - fi];
                let ri = &vals[start[i] + k0 - fi..start[i] + j - fi];
                let rj = &vals[start[j] + k0 - fj..start[j] + j - fj];
                for (x, y) in ri.iter().zip(rj) {
                    s -= x * y;
                }
                vals[start[i] + j - fi] = s / vals[start[j] + j - fj];
            }
            let row = &vals[start[i]..start[i] + i - fi];
            let d = vals[start[i] + i - fi] - row.iter().map(|x| x * x).sum::<f64>();
            min_pivot = min_pivot.min(d);
            if !(d > threshold) {
                return Err(PivotFailure {
                    row: i,
                    pivot: d,
                    min_pivot,
                    max_diag,
                });
            }
            vals[start[i] + i - fi] = d.sqrt();
        }
        Ok(Self {
            n,
            perm,
            first,
            start,
            vals,
            min_pivot: if n == 0 { 0.0 } else { min_pivot },
            max_diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries of L.
    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i] + i - fi + 1];
            let mut s = y[i];
            for (l, yk) in row[..i - fi].iter().zip(&y[fi..i]) {
                s -= l * yk;
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i] + i - fi + 1];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (l, yk) in row[..i - fi].iter().zip(&mut y[fi..i]) {
                *yk -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{spmv, Triplets};

    fn laplacian_1d(n: usize, shift: f64) -> Csr {
        let mut t = Triplets::symmetric(n);
        for i in 0..n {
            t.add(i, i, 2.0 + shift);
            if i + 1 < n {
                t.add(i, i + 1, -1.0);
            }
        }
        t.build()
    }

    #[test]
    fn solves_spd_system() {
        let a = laplacian_1d(50, 0.01);
        let f = EnvelopeCholesky::factor(&a).unwrap();
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = spmv(&a, &x_true);
        let x = f.solve(&b);
        for (p, q) in x.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-10);
        }
        assert!(f.min_pivot > 0.0);
    }

    #[test]
    fn rejects_singular_and_indefinite() {
        // Pure Neumann Laplacian: constants in the kernel.
        let mut t = Triplets::symmetric(4);
        for i in 0..3 {
            t.add(i, i, 1.0);
            t.add(i + 1, i + 1, 1.0);
            t.add(i, i + 1, -1.0);
        }
        assert!(EnvelopeCholesky::factor(&t.build()).is_err());
        let a = laplacian_1d(10, -1.0);
        let err = EnvelopeCholesky::factor(&a).unwrap_err();
        assert!(err.pivot <= 0.0 || err.pivot <= PIVOT_RTOL * err.max_diag);
    }
}
