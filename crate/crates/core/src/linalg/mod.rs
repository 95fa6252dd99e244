//! Sparse building blocks: deterministic COO accumulation into `sprs` CSR
//! matrices, a few BLAS-1 helpers and the solvers used by the stepper.

pub mod cg;
pub mod cholesky;
pub mod lanczos;

use sprs::CsMat;

pub type Csr = CsMat<f64>;

/// Triplet accumulator. Duplicates are summed in insertion order, so
/// assembly is reproducible bit for bit.
#[derive(Clone, Debug)]
pub struct Triplets {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    symmetric: bool,
}

impl Triplets {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
            symmetric: false,
        }
    }

    /// Accumulator for a symmetric matrix: only the upper triangle is kept
    /// and mirrored at the end, so the result is exactly symmetric.
    pub fn symmetric(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            entries: Vec::new(),
            symmetric: true,
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        if self.symmetric && i > j {
            return;
        }
        self.entries.push((i, j, v));
    }

    pub fn build(mut self) -> Csr {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(self.entries.len());
        for (i, j, v) in self.entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        if self.symmetric {
            let mirror: Vec<_> = merged.iter().filter(|e| e.0 != e.1).map(|&(i, j, v)| (j, i, v)).collect();
            merged.extend(mirror);
            merged.sort_by_key(|&(i, j, _)| (i, j));
        }
        let mut indptr = vec![0usize; self.rows + 1];
        for &(i, _, _) in &merged {
            indptr[i + 1] += 1;
        }
        for i in 0..self.rows {
            indptr[i + 1] += indptr[i];
        }
        let indices = merged.iter().map(|e| e.1).collect();
        let data = merged.iter().map(|e| e.2).collect();
        CsMat::new((self.rows, self.cols), indptr, indices, data)
    }
}

/// y = A x.
pub fn spmv(a: &Csr, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    spmv_into(a, x, &mut y);
    y
}

pub fn spmv_into(a: &Csr, x: &[f64], y: &mut [f64]) {
    assert_eq!(a.cols(), x.len());
    for (i, row) in a.outer_iterator().enumerate() {
        let mut s = 0.0;
        for (j, v) in row.iter() {
            s += v * x[j];
        }
        y[i] = s;
    }
}

/// y = Aᵀ x.
pub fn spmv_t(a: &Csr, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.rows(), x.len());
    let mut y = vec![0.0; a.cols()];
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, v) in row.iter() {
            y[j] += v * x[i];
        }
    }
    y
}

/// xᵀ A x.
pub fn quad(a: &Csr, x: &[f64]) -> f64 {
    dot(x, &spmv(a, x))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Σ c_k A_k over matrices of equal shape.
pub fn lincomb(terms: &[(f64, &Csr)]) -> Csr {
    let (r, c) = terms[0].1.shape();
    let mut t = Triplets::new(r, c);
    for (coef, a) in terms {
        assert_eq!(a.shape(), (r, c));
        for (v, (i, j)) in a.iter() {
            t.add(i, j, coef * v);
        }
    }
    t.build()
}

/// Pᵀ B P for a sparse B (m×m) and P (m×n).
pub fn congruence(b: &Csr, p: &Csr) -> Csr {
    let n = p.cols();
    let mut t = Triplets::new(n, n);
    for (a, brow) in b.outer_iterator().enumerate() {
        let pa = p.outer_view(a).unwrap();
        for (c, bv) in brow.iter() {
            let pc = p.outer_view(c).unwrap();
            for (i, pi) in pa.iter() {
                for (j, pj) in pc.iter() {
                    t.add(i, j, pi * bv * pj);
                }
            }
        }
    }
    symmetrize(&t.build())
}

/// (A + Aᵀ)/2, exactly symmetric.
pub fn symmetrize(a: &Csr) -> Csr {
    let at = a.transpose_view().to_csr();
    let mut t = Triplets::symmetric(a.rows());
    let sum = lincomb(&[(0.5, a), (0.5, &at)]);
    for (v, (i, j)) in sum.iter() {
        t.add(i, j, *v);
    }
    t.build()
}

/// Block-diagonal embedding of square blocks.
pub fn block_diag(blocks: &[&Csr]) -> Csr {
    let n: usize = blocks.iter().map(|b| b.rows()).sum();
    let mut t = Triplets::new(n, n);
    let mut off = 0;
    for b in blocks {
        for (v, (i, j)) in b.iter() {
            t.add(off + i, off + j, *v);
        }
        off += b.rows();
    }
    t.build()
}

pub fn identity(n: usize) -> Csr {
    CsMat::eye(n)
}

pub fn diagonal(a: &Csr) -> Vec<f64> {
    let mut d = vec![0.0; a.rows()];
    for (i, row) in a.outer_iterator().enumerate() {
        if let Some(v) = row.get(i) {
            d[i] = *v;
        }
    }
    d
}

/// max |a_ij − a_ji|.
pub fn asymmetry(a: &Csr) -> f64 {
    if a.rows() != a.cols() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for (v, (i, j)) in a.iter() {
        let w = a.get(j, i).copied().unwrap_or(0.0);
        worst = worst.max((v - w).abs());
    }
    worst
}

/// Infinity norm (max absolute row sum); equals the 1-norm for symmetric input.
pub fn norm_inf(a: &Csr) -> f64 {
    a.outer_iterator()
        .map(|row| row.iter().map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_mirror() {
        let mut t = Triplets::symmetric(3);
        t.add(0, 1, 1.0);
        t.add(1, 0, 1.0);
        t.add(0, 1, 2.0);
        t.add(2, 2, 5.0);
        let a = t.build();
        assert_eq!(a.get(0, 1), Some(&3.0));
        assert_eq!(a.get(1, 0), Some(&3.0));
        assert_eq!(a.get(2, 2), Some(&5.0));
        assert_eq!(asymmetry(&a), 0.0);
    }

    #[test]
    fn congruence_matches_dense() {
        let mut b = Triplets::new(2, 2);
        b.add(0, 0, 2.0);
        b.add(0, 1, 1.0);
        b.add(1, 0, 1.0);
        b.add(1, 1, 2.0);
        let b = b.build();
        let mut p = Triplets::new(2, 3);
        p.add(0, 0, 1.0);
        p.add(0, 2, -1.0);
        p.add(1, 1, 1.0);
        p.add(1, 2, -1.0);
        let p = p.build();
        let m = congruence(&b, &p);
        let x = [0.3, -1.2, 0.7];
        let px = spmv(&p, &x);
        assert!((quad(&m, &x) - quad(&b, &px)).abs() < 1e-14);
        assert_eq!(asymmetry(&m), 0.0);
    }
}
