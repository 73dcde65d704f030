//! Compressed sparse row storage, deterministic parallel kernels and MIC(0)-PCG.

use rayon::prelude::*;

use crate::error::{Error, Result};

const CHUNK: usize = 8192;

/// Square sparse matrix in CSR form with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl Csr {
    /// Builds from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, trip: Vec<(u32, u32, f64)>) -> Self {
        // counting sort by row, then sort each short row
        let mut start = vec![0usize; n + 1];
        for &(i, _, _) in &trip {
            start[i as usize + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut entries = vec![(0u32, 0.0f64); trip.len()];
        for (i, j, v) in trip {
            entries[fill[i as usize]] = (j, v);
            fill[i as usize] += 1;
        }
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        for i in 0..n {
            let row = &mut entries[start[i]..start[i + 1]];
            row.sort_unstable_by_key(|e| e.0);
            let mut last = u32::MAX;
            for &(j, v) in row.iter() {
                if j == last {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                    last = j;
                }
            }
            indptr[i + 1] = indices.len();
        }
        Self { n, indptr, indices, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&(j as u32)).map_or(0.0, |k| v[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// y = A x.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, ys)| {
            let base = c * CHUNK;
            for (k, yi) in ys.iter_mut().enumerate() {
                let (cols, vals) = self.row(base + k);
                *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j as usize]).sum();
            }
        });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// Extracts the sub-matrix on rows `rows` and columns `cols` (given as index maps
    /// old → new, `u32::MAX` for dropped).
    pub fn submatrix(&self, row_map: &[u32], n_rows: usize, col_map: &[u32], n_cols: usize) -> Rect {
        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut old_of = vec![0usize; n_rows];
        for (old, &new) in row_map.iter().enumerate() {
            if new != u32::MAX {
                old_of[new as usize] = old;
            }
        }
        for (new, &old) in old_of.iter().enumerate() {
            let (c, v) = self.row(old);
            for (&j, &a) in c.iter().zip(v) {
                let nj = col_map[j as usize];
                if nj != u32::MAX {
                    indices.push(nj);
                    values.push(a);
                }
            }
            indptr[new + 1] = indices.len();
        }
        Rect { rows: n_rows, cols: n_cols, indptr, indices, values }
    }
}

/// Rectangular CSR block (used for the interior/boundary coupling).
#[derive(Clone, Debug, PartialEq)]
pub struct Rect {
    pub rows: usize,
    pub cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl Rect {
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                (self.indptr[i]..self.indptr[i + 1]).map(|k| self.values[k] * x[self.indices[k] as usize]).sum()
            })
            .collect()
    }

    /// y = Aᵀ x.
    pub fn mul_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate().take(self.rows) {
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k] as usize] += self.values[k] * xi;
            }
        }
        y
    }

    pub fn into_square(self) -> Csr {
        assert_eq!(self.rows, self.cols);
        Csr { n: self.rows, indptr: self.indptr, indices: self.indices, values: self.values }
    }
}

/// Deterministic parallel dot product (fixed chunking, ordered reduction).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let parts: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    parts.iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Modified incomplete Cholesky factor U with A ≈ UᵀU on the upper-triangular pattern.
#[derive(Clone, Debug)]
pub struct Mic0 {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl Mic0 {
    pub fn new(a: &Csr, omega: f64) -> Result<Self> {
        let n = a.n();
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            let (c, v) = a.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j as usize >= i {
                    indices.push(j);
                    values.push(x);
                }
            }
            indptr[i + 1] = indices.len();
            if indices.get(indptr[i]) != Some(&(i as u32)) {
                return Err(Error::NotPositiveDefinite(0.0));
            }
        }
        let orig: Vec<f64> = (0..n).map(|i| values[indptr[i]]).collect();
        for k in 0..n {
            let dk = indptr[k];
            let mut piv = values[dk];
            if piv <= 1e-8 * orig[k] {
                piv = orig[k];
            }
            let s = piv.sqrt();
            values[dk] = s;
            for v in &mut values[dk + 1..indptr[k + 1]] {
                *v /= s;
            }
            for p in dk + 1..indptr[k + 1] {
                let i = indices[p] as usize;
                let uki = values[p];
                // merge row k (columns ≥ i) with row i
                let mut q = indptr[i];
                let qe = indptr[i + 1];
                for t in p..indptr[k + 1] {
                    let j = indices[t];
                    let f = uki * values[t];
                    while q < qe && indices[q] < j {
                        q += 1;
                    }
                    if q < qe && indices[q] == j {
                        values[q] -= f;
                    } else {
                        values[indptr[i]] -= omega * f;
                        values[indptr[j as usize]] -= omega * f;
                    }
                }
            }
        }
        Ok(Self { n, indptr, indices, values })
    }

    /// z = (UᵀU)⁻¹ r.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        for i in 0..self.n {
            let (a, b) = (self.indptr[i], self.indptr[i + 1]);
            let zi = z[i] / self.values[a];
            z[i] = zi;
            for p in a + 1..b {
                z[self.indices[p] as usize] -= self.values[p] * zi;
            }
        }
        for i in (0..self.n).rev() {
            let (a, b) = (self.indptr[i], self.indptr[i + 1]);
            let mut s = z[i];
            for p in a + 1..b {
                s -= self.values[p] * z[self.indices[p] as usize];
            }
            z[i] = s / self.values[a];
        }
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned CG for A x = b from the initial guess in `x`.
pub fn pcg(a: &Csr, pre: &Mic0, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgStats> {
    let n = a.n();
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats { iterations: 0, relative_residual: 0.0 });
    }
    let mut r = a.mul(x);
    r.par_iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut res = norm(&r) / bn;
    let mut it = 0;
    while res > tol {
        if it >= max_iter {
            return Err(Error::NonConvergence { iterations: it, residual: res });
        }
        a.mul_into(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::NotPositiveDefinite(pq));
        }
        let alpha = rz / pq;
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
        it += 1;
        if it % 50 == 0 {
            // refresh the recursive residual
            let ax = a.mul(x);
            r.par_iter_mut().zip(b).zip(&ax).for_each(|((ri, bi), ai)| *ri = bi - ai);
        }
        res = norm(&r) / bn;
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    // report the true residual
    let ax = a.mul(x);
    let true_res = norm(&ax.iter().zip(b).map(|(p, q)| q - p).collect::<Vec<_>>()) / bn;
    Ok(CgStats { iterations: it, relative_residual: true_res })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n as u32 {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        Csr::from_triplets(n, t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = Csr::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn tridiagonal_is_exact() {
        // IC(0) of a tridiagonal matrix is the exact Cholesky factor
        let a = laplace_1d(50);
        let m = Mic0::new(&a, 0.0).unwrap();
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; 50];
        let st = pcg(&a, &m, &b, &mut x, 1e-12, 10).unwrap();
        assert!(st.iterations <= 2);
        assert!(st.relative_residual < 1e-12);
    }

    #[test]
    fn dot_is_deterministic() {
        let a: Vec<f64> = (0..100_000).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(dot(&a, &a).to_bits(), dot(&a, &a).to_bits());
    }
}
