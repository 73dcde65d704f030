use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::fem::System;
use super::solution::DiscreteSolution;
use super::sparse::dot;
use crate::error::{Error, Result};

/// Dirichlet eigenpair with an M-normalized eigenfunction.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: f64,
    pub vector: DiscreteSolution,
}

/// Controls for the block shift-invert iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions {
    /// Relative residual ‖Kx − λMx‖_{M⁻¹}/λ required of every wanted pair.
    pub tol: f64,
    pub max_restarts: usize,
    /// Block applications of K⁻¹M per restart.
    pub krylov_steps: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_restarts: 40, krylov_steps: 3, seed: 0x5eed }
    }
}

fn m_dot(a: &[f64], b: &[f64], m: &[f64]) -> f64 {
    a.iter().zip(b).zip(m).map(|((x, y), w)| x * y * w).sum()
}

/// Appends the M-orthonormalized candidates to `basis`, dropping dependent ones.
fn extend_orthonormal(basis: &mut Vec<Vec<f64>>, cands: Vec<Vec<f64>>, m: &[f64]) {
    for mut v in cands {
        let n0 = m_dot(&v, &v, m).sqrt();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in basis.iter() {
                let c = m_dot(&v, b, m);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n1 = m_dot(&v, &v, m).sqrt();
        if n1 > 1e-10 * n0 {
            v.iter_mut().for_each(|x| *x /= n1);
            basis.push(v);
        }
    }
}

/// Smallest `count` eigenpairs of K_II x = λ M x with lumped mass, ascending.
pub fn eigenpairs(sys: &System, count: usize, opts: &EigenOptions) -> Result<Vec<EigenPair>> {
    if count == 0 || count > 50 {
        return Err(Error::InvalidInput(format!("eigenpair count {count} outside 1..=50")));
    }
    let n = sys.interior_nodes().len();
    if count >= n {
        return Err(Error::InvalidInput("more eigenpairs requested than unknowns".into()));
    }
    let mass: Vec<f64> = sys.interior_nodes().iter().map(|&i| sys.lumped_mass()[i]).collect();
    let k = sys.k_ii();
    let block = (count + count.div_ceil(2).max(4)).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..block).map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()).collect();
    let mut worst = f64::INFINITY;
    for _ in 0..opts.max_restarts {
        let mut basis = Vec::new();
        extend_orthonormal(&mut basis, x, &mass);
        let mut last = basis.clone();
        for _ in 0..opts.krylov_steps {
            let next: Vec<Vec<f64>> = last
                .par_iter()
                .map(|v| {
                    let rhs: Vec<f64> = v.iter().zip(&mass).map(|(a, b)| a * b).collect();
                    sys.solve_interior(&rhs).map(|r| r.0)
                })
                .collect::<Result<_>>()?;
            let before = basis.len();
            extend_orthonormal(&mut basis, next, &mass);
            last = basis[before..].to_vec();
            if last.is_empty() {
                break;
            }
        }
        let kv: Vec<Vec<f64>> = basis.par_iter().map(|v| k.mul(v)).collect();
        let m = basis.len();
        let h = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&basis[i], &kv[j]) + dot(&basis[j], &kv[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let take = block.min(m);
        let ritz: Vec<(f64, Vec<f64>, Vec<f64>)> = order[..take]
            .par_iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                let mut kvv = vec![0.0; n];
                for j in 0..m {
                    let q = eig.eigenvectors[(j, c)];
                    v.iter_mut().zip(&basis[j]).for_each(|(a, b)| *a += q * b);
                    kvv.iter_mut().zip(&kv[j]).for_each(|(a, b)| *a += q * b);
                }
                (eig.eigenvalues[c], v, kvv)
            })
            .collect();
        worst = 0.0;
        for (theta, v, kvv) in ritz.iter().take(count) {
            let r2: f64 = kvv.iter().zip(v).zip(&mass).map(|((a, b), w)| (a - theta * w * b).powi(2) / w).sum();
            worst = worst.max(r2.sqrt() / theta.abs());
        }
        if worst <= opts.tol {
            let mesh = sys.mesh().clone();
            return Ok(ritz
                .into_iter()
                .take(count)
                .map(|(_, v, kvv)| {
                    let mn = m_dot(&v, &v, &mass);
                    let s = 1.0 / mn.sqrt();
                    let lambda = dot(&v, &kvv) / mn;
                    let mut full = vec![0.0; mesh.n_nodes()];
                    for (kk, &i) in sys.interior_nodes().iter().enumerate() {
                        full[i] = v[kk] * s;
                    }
                    EigenPair { lambda, vector: DiscreteSolution::new(mesh.clone(), sys.field().clone(), full, 0.0) }
                })
                .collect());
        }
        x = ritz.into_iter().map(|r| r.1).collect();
    }
    Err(Error::NonConvergence { iterations: opts.max_restarts, residual: worst })
}

/// Meshes the domain at size h and returns the smallest `count` eigenpairs.
pub fn dirichlet_eigenpairs(
    domain: &crate::geometry::Domain,
    field: &crate::geometry::CoefficientField,
    count: usize,
    h: f64,
) -> Result<Vec<EigenPair>> {
    let sys = System::build(domain, field, &super::MeshOptions::uniform(h), super::SolverOptions::default())?;
    eigenpairs(&sys, count, &EigenOptions::default())
}
