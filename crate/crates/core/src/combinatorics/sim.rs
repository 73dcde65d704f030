use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{alpha_of, binomial_tail, mu_j, stirling_bound, TreeParams};
use crate::error::{invalid, Result};

/// Statistics after j steps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimRow {
    pub j: u32,
    /// α + μ_j.
    pub beta: f64,
    pub exact_tail: f64,
    pub stirling_bound: Option<f64>,
    /// Empirical P[F_j ≤ α + μ_j].
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    /// 95% Wilson interval.
    pub ci: (f64, f64),
    /// Empirical P[N′ ≥ N₀/2].
    pub survival: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub params: TreeParams,
    pub generations: u32,
    pub trials: u64,
    pub seed: u64,
    pub rng: &'static str,
    pub rows: Vec<SimRow>,
}

impl SimReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "j,exact_tail,stirling_bound,mc_estimate,mc_stderr")?;
        for r in &self.rows {
            let sb = r.stirling_bound.map_or(String::new(), |b| b.to_string());
            writeln!(w, "{},{},{},{},{}", r.j, r.exact_tail, sb, r.mc_estimate, r.mc_stderr)?;
        }
        Ok(())
    }

    /// Least-squares slope of ln(M^j P_j) against ln(1/side) = j ln M/(d-1),
    /// over the later half of the generations with P_j > 0.
    pub fn covering_slope(&self) -> Option<f64> {
        let ln_m = self.params.m().ln();
        let scale = ln_m / (self.params.d - 1) as f64;
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .skip(self.rows.len() / 2)
            .filter(|r| r.mc_estimate > 0.0)
            .map(|r| (r.j as f64 * scale, r.j as f64 * ln_m + r.mc_estimate.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}

fn wilson(p: f64, n: f64) -> (f64, f64) {
    let z = 1.96f64;
    let d = 1.0 + z * z / n;
    let c = (p + z * z / (2.0 * n)) / d;
    let h = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / d;
    ((c - h).max(0.0), (c + h).min(1.0))
}

/// Follows one random root-to-leaf branch per trial under the two-point law:
/// ratio 1/2 with probability δ₀, 1+ε otherwise. Trial t draws from ChaCha8
/// seeded with `seed` on stream t, so results do not depend on the thread count.
pub fn simulate_recursion(params: &TreeParams, generations: u32, trials: u64, seed: u64) -> Result<SimReport> {
    params.validate()?;
    if generations == 0 || trials == 0 {
        return invalid("need at least one generation and one trial");
    }
    let g = generations as usize;
    let alpha = if params.delta0 == 1.0 { 1.0 } else { alpha_of(params.delta0)? };
    let betas: Vec<f64> = (1..=generations)
        .map(|j| mu_j(j, params.n_root, params.n0).map(|m| alpha + m))
        .collect::<Result<_>>()?;
    let cutoffs: Vec<f64> = betas.iter().enumerate().map(|(i, b)| ((i + 1) as f64 * b).floor()).collect();
    let grow = 1.0 + params.eps;
    let floor = 0.5 * params.n0;

    const CHUNK: u64 = 4096;
    let chunks = trials.div_ceil(CHUNK);
    let (below, alive) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut below = vec![0u64; g];
            let mut alive = vec![0u64; g];
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t);
                let mut halvings = 0i32;
                for j in 0..g {
                    if rng.gen::<f64>() < params.delta0 {
                        halvings += 1;
                    }
                    if halvings as f64 <= cutoffs[j] {
                        below[j] += 1;
                    }
                    let n = params.n_root * 0.5f64.powi(halvings) * grow.powi(j as i32 + 1 - halvings);
                    if n >= floor {
                        alive[j] += 1;
                    }
                }
            }
            (below, alive)
        })
        .reduce(
            || (vec![0; g], vec![0; g]),
            |mut a, b| {
                for j in 0..g {
                    a.0[j] += b.0[j];
                    a.1[j] += b.1[j];
                }
                a
            },
        );
    let n = trials as f64;
    let rows = (0..g)
        .map(|i| {
            let j = i as u32 + 1;
            let p = below[i] as f64 / n;
            Ok(SimRow {
                j,
                beta: betas[i],
                exact_tail: binomial_tail(j, betas[i], params.delta0)?,
                stirling_bound: stirling_bound(j, betas[i], params.delta0).ok(),
                mc_estimate: p,
                mc_stderr: (p * (1.0 - p) / n).sqrt(),
                ci: wilson(p, n),
                survival: alive[i] as f64 / n,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SimReport { params: *params, generations, trials, seed, rng: "ChaCha8", rows })
}
