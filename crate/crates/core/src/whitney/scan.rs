use rayon::prelude::*;
use serde::Serialize;

use super::{vertical_translate, Square, WhitneyDecomposition, WhitneyTree};
use crate::error::{invalid, Error, Result};
use crate::frequency::{frequency_at, FrequencyCfg};
use crate::geometry::{Domain, Vec2};
use crate::solver::{DiscreteSolution, Grading, MeshOptions};

/// Constants of the tree scans.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanCfg {
    /// Radius multiplier S₁ in N(Q) = N(x_Q, S₁ℓ(Q)).
    pub s1: f64,
    /// Companion multiplier S₂ < S₁.
    pub s2: f64,
    /// Generation step K.
    pub k: usize,
    pub n0: f64,
    pub eps: f64,
    pub delta0: f64,
    pub frequency: FrequencyCfg,
}

impl Default for ScanCfg {
    fn default() -> Self {
        Self { s1: 8.0, s2: 4.0, k: 1, n0: 4.0, eps: 0.25, delta0: 0.5, frequency: FrequencyCfg::default() }
    }
}

/// Whether u vanishes somewhere on t(Q) ∩ Ω.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignState {
    NoZeros,
    HasZeros,
}

/// Rule that assigned N′.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Root,
    AHalved,
    AGrown,
    B1,
    B2,
}

/// Mesh options refined to local size ℓ(Q)/10 around every tree cube center and
/// around the center of its translate t(Q) on Σ.
pub fn scan_mesh_options(wd: &WhitneyDecomposition, tree: &WhitneyTree, h_max: f64) -> MeshOptions {
    let grading = tree
        .nodes
        .iter()
        .flat_map(|n| {
            let h_min = n.cube.side / 10.0;
            let below = wd.sigma_height(n.cube.center.x).map(|y| Vec2::new(n.cube.center.x, y));
            std::iter::once(n.cube.center).chain(below).map(move |center| Grading { center, h_min, grade: 0.2 })
        })
        .collect();
    MeshOptions { allow_structured: false, ..MeshOptions::graded(h_max, grading) }
}

fn check_resolution(u: &DiscreteSolution, tree: &WhitneyTree, ids: &[usize]) -> Result<()> {
    for &id in ids {
        let c = &tree.nodes[id].cube;
        match u.mesh().local_h(c.center) {
            Some(h) if 8.0 * h <= c.side * (1.0 + 1e-9) => {}
            Some(h) => return invalid(format!("cube {id} of side {} needs mesh size ≤ ℓ/8 (local h = {h})", c.side)),
            None => return invalid(format!("cube {id} center lies outside the mesh")),
        }
    }
    Ok(())
}

/// N(x_Q, Sℓ(Q)), or None when the radius is inadmissible or leaves the chart.
fn cube_frequencies(
    u: &DiscreteSolution,
    domain: &Domain,
    tree: &WhitneyTree,
    ids: &[usize],
    s: f64,
    fcfg: &FrequencyCfg,
) -> Result<Vec<Option<f64>>> {
    ids.par_iter()
        .map(|&id| {
            let c = &tree.nodes[id].cube;
            match frequency_at(u, domain, c.center, s * c.side, fcfg) {
                Ok(smp) if smp.admissible => Ok(smp.n),
                Ok(_) => Ok(None),
                Err(Error::BallEscapesChart { .. }) | Err(Error::Inadmissible(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

fn pi_len(tree: &WhitneyTree, id: usize) -> f64 {
    tree.nodes[id].cube.side
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyLemmaRow {
    pub node: usize,
    pub generation: usize,
    pub n_root: Option<f64>,
    pub descendants: usize,
    pub skipped: usize,
    /// Π-measure fraction of descendants with N(Q) ≤ N(R)/2.
    pub halving_fraction: f64,
    /// N(R) < N₀: the halving clause does not apply.
    pub vacuous: bool,
    /// max N(Q)/N(R) over evaluated descendants.
    pub max_ratio: f64,
}

impl KeyLemmaRow {
    /// Fraction credited to the row: 1 in the vacuous branch.
    pub fn effective_fraction(&self) -> f64 {
        if self.vacuous {
            1.0
        } else {
            self.halving_fraction
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyLemmaReport {
    pub s: f64,
    pub k: usize,
    pub n0: f64,
    pub rows: Vec<KeyLemmaRow>,
    pub max_ratio: f64,
    /// Smallest halving fraction over non-vacuous rows.
    pub min_fraction: Option<f64>,
    pub skipped: usize,
}

/// For every cube R with K generations below it, compares N(x_Q, Sℓ(Q)) over
/// D^K(R) with N(x_R, Sℓ(R)).
pub fn key_lemma_scan(
    u: &DiscreteSolution,
    domain: &Domain,
    tree: &WhitneyTree,
    s: f64,
    k: usize,
    n0: f64,
    fcfg: &FrequencyCfg,
) -> Result<KeyLemmaReport> {
    if k == 0 || k > tree.depth() {
        return invalid(format!("K = {k} must lie in 1..={}", tree.depth()));
    }
    let ids: Vec<usize> = (0..tree.nodes.len()).collect();
    check_resolution(u, tree, &ids)?;
    let n = cube_frequencies(u, domain, tree, &ids, s, fcfg)?;
    let mut rows = Vec::new();
    for g in 0..=tree.depth() - k {
        for &r in &tree.generations[g] {
            let desc = tree.descendants(r, k);
            let n_root = n[r];
            let total: f64 = desc.iter().map(|&q| pi_len(tree, q)).sum();
            let mut halved = 0.0;
            let mut max_ratio: f64 = 0.0;
            let mut skipped = 0;
            for &q in &desc {
                match (n_root, n[q]) {
                    (Some(nr), Some(nq)) => {
                        if nq <= 0.5 * nr {
                            halved += pi_len(tree, q);
                        }
                        max_ratio = max_ratio.max(nq / nr);
                    }
                    _ => skipped += 1,
                }
            }
            rows.push(KeyLemmaRow {
                node: r,
                generation: g,
                n_root,
                descendants: desc.len(),
                skipped,
                halving_fraction: halved / total,
                vacuous: n_root.is_some_and(|v| v < n0),
                max_ratio,
            });
        }
    }
    let max_ratio = rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    let min_fraction = rows
        .iter()
        .filter(|r| r.n_root.is_some() && !r.vacuous)
        .map(|r| r.halving_fraction)
        .reduce(f64::min);
    let skipped = rows.iter().map(|r| r.skipped).sum();
    Ok(KeyLemmaReport { s, k, n0, rows, max_ratio, min_fraction, skipped })
}

/// One scanned cube of the N′ recursion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeRecord {
    pub id: usize,
    /// The cube K generations above (Q̂).
    pub parent: Option<usize>,
    pub center: [f64; 2],
    pub side: f64,
    pub generation: usize,
    #[serde(rename = "N")]
    pub n: Option<f64>,
    #[serde(rename = "Nprime")]
    pub n_prime: f64,
    pub sign_state: SignState,
    pub rule: Rule,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationSummary {
    pub generation: usize,
    pub count: usize,
    /// N′(Q)/N′(Q̂) per cube, left to right.
    pub ratios: Vec<f64>,
    /// Fraction with ratio exactly 1/2.
    pub halved_fraction: f64,
    /// Smallest per-parent halved fraction.
    pub min_parent_fraction: f64,
    /// Cubes with N′ < N₀/2.
    pub below_half_n0: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModifiedFrequencyReport {
    pub nodes: Vec<NodeRecord>,
    pub generations: Vec<GenerationSummary>,
    /// Descendant translates inside a zero-free t(Q̂) that the oracle reports as having zeros.
    pub heredity_violations: usize,
    /// B2 cubes with N(x_Q, S₂ℓ(Q)) > 1 + 2N(Q).
    pub s2_violations: usize,
    /// Ratios outside {1/2} ∪ (0, 1+ε].
    pub key_lemma_failures: Vec<usize>,
}

/// Assigns N′ on generations 0, K, 2K, … following rules (a), (b1), (b2).
pub fn modified_frequency_scan(
    u: &DiscreteSolution,
    domain: &Domain,
    wd: &WhitneyDecomposition,
    tree: &WhitneyTree,
    cfg: &ScanCfg,
    sign_oracle: &(dyn Fn(&Square) -> Result<SignState> + Sync),
) -> Result<ModifiedFrequencyReport> {
    if cfg.k == 0 || cfg.k > tree.depth() {
        return invalid(format!("K = {} must lie in 1..={}", cfg.k, tree.depth()));
    }
    if !(cfg.delta0 > 0.0 && cfg.delta0 <= 1.0) || !(cfg.eps > 0.0) || !(cfg.n0 > 0.0) {
        return invalid("need δ₀ ∈ (0,1], ε > 0 and N₀ > 0");
    }
    let levels = tree.depth() / cfg.k;
    let ids: Vec<usize> = (0..=levels).flat_map(|j| tree.generations[j * cfg.k].iter().copied()).collect();
    check_resolution(u, tree, &ids)?;
    let n1 = cube_frequencies(u, domain, tree, &ids, cfg.s1, &cfg.frequency)?;
    let mut slot = vec![usize::MAX; tree.nodes.len()];
    for (i, &id) in ids.iter().enumerate() {
        slot[id] = i;
    }
    let states: Vec<SignState> = ids
        .par_iter()
        .map(|&id| {
            let t = vertical_translate(wd, &tree.nodes[id].cube.square())?;
            sign_oracle(&t).map_err(|e| Error::InvalidInput(format!("sign oracle failed on cube {id}: {e}")))
        })
        .collect::<Result<_>>()?;
    let root = ids[0];
    let Some(n_root) = n1[0] else {
        return invalid(format!("N is unavailable on the root cube {root}"));
    };
    let mut n_prime = vec![f64::NAN; ids.len()];
    let mut rule = vec![Rule::Root; ids.len()];
    let mut parent = vec![None; ids.len()];
    n_prime[0] = n_root.max(0.5 * cfg.n0);
    let mut generations = Vec::new();
    let mut failures = Vec::new();
    let mut s2_needed = Vec::new();
    for j in 1..=levels {
        let mut ratios = Vec::new();
        let mut min_parent: f64 = 1.0;
        let mut below = 0;
        for &ph in &tree.generations[(j - 1) * cfg.k] {
            let p = slot[ph];
            let kids = tree.descendants(ph, cfg.k);
            let m = (cfg.delta0 * kids.len() as f64).ceil() as usize;
            let mut halved = 0;
            for (pos, &q) in kids.iter().enumerate() {
                let i = slot[q];
                parent[i] = Some(ph);
                let (v, r) = match states[p] {
                    SignState::NoZeros if pos < m => (0.5 * n_prime[p], Rule::AHalved),
                    SignState::NoZeros => ((1.0 + cfg.eps) * n_prime[p], Rule::AGrown),
                    SignState::HasZeros if states[i] == SignState::NoZeros => (0.5 * n_prime[p], Rule::B1),
                    SignState::HasZeros => {
                        let Some(nq) = n1[i] else {
                            return invalid(format!("N is unavailable on cube {q} (rule b2)"));
                        };
                        s2_needed.push(i);
                        (nq.max(0.5 * cfg.n0), Rule::B2)
                    }
                };
                n_prime[i] = v;
                rule[i] = r;
                let ratio = v / n_prime[p];
                if ratio == 0.5 {
                    halved += 1;
                } else if !(ratio > 0.0 && ratio <= 1.0 + cfg.eps) {
                    failures.push(q);
                }
                if v < 0.5 * cfg.n0 {
                    below += 1;
                }
                ratios.push(ratio);
            }
            min_parent = min_parent.min(halved as f64 / kids.len() as f64);
        }
        let count = ratios.len();
        let halved_fraction = ratios.iter().filter(|&&r| r == 0.5).count() as f64 / count as f64;
        generations.push(GenerationSummary {
            generation: j * cfg.k,
            count,
            ratios,
            halved_fraction,
            min_parent_fraction: min_parent,
            below_half_n0: below,
        });
    }
    // 1 + 2N(Q) ≥ N(x_Q, S₂ℓ(Q))
    let b2_ids: Vec<usize> = s2_needed.iter().map(|&i| ids[i]).collect();
    let n2 = cube_frequencies(u, domain, tree, &b2_ids, cfg.s2, &cfg.frequency)?;
    let s2_violations = s2_needed
        .iter()
        .zip(&n2)
        .filter(|(&i, m)| m.is_some_and(|m| m > 1.0 + 2.0 * n1[i].unwrap_or(f64::INFINITY)))
        .count();
    // zero-free translates stay zero-free below
    let translates: Vec<Square> =
        ids.iter().map(|&id| vertical_translate(wd, &tree.nodes[id].cube.square())).collect::<Result<_>>()?;
    let mut heredity_violations = 0;
    for (a, ta) in translates.iter().enumerate() {
        if states[a] != SignState::NoZeros {
            continue;
        }
        for (b, tb) in translates.iter().enumerate() {
            if tb.side < ta.side && ta.encloses(tb) && states[b] == SignState::HasZeros {
                heredity_violations += 1;
            }
        }
    }
    let nodes = ids
        .iter()
        .enumerate()
        .map(|(i, &id)| {
            let c = &tree.nodes[id].cube;
            NodeRecord {
                id,
                parent: parent[i],
                center: [c.center.x, c.center.y],
                side: c.side,
                generation: tree.nodes[id].generation,
                n: n1[i],
                n_prime: n_prime[i],
                sign_state: states[i],
                rule: rule[i],
            }
        })
        .collect();
    Ok(ModifiedFrequencyReport { nodes, generations, heredity_violations, s2_violations, key_lemma_failures: failures })
}
