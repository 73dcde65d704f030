//! Counting bounds for the modified-frequency tree and a Monte Carlo model of
//! the two-point ratio law.

mod sim;
mod tail;

pub use sim::{simulate_recursion, SimReport, SimRow};
pub use tail::{binomial_tail, binomial_tail_ln, stirling_bound, stirling_bound_ln, J_MIN};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Constants of the tree recursion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeParams {
    pub delta0: f64,
    pub eps: f64,
    /// Generation step K.
    pub k: u32,
    pub d: u32,
    pub n0: f64,
    /// N′ at the root.
    pub n_root: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { delta0: 0.5, eps: 0.1, k: 10, d: 2, n0: 4.0, n_root: 8.0 }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0 <= 1.0) {
            return invalid(format!("δ₀ = {} must lie in (0, 1]", self.delta0));
        }
        if !(self.eps >= 0.0) {
            return invalid(format!("ε = {} must be nonnegative", self.eps));
        }
        if self.k == 0 || !(2..=3).contains(&self.d) {
            return invalid("need K ≥ 1 and d ∈ {2, 3}");
        }
        if !(self.n0 > 1.0) || !(self.n_root >= 0.5 * self.n0) {
            return invalid("need N₀ > 1 and N′(R) ≥ N₀/2");
        }
        Ok(())
    }

    /// Number of cubes K generations down, M = 2^{(d-1)K}.
    pub fn m(&self) -> f64 {
        2f64.powi(((self.d - 1) * self.k) as i32)
    }

    pub fn alpha(&self) -> Result<f64> {
        alpha_of(self.delta0)
    }

    /// (1/2)^{jF} (1+ε)^{j(1-F)} N′(R): the largest N′ after j steps with goodness frequency F.
    pub fn claim_bound(&self, j: u32, f: f64) -> f64 {
        let j = j as f64;
        0.5f64.powf(j * f) * (1.0 + self.eps).powf(j * (1.0 - f)) * self.n_root
    }
}

/// Solves δ₀/(1-δ₀) · (1-α)/α = 3.
pub fn alpha_of(delta0: f64) -> Result<f64> {
    if !(delta0 > 0.0 && delta0 < 1.0) {
        return invalid(format!("δ₀ = {delta0} must lie in (0, 1)"));
    }
    Ok(delta0 / (3.0 * (1.0 - delta0) + delta0))
}

/// Solves α = log(1+ε₀) / (log(1+ε₀) + log 2).
pub fn epsilon0_of(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("α = {alpha} must lie in (0, 1)"));
    }
    Ok((alpha / (1.0 - alpha) * std::f64::consts::LN_2).exp_m1())
}

/// Whether (1/2)^α (1+ε)^{1-α} < 1.
pub fn contraction_holds(alpha: f64, eps: f64) -> bool {
    -alpha * std::f64::consts::LN_2 + (1.0 - alpha) * eps.ln_1p() < 0.0
}

/// μ_j = log₂(2N′(R)/N₀) / j.
pub fn mu_j(j: u32, n_root: f64, n0: f64) -> Result<f64> {
    if j == 0 {
        return invalid("μ_j needs j ≥ 1");
    }
    if !(n0 > 0.0) || !(n_root >= 0.5 * n0) {
        return invalid(format!("need N′(R) = {n_root} ≥ N₀/2 = {}", 0.5 * n0));
    }
    Ok((2.0 * n_root / n0).log2() / j as f64)
}

/// z(β) = (1-δ₀)^{1-β} δ₀^β / (β^β (1-β)^{1-β}).
pub fn z_of(beta: f64, delta0: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) || !(delta0 > 0.0 && delta0 < 1.0) {
        return invalid(format!("z(β = {beta}, δ₀ = {delta0}) needs both in (0, 1)"));
    }
    let ln = (1.0 - beta) * (1.0 - delta0).ln() + beta * delta0.ln() - beta * beta.ln() - (1.0 - beta) * (1.0 - beta).ln();
    Ok(ln.exp())
}

/// (d-1)(ln M + ln z(α)) / ln M.
pub fn dimension_bound(p: &TreeParams) -> Result<f64> {
    p.validate()?;
    let alpha = p.alpha()?;
    let eps0 = epsilon0_of(alpha)?;
    if !(p.eps < eps0) {
        return invalid(format!("ε = {} must be below ε₀ = {eps0}", p.eps));
    }
    let ln_m = p.m().ln();
    Ok((p.d - 1) as f64 * (ln_m + z_of(alpha, p.delta0)?.ln()) / ln_m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(alpha_of(0.5).unwrap(), 0.25);
        assert_eq!(alpha_of(0.75).unwrap(), 0.5);
        assert!((epsilon0_of(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(alpha_of(1.0).is_err() && epsilon0_of(0.0).is_err());
        assert_eq!(mu_j(10, 32.0, 4.0).unwrap(), 0.4);
        assert_eq!(mu_j(3, 2.0, 4.0).unwrap(), 0.0);
        assert!(mu_j(0, 2.0, 4.0).is_err() && mu_j(1, 1.0, 4.0).is_err());
        assert!((z_of(0.3, 0.3).unwrap() - 1.0).abs() < 1e-15);
        let p = TreeParams { eps: 0.3, ..TreeParams::default() };
        assert!(dimension_bound(&p).is_err());
    }
}
