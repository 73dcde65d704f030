use std::f64::consts::PI;

use super::z_of;
use crate::error::{invalid, Result};

/// Smallest j for which the Stirling bound is asserted.
pub const J_MIN: u32 = 50;

/// m · 2^e with m kept in [2^-64, 2^64], so long products neither underflow
/// nor lose the exactness of dyadic arithmetic.
#[derive(Clone, Copy, Debug)]
struct Scaled {
    m: f64,
    e: i64,
}

impl Scaled {
    const ZERO: Scaled = Scaled { m: 0.0, e: 0 };

    fn new(m: f64) -> Self {
        Scaled { m, e: 0 }.norm()
    }

    fn norm(mut self) -> Self {
        const BIG: f64 = 18446744073709551616.0; // 2^64
        if self.m == 0.0 {
            return Scaled::ZERO;
        }
        while self.m.abs() > BIG {
            self.m /= BIG;
            self.e += 64;
        }
        while self.m.abs() < 1.0 / BIG {
            self.m *= BIG;
            self.e -= 64;
        }
        self
    }

    fn add(self, o: Scaled) -> Self {
        if self.m == 0.0 {
            return o;
        }
        if o.m == 0.0 {
            return self;
        }
        let (hi, lo) = if self.e >= o.e { (self, o) } else { (o, self) };
        let shift = (lo.e - hi.e).max(-2000) as i32;
        Scaled { m: hi.m + lo.m * 2f64.powi(shift), e: hi.e }.norm()
    }

    fn ln(self) -> f64 {
        self.m.ln() + self.e as f64 * std::f64::consts::LN_2
    }

    fn value(self) -> f64 {
        // split the exponent so intermediate powers stay finite
        let mut v = self.m;
        let mut e = self.e;
        while e != 0 {
            let step = e.clamp(-1000, 1000);
            v *= 2f64.powi(step as i32);
            e -= step;
        }
        v
    }
}

fn tail_scaled(j: u32, beta: f64, delta0: f64) -> Result<Option<Scaled>> {
    if j > 10_000 {
        return invalid(format!("j = {j} exceeds 10⁴"));
    }
    if !(0.0..=1.0).contains(&delta0) || !(beta >= 0.0) {
        return invalid(format!("need δ₀ ∈ [0, 1] and β ≥ 0 (got {delta0}, {beta})"));
    }
    let top = (j as f64 * beta).floor();
    if top >= j as f64 {
        return Ok(None);
    }
    let top = top as u32;
    if delta0 == 0.0 {
        return Ok(None);
    }
    if delta0 == 1.0 {
        return Ok(Some(Scaled::ZERO));
    }
    let q = 1.0 - delta0;
    let ratio = delta0 / q;
    // (1-δ₀)^j by repeated squaring in scaled form
    let mut term = Scaled::new(1.0);
    let mut base = Scaled::new(q);
    let mut n = j;
    while n > 0 {
        if n & 1 == 1 {
            term = Scaled { m: term.m * base.m, e: term.e + base.e }.norm();
        }
        base = Scaled { m: base.m * base.m, e: 2 * base.e }.norm();
        n >>= 1;
    }
    let mut sum = term;
    for i in 1..=top {
        term = Scaled { m: term.m * (j - i + 1) as f64 * ratio / i as f64, e: term.e }.norm();
        sum = sum.add(term);
    }
    Ok(Some(sum))
}

/// P[Bin(j, δ₀) ≤ ⌊jβ⌋], summed term by term with an extended exponent range.
pub fn binomial_tail(j: u32, beta: f64, delta0: f64) -> Result<f64> {
    Ok(tail_scaled(j, beta, delta0)?.map_or(1.0, |s| s.value().min(1.0)))
}

/// Natural log of [`binomial_tail`], finite even when the tail underflows f64.
pub fn binomial_tail_ln(j: u32, beta: f64, delta0: f64) -> Result<f64> {
    Ok(tail_scaled(j, beta, delta0)?.map_or(0.0, |s| s.ln().min(0.0)))
}

/// ln of 2/√(2πβ(1-β)j) · z(β)^j, valid inside 2 < δ₀/(1-δ₀)·(1-β)/β < 4.
pub fn stirling_bound_ln(j: u32, beta: f64, delta0: f64) -> Result<f64> {
    if j < J_MIN {
        return invalid(format!("j = {j} is below j_min = {J_MIN}"));
    }
    if !(beta > 0.0 && beta < 1.0) || !(delta0 > 0.0 && delta0 < 1.0) {
        return invalid("need β, δ₀ ∈ (0, 1)");
    }
    let w = delta0 / (1.0 - delta0) * (1.0 - beta) / beta;
    if !(w > 2.0 && w < 4.0) {
        return invalid(format!("δ₀/(1-δ₀)·(1-β)/β = {w} is outside (2, 4)"));
    }
    let j = j as f64;
    Ok(2f64.ln() - 0.5 * (2.0 * PI * beta * (1.0 - beta) * j).ln() + j * z_of(beta, delta0)?.ln())
}

pub fn stirling_bound(j: u32, beta: f64, delta0: f64) -> Result<f64> {
    stirling_bound_ln(j, beta, delta0).map(f64::exp)
}
