use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use freqlab_core::cantor::*;
use freqlab_core::nodal::box_counting_dimension;
use freqlab_core::solver::{harmonic_measure, BoundaryArc};
use freqlab_core::{CoefficientField, Domain, Vec2};

const RADII: [f64; 3] = [1.0 / 3.0, 1.0 / 9.0, 1.0 / 27.0];

fn spec(k: u32, depth: u32, a: f64) -> CantorSpec {
    CantorSpec::new(k, depth, a).unwrap()
}

#[test]
fn interval_lengths() {
    for k in [1, 2, 4] {
        let sp = spec(k, 5, 1.0);
        let iv = cantor_intervals(&sp, 5).unwrap();
        assert_eq!(iv.len(), 32);
        let len = (0.5 * (1.0 - sp.lambda())).powi(5);
        assert!(iv.iter().all(|(l, r)| ((r - l) - len).abs() < 1e-15));
        assert!(iv.windows(2).all(|w| w[0].1 < w[1].0));
    }
    assert!(cantor_intervals(&spec(1, 1, 1.0), 21).is_err());
}

#[test]
fn dimension_matches_box_counting() {
    for (k, expect) in [(1u32, 2f64.ln() / 3f64.ln()), (4, 2f64.ln() / 2.25f64.ln())] {
        let sp = spec(k, 12, 1.0);
        assert!((cantor_dimension(&sp) - expect).abs() < 1e-12);
        let pts: Vec<Vec2> = cantor_intervals(&sp, 12)
            .unwrap()
            .iter()
            .flat_map(|&(l, r)| [Vec2::new(l, 0.0), Vec2::new(r, 0.0)])
            .collect();
        let b = box_counting_dimension(&pts, 14).unwrap();
        assert!((b.slope - expect).abs() <= 0.05, "k {k}: {} vs {expect}", b.slope);
    }
    // λ → 0 sends the dimension to 1
    assert!(cantor_dimension(&spec(500, 1, 1.0)) > 0.99);
}

#[test]
fn boundary_slope_is_the_aperture() {
    for a in [0.5, 1.0, 2.0] {
        let g = cantor_graph(&spec(1, 6, a)).unwrap();
        assert!((g.slope_tau() - 1.0 / a).abs() < 1e-12, "a {a}: {}", g.slope_tau());
    }
}

#[test]
fn theta_is_a_proper_angle_and_blocked_at_every_scale() {
    let sp = spec(1, 6, 1.0);
    let g = 2.0 * sp.gap_scale();
    let mut s = 1.0;
    while s > g {
        let t = theta(&sp, 0.0, s).unwrap();
        assert!(t > 0.0 && t <= PI);
        s *= 0.97;
    }
    // x = 0 has digit 0 = k-1 at every scale, so every band is obstructed
    for a in [0.5, 1.0, 2.0] {
        let sp = spec(1, 6, a);
        let mut eps = f64::INFINITY;
        for j in 1..=4 {
            let (lo, hi) = (2.1 * 3f64.powi(-j), 3f64.powi(1 - j));
            for i in 0..=40 {
                let s = lo + (hi - lo) * i as f64 / 40.0;
                eps = eps.min(PI - theta(&sp, 0.0, s.min(1.0)).unwrap());
            }
        }
        eprintln!("aperture {a}: ε(a) = {eps:.4}");
        assert!(eps > 0.1, "a {a}: {eps}");
    }
    assert!(theta(&sp, 0.0, 1e-5).is_err());
}

#[test]
fn bound_is_monotone_and_capped() {
    let sp = spec(1, 6, 1.0);
    let rs: Vec<f64> = (1..=30).map(|i| 0.9 * 0.8f64.powi(i)).filter(|&r| r > 2.0 * sp.gap_scale()).collect();
    let b: Vec<f64> = rs.iter().map(|&r| ahlfors_bound(&sp, 0.0, r, ThetaSource::Geometry).unwrap().bound).collect();
    assert!(b.windows(2).all(|w| w[1] <= w[0]));
    assert!(b.iter().all(|&v| v <= 8.0 / PI));
    assert!(ahlfors_bound(&sp, 0.0, 1e-5, ThetaSource::Geometry).is_err());
}

#[test]
fn normal_points_decay_superlinearly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sp = spec(1, 8, 1.0);
    for _ in 0..3 {
        let digits = sample_normal_digits(1, 8, &mut rng);
        let x = digits_value(&digits, 1);
        let f = digit_frequencies(&digits, 1);
        assert!(f[0] > 0.0 && f[2] > 0.0);
        let ratios: Vec<f64> = (2..=6)
            .map(|j| {
                let r = 3f64.powi(-j);
                ahlfors_bound(&sp, x, r, ThetaSource::Geometry).unwrap().bound / r
            })
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "x {x}: {ratios:?}");
        let b2 = ahlfors_bound(&sp, x, 3f64.powi(-2), ThetaSource::Geometry).unwrap().bound;
        let b6 = ahlfors_bound(&sp, x, 3f64.powi(-6), ThetaSource::Geometry).unwrap().bound;
        let exponent = (b2 / b6).ln() / 3f64.powi(4).ln();
        assert!(exponent > 1.05, "x {x}: {exponent}");
    }
}

#[test]
fn measured_density_is_dominated_by_the_bound() {
    let sp = spec(1, 6, 1.0);
    let m = measured_density(&sp, 0.0, &RADII, &DensityCfg::for_spec(&sp)).unwrap();
    let mut last = f64::INFINITY;
    let mut last_ratio = f64::INFINITY;
    for (r, rep) in RADII.iter().zip(&m) {
        let b = ahlfors_bound(&sp, 0.0, *r, ThetaSource::Geometry).unwrap();
        assert!(rep.measured <= b.bound, "r {r}: {} > {}", rep.measured, b.bound);
        assert!((rep.measured - rep.measured_kernel).abs() < 1e-8);
        assert!(rep.density <= last);
        last = rep.density;
        let ratio = b.bound / r;
        assert!(last_ratio / ratio >= 1.2 || last_ratio.is_infinite(), "{last_ratio} -> {ratio}");
        last_ratio = ratio;
    }
    // deeper truncation barely moves ω at the coarsest radius
    let deeper = spec(1, 7, 1.0);
    let m7 = measured_density(&deeper, 0.0, &RADII[..1], &DensityCfg::for_spec(&deeper)).unwrap();
    assert!((m7[0].measured - m[0].measured).abs() <= 0.02 * m[0].measured);
    let coarse = DensityCfg { h: sp.gap_scale(), ..DensityCfg::for_spec(&sp) };
    assert!(measured_density(&sp, 0.0, &RADII, &coarse).is_err());
}

#[test]
fn flat_density_is_bounded() {
    let d = Domain::half_ball([0.0, 0.0], 2.0).unwrap();
    let pole = Vec2::new(0.0, 1.0);
    for r in RADII {
        let w = harmonic_measure(&d, &CoefficientField::identity(), pole, &BoundaryArc::Ball { center: Vec2::zeros(), radius: r }, r / 16.0).unwrap();
        // Poisson kernel of the half plane at the foot of the pole is 1/π
        let density = w / (2.0 * r);
        assert!(density > 0.2 && density < 1.0 / PI * 1.1, "r {r}: {density}");
    }
}
