use std::f64::consts::PI;
use std::sync::Arc;

use freqlab_core::frequency::*;
use freqlab_core::geometry::cone_vanishing_order_2d;
use freqlab_core::solver::*;
use freqlab_core::{CoefficientField, Domain, Mat2, Vec2};

fn id() -> CoefficientField {
    CoefficientField::identity()
}

fn cfg() -> FrequencyCfg {
    FrequencyCfg::default()
}

fn interp(d: &Domain, h: f64, f: impl Fn(Vec2) -> f64) -> DiscreteSolution {
    let mesh = Arc::new(Mesh::generate(d, &MeshOptions::uniform(h)).unwrap());
    DiscreteSolution::interpolate(mesh, id(), f)
}

fn re_pow(k: i32) -> impl Fn(Vec2) -> f64 {
    move |p: Vec2| (p.norm().powi(k)) * (k as f64 * p.y.atan2(p.x)).cos()
}

fn half_disk() -> Domain {
    Domain::half_ball([0.0, 0.0], 1.0).unwrap()
}

#[test]
fn mu_weight_examples() {
    let f = CoefficientField::constant(Mat2::new(4.0, 0.0, 0.0, 1.0)).unwrap();
    let o = Vec2::zeros();
    assert_eq!(mu_weight(&id(), o, Vec2::new(0.3, -2.0)).unwrap(), 1.0);
    assert!((mu_weight(&f, o, Vec2::new(1.0, 0.0)).unwrap() - 4.0).abs() < 1e-15);
    let s = 0.5f64.sqrt();
    assert!((mu_weight(&f, o, Vec2::new(s, s)).unwrap() - 2.5).abs() < 1e-14);
    assert!(mu_weight(&f, o, o).is_err());
}

#[test]
fn linear_height_and_energy() {
    let d = half_disk();
    let u = interp(&d, 1.0 / 64.0, |p| p.y);
    for r in [0.1, 0.25, 0.5] {
        let h = h_of(&u, &d, Vec2::zeros(), r, &cfg()).unwrap();
        let i = i_of(&u, &d, Vec2::zeros(), r, &cfg()).unwrap();
        assert!((h - PI / 2.0 * r * r).abs() < 1e-5 * r * r, "{r} {h}");
        assert!((i - PI / 2.0 * r).abs() < 1e-9 * r, "{r} {i}");
        let s = frequency_at(&u, &d, Vec2::zeros(), r, &cfg()).unwrap();
        assert!((s.n.unwrap() - 1.0).abs() < 1e-5);
    }
    let c = interp(&d, 1.0 / 64.0, |_| 2.0);
    assert!(i_of(&c, &d, Vec2::new(0.0, 0.3), 0.2, &cfg()).unwrap().abs() < 1e-20);
    let z = interp(&d, 1.0 / 64.0, |_| 0.0);
    assert_eq!(h_of(&z, &d, Vec2::new(0.0, 0.3), 0.2, &cfg()).unwrap(), 0.0);
    assert!(matches!(frequency(&z, &d, Vec2::new(0.0, 0.3), 0.2, &cfg()), Err(freqlab_core::Error::VanishingHeight { .. })));
}

#[test]
fn ball_leaving_the_chart_is_an_error() {
    let d = half_disk();
    let u = interp(&d, 1.0 / 32.0, |p| p.y);
    assert!(h_of(&u, &d, Vec2::new(0.0, 0.5), 0.6, &cfg()).is_err());
}

#[test]
fn homogeneous_polynomials_on_the_disk() {
    let d = Domain::disk([0.0, 0.0], 1.0).unwrap();
    let mesh = Arc::new(Mesh::generate(&d, &MeshOptions::uniform(1.0 / 256.0)).unwrap());
    for k in 1..=4 {
        let u = DiscreteSolution::interpolate(mesh.clone(), id(), re_pow(k));
        let ratio = h_of(&u, &d, Vec2::zeros(), 0.4, &cfg()).unwrap() / h_of(&u, &d, Vec2::zeros(), 0.2, &cfg()).unwrap();
        let target = 2f64.powi(2 * k);
        assert!((ratio / target - 1.0).abs() < 0.01, "{k} {ratio}");
        let p = frequency_profile(&u, &d, Vec2::zeros(), 0.1, 0.4, 8, &cfg()).unwrap();
        for n in &p.n_values {
            assert!((n - k as f64).abs() < 0.01 * k as f64, "{k} {n}");
        }
        let e = doubling_exponent(&u, &d, Vec2::zeros(), 0.2, &cfg()).unwrap();
        assert!((e - k as f64).abs() < 0.01 * k as f64);
        if k == 2 {
            let m = check_n_monotone(&p, 0.0, 1.0, &CheckCfg::default());
            assert!(m.pass && m.max_rel_drop < 1e-3, "{m:?}");
        }
    }
}

#[test]
fn profile_invariants_and_csv() {
    let d = half_disk();
    let u = interp(&d, 1.0 / 64.0, |p| p.y + 0.05 * re_pow(3)(p));
    let p = frequency_profile(&u, &d, Vec2::zeros(), 0.05, 0.5, 10, &cfg()).unwrap();
    assert!(p.radii.windows(2).all(|w| w[0] < w[1]));
    for j in 0..p.radii.len() {
        assert!(p.h_values[j] > 0.0);
        assert!((p.n_values[j] - p.radii[j] * p.i_values[j] / p.h_values[j]).abs() < 1e-12);
    }
    assert!(p.n_values.windows(2).all(|w| w[1] >= w[0] - 1e-4), "{:?}", p.n_values);
    assert!((p.n_values[0] - 1.0).abs() < 0.01);
    let mut out = Vec::new();
    p.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("r,H,I,N,admissible\n"));
    assert_eq!(text.lines().count(), 11);
    assert!(frequency_profile(&u, &d, Vec2::zeros(), 0.05, 0.5, 4, &cfg()).is_err());
}

#[test]
fn square_interior_monotonicity_at_two_levels() {
    let d = Domain::unit_square();
    let c = Vec2::new(0.5, 0.5);
    let profile = |h: f64| {
        let u = solve_dirichlet(&d, &id(), |p| p.x * p.x - p.y * p.y + 0.3 * p.x, h).unwrap();
        frequency_profile(&u, &d, c, 0.05, 0.45, 12, &cfg()).unwrap()
    };
    for p in [profile(1.0 / 64.0), profile(1.0 / 128.0)] {
        assert!(p.n_values.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-3)), "{:?}", p.n_values);
        assert!(p.h_values.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-3)));
    }
}

#[test]
fn h_derivative_harmonic_and_perturbed() {
    let d = half_disk();
    let u = interp(&d, 1.0 / 128.0, |p| p.y);
    let p = frequency_profile(&u, &d, Vec2::zeros(), 0.05, 0.4, 16, &cfg()).unwrap();
    let rep = check_h_derivative(&p, &u, &d, None, &cfg(), &CheckCfg::default()).unwrap();
    assert!(rep.pass && rep.max_residual < 1e-3, "{rep:?}");

    let f = CoefficientField::from_fn(|p| [1.0 + 0.1 * p.y, 0.0, 1.0], 1.1, 0.1, "1+0.1y").unwrap();
    let v = solve_dirichlet(&d, &f, |p| p.y + p.x * p.y, 1.0 / 96.0).unwrap();
    let p = frequency_profile(&v, &d, Vec2::zeros(), 0.05, 0.4, 16, &cfg()).unwrap();
    let rep = check_h_derivative(&p, &v, &d, None, &cfg(), &CheckCfg::default()).unwrap();
    assert!(rep.max_residual <= 10.0 * 0.1 + 2e-2, "{rep:?}");
    assert!(rep.pass);
}

#[test]
fn growth_sandwich() {
    let disk = Domain::disk([0.0, 0.0], 1.0).unwrap();
    let mesh = Arc::new(Mesh::generate(&disk, &MeshOptions::uniform(1.0 / 128.0)).unwrap());
    for k in 1..=3 {
        let u = DiscreteSolution::interpolate(mesh.clone(), id(), re_pow(k));
        let g = check_growth_bound(&u, &disk, Vec2::zeros(), 0.2, 2.0, &cfg(), &CheckCfg::default()).unwrap();
        assert!(g.pass, "{g:?}");
        assert!((g.log_ratio - 2.0 * k as f64 * 2f64.ln()).abs() < 1e-2);
    }
    let d = half_disk();
    let u = interp(&d, 1.0 / 64.0, |p| p.y);
    let g = check_growth_bound(&u, &d, Vec2::zeros(), 0.1, 4.0, &cfg(), &CheckCfg::default()).unwrap();
    assert!((g.log_ratio - 2.0 * 4f64.ln()).abs() < 1e-5 && g.pass);
    assert!(check_growth_bound(&u, &d, Vec2::zeros(), 0.1, 1.0, &cfg(), &CheckCfg::default()).is_err());
}

#[test]
fn annulus_sandwich() {
    let d = half_disk();
    let u = interp(&d, 1.0 / 64.0, |p| p.y);
    let a = check_annulus_bounds(&u, &d, Vec2::zeros(), 0.2, 0.1, &cfg(), &CheckCfg::default()).unwrap();
    assert!(a.pass, "{a:?}");
    // closed forms: H(r) = πr²/2, annulus mean of y² over the half-annulus
    let (r0, r1) = (0.2f64, 0.3f64);
    let mean = (PI / 2.0) * (r1.powi(4) - r0.powi(4)) / 4.0 / (PI * (r1 * r1 - r0 * r0));
    assert!((a.mean - mean).abs() < 1e-3 * mean);
    assert!((a.lower - r0 * r0 / 4.0).abs() < 1e-5 && (a.upper - r1 * r1 / 4.0).abs() < 1e-5);
    let thin = check_annulus_bounds(&u, &d, Vec2::zeros(), 0.2, 1e-5, &cfg(), &CheckCfg::default()).unwrap();
    assert!((thin.mean - thin.lower).abs() < 1e-3 * thin.lower);
    assert!((thin.upper - thin.lower).abs() < 1e-3 * thin.lower);
}

#[test]
fn ball_average_and_h_transfer() {
    let d = Domain::disk([0.0, 0.0], 1.0).unwrap();
    let mesh = Arc::new(Mesh::generate(&d, &MeshOptions::uniform(1.0 / 128.0)).unwrap());
    for k in 1..=3 {
        let u = DiscreteSolution::interpolate(mesh.clone(), id(), re_pow(k));
        let b = check_ball_average(&u, &d, Vec2::new(0.1, 0.0), 0.3, &cfg(), &CheckCfg::default()).unwrap();
        assert!(b.pass, "{b:?}");
        let t = check_h_transfer(&u, &d, Vec2::zeros(), Vec2::new(0.02, 0.01), 0.2, 0.2, 0.5, &cfg(), &CheckCfg::default()).unwrap();
        assert!(t.pass, "{t:?}");
    }
}

#[test]
fn center_perturbation() {
    let d = Domain::disk([0.0, 0.0], 1.0).unwrap();
    let u = interp(&d, 1.0 / 128.0, re_pow(2));
    let r = 0.1;
    let same = check_center_perturbation(&u, &d, Vec2::zeros(), Vec2::zeros(), r, 0.1, &cfg(), &CheckCfg::default()).unwrap();
    assert!(same.c_needed <= 1.0 + 1e-9 && same.pass);
    let off = check_center_perturbation(&u, &d, Vec2::zeros(), Vec2::new(0.05 * r, 0.0), r, 0.1, &cfg(), &CheckCfg::default()).unwrap();
    assert!(off.c_needed <= 2.0, "{off:?}");
    assert!(check_center_perturbation(&u, &d, Vec2::zeros(), Vec2::zeros(), r, 0.5, &cfg(), &CheckCfg::default()).is_err());
}

#[test]
fn vanishing_orders_of_polynomials() {
    let d = Domain::half_ball([0.0, 0.0], 1.0).unwrap();
    let radii = [0.2, 0.1, 0.05, 0.025];
    let u = interp(&d, 1.0 / 128.0, |p| p.y);
    let e = vanishing_order_estimate(&u, &d, Vec2::zeros(), &radii, &cfg()).unwrap();
    assert!((e.order - 1.0).abs() < 0.02);
    let v = interp(&d, 1.0 / 256.0, |p| 2.0 * p.x * p.y);
    let e = vanishing_order_estimate(&v, &d, Vec2::zeros(), &radii, &cfg()).unwrap();
    assert!((e.order - 2.0).abs() < 0.02, "{e:?}");
    assert!(vanishing_order_estimate(&v, &d, Vec2::zeros(), &[0.2, 0.1, 0.05], &cfg()).is_err());
    assert!(vanishing_order_estimate(&v, &d, Vec2::zeros(), &[0.2, 0.1, 0.04, 0.02], &cfg()).is_err());
}

fn cone_green(tau: f64) -> (Domain, DiscreteSolution) {
    let d = Domain::planar_cone([0.0, 0.0], tau, 1.0).unwrap();
    let opts = MeshOptions::graded(1.0 / 64.0, default_grading(&d, 1.0 / 64.0));
    let sys = System::build(&d, &id(), &opts, SolverOptions::default()).unwrap();
    let g = sys.green_function(Vec2::new(0.0, 0.6), &d).unwrap();
    (d, g)
}

#[test]
fn cone_green_function_orders() {
    for tau in [0.2, 1.0] {
        let (d, g) = cone_green(tau);
        let e = vanishing_order_estimate(&g, &d, Vec2::zeros(), &[0.2, 0.1, 0.05, 0.025], &cfg()).unwrap();
        let exact = cone_vanishing_order_2d(tau).unwrap();
        assert!((e.order - exact).abs() < 0.02, "{tau} {e:?} {exact}");
    }
}

#[test]
fn scaling_covariance() {
    let f = |p: Vec2| p.y + 0.3 * p.x * p.y + 0.1 * (p.y.powi(3) - 3.0 * p.x * p.x * p.y);
    let d1 = Domain::half_ball([0.0, 0.0], 1.0).unwrap();
    let d2 = Domain::half_ball([0.0, 0.0], 0.5).unwrap();
    let u1 = interp(&d1, 1.0 / 32.0, f);
    let u2 = interp(&d2, 1.0 / 64.0, |p| f(p * 2.0));
    for (x, r) in [(Vec2::zeros(), 0.4), (Vec2::new(0.2, 0.0), 0.3), (Vec2::new(-0.1, 0.3), 0.2)] {
        let a = frequency(&u1, &d1, x, r, &cfg()).unwrap();
        let b = frequency(&u2, &d2, x / 2.0, r / 2.0, &cfg()).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} {b}");
    }
}

#[test]
fn general_center_uses_the_ellipse() {
    // constant A: u(x,y) = y is A-harmonic for any constant A; N at a flat boundary point is 1
    let a = Mat2::new(2.0, 0.3, 0.3, 1.0);
    let f = CoefficientField::constant(a).unwrap();
    let d = half_disk();
    let mesh = Arc::new(Mesh::generate(&d, &MeshOptions::uniform(1.0 / 64.0)).unwrap());
    let u = DiscreteSolution::interpolate(mesh, f, |p| p.y);
    let p = frequency_profile(&u, &d, Vec2::zeros(), 0.05, 0.3, 8, &cfg()).unwrap();
    for n in &p.n_values {
        assert!((n - 1.0).abs() < 1e-3, "{n}");
    }
}
