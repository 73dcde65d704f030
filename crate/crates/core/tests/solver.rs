use std::f64::consts::PI;
use std::sync::Arc;

use freqlab_core::solver::*;
use freqlab_core::{CoefficientField, Domain, Mat2, Vec2};

fn id() -> CoefficientField {
    CoefficientField::identity()
}

fn half_disk() -> Domain {
    Domain::half_ball([0.0, 0.0], 1.0).unwrap()
}

fn system(d: &Domain, f: &CoefficientField, h: f64) -> System {
    System::build(d, f, &MeshOptions::uniform(h), SolverOptions::default()).unwrap()
}

#[test]
fn linear_data_is_reproduced() {
    let d = half_disk();
    let u = solve_dirichlet(&d, &id(), |p| p.y, 1.0 / 32.0).unwrap();
    assert!(u.residual_norm() <= 1e-10);
    let err = u.mesh().nodes().iter().zip(u.values()).map(|(p, v)| (p.y - v).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn quadratic_error_is_second_order() {
    let d = Domain::unit_square();
    let h = 1.0 / 64.0;
    let exact = |p: Vec2| p.x * p.x - p.y * p.y;
    let u = solve_dirichlet(&d, &id(), exact, h).unwrap();
    let err = u.mesh().nodes().iter().zip(u.values()).map(|(p, v)| (exact(*p) - v).abs()).fold(0.0, f64::max);
    assert!(err <= h * h, "{err}");
}

#[test]
fn smooth_solution_converges_at_second_order() {
    let d = Domain::unit_square();
    let exact = |p: Vec2| p.x.exp() * p.y.sin();
    let errs: Vec<f64> = [1.0 / 40.0, 1.0 / 80.0, 1.0 / 160.0]
        .iter()
        .map(|&h| {
            let u = solve_dirichlet(&d, &id(), exact, h).unwrap();
            u.mesh().nodes().iter().zip(u.values()).map(|(p, v)| (exact(*p) - v).abs()).fold(0.0, f64::max)
        })
        .collect();
    for w in errs.windows(2) {
        assert!(w[0] / w[1] >= 3.0, "{errs:?}");
    }
}

#[test]
fn structured_max_principle() {
    let d = Domain::unit_square();
    let data = |p: Vec2| (3.0 * p.x).sin() * p.y.cos();
    let u = solve_dirichlet(&d, &id(), data, 1.0 / 64.0).unwrap();
    let sys = system(&d, &id(), 1.0 / 64.0);
    let b: Vec<f64> = sys.boundary_nodes().iter().map(|&i| u.values()[i]).collect();
    let lo = b.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(u.values().iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
}

#[test]
fn variable_coefficient_solution_is_monotone_on_the_axis() {
    let d = half_disk();
    let f = CoefficientField::from_fn(|p| [1.0 + 0.1 * p.y, 0.0, 1.0], 1.1, 0.1, "1+0.1y").unwrap();
    let data = |p: Vec2| if p.y.abs() < 1e-12 { 0.0 } else { 1.0 };
    let u = solve_dirichlet(&d, &f, data, 1.0 / 48.0).unwrap();
    for (p, v) in u.mesh().nodes().iter().zip(u.values()) {
        if d.contains(*p) && d.dist_to_boundary(*p) > 1e-9 {
            assert!(*v > 0.0 && *v < 1.0, "{p:?} {v}");
        }
    }
    let line: Vec<f64> = (1..20).map(|k| u.eval(Vec2::new(0.0, k as f64 * 0.05))).collect();
    assert!(line.windows(2).all(|w| w[1] > w[0]), "{line:?}");
    // refined-mesh oracle on the axis
    let fine = solve_dirichlet(&d, &f, data, 1.0 / 96.0).unwrap();
    for k in 1..10 {
        let p = Vec2::new(0.0, k as f64 * 0.1);
        assert!((u.eval(p) - fine.eval(p)).abs() < 5e-3);
    }
}

#[test]
fn disk_green_function_matches_logarithm() {
    let d = Domain::disk([0.0, 0.0], 1.0).unwrap();
    let g = green_function(&d, &id(), Vec2::zeros(), 1.0 / 128.0).unwrap();
    for k in 1..=9 {
        let r = 0.1 * k as f64;
        for j in 0..8 {
            let th = j as f64 * 0.7 + 0.1;
            let v = g.eval(Vec2::new(r * th.cos(), r * th.sin()));
            let exact = -(r.ln()) / (2.0 * PI);
            assert!((v - exact).abs() <= 0.02 * exact, "r={r} {v} {exact}");
        }
    }
    let sys = system(&d, &id(), 1.0 / 128.0);
    for &i in sys.interior_nodes() {
        assert!(g.values()[i] > 0.0);
    }
}

#[test]
fn green_pole_too_close_is_rejected() {
    let d = half_disk();
    assert!(matches!(
        green_function(&d, &id(), Vec2::new(0.0, 0.05), 1.0 / 64.0),
        Err(freqlab_core::Error::PoleTooClose { .. })
    ));
}

#[test]
fn half_disk_green_function_is_comparable_to_height() {
    let d = half_disk();
    let ratios = |h: f64| -> (f64, f64) {
        let g = green_function(&d, &id(), Vec2::new(0.0, 0.5), h).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (p, v) in g.mesh().nodes().iter().zip(g.values()) {
            if p.y > 0.02 && p.y < 0.1 && p.x.abs() < 0.6 {
                lo = lo.min(v / p.y);
                hi = hi.max(v / p.y);
            }
        }
        (lo, hi)
    };
    let (a, b) = ratios(1.0 / 64.0);
    let (c, e) = ratios(1.0 / 128.0);
    assert!(a > 0.0 && c > 0.0);
    assert!(b / a < 10.0 && e / c < 10.0);
    assert!((a - c).abs() < 0.1 * c && (b - e).abs() < 0.1 * e);
}

#[test]
fn harmonic_measure_total_and_symmetry() {
    let d = Domain::disk([0.0, 0.0], 1.0).unwrap();
    let sys = system(&d, &id(), 1.0 / 64.0);
    let all = sys.harmonic_measure(Vec2::new(0.1, 0.2), &BoundaryArc::All).unwrap();
    assert!((all - 1.0).abs() < 1e-9);
    let q = sys
        .harmonic_measure(Vec2::zeros(), &BoundaryArc::Angular { center: Vec2::zeros(), theta0: 0.3, theta1: 0.3 + PI / 2.0 })
        .unwrap();
    assert!((q - 0.25).abs() < 1e-3, "{q}");
    // kernel route agrees with the indicator solve
    let k = sys.harmonic_measure_kernel(Vec2::new(0.1, 0.2)).unwrap();
    assert!((k.total() - 1.0).abs() < 1e-8);
    let arc = BoundaryArc::Angular { center: Vec2::zeros(), theta0: -0.5, theta1: 1.0 };
    let direct = sys.harmonic_measure(Vec2::new(0.1, 0.2), &arc).unwrap();
    let kern = sys.measure_of(&k, &arc).unwrap();
    assert!((direct - kern).abs() < 1e-8, "{direct} {kern}");
}

#[test]
fn half_plane_poisson_kernel() {
    let d = Domain::half_ball([0.0, 0.0], 20.0).unwrap();
    let grading = vec![Grading { center: Vec2::new(0.0, 0.5), h_min: 0.01, grade: 0.2 }];
    let sys = System::build(&d, &id(), &MeshOptions::graded(1.0, grading), SolverOptions::default()).unwrap();
    let w = sys.harmonic_measure(Vec2::new(0.0, 1.0), &BoundaryArc::SigmaInterval { x0: -1.0, x1: 1.0 }).unwrap();
    assert!((w - 0.5).abs() < 1e-2, "{w}");
}

#[test]
fn degenerate_arc_is_rejected() {
    let d = half_disk();
    let sys = system(&d, &id(), 1.0 / 32.0);
    let r = sys.harmonic_measure(Vec2::new(0.0, 0.5), &BoundaryArc::SigmaInterval { x0: 0.0, x1: 0.01 });
    assert!(matches!(r, Err(freqlab_core::Error::DegenerateArc { .. })));
}

#[test]
fn harmonic_measure_is_monotone_in_the_arc() {
    let d = half_disk();
    let sys = system(&d, &id(), 1.0 / 64.0);
    let k = sys.harmonic_measure_kernel(Vec2::new(0.1, 0.4)).unwrap();
    let mut last = 0.0;
    for j in 1..10 {
        let a = 0.1 * j as f64;
        let m = sys.measure_of(&k, &BoundaryArc::SigmaInterval { x0: -a, x1: a }).unwrap();
        assert!(m > last);
        last = m;
    }
}

#[test]
fn square_spectrum() {
    let d = Domain::unit_square();
    let pairs = dirichlet_eigenpairs(&d, &id(), 3, 1.0 / 256.0).unwrap();
    let pi2 = PI * PI;
    let exact = [2.0 * pi2, 5.0 * pi2, 5.0 * pi2];
    for (p, e) in pairs.iter().zip(exact) {
        assert!((p.lambda - e).abs() < 0.01 * e, "{} {}", p.lambda, e);
    }
    assert!(pairs[0].lambda < pairs[1].lambda && pairs[1].lambda <= pairs[2].lambda * (1.0 + 1e-10), "{:?}", pairs.iter().map(|p| p.lambda).collect::<Vec<_>>());
    let first = pairs[0].vector.values();
    let s = first.iter().cloned().fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a }).signum();
    let sys = system(&d, &id(), 1.0 / 256.0);
    for &i in sys.interior_nodes() {
        assert!(first[i] * s > 0.0);
    }
}

#[test]
fn eigenpairs_are_orthonormal_rayleigh_quotients() {
    let d = half_disk();
    let sys = system(&d, &id(), 1.0 / 32.0);
    let pairs = eigenpairs(&sys, 6, &EigenOptions::default()).unwrap();
    let m = sys.lumped_mass();
    for (a, p) in pairs.iter().enumerate() {
        assert!(p.lambda > 0.0);
        let v = p.vector.values();
        let rq = sys.energy(v) / v.iter().zip(m).map(|(x, w)| x * x * w).sum::<f64>();
        assert!((rq - p.lambda).abs() <= 1e-8 * p.lambda);
        for q in &pairs[a..] {
            let ip: f64 = v.iter().zip(q.vector.values()).zip(m).map(|((x, y), w)| x * y * w).sum();
            let target = if std::ptr::eq(p, q) { 1.0 } else { 0.0 };
            assert!((ip - target).abs() < 1e-8, "{ip}");
        }
    }
    assert!(pairs.windows(2).all(|w| w[0].lambda <= w[1].lambda));
}

#[test]
fn gradients() {
    let d = half_disk();
    let mesh = Arc::new(Mesh::generate(&d, &MeshOptions::uniform(1.0 / 32.0)).unwrap());
    let u = DiscreteSolution::interpolate(mesh.clone(), id(), |p| p.y);
    assert!(u.gradient().iter().all(|g| (g - Vec2::new(0.0, 1.0)).norm() < 1e-12));
    let c = DiscreteSolution::interpolate(mesh.clone(), id(), |_| 3.0);
    assert!(c.gradient().iter().all(|g| g.norm() < 1e-12));
    let q = DiscreteSolution::interpolate(mesh.clone(), id(), |p| p.x * p.x - p.y * p.y);
    for (t, g) in q.gradient().iter().enumerate() {
        let x = mesh.centroid(t);
        assert!((g - Vec2::new(2.0 * x.x, -2.0 * x.y)).norm() <= 2.0 * mesh.h());
    }
}

#[test]
fn normal_traces() {
    let d = half_disk();
    let xs: Vec<f64> = (-8..=8).map(|k| k as f64 * 0.1).collect();
    let u = solve_dirichlet(&d, &id(), |p| p.y, 1.0 / 64.0).unwrap();
    for t in normal_derivative_trace(&u, &d, &xs).unwrap() {
        assert!((t - 1.0).abs() < 1e-6);
    }
    let v = solve_dirichlet(&d, &id(), |p| 2.0 * p.x * p.y, 1.0 / 64.0).unwrap();
    for (x, t) in xs.iter().zip(normal_derivative_trace(&v, &d, &xs).unwrap()) {
        assert!((t - 2.0 * x).abs() < 1e-2, "{x} {t}");
    }
    // near the chart edge
    assert!(normal_derivative_trace(&u, &d, &[0.999]).is_err());
    // data not vanishing on Σ
    let w = solve_dirichlet(&d, &id(), |_| 1.0, 1.0 / 32.0).unwrap();
    assert!(normal_derivative_trace(&w, &d, &[0.0]).is_err());
}

#[test]
fn green_trace_is_comparable_to_poisson_density() {
    // half-disk Poisson kernel at pole (0, 1/2) via the conformal image of the half-plane
    let d = half_disk();
    let pole = Vec2::new(0.0, 0.5);
    let g = green_function(&d, &id(), pole, 1.0 / 128.0).unwrap();
    let xs: Vec<f64> = (-6..=6).map(|k| k as f64 * 0.1).collect();
    let tr = normal_derivative_trace(&g, &d, &xs).unwrap();
    for (x, t) in xs.iter().zip(tr) {
        // ∂_ν G for the half-disk: half-plane kernel minus its reflection in the unit circle
        let p = |x: f64, a: Vec2| a.y / (PI * ((x - a.x).powi(2) + a.y * a.y));
        let refl = pole / pole.norm_squared();
        let exact = p(*x, pole) - p(*x, refl);
        let ratio = t / exact;
        assert!(ratio > 0.5 && ratio < 2.0, "{x} {ratio}");
    }
}

#[test]
fn energy_identity_and_comparison() {
    let d = half_disk();
    let f = CoefficientField::from_fn(|p| [1.0 + 0.05 * p.x, 0.02 * p.y, 1.0], 1.1, 0.06, "mild").unwrap();
    let sys = system(&d, &f, 1.0 / 48.0);
    let u1 = sys.solve_dirichlet(|p| p.x + 0.5).unwrap();
    let u2 = sys.solve_dirichlet(|p| p.x + 0.5 + 0.2 * p.y * p.y).unwrap();
    let a = sys.energy(u1.values());
    let b = sys.boundary_flux_pairing(u1.values());
    assert!((a - b).abs() <= 1e-8 * a.abs());
    let bad = u1.values().iter().zip(u2.values()).filter(|(x, y)| **x > **y + 1e-6).count();
    assert_eq!(bad, 0);
}

#[test]
fn abs_of_solution_is_a_subsolution() {
    let d = half_disk();
    let mesh = Arc::new(Mesh::generate(&d, &MeshOptions::uniform(1.0 / 64.0)).unwrap());
    let u = DiscreteSolution::interpolate(mesh.clone(), id(), |p| 2.0 * p.x * p.y);
    for c in [Vec2::new(0.3, 0.0), Vec2::new(-0.2, 0.1), Vec2::new(0.0, 0.0)] {
        let rad = 0.25;
        let grad_phi = |p: Vec2| {
            let s = (p - c).norm_squared() / (rad * rad);
            if s >= 1.0 {
                Vec2::zeros()
            } else {
                (p - c) * (-4.0 * (1.0 - s) / (rad * rad))
            }
        };
        let mut pairing = 0.0;
        for t in 0..mesh.triangles().len() {
            let x = mesh.centroid(t);
            let sign = u.eval(x).signum();
            pairing += mesh.area(t) * (u.gradient_on(t) * sign).dot(&grad_phi(x));
        }
        assert!(pairing <= 1e-3, "{pairing}");
    }
}

#[test]
fn exports() {
    let d = half_disk();
    let mesh = Arc::new(Mesh::generate(&d, &MeshOptions::uniform(0.25)).unwrap());
    let mut off = Vec::new();
    mesh.write_off(&mut off).unwrap();
    let text = String::from_utf8(off).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("OFF"));
    let counts: Vec<usize> = lines.next().unwrap().split(' ').map(|s| s.parse().unwrap()).collect();
    assert_eq!(counts[..2], [mesh.n_nodes(), mesh.triangles().len()]);
    let u = DiscreteSolution::interpolate(mesh.clone(), id(), |p| p.y);
    let mut csv = Vec::new();
    u.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("x,y,u\n"));
    assert_eq!(text.lines().count(), mesh.n_nodes() + 1);
    let _ = Mat2::identity();
}

#[test]
fn boundary_nodes_lie_on_the_boundary() {
    for d in [
        half_disk(),
        Domain::planar_cone([0.0, 0.0], -0.2, 1.0).unwrap(),
        Domain::graph_epigraph(vec![(-1.0, 0.0), (0.0, 0.1), (1.0, 0.0)], [-1.0, 1.0, -1.0, 1.0]).unwrap(),
    ] {
        let m = Mesh::generate(&d, &MeshOptions::uniform(1.0 / 32.0)).unwrap();
        assert!(m.min_angle_deg() >= 20.0);
        for (p, t) in m.nodes().iter().zip(m.tags()) {
            if t.is_boundary() {
                assert!(d.dist_to_boundary(*p) <= 1e-12 * d.scale());
            }
            if *t == NodeTag::Sigma {
                assert!(d.on_sigma(*p, 1e-9));
            }
        }
    }
}
