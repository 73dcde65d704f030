use std::sync::Arc;

use freqlab_core::frequency::FrequencyCfg;
use freqlab_core::nodal::square_sign_state;
use freqlab_core::solver::Mesh;
use freqlab_core::whitney::*;
use freqlab_core::{CoefficientField, DiscreteSolution, Domain, Vec2};

fn half_plane() -> Domain {
    Domain::graph_epigraph(vec![(0.0, 0.0)], [-2.5, 2.5, -0.1, 2.5]).unwrap()
}

fn zigzag() -> Domain {
    let pts = (0..=16).map(|i| (-2.0 + 0.25 * i as f64, if i % 2 == 0 { 0.0 } else { 0.025 })).collect();
    Domain::graph_epigraph(pts, [-2.0, 2.0, -0.1, 2.0]).unwrap()
}

/// Lowest cube of the given side whose projection starts at x0.
fn cube_over(wd: &WhitneyDecomposition, side: f64, x0: f64) -> usize {
    wd.cubes
        .iter()
        .enumerate()
        .filter(|(_, q)| q.side == side && q.projection().0 == x0)
        .min_by(|a, b| a.1.center.y.total_cmp(&b.1.center.y))
        .expect("a cube over x0")
        .0
}

fn solution(d: &Domain, wd: &WhitneyDecomposition, tree: &WhitneyTree, f: impl Fn(Vec2) -> f64) -> DiscreteSolution {
    let mesh = Arc::new(Mesh::generate(d, &scan_mesh_options(wd, tree, 0.1)).unwrap());
    DiscreteSolution::interpolate(mesh, CoefficientField::identity(), f)
}

fn check_cubes(d: &Domain, wd: &WhitneyDecomposition) {
    assert!(wd.checks.all_pass(), "{:?}", wd.checks);
    let g = d.graph().unwrap();
    for q in &wd.cubes {
        let s = q.square();
        // 10Q ⊂ Ω: the dilate stays above the graph
        let big = s.dilate(10.0);
        let (lo, hi) = (big.lo(), big.hi());
        let floor = g.polyline(lo.x, hi.x).iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        assert!(lo.y > floor, "10Q meets Σ at {:?}", q.center);
        assert!(s.diam() < q.dist / 20.0);
        assert!(q.dist <= 0.5 * (wd.w - 1.0) * q.side);
    }
    for (i, a) in wd.cubes.iter().enumerate() {
        for b in &wd.cubes[i + 1..] {
            assert!(!a.square().overlaps(&b.square()));
        }
    }
}

#[test]
fn half_plane_decomposition() {
    let d = Domain::graph_epigraph(vec![(0.0, 0.0)], [-0.5, 0.5, -0.1, 0.5]).unwrap();
    let wd = whitney_decompose(&d, &WhitneyCfg::new(1.0 / 256.0)).unwrap();
    check_cubes(&d, &wd);
    assert!(wd.checks.max_touching <= 12);
    let (lo, hi) = wd.checks.dist_ratio;
    assert!(lo >= 20.0 * 2f64.sqrt() && hi <= 0.5 * (wd.w - 1.0));
    // layers: cube heights scale with their sides
    for q in &wd.cubes {
        let r = q.center.y / q.side;
        assert!((29.0..=58.0).contains(&r), "{r}");
    }
}

#[test]
fn lipschitz_decomposition_is_valid_and_deterministic() {
    let d = zigzag();
    let cfg = WhitneyCfg::new(1.0 / 256.0);
    let a = whitney_decompose(&d, &cfg).unwrap();
    check_cubes(&d, &a);
    let b = whitney_decompose(&d, &cfg).unwrap();
    assert_eq!(a.cubes, b.cubes);
    assert_eq!(a.checks, b.checks);
}

#[test]
fn generations_tile_the_root_projection() {
    let d = zigzag();
    let wd = whitney_decompose(&d, &WhitneyCfg::new(1.0 / 2048.0)).unwrap();
    let root = cube_over(&wd, 1.0 / 64.0, 0.0);
    let tree = build_tree(&wd, root, 5).unwrap();
    assert!(tree.tiling_exact());
    let (r0, r1) = tree.root().projection();
    for (k, gen) in tree.generations.iter().enumerate() {
        assert_eq!(gen.len(), 1 << k);
        let total: f64 = gen.iter().map(|&i| tree.nodes[i].cube.side).sum();
        assert_eq!(total, r1 - r0);
        for &i in gen {
            let n = &tree.nodes[i];
            assert_eq!(n.cube.side, tree.root().cube.side / (1 << k) as f64);
            if let Some(p) = n.parent {
                let (a, b) = n.projection();
                let (pa, pb) = tree.nodes[p].projection();
                assert!(pa <= a && b <= pb);
                assert!(n.cube.center.y < tree.root().cube.center.y);
            }
        }
    }
    assert!(build_tree(&wd, root, 7).is_err());
}

#[test]
fn selection_prefers_the_lowest_candidate() {
    let d = half_plane();
    let wd = whitney_decompose(&d, &WhitneyCfg::new(1.0 / 1024.0)).unwrap();
    let root = cube_over(&wd, 1.0 / 128.0, 0.0);
    let t1 = build_tree(&wd, root, 3).unwrap();
    let t2 = build_tree(&wd, root, 3).unwrap();
    let ry = t1.root().cube.center.y;
    for (a, b) in t1.nodes.iter().zip(&t2.nodes) {
        assert_eq!(a.cube_index, b.cube_index);
        // several stacked cubes share this projection; the lowest one wins
        let rivals: Vec<_> = wd
            .cubes
            .iter()
            .filter(|q| q.side == a.cube.side && q.projection() == a.projection() && q.center.y < ry)
            .collect();
        if a.parent.is_some() {
            assert!(rivals.len() >= 2);
        }
        assert!(rivals.iter().all(|q| q.center.y >= a.cube.center.y));
    }
}

#[test]
fn vertical_translates() {
    let flat = half_plane();
    let wd = whitney_decompose(&flat, &WhitneyCfg::new(1.0 / 256.0)).unwrap();
    let q = wd.cubes[wd.cubes.len() / 2].square();
    let t = vertical_translate(&wd, &q).unwrap();
    assert_eq!(t.center, Vec2::new(q.center.x, 0.0));
    assert_eq!(t.side, q.side);
    assert_eq!(vertical_translate(&wd, &t).unwrap(), t);

    let d = zigzag();
    let wd = whitney_decompose(&d, &WhitneyCfg::new(1.0 / 256.0)).unwrap();
    let g = d.graph().unwrap();
    for c in wd.cubes.iter().step_by(97) {
        let t = vertical_translate(&wd, &c.square()).unwrap();
        assert!((t.center.y - g.eval(c.center.x)).abs() < 1e-15);
        assert_eq!(vertical_translate(&wd, &t).unwrap(), t);
    }
    assert!(vertical_translate(&wd, &Square::new(Vec2::new(5.0, 1.0), 0.1)).is_err());
}

#[test]
fn key_lemma_for_a_positive_solution() {
    let d = half_plane();
    let wd = whitney_decompose(&d, &WhitneyCfg::new(1.0 / 1024.0)).unwrap();
    let tree = build_tree(&wd, cube_over(&wd, 1.0 / 128.0, 0.0), 2).unwrap();
    let u = solution(&d, &wd, &tree, |p| p.y);
    let r = key_lemma_scan(&u, &d, &tree, 8.0, 1, 2.0, &FrequencyCfg::default()).unwrap();
    assert_eq!(r.skipped, 0);
    assert!(r.max_ratio <= 1.0 + 1e-2, "{}", r.max_ratio);
    for row in &r.rows {
        // the balls sit above Σ, where u = y has a small interior frequency
        assert!(row.n_root.unwrap() < 1.0 + 1e-2);
        assert!(row.vacuous);
        assert_eq!(row.effective_fraction(), 1.0);
    }
}

#[test]
fn key_lemma_ratio_shrinks_with_s() {
    let d = half_plane();
    let wd = whitney_decompose(&d, &WhitneyCfg::new(1.0 / 1024.0)).unwrap();
    let tree = build_tree(&wd, cube_over(&wd, 1.0 / 128.0, 0.0), 2).unwrap();
    let u = solution(&d, &wd, &tree, |p| 3.0 * p.x * p.x * p.y - p.y.powi(3));
    let ratios: Vec<f64> = [8.0, 16.0, 32.0]
        .iter()
        .map(|&s| key_lemma_scan(&u, &d, &tree, s, 1, 2.0, &FrequencyCfg::default()).unwrap().max_ratio)
        .collect();
    eprintln!("max ratios {ratios:?}");
    assert!(ratios.iter().all(|r| r.is_finite()));
    assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2], "{ratios:?}");
}

#[test]
fn key_lemma_halving_away_from_the_origin() {
    // refine only over Π(R₀) so that seven generations fit in the chart
    let d = Domain::graph_epigraph(vec![(0.0, 0.0)], [-3.0, 3.0, -0.1, 3.0]).unwrap();
    let l0 = 1.0 / 64.0;
    let wd = whitney_decompose(&d, &WhitneyCfg::windowed(l0 / 128.0, 0.0, l0, 1.0 / 256.0)).unwrap();
    assert!(wd.checks.all_pass());
    let tree = build_tree(&wd, cube_over(&wd, l0, 0.0), 7).unwrap();
    let u = solution(&d, &wd, &tree, |p| 3.0 * p.x * p.x * p.y - p.y.powi(3));
    let r = key_lemma_scan(&u, &d, &tree, 64.0, 7, 2.0, &FrequencyCfg::default()).unwrap();
    let row = &r.rows[0];
    eprintln!("root N {:?} fraction {} max ratio {}", row.n_root, row.halving_fraction, r.max_ratio);
    assert_eq!(row.descendants, 128);
    assert_eq!(row.skipped, 0);
    let n = row.n_root.unwrap();
    assert!(n > 2.0 && n < 3.0, "{n}");
    assert!(row.halving_fraction > 0.25, "{}", row.halving_fraction);
    assert!(r.max_ratio < 1.0);
}

fn shallow_setup(f: impl Fn(Vec2) -> f64) -> (Domain, WhitneyDecomposition, WhitneyTree, DiscreteSolution) {
    let d = half_plane();
    let wd = whitney_decompose(&d, &WhitneyCfg::new(1.0 / 1024.0)).unwrap();
    let tree = build_tree(&wd, cube_over(&wd, 1.0 / 128.0, 0.0), 3).unwrap();
    let u = solution(&d, &wd, &tree, f);
    (d, wd, tree, u)
}

fn scan(d: &Domain, wd: &WhitneyDecomposition, tree: &WhitneyTree, u: &DiscreteSolution, k: usize) -> ModifiedFrequencyReport {
    let cfg = ScanCfg { k, ..ScanCfg::default() };
    let oracle = |sq: &Square| square_sign_state(u, d, sq);
    modified_frequency_scan(u, d, wd, tree, &cfg, &oracle).unwrap()
}

#[test]
fn positive_solution_follows_rule_a() {
    let (d, wd, tree, u) = shallow_setup(|p| p.y);
    for k in [1, 3] {
        let r = scan(&d, &wd, &tree, &u, k);
        assert!(r.key_lemma_failures.is_empty() && r.heredity_violations == 0);
        assert!(r.nodes.iter().all(|n| n.sign_state == SignState::NoZeros));
        for g in &r.generations {
            let card = 1usize << k;
            let m = (0.5 * card as f64).ceil() as usize;
            assert_eq!(g.ratios.iter().filter(|&&x| x == 0.5).count(), g.count / card * m);
            assert!(g.ratios.iter().all(|&x| x == 0.5 || x == 1.25));
            assert_eq!(g.min_parent_fraction, m as f64 / card as f64);
        }
        for n in &r.nodes[1..] {
            assert!(matches!(n.rule, Rule::AHalved | Rule::AGrown));
        }
    }
}

#[test]
fn sign_structure_of_2xy() {
    let (d, wd, tree, u) = shallow_setup(|p| 2.0 * p.x * p.y);
    let r = scan(&d, &wd, &tree, &u, 1);
    let n0 = ScanCfg::default().n0;
    assert!(r.key_lemma_failures.is_empty(), "{:?}", r.key_lemma_failures);
    assert_eq!(r.heredity_violations, 0);
    for n in &r.nodes {
        let over_origin = n.center[0] - 0.5 * n.side <= 0.0;
        let zeros = n.sign_state == SignState::HasZeros;
        assert_eq!(zeros, over_origin, "node {} at {:?}", n.id, n.center);
        if n.generation > 0 && !over_origin {
            assert!(n.n_prime < 0.5 * n0, "node {}: N' = {}", n.id, n.n_prime);
        }
        if n.generation > 0 && over_origin {
            assert_eq!(n.rule, Rule::B2);
        }
    }
    assert!(r.nodes.iter().any(|n| n.rule == Rule::B1));
    for g in &r.generations {
        assert!(g.ratios.iter().all(|&x| x == 0.5 || (x > 0.0 && x <= 1.25)));
    }
    // deterministic and serializable
    let again = scan(&d, &wd, &tree, &u, 1);
    assert_eq!(r, again);
    let json = serde_json::to_value(&r).unwrap();
    let node = &json["nodes"][0];
    for key in ["id", "parent", "center", "side", "generation", "N", "Nprime", "sign_state"] {
        assert!(node.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn oracle_failures_name_the_cube() {
    let (d, wd, tree, u) = shallow_setup(|p| p.y);
    let oracle = |_: &Square| -> freqlab_core::Result<SignState> { Err(freqlab_core::Error::InvalidInput("boom".into())) };
    let err = modified_frequency_scan(&u, &d, &wd, &tree, &ScanCfg::default(), &oracle).unwrap_err();
    assert!(err.to_string().contains("cube"), "{err}");
    let bad = ScanCfg { k: 9, ..ScanCfg::default() };
    let ok = |sq: &Square| square_sign_state(&u, &d, sq);
    assert!(modified_frequency_scan(&u, &d, &wd, &tree, &bad, &ok).is_err());
}
