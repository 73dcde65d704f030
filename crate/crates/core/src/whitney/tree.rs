use std::collections::HashMap;

use serde::Serialize;

use super::{Square, WhitneyCube, WhitneyDecomposition};
use crate::error::{invalid, Result};
use crate::geometry::Vec2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeNode {
    pub id: usize,
    /// Index into the decomposition's cube list.
    pub cube_index: usize,
    pub cube: WhitneyCube,
    pub generation: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl TreeNode {
    pub fn projection(&self) -> (f64, f64) {
        self.cube.projection()
    }
}

/// Rooted tree of generations D^k(R₀) selected by projection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyTree {
    pub nodes: Vec<TreeNode>,
    /// Node ids per generation, ordered left to right.
    pub generations: Vec<Vec<usize>>,
    pub w: f64,
    pub d0: usize,
}

impl WhitneyTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn depth(&self) -> usize {
        self.generations.len() - 1
    }

    /// D^j(node): descendants j generations below, left to right.
    pub fn descendants(&self, id: usize, j: usize) -> Vec<usize> {
        let mut cur = vec![id];
        for _ in 0..j {
            cur = cur.iter().flat_map(|&n| self.nodes[n].children.iter().copied()).collect();
        }
        cur
    }

    /// Whether every generation tiles Π(R₀) by dyadic intervals of length 2^{-k}ℓ(R₀).
    pub fn tiling_exact(&self) -> bool {
        let (a, b) = self.root().projection();
        let l0 = self.root().cube.side;
        self.generations.iter().enumerate().all(|(k, ids)| {
            let step = l0 / 2f64.powi(k as i32);
            ids.len() == 1 << k
                && ids.iter().enumerate().all(|(i, &n)| {
                    let (p, q) = self.nodes[n].projection();
                    p == a + i as f64 * step && q == p + step && q <= b
                })
        })
    }
}

/// Generations below the root cube `root` down to `depth`.
pub fn build_tree(wd: &WhitneyDecomposition, root: usize, depth: usize) -> Result<WhitneyTree> {
    let Some(r0) = wd.cubes.get(root).copied() else {
        return invalid(format!("root index {root} out of range"));
    };
    if depth > 30 {
        return invalid("tree depth above 30");
    }
    let (a, b) = r0.projection();
    if a < wd.chart[0] || b > wd.chart[1] {
        return invalid("Π(R₀) leaves the chart");
    }
    // candidates keyed by (side, left end)
    let mut by_proj: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (i, q) in wd.cubes.iter().enumerate() {
        let (p, _) = q.projection();
        if p >= a && p + q.side <= b && q.center.y < r0.center.y {
            by_proj.entry((q.side.to_bits(), p.to_bits())).or_default().push(i);
        }
    }
    let mut nodes = vec![TreeNode { id: 0, cube_index: root, cube: r0, generation: 0, parent: None, children: vec![] }];
    let mut generations = vec![vec![0usize]];
    for k in 1..=depth {
        let side = r0.side / 2f64.powi(k as i32);
        let mut gen = Vec::with_capacity(1 << k);
        for i in 0..(1usize << k) {
            let left = a + i as f64 * side;
            let Some(cands) = by_proj.get(&(side.to_bits(), left.to_bits())) else {
                return invalid(format!(
                    "chart too small for depth {depth}: no cube of side {side} over [{left}, {}]",
                    left + side
                ));
            };
            // lowest center, then lexicographic
            let &ci = cands
                .iter()
                .min_by(|&&p, &&q| {
                    let (u, v) = (wd.cubes[p].center, wd.cubes[q].center);
                    u.y.total_cmp(&v.y).then(u.x.total_cmp(&v.x))
                })
                .expect("nonempty");
            let parent = generations[k - 1][i / 2];
            let id = nodes.len();
            nodes.push(TreeNode { id, cube_index: ci, cube: wd.cubes[ci], generation: k, parent: Some(parent), children: vec![] });
            nodes[parent].children.push(id);
            gen.push(id);
        }
        generations.push(gen);
    }
    Ok(WhitneyTree { nodes, generations, w: wd.w, d0: wd.checks.d0 })
}

/// t(Q): the translate of Q along e₂ with its center on Σ.
pub fn vertical_translate(wd: &WhitneyDecomposition, q: &Square) -> Result<Square> {
    match wd.sigma_height(q.center.x) {
        Some(y) => Ok(Square::new(Vec2::new(q.center.x, y), q.side)),
        None => invalid(format!("abscissa {} leaves the chart", q.center.x)),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{whitney_decompose, WhitneyCfg};
    use super::*;
    use crate::geometry::Domain;

    #[test]
    fn half_plane_tree_tiles() {
        let d = Domain::graph_epigraph(vec![(0.0, 0.0)], [-1.0, 1.0, -0.5, 1.0]).unwrap();
        let wd = whitney_decompose(&d, &WhitneyCfg::new(1.0 / 512.0)).unwrap();
        let root = wd.cubes.iter().position(|q| q.side == 1.0 / 64.0 && q.projection().0 == 0.0).unwrap();
        let t = build_tree(&wd, root, 3).unwrap();
        assert!(t.tiling_exact());
        for k in 0..=3 {
            assert_eq!(t.generations[k].len(), 1 << k);
        }
        assert!(build_tree(&wd, root, 4).is_err());
        let q = t.nodes[3].cube.square();
        let tq = vertical_translate(&wd, &q).unwrap();
        assert_eq!(tq.center, Vec2::new(q.center.x, 0.0));
        assert_eq!(vertical_translate(&wd, &tq).unwrap(), tq);
    }
}
