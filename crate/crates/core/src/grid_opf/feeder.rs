use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Generator, GridError, GridModel};
use crate::rng;

/// Branch between two nodes with series resistance and reactance (p.u.).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
}

/// Bundled 8-node demonstration feeder.
pub const DEMO_FEEDER_JSON: &str = include_str!("../../data/demo_feeder_8.json");

/// Parent of every node and the line leading to it, rooted at node 0.
fn orient(n_nodes: usize, lines: &[Line]) -> Result<Vec<Option<(usize, Line)>>, GridError> {
    if n_nodes < 2 {
        return Err(GridError::NonRadial(format!(
            "need at least 2 nodes, got {n_nodes}"
        )));
    }
    if lines.len() != n_nodes - 1 {
        return Err(GridError::NonRadial(format!(
            "{} lines for {n_nodes} nodes, a tree has {}",
            lines.len(),
            n_nodes - 1
        )));
    }
    let mut adj = vec![Vec::new(); n_nodes];
    for l in lines {
        if l.from >= n_nodes || l.to >= n_nodes || l.from == l.to {
            return Err(GridError::NonRadial(format!(
                "bad line {} -> {}",
                l.from, l.to
            )));
        }
        if !(l.r.is_finite() && l.x.is_finite() && l.r >= 0.0 && l.x >= 0.0) {
            return Err(GridError::InvalidModel(format!(
                "line {} -> {} has invalid impedance",
                l.from, l.to
            )));
        }
        adj[l.from].push((l.to, *l));
        adj[l.to].push((l.from, *l));
    }
    let mut parent: Vec<Option<(usize, Line)>> = vec![None; n_nodes];
    let mut seen = vec![false; n_nodes];
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(u) = stack.pop() {
        for &(v, line) in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            parent[v] = Some((u, line));
            stack.push(v);
        }
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(GridError::NonRadial(format!(
            "node {v} is not connected to the root"
        )));
    }
    Ok(parent)
}

/// Builds `Zp`, `Zq` by the common-path rule: entry `(i, j)` is the total
/// resistance (reactance) of the lines shared by the root paths of `i` and
/// `j`. Node 0 is the slack bus with `V₀ = 1` everywhere.
pub fn generate_synthetic_feeder(
    n_nodes: usize,
    lines: &[Line],
    generators: Vec<Generator>,
) -> Result<GridModel, GridError> {
    let parent = orient(n_nodes, lines)?;
    // lines on the root path of each node, identified by their child node
    let paths: Vec<Vec<usize>> = (0..n_nodes)
        .map(|mut v| {
            let mut path = Vec::new();
            while let Some((p, _)) = parent[v] {
                path.push(v);
                v = p;
            }
            path
        })
        .collect();
    let mut zp = vec![vec![0.0; n_nodes]; n_nodes];
    let mut zq = vec![vec![0.0; n_nodes]; n_nodes];
    for i in 0..n_nodes {
        for j in i..n_nodes {
            let (mut r, mut x) = (0.0, 0.0);
            for &e in &paths[i] {
                if paths[j].contains(&e) {
                    let line = parent[e].expect("path edge has a parent").1;
                    r += line.r;
                    x += line.x;
                }
            }
            zp[i][j] = r;
            zp[j][i] = r;
            zq[i][j] = x;
            zq[j][i] = x;
        }
    }
    let grid = GridModel {
        n_nodes,
        v0: vec![1.0; n_nodes],
        zp,
        zq,
        v_min: 0.95,
        v_max: 1.05,
        generators,
    };
    grid.validate()?;
    Ok(grid)
}

/// Random tree on `n_nodes` nodes with `n_gen` generators at distinct
/// non-root nodes.
pub fn random_radial_feeder(
    n_nodes: usize,
    n_gen: usize,
    seed: u64,
) -> Result<GridModel, GridError> {
    let mut rng = rng::stream(seed, 0);
    let lines: Vec<Line> = (1..n_nodes)
        .map(|to| Line {
            from: rng.random_range(0..to),
            to,
            r: rng.random_range(0.005..0.03),
            x: rng.random_range(0.005..0.03),
        })
        .collect();
    let mut nodes: Vec<usize> = (1..n_nodes).collect();
    let mut generators = Vec::new();
    for _ in 0..n_gen.min(nodes.len()) {
        let node = nodes.swap_remove(rng.random_range(0..nodes.len()));
        generators.push(Generator {
            node,
            p_cap: rng.random_range(0.1..1.0),
            q_cap: rng.random_range(0.05..0.5),
        });
    }
    generate_synthetic_feeder(n_nodes, &lines, generators)
}

/// Lines of the bundled demo feeder: a main trunk `0-1-2-3-4` with laterals
/// `2-5-6` and `1-7`; every non-root node hosts a generator.
pub fn demo_lines() -> Vec<Line> {
    let l = |from, to, r, x| Line { from, to, r, x };
    vec![
        l(0, 1, 0.02, 0.016),
        l(1, 2, 0.03, 0.02),
        l(2, 3, 0.04, 0.024),
        l(3, 4, 0.05, 0.03),
        l(2, 5, 0.04, 0.024),
        l(5, 6, 0.05, 0.03),
        l(1, 7, 0.06, 0.04),
    ]
}

pub fn demo_generators() -> Vec<Generator> {
    let g = |node, p_cap, q_cap| Generator { node, p_cap, q_cap };
    vec![
        g(1, 0.3, 0.1),
        g(2, 0.3, 0.1),
        g(3, 0.3, 0.1),
        g(4, 0.4, 0.15),
        g(5, 0.3, 0.1),
        g(6, 0.4, 0.15),
        g(7, 0.3, 0.1),
    ]
}

/// The bundled demo feeder, as shipped in `data/demo_feeder_8.json`.
pub fn demo_feeder() -> GridModel {
    GridModel::from_json(DEMO_FEEDER_JSON).expect("bundled feeder is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_by_hand() {
        let g = generate_synthetic_feeder(
            2,
            &[Line {
                from: 0,
                to: 1,
                r: 0.1,
                x: 0.2,
            }],
            vec![],
        )
        .unwrap();
        assert_eq!(g.zp, vec![vec![0.0, 0.0], vec![0.0, 0.1]]);
        assert_eq!(g.zq, vec![vec![0.0, 0.0], vec![0.0, 0.2]]);
    }

    #[test]
    fn symmetric_star() {
        let lines: Vec<Line> = (1..5)
            .map(|to| Line {
                from: 0,
                to,
                r: 0.05,
                x: 0.01,
            })
            .collect();
        let g = generate_synthetic_feeder(5, &lines, vec![]).unwrap();
        for i in 1..5 {
            assert_eq!(g.zp[i][i], 0.05);
            for j in 1..5 {
                if i != j {
                    assert_eq!(g.zp[i][j], 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_non_radial() {
        let l = |from, to| Line {
            from,
            to,
            r: 0.1,
            x: 0.1,
        };
        assert!(matches!(
            generate_synthetic_feeder(3, &[l(0, 1), l(1, 2), l(2, 0)], vec![]),
            Err(GridError::NonRadial(_))
        ));
        assert!(matches!(
            generate_synthetic_feeder(4, &[l(0, 1), l(1, 0), l(2, 3)], vec![]),
            Err(GridError::NonRadial(_))
        ));
        assert!(generate_synthetic_feeder(1, &[], vec![]).is_err());
    }

    #[test]
    fn bundled_demo_matches_generator() {
        let g = generate_synthetic_feeder(8, &demo_lines(), demo_generators()).unwrap();
        let bundled = demo_feeder();
        assert_eq!(g.n_nodes, bundled.n_nodes);
        assert_eq!(g.generators, bundled.generators);
        for i in 0..8 {
            for j in 0..8 {
                assert!((g.zp[i][j] - bundled.zp[i][j]).abs() < 1e-12);
                assert!((g.zq[i][j] - bundled.zq[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_feeders_are_symmetric_psd() {
        for seed in 0..50 {
            let g = random_radial_feeder(2 + (seed as usize % 9), 2, seed).unwrap();
            let n = g.n_nodes;
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(g.zp[i][j], g.zp[j][i]);
                }
            }
            // xᵀ Zp x = Σ_lines r (Σ_{downstream} x)² >= 0; probe a few vectors
            let mut rng = rng::stream(seed, 9);
            for _ in 0..20 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let q: f64 = (0..n)
                    .map(|i| (0..n).map(|j| x[i] * g.zp[i][j] * x[j]).sum::<f64>())
                    .sum();
                assert!(q >= -1e-12);
            }
        }
    }
}
