//! Independent reference implementations backing the test suites.
//!
//! Everything here is deliberately naive — exhaustive path enumeration and
//! tiny random graphs — and is kept separate from the production
//! shortest-path code so the two can be checked against each other.

use rand::Rng;

use crate::envgraph::{EnvironmentGraph, View, ViewGrid, Viewpoint};
use crate::error::{Error, Result};

/// Shortest-path length by enumerating every simple path from `a` to `b`.
pub fn brute_force_distance(env: &EnvironmentGraph, a: &str, b: &str) -> Result<f64> {
    env.viewpoint(a)?;
    env.viewpoint(b)?;
    if a == b {
        return Ok(0.0);
    }
    let mut best = f64::INFINITY;
    let mut visited = vec![a.to_string()];
    dfs_paths(env, a, b, 0.0, &mut visited, &mut best, &mut f64::INFINITY.clone())?;
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Contract(format!("no path from {a} to {b}")))
    }
}

/// Minimum number of edges among all minimum-length paths from `a` to `b`.
pub fn brute_force_min_moves(env: &EnvironmentGraph, a: &str, b: &str) -> Result<usize> {
    env.viewpoint(a)?;
    env.viewpoint(b)?;
    if a == b {
        return Ok(0);
    }
    let best_len = brute_force_distance(env, a, b)?;
    let mut best_moves = usize::MAX;
    let mut visited = vec![a.to_string()];
    dfs_moves(env, a, b, 0.0, best_len, &mut visited, &mut best_moves)?;
    Ok(best_moves)
}

fn dfs_paths(
    env: &EnvironmentGraph,
    cur: &str,
    goal: &str,
    len: f64,
    visited: &mut Vec<String>,
    best: &mut f64,
    _unused: &mut f64,
) -> Result<()> {
    for (n, edge) in env.neighbors(cur)? {
        let total = len + edge;
        if total >= *best {
            continue;
        }
        if n == goal {
            *best = total;
            continue;
        }
        if visited.iter().any(|v| v == n) {
            continue;
        }
        visited.push(n.clone());
        dfs_paths(env, n, goal, total, visited, best, _unused)?;
        visited.pop();
    }
    Ok(())
}

fn dfs_moves(
    env: &EnvironmentGraph,
    cur: &str,
    goal: &str,
    len: f64,
    best_len: f64,
    visited: &mut Vec<String>,
    best_moves: &mut usize,
) -> Result<()> {
    for (n, edge) in env.neighbors(cur)? {
        let total = len + edge;
        if total > best_len + 1e-9 {
            continue;
        }
        if n == goal {
            if (total - best_len).abs() <= 1e-9 {
                *best_moves = (*best_moves).min(visited.len());
            }
            continue;
        }
        if visited.iter().any(|v| v == n) {
            continue;
        }
        visited.push(n.clone());
        dfs_moves(env, n, goal, total, best_len, visited, best_moves)?;
        visited.pop();
    }
    Ok(())
}

/// A small random connected geometric graph with bare panoramas, for
/// exercising graph operations in tests.
pub fn random_connected_env<R: Rng>(rng: &mut R, n: usize, radius: f64) -> EnvironmentGraph {
    let grid = ViewGrid { n_headings: 4, n_elevations: 1 };
    loop {
        let points: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), 0.0])
            .collect();
        let vps: Vec<Viewpoint> = points
            .iter()
            .enumerate()
            .map(|(i, p)| Viewpoint {
                id: format!("v{i:02}"),
                position: *p,
                views: (0..grid.n_views())
                    .map(|k| View {
                        heading: grid.heading_center(k % grid.n_headings),
                        elevation: grid.elevation_center(k / grid.n_headings),
                        appearance: vec![0.0; 4],
                        objects: Vec::new(),
                    })
                    .collect(),
            })
            .collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let d2: f64 = (0..3).map(|k| (points[i][k] - points[j][k]).powi(2)).sum();
                if d2.sqrt() <= radius && d2 > 0.0 {
                    edges.push((format!("v{i:02}"), format!("v{j:02}")));
                }
            }
        }
        if let Ok(env) = EnvironmentGraph::new("rand", grid, vps, edges) {
            return env;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn brute_force_on_line_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let env = random_connected_env(&mut rng, 5, 12.0);
        // Distance to self is zero; any pair has a finite distance.
        for a in env.viewpoint_ids() {
            assert_eq!(brute_force_distance(&env, a, a).unwrap(), 0.0);
            assert_eq!(brute_force_min_moves(&env, a, a).unwrap(), 0);
        }
    }
}
