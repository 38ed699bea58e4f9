//! Navigation-environment model.
//!
//! An environment is an immutable graph of viewpoints connected by
//! line-of-sight edges. Each viewpoint carries a panorama split into
//! orientation bins (views), each view an appearance feature vector and a
//! list of object annotations. Agents move along edges or stop; supervision
//! comes from a shortest-path action oracle, and evaluation from a
//! geodesic success radius.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::wrap_angle;

/// Success radius in meters: an episode succeeds when the agent stops
/// within this geodesic distance of the goal (inclusive).
pub const SUCCESS_RADIUS_M: f64 = 3.0;

/// A single detected object within one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectAnnotation {
    pub label: String,
    pub attributes: Vec<String>,
    /// (x1, y1, x2, y2), normalized to [0, 1], x1 < x2 and y1 < y2.
    pub bbox: [f64; 4],
    /// Detection confidence in (0, 1].
    pub score: f64,
}

impl ObjectAnnotation {
    /// Location vector (x_center, y_center, width, height, area), all in [0, 1].
    pub fn location_vector(&self) -> [f64; 5] {
        let [x1, y1, x2, y2] = self.bbox;
        let w = x2 - x1;
        let h = y2 - y1;
        [(x1 + x2) / 2.0, (y1 + y2) / 2.0, w, h, w * h]
    }
}

/// One orientation bin of a viewpoint's panorama.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct View {
    /// Bin-center heading in [0, 2*pi).
    pub heading: f64,
    /// Bin-center elevation in radians.
    pub elevation: f64,
    /// Appearance feature vector of fixed dimension d_img.
    pub appearance: Vec<f64>,
    /// Objects detected in this view, sorted by descending score.
    pub objects: Vec<ObjectAnnotation>,
}

/// A node of the environment graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub id: String,
    /// Position in meters (x east, y north, z up).
    pub position: [f64; 3],
    /// Panorama views indexed by `elevation_bin * n_headings + heading_bin`.
    pub views: Vec<View>,
}

/// Panorama bin layout; headings split [0, 2*pi) evenly, elevations are
/// spaced pi/6 apart and centered on level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewGrid {
    pub n_headings: usize,
    pub n_elevations: usize,
}

impl Default for ViewGrid {
    fn default() -> Self {
        ViewGrid {
            n_headings: 12,
            n_elevations: 3,
        }
    }
}

impl ViewGrid {
    pub fn n_views(&self) -> usize {
        self.n_headings * self.n_elevations
    }

    pub fn heading_center(&self, heading_bin: usize) -> f64 {
        heading_bin as f64 * 2.0 * PI / self.n_headings as f64
    }

    pub fn elevation_center(&self, elevation_bin: usize) -> f64 {
        (elevation_bin as f64 - (self.n_elevations as f64 - 1.0) / 2.0) * PI / 6.0
    }

    /// The bin whose center is nearest to (heading, elevation).
    pub fn bin_index(&self, heading: f64, elevation: f64) -> usize {
        let step = 2.0 * PI / self.n_headings as f64;
        let h = heading.rem_euclid(2.0 * PI);
        let hb = ((h / step).round() as usize) % self.n_headings;
        let mut eb = 0;
        let mut best = f64::INFINITY;
        for e in 0..self.n_elevations {
            let d = (elevation - self.elevation_center(e)).abs();
            if d < best {
                best = d;
                eb = e;
            }
        }
        eb * self.n_headings + hb
    }
}

/// What an action does: move along an edge or end the episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionKind {
    Stop,
    Move(String),
}

/// One selectable action at a decision point.
///
/// `rel_heading` is the bearing toward the target minus the agent's current
/// heading, wrapped to (-pi, pi]; `rel_elevation` is the pitch toward the
/// target. Both are zero for Stop, whose geometry is never used (the agent
/// embeds Stop with a learned vector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCandidate {
    pub kind: ActionKind,
    pub rel_heading: f64,
    pub rel_elevation: f64,
    /// Orientation bin of the current viewpoint containing the target.
    pub view_index: usize,
}

impl ActionCandidate {
    pub fn is_stop(&self) -> bool {
        matches!(self.kind, ActionKind::Stop)
    }

    /// Sin/cos encoding of the relative orientation, tiled to `d_orient`.
    pub fn orientation_code(&self, d_orient: usize) -> Vec<f64> {
        let base = [
            self.rel_heading.sin(),
            self.rel_heading.cos(),
            self.rel_elevation.sin(),
            self.rel_elevation.cos(),
        ];
        (0..d_orient).map(|i| base[i % 4]).collect()
    }
}

/// Immutable viewpoint graph with panoramas.
///
/// Invariants checked at construction: unique ids, symmetric adjacency with
/// no self-loops, strictly positive edge lengths, a connected graph, and a
/// full view grid at every viewpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentGraph {
    env_id: String,
    grid: ViewGrid,
    viewpoints: BTreeMap<String, Viewpoint>,
    /// Unordered edges stored as sorted id pairs.
    edges: BTreeSet<(String, String)>,
    /// Neighbors sorted by id, with Euclidean edge lengths.
    adjacency: BTreeMap<String, Vec<(String, f64)>>,
}

fn euclidean(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Bearing from `a` to `b`: 0 is north (+y), increasing clockwise, so east
/// is +pi/2 and west is -pi/2.
pub fn bearing(a: [f64; 3], b: [f64; 3]) -> f64 {
    (b[0] - a[0]).atan2(b[1] - a[1])
}

/// Pitch from `a` to `b` relative to level.
pub fn elevation_angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    let horiz = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    (b[2] - a[2]).atan2(horiz)
}

impl EnvironmentGraph {
    pub fn new(
        env_id: impl Into<String>,
        grid: ViewGrid,
        viewpoints: Vec<Viewpoint>,
        edges: Vec<(String, String)>,
    ) -> Result<Self> {
        let env_id = env_id.into();
        let mut vp_map = BTreeMap::new();
        for vp in viewpoints {
            if vp.views.len() != grid.n_views() {
                return Err(Error::Contract(format!(
                    "viewpoint {} has {} views, expected {}",
                    vp.id,
                    vp.views.len(),
                    grid.n_views()
                )));
            }
            if vp_map.insert(vp.id.clone(), vp).is_some() {
                return Err(Error::Contract("duplicate viewpoint id".into()));
            }
        }
        let mut edge_set = BTreeSet::new();
        let mut adjacency: BTreeMap<String, Vec<(String, f64)>> =
            vp_map.keys().map(|k| (k.clone(), Vec::new())).collect();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Contract(format!("self-loop at {a}")));
            }
            let pa = vp_map
                .get(&a)
                .ok_or_else(|| Error::UnknownId { kind: "viewpoint", id: a.clone() })?
                .position;
            let pb = vp_map
                .get(&b)
                .ok_or_else(|| Error::UnknownId { kind: "viewpoint", id: b.clone() })?
                .position;
            let len = euclidean(pa, pb);
            if len <= 0.0 {
                return Err(Error::Contract(format!("zero-length edge {a}-{b}")));
            }
            let key = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            if edge_set.insert(key) {
                adjacency.get_mut(&a).unwrap().push((b.clone(), len));
                adjacency.get_mut(&b).unwrap().push((a.clone(), len));
            }
        }
        for nbrs in adjacency.values_mut() {
            nbrs.sort_by(|x, y| x.0.cmp(&y.0));
        }
        let env = EnvironmentGraph { env_id, grid, viewpoints: vp_map, edges: edge_set, adjacency };
        if !env.is_connected() {
            return Err(Error::Contract(format!("environment {} is not connected", env.env_id)));
        }
        Ok(env)
    }

    pub fn env_id(&self) -> &str {
        &self.env_id
    }

    pub fn grid(&self) -> ViewGrid {
        self.grid
    }

    pub fn viewpoints(&self) -> impl Iterator<Item = &Viewpoint> {
        self.viewpoints.values()
    }

    pub fn viewpoint_ids(&self) -> impl Iterator<Item = &str> {
        self.viewpoints.keys().map(|s| s.as_str())
    }

    pub fn n_viewpoints(&self) -> usize {
        self.viewpoints.len()
    }

    pub fn viewpoint(&self, id: &str) -> Result<&Viewpoint> {
        self.viewpoints
            .get(id)
            .ok_or_else(|| Error::UnknownId { kind: "viewpoint", id: id.to_string() })
    }

    pub fn edges(&self) -> impl Iterator<Item = &(String, String)> {
        self.edges.iter()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors of `id` sorted by id, with edge lengths in meters.
    pub fn neighbors(&self, id: &str) -> Result<&[(String, f64)]> {
        self.adjacency
            .get(id)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::UnknownId { kind: "viewpoint", id: id.to_string() })
    }

    pub fn are_adjacent(&self, a: &str, b: &str) -> bool {
        self.adjacency
            .get(a)
            .map(|nbrs| nbrs.iter().any(|(n, _)| n == b))
            .unwrap_or(false)
    }

    fn is_connected(&self) -> bool {
        let Some(start) = self.viewpoints.keys().next() else {
            return false;
        };
        let mut seen = BTreeSet::new();
        let mut stack = vec![start.clone()];
        seen.insert(start.clone());
        while let Some(v) = stack.pop() {
            for (n, _) in &self.adjacency[&v] {
                if seen.insert(n.clone()) {
                    stack.push(n.clone());
                }
            }
        }
        seen.len() == self.viewpoints.len()
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    id: String,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, ties by id for determinism.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Length in meters of the shortest path between two viewpoints.
pub fn geodesic_distance(env: &EnvironmentGraph, a: &str, b: &str) -> Result<f64> {
    let dists = distances_from(env, b)?;
    dists
        .get(a)
        .copied()
        .ok_or_else(|| Error::UnknownId { kind: "viewpoint", id: a.to_string() })
}

/// Dijkstra distances from `source` to every viewpoint.
pub fn distances_from(env: &EnvironmentGraph, source: &str) -> Result<HashMap<String, f64>> {
    env.viewpoint(source)?;
    let mut dist: HashMap<String, f64> = HashMap::with_capacity(env.n_viewpoints());
    let mut heap = BinaryHeap::new();
    dist.insert(source.to_string(), 0.0);
    heap.push(HeapEntry { dist: 0.0, id: source.to_string() });
    while let Some(HeapEntry { dist: d, id }) = heap.pop() {
        if d > dist[&id] {
            continue;
        }
        for (n, len) in env.neighbors(&id)? {
            let nd = d + len;
            if dist.get(n).map_or(true, |&cur| nd < cur) {
                dist.insert(n.clone(), nd);
                heap.push(HeapEntry { dist: nd, id: n.clone() });
            }
        }
    }
    Ok(dist)
}

fn candidate_toward(env: &EnvironmentGraph, from: &Viewpoint, target_id: &str, agent_heading: f64) -> Result<ActionCandidate> {
    let target = env.viewpoint(target_id)?;
    let abs_heading = bearing(from.position, target.position);
    let rel_elevation = elevation_angle(from.position, target.position);
    Ok(ActionCandidate {
        kind: ActionKind::Move(target_id.to_string()),
        rel_heading: wrap_angle(abs_heading - agent_heading),
        rel_elevation,
        view_index: env.grid.bin_index(abs_heading, rel_elevation),
    })
}

/// The shortest-path supervision action: Stop at the goal, otherwise the
/// move minimizing edge length plus remaining geodesic distance, ties broken
/// by lexicographically smallest neighbor id.
///
/// The returned candidate's relative geometry is expressed for a
/// north-facing agent; supervision matches on `kind` only.
pub fn oracle_action(env: &EnvironmentGraph, current: &str, goal: &str) -> Result<ActionCandidate> {
    let cur = env.viewpoint(current)?;
    env.viewpoint(goal)?;
    if current == goal {
        return Ok(ActionCandidate {
            kind: ActionKind::Stop,
            rel_heading: 0.0,
            rel_elevation: 0.0,
            view_index: 0,
        });
    }
    let goal_dists = distances_from(env, goal)?;
    let mut best: Option<(f64, &str)> = None;
    for (n, len) in env.neighbors(current)? {
        let total = len + goal_dists[n];
        let better = match best {
            None => true,
            Some((bd, bid)) => total < bd - 1e-12 || (total < bd + 1e-12 && n.as_str() < bid),
        };
        if better {
            best = Some((total, n));
        }
    }
    let (_, next) = best.ok_or_else(|| Error::Contract(format!("{current} has no neighbors")))?;
    candidate_toward(env, cur, next, 0.0)
}

/// All actions available at `current`: Stop first, then one Move per
/// neighbor in id order.
pub fn candidates(env: &EnvironmentGraph, current: &str, agent_heading: f64) -> Result<Vec<ActionCandidate>> {
    let cur = env.viewpoint(current)?;
    let mut out = vec![ActionCandidate {
        kind: ActionKind::Stop,
        rel_heading: 0.0,
        rel_elevation: 0.0,
        view_index: 0,
    }];
    for (n, _) in env.neighbors(current)? {
        out.push(candidate_toward(env, cur, n, agent_heading)?);
    }
    Ok(out)
}

/// Whether stopping at `final_vp` counts as success for `goal`.
pub fn success(env: &EnvironmentGraph, final_vp: &str, goal: &str) -> Result<bool> {
    Ok(geodesic_distance(env, final_vp, goal)? <= SUCCESS_RADIUS_M)
}

/// Mean success over `(final, goal, env)` outcomes; errors on an empty list.
pub fn success_rate(results: &[(String, String, &EnvironmentGraph)]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::Config("success_rate over empty result list".into()));
    }
    let mut hits = 0usize;
    for (final_vp, goal, env) in results {
        if success(env, final_vp, goal)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / results.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bare_viewpoint(id: &str, position: [f64; 3], grid: ViewGrid) -> Viewpoint {
        let views = (0..grid.n_elevations)
            .flat_map(|e| {
                (0..grid.n_headings).map(move |h| View {
                    heading: grid.heading_center(h),
                    elevation: grid.elevation_center(e),
                    appearance: vec![0.0; 4],
                    objects: Vec::new(),
                })
            })
            .collect();
        Viewpoint { id: id.to_string(), position, views }
    }

    fn line_env(segments: &[(&str, &str, f64)]) -> EnvironmentGraph {
        // Place viewpoints along the x axis at cumulative distances.
        let grid = ViewGrid { n_headings: 4, n_elevations: 1 };
        let mut pos: BTreeMap<String, f64> = BTreeMap::new();
        pos.insert(segments[0].0.to_string(), 0.0);
        for (a, b, len) in segments {
            let base = pos[*a];
            pos.entry(b.to_string()).or_insert(base + len);
        }
        let vps = pos
            .iter()
            .map(|(id, &x)| bare_viewpoint(id, [x, 0.0, 0.0], grid))
            .collect();
        let edges = segments
            .iter()
            .map(|(a, b, _)| (a.to_string(), b.to_string()))
            .collect();
        EnvironmentGraph::new("line", grid, vps, edges).unwrap()
    }

    fn env_from_points(points: &[(&str, [f64; 3])], edges: &[(&str, &str)]) -> EnvironmentGraph {
        let grid = ViewGrid { n_headings: 4, n_elevations: 1 };
        let vps = points
            .iter()
            .map(|(id, p)| bare_viewpoint(id, *p, grid))
            .collect();
        let es = edges
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        EnvironmentGraph::new("test", grid, vps, es).unwrap()
    }

    #[test]
    fn geodesic_identity_is_zero() {
        let env = line_env(&[("A", "B", 3.0), ("B", "C", 4.0)]);
        assert_eq!(geodesic_distance(&env, "A", "A").unwrap(), 0.0);
    }

    #[test]
    fn geodesic_sums_path_edges() {
        let env = line_env(&[("A", "B", 3.0), ("B", "C", 4.0)]);
        assert!((geodesic_distance(&env, "A", "C").unwrap() - 7.0).abs() < 1e-12);
        // symmetric
        assert!((geodesic_distance(&env, "C", "A").unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn geodesic_triangle_prefers_shorter_route() {
        // Triangle with direct edge A-C of 8 m vs A-B-C of 7 m; a 3-4-5-style
        // layout cannot produce an 8 m third side, so place C off-axis and
        // check against the brute-force enumeration oracle.
        let env = env_from_points(
            &[
                ("A", [0.0, 0.0, 0.0]),
                ("B", [3.0, 0.0, 0.0]),
                ("C", [3.0, 4.0, 0.0]),
            ],
            &[("A", "B"), ("B", "C"), ("A", "C")],
        );
        let direct: f64 = 5.0; // |AC|
        let via_b: f64 = 7.0;
        let expected = oracles::brute_force_distance(&env, "A", "C").unwrap();
        assert!((expected - direct.min(via_b)).abs() < 1e-12);
        assert!((geodesic_distance(&env, "A", "C").unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn geodesic_unknown_id_errors() {
        let env = line_env(&[("A", "B", 3.0)]);
        assert!(matches!(
            geodesic_distance(&env, "A", "Z"),
            Err(Error::UnknownId { .. })
        ));
    }

    #[test]
    fn oracle_stops_at_goal() {
        let env = line_env(&[("A", "B", 3.0), ("B", "C", 4.0)]);
        let act = oracle_action(&env, "B", "B").unwrap();
        assert_eq!(act.kind, ActionKind::Stop);
    }

    #[test]
    fn oracle_moves_along_only_path() {
        let env = line_env(&[("A", "B", 3.0), ("B", "C", 4.0)]);
        let act = oracle_action(&env, "A", "C").unwrap();
        assert_eq!(act.kind, ActionKind::Move("B".into()));
    }

    #[test]
    fn oracle_breaks_ties_lexicographically() {
        // Diamond a-b-c and a-d-c with equal lengths both ways.
        let env = env_from_points(
            &[
                ("a", [0.0, 0.0, 0.0]),
                ("b", [1.0, 1.0, 0.0]),
                ("c", [2.0, 0.0, 0.0]),
                ("d", [1.0, -1.0, 0.0]),
            ],
            &[("a", "b"), ("b", "c"), ("a", "d"), ("d", "c")],
        );
        // Confirm the tie with the brute-force oracle before asserting.
        let via_b = oracles::brute_force_distance(&env, "b", "c").unwrap()
            + geodesic_distance(&env, "a", "b").unwrap();
        let via_d = oracles::brute_force_distance(&env, "d", "c").unwrap()
            + geodesic_distance(&env, "a", "d").unwrap();
        assert!((via_b - via_d).abs() < 1e-12);
        let act = oracle_action(&env, "a", "c").unwrap();
        assert_eq!(act.kind, ActionKind::Move("b".into()));
    }

    #[test]
    fn candidates_degree_one() {
        let env = line_env(&[("A", "B", 3.0)]);
        let cands = candidates(&env, "A", 0.0).unwrap();
        assert_eq!(cands.len(), 2);
        assert!(cands[0].is_stop());
        assert_eq!(cands[1].kind, ActionKind::Move("B".into()));
    }

    #[test]
    fn candidates_bearing_north_aligned() {
        let env = env_from_points(
            &[("A", [0.0, 0.0, 0.0]), ("N", [0.0, 5.0, 0.0])],
            &[("A", "N")],
        );
        let cands = candidates(&env, "A", 0.0).unwrap();
        assert!(cands[1].rel_heading.abs() < 1e-12);
    }

    #[test]
    fn candidates_bearing_west_of_north_facing() {
        // Hand geometry: west target means dx = -1, dy = 0, so
        // atan2(-1, 0) = -pi/2 relative to a north-facing agent.
        let env = env_from_points(
            &[("A", [0.0, 0.0, 0.0]), ("W", [-5.0, 0.0, 0.0])],
            &[("A", "W")],
        );
        let cands = candidates(&env, "A", 0.0).unwrap();
        assert!((cands[1].rel_heading + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn candidates_deterministic_order() {
        let env = env_from_points(
            &[
                ("A", [0.0, 0.0, 0.0]),
                ("B", [1.0, 1.0, 0.0]),
                ("C", [-1.0, 1.0, 0.0]),
            ],
            &[("A", "B"), ("A", "C")],
        );
        let a = candidates(&env, "A", 0.3).unwrap();
        let b = candidates(&env, "A", 0.3).unwrap();
        assert_eq!(a, b);
        assert!(a[0].is_stop());
        assert_eq!(a[1].kind, ActionKind::Move("B".into()));
        assert_eq!(a[2].kind, ActionKind::Move("C".into()));
    }

    #[test]
    fn elevation_difference_is_reflected() {
        let env = env_from_points(
            &[("A", [0.0, 0.0, 0.0]), ("U", [3.0, 0.0, 3.0])],
            &[("A", "U")],
        );
        let cands = candidates(&env, "A", 0.0).unwrap();
        assert!((cands[1].rel_elevation - (3.0f64).atan2(3.0)).abs() < 1e-12);
    }

    #[test]
    fn orientation_code_tiles() {
        let cand = ActionCandidate {
            kind: ActionKind::Stop,
            rel_heading: 0.5,
            rel_elevation: -0.2,
            view_index: 0,
        };
        let code = cand.orientation_code(8);
        assert_eq!(code.len(), 8);
        assert_eq!(code[0], code[4]);
        assert_eq!(code[3], code[7]);
        assert!((code[0] - 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn success_threshold_inclusive() {
        let env = line_env(&[("A", "B", 2.9)]);
        assert!(success(&env, "A", "B").unwrap());
        let env = line_env(&[("A", "B", 3.1)]);
        assert!(!success(&env, "A", "B").unwrap());
        let env = line_env(&[("A", "B", 1.0)]);
        assert!(success(&env, "B", "B").unwrap());
    }

    #[test]
    fn success_rate_arithmetic() {
        let env = line_env(&[("A", "B", 2.0), ("B", "C", 2.0), ("C", "D", 2.0)]);
        // A->B is 2 m (success), A->C 4 m (fail), A->D 6 m (fail), A->A 0 m.
        let results = vec![
            ("A".to_string(), "B".to_string(), &env),
            ("A".to_string(), "C".to_string(), &env),
            ("A".to_string(), "D".to_string(), &env),
            ("A".to_string(), "A".to_string(), &env),
        ];
        assert_eq!(success_rate(&results).unwrap(), 0.5);
        let all = vec![("A".to_string(), "A".to_string(), &env)];
        assert_eq!(success_rate(&all).unwrap(), 1.0);
        let none = vec![("A".to_string(), "D".to_string(), &env)];
        assert_eq!(success_rate(&none).unwrap(), 0.0);
        assert!(success_rate(&[]).is_err());
    }

    #[test]
    fn construction_rejects_disconnected() {
        let grid = ViewGrid { n_headings: 4, n_elevations: 1 };
        let vps = vec![
            bare_viewpoint("A", [0.0, 0.0, 0.0], grid),
            bare_viewpoint("B", [1.0, 0.0, 0.0], grid),
            bare_viewpoint("C", [9.0, 0.0, 0.0], grid),
        ];
        let err = EnvironmentGraph::new("x", grid, vps, vec![("A".into(), "B".into())]);
        assert!(err.is_err());
    }

    #[test]
    fn view_grid_binning() {
        let grid = ViewGrid::default();
        assert_eq!(grid.n_views(), 36);
        // Due north, level: heading bin 0, middle elevation bin.
        assert_eq!(grid.bin_index(0.0, 0.0), 12);
        // Slightly west of north wraps to bin 0, not bin 11.
        assert_eq!(grid.bin_index(-0.1, 0.0), 12);
        // Steep upward pitch lands in the top elevation row.
        assert_eq!(grid.bin_index(0.0, 0.9), 24);
        assert_eq!(grid.bin_index(0.0, -0.9), 0);
    }

    #[test]
    fn oracle_walk_reaches_goal_in_minimal_moves() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let env = oracles::random_connected_env(&mut rng, 8, 4.0);
            let ids: Vec<String> = env.viewpoint_ids().map(String::from).collect();
            let start = ids[0].clone();
            let goal = ids[ids.len() - 1].clone();
            let min_moves = oracles::brute_force_min_moves(&env, &start, &goal).unwrap();
            let mut cur = start.clone();
            let mut moves = 0usize;
            loop {
                let act = oracle_action(&env, &cur, &goal).unwrap();
                match act.kind {
                    ActionKind::Stop => break,
                    ActionKind::Move(next) => {
                        // Each step must strictly reduce the geodesic distance
                        // by the traversed edge length.
                        let before = geodesic_distance(&env, &cur, &goal).unwrap();
                        let after = geodesic_distance(&env, &next, &goal).unwrap();
                        let edge = env
                            .neighbors(&cur)
                            .unwrap()
                            .iter()
                            .find(|(n, _)| *n == next)
                            .unwrap()
                            .1;
                        assert!((before - after - edge).abs() < 1e-9);
                        cur = next;
                        moves += 1;
                    }
                }
                assert!(moves <= ids.len(), "oracle walk failed to terminate");
            }
            assert_eq!(cur, goal);
            assert_eq!(moves, min_moves);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn geodesic_is_a_metric(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let env = oracles::random_connected_env(&mut rng, 3 + (seed % 10) as usize, 4.0);
            let ids: Vec<String> = env.viewpoint_ids().map(String::from).collect();
            for a in &ids {
                for b in &ids {
                    let d = geodesic_distance(&env, a, b).unwrap();
                    let brute = oracles::brute_force_distance(&env, a, b).unwrap();
                    prop_assert!((d - brute).abs() < 1e-9);
                    prop_assert!(d >= 0.0);
                    prop_assert_eq!(d == 0.0, a == b);
                    let rev = geodesic_distance(&env, b, a).unwrap();
                    prop_assert!((d - rev).abs() < 1e-9);
                    for c in &ids {
                        let ac = geodesic_distance(&env, a, c).unwrap();
                        let cb = geodesic_distance(&env, c, b).unwrap();
                        prop_assert!(d <= ac + cb + 1e-9);
                    }
                }
            }
        }
    }
}
