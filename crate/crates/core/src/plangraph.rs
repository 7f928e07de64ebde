//! Waypoint planning graph.
//!
//! Waypoints are sampled uniformly from free space. Two waypoints are joined
//! when their symmetrised distance estimate is strictly below the maximum
//! edge length `e`. All-pairs shortest distances over the edge set are cached
//! on first use, so routing a task only has to attach its start and goal.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{self, Write};
use std::sync::OnceLock;

use rand::Rng;
use thiserror::Error;

use crate::distance::{DistanceError, DistanceEstimator, OracleSession};
use crate::env::{MapError, MazeWorld, Point};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error("invalid planning parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Waypoint count used for a real-valued `w`: nearest integer, at least 1.
pub fn waypoint_count(w: f64) -> usize {
    if w.is_finite() {
        (w.round() as usize).max(1)
    } else {
        1
    }
}

#[derive(Debug, Clone)]
pub struct PlanningGraph {
    waypoints: Vec<Point>,
    max_edge_length: f64,
    adjacency: Vec<Vec<(u32, f64)>>,
    cache: OnceLock<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanStatus {
    Found,
    NoPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub status: PlanStatus,
    /// Start, intermediate waypoints and goal; empty for [`PlanStatus::NoPath`].
    pub path: Vec<Point>,
    pub planned_length: f64,
    /// Estimator evaluations spent attaching start and goal.
    pub queries: u64,
}

/// Node sequence of a path through the augmented graph.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPath {
    /// Waypoint indices strictly between start and goal.
    pub waypoints: Vec<usize>,
    pub cost: f64,
}

/// The next subgoal chosen by [`GoalRouter::next_hop`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hop {
    Goal,
    Waypoint(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QueueEntry {
    cost: f64,
    node: u32,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Samples `round(w)` waypoints and connects them under cutoff `e`.
pub fn build_graph<R: Rng + ?Sized>(
    world: &MazeWorld,
    est: &DistanceEstimator,
    w: f64,
    e: f64,
    rng: &mut R,
) -> Result<PlanningGraph, PlanError> {
    if w.is_nan() || w < 1.0 {
        return Err(PlanError::InvalidParameter("w must be >= 1"));
    }
    let waypoints = (0..waypoint_count(w))
        .map(|_| world.sample_free(rng))
        .collect::<Result<Vec<_>, _>>()?;
    let mut session = est.session(world);
    PlanningGraph::connect(&mut session, est, waypoints, e, rng)
}

impl PlanningGraph {
    /// Connects fixed waypoints: edge `(u, v)` iff the symmetrised estimate is below `e`.
    pub fn connect<R: Rng + ?Sized>(
        session: &mut OracleSession<'_>,
        est: &DistanceEstimator,
        waypoints: Vec<Point>,
        e: f64,
        rng: &mut R,
    ) -> Result<Self, PlanError> {
        if e.is_nan() || e <= 0.0 {
            return Err(PlanError::InvalidParameter("e must be > 0"));
        }
        let horizon = est.horizon(e).unwrap_or(f64::INFINITY);
        let n = waypoints.len();
        let mut edges = Vec::new();
        for i in 0..n {
            session.sweep(waypoints[i], horizon)?;
            for j in i + 1..n {
                let oracle = session.oracle_to(waypoints[j]);
                let d = est.sym_from_oracle(oracle, waypoints[i], waypoints[j], rng);
                if d < e {
                    edges.push((i, j, d));
                }
            }
        }
        Self::from_edges(waypoints, e, &edges)
    }

    /// Graph over `waypoints` with explicit undirected weighted edges.
    pub fn from_edges(
        waypoints: Vec<Point>,
        e: f64,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self, PlanError> {
        let n = waypoints.len();
        if n == 0 {
            return Err(PlanError::InvalidParameter("graph needs at least one waypoint"));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v, d) in edges {
            if u >= n || v >= n || u == v {
                return Err(PlanError::InvalidParameter("edge endpoint out of range"));
            }
            if !(d >= 0.0 && d < e) {
                return Err(PlanError::InvalidParameter("edge length must be in [0, e)"));
            }
            adjacency[u].push((v as u32, d));
            adjacency[v].push((u as u32, d));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(v, _)| v);
        }
        Ok(Self {
            waypoints,
            max_edge_length: e,
            adjacency,
            cache: OnceLock::new(),
        })
    }

    fn all_pairs(&self) -> Vec<f64> {
        let n = self.waypoints.len();
        let mut cache = vec![f64::INFINITY; n * n];
        let mut heap = BinaryHeap::new();
        for src in 0..n {
            let row = &mut cache[src * n..(src + 1) * n];
            row[src] = 0.0;
            heap.push(QueueEntry {
                cost: 0.0,
                node: src as u32,
            });
            while let Some(QueueEntry { cost, node }) = heap.pop() {
                if cost > row[node as usize] {
                    continue;
                }
                for &(v, d) in &self.adjacency[node as usize] {
                    let nd = cost + d;
                    if nd < row[v as usize] {
                        row[v as usize] = nd;
                        heap.push(QueueEntry { cost: nd, node: v });
                    }
                }
            }
        }
        // Dijkstra from each side can differ in the last ulp; keep the cache exactly symmetric.
        for i in 0..n {
            for j in i + 1..n {
                let m = cache[i * n + j].min(cache[j * n + i]);
                cache[i * n + j] = m;
                cache[j * n + i] = m;
            }
        }
        cache
    }

    pub fn waypoints(&self) -> &[Point] {
        &self.waypoints
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.max_edge_length
    }

    pub fn neighbors(&self, u: usize) -> &[(u32, f64)] {
        &self.adjacency[u]
    }

    /// Undirected edges `(u, v, length)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .filter(move |&&(v, _)| (v as usize) > u)
                .map(move |&(v, d)| (u, v as usize, d))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Cached shortest-path distance between waypoints `i` and `j`.
    pub fn cached(&self, i: usize, j: usize) -> f64 {
        self.cache.get_or_init(|| self.all_pairs())[i * self.waypoints.len() + j]
    }

    /// Waypoints within cutoff of `p`, with their symmetrised estimates.
    pub fn attach<R: Rng + ?Sized>(
        &self,
        session: &mut OracleSession<'_>,
        est: &DistanceEstimator,
        p: Point,
        rng: &mut R,
    ) -> Result<Vec<(u32, f64)>, DistanceError> {
        let e = self.max_edge_length;
        session.sweep(p, est.horizon(e).unwrap_or(f64::INFINITY))?;
        let mut out = Vec::new();
        for (u, &q) in self.waypoints.iter().enumerate() {
            let d = est.sym_from_oracle(session.oracle_to(q), p, q, rng);
            if d < e {
                out.push((u as u32, d));
            }
        }
        Ok(out)
    }

    /// Dijkstra over the graph augmented with a start node (edges
    /// `start_edges`) and a goal node (edges `goal_edges`), plus an optional
    /// direct start-goal edge. Ties go to the smaller node index, with
    /// waypoints numbered first, then start, then goal.
    pub fn shortest_path_with(
        &self,
        start_edges: &[(u32, f64)],
        goal_edges: &[(u32, f64)],
        direct: Option<f64>,
    ) -> Option<AugmentedPath> {
        let n = self.waypoints.len();
        let start = n;
        let goal = n + 1;
        let mut to_goal = vec![f64::INFINITY; n];
        for &(u, d) in goal_edges {
            to_goal[u as usize] = d;
        }
        let mut cost = vec![f64::INFINITY; n + 2];
        let mut pred = vec![usize::MAX; n + 2];
        let mut heap = BinaryHeap::new();
        cost[start] = 0.0;
        heap.push(QueueEntry {
            cost: 0.0,
            node: start as u32,
        });
        while let Some(QueueEntry { cost: c, node }) = heap.pop() {
            let u = node as usize;
            if c > cost[u] {
                continue;
            }
            if u == goal {
                break;
            }
            let mut relax = |v: usize, d: f64, heap: &mut BinaryHeap<QueueEntry>| {
                let nc = c + d;
                if nc < cost[v] {
                    cost[v] = nc;
                    pred[v] = u;
                    heap.push(QueueEntry {
                        cost: nc,
                        node: v as u32,
                    });
                }
            };
            if u == start {
                for &(v, d) in start_edges {
                    relax(v as usize, d, &mut heap);
                }
                if let Some(d) = direct {
                    relax(goal, d, &mut heap);
                }
            } else {
                for &(v, d) in &self.adjacency[u] {
                    relax(v as usize, d, &mut heap);
                }
                if to_goal[u].is_finite() {
                    relax(goal, to_goal[u], &mut heap);
                }
            }
        }
        if !cost[goal].is_finite() {
            return None;
        }
        let mut nodes = Vec::new();
        let mut v = pred[goal];
        while v != start {
            nodes.push(v);
            v = pred[v];
        }
        nodes.reverse();
        Some(AugmentedPath {
            waypoints: nodes,
            cost: cost[goal],
        })
    }

    /// Shortest path from `start` to `goal` through the waypoint graph.
    pub fn shortest_path<R: Rng + ?Sized>(
        &self,
        session: &mut OracleSession<'_>,
        est: &DistanceEstimator,
        start: Point,
        goal: Point,
        rng: &mut R,
    ) -> Result<PlanResult, DistanceError> {
        let start_edges = self.attach(session, est, start, rng)?;
        // The start sweep is still loaded, so the direct edge needs no extra search.
        let direct = est.sym_from_oracle(session.oracle_to(goal), start, goal, rng);
        let goal_edges = self.attach(session, est, goal, rng)?;
        let direct = (direct < self.max_edge_length).then_some(direct);
        let queries = 2 * self.waypoints.len() as u64 + 1;
        Ok(match self.shortest_path_with(&start_edges, &goal_edges, direct) {
            Some(p) => {
                let mut path = Vec::with_capacity(p.waypoints.len() + 2);
                path.push(start);
                path.extend(p.waypoints.iter().map(|&i| self.waypoints[i]));
                path.push(goal);
                PlanResult {
                    status: PlanStatus::Found,
                    path,
                    planned_length: p.cost,
                    queries,
                }
            }
            None => PlanResult {
                status: PlanStatus::NoPath,
                path: Vec::new(),
                planned_length: f64::INFINITY,
                queries,
            },
        })
    }

    /// Precomputes cost-to-goal for every waypoint from the cache, so each
    /// subsequent [`GoalRouter::next_hop`] is a single scan over waypoints.
    pub fn route_to<R: Rng + ?Sized>(
        &self,
        session: &mut OracleSession<'_>,
        est: &DistanceEstimator,
        goal: Point,
        rng: &mut R,
    ) -> Result<GoalRouter, DistanceError> {
        let goal_edges = self.attach(session, est, goal, rng)?;
        Ok(self.router_from_edges(goal, &goal_edges))
    }

    /// [`route_to`](Self::route_to) with precomputed goal edges.
    pub fn router_from_edges(&self, goal: Point, goal_edges: &[(u32, f64)]) -> GoalRouter {
        let n = self.waypoints.len();
        let to_goal = (0..n)
            .map(|u| {
                goal_edges
                    .iter()
                    .map(|&(v, d)| self.cached(u, v as usize) + d)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        GoalRouter { goal, to_goal }
    }

    /// Writes waypoints and edges as CSV:
    /// `kind,i,j,x1,y1,x2,y2,length` with `kind` in {waypoint, edge}.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "kind,i,j,x1,y1,x2,y2,length")?;
        for (i, p) in self.waypoints.iter().enumerate() {
            writeln!(out, "waypoint,{i},{i},{},{},{},{},0", p.x, p.y, p.x, p.y)?;
        }
        for (u, v, d) in self.edges() {
            let (a, b) = (self.waypoints[u], self.waypoints[v]);
            writeln!(out, "edge,{u},{v},{},{},{},{},{d}", a.x, a.y, b.x, b.y)?;
        }
        Ok(())
    }
}

/// Per-task goal routing state over a fixed [`PlanningGraph`].
#[derive(Debug, Clone)]
pub struct GoalRouter {
    goal: Point,
    to_goal: Vec<f64>,
}

impl GoalRouter {
    pub fn goal(&self) -> Point {
        self.goal
    }

    /// Shortest cost from waypoint `u` to the goal through the graph.
    pub fn cost_to_goal(&self, u: usize) -> f64 {
        self.to_goal[u]
    }

    /// Next subgoal from `s`: the goal itself when it is within cutoff,
    /// otherwise the waypoint minimising estimate plus cost-to-goal.
    /// Waypoints within `skip_radius` of `s` count as already reached.
    /// Returns the hop and the number of estimator evaluations spent.
    pub fn next_hop<R: Rng + ?Sized>(
        &self,
        graph: &PlanningGraph,
        session: &mut OracleSession<'_>,
        est: &DistanceEstimator,
        s: Point,
        skip_radius: f64,
        rng: &mut R,
    ) -> Result<(Option<Hop>, u64), DistanceError> {
        let e = graph.max_edge_length;
        session.sweep(s, est.horizon(e).unwrap_or(f64::INFINITY))?;
        let direct = est.sym_from_oracle(session.oracle_to(self.goal), s, self.goal, rng);
        if direct < e {
            return Ok((Some(Hop::Goal), 1));
        }
        let mut best: Option<(f64, usize)> = None;
        for (u, &q) in graph.waypoints.iter().enumerate() {
            let d = est.sym_from_oracle(session.oracle_to(q), s, q, rng);
            if d >= e || !self.to_goal[u].is_finite() || s.dist(q) <= skip_radius {
                continue;
            }
            let total = d + self.to_goal[u];
            if best.is_none_or(|(b, _)| total < b) {
                best = Some((total, u));
            }
        }
        Ok((best.map(|(_, u)| Hop::Waypoint(u)), graph.len() as u64 + 1))
    }

    /// Point of a hop.
    pub fn point(&self, graph: &PlanningGraph, hop: Hop) -> Point {
        match hop {
            Hop::Goal => self.goal,
            Hop::Waypoint(u) => graph.waypoints[u],
        }
    }
}
