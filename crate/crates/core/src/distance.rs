//! Shortest-path distance estimates between free points.
//!
//! The oracle runs Dijkstra on the occupancy grid subdivided `resolution`
//! times per cell, 8-connected with diagonal cost `sqrt(2)` times the grid
//! step and no corner cutting. The distance between two points is the larger
//! of the grid geodesic between their sub-cells and their Euclidean distance,
//! which keeps it a metric bounded below by the straight line.
//!
//! Estimators wrap the oracle with deliberate corruptions: uniform scaling,
//! relative Gaussian noise, and wall piercing (some pairs separated by a wall
//! look as close as their straight-line distance).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::env::{MazeWorld, Point};
use crate::seed::splitmix64;

pub const DEFAULT_RESOLUTION: u32 = 4;

#[derive(Debug, Error, PartialEq)]
pub enum DistanceError {
    #[error("point {0} is not in free space")]
    NotFree(Point),
    #[error("invalid estimator parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("unknown estimator kind {0:?}")]
    UnknownKind(String),
}

/// The subdivided occupancy grid the oracle searches.
#[derive(Debug, Clone)]
pub(crate) struct SubGrid {
    rows: usize,
    cols: usize,
    step: f64,
    free: Vec<bool>,
    /// Bit `k` set when move `MOVES[k]` out of the sub-cell is legal.
    moves: Vec<u8>,
}

/// Row/column offsets of the eight moves; the first four are axis-aligned.
const MOVES: [(isize, isize); 8] = [(-1, 0), (0, -1), (0, 1), (1, 0), (-1, -1), (-1, 1), (1, -1), (1, 1)];

impl SubGrid {
    pub(crate) fn new(world: &MazeWorld, resolution: u32) -> Self {
        let res = resolution.max(1) as usize;
        let rows = world.rows() * res;
        let cols = world.cols() * res;
        let mut free = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                free.push(!world.is_wall_cell((r / res) as isize, (c / res) as isize));
            }
        }
        let mut grid = Self {
            rows,
            cols,
            step: world.cell_size() / res as f64,
            free,
            moves: Vec::new(),
        };
        grid.moves = (0..rows * cols)
            .map(|i| {
                let (r, c) = ((i / cols) as isize, (i % cols) as isize);
                let mut mask = 0u8;
                if grid.free[i] {
                    for (k, &(dr, dc)) in MOVES.iter().enumerate() {
                        let ok = grid.is_free(r + dr, c + dc)
                            && (dr == 0
                                || dc == 0
                                || (grid.is_free(r + dr, c) && grid.is_free(r, c + dc)));
                        if ok {
                            mask |= 1 << k;
                        }
                    }
                }
                mask
            })
            .collect();
        grid
    }

    fn index_of(&self, p: Point) -> Option<usize> {
        let r = (p.y / self.step).floor();
        let c = (p.x / self.step).floor();
        if r < 0.0 || c < 0.0 || r >= self.rows as f64 || c >= self.cols as f64 {
            return None;
        }
        let i = r as usize * self.cols + c as usize;
        self.free[i].then_some(i)
    }

    fn is_free(&self, r: isize, c: isize) -> bool {
        r >= 0
            && c >= 0
            && (r as usize) < self.rows
            && (c as usize) < self.cols
            && self.free[r as usize * self.cols + c as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, ties by smaller index.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable Dijkstra buffers for repeated oracle sweeps on one world.
#[derive(Debug, Clone)]
pub struct OracleSession<'w> {
    world: &'w MazeWorld,
    grid: SubGrid,
    dist: Vec<f64>,
    /// Straight and diagonal move counts of the best path to each sub-cell.
    counts: Vec<(u32, u32)>,
    touched: Vec<u32>,
    heap: BinaryHeap<HeapEntry>,
    source: Point,
    horizon: f64,
}

impl<'w> OracleSession<'w> {
    pub fn new(world: &'w MazeWorld, resolution: u32) -> Self {
        let grid = SubGrid::new(world, resolution);
        let n = grid.rows * grid.cols;
        Self {
            world,
            grid,
            dist: vec![f64::INFINITY; n],
            counts: vec![(0, 0); n],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
            source: Point::default(),
            horizon: f64::INFINITY,
        }
    }

    pub fn world(&self) -> &'w MazeWorld {
        self.world
    }

    /// Length of one sub-cell side.
    pub fn grid_step(&self) -> f64 {
        self.grid.step
    }

    fn reset(&mut self) {
        for &i in &self.touched {
            self.dist[i as usize] = f64::INFINITY;
        }
        self.touched.clear();
        self.heap.clear();
    }

    /// Dijkstra from the sub-cell of `source`; stops once every sub-cell
    /// within `horizon` is settled, or when `target` is settled.
    fn run(&mut self, source: usize, horizon: f64, target: Option<usize>) {
        self.reset();
        self.dist[source] = 0.0;
        self.counts[source] = (0, 0);
        self.touched.push(source as u32);
        self.heap.push(HeapEntry {
            dist: 0.0,
            node: source as u32,
        });
        // Lengths are recomputed from move counts rather than accumulated, so
        // a path has the same length whichever end the search starts from.
        let step = self.grid.step;
        let length = |a: u32, b: u32| (a as f64 + b as f64 * std::f64::consts::SQRT_2) * step;
        let cols = self.grid.cols as isize;
        let offsets: [isize; 8] = MOVES.map(|(dr, dc)| dr * cols + dc);
        while let Some(HeapEntry { dist, node }) = self.heap.pop() {
            let u = node as usize;
            if dist > self.dist[u] {
                continue;
            }
            if dist > horizon || Some(u) == target {
                break;
            }
            let mask = self.grid.moves[u];
            let (a, b) = self.counts[u];
            for (k, &off) in offsets.iter().enumerate() {
                if mask & (1 << k) == 0 {
                    continue;
                }
                let j = (u as isize + off) as usize;
                let (na, nb) = if k < 4 { (a + 1, b) } else { (a, b + 1) };
                let nd = length(na, nb);
                if nd < self.dist[j] {
                    if self.dist[j].is_infinite() {
                        self.touched.push(j as u32);
                    }
                    self.dist[j] = nd;
                    self.counts[j] = (na, nb);
                    self.heap.push(HeapEntry {
                        dist: nd,
                        node: j as u32,
                    });
                }
            }
        }
    }

    /// Settles all sub-cells within `horizon` of `source` (unbounded for infinity).
    pub fn sweep(&mut self, source: Point, horizon: f64) -> Result<(), DistanceError> {
        let s = self
            .grid
            .index_of(source)
            .ok_or(DistanceError::NotFree(source))?;
        self.run(s, horizon, None);
        self.source = source;
        self.horizon = horizon;
        Ok(())
    }

    /// Oracle distance from the last sweep's source to `q`; infinity when `q`
    /// is unreachable or beyond the sweep horizon.
    pub fn oracle_to(&self, q: Point) -> f64 {
        match self.grid.index_of(q) {
            Some(i) if self.dist[i] <= self.horizon => self.dist[i].max(self.source.dist(q)),
            _ => f64::INFINITY,
        }
    }

    /// Exact oracle distance between two points, `None` when disconnected.
    pub fn distance(&mut self, a: Point, b: Point) -> Result<Option<f64>, DistanceError> {
        let sa = self.grid.index_of(a).ok_or(DistanceError::NotFree(a))?;
        let sb = self.grid.index_of(b).ok_or(DistanceError::NotFree(b))?;
        // Always search from the smaller sub-cell so the result is exactly symmetric.
        let (from, src, dst) = if sb < sa { (b, sb, sa) } else { (a, sa, sb) };
        self.run(src, f64::INFINITY, Some(dst));
        let d = self.dist[dst];
        // Only sub-cells no farther than the target are settled.
        self.source = from;
        self.horizon = d;
        Ok(d.is_finite().then(|| d.max(a.dist(b))))
    }
}

/// Oracle shortest-path length between `a` and `b`; `None` means unreachable.
pub fn oracle_distance(
    world: &MazeWorld,
    a: Point,
    b: Point,
    resolution: u32,
) -> Result<Option<f64>, DistanceError> {
    OracleSession::new(world, resolution).distance(a, b)
}

/// Oracle distances from one source to every sub-cell centre of the grid.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub source: Point,
    pub resolution: u32,
    rows: usize,
    cols: usize,
    step: f64,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn grid_step(&self) -> f64 {
        self.step
    }

    /// Oracle distance to the centre of sub-cell `(row, col)`; infinity for
    /// walls and unreachable cells.
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Value of the sub-cell containing `p`.
    pub fn at_point(&self, p: Point) -> f64 {
        let r = (p.y / self.step).floor();
        let c = (p.x / self.step).floor();
        if r < 0.0 || c < 0.0 || r >= self.rows as f64 || c >= self.cols as f64 {
            return f64::INFINITY;
        }
        self.at(r as usize, c as usize)
    }

    /// Centre of sub-cell `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> Point {
        Point::new((col as f64 + 0.5) * self.step, (row as f64 + 0.5) * self.step)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Full geodesic field from `source` at the given resolution.
pub fn distance_field(
    world: &MazeWorld,
    source: Point,
    resolution: u32,
) -> Result<DistanceField, DistanceError> {
    let mut session = OracleSession::new(world, resolution);
    session.sweep(source, f64::INFINITY)?;
    let mut field = DistanceField {
        source,
        resolution: resolution.max(1),
        rows: session.grid.rows,
        cols: session.grid.cols,
        step: session.grid.step,
        values: Vec::new(),
    };
    let cols = field.cols;
    field.values = session
        .dist
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d.is_finite() {
                d.max(source.dist(field.cell_center(i / cols, i % cols)))
            } else {
                d
            }
        })
        .collect();
    Ok(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Oracle,
    WallPiercing,
    Scaled,
    Noisy,
    /// Scaling applied to noise applied to wall piercing.
    Composite,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Oracle => "oracle",
            EstimatorKind::WallPiercing => "wall_piercing",
            EstimatorKind::Scaled => "scaled",
            EstimatorKind::Noisy => "noisy",
            EstimatorKind::Composite => "composite",
        })
    }
}

impl FromStr for EstimatorKind {
    type Err = DistanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "oracle" => EstimatorKind::Oracle,
            "wall_piercing" | "wallpiercing" => EstimatorKind::WallPiercing,
            "scaled" => EstimatorKind::Scaled,
            "noisy" => EstimatorKind::Noisy,
            "composite" => EstimatorKind::Composite,
            other => return Err(DistanceError::UnknownKind(other.to_string())),
        })
    }
}

/// Maps a pair of free points to an estimated shortest-path length.
///
/// Parameters that do not belong to `kind` are neutral (scale 1, no noise,
/// no piercing), so every kind is evaluated by the same pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceEstimator {
    kind: EstimatorKind,
    scale: f64,
    noise_rel_std: f64,
    pierce_fraction: f64,
    pierce_cap: f64,
    pierce_seed: u64,
    resolution: u32,
}

impl Default for DistanceEstimator {
    fn default() -> Self {
        Self::oracle()
    }
}

impl DistanceEstimator {
    pub fn oracle() -> Self {
        Self {
            kind: EstimatorKind::Oracle,
            scale: 1.0,
            noise_rel_std: 0.0,
            pierce_fraction: 0.0,
            pierce_cap: 1.0,
            pierce_seed: 0,
            resolution: DEFAULT_RESOLUTION,
        }
    }

    pub fn scaled(scale: f64) -> Result<Self, DistanceError> {
        Self::composite(scale, 0.0, 0.0, 1.0).map(|e| e.with_kind(EstimatorKind::Scaled))
    }

    pub fn noisy(noise_rel_std: f64) -> Result<Self, DistanceError> {
        Self::composite(1.0, noise_rel_std, 0.0, 1.0).map(|e| e.with_kind(EstimatorKind::Noisy))
    }

    pub fn wall_piercing(pierce_fraction: f64, pierce_cap: f64) -> Result<Self, DistanceError> {
        Self::composite(1.0, 0.0, pierce_fraction, pierce_cap)
            .map(|e| e.with_kind(EstimatorKind::WallPiercing))
    }

    pub fn composite(
        scale: f64,
        noise_rel_std: f64,
        pierce_fraction: f64,
        pierce_cap: f64,
    ) -> Result<Self, DistanceError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(DistanceError::InvalidParameter("scale must be > 0"));
        }
        if !(noise_rel_std.is_finite() && noise_rel_std >= 0.0) {
            return Err(DistanceError::InvalidParameter("noise_rel_std must be >= 0"));
        }
        if !(0.0..=1.0).contains(&pierce_fraction) {
            return Err(DistanceError::InvalidParameter(
                "pierce_fraction must be in [0, 1]",
            ));
        }
        if !(pierce_cap.is_finite() && pierce_cap >= 1.0) {
            return Err(DistanceError::InvalidParameter("pierce_cap must be >= 1"));
        }
        Ok(Self {
            kind: EstimatorKind::Composite,
            scale,
            noise_rel_std,
            pierce_fraction,
            pierce_cap,
            pierce_seed: 0,
            resolution: DEFAULT_RESOLUTION,
        })
    }

    /// Builds an estimator of `kind`, ignoring the parameters `kind` does not use.
    pub fn from_parts(
        kind: EstimatorKind,
        scale: f64,
        noise_rel_std: f64,
        pierce_fraction: f64,
        pierce_cap: f64,
    ) -> Result<Self, DistanceError> {
        match kind {
            EstimatorKind::Oracle => Ok(Self::oracle()),
            EstimatorKind::Scaled => Self::scaled(scale),
            EstimatorKind::Noisy => Self::noisy(noise_rel_std),
            EstimatorKind::WallPiercing => Self::wall_piercing(pierce_fraction, pierce_cap),
            EstimatorKind::Composite => {
                Self::composite(scale, noise_rel_std, pierce_fraction, pierce_cap)
            }
        }
    }

    fn with_kind(mut self, kind: EstimatorKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_resolution(mut self, resolution: u32) -> Result<Self, DistanceError> {
        if resolution == 0 {
            return Err(DistanceError::InvalidParameter("resolution must be >= 1"));
        }
        self.resolution = resolution;
        Ok(self)
    }

    /// Seed of the pair hash that decides which pairs are pierced.
    pub fn with_pierce_seed(mut self, seed: u64) -> Self {
        self.pierce_seed = seed;
        self
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn noise_rel_std(&self) -> f64 {
        self.noise_rel_std
    }

    pub fn pierce_fraction(&self) -> f64 {
        self.pierce_fraction
    }

    pub fn pierce_cap(&self) -> f64 {
        self.pierce_cap
    }

    /// True when repeated estimates of one pair may differ.
    pub fn is_stochastic(&self) -> bool {
        self.noise_rel_std > 0.0
    }

    pub fn session<'w>(&self, world: &'w MazeWorld) -> OracleSession<'w> {
        OracleSession::new(world, self.resolution)
    }

    /// Largest oracle distance that can still produce an estimate below
    /// `cutoff`; `None` when no such bound exists (noisy estimates).
    pub fn horizon(&self, cutoff: f64) -> Option<f64> {
        if self.is_stochastic() {
            return None;
        }
        let base = cutoff / self.scale;
        Some(if self.pierce_fraction > 0.0 {
            base * self.pierce_cap
        } else {
            base
        })
    }

    /// Whether the unordered pair `{a, b}` is affected by wall piercing.
    pub fn is_pierced(&self, a: Point, b: Point) -> bool {
        if self.pierce_fraction <= 0.0 {
            return false;
        }
        let ka = (a.x.to_bits(), a.y.to_bits());
        let kb = (b.x.to_bits(), b.y.to_bits());
        let (lo, hi) = if ka <= kb { (ka, kb) } else { (kb, ka) };
        let h = [lo.0, lo.1, hi.0, hi.1]
            .iter()
            .fold(splitmix64(self.pierce_seed), |acc, &v| splitmix64(acc ^ v));
        let u = (h >> 11) as f64 / (1u64 << 53) as f64;
        u < self.pierce_fraction
    }

    /// Applies the corruption pipeline to a known oracle distance.
    /// Infinity (unreachable or beyond a sweep horizon) stays infinite.
    pub fn from_oracle<R: Rng + ?Sized>(&self, oracle: f64, a: Point, b: Point, rng: &mut R) -> f64 {
        let mut d = oracle;
        if self.pierce_fraction > 0.0 && d.is_finite() {
            let straight = a.dist(b);
            if d <= self.pierce_cap * straight && self.is_pierced(a, b) {
                d = d.min(straight);
            }
        }
        if self.noise_rel_std > 0.0 && d.is_finite() {
            let normal = Normal::new(0.0, self.noise_rel_std).expect("validated std");
            d = (d * (1.0 + normal.sample(rng))).max(0.0);
        }
        d * self.scale
    }

    /// Symmetrised estimate: the larger of the two directional estimates.
    pub fn sym_from_oracle<R: Rng + ?Sized>(
        &self,
        oracle: f64,
        a: Point,
        b: Point,
        rng: &mut R,
    ) -> f64 {
        let ab = self.from_oracle(oracle, a, b, rng);
        if self.is_stochastic() {
            ab.max(self.from_oracle(oracle, b, a, rng))
        } else {
            ab
        }
    }

    /// Estimated distance from `a` to `b`; `None` when unreachable.
    pub fn estimate<R: Rng + ?Sized>(
        &self,
        world: &MazeWorld,
        a: Point,
        b: Point,
        rng: &mut R,
    ) -> Result<Option<f64>, DistanceError> {
        let oracle = oracle_distance(world, a, b, self.resolution)?;
        Ok(oracle.map(|o| self.from_oracle(o, a, b, rng)))
    }

    /// `max(estimate(a, b), estimate(b, a))`; `None` when unreachable.
    pub fn estimate_sym<R: Rng + ?Sized>(
        &self,
        world: &MazeWorld,
        a: Point,
        b: Point,
        rng: &mut R,
    ) -> Result<Option<f64>, DistanceError> {
        let oracle = oracle_distance(world, a, b, self.resolution)?;
        Ok(oracle.map(|o| self.sym_from_oracle(o, a, b, rng)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::load_maze;
    use crate::seed::stream;

    fn corridor() -> MazeWorld {
        load_maze("##########\n#........#\n##########").unwrap()
    }

    #[test]
    fn identical_points_are_zero() {
        let w = MazeWorld::default_maze();
        let p = Point::new(5.3, 5.7);
        assert_eq!(oracle_distance(&w, p, p, 4).unwrap(), Some(0.0));
    }

    #[test]
    fn corridor_distance_is_euclidean() {
        let w = corridor();
        let d = oracle_distance(&w, Point::new(2.1, 1.5), Point::new(7.1, 1.5), 4)
            .unwrap()
            .unwrap();
        assert!((d - 5.0).abs() <= 0.25, "{d}");
    }

    #[test]
    fn wall_input_is_error() {
        let w = corridor();
        assert_eq!(
            oracle_distance(&w, Point::new(0.5, 0.5), Point::new(2.5, 1.5), 4),
            Err(DistanceError::NotFree(Point::new(0.5, 0.5)))
        );
    }

    #[test]
    fn disconnected_is_unreachable() {
        let w = load_maze("#####\n#.#.#\n#####").unwrap();
        let d = oracle_distance(&w, Point::new(1.5, 1.5), Point::new(3.5, 1.5), 2).unwrap();
        assert_eq!(d, None);
    }

    #[test]
    fn field_sum_on_open_three_by_three() {
        let w = load_maze("#####\n#...#\n#...#\n#...#\n#####").unwrap();
        let f = distance_field(&w, Point::new(2.5, 2.5), 1).unwrap();
        let sum: f64 = (1..4)
            .flat_map(|r| (1..4).map(move |c| (r, c)))
            .map(|(r, c)| f.at(r, c))
            .sum();
        assert!((sum - (4.0 + 4.0 * std::f64::consts::SQRT_2)).abs() < 1e-12);
        assert_eq!(f.at_point(Point::new(2.5, 2.5)), 0.0);
    }

    #[test]
    fn field_agrees_with_pairwise_oracle() {
        let w = MazeWorld::default_maze();
        let res = 2;
        let src = Point::new(5.25, 7.25);
        let f = distance_field(&w, src, res).unwrap();
        let mut session = OracleSession::new(&w, res);
        for r in (0..f.rows()).step_by(7) {
            for c in (0..f.cols()).step_by(5) {
                let q = f.cell_center(r, c);
                if !w.is_free(q) {
                    continue;
                }
                let d = session.distance(src, q).unwrap().unwrap();
                assert_eq!(f.at(r, c), d);
            }
        }
    }

    #[test]
    fn scaled_multiplies_oracle() {
        let est = DistanceEstimator::scaled(1.4).unwrap();
        let mut rng = stream(0, &[]);
        let d = est.from_oracle(10.0, Point::new(1.0, 1.0), Point::new(5.0, 1.0), &mut rng);
        assert!((d - 14.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_kind_is_identity() {
        let w = MazeWorld::default_maze();
        let est = DistanceEstimator::oracle();
        let mut rng = stream(0, &[]);
        let (a, b) = (Point::new(2.5, 2.5), Point::new(30.5, 30.5));
        assert_eq!(
            est.estimate(&w, a, b, &mut rng).unwrap(),
            oracle_distance(&w, a, b, 4).unwrap()
        );
    }

    #[test]
    fn pierced_pair_looks_straight() {
        let w = load_maze("#########\n#...#...#\n#...#...#\n#.......#\n#########").unwrap();
        let (a, b) = (Point::new(3.5, 1.5), Point::new(5.5, 1.5));
        let truth = oracle_distance(&w, a, b, 4).unwrap().unwrap();
        assert!(truth > 4.0);
        let est = DistanceEstimator::wall_piercing(1.0, 10.0).unwrap();
        let mut rng = stream(0, &[]);
        let d = est.estimate(&w, a, b, &mut rng).unwrap().unwrap();
        assert_eq!(d, 2.0);
        let none = DistanceEstimator::wall_piercing(0.0, 10.0).unwrap();
        assert_eq!(none.estimate(&w, a, b, &mut rng).unwrap().unwrap(), truth);
    }

    #[test]
    fn pierce_decision_is_stable_and_unordered() {
        let est = DistanceEstimator::wall_piercing(0.5, 10.0).unwrap();
        let mut hits = 0;
        for i in 0..1000 {
            let a = Point::new(i as f64 * 0.37, 1.0);
            let b = Point::new(2.0, i as f64 * 0.11);
            assert_eq!(est.is_pierced(a, b), est.is_pierced(b, a));
            assert_eq!(est.is_pierced(a, b), est.is_pierced(a, b));
            hits += usize::from(est.is_pierced(a, b));
        }
        assert!((400..600).contains(&hits), "{hits}");
    }

    #[test]
    fn noisy_is_non_negative_and_centred() {
        let est = DistanceEstimator::noisy(0.5).unwrap();
        let mut rng = stream(4, &[]);
        let (a, b) = (Point::new(1.0, 1.0), Point::new(2.0, 1.0));
        let n = 20_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let d = est.from_oracle(10.0, a, b, &mut rng);
            assert!(d >= 0.0);
            sum += d;
        }
        assert!((sum / n as f64 - 10.0).abs() < 0.2);
    }

    #[test]
    fn horizon_bounds() {
        assert_eq!(DistanceEstimator::oracle().horizon(5.0), Some(5.0));
        assert_eq!(DistanceEstimator::scaled(2.0).unwrap().horizon(5.0), Some(2.5));
        assert_eq!(
            DistanceEstimator::wall_piercing(0.1, 6.0).unwrap().horizon(5.0),
            Some(30.0)
        );
        assert_eq!(DistanceEstimator::noisy(0.1).unwrap().horizon(5.0), None);
    }

    #[test]
    fn parameter_validation() {
        assert!(DistanceEstimator::scaled(0.0).is_err());
        assert!(DistanceEstimator::noisy(-1.0).is_err());
        assert!(DistanceEstimator::wall_piercing(1.5, 2.0).is_err());
        assert!(DistanceEstimator::wall_piercing(0.5, 0.5).is_err());
        assert!(DistanceEstimator::oracle().with_resolution(0).is_err());
        assert_eq!("Composite".parse::<EstimatorKind>().unwrap(), EstimatorKind::Composite);
        assert!("qnet".parse::<EstimatorKind>().is_err());
    }

    #[test]
    fn bounded_sweep_matches_exact_inside_horizon() {
        let w = MazeWorld::default_maze();
        let mut bounded = OracleSession::new(&w, 4);
        let mut exact = OracleSession::new(&w, 4);
        let mut rng = stream(21, &[]);
        for _ in 0..20 {
            let a = w.sample_free(&mut rng).unwrap();
            bounded.sweep(a, 6.0).unwrap();
            for _ in 0..30 {
                let b = w.sample_free(&mut rng).unwrap();
                let truth = exact.distance(a, b).unwrap().unwrap_or(f64::INFINITY);
                let got = bounded.oracle_to(b);
                if truth <= 6.0 {
                    assert_eq!(got, truth);
                } else {
                    assert!(got.is_infinite() || got == truth);
                }
            }
        }
    }
}
