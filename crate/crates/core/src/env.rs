//! Continuous 2D maze with noisy point motion and a greedy reactive controller.
//!
//! The world is an occupancy grid; a position `(x, y)` lies in cell
//! `(floor(y / cell_size), floor(x / cell_size))`, row 0 being the first line
//! of the map text. Motion that would cross a wall is truncated just before
//! the first wall contact.

use std::collections::VecDeque;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

/// The multi-room maze shipped with the crate.
pub const DEFAULT_MAP: &str = include_str!("../assets/default.map");

/// Distance the agent is backed off from a wall contact point.
pub const CONTACT_EPSILON: f64 = 1e-3;

const MAX_SAMPLE_REJECTIONS: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("map is empty")]
    Empty,
    #[error("line {line} has length {found}, expected {expected}")]
    Ragged {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("illegal character {ch:?} at line {line}, column {column}")]
    IllegalChar { ch: char, line: usize, column: usize },
    #[error("border cell at line {line}, column {column} is not a wall")]
    OpenBorder { line: usize, column: usize },
    #[error("map has no free cell")]
    NoFreeCell,
    #[error("invalid world parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("no free point found after {0} rejections")]
    SamplingFailed(usize),
}

/// A position or displacement in length units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3})", self.x, self.y)
    }
}

/// Occupancy grid plus the motion model of the agent.
#[derive(Debug, Clone)]
pub struct MazeWorld {
    rows: usize,
    cols: usize,
    walls: Vec<bool>,
    /// Connected-component label per cell; `u32::MAX` for walls.
    regions: Vec<u32>,
    cell_size: f64,
    noise_std: f64,
    max_step: f64,
    goal_radius: f64,
}

/// Parses an ASCII map: `#` is a wall, `.` is free, the border must be walls.
pub fn load_maze(text: &str) -> Result<MazeWorld, MapError> {
    let lines: Vec<&str> = text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    let end = lines
        .iter()
        .rposition(|l| !l.is_empty())
        .ok_or(MapError::Empty)?;
    let lines = &lines[..=end];

    let cols = lines[0].chars().count();
    if cols == 0 {
        return Err(MapError::Empty);
    }
    let rows = lines.len();
    let mut walls = Vec::with_capacity(rows * cols);
    for (r, line) in lines.iter().enumerate() {
        let found = line.chars().count();
        if found != cols {
            return Err(MapError::Ragged {
                line: r + 1,
                expected: cols,
                found,
            });
        }
        for (c, ch) in line.chars().enumerate() {
            let wall = match ch {
                '#' => true,
                '.' => false,
                _ => {
                    return Err(MapError::IllegalChar {
                        ch,
                        line: r + 1,
                        column: c + 1,
                    })
                }
            };
            let border = r == 0 || c == 0 || r + 1 == rows || c + 1 == cols;
            if border && !wall {
                return Err(MapError::OpenBorder {
                    line: r + 1,
                    column: c + 1,
                });
            }
            walls.push(wall);
        }
    }
    if walls.iter().all(|&w| w) {
        return Err(MapError::NoFreeCell);
    }
    let regions = label_regions(rows, cols, &walls);
    Ok(MazeWorld {
        rows,
        cols,
        walls,
        regions,
        cell_size: 1.0,
        noise_std: 0.3,
        max_step: 1.0,
        goal_radius: 1.0,
    })
}

fn label_regions(rows: usize, cols: usize, walls: &[bool]) -> Vec<u32> {
    let mut labels = vec![u32::MAX; walls.len()];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..walls.len() {
        if walls[start] || labels[start] != u32::MAX {
            continue;
        }
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / cols, i % cols);
            let neighbors = [
                (r > 0).then(|| i - cols),
                (r + 1 < rows).then(|| i + cols),
                (c > 0).then(|| i - 1),
                (c + 1 < cols).then(|| i + 1),
            ];
            for j in neighbors.into_iter().flatten() {
                if !walls[j] && labels[j] == u32::MAX {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    labels
}

impl MazeWorld {
    /// The shipped default maze with default motion parameters.
    pub fn default_maze() -> Self {
        load_maze(DEFAULT_MAP).expect("shipped map is valid")
    }

    pub fn with_cell_size(mut self, cell_size: f64) -> Result<Self, MapError> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(MapError::InvalidParameter("cell_size must be > 0"));
        }
        self.cell_size = cell_size;
        Ok(self)
    }

    /// Sets noise standard deviation, maximum action magnitude and goal radius.
    pub fn with_motion(
        mut self,
        noise_std: f64,
        max_step: f64,
        goal_radius: f64,
    ) -> Result<Self, MapError> {
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(MapError::InvalidParameter("noise_std must be >= 0"));
        }
        if !(max_step.is_finite() && max_step > 0.0) {
            return Err(MapError::InvalidParameter("max_step must be > 0"));
        }
        if !(goal_radius.is_finite() && goal_radius > 0.0) {
            return Err(MapError::InvalidParameter("goal_radius must be > 0"));
        }
        self.noise_std = noise_std;
        self.max_step = max_step;
        self.goal_radius = goal_radius;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn max_step(&self) -> f64 {
        self.max_step
    }

    pub fn goal_radius(&self) -> f64 {
        self.goal_radius
    }

    pub fn width(&self) -> f64 {
        self.cols as f64 * self.cell_size
    }

    pub fn height(&self) -> f64 {
        self.rows as f64 * self.cell_size
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn free_cell_count(&self) -> usize {
        self.walls.iter().filter(|&&w| !w).count()
    }

    /// Wall status of cell `(row, col)`; out-of-range cells count as walls.
    pub fn is_wall_cell(&self, row: isize, col: isize) -> bool {
        if row < 0 || col < 0 || row as usize >= self.rows || col as usize >= self.cols {
            return true;
        }
        self.walls[row as usize * self.cols + col as usize]
    }

    /// Cell indices `(row, col)` containing `p`, by floor of coordinate / cell size.
    pub fn cell_of(&self, p: Point) -> (isize, isize) {
        (
            (p.y / self.cell_size).floor() as isize,
            (p.x / self.cell_size).floor() as isize,
        )
    }

    /// Center of cell `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> Point {
        Point::new(
            (col as f64 + 0.5) * self.cell_size,
            (row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn is_free(&self, p: Point) -> bool {
        if !p.is_finite() {
            return false;
        }
        let (r, c) = self.cell_of(p);
        !self.is_wall_cell(r, c)
    }

    /// Connected-component label of the cell containing `p`, if free.
    pub fn region_of(&self, p: Point) -> Option<u32> {
        if !self.is_free(p) {
            return None;
        }
        let (r, c) = self.cell_of(p);
        Some(self.regions[r as usize * self.cols + c as usize])
    }

    /// True when both points are free and lie in the same connected region.
    pub fn connected(&self, a: Point, b: Point) -> bool {
        matches!((self.region_of(a), self.region_of(b)), (Some(x), Some(y)) if x == y)
    }

    /// Moves from `s` along the segment `s -> candidate` and stops
    /// [`CONTACT_EPSILON`] before the first wall contact.
    pub fn truncate_motion(&self, s: Point, candidate: Point) -> Point {
        let dir = candidate - s;
        let len = dir.norm();
        if len == 0.0 || !len.is_finite() {
            return s;
        }
        let cs = self.cell_size;
        let (mut row, mut col) = self.cell_of(s);
        let step_x: isize = if dir.x > 0.0 { 1 } else { -1 };
        let step_y: isize = if dir.y > 0.0 { 1 } else { -1 };
        let boundary = |cell: isize, origin: f64, d: f64| -> f64 {
            if d > 0.0 {
                ((cell + 1) as f64 * cs - origin) / d
            } else if d < 0.0 {
                (cell as f64 * cs - origin) / d
            } else {
                f64::INFINITY
            }
        };
        let mut t_max_x = boundary(col, s.x, dir.x);
        let mut t_max_y = boundary(row, s.y, dir.y);
        let t_delta_x = if dir.x != 0.0 { cs / dir.x.abs() } else { f64::INFINITY };
        let t_delta_y = if dir.y != 0.0 { cs / dir.y.abs() } else { f64::INFINITY };

        let hit_at = loop {
            let t = t_max_x.min(t_max_y);
            if t > 1.0 {
                break None;
            }
            if t_max_x < t_max_y {
                col += step_x;
                t_max_x += t_delta_x;
                if self.is_wall_cell(row, col) {
                    break Some(t);
                }
            } else if t_max_y < t_max_x {
                row += step_y;
                t_max_y += t_delta_y;
                if self.is_wall_cell(row, col) {
                    break Some(t);
                }
            } else {
                // Exact corner crossing: blocked if any of the three cells touching the corner is a wall.
                if self.is_wall_cell(row, col + step_x)
                    || self.is_wall_cell(row + step_y, col)
                    || self.is_wall_cell(row + step_y, col + step_x)
                {
                    break Some(t);
                }
                col += step_x;
                row += step_y;
                t_max_x += t_delta_x;
                t_max_y += t_delta_y;
            }
        };

        let end = match hit_at {
            None => candidate,
            Some(t) => {
                let travel = t * len - CONTACT_EPSILON;
                if travel <= 0.0 {
                    return s;
                }
                s + dir * (travel / len)
            }
        };
        if self.is_free(end) {
            end
        } else {
            s
        }
    }

    /// One transition: commanded displacement plus Gaussian noise per axis,
    /// truncated at walls. Displacements longer than `max_step` are shortened.
    pub fn step<R: Rng + ?Sized>(&self, s: Point, a: Point, rng: &mut R) -> Point {
        let a = clip(a, self.max_step);
        let noise = gaussian_pair(self.noise_std, rng);
        self.truncate_motion(s, s + a + noise)
    }

    /// Uniform free point by rejection sampling over the bounding box.
    pub fn sample_free<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point, MapError> {
        for _ in 0..MAX_SAMPLE_REJECTIONS {
            let p = Point::new(
                rng.random::<f64>() * self.width(),
                rng.random::<f64>() * self.height(),
            );
            if self.is_free(p) {
                return Ok(p);
            }
        }
        Err(MapError::SamplingFailed(MAX_SAMPLE_REJECTIONS))
    }
}

fn clip(v: Point, max_norm: f64) -> Point {
    let n = v.norm();
    if n > max_norm {
        v * (max_norm / n)
    } else {
        v
    }
}

fn gaussian_pair<R: Rng + ?Sized>(std: f64, rng: &mut R) -> Point {
    if std == 0.0 {
        return Point::default();
    }
    let normal = Normal::new(0.0, std).expect("std is finite and non-negative");
    Point::new(normal.sample(rng), normal.sample(rng))
}

/// Greedy stand-in for a learned goal-conditioned policy. It heads straight
/// for the subgoal and never routes around walls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionModel {
    /// Fraction of `max_step` actually commanded, in (0, 1].
    pub step_scale: f64,
    /// Controller jitter added per axis.
    pub extra_noise_std: f64,
    /// Steps allowed per subgoal are `ceil(budget_factor * estimated distance)`.
    pub budget_factor: f64,
    pub budget_floor: u32,
}

impl Default for ReactionModel {
    fn default() -> Self {
        Self::strong()
    }
}

impl ReactionModel {
    pub fn new(
        step_scale: f64,
        extra_noise_std: f64,
        budget_factor: f64,
        budget_floor: u32,
    ) -> Result<Self, MapError> {
        let model = Self {
            step_scale,
            extra_noise_std,
            budget_factor,
            budget_floor,
        };
        model.validate()?;
        Ok(model)
    }

    /// Full-speed, jitter-free controller with a generous budget.
    pub fn strong() -> Self {
        Self {
            step_scale: 1.0,
            extra_noise_std: 0.0,
            budget_factor: 3.0,
            budget_floor: 5,
        }
    }

    /// Slower, jittery controller with a tight budget.
    pub fn weak() -> Self {
        Self {
            step_scale: 0.7,
            extra_noise_std: 0.05,
            budget_factor: 2.0,
            budget_floor: 5,
        }
    }

    pub fn validate(&self) -> Result<(), MapError> {
        if !(self.step_scale > 0.0 && self.step_scale <= 1.0) {
            return Err(MapError::InvalidParameter("step_scale must be in (0, 1]"));
        }
        if !(self.extra_noise_std.is_finite() && self.extra_noise_std >= 0.0) {
            return Err(MapError::InvalidParameter("extra_noise_std must be >= 0"));
        }
        if !(self.budget_factor.is_finite() && self.budget_factor >= 1.0) {
            return Err(MapError::InvalidParameter("budget_factor must be >= 1"));
        }
        if self.budget_floor < 1 {
            return Err(MapError::InvalidParameter("budget_floor must be >= 1"));
        }
        Ok(())
    }

    /// Step budget for a subgoal at estimated distance `estimate`.
    pub fn budget(&self, estimate: f64) -> u64 {
        let floor = u64::from(self.budget_floor);
        if !estimate.is_finite() {
            return floor;
        }
        ((self.budget_factor * estimate).ceil() as u64).max(floor)
    }

    /// Displacement commanded at `s` toward `subgoal`.
    pub fn react<R: Rng + ?Sized>(
        &self,
        world: &MazeWorld,
        s: Point,
        subgoal: Point,
        rng: &mut R,
    ) -> Point {
        let to_goal = subgoal - s;
        let dist = to_goal.norm();
        let reach = self.step_scale * world.max_step();
        let base = if dist > 0.0 {
            to_goal * (reach.min(dist) / dist)
        } else {
            Point::default()
        };
        clip(base + gaussian_pair(self.extra_noise_std, rng), world.max_step())
    }
}
