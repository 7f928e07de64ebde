//! Task execution and outcome statistics.
//!
//! One evaluation batch draws `n_settings` independent waypoint graphs and
//! runs `tasks_per_setting` random tasks on each. Every task ends in exactly
//! one of three outcomes: the agent reached the goal, the planner found a path
//! the agent could not follow, or the planner found no path at all.
//!
//! Task time is counted in simulated cost units: one per control step plus
//! `query_cost` per distance-estimator evaluation made by the planner.

use std::fmt;
use std::io::{self, Write};

use rand::Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::distance::{DistanceEstimator, OracleSession};
use crate::env::{MazeWorld, Point, ReactionModel};
use crate::plangraph::{build_graph, Hop, PlanError, PlanStatus, PlanningGraph};
use crate::seed::{self, SimRng};

const MAX_TASK_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSpec {
    pub start: Point,
    pub goal: Point,
    pub max_total_steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeTag {
    Success,
    CannotReach,
    NoPath,
}

impl fmt::Display for OutcomeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeTag::Success => "success",
            OutcomeTag::CannotReach => "cannot_reach",
            OutcomeTag::NoPath => "no_path",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub tag: OutcomeTag,
    pub steps_taken: u64,
    /// Intermediate waypoints on the planned path.
    pub path_waypoints: usize,
    /// Distance-estimator evaluations made by the planner during the task.
    pub queries: u64,
}

impl Outcome {
    fn new(tag: OutcomeTag, steps_taken: u64, path_waypoints: usize, queries: u64) -> Self {
        Self {
            tag,
            steps_taken,
            path_waypoints,
            queries,
        }
    }

    /// Task time in cost units.
    pub fn task_time(&self, query_cost: f64) -> f64 {
        self.steps_taken as f64 + query_cost * self.queries as f64
    }
}

/// One episode of an evaluation batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub setting: usize,
    pub task: usize,
    pub outcome: Outcome,
}

/// Outcome frequencies over one evaluation batch.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStats {
    pub rate_success: f64,
    pub rate_cannot_reach: f64,
    pub rate_no_path: f64,
    /// Mean task time over successful episodes; `None` without successes.
    pub avg_task_time: Option<f64>,
    pub episodes: usize,
}

impl RolloutStats {
    /// Rates that put all mass on `tag`.
    pub fn pure(tag: OutcomeTag) -> Self {
        Self::from_rates(
            f64::from(tag == OutcomeTag::Success),
            f64::from(tag == OutcomeTag::CannotReach),
            f64::from(tag == OutcomeTag::NoPath),
        )
    }

    pub fn from_rates(success: f64, cannot_reach: f64, no_path: f64) -> Self {
        Self {
            rate_success: success,
            rate_cannot_reach: cannot_reach,
            rate_no_path: no_path,
            avg_task_time: None,
            episodes: 0,
        }
    }

    pub fn from_outcomes<'a, I>(outcomes: I, query_cost: f64) -> Self
    where
        I: IntoIterator<Item = &'a Outcome>,
    {
        let (mut n, mut ok, mut cr, mut np) = (0usize, 0usize, 0usize, 0usize);
        let mut time = 0.0;
        for o in outcomes {
            n += 1;
            match o.tag {
                OutcomeTag::Success => {
                    ok += 1;
                    time += o.task_time(query_cost);
                }
                OutcomeTag::CannotReach => cr += 1,
                OutcomeTag::NoPath => np += 1,
            }
        }
        let denom = n.max(1) as f64;
        Self {
            rate_success: ok as f64 / denom,
            rate_cannot_reach: cr as f64 / denom,
            rate_no_path: np as f64 / denom,
            avg_task_time: (ok > 0).then(|| time / ok as f64),
            episodes: n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Protocol {
    pub n_settings: usize,
    pub tasks_per_setting: usize,
}

impl Default for Protocol {
    /// 40 waypoint settings with 5 tasks each.
    fn default() -> Self {
        Self {
            n_settings: 40,
            tasks_per_setting: 5,
        }
    }
}

impl Protocol {
    pub fn episodes(&self) -> usize {
        self.n_settings * self.tasks_per_setting
    }
}

/// How the independent waypoint settings of a batch are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutOptions {
    /// Re-select the subgoal at every step instead of following one fixed path.
    pub replanning: bool,
    /// Cost units charged per distance-estimator evaluation.
    pub query_cost: f64,
    /// Per-task step cap; `None` means 50 x maze diagonal / max step.
    pub max_total_steps: Option<u64>,
    pub execution: Execution,
}

impl Default for RolloutOptions {
    fn default() -> Self {
        Self {
            replanning: false,
            query_cost: 0.05,
            max_total_steps: None,
            execution: Execution::Parallel,
        }
    }
}

/// A world, controller and distance estimator evaluated together.
#[derive(Debug, Clone, Copy)]
pub struct Simulator<'a> {
    pub world: &'a MazeWorld,
    pub model: &'a ReactionModel,
    pub estimator: &'a DistanceEstimator,
    pub options: RolloutOptions,
}

impl<'a> Simulator<'a> {
    pub fn new(
        world: &'a MazeWorld,
        model: &'a ReactionModel,
        estimator: &'a DistanceEstimator,
        options: RolloutOptions,
    ) -> Self {
        Self {
            world,
            model,
            estimator,
            options,
        }
    }

    pub fn max_total_steps(&self) -> u64 {
        self.options
            .max_total_steps
            .unwrap_or_else(|| (50.0 * self.world.diagonal() / self.world.max_step()).ceil() as u64)
    }

    /// Random start/goal pair that is distinct and connected in the maze.
    pub fn sample_task<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TaskSpec, PlanError> {
        for _ in 0..MAX_TASK_REJECTIONS {
            let start = self.world.sample_free(rng)?;
            let goal = self.world.sample_free(rng)?;
            if start != goal && self.world.connected(start, goal) {
                return Ok(TaskSpec {
                    start,
                    goal,
                    max_total_steps: self.max_total_steps(),
                });
            }
        }
        Err(PlanError::InvalidParameter("no connected start/goal pair found"))
    }

    fn subgoal_budget<R: Rng + ?Sized>(
        &self,
        session: &mut OracleSession<'_>,
        from: Point,
        to: Point,
        rng: &mut R,
    ) -> Result<u64, PlanError> {
        let oracle = session.distance(from, to)?.unwrap_or(f64::INFINITY);
        let estimate = self.estimator.sym_from_oracle(oracle, from, to, rng);
        Ok(self.model.budget(estimate))
    }

    /// Plans on `graph` and drives the agent along the plan.
    pub fn run_task<R: Rng + ?Sized>(
        &self,
        graph: &PlanningGraph,
        session: &mut OracleSession<'_>,
        task: &TaskSpec,
        rng: &mut R,
    ) -> Result<Outcome, PlanError> {
        let radius = self.world.goal_radius();
        if task.start.dist(task.goal) <= radius {
            return Ok(Outcome::new(OutcomeTag::Success, 0, 0, 0));
        }
        let plan = graph.shortest_path(session, self.estimator, task.start, task.goal, rng)?;
        if plan.status == PlanStatus::NoPath {
            return Ok(Outcome::new(OutcomeTag::NoPath, 0, 0, plan.queries));
        }
        let path_waypoints = plan.path.len() - 2;
        if self.options.replanning {
            return self.follow_replanning(graph, session, task, path_waypoints, plan.queries, rng);
        }

        let mut s = task.start;
        let mut steps = 0u64;
        let mut queries = plan.queries;
        for &subgoal in &plan.path[1..] {
            let budget = self.subgoal_budget(session, s, subgoal, rng)?;
            queries += 1;
            let mut used = 0u64;
            while s.dist(subgoal) > radius {
                if used == budget || steps == task.max_total_steps {
                    return Ok(Outcome::new(OutcomeTag::CannotReach, steps, path_waypoints, queries));
                }
                let a = self.model.react(self.world, s, subgoal, rng);
                s = self.world.step(s, a, rng);
                used += 1;
                steps += 1;
            }
        }
        Ok(Outcome::new(OutcomeTag::Success, steps, path_waypoints, queries))
    }

    fn follow_replanning<R: Rng + ?Sized>(
        &self,
        graph: &PlanningGraph,
        session: &mut OracleSession<'_>,
        task: &TaskSpec,
        path_waypoints: usize,
        plan_queries: u64,
        rng: &mut R,
    ) -> Result<Outcome, PlanError> {
        let radius = self.world.goal_radius();
        let router = graph.route_to(session, self.estimator, task.goal, rng)?;
        let mut queries = plan_queries + graph.len() as u64;
        let mut s = task.start;
        let mut steps = 0u64;
        let mut current: Option<Hop> = None;
        let mut budget = 0u64;
        let mut used = 0u64;
        let fail = |steps, queries| Outcome::new(OutcomeTag::CannotReach, steps, path_waypoints, queries);
        loop {
            if s.dist(task.goal) <= radius {
                return Ok(Outcome::new(OutcomeTag::Success, steps, path_waypoints, queries));
            }
            if steps == task.max_total_steps {
                return Ok(fail(steps, queries));
            }
            let (hop, q) = router.next_hop(graph, session, self.estimator, s, radius, rng)?;
            queries += q;
            let Some(hop) = hop else {
                return Ok(fail(steps, queries));
            };
            let target = router.point(graph, hop);
            if current != Some(hop) {
                current = Some(hop);
                budget = self.subgoal_budget(session, s, target, rng)?;
                queries += 1;
                used = 0;
            }
            if used == budget {
                return Ok(fail(steps, queries));
            }
            let a = self.model.react(self.world, s, target, rng);
            s = self.world.step(s, a, rng);
            used += 1;
            steps += 1;
        }
    }

    /// Runs one batch with a master seed drawn from `rng`.
    pub fn evaluate<R: Rng + ?Sized>(
        &self,
        w: f64,
        e: f64,
        protocol: Protocol,
        rng: &mut R,
    ) -> Result<RolloutStats, PlanError> {
        self.evaluate_seeded(w, e, protocol, rng.random())
    }

    pub fn evaluate_seeded(
        &self,
        w: f64,
        e: f64,
        protocol: Protocol,
        master: u64,
    ) -> Result<RolloutStats, PlanError> {
        let episodes = self.episodes(w, e, protocol, master)?;
        Ok(RolloutStats::from_outcomes(
            episodes.iter().map(|r| &r.outcome),
            self.options.query_cost,
        ))
    }

    /// Every episode of one batch, ordered by setting then task. Setting `s`
    /// samples its graph from stream `(master, s, 0)` and task `t` runs on
    /// stream `(master, s, t + 1)`, so the result is schedule independent.
    pub fn episodes(
        &self,
        w: f64,
        e: f64,
        protocol: Protocol,
        master: u64,
    ) -> Result<Vec<EpisodeRecord>, PlanError> {
        if protocol.n_settings == 0 || protocol.tasks_per_setting == 0 {
            return Err(PlanError::InvalidParameter("protocol sizes must be >= 1"));
        }
        let run_setting = |setting: usize| -> Result<Vec<EpisodeRecord>, PlanError> {
            let mut graph_rng: SimRng = seed::stream(master, &[setting as u64, 0]);
            let graph = build_graph(self.world, self.estimator, w, e, &mut graph_rng)?;
            let mut session = self.estimator.session(self.world);
            (0..protocol.tasks_per_setting)
                .map(|task| {
                    let mut rng: SimRng =
                        seed::stream(master, &[setting as u64, task as u64 + 1]);
                    let spec = self.sample_task(&mut rng)?;
                    let outcome = self.run_task(&graph, &mut session, &spec, &mut rng)?;
                    Ok(EpisodeRecord {
                        setting,
                        task,
                        outcome,
                    })
                })
                .collect()
        };
        let per_setting: Vec<Result<Vec<EpisodeRecord>, PlanError>> =
            map_indices(protocol.n_settings, self.options.execution, run_setting);
        let mut all = Vec::with_capacity(protocol.episodes());
        for batch in per_setting {
            all.extend(batch?);
        }
        Ok(all)
    }
}

fn map_indices<T, F>(n: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Writes per-episode lines `setting,task,tag,steps,path_waypoints`.
pub fn write_episode_csv<W: Write>(mut out: W, episodes: &[EpisodeRecord]) -> io::Result<()> {
    writeln!(out, "setting,task,tag,steps,path_waypoints")?;
    for r in episodes {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.setting, r.task, r.outcome.tag, r.outcome.steps_taken, r.outcome.path_waypoints
        )?;
    }
    Ok(())
}
