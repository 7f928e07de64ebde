//! Online adaptation of the planning parameters.
//!
//! Each iteration evaluates the agent at the current `(w, e)` and reacts to
//! the outcome frequencies:
//!
//! 1. cannot-reach above `cth`: the agent's reach is overestimated, so `e`
//!    decreases;
//! 2. otherwise no-path above `cth`: the graph is too sparse, so both `w` and
//!    `e` increase;
//! 3. otherwise: try fewer waypoints, so `w` decreases.
//!
//! Increases and decreases go through a per-parameter pattern search whose
//! increments grow exponentially during a few warm-up phases and whose
//! decrement decays each time a settled parameter has to grow again. The
//! search ends once the decrement of `w` falls below `tth`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::plangraph::PlanError;
use crate::rollout::{Protocol, RolloutStats, Simulator};
use crate::seed::SimRng;

/// Which pattern-search update rule a parameter follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    /// Exponential growth only while increases are consecutive; ends when `d < tth`.
    #[default]
    Alg2,
    /// Exponential growth while an increase happened within the last
    /// `count` iterations.
    Alg3,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Alg2 => "alg2",
            Variant::Alg3 => "alg3",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alg2" | "2" => Ok(Variant::Alg2),
            "alg3" | "3" => Ok(Variant::Alg3),
            other => Err(format!("unknown pattern-search variant {other:?}")),
        }
    }
}

/// Search status of one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSearchState {
    pub value: f64,
    /// Base increment.
    pub i: f64,
    /// Current decrement.
    pub d: f64,
    /// Current increment multiplier.
    pub k: f64,
    /// Remaining exponential phases.
    pub n: u32,
    pub rho: f64,
    pub gamma: f64,
    pub tth: f64,
    /// Value `c` is reset to after an increase (Alg3 only).
    pub count_reset: u32,
    /// Iterations left in the current exponential window (Alg3 only).
    pub c: u32,
    pub variant: Variant,
}

impl PatternSearchState {
    /// Defaults for the waypoint count: start at 1, `i = 3`, `d = 1`,
    /// `n = 3`, `rho = 2`, `gamma = 0.9`, `tth = 0.1`, `count = 4`.
    pub fn waypoints(variant: Variant) -> Self {
        Self {
            value: 1.0,
            i: 3.0,
            d: 1.0,
            k: 1.0,
            n: 3,
            rho: 2.0,
            gamma: 0.9,
            tth: 0.1,
            count_reset: 4,
            c: 0,
            variant,
        }
    }

    /// Defaults for the maximum edge length: start at 1, `i = 1`, `d = 0.25`,
    /// other constants as for the waypoint count.
    pub fn edge_length(variant: Variant) -> Self {
        Self {
            value: 1.0,
            i: 1.0,
            d: 0.25,
            ..Self::waypoints(variant)
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !(self.value.is_finite() && self.value >= 1.0) {
            return Err("initial value must be >= 1".into());
        }
        if !positive(self.i) || !positive(self.d) || !positive(self.tth) {
            return Err("i, d and tth must be > 0".into());
        }
        if !(self.rho.is_finite() && self.rho >= 1.0) {
            return Err("rho must be >= 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err("gamma must be in (0, 1)".into());
        }
        if self.variant == Variant::Alg3 && self.count_reset == 0 {
            return Err("count must be >= 1".into());
        }
        Ok(())
    }

    pub fn ps_increase(&mut self) {
        match self.variant {
            Variant::Alg2 => {
                self.value += self.k * self.i;
                if self.n > 0 {
                    self.k *= self.rho;
                } else {
                    self.d *= self.gamma;
                }
            }
            Variant::Alg3 => {
                if self.c > 0 {
                    self.k *= self.rho;
                } else {
                    self.k = 1.0;
                }
                if self.n == 0 {
                    self.d *= self.gamma;
                }
                self.value += self.k * self.i;
                self.c = self.count_reset;
            }
        }
        self.clamp();
    }

    pub fn ps_decrease(&mut self) {
        match self.variant {
            Variant::Alg2 => match self.n {
                0 => self.value -= self.d,
                1 => {
                    self.n = 0;
                    self.value -= self.d;
                    self.k = 1.0;
                }
                _ => {
                    self.n -= 1;
                    self.value -= self.k / self.rho * self.i;
                    self.k = 1.0;
                }
            },
            Variant::Alg3 => {
                if self.n > 0 && self.c == 1 {
                    self.n -= 1;
                    self.value -= self.k * self.i;
                } else {
                    self.value -= self.d;
                }
                self.c = self.c.saturating_sub(1);
            }
        }
        self.clamp();
    }

    fn clamp(&mut self) {
        if self.value < 1.0 {
            self.value = 1.0;
        }
    }

    pub fn terminated(&self) -> bool {
        self.d < self.tth
    }
}

/// Predicted success rate once `w` has converged:
/// `1 - (i * cth / 2 + tth * cth) / (i + tth)`.
pub fn predict_sr(i: f64, cth: f64, tth: f64) -> f64 {
    1.0 - (i * cth / 2.0 + tth * cth) / (i + tth)
}

/// Large-`i` limit of [`predict_sr`]: `1 - cth / 2`.
pub fn predict_sr_simplified(cth: f64) -> f64 {
    1.0 - cth / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    DecreaseE,
    IncreaseBoth,
    DecreaseW,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::DecreaseE => "decrease_e",
            Action::IncreaseBoth => "increase_both",
            Action::DecreaseW => "decrease_w",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig {
    /// Outcome frequency above which a problem triggers a change.
    pub cth: f64,
    pub w_state: PatternSearchState,
    pub e_state: PatternSearchState,
    pub max_iterations: usize,
}

impl AdaptConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            cth: 0.05,
            w_state: PatternSearchState::waypoints(variant),
            e_state: PatternSearchState::edge_length(variant),
            max_iterations: 300,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.cth > 0.0 && self.cth < 1.0) {
            return Err("cth must be in (0, 1)".into());
        }
        self.w_state.validate().map_err(|e| format!("w: {e}"))?;
        self.e_state.validate().map_err(|e| format!("e: {e}"))
    }

    pub fn w(&self) -> f64 {
        self.w_state.value
    }

    pub fn e(&self) -> f64 {
        self.e_state.value
    }
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self::new(Variant::Alg2)
    }
}

/// Chooses and applies one parameter update from the outcome frequencies.
pub fn update_once(stats: &RolloutStats, cfg: &mut AdaptConfig) -> Action {
    if stats.rate_cannot_reach > cfg.cth {
        cfg.e_state.ps_decrease();
        Action::DecreaseE
    } else if stats.rate_no_path > cfg.cth {
        cfg.w_state.ps_increase();
        cfg.e_state.ps_increase();
        Action::IncreaseBoth
    } else {
        cfg.w_state.ps_decrease();
        Action::DecreaseW
    }
}

/// Source of outcome statistics for a parameter setting.
pub trait Evaluator {
    fn evaluate(&mut self, w: f64, e: f64) -> Result<RolloutStats, PlanError>;
}

/// Replays a fixed sequence of statistics, cycling when exhausted.
#[derive(Debug, Clone)]
pub struct ScriptedEvaluator {
    script: Vec<RolloutStats>,
    pos: usize,
}

impl ScriptedEvaluator {
    pub fn new(script: Vec<RolloutStats>) -> Self {
        assert!(!script.is_empty(), "script must not be empty");
        Self { script, pos: 0 }
    }
}

impl Evaluator for ScriptedEvaluator {
    fn evaluate(&mut self, _w: f64, _e: f64) -> Result<RolloutStats, PlanError> {
        let s = self.script[self.pos % self.script.len()].clone();
        self.pos += 1;
        Ok(s)
    }
}

/// Evaluates by simulation; each call draws a fresh batch seed from `rng`.
#[derive(Debug, Clone)]
pub struct SimEvaluator<'a> {
    pub sim: Simulator<'a>,
    pub protocol: Protocol,
    pub rng: SimRng,
}

impl<'a> SimEvaluator<'a> {
    pub fn new(sim: Simulator<'a>, protocol: Protocol, rng: SimRng) -> Self {
        Self { sim, protocol, rng }
    }
}

impl Evaluator for SimEvaluator<'_> {
    fn evaluate(&mut self, w: f64, e: f64) -> Result<RolloutStats, PlanError> {
        self.sim.evaluate(w, e, self.protocol, &mut self.rng)
    }
}

/// One adaptation iteration: the evaluated `(w, e)`, its statistics, the
/// action taken and the search status after the update.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub w: f64,
    pub e: f64,
    pub rate_success: f64,
    pub rate_cannot_reach: f64,
    pub rate_no_path: f64,
    pub avg_task_time: Option<f64>,
    pub action: Action,
    pub d_w: f64,
    pub k_w: f64,
    pub n_w: u32,
    pub d_e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptTrace {
    pub records: Vec<TraceRecord>,
    /// Whether the run ended because the `w` search terminated.
    pub terminated: bool,
    pub final_w: PatternSearchState,
    pub final_e: PatternSearchState,
}

pub const TRACE_HEADER: [&str; 12] = [
    "iteration",
    "w",
    "e",
    "rate_success",
    "rate_cannot_reach",
    "rate_no_path",
    "avg_task_time",
    "action",
    "d_w",
    "k_w",
    "n_w",
    "d_e",
];

impl AdaptTrace {
    /// Writes the trace as CSV with [`TRACE_HEADER`] columns; a missing
    /// average task time is an empty field.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(TRACE_HEADER)?;
        for r in &self.records {
            wtr.write_record([
                r.iteration.to_string(),
                r.w.to_string(),
                r.e.to_string(),
                r.rate_success.to_string(),
                r.rate_cannot_reach.to_string(),
                r.rate_no_path.to_string(),
                r.avg_task_time.map(|t| t.to_string()).unwrap_or_default(),
                r.action.to_string(),
                r.d_w.to_string(),
                r.k_w.to_string(),
                r.n_w.to_string(),
                r.d_e.to_string(),
            ])?;
        }
        wtr.flush()
    }

    /// Records of the last third of the run (at least one record).
    pub fn final_third(&self) -> &[TraceRecord] {
        let n = self.records.len();
        &self.records[n - (n / 3).max(1).min(n)..]
    }
}

/// Alternates evaluation and update until the `w` search terminates or
/// `cfg.max_iterations` iterations have run.
pub fn run_adaptation<E: Evaluator + ?Sized>(
    evaluator: &mut E,
    cfg: &AdaptConfig,
) -> Result<AdaptTrace, PlanError> {
    let mut cfg = cfg.clone();
    let mut records = Vec::new();
    let mut terminated = cfg.w_state.terminated();
    for iteration in 0..cfg.max_iterations {
        if terminated {
            break;
        }
        let (w, e) = (cfg.w(), cfg.e());
        let stats = evaluator.evaluate(w, e)?;
        let action = update_once(&stats, &mut cfg);
        records.push(TraceRecord {
            iteration,
            w,
            e,
            rate_success: stats.rate_success,
            rate_cannot_reach: stats.rate_cannot_reach,
            rate_no_path: stats.rate_no_path,
            avg_task_time: stats.avg_task_time,
            action,
            d_w: cfg.w_state.d,
            k_w: cfg.w_state.k,
            n_w: cfg.w_state.n,
            d_e: cfg.e_state.d,
        });
        terminated = cfg.w_state.terminated();
    }
    Ok(AdaptTrace {
        records,
        terminated,
        final_w: cfg.w_state,
        final_e: cfg.e_state,
    })
}
