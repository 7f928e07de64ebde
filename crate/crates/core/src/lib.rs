//! Online adaptation of waypoint-graph planning parameters.
//!
//! An agent with limited reaction capability navigates a continuous 2D maze by
//! following subgoals chosen from a graph of sampled waypoints. Two planning
//! parameters shape that graph: the waypoint count `w` and the maximum edge
//! length `e`. This crate simulates the agent, classifies each task into
//! *success*, *cannot reach* or *no path*, and adapts `(w, e)` online with an
//! outcome-driven update rule combined with an exponential pattern search.
//!
//! Module map:
//!
//! - [`env`]: maze geometry, noisy motion and the greedy reactive controller.
//! - [`distance`]: geodesic oracle plus corrupted distance estimators.
//! - [`plangraph`]: waypoint graph, all-pairs cache and Dijkstra queries.
//! - [`rollout`]: task execution and outcome statistics.
//! - [`adapt`]: parameter updates, pattern search and the adaptation loop.

pub mod adapt;
pub mod distance;
pub mod env;
pub mod plangraph;
pub mod rollout;
pub mod seed;

pub use adapt::{
    predict_sr, predict_sr_simplified, run_adaptation, update_once, Action, AdaptConfig, AdaptTrace,
    Evaluator, PatternSearchState, ScriptedEvaluator, SimEvaluator, TraceRecord, Variant,
};
pub use distance::{
    distance_field, OracleSession, oracle_distance, DistanceError, DistanceEstimator, DistanceField,
    EstimatorKind,
};
pub use env::{load_maze, MapError, MazeWorld, Point, ReactionModel};
pub use plangraph::{
    build_graph, waypoint_count, GoalRouter, Hop, PlanError, PlanResult, PlanStatus, PlanningGraph,
};
pub use rollout::{
    write_episode_csv, EpisodeRecord, Execution, Outcome, OutcomeTag, Protocol, RolloutOptions,
    RolloutStats, Simulator, TaskSpec,
};
