use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use planadapt::seed::{derive_seed, stream};
use planadapt::{
    run_adaptation, update_once, write_episode_csv, Action, AdaptConfig, AdaptTrace,
    OutcomeTag, RolloutStats, SimEvaluator, Simulator,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::plot::emit_plot;

pub const ADAPT_CSV: &str = "adapt_trace.csv";
pub const ADAPT_SVG: &str = "adapt_trace.svg";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_SVG: &str = "sweep.svg";
pub const ROLLOUT_CSV: &str = "rollout.csv";
pub const EPISODES_CSV: &str = "episodes.csv";
pub const TRACE_SEARCH_CSV: &str = "trace_search.csv";

pub const SWEEP_HEADER: [&str; 8] = [
    "param",
    "value",
    "w",
    "e",
    "rate_success",
    "rate_cannot_reach",
    "rate_no_path",
    "avg_task_time",
];

pub const TRACE_SEARCH_HEADER: [&str; 13] = [
    "step",
    "token",
    "action",
    "w",
    "k_w",
    "n_w",
    "d_w",
    "c_w",
    "e",
    "k_e",
    "n_e",
    "d_e",
    "terminated",
];

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|t| t.to_string()).unwrap_or_default()
}

/// Runs the online adaptation loop and writes the trace CSV and its plot.
pub fn cmd_adapt(cfg: &RunConfig, verbose: bool) -> Result<AdaptTrace, CliError> {
    cfg.validate()?;
    let world = cfg.world()?;
    let est = cfg.estimator()?;
    let model = cfg.reaction_model()?;
    let adapt = cfg.adapt_config()?;
    let sim = Simulator::new(&world, &model, &est, cfg.rollout_options()?);
    let mut evaluator = SimEvaluator::new(sim, cfg.protocol()?, stream(cfg.seed, &[]));
    let trace = run_adaptation(&mut evaluator, &adapt)?;

    if verbose {
        let mut err = io::stderr().lock();
        for r in &trace.records {
            let _ = writeln!(
                err,
                "iter {:>4}  w={:.2} e={:.2}  S={:.3} CR={:.3} NP={:.3}  {}",
                r.iteration, r.w, r.e, r.rate_success, r.rate_cannot_reach, r.rate_no_path, r.action
            );
        }
    }

    prepare_out(&cfg.out)?;
    let mut csv_bytes = Vec::new();
    trace.write_csv(&mut csv_bytes)?;
    write_file(&cfg.out.join(ADAPT_CSV), &csv_bytes)?;
    let svg = emit_plot(
        std::str::from_utf8(&csv_bytes).expect("csv output is utf-8"),
        &["w", "e", "rate_success"],
    )?;
    write_file(&cfg.out.join(ADAPT_SVG), svg.as_bytes())?;
    Ok(trace)
}

/// Mean statistics of one swept value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub w: f64,
    pub e: f64,
    pub rate_success: f64,
    pub rate_cannot_reach: f64,
    pub rate_no_path: f64,
    /// Mean over repetitions that had at least one success.
    pub avg_task_time: Option<f64>,
}

/// Evaluates every swept value `repetitions` times and writes the means.
pub fn cmd_sweep(cfg: &RunConfig, verbose: bool) -> Result<Vec<SweepRow>, CliError> {
    cfg.validate()?;
    cfg.sweep.validate()?;
    let world = cfg.world()?;
    let est = cfg.estimator()?;
    let model = cfg.reaction_model()?;
    let protocol = cfg.protocol()?;
    let sim = Simulator::new(&world, &model, &est, cfg.rollout_options()?);

    let mut rows = Vec::with_capacity(cfg.sweep.values.len());
    for (vi, &value) in cfg.sweep.values.iter().enumerate() {
        let (w, e) = cfg.sweep.point(value);
        let reps = cfg.sweep.repetitions;
        let mut sum = [0.0; 3];
        let mut times = Vec::new();
        for rep in 0..reps {
            let master = derive_seed(cfg.seed, &[vi as u64, rep as u64]);
            let s = sim.evaluate_seeded(w, e, protocol, master)?;
            sum[0] += s.rate_success;
            sum[1] += s.rate_cannot_reach;
            sum[2] += s.rate_no_path;
            times.extend(s.avg_task_time);
        }
        let n = reps as f64;
        let row = SweepRow {
            value,
            w,
            e,
            rate_success: sum[0] / n,
            rate_cannot_reach: sum[1] / n,
            rate_no_path: sum[2] / n,
            avg_task_time: (!times.is_empty())
                .then(|| times.iter().sum::<f64>() / times.len() as f64),
        };
        if verbose {
            eprintln!(
                "{}={value}  S={:.3} CR={:.3} NP={:.3} time={}",
                cfg.sweep.swept,
                row.rate_success,
                row.rate_cannot_reach,
                row.rate_no_path,
                fmt_opt(row.avg_task_time)
            );
        }
        rows.push(row);
    }

    prepare_out(&cfg.out)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(SWEEP_HEADER)?;
    for r in &rows {
        wtr.write_record([
            cfg.sweep.swept.to_string(),
            r.value.to_string(),
            r.w.to_string(),
            r.e.to_string(),
            r.rate_success.to_string(),
            r.rate_cannot_reach.to_string(),
            r.rate_no_path.to_string(),
            fmt_opt(r.avg_task_time),
        ])?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::runtime(e.to_string()))?;
    write_file(&cfg.out.join(SWEEP_CSV), &bytes)?;
    let svg = emit_plot(
        std::str::from_utf8(&bytes).expect("csv output is utf-8"),
        &["rate_success", "rate_cannot_reach", "rate_no_path", "avg_task_time"],
    )?;
    write_file(&cfg.out.join(SWEEP_SVG), svg.as_bytes())?;
    Ok(rows)
}

/// One evaluation batch at `(rollout.w, rollout.e)`.
pub fn cmd_rollout(cfg: &RunConfig, verbose: bool) -> Result<RolloutStats, CliError> {
    cfg.validate()?;
    let world = cfg.world()?;
    let est = cfg.estimator()?;
    let model = cfg.reaction_model()?;
    let options = cfg.rollout_options()?;
    let sim = Simulator::new(&world, &model, &est, options);
    let episodes = sim.episodes(cfg.rollout_w, cfg.rollout_e, cfg.protocol()?, cfg.seed)?;
    let stats = RolloutStats::from_outcomes(episodes.iter().map(|r| &r.outcome), options.query_cost);

    prepare_out(&cfg.out)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "w",
        "e",
        "episodes",
        "rate_success",
        "rate_cannot_reach",
        "rate_no_path",
        "avg_task_time",
    ])?;
    wtr.write_record([
        cfg.rollout_w.to_string(),
        cfg.rollout_e.to_string(),
        stats.episodes.to_string(),
        stats.rate_success.to_string(),
        stats.rate_cannot_reach.to_string(),
        stats.rate_no_path.to_string(),
        fmt_opt(stats.avg_task_time),
    ])?;
    let bytes = wtr.into_inner().map_err(|e| CliError::runtime(e.to_string()))?;
    write_file(&cfg.out.join(ROLLOUT_CSV), &bytes)?;
    if verbose {
        let mut buf = Vec::new();
        write_episode_csv(&mut buf, &episodes)?;
        write_file(&cfg.out.join(EPISODES_CSV), &buf)?;
    }
    Ok(stats)
}

/// Parses a whitespace or comma separated outcome script over `S`, `CR`, `NP`.
pub fn parse_script(script: &str) -> Result<Vec<OutcomeTag>, CliError> {
    script
        .split([' ', ',', '\t', '\n'])
        .filter(|t| !t.is_empty())
        .map(|t| match t.to_ascii_uppercase().as_str() {
            "S" => Ok(OutcomeTag::Success),
            "CR" => Ok(OutcomeTag::CannotReach),
            "NP" => Ok(OutcomeTag::NoPath),
            _ => Err(CliError::config(format!("unknown outcome token {t:?}"))),
        })
        .collect()
}

fn token(tag: OutcomeTag) -> &'static str {
    match tag {
        OutcomeTag::Success => "S",
        OutcomeTag::CannotReach => "CR",
        OutcomeTag::NoPath => "NP",
    }
}

/// Search state after one scripted step.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchStep {
    pub token: OutcomeTag,
    pub action: Action,
    pub cfg: AdaptConfig,
}

/// Feeds scripted pure outcomes through the update rule, stopping after the
/// step on which the `w` search terminates.
pub fn trace_search(cfg: &AdaptConfig, script: &[OutcomeTag]) -> Vec<SearchStep> {
    let mut state = cfg.clone();
    let mut steps = Vec::with_capacity(script.len());
    for &tag in script {
        if state.w_state.terminated() {
            break;
        }
        let action = update_once(&RolloutStats::pure(tag), &mut state);
        steps.push(SearchStep {
            token: tag,
            action,
            cfg: state.clone(),
        });
    }
    steps
}

pub fn trace_search_csv(steps: &[SearchStep]) -> Result<Vec<u8>, CliError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(TRACE_SEARCH_HEADER)?;
    for (i, s) in steps.iter().enumerate() {
        let (w, e) = (&s.cfg.w_state, &s.cfg.e_state);
        wtr.write_record([
            i.to_string(),
            token(s.token).to_string(),
            s.action.to_string(),
            w.value.to_string(),
            w.k.to_string(),
            w.n.to_string(),
            w.d.to_string(),
            w.c.to_string(),
            e.value.to_string(),
            e.k.to_string(),
            e.n.to_string(),
            e.d.to_string(),
            w.terminated().to_string(),
        ])?;
    }
    wtr.into_inner().map_err(|e| CliError::runtime(e.to_string()))
}

pub fn cmd_trace_search(cfg: &RunConfig, script: &str) -> Result<Vec<SearchStep>, CliError> {
    let adapt = cfg.adapt_config()?;
    let tags = parse_script(script)?;
    let steps = trace_search(&adapt, &tags);
    prepare_out(&cfg.out)?;
    write_file(&cfg.out.join(TRACE_SEARCH_CSV), &trace_search_csv(&steps)?)?;
    Ok(steps)
}

/// Plots `columns` of the CSV at `input`; the SVG goes to `output`, or next
/// to the input with an `.svg` extension.
pub fn cmd_plot(input: &Path, columns: &[String], output: Option<&Path>) -> Result<PathBuf, CliError> {
    let text = fs::read_to_string(input)
        .map_err(|e| CliError::config(format!("{}: {e}", input.display())))?;
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let svg = emit_plot(&text, &cols)?;
    let target = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| input.with_extension("svg"));
    write_file(&target, svg.as_bytes())?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use planadapt::Variant;

    fn values(steps: &[SearchStep]) -> Vec<f64> {
        steps.iter().map(|s| s.cfg.w_state.value).collect()
    }

    #[test]
    fn np_np_np_s_under_alg2() {
        let tags = parse_script("NP NP NP S").unwrap();
        let steps = trace_search(&AdaptConfig::new(Variant::Alg2), &tags);
        assert_eq!(values(&steps), vec![4.0, 10.0, 22.0, 10.0]);
        assert_eq!(steps[3].action, Action::DecreaseW);
    }

    #[test]
    fn single_tokens() {
        let cfg = AdaptConfig::new(Variant::Alg2);
        let s = trace_search(&cfg, &parse_script("S").unwrap());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].action, Action::DecreaseW);

        let s = trace_search(&cfg, &parse_script("CR").unwrap());
        assert_eq!(s[0].action, Action::DecreaseE);
        assert_eq!(s[0].cfg.w_state.value, cfg.w_state.value);
        assert!(s[0].cfg.e_state.value <= cfg.e_state.value);
    }

    #[test]
    fn unknown_token_is_config_error() {
        let err = parse_script("S XX").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert_eq!(parse_script("s,cr, np").unwrap().len(), 3);
    }

    #[test]
    fn trace_search_csv_layout() {
        let steps = trace_search(&AdaptConfig::default(), &parse_script("NP").unwrap());
        let text = String::from_utf8(trace_search_csv(&steps).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRACE_SEARCH_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "0,NP,increase_both,4,2,3,1,0,2,2,3,0.25,false");
    }
}
