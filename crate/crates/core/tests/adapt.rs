use planadapt::{
    predict_sr, predict_sr_simplified, run_adaptation, update_once, Action, AdaptConfig,
    OutcomeTag, PatternSearchState, RolloutStats, ScriptedEvaluator, Variant,
};

use OutcomeTag::{CannotReach as CR, NoPath as NP, Success as S};

fn script(tags: &[OutcomeTag]) -> Vec<RolloutStats> {
    tags.iter().map(|&t| RolloutStats::pure(t)).collect()
}

/// Feeds `tags` through `update_once`, returning `(w, n_w)` after each step.
fn replay(variant: Variant, tags: &[OutcomeTag]) -> Vec<(f64, u32)> {
    let mut cfg = AdaptConfig::new(variant);
    tags.iter()
        .map(|&t| {
            update_once(&RolloutStats::pure(t), &mut cfg);
            (cfg.w(), cfg.w_state.n)
        })
        .collect()
}

#[test]
fn alg2_warmup_then_backoff() {
    let got = replay(Variant::Alg2, &[NP, NP, NP, S]);
    assert_eq!(got, vec![(4.0, 3), (10.0, 3), (22.0, 3), (10.0, 2)]);
}

#[test]
fn alg2_spurious_success_resets_growth() {
    let got: Vec<f64> = replay(Variant::Alg2, &[NP, NP, S, NP, NP]).iter().map(|p| p.0).collect();
    assert_eq!(got, vec![4.0, 10.0, 4.0, 7.0, 13.0]);
}

#[test]
fn alg3_spurious_success_keeps_growth() {
    let got = replay(Variant::Alg3, &[NP, NP, S, NP, NP]);
    assert_eq!(got, vec![(4.0, 3), (10.0, 3), (9.0, 3), (21.0, 3), (45.0, 3)]);
}

#[test]
fn alg3_retreats_after_count_expires() {
    // Four decreases after an increase: three small steps, then the big one.
    let got: Vec<f64> = replay(Variant::Alg3, &[NP, NP, S, S, S, S]).iter().map(|p| p.0).collect();
    assert_eq!(got, vec![4.0, 10.0, 9.0, 8.0, 7.0, 1.0]);
}

#[test]
fn alg3_keeps_at_least_as_many_phases_on_noisy_warmup() {
    let tags = [NP, NP, S, NP, NP, S, NP, S, NP, NP, NP, S, S, S];
    let a2 = replay(Variant::Alg2, &tags);
    let a3 = replay(Variant::Alg3, &tags);
    for (step, (x2, x3)) in a2.iter().zip(&a3).enumerate() {
        assert!(x3.1 >= x2.1, "step {step}: n {} < {}", x3.1, x2.1);
    }
    let peak = |v: &[(f64, u32)]| v.iter().map(|p| p.0).fold(0.0, f64::max);
    assert!(peak(&a3) > peak(&a2));
}

#[test]
fn decrement_decays_only_after_settling() {
    let mut s = PatternSearchState::waypoints(Variant::Alg2);
    for _ in 0..3 {
        s.ps_increase();
    }
    for _ in 0..3 {
        s.ps_decrease();
    }
    assert_eq!(s.n, 0);
    assert_eq!(s.d, 1.0);
    s.ps_increase();
    assert!((s.d - 0.9).abs() < 1e-15);
    // Increases after settling grow by i, not exponentially.
    let before = s.value;
    s.ps_increase();
    assert_eq!(s.value - before, 3.0);
}

#[test]
fn search_ends_once_decrement_is_small() {
    let mut s = PatternSearchState::waypoints(Variant::Alg2);
    s.n = 0;
    let mut increases = 0;
    while !s.terminated() {
        s.ps_increase();
        increases += 1;
    }
    // 0.9^22 < 0.1 <= 0.9^21
    assert_eq!(increases, 22);
}

#[test]
fn value_never_drops_below_one() {
    for variant in [Variant::Alg2, Variant::Alg3] {
        let mut cfg = AdaptConfig::new(variant);
        for _ in 0..50 {
            update_once(&RolloutStats::pure(S), &mut cfg);
            update_once(&RolloutStats::pure(CR), &mut cfg);
            assert!(cfg.w() >= 1.0 && cfg.e() >= 1.0);
        }
    }
}

#[test]
fn action_priority() {
    let mut cfg = AdaptConfig::default();
    let both = RolloutStats::from_rates(0.8, 0.1, 0.1);
    assert_eq!(update_once(&both, &mut cfg), Action::DecreaseE);
    let np = RolloutStats::from_rates(0.9, 0.04, 0.06);
    assert_eq!(update_once(&np, &mut cfg), Action::IncreaseBoth);
    let fine = RolloutStats::from_rates(0.95, 0.05, 0.0);
    assert_eq!(update_once(&fine, &mut cfg), Action::DecreaseW);
}

#[test]
fn scripted_run_follows_replay_and_cycles() {
    let tags = [NP, NP, S];
    let cfg = AdaptConfig {
        max_iterations: 9,
        ..AdaptConfig::default()
    };
    let trace = run_adaptation(&mut ScriptedEvaluator::new(script(&tags)), &cfg).unwrap();
    assert_eq!(trace.records.len(), 9);
    let cycled: Vec<_> = tags.iter().cycle().take(9).copied().collect();
    let expected = replay(Variant::Alg2, &cycled);
    // Each record holds the values evaluated before its update.
    for (rec, prev) in trace.records[1..].iter().zip(&expected) {
        assert_eq!(rec.w, prev.0);
    }
    assert_eq!(trace.final_w.value, expected[8].0);
    assert!(!trace.terminated);
}

#[test]
fn scripted_run_stops_at_termination() {
    // Settle quickly, then alternate so d keeps decaying.
    let mut cfg = AdaptConfig::default();
    cfg.w_state.n = 0;
    let trace = run_adaptation(&mut ScriptedEvaluator::new(script(&[NP, S])), &cfg).unwrap();
    assert!(trace.terminated);
    assert!(trace.final_w.d < trace.final_w.tth);
    assert_eq!(trace.records.len(), 43);
}

#[test]
fn predicted_success_rate() {
    assert!((predict_sr(3.0, 0.05, 0.1) - 0.974194).abs() < 1e-6);
    for i in [3.0, 10.0] {
        assert!((predict_sr(i, 0.05, 0.1) - predict_sr_simplified(0.05)).abs() < 1e-3);
    }
}
