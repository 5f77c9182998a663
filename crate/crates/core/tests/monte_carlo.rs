use kou_exit::mc::{self, ExitSide};
use kou_exit::{presets, stats, verify, Execution, Interval, JointExitLaw, SimConfig};

#[test]
fn sequential_and_parallel_runs_agree_bitwise() {
    let (m, s) = presets::negative_drift();
    let iv = Interval::new(0.5, 1.0).unwrap();
    let cfg = SimConfig::new(7, 9000, 1e-3).unwrap();
    let seq = mc::sample_killed(&m, iv, s, &cfg.with_execution(Execution::Sequential)).unwrap();
    let par = mc::sample_killed(&m, iv, s, &cfg.with_execution(Execution::Parallel)).unwrap();
    assert_eq!(seq.len(), par.len());
    for (a, b) in seq.iter().zip(&par) {
        assert_eq!(a.survived, b.survived);
        assert_eq!(a.position.to_bits(), b.position.to_bits());
    }
}

#[test]
fn different_seeds_give_different_paths() {
    let (m, _) = presets::positive_drift();
    let iv = Interval::new(1.0, 2.0).unwrap();
    let a = mc::sample_exit(&m, iv, &SimConfig::new(1, 200, 1e-3).unwrap()).unwrap();
    let b = mc::sample_exit(&m, iv, &SimConfig::new(2, 200, 1e-3).unwrap()).unwrap();
    assert!(a.iter().zip(&b).any(|(x, y)| x.tau != y.tau));
}

#[test]
fn exit_estimates_agree_with_closed_form_at_two_substeps() {
    let (m, s) = presets::positive_drift();
    let iv = Interval::new(1.0, 2.0).unwrap();
    let joint = JointExitLaw::new(&m, s, 2.0).unwrap();
    let exit = joint.exit();
    let targets = [
        exit.q_up(1.0).unwrap(),
        exit.q_down(1.0).unwrap(),
        joint.joint_creep(1.0).unwrap(),
        joint.joint_jump(1.0, 0.0).unwrap().re,
    ];
    for substep in [1e-3, 5e-4] {
        let cfg = SimConfig::new(11, 100_000, substep).unwrap();
        let est = mc::estimate_exit(&m, iv, s, &cfg).unwrap();
        for ((name, e), target) in est.named().into_iter().zip(targets) {
            let z = e.z_score(target);
            assert!(z <= 3.0, "{name} at dt={substep}: {} vs {target}, z={z}", e.mean);
        }
    }
}

#[test]
fn jump_overshoot_is_exponential() {
    let (m, _) = presets::positive_drift();
    let iv = Interval::new(1.0, 2.0).unwrap();
    let samples = mc::sample_exit(&m, iv, &SimConfig::new(5, 120_000, 1e-3).unwrap()).unwrap();
    let over: Vec<f64> = samples
        .iter()
        .filter(|e| e.side == ExitSide::Up && e.by_jump)
        .map(|e| e.overshoot)
        .collect();
    assert!(over.len() >= 10_000, "only {} jump exits", over.len());
    let ks = stats::ks_exponential(&over, m.c).unwrap();
    assert!(ks.p_value >= 0.01, "KS p = {}", ks.p_value);
}

#[test]
fn negative_drift_full_monte_carlo_tier() {
    let (m, s) = presets::negative_drift();
    let iv = Interval::new(0.5, 1.0).unwrap();
    let cfg = SimConfig::new(42, 100_000, 1e-3).unwrap();
    for c in verify::monte_carlo_checks(&m, s, iv, &cfg) {
        assert!(c.passed(), "{} = {} vs {}", c.name, c.value, c.threshold);
    }
}
