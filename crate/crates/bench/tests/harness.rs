use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use nsglb::PolicyKind;
use nsglb_bench::{
    emit_csv, quantile, run_experiment, validate_concentration, ExperimentConfig, HarnessError, NoiseKind,
};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse_str(text).expect("valid config")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn single_round_logs_one_decision() {
    let cfg = config("experiment = sim2d\npolicies = d-glucb\nruns = 1\nhorizon = 1");
    let result = run_experiment(&cfg).unwrap();
    assert_eq!(result.records.len(), 1);
    let r = &result.records[0];
    assert_eq!(r.chosen.len(), 1);
    assert!((0.0..=1.0).contains(&r.cumulative_regret[0]));
    assert!(r.chosen[0] < 6);
}

#[test]
fn two_policies_three_rounds_give_six_quantile_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("policies = sw-glucb, linucb\nruns = 1\nhorizon = 3");
    let result = run_experiment(&cfg).unwrap();
    emit_csv(&result, &cfg, dir.path()).unwrap();
    let text = read(&dir.path().join("regret_mean_quantiles.csv"));
    assert!(text.starts_with("round,policy,mean,q05,q95\n"));
    assert!(!text.contains('\r'));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 6);
    for row in &rows {
        assert_eq!(row[2], row[3]);
        assert_eq!(row[2], row[4]);
    }
}

#[test]
fn outputs_are_byte_identical_across_invocations_and_thread_counts() {
    let base = "policies = sw-glucb, d-glucb, glucb, sw-linucb\nruns = 3\nhorizon = 250\nsnapshot_interval = 50";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for (dir, extra) in [(&a, ""), (&b, ""), (&c, "\nthreads = 1")] {
        let cfg = config(&format!("{base}{extra}"));
        let result = run_experiment(&cfg).unwrap();
        emit_csv(&result, &cfg, dir.path()).unwrap();
    }
    for name in ["regret_mean_quantiles.csv", "theta_snapshots.csv", "regret.csv", "estimation_error.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(name)).unwrap(), "{name}");
        assert_eq!(x, std::fs::read(c.path().join(name)).unwrap(), "{name}");
    }
    let manifest = read(&a.path().join("manifest.txt"));
    assert_eq!(manifest, read(&c.path().join("manifest.txt")), "thread count is not hashed");
    assert!(manifest.contains("config_sha256 = "));
    assert!(manifest.contains("base_seed = 0"));
    assert!(manifest.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn aggregates_match_recomputation_from_per_run_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("policies = sw-glucb, glucb\nruns = 7\nhorizon = 120\nbase_seed = 11");
    let result = run_experiment(&cfg).unwrap();
    emit_csv(&result, &cfg, dir.path()).unwrap();

    let mut per_round: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    let mut last: BTreeMap<(String, String), f64> = BTreeMap::new();
    for row in data_rows(&read(&dir.path().join("regret.csv"))) {
        let (run, round, policy, value) = (row[0].clone(), row[2].parse().unwrap(), row[3].clone(), row[6].parse::<f64>().unwrap());
        let key = (policy.clone(), run);
        if let Some(prev) = last.get(&key) {
            assert!(value >= *prev, "cumulative regret must not decrease");
        }
        last.insert(key, value);
        per_round.entry((policy, round)).or_default().push(value);
    }

    let mut previous_round: BTreeMap<String, usize> = BTreeMap::new();
    for row in data_rows(&read(&dir.path().join("regret_mean_quantiles.csv"))) {
        let round: usize = row[0].parse().unwrap();
        let prev = previous_round.insert(row[1].clone(), round).unwrap_or(0);
        assert!(round > prev, "round column strictly increasing per policy");
        let mut xs = per_round[&(row[1].clone(), round)].clone();
        assert_eq!(xs.len(), 7);
        xs.sort_by(f64::total_cmp);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let (m, q05, q95): (f64, f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap(), row[4].parse().unwrap());
        assert!((m - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert!((q05 - quantile(&xs, 0.05)).abs() <= 1e-12 * q05.abs().max(1.0));
        assert!((q95 - quantile(&xs, 0.95)).abs() <= 1e-12 * q95.abs().max(1.0));
        assert!(q05 <= m && m <= q95);
    }
}

#[test]
fn snapshots_follow_the_interval() {
    let cfg = config("policies = d-glucb\nruns = 2\nhorizon = 300\nsnapshot_interval = 100");
    let result = run_experiment(&cfg).unwrap();
    for r in &result.records {
        let rounds: Vec<usize> = r.snapshots.iter().map(|(t, _)| *t).collect();
        assert_eq!(rounds, vec![100, 200, 300]);
        assert!(r.snapshots.iter().all(|(_, th)| th.len() == 2));
    }
}

#[test]
fn replay_writes_proportion_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "experiment = replay\npolicies = sw-glucb, glucb\nruns = 2\nhorizon = 60\ninvert_at = 30\n\
         replay_param_bound = 0.5\nsynthetic_rows_per_class = 40",
    );
    let result = run_experiment(&cfg).unwrap();
    emit_csv(&result, &cfg, dir.path()).unwrap();
    let rows = data_rows(&read(&dir.path().join("replay_proportion.csv")));
    assert_eq!(rows.len(), 120);
    for row in rows {
        let p: f64 = row[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
    assert!(!dir.path().join("estimation_error.csv").exists());
}

#[test]
fn replay_rejects_missing_or_malformed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let cfg = config(&format!("experiment = replay\nreplay_csv = {}", missing.display()));
    assert!(matches!(run_experiment(&cfg), Err(HarnessError::Config(_))));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b,c\n1,2,3\n").unwrap();
    let cfg = config(&format!("experiment = replay\nreplay_csv = {}", bad.display()));
    assert!(matches!(run_experiment(&cfg), Err(HarnessError::Config(_))));
}

#[test]
fn config_errors_surface_before_any_run() {
    let cfg = config("tuning = manual\ntau = 10\ngamma = 0.9\nsw-glucb.gamma = 0.95\nhorizon = 10");
    assert!(run_experiment(&cfg).is_ok());
    let mut cfg = config("horizon = 10");
    cfg.horizon = 7000;
    assert!(matches!(run_experiment(&cfg), Err(HarnessError::Config(_))));
    let mut cfg = config("horizon = 10");
    cfg.overrides.entry(PolicyKind::DGlucb).or_default().delta = Some(2.0);
    assert!(matches!(run_experiment(&cfg), Err(HarnessError::Config(_))));
}

#[test]
fn zero_noise_never_violates() {
    let mut cfg = config("experiment = concentration\nreplications = 50\nconcentration_horizon = 200\npolicies = glucb");
    cfg.noise = NoiseKind::Zero;
    let report = validate_concentration(&cfg).unwrap();
    assert_eq!(report.entries.len(), 2);
    assert!(report.entries.iter().all(|e| e.violations == 0 && e.pass));
}

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bench"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.conf");
    std::fs::write(&good, "policies = glucb\nruns = 1\nhorizon = 20\n").unwrap();
    let out = dir.path().join("out");
    let status = bench()
        .args(["run", "--config"])
        .arg(&good)
        .args(["--policy", "sw-glucb", "--policy", "linucb", "--runs", "2", "--seed", "5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let manifest = read(&out.join("manifest.txt"));
    assert!(manifest.contains("base_seed = 5"));
    assert!(manifest.contains("runs = 2"));
    assert!(manifest.contains("policies = sw-glucb,linucb"));

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "runs = zero\n").unwrap();
    let status = bench().args(["run", "--config"]).arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let status = bench().args(["run", "--config"]).arg(&good).args(["--policy", "thompson"]).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let status = bench().args(["run", "--config"]).arg(dir.path().join("nope.conf")).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let conc = dir.path().join("conc.conf");
    std::fs::write(
        &conc,
        "experiment = concentration\nreplications = 20\nconcentration_horizon = 50\nnoise = zero\npolicies = glucb\n",
    )
    .unwrap();
    let status = bench().args(["validate-concentration", "--config"]).arg(&conc).status().unwrap();
    assert_eq!(status.code(), Some(0));

    // An unwritable output location is a runtime failure.
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let status = bench()
        .args(["run", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(blocker.join("sub"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}
