mod common;

use std::path::Path;
use std::process::{Command, Output};

use ehrelay::sweep::{self, SweepSpec};
use ehrelay::SystemParams;

const BIN: &str = env!("CARGO_BIN_EXE_ehrelay");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const POWER_SWEEP: &str = "\
# outage versus transmit power
sweep.variable = p_tx_dbm
sweep.grid = 0, 5, 10, 15, 20, 25, 30
sweep.schemes = optimal, relay_only, direct_only
sweep.engines = analytic_quadrature, analytic_high_snr, montecarlo
sweep.mc_trials = 200000
sweep.seed = 7
";

#[test]
fn sweep_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "power.cfg", POWER_SWEEP);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(a).unwrap();
    assert_eq!(a, std::fs::read(b).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(sweep::CSV_HEADER));
    assert!(text.ends_with('\n'));
    // 7 points x (3 optimal + 1 relay_only + 2 direct_only)
    assert_eq!(text.lines().count(), 1 + 7 * 6);
}

#[test]
fn power_sweep_properties() {
    let (params, spec) = sweep::parse_config_str(POWER_SWEEP).unwrap();
    let rows = sweep::run_sweep(&params, &spec).unwrap();
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    for &p in &spec.grid {
        let get = |scheme: &str, engine: &str| {
            rows.iter()
                .find(|r| r.value == p && r.scheme == scheme && r.engine == engine)
                .unwrap()
                .p_out
        };
        assert!(get("optimal", "analytic_quadrature") <= get("direct_only", "analytic_direct"));
        assert!(get("optimal", "montecarlo") <= get("direct_only", "montecarlo"));
    }
    for r in &rows {
        assert!((0.0..=1.0).contains(&r.p_out));
        let mc = r.engine == "montecarlo";
        assert_eq!(r.ci_low.is_some(), mc);
        assert_eq!(r.n_trials.is_some(), mc);
    }
    let report = sweep::compare_report(&rows).unwrap();
    assert!(report.passed(), "{report}");
}

#[test]
fn csv_round_trip_keeps_12_digits() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec {
        grid: vec![0.0, 12.5, 30.0],
        mc_trials: 50_000,
        ..SweepSpec::default()
    };
    let rows = sweep::run_sweep(&SystemParams::reference(), &spec).unwrap();
    let path = dir.path().join("rows.csv");
    sweep::emit_csv(&rows, &path).unwrap();
    let back = sweep::read_csv(&path).unwrap();
    assert_eq!(back.len(), rows.len());
    let close = |a: f64, b: f64| (a - b).abs() <= 5e-12 * b.abs();
    for (r, s) in rows.iter().zip(&back) {
        assert_eq!(
            (&r.variable, &r.scheme, &r.engine),
            (&s.variable, &s.scheme, &s.engine)
        );
        assert!(close(s.value, r.value) && close(s.p_out, r.p_out));
        for (x, y) in [(r.ci_low, s.ci_low), (r.ci_high, s.ci_high)] {
            assert_eq!(x.is_some(), y.is_some());
            if let (Some(x), Some(y)) = (x, y) {
                assert!(close(y, x));
            }
        }
        assert_eq!((r.n_trials, r.m_count), (s.n_trials, s.m_count));
    }
}

#[test]
fn distance_sweep_with_coupling() {
    let text = "\
sweep.variable = d_a
sweep.grid = 2, 6, 10, 14, 18
sweep.schemes = optimal, fixed:0.5
sweep.engines = analytic_quadrature, montecarlo
sweep.mc_trials = 100000
sweep.coupling = d_b = d_t - d_a
";
    let (params, spec) = sweep::parse_config_str(text).unwrap();
    let rows = sweep::run_sweep(&params, &spec).unwrap();
    // analytic + mc for optimal, mc only for the fixed ratio
    assert_eq!(rows.len(), 5 * 3);
    let analytic: Vec<f64> = rows
        .iter()
        .filter(|r| r.engine == "analytic_quadrature")
        .map(|r| r.p_out)
        .collect();
    assert!(analytic[2] > analytic[0] && analytic[2] > analytic[4]);
    // d_a = 20 leaves d_b = 0, which fails validation
    let bad = "sweep.variable = d_a\nsweep.grid = 20\nsweep.coupling = d_b=d_t-d_a\n";
    let (params, spec) = sweep::parse_config_str(bad).unwrap();
    assert!(sweep::run_sweep(&params, &spec).is_err());
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "good.csv",
        &format!(
            "{}\np_tx_dbm,0,optimal,analytic_quadrature,0.0537,,,,4\n\
             p_tx_dbm,0,optimal,montecarlo,0.0533,0.0529,0.0537,1000000,\n",
            sweep::CSV_HEADER
        ),
    );
    let o = run(&["verify", "--csv", &good]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("overall PASS"));

    let bad = write(
        dir.path(),
        "bad.csv",
        &format!(
            "{}\np_tx_dbm,0,optimal,analytic_quadrature,0.08,,,,4\n\
             p_tx_dbm,0,optimal,montecarlo,0.0533,0.0529,0.0537,1000000,\n",
            sweep::CSV_HEADER
        ),
    );
    let o = run(&["verify", "--csv", &bad]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL p_tx_dbm=0 optimal analytic_quadrature"));
}

#[test]
fn config_errors_exit_with_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "d_a = 5\nbeta = 0\n");
    let o = run(&["analytic", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("line 2") && err.contains("beta out of (0,1)"),
        "{err}"
    );
}

#[test]
fn single_point_commands() {
    let o = run(&["analytic", "--m", "8"]);
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("m_count 8"));
    assert!(out.contains("outage_quadrature 0.0043"));
    assert!(out.contains("outage_high_snr"));

    let o = run(&[
        "montecarlo",
        "--trials",
        "100000",
        "--seed",
        "3",
        "--scheme",
        "fixed:0.3",
    ]);
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("scheme fixed:0.3") && out.contains("n_trials 100000"));

    let o = run(&["montecarlo", "--scheme", "fixed:1.5"]);
    assert!(!o.status.success());
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "small.cfg",
        "sweep.grid = 0, 10\nsweep.mc_trials = 300000\nsweep.engines = montecarlo\n",
    );
    let outputs: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|n| {
            let o = Command::new(BIN)
                .env("EHRELAY_THREADS", n)
                .args(["sweep", "--config", &cfg])
                .output()
                .unwrap();
            assert!(o.status.success());
            o.stdout
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}
