use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use odflow::csv_io::read_matrix_csv;
use odflow_cli::pipeline::{run_estimate, EstimateOptions};
use odflow_cli::synth::{run_synthetic, GroundTruth, ScenarioConfig, SynthCost};
use odflow_cli::sample_simplex_marginals;

const ZONES: &str = "Z1;0,0;1,0;1,1;0,1\nZ2;1,0;2,0;2,1;1,1\n";
const PRESENCE: &str = "zone_id,interval_end,count\n\
    Z1,2017-03-06T08:15:00Z,3\nZ2,2017-03-06T08:15:00Z,1\n\
    Z1,2017-03-06T08:30:00Z,2\nZ2,2017-03-06T08:30:00Z,2\n";

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn odflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odflow")).args(args).output().unwrap()
}

fn matrix(path: &Path) -> Vec<Vec<f64>> {
    let (_, m) = read_matrix_csv(std::io::BufReader::new(fs::File::open(path).unwrap())).unwrap();
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[test]
fn estimate_writes_toy_results() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let zones = write(d, "zones.txt", ZONES);
    let presence = write(d, "presence.csv", PRESENCE);
    let out = d.join("out");
    let o = odflow(&[
        "estimate",
        presence.to_str().unwrap(),
        zones.to_str().unwrap(),
        "--total",
        "4",
        "--steps",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(matrix(&out.join("flow_first.csv")), vec![vec![2.0, 1.0], vec![0.0, 1.0]]);
    let t = matrix(&out.join("transition_1.csv"));
    assert!((t[0][0] - 2.0 / 3.0).abs() < 1e-12 && (t[0][1] - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(t[1], vec![0.0, 1.0]);
    let t2 = matrix(&out.join("transition_2.csv"));
    assert!((t2[0][0] - 4.0 / 9.0).abs() < 1e-12);

    let snaps = fs::read_to_string(out.join("snapshots.csv")).unwrap();
    assert!(snaps.starts_with("interval_end,zone_id,count\n2017-03-06T08:15:00Z,Z1,3\n"), "{snaps}");
}

#[test]
fn extrapolate_reads_estimate_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let m = write(d, "p.csv", "origin,Z1,Z2\nZ1,0.6666666666666666,0.3333333333333333\nZ2,0,1\n");
    let out = d.join("x");
    let o = odflow(&[
        "extrapolate",
        m.to_str().unwrap(),
        "--steps",
        "3",
        "--hist",
        "0.5,0.5",
        "--duration",
        "20m",
        "--stationary",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let f = fs::read_to_string(out.join("stationary.csv")).unwrap();
    let last: Vec<f64> = f
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(last[0].abs() < 1e-10 && (last[1] - 1.0).abs() < 1e-10, "{f}");
    for name in ["transition_3.csv", "transition_mixed.csv", "transition_duration.csv"] {
        for row in matrix(&out.join(name)) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12, "{name}");
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let zones = write(d, "zones.txt", ZONES);
    let presence = write(d, "presence.csv", PRESENCE);
    let out = d.join("out");

    assert_eq!(odflow(&["estimate"]).status.code(), Some(1));
    assert_eq!(odflow(&["--help"]).status.code(), Some(0));
    let missing = odflow(&["estimate", "nope.csv", zones.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let bad = write(d, "bad.csv", "Z1,2017-03-06T08:15:00Z,-3\n");
    let o = odflow(&["estimate", bad.to_str().unwrap(), zones.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let stuck = write(d, "stuck.csv", "origin,A,B\nA,0,1\nB,1,0\n");
    let o = odflow(&["extrapolate", stuck.to_str().unwrap(), "--stationary", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let o = odflow(&["gravity", presence.to_str().unwrap(), zones.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bench_writes_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let o = odflow(&[
        "bench",
        "--sizes",
        "16,32,64",
        "--trials",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7, "{csv}");
    assert!(fs::read_to_string(out.join("bench.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn estimate_is_deterministic_under_noise() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let zones = write(d, "zones.txt", ZONES);
    let presence = write(d, "presence.csv", PRESENCE);
    let opts = EstimateOptions {
        total: 1000,
        noise: 0.05,
        randomizations: 8,
        seed: 42,
        ..EstimateOptions::default()
    };
    let a = run_estimate(&presence, &zones, None, "id", &opts).unwrap();
    let b = run_estimate(&presence, &zones, None, "id", &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.pairs[0].flows.len(), 8);
    assert!(a.pairs[0].flows.iter().all(|f| f.total() == 1000));
}

#[test]
fn synth_recovers_diagonal_and_beats_gravity_on_optimal() {
    let diag = run_synthetic(&ScenarioConfig {
        truth: GroundTruth::Diagonal,
        cost: SynthCost::Grid,
        ..ScenarioConfig::default()
    })
    .unwrap();
    assert!(diag.exact_recovery());
    assert_eq!(diag.lp_score.l1, 0.0);

    let opt = run_synthetic(&ScenarioConfig::default()).unwrap();
    assert_eq!(opt.estimated_objective, opt.truth_objective);
    assert!(opt.lp_score.l1 <= opt.gravity_score.l1);
}

#[test]
fn simplex_marginals_have_uniform_mean() {
    let n = 5;
    let draws = 10_000;
    let total = 1_000_000u64;
    let mut sums = vec![0.0; n];
    for seed in 0..draws {
        let m = sample_simplex_marginals(n, total, seed);
        assert_eq!(m.gamma().iter().sum::<u64>(), total);
        assert_eq!(m.eta().iter().sum::<u64>(), total);
        for (s, &g) in sums.iter_mut().zip(m.gamma()) {
            *s += g as f64;
        }
    }
    let expected = total as f64 / n as f64;
    for s in sums {
        let mean = s / draws as f64;
        assert!((mean - expected).abs() < 0.05 * expected, "{mean}");
    }
}
