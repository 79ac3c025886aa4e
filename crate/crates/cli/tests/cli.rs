use std::path::Path;
use std::process::{Command, Output};

use holosat_core::oracle::adaptive_quadrature_with_breakpoints;
use holosat_core::{ResultsCsv, ShellGeometry};

fn holosat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holosat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn simulate_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = holosat(&["simulate", "--trials", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = ResultsCsv::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(csv.rows.len(), 3);
    assert!(csv.rows.iter().all(|r| r.trials == 10));
    assert!(csv.comments.iter().any(|c| c.starts_with("config_sha256 = ")));
    assert!(String::from_utf8_lossy(&o.stdout).contains("mmse_statistical"));
}

#[test]
fn malformed_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "trials = 5\ntx_power_dbW = 50\n").unwrap();
    let out = dir.path().join("r.csv");
    let o = holosat(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("tx_power_dbW") && err.contains("line 2"), "{err}");
    assert!(!out.exists());
}

#[test]
fn same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "satellites = 100\ncombiners = [\"mrc\", \"mmse_full\"]\n").unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = holosat(&[
            "simulate", "--config", cfg.to_str().unwrap(), "--seed", "77", "--trials", "40",
            "--workers", workers, "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_eq!(a, run("c.csv", "3"));
}

#[test]
fn satellite_count_figure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let o = holosat(&[
        "figure", "satellite_count", "--values", "10,30,100,300", "--trials", "8",
        "--override", "combiners=[\"mrc\",\"mmse_full\"]", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = ResultsCsv::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(csv.rows.len(), 4 * 2 * 2);
    for mode in ["consider", "ignore"] {
        for comb in ["mrc", "mmse_full"] {
            let series: Vec<f64> = csv
                .rows
                .iter()
                .filter(|r| r.coupling_mode.name() == mode && r.combiner.name() == comb)
                .map(|r| r.axis_value)
                .collect();
            assert_eq!(series, vec![10.0, 30.0, 100.0, 300.0]);
        }
    }
    assert!(csv.comments.iter().any(|c| c == "preset = satellite_count"));
}

#[test]
fn dipole_figure_includes_ideal_hardware() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let o = holosat(&[
        "figure", "dipole_length", "--values", "0.001,0.25", "--trials", "4",
        "--override", "combiners=[\"mrc\"]", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = ResultsCsv::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(csv.rows.len(), 2 * 3);
    assert!(csv.rows.iter().any(|r| r.coupling_mode.name() == "ideal"));
}

#[test]
fn bad_figure_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let out = out.to_str().unwrap();
    assert_eq!(holosat(&["figure", "nonexistent", "--out", out]).status.code(), Some(2));
    assert_eq!(
        holosat(&["figure", "satellite_count", "--override", "satellites", "--out", out]).status.code(),
        Some(2)
    );
    assert_eq!(
        holosat(&["figure", "satellite_count", "--override", "fading.b=-1", "--out", out]).status.code(),
        Some(2)
    );
}

#[test]
fn analytic_cdf_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cdf.csv");
    let o = holosat(&["analytic", "cdf", "--param", "points=300", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 300);
    assert_eq!(rows[0][1], 0.0);
    assert_eq!(rows[rows.len() - 1][1], 1.0);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));
}

#[test]
fn analytic_pathloss_matches_quadrature() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("l.csv");
    let o = holosat(&["analytic", "L", "--param", "alpha=2", "--param", "points=200", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 200);
    let shell = ShellGeometry::from_km(6371.0, 160.0, 2000.0).unwrap();
    let (_, hi) = shell.support();
    let bps = shell.breakpoints();
    for r in &rows[..rows.len() - 1] {
        let d0 = r[0] * 1e3;
        let q = adaptive_quadrature_with_breakpoints(
            |d| shell.visible_density(d) / (d * d),
            d0,
            hi,
            &bps,
            1e-13 * r[1],
        )
        .unwrap();
        assert!(((r[1] - q.value) / q.value).abs() < 1e-9, "d0 = {} km", r[0]);
    }
}

#[test]
fn analytic_serving_probability_nondecreasing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ps.csv");
    let o = holosat(&["analytic", "ps", "--param", "from=1", "--param", "to=1000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 1000);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));
}

#[test]
fn analytic_invalid_range_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();
    for args in [
        ["analytic", "cdf", "--param", "from=5", "--param", "to=1", "--out", out],
        ["analytic", "pi", "--param", "from=10", "--param", "to=300", "--out", out],
        ["analytic", "ps", "--param", "from=0", "--param", "to=10", "--out", out],
    ] {
        assert_eq!(holosat(&args).status.code(), Some(2), "{args:?}");
    }
}
