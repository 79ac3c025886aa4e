use holosat_core::channel::{sample_shadowed_rician, shadowed_rician_power_cdf, FadingParams};
use holosat_core::geometry::{cdf_visible_distance, prob_interferer_visible, sample_constellation};
use holosat_core::montecarlo::{run_sweep, seed_substream, summarize, CombinerKind, Simulator};
use holosat_core::oracle::ks_statistic;
use holosat_core::{ConfigFile, ShellGeometry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn shells() -> [ShellGeometry; 2] {
    [
        ShellGeometry::from_km(6371.0, 160.0, 2000.0).unwrap(),
        ShellGeometry::from_km(6371.0, 160.0, 300.0).unwrap(),
    ]
}

#[test]
fn interferer_distances_follow_conditional_law() {
    // given d0, (F(d) - F(d0)) / (1 - F(d0)) is uniform for each interferer
    for (k, shell) in shells().iter().enumerate() {
        let mut u = Vec::new();
        let mut rng = ChaCha20Rng::seed_from_u64(10 + k as u64);
        while u.len() < 50_000 {
            let c = sample_constellation(shell, 200, &mut rng);
            let Some(d0) = c.serving_distance() else { continue };
            let f0 = cdf_visible_distance(shell, d0);
            for s in c.interferers() {
                u.push((cdf_visible_distance(shell, s.distance_m) - f0) / (1.0 - f0));
            }
        }
        let ks = ks_statistic(&u, |x| x.clamp(0.0, 1.0));
        assert!(ks < 0.01, "shell {k}: KS {ks}");
    }
}

#[test]
fn interferer_count_matches_visibility_probability() {
    for (k, shell) in shells().iter().enumerate() {
        let count = 100;
        let mut rng = ChaCha20Rng::seed_from_u64(20 + k as u64);
        let mut residuals = Vec::new();
        for _ in 0..20_000 {
            let c = sample_constellation(shell, count, &mut rng);
            let Some(d0) = c.serving_distance() else { continue };
            let p = prob_interferer_visible(shell, d0).unwrap();
            residuals.push(c.interferer_indices.len() as f64 - (count - 1) as f64 * p);
        }
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let sd = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 4.0 * sd / n.sqrt(), "shell {k}: mean residual {mean}, se {}", sd / n.sqrt());
    }
}

#[test]
fn fading_power_matches_cdf_and_mean() {
    for (i, &(b, m, omega)) in [(0.3, 3.0, 0.4), (0.063, 0.739, 8.97e-4), (0.126, 10.1, 0.835)].iter().enumerate() {
        let p = FadingParams::new(b, m, omega).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(30 + i as u64);
        let x: Vec<f64> = (0..50_000).map(|_| sample_shadowed_rician(&p, &mut rng).norm_sqr()).collect();
        let ks = ks_statistic(&x, |t| shadowed_rician_power_cdf(&p, t).unwrap());
        assert!(ks < 0.01, "params {i}: KS {ks}");
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
        assert!((mean - p.mean_power()).abs() < 4.0 * sd / (x.len() as f64).sqrt(), "params {i}");
    }
}

#[test]
fn substreams_are_uncorrelated() {
    let n = 10_000;
    let streams: Vec<Vec<f64>> = (0..100)
        .map(|i| {
            let mut r = seed_substream(99, i);
            let v: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
            let mean = v.iter().sum::<f64>() / n as f64;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            v.iter().map(|x| (x - mean) / sd).collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for a in 0..streams.len() {
        for b in a + 1..streams.len() {
            let r = streams[a].iter().zip(&streams[b]).map(|(x, y)| x * y).sum::<f64>() / n as f64;
            worst = worst.max(r.abs());
        }
    }
    assert!(worst < 0.05, "max |r| = {worst}");
}

#[test]
fn full_csi_mmse_beats_mrc_on_average() {
    let s = ConfigFile::default().scenario().unwrap();
    let sim = Simulator::new(s).unwrap();
    let results = sim.run(0).unwrap();
    let full = summarize(&results, CombinerKind::MmseFull, sim.p_serving());
    let mrc = summarize(&results, CombinerKind::Mrc, sim.p_serving());
    assert!(full.mean_rate >= mrc.mean_rate, "{} < {}", full.mean_rate, mrc.mean_rate);
    assert!(results.iter().all(|r| r.rate_by_combiner.values().all(|&x| x >= 0.0)));
}

#[test]
fn statistical_never_significantly_beats_full() {
    let s = ConfigFile::default().scenario().unwrap();
    let t = run_sweep(&s, "N", &[2.0, 4.0, 8.0, 12.0], 300, 0).unwrap();
    for &n in &t.axis_values {
        let full = t.row(n, CombinerKind::MmseFull).unwrap().summary;
        let stat = t.row(n, CombinerKind::MmseStatistical).unwrap().summary;
        assert!(stat.mean_rate <= full.mean_rate + full.stderr, "N = {n}");
    }
}

#[test]
fn outage_fraction_matches_serving_probability() {
    let mut cfg = ConfigFile::default();
    cfg.satellites = 10;
    cfg.trials = 3000;
    cfg.combiners = vec![CombinerKind::Mrc];
    let sim = Simulator::new(cfg.scenario().unwrap()).unwrap();
    let results = sim.run(0).unwrap();
    let outage = results.iter().filter(|r| r.is_outage()).count() as f64 / results.len() as f64;
    let p = 1.0 - sim.p_serving();
    let se = (p * (1.0 - p) / results.len() as f64).sqrt();
    assert!((outage - p).abs() < 3.0 * se, "{outage} vs {p}");
}
