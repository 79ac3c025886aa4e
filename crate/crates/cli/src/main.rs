use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use holosat_core::beamforming::{
    interference_scale, statistical_interference_covariance, PhaseStatistics,
};
use holosat_core::channel::coupling_matrix;
use holosat_core::geometry::{
    cdf_visible_distance, expected_interferer_pathloss, mean_interferer_pathloss,
    pdf_visible_distance, prob_interferer_visible, prob_serving_visible,
};
use holosat_core::montecarlo::{run_points, run_scenario, CouplingMode};
use holosat_core::report::VERSION;
use holosat_core::{ConfigFile, Error, ResultsCsv, SweepTable};

#[derive(Parser)]
#[command(name = "holosat", version, about = "Holographic-metasurface LEO downlink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its results table.
    Simulate {
        /// TOML scenario; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Run a parameter sweep preset.
    Figure {
        preset: Preset,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Config override, e.g. `microstrips=6` or `fading.omega=0.8`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Comma-separated axis values replacing the preset grid.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Tabulate a closed-form curve.
    Analytic {
        curve: Curve,
        /// Grid (`from`, `to`, `points`) or config key, e.g. `alpha=3`.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Preset {
    ElementsFixedSpacing,
    ElementsFixedAperture,
    MicrostripSize,
    DipoleLength,
    SatelliteCount,
    SirVsAlpha,
    SingleAltitude,
}

#[derive(Clone, Copy, ValueEnum)]
enum Curve {
    #[value(name = "cdf")]
    Cdf,
    #[value(name = "pdf")]
    Pdf,
    #[value(name = "ps")]
    Ps,
    #[value(name = "pi")]
    Pi,
    #[value(name = "L")]
    L,
    #[value(name = "rcov_trace")]
    RcovTrace,
}

impl Preset {
    fn axis(self) -> &'static str {
        match self {
            Preset::ElementsFixedSpacing | Preset::ElementsFixedAperture => "N",
            Preset::MicrostripSize => "microstrip_size",
            Preset::DipoleLength => "dipole_length",
            Preset::SatelliteCount => "count",
            Preset::SirVsAlpha => "alpha",
            Preset::SingleAltitude => "altitude_single",
        }
    }

    fn default_values(self) -> Vec<f64> {
        match self {
            Preset::ElementsFixedSpacing => vec![2.0, 4.0, 8.0, 12.0, 16.0],
            Preset::ElementsFixedAperture => vec![4.0, 8.0, 12.0, 16.0, 20.0],
            Preset::MicrostripSize => vec![1.0, 2.0, 3.0, 4.0],
            Preset::DipoleLength => vec![0.001, 0.05, 0.1, 0.15, 0.2, 0.25],
            Preset::SatelliteCount => vec![10.0, 30.0, 100.0, 300.0],
            Preset::SirVsAlpha => vec![2.0, 2.5, 3.0, 3.5, 4.0],
            Preset::SingleAltitude => vec![300.0, 500.0, 800.0, 1200.0, 1600.0, 2000.0],
        }
    }

    fn modes(self) -> &'static [CouplingMode] {
        match self {
            Preset::DipoleLength => &[CouplingMode::Consider, CouplingMode::Ignore, CouplingMode::Ideal],
            _ => &[CouplingMode::Consider, CouplingMode::Ignore],
        }
    }

    /// Config for one point of the sweep.
    fn point(self, base: &ConfigFile, value: f64) -> Result<ConfigFile, Error> {
        let mut c = base.clone();
        let v = value.to_string();
        match self {
            Preset::ElementsFixedSpacing => c.set("elements_per_strip", &v)?,
            Preset::ElementsFixedAperture => {
                c.set("elements_per_strip", &v)?;
                c.element_spacing_lambda = 4.0 / value;
            }
            Preset::MicrostripSize => {
                let n = (value / c.element_spacing_lambda).round().max(1.0);
                c.set("elements_per_strip", &n.to_string())?;
            }
            Preset::DipoleLength => c.dipole_length_lambda = Some(value),
            Preset::SatelliteCount => c.set("satellites", &v)?,
            Preset::SirVsAlpha => c.pathloss_exponent = value,
            Preset::SingleAltitude => c.altitudes_km = vec![value],
        }
        c.validate()?;
        Ok(c)
    }
}

fn key_value(s: &str) -> Result<(&str, &str), Error> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got `{s}`")))
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, Error> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn print_summary(tables: &[SweepTable]) {
    println!(
        "{:<16} {:>12} {:<9} {:<17} {:>12} {:>10} {:>9}",
        "axis", "value", "coupling", "combiner", "rate", "stderr", "served"
    );
    for t in tables {
        for r in &t.rows {
            println!(
                "{:<16} {:>12.6} {:<9} {:<17} {:>12.6} {:>10.6} {:>4}/{:<4}",
                t.axis_name,
                r.axis_value,
                r.coupling_mode,
                r.combiner,
                r.summary.mean_rate,
                r.summary.stderr,
                r.summary.served,
                r.summary.trials
            );
        }
    }
}

fn simulate(
    config: Option<&Path>,
    seed: Option<u64>,
    trials: Option<usize>,
    out: &Path,
    workers: usize,
) -> Result<(), Error> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    cfg.validate()?;
    let table = run_scenario(&cfg.scenario()?, workers)?;
    write_out(out, &ResultsCsv::from_tables(std::slice::from_ref(&table), &cfg).render())?;
    print_summary(&[table]);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn figure(
    preset: Preset,
    config: Option<&Path>,
    overrides: &[String],
    values: Option<Vec<f64>>,
    seed: Option<u64>,
    trials: Option<usize>,
    out: &Path,
    workers: usize,
) -> Result<(), Error> {
    let mut base = load_config(config)?;
    for o in overrides {
        let (k, v) = key_value(o)?;
        base.set(k, v)?;
    }
    if let Some(s) = seed {
        base.seed = s;
    }
    if let Some(t) = trials {
        base.trials = t;
    }
    base.validate()?;
    let values = values.unwrap_or_else(|| preset.default_values());
    if values.is_empty() {
        return Err(Error::Config("`--values` is empty".into()));
    }
    let mut tables = Vec::new();
    for &mode in preset.modes() {
        let points = values
            .iter()
            .map(|&v| {
                let mut c = preset.point(&base, v)?;
                c.coupling_mode = mode;
                Ok((v, c.scenario()?))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        tables.push(run_points(preset.axis(), &points, workers)?);
    }
    let mut csv = ResultsCsv::from_tables(&tables, &base);
    let shown: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    csv.comments.insert(1, format!("preset = {}", preset.to_possible_value().unwrap().get_name()));
    csv.comments.insert(2, format!("values = {}", shown.join(",")));
    write_out(out, &csv.render())?;
    print_summary(&tables);
    Ok(())
}

struct Grid {
    from: Option<f64>,
    to: Option<f64>,
    points: usize,
}

impl Grid {
    fn resolve(&self, lo: f64, hi: f64) -> Result<Vec<f64>, Error> {
        let (a, b) = (self.from.unwrap_or(lo), self.to.unwrap_or(hi));
        if !(a.is_finite() && b.is_finite() && a < b) || self.points < 2 {
            return Err(Error::Config(format!(
                "invalid grid [{a}, {b}] with {} points",
                self.points
            )));
        }
        let n = self.points - 1;
        Ok((0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect())
    }
}

fn analytic(curve: Curve, params: &[String], out: &Path) -> Result<(), Error> {
    let mut cfg = ConfigFile::default();
    let mut grid = Grid {
        from: None,
        to: None,
        points: 200,
    };
    let number = |k: &str, v: &str| {
        v.parse::<f64>()
            .map_err(|_| Error::Config(format!("`{k}` needs a number, got `{v}`")))
    };
    for p in params {
        let (k, v) = key_value(p)?;
        match k {
            "from" => grid.from = Some(number(k, v)?),
            "to" => grid.to = Some(number(k, v)?),
            "points" => {
                grid.points = v
                    .parse()
                    .map_err(|_| Error::Config(format!("`points` needs an integer, got `{v}`")))?
            }
            "alpha" => cfg.set("pathloss_exponent", v)?,
            "count" => cfg.set("satellites", v)?,
            _ => cfg.set(k, v)?,
        }
    }
    let s = cfg.scenario()?;
    let shell = &s.shell;
    let (lo, hi) = shell.support();
    let km = 1e3;
    let mut text = String::new();
    writeln!(text, "# holosat {VERSION}").unwrap();
    writeln!(text, "# config_sha256 = {}", cfg.sha256()).unwrap();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let header = match curve {
        Curve::Cdf | Curve::Pdf => {
            for d in grid.resolve(0.0, 1.1 * hi / km)? {
                let v = match curve {
                    Curve::Cdf => cdf_visible_distance(shell, d * km),
                    _ => pdf_visible_distance(shell, d * km) * km,
                };
                rows.push(vec![d, v]);
            }
            if matches!(curve, Curve::Cdf) { "distance_km,cdf" } else { "distance_km,pdf_per_km" }
        }
        Curve::Ps => {
            let a = grid.from.unwrap_or(1.0);
            let b = grid.to.unwrap_or(1000.0);
            if !(a >= 1.0 && a <= b && a.fract() == 0.0 && b.fract() == 0.0) {
                return Err(Error::Config(format!("count range [{a}, {b}] must be integers >= 1")));
            }
            for k in a as usize..=b as usize {
                rows.push(vec![k as f64, prob_serving_visible(shell, k)]);
            }
            "count,p_serving"
        }
        Curve::Pi | Curve::L | Curve::RcovTrace => {
            let d0s = grid.resolve(lo / km, hi / km)?;
            if d0s[0] * km < lo || d0s[d0s.len() - 1] * km > hi {
                return Err(Error::Config(format!(
                    "d0 range must lie in [{}, {}] km",
                    lo / km,
                    hi / km
                )));
            }
            // the closed forms are defined on [lo, hi); pull the endpoint in
            let inside = |d: f64| (d * km).min(hi * (1.0 - 1e-12));
            match curve {
                Curve::Pi => {
                    for d in d0s {
                        rows.push(vec![d, prob_interferer_visible(shell, inside(d))?]);
                    }
                    "d0_km,p_interferer"
                }
                Curve::L => {
                    let alpha = s.budget.pathloss_exponent;
                    for d in d0s {
                        rows.push(vec![
                            d,
                            expected_interferer_pathloss(shell, inside(d), alpha)?,
                            mean_interferer_pathloss(shell, inside(d), alpha)?,
                        ]);
                    }
                    "d0_km,pathloss_integral,mean_pathloss"
                }
                _ => {
                    let coupling = coupling_matrix(&s.surface)?;
                    for d in d0s {
                        let scale = interference_scale(shell, s.count, inside(d), &s.budget, &s.fading)?;
                        let r = statistical_interference_covariance(
                            shell,
                            s.count,
                            inside(d),
                            &s.surface,
                            &coupling,
                            &s.budget,
                            &s.fading,
                            PhaseStatistics::Uniform,
                        )?;
                        rows.push(vec![d, scale, r.trace().re]);
                    }
                    "d0_km,scale,trace_uniform_phase"
                }
            }
        }
    };
    writeln!(text, "{header}").unwrap();
    for r in rows {
        let cells: Vec<String> = r.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(text, "{}", cells.join(",")).unwrap();
    }
    write_out(out, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            seed,
            trials,
            out,
            workers,
        } => simulate(config.as_deref(), seed, trials, &out, workers),
        Command::Figure {
            preset,
            config,
            overrides,
            values,
            seed,
            trials,
            out,
            workers,
        } => figure(preset, config.as_deref(), &overrides, values, seed, trials, &out, workers),
        Command::Analytic { curve, params, out } => analytic(curve, &params, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_aperture_spacing() {
        let base = ConfigFile::default();
        for n in [4.0, 8.0, 16.0] {
            let c = Preset::ElementsFixedAperture.point(&base, n).unwrap();
            assert_eq!(c.elements_per_strip, n as usize);
            assert!((c.element_spacing_lambda * n - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_altitude_points() {
        let c = Preset::SingleAltitude.point(&ConfigFile::default(), 550.0).unwrap();
        assert!(c.scenario().unwrap().shell.is_single_altitude());
        assert!(Preset::SingleAltitude.point(&ConfigFile::default(), -1.0).is_err());
    }

    #[test]
    fn microstrip_size_keeps_spacing() {
        let c = Preset::MicrostripSize.point(&ConfigFile::default(), 3.0).unwrap();
        assert_eq!(c.elements_per_strip, 12);
        assert_eq!(c.element_spacing_lambda, 0.25);
    }
}
