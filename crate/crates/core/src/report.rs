//! CSV output for sweep tables.
//!
//! Metadata goes in leading `#` lines: tool version, master seed, the
//! config hash and the resolved config itself, so a file alone is enough
//! to rerun it. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::montecarlo::{CombinerKind, CouplingMode, SweepTable};

pub const HEADER: &str = "axis,axis_value,coupling_mode,combiner,mean_rate_bps_hz,stderr,\
mean_rate_outage_zero_bps_hz,mean_sir_db,trials,served,seed";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub axis: String,
    pub axis_value: f64,
    pub coupling_mode: CouplingMode,
    pub combiner: CombinerKind,
    pub mean_rate: f64,
    pub stderr: f64,
    pub mean_rate_outage_zero: f64,
    pub mean_sir_db: f64,
    pub trials: usize,
    pub served: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsCsv {
    /// Comment lines without the leading `# `.
    pub comments: Vec<String>,
    pub rows: Vec<CsvRow>,
}

impl ResultsCsv {
    pub fn from_tables(tables: &[SweepTable], config: &ConfigFile) -> Self {
        let seed = tables.first().map_or(config.seed, |t| t.seed);
        let mut comments = vec![
            format!("holosat {VERSION}"),
            format!("seed = {seed}"),
            format!("config_sha256 = {}", config.sha256()),
            "config:".to_string(),
        ];
        comments.extend(config.to_toml().lines().map(|l| format!("  {l}")));
        let rows = tables
            .iter()
            .flat_map(|t| {
                t.rows.iter().map(move |r| CsvRow {
                    axis: t.axis_name.clone(),
                    axis_value: r.axis_value,
                    coupling_mode: r.coupling_mode,
                    combiner: r.combiner,
                    mean_rate: r.summary.mean_rate,
                    stderr: r.summary.stderr,
                    mean_rate_outage_zero: r.summary.mean_rate_outage_zero,
                    mean_sir_db: r.summary.mean_sir_db,
                    trials: r.summary.trials,
                    served: r.summary.served,
                    seed: t.seed,
                })
            })
            .collect();
        Self { comments, rows }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            writeln!(out, "# {c}").unwrap();
        }
        writeln!(out, "{HEADER}").unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
                r.axis,
                r.axis_value,
                r.coupling_mode,
                r.combiner,
                r.mean_rate,
                r.stderr,
                r.mean_rate_outage_zero,
                r.mean_sir_db,
                r.trials,
                r.served,
                r.seed
            )
            .unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut comments = Vec::new();
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let bad = |what: &str| Error::Config(format!("csv line {}: {what}", i + 1));
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                continue;
            }
            if !header_seen {
                if line != HEADER {
                    return Err(bad("unexpected header"));
                }
                header_seen = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 11 {
                return Err(bad(&format!("expected 11 fields, found {}", f.len())));
            }
            fn num<T: FromStr>(s: &str, bad: &dyn Fn(&str) -> Error) -> Result<T> {
                s.parse().map_err(|_| bad(&format!("cannot parse `{s}`")))
            }
            rows.push(CsvRow {
                axis: f[0].to_string(),
                axis_value: num(f[1], &bad)?,
                coupling_mode: f[2].parse()?,
                combiner: f[3].parse()?,
                mean_rate: num(f[4], &bad)?,
                stderr: num(f[5], &bad)?,
                mean_rate_outage_zero: num(f[6], &bad)?,
                mean_sir_db: num(f[7], &bad)?,
                trials: num(f[8], &bad)?,
                served: num(f[9], &bad)?,
                seed: num(f[10], &bad)?,
            });
        }
        if !header_seen {
            return Err(Error::Config("csv has no header".into()));
        }
        Ok(Self { comments, rows })
    }
}
