//! Trial orchestration, sweeps and aggregation.
//!
//! Each trial draws from its own ChaCha20 stream (`master_seed`, stream =
//! trial index), so results do not depend on scheduling. Aggregation runs
//! in trial order after the parallel map.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{
    assemble_with_map, combiner_mmse_full, combiner_mmse_statistical, combiner_mrc, evaluate_sinr,
    optimize_holographic, sir, statistical_covariance_with_gram, AnalogMap, BasebandChannels,
    HolographicPhases, PhaseStatistics,
};
use crate::channel::{
    coupling_matrix, realize_channels, ChannelRealization, CouplingMatrix, FadingParams,
    LinkBudget, SurfaceConfig,
};
use crate::error::{Error, Result};
use crate::geometry::{prob_serving_visible, sample_constellation, Constellation, ShellGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMode {
    /// Phases and statistics designed with the coupled channels.
    Consider,
    /// Coupling present in the channel but ignored by the design.
    Ignore,
    /// No coupling anywhere.
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinerKind {
    Mrc,
    MmseFull,
    MmseStatistical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceModel {
    /// Interference covariance conditioned on the designed analog map.
    #[default]
    Designed,
    /// Interference covariance averaged over i.i.d. uniform element phases.
    Uniform,
}

macro_rules! string_enum {
    ($ty:ty { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $(Self::$variant => $name),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(self.name())
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(Self::$variant),)+
                    other => Err(Error::Config(format!(
                        "unknown {} `{other}` (expected one of: {})",
                        stringify!($ty),
                        [$($name),+].join(", ")
                    ))),
                }
            }
        }
    };
}

string_enum!(CouplingMode { Consider => "consider", Ignore => "ignore", Ideal => "ideal" });
string_enum!(CombinerKind { Mrc => "mrc", MmseFull => "mmse_full", MmseStatistical => "mmse_statistical" });
string_enum!(CovarianceModel { Designed => "designed", Uniform => "uniform" });

impl CombinerKind {
    pub const ALL: [CombinerKind; 3] = [
        CombinerKind::Mrc,
        CombinerKind::MmseFull,
        CombinerKind::MmseStatistical,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub shell: ShellGeometry,
    pub count: usize,
    pub surface: SurfaceConfig,
    pub budget: LinkBudget,
    pub fading: FadingParams,
    pub coupling_mode: CouplingMode,
    pub combiners: Vec<CombinerKind>,
    pub trials: usize,
    pub master_seed: u64,
    pub covariance_model: CovarianceModel,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::domain("Scenario", "satellite count must be >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::domain("Scenario", "trials must be >= 1"));
        }
        if self.combiners.is_empty() {
            return Err(Error::domain(
                "Scenario",
                "at least one combiner is required",
            ));
        }
        if (self.surface.wavelength_m - self.budget.wavelength_m).abs()
            > 1e-12 * self.budget.wavelength_m
        {
            return Err(Error::domain(
                "Scenario",
                "surface and link budget disagree on the wavelength",
            ));
        }
        self.surface.validate()
    }
}

/// Independent random stream for one trial.
pub fn seed_substream(master_seed: u64, trial_index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_index: u64,
    /// `None` on outage.
    pub serving_distance_m: Option<f64>,
    pub visible_interferers: usize,
    pub sinr_by_combiner: BTreeMap<CombinerKind, f64>,
    pub sir_by_combiner: BTreeMap<CombinerKind, f64>,
    /// `log2(1 + sinr)`, zero on outage.
    pub rate_by_combiner: BTreeMap<CombinerKind, f64>,
    /// True when some solve needed diagonal loading.
    pub regularized: bool,
}

impl TrialResult {
    pub fn is_outage(&self) -> bool {
        self.serving_distance_m.is_none()
    }
}

/// Everything computed for one served draw up to the combiners.
#[derive(Debug, Clone)]
pub struct TrialState {
    pub constellation: Constellation,
    pub channels: ChannelRealization,
    pub phases: HolographicPhases,
    pub map: AnalogMap,
    /// Channels and true noise covariance used for scoring.
    pub baseband: BasebandChannels,
    /// Channels and noise covariance the combiner design works with. In
    /// ignore mode these are built from the uncoupled channels.
    pub design: BasebandChannels,
    pub serving_distance_m: f64,
}

/// A scenario with its geometry-only matrices precomputed.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: Scenario,
    coupling: CouplingMatrix,
    gram: DMatrix<Complex64>,
    design_gram: DMatrix<Complex64>,
    p_serving: f64,
}

impl Simulator {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let n = scenario.surface.element_count();
        let coupling = match scenario.coupling_mode {
            CouplingMode::Ideal => CouplingMatrix::identity(n),
            _ => coupling_matrix(&scenario.surface)?,
        };
        let gram = &coupling.entries * coupling.entries.adjoint();
        let design_gram = match scenario.coupling_mode {
            CouplingMode::Consider => gram.clone(),
            _ => DMatrix::identity(n, n),
        };
        let p_serving = prob_serving_visible(&scenario.shell, scenario.count);
        Ok(Self {
            scenario,
            coupling,
            gram,
            design_gram,
            p_serving,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    pub fn p_serving(&self) -> f64 {
        self.p_serving
    }

    pub fn sample_constellation(&self, rng: &mut ChaCha20Rng) -> Constellation {
        sample_constellation(&self.scenario.shell, self.scenario.count, rng)
    }

    /// Realize channels for a served constellation and apply the analog design.
    pub fn beamform(
        &self,
        constellation: &Constellation,
        rng: &mut ChaCha20Rng,
    ) -> Result<TrialState> {
        let s = &self.scenario;
        let serving_distance_m = constellation
            .serving_distance()
            .ok_or_else(|| Error::domain("beamform", "constellation has no serving satellite"))?;
        let channels = realize_channels(
            constellation,
            &s.surface,
            &s.budget,
            &s.fading,
            &self.coupling,
            rng,
        )?;
        let design_channel = match s.coupling_mode {
            CouplingMode::Ignore => &channels.raw[0],
            _ => &channels.per_satellite[0],
        };
        let phases = optimize_holographic(design_channel, &s.surface)?;
        let map = AnalogMap::new(&phases, &s.surface)?;
        let baseband = assemble_with_map(&channels, &map, &self.gram, &s.budget)?;
        let design = match s.coupling_mode {
            CouplingMode::Consider | CouplingMode::Ideal => baseband.clone(),
            CouplingMode::Ignore => BasebandChannels {
                serving: map.apply(&channels.raw[0]),
                interferers: channels.raw[1..].iter().map(|f| map.apply(f)).collect(),
                noise_cov: map.sandwich(&self.design_gram)
                    * Complex64::from(s.budget.noise_power_w),
            },
        };
        Ok(TrialState {
            constellation: constellation.clone(),
            channels,
            phases,
            map,
            baseband,
            design,
            serving_distance_m,
        })
    }

    /// Pipeline state of one trial, or `None` on outage.
    pub fn trial_state(&self, trial_index: u64) -> Result<Option<TrialState>> {
        let mut rng = seed_substream(self.scenario.master_seed, trial_index);
        let constellation = self.sample_constellation(&mut rng);
        if constellation.serving_index.is_none() {
            return Ok(None);
        }
        self.beamform(&constellation, &mut rng).map(Some)
    }

    /// Interference covariance the statistical combiner assumes for a state.
    pub fn design_covariance(&self, state: &TrialState) -> Result<DMatrix<Complex64>> {
        let s = &self.scenario;
        let stats = match s.covariance_model {
            CovarianceModel::Designed => PhaseStatistics::Designed(&state.map),
            CovarianceModel::Uniform => PhaseStatistics::Uniform,
        };
        statistical_covariance_with_gram(
            &s.shell,
            s.count,
            state.serving_distance_m,
            &s.surface,
            &self.design_gram,
            &s.budget,
            &s.fading,
            stats,
        )
    }

    pub fn run_trial(&self, trial_index: u64) -> Result<TrialResult> {
        self.run_trial_inner(trial_index).map_err(|e| Error::Trial {
            trial: trial_index,
            source: Box::new(e),
        })
    }

    fn run_trial_inner(&self, trial_index: u64) -> Result<TrialResult> {
        let s = &self.scenario;
        let mut result = TrialResult {
            trial_index,
            serving_distance_m: None,
            visible_interferers: 0,
            sinr_by_combiner: BTreeMap::new(),
            sir_by_combiner: BTreeMap::new(),
            rate_by_combiner: s.combiners.iter().map(|&c| (c, 0.0)).collect(),
            regularized: false,
        };
        let Some(state) = self.trial_state(trial_index)? else {
            return Ok(result);
        };
        result.serving_distance_m = Some(state.serving_distance_m);
        result.visible_interferers = state.baseband.interferers.len();
        let design = &state.design;
        for &kind in &s.combiners {
            let v = match kind {
                CombinerKind::Mrc => combiner_mrc(design),
                CombinerKind::MmseFull => {
                    let c = combiner_mmse_full(design, &s.budget)?;
                    result.regularized |= c.regularized;
                    c.vector
                }
                CombinerKind::MmseStatistical => {
                    let r = self.design_covariance(&state)?;
                    let c = combiner_mmse_statistical(design, &r, &s.budget)?;
                    result.regularized |= c.regularized;
                    c.vector
                }
            };
            let gamma = evaluate_sinr(&v, &state.baseband, &s.budget)?;
            result.sinr_by_combiner.insert(kind, gamma);
            result
                .sir_by_combiner
                .insert(kind, sir(&v, &state.baseband)?);
            result.rate_by_combiner.insert(kind, (1.0 + gamma).log2());
        }
        Ok(result)
    }

    /// Run every trial of the scenario on `workers` threads (0 = rayon default).
    pub fn run(&self, workers: usize) -> Result<Vec<TrialResult>> {
        let trials = self.scenario.trials as u64;
        let work = || -> Result<Vec<TrialResult>> {
            (0..trials)
                .into_par_iter()
                .map(|i| self.run_trial(i))
                .collect()
        };
        if workers == 0 {
            work()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?
                .install(work)
        }
    }
}

/// Aggregate statistics of one combiner at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSummary {
    /// `P_S` times the mean rate over served trials.
    pub mean_rate: f64,
    pub stderr: f64,
    /// Mean over all trials with zero rate on outage.
    pub mean_rate_outage_zero: f64,
    pub stderr_outage_zero: f64,
    /// Mean of `10 log10(SIR)` over served trials with finite SIR.
    pub mean_sir_db: f64,
    pub trials: usize,
    pub served: usize,
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn summarize(results: &[TrialResult], kind: CombinerKind, p_serving: f64) -> RateSummary {
    let served: Vec<f64> = results
        .iter()
        .filter(|r| !r.is_outage())
        .map(|r| r.rate_by_combiner.get(&kind).copied().unwrap_or(0.0))
        .collect();
    let all: Vec<f64> = results
        .iter()
        .map(|r| r.rate_by_combiner.get(&kind).copied().unwrap_or(0.0))
        .collect();
    let sir_db: Vec<f64> = results
        .iter()
        .filter_map(|r| r.sir_by_combiner.get(&kind))
        .filter(|x| x.is_finite())
        .map(|x| 10.0 * x.log10())
        .collect();
    let (m, se) = mean_and_se(&served);
    let (m0, se0) = mean_and_se(&all);
    RateSummary {
        mean_rate: p_serving * m,
        stderr: p_serving * se,
        mean_rate_outage_zero: m0,
        stderr_outage_zero: se0,
        mean_sir_db: if sir_db.is_empty() {
            f64::NAN
        } else {
            mean_and_se(&sir_db).0
        },
        trials: results.len(),
        served: served.len(),
    }
}

/// Mean and standard error of the per-trial rate difference `a - b` over
/// served trials, scaled by `P_S`.
pub fn paired_difference(
    results: &[TrialResult],
    a: CombinerKind,
    b: CombinerKind,
    p_serving: f64,
) -> (f64, f64) {
    let d: Vec<f64> = results
        .iter()
        .filter(|r| !r.is_outage())
        .map(|r| r.rate_by_combiner[&a] - r.rate_by_combiner[&b])
        .collect();
    let (m, se) = mean_and_se(&d);
    (p_serving * m, p_serving * se)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Elements per strip.
    N,
    /// Number of strips.
    M,
    /// Element spacing in wavelengths.
    ElementSpacing,
    /// Strip length in wavelengths at fixed element spacing.
    MicrostripSize,
    /// Dipole length in wavelengths.
    DipoleLength,
    /// Number of satellites.
    Count,
    /// Transmit power in dBW.
    TxPower,
    /// Path-loss exponent.
    Alpha,
    /// Single orbital altitude in km.
    AltitudeSingle,
}

string_enum!(SweepAxis {
    N => "N",
    M => "M",
    ElementSpacing => "element_spacing",
    MicrostripSize => "microstrip_size",
    DipoleLength => "dipole_length",
    Count => "count",
    TxPower => "tx_power",
    Alpha => "alpha",
    AltitudeSingle => "altitude_single",
});

impl SweepAxis {
    pub fn parse(name: &str) -> Result<Self> {
        name.parse()
            .map_err(|_| Error::UnknownAxis(name.to_string()))
    }

    /// Scenario with this axis set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = base.clone();
        let lambda = s.surface.wavelength_m;
        let positive_int = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::domain(
                    "run_sweep",
                    format!("axis {self} needs a positive integer, got {v}"),
                ))
            }
        };
        match self {
            SweepAxis::N => s.surface.elements_per_strip = positive_int(value)?,
            SweepAxis::M => s.surface.microstrips = positive_int(value)?,
            SweepAxis::ElementSpacing => s.surface.element_spacing_m = value * lambda,
            SweepAxis::MicrostripSize => {
                let n = (value * lambda / s.surface.element_spacing_m)
                    .round()
                    .max(1.0);
                s.surface.elements_per_strip = n as usize;
            }
            SweepAxis::DipoleLength => s.surface.dipole_length_m = value * lambda,
            SweepAxis::Count => s.count = positive_int(value)?,
            SweepAxis::TxPower => s.budget.tx_power_w = crate::channel::db_to_linear(value),
            SweepAxis::Alpha => {
                s.budget = LinkBudget {
                    pathloss_exponent: value,
                    ..s.budget
                }
            }
            SweepAxis::AltitudeSingle => {
                s.shell = ShellGeometry::single_altitude(s.shell.earth_radius(), value * 1e3)?;
            }
        }
        s.budget = LinkBudget::new(
            s.budget.rain_attenuation,
            s.budget.antenna_gain,
            s.budget.pathloss_exponent,
            s.budget.tx_power_w,
            s.budget.noise_power_w,
            s.budget.wavelength_m,
        )?;
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub coupling_mode: CouplingMode,
    pub combiner: CombinerKind,
    pub summary: RateSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis_name: String,
    pub axis_values: Vec<f64>,
    pub seed: u64,
    /// One row per (axis value, combiner), in that order.
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn row(&self, axis_value: f64, combiner: CombinerKind) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.axis_value == axis_value && r.combiner == combiner)
    }

    pub fn extend(&mut self, other: SweepTable) {
        for v in other.axis_values {
            if !self.axis_values.contains(&v) {
                self.axis_values.push(v);
            }
        }
        self.rows.extend(other.rows);
    }
}

/// Run explicitly prepared scenarios as the points of one sweep axis.
pub fn run_points(
    axis_name: &str,
    points: &[(f64, Scenario)],
    workers: usize,
) -> Result<SweepTable> {
    let seed = points.first().map_or(0, |(_, s)| s.master_seed);
    let mut table = SweepTable {
        axis_name: axis_name.to_string(),
        axis_values: points.iter().map(|(v, _)| *v).collect(),
        seed,
        rows: Vec::new(),
    };
    for (value, scenario) in points {
        let sim = Simulator::new(scenario.clone())?;
        let results = sim.run(workers)?;
        for &kind in &scenario.combiners {
            table.rows.push(SweepRow {
                axis_value: *value,
                coupling_mode: scenario.coupling_mode,
                combiner: kind,
                summary: summarize(&results, kind, sim.p_serving()),
            });
        }
    }
    Ok(table)
}

/// A single scenario as a one-point table on the `count` axis.
pub fn run_scenario(scenario: &Scenario, workers: usize) -> Result<SweepTable> {
    run_points(
        SweepAxis::Count.name(),
        &[(scenario.count as f64, scenario.clone())],
        workers,
    )
}

pub fn run_sweep(
    base: &Scenario,
    axis: &str,
    values: &[f64],
    trials_per_point: usize,
    workers: usize,
) -> Result<SweepTable> {
    let axis = SweepAxis::parse(axis)?;
    let points = values
        .iter()
        .map(|&v| {
            let mut s = axis.apply(base, v)?;
            s.trials = trials_per_point;
            s.validate()?;
            Ok((v, s))
        })
        .collect::<Result<Vec<_>>>()?;
    run_points(axis.name(), &points, workers)
}
