//! Physical layer: metasurface geometry, link budget, shadowed-Rician
//! fading, waveguide phases and the dipole mutual-coupling matrix.
//!
//! Elements are flattened strip-major: element `(m, n)` (both zero-based) has
//! index `m * N + n` and sits at `(m * strip_spacing, n * element_spacing)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::{Error, Result};
use crate::geometry::Constellation;
use crate::specfun::{regularized_lower_gamma_with, AccuracySpec};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Antenna impedance, ohms.
pub const ANTENNA_IMPEDANCE: f64 = 50.0;
/// Load impedance, ohms.
pub const LOAD_IMPEDANCE: f64 = 50.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceConfig {
    pub microstrips: usize,
    pub elements_per_strip: usize,
    pub strip_spacing_m: f64,
    pub element_spacing_m: f64,
    pub dipole_length_m: f64,
    pub wavelength_m: f64,
}

impl SurfaceConfig {
    pub fn new(
        microstrips: usize,
        elements_per_strip: usize,
        strip_spacing_m: f64,
        element_spacing_m: f64,
        dipole_length_m: f64,
        wavelength_m: f64,
    ) -> Result<Self> {
        let s = Self {
            microstrips,
            elements_per_strip,
            strip_spacing_m,
            element_spacing_m,
            dipole_length_m,
            wavelength_m,
        };
        s.validate()?;
        Ok(s)
    }

    /// Spacings and dipole length given in wavelengths.
    pub fn in_wavelengths(
        microstrips: usize,
        elements_per_strip: usize,
        strip_spacing: f64,
        element_spacing: f64,
        dipole_length: f64,
        wavelength_m: f64,
    ) -> Result<Self> {
        Self::new(
            microstrips,
            elements_per_strip,
            strip_spacing * wavelength_m,
            element_spacing * wavelength_m,
            dipole_length * wavelength_m,
            wavelength_m,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.microstrips == 0 || self.elements_per_strip == 0 {
            return Err(Error::domain(
                "SurfaceConfig",
                "need at least one strip and one element",
            ));
        }
        for (name, v) in [
            ("strip spacing", self.strip_spacing_m),
            ("element spacing", self.element_spacing_m),
            ("dipole length", self.dipole_length_m),
            ("wavelength", self.wavelength_m),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(
                    "SurfaceConfig",
                    format!("{name} must be > 0, got {v}"),
                ));
            }
        }
        Ok(())
    }

    pub fn element_count(&self) -> usize {
        self.microstrips * self.elements_per_strip
    }

    pub fn index(&self, m: usize, n: usize) -> Result<usize> {
        if m >= self.microstrips || n >= self.elements_per_strip {
            return Err(Error::Index {
                op: "SurfaceConfig::index",
                detail: format!(
                    "({m}, {n}) outside {}x{}",
                    self.microstrips, self.elements_per_strip
                ),
            });
        }
        Ok(m * self.elements_per_strip + n)
    }

    /// Planar position of a flattened element index.
    pub fn position(&self, i: usize) -> (f64, f64) {
        let (m, n) = (i / self.elements_per_strip, i % self.elements_per_strip);
        (
            m as f64 * self.strip_spacing_m,
            n as f64 * self.element_spacing_m,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    pub scatter_half_power: f64,
    pub nakagami_m: f64,
    pub los_power: f64,
}

impl FadingParams {
    pub fn new(scatter_half_power: f64, nakagami_m: f64, los_power: f64) -> Result<Self> {
        if !(scatter_half_power > 0.0) || !(nakagami_m > 0.0) || !(los_power >= 0.0) {
            return Err(Error::domain(
                "FadingParams",
                format!("need b0 > 0, m > 0, omega >= 0; got ({scatter_half_power}, {nakagami_m}, {los_power})"),
            ));
        }
        Ok(Self {
            scatter_half_power,
            nakagami_m,
            los_power,
        })
    }

    /// `E|g|^2 = omega + 2 b0`.
    pub fn mean_power(&self) -> f64 {
        self.los_power + 2.0 * self.scatter_half_power
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub rain_attenuation: f64,
    pub antenna_gain: f64,
    pub pathloss_exponent: f64,
    pub tx_power_w: f64,
    pub noise_power_w: f64,
    pub wavelength_m: f64,
}

impl LinkBudget {
    pub fn new(
        rain_attenuation: f64,
        antenna_gain: f64,
        pathloss_exponent: f64,
        tx_power_w: f64,
        noise_power_w: f64,
        wavelength_m: f64,
    ) -> Result<Self> {
        let b = Self {
            rain_attenuation,
            antenna_gain,
            pathloss_exponent,
            tx_power_w,
            noise_power_w,
            wavelength_m,
        };
        for (name, v) in [
            ("rain attenuation", rain_attenuation),
            ("antenna gain", antenna_gain),
            ("transmit power", tx_power_w),
            ("noise power", noise_power_w),
            ("wavelength", wavelength_m),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(
                    "LinkBudget",
                    format!("{name} must be > 0, got {v}"),
                ));
            }
        }
        if !(pathloss_exponent >= 2.0) || !pathloss_exponent.is_finite() {
            return Err(Error::domain(
                "LinkBudget",
                format!("path-loss exponent {pathloss_exponent} < 2"),
            ));
        }
        Ok(b)
    }

    /// Budget from logarithmic quantities: dB, dBi, dBW and dBm.
    pub fn from_db(
        rain_attenuation_db: f64,
        antenna_gain_dbi: f64,
        pathloss_exponent: f64,
        tx_power_dbw: f64,
        noise_power_dbm: f64,
        wavelength_m: f64,
    ) -> Result<Self> {
        Self::new(
            db_to_linear(rain_attenuation_db),
            db_to_linear(antenna_gain_dbi),
            pathloss_exponent,
            db_to_linear(tx_power_dbw),
            dbm_to_watts(noise_power_dbm),
            wavelength_m,
        )
    }

    /// Distance-independent factor `rain * gain * (lambda / 4 pi)^2`.
    pub fn gain_constant(&self) -> f64 {
        let k = self.wavelength_m / (4.0 * PI);
        self.rain_attenuation * self.antenna_gain * k * k
    }
}

/// Large-scale power gain at distance `distance_m`.
pub fn link_attenuation(budget: &LinkBudget, distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::domain(
            "link_attenuation",
            format!("distance {distance_m} must be > 0"),
        ));
    }
    Ok(budget.gain_constant() * distance_m.powf(-budget.pathloss_exponent))
}

/// Reusable sampler for one set of fading parameters.
#[derive(Debug, Clone)]
pub struct ShadowedRician {
    los_power: Gamma<f64>,
    scatter: Normal<f64>,
}

impl ShadowedRician {
    pub fn new(params: &FadingParams) -> Self {
        let m = params.nakagami_m;
        Self {
            // squared Nakagami amplitude is Gamma(m, omega/m)
            los_power: Gamma::new(m, (params.los_power / m).max(f64::MIN_POSITIVE))
                .expect("validated shape"),
            scatter: Normal::new(0.0, params.scatter_half_power.sqrt()).expect("validated scale"),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha20Rng) -> Complex64 {
        let amp = self.los_power.sample(rng).sqrt();
        let phase = 2.0 * PI * rng.random::<f64>();
        let los = Complex64::from_polar(amp, phase);
        los + Complex64::new(self.scatter.sample(rng), self.scatter.sample(rng))
    }
}

pub fn sample_shadowed_rician(params: &FadingParams, rng: &mut ChaCha20Rng) -> Complex64 {
    ShadowedRician::new(params).sample(rng)
}

/// CDF of `|g|^2` as a negative-binomial mixture of Gamma(i + 1, 2 b0) laws.
pub fn shadowed_rician_power_cdf(params: &FadingParams, x: f64) -> Result<f64> {
    shadowed_rician_power_cdf_with(params, x, &AccuracySpec::default())
}

pub fn shadowed_rician_power_cdf_with(
    params: &FadingParams,
    x: f64,
    acc: &AccuracySpec,
) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(
            "shadowed_rician_power_cdf",
            format!("x = {x} must be >= 0"),
        ));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let (b0, m, omega) = (
        params.scatter_half_power,
        params.nakagami_m,
        params.los_power,
    );
    let denom = 2.0 * b0 * m + omega;
    let z = omega / denom;
    let y = x / (2.0 * b0);
    let mode = if m > 1.0 && z > 0.0 {
        ((m - 1.0) * z / (1.0 - z)).floor() as usize
    } else {
        0
    };
    let mut weight = (2.0 * b0 * m / denom).powf(m);
    let mut sum = 0.0;
    for i in 0..acc.max_terms {
        let term = weight * regularized_lower_gamma_with(i as f64 + 1.0, y, acc)?;
        sum += term;
        if i >= mode && term < acc.abs_tol * sum {
            break;
        }
        weight *= (m + i as f64) / (i as f64 + 1.0) * z;
        if weight == 0.0 {
            break;
        }
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Waveguide phase `exp(-j 2 pi n delta_N / lambda)` of element `(m, n)`.
pub fn waveguide_response(surface: &SurfaceConfig, m: usize, n: usize) -> Result<Complex64> {
    surface.index(m, n)?;
    let xi = n as f64 * surface.element_spacing_m;
    Ok(Complex64::from_polar(
        1.0,
        -2.0 * PI * xi / surface.wavelength_m,
    ))
}

/// Waveguide responses of one strip. Identical for every strip.
pub fn strip_response(surface: &SurfaceConfig) -> Vec<Complex64> {
    (0..surface.elements_per_strip)
        .map(|n| {
            Complex64::from_polar(
                1.0,
                -2.0 * PI * n as f64 * surface.element_spacing_m / surface.wavelength_m,
            )
        })
        .collect()
}

/// Mutual impedance of two parallel side-by-side dipoles at planar
/// separation `d`: `R + jX` with `R = 30 (2 Ci(u0) - Ci(u1) - Ci(u2))` and
/// `X = -30 (2 Si(u0) - Si(u1) - Si(u2))`.
pub fn dipole_mutual_impedance(d: f64, dipole_length: f64, wavelength: f64) -> Result<Complex64> {
    let k = 2.0 * PI / wavelength;
    let dt = (d * d + dipole_length * dipole_length).sqrt();
    let u0 = k * d;
    let u1 = k * (dt + dipole_length);
    let u2 = k * (dt - dipole_length);
    use crate::specfun::{cosine_integral, sine_integral};
    let re =
        60.0 * cosine_integral(u0)? - 30.0 * cosine_integral(u1)? - 30.0 * cosine_integral(u2)?;
    let im = -60.0 * sine_integral(u0) + 30.0 * sine_integral(u1) + 30.0 * sine_integral(u2);
    Ok(Complex64::new(re, im))
}

pub fn mutual_impedance(surface: &SurfaceConfig, i1: usize, i2: usize) -> Result<Complex64> {
    let n = surface.element_count();
    if i1 >= n || i2 >= n {
        return Err(Error::Index {
            op: "mutual_impedance",
            detail: format!("({i1}, {i2}) outside {n} elements"),
        });
    }
    if i1 == i2 {
        return Ok(Complex64::from(ANTENNA_IMPEDANCE));
    }
    let (x1, y1) = surface.position(i1);
    let (x2, y2) = surface.position(i2);
    let d = (x1 - x2).hypot(y1 - y2);
    dipole_mutual_impedance(d, surface.dipole_length_m, surface.wavelength_m)
}

pub fn impedance_matrix(surface: &SurfaceConfig) -> Result<DMatrix<Complex64>> {
    let n = surface.element_count();
    let mut z = DMatrix::from_element(n, n, Complex64::from(ANTENNA_IMPEDANCE));
    for i in 0..n {
        for j in 0..i {
            let v = mutual_impedance(surface, i, j)?;
            z[(i, j)] = v;
            z[(j, i)] = v;
        }
    }
    Ok(z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub entries: DMatrix<Complex64>,
    pub antenna_impedance_ohm: f64,
    pub load_impedance_ohm: f64,
}

impl CouplingMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
            antenna_impedance_ohm: ANTENNA_IMPEDANCE,
            load_impedance_ohm: LOAD_IMPEDANCE,
        }
    }

    /// `C = (Z_A + Z_L)(Z + Z_L I)^-1` for a given impedance matrix.
    pub fn from_impedance(z: &DMatrix<Complex64>) -> Result<Self> {
        let n = z.nrows();
        let shifted = z + DMatrix::<Complex64>::identity(n, n) * Complex64::from(LOAD_IMPEDANCE);
        let lu = shifted.clone().lu();
        let inv = lu.try_inverse().ok_or_else(|| Error::Singular {
            op: "coupling_matrix",
            detail: "Z + Z_L I has no inverse".into(),
        })?;
        let cond = shifted.norm() * inv.norm();
        if !(cond.is_finite() && cond < 1e14) {
            return Err(Error::Singular {
                op: "coupling_matrix",
                detail: format!("Z + Z_L I condition estimate {cond:e}"),
            });
        }
        Ok(Self {
            entries: inv * Complex64::from(ANTENNA_IMPEDANCE + LOAD_IMPEDANCE),
            antenna_impedance_ohm: ANTENNA_IMPEDANCE,
            load_impedance_ohm: LOAD_IMPEDANCE,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Deviation from the identity in Frobenius norm.
    pub fn distance_from_identity(&self) -> f64 {
        (&self.entries - DMatrix::<Complex64>::identity(self.dim(), self.dim())).norm()
    }
}

pub fn coupling_matrix(surface: &SurfaceConfig) -> Result<CouplingMatrix> {
    surface.validate()?;
    CouplingMatrix::from_impedance(&impedance_matrix(surface)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Coupled channels `C f`, one per realized satellite.
    pub per_satellite: Vec<DVector<Complex64>>,
    /// Uncoupled channels `sqrt(rho_l) g`, strip-major.
    pub raw: Vec<DVector<Complex64>>,
    pub attenuations: Vec<f64>,
    /// Constellation index of each realized satellite.
    pub satellite_indices: Vec<usize>,
    /// True when entry 0 is the serving satellite.
    pub has_serving: bool,
}

impl ChannelRealization {
    pub fn serving(&self) -> Option<(&DVector<Complex64>, &DVector<Complex64>)> {
        self.has_serving
            .then(|| (&self.per_satellite[0], &self.raw[0]))
    }

    pub fn interferers_coupled(&self) -> &[DVector<Complex64>] {
        &self.per_satellite[usize::from(self.has_serving)..]
    }
}

/// Channels for the serving satellite (if any) followed by every visible
/// interferer; fading drawn per satellite, element by element.
pub fn realize_channels(
    constellation: &Constellation,
    surface: &SurfaceConfig,
    budget: &LinkBudget,
    fading: &FadingParams,
    coupling: &CouplingMatrix,
    rng: &mut ChaCha20Rng,
) -> Result<ChannelRealization> {
    let sampler = ShadowedRician::new(fading);
    realize_channels_with(constellation, surface, budget, coupling, |_, _| {
        sampler.sample(rng)
    })
}

/// As [`realize_channels`] with small-scale fading supplied by
/// `fading(satellite_slot, element_index)`.
pub fn realize_channels_with<F>(
    constellation: &Constellation,
    surface: &SurfaceConfig,
    budget: &LinkBudget,
    coupling: &CouplingMatrix,
    mut fading: F,
) -> Result<ChannelRealization>
where
    F: FnMut(usize, usize) -> Complex64,
{
    let n = surface.element_count();
    if coupling.dim() != n {
        return Err(Error::Dimension(format!(
            "coupling matrix is {0}x{0}, surface has {n} elements",
            coupling.dim()
        )));
    }
    let indices: Vec<usize> = constellation
        .serving_index
        .into_iter()
        .chain(constellation.interferer_indices.iter().copied())
        .collect();
    let mut out = ChannelRealization {
        per_satellite: Vec::with_capacity(indices.len()),
        raw: Vec::with_capacity(indices.len()),
        attenuations: Vec::with_capacity(indices.len()),
        satellite_indices: indices.clone(),
        has_serving: constellation.serving_index.is_some(),
    };
    for (slot, &idx) in indices.iter().enumerate() {
        let rho = link_attenuation(budget, constellation.satellites[idx].distance_m)?;
        let amp = rho.sqrt();
        let raw = DVector::from_fn(n, |i, _| fading(slot, i) * amp);
        out.per_satellite.push(&coupling.entries * &raw);
        out.raw.push(raw);
        out.attenuations.push(rho);
    }
    Ok(out)
}
