//! TOML scenario files with unit-suffixed keys.
//!
//! Every key is optional; missing keys take the reference 28 GHz values.
//! Logarithmic quantities are converted to linear on ingestion.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{wavelength, FadingParams, LinkBudget, SurfaceConfig};
use crate::error::{Error, Result};
use crate::geometry::ShellGeometry;
use crate::montecarlo::{CombinerKind, CouplingMode, CovarianceModel, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FadingConfig {
    /// Half power of the scattered component.
    pub b: f64,
    /// Nakagami parameter of the line-of-sight amplitude.
    pub upsilon: f64,
    /// Average line-of-sight power.
    pub omega: f64,
}

impl Default for FadingConfig {
    fn default() -> Self {
        Self {
            b: 0.3,
            upsilon: 3.0,
            omega: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub carrier_frequency_ghz: f64,
    pub bandwidth_mhz: f64,
    pub antenna_gain_dbi: f64,
    pub microstrips: usize,
    pub elements_per_strip: usize,
    pub earth_radius_km: f64,
    pub microstrip_spacing_lambda: f64,
    pub element_spacing_lambda: f64,
    /// Defaults to the element spacing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dipole_length_lambda: Option<f64>,
    /// `[H1, H2]`, or a single altitude.
    pub altitudes_km: Vec<f64>,
    pub satellites: usize,
    pub tx_power_dbw: f64,
    pub pathloss_exponent: f64,
    pub rain_attenuation_db: f64,
    pub noise_power_dbm: f64,
    pub coupling_mode: CouplingMode,
    pub combiners: Vec<CombinerKind>,
    pub covariance_model: CovarianceModel,
    pub trials: usize,
    pub seed: u64,
    pub fading: FadingConfig,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            carrier_frequency_ghz: 28.0,
            bandwidth_mhz: 1.0,
            antenna_gain_dbi: 50.0,
            microstrips: 4,
            elements_per_strip: 8,
            earth_radius_km: 6371.0,
            microstrip_spacing_lambda: 0.5,
            element_spacing_lambda: 0.25,
            dipole_length_lambda: None,
            altitudes_km: vec![160.0, 2000.0],
            satellites: 720,
            tx_power_dbw: 60.0,
            pathloss_exponent: 2.0,
            rain_attenuation_db: -4.324,
            noise_power_dbm: -104.0,
            coupling_mode: CouplingMode::Consider,
            combiners: CombinerKind::ALL.to_vec(),
            covariance_model: CovarianceModel::Designed,
            trials: 1000,
            seed: 20240901,
            fading: FadingConfig::default(),
        }
    }
}

/// 1-based line of the first assignment to `key` in `src`.
fn line_of(src: &str, key: &str) -> Option<usize> {
    src.lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

impl ConfigFile {
    /// Parse and validate. Errors carry the offending key and line.
    pub fn parse(src: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(src).map_err(|e| {
            let line = e
                .span()
                .map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1);
            let msg = e.message().trim().to_string();
            match line {
                Some(l) => Error::Config(format!("line {l}: {msg}")),
                None => Error::Config(msg),
            }
        })?;
        if let Err(Error::Config(msg)) = cfg.validate() {
            let key = msg.split('`').nth(1).unwrap_or("");
            let leaf = key.rsplit('.').next().unwrap_or(key);
            return Err(Error::Config(match line_of(src, leaf) {
                Some(l) => format!("line {l}: {msg}"),
                None => msg,
            }));
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&src)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// SHA-256 of the canonical serialization.
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Set `key` (dotted for nested tables, e.g. `fading.b`) from a TOML literal.
    /// Bare words that are not valid TOML are taken as strings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let literal: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        let mut table = toml::Table::try_from(&*self).expect("config is always serializable");
        let mut parts: Vec<&str> = key.split('.').collect();
        let leaf = parts.pop().unwrap_or("");
        let mut cursor = &mut table;
        for p in parts {
            cursor = cursor
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("`{key}`: `{p}` is not a table")))?;
        }
        cursor.insert(leaf.to_string(), literal);
        let updated: ConfigFile = table.try_into().map_err(|e: toml::de::Error| {
            Error::Config(format!("`{key}`: {}", e.message().trim()))
        })?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::Config(format!("`{key}` {why}")));
        let positive = [
            ("carrier_frequency_ghz", self.carrier_frequency_ghz),
            ("bandwidth_mhz", self.bandwidth_mhz),
            ("earth_radius_km", self.earth_radius_km),
            ("microstrip_spacing_lambda", self.microstrip_spacing_lambda),
            ("element_spacing_lambda", self.element_spacing_lambda),
            ("fading.b", self.fading.b),
            ("fading.upsilon", self.fading.upsilon),
        ];
        for (key, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return bad(key, &format!("must be positive, got {v}"));
            }
        }
        if let Some(d) = self.dipole_length_lambda {
            if !(d > 0.0) || !d.is_finite() {
                return bad(
                    "dipole_length_lambda",
                    &format!("must be positive, got {d}"),
                );
            }
        }
        if !(self.fading.omega >= 0.0) {
            return bad("fading.omega", "must be nonnegative");
        }
        for (key, v) in [
            ("microstrips", self.microstrips),
            ("elements_per_strip", self.elements_per_strip),
            ("satellites", self.satellites),
            ("trials", self.trials),
        ] {
            if v == 0 {
                return bad(key, "must be at least 1");
            }
        }
        match self.altitudes_km.as_slice() {
            [h] if *h > 0.0 => {}
            [h1, h2] if *h1 > 0.0 && h1 <= h2 && h2.is_finite() => {}
            _ => return bad("altitudes_km", "must be [H] or [H1, H2] with 0 < H1 <= H2"),
        }
        if !(self.pathloss_exponent >= 2.0) || !self.pathloss_exponent.is_finite() {
            return bad("pathloss_exponent", "must be at least 2");
        }
        for (key, v) in [
            ("antenna_gain_dbi", self.antenna_gain_dbi),
            ("tx_power_dbw", self.tx_power_dbw),
            ("rain_attenuation_db", self.rain_attenuation_db),
            ("noise_power_dbm", self.noise_power_dbm),
        ] {
            if !v.is_finite() {
                return bad(key, "must be finite");
            }
        }
        if self.combiners.is_empty() {
            return bad("combiners", "must list at least one combiner");
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        wavelength(self.carrier_frequency_ghz * 1e9)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.validate()?;
        let lambda = self.wavelength_m();
        let (h1, h2) = match self.altitudes_km.as_slice() {
            [h] => (*h, *h),
            [a, b] => (*a, *b),
            _ => unreachable!("validated"),
        };
        let shell = ShellGeometry::from_km(self.earth_radius_km, h1, h2)?;
        let surface = SurfaceConfig::in_wavelengths(
            self.microstrips,
            self.elements_per_strip,
            self.microstrip_spacing_lambda,
            self.element_spacing_lambda,
            self.dipole_length_lambda
                .unwrap_or(self.element_spacing_lambda),
            lambda,
        )?;
        let budget = LinkBudget::from_db(
            self.rain_attenuation_db,
            self.antenna_gain_dbi,
            self.pathloss_exponent,
            self.tx_power_dbw,
            self.noise_power_dbm,
            lambda,
        )?;
        let fading = FadingParams::new(self.fading.b, self.fading.upsilon, self.fading.omega)?;
        let mut combiners = self.combiners.clone();
        combiners.sort();
        combiners.dedup();
        Ok(Scenario {
            shell,
            count: self.satellites,
            surface,
            budget,
            fading,
            coupling_mode: self.coupling_mode,
            combiners,
            trials: self.trials,
            master_seed: self.seed,
            covariance_model: self.covariance_model,
        })
    }
}
