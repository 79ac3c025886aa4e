//! Constellation shell geometry and closed-form distance statistics.
//!
//! Satellites form a binomial point process in the shell
//! `R_e + H1 <= |p| <= R_e + H2`; the user sits at `(0, 0, R_e)` and sees
//! every satellite with `z >= R_e`. The visible distance density has three
//! polynomial pieces whose breakpoints are `H1`, `H2`, `sqrt(2 R_e H1 + H1^2)`
//! and `sqrt(2 R_e H2 + H2^2)`; which of the two middle breakpoints comes first
//! is recorded by [`ShellGeometry::is_regular`].
//!
//! A shell with `H1 == H2` is treated as a sphere: satellites are uniform on
//! the surface and all "volumes" below are surface areas.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// One polynomial piece `c3 d^3 + c2 d^2 + c1 d` of the unnormalized visible
/// distance density on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    lo: f64,
    hi: f64,
    c: [f64; 3],
}

impl Piece {
    fn density(&self, d: f64) -> f64 {
        d * (self.c[2] + d * (self.c[1] + d * self.c[0]))
    }

    /// Integral of `s^-alpha * density(s)` over `[a, b]` within the piece.
    fn moment(&self, a: f64, b: f64, alpha: f64) -> f64 {
        let [c3, c2, c1] = self.c;
        c3 * power_integral(a, b, 3.0 - alpha)
            + c2 * power_integral(a, b, 2.0 - alpha)
            + c1 * power_integral(a, b, 1.0 - alpha)
    }
}

/// `int_a^b s^p ds` for `0 < a <= b`, stable as `p -> -1`.
fn power_integral(a: f64, b: f64, p: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let q = p + 1.0;
    let ln_ratio = (b / a).ln();
    if q == 0.0 {
        ln_ratio
    } else {
        a.powf(q) * (q * ln_ratio).exp_m1() / q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellGeometry {
    earth_radius_m: f64,
    h_min_m: f64,
    h_max_m: f64,
    h1_tilde_m: f64,
    h2_tilde_m: f64,
    shell_volume_m3: f64,
    visible_volume_m3: f64,
    regular: bool,
    pieces: Vec<Piece>,
}

impl ShellGeometry {
    pub fn new(earth_radius_m: f64, h_min_m: f64, h_max_m: f64) -> Result<Self> {
        if !(earth_radius_m > 0.0) || !earth_radius_m.is_finite() {
            return Err(Error::domain(
                "ShellGeometry",
                format!("earth radius {earth_radius_m} must be > 0"),
            ));
        }
        if !(h_min_m > 0.0) || !(h_min_m <= h_max_m) || !h_max_m.is_finite() {
            return Err(Error::domain(
                "ShellGeometry",
                format!("need 0 < H1 <= H2, got H1 = {h_min_m}, H2 = {h_max_m}"),
            ));
        }
        let re = earth_radius_m;
        let tilde = |h: f64| (2.0 * re * h + h * h).sqrt();
        let (t1, t2) = (tilde(h_min_m), tilde(h_max_m));
        let regular = t1 <= h_max_m;

        if h_min_m == h_max_m {
            let r = re + h_min_m;
            let piece = Piece {
                lo: h_min_m,
                hi: t1,
                c: [0.0, 0.0, 2.0 * PI * r / re],
            };
            return Ok(Self {
                earth_radius_m: re,
                h_min_m,
                h_max_m,
                h1_tilde_m: t1,
                h2_tilde_m: t2,
                shell_volume_m3: 4.0 * PI * r * r,
                visible_volume_m3: 2.0 * PI * r * h_min_m,
                regular,
                pieces: vec![piece],
            });
        }

        let cap = |h: f64| h * h * (3.0 * re + 2.0 * h);
        let visible = PI / 3.0 * (cap(h_max_m) - cap(h_min_m));
        let (r1, r2) = (re + h_min_m, re + h_max_m);
        let shell = 4.0 * PI / 3.0 * (r2.powi(3) - r1.powi(3));

        let near = [PI / re, 2.0 * PI, -PI * t1 * t1 / re];
        let far = [-PI / re, 0.0, PI * t2 * t2 / re];
        let pieces = if regular {
            vec![
                Piece {
                    lo: h_min_m,
                    hi: t1,
                    c: near,
                },
                Piece {
                    lo: t1,
                    hi: h_max_m,
                    c: [0.0, 2.0 * PI, 0.0],
                },
                Piece {
                    lo: h_max_m,
                    hi: t2,
                    c: far,
                },
            ]
        } else {
            vec![
                Piece {
                    lo: h_min_m,
                    hi: h_max_m,
                    c: near,
                },
                Piece {
                    lo: h_max_m,
                    hi: t1,
                    c: [0.0, 0.0, PI * (t2 * t2 - t1 * t1) / re],
                },
                Piece {
                    lo: t1,
                    hi: t2,
                    c: far,
                },
            ]
        };
        Ok(Self {
            earth_radius_m: re,
            h_min_m,
            h_max_m,
            h1_tilde_m: t1,
            h2_tilde_m: t2,
            shell_volume_m3: shell,
            visible_volume_m3: visible,
            regular,
            pieces,
        })
    }

    pub fn from_km(earth_radius_km: f64, h_min_km: f64, h_max_km: f64) -> Result<Self> {
        Self::new(earth_radius_km * 1e3, h_min_km * 1e3, h_max_km * 1e3)
    }

    pub fn single_altitude(earth_radius_m: f64, altitude_m: f64) -> Result<Self> {
        Self::new(earth_radius_m, altitude_m, altitude_m)
    }

    pub fn earth_radius(&self) -> f64 {
        self.earth_radius_m
    }
    pub fn h_min(&self) -> f64 {
        self.h_min_m
    }
    pub fn h_max(&self) -> f64 {
        self.h_max_m
    }
    pub fn h1_tilde(&self) -> f64 {
        self.h1_tilde_m
    }
    pub fn h2_tilde(&self) -> f64 {
        self.h2_tilde_m
    }
    /// Shell volume (surface area for a single-altitude shell).
    pub fn shell_volume(&self) -> f64 {
        self.shell_volume_m3
    }
    /// Visible part of the shell (surface area for a single-altitude shell).
    pub fn visible_volume(&self) -> f64 {
        self.visible_volume_m3
    }
    pub fn is_regular(&self) -> bool {
        self.regular
    }
    pub fn is_single_altitude(&self) -> bool {
        self.h_min_m == self.h_max_m
    }

    /// Support `[H1, H2~)` of the visible distance.
    pub fn support(&self) -> (f64, f64) {
        (self.h_min_m, self.h2_tilde_m)
    }

    /// Interior points where the distance density changes form.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.lo).collect()
    }

    fn check_d0(&self, op: &'static str, d0: f64) -> Result<()> {
        let (lo, hi) = self.support();
        if d0 >= lo && d0 < hi {
            Ok(())
        } else {
            Err(Error::domain(
                op,
                format!("d0 = {d0} m outside [{lo}, {hi})"),
            ))
        }
    }

    /// `V' f(d)`: visible measure per unit distance at distance `d`.
    pub fn visible_density(&self, d: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| d >= p.lo && d < p.hi)
            .map_or(0.0, |p| p.density(d))
    }

    /// `V' (1 - F(d))`, integrated directly to avoid cancellation near the
    /// far end of the support.
    fn visible_measure_above(&self, d: f64) -> f64 {
        self.pieces
            .iter()
            .filter(|p| d < p.hi)
            .map(|p| p.moment(d.max(p.lo), p.hi, 0.0))
            .sum()
    }

    /// `V' F(d)`: visible measure closer than `d`.
    fn visible_measure_below(&self, d: f64) -> f64 {
        self.pieces
            .iter()
            .filter(|p| d > p.lo)
            .map(|p| p.moment(p.lo, d.min(p.hi), 0.0))
            .sum()
    }

    pub fn sample_satellite(&self, rng: &mut ChaCha20Rng) -> Satellite {
        let re = self.earth_radius_m;
        let (r1, r2) = (re + self.h_min_m, re + self.h_max_m);
        let r = if self.is_single_altitude() {
            r1
        } else {
            let (a, b) = (r1.powi(3), r2.powi(3));
            (a + rng.random::<f64>() * (b - a)).cbrt()
        };
        let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
        let phi = 2.0 * PI * rng.random::<f64>();
        let s = (1.0 - z * z).max(0.0).sqrt();
        let position = [r * s * phi.cos(), r * s * phi.sin(), r * z];
        Satellite::at(position, re)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Satellite {
    pub position_m: [f64; 3],
    pub distance_m: f64,
    pub visible: bool,
}

impl Satellite {
    pub fn at(position_m: [f64; 3], earth_radius_m: f64) -> Self {
        let [x, y, z] = position_m;
        let dz = z - earth_radius_m;
        Self {
            position_m,
            distance_m: (x * x + y * y + dz * dz).sqrt(),
            visible: z >= earth_radius_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub satellites: Vec<Satellite>,
    pub serving_index: Option<usize>,
    pub interferer_indices: Vec<usize>,
}

impl Constellation {
    /// Sort by distance (stable); the nearest visible satellite serves and
    /// every other visible one interferes.
    pub fn from_satellites(mut satellites: Vec<Satellite>) -> Self {
        satellites.sort_by(|a, b| a.distance_m.total_cmp(&b.distance_m));
        let mut visible = satellites
            .iter()
            .enumerate()
            .filter(|(_, s)| s.visible)
            .map(|(i, _)| i);
        let serving_index = visible.next();
        let interferer_indices = visible.collect();
        Self {
            satellites,
            serving_index,
            interferer_indices,
        }
    }

    pub fn serving(&self) -> Option<&Satellite> {
        self.serving_index.map(|i| &self.satellites[i])
    }

    pub fn serving_distance(&self) -> Option<f64> {
        self.serving().map(|s| s.distance_m)
    }

    pub fn interferers(&self) -> impl Iterator<Item = &Satellite> {
        self.interferer_indices.iter().map(|&i| &self.satellites[i])
    }
}

pub fn sample_constellation(
    shell: &ShellGeometry,
    count: usize,
    rng: &mut ChaCha20Rng,
) -> Constellation {
    let satellites = (0..count).map(|_| shell.sample_satellite(rng)).collect();
    Constellation::from_satellites(satellites)
}

/// CDF of the distance from a visible satellite to the user.
pub fn cdf_visible_distance(shell: &ShellGeometry, d: f64) -> f64 {
    let (lo, hi) = shell.support();
    if d <= lo {
        return 0.0;
    }
    if d >= hi {
        return 1.0;
    }
    (shell.visible_measure_below(d) / shell.visible_volume()).clamp(0.0, 1.0)
}

pub fn pdf_visible_distance(shell: &ShellGeometry, d: f64) -> f64 {
    shell.visible_density(d) / shell.visible_volume()
}

/// Probability that a given satellite is visible.
pub fn prob_any_visible(shell: &ShellGeometry) -> f64 {
    shell.visible_volume() / shell.shell_volume()
}

/// Probability that the nearest of `count` satellites is visible.
pub fn prob_serving_visible(shell: &ShellGeometry, count: usize) -> f64 {
    let p = prob_any_visible(shell);
    -((count as f64) * (-p).ln_1p()).exp_m1()
}

/// Probability that another satellite is a visible interferer, given the
/// serving satellite at distance `d0`.
///
/// Computed as `V'(1 - F(d0)) / (V - V'F(d0))`: the other satellites are
/// uniform in the shell minus the ball of radius `d0` around the user.
pub fn prob_interferer_visible(shell: &ShellGeometry, d0: f64) -> Result<f64> {
    shell.check_d0("prob_interferer_visible", d0)?;
    let above = shell.visible_measure_above(d0);
    let below = shell.visible_measure_below(d0);
    let p = above / (shell.shell_volume() - below);
    Ok(p.clamp(0.0, 1.0))
}

/// Density of a visible interferer's distance given the serving distance `d0`.
pub fn conditional_pdf_interferer(shell: &ShellGeometry, d: f64, d0: f64) -> Result<f64> {
    shell.check_d0("conditional_pdf_interferer", d0)?;
    if d < d0 {
        return Ok(0.0);
    }
    let tail = shell.visible_measure_above(d0);
    Ok(shell.visible_density(d) / tail)
}

/// `int_{d0}^{H2~} s^-alpha V' f(s) ds`, by exact integration of each piece.
pub fn expected_interferer_pathloss(shell: &ShellGeometry, d0: f64, alpha: f64) -> Result<f64> {
    shell.check_d0("expected_interferer_pathloss", d0)?;
    if !(alpha >= 2.0) || !alpha.is_finite() {
        return Err(Error::domain(
            "expected_interferer_pathloss",
            format!("alpha = {alpha} must be >= 2"),
        ));
    }
    Ok(shell
        .pieces
        .iter()
        .filter(|p| p.hi > d0)
        .map(|p| p.moment(d0.max(p.lo), p.hi, alpha))
        .sum())
}

/// `E[D^-alpha]` for a visible interferer given serving distance `d0`:
/// [`expected_interferer_pathloss`] divided by `V'(1 - F(d0))`.
pub fn mean_interferer_pathloss(shell: &ShellGeometry, d0: f64, alpha: f64) -> Result<f64> {
    let raw = expected_interferer_pathloss(shell, d0, alpha)?;
    let tail = shell.visible_measure_above(d0);
    Ok(if tail > 0.0 { raw / tail } else { 0.0 })
}
