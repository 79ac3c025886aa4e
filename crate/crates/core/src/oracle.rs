//! Independent verification engines: adaptive quadrature, brute-force phase
//! search, Kolmogorov-Smirnov distance and the Monte-Carlo covariance
//! estimator.

use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::beamforming::{lorentzian_coefficient, AnalogMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

/// Evaluation budget for [`adaptive_quadrature`].
pub const MAX_EVALUATIONS: usize = 1_000_000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`
/// to absolute tolerance `tol`.
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    adaptive_quadrature_with_breakpoints(f, a, b, &[], tol)
}

/// As [`adaptive_quadrature`], with the interval first split at every
/// breakpoint strictly inside `(a, b)`. Use it for integrands with kinks.
pub fn adaptive_quadrature_with_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<QuadratureResult> {
    if !(a <= b) {
        return Err(Error::domain(
            "adaptive_quadrature",
            format!("need a <= b, got [{a}, {b}]"),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("adaptive_quadrature", "tol must be > 0"));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let mut knots = vec![a];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    knots.extend(inner);
    knots.push(b);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in knots.windows(2) {
        heap.push(gauss_kronrod(&f, w[0], w[1]));
        evaluations += 15;
    }
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        let floor = 64.0 * f64::EPSILON * heap.iter().map(|s| s.value.abs()).sum::<f64>();
        if !value.is_finite() {
            return Err(Error::NonConvergence {
                op: "adaptive_quadrature",
                evaluations,
                estimate: f64::NAN,
            });
        }
        if error <= tol.max(floor) {
            return Ok(QuadratureResult {
                value,
                abs_error_estimate: error,
                evaluations,
            });
        }
        if evaluations >= MAX_EVALUATIONS {
            return Err(Error::NonConvergence {
                op: "adaptive_quadrature",
                evaluations,
                estimate: error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            return Err(Error::NonConvergence {
                op: "adaptive_quadrature",
                evaluations,
                estimate: error,
            });
        }
        heap.push(gauss_kronrod(&f, worst.a, mid));
        heap.push(gauss_kronrod(&f, mid, worst.b));
        evaluations += 30;
    }
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let p = cdf(x);
        let lo = (p - i as f64 / n).abs();
        let hi = ((i + 1) as f64 / n - p).abs();
        d.max(lo).max(hi)
    })
}

/// Number of random draws used by [`brute_force_phase_search`] when the
/// element count is too large for an exhaustive grid.
pub const RANDOM_SEARCH_DRAWS: usize = 1_000_000;

/// Best `|sum q_n beta(phi_n) f_n|` over a phase grid (N <= 3) or over
/// [`RANDOM_SEARCH_DRAWS`] uniform draws (N > 3).
pub fn brute_force_phase_search(
    serving_raw: &[Complex64],
    q: &[Complex64],
    grid_step: f64,
    rng: &mut ChaCha20Rng,
) -> Result<(Vec<f64>, f64)> {
    let n = serving_raw.len();
    if q.len() != n {
        return Err(Error::Dimension(format!(
            "channel has {n} entries, waveguide response has {}",
            q.len()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let qf: Vec<Complex64> = q.iter().zip(serving_raw).map(|(a, b)| a * b).collect();
    let gain = |phases: &[f64]| {
        qf.iter()
            .zip(phases)
            .map(|(z, &p)| z * lorentzian_coefficient(p))
            .sum::<Complex64>()
            .norm()
    };
    let mut best = (vec![0.0; n], f64::NEG_INFINITY);
    if n <= 3 {
        if !(grid_step > 0.0) {
            return Err(Error::domain(
                "brute_force_phase_search",
                "grid_step must be > 0",
            ));
        }
        let steps = (std::f64::consts::TAU / grid_step).ceil() as usize;
        let table: Vec<Complex64> = (0..steps)
            .map(|k| lorentzian_coefficient(k as f64 * grid_step))
            .collect();
        // innermost element scanned with a table lookup, outer ones enumerated
        let outer = steps.pow(n as u32 - 1);
        let last = qf[n - 1];
        let scaled: Vec<Complex64> = table.iter().map(|b| last * b).collect();
        let mut idx = vec![0usize; n];
        for o in 0..outer {
            let mut r = o;
            let mut partial = Complex64::new(0.0, 0.0);
            for k in 0..n - 1 {
                idx[k] = r % steps;
                r /= steps;
                partial += qf[k] * table[idx[k]];
            }
            let (arg, g2) = scaled
                .iter()
                .enumerate()
                .map(|(k, z)| (k, (partial + z).norm_sqr()))
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, x| if x.1 > acc.1 { x } else { acc },
                );
            if g2 > best.1 {
                idx[n - 1] = arg;
                best = (idx.iter().map(|&k| k as f64 * grid_step).collect(), g2);
            }
        }
        best.1 = best.1.sqrt();
    } else {
        let mut phases = vec![0.0; n];
        for _ in 0..RANDOM_SEARCH_DRAWS {
            for p in phases.iter_mut() {
                *p = rng.random::<f64>() * std::f64::consts::TAU;
            }
            let g = gain(&phases);
            if g > best.1 {
                best = (phases.clone(), g);
            }
        }
    }
    Ok(best)
}

/// Output of [`empirical_interference_covariance`].
#[derive(Debug, Clone)]
pub struct EmpiricalCovariance {
    pub mean: DMatrix<Complex64>,
    pub attempts: usize,
    pub qualifying: usize,
    /// Analog maps and serving distances of the qualifying draws, in draw order.
    pub maps: Vec<(AnalogMap, f64)>,
}

/// Minimum qualifying draws accepted by [`empirical_interference_covariance`].
pub const MIN_QUALIFYING: usize = 100;

/// Average of `sum_l h_l h_l^H` over visible interferers, conditioned on the
/// serving distance lying in `d0_bin`.
///
/// `draws` is the number of qualifying draws to collect; sampling stops after
/// `max_attempts` constellations regardless.
pub fn empirical_interference_covariance(
    sim: &crate::montecarlo::Simulator,
    d0_bin: (f64, f64),
    draws: usize,
    max_attempts: usize,
    rng: &mut ChaCha20Rng,
) -> Result<EmpiricalCovariance> {
    let m = sim.scenario().surface.microstrips;
    let mut sum = DMatrix::<Complex64>::zeros(m, m);
    let mut maps = Vec::new();
    let mut attempts = 0;
    while maps.len() < draws && attempts < max_attempts {
        attempts += 1;
        let constellation = sim.sample_constellation(rng);
        let Some(d0) = constellation.serving_distance() else {
            continue;
        };
        if d0 < d0_bin.0 || d0 > d0_bin.1 {
            continue;
        }
        let state = sim.beamform(&constellation, rng)?;
        for h in &state.baseband.interferers {
            sum += h * h.adjoint();
        }
        maps.push((state.map, d0));
    }
    let qualifying = maps.len();
    if qualifying < MIN_QUALIFYING {
        return Err(Error::InsufficientSamples {
            qualifying,
            required: MIN_QUALIFYING,
        });
    }
    Ok(EmpiricalCovariance {
        mean: sum / Complex64::from(qualifying as f64),
        attempts,
        qualifying,
        maps,
    })
}

/// Relative Frobenius distance `||a - b|| / ||b||`.
pub fn relative_frobenius(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// `h^H M h` for Hermitian `M`, returned as a real number.
pub fn quadratic_form(h: &DVector<Complex64>, m: &DMatrix<Complex64>) -> f64 {
    (h.adjoint() * m * h)[(0, 0)].re
}
