//! Special functions used by the coupling and fading models.
//!
//! Accuracy is controlled by [`AccuracySpec`]. The sine and cosine integrals
//! use their power series below [`CISI_SERIES_LIMIT`] and the continued
//! fraction of `E1(ix)` above it; both branches reach an absolute error near
//! machine precision on the whole positive axis. The lower incomplete gamma
//! function uses the usual series / continued-fraction split at `x = s + 1`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this argument Ci/Si are summed from their Maclaurin series.
pub const CISI_SERIES_LIMIT: f64 = 6.0;

/// Smallest argument for which [`cosine_integral`] returns a value.
pub const CI_MIN_ARG: f64 = 1e-300;

const FPMIN: f64 = 1e-300;

/// Truncation controls for series and continued fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracySpec {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for AccuracySpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_terms: 500,
        }
    }
}

impl AccuracySpec {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(Error::domain("AccuracySpec", "abs_tol must be > 0"));
        }
        if max_terms == 0 {
            return Err(Error::domain("AccuracySpec", "max_terms must be >= 1"));
        }
        Ok(Self { abs_tol, max_terms })
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Rising factorial `(v)_i = v (v+1) ... (v+i-1)`, with `(v)_0 = 1`.
pub fn pochhammer(v: f64, i: u32) -> f64 {
    (0..i).fold(1.0, |acc, k| acc * (v + k as f64))
}

/// Sine integral `Si(x)`, odd in `x`.
pub fn sine_integral(x: f64) -> f64 {
    sine_integral_with(x, &AccuracySpec::default())
}

pub fn sine_integral_with(x: f64, acc: &AccuracySpec) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let t = x.abs();
    let si = if t < CISI_SERIES_LIMIT {
        si_series(t, acc)
    } else {
        cisi_continued_fraction(t, acc).1
    };
    si.copysign(x)
}

/// Cosine integral `Ci(x) = gamma + ln x + int_0^x (cos t - 1)/t dt`.
///
/// Defined for `x >= 1e-300`; smaller or non-positive arguments are a domain
/// error because of the logarithmic singularity at the origin.
pub fn cosine_integral(x: f64) -> Result<f64> {
    cosine_integral_with(x, &AccuracySpec::default())
}

pub fn cosine_integral_with(x: f64, acc: &AccuracySpec) -> Result<f64> {
    if !(x >= CI_MIN_ARG) || !x.is_finite() {
        return Err(Error::domain(
            "cosine_integral",
            format!("argument {x:e} outside [1e-300, inf)"),
        ));
    }
    Ok(if x < CISI_SERIES_LIMIT {
        ci_series(x, acc)
    } else {
        cisi_continued_fraction(x, acc).0
    })
}

fn si_series(t: f64, acc: &AccuracySpec) -> f64 {
    let t2 = t * t;
    // p_k = (-1)^k t^(2k+1) / (2k+1)!
    let mut p = t;
    let mut sum = t;
    for k in 1..acc.max_terms {
        let kf = k as f64;
        p *= -t2 / ((2.0 * kf) * (2.0 * kf + 1.0));
        let term = p / (2.0 * kf + 1.0);
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
    }
    sum
}

fn ci_series(t: f64, acc: &AccuracySpec) -> f64 {
    let t2 = t * t;
    // p_k = (-1)^k t^(2k) / (2k)!
    let mut p = 1.0;
    let mut sum = 0.0;
    for k in 1..acc.max_terms {
        let kf = k as f64;
        p *= -t2 / ((2.0 * kf - 1.0) * (2.0 * kf));
        let term = p / (2.0 * kf);
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs().max(FPMIN) {
            break;
        }
    }
    EULER_GAMMA + t.ln() + sum
}

/// Modified Lentz evaluation of `E1(it)`; returns `(Ci(t), Si(t))`.
fn cisi_continued_fraction(t: f64, acc: &AccuracySpec) -> (f64, f64) {
    let mut b = Complex64::new(1.0, t);
    let mut c = Complex64::new(1.0 / FPMIN, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..=acc.max_terms.max(2) {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < f64::EPSILON {
            break;
        }
    }
    h *= Complex64::new(t.cos(), -t.sin());
    (-h.re, FRAC_PI_2 + h.im)
}

/// Regularized lower incomplete gamma `P(s, x)`.
pub fn regularized_lower_gamma(s: f64, x: f64) -> Result<f64> {
    regularized_lower_gamma_with(s, x, &AccuracySpec::default())
}

pub fn regularized_lower_gamma_with(s: f64, x: f64, acc: &AccuracySpec) -> Result<f64> {
    if !(s > 0.0) || !(x >= 0.0) {
        return Err(Error::domain(
            "lower_incomplete_gamma",
            format!("need s > 0 and x >= 0, got s = {s}, x = {x}"),
        ));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let log_prefactor = -x + s * x.ln() - ln_gamma(s);
    if x < s + 1.0 {
        let mut ap = s;
        let mut del = 1.0 / s;
        let mut sum = del;
        let mut converged = false;
        for _ in 0..acc.max_terms {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * f64::EPSILON {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                op: "lower_incomplete_gamma series",
                evaluations: acc.max_terms,
                estimate: del.abs(),
            });
        }
        Ok((sum * log_prefactor.exp()).clamp(0.0, 1.0))
    } else {
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        let mut converged = false;
        let mut last = 0.0;
        for i in 1..=acc.max_terms {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < FPMIN {
                d = FPMIN;
            }
            c = b + an / c;
            if c.abs() < FPMIN {
                c = FPMIN;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            last = (del - 1.0).abs();
            if last < f64::EPSILON {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                op: "lower_incomplete_gamma continued fraction",
                evaluations: acc.max_terms,
                estimate: last,
            });
        }
        Ok((1.0 - log_prefactor.exp() * h).clamp(0.0, 1.0))
    }
}

/// Lower incomplete gamma `int_0^x t^(s-1) e^(-t) dt` (not regularized).
pub fn lower_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    Ok(regularized_lower_gamma(s, x)? * gamma(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Composite Simpson on a fine grid; independent of the series used above.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    fn sinc(t: f64) -> f64 {
        if t == 0.0 {
            1.0
        } else {
            t.sin() / t
        }
    }

    fn cosm1_over_t(t: f64) -> f64 {
        if t.abs() < 1e-4 {
            -t / 2.0 + t.powi(3) / 24.0
        } else {
            (t.cos() - 1.0) / t
        }
    }

    #[test]
    fn reference_values() {
        assert!((sine_integral(1.0) - 0.946_083_070_4).abs() < 1e-10);
        assert!((cosine_integral(1.0).unwrap() - 0.337_403_922_9).abs() < 1e-10);
        assert!((lower_incomplete_gamma(2.0, 1.0).unwrap() - 0.264_241_117_7).abs() < 1e-10);
    }

    #[test]
    fn si_is_odd_and_zero_at_origin() {
        assert_eq!(sine_integral(0.0), 0.0);
        for &x in &[0.1, 1.0, 5.9, 6.1, 40.0, 1e4] {
            assert_eq!(sine_integral(-x), -sine_integral(x));
        }
    }

    #[test]
    fn ci_domain() {
        assert!(cosine_integral(0.0).is_err());
        assert!(cosine_integral(-1.0).is_err());
        assert!(cosine_integral(1e-301).is_err());
        let v = cosine_integral(1e-300).unwrap();
        assert!(v.is_finite() && v < -600.0);
    }

    #[test]
    fn cisi_branches_agree_at_switch() {
        let acc = AccuracySpec::default();
        for &x in &[5.5, 6.0, 6.5, 8.0] {
            let (ci_cf, si_cf) = cisi_continued_fraction(x, &acc);
            assert!((ci_cf - ci_series(x, &acc)).abs() < 1e-12, "Ci at {x}");
            assert!((si_cf - si_series(x, &acc)).abs() < 1e-12, "Si at {x}");
        }
    }

    #[test]
    fn cisi_match_quadrature_on_log_grid() {
        // log-spaced grid over [1e-3, 1e3]
        for k in 0..=24 {
            let x = 10f64.powf(-3.0 + 6.0 * k as f64 / 24.0);
            let n = ((x * 400.0) as usize).clamp(2_000, 400_000);
            let si_ref = simpson(sinc, 0.0, x, n);
            let ci_ref = EULER_GAMMA + x.ln() + simpson(cosm1_over_t, 0.0, x, n);
            assert!((sine_integral(x) - si_ref).abs() < 1e-11, "Si({x})");
            assert!(
                (cosine_integral(x).unwrap() - ci_ref).abs() < 1e-11,
                "Ci({x})"
            );
        }
    }

    #[test]
    fn ci_at_twenty_matches_quadrature() {
        let ci_ref = EULER_GAMMA + 20f64.ln() + simpson(cosm1_over_t, 0.0, 20.0, 200_000);
        assert!((cosine_integral(20.0).unwrap() - ci_ref).abs() < 1e-12);
    }

    #[test]
    fn incomplete_gamma_properties() {
        assert_eq!(lower_incomplete_gamma(2.5, 0.0).unwrap(), 0.0);
        for &x in &[0.1, 1.0, 3.0, 10.0] {
            let v = lower_incomplete_gamma(1.0, x).unwrap();
            assert!((v - (1.0 - (-x).exp())).abs() < 1e-14);
        }
        for &s in &[0.5, 1.0, 3.0, 7.5, 20.0] {
            let mut prev = 0.0;
            for i in 0..200 {
                let x = i as f64 * 0.25 * s;
                let v = lower_incomplete_gamma(s, x).unwrap();
                assert!(v >= prev - 1e-15);
                prev = v;
            }
            let tail = lower_incomplete_gamma(s, 50.0 * s).unwrap();
            assert!(((tail - gamma(s)) / gamma(s)).abs() < 1e-10);
        }
        assert!(lower_incomplete_gamma(0.0, 1.0).is_err());
        assert!(lower_incomplete_gamma(1.0, -1.0).is_err());
    }

    #[test]
    fn incomplete_gamma_matches_quadrature() {
        for &(s, x) in &[(2.0f64, 1.0f64), (3.5, 2.0), (1.5, 6.0), (4.0, 9.0)] {
            let s: f64 = s;
            // t = u^2 removes the sqrt-type endpoint behaviour at s = 1.5
            let r = simpson(
                |u| 2.0 * u.powf(2.0 * s - 1.0) * (-u * u).exp(),
                0.0,
                x.sqrt(),
                20_000,
            );
            assert!((lower_incomplete_gamma(s, x).unwrap() - r).abs() < 1e-10);
        }
    }

    #[test]
    fn pochhammer_values() {
        assert_eq!(pochhammer(7.3, 0), 1.0);
        assert_eq!(pochhammer(3.0, 2), 12.0);
        assert_eq!(pochhammer(0.5, 3), 1.875);
        for v in 1..6 {
            for i in 0..10 {
                let v = v as f64;
                assert_eq!(pochhammer(v, i + 1), pochhammer(v, i) * (v + i as f64));
            }
        }
    }

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12);
            fact *= n as f64;
        }
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
    }
}
