//! Holographic (analog) beamforming, baseband assembly and the digital
//! combiners.
//!
//! Every element weight is Lorentzian-constrained, `beta = (j + e^{j phi}) / 2`,
//! so it lives on the circle of radius 1/2 centred at `j/2`. The analog
//! map of strip `m` is `q^T B`, where `q` holds the waveguide phases and `B`
//! the diagonal of weights; stacking the strips gives the block-diagonal
//! `M x MN` matrix `A`.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{
    strip_response, ChannelRealization, CouplingMatrix, FadingParams, LinkBudget, SurfaceConfig,
};
use crate::error::{Error, Result};
use crate::geometry::{mean_interferer_pathloss, prob_interferer_visible, ShellGeometry};
use crate::linalg::{add_outer_lower, Ldl, OpCount};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn lorentzian_coefficient(phi: f64) -> Complex64 {
    (J + Complex64::from_polar(1.0, phi)) * 0.5
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolographicPhases {
    /// `M x N`, entries in `[0, 2 pi)`.
    pub phases: DMatrix<f64>,
}

impl HolographicPhases {
    pub fn uniform(surface: &SurfaceConfig, phi: f64) -> Self {
        Self {
            phases: DMatrix::from_element(
                surface.microstrips,
                surface.elements_per_strip,
                phi.rem_euclid(TAU),
            ),
        }
    }

    pub fn coefficient(&self, m: usize, n: usize) -> Complex64 {
        lorentzian_coefficient(self.phases[(m, n)])
    }
}

/// Phases that maximize `||A f||^2` for the strip-major channel `serving`.
///
/// Each strip aligns every `q_n f_n` with `j * sum_n q_n f_n`, which makes the
/// strip output modulus `(|sum q f| + sum |f|) / 2`. Strips with an all-zero
/// channel get `pi/2`.
pub fn optimize_holographic(
    serving: &DVector<Complex64>,
    surface: &SurfaceConfig,
) -> Result<HolographicPhases> {
    let (m_count, n_count) = (surface.microstrips, surface.elements_per_strip);
    if serving.len() != m_count * n_count {
        return Err(Error::Dimension(format!(
            "serving channel has {} entries, surface has {}",
            serving.len(),
            m_count * n_count
        )));
    }
    let q = strip_response(surface);
    let mut phases = DMatrix::from_element(m_count, n_count, FRAC_PI_2);
    for m in 0..m_count {
        let z: Vec<Complex64> = (0..n_count)
            .map(|n| q[n] * serving[m * n_count + n])
            .collect();
        if z.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let s: Complex64 = z.iter().sum();
        let target = s.arg() + FRAC_PI_2;
        for n in 0..n_count {
            phases[(m, n)] = (target - z[n].arg()).rem_euclid(TAU);
        }
    }
    Ok(HolographicPhases { phases })
}

/// Strip outputs' moduli `(|sum q f| + sum |q||f|) / 2` under the optimal phases.
pub fn optimal_strip_gains(serving: &DVector<Complex64>, surface: &SurfaceConfig) -> Vec<f64> {
    let n_count = surface.elements_per_strip;
    let q = strip_response(surface);
    (0..surface.microstrips)
        .map(|m| {
            let block = || (0..n_count).map(|n| q[n] * serving[m * n_count + n]);
            let coherent = block().sum::<Complex64>().norm();
            let incoherent: f64 = block().map(|z| z.norm()).sum();
            0.5 * (coherent + incoherent)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogMap {
    /// `M x MN`, blocks `q^T B`.
    pub a: DMatrix<Complex64>,
    /// `M x MN`, blocks `q^T`.
    pub q: DMatrix<Complex64>,
}

impl AnalogMap {
    pub fn new(phases: &HolographicPhases, surface: &SurfaceConfig) -> Result<Self> {
        let (m_count, n_count) = (surface.microstrips, surface.elements_per_strip);
        if phases.phases.shape() != (m_count, n_count) {
            return Err(Error::Dimension(format!(
                "phase matrix is {:?}, surface is {m_count}x{n_count}",
                phases.phases.shape()
            )));
        }
        let qs = strip_response(surface);
        let mut a = DMatrix::zeros(m_count, m_count * n_count);
        let mut q = DMatrix::zeros(m_count, m_count * n_count);
        for m in 0..m_count {
            for n in 0..n_count {
                q[(m, m * n_count + n)] = qs[n];
                a[(m, m * n_count + n)] = qs[n] * phases.coefficient(m, n);
            }
        }
        Ok(Self { a, q })
    }

    /// Apply `A` to a stacked channel, using the block structure.
    pub fn apply(&self, f: &DVector<Complex64>) -> DVector<Complex64> {
        let m_count = self.a.nrows();
        let n_count = self.a.ncols() / m_count;
        DVector::from_fn(m_count, |m, _| {
            (0..n_count)
                .map(|n| self.a[(m, m * n_count + n)] * f[m * n_count + n])
                .sum()
        })
    }

    /// `A X A^H`.
    pub fn sandwich(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        hermitize(&self.a * x * self.a.adjoint())
    }
}

fn hermitize(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    (&m + m.adjoint()) * Complex64::from(0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasebandChannels {
    pub serving: DVector<Complex64>,
    pub interferers: Vec<DVector<Complex64>>,
    /// `sigma^2 A C C^H A^H`.
    pub noise_cov: DMatrix<Complex64>,
}

/// Baseband channels `h = A F'` for the serving satellite and every
/// realized interferer, plus the coupled noise covariance.
pub fn assemble_baseband(
    channels: &ChannelRealization,
    phases: &HolographicPhases,
    surface: &SurfaceConfig,
    coupling: &CouplingMatrix,
    budget: &LinkBudget,
) -> Result<BasebandChannels> {
    let map = AnalogMap::new(phases, surface)?;
    let gram = &coupling.entries * coupling.entries.adjoint();
    assemble_with_map(channels, &map, &gram, budget)
}

/// As [`assemble_baseband`] with a prebuilt map and Gram matrix `C C^H`.
pub fn assemble_with_map(
    channels: &ChannelRealization,
    map: &AnalogMap,
    gram: &DMatrix<Complex64>,
    budget: &LinkBudget,
) -> Result<BasebandChannels> {
    let n = map.a.ncols();
    if gram.shape() != (n, n) || channels.per_satellite.iter().any(|f| f.len() != n) {
        return Err(Error::Dimension(format!(
            "analog map expects {n}-element channels"
        )));
    }
    let Some((serving, _)) = channels.serving() else {
        return Err(Error::domain(
            "assemble_baseband",
            "realization has no serving satellite",
        ));
    };
    Ok(BasebandChannels {
        serving: map.apply(serving),
        interferers: channels
            .interferers_coupled()
            .iter()
            .map(|f| map.apply(f))
            .collect(),
        noise_cov: map.sandwich(gram) * Complex64::from(budget.noise_power_w),
    })
}

impl BasebandChannels {
    /// `sum_l h_l h_l^H`.
    pub fn interference_gram(&self) -> DMatrix<Complex64> {
        let m = self.serving.len();
        let mut g = DMatrix::zeros(m, m);
        for h in &self.interferers {
            g += h * h.adjoint();
        }
        g
    }

    /// `U = sum_l h_l h_l^H + noise_cov / rho`.
    pub fn interference_plus_noise(&self, budget: &LinkBudget) -> DMatrix<Complex64> {
        self.interference_gram() + &self.noise_cov * Complex64::from(1.0 / budget.tx_power_w)
    }
}

/// Result of an MMSE design: the combining vector and whether diagonal
/// loading was needed in the solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Combiner {
    pub vector: DVector<Complex64>,
    pub regularized: bool,
}

pub fn combiner_mrc(bb: &BasebandChannels) -> DVector<Complex64> {
    bb.serving.clone()
}

/// `(h0 h0^H + U)^-1 h0` via `LDL^H`.
pub fn combiner_mmse_full(bb: &BasebandChannels, budget: &LinkBudget) -> Result<Combiner> {
    solve_mmse(
        &bb.serving,
        bb.interference_plus_noise(budget),
        &mut OpCount::default(),
    )
}

/// `(h0 h0^H + R + noise_cov / rho)^-1 h0` via `LDL^H`.
pub fn combiner_mmse_statistical(
    bb: &BasebandChannels,
    r_stat: &DMatrix<Complex64>,
    budget: &LinkBudget,
) -> Result<Combiner> {
    combiner_mmse_statistical_counted(bb, r_stat, budget, &mut OpCount::default())
}

/// [`combiner_mmse_statistical`] with operation counting. `R` and the
/// noise term are treated as precomputed; the count covers the rank-one
/// update, the factorization and the two triangular solves.
pub fn combiner_mmse_statistical_counted(
    bb: &BasebandChannels,
    r_stat: &DMatrix<Complex64>,
    budget: &LinkBudget,
    ops: &mut OpCount,
) -> Result<Combiner> {
    let m = bb.serving.len();
    if r_stat.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "covariance is {:?}, expected {m}x{m}",
            r_stat.shape()
        )));
    }
    let u = r_stat + &bb.noise_cov * Complex64::from(1.0 / budget.tx_power_w);
    solve_mmse(&bb.serving, u, ops)
}

fn solve_mmse(
    h0: &DVector<Complex64>,
    mut u: DMatrix<Complex64>,
    ops: &mut OpCount,
) -> Result<Combiner> {
    add_outer_lower(&mut u, h0, ops);
    let f = Ldl::factor_regularized(&u, ops)?;
    Ok(Combiner {
        vector: f.solve(h0, ops),
        regularized: f.regularized(),
    })
}

/// Apply a combiner to `tau` received symbols, counting `M` products each.
pub fn combine_symbols(
    v: &DVector<Complex64>,
    symbols: &[DVector<Complex64>],
    ops: &mut OpCount,
) -> Vec<Complex64> {
    ops.multiplications += (symbols.len() * v.len()) as u64;
    symbols.iter().map(|y| v.dotc(y)).collect()
}

/// How element phases are modelled when averaging interference over the
/// constellation.
#[derive(Debug, Clone, Copy)]
pub enum PhaseStatistics<'a> {
    /// Phases i.i.d. uniform on `[0, 2 pi)`: `E[B X B^H] = (X + X o I) / 4`.
    Uniform,
    /// Phases fixed by the serving-satellite design.
    Designed(&'a AnalogMap),
}

/// Mean of `sum_l h_l h_l^H` over visible interferers given the serving
/// distance `d0`.
///
/// The scale is `kappa (omega + 2 b0) (count - 1) P_I E[D^-alpha | D > d0]`
/// with `kappa = rain * gain * (lambda / 4 pi)^2`; the matrix factor is
/// `A C C^H A^H` for designed phases or `Q (CC^H + CC^H o I) Q^H / 4` for
/// uniform phases.
#[allow(clippy::too_many_arguments)]
pub fn statistical_interference_covariance(
    shell: &ShellGeometry,
    count: usize,
    d0: f64,
    surface: &SurfaceConfig,
    coupling: &CouplingMatrix,
    budget: &LinkBudget,
    fading: &FadingParams,
    stats: PhaseStatistics<'_>,
) -> Result<DMatrix<Complex64>> {
    let gram = &coupling.entries * coupling.entries.adjoint();
    statistical_covariance_with_gram(shell, count, d0, surface, &gram, budget, fading, stats)
}

#[allow(clippy::too_many_arguments)]
pub fn statistical_covariance_with_gram(
    shell: &ShellGeometry,
    count: usize,
    d0: f64,
    surface: &SurfaceConfig,
    gram: &DMatrix<Complex64>,
    budget: &LinkBudget,
    fading: &FadingParams,
    stats: PhaseStatistics<'_>,
) -> Result<DMatrix<Complex64>> {
    let scale = interference_scale(shell, count, d0, budget, fading)?;
    let m = surface.microstrips;
    if scale == 0.0 {
        return Ok(DMatrix::zeros(m, m));
    }
    let core = match stats {
        PhaseStatistics::Designed(map) => map.sandwich(gram),
        PhaseStatistics::Uniform => {
            let q = uniform_q(surface);
            let mut x = gram.clone();
            for i in 0..x.nrows() {
                x[(i, i)] += gram[(i, i)];
            }
            hermitize(&q * x * q.adjoint()) * Complex64::from(0.25)
        }
    };
    Ok(core * Complex64::from(scale))
}

/// Scalar factor of [`statistical_interference_covariance`].
pub fn interference_scale(
    shell: &ShellGeometry,
    count: usize,
    d0: f64,
    budget: &LinkBudget,
    fading: &FadingParams,
) -> Result<f64> {
    let p_i = prob_interferer_visible(shell, d0)?;
    let pathloss = mean_interferer_pathloss(shell, d0, budget.pathloss_exponent)?;
    if count <= 1 {
        return Ok(0.0);
    }
    Ok(budget.gain_constant() * fading.mean_power() * (count - 1) as f64 * p_i * pathloss)
}

fn uniform_q(surface: &SurfaceConfig) -> DMatrix<Complex64> {
    let (m_count, n_count) = (surface.microstrips, surface.elements_per_strip);
    let qs = strip_response(surface);
    let mut q = DMatrix::zeros(m_count, m_count * n_count);
    for m in 0..m_count {
        for n in 0..n_count {
            q[(m, m * n_count + n)] = qs[n];
        }
    }
    q
}

/// `rho |v^H h0|^2 / (rho sum |v^H h_l|^2 + v^H N v)`.
pub fn evaluate_sinr(
    v: &DVector<Complex64>,
    bb: &BasebandChannels,
    budget: &LinkBudget,
) -> Result<f64> {
    check_nonzero(v)?;
    let rho = budget.tx_power_w;
    let signal = rho * v.dotc(&bb.serving).norm_sqr();
    let interference: f64 = bb
        .interferers
        .iter()
        .map(|h| v.dotc(h).norm_sqr())
        .sum::<f64>()
        * rho;
    let noise = v.dotc(&(&bb.noise_cov * v)).re;
    Ok(signal / (interference + noise))
}

/// `|v^H h0|^2 / sum |v^H h_l|^2`; infinite without interferers.
pub fn sir(v: &DVector<Complex64>, bb: &BasebandChannels) -> Result<f64> {
    check_nonzero(v)?;
    let signal = v.dotc(&bb.serving).norm_sqr();
    let interference: f64 = bb.interferers.iter().map(|h| v.dotc(h).norm_sqr()).sum();
    Ok(if interference > 0.0 {
        signal / interference
    } else {
        f64::INFINITY
    })
}

fn check_nonzero(v: &DVector<Complex64>) -> Result<()> {
    if v.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::domain("evaluate_sinr", "combining vector is zero"));
    }
    Ok(())
}

/// `p_serving * log2(1 + sinr)`.
pub fn throughput(p_serving: f64, sinr: f64) -> f64 {
    p_serving * (1.0 + sinr).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MmseScheme {
    Full,
    Statistical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complexity {
    pub multiplications: f64,
    pub divisions: f64,
}

/// Analytic multiplication and division counts of the two MMSE designs.
///
/// Full CSI: `((count - 1) p_i + 2) m^2 + tau m` products; statistical:
/// `2 m^2 + tau m`. Both need `m` divisions.
pub fn complexity_estimate(
    scheme: MmseScheme,
    m: usize,
    count: usize,
    p_i: f64,
    tau: usize,
) -> Complexity {
    let (mf, tf) = (m as f64, tau as f64);
    let interferers = match scheme {
        MmseScheme::Full => count.saturating_sub(1) as f64 * p_i,
        MmseScheme::Statistical => 0.0,
    };
    Complexity {
        multiplications: (interferers + 2.0) * mf * mf + tf * mf,
        divisions: mf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::wavelength;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn cplx(rng: &mut ChaCha20Rng) -> Complex64 {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    }

    fn surface(m: usize, n: usize) -> SurfaceConfig {
        SurfaceConfig::in_wavelengths(m, n, 0.5, 0.25, 0.25, wavelength(28e9)).unwrap()
    }

    fn budget() -> LinkBudget {
        LinkBudget::from_db(-4.324, 50.0, 2.0, 60.0, -104.0, wavelength(28e9)).unwrap()
    }

    #[test]
    fn lorentzian_values() {
        assert!((lorentzian_coefficient(FRAC_PI_2) - J).norm() < 1e-16);
        assert!(lorentzian_coefficient(3.0 * FRAC_PI_2).norm() < 1e-16);
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let phi = rng.random::<f64>() * 20.0 - 10.0;
            let b = lorentzian_coefficient(phi);
            assert!((b.norm() - ((phi - FRAC_PI_2) / 2.0).cos().abs()).abs() < 1e-15);
            assert!(((b - J * 0.5).norm() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn single_element_strip() {
        let s = surface(1, 1);
        let f = DVector::from_vec(vec![Complex64::new(0.3, -0.4)]);
        let p = optimize_holographic(&f, &s).unwrap();
        assert!((p.phases[(0, 0)] - FRAC_PI_2).abs() < 1e-15);
        let c = CouplingMatrix::identity(1);
        let real = ChannelRealization {
            per_satellite: vec![f.clone()],
            raw: vec![f.clone()],
            attenuations: vec![1.0],
            satellite_indices: vec![0],
            has_serving: true,
        };
        let bb = assemble_baseband(&real, &p, &s, &c, &budget()).unwrap();
        let expect = lorentzian_coefficient(p.phases[(0, 0)]) * f[0];
        assert!((bb.serving[0] - expect).norm() < 1e-16);
        assert!((bb.serving[0].norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_strip_defaults() {
        let s = surface(2, 3);
        let mut f = DVector::from_element(6, Complex64::new(0.0, 0.0));
        f[4] = Complex64::new(1.0, 1.0);
        let p = optimize_holographic(&f, &s).unwrap();
        for n in 0..3 {
            assert_eq!(p.phases[(0, n)], FRAC_PI_2);
        }
    }

    #[test]
    fn gain_matches_closed_form_and_bounds() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let s = surface(4, 8);
        for _ in 0..200 {
            let f = DVector::from_fn(32, |_, _| cplx(&mut rng));
            let p = optimize_holographic(&f, &s).unwrap();
            let map = AnalogMap::new(&p, &s).unwrap();
            let h = map.apply(&f);
            assert!((&map.a * &f - &h).norm() < 1e-14);
            let gains = optimal_strip_gains(&f, &s);
            let closed: f64 = gains.iter().map(|g| g * g).sum();
            assert!((h.norm_squared() - closed).abs() < 1e-10 * closed);
            let q = strip_response(&s);
            for m in 0..4 {
                let coherent = (0..8)
                    .map(|n| q[n] * f[m * 8 + n])
                    .sum::<Complex64>()
                    .norm();
                let incoherent: f64 = (0..8).map(|n| f[m * 8 + n].norm()).sum();
                assert!(h[m].norm() >= 0.5 * coherent.max(incoherent) - 1e-12);
            }
            // rotating the channel leaves the gain unchanged
            let rot = Complex64::from_polar(1.0, rng.random::<f64>() * TAU);
            let fr = &f * rot;
            let pr = optimize_holographic(&fr, &s).unwrap();
            let hr = AnalogMap::new(&pr, &s).unwrap().apply(&fr);
            assert!((hr.norm_squared() - h.norm_squared()).abs() < 1e-10 * h.norm_squared());
            for b in p.phases.iter() {
                assert!((0.0..TAU).contains(b));
            }
        }
    }

    #[test]
    fn analog_map_is_block_diagonal() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let s = surface(3, 4);
        let p = HolographicPhases {
            phases: DMatrix::from_fn(3, 4, |_, _| rng.random::<f64>() * TAU),
        };
        let map = AnalogMap::new(&p, &s).unwrap();
        for m in 0..3 {
            for i in 0..12 {
                if i / 4 != m {
                    assert_eq!(map.a[(m, i)], Complex64::new(0.0, 0.0));
                    assert_eq!(map.q[(m, i)], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    fn random_bb(rng: &mut ChaCha20Rng, m: usize, interferers: usize) -> BasebandChannels {
        let g = DMatrix::from_fn(m, m, |_, _| cplx(rng));
        BasebandChannels {
            serving: DVector::from_fn(m, |_, _| cplx(rng)),
            interferers: (0..interferers)
                .map(|_| DVector::from_fn(m, |_, _| cplx(rng)))
                .collect(),
            noise_cov: &g * g.adjoint() * Complex64::from(1e-3)
                + DMatrix::identity(m, m) * Complex64::from(1e-4),
        }
    }

    fn unit_budget() -> LinkBudget {
        LinkBudget::new(1.0, 1.0, 2.0, 10.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn mmse_identity_and_dominance() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let b = unit_budget();
        for k in 0..300 {
            let bb = random_bb(&mut rng, 2 + k % 4, k % 6);
            let vf = combiner_mmse_full(&bb, &b).unwrap().vector;
            let g = evaluate_sinr(&vf, &bb, &b).unwrap();
            let u = bb.interference_gram() * Complex64::from(b.tx_power_w) + &bb.noise_cov;
            let x = u.clone().lu().solve(&bb.serving).unwrap();
            let ident = b.tx_power_w * bb.serving.dotc(&x).re;
            assert!(((g - ident) / ident).abs() < 1e-10);
            let mrc = evaluate_sinr(&combiner_mrc(&bb), &bb, &b).unwrap();
            assert!(g >= mrc * (1.0 - 1e-12));
            for _ in 0..20 {
                let v = DVector::from_fn(bb.serving.len(), |_, _| cplx(&mut rng));
                assert!(g >= evaluate_sinr(&v, &bb, &b).unwrap() * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn white_noise_matched_filter() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let b = unit_budget();
        let mut bb = random_bb(&mut rng, 4, 0);
        bb.noise_cov = DMatrix::identity(4, 4) * Complex64::from(0.3);
        let vf = combiner_mmse_full(&bb, &b).unwrap().vector;
        let cos = vf.dotc(&bb.serving).norm() / (vf.norm() * bb.serving.norm());
        assert!((cos - 1.0).abs() < 1e-10);
        let mrc = evaluate_sinr(&combiner_mrc(&bb), &bb, &b).unwrap();
        let full = evaluate_sinr(&vf, &bb, &b).unwrap();
        assert!(((mrc - full) / full).abs() < 1e-9);
        let expect = b.tx_power_w * bb.serving.norm_squared() / 0.3;
        assert!(((mrc - expect) / expect).abs() < 1e-12);
        let vs = combiner_mmse_statistical(&bb, &DMatrix::zeros(4, 4), &b)
            .unwrap()
            .vector;
        assert!(
            (vs.dotc(&bb.serving).norm() / (vs.norm() * bb.serving.norm()) - 1.0).abs() < 1e-10
        );
    }

    #[test]
    fn statistical_with_exact_gram_is_full() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let b = unit_budget();
        let bb = random_bb(&mut rng, 4, 5);
        let vf = combiner_mmse_full(&bb, &b).unwrap().vector;
        let vs = combiner_mmse_statistical(&bb, &bb.interference_gram(), &b)
            .unwrap()
            .vector;
        assert!((&vf - &vs).norm() < 1e-10 * vf.norm());
    }

    #[test]
    fn sinr_properties() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let b = unit_budget();
        let bb = random_bb(&mut rng, 3, 2);
        let v = DVector::from_fn(3, |_, _| cplx(&mut rng));
        let g = evaluate_sinr(&v, &bb, &b).unwrap();
        for _ in 0..1000 {
            let c = cplx(&mut rng) * 10f64.powf(rng.random::<f64>() * 8.0 - 4.0);
            assert!(((evaluate_sinr(&(&v * c), &bb, &b).unwrap() - g) / g).abs() < 1e-10);
        }
        let mut orth = DVector::from_element(3, Complex64::new(0.0, 0.0));
        orth[0] = -bb.serving[1].conj();
        orth[1] = bb.serving[0].conj();
        assert!(evaluate_sinr(&orth, &bb, &b).unwrap() < 1e-25);
        assert!(evaluate_sinr(&DVector::zeros(3), &bb, &b).is_err());
    }

    #[test]
    fn throughput_values() {
        assert_eq!(throughput(1.0, 0.0), 0.0);
        assert_eq!(throughput(1.0, 1.0), 1.0);
        assert_eq!(throughput(0.5, 3.0), 1.0);
    }

    #[test]
    fn complexity_formulas() {
        let s = complexity_estimate(MmseScheme::Statistical, 4, 721, 0.0746, 0);
        assert_eq!((s.multiplications, s.divisions), (32.0, 4.0));
        let f = complexity_estimate(MmseScheme::Full, 4, 721, 0.0746, 100);
        assert!((f.multiplications - 1291.4).abs() < 0.1 && f.divisions == 4.0);
        let one = complexity_estimate(MmseScheme::Full, 5, 1, 0.3, 7);
        assert_eq!(
            one,
            complexity_estimate(MmseScheme::Statistical, 5, 1, 0.3, 7)
        );
    }

    #[test]
    fn uniform_phase_average_matches_formula() {
        // Monte-Carlo average of A X A^H over i.i.d. uniform phases.
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let s = surface(2, 3);
        let g = DMatrix::from_fn(6, 6, |_, _| cplx(&mut rng));
        let x = &g * g.adjoint();
        let mut acc = DMatrix::<Complex64>::zeros(2, 2);
        let trials = 40_000;
        for _ in 0..trials {
            let p = HolographicPhases {
                phases: DMatrix::from_fn(2, 3, |_, _| rng.random::<f64>() * TAU),
            };
            acc += AnalogMap::new(&p, &s).unwrap().sandwich(&x);
        }
        acc /= Complex64::from(trials as f64);
        let q = uniform_q(&s);
        let mut xd = x.clone();
        for i in 0..6 {
            xd[(i, i)] += x[(i, i)];
        }
        let formula = &q * xd * q.adjoint() * Complex64::from(0.25);
        assert!((acc - &formula).norm() < 0.02 * formula.norm());
    }
}
