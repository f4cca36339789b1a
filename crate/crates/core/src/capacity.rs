//! Ergodic capacity of the hybrid link and of the direct power-line baseline.
//!
//! The analytic route writes the end-to-end SNR as `K / (L + M)` with
//! `K = P_s e^{-2αd1}|h_P|²`, `L = σ_r²` and `M = σ_d² / (P_r G² d2^{-m}|h_w|²)`,
//! and uses
//!
//! ```text
//! E[ln(1 + u/v)] = ∫₀^∞ (1 − M_u(z)) M_v(z) / z dz,     M_X(z) = E[e^{-zX}]
//! ```
//!
//! for independent non-negative `u`, `v`. `M_K` is a Gauss-Hermite sum over the
//! log-normal fading; `M_{L+M}` has the closed form
//! `e^{-zσ_r²} · 2√c · K₁(2√c)` with `c = zσ_d² / (P_r G² d2^{-m})`, which is
//! `E[e^{-c/X}]` for `X ~ Exp(1)` shifted by the constant `L`. The Bessel
//! function here is of the second kind: it is the only choice that gives
//! `M(0) = 1` and a non-increasing transform.
//!
//! Capacities are in bits/s/Hz. The hybrid link always carries the half-duplex
//! factor ½; the direct link carries it only on request.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{self, HybridSystem, PlcLink};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::specfun::{bessel_k1_scaled, integrate_semi_infinite, QuadratureRule};

pub const DEFAULT_REL_TOL: f64 = 1e-8;
pub const DEFAULT_QUAD_ORDER: usize = 32;
pub const DEFAULT_MC_SAMPLES: u64 = 1_000_000;

/// Samples drawn from one random substream.
const BLOCK_SAMPLES: u64 = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Analytic,
    MonteCarlo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityEstimate<T> {
    pub bits_per_s_per_hz: T,
    pub method: Method,
    /// Standard error of the mean; zero for analytic results.
    pub std_error: T,
    /// Monte Carlo sample count; zero for analytic results.
    pub samples: u64,
}

impl<T: Real> CapacityEstimate<T> {
    pub fn analytic(bits: T) -> Self {
        CapacityEstimate {
            bits_per_s_per_hz: bits,
            method: Method::Analytic,
            std_error: T::zero(),
            samples: 0,
        }
    }

    pub fn value(&self) -> T {
        self.bits_per_s_per_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub n_samples: u64,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool. Results do not depend on it.
    pub workers: usize,
}

impl McSettings {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        McSettings {
            n_samples,
            seed,
            workers: 0,
        }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        McSettings { workers, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::param("n_samples", "must be at least 1"));
        }
        Ok(())
    }
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings::new(DEFAULT_MC_SAMPLES, 0)
    }
}

/// Sign of the relay-noise exponent in `M_{L+M}`. Only `Decaying` is a valid
/// transform; `Growing` reproduces a sign error and exists so that validation
/// tooling can be checked against a known-bad model.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RelayNoiseExponent {
    #[default]
    Decaying,
    Growing,
}

/// Gauss-Hermite form of `M_K`, with the per-node constants precomputed:
/// `M_K(z) = Σ c_n exp(-z a_n)`, `a_n = P_s e^{-2αd1} 10^{(2√2 σ x_n + 2μ)/10}`,
/// `c_n = w_n / √π`.
#[derive(Debug, Clone)]
pub struct FirstHopMgf<T> {
    terms: Vec<(T, T)>,
}

impl<T: Real> FirstHopMgf<T> {
    pub fn new(sys: &HybridSystem<T>, rule: &QuadratureRule<T>) -> Self {
        Self::for_scale(sys.first_hop_scale(), &sys.plc, rule)
    }

    fn for_scale(scale: T, plc: &PlcLink<T>, rule: &QuadratureRule<T>) -> Self {
        let (mean_db, std_db) = plc.power_gain_db_params();
        let inv_sqrt_pi = T::one() / T::PI().sqrt();
        let terms = rule
            .iter()
            .map(|(x, w)| {
                let db = T::SQRT_2() * std_db * x + mean_db;
                (w * inv_sqrt_pi, scale * channel::db_to_linear(db))
            })
            .collect();
        FirstHopMgf { terms }
    }

    pub fn eval(&self, z: T) -> T {
        self.terms.iter().map(|&(c, a)| c * (-z * a).exp()).sum()
    }

    /// `1 − M_K(z)` without cancellation at small `z`.
    pub fn complement(&self, z: T) -> T {
        self.terms
            .iter()
            .map(|&(c, a)| -c * (-z * a).exp_m1())
            .sum()
    }
}

/// Closed form of `M_{L+M}`.
#[derive(Debug, Clone, Copy)]
pub struct SecondHopMgf<T> {
    relay_noise: T,
    /// `σ_d² / (P_r G² d2^{-m})`
    ratio: T,
    sign: RelayNoiseExponent,
}

impl<T: Real> SecondHopMgf<T> {
    pub fn new(sys: &HybridSystem<T>) -> Result<Self> {
        Self::with_sign(sys, RelayNoiseExponent::Decaying)
    }

    #[doc(hidden)]
    pub fn with_sign(sys: &HybridSystem<T>, sign: RelayNoiseExponent) -> Result<Self> {
        if sys.relay_is_degenerate() {
            return Err(Error::DegenerateRelay);
        }
        Ok(SecondHopMgf {
            relay_noise: sys.plc.noise_var,
            ratio: sys.wireless.noise_var / sys.second_hop_scale(),
            sign,
        })
    }

    pub fn eval(&self, z: T) -> T {
        if z == T::zero() {
            return T::one();
        }
        let noise_exp = match self.sign {
            RelayNoiseExponent::Decaying => -z * self.relay_noise,
            RelayNoiseExponent::Growing => z * self.relay_noise,
        };
        let s = T::lit(2.0) * (z * self.ratio).sqrt();
        if s == T::zero() {
            return noise_exp.exp();
        }
        // s·K₁(s) = s · e^{-s} · (e^s K₁(s)), keeping the exponentials together
        let scaled = bessel_k1_scaled(s).expect("s > 0");
        s * scaled * (noise_exp - s).exp()
    }
}

/// `M_K(z)` for the first-hop signal power `K = P_s e^{-2αd1}|h_P|²`.
pub fn mgf_k<T: Real>(z: T, sys: &HybridSystem<T>, rule: &QuadratureRule<T>) -> T {
    FirstHopMgf::new(sys, rule).eval(z)
}

/// `M_{L+M}(z)`; fails with [`Error::DegenerateRelay`] when `G = 0` or `P_r = 0`.
pub fn mgf_lm<T: Real>(z: T, sys: &HybridSystem<T>) -> Result<T> {
    Ok(SecondHopMgf::new(sys)?.eval(z))
}

/// `E[ln(1 + u/v)]` in nats from `1 − M_u` and `M_v`.
pub fn log_ratio_expectation<T, U, V>(one_minus_mgf_u: U, mgf_v: V, rel_tol: T) -> Result<T>
where
    T: Real,
    U: Fn(T) -> T,
    V: Fn(T) -> T,
{
    integrate_semi_infinite(
        |z| {
            let c = one_minus_mgf_u(z);
            if c == T::zero() {
                T::zero()
            } else {
                c * mgf_v(z) / z
            }
        },
        rel_tol,
    )
}

pub fn analytic_hybrid_capacity<T: Real>(
    sys: &HybridSystem<T>,
    rule: &QuadratureRule<T>,
    rel_tol: T,
) -> Result<CapacityEstimate<T>> {
    analytic_hybrid_capacity_with(sys, rule, rel_tol, RelayNoiseExponent::Decaying)
}

#[doc(hidden)]
pub fn analytic_hybrid_capacity_with<T: Real>(
    sys: &HybridSystem<T>,
    rule: &QuadratureRule<T>,
    rel_tol: T,
    sign: RelayNoiseExponent,
) -> Result<CapacityEstimate<T>> {
    sys.validate()?;
    if sys.src_power_w == T::zero() || sys.relay_is_degenerate() {
        return Ok(CapacityEstimate::analytic(T::zero()));
    }
    let first = FirstHopMgf::new(sys, rule);
    let second = SecondHopMgf::with_sign(sys, sign)?;
    let nats = log_ratio_expectation(|z| first.complement(z), |z| second.eval(z), rel_tol)?;
    // ½ for the two transmission phases, 1/ln 2 for bits
    Ok(CapacityEstimate::analytic(nats / (T::lit(2.0) * T::LN_2())))
}

/// Direct power-line capacity by Gauss-Hermite quadrature over the dB fading:
///
/// ```text
/// C = (1/√π) Σ w_n log2(1 + exp((√8 σ x_n + 2μ + ζ ln a) / ζ)),   ζ = 10 / ln 10
/// ```
///
/// with `a = P_s e^{-2αd} / σ_d²`; halved when `half_duplex` is set.
pub fn analytic_plc_capacity<T: Real>(
    link: &PlcLink<T>,
    src_power_w: T,
    rule: &QuadratureRule<T>,
    half_duplex: bool,
) -> Result<CapacityEstimate<T>> {
    link.validate()?;
    if !(src_power_w > T::zero()) {
        return Ok(CapacityEstimate::analytic(T::zero()));
    }
    let zeta = T::lit(10.0) / T::LN_10();
    let snr_scale = src_power_w * link.power_gain() / link.noise_var;
    let offset = T::lit(2.0) * link.fading_mu_db + zeta * snr_scale.ln();
    let spread = T::lit(8.0).sqrt() * link.fading_sigma_db;
    let sum = rule.integrate(|x| log2_1p(((spread * x + offset) / zeta).exp()));
    let mut bits = sum / T::PI().sqrt();
    if half_duplex {
        bits = bits * T::lit(0.5);
    }
    Ok(CapacityEstimate::analytic(bits))
}

/// `½ E[log2(1 + P_s e^{-2αd1}|h_P|²/σ_r²)]`: the hybrid capacity when the
/// second hop is noiseless, i.e. the limit `G → ∞`.
pub fn relay_limited_ceiling<T: Real>(
    sys: &HybridSystem<T>,
    rule: &QuadratureRule<T>,
) -> Result<T> {
    let link = sys.plc;
    Ok(analytic_plc_capacity(&link, sys.src_power_w, rule, true)?.value())
}

pub fn mc_hybrid_capacity<T: Real>(
    sys: &HybridSystem<T>,
    mc: &McSettings,
) -> Result<CapacityEstimate<T>> {
    sys.validate()?;
    mc.validate()?;
    let half_bits = T::lit(0.5);
    let sys = *sys;
    monte_carlo(mc, move |rng| {
        let s = channel::sample_channel(&sys.plc, rng);
        half_bits * log2_1p(channel::hybrid_snr(&s, &sys))
    })
}

pub fn mc_plc_capacity<T: Real>(
    link: &PlcLink<T>,
    src_power_w: T,
    mc: &McSettings,
    half_duplex: bool,
) -> Result<CapacityEstimate<T>> {
    link.validate()?;
    mc.validate()?;
    if !(src_power_w >= T::zero()) {
        return Err(Error::param(
            "src_power_w",
            format!("{src_power_w} is not >= 0"),
        ));
    }
    let factor = if half_duplex { T::lit(0.5) } else { T::one() };
    let link = *link;
    monte_carlo(mc, move |rng| {
        let hp = channel::sample_plc_gain(&link, rng);
        factor * log2_1p(channel::plc_only_snr(hp, &link, src_power_w))
    })
}

fn log2_1p<T: Real>(x: T) -> T {
    x.ln_1p() / T::LN_2()
}

/// Running mean and sum of squared deviations of one block of samples.
#[derive(Debug, Clone, Copy)]
struct Moments<T> {
    n: u64,
    mean: T,
    m2: T,
}

impl<T: Real> Moments<T> {
    fn empty() -> Self {
        Moments {
            n: 0,
            mean: T::zero(),
            m2: T::zero(),
        }
    }

    fn push(&mut self, x: T) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean = self.mean + delta / T::lit(self.n as f64);
        self.m2 = self.m2 + delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if other.n == 0 {
            return self;
        }
        if self.n == 0 {
            return other;
        }
        let n = self.n + other.n;
        let nf = T::lit(n as f64);
        let na = T::lit(self.n as f64);
        let nb = T::lit(other.n as f64);
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * nb / nf,
            m2: self.m2 + other.m2 + delta * delta * na * nb / nf,
        }
    }
}

/// Mean and standard error of `draw` over `mc.n_samples` draws.
///
/// Samples are split into fixed-size blocks; block `b` draws from ChaCha8
/// stream `b` of `mc.seed`, and block results are merged in block order, so
/// the estimate is bit-identical for any number of worker threads.
fn monte_carlo<T, F>(mc: &McSettings, draw: F) -> Result<CapacityEstimate<T>>
where
    T: Real,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let n = mc.n_samples;
    let blocks = n.div_ceil(BLOCK_SAMPLES);
    let run_block = |b: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
        rng.set_stream(b);
        let len = BLOCK_SAMPLES.min(n - b * BLOCK_SAMPLES);
        let mut m = Moments::empty();
        for _ in 0..len {
            m.push(draw(&mut rng));
        }
        m
    };
    let per_block: Vec<Moments<T>> = if mc.workers == 0 {
        (0..blocks).into_par_iter().map(run_block).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(mc.workers)
            .build()
            .map_err(|e| Error::param("workers", e.to_string()))?;
        pool.install(|| (0..blocks).into_par_iter().map(run_block).collect())
    };
    let total = per_block.into_iter().fold(Moments::empty(), Moments::merge);
    let std_error = if total.n > 1 {
        let var = total.m2 / T::lit((total.n - 1) as f64);
        (var / T::lit(total.n as f64)).sqrt()
    } else {
        T::zero()
    };
    Ok(CapacityEstimate {
        bits_per_s_per_hz: total.mean,
        method: Method::MonteCarlo,
        std_error,
        samples: total.n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gauss_hermite;

    fn rule() -> QuadratureRule<f64> {
        gauss_hermite(32).unwrap()
    }

    #[test]
    fn mgfs_at_origin() {
        let sys = HybridSystem::<f64>::reference();
        assert!((mgf_k(0.0, &sys, &rule()) - 1.0).abs() < 1e-12);
        assert_eq!(mgf_lm(0.0, &sys).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_lognormal_mgf() {
        let mut sys = HybridSystem::<f64>::reference();
        sys.plc.fading_sigma_db = 0.0;
        for z in [0.01, 0.5, 3.0] {
            let want = (-z * sys.first_hop_scale()).exp();
            assert!((mgf_k(z, &sys, &rule()) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn second_hop_mgf_matches_bessel_value() {
        // σ_r² = 0 and c = 0.25 gives 2·0.5·K₁(1)
        let mut sys = HybridSystem::<f64>::reference();
        sys.plc.noise_var = 1e-300;
        let z = 0.25 * sys.second_hop_scale() / sys.wireless.noise_var;
        let v = mgf_lm(z, &sys).unwrap();
        assert!((v - 0.601_907_230_197_234_6).abs() < 1e-12);
    }

    #[test]
    fn degenerate_relay() {
        let mut sys = HybridSystem::<f64>::reference();
        sys.relay_gain = 0.0;
        assert!(matches!(mgf_lm(1.0, &sys), Err(Error::DegenerateRelay)));
        let c = analytic_hybrid_capacity(&sys, &rule(), 1e-8).unwrap();
        assert_eq!(c.value(), 0.0);
        sys.relay_gain = 1.0;
        sys.relay_power_w = 0.0;
        assert_eq!(
            analytic_hybrid_capacity(&sys, &rule(), 1e-8)
                .unwrap()
                .value(),
            0.0
        );
    }

    #[test]
    fn mgfs_bounded_and_nonincreasing() {
        let mut sys = HybridSystem::<f64>::reference();
        sys.relay_gain = 3.0;
        let first = FirstHopMgf::new(&sys, &rule());
        let second = SecondHopMgf::new(&sys).unwrap();
        let (mut pk, mut pl) = (1.0 + 1e-15, 1.0);
        for i in 0..=900 {
            let z = 1e-6 * 10f64.powf(i as f64 / 100.0);
            let k = first.eval(z);
            let l = second.eval(z);
            assert!(k > 0.0 && k <= 1.0 + 1e-15 && k <= pk + 1e-15, "z={z}");
            assert!(l > 0.0 && l <= 1.0 && l <= pl, "z={z}");
            assert!((first.complement(z) - (1.0 - k)).abs() < 1e-12);
            pk = k;
            pl = l;
        }
    }

    #[test]
    fn zero_source_power() {
        let mut sys = HybridSystem::<f64>::reference();
        sys.src_power_w = 0.0;
        assert_eq!(
            analytic_hybrid_capacity(&sys, &rule(), 1e-8)
                .unwrap()
                .value(),
            0.0
        );
        let mc = mc_hybrid_capacity(&sys, &McSettings::new(10_000, 1)).unwrap();
        assert_eq!(mc.value(), 0.0);
        assert_eq!(mc.std_error, 0.0);
        assert_eq!(
            analytic_plc_capacity(&sys.plc, 0.0, &rule(), false)
                .unwrap()
                .value(),
            0.0
        );
        assert_eq!(
            mc_plc_capacity(&sys.plc, 0.0, &McSettings::new(1000, 1), false)
                .unwrap()
                .value(),
            0.0
        );
    }

    #[test]
    fn quadrature_order_converged() {
        let sys = HybridSystem::<f64>::reference();
        let a = analytic_hybrid_capacity(&sys, &rule(), 1e-8)
            .unwrap()
            .value();
        let b = analytic_hybrid_capacity(&sys, &gauss_hermite(64).unwrap(), 1e-8)
            .unwrap()
            .value();
        assert!((a - b).abs() < 1e-7 * a, "{a} vs {b}");
    }

    #[test]
    fn plc_awgn_collapse() {
        let mut link = PlcLink::<f64>::reference(40.0);
        link.fading_sigma_db = 0.0;
        link.fading_mu_db = -1.5;
        let a = src_snr(&link, 2.0) * 10f64.powf(-0.3);
        let want = (1.0 + a).log2();
        let got = analytic_plc_capacity(&link, 2.0, &rule(), false)
            .unwrap()
            .value();
        assert!((got - want).abs() < 1e-10);
        let half = analytic_plc_capacity(&link, 2.0, &rule(), true)
            .unwrap()
            .value();
        assert!((half - want / 2.0).abs() < 1e-10);
        let mc = mc_plc_capacity(&link, 2.0, &McSettings::new(5000, 9), false).unwrap();
        assert!((mc.value() - want).abs() < 1e-12);
        assert_eq!(mc.std_error, 0.0);
    }

    fn src_snr(link: &PlcLink<f64>, ps: f64) -> f64 {
        ps * link.power_gain() / link.noise_var
    }

    #[test]
    fn hamdi_lemma_toy() {
        // u ~ Exp(1): 1 − M_u = z/(1+z); v ≡ 1: M_v = e^{-z}
        let lemma = log_ratio_expectation(|z: f64| z / (1.0 + z), |z| (-z).exp(), 1e-10).unwrap();
        let direct = integrate_semi_infinite(|u: f64| u.ln_1p() * (-u).exp(), 1e-10).unwrap();
        assert!((lemma - direct).abs() < 1e-6);
        // e·E1(1)
        assert!((direct - 0.596_347_362_323_194_1).abs() < 1e-9);
    }

    #[test]
    fn mc_is_worker_independent() {
        let sys = HybridSystem::<f64>::reference();
        let base = McSettings::new(200_000, 77);
        let one = mc_hybrid_capacity(&sys, &base.with_workers(1)).unwrap();
        let eight = mc_hybrid_capacity(&sys, &base.with_workers(8)).unwrap();
        let pool = mc_hybrid_capacity(&sys, &base).unwrap();
        assert_eq!(one.value().to_bits(), eight.value().to_bits());
        assert_eq!(one.std_error.to_bits(), eight.std_error.to_bits());
        assert_eq!(one.value().to_bits(), pool.value().to_bits());
        assert_eq!(one.samples, 200_000);
    }

    #[test]
    fn mc_settings_validation() {
        let sys = HybridSystem::<f64>::reference();
        assert!(mc_hybrid_capacity(&sys, &McSettings::new(0, 1)).is_err());
        let single = mc_hybrid_capacity(&sys, &McSettings::new(1, 1)).unwrap();
        assert_eq!(single.samples, 1);
    }

    #[test]
    fn growing_sign_breaks_the_integral() {
        let sys = HybridSystem::<f64>::reference();
        let r = analytic_hybrid_capacity_with(&sys, &rule(), 1e-8, RelayNoiseExponent::Growing);
        assert!(r.is_err());
    }

    #[test]
    fn single_precision_pipeline() {
        let sys = HybridSystem::<f32>::reference();
        let rule32 = gauss_hermite::<f32>(32).unwrap();
        let c32 = analytic_hybrid_capacity(&sys, &rule32, 1e-5)
            .unwrap()
            .value();
        let c64 = analytic_hybrid_capacity(&HybridSystem::<f64>::reference(), &rule(), 1e-10)
            .unwrap()
            .value();
        assert!((c32 as f64 - c64).abs() < 1e-4 * c64, "{c32} vs {c64}");
    }
}
