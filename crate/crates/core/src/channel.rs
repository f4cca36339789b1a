//! Link models for the two hops: the power-line hop (exponential cable
//! attenuation with log-normal fading) and the indoor wireless hop
//! (distance path loss with Rayleigh fading).
//!
//! Log-normal fading is parameterised on the *amplitude* in dB: `fading_mu_db`
//! and `fading_sigma_db` are the mean and standard deviation of
//! `10·log10|h|`. The power gain `|h|²` is therefore log-normal with dB mean
//! `2·mu` and dB standard deviation `2·sigma`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::real::Real;

/// Parameters of the source-to-relay power-line hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlcLink<T> {
    /// Operating frequency in Hz.
    pub freq_hz: T,
    /// Attenuation exponent `k`.
    pub atten_k: T,
    /// Attenuation constant `a0` in Np/m.
    pub atten_a0: T,
    /// Attenuation constant `a1` in Np/m per Hz^k.
    pub atten_a1: T,
    /// Cable length in metres.
    pub length_m: T,
    /// Mean of `10·log10|h|` in dB.
    pub fading_mu_db: T,
    /// Standard deviation of `10·log10|h|` in dB.
    pub fading_sigma_db: T,
    /// Noise variance at the receiving end of the cable, in watts.
    pub noise_var: T,
}

/// Parameters of the relay-to-destination wireless hop. The Rayleigh fading
/// is unit mean and carries no parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WirelessLink<T> {
    pub dist_m: T,
    pub pathloss_exp: T,
    pub noise_var: T,
}

/// Source → power line → AF relay → wireless → destination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridSystem<T> {
    pub src_power_w: T,
    pub relay_power_w: T,
    /// Linear amplitude gain of the relay.
    pub relay_gain: T,
    pub plc: PlcLink<T>,
    pub wireless: WirelessLink<T>,
}

/// One joint realisation of both fading power gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample<T> {
    pub hp_sq: T,
    pub hw_sq: T,
}

/// How a relay gain quoted in dB maps to the linear amplitude gain `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainConvention {
    /// `G = 10^(dB/20)`: the dB figure describes the amplitude gain.
    #[default]
    Amplitude,
    /// `G = 10^(dB/10)`: the dB figure is applied as-is to `G`.
    Power,
}

impl GainConvention {
    pub fn to_linear<T: Real>(self, gain_db: T) -> T {
        let div = match self {
            GainConvention::Amplitude => T::lit(20.0),
            GainConvention::Power => T::lit(10.0),
        };
        T::lit(10.0).powf(gain_db / div)
    }

    pub fn to_db<T: Real>(self, gain: T) -> T {
        let mul = match self {
            GainConvention::Amplitude => T::lit(20.0),
            GainConvention::Power => T::lit(10.0),
        };
        mul * gain.log10()
    }

    pub fn name(self) -> &'static str {
        match self {
            GainConvention::Amplitude => "amplitude",
            GainConvention::Power => "power",
        }
    }
}

impl std::str::FromStr for GainConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" => Ok(GainConvention::Amplitude),
            "power" => Ok(GainConvention::Power),
            other => Err(Error::param(
                "gain_convention",
                format!("expected `amplitude` or `power`, got `{other}`"),
            )),
        }
    }
}

fn check<T: Real>(ok: bool, name: &'static str, v: T, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} is not {what}")))
    }
}

fn finite_nonneg<T: Real>(name: &'static str, v: T) -> Result<()> {
    check(
        v.is_finite() && v >= T::zero(),
        name,
        v,
        "a finite value >= 0",
    )
}

fn finite_pos<T: Real>(name: &'static str, v: T) -> Result<()> {
    check(
        v.is_finite() && v > T::zero(),
        name,
        v,
        "a finite value > 0",
    )
}

impl<T: Real> PlcLink<T> {
    /// Cable constants used throughout the indoor reference setup: 500 kHz,
    /// `k = 0.7`, `a0 = 2.03e-3`, `a1 = 3.75e-7`, with 0 dB / 3 dB log-normal
    /// fading and 0.1 W noise.
    pub fn reference(length_m: T) -> Self {
        PlcLink {
            freq_hz: T::lit(500e3),
            atten_k: T::lit(0.7),
            atten_a0: T::lit(2.03e-3),
            atten_a1: T::lit(3.75e-7),
            length_m,
            fading_mu_db: T::zero(),
            fading_sigma_db: T::lit(3.0),
            noise_var: T::lit(0.1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        finite_pos("freq_hz", self.freq_hz)?;
        check(self.atten_k.is_finite(), "atten_k", self.atten_k, "finite")?;
        finite_nonneg("atten_a0", self.atten_a0)?;
        finite_nonneg("atten_a1", self.atten_a1)?;
        finite_nonneg("length_m", self.length_m)?;
        check(
            self.fading_mu_db.is_finite(),
            "fading_mu_db",
            self.fading_mu_db,
            "finite",
        )?;
        finite_nonneg("fading_sigma_db", self.fading_sigma_db)?;
        finite_pos("noise_var", self.noise_var)
    }

    /// `α = a0 + a1·f^k` in Np/m.
    pub fn attenuation(&self) -> T {
        attenuation_coefficient(self)
    }

    /// Deterministic power gain of the cable, `e^{-2αd}`.
    pub fn power_gain(&self) -> T {
        let a = plc_amplitude_gain(self.attenuation(), self.length_m);
        a * a
    }

    /// dB mean and dB standard deviation of the fading power gain `|h|²`.
    pub fn power_gain_db_params(&self) -> (T, T) {
        let two = T::lit(2.0);
        (two * self.fading_mu_db, two * self.fading_sigma_db)
    }
}

impl<T: Real> WirelessLink<T> {
    pub fn validate(&self) -> Result<()> {
        finite_pos("dist_m", self.dist_m)?;
        finite_nonneg("pathloss_exp", self.pathloss_exp)?;
        finite_pos("noise_var", self.noise_var)
    }

    /// Power path loss factor `d^{-m}`.
    pub fn path_gain(&self) -> T {
        self.dist_m.powf(-self.pathloss_exp)
    }
}

impl<T: Real> HybridSystem<T> {
    /// Indoor reference system: 10 m of cable, 1 W at source and relay,
    /// unit relay gain, relay 1 m from the destination with `m = 2`, and
    /// 0.1 W of noise at both receivers (10 dB input SNR).
    pub fn reference() -> Self {
        HybridSystem {
            src_power_w: T::one(),
            relay_power_w: T::one(),
            relay_gain: T::one(),
            plc: PlcLink::reference(T::lit(10.0)),
            wireless: WirelessLink {
                dist_m: T::one(),
                pathloss_exp: T::lit(2.0),
                noise_var: T::lit(0.1),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        finite_nonneg("src_power_w", self.src_power_w)?;
        finite_nonneg("relay_power_w", self.relay_power_w)?;
        finite_nonneg("relay_gain", self.relay_gain)?;
        self.plc.validate()?;
        self.wireless.validate()
    }

    /// `P_s e^{-2αd1}`: scale of the first-hop received signal power per unit `|h_P|²`.
    pub fn first_hop_scale(&self) -> T {
        self.src_power_w * self.plc.power_gain()
    }

    /// `P_r G² d2^{-m}`: scale of the relayed power per unit `|h_w|²`.
    pub fn second_hop_scale(&self) -> T {
        self.relay_power_w * self.relay_gain * self.relay_gain * self.wireless.path_gain()
    }

    pub fn relay_is_degenerate(&self) -> bool {
        self.relay_gain <= T::zero() || self.relay_power_w <= T::zero()
    }
}

/// `α = a0 + a1·f^k`.
pub fn attenuation_coefficient<T: Real>(link: &PlcLink<T>) -> T {
    link.atten_a0 + link.atten_a1 * link.freq_hz.powf(link.atten_k)
}

/// Amplitude gain `e^{-αd}` of a cable of length `d`.
pub fn plc_amplitude_gain<T: Real>(alpha: T, d: T) -> T {
    (-alpha * d).exp()
}

/// Draw `|h_P|²`: a Gaussian dB value with mean `2μ` and std `2σ`, mapped to linear.
pub fn sample_plc_gain<T: Real, R: Rng + ?Sized>(link: &PlcLink<T>, rng: &mut R) -> T {
    let (mean_db, std_db) = link.power_gain_db_params();
    let g = mean_db + std_db * T::sample_standard_normal(rng);
    db_to_linear(g)
}

/// Inverse CDF of the unit-mean exponential distribution.
pub fn exp_inverse_cdf<T: Real>(u: T) -> T {
    -(-u).ln_1p()
}

/// Draw `|h_w|²` ~ Exp(1), the power of a unit-variance Rayleigh amplitude.
pub fn sample_wireless_gain<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    exp_inverse_cdf(T::sample_unit(rng))
}

pub fn sample_channel<T: Real, R: Rng + ?Sized>(
    link: &PlcLink<T>,
    rng: &mut R,
) -> ChannelSample<T> {
    let hp_sq = sample_plc_gain(link, rng);
    let hw_sq = sample_wireless_gain(rng);
    ChannelSample { hp_sq, hw_sq }
}

/// End-to-end SNR of the AF link,
///
/// ```text
///        G² P_r d2^{-m} P_s e^{-2αd1} |h_P|² |h_w|²
/// γ = ------------------------------------------------
///           G² P_r d2^{-m} |h_w|² σ_r² + σ_d²
/// ```
pub fn hybrid_snr<T: Real>(sample: &ChannelSample<T>, sys: &HybridSystem<T>) -> T {
    let relayed = sys.second_hop_scale() * sample.hw_sq;
    let num = relayed * sys.first_hop_scale() * sample.hp_sq;
    let den = relayed * sys.plc.noise_var + sys.wireless.noise_var;
    num / den
}

/// The same SNR written as `K / (L + M)` with `K = P_s e^{-2αd1}|h_P|²`,
/// `L = σ_r²` and `M = σ_d² / (P_r G² d2^{-m} |h_w|²)`.
pub fn hybrid_snr_split<T: Real>(sample: &ChannelSample<T>, sys: &HybridSystem<T>) -> T {
    let k = sys.first_hop_scale() * sample.hp_sq;
    if k == T::zero() {
        return T::zero();
    }
    let m = sys.wireless.noise_var / (sys.second_hop_scale() * sample.hw_sq);
    k / (sys.plc.noise_var + m)
}

/// SNR of the direct power-line link, `P_s e^{-2αd}|h|² / σ_d²`.
pub fn plc_only_snr<T: Real>(hp_sq: T, link: &PlcLink<T>, src_power_w: T) -> T {
    src_power_w * link.power_gain() * hp_sq / link.noise_var
}

pub(crate) fn db_to_linear<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn link(a0: f64, a1: f64, f: f64) -> PlcLink<f64> {
        PlcLink {
            atten_a0: a0,
            atten_a1: a1,
            freq_hz: f,
            ..PlcLink::reference(10.0)
        }
    }

    #[test]
    fn attenuation_examples() {
        assert_eq!(attenuation_coefficient(&link(0.0, 0.0, 500e3)), 0.0);
        // 2.03e-3 + 3.75e-7 * 500e3^0.7, evaluated by hand: 500e3^0.7 = 9836.12...
        let expected = 2.03e-3 + 3.75e-7 * (0.7 * 500e3f64.ln()).exp();
        let a = attenuation_coefficient(&link(2.03e-3, 3.75e-7, 500e3));
        assert_relative_eq!(a, expected, max_relative = 1e-14);
        assert!((a - 5.689e-3).abs() < 5e-7);
        assert_eq!(
            attenuation_coefficient(&link(2.03e-3, 3.75e-7, 0.0)),
            2.03e-3
        );
    }

    #[test]
    fn amplitude_gain_examples() {
        assert_eq!(plc_amplitude_gain(0.3, 0.0), 1.0);
        assert!((plc_amplitude_gain(5.689e-3f64, 10.0) - 0.9447).abs() < 5e-5);
        // e^{-0.28445} = 0.752 43
        assert!((plc_amplitude_gain(5.689e-3f64, 50.0) - 0.75243).abs() < 5e-6);
    }

    #[test]
    fn degenerate_lognormal_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut l = PlcLink::reference(10.0);
        l.fading_sigma_db = 0.0;
        for _ in 0..100 {
            assert_eq!(sample_plc_gain(&l, &mut rng), 1.0);
        }
        l.fading_mu_db = -5.0;
        for _ in 0..100 {
            assert_eq!(sample_plc_gain(&l, &mut rng), 0.1);
        }
    }

    #[test]
    fn lognormal_sample_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = PlcLink::reference(10.0);
        let n = 1_000_000;
        let db: Vec<f64> = (0..n)
            .map(|_| 10.0 * sample_plc_gain::<f64, _>(&l, &mut rng).log10())
            .collect();
        let mean = db.iter().sum::<f64>() / n as f64;
        let var = db.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = 6.0 / (n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean}");
        assert!((var.sqrt() - 6.0).abs() < 0.06, "std {}", var.sqrt());
    }

    #[test]
    fn exponential_sampler() {
        assert_relative_eq!(
            exp_inverse_cdf(0.5f64),
            std::f64::consts::LN_2,
            max_relative = 1e-15
        );
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_wireless_gain(&mut rng)).collect();
        assert!(xs.iter().all(|&x| x >= 0.0 && x.is_finite()));
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt());
        let p = (-1.0f64).exp();
        let frac = xs.iter().filter(|&&x| x > 1.0).count() as f64 / n as f64;
        assert!((frac - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn snr_edge_cases() {
        let sys = HybridSystem::<f64>::reference();
        let zero_p = ChannelSample {
            hp_sq: 0.0,
            hw_sq: 1.3,
        };
        let zero_w = ChannelSample {
            hp_sq: 1.3,
            hw_sq: 0.0,
        };
        assert_eq!(hybrid_snr(&zero_p, &sys), 0.0);
        assert_eq!(hybrid_snr(&zero_w, &sys), 0.0);
        assert_eq!(hybrid_snr_split(&zero_w, &sys), 0.0);

        let mut quiet = sys;
        quiet.wireless.noise_var = 1e-300;
        let s = ChannelSample {
            hp_sq: 0.7,
            hw_sq: 0.4,
        };
        let ceiling = sys.first_hop_scale() * 0.7 / sys.plc.noise_var;
        assert_relative_eq!(hybrid_snr(&s, &quiet), ceiling, max_relative = 1e-12);
    }

    #[test]
    fn plc_only_examples() {
        let mut l = PlcLink::reference(0.0);
        assert_eq!(plc_only_snr(0.0, &l, 1.0), 0.0);
        assert_relative_eq!(plc_only_snr(1.0, &l, 1.0), 10.0, max_relative = 1e-15);
        l.length_m = 100.0;
        assert!((plc_only_snr(1.0f64, &l, 1.0) - 3.205).abs() < 2e-3);
    }

    #[test]
    fn gain_conventions() {
        assert_relative_eq!(
            GainConvention::Amplitude.to_linear(20.0f64),
            10.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            GainConvention::Power.to_linear(20.0f64),
            100.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            GainConvention::Power.to_db(100.0f64),
            20.0,
            max_relative = 1e-14
        );
        assert!("decibel".parse::<GainConvention>().is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut sys = HybridSystem::<f64>::reference();
        assert!(sys.validate().is_ok());
        sys.wireless.noise_var = 0.0;
        assert!(sys.validate().is_err());
        let mut sys = HybridSystem::<f64>::reference();
        sys.plc.fading_sigma_db = -1.0;
        assert!(sys.validate().is_err());
        let mut sys = HybridSystem::<f64>::reference();
        sys.relay_gain = f64::NAN;
        assert!(sys.validate().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let sys = HybridSystem::<f32>::reference();
        let s = ChannelSample {
            hp_sq: 1.0f32,
            hw_sq: 1.0,
        };
        let g64 = hybrid_snr(
            &ChannelSample {
                hp_sq: 1.0,
                hw_sq: 1.0,
            },
            &HybridSystem::<f64>::reference(),
        );
        assert!((hybrid_snr(&s, &sys) as f64 - g64).abs() < 1e-5 * g64);
    }

    fn system_strategy() -> impl Strategy<Value = HybridSystem<f64>> {
        (
            0.0..20.0f64,
            0.0..20.0f64,
            0.0..100.0f64,
            0.0..300.0f64,
            0.2..50.0f64,
            0.0..4.0f64,
            1e-4..1.0f64,
            1e-4..1.0f64,
        )
            .prop_map(|(ps, pr, g, d1, d2, m, sr, sd)| {
                let mut sys = HybridSystem::reference();
                sys.src_power_w = ps;
                sys.relay_power_w = pr;
                sys.relay_gain = g;
                sys.plc.length_m = d1;
                sys.plc.noise_var = sr;
                sys.wireless.dist_m = d2;
                sys.wireless.pathloss_exp = m;
                sys.wireless.noise_var = sd;
                sys
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn snr_forms_agree(sys in system_strategy(), hp in 1e-3..50.0f64, hw in 1e-4..20.0f64) {
            let s = ChannelSample { hp_sq: hp, hw_sq: hw };
            let a = hybrid_snr(&s, &sys);
            let b = hybrid_snr_split(&s, &sys);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()) || (a == 0.0 && b == 0.0),
                "{} vs {}", a, b);
        }
    }

    proptest! {
        #[test]
        fn snr_monotone(sys in system_strategy(), hp in 1e-3..50.0f64, hw in 1e-4..20.0f64,
                        bump in 1.0..3.0f64) {
            let s = ChannelSample { hp_sq: hp, hw_sq: hw };
            let g0 = hybrid_snr(&s, &sys);
            let tol = 1e-12 * g0;
            let up = |f: &dyn Fn(&mut HybridSystem<f64>)| { let mut t = sys; f(&mut t); hybrid_snr(&s, &t) };
            prop_assert!(up(&|t| t.src_power_w *= bump) >= g0 - tol);
            prop_assert!(up(&|t| t.relay_gain *= bump) >= g0 - tol);
            let more_hp = ChannelSample { hp_sq: hp * bump, hw_sq: hw };
            let more_hw = ChannelSample { hp_sq: hp, hw_sq: hw * bump };
            prop_assert!(hybrid_snr(&more_hp, &sys) >= g0 - tol);
            prop_assert!(hybrid_snr(&more_hw, &sys) >= g0 - tol);
            prop_assert!(up(&|t| t.plc.noise_var *= bump) <= g0 + tol);
            prop_assert!(up(&|t| t.wireless.noise_var *= bump) <= g0 + tol);
            prop_assert!(up(&|t| t.plc.length_m += bump) <= g0 + tol);
            if sys.wireless.dist_m > 1.0 {
                prop_assert!(up(&|t| t.wireless.dist_m *= bump) <= g0 + tol);
                prop_assert!(up(&|t| t.wireless.pathloss_exp += bump) <= g0 + tol);
            }
        }

        #[test]
        fn amplitude_gain_composes(alpha in 0.0..0.05f64, d1 in 0.0..500.0f64, d2 in 0.0..500.0f64) {
            let joint = plc_amplitude_gain(alpha, d1 + d2);
            let split = plc_amplitude_gain(alpha, d1) * plc_amplitude_gain(alpha, d2);
            prop_assert!((joint - split).abs() <= 1e-12 * joint.max(1e-300));
        }
    }
}
