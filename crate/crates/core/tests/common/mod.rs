//! Reference implementations used as oracles by the integration tests.
//! They share no code with the library beyond its public types.

#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// `K1(x) = ∫_0^∞ exp(-x cosh t) cosh t dt`, by the trapezoidal rule.
///
/// The integrand is analytic in the strip |Im t| < π/2 and decays doubly
/// exponentially, so the trapezoidal rule converges geometrically in `1/h`.
pub fn bessel_k1_integral(x: f64) -> f64 {
    let h = 1.0 / 64.0;
    let mut sum = 0.5; // t = 0 contributes e^{-x}·1, scaled below
    let mut comp = 0.0;
    let mut t: f64 = h;
    loop {
        let c = t.cosh();
        // factor e^{-x} out of every term so that large x does not underflow
        let term = (-x * (c - 1.0)).exp() * c;
        // Kahan summation
        let y = term - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        if term < 1e-18 * sum {
            break;
        }
        t += h;
    }
    sum * h * (-x).exp()
}

/// `∫ x^j e^{-x²} dx` over the real line.
pub fn gaussian_moment(j: u32) -> f64 {
    if j % 2 == 1 {
        return 0.0;
    }
    let mut m = std::f64::consts::PI.sqrt();
    for i in 0..j / 2 {
        m *= (2 * i + 1) as f64 / 2.0;
    }
    m
}

/// Sample mean and standard error of `f` over `n` draws from `rng`.
pub fn mean_se<R, F>(n: usize, rng: &mut R, mut f: F) -> (f64, f64)
where
    F: FnMut(&mut R) -> f64,
{
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..n {
        let x = f(rng);
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    (mean, (m2 / (n as f64 - 1.0) / n as f64).sqrt())
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// `|h|²` of log-normal amplitude fading: `10 log10|h| ~ N(mu_db, sigma_db²)`.
pub fn lognormal_power(rng: &mut ChaCha20Rng, mu_db: f64, sigma_db: f64) -> f64 {
    let n: f64 = StandardNormal.sample(rng);
    10f64.powf(2.0 * (mu_db + sigma_db * n) / 10.0)
}

/// `|h|²` of unit-power Rayleigh fading.
pub fn rayleigh_power(rng: &mut ChaCha20Rng) -> f64 {
    Exp1.sample(rng)
}

/// `α = a0 + a1 f^k` for the reference cable, from its published constants.
pub fn reference_alpha() -> f64 {
    2.03e-3 + 3.75e-7 * 500e3f64.powf(0.7)
}

/// Pass/fail line for criteria reports.
pub fn report(ok: bool, label: &str, detail: &str) {
    println!("{} {label}: {detail}", if ok { "PASS" } else { "FAIL" });
}
