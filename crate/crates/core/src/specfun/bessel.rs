use crate::error::{Error, Result};
use crate::real::Real;

const MAX_ITER: usize = 10_000;

/// Modified Bessel function of the second kind, order one.
///
/// Power series below `x = 2`, Steed's continued fraction above. Underflows
/// to zero once `e^{-x}` does (around `x ≈ 705` in `f64`).
pub fn bessel_k1<T: Real>(x: T) -> Result<T> {
    check_domain(x)?;
    if x <= T::lit(2.0) {
        Ok(k1_series(x))
    } else {
        Ok(k1_continued_fraction_scaled(x)? * (-x).exp())
    }
}

/// `e^x · K₁(x)`, finite for every positive `x`.
pub fn bessel_k1_scaled<T: Real>(x: T) -> Result<T> {
    check_domain(x)?;
    if x <= T::lit(2.0) {
        Ok(k1_series(x) * x.exp())
    } else {
        k1_continued_fraction_scaled(x)
    }
}

fn check_domain<T: Real>(x: T) -> Result<()> {
    if x > T::zero() && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("K1 requires x > 0, got {x}")))
    }
}

/// `K₁(x) = 1/x + (x/2) Σ t_k [ln(x/2) − (ψ(k+1) + ψ(k+2))/2]`,
/// `t_k = (x²/4)^k / (k!(k+1)!)`.
fn k1_series<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    let euler = T::lit(0.577_215_664_901_532_9);
    let y = x * x * T::lit(0.25);
    let log_half_x = (x * half).ln();

    let mut term = T::one();
    // ψ(k+1) and ψ(k+2)
    let mut psi_a = -euler;
    let mut psi_b = T::one() - euler;
    let mut sum = log_half_x - half * (psi_a + psi_b);
    for k in 1..200 {
        let kf = T::from_usize_lossy(k);
        term = term * y / (kf * (kf + T::one()));
        psi_a = psi_a + T::one() / kf;
        psi_b = psi_b + T::one() / (kf + T::one());
        let contrib = term * (log_half_x - half * (psi_a + psi_b));
        sum = sum + contrib;
        if contrib.abs() <= T::epsilon() * sum.abs() * T::lit(0.5) {
            break;
        }
    }
    T::one() / x + x * half * sum
}

/// Steed's method (CF2) for `e^x K₀` and `e^x K₁`; returns the latter.
fn k1_continued_fraction_scaled<T: Real>(x: T) -> Result<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let a1 = T::lit(0.25);

    let mut b = two * (one + x);
    let mut d = one / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = T::zero();
    let mut q2 = one;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;

    let mut converged = false;
    for i in 1..MAX_ITER {
        let fi = T::from_usize_lossy(i);
        a = a - two * fi;
        c = -a * c / (fi + one);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q = q + c * qnew;
        b = b + two;
        d = one / (b + a * d);
        delh = (b * d - one) * delh;
        h = h + delh;
        let dels = q * delh;
        s = s + dels;
        if (dels / s).abs() < T::epsilon() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            partial: s.as_f64(),
            error_estimate: f64::NAN,
        });
    }
    h = a1 * h;
    let k0_scaled = (T::PI() / (two * x)).sqrt() / s;
    Ok(k0_scaled * (x + T::lit(0.5) - h) / x)
}
