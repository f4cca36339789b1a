//! Integration over `[0, ∞)` for integrands that are smooth and localised on a
//! logarithmic scale.
//!
//! The substitution `z = e^t` turns `∫₀^∞ f(z) dz` into `∫ f(e^t) e^t dt`
//! over the real line. The `t`-window is grown until the transformed integrand
//! has dropped below `1e-16` of its peak at both ends, then covered with
//! equal Gauss-Legendre panels whose count is doubled until two successive
//! estimates agree to the requested relative tolerance.

use crate::error::{Error, Result};
use crate::real::Real;

const PANEL_POINTS: usize = 20;
const TAIL_RATIO: f64 = 1e-16;
const SCAN_MIN: f64 = -60.0;
const SCAN_MAX: f64 = 60.0;
/// `e^{-745}` is the smallest positive `f64`.
const T_FLOOR: f64 = -745.0;
/// `e^{709}` is close to `f64::MAX`.
const T_CEIL: f64 = 709.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    /// Difference between the last two panel refinements.
    pub error_estimate: T,
    /// Panel count of the accepted estimate.
    pub panels: usize,
    /// Integration window in `t = ln z`.
    pub window: (T, T),
}

#[derive(Debug, Clone, Copy)]
pub struct SemiInfinite {
    pub rel_tol: f64,
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for SemiInfinite {
    fn default() -> Self {
        SemiInfinite {
            rel_tol: 1e-8,
            initial_panels: 16,
            max_panels: 1 << 14,
        }
    }
}

/// `∫₀^∞ f(z) dz` to relative tolerance `rel_tol`.
pub fn integrate_semi_infinite<T, F>(f: F, rel_tol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    let opts = SemiInfinite {
        rel_tol: rel_tol.as_f64(),
        ..SemiInfinite::default()
    };
    opts.integrate(f).map(|r| r.value)
}

impl SemiInfinite {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        SemiInfinite {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn integrate<T, F>(&self, f: F) -> Result<Integral<T>>
    where
        T: Real,
        F: Fn(T) -> T,
    {
        if !(self.rel_tol > 0.0) {
            return Err(Error::param(
                "rel_tol",
                format!("must be > 0, got {}", self.rel_tol),
            ));
        }
        let g = |t: T| transformed(&f, t);
        let Some((lo, hi)) = find_window(&g)? else {
            return Ok(Integral {
                value: T::zero(),
                error_estimate: T::zero(),
                panels: 0,
                window: (T::zero(), T::zero()),
            });
        };
        let rule = GaussLegendre::<T>::new();
        let tol = T::lit(self.rel_tol);
        let mut n = self.initial_panels.max(1);
        let (mut prev, _) = integrate_panels_with(&rule, &g, lo, hi, n);
        loop {
            let next_n = 2 * n;
            let (next, l1) = integrate_panels_with(&rule, &g, lo, hi, next_n);
            if !next.is_finite() {
                return Err(Error::NonConvergence {
                    partial: next.as_f64(),
                    error_estimate: f64::INFINITY,
                });
            }
            let diff = (next - prev).abs();
            let scale = next.abs().max(T::epsilon() * l1);
            if diff <= tol * scale {
                return Ok(Integral {
                    value: next,
                    error_estimate: diff,
                    panels: next_n,
                    window: (lo, hi),
                });
            }
            if next_n >= self.max_panels {
                return Err(Error::NonConvergence {
                    partial: next.as_f64(),
                    error_estimate: diff.as_f64(),
                });
            }
            prev = next;
            n = next_n;
        }
    }
}

/// Fixed-panel estimate of `∫ f(e^t) e^t dt` over `[lo, hi]`, i.e. of
/// `∫_{e^lo}^{e^hi} f(z) dz`.
pub fn integrate_log_panels<T, F>(f: F, lo: T, hi: T, panels: usize) -> T
where
    T: Real,
    F: Fn(T) -> T,
{
    let rule = GaussLegendre::<T>::new();
    integrate_panels_with(&rule, &|t| transformed(&f, t), lo, hi, panels.max(1)).0
}

fn transformed<T: Real, F: Fn(T) -> T>(f: &F, t: T) -> T {
    let z = t.exp();
    let v = f(z);
    if v == T::zero() {
        T::zero()
    } else {
        v * z
    }
}

fn find_window<T: Real, G: Fn(T) -> T>(g: &G) -> Result<Option<(T, T)>> {
    let mut peak = T::zero();
    let mut first = None;
    let mut last = None;
    let steps = (SCAN_MAX - SCAN_MIN) as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let t = T::lit(SCAN_MIN + i as f64);
        let v = g(t);
        if !v.is_finite() {
            return Err(non_finite(t));
        }
        peak = peak.max(v.abs());
        samples.push((t, v.abs()));
    }
    if peak == T::zero() {
        return Ok(None);
    }
    let thresh = peak * T::lit(TAIL_RATIO);
    for &(t, v) in &samples {
        if v > thresh {
            first.get_or_insert(t);
            last = Some(t);
        }
    }
    let one = T::one();
    let mut lo = first.expect("peak above threshold") - one;
    let mut hi = last.expect("peak above threshold") + one;
    loop {
        let v = g(lo);
        if !v.is_finite() {
            return Err(non_finite(lo));
        }
        if v.abs() <= thresh {
            break;
        }
        lo = lo - one;
        if lo < T::lit(T_FLOOR) {
            return Err(Error::NonConvergence {
                partial: f64::NAN,
                error_estimate: f64::INFINITY,
            });
        }
    }
    loop {
        let v = g(hi);
        if !v.is_finite() {
            return Err(non_finite(hi));
        }
        if v.abs() <= thresh {
            break;
        }
        hi = hi + one;
        if hi > T::lit(T_CEIL) {
            return Err(Error::NonConvergence {
                partial: f64::NAN,
                error_estimate: f64::INFINITY,
            });
        }
    }
    Ok(Some((lo, hi)))
}

fn non_finite<T: Real>(t: T) -> Error {
    Error::Domain(format!("integrand is not finite at z = e^{t}"))
}

/// Returns the integral and the integral of `|g|`.
fn integrate_panels_with<T: Real, G: Fn(T) -> T>(
    rule: &GaussLegendre<T>,
    g: &G,
    lo: T,
    hi: T,
    panels: usize,
) -> (T, T) {
    let width = (hi - lo) / T::from_usize_lossy(panels);
    let half = width * T::lit(0.5);
    let mut total = T::zero();
    let mut total_abs = T::zero();
    for p in 0..panels {
        let center = lo + width * (T::from_usize_lossy(p) + T::lit(0.5));
        let mut acc = T::zero();
        let mut acc_abs = T::zero();
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let v = g(center + half * *x);
            acc = acc + *w * v;
            acc_abs = acc_abs + *w * v.abs();
        }
        total = total + acc * half;
        total_abs = total_abs + acc_abs * half;
    }
    (total, total_abs)
}

struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    fn new() -> Self {
        let (x, w) = legendre_f64(PANEL_POINTS);
        GaussLegendre {
            nodes: x.into_iter().map(T::lit).collect(),
            weights: w.into_iter().map(T::lit).collect(),
        }
    }
}

fn legendre_f64(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
