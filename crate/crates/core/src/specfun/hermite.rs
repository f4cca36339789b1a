use crate::error::{Error, Result};
use crate::real::Real;

pub const MAX_ORDER: usize = 200;

/// Gauss-Hermite rule for the weight `e^{-x²}` on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Roots of `H_N`, ascending.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `Σ w_n f(x_n) ≈ ∫ f(x) e^{-x²} dx`.
    ///
    /// Mirrored nodes are summed in pairs, so odd integrands cancel exactly.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        let n = self.nodes.len();
        let mut acc = T::zero();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            acc = acc + self.weights[i] * (f(self.nodes[i]) + f(self.nodes[j]));
        }
        if n % 2 == 1 {
            acc = acc + self.weights[n / 2] * f(self.nodes[n / 2]);
        }
        acc
    }

    /// `E[f(X)]` for `X ~ N(mean, std²)`, via `X = mean + √2·std·x`.
    pub fn expect_normal<F: FnMut(T) -> T>(&self, mean: T, std: T, mut f: F) -> T {
        let scale = T::SQRT_2() * std;
        self.integrate(|x| f(mean + scale * x)) / T::PI().sqrt()
    }
}

/// Build the `order`-point Gauss-Hermite rule.
///
/// Each root is bracketed by bisection on the Sturm count of the Jacobi
/// matrix, then polished by Newton steps on the orthonormal recurrence. The
/// construction runs in `f64` (the recurrence overflows `f32` at high order)
/// and the result is converted to `T`.
pub fn gauss_hermite<T: Real>(order: usize) -> Result<QuadratureRule<T>> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::param(
            "order",
            format!("Gauss-Hermite order must be in 1..={MAX_ORDER}, got {order}"),
        ));
    }
    let (x, w) = hermite_f64(order)?;
    Ok(QuadratureRule {
        nodes: x.into_iter().map(T::lit).collect(),
        weights: w.into_iter().map(T::lit).collect(),
    })
}

/// Returns `(p_n(z), p_n'(z))` for the orthonormal Hermite polynomial `p_n`.
fn hermite_orthonormal(n: usize, z: f64) -> (f64, f64) {
    const PI_M4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let mut p1 = PI_M4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Number of roots of `H_n` below `x`: the negative pivots of `J − xI`, where
/// `J` is the Jacobi matrix with zero diagonal and off-diagonal `√(k/2)`.
fn roots_below(n: usize, x: f64) -> usize {
    let mut count = 0;
    let mut d = -x;
    for k in 1..=n {
        if k > 1 {
            let b2 = (k - 1) as f64 / 2.0;
            let prev = if d == 0.0 { f64::EPSILON } else { d };
            d = -x - b2 / prev;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn hermite_f64(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let bound = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
    // roots with index >= n/2 (ascending) are the non-negative ones
    for k in n / 2..n {
        let (mut lo, mut hi) = (if n % 2 == 1 && k == n / 2 { -0.5 } else { 0.0 }, bound);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if roots_below(n, mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        let mut dp = hermite_orthonormal(n, z).1;
        for _ in 0..8 {
            let (p, d) = hermite_orthonormal(n, z);
            dp = d;
            let step = p / d;
            z -= step;
            if step.abs() <= f64::EPSILON * z.abs().max(1e-3) {
                break;
            }
        }
        if !(z.is_finite() && dp.is_finite() && dp != 0.0) {
            return Err(Error::NonConvergence {
                partial: z,
                error_estimate: f64::NAN,
            });
        }
        if n % 2 == 1 && k == n / 2 {
            z = 0.0;
            dp = hermite_orthonormal(n, 0.0).1;
        } else {
            dp = hermite_orthonormal(n, z).1;
        }
        let w = 2.0 / (dp * dp);
        // for the middle node of an odd order both indices coincide; writing
        // `-z` first keeps it at +0
        nodes[n - 1 - k] = -z;
        nodes[k] = z;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    Ok((nodes, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian_moment(j: u32) -> f64 {
        // ∫ x^j e^{-x²} dx = Γ((j+1)/2) for even j, 0 for odd j.
        if j % 2 == 1 {
            return 0.0;
        }
        let mut m = PI.sqrt();
        for i in 0..j / 2 {
            m *= (2 * i + 1) as f64 / 2.0;
        }
        m
    }

    #[test]
    fn analytic_low_orders() {
        let r1 = gauss_hermite::<f64>(1).unwrap();
        assert_eq!(r1.nodes(), &[0.0]);
        assert!(r1.nodes()[0].is_sign_positive());
        assert!((r1.weights()[0] - PI.sqrt()).abs() < 1e-15);

        let r2 = gauss_hermite::<f64>(2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r2.nodes()[0] + h).abs() < 1e-15 && (r2.nodes()[1] - h).abs() < 1e-15);
        for &w in r2.weights() {
            assert!((w - PI.sqrt() / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn order_bounds() {
        assert!(gauss_hermite::<f64>(0).is_err());
        assert!(gauss_hermite::<f64>(201).is_err());
        assert!(gauss_hermite::<f64>(200).is_ok());
    }

    #[test]
    fn sixth_moment_order_32() {
        let r = gauss_hermite::<f64>(32).unwrap();
        let m6 = r.integrate(|x| x.powi(6));
        let exact = 15.0 * PI.sqrt() / 8.0;
        assert!(((m6 - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn structural_invariants_all_orders() {
        for n in 1..=MAX_ORDER {
            let r = gauss_hermite::<f64>(n).unwrap();
            let sum: f64 = r.weights().iter().sum();
            assert!(
                ((sum - PI.sqrt()) / PI.sqrt()).abs() < 1e-12,
                "order {n}: {sum}"
            );
            assert!(r.weights().iter().all(|&w| w > 0.0), "order {n}");
            assert!(r.nodes().windows(2).all(|p| p[0] < p[1]), "order {n}");
            for i in 0..n {
                assert!((r.nodes()[i] + r.nodes()[n - 1 - i]).abs() < 1e-12);
            }
            let first = r.integrate(|x| x);
            assert!(first.abs() < 1e-12);
            let second = r.integrate(|x| x * x);
            if n >= 2 {
                assert!(
                    ((second - PI.sqrt() / 2.0) / (PI.sqrt() / 2.0)).abs() < 1e-10,
                    "order {n}"
                );
            }
        }
    }

    #[test]
    fn exact_through_degree_2n_minus_1() {
        for n in [1usize, 2, 3, 5, 8, 16, 32] {
            let r = gauss_hermite::<f64>(n).unwrap();
            for j in 0..(2 * n as u32) {
                let got = r.integrate(|x| x.powi(j as i32));
                let exact = gaussian_moment(j);
                if j % 2 == 1 {
                    assert!(got.abs() < 1e-10 * exact.max(1.0), "n={n} j={j} {got}");
                } else {
                    assert!(
                        ((got - exact) / exact).abs() < 1e-10,
                        "n={n} j={j} {got} {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn normal_expectation() {
        let r = gauss_hermite::<f64>(32).unwrap();
        // E[e^X] for X ~ N(0.3, 0.5²) = e^{0.3 + 0.125}
        let got = r.expect_normal(0.3, 0.5, f64::exp);
        assert!((got - (0.425f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn single_precision_rule() {
        let r = gauss_hermite::<f32>(16).unwrap();
        let sum: f32 = r.weights().iter().sum();
        assert!((sum - PI.sqrt() as f32).abs() < 1e-5);
    }
}
