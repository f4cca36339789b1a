//! Numerical primitives: Gauss-Hermite rules, the Bessel function `K₁`, and
//! integration over the positive half-line.

mod bessel;
mod hermite;
mod integrate;

pub use bessel::{bessel_k1, bessel_k1_scaled};
pub use hermite::{gauss_hermite, QuadratureRule, MAX_ORDER};
pub use integrate::{integrate_log_panels, integrate_semi_infinite, Integral, SemiInfinite};
