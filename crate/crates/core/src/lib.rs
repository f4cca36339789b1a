//! Ergodic capacity of a two-hop link: a power-line cable into an
//! amplify-and-forward relay that re-transmits over an indoor wireless hop.
//!
//! Capacities are computed both analytically (MGF integral and Gauss-Hermite
//! quadrature) and by Monte Carlo simulation, together with a direct
//! power-line baseline and a parameter-sweep harness that writes CSV and SVG.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

// `!(x > 0.0)` is the deliberate spelling of "not positive, or NaN".
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channel;
pub mod cli;
mod error;
pub mod experiments;
mod real;
pub mod specfun;

pub use error::{Error, Result};
pub use real::Real;

pub use capacity::{McSettings, Method};
pub use channel::GainConvention;

pub type PlcLink = channel::PlcLink<f64>;
pub type WirelessLink = channel::WirelessLink<f64>;
pub type HybridSystem = channel::HybridSystem<f64>;
pub type ChannelSample = channel::ChannelSample<f64>;
pub type QuadratureRule = specfun::QuadratureRule<f64>;
pub type CapacityEstimate = capacity::CapacityEstimate<f64>;

pub type PlcLinkF32 = channel::PlcLink<f32>;
pub type HybridSystemF32 = channel::HybridSystem<f32>;
pub type QuadratureRuleF32 = specfun::QuadratureRule<f32>;
