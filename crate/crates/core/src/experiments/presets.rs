use super::{Axis, SweepMethod, SweepParam, SweepSpec};
use crate::capacity::{McSettings, DEFAULT_QUAD_ORDER, DEFAULT_REL_TOL};
use crate::channel::GainConvention;
use crate::error::{Error, Result};
use crate::HybridSystem;

pub const PRESETS: [&str; 4] = ["fig2", "fig3", "fig4", "fig5"];

const POINTS: usize = 20;

/// Built-in sweeps over `base`:
///
/// - `fig2`: capacity vs. `P_s` in [0.01, 10] W (log grid) for `d1` ∈ {1, 10, 50} m
/// - `fig3`: capacity vs. `d2` in [1, 30] m for `m` ∈ {2, 2.5, 3, 3.5}
/// - `fig4`: capacity vs. relay gain in [1, 20] dB for `d2` ∈ {2, 5, 10} m
/// - `fig5`: hybrid vs. direct power line over end-to-end distance in
///   [20, 500] m for gains of {0, 10, 20} dB, with `σ_r² = 0.01`,
///   `σ_d² = 0.1`, `m = 2` and the power gain convention.
///
/// Only the analytic methods are selected; add `monte_carlo` to `methods`
/// for simulated points.
pub fn preset(name: &str, base: &HybridSystem) -> Result<SweepSpec> {
    let mut spec = SweepSpec {
        name: name.to_string(),
        base: *base,
        gain_convention: GainConvention::Amplitude,
        half_duplex: false,
        axis: Axis::new(SweepParam::SrcPower, vec![]),
        family: None,
        methods: vec![SweepMethod::Analytic],
        mc: McSettings::default(),
        quad_order: DEFAULT_QUAD_ORDER,
        rel_tol: DEFAULT_REL_TOL,
    };
    match name {
        "fig2" => {
            spec.axis = Axis::logspace(SweepParam::SrcPower, 0.01, 10.0, POINTS);
            spec.family = Some(Axis::new(SweepParam::DistD1, vec![1.0, 10.0, 50.0]));
        }
        "fig3" => {
            spec.axis = Axis::linspace(SweepParam::DistD2, 1.0, 30.0, POINTS);
            spec.family = Some(Axis::new(SweepParam::PathlossExp, vec![2.0, 2.5, 3.0, 3.5]));
        }
        "fig4" => {
            spec.axis = Axis::linspace(SweepParam::RelayGainDb, 1.0, 20.0, POINTS);
            spec.family = Some(Axis::new(SweepParam::DistD2, vec![2.0, 5.0, 10.0]));
        }
        "fig5" => {
            spec.base.plc.noise_var = 0.01;
            spec.base.wireless.noise_var = 0.1;
            spec.base.wireless.pathloss_exp = 2.0;
            spec.gain_convention = GainConvention::Power;
            spec.axis = Axis::linspace(SweepParam::TotalDistance, 20.0, 500.0, POINTS);
            spec.family = Some(Axis::new(SweepParam::RelayGainDb, vec![0.0, 10.0, 20.0]));
            spec.methods = vec![SweepMethod::Analytic, SweepMethod::PlcOnlyAnalytic];
        }
        other => {
            return Err(Error::param(
                "preset",
                format!(
                    "unknown preset `{other}`, expected one of {}",
                    PRESETS.join(", ")
                ),
            ))
        }
    }
    Ok(spec)
}
