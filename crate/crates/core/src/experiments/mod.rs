//! Parameter sweeps over the hybrid system, with CSV and SVG output.
//!
//! A [`SweepSpec`] names one axis parameter and an optional family parameter;
//! every (axis value, family value) point is evaluated with each requested
//! method. Rows come back sorted by axis value, family value and method, so
//! output is independent of evaluation order.

mod output;
mod presets;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::capacity::{self, McSettings};
use crate::channel::GainConvention;
use crate::error::{Error, Result};
use crate::specfun::gauss_hermite;
use crate::{HybridSystem, PlcLink};

pub use output::{emit_csv, emit_plot, to_csv, to_svg, CSV_HEADER};
pub use presets::{preset, PRESETS};

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    SrcPower,
    DistD1,
    DistD2,
    PathlossExp,
    RelayGainDb,
    /// End-to-end distance `d`, split as `d1 = d2 = d/2`.
    TotalDistance,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::SrcPower,
        SweepParam::DistD1,
        SweepParam::DistD2,
        SweepParam::PathlossExp,
        SweepParam::RelayGainDb,
        SweepParam::TotalDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::SrcPower => "src_power_w",
            SweepParam::DistD1 => "dist_d1",
            SweepParam::DistD2 => "dist_d2",
            SweepParam::PathlossExp => "pathloss_exp",
            SweepParam::RelayGainDb => "relay_gain_db",
            SweepParam::TotalDistance => "total_distance",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SweepParam::SrcPower => "P_s [W]",
            SweepParam::DistD1 => "d1 [m]",
            SweepParam::DistD2 => "d2 [m]",
            SweepParam::PathlossExp => "m",
            SweepParam::RelayGainDb => "G [dB]",
            SweepParam::TotalDistance => "d [m]",
        }
    }

    /// Write `value` into `sys`.
    pub fn apply(self, sys: &mut HybridSystem, value: f64, convention: GainConvention) {
        match self {
            SweepParam::SrcPower => sys.src_power_w = value,
            SweepParam::DistD1 => sys.plc.length_m = value,
            SweepParam::DistD2 => sys.wireless.dist_m = value,
            SweepParam::PathlossExp => sys.wireless.pathloss_exp = value,
            SweepParam::RelayGainDb => sys.relay_gain = convention.to_linear(value),
            SweepParam::TotalDistance => {
                sys.plc.length_m = value / 2.0;
                sys.wireless.dist_m = value / 2.0;
            }
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = SweepParam::ALL.iter().map(|p| p.name()).collect();
                Error::param(
                    "sweep parameter",
                    format!("unknown `{s}`, expected one of {}", valid.join(", ")),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SweepMethod {
    Analytic,
    MonteCarlo,
    /// Direct power-line link over the end-to-end distance `d1 + d2`.
    PlcOnlyAnalytic,
}

impl SweepMethod {
    pub const ALL: [SweepMethod; 3] = [
        SweepMethod::Analytic,
        SweepMethod::MonteCarlo,
        SweepMethod::PlcOnlyAnalytic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepMethod::Analytic => "analytic",
            SweepMethod::MonteCarlo => "monte_carlo",
            SweepMethod::PlcOnlyAnalytic => "plc_only_analytic",
        }
    }
}

impl fmt::Display for SweepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::param(
                    "method",
                    format!("unknown `{s}`, expected analytic, monte_carlo or plc_only_analytic"),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(param: SweepParam, values: Vec<f64>) -> Self {
        Axis { param, values }
    }

    pub fn linspace(param: SweepParam, lo: f64, hi: f64, points: usize) -> Self {
        let values = if points == 1 {
            vec![lo]
        } else {
            (0..points)
                .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                .collect()
        };
        Axis { param, values }
    }

    pub fn logspace(param: SweepParam, lo: f64, hi: f64, points: usize) -> Self {
        let mut axis = Axis::linspace(param, lo.log10(), hi.log10(), points);
        for v in &mut axis.values {
            *v = 10f64.powf(*v);
        }
        axis
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub base: HybridSystem,
    /// Converts `relay_gain_db` values to the linear amplitude gain.
    pub gain_convention: GainConvention,
    /// Apply ½ to the direct power-line baseline.
    pub half_duplex: bool,
    pub axis: Axis,
    pub family: Option<Axis>,
    pub methods: Vec<SweepMethod>,
    pub mc: McSettings,
    pub quad_order: usize,
    pub rel_tol: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let axis = &self.axis.values;
        if axis.is_empty() {
            return Err(Error::param("axis", "grid is empty"));
        }
        if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param(
                "axis",
                "grid must be finite and strictly increasing",
            ));
        }
        if let Some(family) = &self.family {
            if family.param == self.axis.param {
                return Err(Error::param(
                    "family",
                    "must differ from the axis parameter",
                ));
            }
            if family.values.is_empty() || family.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("family", "values must be finite and nonempty"));
            }
            for (i, a) in family.values.iter().enumerate() {
                if family.values[..i].contains(a) {
                    return Err(Error::param("family", format!("duplicate value {a}")));
                }
            }
        }
        if self.methods.is_empty() {
            return Err(Error::param("methods", "at least one method is required"));
        }
        if self.methods.contains(&SweepMethod::MonteCarlo) {
            self.mc.validate()?;
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::param("rel_tol", "must be > 0"));
        }
        Ok(())
    }

    /// Hybrid system at one grid point.
    pub fn system_at(&self, axis_value: f64, family_value: Option<f64>) -> HybridSystem {
        let mut sys = self.base;
        if let (Some(family), Some(v)) = (&self.family, family_value) {
            family.param.apply(&mut sys, v, self.gain_convention);
        }
        self.axis
            .param
            .apply(&mut sys, axis_value, self.gain_convention);
        sys
    }
}

/// The direct power-line link spanning the same end-to-end distance as `sys`,
/// with the destination noise of the hybrid link.
pub fn plc_baseline(sys: &HybridSystem) -> PlcLink {
    PlcLink {
        length_m: sys.plc.length_m + sys.wireless.dist_m,
        noise_var: sys.wireless.noise_var,
        ..sys.plc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: f64,
    pub family: Option<f64>,
    pub method: SweepMethod,
    pub capacity: f64,
    pub std_err: f64,
    /// Set when evaluation failed; `capacity` then holds the partial result or NaN.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub name: String,
    pub axis: SweepParam,
    pub family: Option<SweepParam>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn empty(name: &str, axis: SweepParam, family: Option<SweepParam>) -> Self {
        SweepResult {
            name: name.to_string(),
            axis,
            family,
            rows: Vec::new(),
        }
    }

    /// Rows of one curve, in axis order.
    pub fn curve(&self, family: Option<f64>, method: SweepMethod) -> Vec<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.family == family)
            .collect()
    }

    /// Distinct family values in row order.
    pub fn family_values(&self) -> Vec<Option<f64>> {
        let mut out: Vec<Option<f64>> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.family) {
                out.push(r.family);
            }
        }
        out
    }

    pub fn methods(&self) -> Vec<SweepMethod> {
        let mut out: Vec<SweepMethod> = self.rows.iter().map(|r| r.method).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn errors(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    /// First axis position at which curve `a` rises from below curve `b` to
    /// at or above it, linearly interpolated between grid points.
    pub fn crossover(&self, family: Option<f64>, a: SweepMethod, b: SweepMethod) -> Option<f64> {
        let ca = self.curve(family, a);
        let cb = self.curve(family, b);
        let diffs: Vec<(f64, f64)> = ca
            .iter()
            .zip(&cb)
            .map(|(ra, rb)| (ra.axis, ra.capacity - rb.capacity))
            .collect();
        diffs.windows(2).find_map(|w| {
            let ((x0, d0), (x1, d1)) = (w[0], w[1]);
            (d0 < 0.0 && d1 >= 0.0).then(|| x0 + (x1 - x0) * (-d0) / (d1 - d0))
        })
    }
}

/// Evaluate every grid point of `spec`. Failures are recorded on the affected
/// row and do not stop the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rule = gauss_hermite::<f64>(spec.quad_order)?;
    let family_values: Vec<Option<f64>> = match &spec.family {
        Some(f) => f.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut jobs = Vec::new();
    for &x in &spec.axis.values {
        for &fv in &family_values {
            for &m in &spec.methods {
                jobs.push((x, fv, m));
            }
        }
    }
    let eval = |&(x, fv, method): &(f64, Option<f64>, SweepMethod)| {
        let sys = spec.system_at(x, fv);
        let outcome = match method {
            SweepMethod::Analytic => capacity::analytic_hybrid_capacity(&sys, &rule, spec.rel_tol),
            SweepMethod::MonteCarlo => capacity::mc_hybrid_capacity(&sys, &spec.mc),
            SweepMethod::PlcOnlyAnalytic => capacity::analytic_plc_capacity(
                &plc_baseline(&sys),
                sys.src_power_w,
                &rule,
                spec.half_duplex,
            ),
        };
        let (capacity, std_err, error) = match outcome {
            Ok(c) => (c.bits_per_s_per_hz, c.std_error, None),
            Err(e) => {
                let partial = match &e {
                    Error::NonConvergence { partial, .. } => *partial,
                    _ => f64::NAN,
                };
                (partial, f64::NAN, Some(e.to_string()))
            }
        };
        SweepRow {
            axis: x,
            family: fv,
            method,
            capacity,
            std_err,
            error,
        }
    };
    let mut rows: Vec<SweepRow> = if spec.mc.workers == 0 {
        jobs.par_iter().map(eval).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.mc.workers)
            .build()
            .map_err(|e| Error::param("workers", e.to_string()))?;
        pool.install(|| jobs.par_iter().map(eval).collect())
    };
    rows.sort_by(|a, b| {
        a.axis
            .total_cmp(&b.axis)
            .then_with(|| a.family.unwrap_or(0.0).total_cmp(&b.family.unwrap_or(0.0)))
            .then_with(|| a.method.cmp(&b.method))
    });
    Ok(SweepResult {
        name: spec.name.clone(),
        axis: spec.axis.param,
        family: spec.family.as_ref().map(|f| f.param),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        SweepSpec {
            name: "t".into(),
            base: HybridSystem::reference(),
            gain_convention: GainConvention::Amplitude,
            half_duplex: false,
            axis: Axis::linspace(SweepParam::DistD2, 1.0, 4.0, 4),
            family: Some(Axis::new(SweepParam::PathlossExp, vec![3.0, 2.0])),
            methods: vec![SweepMethod::PlcOnlyAnalytic, SweepMethod::Analytic],
            mc: McSettings::new(1000, 1),
            quad_order: 16,
            rel_tol: 1e-8,
        }
    }

    #[test]
    fn rows_are_sorted_and_complete() {
        let r = run_sweep(&small_spec()).unwrap();
        assert_eq!(r.rows.len(), 4 * 2 * 2);
        assert_eq!(r.rows[0].family, Some(2.0));
        assert_eq!(r.rows[0].method, SweepMethod::Analytic);
        assert!(r.rows.windows(2).all(|w| w[0].axis <= w[1].axis));
        assert!(r
            .rows
            .iter()
            .all(|row| row.capacity >= 0.0 && row.error.is_none()));
    }

    #[test]
    fn spec_validation() {
        let mut s = small_spec();
        s.axis.values = vec![];
        assert!(run_sweep(&s).is_err());
        let mut s = small_spec();
        s.axis.values = vec![1.0, 1.0];
        assert!(run_sweep(&s).is_err());
        let mut s = small_spec();
        s.family = Some(Axis::new(SweepParam::PathlossExp, vec![2.0, 2.0]));
        assert!(run_sweep(&s).is_err());
        let mut s = small_spec();
        s.family = Some(Axis::new(SweepParam::DistD2, vec![2.0]));
        assert!(run_sweep(&s).is_err());
        let mut s = small_spec();
        s.methods.clear();
        assert!(run_sweep(&s).is_err());
    }

    #[test]
    fn total_distance_splits_evenly() {
        let s = SweepSpec {
            axis: Axis::new(SweepParam::TotalDistance, vec![100.0]),
            family: None,
            ..small_spec()
        };
        let sys = s.system_at(100.0, None);
        assert_eq!(sys.plc.length_m, 50.0);
        assert_eq!(sys.wireless.dist_m, 50.0);
        assert_eq!(plc_baseline(&sys).length_m, 100.0);
        assert_eq!(plc_baseline(&sys).noise_var, sys.wireless.noise_var);
    }

    #[test]
    fn failing_point_is_annotated() {
        // a negative path-loss exponent is rejected for the hybrid link only
        let s = SweepSpec {
            family: Some(Axis::new(SweepParam::PathlossExp, vec![2.0, -1.0])),
            ..small_spec()
        };
        let r = run_sweep(&s).unwrap();
        assert_eq!(r.rows.len(), 16);
        let bad: Vec<_> = r.errors().collect();
        assert_eq!(bad.len(), 4);
        assert!(bad
            .iter()
            .all(|x| x.family == Some(-1.0) && x.method == SweepMethod::Analytic));
        assert!(bad.iter().all(|x| x.capacity.is_nan()));
    }

    #[test]
    fn crossover_interpolates() {
        let mk = |axis, m, c| SweepRow {
            axis,
            family: None,
            method: m,
            capacity: c,
            std_err: 0.0,
            error: None,
        };
        let r = SweepResult {
            name: "x".into(),
            axis: SweepParam::TotalDistance,
            family: None,
            rows: vec![
                mk(0.0, SweepMethod::Analytic, 0.0),
                mk(0.0, SweepMethod::PlcOnlyAnalytic, 1.0),
                mk(10.0, SweepMethod::Analytic, 1.0),
                mk(10.0, SweepMethod::PlcOnlyAnalytic, 0.0),
            ],
        };
        let x = r
            .crossover(None, SweepMethod::Analytic, SweepMethod::PlcOnlyAnalytic)
            .unwrap();
        assert!((x - 5.0).abs() < 1e-12);
        assert!(r
            .crossover(None, SweepMethod::PlcOnlyAnalytic, SweepMethod::Analytic)
            .is_none());
    }

    #[test]
    fn parse_names() {
        for p in SweepParam::ALL {
            assert_eq!(p.name().parse::<SweepParam>().unwrap(), p);
        }
        for m in SweepMethod::ALL {
            assert_eq!(m.name().parse::<SweepMethod>().unwrap(), m);
        }
        assert!("distance".parse::<SweepParam>().is_err());
    }
}
