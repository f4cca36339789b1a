//! Sweep spec files: a config file with extra sweep keys.
//!
//! ```toml
//! name = "d2-sweep"            # output file stem (default: the file stem)
//! preset = "fig3"              # optional starting point
//! axis = "dist_d2"             # swept parameter
//! axis-range = [1.0, 30.0]     # or axis-values = [1, 2, 5, 10]
//! points = 30                  # grid size for axis-range (default 20)
//! axis-scale = "linear"        # or "log"
//! family = "pathloss_exp"      # optional curve parameter
//! family-values = [2.0, 3.0]
//! methods = ["analytic", "monte_carlo"]
//! dist-d1 = 25.0               # any configuration key
//! ```

use std::path::Path;

use super::config::{unknown_key, Layer};
use crate::capacity::{McSettings, DEFAULT_QUAD_ORDER, DEFAULT_REL_TOL};
use crate::channel::GainConvention;
use crate::error::{Error, Result};
use crate::experiments::{preset, Axis, SweepMethod, SweepParam, SweepSpec};
use crate::HybridSystem;

const SWEEP_KEYS: [&str; 9] = [
    "name",
    "preset",
    "axis",
    "axis-values",
    "axis-range",
    "points",
    "axis-scale",
    "family",
    "family-values",
];

/// Read a spec file, returning the sweep and the configuration keys it sets.
pub fn load(path: &Path) -> Result<(SweepSpec, Layer)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::param("spec", format!("{}: {e}", path.display())))?;
    parse(path, &text)
}

pub fn parse(path: &Path, text: &str) -> Result<(SweepSpec, Layer)> {
    let (layer, rest) = Layer::from_toml(path, text)?;
    let mut rest: toml::Table = rest
        .into_iter()
        .map(|(k, v)| (k.replace('_', "-"), v))
        .collect();
    let methods = rest.remove("methods");
    if let Some(name) = rest.keys().find(|k| !SWEEP_KEYS.contains(&k.as_str())) {
        return Err(unknown_key(path, name));
    }
    let ctx = |what: &str| format!("{}: {what}", path.display());
    let string = |key: &str| -> Result<Option<String>> {
        match rest.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(Error::param(
                "spec",
                ctx(&format!("`{key}` must be a string")),
            )),
        }
    };
    let numbers = |key: &str| -> Result<Option<Vec<f64>>> {
        let Some(v) = rest.get(key) else {
            return Ok(None);
        };
        let bad = || Error::param("spec", ctx(&format!("`{key}` must be an array of numbers")));
        let arr = v.as_array().ok_or_else(bad)?;
        arr.iter()
            .map(|x| {
                x.as_float()
                    .or_else(|| x.as_integer().map(|i| i as f64))
                    .ok_or_else(bad)
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    };

    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    let name = string("name")?
        .or(stem)
        .unwrap_or_else(|| "sweep".to_string());
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(Error::param(
            "spec",
            ctx("`name` must be a plain file stem"),
        ));
    }
    let mut spec = match string("preset")? {
        Some(p) => preset(&p, &HybridSystem::reference())?,
        None => SweepSpec {
            name: String::new(),
            base: HybridSystem::reference(),
            gain_convention: GainConvention::Amplitude,
            half_duplex: false,
            axis: Axis::new(SweepParam::SrcPower, vec![]),
            family: None,
            methods: vec![SweepMethod::Analytic],
            mc: McSettings::default(),
            quad_order: DEFAULT_QUAD_ORDER,
            rel_tol: DEFAULT_REL_TOL,
        },
    };
    spec.name = name;

    if let Some(axis) = string("axis")? {
        spec.axis.param = axis.parse()?;
        spec.axis.values.clear();
    }
    let points = match rest.get("points") {
        None => 20,
        Some(v) => v
            .as_integer()
            .and_then(|i| usize::try_from(i).ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::param("spec", ctx("`points` must be a positive integer")))?,
    };
    match (numbers("axis-values")?, numbers("axis-range")?) {
        (Some(_), Some(_)) => {
            return Err(Error::param(
                "spec",
                ctx("give either `axis-values` or `axis-range`"),
            ))
        }
        (Some(values), None) => spec.axis.values = values,
        (None, Some(range)) => {
            let [lo, hi] = range[..] else {
                return Err(Error::param(
                    "spec",
                    ctx("`axis-range` must be [low, high]"),
                ));
            };
            spec.axis = match string("axis-scale")?.as_deref() {
                None | Some("linear") => Axis::linspace(spec.axis.param, lo, hi, points),
                Some("log") if lo > 0.0 && hi > 0.0 => {
                    Axis::logspace(spec.axis.param, lo, hi, points)
                }
                Some("log") => {
                    return Err(Error::param(
                        "spec",
                        ctx("a log axis needs a positive range"),
                    ))
                }
                Some(other) => {
                    return Err(Error::param(
                        "spec",
                        ctx(&format!(
                            "`axis-scale` must be linear or log, got `{other}`"
                        )),
                    ))
                }
            };
        }
        (None, None) => {}
    }
    if spec.axis.values.is_empty() {
        return Err(Error::param(
            "spec",
            ctx("no axis grid: set `axis` with `axis-values` or `axis-range`"),
        ));
    }

    match (string("family")?, numbers("family-values")?) {
        (Some(param), Some(values)) => spec.family = Some(Axis::new(param.parse()?, values)),
        (Some(_), None) => return Err(Error::param("spec", ctx("`family` needs `family-values`"))),
        (None, Some(values)) => match &mut spec.family {
            Some(family) => family.values = values,
            None => return Err(Error::param("spec", ctx("`family-values` needs `family`"))),
        },
        (None, None) => {}
    }

    if let Some(methods) = methods {
        let bad = || Error::param("spec", ctx("`methods` must be an array of method names"));
        spec.methods = methods
            .as_array()
            .ok_or_else(bad)?
            .iter()
            .map(|m| m.as_str().ok_or_else(bad)?.parse())
            .collect::<Result<_>>()?;
    }
    Ok((spec, layer))
}
