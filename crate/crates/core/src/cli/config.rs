//! Flat `key = value` configuration shared by the config file and the
//! command-line flags.
//!
//! Every key is also a `--flag` of the same name. Layers are applied in
//! order (built-in defaults, config file, command line), each one replacing
//! the values it mentions. Within one layer `relay-gain` and `relay-gain-db`
//! are mutually exclusive; a dB gain is converted with the effective
//! `gain-convention` after all layers are applied.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use crate::capacity::{McSettings, DEFAULT_QUAD_ORDER, DEFAULT_REL_TOL};
use crate::channel::GainConvention;
use crate::error::{Error, Result};
use crate::specfun::MAX_ORDER;
use crate::HybridSystem;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "HYBRID_RELAY_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Real,
    Count,
    Flag,
    Convention,
}

#[derive(Debug, PartialEq, Eq)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: Kind, help: &'static str) -> Key {
    Key { name, kind, help }
}

pub const KEYS: &[Key] = &[
    key("src-power", Kind::Real, "Source transmit power P_s [W] (default 1)"),
    key("relay-power", Kind::Real, "Relay transmit power P_r [W] (default 1)"),
    key("relay-gain", Kind::Real, "Relay amplitude gain G, linear (default 1)"),
    key("relay-gain-db", Kind::Real, "Relay gain in dB, converted per gain-convention"),
    key(
        "gain-convention",
        Kind::Convention,
        "dB-to-linear gain mapping: amplitude (10^(dB/20)) or power (10^(dB/10)) [default: amplitude]",
    ),
    key("freq-hz", Kind::Real, "PLC operating frequency f [Hz] (default 500e3)"),
    key("atten-k", Kind::Real, "Attenuation exponent k (default 0.7)"),
    key("atten-a0", Kind::Real, "Attenuation constant a0 [Np/m] (default 2.03e-3)"),
    key("atten-a1", Kind::Real, "Attenuation constant a1 [Np/m/Hz^k] (default 3.75e-7)"),
    key("dist-d1", Kind::Real, "Source-to-relay cable length d1 [m] (default 10)"),
    key("fading-mu-db", Kind::Real, "Mean of 10 log10|h_P| [dB] (default 0)"),
    key("fading-sigma-db", Kind::Real, "Std. dev. of 10 log10|h_P| [dB] (default 3)"),
    key("relay-noise-var", Kind::Real, "Relay noise variance [W] (default 0.1)"),
    key("dist-d2", Kind::Real, "Relay-to-destination distance d2 [m] (default 1)"),
    key("pathloss-exp", Kind::Real, "Wireless path-loss exponent m (default 2)"),
    key("dest-noise-var", Kind::Real, "Destination noise variance [W] (default 0.1)"),
    key("mc-samples", Kind::Count, "Monte Carlo sample count, e.g. 1e6 (default 1e6)"),
    key("seed", Kind::Count, "Monte Carlo seed (default 0)"),
    key("workers", Kind::Count, "Worker threads, 0 = all cores (default 0); never changes results"),
    key("quad-order", Kind::Count, "Gauss-Hermite order, 1..=200 (default 32)"),
    key("rel-tol", Kind::Real, "Relative tolerance of the capacity integral (default 1e-8)"),
    key("half-duplex", Kind::Flag, "Apply the 1/2 factor to the direct power-line capacity (default false)"),
];

pub fn lookup(name: &str) -> Option<&'static Key> {
    let name = name.replace('_', "-");
    KEYS.iter().find(|k| k.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Real(f64),
    Count(u64),
    Flag(bool),
    Convention(GainConvention),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(v) => write!(f, "{v}"),
            Value::Count(v) => write!(f, "{v}"),
            Value::Flag(v) => write!(f, "{v}"),
            Value::Convention(c) => f.write_str(c.name()),
        }
    }
}

const MAX_EXACT_COUNT: f64 = 9_007_199_254_740_992.0; // 2^53

/// Parse a command-line value. Counts accept scientific notation (`1e5`).
pub fn parse_value(key: &'static Key, text: &str) -> Result<Value> {
    let text = text.trim();
    let bad = |what: &str| Error::param(key.name, format!("`{text}` is not {what}"));
    match key.kind {
        Kind::Real => text
            .parse::<f64>()
            .map(Value::Real)
            .map_err(|_| bad("a number")),
        Kind::Count => {
            if let Ok(v) = text.parse::<u64>() {
                return Ok(Value::Count(v));
            }
            match text.parse::<f64>() {
                Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= MAX_EXACT_COUNT => {
                    Ok(Value::Count(v as u64))
                }
                _ => Err(bad("a non-negative integer")),
            }
        }
        Kind::Flag => match text {
            "true" | "yes" | "on" | "1" => Ok(Value::Flag(true)),
            "false" | "no" | "off" | "0" => Ok(Value::Flag(false)),
            _ => Err(bad("true or false")),
        },
        Kind::Convention => text
            .parse::<GainConvention>()
            .map(Value::Convention)
            .map_err(|_| bad("`amplitude` or `power`")),
    }
}

fn from_toml(key: &'static Key, value: &toml::Value) -> Result<Value> {
    let bad = |what: &str| Error::param(key.name, format!("`{value}` is not {what}"));
    match (key.kind, value) {
        (Kind::Real, toml::Value::Float(v)) => Ok(Value::Real(*v)),
        (Kind::Real, toml::Value::Integer(v)) => Ok(Value::Real(*v as f64)),
        (Kind::Real, _) => Err(bad("a number")),
        (Kind::Count, toml::Value::Integer(v)) => u64::try_from(*v)
            .map(Value::Count)
            .map_err(|_| bad("a non-negative integer")),
        (Kind::Count, toml::Value::Float(v)) => parse_value(key, &v.to_string()),
        (Kind::Count, toml::Value::String(s)) => parse_value(key, s),
        (Kind::Count, _) => Err(bad("a non-negative integer")),
        (Kind::Flag, toml::Value::Boolean(b)) => Ok(Value::Flag(*b)),
        (Kind::Flag, _) => Err(bad("true or false")),
        (Kind::Convention, toml::Value::String(s)) => parse_value(key, s),
        (Kind::Convention, _) => Err(bad("`amplitude` or `power`")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    File(PathBuf),
    CommandLine,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::File(p) => write!(f, "{}", p.display()),
            Source::CommandLine => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub key: &'static Key,
    pub value: Value,
    /// How often the key was given in its layer; the last value wins.
    pub occurrences: usize,
}

/// The assignments of one source, at most one per key.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub source: Source,
    pub assignments: Vec<Assignment>,
}

impl Layer {
    pub fn new(source: Source, assignments: Vec<Assignment>) -> Result<Self> {
        let has = |name| assignments.iter().any(|a| a.key.name == name);
        if has("relay-gain") && has("relay-gain-db") {
            return Err(Error::param(
                "relay-gain",
                format!("`relay-gain` and `relay-gain-db` both given ({source}); use one"),
            ));
        }
        Ok(Layer {
            source,
            assignments,
        })
    }

    /// Split a parsed TOML document into config assignments and the
    /// remaining (non-config) keys.
    pub fn from_toml(path: &Path, text: &str) -> Result<(Self, toml::Table)> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            Error::param("config", format!("{}: {}", path.display(), e.message()))
        })?;
        let mut assignments = Vec::new();
        let mut rest = toml::Table::new();
        for (name, value) in table {
            if value.is_table() {
                return Err(Error::param(
                    "config",
                    format!(
                        "{}: `[{name}]` sections are not supported, the file is flat",
                        path.display()
                    ),
                ));
            }
            match lookup(&name) {
                Some(key) => {
                    if assignments
                        .iter()
                        .any(|a: &Assignment| a.key.name == key.name)
                    {
                        return Err(Error::param(
                            key.name,
                            format!("{}: given twice (as `{name}`)", path.display()),
                        ));
                    }
                    let value = from_toml(key, &value)?;
                    assignments.push(Assignment {
                        key,
                        value,
                        occurrences: 1,
                    });
                }
                None => {
                    rest.insert(name, value);
                }
            }
        }
        Ok((
            Layer::new(Source::File(path.to_path_buf()), assignments)?,
            rest,
        ))
    }

    pub fn get(&self, name: &str) -> Option<&Assignment> {
        self.assignments.iter().find(|a| a.key.name == name)
    }
}

/// Read a config file that may only contain configuration keys.
pub fn read_config_file(path: &Path) -> Result<Layer> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (layer, rest) = Layer::from_toml(path, &text)?;
    if let Some(name) = rest.keys().next() {
        return Err(unknown_key(path, name));
    }
    Ok(layer)
}

pub fn unknown_key(path: &Path, name: &str) -> Error {
    let valid: Vec<_> = KEYS.iter().map(|k| k.name).collect();
    Error::param(
        "config",
        format!(
            "{}: unknown key `{name}`; valid keys are {}",
            path.display(),
            valid.join(", ")
        ),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum GainSetting {
    Linear(f64),
    Db(f64),
}

/// Effective parameters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub system: HybridSystem,
    pub gain_convention: GainConvention,
    pub half_duplex: bool,
    pub mc: McSettings,
    pub quad_order: usize,
    pub rel_tol: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            system: HybridSystem::reference(),
            gain_convention: GainConvention::Amplitude,
            half_duplex: false,
            mc: McSettings::default(),
            quad_order: DEFAULT_QUAD_ORDER,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

impl Config {
    /// Apply `layers` in order on top of `self`, then check every value.
    pub fn apply(mut self, layers: &[Layer]) -> Result<Self> {
        let mut gain = None;
        for layer in layers {
            for a in &layer.assignments {
                self.set(a, &mut gain)?;
            }
        }
        match gain {
            Some(GainSetting::Linear(g)) => self.system.relay_gain = g,
            Some(GainSetting::Db(db)) => {
                if !db.is_finite() {
                    return Err(Error::param("relay-gain-db", format!("{db} is not finite")));
                }
                self.system.relay_gain = self.gain_convention.to_linear(db);
            }
            None => {}
        }
        self.validate()?;
        Ok(self)
    }

    fn set(&mut self, a: &Assignment, gain: &mut Option<GainSetting>) -> Result<()> {
        let s = &mut self.system;
        match (a.key.name, a.value) {
            ("src-power", Value::Real(v)) => s.src_power_w = v,
            ("relay-power", Value::Real(v)) => s.relay_power_w = v,
            ("relay-gain", Value::Real(v)) => *gain = Some(GainSetting::Linear(v)),
            ("relay-gain-db", Value::Real(v)) => *gain = Some(GainSetting::Db(v)),
            ("gain-convention", Value::Convention(c)) => self.gain_convention = c,
            ("freq-hz", Value::Real(v)) => s.plc.freq_hz = v,
            ("atten-k", Value::Real(v)) => s.plc.atten_k = v,
            ("atten-a0", Value::Real(v)) => s.plc.atten_a0 = v,
            ("atten-a1", Value::Real(v)) => s.plc.atten_a1 = v,
            ("dist-d1", Value::Real(v)) => s.plc.length_m = v,
            ("fading-mu-db", Value::Real(v)) => s.plc.fading_mu_db = v,
            ("fading-sigma-db", Value::Real(v)) => s.plc.fading_sigma_db = v,
            ("relay-noise-var", Value::Real(v)) => s.plc.noise_var = v,
            ("dist-d2", Value::Real(v)) => s.wireless.dist_m = v,
            ("pathloss-exp", Value::Real(v)) => s.wireless.pathloss_exp = v,
            ("dest-noise-var", Value::Real(v)) => s.wireless.noise_var = v,
            ("mc-samples", Value::Count(v)) => self.mc.n_samples = v,
            ("seed", Value::Count(v)) => self.mc.seed = v,
            ("workers", Value::Count(v)) => self.mc.workers = count_to_usize(a.key, v)?,
            ("quad-order", Value::Count(v)) => self.quad_order = count_to_usize(a.key, v)?,
            ("rel-tol", Value::Real(v)) => self.rel_tol = v,
            ("half-duplex", Value::Flag(v)) => self.half_duplex = v,
            (name, value) => unreachable!("value {value:?} does not match key {name}"),
        }
        Ok(())
    }

    /// Range checks, with messages naming the config key.
    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        let finite = |name: &'static str, v: f64, lo: f64, strict: bool| {
            let ok = v.is_finite() && if strict { v > lo } else { v >= lo };
            if ok {
                Ok(())
            } else {
                let op = if strict { ">" } else { ">=" };
                Err(Error::param(
                    name,
                    format!("{v} must be finite and {op} {lo}"),
                ))
            }
        };
        finite("src-power", s.src_power_w, 0.0, false)?;
        finite("relay-power", s.relay_power_w, 0.0, false)?;
        finite("relay-gain", s.relay_gain, 0.0, false)?;
        finite("freq-hz", s.plc.freq_hz, 0.0, true)?;
        finite("atten-k", s.plc.atten_k, f64::NEG_INFINITY, false)?;
        finite("atten-a0", s.plc.atten_a0, 0.0, false)?;
        finite("atten-a1", s.plc.atten_a1, 0.0, false)?;
        finite("dist-d1", s.plc.length_m, 0.0, false)?;
        finite("fading-mu-db", s.plc.fading_mu_db, f64::NEG_INFINITY, false)?;
        finite("fading-sigma-db", s.plc.fading_sigma_db, 0.0, false)?;
        finite("relay-noise-var", s.plc.noise_var, 0.0, true)?;
        finite("dist-d2", s.wireless.dist_m, 0.0, true)?;
        finite("pathloss-exp", s.wireless.pathloss_exp, 0.0, false)?;
        finite("dest-noise-var", s.wireless.noise_var, 0.0, true)?;
        finite("rel-tol", self.rel_tol, 0.0, true)?;
        if self.rel_tol >= 1.0 {
            return Err(Error::param(
                "rel-tol",
                format!("{} must be < 1", self.rel_tol),
            ));
        }
        if self.mc.n_samples == 0 {
            return Err(Error::param("mc-samples", "must be at least 1"));
        }
        if !(1..=MAX_ORDER).contains(&self.quad_order) {
            return Err(Error::param(
                "quad-order",
                format!("{} is outside 1..={MAX_ORDER}", self.quad_order),
            ));
        }
        Ok(())
    }

    /// Render as a config file that parses back to the same parameters.
    /// The relay gain is written in linear form.
    pub fn to_toml(&self) -> String {
        let s = &self.system;
        let mut out = String::from("# hybrid-relay configuration\n");
        let mut real = |name: &str, v: f64| {
            // `{:?}` is the shortest representation that round-trips and is valid TOML
            let _ = writeln!(out, "{name} = {v:?}");
        };
        real("src-power", s.src_power_w);
        real("relay-power", s.relay_power_w);
        real("relay-gain", s.relay_gain);
        real("freq-hz", s.plc.freq_hz);
        real("atten-k", s.plc.atten_k);
        real("atten-a0", s.plc.atten_a0);
        real("atten-a1", s.plc.atten_a1);
        real("dist-d1", s.plc.length_m);
        real("fading-mu-db", s.plc.fading_mu_db);
        real("fading-sigma-db", s.plc.fading_sigma_db);
        real("relay-noise-var", s.plc.noise_var);
        real("dist-d2", s.wireless.dist_m);
        real("pathloss-exp", s.wireless.pathloss_exp);
        real("dest-noise-var", s.wireless.noise_var);
        real("rel-tol", self.rel_tol);
        let _ = writeln!(out, "gain-convention = \"{}\"", self.gain_convention.name());
        let _ = writeln!(out, "half-duplex = {}", self.half_duplex);
        let _ = writeln!(out, "mc-samples = {}", count_to_toml(self.mc.n_samples));
        let _ = writeln!(out, "seed = {}", count_to_toml(self.mc.seed));
        let _ = writeln!(out, "workers = {}", self.mc.workers);
        let _ = writeln!(out, "quad-order = {}", self.quad_order);
        out
    }
}

fn count_to_usize(key: &'static Key, v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::param(key.name, format!("{v} is too large")))
}

/// TOML integers are signed 64-bit; larger counts are written as strings.
fn count_to_toml(v: u64) -> String {
    if i64::try_from(v).is_ok() {
        v.to_string()
    } else {
        format!("\"{v}\"")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(text: &str) -> Result<Layer> {
        let (layer, rest) = Layer::from_toml(Path::new("test.toml"), text)?;
        match rest.keys().next() {
            Some(name) => Err(unknown_key(Path::new("test.toml"), name)),
            None => Ok(layer),
        }
    }

    #[test]
    fn defaults_are_the_reference_system() {
        let c = Config::default().apply(&[]).unwrap();
        assert_eq!(c.system, HybridSystem::reference());
        assert_eq!(c.mc.n_samples, 1_000_000);
    }

    #[test]
    fn round_trip() {
        let l = layer(
            "src-power = 0.3\nrelay_gain_db = 7.5\ngain-convention = \"power\"\nseed = 18446744073709551615\n\
             mc-samples = 1e5\nhalf-duplex = true # comment\natten-a1 = 3.75e-7\n",
        );
        // TOML rejects integers beyond i64, the string form is accepted instead
        assert!(l.is_err());
        let l = layer(
            "src-power = 0.3\nrelay_gain_db = 7.5\ngain-convention = \"power\"\nseed = \"18446744073709551615\"\n\
             mc-samples = 1e5\nhalf-duplex = true # comment\natten-a1 = 3.75e-7\n",
        )
        .unwrap();
        let c = Config::default().apply(&[l]).unwrap();
        assert_eq!(c.mc.seed, u64::MAX);
        assert_eq!(c.mc.n_samples, 100_000);
        assert_eq!(c.system.relay_gain, 10f64.powf(0.75));
        let again = Config::default()
            .apply(&[layer(&c.to_toml()).unwrap()])
            .unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn unknown_and_conflicting_keys() {
        let e = layer("src-pwr = 1").unwrap_err().to_string();
        assert!(
            e.contains("unknown key `src-pwr`") && e.contains("src-power"),
            "{e}"
        );
        let e = layer("relay-gain = 2\nrelay-gain-db = 6")
            .unwrap_err()
            .to_string();
        assert!(e.contains("relay-gain-db"), "{e}");
        assert!(layer("[plc]\nfreq-hz = 1").is_err());
        assert!(layer("src-power = \"one\"").is_err());
        assert!(layer("src-power = 1\nsrc_power = 2").is_err());
    }

    #[test]
    fn later_layer_gain_replaces_earlier() {
        let file = layer("relay-gain = 4").unwrap();
        let key = lookup("relay-gain-db").unwrap();
        let cli = Layer::new(
            Source::CommandLine,
            vec![Assignment {
                key,
                value: Value::Real(20.0),
                occurrences: 1,
            }],
        )
        .unwrap();
        let c = Config::default().apply(&[file, cli]).unwrap();
        assert!((c.system.relay_gain - 10.0).abs() < 1e-12);
    }

    #[test]
    fn range_checks_name_the_key() {
        for (text, name) in [
            ("src-power = -1", "src-power"),
            ("dest-noise-var = 0", "dest-noise-var"),
            ("quad-order = 201", "quad-order"),
            ("mc-samples = 0", "mc-samples"),
            ("rel-tol = 0", "rel-tol"),
        ] {
            let e = Config::default()
                .apply(&[layer(text).unwrap()])
                .unwrap_err();
            assert!(
                matches!(e, Error::Parameter { name: n, .. } if n == name),
                "{text}: {e}"
            );
        }
    }

    #[test]
    fn count_parsing() {
        let k = lookup("mc-samples").unwrap();
        assert_eq!(parse_value(k, "1e5").unwrap(), Value::Count(100_000));
        assert_eq!(parse_value(k, "250000").unwrap(), Value::Count(250_000));
        assert!(parse_value(k, "1.5").is_err());
        assert!(parse_value(k, "-3").is_err());
    }
}
