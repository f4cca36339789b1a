use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ArgMatches;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Config, Layer};
use super::{spec_file, Failure, Inputs, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_VALIDATION};
use crate::capacity::{
    analytic_hybrid_capacity, analytic_hybrid_capacity_with, analytic_plc_capacity,
    mc_hybrid_capacity, RelayNoiseExponent,
};
use crate::experiments::{
    plc_baseline, preset, run_sweep, to_csv, to_svg, SweepMethod, SweepParam, PRESETS,
};
use crate::specfun::gauss_hermite;
use crate::{HybridSystem, McSettings};

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .and_then(|()| out.flush())
        .map_err(|e| Failure::new(EXIT_IO, format!("writing output: {e}")))
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `E|h_P|²` for the log-normal fading of `sys`.
fn mean_fading_power(sys: &HybridSystem) -> f64 {
    let (mu, sigma) = sys.plc.power_gain_db_params();
    let s = sigma * std::f64::consts::LN_10 / 10.0;
    10f64.powf(mu / 10.0) * (0.5 * s * s).exp()
}

fn describe_sources(inputs: &Inputs, report: &mut String) {
    match &inputs.config_path {
        Some(p) => {
            let n = inputs.file.as_ref().map_or(0, |l| l.assignments.len());
            let _ = writeln!(report, "config file: {} ({n} keys)", p.display());
        }
        None => report.push_str("config file: none\n"),
    }
    for a in &inputs.cli.assignments {
        let _ = write!(
            report,
            "override: {} = {} (command line",
            a.key.name, a.value
        );
        if a.occurrences > 1 {
            let _ = write!(report, ", given {} times, last value wins", a.occurrences);
        }
        report.push_str(")\n");
    }
}

pub(super) fn eval(
    inputs: &Inputs,
    m: &ArgMatches,
    out: &mut dyn Write,
    _err: &mut dyn Write,
) -> Result<(), Failure> {
    let cfg = inputs.config()?;
    if m.get_flag("dump-config") {
        return emit(out, &cfg.to_toml());
    }
    let sys = cfg.system;
    let rule = gauss_hermite::<f64>(cfg.quad_order)?;
    let hybrid = analytic_hybrid_capacity(&sys, &rule, cfg.rel_tol)?.value();
    let baseline = plc_baseline(&sys);
    let direct = analytic_plc_capacity(&baseline, sys.src_power_w, &rule, cfg.half_duplex)?.value();
    let mc = if m.get_flag("mc") {
        Some(mc_hybrid_capacity(&sys, &cfg.mc)?)
    } else {
        None
    };

    let alpha = sys.plc.attenuation();
    let cable = sys.plc.power_gain();
    let path = sys.wireless.path_gain();
    let fading = mean_fading_power(&sys);
    let relay_snr = sys.first_hop_scale() * fading / sys.plc.noise_var;
    let relayed_noise_snr = sys.second_hop_scale() * sys.plc.noise_var / sys.wireless.noise_var;

    let mut s = String::new();
    if m.get_flag("csv") {
        s.push_str(
            "alpha_np_per_m,plc_power_gain,wireless_path_gain,mean_relay_snr,capacity_analytic,\
             capacity_plc_only,capacity_mc,mc_std_err\n",
        );
        let (c, se) = mc.map_or((String::new(), String::new()), |e| {
            (
                format!("{:e}", e.bits_per_s_per_hz),
                format!("{:e}", e.std_error),
            )
        });
        let _ = writeln!(
            s,
            "{alpha:e},{cable:e},{path:e},{relay_snr:e},{hybrid:e},{direct:e},{c},{se}"
        );
        return emit(out, &s);
    }

    describe_sources(inputs, &mut s);
    let _ = writeln!(
        s,
        "\nsystem\n  source power         P_s  = {} W\n  relay power          P_r  = {} W\n  \
         relay gain           G    = {} ({:.3} dB, {} convention)\n  \
         cable length         d1   = {} m\n  wireless distance    d2   = {} m\n  \
         path-loss exponent   m    = {}\n  fading (10 log10|h|) mu = {} dB, sigma = {} dB\n  \
         noise variances      relay = {} W, destination = {} W",
        sys.src_power_w,
        sys.relay_power_w,
        sys.relay_gain,
        cfg.gain_convention.to_db(sys.relay_gain),
        cfg.gain_convention.name(),
        sys.plc.length_m,
        sys.wireless.dist_m,
        sys.wireless.pathloss_exp,
        sys.plc.fading_mu_db,
        sys.plc.fading_sigma_db,
        sys.plc.noise_var,
        sys.wireless.noise_var,
    );
    let _ = writeln!(
        s,
        "\nlink budget\n  attenuation          alpha = {alpha:.6e} Np/m\n  \
         cable power gain     e^(-2 alpha d1) = {cable:.6e} ({:.3} dB)\n  \
         wireless path gain   d2^-m = {path:.6e} ({:.3} dB)\n  \
         mean fading gain     E|h_P|^2 = {fading:.6e}\n  \
         mean relay input SNR {relay_snr:.6e} ({:.3} dB)\n  \
         relayed noise SNR    G^2 P_r d2^-m sigma_r^2 / sigma_d^2 = {relayed_noise_snr:.6e}",
        db(cable),
        db(path),
        db(relay_snr),
    );
    let _ = writeln!(
        s,
        "\ncapacity [bits/s/Hz]\n  hybrid, analytic     {hybrid:.10}\n  \
         direct power line    {direct:.10} (cable {} m{})",
        baseline.length_m,
        if cfg.half_duplex { ", halved" } else { "" },
    );
    if let Some(e) = mc {
        let _ = writeln!(
            s,
            "  hybrid, Monte Carlo  {:.10} +/- {:.3e} (95% CI, {} samples, seed {})",
            e.bits_per_s_per_hz,
            1.96 * e.std_error,
            e.samples,
            cfg.mc.seed,
        );
    }
    emit(out, &s)
}

/// Parse a list given on the command line.
fn list<T: std::str::FromStr>(m: &ArgMatches, name: &str) -> Result<Option<Vec<T>>, Failure> {
    let Some(items) = m.get_many::<String>(name) else {
        return Ok(None);
    };
    items
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Failure::new(EXIT_CONFIG, format!("--{name}: cannot parse `{s}`")))
        })
        .collect::<Result<Vec<T>, _>>()
        .map(Some)
}

pub(super) fn sweep(
    inputs: &Inputs,
    m: &ArgMatches,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let target = m.get_one::<String>("target").expect("required");
    let (mut spec, spec_layer) = if PRESETS.contains(&target.as_str()) {
        (preset(target, &HybridSystem::reference())?, None)
    } else if Path::new(target).is_file() {
        let (spec, layer) = spec_file::load(Path::new(target))?;
        (spec, Some(layer))
    } else {
        return Err(Failure::new(
            EXIT_CONFIG,
            format!(
                "unknown preset `{target}`: expected one of {} or the path of a sweep spec file",
                PRESETS.join(", ")
            ),
        ));
    };

    // preset values < config file < spec file < command line
    let start = Config {
        system: spec.base,
        gain_convention: spec.gain_convention,
        half_duplex: spec.half_duplex,
        mc: spec.mc,
        quad_order: spec.quad_order,
        rel_tol: spec.rel_tol,
    };
    let layers: Vec<Layer> = inputs
        .file
        .iter()
        .cloned()
        .chain(spec_layer)
        .chain([inputs.cli.clone()])
        .collect();
    let cfg = start.apply(&layers)?;
    spec.base = cfg.system;
    spec.gain_convention = cfg.gain_convention;
    spec.half_duplex = cfg.half_duplex;
    spec.mc = cfg.mc;
    spec.quad_order = cfg.quad_order;
    spec.rel_tol = cfg.rel_tol;

    if let Some(methods) = list::<String>(m, "methods")? {
        spec.methods = methods
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()?;
    }
    if m.get_flag("mc") {
        spec.methods.push(SweepMethod::MonteCarlo);
    }
    spec.methods.sort();
    spec.methods.dedup();
    if let Some(values) = list::<f64>(m, "axis-values")? {
        spec.axis.values = values;
    }
    if let Some(values) = list::<f64>(m, "family-values")? {
        match &mut spec.family {
            Some(f) => f.values = values,
            None => {
                return Err(Failure::new(
                    EXIT_CONFIG,
                    "--family-values: this sweep has no family",
                ))
            }
        }
    }
    if let Some(values) = list::<f64>(m, "gain-db")? {
        match &mut spec.family {
            Some(f) if f.param == SweepParam::RelayGainDb => f.values = values,
            _ if spec.axis.param == SweepParam::RelayGainDb => spec.axis.values = values,
            _ => {
                return Err(Failure::new(
                    EXIT_CONFIG,
                    "--gain-db: neither the axis nor the family of this sweep is relay_gain_db",
                ))
            }
        }
    }
    spec.validate()?;

    let result = run_sweep(&spec)?;
    let failed: Vec<_> = result.errors().collect();
    if !failed.is_empty() {
        let mut msg = String::new();
        for r in &failed {
            let family = r.family.map_or(String::new(), |f| format!(", family {f}"));
            let _ = writeln!(
                msg,
                "  axis {}{family}, {}: {}",
                r.axis,
                r.method,
                r.error.as_deref().unwrap_or_default()
            );
        }
        let _ = write!(err, "{msg}");
        return Err(Failure::new(
            EXIT_NUMERICAL,
            format!(
                "{} of {} points failed; no files written",
                failed.len(),
                result.rows.len()
            ),
        ));
    }

    let dir: &PathBuf = m.get_one("out-dir").expect("has default");
    let csv_path = dir.join(format!("{}.csv", spec.name));
    let svg_path = dir.join(format!("{}.svg", spec.name));
    write_all_or_nothing(
        dir,
        &[(&csv_path, to_csv(&result)), (&svg_path, to_svg(&result))],
    )?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "wrote {} ({} rows)",
        csv_path.display(),
        result.rows.len()
    );
    let _ = writeln!(s, "wrote {}", svg_path.display());
    let methods = result.methods();
    if methods.contains(&SweepMethod::Analytic) && methods.contains(&SweepMethod::PlcOnlyAnalytic) {
        for family in result.family_values() {
            let label = match (result.family, family) {
                (Some(p), Some(v)) => format!("{p} = {v}"),
                _ => "all".to_string(),
            };
            match result.crossover(family, SweepMethod::Analytic, SweepMethod::PlcOnlyAnalytic) {
                Some(x) => {
                    let _ = writeln!(
                        s,
                        "{label}: hybrid overtakes the direct power line at {} = {x:.4}",
                        result.axis
                    );
                }
                None => {
                    let _ = writeln!(s, "{label}: no crossover on this grid");
                }
            }
        }
    }
    emit(out, &s)
}

/// Write every file via a temporary name and rename at the end; on any
/// failure nothing is left behind.
fn write_all_or_nothing(dir: &Path, files: &[(&PathBuf, String)]) -> Result<(), Failure> {
    let io =
        |path: &Path, e: std::io::Error| Failure::new(EXIT_IO, format!("{}: {e}", path.display()));
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let partial = |p: &Path| {
        let mut name = p.file_name().unwrap_or_default().to_os_string();
        name.push(".partial");
        p.with_file_name(name)
    };
    let mut written: Vec<PathBuf> = Vec::new();
    let mut outcome = Ok(());
    for (path, contents) in files {
        let tmp = partial(path);
        if let Err(e) = fs::write(&tmp, contents) {
            let _ = fs::remove_file(&tmp);
            outcome = Err(io(&tmp, e));
            break;
        }
        written.push(tmp);
    }
    if outcome.is_ok() {
        let mut renamed: Vec<&PathBuf> = Vec::new();
        for (path, _) in files {
            if let Err(e) = fs::rename(partial(path), path) {
                outcome = Err(io(path, e));
                for p in renamed {
                    let _ = fs::remove_file(p);
                }
                break;
            }
            renamed.push(path);
        }
    }
    for tmp in written {
        let _ = fs::remove_file(tmp);
    }
    outcome
}

/// One point of the validation grid.
struct GridPoint {
    src_power_w: f64,
    dist_d1: f64,
    dist_d2: f64,
    pathloss_exp: f64,
    relay_gain_db: f64,
}

impl GridPoint {
    /// Log-uniform `P_s` in [0.01, 10] W, uniform `d1` in [1, 100] m,
    /// `d2` in [1, 20] m, `m` in [2, 3.5] and `G` in [0, 20] dB.
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        GridPoint {
            src_power_w: 10f64.powf(rng.random_range(-2.0..1.0)),
            dist_d1: rng.random_range(1.0..100.0),
            dist_d2: rng.random_range(1.0..20.0),
            pathloss_exp: rng.random_range(2.0..3.5),
            relay_gain_db: rng.random_range(0.0..20.0),
        }
    }

    fn describe(&self) -> String {
        format!(
            "src-power = {}, dist-d1 = {}, dist-d2 = {}, pathloss-exp = {}, relay-gain-db = {}",
            self.src_power_w, self.dist_d1, self.dist_d2, self.pathloss_exp, self.relay_gain_db
        )
    }
}

/// Stream of the grid generator; Monte Carlo blocks use the low streams.
const GRID_STREAM: u64 = u64::MAX;

pub(super) fn validate(
    inputs: &Inputs,
    m: &ArgMatches,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let cfg = inputs.config()?;
    let n: usize = *m.get_one("grid-size").expect("has default");
    let sign = if m.get_flag("corrupt-mgf-sign") {
        RelayNoiseExponent::Growing
    } else {
        RelayNoiseExponent::Decaying
    };
    if n == 0 {
        let _ = writeln!(err, "warning: grid size 0, nothing was validated");
        return emit(out, "# 0 points validated\n");
    }
    let rule = gauss_hermite::<f64>(cfg.quad_order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.mc.seed);
    rng.set_stream(GRID_STREAM);

    let mut s = String::from(
        "point,src_power_w,dist_d1,dist_d2,pathloss_exp,relay_gain_db,analytic,monte_carlo,std_err,dev_se,dev_pct,ok\n",
    );
    let mut failures = Vec::new();
    let (mut worst_se, mut worst_pct) = ((0.0f64, 0usize), (0.0f64, 0usize));
    for i in 0..n {
        let p = GridPoint::draw(&mut rng);
        let mut sys = cfg.system;
        sys.src_power_w = p.src_power_w;
        sys.plc.length_m = p.dist_d1;
        sys.wireless.dist_m = p.dist_d2;
        sys.wireless.pathloss_exp = p.pathloss_exp;
        sys.relay_gain = cfg.gain_convention.to_linear(p.relay_gain_db);
        let mc_settings = McSettings {
            seed: cfg.mc.seed.wrapping_add(i as u64),
            ..cfg.mc
        };
        let mc = mc_hybrid_capacity(&sys, &mc_settings)?;
        let analytic = analytic_hybrid_capacity_with(&sys, &rule, cfg.rel_tol, sign);
        let (a, dev_se, dev_pct, ok) = match &analytic {
            Ok(a) => {
                let a = a.value();
                let dev = (a - mc.bits_per_s_per_hz).abs();
                let se = mc.std_error;
                let dev_se = if se > 0.0 {
                    dev / se
                } else if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                let dev_pct = if a != 0.0 {
                    100.0 * dev / a.abs()
                } else if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                (a, dev_se, dev_pct, dev <= (3.0 * se).max(0.01 * a.abs()))
            }
            Err(_) => (f64::NAN, f64::INFINITY, f64::INFINITY, false),
        };
        if dev_se > worst_se.0 || i == 0 {
            worst_se = (dev_se, i);
        }
        if dev_pct > worst_pct.0 || i == 0 {
            worst_pct = (dev_pct, i);
        }
        if !ok {
            let reason = match &analytic {
                Err(e) => format!("analytic evaluation failed: {e}"),
                Ok(_) => format!("deviation {dev_se:.2} SE, {dev_pct:.3} %"),
            };
            failures.push((i, p.describe(), reason));
        }
        let _ = writeln!(
            s,
            "{i},{:e},{:e},{:e},{:e},{:e},{a:e},{:e},{:e},{dev_se:.4},{dev_pct:.4},{}",
            p.src_power_w,
            p.dist_d1,
            p.dist_d2,
            p.pathloss_exp,
            p.relay_gain_db,
            mc.bits_per_s_per_hz,
            mc.std_error,
            if ok { "yes" } else { "no" }
        );
    }
    let _ = writeln!(
        s,
        "# max deviation: {:.4} SE (point {}), {:.4} % (point {})",
        worst_se.0, worst_se.1, worst_pct.0, worst_pct.1
    );
    let _ = writeln!(
        s,
        "# {}/{n} points within max(3 SE, 1 %) at {} samples per point",
        n - failures.len(),
        cfg.mc.n_samples
    );
    emit(out, &s)?;
    if failures.is_empty() {
        return Ok(());
    }
    for (i, params, reason) in &failures {
        let _ = writeln!(err, "point {i}: {params}: {reason}");
    }
    Err(Failure::new(
        EXIT_VALIDATION,
        format!("{} of {n} points disagree", failures.len()),
    ))
}

pub(super) fn tables(m: &ArgMatches, out: &mut dyn Write) -> Result<(), Failure> {
    let order: usize = *m.get_one("order").expect("required");
    let rule = gauss_hermite::<f64>(order)?;
    let mut s = String::from("n,node,weight\n");
    for (i, (x, w)) in rule.iter().enumerate() {
        let _ = writeln!(s, "{},{x},{w}", i + 1);
    }
    let sum: f64 = rule.weights().iter().sum();
    let root_pi = std::f64::consts::PI.sqrt();
    let _ = writeln!(
        s,
        "# sum of weights = {sum} (sqrt(pi) = {root_pi}, difference {:e})",
        sum - root_pi
    );
    emit(out, &s)
}
