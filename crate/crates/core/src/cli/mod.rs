//! Command-line front end.
//!
//! ```text
//! hybrid-relay [parameters] eval [--mc] [--csv] [--dump-config]
//! hybrid-relay [parameters] sweep <fig2|fig3|fig4|fig5|SPEC.toml> [--out-dir DIR]
//! hybrid-relay [parameters] validate [--grid-size N]
//! hybrid-relay tables <ORDER>
//! ```
//!
//! Every configuration key is accepted as a `--key value` flag, before or
//! after the subcommand. Values come from the built-in defaults, then the
//! config file (`--config` or `$HYBRID_RELAY_CONFIG`), then the command line;
//! a flag repeated on the command line keeps its last value.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 configuration error,
//! 3 numerical failure, 4 validation failure.

mod commands;
pub mod config;
mod spec_file;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

use crate::error::Error;
use config::{Assignment, Config, Kind, Layer, Source, CONFIG_ENV, KEYS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub(crate) struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    pub(crate) fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parameter { .. } => EXIT_CONFIG,
            Error::Io { .. } => EXIT_IO,
            Error::Domain(_) | Error::NonConvergence { .. } | Error::DegenerateRelay => {
                EXIT_NUMERICAL
            }
        };
        Failure::new(code, e.to_string())
    }
}

pub fn command() -> Command {
    Command::new("hybrid-relay")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Ergodic capacity of a power-line to wireless amplify-and-forward relay link")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("PATH")
                .env(CONFIG_ENV)
                .value_parser(value_parser!(PathBuf))
                .global(true)
                .help("Flat `key = value` config file; command-line flags override it"),
        )
        .args(parameter_args())
        .subcommand(
        Command::new("eval")
            .about("Evaluate one operating point")
            .args(parameter_args())
            .arg(flag("mc", "Also estimate the capacity by Monte Carlo"))
            .arg(flag("csv", "Print a CSV header and one data row instead of the report"))
            .arg(flag("dump-config", "Print the effective configuration as a config file and exit")),
    )
    .subcommand(
        Command::new("sweep")
            .about("Run a preset (fig2, fig3, fig4, fig5) or a sweep spec file; writes <name>.csv and <name>.svg")
            .args(parameter_args())
            .arg(
                Arg::new("target")
                    .required(true)
                    .value_name("PRESET|SPEC")
                    .help("Preset name or path of a sweep spec file"),
            )
            .arg(
                Arg::new("out-dir")
                    .long("out-dir")
                    .short('o')
                    .value_name("DIR")
                    .default_value(".")
                    .value_parser(value_parser!(PathBuf)),
            )
            .arg(list("methods", "Methods: analytic, monte_carlo, plc_only_analytic"))
            .arg(list("axis-values", "Replace the axis grid"))
            .arg(list("family-values", "Replace the family values"))
            .arg(list(
                "gain-db",
                "Relay gains in dB for whichever of axis or family is the relay gain",
            ))
            .arg(flag("mc", "Add monte_carlo to the methods")),
    )
    .subcommand(
        Command::new("validate")
            .about("Compare analytic and Monte Carlo capacity over a random parameter grid")
            .args(parameter_args())
            .arg(
                Arg::new("grid-size")
                    .long("grid-size")
                    .value_name("N")
                    .default_value("20")
                    .value_parser(value_parser!(usize)),
            )
            .arg(
                Arg::new("corrupt-mgf-sign")
                    .long("corrupt-mgf-sign")
                    .action(ArgAction::SetTrue)
                    .hide(true),
            ),
    )
    .subcommand(
        Command::new("tables")
            .about("Print the Gauss-Hermite nodes and weights of one order as CSV")
            .arg(
                Arg::new("order")
                    .required(true)
                    .value_name("ORDER")
                    .value_parser(value_parser!(usize)),
            ),
    )
}

/// One flag per configuration key. They are declared on the top-level
/// command and again on each subcommand (rather than as global arguments) so
/// that repetitions on both sides of the subcommand name are all seen.
fn parameter_args() -> Vec<Arg> {
    KEYS.iter()
        .map(|key| {
            let arg = Arg::new(key.name)
                .long(key.name)
                .help(key.help)
                .action(ArgAction::Append)
                .help_heading("Parameters");
            match key.kind {
                Kind::Flag => arg
                    .value_name("BOOL")
                    .num_args(0..=1)
                    .default_missing_value("true"),
                Kind::Count => arg.value_name("N"),
                Kind::Convention => arg.value_name("amplitude|power"),
                Kind::Real => arg.value_name("X").allow_negative_numbers(true),
            }
        })
        .collect()
}

fn flag(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name)
        .long(name)
        .action(ArgAction::SetTrue)
        .help(help)
}

fn list(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name)
        .long(name)
        .value_name("A,B,..")
        .value_delimiter(',')
        .allow_negative_numbers(true)
        .action(ArgAction::Set)
        .help(help)
}

/// Everything a subcommand needs besides its own flags.
pub(crate) struct Inputs {
    pub config_path: Option<PathBuf>,
    pub file: Option<Layer>,
    pub cli: Layer,
}

impl Inputs {
    /// `top` holds the parameters given before the subcommand name, `sub`
    /// those given after it.
    fn from_matches(top: &ArgMatches, sub: &ArgMatches) -> Result<Self, Failure> {
        let config_path = sub.get_one::<PathBuf>("config").cloned();
        let file = match &config_path {
            Some(p) => Some(
                config::read_config_file(p)
                    .map_err(|e| Failure::new(EXIT_CONFIG, e.to_string()))?,
            ),
            None => None,
        };
        let mut assignments = Vec::new();
        for key in KEYS {
            let values: Vec<&String> = [top, sub]
                .into_iter()
                .filter(|m| m.try_contains_id(key.name).unwrap_or(false))
                .flat_map(|m| m.get_many::<String>(key.name).into_iter().flatten())
                .collect();
            let Some(last) = values.last() else {
                continue;
            };
            assignments.push(Assignment {
                key,
                value: config::parse_value(key, last)?,
                occurrences: values.len(),
            });
        }
        Ok(Inputs {
            config_path,
            file,
            cli: Layer::new(Source::CommandLine, assignments)?,
        })
    }

    pub fn layers(&self) -> Vec<Layer> {
        self.file
            .iter()
            .cloned()
            .chain([self.cli.clone()])
            .collect()
    }

    pub fn config(&self) -> Result<Config, Failure> {
        Ok(Config::default().apply(&self.layers())?)
    }
}

/// Run the command line `args` (including the program name), writing to
/// `out` and `err`, and return the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let result = Inputs::from_matches(&matches, sub).and_then(|inputs| match name {
        "eval" => commands::eval(&inputs, sub, out, err),
        "sweep" => commands::sweep(&inputs, sub, out, err),
        "validate" => commands::validate(&inputs, sub, out, err),
        "tables" => commands::tables(sub, out),
        _ => unreachable!("unknown subcommand {name}"),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
