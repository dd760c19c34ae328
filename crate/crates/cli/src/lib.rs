//! Configuration-driven batch front end for the pinchfold toolkit.
//!
//! Exit status is 0 on success, 2 for configuration errors and 3 for
//! numerical failures, in which case a diagnostic JSON document is printed
//! to stderr and written to the output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod oracle;
pub mod specfun_check;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{CommandFactory, Parser};
use pinchfold::export::write_json;

use crate::commands::{dispatch, output_path, CommandError, Output};
use crate::config::{Command, ConfigError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "PINCHFOLD_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "pinchfold", version, about = "Pinched folded-node models: Filippov dynamics, secondary canards and regularized continuation")]
pub struct Cli {
    /// Command to run; takes precedence over `command` in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// TOML configuration file.
    #[arg(short, long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set continuation.k=[10,50]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Pinch level: Sans, First or Second.
    #[arg(long)]
    pub level: Option<String>,
    /// Comma-separated stiffness values.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<f64>,
    /// Output directory.
    #[arg(short, long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl Cli {
    /// Flag overrides as `key=value` strings, applied after `--set`.
    fn overrides(&self) -> Vec<String> {
        let mut o = self.set.clone();
        if let Some(c) = self.command {
            o.push(format!("command=\"{}\"", c.name()));
        }
        if let Some(mu) = self.mu {
            o.push(format!("params.mu={mu:e}"));
        }
        if let Some(eps) = self.eps {
            o.push(format!("params.eps={eps:e}"));
        }
        if let Some(l) = &self.level {
            o.push(format!("params.level=\"{l}\""));
        }
        if !self.k.is_empty() {
            let ks: Vec<String> = self.k.iter().map(|k| format!("{k:e}")).collect();
            o.push(format!("continuation.k=[{}]", ks.join(",")));
        }
        if let Some(d) = &self.out {
            o.push(format!("out_dir={}", toml::Value::String(d.display().to_string())));
        }
        o
    }
}

fn usage() -> String {
    Cli::command().render_long_help().to_string()
}

fn workers() -> Result<Option<usize>, ConfigError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError::Invalid(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

fn config_error(e: &ConfigError, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {e}");
    if matches!(e, ConfigError::MissingCommand) {
        let _ = writeln!(err, "\n{}", usage());
    }
    EXIT_CONFIG
}

/// Run the CLI on `args` (including the program name), writing the JSON
/// summary to `out` and diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(source) => return config_error(&ConfigError::Read { path: path.clone(), source }, err),
        },
        None => String::new(),
    };
    let cfg = match config::load(&text, &cli.overrides()) {
        Ok(c) => c,
        Err(e) => return config_error(&e, err),
    };
    let command = match cfg.validate() {
        Ok(c) => c,
        Err(e) => return config_error(&e, err),
    };
    let pool = match workers() {
        Ok(n) => {
            let mut b = rayon::ThreadPoolBuilder::new();
            if let Some(n) = n {
                b = b.num_threads(n);
            }
            b.build()
        }
        Err(e) => return config_error(&e, err),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => return config_error(&ConfigError::Invalid(e.to_string()), err),
    };
    match pool.install(|| dispatch(&cfg, command)) {
        Ok(summary) => {
            let prov = Output::new(&cfg, command).map(|o| o.provenance().clone()).unwrap_or_default();
            let _ = write_json(&prov, &summary, &mut *out);
            EXIT_OK
        }
        Err(e) => report_failure(&cfg, command, &e, err),
    }
}

fn report_failure(cfg: &config::RunConfig, command: Command, e: &CommandError, err: &mut dyn Write) -> i32 {
    let d = e.diagnostic(command);
    let prov = pinchfold::export::Provenance::new().with("command", command.name());
    let _ = write_json(&prov, &d, &mut *err);
    if let Ok(f) = std::fs::File::create(output_path(cfg, "diagnostic.json")) {
        let _ = write_json(&prov, &d, f);
    }
    EXIT_NUMERICAL
}
