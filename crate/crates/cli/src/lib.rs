//! Command-line front end: argument handling, config overlay, output
//! directory bookkeeping and the exit-code contract (0 pass, 1 failed check,
//! 2 usage or configuration error).

pub mod args;
pub mod commands;
pub mod output;
pub mod parse;

use std::ffi::OsString;
use std::fmt;
use std::path::Path;

use anyhow::Result;
use clap::Parser;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use args::{Cli, Command};

/// Invalid flags, config or environment.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Verdict of a subcommand's quantitative check.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub message: String,
}

/// Exit code for an error: 1 for numerical non-convergence, 2 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<exfact_core::Error>() {
        Some(exfact_core::Error::NonConvergence { .. }) => 1,
        _ => 2,
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let res = configure_threads().and_then(|_| dispatch(cli));
    match res {
        Ok(o) => {
            println!("{}: {}", if o.pass { "PASS" } else { "FAIL" }, o.message);
            if o.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("EXFACT_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| usage(format!("EXFACT_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(usage("EXFACT_THREADS must be a positive integer"));
        }
        // Fails only when the pool already exists (repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::HarmoniumScan(a) => {
            let (a, v) = apply_config(a, cfg)?;
            commands::harmonium_scan(a, &v)
        }
        Command::Compensate(a) => {
            let (a, v) = apply_config(a, cfg)?;
            commands::compensate(a, &v)
        }
        Command::Counterexample(a) => {
            let (a, v) = apply_config(a, cfg)?;
            commands::counterexample(a, &v)
        }
        Command::EomResidual(a) => {
            let (a, v) = apply_config(a, cfg)?;
            commands::eom_residual(a, &v)
        }
        Command::EfExtract(a) => {
            let (a, v) = apply_config(a, cfg)?;
            commands::ef_extract(a, &v)
        }
        Command::ExportWfn(a) => {
            let (a, v) = apply_config(a, cfg)?;
            commands::export_wfn(a, &v)
        }
    }
}

/// Overlays the keys of a JSON config file on the parsed flags. Keys are flag
/// names with `-` or `_`; a nested `units` object maps `hbar`, `e`, `c`, `m`.
/// Returns the merged arguments and the effective configuration.
pub fn apply_config<T: Serialize + DeserializeOwned>(args: T, config: Option<&Path>) -> Result<(T, Value)> {
    let mut v = serde_json::to_value(&args)?;
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Value = serde_json::from_str(&text)
            .map_err(|e| usage(format!("{}: line {}: {e}", path.display(), e.line())))?;
        let Value::Object(cfg) = cfg else {
            return Err(usage("config must be a JSON object"));
        };
        let obj = v.as_object_mut().expect("arguments serialize to an object");
        for (key, val) in cfg {
            if key == "units" {
                let Value::Object(u) = val else {
                    return Err(usage("config key 'units' must be an object"));
                };
                for (k, x) in u {
                    let target = match k.as_str() {
                        "hbar" => "hbar",
                        "e" => "e",
                        "c" => "c",
                        "m" => "unit_mass",
                        other => return Err(usage(format!("unknown units key '{other}'"))),
                    };
                    obj.insert(target.into(), x);
                }
                continue;
            }
            let k = key.replace('-', "_");
            if !obj.contains_key(&k) {
                return Err(usage(format!("unknown config key '{key}'")));
            }
            obj.insert(k, val);
        }
    }
    let merged: T = serde_json::from_value(v.clone()).map_err(|e| usage(format!("config: {e}")))?;
    Ok((merged, v))
}
