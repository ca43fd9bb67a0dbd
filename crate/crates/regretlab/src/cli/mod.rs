//! Command-line harness: config ingestion, dispatch and result emission.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 a checked
//! inequality failed.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::value_engine::{EngineOptions, DEFAULT_BUDGET};

#[derive(Parser, Debug)]
#[command(name = "regretlab", version, about = "Exact values, complexities and bounds for finite online-learning games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write results here (JSON, or CSV with --format csv).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Required by every randomized subcommand.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest admissible game-tree leaf count.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Minimax value of a game.
    Value,
    /// High-probability value P(regret > θ).
    ThetaValue,
    /// Value with a leaf transform Γ.
    GammaValue,
    /// Exact sequential Rademacher complexity.
    Rad,
    /// Val ≤ 2·Rad for linear games with departure maps.
    Certificate,
    /// Closed-form bound calculators.
    Bounds {
        /// Absolute constant of the p-smooth bound (overrides params.c_abs).
        #[arg(long)]
        c_abs: Option<f64>,
    },
    /// Shattering and fat-shattering dimensions.
    Dims,
    /// Sequential covering numbers.
    Cover,
    /// Minimax strategy extraction or Monte Carlo play.
    Game {
        #[command(subcommand)]
        action: GameAction,
    },
    /// Projection player in an approachability game.
    Blackwell,
    /// Calibrated forecaster against an adversary.
    Calibrate,
    /// Lower-bound constructions.
    Lower,
    /// Martingale tail bounds and Monte Carlo checks.
    Concentration,
    /// Randomized property suites.
    Fuzz,
    /// All acceptance criteria.
    Report,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameAction {
    /// Extract the minimax strategy table.
    Run,
    /// Play a player against an adversary repeatedly.
    Simulate,
}

/// Result of one subcommand: named fields, optional CSV rows, and whether a
/// checked inequality failed.
#[derive(Debug, Default)]
pub struct Output {
    pub fields: Vec<(String, Value)>,
    pub rows: Option<(Vec<String>, Vec<Vec<String>>)>,
    pub check_failed: bool,
}

impl Output {
    pub(crate) fn field(mut self, name: &str, v: impl serde::Serialize) -> Self {
        self.fields.push((name.to_string(), serde_json::to_value(v).expect("serializable")));
        self
    }

    pub(crate) fn rows(mut self, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        self.rows = Some((header.iter().map(|s| s.to_string()).collect(), rows));
        self
    }

    pub(crate) fn check(mut self, holds: bool) -> Self {
        self.check_failed |= !holds;
        self
    }

    fn json(&self) -> Value {
        let mut m = serde_json::Map::new();
        for (k, v) in &self.fields {
            m.insert(k.clone(), v.clone());
        }
        if let Some((h, rows)) = &self.rows {
            let list = rows
                .iter()
                .map(|r| Value::Object(h.iter().cloned().zip(r.iter().map(|c| Value::String(c.clone()))).collect()))
                .collect();
            m.insert("rows".into(), Value::Array(list));
        }
        Value::Object(m)
    }

    fn csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Precondition(e.to_string());
        match &self.rows {
            Some((h, rows)) => {
                w.write_record(h).map_err(io)?;
                for r in rows {
                    w.write_record(r).map_err(io)?;
                }
            }
            None => {
                w.write_record(["field", "value"]).map_err(io)?;
                for (k, v) in &self.fields {
                    w.write_record([k.as_str(), &plain(v)]).map_err(io)?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Precondition(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf8"))
    }

    fn table(&self) -> String {
        let width = self.fields.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in &self.fields {
            s.push_str(&format!("{k:<width$}  {}\n", plain(v)));
        }
        match &self.rows {
            Some((h, rows)) if rows.len() <= MAX_TABLE_ROWS => {
                let mut w: Vec<usize> = h.iter().map(|c| c.chars().count()).collect();
                for r in rows {
                    for (wi, c) in w.iter_mut().zip(r) {
                        *wi = (*wi).max(c.chars().count());
                    }
                }
                let line = |cells: &[String]| {
                    let padded: Vec<String> = cells.iter().zip(&w).map(|(c, &n)| format!("{c:<n$}")).collect();
                    padded.join("  ").trim_end().to_string() + "\n"
                };
                s.push('\n');
                s.push_str(&line(h));
                for r in rows {
                    s.push_str(&line(r));
                }
            }
            Some((h, rows)) => {
                s.push_str(&format!("({} rows of {}; use --out or --format csv)\n", rows.len(), h.join(",")));
            }
            None => {}
        }
        s
    }
}

const MAX_TABLE_ROWS: usize = 40;

/// Numbers with 12 decimals, strings bare, everything else as compact JSON.
fn plain(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => format!("{:.12}", n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Shared context handed to each subcommand.
pub(crate) struct Ctx {
    pub config: Option<Value>,
    pub config_dir: PathBuf,
    pub seed: Option<u64>,
    pub opts: EngineOptions,
}

impl Ctx {
    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or(Error::MissingParam("--seed"))
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok(o) => match emit(&cli, &o, out) {
            Ok(()) => i32::from(o.check_failed) * 2,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    let budget = cli.budget.unwrap_or(DEFAULT_BUDGET);
    let config = match &cli.config {
        Some(p) => Some(config::read(p)?),
        None => None,
    };
    let config_dir = cli.config.as_ref().and_then(|p| p.parent().map(PathBuf::from)).unwrap_or_default();
    let ctx = Ctx { config, config_dir, seed: cli.seed, opts: EngineOptions { budget, ..Default::default() } };
    with_threads(cli.threads, || commands::dispatch(&cli.command, &ctx))
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(0) => Err(crate::error::invalid("--threads", "must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Precondition(e.to_string()))?
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads == Some(0) {
        return Err(crate::error::invalid("--threads", "must be positive"));
    }
    f()
}

fn emit(cli: &Cli, o: &Output, out: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| Error::Precondition(e.to_string());
    let json = || serde_json::to_string_pretty(&o.json()).expect("json") + "\n";
    let text = match cli.format {
        Format::Json => json(),
        Format::Csv => o.csv()?,
        Format::Table => o.table(),
    };
    out.write_all(text.as_bytes()).map_err(io)?;
    if let Some(p) = &cli.out {
        let body = if cli.format == Format::Csv { o.csv()? } else { json() };
        std::fs::write(p, body).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("regretlab").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_args(&["frobnicate"]).0, 1);
        assert_eq!(run_args(&["value", "--format", "xml"]).0, 1);
        let (code, _, err) = run_args(&["value"]);
        assert_eq!(code, 1);
        assert!(err.contains("--config"), "{err}");
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("certificate"));
    }

    #[test]
    fn output_formats() {
        let o = Output::default()
            .field("value", 0.5)
            .field("n", 3)
            .rows(&["t", "d"], vec![vec!["1".into(), "0.25".into()]]);
        assert!(o.table().starts_with("value  0.500000000000\nn      3\n"));
        assert_eq!(o.csv().unwrap(), "t,d\n1,0.25\n");
        let j = o.json();
        assert_eq!(j["value"], 0.5);
        assert_eq!(j["rows"][0]["d"], "0.25");
        let plain_csv = Output::default().field("holds", true).csv().unwrap();
        assert_eq!(plain_csv, "field,value\nholds,true\n");
    }

    #[test]
    fn failed_check_sets_flag() {
        assert!(Output::default().check(true).check(false).check(true).check_failed);
        assert!(!Output::default().check(true).check_failed);
    }
}
