use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use skewstab::axioms::{check_axioms, DEFAULT_PROBES};
use skewstab::classify::{
    classify, growth_report, EXIT_CONTRADICTION, EXIT_DEFINITE, EXIT_INCONCLUSIVE, EXIT_USAGE,
};
use skewstab::config::RunConfig;
use skewstab::error::Error;
use skewstab::gallery;
use skewstab::sweep::{parse_range, sweep, to_csv};
use skewstab::system::System;

#[derive(Parser)]
#[command(name = "skewstab", version, about = "Exponential-stability tests for skew-evolution semiflows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the semiflow and cocycle composition laws.
    Axioms(RunArgs),
    /// Fit and verify the growth envelopes.
    Growth(RunArgs),
    /// Run both criterion panels and report a verdict.
    Classify(RunArgs),
    /// Classify every combination of parameter ranges.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `name=v1,v2,...`; repeatable.
        #[arg(long = "range", value_name = "K=V1,V2")]
        ranges: Vec<String>,
    },
    /// Built-in systems.
    Gallery {
        #[command(subcommand)]
        action: GalleryAction,
    },
}

#[derive(Subcommand)]
enum GalleryAction {
    List {
        #[arg(long)]
        format: Option<String>,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    /// `name=value`; repeatable.
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
    /// Comma-separated criterion ids, or `all`.
    #[arg(long)]
    criteria: Option<String>,
    /// `identity`, `pow:p`, `sat:c` or `table:@file.csv`.
    #[arg(long)]
    gauge: Option<String>,
    #[arg(long)]
    grid_h: Option<f64>,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    delta_max: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    eval_cap: Option<usize>,
    #[arg(long)]
    ncap: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    omega_const: bool,
    #[arg(long)]
    out: Option<String>,
    /// `json` or `csv`.
    #[arg(long)]
    format: Option<String>,
}

fn parse_param(spec: &str) -> Result<(String, f64), Error> {
    let (k, v) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("parameter '{spec}' is not name=value")))?;
    let v = v
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("parameter value '{v}' is not a number")))?;
    Ok((k.trim().to_string(), v))
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let file = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let params = self
            .params
            .iter()
            .map(|s| parse_param(s))
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        let flags = RunConfig {
            system: self.system.clone(),
            params,
            criteria: self.criteria.clone(),
            gauge: self.gauge.clone(),
            grid_h: self.grid_h,
            grid_step: self.grid_step,
            tmax: self.tmax,
            delta_max: self.delta_max,
            tol: self.tol,
            eval_cap: self.eval_cap,
            ncap: self.ncap,
            seed: self.seed,
            alpha: self.alpha,
            omega_const: self.omega_const.then_some(true),
            out: self.out.clone(),
            format: self.format.clone(),
            ..Default::default()
        };
        Ok(file.overlay(flags))
    }
}

fn build_system(rc: &RunConfig) -> Result<System, Error> {
    match (&rc.custom, &rc.system) {
        (Some(custom), None) => custom.build(),
        (Some(_), Some(_)) => Err(Error::Config(
            "give either a gallery system or a custom system, not both".into(),
        )),
        (None, Some(name)) => gallery::build(name, &rc.params),
        (None, None) => Err(Error::Config("no system given; use --system or a config file".into())),
    }
}

fn format_of(rc: &RunConfig, default: &str, allowed: &[&str]) -> Result<String, Error> {
    let f = rc.format.clone().unwrap_or_else(|| default.to_string());
    if allowed.contains(&f.as_str()) {
        Ok(f)
    } else {
        Err(Error::Config(format!(
            "format '{f}' not available here; use {}",
            allowed.join(" or ")
        )))
    }
}

fn emit(rc: &RunConfig, text: &str) -> Result<(), Error> {
    match &rc.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {path}: {e}"))),
        None => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(Error::Config(format!("cannot write output: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Axioms(args) => {
            let rc = args.resolve()?;
            format_of(&rc, "json", &["json"])?;
            let sys = build_system(&rc)?;
            let report = check_axioms(
                &sys,
                DEFAULT_PROBES,
                rc.seed.unwrap_or(0),
                rc.axiom_tol(),
                &rc.probes,
            )?;
            emit(&rc, &json(&report))?;
            Ok(if report.passed { EXIT_DEFINITE } else { EXIT_INCONCLUSIVE })
        }
        Command::Growth(args) => {
            let rc = args.resolve()?;
            format_of(&rc, "json", &["json"])?;
            let sys = build_system(&rc)?;
            let report = growth_report(&sys, &rc.panel_config()?)?;
            emit(&rc, &json(&report))?;
            Ok(if report.nonuniform.verified { EXIT_DEFINITE } else { EXIT_INCONCLUSIVE })
        }
        Command::Classify(args) => {
            let rc = args.resolve()?;
            format_of(&rc, "json", &["json"])?;
            let cfg = rc.panel_config()?;
            let sys = build_system(&rc)?;
            let report = classify(&sys, &cfg)?;
            emit(&rc, &report.to_json())?;
            Ok(report.exit_code())
        }
        Command::Sweep { run, ranges } => {
            let mut rc = run.resolve()?;
            for r in &ranges {
                let (k, v) = parse_range(r)?;
                rc.ranges.insert(k, v);
            }
            let format = format_of(&rc, "csv", &["csv", "json"])?;
            if rc.custom.is_some() {
                return Err(Error::Config("sweeps run over gallery systems only".into()));
            }
            let name = rc
                .system
                .clone()
                .ok_or_else(|| Error::Config("sweep needs --system".into()))?;
            let cfg = rc.panel_config()?;
            let rows = sweep(&name, &rc.params, &rc.ranges, &cfg)?;
            let names: Vec<String> = rc.ranges.keys().cloned().collect();
            let text = match format.as_str() {
                "csv" => to_csv(&names, &rows)?.trim_end().to_string(),
                _ => json(&rows),
            };
            emit(&rc, &text)?;
            Ok(if rows.iter().all(|r| r.consistent) {
                EXIT_DEFINITE
            } else {
                EXIT_CONTRADICTION
            })
        }
        Command::Gallery {
            action: GalleryAction::List { format },
        } => {
            let entries = gallery::entries();
            let text = match format.as_deref().unwrap_or("json") {
                "json" => json(&entries),
                "csv" => {
                    let mut t = String::from("name,ground_truth,summary");
                    for e in &entries {
                        t.push_str(&format!("\n{},{},\"{}\"", e.name, e.ground_truth, e.summary));
                    }
                    t
                }
                f => return Err(Error::Config(format!("unknown format '{f}'"))),
            };
            emit(&RunConfig::default(), &text)?;
            Ok(EXIT_DEFINITE)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { EXIT_USAGE } else { EXIT_INCONCLUSIVE } as u8)
        }
    }
}
