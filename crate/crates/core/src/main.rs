use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use njsq::diff::{DerivativeMode, DerivativeStrategy};
use njsq::harness::eval::parse_vector;
use njsq::harness::{
    any_failed, eval_point, render_report, run_suite, OutputFormat, Quantity, SuiteConfig,
    VectorArgs, DEFAULT_METRICS, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_STRUCTURES,
};
use njsq::zoo::{catalog, structure_by_id};
use njsq::Error;

#[derive(Parser)]
#[command(name = "njsq", version, about = "Nijenhuis tensor squares: evaluation and property checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct DerivArgs {
    /// Derivative mode: analytic partials or central finite differences.
    #[arg(long, default_value = "analytic", value_parser = ["analytic", "fd"])]
    deriv: String,
    /// Base finite-difference step (default: cube root of machine epsilon).
    #[arg(long)]
    h0: Option<f64>,
}

impl DerivArgs {
    fn strategy(&self) -> Result<DerivativeStrategy, Error> {
        let mode: DerivativeMode = self.deriv.parse()?;
        let mut s = match mode {
            DerivativeMode::Analytic => DerivativeStrategy::analytic(),
            DerivativeMode::CentralDifference => DerivativeStrategy::central(),
        };
        if let Some(h0) = self.h0 {
            s = s.with_h0(h0);
        }
        Ok(s)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the property suite and print one report per check.
    Verify {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_STRUCTURES.map(String::from))]
        structures: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_METRICS.map(String::from))]
        metrics: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, env = "NJSQ_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "json")]
        output: String,
        /// Tolerance override, `check-name=value`; repeatable.
        #[arg(long = "tol")]
        tolerances: Vec<String>,
        #[command(flatten)]
        deriv: DerivArgs,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one quantity at one chart point.
    Eval {
        #[arg(long)]
        structure: String,
        /// Defaults to the Euclidean metric of the structure's dimension.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long)]
        quantity: String,
        #[arg(long = "X", allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long = "Y", allow_hyphen_values = true)]
        y: Option<String>,
        #[arg(long = "Z", allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long = "W", allow_hyphen_values = true)]
        w: Option<String>,
        #[command(flatten)]
        deriv: DerivArgs,
    },
    /// List structure and metric ids.
    List,
}

fn parse_tolerances(raw: &[String]) -> Result<BTreeMap<String, f64>, Error> {
    raw.iter()
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("--tol expects check=value, got `{kv}`")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::Usage(format!("bad tolerance value in `{kv}`")))?;
            Ok((k.to_string(), v))
        })
        .collect()
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Verify {
            structures,
            metrics,
            samples,
            seed,
            output,
            tolerances,
            deriv,
            out,
        } => {
            let output: OutputFormat = output.parse()?;
            let config = SuiteConfig {
                structure_ids: structures,
                metric_ids: metrics,
                samples,
                seed,
                tolerances: parse_tolerances(&tolerances)?,
                deriv: deriv.strategy()?,
                output,
            };
            let reports = run_suite(&config)?;
            let rendered = render_report(&reports, config.output)?;
            match out {
                Some(path) => std::fs::write(&path, rendered)
                    .map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))?,
                None => print!("{rendered}"),
            }
            Ok(!any_failed(&reports))
        }
        Command::Eval {
            structure,
            metric,
            point,
            quantity,
            x,
            y,
            z,
            w,
            deriv,
        } => {
            let quantity: Quantity = quantity.parse()?;
            let dim = structure_by_id(&structure)?.dim;
            let coords = parse_vector(&point, dim)?;
            let parse = |s: Option<String>| s.map(|s| parse_vector(&s, dim)).transpose();
            let vectors = VectorArgs {
                x: parse(x)?,
                y: parse(y)?,
                z: parse(z)?,
                w: parse(w)?,
            };
            let eval = eval_point(
                &structure,
                metric.as_deref(),
                coords,
                quantity,
                vectors,
                &deriv.strategy()?,
            )?;
            let json = serde_json::to_string_pretty(&eval)
                .map_err(|e| Error::Usage(format!("cannot serialize: {e}")))?;
            println!("{json}");
            Ok(true)
        }
        Command::List => {
            let (structures, metrics) = catalog();
            println!("structures:");
            for (pattern, example) in structures {
                println!("  {pattern:<58} e.g. {example}");
            }
            println!("metrics:");
            for (pattern, example) in metrics {
                println!("  {pattern:<58} e.g. {example}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("njsq: {e}");
            ExitCode::from(2)
        }
    }
}
