//! `nlxva`: runs one experiment and prints or writes its tables.
//!
//! ```bash
//! nlxva --experiment table1 --paths 1000 --seed 7 --format text
//! nlxva --config deal.cfg --experiment single --out results --format csv
//! ```
//!
//! Exit codes: 0 success, 1 empty result set, 2 configuration error,
//! 3 engine or I/O failure.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use nonlinear_xva::config::{load_config, Experiment, RunConfig};
use nonlinear_xva::experiments::run_experiment;
use nonlinear_xva::report::{render_text, write_csv, NO_RESULTS};
use nonlinear_xva::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "nlxva", version, about = "Funding-, collateral- and default-inclusive option pricing experiments")]
struct Args {
    /// Sectioned key = value configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// table1 | table2 | table3 | table4 | fig1 | fig3 | fig4 | single
    #[arg(long)]
    experiment: Option<Experiment>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Independent replications behind each standard error.
    #[arg(long)]
    replications: Option<usize>,
    /// Directory for `<experiment>.csv` or `<experiment>.txt`; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn configure(args: &Args) -> Result<RunConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(e) = args.experiment {
        cfg.experiment = e;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.paths {
        if n < 2 {
            return Err(Error::Config("--paths must be at least 2".into()));
        }
        cfg.n_paths = n;
    }
    if let Some(r) = args.replications {
        if r == 0 {
            return Err(Error::Config("--replications must be positive".into()));
        }
        cfg.engine.replications = r;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match configure(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("nlxva: {e}");
            return ExitCode::from(2);
        }
    };

    let started = Instant::now();
    let output = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("nlxva: {} failed: {e}", cfg.experiment);
            return ExitCode::from(3);
        }
    };
    eprintln!("nlxva: {} finished in {:.1} s", cfg.experiment, started.elapsed().as_secs_f64());

    let mut bytes = Vec::new();
    let rendered = match args.format {
        Format::Csv => write_csv(&output, &mut bytes),
        Format::Text => {
            bytes.extend_from_slice(render_text(&output).as_bytes());
            Ok(())
        }
    };
    if let Err(e) = rendered {
        eprintln!("nlxva: {e}");
        return ExitCode::from(3);
    }

    // written in one piece so a failed run never leaves a partial file
    let written = match &args.out {
        Some(dir) => {
            let ext = if args.format == Format::Csv { "csv" } else { "txt" };
            let path = dir.join(format!("{}.{ext}", cfg.experiment));
            fs::create_dir_all(dir).and_then(|_| fs::write(&path, &bytes))
        }
        None => io::stdout().write_all(&bytes),
    };
    if let Err(e) = written {
        eprintln!("nlxva: cannot write output: {e}");
        return ExitCode::from(3);
    }

    if output.is_empty() {
        eprintln!("nlxva: {NO_RESULTS}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
