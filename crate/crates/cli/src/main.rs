use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kle_core::chi::ChiConfig;
use kle_core::harness::{
    self, BiasScanOptions, ChiRequest, ChiSource, CoverageOptions, EstimateOptions,
    DEFAULT_CHI_DRAWS, DEFAULT_POWER_Z,
};
use kle_core::{DensityModel, Error, NormKind};
use serde::Serialize;

/// Nearest-neighbor entropy estimation with confidence intervals.
#[derive(Parser)]
#[command(name = "kle", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "KLE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample from a model and write it as CSV.
    Gen {
        /// Model JSON, inline or as a file path.
        #[arg(long)]
        model: String,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the entropy of a CSV sample.
    Estimate {
        input: PathBuf,
        #[arg(long, default_value = "l2")]
        norm: NormKind,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Richardson extrapolation (dimension 4 and up).
        #[arg(long)]
        extrapolate: bool,
        #[command(flatten)]
        chi: ChiArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report the entropy in bits.
        #[arg(long)]
        bits: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo evaluation of chi_d.
    Chi {
        #[arg(long, short)]
        dim: usize,
        #[arg(long, default_value = "l2")]
        norm: NormKind,
        #[arg(long, default_value_t = DEFAULT_CHI_DRAWS)]
        draws: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        proposal_shape: f64,
        #[arg(long, default_value_t = 1)]
        inner_draws: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical coverage of the confidence intervals.
    Coverage {
        #[arg(long)]
        model: String,
        /// Points per replicate.
        #[arg(long, short)]
        n: usize,
        #[arg(long)]
        replicates: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value = "l2")]
        norm: NormKind,
        #[arg(long)]
        extrapolate: bool,
        #[command(flatten)]
        chi: ChiArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean bias against sample size and its log-log slope.
    BiasScan {
        #[arg(long)]
        model: String,
        /// Comma-separated, strictly increasing sample sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long)]
        replicates: usize,
        #[arg(long, default_value = "l2")]
        norm: NormKind,
        /// Also run the extrapolated estimator on every sample.
        #[arg(long)]
        extrapolate: bool,
        #[arg(long, default_value_t = DEFAULT_POWER_Z)]
        power_z: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ChiArgs {
    /// Use this chi_d instead of the table or Monte Carlo.
    #[arg(long)]
    chi: Option<f64>,
    /// auto (table, else Monte Carlo), table or mc.
    #[arg(long, default_value = "auto")]
    chi_source: ChiSource,
    /// Draws when chi_d is computed by Monte Carlo.
    #[arg(long, default_value_t = DEFAULT_CHI_DRAWS)]
    chi_draws: u64,
}

impl ChiArgs {
    fn request(&self) -> ChiRequest {
        ChiRequest {
            value: self.chi,
            source: self.chi_source,
            draws: self.chi_draws,
            ..ChiRequest::default()
        }
    }
}

enum Outcome {
    Done,
    InsufficientPower,
}

fn load_model(arg: &str) -> Result<DensityModel, Error> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    let model = DensityModel::from_json(&text)?;
    for w in model.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(model)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Error> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(command: Command) -> Result<Outcome, Error> {
    match command {
        Command::Gen {
            model,
            count,
            seed,
            out,
        } => {
            let model = load_model(&model)?;
            let mut w = sink(out.as_deref())?;
            harness::cmd_gen(&model, count, seed, &mut w)?;
            w.flush()?;
        }
        Command::Estimate {
            input,
            norm,
            alpha,
            extrapolate,
            chi,
            seed,
            bits,
            out,
        } => {
            let s = harness::read_csv_path(&input, norm)?;
            let opts = EstimateOptions {
                alpha,
                extrapolate,
                chi: chi.request(),
                seed,
                bits,
            };
            emit(&harness::cmd_estimate(&s, &opts)?, out.as_deref())?;
        }
        Command::Chi {
            dim,
            norm,
            draws,
            seed,
            proposal_shape,
            inner_draws,
            out,
        } => {
            let cfg = ChiConfig {
                draws,
                seed,
                proposal_shape,
                inner_draws,
            };
            emit(&harness::cmd_chi(dim, norm, &cfg)?, out.as_deref())?;
        }
        Command::Coverage {
            model,
            n,
            replicates,
            alpha,
            norm,
            extrapolate,
            chi,
            seed,
            out,
        } => {
            let model = load_model(&model)?;
            let opts = CoverageOptions {
                points: n,
                replicates,
                alpha,
                norm,
                extrapolate,
                seed,
                chi: chi.request(),
            };
            emit(&harness::cmd_coverage(&model, &opts)?, out.as_deref())?;
        }
        Command::BiasScan {
            model,
            sizes,
            replicates,
            norm,
            extrapolate,
            power_z,
            seed,
            out,
        } => {
            let model = load_model(&model)?;
            let opts = BiasScanOptions {
                sizes,
                replicates,
                norm,
                seed,
                extrapolate,
                power_z,
            };
            let report = harness::cmd_bias_scan(&model, &opts)?;
            emit(&report, out.as_deref())?;
            if report.insufficient_power {
                eprintln!("insufficient power: some mean bias is within {power_z} standard errors of zero");
                return Ok(Outcome::InsufficientPower);
            }
        }
    }
    Ok(Outcome::Done)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DuplicatePoints { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli.command)),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => run(cli.command),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::InsufficientPower) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
