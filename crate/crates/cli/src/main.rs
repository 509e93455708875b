//! Pipeline driver: simulate -> extract -> test, plus bench and report.
//!
//! All stages read one TOML config; per-stage flags override the few knobs
//! that vary run to run. Exit code 0 means every requested gate passed.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use qrng_core::pipeline::{
    self, autocorrelation_csv, cmd_bench, cmd_entropy_report, cmd_extract, cmd_simulate, cmd_test,
    pvalue_histogram_csv, PipelineConfig,
};

#[derive(Parser)]
#[command(name = "qrng", about = "Laser-interference QRNG simulation and post-processing pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override the global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the sample count.
    #[arg(long)]
    count: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_toml_file(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(count) = self.count {
            cfg.count = count;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the analog sample stream (f64 little-endian).
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output sample file.
        #[arg(long, short, default_value = "samples.f64")]
        out: PathBuf,
        /// Also export an index,value CSV next to the output.
        #[arg(long)]
        csv: bool,
    },
    /// Quantize a sample file and extract it into a packed bit file.
    Extract {
        #[command(flatten)]
        config: ConfigArgs,
        /// Input sample file from `simulate`.
        #[arg(long, short)]
        input: PathBuf,
        /// Output packed-bit file.
        #[arg(long, short, default_value = "random.bits")]
        out: PathBuf,
    },
    /// Run the statistical battery over a packed bit file.
    Test {
        #[command(flatten)]
        config: ConfigArgs,
        /// Input packed-bit file.
        #[arg(long, short)]
        input: PathBuf,
        /// Where to write the JSON report.
        #[arg(long, short, default_value = "test_report.json")]
        out: PathBuf,
    },
    /// Measure extraction throughput.
    Bench {
        #[command(flatten)]
        config: ConfigArgs,
        /// Measurement time per stage, seconds.
        #[arg(long, default_value_t = 10.0)]
        seconds: f64,
    },
    /// Entropy summary and plot exports from earlier stages.
    Report {
        #[command(flatten)]
        config: ConfigArgs,
        /// Sample file: writes the entropy summary (and a PMF-ready CSV).
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Bit file: writes an autocorrelation CSV.
        #[arg(long)]
        bits: Option<PathBuf>,
        /// Maximum autocorrelation lag.
        #[arg(long, default_value_t = 100)]
        max_lag: usize,
        /// Battery report JSON: writes a P-value histogram CSV.
        #[arg(long)]
        test_report: Option<PathBuf>,
        /// Output directory for the exports.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn run() -> anyhow::Result<bool> {
    match Cli::parse().command {
        Command::Simulate { config, out, csv } => {
            let cfg = config.load()?;
            let manifest = cmd_simulate(&cfg, &out)?;
            eprintln!(
                "wrote {} samples to {} (sha256 {})",
                manifest.count,
                out.display(),
                &manifest.sha256[..16]
            );
            if csv {
                let csv_path = out.with_extension("csv");
                pipeline::samples_to_csv(&out, &csv_path)?;
                eprintln!("wrote {}", csv_path.display());
            }
            Ok(true)
        }
        Command::Extract { config, input, out } => {
            let cfg = config.load()?;
            let manifest = cmd_extract(&cfg, &input, &out)?;
            eprintln!(
                "mode {}: {} words in, {} discarded, {} bits out ({} nominal bps) -> {}",
                manifest.mode,
                manifest.stats.words_in,
                manifest.stats.words_discarded,
                manifest.stats.bits_out,
                manifest.nominal_rate_bps,
                out.display()
            );
            Ok(true)
        }
        Command::Test { config, input, out } => {
            let cfg = config.load()?;
            let report = cmd_test(&cfg, &input)?;
            std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            for t in report.tests.iter().filter(|t| t.implemented) {
                println!(
                    "{:<28} proportion {:>6.4} in [{:.4}, {:.4}] {} | uniformity P {:.4e} {} | {}",
                    t.name,
                    t.proportion,
                    t.proportion_lo,
                    t.proportion_hi,
                    if t.proportion_pass { "ok" } else { "FAIL" },
                    t.uniformity_p,
                    if t.uniformity_pass { "ok" } else { "FAIL" },
                    if t.verdict { "PASS" } else { "FAIL" }
                );
            }
            let all = report.all_pass();
            println!("overall: {}", if all { "PASS" } else { "FAIL" });
            eprintln!("report written to {}", out.display());
            Ok(all)
        }
        Command::Bench { config, seconds } => {
            let cfg = config.load()?;
            let r = cmd_bench(&cfg, seconds)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
            Ok(true)
        }
        Command::Report {
            config,
            samples,
            bits,
            max_lag,
            test_report,
            out_dir,
        } => {
            let cfg = config.load()?;
            if samples.is_none() && bits.is_none() && test_report.is_none() {
                bail!("report needs at least one of --samples, --bits, --test-report");
            }
            std::fs::create_dir_all(&out_dir)?;
            if let Some(samples) = samples {
                let rep = cmd_entropy_report(&cfg, &samples)?;
                let path = out_dir.join("entropy_report.json");
                std::fs::write(&path, serde_json::to_string_pretty(&rep)?)?;
                println!(
                    "n_bits {} | h_min {:.4} (oracle {}) | quantum h_min {:.4} | reference values: total {}, quantum {}",
                    rep.n_bits,
                    rep.h_min,
                    rep.oracle_h_min.map_or("n/a".into(), |h| format!("{h:.4}")),
                    rep.quantum_h_min,
                    rep.reference_total_h_min,
                    rep.reference_quantum_h_min
                );
                eprintln!("wrote {}", path.display());
            }
            if let Some(bits) = bits {
                let path = out_dir.join("autocorrelation.csv");
                autocorrelation_csv(&bits, max_lag, &path)?;
                eprintln!("wrote {}", path.display());
            }
            if let Some(report_path) = test_report {
                let report = serde_json::from_str(&std::fs::read_to_string(&report_path)?)?;
                let path = out_dir.join("pvalue_histogram.csv");
                pvalue_histogram_csv(&report, &path)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
