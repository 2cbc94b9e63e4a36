use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use betolo::experiments::{run_experiment, synthesize_sequence, write_report, ExperimentConfig, SyntheticKind};
use betolo::oracle::NaiveCtwBettor;
use betolo::verify::{run_all, VerifyOptions};
use betolo::{Bettor, BinaryQuantizer, CoinBettingOlo, CtwBettor, Error, Quantized, SideChannel, StateDriven};
use clap::{Parser, Subcommand};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "betolo", version, about = "Coin-betting online linear optimization with side information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write trace CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the oracle-equivalence and wealth-bound suites.
    Verify {
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Measure node touches and wall time per round of CTW.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,5,10")]
        depth_grid: Vec<usize>,
        #[arg(long, default_value_t = 10000)]
        rounds: usize,
        /// Also time the naive full-tree recursion.
        #[arg(long)]
        naive: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::InvalidTree(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_DATA,
    }
}

fn tracing_enabled() -> bool {
    std::env::var("BETOLO_TRACE").is_ok_and(|v| v == "1")
}

fn cmd_run(config: PathBuf, out: PathBuf, seed: Option<u64>) -> Result<(), Error> {
    let text = std::fs::read_to_string(&config)
        .map_err(|e| Error::Io(format!("{}: {e}", config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = run_experiment(&cfg, tracing_enabled())?;
    write_report(&report, &out)?;
    for r in &report.results {
        println!(
            "{:<32} final_cum_loss={}{}",
            r.config_id,
            r.final_cum_loss(),
            if r.best_in_sweep { "  (best)" } else { "" }
        );
    }
    println!("wrote {} traces to {}", report.results.len(), out.display());
    Ok(())
}

fn cmd_verify(depth: usize, seed: u64, inject_fault: bool) -> Result<bool, Error> {
    let start = Instant::now();
    let suites = run_all(&VerifyOptions {
        depth,
        seed,
        inject_fault,
    })?;
    let mut ok = true;
    for s in &suites {
        println!(
            "{} {:<22} max_error={:e}  {}",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.max_error,
            s.detail
        );
        ok &= s.passed;
    }
    let failed: Vec<&str> = suites.iter().filter(|s| !s.passed).map(|s| s.name).collect();
    if failed.is_empty() {
        println!("all {} suites passed in {:.2}s", suites.len(), start.elapsed().as_secs_f64());
    } else {
        println!("failing invariants: {}", failed.join(", "));
    }
    Ok(ok)
}

/// Plays `grads` through a quantized bettor and returns (touches per round, seconds).
fn time_bettor<B: Bettor + StateDriven>(
    bettor: B,
    depth: usize,
    grads: &[Vec<f64>],
    touches: impl Fn(&B) -> u64,
) -> Result<(f64, f64), Error> {
    let q = BinaryQuantizer::axis(grads[0].len(), 0)?;
    let mut e = CoinBettingOlo::new(Quantized::new(bettor, SideChannel::new(q, depth)?)?, 1.0)?;
    let mut total = 0u64;
    let start = Instant::now();
    for g in grads {
        e.action();
        e.update(g)?;
        total += touches(e.bettor().inner());
    }
    Ok((total as f64 / grads.len() as f64, start.elapsed().as_secs_f64()))
}

fn cmd_bench(grid: &[usize], rounds: usize, naive: bool, seed: u64) -> Result<(), Error> {
    if rounds == 0 {
        return Err(Error::Config("--rounds must be positive".into()));
    }
    let grads = synthesize_sequence(&SyntheticKind::Iid { dim: 2 }, rounds, seed)?;
    println!("depth,rounds,mean_node_touches,expected_touches,seconds,naive_seconds");
    for &d in grid {
        let (touches, secs) = time_bettor(CtwBettor::new(d, 2)?, d, &grads, |b| b.round_touches())?;
        let naive_secs = if naive {
            let (_, s) = time_bettor(NaiveCtwBettor::new(d, 2)?, d, &grads, |_| 0)?;
            s.to_string()
        } else {
            String::new()
        };
        println!("{d},{rounds},{touches},{},{secs},{naive_secs}", 2 * (d + 1));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed } => cmd_run(config, out, seed).map(|_| true),
        Command::Verify {
            depth,
            seed,
            inject_fault,
        } => cmd_verify(depth, seed, inject_fault),
        Command::Bench {
            depth_grid,
            rounds,
            naive,
            seed,
        } => cmd_bench(&depth_grid, rounds, naive, seed).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
