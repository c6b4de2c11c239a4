//! `simbt`: run scenarios, crack captured pairings, rebuild reports.
//!
//! Exit codes: 0 success, 1 bad configuration or arguments, 2 failure
//! while running.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use simbt_core::attacks::{crack_pin, CrackError, CrackOptions, PairingTranscript, ReferenceStandIn};
use simbt_core::baseband::BdAddr;
use simbt_core::harness::{report_dir, run_scenario, HarnessError, ScenarioConfig, OUT_DIR_ENV};

#[derive(Parser, Debug)]
#[command(name = "simbt", version, about = "Bluetooth piconet sniffing simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run every repetition of a scenario file.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Where run artifacts go.
        #[arg(long, env = OUT_DIR_ENV, default_value = "simbt-out")]
        out: PathBuf,
    },
    /// Brute-force the PIN behind a captured pairing transcript.
    Crack {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        addr_a: String,
        #[arg(long)]
        addr_b: String,
        #[arg(long, default_value_t = 4)]
        min_digits: usize,
        #[arg(long, default_value_t = 6)]
        max_digits: usize,
        /// Keep going after the first hit and count other accepting PINs.
        #[arg(long)]
        scan_all: bool,
    },
    /// Rebuild metrics.csv and the summary from a run directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn harness_err(e: HarnessError) -> Failure {
    match e {
        HarnessError::Config(c) => Failure::Config(c.to_string()),
        other => Failure::Runtime(other.to_string()),
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Run { scenario, out } => {
            let text = std::fs::read_to_string(&scenario)
                .map_err(|e| Failure::Config(format!("{}: {e}", scenario.display())))?;
            let cfg: ScenarioConfig = text
                .parse()
                .map_err(|e| Failure::Config(format!("{}: {e}", scenario.display())))?;
            let dir = out.join(cfg.name());
            let res = run_scenario(&cfg, Some(&dir)).map_err(harness_err)?;
            print!("{}", res.csv);
            print!("{}", res.summary.render());
            println!("artifacts: {}", dir.display());
        }
        Cmd::Crack {
            transcript,
            addr_a,
            addr_b,
            min_digits,
            max_digits,
            scan_all,
        } => {
            let a: BdAddr = addr_a.parse().map_err(|e| Failure::Config(format!("--addr-a: {e}")))?;
            let b: BdAddr = addr_b.parse().map_err(|e| Failure::Config(format!("--addr-b: {e}")))?;
            let text = std::fs::read_to_string(&transcript)
                .map_err(|e| Failure::Config(format!("{}: {e}", transcript.display())))?;
            let t: PairingTranscript = text
                .parse()
                .map_err(|e| Failure::Config(format!("{}: {e}", transcript.display())))?;
            let opts = CrackOptions {
                min_digits,
                max_digits,
                scan_all,
            };
            let started = std::time::Instant::now();
            let r = crack_pin(&ReferenceStandIn, &t, a, b, opts).map_err(|e| match e {
                CrackError::DigitRange { .. } | CrackError::IncompleteTranscript(_) => Failure::Config(e.to_string()),
                CrackError::NotFound { .. } => Failure::Runtime(e.to_string()),
            })?;
            println!("pin: {}", r.pin);
            println!(
                "k_ab: {}",
                r.k_ab.iter().map(|b| format!("{b:02x}")).collect::<String>()
            );
            println!("tested: {}", r.tested);
            if let Some(x) = r.extra_accepts {
                println!("other accepting pins: {x}");
            }
            println!("single-sres matches: {}", r.single_sres_matches);
            println!("elapsed: {:.3} s", started.elapsed().as_secs_f64());
        }
        Cmd::Report { dir } => {
            let (csv, summary) = report_dir(&dir).map_err(harness_err)?;
            std::fs::write(dir.join("metrics.csv"), &csv)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
            print!("{csv}");
            print!("{}", summary.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
