use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dflat::Config;
use dflat_cli::corpus::{bless, run_corpus};
use dflat_cli::run::{parse_mode, run, RunOptions};
use dflat_cli::sysfile::{ExpectKind, Verb};
use dflat_cli::{read_file, CliError};

#[derive(Parser)]
#[command(name = "dflat", version, about = "Differential flatness analysis of control systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Seed for numeric rank probes.
    #[arg(long, global = true, default_value_t = Config::default().seed)]
    seed: u64,
    /// Highest degree of the first-integral ansatz.
    #[arg(long, global = true, default_value_t = Config::default().degree_budget)]
    degree_budget: u32,
    /// Prolongation plan: exact or bound.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Chain variables to reduce along, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    split: Option<Vec<String>>,
    /// Also write the report to this path.
    #[arg(long, global = true)]
    json: Option<String>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Derived flag, type numbers and Goursat test.
    Analyze { file: String },
    /// Static feedback linearisation and contact coordinates.
    Sfl { file: String },
    /// Symmetry admissibility and the quotient system.
    Quotient { file: String },
    /// Trivialization into sub-connection normal form.
    Subconnection { file: String },
    /// Partial prolongation, dynamic compensator and flat outputs.
    Cascade { file: String },
    /// Runs the embedded example corpus.
    CorpusCheck {
        /// Store the current reports as the expected ones.
        #[arg(long)]
        bless: bool,
    },
}

fn options(cli: &Cli) -> Result<RunOptions, CliError> {
    let cfg = Config { seed: cli.seed, degree_budget: cli.degree_budget, ..Config::default() };
    let mode = cli.mode.as_deref().map(parse_mode).transpose()?;
    Ok(RunOptions { cfg, mode, split: cli.split.clone() })
}

fn emit(cli: &Cli, report: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).expect("json");
    if let Some(path) = &cli.json {
        std::fs::write(path, &text).map_err(|source| CliError::Io { path: path.clone(), source })?;
    }
    println!("{text}");
    Ok(())
}

fn corpus(cli: &Cli, do_bless: bool) -> Result<bool, CliError> {
    let outcomes = run_corpus(&options(cli)?);
    let mut ok = true;
    for o in &outcomes {
        let status = if o.pass() { "ok" } else { "FAIL" };
        println!("{:<20} {status}", o.name);
        if let Err(e) = &o.report {
            println!("    error: {e}");
        }
        if o.snapshot == Some(false) {
            println!("    report differs from stored report");
        }
        for c in &o.checks {
            let tag = match (c.kind, c.pass) {
                (ExpectKind::Misprint, true) => "printed value does not hold",
                (ExpectKind::Misprint, false) => "FAIL printed value holds",
                (_, true) => "ok",
                (_, false) => "FAIL",
            };
            if cli.verbose || !c.pass || c.kind == ExpectKind::Misprint {
                println!("    line {:>3} {} {tag}: {}", c.line, c.pointer, c.detail);
            }
        }
        ok &= o.pass();
    }
    if do_bless {
        bless(&outcomes)?;
        println!("stored reports written");
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::CorpusCheck { bless } => corpus(&cli, *bless),
        Cmd::Analyze { file } | Cmd::Sfl { file } | Cmd::Quotient { file } | Cmd::Subconnection { file } | Cmd::Cascade { file } => {
            let verb = match &cli.cmd {
                Cmd::Analyze { .. } => Verb::Analyze,
                Cmd::Sfl { .. } => Verb::Sfl,
                Cmd::Quotient { .. } => Verb::Quotient,
                Cmd::Subconnection { .. } => Verb::Subconnection,
                _ => Verb::Cascade,
            };
            read_file(file)
                .and_then(|f| run(Some(verb), &f, options(&cli)?))
                .and_then(|r| emit(&cli, &r))
                .map(|_| true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
