//! `hwq`: verify the bundled constructions, run surgery scripts, prove tuple
//! sets, and print bound tables, closures and Smith normal forms.
//!
//! Exit status: 0 when every item passes, 1 on a verification failure,
//! 2 on a usage or I/O error.

mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hwq_core::bounds::SearchOptions;
use hwq_core::Limits;

use report::Report;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "hwq", version, about = "Minimal Euler characteristic verification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Cap on derived commutation facts per proof.
    #[arg(long, global = true, default_value_t = Limits::default().max_facts)]
    max_facts: usize,
    /// Cap on word length inside proofs.
    #[arg(long, global = true, default_value_t = Limits::default().max_word_length)]
    max_word_length: usize,
    /// Write proof certificates to this file (one certificate) or directory.
    #[arg(long, global = true)]
    emit_cert: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run every bundled check.
    Verify {
        /// Directory of `.hw4` scripts replacing the bundled ones.
        #[arg(long, env = "HWQ_CORPUS")]
        corpus: Option<PathBuf>,
    },
    /// Execute one script file.
    Run { script: PathBuf },
    /// Prove that tuples abelianize a free product of two free abelian groups.
    Prove {
        /// Ranks `m,n` of the two factors.
        #[arg(long, value_parser = parse_pair)]
        free_product: (u32, u32),
        /// One tuple per line: four comma-separated words.
        #[arg(long)]
        tuples: PathBuf,
    },
    /// Bound tables.
    Bounds {
        #[command(subcommand)]
        which: BoundsCmd,
    },
    /// Realizable pairs (R) or integers (S).
    Closure {
        #[arg(long)]
        set: String,
        #[arg(long)]
        max: u32,
    },
    /// Smith normal form of an integer matrix file (`-` for stdin).
    Snf { matrix: PathBuf },
    /// Search for tuple sets reducing `Z^m * Z^n` to `Z^(m+n)`.
    Search {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = SearchOptions::default().budget)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
enum BoundsCmd {
    /// `n, C(n,2), eps, h(n), q(Z^n)` for `0 <= n <= max`.
    Free {
        #[arg(long)]
        max: u64,
    },
    /// Bounds for a finitely generated abelian group with torsion.
    Abelian {
        /// Comma-separated torsion orders, each dividing the next.
        #[arg(long, value_delimiter = ',')]
        torsion: Vec<u64>,
        #[arg(long, default_value_t = 0)]
        rank: u64,
    },
}

fn parse_pair(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(',').ok_or("expected m,n")?;
    let p = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("{x:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let limits = Limits { max_facts: cli.max_facts, max_word_length: cli.max_word_length, ..Limits::default() };
    let mut certs = Vec::new();
    let (name, result) = match &cli.command {
        Cmd::Verify { corpus } => ("verify", commands::verify(corpus.as_deref(), limits, &mut certs)),
        Cmd::Run { script } => ("run", commands::run(script, limits, &mut certs)),
        Cmd::Prove { free_product: (m, n), tuples } => ("prove", commands::prove(*m, *n, tuples, limits, &mut certs)),
        Cmd::Bounds { which: BoundsCmd::Free { max } } => ("bounds free", Ok(commands::bounds_free(*max))),
        Cmd::Bounds { which: BoundsCmd::Abelian { torsion, rank } } => {
            ("bounds abelian", commands::bounds_abelian(torsion.clone(), *rank))
        }
        Cmd::Closure { set, max } => ("closure", commands::closure(set, *max)),
        Cmd::Snf { matrix } => ("snf", commands::snf(matrix)),
        Cmd::Search { m, n, budget, seed } => {
            let opts = SearchOptions { budget: *budget, seed: *seed, limits, ..SearchOptions::default() };
            ("search", commands::search(*m, *n, &opts, &mut certs))
        }
    };
    let items = match result {
        Ok(items) => items,
        Err(message) => {
            eprintln!("hwq: {message}");
            return ExitCode::from(2);
        }
    };
    if let Some(path) = &cli.emit_cert {
        if let Err(message) = commands::write_certs(path, &certs) {
            eprintln!("hwq: {message}");
            return ExitCode::from(2);
        }
    }
    let report = Report::new(name, items);
    let rendered = match cli.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json() + "\n",
    };
    let _ = std::io::stdout().lock().write_all(rendered.as_bytes());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
