//! Command line front end: mine a space, aggregate and verify the results,
//! render diagrams and search for symmetric performers.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use tmdim::census::{census, verify};
use tmdim::diagrams::{render, symmetric_performers};
use tmdim::pipeline::{mine, InputRange, MiningJob, EXTENDED_BUDGET, EXTENDED_INPUTS};
use tmdim::sim::DEFAULT_BUDGET;
use tmdim::{MachineId, Space};

#[derive(Parser)]
#[command(name = "tmdim", version, about = "Mine small Turing machine spaces and the box dimension of their space-time diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate, fit and analyse every machine of a space.
    Mine {
        /// Space as `n,k`.
        #[arg(long, default_value = "3,2")]
        spec: Space,
        /// Unary inputs as `a..b` (inclusive).
        #[arg(long, default_value = "1..21")]
        inputs: InputRange,
        /// Step budget per input.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Output directory; an existing run of the same job is resumed.
        #[arg(long)]
        out: PathBuf,
        /// Comma separated machine numbers to mine instead of the full space.
        #[arg(long, value_delimiter = ',')]
        ids: Option<Vec<u64>>,
        /// Mine every machine instead of one per twin class.
        #[arg(long)]
        no_twin_reduction: bool,
        /// Last input of the extended pass for alternating machines.
        #[arg(long, default_value_t = EXTENDED_INPUTS)]
        extended_inputs: u64,
        /// Step budget per input of the extended pass.
        #[arg(long, default_value_t = EXTENDED_BUDGET)]
        extended_budget: u64,
        /// Prove divergence by exact repetition only.
        #[arg(long)]
        no_translation_proof: bool,
        /// Suppress progress output.
        #[arg(long)]
        quiet: bool,
    },
    /// Census tables of a mining directory.
    Census {
        dir: PathBuf,
    },
    /// Write space-time diagrams as PBM images.
    Render {
        #[arg(long, default_value = "2,2")]
        spec: Space,
        #[arg(long)]
        id: u64,
        #[arg(long, default_value = "1..3")]
        inputs: InputRange,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write a composite sheet with the diagrams side by side.
        #[arg(long)]
        sheet: bool,
    },
    /// Search for machine pairs with mirrored diagrams on even inputs.
    Symmetric {
        #[arg(long, default_value = "3,2")]
        spec: Space,
        /// Range whose even members are searched.
        #[arg(long, default_value = "2..12")]
        even_inputs: InputRange,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        /// Write the result as JSON to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check the per-machine assertions over a mining directory.
    Verify {
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Mine {
            spec,
            inputs,
            budget,
            out,
            ids,
            no_twin_reduction,
            extended_inputs,
            extended_budget,
            no_translation_proof,
            quiet,
        } => {
            let job = MiningJob {
                space: spec,
                inputs,
                budget,
                twin_reduction: !no_twin_reduction,
                extended_inputs,
                extended_budget,
                translation_proof: !no_translation_proof,
                ids,
            };
            let summary = mine(&job, &out, |done, total| {
                if !quiet {
                    eprint!("\r{done}/{total} machines");
                }
            })?;
            if !quiet {
                eprintln!();
            }
            println!("{summary}");
        }
        Command::Census { dir } => {
            let table = census(&dir)?;
            let text = table.to_string();
            fs::write(dir.join("census.txt"), format!("{text}\n")).context("writing census.txt")?;
            fs::write(dir.join("census.json"), serde_json::to_string_pretty(&table)? + "\n")
                .context("writing census.json")?;
            println!("{text}");
        }
        Command::Render {
            spec,
            id,
            inputs,
            budget,
            out,
            sheet,
        } => {
            let id = MachineId::new(id, spec)?;
            let outcome = render(id, inputs, budget, &out, sheet)?;
            for (x, why) in &outcome.skipped {
                eprintln!("skipped input {x}: {why}");
            }
            for p in outcome.written.iter().chain(&outcome.sheet) {
                println!("{}", p.display());
            }
        }
        Command::Symmetric {
            spec,
            even_inputs,
            budget,
            json,
        } => {
            let xs: Vec<u64> = even_inputs.iter().filter(|x| x % 2 == 0).collect();
            if xs.is_empty() {
                bail!("no even input in {even_inputs}");
            }
            let result = symmetric_performers(spec, &xs, budget)?;
            println!(
                "identity machines: {}, non-palindromic: {}, pairs: {}",
                result.identity_machines,
                result.candidates,
                result.pairs.len()
            );
            for p in &result.pairs {
                let steps: Vec<String> = p.steps.iter().map(|(x, t)| format!("{x}:{t}")).collect();
                println!(
                    "{} ({} alike) {} ({} alike){} steps {}",
                    p.first,
                    p.first_class,
                    p.second,
                    p.second_class,
                    if p.reversed_table { " (reversed machine)" } else { "" },
                    steps.join(" ")
                );
            }
            if let Some(path) = json {
                fs::write(&path, serde_json::to_string_pretty(&result)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Verify { dir } => {
            let summary = verify(&dir)?;
            println!("{summary}");
            if !summary.violations.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
