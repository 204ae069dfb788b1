use clap::{Parser, Subcommand};

use coalfrag_cli::commands;
use coalfrag_cli::config::*;

/// Simulation and analysis of coalescence, fragmentation and dynamical
/// percolation on critical random graphs.
#[derive(Parser)]
#[command(name = "coalfrag", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a critical graph and write a snapshot file.
    Sample(SampleConfig),
    /// Run the edge-update process over replicas with snapshot observers.
    Simulate(SimulateConfig),
    /// Per-component anatomy (2-core, kernel, trimming, path bounds).
    Structure(StructureConfig),
    /// Compare the coalescence-forward and fragmentation-backward
    /// constructions of the same density pair.
    DualityTest(DualityConfig),
    /// Classify block-multigraph replicas against the heart/hanging-tree
    /// picture.
    McStructure(McStructureConfig),
    /// Verify the supporting inequalities on random instances.
    LemmaCheck(LemmaCheckConfig),
    /// Distance between two space or collection files.
    Ghp(GhpConfig),
    /// Distributional stability of the largest component across sizes.
    Convergence(ConvergenceConfig),
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_config_error(&err) {
                2
            } else {
                1
            }
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Sample(cfg) => commands::sample(&cfg)?,
        Command::Simulate(cfg) => {
            commands::simulate(&cfg)?;
        }
        Command::Structure(cfg) => commands::structure_report(&cfg)?,
        Command::DualityTest(cfg) => {
            let report = commands::duality_test(&cfg)?;
            eprintln!(
                "ks low-density (stat, p) = {:?}, high-density = {:?}",
                report.ks_low, report.ks_high
            );
        }
        Command::McStructure(cfg) => {
            let out = commands::mc_structure(&cfg)?;
            for row in &out.rows {
                eprintln!(
                    "t = {}: {}/{} replicas violated a flag",
                    row.time, row.failures_any, row.replicas
                );
            }
        }
        Command::LemmaCheck(cfg) => {
            let out = commands::lemma_check(&cfg)?;
            let failed = out.rows.iter().filter(|(_, r)| !r.pass).count();
            eprintln!("{} checks, {} failed", out.rows.len(), failed);
            if !out.all_pass {
                return Ok(3);
            }
        }
        Command::Ghp(cfg) => {
            commands::ghp(&cfg)?;
        }
        Command::Convergence(cfg) => {
            let report = commands::convergence(&cfg)?;
            eprintln!("ks trend non-increasing: {}", report.ks_non_increasing);
        }
    }
    Ok(0)
}

/// Invalid configurations and inputs exit with 2; environment failures with 1.
fn is_config_error(err: &anyhow::Error) -> bool {
    match err.downcast_ref::<coalfrag_core::Error>() {
        Some(coalfrag_core::Error::Io(_)) | Some(coalfrag_core::Error::Json(_)) => false,
        Some(_) => true,
        // command-level validation uses bare messages
        None => err.downcast_ref::<std::io::Error>().is_none(),
    }
}
