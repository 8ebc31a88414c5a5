//! `crm`: command-line front end for the central rotor model.

mod args;
mod commands;
mod output;
mod plot;

use std::process::ExitCode;

use clap::Parser;
use crm_core::molecule::MoleculeSpec;

use args::{Cli, Command};
use commands::Context;
use output::{CliError, CliResult};

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads: must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("--threads: {e}")))?;
    }
    let spec = MoleculeSpec::resolve(&cli.molecule)
        .map_err(|e| CliError::from(e).for_flag("--molecule"))?;
    let ctx = Context {
        spec,
        source: cli.molecule.clone(),
        n_max: cli.nmax,
        out_dir: cli.out_dir.clone(),
        precision: cli.precision,
    };
    match &cli.command {
        Command::Levels(a) => commands::levels(&ctx, a),
        Command::Kick(a) => commands::kick(&ctx, a),
        Command::Evolve(a) => commands::evolve(&ctx, a),
        Command::SweepField(a) => commands::sweep_field(&ctx, a),
        Command::Validate(a) => commands::validate(&ctx, a),
        Command::Plot(a) => {
            let table = plot::Table::read(&a.input)?;
            let svg = plot::render(&table, a)?;
            let path = commands::write_artifact(&ctx, &a.out, svg.as_bytes())?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
