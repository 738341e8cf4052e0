#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod inputs;
mod report;
mod svg;

use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::Parser;

use args::{CatalogCommand, Cli, Command, Common};
use inputs::UsageError;
use report::Timing;

fn common(cmd: &Command) -> Option<&Common> {
    match cmd {
        Command::Stability(a) => Some(&a.common),
        Command::Flow(a) => Some(&a.common),
        Command::Spirallike(a) => Some(&a.common),
        Command::Hull(a) => Some(&a.common),
        Command::Loewner(a) => Some(&a.common),
        Command::Operators(a) => Some(&a.common),
        Command::Catalog(_) => None,
    }
}

/// Returns whether every check passed.
fn run(cli: &Cli) -> anyhow::Result<bool> {
    let started = Instant::now();
    let outcome = match &cli.command {
        Command::Stability(a) => commands::stability(a)?,
        Command::Flow(a) => commands::flow(a)?,
        Command::Spirallike(a) => commands::spirallike(a)?,
        Command::Hull(a) => commands::hull(a)?,
        Command::Loewner(a) => commands::loewner(a)?,
        Command::Operators(a) => commands::operators(a)?,
        Command::Catalog(CatalogCommand::List) => {
            print!("{}", commands::catalog_list()?);
            return Ok(true);
        }
        Command::Catalog(CatalogCommand::Show { name, out }) => {
            let text = commands::catalog_show(name)?;
            match out {
                Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            return Ok(true);
        }
    };
    let c = common(&cli.command).expect("checking subcommands carry common flags");
    let mut report = outcome.report;
    if c.timing {
        report.timing = Some(Timing {
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        });
    }
    report.emit(c.out.as_deref())?;
    if let (Some(path), Some(plot)) = (&c.svg, &outcome.plot) {
        std::fs::write(path, plot.render()).with_context(|| format!("writing {}", path.display()))?;
    }
    report.summarize();
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
