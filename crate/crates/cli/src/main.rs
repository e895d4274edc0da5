mod args;
mod commands;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Format, OutputArgs};
use commands::{CliError, Report};

const EXIT_USAGE: u8 = 64;

fn format_for(out: &OutputArgs) -> Option<Format> {
    out.format.or_else(|| {
        let path = out.output.as_deref()?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Some(if json { Format::Json } else { Format::Csv })
    })
}

fn emit(report: &Report, out: &OutputArgs) -> Result<(), CliError> {
    let Some(format) = format_for(out) else {
        println!("{}", report.summary);
        return Ok(());
    };
    let bytes = match format {
        Format::Csv => &report.csv,
        Format::Json => &report.json,
    };
    match out.output.as_deref().filter(|p| *p != Path::new("-")) {
        Some(path) => {
            std::fs::write(path, bytes).map_err(|source| CliError::Output {
                path: path.to_path_buf(),
                source,
            })?;
            println!("{}", report.summary);
        }
        None => {
            // the artifact owns stdout; the summary moves to stderr
            eprintln!("{}", report.summary);
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Output {
                    path: "-".into(),
                    source,
                })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if let Some(jobs) = cli.jobs.filter(|&j| j > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    let result = commands::run(&cli.command).and_then(|(report, out)| emit(&report, out));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
