//! File formats, configuration, parallel drivers and the `illiquid`
//! command line on top of [`illiquid_core`].

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod ingest;
pub mod parallel;

pub use illiquid_core as core;

use std::ffi::OsString;

use clap::Parser;

pub use error::CliError;

/// Outcome of one invocation, as the binary reports it.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: i32,
}

/// Parses `argv` and runs the command. Never exits the process.
pub fn run_args<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Outcome {
                    stdout: rendered,
                    stderr: String::new(),
                    exit_code: 0,
                };
            }
            let first = rendered
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            return Outcome {
                stdout: String::new(),
                stderr: format!("error[usage]: {first}\n{rendered}"),
                exit_code: 2,
            };
        }
    };
    match commands::run(&cli) {
        Ok(ctx) => Outcome {
            stdout: ctx.report,
            stderr: ctx.warnings.iter().map(|w| format!("warning: {w}\n")).collect(),
            exit_code: 0,
        },
        Err(e) => Outcome {
            stdout: String::new(),
            stderr: format!("error[{}]: {}\n", e.code(), single_line(&e.to_string())),
            exit_code: e.exit_code(),
        },
    }
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
