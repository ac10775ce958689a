//! Command-line front end for `lauewalk-core`.

pub mod args;
mod commands;
pub mod envelope;

pub use args::{parse_args, Command, RunConfig};
pub use commands::run;
pub use envelope::{emit, Cell, Format, ResultEnvelope};

use std::ffi::OsString;
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<lauewalk_core::Error> for CliError {
    fn from(e: lauewalk_core::Error) -> Self {
        use lauewalk_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::InvalidArgument(_) | E::OverrideOutOfRange { .. } | E::OracleTooLarge { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn execute(rc: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let env = run(rc)?;
    match &rc.output {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
            emit(&env, rc.format, &mut file)
        }
        None => emit(&env, rc.format, stdout),
    }
}

/// Full program: parse, run, emit. Returns the process exit code.
pub fn main_with_args<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_args(argv).and_then(|rc| execute(&rc, stdout));
    match result {
        Ok(()) => 0,
        Err(CliError::Clap(e)) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
            } else {
                let _ = stdout.write_all(text.as_bytes());
            }
            e.exit_code()
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.exit_code() == 2 {
                let _ = writeln!(stderr, "\nUsage: lauewalk <COMMAND> [OPTIONS]\nFor more information, try '--help'.");
            }
            e.exit_code()
        }
    }
}
