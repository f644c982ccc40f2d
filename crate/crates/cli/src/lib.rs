//! Command-line front end: configuration merging, validation and
//! subcommand dispatch.

pub mod cli;
pub mod commands;
pub mod config;

pub use cli::{parse_and_validate, Cli, Command, Overrides};
pub use commands::{dispatch, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};
pub use config::{ConfigError, ConfigProblem, FileConfig, RunConfig};

/// Parses `args`, validates the configuration and runs the subcommand;
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match parse_and_validate(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    let _ = env_logger::Builder::new().parse_filters(&cfg.log_level).format_timestamp(None).try_init();
    dispatch(&cfg, cli.command)
}
