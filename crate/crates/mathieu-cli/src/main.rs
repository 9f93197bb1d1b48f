//! `mathieu <command> [flags]`: spectra, projection-norm profiles,
//! classification, singularities, expansions and the verification table for
//! H = −d²/dx² + a·e^{−2πix} + b·e^{2πix}.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use config::{Command, JobConfig, Settings};
use run::CliError;

#[derive(Parser, Debug)]
#[command(name = "mathieu", version, about = "Floquet spectra and spectrality diagnostics for the complex Mathieu-Hill operator")]
struct Cli {
    command: Command,
    /// coefficient of e^{−2πix}, e.g. "1", "0.5-2i"
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// coefficient of e^{2πix}
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// exact α = arg(ab)/π as "m/q"
    #[arg(long, allow_hyphen_values = true)]
    alpha_exact: Option<String>,
    #[arg(long)]
    nmax: Option<usize>,
    /// quasimomentum samples on (−π, π], at least 64
    #[arg(long)]
    tpoints: Option<usize>,
    /// Fourier truncation M (modes −M..M)
    #[arg(long)]
    m: Option<usize>,
    /// real λ-window "lo,hi" for singularity search
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// pairing half-width for the Gasymov form
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// flat key=value file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "kind": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string(), 1),
    };
    let file = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match Settings::parse_file(&text) {
                Ok(s) => s,
                Err(e) => return fail(e.kind(), e.to_string(), 1),
            },
            Err(e) => return fail("io", format!("{}: {e}", path.display()), 1),
        },
        None => Settings::default(),
    };
    let flags = Settings {
        a: cli.a,
        b: cli.b,
        alpha_exact: cli.alpha_exact,
        n_max: cli.nmax,
        t_points: cli.tpoints,
        m: cli.m,
        window: cli.window,
        h: cli.h,
        out: cli.out,
        seed: cli.seed,
    };
    let cfg = match JobConfig::resolve(cli.command, flags.over(file)) {
        Ok(c) => c,
        Err(e) => return fail(e.kind(), e.to_string(), 1),
    };
    match run::run(&cfg) {
        Ok(outcome) => {
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::from(outcome.status as u8)
        }
        Err(CliError::Lib(e)) => {
            let code = if e.is_nonconvergence() { 2 } else { 1 };
            fail(e.kind(), e.to_string(), code)
        }
        Err(CliError::Io(msg)) => fail("io", msg, 1),
    }
}
