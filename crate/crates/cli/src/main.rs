use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use dbgibbs::linalg::Backend;
use dbgibbs_cli::{
    builtin_verify, emit_results, run_scenario, suite_files, threads_from_env, Format, Overrides, PassCounts,
    RunError, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "dbgibbs", version, about = "Run detailed-balance Gibbs sampler experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// propagation backend, overriding the config
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    /// seed for random samples, overriding the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output prefix for `run`, output directory for `suite` and `verify`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "both")]
    format: FormatArg,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the built-in invariant suites
    Verify,
    /// Run one scenario file
    Run { config: PathBuf },
    /// Run every .toml scenario in a directory, in name order
    Suite { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Spectral,
    Ode,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

/// Outcome of one scenario: failures counted, or an error.
fn one(c: &ScenarioConfig, prefix: Option<&Path>, format: Format) -> Result<PassCounts, RunError> {
    let t0 = Instant::now();
    let records = run_scenario(c)?;
    let counts = PassCounts::of(&records);
    match prefix {
        Some(p) => {
            for f in emit_results(c, &records, p, format)? {
                eprintln!("wrote {}", f.display());
            }
        }
        None => match format {
            Format::Json => print!("{}", dbgibbs_cli::record::to_json_summary(c, &records)),
            _ => print!("{}", dbgibbs_cli::record::to_csv(c.experiment, &records)),
        },
    }
    eprintln!(
        "{}: {} records, {} pass, {} fail, {} unchecked, {:.2} s",
        c.id(),
        records.len(),
        counts.pass,
        counts.fail,
        counts.unchecked,
        t0.elapsed().as_secs_f64()
    );
    Ok(counts)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = threads_from_env() {
        dbgibbs::set_threads(n);
    }
    let ov = Overrides {
        backend: cli.backend.map(|b| match b {
            BackendArg::Spectral => Backend::Spectral,
            BackendArg::Ode => Backend::Ode,
        }),
        seed: cli.seed,
    };
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
        FormatArg::Both => Format::Both,
    };
    let mut configs: Vec<Result<ScenarioConfig, RunError>> = Vec::new();
    let single = matches!(cli.cmd, Cmd::Run { .. });
    match &cli.cmd {
        Cmd::Verify => configs.extend(builtin_verify().into_iter().map(Ok)),
        Cmd::Run { config } => configs.push(ScenarioConfig::load(config).map_err(RunError::Config)),
        Cmd::Suite { dir } => match suite_files(dir) {
            Ok(files) if files.is_empty() => {
                eprintln!("error: no .toml scenarios in {}", dir.display());
                return ExitCode::from(2);
            }
            Ok(files) => configs.extend(files.iter().map(|f| ScenarioConfig::load(f).map_err(RunError::Config))),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
    }
    let (mut failed, mut errors) = (0, 0);
    for c in configs {
        let result = c.and_then(|mut c| {
            ov.apply(&mut c);
            let prefix = match (&cli.out, single) {
                (Some(o), true) => Some(o.clone()),
                (Some(o), false) => Some(o.join(c.id())),
                (None, _) => c.output.as_ref().map(PathBuf::from),
            };
            one(&c, prefix.as_deref(), format)
        });
        match result {
            Ok(p) => failed += p.fail,
            Err(e) => {
                eprintln!("error: {e}");
                errors += 1;
            }
        }
    }
    if errors > 0 {
        ExitCode::from(2)
    } else if failed > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
