use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fermisim::experiments::{diagnose_density, emit_report, parse_config, run_experiment, DensityCheckpoint, ParsedConfig};
use fermisim::{Error, PhaseSpaceDensity};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fermisim", version, about = "Mean-field dynamics of fermionic mixed states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the sweep.
        #[arg(long, env = "FERMISIM_THREADS")]
        threads: Option<usize>,
    },
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize a density or phase-space checkpoint.
    Diagnose {
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Format { .. } => Failure::Validation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load_config(path: &Path) -> Result<ParsedConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    let parsed = parse_config(&text)?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed)
}

fn run(config: &Path, out: Option<PathBuf>, threads: Option<usize>) -> Result<(), Failure> {
    let parsed = load_config(config)?;
    let cfg = parsed.config;
    let out_dir = out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("out/{}-{}", cfg.kind.name(), &cfg.hash()[..12])));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        if k == 0 {
            return Err(Failure::Validation("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
    let report = pool.install(|| run_experiment(&cfg))?;
    let written = emit_report(&report, &out_dir)?;
    for check in &report.checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", check.name, check.detail);
    }
    println!("wrote {} files to {}", written.len(), out_dir.display());
    Ok(())
}

fn validate(config: &Path) -> Result<(), Failure> {
    let parsed = load_config(config)?;
    let cfg = &parsed.config;
    println!(
        "ok: {} with {} sweep point(s), hash {}",
        cfg.kind.name(),
        cfg.sweep().len(),
        cfg.hash()
    );
    Ok(())
}

fn diagnose(path: &Path) -> Result<(), Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    let value = if bytes.starts_with(b"FSDM1") {
        let cp = DensityCheckpoint::from_bytes(&bytes, path)?;
        serde_json::to_value(diagnose_density(&cp, 8)?).expect("diagnostics serialize")
    } else if bytes.starts_with(b"FSPS1") {
        let f = PhaseSpaceDensity::from_bytes(&bytes, path)?;
        json!({
            "nx": f.nx(),
            "nv": f.nv(),
            "mass": f.mass(),
            "particle_number": f.particle_number(),
            "min_value": f.min_value(),
        })
    } else {
        return Err(Failure::Validation(format!("{}: unknown checkpoint format", path.display())));
    };
    println!("{}", serde_json::to_string_pretty(&value).expect("json"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, threads } => run(&config, out, threads),
        Command::Validate { config } => validate(&config),
        Command::Diagnose { checkpoint } => diagnose(&checkpoint),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
