//! `conekahler`: run a verification or solver configuration, or compare two reports.
//!
//! Exit codes: `0` all checks passed, `2` a check failed, `3` configuration
//! or input error, `4` numerical failure (a trace is written to the output
//! directory).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod plot;
mod report;

use commands::RunError;
use config::RunConfig;
use report::Report;

const EXIT_CHECK: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "conekahler", version, about = "Cone-angle Kähler metrics: verification suites and solvers")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configuration in a TOML file and write `report.json`.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the file and the environment.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Tabulate quantity ratios between two reports at `N` and `2N`.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Also write the comparison as JSON.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {}", msg.to_string().replace('\n', " "));
    ExitCode::from(EXIT_CONFIG)
}

fn run(path: &Path, output_dir: Option<&Path>) -> ExitCode {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return config_error(format!("cannot read {}: {e}", path.display())),
    };
    let cfg = match RunConfig::parse(&text, output_dir) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let invocation = format!("conekahler run {}", path.display());
    let start = Instant::now();
    match commands::run(&cfg, invocation) {
        Ok(report) => finish(&cfg, &report, start),
        Err(RunError::Config(msg)) => config_error(msg),
        Err(RunError::Io(e)) => config_error(format!("output: {e}")),
        Err(RunError::Numerical(e)) => {
            let trace = cfg.output_dir.join("failure.txt");
            let _ = fs::create_dir_all(&cfg.output_dir);
            let _ = fs::write(&trace, format!("{e}\n\n{e:#?}\n"));
            eprintln!("error: numerical failure: {e} (trace in {})", trace.display());
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn finish(cfg: &RunConfig, report: &Report, start: Instant) -> ExitCode {
    let path = cfg.output_dir.join("report.json");
    if let Err(e) = report.write(&path) {
        return config_error(format!("cannot write {}: {e}", path.display()));
    }
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {:e} ({:?} {:e})", c.name, c.measured, c.comparison, c.threshold);
    }
    eprintln!("{} finished in {:.1}s, report at {}", cfg.command.name(), start.elapsed().as_secs_f64(), path.display());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    }
}

fn compare(a: &Path, b: &Path, output: Option<&Path>) -> ExitCode {
    let load = |p: &Path| Report::read(p).map_err(|e| format!("cannot read report {}: {e}", p.display()));
    let (ra, rb) = match (load(a), load(b)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return config_error(e),
    };
    let summary = match report::compare(&ra, &rb) {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    print!("{}", summary.table());
    if let Some(out) = output {
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
        if let Err(e) = fs::write(out, text) {
            return config_error(format!("cannot write {}: {e}", out.display()));
        }
    }
    if summary.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match cli.command {
        Cmd::Run { config, output_dir } => run(&config, output_dir.as_deref()),
        Cmd::Compare { a, b, output } => compare(&a, &b, output.as_deref()),
    }
}
