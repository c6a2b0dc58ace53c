mod config;
mod error;
mod experiment;
mod initial;
mod presets;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;
use experiment::RunManifest;

/// Reproducible experiment runner for the bbmlab library.
#[derive(Parser)]
#[command(name = "bbmlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more JSON experiment configurations.
    Run {
        #[arg(long = "config", required = true, num_args = 1..)]
        configs: Vec<PathBuf>,
        /// Output root; defaults to each config's output_dir, then ./out.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run configurations concurrently (capped by BBMLAB_THREADS).
        #[arg(long)]
        parallel: bool,
    },
    /// Run a named preset.
    Preset {
        name: String,
        /// Parameter override, `key=value`; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Print the generated configuration instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// List presets and their parameters.
    List,
}

const EXIT_ERROR: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(EXIT_ERROR)
        }
    }
}

/// Returns whether every check passed.
fn dispatch(command: Command) -> Result<bool, CliError> {
    match command {
        Command::List => {
            for p in presets::CATALOG {
                let params: Vec<String> =
                    p.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{:<24} {}", p.name, p.summary);
                println!("{:<24} params: {}", "", params.join(" "));
            }
            Ok(true)
        }
        Command::Preset {
            name,
            params,
            out,
            print_config,
        } => {
            let overrides = presets::parse_overrides(&params)?;
            let cfg = presets::build(&name, &overrides)?;
            if print_config {
                let text =
                    serde_json::to_string_pretty(&cfg).map_err(|e| CliError::Io(e.to_string()))?;
                println!("{text}");
                return Ok(true);
            }
            let manifest = experiment::run(&cfg, &out)?;
            summarize(&manifest, &out);
            Ok(manifest.checks_passed)
        }
        Command::Run {
            configs,
            out,
            parallel,
        } => {
            let loaded = configs
                .iter()
                .map(|p| ExperimentConfig::load(p))
                .collect::<Result<Vec<_>, _>>()?;
            let jobs: Vec<(ExperimentConfig, PathBuf)> = loaded
                .into_iter()
                .map(|c| {
                    let root = out
                        .clone()
                        .or_else(|| c.output_dir.clone())
                        .unwrap_or_else(|| PathBuf::from("out"));
                    (c, root)
                })
                .collect();
            let threads = if parallel { thread_cap() } else { 1 };
            let results = run_all(&jobs, threads);
            let mut all_passed = true;
            let mut first_error = None;
            for ((cfg, root), r) in jobs.iter().zip(results) {
                match r {
                    Ok(m) => {
                        summarize(&m, root);
                        all_passed &= m.checks_passed;
                    }
                    Err(e) => {
                        eprintln!("{}: failed: {e}", cfg.name);
                        first_error.get_or_insert(e);
                    }
                }
            }
            match first_error {
                Some(e) => Err(e),
                None => Ok(all_passed),
            }
        }
    }
}

fn thread_cap() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("BBMLAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .unwrap_or(available),
        Err(_) => available,
    }
}

/// Runs jobs on up to `threads` workers; results keep the input order.
fn run_all(
    jobs: &[(ExperimentConfig, PathBuf)],
    threads: usize,
) -> Vec<Result<RunManifest, CliError>> {
    if threads <= 1 || jobs.len() <= 1 {
        return jobs
            .iter()
            .map(|(c, root)| experiment::run(c, root))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RunManifest, CliError>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads.min(jobs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((cfg, root)) = jobs.get(i) else {
                    break;
                };
                let r = experiment::run(cfg, root);
                *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .unwrap_or_else(|e| e.into_inner())
                .unwrap_or_else(|| Err(CliError::Io("worker exited without a result".into())))
        })
        .collect()
}

fn summarize(m: &RunManifest, root: &Path) {
    let status = if m.checks_passed {
        "ok"
    } else {
        "CHECK FAILED"
    };
    println!(
        "{}: {status} ({:.2}s) -> {} [fingerprint {}]",
        m.name,
        m.wall_clock_seconds,
        root.join(&m.name).display(),
        &m.fingerprint[..16]
    );
}
