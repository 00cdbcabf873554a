use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use softflock::analysis::{certify_run, eta_table};
use softflock::harness::{run_batch, run_simulation, OutputPaths, RunConfig};
use softflock::trajectory::read_trajectory;
use softflock::{ConvergenceCertificate, Error, ModelParams, UBetaParams};

#[derive(Parser)]
#[command(name = "softflock", version, about = "Vicsek flock steering with a shill agent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 4 unless the run is certified.
        #[arg(long)]
        require_certificate: bool,
    },
    /// Run many experiments; prints the aggregate table as CSV.
    Batch {
        /// A JSON file (one config or an array of configs) or a glob of config files.
        #[arg(long)]
        configs: String,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        require_certificate: bool,
    },
    /// Certify a recorded u_beta trajectory.
    Verify {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1e-3)]
        sync_tolerance: f64,
        /// Neighborhood radius used when recounting degenerate sums.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Take model parameters and sync tolerance from this run config instead.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        require_certificate: bool,
    },
    /// Print the eta table and the n-tick bound.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        epsilon: f64,
    },
    /// Serve the live steering UI and session socket.
    #[cfg(feature = "serve")]
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
        /// Directory holding the built UI.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

enum Failure {
    Error(Error),
    Uncertified,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Json(_) | Error::ContractViolation(_) => 2,
        Error::ScenarioViolation { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .init();

    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Uncertified) => {
            eprintln!("certification failed");
            ExitCode::from(4)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value).map_err(Error::from)?;
    writeln!(stdout)?;
    Ok(())
}

fn require(cert: Option<&ConvergenceCertificate>, required: bool) -> Result<(), Failure> {
    if required && !cert.is_some_and(ConvergenceCertificate::passed) {
        return Err(Failure::Uncertified);
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out, require_certificate } => {
            let mut cfg = RunConfig::from_json_file(&config)?;
            if let Some(dir) = out {
                cfg.output_paths = Some(OutputPaths { dir });
            }
            let summary = run_simulation(&cfg)?;
            print_json(&summary)?;
            require(summary.certificate.as_ref(), require_certificate)
        }
        Command::Batch { configs, parallel, out, require_certificate } => {
            let mut cfgs = load_configs(&configs)?;
            if let Some(dir) = &out {
                for (i, cfg) in cfgs.iter_mut().enumerate() {
                    cfg.output_paths.get_or_insert_with(|| OutputPaths { dir: dir.join(format!("run_{i:04}")) });
                }
            }
            let report = run_batch(&cfgs, parallel)?;
            match &out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    report.write_csv(std::fs::File::create(dir.join("aggregate.csv"))?)?;
                    report.write_csv(io::stdout().lock())?;
                }
                None => report.write_csv(io::stdout().lock())?,
            }
            let all_certified = report
                .results
                .iter()
                .all(|r| r.as_ref().is_ok_and(|s| s.certificate.as_ref().is_some_and(ConvergenceCertificate::passed)));
            if require_certificate && !all_certified {
                return Err(Failure::Uncertified);
            }
            Ok(())
        }
        Command::Verify { trajectory, epsilon, beta, sync_tolerance, radius, config, require_certificate } => {
            let states = read_trajectory(&trajectory)?;
            let n = states.first().map_or(0, |s| s.n());
            let (model, tol) = match config {
                Some(path) => {
                    let cfg = RunConfig::from_json_file(path)?;
                    (cfg.model, cfg.sync_tolerance)
                }
                None => (ModelParams::new(n, 0.0, radius), sync_tolerance),
            };
            let ubeta = UBetaParams::new(beta)?;
            let cert = certify_run(&states, &model, ubeta, epsilon, tol)?;
            print_json(&cert)?;
            require(Some(&cert), require_certificate)
        }
        Command::Bounds { n, beta, epsilon } => {
            let table = eta_table(n, beta, epsilon)?;
            let bound = softflock::delta_bound(n, beta, epsilon)?;
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "k,eta")?;
            for (k, v) in table.values.iter().enumerate() {
                writeln!(stdout, "{},{v:.17e}", k + 1)?;
            }
            writeln!(stdout, "delta,{bound:.17e}")?;
            Ok(())
        }
        #[cfg(feature = "serve")]
        Command::Serve { port, bind, assets } => {
            let runtime = tokio::runtime::Runtime::new()?;
            let opts = softflock::live::ServeOptions { bind, port, assets };
            runtime.block_on(softflock::live::serve(opts))?;
            Ok(())
        }
    }
}

fn load_configs(arg: &str) -> Result<Vec<RunConfig>, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{arg}: {e}")))?;
        let parsed = if value.is_array() {
            serde_json::from_value(value)
        } else {
            serde_json::from_value(value).map(|c| vec![c])
        };
        return Ok(parsed.map_err(|e| Error::Config(format!("{arg}: {e}")))?);
    }
    let pattern = glob::glob(arg).map_err(|e| Error::Config(format!("bad glob {arg}: {e}")))?;
    let mut paths: Vec<PathBuf> = pattern.filter_map(Result::ok).filter(|p| p.is_file()).collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no config files match {arg}")).into());
    }
    Ok(paths.iter().map(RunConfig::from_json_file).collect::<Result<_, _>>()?)
}
