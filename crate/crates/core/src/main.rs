use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use kerr_squeeze::harness::{self, Experiment, ExperimentConfig, Format, GridSpec, HarnessError};
use kerr_squeeze::interferometer::Compensation;

/// Post-selected phase squeezing experiments.
#[derive(Debug, Parser)]
#[command(name = "kerr-squeeze", version, allow_negative_numbers = true)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    phi0: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// Compensating phase in radians, or `auto`.
    #[arg(long)]
    delta: Option<Compensation>,
    #[arg(long)]
    fidelity_target: Option<f64>,
    /// MIN:MAX:N
    #[arg(long)]
    t_grid: Option<GridSpec>,
    /// MIN:MAX:N
    #[arg(long)]
    p_grid: Option<GridSpec>,
    /// Metres.
    #[arg(long)]
    wavelength: Option<f64>,
    /// Photons per second, for `power`.
    #[arg(long)]
    flux: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Shift the coherent reference onto the post-selected peak.
    #[arg(long)]
    align_peaks: bool,
}

impl Cli {
    fn flags(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: Some(self.experiment),
            alpha: self.alpha,
            phi0: self.phi0,
            t: self.t,
            delta: self.delta,
            fidelity_target: self.fidelity_target,
            t_grid: self.t_grid,
            p_grid: self.p_grid,
            wavelength: self.wavelength,
            flux: self.flux,
            output_path: self.out.clone(),
            format: self.format,
            align_peaks: self.align_peaks.then_some(true),
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(harness::THREADS_ENV) {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            HarnessError::Usage(format!(
                "{} must be a positive integer, got '{v}'",
                harness::THREADS_ENV
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| HarnessError::Io(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Usage(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let cfg = file.overridden_by(cli.flags());
    let report = thread_pool()?.install(|| harness::run(&cfg))?;
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let text = report.render(report.config.format, stamp);
    match &report.config.output_path {
        Some(path) => std::fs::write(path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = HarnessError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.record());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
