use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use coreset_lab::config::{parse_list, Experiment, ModelKind, PartialConfig, Schedule};
use coreset_lab::{run, ExitStatus, LabError};

/// Bayesian coreset experiments: scaling sweeps, bound checks, diagnostics.
#[derive(Debug, Parser)]
#[command(name = "coreset-lab", version)]
struct Cli {
    /// fig2, fig2_scaled, fig3, bounds_suite or diagnostics.
    experiment: Option<String>,
    /// cauchy or logreg.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated, strictly increasing dataset sizes.
    #[arg(long = "n-grid")]
    n_grid: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Posterior samples used by subsample-optimize.
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Paper-scale trial counts and N up to 10^5.
    #[arg(long)]
    full: bool,
    /// Comma-separated coreset size schedules.
    #[arg(long = "m-schedule")]
    m_schedule: Option<String>,
    /// JSON file with any of the settings above; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corrupt every lower bound to check that the checker notices.
    #[arg(long = "self-test")]
    self_test: bool,
    /// Also write datasets, weights and posterior grids for trial 0.
    #[arg(long)]
    dump: bool,
}

fn flags(cli: &Cli) -> Result<PartialConfig, LabError> {
    Ok(PartialConfig {
        experiment: cli.experiment.as_deref().map(str::parse::<Experiment>).transpose()?,
        model: cli.model.as_deref().map(str::parse::<ModelKind>).transpose()?,
        n_grid: cli.n_grid.as_deref().map(parse_list::<usize>).transpose()?,
        m_schedule: cli.m_schedule.as_deref().map(parse_list::<Schedule>).transpose()?,
        trials: cli.trials,
        seed: cli.seed,
        samples: cli.samples,
        out: cli.out.clone(),
        full: cli.full.then_some(true),
        self_test: cli.self_test.then_some(true),
        dump: cli.dump.then_some(true),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ExitStatus::ConfigError as u8 } else { 0 });
        }
    };
    let config = flags(&cli).and_then(|f| {
        let file = match &cli.config {
            Some(p) => PartialConfig::from_json_file(p)?,
            None => PartialConfig::default(),
        };
        f.over(file).resolve()
    });
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(ExitStatus::ConfigError as u8);
        }
    };
    match run(&config) {
        Ok(report) => {
            for f in &report.fits {
                println!(
                    "{} {}: slope {:.4}, r² {:.3}, theory constant {:.4e}",
                    f.schedule,
                    serde_json::to_string(&f.kind).unwrap_or_default().trim_matches('"'),
                    f.slope,
                    f.r_squared,
                    f.theory_constant
                );
            }
            if let Some(d) = &report.diagnostics {
                println!("median ratio across N: {:.3}", d.median_ratio);
            }
            if report.violations > 0 {
                eprintln!("{} invariant violation(s); see {}", report.violations, config.output_dir.display());
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(report.exit_status() as u8)
        }
        Err(LabError::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(ExitStatus::ConfigError as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
