//! Experiment configuration: defaults, JSON config files and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fig2,
    Fig2Scaled,
    Fig3,
    BoundsSuite,
    Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Cauchy,
    Logreg,
}

/// Coreset size as a function of N, rounded and floored at one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    LogN,
    SqrtN,
    HalfN,
    FivePlusTwoLogN,
}

macro_rules! names {
    ($t:ty { $($v:ident => $s:literal),* $(,)? }) => {
        impl $t {
            pub const ALL: &'static [$t] = &[$(<$t>::$v),*];

            pub fn name(self) -> &'static str {
                match self { $(<$t>::$v => $s),* }
            }
        }

        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = LabError;

            fn from_str(s: &str) -> Result<Self, LabError> {
                match s {
                    $($s => Ok(<$t>::$v),)*
                    _ => Err(LabError::Config(format!(
                        "unknown {} `{s}` (expected one of: {})",
                        stringify!($t).to_lowercase(),
                        [$($s),*].join(", ")
                    ))),
                }
            }
        }
    };
}

names!(Experiment {
    Fig2 => "fig2",
    Fig2Scaled => "fig2_scaled",
    Fig3 => "fig3",
    BoundsSuite => "bounds_suite",
    Diagnostics => "diagnostics",
});

names!(ModelKind { Cauchy => "cauchy", Logreg => "logreg" });

names!(Schedule {
    LogN => "log_n",
    SqrtN => "sqrt_n",
    HalfN => "half_n",
    FivePlusTwoLogN => "five_plus_two_log_n",
});

impl Schedule {
    /// `round(max(1, schedule(N)))` with natural logarithms.
    pub fn size(self, n: usize) -> usize {
        let x = n as f64;
        let raw = match self {
            Schedule::LogN => x.ln(),
            Schedule::SqrtN => x.sqrt(),
            Schedule::HalfN => 0.5 * x,
            Schedule::FivePlusTwoLogN => 5.0 + 2.0 * x.ln(),
        };
        raw.max(1.0).round() as usize
    }

    pub fn formula(self) -> &'static str {
        match self {
            Schedule::LogN => "round(max(1, ln N))",
            Schedule::SqrtN => "round(max(1, sqrt N))",
            Schedule::HalfN => "round(max(1, N/2))",
            Schedule::FivePlusTwoLogN => "round(max(1, 5 + 2 ln N))",
        }
    }
}

pub const DEFAULT_N_GRID: [usize; 6] = [100, 316, 1000, 3162, 10_000, 31_623];
pub const FULL_N_GRID: [usize; 7] = [100, 316, 1000, 3162, 10_000, 31_623, 100_000];
pub const DIAGNOSTICS_N_GRID: [usize; 2] = [1000, 10_000];
pub const BOUNDS_CONFIGURATIONS: usize = 200;
pub const BOUNDS_N: usize = 500;
pub const THEOREM3_N: usize = 128;
pub const DIAGNOSTICS_M: usize = 100;

/// Every setting of one run after merging file, flags and defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelKind,
    pub n_grid: Vec<usize>,
    pub m_schedules: Vec<Schedule>,
    pub trials: usize,
    pub seed: u64,
    pub sample_count: usize,
    pub output_dir: PathBuf,
    pub full: bool,
    pub self_test: bool,
    pub dump: bool,
}

/// Optional settings as read from a JSON file or the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub experiment: Option<Experiment>,
    pub model: Option<ModelKind>,
    pub n_grid: Option<Vec<usize>>,
    pub m_schedule: Option<Vec<Schedule>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub full: Option<bool>,
    pub self_test: Option<bool>,
    pub dump: Option<bool>,
}

impl PartialConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields of `self` win over those of `base`.
    pub fn over(self, base: PartialConfig) -> PartialConfig {
        PartialConfig {
            experiment: self.experiment.or(base.experiment),
            model: self.model.or(base.model),
            n_grid: self.n_grid.or(base.n_grid),
            m_schedule: self.m_schedule.or(base.m_schedule),
            trials: self.trials.or(base.trials),
            seed: self.seed.or(base.seed),
            samples: self.samples.or(base.samples),
            out: self.out.or(base.out),
            full: self.full.or(base.full),
            self_test: self.self_test.or(base.self_test),
            dump: self.dump.or(base.dump),
        }
    }

    pub fn resolve(self) -> Result<ExperimentConfig, LabError> {
        let experiment = self
            .experiment
            .ok_or_else(|| LabError::Config("no experiment given".into()))?;
        let full = self.full.unwrap_or(false);
        let default_grid: &[usize] = match experiment {
            Experiment::Diagnostics => &DIAGNOSTICS_N_GRID,
            Experiment::BoundsSuite => &[BOUNDS_N],
            _ if full => &FULL_N_GRID,
            _ => &DEFAULT_N_GRID,
        };
        let default_schedules: &[Schedule] = match experiment {
            Experiment::Fig3 => &[Schedule::FivePlusTwoLogN],
            _ => &[Schedule::LogN, Schedule::SqrtN, Schedule::HalfN],
        };
        let default_trials = match experiment {
            Experiment::Fig2 | Experiment::Fig2Scaled => 10,
            Experiment::Fig3 if full => 70,
            Experiment::Fig3 => 20,
            Experiment::BoundsSuite => BOUNDS_CONFIGURATIONS,
            Experiment::Diagnostics => 100,
        };
        let config = ExperimentConfig {
            experiment,
            model: self.model.unwrap_or(ModelKind::Cauchy),
            n_grid: self.n_grid.unwrap_or_else(|| default_grid.to_vec()),
            m_schedules: self.m_schedule.unwrap_or_else(|| default_schedules.to_vec()),
            trials: self.trials.unwrap_or(default_trials),
            seed: self.seed.unwrap_or(20_190_612),
            sample_count: self.samples.unwrap_or(1000),
            output_dir: self.out.unwrap_or_else(|| PathBuf::from("out")),
            full,
            self_test: self.self_test.unwrap_or(false),
            dump: self.dump.unwrap_or(false),
        };
        config.validate()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    /// Defaults for `experiment` and `model` with the given output directory.
    pub fn new(experiment: Experiment, model: ModelKind, output_dir: impl Into<PathBuf>) -> Result<Self, LabError> {
        PartialConfig {
            experiment: Some(experiment),
            model: Some(model),
            out: Some(output_dir.into()),
            ..Default::default()
        }
        .resolve()
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let err = |m: &str| Err(LabError::Config(m.to_string()));
        if self.n_grid.is_empty() {
            return err("n_grid must not be empty");
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return err("n_grid must be strictly increasing");
        }
        if self.n_grid[0] == 0 {
            return err("every N must be at least 1");
        }
        if self.trials == 0 {
            return err("trials must be at least 1");
        }
        if self.m_schedules.is_empty() {
            return err("at least one coreset size schedule is required");
        }
        if self.sample_count == 0 {
            return err("sample count must be at least 1");
        }
        if self.experiment == Experiment::Fig3 {
            if let Some(&n) = self.n_grid.iter().find(|&&n| Schedule::FivePlusTwoLogN.size(n) > self.sample_count) {
                return Err(LabError::Config(format!(
                    "sample count {} is below the coreset size at N = {n}",
                    self.sample_count
                )));
            }
        }
        if self.experiment == Experiment::BoundsSuite && self.n_grid != [BOUNDS_N] {
            return Err(LabError::Config(format!("the bounds suite runs at N = {BOUNDS_N} only")));
        }
        Ok(())
    }
}

/// Parses a comma-separated list.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, LabError>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| LabError::Config(format!("`{t}`: {e}"))))
        .collect()
}
