//! Flat run configuration, read from TOML and overridden from the command line.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

use fracrbf::assembly::{check_kernel, AssemblyError, SpatialDerivative};
use fracrbf::kernels::RadialKernel;
use fracrbf::nodes::{check_square_count, NodeError};
use fracrbf::params::{FractionalParams, MarketCoefficients, ParamsError};
use fracrbf::precondition::PreconditionerForm;
use fracrbf::problems::ProblemId;
use fracrbf::solver::SolverOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Nodes(#[from] NodeError),
    #[error(transparent)]
    Kernel(#[from] AssemblyError),
    #[error("the custom problem has no built-in data; use the library API")]
    CustomProblem,
    #[error("steps must be at least 1")]
    NoSteps,
    #[error("{steps} steps of {dt} end at t = {end}, beyond the problem interval [{t0}, {t1}]")]
    Interval {
        steps: usize,
        dt: f64,
        end: f64,
        t0: f64,
        t1: f64,
    },
    #[error("slice step {step} exceeds the step count {steps}")]
    SliceStep { step: usize, steps: usize },
    #[error("slice_samples must be at least 2, got {0}")]
    SliceSamples(usize),
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
}

/// Every key is optional in the file; missing keys take the defaults, which
/// reproduce the `(1, 1, 100)` cell of the first table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub alpha: f64,
    pub beta: f64,
    pub np: usize,
    pub dt: f64,
    pub steps: usize,
    #[serde(with = "kernel_text")]
    pub kernel: RadialKernel,
    pub precondition: bool,
    pub preconditioner: PreconditionerForm,
    pub spatial: SpatialDerivative,
    pub sigma: f64,
    pub rate: f64,
    pub out: PathBuf,
    /// Steps at which to write diagonal solution slices; empty means `0` and the last step.
    pub slice_steps: Vec<usize>,
    pub slice_samples: usize,
    /// Adds wall-clock columns, which makes the outputs differ between reruns.
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemId::Example1,
            alpha: 1.0,
            beta: 1.0,
            np: 100,
            dt: 1.0 / 25.0,
            steps: 25,
            kernel: RadialKernel::default(),
            precondition: true,
            preconditioner: PreconditionerForm::Factored,
            spatial: SpatialDerivative::RiemannLiouville,
            sigma: MarketCoefficients::default().sigma,
            rate: MarketCoefficients::default().rate,
            out: PathBuf::from("out"),
            slice_steps: Vec::new(),
            slice_samples: 101,
            timings: false,
        }
    }
}

mod kernel_text {
    use fracrbf::kernels::RadialKernel;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(k: &RadialKernel, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(k)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RadialKernel, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn market(&self) -> MarketCoefficients {
        MarketCoefficients::new(self.sigma, self.rate)
    }

    pub fn params(&self) -> Result<FractionalParams, ParamsError> {
        FractionalParams::new(self.alpha, self.beta, self.market(), self.dt, 0.0)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            precondition: self.precondition,
            preconditioner_form: self.preconditioner,
            spatial: self.spatial,
            ..SolverOptions::default()
        }
    }

    /// The slices to write, with the default filled in.
    pub fn slices(&self) -> Vec<usize> {
        if self.slice_steps.is_empty() {
            vec![0, self.steps]
        } else {
            self.slice_steps.clone()
        }
    }

    /// Checks every field against the preconditions of the library calls it
    /// feeds, so a bad config fails before anything is assembled.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let params = self.params()?;
        check_kernel(&self.kernel)?;
        let problem = self
            .problem
            .build(self.market())
            .ok_or(ConfigError::CustomProblem)?;
        match problem.dim() {
            1 if self.np < 2 => return Err(NodeError::TooFewChebyshev(self.np).into()),
            2 => check_square_count(self.np)?,
            _ => {}
        }
        if self.steps == 0 {
            return Err(ConfigError::NoSteps);
        }
        let (t0, t1) = problem.time;
        let end = params.time(self.steps);
        if end > t1 + 1e-9 * self.dt {
            return Err(ConfigError::Interval {
                steps: self.steps,
                dt: self.dt,
                end,
                t0,
                t1,
            });
        }
        if let Some(&step) = self.slice_steps.iter().find(|&&s| s > self.steps) {
            return Err(ConfigError::SliceStep {
                step,
                steps: self.steps,
            });
        }
        if self.slice_samples < 2 {
            return Err(ConfigError::SliceSamples(self.slice_samples));
        }
        Ok(())
    }
}
