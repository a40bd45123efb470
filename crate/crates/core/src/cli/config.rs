use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corpus::AssocParams;
use crate::diffusion::DiffusionConfig;
use crate::features::ProjectionMethod;
use crate::io::read_json;
use crate::{Error, Result};

/// Fully resolved run parameters. Every artifact embeds or sidecars this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub fixed_steps: Option<usize>,
    pub seed: u64,
    pub dim: Option<usize>,
    pub method: ProjectionMethod,
    /// Worker threads. Results do not depend on it, so it is not recorded.
    #[serde(skip)]
    pub threads: Option<usize>,
    pub inputs: Vec<String>,
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gamma: 1e-2,
            alpha: 0.15,
            beta: 1.0,
            sigma: 1.0,
            tol: 1e-10,
            max_iters: 1000,
            fixed_steps: None,
            seed: 0,
            dim: None,
            method: ProjectionMethod::Opc,
            threads: None,
            inputs: Vec::new(),
            output: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Opc,
    Random,
}

impl From<MethodArg> for ProjectionMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Opc => ProjectionMethod::Opc,
            MethodArg::Random => ProjectionMethod::Random,
        }
    }
}

/// Flags shared by every subcommand. Each one overrides the config file,
/// which overrides the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON file with any subset of the run parameters.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Domain graph density.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Restart probability of the diffusion.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Exponent of the collocation decay.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Scale of the collocation decay.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// L1 convergence tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Iteration cap of the diffusion.
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// Run exactly this many diffusion steps.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Seed of every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Reduced feature dimension.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Coordinate selection of `reduce`.
    #[arg(long, global = true, value_enum)]
    pub method: Option<MethodArg>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Primary output file.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults, then the config file, then flags.
    pub fn resolve(args: &ConfigArgs, inputs: &[&Path]) -> Result<RunConfig> {
        let mut cfg = match &args.config {
            Some(path) => read_json::<RunConfig>(path).map_err(|e| Error::Config(e.to_string()))?,
            None => RunConfig::default(),
        };
        macro_rules! overlay {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = args.$flag { cfg.$field = v; })*
            };
        }
        overlay!(gamma => gamma, alpha => alpha, beta => beta, sigma => sigma, tol => tol, max_iters => max_iters, seed => seed);
        if args.steps.is_some() {
            cfg.fixed_steps = args.steps;
        }
        if args.dim.is_some() {
            cfg.dim = args.dim;
        }
        if let Some(m) = args.method {
            cfg.method = m.into();
        }
        if args.threads.is_some() {
            cfg.threads = args.threads;
        }
        if let Some(out) = &args.output {
            cfg.output = Some(out.display().to_string());
        }
        if !inputs.is_empty() {
            cfg.inputs = inputs.iter().map(|p| p.display().to_string()).collect();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        self.assoc_params().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.diffusion().validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.dim == Some(0) {
            return Err(Error::Config("dim must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn assoc_params(&self) -> AssocParams {
        AssocParams { beta: self.beta, sigma: self.sigma }
    }

    pub fn diffusion(&self) -> DiffusionConfig {
        DiffusionConfig { alpha: self.alpha, tol: self.tol, max_iters: self.max_iters, fixed_steps: self.fixed_steps }
    }

    pub fn output_path(&self) -> Result<PathBuf> {
        self.output.as_ref().map(PathBuf::from).ok_or_else(|| Error::Config("--output is required".into()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
