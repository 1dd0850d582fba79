//! Flat JSON config files and the matching command-line overrides.
//!
//! Keys use the pipeline's parameter names (`k`, `k0`, `step`, `k_final`,
//! `K`, `alpha`, `k_nn`, `sigma`, `m_points`, `epsilon_scale`, `t_scale`,
//! `reg_weight`, `transfer_mode`, `threshold`, `seed`, `method`, plus the
//! baseline knobs). Unknown keys are rejected; flags override file values.

use std::path::Path;

use clap::Args;

use semfm::pipeline::{Method, PipelineParams};
use semfm::transfer::TransferMode;
use semfm::Error;

const KNOWN_KEYS: &[&str] = &[
    "k",
    "k0",
    "step",
    "k_final",
    "K",
    "alpha",
    "k_nn",
    "sigma",
    "m_points",
    "epsilon_scale",
    "t_scale",
    "reg_weight",
    "transfer_mode",
    "threshold",
    "seed",
    "method",
    "wks_energies",
    "wks_sigma_scale",
    "baseline_k",
];

pub fn apply_config_file(params: &mut PipelineParams, path: &Path) -> Result<(), Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&text)
        .map_err(|e| Error::JsonFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;

    let bad_key = |key: &str, expected: &str| {
        Error::InvalidArgument(format!("config key `{key}` expects {expected}"))
    };
    let as_usize = |key: &str, v: &serde_json::Value| -> Result<usize, Error> {
        v.as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| bad_key(key, "a nonnegative integer"))
    };
    let as_f64 = |key: &str, v: &serde_json::Value| -> Result<f64, Error> {
        v.as_f64().ok_or_else(|| bad_key(key, "a number"))
    };

    for (key, value) in &doc {
        match key.as_str() {
            "k" => params.k_basis = as_usize(key, value)?,
            "k0" => params.k0 = as_usize(key, value)?,
            "step" => params.step = as_usize(key, value)?,
            "k_final" => params.k_final = as_usize(key, value)?,
            "K" => params.n_clusters = as_usize(key, value)?,
            "alpha" => params.alpha = as_usize(key, value)?,
            "k_nn" => params.k_nn = as_usize(key, value)?,
            "sigma" => params.sigma = as_f64(key, value)?,
            "m_points" => params.m_points = as_usize(key, value)?,
            "epsilon_scale" => params.epsilon_scale = as_f64(key, value)?,
            "t_scale" => params.t_scale = as_f64(key, value)?,
            "reg_weight" => params.reg_weight = as_f64(key, value)?,
            "threshold" => params.threshold = as_f64(key, value)?,
            "seed" => {
                params.seed = value
                    .as_u64()
                    .ok_or_else(|| bad_key(key, "a nonnegative integer"))?
            }
            "transfer_mode" => {
                params.transfer_mode = parse_transfer_mode(
                    value.as_str().ok_or_else(|| bad_key(key, "a string"))?,
                )?
            }
            "method" => {
                params.method =
                    Method::parse(value.as_str().ok_or_else(|| bad_key(key, "a string"))?)?
            }
            "wks_energies" => params.wks_energies = as_usize(key, value)?,
            "wks_sigma_scale" => params.wks_sigma_scale = as_f64(key, value)?,
            "baseline_k" => params.baseline_k = as_usize(key, value)?,
            unknown => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key `{unknown}` (known keys: {})",
                    KNOWN_KEYS.join(", ")
                )))
            }
        }
    }
    Ok(())
}

pub fn parse_transfer_mode(name: &str) -> Result<TransferMode, Error> {
    match name {
        "pointwise" => Ok(TransferMode::Pointwise),
        "indicator" => Ok(TransferMode::Indicator),
        other => Err(Error::InvalidArgument(format!(
            "unknown transfer mode `{other}` (expected pointwise or indicator)"
        ))),
    }
}

/// Command-line parameter overrides; every field mirrors a config key.
#[derive(Args, Clone)]
pub struct ParamOverrides {
    /// Basis size (refinement ceiling).
    #[arg(long)]
    k: Option<usize>,
    /// Initial estimation dimension.
    #[arg(long)]
    k0: Option<usize>,
    /// Refinement dimension increment.
    #[arg(long)]
    step: Option<usize>,
    /// Final refinement dimension.
    #[arg(long)]
    k_final: Option<usize>,
    /// Semantic cluster count per shape.
    #[arg(long = "K", id = "K")]
    n_clusters: Option<usize>,
    /// Anchor pair count.
    #[arg(long)]
    alpha: Option<usize>,
    /// Spatial kNN degree of the semantic graph.
    #[arg(long)]
    k_nn: Option<usize>,
    /// Gaussian bandwidth (<= 0 selects the median heuristic).
    #[arg(long)]
    sigma: Option<f64>,
    /// Sparse cloud size.
    #[arg(long)]
    m_points: Option<usize>,
    /// Aggregation radius as a fraction of the bounding-box diagonal.
    #[arg(long)]
    epsilon_scale: Option<f64>,
    /// Descriptor diffusion time multiplier (x mean-edge-length^2).
    #[arg(long)]
    t_scale: Option<f64>,
    /// Commutativity regularizer (negative selects the auto default).
    #[arg(long)]
    reg_weight: Option<f64>,
    /// Region transfer mode: pointwise or indicator.
    #[arg(long)]
    transfer_mode: Option<String>,
    /// Indicator-mode threshold in (0, 1).
    #[arg(long)]
    threshold: Option<f64>,
    /// Master seed for all randomized stages.
    #[arg(long)]
    seed: Option<u64>,
    /// Correspondence method: semfm or fm-wks.
    #[arg(long)]
    method: Option<String>,
    /// Energy count of the baseline descriptors.
    #[arg(long)]
    wks_energies: Option<usize>,
    /// Bandwidth multiple of the baseline descriptors.
    #[arg(long)]
    wks_sigma_scale: Option<f64>,
    /// Estimation dimension of the baseline.
    #[arg(long)]
    baseline_k: Option<usize>,
}

impl ParamOverrides {
    pub fn apply(&self, params: &mut PipelineParams) -> Result<(), Error> {
        if let Some(v) = self.k {
            params.k_basis = v;
        }
        if let Some(v) = self.k0 {
            params.k0 = v;
        }
        if let Some(v) = self.step {
            params.step = v;
        }
        if let Some(v) = self.k_final {
            params.k_final = v;
        }
        if let Some(v) = self.n_clusters {
            params.n_clusters = v;
        }
        if let Some(v) = self.alpha {
            params.alpha = v;
        }
        if let Some(v) = self.k_nn {
            params.k_nn = v;
        }
        if let Some(v) = self.sigma {
            params.sigma = v;
        }
        if let Some(v) = self.m_points {
            params.m_points = v;
        }
        if let Some(v) = self.epsilon_scale {
            params.epsilon_scale = v;
        }
        if let Some(v) = self.t_scale {
            params.t_scale = v;
        }
        if let Some(v) = self.reg_weight {
            params.reg_weight = v;
        }
        if let Some(mode) = &self.transfer_mode {
            params.transfer_mode = parse_transfer_mode(mode)?;
        }
        if let Some(v) = self.threshold {
            params.threshold = v;
        }
        if let Some(v) = self.seed {
            params.seed = v;
        }
        if let Some(name) = &self.method {
            params.method = Method::parse(name)?;
        }
        if let Some(v) = self.wks_energies {
            params.wks_energies = v;
        }
        if let Some(v) = self.wks_sigma_scale {
            params.wks_sigma_scale = v;
        }
        if let Some(v) = self.baseline_k {
            params.baseline_k = v;
        }
        Ok(())
    }
}
