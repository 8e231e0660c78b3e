//! Flag / JSON configuration with field-by-field override.

use clap::Args;
use serde::{Deserialize, Serialize};
use stable_noise::error::Error;
use std::path::PathBuf;

/// One failure with its process exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure { code: 1, message: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter(_) | Error::Parse { .. } | Error::Unsupported(_) => 1,
            Error::IntegrandRejected(_) => 2,
            Error::Quadrature(_) | Error::Truncation(_) => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

/// The shared parameter surface. Every field is optional at the parsing
/// stage; each command validates the subset it needs.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CommonArgs {
    /// JSON file with these same fields; explicit flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Stability index in (0, 2].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Scale of the innovation law (default 1).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Skewness in [-1, 1] (default 0).
    #[arg(long)]
    pub nu: Option<f64>,
    /// Right tail weight of Pareto innovations.
    #[arg(long)]
    pub tail_p: Option<f64>,
    /// Left tail weight of Pareto innovations.
    #[arg(long)]
    pub tail_q: Option<f64>,
    /// Innovation mode: exact | pareto | gaussian (default exact).
    #[arg(long)]
    pub innovations: Option<String>,

    /// Kernel expression (see the grammar in the library docs).
    #[arg(long)]
    pub kernel: Option<String>,
    /// Approximation kernel for the error bound.
    #[arg(long)]
    pub kernel_m: Option<String>,
    /// Kernel dimension (default 1).
    #[arg(long)]
    pub dim: Option<usize>,

    /// Grid span schedule, strictly decreasing (single value for one run).
    #[arg(long, value_delimiter = ',')]
    pub h: Option<Vec<f64>>,
    /// Intensity schedule, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Point-count schedule for the binomial variant.
    #[arg(long, value_delimiter = ',')]
    pub n_points: Option<Vec<usize>>,

    /// Filter: "geometric:RATIO:RADIUS", "coeffs:LO:c0,c1,...", or "power"
    /// (isotropic profile of order -beta, needs --beta).
    #[arg(long)]
    pub filter: Option<String>,
    /// Profile order for regularly varying filters.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Center coefficient of the power filter (default 1).
    #[arg(long)]
    pub center_coeff: Option<f64>,
    /// Materialized filter radius in cells (default 200).
    #[arg(long)]
    pub filter_radius: Option<i64>,

    /// Space: "unit-box:DIM", "box:LO:HI" (1d), or "sphere:Q".
    #[arg(long)]
    pub space: Option<String>,
    /// CSV of evaluation points for the Levy commands.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Sphere / ambient dimension for the Levy commands.
    #[arg(long)]
    pub q: Option<usize>,

    /// Replica count.
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed (mandatory: runs never take entropy from the clock).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Moment order for the error bound.
    #[arg(long)]
    pub p: Option<f64>,

    /// CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Worker threads (default: STABLE_NOISE_THREADS or all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

macro_rules! merge_fields {
    ($dst:expr, $src:expr, $($field:ident),+ $(,)?) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field.clone(); } )+
    };
}

impl CommonArgs {
    /// Loads the JSON config (when given) and fills in any field the flags
    /// left unset.
    pub fn resolve(mut self) -> Result<CommonArgs, Failure> {
        if let Some(path) = self.config.take() {
            let text = std::fs::read_to_string(&path).map_err(|e| {
                Failure::config(format!("cannot read config {}: {e}", path.display()))
            })?;
            let file: CommonArgs = serde_json::from_str(&text)
                .map_err(|e| Failure::config(format!("bad config JSON: {e}")))?;
            merge_fields!(
                self, file, alpha, sigma, nu, tail_p, tail_q, innovations, kernel, kernel_m,
                dim, h, lambda, n_points, filter, beta, center_coeff, filter_radius, space,
                points, q, n, seed, p, out, report, threads
            );
        }
        if let Some(points) = &self.points {
            if !points.exists() {
                return Err(Failure::config(format!(
                    "points file {} does not exist",
                    points.display()
                )));
            }
        }
        if let Some(h) = &self.h {
            if h.is_empty() || h.iter().any(|v| !(v > &0.0)) {
                return Err(Failure::config("spans must be positive"));
            }
            if h.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Failure::config("span schedule must be strictly decreasing"));
            }
        }
        if let Some(l) = &self.lambda {
            if l.is_empty() || l.iter().any(|v| !(v > &0.0)) {
                return Err(Failure::config("intensities must be positive"));
            }
            if l.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Failure::config(
                    "intensity schedule must be strictly increasing",
                ));
            }
        }
        if let Some(npts) = &self.n_points {
            if npts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Failure::config(
                    "point-count schedule must be strictly increasing",
                ));
            }
        }
        Ok(self)
    }

    pub fn seed(&self) -> Result<u64, Failure> {
        self.seed
            .ok_or_else(|| Failure::config("--seed is mandatory (no wall-clock default)"))
    }

    pub fn replicas(&self) -> Result<usize, Failure> {
        let n = self.n.ok_or_else(|| Failure::config("--n is required"))?;
        if n == 0 {
            return Err(Failure::config("--n must be positive"));
        }
        Ok(n)
    }

    pub fn threads(&self) -> usize {
        self.threads
            .or_else(|| {
                std::env::var("STABLE_NOISE_THREADS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .unwrap_or(0)
    }
}
