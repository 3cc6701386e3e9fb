//! Seeded experiment drivers reproducing the statistical laws at desk scale.
//!
//! Every driver takes an [`ExperimentConfig`] (JSON-mirrorable, seed
//! mandatory), walks orbits at integer times, and emits a report with fixed
//! CSV schema and a sampler provenance tag on every row.

pub mod bc;
pub mod khinchin;
pub mod loglaw;
pub mod mixing;
pub mod skriganov;

use serde::{Deserialize, Serialize};

use crate::dani::{dani_forward, PsiFunction, RateFunction};
use crate::error::{domain, Result};
use crate::flow::{apply_flow, DiagonalFlow};
use crate::lattice::{delta, reduce_basis, LatticeBasis, NormKind};
use crate::siegel::{tail_upper_constant, SamplerSpec, TailEstimate};

fn default_dim() -> usize {
    2
}
fn default_horizon() -> u64 {
    10_000
}
fn default_samples() -> u64 {
    200
}
fn default_seeds() -> u32 {
    20
}
fn default_threads() -> usize {
    1
}

/// Configuration shared by all experiment subcommands. The seed has no
/// default on purpose: runs must be reproducible, never wall-clock seeded.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub subcommand: String,
    pub seed: u64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// flow shorthand "m:n"
    #[serde(default)]
    pub flow: Option<String>,
    /// psi family spec, e.g. "power_log:c=1,a=1,q=2,x0=2"
    #[serde(default)]
    pub psi: Option<String>,
    /// rate spec, e.g. "log:0.5", "const:0.2", "zero"
    #[serde(default)]
    pub rate: Option<String>,
    /// orbit horizon N or T
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_samples")]
    pub samples: u64,
    /// independent seed replicates
    #[serde(default = "default_seeds")]
    pub seeds: u32,
    #[serde(default)]
    pub norm: NormKind,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub qmax: Option<f64>,
    /// radius ladder for the multiplicative-count experiment
    #[serde(default)]
    pub ladder: Option<Vec<f64>>,
    /// log-power exponents q for the multiplicative-count experiment
    #[serde(default)]
    pub q_exponents: Option<Vec<f64>>,
    /// correlation lags for the mixing probe
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    /// (start, end) windows for the variance probe
    #[serde(default)]
    pub windows: Option<Vec<(u64, u64)>>,
}

impl ExperimentConfig {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        ExperimentConfig {
            subcommand: subcommand.to_string(),
            seed,
            dim: default_dim(),
            flow: None,
            psi: None,
            rate: None,
            horizon: default_horizon(),
            samples: default_samples(),
            seeds: default_seeds(),
            norm: NormKind::Sup,
            threads: default_threads(),
            out: None,
            qmax: None,
            ladder: None,
            q_exponents: None,
            times: None,
            windows: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=6).contains(&self.dim) {
            return Err(domain("dim must be in 2..=6"));
        }
        if self.horizon == 0 || self.samples == 0 || self.seeds == 0 || self.threads == 0 {
            return Err(domain("horizon, samples, seeds and threads must be positive"));
        }
        Ok(())
    }

    /// The (m, n) split: parsed from the flow shorthand, defaulting to
    /// (1, dim - 1).
    pub fn split(&self) -> Result<(usize, usize)> {
        match &self.flow {
            None => Ok((1, self.dim - 1)),
            Some(s) => {
                let (m, n) = s
                    .split_once(':')
                    .ok_or_else(|| domain(format!("flow shorthand must be m:n, got {s:?}")))?;
                let m = m.trim().parse().map_err(|_| domain("bad m in flow"))?;
                let n = n.trim().parse().map_err(|_| domain("bad n in flow"))?;
                if m + n != self.dim {
                    return Err(domain(format!(
                        "flow {m}:{n} does not match dim {}",
                        self.dim
                    )));
                }
                Ok((m, n))
            }
        }
    }

    pub fn sampler(&self) -> Result<SamplerSpec> {
        SamplerSpec::auto(self.dim, self.seed)
    }

    /// The rate function of the run: an explicit rate spec wins, otherwise the
    /// psi spec is passed through the forward transform.
    pub fn rate_function(&self) -> Result<RateFunction> {
        match (&self.rate, &self.psi) {
            (Some(r), _) => RateFunction::parse(r, 1.0),
            (None, Some(p)) => {
                let (m, n) = self.split()?;
                dani_forward(&PsiFunction::parse(p)?, m as u32, n as u32)
            }
            (None, None) => Err(domain("experiment needs a rate or psi spec")),
        }
    }
}

/// Height samples delta(f_t Lambda) at integer times t = 1..=n, walked
/// incrementally: per-step reduction keeps entries bounded and determinant
/// renormalization stops unimodularity drift on long orbits.
pub fn orbit_deltas(start: &LatticeBasis, flow: &DiagonalFlow, n: u64) -> Result<Vec<f64>> {
    let mut cur = reduce_basis(start)?;
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        cur = reduce_basis(&apply_flow(flow, 1.0, &cur)?)?.renormalized()?;
        out.push(delta(&cur, NormKind::Sup)?);
    }
    Ok(out)
}

/// Log-spaced integer checkpoints up to n (inclusive).
pub fn log_checkpoints(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let t = 10f64.powf(i as f64 / 20.0).round() as u64;
        if t > n {
            break;
        }
        if out.last() != Some(&t) {
            out.push(t);
        }
        i += 1;
    }
    if out.last() != Some(&n) {
        out.push(n);
    }
    out
}

/// Tail model Phi(z) used for expected counts: the analytic mid-curve
/// min(1, C_k e^{-kz}) or an empirical tail lookup.
pub enum TailModel<'a> {
    Analytic { dim: usize, constant: f64 },
    Lookup(&'a TailEstimate),
}

impl<'a> TailModel<'a> {
    pub fn analytic(dim: usize) -> Self {
        TailModel::Analytic { dim, constant: tail_upper_constant(dim) }
    }

    pub fn phi(&self, z: f64) -> f64 {
        match self {
            TailModel::Analytic { dim, constant } => {
                (constant * (-(*dim as f64) * z).exp()).clamp(0.0, 1.0)
            }
            TailModel::Lookup(est) => est.phi_at(z).clamp(0.0, 1.0),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TailModel::Analytic { dim, .. } => format!("analytic:k={dim}"),
            TailModel::Lookup(est) => format!("lookup:{}samples", est.samples),
        }
    }
}
