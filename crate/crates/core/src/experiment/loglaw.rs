//! Running maxima of the height along a diagonal orbit: the fitted slope of
//! max_{t <= T} delta(f_t Lambda) against log T estimates 1/k.

use serde::{Deserialize, Serialize};

use super::{log_checkpoints, orbit_deltas, ExperimentConfig};
use crate::error::Result;
use crate::flow::DiagonalFlow;
use crate::numeric::linear_fit;
use crate::siegel::LatticeSampler;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LoglawReport {
    /// (T, running max of delta up to T)
    pub rows: Vec<(u64, f64)>,
    /// least-squares slope of the running max against log T over [100, T]
    pub slope: f64,
    pub target: f64,
    pub fit_from: u64,
    pub sampler: String,
    pub seed: u64,
    pub replicate: u32,
}

impl LoglawReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,running_max,sampler,replicate\n");
        for (t, m) in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", t, m, self.sampler, self.replicate));
        }
        s
    }
}

pub fn loglaw(cfg: &ExperimentConfig, replicate: u32) -> Result<LoglawReport> {
    cfg.validate()?;
    let (m, n) = cfg.split()?;
    let flow = DiagonalFlow::two_block(m, n);
    let spec = cfg.sampler()?;
    let mut sampler = LatticeSampler::for_worker(spec, replicate as u64)?;
    let start = sampler.sample()?;
    let deltas = orbit_deltas(&start, &flow, cfg.horizon)?;

    let checkpoints = log_checkpoints(cfg.horizon);
    let mut rows = Vec::with_capacity(checkpoints.len());
    let mut running = f64::NEG_INFINITY;
    let mut next = 0usize;
    for (i, &d) in deltas.iter().enumerate() {
        running = running.max(d);
        let t = i as u64 + 1;
        if next < checkpoints.len() && t == checkpoints[next] {
            next += 1;
            rows.push((t, running));
        }
    }

    let fit_from = 100u64.min(cfg.horizon);
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(t, _)| *t >= fit_from)
        .map(|&(t, m)| ((t as f64).ln(), m))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = fit.into_iter().unzip();
    let slope = if xs.len() >= 2 { linear_fit(&xs, &ys).0 } else { f64::NAN };

    Ok(LoglawReport {
        rows,
        slope,
        target: 1.0 / cfg.dim as f64,
        fit_from,
        sampler: sampler.tag().to_string(),
        seed: cfg.seed,
        replicate,
    })
}

pub fn loglaw_all(cfg: &ExperimentConfig) -> Result<Vec<LoglawReport>> {
    (0..cfg.seeds).map(|r| loglaw(cfg, r)).collect()
}
