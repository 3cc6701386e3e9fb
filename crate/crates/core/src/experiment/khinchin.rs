//! Witness-count growth for random alpha in [0, 1): divergent psi gives
//! logarithmic growth matching the sum of fiber measures, convergent psi
//! plateaus.

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::dani::PsiFunction;
use crate::dio::psi_approx_witnesses;
use crate::error::{domain, Result};
use crate::mat::Mat;
use crate::rng::stream;
use rand::Rng;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KhinchinRow {
    pub sample: u64,
    pub alpha: f64,
    /// witnesses with 1 <= q <= q_max (positive q only; each +-pair counts once)
    pub count: u64,
    /// count gained over the final decade (q_max/10, q_max]
    pub final_decade_increment: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KhinchinReport {
    pub rows: Vec<KhinchinRow>,
    pub mean_count: f64,
    /// sum over q of the alpha-measure of a hit, min(1, 2 psi(q))
    pub predicted_mean: f64,
    pub mean_final_increment: f64,
    pub q_max: f64,
    pub psi_spec: String,
    pub sampler: String,
    pub seed: u64,
}

impl KhinchinReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sample,alpha,count,final_decade_increment,sampler\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.sample, r.alpha, r.count, r.final_decade_increment, self.sampler
            ));
        }
        s
    }
}

/// m = n = 1 witness counting for `samples` uniform alpha draws.
pub fn khinchin(cfg: &ExperimentConfig) -> Result<KhinchinReport> {
    cfg.validate()?;
    if cfg.dim != 2 {
        return Err(domain("the khinchin experiment runs the m = n = 1 case (dim 2)"));
    }
    let psi = PsiFunction::parse(
        cfg.psi.as_deref().unwrap_or("power_log:c=1,a=1,q=0,x0=1"),
    )?;
    let q_max = cfg.qmax.unwrap_or(10_000.0);
    let cut = q_max / 10.0;

    let mut rng = stream(cfg.seed, 0);
    let mut rows = Vec::with_capacity(cfg.samples as usize);
    let mut total = 0u64;
    let mut total_inc = 0u64;
    for sample in 0..cfg.samples {
        let alpha: f64 = rng.gen();
        let a = Mat::from_row_major(1, 1, vec![alpha])?;
        let ws = psi_approx_witnesses(&a, &psi, q_max)?;
        let count = (ws.len() / 2) as u64;
        let below_cut = ws.iter().filter(|w| w.q_norm <= cut).count() as u64 / 2;
        let inc = count - below_cut;
        total += count;
        total_inc += inc;
        rows.push(KhinchinRow { sample, alpha, count, final_decade_increment: inc });
    }

    // per-q hit measure over alpha: min(1, 2 psi(q)), q inside psi's domain
    let mut predicted = 0.0;
    let mut q = 1u64;
    while (q as f64) <= q_max {
        let x = q as f64;
        if x >= psi.x0() {
            predicted += (2.0 * psi.eval(x)?).min(1.0);
        }
        q += 1;
    }

    Ok(KhinchinReport {
        mean_count: total as f64 / cfg.samples as f64,
        predicted_mean: predicted,
        mean_final_increment: total_inc as f64 / cfg.samples as f64,
        q_max,
        psi_spec: psi.spec_string(),
        sampler: "exact2".into(),
        rows,
        seed: cfg.seed,
    })
}
