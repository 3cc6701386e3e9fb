//! Multiplicative-witness counts across a radius ladder for the family
//! psi_q(x) = 1/(x log^q x): counts keep growing below the critical exponent
//! q0 = k - 1 and stall above it.

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::dani::PsiFunction;
use crate::dio::{count_ma_witnesses_2d, ma_witness_counts_ladder};
use crate::error::{domain, Result};
use crate::lattice::LatticeBasis;
use crate::numeric::median;
use crate::siegel::LatticeSampler;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkriganovCell {
    pub lattice: u64,
    pub q: f64,
    pub counts: Vec<u64>,
    /// counts strictly increase along the whole ladder
    pub monotone: bool,
    /// final-rung increment is at most 1
    pub stagnant: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkriganovReport {
    pub dim: usize,
    pub ladder: Vec<f64>,
    pub q_exponents: Vec<f64>,
    pub cells: Vec<SkriganovCell>,
    /// per q: fraction of lattices with strictly growing counts
    pub frac_monotone: Vec<f64>,
    /// per q: fraction of lattices whose final increment is <= 1
    pub frac_stagnant: Vec<f64>,
    /// per q, per rung: median count across lattices
    pub median_counts: Vec<Vec<f64>>,
    /// counts on the integer lattice Z^k (zero coordinates make every q grow)
    pub control_zk: Vec<Vec<u64>>,
    pub sampler: String,
    pub seed: u64,
}

impl SkriganovReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lattice,q,radius,count,monotone,stagnant,sampler\n");
        for cell in &self.cells {
            for (r, c) in self.ladder.iter().zip(&cell.counts) {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    cell.lattice, cell.q, r, c, cell.monotone, cell.stagnant, self.sampler
                ));
            }
        }
        s
    }
}

fn psi_for_exponent(q: f64) -> Result<PsiFunction> {
    PsiFunction::power_log(1.0, 1.0, q, 2.0)
}

/// Witness counts per rung, in +-v sign classes (the raw enumeration reports
/// both signs; growth diagnostics should not double-count a class).
fn counts_for(basis: &LatticeBasis, psi: &PsiFunction, ladder: &[f64]) -> Result<Vec<u64>> {
    let raw: Vec<u64> = if basis.dim() == 2 {
        ladder.iter().map(|&r| count_ma_witnesses_2d(basis, psi, r)).collect::<Result<_>>()?
    } else {
        ma_witness_counts_ladder(basis, psi, ladder)?
    };
    Ok(raw.into_iter().map(|c| c / 2).collect())
}

pub fn skriganov(cfg: &ExperimentConfig) -> Result<SkriganovReport> {
    cfg.validate()?;
    let k = cfg.dim;
    if !(2..=3).contains(&k) {
        return Err(domain("the multiplicative-count experiment supports dim 2 and 3"));
    }
    let ladder = cfg.ladder.clone().unwrap_or_else(|| {
        if k == 2 {
            vec![100.0, 1000.0, 10_000.0]
        } else {
            vec![8.0, 16.0, 32.0]
        }
    });
    if ladder.windows(2).any(|w| w[1] <= w[0]) || ladder.is_empty() {
        return Err(domain("ladder must be strictly increasing"));
    }
    let q_exponents = cfg.q_exponents.clone().unwrap_or_else(|| vec![0.5, 2.0]);

    let spec = cfg.sampler()?;
    let mut sampler = LatticeSampler::new(spec)?;
    let lattices: Result<Vec<LatticeBasis>> =
        (0..cfg.samples).map(|_| sampler.sample()).collect();
    let lattices = lattices?;

    let mut cells = Vec::new();
    let mut frac_monotone = Vec::new();
    let mut frac_stagnant = Vec::new();
    let mut median_counts = Vec::new();
    for &q in &q_exponents {
        let psi = psi_for_exponent(q)?;
        let mut monotone_hits = 0u64;
        let mut stagnant_hits = 0u64;
        let mut per_rung: Vec<Vec<f64>> = vec![Vec::new(); ladder.len()];
        for (i, b) in lattices.iter().enumerate() {
            let counts = counts_for(b, &psi, &ladder)?;
            let monotone = counts.windows(2).all(|w| w[1] > w[0]);
            let stagnant = counts.len() < 2
                || counts[counts.len() - 1] - counts[counts.len() - 2] <= 1;
            monotone_hits += monotone as u64;
            stagnant_hits += stagnant as u64;
            for (rung, &c) in counts.iter().enumerate() {
                per_rung[rung].push(c as f64);
            }
            cells.push(SkriganovCell { lattice: i as u64, q, counts, monotone, stagnant });
        }
        frac_monotone.push(monotone_hits as f64 / lattices.len() as f64);
        frac_stagnant.push(stagnant_hits as f64 / lattices.len() as f64);
        median_counts.push(per_rung.iter_mut().map(|v| median(v)).collect());
    }

    let control = LatticeBasis::identity(k);
    let control_zk: Result<Vec<Vec<u64>>> = q_exponents
        .iter()
        .map(|&q| counts_for(&control, &psi_for_exponent(q)?, &ladder))
        .collect();

    Ok(SkriganovReport {
        dim: k,
        ladder,
        q_exponents,
        cells,
        frac_monotone,
        frac_stagnant,
        median_counts,
        control_zk: control_zk?,
        sampler: spec.mode.tag().to_string(),
        seed: cfg.seed,
    })
}
