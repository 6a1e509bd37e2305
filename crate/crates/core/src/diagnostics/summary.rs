use serde::{Deserialize, Serialize};

use super::{ess_bulk, hdi, split_rhat};
use crate::error::Result;
use crate::exec::Exec;
use crate::sampler::DrawsTable;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    pub hdi_low: f64,
    pub hdi_high: f64,
    pub rhat: f64,
    pub ess_bulk: f64,
}

/// One row per parameter of `draws`, in column order.
pub fn summarize(draws: &DrawsTable, mass: f64, exec: Exec) -> Result<Vec<SummaryRow>> {
    exec.map_range(draws.n_params(), |p| {
        let chains = draws.column(p);
        let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
        let n = pooled.len() as f64;
        let mean = pooled.iter().sum::<f64>() / n;
        let sd = (pooled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let (hdi_low, hdi_high) = hdi(&pooled, mass)?;
        let rhat = split_rhat(&chains)?;
        let ess = ess_bulk(&chains)?;
        if rhat.degenerate {
            log::warn!("{}: constant draws, R-hat set to 1", draws.names[p]);
        }
        Ok(SummaryRow {
            parameter: draws.names[p].clone(),
            mean,
            sd,
            hdi_low,
            hdi_high,
            rhat: rhat.value,
            ess_bulk: ess.value,
        })
    })
    .into_iter()
    .collect()
}

/// Largest R-hat among the rows, ignoring NaN.
pub fn max_rhat(rows: &[SummaryRow]) -> f64 {
    rows.iter().map(|r| r.rhat).fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_ess(rows: &[SummaryRow]) -> f64 {
    rows.iter().map(|r| r.ess_bulk).fold(f64::INFINITY, f64::min)
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
}

pub fn summary_json(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec_pretty(rows)?)
}

/// Plot-ready interval data: parameter, mean, hdi_low, hdi_high.
pub fn forest_csv(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["parameter", "mean", "hdi_low", "hdi_high"])?;
    for r in rows {
        w.write_record([
            r.parameter.clone(),
            r.mean.to_string(),
            r.hdi_low.to_string(),
            r.hdi_high.to_string(),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
}
