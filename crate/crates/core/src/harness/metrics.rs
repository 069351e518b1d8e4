use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::VehicleRecord;

/// Mean of `completion − spawn`; vehicles still in the network count up to
/// the end of the episode. `None` without vehicles.
pub fn compute_att(records: &[VehicleRecord], episode_length: u32) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let total: f64 = records
        .iter()
        .map(|r| {
            let end = r.completion.unwrap_or(episode_length).max(r.spawn);
            (end - r.spawn) as f64
        })
        .sum();
    Some(total / records.len() as f64)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub t_train: f64,
    pub t_transfer: f64,
    pub v_transfer: f64,
}

impl TransferReport {
    pub fn new(t_train: f64, t_transfer: f64) -> Result<Self> {
        if !(t_train > 0.0) || !(t_transfer >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "transfer needs positive travel times, got {t_train} and {t_transfer}"
            )));
        }
        Ok(Self {
            t_train,
            t_transfer,
            v_transfer: t_transfer / t_train - 1.0,
        })
    }
}

/// Smallest degradation first.
pub fn rank_transfers(reports: &mut [(String, TransferReport)]) {
    reports.sort_by(|a, b| a.1.v_transfer.total_cmp(&b.1.v_transfer).then_with(|| a.0.cmp(&b.0)));
}

/// Vehicles served per unit green when phase pair `(i, j)` runs each lane
/// for exactly as long as its own queue needs, normalised by the longer one.
pub fn throughput_rate(xi: u32, xj: u32) -> Result<f64> {
    let longest = xi.max(xj);
    if longest == 0 {
        return Err(Error::InvalidInput("both phase counts are zero".into()));
    }
    Ok((xi + xj) as f64 / longest as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRateReport {
    pub low: u32,
    pub high: u32,
    pub pairs: usize,
    pub min_rate: f64,
    pub max_rate: f64,
    pub violations: Vec<(u32, u32, f64)>,
}

impl ThroughputRateReport {
    pub fn bound_holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Enumerates every pair in `low..=high` and records rates outside [1, 2].
pub fn throughput_rate_analysis(low: u32, high: u32) -> Result<ThroughputRateReport> {
    if low == 0 || high < low {
        return Err(Error::InvalidInput(format!("pair range {low}..={high} must be positive and non-empty")));
    }
    let mut report = ThroughputRateReport {
        low,
        high,
        pairs: 0,
        min_rate: f64::INFINITY,
        max_rate: f64::NEG_INFINITY,
        violations: Vec::new(),
    };
    for xi in low..=high {
        for xj in low..=high {
            let r = throughput_rate(xi, xj)?;
            report.pairs += 1;
            report.min_rate = report.min_rate.min(r);
            report.max_rate = report.max_rate.max(r);
            if !(1.0..=2.0).contains(&r) {
                report.violations.push((xi, xj, r));
            }
        }
    }
    Ok(report)
}
