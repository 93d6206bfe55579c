use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::power::{section_norm, PowerConfig};
use crate::cesaro::{matrix_section, OperatorSection};
use crate::error::{Error, Result};
use crate::spaces::SpaceSpec;
use crate::weights::{ls_slope, MomentTable, RadialWeight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanVerdict {
    BoundedLooking,
    UnboundedLooking,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanThresholds {
    /// Largest per-doubling σ ratio still called a plateau.
    pub plateau_ratio: f64,
    /// Slope of ln σ per doubling of N above which growth is declared.
    pub slope_threshold: f64,
    /// Number of trailing grid points in the growth fit.
    pub window: usize,
}

impl Default for ScanThresholds {
    fn default() -> Self {
        Self {
            plateau_ratio: 1.05,
            slope_threshold: 0.02,
            window: 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub power: PowerConfig,
    pub thresholds: ScanThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub weight: String,
    pub space: String,
    #[serde(rename = "Ns")]
    pub ns: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub iters: Vec<u32>,
    pub converged: Vec<bool>,
    /// Slope of ln σ against log₂ N over the trailing window.
    pub growth_fit: f64,
    /// σ ratio per doubling between the last two grid points.
    pub tail_ratio: f64,
    pub verdict: ScanVerdict,
    pub thresholds: ScanThresholds,
    /// Why the scan stopped before the end of the grid, if it did.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

impl ScanReport {
    /// CSV `N,sigma`.
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("N,sigma\n");
        for (n, v) in self.ns.iter().zip(&self.sigmas) {
            s.push_str(&format!("{n},{}\n", crate::weights::format_sci(*v)));
        }
        s
    }
}

fn verdict(ns: &[usize], sigmas: &[f64], th: &ScanThresholds) -> (f64, f64, ScanVerdict) {
    if ns.len() < 2 {
        return (f64::NAN, f64::NAN, ScanVerdict::Inconclusive);
    }
    let m = ns.len();
    let start = m.saturating_sub(th.window.max(2));
    let xs: Vec<f64> = ns[start..].iter().map(|&n| (n as f64).log2()).collect();
    let ys: Vec<f64> = sigmas[start..].iter().map(|s| s.ln()).collect();
    let slope = ls_slope(&xs, &ys);
    let doublings = (ns[m - 1] as f64 / ns[m - 2] as f64).log2();
    let tail_ratio = ((sigmas[m - 1] / sigmas[m - 2]).ln() / doublings).exp();
    let v = if tail_ratio <= th.plateau_ratio {
        ScanVerdict::BoundedLooking
    } else if slope > th.slope_threshold {
        ScanVerdict::UnboundedLooking
    } else {
        ScanVerdict::Inconclusive
    };
    (slope, tail_ratio, v)
}

/// σ_max of the N×N sections for each N of an increasing grid.
///
/// The largest section is assembled once and smaller ones are taken as its
/// leading blocks. If it cannot be assembled, sections are built one by one
/// and the report ends at the first failure.
pub fn boundedness_scan(
    w: &RadialWeight,
    space: &SpaceSpec,
    ns: &[usize],
    table: &MomentTable,
    cfg: &ScanConfig,
) -> Result<ScanReport> {
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidInput(
            "Ns must be a nonempty increasing list of positive sizes".into(),
        ));
    }
    let n_max = *ns.last().unwrap();
    let mut failure = None;
    let sections: Vec<OperatorSection> = match matrix_section(w, space, n_max, table) {
        Ok(big) => ns
            .iter()
            .map(|&n| {
                if n == n_max {
                    Ok(big.clone())
                } else {
                    big.leading_block(n)
                }
            })
            .collect::<Result<_>>()?,
        Err(e) if e.is_numeric() => {
            let mut out = Vec::new();
            for &n in ns {
                match matrix_section(w, space, n, table) {
                    Ok(s) => out.push(s),
                    Err(e) if e.is_numeric() => {
                        failure = Some(format!("N={n}: {e}"));
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            out
        }
        Err(e) => return Err(e),
    };
    let results: Vec<_> = sections
        .par_iter()
        .map(|s| section_norm(s, &cfg.power))
        .collect();
    let done = &ns[..results.len()];
    let sigmas: Vec<f64> = results.iter().map(|r| r.sigma).collect();
    let (growth_fit, tail_ratio, verdict) = verdict(done, &sigmas, &cfg.thresholds);
    Ok(ScanReport {
        weight: w.label().to_string(),
        space: space.descriptor(),
        ns: done.to_vec(),
        sigmas,
        iters: results.iter().map(|r| r.iterations).collect(),
        converged: results.iter().map(|r| r.converged).collect(),
        growth_fit,
        tail_ratio,
        verdict,
        thresholds: cfg.thresholds,
        failure,
    })
}
