//! Numerical profiles for the weight classes.
//!
//! Class membership is asymptotic, so every verdict is a trend fit over the
//! last few points of a profile curve. The curve is always returned with
//! the verdict.

use serde::Serialize;

use super::moments::{tail_at_gap, MomentTable};
use super::RadialWeight;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;

/// Largest propagated log-error tolerated in a single profile ratio.
const RATIO_LOG_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassVerdict {
    Yes,
    No,
    Inconclusive,
}

/// A ratio curve. `doublings` is the abscissa measured in doublings of the
/// natural scale (j for ω_{2^j}, log₂ x for moments, log₂ 1/(1-r) for tails).
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Profile {
    pub abscissae: Vec<f64>,
    pub doublings: Vec<f64>,
    pub log_ratios: Vec<f64>,
    pub log_errors: Vec<f64>,
}

impl Profile {
    pub fn ratios(&self) -> Vec<f64> {
        self.log_ratios.iter().map(|l| l.exp()).collect()
    }

    pub fn len(&self) -> usize {
        self.log_ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_ratios.is_empty()
    }

    fn push(&mut self, abscissa: f64, doubling: f64, log_ratio: f64, log_err: f64) -> Result<()> {
        if log_err > RATIO_LOG_TOL {
            return Err(Error::Quadrature {
                what: format!("profile ratio at {abscissa}"),
                achieved: log_err,
                tolerance: RATIO_LOG_TOL,
            });
        }
        self.abscissae.push(abscissa);
        self.doublings.push(doubling);
        self.log_ratios.push(log_ratio);
        self.log_errors.push(log_err);
        Ok(())
    }
}

fn check_table(w: &RadialWeight, table: &MomentTable) -> Result<()> {
    if w.id() != table.weight_id() {
        return Err(Error::WeightMismatch {
            expected: table.weight_id().to_string(),
            found: w.id().to_string(),
        });
    }
    Ok(())
}

/// q_j = ω_{2^j} / ω_{2^{j+1}} for j = 0..=j_max.
pub fn dhat_profile(w: &RadialWeight, j_max: u32, table: &MomentTable) -> Result<Profile> {
    check_table(w, table)?;
    if j_max < 4 {
        return Err(Error::InvalidInput(format!(
            "dhat profile needs j_max >= 4, got {j_max}"
        )));
    }
    let xs: Vec<f64> = (0..=j_max + 1).map(|j| 2f64.powi(j as i32)).collect();
    table.prefetch(&xs)?;
    let mut p = Profile::default();
    for j in 0..=j_max {
        let a = table.entry(xs[j as usize])?;
        let b = table.entry(xs[j as usize + 1])?;
        p.push(
            j as f64,
            j as f64,
            a.log_value - b.log_value,
            a.abs_log_err + b.abs_log_err,
        )?;
    }
    Ok(p)
}

/// ω̂(r) / ω̂(1 - (1-r)/K) over `r_grid`.
pub fn dcheck_profile(
    w: &RadialWeight,
    k: f64,
    r_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Profile> {
    if !(k > 1.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "dcheck profile needs K > 1, got {k}"
        )));
    }
    let mut p = Profile::default();
    for &r in r_grid {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::InvalidInput(format!(
                "r grid must lie in [0,1), got {r}"
            )));
        }
        let gap = 1.0 - r;
        let a = tail_at_gap(w, gap, cfg)?;
        let b = tail_at_gap(w, gap / k, cfg)?;
        p.push(
            r,
            -gap.log2(),
            a.log_value - b.log_value,
            a.abs_log_err + b.abs_log_err,
        )?;
    }
    Ok(p)
}

/// ω_x / ω_{Kx} over `x_grid`.
pub fn m_profile(w: &RadialWeight, k: f64, x_grid: &[f64], table: &MomentTable) -> Result<Profile> {
    check_table(w, table)?;
    if !(k > 1.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "M profile needs K > 1, got {k}"
        )));
    }
    if let Some(bad) = x_grid.iter().find(|x| !(**x >= 1.0 && x.is_finite())) {
        return Err(Error::InvalidInput(format!(
            "M profile needs x >= 1, got {bad}"
        )));
    }
    let mut xs: Vec<f64> = x_grid.to_vec();
    xs.extend(x_grid.iter().map(|x| k * x));
    table.prefetch(&xs)?;
    let mut p = Profile::default();
    for &x in x_grid {
        let a = table.entry(x)?;
        let b = table.entry(k * x)?;
        p.push(
            x,
            x.log2(),
            a.log_value - b.log_value,
            a.abs_log_err + b.abs_log_err,
        )?;
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassConfig {
    pub j_max: u32,
    pub k_dcheck: f64,
    pub r_grid: Vec<f64>,
    pub k_m: f64,
    pub x_grid: Vec<f64>,
    /// Number of trailing profile points used for trend fits.
    pub window: usize,
    pub tol_plateau: f64,
    /// Slope threshold in log-ratio per doubling.
    pub slope_threshold: f64,
    /// Upper bound on q_j accepted as "bounded".
    pub dhat_cap: f64,
    /// Minimal ratio excess over 1 accepted as "bounded away from 1".
    pub min_excess: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for ClassConfig {
    fn default() -> Self {
        Self {
            j_max: 14,
            k_dcheck: 4.0,
            r_grid: (1..=24).map(|j| 1.0 - 2f64.powi(-j)).collect(),
            k_m: 4.0,
            x_grid: (0..=14).map(|j| 2f64.powi(j)).collect(),
            window: 5,
            tol_plateau: 0.10,
            slope_threshold: 0.02,
            dhat_cap: 1e4,
            min_excess: 0.10,
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnosis {
    pub verdict: ClassVerdict,
    /// Least-squares slope of the fitted quantity per doubling over the window.
    pub window_slope: f64,
    /// max/min of the ratios over the window.
    pub window_spread: f64,
    pub profile: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub weight: String,
    pub in_dhat: Diagnosis,
    pub in_m: Diagnosis,
    pub in_dcheck: Diagnosis,
    pub in_d: ClassVerdict,
    pub parameters_used: ClassConfig,
}

pub(crate) fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn tail_window(p: &Profile, window: usize) -> (Vec<f64>, Vec<f64>) {
    let start = p.len().saturating_sub(window.max(2));
    (
        p.doublings[start..].to_vec(),
        p.log_ratios[start..].to_vec(),
    )
}

fn spread(log_ratios: &[f64]) -> f64 {
    let max = log_ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = log_ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    (max - min).exp()
}

fn diagnose_dhat(p: Profile, cfg: &ClassConfig) -> Diagnosis {
    let (xs, ls) = tail_window(&p, cfg.window);
    let slope = ls_slope(&xs, &ls);
    let spread = spread(&ls);
    let max_q = ls.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();
    let verdict = if slope > cfg.slope_threshold {
        ClassVerdict::No
    } else if spread <= 1.0 + cfg.tol_plateau && max_q <= cfg.dhat_cap {
        ClassVerdict::Yes
    } else {
        ClassVerdict::Inconclusive
    };
    Diagnosis {
        verdict,
        window_slope: slope,
        window_spread: spread,
        profile: p,
    }
}

/// ln(ratio - 1) from ln(ratio).
fn ln_excess(l: f64) -> f64 {
    if l <= 0.0 {
        f64::NEG_INFINITY
    } else {
        l + (-(-l).exp_m1()).ln()
    }
}

fn diagnose_bounded_away(p: Profile, cfg: &ClassConfig) -> Diagnosis {
    let (xs, ls) = tail_window(&p, cfg.window);
    let excess: Vec<f64> = ls.iter().map(|l| ln_excess(*l)).collect();
    let spread = spread(&ls);
    let verdict;
    let slope;
    if excess.iter().any(|e| !e.is_finite()) {
        slope = f64::NEG_INFINITY;
        verdict = ClassVerdict::No;
    } else {
        slope = ls_slope(&xs, &excess);
        let min_excess = excess.iter().cloned().fold(f64::INFINITY, f64::min).exp();
        verdict = if slope < -cfg.slope_threshold {
            ClassVerdict::No
        } else if min_excess >= cfg.min_excess {
            ClassVerdict::Yes
        } else {
            ClassVerdict::Inconclusive
        };
    }
    Diagnosis {
        verdict,
        window_slope: slope,
        window_spread: spread,
        profile: p,
    }
}

/// Profiles `w` against D̂, Ď and M and derives a verdict for D = D̂ ∩ M.
pub fn classify(w: &RadialWeight, cfg: &ClassConfig, table: &MomentTable) -> Result<ClassReport> {
    let dhat = diagnose_dhat(dhat_profile(w, cfg.j_max, table)?, cfg);
    let m = diagnose_bounded_away(m_profile(w, cfg.k_m, &cfg.x_grid, table)?, cfg);
    let dcheck = diagnose_bounded_away(
        dcheck_profile(w, cfg.k_dcheck, &cfg.r_grid, &cfg.quadrature)?,
        cfg,
    );
    let in_d = match (dhat.verdict, m.verdict) {
        (ClassVerdict::Yes, ClassVerdict::Yes) => ClassVerdict::Yes,
        (ClassVerdict::No, _) | (_, ClassVerdict::No) => ClassVerdict::No,
        _ => ClassVerdict::Inconclusive,
    };
    Ok(ClassReport {
        weight: w.label().to_string(),
        in_dhat: dhat,
        in_m: m,
        in_dcheck: dcheck,
        in_d,
        parameters_used: cfg.clone(),
    })
}

/// Range of ω_x / ω̂(1 - 1/x) over `xs` (x ≥ 1), as (min, max).
pub fn moment_tail_band(
    w: &RadialWeight,
    xs: &[f64],
    table: &MomentTable,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    check_table(w, table)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in xs {
        if x < 1.0 {
            return Err(Error::InvalidInput(format!("band needs x >= 1, got {x}")));
        }
        let l = table.log_moment(x)? - tail_at_gap(w, 1.0 / x, cfg)?.log_value;
        lo = lo.min(l);
        hi = hi.max(l);
    }
    Ok((lo.exp(), hi.exp()))
}
