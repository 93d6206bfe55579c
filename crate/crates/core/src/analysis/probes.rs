use serde::{Deserialize, Serialize};

use super::families::{bergman_f_n, f_a, f_n, truncation_degree};
use crate::cesaro::{apply_to_degree, matrix_section};
use crate::error::{Error, Result};
use crate::spaces::{norm_sq, SpaceKind, SpaceSpec};
use crate::weights::{format_sci, ls_slope, MomentTable, RadialWeight};

/// Partial sums S(N) of ‖C_ω(1)‖² in the Dirichlet space and the universal
/// lower envelope L(N) = Σ_{n≤N} 1/(4(n+1)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletCurve {
    pub weight: String,
    pub s: Vec<f64>,
    pub l: Vec<f64>,
    /// min over N of S(N)/L(N).
    pub min_ratio: f64,
    /// S(N) ≥ L(N) up to a relative rounding slack of 1e-12, for every N.
    pub envelope_holds: bool,
}

impl DirichletCurve {
    /// CSV `N,S,L`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,S,L\n");
        for (n, (s, l)) in self.s.iter().zip(&self.l).enumerate() {
            out.push_str(&format!("{n},{},{}\n", format_sci(*s), format_sci(*l)));
        }
        out
    }
}

pub fn dirichlet_divergence(
    w: &RadialWeight,
    n_max: usize,
    table: &MomentTable,
) -> Result<DirichletCurve> {
    if n_max < 16 {
        return Err(Error::InvalidInput(format!(
            "N_max must be at least 16, got {n_max}"
        )));
    }
    let g = apply_to_degree(
        w,
        &crate::spaces::CoefficientSeries::from_real(&[1.0]),
        n_max,
        table,
    )?;
    let dirichlet = SpaceSpec::dirichlet();
    let (mut s, mut l) = (Vec::with_capacity(n_max + 1), Vec::with_capacity(n_max + 1));
    let (mut ss, mut ll) = (0.0, 0.0);
    for n in 0..=n_max {
        let m = (n + 1) as f64;
        ss += crate::spaces::coeff_weight(&dirichlet, n)? * g.coeff(n).norm_sqr();
        ll += 0.25 / m;
        s.push(ss);
        l.push(ll);
    }
    let min_ratio = s
        .iter()
        .zip(&l)
        .map(|(a, b)| a / b)
        .fold(f64::INFINITY, f64::min);
    Ok(DirichletCurve {
        weight: w.label().to_string(),
        envelope_holds: min_ratio >= 1.0 - 1e-12,
        s,
        l,
        min_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Norm tail of f_a allowed by the truncation rule.
    pub eps: f64,
    /// The image C_ω f_a is kept up to degree `output_factor · N(a)`.
    pub output_factor: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            output_factor: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCurve {
    pub weight: String,
    pub space: String,
    pub a: Vec<f64>,
    pub degree: Vec<usize>,
    pub output_degree: Vec<usize>,
    pub f_norm: Vec<f64>,
    pub ratio: Vec<f64>,
    pub min_ratio: f64,
}

impl ProbeCurve {
    /// CSV `a,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,ratio\n");
        for (a, r) in self.a.iter().zip(&self.ratio) {
            out.push_str(&format!("{a},{}\n", format_sci(*r)));
        }
        out
    }
}

/// ‖C_ω f_a‖/‖f_a‖ where f_a is cut at the degree N(a) of the truncation
/// rule and its image at `output_factor · N(a)`.
pub fn compactness_probe(
    w: &RadialWeight,
    space: &SpaceSpec,
    a_grid: &[f64],
    cfg: &ProbeConfig,
    table: &MomentTable,
) -> Result<ProbeCurve> {
    if cfg.output_factor == 0 {
        return Err(Error::InvalidInput(
            "output factor must be at least 1".into(),
        ));
    }
    if !space.is_admissible_domain() {
        return Err(Error::InvalidInput(format!(
            "{} is not an admissible domain",
            space.descriptor()
        )));
    }
    let mut out = ProbeCurve {
        weight: w.label().to_string(),
        space: space.descriptor(),
        a: a_grid.to_vec(),
        degree: Vec::new(),
        output_degree: Vec::new(),
        f_norm: Vec::new(),
        ratio: Vec::new(),
        min_ratio: f64::INFINITY,
    };
    for &a in a_grid {
        let n = truncation_degree(a, cfg.eps)?;
        let f = f_a(space, a, n)?;
        let out_degree = cfg.output_factor * n;
        let g = apply_to_degree(w, &f, out_degree, table)?;
        let nf = norm_sq(space, &f)?.sqrt();
        let ratio = norm_sq(space, &g)?.sqrt() / nf;
        out.degree.push(n);
        out.output_degree.push(out_degree);
        out.f_norm.push(nf);
        out.ratio.push(ratio);
        out.min_ratio = out.min_ratio.min(ratio);
    }
    Ok(out)
}

/// ‖P_N C_ω f_a‖/‖f_a‖ through the dense (N+1)-section, for small degrees.
pub fn compactness_ratio_dense(
    w: &RadialWeight,
    space: &SpaceSpec,
    a: f64,
    degree: usize,
    table: &MomentTable,
) -> Result<f64> {
    let s = matrix_section(w, space, degree + 1, table)?;
    let x: Vec<f64> = (0..=degree)
        .map(|n| (1.0 - a * a).sqrt() * a.powi(n as i32))
        .collect();
    let y = s.matvec(&x);
    let nx: f64 = x.iter().map(|v| v * v).sum();
    let ny: f64 = y.iter().map(|v| v * v).sum();
    Ok((ny / nx).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityReport {
    pub weight: String,
    pub space: String,
    #[serde(rename = "N")]
    pub n: usize,
    /// Exponents (x, y) of the moment ratio ω_x/ω_y.
    pub moment_exponents: (usize, usize),
    pub moment_ratio: f64,
    #[serde(rename = "Ms")]
    pub ms: Vec<usize>,
    pub double_sums: Vec<f64>,
    /// Slope of the double sums against ln M.
    pub log_m_slope: f64,
    /// ‖P C_ω f_N‖²/‖f_N‖² with the image truncated at `output_degree`.
    pub family_ratio: f64,
    pub output_degree: usize,
}

/// (1/Σ_{n≤MN} w_n) Σ_{k=N}^{MN} 1/(k+1) Σ_{n=k}^{MN} w_n with w_n = (n+1)^{1-γ}.
fn hgamma_double_sum(gamma: f64, n: usize, m: usize) -> f64 {
    let top = m * n;
    let w: Vec<f64> = (0..=top)
        .map(|k| ((k + 1) as f64).powf(1.0 - gamma))
        .collect();
    let total: f64 = w.iter().sum();
    let mut suffix = 0.0;
    let mut acc = 0.0;
    for k in (n..=top).rev() {
        suffix += w[k];
        acc += suffix / (k + 1) as f64;
    }
    acc / total
}

/// (1/(MN+1)) Σ_{k=N}^{MN} 1/(k+1) Σ_{n=k}^{MN} ((n-k+1)/(n+1))^{α/2} with α = 2.
fn bergman_double_sum(n: usize, m: usize) -> f64 {
    let top = m * n;
    // Σ_{n=k}^{top} (n-k+1)/(n+1) = (top-k+1) - k Σ_{n=k}^{top} 1/(n+1)
    let mut harmonic_tail = 0.0;
    let mut acc = 0.0;
    for k in (n..=top).rev() {
        harmonic_tail += 1.0 / (k + 1) as f64;
        let inner = (top - k + 1) as f64 - k as f64 * harmonic_tail;
        acc += inner / (k + 1) as f64;
    }
    acc / (top + 1) as f64
}

pub fn necessity_functionals(
    w: &RadialWeight,
    space: &SpaceSpec,
    n: usize,
    ms: &[usize],
    table: &MomentTable,
) -> Result<NecessityReport> {
    if n == 0 || ms.is_empty() || ms.contains(&0) {
        return Err(Error::InvalidInput(
            "N and every M must be at least 1".into(),
        ));
    }
    let (moment_exponents, f, sums): ((usize, usize), _, Vec<f64>) = match space.kind() {
        SpaceKind::HGamma(g) => (
            (8 * n, 12 * n),
            f_n(*g, n)?,
            ms.iter().map(|&m| hgamma_double_sum(*g, n, m)).collect(),
        ),
        SpaceKind::BergmanA2(_) => (
            (5 * n, 6 * n),
            bergman_f_n(space, n)?,
            ms.iter().map(|&m| bergman_double_sum(n, m)).collect(),
        ),
        SpaceKind::Dirichlet => {
            return Err(Error::InvalidInput(
                "dirichlet is not an admissible domain".into(),
            ));
        }
    };
    let (x, y) = moment_exponents;
    let moment_ratio = (table.log_moment(x as f64)? - table.log_moment(y as f64)?).exp();
    let log_m: Vec<f64> = ms.iter().map(|&m| (m as f64).ln()).collect();
    let log_m_slope = if ms.len() >= 2 {
        ls_slope(&log_m, &sums)
    } else {
        f64::NAN
    };
    let output_degree = 8 * n;
    let g = apply_to_degree(w, &f, output_degree, table)?;
    let family_ratio = norm_sq(space, &g)? / norm_sq(space, &f)?;
    Ok(NecessityReport {
        weight: w.label().to_string(),
        space: space.descriptor(),
        n,
        moment_exponents,
        moment_ratio,
        ms: ms.to_vec(),
        double_sums: sums,
        log_m_slope,
        family_ratio,
        output_degree,
    })
}
