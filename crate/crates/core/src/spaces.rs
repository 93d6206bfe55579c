//! Hilbert spaces H_γ and A²_μ described by coefficient weights w_n, so
//! that ‖f‖² = Σ w_n |f̂(n)|².

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ln_beta;
use crate::weights::{parse_weight, MomentTable, RadialWeight};

/// Finite Taylor coefficient vector; index n is the coefficient of z^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefficientSeries {
    pub coeffs: Vec<Complex64>,
}

impl CoefficientSeries {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// z^n.
    pub fn monomial(n: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        c[n] = Complex64::new(1.0, 0.0);
        Self::new(c)
    }

    /// Length minus one; the zero-length series has degree 0 by convention.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    /// Zero-padded or truncated copy with the given degree.
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(degree + 1, Complex64::new(0.0, 0.0));
        Self::new(c)
    }

    /// Horner evaluation at z.
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// a·self + b·other, padded to the longer of the two.
    pub fn linear_combination(&self, a: Complex64, other: &Self, b: Complex64) -> Self {
        let n = self.len().max(other.len());
        Self::new(
            (0..n)
                .map(|i| a * self.coeff(i) + b * other.coeff(i))
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone)]
pub enum SpaceKind {
    HGamma(f64),
    BergmanA2(Arc<MomentTable>),
    /// The Dirichlet space D², w_n = n + 1. Not an admissible operator domain.
    Dirichlet,
}

#[derive(Debug, Clone)]
pub struct SpaceSpec {
    kind: SpaceKind,
}

impl SpaceSpec {
    pub fn hgamma(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::ParameterOutOfRange(format!(
                "H_γ needs γ > 0, got {gamma}"
            )));
        }
        Ok(Self {
            kind: SpaceKind::HGamma(gamma),
        })
    }

    pub fn bergman(mu: &RadialWeight) -> Self {
        Self::bergman_with_table(Arc::new(MomentTable::new(mu)))
    }

    pub fn bergman_with_table(table: Arc<MomentTable>) -> Self {
        Self {
            kind: SpaceKind::BergmanA2(table),
        }
    }

    pub fn dirichlet() -> Self {
        Self {
            kind: SpaceKind::Dirichlet,
        }
    }

    /// Parses `hgamma:<γ>`, `bergman:<weight>` or `dirichlet`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "dirichlet" {
            return Ok(Self::dirichlet());
        }
        if let Some(g) = text.strip_prefix("hgamma:") {
            let gamma: f64 = g
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad γ in space '{text}'")))?;
            return Self::hgamma(gamma);
        }
        if let Some(w) = text.strip_prefix("bergman:") {
            return Ok(Self::bergman(&parse_weight(w)?));
        }
        Err(Error::InvalidInput(format!(
            "unknown space '{text}' (expected hgamma:<γ>, bergman:<weight> or dirichlet)"
        )))
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    /// Whether C_ω may be studied as an operator on this space.
    pub fn is_admissible_domain(&self) -> bool {
        !matches!(self.kind, SpaceKind::Dirichlet)
    }

    pub fn descriptor(&self) -> String {
        match &self.kind {
            SpaceKind::HGamma(g) => format!("hgamma:{g}"),
            SpaceKind::BergmanA2(t) => format!("bergman:{}", t.weight().label()),
            SpaceKind::Dirichlet => "dirichlet".to_string(),
        }
    }

    /// ln w_n.
    pub fn log_coeff_weight(&self, n: usize) -> Result<f64> {
        let m = (n + 1) as f64;
        Ok(match &self.kind {
            SpaceKind::HGamma(g) => (1.0 - g) * m.ln(),
            SpaceKind::BergmanA2(t) => std::f64::consts::LN_2 + t.log_moment((2 * n + 1) as f64)?,
            SpaceKind::Dirichlet => m.ln(),
        })
    }

    /// ln w_n for n < count.
    pub fn log_coeff_weights(&self, count: usize) -> Result<Vec<f64>> {
        if let SpaceKind::BergmanA2(t) = &self.kind {
            let xs: Vec<f64> = (0..count).map(|n| (2 * n + 1) as f64).collect();
            t.prefetch(&xs)?;
        }
        (0..count).map(|n| self.log_coeff_weight(n)).collect()
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

/// w_n of the space.
pub fn coeff_weight(space: &SpaceSpec, n: usize) -> Result<f64> {
    let m = (n + 1) as f64;
    match &space.kind {
        SpaceKind::HGamma(g) => Ok(m.powf(1.0 - g)),
        SpaceKind::BergmanA2(t) => Ok(2.0 * t.moment_value((2 * n + 1) as f64)?),
        SpaceKind::Dirichlet => Ok(m),
    }
}

/// sqrt(Σ w_n |f̂(n)|²).
pub fn norm(space: &SpaceSpec, f: &CoefficientSeries) -> Result<f64> {
    Ok(norm_sq(space, f)?.sqrt())
}

pub fn norm_sq(space: &SpaceSpec, f: &CoefficientSeries) -> Result<f64> {
    let lw = space.log_coeff_weights(f.len())?;
    Ok(f.coeffs
        .iter()
        .zip(&lw)
        .filter(|(c, _)| c.norm_sqr() > 0.0)
        .map(|(c, l)| (l + c.norm_sqr().ln()).exp())
        .sum())
}

/// Integral norm |f(0)|² + ∫_𝔻 |f'|² (1-|z|)^γ dA, evaluated on monomials by
/// ∫ |z^{n-1}|² (1-|z|)^γ dA = 2 B(2n, γ+1).
pub fn exact_hgamma_norm(f: &CoefficientSeries, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!(
            "H_γ needs γ > 0, got {gamma}"
        )));
    }
    let mut s = f.coeff(0).norm_sqr();
    for (n, c) in f.coeffs.iter().enumerate().skip(1) {
        let a = c.norm_sqr();
        if a > 0.0 {
            let nf = n as f64;
            s += (2.0 * nf.ln() + a.ln() + std::f64::consts::LN_2 + ln_beta(2.0 * nf, gamma + 1.0))
                .exp();
        }
    }
    Ok(s.sqrt())
}

/// Reproducing-kernel coefficients γ(n) = Γ(n+γ)/(Γ(γ) n!) of H_γ, n = 0..=n_max.
pub fn hgamma_kernel_coeffs(gamma: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!(
            "H_γ needs γ > 0, got {gamma}"
        )));
    }
    let mut out = Vec::with_capacity(n_max + 1);
    let mut c = 1.0;
    for n in 0..=n_max {
        out.push(c);
        c *= (n as f64 + gamma) / (n as f64 + 1.0);
    }
    Ok(out)
}
