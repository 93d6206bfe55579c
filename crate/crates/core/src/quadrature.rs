//! Quadrature rules used across the crate.
//!
//! * [`log_integrate_line`] integrates a positive function given by its
//!   logarithm over the whole real line with the trapezoidal rule. Callers
//!   arrange (by a double-exponential change of variables) that the log
//!   integrand decays at least linearly at both ends; the trapezoidal rule is
//!   then exponentially convergent in 1/h and the result never underflows.
//! * [`unit_by_gap`] integrates complex-valued functions over [0, 1] after
//!   the substitution 1 - t = exp(-e^y), which resolves algebraic and
//!   logarithmic singularities at t = 1.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative cut below the peak of the log integrand at which the range is truncated.
const LOG_CUT: f64 = 45.0;
const COARSE_STEP: f64 = 0.5;
const COARSE_SPAN: f64 = 60.0;
const Y_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureConfig {
    /// Target absolute error on the log of the integral.
    pub tolerance: f64,
    /// Maximum number of step halvings after the coarse level.
    pub max_levels: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_levels: 14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogQuad {
    pub log_value: f64,
    pub abs_log_err: f64,
    pub evaluations: usize,
}

/// Running log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn add(&mut self, g: f64) {
        if !(g > f64::NEG_INFINITY) {
            return;
        }
        if g > self.max {
            self.scaled = self.scaled * (self.max - g).exp() + 1.0;
            self.max = g;
        } else {
            self.scaled += (g - self.max).exp();
        }
    }

    fn ln(&self) -> f64 {
        self.max + self.scaled.ln()
    }
}

fn sanitize(g: f64) -> f64 {
    if g.is_nan() {
        f64::NEG_INFINITY
    } else {
        g
    }
}

/// Integrates `exp(g(y))` over the real line. Returns the natural log of the
/// integral with an error estimate taken from successive step halvings.
pub fn log_integrate_line<G>(what: &str, g: G, cfg: &QuadratureConfig) -> Result<LogQuad>
where
    G: Fn(f64) -> f64,
{
    let mut evaluations = 0usize;
    let mut eval = |y: f64| {
        evaluations += 1;
        sanitize(g(y))
    };

    // Coarse scan to locate the bulk of the mass.
    let n_coarse = (2.0 * COARSE_SPAN / COARSE_STEP) as i64;
    let mut coarse: Vec<(f64, f64)> = (0..=n_coarse)
        .map(|i| {
            let y = -COARSE_SPAN + i as f64 * COARSE_STEP;
            (y, eval(y))
        })
        .collect();
    let peak = |pts: &[(f64, f64)]| pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut gmax = peak(&coarse);
    if !gmax.is_finite() {
        return Err(Error::Quadrature {
            what: what.to_string(),
            achieved: f64::INFINITY,
            tolerance: cfg.tolerance,
        });
    }
    // Extend either end while the integrand is still significant.
    while coarse.last().is_some_and(|p| p.1 > gmax - LOG_CUT) {
        let y = coarse.last().unwrap().0 + COARSE_STEP;
        if y > Y_LIMIT {
            return Err(Error::Quadrature {
                what: format!("{what} (integrand decays too slowly)"),
                achieved: f64::INFINITY,
                tolerance: cfg.tolerance,
            });
        }
        let v = eval(y);
        coarse.push((y, v));
        gmax = gmax.max(v);
    }
    while coarse.first().is_some_and(|p| p.1 > gmax - LOG_CUT) {
        let y = coarse[0].0 - COARSE_STEP;
        if y < -Y_LIMIT {
            return Err(Error::Quadrature {
                what: format!("{what} (integrand decays too slowly)"),
                achieved: f64::INFINITY,
                tolerance: cfg.tolerance,
            });
        }
        let v = eval(y);
        coarse.insert(0, (y, v));
        gmax = gmax.max(v);
    }
    let first = coarse.iter().position(|p| p.1 > gmax - LOG_CUT).unwrap();
    let last = coarse.iter().rposition(|p| p.1 > gmax - LOG_CUT).unwrap();
    let lo = coarse[first.saturating_sub(1)].0;
    let hi = coarse[(last + 1).min(coarse.len() - 1)].0;

    let mut h = COARSE_STEP;
    let mut sum = LogSum::new();
    for p in coarse.iter().filter(|p| p.0 >= lo && p.0 <= hi) {
        sum.add(p.1);
    }
    let mut prev = sum.ln() + h.ln();
    let mut last_diff = f64::INFINITY;
    const MIN_LEVELS: u32 = 3;

    for level in 1..=cfg.max_levels {
        h *= 0.5;
        let count = ((hi - lo) / (2.0 * h)).round() as i64;
        for i in 0..count {
            sum.add(eval(lo + (2 * i + 1) as f64 * h));
        }
        let current = sum.ln() + h.ln();
        last_diff = (current - prev).abs();
        prev = current;
        if level >= MIN_LEVELS && last_diff <= cfg.tolerance {
            let floor = 32.0 * f64::EPSILON * (LOG_CUT + current.abs());
            return Ok(LogQuad {
                log_value: current,
                abs_log_err: last_diff.max(floor),
                evaluations,
            });
        }
    }
    Err(Error::Quadrature {
        what: what.to_string(),
        achieved: last_diff,
        tolerance: cfg.tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadValue {
    pub value: Complex64,
    pub abs_err: f64,
    pub evaluations: usize,
}

/// Span of the variable y in [`unit_by_gap`]; beyond it the transformed
/// integrand is below 1e-19 of its scale for every supported weight.
const GAP_Y_MIN: f64 = -45.0;
const GAP_Y_MAX: f64 = 45.0;

/// ∫₀¹ h(t) dt for integrands that may concentrate or be singular at t = 1.
///
/// With 1 - t = exp(-e^y) the integral becomes ∫_ℝ h(t)(1-t) e^y dy, which
/// is summed by the trapezoidal rule with step halving. The callback gets
/// `t` and `v = -ln(1-t)` and must return h(t)·(1-t), so callers can form
/// that product without underflow when 1 - t is tiny.
///
/// Convergence is declared when two successive levels agree within
/// `rel_tol * max(|I|, 1e-300)`.
pub fn unit_by_gap<F>(what: &str, f: F, rel_tol: f64, max_levels: u32) -> Result<QuadValue>
where
    F: Fn(f64, f64) -> Complex64,
{
    let mut evaluations = 0usize;
    let mut node = |y: f64| -> Complex64 {
        let v = y.exp();
        let t = -(-v).exp_m1();
        evaluations += 1;
        let r = f(t, v) * v;
        if r.re.is_finite() && r.im.is_finite() {
            r
        } else {
            Complex64::new(0.0, 0.0)
        }
    };

    let mut h = 0.5;
    let span = GAP_Y_MAX - GAP_Y_MIN;
    let n0 = (span / h) as i64;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..=n0 {
        sum += node(GAP_Y_MIN + i as f64 * h);
    }
    let mut prev = sum * h;
    let mut diff = f64::INFINITY;
    for level in 1..=max_levels {
        h *= 0.5;
        let n = (span / h) as i64;
        let mut i = 1;
        while i < n {
            sum += node(GAP_Y_MIN + i as f64 * h);
            i += 2;
        }
        let current = sum * h;
        diff = (current - prev).norm();
        prev = current;
        if level >= 2 && diff <= rel_tol * current.norm().max(1e-300) {
            return Ok(QuadValue {
                value: current,
                abs_err: diff,
                evaluations,
            });
        }
    }
    Err(Error::Quadrature {
        what: what.to_string(),
        achieved: diff / prev.norm().max(1e-300),
        tolerance: rel_tol,
    })
}
