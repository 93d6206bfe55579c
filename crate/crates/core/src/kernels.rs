//! Bergman reproducing kernels B_z^ω(ζ) = Σ (z̄ζ)ⁿ / (2ω_{2n+1}) and the
//! averaged kernel K_t^ω(z) = Σ tⁿzⁿ / (2(n+1)ω_{2n+1}), evaluated through
//! truncated series with an explicit tail bound.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::CoefficientSeries;
use crate::weights::{MomentTable, RadialWeight, WeightId};

/// Kernel coefficients c_n = 1/(2ω_{2n+1}), n = 0..=degree, stored as logs.
#[derive(Debug, Clone)]
pub struct KernelSeries {
    weight_id: WeightId,
    log_coeffs: Vec<f64>,
}

impl KernelSeries {
    pub fn weight_id(&self) -> &WeightId {
        &self.weight_id
    }

    pub fn degree(&self) -> usize {
        self.log_coeffs.len() - 1
    }

    pub fn log_coeffs(&self) -> &[f64] {
        &self.log_coeffs
    }

    pub fn coeff(&self, n: usize) -> f64 {
        self.log_coeffs[n].exp()
    }

    /// ln of c_n/(n+1), the coefficients of the averaged kernel.
    pub fn averaged_log_coeffs(&self) -> Vec<f64> {
        self.log_coeffs
            .iter()
            .enumerate()
            .map(|(n, l)| l - ((n + 1) as f64).ln())
            .collect()
    }

    pub fn to_series(&self) -> CoefficientSeries {
        CoefficientSeries::from_real(&self.log_coeffs.iter().map(|l| l.exp()).collect::<Vec<_>>())
    }

    /// Σ_{n≤N} c_n xⁿ together with a bound on the omitted tail.
    pub fn eval(&self, x: Complex64) -> KernelValue {
        eval_log_series(&self.log_coeffs, x)
    }

    /// Σ_{n≤N} c_n/(n+1) xⁿ together with a bound on the omitted tail.
    pub fn eval_averaged(&self, x: Complex64) -> KernelValue {
        eval_log_series(&self.averaged_log_coeffs(), x)
    }
}

fn check_table(w: &RadialWeight, table: &MomentTable) -> Result<()> {
    if w.id() != table.weight_id() {
        return Err(Error::WeightMismatch {
            expected: table.weight().label().to_string(),
            found: w.label().to_string(),
        });
    }
    Ok(())
}

/// c_n = 1/(2ω_{2n+1}) for n = 0..=degree.
pub fn kernel_coeffs(w: &RadialWeight, degree: usize, table: &MomentTable) -> Result<KernelSeries> {
    check_table(w, table)?;
    let xs: Vec<f64> = (0..=degree).map(|n| (2 * n + 1) as f64).collect();
    table.prefetch(&xs)?;
    let log_coeffs = xs
        .iter()
        .map(|&x| Ok(-std::f64::consts::LN_2 - table.log_moment(x)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelSeries {
        weight_id: w.id().clone(),
        log_coeffs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Absolute tolerance on the truncation tail.
    pub tolerance: f64,
    pub start_degree: usize,
    pub max_degree: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            start_degree: 64,
            max_degree: 1 << 15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub degree: usize,
}

/// Bound on Σ_{n>N} a_n ρⁿ from a fit a_n ≤ A(n+1)^p over the window
/// [N/2, N] of the computed coefficients.
pub fn tail_bound(log_coeffs: &[f64], rho: f64) -> f64 {
    let n = log_coeffs.len() - 1;
    if rho == 0.0 {
        return 0.0;
    }
    if n < 2 || rho >= 1.0 {
        return f64::INFINITY;
    }
    let lo = n / 2;
    let span = ((n + 1) as f64).ln() - ((lo + 1) as f64).ln();
    let p = ((log_coeffs[n] - log_coeffs[lo]) / span).max(0.0);
    let ln_a = (lo..=n)
        .map(|m| log_coeffs[m] - p * ((m + 1) as f64).ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let q = ((n + 3) as f64 / (n + 2) as f64).powf(p) * rho;
    if q >= 1.0 {
        return f64::INFINITY;
    }
    (ln_a + p * ((n + 2) as f64).ln() + (n + 1) as f64 * rho.ln()).exp() / (1.0 - q)
}

/// Σ exp(l_n) xⁿ over the given log-coefficients, with the fitted tail bound.
pub fn eval_log_series(log_coeffs: &[f64], x: Complex64) -> KernelValue {
    let rho = x.norm();
    let mut value = Complex64::new(log_coeffs[0].exp(), 0.0);
    if rho > 0.0 {
        let ln_rho = rho.ln();
        let unit = x / rho;
        let mut phase = Complex64::new(1.0, 0.0);
        for (n, l) in log_coeffs.iter().enumerate().skip(1) {
            phase *= unit;
            value += phase * (l + n as f64 * ln_rho).exp();
        }
    }
    KernelValue {
        value,
        tail_bound: tail_bound(log_coeffs, rho),
        degree: log_coeffs.len() - 1,
    }
}

/// Doubles the truncation degree until the tail bound drops below the tolerance.
fn adaptive<F>(
    w: &RadialWeight,
    table: &MomentTable,
    cfg: &KernelConfig,
    eval: F,
) -> Result<KernelValue>
where
    F: Fn(&KernelSeries) -> KernelValue,
{
    let mut degree = cfg.start_degree.clamp(2, cfg.max_degree.max(2));
    loop {
        let series = kernel_coeffs(w, degree, table)?;
        let v = eval(&series);
        if v.tail_bound <= cfg.tolerance {
            return Ok(v);
        }
        if degree >= cfg.max_degree {
            return Err(Error::KernelTail {
                tail_bound: v.tail_bound,
                tolerance: cfg.tolerance,
                degree,
            });
        }
        degree = (2 * degree).min(cfg.max_degree);
    }
}

fn check_disc(z: Complex64, what: &str) -> Result<()> {
    if !(z.norm() < 1.0) {
        return Err(Error::InvalidInput(format!(
            "{what} must lie in the open unit disc, got {z}"
        )));
    }
    Ok(())
}

/// B_z^ω(ζ) = Σ c_n (z̄ζ)ⁿ.
pub fn kernel_eval(
    w: &RadialWeight,
    z: Complex64,
    zeta: Complex64,
    table: &MomentTable,
    cfg: &KernelConfig,
) -> Result<KernelValue> {
    check_disc(z, "z")?;
    check_disc(zeta, "ζ")?;
    let x = z.conj() * zeta;
    adaptive(w, table, cfg, |s| s.eval(x))
}

/// K_t^ω(z) = Σ c_n/(n+1) (tz)ⁿ.
pub fn averaged_kernel_eval(
    w: &RadialWeight,
    t: f64,
    z: Complex64,
    table: &MomentTable,
    cfg: &KernelConfig,
) -> Result<KernelValue> {
    check_disc(z, "z")?;
    if !(0.0..1.0).contains(&t) {
        return Err(Error::InvalidInput(format!(
            "t must lie in [0, 1), got {t}"
        )));
    }
    adaptive(w, table, cfg, |s| s.eval_averaged(z * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ln_gamma;
    use crate::weights::parse_weight;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn one_has_linear_coefficients() {
        let w = RadialWeight::one();
        let t = MomentTable::new(&w);
        let s = kernel_coeffs(&w, 100, &t).unwrap();
        for n in 0..=100 {
            assert!((s.coeff(n) / (n + 1) as f64 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn coefficients_nondecreasing() {
        for label in ["one", "pow(2)", "exp(1,1)", "loginv(2)"] {
            let w = parse_weight(label).unwrap();
            let t = MomentTable::new(&w);
            let s = kernel_coeffs(&w, 300, &t).unwrap();
            assert!(s.log_coeffs().windows(2).all(|p| p[1] >= p[0]), "{label}");
        }
    }

    #[test]
    fn geometric_identity() {
        let w = RadialWeight::one();
        let t = MomentTable::new(&w);
        let v = kernel_eval(&w, c(0.5, 0.0), c(0.5, 0.0), &t, &KernelConfig::default()).unwrap();
        assert!((v.value - c(16.0 / 9.0, 0.0)).norm() < 1e-12);
        assert!(v.tail_bound <= 1e-12);
    }

    #[test]
    fn origin_gives_constant_term() {
        let w = parse_weight("exp(1,1)").unwrap();
        let t = MomentTable::new(&w);
        let v = kernel_eval(&w, c(0.0, 0.0), c(0.3, 0.4), &t, &KernelConfig::default()).unwrap();
        let c0 = 0.5 / t.log_moment(1.0).unwrap().exp();
        assert!((v.value.re / c0 - 1.0).abs() < 1e-14 && v.value.im == 0.0);
        assert_eq!(v.tail_bound, 0.0);
        let a = averaged_kernel_eval(&w, 0.0, c(0.5, 0.1), &t, &KernelConfig::default()).unwrap();
        assert!((a.value.re / c0 - 1.0).abs() < 1e-14);
        let a = averaged_kernel_eval(&w, 0.8, c(0.0, 0.0), &t, &KernelConfig::default()).unwrap();
        assert!((a.value.re / c0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pow2_closed_form_kernel() {
        let w = RadialWeight::pow2(1.0).unwrap();
        let t = MomentTable::new(&w);
        let v = kernel_eval(&w, c(0.3, 0.0), c(0.3, 0.0), &t, &KernelConfig::default()).unwrap();
        assert!((v.value.re - 2.0 * 0.91f64.powi(-3)).abs() < 1e-10);
        let s = kernel_coeffs(&w, 40, &t).unwrap();
        for n in 0..=40 {
            let nf = n as f64;
            let expect =
                (2.0f64.ln() + ln_gamma(nf + 3.0) - ln_gamma(3.0) - ln_gamma(nf + 1.0)).exp();
            assert!((s.coeff(n) / expect - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let w = parse_weight("loginv(2)").unwrap();
        let t = MomentTable::new(&w);
        let cfg = KernelConfig::default();
        let (z, zeta) = (c(0.3, -0.5), c(-0.2, 0.6));
        let a = kernel_eval(&w, z, zeta, &t, &cfg).unwrap();
        let b = kernel_eval(&w, zeta, z, &t, &cfg).unwrap();
        assert!((a.value - b.value.conj()).norm() < 1e-13 * a.value.norm());
    }

    #[test]
    fn averaged_kernel_of_one_is_cauchy() {
        let w = RadialWeight::one();
        let t = MomentTable::new(&w);
        for (tt, z) in [(0.5, c(0.9, 0.0)), (0.99, c(-0.3, 0.6))] {
            let v = averaged_kernel_eval(&w, tt, z, &t, &KernelConfig::default()).unwrap();
            let expect = (c(1.0, 0.0) - z * tt).inv();
            assert!((v.value - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn averaged_is_termwise_integral() {
        let w = RadialWeight::pow(0.5).unwrap();
        let t = MomentTable::new(&w);
        let s = kernel_coeffs(&w, 50, &t).unwrap();
        for (n, l) in s.averaged_log_coeffs().iter().enumerate() {
            assert!((l.exp() - s.coeff(n) / (n + 1) as f64).abs() < 1e-14 * s.coeff(n));
        }
    }

    #[test]
    fn reproducing_pairing() {
        let w = RadialWeight::one();
        let t = MomentTable::new(&w);
        let s = kernel_coeffs(&w, 16, &t).unwrap();
        let f = CoefficientSeries::new(
            (0..=16)
                .map(|n| c(1.0 / (n + 1) as f64, (n % 3) as f64))
                .collect(),
        );
        let z = c(0.4, -0.3);
        let mut pairing = c(0.0, 0.0);
        let mut zbar_n = c(1.0, 0.0);
        for n in 0..=16 {
            let b_n = zbar_n * s.coeff(n);
            pairing +=
                f.coeff(n) * b_n.conj() * (2.0 * t.log_moment((2 * n + 1) as f64).unwrap().exp());
            zbar_n *= z.conj();
        }
        assert!((pairing - f.evaluate(z)).norm() < 1e-14);
    }

    #[test]
    fn tail_bound_is_conservative() {
        // c_n = n + 1 at ρ = 0.5: exact tail of Σ (n+1)ρⁿ beyond N
        let log_c: Vec<f64> = (0..=40).map(|n| ((n + 1) as f64).ln()).collect();
        let exact: f64 = (41..400).map(|n| (n + 1) as f64 * 0.5f64.powi(n)).sum();
        let b = tail_bound(&log_c, 0.5);
        assert!(b >= exact && b < 10.0 * exact);
        assert!(tail_bound(&log_c, 1.0).is_infinite());
    }

    #[test]
    fn truncation_failure_is_reported() {
        let w = RadialWeight::one();
        let t = MomentTable::new(&w);
        let cfg = KernelConfig {
            max_degree: 128,
            ..KernelConfig::default()
        };
        let err = kernel_eval(&w, c(0.99, 0.0), c(0.99, 0.0), &t, &cfg).unwrap_err();
        assert!(matches!(err, Error::KernelTail { degree: 128, .. }));
    }

    #[test]
    fn averaged_kernel_is_bounded_on_compacts() {
        // |K_t(z)| ≤ K_t(|z|) ≤ lim_{t→1} K_t(r) for |z| ≤ r
        let r = 0.9;
        for w in crate::weights::roster() {
            let t = MomentTable::new(&w);
            let cfg = KernelConfig::default();
            let cap = averaged_kernel_eval(&w, 1.0 - 1e-9, c(r, 0.0), &t, &cfg).unwrap().value.re;
            assert!(cap.is_finite());
            for tt in [0.0, 0.3, 0.7, 0.9, 0.99, 0.999999] {
                for k in 0..16 {
                    let z = Complex64::from_polar(r * (k % 4 + 1) as f64 / 4.0, k as f64 * 0.7);
                    let v = averaged_kernel_eval(&w, tt, z, &t, &cfg).unwrap().value.norm();
                    assert!(v <= cap * (1.0 + 1e-12), "{}: t={tt}, z={z}: {v} > {cap}", w.label());
                }
            }
        }
    }
}
