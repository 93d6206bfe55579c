use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{CoefficientSeries, SpaceKind, SpaceSpec};

/// Test functions of the necessity and non-compactness arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TestFamily {
    #[serde(rename = "fN")]
    FN { gamma: f64, n: usize },
    #[serde(rename = "fNM")]
    FNM { n: usize, m: usize },
    #[serde(rename = "fa")]
    Fa { a: f64, degree: usize },
    #[serde(rename = "bergman_fN")]
    BergmanFN { n: usize },
    #[serde(rename = "bergman_fNM")]
    BergmanFNM { n: usize, m: usize },
}

impl TestFamily {
    /// Coefficients of the family member; `space` supplies w_n for the
    /// Bergman variants and for f_a.
    pub fn realize(&self, space: &SpaceSpec) -> Result<CoefficientSeries> {
        match *self {
            TestFamily::FN { gamma, n } => f_n(gamma, n),
            TestFamily::FNM { n, m } => Ok(f_nm(n, m)),
            TestFamily::Fa { a, degree } => f_a(space, a, degree),
            TestFamily::BergmanFN { n } => bergman_f_n(space, n),
            TestFamily::BergmanFNM { n, m } => bergman_f_nm(space, n, m),
        }
    }
}

/// f̂(n) = (n+1)^{(γ-1)/2} for n ≤ N.
pub fn f_n(gamma: f64, n: usize) -> Result<CoefficientSeries> {
    if !(gamma > 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "γ must be positive, got {gamma}"
        )));
    }
    Ok(CoefficientSeries::from_real(
        &(0..=n)
            .map(|k| ((k + 1) as f64).powf(0.5 * (gamma - 1.0)))
            .collect::<Vec<_>>(),
    ))
}

/// f̂(n) = 1 for n ≤ MN.
pub fn f_nm(n: usize, m: usize) -> CoefficientSeries {
    CoefficientSeries::from_real(&vec![1.0; m * n + 1])
}

fn bergman_scale(space: &SpaceSpec, count: usize) -> Result<Vec<f64>> {
    let SpaceKind::BergmanA2(_) = space.kind() else {
        return Err(Error::InvalidInput(format!(
            "{} is not a Bergman space",
            space.descriptor()
        )));
    };
    // w_n = 2μ_{2n+1}, so μ_{2n+1}^{-1/2} = (w_n/2)^{-1/2}
    Ok(space
        .log_coeff_weights(count)?
        .iter()
        .map(|l| (-0.5 * (l - std::f64::consts::LN_2)).exp())
        .collect())
}

/// f̂(n) = μ_{2n+1}^{-1/2} for n ≤ N.
pub fn bergman_f_n(space: &SpaceSpec, n: usize) -> Result<CoefficientSeries> {
    Ok(CoefficientSeries::from_real(&bergman_scale(space, n + 1)?))
}

/// f̂(n) = μ_{2n+1}^{-1/2} for n ≤ MN.
pub fn bergman_f_nm(space: &SpaceSpec, n: usize, m: usize) -> Result<CoefficientSeries> {
    bergman_f_n(space, m * n)
}

/// f̂(n) = (1-a²)^{1/2} aⁿ w_n^{-1/2} for n ≤ degree, a unit vector up to the
/// tail a^{2(degree+1)}. On H_γ this is (1-a²)^{1/2} aⁿ (n+1)^{(γ-1)/2}.
pub fn f_a(space: &SpaceSpec, a: f64, degree: usize) -> Result<CoefficientSeries> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "a must lie in (0, 1), got {a}"
        )));
    }
    let lw = space.log_coeff_weights(degree + 1)?;
    let (c, la) = (0.5 * (1.0 - a * a).ln(), a.ln());
    Ok(CoefficientSeries::from_real(
        &lw.iter()
            .enumerate()
            .map(|(n, l)| (c + n as f64 * la - 0.5 * l).exp())
            .collect::<Vec<_>>(),
    ))
}

/// Smallest degree N with a^{2N} ≤ eps, so the norm tail a^{2(N+1)} of f_a is below eps.
pub fn truncation_degree(a: f64, eps: f64) -> Result<usize> {
    if !(a > 0.0 && a < 1.0) || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "need a, eps in (0, 1), got a={a}, eps={eps}"
        )));
    }
    Ok((eps.ln() / (2.0 * a.ln())).ceil() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::norm_sq;
    use crate::weights::RadialWeight;

    #[test]
    fn family_norms() {
        for gamma in [0.5, 1.0, 2.0] {
            let s = SpaceSpec::hgamma(gamma).unwrap();
            for n in [10usize, 100, 1000] {
                let f = f_n(gamma, n).unwrap();
                assert!((norm_sq(&s, &f).unwrap() / (n + 1) as f64 - 1.0).abs() < 1e-12);
            }
        }
        let s = SpaceSpec::bergman(&RadialWeight::pow(1.0).unwrap());
        let f = bergman_f_n(&s, 50).unwrap();
        assert!((norm_sq(&s, &f).unwrap() / 102.0 - 1.0).abs() < 1e-12);
        assert!(bergman_f_n(&SpaceSpec::hgamma(1.0).unwrap(), 3).is_err());
    }

    #[test]
    fn f_a_is_normalized() {
        for space in [
            SpaceSpec::hgamma(0.7).unwrap(),
            SpaceSpec::bergman(&RadialWeight::pow(1.0).unwrap()),
        ] {
            for a in [0.9, 0.99, 0.999] {
                let n = truncation_degree(a, 1e-6).unwrap();
                let f = f_a(&space, a, n).unwrap();
                let dev = (norm_sq(&space, &f).unwrap().sqrt() - 1.0).abs();
                assert!(dev < 1e-6, "{a}: {dev}");
            }
        }
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(truncation_degree(0.9, 1e-6).unwrap(), 66);
        let n = truncation_degree(0.999, 1e-6).unwrap();
        assert!(0.999f64.powi(2 * n as i32) <= 1e-6);
        assert!(0.999f64.powi(2 * (n as i32 - 1)) > 1e-6);
    }

    #[test]
    fn family_tags() {
        let f = TestFamily::FNM { n: 4, m: 16 };
        assert_eq!(
            f.realize(&SpaceSpec::hgamma(1.0).unwrap())
                .unwrap()
                .degree(),
            64
        );
        let j = serde_json::to_string(&f).unwrap();
        assert_eq!(j, r#"{"kind":"fNM","n":4,"m":16}"#);
    }
}
