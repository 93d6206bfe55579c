use serde::{Deserialize, Serialize};

use crate::cesaro::OperatorSection;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    /// Relative change of the estimate regarded as converged.
    pub tolerance: f64,
    /// Number of consecutive iterations that must meet the tolerance.
    pub consecutive: u32,
    pub max_iterations: u32,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            consecutive: 3,
            max_iterations: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub sigma: f64,
    pub iterations: u32,
    pub converged: bool,
}

fn pairwise_norm_sq(x: &[f64]) -> f64 {
    if x.len() <= 32 {
        return x.iter().map(|v| v * v).sum();
    }
    let h = x.len() / 2;
    pairwise_norm_sq(&x[..h]) + pairwise_norm_sq(&x[h..])
}

/// Largest singular value by power iteration on SᵀS from the normalized
/// all-ones vector. On non-convergence the best estimate is returned with
/// `converged = false`.
pub fn section_norm(s: &OperatorSection, cfg: &PowerConfig) -> PowerResult {
    let n = s.dim();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut sigma = 0.0f64;
    let mut streak = 0;
    for it in 1..=cfg.max_iterations {
        let y = s.matvec(&x);
        let next = pairwise_norm_sq(&y).sqrt();
        let z = s.matvec_t(&y);
        let zn = pairwise_norm_sq(&z).sqrt();
        if zn == 0.0 {
            return PowerResult {
                sigma: next,
                iterations: it,
                converged: true,
            };
        }
        if (next - sigma).abs() <= cfg.tolerance * next {
            streak += 1;
        } else {
            streak = 0;
        }
        sigma = next;
        if streak >= cfg.consecutive {
            return PowerResult {
                sigma,
                iterations: it,
                converged: true,
            };
        }
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi = zi / zn;
        }
    }
    PowerResult {
        sigma,
        iterations: cfg.max_iterations,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cesaro::matrix_section;
    use crate::spaces::SpaceSpec;
    use crate::weights::{MomentTable, RadialWeight};

    fn cesaro(n: usize) -> OperatorSection {
        let w = RadialWeight::one();
        matrix_section(
            &w,
            &SpaceSpec::hgamma(1.0).unwrap(),
            n,
            &MomentTable::new(&w),
        )
        .unwrap()
    }

    #[test]
    fn small_cesaro_sections() {
        let r = section_norm(&cesaro(1), &PowerConfig::default());
        assert!((r.sigma - 1.0).abs() < 1e-15 && r.converged);
        let r = section_norm(&cesaro(2), &PowerConfig::default());
        let expect = ((3.0 + 5f64.sqrt()) / 4.0).sqrt();
        assert!((r.sigma - expect).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn matches_dense_eigenvalue() {
        // largest eigenvalue of SᵀS by a Jacobi sweep oracle on a small section
        let s = cesaro(12);
        let d = s.to_dense();
        let n = d.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = (0..n).map(|k| d[k][i] * d[k][j]).sum();
            }
        }
        for _ in 0..60 {
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * c;
                    for row in a.iter_mut() {
                        let (akp, akq) = (row[p], row[q]);
                        row[p] = c * akp - sn * akq;
                        row[q] = sn * akp + c * akq;
                    }
                    let (rp, rq) = if p < q {
                        let (lo, hi) = a.split_at_mut(q);
                        (&mut lo[p], &mut hi[0])
                    } else {
                        let (lo, hi) = a.split_at_mut(p);
                        (&mut hi[0], &mut lo[q])
                    };
                    for (apk, aqk) in rp.iter_mut().zip(rq.iter_mut()) {
                        let (x, y) = (*apk, *aqk);
                        *apk = c * x - sn * y;
                        *aqk = sn * x + c * y;
                    }
                }
            }
        }
        let lmax = (0..n).map(|i| a[i][i]).fold(0.0, f64::max);
        let r = section_norm(&s, &PowerConfig::default());
        assert!(
            (r.sigma - lmax.sqrt()).abs() < 1e-7,
            "{} vs {}",
            r.sigma,
            lmax.sqrt()
        );
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let cfg = PowerConfig {
            max_iterations: 2,
            ..PowerConfig::default()
        };
        let r = section_norm(&cesaro(64), &cfg);
        assert!(!r.converged && r.sigma > 1.0);
    }
}
