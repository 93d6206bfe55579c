//! The operator C_ω in coefficient form, its integral form as an
//! independent oracle, and finite matrix sections.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{eval_log_series, tail_bound, KernelConfig};
use crate::quadrature::{unit_by_gap, QuadValue};
use crate::spaces::{CoefficientSeries, SpaceSpec};
use crate::weights::{format_sci, MomentTable, RadialWeight, WeightId};

/// Entries with a smaller log-magnitude are stored as zero.
pub const FLUSH_LOG: f64 = -700.0;
/// Entries with a larger log-magnitude are an error.
pub const OVERFLOW_LOG: f64 = 709.0;

/// Factors of ω_n · t_{n-k} with t_m = 1/(2(m+1)ω_{2m+1}).
struct Factors {
    log_row: Vec<f64>,
    lin_row: Vec<Option<f64>>,
    log_t: Vec<f64>,
}

impl Factors {
    fn new(w: &RadialWeight, table: &MomentTable, count: usize) -> Result<Self> {
        if w.id() != table.weight_id() {
            return Err(Error::WeightMismatch {
                expected: table.weight().label().to_string(),
                found: w.label().to_string(),
            });
        }
        let xs: Vec<f64> = (0..count)
            .map(|n| n as f64)
            .chain((0..count).map(|m| (2 * m + 1) as f64))
            .collect();
        table.prefetch(&xs)?;
        let expr = w.expression();
        let mut log_row = Vec::with_capacity(count);
        let mut lin_row = Vec::with_capacity(count);
        let mut log_t = Vec::with_capacity(count);
        for n in 0..count {
            log_row.push(table.log_moment(n as f64)?);
            lin_row.push(expr.exact_moment(n as f64));
            let x = (2 * n + 1) as f64;
            log_t.push(-(x + 1.0).ln() - table.log_moment(x)?);
        }
        Ok(Self {
            log_row,
            lin_row,
            log_t,
        })
    }

    /// (log-magnitude, value) of ω_n t_{n-k} scaled by exp(extra).
    fn entry(&self, n: usize, k: usize, extra: f64) -> (f64, f64) {
        let lt = self.log_t[n - k] + extra;
        let log = self.log_row[n] + lt;
        let value = match self.lin_row[n] {
            Some(v) => v * lt.exp(),
            None => log.exp(),
        };
        (log, value)
    }
}

/// ĝ(n) for n = 0..=degree, treating f̂(k) = 0 beyond the degree of f.
pub fn apply_to_degree(
    w: &RadialWeight,
    f: &CoefficientSeries,
    degree: usize,
    table: &MomentTable,
) -> Result<CoefficientSeries> {
    let count = degree + 1;
    let fac = Factors::new(w, table, count)?;
    let out = (0..count)
        .into_par_iter()
        .map(|n| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..=n.min(f.degree()) {
                let c = f.coeff(k);
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (log, v) = fac.entry(n, k, 0.0);
                if log > OVERFLOW_LOG || !log.is_finite() {
                    return Err(Error::EntryOverflow {
                        n,
                        k,
                        log_magnitude: log,
                    });
                }
                acc += c * v;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoefficientSeries::new(out))
}

/// ĝ(n) = ω_n Σ_{k≤n} f̂(k) / (2(n-k+1) ω_{2(n-k)+1}) for n ≤ deg f.
pub fn apply(
    w: &RadialWeight,
    f: &CoefficientSeries,
    table: &MomentTable,
) -> Result<CoefficientSeries> {
    apply_to_degree(w, f, f.degree(), table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralConfig {
    pub rel_tol: f64,
    pub max_levels: u32,
    pub kernel: KernelConfig,
}

impl Default for IntegralConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_levels: 12,
            kernel: KernelConfig {
                tolerance: 1e-14,
                ..KernelConfig::default()
            },
        }
    }
}

/// C_ω f(z) = ∫₀¹ f(tz) K_t^ω(z) ω(t) dt by double-exponential quadrature in t.
pub fn apply_integral(
    w: &RadialWeight,
    f: &CoefficientSeries,
    z: Complex64,
    table: &MomentTable,
    cfg: &IntegralConfig,
) -> Result<QuadValue> {
    if !(z.norm() < 1.0) {
        return Err(Error::InvalidInput(format!(
            "z must lie in the open unit disc, got {z}"
        )));
    }
    // a truncation that is good at t = 1 is good for every t < 1
    let mut degree = cfg
        .kernel
        .start_degree
        .clamp(2, cfg.kernel.max_degree.max(2));
    let avg = loop {
        let s = crate::kernels::kernel_coeffs(w, degree, table)?;
        let avg = s.averaged_log_coeffs();
        let tb = tail_bound(&avg, z.norm());
        if tb <= cfg.kernel.tolerance {
            break avg;
        }
        if degree >= cfg.kernel.max_degree {
            return Err(Error::KernelTail {
                tail_bound: tb,
                tolerance: cfg.kernel.tolerance,
                degree,
            });
        }
        degree = (2 * degree).min(cfg.kernel.max_degree);
    };
    let expr = w.expression();
    unit_by_gap(
        &format!("integral form of C_ω f at z={z} for {}", w.label()),
        |t, v| {
            let k = eval_log_series(&avg, z * t).value;
            f.evaluate(z * t) * k * expr.ln_density_times_gap(v).exp()
        },
        cfg.rel_tol,
        cfg.max_levels,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionMeta {
    pub weight: String,
    pub weight_id: String,
    pub space: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub flushed: usize,
}

/// Lower-triangular N×N section of C_ω in the orthonormal basis zⁿ/√w_n,
/// stored row by row so that every leading block is a prefix.
#[derive(Debug, Clone)]
pub struct OperatorSection {
    weight_id: WeightId,
    weight_label: String,
    space: String,
    n: usize,
    packed: Vec<f64>,
    flushed: usize,
    pub sigma_max: Option<f64>,
}

fn tri(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Pairwise sum of a[i]·b[i].
fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() <= 32 {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let h = a.len() / 2;
    pairwise_dot(&a[..h], &b[..h]) + pairwise_dot(&a[h..], &b[h..])
}

const ROW_BLOCK: usize = 128;

impl OperatorSection {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn weight_id(&self) -> &WeightId {
        &self.weight_id
    }

    pub fn weight_label(&self) -> &str {
        &self.weight_label
    }

    pub fn space(&self) -> &str {
        &self.space
    }

    /// Number of entries flushed to zero.
    pub fn flushed(&self) -> usize {
        self.flushed
    }

    pub fn meta(&self) -> SectionMeta {
        SectionMeta {
            weight: self.weight_label.clone(),
            weight_id: self.weight_id.as_str().to_string(),
            space: self.space.clone(),
            n: self.n,
            flushed: self.flushed,
        }
    }

    /// M[n,k]; zero above the diagonal.
    pub fn get(&self, n: usize, k: usize) -> f64 {
        assert!(
            n < self.n && k < self.n,
            "index ({n}, {k}) outside {0}×{0}",
            self.n
        );
        if k > n {
            0.0
        } else {
            self.packed[tri(n) + k]
        }
    }

    /// Entries M[n, 0..=n].
    pub fn row(&self, n: usize) -> &[f64] {
        &self.packed[tri(n)..tri(n + 1)]
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|n| (0..self.n).map(|k| self.get(n, k)).collect())
            .collect()
    }

    /// The leading m×m block.
    pub fn leading_block(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.n {
            return Err(Error::InvalidInput(format!(
                "block size {m} outside 1..={}",
                self.n
            )));
        }
        let packed = self.packed[..tri(m)].to_vec();
        Ok(Self {
            weight_id: self.weight_id.clone(),
            weight_label: self.weight_label.clone(),
            space: self.space.clone(),
            n: m,
            flushed: packed.iter().filter(|v| **v == 0.0).count(),
            packed,
            sigma_max: None,
        })
    }

    /// M x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .into_par_iter()
            .map(|n| pairwise_dot(self.row(n), &x[..=n]))
            .collect()
    }

    /// Mᵀ y. Rows are grouped in fixed blocks and the block partial sums
    /// are combined pairwise, so the result does not depend on the thread count.
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n);
        let blocks: Vec<Vec<f64>> = (0..self.n.div_ceil(ROW_BLOCK))
            .into_par_iter()
            .map(|b| {
                let hi = ((b + 1) * ROW_BLOCK).min(self.n);
                let mut acc = vec![0.0; hi];
                for (n, &yn) in y.iter().enumerate().take(hi).skip(b * ROW_BLOCK) {
                    for (a, m) in acc.iter_mut().zip(self.row(n)) {
                        *a += m * yn;
                    }
                }
                acc
            })
            .collect();
        let mut out = combine(blocks);
        out.resize(self.n, 0.0);
        out
    }

    /// CSV `n,k,value` preceded by a `# {json}` metadata line.
    pub fn to_csv(&self) -> Result<String> {
        let mut s = String::new();
        writeln!(s, "# {}", serde_json::to_string(&self.meta())?).unwrap();
        s.push_str("n,k,value\n");
        for n in 0..self.n {
            for (k, v) in self.row(n).iter().enumerate() {
                writeln!(s, "{n},{k},{}", format_sci(*v)).unwrap();
            }
        }
        Ok(s)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_csv()?.as_bytes())
    }
}

fn combine(mut parts: Vec<Vec<f64>>) -> Vec<f64> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                if b.len() > a.len() {
                    a.resize(b.len(), 0.0);
                }
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// M[n,k] = ω_n / (2(n-k+1) ω_{2(n-k)+1}) · sqrt(w_n / w_k) for 0 ≤ k ≤ n < N.
pub fn matrix_section(
    w: &RadialWeight,
    space: &SpaceSpec,
    n: usize,
    table: &MomentTable,
) -> Result<OperatorSection> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "section dimension must be at least 1".into(),
        ));
    }
    if !space.is_admissible_domain() {
        return Err(Error::InvalidInput(format!(
            "{} is not an admissible domain for C_ω",
            space.descriptor()
        )));
    }
    let fac = Factors::new(w, table, n)?;
    let lw = space.log_coeff_weights(n)?;
    let rows = (0..n)
        .into_par_iter()
        .map(|r| {
            let mut row = Vec::with_capacity(r + 1);
            let mut flushed = 0usize;
            for k in 0..=r {
                let (log, v) = fac.entry(r, k, 0.5 * (lw[r] - lw[k]));
                if log > OVERFLOW_LOG || log.is_nan() {
                    return Err(Error::EntryOverflow {
                        n: r,
                        k,
                        log_magnitude: log,
                    });
                }
                if log < FLUSH_LOG {
                    flushed += 1;
                    row.push(0.0);
                } else {
                    row.push(v);
                }
            }
            Ok((row, flushed))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut packed = Vec::with_capacity(tri(n));
    let mut flushed = 0;
    for (row, f) in rows {
        packed.extend(row);
        flushed += f;
    }
    Ok(OperatorSection {
        weight_id: w.id().clone(),
        weight_label: w.label().to_string(),
        space: space.descriptor(),
        n,
        packed,
        flushed,
        sigma_max: None,
    })
}
