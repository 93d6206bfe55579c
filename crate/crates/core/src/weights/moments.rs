use std::collections::BTreeMap;
use std::path::Path;
use std::sync::RwLock;

use rayon::prelude::*;

use super::{RadialWeight, WeightExpr, WeightId};
use crate::error::{Error, Result};
use crate::quadrature::{log_integrate_line, QuadratureConfig};

/// One cached moment: ln ω_x and a bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEntry {
    pub log_value: f64,
    pub abs_log_err: f64,
    pub closed_form: bool,
}

impl MomentEntry {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

fn closed_form_err(log_value: f64) -> f64 {
    16.0 * f64::EPSILON * (1.0 + log_value.abs())
}

/// ln ω_x by quadrature in the variable y with 1 - r = exp(-e^y).
fn quadrature_log_moment(expr: &WeightExpr, x: f64, cfg: &QuadratureConfig) -> Result<MomentEntry> {
    let g = |y: f64| {
        let v = y.exp();
        let ln_r_term = if x == 0.0 {
            0.0
        } else {
            x * (-(-v).exp_m1()).ln()
        };
        ln_r_term + expr.ln_density_times_gap(v) + y
    };
    let q = log_integrate_line(&format!("moment x={x} of {expr}"), g, cfg)?;
    Ok(MomentEntry {
        log_value: q.log_value,
        abs_log_err: q.abs_log_err,
        closed_form: false,
    })
}

/// Cache of log-moments of one weight.
///
/// Readers may run concurrently; inserts are serialized and the first value
/// stored for an exponent wins, so parallel sweeps never observe two
/// different values for the same key.
#[derive(Debug)]
pub struct MomentTable {
    weight: RadialWeight,
    config: QuadratureConfig,
    use_closed_forms: bool,
    entries: RwLock<BTreeMap<u64, MomentEntry>>,
}

impl MomentTable {
    pub fn new(weight: &RadialWeight) -> Self {
        Self::with_config(weight, QuadratureConfig::default())
    }

    pub fn with_config(weight: &RadialWeight, config: QuadratureConfig) -> Self {
        Self {
            weight: weight.clone(),
            config,
            use_closed_forms: true,
            entries: RwLock::new(BTreeMap::new()),
        }
    }

    /// A table that ignores closed forms and always integrates numerically.
    pub fn quadrature_only(weight: &RadialWeight, config: QuadratureConfig) -> Self {
        Self {
            use_closed_forms: false,
            ..Self::with_config(weight, config)
        }
    }

    pub fn weight(&self) -> &RadialWeight {
        &self.weight
    }

    pub fn weight_id(&self) -> &WeightId {
        self.weight.id()
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(x: f64) -> Result<u64> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "moment exponent must be finite and >= 0, got {x}"
            )));
        }
        // +0.0 and -0.0 share a key; nonnegative floats order like their bits
        Ok((x + 0.0).to_bits())
    }

    fn compute(&self, x: f64) -> Result<MomentEntry> {
        let expr = self.weight.expression();
        if self.use_closed_forms {
            if let Some(lv) = expr.closed_form_log_moment(x) {
                return Ok(MomentEntry {
                    log_value: lv,
                    abs_log_err: closed_form_err(lv),
                    closed_form: true,
                });
            }
        }
        quadrature_log_moment(expr, x, &self.config)
    }

    pub fn entry(&self, x: f64) -> Result<MomentEntry> {
        let key = Self::key(x)?;
        if let Some(e) = self.entries.read().unwrap().get(&key) {
            return Ok(*e);
        }
        let e = self.compute(x)?;
        Ok(*self.entries.write().unwrap().entry(key).or_insert(e))
    }

    /// ln ω_x.
    pub fn log_moment(&self, x: f64) -> Result<f64> {
        self.entry(x).map(|e| e.log_value)
    }

    /// ω_x itself; exact quotient for constant weights.
    pub fn moment_value(&self, x: f64) -> Result<f64> {
        if self.use_closed_forms {
            if let Some(v) = self.weight.expression().exact_moment(x) {
                Self::key(x)?;
                return Ok(v);
            }
        }
        Ok(self.log_moment(x)?.exp())
    }

    /// Resolves all listed exponents, computing missing ones in parallel.
    pub fn prefetch(&self, xs: &[f64]) -> Result<()> {
        let missing: Vec<f64> = {
            let guard = self.entries.read().unwrap();
            let mut v = Vec::new();
            for &x in xs {
                if !guard.contains_key(&Self::key(x)?) {
                    v.push(x);
                }
            }
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup();
            v
        };
        let computed: Vec<(f64, MomentEntry)> = missing
            .par_iter()
            .map(|&x| self.compute(x).map(|e| (x, e)))
            .collect::<Result<_>>()?;
        let mut guard = self.entries.write().unwrap();
        for (x, e) in computed {
            guard.entry(Self::key(x)?).or_insert(e);
        }
        Ok(())
    }

    /// ln ω_n for n = 0..=n_max.
    pub fn log_moments_upto(&self, n_max: usize) -> Result<Vec<f64>> {
        let xs: Vec<f64> = (0..=n_max).map(|n| n as f64).collect();
        self.prefetch(&xs)?;
        let guard = self.entries.read().unwrap();
        Ok(xs
            .iter()
            .map(|x| guard[&Self::key(*x).unwrap()].log_value)
            .collect())
    }

    /// Snapshot of all cached entries, ordered by exponent.
    pub fn entries(&self) -> Vec<(f64, MomentEntry)> {
        self.entries
            .read()
            .unwrap()
            .iter()
            .map(|(k, e)| (f64::from_bits(*k), *e))
            .collect()
    }

    /// Loads cached rows belonging to this weight from a moment cache file.
    /// A missing file is not an error. Returns the number of rows loaded.
    pub fn load_csv(&self, path: &Path) -> Result<usize> {
        if !path.exists() {
            return Ok(0);
        }
        let mut rdr = csv::Reader::from_path(path)?;
        let mut loaded = 0;
        let mut guard = self.entries.write().unwrap();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(Error::InvalidInput(format!(
                    "moment cache row has {} fields",
                    rec.len()
                )));
            }
            if rec[0] != *self.weight_id().as_str() {
                continue;
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad float '{s}' in moment cache")))
            };
            let x = parse(&rec[1])?;
            let entry = MomentEntry {
                log_value: parse(&rec[2])?,
                abs_log_err: parse(&rec[3])?,
                closed_form: false,
            };
            guard.entry(Self::key(x)?).or_insert(entry);
            loaded += 1;
        }
        Ok(loaded)
    }

    /// Merges this table into a moment cache file, keeping other weights'
    /// rows. The file is replaced atomically.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut rows: BTreeMap<(String, u64), (f64, f64)> = BTreeMap::new();
        if path.exists() {
            let mut rdr = csv::Reader::from_path(path)?;
            for rec in rdr.records() {
                let rec = rec?;
                if rec.len() != 4 || rec[0] == *self.weight_id().as_str() {
                    continue;
                }
                let (Ok(x), Ok(lv), Ok(err)) = (
                    rec[1].parse::<f64>(),
                    rec[2].parse::<f64>(),
                    rec[3].parse::<f64>(),
                ) else {
                    continue;
                };
                rows.insert((rec[0].to_string(), x.to_bits()), (lv, err));
            }
        }
        for (x, e) in self.entries() {
            rows.insert(
                (self.weight_id().as_str().to_string(), x.to_bits()),
                (e.log_value, e.abs_log_err),
            );
        }
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["weight_id", "x", "log_value", "abs_log_err"])?;
            for ((id, xb), (lv, err)) in &rows {
                w.write_record([
                    id.clone(),
                    format_sci(f64::from_bits(*xb)),
                    format_sci(*lv),
                    format_sci(*err),
                ])?;
            }
            w.flush()?;
        }
        crate::io::write_atomic(path, &buf)
    }
}

/// Scientific notation with 17 significant digits (round-trip exact).
pub fn format_sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// ln ω_x read through `table`, which must belong to `w`.
pub fn moment(w: &RadialWeight, x: f64, table: &MomentTable) -> Result<f64> {
    if w.id() != table.weight_id() {
        return Err(Error::WeightMismatch {
            expected: table.weight_id().to_string(),
            found: w.id().to_string(),
        });
    }
    table.log_moment(x)
}

/// ln ω̂(r) with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailValue {
    pub log_value: f64,
    pub abs_log_err: f64,
}

impl TailValue {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// ω̂(r) = ∫_r^1 ω(s) ds for 0 ≤ r < 1.
pub fn tail(w: &RadialWeight, r: f64, cfg: &QuadratureConfig) -> Result<TailValue> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidInput(format!(
            "tail needs 0 <= r < 1, got {r}"
        )));
    }
    tail_at_gap(w, 1.0 - r, cfg)
}

/// ω̂ at the point with 1 - r = gap, for 0 < gap ≤ 1.
pub fn tail_at_gap(w: &RadialWeight, gap: f64, cfg: &QuadratureConfig) -> Result<TailValue> {
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "tail needs 0 < 1-r <= 1, got {gap}"
        )));
    }
    if let Some(lv) = w.expression().closed_form_log_tail(gap.ln()) {
        return Ok(TailValue {
            log_value: lv,
            abs_log_err: closed_form_err(lv),
        });
    }
    tail_by_quadrature(w, gap, cfg)
}

/// ω̂ by quadrature even when a closed form exists.
pub fn tail_by_quadrature(w: &RadialWeight, gap: f64, cfg: &QuadratureConfig) -> Result<TailValue> {
    let expr = w.expression();
    let v_r = -gap.ln();
    // s = 1 - exp(-(v_r + e^y)), ds = e^{-v} dv, dv = e^y dy
    let g = |y: f64| {
        let v = v_r + y.exp();
        expr.ln_density_times_gap(v) + y
    };
    let q = log_integrate_line(&format!("tail at 1-r={gap} of {w}"), g, cfg)?;
    Ok(TailValue {
        log_value: q.log_value,
        abs_log_err: q.abs_log_err,
    })
}
