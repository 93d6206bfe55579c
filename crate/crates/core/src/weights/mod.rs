//! Radial weights on [0, 1), their moments and tails, and numerical
//! profiling of the doubling classes D̂, Ď, M and D.
//!
//! Internally a weight is evaluated in the variable v = -ln(1 - r), which
//! keeps the distance to the boundary accurate down to the smallest
//! representable gaps.

mod classes;
mod dsl;
mod moments;

use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

pub(crate) use classes::ls_slope;
pub use classes::{
    classify, dcheck_profile, dhat_profile, m_profile, moment_tail_band, ClassConfig, ClassReport,
    ClassVerdict, Diagnosis, Profile,
};
pub use dsl::parse_weight;
pub use moments::{
    format_sci, moment, tail, tail_at_gap, tail_by_quadrature, MomentEntry, MomentTable, TailValue,
};

use crate::error::{Error, Result};

/// Parsed weight expression.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightExpr {
    One,
    /// (1 - r)^α
    Pow(f64),
    /// (1 - r²)^α
    Pow2(f64),
    /// exp(-c / (1 - r)^β)
    Exp {
        c: f64,
        beta: f64,
    },
    /// (1 - r)^{-1} (log(e / (1 - r)))^{-p}
    LogInv(f64),
    Scale(Box<WeightExpr>, f64),
    Sum(Box<WeightExpr>, Box<WeightExpr>),
}

/// Behaviour of a weight at r = 1.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SupportHint {
    /// ω(r) ≈ (1 - r)^exponent as r → 1, ignoring logarithmic factors.
    pub exponent_at_one: f64,
    /// ω vanishes faster than any power of (1 - r).
    pub essential_decay: bool,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl WeightExpr {
    /// ln ω at the point with 1 - r = e^{-v}.
    pub fn ln_density(&self, v: f64) -> f64 {
        match self {
            WeightExpr::One => 0.0,
            WeightExpr::Pow(a) => {
                if *a == 0.0 {
                    0.0
                } else {
                    -a * v
                }
            }
            WeightExpr::Pow2(a) => {
                if *a == 0.0 {
                    return 0.0;
                }
                // 1 - r² = (1 - r)(1 + r)
                let r = -(-v).exp_m1();
                a * (-v + r.ln_1p())
            }
            WeightExpr::Exp { c, beta } => -c * (beta * v).exp(),
            WeightExpr::LogInv(p) => v - p * v.ln_1p(),
            WeightExpr::Scale(inner, s) => s.ln() + inner.ln_density(v),
            WeightExpr::Sum(a, b) => log_add_exp(a.ln_density(v), b.ln_density(v)),
        }
    }

    /// ln(ω(r) (1 - r)) at 1 - r = e^{-v}, the integrand of moments and
    /// tails in the variable v. Evaluated without cancellation for large v.
    pub fn ln_density_times_gap(&self, v: f64) -> f64 {
        match self {
            WeightExpr::LogInv(p) => -p * v.ln_1p(),
            WeightExpr::Scale(inner, s) => s.ln() + inner.ln_density_times_gap(v),
            WeightExpr::Sum(a, b) => {
                log_add_exp(a.ln_density_times_gap(v), b.ln_density_times_gap(v))
            }
            _ => self.ln_density(v) - v,
        }
    }

    /// ln ω_x when an elementary closed form exists.
    pub fn closed_form_log_moment(&self, x: f64) -> Option<f64> {
        use crate::special::ln_beta;
        match self {
            WeightExpr::One | WeightExpr::Pow(0.0) | WeightExpr::Pow2(0.0) => Some(-(x + 1.0).ln()),
            WeightExpr::Pow(a) => Some(ln_beta(x + 1.0, a + 1.0)),
            // ∫ r^x (1-r²)^α dr = B((x+1)/2, α+1) / 2
            WeightExpr::Pow2(a) => Some(ln_beta(0.5 * (x + 1.0), a + 1.0) - std::f64::consts::LN_2),
            WeightExpr::Exp { .. } | WeightExpr::LogInv(_) => None,
            WeightExpr::Scale(inner, s) => inner.closed_form_log_moment(x).map(|m| m + s.ln()),
            WeightExpr::Sum(a, b) => Some(log_add_exp(
                a.closed_form_log_moment(x)?,
                b.closed_form_log_moment(x)?,
            )),
        }
    }

    /// ω_x as a plain quotient for weights that are constant, so that
    /// rational moments come out correctly rounded.
    pub fn exact_moment(&self, x: f64) -> Option<f64> {
        match self {
            WeightExpr::One | WeightExpr::Pow(0.0) | WeightExpr::Pow2(0.0) => Some(1.0 / (x + 1.0)),
            WeightExpr::Scale(inner, s) => inner.exact_moment(x).map(|m| m * s),
            _ => None,
        }
    }

    /// ln ω̂ at the point with 1 - r = gap, when an elementary closed form exists.
    pub fn closed_form_log_tail(&self, ln_gap: f64) -> Option<f64> {
        match self {
            WeightExpr::One => Some(ln_gap),
            WeightExpr::Pow(a) => Some((a + 1.0) * ln_gap - (a + 1.0).ln()),
            WeightExpr::Pow2(_) | WeightExpr::Exp { .. } | WeightExpr::LogInv(_) => None,
            WeightExpr::Scale(inner, s) => inner.closed_form_log_tail(ln_gap).map(|t| t + s.ln()),
            WeightExpr::Sum(a, b) => Some(log_add_exp(
                a.closed_form_log_tail(ln_gap)?,
                b.closed_form_log_tail(ln_gap)?,
            )),
        }
    }

    pub fn support_hint(&self) -> SupportHint {
        match self {
            WeightExpr::One => SupportHint {
                exponent_at_one: 0.0,
                essential_decay: false,
            },
            WeightExpr::Pow(a) | WeightExpr::Pow2(a) => SupportHint {
                exponent_at_one: *a,
                essential_decay: false,
            },
            WeightExpr::Exp { .. } => SupportHint {
                exponent_at_one: f64::INFINITY,
                essential_decay: true,
            },
            WeightExpr::LogInv(_) => SupportHint {
                exponent_at_one: -1.0,
                essential_decay: false,
            },
            WeightExpr::Scale(inner, _) => inner.support_hint(),
            WeightExpr::Sum(a, b) => {
                let (ha, hb) = (a.support_hint(), b.support_hint());
                SupportHint {
                    exponent_at_one: ha.exponent_at_one.min(hb.exponent_at_one),
                    essential_decay: ha.essential_decay && hb.essential_decay,
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ParameterOutOfRange(msg));
        match self {
            WeightExpr::One => Ok(()),
            WeightExpr::Pow(a) if !(a.is_finite() && *a > -1.0) => {
                bad(format!("pow({a}) needs α > -1"))
            }
            WeightExpr::Pow2(a) if !(a.is_finite() && *a > -1.0) => {
                bad(format!("pow2({a}) needs α > -1"))
            }
            WeightExpr::Pow(_) | WeightExpr::Pow2(_) => Ok(()),
            WeightExpr::Exp { c, beta } => {
                if !(c.is_finite() && *c > 0.0) {
                    bad(format!("exp({c},{beta}) needs c > 0"))
                } else if !(beta.is_finite() && *beta > 0.0) {
                    bad(format!("exp({c},{beta}) needs β > 0"))
                } else {
                    Ok(())
                }
            }
            WeightExpr::LogInv(p) if !(p.is_finite() && *p > 1.0) => {
                bad(format!("loginv({p}) needs p > 1"))
            }
            WeightExpr::LogInv(_) => Ok(()),
            // a non-positive factor would make the tail vanish
            WeightExpr::Scale(inner, s) => {
                if !(s.is_finite() && *s > 0.0) {
                    bad(format!("scale factor {s} must be positive"))
                } else {
                    inner.validate()
                }
            }
            WeightExpr::Sum(a, b) => {
                a.validate()?;
                b.validate()
            }
        }
    }
}

impl fmt::Display for WeightExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightExpr::One => write!(f, "one"),
            WeightExpr::Pow(a) => write!(f, "pow({a})"),
            WeightExpr::Pow2(a) => write!(f, "pow2({a})"),
            WeightExpr::Exp { c, beta } => write!(f, "exp({c},{beta})"),
            WeightExpr::LogInv(p) => write!(f, "loginv({p})"),
            WeightExpr::Scale(inner, s) => write!(f, "scale({inner},{s})"),
            WeightExpr::Sum(a, b) => write!(f, "sum({a},{b})"),
        }
    }
}

/// Content hash of a canonical weight label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightId(String);

impl WeightId {
    pub fn from_label(label: &str) -> Self {
        let digest = Sha256::digest(label.as_bytes());
        let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        WeightId(hex)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for WeightId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A validated radial weight. Cheap to clone.
#[derive(Debug, Clone)]
pub struct RadialWeight {
    expr: Arc<WeightExpr>,
    label: Arc<str>,
    id: WeightId,
}

impl PartialEq for RadialWeight {
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr
    }
}

impl RadialWeight {
    pub fn new(expr: WeightExpr) -> Result<Self> {
        expr.validate()?;
        let label = expr.to_string();
        let id = WeightId::from_label(&label);
        Ok(Self {
            expr: Arc::new(expr),
            label: label.into(),
            id,
        })
    }

    pub fn one() -> Self {
        Self::new(WeightExpr::One).unwrap()
    }

    pub fn pow(alpha: f64) -> Result<Self> {
        Self::new(WeightExpr::Pow(alpha))
    }

    pub fn pow2(alpha: f64) -> Result<Self> {
        Self::new(WeightExpr::Pow2(alpha))
    }

    pub fn exp(c: f64, beta: f64) -> Result<Self> {
        Self::new(WeightExpr::Exp { c, beta })
    }

    pub fn loginv(p: f64) -> Result<Self> {
        Self::new(WeightExpr::LogInv(p))
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        Self::new(WeightExpr::Scale(Box::new((*self.expr).clone()), s))
    }

    pub fn sum(&self, other: &RadialWeight) -> Result<Self> {
        Self::new(WeightExpr::Sum(
            Box::new((*self.expr).clone()),
            Box::new((*other.expr).clone()),
        ))
    }

    pub fn expression(&self) -> &WeightExpr {
        &self.expr
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn id(&self) -> &WeightId {
        &self.id
    }

    pub fn support_hint(&self) -> SupportHint {
        self.expr.support_hint()
    }

    pub fn has_closed_form_moment(&self) -> bool {
        self.expr.closed_form_log_moment(1.0).is_some()
    }

    /// ω(r) for 0 ≤ r < 1.
    pub fn evaluate(&self, r: f64) -> f64 {
        self.ln_density_at_gap(1.0 - r).exp()
    }

    /// ln ω(r) where `gap` = 1 - r is supplied directly.
    pub fn ln_density_at_gap(&self, gap: f64) -> f64 {
        self.expr.ln_density(-gap.ln())
    }

    /// ln ω at the point with 1 - r = e^{-v}.
    pub fn ln_density(&self, v: f64) -> f64 {
        self.expr.ln_density(v)
    }
}

impl fmt::Display for RadialWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl std::str::FromStr for RadialWeight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_weight(s)
    }
}

/// Weights exercised by the experiments and the acceptance suite.
pub fn roster() -> Vec<RadialWeight> {
    [
        "one",
        "pow(0.5)",
        "pow(1)",
        "pow(2)",
        "pow2(1)",
        "exp(1,1)",
        "loginv(2)",
    ]
    .iter()
    .map(|s| parse_weight(s).expect("roster weights parse"))
    .collect()
}
