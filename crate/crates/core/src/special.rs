//! Log-gamma, log-beta and gamma ratios.
//!
//! All routines work in log space. Large arguments use the Stirling series;
//! small ones are shifted upward with the recurrence Γ(x+1) = xΓ(x).

use std::f64::consts::PI;

const SHIFT_TO: f64 = 10.0;

// B_{2k} / (2k (2k-1)) for k = 1..8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

fn stirling_series(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in STIRLING.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// Shifts `x` up to at least `SHIFT_TO`, returning the shifted argument and
/// ln(x (x+1) ... (x+m-1)).
fn shift_up(x: f64) -> (f64, f64) {
    let mut z = x;
    let mut prod = 1.0;
    let mut log_acc = 0.0;
    while z < SHIFT_TO {
        prod *= z;
        if !(1e-280..=1e280).contains(&prod) {
            log_acc += prod.ln();
            prod = 1.0;
        }
        z += 1.0;
    }
    (z, log_acc + prod.ln())
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma requires a positive argument, got {x}");
    let (z, log_prod) = shift_up(x);
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + stirling_series(z) - log_prod
}

/// ln Γ(a) − ln Γ(b) for a, b > 0, without cancellation when a ≈ b are large.
pub fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    assert!(
        a > 0.0 && b > 0.0,
        "ln_gamma_ratio requires positive arguments"
    );
    if a == b {
        return 0.0;
    }
    let (za, la) = shift_up(a);
    let (zb, lb) = shift_up(b);
    // (za-1/2) ln za - (zb-1/2) ln zb - za + zb
    //   = (za-1/2) ln(za/zb) + (za-zb)(ln zb - 1)
    let d = za - zb;
    let core = (za - 0.5) * (d / zb).ln_1p() + d * (zb.ln() - 1.0);
    core + stirling_series(za) - stirling_series(zb) - la + lb
}

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a+b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (big, small) = if a >= b { (a, b) } else { (b, a) };
    ln_gamma(small) + ln_gamma_ratio(big, big + small)
}
