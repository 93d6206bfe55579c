//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cesaro_core::analysis::{
    boundedness_scan, compactness_probe, dirichlet_divergence, section_norm, PowerConfig,
    ProbeConfig, ScanConfig, ScanVerdict,
};
use cesaro_core::cesaro::{apply, apply_integral, apply_to_degree, matrix_section, IntegralConfig};
use cesaro_core::kernels::kernel_coeffs;
use cesaro_core::quadrature::QuadratureConfig;
use cesaro_core::spaces::{norm_sq, CoefficientSeries, SpaceSpec};
use cesaro_core::weights::{
    classify, parse_weight, roster, ClassConfig, ClassVerdict, MomentTable, RadialWeight,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_series(rng: &mut ChaCha8Rng, degree: usize) -> CoefficientSeries {
    CoefficientSeries::new(
        (0..=degree)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    )
}

fn criterion_1() -> Outcome {
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = RadialWeight::one();
    let table = MomentTable::new(&w);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let f = random_series(&mut rng, 64);
        let g = apply(&w, &f, &table).map_err(|e| e.to_string())?;
        let mut running = c(0.0, 0.0);
        for n in 0..=64 {
            running += f.coeff(n);
            worst = worst.max((g.coeff(n) - running / (n + 1) as f64).norm());
        }
    }
    ensure(worst <= TOL, || {
        format!("max deviation {worst:.3e} > {TOL:e}")
    })?;
    Ok(format!(
        "100 vectors of degree 64, max deviation {worst:.2e} (tol {TOL:e})"
    ))
}

fn criterion_2() -> Outcome {
    const TOL: f64 = 1e-10;
    let w = RadialWeight::one();
    let table = MomentTable::new(&w);
    let g = apply_to_degree(&w, &CoefficientSeries::from_real(&[1.0]), 60, &table)
        .map_err(|e| e.to_string())?;
    for n in 0..=60 {
        let expect = 1.0 / (n + 1) as f64;
        ensure(g.coeff(n) == c(expect, 0.0), || {
            format!("coefficient {n} = {} != {expect}", g.coeff(n))
        })?;
    }
    let v = g.evaluate(c(0.5, 0.0));
    let dev = (v - c(2.0 * 2f64.ln(), 0.0)).norm();
    ensure(dev <= TOL, || format!("|g(0.5) - 2 log 2| = {dev:.3e}"))?;
    Ok(format!(
        "coefficients equal 1/(n+1) bit for bit, |g(0.5) - 2 log 2| = {dev:.2e} (tol {TOL:e})"
    ))
}

fn criterion_3() -> Outcome {
    const TOL: f64 = 1e-9;
    let mut worst = 0.0f64;
    for alpha in [0.0, 1.0, 2.5] {
        let w = RadialWeight::pow2(alpha).map_err(|e| e.to_string())?;
        let table = MomentTable::quadrature_only(&w, QuadratureConfig::default());
        let s = kernel_coeffs(&w, 512, &table).map_err(|e| e.to_string())?;
        // (α+1)Γ(n+2+α)/(Γ(2+α)n!) by its ratio recurrence
        let mut expect = alpha + 1.0;
        for n in 0..=512usize {
            let rel = (s.coeff(n) / expect - 1.0).abs();
            worst = worst.max(rel);
            ensure(rel <= TOL, || {
                format!("pow2({alpha}) n={n}: relative error {rel:.3e}")
            })?;
            expect *= (n as f64 + 2.0 + alpha) / (n as f64 + 1.0);
        }
    }
    Ok(format!("α ∈ {{0, 1, 2.5}}, n ≤ 512, quadrature moments, max relative error {worst:.2e} (tol {TOL:e})"))
}

fn criterion_4() -> Outcome {
    const TOL: f64 = 1e-8;
    let f = CoefficientSeries::from_real(&(0..=64).map(|n| 0.3f64.powi(n)).collect::<Vec<_>>());
    let mut worst = 0.0f64;
    for label in ["one", "pow(0.5)", "pow(2)", "pow2(1)"] {
        let w = parse_weight(label).map_err(|e| e.to_string())?;
        let table = MomentTable::new(&w);
        let g = apply(&w, &f, &table).map_err(|e| e.to_string())?;
        for x in [0.1, 0.3, 0.5, 0.6, 0.7] {
            let z = c(x, 0.0);
            let q = apply_integral(&w, &f, z, &table, &IntegralConfig::default())
                .map_err(|e| e.to_string())?;
            let dev = (q.value - g.evaluate(z)).norm();
            worst = worst.max(dev);
            ensure(dev <= TOL, || {
                format!("{label} at z={x}: deviation {dev:.3e}")
            })?;
        }
    }
    Ok(format!(
        "4 weights × 5 points, max |integral - coefficient| {worst:.2e} (tol {TOL:e})"
    ))
}

fn criterion_5() -> Outcome {
    const TOL2: f64 = 1e-9;
    let w = RadialWeight::one();
    let table = MomentTable::new(&w);
    let h1 = SpaceSpec::hgamma(1.0).map_err(|e| e.to_string())?;
    let cfg = PowerConfig::default();
    let s2 = section_norm(
        &matrix_section(&w, &h1, 2, &table).map_err(|e| e.to_string())?,
        &cfg,
    );
    let exact2 = ((3.0 + 5f64.sqrt()) / 4.0).sqrt();
    ensure((s2.sigma - exact2).abs() <= TOL2, || {
        format!("σ(2) = {} vs {exact2}", s2.sigma)
    })?;
    let big = matrix_section(&w, &h1, 4096, &table).map_err(|e| e.to_string())?;
    let mut sigmas = Vec::new();
    for n in [64, 256, 1024, 4096] {
        let r = section_norm(&big.leading_block(n).map_err(|e| e.to_string())?, &cfg);
        ensure(r.converged, || {
            format!("power iteration did not converge at N={n}")
        })?;
        sigmas.push(r.sigma);
    }
    ensure(sigmas.windows(2).all(|p| p[1] > p[0]), || {
        format!("not increasing: {sigmas:?}")
    })?;
    ensure(sigmas.iter().all(|s| *s < 2.0), || {
        format!("σ ≥ 2: {sigmas:?}")
    })?;
    ensure(sigmas[3] > 1.75, || {
        format!("σ(4096) = {} ≤ 1.75", sigmas[3])
    })?;
    Ok(format!(
        "σ(2) = {:.10}, σ(64..4096) = {:.5?} increasing, < 2, σ(4096) > 1.75",
        s2.sigma, sigmas
    ))
}

fn criterion_6() -> Outcome {
    let cfg = ScanConfig::default();
    let grid: Vec<usize> = (6..=12).map(|j| 1 << j).collect();
    let mut lines = Vec::new();
    let scan = |wl: &str, space: SpaceSpec, ns: &[usize]| {
        let w = parse_weight(wl).map_err(|e| e.to_string())?;
        let table = MomentTable::new(&w);
        boundedness_scan(&w, &space, ns, &table, &cfg).map_err(|e| e.to_string())
    };
    for wl in ["pow(0)", "pow(1)"] {
        for gamma in [0.5, 1.0, 2.0] {
            let r = scan(
                wl,
                SpaceSpec::hgamma(gamma).map_err(|e| e.to_string())?,
                &grid,
            )?;
            ensure(r.verdict == ScanVerdict::BoundedLooking, || {
                format!(
                    "{wl} on hgamma:{gamma}: {:?}, sigmas {:?}",
                    r.verdict, r.sigmas
                )
            })?;
            lines.push(format!("{wl}/H_{gamma} ratio {:.4}", r.tail_ratio));
        }
    }
    let bergman = SpaceSpec::bergman(&RadialWeight::pow(0.5).map_err(|e| e.to_string())?);
    let r = scan("pow(1)", bergman, &grid[..6])?;
    ensure(r.verdict == ScanVerdict::BoundedLooking, || {
        format!(
            "pow(1) on bergman:pow(0.5): {:?}, sigmas {:?}",
            r.verdict, r.sigmas
        )
    })?;
    lines.push(format!("pow(1)/A²_pow(0.5) ratio {:.4}", r.tail_ratio));
    let r = scan(
        "exp(1,1)",
        SpaceSpec::hgamma(1.0).map_err(|e| e.to_string())?,
        &grid,
    )?;
    ensure(r.verdict == ScanVerdict::UnboundedLooking, || {
        format!("exp(1,1): {:?}", r.verdict)
    })?;
    let growth = r.sigmas[6] / r.sigmas[3];
    ensure(growth >= 2.0, || format!("σ(4096)/σ(512) = {growth}"))?;
    lines.push(format!(
        "exp(1,1)/H_1 unbounded, σ(4096)/σ(512) = {growth:.3e}"
    ));
    Ok(lines.join("; "))
}

fn criterion_7() -> Outcome {
    let mut l_last = 0.0;
    let mut min_ratio = f64::INFINITY;
    for w in roster() {
        let table = MomentTable::new(&w);
        let curve = dirichlet_divergence(&w, 10_000, &table).map_err(|e| e.to_string())?;
        for (n, (s, l)) in curve.s.iter().zip(&curve.l).enumerate() {
            ensure(s >= l, || {
                format!("{}: S({n}) = {s} < L({n}) = {l}", w.label())
            })?;
        }
        min_ratio = min_ratio.min(curve.min_ratio);
        l_last = curve.l[10_000];
    }
    ensure(l_last > 2.3, || format!("L(10^4) = {l_last}"))?;
    Ok(format!(
        "S(N) ≥ L(N) for N ≤ 10^4 on the roster (min S/L = {min_ratio:.4}), L(10^4) = {l_last:.4}"
    ))
}

fn criterion_8() -> Outcome {
    const NORM_TOL: f64 = 1e-6;
    const FLOOR: f64 = 0.1;
    let mut parts = Vec::new();
    for (wl, space) in [
        ("one", SpaceSpec::hgamma(1.0).map_err(|e| e.to_string())?),
        (
            "pow(1)",
            SpaceSpec::bergman(&RadialWeight::pow(1.0).map_err(|e| e.to_string())?),
        ),
    ] {
        let w = parse_weight(wl).map_err(|e| e.to_string())?;
        let table = MomentTable::new(&w);
        let p = compactness_probe(
            &w,
            &space,
            &[0.9, 0.99, 0.999],
            &ProbeConfig::default(),
            &table,
        )
        .map_err(|e| e.to_string())?;
        for (a, nf) in p.a.iter().zip(&p.f_norm) {
            ensure((nf - 1.0).abs() <= NORM_TOL, || {
                format!("{wl}: ‖f_a‖ = {nf} at a = {a}")
            })?;
        }
        ensure(p.min_ratio >= FLOOR, || {
            format!("{wl}: min ratio {}", p.min_ratio)
        })?;
        parts.push(format!("{wl} on {}: ratios {:.4?}", p.space, p.ratio));
    }
    Ok(parts.join("; "))
}

fn criterion_9() -> Outcome {
    let cfg = ClassConfig::default();
    let mut parts = Vec::new();
    for wl in [
        "one",
        "pow(0.5)",
        "pow(1)",
        "pow(2)",
        "pow2(1)",
        "exp(1,1)",
        "loginv(2)",
    ] {
        let w = parse_weight(wl).map_err(|e| e.to_string())?;
        let table = MomentTable::new(&w);
        let r = classify(&w, &cfg, &table).map_err(|e| e.to_string())?;
        let ok = match wl {
            "exp(1,1)" => r.in_dhat.verdict == ClassVerdict::No,
            "loginv(2)" => {
                r.in_dhat.verdict == ClassVerdict::Yes && r.in_m.verdict == ClassVerdict::No
            }
            _ => r.in_d == ClassVerdict::Yes,
        };
        ensure(ok, || {
            format!(
                "{wl}: dhat {:?} m {:?} dcheck {:?} d {:?}",
                r.in_dhat.verdict, r.in_m.verdict, r.in_dcheck.verdict, r.in_d
            )
        })?;
        parts.push(format!("{wl}: d={:?}", r.in_d).to_lowercase());
    }
    Ok(parts.join(", "))
}

fn random_weight(rng: &mut ChaCha8Rng) -> RadialWeight {
    let atom = |rng: &mut ChaCha8Rng| match rng.gen_range(0..5) {
        0 => RadialWeight::one(),
        1 => RadialWeight::pow(rng.gen_range(-0.9..4.0)).unwrap(),
        2 => RadialWeight::pow2(rng.gen_range(-0.9..4.0)).unwrap(),
        3 => RadialWeight::exp(rng.gen_range(0.1..3.0), rng.gen_range(0.2..2.0)).unwrap(),
        _ => RadialWeight::loginv(rng.gen_range(1.1..4.0)).unwrap(),
    };
    match rng.gen_range(0..6) {
        0 => atom(rng).scale(rng.gen_range(0.01..100.0)).unwrap(),
        1 => atom(rng).sum(&atom(rng)).unwrap(),
        _ => atom(rng),
    }
}

fn random_space(rng: &mut ChaCha8Rng) -> SpaceSpec {
    if rng.gen_bool(0.5) {
        SpaceSpec::hgamma(rng.gen_range(0.1..3.0)).unwrap()
    } else {
        SpaceSpec::bergman(&RadialWeight::pow(rng.gen_range(-0.5..3.0)).unwrap())
    }
}

fn criterion_10() -> Outcome {
    const TRIALS: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    // moment monotonicity: log ω_x ≥ log ω_y - 2(err_x + err_y) for x < y
    let mut mono = 0;
    for _ in 0..TRIALS {
        let w = random_weight(&mut rng);
        let table = MomentTable::new(&w);
        let x = rng.gen_range(0.0..1e4f64);
        let y = x + rng.gen_range(0.0..1e4f64) * rng.gen::<f64>().powi(3) + 1e-9;
        let (ex, ey) = (
            table.entry(x).map_err(|e| e.to_string())?,
            table.entry(y).map_err(|e| e.to_string())?,
        );
        if ex.log_value < ey.log_value - 2.0 * (ex.abs_log_err + ey.abs_log_err) {
            mono += 1;
        }
    }

    // section nesting: the N-section is the leading block of the N'-section
    let mut nest = 0;
    for _ in 0..TRIALS {
        let w = random_weight(&mut rng);
        let space = random_space(&mut rng);
        let table = MomentTable::new(&w);
        let big_n = rng.gen_range(2..48);
        let n = rng.gen_range(1..big_n);
        let big = matrix_section(&w, &space, big_n, &table).map_err(|e| e.to_string())?;
        let small = matrix_section(&w, &space, n, &table).map_err(|e| e.to_string())?;
        if big.leading_block(n).map_err(|e| e.to_string())?.to_dense() != small.to_dense() {
            nest += 1;
        }
    }

    // linearity: apply(αf + βg) = α apply(f) + β apply(g) to 1e-12 relative
    let mut lin = 0;
    for _ in 0..TRIALS {
        let w = random_weight(&mut rng);
        let table = MomentTable::new(&w);
        let d = rng.gen_range(0..40);
        let f = random_series(&mut rng, d);
        let g = random_series(&mut rng, d);
        let (a, b) = (
            c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
        );
        let lhs = apply(&w, &f.linear_combination(a, &g, b), &table).map_err(|e| e.to_string())?;
        let af = apply(&w, &f, &table).map_err(|e| e.to_string())?;
        let ag = apply(&w, &g, &table).map_err(|e| e.to_string())?;
        for n in 0..=d {
            let rhs = a * af.coeff(n) + b * ag.coeff(n);
            let scale = (a.norm() * af.coeff(n).norm() + b.norm() * ag.coeff(n).norm())
                .max(lhs.coeff(n).norm());
            if (lhs.coeff(n) - rhs).norm() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                lin += 1;
                break;
            }
        }
    }

    // Parseval additivity over disjoint supports, 1e-12 relative
    let mut add = 0;
    for _ in 0..TRIALS {
        let space = random_space(&mut rng);
        let d = rng.gen_range(1..200);
        let f = random_series(&mut rng, d);
        let mask: Vec<bool> = (0..=d).map(|_| rng.gen_bool(0.5)).collect();
        let zero = c(0.0, 0.0);
        let p = CoefficientSeries::new(
            (0..=d)
                .map(|n| if mask[n] { f.coeff(n) } else { zero })
                .collect(),
        );
        let q = CoefficientSeries::new(
            (0..=d)
                .map(|n| if mask[n] { zero } else { f.coeff(n) })
                .collect(),
        );
        let (nf, np, nq) = (
            norm_sq(&space, &f).map_err(|e| e.to_string())?,
            norm_sq(&space, &p).map_err(|e| e.to_string())?,
            norm_sq(&space, &q).map_err(|e| e.to_string())?,
        );
        if (nf - np - nq).abs() > 1e-12 * nf {
            add += 1;
        }
    }

    ensure(mono + nest + lin + add == 0, || {
        format!(
            "violations: monotonicity {mono}, nesting {nest}, linearity {lin}, additivity {add}"
        )
    })?;
    Ok(format!(
        "{TRIALS} trials each of monotonicity, nesting, linearity, additivity: 0 violations"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("classical Cesàro equivalence", criterion_1),
        ("C_ω(1) identity", criterion_2),
        ("kernel closed form", criterion_3),
        ("integral vs coefficient oracle", criterion_4),
        ("Hardy sharp constant", criterion_5),
        ("boundedness dichotomy", criterion_6),
        ("Dirichlet failure", criterion_7),
        ("non-compactness probe", criterion_8),
        ("classifier truth table", criterion_9),
        ("property suites", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} [{secs:.1}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs:.1}s]: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
