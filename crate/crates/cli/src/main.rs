use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use cesaro_core::analysis::{
    boundedness_scan, compactness_probe, dirichlet_divergence, necessity_functionals, PowerConfig,
    ProbeConfig, ScanConfig, ScanThresholds,
};
use cesaro_core::cesaro::{apply_to_degree, matrix_section};
use cesaro_core::kernels::{averaged_kernel_eval, kernel_coeffs, kernel_eval, KernelConfig};
use cesaro_core::quadrature::QuadratureConfig;
use cesaro_core::spaces::{CoefficientSeries, SpaceSpec};
use cesaro_core::weights::{
    classify, format_sci, parse_weight, ClassConfig, MomentTable, RadialWeight,
};
use cesaro_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "cesaro",
    version,
    about = "Generalized Cesàro operators induced by radial weights"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Moment cache CSV, read before and merged after the run.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Output file (written atomically); stdout if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Quadrature tolerance on log-moments.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Omit the timestamp field from JSON payloads.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Moments ω_x of a weight.
    Moments {
        #[arg(long)]
        weight: String,
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',', conflicts_with = "x_range")]
        x: Vec<f64>,
        /// start:stop:step, inclusive.
        #[arg(long)]
        x_range: Option<String>,
    },
    /// Membership in the classes D̂, M, Ď and D.
    Classify {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        j_max: Option<u32>,
        #[arg(long)]
        k_m: Option<f64>,
        #[arg(long)]
        k_dcheck: Option<f64>,
    },
    /// Bergman kernel B_z(ζ), or the averaged kernel K_t(z) with --t.
    Kernel {
        #[arg(long)]
        weight: String,
        /// re,im
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// re,im
        #[arg(long, allow_hyphen_values = true)]
        zeta: Option<String>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        max_degree: Option<usize>,
        /// Also write the coefficients c_n, n ≤ D, to this JSON file.
        #[arg(long, value_name = "PATH", requires = "dump_degree")]
        dump: Option<PathBuf>,
        #[arg(long)]
        dump_degree: Option<usize>,
    },
    /// Coefficients of C_ω f.
    Apply {
        #[arg(long)]
        weight: String,
        /// JSON array of [re, im] pairs.
        #[arg(long, conflicts_with = "coeffs_file")]
        coeffs: Option<String>,
        #[arg(long)]
        coeffs_file: Option<PathBuf>,
        /// Output degree; defaults to the degree of f.
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Section norms σ(N) over a grid of N.
    Scan {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        space: String,
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        #[arg(long)]
        plateau: Option<f64>,
        #[arg(long)]
        slope: Option<f64>,
        #[arg(long)]
        power_tol: Option<f64>,
        /// Also write the largest section as CSV.
        #[arg(long, value_name = "PATH")]
        section_out: Option<PathBuf>,
    },
    /// Ratios ‖C_ω f_a‖/‖f_a‖ over a grid of a.
    Probe {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        space: String,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        output_factor: Option<usize>,
    },
    /// Dirichlet partial sums of C_ω(1) against the lower envelope.
    Dirichlet {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        nmax: usize,
    },
    /// Observables of the necessity arguments for one or more N.
    Necessity {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        space: String,
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![4, 16, 64])]
        ms: Vec<usize>,
    },
}

/// Result of a command: the payload to emit and, if the run stopped early,
/// the numeric failure behind it.
struct Outcome {
    json: Value,
    csv: Option<String>,
    partial: Option<Error>,
}

impl Outcome {
    fn full(json: Value, csv: Option<String>) -> Self {
        Self {
            json,
            csv,
            partial: None,
        }
    }
}

struct Ctx {
    global: Global,
    tables: Vec<Arc<MomentTable>>,
}

impl Ctx {
    fn quad(&self) -> QuadratureConfig {
        let mut q = QuadratureConfig::default();
        if let Some(t) = self.global.tol {
            q.tolerance = t;
        }
        q
    }

    fn table(&mut self, w: &RadialWeight) -> Result<Arc<MomentTable>, Error> {
        if let Some(t) = self.tables.iter().find(|t| t.weight_id() == w.id()) {
            return Ok(t.clone());
        }
        let t = Arc::new(MomentTable::with_config(w, self.quad()));
        if let Some(p) = &self.global.cache {
            t.load_csv(p)?;
        }
        self.tables.push(t.clone());
        Ok(t)
    }

    fn space(&mut self, text: &str) -> Result<SpaceSpec, Error> {
        match text.trim().strip_prefix("bergman:") {
            Some(w) => {
                let mu = parse_weight(w)?;
                Ok(SpaceSpec::bergman_with_table(self.table(&mu)?))
            }
            None => SpaceSpec::parse(text),
        }
    }

    fn save_cache(&self) -> Result<(), Error> {
        if let Some(p) = &self.global.cache {
            for t in &self.tables {
                t.save_csv(p)?;
            }
        }
        Ok(())
    }
}

fn parse_complex(s: &str) -> Result<Complex64, Error> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| {
        p.parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("bad complex number '{s}' (expected re,im)")))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Error::InvalidInput(format!(
            "bad complex number '{s}' (expected re,im)"
        ))),
    }
}

fn parse_range(s: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::InvalidInput(format!("bad range '{s}' (expected start:stop:step)"));
    let p: Vec<f64> = s
        .split(':')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = p[..] else {
        return Err(bad());
    };
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn cmd_moments(
    ctx: &mut Ctx,
    weight: &str,
    x: &[f64],
    x_range: Option<&str>,
) -> Result<Outcome, Error> {
    let w = parse_weight(weight)?;
    let xs = match x_range {
        Some(r) => parse_range(r)?,
        None if x.is_empty() => return Err(Error::InvalidInput("give --x or --x-range".into())),
        None => x.to_vec(),
    };
    let table = ctx.table(&w)?;
    let mut rows = Vec::new();
    let mut csv = String::from("x,omega,log_omega,abs_log_err\n");
    let mut partial = None;
    for &xv in &xs {
        match table.entry(xv) {
            Ok(e) => {
                let v = table.moment_value(xv)?;
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    xv,
                    format_sci(v),
                    format_sci(e.log_value),
                    format_sci(e.abs_log_err)
                ));
                rows.push(json!({"x": xv, "omega": v, "log_omega": e.log_value, "abs_log_err": e.abs_log_err}));
            }
            Err(e) if e.is_numeric() => {
                partial = Some(e);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Outcome {
        json: json!({"weight": w.label(), "weight_id": w.id().as_str(), "moments": rows}),
        csv: Some(csv),
        partial,
    })
}

fn cmd_classify(
    ctx: &mut Ctx,
    weight: &str,
    j_max: Option<u32>,
    k_m: Option<f64>,
    k_dcheck: Option<f64>,
) -> Result<Outcome, Error> {
    let w = parse_weight(weight)?;
    let mut cfg = ClassConfig {
        quadrature: ctx.quad(),
        ..ClassConfig::default()
    };
    if let Some(j) = j_max {
        cfg.j_max = j;
    }
    if let Some(k) = k_m {
        cfg.k_m = k;
    }
    if let Some(k) = k_dcheck {
        cfg.k_dcheck = k;
    }
    let table = ctx.table(&w)?;
    let r = classify(&w, &cfg, &table)?;
    eprintln!(
        "{}: in_dhat {:?}, in_m {:?}, in_dcheck {:?}, in_d {:?}",
        r.weight, r.in_dhat.verdict, r.in_m.verdict, r.in_dcheck.verdict, r.in_d
    );
    let mut csv = String::from("class,verdict,window_slope,window_spread\n");
    for (name, d) in [
        ("dhat", &r.in_dhat),
        ("m", &r.in_m),
        ("dcheck", &r.in_dcheck),
    ] {
        let v = serde_json::to_value(d.verdict)?;
        csv.push_str(&format!(
            "{name},{},{},{}\n",
            v.as_str().unwrap_or_default(),
            format_sci(d.window_slope),
            format_sci(d.window_spread)
        ));
    }
    let v = serde_json::to_value(r.in_d)?;
    csv.push_str(&format!("d,{},,\n", v.as_str().unwrap_or_default()));
    Ok(Outcome::full(serde_json::to_value(&r)?, Some(csv)))
}

#[allow(clippy::too_many_arguments)]
fn cmd_kernel(
    ctx: &mut Ctx,
    weight: &str,
    z: &str,
    zeta: Option<&str>,
    t: Option<f64>,
    max_degree: Option<usize>,
    dump: Option<&Path>,
    dump_degree: Option<usize>,
) -> Result<Outcome, Error> {
    let w = parse_weight(weight)?;
    let table = ctx.table(&w)?;
    let mut cfg = KernelConfig::default();
    if let Some(m) = max_degree {
        cfg.max_degree = m;
    }
    let z = parse_complex(z)?;
    let (kind, v) = match (zeta, t) {
        (Some(zeta), None) => (
            "bergman",
            kernel_eval(&w, z, parse_complex(zeta)?, &table, &cfg)?,
        ),
        (None, Some(t)) => ("averaged", averaged_kernel_eval(&w, t, z, &table, &cfg)?),
        _ => {
            return Err(Error::InvalidInput(
                "give exactly one of --zeta or --t".into(),
            ))
        }
    };
    if let (Some(path), Some(d)) = (dump, dump_degree) {
        let s = kernel_coeffs(&w, d, &table)?.to_series();
        cesaro_core::io::write_atomic(path, s.to_json()?.as_bytes())?;
    }
    let csv = format!(
        "kind,re,im,tail_bound,degree\n{kind},{},{},{},{}\n",
        format_sci(v.value.re),
        format_sci(v.value.im),
        format_sci(v.tail_bound),
        v.degree
    );
    Ok(Outcome::full(
        json!({
            "weight": w.label(),
            "kind": kind,
            "value": complex_json(v.value),
            "tail_bound": v.tail_bound,
            "degree": v.degree,
        }),
        Some(csv),
    ))
}

fn cmd_apply(
    ctx: &mut Ctx,
    weight: &str,
    coeffs: Option<&str>,
    coeffs_file: Option<&Path>,
    degree: Option<usize>,
) -> Result<Outcome, Error> {
    let w = parse_weight(weight)?;
    let text = match (coeffs, coeffs_file) {
        (Some(c), _) => c.to_string(),
        (None, Some(p)) => std::fs::read_to_string(p)?,
        (None, None) => return Err(Error::InvalidInput("give --coeffs or --coeffs-file".into())),
    };
    let f = CoefficientSeries::from_json(&text)?;
    if f.is_empty() {
        return Err(Error::InvalidInput("coefficient vector is empty".into()));
    }
    let table = ctx.table(&w)?;
    let g = apply_to_degree(&w, &f, degree.unwrap_or(f.degree()), &table)?;
    let mut csv = String::from("n,re,im\n");
    for (n, c) in g.coeffs.iter().enumerate() {
        csv.push_str(&format!("{n},{},{}\n", format_sci(c.re), format_sci(c.im)));
    }
    Ok(Outcome::full(serde_json::to_value(&g)?, Some(csv)))
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan(
    ctx: &mut Ctx,
    weight: &str,
    space: &str,
    ns: &[usize],
    plateau: Option<f64>,
    slope: Option<f64>,
    power_tol: Option<f64>,
    section_out: Option<&Path>,
) -> Result<Outcome, Error> {
    let w = parse_weight(weight)?;
    let space = ctx.space(space)?;
    let table = ctx.table(&w)?;
    let mut cfg = ScanConfig {
        power: PowerConfig::default(),
        thresholds: ScanThresholds::default(),
    };
    if let Some(p) = plateau {
        cfg.thresholds.plateau_ratio = p;
    }
    if let Some(s) = slope {
        cfg.thresholds.slope_threshold = s;
    }
    if let Some(t) = power_tol {
        cfg.power.tolerance = t;
    }
    let r = boundedness_scan(&w, &space, ns, &table, &cfg)?;
    if let Some(path) = section_out {
        if let Some(&n) = r.ns.last() {
            matrix_section(&w, &space, n, &table)?.write_csv(path)?;
        }
    }
    let partial = r.failure.as_ref().map(|f| Error::Quadrature {
        what: format!("scan stopped early: {f}"),
        achieved: f64::NAN,
        tolerance: f64::NAN,
    });
    let csv = r.curve_csv();
    Ok(Outcome {
        json: serde_json::to_value(&r)?,
        csv: Some(csv),
        partial,
    })
}

fn cmd_probe(
    ctx: &mut Ctx,
    weight: &str,
    space: &str,
    a: &[f64],
    eps: Option<f64>,
    output_factor: Option<usize>,
) -> Result<Outcome, Error> {
    let w = parse_weight(weight)?;
    let space = ctx.space(space)?;
    let table = ctx.table(&w)?;
    let mut cfg = ProbeConfig::default();
    if let Some(e) = eps {
        cfg.eps = e;
    }
    if let Some(f) = output_factor {
        cfg.output_factor = f;
    }
    let p = compactness_probe(&w, &space, a, &cfg, &table)?;
    let csv = p.to_csv();
    Ok(Outcome::full(serde_json::to_value(&p)?, Some(csv)))
}

fn cmd_dirichlet(ctx: &mut Ctx, weight: &str, nmax: usize) -> Result<Outcome, Error> {
    let w = parse_weight(weight)?;
    let table = ctx.table(&w)?;
    let c = dirichlet_divergence(&w, nmax, &table)?;
    let csv = c.to_csv();
    Ok(Outcome::full(serde_json::to_value(&c)?, Some(csv)))
}

fn cmd_necessity(
    ctx: &mut Ctx,
    weight: &str,
    space: &str,
    ns: &[usize],
    ms: &[usize],
) -> Result<Outcome, Error> {
    let w = parse_weight(weight)?;
    let space = ctx.space(space)?;
    let table = ctx.table(&w)?;
    let mut reports = Vec::new();
    let mut csv = String::from("N,moment_ratio,log_m_slope,family_ratio\n");
    let mut partial = None;
    for &n in ns {
        match necessity_functionals(&w, &space, n, ms, &table) {
            Ok(r) => {
                csv.push_str(&format!(
                    "{n},{},{},{}\n",
                    format_sci(r.moment_ratio),
                    format_sci(r.log_m_slope),
                    format_sci(r.family_ratio)
                ));
                reports.push(serde_json::to_value(&r)?);
            }
            Err(e) if e.is_numeric() => {
                partial = Some(e);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Outcome {
        json: json!({"weight": w.label(), "space": space.descriptor(), "reports": reports}),
        csv: Some(csv),
        partial,
    })
}

fn run(ctx: &mut Ctx, command: &Command) -> Result<Outcome, Error> {
    match command {
        Command::Moments { weight, x, x_range } => cmd_moments(ctx, weight, x, x_range.as_deref()),
        Command::Classify {
            weight,
            j_max,
            k_m,
            k_dcheck,
        } => cmd_classify(ctx, weight, *j_max, *k_m, *k_dcheck),
        Command::Kernel {
            weight,
            z,
            zeta,
            t,
            max_degree,
            dump,
            dump_degree,
        } => cmd_kernel(
            ctx,
            weight,
            z,
            zeta.as_deref(),
            *t,
            *max_degree,
            dump.as_deref(),
            *dump_degree,
        ),
        Command::Apply {
            weight,
            coeffs,
            coeffs_file,
            degree,
        } => cmd_apply(
            ctx,
            weight,
            coeffs.as_deref(),
            coeffs_file.as_deref(),
            *degree,
        ),
        Command::Scan {
            weight,
            space,
            ns,
            plateau,
            slope,
            power_tol,
            section_out,
        } => cmd_scan(
            ctx,
            weight,
            space,
            ns,
            *plateau,
            *slope,
            *power_tol,
            section_out.as_deref(),
        ),
        Command::Probe {
            weight,
            space,
            a,
            eps,
            output_factor,
        } => cmd_probe(ctx, weight, space, a, *eps, *output_factor),
        Command::Dirichlet { weight, nmax } => cmd_dirichlet(ctx, weight, *nmax),
        Command::Necessity {
            weight,
            space,
            ns,
            ms,
        } => cmd_necessity(ctx, weight, space, ns, ms),
    }
}

fn render(global: &Global, outcome: &Outcome) -> Result<String, Error> {
    match (global.format, &outcome.csv) {
        (Format::Csv, Some(csv)) => Ok(csv.clone()),
        _ => {
            let mut v = outcome.json.clone();
            if !global.no_timestamp {
                if let Value::Object(m) = &mut v {
                    let secs = std::time::SystemTime::now()
                        .duration_since(std::time::UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0);
                    m.insert("timestamp".into(), json!(secs));
                }
            }
            Ok(serde_json::to_string_pretty(&v)? + "\n")
        }
    }
}

fn emit(global: &Global, text: &str) -> Result<(), Error> {
    match &global.out {
        Some(p) => cesaro_core::io::write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let mut ctx = Ctx {
        global: cli.global,
        tables: Vec::new(),
    };
    let outcome = run(&mut ctx, &cli.command);
    let saved = ctx.save_cache();
    let code = match outcome {
        Ok(o) => {
            let written = render(&ctx.global, &o).and_then(|t| emit(&ctx.global, &t));
            match (written, o.partial) {
                (Err(e), _) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
                (Ok(()), Some(e)) => {
                    eprintln!("error: {e} (partial output written)");
                    3
                }
                (Ok(()), None) => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    if let Err(e) = saved {
        eprintln!("error: could not save moment cache: {e}");
        return ExitCode::from(if code == 0 { 2 } else { code });
    }
    ExitCode::from(code)
}
