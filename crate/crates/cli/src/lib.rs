//! Manifest-driven orchestration: build symbol tables, run residual suites,
//! adjudicate the Sylvester sign, compare against PDE oracles, reconstruct
//! coefficients and run round trips, emitting machine-readable reports.
//!
//! Exit codes: 0 success, 1 validation error, 2 tolerance failure, 3 I/O
//! failure. Identical manifests produce byte-identical outputs: floats are
//! printed with 17 significant digits and rows are sorted before writing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use thermodtn::dtn_assembly::{Assembler, SymbolTable};
use thermodtn::error::ReconstructionError;
use thermodtn::manifest::{
    CoeffSpec, Manifest, MatrixJson, Mode, TableFileJson, Tolerances,
};
use thermodtn::operator_symbols::Frame;
use thermodtn::oracle::{halfspace_multiplier, slab_dtn, symbol_partial_sum, SlabConfig};
use thermodtn::reconstruction::{layer_strip, BoundaryObservation, RecoverySetup};
use thermodtn::scalar::{ExactComplex, Scalar};
use thermodtn::symbol_calculus::sign_check;

#[derive(Parser)]
#[command(
    name = "thermodtn",
    about = "Full symbol of the thermoelastic Dirichlet-to-Neumann map, and boundary recovery from it"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Build the boundary symbol tables for every covector in the manifest.
    Symbols(CommonArgs),
    /// Per-degree residuals of the full symbol equation.
    Residual(CommonArgs),
    /// Residuals of both sign variants of the closed-form Sylvester solve.
    SylvesterCheck(CommonArgs),
    /// Compare oracle DtN matrices against symbol partial sums on a ladder.
    OracleCompare(CommonArgs),
    /// Recover coefficient jets from a stored symbol table.
    Reconstruct {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forward-then-inverse round trip against the manifest's materials.
    RoundTrip(CommonArgs),
}

#[derive(clap::Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the manifest's table depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Override the manifest's covector magnitudes (comma-separated).
    #[arg(long)]
    pub ladder: Option<String>,
    /// Scalar mode override: float | rational.
    #[arg(long)]
    pub mode: Option<String>,
    /// Worker threads for independent covector/magnitude tasks.
    #[arg(long)]
    pub jobs: Option<usize>,
}

enum Failure {
    Validation(String),
    Tolerance(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Tolerance(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Tolerance(m) | Failure::Io(m) => m,
        }
    }
}

type RunResult = Result<String, Failure>;

fn fmt_f(v: f64) -> String {
    format!("{:.16e}", v)
}

fn read_to_string(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("reading {path:?}: {e}")))
}

fn write_output(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Io(format!("writing {path:?}: {e}")))
}

fn load_manifest(args: &CommonArgs) -> Result<Manifest, Failure> {
    let text = read_to_string(&args.manifest)?;
    let mut m =
        Manifest::from_json(&text).map_err(|e| Failure::Validation(e.to_string()))?;
    if let Some(depth) = args.depth {
        m.depth = depth;
    }
    if let Some(mode) = &args.mode {
        m.mode = match mode.as_str() {
            "float" => Mode::Float,
            "rational" => Mode::Rational,
            other => {
                return Err(Failure::Validation(format!("unknown mode '{other}'")));
            }
        };
    }
    if let Some(ladder) = &args.ladder {
        let mags: Result<Vec<f64>, _> = ladder.split(',').map(|s| s.trim().parse()).collect();
        let mags = mags.map_err(|e| Failure::Validation(format!("bad --ladder: {e}")))?;
        let (dir, _) = m
            .ladder()
            .map_err(|e| Failure::Validation(e.to_string()))?;
        m.covectors = thermodtn::manifest::CovectorSpec::Ladder {
            direction: dir,
            magnitudes: mags,
        };
    }
    m.validate().map_err(|e| Failure::Validation(e.to_string()))?;
    Ok(m)
}

fn init_jobs(args: &CommonArgs) {
    if let Some(jobs) = args.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
}

fn build_tables<S: Scalar>(
    m: &Manifest,
) -> Result<Vec<(Vec<f64>, SymbolTable<S>)>, Failure> {
    use rayon::prelude::*;
    let metric = m
        .metric::<S>()
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let material = m
        .material::<S>()
        .map_err(|e| Failure::Validation(e.to_string()))?;
    m.covector_list()
        .into_par_iter()
        .map(|xi| {
            let xi_s: Vec<S> = xi.iter().map(|&v| S::from_f64(v)).collect();
            let frame = Frame::new(&metric, &material, &xi_s, m.orders.xi)
                .map_err(|e| Failure::Validation(e.to_string()))?;
            let asm = Assembler::new(frame).map_err(|e| Failure::Validation(e.to_string()))?;
            let table = asm
                .build_table(m.depth)
                .map_err(|e| Failure::Validation(e.to_string()))?;
            Ok((xi, table))
        })
        .collect()
}

fn assemblers_for<S: Scalar>(m: &Manifest) -> Result<Vec<(Vec<f64>, Assembler<S>)>, Failure> {
    let metric = m
        .metric::<S>()
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let material = m
        .material::<S>()
        .map_err(|e| Failure::Validation(e.to_string()))?;
    m.covector_list()
        .into_iter()
        .map(|xi| {
            let xi_s: Vec<S> = xi.iter().map(|&v| S::from_f64(v)).collect();
            let frame = Frame::new(&metric, &material, &xi_s, m.orders.xi)
                .map_err(|e| Failure::Validation(e.to_string()))?;
            let asm = Assembler::new(frame).map_err(|e| Failure::Validation(e.to_string()))?;
            Ok((xi, asm))
        })
        .collect()
}

fn cmd_symbols(args: &CommonArgs) -> RunResult {
    let m = load_manifest(args)?;
    init_jobs(args);
    let (json, worst) = match m.mode {
        Mode::Float => {
            let tables = build_tables::<Complex64>(&m)?;
            let refs: Vec<(Vec<f64>, &SymbolTable<Complex64>)> =
                tables.iter().map(|(x, t)| (x.clone(), t)).collect();
            let json = TableFileJson::new(&m, &refs);
            let worst = worst_degree2_residual(&m)?;
            (json, worst)
        }
        Mode::Rational => {
            let tables = build_tables::<ExactComplex>(&m)?;
            let refs: Vec<(Vec<f64>, &SymbolTable<ExactComplex>)> =
                tables.iter().map(|(x, t)| (x.clone(), t)).collect();
            (TableFileJson::new(&m, &refs), 0.0)
        }
    };
    let text = serde_json::to_string_pretty(&json)
        .map_err(|e| Failure::Io(e.to_string()))?;
    write_output(&args.out, &text)?;
    Ok(format!(
        "symbols: {} covector(s), depth {}, worst degree-2 residual {:.3e}",
        json.entries.len(),
        m.depth,
        worst
    ))
}

fn worst_degree2_residual(m: &Manifest) -> Result<f64, Failure> {
    let asms = assemblers_for::<Complex64>(m)?;
    let mut worst = 0.0f64;
    for (_, asm) in &asms {
        let q1 = asm
            .principal_symbol()
            .map_err(|e| Failure::Tolerance(e.to_string()))?;
        let table = SymbolTable {
            q: vec![q1],
            p: vec![],
            provenance: thermodtn::dtn_assembly::TableProvenance {
                dimension: m.dimension,
                depth: 0,
                xi: vec![],
                x_order_material: 0,
                x_order_metric: 0,
                xi_order: 0,
            },
        };
        let r = asm
            .degree_residual(&table, 2)
            .map_err(|e| Failure::Validation(e.to_string()))?;
        worst = worst.max(r);
    }
    Ok(worst)
}

fn residual_rows<S: Scalar>(m: &Manifest) -> Result<Vec<(i32, f64)>, Failure> {
    use rayon::prelude::*;
    let asms = assemblers_for::<S>(m)?;
    let per_cov: Vec<Vec<(i32, f64)>> = asms
        .par_iter()
        .map(|(_, asm)| {
            let table = asm
                .build_table(m.depth)
                .map_err(|e| Failure::Validation(e.to_string()))?;
            (0..=m.depth as i32)
                .map(|l| {
                    let degree = 2 - l;
                    let r = asm
                        .degree_residual(&table, degree)
                        .map_err(|e| Failure::Validation(e.to_string()))?;
                    Ok((degree, r))
                })
                .collect()
        })
        .collect::<Result<_, Failure>>()?;
    let mut worst: Vec<(i32, f64)> = per_cov[0].clone();
    for rows in per_cov.iter().skip(1) {
        for (w, r) in worst.iter_mut().zip(rows.iter()) {
            w.1 = w.1.max(r.1);
        }
    }
    Ok(worst)
}

fn cmd_residual(args: &CommonArgs) -> RunResult {
    let m = load_manifest(args)?;
    init_jobs(args);
    let rows = match m.mode {
        Mode::Float => residual_rows::<Complex64>(&m)?,
        Mode::Rational => residual_rows::<ExactComplex>(&m)?,
    };
    let mut csv = String::new();
    let _ = writeln!(csv, "# tolerance residual={}", fmt_f(m.tolerances.residual));
    let _ = writeln!(csv, "degree,norm");
    for (degree, r) in &rows {
        let _ = writeln!(csv, "{},{}", degree, fmt_f(*r));
    }
    write_output(&args.out, &csv)?;
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if worst > m.tolerances.residual {
        return Err(Failure::Tolerance(format!(
            "worst residual {worst:.3e} exceeds {:.1e}",
            m.tolerances.residual
        )));
    }
    Ok(format!("residual: worst {:.3e} over degrees 2..{}", worst, 2 - m.depth as i32))
}

fn sylvester_rows<S: Scalar>(
    m: &Manifest,
) -> Result<Vec<thermodtn::symbol_calculus::SignCheckRow>, Failure> {
    let asms = assemblers_for::<S>(m)?;
    let mut rows = Vec::new();
    for (idx, (_, asm)) in asms.iter().enumerate() {
        let mut eye = asm.frame.zero_matrix(1);
        for i in 0..asm.frame.sys_dim() {
            eye.set(
                i,
                i,
                thermodtn::algebra::BiJet::constant(
                    asm.frame.n,
                    asm.frame.metric.order(),
                    asm.frame.lxi,
                    S::one(),
                ),
            );
        }
        rows.extend(
            sign_check(&asm.frame, &eye, &format!("identity@{idx}"))
                .map_err(|e| Failure::Validation(e.to_string()))?,
        );
        let q1 = asm
            .principal_symbol()
            .map_err(|e| Failure::Validation(e.to_string()))?;
        let e1 = asm
            .transport_rhs(&[q1], 1)
            .map_err(|e| Failure::Validation(e.to_string()))?;
        rows.extend(
            sign_check(&asm.frame, &e1, &format!("transport@{idx}"))
                .map_err(|e| Failure::Validation(e.to_string()))?,
        );
    }
    Ok(rows)
}

fn cmd_sylvester_check(args: &CommonArgs) -> RunResult {
    let m = load_manifest(args)?;
    init_jobs(args);
    let rows = match m.mode {
        Mode::Float => sylvester_rows::<Complex64>(&m)?,
        Mode::Rational => sylvester_rows::<ExactComplex>(&m)?,
    };
    let mut csv = String::new();
    let _ = writeln!(csv, "# tolerance sylvester={}", fmt_f(m.tolerances.sylvester));
    let _ = writeln!(csv, "case-id,sign,residual");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{}", r.case_id, r.sign, fmt_f(r.residual));
    }
    write_output(&args.out, &csv)?;
    let worst_plus = rows
        .iter()
        .filter(|r| r.sign == "plus")
        .map(|r| r.residual)
        .fold(0.0, f64::max);
    if worst_plus > m.tolerances.sylvester {
        return Err(Failure::Tolerance(format!(
            "plus-sign residual {worst_plus:.3e} exceeds {:.1e}",
            m.tolerances.sylvester
        )));
    }
    let worst_minus = rows
        .iter()
        .filter(|r| r.sign == "minus")
        .map(|r| r.residual)
        .fold(0.0, f64::max);
    Ok(format!(
        "sylvester-check: plus worst {:.3e}, minus worst {:.3e}",
        worst_plus, worst_minus
    ))
}

fn material_is_constant(m: &Manifest) -> bool {
    [
        &m.material.lambda,
        &m.material.mu,
        &m.material.alpha,
        &m.material.beta,
    ]
    .iter()
    .all(|c| matches!(c, CoeffSpec::Constant { .. }))
}

fn cmd_oracle_compare(args: &CommonArgs) -> RunResult {
    use rayon::prelude::*;
    let m = load_manifest(args)?;
    init_jobs(args);
    if m.mode == Mode::Rational {
        return Err(Failure::Validation(
            "oracle-compare runs in float mode only".into(),
        ));
    }
    match &m.metric {
        thermodtn::manifest::MetricSpec::Preset { preset, .. } if preset == "euclidean" => {}
        _ => {
            return Err(Failure::Validation(
                "oracle-compare needs the euclidean metric preset (flat tangential geometry)"
                    .into(),
            ))
        }
    }
    let (dir, mags) = m
        .ladder()
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let material = m
        .material::<Complex64>()
        .map_err(|e| Failure::Validation(e.to_string()))?;
    // One table at the unit direction; partial sums follow by homogeneity.
    let metric = m
        .metric::<Complex64>()
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let xi_s: Vec<Complex64> = dir.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let frame = Frame::new(&metric, &material, &xi_s, m.orders.xi)
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let asm = Assembler::new(frame).map_err(|e| Failure::Validation(e.to_string()))?;
    let table = asm
        .build_table(m.depth)
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let p_values = table.p_values();

    let constant = material_is_constant(&m);
    let samples: Vec<(f64, thermodtn::oracle::DtnSample)> = mags
        .par_iter()
        .map(|&t| {
            let xi: Vec<f64> = dir.iter().map(|&d| d * t).collect();
            let sample = if constant {
                halfspace_multiplier(&material, &xi)
            } else {
                let cfg = match m.slab {
                    Some(s) => SlabConfig {
                        length: s.length,
                        grid: s.grid,
                    },
                    None => SlabConfig::auto(t, 800),
                };
                slab_dtn(&material, &xi, &cfg)
            }
            .map_err(|e| Failure::Validation(e.to_string()))?;
            Ok((t, sample))
        })
        .collect::<Result<_, Failure>>()?;

    let d = m.dimension + 1;
    let mut csv = String::new();
    let _ = writeln!(csv, "# tolerance slope={}", fmt_f(m.tolerances.slope));
    let _ = writeln!(
        csv,
        "magnitude,entry,oracle_re,oracle_im,symbolsum_re,symbolsum_im,abs_err"
    );
    let mut errs = Vec::new();
    for (t, sample) in &samples {
        let sum = symbol_partial_sum(&p_values, *t);
        let oracle = sample
            .meta
            .extrapolated
            .as_ref()
            .unwrap_or(&sample.lambda);
        errs.push((*t, oracle.sub(&sum).max_abs()));
        for i in 0..d {
            for j in 0..d {
                let o = oracle[(i, j)];
                let s = sum[(i, j)];
                let _ = writeln!(
                    csv,
                    "{},{}_{},{},{},{},{},{}",
                    fmt_f(*t),
                    i + 1,
                    j + 1,
                    fmt_f(o.re),
                    fmt_f(o.im),
                    fmt_f(s.re),
                    fmt_f(s.im),
                    fmt_f((o - s).norm())
                );
            }
        }
    }
    write_output(&args.out, &csv)?;
    let slope = (errs.last().unwrap().1 / errs[0].1).ln() / (errs.last().unwrap().0 / errs[0].0).ln();
    let expected = -(m.depth as f64);
    let summary = format!(
        "oracle-compare: {} magnitudes, slope {:.3} (expected {:.1}), worst error {:.3e}",
        errs.len(),
        slope,
        expected,
        errs.iter().map(|e| e.1).fold(0.0, f64::max)
    );
    if (slope - expected).abs() > m.tolerances.slope {
        return Err(Failure::Tolerance(format!(
            "{summary}: slope off by more than {}",
            m.tolerances.slope
        )));
    }
    Ok(summary)
}

fn cmd_reconstruct(table_path: &Path, out: &Path) -> RunResult {
    let text = read_to_string(table_path)?;
    let table: TableFileJson =
        serde_json::from_str(&text).map_err(|e| Failure::Validation(e.to_string()))?;
    let prov = &table.provenance;
    let metric = prov
        .metric
        .build::<Complex64>(prov.dimension, prov.orders.x + 1)
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let setup = RecoverySetup::new(
        metric,
        prov.constants.rho,
        prov.constants.omega,
        prov.constants.theta0,
        prov.constants.c_heat,
    );
    let obs: Vec<BoundaryObservation> = table
        .entries
        .iter()
        .map(|e| BoundaryObservation {
            xi: e.xi.clone(),
            p: e.p.iter().map(|dm| dm.matrix.to_cmat()).collect(),
        })
        .collect();
    let jet = layer_strip(&setup, &obs, prov.tolerances.roundtrip).map_err(map_recon_err)?;
    let out_json = serde_json::json!({
        "lambda": jet.lambda,
        "mu": jet.mu,
        "alpha": jet.alpha,
        "beta": jet.beta,
        "diagnostics": {
            "layer_residuals": jet.layer_residuals,
            "undetermined": jet.undetermined.iter().map(|(k, n)| format!("order {k}: {n}")).collect::<Vec<_>>(),
            "thermal_cross_check": jet.thermal_cross_check.map(|(a, b)| vec![a, b]),
        }
    });
    let text =
        serde_json::to_string_pretty(&out_json).map_err(|e| Failure::Io(e.to_string()))?;
    write_output(out, &text)?;
    let worst = jet
        .layer_residuals
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    Ok(format!(
        "reconstruct: recovered jets to order {}, worst layer residual {:.3e}",
        jet.lambda.len() - 1,
        worst
    ))
}

fn map_recon_err(e: ReconstructionError) -> Failure {
    match e {
        ReconstructionError::ToleranceExceeded { .. }
        | ReconstructionError::RankDeficientLayer { .. }
        | ReconstructionError::IllConditionedFit { .. } => Failure::Tolerance(e.to_string()),
        other => Failure::Validation(other.to_string()),
    }
}

fn cmd_round_trip(args: &CommonArgs) -> RunResult {
    let m = load_manifest(args)?;
    init_jobs(args);
    if m.mode == Mode::Rational {
        return Err(Failure::Validation("round-trip runs in float mode only".into()));
    }
    let material = m
        .material::<Complex64>()
        .map_err(|e| Failure::Validation(e.to_string()))?;
    for (name, jet) in [
        ("lambda", &material.lambda),
        ("mu", &material.mu),
        ("alpha", &material.alpha),
        ("beta", &material.beta),
    ] {
        for (idx, _) in jet.partials() {
            if idx[..m.dimension - 1].iter().any(|&v| v != 0) {
                return Err(Failure::Validation(format!(
                    "round-trip recovers normal-derivative jets; {name} has tangential dependence"
                )));
            }
        }
    }
    let tables = build_tables::<Complex64>(&m)?;
    let obs: Vec<BoundaryObservation> = tables
        .iter()
        .map(|(_, t)| BoundaryObservation::from_table(t))
        .collect();
    let metric = m
        .metric::<Complex64>()
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let setup = RecoverySetup::new(
        metric,
        m.material.rho,
        m.material.omega,
        m.material.theta0,
        m.material.c_heat,
    );
    let jet = layer_strip(&setup, &obs, m.tolerances.roundtrip).map_err(map_recon_err)?;
    let through = jet.lambda.len() - 1;
    let truth = m
        .material_normal_coefficients(through)
        .map_err(|e| Failure::Validation(e.to_string()))?;

    let mut csv = String::new();
    let _ = writeln!(csv, "# tolerance roundtrip={}", fmt_f(m.tolerances.roundtrip));
    let _ = writeln!(csv, "order,coefficient,abs_err,rel_err");
    let mut worst = 0.0f64;
    for (c, name) in ["lambda", "mu", "alpha", "beta"].iter().enumerate() {
        let got = jet.coefficient(name);
        for k in 0..=through {
            if jet.undetermined.iter().any(|(ko, n)| *ko == k && n == name) {
                let _ = writeln!(csv, "{},{},undetermined,undetermined", k, name);
                continue;
            }
            let want = truth[c][k];
            let abs = (got[k] - want).abs();
            let rel = abs / want.abs().max(1.0);
            worst = worst.max(rel);
            let _ = writeln!(csv, "{},{},{},{}", k, name, fmt_f(abs), fmt_f(rel));
        }
    }
    write_output(&args.out, &csv)?;
    if worst > m.tolerances.roundtrip {
        return Err(Failure::Tolerance(format!(
            "worst relative error {worst:.3e} exceeds {:.1e}",
            m.tolerances.roundtrip
        )));
    }
    Ok(format!(
        "round-trip: recovered orders 0..{} with worst relative error {:.3e}",
        through, worst
    ))
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Symbols(args) => cmd_symbols(args),
        Command::Residual(args) => cmd_residual(args),
        Command::SylvesterCheck(args) => cmd_sylvester_check(args),
        Command::OracleCompare(args) => cmd_oracle_compare(args),
        Command::Reconstruct { table, out } => cmd_reconstruct(table, out),
        Command::RoundTrip(args) => cmd_round_trip(args),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

/// Default tolerances, re-exported for tests.
pub fn default_tolerances() -> Tolerances {
    Tolerances::default()
}

/// Helper for tests: serialize a matrix the way table files store it.
pub fn matrix_json(m: &thermodtn::linalg::CMat) -> MatrixJson {
    MatrixJson::from_cmat(m)
}
