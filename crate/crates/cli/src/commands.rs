//! Subcommand bodies. Each writes its files into the output directory and
//! returns an [`Outcome`] that maps onto the process exit code.

use crate::config::{hash_of, load, LoadedConfig};
use crate::error::Result;
use crate::output::{num, Header, OutDir};
use crate::verify::{self, Row, Suite};
use nonlocal_fredholm::coefficients::{hypothesis_report, CoefficientSet, EllipticityReport};
use nonlocal_fredholm::fractional::frac_gradient_spectral;
use nonlocal_fredholm::fredholm::{
    assemble, project_out, solve, spectrum, sweep_crossings, AssembledSystem, SolveReport, SolveStatus, SpectrumReport,
};
use nonlocal_fredholm::special::{grad_constant, riesz_constant, unit_ball_volume};
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Options {
    pub out: PathBuf,
    pub timestamp: bool,
}

/// Non-error results that still carry a nonzero exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// A structural hypothesis failed or an asserted verify row failed.
    Violation,
    /// A resonant solve with incompatible data.
    Incompatible,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Violation => 2,
            Outcome::Incompatible => 3,
        }
    }
}

fn out_dir(opts: &Options, hash: String) -> Result<OutDir> {
    OutDir::create(&opts.out, Header::new(hash, opts.timestamp))
}

pub fn constants(n: usize, s: f64, opts: &Options) -> Result<Outcome> {
    let out = out_dir(opts, hash_of(&json!({"command": "constants", "n": n, "s": s})))?;
    let c = grad_constant(s, n)?;
    let g = riesz_constant(1.0 - s, n)?;
    let row = vec![
        n.to_string(),
        num(s),
        num(c),
        num(g),
        num(c * g),
        num(n as f64 + s - 1.0),
        num(c / (1.0 - s) * unit_ball_volume(n)),
    ];
    let cols =
        ["n", "s", "grad_constant", "riesz_constant_one_minus_s", "product", "n_plus_s_minus_one", "limit_ratio"];
    let path = out.write_csv("constants.csv", &cols, &[row])?;
    println!("c_{{{s},{n}}} = {c:.16e}; wrote {}", path.display());
    Ok(Outcome::Success)
}

pub fn gradient(config: &Path, s: f64, opts: &Options) -> Result<Outcome> {
    let LoadedConfig { config: cfg, base_dir, hash } = load(config)?;
    let out = out_dir(opts, hash)?;
    let bx = cfg.grid_box()?;
    let u = cfg.rhs_function(&bx, &base_dir)?;
    let g = frac_gradient_spectral(&u, s)?;
    let n = bx.dim();
    let mut cols: Vec<String> = (0..n).map(|a| format!("x_{a}")).collect();
    cols.push("u".into());
    cols.extend((0..n).map(|a| format!("ds_{a}")));
    let rows: Vec<Vec<String>> = (0..bx.len())
        .map(|i| {
            let x = bx.point(i);
            let mut r: Vec<String> = x[..n].iter().map(|v| num(*v)).collect();
            r.push(num(u.values()[i]));
            r.extend((0..n).map(|a| num(g.component(a).values()[i])));
            r
        })
        .collect();
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let path = out.write_csv("gradient.csv", &cols, &rows)?;
    println!("wrote {}", path.display());
    Ok(Outcome::Success)
}

pub fn verify(suite: Suite, seed: u64, opts: &Options) -> Result<Outcome> {
    let out = out_dir(opts, hash_of(&json!({"command": "verify", "suite": suite, "seed": seed})))?;
    let rows = verify::run(suite, seed)?;
    let cells: Vec<Vec<String>> = rows.iter().map(Row::cells).collect();
    let path = out.write_csv("verify.csv", &Row::COLUMNS, &cells)?;
    let asserted = rows.iter().filter(|r| r.asserted()).count();
    let failed: Vec<&Row> = rows.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        eprintln!("FAIL {}::{} [{}] lhs={:e} rhs={:e}", r.suite, r.check, r.params, r.lhs, r.rhs);
    }
    println!("{} rows, {asserted} asserted, {} failed; wrote {}", rows.len(), failed.len(), path.display());
    Ok(if failed.is_empty() { Outcome::Success } else { Outcome::Violation })
}

fn check_hypotheses(loaded: &LoadedConfig, out: &OutDir, required: bool) -> Result<Option<EllipticityReport>> {
    let cfg = &loaded.config;
    let params = match (cfg.hypotheses, required) {
        (Some(p), _) => p,
        (None, true) => Default::default(),
        (None, false) => return Ok(None),
    };
    let bx = cfg.grid_box()?;
    let cs = CoefficientSet::from_config(&cfg.coefficients, cfg.grid.n)?;
    let report = hypothesis_report(&cs, &cfg.measure, &cfg.omega, &bx, &params)?;
    out.write_json("hypotheses.json", &report)?;
    for f in &report.failures {
        eprintln!("hypothesis violated: {f}");
    }
    Ok(Some(report))
}

pub fn hypotheses(config: &Path, opts: &Options) -> Result<Outcome> {
    let loaded = load(config)?;
    let out = out_dir(opts, loaded.hash.clone())?;
    let report = check_hypotheses(&loaded, &out, true)?.expect("required");
    println!("K_A = {:.6e}; {} failure(s)", report.k_a, report.failures.len());
    Ok(if report.passed() { Outcome::Success } else { Outcome::Violation })
}

fn system(loaded: &LoadedConfig) -> Result<AssembledSystem> {
    let cfg = &loaded.config;
    let ctx = cfg.context()?;
    Ok(assemble(&ctx, cfg.basis_margin_cells)?.with_tolerances(cfg.tolerances.rank, cfg.tolerances.compatibility)?)
}

/// Runs the hypothesis gate when configured; `None` means proceed.
fn gate(loaded: &LoadedConfig, out: &OutDir) -> Result<Option<Outcome>> {
    match check_hypotheses(loaded, out, false)? {
        Some(r) if !r.passed() => Ok(Some(Outcome::Violation)),
        _ => Ok(None),
    }
}

#[derive(Serialize)]
struct SpectrumOutput<'a> {
    basis_size: usize,
    adjoint_defect: f64,
    spectrum: &'a SpectrumReport,
}

fn spectrum_rows(sp: &SpectrumReport) -> Vec<Vec<String>> {
    sp.sigmas.iter().map(|(s, m)| vec![num(*s), m.to_string()]).collect()
}

pub fn spectrum_cmd(config: &Path, opts: &Options) -> Result<Outcome> {
    let loaded = load(config)?;
    let out = out_dir(opts, loaded.hash.clone())?;
    if let Some(o) = gate(&loaded, &out)? {
        return Ok(o);
    }
    let sys = system(&loaded)?;
    let sp = spectrum(&sys, loaded.config.spectrum_count)?;
    out.write_json(
        "spectrum.json",
        &SpectrumOutput { basis_size: sys.len(), adjoint_defect: sys.adjoint_defect, spectrum: &sp },
    )?;
    let path = out.write_csv("spectrum.csv", &["sigma", "multiplicity"], &spectrum_rows(&sp))?;
    println!("{} resonance value(s) below σ₀ = {}; wrote {}", sp.sigmas.len(), sp.sigma0, path.display());
    Ok(Outcome::Success)
}

fn solution_rows(sys: &AssembledSystem, bx: &nonlocal_fredholm::grid::PeriodicBox, x: &[f64]) -> Vec<Vec<String>> {
    let n = bx.dim();
    sys.basis
        .iter()
        .zip(x)
        .map(|(&i, v)| {
            let p = bx.point(i);
            let mut r = vec![i.to_string()];
            r.extend(p[..n].iter().map(|c| num(*c)));
            r.push(num(*v));
            r
        })
        .collect()
}

fn solution_columns(n: usize) -> Vec<String> {
    let mut c = vec!["grid_index".to_string()];
    c.extend((0..n).map(|a| format!("x_{a}")));
    c.push("u".into());
    c
}

#[derive(Serialize)]
struct SweepEntry {
    sigma: f64,
    status: SolveStatus,
    min_singular_value: f64,
    residual: f64,
}

#[derive(Serialize)]
struct SweepOutput {
    sigma0: f64,
    reports: Vec<SolveReport>,
    /// `(σ_k, σ_{k+1}, resonance)` for each bracketed resonance.
    crossings: Vec<(f64, f64, f64)>,
    summary: Vec<SweepEntry>,
}

pub fn solve_cmd(config: &Path, opts: &Options) -> Result<Outcome> {
    let loaded = load(config)?;
    let out = out_dir(opts, loaded.hash.clone())?;
    if let Some(o) = gate(&loaded, &out)? {
        return Ok(o);
    }
    let cfg = &loaded.config;
    let sys = system(&loaded)?;
    let bx = cfg.grid_box()?;
    let g = cfg.rhs_function(&bx, &loaded.base_dir)?;
    let t = cfg.rhs_vector(&g, &sys.basis);
    let sigmas = cfg.sigmas(sys.sigma0);
    let cols = solution_columns(bx.dim());
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    if sigmas.len() == 1 {
        let r = solve(&sys, sigmas[0], &t)?;
        out.write_json("solve.json", &r)?;
        if let Some(x) = &r.solution {
            out.write_csv("solution.csv", &cols, &solution_rows(&sys, &bx, x))?;
        }
        println!("σ = {}: {:?}", r.sigma, r.status);
        return Ok(if r.status == SolveStatus::Incompatible { Outcome::Incompatible } else { Outcome::Success });
    }
    let sp = spectrum(&sys, None)?;
    let reports = sigmas.iter().map(|&s| solve(&sys, s, &t)).collect::<nonlocal_fredholm::Result<Vec<_>>>()?;
    let summary: Vec<SweepEntry> = reports
        .iter()
        .map(|r| SweepEntry {
            sigma: r.sigma,
            status: r.status,
            min_singular_value: r.min_singular_value,
            residual: r.residual,
        })
        .collect();
    let rows: Vec<Vec<String>> = summary
        .iter()
        .map(|e| vec![num(e.sigma), format!("{:?}", e.status), num(e.min_singular_value), num(e.residual)])
        .collect();
    out.write_csv("solve_sweep.csv", &["sigma", "status", "min_singular_value", "residual"], &rows)?;
    let incompatible = reports.iter().any(|r| r.status == SolveStatus::Incompatible);
    let crossings = sweep_crossings(&sigmas, &sp);
    println!("{} shifts, {} resonance crossing(s)", sigmas.len(), crossings.len());
    out.write_json("solve_sweep.json", &SweepOutput { sigma0: sys.sigma0, reports, crossings, summary })?;
    Ok(if incompatible { Outcome::Incompatible } else { Outcome::Success })
}

#[derive(Serialize)]
struct Demo {
    basis_size: usize,
    sigma0: f64,
    spectrum: SpectrumReport,
    above_sigma0: SolveReport,
    resonant_compatible: Option<SolveReport>,
    resonant_incompatible: Option<SolveReport>,
}

/// Spectrum, a solve at `σ₀ + 1`, and at the largest resonance one
/// compatible and one incompatible solve.
pub fn fredholm_demo(config: &Path, opts: &Options) -> Result<Outcome> {
    let loaded = load(config)?;
    let out = out_dir(opts, loaded.hash.clone())?;
    if let Some(o) = gate(&loaded, &out)? {
        return Ok(o);
    }
    let cfg = &loaded.config;
    let sys = system(&loaded)?;
    let bx = cfg.grid_box()?;
    let t = cfg.rhs_vector(&cfg.rhs_function(&bx, &loaded.base_dir)?, &sys.basis);
    let sp = spectrum(&sys, Some(cfg.spectrum_count.unwrap_or(3)))?;
    let above = solve(&sys, sys.sigma0 + 1.0, &t)?;
    let (mut compatible, mut incompatible) = (None, None);
    if let Some(&(sigma, _)) = sp.sigmas.last() {
        let probe = solve(&sys, sigma, &t)?;
        compatible = Some(solve(&sys, sigma, &project_out(&t, &probe.adjoint_kernel_basis))?);
        if let Some(u) = probe.adjoint_kernel_basis.first() {
            incompatible = Some(solve(&sys, sigma, u)?);
        }
    }
    println!("σ₀ + 1: {:?}; {} resonance value(s) reported", above.status, sp.sigmas.len());
    out.write_json(
        "demo.json",
        &Demo {
            basis_size: sys.len(),
            sigma0: sys.sigma0,
            spectrum: sp,
            above_sigma0: above,
            resonant_compatible: compatible,
            resonant_incompatible: incompatible,
        },
    )?;
    Ok(Outcome::Success)
}
