//! Configuration-driven runs of the Camassa-Holm solver, writing grid data
//! as CSV and diagnostics as JSON.

pub mod config;

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ch_theta::ch::{
    ch_setup, detect_cusps, estimate_velocity, genus_one_velocity, solve_grid, CHParams, NodeKind, Preset,
    SolutionField,
};
use ch_theta::fay::fay_residuals_batch;
use ch_theta::validate::{halfperiod_check, m_identity_residual, pde_residual};
use ch_theta::{build_curve, Surface};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::RunConfig;
use config::{CharacteristicsConfig, DConfig};

/// Residuals above this level are reported as warnings.
pub const RESIDUAL_WARNING: f64 = 1e-6;

pub const CSV_HEADER: &str = "t,y,x,u,ux,uxx,m,cusp";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Periods,
    CheckFay,
    CheckPde,
}

fn c2(z: C) -> [f64; 2] {
    [z.re, z.im]
}

fn cvec(v: &[C]) -> Vec<[f64; 2]> {
    v.iter().copied().map(c2).collect()
}

fn cmat(m: &DMatrix<C>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| c2(m[(i, j)])).collect()).collect()
}

fn bits(v: &[f64]) -> Vec<u8> {
    v.iter().map(|&d| u8::from(d != 0.0)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodSummary {
    pub genus: usize,
    pub riemann: Vec<Vec<[f64; 2]>>,
    pub normalization: Vec<Vec<[f64; 2]>>,
    pub condition: f64,
    pub b_orientation: f64,
    pub symmetry: f64,
    pub max_re_eigenvalue: f64,
    pub a_normalization: f64,
    pub imag_lattice: f64,
    pub halfperiod: f64,
    pub degenerate_cuts: Vec<usize>,
    pub max_quadrature_nodes: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FaySummary {
    pub samples: usize,
    pub seed: u64,
    pub fay1: f64,
    pub fay2: f64,
    pub ch1: f64,
    pub ch2: f64,
    pub q_identity: f64,
}

impl FaySummary {
    pub fn max(&self) -> f64 {
        [self.fay1, self.fay2, self.ch1, self.ch2, self.q_identity].into_iter().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PdeSummary {
    pub residual: f64,
    pub m_identity: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RealitySummary {
    pub x: f64,
    pub u: f64,
    pub ux: f64,
    pub uxx: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CuspSummary {
    pub t: f64,
    pub y0: f64,
    pub x0: f64,
    pub u0: f64,
    pub exponent: f64,
    pub uy_sign_change: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionSummary {
    pub characteristic: CharacteristicsConfig,
    pub alpha1: [f64; 2],
    pub alpha2: [f64; 2],
    pub r: Vec<[f64; 2]>,
    pub d: Vec<[f64; 2]>,
    pub zeta: [f64; 2],
    pub vb: Vec<[f64; 2]>,
    pub ve: Vec<[f64; 2]>,
    pub p1: [f64; 2],
    pub p2: [f64; 2],
    pub p1_tilde: [f64; 2],
    pub p2_tilde: [f64; 2],
    pub q2_tilde: [f64; 2],
}

/// JSON sidecar of a `solve` run.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub version: &'static str,
    pub config_digest: String,
    pub config: RunConfig,
    pub periods: PeriodSummary,
    pub solution: SolutionSummary,
    pub reality: RealitySummary,
    pub fay: Option<FaySummary>,
    pub pde: Option<PdeSummary>,
    pub cusps: Vec<CuspSummary>,
    /// Comoving-frame speed between the first and last time slices.
    pub velocity: Option<f64>,
    /// Closed-form speed for genus 1.
    pub velocity_exact: Option<f64>,
    pub warnings: Vec<String>,
    pub csv_path: String,
}

/// Config with defaults made explicit, as echoed into the metadata.
pub fn resolved_config(cfg: &RunConfig, genus: usize) -> RunConfig {
    let mut c = cfg.clone();
    if c.d.is_none() {
        let ch = cfg.preset().default_characteristics(genus);
        c.d = Some(DConfig::Characteristics(CharacteristicsConfig { b1: bits(&ch.delta1), b2: bits(&ch.delta2) }));
    }
    c
}

pub fn config_digest(cfg: &RunConfig) -> Result<String> {
    let text = serde_json::to_string(cfg)?;
    let hash = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(64);
    for b in hash {
        write!(out, "{b:02x}")?;
    }
    Ok(out)
}

pub fn build_surface(cfg: &RunConfig) -> Result<Surface> {
    let curve = build_curve(&cfg.branch_points, cfg.degeneracy_threshold).context("building the curve")?;
    Surface::new(curve, cfg.quad_config()).context("computing periods")
}

pub fn build_params(cfg: &RunConfig) -> Result<CHParams> {
    let surface = build_surface(cfg)?;
    let g = surface.genus();
    ch_setup(surface, &cfg.ch_config(g)?).context("setting up the solution")
}

pub fn period_summary(surface: &Surface) -> Result<PeriodSummary> {
    let p = &surface.periods;
    let res = p.residuals();
    Ok(PeriodSummary {
        genus: surface.genus(),
        riemann: cmat(&p.riemann),
        normalization: cmat(&p.normalization),
        condition: p.quadrature_report.condition,
        b_orientation: p.quadrature_report.b_orientation,
        symmetry: res.symmetry,
        max_re_eigenvalue: res.max_re_eigenvalue,
        a_normalization: res.normalization,
        imag_lattice: res.imag_lattice,
        halfperiod: halfperiod_check(surface).context("half-period check")?,
        degenerate_cuts: surface.curve.degenerate_cuts().to_vec(),
        max_quadrature_nodes: p.quadrature_report.stats.iter().map(|s| s.nodes).max().unwrap_or(0),
    })
}

fn solution_summary(p: &CHParams) -> SolutionSummary {
    let s = &p.scalars;
    SolutionSummary {
        characteristic: CharacteristicsConfig { b1: bits(&p.fay.delta.delta1), b2: bits(&p.fay.delta.delta2) },
        alpha1: c2(p.alpha1),
        alpha2: c2(p.alpha2),
        r: cvec(&p.r),
        d: cvec(&p.d),
        zeta: c2(p.zeta),
        vb: cvec(p.vb()),
        ve: cvec(p.ve()),
        p1: c2(s.p1),
        p2: c2(s.p2),
        p1_tilde: c2(s.p1t),
        p2_tilde: c2(s.p2t),
        q2_tilde: c2(s.q2t),
    }
}

/// Random real arguments in `[-2, 2]^g` from a seeded generator.
pub fn sample_points(genus: usize, n: usize, seed: u64) -> Vec<Vec<C>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..genus).map(|_| C::new(rng.random_range(-2.0..2.0), 0.0)).collect()).collect()
}

pub fn fay_summary(p: &CHParams, samples: usize, seed: u64) -> Result<FaySummary> {
    let zs = sample_points(p.genus(), samples, seed);
    let r = fay_residuals_batch(&p.fay, &zs, &p.a, &p.b, &p.e).context("Fay residuals")?;
    Ok(FaySummary {
        samples,
        seed,
        fay1: r.fay1,
        fay2: r.fay2,
        ch1: r.ch1,
        ch2: r.ch2,
        q_identity: p.scalars.q_identity_residual(),
    })
}

pub fn pde_summary(field: &SolutionField) -> Result<PdeSummary> {
    Ok(PdeSummary {
        residual: pde_residual(field).context("PDE residual")?,
        m_identity: m_identity_residual(field).context("m identity")?,
    })
}

fn reality_summary(field: &SolutionField) -> RealitySummary {
    let r = field.reality;
    RealitySummary { x: r.x, u: r.u, ux: r.ux, uxx: r.uxx, m: r.m }
}

/// Writes the field as `t,y,x,u,ux,uxx,m,cusp` rows, `t`-major, with 17
/// significant digits.
pub fn write_csv(field: &SolutionField) -> String {
    let mut out = String::with_capacity(field.t.len() * field.y.len() * 190);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (it, &t) in field.t.iter().enumerate() {
        for (iy, &y) in field.y.iter().enumerate() {
            let vals = [t, y, field.x[it][iy], field.u[it][iy], field.ux[it][iy], field.uxx[it][iy], field.m[it][iy]];
            for v in vals {
                let _ = write!(out, "{v:.16e},");
            }
            out.push(if field.cusp[it][iy] { '1' } else { '0' });
            out.push('\n');
        }
    }
    out
}

fn warn_if(warnings: &mut Vec<String>, what: &str, value: f64) {
    if value.partial_cmp(&RESIDUAL_WARNING) != Some(Ordering::Less) {
        warnings.push(format!("{what} residual {value:e} exceeds {RESIDUAL_WARNING:e}"));
    }
}

fn velocity(p: &CHParams, field: &SolutionField) -> Result<Option<f64>> {
    if p.preset == Preset::Smooth && p.genus() > 1 {
        return Ok(None);
    }
    if field.t.len() < 2 {
        return Ok(None);
    }
    let (y0, y1) = (field.y[0], field.y[field.y.len() - 1]);
    let len = y1 - y0;
    let inner = (y0 + 0.25 * len, y1 - 0.25 * len);
    let bracket = (y0 - len, y1 + len);
    let v = estimate_velocity(p, field.t[0], field.t[field.t.len() - 1], inner, bracket, 64)
        .context("velocity estimate")?;
    Ok(Some(v))
}

/// Everything a `solve` run produces, before it is written out.
pub struct SolveOutput {
    pub csv: String,
    pub metadata: Metadata,
}

pub fn solve(cfg: &RunConfig) -> Result<SolveOutput> {
    let p = build_params(cfg)?;
    let g = p.genus();
    let field = solve_grid(&p, &cfg.grid_spec()).context("evaluating the grid")?;
    let mut warnings = p.warnings.clone();
    let periods = period_summary(&p.surface)?;
    warn_if(&mut warnings, "half-period", periods.halfperiod);

    let fay = if cfg.checks.fay {
        let f = fay_summary(&p, cfg.checks.samples, cfg.checks.seed)?;
        warn_if(&mut warnings, "Fay", f.max());
        Some(f)
    } else {
        None
    };

    let pde = if cfg.checks.pde {
        if p.preset == Preset::Cusped || field.node_kind != NodeKind::Chebyshev {
            warnings.push("PDE check skipped: it needs a smooth field on Chebyshev nodes".into());
            None
        } else {
            let s = pde_summary(&field)?;
            warn_if(&mut warnings, "PDE", s.residual);
            warn_if(&mut warnings, "m identity", s.m_identity);
            Some(s)
        }
    } else {
        None
    };

    let cusps = if p.preset == Preset::Cusped {
        let t = field.t[0];
        let ny = (4 * field.y.len()).max(200);
        detect_cusps(&p, t, (field.y[0], field.y[field.y.len() - 1]), ny)
            .context("cusp detection")?
            .into_iter()
            .map(|c| CuspSummary {
                t,
                y0: c.y0,
                x0: c.x0,
                u0: c.u0,
                exponent: c.exponent,
                uy_sign_change: c.uy_sign_change,
            })
            .collect()
    } else {
        Vec::new()
    };

    let echo = resolved_config(cfg, g);
    let outputs = echo
        .outputs
        .clone()
        .unwrap_or_else(|| config::Outputs { csv_path: "run.csv".into(), meta_path: "run.json".into() });
    let metadata = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        config_digest: config_digest(&echo)?,
        config: echo,
        periods,
        solution: solution_summary(&p),
        reality: reality_summary(&field),
        fay,
        pde,
        cusps,
        velocity: velocity(&p, &field)?,
        velocity_exact: if g == 1 { Some(genus_one_velocity(&p)?) } else { None },
        warnings,
        csv_path: outputs.csv_path,
    };
    Ok(SolveOutput { csv: write_csv(&field), metadata })
}

#[derive(Debug, Clone, Serialize)]
pub struct FayReport {
    pub characteristic: CharacteristicsConfig,
    pub residuals: FaySummary,
    pub warnings: Vec<String>,
}

pub fn check_fay(cfg: &RunConfig) -> Result<FayReport> {
    let p = build_params(cfg)?;
    let residuals = fay_summary(&p, cfg.checks.samples, cfg.checks.seed)?;
    let mut warnings = p.warnings.clone();
    warn_if(&mut warnings, "Fay", residuals.max());
    Ok(FayReport { characteristic: solution_summary(&p).characteristic, residuals, warnings })
}

#[derive(Debug, Clone, Serialize)]
pub struct PdeReport {
    pub pde: PdeSummary,
    pub reality: RealitySummary,
    pub halfperiod: f64,
    pub warnings: Vec<String>,
}

pub fn check_pde(cfg: &RunConfig) -> Result<PdeReport> {
    let p = build_params(cfg)?;
    let field = solve_grid(&p, &cfg.grid_spec()).context("evaluating the grid")?;
    let pde = pde_summary(&field)?;
    let halfperiod = halfperiod_check(&p.surface)?;
    let mut warnings = p.warnings.clone();
    warn_if(&mut warnings, "PDE", pde.residual);
    warn_if(&mut warnings, "m identity", pde.m_identity);
    warn_if(&mut warnings, "half-period", halfperiod);
    Ok(PdeReport { pde, reality: reality_summary(&field), halfperiod, warnings })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Periods => "periods",
            Command::CheckFay => "check-fay",
            Command::CheckPde => "check-pde",
        }
    }
}

/// Runs one subcommand and returns the JSON text for stdout. `solve` writes
/// its CSV and metadata into `out_dir` (default `.`); the reporting commands
/// also save `<stem>.<command>.json` there when a directory is given.
pub fn run(command: Command, config_path: &Path, out_dir: Option<&Path>) -> Result<String> {
    let cfg = RunConfig::load(config_path)?;
    let report = match command {
        Command::Solve => {
            let dir = out_dir.unwrap_or(Path::new("."));
            let out = solve(&cfg)?;
            let outputs = cfg.outputs.as_ref().expect("load fills outputs");
            let csv = write_file(dir, &outputs.csv_path, &out.csv)?;
            let meta_text = serde_json::to_string_pretty(&out.metadata)?;
            let meta = write_file(dir, &outputs.meta_path, &meta_text)?;
            return Ok(serde_json::to_string_pretty(&serde_json::json!({
                "csv": csv,
                "metadata": meta,
                "warnings": out.metadata.warnings,
            }))?);
        }
        Command::Periods => serde_json::to_string_pretty(&period_summary(&build_surface(&cfg)?)?)?,
        Command::CheckFay => serde_json::to_string_pretty(&check_fay(&cfg)?)?,
        Command::CheckPde => serde_json::to_string_pretty(&check_pde(&cfg)?)?,
    };
    if let Some(dir) = out_dir {
        let stem = config_path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        write_file(dir, &format!("{stem}.{}.json", command.name()), &report)?;
    }
    Ok(report)
}
