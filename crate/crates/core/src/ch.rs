//! Theta-functional solutions of `m_t + u m_x + 2 m u_x = 0`,
//! `m = u - u_xx + k`, in the parametric form
//!
//! `x + alpha1 y + alpha2 t + zeta = ln(Theta(Z - d + r/2) / Theta(Z - d - r/2))`,
//! `u = D_b ln(Theta(Z - d + r/2) / Theta(Z - d - r/2)) - alpha2`,
//!
//! with `Z = V_e y + V_b t`, `b = sigma(a)` and `e` a branch point.

use num_complex::Complex64;
use rayon::prelude::*;
use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::curve::{Location, SurfacePoint};
use crate::error::{Error, Result};
use crate::fay::{between, ChScalars, FayContext, Marked};
use crate::periods::Surface;
use crate::theta::{char_to_shift, ratio, Characteristics, Jet, Scaled, ThetaContext};

type C = Complex64;

/// Tolerance on imaginary parts of quantities that must be real.
pub const REALITY_TOL: f64 = 1e-8;
/// `|Theta(Z - d)|` below this fraction of `sqrt|Theta(Z-d+r/2) Theta(Z-d-r/2)|`
/// marks a cusp.
pub const CUSP_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Smooth,
    Cusped,
}

impl Preset {
    /// Characteristics of the default shift `d`: `1/2 [1..1; 0..0]` for smooth
    /// solutions, `1/2 [1..1; 1..1]` for cusped ones.
    pub fn default_characteristics(self, g: usize) -> Characteristics {
        let d2 = match self {
            Preset::Smooth => vec![0.0; g],
            Preset::Cusped => vec![0.5; g],
        };
        Characteristics { delta1: vec![0.5; g], delta2: d2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DSpec {
    Characteristics(Characteristics),
    Vector(Vec<C>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChConfig {
    pub a: SurfacePoint,
    pub e_index: usize,
    pub d: DSpec,
    pub k: f64,
    pub zeta_re: f64,
    pub preset: Preset,
    pub theta_eps: f64,
}

/// Frozen constants of one solution.
#[derive(Debug, Clone)]
pub struct CHParams {
    pub surface: Surface,
    pub fay: FayContext,
    pub a: Marked,
    pub b: Marked,
    pub e: Marked,
    pub d: Vec<C>,
    pub k: f64,
    pub zeta: C,
    pub r: Vec<C>,
    pub alpha1: C,
    pub alpha2: C,
    pub scalars: ChScalars,
    pub preset: Preset,
    pub warnings: Vec<String>,
}

impl CHParams {
    pub fn theta(&self) -> &ThetaContext {
        &self.fay.theta
    }

    pub fn genus(&self) -> usize {
        self.surface.genus()
    }

    pub fn vb(&self) -> &[C] {
        &self.b.v
    }

    pub fn ve(&self) -> &[C] {
        &self.e.v
    }
}

fn shifted(z: &[C], w: &[C], s: f64) -> Vec<C> {
    z.iter().zip(w).map(|(a, b)| a + b * s).collect()
}

fn wrap(phase: f64) -> f64 {
    let mut p = phase % (2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    } else if p <= -PI {
        p += 2.0 * PI;
    }
    p
}

pub fn ch_setup(surface: Surface, cfg: &ChConfig) -> Result<CHParams> {
    let curve = &surface.curve;
    let g = curve.genus();
    let n = curve.branch_points().len();
    if cfg.e_index >= n {
        return Err(Error::BranchIndexOutOfRange { index: cfg.e_index, count: n });
    }
    let a_pt = match cfg.a {
        SurfacePoint::Regular { lambda, .. } => {
            if lambda.im != 0.0 {
                return Err(Error::NotMCurve("a must lie on a real oval".into()));
            }
            match curve.locate(lambda.re) {
                Location::Gap(_) => cfg.a,
                Location::Cut(_) => return Err(Error::NotMCurve("a lies on a cut, not on a real oval".into())),
                Location::Branch(_) => return Err(Error::UntaggedBranchPoint(lambda.re)),
            }
        }
        SurfacePoint::Branch(_) => return Err(Error::InvalidInput("a must not be a branch point".into())),
    };
    if !cfg.k.is_finite() || !cfg.zeta_re.is_finite() {
        return Err(Error::InvalidInput("k and Re zeta must be finite".into()));
    }
    let e_pt = SurfacePoint::branch(cfg.e_index);
    let a = Marked::new(&surface, a_pt, e_pt)?;
    let b = Marked::new(&surface, a_pt.sigma(), e_pt)?;
    let e = Marked::new(&surface, e_pt, e_pt)?;
    let theta = ThetaContext::new(surface.riemann(), cfg.theta_eps)?;
    let fay = FayContext::select(theta, &[&a, &b, &e])?;
    let scalars = ChScalars::new(&fay, &a, &b, &e)?;
    let r = between(&a, &b);
    let d = match &cfg.d {
        DSpec::Characteristics(ch) => {
            if ch.genus() != g {
                return Err(Error::InvalidInput(format!("characteristics of genus {} for genus {g}", ch.genus())));
            }
            char_to_shift(ch, surface.riemann())
        }
        DSpec::Vector(v) => {
            if v.len() != g {
                return Err(Error::InvalidInput(format!("d has {} entries for genus {g}", v.len())));
            }
            v.clone()
        }
    };
    let alpha1 = scalars.p1;
    let alpha2 = 2.0 * scalars.p1t + cfg.k;

    let zero = Characteristics::zero(g);
    let minus_d: Vec<C> = d.iter().map(|z| -z).collect();
    let tp = fay.theta.theta(&shifted(&minus_d, &r, 0.5), &zero)?;
    let tm = fay.theta.theta(&shifted(&minus_d, &r, -0.5), &zero)?;
    if tp.value.norm() == 0.0 {
        return Err(Error::SingularDenominatorOnProbe("Theta(-d + r/2)"));
    }
    if tm.value.norm() == 0.0 {
        return Err(Error::SingularDenominatorOnProbe("Theta(-d - r/2)"));
    }
    let h0 = ratio(tp, tm);
    let zeta = C::new(cfg.zeta_re, h0.arg());

    let mut warnings = Vec::new();
    for (name, v) in [("alpha1", alpha1), ("alpha2", alpha2)] {
        if v.im.abs() > REALITY_TOL * v.norm().max(1.0) {
            warnings.push(format!("{name} has imaginary part {:e}", v.im));
        }
    }
    Ok(CHParams { surface, fay, a, b, e, d, k: cfg.k, zeta, r, alpha1, alpha2, scalars, preset: cfg.preset, warnings })
}

/// Solution values at one `(y, t)`; complex before realification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub x: C,
    pub u: C,
    pub ux: C,
    pub uxx: C,
    pub m: C,
    /// `dx/dy = p2 Theta(Z-d)^2 / (Theta(Z-d+r/2) Theta(Z-d-r/2))`
    pub xy: C,
    pub cusp: bool,
}

struct Jets {
    plus: Jet,
    minus: Jet,
    mid: Jet,
}

fn jets(p: &CHParams, y: f64, t: f64) -> Result<Jets> {
    let zero = Characteristics::zero(p.genus());
    let z: Vec<C> = (0..p.genus()).map(|i| p.ve()[i] * y + p.vb()[i] * t - p.d[i]).collect();
    let dirs: [&[C]; 2] = [p.vb(), p.ve()];
    let th = p.theta();
    Ok(Jets {
        plus: th.jet(&shifted(&z, &p.r, 0.5), &zero, &dirs, false)?,
        minus: th.jet(&shifted(&z, &p.r, -0.5), &zero, &dirs, false)?,
        mid: th.jet(&z, &zero, &dirs, false)?,
    })
}

fn product(a: Scaled, b: Scaled) -> Scaled {
    Scaled { log_scale: a.log_scale + b.log_scale, value: a.value * b.value }
}

/// `x(y, t)` as a complex number; its imaginary part measures the violation
/// of the reality recipe.
fn x_complex(p: &CHParams, j: &Jets, y: f64, t: f64) -> C {
    let h = ratio(j.plus.scaled(), j.minus.scaled());
    let ln_h = C::new(h.norm().ln(), wrap(h.arg() - p.zeta.im) + p.zeta.im);
    ln_h - p.alpha1 * y - p.alpha2 * t - p.zeta
}

pub fn x_of(p: &CHParams, y: f64, t: f64) -> Result<f64> {
    let j = jets(p, y, t)?;
    let x = x_complex(p, &j, y, t);
    if x.im.abs() >= REALITY_TOL {
        return Err(Error::NonRealX { y, t, imag: x.im.abs() });
    }
    Ok(x.re)
}

/// All solution fields at `(y, t)`.
pub fn point_value(p: &CHParams, y: f64, t: f64) -> Result<PointValue> {
    let j = jets(p, y, t)?;
    let x = x_complex(p, &j, y, t);
    let s = &p.scalars;
    let dq = j.plus.dlog(0) - j.minus.dlog(0);
    let u = dq - p.alpha2;
    let pm = product(j.plus.scaled(), j.minus.scaled());
    let mm = product(j.mid.scaled(), j.mid.scaled());
    let g1g2 = ratio(pm, mm);
    let cusp =
        j.mid.value.norm() * (j.mid.log_scale - 0.5 * pm.log_scale).exp() < CUSP_THRESHOLD * pm.value.norm().sqrt();
    let ux = -(j.plus.dlog(0) + j.minus.dlog(0) - 2.0 * j.mid.dlog(0));
    let m = 2.0 * s.p2t * g1g2 * g1g2;
    let uxx = dq - 2.0 * s.p1t - m;
    let xy = s.p2 * ratio(mm, pm);
    Ok(PointValue { x, u, ux, uxx, m, xy, cusp })
}

/// `(u, u_x, u_xx, m, cusp)` at `(y, t)`.
pub fn u_of(p: &CHParams, y: f64, t: f64) -> Result<(f64, f64, f64, f64, bool)> {
    let v = point_value(p, y, t)?;
    Ok((v.u.re, v.ux.re, v.uxx.re, v.m.re, v.cusp))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Uniform,
    Chebyshev,
}

/// `n` nodes on `[lo, hi]`, increasing; Chebyshev nodes are the Gauss-Lobatto
/// points.
pub fn nodes(lo: f64, hi: f64, n: usize, kind: NodeKind) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let m = (n - 1) as f64;
    (0..n)
        .map(|j| match kind {
            NodeKind::Uniform => lo + (hi - lo) * j as f64 / m,
            NodeKind::Chebyshev => {
                let s = 0.5 * (1.0 - (PI * j as f64 / m).cos());
                lo + (hi - lo) * s
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub y0: f64,
    pub y1: f64,
    pub ny: usize,
    pub t0: f64,
    pub t1: f64,
    pub nt: usize,
    pub node_kind: NodeKind,
}

/// Maximum `|Im| / max(1, |Re|)` per field before realification.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RealityReport {
    pub x: f64,
    pub u: f64,
    pub ux: f64,
    pub uxx: f64,
    pub m: f64,
}

impl RealityReport {
    pub fn max(&self) -> f64 {
        [self.x, self.u, self.ux, self.uxx, self.m].into_iter().fold(0.0, f64::max)
    }
}

/// Fields on a `(t, y)` grid; matrices are indexed `[t][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub y: Vec<f64>,
    pub t: Vec<f64>,
    pub node_kind: NodeKind,
    pub x: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub ux: Vec<Vec<f64>>,
    pub uxx: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
    pub cusp: Vec<Vec<bool>>,
    pub reality: RealityReport,
    pub preset: Preset,
    pub k: f64,
}

fn imag_ratio(z: C) -> f64 {
    if z.is_finite() {
        z.im.abs() / z.re.abs().max(1.0)
    } else {
        0.0
    }
}

pub fn solve_grid(p: &CHParams, grid: &GridSpec) -> Result<SolutionField> {
    if grid.ny < 2 || grid.nt < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 nodes per axis".into()));
    }
    if grid.y0.partial_cmp(&grid.y1) != Some(Ordering::Less) || grid.t0.partial_cmp(&grid.t1) != Some(Ordering::Less) {
        return Err(Error::InvalidInput("grid bounds must be increasing".into()));
    }
    let ys = nodes(grid.y0, grid.y1, grid.ny, grid.node_kind);
    let ts = nodes(grid.t0, grid.t1, grid.nt, grid.node_kind);
    let vals: Vec<PointValue> = (0..grid.nt * grid.ny)
        .into_par_iter()
        .map(|idx| point_value(p, ys[idx % grid.ny], ts[idx / grid.ny]))
        .collect::<Result<_>>()?;
    let mut reality = RealityReport::default();
    let mut field = SolutionField {
        y: ys.clone(),
        t: ts.clone(),
        node_kind: grid.node_kind,
        x: vec![vec![0.0; grid.ny]; grid.nt],
        u: vec![vec![0.0; grid.ny]; grid.nt],
        ux: vec![vec![0.0; grid.ny]; grid.nt],
        uxx: vec![vec![0.0; grid.ny]; grid.nt],
        m: vec![vec![0.0; grid.ny]; grid.nt],
        cusp: vec![vec![false; grid.ny]; grid.nt],
        reality,
        preset: p.preset,
        k: p.k,
    };
    for (idx, v) in vals.iter().enumerate() {
        let (it, iy) = (idx / grid.ny, idx % grid.ny);
        if v.x.im.abs() >= REALITY_TOL {
            return Err(Error::NonRealX { y: ys[iy], t: ts[it], imag: v.x.im.abs() });
        }
        reality.x = reality.x.max(v.x.im.abs());
        reality.u = reality.u.max(imag_ratio(v.u));
        if !v.cusp {
            reality.ux = reality.ux.max(imag_ratio(v.ux));
            reality.uxx = reality.uxx.max(imag_ratio(v.uxx));
            reality.m = reality.m.max(imag_ratio(v.m));
        }
        field.x[it][iy] = v.x.re;
        field.u[it][iy] = v.u.re;
        field.ux[it][iy] = v.ux.re;
        field.uxx[it][iy] = v.uxx.re;
        field.m[it][iy] = v.m.re;
        field.cusp[it][iy] = v.cusp;
    }
    field.reality = reality;
    Ok(field)
}

/// Imaginary parts of all fields on a grid without the `NonRealX` guard.
pub fn reality_probe(p: &CHParams, grid: &GridSpec) -> Result<RealityReport> {
    let ys = nodes(grid.y0, grid.y1, grid.ny, grid.node_kind);
    let ts = nodes(grid.t0, grid.t1, grid.nt, grid.node_kind);
    let mut rep = RealityReport::default();
    for &t in &ts {
        for &y in &ys {
            let v = point_value(p, y, t)?;
            rep.x = rep.x.max(v.x.im.abs());
            rep.u = rep.u.max(imag_ratio(v.u));
            rep.ux = rep.ux.max(imag_ratio(v.ux));
            rep.uxx = rep.uxx.max(imag_ratio(v.uxx));
            rep.m = rep.m.max(imag_ratio(v.m));
        }
    }
    Ok(rep)
}

/// Solves `x(y, t) = x_target` for `y` in `bracket`.
pub fn invert_x(p: &CHParams, t: f64, x_target: f64, bracket: (f64, f64)) -> Result<f64> {
    if p.preset == Preset::Cusped {
        return Err(Error::NonMonotone);
    }
    let (mut lo, mut hi) = bracket;
    let mut flo = x_of(p, lo, t)? - x_target;
    let fhi = x_of(p, hi, t)? - x_target;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NotBracketed(x_target));
    }
    // bisection steps interleaved with secant steps kept inside the bracket
    let mut fh = fhi;
    for it in 0..200 {
        let mut y = if it % 2 == 0 { hi - fh * (hi - lo) / (fh - flo) } else { 0.5 * (lo + hi) };
        if !(y > lo && y < hi) {
            y = 0.5 * (lo + hi);
        }
        let f = x_of(p, y, t)? - x_target;
        if f == 0.0 {
            return Ok(y);
        }
        if f.signum() == flo.signum() {
            lo = y;
            flo = f;
        } else {
            hi = y;
            fh = f;
        }
        if hi - lo <= 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    Ok(if flo.abs() < fh.abs() { lo } else { hi })
}

/// A detected cusp on a `t`-slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cusp {
    pub y0: f64,
    pub x0: f64,
    pub u0: f64,
    /// Least-squares slope of `ln|u - u0|` against `ln|x - x0|`.
    pub exponent: f64,
    /// `u(y) - u0` has the same sign on both sides, i.e. `u_y` changes sign.
    pub uy_sign_change: bool,
}

/// Real value of `Theta(Z - d)` up to a fixed phase.
fn theta_mid(p: &CHParams, y: f64, t: f64, phase: C) -> Result<f64> {
    let z: Vec<C> = (0..p.genus()).map(|i| p.ve()[i] * y + p.vb()[i] * t - p.d[i]).collect();
    let s = p.theta().theta(&z, &Characteristics::zero(p.genus()))?;
    Ok((s.value * phase).re * s.log_scale.exp().min(f64::MAX))
}

/// Zeros of `Theta(Z - d)` along `y` with the local exponent of
/// `u - u0 ~ (x - x0)^s`.
pub fn detect_cusps(p: &CHParams, t: f64, y_range: (f64, f64), ny: usize) -> Result<Vec<Cusp>> {
    let ys = nodes(y_range.0, y_range.1, ny.max(2), NodeKind::Uniform);
    let z0: Vec<C> = (0..p.genus()).map(|i| p.ve()[i] * ys[0] + p.vb()[i] * t - p.d[i]).collect();
    let s0 = p.theta().theta(&z0, &Characteristics::zero(p.genus()))?;
    let phase = if s0.value.norm() > 0.0 { s0.value.conj() / s0.value.norm() } else { C::new(1.0, 0.0) };
    let vals: Vec<f64> = ys.iter().map(|&y| theta_mid(p, y, t, phase)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for w in 0..ys.len() - 1 {
        let (fa, fb) = (vals[w], vals[w + 1]);
        if fa == 0.0 || fa.signum() == fb.signum() {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (ys[w], ys[w + 1], fa);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f = theta_mid(p, mid, t, phase)?;
            if f == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if f.signum() == flo.signum() {
                lo = mid;
                flo = f;
            } else {
                hi = mid;
            }
        }
        let y0 = 0.5 * (lo + hi);
        let c0 = point_value(p, y0, t)?;
        let (x0, u0) = (c0.x.re, c0.u.re);
        let mut lx = Vec::new();
        let mut lu = Vec::new();
        let mut side_sign = [0.0f64; 2];
        for (si, side) in [-1.0, 1.0].into_iter().enumerate() {
            for k in 0..=10 {
                let dy = 10f64.powf(-3.0 + 0.1 * k as f64) * side;
                let v = point_value(p, y0 + dy, t)?;
                let (dx, du) = (v.x.re - x0, v.u.re - u0);
                if dx != 0.0 && du != 0.0 {
                    lx.push(dx.abs().ln());
                    lu.push(du.abs().ln());
                }
                if k == 10 {
                    side_sign[si] = du.signum();
                }
            }
        }
        let n = lx.len() as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let mu = lu.iter().sum::<f64>() / n;
        let sxy: f64 = lx.iter().zip(&lu).map(|(a, b)| (a - mx) * (b - mu)).sum();
        let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
        out.push(Cusp {
            y0,
            x0,
            u0,
            exponent: sxy / sxx,
            uy_sign_change: side_sign[0] == side_sign[1] && side_sign[0] != 0.0,
        });
    }
    Ok(out)
}

/// Mean-square mismatch between `u(., t1)` at `xs` and `u(. - shift, t0)`,
/// found by exact inversion of `x(y, t0)`.
fn shift_mismatch(p: &CHParams, t0: f64, samples: &[(f64, f64)], bracket: (f64, f64), shift: f64) -> Result<f64> {
    let errs: Vec<f64> = samples
        .par_iter()
        .map(|&(x1, u1)| -> Result<f64> {
            let y = invert_x(p, t0, x1 - shift, bracket)?;
            let (u0, ..) = u_of(p, y, t0)?;
            Ok((u1 - u0) * (u1 - u0))
        })
        .collect::<Result<_>>()?;
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Velocity `v` with `u(x, t1) = u(x - v (t1 - t0), t0)`: a coarse
/// cross-correlation over sampled slices followed by golden-section
/// refinement of the exact mismatch (of the sampled one for cusped
/// solutions). Among equally good shifts the smallest is taken, so periodic
/// profiles resolve `v` modulo period over `t1 - t0`. `y_inner` holds the `t1` sample
/// positions; `y_bracket` must contain every shifted preimage on `t0`.
pub fn estimate_velocity(
    p: &CHParams,
    t0: f64,
    t1: f64,
    y_inner: (f64, f64),
    y_bracket: (f64, f64),
    n: usize,
) -> Result<f64> {
    let ys = nodes(y_inner.0, y_inner.1, n, NodeKind::Uniform);
    let slice =
        |t: f64| -> Result<Vec<(f64, f64)>> { ys.iter().map(|&y| Ok((x_of(p, y, t)?, u_of(p, y, t)?.0))).collect() };
    let s1 = slice(t1)?;
    let wide = nodes(y_bracket.0, y_bracket.1, 4 * n, NodeKind::Uniform);
    let s0: Vec<(f64, f64)> = wide.iter().map(|&y| Ok((x_of(p, y, t0)?, u_of(p, y, t0)?.0))).collect::<Result<_>>()?;
    let interp = |x: f64| -> Option<f64> {
        let i = s0.partition_point(|&(xs, _)| xs < x);
        if i == 0 || i >= s0.len() {
            return None;
        }
        let (xa, ua) = s0[i - 1];
        let (xb, ub) = s0[i];
        Some(ua + (ub - ua) * (x - xa) / (xb - xa))
    };
    let x_lo = s0[0].0;
    let x_hi = s0[s0.len() - 1].0;
    let max_shift = (x_hi - x_lo) * 0.5;
    let coarse_steps = 8 * n;
    let coarse = |s: f64| -> f64 {
        let mut acc = 0.0;
        let mut cnt = 0usize;
        for &(x1, u1) in &s1 {
            if let Some(u0) = interp(x1 - s) {
                acc += (u1 - u0) * (u1 - u0);
                cnt += 1;
            }
        }
        if cnt * 2 < s1.len() {
            f64::INFINITY
        } else {
            acc / cnt as f64
        }
    };
    let step = 2.0 * max_shift / coarse_steps as f64;
    let scan: Vec<(f64, f64)> = (0..=coarse_steps)
        .map(|i| {
            let s = -max_shift + step * i as f64;
            (s, coarse(s))
        })
        .collect();
    let finite = scan.iter().map(|v| v.1).filter(|c| c.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return Err(Error::InvalidInput("velocity bracket leaves no overlapping samples".into()));
    }
    // periodic profiles match at every period; take the smallest such shift
    let tol = lo + 1e-2 * (hi - lo);
    let best = (1..scan.len() - 1)
        .filter(|&i| scan[i].1 <= scan[i - 1].1 && scan[i].1 <= scan[i + 1].1 && scan[i].1 <= tol)
        .map(|i| scan[i])
        .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
        .unwrap_or_else(|| *scan.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty scan"));
    // cusped profiles cannot be inverted exactly; refine the sampled mismatch
    let f = |s: f64| -> Result<f64> {
        match p.preset {
            Preset::Smooth => shift_mismatch(p, t0, &s1, y_bracket, s),
            Preset::Cusped => Ok(coarse(s)),
        }
    };
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d)?;
        }
        if (b - a).abs() < 1e-12 * (1.0 + a.abs()) {
            break;
        }
    }
    Ok(0.5 * (a + b) / (t1 - t0))
}

/// Exact speed of a genus-1 solution: `alpha1 V_b / V_e - alpha2`.
pub fn genus_one_velocity(p: &CHParams) -> Result<f64> {
    if p.genus() != 1 {
        return Err(Error::InvalidInput("travelling-wave speed requires genus 1".into()));
    }
    Ok((p.alpha1 * p.vb()[0] / p.ve()[0] - p.alpha2).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_curve, Sheet};
    use crate::quadrature::QuadConfig;
    use crate::theta::DEFAULT_THETA_EPS;

    fn params(e_index: usize, preset: Preset) -> CHParams {
        let curve = build_curve(&[-3.0, -2.0, 0.0, 1.0, 2.0, 3.0], 1e-10).unwrap();
        let s = Surface::new(curve, QuadConfig::default()).unwrap();
        let cfg = ChConfig {
            a: SurfacePoint::real(-4.0, Sheet::One),
            e_index,
            d: DSpec::Characteristics(preset.default_characteristics(2)),
            k: 1.0,
            zeta_re: 0.0,
            preset,
            theta_eps: DEFAULT_THETA_EPS,
        };
        ch_setup(s, &cfg).unwrap()
    }

    #[test]
    fn origin_value() {
        let p = params(0, Preset::Smooth);
        let x = x_of(&p, 0.0, 0.0).unwrap();
        let j = jets(&p, 0.0, 0.0).unwrap();
        let h = ratio(j.plus.scaled(), j.minus.scaled());
        assert!((x - (-p.zeta.re + h.norm().ln())).abs() < 1e-14);
    }

    #[test]
    fn m_has_constant_sign() {
        let p = params(0, Preset::Smooth);
        let f = solve_grid(
            &p,
            &GridSpec { y0: -5.0, y1: 5.0, ny: 16, t0: 0.0, t1: 2.0, nt: 4, node_kind: NodeKind::Uniform },
        )
        .unwrap();
        let s = f.m[0][0].signum();
        assert!(f.m.iter().flatten().all(|m| m.signum() == s));
        assert!(f.reality.max() < REALITY_TOL);
    }

    #[test]
    fn invert_round_trip_and_guards() {
        let p = params(0, Preset::Smooth);
        let x = x_of(&p, 0.7, 0.3).unwrap();
        let y = invert_x(&p, 0.3, x, (-5.0, 5.0)).unwrap();
        assert!((y - 0.7).abs() < 1e-10);
        assert!(matches!(invert_x(&p, 0.3, x, (2.0, 5.0)), Err(Error::NotBracketed(_))));
        let c = params(1, Preset::Cusped);
        assert_eq!(invert_x(&c, 0.3, x, (-5.0, 5.0)).unwrap_err(), Error::NonMonotone);
    }

    #[test]
    fn smooth_preset_has_no_cusps() {
        let p = params(0, Preset::Smooth);
        assert!(detect_cusps(&p, 0.0, (-10.0, 10.0), 200).unwrap().is_empty());
    }

    #[test]
    fn x_t_equals_u_at_fixed_y() {
        let p = params(0, Preset::Smooth);
        let (y, t, h) = (0.4, 0.2, 1e-4);
        let d1 = (x_of(&p, y, t + h).unwrap() - x_of(&p, y, t - h).unwrap()) / (2.0 * h);
        let d2 = (x_of(&p, y, t + h / 2.0).unwrap() - x_of(&p, y, t - h / 2.0).unwrap()) / h;
        let fd = (4.0 * d2 - d1) / 3.0;
        let (u, ..) = u_of(&p, y, t).unwrap();
        assert!((fd - u).abs() < 1e-8 * u.abs().max(1.0), "{fd} vs {u}");
    }

    #[test]
    fn setup_errors() {
        let curve = build_curve(&[-3.0, -2.0, 0.0, 1.0, 2.0, 3.0], 1e-10).unwrap();
        let s = Surface::new(curve, QuadConfig::default()).unwrap();
        let mut cfg = ChConfig {
            a: SurfacePoint::real(-4.0, Sheet::One),
            e_index: 9,
            d: DSpec::Characteristics(Preset::Smooth.default_characteristics(2)),
            k: 1.0,
            zeta_re: 0.0,
            preset: Preset::Smooth,
            theta_eps: DEFAULT_THETA_EPS,
        };
        assert!(matches!(ch_setup(s.clone(), &cfg), Err(Error::BranchIndexOutOfRange { .. })));
        cfg.e_index = 0;
        cfg.a = SurfacePoint::real(-2.5, Sheet::One);
        assert!(matches!(ch_setup(s, &cfg), Err(Error::NotMCurve(_))));
    }
}
