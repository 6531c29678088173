//! Period integrals and the normalized Riemann matrix in the cut-system
//! basis: `A_k` encircles cut `k` for `k = 1..g` (the cycle around cut 0 is
//! dependent), `B_k` runs from cut 0 to cut `k` through the real gaps on
//! sheet 1 and returns on sheet 2.
//!
//! All paths run along the upper side of the real axis, split at branch
//! points. Pieces with two branch-point ends use Gauss-Chebyshev nodes after
//! the cosine substitution; pieces with a regular end, or gaps next to a
//! collapsed cut, use tanh-sinh nodes with exact endpoint distances.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::curve::{holo_basis, Curve, Location, SurfacePoint};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_chebyshev, tanh_sinh, QuadConfig, QuadStat};

type C = Complex64;

/// Endpoint of a real-axis piece.
#[derive(Debug, Clone, Copy, PartialEq)]
enum End {
    Branch(usize),
    Point(f64),
}

impl End {
    fn x(self, curve: &Curve) -> f64 {
        match self {
            End::Branch(j) => curve.branch_points()[j],
            End::Point(x) => x,
        }
    }
}

/// How the local parameter at a point relates to `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalParam {
    /// `k = lambda - lambda(p)`
    Nonbranch,
    /// `k^2 = +-(lambda - lambda_j)`, sign chosen so that small real `k` lies
    /// on the adjacent real oval.
    Branch,
}

/// First coefficient of the normalized differentials in a local parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionVector {
    pub v: Vec<C>,
    pub at: SurfacePoint,
    pub local_param_kind: LocalParam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadReport {
    pub stats: Vec<QuadStat>,
    /// 2-norm condition number of the raw A-period matrix.
    pub condition: f64,
    /// +1 or -1: sign applied to the gap sums so that `Re B < 0`.
    pub b_orientation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodData {
    /// `(k, j) = oint_{A_k} lambda^j d lambda / mu`.
    pub a_raw: DMatrix<C>,
    /// `(k, j) = oint_{B_k} lambda^j d lambda / mu`.
    pub b_raw: DMatrix<C>,
    /// `omega_i = sum_j C_ij lambda^j d lambda / mu`.
    pub normalization: DMatrix<C>,
    pub riemann: DMatrix<C>,
    pub quadrature_report: QuadReport,
}

/// Residuals of the structural period invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodResiduals {
    /// `|B - B^T| / |B|` (Frobenius).
    pub symmetry: f64,
    /// Largest eigenvalue of `Re B` (must be negative).
    pub max_re_eigenvalue: f64,
    /// Max entry of `|C A^T - 2 pi i I| / 2 pi`.
    pub normalization: f64,
    /// Max distance of `Im B` entries to the nearest multiple of pi.
    pub imag_lattice: f64,
}

fn zeros(g: usize) -> Vec<C> {
    vec![C::new(0.0, 0.0); g]
}

fn powers(x: C, g: usize) -> Vec<C> {
    let mut out = Vec::with_capacity(g);
    let mut p = C::new(1.0, 0.0);
    for _ in 0..g {
        out.push(p);
        p *= x;
    }
    out
}

/// `int_lo^hi lambda^j d lambda / mu_1(lambda + i0)` where no branch point lies
/// strictly inside `(lo, hi)` and `lo < hi`.
fn piece(curve: &Curve, lo: End, hi: End, cfg: &QuadConfig) -> Result<(Vec<C>, QuadStat)> {
    let g = curve.genus();
    let pts = curve.branch_points();
    let (xl, xr) = (lo.x(curve), hi.x(curve));
    let half = 0.5 * (xr - xl);
    let mid = xl + half;
    let loc = match curve.locate(mid) {
        Location::Branch(_) => curve.locate(xl + 0.25 * (xr - xl)),
        l => l,
    };
    let label = format!("[{xl}, {xr}]");
    if half == 0.0 {
        return Ok((zeros(g), QuadStat { label, rule: crate::quadrature::Rule::GaussChebyshev, nodes: 0, delta: 0.0 }));
    }

    // exact distances to the endpoints and to their outer neighbours
    let overrides = move |dl: f64, dr: f64, unit_ends: bool| -> Vec<(usize, f64)> {
        let mut o = Vec::with_capacity(4);
        if let End::Branch(j) = lo {
            o.push((j, if unit_ends { 1.0 } else { dl }));
            if j > 0 {
                o.push((j - 1, (pts[j] - pts[j - 1]) + dl));
            }
        }
        if let End::Branch(j) = hi {
            o.push((j, if unit_ends { 1.0 } else { dr }));
            if j + 1 < pts.len() {
                o.push((j + 1, (pts[j + 1] - pts[j]) + dr));
            }
        }
        o
    };
    let x_at = move |t: f64, op: f64, om: f64| -> (f64, f64, f64) {
        let dl = half * op;
        let dr = half * om;
        let x = if t < 0.0 { xl + dl } else { xr - dr };
        (x, dl, dr)
    };

    let both_branch = matches!((lo, hi), (End::Branch(_), End::Branch(_)));
    let near_collapse = |e: End, step: isize| -> bool {
        if let End::Branch(j) = e {
            let n = j as isize + step;
            if n >= 0 && (n as usize) < pts.len() {
                return curve.is_degenerate_cut(n as usize / 2);
            }
        }
        false
    };
    let degenerate_neighbour = near_collapse(lo, -1) || near_collapse(hi, 1);

    if both_branch && !degenerate_neighbour {
        let f = |t: f64, op: f64, om: f64| {
            let (x, dl, dr) = x_at(t, op, om);
            let mu = curve.mu_upper(x, loc, &overrides(dl, dr, true));
            powers(C::new(x, 0.0), g).into_iter().map(|p| p / mu).collect()
        };
        match gauss_chebyshev(f, g, cfg, &label) {
            Ok(r) => return Ok(r),
            Err(Error::QuadratureNotConverged { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let f = |t: f64, op: f64, om: f64| {
        let (x, dl, dr) = x_at(t, op, om);
        let mu = curve.mu_upper(x, loc, &overrides(dl, dr, false));
        powers(C::new(x, 0.0), g).into_iter().map(|p| p * half / mu).collect()
    };
    let ts_cfg = QuadConfig { min_nodes: 0, ..*cfg };
    tanh_sinh(f, g, &ts_cfg, &label)
}

/// Sheet-1 integral along the upper side of the real axis between two
/// real-axis endpoints.
fn real_path(curve: &Curve, from: End, to: End, cfg: &QuadConfig) -> Result<Vec<C>> {
    let (x0, x1) = (from.x(curve), to.x(curve));
    if x0 == x1 {
        return Ok(zeros(curve.genus()));
    }
    let (lo, hi, sign) = if x0 < x1 { (from, to, 1.0) } else { (to, from, -1.0) };
    let (xl, xr) = (lo.x(curve), hi.x(curve));
    let mut ends = vec![lo];
    for (j, &b) in curve.branch_points().iter().enumerate() {
        if b > xl && b < xr {
            ends.push(End::Branch(j));
        }
    }
    ends.push(hi);
    let mut acc = zeros(curve.genus());
    for w in ends.windows(2) {
        if w[0].x(curve) == w[1].x(curve) {
            continue;
        }
        let (v, _) = piece(curve, w[0], w[1], cfg)?;
        for (a, b) in acc.iter_mut().zip(v) {
            *a += b * sign;
        }
    }
    Ok(acc)
}

/// Real anchor in a gap from which a straight segment reaches `lambda`
/// without touching a cut.
fn anchor(curve: &Curve, lambda: C) -> f64 {
    let pts = curve.branch_points();
    let n = pts.len();
    let gap_mid = |j_left: usize| 0.5 * (pts[j_left] + pts[j_left + 1]);
    match curve.locate(lambda.re) {
        Location::Gap(_) => lambda.re,
        Location::Cut(k) | Location::Branch(k) => {
            let j = match curve.locate(lambda.re) {
                Location::Branch(j) => j,
                _ => {
                    let (a, b) = curve.cut(k);
                    if lambda.re - a < b - lambda.re {
                        2 * k
                    } else {
                        2 * k + 1
                    }
                }
            };
            let width = 1.0f64.max(pts[n - 1] - pts[0]) * 0.1;
            if j % 2 == 0 {
                if j == 0 {
                    pts[0] - width
                } else {
                    gap_mid(j - 1)
                }
            } else if j == n - 1 {
                pts[n - 1] + width
            } else {
                gap_mid(j)
            }
        }
    }
}

/// Sheet-1 integral along the straight segment from the real gap point `x0`
/// to the complex projection `lambda`.
fn line_integral(curve: &Curve, x0: f64, lambda: C, cfg: &QuadConfig) -> Result<Vec<C>> {
    let g = curve.genus();
    let delta = lambda - x0;
    let f = |_t: f64, op: f64, _om: f64| {
        let z = C::new(x0, 0.0) + delta * (0.5 * op);
        let mu = curve.mu_sheet_one(z);
        powers(z, g).into_iter().map(|p| p * delta * 0.5 / mu).collect()
    };
    let ts_cfg = QuadConfig { min_nodes: 0, ..*cfg };
    Ok(tanh_sinh(f, g, &ts_cfg, "complex segment")?.0)
}

fn add(a: Vec<C>, b: Vec<C>, sb: f64) -> Vec<C> {
    a.into_iter().zip(b).map(|(x, y)| x + y * sb).collect()
}

fn nearest_branch(curve: &Curve, x: f64) -> usize {
    let pts = curve.branch_points();
    (0..pts.len()).min_by(|&i, &j| (pts[i] - x).abs().partial_cmp(&(pts[j] - x).abs()).unwrap()).unwrap()
}

fn check_point(curve: &Curve, p: SurfacePoint) -> Result<()> {
    match p {
        SurfacePoint::Branch(j) => curve.branch_point(j).map(|_| ()),
        SurfacePoint::Regular { lambda, .. } => {
            if lambda.im == 0.0 {
                if let Location::Branch(_) = curve.locate(lambda.re) {
                    return Err(Error::UntaggedBranchPoint(lambda.re));
                }
            }
            if !lambda.re.is_finite() || !lambda.im.is_finite() {
                return Err(Error::InvalidInput("non-finite projection".into()));
            }
            Ok(())
        }
    }
}

/// Unnormalized Abel integral `int_base^p lambda^j d lambda / mu`.
pub fn raw_abel(curve: &Curve, base: SurfacePoint, p: SurfacePoint, cfg: &QuadConfig) -> Result<Vec<C>> {
    check_point(curve, base)?;
    check_point(curve, p)?;
    if let SurfacePoint::Regular { lambda, sheet } = p {
        if lambda.im != 0.0 {
            let x = anchor(curve, lambda);
            let head = raw_abel(curve, base, SurfacePoint::real(x, sheet), cfg)?;
            let tail = line_integral(curve, x, lambda, cfg)?;
            return Ok(add(head, tail, sheet.sign()));
        }
    }
    if let SurfacePoint::Regular { lambda, sheet } = base {
        if lambda.im != 0.0 {
            let x = anchor(curve, lambda);
            let head = raw_abel(curve, SurfacePoint::real(x, sheet), p, cfg)?;
            let tail = line_integral(curve, x, lambda, cfg)?;
            return Ok(add(head, tail, -sheet.sign()));
        }
    }
    use SurfacePoint::*;
    match (base, p) {
        (Branch(i), Branch(j)) => real_path(curve, End::Branch(i), End::Branch(j), cfg),
        (Branch(i), Regular { lambda, sheet }) => {
            let v = real_path(curve, End::Branch(i), End::Point(lambda.re), cfg)?;
            Ok(v.into_iter().map(|z| z * sheet.sign()).collect())
        }
        (Regular { lambda, sheet }, Branch(j)) => {
            let v = real_path(curve, End::Point(lambda.re), End::Branch(j), cfg)?;
            Ok(v.into_iter().map(|z| z * sheet.sign()).collect())
        }
        (Regular { lambda: l0, sheet: s0 }, Regular { lambda: l1, sheet: s1 }) => {
            if s0 == s1 {
                let v = real_path(curve, End::Point(l0.re), End::Point(l1.re), cfg)?;
                Ok(v.into_iter().map(|z| z * s0.sign()).collect())
            } else {
                let e = SurfacePoint::Branch(nearest_branch(curve, l0.re));
                let first = raw_abel(curve, base, e, cfg)?;
                let second = raw_abel(curve, e, p, cfg)?;
                Ok(add(first, second, 1.0))
            }
        }
    }
}

/// Raw A-period matrix: row `k` holds `oint_{A_k} lambda^j d lambda / mu` for
/// cut `k` (1-based over the cuts `1..=g`).
pub fn a_periods(curve: &Curve, cfg: &QuadConfig) -> Result<DMatrix<C>> {
    Ok(a_periods_with_stats(curve, cfg)?.0)
}

fn a_periods_with_stats(curve: &Curve, cfg: &QuadConfig) -> Result<(DMatrix<C>, Vec<QuadStat>)> {
    let g = curve.genus();
    let rows: Vec<(Vec<C>, QuadStat)> = (1..=g)
        .into_par_iter()
        .map(|k| piece(curve, End::Branch(2 * k), End::Branch(2 * k + 1), cfg))
        .collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(g, g);
    let mut stats = Vec::with_capacity(g);
    for (k, (row, st)) in rows.into_iter().enumerate() {
        for j in 0..g {
            m[(k, j)] = row[j] * 2.0;
        }
        stats.push(QuadStat { label: format!("A{}", k + 1), ..st });
    }
    Ok((m, stats))
}

fn gap_integrals(curve: &Curve, cfg: &QuadConfig) -> Result<(Vec<Vec<C>>, Vec<QuadStat>)> {
    let g = curve.genus();
    let res: Vec<(Vec<C>, QuadStat)> = (1..=g)
        .into_par_iter()
        .map(|k| piece(curve, End::Branch(2 * k - 1), End::Branch(2 * k), cfg))
        .collect::<Result<_>>()?;
    let mut vals = Vec::with_capacity(g);
    let mut stats = Vec::with_capacity(g);
    for (k, (v, st)) in res.into_iter().enumerate() {
        vals.push(v);
        stats.push(QuadStat { label: format!("gap{}", k + 1), ..st });
    }
    Ok((vals, stats))
}

fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Raw periods of the curve with their normalized Riemann matrix.
pub fn riemann_matrix(curve: &Curve, cfg: &QuadConfig) -> Result<PeriodData> {
    let g = curve.genus();
    let (a_raw, mut stats) = a_periods_with_stats(curve, cfg)?;
    let (gaps, gstats) = gap_integrals(curve, cfg)?;
    stats.extend(gstats);

    let mut b_raw = DMatrix::zeros(g, g);
    let mut running = zeros(g);
    for k in 0..g {
        for j in 0..g {
            running[j] += gaps[k][j] * 2.0;
            b_raw[(k, j)] = running[j];
        }
    }

    let svd = a_raw.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin == 0.0 || !(smax / smin).is_finite() {
        return Err(Error::SingularAPeriodMatrix);
    }
    let condition = smax / smin;
    let at_inv = a_raw.transpose().lu().try_inverse().ok_or(Error::SingularAPeriodMatrix)?;
    let normalization = at_inv * C::new(0.0, 2.0 * PI);
    let mut riemann = &b_raw * normalization.transpose();

    let re = riemann.map(|z| z.re);
    let ev = symmetric_eigenvalues(&re);
    let mut orientation = 1.0;
    if ev.iter().all(|&e| e > 0.0) {
        orientation = -1.0;
        riemann = -riemann;
        b_raw = -b_raw;
    } else if !ev.iter().all(|&e| e < 0.0) {
        return Err(Error::NotNegativeDefinite);
    }

    Ok(PeriodData {
        a_raw,
        b_raw,
        normalization,
        riemann,
        quadrature_report: QuadReport { stats, condition, b_orientation: orientation },
    })
}

impl PeriodData {
    pub fn genus(&self) -> usize {
        self.riemann.nrows()
    }

    /// Applies the normalization matrix to a raw integral vector.
    pub fn normalize(&self, raw: &[C]) -> Vec<C> {
        let v = &self.normalization * DVector::from_column_slice(raw);
        v.iter().copied().collect()
    }

    pub fn residuals(&self) -> PeriodResiduals {
        let g = self.genus();
        let b = &self.riemann;
        let symmetry = (b - b.transpose()).norm() / b.norm();
        let ev = symmetric_eigenvalues(&b.map(|z| z.re));
        let max_re_eigenvalue = *ev.last().unwrap();
        let prod = &self.normalization * self.a_raw.transpose();
        let mut normalization = 0.0f64;
        for i in 0..g {
            for j in 0..g {
                let target = if i == j { C::new(0.0, 2.0 * PI) } else { C::new(0.0, 0.0) };
                normalization = normalization.max((prod[(i, j)] - target).norm() / (2.0 * PI));
            }
        }
        let imag_lattice = b
            .iter()
            .map(|z| {
                let q = z.im / PI;
                (q - q.round()).abs() * PI
            })
            .fold(0.0, f64::max);
        PeriodResiduals { symmetry, max_re_eigenvalue, normalization, imag_lattice }
    }
}

/// A curve together with its period data; entry point for Abel maps and
/// direction vectors.
#[derive(Debug, Clone)]
pub struct Surface {
    pub curve: Curve,
    pub periods: PeriodData,
    pub quad: QuadConfig,
}

impl Surface {
    pub fn new(curve: Curve, quad: QuadConfig) -> Result<Surface> {
        let periods = riemann_matrix(&curve, &quad)?;
        Ok(Surface { curve, periods, quad })
    }

    pub fn genus(&self) -> usize {
        self.curve.genus()
    }

    pub fn riemann(&self) -> &DMatrix<C> {
        &self.periods.riemann
    }

    /// Normalized Abel integral `int_base^p omega` along the cut-avoiding
    /// path: the upper side of the real axis on the sheet of the endpoints,
    /// through the nearest branch point of `base` when the sheets differ, and
    /// a straight segment from a real gap point for complex projections.
    pub fn abel_map(&self, p: SurfacePoint, base: SurfacePoint) -> Result<Vec<C>> {
        let raw = raw_abel(&self.curve, base, p, &self.quad)?;
        Ok(self.periods.normalize(&raw))
    }

    /// `r = 2 int_e^{sigma(a)} omega`, the image of the contour from `a`
    /// through `e` to `b = sigma(a)`.
    pub fn vector_r(&self, a: SurfacePoint, e: SurfacePoint) -> Result<Vec<C>> {
        if !e.is_branch() {
            return Err(Error::ENotBranchPoint);
        }
        let half = self.abel_map(a.sigma(), e)?;
        Ok(half.into_iter().map(|z| z * 2.0).collect())
    }

    pub fn direction_vector(&self, p: SurfacePoint) -> Result<DirectionVector> {
        direction_vector(&self.curve, p, &self.periods.normalization)
    }
}

/// Leading expansion coefficients `V_p` of the normalized differentials in the
/// local parameter at `p`.
pub fn direction_vector(curve: &Curve, p: SurfacePoint, normalization: &DMatrix<C>) -> Result<DirectionVector> {
    let g = curve.genus();
    let (w, kind) = match p {
        SurfacePoint::Regular { .. } => (holo_basis(curve, p)?, LocalParam::Nonbranch),
        SurfacePoint::Branch(j) => {
            let lam = curve.branch_point(j)?;
            // real oval side: left of a cut start, right of a cut end
            let (side, gap) = if j % 2 == 0 { (-1.0, j / 2) } else { (1.0, j / 2 + 1) };
            let sq = curve.mu_upper(lam, Location::Gap(gap), &[(j, 1.0)]);
            let w = powers(C::new(lam, 0.0), g).into_iter().map(|pw| pw * (2.0 * side) / sq).collect();
            (w, LocalParam::Branch)
        }
    };
    let v = normalization * DVector::from_vec(w);
    Ok(DirectionVector { v: v.iter().copied().collect(), at: p, local_param_kind: kind })
}
