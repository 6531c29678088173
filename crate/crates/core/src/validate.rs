//! Independent checks of computed solutions: spectral PDE residual, reality
//! and the half-period property of the Abel map.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::ch::{nodes, NodeKind, Preset, RealityReport, SolutionField};
use crate::curve::SurfacePoint;
use crate::error::{Error, Result};
use crate::periods::Surface;

/// Chebyshev-Gauss-Lobatto nodes on `[lo, hi]` (increasing) and the matching
/// differentiation matrix.
#[derive(Debug, Clone)]
pub struct ChebOperator {
    pub nodes: Vec<f64>,
    pub d: DMatrix<f64>,
}

impl ChebOperator {
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let v = &self.d * DVector::from_column_slice(f);
        v.iter().copied().collect()
    }
}

/// Differentiation matrix on `n + 1` Lobatto nodes of `[lo, hi]`.
pub fn cheb_operator(n: usize, lo: f64, hi: f64) -> Result<ChebOperator> {
    if n < 2 || lo.partial_cmp(&hi) != Some(Ordering::Less) {
        return Err(Error::InvalidInput(format!("cheb_operator needs n >= 2 and lo < hi, got n={n}")));
    }
    let x = nodes(lo, hi, n + 1, NodeKind::Chebyshev);
    let w: Vec<f64> = (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        let mut row = 0.0;
        for j in 0..=n {
            if i != j {
                let v = (w[j] / w[i]) / (x[i] - x[j]);
                d[(i, j)] = v;
                row += v;
            }
        }
        d[(i, i)] = -row;
    }
    Ok(ChebOperator { nodes: x, d })
}

/// Spectral derivatives of a field in `y` and `t`, from `u` and `x` alone.
#[derive(Debug, Clone)]
pub struct SpectralFields {
    pub ux: Vec<Vec<f64>>,
    pub uxx: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
    pub mt: Vec<Vec<f64>>,
    pub mx: Vec<Vec<f64>>,
}

fn column(f: &[Vec<f64>], iy: usize) -> Vec<f64> {
    f.iter().map(|row| row[iy]).collect()
}

fn t_derivative(dt: &ChebOperator, f: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let nt = f.len();
    let ny = f[0].len();
    let mut out = vec![vec![0.0; ny]; nt];
    for iy in 0..ny {
        for (row, v) in out.iter_mut().zip(dt.apply(&column(f, iy))) {
            row[iy] = v;
        }
    }
    out
}

fn check_grid(field: &SolutionField) -> Result<(ChebOperator, ChebOperator)> {
    if field.preset == Preset::Cusped || field.cusp.iter().flatten().any(|&c| c) {
        return Err(Error::CuspedFieldRejected);
    }
    if field.node_kind != NodeKind::Chebyshev {
        return Err(Error::InvalidInput("spectral checks need Chebyshev nodes".into()));
    }
    let (ny, nt) = (field.y.len(), field.t.len());
    let dy = cheb_operator(ny - 1, field.y[0], field.y[ny - 1])?;
    let dt = cheb_operator(nt - 1, field.t[0], field.t[nt - 1])?;
    Ok((dy, dt))
}

/// Derivatives at fixed `x` through the chain rule in the implicit variable:
/// `f_x = f_y / x_y`, `f_t|_x = f_t|_y - f_x x_t|_y`.
pub fn spectral_fields(field: &SolutionField) -> Result<SpectralFields> {
    let (dy, dt) = check_grid(field)?;
    let nt = field.t.len();
    let mut xy = Vec::with_capacity(nt);
    for (it, x) in field.x.iter().enumerate() {
        let d = dy.apply(x);
        let pos = d.iter().all(|&v| v > 0.0);
        let neg = d.iter().all(|&v| v < 0.0);
        if !(pos || neg) {
            return Err(Error::NonMonotoneX(it));
        }
        xy.push(d);
    }
    let by_x = |f: &[f64], it: usize| -> Vec<f64> { dy.apply(f).iter().zip(&xy[it]).map(|(a, b)| a / b).collect() };
    let ux: Vec<Vec<f64>> = (0..nt).map(|it| by_x(&field.u[it], it)).collect();
    let uxx: Vec<Vec<f64>> = (0..nt).map(|it| by_x(&ux[it], it)).collect();
    let m: Vec<Vec<f64>> =
        (0..nt).map(|it| field.u[it].iter().zip(&uxx[it]).map(|(u, v)| u - v + field.k).collect()).collect();
    let mx: Vec<Vec<f64>> = (0..nt).map(|it| by_x(&m[it], it)).collect();
    let xt = t_derivative(&dt, &field.x);
    let mty = t_derivative(&dt, &m);
    let mt = (0..nt).map(|it| (0..field.y.len()).map(|iy| mty[it][iy] - mx[it][iy] * xt[it][iy]).collect()).collect();
    Ok(SpectralFields { ux, uxx, m, mt, mx })
}

/// `max |m_t + u m_x + 2 m u_x|` over the grid, relative to the largest
/// magnitude among the three terms.
pub fn pde_residual(field: &SolutionField) -> Result<f64> {
    let s = spectral_fields(field)?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for it in 0..field.t.len() {
        for iy in 0..field.y.len() {
            let u = field.u[it][iy];
            let terms = [s.mt[it][iy], u * s.mx[it][iy], 2.0 * s.m[it][iy] * s.ux[it][iy]];
            worst = worst.max(terms.iter().sum::<f64>().abs());
            scale = scale.max(terms.iter().fold(0.0, |a: f64, t| a.max(t.abs())));
        }
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Relative gap between the stored `m` and `u - u_xx + k` from spectral
/// differentiation of `u`.
pub fn m_identity_residual(field: &SolutionField) -> Result<f64> {
    let s = spectral_fields(field)?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (a, b) in field.m.iter().flatten().zip(s.m.iter().flatten()) {
        worst = worst.max((a - b).abs());
        scale = scale.max(a.abs());
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

pub fn reality_report(field: &SolutionField) -> RealityReport {
    field.reality
}

/// Worst distance to `Z^{2g}` of the lattice coordinates `(N, M)` of
/// `2 Pi(P_i, P_j)` over all pairs of branch points, where
/// `2 Pi = 2 pi i N + B M`.
///
/// Coordinates `M_k` along a degenerate cut are skipped: there the
/// corresponding column of `B` diverges.
pub fn halfperiod_check(surface: &Surface) -> Result<f64> {
    let b = surface.riemann();
    let g = surface.genus();
    let re = b.map(|z| z.re);
    let im = b.map(|z| z.im);
    let lu = re.clone().lu();
    let curve = &surface.curve;
    let finite_m: Vec<bool> = (0..g).map(|k| !curve.is_degenerate_cut(k + 1)).collect();
    let n_branch = curve.branch_points().len();
    let mut worst: f64 = 0.0;
    for i in 0..n_branch {
        for j in i + 1..n_branch {
            let pi = surface.abel_map(SurfacePoint::branch(j), SurfacePoint::branch(i))?;
            let w_re = DVector::from_iterator(g, pi.iter().map(|z| 2.0 * z.re));
            let w_im = DVector::from_iterator(g, pi.iter().map(|z| 2.0 * z.im));
            let m = lu.solve(&w_re).ok_or(Error::SingularAPeriodMatrix)?;
            let n = (w_im - &im * &m) / (2.0 * PI);
            for k in 0..g {
                worst = worst.max((n[k] - n[k].round()).abs());
                if finite_m[k] {
                    worst = worst.max((m[k] - m[k].round()).abs());
                }
            }
        }
    }
    Ok(worst)
}
