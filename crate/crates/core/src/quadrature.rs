//! Quadrature rules for integrals with square-root endpoint singularities.
//!
//! Integrands receive the node `t` in `[-1, 1]` together with accurately
//! computed `1 + t` and `1 - t`, so callers can form distances to endpoint
//! branch points without cancellation.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Relative change between successive refinements that ends iteration.
    pub tol: f64,
    pub min_nodes: usize,
    pub max_nodes: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { tol: 1e-12, min_nodes: 64, max_nodes: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    GaussChebyshev,
    TanhSinh,
}

/// Convergence record of one integral.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadStat {
    pub label: String,
    pub rule: Rule,
    pub nodes: usize,
    pub delta: f64,
}

fn rel_change(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// `sum_k F(t_k) * pi / n` over first-kind Chebyshev nodes, which integrates
/// `F(t) / sqrt(1 - t^2)` on `[-1, 1]`.
fn chebyshev_sum<F>(f: &F, n: usize, dim: usize) -> Vec<Complex64>
where
    F: Fn(f64, f64, f64) -> Vec<Complex64>,
{
    let mut acc = vec![Complex64::new(0.0, 0.0); dim];
    for k in 0..n {
        let theta = (2 * k + 1) as f64 * PI / (2 * n) as f64;
        let t = theta.cos();
        let half = 0.5 * theta;
        let one_minus = 2.0 * half.sin().powi(2);
        let one_plus = 2.0 * half.cos().powi(2);
        for (a, v) in acc.iter_mut().zip(f(t, one_plus, one_minus)) {
            *a += v;
        }
    }
    let w = PI / n as f64;
    acc.iter_mut().for_each(|a| *a *= w);
    acc
}

/// Gauss-Chebyshev quadrature of `F(t) / sqrt(1 - t^2)` with node doubling.
pub fn gauss_chebyshev<F>(f: F, dim: usize, cfg: &QuadConfig, label: &str) -> Result<(Vec<Complex64>, QuadStat)>
where
    F: Fn(f64, f64, f64) -> Vec<Complex64>,
{
    let mut n = cfg.min_nodes.max(2);
    let mut prev = chebyshev_sum(&f, n, dim);
    loop {
        let next_n = 2 * n;
        let cur = chebyshev_sum(&f, next_n, dim);
        let delta = rel_change(&prev, &cur);
        if delta < cfg.tol {
            return Ok((cur, QuadStat { label: label.to_string(), rule: Rule::GaussChebyshev, nodes: next_n, delta }));
        }
        if next_n >= cfg.max_nodes {
            return Err(Error::QuadratureNotConverged { what: label.to_string(), nodes: next_n, delta });
        }
        prev = cur;
        n = next_n;
    }
}

const TANH_SINH_SMAX: f64 = 6.2;
const TANH_SINH_MAX_LEVEL: u32 = 12;
/// Nodes closer than this to an endpoint carry negligible weight.
const TANH_SINH_MIN_GAP: f64 = 1e-290;

/// Node data at abscissa `s` of the double-exponential map.
fn tanh_sinh_node(s: f64) -> (f64, f64, f64, f64) {
    let v = PI * s.abs().sinh();
    let q = (-v).exp();
    let one_minus_abs = 2.0 * q / (1.0 + q);
    let abs_t = (1.0 - q) / (1.0 + q);
    let w = 2.0 * PI * s.cosh() * q / ((1.0 + q) * (1.0 + q));
    if s >= 0.0 {
        (abs_t, 2.0 - one_minus_abs, one_minus_abs, w)
    } else {
        (-abs_t, one_minus_abs, 2.0 - one_minus_abs, w)
    }
}

/// Tanh-sinh quadrature of `F(t)` on `[-1, 1]`, halving the step until the
/// relative change drops below `cfg.tol`.
pub fn tanh_sinh<F>(f: F, dim: usize, cfg: &QuadConfig, label: &str) -> Result<(Vec<Complex64>, QuadStat)>
where
    F: Fn(f64, f64, f64) -> Vec<Complex64>,
{
    let mut h = 0.5;
    let mut raw = vec![Complex64::new(0.0, 0.0); dim];
    let mut nodes = 0usize;
    // level 0: all multiples of h
    let kmax = (TANH_SINH_SMAX / h).ceil() as i64;
    for k in -kmax..=kmax {
        let (t, op, om, w) = tanh_sinh_node(k as f64 * h);
        if om < TANH_SINH_MIN_GAP || op < TANH_SINH_MIN_GAP {
            continue;
        }
        nodes += 1;
        for (a, v) in raw.iter_mut().zip(f(t, op, om)) {
            *a += v * w;
        }
    }
    let mut prev: Vec<Complex64> = raw.iter().map(|a| a * h).collect();
    let mut delta = f64::INFINITY;
    for _level in 1..=TANH_SINH_MAX_LEVEL {
        h *= 0.5;
        let kmax = (TANH_SINH_SMAX / h).ceil() as i64;
        let mut k = -kmax;
        if k % 2 == 0 {
            k += 1;
        }
        while k <= kmax {
            let (t, op, om, w) = tanh_sinh_node(k as f64 * h);
            if om >= TANH_SINH_MIN_GAP && op >= TANH_SINH_MIN_GAP {
                nodes += 1;
                for (a, v) in raw.iter_mut().zip(f(t, op, om)) {
                    *a += v * w;
                }
            }
            k += 2;
        }
        let cur: Vec<Complex64> = raw.iter().map(|a| a * h).collect();
        delta = rel_change(&prev, &cur);
        if delta < cfg.tol && nodes >= cfg.min_nodes {
            return Ok((cur, QuadStat { label: label.to_string(), rule: Rule::TanhSinh, nodes, delta }));
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { what: label.to_string(), nodes, delta })
}
