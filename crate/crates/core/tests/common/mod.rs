#![allow(dead_code)]

use ch_theta::ch::{ch_setup, CHParams, ChConfig, DSpec, Preset};
use ch_theta::theta::DEFAULT_THETA_EPS;
use ch_theta::{build_curve, Curve, QuadConfig, Sheet, Surface, SurfacePoint};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use std::f64::consts::PI;

pub fn genus_two(eps: f64) -> Vec<f64> {
    vec![-3.0, -2.0, 0.0, eps, 2.0, 2.0 + eps]
}

pub fn genus_six(eps: f64) -> Vec<f64> {
    let mut v = vec![-7.0, -6.0];
    for c in [-5.0, -3.0, -1.0, 1.0, 3.0, 5.0] {
        v.push(c);
        v.push(c + eps);
    }
    v
}

pub fn genus_one() -> Vec<f64> {
    vec![0.0, 1.0, 2.0, 3.0]
}

pub fn curve(points: &[f64]) -> Curve {
    build_curve(points, 1e-10).unwrap()
}

pub fn surface(points: &[f64]) -> Surface {
    Surface::new(curve(points), QuadConfig::default()).unwrap()
}

pub fn params(points: &[f64], a: f64, e_index: usize, preset: Preset) -> CHParams {
    let s = surface(points);
    let g = s.genus();
    let cfg = ChConfig {
        a: SurfacePoint::real(a, Sheet::One),
        e_index,
        d: DSpec::Characteristics(preset.default_characteristics(g)),
        k: 1.0,
        zeta_re: 0.0,
        preset,
        theta_eps: DEFAULT_THETA_EPS,
    };
    ch_setup(s, &cfg).unwrap()
}

/// Largest distance to an integer among the coordinates `(N, M)` of
/// `w = 2 pi i N + B M`.
pub fn lattice_distance(w: &[C], b: &DMatrix<C>) -> f64 {
    let g = w.len();
    let re = b.map(|z| z.re);
    let im = b.map(|z| z.im);
    let m = re.lu().solve(&DVector::from_iterator(g, w.iter().map(|z| z.re))).unwrap();
    let n = (DVector::from_iterator(g, w.iter().map(|z| z.im)) - im * &m) / (2.0 * PI);
    m.iter().chain(n.iter()).map(|v| (v - v.round()).abs()).fold(0.0, f64::max)
}
