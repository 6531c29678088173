mod common;

use ch_theta::ch::{
    ch_setup, detect_cusps, estimate_velocity, genus_one_velocity, invert_x, point_value, reality_probe, solve_grid,
    x_of, ChConfig, DSpec, GridSpec, NodeKind, Preset,
};
use ch_theta::theta::DEFAULT_THETA_EPS;
use ch_theta::{char_to_shift, Error, Sheet, SurfacePoint};
use common::*;
use num_complex::Complex64 as C;

#[test]
fn x_y_closed_form_matches_finite_differences() {
    let p = params(&genus_two(1.0), -4.0, 0, Preset::Smooth);
    for (y, t) in [(0.3, 0.0), (-1.7, 0.4), (2.2, -1.1), (5.0, 3.0)] {
        let xy = point_value(&p, y, t).unwrap().xy.re;
        let d = |h: f64| (x_of(&p, y + h, t).unwrap() - x_of(&p, y - h, t).unwrap()) / (2.0 * h);
        let rich = (4.0 * d(5e-4) - d(1e-3)) / 3.0;
        assert!((rich - xy).abs() < 1e-6 * xy.abs(), "({y},{t}): {rich} vs {xy}");
    }
}

#[test]
fn smooth_x_is_strictly_increasing() {
    for (pts, a) in [(genus_two(1.0), -4.0), (genus_one(), -1.0), (genus_two(1e-14), -4.0)] {
        let p = params(&pts, a, 0, Preset::Smooth);
        for t in [-2.0, 0.0, 1.5] {
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=400 {
                let x = x_of(&p, -20.0 + 0.1 * i as f64, t).unwrap();
                assert!(x > prev);
                prev = x;
            }
        }
    }
}

#[test]
fn fields_are_real_on_both_presets() {
    let grid = GridSpec { y0: -6.0, y1: 6.0, ny: 25, t0: 0.0, t1: 2.0, nt: 9, node_kind: NodeKind::Uniform };
    for (preset, e) in [(Preset::Smooth, 0), (Preset::Cusped, 1)] {
        let p = params(&genus_two(1.0), -4.0, e, preset);
        let rep = reality_probe(&p, &grid).unwrap();
        assert!(rep.max() < 1e-8, "{preset:?}: {rep:?}");
    }
}

#[test]
fn recipe_violating_shift_is_detected() {
    let s = surface(&genus_two(1.0));
    let mut d = char_to_shift(&Preset::Smooth.default_characteristics(2), s.riemann());
    d[0] += C::new(0.0, 0.8);
    d[1] -= C::new(0.3, 0.4);
    let cfg = ChConfig {
        a: SurfacePoint::real(-4.0, Sheet::One),
        e_index: 0,
        d: DSpec::Vector(d),
        k: 1.0,
        zeta_re: 0.0,
        preset: Preset::Smooth,
        theta_eps: DEFAULT_THETA_EPS,
    };
    let p = ch_setup(s, &cfg).unwrap();
    let grid = GridSpec { y0: -3.0, y1: 3.0, ny: 13, t0: 0.0, t1: 1.0, nt: 3, node_kind: NodeKind::Uniform };
    let rep = reality_probe(&p, &grid).unwrap();
    assert!(rep.max() > 1e-4, "{rep:?}");
    assert!(matches!(solve_grid(&p, &grid), Err(Error::NonRealX { .. })));
}

#[test]
fn structural_scalar_identity_on_every_curve() {
    let cases = [
        (genus_one(), -1.0, 0, Preset::Smooth),
        (genus_two(1.0), -4.0, 0, Preset::Smooth),
        (genus_two(1e-14), -4.0, 1, Preset::Cusped),
        (genus_six(1e-14), -8.0, 0, Preset::Smooth),
    ];
    for (pts, a, e, preset) in cases {
        let p = params(&pts, a, e, preset);
        let r = p.scalars.q_identity_residual();
        assert!(r < 1e-8, "{pts:?}: {r}");
    }
}

#[test]
fn cusps_have_two_thirds_exponent() {
    for pts in [genus_two(1.0), genus_two(1e-14)] {
        let p = params(&pts, -4.0, 1, Preset::Cusped);
        let cusps = detect_cusps(&p, 0.0, (-12.0, 12.0), 600).unwrap();
        assert!(!cusps.is_empty());
        for c in &cusps {
            assert!((c.exponent - 2.0 / 3.0).abs() < 0.05, "{c:?}");
            assert!(c.uy_sign_change, "{c:?}");
            assert!(point_value(&p, c.y0, 0.0).unwrap().cusp);
            // u is continuous: the jump shrinks like h^2
            let jump = |h: f64| {
                let l = point_value(&p, c.y0 - h, 0.0).unwrap().u.re;
                let r = point_value(&p, c.y0 + h, 0.0).unwrap().u.re;
                (l - c.u0).abs().max((r - c.u0).abs())
            };
            let (j1, j2) = (jump(1e-3), jump(1e-4));
            assert!(j1 < 1e-4 && j2 < 0.05 * j1, "{c:?}: {j1} {j2}");
        }
    }
}

#[test]
fn smooth_preset_has_no_cusps() {
    let p = params(&genus_two(1.0), -4.0, 0, Preset::Smooth);
    assert!(detect_cusps(&p, 0.0, (-12.0, 12.0), 600).unwrap().is_empty());
}

#[test]
fn genus_one_solution_is_a_travelling_wave() {
    let p = params(&genus_one(), -1.0, 0, Preset::Smooth);
    let v = genus_one_velocity(&p).unwrap();
    let est = estimate_velocity(&p, 0.0, 1.0, (-3.0, 3.0), (-15.0, 15.0), 64).unwrap();
    assert!((est - v).abs() < 1e-8, "{est} vs {v}");
    let mut worst: f64 = 0.0;
    for i in 0..=60 {
        let y = -3.0 + 0.1 * i as f64;
        let x1 = x_of(&p, y, 1.0).unwrap();
        let u1 = point_value(&p, y, 1.0).unwrap().u.re;
        let y0 = invert_x(&p, 0.0, x1 - est, (y - 10.0, y + 10.0)).unwrap();
        let u0 = point_value(&p, y0, 0.0).unwrap().u.re;
        worst = worst.max((u1 - u0).abs());
    }
    assert!(worst < 1e-6, "{worst}");
}

/// Peaks of `|u - u_inf|` above `1e-3` on a uniform `y` sweep at time `t`,
/// together with the edge deviations.
fn soliton_peaks(pts: &[f64], a: f64, t: f64, lo: f64, hi: f64) -> (usize, f64) {
    let p = params(pts, a, 0, Preset::Smooth);
    let u_inf = -p.alpha2.re;
    let n = 4000;
    let dev: Vec<f64> = (0..=n)
        .map(|i| {
            let y = lo + (hi - lo) * i as f64 / n as f64;
            (point_value(&p, y, t).unwrap().u.re - u_inf).abs()
        })
        .collect();
    let peaks = (1..n).filter(|&i| dev[i] > dev[i - 1] && dev[i] >= dev[i + 1] && dev[i] > 1e-3).count();
    (peaks, dev[0].max(dev[n]))
}

#[test]
fn solitonic_limit_counts_and_decays() {
    for (t, lo, hi) in [(200.0, -74.0, -38.0), (-200.0, 38.0, 74.0)] {
        let (n, edge) = soliton_peaks(&genus_two(1e-14), -4.0, t, lo, hi);
        assert_eq!(n, 2, "t={t}");
        assert!(edge < 1e-6, "t={t}: {edge}");
    }
    for (t, lo, hi) in [(200.0, -90.0, -27.0), (-200.0, 27.0, 90.0)] {
        let (n, edge) = soliton_peaks(&genus_six(1e-14), -8.0, t, lo, hi);
        assert_eq!(n, 6, "t={t}");
        assert!(edge < 1e-6, "t={t}: {edge}");
    }
}
