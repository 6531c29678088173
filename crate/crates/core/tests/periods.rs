mod common;

use ch_theta::periods::a_periods;
use ch_theta::{QuadConfig, Sheet, SurfacePoint};
use common::*;
use num_complex::Complex64 as C;
use std::f64::consts::PI;

/// `int_p^q lambda^j / sqrt|prod| d lambda` over a cut, by the trapezoid rule
/// in `lambda = mid + half cos theta`, which removes both endpoint roots.
fn cut_integral(points: &[f64], cut: usize, j: i32, n: usize) -> f64 {
    let (p, q) = (points[2 * cut], points[2 * cut + 1]);
    let (mid, half) = (0.5 * (p + q), 0.5 * (q - p));
    let f = |theta: f64| {
        let lam = mid + half * theta.cos();
        let rest: f64 = points
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != 2 * cut && i != 2 * cut + 1)
            .map(|(_, &l)| (lam - l).abs())
            .product();
        lam.powi(j) / rest.sqrt()
    };
    let h = PI / n as f64;
    let mut s = 0.5 * (f(0.0) + f(PI));
    for i in 1..n {
        s += f(i as f64 * h);
    }
    s * h
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
        if (an - bn).abs() <= 1e-17 * an {
            return an;
        }
        a = an;
        b = bn;
    }
    a
}

/// Complete elliptic integral of the first kind with parameter `m = k^2`.
fn ellip_k(m: f64) -> f64 {
    PI / (2.0 * agm(1.0, (1.0 - m).sqrt()))
}

#[test]
fn genus_one_periods_match_elliptic_integrals() {
    // roots r1 < r2 < r3 < r4: int over [r3, r4] and [r2, r3] reduce to K with
    // m = (r4-r3)(r2-r1)/((r4-r2)(r3-r1)) and its complement, prefactor
    // 2 / sqrt((r4-r2)(r3-r1)).
    let pts = genus_one();
    let s = surface(&pts);
    let pref = 2.0 / ((pts[3] - pts[1]) * (pts[2] - pts[0])).sqrt();
    let m = (pts[3] - pts[2]) * (pts[1] - pts[0]) / ((pts[3] - pts[1]) * (pts[2] - pts[0]));
    let a = s.periods.a_raw[(0, 0)];
    let b = s.periods.b_raw[(0, 0)];
    let a_ref = 2.0 * pref * ellip_k(m);
    let b_ref = 2.0 * pref * ellip_k(1.0 - m);
    assert!((a.norm() - a_ref).abs() < 1e-12 * a_ref, "{a} vs {a_ref}");
    assert!(a.re.abs() < 1e-14 * a_ref);
    assert!((b.norm() - b_ref).abs() < 1e-12 * b_ref, "{b} vs {b_ref}");
    assert!(b.im.abs() < 1e-14 * b_ref);
}

#[test]
fn genus_two_a_periods_match_trapezoid_oracle() {
    let pts = genus_two(1.0);
    let a = a_periods(&curve(&pts), &QuadConfig::default()).unwrap();
    for k in 0..2 {
        for j in 0..2 {
            let oracle = 2.0 * cut_integral(&pts, k + 1, j as i32, 4000);
            let v = a[(k, j)];
            assert!(v.re.abs() < 1e-14 * v.norm());
            assert!((v.norm() - oracle.abs()).abs() < 1e-12 * oracle.abs(), "({k},{j}) {v} vs {oracle}");
        }
        let ratio = a[(k, 1)] / a[(k, 0)];
        let oracle = cut_integral(&pts, k + 1, 1, 4000) / cut_integral(&pts, k + 1, 0, 4000);
        assert!((ratio - C::new(oracle, 0.0)).norm() < 1e-12 * oracle.abs());
    }
}

#[test]
fn collapsed_cut_integral_tends_to_residue_value() {
    for gap in [1e-14, 1e-6] {
        let pts = genus_two(gap);
        let a = a_periods(&curve(&pts), &QuadConfig::default()).unwrap();
        let mid = 0.5 * gap;
        let reduced = ((mid + 3.0) * (mid + 2.0) * (mid - 2.0) * (mid - 2.0 - gap)).abs().sqrt();
        let limit = PI / reduced;
        let one_sided = 0.5 * a[(0, 0)].norm();
        assert!((one_sided - limit).abs() < 1e-6 * limit, "gap {gap}: {one_sided} vs {limit}");
        assert!((0.5 * a[(0, 1)].norm() - limit * mid).abs() < 1e-6 * limit);
        if gap > 1e-10 {
            let oracle = cut_integral(&pts, 1, 0, 4000);
            assert!((one_sided - oracle).abs() < 1e-12 * oracle);
        }
    }
}

#[test]
fn degenerate_diagonal_diverges_logarithmically() {
    let eps = [1e-4, 1e-8, 1e-14];
    let curves: Vec<_> = eps.iter().map(|&e| genus_two(e)).collect();
    let bs: Vec<_> = curves.iter().map(|p| surface(p).riemann().clone()).collect();
    for k in 0..2 {
        // actual cut widths: 2 + eps is rounded
        let w: Vec<f64> = curves.iter().map(|p| p[2 * k + 3] - p[2 * k + 2]).collect();
        let s1 = (bs[1][(k, k)].re - bs[0][(k, k)].re) / (w[1] / w[0]).ln();
        let s2 = (bs[2][(k, k)].re - bs[1][(k, k)].re) / (w[2] / w[1]).ln();
        assert!((s1 - s2).abs() < 1e-3 * s1.abs(), "slopes {s1} {s2}");
        assert!((s1 - 2.0).abs() < 1e-2, "slope {s1}");
        assert!(bs[2][(k, k)].re < -50.0);
    }
    let off = (bs[2][(0, 1)] - bs[1][(0, 1)]).norm();
    assert!(off < 1e-3, "off-diagonal moved by {off}");
}

#[test]
fn period_invariants_on_every_curve() {
    for pts in [genus_one(), genus_two(1.0), genus_two(1e-14), genus_six(1.0), genus_six(1e-14)] {
        let s = surface(&pts);
        let r = s.periods.residuals();
        assert!(r.symmetry < 1e-10, "{pts:?}: {r:?}");
        assert!(r.max_re_eigenvalue < 0.0, "{pts:?}: {r:?}");
        assert!(r.normalization < 1e-10, "{pts:?}: {r:?}");
        assert!(r.imag_lattice < 1e-8, "{pts:?}: {r:?}");
    }
}

#[test]
fn abel_map_is_additive_and_path_independent() {
    let s = surface(&genus_two(1.0));
    let b = s.riemann();
    let pts = [
        SurfacePoint::real(-4.0, Sheet::One),
        SurfacePoint::real(1.5, Sheet::Two),
        SurfacePoint::real(5.0, Sheet::One),
        SurfacePoint::complex(C::new(0.7, 0.9), Sheet::One),
        SurfacePoint::complex(C::new(-2.4, -1.3), Sheet::Two),
        SurfacePoint::branch(3),
    ];
    for &p in &pts {
        assert!(s.abel_map(p, p).unwrap().iter().all(|z| z.norm() < 1e-14));
        for &q in &pts {
            let direct = s.abel_map(p, q).unwrap();
            for &base in &pts {
                let via_p = s.abel_map(p, base).unwrap();
                let via_q = s.abel_map(q, base).unwrap();
                let w: Vec<C> = (0..2).map(|i| direct[i] - (via_p[i] - via_q[i])).collect();
                let d = lattice_distance(&w, b);
                assert!(d < 1e-8, "{p:?} {q:?} {base:?}: {d}");
            }
        }
    }
}

#[test]
fn sheet_swap_goes_twice_to_the_nearest_branch_point() {
    let s = surface(&genus_two(1.0));
    let a = SurfacePoint::real(-4.0, Sheet::One);
    let swap = s.abel_map(a.sigma(), a).unwrap();
    let half = s.abel_map(SurfacePoint::branch(0), a).unwrap();
    let w: Vec<C> = (0..2).map(|i| swap[i] - 2.0 * half[i]).collect();
    assert!(lattice_distance(&w, s.riemann()) < 1e-10);
}

#[test]
fn branch_direction_vector_matches_abel_difference_quotient() {
    for pts in [genus_one(), genus_two(1.0)] {
        let s = surface(&pts);
        let g = s.genus();
        for (j, &lambda) in pts.iter().enumerate() {
            let v = s.direction_vector(SurfacePoint::branch(j)).unwrap().v;
            let side = if j % 2 == 0 { -1.0 } else { 1.0 };
            let quotient = |h: f64, sheet: Sheet| -> Vec<C> {
                let p = SurfacePoint::real(lambda + side * h * h, sheet);
                let pi = s.abel_map(p, SurfacePoint::branch(j)).unwrap();
                pi.iter().map(|z| z / h).collect()
            };
            // the two sheets carry k and -k; one of them must reproduce v
            let err = [Sheet::One, Sheet::Two]
                .into_iter()
                .map(|sheet| {
                    let (h1, h2) = (quotient(2e-3, sheet), quotient(1e-3, sheet));
                    (0..g)
                        .map(|i| ((4.0 * h2[i] - h1[i]) / 3.0 - v[i]).norm() / v[i].norm().max(1.0))
                        .fold(0.0, f64::max)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(err < 1e-6, "branch {j}: {err}");
        }
    }
}

#[test]
fn direction_vectors_are_real_at_real_points() {
    let s = surface(&genus_two(1.0));
    for p in [
        SurfacePoint::real(-4.0, Sheet::One),
        SurfacePoint::real(-4.0, Sheet::Two),
        SurfacePoint::branch(0),
        SurfacePoint::branch(1),
    ] {
        let v = s.direction_vector(p).unwrap().v;
        assert!(v.iter().all(|z| z.im.abs() < 1e-10 * z.norm().max(1.0)), "{p:?}: {v:?}");
    }
}
