mod common;

use ch_theta::ch::{solve_grid, GridSpec, NodeKind, Preset, RealityReport, SolutionField};
use ch_theta::validate::{cheb_operator, halfperiod_check, m_identity_residual, pde_residual};
use ch_theta::Error;
use common::*;

fn cheb(y0: f64, y1: f64, t0: f64, t1: f64, n: usize) -> GridSpec {
    GridSpec { y0, y1, ny: n, t0, t1, nt: n, node_kind: NodeKind::Chebyshev }
}

#[test]
fn smooth_genus_two_satisfies_the_equation() {
    let p = params(&genus_two(1.0), -4.0, 0, Preset::Smooth);
    let field = solve_grid(&p, &cheb(-4.0, 4.0, 0.0, 2.0, 64)).unwrap();
    let r = pde_residual(&field).unwrap();
    assert!(r < 1e-6, "{r}");
    let m = m_identity_residual(&field).unwrap();
    assert!(m < 1e-6, "{m}");
}

#[test]
fn genus_one_satisfies_the_equation() {
    let p = params(&genus_one(), -1.0, 0, Preset::Smooth);
    let field = solve_grid(&p, &cheb(-5.0, 5.0, 0.0, 2.0, 65)).unwrap();
    assert!(pde_residual(&field).unwrap() < 1e-6);
}

#[test]
fn perturbed_field_is_flagged() {
    let p = params(&genus_two(1.0), -4.0, 0, Preset::Smooth);
    let mut field = solve_grid(&p, &cheb(-4.0, 4.0, 0.0, 2.0, 64)).unwrap();
    field.u.iter_mut().flatten().for_each(|u| *u *= 1.0 + 1e-4);
    let r = pde_residual(&field).unwrap();
    assert!(r > 1e-5, "{r}");
}

#[test]
fn residual_falls_with_resolution_until_roundoff() {
    let p = params(&genus_two(1.0), -4.0, 0, Preset::Smooth);
    let r: Vec<f64> = [33, 65, 129]
        .iter()
        .map(|&n| pde_residual(&solve_grid(&p, &cheb(-4.0, 4.0, 0.0, 2.0, n)).unwrap()).unwrap())
        .collect();
    assert!(r[1] < 1e-2 * r[0], "{r:?}");
    // third spectral derivatives amplify rounding like N^6
    assert!(r[2] < 1e-5, "{r:?}");
}

#[test]
fn cusped_and_non_monotone_fields_are_rejected() {
    let p = params(&genus_two(1.0), -4.0, 1, Preset::Cusped);
    let field = solve_grid(&p, &cheb(-2.0, 2.0, 0.0, 1.0, 9)).unwrap();
    assert!(matches!(pde_residual(&field), Err(Error::CuspedFieldRejected)));

    let y: Vec<f64> = cheb_operator(8, -1.0, 1.0).unwrap().nodes;
    let row = |f: &dyn Fn(f64) -> f64| -> Vec<f64> { y.iter().map(|&v| f(v)).collect() };
    let field = SolutionField {
        y: y.clone(),
        t: y.clone(),
        node_kind: NodeKind::Chebyshev,
        x: vec![row(&|v| v * v); 9],
        u: vec![row(&|v| v); 9],
        ux: vec![vec![0.0; 9]; 9],
        uxx: vec![vec![0.0; 9]; 9],
        m: vec![vec![0.0; 9]; 9],
        cusp: vec![vec![false; 9]; 9],
        reality: RealityReport::default(),
        preset: Preset::Smooth,
        k: 1.0,
    };
    assert!(matches!(pde_residual(&field), Err(Error::NonMonotoneX(0))));
}

#[test]
fn branch_point_differences_are_half_periods() {
    for (pts, tol) in [
        (genus_one(), 1e-10),
        (genus_two(1.0), 1e-8),
        (genus_six(1.0), 1e-8),
        (genus_two(1e-14), 1e-6),
        (genus_six(1e-14), 1e-6),
    ] {
        let r = halfperiod_check(&surface(&pts)).unwrap();
        assert!(r < tol, "{pts:?}: {r}");
    }
}
