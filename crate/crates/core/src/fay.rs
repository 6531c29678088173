//! Scalars of the two-point corollaries of Fay's trisecant identity and
//! residual evaluators for them:
//!
//! `D_b ln(Theta(z + int_c^a) / Theta(z)) = p1 + p2 Theta(z + int_b^a) Theta(z + int_c^b) / (Theta(z + int_c^a) Theta(z))`,
//!
//! `D_a D_b ln Theta(z) = q1 + q2 Theta(z + int_a^b) Theta(z - int_a^b) / Theta(z)^2`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::curve::SurfacePoint;
use crate::error::{Error, Result};
use crate::periods::Surface;
use crate::theta::{ratio, Characteristics, Scaled, ThetaContext};

type C = Complex64;

/// Below this `|D Theta[d](0)|` a characteristic is treated as singular.
pub const SINGULAR_GRADIENT: f64 = 1e-10;

/// A point with its Abel image (w.r.t. a common base) and direction vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Marked {
    pub point: SurfacePoint,
    pub abel: Vec<C>,
    pub v: Vec<C>,
}

impl Marked {
    pub fn new(surface: &Surface, point: SurfacePoint, base: SurfacePoint) -> Result<Marked> {
        Ok(Marked { point, abel: surface.abel_map(point, base)?, v: surface.direction_vector(point)?.v })
    }
}

/// `int_from^to omega`.
pub fn between(from: &Marked, to: &Marked) -> Vec<C> {
    to.abel.iter().zip(&from.abel).map(|(t, f)| t - f).collect()
}

fn add(a: &[C], b: &[C], s: f64) -> Vec<C> {
    a.iter().zip(b).map(|(x, y)| x + y * s).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FayP {
    pub p1: C,
    pub p2: C,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FayQ {
    pub q1: C,
    pub q2: C,
}

/// Relative residuals of the four identities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FayResiduals {
    pub fay1: f64,
    pub fay2: f64,
    pub ch1: f64,
    pub ch2: f64,
}

impl FayResiduals {
    pub fn max(&self) -> f64 {
        self.fay1.max(self.fay2).max(self.ch1).max(self.ch2)
    }

    fn merge(self, o: FayResiduals) -> FayResiduals {
        FayResiduals {
            fay1: self.fay1.max(o.fay1),
            fay2: self.fay2.max(o.fay2),
            ch1: self.ch1.max(o.ch1),
            ch2: self.ch2.max(o.ch2),
        }
    }
}

pub fn relative(l: C, r: C) -> f64 {
    (l - r).norm() / (l.norm() + r.norm() + 1e-300)
}

/// Theta context together with the odd characteristic used in the scalars.
#[derive(Debug, Clone)]
pub struct FayContext {
    pub theta: ThetaContext,
    pub delta: Characteristics,
}

/// Gaussian envelope `1/2 x^T A^{-1} x` of `|Theta(z)|`, `x = Re z`, which the
/// log-scale of a theta value exceeds by at most a bounded amount.
fn envelope(theta: &ThetaContext, z: &[C]) -> Result<f64> {
    Ok(theta.theta(z, &Characteristics::zero(theta.genus()))?.ln_abs())
}

/// Conditioning score of an odd characteristic on a set of marked points:
/// the smallest of `ln|D_p Theta[d](0)|` and `ln|Theta[d](int_p^q)|` relative
/// to the even theta at the same argument.
pub fn characteristic_score(theta: &ThetaContext, delta: &Characteristics, points: &[&Marked]) -> Result<(f64, f64)> {
    let g = theta.genus();
    let zero = vec![C::new(0.0, 0.0); g];
    let dirs: Vec<&[C]> = points.iter().map(|m| m.v.as_slice()).collect();
    let jet = theta.jet(&zero, delta, &dirs, false)?;
    let min_grad = (0..points.len()).map(|i| jet.scaled_d1(i).full().norm()).fold(f64::INFINITY, f64::min);
    let mut score = min_grad.ln();
    for (i, p) in points.iter().enumerate() {
        for q in points.iter().skip(i + 1) {
            let w = between(p, q);
            let v = theta.theta(&w, delta)?.ln_abs() - envelope(theta, &w)?;
            score = score.min(v);
        }
    }
    Ok((score, min_grad))
}

const SCREEN_EPS: f64 = 1e-4;
const SCREEN_KEEP: usize = 8;

fn best_of(theta: &ThetaContext, cands: &[Characteristics], points: &[&Marked]) -> Result<Vec<(usize, f64)>> {
    let scored: Vec<(f64, f64)> =
        cands.par_iter().map(|d| characteristic_score(theta, d, points)).collect::<Result<_>>()?;
    let mut ok: Vec<(usize, f64)> = scored
        .iter()
        .enumerate()
        .filter(|(_, &(s, grad))| grad >= SINGULAR_GRADIENT && s.is_finite())
        .map(|(i, &(s, _))| (i, s))
        .collect();
    ok.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    Ok(ok)
}

/// Odd characteristic with the best conditioning score on `points`.
///
/// Candidates are screened with a coarse truncation and the leaders are
/// rescored at the context's own accuracy.
pub fn select_odd(theta: &ThetaContext, points: &[&Marked]) -> Result<Characteristics> {
    let odd = Characteristics::odd(theta.genus());
    let shortlist: Vec<Characteristics> = if odd.len() > SCREEN_KEEP && theta.eps() < SCREEN_EPS {
        let coarse = ThetaContext::new(theta.riemann(), SCREEN_EPS)?;
        best_of(&coarse, &odd, points)?.into_iter().take(SCREEN_KEEP).map(|(i, _)| odd[i].clone()).collect()
    } else {
        odd
    };
    let best = best_of(theta, &shortlist, points)?;
    best.first().map(|&(i, _)| shortlist[i].clone()).ok_or(Error::SingularCharacteristics)
}

impl FayContext {
    pub fn new(theta: ThetaContext, delta: Characteristics) -> Result<Self> {
        if !delta.is_odd() || delta.genus() != theta.genus() {
            return Err(Error::InvalidInput("an odd characteristic of matching genus is required".into()));
        }
        Ok(FayContext { theta, delta })
    }

    /// Context with the odd characteristic chosen by [`select_odd`].
    pub fn select(theta: ThetaContext, points: &[&Marked]) -> Result<Self> {
        let delta = select_odd(&theta, points)?;
        FayContext::new(theta, delta)
    }

    fn grad_zero(&self, dir: &[C]) -> Result<C> {
        let zero = vec![C::new(0.0, 0.0); self.theta.genus()];
        let d = self.theta.theta_deriv(&zero, &self.delta, &[dir])?.full();
        if d.norm() < SINGULAR_GRADIENT {
            return Err(Error::SingularCharacteristics);
        }
        Ok(d)
    }

    fn nonzero(&self, s: Scaled, what: &'static str) -> Result<Scaled> {
        if s.value.norm() == 0.0 || !s.value.is_finite() {
            return Err(Error::VanishingDenominator(what));
        }
        Ok(s)
    }

    /// `p1(a, b, c)` and `p2(a, b, c)`.
    pub fn fay_p(&self, a: &Marked, b: &Marked, c: &Marked) -> Result<FayP> {
        let d = &self.delta;
        let jab = self.theta.jet(&between(a, b), d, &[&b.v], false)?;
        let jcb = self.theta.jet(&between(c, b), d, &[&b.v], false)?;
        self.nonzero(jab.scaled(), "Theta[d](int_a^b)")?;
        self.nonzero(jcb.scaled(), "Theta[d](int_c^b)")?;
        let p1 = -(jab.dlog(0) - jcb.dlog(0));
        let num = self.theta.theta(&between(c, a), d)?;
        let den_ab = self.nonzero(self.theta.theta(&between(b, a), d)?, "Theta[d](int_b^a)")?;
        let den_cb = self.nonzero(self.theta.theta(&between(b, c), d)?, "Theta[d](int_b^c)")?;
        let den = Scaled { log_scale: den_ab.log_scale + den_cb.log_scale, value: den_ab.value * den_cb.value };
        let p2 = ratio(num, den) * self.grad_zero(&b.v)?;
        Ok(FayP { p1, p2 })
    }

    /// `q1(a, b)` and `q2(a, b)`.
    pub fn fay_q(&self, a: &Marked, b: &Marked) -> Result<FayQ> {
        let w = between(a, b);
        let jet = self.theta.jet(&w, &self.delta, &[&a.v, &b.v], true)?;
        self.nonzero(jet.scaled(), "Theta[d](int_a^b)")?;
        let q1 = jet.d2log(0, 1);
        let t = jet.scaled();
        let sq = Scaled { log_scale: 2.0 * t.log_scale, value: t.value * t.value };
        let one = Scaled { log_scale: 0.0, value: C::new(1.0, 0.0) };
        let q2 = self.grad_zero(&a.v)? * self.grad_zero(&b.v)? * ratio(one, sq);
        Ok(FayQ { q1, q2 })
    }

    /// Relative residual of the first identity for the ordered triple.
    pub fn fay1_residual(&self, z: &[C], a: &Marked, b: &Marked, c: &Marked) -> Result<f64> {
        let FayP { p1, p2 } = self.fay_p(a, b, c)?;
        let zero = Characteristics::zero(self.theta.genus());
        let zca = add(z, &between(c, a), 1.0);
        let j_ca = self.theta.jet(&zca, &zero, &[&b.v], false)?;
        let j_0 = self.theta.jet(z, &zero, &[&b.v], false)?;
        let lhs = j_ca.dlog(0) - j_0.dlog(0);
        let t_ba = self.theta.theta(&add(z, &between(b, a), 1.0), &zero)?;
        let t_cb = self.theta.theta(&add(z, &between(c, b), 1.0), &zero)?;
        let num = Scaled { log_scale: t_ba.log_scale + t_cb.log_scale, value: t_ba.value * t_cb.value };
        let den = Scaled { log_scale: j_ca.log_scale + j_0.log_scale, value: j_ca.value * j_0.value };
        let rhs = p1 + p2 * ratio(num, den);
        Ok(relative(lhs, rhs))
    }

    /// Relative residual of the second identity for the ordered pair.
    pub fn fay2_residual(&self, z: &[C], a: &Marked, b: &Marked) -> Result<f64> {
        let FayQ { q1, q2 } = self.fay_q(a, b)?;
        let zero = Characteristics::zero(self.theta.genus());
        let w = between(a, b);
        let j = self.theta.jet(z, &zero, &[&a.v, &b.v], true)?;
        let lhs = j.d2log(0, 1);
        let tp = self.theta.theta(&add(z, &w, 1.0), &zero)?;
        let tm = self.theta.theta(&add(z, &w, -1.0), &zero)?;
        let num = Scaled { log_scale: tp.log_scale + tm.log_scale, value: tp.value * tm.value };
        let den = Scaled { log_scale: 2.0 * j.log_scale, value: j.value * j.value };
        Ok(relative(lhs, q1 + q2 * ratio(num, den)))
    }
}

/// Scalars entering the solution for `b = sigma(a)` and a branch point `e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChScalars {
    /// `p1(b, e, a)`
    pub p1: C,
    /// `p2(b, e, a)`
    pub p2: C,
    /// `p1(e, b, a)`
    pub p1t: C,
    /// `p2(e, b, a)`
    pub p2t: C,
    /// `q2(b, e)`
    pub q2t: C,
}

impl ChScalars {
    pub fn new(ctx: &FayContext, a: &Marked, b: &Marked, e: &Marked) -> Result<ChScalars> {
        let p = ctx.fay_p(b, e, a)?;
        let pt = ctx.fay_p(e, b, a)?;
        let qt = ctx.fay_q(b, e)?;
        Ok(ChScalars { p1: p.p1, p2: p.p2, p1t: pt.p1, p2t: pt.p2, q2t: qt.q2 })
    }

    /// Relative mismatch of `q2(b,e) = -p2(e,b,a) p2(b,e,a)`.
    pub fn q_identity_residual(&self) -> f64 {
        relative(self.q2t, -self.p2t * self.p2)
    }
}

/// Residuals of the two identities satisfied by `g1 = Theta(z + r/2) / Theta(z)`
/// and `g2 = Theta(z - r/2) / Theta(z)`.
pub fn ch_identity_residuals(
    ctx: &FayContext,
    s: &ChScalars,
    z: &[C],
    r: &[C],
    vb: &[C],
    ve: &[C],
) -> Result<(f64, f64)> {
    let zero = Characteristics::zero(ctx.theta.genus());
    let jp = ctx.theta.jet(&add(z, r, 0.5), &zero, &[vb, ve], true)?;
    let jm = ctx.theta.jet(&add(z, r, -0.5), &zero, &[vb, ve], true)?;
    let j0 = ctx.theta.jet(z, &zero, &[vb, ve], true)?;
    let num = Scaled { log_scale: jp.log_scale + jm.log_scale, value: jp.value * jm.value };
    let den = Scaled { log_scale: 2.0 * j0.log_scale, value: j0.value * j0.value };
    let g1g2 = ratio(num, den);
    let db_ln_prod = jp.dlog(0) + jm.dlog(0) - 2.0 * j0.dlog(0);
    let db_ln_quot = jp.dlog(0) - jm.dlog(0);
    let lhs1 = jp.d2log(0, 1) - jm.d2log(0, 1);
    let rhs1 = -s.p2 / g1g2 * db_ln_prod;
    let lhs2 = jp.d2log(0, 1) + jm.d2log(0, 1) - 2.0 * j0.d2log(0, 1);
    let rhs2 = s.q2t / s.p2t / g1g2 * (db_ln_quot - 2.0 * s.p1t) - 2.0 * s.q2t * g1g2;
    Ok((relative(lhs1, rhs1), relative(lhs2, rhs2)))
}

/// All four residuals at `z`: the first identity over the six orderings of
/// `(a, b, e)`, the second over the ordered pairs, and the two
/// `g1, g2` identities with `r = int_a^b omega`.
pub fn fay_residuals(ctx: &FayContext, z: &[C], a: &Marked, b: &Marked, e: &Marked) -> Result<FayResiduals> {
    if !e.point.is_branch() {
        return Err(Error::ENotBranchPoint);
    }
    let pts = [a, b, e];
    let mut out = FayResiduals::default();
    for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
        out.fay1 = out.fay1.max(ctx.fay1_residual(z, pts[i], pts[j], pts[k])?);
        out.fay2 = out.fay2.max(ctx.fay2_residual(z, pts[i], pts[j])?);
    }
    let s = ChScalars::new(ctx, a, b, e)?;
    let r = between(a, b);
    let (c1, c2) = ch_identity_residuals(ctx, &s, z, &r, &b.v, &e.v)?;
    out.ch1 = c1;
    out.ch2 = c2;
    Ok(out)
}

/// Worst residuals over a batch of arguments.
pub fn fay_residuals_batch(
    ctx: &FayContext,
    zs: &[Vec<C>],
    a: &Marked,
    b: &Marked,
    e: &Marked,
) -> Result<FayResiduals> {
    let all: Vec<FayResiduals> = zs.par_iter().map(|z| fay_residuals(ctx, z, a, b, e)).collect::<Result<_>>()?;
    Ok(all.into_iter().fold(FayResiduals::default(), FayResiduals::merge))
}
