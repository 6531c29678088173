//! Riemann theta functions with half-integer characteristics,
//!
//! `Theta[d](z) = sum_n exp(1/2 <B(n+d1), n+d1> + <n+d1, z + 2 pi i d2>)`,
//!
//! evaluated as a log-scale plus a bounded value. Lattice points are
//! enumerated inside the ellipsoid where the Gaussian factor exceeds the tail
//! tolerance, centred at the minimizer of the real part of the exponent.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

type C = Complex64;

pub const DEFAULT_THETA_EPS: f64 = 1e-12;

/// Half-integer characteristics `[d1; d2]`, entries 0 or 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct Characteristics {
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
}

impl Characteristics {
    pub fn zero(g: usize) -> Self {
        Characteristics { delta1: vec![0.0; g], delta2: vec![0.0; g] }
    }

    pub fn new(delta1: Vec<f64>, delta2: Vec<f64>) -> Result<Self> {
        if delta1.len() != delta2.len() {
            return Err(Error::InvalidInput("characteristics of unequal length".into()));
        }
        if delta1.iter().chain(&delta2).any(|&d| d != 0.0 && d != 0.5) {
            return Err(Error::InvalidInput("characteristics entries must be 0 or 1/2".into()));
        }
        Ok(Characteristics { delta1, delta2 })
    }

    /// From bit vectors: entry `1` means 1/2.
    pub fn from_bits(b1: &[u8], b2: &[u8]) -> Result<Self> {
        let conv = |b: &[u8]| -> Result<Vec<f64>> {
            b.iter()
                .map(|&x| match x {
                    0 => Ok(0.0),
                    1 => Ok(0.5),
                    _ => Err(Error::InvalidInput(format!("characteristic bit {x}"))),
                })
                .collect()
        };
        Characteristics::new(conv(b1)?, conv(b2)?)
    }

    pub fn genus(&self) -> usize {
        self.delta1.len()
    }

    /// `4 <d1, d2> mod 2`.
    pub fn is_odd(&self) -> bool {
        let s: f64 = self.delta1.iter().zip(&self.delta2).map(|(a, b)| a * b).sum();
        ((4.0 * s).round() as i64) % 2 == 1
    }

    /// All `4^g` characteristics in a fixed order.
    pub fn all(g: usize) -> Vec<Characteristics> {
        (0..1usize << (2 * g))
            .map(|code| {
                let bit = |i: usize| if code >> i & 1 == 1 { 0.5 } else { 0.0 };
                Characteristics { delta1: (0..g).map(bit).collect(), delta2: (g..2 * g).map(bit).collect() }
            })
            .collect()
    }

    pub fn odd(g: usize) -> Vec<Characteristics> {
        Characteristics::all(g).into_iter().filter(|c| c.is_odd()).collect()
    }
}

/// `value * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub log_scale: f64,
    pub value: C,
}

impl Scaled {
    pub fn full(&self) -> C {
        self.value * self.log_scale.exp()
    }

    /// `ln|self|`.
    pub fn ln_abs(&self) -> f64 {
        self.log_scale + self.value.norm().ln()
    }
}

/// `a / b` for two scaled numbers.
pub fn ratio(a: Scaled, b: Scaled) -> C {
    a.value / b.value * (a.log_scale - b.log_scale).exp()
}

/// Theta value with first and mixed second directional derivatives, sharing
/// one log-scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub log_scale: f64,
    pub value: C,
    pub d1: Vec<C>,
    pub d2: DMatrix<C>,
}

impl Jet {
    /// `D_i ln Theta`.
    pub fn dlog(&self, i: usize) -> C {
        self.d1[i] / self.value
    }

    /// `D_i D_j ln Theta`.
    pub fn d2log(&self, i: usize, j: usize) -> C {
        self.d2[(i, j)] / self.value - self.d1[i] * self.d1[j] / (self.value * self.value)
    }

    pub fn scaled(&self) -> Scaled {
        Scaled { log_scale: self.log_scale, value: self.value }
    }

    pub fn scaled_d1(&self, i: usize) -> Scaled {
        Scaled { log_scale: self.log_scale, value: self.d1[i] }
    }
}

/// Riemann matrix with the data needed for lattice enumeration.
#[derive(Debug, Clone)]
pub struct ThetaContext {
    b: DMatrix<C>,
    a_inv: DMatrix<f64>,
    /// upper-triangular factor with `A = R^T R`
    r: DMatrix<f64>,
    eps: f64,
    /// enumeration depth below the largest term
    rho: f64,
}

fn unit_ball_volume(g: usize) -> f64 {
    // V_k = 2 pi / k * V_{k-2}
    let mut v = vec![1.0, 2.0];
    for k in 2..=g {
        v.push(2.0 * PI / k as f64 * v[k - 2]);
    }
    v[g]
}

impl ThetaContext {
    pub fn new(b: &DMatrix<C>, eps: f64) -> Result<Self> {
        let g = b.nrows();
        if g == 0 || b.ncols() != g {
            return Err(Error::InvalidInput("Riemann matrix must be square and nonempty".into()));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidInput(format!("truncation eps {eps} outside (0, 1)")));
        }
        let re = b.map(|z| -z.re);
        let a = (&re + re.transpose()) * 0.5;
        let chol = a.clone().cholesky().ok_or(Error::NotNegativeDefinite)?;
        let r = chol.l().transpose();
        let a_inv = chol.inverse();
        let det_sqrt: f64 = r.diagonal().iter().product();
        let vol = (unit_ball_volume(g) * 2f64.powf(0.5 * g as f64) / det_sqrt).max(1.0);
        // Lattice points with 1/2 Q in [s, s + ds] number about
        // vol * d(s^{g/2}); choose rho so that the tail of exp(-s) over them
        // stays below eps.
        let base = (vol / eps).ln();
        let mut rho = base;
        for _ in 0..8 {
            rho = base + 0.5 * g as f64 * rho.max(1.0).ln() + 2.0;
        }
        Ok(ThetaContext { b: b.clone(), a_inv, r, eps, rho })
    }

    pub fn genus(&self) -> usize {
        self.b.nrows()
    }

    pub fn riemann(&self) -> &DMatrix<C> {
        &self.b
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Ellipsoid level of the enumeration (`1/2 Q <= rho`).
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Context with the enumeration ellipsoid scaled by `factor` in radius.
    pub fn with_radius_factor(&self, factor: f64) -> Self {
        let mut c = self.clone();
        c.rho *= factor * factor;
        c
    }

    /// Visits every `n in Z^g + d1` with `1/2 (Q(n) - q0) <= rho`, where
    /// `Q(n) = (n-c)^T A (n-c)`.
    fn enumerate<F: FnMut(&[f64], f64)>(&self, c: &[f64], d1: &[f64], q0: f64, mut visit: F) {
        let g = self.genus();
        let bound = q0 + 2.0 * self.rho;
        let mut n = vec![0.0; g];
        self.descend(g, c, d1, bound, 0.0, &mut n, &mut visit);
    }

    #[allow(clippy::too_many_arguments)]
    fn descend<F: FnMut(&[f64], f64)>(
        &self,
        level: usize,
        c: &[f64],
        d1: &[f64],
        bound: f64,
        acc: f64,
        n: &mut Vec<f64>,
        visit: &mut F,
    ) {
        if level == 0 {
            visit(n, acc);
            return;
        }
        let i = level - 1;
        let g = self.genus();
        let rii = self.r[(i, i)];
        let mut shift = 0.0;
        for j in level..g {
            shift += self.r[(i, j)] * (n[j] - c[j]);
        }
        // (rii (n_i - c_i) + shift)^2 <= bound - acc
        let room = bound - acc;
        if room < 0.0 {
            return;
        }
        let centre = c[i] - shift / rii;
        let half = room.sqrt() / rii;
        let lo = (centre - half - d1[i]).ceil() as i64;
        let hi = (centre + half - d1[i]).floor() as i64;
        for k in lo..=hi {
            n[i] = k as f64 + d1[i];
            let t = rii * (n[i] - c[i]) + shift;
            self.descend(level - 1, c, d1, bound, acc + t * t, n, visit);
        }
    }

    /// Centre `c = A^{-1} Re z` and the reference level `q0` of the lattice
    /// point nearest to it; the real part of the exponent at `n` equals
    /// `1/2 x^T A^{-1} x - 1/2 Q(n)`.
    fn centre(&self, z: &[C], d1: &[f64]) -> (Vec<f64>, f64, f64) {
        let x = DVector::from_iterator(z.len(), z.iter().map(|w| w.re));
        let c = &self.a_inv * &x;
        let n0 = DVector::from_iterator(z.len(), c.iter().zip(d1).map(|(ci, di)| (ci - di).round() + di));
        let q0 = (&self.r * (n0 - &c)).norm_squared();
        let log_scale = 0.5 * x.dot(&c) - 0.5 * q0;
        (c.iter().copied().collect(), log_scale, q0)
    }

    fn check(&self, z: &[C], ch: &Characteristics) -> Result<()> {
        if z.len() != self.genus() || ch.genus() != self.genus() {
            return Err(Error::InvalidInput(format!(
                "theta argument of length {} / characteristics of genus {} for genus {}",
                z.len(),
                ch.genus(),
                self.genus()
            )));
        }
        Ok(())
    }

    /// Value, first derivatives along each of `dirs` and, when `second` is
    /// set, all mixed second derivatives.
    pub fn jet(&self, z: &[C], ch: &Characteristics, dirs: &[&[C]], second: bool) -> Result<Jet> {
        self.check(z, ch)?;
        let g = self.genus();
        if dirs.iter().any(|d| d.len() != g) {
            return Err(Error::InvalidInput("direction vector length".into()));
        }
        let (c, log_scale, q0) = self.centre(z, &ch.delta1);
        let im_z: Vec<f64> = z.iter().zip(&ch.delta2).map(|(w, d2)| w.im + 2.0 * PI * d2).collect();
        let im_b = self.b.map(|w| w.im);
        let nd = dirs.len();
        let mut value = C::new(0.0, 0.0);
        let mut d1 = vec![C::new(0.0, 0.0); nd];
        let mut d2 = DMatrix::from_element(nd, nd, C::new(0.0, 0.0));
        let mut s = vec![C::new(0.0, 0.0); nd];
        // reference level follows the dominant term seen so far
        let mut qref = q0;
        self.enumerate(&c, &ch.delta1, q0, |n, q| {
            if q < qref {
                let f = (0.5 * (q - qref)).exp();
                value *= f;
                d1.iter_mut().for_each(|v| *v *= f);
                d2.iter_mut().for_each(|v| *v *= f);
                qref = q;
            }
            let mut phase = 0.0;
            for i in 0..g {
                let mut row = 0.0;
                for j in 0..g {
                    row += im_b[(i, j)] * n[j];
                }
                phase += n[i] * (0.5 * row + im_z[i]);
            }
            let w = C::from_polar((-0.5 * (q - qref)).exp(), phase);
            value += w;
            if nd > 0 {
                for (k, d) in dirs.iter().enumerate() {
                    s[k] = d.iter().zip(n).map(|(v, m)| v * m).sum::<C>();
                    d1[k] += s[k] * w;
                }
                if second {
                    for a in 0..nd {
                        for b in a..nd {
                            d2[(a, b)] += s[a] * s[b] * w;
                        }
                    }
                }
            }
        });
        if second {
            for a in 0..nd {
                for b in 0..a {
                    d2[(a, b)] = d2[(b, a)];
                }
            }
        }
        Ok(Jet { log_scale: log_scale + 0.5 * (q0 - qref), value, d1, d2 })
    }

    pub fn theta(&self, z: &[C], ch: &Characteristics) -> Result<Scaled> {
        Ok(self.jet(z, ch, &[], false)?.scaled())
    }

    /// First (`dirs.len() == 1`) or mixed second (`dirs.len() == 2`)
    /// directional derivative.
    pub fn theta_deriv(&self, z: &[C], ch: &Characteristics, dirs: &[&[C]]) -> Result<Scaled> {
        let j = match dirs.len() {
            1 => {
                let j = self.jet(z, ch, dirs, false)?;
                return Ok(j.scaled_d1(0));
            }
            2 => self.jet(z, ch, dirs, true)?,
            n => return Err(Error::InvalidInput(format!("{n} directions; expected 1 or 2"))),
        };
        Ok(Scaled { log_scale: j.log_scale, value: j.d2[(0, 1)] })
    }

    /// Relative mismatch of
    /// `Theta[d](z + 2 pi i N + B M) = Theta[d](z) exp(-1/2 <BM, M> - <z, M> + 2 pi i (<d1, N> - <d2, M>))`.
    pub fn quasi_periodicity_residual(&self, z: &[C], ch: &Characteristics, n: &[i64], m: &[i64]) -> Result<f64> {
        self.check(z, ch)?;
        let g = self.genus();
        if n.len() != g || m.len() != g {
            return Err(Error::InvalidInput("lattice vector length".into()));
        }
        let mv = DVector::from_iterator(g, m.iter().map(|&k| C::new(k as f64, 0.0)));
        let bm = &self.b * &mv;
        let shifted: Vec<C> = (0..g).map(|i| z[i] + C::new(0.0, 2.0 * PI * n[i] as f64) + bm[i]).collect();
        let lhs = self.theta(&shifted, ch)?;
        let rhs = self.theta(z, ch)?;
        let mut f = -0.5 * bm.dot(&mv);
        for i in 0..g {
            f -= z[i] * m[i] as f64;
            f += C::new(0.0, 2.0 * PI * (ch.delta1[i] * n[i] as f64 - ch.delta2[i] * m[i] as f64));
        }
        let rhs = Scaled { log_scale: rhs.log_scale + f.re, value: rhs.value * C::from_polar(1.0, f.im) };
        let top = lhs.log_scale.max(rhs.log_scale);
        let l = lhs.value * (lhs.log_scale - top).exp();
        let r = rhs.value * (rhs.log_scale - top).exp();
        Ok((l - r).norm() / (l.norm() + r.norm() + 1e-300))
    }
}

/// `2 pi i d2 + B d1`.
pub fn char_to_shift(ch: &Characteristics, b: &DMatrix<C>) -> Vec<C> {
    let d1 = DVector::from_iterator(ch.genus(), ch.delta1.iter().map(|&x| C::new(x, 0.0)));
    let bd = b * d1;
    ch.delta2.iter().zip(bd.iter()).map(|(&d2, &w)| C::new(0.0, 2.0 * PI * d2) + w).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn genus2_b() -> DMatrix<C> {
        DMatrix::from_row_slice(2, 2, &[c(-9.8), c(-6.75), c(-6.75), c(-11.7)])
    }

    #[test]
    fn jacobi_theta_constant() {
        // sum_m exp(-pi m^2) = pi^{1/4} / Gamma(3/4)
        let b = DMatrix::from_element(1, 1, c(-2.0 * PI));
        let ctx = ThetaContext::new(&b, DEFAULT_THETA_EPS).unwrap();
        let v = ctx.theta(&[c(0.0)], &Characteristics::zero(1)).unwrap().full();
        let gamma_3_4 = 1.225_416_702_465_177_6;
        let exact = PI.powf(0.25) / gamma_3_4;
        assert!((v.re - exact).abs() < 1e-14, "{v}");
        assert!(v.im.abs() < 1e-16);
    }

    #[test]
    fn characteristics_enumeration() {
        assert_eq!(Characteristics::all(2).len(), 16);
        // 2^{g-1}(2^g - 1) odd characteristics
        assert_eq!(Characteristics::odd(2).len(), 6);
        assert_eq!(Characteristics::odd(3).len(), 28);
        assert!(Characteristics::new(vec![0.3], vec![0.0]).is_err());
    }

    #[test]
    fn odd_theta_vanishes_at_origin() {
        let ctx = ThetaContext::new(&genus2_b(), DEFAULT_THETA_EPS).unwrap();
        for ch in Characteristics::odd(2) {
            let v = ctx.theta(&[c(0.0), c(0.0)], &ch).unwrap().full();
            assert!(v.norm() < 1e-14, "{ch:?}: {v}");
        }
    }

    #[test]
    fn shift_relation() {
        let b = genus2_b();
        let ctx = ThetaContext::new(&b, DEFAULT_THETA_EPS).unwrap();
        let z = [C::new(0.3, -0.7), C::new(-1.1, 0.4)];
        for ch in Characteristics::all(2) {
            let d = char_to_shift(&ch, &b);
            let zs: Vec<C> = z.iter().zip(&d).map(|(a, b)| a + b).collect();
            let plain = ctx.theta(&zs, &Characteristics::zero(2)).unwrap().full();
            let mut f = C::new(0.0, 0.0);
            for i in 0..2 {
                let bd1: C = (0..2).map(|j| b[(i, j)] * ch.delta1[j]).sum();
                f += 0.5 * bd1 * ch.delta1[i] + (z[i] + C::new(0.0, 2.0 * PI * ch.delta2[i])) * ch.delta1[i];
            }
            let with_char = ctx.theta(&z, &ch).unwrap().full();
            let expect = plain * f.exp();
            assert!((with_char - expect).norm() < 1e-12 * expect.norm().max(1e-300), "{ch:?}");
        }
    }

    #[test]
    fn char_to_shift_examples() {
        let b = genus2_b();
        let zero = char_to_shift(&Characteristics::zero(2), &b);
        assert!(zero.iter().all(|z| z.norm() == 0.0));
        let d = char_to_shift(&Characteristics::from_bits(&[1, 1], &[0, 0]).unwrap(), &b);
        assert!((d[0] - 0.5 * (b[(0, 0)] + b[(0, 1)])).norm() < 1e-15);
        let d = char_to_shift(&Characteristics::from_bits(&[1, 1], &[1, 1]).unwrap(), &b);
        assert!((d[1] - C::new(0.0, PI) - 0.5 * (b[(1, 0)] + b[(1, 1)])).norm() < 1e-15);
    }

    #[test]
    fn gradient_of_even_theta_vanishes() {
        let ctx = ThetaContext::new(&genus2_b(), DEFAULT_THETA_EPS).unwrap();
        let v = [C::new(0.4, 0.1), C::new(-0.2, 0.9)];
        let d = ctx.theta_deriv(&[c(0.0), c(0.0)], &Characteristics::zero(2), &[&v]).unwrap();
        assert!(d.full().norm() < 1e-14);
    }

    #[test]
    fn quasi_periodicity_zero_shift_is_exact() {
        let ctx = ThetaContext::new(&genus2_b(), DEFAULT_THETA_EPS).unwrap();
        let r = ctx
            .quasi_periodicity_residual(&[C::new(0.2, 0.1), c(1.0)], &Characteristics::zero(2), &[0, 0], &[0, 0])
            .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn degenerate_matrix_has_no_overflow() {
        let b = DMatrix::from_row_slice(2, 2, &[c(-700.0), c(-6.0), c(-6.0), c(-900.0)]);
        let ctx = ThetaContext::new(&b, DEFAULT_THETA_EPS).unwrap();
        let z = [c(350.0), c(450.0)];
        let j = ctx.jet(&z, &Characteristics::zero(2), &[&[c(1.0), c(0.0)]], true).unwrap();
        assert!(j.value.is_finite() && j.log_scale.is_finite());
        assert!(j.value.norm() > 0.5);
        assert!(j.d1[0].is_finite() && j.d2[(0, 0)].is_finite());
    }

    #[test]
    fn rejects_indefinite_real_part() {
        let b = DMatrix::from_row_slice(2, 2, &[c(-1.0), c(0.0), c(0.0), c(1.0)]);
        assert_eq!(ThetaContext::new(&b, 1e-12).unwrap_err(), Error::NotNegativeDefinite);
    }
}
