//! Real hyperelliptic M-curves `mu^2 = prod (lambda - lambda_i)` with all
//! branch points on the real line.
//!
//! Cuts join consecutive branch points `[lambda_{2k}, lambda_{2k+1}]`
//! (0-based), the gaps between them carry the real ovals on which `mu` is
//! real. Sheet 1 is the branch of `mu` that equals the principal square root
//! of the product at the reference point; it is continued analytically to the
//! whole plane minus the cuts. Points lying exactly on a cut are read on the
//! upper side of the cut.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_DEGENERACY_THRESHOLD: f64 = 1e-10;

/// One of the two sheets of the double cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sheet {
    One,
    Two,
}

impl Sheet {
    pub fn sign(self) -> f64 {
        match self {
            Sheet::One => 1.0,
            Sheet::Two => -1.0,
        }
    }

    pub fn swap(self) -> Sheet {
        match self {
            Sheet::One => Sheet::Two,
            Sheet::Two => Sheet::One,
        }
    }

    pub fn from_index(i: u8) -> Option<Sheet> {
        match i {
            1 => Some(Sheet::One),
            2 => Some(Sheet::Two),
            _ => None,
        }
    }
}

/// A point of the curve: a projection plus a sheet, or a branch point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfacePoint {
    Regular {
        lambda: Complex64,
        sheet: Sheet,
    },
    /// Ramification point `(lambda_j, 0)`, 0-based index into the sorted
    /// branch points.
    Branch(usize),
}

impl SurfacePoint {
    pub fn real(lambda: f64, sheet: Sheet) -> Self {
        SurfacePoint::Regular { lambda: Complex64::new(lambda, 0.0), sheet }
    }

    pub fn complex(lambda: Complex64, sheet: Sheet) -> Self {
        SurfacePoint::Regular { lambda, sheet }
    }

    pub fn branch(j: usize) -> Self {
        SurfacePoint::Branch(j)
    }

    /// Hyperelliptic involution `(lambda, mu) -> (lambda, -mu)`.
    pub fn sigma(self) -> Self {
        match self {
            SurfacePoint::Regular { lambda, sheet } => SurfacePoint::Regular { lambda, sheet: sheet.swap() },
            b @ SurfacePoint::Branch(_) => b,
        }
    }

    pub fn is_branch(&self) -> bool {
        matches!(self, SurfacePoint::Branch(_))
    }

    pub fn projection(&self, curve: &Curve) -> Complex64 {
        match *self {
            SurfacePoint::Regular { lambda, .. } => lambda,
            SurfacePoint::Branch(j) => Complex64::new(curve.branch_points[j], 0.0),
        }
    }
}

/// Where a real abscissa sits relative to the cut system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Gap `k` lies between cut `k-1` and cut `k`; gap 0 is left of all
    /// branch points and gap `g+1` right of all of them.
    Gap(usize),
    /// Interior of cut `k`, i.e. `(lambda_{2k}, lambda_{2k+1})`.
    Cut(usize),
    Branch(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    branch_points: Vec<f64>,
    genus: usize,
    degenerate_cuts: Vec<usize>,
    threshold: f64,
    reference: f64,
    reference_sign: f64,
}

/// Sorts and validates the branch points and flags nearly collapsed cuts.
pub fn build_curve(branch_points: &[f64], degeneracy_threshold: f64) -> Result<Curve> {
    let n = branch_points.len();
    if let Some(&bad) = branch_points.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFiniteBranchPoint(bad));
    }
    if n % 2 == 1 {
        return Err(Error::OddBranchCount(n));
    }
    if n < 4 {
        return Err(Error::TooFewPoints(n));
    }
    let mut pts = branch_points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut degenerate_cuts = Vec::new();
    for k in 0..n / 2 {
        if pts[2 * k + 1] - pts[2 * k] < degeneracy_threshold {
            degenerate_cuts.push(k);
        }
    }
    // Ties are only tolerated inside a cut that is flagged degenerate.
    for i in 0..n - 1 {
        if pts[i] == pts[i + 1] && (i % 2 == 1 || !degenerate_cuts.contains(&(i / 2))) {
            return Err(Error::DuplicatePoint(pts[i]));
        }
    }
    // Triples collapse a gap as well; the even/odd check above catches them.

    let genus = n / 2 - 1;
    let reference = pts[0] - 1.0;
    let mut curve = Curve {
        branch_points: pts,
        genus,
        degenerate_cuts,
        threshold: degeneracy_threshold,
        reference,
        reference_sign: 1.0,
    };
    curve.reference_sign = curve.sign_at_reference(reference);
    Ok(curve)
}

impl Curve {
    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn branch_points(&self) -> &[f64] {
        &self.branch_points
    }

    pub fn branch_point(&self, j: usize) -> Result<f64> {
        self.branch_points
            .get(j)
            .copied()
            .ok_or(Error::BranchIndexOutOfRange { index: j, count: self.branch_points.len() })
    }

    pub fn degeneracy_threshold(&self) -> f64 {
        self.threshold
    }

    /// Number of cuts, `g + 1`.
    pub fn cut_count(&self) -> usize {
        self.genus + 1
    }

    /// Endpoints of cut `k` (0-based).
    pub fn cut(&self, k: usize) -> (f64, f64) {
        (self.branch_points[2 * k], self.branch_points[2 * k + 1])
    }

    /// Consecutive branch-point pairs bounding the cuts, 0-based indices.
    pub fn pairing(&self) -> Vec<(usize, usize)> {
        (0..self.cut_count()).map(|k| (2 * k, 2 * k + 1)).collect()
    }

    /// Cuts whose width is below the degeneracy threshold.
    pub fn degenerate_cuts(&self) -> &[usize] {
        &self.degenerate_cuts
    }

    /// Index pairs (0-based) of the degenerate cuts.
    pub fn degenerate_pairs(&self) -> Vec<(usize, usize)> {
        self.degenerate_cuts.iter().map(|&k| (2 * k, 2 * k + 1)).collect()
    }

    pub fn is_degenerate_cut(&self, k: usize) -> bool {
        self.degenerate_cuts.contains(&k)
    }

    pub fn reference(&self) -> f64 {
        self.reference
    }

    /// Moves the point at which sheet 1 is pinned to the principal root.
    pub fn with_reference(mut self, lambda: f64) -> Result<Curve> {
        if let Location::Branch(_) = self.locate(lambda) {
            return Err(Error::UntaggedBranchPoint(lambda));
        }
        self.reference = lambda;
        self.reference_sign = self.sign_at_reference(lambda);
        Ok(self)
    }

    /// Sign that turns the canonical branch into sheet 1: sheet 1 is
    /// `reference_sign * canonical`.
    pub fn sheet_one_sign(&self) -> f64 {
        self.reference_sign
    }

    pub fn locate(&self, x: f64) -> Location {
        let pts = &self.branch_points;
        if let Some(j) = pts.iter().position(|&b| b == x) {
            return Location::Branch(j);
        }
        let below = pts.iter().filter(|&&b| b < x).count();
        if below % 2 == 1 {
            Location::Cut(below / 2)
        } else {
            Location::Gap(below / 2)
        }
    }

    /// Number of cuts strictly to the right of gap `k`.
    pub(crate) fn cuts_right_of_gap(&self, k: usize) -> usize {
        self.cut_count() - k
    }

    /// Number of cuts strictly to the right of cut `k`.
    pub(crate) fn cuts_right_of_cut(&self, k: usize) -> usize {
        self.cut_count() - k - 1
    }

    fn sign_at_reference(&self, x: f64) -> f64 {
        // The canonical branch prod sqrt(l - a_k) sqrt(l - b_k) is -1 per cut to
        // the right; the principal root of the product is positive on gaps and
        // +i|.| on cuts, so the sign is the same parity in both cases.
        let right = match self.locate(x) {
            Location::Gap(k) => self.cuts_right_of_gap(k),
            Location::Cut(k) => self.cuts_right_of_cut(k),
            Location::Branch(_) => 0,
        };
        if right % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `prod_i sqrt|x - lambda_i|`, with `overrides` supplying accurately known
    /// distances `|x - lambda_j|` for selected indices.
    pub(crate) fn sqrt_abs_product(&self, x: f64, overrides: &[(usize, f64)]) -> f64 {
        let mut p = 1.0;
        for (i, &b) in self.branch_points.iter().enumerate() {
            let d = overrides.iter().find(|(j, _)| *j == i).map(|&(_, d)| d).unwrap_or_else(|| (x - b).abs());
            p *= d.sqrt();
        }
        p
    }

    /// Sheet-1 value of `mu` on the upper side of the real axis at `x`, with
    /// the location supplied by the caller (so rounding near endpoints cannot
    /// flip it).
    pub(crate) fn mu_upper(&self, x: f64, loc: Location, overrides: &[(usize, f64)]) -> Complex64 {
        let modulus = self.sqrt_abs_product(x, overrides);
        let (right, on_cut) = match loc {
            Location::Gap(k) => (self.cuts_right_of_gap(k), false),
            Location::Cut(k) => (self.cuts_right_of_cut(k), true),
            Location::Branch(_) => return Complex64::new(0.0, 0.0),
        };
        let parity = if right % 2 == 0 { 1.0 } else { -1.0 };
        let s = parity * self.reference_sign * modulus;
        if on_cut {
            Complex64::new(0.0, s)
        } else {
            Complex64::new(s, 0.0)
        }
    }

    /// Sheet-1 branch of `mu` at an arbitrary complex projection, analytic off
    /// the cuts.
    pub(crate) fn mu_sheet_one(&self, lambda: Complex64) -> Complex64 {
        if lambda.im == 0.0 {
            let loc = self.locate(lambda.re);
            return self.mu_upper(lambda.re, loc, &[]);
        }
        let mut p = Complex64::new(self.reference_sign, 0.0);
        for pair in self.branch_points.chunks(2) {
            p *= (lambda - pair[0]).sqrt() * (lambda - pair[1]).sqrt();
        }
        p
    }
}

/// Value of `mu` at a point of the curve.
pub fn mu_value(curve: &Curve, p: SurfacePoint) -> Result<Complex64> {
    match p {
        SurfacePoint::Branch(j) => {
            curve.branch_point(j)?;
            Ok(Complex64::new(0.0, 0.0))
        }
        SurfacePoint::Regular { lambda, sheet } => {
            if lambda.im == 0.0 {
                if let Location::Branch(_) = curve.locate(lambda.re) {
                    return Err(Error::UntaggedBranchPoint(lambda.re));
                }
            }
            Ok(curve.mu_sheet_one(lambda) * sheet.sign())
        }
    }
}

/// Coefficients `lambda^j / mu`, `j = 0..g-1`, of the unnormalized holomorphic
/// differentials with respect to `d lambda`.
pub fn holo_basis(curve: &Curve, p: SurfacePoint) -> Result<Vec<Complex64>> {
    if let SurfacePoint::Branch(j) = p {
        return Err(Error::BranchPointEvaluation(j));
    }
    let mu = mu_value(curve, p)?;
    let lambda = p.projection(curve);
    let mut out = Vec::with_capacity(curve.genus());
    let mut pow = Complex64::new(1.0, 0.0);
    for _ in 0..curve.genus() {
        out.push(pow / mu);
        pow *= lambda;
    }
    Ok(out)
}
