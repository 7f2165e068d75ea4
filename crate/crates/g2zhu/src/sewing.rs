//! The ε-sewn genus-two surface built from two tori: moduli, the matrices `A_a`,
//! the normalized differentials `ν_i`, the bidifferential `ω`, the projective
//! connection `s` and the period matrix.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{binomial, derivative_factor, EllipticTable, SeriesConfig, TorusModulus};
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);
pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Fraction of `½√(D₁D₂)` used as the annulus radius on each torus.
pub const ANNULUS_FRACTION: f64 = 0.95;

/// Default truncation order of the infinite matrices.
pub const DEFAULT_ORDER: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Torus {
    One,
    Two,
}

impl Torus {
    pub fn other(self) -> Torus {
        match self {
            Torus::One => Torus::Two,
            Torus::Two => Torus::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Torus::One => 0,
            Torus::Two => 1,
        }
    }

    pub fn from_index(i: usize) -> Result<Torus> {
        match i {
            1 => Ok(Torus::One),
            2 => Ok(Torus::Two),
            _ => Err(Error::InvalidArgument(format!("torus index must be 1 or 2, got {i}"))),
        }
    }

    pub const BOTH: [Torus; 2] = [Torus::One, Torus::Two];
}

impl std::fmt::Display for Torus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "torus{}", self.index() + 1)
    }
}

/// A point `(τ₁, τ₂, ε)` of the sewing domain together with a choice of `ε^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModuliPoint {
    tau: [TorusModulus; 2],
    eps: Complex64,
    sqrt_eps: Complex64,
    distance: [f64; 2],
}

impl ModuliPoint {
    /// Uses the principal square root of `ε`.
    pub fn new(tau1: Complex64, tau2: Complex64, eps: Complex64) -> Result<Self> {
        Self::with_sqrt_eps(tau1, tau2, eps.sqrt())
    }

    /// Builds the point with `ε = s²`.
    pub fn with_sqrt_eps(tau1: Complex64, tau2: Complex64, sqrt_eps: Complex64) -> Result<Self> {
        let t1 = TorusModulus::new(tau1)?;
        let t2 = TorusModulus::new(tau2)?;
        let eps = sqrt_eps * sqrt_eps;
        let distance = [
            crate::elliptic::min_lattice_distance(tau1),
            crate::elliptic::min_lattice_distance(tau2),
        ];
        let p = ModuliPoint { tau: [t1, t2], eps, sqrt_eps, distance };
        let bound = p.sewing_bound();
        if !(eps.norm() < bound) {
            return Err(Error::Domain(format!("|ε| = {:.6e} must be below D₁D₂/4 = {bound:.6e}", eps.norm())));
        }
        Ok(p)
    }

    pub fn tau(&self, t: Torus) -> Complex64 {
        self.tau[t.index()].tau()
    }

    pub fn modulus(&self, t: Torus) -> &TorusModulus {
        &self.tau[t.index()]
    }

    pub fn eps(&self) -> Complex64 {
        self.eps
    }

    pub fn sqrt_eps(&self) -> Complex64 {
        self.sqrt_eps
    }

    pub fn lattice_distance(&self, t: Torus) -> f64 {
        self.distance[t.index()]
    }

    /// `D₁D₂/4`.
    pub fn sewing_bound(&self) -> f64 {
        0.25 * self.distance[0] * self.distance[1]
    }

    /// Outer radius `r_a` of the sewing annulus on either torus.
    pub fn annulus_radius(&self) -> f64 {
        ANNULUS_FRACTION * 0.5 * (self.distance[0] * self.distance[1]).sqrt()
    }

    /// `(|ε|/r_ā, r_a)`.
    pub fn annulus(&self, _t: Torus) -> (f64, f64) {
        let r = self.annulus_radius();
        (self.eps.norm() / r, r)
    }

    /// The same point with the other branch of `ε^{1/2}`.
    pub fn flip_branch(&self) -> Self {
        ModuliPoint { sqrt_eps: -self.sqrt_eps, ..*self }
    }

    /// Replaces `τ_t`, keeping `ε^{1/2}`.
    pub fn with_tau(&self, t: Torus, tau: Complex64) -> Result<Self> {
        let mut taus = [self.tau(Torus::One), self.tau(Torus::Two)];
        taus[t.index()] = tau;
        Self::with_sqrt_eps(taus[0], taus[1], self.sqrt_eps)
    }

    /// Replaces `ε`, continuing `ε^{1/2}` from the current branch.
    pub fn with_eps(&self, eps: Complex64) -> Result<Self> {
        let s = if self.eps.norm() > 0.0 { self.sqrt_eps * (eps / self.eps).sqrt() } else { eps.sqrt() };
        Self::with_sqrt_eps(self.tau(Torus::One), self.tau(Torus::Two), s)
    }

    /// Exchanges the two tori.
    pub fn swapped(&self) -> Self {
        ModuliPoint {
            tau: [self.tau[1], self.tau[0]],
            distance: [self.distance[1], self.distance[0]],
            ..*self
        }
    }
}

/// Checks `Im τ_a > 0` and `|ε| < D₁D₂/4`.
pub fn validate_moduli(tau1: Complex64, tau2: Complex64, eps: Complex64) -> Result<ModuliPoint> {
    ModuliPoint::new(tau1, tau2, eps)
}

/// A point given by its local coordinate on one of the tori.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub torus: Torus,
    pub z: Complex64,
}

impl SurfacePoint {
    pub fn new(torus: Torus, z: Complex64) -> Self {
        SurfacePoint { torus, z }
    }

    /// Requires `|ε|/r_ā <= |z| <= r_a`.
    pub fn in_annulus(torus: Torus, z: Complex64, p: &ModuliPoint) -> Result<Self> {
        let (lower, upper) = p.annulus(torus);
        let m = z.norm();
        if m < lower || m > upper {
            return Err(Error::OutsideAnnulus { modulus: m, lower, upper });
        }
        Ok(SurfacePoint { torus, z })
    }
}

/// The `2×2` symmetric period matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodMatrix {
    pub entries: [[Complex64; 2]; 2],
}

impl PeriodMatrix {
    pub fn new(o11: Complex64, o22: Complex64, o12: Complex64) -> Self {
        PeriodMatrix { entries: [[o11, o12], [o12, o22]] }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i][j]
    }

    /// `[Ω₁₁, Ω₂₂, Ω₁₂]`.
    pub fn coordinates(&self) -> [Complex64; 3] {
        [self.entries[0][0], self.entries[1][1], self.entries[0][1]]
    }

    /// True if `Im Ω` is positive definite.
    pub fn in_siegel_space(&self) -> bool {
        let a = self.entries[0][0].im;
        let b = self.entries[0][1].im;
        let d = self.entries[1][1].im;
        a > 0.0 && a * d - b * b > 0.0
    }
}

/// `A_a(k,l)` for `k, l = 1..=order`.
pub fn build_a(table: &EllipticTable, eps: Complex64, order: usize) -> CMatrix {
    CMatrix::from_fn(order, order, |r, c| {
        let (k, l) = (r + 1, c + 1);
        if (k + l) % 2 == 1 {
            return ZERO;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let comb = (k + l - 1) as f64 * binomial(k + l - 2, k - 1);
        let coeff = sign * comb / ((k * l) as f64).sqrt();
        eps.powi(((k + l) / 2) as i32) * table.eisenstein(k + l) * coeff
    })
}

fn invert(m: CMatrix, what: &str) -> Result<CMatrix> {
    let n = m.nrows();
    let lu = m.lu();
    lu.try_inverse().ok_or_else(|| Error::Singular(format!("{what} ({n}×{n})")))
}

/// Everything needed to evaluate the sewing quantities at one moduli point.
#[derive(Clone, Debug)]
pub struct SewingContext {
    point: ModuliPoint,
    order: usize,
    cfg: SeriesConfig,
    tables: [EllipticTable; 2],
    a: [CMatrix; 2],
    inv: [CMatrix; 2],
    b: [CMatrix; 2],
    logdet: Complex64,
    period: PeriodMatrix,
}

impl SewingContext {
    pub fn new(p: &ModuliPoint, order: usize, cfg: &SeriesConfig) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("truncation order must be positive".into()));
        }
        let tables = [EllipticTable::new(p.modulus(Torus::One), cfg)?, EllipticTable::new(p.modulus(Torus::Two), cfg)?];
        Self::from_tables(p, order, cfg, tables)
    }

    /// Reuses precomputed torus tables; the tables must match the moduli of `p`.
    pub fn from_tables(p: &ModuliPoint, order: usize, cfg: &SeriesConfig, tables: [EllipticTable; 2]) -> Result<Self> {
        let eps = p.eps();
        let a = [build_a(&tables[0], eps, order), build_a(&tables[1], eps, order)];
        let id = CMatrix::identity(order, order);
        let m12 = &id - &a[0] * &a[1];
        let m21 = &id - &a[1] * &a[0];
        let det = m12.clone().lu().determinant();
        if det.norm() == 0.0 {
            return Err(Error::Singular("1 - A₁A₂".into()));
        }
        let inv = [invert(m12, "1 - A₁A₂")?, invert(m21, "1 - A₂A₁")?];
        let b = [&a[1] * &inv[0], &a[0] * &inv[1]];
        let mut logdet = det.ln();
        if let Ok(series) = trace_log_series(&a[0], &a[1], 400) {
            let k = ((series.im - logdet.im) / (2.0 * PI)).round();
            logdet.im += 2.0 * PI * k;
        }
        let scale = eps / (2.0 * PI * I);
        let o11 = p.tau(Torus::One) + scale * b[0][(0, 0)];
        let o22 = p.tau(Torus::Two) + scale * b[1][(0, 0)];
        let o12 = -scale * inv[0][(0, 0)];
        Ok(SewingContext {
            point: *p,
            order,
            cfg: *cfg,
            tables,
            a,
            inv,
            b,
            logdet,
            period: PeriodMatrix::new(o11, o22, o12),
        })
    }

    /// Doubles the order from `DEFAULT_ORDER` until the period matrix and
    /// `log det` change by less than `tol` (at most order 64).
    pub fn converged(p: &ModuliPoint, cfg: &SeriesConfig, tol: f64) -> Result<Self> {
        let tables = [EllipticTable::new(p.modulus(Torus::One), cfg)?, EllipticTable::new(p.modulus(Torus::Two), cfg)?];
        let mut ctx = Self::from_tables(p, DEFAULT_ORDER, cfg, tables.clone())?;
        while ctx.order < 64 {
            let next = Self::from_tables(p, ctx.order * 2, cfg, tables.clone())?;
            let d = next
                .period
                .coordinates()
                .iter()
                .zip(ctx.period.coordinates().iter())
                .map(|(a, b)| (a - b).norm())
                .fold((next.logdet - ctx.logdet).norm(), f64::max);
            ctx = next;
            if d < tol {
                return Ok(ctx);
            }
        }
        Err(Error::NonConvergence(format!("sewing series not converged at order {}", ctx.order)))
    }

    pub fn point(&self) -> &ModuliPoint {
        &self.point
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn config(&self) -> &SeriesConfig {
        &self.cfg
    }

    pub fn table(&self, t: Torus) -> &EllipticTable {
        &self.tables[t.index()]
    }

    pub fn tables(&self) -> &[EllipticTable; 2] {
        &self.tables
    }

    pub fn a_matrix(&self, t: Torus) -> &CMatrix {
        &self.a[t.index()]
    }

    /// `(1 - A_t A_t̄)^{-1}`.
    pub fn neumann_inverse(&self, t: Torus) -> &CMatrix {
        &self.inv[t.index()]
    }

    /// `A_t̄ (1 - A_t A_t̄)^{-1}`.
    pub fn dressed(&self, t: Torus) -> &CMatrix {
        &self.b[t.index()]
    }

    /// `log det(1 - A₁A₂)` on the branch continuous from `ε = 0`.
    pub fn logdet(&self) -> Complex64 {
        self.logdet
    }

    pub fn period_matrix(&self) -> PeriodMatrix {
        self.period
    }

    /// `1/(η(τ₁)η(τ₂)) · det(1 - A₁A₂)^{-1/2}`.
    pub fn z_m(&self) -> Complex64 {
        (-0.5 * self.logdet).exp() / (self.tables[0].eta() * self.tables[1].eta())
    }

    /// Reduced coordinate of `x`, rejecting points in the excised disc.
    pub fn check_point(&self, x: &SurfacePoint) -> Result<Complex64> {
        let (zr, _) = self.table(x.torus).reduce(x.z);
        let (lower, _) = self.point.annulus(x.torus);
        if zr.norm() < lower * (1.0 - 1e-9) {
            return Err(Error::ExcisedDisc { modulus: zr.norm(), lower });
        }
        Ok(zr)
    }

    /// `P_1(x), ..., P_kmax(x)` on the torus of `x`.
    pub fn p_values(&self, x: &SurfacePoint, kmax: usize) -> Result<Vec<Complex64>> {
        self.check_point(x)?;
        self.table(x.torus).p_values(x.z, kmax)
    }

    /// `∂^deriv a(x;k)` for `k = 1..=order`, with `a(x;k) = √k ε^{k/2} P_{k+1}(x)`.
    pub fn annular_vector(&self, x: &SurfacePoint, deriv: usize) -> Result<CVector> {
        let p = self.p_values(x, self.order + 1 + deriv)?;
        Ok(self.annular_from(&p, deriv))
    }

    pub(crate) fn annular_from(&self, p: &[Complex64], deriv: usize) -> CVector {
        let s = self.point.sqrt_eps();
        let mut out = CVector::zeros(self.order);
        let mut sk = ONE;
        for k in 1..=self.order {
            sk *= s;
            out[k - 1] = sk * p[k + deriv] * ((k as f64).sqrt() * derivative_factor(k + 1, deriv));
        }
        out
    }

    /// `ν_i(x)`; `deriv` is the order of the derivative in the local coordinate.
    pub fn nu_deriv(&self, i: Torus, x: &SurfacePoint, deriv: usize) -> Result<Complex64> {
        let av = self.annular_vector(x, deriv)?;
        Ok(self.nu_from(i, x.torus, &av, deriv))
    }

    pub(crate) fn nu_from(&self, i: Torus, t: Torus, av: &CVector, deriv: usize) -> Complex64 {
        let s = self.point.sqrt_eps();
        if i == t {
            let row = av.transpose() * self.dressed(t);
            let base = if deriv == 0 { ONE } else { ZERO };
            base + s * row[(0, 0)]
        } else {
            let row = av.transpose() * self.neumann_inverse(i);
            -s * row[(0, 0)]
        }
    }

    pub fn nu(&self, i: Torus, x: &SurfacePoint) -> Result<Complex64> {
        self.nu_deriv(i, x, 0)
    }

    /// `∂_x^dx ∂_y^dy ω(x,y)`.
    pub fn omega_deriv(&self, x: &SurfacePoint, y: &SurfacePoint, dx: usize, dy: usize) -> Result<Complex64> {
        let ax = self.annular_vector(x, dx)?;
        let ay = self.annular_vector(y, dy)?;
        if x.torus == y.torus {
            let n = 2 + dx + dy;
            let pd = match self.table(x.torus).p(n, x.z - y.z) {
                Ok(v) => v,
                Err(Error::LatticePoint) => return Err(Error::CoincidentPoints),
                Err(e) => return Err(e),
            };
            let sign = if dx % 2 == 0 { 1.0 } else { -1.0 };
            let fact: f64 = (1..=dx + dy + 1).map(|v| v as f64).product();
            let corr = (ax.transpose() * self.dressed(x.torus) * &ay)[(0, 0)];
            Ok(pd * (sign * fact) + corr)
        } else {
            let corr = (ax.transpose() * self.neumann_inverse(y.torus) * &ay)[(0, 0)];
            Ok(-corr)
        }
    }

    pub fn omega(&self, x: &SurfacePoint, y: &SurfacePoint) -> Result<Complex64> {
        self.omega_deriv(x, y, 0, 0)
    }

    /// `∂^deriv s(x)` with `s(x) = 6E₂(τ_a) + 6 a(x) A_ā(1 - A_aA_ā)^{-1} a(x)ᵀ`.
    pub fn projective_deriv(&self, x: &SurfacePoint, deriv: usize) -> Result<Complex64> {
        let p = self.p_values(x, self.order + 1 + deriv)?;
        let vs: Vec<CVector> = (0..=deriv).map(|d| self.annular_from(&p, d)).collect();
        let b = self.dressed(x.torus);
        let mut acc = ZERO;
        for r in 0..=deriv {
            acc += (vs[r].transpose() * b * &vs[deriv - r])[(0, 0)] * binomial(deriv, r);
        }
        let base = if deriv == 0 { self.table(x.torus).eisenstein(2) } else { ZERO };
        Ok((base + acc) * 6.0)
    }

    pub fn projective(&self, x: &SurfacePoint) -> Result<Complex64> {
        self.projective_deriv(x, 0)
    }
}

/// `log det(1 - A₁A₂) = -Σ Tr((A₁A₂)ⁿ)/n`.
pub fn trace_log_series(a1: &CMatrix, a2: &CMatrix, max_terms: usize) -> Result<Complex64> {
    let prod = a1 * a2;
    let mut power = prod.clone();
    let mut acc = ZERO;
    for n in 1..=max_terms {
        let term = power.trace() / n as f64;
        acc -= term;
        if term.norm() < 1e-18 * acc.norm().max(1e-300) || power.norm() < 1e-300 {
            return Ok(acc);
        }
        power = &power * &prod;
    }
    Err(Error::NonConvergence("trace-log series".into()))
}

/// `(1 - A₁A₂)^{-1}` by the geometric series, with `log det` from traces.
pub fn neumann_series(a1: &CMatrix, a2: &CMatrix, max_terms: usize) -> Result<(CMatrix, Complex64)> {
    let n = a1.nrows();
    let prod = a1 * a2;
    let mut acc = CMatrix::identity(n, n);
    let mut power = CMatrix::identity(n, n);
    let mut done = false;
    for _ in 0..max_terms {
        power = &power * &prod;
        acc += &power;
        if power.norm() < 1e-18 * acc.norm() {
            done = true;
            break;
        }
    }
    if !done {
        return Err(Error::NonConvergence("Neumann series".into()));
    }
    Ok((acc, trace_log_series(a1, a2, max_terms)?))
}

/// `((1 - A₁A₂)^{-1}, log det(1 - A₁A₂))` via LU.
pub fn neumann(p: &ModuliPoint, order: usize, cfg: &SeriesConfig) -> Result<(CMatrix, Complex64)> {
    let ctx = SewingContext::new(p, order, cfg)?;
    Ok((ctx.neumann_inverse(Torus::One).clone(), ctx.logdet()))
}

pub fn period_matrix(p: &ModuliPoint, order: usize, cfg: &SeriesConfig) -> Result<PeriodMatrix> {
    Ok(SewingContext::new(p, order, cfg)?.period_matrix())
}

/// `a(x;k) = √k ε^{k/2} P_{k+1}(x, τ_a)`.
pub fn annular_form(x: &SurfacePoint, k: usize, p: &ModuliPoint, cfg: &SeriesConfig) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::InvalidArgument("annular index starts at 1".into()));
    }
    let table = EllipticTable::new(p.modulus(x.torus), cfg)?;
    let pk = table.p(k + 1, x.z)?;
    Ok(p.sqrt_eps().powi(k as i32) * pk * (k as f64).sqrt())
}

pub fn one_form_nu(i: Torus, x: &SurfacePoint, p: &ModuliPoint, order: usize, cfg: &SeriesConfig) -> Result<Complex64> {
    SewingContext::new(p, order, cfg)?.nu(i, x)
}

pub fn bidifferential_omega(
    x: &SurfacePoint,
    y: &SurfacePoint,
    p: &ModuliPoint,
    order: usize,
    cfg: &SeriesConfig,
) -> Result<Complex64> {
    SewingContext::new(p, order, cfg)?.omega(x, y)
}

pub fn projective_connection(x: &SurfacePoint, p: &ModuliPoint, order: usize, cfg: &SeriesConfig) -> Result<Complex64> {
    SewingContext::new(p, order, cfg)?.projective(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ctx(eps: Complex64) -> SewingContext {
        let p = ModuliPoint::new(c(0.3, 1.0), c(0.0, 1.1), eps).unwrap();
        SewingContext::new(&p, DEFAULT_ORDER, &SeriesConfig::default()).unwrap()
    }

    #[test]
    fn a_is_symmetric_and_vanishes_at_zero() {
        let k = ctx(c(0.12, 0.05));
        for t in Torus::BOTH {
            let a = k.a_matrix(t);
            assert!((a - a.transpose()).norm() < 1e-15 * a.norm());
        }
        assert_eq!(ctx(c(0.0, 0.0)).a_matrix(Torus::One).norm(), 0.0);
    }

    #[test]
    fn first_entry_of_a() {
        let k = ctx(c(0.1, 0.0));
        let e2 = k.table(Torus::One).eisenstein(2);
        assert!((k.a_matrix(Torus::One)[(0, 0)] - e2 * 0.1).norm() < 1e-16);
        let e4 = k.table(Torus::Two).eisenstein(4);
        // k = 1, l = 3: (+1) ε² / √3 · 3!/(0! 2!) E₄
        let want = e4 * 0.01 * 3.0 / 3f64.sqrt();
        assert!((k.a_matrix(Torus::Two)[(0, 2)] - want).norm() < 1e-17);
    }

    #[test]
    fn degenerate_limit() {
        let k = ctx(c(0.0, 0.0));
        let om = k.period_matrix();
        assert_eq!(om.get(0, 0), c(0.3, 1.0));
        assert_eq!(om.get(1, 1), c(0.0, 1.1));
        assert_eq!(om.get(0, 1), c(0.0, 0.0));
        let x = SurfacePoint::new(Torus::One, c(0.8, 0.3));
        let y = SurfacePoint::new(Torus::One, c(-0.4, 1.1));
        assert_eq!(k.nu(Torus::One, &x).unwrap(), c(1.0, 0.0));
        assert_eq!(k.nu(Torus::Two, &x).unwrap(), c(0.0, 0.0));
        let p2 = k.table(Torus::One).p(2, x.z - y.z).unwrap();
        assert!((k.omega(&x, &y).unwrap() - p2).norm() < 1e-15);
        let e2 = k.table(Torus::One).eisenstein(2);
        assert!((k.projective(&x).unwrap() - e2 * 6.0).norm() < 1e-15);
        assert!((k.z_m() - 1.0 / (k.table(Torus::One).eta() * k.table(Torus::Two).eta())).norm() < 1e-15);
    }

    #[test]
    fn leading_order_period_matrix() {
        let eps = c(1e-3, 0.0);
        let k = ctx(eps);
        let om = k.period_matrix();
        let tpi = 2.0 * PI * I;
        assert!((om.get(0, 1) * tpi / -eps - 1.0).norm() < 1e-5);
        let e2 = k.table(Torus::Two).eisenstein(2);
        let want = c(0.3, 1.0) + eps * eps * e2 / tpi;
        assert!((om.get(0, 0) - want).norm() < 1e-10);
    }

    #[test]
    fn lu_agrees_with_neumann_series() {
        let k = ctx(c(0.15, 0.02));
        let (inv, ld) = neumann_series(k.a_matrix(Torus::One), k.a_matrix(Torus::Two), 500).unwrap();
        assert!((&inv - k.neumann_inverse(Torus::One)).norm() < 1e-14);
        assert!((ld - k.logdet()).norm() < 1e-14);
    }

    #[test]
    fn branch_invariance() {
        let p = ModuliPoint::new(c(0.3, 1.0), c(0.0, 1.1), c(0.1, 0.04)).unwrap();
        let cfg = SeriesConfig::default();
        let a = SewingContext::new(&p, 16, &cfg).unwrap();
        let b = SewingContext::new(&p.flip_branch(), 16, &cfg).unwrap();
        let x = SurfacePoint::new(Torus::One, c(0.8, 0.3));
        let y = SurfacePoint::new(Torus::Two, c(-0.4, 1.1));
        for t in Torus::BOTH {
            assert!((a.nu(t, &x).unwrap() - b.nu(t, &x).unwrap()).norm() < 1e-15);
        }
        assert!((a.omega(&x, &y).unwrap() - b.omega(&x, &y).unwrap()).norm() < 1e-15);
        assert!((a.projective(&y).unwrap() - b.projective(&y).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn omega_symmetry_and_derivatives() {
        let k = ctx(c(0.1, 0.0));
        let x = SurfacePoint::new(Torus::One, c(0.8, 0.3));
        let y = SurfacePoint::new(Torus::One, c(-0.4, 1.1));
        let w = SurfacePoint::new(Torus::Two, c(0.2, -0.9));
        for (a, b) in [(x, y), (x, w), (w, y)] {
            let ab = k.omega(&a, &b).unwrap();
            let ba = k.omega(&b, &a).unwrap();
            assert!((ab - ba).norm() < 1e-14 * ab.norm());
            let h = 1e-5;
            let shift = |p: SurfacePoint, d: f64| SurfacePoint::new(p.torus, p.z + d);
            let fd = (k.omega(&shift(a, h), &b).unwrap() - k.omega(&shift(a, -h), &b).unwrap()) / (2.0 * h);
            let an = k.omega_deriv(&a, &b, 1, 0).unwrap();
            assert!((fd - an).norm() < 1e-8 * an.norm().max(1.0));
            let fd = (k.nu(Torus::Two, &shift(a, h)).unwrap() - k.nu(Torus::Two, &shift(a, -h)).unwrap()) / (2.0 * h);
            let an = k.nu_deriv(Torus::Two, &a, 1).unwrap();
            assert!((fd - an).norm() < 1e-9);
        }
        let fd = (k.projective(&SurfacePoint::new(Torus::One, x.z + 1e-5)).unwrap()
            - k.projective(&SurfacePoint::new(Torus::One, x.z - 1e-5)).unwrap())
            / 2e-5;
        assert!((fd - k.projective_deriv(&x, 1).unwrap()).norm() < 1e-8);
    }

    #[test]
    fn projective_is_regular_part_of_omega() {
        let k = ctx(c(0.1, 0.03));
        let x = SurfacePoint::new(Torus::Two, c(0.7, 0.2));
        let d = c(1e-3, 5e-4);
        let y = SurfacePoint::new(Torus::Two, x.z + d);
        let reg = k.omega(&x, &y).unwrap() - 1.0 / (d * d);
        assert!((reg * 6.0 - k.projective(&x).unwrap()).norm() < 1e-4);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(ModuliPoint::new(c(0.0, 1.0), c(0.0, 1.0), c(12.0, 0.0)), Err(Error::Domain(_))));
        let p = ModuliPoint::new(c(0.0, 1.0), c(0.0, 1.0), c(0.1, 0.0)).unwrap();
        assert!(matches!(
            SurfacePoint::in_annulus(Torus::One, c(5.0, 0.0), &p),
            Err(Error::OutsideAnnulus { .. })
        ));
        assert!(SurfacePoint::in_annulus(Torus::One, c(1.0, 0.0), &p).is_ok());
        let k = SewingContext::new(&p, 16, &SeriesConfig::default()).unwrap();
        let inner = SurfacePoint::new(Torus::One, c(0.01, 0.0));
        assert!(matches!(k.nu(Torus::One, &inner), Err(Error::ExcisedDisc { .. })));
        let x = SurfacePoint::new(Torus::One, c(0.5, 0.5));
        assert!(matches!(k.omega(&x, &x), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn order_doubling_converges() {
        let p = ModuliPoint::new(c(0.0, 1.0), c(0.0, 1.2), c(0.15, 0.0)).unwrap();
        let k = SewingContext::converged(&p, &SeriesConfig::default(), 1e-13).unwrap();
        assert!(k.order() <= 32);
        assert!(k.period_matrix().in_siegel_space());
    }
}
