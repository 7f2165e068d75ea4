//! Symplectic action on the period matrix and on ν, ω and s, together with
//! checks of the sewing-side equivariance.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::FdConfig;
use crate::elliptic::SeriesConfig;
use crate::error::{Error, Result};
use crate::heisenberg::{z2_partition, ModulePair};
use crate::report::ResidualReport;
use crate::sewing::{ModuliPoint, PeriodMatrix, SewingContext, SurfacePoint, Torus, ONE, ZERO};
use crate::zhu::{ZhuContext, ZhuWeight};

const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * std::f64::consts::PI);

pub type IntBlock = [[i64; 2]; 2];
type C2 = Matrix2<Complex64>;

/// Index pairs `(i, j)`, `i ≤ j`, in coordinate order `(11, 22, 12)`.
pub const COORDS: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];

/// `[[A, B], [C, D]] ∈ Sp(4, ℤ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sp4Element {
    a: IntBlock,
    b: IntBlock,
    c: IntBlock,
    d: IntBlock,
}

fn mul(x: &IntBlock, y: &IntBlock) -> IntBlock {
    let mut out = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

fn transpose(x: &IntBlock) -> IntBlock {
    [[x[0][0], x[1][0]], [x[0][1], x[1][1]]]
}

fn add(x: &IntBlock, y: &IntBlock) -> IntBlock {
    [[x[0][0] + y[0][0], x[0][1] + y[0][1]], [x[1][0] + y[1][0], x[1][1] + y[1][1]]]
}

fn sub(x: &IntBlock, y: &IntBlock) -> IntBlock {
    [[x[0][0] - y[0][0], x[0][1] - y[0][1]], [x[1][0] - y[1][0], x[1][1] - y[1][1]]]
}

const ID: IntBlock = [[1, 0], [0, 1]];
const NULL: IntBlock = [[0, 0], [0, 0]];

fn to_complex(x: &IntBlock) -> C2 {
    C2::new(
        Complex64::from(x[0][0] as f64),
        Complex64::from(x[0][1] as f64),
        Complex64::from(x[1][0] as f64),
        Complex64::from(x[1][1] as f64),
    )
}

fn omega_matrix(om: &PeriodMatrix) -> C2 {
    C2::new(om.get(0, 0), om.get(0, 1), om.get(1, 0), om.get(1, 1))
}

fn elementary(i: usize, j: usize) -> C2 {
    let mut e = C2::zeros();
    e[(i, j)] = ONE;
    e[(j, i)] = ONE;
    e
}

impl Sp4Element {
    pub fn new(a: IntBlock, b: IntBlock, c: IntBlock, d: IntBlock) -> Result<Self> {
        let sym = |x: IntBlock| x == transpose(&x);
        let ok = sym(mul(&transpose(&a), &c))
            && sym(mul(&transpose(&b), &d))
            && sub(&mul(&transpose(&a), &d), &mul(&transpose(&c), &b)) == ID;
        if !ok {
            return Err(Error::InvalidArgument("blocks violate the symplectic relations".into()));
        }
        Ok(Sp4Element { a, b, c, d })
    }

    pub fn identity() -> Self {
        Sp4Element { a: ID, b: NULL, c: NULL, d: ID }
    }

    /// `Ω ↦ Ω + B` for the symmetric elementary matrix at `(i, j)`.
    pub fn translation(i: usize, j: usize) -> Self {
        let mut b = NULL;
        b[i][j] = 1;
        b[j][i] = 1;
        Sp4Element { a: ID, b, c: NULL, d: ID }
    }

    /// Exchange of the two handles.
    pub fn swap() -> Self {
        let p = [[0, 1], [1, 0]];
        Sp4Element { a: p, b: NULL, c: NULL, d: p }
    }

    /// `Ω ↦ -Ω⁻¹`.
    pub fn inversion() -> Self {
        Sp4Element { a: NULL, b: ID, c: [[-1, 0], [0, -1]], d: NULL }
    }

    /// `Ω ↦ UΩUᵀ` for `U ∈ GL(2, ℤ)`.
    pub fn basis_change(u: IntBlock) -> Result<Self> {
        let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
        if det.abs() != 1 {
            return Err(Error::InvalidArgument("basis change must be unimodular".into()));
        }
        let inv_t = [[u[1][1] * det, -u[1][0] * det], [-u[0][1] * det, u[0][0] * det]];
        Sp4Element::new(u, NULL, NULL, inv_t)
    }

    pub fn blocks(&self) -> (IntBlock, IntBlock, IntBlock, IntBlock) {
        (self.a, self.b, self.c, self.d)
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Sp4Element) -> Sp4Element {
        Sp4Element {
            a: add(&mul(&self.a, &other.a), &mul(&self.b, &other.c)),
            b: add(&mul(&self.a, &other.b), &mul(&self.b, &other.d)),
            c: add(&mul(&self.c, &other.a), &mul(&self.d, &other.c)),
            d: add(&mul(&self.c, &other.b), &mul(&self.d, &other.d)),
        }
    }

    /// `M = CΩ + D`.
    pub fn automorphy(&self, om: &PeriodMatrix) -> Result<C2> {
        let m = to_complex(&self.c) * omega_matrix(om) + to_complex(&self.d);
        let det = m.determinant();
        if det.norm() < 1e-14 * (1.0 + m.norm_squared()) {
            return Err(Error::Singular("CΩ + D".into()));
        }
        Ok(m)
    }

    fn n_matrix(&self, om: &PeriodMatrix) -> Result<C2> {
        self.automorphy(om)?.try_inverse().ok_or_else(|| Error::Singular("CΩ + D".into()))
    }
}

/// `(AΩ + B)(CΩ + D)⁻¹`.
pub fn transform_period(g: &Sp4Element, om: &PeriodMatrix) -> Result<PeriodMatrix> {
    let n = g.n_matrix(om)?;
    let t = (to_complex(&g.a) * omega_matrix(om) + to_complex(&g.b)) * n;
    Ok(PeriodMatrix::new(t[(0, 0)], t[(1, 1)], (t[(0, 1)] + t[(1, 0)]) * 0.5))
}

/// `∂ log det M / ∂Ω_ij` along symmetrized directions, in coordinate order.
pub fn dlogdet(g: &Sp4Element, om: &PeriodMatrix) -> Result<[Complex64; 3]> {
    let n = g.n_matrix(om)?;
    let c = to_complex(&g.c);
    Ok(COORDS.map(|(i, j)| (n * c * elementary(i, j)).trace()))
}

/// `∂Ω̃_ab / ∂Ω_ij` as `[ab][ij]` in coordinate order.
pub fn del_omega_tilde(g: &Sp4Element, om: &PeriodMatrix) -> Result<[[Complex64; 3]; 3]> {
    let n = g.n_matrix(om)?;
    let mut out = [[ZERO; 3]; 3];
    for (r, &(a, b)) in COORDS.iter().enumerate() {
        for (s, &(i, j)) in COORDS.iter().enumerate() {
            out[r][s] = if i == j { n[(i, a)] * n[(i, b)] } else { n[(i, a)] * n[(j, b)] + n[(i, b)] * n[(j, a)] };
        }
    }
    Ok(out)
}

/// `ν M⁻¹` for the row vector `ν = (ν₁, ν₂)`.
pub fn transform_nu(g: &Sp4Element, om: &PeriodMatrix, nu: [Complex64; 2]) -> Result<[Complex64; 2]> {
    let n = g.n_matrix(om)?;
    Ok([nu[0] * n[(0, 0)] + nu[1] * n[(1, 0)], nu[0] * n[(0, 1)] + nu[1] * n[(1, 1)]])
}

pub fn transform_omega(
    g: &Sp4Element,
    om: &PeriodMatrix,
    nu_x: [Complex64; 2],
    nu_y: [Complex64; 2],
    omega: Complex64,
) -> Result<Complex64> {
    let d = dlogdet(g, om)?;
    let mut corr = ZERO;
    for (k, &(i, j)) in COORDS.iter().enumerate() {
        corr += (nu_x[i] * nu_y[j] + nu_x[j] * nu_y[i]) * d[k];
    }
    Ok(omega - corr * (0.5 / TWO_PI_I))
}

/// `s(x) - 6∇_x log det M` with `∇_x = (1/2πi)Σ_{i≤j} ν_iν_j ∂/∂Ω_ij`.
pub fn transform_projective(g: &Sp4Element, om: &PeriodMatrix, nu_x: [Complex64; 2], s: Complex64) -> Result<Complex64> {
    let d = dlogdet(g, om)?;
    let mut nab = ZERO;
    for (k, &(i, j)) in COORDS.iter().enumerate() {
        nab += nu_x[i] * nu_x[j] * d[k];
    }
    Ok(s - nab * (6.0 / TWO_PI_I))
}

/// Values of ν at two points, ω between them and s at the first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormValues {
    pub nu_x: [Complex64; 2],
    pub nu_y: [Complex64; 2],
    pub omega: Complex64,
    pub s_x: Complex64,
}

impl FormValues {
    pub fn sample(ctx: &SewingContext, x: &SurfacePoint, y: &SurfacePoint) -> Result<Self> {
        Ok(FormValues {
            nu_x: [ctx.nu(Torus::One, x)?, ctx.nu(Torus::Two, x)?],
            nu_y: [ctx.nu(Torus::One, y)?, ctx.nu(Torus::Two, y)?],
            omega: ctx.omega(x, y)?,
            s_x: ctx.projective(x)?,
        })
    }
}

pub fn transform_forms(g: &Sp4Element, om: &PeriodMatrix, v: &FormValues) -> Result<FormValues> {
    Ok(FormValues {
        nu_x: transform_nu(g, om, v.nu_x)?,
        nu_y: transform_nu(g, om, v.nu_y)?,
        omega: transform_omega(g, om, v.nu_x, v.nu_y, v.omega)?,
        s_x: transform_projective(g, om, v.nu_x, v.s_x)?,
    })
}

fn shift_coord(om: &PeriodMatrix, k: usize, h: f64) -> PeriodMatrix {
    let mut c = om.coordinates();
    c[k] += h;
    PeriodMatrix::new(c[0], c[1], c[2])
}

/// Finite-difference `∂Ω̃/∂Ω` against the closed form, then `∇_xΩ̃_ab = ν̃_a ν̃_b`
/// at each supplied `ν(x)`.
pub fn check_nabla_invariance(g: &Sp4Element, om: &PeriodMatrix, nus: &[[Complex64; 2]], fd: &FdConfig) -> ResidualReport {
    let mut rep = ResidualReport::new("nabla_invariance", 1e-7);
    if let Err(e) = nabla_residuals(g, om, nus, fd, &mut rep) {
        rep.error("nabla_invariance", e);
    }
    rep
}

fn nabla_residuals(
    g: &Sp4Element,
    om: &PeriodMatrix,
    nus: &[[Complex64; 2]],
    fd: &FdConfig,
    rep: &mut ResidualReport,
) -> Result<()> {
    fd.validate()?;
    let exact = del_omega_tilde(g, om)?;
    let mut numeric = [[ZERO; 3]; 3];
    for s in 0..3 {
        let mut rows: Vec<Vec<[Complex64; 3]>> = Vec::new();
        for j in 0..=fd.richardson_levels {
            let h = fd.step / 2f64.powi(j as i32);
            let p = transform_period(g, &shift_coord(om, s, h))?.coordinates();
            let m = transform_period(g, &shift_coord(om, s, -h))?.coordinates();
            let mut row = vec![[0, 1, 2].map(|r| (p[r] - m[r]) / (2.0 * h))];
            for lvl in 1..=j {
                let f = 4f64.powi(lvl as i32);
                let (cur, prev) = (row[lvl - 1], rows[j - 1][lvl - 1]);
                row.push([0, 1, 2].map(|r| (cur[r] * f - prev[r]) / (f - 1.0)));
            }
            rows.push(row);
        }
        let best = *rows.last().unwrap().last().unwrap();
        for r in 0..3 {
            numeric[r][s] = best[r];
        }
    }
    for r in 0..3 {
        for s in 0..3 {
            rep.compare(format!("dΩ̃{}/dΩ{}", r + 1, s + 1), numeric[r][s], exact[r][s]);
        }
    }
    for (k, nu) in nus.iter().enumerate() {
        let nt = transform_nu(g, om, *nu)?;
        for (r, &(a, b)) in COORDS.iter().enumerate() {
            let mut lhs = ZERO;
            for (s, &(i, j)) in COORDS.iter().enumerate() {
                lhs += nu[i] * nu[j] * numeric[r][s];
            }
            rep.compare(format!("sample {k} ∇Ω̃{}", r + 1), lhs, nt[a] * nt[b]);
        }
    }
    Ok(())
}

/// Sewing-side equivariance under `τ₁ → τ₁+1`, `τ₂ → τ₂+1` and the handle swap.
pub fn check_equivariance(p: &ModuliPoint, lam: &ModulePair, order: usize, cfg: &SeriesConfig) -> ResidualReport {
    let mut rep = ResidualReport::new("equivariance", 1e-9);
    if let Err(e) = equivariance_residuals(p, lam, order, cfg, &mut rep) {
        rep.error("equivariance", e);
    }
    rep
}

fn equivariance_residuals(
    p: &ModuliPoint,
    lam: &ModulePair,
    order: usize,
    cfg: &SeriesConfig,
    rep: &mut ResidualReport,
) -> Result<()> {
    let base = SewingContext::new(p, order, cfg)?;
    let om = base.period_matrix();
    let shifts = [(Torus::One, Sp4Element::translation(0, 0)), (Torus::Two, Sp4Element::translation(1, 1))];
    for (t, g) in shifts {
        let q = p.with_tau(t, p.tau(t) + 1.0)?;
        let got = SewingContext::new(&q, order, cfg)?.period_matrix().coordinates();
        let want = transform_period(&g, &om)?.coordinates();
        for k in 0..3 {
            rep.compare(format!("{t}+1 Ω{}", k + 1), got[k], want[k]);
        }
    }
    let swapped = SewingContext::new(&p.swapped(), order, cfg)?;
    let got = swapped.period_matrix().coordinates();
    let want = transform_period(&Sp4Element::swap(), &om)?.coordinates();
    for k in 0..3 {
        rep.compare(format!("swap Ω{}", k + 1), got[k], want[k]);
    }
    rep.compare("swap Z", z2_partition(&swapped, &lam.swapped()), z2_partition(&base, lam));
    Ok(())
}

/// Observables under `√ε → -√ε` at the given points.
pub fn check_branch_invariance(p: &ModuliPoint, xs: &[SurfacePoint], order: usize, cfg: &SeriesConfig) -> ResidualReport {
    let mut rep = ResidualReport::new("branch", 1e-10);
    let run = |rep: &mut ResidualReport| -> Result<()> {
        let a = SewingContext::new(p, order, cfg)?;
        let b = SewingContext::new(&p.flip_branch(), order, cfg)?;
        let (oa, ob) = (a.period_matrix().coordinates(), b.period_matrix().coordinates());
        for k in 0..3 {
            rep.compare(format!("Ω{}", k + 1), oa[k], ob[k]);
        }
        rep.compare("Z_M", a.z_m(), b.z_m());
        for x in xs {
            for t in Torus::BOTH {
                rep.compare(format!("ν{} {}", t.index() + 1, x.torus), a.nu(t, x)?, b.nu(t, x)?);
            }
            rep.compare(format!("s {}", x.torus), a.projective(x)?, b.projective(x)?);
            for y in xs {
                if x != y {
                    rep.compare(format!("ω {}-{}", x.torus, y.torus), a.omega(x, y)?, b.omega(x, y)?);
                }
            }
        }
        let (za, zb) = (ZhuContext::new(&a, ZhuWeight::new(2)?)?, ZhuContext::new(&b, ZhuWeight::new(2)?)?);
        for (k, x) in xs.iter().enumerate() {
            let (pa, pb) = (za.two_diff_basis(x)?, zb.two_diff_basis(x)?);
            for r in 0..3 {
                rep.compare(format!("Φ{} {}", r + 1, x.torus), pa[r], pb[r]);
            }
            let y = &xs[(k + 1) % xs.len()];
            if x != y {
                let (ga, gb) = (za.gen_weierstrass(0, 0, x, y)?, zb.gen_weierstrass(0, 0, x, y)?);
                rep.compare(format!("²𝒫₁ {}-{}", x.torus, y.torus), ga, gb);
            }
        }
        Ok(())
    };
    if let Err(e) = run(&mut rep) {
        rep.error("branch", e);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample() -> PeriodMatrix {
        PeriodMatrix::new(c(0.1, 1.0), c(-0.2, 1.3), c(0.05, 0.2))
    }

    #[test]
    fn rejects_non_symplectic() {
        assert!(Sp4Element::new(ID, ID, ID, ID).is_err());
        assert!(Sp4Element::new(ID, [[1, 2], [2, 0]], NULL, ID).is_ok());
        assert!(Sp4Element::new(ID, [[1, 2], [0, 0]], NULL, ID).is_err());
    }

    #[test]
    fn translation_and_inversion() {
        let om = sample();
        let t = transform_period(&Sp4Element::translation(0, 0), &om).unwrap();
        assert!((t.get(0, 0) - om.get(0, 0) - 1.0).norm() < 1e-15);
        assert_eq!(t.get(0, 1), om.get(0, 1));
        let s = transform_period(&Sp4Element::inversion(), &om).unwrap();
        let inv = -omega_matrix(&om).try_inverse().unwrap();
        for (i, j) in COORDS {
            assert!((s.get(i, j) - inv[(i, j)]).norm() < 1e-14);
        }
    }

    #[test]
    fn translations_leave_forms_unchanged() {
        let om = sample();
        let v = FormValues { nu_x: [c(1.0, 0.2), c(0.3, -0.1)], nu_y: [c(0.5, 0.0), c(-0.2, 0.4)], omega: c(2.0, 1.0), s_x: c(-0.7, 0.3) };
        let w = transform_forms(&Sp4Element::translation(0, 1), &om, &v).unwrap();
        assert_eq!(v, w);
        let id = transform_forms(&Sp4Element::identity(), &om, &v).unwrap();
        assert_eq!(v, id);
    }

    #[test]
    fn transformed_omega_is_symmetric() {
        let om = sample();
        let g = Sp4Element::inversion().compose(&Sp4Element::translation(0, 1));
        let (nx, ny) = ([c(1.0, 0.2), c(0.3, -0.1)], [c(0.5, 0.0), c(-0.2, 0.4)]);
        let a = transform_omega(&g, &om, nx, ny, c(2.0, 1.0)).unwrap();
        let b = transform_omega(&g, &om, ny, nx, c(2.0, 1.0)).unwrap();
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn dlogdet_matches_difference() {
        let om = sample();
        let g = Sp4Element::inversion().compose(&Sp4Element::translation(1, 1));
        let d = dlogdet(&g, &om).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let f = |s: f64| g.automorphy(&shift_coord(&om, k, s)).unwrap().determinant().ln();
            let num = (f(h) - f(-h)) / (2.0 * h);
            assert!((num - d[k]).norm() < 1e-8);
        }
    }

    #[test]
    fn transformed_omega_has_vanishing_new_alpha_periods() {
        use crate::calculus::{contour_integral, Cycle, QuadratureConfig};
        let p = ModuliPoint::new(c(0.0, 1.0), c(0.0, 1.2), c(0.1, 0.0)).unwrap();
        let ctx = SewingContext::new(&p, 16, &SeriesConfig::default()).unwrap();
        let om = ctx.period_matrix();
        let g = Sp4Element::inversion();
        let x = SurfacePoint::new(Torus::One, c(-0.6, -1.2));
        let nu_x = [ctx.nu(Torus::One, &x).unwrap(), ctx.nu(Torus::Two, &x).unwrap()];
        for t in Torus::BOTH {
            let v = contour_integral(
                |y| {
                    let nu_y = [ctx.nu(Torus::One, y)?, ctx.nu(Torus::Two, y)?];
                    transform_omega(&g, &om, nu_x, nu_y, ctx.omega(&x, y)?)
                },
                Cycle::Beta(t),
                &p,
                &QuadratureConfig::default(),
            )
            .unwrap();
            assert!(v.norm() < 1e-9, "{t}: {v}");
        }
    }

    #[test]
    fn nabla_invariance_inversion() {
        let om = PeriodMatrix::new(c(0.0, 1.0), c(0.0, 1.3), ZERO);
        let rep = check_nabla_invariance(&Sp4Element::inversion(), &om, &[[c(1.0, 0.3), c(-0.4, 0.2)]], &FdConfig::default());
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn equivariance_of_sewing() {
        let p = ModuliPoint::new(c(0.3, 1.0), c(0.0, 1.1), c(0.1, 0.02)).unwrap();
        let rep = check_equivariance(&p, &ModulePair::new(c(0.6, 0.0), c(-1.0, 0.0)), 16, &SeriesConfig::default());
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn branch_flip() {
        let p = ModuliPoint::new(c(0.0, 1.0), c(0.0, 1.2), c(0.15, 0.0)).unwrap();
        let xs = [SurfacePoint::new(Torus::One, c(0.8, 0.3)), SurfacePoint::new(Torus::Two, c(-0.6, 0.7))];
        let rep = check_branch_invariance(&p, &xs, 16, &SeriesConfig::default());
        assert!(rep.pass, "{rep:?}");
    }
}
