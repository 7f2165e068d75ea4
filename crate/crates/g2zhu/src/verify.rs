//! The verification suite: residual producers grouped into the twelve
//! acceptance criteria and evaluated over a sample grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{
    contour_integral, contour_radius, det3, p1_closed_form, phi_normalization, psi, standard_moduli, standard_points, verify_identity,
    xi_matrix, CalculusConfig, Cycle, IdentityName, IdentitySample, QuadratureConfig,
};
use crate::error::Result;
use crate::fock::{
    check_delq, check_genus1_ward, check_matchings, check_partition_coefficients, check_two_point, standard_oracle_moduli,
    standard_samples, verify_genus2_zhu, OracleConfig, ZhuVector,
};
use crate::heisenberg::ModulePair;
use crate::modular::{check_branch_invariance, check_equivariance};
use crate::report::ResidualReport;
use crate::sewing::{ModuliPoint, SewingContext, SurfacePoint, Torus, I, ZERO};
use crate::zhu::{ZhuContext, ZhuWeight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    Normalization,
    Periods,
    OmegaSymmetry,
    WeightOne,
    P21,
    PhiBasis,
    Differential,
    FockOracle,
    ZhuRecursion,
    Equivariance,
    Branch,
    GenusOne,
}

impl Criterion {
    pub const ALL: [Criterion; 12] = [
        Criterion::Normalization,
        Criterion::Periods,
        Criterion::OmegaSymmetry,
        Criterion::WeightOne,
        Criterion::P21,
        Criterion::PhiBasis,
        Criterion::Differential,
        Criterion::FockOracle,
        Criterion::ZhuRecursion,
        Criterion::Equivariance,
        Criterion::Branch,
        Criterion::GenusOne,
    ];

    pub fn number(&self) -> usize {
        Criterion::ALL.iter().position(|c| c == self).unwrap() + 1
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::Normalization => "normalization",
            Criterion::Periods => "periods",
            Criterion::OmegaSymmetry => "omega_symmetry",
            Criterion::WeightOne => "weight_one",
            Criterion::P21 => "p21",
            Criterion::PhiBasis => "phi_basis",
            Criterion::Differential => "differential",
            Criterion::FockOracle => "fock_oracle",
            Criterion::ZhuRecursion => "zhu_recursion",
            Criterion::Equivariance => "equivariance",
            Criterion::Branch => "branch",
            Criterion::GenusOne => "genus_one",
        }
    }

    pub fn parse(s: &str) -> Option<Criterion> {
        Criterion::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn summary(&self) -> &'static str {
        match self {
            Criterion::Normalization => "alpha-periods of nu and omega",
            Criterion::Periods => "beta-periods of nu against the period matrix",
            Criterion::OmegaSymmetry => "omega(x,y) = omega(y,x) on all placements",
            Criterion::WeightOne => "weight-one F and P2 against nu and omega",
            Criterion::P21 => "series 2P1 against the Wronskian closed form",
            Criterion::PhiBasis => "Phi normalization, Xi.Phi = Psi, det Xi",
            Criterion::Differential => "moduli differential identities",
            Criterion::FockOracle => "brute-force Fock sums against closed forms",
            Criterion::ZhuRecursion => "genus-two Zhu recursion for h and omega-tilde",
            Criterion::Equivariance => "translation and swap equivariance",
            Criterion::Branch => "sqrt(eps) branch invariance",
            Criterion::GenusOne => "genus-one oracle consistency",
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Moduli, surface points and module label used by the suite.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub moduli: Vec<ModuliPoint>,
    pub points: Vec<SurfacePoint>,
    pub lambda: ModulePair,
}

impl Grid {
    pub fn standard() -> Self {
        let moduli = standard_moduli()
            .into_iter()
            .map(|(a, b, e)| ModuliPoint::new(a, b, e).expect("standard grid lies in the sewing domain"))
            .collect();
        Grid { moduli, points: standard_points(), lambda: ModulePair::new(Complex64::new(0.7, 0.0), Complex64::new(-0.4, 0.0)) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub calculus: CalculusConfig,
    pub oracle: OracleConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub criterion: Criterion,
    pub reports: Vec<ResidualReport>,
    pub pass: bool,
}

pub fn run_criterion(c: Criterion, grid: &Grid, cfg: &VerifyConfig) -> CriterionOutcome {
    let reports = match c {
        Criterion::Normalization => per_point(grid, cfg, "normalization", 1e-8, normalization_at),
        Criterion::Periods => per_point(grid, cfg, "beta_periods", 1e-7, periods_at),
        Criterion::OmegaSymmetry => per_point(grid, cfg, "omega_symmetry", 1e-9, symmetry_at),
        Criterion::WeightOne => per_point(grid, cfg, "weight_one", 1e-10, weight_one_at),
        Criterion::P21 => per_point(grid, cfg, "p21_closed_form", 1e-6, p21_at),
        Criterion::PhiBasis => vec![
            per_point(grid, cfg, "phi_normalization", 1e-7, phi_normalization_at).remove(0),
            per_point(grid, cfg, "xi_phi", 1e-8, xi_phi_at).remove(0),
            per_point(grid, cfg, "xi_det", 1.0, xi_det_at).remove(0),
        ],
        Criterion::Differential => {
            let samples = identity_samples(grid);
            IdentityName::ALL.iter().map(|&n| verify_identity(n, &samples, &cfg.calculus)).collect()
        }
        Criterion::FockOracle => {
            let mut coeffs = ResidualReport::new("fock_partition", 1e-9);
            let mut two = ResidualReport::new("fock_two_point", 1e-6);
            match standard_oracle_moduli(&cfg.oracle) {
                Ok(moduli) => {
                    for p in moduli {
                        coeffs.extend(check_partition_coefficients(p.tau(Torus::One), p.tau(Torus::Two), &cfg.oracle));
                        two.extend(check_two_point(&p, Complex64::new(1.2, 0.3), Complex64::new(-0.9, 1.1), &cfg.oracle));
                    }
                }
                Err(e) => two.error("oracle moduli", e),
            }
            vec![coeffs, two]
        }
        Criterion::ZhuRecursion => [ZhuVector::H, ZhuVector::OmegaTilde]
            .into_iter()
            .map(|v| {
                let mut rep = ResidualReport::new(
                    match v {
                        ZhuVector::H => "zhu_recursion_h",
                        ZhuVector::OmegaTilde => "zhu_recursion_omega",
                    },
                    1e-5,
                );
                match standard_oracle_moduli(&cfg.oracle) {
                    Ok(moduli) => {
                        for p in moduli {
                            rep.extend(verify_genus2_zhu(v, &standard_samples(&p), &cfg.oracle));
                        }
                    }
                    Err(e) => rep.error("oracle moduli", e),
                }
                rep
            })
            .collect(),
        Criterion::Equivariance => {
            let mut rep = ResidualReport::new("equivariance", 1e-9);
            for p in &grid.moduli {
                rep.extend(check_equivariance(p, &grid.lambda, cfg.calculus.order, &cfg.calculus.series));
            }
            vec![rep]
        }
        Criterion::Branch => {
            let mut rep = ResidualReport::new("branch", 1e-10);
            for p in grid.moduli.iter().filter(|p| p.eps() != ZERO) {
                rep.extend(check_branch_invariance(p, &grid.points, cfg.calculus.order, &cfg.calculus.series));
            }
            vec![rep]
        }
        Criterion::GenusOne => {
            let series = cfg.calculus.series;
            let mut taus: Vec<Complex64> = Vec::new();
            for p in &grid.moduli {
                for t in Torus::BOTH {
                    if !taus.contains(&p.tau(t)) {
                        taus.push(p.tau(t));
                    }
                }
            }
            let mut m = ResidualReport::new("genus1_matchings", 1e-10);
            let mut w = ResidualReport::new("genus1_ward", 1e-8);
            let mut d = ResidualReport::new("genus1_delq", 1e-8);
            for tau in taus {
                m.extend(check_matchings(tau, 6, &series));
                let (x, x1, x2) = (Complex64::new(0.3, 0.4), Complex64::new(-0.5, 0.2), Complex64::new(0.1, -0.6));
                w.extend(check_genus1_ward(tau, x, x1, x2, &cfg.oracle));
                d.extend(check_delq(tau, &series));
            }
            vec![m, w, d]
        }
    };
    let pass = reports.iter().all(|r| r.pass);
    CriterionOutcome { criterion: c, reports, pass }
}

type PointCheck = fn(&SewingContext, &Grid, &VerifyConfig, &str, &mut ResidualReport) -> Result<()>;

fn per_point(grid: &Grid, cfg: &VerifyConfig, name: &str, tol: f64, f: PointCheck) -> Vec<ResidualReport> {
    let mut rep = ResidualReport::new(name, tol);
    for p in &grid.moduli {
        let label = moduli_label(p);
        let res = SewingContext::new(p, cfg.calculus.order, &cfg.calculus.series).and_then(|ctx| f(&ctx, grid, cfg, &label, &mut rep));
        if let Err(e) = res {
            rep.error(label, e);
        }
    }
    vec![rep]
}

fn moduli_label(p: &ModuliPoint) -> String {
    format!("tau=({},{}) eps={}", p.tau(Torus::One), p.tau(Torus::Two), p.eps())
}

fn pt(x: &SurfacePoint) -> String {
    format!("{}:{:.3}{:+.3}i", x.torus, x.z.re, x.z.im)
}

/// Two samples per moduli point, each with two auxiliary points.
pub fn identity_samples(grid: &Grid) -> Vec<IdentitySample> {
    let pts = &grid.points;
    let n = pts.len();
    let mut out = Vec::new();
    for p in &grid.moduli {
        for (a, b, c) in [(0, n / 2, 2 % n), (n / 2 + 1, 1, n / 2 + 2)] {
            out.push(IdentitySample { point: *p, x: pts[a % n], ys: vec![pts[b % n], pts[c % n]], lambda: grid.lambda });
        }
    }
    out
}

/// Ordered pairs of distinct grid points, at most `limit` of them.
fn pairs(points: &[SurfacePoint], limit: usize) -> Vec<(SurfacePoint, SurfacePoint)> {
    let mut out = Vec::new();
    for shift in 1..points.len() {
        for a in 0..points.len() {
            if out.len() == limit {
                return out;
            }
            out.push((points[a], points[(a + shift) % points.len()]));
        }
    }
    out
}

fn normalization_at(ctx: &SewingContext, grid: &Grid, cfg: &VerifyConfig, label: &str, rep: &mut ResidualReport) -> Result<()> {
    let p = ctx.point();
    let quad = &cfg.calculus.quad;
    for i in Torus::BOTH {
        for j in Torus::BOTH {
            let v = contour_integral(|x| ctx.nu(j, x), Cycle::Alpha(i), p, quad)? / (2.0 * PI * I);
            let want = if i == j { 1.0 } else { 0.0 };
            rep.record(format!("{label} α{i} ν{j}"), (v - want).norm(), 1.0);
        }
        for x in &grid.points {
            let arg = if x.z.re >= 0.0 { 0.75 * PI } else { 0.25 * PI };
            let quad = &QuadratureConfig { base_point: Some(Complex64::from_polar(contour_radius(p), arg)), ..*quad };
            let v = contour_integral(|y| ctx.omega(x, y), Cycle::Alpha(i), p, quad)?;
            let mass = contour_integral(|y| Ok(Complex64::from(ctx.omega(x, y)?.norm())), Cycle::Alpha(i), p, quad)?;
            rep.record(format!("{label} α{i} ω({},·)", pt(x)), v.norm(), mass.norm().max(crate::report::SCALE_FLOOR));
        }
    }
    Ok(())
}

fn periods_at(ctx: &SewingContext, _grid: &Grid, cfg: &VerifyConfig, label: &str, rep: &mut ResidualReport) -> Result<()> {
    let p = ctx.point();
    let om = ctx.period_matrix();
    let scale = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| om.get(i, j).norm()).fold(0.0, f64::max);
    for i in Torus::BOTH {
        for j in Torus::BOTH {
            let v = contour_integral(|x| ctx.nu(j, x), Cycle::Beta(i), p, &cfg.calculus.quad)? / (2.0 * PI * I);
            rep.record(format!("{label} β{i} ν{j}"), (v - om.get(i.index(), j.index())).norm(), scale);
        }
    }
    Ok(())
}

fn symmetry_at(ctx: &SewingContext, grid: &Grid, _cfg: &VerifyConfig, label: &str, rep: &mut ResidualReport) -> Result<()> {
    for (x, y) in pairs(&grid.points, usize::MAX) {
        rep.compare(format!("{label} {} {}", pt(&x), pt(&y)), ctx.omega(&x, &y)?, ctx.omega(&y, &x)?);
    }
    Ok(())
}

fn weight_one_at(ctx: &SewingContext, grid: &Grid, _cfg: &VerifyConfig, label: &str, rep: &mut ResidualReport) -> Result<()> {
    let zhu = ZhuContext::new(ctx, ZhuWeight::new(1)?)?;
    for x in &grid.points {
        let f = zhu.f_coefficients(x)?;
        let nu = [ctx.nu(Torus::One, x)?, ctx.nu(Torus::Two, x)?];
        let scale = nu[0].norm().max(nu[1].norm());
        rep.record(format!("{label} F₁ {}", pt(x)), (f.f1 - nu[0]).norm(), scale);
        rep.record(format!("{label} F₂ {}", pt(x)), (f.f2 - nu[1]).norm(), scale);
        let fpi: f64 = f.f_pi.iter().map(|v: &Complex64| v.norm()).sum();
        rep.record(format!("{label} F^Π {}", pt(x)), fpi, 1.0);
    }
    for (x, y) in pairs(&grid.points, 12) {
        rep.compare(format!("{label} P₂ {} {}", pt(&x), pt(&y)), zhu.gen_weierstrass(0, 1, &x, &y)?, ctx.omega(&x, &y)?);
    }
    Ok(())
}

fn p21_at(ctx: &SewingContext, grid: &Grid, cfg: &VerifyConfig, label: &str, rep: &mut ResidualReport) -> Result<()> {
    if ctx.point().eps() == ZERO {
        return Ok(());
    }
    let zhu = ZhuContext::new(ctx, ZhuWeight::new(2)?)?;
    for (x, y) in pairs(&grid.points, 12) {
        let series = zhu.gen_weierstrass(0, 0, &x, &y)?;
        let closed = p1_closed_form(ctx, &x, &y, &cfg.calculus.fd)?;
        rep.compare(format!("{label} {} {}", pt(&x), pt(&y)), series, closed);
    }
    Ok(())
}

fn phi_normalization_at(ctx: &SewingContext, _grid: &Grid, cfg: &VerifyConfig, label: &str, rep: &mut ResidualReport) -> Result<()> {
    let m = phi_normalization(ctx, &cfg.calculus.quad)?;
    for r in 0..3 {
        for i in 0..3 {
            let want = if r == i { 1.0 } else { 0.0 };
            rep.record(format!("{label} N{}{}", r + 1, i + 1), (m[r][i] - want).norm(), 1.0);
        }
    }
    Ok(())
}

fn xi_phi_at(ctx: &SewingContext, grid: &Grid, cfg: &VerifyConfig, label: &str, rep: &mut ResidualReport) -> Result<()> {
    let xi = xi_matrix(ctx, &cfg.calculus.quad)?;
    let zhu = ZhuContext::new(ctx, ZhuWeight::new(2)?)?;
    for x in &grid.points {
        let phi = zhu.two_diff_basis(x)?;
        let ps = psi(ctx, x)?;
        let scale = ps.iter().map(|v| v.norm()).fold(crate::report::SCALE_FLOOR, f64::max);
        for r in 0..3 {
            let lhs: Complex64 = (0..3).map(|i| xi[r][i] * phi[i]).sum();
            rep.record(format!("{label} {} Ψ{}", pt(x), r + 1), (lhs - ps[r]).norm(), scale);
        }
    }
    Ok(())
}

/// Passes when `|det Ξ| ≥ 1e-8`, recorded as the ratio `1e-8 / |det Ξ|`.
fn xi_det_at(ctx: &SewingContext, _grid: &Grid, cfg: &VerifyConfig, label: &str, rep: &mut ResidualReport) -> Result<()> {
    if ctx.point().eps().norm() < 0.05 {
        return Ok(());
    }
    let d = det3(&xi_matrix(ctx, &cfg.calculus.quad)?);
    rep.record(format!("{label} |det Ξ| = {:.3e}", d.norm()), 1e-8, d.norm());
    Ok(())
}

/// Runs every criterion.
pub fn run_all(grid: &Grid, cfg: &VerifyConfig) -> Vec<CriterionOutcome> {
    Criterion::ALL.iter().map(|&c| run_criterion(c, grid, cfg)).collect()
}
