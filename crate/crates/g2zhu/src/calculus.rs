//! Differentiation on the sewing domain, contour integrals over the α, β and
//! circle cycles, the matrix Ξ and residual evaluators for the differential
//! identities.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::SeriesConfig;
use crate::error::{Error, Result};
use crate::heisenberg::{h_npoint, nu_lambda_deriv, virasoro_one_point, z2_partition, ModulePair};
use crate::report::{ResidualReport, SCALE_FLOOR};
use crate::sewing::{ModuliPoint, SewingContext, SurfacePoint, Torus, I, ZERO};
use crate::zhu::{ZhuContext, ZhuWeight};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub alpha_nodes: usize,
    pub beta_panels: usize,
    pub beta_order: usize,
    pub circle_nodes: usize,
    pub base_point: Option<Complex64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { alpha_nodes: 256, beta_panels: 32, beta_order: 16, circle_nodes: 128, base_point: None }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let min = [self.alpha_nodes, self.beta_panels, self.beta_order, self.circle_nodes].into_iter().min().unwrap();
        if min < 8 {
            return Err(Error::InvalidArgument("quadrature node counts must be at least 8".into()));
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        QuadratureConfig {
            alpha_nodes: 2 * self.alpha_nodes,
            beta_panels: 2 * self.beta_panels,
            circle_nodes: 2 * self.circle_nodes,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub step: f64,
    pub richardson_levels: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { step: 1e-4, richardson_levels: 1 }
    }
}

impl FdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 1e-3) || self.richardson_levels == 0 {
            return Err(Error::InvalidArgument("FD step must lie in (0, 1e-3] with at least one level".into()));
        }
        Ok(())
    }
}

/// Direction of a moduli derivative; `Eps` is the `τ₃` direction with `ε = e^{2πiτ₃}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Tau1,
    Tau2,
    Eps,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Tau1, Direction::Tau2, Direction::Eps];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cycle {
    Alpha(Torus),
    Beta(Torus),
    Circle(Torus),
}

/// Radius of the contour circle: geometric mean of the annulus bounds.
pub fn contour_radius(p: &ModuliPoint) -> f64 {
    let (lower, upper) = p.annulus(Torus::One);
    if lower > 0.0 {
        (lower * upper).sqrt()
    } else {
        0.5 * upper
    }
}

fn base_point(p: &ModuliPoint, quad: &QuadratureConfig) -> Complex64 {
    quad.base_point.unwrap_or_else(|| Complex64::from_polar(contour_radius(p), PI / 4.0))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |r, c| {
        if r + 1 == c || c + 1 == r {
            let k = r.max(c) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// `∫ f(z) dz` along the requested cycle.
pub fn contour_integral<F>(mut f: F, cycle: Cycle, p: &ModuliPoint, quad: &QuadratureConfig) -> Result<Complex64>
where
    F: FnMut(&SurfacePoint) -> Result<Complex64>,
{
    quad.validate()?;
    let z0 = base_point(p, quad);
    let mut acc = ZERO;
    match cycle {
        Cycle::Alpha(t) => {
            let n = quad.alpha_nodes;
            let step = 2.0 * PI * I / n as f64;
            for j in 0..n {
                acc += f(&SurfacePoint::new(t, z0 + step * j as f64))? * step;
            }
        }
        Cycle::Beta(t) => {
            let period = 2.0 * PI * I * p.tau(t);
            let (nodes, weights) = gauss_legendre(quad.beta_order);
            let panels = quad.beta_panels;
            let h = 1.0 / panels as f64;
            for k in 0..panels {
                let mid = (k as f64 + 0.5) * h;
                for (u, w) in nodes.iter().zip(weights.iter()) {
                    let t_par = mid + 0.5 * h * u;
                    acc += f(&SurfacePoint::new(t, z0 + period * t_par))? * (0.5 * h * w);
                }
            }
            acc *= period;
        }
        Cycle::Circle(t) => {
            let rho = contour_radius(p);
            let (lower, upper) = p.annulus(t);
            if rho < lower || rho > upper {
                return Err(Error::OutsideAnnulus { modulus: rho, lower, upper });
            }
            let n = quad.circle_nodes;
            for j in 0..n {
                let z = Complex64::from_polar(rho, 2.0 * PI * j as f64 / n as f64);
                acc += f(&SurfacePoint::new(t, z))? * (I * z * (2.0 * PI / n as f64));
            }
        }
    }
    Ok(acc)
}

fn shifted(p: &ModuliPoint, dir: Direction, h: f64) -> Result<ModuliPoint> {
    match dir {
        Direction::Tau1 => p.with_tau(Torus::One, p.tau(Torus::One) + h),
        Direction::Tau2 => p.with_tau(Torus::Two, p.tau(Torus::Two) + h),
        Direction::Eps => p.with_eps(p.eps() + h),
    }
}

/// Central differences with Richardson extrapolation of `∂f/∂τ_a` or `∂f/∂ε`,
/// applied componentwise.
pub fn raw_gradient<F>(f: &F, dir: Direction, p: &ModuliPoint, fd: &FdConfig) -> Result<Vec<Complex64>>
where
    F: Fn(&ModuliPoint) -> Result<Vec<Complex64>>,
{
    fd.validate()?;
    let levels = fd.richardson_levels;
    let mut table: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(levels + 1);
    for j in 0..=levels {
        let h = fd.step / 2f64.powi(j as i32);
        let plus = f(&shifted(p, dir, h)?)?;
        let minus = f(&shifted(p, dir, -h)?)?;
        let d: Vec<Complex64> = plus.iter().zip(minus.iter()).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let mut row = vec![d];
        for m in 1..=j {
            let factor = 4f64.powi(m as i32);
            let prev = &table[j - 1][m - 1];
            let cur = &row[m - 1];
            row.push(cur.iter().zip(prev.iter()).map(|(a, b)| (a * factor - b) / (factor - 1.0)).collect());
        }
        table.push(row);
    }
    Ok(table.pop().unwrap().pop().unwrap())
}

/// `q_a∂_{q_a} f = (1/2πi)∂_{τ_a} f` or `ε∂_ε f`.
pub fn moduli_derivative<F>(f: F, dir: Direction, p: &ModuliPoint, fd: &FdConfig) -> Result<Complex64>
where
    F: Fn(&ModuliPoint) -> Result<Complex64>,
{
    let g = |q: &ModuliPoint| f(q).map(|v| vec![v]);
    let d = raw_gradient(&g, dir, p, fd)?[0];
    Ok(normalize(d, dir, p))
}

fn normalize(d: Complex64, dir: Direction, p: &ModuliPoint) -> Complex64 {
    match dir {
        Direction::Tau1 | Direction::Tau2 => d / (2.0 * PI * I),
        Direction::Eps => d * p.eps(),
    }
}

/// `Φ₁(x)q₁∂_{q₁}f + Φ₂(x)q₂∂_{q₂}f + Φ₃(x)ε∂_εf` for each component of `f`.
pub fn apply_dx_vec<F>(f: &F, x: &SurfacePoint, ctx: &SewingContext, fd: &FdConfig) -> Result<Vec<Complex64>>
where
    F: Fn(&ModuliPoint) -> Result<Vec<Complex64>>,
{
    let zhu = ZhuContext::new(ctx, ZhuWeight::new(2)?)?;
    let phi = zhu.two_diff_basis(x)?;
    let p = ctx.point();
    let mut out: Option<Vec<Complex64>> = None;
    for (k, dir) in Direction::ALL.into_iter().enumerate() {
        if dir == Direction::Eps && p.eps() == ZERO {
            continue;
        }
        let d = raw_gradient(f, dir, p, fd)?;
        let acc = out.get_or_insert_with(|| vec![ZERO; d.len()]);
        for (a, v) in acc.iter_mut().zip(d) {
            *a += phi[k] * normalize(v, dir, p);
        }
    }
    match out {
        Some(v) => Ok(v),
        None => Ok(f(p)?.iter().map(|_| ZERO).collect()),
    }
}

pub fn apply_dx<F>(f: F, x: &SurfacePoint, ctx: &SewingContext, fd: &FdConfig) -> Result<Complex64>
where
    F: Fn(&ModuliPoint) -> Result<Complex64>,
{
    let g = |q: &ModuliPoint| f(q).map(|v| vec![v]);
    Ok(apply_dx_vec(&g, x, ctx, fd)?[0])
}

/// `∇_x F + (k/6) s(x) F`.
pub fn serre_derivative<F>(f: F, k: f64, x: &SurfacePoint, ctx: &SewingContext, fd: &FdConfig) -> Result<Complex64>
where
    F: Fn(&ModuliPoint) -> Result<Complex64>,
{
    let value = f(ctx.point())?;
    let d = apply_dx(&f, x, ctx, fd)?;
    Ok(d + ctx.projective(x)? * value * (k / 6.0))
}

/// `Ψ = (ν₁², ν₂², ν₁ν₂)` at `x`.
pub fn psi(ctx: &SewingContext, x: &SurfacePoint) -> Result<[Complex64; 3]> {
    let a = ctx.nu(Torus::One, x)?;
    let b = ctx.nu(Torus::Two, x)?;
    Ok([a * a, b * b, a * b])
}

/// `M_{ri} = (1/2πi)∮_{α_i} g_r` for `i = 1, 2` and `M_{r3} = (1/2πi)∮_{C₁} z g_r`.
pub fn period_table<G>(g: G, p: &ModuliPoint, quad: &QuadratureConfig) -> Result<[[Complex64; 3]; 3]>
where
    G: Fn(&SurfacePoint) -> Result<[Complex64; 3]>,
{
    let mut out = [[ZERO; 3]; 3];
    let cycles = [Cycle::Alpha(Torus::One), Cycle::Alpha(Torus::Two), Cycle::Circle(Torus::One)];
    for (i, cycle) in cycles.into_iter().enumerate() {
        for r in 0..3 {
            let weight_z = i == 2;
            let v = contour_integral(
                |x| {
                    let val = g(x)?[r];
                    Ok(if weight_z { val * x.z } else { val })
                },
                cycle,
                p,
                quad,
            )?;
            out[r][i] = v / (2.0 * PI * I);
        }
    }
    Ok(out)
}

/// The matrix Ξ of 2-differential periods.
pub fn xi_matrix(ctx: &SewingContext, quad: &QuadratureConfig) -> Result<[[Complex64; 3]; 3]> {
    period_table(|x| psi(ctx, x), ctx.point(), quad)
}

/// Periods of the basis `Φ`; the identity matrix up to quadrature error.
pub fn phi_normalization(ctx: &SewingContext, quad: &QuadratureConfig) -> Result<[[Complex64; 3]; 3]> {
    let zhu = ZhuContext::new(ctx, ZhuWeight::new(2)?)?;
    period_table(|x| zhu.two_diff_basis(x), ctx.point(), quad)
}

pub fn det3(m: &[[Complex64; 3]; 3]) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Finite-difference Jacobian `∂(Ω₁₁, Ω₂₂, Ω₁₂)/∂(τ₁, τ₂, τ₃)`.
pub fn period_jacobian(p: &ModuliPoint, order: usize, series: &SeriesConfig, fd: &FdConfig) -> Result<[[Complex64; 3]; 3]> {
    let f = |q: &ModuliPoint| -> Result<Vec<Complex64>> {
        Ok(SewingContext::new(q, order, series)?.period_matrix().coordinates().to_vec())
    };
    let mut out = [[ZERO; 3]; 3];
    for (s, dir) in Direction::ALL.into_iter().enumerate() {
        if dir == Direction::Eps && p.eps() == ZERO {
            continue;
        }
        let d = raw_gradient(&f, dir, p, fd)?;
        for r in 0..3 {
            out[r][s] = match dir {
                Direction::Eps => d[r] * p.eps() * (2.0 * PI * I),
                _ => d[r],
            };
        }
    }
    Ok(out)
}

/// Coefficient-level check of the Wronskian closed form for `²𝒫₁(x,y)`.
pub fn p1_closed_form(ctx: &SewingContext, x: &SurfacePoint, y: &SurfacePoint, fd: &FdConfig) -> Result<Complex64> {
    let nx = [ctx.nu(Torus::One, x)?, ctx.nu(Torus::Two, x)?];
    let ny = [ctx.nu(Torus::One, y)?, ctx.nu(Torus::Two, y)?];
    let dny = [ctx.nu_deriv(Torus::One, y, 1)?, ctx.nu_deriv(Torus::Two, y, 1)?];
    let wron = ny[0] * dny[1] - ny[1] * dny[0];
    let scale = (ny[0] * dny[1]).norm() + (ny[1] * dny[0]).norm();
    if wron.norm() <= 1e-12 * scale.max(1e-300) || scale == 0.0 {
        return Err(Error::WronskianZero);
    }
    let (order, series) = (ctx.order(), *ctx.config());
    let yy = *y;
    let f = move |q: &ModuliPoint| -> Result<Vec<Complex64>> {
        let c = SewingContext::new(q, order, &series)?;
        Ok(vec![c.nu(Torus::One, &yy)?, c.nu(Torus::Two, &yy)?])
    };
    let nab = apply_dx_vec(&f, x, ctx, fd)?;
    let om = ctx.omega(x, y)?;
    let num = om * (nx[0] * ny[1] - nx[1] * ny[0]) + (ny[0] * nab[1] - ny[1] * nab[0]);
    Ok(-num / wron)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdentityName {
    HeisDe,
    DxOmega,
    NuDe,
    OmegaDe,
    SDe,
    Virasoro1pt,
    Ward2pt,
    Jacobian,
}

impl IdentityName {
    pub const ALL: [IdentityName; 8] = [
        IdentityName::HeisDe,
        IdentityName::DxOmega,
        IdentityName::NuDe,
        IdentityName::OmegaDe,
        IdentityName::SDe,
        IdentityName::Virasoro1pt,
        IdentityName::Ward2pt,
        IdentityName::Jacobian,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityName::HeisDe => "heis_de",
            IdentityName::DxOmega => "dx_omega",
            IdentityName::NuDe => "nu_de",
            IdentityName::OmegaDe => "omega_de",
            IdentityName::SDe => "s_de",
            IdentityName::Virasoro1pt => "virasoro_1pt",
            IdentityName::Ward2pt => "ward_2pt",
            IdentityName::Jacobian => "jacobian",
        }
    }

    pub fn parse(s: &str) -> Option<IdentityName> {
        IdentityName::ALL.into_iter().find(|n| n.as_str() == s)
    }

    pub fn tolerance(&self) -> f64 {
        1e-6
    }
}

impl std::fmt::Display for IdentityName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evaluation site: moduli, the point `x` and auxiliary points `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentitySample {
    pub point: ModuliPoint,
    pub x: SurfacePoint,
    pub ys: Vec<SurfacePoint>,
    pub lambda: ModulePair,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalculusConfig {
    pub order: usize,
    pub series: SeriesConfig,
    pub quad: QuadratureConfig,
    pub fd: FdConfig,
}

impl Default for CalculusConfig {
    fn default() -> Self {
        CalculusConfig {
            order: crate::sewing::DEFAULT_ORDER,
            series: SeriesConfig::default(),
            quad: QuadratureConfig::default(),
            fd: FdConfig::default(),
        }
    }
}

fn fmt_c(z: Complex64) -> String {
    format!("{:.4}{:+.4}i", z.re, z.im)
}

fn sample_label(s: &IdentitySample) -> String {
    let p = &s.point;
    format!(
        "tau=({},{}) eps={} x={}:{}",
        fmt_c(p.tau(Torus::One)),
        fmt_c(p.tau(Torus::Two)),
        fmt_c(p.eps()),
        s.x.torus,
        fmt_c(s.x.z)
    )
}

fn need_ys(s: &IdentitySample, n: usize) -> Result<()> {
    if s.ys.len() < n {
        return Err(Error::InvalidArgument(format!("identity needs {n} auxiliary points")));
    }
    Ok(())
}

/// Evaluates `LHS - RHS` of the named identity at each sample.
pub fn verify_identity(name: IdentityName, samples: &[IdentitySample], cfg: &CalculusConfig) -> ResidualReport {
    let mut report = ResidualReport::new(name.as_str(), name.tolerance());
    for s in samples {
        let label = sample_label(s);
        let mut sub = ResidualReport::new(name.as_str(), name.tolerance());
        if let Err(e) = identity_at(name, s, cfg, &label, &mut sub) {
            report.error(label, e);
        } else {
            report.extend(sub);
        }
    }
    report
}

fn identity_at(
    name: IdentityName,
    s: &IdentitySample,
    cfg: &CalculusConfig,
    label: &str,
    rep: &mut ResidualReport,
) -> Result<()> {
    let ctx = SewingContext::new(&s.point, cfg.order, &cfg.series)?;
    let x = s.x;
    let (order, series, fd) = (cfg.order, cfg.series, cfg.fd);
    let build = move |q: &ModuliPoint| SewingContext::new(q, order, &series);
    match name {
        IdentityName::HeisDe => {
            let lhs = apply_dx(|q| Ok(build(q)?.z_m()), &x, &ctx, &fd)?;
            let rhs = ctx.projective(&x)? * ctx.z_m() / 12.0;
            rep.compare(label, lhs, rhs);
        }
        IdentityName::DxOmega => {
            let f = |q: &ModuliPoint| Ok(build(q)?.period_matrix().coordinates().to_vec());
            let d = apply_dx_vec(&f, &x, &ctx, &fd)?;
            let n1 = ctx.nu(Torus::One, &x)?;
            let n2 = ctx.nu(Torus::Two, &x)?;
            let rhs = [n1 * n1, n2 * n2, n1 * n2];
            for (k, tag) in ["11", "22", "12"].iter().enumerate() {
                rep.compare(format!("{label} Ω{tag}"), d[k] * (2.0 * PI * I), rhs[k]);
            }
        }
        IdentityName::NuDe => {
            need_ys(s, 1)?;
            let zhu = ZhuContext::new(&ctx, ZhuWeight::new(2)?)?;
            for y in &s.ys {
                let yy = *y;
                let f = |q: &ModuliPoint| {
                    let c = build(q)?;
                    Ok(vec![c.nu(Torus::One, &yy)?, c.nu(Torus::Two, &yy)?])
                };
                let nab = apply_dx_vec(&f, &x, &ctx, &fd)?;
                let p1 = zhu.gen_weierstrass(0, 0, &x, y)?;
                let p2 = zhu.gen_weierstrass(0, 1, &x, y)?;
                let om = ctx.omega(&x, y)?;
                for (k, t) in Torus::BOTH.into_iter().enumerate() {
                    let lhs = nab[k] + p2 * ctx.nu(t, y)? + p1 * ctx.nu_deriv(t, y, 1)?;
                    let rhs = om * ctx.nu(t, &x)?;
                    rep.compare(format!("{label} y={}:{} i={}", y.torus, fmt_c(y.z), k + 1), lhs, rhs);
                }
            }
        }
        IdentityName::OmegaDe => {
            need_ys(s, 2)?;
            let zhu = ZhuContext::new(&ctx, ZhuWeight::new(2)?)?;
            let (y1, y2) = (s.ys[0], s.ys[1]);
            let nab = apply_dx(|q| build(q)?.omega(&y1, &y2), &x, &ctx, &fd)?;
            let w = ctx.omega(&y1, &y2)?;
            let mut lhs = nab;
            lhs += zhu.gen_weierstrass(0, 0, &x, &y1)? * ctx.omega_deriv(&y1, &y2, 1, 0)?;
            lhs += zhu.gen_weierstrass(0, 0, &x, &y2)? * ctx.omega_deriv(&y1, &y2, 0, 1)?;
            lhs += (zhu.gen_weierstrass(0, 1, &x, &y1)? + zhu.gen_weierstrass(0, 1, &x, &y2)?) * w;
            let rhs = ctx.omega(&x, &y1)? * ctx.omega(&x, &y2)?;
            rep.compare(label, lhs, rhs);
        }
        IdentityName::SDe => {
            need_ys(s, 1)?;
            let zhu = ZhuContext::new(&ctx, ZhuWeight::new(2)?)?;
            for y in &s.ys {
                let yy = *y;
                let nab = apply_dx(|q| build(q)?.projective(&yy), &x, &ctx, &fd)?;
                let sy = ctx.projective(y)?;
                let ds = ctx.projective_deriv(y, 1)?;
                let lhs = (nab + zhu.gen_weierstrass(0, 0, &x, y)? * ds + zhu.gen_weierstrass(0, 1, &x, y)? * sy * 2.0)
                    / 6.0
                    + zhu.gen_weierstrass(0, 3, &x, y)?;
                let om = ctx.omega(&x, y)?;
                rep.compare(format!("{label} y={}:{}", y.torus, fmt_c(y.z)), lhs, om * om);
            }
        }
        IdentityName::Virasoro1pt => {
            let lam = s.lambda;
            let lhs = apply_dx(|q| Ok(z2_partition(&build(q)?, &lam)), &x, &ctx, &fd)?;
            let rhs = virasoro_one_point(&ctx, &lam, &x)?;
            rep.compare(label, lhs, rhs);
        }
        IdentityName::Ward2pt => {
            need_ys(s, 2)?;
            let lam = s.lambda;
            let zhu = ZhuContext::new(&ctx, ZhuWeight::new(2)?)?;
            let (y1, y2) = (s.ys[0], s.ys[1]);
            let lhs = omega_tilde_limit(&ctx, &lam, &x, &[y1, y2])?;
            let h = |c: &SewingContext| h_npoint(c, &lam, &[y1, y2]);
            let nab = apply_dx(|q| h(&build(q)?), &x, &ctx, &fd)?;
            let z = z2_partition(&ctx, &lam);
            let nu = |y: &SurfacePoint, d: usize| nu_lambda_deriv(&ctx, &lam, y, d);
            let d1 = (nu(&y1, 1)? * nu(&y2, 0)? + ctx.omega_deriv(&y1, &y2, 1, 0)?) * z;
            let d2 = (nu(&y1, 0)? * nu(&y2, 1)? + ctx.omega_deriv(&y1, &y2, 0, 1)?) * z;
            let hv = h(&ctx)?;
            let mut rhs = nab;
            rhs += zhu.gen_weierstrass(0, 0, &x, &y1)? * d1 + zhu.gen_weierstrass(0, 0, &x, &y2)? * d2;
            rhs += (zhu.gen_weierstrass(0, 1, &x, &y1)? + zhu.gen_weierstrass(0, 1, &x, &y2)?) * hv;
            rep.compare(label, lhs, rhs);
        }
        IdentityName::Jacobian => {
            let xi = xi_matrix(&ctx, &cfg.quad)?;
            let jac = period_jacobian(&s.point, cfg.order, &cfg.series, &cfg.fd)?;
            let norm = xi.iter().flatten().map(|v| v.norm()).fold(SCALE_FLOOR, f64::max);
            for r in 0..3 {
                for c in 0..3 {
                    let label = format!("{} J{}{}", s_label_moduli(&s.point), r + 1, c + 1);
                    rep.record(label, (jac[r][c] - xi[r][c]).norm(), norm);
                }
            }
        }
    }
    Ok(())
}

fn s_label_moduli(p: &ModuliPoint) -> String {
    format!("tau=({},{}) eps={}", fmt_c(p.tau(Torus::One)), fmt_c(p.tau(Torus::Two)), fmt_c(p.eps()))
}

/// `Z(ω̃, x; h, y₁; …)` as the coincidence limit `½ lim (Z(h,x+δ/2; h,x-δ/2; …) - Z(…)/δ²)`,
/// extrapolated in `δ²`.
pub fn omega_tilde_limit(ctx: &SewingContext, lam: &ModulePair, x: &SurfacePoint, ys: &[SurfacePoint]) -> Result<Complex64> {
    let base = h_npoint(ctx, lam, ys)?;
    let g = |d: f64| -> Result<Complex64> {
        let mut pts = vec![SurfacePoint::new(x.torus, x.z + d * 0.5), SurfacePoint::new(x.torus, x.z - d * 0.5)];
        pts.extend_from_slice(ys);
        Ok((h_npoint(ctx, lam, &pts)? - base / (d * d)) * 0.5)
    };
    let d0 = 0.02;
    let levels = 3;
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for j in 0..levels {
        let mut row = vec![g(d0 / 2f64.powi(j as i32))?];
        for m in 1..=j {
            let f = 4f64.powi(m as i32);
            let v = (row[m - 1] * f - rows[j - 1][m - 1]) / (f - 1.0);
            row.push(v);
        }
        rows.push(row);
    }
    Ok(*rows.last().unwrap().last().unwrap())
}

/// The sample moduli `(τ₁, τ₂) ∈ {(i,i), (i,1.2i), (0.3+i,1.1i)}`, `ε ∈ {0, 0.05, 0.15}`.
pub fn standard_moduli() -> Vec<(Complex64, Complex64, Complex64)> {
    let taus = [
        (Complex64::new(0.0, 1.0), Complex64::new(0.0, 1.0)),
        (Complex64::new(0.0, 1.0), Complex64::new(0.0, 1.2)),
        (Complex64::new(0.3, 1.0), Complex64::new(0.0, 1.1)),
    ];
    let mut out = Vec::new();
    for (t1, t2) in taus {
        for e in [0.0, 0.05, 0.15] {
            out.push((t1, t2, Complex64::new(e, 0.0)));
        }
    }
    out
}

/// Four points per torus in the middle of the annulus.
pub fn standard_points() -> Vec<SurfacePoint> {
    let polar = [
        (Torus::One, 0.9, 0.4),
        (Torus::One, 1.3, 2.2),
        (Torus::One, 0.7, -2.0),
        (Torus::One, 1.5, -0.7),
        (Torus::Two, 1.0, 1.1),
        (Torus::Two, 0.8, 2.9),
        (Torus::Two, 1.4, -1.4),
        (Torus::Two, 0.65, -0.2),
    ];
    polar.iter().map(|&(t, r, a)| SurfacePoint::new(t, Complex64::from_polar(r, a))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(w.iter()).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn trivial_contours() {
        let p = ModuliPoint::new(c(0.0, 1.0), c(0.0, 1.2), c(0.1, 0.0)).unwrap();
        let q = QuadratureConfig::default();
        let a = contour_integral(|_| Ok(c(1.0, 0.0)), Cycle::Alpha(Torus::One), &p, &q).unwrap();
        assert!((a - 2.0 * PI * I).norm() < 1e-13);
        let b = contour_integral(|_| Ok(c(1.0, 0.0)), Cycle::Beta(Torus::Two), &p, &q).unwrap();
        assert!((b - 2.0 * PI * I * c(0.0, 1.2)).norm() < 1e-13);
        let r = contour_integral(|x| Ok(1.0 / x.z), Cycle::Circle(Torus::One), &p, &q).unwrap();
        assert!((r - 2.0 * PI * I).norm() < 1e-13);
    }

    #[test]
    fn derivative_of_tau() {
        let p = ModuliPoint::new(c(0.0, 1.0), c(0.0, 1.2), c(0.1, 0.0)).unwrap();
        let d = moduli_derivative(|q| Ok(q.tau(Torus::One)), Direction::Tau1, &p, &FdConfig::default()).unwrap();
        assert!((d - 1.0 / (2.0 * PI * I)).norm() < 1e-12);
    }

    #[test]
    fn richardson_levels_agree() {
        let p = ModuliPoint::new(c(0.3, 1.0), c(0.0, 1.1), c(0.1, 0.0)).unwrap();
        let f = |q: &ModuliPoint| Ok(SewingContext::new(q, 16, &SeriesConfig::default())?.logdet());
        let one = moduli_derivative(f, Direction::Eps, &p, &FdConfig::default()).unwrap();
        let two = moduli_derivative(f, Direction::Eps, &p, &FdConfig { step: 1e-4, richardson_levels: 2 }).unwrap();
        assert!((one - two).norm() < 1e-8 * one.norm());
    }

    #[test]
    fn dx_of_constant_vanishes() {
        let p = ModuliPoint::new(c(0.3, 1.0), c(0.0, 1.1), c(0.1, 0.0)).unwrap();
        let ctx = SewingContext::new(&p, 16, &SeriesConfig::default()).unwrap();
        let x = SurfacePoint::new(Torus::One, c(0.8, 0.4));
        let d = apply_dx(|_| Ok(c(2.5, -1.0)), &x, &ctx, &FdConfig::default()).unwrap();
        assert!(d.norm() < 1e-12);
    }

    #[test]
    fn identity_names_round_trip() {
        for n in IdentityName::ALL {
            assert_eq!(IdentityName::parse(n.as_str()), Some(n));
        }
        assert_eq!(IdentityName::parse("nope"), None);
    }
}
