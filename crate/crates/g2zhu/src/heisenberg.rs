//! Closed forms for the rank-one Heisenberg theory and its modules on the sewn surface.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sewing::{SewingContext, SurfacePoint, Torus, I, ONE, ZERO};

/// Largest number of insertions accepted by [`h_npoint`].
pub const MAX_INSERTIONS: usize = 8;

/// Module labels `(λ₁, λ₂)`; `(0, 0)` is the vacuum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct ModulePair {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
}

impl ModulePair {
    pub fn new(lambda1: Complex64, lambda2: Complex64) -> Self {
        ModulePair { lambda1, lambda2 }
    }

    pub fn vacuum() -> Self {
        ModulePair::default()
    }

    pub fn swapped(&self) -> Self {
        ModulePair { lambda1: self.lambda2, lambda2: self.lambda1 }
    }
}

/// `e^{iπλΩλ} Z_M`.
pub fn z2_partition(ctx: &SewingContext, lam: &ModulePair) -> Complex64 {
    let om = ctx.period_matrix();
    let l = [lam.lambda1, lam.lambda2];
    let mut q = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            q += l[i] * om.get(i, j) * l[j];
        }
    }
    (I * PI * q).exp() * ctx.z_m()
}

/// `∂^deriv ν_λ(x) = λ₁∂^deriv ν₁(x) + λ₂∂^deriv ν₂(x)`.
pub fn nu_lambda_deriv(ctx: &SewingContext, lam: &ModulePair, x: &SurfacePoint, deriv: usize) -> Result<Complex64> {
    let mut v = ZERO;
    if lam.lambda1 != ZERO {
        v += lam.lambda1 * ctx.nu_deriv(Torus::One, x, deriv)?;
    }
    if lam.lambda2 != ZERO {
        v += lam.lambda2 * ctx.nu_deriv(Torus::Two, x, deriv)?;
    }
    Ok(v)
}

pub fn nu_lambda(ctx: &SewingContext, lam: &ModulePair, x: &SurfacePoint) -> Result<Complex64> {
    nu_lambda_deriv(ctx, lam, x, 0)
}

/// Sum over partial matchings of the insertions, with matched pairs giving `ω`
/// and unmatched points `ν_λ`, times the partition function.
pub fn h_npoint(ctx: &SewingContext, lam: &ModulePair, pts: &[SurfacePoint]) -> Result<Complex64> {
    if pts.len() > MAX_INSERTIONS {
        return Err(Error::InvalidArgument(format!("at most {MAX_INSERTIONS} insertions, got {}", pts.len())));
    }
    for (a, p) in pts.iter().enumerate() {
        for q in &pts[a + 1..] {
            if p.torus == q.torus && ctx.table(p.torus).reduce(p.z - q.z).0.norm() < 1e-12 {
                return Err(Error::CoincidentPoints);
            }
        }
    }
    let n = pts.len();
    let mut nu = Vec::with_capacity(n);
    for p in pts {
        nu.push(nu_lambda(ctx, lam, p)?);
    }
    let mut om = vec![vec![ZERO; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            om[a][b] = ctx.omega(&pts[a], &pts[b])?;
        }
    }
    let all: Vec<usize> = (0..n).collect();
    Ok(matching_sum(&all, &nu, &om) * z2_partition(ctx, lam))
}

fn matching_sum(idx: &[usize], nu: &[Complex64], om: &[Vec<Complex64>]) -> Complex64 {
    let Some((&first, rest)) = idx.split_first() else {
        return ONE;
    };
    let mut total = if nu[first] == ZERO { ZERO } else { nu[first] * matching_sum(rest, nu, om) };
    for (k, &j) in rest.iter().enumerate() {
        let mut remaining: Vec<usize> = rest.to_vec();
        remaining.remove(k);
        total += om[first][j] * matching_sum(&remaining, nu, om);
    }
    total
}

/// `(½ν_λ(x)² + s(x)/12) Z_λ`.
pub fn virasoro_one_point(ctx: &SewingContext, lam: &ModulePair, x: &SurfacePoint) -> Result<Complex64> {
    let nu = nu_lambda(ctx, lam, x)?;
    let s = ctx.projective(x)?;
    Ok((nu * nu * 0.5 + s / 12.0) * z2_partition(ctx, lam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::SeriesConfig;
    use crate::sewing::ModuliPoint;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ctx(eps: Complex64) -> SewingContext {
        let p = ModuliPoint::new(c(0.0, 1.0), c(0.0, 1.1), eps).unwrap();
        SewingContext::new(&p, 16, &SeriesConfig::default()).unwrap()
    }

    #[test]
    fn partition_at_zero_eps() {
        let k = ctx(ZERO);
        let z = z2_partition(&k, &ModulePair::vacuum());
        let want = 1.0 / (k.table(Torus::One).eta() * k.table(Torus::Two).eta());
        assert!((z - want).norm() < 1e-15);
    }

    #[test]
    fn module_factor() {
        let k = ctx(c(0.1, 0.0));
        let lam = ModulePair::new(ONE, ZERO);
        let ratio = z2_partition(&k, &lam) / k.z_m();
        let want = (I * PI * k.period_matrix().get(0, 0)).exp();
        assert!((ratio - want).norm() < 1e-14);
    }

    #[test]
    fn one_and_two_point() {
        let k = ctx(c(0.1, 0.0));
        let x = SurfacePoint::new(Torus::One, c(0.8, 0.3));
        let y = SurfacePoint::new(Torus::Two, c(-0.5, 0.6));
        let w = SurfacePoint::new(Torus::One, c(-0.7, -0.9));
        let lam = ModulePair::new(c(0.7, 0.0), c(-0.3, 0.2));
        let z = z2_partition(&k, &lam);
        let one = h_npoint(&k, &lam, &[x]).unwrap();
        assert!((one - nu_lambda(&k, &lam, &x).unwrap() * z).norm() < 1e-15);
        let vac = ModulePair::vacuum();
        let two = h_npoint(&k, &vac, &[x, y]).unwrap();
        assert!((two - k.omega(&x, &y).unwrap() * k.z_m()).norm() < 1e-15);
        assert_eq!(h_npoint(&k, &vac, &[x, y, w]).unwrap(), ZERO);
        let a = h_npoint(&k, &lam, &[x, y, w]).unwrap();
        let b = h_npoint(&k, &lam, &[w, x, y]).unwrap();
        assert!((a - b).norm() < 1e-14 * a.norm());
        assert!(matches!(h_npoint(&k, &lam, &[x, x]), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn virasoro_zero_eps() {
        let k = ctx(ZERO);
        let x = SurfacePoint::new(Torus::One, c(0.8, 0.3));
        let e2 = k.table(Torus::One).eisenstein(2);
        let lam = ModulePair::new(ONE, ZERO);
        let v = virasoro_one_point(&k, &lam, &x).unwrap();
        let z = z2_partition(&k, &lam);
        assert!((v - (0.5 + e2 * 0.5) * z).norm() < 1e-14);
    }

    #[test]
    fn virasoro_as_coincidence_limit() {
        let k = ctx(c(0.12, 0.02));
        let lam = ModulePair::new(c(0.5, 0.0), c(1.0, 0.0));
        let x = SurfacePoint::new(Torus::Two, c(0.6, 0.7));
        let z = z2_partition(&k, &lam);
        let d = c(1e-3, 0.0);
        let a = SurfacePoint::new(x.torus, x.z + d * 0.5);
        let b = SurfacePoint::new(x.torus, x.z - d * 0.5);
        let two = h_npoint(&k, &lam, &[a, b]).unwrap();
        let lim = (two - z / (d * d)) * 0.5;
        let v = virasoro_one_point(&k, &lam, &x).unwrap();
        assert!((lim - v).norm() < 1e-5 * v.norm());
    }
}
