//! Genus-two Zhu recursion coefficients: the weight-dependent functions `ᴺF_a`,
//! `ᴺF^Π` and the generalized Weierstrass functions `ᴺ𝒫`, together with the
//! holomorphic 2-differential basis `Φ`.

use nalgebra::RowDVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{binomial, derivative_factor};
use crate::error::{Error, Result};
use crate::sewing::{CMatrix, CVector, SewingContext, SurfacePoint, Torus, ONE, ZERO};

type CRow = RowDVector<Complex64>;

/// Weight `N` of the recursion; `N >= 3` needs [`ZhuWeight::experimental`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZhuWeight {
    n: usize,
}

impl ZhuWeight {
    pub fn new(n: usize) -> Result<Self> {
        match n {
            1 | 2 => Ok(ZhuWeight { n }),
            0 => Err(Error::InvalidArgument("weight N must be at least 1".into())),
            _ => Err(Error::InvalidArgument(format!("weight N = {n} is experimental"))),
        }
    }

    pub fn experimental(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("weight N must be at least 1".into()));
        }
        Ok(ZhuWeight { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `K = 2N - 2`.
    pub fn k(&self) -> usize {
        2 * self.n - 2
    }
}

/// `Γ(m,n) = δ_{m+n,K}`, `Δ(m,n) = δ_{m,n+K}` and `Π = Γ²`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftMatrices {
    pub gamma: CMatrix,
    pub delta: CMatrix,
    pub pi: CMatrix,
}

pub fn shift_matrices(weight: ZhuWeight, order: usize) -> Result<ShiftMatrices> {
    let k = weight.k();
    if order <= k {
        return Err(Error::InvalidArgument(format!("truncation order {order} must exceed K = {k}")));
    }
    let gamma = CMatrix::from_fn(order, order, |r, c| if r + c + 2 == k { ONE } else { ZERO });
    let delta = CMatrix::from_fn(order, order, |r, c| if r == c + k { ONE } else { ZERO });
    let pi = &gamma * &gamma;
    Ok(ShiftMatrices { gamma, delta, pi })
}

/// `Λ_a(m,n) = ε^{(m+n)/2} (-1)^{n+1} C(m+n-1, n) E_{m+n}(τ_a)`.
pub fn lambda_matrix(ctx: &SewingContext, t: Torus) -> CMatrix {
    let order = ctx.order();
    let eps = ctx.point().eps();
    let table = ctx.table(t);
    CMatrix::from_fn(order, order, |r, c| {
        let (m, n) = (r + 1, c + 1);
        if (m + n) % 2 == 1 {
            return ZERO;
        }
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        eps.powi(((m + n) / 2) as i32) * table.eisenstein(m + n) * (sign * binomial(m + n - 1, n))
    })
}

/// The values `ᴺF₁(x)`, `ᴺF₂(x)` and `ᴺF^Π(x;m)` for `m = 1..K-1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FCoefficients {
    pub f1: Complex64,
    pub f2: Complex64,
    pub f_pi: Vec<Complex64>,
}

/// Zhu recursion data for one weight at one moduli point.
#[derive(Clone, Debug)]
pub struct ZhuContext<'a> {
    sew: &'a SewingContext,
    weight: ZhuWeight,
    shifts: ShiftMatrices,
    lambda: [CMatrix; 2],
    lambda_t: [CMatrix; 2],
    x_mat: [CMatrix; 2],
    pi_mat: [CMatrix; 2],
    phi3_col: [CVector; 2],
}

impl<'a> ZhuContext<'a> {
    pub fn new(sew: &'a SewingContext, weight: ZhuWeight) -> Result<Self> {
        let order = sew.order();
        let shifts = shift_matrices(weight, order)?;
        let lambda = [lambda_matrix(sew, Torus::One), lambda_matrix(sew, Torus::Two)];
        let lambda_t = [&lambda[0] * &shifts.delta, &lambda[1] * &shifts.delta];
        let id = CMatrix::identity(order, order);
        let mut x_mat = Vec::with_capacity(2);
        let mut pi_mat = Vec::with_capacity(2);
        let mut phi3_col = Vec::with_capacity(2);
        let k = weight.k();
        let s = sew.point().sqrt_eps();
        for t in Torus::BOTH {
            let (a, b) = (t.index(), t.other().index());
            let m = &id - &lambda_t[b] * &lambda_t[a];
            let inv = m
                .lu()
                .try_inverse()
                .ok_or_else(|| Error::Singular(format!("1 - Λ̃Λ̃ on {t}")))?;
            let xm = &shifts.delta * inv;
            let inner = &lambda_t[b] * &lambda[a] + &lambda[b] * &shifts.gamma;
            pi_mat.push((&id + &xm * inner) * &shifts.pi);
            let col = if k == 2 {
                let ta = sew.table(t);
                let tb = sew.table(t.other());
                let mut own = CVector::zeros(order);
                let mut oth = CVector::zeros(order);
                let mut sp = ONE;
                for l in 1..=order {
                    sp *= s;
                    own[l - 1] = sp * ta.eisenstein(l + 1) * l as f64;
                    oth[l - 1] = sp * tb.eisenstein(l + 1) * l as f64;
                }
                &lambda_t[b] * own + oth
            } else {
                CVector::zeros(order)
            };
            phi3_col.push(&xm * col);
            x_mat.push(xm);
        }
        let x_mat = [x_mat[0].clone(), x_mat[1].clone()];
        let pi_mat = [pi_mat[0].clone(), pi_mat[1].clone()];
        let phi3_col = [phi3_col[0].clone(), phi3_col[1].clone()];
        Ok(ZhuContext { sew, weight, shifts, lambda, lambda_t, x_mat, pi_mat, phi3_col })
    }

    pub fn weight(&self) -> ZhuWeight {
        self.weight
    }

    pub fn sewing(&self) -> &SewingContext {
        self.sew
    }

    pub fn shifts(&self) -> &ShiftMatrices {
        &self.shifts
    }

    pub fn lambda(&self, t: Torus) -> &CMatrix {
        &self.lambda[t.index()]
    }

    pub fn lambda_tilde(&self, t: Torus) -> &CMatrix {
        &self.lambda_t[t.index()]
    }

    fn r_from(&self, p: &[Complex64], deriv: usize) -> CRow {
        let order = self.sew.order();
        let s = self.sew.point().sqrt_eps();
        let mut out = CRow::zeros(order);
        let mut sm = ONE;
        for m in 1..=order {
            sm *= s;
            out[m - 1] = sm * p[m + deriv] * derivative_factor(m + 1, deriv);
        }
        out
    }

    /// `∂^deriv R(x;m)` with `R(x;m) = ε^{m/2} P_{m+1}(x)`.
    pub fn r_row(&self, x: &SurfacePoint, deriv: usize) -> Result<CRow> {
        let p = self.sew.p_values(x, self.sew.order() + 1 + deriv)?;
        Ok(self.r_from(&p, deriv))
    }

    /// `∂^deriv Q(x)`.
    pub fn q_row(&self, x: &SurfacePoint, deriv: usize) -> Result<CRow> {
        Ok(self.r_row(x, deriv)? * &self.x_mat[x.torus.index()])
    }

    /// `𝒫_{1+j}(y;m) = ε^{m/2} C(m+j-1, j) (P_{m+j}(y) - δ_{j0} E_m)`.
    pub fn p_column(&self, y: &SurfacePoint, j: usize) -> Result<CVector> {
        let order = self.sew.order();
        let p = self.sew.p_values(y, order + j)?;
        let table = self.sew.table(y.torus);
        let s = self.sew.point().sqrt_eps();
        let mut out = CVector::zeros(order);
        let mut sm = ONE;
        for m in 1..=order {
            sm *= s;
            let mut v = p[m + j - 1];
            if j == 0 {
                v -= table.eisenstein(m);
            }
            out[m - 1] = sm * v * binomial(m + j - 1, j);
        }
        Ok(out)
    }

    /// `ᴺF₁(x)`, `ᴺF₂(x)` and `ᴺF^Π(x)`.
    pub fn f_coefficients(&self, x: &SurfacePoint) -> Result<FCoefficients> {
        let t = x.torus;
        let r = self.r_row(x, 0)?;
        let q = &r * &self.x_mat[t.index()];
        let s = self.sew.point().sqrt_eps();
        let own = ONE + s * (&q * &self.lambda_t[t.other().index()])[0];
        let sign = if self.weight.n % 2 == 0 { 1.0 } else { -1.0 };
        let other = s * q[0] * sign;
        let (f1, f2) = match t {
            Torus::One => (own, other),
            Torus::Two => (other, own),
        };
        let k = self.weight.k();
        let fp = r * &self.pi_mat[t.index()];
        let f_pi = (0..k.saturating_sub(1)).map(|m| fp[m]).collect();
        Ok(FCoefficients { f1, f2, f_pi })
    }

    /// `ᴺ𝒫_{i,1+j}(x,y) = (-1)^i/(i+j)! ∂_x^i ∂_y^j ᴺ𝒫₁(x,y)`.
    pub fn gen_weierstrass(&self, i: usize, j: usize, x: &SurfacePoint, y: &SurfacePoint) -> Result<Complex64> {
        let t = x.torus;
        let n = self.weight.n;
        let k = self.weight.k();
        let order = self.sew.order();
        let px = self.sew.p_values(x, (order + 1 + i).max(k + 1 + i))?;
        let q = self.r_from(&px, i) * &self.x_mat[t.index()];
        let col = self.p_column(y, j)?;
        let c = if i % 2 == 0 { 1.0 } else { -1.0 } / factorial(i + j);
        let cj = if j % 2 == 0 { 1.0 } else { -1.0 } * factorial(j);
        let other = t.other().index();
        if y.torus == t {
            let table = self.sew.table(t);
            let mut v = match table.p(1 + i + j, x.z - y.z) {
                Ok(v) => v,
                Err(Error::LatticePoint) => return Err(Error::CoincidentPoints),
                Err(e) => return Err(e),
            };
            if j == 0 {
                v -= px[i];
            }
            v -= (&q * &self.lambda_t[other] * &col)[0] * (c * cj);
            if j == 0 && n > 1 {
                v -= (&q * &self.lambda[other])[k - 1] * c;
            }
            Ok(v)
        } else {
            let s = if n % 2 == 1 { 1.0 } else { -1.0 };
            let mut v = (&q * &col)[0] * (c * cj);
            if j == 0 && n > 1 {
                let sk = self.sew.point().sqrt_eps().powi(k as i32);
                let direct = sk * px[k + i] * derivative_factor(k + 1, i);
                let dressed = (&q * &self.lambda_t[other] * &self.lambda[t.index()])[k - 1];
                v += (direct + dressed) * c;
            }
            Ok(v * s)
        }
    }

    /// `(Φ₁, Φ₂, Φ₃)(x)` with `Φ_a = ²F_a` and `Φ₃ = ε^{-1/2} ²F^Π(x;1)`.
    pub fn two_diff_basis(&self, x: &SurfacePoint) -> Result<[Complex64; 3]> {
        if self.weight.n != 2 {
            return Err(Error::InvalidArgument("the 2-differential basis needs weight N = 2".into()));
        }
        let f = self.f_coefficients(x)?;
        let p = self.sew.p_values(x, self.sew.order() + 1)?;
        let r = self.r_from(&p, 0);
        let phi3 = p[1] + (r * &self.phi3_col[x.torus.index()])[0];
        Ok([f.f1, f.f2, phi3])
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::SeriesConfig;
    use crate::sewing::ModuliPoint;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sew(eps: Complex64) -> SewingContext {
        let p = ModuliPoint::new(c(0.3, 1.0), c(0.0, 1.1), eps).unwrap();
        SewingContext::new(&p, 16, &SeriesConfig::default()).unwrap()
    }

    #[test]
    fn shift_matrices_shape() {
        let s = shift_matrices(ZhuWeight::new(2).unwrap(), 6).unwrap();
        assert_eq!(s.gamma[(0, 0)], ONE);
        assert_eq!(s.gamma.iter().filter(|v| **v == ONE).count(), 1);
        assert_eq!(s.delta[(2, 0)], ONE);
        assert_eq!(s.pi[(0, 0)], ONE);
        assert_eq!(s.pi.iter().filter(|v| **v == ONE).count(), 1);
        assert!(shift_matrices(ZhuWeight::new(2).unwrap(), 2).is_err());
        assert!(ZhuWeight::new(3).is_err());
        assert_eq!(ZhuWeight::experimental(3).unwrap().k(), 4);
    }

    #[test]
    fn lambda_is_conjugate_of_a() {
        let k = sew(c(0.1, 0.02));
        for t in Torus::BOTH {
            let m = k.order();
            let sd = CMatrix::from_fn(m, m, |r, cc| if r == cc { c(((r + 1) as f64).sqrt(), 0.0) } else { ZERO });
            let sinv = sd.clone().try_inverse().unwrap();
            let want = &sd * k.a_matrix(t) * sinv;
            assert!((lambda_matrix(&k, t) - &want).norm() < 1e-14 * want.norm());
        }
    }

    #[test]
    fn weight_one_reduces_to_sewing_forms() {
        let k = sew(c(0.12, 0.03));
        let z = ZhuContext::new(&k, ZhuWeight::new(1).unwrap()).unwrap();
        let pts = [
            SurfacePoint::new(Torus::One, c(0.8, 0.3)),
            SurfacePoint::new(Torus::Two, c(-0.5, 0.9)),
        ];
        for x in &pts {
            let f = z.f_coefficients(x).unwrap();
            assert!((f.f1 - k.nu(Torus::One, x).unwrap()).norm() < 1e-14);
            assert!((f.f2 - k.nu(Torus::Two, x).unwrap()).norm() < 1e-14);
            assert!(f.f_pi.is_empty());
            for y in [SurfacePoint::new(Torus::One, c(-0.6, -0.7)), SurfacePoint::new(Torus::Two, c(0.4, 1.2))] {
                let p = z.gen_weierstrass(0, 1, x, &y).unwrap();
                let w = k.omega(x, &y).unwrap();
                assert!((p - w).norm() < 1e-13 * w.norm().max(1.0));
            }
        }
    }

    #[test]
    fn y_derivative_definition() {
        let k = sew(c(0.1, 0.0));
        let z = ZhuContext::new(&k, ZhuWeight::new(2).unwrap()).unwrap();
        let x = SurfacePoint::new(Torus::One, c(0.8, 0.3));
        let h = 1e-4;
        for yt in Torus::BOTH {
            let y = SurfacePoint::new(yt, c(-0.6, 0.7));
            let f = |d: f64| z.gen_weierstrass(0, 0, &x, &SurfacePoint::new(yt, y.z + d)).unwrap();
            let fd = (f(h) - f(-h) - (f(2.0 * h) - f(-2.0 * h)) / 8.0) / (1.5 * h);
            let an = z.gen_weierstrass(0, 1, &x, &y).unwrap();
            assert!((fd - an).norm() < 1e-8 * an.norm().max(1.0), "{yt}");
            let g = |d: f64| z.gen_weierstrass(0, 0, &SurfacePoint::new(x.torus, x.z + d), &y).unwrap();
            let fd = (g(h) - g(-h) - (g(2.0 * h) - g(-2.0 * h)) / 8.0) / (1.5 * h);
            let an = -z.gen_weierstrass(1, 0, &x, &y).unwrap();
            assert!((fd - an).norm() < 1e-8 * an.norm().max(1.0), "{yt}");
        }
    }

    #[test]
    fn phi_at_zero_eps() {
        let k = sew(c(0.0, 0.0));
        let z = ZhuContext::new(&k, ZhuWeight::new(2).unwrap()).unwrap();
        let x = SurfacePoint::new(Torus::Two, c(0.8, 0.3));
        let phi = z.two_diff_basis(&x).unwrap();
        assert_eq!(phi[0], ZERO);
        assert_eq!(phi[1], ONE);
        assert!((phi[2] - k.table(Torus::Two).p(2, x.z).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn phi3_matches_division() {
        let k = sew(c(0.1, 0.05));
        let z = ZhuContext::new(&k, ZhuWeight::new(2).unwrap()).unwrap();
        for x in [SurfacePoint::new(Torus::One, c(0.8, 0.3)), SurfacePoint::new(Torus::Two, c(-0.3, 1.0))] {
            let f = z.f_coefficients(&x).unwrap();
            let phi = z.two_diff_basis(&x).unwrap();
            assert!((phi[2] * k.point().sqrt_eps() - f.f_pi[0]).norm() < 1e-14);
        }
    }
}
