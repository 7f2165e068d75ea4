//! Eisenstein series, the Dedekind eta function and the elliptic functions `P_k`
//! on the torus with lattice `2πi(Zτ ⊕ Z)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of the minimal lattice distance inside which the Laurent
/// expansion at the origin is used.
pub const LAURENT_RADIUS: f64 = 0.95;

/// Largest Laurent order (and Eisenstein index) kept in an [`EllipticTable`].
pub const MAX_ORDER: usize = 1600;

/// Largest `k` for which `P_k` can be requested.
pub const MAX_K: usize = 120;

const Q_SERIES_MAX: usize = 48;
const LATTICE_MIN: usize = 24;
const LATTICE_WINDOW: f64 = 6.0;
const UNSCALED_MAX: usize = 256;
const EXACT_BERNOULLI: usize = 64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Truncation controls for the q-series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub q_terms: usize,
    pub tail_tol: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig { q_terms: 128, tail_tol: 1e-14 }
    }
}

/// A point of the upper half plane together with `q = e^{2πiτ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusModulus {
    tau: Complex64,
    q: Complex64,
}

impl TorusModulus {
    pub fn new(tau: Complex64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(Error::Domain(format!("Im τ must be positive, got τ = {tau}")));
        }
        Ok(TorusModulus { tau, q: (2.0 * PI * I * tau).exp() })
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }
}

// B_0 .. B_30 with B_1 = -1/2.
const BERNOULLI_TABLE: [(&str, &str); 31] = [
    ("1", "1"),
    ("-1", "2"),
    ("1", "6"),
    ("0", "1"),
    ("-1", "30"),
    ("0", "1"),
    ("1", "42"),
    ("0", "1"),
    ("-1", "30"),
    ("0", "1"),
    ("5", "66"),
    ("0", "1"),
    ("-691", "2730"),
    ("0", "1"),
    ("7", "6"),
    ("0", "1"),
    ("-3617", "510"),
    ("0", "1"),
    ("43867", "798"),
    ("0", "1"),
    ("-174611", "330"),
    ("0", "1"),
    ("854513", "138"),
    ("0", "1"),
    ("-236364091", "2730"),
    ("0", "1"),
    ("8553103", "6"),
    ("0", "1"),
    ("-23749461029", "870"),
    ("0", "1"),
    ("8615841276005", "14322"),
];

fn rat(num: &str, den: &str) -> BigRational {
    BigRational::new(num.parse::<BigInt>().unwrap(), den.parse::<BigInt>().unwrap())
}

/// Bernoulli numbers `B_0..=B_n` by the Akiyama–Tanigawa algorithm, with `B_1 = -1/2`.
pub fn bernoulli_akiyama_tanigawa(n: usize) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(n + 1);
    let mut a: Vec<BigRational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        a.push(BigRational::new(BigInt::one(), BigInt::from(m as u64 + 1)));
        for j in (1..=m).rev() {
            let diff = &a[j - 1] - &a[j];
            a[j - 1] = diff * BigRational::from_integer(BigInt::from(j as u64));
        }
        out.push(a[0].clone());
    }
    if n >= 1 {
        out[1] = -out[1].clone();
    }
    out
}

fn bernoulli_cache() -> &'static Vec<BigRational> {
    static CACHE: OnceLock<Vec<BigRational>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let mut all = bernoulli_akiyama_tanigawa(EXACT_BERNOULLI);
        for (n, (num, den)) in BERNOULLI_TABLE.iter().enumerate() {
            all[n] = rat(num, den);
        }
        all
    })
}

/// Exact Bernoulli number `B_n` for `n <= 64` (`B_1 = -1/2`).
pub fn bernoulli(n: usize) -> Option<BigRational> {
    bernoulli_cache().get(n).cloned()
}

/// The hard-coded prefix `B_0..=B_30`.
pub fn bernoulli_reference(n: usize) -> Option<BigRational> {
    BERNOULLI_TABLE.get(n).map(|(a, b)| rat(a, b))
}

fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        let mut v = vec![0.0; 2 * MAX_ORDER + 2];
        for i in 1..v.len() {
            v[i] = v[i - 1] + (i as f64).ln();
        }
        v
    });
    if n < t.len() {
        t[n]
    } else {
        (1..=n).map(|i| (i as f64).ln()).sum()
    }
}

/// Binomial coefficient as a float, exact for small arguments.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(MAX_ORDER + MAX_K + 1);
        rows.push(vec![1.0]);
        for n in 1..=MAX_ORDER + MAX_K {
            let width = (n / 2).min(MAX_K + 8) + 1;
            let mut row = vec![1.0; width];
            for j in 1..width {
                row[j] = sym(&rows[n - 1], n - 1, j - 1) + sym(&rows[n - 1], n - 1, j);
            }
            rows.push(row);
        }
        rows
    });
    if n < t.len() && k < t[n].len() {
        t[n][k]
    } else {
        (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp()
    }
}

fn sym(row: &[f64], n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    row.get(k).copied().unwrap_or(0.0)
}

/// `-B_k / k!` as a float.
fn bernoulli_constant(k: usize) -> f64 {
    if k % 2 == 1 {
        return if k == 1 { 0.5 } else { 0.0 };
    }
    if k <= EXACT_BERNOULLI {
        let mut fact = BigInt::one();
        for i in 2..=k {
            fact *= BigInt::from(i as u64);
        }
        let b = bernoulli(k).unwrap();
        let v = -b / BigRational::from_integer(fact);
        v.to_f64().unwrap_or(0.0)
    } else {
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let zeta: f64 = (1..=6).map(|j| (j as f64).powi(-(k as i32))).sum();
        sign * 2.0 * zeta * (-(k as f64) * (2.0 * PI).ln()).exp()
    }
}

fn divisors(m: usize) -> Vec<usize> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= m {
        if m % d == 0 {
            small.push(d);
            if d * d != m {
                large.push(m / d);
            }
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// Divisor lists for `1..=n`, computed by trial division.
#[derive(Clone, Debug)]
struct DivisorTable {
    lists: Vec<Vec<usize>>,
}

impl DivisorTable {
    fn new(n: usize) -> Self {
        DivisorTable { lists: (0..=n).map(|m| if m == 0 { vec![] } else { divisors(m) }).collect() }
    }

    /// `σ_{p}(m) / p!` in log space.
    fn sigma_over_factorial(&self, p: usize, m: usize) -> f64 {
        let lf = ln_factorial(p);
        self.lists[m].iter().map(|&d| ((p as f64) * (d as f64).ln() - lf).exp()).sum()
    }
}

/// q-series part of `E_k` with a bound on the truncation tail. Returns `(series, tail)`.
fn eisenstein_q_part(k: usize, q: Complex64, divs: &DivisorTable, terms: usize, weight: usize) -> (Complex64, f64) {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut qm = Complex64::new(1.0, 0.0);
    for m in 1..=terms {
        qm *= q;
        if qm.norm() == 0.0 {
            break;
        }
        let s = divs.sigma_over_factorial(k - 1, m) * (m as f64).powi(weight as i32);
        sum += qm * s;
    }
    let aq = q.norm();
    let tail = if aq == 0.0 {
        0.0
    } else {
        let n0 = (terms + 1) as f64;
        let p = (k + weight) as f64;
        let ln_first = p * n0.ln() + n0 * aq.ln() - ln_factorial(k - 1);
        let ratio = ((n0 + 1.0) / n0).powf(p) * aq;
        if ratio >= 1.0 {
            f64::INFINITY
        } else {
            2.0 * ln_first.exp() / (1.0 - ratio)
        }
    };
    (sum * 2.0, tail)
}

/// `E_k(τ)` from its q-expansion, together with a bound on the neglected tail.
pub fn eisenstein_with_tail(k: usize, tau: &TorusModulus, cfg: &SeriesConfig) -> Result<(Complex64, f64)> {
    if k == 0 {
        return Err(Error::InvalidArgument("Eisenstein index must be positive".into()));
    }
    if k % 2 == 1 {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let divs = DivisorTable::new(cfg.q_terms);
    let (series, tail) = eisenstein_q_part(k, tau.q, &divs, cfg.q_terms, 0);
    Ok((Complex64::new(bernoulli_constant(k), 0.0) + series, tail))
}

/// `E_k(τ)`; zero for odd `k`.
pub fn eisenstein(k: usize, tau: &TorusModulus, cfg: &SeriesConfig) -> Result<Complex64> {
    let (v, tail) = eisenstein_with_tail(k, tau, cfg)?;
    if tail > cfg.tail_tol * v.norm().max(1.0) {
        return Err(Error::NonConvergence(format!("E_{k}: tail bound {tail:.3e} with {} q-terms", cfg.q_terms)));
    }
    Ok(v)
}

/// `q d/dq E_k(τ)`.
pub fn eisenstein_qderiv(k: usize, tau: &TorusModulus, cfg: &SeriesConfig) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::InvalidArgument("Eisenstein index must be positive".into()));
    }
    if k % 2 == 1 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let divs = DivisorTable::new(cfg.q_terms);
    let (series, tail) = eisenstein_q_part(k, tau.q, &divs, cfg.q_terms, 1);
    if tail > cfg.tail_tol * series.norm().max(1.0) {
        return Err(Error::NonConvergence(format!("q∂E_{k}: tail bound {tail:.3e}")));
    }
    Ok(series)
}

/// Dedekind eta `q^{1/24} ∏ (1 - q^n)`.
pub fn dedekind_eta(tau: &TorusModulus, cfg: &SeriesConfig) -> Result<Complex64> {
    let q = tau.q;
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qn = Complex64::new(1.0, 0.0);
    for _ in 1..=cfg.q_terms {
        qn *= q;
        prod *= Complex64::new(1.0, 0.0) - qn;
    }
    let tail = q.norm().powi(cfg.q_terms as i32 + 1) / (1.0 - q.norm());
    if tail > cfg.tail_tol {
        return Err(Error::NonConvergence(format!("eta product tail {tail:.3e}")));
    }
    Ok((2.0 * PI * I * tau.tau / 24.0).exp() * prod)
}

fn lattice_vectors(tau: Complex64, radius_units: f64) -> Vec<(i64, i64)> {
    let mmax = (radius_units / tau.im).floor() as i64;
    let mut out = Vec::new();
    for m in -mmax..=mmax {
        let centre = -(m as f64) * tau.re;
        let lo = (centre - radius_units).floor() as i64;
        let hi = (centre + radius_units).ceil() as i64;
        for k in lo..=hi {
            if m == 0 && k == 0 {
                continue;
            }
            let w = tau * m as f64 + k as f64;
            if w.norm() <= radius_units {
                out.push((m, k));
            }
        }
    }
    out
}

/// Minimal length of a non-zero vector of `2πi(Zτ ⊕ Z)`.
pub fn min_lattice_distance(tau: Complex64) -> f64 {
    let r0 = 1.0f64.min(tau.norm());
    lattice_vectors(tau, r0 * (1.0 + 1e-12))
        .into_iter()
        .map(|(m, k)| 2.0 * PI * (tau * m as f64 + k as f64).norm())
        .fold(2.0 * PI * r0, f64::min)
}

/// Precomputed data on one torus: Eisenstein values, eta and the lattice distance.
#[derive(Clone, Debug)]
pub struct EllipticTable {
    modulus: TorusModulus,
    cfg: SeriesConfig,
    distance: f64,
    scaled: Vec<Complex64>,
    unscaled: Vec<Complex64>,
    scaled_bound: f64,
    eta: Complex64,
}

impl EllipticTable {
    pub fn new(modulus: &TorusModulus, cfg: &SeriesConfig) -> Result<Self> {
        let tau = modulus.tau;
        let distance = min_lattice_distance(tau);
        let divs = DivisorTable::new(cfg.q_terms);
        let mut scaled = vec![Complex64::new(0.0, 0.0); MAX_ORDER + 1];
        let mut unscaled = vec![Complex64::new(0.0, 0.0); UNSCALED_MAX + 1];
        let ln_d = distance.ln();
        let mut need_lattice_from = Q_SERIES_MAX + 2;
        for n in (2..=Q_SERIES_MAX).step_by(2) {
            let (series, tail) = eisenstein_q_part(n, modulus.q, &divs, cfg.q_terms, 0);
            let value = Complex64::new(bernoulli_constant(n), 0.0) + series;
            if tail * (n as f64 * ln_d).exp() > cfg.tail_tol {
                if n < LATTICE_MIN {
                    return Err(Error::NonConvergence(format!(
                        "E_{n}: q-series tail {tail:.3e} with {} terms at τ = {tau}",
                        cfg.q_terms
                    )));
                }
                need_lattice_from = n;
                break;
            }
            unscaled[n] = value;
            scaled[n] = value * (n as f64 * ln_d).exp();
        }
        let window = 2.0 * PI;
        let vectors: Vec<Complex64> = lattice_vectors(tau, LATTICE_WINDOW * distance / window)
            .into_iter()
            .map(|(m, k)| 2.0 * PI * I * (tau * m as f64 + k as f64))
            .collect();
        let mut acc = vec![Complex64::new(0.0, 0.0); MAX_ORDER + 1];
        for lam in &vectors {
            let u = distance / lam;
            let u2 = u * u;
            let mut p = u * u;
            for n in (2..=MAX_ORDER).step_by(2) {
                if n >= need_lattice_from {
                    acc[n] += p;
                }
                p *= u2;
                if p.norm() < 1e-300 {
                    break;
                }
            }
        }
        for n in (need_lattice_from..=MAX_ORDER).step_by(2) {
            scaled[n] = acc[n];
            if n <= UNSCALED_MAX {
                unscaled[n] = acc[n] * (-(n as f64) * ln_d).exp();
            }
        }
        let scaled_bound = scaled.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let eta = dedekind_eta(modulus, cfg)?;
        Ok(EllipticTable { modulus: *modulus, cfg: *cfg, distance, scaled, unscaled, scaled_bound, eta })
    }

    pub fn modulus(&self) -> &TorusModulus {
        &self.modulus
    }

    pub fn tau(&self) -> Complex64 {
        self.modulus.tau
    }

    pub fn config(&self) -> &SeriesConfig {
        &self.cfg
    }

    /// Minimal lattice distance `D`.
    pub fn lattice_distance(&self) -> f64 {
        self.distance
    }

    pub fn eta(&self) -> Complex64 {
        self.eta
    }

    /// `E_n(τ)` for `n <= 256`; zero for odd `n`.
    pub fn eisenstein(&self, n: usize) -> Complex64 {
        if n == 0 || n % 2 == 1 {
            return Complex64::new(0.0, 0.0);
        }
        if n <= UNSCALED_MAX {
            self.unscaled[n]
        } else {
            self.scaled[n.min(MAX_ORDER)] * (-(n as f64) * self.distance.ln()).exp()
        }
    }

    /// `D^n E_n(τ)`.
    pub fn scaled_eisenstein(&self, n: usize) -> Complex64 {
        self.scaled.get(n).copied().unwrap_or_default()
    }

    /// Reduce `z` modulo the lattice. Returns `(z', m)` with `z = z' + 2πi(mτ + k)`.
    pub fn reduce(&self, z: Complex64) -> (Complex64, i64) {
        let tau = self.modulus.tau;
        let w = z / (2.0 * PI * I);
        let a = w.im / tau.im;
        let b = w.re - a * tau.re;
        let (m0, k0) = (a.round() as i64, b.round() as i64);
        let mut best = (z, m0, f64::INFINITY);
        for dm in -1..=1 {
            for dk in -1..=1 {
                let (m, k) = (m0 + dm, k0 + dk);
                let zr = z - 2.0 * PI * I * (tau * m as f64 + k as f64);
                if zr.norm() < best.2 - 1e-15 {
                    best = (zr, m, zr.norm());
                }
            }
        }
        (best.0, best.1)
    }

    /// `P_1(z), ..., P_kmax(z)` by the Laurent expansion at the origin, with
    /// `z` first reduced modulo the lattice.
    pub fn p_values(&self, z: Complex64, kmax: usize) -> Result<Vec<Complex64>> {
        let (zr, m) = self.reduce(z);
        let mut out = self.p_values_strict(zr, kmax)?;
        if let Some(p1) = out.first_mut() {
            *p1 -= m as f64;
        }
        Ok(out)
    }

    /// `P_k(z)` with lattice reduction.
    pub fn p(&self, k: usize, z: Complex64) -> Result<Complex64> {
        Ok(self.p_values(z, k)?[k - 1])
    }

    /// Laurent expansion without reduction; requires `|z| < 0.95 D`.
    pub fn p_values_strict(&self, z: Complex64, kmax: usize) -> Result<Vec<Complex64>> {
        if kmax == 0 {
            return Ok(Vec::new());
        }
        if kmax > MAX_K {
            return Err(Error::InvalidArgument(format!("P_k requested for k = {kmax} > {MAX_K}")));
        }
        let d = self.distance;
        let az = z.norm();
        if !(az < LAURENT_RADIUS * d) {
            return Err(Error::Domain(format!(
                "|z| = {az:.6e} outside the Laurent disc of radius {:.6e}",
                LAURENT_RADIUS * d
            )));
        }
        if az <= 1e-14 * d {
            return Err(Error::LatticePoint);
        }
        let w = z / d;
        let aw = w.norm();
        let nmax = self.laurent_order(aw, kmax)?;
        let mut wpow = Vec::with_capacity(nmax + 1);
        let mut cur = Complex64::new(1.0, 0.0);
        for _ in 0..=nmax {
            wpow.push(cur);
            cur *= w;
        }
        let zinv = Complex64::new(1.0, 0.0) / z;
        let mut zpow = zinv;
        let mut out = Vec::with_capacity(kmax);
        let mut dpow = 1.0 / d;
        for k in 1..=kmax {
            let mut sum = Complex64::new(0.0, 0.0);
            let start = k.max(2) + (k.max(2) % 2);
            let mut n = start;
            while n <= nmax {
                sum += self.scaled[n] * wpow[n - k] * binomial(n - 1, k - 1);
                n += 2;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            out.push(zpow + sum * (sign * dpow));
            zpow *= zinv;
            dpow /= d;
        }
        Ok(out)
    }

    fn laurent_order(&self, aw: f64, kmax: usize) -> Result<usize> {
        if aw == 0.0 {
            return Ok(2 * kmax + 2);
        }
        let target = (1e-18f64).ln() - self.scaled_bound.ln();
        let lw = aw.ln();
        let k = kmax;
        let mut n = (2 * k).max(8);
        while n <= MAX_ORDER {
            let g = ln_factorial(n - 1) - ln_factorial(k - 1) - ln_factorial(n - k) + (n - k) as f64 * lw;
            let ratio = (n as f64) / ((n + 1 - k) as f64) * aw;
            if g < target && ratio < 1.0 {
                return Ok(n + 2);
            }
            n += 2;
        }
        Err(Error::NonConvergence(format!("Laurent series for P_{kmax} at |z|/D = {aw:.4}")))
    }
}

/// `P_k(z, τ)` from the Laurent expansion; `|z|` must be below `0.95 D`.
pub fn weierstrass_p(k: usize, z: Complex64, tau: &TorusModulus, cfg: &SeriesConfig) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::InvalidArgument("P_k needs k >= 1".into()));
    }
    let table = EllipticTable::new(tau, cfg)?;
    Ok(table.p_values_strict(z, k)?[k - 1])
}

/// Sign and falling-factorial factor in `∂^i P_k = (-1)^i (k)_i P_{k+i}`.
pub fn derivative_factor(k: usize, i: usize) -> f64 {
    let mut f = 1.0;
    for j in 0..i {
        f *= (k + j) as f64;
    }
    if i % 2 == 1 {
        -f
    } else {
        f
    }
}

impl Default for TorusModulus {
    fn default() -> Self {
        TorusModulus::new(I).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    fn table(tau: Complex64) -> EllipticTable {
        EllipticTable::new(&TorusModulus::new(tau).unwrap(), &SeriesConfig::default()).unwrap()
    }

    #[test]
    fn bernoulli_prefix_matches_akiyama_tanigawa() {
        let at = bernoulli_akiyama_tanigawa(64);
        for n in 0..=30 {
            assert_eq!(at[n], bernoulli_reference(n).unwrap(), "B_{n}");
        }
        assert_eq!(bernoulli(64).unwrap(), at[64]);
    }

    #[test]
    fn eisenstein_closed_forms_at_i() {
        let t = TorusModulus::new(I).unwrap();
        let cfg = SeriesConfig::default();
        assert!(close(eisenstein(2, &t, &cfg).unwrap(), c(-1.0 / (4.0 * PI), 0.0), 1e-14));
        assert!(close(eisenstein(4, &t, &cfg).unwrap(), c(0.0020218929059287629479, 0.0), 1e-14));
        assert!(eisenstein(6, &t, &cfg).unwrap().norm() < 1e-17);
        assert_eq!(eisenstein(3, &t, &cfg).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn eisenstein_frozen_values() {
        let cfg = SeriesConfig::default();
        let cases = [
            (c(0.0, 1.2), 2, c(-0.082268653182333932474, 0.0)),
            (c(0.0, 1.2), 6, c(-0.000024054604641683621397, 0.0)),
            (c(0.0, 1.2), 10, c(-1.7132364607108107252e-8, 0.0)),
            (c(0.3, 1.0), 2, c(-0.084504362127402770338, 0.0035397578458869005139)),
            (c(0.3, 1.0), 4, c(0.0011881170157360604132, 0.00058582965542530653505)),
            (c(0.3, 1.0), 6, c(-0.00004421687677197724136, 0.000028457968651822322509)),
            (c(0.3, 1.0), 10, c(-3.1457429838587261181e-8, 3.5944723205467403041e-9)),
        ];
        for (tau, k, want) in cases {
            let got = eisenstein(k, &TorusModulus::new(tau).unwrap(), &cfg).unwrap();
            assert!(close(got, want, 1e-13), "E_{k}({tau}) = {got}, want {want}");
            let tab = table(tau).eisenstein(k);
            assert!(close(tab, want, 1e-13));
        }
    }

    #[test]
    fn e2_tends_to_constant() {
        let t = TorusModulus::new(c(0.0, 40.0)).unwrap();
        let v = eisenstein(2, &t, &SeriesConfig::default()).unwrap();
        assert!((v - c(-1.0 / 12.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn e4_weight_four() {
        let cfg = SeriesConfig::default();
        let tau = c(0.3, 1.1);
        let a = eisenstein(4, &TorusModulus::new(tau).unwrap(), &cfg).unwrap();
        let b = eisenstein(4, &TorusModulus::new(-1.0 / tau).unwrap(), &cfg).unwrap();
        assert!(close(b, tau.powi(4) * a, 1e-12));
    }

    #[test]
    fn eta_values() {
        let cfg = SeriesConfig::default();
        let e = dedekind_eta(&TorusModulus::new(I).unwrap(), &cfg).unwrap();
        assert!(close(e, c(0.768225422326056659, 0.0), 1e-15));
        let tau = c(0.3, 1.0);
        let a = dedekind_eta(&TorusModulus::new(tau).unwrap(), &cfg).unwrap();
        assert!(close(a, c(0.76784486510917055674, 0.059061097782503782473), 1e-14));
        let b = dedekind_eta(&TorusModulus::new(tau + 1.0).unwrap(), &cfg).unwrap();
        assert!(close(b, (I * PI / 12.0).exp() * a, 1e-14));
    }

    #[test]
    fn lattice_distance() {
        assert!((min_lattice_distance(I) - 2.0 * PI).abs() < 1e-12);
        assert!((min_lattice_distance(c(0.5, 0.5)) - PI * 2f64.sqrt()).abs() < 1e-12);
        assert!((min_lattice_distance(c(0.3, 1.0)) - 2.0 * PI).abs() < 1e-12);
        assert!((min_lattice_distance(c(0.0, 0.5)) - PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(matches!(TorusModulus::new(c(0.1, -1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn laurent_frozen_values() {
        let t = table(c(0.3, 1.0));
        let z = c(0.7, 0.4);
        let p = t.p_values(z, 5).unwrap();
        assert!(close(p[1], c(0.69674455539703042407, -1.3194399442882324381), 1e-14));
        assert!(close(p[2], c(0.023854250337266252524, -1.9104808632675032082), 1e-14));
        assert!(close(p[4], c(-2.5088912961642304654, -1.5241197953847107673), 1e-14));
        let z = c(-2.1, 0.9);
        let p = t.p_values(z, 5).unwrap();
        assert!(close(p[1], c(0.071504591230705340672, 0.14016100993326563645), 1e-13));
        assert!(close(p[2], c(-0.018026626131415074932, -0.072773576314733814677), 1e-13));
        assert!(close(p[4], c(0.0071301020396553556358, -0.01381614970597301672), 1e-13));
        let p2 = table(I).p(2, z).unwrap();
        assert!(close(p2, c(0.073030053921935381337, 0.11469099445781938206), 1e-13));
    }

    #[test]
    fn p1_residue_and_parity() {
        let t = table(I);
        let z = c(1e-4, 2e-4);
        assert!((t.p(1, z).unwrap() * z - 1.0).norm() < 1e-8);
        let w = c(0.8, -1.3);
        for k in 1..=8 {
            let a = t.p(k, w).unwrap();
            let b = t.p(k, -w).unwrap();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!(close(b, a * sign, 1e-13), "P_{k} parity");
        }
    }

    #[test]
    fn derivative_recurrence() {
        let t = table(c(0.3, 1.0));
        let z = c(0.9, 0.5);
        let h = 1e-5;
        for k in 1..=6 {
            let d = (t.p(k, z + h).unwrap() - t.p(k, z - h).unwrap()) / (2.0 * h);
            let want = -(k as f64) * t.p(k + 1, z).unwrap();
            assert!(close(d, want, 1e-8), "k = {k}");
        }
    }

    #[test]
    fn periodicity() {
        let tau = c(0.3, 1.0);
        let t = table(tau);
        let z = c(0.9, 0.5);
        let w1 = 2.0 * PI * I;
        let wt = 2.0 * PI * I * tau;
        let p1 = t.p(1, z).unwrap();
        assert!((t.p(1, z + w1).unwrap() - p1).norm() < 1e-13);
        assert!((t.p(1, z + wt).unwrap() - (p1 - 1.0)).norm() < 1e-13);
        assert!((t.p(1, z - 2.0 * wt + 3.0 * w1).unwrap() - (p1 + 2.0)).norm() < 1e-12);
        for k in 2..=6 {
            let a = t.p(k, z).unwrap();
            assert!(close(t.p(k, z + wt - w1).unwrap(), a, 1e-12));
        }
    }

    #[test]
    fn strict_rejects_outside_disc() {
        let m = TorusModulus::new(I).unwrap();
        let cfg = SeriesConfig::default();
        assert!(matches!(weierstrass_p(2, c(6.0, 0.0), &m, &cfg), Err(Error::Domain(_))));
        assert!(matches!(weierstrass_p(2, c(0.0, 0.0), &m, &cfg), Err(Error::LatticePoint)));
        assert!(weierstrass_p(2, c(1.0, 0.5), &m, &cfg).is_ok());
    }

    #[test]
    fn lattice_sums_match_q_series() {
        for tau in [I, c(0.3, 1.0), c(0.0, 1.2)] {
            let t = table(tau);
            let d = t.lattice_distance();
            let cfg = SeriesConfig { q_terms: 600, tail_tol: 1e-14 };
            for n in [50usize, 56, 64] {
                let q = eisenstein(n, &TorusModulus::new(tau).unwrap(), &cfg).unwrap() * d.powi(n as i32);
                let l = t.scaled_eisenstein(n);
                assert!((q - l).norm() < 1e-12 * l.norm().max(1.0), "n = {n}, tau = {tau}");
            }
        }
    }

    #[test]
    fn eisenstein_qderiv_matches_difference() {
        let cfg = SeriesConfig::default();
        let tau = c(0.3, 1.0);
        let h = 1e-5;
        for k in [2usize, 4, 6] {
            let f = |t: Complex64| eisenstein(k, &TorusModulus::new(t).unwrap(), &cfg).unwrap();
            let d = (f(tau + h) - f(tau - h)) / (2.0 * h) / (2.0 * PI * I);
            let a = eisenstein_qderiv(k, &TorusModulus::new(tau).unwrap(), &cfg).unwrap();
            assert!((a - d).norm() < 1e-9 * a.norm().max(1e-6));
        }
    }
}
