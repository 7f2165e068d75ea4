//! Brute-force rank-one Heisenberg Fock model in square-bracket modes: states,
//! mode action, the ε-dependent invariant form, genus-one trace functions and
//! truncated genus-two sums.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{moduli_derivative, Direction, FdConfig};
use crate::elliptic::{binomial, eisenstein_qderiv, EllipticTable, SeriesConfig};
use crate::error::{Error, Result};
use crate::report::ResidualReport;
use crate::sewing::{ModuliPoint, SewingContext, SurfacePoint, Torus, ONE, ZERO};
use crate::zhu::{ZhuContext, ZhuWeight};

/// Largest level accepted anywhere in the oracle.
pub const MAX_LEVEL: usize = 12;

/// Parts `k₁ ≥ k₂ ≥ … ≥ 1` labelling `h[-k₁]…h[-k_n]𝟙`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Partition(Vec<usize>);

impl Partition {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::InvalidArgument("partition parts must be positive".into()));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Partition(parts))
    }

    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn weight(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn multiplicity(&self, k: usize) -> usize {
        self.0.iter().filter(|&&p| p == k).count()
    }

    fn with_part(&self, k: usize) -> Self {
        let mut v = self.0.clone();
        let at = v.iter().position(|&p| p < k).unwrap_or(v.len());
        v.insert(at, k);
        Partition(v)
    }

    fn without_part(&self, k: usize) -> Self {
        let mut v = self.0.clone();
        if let Some(at) = v.iter().position(|&p| p == k) {
            v.remove(at);
        }
        Partition(v)
    }
}

/// All partitions of `n`, largest parts first.
pub fn partitions(n: usize) -> Vec<Partition> {
    fn go(rem: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rem == 0 {
            out.push(Partition(prefix.clone()));
            return;
        }
        for k in (1..=rem.min(max)).rev() {
            prefix.push(k);
            go(rem - k, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// `p(0), …, p(n)`.
pub fn partition_counts(n: usize) -> Vec<u64> {
    let mut p = vec![0u64; n + 1];
    p[0] = 1;
    for k in 1..=n {
        for m in k..=n {
            p[m] += p[m - k];
        }
    }
    p
}

/// Finite combination of Fock monomials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FockState {
    terms: BTreeMap<Partition, Complex64>,
}

impl FockState {
    pub fn vacuum() -> Self {
        FockState::from_partition(Partition::empty())
    }

    pub fn from_partition(p: Partition) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(p, ONE);
        FockState { terms }
    }

    pub fn monomial(parts: &[usize]) -> Result<Self> {
        Ok(FockState::from_partition(Partition::new(parts.to_vec())?))
    }

    pub fn add_term(&mut self, p: Partition, c: Complex64) {
        let entry = self.terms.entry(p).or_insert(ZERO);
        *entry += c;
        if *entry == ZERO {
            self.terms.retain(|_, v| *v != ZERO);
        }
    }

    pub fn add_scaled(&mut self, other: &FockState, c: Complex64) {
        for (p, v) in &other.terms {
            self.add_term(p.clone(), v * c);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Partition, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, p: &Partition) -> Complex64 {
        self.terms.get(p).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_level(&self) -> usize {
        self.terms.keys().map(Partition::weight).max().unwrap_or(0)
    }
}

/// `h[m]` acting on a state; `m < 0` creates, `m > 0` contracts, `h[0] = 0`.
pub fn apply_mode(m: i64, s: &FockState, cap: usize) -> Result<FockState> {
    let mut out = FockState::default();
    if m == 0 {
        return Ok(out);
    }
    let k = m.unsigned_abs() as usize;
    for (p, c) in s.terms() {
        if m < 0 {
            if p.weight() + k > cap {
                return Err(Error::InvalidArgument(format!("level cap {cap} exceeded")));
            }
            out.add_term(p.with_part(k), *c);
        } else {
            let r = p.multiplicity(k);
            if r > 0 {
                out.add_term(p.without_part(k), c * (k * r) as f64);
            }
        }
    }
    Ok(out)
}

/// Invariant bilinear form with `h[n]† = -εⁿ h[-n]` and `⟨𝟙, 𝟙⟩ = 1`, computed by moving modes.
pub fn inner_product(a: &FockState, b: &FockState, eps: Complex64) -> Result<Complex64> {
    if eps == ZERO {
        return Err(Error::Domain("the form is singular at ε = 0".into()));
    }
    fn go(parts: &[usize], b: &FockState, eps: Complex64) -> Result<Complex64> {
        let Some((&k, rest)) = parts.split_first() else {
            return Ok(b.coefficient(&Partition::empty()));
        };
        let moved = apply_mode(k as i64, b, MAX_LEVEL)?;
        if moved.is_zero() {
            return Ok(ZERO);
        }
        Ok(-eps.powi(-(k as i32)) * go(rest, &moved, eps)?)
    }
    let mut acc = ZERO;
    for (p, c) in a.terms() {
        acc += c * go(p.parts(), b, eps)?;
    }
    Ok(acc)
}

/// Gram matrix of one level and its inverse.
#[derive(Clone, Debug)]
pub struct GramBlock {
    pub level: usize,
    pub basis: Vec<FockState>,
    pub matrix: DMatrix<Complex64>,
    pub dual: DMatrix<Complex64>,
}

pub fn gram_for_basis(level: usize, basis: Vec<FockState>, eps: Complex64) -> Result<GramBlock> {
    let n = basis.len();
    let mut matrix = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            matrix[(i, j)] = inner_product(&basis[i], &basis[j], eps)?;
        }
    }
    let dual = matrix.clone().try_inverse().ok_or_else(|| Error::Singular(format!("Gram block at level {level}")))?;
    Ok(GramBlock { level, basis, matrix, dual })
}

pub fn gram_block(level: usize, eps: Complex64) -> Result<GramBlock> {
    if level > MAX_LEVEL {
        return Err(Error::InvalidArgument(format!("level {level} above {MAX_LEVEL}")));
    }
    let basis = partitions(level).into_iter().map(FockState::from_partition).collect();
    gram_for_basis(level, basis, eps)
}

/// `C(k, l) = (-1)^{k+1} (k+l-1)!/((k-1)!(l-1)!) E_{k+l}`.
pub fn matching_constant(k: usize, l: usize, table: &EllipticTable) -> Complex64 {
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    table.eisenstein(k + l) * (sign * (k + l - 1) as f64 * binomial(k + l - 2, k - 1))
}

fn matching_sum(parts: &[usize], c: &dyn Fn(usize, usize) -> (Complex64, Complex64)) -> (Complex64, Complex64) {
    let Some((&first, rest)) = parts.split_first() else {
        return (ONE, ZERO);
    };
    if parts.len() % 2 == 1 {
        return (ZERO, ZERO);
    }
    let mut val = ZERO;
    let mut der = ZERO;
    for k in 0..rest.len() {
        let mut remaining = rest.to_vec();
        let partner = remaining.remove(k);
        let (cv, cd) = c(first, partner);
        if cv == ZERO && cd == ZERO {
            continue;
        }
        let (sv, sd) = matching_sum(&remaining, c);
        val += cv * sv;
        der += cd * sv + cv * sd;
    }
    (val, der)
}

/// Genus-one 1-point function on the vacuum module from pair matchings.
pub fn genus1_one_point(s: &FockState, table: &EllipticTable) -> Complex64 {
    let c = |k: usize, l: usize| (matching_constant(k, l, table), ZERO);
    let mut acc = ZERO;
    for (p, coef) in s.terms() {
        acc += coef * matching_sum(p.parts(), &c).0;
    }
    acc / table.eta()
}

/// `q∂_q` of [`genus1_one_point`], using `q∂_q(1/η) = ½E₂/η`.
pub fn genus1_one_point_qderiv(s: &FockState, table: &EllipticTable) -> Result<Complex64> {
    let mut de = vec![ZERO; 2 * s.max_level() + 3];
    for (n, v) in de.iter_mut().enumerate().skip(2) {
        *v = eisenstein_qderiv(n, table.modulus(), table.config())?;
    }
    let c = |k: usize, l: usize| {
        let f = matching_constant(k, l, table) / table.eisenstein(k + l);
        if table.eisenstein(k + l) == ZERO {
            return (ZERO, ZERO);
        }
        (matching_constant(k, l, table), f * de[k + l])
    };
    let (mut val, mut der) = (ZERO, ZERO);
    for (p, coef) in s.terms() {
        let (v, d) = matching_sum(p.parts(), &c);
        val += coef * v;
        der += coef * d;
    }
    let eta = table.eta();
    Ok((der + val * table.eisenstein(2) * 0.5) / eta)
}

/// Genus-one 1-point function by recursively removing `h[-s]` via
/// `Z(h[-s]w) = Σ_{j≥1} (-1)^{j+1} C(s+j-1, j) E_{s+j} Z(h[j]w)`.
pub fn genus1_one_point_zhu(s: &FockState, table: &EllipticTable) -> Result<Complex64> {
    fn go(p: &Partition, table: &EllipticTable) -> Complex64 {
        let Some((&s, _)) = p.parts().split_first() else {
            return ONE;
        };
        let w = p.without_part(s);
        let mut acc = ZERO;
        let mut seen = Vec::new();
        for &j in w.parts() {
            if seen.contains(&j) {
                continue;
            }
            seen.push(j);
            let e = table.eisenstein(s + j);
            if e == ZERO {
                continue;
            }
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            let mult = (j * w.multiplicity(j)) as f64;
            acc += e * (sign * binomial(s + j - 1, j) * mult) * go(&w.without_part(j), table);
        }
        acc
    }
    let mut acc = ZERO;
    for (p, c) in s.terms() {
        acc += c * go(p, table);
    }
    Ok(acc / table.eta())
}

/// Fields inserted in trace functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    H,
    /// `ω̃ = ½h[-1]²𝟙`.
    OmegaTilde,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Insertion {
    pub field: Field,
    pub z: Complex64,
}

impl Insertion {
    pub fn h(z: Complex64) -> Self {
        Insertion { field: Field::H, z }
    }

    pub fn omega_tilde(z: Complex64) -> Self {
        Insertion { field: Field::OmegaTilde, z }
    }
}

/// `Z⁽¹⁾(Y[v₁,z₁]…Y[v_n,z_n]s; τ)` by genus-one Zhu recursion, with `ω̃`
/// handled as the regularized coincidence of two `h` insertions.
pub fn genus1_npoint(ins: &[Insertion], s: &FockState, table: &EllipticTable) -> Result<Complex64> {
    let omegas = ins.iter().filter(|i| i.field == Field::OmegaTilde).count();
    if omegas > 1 {
        return Err(Error::InvalidArgument("at most one ω̃ insertion".into()));
    }
    for (a, p) in ins.iter().enumerate() {
        for q in &ins[a + 1..] {
            if table.reduce(p.z - q.z).0.norm() < 1e-12 {
                return Err(Error::CoincidentPoints);
            }
        }
        if table.reduce(p.z).0.norm() < 1e-12 {
            return Err(Error::CoincidentPoints);
        }
    }
    let mut hs: Vec<Complex64> = ins.iter().filter(|i| i.field == Field::H).map(|i| i.z).collect();
    let mut acc = ZERO;
    for (p, c) in s.terms() {
        let state = FockState::from_partition(p.clone());
        acc += c * match ins.iter().find(|i| i.field == Field::OmegaTilde) {
            None => h_recursion(&mut hs, &state, table)?,
            Some(om) => omega_tilde_recursion(om.z, &hs, &state, table)?,
        };
    }
    Ok(acc)
}

fn h_recursion(hs: &mut Vec<Complex64>, s: &FockState, table: &EllipticTable) -> Result<Complex64> {
    let Some(x) = hs.pop() else {
        return Ok(genus1_one_point(s, table));
    };
    let mut acc = ZERO;
    for k in 0..hs.len() {
        let zk = hs.remove(k);
        acc += table.p(2, x - zk)? * h_recursion(hs, s, table)?;
        hs.insert(k, zk);
    }
    acc += state_contractions(x, hs, s, table)?;
    hs.push(x);
    Ok(acc)
}

/// `Σ_{m≥1} P_{1+m}(x) Z(…; h[m]s)`.
fn state_contractions(x: Complex64, hs: &mut Vec<Complex64>, s: &FockState, table: &EllipticTable) -> Result<Complex64> {
    let top = s.max_level();
    if top == 0 {
        return Ok(ZERO);
    }
    let p = table.p_values(x, top + 1)?;
    let mut acc = ZERO;
    for m in 1..=top {
        let next = apply_mode(m as i64, s, MAX_LEVEL)?;
        if !next.is_zero() {
            acc += p[m] * h_recursion(hs, &next, table)?;
        }
    }
    Ok(acc)
}

/// `½[E₂ Z(hs; s) + Σ_k P₂(x - z_k) Z(h@x, hs∖k; s) + Σ_m P_{1+m}(x) Z(h@x, hs; h[m]s)]`.
fn omega_tilde_recursion(x: Complex64, hs: &[Complex64], s: &FockState, table: &EllipticTable) -> Result<Complex64> {
    let mut rest = hs.to_vec();
    let mut acc = table.eisenstein(2) * h_recursion(&mut rest, s, table)?;
    for k in 0..rest.len() {
        let zk = rest.remove(k);
        let mut with_x = rest.clone();
        with_x.push(x);
        acc += table.p(2, x - zk)? * h_recursion(&mut with_x, s, table)?;
        rest.insert(k, zk);
    }
    let top = s.max_level();
    if top > 0 {
        let p = table.p_values(x, top + 1)?;
        for m in 1..=top {
            let next = apply_mode(m as i64, s, MAX_LEVEL)?;
            if !next.is_zero() {
                let mut with_x = rest.clone();
                with_x.push(x);
                acc += p[m] * h_recursion(&mut with_x, &next, table)?;
            }
        }
    }
    Ok(acc * 0.5)
}

fn tables(p: &ModuliPoint, series: &SeriesConfig) -> Result<[EllipticTable; 2]> {
    Ok([EllipticTable::new(p.modulus(Torus::One), series)?, EllipticTable::new(p.modulus(Torus::Two), series)?])
}

/// Level-`n` term `Σ_u Z⁽¹⁾(left; u; τ₁) Z⁽¹⁾(right; ū; τ₂)` for a chosen level basis.
pub fn level_term(
    left: &[Insertion],
    right: &[Insertion],
    basis: Vec<FockState>,
    level: usize,
    eps: Complex64,
    tables: &[EllipticTable; 2],
) -> Result<Complex64> {
    let gram = gram_for_basis(level, basis, eps)?;
    let n = gram.basis.len();
    let mut l = DVector::zeros(n);
    let mut r = DVector::zeros(n);
    for (i, u) in gram.basis.iter().enumerate() {
        l[i] = genus1_npoint(left, u, &tables[0])?;
        r[i] = genus1_npoint(right, u, &tables[1])?;
    }
    Ok((l.transpose() * &gram.dual * r)[(0, 0)])
}

/// Per-level contributions to the truncated genus-two sum.
pub fn genus2_levels(
    left: &[Insertion],
    right: &[Insertion],
    cap: usize,
    p: &ModuliPoint,
    series: &SeriesConfig,
) -> Result<Vec<Complex64>> {
    if cap > 8 {
        return Err(Error::InvalidArgument("level cap above 8".into()));
    }
    let tabs = tables(p, series)?;
    let mut out = Vec::with_capacity(cap + 1);
    for level in 0..=cap {
        if level > 0 && p.eps() == ZERO {
            out.push(ZERO);
            continue;
        }
        let basis = partitions(level).into_iter().map(FockState::from_partition).collect();
        out.push(level_term(left, right, basis, level, p.eps(), &tabs)?);
    }
    Ok(out)
}

/// Truncated genus-two correlation function with `left` on torus 1 and `right` on torus 2.
pub fn genus2_brute(
    left: &[Insertion],
    right: &[Insertion],
    cap: usize,
    p: &ModuliPoint,
    series: &SeriesConfig,
) -> Result<Complex64> {
    Ok(genus2_levels(left, right, cap, p, series)?.into_iter().sum())
}

/// Coefficients `c₀ … c_d` of a degree-`d` polynomial in ε from samples.
pub fn polynomial_coefficients<F>(f: F, eps: &[Complex64]) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let n = eps.len();
    let vander = DMatrix::from_fn(n, n, |i, j| eps[i].powi(j as i32));
    let mut rhs = DVector::zeros(n);
    for (i, e) in eps.iter().enumerate() {
        rhs[i] = f(*e)?;
    }
    let sol = vander.lu().solve(&rhs).ok_or_else(|| Error::Singular("Vandermonde system".into()))?;
    Ok(sol.iter().copied().collect())
}

/// Taylor coefficients `c₀ … c_d` at ε = 0 by the trapezoid rule on `|ε| = radius`.
pub fn taylor_coefficients<F>(f: F, degree: usize, radius: f64, nodes: usize) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut out = vec![ZERO; degree + 1];
    for j in 0..nodes {
        let w = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / nodes as f64);
        let v = f(w * radius)?;
        for (k, c) in out.iter_mut().enumerate() {
            *c += v * w.powi(-(k as i32));
        }
    }
    for (k, c) in out.iter_mut().enumerate() {
        *c /= nodes as f64 * radius.powi(k as i32);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub level_cap: usize,
    pub eps: f64,
    pub order: usize,
    pub series: SeriesConfig,
    pub fd: FdConfig,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            level_cap: 6,
            eps: 0.1,
            order: crate::sewing::DEFAULT_ORDER,
            series: SeriesConfig::default(),
            fd: FdConfig::default(),
        }
    }
}

impl OracleConfig {
    /// Level cap `L` with ε = 0.1 for `L ≥ 6` and `ε = 0.1^{8/(L+1)}` below,
    /// so that the neglected `ε^{L+1}` tail stays small.
    pub fn for_level_cap(level_cap: usize) -> Result<Self> {
        if !(3..=8).contains(&level_cap) {
            return Err(Error::InvalidArgument(format!("oracle level cap must lie in 3..=8, got {level_cap}")));
        }
        let eps = if level_cap >= 6 { 0.1 } else { 0.1f64.powf(8.0 / (level_cap + 1) as f64) };
        Ok(OracleConfig { level_cap, eps, ..OracleConfig::default() })
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Degree of the ε-coefficient comparison: the level cap, at most 4.
pub fn coefficient_degree(cfg: &OracleConfig) -> usize {
    cfg.level_cap.min(4)
}

/// ε-coefficients of the brute-force partition function, fitted through
/// samples `ε_j = 0.05·2^j`, next to the Taylor coefficients of
/// `1/(η₁η₂ det^{1/2})` from a circle of radius 1/2.
pub fn partition_coefficient_table(
    tau1: Complex64,
    tau2: Complex64,
    cfg: &OracleConfig,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let cap = coefficient_degree(cfg);
    let samples: Vec<Complex64> = (0..=cap).map(|j| c(0.05 * 2f64.powi(j as i32), 0.0)).collect();
    let brute = polynomial_coefficients(
        |e| genus2_brute(&[], &[], cap, &ModuliPoint::new(tau1, tau2, e)?, &cfg.series),
        &samples,
    )?;
    let closed = taylor_coefficients(
        |e| Ok(SewingContext::new(&ModuliPoint::new(tau1, tau2, e)?, cfg.order, &cfg.series)?.z_m()),
        cap,
        0.5,
        32,
    )?;
    Ok((brute, closed))
}

/// Coefficient-wise comparison, normwise against the largest closed-form coefficient.
pub fn check_partition_coefficients(tau1: Complex64, tau2: Complex64, cfg: &OracleConfig) -> ResidualReport {
    let mut rep = ResidualReport::new("fock_partition", 1e-9);
    match partition_coefficient_table(tau1, tau2, cfg) {
        Ok((brute, closed)) => {
            let scale = closed.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for k in 0..brute.len() {
                rep.record(format!("tau=({tau1},{tau2}) ε^{k}"), (brute[k] - closed[k]).norm(), scale);
            }
        }
        Err(e) => rep.error("fock_partition", e),
    }
    rep
}

/// `h` on torus 1 against `h` on torus 2 versus `ω(x,y) Z_M`.
pub fn check_two_point(p: &ModuliPoint, x: Complex64, y: Complex64, cfg: &OracleConfig) -> ResidualReport {
    let mut rep = ResidualReport::new("fock_two_point", 1e-6);
    let run = |rep: &mut ResidualReport| -> Result<()> {
        let brute = genus2_brute(&[Insertion::h(x)], &[Insertion::h(y)], cfg.level_cap, p, &cfg.series)?;
        let ctx = SewingContext::new(p, cfg.order, &cfg.series)?;
        let closed = ctx.omega(&SurfacePoint::new(Torus::One, x), &SurfacePoint::new(Torus::Two, y))? * ctx.z_m();
        rep.compare(format!("x={x} y={y}"), brute, closed);
        Ok(())
    };
    if let Err(e) = run(&mut rep) {
        rep.error("fock_two_point", e);
    }
    rep
}

/// Vector inserted at `x` in the genus-two recursion check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZhuVector {
    H,
    OmegaTilde,
}

/// One configuration: `v` at `x`, plus `h` insertions on each torus.
#[derive(Clone, Debug, PartialEq)]
pub struct RecursionSample {
    pub point: ModuliPoint,
    pub x: SurfacePoint,
    pub left: Vec<Complex64>,
    pub right: Vec<Complex64>,
}

/// Oracle sample configurations at `p`: points of modulus ≳ 1.2 so that the
/// level-6 truncation sits well below tolerance at ε = 0.1.
pub fn standard_samples(p: &ModuliPoint) -> Vec<RecursionSample> {
    let x1 = SurfacePoint::new(Torus::One, c(1.1, 0.6));
    let x2 = SurfacePoint::new(Torus::Two, c(-0.9, 1.1));
    let (w1, w2) = (c(-1.0, -0.9), c(0.9, 1.0));
    let (y1, y2) = (c(-0.7, 1.3), c(1.4, -0.5));
    let mk = |x: SurfacePoint, left: Vec<Complex64>, right: Vec<Complex64>| RecursionSample { point: *p, x, left, right };
    vec![
        mk(x1, vec![], vec![]),
        mk(x2, vec![], vec![]),
        mk(x1, vec![], vec![y1]),
        mk(x1, vec![w1], vec![]),
        mk(x2, vec![w2], vec![]),
        mk(x1, vec![w1], vec![y1]),
        mk(x2, vec![w2], vec![y2]),
        mk(x1, vec![w1, w2], vec![]),
        mk(x1, vec![w1], vec![y1, y2]),
    ]
}

/// Oracle moduli: the standard τ pairs at the configured ε.
pub fn standard_oracle_moduli(cfg: &OracleConfig) -> Result<Vec<ModuliPoint>> {
    [(c(0.0, 1.0), c(0.0, 1.0)), (c(0.0, 1.0), c(0.0, 1.2)), (c(0.3, 1.0), c(0.0, 1.1))]
        .into_iter()
        .map(|(a, b)| ModuliPoint::new(a, b, c(cfg.eps, 0.0)))
        .collect()
}

fn split(x: &SurfacePoint, v: Field, left: &[Complex64], right: &[Complex64]) -> (Vec<Insertion>, Vec<Insertion>) {
    let mut l: Vec<Insertion> = left.iter().map(|&z| Insertion::h(z)).collect();
    let mut r: Vec<Insertion> = right.iter().map(|&z| Insertion::h(z)).collect();
    let ins = Insertion { field: v, z: x.z };
    match x.torus {
        Torus::One => l.insert(0, ins),
        Torus::Two => r.insert(0, ins),
    }
    (l, r)
}

fn others(s: &RecursionSample) -> Vec<SurfacePoint> {
    let mut out: Vec<SurfacePoint> = s.left.iter().map(|&z| SurfacePoint::new(Torus::One, z)).collect();
    out.extend(s.right.iter().map(|&z| SurfacePoint::new(Torus::Two, z)));
    out
}

fn without(s: &RecursionSample, k: usize) -> (Vec<Insertion>, Vec<Insertion>) {
    let nl = s.left.len();
    let l = s.left.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, &z)| Insertion::h(z)).collect();
    let r = s.right.iter().enumerate().filter(|(i, _)| *i + nl != k).map(|(_, &z)| Insertion::h(z)).collect();
    (l, r)
}

fn coordinate_derivative<F>(f: F, z: Complex64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let d = |h: f64| -> Result<Complex64> { Ok((f(z + h)? - f(z - h)?) / (2.0 * h)) };
    let (a, b, c2) = (d(4e-3)?, d(2e-3)?, d(1e-3)?);
    let r1 = (b * 4.0 - a) / 3.0;
    let r2 = (c2 * 4.0 - b) / 3.0;
    Ok((r2 * 16.0 - r1) / 15.0)
}

/// Genus-two Zhu recursion for `v = h` (N = 1) or `v = ω̃` (N = 2), brute-force
/// left-hand side against the right-hand side assembled from the universal
/// coefficient functions.
pub fn verify_genus2_zhu(v: ZhuVector, samples: &[RecursionSample], cfg: &OracleConfig) -> ResidualReport {
    let name = match v {
        ZhuVector::H => "zhu_recursion_h",
        ZhuVector::OmegaTilde => "zhu_recursion_omega",
    };
    let mut rep = ResidualReport::new(name, 1e-5);
    for (i, s) in samples.iter().enumerate() {
        let label = format!("sample {i} x={}:{}", s.x.torus, s.x.z);
        let res = match v {
            ZhuVector::H => recursion_h(s, cfg, &label, &mut rep),
            ZhuVector::OmegaTilde => recursion_omega(s, cfg, &label, &mut rep),
        };
        if let Err(e) = res {
            rep.error(label, e);
        }
    }
    rep
}

fn recursion_h(s: &RecursionSample, cfg: &OracleConfig, label: &str, rep: &mut ResidualReport) -> Result<()> {
    let (l, r) = split(&s.x, Field::H, &s.left, &s.right);
    let lhs = genus2_brute(&l, &r, cfg.level_cap, &s.point, &cfg.series)?;
    let ctx = SewingContext::new(&s.point, cfg.order, &cfg.series)?;
    let zhu = ZhuContext::new(&ctx, ZhuWeight::new(1)?)?;
    let mut rhs = ZERO;
    for (k, y) in others(s).iter().enumerate() {
        let (l2, r2) = without(s, k);
        rhs += zhu.gen_weierstrass(0, 1, &s.x, y)? * genus2_brute(&l2, &r2, cfg.level_cap, &s.point, &cfg.series)?;
    }
    rep.compare(label, lhs, rhs);
    Ok(())
}

fn recursion_omega(s: &RecursionSample, cfg: &OracleConfig, label: &str, rep: &mut ResidualReport) -> Result<()> {
    let (l, r) = split(&s.x, Field::OmegaTilde, &s.left, &s.right);
    let lhs = genus2_brute(&l, &r, cfg.level_cap, &s.point, &cfg.series)?;
    let ctx = SewingContext::new(&s.point, cfg.order, &cfg.series)?;
    let zhu = ZhuContext::new(&ctx, ZhuWeight::new(2)?)?;
    let phi = zhu.two_diff_basis(&s.x)?;
    let (hl, hr): (Vec<Insertion>, Vec<Insertion>) =
        (s.left.iter().map(|&z| Insertion::h(z)).collect(), s.right.iter().map(|&z| Insertion::h(z)).collect());
    let cap = cfg.level_cap;
    let series = cfg.series;
    let z2 = |q: &ModuliPoint| genus2_brute(&hl, &hr, cap, q, &series);
    let levels = genus2_levels(&hl, &hr, cap, &s.point, &series)?;
    let x_pi: Complex64 = levels.iter().enumerate().map(|(n, t)| t * n as f64).sum();
    let o1 = moduli_derivative(z2, Direction::Tau1, &s.point, &cfg.fd)?;
    let o2 = moduli_derivative(z2, Direction::Tau2, &s.point, &cfg.fd)?;
    let mut rhs = phi[0] * o1 + phi[1] * o2 + phi[2] * x_pi;
    let base: Complex64 = levels.iter().sum();
    for (k, y) in others(s).iter().enumerate() {
        let nl = s.left.len();
        let moved = |z: Complex64| {
            let mut a = hl.clone();
            let mut b = hr.clone();
            if k < nl {
                a[k].z = z;
            } else {
                b[k - nl].z = z;
            }
            genus2_brute(&a, &b, cap, &s.point, &series)
        };
        let dz = coordinate_derivative(moved, y.z)?;
        rhs += zhu.gen_weierstrass(0, 0, &s.x, y)? * dz + zhu.gen_weierstrass(0, 1, &s.x, y)? * base;
    }
    rep.compare(label, lhs, rhs);
    if s.left.is_empty() && s.right.is_empty() {
        let tabs = tables(&s.point, &series)?;
        let mut o = [ZERO; 2];
        for level in 0..=cap {
            if level > 0 && s.point.eps() == ZERO {
                break;
            }
            let gram = gram_block(level, s.point.eps())?;
            let n = gram.basis.len();
            let mut vals = [DVector::zeros(n), DVector::zeros(n)];
            let mut ders = [DVector::zeros(n), DVector::zeros(n)];
            for (i, u) in gram.basis.iter().enumerate() {
                for t in 0..2 {
                    vals[t][i] = genus1_one_point(u, &tabs[t]);
                    ders[t][i] = genus1_one_point_qderiv(u, &tabs[t])?;
                }
            }
            o[0] += (ders[0].transpose() * &gram.dual * &vals[1])[(0, 0)];
            o[1] += (vals[0].transpose() * &gram.dual * &ders[1])[(0, 0)];
        }
        rep.compare(format!("{label} O₁ fock/fd"), o[0], o1);
        rep.compare(format!("{label} O₂ fock/fd"), o[1], o2);
        let eps_fd = moduli_derivative(z2, Direction::Eps, &s.point, &cfg.fd)?;
        rep.compare(format!("{label} εX fock/fd"), x_pi, eps_fd);
        let fd = cfg.fd;
        let order = cfg.order;
        let dxz = crate::calculus::apply_dx(
            |q| Ok(SewingContext::new(q, order, &series)?.z_m()),
            &s.x,
            &ctx,
            &fd,
        )?;
        rep.compare(format!("{label} D_xZ"), lhs, dxz);
    }
    Ok(())
}

/// Matchings against the recursive 1-point formula on every partition of
/// weight at most `max_weight`.
pub fn check_matchings(tau: Complex64, max_weight: usize, series: &SeriesConfig) -> ResidualReport {
    let mut rep = ResidualReport::new("genus1_matchings", 1e-10);
    let run = |rep: &mut ResidualReport| -> Result<()> {
        let table = EllipticTable::new(&crate::elliptic::TorusModulus::new(tau)?, series)?;
        for n in 0..=max_weight {
            for p in partitions(n) {
                let s = FockState::from_partition(p.clone());
                rep.compare(format!("{:?}", p.parts()), genus1_one_point(&s, &table), genus1_one_point_zhu(&s, &table)?);
            }
        }
        Ok(())
    };
    if let Err(e) = run(&mut rep) {
        rep.error("genus1_matchings", e);
    }
    rep
}

/// Genus-one Ward identity with `ω̃` at `x` and `h` at `x₁`, `x₂`.
pub fn check_genus1_ward(tau: Complex64, x: Complex64, x1: Complex64, x2: Complex64, cfg: &OracleConfig) -> ResidualReport {
    let mut rep = ResidualReport::new("genus1_ward", 1e-8);
    let run = |rep: &mut ResidualReport| -> Result<()> {
        let modulus = crate::elliptic::TorusModulus::new(tau)?;
        let table = EllipticTable::new(&modulus, &cfg.series)?;
        let vac = FockState::vacuum();
        let lhs = genus1_npoint(&[Insertion::omega_tilde(x), Insertion::h(x1), Insertion::h(x2)], &vac, &table)?;
        let f = |t: Complex64| -> Result<Complex64> {
            let tab = EllipticTable::new(&crate::elliptic::TorusModulus::new(t)?, &cfg.series)?;
            Ok(tab.p(2, x1 - x2)? / tab.eta())
        };
        let h = cfg.fd.step;
        let d = |h: f64| -> Result<Complex64> { Ok((f(tau + h)? - f(tau - h)?) / (2.0 * h)) };
        let qdq = ((d(h / 2.0)? * 4.0 - d(h)?) / 3.0) / Complex64::new(0.0, 2.0 * PI);
        let eta = table.eta();
        let p2 = table.p(2, x1 - x2)?;
        let dp2 = table.p(3, x1 - x2)? * -2.0;
        let mut rhs = qdq;
        rhs += table.p(1, x - x1)? * dp2 / eta + table.p(2, x - x1)? * p2 / eta;
        rhs += table.p(1, x - x2)? * (-dp2) / eta + table.p(2, x - x2)? * p2 / eta;
        rep.compare("ward", lhs, rhs);
        let closed = (table.eisenstein(2) * p2 * 0.5 + table.p(2, x - x1)? * table.p(2, x - x2)?) / eta;
        rep.compare("closed", lhs, closed);
        Ok(())
    };
    if let Err(e) = run(&mut rep) {
        rep.error("genus1_ward", e);
    }
    rep
}

/// `Z⁽¹⁾(ω̃) = q∂_q Z⁽¹⁾` with the left side as `Tr (L[0] - 1/24) q^{L[0] - 1/24}`
/// summed over the Fock space.
pub fn check_delq(tau: Complex64, series: &SeriesConfig) -> ResidualReport {
    let mut rep = ResidualReport::new("genus1_delq", 1e-8);
    let run = |rep: &mut ResidualReport| -> Result<()> {
        let modulus = crate::elliptic::TorusModulus::new(tau)?;
        let table = EllipticTable::new(&modulus, series)?;
        let q = modulus.q();
        let levels = ((-40.0) / q.norm().ln()).ceil().max(8.0) as usize;
        let counts = partition_counts(levels);
        let q24 = (Complex64::new(0.0, 2.0 * PI) * tau / 24.0).exp();
        let mut trace = ZERO;
        let mut qn = ONE;
        for (n, p) in counts.iter().enumerate() {
            trace += qn * (*p as f64 * (n as f64 - 1.0 / 24.0));
            qn *= q;
        }
        trace /= q24;
        let omega = FockState::monomial(&[1, 1])?;
        let one_point = genus1_one_point(&omega, &table) * 0.5;
        rep.compare("trace vs ω̃ 1-point", trace, one_point);
        let qd = genus1_one_point_qderiv(&FockState::vacuum(), &table)?;
        rep.compare("trace vs q∂(1/η)", trace, qd);
        Ok(())
    };
    if let Err(e) = run(&mut rep) {
        rep.error("genus1_delq", e);
    }
    rep
}
