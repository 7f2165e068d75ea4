//! Parsers, run configuration and command implementations behind the `g2zhu` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use g2zhu::calculus::{verify_identity, xi_matrix, CalculusConfig, FdConfig, IdentityName, QuadratureConfig};
use g2zhu::elliptic::SeriesConfig;
use g2zhu::fock::{partition_coefficient_table, standard_oracle_moduli, OracleConfig};
use g2zhu::heisenberg::{nu_lambda, virasoro_one_point, z2_partition, ModulePair};
use g2zhu::report::ResidualReport;
use g2zhu::sewing::{ModuliPoint, SewingContext, SurfacePoint, Torus};
use g2zhu::verify::{identity_samples, run_criterion, Criterion, Grid, VerifyConfig};
use g2zhu::zhu::{ZhuContext, ZhuWeight};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Longest literal accepted by the parsers.
pub const MAX_LITERAL: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum CliError {
    #[error("cannot parse complex literal {0:?}")]
    Complex(String),
    #[error("cannot parse surface point {0:?}: expected torus<1|2>:<complex>")]
    SurfacePoint(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] g2zhu::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Complex(_) | CliError::SurfacePoint(_) => "parse",
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "domain",
        }
    }
}

fn parse_real(s: &str) -> Option<f64> {
    let ok = !s.is_empty() && s.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'));
    ok.then(|| s.parse::<f64>().ok()).flatten().filter(|v| v.is_finite())
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i` with optional spaces.
pub fn parse_complex(input: &str) -> Result<Complex64, CliError> {
    let err = || CliError::Complex(input.chars().take(MAX_LITERAL).collect());
    if input.len() > MAX_LITERAL {
        return Err(err());
    }
    let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = s.strip_suffix('i') else {
        return parse_real(&s).map(|re| Complex64::new(re, 0.0)).ok_or_else(err);
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re_part, im_part) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let re = if re_part.is_empty() { 0.0 } else { parse_real(re_part).ok_or_else(err)? };
    let im = match im_part {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => parse_real(t).ok_or_else(err)?,
    };
    Ok(Complex64::new(re, im))
}

/// Parses `torus1:<complex>` or `torus2:<complex>`.
pub fn parse_surface_point(input: &str) -> Result<SurfacePoint, CliError> {
    let err = || CliError::SurfacePoint(input.chars().take(MAX_LITERAL).collect());
    let (head, tail) = input.trim().split_once(':').ok_or_else(err)?;
    let torus = match head.trim() {
        "torus1" => Torus::One,
        "torus2" => Torus::Two,
        _ => return Err(err()),
    };
    let z = parse_complex(tail).map_err(|_| err())?;
    Ok(SurfacePoint::new(torus, z))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            _ => Err(CliError::Config(format!("unknown format {s:?}"))),
        }
    }
}

/// Every numerical knob, echoed into each output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tau1: String,
    pub tau2: String,
    pub eps: String,
    /// Explicit `ε^{1/2}`; overrides `eps` when set.
    pub sqrt_eps: Option<String>,
    pub trunc: usize,
    pub q_terms: usize,
    pub tail_tol: f64,
    pub alpha_nodes: usize,
    pub beta_panels: usize,
    pub beta_order: usize,
    pub circle_nodes: usize,
    pub fd_step: f64,
    pub richardson_levels: usize,
    pub level_cap: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub format: Format,
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let quad = QuadratureConfig::default();
        let fd = FdConfig::default();
        let series = SeriesConfig::default();
        RunConfig {
            tau1: "i".into(),
            tau2: "i".into(),
            eps: "0".into(),
            sqrt_eps: None,
            trunc: g2zhu::sewing::DEFAULT_ORDER,
            q_terms: series.q_terms,
            tail_tol: series.tail_tol,
            alpha_nodes: quad.alpha_nodes,
            beta_panels: quad.beta_panels,
            beta_order: quad.beta_order,
            circle_nodes: quad.circle_nodes,
            fd_step: fd.step,
            richardson_levels: fd.richardson_levels,
            level_cap: OracleConfig::default().level_cap,
            tolerances: BTreeMap::new(),
            format: Format::Json,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.moduli()?;
        self.quadrature().validate()?;
        self.fd().validate()?;
        if self.trunc < 4 || self.trunc > 256 {
            return Err(CliError::Config(format!("trunc must lie in 4..=256, got {}", self.trunc)));
        }
        if self.q_terms == 0 || self.q_terms > 4096 {
            return Err(CliError::Config(format!("q_terms must lie in 1..=4096, got {}", self.q_terms)));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(CliError::Config("tail_tol must lie in (0, 1)".into()));
        }
        if !(3..=8).contains(&self.level_cap) {
            return Err(CliError::Config(format!("level_cap must lie in 3..=8, got {}", self.level_cap)));
        }
        for (name, tol) in &self.tolerances {
            if !(*tol > 0.0 && tol.is_finite()) {
                return Err(CliError::Config(format!("tolerance {name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn moduli(&self) -> Result<ModuliPoint, CliError> {
        let t1 = parse_complex(&self.tau1)?;
        let t2 = parse_complex(&self.tau2)?;
        Ok(match &self.sqrt_eps {
            Some(s) => ModuliPoint::with_sqrt_eps(t1, t2, parse_complex(s)?)?,
            None => ModuliPoint::new(t1, t2, parse_complex(&self.eps)?)?,
        })
    }

    pub fn series(&self) -> SeriesConfig {
        SeriesConfig { q_terms: self.q_terms, tail_tol: self.tail_tol }
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            alpha_nodes: self.alpha_nodes,
            beta_panels: self.beta_panels,
            beta_order: self.beta_order,
            circle_nodes: self.circle_nodes,
            base_point: None,
        }
    }

    pub fn fd(&self) -> FdConfig {
        FdConfig { step: self.fd_step, richardson_levels: self.richardson_levels }
    }

    pub fn calculus(&self) -> CalculusConfig {
        CalculusConfig { order: self.trunc, series: self.series(), quad: self.quadrature(), fd: self.fd() }
    }

    pub fn oracle(&self) -> Result<OracleConfig, CliError> {
        let base = OracleConfig::for_level_cap(self.level_cap)?;
        Ok(OracleConfig { order: self.trunc, series: self.series(), fd: self.fd(), ..base })
    }

    fn apply_tolerance(&self, r: ResidualReport) -> ResidualReport {
        match self.tolerances.get(&r.name) {
            Some(&t) => r.with_tolerance(t),
            None => r,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueRecord {
    pub inputs: BTreeMap<String, String>,
    pub value: [f64; 2],
}

impl ValueRecord {
    fn new(inputs: &[(&str, String)], v: Complex64) -> Self {
        ValueRecord { inputs: inputs.iter().map(|(k, s)| (k.to_string(), s.clone())).collect(), value: [v.re, v.im] }
    }
}

/// Metadata echoed with every result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(flatten)]
    pub run: RunConfig,
    pub sqrt_eps_used: [f64; 2],
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub object: String,
    pub config: Provenance,
    pub values: Vec<ValueRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Vec<ResidualReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl Output {
    fn new(object: &str, cfg: &RunConfig) -> Result<Self, CliError> {
        let s = cfg.moduli()?.sqrt_eps();
        Ok(Output {
            object: object.into(),
            config: Provenance { run: cfg.clone(), sqrt_eps_used: [s.re, s.im], version: env!("CARGO_PKG_VERSION").into() },
            values: Vec::new(),
            residuals: None,
            pass: None,
        })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("output is serializable") + "\n",
            Format::Csv => self.render_csv(),
            Format::Table => self.render_table(),
        }
    }

    fn input_columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        for v in &self.values {
            for k in v.inputs.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
        cols
    }

    fn render_csv(&self) -> String {
        let mut cols = self.input_columns();
        if cols.is_empty() && self.residuals.is_some() {
            cols.push("check".into());
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = cols.clone();
        header.extend(["re".to_string(), "im".to_string()]);
        w.write_record(&header).expect("in-memory write");
        for v in &self.values {
            let mut row: Vec<String> = cols.iter().map(|c| v.inputs.get(c).cloned().unwrap_or_default()).collect();
            row.push(format!("{:e}", v.value[0]));
            row.push(format!("{:e}", v.value[1]));
            w.write_record(&row).expect("in-memory write");
        }
        for r in self.residuals.iter().flatten() {
            for e in &r.entries {
                let mut row: Vec<String> = cols.iter().map(|_| String::new()).collect();
                if let Some(first) = row.first_mut() {
                    *first = format!("{}: {}", r.name, e.label);
                }
                row.push(format!("{:e}", e.relative));
                row.push(if e.pass { "pass".into() } else { "FAIL".into() });
                w.write_record(&row).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.object);
        for v in &self.values {
            let inputs: Vec<String> = v.inputs.iter().map(|(k, s)| format!("{k}={s}")).collect();
            let _ = writeln!(out, "  {:<48} {:+.15e} {:+.15e}i", inputs.join(" "), v.value[0], v.value[1]);
        }
        for r in self.residuals.iter().flatten() {
            let _ = writeln!(
                out,
                "  {:<24} {} max {:.3e} (tol {:.1e}, {} entries, {} errors)",
                r.name,
                if r.pass { "pass" } else { "FAIL" },
                r.max_relative(),
                r.tolerance,
                r.entries.len(),
                r.errors.len()
            );
        }
        if let Some(p) = self.pass {
            let _ = writeln!(out, "{}", if p { "PASS" } else { "FAIL" });
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Object {
    Period,
    Nu,
    Omega,
    Projective,
    ZhuCoeffs,
    Heisenberg,
    Xi,
}

impl Object {
    pub fn as_str(&self) -> &'static str {
        match self {
            Object::Period => "period",
            Object::Nu => "nu",
            Object::Omega => "omega",
            Object::Projective => "projective",
            Object::ZhuCoeffs => "zhu-coeffs",
            Object::Heisenberg => "heisenberg",
            Object::Xi => "xi",
        }
    }
}

/// Point arguments of `compute`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointArgs {
    pub x: Option<SurfacePoint>,
    pub y: Option<SurfacePoint>,
    pub lambda: Option<(Complex64, Complex64)>,
    pub weight: Option<usize>,
}

fn need(p: Option<SurfacePoint>, flag: &str) -> Result<SurfacePoint, CliError> {
    p.ok_or_else(|| CliError::Config(format!("--{flag} is required for this object")))
}

fn show_point(p: &SurfacePoint) -> String {
    format!("{}:{}", p.torus, show_c(p.z))
}

fn show_c(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

pub fn compute(object: Object, cfg: &RunConfig, args: &PointArgs) -> Result<Output, CliError> {
    cfg.validate()?;
    let p = cfg.moduli()?;
    let ctx = SewingContext::new(&p, cfg.trunc, &cfg.series())?;
    let mut out = Output::new(object.as_str(), cfg)?;
    let vals = &mut out.values;
    match object {
        Object::Period => {
            let om = ctx.period_matrix();
            for (i, j) in [(0, 0), (1, 1), (0, 1)] {
                vals.push(ValueRecord::new(&[("entry", format!("{}{}", i + 1, j + 1))], om.get(i, j)));
            }
        }
        Object::Nu => {
            let x = need(args.x, "x")?;
            for t in Torus::BOTH {
                vals.push(ValueRecord::new(&[("x", show_point(&x)), ("i", (t.index() + 1).to_string())], ctx.nu(t, &x)?));
            }
        }
        Object::Omega => {
            let (x, y) = (need(args.x, "x")?, need(args.y, "y")?);
            vals.push(ValueRecord::new(&[("x", show_point(&x)), ("y", show_point(&y))], ctx.omega(&x, &y)?));
        }
        Object::Projective => {
            let x = need(args.x, "x")?;
            vals.push(ValueRecord::new(&[("x", show_point(&x))], ctx.projective(&x)?));
        }
        Object::ZhuCoeffs => {
            let x = need(args.x, "x")?;
            let n = args.weight.unwrap_or(2);
            let zhu = ZhuContext::new(&ctx, ZhuWeight::new(n)?)?;
            let f = zhu.f_coefficients(&x)?;
            let xs = show_point(&x);
            let w = n.to_string();
            vals.push(ValueRecord::new(&[("x", xs.clone()), ("N", w.clone()), ("name", "F1".into())], f.f1));
            vals.push(ValueRecord::new(&[("x", xs.clone()), ("N", w.clone()), ("name", "F2".into())], f.f2));
            for (m, v) in f.f_pi.iter().enumerate() {
                vals.push(ValueRecord::new(&[("x", xs.clone()), ("N", w.clone()), ("name", format!("FPi{}", m + 1))], *v));
            }
            if n == 2 {
                for (r, v) in zhu.two_diff_basis(&x)?.iter().enumerate() {
                    vals.push(ValueRecord::new(&[("x", xs.clone()), ("N", w.clone()), ("name", format!("Phi{}", r + 1))], *v));
                }
            }
            if let Some(y) = args.y {
                for j in 0..3 {
                    let v = zhu.gen_weierstrass(0, j, &x, &y)?;
                    let name = format!("P0,{}", j + 1);
                    vals.push(ValueRecord::new(&[("x", xs.clone()), ("y", show_point(&y)), ("N", w.clone()), ("name", name)], v));
                }
            }
        }
        Object::Heisenberg => {
            let (l1, l2) = args.lambda.unwrap_or_default();
            let lam = ModulePair::new(l1, l2);
            let ls = format!("{} {}", show_c(l1), show_c(l2));
            vals.push(ValueRecord::new(&[("lambda", ls.clone()), ("name", "Z".into())], z2_partition(&ctx, &lam)));
            if let Some(x) = args.x {
                let xs = show_point(&x);
                vals.push(ValueRecord::new(&[("lambda", ls.clone()), ("x", xs.clone()), ("name", "nu".into())], nu_lambda(&ctx, &lam, &x)?));
                let v = virasoro_one_point(&ctx, &lam, &x)?;
                vals.push(ValueRecord::new(&[("lambda", ls), ("x", xs), ("name", "virasoro".into())], v));
            }
        }
        Object::Xi => {
            let xi = xi_matrix(&ctx, &cfg.quadrature())?;
            for (r, row) in xi.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    vals.push(ValueRecord::new(&[("entry", format!("{}{}", r + 1, c + 1))], *v));
                }
            }
        }
    }
    Ok(out)
}

/// What `verify` runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Identity(IdentityName),
    Criterion(Criterion),
    Oracle,
    Equivariance,
}

impl std::str::FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "all" => Ok(Suite::All),
            "oracle" => Ok(Suite::Oracle),
            "equivariance" => Ok(Suite::Equivariance),
            _ => IdentityName::parse(s)
                .map(Suite::Identity)
                .or_else(|| Criterion::parse(s).map(Suite::Criterion))
                .ok_or_else(|| CliError::Config(format!("unknown suite {s:?}"))),
        }
    }
}

/// The standard grid, restricted to the configured moduli when `restrict` is set.
pub fn grid_for(cfg: &RunConfig, restrict: bool) -> Result<Grid, CliError> {
    let mut grid = Grid::standard();
    if restrict {
        grid.moduli = vec![cfg.moduli()?];
    }
    Ok(grid)
}

/// Runs a suite; `restrict` evaluates grid-based checks only at the configured moduli.
pub fn verify(suite: Suite, cfg: &RunConfig, restrict: bool) -> Result<Output, CliError> {
    cfg.validate()?;
    let grid = grid_for(cfg, restrict)?;
    let vcfg = VerifyConfig { calculus: cfg.calculus(), oracle: cfg.oracle()? };
    let name = match suite {
        Suite::All => "verify:all".to_string(),
        Suite::Identity(n) => format!("verify:{n}"),
        Suite::Criterion(c) => format!("verify:{c}"),
        Suite::Oracle => "verify:oracle".into(),
        Suite::Equivariance => "verify:equivariance".into(),
    };
    let mut out = Output::new(&name, cfg)?;
    let criteria = |cs: &[Criterion]| -> Vec<ResidualReport> {
        cs.iter().flat_map(|&c| run_criterion(c, &grid, &vcfg).reports).collect()
    };
    let reports = match suite {
        Suite::All => criteria(&Criterion::ALL),
        Suite::Identity(n) => vec![verify_identity(n, &identity_samples(&grid), &vcfg.calculus)],
        Suite::Criterion(c) => criteria(&[c]),
        Suite::Oracle => {
            for p in standard_oracle_moduli(&vcfg.oracle)? {
                let (t1, t2) = (p.tau(Torus::One), p.tau(Torus::Two));
                let (brute, closed) = partition_coefficient_table(t1, t2, &vcfg.oracle)?;
                for (k, (b, c)) in brute.iter().zip(&closed).enumerate() {
                    let taus = format!("{} {}", show_c(t1), show_c(t2));
                    out.values.push(ValueRecord::new(&[("tau", taus.clone()), ("power", k.to_string()), ("source", "fock".into())], *b));
                    out.values.push(ValueRecord::new(&[("tau", taus), ("power", k.to_string()), ("source", "closed".into())], *c));
                }
            }
            criteria(&[Criterion::FockOracle, Criterion::ZhuRecursion, Criterion::GenusOne])
        }
        Suite::Equivariance => criteria(&[Criterion::Equivariance, Criterion::Branch]),
    };
    let reports: Vec<ResidualReport> = reports.into_iter().map(|r| cfg.apply_tolerance(r)).collect();
    out.pass = Some(reports.iter().all(|r| r.pass));
    out.residuals = Some(reports);
    Ok(out)
}
