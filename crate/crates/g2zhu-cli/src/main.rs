use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use g2zhu_cli::{compute, parse_complex, parse_surface_point, verify, CliError, Object, PointArgs, RunConfig, Suite};
use serde_json::json;

#[derive(Parser)]
#[command(name = "g2zhu", version, about = "Genus-two sewn surfaces, Zhu recursion and Heisenberg checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one object at the configured moduli.
    Compute {
        #[arg(value_enum)]
        object: ObjectArg,
        #[command(flatten)]
        common: Common,
        /// Surface point `torus<1|2>:<complex>`.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
        /// Module labels λ₁ λ₂.
        #[arg(long, num_args = 2, allow_hyphen_values = true)]
        lambda: Option<Vec<String>>,
        /// Zhu weight N.
        #[arg(long)]
        weight: Option<usize>,
    },
    /// Run a verification suite: all, oracle, equivariance, a criterion or an identity name.
    Verify {
        suite: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectArg {
    Period,
    Nu,
    Omega,
    Projective,
    ZhuCoeffs,
    Heisenberg,
    Xi,
}

impl From<ObjectArg> for Object {
    fn from(o: ObjectArg) -> Object {
        match o {
            ObjectArg::Period => Object::Period,
            ObjectArg::Nu => Object::Nu,
            ObjectArg::Omega => Object::Omega,
            ObjectArg::Projective => Object::Projective,
            ObjectArg::ZhuCoeffs => Object::ZhuCoeffs,
            ObjectArg::Heisenberg => Object::Heisenberg,
            ObjectArg::Xi => Object::Xi,
        }
    }
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sqrt_eps: Option<String>,
    /// Truncation order M.
    #[arg(long)]
    trunc: Option<usize>,
    #[arg(long)]
    q_terms: Option<usize>,
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long)]
    level_cap: Option<usize>,
    /// Tolerance override `name=value`, repeatable.
    #[arg(long = "tol")]
    tolerances: Vec<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    output: Option<String>,
}

const MODULI_KEYS: [&str; 4] = ["tau1", "tau2", "eps", "sqrt_eps"];

impl Common {
    /// Merged configuration and whether moduli were given explicitly.
    fn resolve(&self) -> Result<(RunConfig, bool), CliError> {
        let mut explicit = false;
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
                let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
                explicit |= MODULI_KEYS.iter().any(|k| table.contains_key(*k));
                RunConfig::from_toml(&text)?
            }
            None => RunConfig::default(),
        };
        for (slot, val) in [(&mut cfg.tau1, &self.tau1), (&mut cfg.tau2, &self.tau2), (&mut cfg.eps, &self.eps)] {
            if let Some(v) = val {
                *slot = v.clone();
                explicit = true;
            }
        }
        if let Some(s) = &self.sqrt_eps {
            cfg.sqrt_eps = Some(s.clone());
            explicit = true;
        }
        if self.eps.is_some() && self.sqrt_eps.is_none() {
            cfg.sqrt_eps = None;
        }
        if let Some(v) = self.trunc {
            cfg.trunc = v;
        }
        if let Some(v) = self.q_terms {
            cfg.q_terms = v;
        }
        if let Some(v) = self.fd_step {
            cfg.fd_step = v;
        }
        if let Some(v) = self.level_cap {
            cfg.level_cap = v;
        }
        for t in &self.tolerances {
            let (k, v) = t.split_once('=').ok_or_else(|| CliError::Config(format!("tolerance {t:?} is not name=value")))?;
            let v: f64 = v.parse().map_err(|_| CliError::Config(format!("tolerance {t:?} is not a number")))?;
            cfg.tolerances.insert(k.to_string(), v);
        }
        if let Some(f) = &self.format {
            cfg.format = f.parse()?;
        }
        if let Some(o) = &self.output {
            cfg.output = Some(o.clone());
        }
        cfg.validate()?;
        Ok((cfg, explicit))
    }
}

fn point(s: &Option<String>) -> Result<Option<g2zhu::sewing::SurfacePoint>, CliError> {
    s.as_deref().map(parse_surface_point).transpose()
}

fn run(cli: Cli) -> Result<(String, RunConfig, Option<bool>), CliError> {
    match cli.command {
        Command::Compute { object, common, x, y, lambda, weight } => {
            let (cfg, _) = common.resolve()?;
            let lambda = match lambda {
                Some(v) => Some((parse_complex(&v[0])?, parse_complex(&v[1])?)),
                None => None,
            };
            let args = PointArgs { x: point(&x)?, y: point(&y)?, lambda, weight };
            let out = compute(object.into(), &cfg, &args)?;
            Ok((out.render(cfg.format), cfg, None))
        }
        Command::Verify { suite, common } => {
            let (cfg, explicit) = common.resolve()?;
            let suite: Suite = suite.parse()?;
            let out = verify(suite, &cfg, explicit)?;
            Ok((out.render(cfg.format), cfg, out.pass))
        }
    }
}

fn emit(text: &str, path: Option<&str>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((text, cfg, pass)) => {
            if let Err(e) = emit(&text, cfg.output.as_deref()) {
                eprintln!("{}", json!({"error": "io", "message": e.to_string()}));
                return ExitCode::from(2);
            }
            if pass == Some(false) {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::from(2)
        }
    }
}
