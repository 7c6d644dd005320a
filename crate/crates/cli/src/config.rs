use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ilw_core::ensemble::{DEFAULT_PRECISION_BITS, MIN_PRECISION_BITS};
use ilw_core::ProfileSpec;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ilw", version, about = "Soliton ensembles, equilibrium measures and ILW simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Split-step simulation; one CSV per snapshot time.
    Simulate,
    /// Modified scattering data and the Weyl density table.
    Scattering,
    /// Soliton-ensemble field at the requested times.
    Ensemble,
    /// Minimizer densities and variational reports at (x, t).
    Equilibrium,
    /// Runs the acceptance suite and writes a pass/fail summary.
    Verify,
    /// ψ against its Airy-type asymptotics.
    Mtp,
    /// Ensemble, simulation and Burgers fields on one grid.
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Scattering => "scattering",
            Command::Ensemble => "ensemble",
            Command::Equilibrium => "equilibrium",
            Command::Verify => "verify",
            Command::Mtp => "mtp",
            Command::Compare => "compare",
        }
    }
}

/// Flags shared by every command. Each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Mantissa bits for the determinant arithmetic.
    #[arg(long, global = true, value_name = "B")]
    pub precision_bits: Option<usize>,
    /// NAME[:amplitude[,center[,width]]] with NAME sech2 or gaussian.
    #[arg(long, global = true, value_name = "SPEC")]
    pub profile: Option<String>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// ε, or a comma-separated sweep for `mtp`.
    #[arg(long, global = true, conflicts_with = "n", value_name = "EPS")]
    pub eps: Option<String>,
    /// Number of solitons; fixes ε_N.
    #[arg(long = "N", global = true, value_name = "N")]
    pub n: Option<usize>,
    /// Comma-separated times.
    #[arg(long, global = true, value_name = "T[,T...]", allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Spatial window A:B (χ window for `mtp`).
    #[arg(long, global = true, value_name = "A:B", allow_hyphen_values = true)]
    pub x_range: Option<String>,
    /// Grid points (κ nodes for `scattering` and `equilibrium`).
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<usize>,
    /// Pass/fail threshold where the command has one.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Time step for `simulate` and `compare`.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Comma-separated x positions for `equilibrium`.
    #[arg(long, global = true, value_name = "X[,X...]", allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Contour label for `mtp`: -inf or a value in 2ℤ - 1/2.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub nu: Option<String>,
    /// h for `mtp`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub h: Option<f64>,
    /// α for `mtp`, in (1/2, 2/3).
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Comma-separated criterion ids for `verify` (default all).
    #[arg(long, global = true, value_name = "ID[,ID...]")]
    pub criteria: Option<String>,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub out: Option<PathBuf>,
    pub precision_bits: Option<usize>,
    pub profile: Option<String>,
    pub delta: Option<f64>,
    pub eps: Option<Vec<f64>>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub t: Option<Vec<f64>>,
    pub x_range: Option<[f64; 2]>,
    pub grid: Option<usize>,
    pub tolerance: Option<f64>,
    pub dt: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub nu: Option<f64>,
    pub h: Option<f64>,
    pub alpha: Option<f64>,
    pub criteria: Option<Vec<u8>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Fully resolved parameters of one run. Its JSON form is hashed into
/// every output header; the output directory is not part of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub profile: ProfileSpec,
    pub delta: f64,
    pub eps: Vec<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub t: Vec<f64>,
    pub x_range: [f64; 2],
    pub grid: usize,
    pub tolerance: Option<f64>,
    pub precision_bits: usize,
    pub dt: f64,
    pub x: Vec<f64>,
    pub nu: String,
    pub h: f64,
    pub alpha: f64,
    pub criteria: Vec<u8>,
}

struct Defaults {
    delta: f64,
    eps: &'static [f64],
    n: Option<usize>,
    t: &'static [f64],
    x_range: [f64; 2],
    grid: usize,
    tolerance: Option<f64>,
}

fn defaults(cmd: Command) -> Defaults {
    let base = Defaults {
        delta: 0.5,
        eps: &[],
        n: None,
        t: &[0.0],
        x_range: [-5.0, 5.0],
        grid: 1001,
        tolerance: None,
    };
    match cmd {
        Command::Simulate => Defaults {
            delta: 1.0,
            eps: &[0.05],
            t: &[0.0, 0.3, 0.65, 1.5],
            x_range: [-6.0, 6.0],
            grid: 2000,
            ..base
        },
        Command::Scattering => Defaults {
            n: Some(16),
            grid: 256,
            ..base
        },
        Command::Ensemble => Defaults { n: Some(16), ..base },
        Command::Equilibrium => Defaults { grid: 256, ..base },
        Command::Verify => base,
        Command::Mtp => Defaults {
            eps: &[0.1, 0.05, 0.02],
            x_range: [-1.0, 1.0],
            grid: 21,
            ..base
        },
        Command::Compare => Defaults {
            eps: &[0.1],
            t: &[0.3],
            x_range: [-6.0, 6.0],
            grid: 1024,
            tolerance: Some(0.1),
            ..base
        },
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn parse_list<T: std::str::FromStr>(what: &str, text: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| CliError::Usage(format!("--{what}: bad value `{s}`: {e}")))
        })
        .collect()
}

fn parse_range(text: &str) -> Result<[f64; 2], CliError> {
    let Some((a, b)) = text.split_once(':') else {
        return usage(format!("--x-range expects A:B, got `{text}`"));
    };
    let v = parse_list::<f64>("x-range", &format!("{a},{b}"))?;
    Ok([v[0], v[1]])
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        usage(format!("{name} must be positive and finite, got {v}"))
    }
}

impl RunConfig {
    /// Merges flags over the config file over per-command defaults.
    pub fn resolve(cmd: Command, flags: &Flags, file: &FileConfig) -> Result<(RunConfig, PathBuf), CliError> {
        if let Some(c) = &file.command {
            if c != cmd.name() {
                return usage(format!("config is for `{c}` but the command is `{}`", cmd.name()));
            }
        }
        let d = defaults(cmd);
        let profile_text = flags.profile.clone().or(file.profile.clone()).unwrap_or_else(|| "sech2".into());
        let profile = ProfileSpec::parse(&profile_text).map_err(|e| CliError::Usage(e.to_string()))?;

        let eps = match &flags.eps {
            Some(s) => parse_list("eps", s)?,
            None if flags.n.is_some() => vec![],
            None => file.eps.clone().unwrap_or_default(),
        };
        let n = flags.n.or(if flags.eps.is_some() { None } else { file.n });
        if !eps.is_empty() && n.is_some() {
            return usage("give either eps or N, not both");
        }
        let (eps, n) = if eps.is_empty() && n.is_none() {
            (d.eps.to_vec(), d.n)
        } else {
            (eps, n)
        };

        let t = match &flags.t {
            Some(s) => parse_list("t", s)?,
            None => file.t.clone().unwrap_or_else(|| d.t.to_vec()),
        };
        let x_range = match &flags.x_range {
            Some(s) => parse_range(s)?,
            None => file.x_range.unwrap_or(d.x_range),
        };
        let x = match &flags.x {
            Some(s) => parse_list("x", s)?,
            None => file.x.clone().unwrap_or_default(),
        };
        let nu_value = match &flags.nu {
            Some(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("--nu: bad value `{s}`: {e}")))?,
            None => file.nu.unwrap_or(f64::NEG_INFINITY),
        };
        let nu = ilw_core::mtp::Nu::from_value(nu_value).map_err(|e| CliError::Usage(e.to_string()))?;
        let criteria = match &flags.criteria {
            Some(s) => parse_list("criteria", s)?,
            None => file.criteria.clone().unwrap_or_default(),
        };

        let cfg = RunConfig {
            command: cmd,
            profile,
            delta: flags.delta.or(file.delta).unwrap_or(d.delta),
            eps,
            n,
            t,
            x_range,
            grid: flags.grid.or(file.grid).unwrap_or(d.grid),
            tolerance: flags.tolerance.or(file.tolerance).or(d.tolerance),
            precision_bits: flags.precision_bits.or(file.precision_bits).unwrap_or(DEFAULT_PRECISION_BITS),
            dt: flags.dt.or(file.dt).unwrap_or(1e-4),
            x,
            nu: format!("{}", nu.value()),
            h: flags.h.or(file.h).unwrap_or(1.0),
            alpha: flags.alpha.or(file.alpha).unwrap_or(0.6),
            criteria,
        };
        cfg.validate()?;
        let out = flags.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
        Ok((cfg, out))
    }

    fn validate(&self) -> Result<(), CliError> {
        positive("delta", self.delta)?;
        positive("dt", self.dt)?;
        for &e in &self.eps {
            positive("eps", e)?;
        }
        if self.command != Command::Mtp && self.eps.len() > 1 {
            return usage("a list of eps values is only accepted by `mtp`");
        }
        if let Some(n) = self.n {
            if !(1..=512).contains(&n) {
                return usage(format!("N must lie in 1..=512, got {n}"));
            }
        }
        if self.t.is_empty() || self.t.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return usage("t must be a non-empty list of finite non-negative times");
        }
        let [a, b] = self.x_range;
        if !(a < b && a.is_finite() && b.is_finite()) {
            return usage(format!("x-range {a}:{b} is empty or not finite"));
        }
        if !(2..=1_000_000).contains(&self.grid) {
            return usage(format!("grid must lie in 2..=1000000, got {}", self.grid));
        }
        if let Some(tol) = self.tolerance {
            positive("tolerance", tol)?;
        }
        if !(MIN_PRECISION_BITS..=8192).contains(&self.precision_bits) {
            return usage(format!(
                "precision-bits must lie in {MIN_PRECISION_BITS}..=8192, got {}",
                self.precision_bits
            ));
        }
        if self.x.iter().any(|x| !x.is_finite()) {
            return usage("x positions must be finite");
        }
        if !(self.h.is_finite() && self.h != 0.0) {
            return usage("h must be finite and non-zero");
        }
        if !(self.alpha > 0.5 && self.alpha < 2.0 / 3.0) {
            return usage(format!("alpha must lie in (1/2, 2/3), got {}", self.alpha));
        }
        if let Some(&bad) = self.criteria.iter().find(|&&c| !(1..=12).contains(&c)) {
            return usage(format!("criterion ids run from 1 to 12, got {bad}"));
        }
        if matches!(self.command, Command::Simulate | Command::Compare)
            && (a + b).abs() > 1e-12 * (b - a)
        {
            return usage("the periodic domain must be symmetric, x-range -L/2:L/2");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }
}
