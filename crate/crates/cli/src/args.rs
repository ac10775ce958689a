//! Command line, config file and defaults, merged into a [`RunConfig`].

use crate::envelope::Format;
use crate::CliError;
use clap::{Parser, ValueEnum};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, TAU};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Node coefficients and their unitarity defect.
    Splitter,
    /// Exit-surface intensity profile of one blade.
    Borrmann,
    /// Post-selected node intensity over a θ grid.
    Pendellosung,
    /// Integrated transmitted and reflected intensity of one blade.
    Integrated,
    /// Integrated intensities over a range of plane counts.
    ThicknessScan,
    /// Exit intensities of a multi-blade interferometer over a χ grid.
    Interferometer,
    /// Three-blade fringe contrast over a range of plane counts.
    ContrastSweep,
    /// Analytic Laue-case amplitudes and blade angles.
    Ddref,
    /// Lattice model against the analytic reference.
    Crosscheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Splitter => "splitter",
            Command::Borrmann => "borrmann",
            Command::Pendellosung => "pendellosung",
            Command::Integrated => "integrated",
            Command::ThicknessScan => "thickness-scan",
            Command::Interferometer => "interferometer",
            Command::ContrastSweep => "contrast-sweep",
            Command::Ddref => "ddref",
            Command::Crosscheck => "crosscheck",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lauewalk", version, about = "Beam-splitter lattice simulations of Laue diffraction and neutron interferometers")]
pub struct Cli {
    pub command: Command,
    /// Planes per blade.
    #[arg(long)]
    pub planes: Option<usize>,
    /// Mixing angle θ.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub xi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub zeta: Option<f64>,
    /// Exit-surface node k ∈ [0, N] for pendellosung (lattice index 2k − N).
    #[arg(long, allow_negative_numbers = true)]
    pub node: Option<i64>,
    /// Raw lattice index for pendellosung; overrides --node.
    #[arg(long, allow_negative_numbers = true)]
    pub lattice_node: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_max: Option<f64>,
    #[arg(long)]
    pub theta_points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub chi_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub chi_max: Option<f64>,
    #[arg(long)]
    pub chi_points: Option<usize>,
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Dimensionless thickness A = πD/Δ_H (defaults to θ for crosscheck).
    #[arg(long = "A", alias = "a")]
    pub a: Option<f64>,
    /// Single Bragg deviation η; without it ddref scans the η grid.
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eta_max: Option<f64>,
    #[arg(long)]
    pub eta_points: Option<usize>,
    #[arg(long)]
    pub z_over_d: Option<f64>,
    #[arg(long)]
    pub blades: Option<usize>,
    /// Physical thickness of one plane, echoed as metadata only.
    #[arg(long)]
    pub plane_thickness_um: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// `key=value` file with defaults for any of the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Read all angles (θ, ξ, ζ and grid bounds) in degrees.
    #[arg(long)]
    pub degrees: bool,
}

/// Fully resolved run parameters; angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub planes: usize,
    pub theta: f64,
    pub xi: f64,
    pub zeta: f64,
    pub node: Option<i64>,
    pub lattice_node: Option<i64>,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_points: usize,
    pub chi_min: f64,
    pub chi_max: f64,
    pub chi_points: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub a: Option<f64>,
    pub eta: Option<f64>,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_points: usize,
    pub z_over_d: f64,
    pub blades: usize,
    pub plane_thickness_um: Option<f64>,
    pub format: Format,
    pub output: Option<PathBuf>,
}

pub const CONFIG_KEYS: &[&str] = &[
    "planes",
    "theta",
    "xi",
    "zeta",
    "node",
    "lattice-node",
    "theta-min",
    "theta-max",
    "theta-points",
    "chi-min",
    "chi-max",
    "chi-points",
    "n-min",
    "n-max",
    "A",
    "eta",
    "eta-min",
    "eta-max",
    "eta-points",
    "z-over-d",
    "blades",
    "plane-thickness-um",
    "format",
    "output",
    "degrees",
];

/// Parsed `key=value` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", lineno + 1)))?;
            let key = match key.trim() {
                "a" => "A".to_string(),
                k => k.replace('_', "-"),
            };
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key {key:?}", lineno + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Usage(format!("config: invalid value {v:?} for {key}")))
            })
            .transpose()
    }
}

struct Defaults {
    planes: usize,
    theta: f64,
    n_min: usize,
    n_max: usize,
}

fn defaults(cmd: Command) -> Defaults {
    let (planes, theta, n_min, n_max) = match cmd {
        Command::Splitter => (1, FRAC_PI_4, 1, 60),
        Command::Borrmann | Command::Integrated => (150, FRAC_PI_4, 1, 60),
        Command::Pendellosung => (50, FRAC_PI_4, 1, 60),
        Command::ThicknessScan => (1, FRAC_PI_8, 1, 60),
        Command::Interferometer | Command::Crosscheck => (100, FRAC_PI_4, 1, 60),
        Command::ContrastSweep => (100, 17.0 * PI / 36.0, 50, 300),
        Command::Ddref => (1, FRAC_PI_4, 1, 60),
    };
    Defaults {
        planes,
        theta,
        n_min,
        n_max,
    }
}

pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    resolve(cli, &cfg)
}

pub fn resolve(cli: Cli, cfg: &ConfigFile) -> Result<RunConfig, CliError> {
    fn pick<T: FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => cfg.get(key),
        }
    }
    let d = defaults(cli.command);
    let degrees = cli.degrees || cfg.get::<bool>("degrees")?.unwrap_or(false);
    let angle = |v: f64| if degrees { v.to_radians() } else { v };
    let ang = |flag: Option<f64>, key: &str, default: f64| -> Result<f64, CliError> {
        Ok(pick(flag, cfg, key)?.map(angle).unwrap_or(default))
    };

    let rc = RunConfig {
        command: cli.command,
        planes: pick(cli.planes, cfg, "planes")?.unwrap_or(d.planes),
        theta: ang(cli.theta, "theta", d.theta)?,
        xi: ang(cli.xi, "xi", 0.0)?,
        zeta: ang(cli.zeta, "zeta", 0.0)?,
        node: pick(cli.node, cfg, "node")?,
        lattice_node: pick(cli.lattice_node, cfg, "lattice-node")?,
        theta_min: ang(cli.theta_min, "theta-min", 0.0)?,
        theta_max: ang(cli.theta_max, "theta-max", PI)?,
        theta_points: pick(cli.theta_points, cfg, "theta-points")?.unwrap_or(500),
        chi_min: ang(cli.chi_min, "chi-min", 0.0)?,
        chi_max: ang(cli.chi_max, "chi-max", TAU)?,
        chi_points: pick(cli.chi_points, cfg, "chi-points")?.unwrap_or(128),
        n_min: pick(cli.n_min, cfg, "n-min")?.unwrap_or(d.n_min),
        n_max: pick(cli.n_max, cfg, "n-max")?.unwrap_or(d.n_max),
        a: pick(cli.a, cfg, "A")?,
        eta: pick(cli.eta, cfg, "eta")?,
        eta_min: pick(cli.eta_min, cfg, "eta-min")?.unwrap_or(-5.0),
        eta_max: pick(cli.eta_max, cfg, "eta-max")?.unwrap_or(5.0),
        eta_points: pick(cli.eta_points, cfg, "eta-points")?.unwrap_or(201),
        z_over_d: pick(cli.z_over_d, cfg, "z-over-d")?.unwrap_or(1.0),
        blades: pick(cli.blades, cfg, "blades")?.unwrap_or(3),
        plane_thickness_um: pick(cli.plane_thickness_um, cfg, "plane-thickness-um")?,
        format: pick(cli.format, cfg, "format")?.unwrap_or(Format::Csv),
        output: pick(cli.output, cfg, "output")?,
    };
    rc.validate()?;
    Ok(rc)
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        for (name, v) in [
            ("theta", self.theta),
            ("xi", self.xi),
            ("zeta", self.zeta),
            ("theta-min", self.theta_min),
            ("theta-max", self.theta_max),
            ("chi-min", self.chi_min),
            ("chi-max", self.chi_max),
            ("eta-min", self.eta_min),
            ("eta-max", self.eta_max),
            ("z-over-d", self.z_over_d),
        ] {
            if !v.is_finite() {
                return usage(format!("--{name} must be finite"));
            }
        }
        for (name, v) in [("theta-points", self.theta_points), ("chi-points", self.chi_points), ("eta-points", self.eta_points)] {
            if v == 0 {
                return usage(format!("--{name} must be ≥ 1"));
            }
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return usage(format!("need 1 ≤ n-min ≤ n-max (got {}..{})", self.n_min, self.n_max));
        }
        if self.planes == 0 && self.command != Command::Splitter {
            return usage("--planes must be ≥ 1".into());
        }
        if self.chi_min >= self.chi_max {
            return usage("need chi-min < chi-max".into());
        }
        if self.blades < 2 {
            return usage("--blades must be ≥ 2".into());
        }
        Ok(())
    }

    /// `chi_points` phases on the half-open interval `[chi_min, chi_max)`.
    pub fn chi_grid(&self) -> Vec<f64> {
        let span = self.chi_max - self.chi_min;
        (0..self.chi_points)
            .map(|k| self.chi_min + span * k as f64 / self.chi_points as f64)
            .collect()
    }

    /// Every resolved parameter, for the metadata header.
    pub fn echo(&self) -> Vec<(&'static str, crate::envelope::Cell)> {
        vec![
            ("command", self.command.name().into()),
            ("planes", self.planes.into()),
            ("theta", self.theta.into()),
            ("xi", self.xi.into()),
            ("zeta", self.zeta.into()),
            ("node", self.node.into()),
            ("lattice-node", self.lattice_node.into()),
            ("theta-min", self.theta_min.into()),
            ("theta-max", self.theta_max.into()),
            ("theta-points", self.theta_points.into()),
            ("chi-min", self.chi_min.into()),
            ("chi-max", self.chi_max.into()),
            ("chi-points", self.chi_points.into()),
            ("n-min", self.n_min.into()),
            ("n-max", self.n_max.into()),
            ("A", self.a.into()),
            ("eta", self.eta.into()),
            ("eta-min", self.eta_min.into()),
            ("eta-max", self.eta_max.into()),
            ("eta-points", self.eta_points.into()),
            ("z-over-d", self.z_over_d.into()),
            ("blades", self.blades.into()),
            ("plane-thickness-um", self.plane_thickness_um.into()),
            ("format", self.format.name().into()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_and_defaults() {
        let rc = parse_args(["lauewalk", "borrmann", "--planes", "150", "--theta", "0.7853981634"]).unwrap();
        assert_eq!(rc.command, Command::Borrmann);
        assert_eq!(rc.planes, 150);
        assert!((rc.theta - FRAC_PI_4).abs() < 1e-10);
        assert_eq!((rc.xi, rc.zeta), (0.0, 0.0));
        assert_eq!(rc.chi_grid().len(), 128);
        assert_eq!(rc.theta_points, 500);
    }

    #[test]
    fn flag_beats_config() {
        let cfg = ConfigFile::parse("# run\ntheta=0.3926990817\nplanes = 40 # inline\n").unwrap();
        let cli = Cli::try_parse_from(["lauewalk", "integrated", "--theta", "0.5"]).unwrap();
        let rc = resolve(cli, &cfg).unwrap();
        assert_eq!(rc.theta, 0.5);
        assert_eq!(rc.planes, 40);
    }

    #[test]
    fn config_rejects_unknown_and_malformed() {
        assert!(matches!(ConfigFile::parse("colour=red"), Err(CliError::Usage(_))));
        assert!(matches!(ConfigFile::parse("theta"), Err(CliError::Usage(_))));
        let cfg = ConfigFile::parse("theta=abc").unwrap();
        let cli = Cli::try_parse_from(["lauewalk", "integrated"]).unwrap();
        assert!(matches!(resolve(cli, &cfg), Err(CliError::Usage(_))));
    }

    #[test]
    fn degrees_switch() {
        let rc = parse_args(["lauewalk", "integrated", "--theta", "45", "--degrees"]).unwrap();
        assert!((rc.theta - FRAC_PI_4).abs() < 1e-15);
        let cfg = ConfigFile::parse("degrees=true\ntheta=90").unwrap();
        let rc = resolve(Cli::try_parse_from(["lauewalk", "integrated"]).unwrap(), &cfg).unwrap();
        assert!((rc.theta - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn usage_errors() {
        assert!(matches!(parse_args(["lauewalk", "nonsense"]), Err(CliError::Clap(_))));
        assert!(matches!(parse_args(["lauewalk", "borrmann", "--bogus", "1"]), Err(CliError::Clap(_))));
        assert!(matches!(parse_args(["lauewalk", "borrmann", "--planes", "0"]), Err(CliError::Usage(_))));
        assert!(matches!(
            parse_args(["lauewalk", "thickness-scan", "--n-min", "9", "--n-max", "3"]),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(parse_args(["lauewalk", "interferometer", "--chi-points", "0"]), Err(CliError::Usage(_))));
    }

    #[test]
    fn negative_values_parse() {
        let rc = parse_args(["lauewalk", "ddref", "--eta", "-2.5", "--A", "1"]).unwrap();
        assert_eq!(rc.eta, Some(-2.5));
        assert_eq!(rc.a, Some(1.0));
    }
}
