//! Command line, config file and the merged run configuration.
//!
//! The config file is flat TOML using the same keys as the long flags
//! (with underscores). Flags override the file; the file overrides the
//! built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qubit_lgti::{LgQuantity, StepControl, SystemParams, Temperature};
use serde::Deserialize;

use crate::error::CliError;

pub const DEFAULT_OMEGA0: f64 = 0.5;
pub const DEFAULT_RABI: f64 = 1.0;
pub const DEFAULT_RATIO_R: f64 = 0.05;
pub const DEFAULT_BETA: f64 = 10.0;
pub const DEFAULT_T_MAX: f64 = 25.0;
pub const DEFAULT_POINTS: usize = 2001;

#[derive(Debug, Parser)]
#[command(
    name = "qubit-lgti",
    version,
    about = "Leggett-Garg tests for a driven atom in a squeezed thermal bath"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Ground-state probability from the closed form and the master-equation oracle.
    Dynamics,
    /// Time series of K+, K-, F, p_g and coherence, or a violation report.
    Lgti,
    /// One violation report per value of the sweep axis.
    Sweep,
    /// Data for one of the preset figures.
    Figure {
        #[arg(value_enum)]
        id: FigureId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl FigureId {
    pub fn as_str(&self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    #[value(name = "ratio_r")]
    RatioR,
    Beta,
    #[value(name = "squeeze_s")]
    SqueezeS,
    Xi,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::RatioR => "ratio_r",
            SweepParam::Beta => "beta",
            SweepParam::SqueezeS => "squeeze_s",
            SweepParam::Xi => "xi",
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Flat TOML file with any of the keys below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (directory for `figure`); stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Rabi frequency Ω; sets the time unit.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rabi: Option<f64>,
    /// Spontaneous emission rate γ₀.
    #[arg(
        long,
        global = true,
        allow_negative_numbers = true,
        conflicts_with = "ratio_r"
    )]
    pub gamma0: Option<f64>,
    /// γ₀/Ω, an alternative to --gamma0.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub ratio_r: Option<f64>,
    /// Inverse bath temperature.
    #[arg(
        long,
        global = true,
        allow_negative_numbers = true,
        conflicts_with = "zero_temperature"
    )]
    pub beta: Option<f64>,
    /// Atomic transition frequency ω₀.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub omega0: Option<f64>,
    /// Squeezing magnitude s.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub squeeze_s: Option<f64>,
    /// Measurement sharpness in (0, 1].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub xi: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    /// Number of time samples, endpoints included.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rtol: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub atol: Option<f64>,
    #[arg(long, global = true)]
    pub zero_temperature: bool,
    /// k_plus, k_minus or k3.
    #[arg(long, global = true)]
    pub which: Option<LgQuantity>,
    #[arg(long, global = true, value_enum)]
    pub sweep_param: Option<SweepParam>,
    /// Comma-separated sweep values.
    #[arg(
        long,
        global = true,
        allow_negative_numbers = true,
        value_delimiter = ',',
        conflicts_with = "sweep_linspace"
    )]
    pub sweep_values: Option<Vec<f64>>,
    /// START,STOP,COUNT
    #[arg(
        long,
        global = true,
        allow_negative_numbers = true,
        value_delimiter = ',',
        num_args = 1
    )]
    pub sweep_linspace: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub rabi: Option<f64>,
    pub gamma0: Option<f64>,
    pub ratio_r: Option<f64>,
    pub beta: Option<f64>,
    pub zero_temperature: Option<bool>,
    pub omega0: Option<f64>,
    pub squeeze_s: Option<f64>,
    pub xi: Option<f64>,
    pub t_max: Option<f64>,
    pub points: Option<usize>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub which: Option<String>,
    pub sweep_param: Option<SweepParam>,
    pub sweep_values: Option<Vec<f64>>,
    pub sweep_linspace: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping {
    Gamma0(f64),
    Ratio(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub omega0: f64,
    pub rabi: f64,
    pub damping: Damping,
    pub temperature: Temperature,
    pub squeeze_s: f64,
    pub xi: f64,
    pub t_max: f64,
    pub points: usize,
    pub control: StepControl,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub which: LgQuantity,
    pub sweep: Option<Sweep>,
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::merge(flags, file)
    }

    pub fn merge(flags: &Flags, file: FileConfig) -> Result<Self, CliError> {
        if file.gamma0.is_some() && file.ratio_r.is_some() {
            return Err(CliError::Config(
                "set only one of gamma0 and ratio_r".into(),
            ));
        }
        if file.zero_temperature == Some(true) && file.beta.is_some() {
            return Err(CliError::Config(
                "set only one of beta and zero_temperature".into(),
            ));
        }
        if file.sweep_values.is_some() && file.sweep_linspace.is_some() {
            return Err(CliError::Config(
                "set only one of sweep_values and sweep_linspace".into(),
            ));
        }

        let damping = match (flags.gamma0, flags.ratio_r, file.gamma0, file.ratio_r) {
            (Some(g), _, _, _) => Damping::Gamma0(g),
            (_, Some(r), _, _) => Damping::Ratio(r),
            (_, _, Some(g), _) => Damping::Gamma0(g),
            (_, _, _, Some(r)) => Damping::Ratio(r),
            _ => Damping::Ratio(DEFAULT_RATIO_R),
        };
        let temperature = if flags.zero_temperature {
            Temperature::Zero
        } else if let Some(b) = flags.beta {
            Temperature::Beta(b)
        } else if file.zero_temperature == Some(true) {
            Temperature::Zero
        } else {
            Temperature::Beta(file.beta.unwrap_or(DEFAULT_BETA))
        };
        let which = match (flags.which, &file.which) {
            (Some(w), _) => w,
            (None, Some(w)) => w.parse().map_err(CliError::Config)?,
            (None, None) => LgQuantity::KPlus,
        };

        let sweep_param = flags.sweep_param.or(file.sweep_param);
        let values = match (&flags.sweep_values, &flags.sweep_linspace) {
            (Some(v), _) => Some(v.clone()),
            (_, Some(l)) => Some(linspace(l)?),
            _ => match (&file.sweep_values, &file.sweep_linspace) {
                (Some(v), _) => Some(v.clone()),
                (_, Some(l)) => Some(linspace(l)?),
                _ => None,
            },
        };
        let sweep = match (sweep_param, values) {
            (Some(param), Some(values)) => Some(Sweep { param, values }),
            (Some(param), None) => {
                return Err(CliError::Config(format!(
                    "sweep over {} has no values",
                    param.as_str()
                )))
            }
            (None, Some(_)) => {
                return Err(CliError::Config(
                    "sweep values given without sweep_param".into(),
                ))
            }
            (None, None) => None,
        };

        let defaults = StepControl::default();
        let cfg = RunConfig {
            omega0: flags.omega0.or(file.omega0).unwrap_or(DEFAULT_OMEGA0),
            rabi: flags.rabi.or(file.rabi).unwrap_or(DEFAULT_RABI),
            damping,
            temperature,
            squeeze_s: flags.squeeze_s.or(file.squeeze_s).unwrap_or(0.0),
            xi: flags.xi.or(file.xi).unwrap_or(1.0),
            t_max: flags.t_max.or(file.t_max).unwrap_or(DEFAULT_T_MAX),
            points: flags.points.or(file.points).unwrap_or(DEFAULT_POINTS),
            control: StepControl {
                rtol: flags.rtol.or(file.rtol).unwrap_or(defaults.rtol),
                atol: flags.atol.or(file.atol).unwrap_or(defaults.atol),
                ..defaults
            },
            format: flags.format.or(file.format).unwrap_or(Format::Csv),
            out: flags.out.clone().or(file.out),
            which,
            sweep,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(CliError::Config(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if self.points < 2 {
            return Err(CliError::Config(format!(
                "points must be at least 2, got {}",
                self.points
            )));
        }
        let StepControl { rtol, atol, .. } = self.control;
        if !(rtol > 0.0 && rtol < 1.0 && atol > 0.0 && atol.is_finite()) {
            return Err(CliError::Config(format!(
                "invalid tolerances rtol = {rtol}, atol = {atol}"
            )));
        }
        let sweeping_xi = matches!(&self.sweep, Some(s) if s.param == SweepParam::Xi);
        if !sweeping_xi && !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(CliError::Config(format!(
                "xi must lie in (0, 1], got {}",
                self.xi
            )));
        }
        // single-point parameters are checked eagerly; sweep points per row
        if self.sweep.is_none() {
            self.params(None)?;
        }
        Ok(())
    }

    /// Physical parameters, with one sweep coordinate substituted.
    pub fn params(&self, point: Option<(SweepParam, f64)>) -> Result<SystemParams, CliError> {
        let mut damping = self.damping;
        let mut temperature = self.temperature;
        let mut squeeze_s = self.squeeze_s;
        match point {
            Some((SweepParam::RatioR, r)) => damping = Damping::Ratio(r),
            Some((SweepParam::Beta, b)) => temperature = Temperature::Beta(b),
            Some((SweepParam::SqueezeS, s)) => squeeze_s = s,
            Some((SweepParam::Xi, _)) | None => {}
        }
        let p = match damping {
            Damping::Gamma0(g) => {
                SystemParams::new(self.omega0, self.rabi, g, temperature, squeeze_s)?
            }
            Damping::Ratio(r) => {
                if !(r >= 0.0) {
                    return Err(CliError::Config(format!(
                        "ratio_r must be non-negative, got {r}"
                    )));
                }
                SystemParams::from_ratio(self.omega0, self.rabi, r, temperature, squeeze_s)?
            }
        };
        Ok(p)
    }

    /// Sharpness at a sweep coordinate.
    pub fn xi_at(&self, point: Option<(SweepParam, f64)>) -> Result<f64, CliError> {
        let xi = match point {
            Some((SweepParam::Xi, xi)) => xi,
            _ => self.xi,
        };
        if !(xi > 0.0 && xi <= 1.0) {
            return Err(CliError::Config(format!("xi must lie in (0, 1], got {xi}")));
        }
        Ok(xi)
    }

    /// Evenly spaced times on [0, t_max], endpoints exact.
    pub fn times(&self) -> Vec<f64> {
        time_grid(self.t_max, self.points)
    }
}

pub fn time_grid(t_max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| {
            if i + 1 == points {
                t_max
            } else {
                t_max * i as f64 / (points - 1) as f64
            }
        })
        .collect()
}

fn linspace(spec: &[f64]) -> Result<Vec<f64>, CliError> {
    let &[start, stop, count] = spec else {
        return Err(CliError::Config(format!(
            "sweep_linspace needs START,STOP,COUNT, got {} value(s)",
            spec.len()
        )));
    };
    if !(start.is_finite() && stop.is_finite()) || count < 1.0 || count.fract() != 0.0 {
        return Err(CliError::Config(format!(
            "invalid sweep_linspace {start},{stop},{count}"
        )));
    }
    let n = count as usize;
    if n == 1 {
        return Ok(vec![start]);
    }
    Ok((0..n)
        .map(|i| {
            if i + 1 == n {
                stop
            } else {
                start + (stop - start) * i as f64 / (n - 1) as f64
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Flags {
        let mut full = vec!["qubit-lgti", "lgti"];
        full.extend_from_slice(args);
        Cli::try_parse_from(full).unwrap().flags
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::merge(&parse(&[]), FileConfig::default()).unwrap();
        let p = cfg.params(None).unwrap();
        assert_eq!(p.omega0, 0.5);
        assert_eq!(p.rabi, 1.0);
        assert_eq!(p.gamma0, 0.05);
        assert_eq!(p.temperature, Temperature::Beta(10.0));
        assert_eq!(cfg.times().len(), 2001);
        assert_eq!(*cfg.times().last().unwrap(), 25.0);
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str("beta = 2.0\nxi = 0.5\nratio_r = 0.3").unwrap();
        let cfg = RunConfig::merge(&parse(&["--xi", "0.7", "--zero-temperature"]), file).unwrap();
        assert_eq!(cfg.xi, 0.7);
        assert_eq!(cfg.temperature, Temperature::Zero);
        assert_eq!(cfg.damping, Damping::Ratio(0.3));
        let file: FileConfig = toml::from_str("zero_temperature = true").unwrap();
        let cfg = RunConfig::merge(&parse(&["--beta", "3"]), file).unwrap();
        assert_eq!(cfg.temperature, Temperature::Beta(3.0));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(toml::from_str::<FileConfig>("betta = 2.0").is_err());
        assert!(toml::from_str::<FileConfig>("beta = \"hot\"").is_err());
        let file: FileConfig = toml::from_str("beta = 1.0\nzero_temperature = true").unwrap();
        assert!(RunConfig::merge(&parse(&[]), file).is_err());
        let file: FileConfig = toml::from_str("gamma0 = 1.0\nratio_r = 1.0").unwrap();
        assert!(RunConfig::merge(&parse(&[]), file).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        for args in [
            &["--points", "1"][..],
            &["--xi", "0"],
            &["--t-max", "-1"],
            &["--beta", "-2"],
            &["--rtol", "0"],
            &["--sweep-param", "beta"],
        ] {
            assert!(
                RunConfig::merge(&parse(args), FileConfig::default()).is_err(),
                "{args:?}"
            );
        }
    }

    #[test]
    fn sweep_specs() {
        let cfg = RunConfig::merge(
            &parse(&["--sweep-param", "xi", "--sweep-linspace", "0.1,1.0,10"]),
            FileConfig::default(),
        )
        .unwrap();
        let sweep = cfg.sweep.unwrap();
        assert_eq!(sweep.param, SweepParam::Xi);
        assert_eq!(sweep.values.len(), 10);
        assert_eq!(sweep.values[0], 0.1);
        assert_eq!(sweep.values[9], 1.0);
        let file: FileConfig =
            toml::from_str("sweep_param = \"beta\"\nsweep_values = [10.0, 1, 1e-3]").unwrap();
        let cfg = RunConfig::merge(&parse(&[]), file).unwrap();
        assert_eq!(cfg.sweep.unwrap().values, vec![10.0, 1.0, 1e-3]);
        assert!(linspace(&[0.0, 1.0, 2.5]).is_err());
        assert!(linspace(&[0.0, 1.0]).is_err());
    }
}
