//! Experiment configuration files and named presets.
//!
//! Configs are TOML. Energies, temperatures and couplings are in natural
//! units (ħ = k_B = 1, energies in units of the cold-qubit splitting); times
//! are in inverse energy units. `zeta = inf` selects harmonic baths.
//!
//! ```toml
//! run = "evolve"
//!
//! [refrigerator]
//! omega_c = 1.0
//! omega_h = 2.0
//! omega_w = 1.0
//! g = 0.1
//!
//! [baths]
//! zeta = inf
//! cutoff = 5000.0
//!
//! [baths.cold]
//! temperature = 1.0
//! kappa = 0.0001
//! omega0 = 1.0
//! # [baths.hot] and [baths.work] alike
//!
//! [time]
//! grid_points = 2001
//! spacing = "log"
//! # t_final = 1e5, omitted for the automatic horizon
//!
//! [sweep]
//! zeta = [10.0, 50.0, inf]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bath::{Anharmonicity, BathSpec};
use crate::error::{Error, Result};
use crate::liouvillian::Baths;
use crate::operators::RefrigeratorSpec;

/// Default ζ grid bracketing the reported thresholds.
pub const DEFAULT_ZETA_GRID: [f64; 9] = [10.0, 20.0, 50.0, 100.0, 200.0, 400.0, 1000.0, 1e4, f64::INFINITY];

pub const PRESET_NAMES: [&str; 2] = ["transient-regime", "steady-regime"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Evolve,
    Steady,
    SweepZeta,
    MinTemp,
    Currents,
    Cop,
}

impl RunKind {
    pub fn label(self) -> &'static str {
        match self {
            RunKind::Evolve => "evolve",
            RunKind::Steady => "steady",
            RunKind::SweepZeta => "sweep-zeta",
            RunKind::MinTemp => "min-temp",
            RunKind::Currents => "currents",
            RunKind::Cop => "cop",
        }
    }
}

impl fmt::Display for RunKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefrigeratorConfig {
    pub omega_c: f64,
    pub omega_h: f64,
    pub omega_w: f64,
    pub g: f64,
}

/// One bath; `kappa` is the absolute coupling (energy units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub temperature: f64,
    pub kappa: f64,
    /// Reference frequency of the Ohmic density `J ∝ κ |ω| / ω0`.
    pub omega0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathsConfig {
    /// Anharmonicity shared by all three baths; `inf` is harmonic.
    pub zeta: f64,
    pub cutoff: f64,
    pub cold: BathConfig,
    pub hot: BathConfig,
    pub work: BathConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    /// `t = 0` followed by points log-spaced over six decades below `t_final`.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Omitted: 50 slowest relaxation times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    pub grid_points: usize,
    pub spacing: Spacing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub zeta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub refrigerator: RefrigeratorConfig,
    pub baths: BathsConfig,
    pub time: TimeConfig,
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    /// Named preset. Couplings follow `κ_α = c_α ω_{0,α}`.
    pub fn preset(name: &str) -> Result<Self> {
        let (g, scale) = match name {
            "transient-regime" => (0.8, [1e-4, 1e-5, 1e-3]),
            "steady-regime" => (0.1, [1e-4, 1e-4, 1e-4]),
            _ => {
                return Err(Error::Config(format!(
                    "unknown preset {name:?} (available: {})",
                    PRESET_NAMES.join(", ")
                )))
            }
        };
        let omega = [1.0, 2.0, 1.0];
        let temperature = [1.0, 1.0, 2.0];
        let bath = |i: usize| BathConfig {
            temperature: temperature[i],
            kappa: scale[i] * omega[i],
            omega0: omega[i],
        };
        Ok(Self {
            run: RunKind::Evolve,
            output: None,
            refrigerator: RefrigeratorConfig {
                omega_c: omega[0],
                omega_h: omega[1],
                omega_w: omega[2],
                g,
            },
            baths: BathsConfig {
                zeta: f64::INFINITY,
                cutoff: crate::bath::DEFAULT_CUTOFF,
                cold: bath(0),
                hot: bath(1),
                work: bath(2),
            },
            time: TimeConfig {
                t_final: None,
                grid_points: 2001,
                spacing: Spacing::Log,
            },
            sweep: SweepConfig {
                zeta: DEFAULT_ZETA_GRID.to_vec(),
            },
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn digest(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    /// Checks everything that can be checked without building a generator.
    pub fn validate(&self) -> Result<()> {
        self.refrigerator()?;
        self.baths()?;
        if self.time.grid_points < 2 {
            return Err(Error::Config(format!(
                "time.grid_points must be at least 2, got {}",
                self.time.grid_points
            )));
        }
        if let Some(t) = self.time.t_final {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("time.t_final must be positive and finite, got {t}")));
            }
        }
        if self.sweep.zeta.is_empty() {
            return Err(Error::Config("sweep.zeta must not be empty".into()));
        }
        for &z in &self.sweep.zeta {
            zeta(z)?;
        }
        Ok(())
    }

    pub fn refrigerator(&self) -> Result<RefrigeratorSpec<f64>> {
        let r = &self.refrigerator;
        RefrigeratorSpec::new(r.omega_c, r.omega_h, r.omega_w, r.g).map_err(|e| Error::Config(e.to_string()))
    }

    /// Baths at the configured ζ.
    pub fn baths(&self) -> Result<Baths<f64>> {
        self.baths_at(self.baths.zeta)
    }

    /// Baths with ζ overridden.
    pub fn baths_at(&self, z: f64) -> Result<Baths<f64>> {
        let zeta = zeta(z)?;
        let b = |c: &BathConfig| {
            BathSpec::new(c.temperature, c.kappa, zeta, self.baths.cutoff, c.omega0).map_err(|e| Error::Config(e.to_string()))
        };
        Ok(Baths::new(b(&self.baths.cold)?, b(&self.baths.hot)?, b(&self.baths.work)?))
    }

    /// Output grid over `[0, t_final]`.
    pub fn time_grid(&self, t_final: f64) -> Vec<f64> {
        time_grid(t_final, self.time.grid_points, self.time.spacing)
    }
}

fn zeta(z: f64) -> Result<Anharmonicity<f64>> {
    Anharmonicity::from_zeta(z).map_err(|e| Error::Config(e.to_string()))
}

pub fn time_grid(t_final: f64, points: usize, spacing: Spacing) -> Vec<f64> {
    let n = points.max(2) - 1;
    match spacing {
        Spacing::Linear => (0..=n).map(|i| t_final * i as f64 / n as f64).collect(),
        Spacing::Log => {
            let decades = 6.0;
            let mut grid = vec![0.0];
            grid.extend((0..n).map(|i| {
                let exponent = decades * ((i as f64) / ((n - 1).max(1) as f64) - 1.0);
                t_final * 10f64.powf(exponent)
            }));
            *grid.last_mut().unwrap() = t_final;
            grid
        }
    }
}

/// Parses a ζ list such as `10,50,inf`.
pub fn parse_zeta_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|item| {
            let item = item.trim();
            let z = Anharmonicity::<f64>::from_str(item).map_err(|e| Error::Config(format!("zeta {item:?}: {e}")))?;
            Ok(z.zeta_f64())
        })
        .collect()
}

/// Formats ζ for CSV output; infinity is `inf`.
pub fn format_zeta(z: f64) -> String {
    if z.is_infinite() {
        "inf".into()
    } else {
        format!("{z}")
    }
}
