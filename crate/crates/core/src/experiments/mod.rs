//! Reproduction harness: presets, runs, sweeps and their CSV output.
//!
//! Everything here is `f64`; the physics modules underneath are generic.

pub mod config;
mod output;
mod run;
mod sweep;

pub use config::{ExperimentConfig, RunKind, Spacing, DEFAULT_ZETA_GRID, PRESET_NAMES};
pub use output::{
    read_states_csv, write_cop_csv, write_crossings_csv, write_currents_csv, write_states_csv, write_steady_csv,
    write_sweep_csv, write_thermo_csv, COP_HEADER, CROSSINGS_HEADER, CURRENTS_HEADER, SWEEP_HEADER, THERMO_HEADER,
};
pub use run::{
    cop_crossings, run_currents_and_cop, run_evolution, run_steady, run_steady_at, CopCrossing, CurrentsRun,
    EvolutionRun, SteadyRun,
};
pub use sweep::{
    minimum_temperature, run_min_temp_sweep, run_zeta_sweep, MinimumTemperature, SweepFailure, SweepPoint,
    SweepResult,
};

use crate::dynamics::relaxation_spectrum;
use crate::error::Result;
use crate::liouvillian::{build_generator, Generator};

/// Slowest relaxation times covered by the automatic horizon.
pub const HORIZON_RELAXATION_TIMES: f64 = 50.0;

/// `‖L vec(ρ)‖` below which a sample counts as stationary.
pub const STEADY_DERIVATIVE: f64 = 1e-12;

/// Consecutive stationary samples that end a search.
pub const STEADY_SAMPLES: usize = 3;

/// `50 / γ_min` with `γ_min` the slowest nonzero relaxation rate.
pub fn relaxation_horizon(generator: &Generator<f64>) -> f64 {
    HORIZON_RELAXATION_TIMES / relaxation_spectrum(generator).gap
}

fn generator_at(config: &ExperimentConfig, zeta: f64) -> Result<Generator<f64>> {
    let context = || format!("zeta = {}", config::format_zeta(zeta));
    let spec = config.refrigerator()?;
    let baths = config.baths_at(zeta).map_err(|e| e.context(context()))?;
    build_generator(&spec, &baths).map_err(|e| e.context(context()))
}

/// Ascending, deduplicated copy of a ζ grid.
fn sorted_grid(zetas: &[f64]) -> Vec<f64> {
    let mut grid = zetas.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}
