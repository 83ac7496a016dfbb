use rayon::prelude::*;

use crate::dynamics::{evolve, initial_product_gibbs, steady_state, DensityMatrix, Trajectory, STATE_TOLERANCE};
use crate::error::{Error, Result};
use crate::liouvillian::{vectorize, Generator};
use crate::observables::ThermoReadout;

use super::config::{format_zeta, ExperimentConfig};
use super::{generator_at, relaxation_horizon, sorted_grid};

/// One time evolution with its readouts.
#[derive(Debug, Clone)]
pub struct EvolutionRun {
    pub zeta: f64,
    pub generator: Generator<f64>,
    pub trajectory: Trajectory<f64>,
    pub readouts: Vec<ThermoReadout<f64>>,
}

/// Null-space steady state with its readout.
#[derive(Debug, Clone)]
pub struct SteadyRun {
    pub zeta: f64,
    pub generator: Generator<f64>,
    pub state: DensityMatrix<f64>,
    pub readout: ThermoReadout<f64>,
    /// `‖L vec(ρ_ss)‖`.
    pub residual: f64,
}

/// Where the COP at one ζ crosses the harmonic-bath COP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopCrossing {
    pub zeta: f64,
    /// Sign changes of `COP_ζ − COP_∞` over the grid.
    pub count: usize,
    /// Linearly interpolated time of the first sign change.
    pub first_time: Option<f64>,
    /// `COP_ζ − COP_∞` at the first grid time where both are defined.
    pub initial_difference: Option<f64>,
}

/// Heat-current and COP traces for several ζ on a common grid.
#[derive(Debug, Clone)]
pub struct CurrentsRun {
    pub times: Vec<f64>,
    /// Ascending in ζ; always ends with the harmonic reference.
    pub series: Vec<EvolutionRun>,
    pub steady: Vec<SteadyRun>,
    /// One entry per finite ζ.
    pub crossings: Vec<CopCrossing>,
}

fn check_states(zeta: f64, trajectory: &Trajectory<f64>) -> Result<()> {
    for (t, rho) in trajectory.times.iter().zip(&trajectory.states) {
        let d = rho.defects();
        if !d.is_valid() {
            return Err(Error::Invariant(format!(
                "state at t = {t:e} (zeta = {}) violates the {STATE_TOLERANCE:e} tolerances: \
                 trace {:e}, hermiticity {:e}, min eigenvalue {:e}",
                format_zeta(zeta),
                d.trace,
                d.hermiticity,
                d.min_eigenvalue
            )));
        }
    }
    Ok(())
}

fn evolve_at(generator: Generator<f64>, zeta: f64, config: &ExperimentConfig, t_final: f64) -> Result<EvolutionRun> {
    let context = || format!("evolution at zeta = {}", format_zeta(zeta));
    let rho0 = initial_product_gibbs(generator.refrigerator(), generator.baths());
    let grid = config.time_grid(t_final);
    let trajectory = evolve(&generator, &rho0, t_final, &grid).map_err(|e| e.context(context()))?;
    log::info!(
        "zeta = {}: {} accepted / {} rejected steps, max drift {:e}",
        format_zeta(zeta),
        trajectory.stats.accepted,
        trajectory.stats.rejected,
        trajectory.stats.max_trace_drift.max(trajectory.stats.max_hermiticity_drift)
    );
    check_states(zeta, &trajectory)?;
    let readouts = trajectory
        .states
        .iter()
        .map(|rho| ThermoReadout::measure(&generator, rho))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.context(context()))?;
    Ok(EvolutionRun {
        zeta,
        generator,
        trajectory,
        readouts,
    })
}

/// Time evolution at the configured ζ from the product Gibbs state.
pub fn run_evolution(config: &ExperimentConfig) -> Result<EvolutionRun> {
    let zeta = config.baths.zeta;
    let generator = generator_at(config, zeta)?;
    let t_final = config.time.t_final.unwrap_or_else(|| relaxation_horizon(&generator));
    evolve_at(generator, zeta, config, t_final)
}

pub fn run_steady(config: &ExperimentConfig) -> Result<SteadyRun> {
    run_steady_at(config, config.baths.zeta)
}

/// Steady state with ζ overridden.
pub fn run_steady_at(config: &ExperimentConfig, zeta: f64) -> Result<SteadyRun> {
    let generator = generator_at(config, zeta)?;
    let context = || format!("steady state at zeta = {}", format_zeta(zeta));
    let state = steady_state(&generator).map_err(|e| e.context(context()))?;
    let readout = ThermoReadout::measure(&generator, &state).map_err(|e| e.context(context()))?;
    let residual = generator.apply_vectorized(&vectorize(state.matrix())).norm();
    Ok(SteadyRun {
        zeta,
        generator,
        state,
        readout,
        residual,
    })
}

/// Sign changes of `COP_ζ − COP_∞` along a common grid.
pub fn cop_crossings(
    zeta: f64,
    times: &[f64],
    readouts: &[ThermoReadout<f64>],
    reference: &[ThermoReadout<f64>],
) -> CopCrossing {
    let diffs = times
        .iter()
        .zip(readouts.iter().zip(reference))
        .filter_map(|(&t, (a, b))| Some((t, a.cop.value()? - b.cop.value()?)));
    let mut count = 0;
    let mut first_time = None;
    let mut initial_difference = None;
    let mut last: Option<(f64, f64)> = None;
    for (t, d) in diffs {
        initial_difference.get_or_insert(d);
        if d == 0.0 {
            continue;
        }
        if let Some((t0, d0)) = last {
            if d0.signum() != d.signum() {
                count += 1;
                first_time.get_or_insert(t0 + (t - t0) * d0 / (d0 - d));
            }
        }
        last = Some((t, d));
    }
    CopCrossing {
        zeta,
        count,
        first_time,
        initial_difference,
    }
}

/// Currents and COP for every ζ of the sweep grid plus the harmonic reference.
pub fn run_currents_and_cop(config: &ExperimentConfig) -> Result<CurrentsRun> {
    let mut grid = config.sweep.zeta.clone();
    grid.push(f64::INFINITY);
    let grid = sorted_grid(&grid);
    let generators = grid
        .iter()
        .map(|&z| generator_at(config, z))
        .collect::<Result<Vec<_>>>()?;
    // common horizon so all traces share one grid
    let t_final = config
        .time
        .t_final
        .unwrap_or_else(|| generators.iter().map(relaxation_horizon).fold(0.0, f64::max));
    let series = generators
        .into_par_iter()
        .zip(grid.par_iter())
        .map(|(g, &z)| evolve_at(g, z, config, t_final))
        .collect::<Result<Vec<_>>>()?;
    let steady = grid
        .par_iter()
        .map(|&z| run_steady_at(config, z))
        .collect::<Result<Vec<_>>>()?;
    let times = series[0].trajectory.times.clone();
    let reference = &series.last().expect("grid contains the harmonic reference").readouts;
    let crossings = series
        .iter()
        .filter(|s| s.zeta.is_finite())
        .map(|s| cop_crossings(s.zeta, &times, &s.readouts, reference))
        .collect();
    Ok(CurrentsRun {
        times,
        series,
        steady,
        crossings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{Cop, Temperature};

    fn readout(cop: f64) -> ThermoReadout<f64> {
        ThermoReadout {
            theta: [Temperature::Infinite; 3],
            coherence: [0.0; 3],
            qdot: [0.0; 3],
            cop: Cop::Value(cop),
        }
    }

    #[test]
    fn crossing_detection() {
        let times = [0.0, 1.0, 2.0, 3.0, 4.0];
        let a: Vec<_> = [3.0, 2.0, 1.0, 1.0, 1.0].map(readout).into();
        let b: Vec<_> = [1.0, 1.0, 2.0, 2.0, 1.5].map(readout).into();
        let c = cop_crossings(50.0, &times, &a, &b);
        assert_eq!(c.count, 1);
        assert!((c.first_time.unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(c.initial_difference, Some(2.0));

        let mut undefined = a.clone();
        undefined[1].cop = Cop::Undefined;
        assert_eq!(cop_crossings(50.0, &times, &undefined, &b).count, 1);
        assert_eq!(cop_crossings(50.0, &times, &a, &a).count, 0);
    }
}
