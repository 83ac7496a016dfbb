use std::f64::consts::PI;

use rayon::prelude::*;

use crate::dynamics::{derivative_norm, initial_product_gibbs, DensityMatrix, EvolveOptions, Propagator};
use crate::error::{Error, Result};
use crate::liouvillian::Generator;
use crate::observables::{local_temperature, Cop};
use crate::operators::{local_number, Qubit};

use super::config::{format_zeta, ExperimentConfig};
use super::run::run_steady_at;
use super::{relaxation_horizon, sorted_grid, STEADY_DERIVATIVE, STEADY_SAMPLES};

/// Scan samples per period of the fastest oscillation of the cold population.
const SAMPLES_PER_PERIOD: f64 = 32.0;

/// Scan samples over the horizon when the cold population does not oscillate.
const MIN_SCAN_SAMPLES: f64 = 4096.0;

/// A transient minimum must undercut the steady value by this much to count.
const TRANSIENT_MARGIN: f64 = 1e-9;

/// Lowest cold-qubit temperature along the trajectory from the product Gibbs state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimumTemperature {
    pub theta_min: f64,
    /// Time of the minimum; `+∞` when it is the steady state.
    pub t_min: f64,
    pub at_steady: bool,
    /// Last integrated time.
    pub horizon: f64,
    /// The stationarity test fired before the horizon cap.
    pub converged: bool,
    pub samples: usize,
}

/// Per-ζ entry of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub zeta: f64,
    pub theta_ss: f64,
    /// Steady `θ_c` minus the initial (cold-bath) temperature.
    pub delta_theta: f64,
    pub qdot_ss: [f64; 3],
    pub cop_ss: Cop<f64>,
    pub first_law_defect: f64,
    pub minimum: Option<MinimumTemperature>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub zeta: f64,
    pub message: String,
}

/// Sweep outcomes in ascending ζ; failed points do not stop the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<std::result::Result<SweepPoint, SweepFailure>>,
}

/// Largest tolerated decrease of `Δθ_c` between neighbouring ζ.
const MONOTONE_SLACK: f64 = 1e-12;

/// Largest tolerated `|Σ Q̇| / max |Q̇|` at steady state.
const FIRST_LAW_TOLERANCE: f64 = 1e-10;

impl SweepResult {
    pub fn successes(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter_map(|p| p.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepFailure> {
        self.points.iter().filter_map(|p| p.as_ref().err())
    }

    pub fn point(&self, zeta: f64) -> Option<&SweepPoint> {
        self.successes().find(|p| p.zeta == zeta)
    }

    /// Monotonicity of `Δθ_c` in ζ and the steady-state first law.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let points: Vec<_> = self.successes().collect();
        for w in points.windows(2) {
            if w[1].delta_theta < w[0].delta_theta - MONOTONE_SLACK {
                out.push(format!(
                    "delta_theta decreases from {:e} at zeta = {} to {:e} at zeta = {}",
                    w[0].delta_theta,
                    format_zeta(w[0].zeta),
                    w[1].delta_theta,
                    format_zeta(w[1].zeta)
                ));
            }
        }
        for p in &points {
            if !(p.first_law_defect <= FIRST_LAW_TOLERANCE) {
                out.push(format!(
                    "steady currents at zeta = {} do not sum to zero (relative defect {:e})",
                    format_zeta(p.zeta),
                    p.first_law_defect
                ));
            }
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let v = self.invariant_violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invariant(v.join("; ")))
        }
    }
}

/// Scan spacing resolving the oscillation of the cold population.
fn scan_spacing(generator: &Generator<f64>, horizon: f64) -> f64 {
    let sp = generator.spectrum();
    let v = sp.eigenvectors();
    let n = v.adjoint() * local_number::<f64>(Qubit::Cold) * v;
    let e = sp.eigenvalues();
    let scale = e.amax().max(1.0);
    let mut fastest = 0.0f64;
    for i in 0..e.len() {
        for j in 0..e.len() {
            let w = (e[i] - e[j]).abs();
            if n[(i, j)].norm() > 1e-9 && w > 1e-9 * scale {
                fastest = fastest.max(w);
            }
        }
    }
    let coarse = horizon / MIN_SCAN_SAMPLES;
    if fastest > 0.0 {
        (2.0 * PI / fastest / SAMPLES_PER_PERIOD).min(coarse)
    } else {
        coarse
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    t: f64,
    theta: f64,
}

fn cold_theta(generator: &Generator<f64>, rho: &DensityMatrix<f64>) -> Result<f64> {
    let omega = generator.refrigerator().omega_c();
    let lt = local_temperature(rho, Qubit::Cold, omega)?;
    // inverted or infinite readouts never win a minimum
    Ok(lt.temperature.finite().unwrap_or(f64::INFINITY))
}

/// Golden-section search on `[a, b]`, evaluating from a propagator checkpoint
/// whose current step contains `a`.
fn refine(generator: &Generator<f64>, checkpoint: &Propagator<'_, f64>, a: f64, b: f64) -> Result<Sample> {
    let eval = |t: f64| -> Result<f64> {
        let mut p = checkpoint.clone();
        cold_theta(generator, &p.sample(t)?)
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let tol = 1e-6 * (b - a);
    let (mut a, mut b) = (a, b);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d)?;
        }
    }
    Ok(if fc < fd { Sample { t: c, theta: fc } } else { Sample { t: d, theta: fd } })
}

/// Global minimum of `θ_c(t)` from the product Gibbs state.
///
/// Scans at a fraction of the fastest oscillation period, refines every
/// local minimum that could beat the best value so far by golden-section
/// search, and stops once `‖L vec(ρ)‖ < 1e-12` on three consecutive samples
/// or at `50/γ_min`. `theta_ss` is the null-space steady value.
pub fn minimum_temperature(generator: &Generator<f64>, theta_ss: f64) -> Result<MinimumTemperature> {
    let rho0 = initial_product_gibbs(generator.refrigerator(), generator.baths());
    let cap = relaxation_horizon(generator);
    let dt = scan_spacing(generator, cap);
    let mut prop = Propagator::new(generator, &rho0, cap, EvolveOptions::default())?;

    let start = Sample {
        t: 0.0,
        theta: cold_theta(generator, &rho0)?,
    };
    let steady = Sample {
        t: f64::INFINITY,
        theta: theta_ss,
    };
    let mut best = if start.theta < steady.theta { start } else { steady };

    let mut older: Option<(Sample, Propagator<'_, f64>)> = None;
    let mut newer = (start, prop.clone());
    let mut calm = 0;
    let mut converged = false;
    let mut samples = 1;
    let mut t = 0.0;
    while t < cap {
        t = (samples as f64 * dt).min(cap);
        let state = prop.sample(t)?;
        samples += 1;
        let current = Sample {
            t,
            theta: cold_theta(generator, &state)?,
        };
        if let Some((prev, checkpoint)) = &older {
            let mid = newer.0;
            if mid.theta < prev.theta && mid.theta <= current.theta {
                // the sampled value misses the true minimum by less than
                // its excess over the neighbours' mean
                let excess = 0.5 * (prev.theta + current.theta) - mid.theta;
                if mid.theta - excess < best.theta - TRANSIENT_MARGIN {
                    let refined = refine(generator, checkpoint, prev.t, current.t)?;
                    let candidate = if refined.theta < mid.theta { refined } else { mid };
                    if candidate.theta < best.theta - TRANSIENT_MARGIN {
                        best = candidate;
                    }
                }
            }
        }
        older = Some(std::mem::replace(&mut newer, (current, prop.clone())));
        if derivative_norm(generator, &state) < STEADY_DERIVATIVE {
            calm += 1;
            if calm >= STEADY_SAMPLES {
                converged = true;
                break;
            }
        } else {
            calm = 0;
        }
    }
    Ok(MinimumTemperature {
        theta_min: best.theta,
        t_min: best.t,
        at_steady: best.t.is_infinite(),
        horizon: t,
        converged,
        samples,
    })
}

fn sweep_point(config: &ExperimentConfig, zeta: f64, with_minimum: bool) -> Result<SweepPoint> {
    let ss = run_steady_at(config, zeta)?;
    let theta_ss = ss.readout.theta(Qubit::Cold).value();
    let minimum = if with_minimum {
        let m = minimum_temperature(&ss.generator, theta_ss)
            .map_err(|e| e.context(format!("minimum search at zeta = {}", format_zeta(zeta))))?;
        if !m.converged {
            log::warn!(
                "zeta = {}: stationarity not reached before the horizon {:e}",
                format_zeta(zeta),
                m.horizon
            );
        }
        Some(m)
    } else {
        None
    };
    Ok(SweepPoint {
        zeta,
        theta_ss,
        delta_theta: theta_ss - config.baths.cold.temperature,
        qdot_ss: ss.readout.qdot,
        cop_ss: ss.readout.cop,
        first_law_defect: ss.readout.first_law_defect(),
        minimum,
    })
}

fn sweep(config: &ExperimentConfig, with_minimum: bool) -> Result<SweepResult> {
    config.validate()?;
    let grid = sorted_grid(&config.sweep.zeta);
    let points = grid
        .par_iter()
        .map(|&zeta| {
            sweep_point(config, zeta, with_minimum).map_err(|e| {
                log::error!("sweep point zeta = {} failed: {e}", format_zeta(zeta));
                SweepFailure {
                    zeta,
                    message: e.to_string(),
                }
            })
        })
        .collect();
    Ok(SweepResult { points })
}

/// Steady-state `θ_c`, `Δθ_c`, currents and COP over the ζ grid.
pub fn run_zeta_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    sweep(config, false)
}

/// As [`run_zeta_sweep`] plus the global minimum temperature per ζ.
pub fn run_min_temp_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    sweep(config, true)
}
