//! Thermodynamic readouts: local and virtual temperatures, heat currents, COP.

use std::fmt;

use nalgebra::ComplexField;

use crate::dynamics::DensityMatrix;
use crate::error::{Error, Result};
use crate::liouvillian::Generator;
use crate::operators::Qubit;
use crate::scalar::Real;

/// Reduced-state coherence above which a temperature readout is annotated.
pub const COHERENCE_WARNING: f64 = 1e-3;

/// Currents below this magnitude leave the COP undefined.
pub const COP_THRESHOLD: f64 = 1e-14;

/// Temperature read from a two-level population ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature<T> {
    Finite(T),
    /// Equal populations.
    Infinite,
    /// Population inversion; carries the (negative) value.
    Negative(T),
}

impl<T: Real> Temperature<T> {
    /// `energy / ln(ratio)` with the special cases tagged.
    fn from_log_ratio(energy: T, log_ratio: T) -> Self {
        if log_ratio == T::zero() {
            Temperature::Infinite
        } else if log_ratio > T::zero() {
            Temperature::Finite(energy / log_ratio)
        } else {
            Temperature::Negative(energy / log_ratio)
        }
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Temperature::Finite(t) => Some(t),
            _ => None,
        }
    }

    /// Numeric value, `+∞` for the infinite tag.
    pub fn value(self) -> T {
        match self {
            Temperature::Finite(t) | Temperature::Negative(t) => t,
            Temperature::Infinite => T::one() / T::zero(),
        }
    }
}

impl<T: Real> fmt::Display for Temperature<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Temperature::Finite(t) | Temperature::Negative(t) => write!(f, "{:e}", t.as_f64()),
            Temperature::Infinite => f.write_str("inf"),
        }
    }
}

/// Local temperature of one qubit plus the size of its reduced coherence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTemperature<T> {
    pub temperature: Temperature<T>,
    /// `|ρ₀₁|` of the reduced state.
    pub coherence: T,
}

impl<T: Real> LocalTemperature<T> {
    /// The readout presumes a diagonal reduced state.
    pub fn coherence_warning(&self) -> bool {
        self.coherence > T::lit(COHERENCE_WARNING)
    }
}

/// `θ_α = ω_α / ln(ρ₀₀/ρ₁₁)` of the reduced state of `qubit`.
pub fn local_temperature<T: Real>(rho: &DensityMatrix<T>, qubit: Qubit, omega: T) -> Result<LocalTemperature<T>> {
    let r = rho.reduced(qubit);
    let (p0, p1) = (r[(0, 0)].re, r[(1, 1)].re);
    // p₀ + p₁ = 1, so positivity of both keeps each below one; testing `p < 1`
    // directly would reject p₀ that rounds to 1.
    if !(p0 > T::zero() && p1 > T::zero()) {
        return Err(Error::InvalidState(format!(
            "populations of qubit {qubit} must lie strictly inside (0, 1), got ({p0}, {p1})"
        )));
    }
    Ok(LocalTemperature {
        temperature: Temperature::from_log_ratio(omega, (p0 / p1).ln()),
        coherence: r[(0, 1)].modulus(),
    })
}

/// `T_v = (ω_h − ω_w) / (ω_h/T_h − ω_w/T_w)`.
pub fn virtual_temperature<T: Real>(omega_h: T, omega_w: T, t_h: T, t_w: T) -> Result<Temperature<T>> {
    if !(t_h > T::zero() && t_w > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "bath temperatures must be positive, got T_h = {t_h}, T_w = {t_w}"
        )));
    }
    let gap = omega_h - omega_w;
    let denom = omega_h / t_h - omega_w / t_w;
    if gap == T::zero() && denom == T::zero() {
        return Err(Error::InvalidArgument("virtual qubit is degenerate (ω_h = ω_w)".into()));
    }
    if gap < T::zero() {
        // orient the virtual qubit so its splitting is positive
        return Ok(Temperature::from_log_ratio(-gap, -denom));
    }
    Ok(Temperature::from_log_ratio(gap, denom))
}

/// Design condition `T_v < T_c` for refrigeration.
pub fn cooling_condition<T: Real>(virtual_temperature: Temperature<T>, t_c: T) -> bool {
    matches!(virtual_temperature, Temperature::Finite(v) if v < t_c)
}

/// `Q̇_α = Tr[H_ref D_α(ρ)]`; positive when energy enters the register from bath α.
pub fn heat_current<T: Real>(generator: &Generator<T>, qubit: Qubit, rho: &DensityMatrix<T>) -> T {
    let d = generator.dissipator(qubit, rho.matrix());
    let q = (generator.hamiltonian() * d).trace();
    assert!(
        q.im.abs() <= T::tol(1e-12) * (T::one() + q.re.abs()),
        "heat current of qubit {qubit} has imaginary part {}",
        q.im
    );
    q.re
}

/// Currents of all three baths, indexed by [`Qubit::index`].
pub fn heat_currents<T: Real>(generator: &Generator<T>, rho: &DensityMatrix<T>) -> [T; 3] {
    Qubit::ALL.map(|q| heat_current(generator, q, rho))
}

/// Coefficient of performance `Q̇_c / Q̇_w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cop<T> {
    Value(T),
    /// `|Q̇_w|` below [`COP_THRESHOLD`].
    Undefined,
}

impl<T: Real> Cop<T> {
    pub fn value(self) -> Option<T> {
        match self {
            Cop::Value(v) => Some(v),
            Cop::Undefined => None,
        }
    }
}

impl<T: Real> fmt::Display for Cop<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cop::Value(v) => write!(f, "{:e}", v.as_f64()),
            Cop::Undefined => f.write_str("nan"),
        }
    }
}

pub fn cop<T: Real>(qdot_c: T, qdot_w: T) -> Cop<T> {
    if qdot_w.abs() < T::lit(COP_THRESHOLD) {
        Cop::Undefined
    } else {
        Cop::Value(qdot_c / qdot_w)
    }
}

/// Everything reported about one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoReadout<T> {
    pub theta: [Temperature<T>; 3],
    pub coherence: [T; 3],
    pub qdot: [T; 3],
    pub cop: Cop<T>,
}

impl<T: Real> ThermoReadout<T> {
    pub fn measure(generator: &Generator<T>, rho: &DensityMatrix<T>) -> Result<Self> {
        let spec = generator.refrigerator();
        let mut theta = [Temperature::Infinite; 3];
        let mut coherence = [T::zero(); 3];
        for q in Qubit::ALL {
            let lt = local_temperature(rho, q, spec.omega(q))?;
            if lt.coherence_warning() {
                log::debug!("qubit {q} coherence {} exceeds {COHERENCE_WARNING:e}", lt.coherence);
            }
            theta[q.index()] = lt.temperature;
            coherence[q.index()] = lt.coherence;
        }
        let qdot = heat_currents(generator, rho);
        Ok(Self {
            theta,
            coherence,
            qdot,
            cop: cop(qdot[Qubit::Cold.index()], qdot[Qubit::Work.index()]),
        })
    }

    pub fn theta(&self, qubit: Qubit) -> Temperature<T> {
        self.theta[qubit.index()]
    }

    pub fn qdot(&self, qubit: Qubit) -> T {
        self.qdot[qubit.index()]
    }

    /// `|Σ_α Q̇_α| / max_α |Q̇_α|`, zero when every current vanishes.
    pub fn first_law_defect(&self) -> T {
        let scale = self.qdot.iter().fold(T::zero(), |m, q| m.max(q.abs()));
        if scale == T::zero() {
            return T::zero();
        }
        self.qdot.iter().fold(T::zero(), |s, &q| s + q).abs() / scale
    }

    /// At least one reduced state carries coherence above [`COHERENCE_WARNING`].
    pub fn coherence_warning(&self) -> bool {
        self.coherence.iter().any(|&c| c > T::lit(COHERENCE_WARNING))
    }
}
