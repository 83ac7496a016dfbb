//! Time evolution under the generator and direct steady-state solution.
//!
//! The secular dissipator commutes with the Hamiltonian superoperator, so
//! `exp(L t) = exp(L_H t) exp(L_D t)`. The propagator integrates only the slow
//! dissipative flow with an adaptive Dormand-Prince 5(4) scheme and applies
//! the exact unitary `exp(−i H t)` on output. Generators that fail the
//! commutation check are integrated directly in the lab frame.

use nalgebra::{ComplexField, DMatrix, DVector, Matrix2, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::liouvillian::{unvectorize, vectorize, Baths, Generator};
use crate::operators::{occupation_bit, Qubit, RefrigeratorSpec};
use crate::scalar::{hermiticity_defect, hermitize, re, Operator, Real, C, DIM, SUPER_DIM};

/// Tolerances a [`DensityMatrix`] must meet.
pub const STATE_TOLERANCE: f64 = 1e-10;

/// Hermitian, unit-trace, positive-semidefinite state of the register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real>(Operator<T>);

/// How far a matrix is from being a valid state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDefects<T> {
    pub trace: T,
    pub hermiticity: T,
    pub min_eigenvalue: T,
}

impl<T: Real> StateDefects<T> {
    pub fn of(m: &Operator<T>) -> Self {
        Self {
            trace: (m.trace() - re(T::one())).modulus(),
            hermiticity: hermiticity_defect(m),
            min_eigenvalue: SymmetricEigen::new(hermitize(m)).eigenvalues.min(),
        }
    }

    pub fn is_valid(&self) -> bool {
        let tol = T::tol(STATE_TOLERANCE);
        self.trace <= tol && self.hermiticity <= tol && self.min_eigenvalue >= -tol
    }
}

impl<T: Real> DensityMatrix<T> {
    /// Validates Hermiticity, trace and positivity to 1e-10.
    pub fn new(m: Operator<T>) -> Result<Self> {
        let d = StateDefects::of(&m);
        if !d.is_valid() {
            return Err(Error::InvalidState(format!(
                "trace defect {:e}, hermiticity defect {:e}, min eigenvalue {:e}",
                d.trace.as_f64(),
                d.hermiticity.as_f64(),
                d.min_eigenvalue.as_f64()
            )));
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: Operator<T>) -> Self {
        Self(m)
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(p: &[T; DIM]) -> Result<Self> {
        let mut m = Operator::zeros();
        for (i, &pi) in p.iter().enumerate() {
            m[(i, i)] = re(pi);
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &Operator<T> {
        &self.0
    }

    pub fn into_inner(self) -> Operator<T> {
        self.0
    }

    pub fn defects(&self) -> StateDefects<T> {
        StateDefects::of(&self.0)
    }

    /// `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> T {
        trace_distance(&self.0, &other.0)
    }

    /// Reduced state of one qubit, `[[ρ₀₀, ρ₀₁], [ρ₁₀, ρ₁₁]]`.
    pub fn reduced(&self, qubit: Qubit) -> Matrix2<C<T>> {
        reduce(&self.0, qubit)
    }

    /// Excited-state population of one qubit.
    pub fn excited_population(&self, qubit: Qubit) -> T {
        (0..DIM)
            .filter(|&i| occupation_bit(i, qubit) == 1)
            .fold(T::zero(), |acc, i| acc + self.0[(i, i)].re)
    }
}

pub(crate) fn trace_distance<T: Real>(a: &Operator<T>, b: &Operator<T>) -> T {
    let diff = hermitize(&(a - b));
    SymmetricEigen::new(diff)
        .eigenvalues
        .iter()
        .fold(T::zero(), |acc, e| acc + e.abs())
        * T::lit(0.5)
}

pub(crate) fn reduce<T: Real>(m: &Operator<T>, qubit: Qubit) -> Matrix2<C<T>> {
    let mut r = Matrix2::zeros();
    let mask = qubit.mask();
    for i in 0..DIM {
        for j in 0..DIM {
            // other two factors must agree
            if (i & !mask) == (j & !mask) {
                r[(occupation_bit(i, qubit), occupation_bit(j, qubit))] += m[(i, j)];
            }
        }
    }
    r
}

/// `⊗_α exp(−ω_α n̂_α / T_α) / Z_α` with each qubit at its bath temperature.
pub fn initial_product_gibbs<T: Real>(spec: &RefrigeratorSpec<T>, baths: &Baths<T>) -> DensityMatrix<T> {
    let excited: Vec<T> = Qubit::ALL
        .iter()
        .map(|&q| T::one() / ((spec.omega(q) / baths.get(q).temperature()).exp() + T::one()))
        .collect();
    let mut m = Operator::zeros();
    for i in 0..DIM {
        let p = Qubit::ALL.iter().fold(T::one(), |acc, &q| {
            let e = excited[q.index()];
            acc * if occupation_bit(i, q) == 1 { e } else { T::one() - e }
        });
        m[(i, i)] = re(p);
    }
    DensityMatrix::new_unchecked(m)
}

/// Frame in which the ODE is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Rotating frame whenever the generator is covariant, otherwise lab frame.
    Auto,
    /// Frame rotating with `H_ref`; rejected for non-covariant generators.
    Rotating,
    /// Integrate the full generator directly.
    Lab,
}

/// Integrator settings.
#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions<T> {
    /// Local error per step relative to `‖y‖_∞`.
    pub rtol: T,
    pub frame: Frame,
    /// Largest tolerated trace or Hermiticity drift before correction.
    pub drift_limit: T,
    pub max_steps: usize,
}

impl<T: Real> Default for EvolveOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::tol(1e-9),
            frame: Frame::Auto,
            drift_limit: T::tol(1e-8),
            max_steps: 50_000_000,
        }
    }
}

/// Step bookkeeping of one integration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest accepted normalized error estimate (≤ 1).
    pub max_error_ratio: f64,
    /// Largest local error estimate relative to `‖y‖_∞`.
    pub max_local_error: f64,
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
    pub rotating_frame: bool,
}

/// Relative covariance defect below which the rotating frame is used.
pub const COVARIANCE_TOLERANCE: f64 = 1e-10;

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type Vector<T> = DVector<C<T>>;

fn axpy<T: Real>(y: &Vector<T>, terms: &[(f64, &Vector<T>)], h: T) -> Vector<T> {
    let mut out = y.clone();
    for (coef, k) in terms {
        out.axpy(re(h * T::lit(*coef)), k, re(T::one()));
    }
    out
}

fn inf_norm<T: Real>(v: &Vector<T>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

/// Adaptive propagator with dense output over its most recent step.
///
/// Requested times must be non-decreasing and lie in `[0, t_end]`.
#[derive(Debug, Clone)]
pub struct Propagator<'a, T: Real> {
    generator: &'a Generator<T>,
    rhs: &'a DMatrix<C<T>>,
    rotating: bool,
    options: EvolveOptions<T>,
    t_end: T,
    t_prev: T,
    y_prev: Vector<T>,
    f_prev: Vector<T>,
    t: T,
    y: Vector<T>,
    f: Vector<T>,
    h: T,
    h_max: T,
    stats: StepStats,
}

impl<'a, T: Real> Propagator<'a, T> {
    pub fn new(
        generator: &'a Generator<T>,
        rho0: &DensityMatrix<T>,
        t_end: T,
        options: EvolveOptions<T>,
    ) -> Result<Self> {
        if !(t_end > T::zero()) || !t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("final time must be positive, got {t_end}")));
        }
        let covariant = generator.covariance_defect() <= T::tol(COVARIANCE_TOLERANCE);
        let rotating = match options.frame {
            Frame::Auto => covariant,
            Frame::Lab => false,
            Frame::Rotating if covariant => true,
            Frame::Rotating => {
                return Err(Error::InvalidArgument(
                    "rotating frame requested but the dissipator does not commute with the Hamiltonian".into(),
                ))
            }
        };
        let rhs = if rotating {
            generator.dissipative_part()
        } else {
            generator.matrix()
        };
        let y = vectorize(rho0.matrix());
        let f = rhs * &y;
        let scale = inf_norm(&y);
        let rate = inf_norm(&f);
        let mut h = if rate > T::zero() {
            T::lit(0.01) * scale / rate
        } else {
            t_end
        };
        h = h.min(t_end);
        // keeps the cubic Hermite interpolant within rtol: (h‖L‖)⁴/384 ≤ rtol
        let spread = rhs.singular_values().max();
        let h_max = if spread > T::zero() {
            (T::lit(384.0) * options.rtol).powf(T::lit(0.25)) / spread
        } else {
            t_end
        };
        Ok(Self {
            generator,
            rhs,
            rotating,
            options,
            t_end,
            t_prev: T::zero(),
            y_prev: y.clone(),
            f_prev: f.clone(),
            t: T::zero(),
            y,
            f,
            h: h.min(h_max),
            h_max,
            stats: StepStats {
                rotating_frame: rotating,
                ..StepStats::default()
            },
        })
    }

    pub fn time(&self) -> T {
        self.t
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    pub fn is_rotating(&self) -> bool {
        self.rotating
    }

    pub fn generator(&self) -> &Generator<T> {
        self.generator
    }

    /// Takes accepted steps until the integration time reaches `t`.
    pub fn advance_to(&mut self, t: T) -> Result<()> {
        if t > self.t_end {
            return Err(Error::InvalidArgument(format!(
                "time {t} lies beyond the integration horizon {}",
                self.t_end
            )));
        }
        while self.t < t {
            self.step()?;
        }
        Ok(())
    }

    fn step(&mut self) -> Result<()> {
        let h_min = T::tol(1e-12) * (T::one() + self.t.abs());
        loop {
            if self.stats.accepted + self.stats.rejected >= self.options.max_steps {
                return Err(self.underflow());
            }
            let h = self.h.min(self.h_max).min(self.t_end - self.t);
            let y = &self.y;
            let k1 = &self.f;
            let l = self.rhs;
            let k2 = l * axpy(y, &[(A21, k1)], h);
            let k3 = l * axpy(y, &[(A31, k1), (A32, &k2)], h);
            let k4 = l * axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h);
            let k5 = l * axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h);
            let k6 = l * axpy(y, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h);
            let y_new = axpy(y, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
            let k7 = l * &y_new;
            let err = axpy(
                &Vector::zeros(SUPER_DIM),
                &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
                h,
            );
            let scale = inf_norm(y).max(inf_norm(&y_new));
            let local = inf_norm(&err) / scale;
            let ratio = local / self.options.rtol;
            if ratio <= T::one() {
                let factor = if ratio == T::zero() {
                    T::lit(5.0)
                } else {
                    (T::lit(0.9) * ratio.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
                };
                self.accept(h, y_new, ratio, local)?;
                self.h = h * factor;
                return Ok(());
            }
            self.stats.rejected += 1;
            let factor = (T::lit(0.9) * ratio.powf(T::lit(-0.2))).max(T::lit(0.1));
            self.h = h * factor;
            if self.h < h_min {
                return Err(self.underflow());
            }
        }
    }

    fn accept(&mut self, h: T, y_new: Vector<T>, ratio: T, local: T) -> Result<()> {
        let t_new = if self.t_end - (self.t + h) <= T::tol(1e-15) * self.t_end {
            self.t_end
        } else {
            self.t + h
        };
        let m = unvectorize(&y_new);
        let trace_drift = (m.trace() - re(T::one())).modulus();
        let herm_drift = hermiticity_defect(&m);
        if trace_drift > self.options.drift_limit || herm_drift > self.options.drift_limit {
            return Err(Error::DriftExceeded {
                t: t_new.as_f64(),
                trace: trace_drift.as_f64(),
                hermiticity: herm_drift.as_f64(),
            });
        }
        let corrected = hermitize(&m) * re(T::one() / m.trace().re);
        let y = vectorize(&corrected);
        let f = self.rhs * &y;
        self.t_prev = self.t;
        self.y_prev = std::mem::replace(&mut self.y, y);
        self.f_prev = std::mem::replace(&mut self.f, f);
        self.t = t_new;
        let s = &mut self.stats;
        s.accepted += 1;
        s.max_error_ratio = s.max_error_ratio.max(ratio.as_f64());
        s.max_local_error = s.max_local_error.max(local.as_f64());
        s.max_trace_drift = s.max_trace_drift.max(trace_drift.as_f64());
        s.max_hermiticity_drift = s.max_hermiticity_drift.max(herm_drift.as_f64());
        Ok(())
    }

    fn underflow(&self) -> Error {
        Error::StepSizeUnderflow {
            t: self.t.as_f64(),
            step: self.h.as_f64(),
            accepted: self.stats.accepted,
            rejected: self.stats.rejected,
        }
    }

    /// Cubic Hermite interpolant of the integrated variable over the last step.
    fn interpolate(&self, t: T) -> Result<Vector<T>> {
        let span = self.t - self.t_prev;
        let slack = T::tol(1e-12) * (T::one() + self.t.abs());
        if t < self.t_prev - slack || t > self.t + slack {
            return Err(Error::InvalidArgument(format!(
                "time {t} outside the current step [{}, {}]",
                self.t_prev, self.t
            )));
        }
        if span == T::zero() {
            return Ok(self.y.clone());
        }
        let s = ((t - self.t_prev) / span).max(T::zero()).min(T::one());
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        Ok(&self.y_prev * re(h00)
            + &self.f_prev * re(h10 * span)
            + &self.y * re(h01)
            + &self.f * re(h11 * span))
    }

    /// State at `t`, which must lie within the most recent step.
    pub fn state_at(&self, t: T) -> Result<DensityMatrix<T>> {
        let m = unvectorize(&self.interpolate(t)?);
        let m = if self.rotating {
            let u = unitary(self.generator, t);
            u * m * u.adjoint()
        } else {
            m
        };
        Ok(DensityMatrix::new_unchecked(hermitize(&m)))
    }

    /// Advances as needed and returns the state at `t`.
    pub fn sample(&mut self, t: T) -> Result<DensityMatrix<T>> {
        self.advance_to(t)?;
        self.state_at(t)
    }
}

/// `exp(−i H_ref t)` from the spectral decomposition.
pub fn unitary<T: Real>(generator: &Generator<T>, t: T) -> Operator<T> {
    let sp = generator.spectrum();
    let phases = sp.eigenvalues().map(|e| {
        let angle = -e * t;
        C::new(angle.cos(), angle.sin())
    });
    sp.eigenvectors() * Operator::from_diagonal(&phases) * sp.eigenvectors().adjoint()
}

/// States sampled on an output grid.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
    pub stats: StepStats,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(&T, &DensityMatrix<T>)> {
        self.times.last().zip(self.states.last())
    }
}

/// Integrates from `rho0` and samples at each time of `grid`.
///
/// `grid` must be strictly increasing within `[0, t_final]`.
pub fn evolve<T: Real>(
    generator: &Generator<T>,
    rho0: &DensityMatrix<T>,
    t_final: T,
    grid: &[T],
) -> Result<Trajectory<T>> {
    evolve_with(generator, rho0, t_final, grid, EvolveOptions::default())
}

pub fn evolve_with<T: Real>(
    generator: &Generator<T>,
    rho0: &DensityMatrix<T>,
    t_final: T,
    grid: &[T],
    options: EvolveOptions<T>,
) -> Result<Trajectory<T>> {
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("output grid must be strictly increasing".into()));
    }
    if grid.first().is_some_and(|&t| t < T::zero()) || grid.last().is_some_and(|&t| t > t_final) {
        return Err(Error::InvalidArgument("output grid must lie within [0, t_final]".into()));
    }
    let mut prop = Propagator::new(generator, rho0, t_final, options)?;
    let mut states = Vec::with_capacity(grid.len());
    for &t in grid {
        states.push(if t == T::zero() { rho0.clone() } else { prop.sample(t)? });
    }
    Ok(Trajectory {
        times: grid.to_vec(),
        states,
        stats: prop.stats(),
    })
}

/// Near-zero singular values below this fraction of `‖L‖` count as null directions.
pub const NULL_SPACE_TOLERANCE: f64 = 1e-9;

/// Residual bound `‖L vec(ρ_ss)‖ ≤ 1e-11 ‖L‖`.
pub const STEADY_RESIDUAL: f64 = 1e-11;

/// Null-space steady state of the generator.
pub fn steady_state<T: Real>(generator: &Generator<T>) -> Result<DensityMatrix<T>> {
    let l = generator.matrix();
    let svd = SVD::new(l.clone(), false, true);
    let sv = &svd.singular_values;
    let norm = sv.max();
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[a].partial_cmp(&sv[b]).expect("finite singular values"));
    let null_tol = T::tol(NULL_SPACE_TOLERANCE) * norm;
    let dimension = order.iter().take_while(|&&i| sv[i] <= null_tol).count();
    if dimension > 1 {
        return Err(Error::DegenerateNullSpace {
            dimension,
            singular_values: order.iter().take(dimension + 2).map(|&i| sv[i].as_f64()).collect(),
        });
    }
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let v: Vector<T> = v_t.row(order[0]).adjoint();
    let m = unvectorize(&v);
    let m = hermitize(&(m / m.trace()));
    let residual = (l * vectorize(&m)).norm();
    let bound = T::tol(STEADY_RESIDUAL) * norm;
    if residual > bound {
        return Err(Error::SteadyStateResidual {
            residual: residual.as_f64(),
            bound: bound.as_f64(),
        });
    }
    DensityMatrix::new(m)
}

/// Eigenvalues of the generator (complex Schur form).
pub fn generator_eigenvalues<T: Real>(generator: &Generator<T>) -> Vec<C<T>> {
    let schur = generator.matrix().clone().schur();
    let (_, t) = schur.unpack();
    (0..SUPER_DIM).map(|i| t[(i, i)]).collect()
}

/// Slowest nonzero relaxation rate: the smallest `|Re λ|` above
/// `1e-9 ‖L‖`, together with the largest `Re λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationSpectrum<T> {
    pub gap: T,
    pub fastest: T,
    pub max_real_part: T,
}

pub fn relaxation_spectrum<T: Real>(generator: &Generator<T>) -> RelaxationSpectrum<T> {
    let eig = generator_eigenvalues(generator);
    let norm = generator.norm();
    let floor = T::tol(NULL_SPACE_TOLERANCE) * norm;
    let mut gap = T::max_value().unwrap_or(T::lit(f64::MAX));
    let mut fastest = T::zero();
    let mut max_real_part = -gap;
    for z in &eig {
        max_real_part = max_real_part.max(z.re);
        let r = z.re.abs();
        fastest = fastest.max(r);
        if r > floor {
            gap = gap.min(r);
        }
    }
    RelaxationSpectrum {
        gap,
        fastest,
        max_real_part,
    }
}

/// `‖L vec(ρ)‖₂`.
pub fn derivative_norm<T: Real>(generator: &Generator<T>, rho: &DensityMatrix<T>) -> T {
    generator.apply_vectorized(&vectorize(rho.matrix())).norm()
}
