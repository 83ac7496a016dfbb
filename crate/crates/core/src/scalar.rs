//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use nalgebra::{Complex, ComplexField, RealField, SMatrix};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the simulator is generic over (`f32` and `f64`).
///
/// Tolerances throughout the crate are stated for `f64` and rescaled by the
/// ratio of machine epsilons through [`Real::tol`], so an `f32` build keeps
/// the same number of significant digits of headroom.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts to `f64` for diagnostics and serialization.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// An `f64` tolerance rescaled to this type's precision: the same
    /// fraction of the available significant digits.
    fn tol(f64_tol: f64) -> Self {
        let eps = Self::default_epsilon().as_f64();
        if eps <= f64::EPSILON {
            return Self::lit(f64_tol);
        }
        Self::lit(eps.powf(f64_tol.ln() / f64::EPSILON.ln()))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

/// Dimension of the three-qubit register.
pub const DIM: usize = 8;

/// Dimension of the vectorized density-matrix space.
pub const SUPER_DIM: usize = DIM * DIM;

/// Operator on the three-qubit register.
pub type Operator<T> = SMatrix<C<T>, DIM, DIM>;

pub(crate) fn re<T: Real>(x: T) -> C<T> {
    C::new(x, T::zero())
}

/// Largest absolute entry.
pub(crate) fn max_abs<T: Real, const R: usize, const K: usize>(m: &SMatrix<C<T>, R, K>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

/// `‖A − A†‖_max`.
pub(crate) fn hermiticity_defect<T: Real>(m: &Operator<T>) -> T {
    max_abs(&(m - m.adjoint()))
}

pub(crate) fn hermitize<T: Real>(m: &Operator<T>) -> Operator<T> {
    (m + m.adjoint()) * re(T::lit(0.5))
}

pub(crate) fn commutator<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Operator<T> {
    a * b - b * a
}

pub(crate) fn anticommutator<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Operator<T> {
    a * b + b * a
}
