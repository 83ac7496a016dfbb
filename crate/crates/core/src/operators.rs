//! Three-qubit register: basis conventions, refrigerator Hamiltonian and its
//! eigendecomposition.
//!
//! Basis states are `|n_c n_h n_w⟩` with the cold qubit as the most
//! significant factor, so the index of a basis state is `4 n_c + 2 n_h + n_w`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{SVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{hermiticity_defect, max_abs, re, Operator, Real, C, DIM};

/// One of the three qubits of the refrigerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Qubit {
    Cold,
    Hot,
    Work,
}

impl Qubit {
    pub const ALL: [Qubit; 3] = [Qubit::Cold, Qubit::Hot, Qubit::Work];

    /// Position in the tensor product (cold first).
    pub fn index(self) -> usize {
        match self {
            Qubit::Cold => 0,
            Qubit::Hot => 1,
            Qubit::Work => 2,
        }
    }

    /// Bit of the basis index carrying this qubit's occupation.
    pub fn mask(self) -> usize {
        1 << (2 - self.index())
    }

    pub fn label(self) -> &'static str {
        match self {
            Qubit::Cold => "c",
            Qubit::Hot => "h",
            Qubit::Work => "w",
        }
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Qubit::Cold => "cold",
            Qubit::Hot => "hot",
            Qubit::Work => "work",
        })
    }
}

impl FromStr for Qubit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "c" | "cold" => Ok(Qubit::Cold),
            "h" | "hot" => Ok(Qubit::Hot),
            "w" | "work" => Ok(Qubit::Work),
            other => Err(Error::InvalidArgument(format!("unknown qubit label `{other}`"))),
        }
    }
}

/// Basis index of `|n_c n_h n_w⟩`.
pub fn basis_index(n_c: usize, n_h: usize, n_w: usize) -> usize {
    debug_assert!(n_c < 2 && n_h < 2 && n_w < 2);
    4 * n_c + 2 * n_h + n_w
}

/// Occupation of `qubit` in basis state `index`.
pub fn occupation_bit(index: usize, qubit: Qubit) -> usize {
    usize::from(index & qubit.mask() != 0)
}

/// Closed-system data of the refrigerator: qubit energies and the three-body
/// coupling strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefrigeratorSpec<T> {
    omega_c: T,
    omega_h: T,
    omega_w: T,
    g: T,
}

impl<T: Real> RefrigeratorSpec<T> {
    /// Validates positivity, `g ≥ 0` and the energy-matching condition
    /// `ω_h = ω_c + ω_w` (relative tolerance 1e-12).
    pub fn new(omega_c: T, omega_h: T, omega_w: T, g: T) -> Result<Self> {
        for (name, w) in [("omega_c", omega_c), ("omega_h", omega_h), ("omega_w", omega_w)] {
            if !(w > T::zero()) || !w.is_finite() {
                return Err(Error::InvalidRefrigerator(format!(
                    "{name} must be positive and finite, got {w}"
                )));
            }
        }
        if !(g >= T::zero()) || !g.is_finite() {
            return Err(Error::InvalidRefrigerator(format!(
                "g must be non-negative and finite, got {g}"
            )));
        }
        let mismatch = (omega_h - omega_c - omega_w).abs();
        if mismatch > T::tol(1e-12) * omega_h {
            return Err(Error::InvalidRefrigerator(format!(
                "energy matching omega_h = omega_c + omega_w violated: {omega_h} vs {}",
                omega_c + omega_w
            )));
        }
        let spec = Self {
            omega_c,
            omega_h,
            omega_w,
            g,
        };
        if spec.strong_interaction() {
            log::warn!(
                "interaction g={g} exceeds the smallest qubit energy; the weak-interaction picture may not hold"
            );
        }
        Ok(spec)
    }

    /// Builds the spec from `ω_c`, `ω_w` and `g`, setting `ω_h = ω_c + ω_w`.
    pub fn matched(omega_c: T, omega_w: T, g: T) -> Result<Self> {
        Self::new(omega_c, omega_c + omega_w, omega_w, g)
    }

    pub fn omega(&self, qubit: Qubit) -> T {
        match qubit {
            Qubit::Cold => self.omega_c,
            Qubit::Hot => self.omega_h,
            Qubit::Work => self.omega_w,
        }
    }

    pub fn omega_c(&self) -> T {
        self.omega_c
    }

    pub fn omega_h(&self) -> T {
        self.omega_h
    }

    pub fn omega_w(&self) -> T {
        self.omega_w
    }

    pub fn g(&self) -> T {
        self.g
    }

    /// True when `g` exceeds the smallest qubit energy.
    pub fn strong_interaction(&self) -> bool {
        self.g > self.omega_c.min(self.omega_h).min(self.omega_w)
    }

    /// Copy with a different interaction strength.
    pub fn with_g(&self, g: T) -> Result<Self> {
        Self::new(self.omega_c, self.omega_h, self.omega_w, g)
    }
}

/// `H₀ = Σ_α ω_α |1_α⟩⟨1_α|`, diagonal in the product basis.
pub fn build_free_hamiltonian<T: Real>(spec: &RefrigeratorSpec<T>) -> Operator<T> {
    let mut h = Operator::zeros();
    for i in 0..DIM {
        let energy = Qubit::ALL.iter().fold(T::zero(), |acc, &q| {
            if occupation_bit(i, q) == 1 {
                acc + spec.omega(q)
            } else {
                acc
            }
        });
        h[(i, i)] = re(energy);
    }
    h
}

/// Three-body coupling `g(|101⟩⟨010| + |010⟩⟨101|)`.
pub fn build_interaction<T: Real>(spec: &RefrigeratorSpec<T>) -> Operator<T> {
    let mut h = Operator::zeros();
    let a = basis_index(1, 0, 1);
    let b = basis_index(0, 1, 0);
    h[(a, b)] = re(spec.g());
    h[(b, a)] = re(spec.g());
    h
}

/// `H_ref = H₀ + H_int`.
pub fn build_refrigerator_hamiltonian<T: Real>(spec: &RefrigeratorSpec<T>) -> Operator<T> {
    build_free_hamiltonian(spec) + build_interaction(spec)
}

/// `σˣ` acting on `qubit`, identity on the other two factors.
pub fn local_pauli_x<T: Real>(qubit: Qubit) -> Operator<T> {
    let mut m = Operator::zeros();
    for i in 0..DIM {
        m[(i ^ qubit.mask(), i)] = C::new(T::one(), T::zero());
    }
    m
}

/// `σ⁻ = |0⟩⟨1|` acting on `qubit`.
pub fn local_lowering<T: Real>(qubit: Qubit) -> Operator<T> {
    let mut m = Operator::zeros();
    for i in (0..DIM).filter(|&i| occupation_bit(i, qubit) == 1) {
        m[(i ^ qubit.mask(), i)] = C::new(T::one(), T::zero());
    }
    m
}

/// `|1⟩⟨1|` projector on `qubit`.
pub fn local_number<T: Real>(qubit: Qubit) -> Operator<T> {
    let mut m = Operator::zeros();
    for i in (0..DIM).filter(|&i| occupation_bit(i, qubit) == 1) {
        m[(i, i)] = C::new(T::one(), T::zero());
    }
    m
}

/// Eigendecomposition of a Hermitian register operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T: Real> {
    eigenvalues: SVector<T, DIM>,
    eigenvectors: Operator<T>,
}

/// Eigenvalues closer than this (relative to the largest `|e|`) belong to one level.
pub const LEVEL_TOLERANCE: f64 = 1e-9;

impl<T: Real> Spectrum<T> {
    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &SVector<T, DIM> {
        &self.eigenvalues
    }

    /// Unitary whose columns are the eigenstates, in eigenvalue order.
    pub fn eigenvectors(&self) -> &Operator<T> {
        &self.eigenvectors
    }

    pub fn energy(&self, i: usize) -> T {
        self.eigenvalues[i]
    }

    /// `|e_i⟩⟨e_i|`.
    pub fn projector(&self, i: usize) -> Operator<T> {
        let v = self.eigenvectors.column(i);
        v * v.adjoint()
    }

    /// Groups eigenstate indices into degenerate levels.
    pub fn levels(&self) -> Vec<Level<T>> {
        let scale = self
            .eigenvalues
            .iter()
            .fold(T::zero(), |acc, e| acc.max(e.abs()))
            .max(T::default_epsilon());
        let tol = T::tol(LEVEL_TOLERANCE) * scale;
        let mut levels: Vec<Level<T>> = Vec::new();
        for i in 0..DIM {
            let e = self.eigenvalues[i];
            match levels.last_mut() {
                Some(level) if e - self.eigenvalues[*level.states.last().unwrap()] <= tol => {
                    level.states.push(i);
                }
                _ => levels.push(Level {
                    energy: e,
                    states: vec![i],
                }),
            }
        }
        for level in &mut levels {
            let n = T::lit(level.states.len() as f64);
            level.energy = level
                .states
                .iter()
                .fold(T::zero(), |a, &j| a + self.eigenvalues[j])
                / n;
        }
        levels
    }

    /// Projector onto a degenerate level.
    pub fn level_projector(&self, level: &Level<T>) -> Operator<T> {
        level
            .states
            .iter()
            .fold(Operator::zeros(), |acc, &i| acc + self.projector(i))
    }

    /// `V diag(E) V†`.
    pub fn reconstruct(&self) -> Operator<T> {
        let d = Operator::from_diagonal(&self.eigenvalues.map(re));
        self.eigenvectors * d * self.eigenvectors.adjoint()
    }

    /// Moves `m` into the eigenbasis: `V† m V`.
    pub fn to_eigenbasis(&self, m: &Operator<T>) -> Operator<T> {
        self.eigenvectors.adjoint() * m * self.eigenvectors
    }

    /// Moves `m` out of the eigenbasis: `V m V†`.
    pub fn from_eigenbasis(&self, m: &Operator<T>) -> Operator<T> {
        self.eigenvectors * m * self.eigenvectors.adjoint()
    }

    /// Replaces the eigenvectors by `V W`, where `W` must be unitary and act
    /// only inside degenerate levels. Used to probe gauge invariance.
    pub fn remix(&self, w: &Operator<T>) -> Self {
        Self {
            eigenvalues: self.eigenvalues,
            eigenvectors: self.eigenvectors * w,
        }
    }
}

/// A set of (numerically) degenerate eigenstates.
#[derive(Debug, Clone, PartialEq)]
pub struct Level<T> {
    pub energy: T,
    pub states: Vec<usize>,
}

/// Diagonalizes a Hermitian operator; eigenvalues come back ascending.
///
/// Inputs with `‖H − H†‖_max > 1e-12 ‖H‖_max` are rejected.
pub fn diagonalize<T: Real>(h: &Operator<T>) -> Result<Spectrum<T>> {
    let scale = max_abs(h).max(T::default_epsilon());
    let defect = hermiticity_defect(h);
    let tolerance = T::tol(1e-12) * scale;
    if defect > tolerance {
        return Err(Error::NonHermitian {
            defect: defect.as_f64(),
            tolerance: tolerance.as_f64(),
        });
    }
    let eig = SymmetricEigen::new(*h);
    let mut order: Vec<usize> = (0..DIM).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
    });
    let mut eigenvalues = SVector::<T, DIM>::zeros();
    let mut eigenvectors = Operator::zeros();
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues[dst] = eig.eigenvalues[src];
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(g: f64) -> RefrigeratorSpec<f64> {
        RefrigeratorSpec::new(1.0, 2.0, 1.0, g).unwrap()
    }

    fn frob(m: &Operator<f64>) -> f64 {
        m.norm()
    }

    #[test]
    fn free_hamiltonian_diagonal_by_hand() {
        let h = build_free_hamiltonian(&spec(0.3));
        let expected = [0.0, 1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 4.0];
        for i in 0..DIM {
            for j in 0..DIM {
                let want = if i == j { expected[i] } else { 0.0 };
                assert_eq!(h[(i, j)], C::new(want, 0.0));
            }
        }
        // |101⟩ and |010⟩ share energy 2.
        assert_eq!(h[(5, 5)], h[(2, 2)]);
        assert_eq!(h[(5, 5)].re, 2.0);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(RefrigeratorSpec::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(RefrigeratorSpec::new(1.0, 2.5, 1.0, 0.1).is_err());
        assert!(RefrigeratorSpec::new(1.0, 2.0, 1.0, -0.1).is_err());
        assert!(RefrigeratorSpec::new(-1.0, 0.0, 1.0, 0.1).is_err());
        assert!(RefrigeratorSpec::new(1.0, 2.0, 1.0, f64::NAN).is_err());
        // within the relative matching tolerance
        assert!(RefrigeratorSpec::new(1.0, 2.0 + 1e-13, 1.0, 0.1).is_ok());
    }

    #[test]
    fn strong_interaction_flag() {
        assert!(!spec(0.8).strong_interaction());
        assert!(spec(1.5).strong_interaction());
    }

    #[test]
    fn interaction_entries() {
        assert_eq!(build_interaction(&spec(0.0)), Operator::zeros());
        let h = build_interaction(&spec(0.8));
        for i in 0..DIM {
            for j in 0..DIM {
                let want = if (i, j) == (5, 2) || (i, j) == (2, 5) { 0.8 } else { 0.0 };
                assert_eq!(h[(i, j)], C::new(want, 0.0));
            }
        }
        assert_eq!(h, h.adjoint());
    }

    #[test]
    fn interaction_acts_only_on_degenerate_pair() {
        let h = build_interaction(&spec(0.8));
        for i in 0..DIM {
            let mut e = Operator::<f64>::zeros();
            e[(i, 0)] = C::new(1.0, 0.0);
            let out = h * e;
            let image: Vec<usize> = (0..DIM).filter(|&k| out[(k, 0)].norm() > 0.0).collect();
            match i {
                5 => assert_eq!(image, vec![2]),
                2 => assert_eq!(image, vec![5]),
                _ => assert!(image.is_empty(), "state {i} not annihilated"),
            }
        }
    }

    #[test]
    fn refrigerator_eigenvalues_split_by_g() {
        for g in [0.1, 0.8] {
            let s = diagonalize(&build_refrigerator_hamiltonian(&spec(g))).unwrap();
            let want = [0.0, 1.0, 1.0, 2.0 - g, 2.0 + g, 3.0, 3.0, 4.0];
            for (e, w) in s.eigenvalues().iter().zip(want) {
                assert_relative_eq!(*e, w, epsilon = 1e-12);
            }
        }
        let s = diagonalize(&build_refrigerator_hamiltonian(&spec(0.1))).unwrap();
        let want = [0.0, 1.0, 1.0, 1.9, 2.1, 3.0, 3.0, 4.0];
        for (e, w) in s.eigenvalues().iter().zip(want) {
            assert_relative_eq!(*e, w, epsilon = 1e-12);
        }
    }

    #[test]
    fn trace_independent_of_g() {
        for g in [0.0, 0.1, 0.8] {
            let h = build_refrigerator_hamiltonian(&spec(g));
            // each qubit is excited in half of the eight basis states
            assert_relative_eq!(h.trace().re, 4.0 * (1.0 + 2.0 + 1.0), epsilon = 1e-15);
        }
        let h0 = build_free_hamiltonian(&spec(0.0));
        let s = diagonalize(&h0).unwrap();
        let mut diag: Vec<f64> = (0..DIM).map(|i| h0[(i, i)].re).collect();
        diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(s.eigenvalues().as_slice(), diag.as_slice());
    }

    #[test]
    fn diagonal_input_gives_sorted_diagonal() {
        let mut h = Operator::<f64>::zeros();
        let d = [3.0, -1.0, 2.5, 0.0, 7.0, 1.0, -4.0, 0.5];
        for (i, v) in d.iter().enumerate() {
            h[(i, i)] = C::new(*v, 0.0);
        }
        let s = diagonalize(&h).unwrap();
        let mut sorted = d.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(s.eigenvalues().as_slice(), sorted.as_slice());
        // each eigenvector is a unit basis vector (up to phase) of the matching entry
        for (col, value) in sorted.iter().enumerate() {
            let src = d.iter().position(|x| x == value).unwrap();
            assert_relative_eq!(s.eigenvectors()[(src, col)].norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn spectrum_invariants() {
        for g in [0.0, 0.1, 0.8] {
            let h = build_refrigerator_hamiltonian(&spec(g));
            let s = diagonalize(&h).unwrap();
            let v = s.eigenvectors();
            let unit = v.adjoint() * v - Operator::identity();
            assert!(frob(&unit) <= 1e-12);
            let resid = h * v - v * Operator::from_diagonal(&s.eigenvalues().map(|e| C::new(e, 0.0)));
            assert!(frob(&resid) <= 1e-12 * frob(&h));
            assert!(frob(&(s.reconstruct() - h)) <= 1e-12 * frob(&h));
            assert!(s.eigenvalues().as_slice().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = build_refrigerator_hamiltonian(&spec(0.1));
        h[(0, 1)] = C::new(0.5, 0.0);
        assert!(matches!(diagonalize(&h), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn levels_group_degeneracies() {
        let s = diagonalize(&build_refrigerator_hamiltonian(&spec(0.1))).unwrap();
        let sizes: Vec<usize> = s.levels().iter().map(|l| l.states.len()).collect();
        assert_eq!(sizes, vec![1, 2, 1, 1, 2, 1]);
    }

    #[test]
    fn pauli_x_properties() {
        let id = Operator::<f64>::identity();
        let xs: Vec<Operator<f64>> = Qubit::ALL.iter().map(|&q| local_pauli_x(q)).collect();
        for x in &xs {
            assert_eq!(x * x, id);
            assert_eq!(*x, x.adjoint());
        }
        for a in &xs {
            for b in &xs {
                assert_eq!(a * b, b * a);
            }
        }
        // σˣ_c |000⟩ = |100⟩
        let x_c = &xs[0];
        assert_eq!(x_c[(basis_index(1, 0, 0), basis_index(0, 0, 0))], C::new(1.0, 0.0));
        assert_eq!(x_c.column(0).iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert_eq!(x_c[(4, 0)], C::new(1.0, 0.0));
    }

    #[test]
    fn lowering_plus_raising_is_pauli_x() {
        for q in Qubit::ALL {
            let l = local_lowering::<f64>(q);
            assert_eq!(l + l.adjoint(), local_pauli_x(q));
            assert_eq!(l.adjoint() * l, local_number(q));
        }
    }

    #[test]
    fn qubit_labels_parse() {
        assert_eq!("c".parse::<Qubit>().unwrap(), Qubit::Cold);
        assert_eq!("Work".parse::<Qubit>().unwrap(), Qubit::Work);
        assert!("x".parse::<Qubit>().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let s = RefrigeratorSpec::<f32>::new(1.0, 2.0, 1.0, 0.1).unwrap();
        let sp = diagonalize(&build_refrigerator_hamiltonian(&s)).unwrap();
        assert!((sp.energy(3) - 1.9).abs() < 1e-5);
        assert!((sp.energy(4) - 2.1).abs() < 1e-5);
    }
}
