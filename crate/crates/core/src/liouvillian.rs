//! Global (eigenbasis) GKSL generator of the refrigerator.
//!
//! Jump operators are resolved by Bohr frequency,
//! `A_{ω,α} = Σ_{e_k − e_l = ω} |e_l⟩⟨e_l| σˣ_α |e_k⟩⟨e_k|`, summed over whole
//! degenerate levels so the result does not depend on how a solver picks
//! eigenvectors inside a level. Each bath contributes a fully secular
//! dissipator `Σ_ω γ_{ω,α} (A ρ A† − ½{A†A, ρ})`.
//!
//! Superoperators act on column-stacked density matrices:
//! `vec(ρ)[i + 8j] = ρ[i, j]`, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::bath::{BathSpec, OccupationCache};
use crate::error::{Error, Result};
use crate::operators::{build_refrigerator_hamiltonian, diagonalize, local_pauli_x, Qubit, RefrigeratorSpec, Spectrum};
use crate::scalar::{anticommutator, commutator, re, Operator, Real, C, DIM, SUPER_DIM};

/// Frequencies closer than this (relative to the largest `|ω|`) are one channel.
pub const FREQUENCY_TOLERANCE: f64 = 1e-9;

/// Level-to-level blocks of `σˣ` smaller than this (Frobenius) are treated as zero.
pub const COUPLING_TOLERANCE: f64 = 1e-9;

/// The three baths, one per qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baths<T> {
    pub cold: BathSpec<T>,
    pub hot: BathSpec<T>,
    pub work: BathSpec<T>,
}

impl<T: Real> Baths<T> {
    pub fn new(cold: BathSpec<T>, hot: BathSpec<T>, work: BathSpec<T>) -> Self {
        Self { cold, hot, work }
    }

    pub fn get(&self, qubit: Qubit) -> &BathSpec<T> {
        match qubit {
            Qubit::Cold => &self.cold,
            Qubit::Hot => &self.hot,
            Qubit::Work => &self.work,
        }
    }

    pub fn get_mut(&mut self, qubit: Qubit) -> &mut BathSpec<T> {
        match qubit {
            Qubit::Cold => &mut self.cold,
            Qubit::Hot => &mut self.hot,
            Qubit::Work => &mut self.work,
        }
    }

    /// Applies `f` to every bath.
    pub fn try_map(&self, mut f: impl FnMut(Qubit, &BathSpec<T>) -> Result<BathSpec<T>>) -> Result<Self> {
        Ok(Self {
            cold: f(Qubit::Cold, &self.cold)?,
            hot: f(Qubit::Hot, &self.hot)?,
            work: f(Qubit::Work, &self.work)?,
        })
    }
}

/// One Bohr frequency of a qubit's coupling operator, with the eigenstate
/// pairs `(l, k)` (`e_k − e_l = ω`) that contribute to it.
#[derive(Debug, Clone, PartialEq)]
pub struct BohrFrequency<T> {
    pub omega: T,
    pub pairs: Vec<(usize, usize)>,
}

/// Distinct nonzero Bohr frequencies of `σˣ_qubit`, both signs, ascending.
///
/// A nonzero coupling inside a degenerate level (a zero Bohr frequency) is an
/// error.
pub fn bohr_frequencies<T: Real>(spectrum: &Spectrum<T>, qubit: Qubit) -> Result<Vec<BohrFrequency<T>>> {
    let sigma = spectrum.to_eigenbasis(&local_pauli_x(qubit));
    let levels = spectrum.levels();
    let mut raw: Vec<(T, Vec<(usize, usize)>)> = Vec::new();
    for target in &levels {
        for source in &levels {
            let block = target.states.iter().fold(T::zero(), |acc, &l| {
                source
                    .states
                    .iter()
                    .fold(acc, |acc, &k| acc + sigma[(l, k)].norm_sqr())
            });
            let block = block.sqrt();
            if block <= T::tol(COUPLING_TOLERANCE) {
                continue;
            }
            if std::ptr::eq(target, source) {
                return Err(Error::ZeroBohrFrequency {
                    qubit,
                    element: block.as_f64(),
                });
            }
            let pairs = target
                .states
                .iter()
                .flat_map(|&l| source.states.iter().map(move |&k| (l, k)))
                .collect();
            raw.push((source.energy - target.energy, pairs));
        }
    }
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite frequencies"));
    let scale = raw.iter().fold(T::zero(), |acc, (w, _)| acc.max(w.abs()));
    let tol = T::tol(FREQUENCY_TOLERANCE) * scale;
    let mut grouped: Vec<(Vec<T>, Vec<(usize, usize)>)> = Vec::new();
    for (w, pairs) in raw {
        match grouped.last_mut() {
            Some((ws, ps)) if w - *ws.last().unwrap() <= tol => {
                ws.push(w);
                ps.extend(pairs);
            }
            _ => grouped.push((vec![w], pairs)),
        }
    }
    Ok(grouped
        .into_iter()
        .map(|(ws, pairs)| {
            let n = T::lit(ws.len() as f64);
            BohrFrequency {
                omega: ws.iter().fold(T::zero(), |a, &w| a + w) / n,
                pairs,
            }
        })
        .collect())
}

/// A single dissipation channel `(α, ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpChannel<T: Real> {
    pub qubit: Qubit,
    pub omega: T,
    pub operator: Operator<T>,
    pub rate: T,
}

/// Builds `A_{ω,α}` and `γ_{ω,α}` for every qubit and Bohr frequency.
pub fn build_jump_channels<T: Real>(
    spectrum: &Spectrum<T>,
    baths: &Baths<T>,
    cache: &mut OccupationCache<T>,
) -> Result<Vec<JumpChannel<T>>> {
    let mut channels = Vec::new();
    for qubit in Qubit::ALL {
        let sigma = local_pauli_x(qubit);
        for freq in bohr_frequencies(spectrum, qubit)? {
            let operator = freq.pairs.iter().fold(Operator::zeros(), |acc, &(l, k)| {
                acc + spectrum.projector(l) * sigma * spectrum.projector(k)
            });
            let rate = cache.decay_rate(baths.get(qubit), freq.omega)?;
            channels.push(JumpChannel {
                qubit,
                omega: freq.omega,
                operator,
                rate,
            });
        }
    }
    Ok(channels)
}

/// `Σ γ (A ρ A† − ½{A†A, ρ})` over the given channels.
pub fn dissipator_apply<'a, T: Real>(
    channels: impl IntoIterator<Item = &'a JumpChannel<T>>,
    rho: &Operator<T>,
) -> Operator<T> {
    let half = re(T::lit(0.5));
    channels.into_iter().fold(Operator::zeros(), |acc, ch| {
        let a = &ch.operator;
        let ad = a.adjoint();
        let term = a * rho * ad - anticommutator(&(ad * a), rho) * half;
        acc + term * re(ch.rate)
    })
}

/// Column-stacking vectorization.
pub fn vectorize<T: Real>(m: &Operator<T>) -> DVector<C<T>> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`].
pub fn unvectorize<T: Real>(v: &DVector<C<T>>) -> Operator<T> {
    assert_eq!(v.len(), SUPER_DIM, "vectorized state must have 64 entries");
    Operator::from_column_slice(v.as_slice())
}

fn to_dynamic<T: Real>(m: &Operator<T>) -> DMatrix<C<T>> {
    DMatrix::from_column_slice(DIM, DIM, m.as_slice())
}

/// `X ↦ A X B` as a 64×64 matrix.
pub fn sandwich_superoperator<T: Real>(a: &Operator<T>, b: &Operator<T>) -> DMatrix<C<T>> {
    to_dynamic(&b.transpose()).kronecker(&to_dynamic(a))
}

/// `X ↦ −i[H, X]`.
pub fn hamiltonian_superoperator<T: Real>(h: &Operator<T>) -> DMatrix<C<T>> {
    let id = Operator::identity();
    let minus_i = C::new(T::zero(), -T::one());
    (sandwich_superoperator(h, &id) - sandwich_superoperator(&id, h)) * minus_i
}

/// Dissipator of one channel as a 64×64 matrix.
pub fn channel_superoperator<T: Real>(channel: &JumpChannel<T>) -> DMatrix<C<T>> {
    let id = Operator::identity();
    let a = &channel.operator;
    let ad = a.adjoint();
    let ada = ad * a;
    let half = re(T::lit(0.5));
    (sandwich_superoperator(a, &ad)
        - (sandwich_superoperator(&ada, &id) + sandwich_superoperator(&id, &ada)) * half)
        * re(channel.rate)
}

/// Assembled master-equation generator.
#[derive(Debug, Clone)]
pub struct Generator<T: Real> {
    refrigerator: RefrigeratorSpec<T>,
    baths: Baths<T>,
    hamiltonian: Operator<T>,
    spectrum: Spectrum<T>,
    channels: Vec<JumpChannel<T>>,
    coherent: DMatrix<C<T>>,
    dissipative: DMatrix<C<T>>,
    matrix: DMatrix<C<T>>,
}

/// Builds `L` with `L vec(ρ) = vec(−i[H_ref, ρ] + Σ_α D_α(ρ))`.
pub fn build_generator<T: Real>(spec: &RefrigeratorSpec<T>, baths: &Baths<T>) -> Result<Generator<T>> {
    let hamiltonian = build_refrigerator_hamiltonian(spec);
    let spectrum = diagonalize(&hamiltonian)?;
    let mut cache = OccupationCache::new();
    let channels = build_jump_channels(&spectrum, baths, &mut cache)?;
    Ok(Generator::from_parts(*spec, *baths, hamiltonian, spectrum, channels))
}

impl<T: Real> Generator<T> {
    /// Assembles the superoperators from explicit channels.
    pub fn from_parts(
        refrigerator: RefrigeratorSpec<T>,
        baths: Baths<T>,
        hamiltonian: Operator<T>,
        spectrum: Spectrum<T>,
        channels: Vec<JumpChannel<T>>,
    ) -> Self {
        let coherent = hamiltonian_superoperator(&hamiltonian);
        let dissipative = channels.iter().fold(DMatrix::zeros(SUPER_DIM, SUPER_DIM), |acc, ch| {
            acc + channel_superoperator(ch)
        });
        let matrix = &coherent + &dissipative;
        Self {
            refrigerator,
            baths,
            hamiltonian,
            spectrum,
            channels,
            coherent,
            dissipative,
            matrix,
        }
    }

    pub fn refrigerator(&self) -> &RefrigeratorSpec<T> {
        &self.refrigerator
    }

    pub fn baths(&self) -> &Baths<T> {
        &self.baths
    }

    pub fn hamiltonian(&self) -> &Operator<T> {
        &self.hamiltonian
    }

    pub fn spectrum(&self) -> &Spectrum<T> {
        &self.spectrum
    }

    pub fn channels(&self) -> &[JumpChannel<T>] {
        &self.channels
    }

    /// Channels attached to one qubit's bath.
    pub fn channels_for(&self, qubit: Qubit) -> impl Iterator<Item = &JumpChannel<T>> {
        self.channels.iter().filter(move |c| c.qubit == qubit)
    }

    /// Full 64×64 generator.
    pub fn matrix(&self) -> &DMatrix<C<T>> {
        &self.matrix
    }

    /// Hamiltonian part `−i(I⊗H − Hᵀ⊗I)`.
    pub fn coherent_part(&self) -> &DMatrix<C<T>> {
        &self.coherent
    }

    /// Sum of all dissipators.
    pub fn dissipative_part(&self) -> &DMatrix<C<T>> {
        &self.dissipative
    }

    /// `D_α(ρ)` in matrix form.
    pub fn dissipator(&self, qubit: Qubit, rho: &Operator<T>) -> Operator<T> {
        dissipator_apply(self.channels_for(qubit), rho)
    }

    /// Right-hand side of the master equation evaluated in matrix form.
    pub fn apply(&self, rho: &Operator<T>) -> Operator<T> {
        let minus_i = C::new(T::zero(), -T::one());
        commutator(&self.hamiltonian, rho) * minus_i + dissipator_apply(&self.channels, rho)
    }

    /// `L vec(ρ)`.
    pub fn apply_vectorized(&self, v: &DVector<C<T>>) -> DVector<C<T>> {
        &self.matrix * v
    }

    /// Largest singular value of `L`.
    pub fn norm(&self) -> T {
        self.matrix.clone().singular_values().max()
    }

    /// `‖[L_H, L_D]‖_F / (‖L_H‖_F ‖L_D‖_F)`; zero (to rounding) for the
    /// secular generator.
    pub fn covariance_defect(&self) -> T {
        let a = &self.coherent;
        let b = &self.dissipative;
        let denom = a.norm() * b.norm();
        if denom == T::zero() {
            return T::zero();
        }
        (a * b - b * a).norm() / denom
    }

    /// Writes `qubit,omega,rate,operator_norm` rows.
    pub fn write_channels_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["qubit", "omega", "rate", "operator_norm"])?;
        for ch in &self.channels {
            csv.write_record([
                ch.qubit.label().to_string(),
                format!("{:e}", ch.omega.as_f64()),
                format!("{:e}", ch.rate.as_f64()),
                format!("{:e}", ch.operator.norm().as_f64()),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{Anharmonicity, DEFAULT_CUTOFF};
    use crate::operators::local_lowering;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(g: f64) -> RefrigeratorSpec<f64> {
        RefrigeratorSpec::new(1.0, 2.0, 1.0, g).unwrap()
    }

    fn baths(kappa: [f64; 3], temps: [f64; 3], zeta: Anharmonicity<f64>) -> Baths<f64> {
        let omega0 = [1.0, 2.0, 1.0];
        let b = |i: usize| BathSpec::new(temps[i], kappa[i], zeta, DEFAULT_CUTOFF, omega0[i]).unwrap();
        Baths::new(b(0), b(1), b(2))
    }

    fn steady_baths(zeta: Anharmonicity<f64>) -> Baths<f64> {
        baths([1e-4, 2e-4, 1e-4], [1.0, 1.0, 2.0], zeta)
    }

    fn random_hermitian(rng: &mut ChaCha8Rng) -> Operator<f64> {
        let m = Operator::<f64>::from_fn(|_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        m + m.adjoint()
    }

    fn spectrum(g: f64) -> Spectrum<f64> {
        diagonalize(&build_refrigerator_hamiltonian(&spec(g))).unwrap()
    }

    fn freqs(g: f64, q: Qubit) -> Vec<f64> {
        bohr_frequencies(&spectrum(g), q).unwrap().iter().map(|f| f.omega).collect()
    }

    #[test]
    fn decoupled_cold_frequencies() {
        let w = freqs(0.0, Qubit::Cold);
        assert_eq!(w.len(), 2);
        assert_relative_eq!(w[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(w[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn split_pair_adds_sidebands() {
        let w = freqs(0.1, Qubit::Cold);
        let want = [-1.1, -1.0, -0.9, 0.9, 1.0, 1.1];
        assert_eq!(w.len(), want.len());
        for (a, b) in w.iter().zip(want) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
        for q in Qubit::ALL {
            let w = freqs(0.8, q);
            let mut neg: Vec<f64> = w.iter().map(|x| -x).collect();
            neg.reverse();
            for (a, b) in w.iter().zip(&neg) {
                assert_relative_eq!(*a, *b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn channel_completeness_and_adjoint_pairing() {
        let sp = spectrum(0.8);
        let mut cache = OccupationCache::new();
        let chans = build_jump_channels(&sp, &steady_baths(Anharmonicity::Kerr(50.0)), &mut cache).unwrap();
        for q in Qubit::ALL {
            let mine: Vec<_> = chans.iter().filter(|c| c.qubit == q).collect();
            let total = mine.iter().fold(Operator::zeros(), |acc, c| acc + c.operator);
            assert!((total - local_pauli_x::<f64>(q)).norm() < 1e-12);
            for c in &mine {
                let partner = mine
                    .iter()
                    .find(|d| (d.omega + c.omega).abs() < 1e-9)
                    .expect("negative-frequency partner");
                assert!((partner.operator - c.operator.adjoint()).norm() < 1e-12);
                assert!(c.rate >= 0.0);
            }
        }
    }

    #[test]
    fn decoupled_channels_are_ladder_operators() {
        let sp = spectrum(0.0);
        let mut cache = OccupationCache::new();
        let chans = build_jump_channels(&sp, &steady_baths(Anharmonicity::Harmonic), &mut cache).unwrap();
        let cold: Vec<_> = chans.iter().filter(|c| c.qubit == Qubit::Cold).collect();
        assert_eq!(cold.len(), 2);
        let lower = local_lowering::<f64>(Qubit::Cold);
        let emit = cold.iter().find(|c| c.omega > 0.0).unwrap();
        let absorb = cold.iter().find(|c| c.omega < 0.0).unwrap();
        assert!((emit.operator - lower).norm() < 1e-14);
        assert!((absorb.operator - lower.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn dissipator_traceless_and_hermitian() {
        let gen = build_generator(&spec(0.8), &steady_baths(Anharmonicity::Kerr(20.0))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let rho = random_hermitian(&mut rng);
            for q in Qubit::ALL {
                let d = gen.dissipator(q, &rho);
                assert!(d.trace().norm() < 1e-15);
                assert!((d - d.adjoint()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_coupling_gives_zero_dissipator() {
        let gen = build_generator(&spec(0.1), &baths([0.0; 3], [1.0, 1.0, 2.0], Anharmonicity::Kerr(10.0))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_hermitian(&mut rng);
        for q in Qubit::ALL {
            assert_eq!(gen.dissipator(q, &rho), Operator::zeros());
        }
    }

    #[test]
    fn local_gibbs_is_fixed_point_of_harmonic_dissipator() {
        let t: [f64; 3] = [1.0, 1.0, 2.0];
        let gen = build_generator(&spec(0.0), &steady_baths(Anharmonicity::Harmonic)).unwrap();
        let omega: [f64; 3] = [1.0, 2.0, 1.0];
        let mut rho = Operator::<f64>::zeros();
        for i in 0..DIM {
            let p = Qubit::ALL.iter().fold(1.0, |acc, &q| {
                let k = q.index();
                let z = 1.0 + (-omega[k] / t[k]).exp();
                let excited = crate::operators::occupation_bit(i, q) == 1;
                acc * if excited { (-omega[k] / t[k]).exp() / z } else { 1.0 / z }
            });
            rho[(i, i)] = C::new(p, 0.0);
        }
        for q in Qubit::ALL {
            assert!(gen.dissipator(q, &rho).norm() < 1e-12 * 1e-4);
        }
    }

    #[test]
    fn vectorized_generator_matches_matrix_form() {
        let gen = build_generator(&spec(0.8), &baths([1e-4, 2e-5, 1e-3], [1.0, 1.0, 2.0], Anharmonicity::Kerr(100.0))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let rho = random_hermitian(&mut rng);
            let direct = gen.apply(&rho);
            let via_l = unvectorize(&gen.apply_vectorized(&vectorize(&rho)));
            assert!((direct - via_l).norm() <= 1e-12 * rho.norm().max(1.0));
            // Hermiticity preservation
            assert!((via_l - via_l.adjoint()).norm() < 1e-12);
        }
    }

    #[test]
    fn pure_hamiltonian_generator() {
        let s = spec(0.0);
        let gen = build_generator(&s, &baths([0.0; 3], [1.0, 1.0, 2.0], Anharmonicity::Harmonic)).unwrap();
        let h = build_refrigerator_hamiltonian(&s);
        let id = Operator::identity();
        let minus_i = C::new(0.0, -1.0);
        let expected = (to_dynamic(&id).kronecker(&to_dynamic(&h)) - to_dynamic(&h.transpose()).kronecker(&to_dynamic(&id))) * minus_i;
        assert!((gen.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn trace_preservation_functional() {
        let gen = build_generator(&spec(0.8), &steady_baths(Anharmonicity::Kerr(50.0))).unwrap();
        // row functional of the trace: entries i + 8i
        let l = gen.matrix();
        for col in 0..SUPER_DIM {
            let s = (0..DIM).fold(C::new(0.0, 0.0), |acc, i| acc + l[(i + DIM * i, col)]);
            assert!(s.norm() < 1e-12);
        }
    }

    #[test]
    fn secular_dissipator_commutes_with_hamiltonian_part() {
        for g in [0.0, 0.1, 0.8] {
            let gen = build_generator(&spec(g), &steady_baths(Anharmonicity::Kerr(50.0))).unwrap();
            assert!(gen.covariance_defect() < 1e-12);
        }
    }

    #[test]
    fn channel_csv_dump() {
        let gen = build_generator(&spec(0.1), &steady_baths(Anharmonicity::Harmonic)).unwrap();
        let mut buf = Vec::new();
        gen.write_channels_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "qubit,omega,rate,operator_norm");
        assert_eq!(lines.count(), gen.channels().len());
    }
}
