//! Helpers shared by the integration tests.

#![allow(dead_code)]

use dashu_float::FBig;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use nalgebra::DMatrix;
use qfridge::bath::{occupation, Anharmonicity, BathSpec, OccupationCache, DEFAULT_CUTOFF};
use qfridge::dynamics::DensityMatrix;
use qfridge::liouvillian::{build_jump_channels, Generator};
use qfridge::operators::{Qubit, Spectrum};
use qfridge::scalar::{Operator, C};

const PRECISION: usize = 256;

fn big(x: f64) -> FBig {
    FBig::try_from(x).expect("finite input").with_precision(PRECISION).value()
}

/// `S₁/S₀` summed in 256-bit binary floating point until the terms drop
/// below `1e-45 S₀`. Past that point every ratio of consecutive terms is
/// below `e^{-x}`, so the dropped tail is far below f64 resolution.
pub fn occupation_oracle(omega: f64, temperature: f64, zeta: f64) -> f64 {
    let x = big(omega) / big(temperature);
    let z = big(zeta);
    let one = big(1.0);
    let eps = big(1e-45);
    let mut s0 = big(0.0);
    let mut s1 = big(0.0);
    let mut n = 0u64;
    loop {
        let nf = big(n as f64);
        let exponent = -(x.clone() * nf.clone() * (one.clone() + nf.clone() / z.clone()));
        let term = exponent.exp();
        s0 += term.clone();
        s1 += nf * term.clone();
        if n > 0 && term < s0.clone() * eps.clone() {
            break;
        }
        n += 1;
    }
    (s1 / s0).to_f64().value()
}

pub fn kerr_bath(temperature: f64, zeta: f64) -> BathSpec<f64> {
    BathSpec::new(temperature, 1e-3, Anharmonicity::Kerr(zeta), DEFAULT_CUTOFF, 1.0).unwrap()
}

/// Uniform ω, T and log-uniform ζ on the checked ranges.
pub fn random_triple(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let omega = rng.gen_range(0.5..4.0);
    let temperature = rng.gen_range(0.5..2.0);
    let zeta = 10f64.powf(rng.gen_range(1.0..4.0));
    (omega, temperature, zeta)
}

/// Largest relative deviation of the production occupation from the oracle.
pub fn worst_oracle_error(samples: usize, seed: u64) -> (f64, (f64, f64, f64)) {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0, (0.0, 0.0, 0.0));
    for _ in 0..samples {
        let (w, t, z) = random_triple(&mut rng);
        let value = occupation(&kerr_bath(t, z), w).unwrap().value;
        let exact = occupation_oracle(w, t, z);
        let err = ((value - exact) / exact).abs();
        if err > worst.0 {
            worst = (err, (w, t, z));
        }
    }
    worst
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Unitary Q factor of a complex Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C<f64>> {
    let m = DMatrix::from_fn(n, n, |_, _| C::new(gaussian(rng), gaussian(rng)));
    m.qr().q()
}

/// Block-diagonal unitary mixing each degenerate level of the spectrum.
pub fn level_mixer(spectrum: &Spectrum<f64>, rng: &mut ChaCha8Rng) -> Operator<f64> {
    let mut w = Operator::identity();
    for level in spectrum.levels() {
        let u = random_unitary(rng, level.states.len());
        for (a, &i) in level.states.iter().enumerate() {
            for (b, &j) in level.states.iter().enumerate() {
                w[(i, j)] = u[(a, b)];
            }
        }
    }
    w
}

/// Random full-rank density matrix.
pub fn random_state(rng: &mut ChaCha8Rng) -> DensityMatrix<f64> {
    let a = Operator::from_fn(|_, _| C::new(gaussian(rng), gaussian(rng)));
    let m = a * a.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m / C::new(tr, 0.0)).unwrap()
}

pub fn max_entry(m: &DMatrix<C<f64>>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest change of any dissipator superoperator under random re-mixing of
/// degenerate eigenvectors, over `trials` draws.
pub fn gauge_defect(generator: &Generator<f64>, trials: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let w = level_mixer(generator.spectrum(), &mut rng);
        let mixed = generator.spectrum().remix(&w);
        let mut cache = OccupationCache::new();
        let channels = build_jump_channels(&mixed, generator.baths(), &mut cache).unwrap();
        let other = Generator::from_parts(
            *generator.refrigerator(),
            *generator.baths(),
            *generator.hamiltonian(),
            mixed,
            channels,
        );
        worst = worst.max(max_entry(&(other.dissipative_part() - generator.dissipative_part())));
        let rho = random_state(&mut rng);
        for q in Qubit::ALL {
            let d = other.dissipator(q, rho.matrix()) - generator.dissipator(q, rho.matrix());
            worst = worst.max(max_abs(&d));
        }
    }
    worst
}

pub fn max_abs(m: &Operator<f64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
