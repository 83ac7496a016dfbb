mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qfridge::bath::{occupation, Anharmonicity, BathSpec, DEFAULT_CUTOFF};
use qfridge::dynamics::{evolve, initial_product_gibbs, steady_state};
use qfridge::experiments::ExperimentConfig;
use qfridge::liouvillian::{build_generator, Baths, Generator};
use qfridge::operators::{Qubit, RefrigeratorSpec};
use qfridge::scalar::C;

use common::{gauge_defect, random_state};

fn preset_generator(name: &str, zeta: f64) -> Generator<f64> {
    let config = ExperimentConfig::preset(name).unwrap();
    build_generator(&config.refrigerator().unwrap(), &config.baths_at(zeta).unwrap()).unwrap()
}

fn baths(zeta: Anharmonicity<f64>, temps: [f64; 3]) -> Baths<f64> {
    let b = |t: f64, w0: f64| BathSpec::new(t, 1e-3 * w0, zeta, DEFAULT_CUTOFF, w0).unwrap();
    Baths::new(b(temps[0], 1.0), b(temps[1], 2.0), b(temps[2], 1.0))
}

#[test]
fn dissipators_ignore_the_basis_inside_degenerate_levels() {
    for (name, zeta) in [("transient-regime", f64::INFINITY), ("steady-regime", 50.0)] {
        let d = gauge_defect(&preset_generator(name, zeta), 8, 7);
        assert!(d <= 1e-10, "{name}: {d:e}");
    }
    let spec = RefrigeratorSpec::new(1.0, 2.0, 1.0, 0.0).unwrap();
    let g = build_generator(&spec, &baths(Anharmonicity::Kerr(20.0), [1.0, 1.0, 2.0])).unwrap();
    assert!(gauge_defect(&g, 8, 11) <= 1e-10);
}

#[test]
fn generator_is_linear() {
    let g = preset_generator("steady-regime", 100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (r1, r2) = (random_state(&mut rng), random_state(&mut rng));
    let a = 0.3;
    let mix = r1.matrix() * C::new(a, 0.0) + r2.matrix() * C::new(1.0 - a, 0.0);
    let lhs = g.apply(&mix);
    let rhs = g.apply(r1.matrix()) * C::new(a, 0.0) + g.apply(r2.matrix()) * C::new(1.0 - a, 0.0);
    assert!(common::max_abs(&(lhs - rhs)) < 1e-15);
}

#[test]
fn evolution_contracts_trace_distance_and_keeps_states_physical() {
    let g = preset_generator("steady-regime", 50.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (r1, r2) = (random_state(&mut rng), random_state(&mut rng));
    let grid: Vec<f64> = (0..=40).map(|k| 250.0 * k as f64).collect();
    let a = evolve(&g, &r1, 1e4, &grid).unwrap();
    let b = evolve(&g, &r2, 1e4, &grid).unwrap();
    let mut last = f64::INFINITY;
    for (x, y) in a.states.iter().zip(&b.states) {
        let d = x.trace_distance(y);
        assert!(d <= last + 1e-8, "trace distance grew from {last:e} to {d:e}");
        last = d;
        for s in [x, y] {
            let defects = s.defects();
            assert!(defects.min_eigenvalue >= -1e-10 && defects.trace < 1e-8 && defects.hermiticity < 1e-10);
        }
    }
    assert!(last < r1.trace_distance(&r2));
}

#[test]
fn decoupled_harmonic_fridge_relaxes_to_product_gibbs() {
    let spec = RefrigeratorSpec::new(1.0, 2.0, 1.0, 0.0).unwrap();
    let b = baths(Anharmonicity::Harmonic, [0.7, 1.3, 2.0]);
    let g = build_generator(&spec, &b).unwrap();
    let ss = steady_state(&g).unwrap();
    assert!(ss.trace_distance(&initial_product_gibbs(&spec, &b)) < 1e-10);
}

#[test]
fn decoupled_kerr_fridge_populations_follow_the_bath_occupation() {
    let spec = RefrigeratorSpec::new(1.0, 2.0, 1.0, 0.0).unwrap();
    for zeta in [10.0, 50.0, 1e3] {
        let b = baths(Anharmonicity::Kerr(zeta), [1.0, 1.0, 2.0]);
        let g = build_generator(&spec, &b).unwrap();
        let ss = steady_state(&g).unwrap();
        for q in Qubit::ALL {
            let n = occupation(b.get(q), spec.omega(q)).unwrap().value;
            let p1 = ss.excited_population(q);
            let ratio = p1 / (1.0 - p1);
            assert!((ratio - n / (n + 1.0)).abs() < 1e-10, "ζ = {zeta}, {q:?}: {ratio} vs {}", n / (n + 1.0));
        }
    }
}

#[test]
fn steady_state_is_a_fixed_point_of_long_evolution() {
    let g = preset_generator("steady-regime", 100.0);
    let ss = steady_state(&g).unwrap();
    let rho0 = initial_product_gibbs(g.refrigerator(), g.baths());
    let horizon = qfridge::experiments::relaxation_horizon(&g);
    let tr = evolve(&g, &rho0, horizon, &[horizon]).unwrap();
    assert!(tr.states[0].trace_distance(&ss) <= 1e-8);
    let again = evolve(&g, &ss, 1e3, &[1e3]).unwrap();
    assert!(again.states[0].trace_distance(&ss) <= 1e-9);
}

#[test]
fn single_precision_tracks_double_precision() {
    // single precision resolves the steady state only when the slowest
    // relaxation rate sits well above f32 resolution of ‖L‖
    let kappa = 1e-2;
    let spec32 = RefrigeratorSpec::<f32>::new(1.0, 2.0, 1.0, 0.1).unwrap();
    let b32 = |t: f32, w0: f32| BathSpec::new(t, kappa as f32 * w0, Anharmonicity::Kerr(50.0), 5000.0, w0).unwrap();
    let g32 = build_generator(&spec32, &Baths::new(b32(1.0, 1.0), b32(1.0, 2.0), b32(2.0, 1.0))).unwrap();
    let ss32: qfridge::DensityMatrixF32 = steady_state(&g32).unwrap();

    let spec64 = RefrigeratorSpec::new(1.0, 2.0, 1.0, 0.1).unwrap();
    let b64 = |t: f64, w0: f64| BathSpec::new(t, kappa * w0, Anharmonicity::Kerr(50.0), 5000.0, w0).unwrap();
    let g64 = build_generator(&spec64, &Baths::new(b64(1.0, 1.0), b64(1.0, 2.0), b64(2.0, 1.0))).unwrap();
    let ss64 = steady_state(&g64).unwrap();
    for q in Qubit::ALL {
        let d = ss32.excited_population(q) as f64 - ss64.excited_population(q);
        assert!(d.abs() < 1e-4, "{q:?}: {d:e}");
    }
}
