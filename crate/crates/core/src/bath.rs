//! Bath-side physics: Ohmic spectral density, thermal occupation of Kerr-type
//! anharmonic modes, and the decay-rate kernel.
//!
//! A Kerr bath mode of frequency `ω` has levels `ω n + (ω/ζ) n²`. Its thermal
//! occupation has no closed form, so it is summed directly with a certified
//! bound on the dropped tail. `ζ = ∞` is the harmonic (Bose-Einstein) limit.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Anharmonicity parameter `ζ` of the bath oscillators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anharmonicity<T> {
    /// Kerr-type shift `(Ω/ζ)(b†b)²` with finite `ζ > 0`.
    Kerr(T),
    /// `ζ = ∞`: plain harmonic oscillators.
    Harmonic,
}

impl<T: Real> Anharmonicity<T> {
    /// `ζ` as a number, `+∞` for the harmonic limit.
    pub fn zeta_f64(&self) -> f64 {
        match self {
            Anharmonicity::Kerr(z) => z.as_f64(),
            Anharmonicity::Harmonic => f64::INFINITY,
        }
    }

    pub fn is_harmonic(&self) -> bool {
        matches!(self, Anharmonicity::Harmonic)
    }

    /// Maps `+∞` to [`Anharmonicity::Harmonic`]; rejects `ζ ≤ 0` and NaN.
    pub fn from_zeta(zeta: T) -> Result<Self> {
        if zeta.is_finite() {
            if zeta > T::zero() {
                Ok(Anharmonicity::Kerr(zeta))
            } else {
                Err(Error::InvalidBath(format!(
                    "anharmonicity zeta must be positive (inverted anharmonicity makes the occupation series diverge), got {zeta}"
                )))
            }
        } else if zeta > T::zero() {
            Ok(Anharmonicity::Harmonic)
        } else {
            Err(Error::InvalidBath(format!("invalid anharmonicity zeta {zeta}")))
        }
    }
}

impl<T: Real> fmt::Display for Anharmonicity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Anharmonicity::Kerr(z) => write!(f, "{z}"),
            Anharmonicity::Harmonic => f.write_str("inf"),
        }
    }
}

impl<T: Real> FromStr for Anharmonicity<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinite" | "infinity" | "harmonic") {
            return Ok(Anharmonicity::Harmonic);
        }
        let z: f64 = s
            .parse()
            .map_err(|_| Error::InvalidBath(format!("cannot parse zeta `{s}`")))?;
        Self::from_zeta(T::lit(z))
    }
}

/// Thermal bath attached to one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec<T> {
    temperature: T,
    kappa: T,
    zeta: Anharmonicity<T>,
    cutoff: T,
    omega0: T,
}

/// Ohmic cutoff used throughout the reproduced studies.
pub const DEFAULT_CUTOFF: f64 = 5000.0;

impl<T: Real> BathSpec<T> {
    pub fn new(temperature: T, kappa: T, zeta: Anharmonicity<T>, cutoff: T, omega0: T) -> Result<Self> {
        let positive = |name: &str, x: T| {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidBath(format!("{name} must be positive and finite, got {x}")))
            }
        };
        positive("temperature", temperature)?;
        positive("cutoff", cutoff)?;
        positive("omega0", omega0)?;
        if !(kappa >= T::zero()) || !kappa.is_finite() {
            return Err(Error::InvalidBath(format!("kappa must be non-negative, got {kappa}")));
        }
        if let Anharmonicity::Kerr(z) = zeta {
            Anharmonicity::from_zeta(z)?;
        }
        Ok(Self {
            temperature,
            kappa,
            zeta,
            cutoff,
            omega0,
        })
    }

    pub fn temperature(&self) -> T {
        self.temperature
    }

    pub fn beta(&self) -> T {
        T::one() / self.temperature
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn zeta(&self) -> Anharmonicity<T> {
        self.zeta
    }

    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    pub fn omega0(&self) -> T {
        self.omega0
    }

    pub fn with_zeta(&self, zeta: Anharmonicity<T>) -> Result<Self> {
        Self::new(self.temperature, self.kappa, zeta, self.cutoff, self.omega0)
    }

    pub fn with_kappa(&self, kappa: T) -> Result<Self> {
        Self::new(self.temperature, kappa, self.zeta, self.cutoff, self.omega0)
    }

    pub fn with_temperature(&self, temperature: T) -> Result<Self> {
        Self::new(temperature, self.kappa, self.zeta, self.cutoff, self.omega0)
    }
}

/// Thermal occupation together with its summation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationResult<T> {
    pub value: T,
    /// Number of series terms summed (0 for the closed-form harmonic case).
    pub terms_used: usize,
    /// Rigorous upper bound on `|value − exact|` due to truncation.
    pub truncation_bound: T,
}

/// Hard cap on the number of series terms.
pub const MAX_TERMS: usize = 10_000_000;

/// `J(ω) = (2/π) κ (|ω|/ω₀) exp(−|ω|/ω_cut)`.
pub fn spectral_density<T: Real>(bath: &BathSpec<T>, omega: T) -> Result<T> {
    if omega == T::zero() || !omega.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "spectral density requested at omega = {omega}"
        )));
    }
    let w = omega.abs();
    Ok(T::lit(2.0) / T::pi() * bath.kappa * (w / bath.omega0) * (-w / bath.cutoff).exp())
}

/// Mean occupation `⟨n_β(ω)⟩` of a bath mode at frequency `ω > 0`.
///
/// Finite `ζ`: `S₁/S₀` with `S_k = Σ_n n^k exp(−β(ωn + ωn²/ζ))`, summed until
/// the current term is below `1e-16·S₀` and a geometric majorant of the tail
/// bounds the error by `1e-15` relative. Harmonic: `1/(exp(βω) − 1)`.
pub fn occupation<T: Real>(bath: &BathSpec<T>, omega: T) -> Result<OccupationResult<T>> {
    if !(omega > T::zero()) || !omega.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "occupation requires a positive frequency, got {omega}"
        )));
    }
    let x = bath.beta() * omega;
    match bath.zeta {
        Anharmonicity::Harmonic => Ok(OccupationResult {
            value: T::one() / x.exp_m1(),
            terms_used: 0,
            truncation_bound: T::zero(),
        }),
        Anharmonicity::Kerr(zeta) => kerr_occupation(x, zeta, omega, bath.temperature),
    }
}

fn kerr_occupation<T: Real>(x: T, zeta: T, omega: T, temperature: T) -> Result<OccupationResult<T>> {
    let term_tol = T::tol(1e-16);
    let tail_tol = T::tol(1e-15);
    let mut s0 = NeumaierSum::default();
    let mut s1 = NeumaierSum::default();
    let mut last = T::one();
    for n in 0..MAX_TERMS {
        let nf = T::lit(n as f64);
        let term = (-x * nf * (T::one() + nf / zeta)).exp();
        s0.add(term);
        s1.add(nf * term);
        last = term;
        if n == 0 {
            continue;
        }
        let (p0, p1) = (s0.value(), s1.value());
        if term > term_tol * p0 {
            continue;
        }
        // t_{m+1}/t_m = exp(−x(1 + (2m+1)/ζ)) ≤ r for every m ≥ n.
        let r = (-x * (T::one() + T::lit(2.0) * nf / zeta)).exp();
        let one_minus_r = T::one() - r;
        let tail0 = term * r / one_minus_r;
        let tail1 = term * (nf * r / one_minus_r + r / (one_minus_r * one_minus_r));
        let value = p1 / p0;
        let bound = (tail1 + value * tail0) / p0;
        if bound <= tail_tol * value || value == T::zero() {
            return Ok(OccupationResult {
                value,
                terms_used: n + 1,
                truncation_bound: bound,
            });
        }
    }
    Err(Error::OccupationNotConverged {
        terms: MAX_TERMS,
        omega: omega.as_f64(),
        temperature: temperature.as_f64(),
        zeta: zeta.as_f64(),
        last_term: last.as_f64(),
        partial: (s1.value() / s0.value()).as_f64(),
    })
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy)]
struct NeumaierSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> Default for NeumaierSum<T> {
    fn default() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }
}

impl<T: Real> NeumaierSum<T> {
    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> T {
        self.sum + self.compensation
    }
}

/// Decay rate of the channel at Bohr frequency `ω`:
/// `(π/2) J(ω) (⟨n(ω)⟩ + 1)` for `ω > 0` (emission into the bath) and
/// `(π/2) J(ω) ⟨n(|ω|)⟩` for `ω < 0` (absorption).
pub fn decay_rate<T: Real>(bath: &BathSpec<T>, omega: T) -> Result<T> {
    let n = occupation(bath, omega.abs())?.value;
    rate_from_occupation(bath, omega, n)
}

fn rate_from_occupation<T: Real>(bath: &BathSpec<T>, omega: T, n: T) -> Result<T> {
    let j = spectral_density(bath, omega)?;
    let half_pi = T::frac_pi_2();
    Ok(if omega > T::zero() {
        half_pi * j * (n + T::one())
    } else {
        half_pi * j * n
    })
}

/// Memo of occupation results keyed by the exact `(ω, T, ζ)` bit patterns.
///
/// Owned by one assembly at a time; share across threads by giving each
/// worker its own cache.
#[derive(Debug, Default)]
pub struct OccupationCache<T> {
    entries: HashMap<(u64, u64, u64), OccupationResult<T>>,
    hits: usize,
}

impl<T: Real> OccupationCache<T> {
    pub fn new() -> Self {
        Self {
            entries: HashMap::new(),
            hits: 0,
        }
    }

    pub fn occupation(&mut self, bath: &BathSpec<T>, omega: T) -> Result<OccupationResult<T>> {
        let key = (
            omega.as_f64().to_bits(),
            bath.temperature.as_f64().to_bits(),
            bath.zeta.zeta_f64().to_bits(),
        );
        if let Some(hit) = self.entries.get(&key) {
            self.hits += 1;
            return Ok(*hit);
        }
        let result = occupation(bath, omega)?;
        self.entries.insert(key, result);
        Ok(result)
    }

    pub fn decay_rate(&mut self, bath: &BathSpec<T>, omega: T) -> Result<T> {
        if omega == T::zero() {
            return Err(Error::InvalidArgument("decay rate requested at omega = 0".into()));
        }
        let n = self.occupation(bath, omega.abs())?.value;
        rate_from_occupation(bath, omega, n)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hits(&self) -> usize {
        self.hits
    }
}
