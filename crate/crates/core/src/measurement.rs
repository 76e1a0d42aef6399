//! Projective measurement of normal observables.
//!
//! Each eigenspace of an [`Observable`] is one outcome. Probabilities follow
//! the Born rule and post-measurement states are Lüders projections, so
//! neither depends on the numeric eigenvalue attached to the eigenspace.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::ComplexVector;
use crate::observables::Observable;
use crate::random::{rng_from_seed, SimRng};

/// Allowed deviation of `||psi||` from 1.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Branches at or below this probability have no post-measurement state.
pub const ZERO_PROBABILITY: f64 = 1e-12;

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: ComplexVector,
}

impl StateVector {
    /// Wraps a vector that is already normalized within [`NORMALIZATION_TOL`].
    pub fn new(amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::new(ComplexVector::new(amplitudes)?)
    }

    /// Rescales any nonzero vector to unit norm.
    pub fn normalize(v: ComplexVector) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            amplitudes: v.scale(Complex64::new(1.0 / norm, 0.0)),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        Self {
            amplitudes: ComplexVector::basis(dim, index),
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.dim()
    }

    pub fn vector(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.amplitudes.amplitudes()
    }

    /// Two-party product state; `self` is the major index.
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            amplitudes: self.amplitudes.kron(&other.amplitudes),
        }
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.amplitudes.inner(&other.amplitudes)?.norm_sqr())
    }
}

/// One measurement outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub eigenvalue: Complex64,
    pub probability: f64,
    /// `None` when the branch probability is at most [`ZERO_PROBABILITY`].
    pub post_state: Option<StateVector>,
}

/// Outcomes in the observable's eigenspace order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDistribution {
    pub outcomes: Vec<Outcome>,
}

impl SpectralDistribution {
    pub fn probabilities(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.probability).collect()
    }

    /// `sum_i lambda_i p_i`.
    pub fn mean(&self) -> Complex64 {
        self.outcomes
            .iter()
            .map(|o| o.eigenvalue * o.probability)
            .sum()
    }

    /// Inverse-CDF draw over the outcomes in order.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut cumulative = 0.0;
        for (i, o) in self.outcomes.iter().enumerate() {
            cumulative += o.probability;
            if u < cumulative {
                return i;
            }
        }
        // Rounding left the total just under u; take the last reachable branch.
        self.outcomes
            .iter()
            .rposition(|o| o.probability > 0.0)
            .unwrap_or(self.outcomes.len() - 1)
    }
}

/// Sampled outcome counts, indexed by eigenspace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub seed: u64,
    pub shots: u64,
    pub counts: Vec<u64>,
}

fn check_dims(a: &Observable, psi: &StateVector) -> Result<()> {
    if a.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: psi.dim(),
        });
    }
    Ok(())
}

/// Projection of `psi` onto eigenspace `k`, and its squared norm computed
/// from the eigenbasis overlaps.
fn project(a: &Observable, psi: &StateVector, k: usize) -> Result<(ComplexVector, f64)> {
    let mut projected = ComplexVector::zeros(psi.dim());
    let mut weight = 0.0;
    for &col in a.eigenspace_columns(k)? {
        let u = a.eigenvector(col);
        let overlap = u.inner(psi.vector())?;
        weight += overlap.norm_sqr();
        projected.axpy(overlap, &u);
    }
    Ok((projected, weight))
}

fn renormalized(v: ComplexVector, weight: f64) -> StateVector {
    StateVector {
        amplitudes: v.scale(Complex64::new(1.0 / weight.sqrt(), 0.0)),
    }
}

pub fn spectral_distribution(a: &Observable, psi: &StateVector) -> Result<SpectralDistribution> {
    check_dims(a, psi)?;
    let values = a.outcome_values();
    let outcomes = (0..a.eigenspace_count())
        .map(|k| {
            let (projected, probability) = project(a, psi, k)?;
            let post_state =
                (probability > ZERO_PROBABILITY).then(|| renormalized(projected, probability));
            Ok(Outcome {
                eigenvalue: values[k],
                probability,
                post_state,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SpectralDistribution { outcomes })
}

/// Draws `shots` outcomes from an explicit generator.
pub fn sample_with(
    a: &Observable,
    psi: &StateVector,
    shots: u64,
    rng: &mut SimRng,
) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let dist = spectral_distribution(a, psi)?;
    let mut counts = vec![0u64; dist.outcomes.len()];
    for _ in 0..shots {
        counts[dist.draw(rng)] += 1;
    }
    Ok(counts)
}

/// Seeded i.i.d. sampling; the same inputs give the same counts everywhere.
pub fn sample(
    a: &Observable,
    psi: &StateVector,
    shots: u64,
    seed: u64,
) -> Result<MeasurementRecord> {
    let mut rng = rng_from_seed(seed);
    let counts = sample_with(a, psi, shots, &mut rng)?;
    Ok(MeasurementRecord {
        seed,
        shots,
        counts,
    })
}

/// Lüders post-measurement state for eigenspace `k`.
pub fn collapse(a: &Observable, psi: &StateVector, k: usize) -> Result<StateVector> {
    check_dims(a, psi)?;
    let (projected, probability) = project(a, psi, k)?;
    if probability <= ZERO_PROBABILITY {
        return Err(Error::ZeroProbabilityBranch {
            index: k,
            probability,
        });
    }
    Ok(renormalized(projected, probability))
}

/// Measures once, collapses, then re-measures `rounds - 1` times. True iff
/// every repetition reproduces the first outcome.
pub fn stationarity_check(
    a: &Observable,
    psi: &StateVector,
    rounds: u64,
    seed: u64,
) -> Result<bool> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("rounds must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let first = spectral_distribution(a, psi)?.draw(&mut rng);
    let mut state = collapse(a, psi, first)?;
    for _ in 1..rounds {
        let outcome = spectral_distribution(a, &state)?.draw(&mut rng);
        if outcome != first {
            return Ok(false);
        }
        state = collapse(a, &state, outcome)?;
    }
    Ok(true)
}
