//! Seeded random matrices, states and observables.
//!
//! All draws go through [`SimRng`] (ChaCha8), whose output stream is fixed by
//! the algorithm and therefore identical on every platform for a given seed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{jacobi_eig, ComplexMatrix, ComplexVector};
use crate::measurement::StateVector;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Hermitian matrix `(G + G^dag) / 2` from a complex Gaussian `G`, scaled by
/// `1/sqrt(n)` so the spectrum stays O(1).
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    let g = (0..n * n)
        .map(|_| gaussian_complex(rng) * scale)
        .collect::<Vec<_>>();
    ComplexMatrix::new(n, g).unwrap().hermitian_part()
}

/// Random unitary taken as the eigenbasis of a random Hermitian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let h = random_hermitian(n, rng);
    let (_, u) = jacobi_eig(&h).expect("Jacobi failed on a random Hermitian matrix");
    // Randomize column phases; the eigensolver gauge-fixes them otherwise.
    let phases: Vec<Complex64> = (0..n).map(|_| random_phase(rng)).collect();
    &u * &ComplexMatrix::diag(&phases)
}

pub fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.gen_range(-PI..PI))
}

/// `V diag(eigenvalues) V^dag` for a random unitary `V`.
pub fn planted_normal<R: Rng + ?Sized>(eigenvalues: &[Complex64], rng: &mut R) -> ComplexMatrix {
    let v = random_unitary(eigenvalues.len(), rng);
    &(&v * &ComplexMatrix::diag(eigenvalues)) * &v.adjoint()
}

/// Uniform point in the unit disk.
pub fn random_disk_point<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen_range(-PI..PI))
}

pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    loop {
        let v = ComplexVector::new((0..dim).map(|_| gaussian_complex(rng)).collect())
            .expect("Gaussian samples are finite");
        if let Ok(s) = StateVector::normalize(v) {
            return s;
        }
    }
}

/// Single-qubit normal operator with two distinct unimodular eigenvalues.
pub fn random_unitary_normal_qubit<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    loop {
        let a = random_phase(rng);
        let b = random_phase(rng);
        if (a - b).norm() > 1e-3 {
            return planted_normal(&[a, b], rng);
        }
    }
}

/// Single-qubit Hermitian operator with spectrum {-1, +1}: `n.sigma` for a
/// uniformly random unit vector `n`.
pub fn random_hermitian_unitary_qubit<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let cos_theta: f64 = rng.gen_range(-1.0..=1.0);
    let theta = cos_theta.clamp(-1.0, 1.0).acos();
    let phi = rng.gen_range(-PI..PI);
    crate::chsh::bloch_observable_matrix(theta, phi)
}
