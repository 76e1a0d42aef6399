//! Unitary evolution and the Heisenberg equation for expectation values.
//!
//! Units have `hbar = 1`. States evolve as `exp(-iHt) psi`, computed exactly
//! from the spectral decomposition of `H`, and
//! `d<A>/dt = (1/i) <[A, H]>` holds for any normal `A`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{commutator, hermiticity_residual, jacobi_eig, ComplexMatrix, DEFAULT_TOL, I};
use crate::measurement::StateVector;
use crate::observables::{expectation, Observable};

/// Step used by the central-difference derivative.
pub const DEFAULT_DT: f64 = 1e-5;

/// Hermitian generator of time evolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    matrix: ComplexMatrix,
    energies: Vec<f64>,
    basis: ComplexMatrix,
}

impl Hamiltonian {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_hermitian(DEFAULT_TOL) {
            return Err(Error::NotHermitian {
                residual: hermiticity_residual(&matrix),
            });
        }
        let (energies, basis) = jacobi_eig(&matrix.hermitian_part())?;
        Ok(Self {
            matrix,
            energies,
            basis,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `exp(-iHt)`.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        let phases: Vec<Complex64> = self
            .energies
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * t))
            .collect();
        &(&self.basis * &ComplexMatrix::diag(&phases)) * &self.basis.adjoint()
    }
}

fn check_dims(n: usize, psi: &StateVector) -> Result<()> {
    if psi.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi.dim(),
        });
    }
    Ok(())
}

pub fn evolve(psi: &StateVector, h: &Hamiltonian, t: f64) -> Result<StateVector> {
    check_dims(h.dim(), psi)?;
    let v = h.propagator(t).apply(psi.vector())?;
    // Strip the O(eps) norm drift of the matrix product.
    StateVector::normalize(v)
}

/// `(1/i) <psi|[A, H]|psi>`.
pub fn heisenberg_rhs(a: &Observable, h: &Hamiltonian, psi: &StateVector) -> Result<Complex64> {
    check_dims(h.dim(), psi)?;
    if a.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: a.dim(),
        });
    }
    let comm = commutator(a.matrix(), h.matrix())?;
    Ok(comm.sandwich(psi.vector(), psi.vector())? * -I)
}

/// Central difference of `t -> <A>(t)` with step `dt`.
pub fn expectation_derivative(
    a: &Observable,
    h: &Hamiltonian,
    psi: &StateVector,
    t: f64,
    dt: f64,
) -> Result<Complex64> {
    let forward = expectation(a, &evolve(psi, h, t + dt)?)?;
    let backward = expectation(a, &evolve(psi, h, t - dt)?)?;
    Ok((forward - backward) / (2.0 * dt))
}

/// Both sides of the Heisenberg equation at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EhrenfestSample {
    pub t: f64,
    pub derivative: Complex64,
    pub rhs: Complex64,
}

impl EhrenfestSample {
    pub fn deviation(&self) -> f64 {
        (self.derivative - self.rhs).norm()
    }
}

pub fn ehrenfest_samples(
    a: &Observable,
    h: &Hamiltonian,
    psi: &StateVector,
    t_grid: &[f64],
    dt: f64,
) -> Result<Vec<EhrenfestSample>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    t_grid
        .iter()
        .map(|&t| {
            Ok(EhrenfestSample {
                t,
                derivative: expectation_derivative(a, h, psi, t, dt)?,
                rhs: heisenberg_rhs(a, h, &evolve(psi, h, t)?)?,
            })
        })
        .collect()
}

/// Largest `|d<A>/dt - (1/i)<[A,H]>|` over `t_grid`, derivative by central
/// differences with step `dt`.
pub fn ehrenfest_check(
    a: &Observable,
    h: &Hamiltonian,
    psi: &StateVector,
    t_grid: &[f64],
    dt: f64,
) -> Result<f64> {
    Ok(ehrenfest_samples(a, h, psi, t_grid, dt)?
        .iter()
        .map(EhrenfestSample::deviation)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::observables::{from_commuting_pair, hermitian_parts};
    use crate::random::{
        planted_normal, random_disk_point, random_hermitian, random_state, rng_from_seed,
    };
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plus() -> StateVector {
        let h = 0.5f64.sqrt();
        StateVector::from_amplitudes(vec![c(h, 0.0), c(h, 0.0)]).unwrap()
    }

    fn hz() -> Hamiltonian {
        Hamiltonian::new(ComplexMatrix::pauli_z()).unwrap()
    }

    #[test]
    fn rejects_non_hermitian_hamiltonian() {
        assert!(matches!(
            Hamiltonian::new(ComplexMatrix::diag(&[I, ONE])),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn evolve_at_zero_is_identity() {
        let mut rng = rng_from_seed(1);
        let psi = random_state(3, &mut rng);
        let h = Hamiltonian::new(random_hermitian(3, &mut rng)).unwrap();
        let out = evolve(&psi, &h, 0.0).unwrap();
        assert!((&out.vector().clone() - psi.vector()).norm() < 1e-14);
    }

    #[test]
    fn eigenstate_picks_up_global_phase() {
        let t = 0.7;
        let out = evolve(&StateVector::basis(2, 0), &hz(), t).unwrap();
        assert!((out.amplitudes()[0] - Complex64::from_polar(1.0, -t)).norm() < 1e-15);
        assert_eq!(out.amplitudes()[1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn evolution_is_unitary_and_composes() {
        let mut rng = rng_from_seed(2);
        for n in 2..=4 {
            let psi = random_state(n, &mut rng);
            let h = Hamiltonian::new(random_hermitian(n, &mut rng)).unwrap();
            let a = evolve(&psi, &h, 1.3).unwrap();
            assert!((a.vector().norm() - 1.0).abs() <= 1e-10);
            let b = evolve(&a, &h, -0.4).unwrap();
            let direct = evolve(&psi, &h, 0.9).unwrap();
            assert!((b.vector() - direct.vector()).norm() <= 1e-9);
        }
    }

    #[test]
    fn commuting_observable_has_zero_rhs() {
        let a = Observable::new(ComplexMatrix::pauli_z()).unwrap();
        assert_eq!(heisenberg_rhs(&a, &hz(), &plus()).unwrap(), c(0.0, 0.0));
        let f =
            from_commuting_pair(&ComplexMatrix::pauli_z(), &ComplexMatrix::identity(2)).unwrap();
        let mut rng = rng_from_seed(4);
        for _ in 0..10 {
            let psi = random_state(2, &mut rng);
            assert!(heisenberg_rhs(&f, &hz(), &psi).unwrap().norm() < 1e-15);
        }
        let grid: Vec<f64> = (0..10).map(|k| k as f64 * 0.3).collect();
        assert!(ehrenfest_check(&a, &hz(), &plus(), &grid, DEFAULT_DT).unwrap() <= 1e-12);
    }

    #[test]
    fn rhs_matches_finite_difference_for_precession() {
        let x = Observable::new(ComplexMatrix::pauli_x()).unwrap();
        let rhs = heisenberg_rhs(&x, &hz(), &plus()).unwrap();
        let fd = expectation_derivative(&x, &hz(), &plus(), 0.0, DEFAULT_DT).unwrap();
        assert!((rhs - fd).norm() <= 1e-8, "{rhs} vs {fd}");
        // <sigma_x>(t) = cos 2t, so the derivative at 0 vanishes.
        assert!(rhs.norm() < 1e-15);

        let grid: Vec<f64> = (0..=200).map(|k| 2.0 * PI * k as f64 / 200.0).collect();
        assert!(ehrenfest_check(&x, &hz(), &plus(), &grid, DEFAULT_DT).unwrap() <= 1e-7);
    }

    #[test]
    fn non_hermitian_observable_tracks_complex_expectation() {
        // F = sigma_x + i(sigma_x + I): commuting Hermitian parts, non-Hermitian F.
        let sx = ComplexMatrix::pauli_x();
        let d = &sx + &ComplexMatrix::identity(2);
        let f = from_commuting_pair(&sx, &d).unwrap();
        let h = Hamiltonian::new(
            &ComplexMatrix::pauli_z() + &ComplexMatrix::pauli_y().scale(c(0.3, 0.0)),
        )
        .unwrap();
        let psi = random_state(2, &mut rng_from_seed(8));
        let grid: Vec<f64> = (0..=50).map(|k| 2.0 * PI * k as f64 / 50.0).collect();
        assert!(ehrenfest_check(&f, &h, &psi, &grid, DEFAULT_DT).unwrap() <= 1e-7);
        let samples = ehrenfest_samples(&f, &h, &psi, &grid, DEFAULT_DT).unwrap();
        assert!(samples.iter().any(|s| s.rhs.im.abs() > 1e-3));
    }

    #[test]
    fn rhs_is_linear_over_hermitian_parts() {
        let mut rng = rng_from_seed(12);
        for n in 2..=4 {
            let eigs: Vec<Complex64> = (0..n).map(|_| random_disk_point(&mut rng)).collect();
            let b = planted_normal(&eigs, &mut rng);
            let (cc, dd) = hermitian_parts(&b);
            let h = Hamiltonian::new(random_hermitian(n, &mut rng)).unwrap();
            let psi = random_state(n, &mut rng);
            let whole = heisenberg_rhs(&Observable::new(b).unwrap(), &h, &psi).unwrap();
            let rc = heisenberg_rhs(&Observable::new(cc).unwrap(), &h, &psi).unwrap();
            let rd = heisenberg_rhs(&Observable::new(dd).unwrap(), &h, &psi).unwrap();
            assert!((whole - (rc + I * rd)).norm() <= 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = Observable::new(ComplexMatrix::pauli_x()).unwrap();
        let psi = StateVector::basis(3, 0);
        assert!(matches!(
            evolve(&psi, &hz(), 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(heisenberg_rhs(&a, &hz(), &psi).is_err());
        assert!(ehrenfest_check(&a, &hz(), &plus(), &[0.0], 0.0).is_err());
    }
}
