//! Quantum observables modelled as normal operators.
//!
//! * [`linalg`]: dense complex matrices, norms, and a Jacobi Hermitian eigensolver.
//! * [`observables`]: normality checks and spectral decomposition with complex eigenvalues.
//! * [`measurement`]: Born-rule distributions, seeded sampling and Lüders collapse.
//! * [`dynamics`]: unitary evolution and the Heisenberg equation for expectation values.
//! * [`chsh`]: CHSH correlations with complex outcome labels, LHV and Tsirelson bounds.
//! * [`cli`]: file formats and command implementations behind the `normobs` binary.

pub mod chsh;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod observables;
pub mod random;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector};
pub use measurement::{SpectralDistribution, StateVector};
pub use num_complex::Complex64;
pub use observables::{EigenvalueRelabeling, Observable};
