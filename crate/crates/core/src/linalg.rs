//! Dense complex linear algebra for small operators.
//!
//! Everything here works on square row-major matrices of `Complex64`. The
//! intended scale is a few dozen dimensions at most; no blocking or sparse
//! storage is attempted. The one nontrivial routine is [`hermitian_eig`], a
//! cyclic Jacobi solver built from complex Givens rotations.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance used by Hermiticity and unitarity checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Jacobi stops once the off-diagonal Frobenius mass drops below this
/// fraction of the input norm.
const JACOBI_OFF_DIAG_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// A gauge reference component must carry at least this fraction of the
/// column norm.
const GAUGE_THRESHOLD: f64 = 1e-8;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_finite(data: &[Complex64]) -> Result<()> {
    match data
        .iter()
        .position(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds an `n x n` matrix from row-major entries.
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::NotSquare { len: data.len() });
        }
        check_finite(&data)?;
        Ok(Self { n, data })
    }

    /// Infers the dimension from the entry count.
    pub fn from_flat(data: Vec<Complex64>) -> Result<Self> {
        let n = (data.len() as f64).sqrt().round() as usize;
        Self::new(n, data)
    }

    pub fn from_rows<const N: usize>(rows: [[Complex64; N]; N]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(N, data).expect("rows must be finite")
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::new(N, data).expect("rows must be finite")
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "dimension must be positive");
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![ONE; n])
    }

    pub fn diag(values: &[Complex64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let v: Vec<_> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diag(&v)
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows([[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn pauli_y() -> Self {
        Self::from_rows([[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Self::from_real_rows([[1.0, 0.0], [0.0, -1.0]])
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &ComplexVector, v: &ComplexVector) -> Self {
        assert_eq!(u.dim(), v.dim(), "outer product dimension mismatch");
        let n = u.dim();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = u[i] * v[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector {
            data: (0..self.n).map(|i| self[(i, j)]).collect(),
        }
    }

    pub fn from_columns(columns: &[ComplexVector]) -> Result<Self> {
        let n = columns.len();
        if n == 0 {
            return Err(Error::NotSquare { len: 0 });
        }
        let mut m = Self::zeros(n);
        for (j, col) in columns.iter().enumerate() {
            if col.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: col.dim(),
                });
            }
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        Ok(m)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value, as the square root of the top eigenvalue of
    /// `M^dag M`.
    pub fn operator_norm(&self) -> f64 {
        let gram = self.adjoint().mul_unchecked(self);
        let (values, _) =
            jacobi_eig(&gram.hermitian_part()).expect("Gram matrix eigensolve failed to converge");
        values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }

    /// `(M + M^dag) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale(Complex64::new(0.5, 0.0))
    }

    /// `(M - M^dag) / 2i`.
    pub fn antihermitian_part(&self) -> Self {
        (self - &self.adjoint()).scale(Complex64::new(0.0, -0.5))
    }

    /// Kronecker product; the left factor's index is the major one.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.n, other.n);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if v.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: v.dim(),
            });
        }
        let n = self.n;
        let data = (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(&v.data)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(ComplexVector { data })
    }

    /// `<u| M |v>`.
    pub fn sandwich(&self, u: &ComplexVector, v: &ComplexVector) -> Result<Complex64> {
        let mv = self.apply(v)?;
        u.inner(&mv)
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            })
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_residual(self) <= tol * self.frobenius_norm().max(1.0)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        unitarity_residual(self) <= tol * (self.n as f64).sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.n && j < self.n, "index out of bounds");
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.n && j < self.n, "index out of bounds");
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.n, self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format_complex(self[(i, j)])).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

// Operator impls panic on dimension mismatch; the fallible free functions
// below are the checked entry points.
macro_rules! elementwise_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
                ComplexMatrix {
                    n: self.n,
                    data: self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $trait<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                &self $op &rhs
            }
        }
    };
}

elementwise_op!(Add, add, +);
elementwise_op!(Sub, sub, -);

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

impl Mul<ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self * &rhs
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-ONE)
    }
}

/// Checked matrix product.
pub fn matmul(m: &ComplexMatrix, j: &ComplexMatrix) -> Result<ComplexMatrix> {
    m.same_dim(j)?;
    Ok(m.mul_unchecked(j))
}

/// `MJ - JM`.
pub fn commutator(m: &ComplexMatrix, j: &ComplexMatrix) -> Result<ComplexMatrix> {
    m.same_dim(j)?;
    Ok(&m.mul_unchecked(j) - &j.mul_unchecked(m))
}

pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    (m - &m.adjoint()).frobenius_norm()
}

pub fn unitarity_residual(m: &ComplexMatrix) -> f64 {
    (&m.adjoint().mul_unchecked(m) - &ComplexMatrix::identity(m.n)).frobenius_norm()
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_hermitian(tol)
}

pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_unitary(tol)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order (ties keep their Jacobi index
/// order) and a unitary `U` whose columns are the matching eigenvectors, so
/// that `H = U diag(values) U^dag`. Each column is phase-fixed so that its
/// first component with modulus above `1e-8` of the column norm is real and
/// positive.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let residual = hermiticity_residual(h);
    if residual > DEFAULT_TOL * h.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    jacobi_eig(&h.hermitian_part())
}

/// Cyclic Jacobi on an exactly Hermitian input.
pub(crate) fn jacobi_eig(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = h.n;
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_OFF_DIAG_TOL * h.frobenius_norm();

    let off_diag = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off_diag(&a) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        converged = off_diag(&a) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps tied eigenvalues in index order.
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let columns: Vec<ComplexVector> = order
        .iter()
        .map(|&j| fix_phase_gauge(v.column(j)))
        .collect();
    Ok((values, ComplexMatrix::from_columns(&columns)?))
}

/// Annihilates `a[p][q]` with a complex Givens rotation `J`, updating
/// `a <- J^dag a J` and `v <- v J`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // diag(1, e^{-i phi}) makes the 2x2 block real symmetric with
    // off-diagonal r; then a real rotation finishes the job.
    let phase = apq / r;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = phase.conj() * (-s);
    let jqq = phase.conj() * c;

    let n = a.n;
    // Columns: a <- a J.
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    // Rows: a <- J^dag a.
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

/// Rotates a vector's global phase so its first significant component is
/// real and positive.
pub fn fix_phase_gauge(mut col: ComplexVector) -> ComplexVector {
    let norm = col.norm();
    if norm == 0.0 {
        return col;
    }
    if let Some(z) = col
        .data
        .iter()
        .copied()
        .find(|z| z.norm() > GAUGE_THRESHOLD * norm)
    {
        let phase = z.conj() / z.norm();
        for c in &mut col.data {
            *c *= phase;
        }
    }
    col
}

/// Complex column vector.
#[derive(Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<Complex64>,
}

impl ComplexVector {
    pub fn new(data: Vec<Complex64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        check_finite(&data)?;
        Ok(Self { data })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut data = vec![ZERO; dim];
        data[index] = ONE;
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let data = self
            .data
            .iter()
            .flat_map(|&a| other.data.iter().map(move |&b| a * b))
            .collect();
        Self { data }
    }

    pub(crate) fn axpy(&mut self, alpha: Complex64, x: &Self) {
        for (y, &xi) in self.data.iter_mut().zip(&x.data) {
            *y += alpha * xi;
        }
    }

    pub(crate) fn zeros(dim: usize) -> Self {
        Self {
            data: vec![ZERO; dim],
        }
    }
}

impl std::ops::Index<usize> for ComplexVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.data[i]
    }
}

impl Sub<&ComplexVector> for &ComplexVector {
    type Output = ComplexVector;
    fn sub(self, rhs: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), rhs.dim(), "vector dimension mismatch");
        ComplexVector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.data.iter().map(|&z| format_complex(z)).collect();
        write!(f, "ComplexVector[{}]", items.join(", "))
    }
}

/// Human-readable `a+bi` rendering.
pub fn format_complex(z: Complex64) -> String {
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    if im < 0.0 {
        format!("{re:.6}-{:.6}i", -im)
    } else {
        format!("{re:.6}+{im:.6}i")
    }
}
