//! Observables as normal operators.
//!
//! An [`Observable`] is any operator that commutes with its adjoint. Its
//! eigenvalues may be complex; only the orthogonal eigenspaces and their
//! Born weights are operationally meaningful, and the numbers attached to the
//! eigenspaces can be swapped out with [`relabel`].
//!
//! Diagonalization splits `B = C + iD` into commuting Hermitian parts,
//! diagonalizes `C`, and then diagonalizes `D` restricted to each degenerate
//! eigenspace of `C`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, hermiticity_residual, jacobi_eig, ComplexMatrix, ComplexVector, DEFAULT_TOL,
};
use crate::measurement::StateVector;

/// Relative width used to cluster nearly equal eigenvalues.
const CLUSTER_REL_TOL: f64 = 1e-8;

/// Two relabeled eigenvalues closer than this (relative) count as equal.
const LABEL_COLLISION_TOL: f64 = 1e-12;

/// A normal operator together with its spectral decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    matrix: ComplexMatrix,
    eigenvalues: Vec<Complex64>,
    eigenbasis: ComplexMatrix,
    eigenspaces: Vec<Vec<usize>>,
}

impl Observable {
    /// Validates normality and decomposes. Equivalent to [`spectral_decompose`].
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        spectral_decompose(&matrix)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// One eigenvalue per eigenbasis column.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Unitary whose columns are the eigenvectors.
    pub fn eigenbasis(&self) -> &ComplexMatrix {
        &self.eigenbasis
    }

    /// Column indices of the eigenbasis grouped by eigenvalue.
    pub fn eigenspaces(&self) -> &[Vec<usize>] {
        &self.eigenspaces
    }

    pub fn eigenspace_count(&self) -> usize {
        self.eigenspaces.len()
    }

    /// The eigenvalue carried by each eigenspace, in eigenspace order.
    pub fn outcome_values(&self) -> Vec<Complex64> {
        self.eigenspaces
            .iter()
            .map(|cols| self.eigenvalues[cols[0]])
            .collect()
    }

    pub fn eigenvector(&self, column: usize) -> ComplexVector {
        self.eigenbasis.column(column)
    }

    /// Orthogonal projector onto eigenspace `k`.
    pub fn projector(&self, k: usize) -> Result<ComplexMatrix> {
        let cols = self.eigenspace_columns(k)?;
        let n = self.dim();
        let mut p = ComplexMatrix::zeros(n);
        for &c in cols {
            let u = self.eigenbasis.column(c);
            p = &p + &ComplexMatrix::outer(&u, &u);
        }
        Ok(p)
    }

    pub(crate) fn eigenspace_columns(&self, k: usize) -> Result<&[usize]> {
        self.eigenspaces
            .get(k)
            .map(Vec::as_slice)
            .ok_or(Error::EigenspaceOutOfRange {
                index: k,
                count: self.eigenspaces.len(),
            })
    }

    pub fn is_hermitian(&self) -> bool {
        self.matrix.is_hermitian(DEFAULT_TOL)
    }

    /// True when every eigenvalue has modulus 1 within `tol`.
    pub fn has_unimodular_spectrum(&self, tol: f64) -> bool {
        self.eigenvalues
            .iter()
            .all(|z| (z.norm() - 1.0).abs() <= tol)
    }

    /// Multiplies the operator by `e^{i phi}`. Basis and eigenspaces are kept.
    pub fn phase_scaled(&self, phi: f64) -> Self {
        let phase = Complex64::from_polar(1.0, phi);
        Self {
            matrix: self.matrix.scale(phase),
            eigenvalues: self.eigenvalues.iter().map(|&z| z * phase).collect(),
            eigenbasis: self.eigenbasis.clone(),
            eigenspaces: self.eigenspaces.clone(),
        }
    }

    /// `||B u_i - lambda_i u_i||` maximized over eigenbasis columns.
    pub fn eigen_equation_residual(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let u = self.eigenbasis.column(i);
                let bu = self.matrix.apply(&u).expect("square");
                (&bu - &u.scale(self.eigenvalues[i])).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `||U diag(lambda) U^dag - B||_F`.
    pub fn reconstruction_residual(&self) -> f64 {
        (&rebuild(&self.eigenbasis, &self.eigenvalues) - &self.matrix).frobenius_norm()
    }
}

fn rebuild(u: &ComplexMatrix, eigenvalues: &[Complex64]) -> ComplexMatrix {
    &(u * &ComplexMatrix::diag(eigenvalues)) * &u.adjoint()
}

/// New labels for the eigenspaces of an observable, indexed by eigenspace.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenvalueRelabeling {
    labels: Vec<Complex64>,
}

impl EigenvalueRelabeling {
    pub fn new(labels: Vec<Complex64>) -> Self {
        Self { labels }
    }

    /// Builds a relabeling from `(old value, new value)` pairs, matching each
    /// old value to the eigenspace whose eigenvalue is nearest to it.
    pub fn from_pairs(observable: &Observable, pairs: &[(Complex64, Complex64)]) -> Result<Self> {
        let values = observable.outcome_values();
        let mut labels: Vec<Option<Complex64>> = vec![None; values.len()];
        for &(old, new) in pairs {
            let (k, dist) = values
                .iter()
                .enumerate()
                .map(|(k, v)| (k, (v - old).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("observable has at least one eigenspace");
            if dist > CLUSTER_REL_TOL * (1.0 + old.norm()) {
                return Err(Error::InvalidArgument(format!(
                    "{old} is not an eigenvalue of the observable"
                )));
            }
            labels[k] = Some(new);
        }
        let found = labels.iter().filter(|l| l.is_some()).count();
        if found != values.len() {
            return Err(Error::IncompleteRelabeling {
                expected: values.len(),
                found,
            });
        }
        Ok(Self::new(labels.into_iter().flatten().collect()))
    }

    pub fn labels(&self) -> &[Complex64] {
        &self.labels
    }
}

/// `||M^dag M - M M^dag||_F`.
pub fn normality_residual(m: &ComplexMatrix) -> f64 {
    let ad = m.adjoint();
    (&(&ad * m) - &(m * &ad)).frobenius_norm()
}

/// True iff `||M^dag M - M M^dag||_F <= tol * max(1, ||M||_F^2)`.
pub fn check_normal(m: &ComplexMatrix, tol: f64) -> bool {
    normality_residual(m) <= tol * m.frobenius_norm().powi(2).max(1.0)
}

/// Splits `B` into Hermitian `C = (B + B^dag)/2` and `D = (B - B^dag)/2i`
/// with `B = C + iD`.
pub fn hermitian_parts(b: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    (b.hermitian_part(), b.antihermitian_part())
}

pub fn spectral_decompose(m: &ComplexMatrix) -> Result<Observable> {
    if !check_normal(m, DEFAULT_TOL) {
        return Err(Error::NotNormal {
            residual: normality_residual(m),
        });
    }
    decompose_normal(m)
}

/// Builds `F = C + iD` from commuting Hermitian `C` and `D`.
pub fn from_commuting_pair(c: &ComplexMatrix, d: &ComplexMatrix) -> Result<Observable> {
    if c.dim() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            found: d.dim(),
        });
    }
    for m in [c, d] {
        if !m.is_hermitian(DEFAULT_TOL) {
            return Err(Error::NotHermitian {
                residual: hermiticity_residual(m),
            });
        }
    }
    let residual = commutator(c, d)?.frobenius_norm();
    if residual > DEFAULT_TOL * (c.frobenius_norm() * d.frobenius_norm()).max(1.0) {
        return Err(Error::NotCommuting { residual });
    }
    decompose_normal(&(c + &d.scale(crate::linalg::I)))
}

/// `<psi| A |psi>`.
pub fn expectation(a: &Observable, psi: &StateVector) -> Result<Complex64> {
    a.matrix.sandwich(psi.vector(), psi.vector())
}

/// Replaces eigenspace labels, keeping basis and eigenspace structure.
pub fn relabel(a: &Observable, r: &EigenvalueRelabeling) -> Result<Observable> {
    let labels = r.labels();
    if labels.len() != a.eigenspace_count() {
        return Err(Error::IncompleteRelabeling {
            expected: a.eigenspace_count(),
            found: labels.len(),
        });
    }
    if let Some(index) = labels
        .iter()
        .position(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(Error::NonFinite { index });
    }
    for i in 0..labels.len() {
        for j in (i + 1)..labels.len() {
            let scale = labels[i].norm().max(labels[j].norm()).max(1.0);
            if (labels[i] - labels[j]).norm() <= LABEL_COLLISION_TOL * scale {
                return Err(Error::DuplicateLabels {
                    first: i,
                    second: j,
                    label: labels[i].to_string(),
                });
            }
        }
    }
    let mut eigenvalues = a.eigenvalues.clone();
    for (k, cols) in a.eigenspaces.iter().enumerate() {
        for &c in cols {
            eigenvalues[c] = labels[k];
        }
    }
    Ok(Observable {
        matrix: rebuild(&a.eigenbasis, &eigenvalues),
        eigenvalues,
        eigenbasis: a.eigenbasis.clone(),
        eigenspaces: a.eigenspaces.clone(),
    })
}

/// Groups sorted values into runs whose consecutive gaps are at most `tol`.
fn chain_clusters(sorted: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

fn decompose_normal(m: &ComplexMatrix) -> Result<Observable> {
    let n = m.dim();
    let (c, d) = hermitian_parts(m);
    let (c_values, c_basis) = jacobi_eig(&c)?;

    // Joint eigenbasis: refine each degenerate block of C by diagonalizing D
    // inside it.
    let c_spread = c_values[n - 1] - c_values[0];
    let mut columns: Vec<ComplexVector> = Vec::with_capacity(n);
    for block in chain_clusters(&c_values, CLUSTER_REL_TOL * (c_spread + 1.0)) {
        let vs: Vec<ComplexVector> = block.clone().map(|j| c_basis.column(j)).collect();
        if vs.len() == 1 {
            columns.push(vs[0].clone());
            continue;
        }
        let k = vs.len();
        let dv: Vec<ComplexVector> = vs.iter().map(|v| d.apply(v)).collect::<Result<_>>()?;
        let mut restricted = ComplexMatrix::zeros(k);
        for i in 0..k {
            for j in 0..k {
                restricted[(i, j)] = vs[i].inner(&dv[j])?;
            }
        }
        let (_, w) = jacobi_eig(&restricted.hermitian_part())?;
        for j in 0..k {
            let mut col = ComplexVector::zeros(n);
            for (i, v) in vs.iter().enumerate() {
                col.axpy(w[(i, j)], v);
            }
            columns.push(col);
        }
    }
    let columns: Vec<ComplexVector> = columns
        .into_iter()
        .map(crate::linalg::fix_phase_gauge)
        .collect();

    // Rayleigh quotients give lambda_i = c_i + i d_i on the joint basis.
    let raw: Vec<Complex64> = columns
        .iter()
        .map(|u| m.sandwich(u, u))
        .collect::<Result<_>>()?;

    let (spaces, values) = group_eigenvalues(&raw);

    let mut ordered_columns = Vec::with_capacity(n);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenspaces = Vec::with_capacity(spaces.len());
    for (members, value) in spaces.iter().zip(&values) {
        let mut idx = Vec::with_capacity(members.len());
        for &j in members {
            idx.push(ordered_columns.len());
            ordered_columns.push(columns[j].clone());
            eigenvalues.push(*value);
        }
        eigenspaces.push(idx);
    }

    Ok(Observable {
        matrix: m.clone(),
        eigenvalues,
        eigenbasis: ComplexMatrix::from_columns(&ordered_columns)?,
        eigenspaces,
    })
}

/// Clusters eigenvalues into eigenspaces and orders the eigenspaces
/// lexicographically by (Re, Im). Real parts within the clustering tolerance
/// compare as equal so rounding cannot reorder them.
fn group_eigenvalues(raw: &[Complex64]) -> (Vec<Vec<usize>>, Vec<Complex64>) {
    let n = raw.len();
    let (mut lo_re, mut hi_re, mut lo_im, mut hi_im) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for z in raw {
        lo_re = lo_re.min(z.re);
        hi_re = hi_re.max(z.re);
        lo_im = lo_im.min(z.im);
        hi_im = hi_im.max(z.im);
    }
    let tol = CLUSTER_REL_TOL * ((hi_re - lo_re).max(hi_im - lo_im) + 1.0);

    // Union-find over the "within tol" relation.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (raw[i] - raw[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_to_group = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_to_group[r] == usize::MAX {
            root_to_group[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_to_group[r]].push(i);
    }
    let means: Vec<Complex64> = groups
        .iter()
        .map(|g| g.iter().map(|&i| raw[i]).sum::<Complex64>() / g.len() as f64)
        .collect();

    // Bucket real parts, then sort by (bucket, Im).
    let mut by_re: Vec<usize> = (0..groups.len()).collect();
    by_re.sort_by(|&a, &b| means[a].re.total_cmp(&means[b].re));
    let sorted_re: Vec<f64> = by_re.iter().map(|&g| means[g].re).collect();
    let mut bucket = vec![0usize; groups.len()];
    for (b, range) in chain_clusters(&sorted_re, tol).into_iter().enumerate() {
        for pos in range {
            bucket[by_re[pos]] = b;
        }
    }
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| {
        bucket[a]
            .cmp(&bucket[b])
            .then(means[a].im.total_cmp(&means[b].im))
    });
    let spaces = order.iter().map(|&g| groups[g].clone()).collect();
    let values = order.iter().map(|&g| means[g]).collect();
    (spaces, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{I, ONE};
    use crate::random::{
        planted_normal, random_hermitian, random_state, random_unitary, rng_from_seed,
    };
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sz() -> ComplexMatrix {
        ComplexMatrix::pauli_z()
    }

    fn approx(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn check_normal_examples() {
        assert!(check_normal(&sz(), DEFAULT_TOL));
        assert!(check_normal(&ComplexMatrix::diag(&[I, -I]), DEFAULT_TOL));
        let jordan = ComplexMatrix::from_real_rows([[0.0, 1.0], [0.0, 0.0]]);
        assert!(!check_normal(&jordan, DEFAULT_TOL));
    }

    #[test]
    fn hermitian_parts_examples() {
        let h = random_hermitian(3, &mut rng_from_seed(1));
        let (cc, dd) = hermitian_parts(&h);
        assert!((&cc - &h).frobenius_norm() < 1e-15);
        assert!(dd.frobenius_norm() < 1e-15);

        let (cc, dd) = hermitian_parts(&h.scale(I));
        assert!(cc.frobenius_norm() < 1e-15);
        assert!((&dd - &h).frobenius_norm() < 1e-15);

        let b = &sz() + &ComplexMatrix::identity(2).scale(I);
        let (cc, dd) = hermitian_parts(&b);
        assert_eq!(cc, sz());
        assert_eq!(dd, ComplexMatrix::identity(2));
    }

    #[test]
    fn decompose_diag_imaginary() {
        let obs = spectral_decompose(&ComplexMatrix::diag(&[I, -I])).unwrap();
        assert_eq!(obs.eigenvalues(), &[-I, I]);
        assert_eq!(
            *obs.eigenbasis(),
            ComplexMatrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]])
        );
    }

    #[test]
    fn decompose_sigma_z() {
        let obs = spectral_decompose(&sz()).unwrap();
        assert_eq!(obs.eigenvalues(), &[-ONE, ONE]);
        assert_eq!(obs.eigenvector(0), ComplexVector::basis(2, 1));
        assert_eq!(obs.eigenvector(1), ComplexVector::basis(2, 0));
        assert_eq!(obs.eigenspaces(), &[vec![0], vec![1]]);
    }

    #[test]
    fn decompose_planted_5x5() {
        let mut rng = rng_from_seed(5);
        let planted = [
            c(0.3, -1.2),
            c(-0.7, 0.4),
            c(1.1, 0.0),
            c(0.0, 0.9),
            c(-0.2, -0.5),
        ];
        let m = planted_normal(&planted, &mut rng);
        let obs = spectral_decompose(&m).unwrap();
        let mut expected = planted.to_vec();
        expected.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        for (got, want) in obs.eigenvalues().iter().zip(&expected) {
            assert!(approx(*got, *want, 1e-8), "{got} vs {want}");
        }
        assert!(obs.reconstruction_residual() <= 1e-9);
    }

    #[test]
    fn decompose_rejects_non_normal() {
        let jordan = ComplexMatrix::from_real_rows([[0.0, 1.0], [0.0, 0.0]]);
        match spectral_decompose(&jordan) {
            Err(Error::NotNormal { residual }) => assert!((residual - 2f64.sqrt()).abs() < 1e-12),
            other => panic!("expected NotNormal, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_real_parts_are_split_by_imaginary_parts() {
        // C is fully degenerate; D alone separates the eigenvectors.
        let mut rng = rng_from_seed(11);
        let m = planted_normal(&[c(1.0, 1.0), c(1.0, -1.0), c(1.0, 1.0)], &mut rng);
        let obs = spectral_decompose(&m).unwrap();
        assert_eq!(obs.eigenspace_count(), 2);
        assert_eq!(obs.eigenspaces(), &[vec![0], vec![1, 2]]);
        assert!(approx(obs.outcome_values()[0], c(1.0, -1.0), 1e-9));
        assert!(approx(obs.outcome_values()[1], c(1.0, 1.0), 1e-9));
        assert!(obs.reconstruction_residual() <= 1e-9);
        assert!(obs.eigen_equation_residual() <= 1e-8);
    }

    #[test]
    fn commuting_pair_examples() {
        let id = ComplexMatrix::identity(2);
        let f = from_commuting_pair(&sz(), &id).unwrap();
        assert_eq!(f.outcome_values(), vec![c(-1.0, 1.0), c(1.0, 1.0)]);
        let f = from_commuting_pair(&sz(), &sz()).unwrap();
        assert_eq!(f.outcome_values(), vec![c(-1.0, -1.0), c(1.0, 1.0)]);
        assert!(matches!(
            from_commuting_pair(&sz(), &ComplexMatrix::pauli_x()),
            Err(Error::NotCommuting { .. })
        ));
        assert!(matches!(
            from_commuting_pair(&ComplexMatrix::diag(&[I, ONE]), &sz()),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn expectation_examples() {
        let plus = StateVector::from_amplitudes(vec![c(0.5f64.sqrt(), 0.0), c(0.5f64.sqrt(), 0.0)])
            .unwrap();
        let up = StateVector::basis(2, 0);
        let z = Observable::new(sz()).unwrap();
        assert!(expectation(&z, &plus).unwrap().norm() < 1e-15);
        assert_eq!(expectation(&z, &up).unwrap(), ONE);

        let f = from_commuting_pair(&sz(), &ComplexMatrix::identity(2)).unwrap();
        // sum lambda_i p_i = ((1+i) + (-1+i)) / 2
        let spectral: Complex64 = (c(1.0, 1.0) + c(-1.0, 1.0)) * 0.5;
        let direct = expectation(&f, &plus).unwrap();
        assert!(approx(direct, I, 1e-15));
        assert!(approx(direct, spectral, 1e-15));

        let three = StateVector::basis(3, 0);
        assert!(matches!(
            expectation(&z, &three),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn relabel_examples() {
        let z = Observable::new(sz()).unwrap();
        let r = EigenvalueRelabeling::from_pairs(&z, &[(ONE, I), (-ONE, -I)]).unwrap();
        let iz = relabel(&z, &r).unwrap();
        assert!((iz.matrix() - &sz().scale(I)).frobenius_norm() < 1e-15);
        assert_eq!(iz.eigenbasis(), z.eigenbasis());

        let same = relabel(&z, &EigenvalueRelabeling::new(z.outcome_values())).unwrap();
        assert!((same.matrix() - z.matrix()).frobenius_norm() <= 1e-12);

        let dup = EigenvalueRelabeling::from_pairs(&z, &[(ONE, c(5.0, 0.0)), (-ONE, c(5.0, 0.0))])
            .unwrap();
        assert!(matches!(
            relabel(&z, &dup),
            Err(Error::DuplicateLabels { .. })
        ));

        assert!(matches!(
            relabel(&z, &EigenvalueRelabeling::new(vec![ONE])),
            Err(Error::IncompleteRelabeling {
                expected: 2,
                found: 1
            })
        ));
        assert!(EigenvalueRelabeling::from_pairs(&z, &[(ONE, I)]).is_err());
    }

    #[test]
    fn hermitian_and_unitary_matrices_are_normal() {
        let mut rng = rng_from_seed(99);
        for i in 0..1000 {
            let n = 2 + i % 5;
            assert!(check_normal(&random_hermitian(n, &mut rng), DEFAULT_TOL));
            // Unitaries cover phase-type operators such as exp(i P).
            assert!(check_normal(&random_unitary(n, &mut rng), DEFAULT_TOL));
        }
    }

    #[test]
    fn hermitian_expectation_is_real() {
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let a = Observable::new(random_hermitian(4, &mut rng)).unwrap();
            let psi = random_state(4, &mut rng);
            assert!(expectation(&a, &psi).unwrap().im.abs() <= 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn normality_iff_parts_commute(seed in any::<u64>(), n in 2usize..6, perturb in any::<bool>()) {
            let mut rng = rng_from_seed(seed);
            let eigs: Vec<Complex64> = (0..n).map(|_| crate::random::random_disk_point(&mut rng)).collect();
            let mut m = planted_normal(&eigs, &mut rng);
            if perturb {
                m[(0, n - 1)] += c(0.3, 0.1);
            }
            let (cc, dd) = hermitian_parts(&m);
            let parts_commute = commutator(&cc, &dd).unwrap().frobenius_norm()
                <= DEFAULT_TOL * m.frobenius_norm().powi(2).max(1.0);
            prop_assert_eq!(check_normal(&m, DEFAULT_TOL), parts_commute);
            prop_assert_eq!(check_normal(&m, DEFAULT_TOL), !perturb);
        }

        #[test]
        fn decomposition_satisfies_eigen_equation(seed in any::<u64>(), n in 2usize..7) {
            let mut rng = rng_from_seed(seed);
            let eigs: Vec<Complex64> = (0..n).map(|_| crate::random::random_disk_point(&mut rng)).collect();
            let obs = spectral_decompose(&planted_normal(&eigs, &mut rng)).unwrap();
            prop_assert!(obs.eigen_equation_residual() <= 1e-8);
            prop_assert!(obs.reconstruction_residual() <= 1e-9 * obs.matrix().frobenius_norm().max(1.0));
            prop_assert!(crate::linalg::unitarity_residual(obs.eigenbasis()) <= 1e-9);
        }
    }
}
