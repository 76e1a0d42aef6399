//! CHSH tests with complex outcome labels.
//!
//! Each party has two two-outcome settings. Outcome labels may be any pair of
//! unimodular complex numbers, e.g. Alice reporting {1, -1} while Bob reports
//! {i, -i}. The module provides:
//!
//! * exhaustive enumeration of the 16 deterministic local strategies,
//! * quantum correlations, from both joint probabilities and `<psi|A (x) B|psi>`,
//! * the operator `Z = A1 B1 + A1 B2 + A2 B1 - A2 B2` with the term-by-term
//!   expansion of `Z^dag Z`, its Hermitian reduction, and the `2 sqrt 2`
//!   operator-norm bound,
//! * a derivative-free search for optimal Bloch-vector settings.
//!
//! Two-qubit states use the basis index `2 * i_alice + i_bob`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{commutator, ComplexMatrix, DEFAULT_TOL, I, ONE};
use crate::measurement::StateVector;
use crate::observables::Observable;
use crate::random::{
    random_hermitian_unitary_qubit, random_state, random_unitary_normal_qubit, rng_from_seed,
    SimRng,
};

/// The quantum bound `2 sqrt 2`.
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;
/// Slack allowed above [`TSIRELSON_BOUND`] for rounding.
pub const BOUND_TOL: f64 = 1e-9;
/// Maximal `|S|` over deterministic local strategies.
pub const LHV_BOUND: f64 = 2.0;

const UNIMODULAR_TOL: f64 = 1e-12;
const SCENARIO_SPECTRUM_TOL: f64 = 1e-10;

/// Parses `a`, `bi`, `a+bi` or `a-bi` (spaces ignored; `i` alone means 1i).
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidArgument(format!("cannot parse complex number {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    let parse_imag = |coef: &str| -> Result<f64> {
        match coef {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => coef.parse::<f64>().map_err(|_| bad()),
        }
    };
    let value = if let Some(body) = s.strip_suffix('i') {
        // Split at the last sign that is not the leading sign or an exponent sign.
        let bytes = body.as_bytes();
        let split = (1..bytes.len()).rev().find(|&k| {
            (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E')
        });
        match split {
            Some(k) => Complex64::new(
                body[..k].parse().map_err(|_| bad())?,
                parse_imag(&body[k..])?,
            ),
            None => Complex64::new(0.0, parse_imag(body)?),
        }
    } else {
        Complex64::new(s.parse().map_err(|_| bad())?, 0.0)
    };
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(bad());
    }
    Ok(value)
}

/// Two distinct unimodular outcome labels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeAlphabet {
    labels: [Complex64; 2],
}

impl OutcomeAlphabet {
    pub fn new(first: Complex64, second: Complex64) -> Result<Self> {
        for z in [first, second] {
            if (z.norm() - 1.0).abs() > UNIMODULAR_TOL {
                return Err(Error::InvalidAlphabet(format!(
                    "label {z} has modulus {}, expected 1",
                    z.norm()
                )));
            }
        }
        if (first - second).norm() <= UNIMODULAR_TOL {
            return Err(Error::InvalidAlphabet(format!("duplicate label {first}")));
        }
        Ok(Self {
            labels: [first, second],
        })
    }

    /// Parses a comma-separated pair such as `1,-1` or `i,-i`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::InvalidAlphabet(format!(
                "expected two comma-separated labels, got {text:?}"
            )));
        }
        Self::new(parse_complex(parts[0])?, parse_complex(parts[1])?)
    }

    /// {1, -1}.
    pub fn real() -> Self {
        Self {
            labels: [ONE, -ONE],
        }
    }

    /// {i, -i}.
    pub fn imaginary() -> Self {
        Self { labels: [I, -I] }
    }

    /// {e^{i phi}, -e^{i phi}}.
    pub fn rotated(phi: f64) -> Self {
        let z = Complex64::from_polar(1.0, phi);
        Self { labels: [z, -z] }
    }

    pub fn labels(&self) -> [Complex64; 2] {
        self.labels
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.labels.iter().any(|l| (l - z).norm() <= UNIMODULAR_TOL)
    }
}

/// Predefined outcomes for every setting of both parties.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LhvStrategy {
    pub a1: Complex64,
    pub a2: Complex64,
    pub b1: Complex64,
    pub b2: Complex64,
}

impl LhvStrategy {
    pub fn belongs_to(&self, alice: &OutcomeAlphabet, bob: &OutcomeAlphabet) -> bool {
        alice.contains(self.a1)
            && alice.contains(self.a2)
            && bob.contains(self.b1)
            && bob.contains(self.b2)
    }
}

/// `S = a1 b1 + a1 b2 + a2 b1 - a2 b2`, evaluated as `b1 (a1 + a2) + b2 (a1 - a2)`.
pub fn lhv_value(s: &LhvStrategy) -> Complex64 {
    s.b1 * (s.a1 + s.a2) + s.b2 * (s.a1 - s.a2)
}

/// All 16 strategies with their `S` values.
pub fn enumerate_strategies(
    alice: &OutcomeAlphabet,
    bob: &OutcomeAlphabet,
) -> Vec<(LhvStrategy, Complex64)> {
    let [a, b] = [alice.labels(), bob.labels()];
    let mut out = Vec::with_capacity(16);
    for &a1 in &a {
        for &a2 in &a {
            for &b1 in &b {
                for &b2 in &b {
                    let s = LhvStrategy { a1, a2, b1, b2 };
                    out.push((s, lhv_value(&s)));
                }
            }
        }
    }
    out
}

pub fn lhv_max(alice: &OutcomeAlphabet, bob: &OutcomeAlphabet) -> f64 {
    enumerate_strategies(alice, bob)
        .iter()
        .map(|(_, s)| s.norm())
        .fold(0.0, f64::max)
}

/// Probability of one pair of outcome labels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointOutcome {
    pub alice: Complex64,
    pub bob: Complex64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    pub outcomes: Vec<JointOutcome>,
}

impl JointDistribution {
    pub fn probability(&self, alice: Complex64, bob: Complex64) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| (o.alice - alice).norm() <= 1e-12 && (o.bob - bob).norm() <= 1e-12)
            .map(|o| o.probability)
            .sum()
    }
}

/// `sum_{a,b} a b P(a, b)`.
pub fn correlation_from_joint(p: &JointDistribution) -> Complex64 {
    p.outcomes
        .iter()
        .map(|o| o.alice * o.bob * o.probability)
        .sum()
}

fn check_bipartite(a: &Observable, b: &Observable, psi: &StateVector) -> Result<()> {
    let expected = a.dim() * b.dim();
    if psi.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: psi.dim(),
        });
    }
    Ok(())
}

/// `P(a_i, b_j) = ||(P_i (x) Q_j) psi||^2` over the eigenspaces of `A` and `B`.
pub fn joint_distribution(
    a: &Observable,
    b: &Observable,
    psi: &StateVector,
) -> Result<JointDistribution> {
    check_bipartite(a, b, psi)?;
    let (va, vb) = (a.outcome_values(), b.outcome_values());
    let mut outcomes = Vec::with_capacity(va.len() * vb.len());
    for (i, &alice) in va.iter().enumerate() {
        let p = a.projector(i)?;
        for (j, &bob) in vb.iter().enumerate() {
            let q = b.projector(j)?;
            let projected = p.kron(&q).apply(psi.vector())?;
            outcomes.push(JointOutcome {
                alice,
                bob,
                probability: projected.norm_sqr(),
            });
        }
    }
    Ok(JointDistribution { outcomes })
}

/// `<psi| A (x) B |psi>`.
pub fn quantum_correlation(a: &Observable, b: &Observable, psi: &StateVector) -> Result<Complex64> {
    check_bipartite(a, b, psi)?;
    a.matrix()
        .kron(b.matrix())
        .sandwich(psi.vector(), psi.vector())
}

/// Four single-qubit settings and a shared two-qubit state.
#[derive(Clone, Debug, PartialEq)]
pub struct ChshScenario {
    a1: Observable,
    a2: Observable,
    b1: Observable,
    b2: Observable,
    psi: StateVector,
}

impl ChshScenario {
    /// Each observable must be 2x2 with unimodular eigenvalues; `psi` must
    /// have dimension 4.
    pub fn new(
        a1: Observable,
        a2: Observable,
        b1: Observable,
        b2: Observable,
        psi: StateVector,
    ) -> Result<Self> {
        for (name, o) in [("A1", &a1), ("A2", &a2), ("B1", &b1), ("B2", &b2)] {
            if o.dim() != 2 {
                return Err(Error::InvalidScenario(format!(
                    "{name} has dimension {}, expected 2",
                    o.dim()
                )));
            }
            if !o.has_unimodular_spectrum(SCENARIO_SPECTRUM_TOL) {
                return Err(Error::InvalidScenario(format!(
                    "{name} has eigenvalues off the unit circle"
                )));
            }
        }
        if psi.dim() != 4 {
            return Err(Error::InvalidScenario(format!(
                "state has dimension {}, expected 4",
                psi.dim()
            )));
        }
        Ok(Self {
            a1,
            a2,
            b1,
            b2,
            psi,
        })
    }

    pub fn from_matrices(
        a1: ComplexMatrix,
        a2: ComplexMatrix,
        b1: ComplexMatrix,
        b2: ComplexMatrix,
        psi: StateVector,
    ) -> Result<Self> {
        Self::new(
            Observable::new(a1)?,
            Observable::new(a2)?,
            Observable::new(b1)?,
            Observable::new(b2)?,
            psi,
        )
    }

    pub fn a1(&self) -> &Observable {
        &self.a1
    }
    pub fn a2(&self) -> &Observable {
        &self.a2
    }
    pub fn b1(&self) -> &Observable {
        &self.b1
    }
    pub fn b2(&self) -> &Observable {
        &self.b2
    }
    pub fn state(&self) -> &StateVector {
        &self.psi
    }

    pub fn with_state(&self, psi: StateVector) -> Result<Self> {
        Self::new(
            self.a1.clone(),
            self.a2.clone(),
            self.b1.clone(),
            self.b2.clone(),
            psi,
        )
    }

    fn matrices(&self) -> [&ComplexMatrix; 4] {
        [
            self.a1.matrix(),
            self.a2.matrix(),
            self.b1.matrix(),
            self.b2.matrix(),
        ]
    }

    /// Correlations `[C(A1,B1), C(A1,B2), C(A2,B1), C(A2,B2)]`.
    pub fn correlations(&self) -> [Complex64; 4] {
        let pairs = [
            (&self.a1, &self.b1),
            (&self.a1, &self.b2),
            (&self.a2, &self.b1),
            (&self.a2, &self.b2),
        ];
        pairs.map(|(a, b)| {
            quantum_correlation(a, b, &self.psi).expect("scenario dimensions are validated")
        })
    }
}

/// Singlet `(|01> - |10>) / sqrt 2`.
pub fn singlet() -> StateVector {
    let h = 0.5f64.sqrt();
    StateVector::from_amplitudes(vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(h, 0.0),
        Complex64::new(-h, 0.0),
        Complex64::new(0.0, 0.0),
    ])
    .expect("normalized")
}

/// `(|00> + |11>) / sqrt 2`.
pub fn phi_plus() -> StateVector {
    let h = 0.5f64.sqrt();
    StateVector::from_amplitudes(vec![
        Complex64::new(h, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(h, 0.0),
    ])
    .expect("normalized")
}

/// Settings reaching `2 sqrt 2` on the singlet: `A1 = Z`, `A2 = X`,
/// `B1 = -(Z + X)/sqrt 2`, `B2 = (X - Z)/sqrt 2`.
pub fn optimal_singlet_scenario() -> ChshScenario {
    let (z, x) = (ComplexMatrix::pauli_z(), ComplexMatrix::pauli_x());
    let r = Complex64::new(1.0 / SQRT_2, 0.0);
    ChshScenario::from_matrices(
        z.clone(),
        x.clone(),
        (&z + &x).scale(-r),
        (&x - &z).scale(r),
        singlet(),
    )
    .expect("valid settings")
}

pub fn chsh_value(sc: &ChshScenario) -> Complex64 {
    let [c11, c12, c21, c22] = sc.correlations();
    c11 + c12 + c21 - c22
}

fn z_from(
    a1: &ComplexMatrix,
    a2: &ComplexMatrix,
    b1: &ComplexMatrix,
    b2: &ComplexMatrix,
) -> ComplexMatrix {
    &a1.kron(&(b1 + b2)) + &a2.kron(&(b1 - b2))
}

/// `Z = A1 (x) B1 + A1 (x) B2 + A2 (x) B1 - A2 (x) B2`.
pub fn z_operator(sc: &ChshScenario) -> ComplexMatrix {
    let [a1, a2, b1, b2] = sc.matrices();
    &(&(&a1.kron(b1) + &a1.kron(b2)) + &a2.kron(b1)) - &a2.kron(b2)
}

/// `Z^dag Z` assembled from its seven grouped terms:
///
/// ```text
///   X1 Y1 + X1 Y2 + X2 Y1 + X2 Y2
/// + (X1 - X2)(B1^dag B2 + B2^dag B1)
/// + (Y1 - Y2)(A1^dag A2 + A2^dag A1)
/// + (A1^dag A2 - A2^dag A1)(B2^dag B1 - B1^dag B2)
/// ```
///
/// with `Xk = Ak^dag Ak`, `Yk = Bk^dag Bk`, Alice's factor always on the left
/// of the tensor product.
pub fn zdagz_expansion(sc: &ChshScenario) -> ComplexMatrix {
    let [a1, a2, b1, b2] = sc.matrices();
    let (a1d, a2d, b1d, b2d) = (a1.adjoint(), a2.adjoint(), b1.adjoint(), b2.adjoint());
    let x1 = &a1d * a1;
    let x2 = &a2d * a2;
    let y1 = &b1d * b1;
    let y2 = &b2d * b2;
    let terms = [
        x1.kron(&y1),
        x1.kron(&y2),
        x2.kron(&y1),
        x2.kron(&y2),
        (&x1 - &x2).kron(&(&(&b1d * b2) + &(&b2d * b1))),
        (&(&a1d * a2) + &(&a2d * a1)).kron(&(&y1 - &y2)),
        (&(&a1d * a2) - &(&a2d * a1)).kron(&(&(&b2d * b1) - &(&b1d * b2))),
    ];
    terms
        .iter()
        .fold(ComplexMatrix::zeros(4), |acc, t| &acc + t)
}

/// `||Z^dag Z - expansion||_F`.
pub fn zdagz_expansion_residual(sc: &ChshScenario) -> f64 {
    let z = z_operator(sc);
    (&(&z.adjoint() * &z) - &zdagz_expansion(sc)).frobenius_norm()
}

fn hermitian_unitary_check(sc: &ChshScenario) -> Result<()> {
    for (name, m) in [
        ("A1", &sc.a1),
        ("A2", &sc.a2),
        ("B1", &sc.b1),
        ("B2", &sc.b2),
    ] {
        if !(m.matrix().is_hermitian(DEFAULT_TOL) && m.matrix().is_unitary(DEFAULT_TOL)) {
            return Err(Error::NotHermitianUnitary { name });
        }
    }
    Ok(())
}

/// `4I - [A1, A2] (x) [B1, B2]`, the form `Z^2` takes for Hermitian settings
/// with square equal to identity.
pub fn hermitian_z_squared_form(sc: &ChshScenario) -> Result<ComplexMatrix> {
    hermitian_unitary_check(sc)?;
    let [a1, a2, b1, b2] = sc.matrices();
    let ca = commutator(a1, a2)?;
    let cb = commutator(b1, b2)?;
    Ok(&ComplexMatrix::identity(4).scale(Complex64::new(4.0, 0.0)) - &ca.kron(&cb))
}

/// `||Z^2 - (4I - [A1, A2] (x) [B1, B2])||_F`.
pub fn hermitian_z_squared_residual(sc: &ChshScenario) -> Result<f64> {
    let form = hermitian_z_squared_form(sc)?;
    let z = z_operator(sc);
    Ok((&(&z * &z) - &form).frobenius_norm())
}

/// `4I + (A1^dag A2 - A2^dag A1) (x) (B2^dag B1 - B1^dag B2)`, equal to
/// `Z^dag Z` when every setting is unitary.
pub fn unitary_zdagz_form(sc: &ChshScenario) -> ComplexMatrix {
    let [a1, a2, b1, b2] = sc.matrices();
    let alice = &(&a1.adjoint() * a2) - &(&a2.adjoint() * a1);
    let bob = &(&b2.adjoint() * b1) - &(&b1.adjoint() * b2);
    &ComplexMatrix::identity(4).scale(Complex64::new(4.0, 0.0)) + &alice.kron(&bob)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TsirelsonReport {
    /// `||Z||`.
    pub norm: f64,
    /// `norm <= 2 sqrt 2 + BOUND_TOL`.
    pub satisfied: bool,
    /// `| ||Z^dag Z|| - ||4I + (...)(...)|| |`.
    pub reduced_form_gap: f64,
    pub reduced_form_ok: bool,
}

pub fn tsirelson_check(sc: &ChshScenario) -> TsirelsonReport {
    let z = z_operator(sc);
    let norm = z.operator_norm();
    let zdz = (&z.adjoint() * &z).operator_norm();
    let reduced = unitary_zdagz_form(sc).operator_norm();
    let gap = (zdz - reduced).abs();
    TsirelsonReport {
        norm,
        satisfied: norm <= TSIRELSON_BOUND + BOUND_TOL,
        reduced_form_gap: gap,
        reduced_form_ok: gap <= 1e-10,
    }
}

/// Multiplies Alice's settings by `e^{i phi_a}` and Bob's by `e^{i phi_b}`.
pub fn phase_relabel(sc: &ChshScenario, phi_a: f64, phi_b: f64) -> ChshScenario {
    ChshScenario {
        a1: sc.a1.phase_scaled(phi_a),
        a2: sc.a2.phase_scaled(phi_a),
        b1: sc.b1.phase_scaled(phi_b),
        b2: sc.b2.phase_scaled(phi_b),
        psi: sc.psi.clone(),
    }
}

/// `n . sigma` with `n = (sin t cos p, sin t sin p, cos t)`.
pub fn bloch_observable_matrix(theta: f64, phi: f64) -> ComplexMatrix {
    let (st, ct) = theta.sin_cos();
    let off = Complex64::from_polar(st, -phi);
    ComplexMatrix::from_rows([
        [Complex64::new(ct, 0.0), off],
        [off.conj(), Complex64::new(-ct, 0.0)],
    ])
}

/// Optimizer tuning. Defaults: 32 restarts, sweeps stop when `|S|` improves
/// by less than `1e-10`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    pub sweep_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            seed: 0,
            max_sweeps: 1000,
            sweep_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizedSettings {
    /// `[theta_A1, phi_A1, theta_A2, phi_A2, theta_B1, phi_B1, theta_B2, phi_B2]`.
    pub angles: [f64; 8],
    pub value: f64,
    pub scenario: ChshScenario,
}

/// Grid points scanned before each golden-section refinement.
const LINE_GRID: usize = 16;
const GOLDEN_TOL: f64 = 1e-10;

struct Objective<'a> {
    psi: &'a StateVector,
}

impl Objective<'_> {
    fn value(&self, angles: &[f64; 8]) -> f64 {
        let m: Vec<ComplexMatrix> = (0..4)
            .map(|k| bloch_observable_matrix(angles[2 * k], angles[2 * k + 1]))
            .collect();
        z_from(&m[0], &m[1], &m[2], &m[3])
            .sandwich(self.psi.vector(), self.psi.vector())
            .expect("dimension 4")
            .norm()
    }

    /// Maximizes along coordinate `k`: coarse scan over a full period, then
    /// golden-section inside the best bracket.
    fn line_search(&self, angles: &mut [f64; 8], k: usize, current: f64) -> f64 {
        let origin = angles[k];
        let step = 2.0 * PI / LINE_GRID as f64;
        let mut probe = *angles;
        let eval = |x: f64, probe: &mut [f64; 8]| {
            probe[k] = x;
            self.value(probe)
        };
        let (mut best_x, mut best_f) = (origin, current);
        for g in 1..LINE_GRID {
            let x = origin + g as f64 * step;
            let f = eval(x, &mut probe);
            if f > best_f {
                best_x = x;
                best_f = f;
            }
        }
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (best_x - step, best_x + step);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = eval(x1, &mut probe);
        let mut f2 = eval(x2, &mut probe);
        while hi - lo > GOLDEN_TOL {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = eval(x2, &mut probe);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = eval(x1, &mut probe);
            }
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f > best_f {
                best_x = x;
                best_f = f;
            }
        }
        angles[k] = best_x.rem_euclid(2.0 * PI);
        best_f
    }

    fn ascend(&self, mut angles: [f64; 8], config: &OptimizerConfig) -> ([f64; 8], f64) {
        let mut value = self.value(&angles);
        for _ in 0..config.max_sweeps {
            let before = value;
            for k in 0..8 {
                value = self.line_search(&mut angles, k, value);
            }
            if value - before < config.sweep_tol {
                break;
            }
        }
        (angles, value)
    }
}

/// Searches Hermitian `n . sigma` settings maximizing `|S|` for `psi`.
pub fn optimize_settings(psi: &StateVector, config: &OptimizerConfig) -> Result<OptimizedSettings> {
    if config.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    if psi.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: psi.dim(),
        });
    }
    use rand::Rng;
    let objective = Objective { psi };
    let mut rng = rng_from_seed(config.seed);
    let mut best: Option<([f64; 8], f64)> = None;
    for _ in 0..config.restarts {
        let start: [f64; 8] = std::array::from_fn(|_| rng.gen_range(0.0..2.0 * PI));
        let (angles, value) = objective.ascend(start, config);
        if best.is_none_or(|(_, v)| value > v) {
            best = Some((angles, value));
        }
    }
    let (angles, value) = best.expect("at least one restart");
    let obs: Vec<Observable> = (0..4)
        .map(|k| Observable::new(bloch_observable_matrix(angles[2 * k], angles[2 * k + 1])))
        .collect::<Result<_>>()?;
    let mut it = obs.into_iter();
    let scenario = ChshScenario::new(
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
        psi.clone(),
    )?;
    Ok(OptimizedSettings {
        angles,
        value,
        scenario,
    })
}

/// Random scenario: unitary-normal settings with random unimodular spectra,
/// or Hermitian `n . sigma` settings when `hermitian` is set.
pub fn random_scenario(rng: &mut SimRng, hermitian: bool) -> ChshScenario {
    let draw = |rng: &mut SimRng| {
        let m = if hermitian {
            random_hermitian_unitary_qubit(rng)
        } else {
            random_unitary_normal_qubit(rng)
        };
        Observable::new(m).expect("random unitary is normal")
    };
    let (a1, a2, b1, b2) = (draw(rng), draw(rng), draw(rng), draw(rng));
    let psi = random_state(4, rng);
    ChshScenario::new(a1, a2, b1, b2, psi).expect("random settings are unimodular")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditReport {
    pub trials: u64,
    pub seed: u64,
    pub hermitian: bool,
    pub max_norm: f64,
    pub max_abs_value: f64,
    pub max_expansion_residual: f64,
    pub passed: bool,
}

/// Checks `|S| <= ||Z|| <= 2 sqrt 2 + BOUND_TOL` on `trials` random scenarios.
pub fn tsirelson_audit(trials: u64, seed: u64, hermitian: bool) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut report = AuditReport {
        trials,
        seed,
        hermitian,
        max_norm: 0.0,
        max_abs_value: 0.0,
        max_expansion_residual: 0.0,
        passed: true,
    };
    for _ in 0..trials {
        let sc = random_scenario(&mut rng, hermitian);
        let check = tsirelson_check(&sc);
        let value = chsh_value(&sc).norm();
        let z = z_operator(&sc);
        let rel = zdagz_expansion_residual(&sc) / (&z.adjoint() * &z).frobenius_norm().max(1.0);
        report.max_norm = report.max_norm.max(check.norm);
        report.max_abs_value = report.max_abs_value.max(value);
        report.max_expansion_residual = report.max_expansion_residual.max(rel);
        report.passed &=
            check.satisfied && check.reduced_form_ok && value <= check.norm + BOUND_TOL;
    }
    Ok(report)
}
