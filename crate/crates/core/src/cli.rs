//! Command-line surface: document formats and subcommands.
//!
//! Matrices, states and CHSH scenarios are JSON documents with complex
//! numbers written as explicit `[re, im]` pairs:
//!
//! ```json
//! { "n": 2, "entries": [[1, 0], [0, 0], [0, 0], [-1, 0]] }
//! { "dim": 2, "amplitudes": [[1, 0], [0, 0]] }
//! { "A1": {..}, "A2": {..}, "B1": {..}, "B2": {..}, "state": {..} }
//! ```
//!
//! JSON written by the tool prints every float with 17 significant digits,
//! so documents reload bit-identically.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 domain verdict false
//! (e.g. matrix not normal), 4 internal invariant violated.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chsh::{
    self, ChshScenario, OptimizerConfig, OutcomeAlphabet, BOUND_TOL, TSIRELSON_BOUND,
};
use crate::dynamics::{self, Hamiltonian, DEFAULT_DT};
use crate::error::Error;
use crate::linalg::{commutator, ComplexMatrix, ComplexVector, DEFAULT_TOL};
use crate::measurement::{self, StateVector};
use crate::observables::{self, Observable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VERDICT: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// State documents within this distance of unit norm are normalized silently.
pub const STATE_NORM_TOL: f64 = 1e-8;
/// Beyond [`STATE_NORM_TOL`] and up to this distance they are normalized with
/// a warning; further away they are rejected.
pub const STATE_NORM_WARN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDocument {
    pub n: usize,
    pub entries: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDocument {
    pub dim: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    #[serde(rename = "A1")]
    pub a1: MatrixDocument,
    #[serde(rename = "A2")]
    pub a2: MatrixDocument,
    #[serde(rename = "B1")]
    pub b1: MatrixDocument,
    #[serde(rename = "B2")]
    pub b2: MatrixDocument,
    pub state: StateDocument,
}

fn pairs_to_complex(field: &str, pairs: &[[f64; 2]]) -> Result<Vec<Complex64>, CliError> {
    pairs
        .iter()
        .enumerate()
        .map(|(k, &[re, im])| {
            if re.is_finite() && im.is_finite() {
                Ok(Complex64::new(re, im))
            } else {
                Err(CliError::input(format!("{field}[{k}]: non-finite number")))
            }
        })
        .collect()
}

fn complex_to_pairs(values: &[Complex64]) -> Vec<[f64; 2]> {
    values.iter().map(|z| [z.re, z.im]).collect()
}

impl MatrixDocument {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            n: m.dim(),
            entries: complex_to_pairs(m.entries()),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix, CliError> {
        self.to_matrix_in("")
    }

    fn to_matrix_in(&self, prefix: &str) -> Result<ComplexMatrix, CliError> {
        if self.n == 0 {
            return Err(CliError::input(format!("{prefix}n: must be positive")));
        }
        if self.entries.len() != self.n * self.n {
            return Err(CliError::input(format!(
                "{prefix}entries: expected n^2 = {} pairs, found {}",
                self.n * self.n,
                self.entries.len()
            )));
        }
        let data = pairs_to_complex(&format!("{prefix}entries"), &self.entries)?;
        ComplexMatrix::new(self.n, data)
            .map_err(|e| CliError::input(format!("{prefix}entries: {e}")))
    }
}

/// A loaded state and the warning emitted while normalizing it, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedState {
    pub state: StateVector,
    pub warning: Option<String>,
}

impl StateDocument {
    pub fn from_state(s: &StateVector) -> Self {
        Self {
            dim: s.dim(),
            amplitudes: complex_to_pairs(s.amplitudes()),
        }
    }

    pub fn to_state(&self) -> Result<LoadedState, CliError> {
        self.to_state_in("")
    }

    fn to_state_in(&self, prefix: &str) -> Result<LoadedState, CliError> {
        if self.dim == 0 {
            return Err(CliError::input(format!("{prefix}dim: must be positive")));
        }
        if self.amplitudes.len() != self.dim {
            return Err(CliError::input(format!(
                "{prefix}amplitudes: expected dim = {} pairs, found {}",
                self.dim,
                self.amplitudes.len()
            )));
        }
        let data = pairs_to_complex(&format!("{prefix}amplitudes"), &self.amplitudes)?;
        let v = ComplexVector::new(data)
            .map_err(|e| CliError::input(format!("{prefix}amplitudes: {e}")))?;
        let norm = v.norm();
        let deviation = (norm - 1.0).abs();
        if deviation > STATE_NORM_WARN {
            return Err(CliError::input(format!(
                "{prefix}amplitudes: norm {norm} is too far from 1"
            )));
        }
        let warning = (deviation > STATE_NORM_TOL)
            .then(|| format!("{prefix}amplitudes: norm {norm} differs from 1; normalizing"));
        // Already normalized to working precision: keep the exact amplitudes.
        if let Ok(state) = StateVector::new(v.clone()) {
            return Ok(LoadedState { state, warning });
        }
        let state = StateVector::normalize(v)
            .map_err(|e| CliError::input(format!("{prefix}amplitudes: {e}")))?;
        Ok(LoadedState { state, warning })
    }
}

impl ScenarioDocument {
    pub fn from_scenario(sc: &ChshScenario) -> Self {
        Self {
            a1: MatrixDocument::from_matrix(sc.a1().matrix()),
            a2: MatrixDocument::from_matrix(sc.a2().matrix()),
            b1: MatrixDocument::from_matrix(sc.b1().matrix()),
            b2: MatrixDocument::from_matrix(sc.b2().matrix()),
            state: StateDocument::from_state(sc.state()),
        }
    }

    pub fn to_scenario(&self) -> Result<(ChshScenario, Option<String>), CliError> {
        let mut observables = Vec::with_capacity(4);
        for (name, doc) in [
            ("A1", &self.a1),
            ("A2", &self.a2),
            ("B1", &self.b1),
            ("B2", &self.b2),
        ] {
            let m = doc.to_matrix_in(&format!("{name}."))?;
            if m.dim() != 2 {
                return Err(CliError::input(format!(
                    "{name}.n: expected 2, found {}",
                    m.dim()
                )));
            }
            let o = Observable::new(m).map_err(|e| CliError::input(format!("{name}: {e}")))?;
            observables.push(o);
        }
        let loaded = self.state.to_state_in("state.")?;
        if loaded.state.dim() != 4 {
            return Err(CliError::input(format!(
                "state.dim: expected 4, found {}",
                loaded.state.dim()
            )));
        }
        let mut it = observables.into_iter();
        let sc = ChshScenario::new(
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            loaded.state,
        )
        .map_err(|e| CliError::input(e.to_string()))?;
        Ok((sc, loaded.warning))
    }
}

/// Failure of a command, carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn verdict(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VERDICT,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } => CliError::internal(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::internal(format!("output error: {e}"))
    }
}

fn read_document<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn load_matrix(path: &Path) -> Result<ComplexMatrix, CliError> {
    read_document::<MatrixDocument>(path)?
        .to_matrix()
        .map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))
}

pub fn load_state(path: &Path) -> Result<LoadedState, CliError> {
    read_document::<StateDocument>(path)?
        .to_state()
        .map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))
}

pub fn load_observable(path: &Path) -> Result<Observable, CliError> {
    let m = load_matrix(path)?;
    Observable::new(m).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn load_scenario(path: &Path) -> Result<(ChshScenario, Option<String>), CliError> {
    read_document::<ScenarioDocument>(path)?
        .to_scenario()
        .map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))
}

/// serde_json formatter writing floats as `{:.16e}` (17 significant digits).
struct FullPrecision<F> {
    inner: F,
}

macro_rules! forward {
    ($($name:ident),*) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
                self.inner.$name(writer)
            }
        )*
    };
}

impl<F: serde_json::ser::Formatter> serde_json::ser::Formatter for FullPrecision<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    forward!(
        begin_array,
        end_array,
        end_array_value,
        begin_object,
        end_object,
        begin_object_value,
        end_object_value
    );
}

fn to_json_string<T: Serialize>(value: &T, pretty: bool) -> String {
    let mut buf = Vec::new();
    let result = if pretty {
        let fmt = FullPrecision {
            inner: serde_json::ser::PrettyFormatter::new(),
        };
        value.serialize(&mut serde_json::Serializer::with_formatter(&mut buf, fmt))
    } else {
        let fmt = FullPrecision {
            inner: serde_json::ser::CompactFormatter,
        };
        value.serialize(&mut serde_json::Serializer::with_formatter(&mut buf, fmt))
    };
    result.expect("serializing in-memory JSON cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Writes a document with full-precision floats.
pub fn write_document<T: Serialize>(path: &Path, doc: &T) -> Result<(), CliError> {
    let mut text = to_json_string(doc, true);
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn cjson(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn ctext(z: Complex64) -> String {
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    if im.is_sign_negative() {
        format!("{re:.12}-{:.12}i", -im)
    } else {
        format!("{re:.12}+{im:.12}i")
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "normobs",
    version,
    about = "Observables as normal operators: decomposition, measurement, dynamics and CHSH tests"
)]
pub struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,

    /// Relative tolerance for normality checks.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,

    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test whether a matrix commutes with its adjoint.
    CheckNormal { path: PathBuf },
    /// Spectral decomposition of a normal matrix.
    Decompose { path: PathBuf },
    /// Born-rule distribution of an observable, optionally sampled.
    Measure {
        observable: PathBuf,
        state: PathBuf,
        /// Number of samples; 0 prints only the exact distribution.
        #[arg(long, default_value_t = 0)]
        shots: u64,
    },
    /// Expectation value <psi|A|psi>.
    Expect { observable: PathBuf, state: PathBuf },
    /// Evolve a state under a Hamiltonian (hbar = 1).
    Evolve {
        state: PathBuf,
        hamiltonian: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t: f64,
        /// Compare both sides of the Heisenberg equation for this observable at time t.
        #[arg(long)]
        ehrenfest: Option<PathBuf>,
        /// Central-difference step for --ehrenfest.
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Write the evolved state document here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CHSH tests.
    #[command(subcommand)]
    Chsh(ChshCommand),
}

#[derive(Debug, Subcommand)]
pub enum ChshCommand {
    /// Enumerate all deterministic local strategies.
    Lhv(LhvArgs),
    /// Quantum correlations and the Tsirelson check for a scenario document.
    Quantum { scenario: PathBuf },
    /// Search Bloch-vector settings maximizing |S| for a two-qubit state.
    Optimize {
        state: PathBuf,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        /// Write the best scenario document here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check ||Z|| <= 2 sqrt 2 on random scenarios.
    Audit {
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Draw Hermitian settings with spectrum {-1, 1} only.
        #[arg(long)]
        hermitian: bool,
    },
}

#[derive(Debug, Args)]
pub struct LhvArgs {
    /// Alice's labels, e.g. "1,-1".
    #[arg(long, default_value = "1,-1", allow_hyphen_values = true)]
    pub alphabet_a: String,
    /// Bob's labels, e.g. "i,-i" or "0.6+0.8i,-0.6-0.8i".
    #[arg(long, default_value = "i,-i", allow_hyphen_values = true)]
    pub alphabet_b: String,
}

/// Output of a successful command: text for stdout, warnings for stderr and
/// the exit code (0, or 3 for a negative verdict).
#[derive(Debug, Default)]
pub struct Report {
    pub stdout: String,
    pub warnings: Vec<String>,
    pub code: i32,
}

impl Report {
    fn line(&mut self, s: impl AsRef<str>) {
        self.stdout.push_str(s.as_ref());
        self.stdout.push('\n');
    }

    fn json(&mut self, v: &Value) {
        self.line(to_json_string(v, false));
    }
}

/// Parses arguments and runs; returns the exit code.
pub fn run_from_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == EXIT_OK { out } else { err };
            let _ = sink.write_all(rendered.as_bytes());
            code
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(cli) {
        Ok(report) => {
            for w in &report.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            if out.write_all(report.stdout.as_bytes()).is_err() {
                return EXIT_INTERNAL;
            }
            report.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    if !(cli.tol >= 0.0 && cli.tol.is_finite()) {
        return Err(CliError::input("--tol must be a nonnegative number"));
    }
    match &cli.command {
        Command::CheckNormal { path } => cmd_check_normal(path, cli.tol, cli.json),
        Command::Decompose { path } => cmd_decompose(path, cli.json),
        Command::Measure {
            observable,
            state,
            shots,
        } => cmd_measure(observable, state, *shots, cli.seed, cli.json),
        Command::Expect { observable, state } => cmd_expect(observable, state, cli.json),
        Command::Evolve {
            state,
            hamiltonian,
            t,
            ehrenfest,
            dt,
            out,
        } => cmd_evolve(
            state,
            hamiltonian,
            *t,
            ehrenfest.as_deref(),
            *dt,
            out.as_deref(),
            cli.json,
        ),
        Command::Chsh(ChshCommand::Lhv(args)) => {
            cmd_chsh_lhv(&args.alphabet_a, &args.alphabet_b, cli.json)
        }
        Command::Chsh(ChshCommand::Quantum { scenario }) => cmd_chsh_quantum(scenario, cli.json),
        Command::Chsh(ChshCommand::Optimize {
            state,
            restarts,
            out,
        }) => cmd_chsh_optimize(state, *restarts, cli.seed, out.as_deref(), cli.json),
        Command::Chsh(ChshCommand::Audit { trials, hermitian }) => {
            cmd_chsh_audit(*trials, cli.seed, *hermitian, cli.json)
        }
    }
}

pub fn cmd_check_normal(path: &Path, tol: f64, as_json: bool) -> Result<Report, CliError> {
    let m = load_matrix(path)?;
    let normal = observables::check_normal(&m, tol);
    let residual = observables::normality_residual(&m);
    let (c, d) = observables::hermitian_parts(&m);
    let parts = commutator(&c, &d)?.frobenius_norm();
    let mut r = Report {
        code: if normal { EXIT_OK } else { EXIT_VERDICT },
        ..Report::default()
    };
    if as_json {
        r.json(&json!({
            "normal": normal,
            "residual": residual,
            "hermitian_parts_commutator": parts,
            "tol": tol,
        }));
    } else {
        r.line(format!("normal: {normal}"));
        r.line(format!("residual ||M^dag M - M M^dag||_F: {residual:.6e}"));
        r.line(format!("hermitian parts ||[C, D]||_F: {parts:.6e}"));
        r.line(format!("tolerance: {tol:e}"));
    }
    Ok(r)
}

pub fn cmd_decompose(path: &Path, as_json: bool) -> Result<Report, CliError> {
    let m = load_matrix(path)?;
    let obs = match observables::spectral_decompose(&m) {
        Ok(o) => o,
        Err(e @ Error::NotNormal { .. }) => {
            return Err(CliError::verdict(format!("{}: {e}", path.display())))
        }
        Err(e) => return Err(e.into()),
    };
    let residual = obs.reconstruction_residual();
    let mut r = Report::default();
    if as_json {
        let basis: Vec<Value> = (0..obs.dim())
            .map(|i| {
                Value::Array(
                    (0..obs.dim())
                        .map(|j| cjson(obs.eigenbasis()[(i, j)]))
                        .collect(),
                )
            })
            .collect();
        r.json(&json!({
            "eigenvalues": obs.eigenvalues().iter().map(|&z| cjson(z)).collect::<Vec<_>>(),
            "eigenbasis": basis,
            "eigenspaces": obs.eigenspaces(),
            "reconstruction_residual": residual,
            "hermitian": obs.is_hermitian(),
        }));
    } else {
        r.line("eigenvalues:");
        for (i, &z) in obs.eigenvalues().iter().enumerate() {
            r.line(format!("  [{i}] {}", ctext(z)));
        }
        r.line("eigenvectors (columns):");
        for i in 0..obs.dim() {
            let row: Vec<String> = (0..obs.dim())
                .map(|j| ctext(obs.eigenbasis()[(i, j)]))
                .collect();
            r.line(format!("  {}", row.join("  ")));
        }
        r.line(format!("eigenspaces: {:?}", obs.eigenspaces()));
        r.line(format!("hermitian: {}", obs.is_hermitian()));
        r.line(format!(
            "reconstruction residual ||U L U^dag - M||_F: {residual:.6e}"
        ));
    }
    Ok(r)
}

fn checked_pair(obs: &Observable, loaded: &LoadedState) -> Result<(), CliError> {
    if obs.dim() != loaded.state.dim() {
        return Err(CliError::input(format!(
            "observable has dimension {} but state has dimension {}",
            obs.dim(),
            loaded.state.dim()
        )));
    }
    Ok(())
}

pub fn cmd_measure(
    obs_path: &Path,
    state_path: &Path,
    shots: u64,
    seed: u64,
    as_json: bool,
) -> Result<Report, CliError> {
    let obs = load_observable(obs_path)?;
    let loaded = load_state(state_path)?;
    checked_pair(&obs, &loaded)?;
    let dist = measurement::spectral_distribution(&obs, &loaded.state)?;
    let record = if shots > 0 {
        Some(measurement::sample(&obs, &loaded.state, shots, seed)?)
    } else {
        None
    };
    let mut r = Report {
        warnings: loaded.warning.into_iter().collect(),
        ..Report::default()
    };
    if as_json {
        let outcomes: Vec<Value> = dist
            .outcomes
            .iter()
            .enumerate()
            .map(|(k, o)| {
                let mut v = json!({
                    "eigenvalue": cjson(o.eigenvalue),
                    "probability": o.probability,
                });
                if let Some(rec) = &record {
                    v["count"] = json!(rec.counts[k]);
                }
                v
            })
            .collect();
        let mut doc = json!({ "outcomes": outcomes });
        if let Some(rec) = &record {
            doc["shots"] = json!(rec.shots);
            doc["seed"] = json!(rec.seed);
        }
        r.json(&doc);
    } else {
        r.line(format!("{:<36} {:>20}", "eigenvalue", "probability"));
        for o in &dist.outcomes {
            r.line(format!(
                "{:<36} {:>20.15}",
                ctext(o.eigenvalue),
                o.probability
            ));
        }
        if let Some(rec) = &record {
            r.line(format!(
                "counts (shots = {}, seed = {}):",
                rec.shots, rec.seed
            ));
            for (o, count) in dist.outcomes.iter().zip(&rec.counts) {
                r.line(format!("  {}: {count}", ctext(o.eigenvalue)));
            }
        }
    }
    Ok(r)
}

pub fn cmd_expect(obs_path: &Path, state_path: &Path, as_json: bool) -> Result<Report, CliError> {
    let obs = load_observable(obs_path)?;
    let loaded = load_state(state_path)?;
    checked_pair(&obs, &loaded)?;
    let value = observables::expectation(&obs, &loaded.state)?;
    let spectral = measurement::spectral_distribution(&obs, &loaded.state)?.mean();
    let mut r = Report {
        warnings: loaded.warning.into_iter().collect(),
        ..Report::default()
    };
    if as_json {
        r.json(&json!({
            "expectation": cjson(value),
            "spectral_mean": cjson(spectral),
        }));
    } else {
        r.line(format!("expectation <psi|A|psi>: {}", ctext(value)));
        r.line(format!("spectral mean sum(l_i p_i): {}", ctext(spectral)));
    }
    Ok(r)
}

pub fn cmd_evolve(
    state_path: &Path,
    ham_path: &Path,
    t: f64,
    ehrenfest: Option<&Path>,
    dt: f64,
    out: Option<&Path>,
    as_json: bool,
) -> Result<Report, CliError> {
    if !t.is_finite() {
        return Err(CliError::input("--t must be finite"));
    }
    let loaded = load_state(state_path)?;
    let h = Hamiltonian::new(load_matrix(ham_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", ham_path.display())))?;
    if h.dim() != loaded.state.dim() {
        return Err(CliError::input(format!(
            "Hamiltonian has dimension {} but state has dimension {}",
            h.dim(),
            loaded.state.dim()
        )));
    }
    let evolved = dynamics::evolve(&loaded.state, &h, t)?;
    let check = match ehrenfest {
        Some(path) => {
            let obs = load_observable(path)?;
            if obs.dim() != h.dim() {
                return Err(CliError::input(format!(
                    "{}: dimension {} does not match the Hamiltonian",
                    path.display(),
                    obs.dim()
                )));
            }
            Some(dynamics::ehrenfest_samples(&obs, &h, &loaded.state, &[t], dt)?[0])
        }
        None => None,
    };
    if let Some(path) = out {
        write_document(path, &StateDocument::from_state(&evolved))?;
    }
    let mut r = Report {
        warnings: loaded.warning.into_iter().collect(),
        ..Report::default()
    };
    if as_json {
        let mut doc = json!({
            "t": t,
            "state": StateDocument::from_state(&evolved),
        });
        if let Some(s) = check {
            doc["ehrenfest"] = json!({
                "dt": dt,
                "derivative": cjson(s.derivative),
                "heisenberg_rhs": cjson(s.rhs),
                "deviation": s.deviation(),
            });
        }
        r.json(&doc);
    } else {
        r.line(format!("state at t = {t}:"));
        for (i, &z) in evolved.amplitudes().iter().enumerate() {
            r.line(format!("  [{i}] {}", ctext(z)));
        }
        if let Some(s) = check {
            r.line(format!(
                "d<A>/dt (central difference, dt = {dt:e}): {}",
                ctext(s.derivative)
            ));
            r.line(format!("(1/i)<[A, H]>: {}", ctext(s.rhs)));
            r.line(format!("deviation: {:.6e}", s.deviation()));
        }
    }
    Ok(r)
}

pub fn cmd_chsh_lhv(alphabet_a: &str, alphabet_b: &str, as_json: bool) -> Result<Report, CliError> {
    let alice = OutcomeAlphabet::parse(alphabet_a)
        .map_err(|e| CliError::input(format!("--alphabet-a: {e}")))?;
    let bob = OutcomeAlphabet::parse(alphabet_b)
        .map_err(|e| CliError::input(format!("--alphabet-b: {e}")))?;
    let strategies = chsh::enumerate_strategies(&alice, &bob);
    let max = chsh::lhv_max(&alice, &bob);
    let mut r = Report::default();
    if as_json {
        let rows: Vec<Value> = strategies
            .iter()
            .map(|(s, v)| {
                json!({
                    "a1": cjson(s.a1), "a2": cjson(s.a2), "b1": cjson(s.b1), "b2": cjson(s.b2),
                    "s": cjson(*v), "abs_s": v.norm(),
                })
            })
            .collect();
        r.json(&json!({
            "alphabet_a": alice.labels().iter().map(|&z| cjson(z)).collect::<Vec<_>>(),
            "alphabet_b": bob.labels().iter().map(|&z| cjson(z)).collect::<Vec<_>>(),
            "strategies": rows,
            "max_abs_s": max,
        }));
    } else {
        let short = |z: Complex64| {
            let re = if z.re == 0.0 { 0.0 } else { z.re };
            let im = if z.im == 0.0 { 0.0 } else { z.im };
            format!("{re:+.4}{im:+.4}i")
        };
        r.line(format!(
            "{:>16} {:>16} {:>16} {:>16} {:>18} {:>8}",
            "a1", "a2", "b1", "b2", "S", "|S|"
        ));
        for (s, v) in &strategies {
            r.line(format!(
                "{:>16} {:>16} {:>16} {:>16} {:>18} {:>8.4}",
                short(s.a1),
                short(s.a2),
                short(s.b1),
                short(s.b2),
                short(*v),
                v.norm()
            ));
        }
        r.line(format!("max |S| = {max:.12}"));
    }
    Ok(r)
}

pub fn cmd_chsh_quantum(path: &Path, as_json: bool) -> Result<Report, CliError> {
    let (sc, warning) = load_scenario(path)?;
    let correlations = sc.correlations();
    let s = chsh::chsh_value(&sc);
    let report = chsh::tsirelson_check(&sc);
    let z = chsh::z_operator(&sc);
    let zdz_norm = (&z.adjoint() * &z).frobenius_norm();
    let expansion = chsh::zdagz_expansion_residual(&sc);
    let hermitian_residual = chsh::hermitian_z_squared_residual(&sc).ok();
    let mut r = Report {
        warnings: warning.into_iter().collect(),
        ..Report::default()
    };
    if as_json {
        r.json(&json!({
            "correlations": {
                "A1B1": cjson(correlations[0]),
                "A1B2": cjson(correlations[1]),
                "A2B1": cjson(correlations[2]),
                "A2B2": cjson(correlations[3]),
            },
            "chsh_value": cjson(s),
            "abs_chsh_value": s.norm(),
            "z_operator_norm": report.norm,
            "zdagz_expansion_residual": expansion,
            "zdagz_expansion_relative_residual": expansion / zdz_norm.max(1.0),
            "hermitian_z_squared_residual": hermitian_residual,
            "reduced_form_gap": report.reduced_form_gap,
            "tsirelson_bound": TSIRELSON_BOUND,
            "satisfied": report.satisfied,
        }));
    } else {
        for (name, c) in ["C(A1,B1)", "C(A1,B2)", "C(A2,B1)", "C(A2,B2)"]
            .iter()
            .zip(correlations)
        {
            r.line(format!("{name}: {}", ctext(c)));
        }
        r.line(format!("S = C11 + C12 + C21 - C22: {}", ctext(s)));
        r.line(format!("|S|: {:.15}", s.norm()));
        r.line(format!("||Z||: {:.15}", report.norm));
        r.line(format!(
            "Z^dag Z expansion residual: {expansion:.6e} (relative {:.6e})",
            expansion / zdz_norm.max(1.0)
        ));
        match hermitian_residual {
            Some(h) => r.line(format!("Z^2 vs 4I - [A1,A2][B1,B2] residual: {h:.6e}")),
            None => r.line("Z^2 vs 4I - [A1,A2][B1,B2]: n/a (settings not Hermitian)"),
        }
        r.line(format!(
            "unitary reduced-form gap: {:.6e}",
            report.reduced_form_gap
        ));
        r.line(format!(
            "Tsirelson bound 2 sqrt 2 = {TSIRELSON_BOUND:.15}: {}",
            if report.satisfied {
                "satisfied"
            } else {
                "VIOLATED"
            }
        ));
    }
    if !report.satisfied || !report.reduced_form_ok {
        return Err(CliError::internal(format!(
            "Tsirelson check failed: ||Z|| = {}, reduced-form gap = {:e}",
            report.norm, report.reduced_form_gap
        )));
    }
    Ok(r)
}

pub fn cmd_chsh_optimize(
    state_path: &Path,
    restarts: usize,
    seed: u64,
    out: Option<&Path>,
    as_json: bool,
) -> Result<Report, CliError> {
    if restarts == 0 {
        return Err(CliError::input("--restarts must be at least 1"));
    }
    let loaded = load_state(state_path)?;
    if loaded.state.dim() != 4 {
        return Err(CliError::input(format!(
            "{}: expected a two-qubit state (dim 4), found dim {}",
            state_path.display(),
            loaded.state.dim()
        )));
    }
    let config = OptimizerConfig {
        restarts,
        seed,
        ..OptimizerConfig::default()
    };
    let best = chsh::optimize_settings(&loaded.state, &config)?;
    if best.value > TSIRELSON_BOUND + BOUND_TOL {
        return Err(CliError::internal(format!(
            "optimizer exceeded the Tsirelson bound: {}",
            best.value
        )));
    }
    if let Some(path) = out {
        write_document(path, &ScenarioDocument::from_scenario(&best.scenario))?;
    }
    let names = ["A1", "A2", "B1", "B2"];
    let mut r = Report {
        warnings: loaded.warning.into_iter().collect(),
        ..Report::default()
    };
    if as_json {
        let settings: Vec<Value> = names
            .iter()
            .enumerate()
            .map(|(k, n)| json!({ "name": n, "theta": best.angles[2 * k], "phi": best.angles[2 * k + 1] }))
            .collect();
        r.json(&json!({
            "settings": settings,
            "abs_chsh_value": best.value,
            "restarts": restarts,
            "seed": seed,
        }));
    } else {
        r.line("best settings (n = (sin t cos p, sin t sin p, cos t)):");
        for (k, n) in names.iter().enumerate() {
            r.line(format!(
                "  {n}: theta = {:.12}, phi = {:.12}",
                best.angles[2 * k],
                best.angles[2 * k + 1]
            ));
        }
        r.line(format!("|S| = {:.15}", best.value));
    }
    Ok(r)
}

pub fn cmd_chsh_audit(
    trials: u64,
    seed: u64,
    hermitian: bool,
    as_json: bool,
) -> Result<Report, CliError> {
    if trials == 0 {
        return Err(CliError::input("--trials must be at least 1"));
    }
    let audit = chsh::tsirelson_audit(trials, seed, hermitian)?;
    let mut r = Report::default();
    if as_json {
        r.json(&json!({
            "trials": audit.trials,
            "seed": audit.seed,
            "hermitian": audit.hermitian,
            "max_z_norm": audit.max_norm,
            "max_abs_chsh_value": audit.max_abs_value,
            "max_expansion_relative_residual": audit.max_expansion_residual,
            "bound": TSIRELSON_BOUND + BOUND_TOL,
            "pass": audit.passed,
        }));
    } else {
        r.line(format!(
            "trials: {} ({} settings), seed {}",
            audit.trials,
            if hermitian {
                "Hermitian"
            } else {
                "unitary-normal"
            },
            audit.seed
        ));
        r.line(format!("max ||Z||: {:.15}", audit.max_norm));
        r.line(format!("max |S|: {:.15}", audit.max_abs_value));
        r.line(format!(
            "max Z^dag Z expansion relative residual: {:.6e}",
            audit.max_expansion_residual
        ));
        r.line(format!(
            "bound 2 sqrt 2 + {BOUND_TOL:e}: {}",
            if audit.passed { "pass" } else { "FAIL" }
        ));
    }
    if !audit.passed {
        return Err(CliError::internal(format!(
            "Tsirelson audit failed: max ||Z|| = {}",
            audit.max_norm
        )));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matrix_document_validation_names_fields() {
        let doc = MatrixDocument {
            n: 2,
            entries: vec![[1.0, 0.0]; 3],
        };
        let e = doc.to_matrix().unwrap_err();
        assert_eq!(e.code, EXIT_INPUT);
        assert!(e.message.contains("entries"));
        let doc = MatrixDocument {
            n: 0,
            entries: vec![],
        };
        assert!(doc.to_matrix().unwrap_err().message.contains("n:"));
    }

    #[test]
    fn state_document_normalization_band() {
        let doc = |x: f64| StateDocument {
            dim: 2,
            amplitudes: vec![[x, 0.0], [0.0, 0.0]],
        };
        let exact = doc(1.0).to_state().unwrap();
        assert!(exact.warning.is_none());
        let close = doc(1.0 + 5e-9).to_state().unwrap();
        assert!(close.warning.is_none());
        assert_eq!(close.state.amplitudes()[0].re, 1.0);
        let warned = doc(1.0 + 1e-5).to_state().unwrap();
        assert!(warned.warning.is_some());
        assert!(doc(1.1).to_state().is_err());
        let e = StateDocument {
            dim: 3,
            amplitudes: vec![[1.0, 0.0]],
        }
        .to_state()
        .unwrap_err();
        assert!(e.message.contains("amplitudes"));
    }

    #[test]
    fn scenario_document_rejects_non_unimodular() {
        let mut doc = ScenarioDocument::from_scenario(&chsh::optimal_singlet_scenario());
        doc.b2.entries[0] = [2.0, 0.0];
        doc.b2.entries[3] = [2.0, 0.0];
        let e = doc.to_scenario().unwrap_err();
        assert_eq!(e.code, EXIT_INPUT);
        assert!(e.message.contains("B2"), "{}", e.message);
    }

    #[test]
    fn full_precision_floats() {
        let s = to_json_string(&json!({"x": 0.1, "n": 3}), false);
        assert_eq!(s, r#"{"n":3,"x":1.0000000000000001e-1}"#);
    }

    proptest! {
        #[test]
        fn documents_round_trip_bitwise(entries in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 4)) {
            let doc = MatrixDocument { n: 2, entries: entries.iter().map(|&(a, b)| [a, b]).collect() };
            let text = to_json_string(&doc, true);
            let back: MatrixDocument = serde_json::from_str(&text).unwrap();
            for (x, y) in doc.entries.iter().zip(&back.entries) {
                prop_assert_eq!(x[0].to_bits(), y[0].to_bits());
                prop_assert_eq!(x[1].to_bits(), y[1].to_bits());
            }
        }
    }
}
