//! Born-rule evaluation for multi-qubit states under projective qubit
//! measurements.
//!
//! Conventions: party 0 is the leftmost tensor factor, `|↑⟩` is basis index 0,
//! and outcome `1` is the `+1` eigenspace of `n·σ` (outcome `0` the `−1`
//! eigenspace), so the all-ones outcome carries sign `+1` in a correlator.

pub mod model_file;

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::builtins::{NamedExpression, ValueMode};
use crate::error::{Error, Result};
use crate::lhv::{local_bounds, LocalBoundResult};
use crate::rational::{format_signed, to_f64, Coeff};
use crate::scenario::{CorrelatorLabel, Expression, Scenario};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const MAX_QUBITS: usize = 10;
const STATE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

fn qubits_for_dimension(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidState(format!(
            "dimension {dim} is not a power of two ≥ 2"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(Error::InvalidState(format!(
            "{n} qubits exceeds the supported maximum of {MAX_QUBITS}"
        )));
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    parties: usize,
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let parties = qubits_for_dimension(amplitudes.len())?;
        let amplitudes = DVector::from_vec(amplitudes);
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self {
            parties,
            amplitudes,
        })
    }

    /// Normalizes before validating.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Self::new((v / C64::from(norm)).iter().copied().collect())
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix {
            parties: self.parties,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    parties: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity and unit trace within 1e-12, eigenvalues ≥ −1e-10.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        let parties = qubits_for_dimension(matrix.nrows())?;
        let skew = (&matrix - matrix.adjoint()).camax();
        if skew > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {skew:e})")));
        }
        let trace = matrix.trace();
        if (trace - C64::from(1.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {trace} is not 1")));
        }
        let min_eig = matrix.clone().symmetric_eigenvalues().min();
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { parties, matrix })
    }

    pub fn maximally_mixed(parties: usize) -> Result<Self> {
        let dim = 1usize << parties;
        qubits_for_dimension(dim)?;
        Ok(Self {
            parties,
            matrix: CMatrix::identity(dim, dim) / C64::from(dim as f64),
        })
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn parties(&self) -> usize {
        match self {
            QuantumState::Pure(s) => s.parties,
            QuantumState::Mixed(m) => m.parties,
        }
    }

    /// `⟨ψ|O|ψ⟩` or `Tr(Oρ)`, real part.
    pub fn expectation(&self, operator: &CMatrix) -> f64 {
        match self {
            QuantumState::Pure(s) => {
                let v = &s.amplitudes;
                (v.adjoint() * operator * v)[(0, 0)].re
            }
            QuantumState::Mixed(m) => (operator * &m.matrix).trace().re,
        }
    }

    /// Expectation of `F_0 ⊗ F_1 ⊗ … ⊗ F_{n−1}` for 2×2 factors, applying
    /// the operator one tensor factor at a time.
    pub fn product_expectation<M: std::borrow::Borrow<CMatrix>>(&self, factors: &[M]) -> f64 {
        debug_assert_eq!(factors.len(), self.parties());
        match self {
            QuantumState::Pure(s) => {
                let mut w: Vec<C64> = s.amplitudes.iter().copied().collect();
                apply_product(factors, &mut w);
                s.amplitudes
                    .iter()
                    .zip(&w)
                    .map(|(a, b)| a.conj() * b)
                    .sum::<C64>()
                    .re
            }
            QuantumState::Mixed(m) => {
                let mut trace = 0.0;
                for (j, column) in m.matrix.column_iter().enumerate() {
                    let mut w: Vec<C64> = column.iter().copied().collect();
                    apply_product(factors, &mut w);
                    trace += w[j].re;
                }
                trace
            }
        }
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        match self {
            QuantumState::Pure(s) => s.density_matrix(),
            QuantumState::Mixed(m) => m.clone(),
        }
    }
}

impl From<PureState> for QuantumState {
    fn from(s: PureState) -> Self {
        QuantumState::Pure(s)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(m: DensityMatrix) -> Self {
        QuantumState::Mixed(m)
    }
}

/// `(|↑…↑⟩ + |↓…↓⟩)/√2`.
pub fn ghz_state(parties: usize) -> Result<PureState> {
    if parties < 2 {
        return Err(Error::InvalidState("GHZ state needs at least 2 parties".into()));
    }
    let dim = 1usize << parties;
    qubits_for_dimension(dim)?;
    let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
    amplitudes[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    amplitudes[dim - 1] = C64::new(FRAC_1_SQRT_2, 0.0);
    PureState::new(amplitudes)
}

/// Unit vector defining the observable `n·σ`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlochVector([f64; 3]);

impl BlochVector {
    pub const X: BlochVector = BlochVector([1.0, 0.0, 0.0]);
    pub const Y: BlochVector = BlochVector([0.0, 1.0, 0.0]);
    pub const Z: BlochVector = BlochVector([0.0, 0.0, 1.0]);

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidMeasurement(format!(
                "Bloch vector ({x}, {y}, {z}) has norm {norm}"
            )));
        }
        Ok(Self([x, y, z]))
    }

    /// `(sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self([st * cp, st * sp, ct])
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    /// `n·σ`.
    pub fn observable(&self) -> CMatrix {
        let [x, y, z] = self.0;
        CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(z, 0.0),
                C64::new(x, -y),
                C64::new(x, y),
                C64::new(-z, 0.0),
            ],
        )
    }

    /// `(I ± n·σ)/2`, `+` for outcome 1.
    pub fn projector(&self, outcome: usize) -> CMatrix {
        let sign = if outcome == 1 { 1.0 } else { -1.0 };
        (CMatrix::identity(2, 2) + self.observable() * C64::from(sign)) * C64::from(0.5)
    }
}

/// `vectors[party][setting]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    vectors: Vec<Vec<BlochVector>>,
}

impl MeasurementModel {
    pub fn new(vectors: Vec<Vec<BlochVector>>) -> Result<Self> {
        if vectors.is_empty() || vectors.iter().any(|v| v.is_empty()) {
            return Err(Error::InvalidMeasurement(
                "every party needs at least one setting".into(),
            ));
        }
        for v in vectors.iter().flatten() {
            let [x, y, z] = v.0;
            BlochVector::new(x, y, z)?;
        }
        Ok(Self { vectors })
    }

    pub fn parties(&self) -> usize {
        self.vectors.len()
    }

    pub fn settings(&self, party: usize) -> usize {
        self.vectors[party].len()
    }

    pub fn vector(&self, party: usize, setting: usize) -> BlochVector {
        self.vectors[party][setting]
    }

    pub fn vectors(&self) -> &[Vec<BlochVector>] {
        &self.vectors
    }

    /// The binary scenario this model measures.
    pub fn scenario(&self) -> Scenario {
        Scenario::new(self.vectors.iter().map(|v| vec![2; v.len()]).collect())
            .expect("nonempty model")
    }

    fn check(&self, state: &QuantumState, settings: &[usize]) -> Result<()> {
        if state.parties() != self.parties() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} qubits, model has {} parties",
                state.parties(),
                self.parties()
            )));
        }
        if settings.len() != self.parties() {
            return Err(Error::DimensionMismatch(format!(
                "{} settings given for {} parties",
                settings.len(),
                self.parties()
            )));
        }
        if let Some(p) = (0..settings.len()).find(|&p| settings[p] >= self.settings(p)) {
            return Err(Error::DimensionMismatch(format!(
                "setting {} of party {p} not in model",
                settings[p]
            )));
        }
        Ok(())
    }

    fn check_scenario(&self, scenario: &Scenario) -> Result<()> {
        if !scenario.is_binary() {
            return Err(Error::UnsupportedScenario(
                "quantum evaluation supports binary outcomes only".into(),
            ));
        }
        if *scenario != self.scenario() {
            return Err(Error::ScenarioMismatch(
                "expression scenario does not match the measurement model".into(),
            ));
        }
        Ok(())
    }
}

/// `σ_X` for setting 0 and `σ_Y` for setting 1 on each of three parties.
pub fn paper_model() -> MeasurementModel {
    MeasurementModel {
        vectors: vec![vec![BlochVector::X, BlochVector::Y]; 3],
    }
}

fn apply_product<M: std::borrow::Borrow<CMatrix>>(factors: &[M], v: &mut [C64]) {
    let n = factors.len();
    for (p, f) in factors.iter().enumerate() {
        let f = f.borrow();
        let stride = 1usize << (n - 1 - p);
        let (f00, f01, f10, f11) = (f[(0, 0)], f[(0, 1)], f[(1, 0)], f[(1, 1)]);
        for base in (0..v.len()).filter(|i| i & stride == 0) {
            let (a, b) = (v[base], v[base | stride]);
            v[base] = f00 * a + f01 * b;
            v[base | stride] = f10 * a + f11 * b;
        }
    }
}

pub(crate) fn kron_all(factors: impl IntoIterator<Item = CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(&f))
}

pub fn joint_probability(
    state: &QuantumState,
    model: &MeasurementModel,
    settings: &[usize],
    outcomes: &[usize],
) -> Result<f64> {
    model.check(state, settings)?;
    if outcomes.len() != settings.len() || outcomes.iter().any(|&o| o > 1) {
        return Err(Error::DimensionMismatch(format!(
            "outcomes {outcomes:?} are not one binary label per party"
        )));
    }
    let projectors: Vec<CMatrix> = settings
        .iter()
        .zip(outcomes)
        .enumerate()
        .map(|(p, (&s, &o))| model.vector(p, s).projector(o))
        .collect();
    Ok(state.product_expectation(&projectors))
}

/// `Σ_o (−1)^z P(o)`, `z` the number of zero outcomes.
pub fn correlator(state: &QuantumState, model: &MeasurementModel, settings: &[usize]) -> Result<f64> {
    model.check(state, settings)?;
    let n = settings.len();
    let mut total = 0.0;
    for bits in 0..(1usize << n) {
        let outcomes: Vec<usize> = (0..n).map(|p| (bits >> (n - 1 - p)) & 1).collect();
        let zeros = outcomes.iter().filter(|&&o| o == 0).count();
        let p = joint_probability(state, model, settings, &outcomes)?;
        total += if zeros % 2 == 0 { p } else { -p };
    }
    Ok(total)
}

/// Expectation of `⊗ (n_p·σ)` computed directly from the observables.
pub fn observable_expectation(
    state: &QuantumState,
    model: &MeasurementModel,
    settings: &[usize],
) -> Result<f64> {
    model.check(state, settings)?;
    let op = kron_all(
        settings
            .iter()
            .enumerate()
            .map(|(p, &s)| model.vector(p, s).observable()),
    );
    Ok(state.expectation(&op))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermValue {
    /// `P(A0 B0 C0 | 1 0 0)` or `E(A0 B1 C1)`.
    pub term: String,
    pub coefficient: Coeff,
    /// Probability or correlator of the term alone.
    pub raw: f64,
    /// `coefficient * raw`.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionValue {
    pub value: f64,
    /// One entry per stored term, in the expression's term order.
    pub breakdown: Vec<TermValue>,
}

pub fn expression_value(
    expr: &Expression,
    state: &QuantumState,
    model: &MeasurementModel,
) -> Result<ExpressionValue> {
    model.check_scenario(expr.scenario())?;
    if state.parties() != model.parties() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} qubits, model has {} parties",
            state.parties(),
            model.parties()
        )));
    }
    let mut breakdown = Vec::new();
    match expr {
        Expression::Probability(e) => {
            for (key, c) in e.terms() {
                let raw = joint_probability(state, model, &key.settings, &key.outcomes)?;
                breakdown.push(TermValue {
                    term: key.to_string(),
                    coefficient: c.clone(),
                    raw,
                    contribution: to_f64(c) * raw,
                });
            }
        }
        Expression::Correlator(e) => {
            for (settings, c) in e.terms() {
                let raw = correlator(state, model, settings)?;
                breakdown.push(TermValue {
                    term: CorrelatorLabel(settings).to_string(),
                    coefficient: c.clone(),
                    raw,
                    contribution: to_f64(c) * raw,
                });
            }
        }
    }
    Ok(ExpressionValue {
        value: breakdown.iter().map(|t| t.contribution).sum(),
        breakdown,
    })
}

/// `(1−p)ρ + p·I/2^n`.
pub fn mix_with_white_noise(state: &QuantumState, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::NoiseOutOfRange(p));
    }
    let rho = state.density_matrix();
    let dim = rho.matrix.nrows();
    let matrix = rho.matrix * C64::from(1.0 - p)
        + CMatrix::identity(dim, dim) * C64::from(p / dim as f64);
    Ok(DensityMatrix {
        parties: rho.parties,
        matrix,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub mode: ValueMode,
    /// Value of the signed linear form.
    pub signed_value: f64,
    /// Value compared against the local bound (magnitude in magnitude mode).
    pub quantum_value: f64,
    pub local: LocalBoundResult,
    /// Local maximum (or magnitude bound in magnitude mode).
    pub local_max: Coeff,
    /// `quantum_value / local_max`; absent unless `local_max > 0`.
    pub violation_factor: Option<f64>,
    /// `quantum_value − local_max`.
    pub violation_amount: f64,
    pub violates: bool,
}

/// The local bound an expression's reported value is compared with.
pub fn reported_local_max(local: &LocalBoundResult, mode: ValueMode) -> Coeff {
    match mode {
        ValueMode::Signed => local.max.clone(),
        ValueMode::Magnitude => local.magnitude(),
    }
}

pub fn violation_report(
    named: &NamedExpression,
    state: &QuantumState,
    model: &MeasurementModel,
) -> Result<ViolationReport> {
    let signed_value = expression_value(&named.expression, state, model)?.value;
    let local = local_bounds(&named.expression.to_probability())?;
    Ok(build_violation(named.mode, signed_value, local))
}

pub(crate) fn build_violation(mode: ValueMode, signed_value: f64, local: LocalBoundResult) -> ViolationReport {
    let quantum_value = match mode {
        ValueMode::Signed => signed_value,
        ValueMode::Magnitude => signed_value.abs(),
    };
    let local_max = reported_local_max(&local, mode);
    let bound = to_f64(&local_max);
    let violation_factor = (local_max > Coeff::from_integer(0.into())).then(|| quantum_value / bound);
    let violation_amount = quantum_value - bound;
    ViolationReport {
        mode,
        signed_value,
        quantum_value,
        local,
        violation_factor,
        violation_amount,
        violates: violation_amount > 0.0,
        local_max,
    }
}

impl std::fmt::Display for TermValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} = {}", format_signed(&self.coefficient), self.term, self.contribution)
    }
}
