//! Machine-readable reports.
//!
//! Every number is a [`Quantity`]: exact rationals carry both `exact`
//! (`n/d`) and `decimal` (12 significant digits); floating-point results carry
//! only `decimal`. Each quantity names the computation that produced it.
//! Field order is fixed by the struct definitions, so identical inputs give
//! byte-identical JSON.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::builtins::{reference_expansion, NamedExpression, ValueMode};
use crate::error::{Error, Result};
use crate::lhv::{diff_expansion, expand_full_joint, local_bounds, trivial_bounds, evaluate_on_strategy, DiffReport, FullJointExpansion};
use crate::noise::{tolerance_by_root_scan, white_noise_tolerance, NoiseSide};
use crate::optimize::{optimize_measurements, OptimizationResult, OptimizerConfig, StartOutcome};
use crate::parser::parse_full_joint;
use crate::quantum::model_file::{ModelFile, StateSpec};
use crate::quantum::{build_violation, expression_value, MeasurementModel, QuantumState, ViolationReport};
use crate::rational::{format_decimal, format_exact, to_f64, Coeff};
use crate::scenario::Expression;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const SIG_DIGITS: usize = 12;
const AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub decimal: String,
    pub provenance: &'static str,
}

impl Quantity {
    pub fn exact(c: &Coeff, provenance: &'static str) -> Self {
        Self {
            exact: Some(format_exact(c)),
            decimal: format_decimal(to_f64(c), SIG_DIGITS),
            provenance,
        }
    }

    pub fn float(x: f64, provenance: &'static str) -> Self {
        Self {
            exact: None,
            decimal: format_decimal(x, SIG_DIGITS),
            provenance,
        }
    }
}

/// Where the expression came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpressionInfo {
    /// `builtin:<name>` or `file:<path> sha256:<hex>`.
    pub identity: String,
    pub form: &'static str,
    pub mode: ValueMode,
    pub outcomes_per_setting: Vec<Vec<usize>>,
    /// Terms of the probability form.
    pub term_count: usize,
    pub coefficient_sum: Quantity,
}

impl ExpressionInfo {
    pub fn new(identity: &str, named: &NamedExpression) -> Self {
        let probability = named.expression.to_probability();
        Self {
            identity: identity.to_string(),
            form: match named.expression {
                Expression::Probability(_) => "probability",
                Expression::Correlator(_) => "correlator",
            },
            mode: named.mode,
            outcomes_per_setting: named.expression.scenario().outcomes_per_setting().to_vec(),
            term_count: probability.term_count(),
            coefficient_sum: Quantity::exact(&probability.coefficient_sum(), "exact sum of probability-form coefficients"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
}

impl Header {
    pub fn new(command: &'static str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            command,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSection {
    pub local_max: Quantity,
    pub local_min: Quantity,
    /// `max(|min|, |max|)`, the bound on the absolute value.
    pub magnitude_bound: Quantity,
    /// Bound the quantum value is compared with under the expression's mode.
    pub reported_bound: Quantity,
    pub maximizers: Vec<String>,
    pub minimizers: Vec<String>,
    pub trivial_lower: Quantity,
    pub trivial_upper: Quantity,
}

fn bound_section(named: &NamedExpression) -> Result<BoundSection> {
    let probability = named.expression.to_probability();
    let local = local_bounds(&probability)?;
    let (lower, upper) = trivial_bounds(&probability)?;
    if lower != local.min || upper != local.max {
        return Err(Error::Invariant(format!(
            "enumerated bounds [{}, {}] differ from expansion bounds [{}, {}]",
            local.min, local.max, lower, upper
        )));
    }
    const ENUM: &str = "lhv::local_bounds (exhaustive deterministic strategies)";
    let reported = match named.mode {
        ValueMode::Signed => local.max.clone(),
        ValueMode::Magnitude => local.magnitude(),
    };
    Ok(BoundSection {
        local_max: Quantity::exact(&local.max, ENUM),
        local_min: Quantity::exact(&local.min, ENUM),
        magnitude_bound: Quantity::exact(&local.magnitude(), ENUM),
        reported_bound: Quantity::exact(&reported, ENUM),
        maximizers: local.maximizers.iter().map(|s| s.to_string()).collect(),
        minimizers: local.minimizers.iter().map(|s| s.to_string()).collect(),
        trivial_lower: Quantity::exact(&lower, "lhv::trivial_bounds (min full-joint coefficient)"),
        trivial_upper: Quantity::exact(&upper, "lhv::trivial_bounds (max full-joint coefficient)"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    #[serde(flatten)]
    pub header: Header,
    pub expression: ExpressionInfo,
    pub bounds: BoundSection,
}

pub fn bound_report(identity: &str, named: &NamedExpression) -> Result<BoundReport> {
    Ok(BoundReport {
        header: Header::new("bound"),
        expression: ExpressionInfo::new(identity, named),
        bounds: bound_section(named)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffLine {
    pub assignment: String,
    pub computed: String,
    pub fixture: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffSection {
    pub fixture: String,
    pub agree: bool,
    pub mismatches: Vec<DiffLine>,
    pub fixture_warnings: Vec<String>,
}

impl DiffSection {
    fn new(fixture: &str, diff: &DiffReport, warnings: Vec<String>) -> Self {
        Self {
            fixture: fixture.to_string(),
            agree: diff.is_empty(),
            mismatches: diff
                .entries
                .iter()
                .map(|e| DiffLine {
                    assignment: e.assignment.to_string(),
                    computed: format_exact(&e.computed),
                    fixture: format_exact(&e.fixture),
                })
                .collect(),
            fixture_warnings: warnings,
        }
    }
}

/// Loads a full-joint fixture and diffs it against `computed`.
pub fn diff_against_fixture(
    computed: &FullJointExpansion,
    fixture_name: &str,
    fixture_text: &str,
) -> Result<DiffSection> {
    let parsed = parse_full_joint(fixture_text)?;
    let diff = diff_expansion(computed, &parsed.value)?;
    let warnings = parsed
        .warnings
        .iter()
        .map(|w| format!("line {}: {}", w.line, w.message))
        .collect();
    Ok(DiffSection::new(fixture_name, &diff, warnings))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionSummary {
    pub assignments: usize,
    pub sum: Quantity,
    pub max: Quantity,
    pub min: Quantity,
    /// Number of assignments per coefficient value.
    pub value_counts: BTreeMap<String, usize>,
    /// Every coefficient equals the value of the expression on that assignment.
    pub matches_strategy_values: bool,
}

fn expansion_summary(expansion: &FullJointExpansion, named: &NamedExpression) -> Result<ExpansionSummary> {
    const EXP: &str = "lhv::expand_full_joint (marginal completions)";
    let probability = named.expression.to_probability();
    let mut matches = true;
    for (s, c) in expansion.iter() {
        if evaluate_on_strategy(&probability, s)? != *c {
            matches = false;
        }
    }
    if !matches {
        return Err(Error::Invariant(
            "full-joint expansion disagrees with strategy evaluation".into(),
        ));
    }
    let mut value_counts = BTreeMap::new();
    for (_, c) in expansion.iter() {
        *value_counts.entry(format_exact(c)).or_insert(0) += 1;
    }
    Ok(ExpansionSummary {
        assignments: expansion.len(),
        sum: Quantity::exact(&expansion.sum(), EXP),
        max: Quantity::exact(&expansion.max(), EXP),
        min: Quantity::exact(&expansion.min(), EXP),
        value_counts,
        matches_strategy_values: matches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionEntry {
    pub assignment: String,
    pub coefficient: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpandReport {
    #[serde(flatten)]
    pub header: Header,
    pub expression: ExpressionInfo,
    pub summary: ExpansionSummary,
    pub coefficients: Vec<ExpansionEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diff: Option<DiffSection>,
}

/// `fixture` is `(name, text)` of a full-joint document to diff against.
pub fn expand_report(
    identity: &str,
    named: &NamedExpression,
    fixture: Option<(&str, &str)>,
) -> Result<ExpandReport> {
    let expansion = expand_full_joint(&named.expression.to_probability())?;
    let diff = fixture
        .map(|(name, text)| diff_against_fixture(&expansion, name, text))
        .transpose()?;
    Ok(ExpandReport {
        header: Header::new("expand"),
        expression: ExpressionInfo::new(identity, named),
        summary: expansion_summary(&expansion, named)?,
        coefficients: expansion
            .iter()
            .map(|(s, c)| ExpansionEntry {
                assignment: s.to_string(),
                coefficient: format_exact(c),
            })
            .collect(),
        diff,
    })
}

/// A loaded state and measurement model with a display name.
#[derive(Debug, Clone)]
pub struct ModelSource {
    pub identity: String,
    pub state: QuantumState,
    pub model: MeasurementModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermLine {
    pub term: String,
    pub coefficient: String,
    pub raw: Quantity,
    pub contribution: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumSection {
    pub model: String,
    pub signed_value: Quantity,
    /// Value compared against the local bound (magnitude in magnitude mode).
    pub quantum_value: Quantity,
    pub breakdown: Vec<TermLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationSection {
    pub local_max: Quantity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation_factor: Option<Quantity>,
    pub violation_amount: Quantity,
    pub violates: bool,
}

impl From<&ViolationReport> for ViolationSection {
    fn from(v: &ViolationReport) -> Self {
        Self {
            local_max: Quantity::exact(&v.local_max, "lhv::local_bounds under the expression's value mode"),
            violation_factor: v
                .violation_factor
                .map(|f| Quantity::float(f, "quantum::violation_report (quantum_value / local_max)")),
            violation_amount: Quantity::float(
                v.violation_amount,
                "quantum::violation_report (quantum_value - local_max)",
            ),
            violates: v.violates,
        }
    }
}

fn quantum_section(named: &NamedExpression, source: &ModelSource) -> Result<(QuantumSection, ViolationReport)> {
    const BORN: &str = "quantum::expression_value (projector expectations)";
    let value = expression_value(&named.expression, &source.state, &source.model)?;
    let local = local_bounds(&named.expression.to_probability())?;
    let violation = build_violation(named.mode, value.value, local);
    let section = QuantumSection {
        model: source.identity.clone(),
        signed_value: Quantity::float(value.value, BORN),
        quantum_value: Quantity::float(violation.quantum_value, BORN),
        breakdown: value
            .breakdown
            .iter()
            .map(|t| TermLine {
                term: t.term.clone(),
                coefficient: format_exact(&t.coefficient),
                raw: Quantity::float(t.raw, BORN),
                contribution: Quantity::float(t.contribution, BORN),
            })
            .collect(),
    };
    Ok((section, violation))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumReport {
    #[serde(flatten)]
    pub header: Header,
    pub expression: ExpressionInfo,
    pub quantum: QuantumSection,
    pub violation: ViolationSection,
}

pub fn quantum_report(identity: &str, named: &NamedExpression, source: &ModelSource) -> Result<QuantumReport> {
    let (quantum, violation) = quantum_section(named, source)?;
    Ok(QuantumReport {
        header: Header::new("quantum"),
        expression: ExpressionInfo::new(identity, named),
        quantum,
        violation: (&violation).into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermCountSection {
    pub positive_terms: usize,
    pub negative_terms: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_critical: Option<Quantity>,
    pub consistent_with_closed_form: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSection {
    pub side: NoiseSide,
    pub p_critical: Quantity,
    pub p_root_scan: Quantity,
    pub methods_agree: bool,
    pub quantum_value: Quantity,
    pub local_bound: Quantity,
    pub coefficient_sum: Quantity,
    pub outcome_cells: usize,
    /// Same formula with `m − n` read as (positive − negative term count).
    pub term_count_reading: TermCountSection,
}

fn noise_section(named: &NamedExpression, source: &ModelSource) -> Result<NoiseSection> {
    let report = white_noise_tolerance(named, &source.state, &source.model)?;
    let scan = tolerance_by_root_scan(named, &source.state, &source.model)?;
    let methods_agree = (report.p_critical - scan).abs() <= AGREEMENT_TOL;
    if !methods_agree {
        return Err(Error::Invariant(format!(
            "closed-form tolerance {} and bisection {} disagree",
            report.p_critical, scan
        )));
    }
    Ok(NoiseSection {
        side: report.side,
        p_critical: Quantity::float(
            report.p_critical,
            "noise::white_noise_tolerance ((G_QM - G_L) / (G_QM - sum/cells))",
        ),
        p_root_scan: Quantity::float(scan, "noise::tolerance_by_root_scan (bisection on mixed state)"),
        methods_agree,
        quantum_value: Quantity::float(report.quantum_value, "quantum::expression_value, oriented to side"),
        local_bound: Quantity::exact(&report.local_max, "lhv::local_bounds, oriented to side"),
        coefficient_sum: Quantity::exact(&report.coefficient_sum, "exact sum of oriented coefficients"),
        outcome_cells: report.outcome_cells,
        term_count_reading: TermCountSection {
            positive_terms: report.term_count.positive_terms,
            negative_terms: report.term_count.negative_terms,
            p_critical: report.term_count.p_critical.map(|p| {
                Quantity::float(p, "(G_QM - G_L) / (G_QM - (positive - negative)/cells)")
            }),
            consistent_with_closed_form: report.term_count.agrees,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseReportOut {
    #[serde(flatten)]
    pub header: Header,
    pub expression: ExpressionInfo,
    pub model: String,
    pub noise: NoiseSection,
}

pub fn noise_report(identity: &str, named: &NamedExpression, source: &ModelSource) -> Result<NoiseReportOut> {
    Ok(NoiseReportOut {
        header: Header::new("noise"),
        expression: ExpressionInfo::new(identity, named),
        model: source.identity.clone(),
        noise: noise_section(named, source)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerEcho {
    pub state: String,
    pub restarts: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_evals: usize,
    pub include_fixed_start: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartLine {
    pub index: usize,
    pub kind: &'static str,
    pub value: Quantity,
    pub evaluations: usize,
}

impl From<&StartOutcome> for StartLine {
    fn from(s: &StartOutcome) -> Self {
        Self {
            index: s.index,
            kind: s.kind,
            value: Quantity::float(s.value, "optimize::nelder_mead"),
            evaluations: s.evaluations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    #[serde(flatten)]
    pub header: Header,
    pub expression: ExpressionInfo,
    pub config: OptimizerEcho,
    /// A lower bound on the best quantum value for this state.
    pub best_value: Quantity,
    pub best_start: usize,
    pub evaluations: usize,
    pub starts: Vec<StartLine>,
    /// Best angles in model-file form.
    pub best_model: ModelFile,
}

pub fn optimize_report(
    identity: &str,
    named: &NamedExpression,
    state_name: &str,
    state: &QuantumState,
    config: &OptimizerConfig,
) -> Result<(OptimizeReport, OptimizationResult)> {
    let result = optimize_measurements(&named.expression, named.mode, state, config)?;
    let report = OptimizeReport {
        header: Header::new("optimize"),
        expression: ExpressionInfo::new(identity, named),
        config: OptimizerEcho {
            state: state_name.to_string(),
            restarts: config.restarts,
            seed: config.seed,
            tolerance: config.tolerance,
            max_evals: config.max_evals,
            include_fixed_start: config.include_fixed_start,
        },
        best_value: Quantity::float(
            result.best_value,
            "optimize::optimize_measurements, re-evaluated by quantum::expression_value",
        ),
        best_start: result.best_start,
        evaluations: result.evaluations,
        starts: result.starts.iter().map(StartLine::from).collect(),
        best_model: result.best_angles.to_model_file(StateSpec::Named(state_name.to_string())),
    };
    Ok((report, result))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inputs {
    pub expression: String,
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseOutcome {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<NoiseSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub undefined_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    #[serde(flatten)]
    pub header: Header,
    pub inputs: Inputs,
    pub expression: ExpressionInfo,
    pub term_count: usize,
    pub bounds: BoundSection,
    pub quantum: QuantumSection,
    pub violation: ViolationSection,
    pub noise: NoiseOutcome,
    pub expansion: ExpansionSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansion_diff: Option<DiffSection>,
}

/// Full analysis. Builtins with a shipped reference expansion are diffed
/// against it unless `fixture` overrides.
pub fn analysis_report(
    identity: &str,
    named: &NamedExpression,
    source: &ModelSource,
    fixture: Option<(&str, &str)>,
) -> Result<AnalysisReport> {
    let probability = named.expression.to_probability();
    let expansion = expand_full_joint(&probability)?;
    let builtin_fixture = identity
        .strip_prefix("builtin:")
        .and_then(|name| reference_expansion(name).map(|text| ("builtin-reference", text)));
    let fixture = fixture.or(builtin_fixture);
    let expansion_diff = fixture
        .map(|(name, text)| diff_against_fixture(&expansion, name, text))
        .transpose()?;
    let (quantum, violation) = quantum_section(named, source)?;
    let noise = match noise_section(named, source) {
        Ok(section) => NoiseOutcome {
            result: Some(section),
            undefined_reason: None,
        },
        Err(e @ (Error::NoViolation { .. } | Error::Degenerate(_) | Error::NoRoot)) => NoiseOutcome {
            result: None,
            undefined_reason: Some(e.to_string()),
        },
        Err(e) => return Err(e),
    };
    Ok(AnalysisReport {
        header: Header::new("report"),
        inputs: Inputs {
            expression: identity.to_string(),
            model: source.identity.clone(),
            fixture: fixture.map(|(name, _)| name.to_string()),
        },
        expression: ExpressionInfo::new(identity, named),
        term_count: probability.term_count(),
        bounds: bound_section(named)?,
        quantum,
        violation: (&violation).into(),
        noise,
        expansion: expansion_summary(&expansion, named)?,
        expansion_diff,
    })
}

/// Renders any report as sorted-path `key: value` lines.
pub fn render_plain<T: Serialize>(report: &T) -> String {
    let value = serde_json::to_value(report).expect("reports serialize");
    let mut out = String::new();
    flatten("", &value, &mut out);
    out
}

fn flatten(prefix: &str, value: &serde_json::Value, out: &mut String) {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            if let (Some(Value::String(decimal)), Some(Value::String(provenance))) =
                (map.get("decimal"), map.get("provenance"))
            {
                let exact = map
                    .get("exact")
                    .and_then(Value::as_str)
                    .map(|e| format!("{e} = "))
                    .unwrap_or_default();
                out.push_str(&format!("{prefix}: {exact}{decimal}  [{provenance}]\n"));
                return;
            }
            for (k, v) in map {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&p, v, out);
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str(&format!("{prefix}: []\n"));
            }
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        Value::String(s) => out.push_str(&format!("{prefix}: {s}\n")),
        other => out.push_str(&format!("{prefix}: {other}\n")),
    }
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}
