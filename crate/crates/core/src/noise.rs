//! Critical white-noise fraction.
//!
//! Mixing with white noise is affine in `p`: every joint probability becomes
//! `p/d + (1−p)·P_QM`, `d` the number of outcome cells, so the value of a
//! linear expression is `(1−p)·G_QM + p·Σγ/d`. The critical fraction solves
//! that for the local bound.

use crate::builtins::{NamedExpression, ValueMode};
use crate::error::{Error, Result};
use crate::lhv::local_bounds;
use crate::quantum::{
    expression_value, mix_with_white_noise, reported_local_max, MeasurementModel, QuantumState,
};
use crate::rational::{to_f64, Coeff};
use crate::scenario::Expression;

/// Margins smaller than this count as "no violation, tolerance 0".
const MARGIN_TOL: f64 = 1e-12;
/// Bisection stops once the bracket is this narrow.
const BISECTION_WIDTH: f64 = 1e-12;

/// Which local extremum the quantum value is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseSide {
    /// Quantum value above the local maximum.
    Upper,
    /// Quantum value below the local minimum.
    Lower,
}

/// Tolerance obtained when the formula's `m − n` is read as the number of
/// positive minus negative terms instead of the coefficient sum.
#[derive(Debug, Clone, PartialEq)]
pub struct TermCountTolerance {
    pub positive_terms: usize,
    pub negative_terms: usize,
    pub p_critical: Option<f64>,
    /// Whether it coincides (within 1e-9) with the coefficient-sum tolerance.
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    pub p_critical: f64,
    pub side: NoiseSide,
    /// Quantum value oriented towards `side` (negated on the lower side).
    pub quantum_value: f64,
    /// Local bound on the same orientation.
    pub local_max: Coeff,
    /// Σγ of the oriented probability-form expression.
    pub coefficient_sum: Coeff,
    /// Outcome cells per setting choice (2^parties).
    pub outcome_cells: usize,
    pub term_count: TermCountTolerance,
}

/// Exact Σγ over the probability form of an expression.
pub fn coefficient_sum(expr: &Expression) -> Coeff {
    expr.to_probability().coefficient_sum()
}

struct Oriented {
    side: NoiseSide,
    sign: f64,
    quantum_value: f64,
    local_max: Coeff,
    coefficient_sum: Coeff,
    positive: usize,
    negative: usize,
    outcome_cells: usize,
}

fn orient(
    expr: &Expression,
    side: NoiseSide,
    mode: ValueMode,
    state: &QuantumState,
    model: &MeasurementModel,
) -> Result<Oriented> {
    let signed_value = expression_value(expr, state, model)?.value;
    let probability = expr.to_probability();
    let local = local_bounds(&probability)?;
    let (sign, oriented) = match side {
        NoiseSide::Upper => (1.0, probability),
        NoiseSide::Lower => (-1.0, probability.negated()),
    };
    let local_max = match (mode, side) {
        (ValueMode::Magnitude, _) => reported_local_max(&local, mode),
        (ValueMode::Signed, NoiseSide::Upper) => local.max.clone(),
        (ValueMode::Signed, NoiseSide::Lower) => -local.min.clone(),
    };
    let (positive, negative) = oriented.sign_counts();
    Ok(Oriented {
        side,
        sign,
        quantum_value: sign * signed_value,
        local_max,
        coefficient_sum: oriented.coefficient_sum(),
        positive,
        negative,
        outcome_cells: 1usize << expr.scenario().parties(),
    })
}

fn side_for(named: &NamedExpression, state: &QuantumState, model: &MeasurementModel) -> Result<NoiseSide> {
    Ok(match named.mode {
        ValueMode::Signed => NoiseSide::Upper,
        ValueMode::Magnitude => {
            if expression_value(&named.expression, state, model)?.value < 0.0 {
                NoiseSide::Lower
            } else {
                NoiseSide::Upper
            }
        }
    })
}

fn closed_form(quantum: f64, local: f64, offset: f64) -> Result<f64> {
    let margin = quantum - local;
    if margin < -MARGIN_TOL {
        return Err(Error::NoViolation { quantum, local });
    }
    let denominator = quantum - offset;
    if denominator <= 0.0 {
        return Err(Error::Degenerate(format!(
            "white noise does not lower the value (G_QM − Σγ/d = {denominator})"
        )));
    }
    Ok((margin.max(0.0) / denominator).min(1.0))
}

/// Tolerance on the side implied by the expression's value mode: the upper
/// side for signed expressions, the side of the quantum value's sign for
/// magnitude expressions.
pub fn white_noise_tolerance(
    named: &NamedExpression,
    state: &QuantumState,
    model: &MeasurementModel,
) -> Result<NoiseReport> {
    let side = side_for(named, state, model)?;
    tolerance_report(&named.expression, side, named.mode, state, model)
}

/// Tolerance of the signed linear form against one local extremum.
pub fn white_noise_tolerance_on_side(
    expr: &Expression,
    side: NoiseSide,
    state: &QuantumState,
    model: &MeasurementModel,
) -> Result<NoiseReport> {
    tolerance_report(expr, side, ValueMode::Signed, state, model)
}

fn tolerance_report(
    expr: &Expression,
    side: NoiseSide,
    mode: ValueMode,
    state: &QuantumState,
    model: &MeasurementModel,
) -> Result<NoiseReport> {
    let o = orient(expr, side, mode, state, model)?;
    let local = to_f64(&o.local_max);
    let cells = o.outcome_cells as f64;
    let p_critical = closed_form(o.quantum_value, local, to_f64(&o.coefficient_sum) / cells)?;
    let count_offset = (o.positive as f64 - o.negative as f64) / cells;
    let alt = closed_form(o.quantum_value, local, count_offset).ok();
    Ok(NoiseReport {
        p_critical,
        side: o.side,
        quantum_value: o.quantum_value,
        local_max: o.local_max,
        coefficient_sum: o.coefficient_sum,
        outcome_cells: o.outcome_cells,
        term_count: TermCountTolerance {
            positive_terms: o.positive,
            negative_terms: o.negative,
            agrees: alt.is_some_and(|p| (p - p_critical).abs() <= 1e-9),
            p_critical: alt,
        },
    })
}

/// Bisection on `p ∈ [0, 1]` for the point where the noisy value meets the
/// local bound; uses the mixed state directly rather than the affine formula.
pub fn tolerance_by_root_scan(
    named: &NamedExpression,
    state: &QuantumState,
    model: &MeasurementModel,
) -> Result<f64> {
    let side = side_for(named, state, model)?;
    let o = orient(&named.expression, side, named.mode, state, model)?;
    let local = to_f64(&o.local_max);
    let margin = |p: f64| -> Result<f64> {
        let noisy: QuantumState = mix_with_white_noise(state, p)?.into();
        Ok(o.sign * expression_value(&named.expression, &noisy, model)?.value - local)
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let f_lo = margin(lo)?;
    if f_lo.abs() <= MARGIN_TOL {
        return Ok(0.0);
    }
    let f_hi = margin(hi)?;
    if f_lo < 0.0 || f_hi > 0.0 {
        return Err(Error::NoRoot);
    }
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
