//! Registry of named expressions.

use crate::error::{Error, Result};
use crate::rational::int;
use crate::scenario::{BellExpression, CorrelatorExpression, Expression, MarginalTerm, Scenario};

pub const BUILTIN_NAMES: &[&str] = &["g-paper", "mermin"];

/// How a quantum or local value of an expression is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueMode {
    /// The linear form itself.
    Signed,
    /// Absolute value of the linear form; local bound is `max(|min|, |max|)`.
    Magnitude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedExpression {
    pub name: String,
    pub expression: Expression,
    pub mode: ValueMode,
}

pub fn builtin(name: &str) -> Result<NamedExpression> {
    match name {
        "g-paper" => Ok(NamedExpression {
            name: name.into(),
            expression: Expression::Probability(g_paper()),
            mode: ValueMode::Signed,
        }),
        "mermin" => Ok(NamedExpression {
            name: name.into(),
            expression: Expression::Correlator(mermin()),
            mode: ValueMode::Magnitude,
        }),
        _ => Err(Error::UnknownBuiltin {
            name: name.into(),
            available: BUILTIN_NAMES.join(", "),
        }),
    }
}

/// Hand-transcribed full-joint expansion shipped for a builtin, if any.
pub fn reference_expansion(name: &str) -> Option<&'static str> {
    match name {
        "g-paper" => Some(include_str!("../fixtures/appendix_a.fixture")),
        _ => None,
    }
}

// (coefficient, settings, outcomes), settings 0 = unprimed, 1 = primed.
const G_TERMS: [(i64, [usize; 3], [usize; 3]); 20] = [
    (1, [0, 0, 0], [1, 1, 1]),
    (5, [0, 0, 0], [1, 0, 0]),
    (5, [0, 0, 0], [0, 0, 1]),
    (1, [0, 0, 0], [1, 0, 1]),
    (4, [0, 0, 0], [0, 0, 0]),
    (4, [0, 0, 0], [0, 1, 0]),
    (1, [0, 1, 1], [0, 0, 0]),
    (1, [0, 1, 1], [0, 1, 1]),
    (-4, [0, 1, 1], [0, 0, 1]),
    (-4, [0, 1, 1], [0, 1, 0]),
    (-1, [1, 1, 0], [0, 0, 1]),
    (-1, [1, 1, 0], [1, 1, 1]),
    (-4, [1, 1, 0], [0, 1, 0]),
    (-4, [1, 1, 0], [1, 0, 0]),
    (-5, [1, 0, 1], [1, 0, 0]),
    (-5, [1, 0, 1], [0, 0, 1]),
    (1, [1, 1, 1], [1, 1, 0]),
    (1, [1, 1, 1], [0, 0, 1]),
    (-4, [1, 1, 1], [1, 1, 1]),
    (-4, [1, 1, 1], [0, 0, 0]),
];

/// The 20-term tripartite expression with local maximum 1.
pub fn g_paper() -> BellExpression {
    let terms = G_TERMS
        .iter()
        .map(|(c, s, o)| MarginalTerm::new(int(*c), s.to_vec(), o.to_vec()));
    BellExpression::new(Scenario::tripartite_binary(), terms).expect("builtin is well-formed")
}

/// `E(A,B′,C′) + E(A′,B,C′) + E(A′,B′,C) − E(A,B,C)`, signed.
pub fn mermin() -> CorrelatorExpression {
    CorrelatorExpression::new(
        Scenario::tripartite_binary(),
        [
            (vec![0, 1, 1], int(1)),
            (vec![1, 0, 1], int(1)),
            (vec![1, 1, 0], int(1)),
            (vec![0, 0, 0], int(-1)),
        ],
    )
    .expect("builtin is well-formed")
}
