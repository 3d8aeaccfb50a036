//! Measurement scenarios and Bell expressions.
//!
//! Setting index 0 is the unprimed measurement (A, B, C) and index 1 the
//! primed one (A′, B′, C′). Outcome labels are the raw labels `0, 1, ...`;
//! the ±1 eigenvalue map only exists in [`crate::quantum`].

use std::fmt;

use indexmap::IndexMap;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_signed, Coeff};

/// Party/setting/outcome cardinalities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    /// `outcomes[party][setting]` is the number of outcomes of that measurement.
    outcomes: Vec<Vec<usize>>,
}

impl Scenario {
    pub fn new(outcomes_per_setting: Vec<Vec<usize>>) -> Result<Self> {
        if outcomes_per_setting.is_empty() {
            return Err(Error::InvalidScenario("at least one party is required".into()));
        }
        for (party, settings) in outcomes_per_setting.iter().enumerate() {
            if settings.is_empty() {
                return Err(Error::InvalidScenario(format!(
                    "party {} has no settings",
                    party_name(party)
                )));
            }
            if let Some(setting) = settings.iter().position(|&n| n < 2) {
                return Err(Error::InvalidScenario(format!(
                    "setting {}{} needs at least 2 outcomes",
                    party_name(party),
                    setting
                )));
            }
        }
        Ok(Self {
            outcomes: outcomes_per_setting,
        })
    }

    /// Same number of settings and outcomes everywhere.
    pub fn uniform(parties: usize, settings: usize, outcomes: usize) -> Result<Self> {
        Self::new(vec![vec![outcomes; settings]; parties])
    }

    /// Three parties, two settings each, binary outcomes.
    pub fn tripartite_binary() -> Self {
        Self::uniform(3, 2, 2).expect("valid scenario")
    }

    pub fn parties(&self) -> usize {
        self.outcomes.len()
    }

    pub fn settings(&self, party: usize) -> usize {
        self.outcomes[party].len()
    }

    pub fn outcomes(&self, party: usize, setting: usize) -> usize {
        self.outcomes[party][setting]
    }

    pub fn outcomes_per_setting(&self) -> &[Vec<usize>] {
        &self.outcomes
    }

    pub fn is_binary(&self) -> bool {
        self.outcomes.iter().flatten().all(|&n| n == 2)
    }

    /// `(parties, settings, outcomes)` when every party shares the same counts.
    pub fn as_uniform(&self) -> Option<(usize, usize, usize)> {
        let settings = self.outcomes[0].len();
        let outcomes = self.outcomes[0][0];
        let uniform = self
            .outcomes
            .iter()
            .all(|s| s.len() == settings && s.iter().all(|&n| n == outcomes));
        uniform.then_some((self.parties(), settings, outcomes))
    }

    /// Number of joint outcome cells for one choice of settings, when it does
    /// not depend on that choice (product of per-party outcome counts).
    pub fn outcome_cells(&self, settings: &[usize]) -> usize {
        settings
            .iter()
            .enumerate()
            .map(|(party, &s)| self.outcomes[party][s])
            .product()
    }

    pub(crate) fn check_settings(&self, settings: &[usize]) -> std::result::Result<(), String> {
        if settings.len() != self.parties() {
            return Err(format!(
                "expected {} settings, got {}",
                self.parties(),
                settings.len()
            ));
        }
        for (party, &s) in settings.iter().enumerate() {
            if s >= self.settings(party) {
                return Err(format!(
                    "setting {}{} not in scenario ({} settings)",
                    party_name(party),
                    s,
                    self.settings(party)
                ));
            }
        }
        Ok(())
    }

    pub(crate) fn check_key(&self, key: &MarginalKey) -> std::result::Result<(), String> {
        self.check_settings(&key.settings)?;
        if key.outcomes.len() != self.parties() {
            return Err(format!(
                "expected {} outcomes, got {}",
                self.parties(),
                key.outcomes.len()
            ));
        }
        for (party, (&s, &o)) in key.settings.iter().zip(&key.outcomes).enumerate() {
            if o >= self.outcomes(party, s) {
                return Err(format!(
                    "outcome {} of {}{} not in range 0..{}",
                    o,
                    party_name(party),
                    s,
                    self.outcomes(party, s)
                ));
            }
        }
        Ok(())
    }
}

/// `A`, `B`, `C`, ... for party indices.
pub fn party_name(party: usize) -> char {
    char::from(b'A' + (party % 26) as u8)
}

/// One joint probability `P(settings | outcomes)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarginalKey {
    pub settings: Vec<usize>,
    pub outcomes: Vec<usize>,
}

impl MarginalKey {
    pub fn new(settings: Vec<usize>, outcomes: Vec<usize>) -> Self {
        Self { settings, outcomes }
    }
}

impl fmt::Display for MarginalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("P(")?;
        write_settings(f, &self.settings)?;
        f.write_str(" |")?;
        for o in &self.outcomes {
            write!(f, " {o}")?;
        }
        f.write_str(")")
    }
}

fn write_settings(f: &mut fmt::Formatter<'_>, settings: &[usize]) -> fmt::Result {
    for (party, s) in settings.iter().enumerate() {
        if party > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{}{}", party_name(party), s)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTerm {
    pub key: MarginalKey,
    pub coefficient: Coeff,
}

impl MarginalTerm {
    pub fn new(coefficient: Coeff, settings: Vec<usize>, outcomes: Vec<usize>) -> Self {
        Self {
            key: MarginalKey::new(settings, outcomes),
            coefficient,
        }
    }
}

/// Linear combination of joint probabilities with exact coefficients.
///
/// Terms keep the order in which their keys first appeared (used for per-term
/// breakdowns); equality ignores that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BellExpression {
    scenario: Scenario,
    terms: IndexMap<MarginalKey, Coeff>,
}

impl BellExpression {
    pub fn empty(scenario: Scenario) -> Self {
        Self {
            scenario,
            terms: IndexMap::new(),
        }
    }

    /// Builds an expression, merging duplicate keys by addition and dropping
    /// zero coefficients.
    pub fn new(scenario: Scenario, terms: impl IntoIterator<Item = MarginalTerm>) -> Result<Self> {
        let mut expr = Self::empty(scenario);
        for term in terms {
            expr.scenario
                .check_key(&term.key)
                .map_err(|detail| Error::IndexOutOfRange {
                    term: format!("{} {}", format_signed(&term.coefficient), term.key),
                    detail,
                })?;
            expr.accumulate(term.key, term.coefficient);
        }
        Ok(expr)
    }

    fn accumulate(&mut self, key: MarginalKey, coefficient: Coeff) {
        let sum = self.coefficient(&key) + coefficient;
        if sum.is_zero() {
            self.terms.shift_remove(&key);
        } else {
            self.terms.insert(key, sum);
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MarginalKey, &Coeff)> {
        self.terms.iter()
    }

    /// Terms sorted by (settings, outcomes).
    pub fn sorted_terms(&self) -> Vec<(&MarginalKey, &Coeff)> {
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| a.0.cmp(b.0));
        terms
    }

    pub fn coefficient(&self, key: &MarginalKey) -> Coeff {
        self.terms.get(key).cloned().unwrap_or_else(Coeff::zero)
    }

    /// Number of stored (merged, nonzero) terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exact sum of all coefficients.
    pub fn coefficient_sum(&self) -> Coeff {
        self.terms.values().fold(Coeff::zero(), |acc, c| acc + c)
    }

    /// Counts of positive and negative coefficients.
    pub fn sign_counts(&self) -> (usize, usize) {
        let positive = self.terms.values().filter(|c| **c > Coeff::zero()).count();
        (positive, self.terms.len() - positive)
    }

    pub fn scaled(&self, factor: &Coeff) -> Self {
        let mut out = Self::empty(self.scenario.clone());
        for (key, c) in &self.terms {
            out.accumulate(key.clone(), c * factor);
        }
        out
    }

    pub fn negated(&self) -> Self {
        self.scaled(&-Coeff::one())
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: &Coeff) -> Result<Self> {
        if self.scenario != other.scenario {
            return Err(Error::ScenarioMismatch(
                "cannot add expressions over different scenarios".into(),
            ));
        }
        let mut out = self.clone();
        for (key, c) in &other.terms {
            out.accumulate(key.clone(), c * factor);
        }
        Ok(out)
    }
}

/// Linear combination of correlators `E(settings)` over a binary scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelatorExpression {
    scenario: Scenario,
    terms: IndexMap<Vec<usize>, Coeff>,
}

impl CorrelatorExpression {
    pub fn new(
        scenario: Scenario,
        terms: impl IntoIterator<Item = (Vec<usize>, Coeff)>,
    ) -> Result<Self> {
        if !scenario.is_binary() {
            return Err(Error::UnsupportedScenario(
                "correlator expressions need binary outcomes".into(),
            ));
        }
        let mut map: IndexMap<Vec<usize>, Coeff> = IndexMap::new();
        for (settings, c) in terms {
            scenario
                .check_settings(&settings)
                .map_err(|detail| Error::IndexOutOfRange {
                    term: format!("{} {}", format_signed(&c), CorrelatorLabel(&settings)),
                    detail,
                })?;
            *map.entry(settings).or_insert_with(Coeff::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Self {
            scenario,
            terms: map,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Coeff)> {
        self.terms.iter()
    }

    pub fn sorted_terms(&self) -> Vec<(&Vec<usize>, &Coeff)> {
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| a.0.cmp(b.0));
        terms
    }

    pub fn coefficient(&self, settings: &[usize]) -> Coeff {
        self.terms.get(settings).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Expands each `c·E(s)` into `c·(−1)^z·P(s|o)` over all outcome vectors,
    /// `z` being the number of zeros in `o`.
    pub fn to_probability(&self) -> BellExpression {
        let parties = self.scenario.parties();
        let mut terms = Vec::with_capacity(self.terms.len() << parties);
        for (settings, c) in &self.terms {
            for bits in 0..(1usize << parties) {
                let outcomes: Vec<usize> =
                    (0..parties).map(|p| (bits >> (parties - 1 - p)) & 1).collect();
                let zeros = outcomes.iter().filter(|&&o| o == 0).count();
                let coefficient = if zeros % 2 == 0 { c.clone() } else { -c.clone() };
                terms.push(MarginalTerm::new(coefficient, settings.clone(), outcomes));
            }
        }
        BellExpression::new(self.scenario.clone(), terms).expect("keys validated at construction")
    }
}

/// Display helper for `E(A0 B1 C1)`.
pub struct CorrelatorLabel<'a>(pub &'a [usize]);

impl fmt::Display for CorrelatorLabel<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("E(")?;
        write_settings(f, self.0)?;
        f.write_str(")")
    }
}

/// Either form of expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expression {
    Probability(BellExpression),
    Correlator(CorrelatorExpression),
}

impl Expression {
    pub fn scenario(&self) -> &Scenario {
        match self {
            Expression::Probability(e) => e.scenario(),
            Expression::Correlator(e) => e.scenario(),
        }
    }

    /// Probability form; correlators are converted.
    pub fn to_probability(&self) -> BellExpression {
        match self {
            Expression::Probability(e) => e.clone(),
            Expression::Correlator(e) => e.to_probability(),
        }
    }
}

impl From<BellExpression> for Expression {
    fn from(e: BellExpression) -> Self {
        Expression::Probability(e)
    }
}

impl From<CorrelatorExpression> for Expression {
    fn from(e: CorrelatorExpression) -> Self {
        Expression::Correlator(e)
    }
}
