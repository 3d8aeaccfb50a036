//! Deterministic local strategies and exact local bounds.
//!
//! A local hidden-variable model is a probability distribution over complete
//! outcome assignments (one outcome for every setting of every party). The
//! deterministic assignments are the vertices of that simplex, so the extrema
//! of any linear expression over local models are attained on them.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rational::Coeff;
use crate::scenario::{BellExpression, MarginalKey, Scenario};

pub const DEFAULT_STRATEGY_CAP: u128 = 10_000_000;

/// One outcome for every (party, setting).
///
/// Ordering is lexicographic by party, then setting, which is also the
/// enumeration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Strategy {
    outcomes: Vec<Vec<usize>>,
}

impl Strategy {
    pub fn new(scenario: &Scenario, outcomes: Vec<Vec<usize>>) -> Result<Self> {
        let ok = outcomes.len() == scenario.parties()
            && outcomes.iter().enumerate().all(|(p, row)| {
                row.len() == scenario.settings(p)
                    && row
                        .iter()
                        .enumerate()
                        .all(|(s, &o)| o < scenario.outcomes(p, s))
            });
        if !ok {
            return Err(Error::IndexOutOfRange {
                term: format!("{outcomes:?}"),
                detail: "strategy does not fit the scenario".into(),
            });
        }
        Ok(Self { outcomes })
    }

    /// Parses the compact label `aa'bb'cc'` (one digit per setting).
    pub fn from_label(scenario: &Scenario, label: &str) -> Result<Self> {
        let digits: Vec<usize> = label
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as usize))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::IndexOutOfRange {
                term: label.into(),
                detail: "assignment labels are decimal digits".into(),
            })?;
        let total: usize = (0..scenario.parties()).map(|p| scenario.settings(p)).sum();
        if digits.len() != total {
            return Err(Error::IndexOutOfRange {
                term: label.into(),
                detail: format!("expected {total} digits, got {}", digits.len()),
            });
        }
        let mut rest = digits.as_slice();
        let mut outcomes = Vec::with_capacity(scenario.parties());
        for p in 0..scenario.parties() {
            let (head, tail) = rest.split_at(scenario.settings(p));
            outcomes.push(head.to_vec());
            rest = tail;
        }
        Self::new(scenario, outcomes).map_err(|_| Error::IndexOutOfRange {
            term: label.into(),
            detail: "outcome out of range".into(),
        })
    }

    pub fn outcome(&self, party: usize, setting: usize) -> usize {
        self.outcomes[party][setting]
    }

    pub fn outcomes(&self) -> &[Vec<usize>] {
        &self.outcomes
    }

    /// Whether this assignment produces the key's outcomes at the key's settings.
    pub fn matches(&self, key: &MarginalKey) -> bool {
        key.settings
            .iter()
            .zip(&key.outcomes)
            .enumerate()
            .all(|(p, (&s, &o))| self.outcomes[p][s] == o)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in self.outcomes.iter().flatten() {
            if *o < 10 {
                write!(f, "{o}")?;
            } else {
                write!(f, "[{o}]")?;
            }
        }
        Ok(())
    }
}

/// Number of deterministic strategies, saturating.
pub fn strategy_count(scenario: &Scenario) -> u128 {
    scenario
        .outcomes_per_setting()
        .iter()
        .flatten()
        .fold(1u128, |acc, &n| acc.saturating_mul(n as u128))
}

fn radices(scenario: &Scenario) -> Vec<usize> {
    scenario.outcomes_per_setting().iter().flatten().copied().collect()
}

fn decode(scenario: &Scenario, radices: &[usize], mut index: usize) -> Strategy {
    let mut flat = vec![0; radices.len()];
    for (slot, &r) in flat.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
    let mut rest = flat.as_slice();
    let outcomes = (0..scenario.parties())
        .map(|p| {
            let (head, tail) = rest.split_at(scenario.settings(p));
            rest = tail;
            head.to_vec()
        })
        .collect();
    Strategy { outcomes }
}

pub fn enumerate_strategies(scenario: &Scenario) -> Result<Vec<Strategy>> {
    enumerate_strategies_capped(scenario, DEFAULT_STRATEGY_CAP)
}

/// All deterministic strategies in lexicographic order (party, then setting;
/// the last setting of the last party varies fastest).
pub fn enumerate_strategies_capped(scenario: &Scenario, cap: u128) -> Result<Vec<Strategy>> {
    let count = strategy_count(scenario);
    if count > cap {
        return Err(Error::TooManyStrategies { count, cap });
    }
    let radices = radices(scenario);
    Ok((0..count as usize)
        .map(|i| decode(scenario, &radices, i))
        .collect())
}

/// Expression value when every measurement outcome is fixed by `strategy`.
pub fn evaluate_on_strategy(expr: &BellExpression, strategy: &Strategy) -> Result<Coeff> {
    Strategy::new(expr.scenario(), strategy.outcomes.clone())
        .map_err(|_| Error::ScenarioMismatch("strategy does not fit the expression's scenario".into()))?;
    Ok(value_unchecked(expr, strategy))
}

fn value_unchecked(expr: &BellExpression, strategy: &Strategy) -> Coeff {
    expr.terms()
        .filter(|(key, _)| strategy.matches(key))
        .fold(Coeff::zero(), |acc, (_, c)| acc + c)
}

/// Every complete assignment compatible with a marginal key: the key fixes
/// the outcome of its measured settings, the others range freely.
pub fn completions(scenario: &Scenario, key: &MarginalKey) -> Result<Vec<Strategy>> {
    scenario.check_key(key).map_err(|detail| Error::IndexOutOfRange {
        term: key.to_string(),
        detail,
    })?;
    let mut partial: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for p in 0..scenario.parties() {
        let mut next = Vec::new();
        for prefix in &partial {
            let mut rows: Vec<Vec<usize>> = vec![Vec::new()];
            for s in 0..scenario.settings(p) {
                let choices: Vec<usize> = if s == key.settings[p] {
                    vec![key.outcomes[p]]
                } else {
                    (0..scenario.outcomes(p, s)).collect()
                };
                rows = rows
                    .iter()
                    .flat_map(|row| {
                        choices.iter().map(move |&o| {
                            let mut r = row.clone();
                            r.push(o);
                            r
                        })
                    })
                    .collect();
            }
            for row in rows {
                let mut v = prefix.clone();
                v.push(row);
                next.push(v);
            }
        }
        partial = next;
    }
    let mut out: Vec<Strategy> = partial.into_iter().map(|outcomes| Strategy { outcomes }).collect();
    out.sort();
    Ok(out)
}

/// Coefficients of an expression in the basis of complete assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullJointExpansion {
    scenario: Scenario,
    coefficients: BTreeMap<Strategy, Coeff>,
}

impl FullJointExpansion {
    /// Dense expansion over every assignment; entries not listed are zero.
    pub fn from_entries(
        scenario: Scenario,
        entries: impl IntoIterator<Item = (Strategy, Coeff)>,
    ) -> Result<Self> {
        let mut coefficients: BTreeMap<Strategy, Coeff> = enumerate_strategies(&scenario)?
            .into_iter()
            .map(|s| (s, Coeff::zero()))
            .collect();
        for (s, c) in entries {
            match coefficients.get_mut(&s) {
                Some(slot) => *slot += c,
                None => {
                    return Err(Error::ScenarioMismatch(format!(
                        "assignment {s} does not fit the scenario"
                    )))
                }
            }
        }
        Ok(Self {
            scenario,
            coefficients,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn coefficient(&self, strategy: &Strategy) -> Coeff {
        self.coefficients
            .get(strategy)
            .cloned()
            .unwrap_or_else(Coeff::zero)
    }

    /// All assignments in enumeration order, zeros included.
    pub fn iter(&self) -> impl Iterator<Item = (&Strategy, &Coeff)> {
        self.coefficients.iter()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn sum(&self) -> Coeff {
        self.coefficients.values().fold(Coeff::zero(), |a, c| a + c)
    }

    pub fn max(&self) -> Coeff {
        self.coefficients.values().max().cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn min(&self) -> Coeff {
        self.coefficients.values().min().cloned().unwrap_or_else(Coeff::zero)
    }
}

/// Distributes each marginal coefficient over all completions of the
/// settings the term does not measure.
pub fn expand_full_joint(expr: &BellExpression) -> Result<FullJointExpansion> {
    let mut entries = Vec::new();
    for (key, c) in expr.terms() {
        for s in completions(expr.scenario(), key)? {
            entries.push((s, c.clone()));
        }
    }
    FullJointExpansion::from_entries(expr.scenario().clone(), entries)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalBoundResult {
    pub max: Coeff,
    pub min: Coeff,
    /// All strategies attaining `max`, in enumeration order.
    pub maximizers: Vec<Strategy>,
    pub minimizers: Vec<Strategy>,
}

impl LocalBoundResult {
    /// `max(|min|, |max|)`, the local bound of the absolute value.
    pub fn magnitude(&self) -> Coeff {
        let lo = -self.min.clone();
        if lo > self.max {
            lo
        } else {
            self.max.clone()
        }
    }
}

/// Exact extrema over all deterministic strategies.
pub fn local_bounds(expr: &BellExpression) -> Result<LocalBoundResult> {
    let strategies = enumerate_strategies(expr.scenario())?;
    let values: Vec<Coeff> = strategies
        .par_iter()
        .map(|s| value_unchecked(expr, s))
        .collect();
    let max = values.iter().max().cloned().expect("at least one strategy");
    let min = values.iter().min().cloned().expect("at least one strategy");
    let pick = |target: &Coeff| {
        strategies
            .iter()
            .zip(&values)
            .filter(|(_, v)| *v == target)
            .map(|(s, _)| s.clone())
            .collect()
    };
    Ok(LocalBoundResult {
        maximizers: pick(&max),
        minimizers: pick(&min),
        max,
        min,
    })
}

/// `(lower, upper)` = (smallest, largest) full-joint coefficient.
pub fn trivial_bounds(expr: &BellExpression) -> Result<(Coeff, Coeff)> {
    let expansion = expand_full_joint(expr)?;
    Ok((expansion.min(), expansion.max()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffEntry {
    pub assignment: Strategy,
    pub computed: Coeff,
    pub fixture: Coeff,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffReport {
    pub entries: Vec<DiffEntry>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Every assignment where the two expansions disagree.
pub fn diff_expansion(
    computed: &FullJointExpansion,
    fixture: &FullJointExpansion,
) -> Result<DiffReport> {
    if computed.scenario != fixture.scenario {
        return Err(Error::ScenarioMismatch(
            "expansions are over different scenarios".into(),
        ));
    }
    let entries = computed
        .iter()
        .filter_map(|(s, c)| {
            let f = fixture.coefficient(s);
            (*c != f).then(|| DiffEntry {
                assignment: s.clone(),
                computed: c.clone(),
                fixture: f,
            })
        })
        .collect();
    Ok(DiffReport { entries })
}

/// A local model: a distribution over deterministic strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    scenario: Scenario,
    weights: BTreeMap<Strategy, Coeff>,
}

impl LocalModel {
    /// Weights must be nonnegative and sum to one.
    pub fn new(scenario: Scenario, weights: impl IntoIterator<Item = (Strategy, Coeff)>) -> Result<Self> {
        let mut map: BTreeMap<Strategy, Coeff> = BTreeMap::new();
        for (s, w) in weights {
            if w < Coeff::zero() {
                return Err(Error::InvalidState(format!("negative weight on {s}")));
            }
            Strategy::new(&scenario, s.outcomes.clone())?;
            *map.entry(s).or_insert_with(Coeff::zero) += w;
        }
        let total = map.values().fold(Coeff::zero(), |a, w| a + w);
        if total != Coeff::one() {
            return Err(Error::InvalidState(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            scenario,
            weights: map,
        })
    }

    /// Marginal probability of a key: total weight of assignments matching it.
    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn marginal(&self, key: &MarginalKey) -> Coeff {
        self.weights
            .iter()
            .filter(|(s, _)| s.matches(key))
            .fold(Coeff::zero(), |a, (_, w)| a + w)
    }

    pub fn value(&self, expr: &BellExpression) -> Result<Coeff> {
        if expr.scenario() != &self.scenario {
            return Err(Error::ScenarioMismatch("model and expression differ".into()));
        }
        Ok(expr
            .terms()
            .fold(Coeff::zero(), |a, (k, c)| a + c * self.marginal(k)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{g_paper, mermin};
    use crate::rational::int;
    use crate::scenario::MarginalTerm;

    fn s3() -> Scenario {
        Scenario::tripartite_binary()
    }

    #[test]
    fn counts() {
        assert_eq!(enumerate_strategies(&s3()).unwrap().len(), 64);
        assert_eq!(enumerate_strategies(&Scenario::uniform(1, 1, 2).unwrap()).unwrap().len(), 2);
        assert_eq!(enumerate_strategies(&Scenario::uniform(2, 2, 2).unwrap()).unwrap().len(), 16);
    }

    #[test]
    fn enumeration_order() {
        let all = enumerate_strategies(&s3()).unwrap();
        assert_eq!(all[0].to_string(), "000000");
        assert_eq!(all[1].to_string(), "000001");
        assert_eq!(all[63].to_string(), "111111");
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cap_exceeded() {
        let big = Scenario::uniform(10, 4, 3).unwrap();
        match enumerate_strategies(&big) {
            Err(Error::TooManyStrategies { count, cap }) => {
                assert_eq!(count, 3u128.pow(40));
                assert_eq!(cap, DEFAULT_STRATEGY_CAP);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(enumerate_strategies_capped(&s3(), 63).is_err());
    }

    #[test]
    fn g_paper_on_strategies() {
        let g = g_paper();
        let at = |l: &str| evaluate_on_strategy(&g, &Strategy::from_label(&s3(), l).unwrap()).unwrap();
        assert_eq!(at("000000"), int(1));
        assert_eq!(at("010000"), int(-4));
    }

    #[test]
    fn mermin_all_zero() {
        let m = mermin().to_probability();
        let s = Strategy::from_label(&s3(), "000000").unwrap();
        assert_eq!(evaluate_on_strategy(&m, &s).unwrap(), int(-2));
    }

    #[test]
    fn bounds() {
        let b = local_bounds(&g_paper()).unwrap();
        assert_eq!((b.max.clone(), b.min.clone()), (int(1), int(-4)));
        assert_eq!(b.maximizers.len(), 32);
        let m = local_bounds(&mermin().to_probability()).unwrap();
        assert_eq!((m.max.clone(), m.min.clone()), (int(2), int(-2)));
        assert_eq!(m.magnitude(), int(2));
    }

    #[test]
    fn trivial_examples() {
        assert_eq!(trivial_bounds(&g_paper()).unwrap(), (int(-4), int(1)));
        assert_eq!(
            trivial_bounds(&BellExpression::empty(s3())).unwrap(),
            (int(0), int(0))
        );
        let single = BellExpression::new(s3(), [MarginalTerm::new(int(5), vec![0, 0, 0], vec![1, 0, 0])]).unwrap();
        assert_eq!(trivial_bounds(&single).unwrap(), (int(0), int(5)));
    }

    #[test]
    fn completions_of_a_key() {
        let key = MarginalKey::new(vec![0, 1, 1], vec![0, 0, 1]);
        let labels: Vec<String> = completions(&s3(), &key).unwrap().iter().map(|s| s.to_string()).collect();
        assert_eq!(
            labels,
            ["000001", "000011", "001001", "001011", "010001", "010011", "011001", "011011"]
        );
    }

    #[test]
    fn diff_self_and_perturbed() {
        let e = expand_full_joint(&g_paper()).unwrap();
        assert!(diff_expansion(&e, &e).unwrap().is_empty());
        let target = Strategy::from_label(&s3(), "101010").unwrap();
        let perturbed = FullJointExpansion::from_entries(
            s3(),
            e.iter().map(|(s, c)| {
                let c = if *s == target { c + int(1) } else { c.clone() };
                (s.clone(), c)
            }),
        )
        .unwrap();
        let d = diff_expansion(&e, &perturbed).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.entries[0].assignment, target);
    }

    #[test]
    fn diff_scenario_mismatch() {
        let a = expand_full_joint(&BellExpression::empty(s3())).unwrap();
        let b = expand_full_joint(&BellExpression::empty(Scenario::uniform(2, 2, 2).unwrap())).unwrap();
        assert!(matches!(diff_expansion(&a, &b), Err(Error::ScenarioMismatch(_))));
    }

    #[test]
    fn strategy_scenario_mismatch() {
        let s = Strategy::from_label(&Scenario::uniform(2, 2, 2).unwrap(), "0000").unwrap();
        assert!(evaluate_on_strategy(&g_paper(), &s).is_err());
    }
}
