//! Line-oriented text format for expressions.
//!
//! ```text
//! # comment
//! scenario 3 2 2
//! +5 P(A0 B0 C0 | 1 0 0)
//! -1/2 P(A1 B1 C1 | 0 0 0)
//! ```
//!
//! A document holds either `P(...)` lines or `E(A0 B1 C1)` correlator lines,
//! never both. The full-joint fixture format uses the same header with
//! `L(<digits>)` keys, one digit per (party, setting) in party-major order.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lhv::{FullJointExpansion, Strategy};
use crate::rational::{format_signed, Coeff};
use crate::scenario::{
    party_name, BellExpression, CorrelatorExpression, CorrelatorLabel, Expression, MarginalKey,
    MarginalTerm, Scenario,
};

/// Non-fatal finding attached to a successful parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Key {
    P(Vec<usize>, Vec<usize>),
    E(Vec<usize>),
    L(String),
}

impl Key {
    fn form(&self) -> &'static str {
        match self {
            Key::P(..) => "P",
            Key::E(..) => "E",
            Key::L(..) => "L",
        }
    }
}

struct Cursor {
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(src: &str, line: usize) -> Self {
        Self {
            chars: src.chars().enumerate().collect(),
            pos: 0,
            line,
        }
    }

    fn column(&self) -> usize {
        self.chars.get(self.pos).map_or(self.chars.len(), |(i, _)| *i) + 1
    }

    fn error(&self, message: impl Into<String>) -> Error {
        self.error_at(self.column(), message)
    }

    fn error_at(&self, column: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|(_, c)| *c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c == ' ' || c == '\t') {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(match self.peek() {
                Some(found) => format!("expected `{c}`, found `{found}`"),
                None => format!("expected `{c}`, found end of line"),
            }))
        }
    }

    fn digits(&mut self) -> Option<String> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.chars[start..self.pos].iter().map(|(_, c)| c).collect())
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_ws();
        let col = self.column();
        let d = self.digits().ok_or_else(|| self.error("expected a number"))?;
        d.parse()
            .map_err(|_| self.error_at(col, format!("number `{d}` too large")))
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.peek().is_none()
    }

    fn coefficient(&mut self) -> Result<Coeff> {
        self.skip_ws();
        let col = self.column();
        let negative = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        let numer = self
            .digits()
            .ok_or_else(|| self.error_at(col, "expected a coefficient such as `+5` or `-3/2`"))?;
        let denom = if self.eat('/') {
            self.digits()
                .ok_or_else(|| self.error("expected a denominator after `/`"))?
        } else {
            "1".to_string()
        };
        let numer: BigInt = numer.parse().expect("digits");
        let denom: BigInt = denom.parse().expect("digits");
        if denom.is_zero() {
            return Err(self.error_at(col, "zero denominator"));
        }
        let c = Coeff::new(numer, denom);
        Ok(if negative { -c } else { c })
    }

    /// Setting tokens `A0 B1 ...`; party letters must appear in order.
    fn settings(&mut self, scenario: &Scenario) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(c) if c.is_ascii_uppercase() => {
                    let col = self.column();
                    self.pos += 1;
                    let party = out.len();
                    let idx = self
                        .digits()
                        .ok_or_else(|| self.error("expected setting index after party letter"))?;
                    let token = format!("{c}{idx}");
                    if party >= scenario.parties() {
                        return Err(self.error_at(
                            col,
                            format!("setting `{token}` beyond the {} declared parties", scenario.parties()),
                        ));
                    }
                    if c != party_name(party) {
                        return Err(self.error_at(
                            col,
                            format!("setting `{token}`: expected party `{}` here", party_name(party)),
                        ));
                    }
                    let s: usize = idx.parse().unwrap_or(usize::MAX);
                    if s >= scenario.settings(party) {
                        return Err(self.error_at(
                            col,
                            format!(
                                "setting `{token}` out of range (party {} has {} settings)",
                                party_name(party),
                                scenario.settings(party)
                            ),
                        ));
                    }
                    out.push(s);
                }
                _ => break,
            }
        }
        if out.len() != scenario.parties() {
            return Err(self.error(format!(
                "expected {} settings, found {}",
                scenario.parties(),
                out.len()
            )));
        }
        Ok(out)
    }

    fn outcomes(&mut self, scenario: &Scenario, settings: &[usize]) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (party, &s) in settings.iter().enumerate() {
            self.skip_ws();
            let col = self.column();
            let o = self.number()?;
            if o >= scenario.outcomes(party, s) {
                return Err(self.error_at(
                    col,
                    format!(
                        "outcome `{o}` out of range for {}{} ({} outcomes)",
                        party_name(party),
                        s,
                        scenario.outcomes(party, s)
                    ),
                ));
            }
            out.push(o);
        }
        Ok(out)
    }

    fn key(&mut self, scenario: &Scenario) -> Result<Key> {
        self.skip_ws();
        let col = self.column();
        match self.peek() {
            Some('P') => {
                self.pos += 1;
                self.expect('(')?;
                let settings = self.settings(scenario)?;
                self.expect('|')?;
                let outcomes = self.outcomes(scenario, &settings)?;
                self.expect(')')?;
                Ok(Key::P(settings, outcomes))
            }
            Some('E') => {
                self.pos += 1;
                self.expect('(')?;
                let settings = self.settings(scenario)?;
                self.expect(')')?;
                Ok(Key::E(settings))
            }
            Some('L') => {
                self.pos += 1;
                self.expect('(')?;
                self.skip_ws();
                let label = self
                    .digits()
                    .ok_or_else(|| self.error("expected assignment digits"))?;
                self.expect(')')?;
                Ok(Key::L(label))
            }
            _ => Err(self.error_at(col, "expected `P(`, `E(` or `L(`")),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_header(body: &str, line: usize) -> Result<Scenario> {
    let mut c = Cursor::new(body, line);
    c.skip_ws();
    let word_col = c.column();
    let word: String = std::iter::from_fn(|| {
        c.peek().filter(|ch| ch.is_ascii_alphabetic()).inspect(|_| c.pos += 1)
    })
    .collect();
    if word != "scenario" {
        return Err(c.error_at(word_col, "expected header `scenario <parties> <settings> <outcomes>`"));
    }
    let parties = c.number()?;
    let settings = c.number()?;
    let outcomes = c.number()?;
    if !c.at_end() {
        return Err(c.error("unexpected text after scenario header"));
    }
    if parties > 26 {
        return Err(c.error_at(word_col, "at most 26 parties are supported"));
    }
    Scenario::uniform(parties, settings, outcomes).map_err(|e| c.error_at(word_col, e.to_string()))
}

struct Document {
    scenario: Scenario,
    lines: Vec<(usize, Coeff, Key)>,
}

fn parse_document(text: &str) -> Result<Document> {
    let mut scenario = None;
    let mut lines = Vec::new();
    for (i, raw) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let body = strip_comment(raw);
        if body.trim().is_empty() {
            continue;
        }
        let Some(sc) = &scenario else {
            scenario = Some(parse_header(body, line_no)?);
            continue;
        };
        let mut c = Cursor::new(body, line_no);
        let coeff = c.coefficient()?;
        let key = c.key(sc)?;
        if !c.at_end() {
            return Err(c.error("unexpected text after term"));
        }
        lines.push((line_no, coeff, key));
    }
    let scenario = scenario.ok_or(Error::Parse {
        line: 1,
        column: 1,
        message: "missing `scenario` header".into(),
    })?;
    Ok(Document { scenario, lines })
}

fn check_single_form(doc: &Document, allowed: &[&str]) -> Result<()> {
    let first = doc.lines.first().map(|(_, _, k)| k.form());
    for (line, _, key) in &doc.lines {
        if !allowed.contains(&key.form()) {
            return Err(Error::Format {
                line: *line,
                message: format!("`{}(` terms are not allowed in this document", key.form()),
            });
        }
        if Some(key.form()) != first {
            return Err(Error::Format {
                line: *line,
                message: format!(
                    "document mixes `{}(` and `{}(` terms",
                    first.unwrap_or("?"),
                    key.form()
                ),
            });
        }
    }
    Ok(())
}

fn duplicate_warnings<K: PartialEq>(keys: &[(usize, K)], describe: impl Fn(&K) -> String) -> Vec<Diagnostic> {
    let mut warnings = Vec::new();
    for (i, (line, key)) in keys.iter().enumerate() {
        if let Some((first, _)) = keys[..i].iter().find(|(_, k)| k == key) {
            warnings.push(Diagnostic {
                line: *line,
                message: format!("duplicate term {} (first at line {first}); coefficients merged", describe(key)),
            });
        }
    }
    warnings
}

/// Parses a `P(...)` or `E(...)` document.
pub fn parse_expression(text: &str) -> Result<Parsed<Expression>> {
    let doc = parse_document(text)?;
    check_single_form(&doc, &["P", "E"])?;
    let is_correlator = matches!(doc.lines.first(), Some((_, _, Key::E(_))));
    if is_correlator {
        if !doc.scenario.is_binary() {
            return Err(Error::Format {
                line: doc.lines[0].0,
                message: "correlator terms need binary outcomes".into(),
            });
        }
        let keys: Vec<(usize, Vec<usize>)> = doc
            .lines
            .iter()
            .map(|(l, _, k)| match k {
                Key::E(s) => (*l, s.clone()),
                _ => unreachable!(),
            })
            .collect();
        let warnings = duplicate_warnings(&keys, |s| CorrelatorLabel(s).to_string());
        let terms = doc
            .lines
            .into_iter()
            .zip(keys)
            .map(|((_, c, _), (_, s))| (s, c));
        let expr = CorrelatorExpression::new(doc.scenario, terms)?;
        Ok(Parsed {
            value: Expression::Correlator(expr),
            warnings,
        })
    } else {
        let keys: Vec<(usize, MarginalKey)> = doc
            .lines
            .iter()
            .map(|(l, _, k)| match k {
                Key::P(s, o) => (*l, MarginalKey::new(s.clone(), o.clone())),
                _ => unreachable!(),
            })
            .collect();
        let warnings = duplicate_warnings(&keys, |k| k.to_string());
        let terms = doc
            .lines
            .into_iter()
            .zip(keys)
            .map(|((_, c, _), (_, key))| MarginalTerm { key, coefficient: c });
        let expr = BellExpression::new(doc.scenario, terms)?;
        Ok(Parsed {
            value: Expression::Probability(expr),
            warnings,
        })
    }
}

fn header(scenario: &Scenario) -> Result<String> {
    let (p, s, o) = scenario.as_uniform().ok_or_else(|| {
        Error::UnsupportedScenario("the text format only describes uniform scenarios".into())
    })?;
    Ok(format!("scenario {p} {s} {o}\n"))
}

/// Canonical text: header, then terms sorted by (settings, outcomes).
pub fn serialize_expression(expr: &BellExpression) -> Result<String> {
    let mut out = header(expr.scenario())?;
    for (key, c) in expr.sorted_terms() {
        writeln!(out, "{} {}", format_signed(c), key).expect("string write");
    }
    Ok(out)
}

pub fn serialize_correlator(expr: &CorrelatorExpression) -> Result<String> {
    let mut out = header(expr.scenario())?;
    for (settings, c) in expr.sorted_terms() {
        writeln!(out, "{} {}", format_signed(c), CorrelatorLabel(settings)).expect("string write");
    }
    Ok(out)
}

pub fn serialize_any(expr: &Expression) -> Result<String> {
    match expr {
        Expression::Probability(e) => serialize_expression(e),
        Expression::Correlator(e) => serialize_correlator(e),
    }
}

/// Parses a full-joint document (`L(...)` lines). Duplicates merge with a warning.
pub fn parse_full_joint(text: &str) -> Result<Parsed<FullJointExpansion>> {
    let doc = parse_document(text)?;
    check_single_form(&doc, &["L"])?;
    let scenario = doc.scenario.clone();
    if scenario.outcomes_per_setting().iter().flatten().any(|&n| n > 10) {
        return Err(Error::UnsupportedScenario(
            "`L(...)` labels need at most 10 outcomes per setting".into(),
        ));
    }
    let mut keys = Vec::new();
    let mut entries = Vec::new();
    for (line, c, key) in doc.lines {
        let Key::L(label) = key else { unreachable!() };
        let strategy = Strategy::from_label(&scenario, &label).map_err(|e| Error::Format {
            line,
            message: e.to_string(),
        })?;
        keys.push((line, strategy.clone()));
        entries.push((strategy, c));
    }
    let warnings = duplicate_warnings(&keys, |s| format!("L({s})"));
    Ok(Parsed {
        value: FullJointExpansion::from_entries(scenario, entries)?,
        warnings,
    })
}

/// Nonzero entries in enumeration order.
pub fn serialize_full_joint(expansion: &FullJointExpansion) -> Result<String> {
    let mut out = header(expansion.scenario())?;
    for (s, c) in expansion.iter().filter(|(_, c)| !c.is_zero()) {
        writeln!(out, "{} L({})", format_signed(c), s).expect("string write");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{g_paper, mermin};
    use crate::rational::{frac, int};

    fn prob(text: &str) -> BellExpression {
        match parse_expression(text).unwrap().value {
            Expression::Probability(e) => e,
            other => panic!("expected probability form, got {other:?}"),
        }
    }

    #[test]
    fn single_p_term() {
        let e = prob("scenario 3 2 2\n+5 P(A0 B0 C0 | 1 0 0)\n");
        assert_eq!(e.term_count(), 1);
        assert_eq!(e.coefficient(&MarginalKey::new(vec![0, 0, 0], vec![1, 0, 0])), int(5));
    }

    #[test]
    fn single_e_term() {
        let parsed = parse_expression("scenario 3 2 2\n-1 E(A0 B0 C0)").unwrap();
        let Expression::Correlator(e) = parsed.value else { panic!() };
        assert_eq!(e.coefficient(&[0, 0, 0]), mermin().coefficient(&[0, 0, 0]));
    }

    #[test]
    fn setting_out_of_range() {
        let err = parse_expression("scenario 3 2 2\n+1 P(A2 B0 C0 | 1 0 0)\n").unwrap_err();
        match err {
            Error::Parse { line, column, message } => {
                assert_eq!(line, 2);
                assert_eq!(column, 6);
                assert!(message.contains("A2"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn outcome_out_of_range() {
        let err = parse_expression("scenario 3 2 2\n\n1 P(A0 B0 C0 | 1 2 0)").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, column: 18, .. }), "{err:?}");
    }

    #[test]
    fn mixed_forms_rejected() {
        let err = parse_expression("scenario 3 2 2\n+1 E(A0 B0 C0)\n+1 P(A0 B0 C0 | 0 0 0)\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn malformed_lines_carry_positions() {
        for (text, line) in [
            ("", 1),
            ("scenario 3 2\n", 1),
            ("scenario 3 2 2 extra\n", 1),
            ("scenario 3 2 2\n+x P(A0 B0 C0 | 0 0 0)", 2),
            ("scenario 3 2 2\n+1 Q(A0 B0 C0 | 0 0 0)", 2),
            ("scenario 3 2 2\n+1 P(A0 C0 B0 | 0 0 0)", 2),
            ("scenario 3 2 2\n+1 P(A0 B0 | 0 0)", 2),
            ("scenario 3 2 2\n+1 P(A0 B0 C0 | 0 0 0", 2),
            ("scenario 3 2 2\n+1/0 P(A0 B0 C0 | 0 0 0)", 2),
            ("scenario 3 2 2\n+1 P(A0 B0 C0 | 0 0 0) trailing", 2),
        ] {
            match parse_expression(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn comments_crlf_and_fractions() {
        let e = prob("# header comment\r\nscenario 3 2 2 # tripartite\r\n\r\n  -6/4 P(A1 B1 C1|0 0 0) # frac\r\n");
        assert_eq!(e.coefficient(&MarginalKey::new(vec![1, 1, 1], vec![0, 0, 0])), frac(-3, 2));
    }

    #[test]
    fn duplicates_warn() {
        let parsed = parse_expression(
            "scenario 3 2 2\n+1 P(A0 B0 C0 | 1 1 1)\n+2 P(A0 B0 C0 | 1 1 1)\n",
        )
        .unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        assert_eq!(parsed.warnings[0].line, 3);
        let Expression::Probability(e) = parsed.value else { panic!() };
        assert_eq!(e.coefficient(&MarginalKey::new(vec![0, 0, 0], vec![1, 1, 1])), int(3));
    }

    #[test]
    fn serialize_empty_and_lowest_terms() {
        let s = Scenario::tripartite_binary();
        assert_eq!(serialize_expression(&BellExpression::empty(s.clone())).unwrap(), "scenario 3 2 2\n");
        let e = BellExpression::new(s, [MarginalTerm::new(frac(6, 4), vec![0, 1, 0], vec![1, 0, 1])]).unwrap();
        assert_eq!(
            serialize_expression(&e).unwrap(),
            "scenario 3 2 2\n+3/2 P(A0 B1 C0 | 1 0 1)\n"
        );
    }

    #[test]
    fn g_paper_round_trip() {
        let g = g_paper();
        let text = serialize_expression(&g).unwrap();
        assert_eq!(text.lines().count(), 21);
        let lines: Vec<&str> = text.lines().skip(1).collect();
        let mut sorted = lines.clone();
        sorted.sort_by_key(|l| {
            let e = prob(&format!("scenario 3 2 2\n{l}"));
            let key = e.terms().next().map(|(k, _)| k.clone()).unwrap();
            key
        });
        assert_eq!(lines, sorted);
        assert_eq!(prob(&text), g);
    }

    #[test]
    fn correlator_round_trip() {
        let m = mermin();
        let text = serialize_correlator(&m).unwrap();
        let Expression::Correlator(back) = parse_expression(&text).unwrap().value else { panic!() };
        assert_eq!(back, m);
    }

    #[test]
    fn non_uniform_has_no_header() {
        let s = Scenario::new(vec![vec![2, 3]]).unwrap();
        assert!(serialize_expression(&BellExpression::empty(s)).is_err());
    }

    #[test]
    fn full_joint_round_trip() {
        let e = crate::lhv::expand_full_joint(&g_paper()).unwrap();
        let text = serialize_full_joint(&e).unwrap();
        assert_eq!(parse_full_joint(&text).unwrap().value, e);
        assert!(parse_full_joint("scenario 3 2 2\n+1 P(A0 B0 C0 | 0 0 0)").is_err());
        assert!(matches!(
            parse_full_joint("scenario 3 2 2\n+1 L(0000)"),
            Err(Error::Format { line: 2, .. })
        ));
    }
}
