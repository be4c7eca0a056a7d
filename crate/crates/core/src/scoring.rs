//! Answer scoring and aggregation.
//!
//! A `Yes` answer signals adherence and scores `-weight`; `No` and
//! `DontKnow` score `+weight`; `NotApplicable` scores 0. Totals are exact
//! integers. The only non-integer quantity is [`DebtIndex`], kept as a
//! reduced fraction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::bank::{DebtType, QuestionBank, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerValue {
    Yes,
    No,
    NotApplicable,
    DontKnow,
}

impl AnswerValue {
    pub const ALL: [AnswerValue; 4] = [
        AnswerValue::Yes,
        AnswerValue::No,
        AnswerValue::NotApplicable,
        AnswerValue::DontKnow,
    ];

    pub fn key(self) -> &'static str {
        match self {
            AnswerValue::Yes => "yes",
            AnswerValue::No => "no",
            AnswerValue::NotApplicable => "not_applicable",
            AnswerValue::DontKnow => "dont_know",
        }
    }

    /// Wording used in the tabular report layout.
    pub fn label(self) -> &'static str {
        match self {
            AnswerValue::Yes => "YES",
            AnswerValue::No => "NO",
            AnswerValue::NotApplicable => "Not Applicable",
            AnswerValue::DontKnow => "I Don't Know/I Don't Answer",
        }
    }

    /// Single-letter answer codes: Y, N, A (not applicable), D (don't know).
    pub fn from_code(code: &str) -> Option<Self> {
        match code.trim().to_ascii_uppercase().as_str() {
            "Y" => Some(AnswerValue::Yes),
            "N" => Some(AnswerValue::No),
            "A" => Some(AnswerValue::NotApplicable),
            "D" => Some(AnswerValue::DontKnow),
            _ => None,
        }
    }
}

impl fmt::Display for AnswerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for AnswerValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnswerValue::ALL
            .into_iter()
            .find(|a| a.key() == s)
            .ok_or_else(|| format!("unknown answer `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub question_id: u32,
    pub answer: AnswerValue,
    pub answered_at: DateTime<Utc>,
}

impl Response {
    pub fn new(question_id: u32, answer: AnswerValue) -> Self {
        Response {
            question_id,
            answer,
            answered_at: Utc::now(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeScorecard {
    pub debt_type: DebtType,
    pub raw_total: i64,
    pub answered_count: u32,
    /// Sum of weights over answered questions, `NotApplicable` excluded.
    pub scoreable_weight: u32,
    /// Sum of weights over every applicable question of this type.
    pub max_weight: u32,
}

impl TypeScorecard {
    pub fn empty(debt_type: DebtType) -> Self {
        TypeScorecard {
            debt_type,
            raw_total: 0,
            answered_count: 0,
            scoreable_weight: 0,
            max_weight: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ZeroDebt,
    DebtPresent,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::ZeroDebt => "Zero debt",
            Verdict::DebtPresent => "Debt present",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoringError {
    #[error("weight {0} outside 1-5")]
    InvalidWeight(i64),
    #[error("question {0} is not in the bank")]
    UnknownQuestion(u32),
    #[error("question {question_id} is not applicable to role {role}")]
    NotApplicable { question_id: u32, role: Role },
    #[error("more than one response for question {0}")]
    DuplicateResponse(u32),
    #[error("more than one scorecard for debt type {0}")]
    DuplicateType(DebtType),
    #[error("raw total {raw_total} exceeds scoreable weight {scoreable_weight}")]
    Inconsistent {
        raw_total: i64,
        scoreable_weight: u64,
    },
}

pub fn score_answer(weight: u8, answer: AnswerValue) -> Result<i64, ScoringError> {
    if !(1..=5).contains(&weight) {
        return Err(ScoringError::InvalidWeight(i64::from(weight)));
    }
    let w = i64::from(weight);
    Ok(match answer {
        AnswerValue::Yes => -w,
        AnswerValue::No | AnswerValue::DontKnow => w,
        AnswerValue::NotApplicable => 0,
    })
}

/// Scores a response set into one scorecard per debt type, in
/// [`DebtType::ALL`] order. With `role` set, `max_weight` covers only the
/// questions routed to that role and responses outside it are rejected.
pub fn score_session<'a, I>(
    bank: &QuestionBank,
    role: Option<Role>,
    responses: I,
) -> Result<Vec<TypeScorecard>, ScoringError>
where
    I: IntoIterator<Item = &'a Response>,
{
    let mut cards: BTreeMap<DebtType, TypeScorecard> = DebtType::ALL
        .iter()
        .map(|t| (*t, TypeScorecard::empty(*t)))
        .collect();
    for q in bank.questions() {
        if role.is_none_or(|r| q.applies_to(r)) {
            cards
                .get_mut(&q.debt_type)
                .expect("all types present")
                .max_weight += u32::from(q.weight);
        }
    }

    let mut seen = BTreeSet::new();
    for response in responses {
        let question = bank
            .question(response.question_id)
            .ok_or(ScoringError::UnknownQuestion(response.question_id))?;
        if let Some(r) = role {
            if !question.applies_to(r) {
                return Err(ScoringError::NotApplicable {
                    question_id: question.id,
                    role: r,
                });
            }
        }
        if !seen.insert(question.id) {
            return Err(ScoringError::DuplicateResponse(question.id));
        }
        let card = cards
            .get_mut(&question.debt_type)
            .expect("all types present");
        card.raw_total += score_answer(question.weight, response.answer)?;
        card.answered_count += 1;
        if response.answer != AnswerValue::NotApplicable {
            card.scoreable_weight += u32::from(question.weight);
        }
    }

    Ok(cards.into_values().collect())
}

/// Scorecard for a single debt type.
pub fn type_total<'a, I>(
    bank: &QuestionBank,
    role: Option<Role>,
    responses: I,
    debt_type: DebtType,
) -> Result<TypeScorecard, ScoringError>
where
    I: IntoIterator<Item = &'a Response>,
{
    Ok(score_session(bank, role, responses)?
        .into_iter()
        .find(|c| c.debt_type == debt_type)
        .expect("every type has a scorecard"))
}

pub fn grand_total(scorecards: &[TypeScorecard]) -> Result<i64, ScoringError> {
    let mut seen = BTreeSet::new();
    let mut total = 0;
    for card in scorecards {
        if !seen.insert(card.debt_type) {
            return Err(ScoringError::DuplicateType(card.debt_type));
        }
        total += card.raw_total;
    }
    Ok(total)
}

/// A total at or below zero means no net debt.
pub fn verdict(total: i64) -> Verdict {
    if total <= 0 {
        Verdict::ZeroDebt
    } else {
        Verdict::DebtPresent
    }
}

/// Raw total rescaled onto `[0, 1]`: 0 when every scoreable answer is `Yes`,
/// 1 when every scoreable answer is `No` or `DontKnow`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DebtIndex {
    /// No scoreable weight, e.g. every answer was `NotApplicable`.
    Undefined,
    /// Reduced fraction `numerator / denominator`.
    Defined { numerator: u64, denominator: u64 },
}

impl DebtIndex {
    pub fn as_f64(self) -> Option<f64> {
        match self {
            DebtIndex::Undefined => None,
            DebtIndex::Defined {
                numerator,
                denominator,
            } => Some(numerator as f64 / denominator as f64),
        }
    }

    fn thousandths(self) -> Option<u64> {
        match self {
            DebtIndex::Undefined => None,
            // round half up
            DebtIndex::Defined {
                numerator,
                denominator,
            } => Some((2 * numerator * 1000 + denominator) / (2 * denominator)),
        }
    }

    /// Three-decimal fraction, e.g. `0.583`, or `N/A`.
    pub fn rounded(self) -> String {
        match self.thousandths() {
            None => "N/A".to_string(),
            Some(t) => format!("{}.{:03}", t / 1000, t % 1000),
        }
    }

    /// Same precision as [`rounded`](Self::rounded), as a percentage.
    pub fn percent(self) -> String {
        match self.thousandths() {
            None => "N/A".to_string(),
            Some(t) => format!("{}.{}%", t / 10, t % 10),
        }
    }

    /// Exact value as `n/d`, or `N/A`.
    pub fn exact(self) -> String {
        match self {
            DebtIndex::Undefined => "N/A".to_string(),
            DebtIndex::Defined {
                numerator,
                denominator,
            } => format!("{numerator}/{denominator}"),
        }
    }
}

impl Serialize for DebtIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.rounded())
    }
}

pub fn debt_index(raw_total: i64, scoreable_weight: u64) -> Result<DebtIndex, ScoringError> {
    if raw_total.unsigned_abs() > scoreable_weight {
        return Err(ScoringError::Inconsistent {
            raw_total,
            scoreable_weight,
        });
    }
    if scoreable_weight == 0 {
        return Ok(DebtIndex::Undefined);
    }
    // |raw_total| <= scoreable_weight, so the shifted numerator is non-negative.
    let numerator = (raw_total + scoreable_weight as i64) as u64;
    let denominator = 2 * scoreable_weight;
    let g = gcd(numerator, denominator);
    Ok(DebtIndex::Defined {
        numerator: numerator / g,
        denominator: denominator / g,
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}
