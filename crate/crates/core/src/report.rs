//! Assessment reports.
//!
//! Two audiences see the same totals and verdict. The analyst view adds the
//! per-question weight and calculated score in a `Question | Score | Answer |
//! Calculated Score` layout; the respondent view leaves every weight-bearing
//! field out of the data model itself, so no renderer can leak one.

use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::{DebtType, QuestionBank, Role};
use crate::scoring::{self, AnswerValue, DebtIndex, ScoringError, Verdict};
use crate::session::{AssessmentSession, SessionId, SessionStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Audience {
    #[default]
    Respondent,
    Analyst,
}

impl FromStr for Audience {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "respondent" => Ok(Audience::Respondent),
            "analyst" => Ok(Audience::Analyst),
            other => Err(format!("unknown audience `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    Json,
    #[default]
    Markdown,
    Csv,
}

impl Format {
    pub fn content_type(self) -> &'static str {
        match self {
            Format::Json => "application/json",
            Format::Markdown => "text/markdown; charset=utf-8",
            Format::Csv => "text/csv; charset=utf-8",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("bank mismatch: session pinned to {session_hash}, bank is {bank_hash}")]
    BankMismatch {
        session_hash: String,
        bank_hash: String,
    },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

const DEBT_INDEX_NOTE: &str =
    "derived: (grand_total + scoreable) / (2 * scoreable), rounded to 3 decimals";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessmentReport {
    pub session_id: SessionId,
    pub role: Role,
    pub platform_label: String,
    pub bank_version: String,
    pub bank_hash: String,
    /// State timestamp of the session the report was built from.
    pub generated_at: DateTime<Utc>,
    pub audience: Audience,
    pub status: SessionStatus,
    pub partial: bool,
    pub per_type: Vec<TypeReport>,
    pub grand_total: i64,
    pub debt_index: DebtIndex,
    pub debt_index_note: &'static str,
    /// Withheld (`None`) until the session is finalized.
    pub verdict: Option<Verdict>,
    pub completion: Completion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeReport {
    pub debt_type: DebtType,
    pub label: &'static str,
    pub raw_total: i64,
    pub answered_count: u32,
    pub applicable_count: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scoreable_weight: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_weight: Option<u32>,
    pub rows: Vec<QuestionRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuestionRow {
    pub question_id: u32,
    pub text: String,
    pub answer: Option<AnswerValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calculated_score: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Completion {
    pub answered: usize,
    pub applicable: usize,
}

pub fn build_report(
    bank: &QuestionBank,
    session: &AssessmentSession,
    audience: Audience,
) -> Result<AssessmentReport, ReportError> {
    if session.bank_hash != bank.content_hash() {
        return Err(ReportError::BankMismatch {
            session_hash: session.bank_hash.clone(),
            bank_hash: bank.content_hash().to_string(),
        });
    }
    let analyst = audience == Audience::Analyst;
    let cards = session.scorecards(bank)?;
    let grand_total = scoring::grand_total(&cards)?;
    let scoreable: u64 = cards.iter().map(|c| u64::from(c.scoreable_weight)).sum();
    let debt_index = scoring::debt_index(grand_total, scoreable)?;

    let mut per_type = Vec::with_capacity(cards.len());
    for card in &cards {
        let mut rows = Vec::new();
        for q in bank.questions_by_type(card.debt_type) {
            if !q.applies_to(session.role) {
                continue;
            }
            let answer = session.responses.get(&q.id).map(|r| r.answer);
            let calculated_score = match answer {
                Some(a) if analyst => Some(scoring::score_answer(q.weight, a)?),
                _ => None,
            };
            rows.push(QuestionRow {
                question_id: q.id,
                text: q.text.clone(),
                answer,
                weight: analyst.then_some(q.weight),
                calculated_score,
            });
        }
        per_type.push(TypeReport {
            debt_type: card.debt_type,
            label: card.debt_type.label(),
            raw_total: card.raw_total,
            answered_count: card.answered_count,
            applicable_count: rows.len() as u32,
            scoreable_weight: analyst.then_some(card.scoreable_weight),
            max_weight: analyst.then_some(card.max_weight),
            rows,
        });
    }

    let finalized = session.is_finalized();
    Ok(AssessmentReport {
        session_id: session.session_id.clone(),
        role: session.role,
        platform_label: session.platform_label.clone(),
        bank_version: bank.bank_version().to_string(),
        bank_hash: bank.content_hash().to_string(),
        generated_at: session.updated_at,
        audience,
        status: session.status,
        partial: !finalized,
        per_type,
        grand_total,
        debt_index,
        debt_index_note: DEBT_INDEX_NOTE,
        verdict: finalized.then(|| scoring::verdict(grand_total)),
        completion: Completion {
            answered: session.responses.len(),
            applicable: session.applicable_count(bank),
        },
    })
}

/// Serializes a report. Output is a pure function of the report.
pub fn render(report: &AssessmentReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
        Format::Markdown => render_markdown(report).into_bytes(),
        Format::Csv => render_csv(report),
    }
}

fn verdict_text(report: &AssessmentReport) -> &'static str {
    match report.verdict {
        Some(v) => v.label(),
        None => "withheld (session in progress)",
    }
}

fn cell(text: &str) -> String {
    text.replace('|', "\\|").replace(['\r', '\n'], " ")
}

fn answer_label(answer: Option<AnswerValue>) -> &'static str {
    answer.map_or("(unanswered)", AnswerValue::label)
}

fn render_markdown(r: &AssessmentReport) -> String {
    let analyst = r.audience == Audience::Analyst;
    let mut md = String::new();
    let _ = writeln!(
        md,
        "# Technical debt assessment: {}\n",
        cell(&r.platform_label)
    );
    md.push_str("| Field | Value |\n|---|---|\n");
    let _ = writeln!(md, "| Session | {} |", r.session_id);
    let _ = writeln!(md, "| Role | {} |", r.role);
    let status = if r.partial {
        format!("{} (partial)", r.status)
    } else {
        r.status.to_string()
    };
    let _ = writeln!(md, "| Status | {status} |");
    let audience = if analyst { "analyst" } else { "respondent" };
    let _ = writeln!(md, "| Audience | {audience} |");
    let _ = writeln!(md, "| Bank | {} ({}) |", r.bank_version, r.bank_hash);
    let _ = writeln!(
        md,
        "| As of | {} |",
        r.generated_at.to_rfc3339_opts(SecondsFormat::AutoSi, true)
    );

    md.push_str("\n## Summary\n\n");
    if analyst {
        md.push_str(
            "| Debt type | Answered | Applicable | Scoreable weight | Max weight | Total |\n",
        );
        md.push_str("|---|---:|---:|---:|---:|---:|\n");
    } else {
        md.push_str("| Debt type | Answered | Applicable | Total |\n|---|---:|---:|---:|\n");
    }
    for t in &r.per_type {
        if analyst {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} |",
                t.label,
                t.answered_count,
                t.applicable_count,
                t.scoreable_weight.unwrap_or(0),
                t.max_weight.unwrap_or(0),
                t.raw_total
            );
        } else {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} |",
                t.label, t.answered_count, t.applicable_count, t.raw_total
            );
        }
    }
    md.push_str("\n| Measure | Value |\n|---|---|\n");
    let _ = writeln!(md, "| Grand total | {} |", r.grand_total);
    let index = match r.debt_index {
        DebtIndex::Undefined => "N/A".to_string(),
        idx => format!("{} ({})", idx.rounded(), idx.percent()),
    };
    let _ = writeln!(md, "| Debt index (derived) | {index} |");
    let _ = writeln!(md, "| Verdict | {} |", verdict_text(r));
    let _ = writeln!(
        md,
        "| Completion | {}/{} |",
        r.completion.answered, r.completion.applicable
    );

    for t in &r.per_type {
        let _ = writeln!(md, "\n## {}\n", t.label);
        if t.rows.is_empty() {
            md.push_str("_No applicable questions._\n");
            continue;
        }
        if analyst {
            md.push_str("| Question | Score | Answer | Calculated Score |\n|---|---:|---|---:|\n");
            for row in &t.rows {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} |",
                    cell(&row.text),
                    row.weight.map(|w| w.to_string()).unwrap_or_default(),
                    answer_label(row.answer),
                    row.calculated_score
                        .map(|s| s.to_string())
                        .unwrap_or_default()
                );
            }
            let _ = writeln!(md, "| Overall Rating | | | {} |", t.raw_total);
        } else {
            md.push_str("| Question | Answer |\n|---|---|\n");
            for row in &t.rows {
                let _ = writeln!(md, "| {} | {} |", cell(&row.text), answer_label(row.answer));
            }
            let _ = writeln!(md, "| Overall Rating | {} |", t.raw_total);
        }
    }
    md
}

fn render_csv(r: &AssessmentReport) -> Vec<u8> {
    let analyst = r.audience == Audience::Analyst;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let mut record = |fields: Vec<String>| {
        w.write_record(&fields).expect("in-memory csv write");
    };

    // Respondent rows drop the two weight-bearing columns.
    let row = |kind: &str,
               debt_type: &str,
               question_id: String,
               question: &str,
               answer: &str,
               weight: String,
               score: String,
               value: String| {
        let mut fields = vec![
            kind.to_string(),
            debt_type.to_string(),
            question_id,
            question.to_string(),
            answer.to_string(),
        ];
        if analyst {
            fields.push(weight);
            fields.push(score);
        }
        fields.push(value);
        fields
    };

    record(row(
        "record",
        "debt_type",
        "question_id".into(),
        "question",
        "answer",
        "weight".into(),
        "calculated_score".into(),
        "value".into(),
    ));
    for t in &r.per_type {
        for q in &t.rows {
            record(row(
                "question",
                t.debt_type.key(),
                q.question_id.to_string(),
                &q.text,
                q.answer.map_or("unanswered", AnswerValue::key),
                q.weight.map(|x| x.to_string()).unwrap_or_default(),
                q.calculated_score
                    .map(|x| x.to_string())
                    .unwrap_or_default(),
                String::new(),
            ));
        }
    }
    let summary = |kind: &str, debt_type: &str, value: String| {
        row(
            kind,
            debt_type,
            String::new(),
            "",
            "",
            String::new(),
            String::new(),
            value,
        )
    };
    for t in &r.per_type {
        record(summary(
            "type_total",
            t.debt_type.key(),
            t.raw_total.to_string(),
        ));
    }
    record(summary("grand_total", "", r.grand_total.to_string()));
    record(summary("debt_index_derived", "", r.debt_index.rounded()));
    record(summary(
        "verdict",
        "",
        match r.verdict {
            Some(Verdict::ZeroDebt) => "zero_debt".into(),
            Some(Verdict::DebtPresent) => "debt_present".into(),
            None => "withheld".into(),
        },
    ));
    record(summary("answered", "", r.completion.answered.to_string()));
    record(summary(
        "applicable",
        "",
        r.completion.applicable.to_string(),
    ));
    w.into_inner().expect("in-memory csv flush")
}
