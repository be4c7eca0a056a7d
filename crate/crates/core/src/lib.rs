//! Core library for `debt-gauge`, a self-assessment instrument that measures
//! technical debt on AI competition platforms.
//!
//! The crate is split along the lifecycle of an assessment:
//!
//! * [`bank`] loads and validates the questionnaire and the debt taxonomy.
//! * [`scoring`] maps answers to signed scores and aggregates them.
//! * [`session`] persists in-progress and finalized assessments on disk.
//! * [`report`] turns a session into respondent or analyst reports.

pub mod bank;
pub mod report;
pub mod scoring;
pub mod session;

pub use bank::{
    canonical_bank, load_bank, validate_bank, BankDocument, BankError, DebtType,
    DebtTypeDescriptor, Finding, Question, QuestionBank, Role, Severity, Stakeholder,
};
pub use report::{build_report, render, AssessmentReport, Audience, Format, ReportError};
pub use scoring::{
    debt_index, grand_total, score_answer, score_session, type_total, verdict, AnswerValue,
    DebtIndex, Response, ScoringError, TypeScorecard, Verdict,
};
pub use session::{
    AssessmentSession, FaultInjection, PlatformAssessment, SessionDelta, SessionId, SessionStatus,
    SessionStore, SessionSummary, StoreError,
};
