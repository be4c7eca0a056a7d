//! File-backed assessment sessions.
//!
//! Layout under the data directory:
//!
//! ```text
//! sessions/<session_id>.json   one file per session
//! locks/<session_id>.lock      advisory lock taken for every mutation
//! index.json                   summary of all sessions, rebuilt by `list`
//! ```
//!
//! Writes go to a temporary file in `sessions/` followed by a rename, so a
//! reader sees either the previous or the next state of a session. Mutations
//! carry the revision the caller last saw; a stale revision is rejected
//! without touching the stored state.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::{DebtType, QuestionBank, Role};
use crate::scoring::{self, AnswerValue, Response, ScoringError, TypeScorecard, Verdict};

/// 128-bit random identifier rendered as 32 lowercase hex digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SessionId(String);

impl SessionId {
    pub fn random() -> Self {
        let bits: u128 = rand::thread_rng().gen();
        SessionId(format!("{bits:032x}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for SessionId {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let valid = s.len() == 32 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
        if valid {
            Ok(SessionId(s.to_string()))
        } else {
            Err(StoreError::InvalidSessionId(s.to_string()))
        }
    }
}

impl TryFrom<String> for SessionId {
    type Error = StoreError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<SessionId> for String {
    fn from(id: SessionId) -> Self {
        id.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    InProgress,
    Finalized,
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionStatus::InProgress => "in_progress",
            SessionStatus::Finalized => "finalized",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentSession {
    pub session_id: SessionId,
    pub role: Role,
    pub platform_label: String,
    pub bank_hash: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub responses: BTreeMap<u32, Response>,
    pub status: SessionStatus,
    pub revision: u64,
}

impl AssessmentSession {
    pub fn is_finalized(&self) -> bool {
        self.status == SessionStatus::Finalized
    }

    /// Applicable question ids without a response, in id order.
    pub fn unanswered(&self, bank: &QuestionBank) -> Vec<u32> {
        bank.applicable_questions(self.role)
            .into_iter()
            .map(|q| q.id)
            .filter(|id| !self.responses.contains_key(id))
            .collect()
    }

    pub fn applicable_count(&self, bank: &QuestionBank) -> usize {
        bank.applicable_questions(self.role).len()
    }

    pub fn scorecards(&self, bank: &QuestionBank) -> Result<Vec<TypeScorecard>, ScoringError> {
        scoring::score_session(bank, Some(self.role), self.responses.values())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionDelta {
    pub baseline_id: SessionId,
    pub comparison_id: SessionId,
    pub baseline_total: i64,
    pub comparison_total: i64,
    pub per_type_delta: BTreeMap<DebtType, i64>,
    pub total_delta: i64,
}

/// Per-role and combined outcome for one platform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlatformAssessment {
    pub organizer_id: SessionId,
    pub participant_id: SessionId,
    pub organizer_total: i64,
    pub participant_total: i64,
    pub combined_total: i64,
    pub per_type_combined: BTreeMap<DebtType, i64>,
    pub organizer_verdict: Verdict,
    pub participant_verdict: Verdict,
    pub combined_verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: SessionId,
    pub role: Role,
    pub platform_label: String,
    pub status: SessionStatus,
    pub revision: u64,
    pub answered: usize,
    pub updated_at: DateTime<Utc>,
}

impl From<&AssessmentSession> for SessionSummary {
    fn from(s: &AssessmentSession) -> Self {
        SessionSummary {
            session_id: s.session_id.clone(),
            role: s.role,
            platform_label: s.platform_label.clone(),
            status: s.status,
            revision: s.revision,
            answered: s.responses.len(),
            updated_at: s.updated_at,
        }
    }
}

/// Simulated failure points for exercising crash safety.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultInjection {
    /// The temporary file is fully written, then the process "dies" before
    /// the rename.
    CrashBeforeRename,
    /// Only the first half of the temporary file is written.
    CrashDuringTempWrite,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid session id `{0}`")]
    InvalidSessionId(String),
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("platform label must not be empty")]
    EmptyLabel,
    #[error("session {0} is finalized and cannot be changed")]
    SessionFinalized(SessionId),
    #[error("session {0} is already finalized")]
    AlreadyFinalized(SessionId),
    #[error("session {0} is not finalized")]
    NotFinalized(SessionId),
    #[error("question {0} is not in the bank")]
    UnknownQuestion(u32),
    #[error("question {question_id} is not applicable to role {role}")]
    QuestionNotApplicable { question_id: u32, role: Role },
    #[error("revision conflict: expected {expected}, stored {actual}")]
    RevisionConflict { expected: u64, actual: u64 },
    #[error("session is incomplete; unanswered questions: {unanswered:?}")]
    IncompleteSession { unanswered: Vec<u32> },
    #[error("bank mismatch: session pinned to {session_hash}, bank is {bank_hash}")]
    BankMismatch {
        session_hash: String,
        bank_hash: String,
    },
    #[error("role mismatch: {baseline} vs {comparison}")]
    RoleMismatch { baseline: Role, comparison: Role },
    #[error("scoring failed: {0}")]
    Scoring(#[from] ScoringError),
    #[error("session file {path} is corrupt: {source}")]
    Corrupt {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("storage error at {path}: {source}")]
    Storage {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("injected crash at {0:?}")]
    InjectedCrash(FaultInjection),
}

fn storage(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Storage {
        path: path.to_path_buf(),
        source,
    }
}

/// Sessions for one bank, persisted under a data directory.
#[derive(Debug)]
pub struct SessionStore {
    root: PathBuf,
    bank: Arc<QuestionBank>,
    fault: Mutex<Option<FaultInjection>>,
}

impl SessionStore {
    /// Opens (creating if needed) a data directory.
    pub fn open(root: impl Into<PathBuf>, bank: Arc<QuestionBank>) -> Result<Self, StoreError> {
        let root = root.into();
        for dir in [root.join("sessions"), root.join("locks")] {
            fs::create_dir_all(&dir).map_err(storage(&dir))?;
        }
        Ok(SessionStore {
            root,
            bank,
            fault: Mutex::new(None),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn bank(&self) -> &Arc<QuestionBank> {
        &self.bank
    }

    /// Arms a one-shot fault for the next session write.
    pub fn inject_fault(&self, fault: FaultInjection) {
        *self.fault.lock().expect("fault lock") = Some(fault);
    }

    pub fn session_path(&self, id: &SessionId) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.json"))
    }

    pub fn create_session(
        &self,
        role: Role,
        platform_label: &str,
    ) -> Result<AssessmentSession, StoreError> {
        let label = platform_label.trim();
        if label.is_empty() {
            return Err(StoreError::EmptyLabel);
        }
        let mut id = SessionId::random();
        while self.session_path(&id).exists() {
            id = SessionId::random();
        }
        let now = Utc::now();
        let session = AssessmentSession {
            session_id: id,
            role,
            platform_label: label.to_string(),
            bank_hash: self.bank.content_hash().to_string(),
            created_at: now,
            updated_at: now,
            responses: BTreeMap::new(),
            status: SessionStatus::InProgress,
            revision: 0,
        };
        self.write(&session)?;
        Ok(session)
    }

    pub fn load(&self, id: &SessionId) -> Result<AssessmentSession, StoreError> {
        let path = self.session_path(id);
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::SessionNotFound(id.to_string()))
            }
            Err(e) => return Err(storage(&path)(e)),
        };
        serde_json::from_str(&text).map_err(|source| StoreError::Corrupt { path, source })
    }

    /// Upserts one answer. `expected_revision` must equal the stored revision.
    pub fn record_answer(
        &self,
        id: &SessionId,
        question_id: u32,
        answer: AnswerValue,
        expected_revision: u64,
    ) -> Result<AssessmentSession, StoreError> {
        self.mutate(id, |session, bank| {
            if session.is_finalized() {
                return Err(StoreError::SessionFinalized(session.session_id.clone()));
            }
            let question = bank
                .question(question_id)
                .ok_or(StoreError::UnknownQuestion(question_id))?;
            if !question.applies_to(session.role) {
                return Err(StoreError::QuestionNotApplicable {
                    question_id,
                    role: session.role,
                });
            }
            if session.revision != expected_revision {
                return Err(StoreError::RevisionConflict {
                    expected: expected_revision,
                    actual: session.revision,
                });
            }
            session
                .responses
                .insert(question_id, Response::new(question_id, answer));
            Ok(())
        })
    }

    /// Marks a fully answered session as final.
    pub fn finalize(&self, id: &SessionId) -> Result<AssessmentSession, StoreError> {
        self.mutate(id, |session, bank| {
            if session.is_finalized() {
                return Err(StoreError::AlreadyFinalized(session.session_id.clone()));
            }
            let unanswered = session.unanswered(bank);
            if !unanswered.is_empty() {
                return Err(StoreError::IncompleteSession { unanswered });
            }
            session.status = SessionStatus::Finalized;
            Ok(())
        })
    }

    /// Per-type score change from `baseline` to `comparison`.
    pub fn compare(
        &self,
        baseline: &SessionId,
        comparison: &SessionId,
    ) -> Result<SessionDelta, StoreError> {
        let a = self.load(baseline)?;
        let b = self.load(comparison)?;
        for s in [&a, &b] {
            if !s.is_finalized() {
                return Err(StoreError::NotFinalized(s.session_id.clone()));
            }
        }
        if a.role != b.role {
            return Err(StoreError::RoleMismatch {
                baseline: a.role,
                comparison: b.role,
            });
        }
        for s in [&a, &b] {
            self.check_bank(s)?;
        }

        let before = a.scorecards(&self.bank)?;
        let after = b.scorecards(&self.bank)?;
        let per_type_delta: BTreeMap<DebtType, i64> = before
            .iter()
            .zip(&after)
            .map(|(x, y)| (x.debt_type, y.raw_total - x.raw_total))
            .collect();
        let baseline_total = scoring::grand_total(&before)?;
        let comparison_total = scoring::grand_total(&after)?;
        Ok(SessionDelta {
            baseline_id: a.session_id,
            comparison_id: b.session_id,
            baseline_total,
            comparison_total,
            total_delta: per_type_delta.values().sum(),
            per_type_delta,
        })
    }

    /// Joins one finalized organizer session and one finalized participant
    /// session into per-role and combined totals.
    pub fn combine(
        &self,
        organizer: &SessionId,
        participant: &SessionId,
    ) -> Result<PlatformAssessment, StoreError> {
        let org = self.load(organizer)?;
        let part = self.load(participant)?;
        for s in [&org, &part] {
            if !s.is_finalized() {
                return Err(StoreError::NotFinalized(s.session_id.clone()));
            }
        }
        if org.role != Role::Organizer || part.role != Role::Participant {
            return Err(StoreError::RoleMismatch {
                baseline: org.role,
                comparison: part.role,
            });
        }
        for s in [&org, &part] {
            self.check_bank(s)?;
        }

        let org_cards = org.scorecards(&self.bank)?;
        let part_cards = part.scorecards(&self.bank)?;
        let per_type_combined = org_cards
            .iter()
            .zip(&part_cards)
            .map(|(o, p)| (o.debt_type, o.raw_total + p.raw_total))
            .collect();
        let organizer_total = scoring::grand_total(&org_cards)?;
        let participant_total = scoring::grand_total(&part_cards)?;
        let combined_total = organizer_total + participant_total;
        Ok(PlatformAssessment {
            organizer_id: org.session_id,
            participant_id: part.session_id,
            organizer_total,
            participant_total,
            combined_total,
            per_type_combined,
            organizer_verdict: scoring::verdict(organizer_total),
            participant_verdict: scoring::verdict(participant_total),
            combined_verdict: scoring::verdict(combined_total),
        })
    }

    /// All sessions, oldest update first. Rewrites `index.json`.
    pub fn list(&self) -> Result<Vec<SessionSummary>, StoreError> {
        let dir = self.root.join("sessions");
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir).map_err(storage(&dir))? {
            let entry = entry.map_err(storage(&dir))?;
            let name = entry.file_name();
            let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".json")) else {
                continue;
            };
            let Ok(id) = stem.parse::<SessionId>() else {
                continue;
            };
            out.push(SessionSummary::from(&self.load(&id)?));
        }
        out.sort_by(|a, b| {
            a.updated_at
                .cmp(&b.updated_at)
                .then_with(|| a.session_id.cmp(&b.session_id))
        });

        let index = self.root.join("index.json");
        let mut body = serde_json::to_string_pretty(&out).expect("summaries serialize");
        body.push('\n');
        atomic_write(&index, body.as_bytes(), None)?;
        Ok(out)
    }

    fn check_bank(&self, session: &AssessmentSession) -> Result<(), StoreError> {
        if session.bank_hash != self.bank.content_hash() {
            return Err(StoreError::BankMismatch {
                session_hash: session.bank_hash.clone(),
                bank_hash: self.bank.content_hash().to_string(),
            });
        }
        Ok(())
    }

    fn mutate<F>(&self, id: &SessionId, change: F) -> Result<AssessmentSession, StoreError>
    where
        F: FnOnce(&mut AssessmentSession, &QuestionBank) -> Result<(), StoreError>,
    {
        let lock_path = self.root.join("locks").join(format!("{id}.lock"));
        if !self.session_path(id).exists() {
            return Err(StoreError::SessionNotFound(id.to_string()));
        }
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(storage(&lock_path))?;
        lock.lock().map_err(storage(&lock_path))?;

        let mut session = self.load(id)?;
        self.check_bank(&session)?;
        change(&mut session, &self.bank)?;
        session.revision += 1;
        session.updated_at = Utc::now().max(session.updated_at);
        self.write(&session)?;
        Ok(session)
    }

    fn write(&self, session: &AssessmentSession) -> Result<(), StoreError> {
        let mut body = serde_json::to_string_pretty(session).expect("session serializes");
        body.push('\n');
        let fault = self.fault.lock().expect("fault lock").take();
        atomic_write(
            &self.session_path(&session.session_id),
            body.as_bytes(),
            fault,
        )
    }
}

fn atomic_write(
    target: &Path,
    bytes: &[u8],
    fault: Option<FaultInjection>,
) -> Result<(), StoreError> {
    let dir = target.parent().expect("target has a parent");
    let name = target
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("file");
    let suffix: u64 = rand::thread_rng().gen();
    let tmp = dir.join(format!(".{name}.{suffix:016x}.tmp"));

    let mut file = File::create(&tmp).map_err(storage(&tmp))?;
    if fault == Some(FaultInjection::CrashDuringTempWrite) {
        file.write_all(&bytes[..bytes.len() / 2])
            .map_err(storage(&tmp))?;
        return Err(StoreError::InjectedCrash(
            FaultInjection::CrashDuringTempWrite,
        ));
    }
    file.write_all(bytes).map_err(storage(&tmp))?;
    file.sync_all().map_err(storage(&tmp))?;
    drop(file);
    if fault == Some(FaultInjection::CrashBeforeRename) {
        return Err(StoreError::InjectedCrash(FaultInjection::CrashBeforeRename));
    }
    fs::rename(&tmp, target).map_err(storage(target))?;
    if let Ok(d) = File::open(dir) {
        // Directory fsync is best effort; not every platform supports it.
        let _ = d.sync_all();
    }
    Ok(())
}
