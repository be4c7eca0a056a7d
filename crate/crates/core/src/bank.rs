//! Questionnaire bank: the 68 questions, their routing and weights, and the
//! debt taxonomy descriptors shown alongside them.
//!
//! A bank file is a JSON document (see [`BankDocument`]). Loading goes through
//! three gates in order: JSON parsing, [`validate_bank`], and a content-hash
//! check against the declared `content_hash`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Only schema understood by this build.
pub const SCHEMA_VERSION: &str = "1";

/// Question total stated for the reference questionnaire.
pub const REFERENCE_TOTAL: usize = 68;

const CANONICAL_JSON: &str = include_str!("../../../bank/canonical.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DebtType {
    Accessibility,
    Algorithm,
    ArchitecturalDesign,
    Build,
    Code,
    Configuration,
    Data,
    Defect,
    Documentation,
    Ethics,
    Infrastructure,
    Model,
    PeopleSocial,
    Process,
    Requirements,
    SelfAdmitted,
    Test,
    Versioning,
}

impl DebtType {
    pub const ALL: [DebtType; 18] = [
        DebtType::Accessibility,
        DebtType::Algorithm,
        DebtType::ArchitecturalDesign,
        DebtType::Build,
        DebtType::Code,
        DebtType::Configuration,
        DebtType::Data,
        DebtType::Defect,
        DebtType::Documentation,
        DebtType::Ethics,
        DebtType::Infrastructure,
        DebtType::Model,
        DebtType::PeopleSocial,
        DebtType::Process,
        DebtType::Requirements,
        DebtType::SelfAdmitted,
        DebtType::Test,
        DebtType::Versioning,
    ];

    /// Machine name used in bank files and on the wire.
    pub fn key(self) -> &'static str {
        match self {
            DebtType::Accessibility => "accessibility",
            DebtType::Algorithm => "algorithm",
            DebtType::ArchitecturalDesign => "architectural_design",
            DebtType::Build => "build",
            DebtType::Code => "code",
            DebtType::Configuration => "configuration",
            DebtType::Data => "data",
            DebtType::Defect => "defect",
            DebtType::Documentation => "documentation",
            DebtType::Ethics => "ethics",
            DebtType::Infrastructure => "infrastructure",
            DebtType::Model => "model",
            DebtType::PeopleSocial => "people_social",
            DebtType::Process => "process",
            DebtType::Requirements => "requirements",
            DebtType::SelfAdmitted => "self_admitted",
            DebtType::Test => "test",
            DebtType::Versioning => "versioning",
        }
    }

    /// Human-readable name.
    pub fn label(self) -> &'static str {
        match self {
            DebtType::Accessibility => "Accessibility",
            DebtType::Algorithm => "Algorithm",
            DebtType::ArchitecturalDesign => "Architectural – Design",
            DebtType::Build => "Build",
            DebtType::Code => "Code",
            DebtType::Configuration => "Configuration",
            DebtType::Data => "Data",
            DebtType::Defect => "Defect",
            DebtType::Documentation => "Documentation",
            DebtType::Ethics => "Ethics",
            DebtType::Infrastructure => "Infrastructure",
            DebtType::Model => "Model",
            DebtType::PeopleSocial => "People – Social",
            DebtType::Process => "Process",
            DebtType::Requirements => "Requirements",
            DebtType::SelfAdmitted => "Self-Admitted (SATD)",
            DebtType::Test => "Test",
            DebtType::Versioning => "Versioning",
        }
    }

    /// Reference per-type question count. The canonical bank differs from it
    /// for Requirements (3 questions against a reference 5).
    pub fn reference_count(self) -> usize {
        match self {
            DebtType::Accessibility => 3,
            DebtType::Algorithm => 1,
            DebtType::ArchitecturalDesign => 5,
            DebtType::Build => 2,
            DebtType::Code => 1,
            DebtType::Configuration => 3,
            DebtType::Data => 6,
            DebtType::Defect => 5,
            DebtType::Documentation => 5,
            DebtType::Ethics => 2,
            DebtType::Infrastructure => 4,
            DebtType::Model => 3,
            DebtType::PeopleSocial => 2,
            DebtType::Process => 3,
            DebtType::Requirements => 5,
            DebtType::SelfAdmitted => 10,
            DebtType::Test => 7,
            DebtType::Versioning => 3,
        }
    }
}

impl fmt::Display for DebtType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for DebtType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DebtType::ALL
            .into_iter()
            .find(|t| t.key() == s)
            .ok_or_else(|| format!("unknown debt type `{s}`"))
    }
}

/// Who a question is addressed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stakeholder {
    #[serde(rename = "Organizers")]
    Organizer,
    #[serde(rename = "Participants")]
    Participant,
    #[serde(rename = "Organizers & Participants")]
    Both,
}

impl Stakeholder {
    pub fn source_label(self) -> &'static str {
        match self {
            Stakeholder::Organizer => "Organizers",
            Stakeholder::Participant => "Participants",
            Stakeholder::Both => "Organizers & Participants",
        }
    }

    pub fn includes(self, role: Role) -> bool {
        matches!(
            (self, role),
            (Stakeholder::Both, _)
                | (Stakeholder::Organizer, Role::Organizer)
                | (Stakeholder::Participant, Role::Participant)
        )
    }
}

impl FromStr for Stakeholder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Organizers" => Ok(Stakeholder::Organizer),
            "Participants" => Ok(Stakeholder::Participant),
            "Organizers & Participants" => Ok(Stakeholder::Both),
            other => Err(format!("unknown stakeholder `{other}`")),
        }
    }
}

/// The role a respondent answers as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Organizer,
    Participant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Organizer => "organizer",
            Role::Participant => "participant",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "organizer" => Ok(Role::Organizer),
            "participant" => Ok(Role::Participant),
            other => Err(format!(
                "unknown role `{other}` (expected organizer or participant)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: u32,
    #[serde(rename = "type")]
    pub debt_type: DebtType,
    pub stakeholder: Stakeholder,
    /// Significance on the 1–5 scale. Never shown to respondents.
    pub weight: u8,
    pub text: String,
    pub justification: String,
    pub example: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub erratum_note: Option<String>,
}

impl Question {
    pub fn applies_to(&self, role: Role) -> bool {
        self.stakeholder.includes(role)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebtTypeDescriptor {
    #[serde(rename = "type")]
    pub debt_type: DebtType,
    pub definition: String,
    pub problem: String,
    pub example: String,
}

/// Untyped wire form of a bank file.
///
/// Types, stakeholders and weights are kept as raw values here so that
/// [`validate_bank`] can report bad entries as findings instead of failing
/// at the JSON layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankDocument {
    pub schema_version: String,
    pub bank_version: String,
    pub questions: Vec<QuestionRecord>,
    #[serde(default)]
    pub descriptors: Vec<DescriptorRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionRecord {
    pub id: i64,
    #[serde(rename = "type")]
    pub debt_type: String,
    pub stakeholder: String,
    pub weight: i64,
    pub text: String,
    pub justification: String,
    pub example: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub erratum_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorRecord {
    #[serde(rename = "type")]
    pub debt_type: String,
    pub definition: String,
    pub problem: String,
    pub example: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl Finding {
    fn error(message: impl Into<String>) -> Self {
        Finding {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Finding {
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

#[derive(Debug, Error)]
pub enum BankError {
    #[error("failed to read bank: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed bank file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("bank failed validation: {}", join_findings(.0))]
    Validation(Vec<Finding>),
    #[error("content hash mismatch: declared {declared}, computed {computed}")]
    HashMismatch { declared: String, computed: String },
}

fn join_findings(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(|f| f.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

/// A validated, immutable question bank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionBank {
    schema_version: String,
    bank_version: String,
    questions: Vec<Question>,
    descriptors: Vec<DebtTypeDescriptor>,
    content_hash: String,
}

impl QuestionBank {
    /// Assembles a bank from typed parts without running [`validate_bank`].
    /// The content hash is computed from the parts.
    pub fn from_parts(
        bank_version: impl Into<String>,
        questions: Vec<Question>,
        descriptors: Vec<DebtTypeDescriptor>,
    ) -> Self {
        let mut bank = QuestionBank {
            schema_version: SCHEMA_VERSION.to_string(),
            bank_version: bank_version.into(),
            questions,
            descriptors,
            content_hash: String::new(),
        };
        bank.content_hash = content_hash(&bank.to_document());
        bank
    }

    /// Full load pipeline over an already parsed document.
    pub fn from_document(doc: BankDocument) -> Result<Self, BankError> {
        let errors: Vec<Finding> = validate_bank(&doc)
            .into_iter()
            .filter(Finding::is_error)
            .collect();
        if !errors.is_empty() {
            return Err(BankError::Validation(errors));
        }
        let computed = content_hash(&doc);
        if let Some(declared) = &doc.content_hash {
            if !declared.eq_ignore_ascii_case(&computed) {
                return Err(BankError::HashMismatch {
                    declared: declared.clone(),
                    computed,
                });
            }
        }

        // Validation has already rejected every record that fails to convert.
        let questions = doc
            .questions
            .iter()
            .map(|q| Question {
                id: q.id as u32,
                debt_type: q.debt_type.parse().expect("validated type"),
                stakeholder: q.stakeholder.parse().expect("validated stakeholder"),
                weight: q.weight as u8,
                text: q.text.clone(),
                justification: q.justification.clone(),
                example: q.example.clone(),
                erratum_note: q.erratum_note.clone(),
            })
            .collect();
        let descriptors = doc
            .descriptors
            .iter()
            .map(|d| DebtTypeDescriptor {
                debt_type: d.debt_type.parse().expect("validated type"),
                definition: d.definition.clone(),
                problem: d.problem.clone(),
                example: d.example.clone(),
            })
            .collect();

        Ok(QuestionBank {
            schema_version: doc.schema_version,
            bank_version: doc.bank_version,
            questions,
            descriptors,
            content_hash: computed,
        })
    }

    pub fn schema_version(&self) -> &str {
        &self.schema_version
    }

    pub fn bank_version(&self) -> &str {
        &self.bank_version
    }

    /// Lowercase hex SHA-256 of the canonical serialization.
    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn descriptors(&self) -> &[DebtTypeDescriptor] {
        &self.descriptors
    }

    pub fn question(&self, id: u32) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn descriptor(&self, debt_type: DebtType) -> Option<&DebtTypeDescriptor> {
        self.descriptors.iter().find(|d| d.debt_type == debt_type)
    }

    /// Questions routed to `role` (its own plus the shared ones), in id order.
    pub fn applicable_questions(&self, role: Role) -> Vec<&Question> {
        let mut out: Vec<&Question> = self
            .questions
            .iter()
            .filter(|q| q.applies_to(role))
            .collect();
        out.sort_by_key(|q| q.id);
        out
    }

    pub fn questions_by_type(&self, debt_type: DebtType) -> Vec<&Question> {
        let mut out: Vec<&Question> = self
            .questions
            .iter()
            .filter(|q| q.debt_type == debt_type)
            .collect();
        out.sort_by_key(|q| q.id);
        out
    }

    pub fn count_by_type(&self) -> BTreeMap<DebtType, usize> {
        let mut counts: BTreeMap<DebtType, usize> = DebtType::ALL.iter().map(|t| (*t, 0)).collect();
        for q in &self.questions {
            *counts.entry(q.debt_type).or_default() += 1;
        }
        counts
    }

    pub fn validate(&self) -> Vec<Finding> {
        validate_bank(&self.to_document())
    }

    /// Wire form including the content hash.
    pub fn to_document(&self) -> BankDocument {
        BankDocument {
            schema_version: self.schema_version.clone(),
            bank_version: self.bank_version.clone(),
            questions: self
                .questions
                .iter()
                .map(|q| QuestionRecord {
                    id: i64::from(q.id),
                    debt_type: q.debt_type.key().to_string(),
                    stakeholder: q.stakeholder.source_label().to_string(),
                    weight: i64::from(q.weight),
                    text: q.text.clone(),
                    justification: q.justification.clone(),
                    example: q.example.clone(),
                    erratum_note: q.erratum_note.clone(),
                })
                .collect(),
            descriptors: self
                .descriptors
                .iter()
                .map(|d| DescriptorRecord {
                    debt_type: d.debt_type.key().to_string(),
                    definition: d.definition.clone(),
                    problem: d.problem.clone(),
                    example: d.example.clone(),
                })
                .collect(),
            content_hash: (!self.content_hash.is_empty()).then(|| self.content_hash.clone()),
        }
    }

    /// Pretty-printed bank file, loadable with [`load_bank`].
    pub fn to_json_pretty(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.to_document()).expect("bank serializes");
        out.push('\n');
        out
    }
}

/// Parses, validates and hash-checks a bank file.
pub fn load_bank<R: Read>(mut source: R) -> Result<QuestionBank, BankError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let doc: BankDocument = serde_json::from_str(&text)?;
    QuestionBank::from_document(doc)
}

/// The bank shipped with the binary.
pub fn canonical_bank() -> &'static QuestionBank {
    static BANK: OnceLock<QuestionBank> = OnceLock::new();
    BANK.get_or_init(|| {
        load_bank(CANONICAL_JSON.as_bytes()).expect("embedded canonical bank is valid")
    })
}

/// Raw text of the embedded canonical bank file.
pub fn canonical_bank_json() -> &'static str {
    CANONICAL_JSON
}

/// Structural and cross-check findings for a bank document.
///
/// Errors make a bank unusable. Warnings flag known gaps against the
/// reference counts and low-weight questions.
pub fn validate_bank(doc: &BankDocument) -> Vec<Finding> {
    let mut findings = Vec::new();

    if doc.schema_version != SCHEMA_VERSION {
        findings.push(Finding::error(format!(
            "unsupported schema_version `{}` (expected `{SCHEMA_VERSION}`)",
            doc.schema_version
        )));
    }
    if doc.questions.is_empty() {
        findings.push(Finding::error("no questions"));
    }

    let mut seen_ids = BTreeSet::new();
    let mut counts: BTreeMap<DebtType, usize> = BTreeMap::new();
    for q in &doc.questions {
        let at = format!("question {}", q.id);
        if q.id < 1 || q.id > i64::from(u32::MAX) {
            findings.push(Finding::error(format!(
                "{at}: id must be a positive integer"
            )));
        } else if !seen_ids.insert(q.id) {
            findings.push(Finding::error(format!("duplicate question id {}", q.id)));
        }
        if !(1..=5).contains(&q.weight) {
            findings.push(Finding::error(format!(
                "{at}: weight {} outside 1-5",
                q.weight
            )));
        } else if q.weight < 3 {
            findings.push(Finding::warning(format!(
                "{at}: weight {} is below the selection threshold of 3",
                q.weight
            )));
        }
        if q.text.trim().is_empty() {
            findings.push(Finding::error(format!("{at}: empty text")));
        }
        if q.justification.trim().is_empty() {
            findings.push(Finding::error(format!("{at}: empty justification")));
        }
        match q.debt_type.parse::<DebtType>() {
            Ok(t) => *counts.entry(t).or_default() += 1,
            Err(e) => findings.push(Finding::error(format!("{at}: {e}"))),
        }
        if let Err(e) = q.stakeholder.parse::<Stakeholder>() {
            findings.push(Finding::error(format!("{at}: {e}")));
        }
    }

    if !doc.questions.is_empty() {
        for t in DebtType::ALL {
            let actual = counts.get(&t).copied().unwrap_or(0);
            if actual == 0 {
                findings.push(Finding::error(format!("debt type {t} has no questions")));
            } else if actual != t.reference_count() {
                findings.push(Finding::warning(format!(
                    "debt type {t} has {actual} questions; reference count is {}",
                    t.reference_count()
                )));
            }
        }
        if doc.questions.len() != REFERENCE_TOTAL {
            findings.push(Finding::warning(format!(
                "bank has {} questions; reference total is {REFERENCE_TOTAL}",
                doc.questions.len()
            )));
        }
    }

    let mut described = BTreeSet::new();
    for d in &doc.descriptors {
        match d.debt_type.parse::<DebtType>() {
            Ok(t) => {
                if !described.insert(t) {
                    findings.push(Finding::error(format!("duplicate descriptor for {t}")));
                }
                if d.definition.trim().is_empty() {
                    findings.push(Finding::error(format!("descriptor {t}: empty definition")));
                }
            }
            Err(e) => findings.push(Finding::error(format!("descriptor: {e}"))),
        }
    }
    for t in DebtType::ALL {
        if !described.contains(&t) {
            findings.push(Finding::error(format!("missing descriptor for {t}")));
        }
    }

    findings
}

/// SHA-256 over the canonical serialization of `doc` with `content_hash`
/// omitted: keys sorted, no insignificant whitespace.
pub fn content_hash(doc: &BankDocument) -> String {
    let mut unhashed = doc.clone();
    unhashed.content_hash = None;
    let value = serde_json::to_value(&unhashed).expect("bank document serializes");
    let mut canonical = String::new();
    write_canonical(&value, &mut canonical);
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            out.push('{');
            for (i, (k, v)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(v, out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(v, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}
