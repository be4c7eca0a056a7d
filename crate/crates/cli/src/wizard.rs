//! Line-oriented questionnaire, interactive or driven by an answers file.

use std::io::{self, BufRead, Write};

use debt_gauge_core::{AnswerValue, Question, SessionId, SessionStore};

use crate::{exit, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WizardOutcome {
    /// The respondent chose to stop; progress is saved.
    Quit,
    /// Every pending question was visited. Skipped ones remain unanswered.
    Finished { finalized: bool, unanswered: usize },
}

/// One line per pending question; `None` skips it.
pub type AnswerScript = Vec<Option<AnswerValue>>;

/// Parses an answers file. Blank lines and lines starting with `#` are
/// ignored; every other line holds one of Y, N, A, D or S.
pub fn parse_answers(text: &str) -> Result<AnswerScript, String> {
    let mut script = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let token = line.trim();
        if token.is_empty() || token.starts_with('#') {
            continue;
        }
        match parse_token(token) {
            Some(Token::Answer(a)) => script.push(Some(a)),
            Some(Token::Skip) => script.push(None),
            _ => return Err(format!("line {}: unrecognized answer `{token}`", n + 1)),
        }
    }
    Ok(script)
}

enum Token {
    Answer(AnswerValue),
    Skip,
    Quit,
    Justification,
    Example,
    Help,
}

fn parse_token(raw: &str) -> Option<Token> {
    let t = raw.trim().to_ascii_lowercase();
    let token = match t.as_str() {
        "s" | "skip" => Token::Skip,
        "q" | "quit" => Token::Quit,
        "j" => Token::Justification,
        "e" => Token::Example,
        "?" | "h" | "help" => Token::Help,
        _ => Token::Answer(AnswerValue::from_code(&t).or_else(|| t.parse().ok())?),
    };
    Some(token)
}

/// Applies a script to the session's pending questions in id order and
/// finalizes the session if that completes it.
pub fn apply_script(
    store: &SessionStore,
    id: &SessionId,
    script: &[Option<AnswerValue>],
) -> Result<WizardOutcome, CliError> {
    let mut session = store.load(id)?;
    let bank = store.bank();
    let pending = session.unanswered(bank);
    if script.len() > pending.len() {
        return Err(CliError::new(
            exit::PRECONDITION,
            format!(
                "answers file has {} answers but only {} questions are pending",
                script.len(),
                pending.len()
            ),
        ));
    }
    for (qid, answer) in pending.iter().zip(script) {
        if let Some(a) = answer {
            session = store.record_answer(id, *qid, *a, session.revision)?;
        }
    }
    let unanswered = session.unanswered(bank).len();
    let finalized = unanswered == 0;
    if finalized {
        store.finalize(id)?;
    }
    Ok(WizardOutcome::Finished {
        finalized,
        unanswered,
    })
}

const PROMPT: &str =
    "Answer [y]es, [n]o, not [a]pplicable, [d]on't know; [s]kip, [j]ustification, [e]xample, [q]uit: ";

const HELP: &str = "\
  y  Yes, the platform follows this practice
  n  No
  a  Not applicable to this platform
  d  I don't know / I don't answer
  s  Skip for now (the question stays open)
  j  Show why the question matters
  e  Show an example
  q  Save and quit; continue later with `debt-gauge resume`";

/// Renders the question block shown before each prompt.
pub fn question_block(q: &Question, position: usize, total: usize) -> String {
    let mut block = format!(
        "\n[{position}/{total}] {} (question {})\n{}\n",
        q.debt_type.label(),
        q.id,
        q.text
    );
    if let Some(note) = &q.erratum_note {
        block.push_str(&format!("Note: {note}\n"));
    }
    block
}

/// Walks the pending questions of a session on a terminal-like stream pair.
/// End of input counts as save-and-quit.
pub fn interactive(
    store: &SessionStore,
    id: &SessionId,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<WizardOutcome, CliError> {
    let write_err = |e: io::Error| CliError::io("failed to write output", e);
    let mut session = store.load(id)?;
    let bank = store.bank();
    let applicable = bank.applicable_questions(session.role);
    let pending = session.unanswered(bank);

    writeln!(
        out,
        "Assessing {} as {}: {} of {} questions remaining.",
        session.platform_label,
        session.role,
        pending.len(),
        applicable.len()
    )
    .map_err(write_err)?;

    for qid in pending {
        let position = applicable
            .iter()
            .position(|q| q.id == qid)
            .expect("pending questions are applicable");
        let q = applicable[position];
        out.write_all(question_block(q, position + 1, applicable.len()).as_bytes())
            .map_err(write_err)?;
        loop {
            let Some(line) = prompt(input, out, PROMPT)? else {
                return quit(id, out);
            };
            match parse_token(&line) {
                Some(Token::Answer(a)) => {
                    session = store.record_answer(id, qid, a, session.revision)?;
                    break;
                }
                Some(Token::Skip) => break,
                Some(Token::Quit) => return quit(id, out),
                Some(Token::Justification) => {
                    writeln!(out, "Why it matters: {}", q.justification).map_err(write_err)?
                }
                Some(Token::Example) => {
                    writeln!(out, "Example: {}", q.example).map_err(write_err)?
                }
                Some(Token::Help) => writeln!(out, "{HELP}").map_err(write_err)?,
                None => writeln!(
                    out,
                    "Unrecognized answer `{}`; type ? for help.",
                    line.trim()
                )
                .map_err(write_err)?,
            }
        }
    }

    let unanswered = session.unanswered(bank).len();
    if unanswered > 0 {
        writeln!(
            out,
            "\n{unanswered} questions are still open. Continue later with `debt-gauge resume {id}`.\n"
        )
        .map_err(write_err)?;
        return Ok(WizardOutcome::Finished {
            finalized: false,
            unanswered,
        });
    }

    writeln!(out, "\nAll {} questions answered.", applicable.len()).map_err(write_err)?;
    let answer = prompt(
        input,
        out,
        "Finalize the assessment? Answers cannot be changed afterwards. [y/N]: ",
    )?;
    let finalized = matches!(answer.as_deref().map(str::trim), Some("y" | "Y" | "yes"));
    if finalized {
        store.finalize(id)?;
    }
    writeln!(out).map_err(write_err)?;
    Ok(WizardOutcome::Finished {
        finalized,
        unanswered: 0,
    })
}

fn prompt(
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    text: &str,
) -> Result<Option<String>, CliError> {
    write!(out, "{text}").map_err(|e| CliError::io("failed to write output", e))?;
    out.flush()
        .map_err(|e| CliError::io("failed to write output", e))?;
    let mut line = String::new();
    let n = input
        .read_line(&mut line)
        .map_err(|e| CliError::io("failed to read input", e))?;
    Ok((n > 0).then_some(line))
}

fn quit(id: &SessionId, out: &mut dyn Write) -> Result<WizardOutcome, CliError> {
    writeln!(
        out,
        "\nProgress saved. Continue with `debt-gauge resume {id}`."
    )
    .map_err(|e| CliError::io("failed to write output", e))?;
    Ok(WizardOutcome::Quit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use debt_gauge_core::canonical_bank;

    #[test]
    fn answers_file_skips_comments_and_blanks() {
        let script = parse_answers("# header\n\nY\nn\n  A \nD\ns\n").unwrap();
        assert_eq!(
            script,
            vec![
                Some(AnswerValue::Yes),
                Some(AnswerValue::No),
                Some(AnswerValue::NotApplicable),
                Some(AnswerValue::DontKnow),
                None,
            ]
        );
    }

    #[test]
    fn answers_file_reports_bad_line() {
        let err = parse_answers("Y\nmaybe\n").unwrap_err();
        assert!(err.starts_with("line 2:"), "{err}");
        assert!(parse_answers("q\n").is_err());
    }

    #[test]
    fn question_block_does_not_depend_on_weight() {
        for q in canonical_bank().questions() {
            let mut other = q.clone();
            other.weight = if q.weight == 5 { 1 } else { 5 };
            assert_eq!(question_block(q, 1, 46), question_block(&other, 1, 46));
        }
    }

    #[test]
    fn prompt_text_has_no_weight_placeholder() {
        for text in [PROMPT, HELP] {
            assert!(!text.to_lowercase().contains("weight"));
            assert!(!text.chars().any(|c| c.is_ascii_digit()));
        }
    }
}
