use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use debt_gauge_core::{canonical_bank, Role};
use serde_json::Value;
use tempfile::TempDir;

fn dg_in(cwd: &Path, args: &[&str], stdin: &str, env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_debt-gauge"));
    cmd.current_dir(cwd)
        .args(args)
        .env_remove("DEBT_GAUGE_DATA_DIR")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    if let Some(dir) = env {
        cmd.env("DEBT_GAUGE_DATA_DIR", dir);
    }
    let mut child = cmd.spawn().unwrap();
    // The command may exit without reading its input.
    if let Err(e) = child.stdin.take().unwrap().write_all(stdin.as_bytes()) {
        assert_eq!(e.kind(), std::io::ErrorKind::BrokenPipe, "{e}");
    }
    child.wait_with_output().unwrap()
}

/// Runs with `--data-dir <data>`.
fn dg(data: &Path, args: &[&str], stdin: &str) -> Output {
    let mut full = vec!["--data-dir", data.to_str().unwrap()];
    full.extend_from_slice(args);
    dg_in(data, &full, stdin, None)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn session_id(o: &Output) -> String {
    let err = stderr(o);
    let line = err
        .lines()
        .find_map(|l| l.strip_prefix("session "))
        .unwrap_or_else(|| panic!("no session id on stderr: {err}"));
    line.trim().to_string()
}

/// Answers file covering every applicable question of `role` in id order.
fn script(role: Role, fill: char, overrides: &[(u32, char)]) -> String {
    let mut text = String::from("# generated\n");
    for q in canonical_bank().applicable_questions(role) {
        let c = overrides
            .iter()
            .find(|(id, _)| *id == q.id)
            .map_or(fill, |(_, c)| *c);
        text.push(c);
        text.push('\n');
    }
    text
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn assess_scripted(data: &Path, role: &str, answers: &str) -> String {
    let file = write(data, &format!("answers-{role}.txt"), answers);
    let o = dg(
        data,
        &[
            "assess",
            "--role",
            role,
            "--label",
            "Fixture",
            "--answers",
            &file,
        ],
        "",
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    session_id(&o)
}

fn analyst_json(data: &Path, id: &str) -> Value {
    let o = dg(
        data,
        &["report", id, "--audience", "analyst", "--format", "json"],
        "",
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn type_total(report: &Value, key: &str) -> i64 {
    report["per_type"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["debt_type"] == key)
        .unwrap()["raw_total"]
        .as_i64()
        .unwrap()
}

/// Removes question wording, which may itself mention weights.
fn without_bank_text(out: &str) -> String {
    let mut out = out.to_string();
    for q in canonical_bank().questions() {
        for text in [&q.text, &q.justification, &q.example] {
            out = out.replace(text.as_str(), "");
        }
        if let Some(note) = &q.erratum_note {
            out = out.replace(note.as_str(), "");
        }
    }
    out
}

fn canonical_value() -> Value {
    serde_json::from_str(debt_gauge_core::bank::canonical_bank_json()).unwrap()
}

#[test]
fn bank_validate_canonical_prints_warnings_and_exits_0() {
    let dir = TempDir::new().unwrap();
    let o = dg(dir.path(), &["bank", "validate"], "");
    assert_eq!(code(&o), 0);
    let err = stderr(&o);
    assert!(err.contains("warning: debt type requirements has 3 questions; reference count is 5"));
    assert!(err.contains("warning: question 4: weight 2"));
    assert!(!err.contains("error"));
    assert!(stdout(&o).contains("68 questions"));
}

#[test]
fn bank_validate_truncated_file_exits_1() {
    let dir = TempDir::new().unwrap();
    let text = debt_gauge_core::bank::canonical_bank_json();
    let path = write(dir.path(), "cut.json", &text[..text.len() / 2]);
    let o = dg(dir.path(), &["--bank", &path, "bank", "validate"], "");
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn bank_validate_missing_file_exits_1() {
    let dir = TempDir::new().unwrap();
    let o = dg(dir.path(), &["--bank", "nope.json", "bank", "validate"], "");
    assert_eq!(code(&o), 1);
}

#[test]
fn bank_validate_weight_9_exits_2() {
    let dir = TempDir::new().unwrap();
    let mut doc = canonical_value();
    doc["questions"][0]["weight"] = 9.into();
    let path = write(dir.path(), "w9.json", &doc.to_string());
    let o = dg(dir.path(), &["--bank", &path, "bank", "validate"], "");
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("error: question 1: weight 9 outside 1-5"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn bank_validate_tampered_text_fails_hash_check() {
    let dir = TempDir::new().unwrap();
    let mut doc = canonical_value();
    doc["questions"][5]["text"] = "Edited?".into();
    let path = write(dir.path(), "edited.json", &doc.to_string());
    let o = dg(dir.path(), &["--bank", &path, "bank", "validate"], "");
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("content hash mismatch"));
}

#[test]
fn invalid_bank_blocks_session_commands() {
    let dir = TempDir::new().unwrap();
    let mut doc = canonical_value();
    doc["questions"][0]["weight"] = 0.into();
    let path = write(dir.path(), "w0.json", &doc.to_string());
    let o = dg(
        dir.path(),
        &[
            "--bank",
            &path,
            "assess",
            "--role",
            "organizer",
            "--label",
            "X",
        ],
        "y\n",
    );
    assert_eq!(code(&o), 2);
    assert!(
        !dir.path().join("sessions").exists()
            || std::fs::read_dir(dir.path().join("sessions"))
                .unwrap()
                .next()
                .is_none()
    );
}

#[test]
fn organizer_all_yes_is_zero_debt_at_minus_sum() {
    let dir = TempDir::new().unwrap();
    let id = assess_scripted(dir.path(), "organizer", &script(Role::Organizer, 'Y', &[]));
    let r = analyst_json(dir.path(), &id);
    assert_eq!(r["grand_total"], -191);
    assert_eq!(r["verdict"], "zero_debt");
    assert_eq!(r["status"], "finalized");
}

#[test]
fn scripted_assess_prints_finalized_respondent_report() {
    let dir = TempDir::new().unwrap();
    let file = write(dir.path(), "a.txt", &script(Role::Participant, 'N', &[]));
    let o = dg(
        dir.path(),
        &[
            "assess",
            "--role",
            "participant",
            "--label",
            "P",
            "--answers",
            &file,
        ],
        "",
    );
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("| Grand total | 170 |"), "{out}");
    assert!(out.contains("| Verdict | Debt present |"));
    assert!(!without_bank_text(&out).to_lowercase().contains("weight"));
}

#[test]
fn accessibility_example_interactive_gives_2() {
    let dir = TempDir::new().unwrap();
    let mut input = String::new();
    for q in canonical_bank().applicable_questions(Role::Organizer) {
        input.push_str(match q.id {
            67 => "n\n",
            68 => "d\n",
            _ => "y\n",
        });
    }
    input.push_str("y\n");
    let o = dg(
        dir.path(),
        &["assess", "--role", "organizer", "--label", "RLGame"],
        &input,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let id = session_id(&o);
    let r = analyst_json(dir.path(), &id);
    assert_eq!(type_total(&r, "accessibility"), 2);
    assert_eq!(r["status"], "finalized");
}

#[test]
fn model_example_markdown_has_overall_rating_2() {
    let dir = TempDir::new().unwrap();
    let answers = script(Role::Participant, 'Y', &[(35, 'N'), (36, 'Y'), (37, 'D')]);
    let id = assess_scripted(dir.path(), "participant", &answers);
    let o = dg(dir.path(), &["report", &id, "--audience", "analyst"], "");
    assert_eq!(code(&o), 0);
    let md = stdout(&o);
    let model = md.split("\n## ").find(|s| s.starts_with("Model")).unwrap();
    assert!(model.contains("| Overall Rating | | | 2 |"), "{model}");
}

#[test]
fn quit_after_three_then_resume_continues_at_fourth() {
    let dir = TempDir::new().unwrap();
    let o = dg(
        dir.path(),
        &["assess", "--role", "organizer", "--label", "RLGame"],
        "y\nn\na\nq\n",
    );
    assert_eq!(code(&o), 0);
    let id = session_id(&o);
    assert!(stdout(&o).contains("Progress saved"));

    let list = stdout(&dg(dir.path(), &["list"], ""));
    let row = list.lines().find(|l| l.starts_with(&id)).unwrap();
    assert!(row.contains("in_progress") && row.contains("organizer") && row.ends_with("RLGame"));

    let o = dg(dir.path(), &["resume", &id], "");
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("43 of 46 questions remaining"), "{out}");
    let fourth = canonical_bank().applicable_questions(Role::Organizer)[3];
    let first_block = out.lines().find(|l| l.starts_with('[')).unwrap();
    assert_eq!(
        first_block,
        format!(
            "[4/46] {} (question {})",
            fourth.debt_type.label(),
            fourth.id
        )
    );
}

#[test]
fn eof_saves_progress() {
    let dir = TempDir::new().unwrap();
    let o = dg(
        dir.path(),
        &["assess", "--role", "participant", "--label", "P"],
        "y\nj\ne\n?\nwhat\ns\nd\n",
    );
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("Why it matters: "));
    assert!(out.contains("Example: "));
    assert!(out.contains("Unrecognized answer `what`"));
    let id = session_id(&o);
    let r = analyst_json(dir.path(), &id);
    assert_eq!(r["completion"]["answered"], 2);
    assert_eq!(r["partial"], true);
    assert!(r["verdict"].is_null());
}

#[test]
fn skipped_questions_block_finalize_until_answered() {
    let dir = TempDir::new().unwrap();
    let answers = script(Role::Participant, 'Y', &[(1, 'S')]);
    let id = assess_scripted(dir.path(), "participant", &answers);
    let r = analyst_json(dir.path(), &id);
    assert_eq!(r["status"], "in_progress");
    assert_eq!(r["completion"]["answered"], 42);

    let file = write(dir.path(), "rest.txt", "n\n");
    let o = dg(dir.path(), &["resume", &id, "--answers", &file], "");
    assert_eq!(code(&o), 0);
    let r = analyst_json(dir.path(), &id);
    assert_eq!(r["status"], "finalized");
    let w1 = i64::from(canonical_bank().question(1).unwrap().weight);
    assert_eq!(r["grand_total"], -170 + 2 * w1);

    let o = dg(dir.path(), &["resume", &id], "");
    assert_eq!(code(&o), 4);
}

#[test]
fn answers_file_errors_are_preconditions() {
    let dir = TempDir::new().unwrap();
    let mut long = script(Role::Organizer, 'Y', &[]);
    long.push_str("Y\n");
    let file = write(dir.path(), "long.txt", &long);
    let o = dg(
        dir.path(),
        &[
            "assess",
            "--role",
            "organizer",
            "--label",
            "X",
            "--answers",
            &file,
        ],
        "",
    );
    assert_eq!(code(&o), 4);

    let file = write(dir.path(), "bad.txt", "Y\nperhaps\n");
    let o = dg(
        dir.path(),
        &[
            "assess",
            "--role",
            "organizer",
            "--label",
            "X",
            "--answers",
            &file,
        ],
        "",
    );
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn compare_identical_is_all_zero_and_roles_must_match() {
    let dir = TempDir::new().unwrap();
    let answers = script(Role::Organizer, 'D', &[(66, 'Y')]);
    let a = assess_scripted(dir.path(), "organizer", &answers);
    let b = assess_scripted(dir.path(), "organizer", &answers);
    let o = dg(dir.path(), &["compare", &a, &b], "");
    assert_eq!(code(&o), 0);
    let md = stdout(&o);
    let rows: Vec<&str> = md
        .lines()
        .filter(|l| l.starts_with("| ") && !l.starts_with("| Debt type"))
        .collect();
    assert_eq!(rows.len(), 19);
    assert!(rows.iter().all(|r| r.ends_with("| +0 |")), "{md}");

    let o = dg(dir.path(), &["compare", &a, &b, "--format", "json"], "");
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["total_delta"], 0);

    let p = assess_scripted(
        dir.path(),
        "participant",
        &script(Role::Participant, 'Y', &[]),
    );
    assert_eq!(code(&dg(dir.path(), &["compare", &a, &p], "")), 4);

    let o = dg(
        dir.path(),
        &["assess", "--role", "organizer", "--label", "open"],
        "q\n",
    );
    let open = session_id(&o);
    assert_eq!(code(&dg(dir.path(), &["compare", &a, &open], "")), 4);
    let missing = "0123456789abcdef0123456789abcdef";
    assert_eq!(code(&dg(dir.path(), &["compare", &a, missing], "")), 3);
}

#[test]
fn compare_csv_lists_types_and_total() {
    let dir = TempDir::new().unwrap();
    let a = assess_scripted(dir.path(), "organizer", &script(Role::Organizer, 'Y', &[]));
    let b = assess_scripted(dir.path(), "organizer", &script(Role::Organizer, 'N', &[]));
    let o = dg(dir.path(), &["compare", &a, &b, "--format", "csv"], "");
    let text = stdout(&o);
    let lines: Vec<&str> = text.split("\r\n").filter(|l| !l.is_empty()).collect();
    assert_eq!(lines[0], "debt_type,delta");
    assert_eq!(lines.len(), 20);
    assert_eq!(*lines.last().unwrap(), "total,382");
}

#[test]
fn report_unknown_session_exits_3() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&dg(dir.path(), &["report", "nope"], "")), 3);
    let o = dg(
        dir.path(),
        &["report", "0123456789abcdef0123456789abcdef"],
        "",
    );
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).starts_with("error: "));
}

#[test]
fn data_dir_env_is_used_and_flag_wins() {
    let cwd = TempDir::new().unwrap();
    let env_dir = TempDir::new().unwrap();
    let flag_dir = TempDir::new().unwrap();
    let args = ["assess", "--role", "organizer", "--label", "E"];
    let o = dg_in(cwd.path(), &args, "q\n", Some(env_dir.path()));
    let id = session_id(&o);
    assert!(env_dir
        .path()
        .join("sessions")
        .join(format!("{id}.json"))
        .exists());

    let mut with_flag = vec!["--data-dir", flag_dir.path().to_str().unwrap()];
    with_flag.extend_from_slice(&args);
    let o = dg_in(cwd.path(), &with_flag, "q\n", Some(env_dir.path()));
    let id = session_id(&o);
    assert!(flag_dir
        .path()
        .join("sessions")
        .join(format!("{id}.json"))
        .exists());
    assert!(!env_dir
        .path()
        .join("sessions")
        .join(format!("{id}.json"))
        .exists());

    let o = dg_in(cwd.path(), &args, "q\n", None);
    let id = session_id(&o);
    assert!(cwd
        .path()
        .join("debt-gauge-data/sessions")
        .join(format!("{id}.json"))
        .exists());
}

#[test]
fn help_exits_0_and_usage_errors_exit_4() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&dg(dir.path(), &["--help"], "")), 0);
    assert_eq!(
        code(&dg(
            dir.path(),
            &["assess", "--role", "admin", "--label", "x"],
            ""
        )),
        4
    );
}

/// Everything the wizard printed before the report.
fn wizard_part(out: &str) -> &str {
    out.split("# Technical debt assessment").next().unwrap()
}

#[test]
fn interactive_transcript_is_independent_of_weights() {
    let dir = TempDir::new().unwrap();
    let mut doc = canonical_value();
    for q in doc["questions"].as_array_mut().unwrap() {
        let w = q["weight"].as_u64().unwrap();
        q["weight"] = (6 - w).into();
    }
    doc.as_object_mut().unwrap().remove("content_hash");
    let flipped = write(dir.path(), "flipped.json", &doc.to_string());

    let mut input = String::new();
    for (i, _) in canonical_bank()
        .applicable_questions(Role::Participant)
        .iter()
        .enumerate()
    {
        input.push_str(["y\n", "j\ne\nn\n", "a\n", "d\n"][i % 4]);
    }
    input.push_str("y\n");

    let a = dg(
        dir.path(),
        &["assess", "--role", "participant", "--label", "W"],
        &input,
    );
    let b = dg(
        dir.path(),
        &[
            "--bank",
            &flipped,
            "assess",
            "--role",
            "participant",
            "--label",
            "W",
        ],
        &input,
    );
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);
    let (a, b) = (stdout(&a), stdout(&b));
    assert!(wizard_part(&a).contains("[43/43]"));
    assert_eq!(wizard_part(&a), wizard_part(&b));
    assert!(!without_bank_text(&a).to_lowercase().contains("weight"));
}

fn masked(report: &str, id: &str) -> String {
    report
        .replace(id, "<session>")
        .lines()
        .map(|l| {
            if l.starts_with("| As of |") {
                "| As of | <time> |"
            } else {
                l
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn scripted_session_report_is_deterministic() {
    let answers = script(
        Role::Organizer,
        'Y',
        &[(2, 'N'), (5, 'D'), (9, 'A'), (66, 'N')],
    );
    let mut reports = Vec::new();
    for _ in 0..2 {
        let dir = TempDir::new().unwrap();
        let file = write(dir.path(), "a.txt", &answers);
        let o = dg(
            dir.path(),
            &[
                "assess",
                "--role",
                "organizer",
                "--label",
                "Det",
                "--answers",
                &file,
            ],
            "",
        );
        assert_eq!(code(&o), 0);
        reports.push(masked(&stdout(&o), &session_id(&o)));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn combine_reports_both_roles_and_sum() {
    let dir = TempDir::new().unwrap();
    let org = assess_scripted(dir.path(), "organizer", &script(Role::Organizer, 'Y', &[]));
    let part = assess_scripted(
        dir.path(),
        "participant",
        &script(Role::Participant, 'N', &[]),
    );
    let o = dg(dir.path(), &["combine", &org, &part], "");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let md = stdout(&o);
    assert!(md.contains("| organizer | -191 | Zero debt |"), "{md}");
    assert!(md.contains("| participant | 170 | Debt present |"));
    assert!(md.contains("| combined | -21 | Zero debt |"));
    assert_eq!(code(&dg(dir.path(), &["combine", &part, &org], "")), 4);
}
