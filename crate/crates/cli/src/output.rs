use std::fmt::Write as _;

use debt_gauge_core::{Format, PlatformAssessment, SessionDelta, SessionSummary};

pub fn render_delta(delta: &SessionDelta, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(delta).expect("delta serializes");
            out.push(b'\n');
            out
        }
        Format::Markdown => {
            let mut md = String::new();
            md.push_str("# Assessment comparison\n\n");
            let _ = writeln!(
                md,
                "Baseline: {} (total {})",
                delta.baseline_id, delta.baseline_total
            );
            let _ = writeln!(
                md,
                "Comparison: {} (total {})\n",
                delta.comparison_id, delta.comparison_total
            );
            md.push_str("| Debt type | Delta |\n|---|---:|\n");
            for (t, d) in &delta.per_type_delta {
                let _ = writeln!(md, "| {} | {d:+} |", t.label());
            }
            let _ = writeln!(md, "| Total | {:+} |", delta.total_delta);
            md.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::CRLF)
                .from_writer(Vec::new());
            w.write_record(["debt_type", "delta"])
                .expect("in-memory write");
            for (t, d) in &delta.per_type_delta {
                w.write_record([t.key(), &d.to_string()])
                    .expect("in-memory write");
            }
            w.write_record(["total", &delta.total_delta.to_string()])
                .expect("in-memory write");
            w.into_inner().expect("in-memory flush")
        }
    }
}

pub fn render_combined(c: &PlatformAssessment, format: Format) -> Vec<u8> {
    let totals = [
        ("organizer", c.organizer_total, c.organizer_verdict),
        ("participant", c.participant_total, c.participant_verdict),
        ("combined", c.combined_total, c.combined_verdict),
    ];
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(c).expect("assessment serializes");
            out.push(b'\n');
            out
        }
        Format::Markdown => {
            let mut md = String::new();
            md.push_str("# Platform assessment\n\n");
            let _ = writeln!(md, "Organizer session: {}", c.organizer_id);
            let _ = writeln!(md, "Participant session: {}\n", c.participant_id);
            md.push_str("| Debt type | Combined total |\n|---|---:|\n");
            for (t, total) in &c.per_type_combined {
                let _ = writeln!(md, "| {} | {total} |", t.label());
            }
            md.push_str("\n| Scope | Total | Verdict |\n|---|---:|---|\n");
            for (scope, total, verdict) in totals {
                let _ = writeln!(md, "| {scope} | {total} | {} |", verdict.label());
            }
            md.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::CRLF)
                .from_writer(Vec::new());
            w.write_record(["scope", "debt_type", "total", "verdict"])
                .expect("in-memory write");
            for (t, total) in &c.per_type_combined {
                w.write_record(["combined", t.key(), &total.to_string(), ""])
                    .expect("in-memory write");
            }
            for (scope, total, verdict) in totals {
                w.write_record([scope, "", &total.to_string(), verdict.label()])
                    .expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
    }
}

pub fn render_list(sessions: &[SessionSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<32}  {:<11}  {:<11}  {:<20}  LABEL",
        "SESSION", "ROLE", "STATUS", "UPDATED"
    );
    for s in sessions {
        let _ = writeln!(
            out,
            "{:<32}  {:<11}  {:<11}  {:<20}  {}",
            s.session_id,
            s.role.as_str(),
            s.status.to_string(),
            s.updated_at.format("%Y-%m-%dT%H:%M:%SZ"),
            s.platform_label
        );
    }
    out
}
