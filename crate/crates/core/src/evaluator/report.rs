use std::fmt::Write as _;
use std::str::FromStr;

use super::EvaluationReport;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ReportFormat {
    #[default]
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown report format '{other}' (expected markdown or csv)")),
        }
    }
}

const SUMMARY_HEADER: [&str; 5] =
    ["Type of user", "No of sound", "Correct recognition", "Incorrect Recognition", "No decision"];
const COMMAND_HEADER: [&str; 3] = ["Commands", "Number of Testing", "Recognition Probability"];
const USER_HEADER: [&str; 2] = ["User", "Recognition Percentage"];
const TIME_HEADER: [&str; 3] = ["User", "Time to Trained the system (In Hours)", "Accuracy in percentage"];

/// Renders a percentage with at most one decimal: `100`, `98`, `93.3`.
pub fn format_percent(p: f64) -> String {
    let s = format!("{:.1}", (p * 10.0).round() / 10.0);
    match s.strip_suffix(".0") {
        Some(whole) => whole.to_string(),
        None => s,
    }
}

fn format_hours(h: f64) -> String {
    if h.fract() == 0.0 {
        format!("{h:.0}")
    } else {
        h.to_string()
    }
}

struct Section {
    title: &'static str,
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

fn sections(report: &EvaluationReport) -> Vec<Section> {
    let summary = [("Known User", &report.known), ("Unknown User", &report.unknown)]
        .into_iter()
        .filter(|(_, r)| r.n > 0)
        .map(|(name, r)| {
            vec![
                name.to_string(),
                r.n.to_string(),
                r.correct.to_string(),
                r.incorrect.to_string(),
                r.no_decision.to_string(),
            ]
        })
        .collect();
    let commands = report
        .commands
        .iter()
        .map(|c| {
            vec![
                c.word.clone(),
                c.n_tests.to_string(),
                format!("{}%", format_percent(100.0 * c.recognition_probability())),
            ]
        })
        .collect();
    let users = report.users.iter().map(|u| vec![u.user.clone(), format_percent(u.percentage())]).collect();
    let times = report
        .time_to_accuracy
        .iter()
        .map(|t| vec![t.user.clone(), format_hours(t.hours), format_percent(t.accuracy_percent)])
        .collect();
    vec![
        Section { title: "Recognition by type of user", header: &SUMMARY_HEADER, rows: summary },
        Section { title: "Recognition probability per command", header: &COMMAND_HEADER, rows: commands },
        Section { title: "Recognition percentage per user", header: &USER_HEADER, rows: users },
        Section { title: "Training time and accuracy", header: &TIME_HEADER, rows: times },
    ]
}

fn overall_line(report: &EvaluationReport) -> (String, String) {
    let total = report.total();
    (
        "Overall accuracy".to_string(),
        format!("{}% ({}/{})", format_percent(100.0 * total.accuracy()), total.correct, total.n),
    )
}

/// Deterministic text rendering. Markdown omits empty sections; CSV keeps
/// every section's header so consumers can rely on the layout.
pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => render_markdown(report),
        ReportFormat::Csv => render_csv(report),
    }
}

fn render_markdown(report: &EvaluationReport) -> String {
    let mut out = String::new();
    for s in sections(report).iter().filter(|s| !s.rows.is_empty()) {
        let _ = writeln!(out, "### {}\n", s.title);
        let _ = writeln!(out, "| {} |", s.header.join(" | "));
        let _ = writeln!(out, "|{}", " --- |".repeat(s.header.len()));
        for row in &s.rows {
            let cells: Vec<String> = row.iter().map(|c| c.replace('|', "\\|")).collect();
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
        out.push('\n');
    }
    let (label, value) = overall_line(report);
    let _ = writeln!(out, "**{label}:** {value}");
    out
}

fn csv_block(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn render_csv(report: &EvaluationReport) -> String {
    let blocks: Vec<String> = sections(report).iter().map(|s| csv_block(s.header, &s.rows)).collect();
    let (label, value) = overall_line(report);
    let mut out = blocks.join("\n");
    out.push('\n');
    out.push_str(&csv_block(&[&label, &value], &[]));
    out
}
