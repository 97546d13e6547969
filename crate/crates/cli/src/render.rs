//! Text and JSON output of report rows.

use eberhard::ReportRow;

/// Writes rows as a JSON array, or as text through `text`.
pub fn emit(rows: &[ReportRow], json: bool, text: fn(&[ReportRow]) -> String) -> anyhow::Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(rows)?);
    } else {
        print!("{}", text(rows));
    }
    Ok(())
}

/// Percentages and ratios get two decimals; everything else is a count.
fn format_value(label: &str, v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if label.ends_with("(%)") || label.ends_with("(ratio)") {
        format!("{v:.2}")
    } else if label.contains("share") {
        format!("{v:.5}")
    } else {
        format!("{:.0}", v.round())
    }
}

fn label_width(rows: &[ReportRow]) -> usize {
    rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0)
}

pub fn plain(rows: &[ReportRow]) -> String {
    let w = label_width(rows);
    rows.iter()
        .map(|r| format!("{:<w$}  {:>12}\n", r.label, format_value(&r.label, r.data_value)))
        .collect()
}

pub fn checks(rows: &[ReportRow]) -> String {
    let w = label_width(rows);
    let mut out = format!(
        "{:<w$}  {:>12}  {:>12}  {:>8}  verdict\n",
        "quantity", "published", "computed", "dev (%)"
    );
    for r in rows {
        let computed = r.model_value.map_or_else(String::new, |v| format_value(&r.label, v));
        let dev = r
            .deviation
            .filter(|d| d.is_finite())
            .map_or_else(String::new, |d| format!("{:.2}", 100.0 * d));
        let verdict = match r.verdict {
            Some(v) => format!("{} ({})", if v.pass { "PASS" } else { "FAIL" }, v.tolerance),
            None => String::new(),
        };
        out.push_str(&format!(
            "{:<w$}  {:>12}  {:>12}  {:>8}  {verdict}\n",
            r.label,
            format_value(&r.label, r.data_value),
            computed,
            dev,
        ));
    }
    let failed = rows.iter().filter(|r| !r.passed()).count();
    out.push_str(&format!("{} of {} checks passed\n", rows.len() - failed, rows.len()));
    out
}
