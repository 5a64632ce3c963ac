use std::io::Write;

use super::benchmark::{ErrorReport, ModelTiming};

const HEADER: [&str; 9] = ["model", "clusterer", "classifier", "known_pct", "EE", "DE", "FE", "n_cases", "n_unknown_event_cases"];

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

fn cells(report: &ErrorReport) -> Vec<[String; 9]> {
    report
        .rows
        .iter()
        .map(|r| {
            [
                r.model.clone(),
                r.clusterer.clone(),
                r.classifier.clone(),
                r.known_pct.to_string(),
                r.ee.to_string(),
                fmt_opt(r.de),
                fmt_opt(r.fe),
                r.n_cases.to_string(),
                r.n_unknown.to_string(),
            ]
        })
        .collect()
}

/// One row per grid cell. DE and FE cells are blank for label-only models.
pub fn write_report_csv<W: Write>(report: &ErrorReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in cells(report) {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Metadata as `# key: value` lines followed by an aligned table.
pub fn render_report_text(report: &ErrorReport) -> String {
    let mut out = String::new();
    for (k, v) in &report.metadata {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    let body = cells(report);
    let mut widths: Vec<usize> = HEADER.iter().map(|h| h.len()).collect();
    for row in &body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |row: &[String]| {
        let parts: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            // text columns left-aligned, numbers right-aligned
            .map(|(i, (c, &w))| if i < 3 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    out.push_str(&line(&HEADER.map(String::from)));
    out.push_str(&line(&widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>()));
    for row in &body {
        out.push_str(&line(row));
    }
    out
}

pub fn write_timings_csv<W: Write>(timings: &[ModelTiming], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "train_seconds"])?;
    for t in timings {
        w.write_record([t.model.clone(), format!("{:.3}", t.train_seconds)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::evaluation::ReportRow;

    fn report() -> ErrorReport {
        let row = |model: &str, de| ReportRow {
            model: model.into(),
            clusterer: "-".into(),
            classifier: "-".into(),
            known_pct: 50,
            ee: 12,
            de,
            fe: de,
            n_cases: 3,
            n_unknown: 0,
        };
        ErrorReport {
            metadata: BTreeMap::from([("dataset".to_string(), "toy".to_string())]),
            rows: vec![row("markov", None), row("pedf", Some(1.5))],
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_report_csv(&report(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "model,clusterer,classifier,known_pct,EE,DE,FE,n_cases,n_unknown_event_cases");
        assert_eq!(lines[1], "markov,-,-,50,12,,,3,0");
        assert_eq!(lines[2], "pedf,-,-,50,12,1.500000,1.500000,3,0");
    }

    #[test]
    fn text_table_is_aligned() {
        let text = render_report_text(&report());
        assert!(text.starts_with("# dataset: toy\n"));
        let table: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(table.len(), 4);
        let col = table[0].find("known_pct").unwrap();
        assert_eq!(&table[2][col..col + 9], "       50");
    }
}
