//! Report emission: accuracy tables as CSV and aligned text, plus the
//! per-head training curves for plotting.

use std::path::Path;

use crate::data::Task;
use crate::error::Result;
use crate::expt::{CellRun, CrossTaskStudy, FusionStudy};
use crate::train::metrics_to_csv;

fn title(task: Task) -> &'static str {
    match task {
        Task::Id => "ID",
        Task::Age => "Age",
        Task::Race => "Race",
        Task::Gender => "Gender",
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}", x * 100.0)
}

fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut widths = vec![0usize; cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(&format!("{:<width$}", cell, width = widths[i]));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Cross-task table in the Table-1 layout:
/// `Features,ID(n),Age(n),Race(n),Gender(n)` and one row per feature source.
pub fn render_cross_csv(study: &CrossTaskStudy) -> String {
    let mut out = String::from("Features");
    for (i, task) in Task::ALL.iter().enumerate() {
        out.push_str(&format!(",{}({})", title(*task), study.class_counts[i]));
    }
    out.push('\n');
    for (si, source) in Task::ALL.iter().enumerate() {
        out.push_str(&format!("{}({})", title(*source), study.feature_dims[si]));
        for ti in 0..4 {
            out.push_str(&format!(",{}", pct(study.matrix.accuracies[si][ti])));
        }
        out.push('\n');
    }
    out
}

/// Aligned text form of the cross-task table; the best entry per target
/// column is marked with `*`.
pub fn render_cross_text(study: &CrossTaskStudy) -> String {
    let mut best = [0usize; 4];
    for ti in 0..4 {
        for si in 0..4 {
            if study.matrix.accuracies[si][ti] > study.matrix.accuracies[best[ti]][ti] {
                best[ti] = si;
            }
        }
    }
    let mut rows = Vec::new();
    let mut header = vec!["Features".to_string()];
    for (i, task) in Task::ALL.iter().enumerate() {
        header.push(format!("{}({})", title(*task), study.class_counts[i]));
    }
    rows.push(header);
    for (si, source) in Task::ALL.iter().enumerate() {
        let mut row = vec![format!("{}({})", title(*source), study.feature_dims[si])];
        for ti in 0..4 {
            let mark = if best[ti] == si { "*" } else { "" };
            row.push(format!("{}%{}", pct(study.matrix.accuracies[si][ti]), mark));
        }
        rows.push(row);
    }
    aligned(&rows)
}

/// Fusion table in the Table-2 layout: rows Own, Other three, All.
pub fn render_fusion_csv(study: &FusionStudy) -> String {
    let mut out = String::from("Features");
    for task in Task::ALL {
        out.push_str(&format!(",{}", title(task)));
    }
    out.push('\n');
    for (label, values) in [
        ("Own", &study.report.own),
        ("Other three", &study.report.other_three),
        ("All", &study.report.all),
    ] {
        out.push_str(label);
        for v in values {
            out.push_str(&format!(",{}", pct(*v)));
        }
        out.push('\n');
    }
    out
}

/// Aligned text form of the fusion table, with the all-minus-own margins
/// appended below.
pub fn render_fusion_text(study: &FusionStudy) -> String {
    let mut rows = Vec::new();
    let mut header = vec!["Features".to_string()];
    header.extend(Task::ALL.iter().map(|t| title(*t).to_string()));
    rows.push(header);
    for (label, values) in [
        ("Own", &study.report.own),
        ("Other three", &study.report.other_three),
        ("All", &study.report.all),
    ] {
        let mut row = vec![label.to_string()];
        row.extend(values.iter().map(|v| format!("{}%", pct(*v))));
        rows.push(row);
    }
    let mut out = aligned(&rows);
    let margins = study.report.margins();
    out.push('\n');
    out.push_str("Margin (All - Own): ");
    let parts: Vec<String> = Task::ALL
        .iter()
        .zip(margins)
        .map(|(t, m)| format!("{} {:+.1}", title(*t), m * 100.0))
        .collect();
    out.push_str(&parts.join(", "));
    out.push_str(" points\n");
    out
}

fn curve_file_name(cell: &str) -> String {
    format!("{}.csv", cell.replace("->", "_to_").replace('+', "-"))
}

fn write_curves(cells: &[CellRun], out_dir: &Path) -> Result<()> {
    let curves = out_dir.join("curves");
    std::fs::create_dir_all(&curves)?;
    for cell in cells {
        std::fs::write(curves.join(curve_file_name(&cell.name)), metrics_to_csv(&cell.metrics))?;
    }
    Ok(())
}

/// Writes `cross_task.csv`, `cross_task.txt`, `report.json`, and per-cell
/// metrics under `curves/`. Emitting the same study twice yields identical
/// bytes.
pub fn emit_cross_report(study: &CrossTaskStudy, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("cross_task.csv"), render_cross_csv(study))?;
    std::fs::write(out_dir.join("cross_task.txt"), render_cross_text(study))?;
    std::fs::write(
        out_dir.join("report.json"),
        serde_json::to_string_pretty(study).expect("study serializes"),
    )?;
    write_curves(&study.cells, out_dir)
}

/// Writes `fusion.csv`, `fusion.txt`, `report.json`, and per-cell metrics
/// under `curves/`.
pub fn emit_fusion_report(study: &FusionStudy, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("fusion.csv"), render_fusion_csv(study))?;
    std::fs::write(out_dir.join("fusion.txt"), render_fusion_text(study))?;
    std::fs::write(
        out_dir.join("report.json"),
        serde_json::to_string_pretty(study).expect("study serializes"),
    )?;
    write_curves(&study.cells, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expt::{CrossTaskMatrix, FusionReport};

    fn cross_study() -> CrossTaskStudy {
        // Accuracy values from a published reference run, used here only to
        // pin the table layout.
        CrossTaskStudy {
            matrix: CrossTaskMatrix {
                accuracies: [
                    [0.602, 0.832, 0.830, 0.923],
                    [0.236, 0.691, 0.584, 0.769],
                    [0.248, 0.623, 0.677, 0.767],
                    [0.228, 0.631, 0.583, 0.843],
                ],
            },
            feature_dims: [200, 50, 50, 50],
            class_counts: [77, 3, 4, 2],
            cells: vec![],
        }
    }

    #[test]
    fn cross_csv_matches_expected_layout() {
        let csv = render_cross_csv(&cross_study());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "Features,ID(77),Age(3),Race(4),Gender(2)");
        assert_eq!(lines[1], "ID(200),60.2,83.2,83.0,92.3");
        assert_eq!(lines[2], "Age(50),23.6,69.1,58.4,76.9");
        assert_eq!(lines[4], "Gender(50),22.8,63.1,58.3,84.3");
    }

    #[test]
    fn cross_text_marks_column_maxima() {
        let text = render_cross_text(&cross_study());
        // ID features win every column in the reference values.
        let id_row = text.lines().nth(1).unwrap();
        assert_eq!(id_row.matches('*').count(), 4);
        assert_eq!(text.matches('*').count(), 4);
    }

    fn fusion_study() -> FusionStudy {
        FusionStudy {
            report: FusionReport {
                own: [0.602, 0.691, 0.677, 0.843],
                other_three: [0.453, 0.873, 0.869, 0.949],
                all: [0.674, 0.892, 0.899, 0.961],
            },
            class_counts: [77, 3, 4, 2],
            cells: vec![],
        }
    }

    #[test]
    fn fusion_csv_matches_expected_layout() {
        let csv = render_fusion_csv(&fusion_study());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "Features,ID,Age,Race,Gender");
        assert_eq!(lines[1], "Own,60.2,69.1,67.7,84.3");
        assert_eq!(lines[2], "Other three,45.3,87.3,86.9,94.9");
        assert_eq!(lines[3], "All,67.4,89.2,89.9,96.1");
    }

    #[test]
    fn fusion_margins_are_exactly_all_minus_own() {
        let study = fusion_study();
        let margins = study.report.margins();
        let expected = [0.072, 0.201, 0.222, 0.118];
        for (m, e) in margins.iter().zip(expected) {
            assert!((m - e).abs() < 1e-9, "margin {m} vs {e}");
        }
        let text = render_fusion_text(&study);
        assert!(text.contains("ID +7.2"));
        assert!(text.contains("Gender +11.8"));
    }

    #[test]
    fn curve_names_are_filesystem_safe() {
        assert_eq!(curve_file_name("id->age"), "id_to_age.csv");
        assert_eq!(
            curve_file_name("age+race+gender->id"),
            "age-race-gender_to_id.csv"
        );
    }
}
