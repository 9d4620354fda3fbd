//! Per-iteration training metrics and their CSV form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One row of the training trace. `test_acc` is only present at evaluation
/// iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

/// Renders rows as CSV with the header `iteration,lr,train_loss,train_acc,test_acc`.
pub fn metrics_to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from("iteration,lr,train_loss,train_acc,test_acc\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iteration,
            r.lr,
            r.train_loss,
            r.train_acc,
            r.test_acc.map(|v| v.to_string()).unwrap_or_default()
        ));
    }
    out
}

pub fn write_metrics_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    std::fs::write(path, metrics_to_csv(rows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_blank_test_column() {
        let rows = vec![
            MetricsRow { iteration: 1, lr: 0.1, train_loss: 2.0, train_acc: 0.25, test_acc: None },
            MetricsRow { iteration: 2, lr: 0.1, train_loss: 1.5, train_acc: 0.5, test_acc: Some(0.75) },
        ];
        let csv = metrics_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "iteration,lr,train_loss,train_acc,test_acc");
        assert_eq!(lines[1], "1,0.1,2,0.25,");
        assert_eq!(lines[2], "2,0.1,1.5,0.5,0.75");
    }
}
