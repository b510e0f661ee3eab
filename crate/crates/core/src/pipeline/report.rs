//! Per-phase and per-patient accuracy tables, box-plot data columns and the
//! normality / variance / mean comparison of two accuracy columns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::stats::{self, StatResult, StatsError};

use super::{natural_key, PipelineError};

/// `Std` rows are population standard deviations.
pub const REPORT_DDOF: usize = 0;

/// Final accuracies (percent) of one trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatOutcome {
    pub training: f64,
    pub validation: f64,
    pub test: f64,
    /// Test accuracy per patient present in the test set.
    pub per_patient: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub repeats: Vec<RepeatOutcome>,
}

fn summary(values: &[f64]) -> (f64, f64) {
    (stats::mean(values), stats::std_dev(values, REPORT_DDOF))
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_default()
}

impl ExperimentReport {
    pub fn column(&self, phase: Phase) -> Vec<f64> {
        self.repeats
            .iter()
            .map(|r| match phase {
                Phase::Training => r.training,
                Phase::Validation => r.validation,
                Phase::Test => r.test,
            })
            .collect()
    }

    /// Patients seen in any test set, in natural order.
    pub fn patient_ids(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.repeats.iter().flat_map(|r| r.per_patient.keys()).collect();
        let mut ids: Vec<String> = set.into_iter().cloned().collect();
        ids.sort_by_key(|id| natural_key(id));
        ids
    }

    fn patient_column(&self, id: &str) -> Vec<Option<f64>> {
        self.repeats.iter().map(|r| r.per_patient.get(id).copied()).collect()
    }

    fn phase_rows(&self, with_summary: bool) -> String {
        let mut s = String::from("Model,Training,Validation,Test\n");
        for (i, r) in self.repeats.iter().enumerate() {
            let _ = writeln!(s, "{},{:.2},{:.2},{:.2}", i + 1, r.training, r.validation, r.test);
        }
        if with_summary && !self.repeats.is_empty() {
            let cols = Phase::ALL.map(|p| summary(&self.column(p)));
            let _ = writeln!(s, "Avg,{:.2},{:.2},{:.2}", cols[0].0, cols[1].0, cols[2].0);
            let _ = writeln!(s, "Std,{:.2},{:.2},{:.2}", cols[0].1, cols[1].1, cols[2].1);
        }
        s
    }

    fn patient_rows(&self, with_summary: bool) -> String {
        let ids = self.patient_ids();
        let mut s = String::from("Model");
        for id in &ids {
            s.push(',');
            s.push_str(id);
        }
        s.push('\n');
        let columns: Vec<Vec<Option<f64>>> = ids.iter().map(|id| self.patient_column(id)).collect();
        for i in 0..self.repeats.len() {
            s.push_str(&(i + 1).to_string());
            for col in &columns {
                s.push(',');
                s.push_str(&cell(col[i]));
            }
            s.push('\n');
        }
        if with_summary && !self.repeats.is_empty() {
            let present: Vec<Vec<f64>> = columns.iter().map(|c| c.iter().flatten().copied().collect()).collect();
            for (label, pick) in [("Avg", 0), ("Std", 1)] {
                s.push_str(label);
                for vals in &present {
                    s.push(',');
                    let stat = (!vals.is_empty()).then(|| {
                        let (m, sd) = summary(vals);
                        if pick == 0 { m } else { sd }
                    });
                    s.push_str(&cell(stat));
                }
                s.push('\n');
            }
        }
        s
    }

    /// Training/validation/test accuracy, one row per model plus `Avg` and `Std` rows.
    pub fn table2_csv(&self) -> String {
        self.phase_rows(true)
    }

    /// Per-patient test accuracy, one row per model plus `Avg` and `Std` rows.
    pub fn table3_csv(&self) -> String {
        self.patient_rows(true)
    }

    /// Box-plot data, one accuracy column per phase.
    pub fn boxplot_phases_csv(&self) -> String {
        self.phase_rows(false)
    }

    /// Box-plot data, one test-accuracy column per patient.
    pub fn boxplot_patients_csv(&self) -> String {
        self.patient_rows(false)
    }

    /// Validation-vs-test comparison of the model columns.
    pub fn comparison(&self) -> ColumnComparison {
        ColumnComparison::new(
            "Validation",
            self.column(Phase::Validation),
            "Test",
            self.column(Phase::Test),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Training,
    Validation,
    Test,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Training, Phase::Validation, Phase::Test];

    pub fn header(self) -> &'static str {
        match self {
            Phase::Training => "Training",
            Phase::Validation => "Validation",
            Phase::Test => "Test",
        }
    }
}

/// Shapiro-Wilk on each column, F-test on the variances, and the pooled
/// and Welch t-tests on the means.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnComparison {
    pub names: [String; 2],
    pub columns: [Vec<f64>; 2],
    pub shapiro: [Result<StatResult, StatsError>; 2],
    pub f_test: Result<StatResult, StatsError>,
    pub student_t: Result<StatResult, StatsError>,
    pub welch_t: Result<StatResult, StatsError>,
}

impl ColumnComparison {
    pub fn new(name_a: &str, a: Vec<f64>, name_b: &str, b: Vec<f64>) -> Self {
        Self {
            shapiro: [stats::shapiro_wilk(&a), stats::shapiro_wilk(&b)],
            f_test: stats::f_test(&a, &b),
            student_t: stats::t_test_unpaired(&a, &b, true),
            welch_t: stats::t_test_unpaired(&a, &b, false),
            names: [name_a.to_string(), name_b.to_string()],
            columns: [a, b],
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        stats::mean(&self.columns[i])
    }

    pub fn std_dev(&self, i: usize) -> f64 {
        stats::std_dev(&self.columns[i], REPORT_DDOF)
    }

    /// One `name: key=value ...` line per quantity.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in 0..2 {
            let _ = writeln!(
                s,
                "column {}: n={} mean={:.4} std={:.4}",
                self.names[i],
                self.columns[i].len(),
                self.mean(i),
                self.std_dev(i)
            );
        }
        for i in 0..2 {
            push_result(&mut s, &format!("shapiro-wilk {}", self.names[i]), &self.shapiro[i]);
        }
        push_result(&mut s, "f-test", &self.f_test);
        push_result(&mut s, "student-t", &self.student_t);
        push_result(&mut s, "welch-t", &self.welch_t);
        s
    }
}

fn push_result(s: &mut String, label: &str, r: &Result<StatResult, StatsError>) {
    match r {
        Ok(r) => {
            let df: Vec<String> = r.df.iter().map(|d| format!("{d:.4}")).collect();
            let _ = writeln!(
                s,
                "{label}: statistic={:.6} p={:.6} df={}",
                r.statistic,
                r.p_value,
                if df.is_empty() { "-".to_string() } else { df.join("/") }
            );
        }
        Err(e) => {
            let _ = writeln!(s, "{label}: not computed ({e})");
        }
    }
}

/// Reads two columns of the model rows of an accuracy CSV, skipping `Avg`/`Std`.
pub fn read_phase_columns(text: &str, wanted: [&str; 2]) -> Result<[Vec<f64>; 2], PipelineError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let bad = |m: String| PipelineError::Format(m);
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("column `{name}` not found")))
    };
    let cols = [index(wanted[0])?, index(wanted[1])?];
    let mut out = [Vec::new(), Vec::new()];
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if matches!(rec.get(0), Some("Avg" | "Std")) {
            continue;
        }
        for (k, &c) in cols.iter().enumerate() {
            let field = rec.get(c).unwrap_or("");
            let v: f64 = field
                .parse()
                .map_err(|_| bad(format!("row {}: `{field}` is not a number", line + 2)))?;
            out[k].push(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(t: f64, v: f64, te: f64, p: &[(&str, f64)]) -> RepeatOutcome {
        RepeatOutcome {
            training: t,
            validation: v,
            test: te,
            per_patient: p.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn table2_layout() {
        let r = ExperimentReport {
            repeats: vec![
                outcome(90.0, 80.0, 70.0, &[]),
                outcome(92.0, 82.0, 74.0, &[]),
            ],
        };
        assert_eq!(
            r.table2_csv(),
            "Model,Training,Validation,Test\n1,90.00,80.00,70.00\n2,92.00,82.00,74.00\nAvg,91.00,81.00,72.00\nStd,1.00,1.00,2.00\n"
        );
        assert_eq!(read_phase_columns(&r.table2_csv(), ["Validation", "Test"]).unwrap(), [vec![80.0, 82.0], vec![70.0, 74.0]]);
    }

    #[test]
    fn table3_orders_patients_naturally_and_leaves_gaps_empty() {
        let r = ExperimentReport {
            repeats: vec![
                outcome(0.0, 0.0, 0.0, &[("patient10", 50.0), ("patient2", 100.0)]),
                outcome(0.0, 0.0, 0.0, &[("patient2", 50.0)]),
            ],
        };
        assert_eq!(
            r.table3_csv(),
            "Model,patient2,patient10\n1,100.00,50.00\n2,50.00,\nAvg,75.00,50.00\nStd,25.00,0.00\n"
        );
    }

    #[test]
    fn comparison_text_reports_small_samples() {
        let c = ColumnComparison::new("A", vec![1.0, 2.0], "B", vec![2.0, 4.0]);
        let text = c.to_text();
        assert!(text.contains("shapiro-wilk A: not computed"));
        assert!(text.contains("student-t: statistic="));
    }

    #[test]
    fn missing_column_is_an_error() {
        assert!(read_phase_columns("Model,Training\n1,2\n", ["Validation", "Test"]).is_err());
        assert!(read_phase_columns("Model,Validation,Test\n1,x,2\n", ["Validation", "Test"]).is_err());
    }
}
