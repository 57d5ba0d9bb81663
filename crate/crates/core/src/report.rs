//! Machine-readable exports: the replication CSV and the summary object.
//!
//! The CSV column order is fixed and round-trips byte-identically through
//! [`parse_csv`] / [`rows_to_csv`]. Numbers use Rust's shortest-round-trip
//! float formatting.

use serde::Serialize;
use thiserror::Error;

use crate::metrics::{PolicySummary, RunReport};

pub const CSV_HEADER: &str = "scenario_id,seed,policy,objects_total,robot_placed,human_placed,\
missed,corrections,human_interactions,recovery_mean_s,recovery_p95_s,energy_wh,co2e_g,combined_score";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("line {line_no}: {reason}")]
    Malformed { line_no: usize, reason: String },
    #[error("missing or wrong header: expected `{CSV_HEADER}`")]
    BadHeader,
}

/// One replication row, exactly the fields of the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub scenario_id: String,
    pub seed: u64,
    pub policy: String,
    pub objects_total: u64,
    pub robot_placed: u64,
    pub human_placed: u64,
    pub missed: u64,
    pub corrections: u64,
    pub human_interactions: u64,
    pub recovery_mean_s: f64,
    pub recovery_p95_s: f64,
    pub energy_wh: f64,
    pub co2e_g: f64,
    pub combined_score: f64,
}

impl ReportRow {
    pub fn from_report(report: &RunReport) -> Self {
        Self {
            scenario_id: report.scenario_id.clone(),
            seed: report.seed,
            policy: report.policy.clone(),
            objects_total: report.counters.objects_total,
            robot_placed: report.counters.robot_placed,
            human_placed: report.counters.human_placed,
            missed: report.counters.missed,
            corrections: report.counters.corrections,
            human_interactions: report.counters.human_interactions,
            recovery_mean_s: report.recovery.mean_s,
            recovery_p95_s: report.recovery.p95_s,
            energy_wh: report.energy_wh_total,
            co2e_g: report.co2e_g,
            combined_score: report.combined_score,
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario_id,
            self.seed,
            self.policy,
            self.objects_total,
            self.robot_placed,
            self.human_placed,
            self.missed,
            self.corrections,
            self.human_interactions,
            self.recovery_mean_s,
            self.recovery_p95_s,
            self.energy_wh,
            self.co2e_g,
            self.combined_score
        )
    }

    pub fn parse_line(line: &str, line_no: usize) -> Result<Self, ReportError> {
        let malformed = |reason: String| ReportError::Malformed { line_no, reason };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 14 {
            return Err(malformed(format!("expected 14 fields, got {}", fields.len())));
        }
        let uint = |i: usize, name: &str| -> Result<u64, ReportError> {
            fields[i]
                .parse()
                .map_err(|_| malformed(format!("bad integer for {name}: `{}`", fields[i])))
        };
        let num = |i: usize, name: &str| -> Result<f64, ReportError> {
            fields[i]
                .parse()
                .map_err(|_| malformed(format!("bad number for {name}: `{}`", fields[i])))
        };
        Ok(Self {
            scenario_id: fields[0].to_string(),
            seed: uint(1, "seed")?,
            policy: fields[2].to_string(),
            objects_total: uint(3, "objects_total")?,
            robot_placed: uint(4, "robot_placed")?,
            human_placed: uint(5, "human_placed")?,
            missed: uint(6, "missed")?,
            corrections: uint(7, "corrections")?,
            human_interactions: uint(8, "human_interactions")?,
            recovery_mean_s: num(9, "recovery_mean_s")?,
            recovery_p95_s: num(10, "recovery_p95_s")?,
            energy_wh: num(11, "energy_wh")?,
            co2e_g: num(12, "co2e_g")?,
            combined_score: num(13, "combined_score")?,
        })
    }
}

/// Serializes rows under the fixed header, one line per replication.
pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_line());
        out.push('\n');
    }
    out
}

/// Parses a replication CSV produced by [`rows_to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>, ReportError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        _ => return Err(ReportError::BadHeader),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        rows.push(ReportRow::parse_line(line, idx + 2)?);
    }
    Ok(rows)
}

/// The per-run summary object written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub scenario_id: String,
    pub replications: u64,
    pub policies: Vec<PolicySummary>,
}

impl Summary {
    pub fn new(scenario_id: &str, replications: u64, policies: Vec<PolicySummary>) -> Self {
        Self {
            schema_version: crate::scenario::SCHEMA_VERSION,
            scenario_id: scenario_id.to_string(),
            replications,
            policies,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("summary serializes");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> ReportRow {
        ReportRow {
            scenario_id: "reference".into(),
            seed: 42,
            policy: "gresilience".into(),
            objects_total: 120,
            robot_placed: 90,
            human_placed: 22,
            missed: 3,
            corrections: 7,
            human_interactions: 32,
            recovery_mean_s: 4.25,
            recovery_p95_s: 9.5,
            energy_wh: 21.375,
            co2e_g: 10.153125,
            combined_score: 0.6125,
        }
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let mut other = sample_row();
        other.seed = 43;
        other.policy = "threshold:0.7".into();
        other.recovery_mean_s = 0.0;
        let text = rows_to_csv(&[sample_row(), other]);
        let rows = parse_csv(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows_to_csv(&rows), text);
    }

    #[test]
    fn header_is_pinned() {
        assert!(CSV_HEADER.starts_with("scenario_id,seed,policy,"));
        assert!(CSV_HEADER.ends_with(",combined_score"));
        assert_eq!(CSV_HEADER.split(',').count(), 14);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(matches!(parse_csv("not,a,header\n"), Err(ReportError::BadHeader)));
        let text = format!("{CSV_HEADER}\nonly,three,fields\n");
        assert!(matches!(parse_csv(&text), Err(ReportError::Malformed { .. })));
        let bad_seed = format!("{CSV_HEADER}\nref,notanumber,p,0,0,0,0,0,0,0,0,0,0,0\n");
        assert!(parse_csv(&bad_seed).is_err());
    }

    #[test]
    fn empty_body_is_a_valid_csv() {
        let rows = parse_csv(&rows_to_csv(&[])).unwrap();
        assert!(rows.is_empty());
    }
}
