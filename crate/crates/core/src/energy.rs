//! Energy bookkeeping per consumer and conversion to CO2-equivalent grams
//! through a configured carbon intensity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const JOULES_PER_KWH: f64 = 3.6e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("{field} must be nonnegative and finite, got {value}")]
    InvalidQuantity { field: &'static str, value: f64 },
}

/// What consumed the energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySource {
    Arm,
    Compute,
    Conveyor,
    /// Machine energy spent supporting human classification: the conveyor
    /// running at reduced speed while an uncertain object is resolved. Human
    /// metabolic energy is out of scope.
    HumanAid,
}

impl EnergySource {
    pub const ALL: [EnergySource; 4] = [
        EnergySource::Arm,
        EnergySource::Compute,
        EnergySource::Conveyor,
        EnergySource::HumanAid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnergySource::Arm => "arm",
            EnergySource::Compute => "compute",
            EnergySource::Conveyor => "conveyor",
            EnergySource::HumanAid => "human_aid",
        }
    }
}

impl std::fmt::Display for EnergySource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EnergySource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arm" => Ok(EnergySource::Arm),
            "compute" => Ok(EnergySource::Compute),
            "conveyor" => Ok(EnergySource::Conveyor),
            "human_aid" => Ok(EnergySource::HumanAid),
            other => Err(format!("unknown energy source `{other}`")),
        }
    }
}

/// One metered consumption interval; `joules = power_w * duration_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyEntry {
    pub source: EnergySource,
    pub power_w: f64,
    pub duration_s: f64,
    pub joules: f64,
}

/// Append-only list of consumption entries for one simulation run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnergyLedger {
    entries: Vec<EnergyEntry>,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one entry, deriving its joules.
    pub fn record(
        &mut self,
        source: EnergySource,
        power_w: f64,
        duration_s: f64,
    ) -> Result<EnergyEntry, EnergyError> {
        if !power_w.is_finite() || power_w < 0.0 {
            return Err(EnergyError::InvalidQuantity {
                field: "power_w",
                value: power_w,
            });
        }
        if !duration_s.is_finite() || duration_s < 0.0 {
            return Err(EnergyError::InvalidQuantity {
                field: "duration_s",
                value: duration_s,
            });
        }
        let entry = EnergyEntry {
            source,
            power_w,
            duration_s,
            joules: power_w * duration_s,
        };
        self.entries.push(entry);
        Ok(entry)
    }

    pub fn entries(&self) -> &[EnergyEntry] {
        &self.entries
    }

    pub fn total_joules(&self) -> f64 {
        self.entries.iter().map(|e| e.joules).sum()
    }

    pub fn joules_by_source(&self) -> BTreeMap<EnergySource, f64> {
        let mut totals: BTreeMap<EnergySource, f64> =
            EnergySource::ALL.iter().map(|&s| (s, 0.0)).collect();
        for e in &self.entries {
            *totals.get_mut(&e.source).expect("all sources present") += e.joules;
        }
        totals
    }

    /// Converts the ledger totals to a CO2-equivalent report at the given
    /// carbon intensity (grams CO2e per kWh).
    pub fn co2e(&self, carbon_intensity_g_per_kwh: f64) -> Result<Co2Report, EnergyError> {
        if !carbon_intensity_g_per_kwh.is_finite() || carbon_intensity_g_per_kwh < 0.0 {
            return Err(EnergyError::InvalidQuantity {
                field: "carbon_intensity_g_per_kwh",
                value: carbon_intensity_g_per_kwh,
            });
        }
        let joules_by_source = self.joules_by_source();
        let total_joules = self.total_joules();
        let total_kwh = total_joules / JOULES_PER_KWH;
        Ok(Co2Report {
            joules_by_source,
            total_joules,
            total_kwh,
            co2e_g: total_kwh * carbon_intensity_g_per_kwh,
            carbon_intensity_g_per_kwh,
        })
    }
}

/// Energy totals and their CO2-equivalent footprint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Co2Report {
    pub joules_by_source: BTreeMap<EnergySource, f64>,
    pub total_joules: f64,
    pub total_kwh: f64,
    pub co2e_g: f64,
    pub carbon_intensity_g_per_kwh: f64,
}

impl Co2Report {
    pub fn wh_for(&self, source: EnergySource) -> f64 {
        self.joules_by_source.get(&source).copied().unwrap_or(0.0) / 3600.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_derives_joules() {
        let mut ledger = EnergyLedger::new();
        let e = ledger.record(EnergySource::Arm, 60.0, 2.0).unwrap();
        assert_eq!(e.joules, 120.0);
        assert_eq!(ledger.total_joules(), 120.0);
    }

    #[test]
    fn zero_power_or_duration_is_zero_energy() {
        let mut ledger = EnergyLedger::new();
        assert_eq!(ledger.record(EnergySource::Arm, 0.0, 100.0).unwrap().joules, 0.0);
        assert_eq!(ledger.record(EnergySource::Conveyor, 30.0, 0.0).unwrap().joules, 0.0);
    }

    #[test]
    fn negative_inputs_are_rejected() {
        let mut ledger = EnergyLedger::new();
        assert!(ledger.record(EnergySource::Arm, -1.0, 2.0).is_err());
        assert!(ledger.record(EnergySource::Arm, 1.0, -2.0).is_err());
        assert!(ledger.record(EnergySource::Arm, f64::NAN, 2.0).is_err());
        assert!(ledger.co2e(-5.0).is_err());
    }

    #[test]
    fn one_kwh_at_grid_average() {
        let mut ledger = EnergyLedger::new();
        ledger.record(EnergySource::Compute, 1000.0, 3600.0).unwrap();
        let report = ledger.co2e(475.0).unwrap();
        assert_eq!(report.total_joules, 3.6e6);
        assert_eq!(report.total_kwh, 1.0);
        assert_eq!(report.co2e_g, 475.0);
    }

    #[test]
    fn small_ledger_hand_arithmetic() {
        let mut ledger = EnergyLedger::new();
        ledger.record(EnergySource::Arm, 60.0, 2.0).unwrap();
        let report = ledger.co2e(475.0).unwrap();
        assert!((report.co2e_g - 120.0 / 3.6e6 * 475.0).abs() < 1e-9);
        assert!((report.co2e_g - 0.015833333333).abs() < 1e-9);
    }

    #[test]
    fn zero_intensity_means_zero_grams() {
        let mut ledger = EnergyLedger::new();
        ledger.record(EnergySource::HumanAid, 120.0, 55.0).unwrap();
        assert_eq!(ledger.co2e(0.0).unwrap().co2e_g, 0.0);
    }

    #[test]
    fn disjoint_ledgers_add() {
        let mut a = EnergyLedger::new();
        a.record(EnergySource::Arm, 60.0, 2.0).unwrap();
        a.record(EnergySource::Compute, 40.0, 1.5).unwrap();
        let mut b = EnergyLedger::new();
        b.record(EnergySource::Conveyor, 120.0, 600.0).unwrap();
        let mut joined = a.clone();
        for e in b.entries() {
            joined.record(e.source, e.power_w, e.duration_s).unwrap();
        }
        let got = joined.co2e(475.0).unwrap().co2e_g;
        let want = a.co2e(475.0).unwrap().co2e_g + b.co2e(475.0).unwrap().co2e_g;
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn appending_never_decreases_totals() {
        let mut ledger = EnergyLedger::new();
        let mut last = 0.0;
        for i in 0..50 {
            ledger.record(EnergySource::ALL[i % 4], i as f64, 0.5).unwrap();
            let total = ledger.total_joules();
            assert!(total >= last);
            last = total;
        }
    }

    #[test]
    fn by_source_partition_sums_to_total() {
        let mut ledger = EnergyLedger::new();
        ledger.record(EnergySource::Arm, 60.0, 2.0).unwrap();
        ledger.record(EnergySource::Arm, 60.0, 3.0).unwrap();
        ledger.record(EnergySource::Compute, 40.0, 1.0).unwrap();
        let by_source = ledger.joules_by_source();
        assert_eq!(by_source[&EnergySource::Arm], 300.0);
        assert_eq!(by_source[&EnergySource::HumanAid], 0.0);
        let sum: f64 = by_source.values().sum();
        assert!((sum - ledger.total_joules()).abs() < 1e-12);
    }
}
