//! Trial-level records as collected by the vignette task.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::wiener::Boundary;

/// Scenario class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Epistemic,
    Social,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::Epistemic, Condition::Social];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Epistemic => "epistemic",
            Condition::Social => "social",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "epistemic" => Ok(Condition::Epistemic),
            "social" => Ok(Condition::Social),
            other => Err(format!("unknown condition {other:?}")),
        }
    }
}

/// Binary decision. The AI option is the lower diffusion boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Ai,
    Human,
}

impl Choice {
    pub fn boundary(self) -> Boundary {
        match self {
            Choice::Ai => Boundary::Lower,
            Choice::Human => Boundary::Upper,
        }
    }

    pub fn from_boundary(b: Boundary) -> Self {
        match b {
            Boundary::Lower => Choice::Ai,
            Boundary::Upper => Choice::Human,
        }
    }
}

/// One participant decision. Reaction times are whole milliseconds at the
/// file boundary; the numeric core works in seconds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub subject_id: String,
    pub scenario_id: u32,
    pub condition: Condition,
    pub choice: Choice,
    pub rt_ms: u64,
    pub slider: u8,
}

impl TrialRecord {
    pub fn rt_seconds(&self) -> f64 {
        self.rt_ms as f64 / 1000.0
    }
}

/// Dense position of a trial in the model's subject/scenario arrays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialIndex {
    pub subject: usize,
    pub scenario: usize,
    /// Carried along for post-hoc contrasts; never enters the likelihood.
    pub condition: Condition,
}

/// Validated trials plus stable index maps: subjects sorted
/// lexicographically, scenarios numerically.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialSet {
    pub records: Vec<TrialRecord>,
    pub subjects: Vec<String>,
    pub scenarios: Vec<u32>,
}

impl TrialSet {
    pub fn new(records: Vec<TrialRecord>) -> Self {
        let mut subjects: Vec<String> = records.iter().map(|r| r.subject_id.clone()).collect();
        subjects.sort();
        subjects.dedup();
        let mut scenarios: Vec<u32> = records.iter().map(|r| r.scenario_id).collect();
        scenarios.sort_unstable();
        scenarios.dedup();
        TrialSet {
            records,
            subjects,
            scenarios,
        }
    }

    pub fn subject_index(&self, id: &str) -> Option<usize> {
        self.subjects.binary_search_by(|s| s.as_str().cmp(id)).ok()
    }

    pub fn scenario_index(&self, id: u32) -> Option<usize> {
        self.scenarios.binary_search(&id).ok()
    }

    pub fn index_of(&self, record: &TrialRecord) -> Option<TrialIndex> {
        Some(TrialIndex {
            subject: self.subject_index(&record.subject_id)?,
            scenario: self.scenario_index(record.scenario_id)?,
            condition: record.condition,
        })
    }

    /// Records paired with their dense indices.
    pub fn indexed(&self) -> Vec<(TrialRecord, TrialIndex)> {
        self.records
            .iter()
            .map(|r| (r.clone(), self.index_of(r).expect("record indexed by construction")))
            .collect()
    }

    /// Condition of each scenario as recorded in the trials (first seen wins).
    pub fn scenario_conditions(&self) -> BTreeMap<u32, Condition> {
        let mut out = BTreeMap::new();
        for r in &self.records {
            out.entry(r.scenario_id).or_insert(r.condition);
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(s: &str, k: u32) -> TrialRecord {
        TrialRecord {
            subject_id: s.into(),
            scenario_id: k,
            condition: Condition::Social,
            choice: Choice::Human,
            rt_ms: 3000,
            slider: 70,
        }
    }

    #[test]
    fn index_maps_ignore_row_order() {
        let a = TrialSet::new(vec![rec("b", 3), rec("a", 10), rec("c", 1)]);
        let b = TrialSet::new(vec![rec("c", 1), rec("b", 3), rec("a", 10)]);
        assert_eq!(a.subjects, b.subjects);
        assert_eq!(a.scenarios, vec![1, 3, 10]);
        assert_eq!(a.subjects, vec!["a", "b", "c"]);
        assert_eq!(a.index_of(&rec("b", 10)).unwrap().subject, 1);
        assert_eq!(a.index_of(&rec("b", 10)).unwrap().scenario, 2);
    }
}
