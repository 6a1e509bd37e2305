use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Condition;
use crate::error::{Error, Result};

/// One vignette as shipped in the scenario file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioLabel {
    pub id: u32,
    pub text_es: String,
    pub text_en: String,
    pub condition: Condition,
}

/// Scenario id to condition, each id labelled exactly once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScenarioLabeling {
    entries: BTreeMap<u32, ScenarioLabel>,
}

impl ScenarioLabeling {
    pub fn new(labels: Vec<ScenarioLabel>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for l in labels {
            let id = l.id;
            if entries.insert(id, l).is_some() {
                return Err(Error::Config(format!("scenario {id} labelled more than once")));
            }
        }
        Ok(ScenarioLabeling { entries })
    }

    /// Labels without texts.
    pub fn from_conditions(pairs: impl IntoIterator<Item = (u32, Condition)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(id, condition)| ScenarioLabel {
                    id,
                    text_es: String::new(),
                    text_en: String::new(),
                    condition,
                })
                .collect(),
        )
    }

    /// Parses a JSON array of `{id, text_es, text_en, condition}`.
    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn condition(&self, id: u32) -> Result<Condition> {
        self.entries
            .get(&id)
            .map(|l| l.condition)
            .ok_or_else(|| Error::Config(format!("scenario {id} has no condition label")))
    }

    pub fn get(&self, id: u32) -> Option<&ScenarioLabel> {
        self.entries.get(&id)
    }

    /// Scenario ids of one condition, ascending.
    pub fn members(&self, condition: Condition) -> Vec<u32> {
        self.entries
            .values()
            .filter(|l| l.condition == condition)
            .map(|l| l.id)
            .collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        let list: Vec<&ScenarioLabel> = self.entries.values().collect();
        Ok(serde_json::to_string_pretty(&list)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_ids_rejected() {
        let err = ScenarioLabeling::from_conditions([(1, Condition::Social), (1, Condition::Epistemic)]);
        assert!(err.is_err());
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"[{"id": 2, "text_es": "hola", "text_en": "hi", "condition": "epistemic"},
                       {"id": 1, "text_es": "", "text_en": "", "condition": "social"}]"#;
        let l = ScenarioLabeling::from_json(text).unwrap();
        assert_eq!(l.members(Condition::Epistemic), vec![2]);
        assert_eq!(ScenarioLabeling::from_json(&l.to_json().unwrap()).unwrap(), l);
        assert!(l.condition(3).is_err());
    }
}
