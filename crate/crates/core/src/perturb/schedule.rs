use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kernels::max_severity;
use super::{Family, Level};
use crate::error::{Error, Result};

/// Per-family severity for each of the ten levels.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    severities: BTreeMap<Family, [f64; 10]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    families: BTreeMap<String, FamilyEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyEntry {
    levels: Vec<f64>,
}

impl Schedule {
    /// Validates that each listed family has ten non-decreasing severities
    /// inside its allowed range.
    pub fn new(severities: BTreeMap<Family, [f64; 10]>) -> Result<Self> {
        for (family, levels) in &severities {
            let max = max_severity(*family);
            if levels.iter().any(|s| !(*s >= 0.0 && *s <= max)) {
                return Err(Error::MalformedSchedule(format!("{family}: severity outside [0, {max}]")));
            }
            if levels.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::MalformedSchedule(format!("{family}: severities must not decrease with level")));
            }
        }
        Ok(Self { severities })
    }

    /// Evenly spaced severities `max * level / 10`; a starting point before
    /// calibration.
    pub fn linear() -> Self {
        let severities = Family::ALL
            .into_iter()
            .map(|f| (f, std::array::from_fn(|i| max_severity(f) * (i + 1) as f64 / 10.0)))
            .collect();
        Self { severities }
    }

    pub fn families(&self) -> impl Iterator<Item = Family> + '_ {
        self.severities.keys().copied()
    }

    pub fn severity(&self, family: Family, level: Level) -> Option<f64> {
        self.severities.get(&family).map(|s| s[level.get() as usize - 1])
    }

    pub fn levels(&self, family: Family) -> Option<&[f64; 10]> {
        self.severities.get(&family)
    }

    /// Keep only the given families.
    pub fn restrict(&self, families: &[Family]) -> Self {
        Self {
            severities: self
                .severities
                .iter()
                .filter(|(f, _)| families.contains(f))
                .map(|(f, s)| (*f, *s))
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        let file = ScheduleFile {
            families: self
                .severities
                .iter()
                .map(|(f, s)| (f.name().to_owned(), FamilyEntry { levels: s.to_vec() }))
                .collect(),
        };
        toml::to_string(&file).expect("schedule serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScheduleFile = toml::from_str(text).map_err(|e| Error::MalformedSchedule(e.to_string()))?;
        let mut severities = BTreeMap::new();
        for (name, entry) in file.families {
            let family: Family = name.parse()?;
            let levels: [f64; 10] = entry
                .levels
                .try_into()
                .map_err(|v: Vec<f64>| Error::MalformedSchedule(format!("{name}: {} levels, expected 10", v.len())))?;
            severities.insert(family, levels);
        }
        Self::new(severities)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
