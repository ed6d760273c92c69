//! Verification reports: one entry per checked invariant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

/// Acceptance rule of an entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bound {
    AtMost { threshold: f64 },
    /// Negative controls: the value must be large.
    AtLeast { threshold: f64 },
    /// Refinement ratios.
    Within { lo: f64, hi: f64 },
}

impl Bound {
    /// NaN never passes.
    pub fn admits(&self, value: f64) -> bool {
        match *self {
            Bound::AtMost { threshold } => value <= threshold,
            Bound::AtLeast { threshold } => value >= threshold,
            Bound::Within { lo, hi } => value >= lo && value <= hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub module: String,
    /// Acceptance criterion the entry belongs to, when run by the suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<u8>,
    #[serde(with = "nonfinite")]
    pub value: f64,
    pub bound: Bound,
    pub pass: bool,
}

/// Residuals of one check on successively refined grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTable {
    pub name: String,
    pub steps: Vec<f64>,
    pub values: Vec<f64>,
    /// `values[k] / values[k + 1]`.
    pub ratios: Vec<f64>,
}

impl RefinementTable {
    pub fn new(name: impl Into<String>, steps: Vec<f64>, values: Vec<f64>) -> Self {
        let ratios = values.windows(2).map(|w| w[0] / w[1]).collect();
        Self {
            name: name.into(),
            steps,
            values,
            ratios,
        }
    }
}

/// JSON has no infinities or NaN; they are written as the strings `"inf"`,
/// `"-inf"` and `"nan"`.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => t.parse::<f64>().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub scenario: serde_json::Value,
    pub entries: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<RefinementTable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Seconds per stage. Left out unless requested, so that identical
    /// inputs give identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<BTreeMap<String, f64>>,
    pub pass: bool,
}

impl Report {
    pub fn new(scenario: serde_json::Value) -> Self {
        Self {
            schema: SCHEMA,
            scenario,
            entries: Vec::new(),
            tables: Vec::new(),
            notes: Vec::new(),
            timing: None,
            pass: true,
        }
    }

    pub fn push(&mut self, module: &str, name: impl Into<String>, value: f64, bound: Bound) -> &mut Entry {
        let pass = bound.admits(value);
        self.pass &= pass;
        self.entries.push(Entry {
            name: name.into(),
            module: module.into(),
            criterion: None,
            value,
            bound,
            pass,
        });
        self.entries.last_mut().expect("just pushed")
    }

    pub fn at_most(&mut self, module: &str, name: impl Into<String>, value: f64, threshold: f64) -> &mut Entry {
        self.push(module, name, value, Bound::AtMost { threshold })
    }

    pub fn at_least(&mut self, module: &str, name: impl Into<String>, value: f64, threshold: f64) -> &mut Entry {
        self.push(module, name, value, Bound::AtLeast { threshold })
    }

    pub fn within(&mut self, module: &str, name: impl Into<String>, value: f64, range: [f64; 2]) -> &mut Entry {
        self.push(module, name, value, Bound::Within { lo: range[0], hi: range[1] })
    }

    pub fn time(&mut self, stage: &str, seconds: f64) {
        self.timing.get_or_insert_with(BTreeMap::new).insert(stage.into(), seconds);
    }

    /// Appends `other`, keeping its entries, tables, notes and timings.
    pub fn absorb(&mut self, other: Report) {
        self.pass &= other.pass;
        self.entries.extend(other.entries);
        self.tables.extend(other.tables);
        self.notes.extend(other.notes);
        if let Some(t) = other.timing {
            self.timing.get_or_insert_with(BTreeMap::new).extend(t);
        }
    }

    /// Recomputes `pass` from the entries.
    pub fn recompute(&mut self) {
        self.pass = self.entries.iter().all(|e| e.pass);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialise");
        s.push('\n');
        s
    }

    /// One line per entry.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let rule = match e.bound {
                Bound::AtMost { threshold } => format!("<= {threshold:.1e}"),
                Bound::AtLeast { threshold } => format!(">= {threshold:.1e}"),
                Bound::Within { lo, hi } => format!("in [{lo}, {hi}]"),
            };
            out += &format!(
                "{} {:<11} {:<48} {:>12.4e} {}\n",
                if e.pass { "PASS" } else { "FAIL" },
                e.module,
                e.name,
                e.value,
                rule
            );
        }
        out
    }
}
