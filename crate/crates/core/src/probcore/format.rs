//! JSON distribution file format:
//!
//! ```json
//! {"variables": ["X", "Y"],
//!  "alphabets": {"X": [0, 1], "Y": [0, 1]},
//!  "mass": [{"point": [0, 0], "p": 0.5}, {"point": [1, 1], "p": 0.5}]}
//! ```
//!
//! Labels may be strings or numbers; numbers are compared by their JSON text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{make_joint, JointDist, ProbError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistFile {
    pub variables: Vec<String>,
    pub alphabets: BTreeMap<String, Vec<Value>>,
    pub mass: Vec<MassEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassEntry {
    pub point: Vec<Value>,
    pub p: f64,
}

fn label_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn label_value(s: &str) -> Value {
    match s.parse::<i64>() {
        Ok(i) if i.to_string() == s => Value::from(i),
        _ => Value::from(s),
    }
}

impl DistFile {
    pub fn into_joint(self) -> Result<JointDist> {
        let mut alphabets = Vec::with_capacity(self.variables.len());
        for v in &self.variables {
            let labels = self
                .alphabets
                .get(v)
                .ok_or_else(|| ProbError::Format(format!("alphabets: missing entry for variable `{v}`")))?;
            let mut out = Vec::with_capacity(labels.len());
            for (i, l) in labels.iter().enumerate() {
                let t = label_text(l).ok_or_else(|| {
                    ProbError::Format(format!("alphabets.{v}[{i}]: label must be a string or number"))
                })?;
                if out.contains(&t) {
                    return Err(ProbError::Format(format!("alphabets.{v}[{i}]: duplicate label `{t}`")));
                }
                out.push(t);
            }
            alphabets.push(out);
        }
        let mut entries = Vec::with_capacity(self.mass.len());
        for (m, e) in self.mass.iter().enumerate() {
            if e.point.len() != self.variables.len() {
                return Err(ProbError::Format(format!(
                    "mass[{m}].point: expected {} labels, found {}",
                    self.variables.len(),
                    e.point.len()
                )));
            }
            let mut idx = Vec::with_capacity(e.point.len());
            for (k, l) in e.point.iter().enumerate() {
                let t = label_text(l).ok_or_else(|| {
                    ProbError::Format(format!("mass[{m}].point[{k}]: label must be a string or number"))
                })?;
                let i = alphabets[k].iter().position(|a| *a == t).ok_or_else(|| {
                    ProbError::Format(format!(
                        "mass[{m}].point[{k}]: unknown label `{t}` for variable `{}`",
                        self.variables[k]
                    ))
                })?;
                idx.push(i);
            }
            if e.p < 0.0 {
                return Err(ProbError::Format(format!("mass[{m}].p: negative probability {}", e.p)));
            }
            entries.push((idx, e.p));
        }
        make_joint(self.variables, alphabets, entries)
    }

    pub fn from_joint(j: &JointDist) -> Self {
        DistFile {
            variables: j.variables().to_vec(),
            alphabets: j
                .variables()
                .iter()
                .zip(j.alphabets())
                .map(|(v, a)| (v.clone(), a.iter().map(|l| label_value(l)).collect()))
                .collect(),
            mass: j
                .iter()
                .map(|(pt, p)| MassEntry {
                    point: j.labels_of(pt).into_iter().map(label_value).collect(),
                    p,
                })
                .collect(),
        }
    }
}

impl JointDist {
    /// Parses the JSON distribution format; syntax errors carry line and
    /// column, semantic errors name the offending field.
    pub fn from_json_str(s: &str) -> Result<JointDist> {
        let f: DistFile = serde_json::from_str(s).map_err(|e| ProbError::Format(e.to_string()))?;
        f.into_joint()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&DistFile::from_joint(self)).expect("serializable")
    }
}
