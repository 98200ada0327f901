//! Seeded experiment records written as JSON.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Inputs, measurements and reference values of one experiment. Maps are
/// ordered so the same run serializes to the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub parameters: BTreeMap<String, Value>,
    pub seed: u64,
    pub measured: BTreeMap<String, Value>,
    /// Keyed like `measured` where a reference exists.
    pub references: BTreeMap<String, Value>,
    pub wall_clock_seconds: f64,
    pub version: String,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            parameters: BTreeMap::new(),
            seed,
            measured: BTreeMap::new(),
            references: BTreeMap::new(),
            wall_clock_seconds: 0.0,
            version: VERSION.to_string(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Result<Self> {
        self.parameters.insert(key.to_string(), to_value(value)?);
        Ok(self)
    }

    pub fn measure(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.measured.insert(key.to_string(), to_value(value)?);
        Ok(())
    }

    /// Records a measured value together with its reference.
    pub fn compare(&mut self, key: &str, measured: impl Serialize, reference: impl Serialize) -> Result<()> {
        self.measure(key, measured)?;
        self.references.insert(key.to_string(), to_value(reference)?);
        Ok(())
    }

    /// References whose key has no measured value.
    pub fn unpaired_references(&self) -> Vec<&str> {
        self.references.keys().filter(|k| !self.measured.contains_key(*k)).map(String::as_str).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(format!("report serialization: {e}")))
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_json()?.as_bytes())?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        serde_json::from_reader(input).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })
    }
}

fn to_value(value: impl Serialize) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| Error::Numerical(format!("report value: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new("cheb", 3).param("ell", 3).unwrap().param("eps", 0.25).unwrap();
        r.compare("w1", 2.0 / 3.0, 2.0 / 3.0).unwrap();
        r.measure("atoms", vec![(0.5, 0.25), (-1.0, 0.75)]).unwrap();
        r.wall_clock_seconds = 0.125;
        r
    }

    #[test]
    fn round_trip_is_lossless() {
        let r = sample();
        let back = ExperimentReport::read_json(r.to_json().unwrap().as_bytes()).unwrap();
        assert_eq!(back, r);
        let w1 = back.measured["w1"].as_f64().unwrap();
        assert_eq!(w1.to_bits(), (2.0f64 / 3.0).to_bits());
    }

    #[test]
    fn same_content_same_bytes() {
        let mut a = sample();
        let mut b = ExperimentReport::new("cheb", 3).param("eps", 0.25).unwrap().param("ell", 3).unwrap();
        b.measure("atoms", vec![(0.5, 0.25), (-1.0, 0.75)]).unwrap();
        b.compare("w1", 2.0 / 3.0, 2.0 / 3.0).unwrap();
        a.wall_clock_seconds = 0.0;
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert!(a.unpaired_references().is_empty());
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(ExperimentReport::read_json(&b"{\"experiment\": 1}"[..]), Err(Error::Parse { .. })));
    }
}
