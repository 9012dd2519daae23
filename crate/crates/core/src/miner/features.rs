use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::executor::TrialRecord;
use crate::input::Input;

/// Input features available to constraints, besides MR parameters.
pub const BASE_FEATURES: [&str; 8] = [
    "min_elem",
    "max_elem",
    "mean_elem",
    "list_len",
    "all_nonneg",
    "all_nonpos",
    "has_duplicates",
    "is_sorted",
];

pub const NUMERIC_FEATURES: [&str; 4] = ["min_elem", "max_elem", "mean_elem", "list_len"];
pub const FLAG_FEATURES: [&str; 4] = ["all_nonneg", "all_nonpos", "has_duplicates", "is_sorted"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Flag(bool),
    Num(f64),
}

/// Pre-execution features of one trial: computed from the source input and
/// the parameter binding only. Min, max and mean are undefined on an empty list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub min_elem: Option<f64>,
    pub max_elem: Option<f64>,
    pub mean_elem: Option<f64>,
    pub list_len: f64,
    pub all_nonneg: bool,
    pub all_nonpos: bool,
    pub has_duplicates: bool,
    pub is_sorted: bool,
    pub params: BTreeMap<String, f64>,
}

impl FeatureVector {
    pub fn of_input(input: &Input<f64>, params: &BTreeMap<String, f64>) -> Self {
        let xs = input.values();
        let defined = !xs.is_empty();
        let mut s = xs.to_vec();
        s.sort_by(f64::total_cmp);
        FeatureVector {
            min_elem: defined.then(|| s[0]),
            max_elem: defined.then(|| s[s.len() - 1]),
            // Sum in sorted order so the mean does not depend on element order.
            mean_elem: defined.then(|| s.iter().sum::<f64>() / xs.len() as f64),
            list_len: xs.len() as f64,
            all_nonneg: xs.iter().all(|&x| x >= 0.0),
            all_nonpos: xs.iter().all(|&x| x <= 0.0),
            has_duplicates: s.windows(2).any(|w| w[0] == w[1]),
            is_sorted: xs.windows(2).all(|w| w[0] <= w[1]),
            params: params.clone(),
        }
    }

    pub fn extract(record: &TrialRecord) -> Self {
        Self::of_input(&record.source_input, &record.param_binding)
    }

    /// `None` for unknown names and for undefined numeric features.
    pub fn get(&self, name: &str) -> Option<FeatureValue> {
        use FeatureValue::{Flag, Num};
        match name {
            "min_elem" => self.min_elem.map(Num),
            "max_elem" => self.max_elem.map(Num),
            "mean_elem" => self.mean_elem.map(Num),
            "list_len" => Some(Num(self.list_len)),
            "all_nonneg" => Some(Flag(self.all_nonneg)),
            "all_nonpos" => Some(Flag(self.all_nonpos)),
            "has_duplicates" => Some(Flag(self.has_duplicates)),
            "is_sorted" => Some(Flag(self.is_sorted)),
            p => self.params.get(p).copied().map(Num),
        }
    }

    /// Flat `name -> value` map, undefined features as `null`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        for f in BASE_FEATURES {
            m.insert(f.into(), serde_json::to_value(self.get(f)).expect("feature serializes"));
        }
        for (k, v) in &self.params {
            m.insert(k.clone(), (*v).into());
        }
        serde_json::Value::Object(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(xs: &[f64], params: &[(&str, f64)]) -> FeatureVector {
        let p = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        FeatureVector::of_input(&Input::List(xs.to_vec()), &p)
    }

    #[test]
    fn examples() {
        let f = fv(&[1.0, 2.0, 3.0], &[("c", 1.0)]);
        assert_eq!(f.min_elem, Some(1.0));
        assert_eq!(f.max_elem, Some(3.0));
        assert_eq!(f.mean_elem, Some(2.0));
        assert_eq!(f.list_len, 3.0);
        assert!(f.all_nonneg && !f.all_nonpos && f.is_sorted && !f.has_duplicates);
        assert_eq!(f.get("c"), Some(FeatureValue::Num(1.0)));

        let e = fv(&[], &[]);
        assert_eq!(e.list_len, 0.0);
        assert_eq!(e.get("min_elem"), None);
        assert_eq!(e.get("max_elem"), None);

        let m = fv(&[-1.0, 1.0], &[]);
        assert!(!m.all_nonneg && !m.all_nonpos);
        assert!(fv(&[2.0, 1.0, 2.0], &[]).has_duplicates);
        assert!(!fv(&[2.0, 1.0], &[]).is_sorted);
    }

    #[test]
    fn json_shape() {
        let j = fv(&[], &[("c", 2.5)]).to_json();
        assert_eq!(j["min_elem"], serde_json::Value::Null);
        assert_eq!(j["list_len"], 0.0);
        assert_eq!(j["all_nonneg"], true);
        assert_eq!(j["c"], 2.5);
    }
}
