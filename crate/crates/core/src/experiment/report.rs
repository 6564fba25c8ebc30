use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary { mean: f64::NAN, std: f64::NAN, count: 0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std =
            if n < 2 { 0.0 } else { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() };
        Summary { mean, std, count: n }
    }
}

/// Fingerprint of the evaluation mask, showing it only covers original nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskDigest {
    pub size: usize,
    pub max_index: Option<usize>,
    pub num_original_nodes: usize,
    pub only_original_nodes: bool,
    /// SHA-256 of the comma-joined decimal indices.
    pub sha256: String,
}

pub fn mask_digest(mask: &[usize], num_original_nodes: usize) -> MaskDigest {
    let joined = mask.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
    let hash = Sha256::digest(joined.as_bytes());
    let max_index = mask.iter().copied().max();
    MaskDigest {
        size: mask.len(),
        max_index,
        num_original_nodes,
        only_original_nodes: max_index.is_none_or(|m| m < num_original_nodes),
        sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
    }
}

/// Removes every object entry named `timing`, at any depth.
pub fn strip_timing(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.remove("timing");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}
