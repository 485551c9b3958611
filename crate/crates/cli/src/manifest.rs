use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Record of one CLI run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the canonical JSON of the effective configuration.
    pub config_digest: String,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub toolkit_version: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &Value, seed: Option<u64>, outputs: Vec<String>) -> Self {
        RunManifest {
            command: command.to_string(),
            config_digest: digest(config),
            seed,
            outputs,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// JSON with object keys sorted at every level and no whitespace.
pub fn canonical(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(v, out);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

pub fn digest(value: &Value) -> String {
    Sha256::digest(canonical(value).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_order_does_not_change_digest() {
        let a: Value = serde_json::from_str(r#"{"m":4,"stop":{"max_frames":10,"min_frame_errors":5},"seed":1}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"seed":1,"stop":{"min_frame_errors":5,"max_frames":10},"m":4}"#).unwrap();
        assert_eq!(digest(&a), digest(&b));
        let c: Value = serde_json::from_str(r#"{"seed":2,"stop":{"min_frame_errors":5,"max_frames":10},"m":4}"#).unwrap();
        assert_ne!(digest(&a), digest(&c));
        assert_eq!(canonical(&a), r#"{"m":4,"seed":1,"stop":{"max_frames":10,"min_frame_errors":5}}"#);
    }
}
