use std::fmt;
use std::hash::Hasher;
use std::str::FromStr;

use fnv::FnvHasher;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::task::WorldState;

/// Floats are hashed as round(x * 1e9).
pub const FLOAT_QUANTUM: f64 = 1e9;

/// 64-bit FNV-1a digest of a canonical world serialization. Written as 16 hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateHash(pub u64);

impl fmt::Display for StateHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for StateHash {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s, 16).map(StateHash)
    }
}

impl Serialize for StateHash {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateHash {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serialize with sorted object keys and quantized floats.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let q = (n.as_f64().unwrap_or(0.0) * FLOAT_QUANTUM).round() as i64;
                out.push_str(&format!("{q}q"));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
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
    }
}

pub fn hash_value(value: &Value) -> StateHash {
    let mut h = FnvHasher::default();
    h.write(canonical_json(value).as_bytes());
    StateHash(h.finish())
}

pub fn snapshot_hash(world: &WorldState) -> StateHash {
    hash_value(&serde_json::to_value(world).expect("world state serializes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn key_order_and_float_noise_do_not_matter() {
        let a = json!({"b": 1.0, "a": [1, 2.5]});
        let b = json!({"a": [1, 2.5000000000001], "b": 1.0});
        assert_eq!(hash_value(&a), hash_value(&b));
        assert_ne!(hash_value(&a), hash_value(&json!({"a": [1, 2.5], "b": 1.1})));
    }

    #[test]
    fn hex_round_trip() {
        let h = StateHash(0xdead_beef);
        assert_eq!(h.to_string(), "00000000deadbeef");
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(serde_json::from_str::<StateHash>(&s).unwrap(), h);
    }
}
