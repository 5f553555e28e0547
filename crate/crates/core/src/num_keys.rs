//! Integer-keyed maps as JSON objects. Inside internally tagged enums serde
//! buffers the input and hands map keys over as strings, which integer keys reject.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::types::EntityId;

pub trait NumKey: Ord + Sized {
    fn parse_key(s: &str) -> Option<Self>;
}

impl NumKey for u32 {
    fn parse_key(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl NumKey for EntityId {
    fn parse_key(s: &str) -> Option<Self> {
        s.parse().ok().map(EntityId)
    }
}

pub fn serialize<K: Serialize, V: Serialize, S: Serializer>(m: &BTreeMap<K, V>, s: S) -> Result<S::Ok, S::Error> {
    m.serialize(s)
}

pub fn deserialize<'de, K, V, D>(d: D) -> Result<BTreeMap<K, V>, D::Error>
where
    K: NumKey,
    V: Deserialize<'de>,
    D: Deserializer<'de>,
{
    BTreeMap::<String, V>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| match K::parse_key(&k) {
            Some(k) => Ok((k, v)),
            None => Err(D::Error::custom(format!("bad integer key `{k}`"))),
        })
        .collect()
}
