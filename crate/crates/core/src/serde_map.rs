//! Serializes integer-keyed maps as sorted `[key, value]` pairs, since JSON
//! object keys must be strings.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn serialize<K, V, Ser>(map: &BTreeMap<K, V>, s: Ser) -> Result<Ser::Ok, Ser::Error>
where
    K: Serialize + Ord,
    V: Serialize,
    Ser: Serializer,
{
    s.collect_seq(map.iter())
}

pub fn deserialize<'de, K, V, D>(d: D) -> Result<BTreeMap<K, V>, D::Error>
where
    K: Deserialize<'de> + Ord,
    V: Deserialize<'de>,
    D: Deserializer<'de>,
{
    Ok(Vec::<(K, V)>::deserialize(d)?.into_iter().collect())
}
