use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::curie::Curie;

/// A node line from `nodes.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: Curie,
    #[serde(default)]
    pub name: String,
    /// Most specific first.
    pub categories: Vec<String>,
    #[serde(default, deserialize_with = "tag_sets")]
    pub properties: BTreeMap<String, BTreeSet<String>>,
    /// Keys this crate does not interpret, kept for round-tripping.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl NodeRecord {
    pub fn new(id: Curie, name: impl Into<String>, categories: &[&str]) -> Self {
        Self {
            id,
            name: name.into(),
            categories: categories.iter().map(|c| c.to_string()).collect(),
            properties: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn with_tag(mut self, key: &str, tag: &str) -> Self {
        self.properties
            .entry(key.to_owned())
            .or_default()
            .insert(tag.to_owned());
        self
    }
}

/// An edge line from `edges.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub subject: Curie,
    pub predicate: String,
    pub object: Curie,
    #[serde(default, deserialize_with = "nullable_map")]
    pub qualifiers: BTreeMap<String, String>,
    #[serde(default)]
    pub source: String,
    /// Set on edges materialized by redundancy expansion.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub derived: bool,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl EdgeRecord {
    pub fn new(subject: Curie, predicate: &str, object: Curie, source: &str) -> Self {
        Self {
            subject,
            predicate: predicate.to_owned(),
            object,
            qualifiers: BTreeMap::new(),
            source: source.to_owned(),
            derived: false,
            extra: BTreeMap::new(),
        }
    }
}

fn nullable_map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, String>, D::Error> {
    Ok(Option::<BTreeMap<String, String>>::deserialize(d)?.unwrap_or_default())
}

/// Reads `{key: [tag, ...]}` rejecting repeated tags under one key.
fn tag_sets<'de, D: Deserializer<'de>>(
    d: D,
) -> Result<BTreeMap<String, BTreeSet<String>>, D::Error> {
    let raw = Option::<BTreeMap<String, Vec<String>>>::deserialize(d)?.unwrap_or_default();
    let mut out = BTreeMap::new();
    for (key, tags) in raw {
        let mut set = BTreeSet::new();
        for tag in tags {
            if !set.insert(tag.clone()) {
                return Err(serde::de::Error::custom(format!(
                    "duplicate tag {tag:?} under property {key:?}"
                )));
            }
        }
        out.insert(key, set);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_line_parses_and_keeps_unknown_keys() {
        let line = r#"{"id":"CHEBI:27953","name":"physostigmine","categories":["biolink:Drug","biolink:ChemicalEntity"],"properties":{"chebi_role":["neurotransmitter_agent"]},"xref":["DB00981"]}"#;
        let node: NodeRecord = serde_json::from_str(line).unwrap();
        assert_eq!(node.id.as_str(), "CHEBI:27953");
        assert!(node.properties["chebi_role"].contains("neurotransmitter_agent"));
        assert!(node.extra.contains_key("xref"));
        let back = serde_json::to_string(&node).unwrap();
        let again: NodeRecord = serde_json::from_str(&back).unwrap();
        assert_eq!(node, again);
    }

    #[test]
    fn duplicate_tags_rejected() {
        let line = r#"{"id":"A:1","categories":["x"],"properties":{"r":["a","a"]}}"#;
        let err = serde_json::from_str::<NodeRecord>(line).unwrap_err();
        assert!(err.to_string().contains("duplicate tag"));
    }

    #[test]
    fn edge_line_parses() {
        let line = r#"{"subject":"CHEBI:8874","predicate":"biolink:treats","object":"MONDO:0004975","qualifiers":{},"source":"drugcentral"}"#;
        let edge: EdgeRecord = serde_json::from_str(line).unwrap();
        assert!(!edge.derived);
        assert_eq!(edge.source, "drugcentral");
        let null_q = r#"{"subject":"A:1","predicate":"p","object":"B:2","qualifiers":null}"#;
        let edge: EdgeRecord = serde_json::from_str(null_q).unwrap();
        assert!(edge.qualifiers.is_empty());
    }
}
