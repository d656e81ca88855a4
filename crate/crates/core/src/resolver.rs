//! Name-to-curie lookup.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::curie::Curie;
use crate::store::Store;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Exact,
    Prefix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameMatch {
    pub curie: Curie,
    pub name: String,
    pub match_kind: MatchKind,
}

/// Anything that can turn free text into candidate curies.
pub trait NameResolver: Send + Sync {
    /// Exact matches first, then prefix matches, each group sorted by curie,
    /// at most `limit` in total.
    fn resolve(&self, text: &str, limit: usize) -> Vec<NameMatch>;
}

/// Case-folded, trimmed, whitespace collapsed.
pub fn normalize(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// In-memory index over the node names of a store.
#[derive(Debug, Clone, Default)]
pub struct LocalResolver {
    index: BTreeMap<String, Vec<(Curie, String)>>,
}

impl LocalResolver {
    pub fn from_store(store: &Store) -> Self {
        Self::from_names(store.nodes().iter().map(|n| (n.id.clone(), n.name.clone())))
    }

    pub fn from_names(names: impl IntoIterator<Item = (Curie, String)>) -> Self {
        let mut index: BTreeMap<String, Vec<(Curie, String)>> = BTreeMap::new();
        for (id, name) in names {
            let key = normalize(&name);
            if !key.is_empty() {
                index.entry(key).or_default().push((id, name));
            }
        }
        for list in index.values_mut() {
            list.sort();
            list.dedup();
        }
        Self { index }
    }

    pub fn len(&self) -> usize {
        self.index.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

impl NameResolver for LocalResolver {
    fn resolve(&self, text: &str, limit: usize) -> Vec<NameMatch> {
        let key = normalize(text);
        if key.is_empty() || limit == 0 {
            return Vec::new();
        }
        let mut exact: Vec<&(Curie, String)> = self.index.get(&key).into_iter().flatten().collect();
        let mut prefix: Vec<&(Curie, String)> = self
            .index
            .range(key.clone()..)
            .skip_while(|(k, _)| **k == key)
            .take_while(|(k, _)| k.starts_with(&key))
            .flat_map(|(_, v)| v)
            .collect();
        exact.sort();
        prefix.sort();
        let tag = |kind| {
            move |(curie, name): &(Curie, String)| NameMatch {
                curie: curie.clone(),
                name: name.clone(),
                match_kind: kind,
            }
        };
        exact
            .into_iter()
            .map(tag(MatchKind::Exact))
            .chain(prefix.into_iter().map(tag(MatchKind::Prefix)))
            .take(limit)
            .collect()
    }
}
