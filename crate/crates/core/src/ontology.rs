//! Predicate and category hierarchies.
//!
//! An ontology is a DAG of identifiers. Ancestor sets are closed once at
//! construction so membership tests during querying are a binary search.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OntologyKind {
    Predicate,
    Category,
}

impl fmt::Display for OntologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OntologyKind::Predicate => "predicate",
            OntologyKind::Category => "category",
        })
    }
}

/// Dense handle for an ontology term.
pub type TermId = u32;

#[derive(Debug, Clone)]
pub struct Ontology {
    kind: OntologyKind,
    names: Vec<String>,
    index: HashMap<String, TermId>,
    parents: Vec<Vec<TermId>>,
    roots: BTreeSet<TermId>,
    /// Strict ancestors, sorted by id.
    ancestors: Vec<Vec<TermId>>,
    children: Vec<Vec<TermId>>,
}

impl Ontology {
    /// Builds an ontology from a parent map plus declared roots.
    ///
    /// Every parent must itself be a key or a declared root, and the graph
    /// must be acyclic.
    pub fn new(
        kind: OntologyKind,
        parents: BTreeMap<String, Vec<String>>,
        roots: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let roots: BTreeSet<String> = roots.into_iter().collect();
        let err = |message: String| Error::Ontology {
            kind: kind.to_string(),
            message,
        };

        let mut all: BTreeSet<&str> = parents.keys().map(String::as_str).collect();
        all.extend(roots.iter().map(String::as_str));
        let names: Vec<String> = all.into_iter().map(str::to_owned).collect();
        let index: HashMap<String, TermId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as TermId))
            .collect();

        let mut parent_ids = vec![Vec::new(); names.len()];
        for (child, ps) in &parents {
            let cid = index[child];
            if roots.contains(child) && !ps.is_empty() {
                return Err(err(format!("declared root {child} has parents")));
            }
            for p in ps {
                let pid = *index
                    .get(p)
                    .ok_or_else(|| err(format!("{child} names undeclared parent {p}")))?;
                if !parent_ids[cid as usize].contains(&pid) {
                    parent_ids[cid as usize].push(pid);
                }
            }
        }

        let order =
            topological_order(&names, &parent_ids).map_err(|cycle| Error::OntologyCycle {
                kind: kind.to_string(),
                cycle,
            })?;

        let mut ancestors: Vec<Vec<TermId>> = vec![Vec::new(); names.len()];
        for &node in &order {
            let mut acc = BTreeSet::new();
            for &p in &parent_ids[node as usize] {
                acc.insert(p);
                acc.extend(ancestors[p as usize].iter().copied());
            }
            ancestors[node as usize] = acc.into_iter().collect();
        }

        let mut children = vec![Vec::new(); names.len()];
        for (child, ps) in parent_ids.iter().enumerate() {
            for &p in ps {
                children[p as usize].push(child as TermId);
            }
        }

        let root_ids = roots.iter().map(|r| index[r]).collect();
        Ok(Self {
            kind,
            names,
            index,
            parents: parent_ids,
            roots: root_ids,
            ancestors,
            children,
        })
    }

    /// Parses the JSON file form: `{"<id>": ["<parent>", ...], ..., "roots": [...]}`.
    pub fn from_json(kind: OntologyKind, value: &Value) -> Result<Self> {
        let err = |message: String| Error::Ontology {
            kind: kind.to_string(),
            message,
        };
        let obj = value
            .as_object()
            .ok_or_else(|| err("expected a JSON object".into()))?;
        let mut parents = BTreeMap::new();
        let mut roots = Vec::new();
        for (key, val) in obj {
            let list = string_list(val)
                .ok_or_else(|| err(format!("{key}: expected a list of strings")))?;
            if key == "roots" {
                roots = list;
            } else {
                parents.insert(key.clone(), list);
            }
        }
        Self::new(kind, parents, roots)
    }

    pub fn load(kind: OntologyKind, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: Value = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        Self::from_json(kind, &value)
    }

    /// Serializes back to the file form with `roots` first and terms sorted.
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert(
            "roots".into(),
            Value::from(self.roots.iter().map(|&r| self.name(r)).collect::<Vec<_>>()),
        );
        for (i, name) in self.names.iter().enumerate() {
            if self.roots.contains(&(i as TermId)) {
                continue;
            }
            let mut ps: Vec<&str> = self.parents[i].iter().map(|&p| self.name(p)).collect();
            ps.sort_unstable();
            obj.insert(name.clone(), Value::from(ps));
        }
        Value::Object(obj)
    }

    pub fn kind(&self) -> OntologyKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn id(&self, name: &str) -> Option<TermId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: TermId) -> &str {
        &self.names[id as usize]
    }

    pub fn terms(&self) -> impl Iterator<Item = (TermId, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (i as TermId, n.as_str()))
    }

    pub fn parents(&self, id: TermId) -> &[TermId] {
        &self.parents[id as usize]
    }

    /// Strict ancestors, sorted by term id.
    pub fn ancestors(&self, id: TermId) -> &[TermId] {
        &self.ancestors[id as usize]
    }

    /// `ancestor` equals `id` or is one of its ancestors.
    pub fn is_a(&self, id: TermId, ancestor: TermId) -> bool {
        id == ancestor || self.ancestors(id).binary_search(&ancestor).is_ok()
    }

    /// The term itself plus all its strict descendants.
    pub fn descendants_or_self(&self, id: TermId) -> BTreeSet<TermId> {
        let mut out = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(t) = stack.pop() {
            if out.insert(t) {
                stack.extend(self.children[t as usize].iter().copied());
            }
        }
        out
    }

    /// Ancestor-or-self closure of a set of names. Unknown names are ignored.
    pub fn closure<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> BTreeSet<TermId> {
        let mut out = BTreeSet::new();
        for name in names {
            if let Some(id) = self.id(name) {
                out.insert(id);
                out.extend(self.ancestors(id).iter().copied());
            }
        }
        out
    }
}

fn string_list(value: &Value) -> Option<Vec<String>> {
    value
        .as_array()?
        .iter()
        .map(|v| v.as_str().map(str::to_owned))
        .collect()
}

/// Parents-before-children order, or the offending cycle.
fn topological_order(
    names: &[String],
    parents: &[Vec<TermId>],
) -> std::result::Result<Vec<TermId>, Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut marks = vec![Mark::New; names.len()];
    let mut order = Vec::with_capacity(names.len());
    for start in 0..names.len() {
        if marks[start] != Mark::New {
            continue;
        }
        // iterative DFS along parent links; `path` holds the active chain
        let mut path: Vec<(TermId, usize)> = vec![(start as TermId, 0)];
        marks[start] = Mark::Active;
        while let Some(&mut (node, ref mut next)) = path.last_mut() {
            let ps = &parents[node as usize];
            if *next < ps.len() {
                let p = ps[*next];
                *next += 1;
                match marks[p as usize] {
                    Mark::New => {
                        marks[p as usize] = Mark::Active;
                        path.push((p, 0));
                    }
                    Mark::Active => {
                        let pos = path.iter().position(|&(n, _)| n == p).unwrap_or(0);
                        let mut cycle: Vec<String> = path[pos..]
                            .iter()
                            .map(|&(n, _)| names[n as usize].clone())
                            .collect();
                        cycle.push(names[p as usize].clone());
                        return Err(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                marks[node as usize] = Mark::Done;
                order.push(node);
                path.pop();
            }
        }
    }
    Ok(order)
}
