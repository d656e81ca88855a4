//! Immutable, indexed knowledge-graph store.
//!
//! Nodes are kept sorted by curie and edges in canonical
//! `(subject, predicate, object, qualifiers)` order, so dense indexes sort the
//! same way the identifiers do. Every index is built once; a [`Store`] never
//! changes after construction and can be shared freely between threads.

mod records;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use records::{EdgeRecord, NodeRecord};

use crate::curie::Curie;
use crate::error::{Error, Result};
use crate::ontology::{Ontology, OntologyKind, TermId};

pub type NodeIdx = u32;
pub type EdgeIdx = u32;

pub const NODES_FILE: &str = "nodes.jsonl";
pub const EDGES_FILE: &str = "edges.jsonl";
pub const PREDICATES_FILE: &str = "predicate_ontology.json";
pub const CATEGORIES_FILE: &str = "category_ontology.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Edge direction relative to the node being queried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The node is the object.
    In,
    /// The node is the subject.
    Out,
    Any,
}

impl Direction {
    pub fn reverse(self) -> Self {
        match self {
            Direction::In => Direction::Out,
            Direction::Out => Direction::In,
            Direction::Any => Direction::Any,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
            Direction::Any => "any",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreStats {
    pub node_count: usize,
    pub edge_count: usize,
    /// Nodes per category, counted over each node's ancestor-closed categories.
    pub type_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Skip edges with unknown endpoints instead of failing.
    pub lenient: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub skipped_dangling: usize,
    pub duplicate_edges: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub expanded: bool,
    pub asserted_edge_count: usize,
    pub derived_edge_count: usize,
    pub stats: StoreStats,
}

/// Paths of the four input files.
#[derive(Debug, Clone)]
pub struct InputFiles {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub predicates: PathBuf,
    pub categories: PathBuf,
}

impl InputFiles {
    /// The conventional file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            nodes: dir.join(NODES_FILE),
            edges: dir.join(EDGES_FILE),
            predicates: dir.join(PREDICATES_FILE),
            categories: dir.join(CATEGORIES_FILE),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct EdgeKey {
    subject: NodeIdx,
    predicate: TermId,
    object: NodeIdx,
}

/// One adjacency hit: the edge and the endpoint on the other side.
#[derive(Debug, Clone, Copy)]
pub struct Neighbor<'a> {
    pub edge: &'a EdgeRecord,
    pub other: &'a Curie,
    pub direction: Direction,
}

/// Adjacency entry used by the pipeline's hot loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Adjacent {
    pub edge: EdgeIdx,
    pub predicate: TermId,
    pub other: NodeIdx,
}

#[derive(Debug, Clone)]
pub struct Store {
    nodes: Vec<NodeRecord>,
    node_index: HashMap<Curie, NodeIdx>,
    node_types: Vec<Vec<TermId>>,
    edges: Vec<EdgeRecord>,
    edge_keys: Vec<EdgeKey>,
    out_adj: Vec<Vec<Adjacent>>,
    in_adj: Vec<Vec<Adjacent>>,
    properties: HashMap<String, BTreeMap<String, Vec<NodeIdx>>>,
    type_members: Vec<Vec<NodeIdx>>,
    predicates: Ontology,
    categories: Ontology,
    stats: StoreStats,
    expanded: bool,
}

impl Store {
    /// Reads the four input files and builds an unexpanded store.
    pub fn ingest(files: &InputFiles, opts: IngestOptions) -> Result<(Store, IngestReport)> {
        let predicates = Ontology::load(OntologyKind::Predicate, &files.predicates)?;
        let categories = Ontology::load(OntologyKind::Category, &files.categories)?;
        let nodes = read_jsonl::<NodeRecord>(&files.nodes)?;
        let edges = read_jsonl::<EdgeRecord>(&files.edges)?;
        Self::assemble(
            nodes,
            edges,
            predicates,
            categories,
            opts,
            &files.nodes.display().to_string(),
            &files.edges.display().to_string(),
        )
    }

    /// Builds a store from in-memory records. Edge positions in error
    /// messages are 1-based indexes into `edges`.
    pub fn from_records(
        nodes: Vec<NodeRecord>,
        edges: Vec<EdgeRecord>,
        predicates: Ontology,
        categories: Ontology,
        opts: IngestOptions,
    ) -> Result<(Store, IngestReport)> {
        let nodes = nodes
            .into_iter()
            .enumerate()
            .map(|(i, n)| (i + 1, n))
            .collect();
        let edges = edges
            .into_iter()
            .enumerate()
            .map(|(i, e)| (i + 1, e))
            .collect();
        Self::assemble(
            nodes, edges, predicates, categories, opts, "<nodes>", "<edges>",
        )
    }

    fn assemble(
        nodes: Vec<(usize, NodeRecord)>,
        edges: Vec<(usize, EdgeRecord)>,
        predicates: Ontology,
        categories: Ontology,
        opts: IngestOptions,
        nodes_name: &str,
        edges_name: &str,
    ) -> Result<(Store, IngestReport)> {
        let mut seen = BTreeSet::new();
        for (line, node) in &nodes {
            if !seen.insert(node.id.clone()) {
                return Err(Error::DuplicateNode(format!(
                    "{} ({nodes_name}:{line})",
                    node.id
                )));
            }
            if node.categories.is_empty() {
                return Err(Error::Malformed {
                    file: nodes_name.to_owned(),
                    line: *line,
                    message: format!("node {} has no categories", node.id),
                });
            }
            for c in &node.categories {
                if !categories.contains(c) {
                    return Err(Error::UnknownTerm {
                        kind: "category".into(),
                        name: c.clone(),
                        at: format!("{nodes_name}:{line}"),
                    });
                }
            }
        }

        let mut report = IngestReport::default();
        let mut kept = Vec::with_capacity(edges.len());
        for (line, edge) in edges {
            if !predicates.contains(&edge.predicate) {
                return Err(Error::UnknownTerm {
                    kind: "predicate".into(),
                    name: edge.predicate.clone(),
                    at: format!("{edges_name}:{line}"),
                });
            }
            let missing = [&edge.subject, &edge.object]
                .into_iter()
                .find(|c| !seen.contains(*c));
            if let Some(missing) = missing {
                if opts.lenient {
                    report.skipped_dangling += 1;
                    continue;
                }
                return Err(Error::DanglingEdge {
                    file: edges_name.to_owned(),
                    line,
                    edge: format!("{} -[{}]-> {}", edge.subject, edge.predicate, edge.object),
                    missing: missing.to_string(),
                });
            }
            kept.push(edge);
        }

        let nodes = nodes.into_iter().map(|(_, n)| n).collect();
        let (store, duplicates) = Self::index(nodes, kept, predicates, categories);
        report.duplicate_edges = duplicates;
        Ok((store, report))
    }

    /// Builds every index. Inputs must already be validated.
    fn index(
        mut nodes: Vec<NodeRecord>,
        edges: Vec<EdgeRecord>,
        predicates: Ontology,
        categories: Ontology,
    ) -> (Store, usize) {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let node_index: HashMap<Curie, NodeIdx> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i as NodeIdx))
            .collect();

        let node_types: Vec<Vec<TermId>> = nodes
            .iter()
            .map(|n| {
                categories
                    .closure(n.categories.iter().map(String::as_str))
                    .into_iter()
                    .collect()
            })
            .collect();

        let mut type_members = vec![Vec::new(); categories.len()];
        for (i, types) in node_types.iter().enumerate() {
            for &t in types {
                type_members[t as usize].push(i as NodeIdx);
            }
        }

        let mut properties: HashMap<String, BTreeMap<String, Vec<NodeIdx>>> = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            for (key, tags) in &n.properties {
                let by_tag = properties.entry(key.clone()).or_default();
                for tag in tags {
                    by_tag.entry(tag.clone()).or_default().push(i as NodeIdx);
                }
            }
        }

        // canonical order; an asserted copy wins over a derived one
        let mut keyed: Vec<(EdgeKey, EdgeRecord)> = edges
            .into_iter()
            .map(|e| {
                let key = EdgeKey {
                    subject: node_index[&e.subject],
                    predicate: predicates.id(&e.predicate).expect("validated predicate"),
                    object: node_index[&e.object],
                };
                (key, e)
            })
            .collect();
        keyed.sort_by(|(ka, ea), (kb, eb)| {
            (
                ka.subject,
                ka.predicate,
                ka.object,
                &ea.qualifiers,
                ea.derived,
            )
                .cmp(&(
                    kb.subject,
                    kb.predicate,
                    kb.object,
                    &eb.qualifiers,
                    eb.derived,
                ))
        });
        let before = keyed.len();
        keyed.dedup_by(|later, earlier| {
            earlier.0 == later.0 && earlier.1.qualifiers == later.1.qualifiers
        });
        let duplicates = before - keyed.len();

        let mut out_adj = vec![Vec::new(); nodes.len()];
        let mut in_adj = vec![Vec::new(); nodes.len()];
        for (i, (key, _)) in keyed.iter().enumerate() {
            out_adj[key.subject as usize].push(Adjacent {
                edge: i as EdgeIdx,
                predicate: key.predicate,
                other: key.object,
            });
            in_adj[key.object as usize].push(Adjacent {
                edge: i as EdgeIdx,
                predicate: key.predicate,
                other: key.subject,
            });
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_by_key(|a| (a.predicate, a.other, a.edge));
        }

        let stats = StoreStats {
            node_count: nodes.len(),
            edge_count: keyed.len(),
            type_counts: categories
                .terms()
                .map(|(id, name)| (name.to_owned(), type_members[id as usize].len()))
                .collect(),
        };

        let (edge_keys, edges): (Vec<_>, Vec<_>) = keyed.into_iter().unzip();
        let store = Store {
            nodes,
            node_index,
            node_types,
            edges,
            edge_keys,
            out_adj,
            in_adj,
            properties,
            type_members,
            predicates,
            categories,
            stats,
            expanded: false,
        };
        (store, duplicates)
    }

    /// Materializes, for every asserted edge, one derived edge per strict
    /// ancestor of its predicate. Qualifiers are copied unchanged.
    ///
    /// Idempotent: derived edges are never expanded again.
    pub fn expand_redundant(self) -> Store {
        let mut edges = self.edges.clone();
        for (edge, key) in self.edges.iter().zip(&self.edge_keys) {
            if edge.derived {
                continue;
            }
            for &ancestor in self.predicates.ancestors(key.predicate) {
                let mut derived = edge.clone();
                derived.predicate = self.predicates.name(ancestor).to_owned();
                derived.derived = true;
                edges.push(derived);
            }
        }
        let (mut store, _) = Self::index(self.nodes, edges, self.predicates, self.categories);
        store.expanded = true;
        store
    }

    /// Writes the store as a directory that [`Store::load_dir`] reads back.
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&dir.join(NODES_FILE), &self.nodes)?;
        write_jsonl(&dir.join(EDGES_FILE), &self.edges)?;
        write_json(&dir.join(PREDICATES_FILE), &self.predicates.to_json())?;
        write_json(&dir.join(CATEGORIES_FILE), &self.categories.to_json())?;
        write_json(&dir.join(MANIFEST_FILE), &self.manifest())?;
        Ok(())
    }

    /// Loads a directory written by [`Store::save_dir`] and checks the
    /// rebuilt statistics against its manifest.
    pub fn load_dir(dir: &Path) -> Result<Store> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let text =
            std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: manifest_path.display().to_string(),
            source,
        })?;
        let (mut store, _) = Self::ingest(&InputFiles::in_dir(dir), IngestOptions::default())?;
        store.expanded = manifest.expanded;
        if store.stats != manifest.stats {
            return Err(Error::Invalid(format!(
                "{}: stats do not match the store contents",
                manifest_path.display()
            )));
        }
        Ok(store)
    }

    pub fn manifest(&self) -> Manifest {
        let derived = self.edges.iter().filter(|e| e.derived).count();
        Manifest {
            format_version: 1,
            expanded: self.expanded,
            asserted_edge_count: self.edges.len() - derived,
            derived_edge_count: derived,
            stats: self.stats.clone(),
        }
    }

    pub fn stats(&self) -> &StoreStats {
        &self.stats
    }

    pub fn is_expanded(&self) -> bool {
        self.expanded
    }

    pub fn predicates(&self) -> &Ontology {
        &self.predicates
    }

    pub fn categories(&self) -> &Ontology {
        &self.categories
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn node(&self, id: &Curie) -> Option<&NodeRecord> {
        self.node_index.get(id).map(|&i| &self.nodes[i as usize])
    }

    pub fn node_idx(&self, id: &Curie) -> Option<NodeIdx> {
        self.node_index.get(id).copied()
    }

    pub fn node_at(&self, idx: NodeIdx) -> &NodeRecord {
        &self.nodes[idx as usize]
    }

    pub fn edge_at(&self, idx: EdgeIdx) -> &EdgeRecord {
        &self.edges[idx as usize]
    }

    /// Ancestor-closed category ids of a node, sorted.
    pub fn node_types(&self, idx: NodeIdx) -> &[TermId] {
        &self.node_types[idx as usize]
    }

    pub fn has_type(&self, idx: NodeIdx, category: TermId) -> bool {
        self.node_types[idx as usize]
            .binary_search(&category)
            .is_ok()
    }

    /// Nodes whose closed categories contain `category`, sorted.
    pub fn type_members(&self, category: TermId) -> &[NodeIdx] {
        &self.type_members[category as usize]
    }

    pub fn type_count(&self, category: &str) -> usize {
        self.categories
            .id(category)
            .map_or(0, |c| self.type_members[c as usize].len())
    }

    /// Raw adjacency of a node for one direction (`Any` is not accepted here),
    /// sorted by `(predicate, other)`.
    pub fn adjacency(&self, idx: NodeIdx, direction: Direction) -> &[Adjacent] {
        match direction {
            Direction::Out => &self.out_adj[idx as usize],
            Direction::In => &self.in_adj[idx as usize],
            Direction::Any => panic!("adjacency() takes a single direction"),
        }
    }

    /// Adjacency restricted to one predicate, via binary search.
    pub fn adjacency_with(
        &self,
        idx: NodeIdx,
        predicate: TermId,
        direction: Direction,
    ) -> &[Adjacent] {
        let list = self.adjacency(idx, direction);
        let lo = list.partition_point(|a| a.predicate < predicate);
        let hi = list.partition_point(|a| a.predicate <= predicate);
        &list[lo..hi]
    }

    /// All `(edge, other endpoint)` pairs around `node`, ordered by
    /// `(predicate, other curie)`.
    pub fn neighbors(
        &self,
        node: &Curie,
        predicate_filter: Option<&BTreeSet<String>>,
        direction: Direction,
    ) -> Result<Vec<Neighbor<'_>>> {
        let idx = self
            .node_idx(node)
            .ok_or_else(|| Error::NotFound(format!("node {node}")))?;
        let wanted: Option<BTreeSet<TermId>> =
            predicate_filter.map(|set| set.iter().filter_map(|p| self.predicates.id(p)).collect());
        let dirs: &[Direction] = match direction {
            Direction::Any => &[Direction::Out, Direction::In],
            Direction::Out => &[Direction::Out],
            Direction::In => &[Direction::In],
        };
        let mut hits: Vec<(TermId, NodeIdx, EdgeIdx, Direction)> = Vec::new();
        for &dir in dirs {
            for adj in self.adjacency(idx, dir) {
                if wanted.as_ref().is_none_or(|w| w.contains(&adj.predicate)) {
                    hits.push((adj.predicate, adj.other, adj.edge, dir));
                }
            }
        }
        hits.sort_by_key(|&(p, o, e, d)| (p, o, e, d == Direction::In));
        hits.dedup_by_key(|h| h.2);
        Ok(hits
            .into_iter()
            .map(|(_, other, edge, direction)| Neighbor {
                edge: &self.edges[edge as usize],
                other: &self.nodes[other as usize].id,
                direction,
            })
            .collect())
    }

    /// Distinct nodes of `type_filter` linked to `target` through `predicate`
    /// in `direction` (seen from `target`). Parallel edges count once.
    pub fn count_related(
        &self,
        target: &Curie,
        predicate: &str,
        direction: Direction,
        type_filter: &str,
    ) -> Result<usize> {
        let idx = self
            .node_idx(target)
            .ok_or_else(|| Error::NotFound(format!("node {target}")))?;
        let (Some(pred), Some(cat)) = (
            self.predicates.id(predicate),
            self.categories.id(type_filter),
        ) else {
            return Ok(0);
        };
        Ok(self.count_related_idx(idx, pred, direction, cat))
    }

    pub fn count_related_idx(
        &self,
        target: NodeIdx,
        predicate: TermId,
        direction: Direction,
        category: TermId,
    ) -> usize {
        let mut count = 0;
        let mut last = None;
        match direction {
            Direction::Any => {
                let mut others: Vec<NodeIdx> = self
                    .adjacency_with(target, predicate, Direction::Out)
                    .iter()
                    .chain(self.adjacency_with(target, predicate, Direction::In))
                    .map(|a| a.other)
                    .collect();
                others.sort_unstable();
                others.dedup();
                others
                    .into_iter()
                    .filter(|&o| self.has_type(o, category))
                    .count()
            }
            dir => {
                for adj in self.adjacency_with(target, predicate, dir) {
                    if last != Some(adj.other) {
                        last = Some(adj.other);
                        if self.has_type(adj.other, category) {
                            count += 1;
                        }
                    }
                }
                count
            }
        }
    }

    /// Nodes of `type_filter` holding `tag` under `key`.
    pub fn nodes_with_property(&self, key: &str, tag: &str, type_filter: &str) -> BTreeSet<Curie> {
        let Some(cat) = self.categories.id(type_filter) else {
            return BTreeSet::new();
        };
        self.property_holders(key, tag)
            .iter()
            .filter(|&&i| self.has_type(i, cat))
            .map(|&i| self.nodes[i as usize].id.clone())
            .collect()
    }

    /// Every node holding `tag` under `key`, sorted.
    pub fn property_holders(&self, key: &str, tag: &str) -> &[NodeIdx] {
        self.properties
            .get(key)
            .and_then(|tags| tags.get(tag))
            .map_or(&[], Vec::as_slice)
    }
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            file: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
