//! The three reasoning stages: lookup, enrichment, inference.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::curie::Curie;
use crate::error::{Error, Result, Stage};
use crate::ontology::TermId;
use crate::query::QueryGraph;
use crate::stats::{self, EnrichmentCounts, PValue};
use crate::store::{Direction, NodeIdx, Store};

/// Known answers of a one-hop query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LookupResult {
    pub anchor: Curie,
    pub predicates: Vec<String>,
    /// Direction of the query edge as seen from the anchor.
    pub direction: Direction,
    pub answer_type: String,
    /// Sorted by curie.
    pub answers: Vec<Curie>,
    #[serde(skip)]
    pub(crate) anchor_idx: NodeIdx,
    #[serde(skip)]
    pub(crate) answer_idx: Vec<NodeIdx>,
    #[serde(skip)]
    pub(crate) answer_category: TermId,
}

impl LookupResult {
    pub fn n(&self) -> usize {
        self.answers.len()
    }

    pub fn contains(&self, id: &Curie) -> bool {
        self.answers.binary_search(id).is_ok()
    }
}

/// The feature an enrichment rule is about.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RuleTarget {
    /// Members are linked to `node` by `predicate`; `direction` is seen from
    /// the member (`out` means the member is the subject).
    Graph {
        node: Curie,
        predicate: String,
        direction: Direction,
    },
    /// Members hold `tag` under property `key`.
    Property { key: String, tag: String },
}

impl RuleTarget {
    pub fn is_graph(&self) -> bool {
        matches!(self, RuleTarget::Graph { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RuleTarget::Graph { .. } => "graph",
            RuleTarget::Property { .. } => "property",
        }
    }
}

/// Canonical form used for tie-breaking: `graph:CURIE:PREDICATE:DIR` or
/// `property:KEY:TAG`.
impl fmt::Display for RuleTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleTarget::Graph {
                node,
                predicate,
                direction,
            } => write!(f, "graph:{node}:{predicate}:{direction}"),
            RuleTarget::Property { key, tag } => write!(f, "property:{key}:{tag}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnrichmentRule {
    pub target: RuleTarget,
    /// Answers sharing the target, sorted.
    pub members: Vec<Curie>,
    pub counts: EnrichmentCounts,
    pub p: PValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Enrichment {
    /// Sorted by `(p, target)`, at most `max_rules`.
    pub rules: Vec<EnrichmentRule>,
    /// Features shared by at least `min_k` answers, before the `p0` cut.
    pub pre_filter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferredCandidate {
    pub id: Curie,
    pub name: String,
    pub best_p: f64,
    /// Indexes into the rule list, ascending (so best rule first).
    pub supporting_rules: Vec<usize>,
    pub in_lookup: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub lookup_ms: f64,
    pub enrichment_ms: f64,
    pub inference_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineOutput {
    pub lookup: LookupResult,
    pub enrichment: Enrichment,
    pub candidates: Vec<InferredCandidate>,
    pub timings: StageTimings,
}

/// Stage one: the distinct nodes of the answer type adjacent to the pinned node.
pub fn lookup(store: &Store, query: &QueryGraph) -> Result<LookupResult> {
    let hop = query.one_hop()?;
    let mut errors = Vec::new();
    let category = store.categories().id(hop.answer_category);
    if category.is_none() {
        errors.push(format!("unknown category {}", hop.answer_category));
    }
    let mut predicates = Vec::new();
    for p in hop.predicates {
        match store.predicates().id(p) {
            Some(id) => predicates.push(id),
            None => errors.push(format!("unknown predicate {p}")),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Validation(errors));
    }
    let category = category.expect("checked");
    let anchor_idx = store
        .node_idx(hop.anchor)
        .ok_or_else(|| Error::NotFound(format!("node {}", hop.anchor)))?;

    let mut answer_idx: Vec<NodeIdx> = predicates
        .iter()
        .flat_map(|&p| store.adjacency_with(anchor_idx, p, hop.direction))
        .map(|a| a.other)
        .filter(|&o| o != anchor_idx && store.has_type(o, category))
        .collect();
    // node order is curie order
    answer_idx.sort_unstable();
    answer_idx.dedup();

    Ok(LookupResult {
        anchor: hop.anchor.clone(),
        predicates: hop.predicates.to_vec(),
        direction: hop.direction,
        answer_type: hop.answer_category.to_owned(),
        answers: answer_idx
            .iter()
            .map(|&i| store.node_at(i).id.clone())
            .collect(),
        anchor_idx,
        answer_idx,
        answer_category: category,
    })
}

type GraphKey = (NodeIdx, TermId, Direction);

enum Task<'a> {
    Graph(GraphKey, Vec<NodeIdx>),
    Property(&'a str, &'a str, Vec<NodeIdx>),
}

/// Which edges may carry a rule.
///
/// A predicate is excluded when it or one of its ancestors is listed in the
/// config. A derived edge is also dropped when every asserted edge it was
/// expanded from has an excluded predicate, so an excluded relation cannot
/// come back through a generic ancestor such as `related_to`.
pub(crate) struct EdgeFilter<'s> {
    store: &'s Store,
    excluded: BTreeSet<TermId>,
    /// Allowed predicates with at least one excluded strict descendant.
    guarded: BTreeSet<TermId>,
}

impl<'s> EdgeFilter<'s> {
    pub(crate) fn new(store: &'s Store, config: &PipelineConfig) -> Self {
        let onto = store.predicates();
        let excluded = config.excluded_predicates(onto);
        let guarded = excluded
            .iter()
            .flat_map(|&p| onto.ancestors(p).iter().copied())
            .filter(|p| !excluded.contains(p))
            .collect();
        Self {
            store,
            excluded,
            guarded,
        }
    }

    pub(crate) fn allows(&self, predicate: TermId) -> bool {
        !self.excluded.contains(&predicate)
    }

    /// Others reachable from `node` through asserted, allowed edges whose
    /// predicate is `predicate` or one of its descendants.
    fn clean_witnesses(
        &self,
        node: NodeIdx,
        predicate: TermId,
        direction: Direction,
    ) -> HashSet<NodeIdx> {
        let onto = self.store.predicates();
        self.store
            .adjacency(node, direction)
            .iter()
            .filter(|a| {
                !self.store.edge_at(a.edge).derived
                    && self.allows(a.predicate)
                    && onto.is_a(a.predicate, predicate)
            })
            .map(|a| a.other)
            .collect()
    }

    /// Distinct nodes related to `node` by `predicate` in `direction`, sorted.
    pub(crate) fn related(
        &self,
        node: NodeIdx,
        predicate: TermId,
        direction: Direction,
    ) -> Vec<NodeIdx> {
        if !self.allows(predicate) {
            return Vec::new();
        }
        let entries = self.store.adjacency_with(node, predicate, direction);
        let mut out: Vec<NodeIdx> = if self.guarded.contains(&predicate) {
            let ok = self.clean_witnesses(node, predicate, direction);
            entries
                .iter()
                .map(|a| a.other)
                .filter(|o| ok.contains(o))
                .collect()
        } else {
            entries.iter().map(|a| a.other).collect()
        };
        out.dedup();
        out
    }
}

/// Stage two: features shared by the answers more often than chance.
pub fn enrich(store: &Store, lookup: &LookupResult, config: &PipelineConfig) -> Result<Enrichment> {
    let excluded_nodes = excluded_node_set(store, config);
    let filter = EdgeFilter::new(store, config);

    let mut graph: BTreeMap<GraphKey, Vec<NodeIdx>> = BTreeMap::new();
    let mut property: BTreeMap<(&str, &str), Vec<NodeIdx>> = BTreeMap::new();
    for &member in &lookup.answer_idx {
        for dir in [Direction::Out, Direction::In] {
            // witnesses per predicate, built on first use
            let mut witnesses: HashMap<TermId, HashSet<NodeIdx>> = HashMap::new();
            for adj in store.adjacency(member, dir) {
                if adj.other == lookup.anchor_idx
                    || excluded_nodes.contains(&adj.other)
                    || !filter.allows(adj.predicate)
                {
                    continue;
                }
                if filter.guarded.contains(&adj.predicate)
                    && store.edge_at(adj.edge).derived
                    && !witnesses
                        .entry(adj.predicate)
                        .or_insert_with(|| filter.clean_witnesses(member, adj.predicate, dir))
                        .contains(&adj.other)
                {
                    continue;
                }
                push_member(
                    graph.entry((adj.other, adj.predicate, dir)).or_default(),
                    member,
                );
            }
        }
        for (key, tags) in &store.node_at(member).properties {
            for tag in tags {
                push_member(
                    property.entry((key.as_str(), tag.as_str())).or_default(),
                    member,
                );
            }
        }
    }

    let min_k = config.min_k.max(1);
    let tasks: Vec<Task<'_>> = graph
        .into_iter()
        .filter(|(_, m)| m.len() >= min_k)
        .map(|(k, m)| Task::Graph(k, m))
        .chain(
            property
                .into_iter()
                .filter(|(_, m)| m.len() >= min_k)
                .map(|((key, tag), m)| Task::Property(key, tag, m)),
        )
        .collect();
    let pre_filter = tasks.len();

    let category = lookup.answer_category;
    let population = store.type_members(category).len() as u64;
    let draws = lookup.n() as u64;
    let evaluated: Vec<Option<EnrichmentRule>> = tasks
        .into_par_iter()
        .map(|task| {
            let (target, members, successes) = match task {
                Task::Graph((node, pred, dir), members) => {
                    let k_pop = filter
                        .related(node, pred, dir.reverse())
                        .into_iter()
                        .filter(|&o| store.has_type(o, category))
                        .count();
                    let target = RuleTarget::Graph {
                        node: store.node_at(node).id.clone(),
                        predicate: store.predicates().name(pred).to_owned(),
                        direction: dir,
                    };
                    (target, members, k_pop)
                }
                Task::Property(key, tag, members) => {
                    let k_pop = store
                        .property_holders(key, tag)
                        .iter()
                        .filter(|&&i| store.has_type(i, category))
                        .count();
                    let target = RuleTarget::Property {
                        key: key.to_owned(),
                        tag: tag.to_owned(),
                    };
                    (target, members, k_pop)
                }
            };
            if successes < members.len() {
                return Err(Error::DataInconsistency {
                    target: target.to_string(),
                    message: format!("K = {successes} is smaller than k = {}", members.len()),
                });
            }
            let counts =
                EnrichmentCounts::new(population, successes as u64, draws, members.len() as u64)?;
            let p = stats::survival(&counts, &config.stats)?;
            Ok((p.value < config.p0).then(|| EnrichmentRule {
                target,
                members: members
                    .iter()
                    .map(|&i| store.node_at(i).id.clone())
                    .collect(),
                counts,
                p,
            }))
        })
        .collect::<Result<_>>()?;

    let mut keyed: Vec<(String, EnrichmentRule)> = evaluated
        .into_iter()
        .flatten()
        .map(|r| (r.target.to_string(), r))
        .collect();
    keyed.sort_by(|(ka, a), (kb, b)| a.p.value.total_cmp(&b.p.value).then_with(|| ka.cmp(kb)));
    keyed.truncate(config.max_rules);
    Ok(Enrichment {
        rules: keyed.into_iter().map(|(_, r)| r).collect(),
        pre_filter,
    })
}

fn push_member(members: &mut Vec<NodeIdx>, member: NodeIdx) {
    if members.last() != Some(&member) {
        members.push(member);
    }
}

fn excluded_node_set(store: &Store, config: &PipelineConfig) -> BTreeSet<NodeIdx> {
    config
        .node_exclusions
        .iter()
        .filter_map(|c| store.node_idx(c))
        .collect()
}

/// Stage three: every node of the answer type sharing a rule's feature.
pub fn infer(
    store: &Store,
    lookup: &LookupResult,
    rules: &[EnrichmentRule],
    config: &PipelineConfig,
) -> Result<Vec<InferredCandidate>> {
    let excluded = excluded_node_set(store, config);
    let filter = EdgeFilter::new(store, config);
    let keep = |i: NodeIdx| {
        i != lookup.anchor_idx
            && !excluded.contains(&i)
            && store.has_type(i, lookup.answer_category)
    };

    let per_rule: Vec<Vec<NodeIdx>> = rules
        .par_iter()
        .map(|rule| -> Result<Vec<NodeIdx>> {
            let mut found: Vec<NodeIdx> = match &rule.target {
                RuleTarget::Graph {
                    node,
                    predicate,
                    direction,
                } => {
                    let g = store
                        .node_idx(node)
                        .ok_or_else(|| Error::NotFound(format!("node {node}")))?;
                    let p = store
                        .predicates()
                        .id(predicate)
                        .ok_or_else(|| Error::NotFound(format!("predicate {predicate}")))?;
                    filter
                        .related(g, p, direction.reverse())
                        .into_iter()
                        .filter(|&o| keep(o))
                        .collect()
                }
                RuleTarget::Property { key, tag } => store
                    .property_holders(key, tag)
                    .iter()
                    .copied()
                    .filter(|&o| keep(o))
                    .collect(),
            };
            found.dedup();
            Ok(found)
        })
        .collect::<Result<_>>()?;

    let mut support: BTreeMap<NodeIdx, Vec<usize>> = BTreeMap::new();
    for (rule, found) in per_rule.iter().enumerate() {
        for &node in found {
            support.entry(node).or_default().push(rule);
        }
    }

    let mut candidates: Vec<InferredCandidate> = support
        .into_iter()
        .map(|(idx, supporting_rules)| {
            let best_p = supporting_rules
                .iter()
                .map(|&r| rules[r].p.value)
                .fold(f64::INFINITY, f64::min);
            let record = store.node_at(idx);
            InferredCandidate {
                id: record.id.clone(),
                name: record.name.clone(),
                best_p,
                supporting_rules,
                in_lookup: lookup.answer_idx.binary_search(&idx).is_ok(),
            }
        })
        .filter(|c| config.include_lookup_in_results || !c.in_lookup)
        .collect();
    candidates.sort_by(compare_candidates);
    Ok(candidates)
}

fn compare_candidates(a: &InferredCandidate, b: &InferredCandidate) -> Ordering {
    a.best_p.total_cmp(&b.best_p).then_with(|| a.id.cmp(&b.id))
}

/// Lookup, enrichment and inference in sequence. Errors carry their stage.
pub fn run_pipeline(
    store: &Store,
    query: &QueryGraph,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    let t0 = Instant::now();
    let lookup = lookup(store, query).map_err(|e| e.at_stage(Stage::Lookup))?;
    let t1 = Instant::now();
    let enrichment = enrich(store, &lookup, config).map_err(|e| e.at_stage(Stage::Enrichment))?;
    let t2 = Instant::now();
    let candidates = infer(store, &lookup, &enrichment.rules, config)
        .map_err(|e| e.at_stage(Stage::Inference))?;
    let t3 = Instant::now();
    let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    Ok(PipelineOutput {
        timings: StageTimings {
            lookup_ms: ms(t0, t1),
            enrichment_ms: ms(t1, t2),
            inference_ms: ms(t2, t3),
        },
        lookup,
        enrichment,
        candidates,
    })
}

/// Human-readable path from the anchor through a rule to `candidate`.
pub fn explain_path(lookup: &LookupResult, rule: &EnrichmentRule, candidate: &Curie) -> String {
    let relation = lookup.predicates.join("|");
    let members = format!(
        "{{{}}}",
        rule.members
            .iter()
            .map(Curie::as_str)
            .collect::<Vec<_>>()
            .join(", ")
    );
    let head = match lookup.direction {
        Direction::Out => format!("{} -[{relation}]-> {members}", lookup.anchor),
        _ => format!("{} <-[{relation}]- {members}", lookup.anchor),
    };
    let tail = match &rule.target {
        RuleTarget::Graph {
            node,
            predicate,
            direction: Direction::In,
        } => format!("<-[{predicate}]- {node} -[{predicate}]-> {candidate}"),
        RuleTarget::Graph {
            node, predicate, ..
        } => {
            format!("-[{predicate}]-> {node} <-[{predicate}]- {candidate}")
        }
        RuleTarget::Property { key, tag } => format!("-[{key}]-> {tag} <-[{key}]- {candidate}"),
    };
    format!("{head} {tail}")
}
