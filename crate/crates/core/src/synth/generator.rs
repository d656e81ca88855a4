//! Random graphs with planted enrichment structure and known ground truth.
//!
//! Layout: one anchor disease, `population` nodes of the answer type of which
//! `answer_count` treat the anchor, one gene or tag per planted target, and
//! optional noise. Each planted target is shared by `overlap` answers and by
//! `hidden` non-answers, which are the candidates inference should find.
//! Noise edges join uniformly chosen answer-type and noise nodes and never
//! touch the anchor or a planted gene.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::curie::Curie;
use crate::error::{Error, Result};
use crate::ontology::{Ontology, OntologyKind};
use crate::pipeline::RuleTarget;
use crate::query::{QueryEdge, QueryGraph, QueryNode, QueryRequest};
use crate::stats::EnrichmentCounts;
use crate::store::{
    write_json, write_jsonl, Direction, EdgeRecord, IngestOptions, NodeRecord, Store,
    CATEGORIES_FILE, EDGES_FILE, NODES_FILE, PREDICATES_FILE,
};
use crate::synth::oracle::{hypergeom_sf_rational, rational_to_f64};

pub const TRUTH_FILE: &str = "truth.json";
pub const QUERY_FILE: &str = "query.json";

pub const ANCHOR_CATEGORY: &str = "biolink:Disease";
pub const TARGET_CATEGORY: &str = "biolink:Gene";
pub const NOISE_CATEGORY: &str = "biolink:InformationContentEntity";
pub const LOOKUP_PREDICATE: &str = "biolink:treats";
pub const PLANTED_PREDICATE: &str = "biolink:affects";
pub const PLANTED_PROPERTY: &str = "synthetic_role";
const NOISE_PREDICATES: [&str; 3] = [
    "biolink:interacts_with",
    "biolink:physically_interacts_with",
    "biolink:causes",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Graph,
    Property,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedTarget {
    pub kind: TargetKind,
    /// `K`: answer-type nodes sharing the target.
    pub fan_in: usize,
    /// `k`: answers sharing the target.
    pub overlap: usize,
    /// Non-answers sharing the target; defaults to `fan_in - overlap`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    /// Graph targets only, seen from the member. Defaults to `out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

impl PlantedTarget {
    pub fn graph(fan_in: usize, overlap: usize) -> Self {
        Self {
            kind: TargetKind::Graph,
            fan_in,
            overlap,
            hidden: None,
            direction: None,
        }
    }

    pub fn property(fan_in: usize, overlap: usize) -> Self {
        Self {
            kind: TargetKind::Property,
            ..Self::graph(fan_in, overlap)
        }
    }

    pub fn hidden_count(&self) -> usize {
        self.hidden
            .unwrap_or(self.fan_in.saturating_sub(self.overlap))
    }
}

fn default_answer_type() -> String {
    "biolink:Drug".to_owned()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub seed: u64,
    /// `n`.
    pub answer_count: usize,
    /// `N`: nodes of the answer type. Defaults to ten times the answers plus
    /// all hidden candidates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
    pub planted_targets: Vec<PlantedTarget>,
    #[serde(default)]
    pub noise_nodes: usize,
    #[serde(default)]
    pub noise_edges: usize,
    #[serde(default = "default_answer_type")]
    pub answer_type: String,
}

impl PlantSpec {
    pub fn population(&self) -> usize {
        self.population.unwrap_or_else(|| {
            10 * (self.answer_count
                + self
                    .planted_targets
                    .iter()
                    .map(PlantedTarget::hidden_count)
                    .sum::<usize>())
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let n = self.answer_count;
        let big_n = self.population();
        if n > big_n {
            errors.push(format!("answer_count {n} exceeds population {big_n}"));
        }
        if !matches!(
            self.answer_type.as_str(),
            "biolink:Drug" | "biolink:ChemicalEntity" | "biolink:SmallMolecule"
        ) {
            errors.push(format!("unsupported answer_type {}", self.answer_type));
        }
        for (j, t) in self.planted_targets.iter().enumerate() {
            let (k_pop, k) = (t.fan_in, t.overlap);
            if k > k_pop {
                errors.push(format!(
                    "target {j}: overlap k = {k} exceeds fan_in K = {k_pop}"
                ));
            }
            if k > n {
                errors.push(format!(
                    "target {j}: overlap k = {k} exceeds answer_count n = {n}"
                ));
            }
            if let Some(h) = t.hidden {
                if h + k != k_pop {
                    errors.push(format!(
                        "target {j}: hidden {h} + overlap {k} must equal fan_in {k_pop}"
                    ));
                }
            }
            if t.hidden_count() > big_n.saturating_sub(n) {
                errors.push(format!(
                    "target {j}: not enough non-answers for {} hidden",
                    t.hidden_count()
                ));
            }
            if t.kind == TargetKind::Property && t.direction.is_some() {
                errors.push(format!(
                    "target {j}: direction only applies to graph targets"
                ));
            }
            if t.direction == Some(Direction::Any) {
                errors.push(format!("target {j}: direction must be in or out"));
            }
        }
        if self.noise_edges > 0 && big_n + self.noise_nodes < 2 {
            errors.push("noise edges need at least two endpoints".to_owned());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub target: RuleTarget,
    pub counts: EnrichmentCounts,
    /// Exact right-tail probability of `counts`.
    pub expected_p: f64,
    pub members: Vec<Curie>,
    pub hidden: Vec<Curie>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub anchor: Curie,
    pub answer_type: String,
    pub answers: Vec<Curie>,
    pub targets: Vec<PlantedTruth>,
    /// Union of all hidden members, sorted.
    pub hidden_candidates: Vec<Curie>,
}

impl Truth {
    /// `anchor <-treats- ?answer_type`.
    pub fn query(&self) -> QueryRequest {
        let graph = QueryGraph {
            nodes: [
                (
                    "n0".to_owned(),
                    QueryNode {
                        ids: Some(vec![self.anchor.clone()]),
                        categories: Some(vec![ANCHOR_CATEGORY.to_owned()]),
                    },
                ),
                (
                    "n1".to_owned(),
                    QueryNode {
                        ids: None,
                        categories: Some(vec![self.answer_type.clone()]),
                    },
                ),
            ]
            .into(),
            edges: [(
                "e0".to_owned(),
                QueryEdge {
                    subject: "n1".into(),
                    object: "n0".into(),
                    predicates: vec![LOOKUP_PREDICATE.to_owned()],
                },
            )]
            .into(),
        };
        QueryRequest::new(graph)
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub predicates: Ontology,
    pub categories: Ontology,
    pub truth: Truth,
}

impl Generated {
    /// An expanded store over the generated records.
    pub fn store(&self) -> Result<Store> {
        let (store, _) = Store::from_records(
            self.nodes.clone(),
            self.edges.clone(),
            self.predicates.clone(),
            self.categories.clone(),
            IngestOptions::default(),
        )?;
        Ok(store.expand_redundant())
    }

    /// Writes the ingest inputs plus `truth.json` and `query.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&dir.join(NODES_FILE), &self.nodes)?;
        write_jsonl(&dir.join(EDGES_FILE), &self.edges)?;
        write_json(&dir.join(PREDICATES_FILE), &self.predicates.to_json())?;
        write_json(&dir.join(CATEGORIES_FILE), &self.categories.to_json())?;
        write_json(&dir.join(TRUTH_FILE), &self.truth)?;
        write_json(&dir.join(QUERY_FILE), &self.truth.query())?;
        Ok(())
    }
}

pub fn synth_predicates() -> Ontology {
    Ontology::from_json(
        OntologyKind::Predicate,
        &json!({
            "roots": [LOOKUP_PREDICATE, PLANTED_PREDICATE, "biolink:interacts_with", "biolink:causes"],
            "biolink:physically_interacts_with": ["biolink:interacts_with"],
        }),
    )
    .expect("static ontology")
}

pub fn synth_categories() -> Ontology {
    Ontology::from_json(
        OntologyKind::Category,
        &json!({
            "roots": ["biolink:NamedThing"],
            "biolink:ChemicalEntity": ["biolink:NamedThing"],
            "biolink:Drug": ["biolink:ChemicalEntity"],
            "biolink:SmallMolecule": ["biolink:ChemicalEntity"],
            ANCHOR_CATEGORY: ["biolink:NamedThing"],
            TARGET_CATEGORY: ["biolink:NamedThing"],
            NOISE_CATEGORY: ["biolink:NamedThing"],
        }),
    )
    .expect("static ontology")
}

fn curie(prefix: &str, i: usize) -> Curie {
    Curie::new(format!("{prefix}:{i:05}")).expect("generated curie")
}

/// Deterministic for a fixed spec.
pub fn generate(spec: &PlantSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let big_n = spec.population();
    let n = spec.answer_count;

    let anchor = Curie::new("SYNX:00000").expect("static curie");
    let mut nodes = vec![NodeRecord::new(
        anchor.clone(),
        "synthetic disease",
        &[ANCHOR_CATEGORY],
    )];
    nodes.extend((0..big_n).map(|i| {
        NodeRecord::new(
            curie("SYND", i),
            format!("synthetic drug {i}"),
            &[spec.answer_type.as_str()],
        )
    }));
    let drug = |i: usize| i + 1; // position in `nodes`

    let mut answers: Vec<usize> = sample(&mut rng, big_n, n).into_vec();
    answers.sort_unstable();
    let answer_set: BTreeSet<usize> = answers.iter().copied().collect();
    let others: Vec<usize> = (0..big_n).filter(|i| !answer_set.contains(i)).collect();

    let mut edges: Vec<EdgeRecord> = answers
        .iter()
        .map(|&a| {
            EdgeRecord::new(
                nodes[drug(a)].id.clone(),
                LOOKUP_PREDICATE,
                anchor.clone(),
                "synthetic",
            )
        })
        .collect();

    let mut targets = Vec::new();
    let mut genes = Vec::new();
    for (j, planted) in spec.planted_targets.iter().enumerate() {
        let mut members: Vec<usize> = sample(&mut rng, n, planted.overlap)
            .into_iter()
            .map(|i| answers[i])
            .collect();
        let mut hidden: Vec<usize> = sample(&mut rng, others.len(), planted.hidden_count())
            .into_iter()
            .map(|i| others[i])
            .collect();
        members.sort_unstable();
        hidden.sort_unstable();
        let target = match planted.kind {
            TargetKind::Graph => {
                let gene = curie("SYNG", j);
                genes.push(NodeRecord::new(
                    gene.clone(),
                    format!("planted gene {j}"),
                    &[TARGET_CATEGORY],
                ));
                let direction = planted.direction.unwrap_or(Direction::Out);
                for &d in members.iter().chain(&hidden) {
                    let id = nodes[drug(d)].id.clone();
                    let (s, o) = match direction {
                        Direction::Out => (id, gene.clone()),
                        _ => (gene.clone(), id),
                    };
                    edges.push(EdgeRecord::new(s, PLANTED_PREDICATE, o, "planted"));
                }
                RuleTarget::Graph {
                    node: gene,
                    predicate: PLANTED_PREDICATE.to_owned(),
                    direction,
                }
            }
            TargetKind::Property => {
                let tag = format!("planted_{j}");
                for &d in members.iter().chain(&hidden) {
                    let node = &mut nodes[drug(d)];
                    node.properties
                        .entry(PLANTED_PROPERTY.to_owned())
                        .or_default()
                        .insert(tag.clone());
                }
                RuleTarget::Property {
                    key: PLANTED_PROPERTY.to_owned(),
                    tag,
                }
            }
        };
        let counts = EnrichmentCounts::new(
            big_n as u64,
            (members.len() + hidden.len()) as u64,
            n as u64,
            members.len() as u64,
        )?;
        targets.push(PlantedTruth {
            target,
            expected_p: rational_to_f64(&hypergeom_sf_rational(&counts)),
            counts,
            members: members.iter().map(|&d| nodes[drug(d)].id.clone()).collect(),
            hidden: hidden.iter().map(|&d| nodes[drug(d)].id.clone()).collect(),
        });
    }

    let noise_start = nodes.len();
    nodes.extend(
        (0..spec.noise_nodes)
            .map(|i| NodeRecord::new(curie("SYNN", i), format!("noise {i}"), &[NOISE_CATEGORY])),
    );
    // noise endpoints: answer-type nodes and noise nodes only
    let endpoints: Vec<usize> = (1..=big_n).chain(noise_start..nodes.len()).collect();
    for _ in 0..spec.noise_edges {
        let si = rng.random_range(0..endpoints.len());
        let mut oi = rng.random_range(0..endpoints.len() - 1);
        if oi >= si {
            // uniform over the other endpoints, never a self loop
            oi += 1;
        }
        let (s, o) = (endpoints[si], endpoints[oi]);
        let pred = NOISE_PREDICATES[rng.random_range(0..NOISE_PREDICATES.len())];
        edges.push(EdgeRecord::new(
            nodes[s].id.clone(),
            pred,
            nodes[o].id.clone(),
            "noise",
        ));
    }
    nodes.extend(genes);

    let hidden_candidates: BTreeSet<Curie> = targets
        .iter()
        .flat_map(|t| t.hidden.iter().cloned())
        .collect();
    let truth = Truth {
        seed: spec.seed,
        anchor,
        answer_type: spec.answer_type.clone(),
        answers: answers.iter().map(|&a| nodes[drug(a)].id.clone()).collect(),
        targets,
        hidden_candidates: hidden_candidates.into_iter().collect(),
    };
    Ok(Generated {
        nodes,
        edges,
        predicates: synth_predicates(),
        categories: synth_categories(),
        truth,
    })
}
