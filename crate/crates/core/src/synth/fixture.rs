//! A miniature Alzheimer disease graph.
//!
//! Fourteen drugs treat the disease. They share eight ChEBI roles and twelve
//! gene, protein and disease neighbours. Ten further named drugs share some of
//! those features and are what inference should propose. Disjoint background
//! drugs bring each feature up to a fixed population count `K`; the counts
//! were fitted so that, with 8000 drugs in total, every feature passes
//! `p0 = 1e-5` under the exact test, in a fixed p-value order.
//!
//! The fixture also carries distractors for each filter: a taxon node (node
//! exclusion), adverse-event and contraindication edges (predicate
//! exclusion), and a widely shared gene and role (not significant).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::curie::Curie;
use crate::error::{Error, Result};
use crate::ontology::{Ontology, OntologyKind};
use crate::query::{QueryRequest, Template};
use crate::store::{
    write_json, write_jsonl, EdgeRecord, IngestOptions, NodeRecord, Store, CATEGORIES_FILE,
    EDGES_FILE, NODES_FILE, PREDICATES_FILE,
};
use crate::synth::generator::QUERY_FILE;

pub const FIXTURE_MANIFEST_FILE: &str = "fixture_manifest.json";
pub const AD_CURIE: &str = "MONDO:0004975";
pub const ROLE_KEY: &str = "chebi_role";
pub const DRUG_POPULATION: usize = 8000;
const DRUG: &str = "biolink:Drug";

/// `(curie, name, source)`.
pub const LOOKUP_DRUGS: [(&str, &str, &str); 14] = [
    ("CHEBI:57589", "O-acetyl-L-carnitine", "drugcentral"),
    ("CHEBI:8874", "rivastigmine", "drugcentral"),
    ("CHEBI:9086", "(-)-selegiline", "hetionet"),
    ("CHEBI:3048", "benzatropine", "hetionet"),
    ("CHEBI:15355", "acetylcholine", "drugmechdb"),
    ("CHEBI:8888", "ropinirole", "hetionet"),
    ("CHEBI:64312", "memantine", "hetionet"),
    ("CHEBI:8707", "quetiapine", "hetionet"),
    ("UNII:12PYH0FTU9", "LECANEMAB", "drugcentral"),
    ("CHEBI:45980", "tacrine", "drugcentral"),
    ("CHEBI:5613", "haloperidol", "hetionet"),
    ("UNII:105J35OE21", "ADUCANUMAB", "drugcentral"),
    ("CHEBI:42944", "galanthamine", "drugcentral"),
    ("CHEBI:53289", "donepezil", "hetionet"),
];

pub struct RoleGroup {
    pub tag: &'static str,
    /// CHEBI local ids of the lookup drugs holding the role.
    pub members: &'static [u32],
    /// Drugs holding the role in the whole fixture.
    pub population: usize,
}

/// In expected p-value order.
pub const ROLE_GROUPS: [RoleGroup; 8] = [
    RoleGroup {
        tag: "neurotransmitter_agent",
        members: &[3048, 64312, 15355, 8707, 5613, 8888, 8874, 42944],
        population: 242,
    },
    RoleGroup {
        tag: "antidyskinesia_agent",
        members: &[64312, 8888, 5613, 3048],
        population: 16,
    },
    RoleGroup {
        tag: "dopaminergic_agent",
        members: &[64312, 8888, 8707, 5613],
        population: 44,
    },
    RoleGroup {
        tag: "antiparkinson_drug",
        members: &[64312, 8888, 3048],
        population: 15,
    },
    RoleGroup {
        tag: "cholinergic_drug",
        members: &[15355, 8874, 3048, 42944],
        population: 58,
    },
    RoleGroup {
        tag: "central_nervous_system_drug",
        members: &[3048, 64312, 8707, 5613, 8888],
        population: 139,
    },
    RoleGroup {
        tag: "ec_3_1_1_carboxylic_ester_hydrolase_inhibitor",
        members: &[53289, 45980, 8874, 42944],
        population: 76,
    },
    RoleGroup {
        tag: "ec_3_1_1_8_cholinesterase_inhibitor",
        members: &[53289, 8874, 42944],
        population: 24,
    },
];

pub struct GraphTarget {
    pub curie: &'static str,
    pub name: &'static str,
    pub category: &'static str,
    /// Drugs are always the edge subject.
    pub predicate: &'static str,
    pub members: &'static [u32],
    pub population: usize,
}

const DECREASES: &str = "biolink:decreases_activity_of";
const ACE_INHIBITORS: &[u32] = &[8874, 53289, 42944, 45980];

/// In expected p-value order; equal p-values are ordered by curie.
pub const GRAPH_TARGETS: [GraphTarget; 12] = [
    GraphTarget {
        curie: "NCBIGene:100033901",
        name: "BCHE",
        category: "biolink:Gene",
        predicate: DECREASES,
        members: ACE_INHIBITORS,
        population: 20,
    },
    GraphTarget {
        curie: "UniProtKB:P81908",
        name: "CHLE_HORSE Cholinesterase (sprot)",
        category: "biolink:Protein",
        predicate: "biolink:binds",
        members: ACE_INHIBITORS,
        population: 42,
    },
    GraphTarget {
        curie: "MONDO:0005180",
        name: "Parkinson disease",
        category: "biolink:Disease",
        predicate: "biolink:ameliorates_condition",
        members: &[8874, 64312, 3048, 8888, 9086],
        population: 105,
    },
    GraphTarget {
        curie: "MONDO:0007488",
        name: "Lewy body dementia",
        category: "biolink:Disease",
        predicate: "biolink:treats",
        members: &[8874, 53289, 42944],
        population: 15,
    },
    GraphTarget {
        curie: "NCBIGene:11423",
        name: "Ache",
        category: "biolink:Gene",
        predicate: DECREASES,
        members: ACE_INHIBITORS,
        population: 56,
    },
    GraphTarget {
        curie: "NCBIGene:43",
        name: "ACHE",
        category: "biolink:Gene",
        predicate: "biolink:binds",
        members: ACE_INHIBITORS,
        population: 56,
    },
    GraphTarget {
        curie: "UniProtKB:P04058",
        name: "ACES_TETCF Acetylcholinesterase (sprot)",
        category: "biolink:Protein",
        predicate: DECREASES,
        members: ACE_INHIBITORS,
        population: 56,
    },
    GraphTarget {
        curie: "NCBIGene:590",
        name: "BCHE",
        category: "biolink:Gene",
        predicate: "biolink:affects_abundance_of",
        members: &[8874, 15355, 53289, 45980, 42944],
        population: 157,
    },
    GraphTarget {
        curie: "NCBIGene:83817",
        name: "Ache",
        category: "biolink:Gene",
        predicate: DECREASES,
        members: ACE_INHIBITORS,
        population: 74,
    },
    GraphTarget {
        curie: "NCBIGene:1145",
        name: "CHRNE",
        category: "biolink:Gene",
        predicate: DECREASES,
        members: &[53289, 42944, 45980],
        population: 22,
    },
    GraphTarget {
        curie: "NCBIGene:25229",
        name: "Chrm1",
        category: "biolink:Gene",
        predicate: "biolink:related_to",
        members: &[15355, 3048, 45980, 8707, 5613],
        population: 172,
    },
    GraphTarget {
        curie: "NCBIGene:25111",
        name: "Chrm4",
        category: "biolink:Gene",
        predicate: "biolink:related_to",
        members: &[8707, 15355, 5613, 45980],
        population: 82,
    },
];

pub struct NamedCandidate {
    pub curie: &'static str,
    pub name: &'static str,
    pub roles: &'static [&'static str],
    /// Curies of graph targets it links to, with that target's predicate.
    pub targets: &'static [&'static str],
}

pub const NAMED_CANDIDATES: [NamedCandidate; 10] = [
    NamedCandidate {
        curie: "CHEBI:27953",
        name: "physostigmine",
        roles: &[
            "neurotransmitter_agent",
            "cholinergic_drug",
            "ec_3_1_1_carboxylic_ester_hydrolase_inhibitor",
            "ec_3_1_1_8_cholinesterase_inhibitor",
        ],
        targets: &[
            "NCBIGene:100033901",
            "UniProtKB:P81908",
            "NCBIGene:11423",
            "NCBIGene:43",
            "UniProtKB:P04058",
            "NCBIGene:590",
            "NCBIGene:83817",
        ],
    },
    NamedCandidate {
        curie: "CHEBI:553827",
        name: "bambuterol",
        roles: &[
            "ec_3_1_1_carboxylic_ester_hydrolase_inhibitor",
            "ec_3_1_1_8_cholinesterase_inhibitor",
        ],
        targets: &["NCBIGene:100033901", "NCBIGene:590"],
    },
    NamedCandidate {
        curie: "CHEBI:9150",
        name: "simvastatin",
        roles: &[],
        targets: &["MONDO:0005180"],
    },
    NamedCandidate {
        curie: "CHEBI:8711",
        name: "quinacrine",
        roles: &[],
        targets: &["NCBIGene:25229"],
    },
    NamedCandidate {
        curie: "CHEBI:3510",
        name: "ceftibuten",
        roles: &[],
        targets: &["NCBIGene:25111"],
    },
    NamedCandidate {
        curie: "CHEBI:69478",
        name: "cannabidiol",
        roles: &[],
        targets: &["MONDO:0007488"],
    },
    NamedCandidate {
        curie: "CHEBI:7514",
        name: "neostigmine",
        roles: &["neurotransmitter_agent", "cholinergic_drug"],
        targets: &["NCBIGene:11423", "NCBIGene:43", "NCBIGene:1145"],
    },
    NamedCandidate {
        curie: "CHEBI:45713",
        name: "trans-resveratrol",
        roles: &[],
        targets: &["NCBIGene:590"],
    },
    NamedCandidate {
        curie: "CHEBI:4754",
        name: "econazole",
        roles: &[],
        targets: &["UniProtKB:P81908"],
    },
    NamedCandidate {
        curie: "CHEBI:93248",
        name: "2-(6R,7R)-7-[[2-(2-amino-4-thiazolyl)-(carboxymethoxyimino)-1-oxoethyl]amino]-3-ethenyl-8-oxo-5-thia-1-azabicyclo[4.2.0]oct-2-ene-2-carboxylic acid",
        roles: &[],
        targets: &["NCBIGene:1145"],
    },
];

struct Distractor {
    curie: &'static str,
    name: &'static str,
    category: &'static str,
    predicate: &'static str,
    lookup_members: &'static [u32],
    background: usize,
}

const DISTRACTORS: [Distractor; 4] = [
    // excluded node
    Distractor {
        curie: "NCBITaxon:9606",
        name: "Homo sapiens",
        category: "biolink:OrganismTaxon",
        predicate: "biolink:in_taxon",
        lookup_members: &[8874, 53289, 42944, 45980, 64312, 3048],
        background: 20,
    },
    // excluded predicate, and its generic ancestor must not leak back in
    Distractor {
        curie: "HP:0002321",
        name: "Vertigo",
        category: "biolink:PhenotypicFeature",
        predicate: "biolink:has_adverse_event",
        lookup_members: &[8874, 53289, 42944, 45980, 5613, 8707],
        background: 10,
    },
    Distractor {
        curie: "MONDO:0005044",
        name: "hypertensive disorder",
        category: "biolink:Disease",
        predicate: "biolink:contraindicated_for",
        lookup_members: &[8874, 53289, 42944],
        background: 5,
    },
    // shared but too common to be significant
    Distractor {
        curie: "NCBIGene:1565",
        name: "CYP2D6",
        category: "biolink:Gene",
        predicate: "biolink:interacts_with",
        lookup_members: &[5613, 8707, 3048, 8888, 42944],
        background: 900,
    },
];

const COMMON_ROLE: (&str, &[u32], usize) = ("antioxidant", &[57589, 9086], 300);

pub fn fixture_predicates() -> Ontology {
    Ontology::from_json(
        OntologyKind::Predicate,
        &json!({
            "roots": ["biolink:related_to"],
            "biolink:affects": ["biolink:related_to"],
            "biolink:affects_activity_of": ["biolink:affects"],
            "biolink:decreases_activity_of": ["biolink:affects_activity_of"],
            "biolink:affects_abundance_of": ["biolink:affects"],
            "biolink:interacts_with": ["biolink:related_to"],
            "biolink:physically_interacts_with": ["biolink:interacts_with"],
            "biolink:binds": ["biolink:physically_interacts_with"],
            "biolink:treats_or_applied_or_studied_to_treat": ["biolink:related_to"],
            "biolink:treats": ["biolink:treats_or_applied_or_studied_to_treat"],
            "biolink:ameliorates_condition": ["biolink:treats_or_applied_or_studied_to_treat"],
            "biolink:contributes_to": ["biolink:related_to"],
            "biolink:causes": ["biolink:contributes_to"],
            "biolink:contraindicated_for": ["biolink:related_to"],
            "biolink:biomarker_for": ["biolink:related_to"],
            "biolink:has_adverse_event": ["biolink:related_to"],
            "biolink:causes_adverse_event": ["biolink:has_adverse_event"],
            "biolink:in_taxon": ["biolink:related_to"],
            "biolink:genetically_associated_with": ["biolink:related_to"],
        }),
    )
    .expect("static ontology")
}

pub fn fixture_categories() -> Ontology {
    Ontology::from_json(
        OntologyKind::Category,
        &json!({
            "roots": ["biolink:NamedThing"],
            "biolink:ChemicalEntity": ["biolink:NamedThing"],
            "biolink:Drug": ["biolink:ChemicalEntity"],
            "biolink:SmallMolecule": ["biolink:ChemicalEntity"],
            "biolink:DiseaseOrPhenotypicFeature": ["biolink:NamedThing"],
            "biolink:Disease": ["biolink:DiseaseOrPhenotypicFeature"],
            "biolink:PhenotypicFeature": ["biolink:DiseaseOrPhenotypicFeature"],
            "biolink:BiologicalEntity": ["biolink:NamedThing"],
            "biolink:Gene": ["biolink:BiologicalEntity"],
            "biolink:Protein": ["biolink:BiologicalEntity"],
            "biolink:BiologicalProcessOrActivity": ["biolink:BiologicalEntity"],
            "biolink:BiologicalProcess": ["biolink:BiologicalProcessOrActivity"],
            "biolink:MolecularActivity": ["biolink:BiologicalProcessOrActivity"],
            "biolink:OrganismTaxon": ["biolink:NamedThing"],
            "biolink:InformationContentEntity": ["biolink:NamedThing"],
        }),
    )
    .expect("static ontology")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureFeature {
    pub kind: String,
    /// Node curie or role tag.
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicate: Option<String>,
    pub members: Vec<Curie>,
    pub named: Vec<Curie>,
    pub background: usize,
    /// `K`.
    pub population: usize,
}

/// Every count the fixture was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub anchor: Curie,
    pub answer_type: String,
    pub drug_population: usize,
    pub lookup: Vec<Curie>,
    pub features: Vec<FixtureFeature>,
    pub named_candidates: Vec<Curie>,
    pub background_drugs: usize,
    pub node_count: usize,
    pub asserted_edge_count: usize,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub predicates: Ontology,
    pub categories: Ontology,
    pub manifest: FixtureManifest,
}

fn chebi(local: u32) -> Curie {
    Curie::new(format!("CHEBI:{local}")).expect("static curie")
}

fn c(s: &str) -> Curie {
    Curie::new(s).expect("static curie")
}

struct Background {
    next: usize,
    nodes: Vec<NodeRecord>,
}

impl Background {
    /// Fresh background drugs.
    fn take(&mut self, count: usize) -> Vec<Curie> {
        (0..count)
            .map(|_| {
                let i = self.next;
                self.next += 1;
                let id = Curie::new(format!("EDGARFX:{i:05}")).expect("generated curie");
                self.nodes.push(NodeRecord::new(
                    id.clone(),
                    format!("background drug {i}"),
                    &[DRUG],
                ));
                id
            })
            .collect()
    }
}

/// Builds the fixture. Deterministic.
pub fn ad_fixture() -> Fixture {
    let ad = c(AD_CURIE);
    let mut nodes: BTreeMap<Curie, NodeRecord> = BTreeMap::new();
    let mut edges = Vec::new();

    nodes.insert(
        ad.clone(),
        NodeRecord::new(ad.clone(), "Alzheimer disease", &["biolink:Disease"]),
    );
    for (id, name, source) in LOOKUP_DRUGS {
        let id = c(id);
        nodes.insert(id.clone(), NodeRecord::new(id.clone(), name, &[DRUG]));
        edges.push(EdgeRecord::new(id, "biolink:treats", ad.clone(), source));
    }
    for cand in &NAMED_CANDIDATES {
        let id = c(cand.curie);
        let mut node = NodeRecord::new(id.clone(), cand.name, &[DRUG]);
        for role in cand.roles {
            node = node.with_tag(ROLE_KEY, role);
        }
        nodes.insert(id, node);
    }

    let mut bg = Background {
        next: 1,
        nodes: Vec::new(),
    };
    let mut features = Vec::new();

    for group in &ROLE_GROUPS {
        let members: Vec<Curie> = group.members.iter().map(|&m| chebi(m)).collect();
        let named: Vec<Curie> = NAMED_CANDIDATES
            .iter()
            .filter(|n| n.roles.contains(&group.tag))
            .map(|n| c(n.curie))
            .collect();
        let background = group.population - members.len() - named.len();
        for id in &members {
            tag(nodes.get_mut(id).expect("lookup drug"), group.tag);
        }
        bg.take(background);
        for node in bg.nodes.iter_mut().rev().take(background) {
            tag(node, group.tag);
        }
        features.push(FixtureFeature {
            kind: "property".into(),
            id: group.tag.into(),
            predicate: None,
            members,
            named,
            background,
            population: group.population,
        });
    }

    for target in &GRAPH_TARGETS {
        let node_id = c(target.curie);
        nodes.insert(
            node_id.clone(),
            NodeRecord::new(node_id.clone(), target.name, &[target.category]),
        );
        let members: Vec<Curie> = target.members.iter().map(|&m| chebi(m)).collect();
        let named: Vec<Curie> = NAMED_CANDIDATES
            .iter()
            .filter(|n| n.targets.contains(&target.curie))
            .map(|n| c(n.curie))
            .collect();
        let background = target.population - members.len() - named.len();
        let drugs: Vec<Curie> = members
            .iter()
            .chain(&named)
            .cloned()
            .chain(bg.take(background))
            .collect();
        for d in drugs {
            edges.push(EdgeRecord::new(
                d,
                target.predicate,
                node_id.clone(),
                "fixture",
            ));
        }
        features.push(FixtureFeature {
            kind: "graph".into(),
            id: target.curie.into(),
            predicate: Some(target.predicate.into()),
            members,
            named,
            background,
            population: target.population,
        });
    }

    let feature_background = bg.next - 1;
    let named_count = NAMED_CANDIDATES.len();
    let filler = DRUG_POPULATION - LOOKUP_DRUGS.len() - named_count - feature_background;
    let filler_ids = bg.take(filler);

    // distractors draw their background from the filler drugs, spread out
    let spread = |count: usize, offset: usize| -> Vec<Curie> {
        (0..count)
            .map(|i| filler_ids[(offset + i * 7) % filler_ids.len()].clone())
            .collect()
    };
    for (j, d) in DISTRACTORS.iter().enumerate() {
        let id = c(d.curie);
        nodes.insert(
            id.clone(),
            NodeRecord::new(id.clone(), d.name, &[d.category]),
        );
        let drugs: Vec<Curie> = d
            .lookup_members
            .iter()
            .map(|&m| chebi(m))
            .chain(spread(d.background, j * 1000))
            .collect();
        for drug in drugs {
            edges.push(EdgeRecord::new(drug, d.predicate, id.clone(), "fixture"));
        }
    }
    let (role, holders, count) = COMMON_ROLE;
    let common: BTreeSet<Curie> = spread(count, 5000).into_iter().collect();
    for node in bg.nodes.iter_mut().filter(|n| common.contains(&n.id)) {
        tag(node, role);
    }
    for id in holders.iter().map(|&m| chebi(m)) {
        tag(nodes.get_mut(&id).expect("lookup drug"), role);
    }

    let background_drugs = bg.nodes.len();
    for node in bg.nodes {
        nodes.insert(node.id.clone(), node);
    }
    let nodes: Vec<NodeRecord> = nodes.into_values().collect();
    let manifest = FixtureManifest {
        anchor: ad,
        answer_type: DRUG.to_owned(),
        drug_population: DRUG_POPULATION,
        lookup: LOOKUP_DRUGS.iter().map(|(id, _, _)| c(id)).collect(),
        features,
        named_candidates: NAMED_CANDIDATES.iter().map(|n| c(n.curie)).collect(),
        background_drugs,
        node_count: nodes.len(),
        asserted_edge_count: edges.len(),
    };
    Fixture {
        nodes,
        edges,
        predicates: fixture_predicates(),
        categories: fixture_categories(),
        manifest,
    }
}

fn tag(node: &mut NodeRecord, tag: &str) {
    node.properties
        .entry(ROLE_KEY.to_owned())
        .or_default()
        .insert(tag.to_owned());
}

impl Fixture {
    /// The drug-treats-disease request for the fixture's anchor.
    pub fn query(&self) -> QueryRequest {
        Template::DrugTreatsDisease.request(&self.manifest.anchor)
    }

    /// An expanded store over the fixture.
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

    /// Writes the ingest inputs, `query.json` and the fixture manifest.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&dir.join(NODES_FILE), &self.nodes)?;
        write_jsonl(&dir.join(EDGES_FILE), &self.edges)?;
        write_json(&dir.join(PREDICATES_FILE), &self.predicates.to_json())?;
        write_json(&dir.join(CATEGORIES_FILE), &self.categories.to_json())?;
        write_json(&dir.join(QUERY_FILE), &self.query())?;
        write_json(&dir.join(FIXTURE_MANIFEST_FILE), &self.manifest)?;
        Ok(())
    }
}
