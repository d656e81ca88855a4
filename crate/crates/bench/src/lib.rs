//! Shared inputs for the benchmarks.

use edgar_core::store::IngestOptions;
use edgar_core::synth::{ad_fixture, generate, PlantSpec, PlantedTarget};
use edgar_core::{Curie, NodeRecord, QueryGraph, Store};

/// The Alzheimer disease fixture plus `extra` disconnected nodes of an
/// unrelated category.
pub fn ad_store_with_padding(extra: usize) -> (Store, QueryGraph) {
    let fx = ad_fixture();
    let mut nodes = fx.nodes.clone();
    nodes.extend((0..extra).map(|i| {
        NodeRecord::new(
            Curie::new(format!("PAD:{i:08}")).expect("generated curie"),
            format!("padding {i}"),
            &["biolink:InformationContentEntity"],
        )
    }));
    let (store, _) = Store::from_records(
        nodes,
        fx.edges.clone(),
        fx.predicates.clone(),
        fx.categories.clone(),
        IngestOptions::default(),
    )
    .expect("fixture ingests");
    (store.expand_redundant(), fx.query().message.query_graph)
}

/// A planted graph whose answer type has `population` members and whose
/// noise grows with it.
pub fn planted(population: usize, seed: u64) -> (Store, QueryGraph) {
    let spec = PlantSpec {
        seed,
        answer_count: 25,
        population: Some(population),
        planted_targets: (0..20)
            .map(|j| {
                if j % 2 == 0 {
                    PlantedTarget::graph(8 + j, 6)
                } else {
                    PlantedTarget::property(8 + j, 5)
                }
            })
            .collect(),
        noise_nodes: population / 10,
        noise_edges: population * 3,
        answer_type: "biolink:Drug".into(),
    };
    let g = generate(&spec).expect("valid spec");
    (
        g.store().expect("generated graph ingests"),
        g.truth.query().message.query_graph,
    )
}
