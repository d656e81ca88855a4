use edgar_core::synth::ad_fixture;
use edgar_core::synth::fixture::{GRAPH_TARGETS, LOOKUP_DRUGS, ROLE_GROUPS, ROLE_KEY};
use edgar_core::{run_pipeline, Curie, Direction, PipelineConfig, PipelineOutput, RuleTarget};

fn run() -> PipelineOutput {
    let fx = ad_fixture();
    let store = fx.store().unwrap();
    run_pipeline(
        &store,
        &fx.query().message.query_graph,
        &PipelineConfig::default(),
    )
    .unwrap()
}

fn chebi(ids: &[u32]) -> Vec<Curie> {
    let mut v: Vec<Curie> = ids
        .iter()
        .map(|i| Curie::new(format!("CHEBI:{i}")).unwrap())
        .collect();
    v.sort();
    v
}

#[test]
fn lookup_is_the_fourteen_drugs() {
    let out = run();
    let mut want: Vec<Curie> = LOOKUP_DRUGS
        .iter()
        .map(|(c, _, _)| Curie::new(*c).unwrap())
        .collect();
    want.sort();
    assert_eq!(out.lookup.answers, want);
}

#[test]
fn property_rules_in_order() {
    let out = run();
    let got: Vec<(&str, &Vec<Curie>)> = out
        .enrichment
        .rules
        .iter()
        .filter_map(|r| match &r.target {
            RuleTarget::Property { key, tag } if key == ROLE_KEY => {
                Some((tag.as_str(), &r.members))
            }
            _ => None,
        })
        .collect();
    let want: Vec<(&str, Vec<Curie>)> = ROLE_GROUPS
        .iter()
        .map(|g| (g.tag, chebi(g.members)))
        .collect();
    assert_eq!(got.len(), want.len(), "{got:?}");
    for ((gt, gm), (wt, wm)) in got.iter().zip(&want) {
        assert_eq!(gt, wt);
        assert_eq!(*gm, wm);
    }
}

#[test]
fn graph_rules_in_order() {
    let out = run();
    let mut order = Vec::new();
    for t in &GRAPH_TARGETS {
        let (i, rule) = out
            .enrichment
            .rules
            .iter()
            .enumerate()
            .find(|(_, r)| {
                matches!(&r.target, RuleTarget::Graph { node, predicate, direction }
                    if node.as_str() == t.curie && predicate == t.predicate && *direction == Direction::Out)
            })
            .unwrap_or_else(|| panic!("no rule for {}", t.curie));
        assert_eq!(rule.members, chebi(t.members), "{}", t.curie);
        order.push(i);
    }
    assert!(order.windows(2).all(|w| w[0] < w[1]), "{order:?}");
}

#[test]
fn distractors_do_not_surface() {
    let out = run();
    for r in &out.enrichment.rules {
        if let RuleTarget::Graph { node, .. } = &r.target {
            assert!(
                ![
                    "NCBITaxon:9606",
                    "HP:0002321",
                    "MONDO:0005044",
                    "NCBIGene:1565"
                ]
                .contains(&node.as_str()),
                "{}",
                r.target
            );
        }
        if let RuleTarget::Property { tag, .. } = &r.target {
            assert_ne!(tag, "antioxidant");
        }
    }
}

#[test]
fn physostigmine_has_both_kinds_of_support() {
    let out = run();
    let c = out
        .candidates
        .iter()
        .find(|c| c.id.as_str() == "CHEBI:27953")
        .unwrap();
    assert!(!c.in_lookup);
    let kinds: std::collections::BTreeSet<&str> = c
        .supporting_rules
        .iter()
        .map(|&i| out.enrichment.rules[i].target.kind())
        .collect();
    assert_eq!(kinds.into_iter().collect::<Vec<_>>(), ["graph", "property"]);
    let first_novel = out.candidates.iter().find(|c| !c.in_lookup).unwrap();
    assert_eq!(first_novel.id.as_str(), "CHEBI:27953");
}

#[test]
fn shipped_files_match_the_generator() {
    let shipped = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/ad");
    let dir = tempfile::tempdir().unwrap();
    ad_fixture().write(dir.path()).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for name in names {
        let fresh = std::fs::read(dir.path().join(&name)).unwrap();
        let on_disk = std::fs::read(shipped.join(&name)).unwrap_or_default();
        assert!(
            fresh == on_disk,
            "fixtures/ad/{} is stale; rerun `edgar synth --ad-fixture --out fixtures/ad`",
            name.to_string_lossy()
        );
    }
}
