//! Exhaustive reference implementation of enrichment and inference.
//!
//! Shares no code with the pipeline beyond the store's record lists and
//! ontologies: relations are re-derived from asserted edges through ancestor
//! walks, counts are recomputed by scanning every node, and p-values are exact
//! rationals.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::config::{normalize_predicate, PipelineConfig};
use crate::curie::Curie;
use crate::error::{Error, Result};
use crate::pipeline::{EnrichmentRule, InferredCandidate, LookupResult, RuleTarget};
use crate::stats::{EnrichmentCounts, Method, PValue};
use crate::store::{Direction, Store};

/// Largest store the oracle accepts.
pub const ORACLE_MAX_NODES: usize = 200;

fn binomial(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `P(X >= k)` as an exact fraction.
pub fn hypergeom_sf_rational(counts: &EnrichmentCounts) -> BigRational {
    let EnrichmentCounts {
        population,
        successes,
        draws,
        observed,
    } = *counts;
    let mut num = BigUint::zero();
    for i in observed..=draws.min(successes) {
        if draws - i > population - successes {
            continue;
        }
        num += binomial(successes, i) * binomial(population - successes, draws - i);
    }
    BigRational::new(BigInt::from(num), BigInt::from(binomial(population, draws)))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite ratio")
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutput {
    pub rules: Vec<EnrichmentRule>,
    pub pre_filter: usize,
    pub candidates: Vec<InferredCandidate>,
}

/// Every rule and candidate the pipeline should report for `lookup`.
pub fn brute_force_oracle(
    store: &Store,
    lookup: &LookupResult,
    config: &PipelineConfig,
) -> Result<OracleOutput> {
    let nodes = store.nodes();
    if nodes.len() > ORACLE_MAX_NODES {
        return Err(Error::Invalid(format!(
            "oracle limited to {ORACLE_MAX_NODES} nodes, store has {}",
            nodes.len()
        )));
    }
    let preds = store.predicates();
    let cats = store.categories();

    let listed: BTreeSet<String> = config
        .predicate_exclusions
        .iter()
        .map(|p| normalize_predicate(p))
        .collect();
    let excluded = |name: &str| -> bool {
        let id = preds.id(name).expect("known predicate");
        listed.contains(name)
            || preds
                .ancestors(id)
                .iter()
                .any(|&a| listed.contains(preds.name(a)))
    };
    let answer_cat = cats.id(&lookup.answer_type).expect("known category");
    let is_answer_type = |id: &Curie| -> bool {
        let node = store.node(id).expect("known node");
        cats.closure(node.categories.iter().map(String::as_str))
            .contains(&answer_cat)
    };
    let excluded_node = |id: &Curie| config.node_exclusions.contains(id);

    // (subject, predicate, object) for every predicate implied by an allowed asserted edge
    let mut related: HashSet<(&str, &str, &str)> = HashSet::new();
    for e in store.edges().iter().filter(|e| !e.derived) {
        if excluded(&e.predicate) {
            continue;
        }
        let id = preds.id(&e.predicate).expect("known predicate");
        related.insert((e.subject.as_str(), e.predicate.as_str(), e.object.as_str()));
        for &a in preds.ancestors(id) {
            related.insert((e.subject.as_str(), preds.name(a), e.object.as_str()));
        }
    }
    let holds = |member: &Curie, pred: &str, target: &Curie, dir: Direction| match dir {
        Direction::Out => related.contains(&(member.as_str(), pred, target.as_str())),
        _ => related.contains(&(target.as_str(), pred, member.as_str())),
    };

    let typed: Vec<&Curie> = nodes
        .iter()
        .map(|n| &n.id)
        .filter(|id| is_answer_type(id))
        .collect();
    let population = typed.len() as u64;
    let draws = lookup.answers.len() as u64;
    let min_k = config.min_k.max(1);

    struct Scored {
        rule: EnrichmentRule,
        exact: BigRational,
        key: String,
    }
    let mut scored = Vec::new();
    let mut pre_filter = 0;
    let mut consider = |target: RuleTarget, members: Vec<Curie>, k_pop: usize| {
        if members.len() < min_k {
            return;
        }
        pre_filter += 1;
        let counts = EnrichmentCounts {
            population,
            successes: k_pop as u64,
            draws,
            observed: members.len() as u64,
        };
        let exact = hypergeom_sf_rational(&counts);
        let value = rational_to_f64(&exact);
        if value < config.p0 {
            scored.push(Scored {
                key: target.to_string(),
                rule: EnrichmentRule {
                    target,
                    members,
                    counts,
                    p: PValue {
                        value,
                        method: Method::Exact,
                    },
                },
                exact,
            });
        }
    };

    for g in nodes.iter().map(|n| &n.id) {
        if *g == lookup.anchor || excluded_node(g) {
            continue;
        }
        for (_, pred) in preds.terms() {
            if excluded(pred) {
                continue;
            }
            for dir in [Direction::Out, Direction::In] {
                let members: Vec<Curie> = lookup
                    .answers
                    .iter()
                    .filter(|m| holds(m, pred, g, dir))
                    .cloned()
                    .collect();
                if members.len() < min_k {
                    continue;
                }
                let k_pop = typed.iter().filter(|x| holds(x, pred, g, dir)).count();
                let target = RuleTarget::Graph {
                    node: g.clone(),
                    predicate: pred.to_owned(),
                    direction: dir,
                };
                consider(target, members, k_pop);
            }
        }
    }

    let mut tags: BTreeSet<(&str, &str)> = BTreeSet::new();
    for n in nodes {
        for (key, set) in &n.properties {
            for tag in set {
                tags.insert((key, tag));
            }
        }
    }
    let has_tag = |id: &Curie, key: &str, tag: &str| {
        store
            .node(id)
            .and_then(|n| n.properties.get(key))
            .is_some_and(|s| s.contains(tag))
    };
    for (key, tag) in tags {
        let members: Vec<Curie> = lookup
            .answers
            .iter()
            .filter(|m| has_tag(m, key, tag))
            .cloned()
            .collect();
        let k_pop = typed.iter().filter(|x| has_tag(x, key, tag)).count();
        let target = RuleTarget::Property {
            key: key.to_owned(),
            tag: tag.to_owned(),
        };
        consider(target, members, k_pop);
    }

    scored.sort_by(|a, b| match a.exact.cmp(&b.exact) {
        Ordering::Equal => a.key.cmp(&b.key),
        other => other,
    });
    scored.truncate(config.max_rules);
    let rules: Vec<EnrichmentRule> = scored.into_iter().map(|s| s.rule).collect();

    let mut support: BTreeMap<&Curie, Vec<usize>> = BTreeMap::new();
    for (i, rule) in rules.iter().enumerate() {
        for &x in &typed {
            if *x == lookup.anchor || excluded_node(x) {
                continue;
            }
            let hit = match &rule.target {
                RuleTarget::Graph {
                    node,
                    predicate,
                    direction,
                } => holds(x, predicate, node, *direction),
                RuleTarget::Property { key, tag } => has_tag(x, key, tag),
            };
            if hit {
                support.entry(x).or_default().push(i);
            }
        }
    }
    let mut candidates: Vec<InferredCandidate> = support
        .into_iter()
        .map(|(id, supporting_rules)| InferredCandidate {
            id: id.clone(),
            name: store.node(id).map(|n| n.name.clone()).unwrap_or_default(),
            best_p: supporting_rules
                .iter()
                .map(|&i| rules[i].p.value)
                .fold(f64::INFINITY, f64::min),
            in_lookup: lookup.answers.contains(id),
            supporting_rules,
        })
        .filter(|c| config.include_lookup_in_results || !c.in_lookup)
        .collect();
    candidates.sort_by(|a, b| a.best_p.total_cmp(&b.best_p).then_with(|| a.id.cmp(&b.id)));

    Ok(OracleOutput {
        rules,
        pre_filter,
        candidates,
    })
}
