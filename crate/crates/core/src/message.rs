//! The ranked, explained answer returned to clients.
//!
//! The same bytes are produced by the CLI's JSON output and by the HTTP
//! service. Stage timings are left out of the body unless asked for, so two
//! runs over the same inputs serialize identically.

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::curie::Curie;
use crate::error::Result;
use crate::pipeline::{
    explain_path, run_pipeline, EnrichmentRule, PipelineOutput, RuleTarget, StageTimings,
};
use crate::query::{QueryGraph, QueryRequest};
use crate::stats::{EnrichmentCounts, Method};
use crate::store::{Direction, Store};

/// Six significant digits, e.g. `1.63000e-9`.
pub fn format_p(p: f64) -> String {
    format!("{p:.5e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleEntry {
    /// 1-based position in the sorted rule list.
    pub rule_rank: usize,
    pub kind: String,
    /// A curie for graph rules, `key:tag` for property rules.
    pub target_id: String,
    pub target_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    pub members: Vec<Curie>,
    pub counts: EnrichmentCounts,
    pub p: String,
    pub p_raw: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    #[serde(flatten)]
    pub rule: RuleEntry,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub node_binding: Curie,
    pub name: String,
    pub best_p: String,
    pub best_p_raw: f64,
    pub in_lookup: bool,
    /// Supporting rules, best first.
    pub enrichments: Vec<Explanation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedNode {
    pub id: Curie,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub anchor: NamedNode,
    pub predicates: Vec<String>,
    pub direction: Direction,
    pub answer_type: String,
    pub lookup: Vec<NamedNode>,
    pub lookup_n: usize,
    pub rules_pre_filter: usize,
    pub rules_post_filter: usize,
    pub inferred_m: usize,
    /// Candidates not already among the lookup answers.
    pub novel_m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<StageTimings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMessage {
    pub query_graph: QueryGraph,
    pub results: Vec<ResultEntry>,
    /// Every rule that passed the threshold, in rank order.
    pub rules: Vec<RuleEntry>,
    pub meta: Meta,
}

fn named(store: &Store, id: &Curie) -> NamedNode {
    NamedNode {
        id: id.clone(),
        name: store.node(id).map(|n| n.name.clone()).unwrap_or_default(),
    }
}

fn rule_entry(store: &Store, rank: usize, rule: &EnrichmentRule) -> RuleEntry {
    let (target_id, target_name, predicate, direction) = match &rule.target {
        RuleTarget::Graph {
            node,
            predicate,
            direction,
        } => (
            node.to_string(),
            named(store, node).name,
            Some(predicate.clone()),
            Some(*direction),
        ),
        RuleTarget::Property { key, tag } => (format!("{key}:{tag}"), tag.clone(), None, None),
    };
    RuleEntry {
        rule_rank: rank + 1,
        kind: rule.target.kind().to_owned(),
        target_id,
        target_name,
        predicate,
        direction,
        members: rule.members.clone(),
        counts: rule.counts,
        p: format_p(rule.p.value),
        p_raw: rule.p.value,
        method: rule.p.method,
    }
}

impl ResultMessage {
    pub fn build(store: &Store, query_graph: &QueryGraph, output: &PipelineOutput) -> Self {
        let rules: Vec<RuleEntry> = output
            .enrichment
            .rules
            .iter()
            .enumerate()
            .map(|(i, r)| rule_entry(store, i, r))
            .collect();
        let results: Vec<ResultEntry> = output
            .candidates
            .iter()
            .map(|cand| ResultEntry {
                node_binding: cand.id.clone(),
                name: cand.name.clone(),
                best_p: format_p(cand.best_p),
                best_p_raw: cand.best_p,
                in_lookup: cand.in_lookup,
                enrichments: cand
                    .supporting_rules
                    .iter()
                    .map(|&i| Explanation {
                        rule: rules[i].clone(),
                        path: explain_path(&output.lookup, &output.enrichment.rules[i], &cand.id),
                    })
                    .collect(),
            })
            .collect();
        let lookup = &output.lookup;
        let meta = Meta {
            anchor: named(store, &lookup.anchor),
            predicates: lookup.predicates.clone(),
            direction: lookup.direction,
            answer_type: lookup.answer_type.clone(),
            lookup: lookup.answers.iter().map(|a| named(store, a)).collect(),
            lookup_n: lookup.n(),
            rules_pre_filter: output.enrichment.pre_filter,
            rules_post_filter: rules.len(),
            inferred_m: results.len(),
            novel_m: results.iter().filter(|r| !r.in_lookup).count(),
            runtime_ms: None,
        };
        ResultMessage {
            query_graph: query_graph.clone(),
            results,
            rules,
            meta,
        }
    }

    pub fn with_timings(mut self, timings: StageTimings) -> Self {
        self.meta.runtime_ms = Some(timings);
        self
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("result message serializes");
        out.push(b'\n');
        out
    }

    pub fn result(&self, id: &Curie) -> Option<&ResultEntry> {
        self.results.iter().find(|r| &r.node_binding == id)
    }
}

/// Runs `request` against `store`, applying its option overrides on top of
/// `base`. Timings are returned separately so the message stays reproducible.
pub fn answer(
    store: &Store,
    request: &QueryRequest,
    base: &PipelineConfig,
) -> Result<(ResultMessage, StageTimings)> {
    let config = base.with_options(&request.options)?;
    let graph = request.query_graph();
    let output = run_pipeline(store, graph, &config)?;
    Ok((ResultMessage::build(store, graph, &output), output.timings))
}
