//! One-hop query messages (a strict subset of TRAPI).
//!
//! A request looks like
//!
//! ```json
//! {"message": {"query_graph": {
//!     "nodes": {"n0": {"ids": ["MONDO:0004975"]}, "n1": {"categories": ["biolink:Drug"]}},
//!     "edges": {"e0": {"subject": "n1", "object": "n0", "predicates": ["biolink:treats"]}}}},
//!  "options": {"p0": 1e-5, "max_rules": 1000, "min_k": 2}}
//! ```
//!
//! Anything outside that shape is rejected, and validation reports every
//! violation rather than stopping at the first.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::curie::Curie;
use crate::error::{Error, Result};
use crate::store::Direction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryNode {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<Curie>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEdge {
    pub subject: String,
    pub object: String,
    pub predicates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryGraph {
    pub nodes: BTreeMap<String, QueryNode>,
    pub edges: BTreeMap<String, QueryEdge>,
}

/// Per-request overrides of the pipeline configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rules: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_k: Option<usize>,
}

impl QueryOptions {
    pub fn is_empty(&self) -> bool {
        self.p0.is_none() && self.max_rules.is_none() && self.min_k.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub query_graph: QueryGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRequest {
    pub message: Message,
    #[serde(default, skip_serializing_if = "QueryOptions::is_empty")]
    pub options: QueryOptions,
}

/// The resolved one-hop shape of a valid query graph.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHop<'a> {
    pub anchor: &'a Curie,
    pub answer_category: &'a str,
    pub predicates: &'a [String],
    /// Direction of the edge as seen from the anchor.
    pub direction: Direction,
}

impl QueryGraph {
    /// Every structural violation, empty when the graph is a valid one-hop query.
    pub fn violations(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let pinned: Vec<&String> = self
            .nodes
            .iter()
            .filter(|(_, n)| n.ids.as_ref().is_some_and(|ids| !ids.is_empty()))
            .map(|(k, _)| k)
            .collect();
        let unpinned: Vec<&String> = self
            .nodes
            .iter()
            .filter(|(_, n)| {
                n.ids.as_ref().is_none_or(|ids| ids.is_empty())
                    && n.categories.as_ref().is_some_and(|c| !c.is_empty())
            })
            .map(|(k, _)| k)
            .collect();
        if pinned.len() != 1 {
            errors.push(format!(
                "query_graph must have exactly one pinned node (found {})",
                pinned.len()
            ));
        }
        if unpinned.len() != 1 {
            errors.push(format!(
                "query_graph must have exactly one unpinned node with categories (found {})",
                unpinned.len()
            ));
        }
        for (key, node) in &self.nodes {
            let has_ids = node.ids.as_ref().is_some_and(|ids| !ids.is_empty());
            let has_cats = node.categories.as_ref().is_some_and(|c| !c.is_empty());
            if !has_ids && !has_cats {
                errors.push(format!("node {key} has neither ids nor categories"));
            }
            if let Some(ids) = &node.ids {
                if ids.len() > 1 {
                    errors.push(format!(
                        "pinned node {key} must have exactly one id (found {})",
                        ids.len()
                    ));
                }
            }
            if !has_ids {
                if let Some(cats) = &node.categories {
                    if cats.len() > 1 {
                        errors.push(format!(
                            "unpinned node {key} must have exactly one category (found {})",
                            cats.len()
                        ));
                    }
                }
            }
        }
        if self.edges.len() != 1 {
            errors.push(format!(
                "query_graph must have exactly one edge (found {})",
                self.edges.len()
            ));
        }
        for (key, edge) in &self.edges {
            for (role, node) in [("subject", &edge.subject), ("object", &edge.object)] {
                if !self.nodes.contains_key(node) {
                    errors.push(format!("edge {key} {role} references unknown node {node}"));
                }
            }
            if edge.predicates.is_empty() {
                errors.push(format!("edge {key} must list at least one predicate"));
            }
            if pinned.len() == 1 && unpinned.len() == 1 {
                let ends = [edge.subject.as_str(), edge.object.as_str()];
                if !(ends.contains(&pinned[0].as_str()) && ends.contains(&unpinned[0].as_str())) {
                    errors.push(format!(
                        "edge {key} must connect the pinned and the unpinned node"
                    ));
                }
            }
        }
        errors
    }

    pub fn one_hop(&self) -> Result<OneHop<'_>> {
        let errors = self.violations();
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        let (pinned_key, pinned) = self
            .nodes
            .iter()
            .find(|(_, n)| n.ids.as_ref().is_some_and(|ids| !ids.is_empty()))
            .expect("validated");
        let (_, unpinned) = self
            .nodes
            .iter()
            .find(|(k, _)| *k != pinned_key)
            .expect("validated");
        let edge = self.edges.values().next().expect("validated");
        Ok(OneHop {
            anchor: &pinned.ids.as_ref().expect("validated")[0],
            answer_category: &unpinned.categories.as_ref().expect("validated")[0],
            predicates: &edge.predicates,
            direction: if &edge.subject == pinned_key {
                Direction::Out
            } else {
                Direction::In
            },
        })
    }
}

impl QueryRequest {
    pub fn new(query_graph: QueryGraph) -> Self {
        Self {
            message: Message { query_graph },
            options: QueryOptions::default(),
        }
    }

    pub fn query_graph(&self) -> &QueryGraph {
        &self.message.query_graph
    }

    /// Canonical JSON bytes (sorted keys, no insignificant whitespace).
    pub fn to_json_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("query serializes")
    }
}

/// Parses and validates a request, collecting every violation.
pub fn parse_request(bytes: &[u8]) -> Result<QueryRequest> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| Error::Validation(vec![format!("JSON syntax error: {e}")]))?;
    let mut errors = Vec::new();
    let Some(top) = value.as_object() else {
        return Err(Error::Validation(vec![
            "request must be a JSON object".into()
        ]));
    };
    reject_unknown(top, "", &["message", "options"], &mut errors);

    let graph = match top.get("message") {
        None => {
            errors.push("missing /message".into());
            None
        }
        Some(Value::Object(msg)) => {
            for (k, v) in msg {
                let nullable = matches!(k.as_str(), "knowledge_graph" | "results");
                if k != "query_graph" && !(nullable && v.is_null()) {
                    errors.push(format!("unsupported field /message/{k}"));
                }
            }
            match msg.get("query_graph") {
                Some(qg) => parse_graph(qg, &mut errors),
                None => {
                    errors.push("missing /message/query_graph".into());
                    None
                }
            }
        }
        Some(_) => {
            errors.push("/message must be an object".into());
            None
        }
    };
    let options = match top.get("options") {
        None | Some(Value::Null) => QueryOptions::default(),
        Some(v) => parse_options(v, &mut errors),
    };
    if let Some(graph) = &graph {
        errors.extend(graph.violations());
    }
    match graph {
        Some(graph) if errors.is_empty() => Ok(QueryRequest {
            message: Message { query_graph: graph },
            options,
        }),
        _ => Err(Error::Validation(errors)),
    }
}

/// The query graph of a request.
pub fn parse_query(bytes: &[u8]) -> Result<QueryGraph> {
    parse_request(bytes).map(|r| r.message.query_graph)
}

fn reject_unknown(obj: &Map<String, Value>, at: &str, allowed: &[&str], errors: &mut Vec<String>) {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            errors.push(format!("unsupported field {at}/{key}"));
        }
    }
}

fn parse_graph(value: &Value, errors: &mut Vec<String>) -> Option<QueryGraph> {
    const AT: &str = "/message/query_graph";
    let Some(obj) = value.as_object() else {
        errors.push(format!("{AT} must be an object"));
        return None;
    };
    reject_unknown(obj, AT, &["nodes", "edges"], errors);
    let before = errors.len();
    let mut nodes = BTreeMap::new();
    match obj.get("nodes") {
        Some(Value::Object(map)) => {
            for (key, v) in map {
                if let Some(node) = parse_node(key, v, errors) {
                    nodes.insert(key.clone(), node);
                }
            }
        }
        Some(_) => errors.push(format!("{AT}/nodes must be an object")),
        None => errors.push(format!("missing {AT}/nodes")),
    }
    let mut edges = BTreeMap::new();
    match obj.get("edges") {
        Some(Value::Object(map)) => {
            for (key, v) in map {
                if let Some(edge) = parse_edge(key, v, errors) {
                    edges.insert(key.clone(), edge);
                }
            }
        }
        Some(_) => errors.push(format!("{AT}/edges must be an object")),
        None => errors.push(format!("missing {AT}/edges")),
    }
    (errors.len() == before).then_some(QueryGraph { nodes, edges })
}

fn string_list(value: &Value, at: &str, errors: &mut Vec<String>) -> Option<Vec<String>> {
    let Some(items) = value.as_array() else {
        errors.push(format!("{at} must be a list of strings"));
        return None;
    };
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        match item.as_str() {
            Some(s) => out.push(s.to_owned()),
            None => {
                errors.push(format!("{at} must be a list of strings"));
                return None;
            }
        }
    }
    Some(out)
}

fn parse_node(key: &str, value: &Value, errors: &mut Vec<String>) -> Option<QueryNode> {
    let at = format!("/message/query_graph/nodes/{key}");
    let Some(obj) = value.as_object() else {
        errors.push(format!("{at} must be an object"));
        return None;
    };
    reject_unknown(obj, &at, &["ids", "categories"], errors);
    let before = errors.len();
    let ids = match obj.get("ids") {
        None | Some(Value::Null) => None,
        Some(v) => string_list(v, &format!("{at}/ids"), errors).map(|list| {
            list.into_iter()
                .filter_map(|s| match Curie::new(s) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        errors.push(format!("{at}/ids: {e}"));
                        None
                    }
                })
                .collect()
        }),
    };
    let categories = match obj.get("categories") {
        None | Some(Value::Null) => None,
        Some(v) => string_list(v, &format!("{at}/categories"), errors),
    };
    (errors.len() == before).then_some(QueryNode { ids, categories })
}

fn parse_edge(key: &str, value: &Value, errors: &mut Vec<String>) -> Option<QueryEdge> {
    let at = format!("/message/query_graph/edges/{key}");
    let Some(obj) = value.as_object() else {
        errors.push(format!("{at} must be an object"));
        return None;
    };
    reject_unknown(obj, &at, &["subject", "object", "predicates"], errors);
    let before = errors.len();
    let mut end = |name: &str| match obj.get(name) {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            errors.push(format!("{at}/{name} must be a string"));
            None
        }
        None => {
            errors.push(format!("missing {at}/{name}"));
            None
        }
    };
    let subject = end("subject");
    let object = end("object");
    let predicates = match obj.get("predicates") {
        Some(v) => string_list(v, &format!("{at}/predicates"), errors),
        None => {
            errors.push(format!("missing {at}/predicates"));
            None
        }
    };
    if errors.len() != before {
        return None;
    }
    Some(QueryEdge {
        subject: subject?,
        object: object?,
        predicates: predicates?,
    })
}

fn parse_options(value: &Value, errors: &mut Vec<String>) -> QueryOptions {
    let mut opts = QueryOptions::default();
    let Some(obj) = value.as_object() else {
        errors.push("/options must be an object".into());
        return opts;
    };
    reject_unknown(obj, "/options", &["p0", "max_rules", "min_k"], errors);
    let present = |name: &str| obj.get(name).filter(|v| !v.is_null());
    if let Some(v) = present("p0") {
        match v.as_f64() {
            Some(p) if p > 0.0 && p <= 1.0 => opts.p0 = Some(p),
            _ => errors.push("/options/p0 must be a number in (0, 1]".into()),
        }
    }
    for (name, slot) in [
        ("max_rules", &mut opts.max_rules),
        ("min_k", &mut opts.min_k),
    ] {
        if let Some(v) = present(name) {
            match v.as_u64() {
                Some(x) if x >= 1 => *slot = Some(x as usize),
                _ => errors.push(format!("/options/{name} must be an integer >= 1")),
            }
        }
    }
    opts
}

/// Built-in question templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    /// What drugs treat disease Y?
    DrugTreatsDisease,
    /// What genes are genetically associated with disease X?
    GeneAssociatedWithDisease,
    /// What biological processes and molecular activities affect gene X?
    ProcessAffectsGene,
}

impl Template {
    pub const ALL: [Template; 3] = [
        Template::DrugTreatsDisease,
        Template::GeneAssociatedWithDisease,
        Template::ProcessAffectsGene,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::DrugTreatsDisease => "drug-treats-disease",
            Template::GeneAssociatedWithDisease => "gene-associated-disease",
            Template::ProcessAffectsGene => "process-affects-gene",
        }
    }

    pub fn question(self) -> &'static str {
        match self {
            Template::DrugTreatsDisease => "What Drugs treats Disease Y?",
            Template::GeneAssociatedWithDisease => {
                "What Genes are genetically associated with Disease X?"
            }
            Template::ProcessAffectsGene => {
                "What are the Biological Processes and Molecular Activities that affect Genes X?"
            }
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    /// The request for this template with `curie` pinned as `n0`.
    pub fn request(self, curie: &Curie) -> QueryRequest {
        let (pinned_category, answer_category, predicate) = match self {
            Template::DrugTreatsDisease => ("biolink:Disease", "biolink:Drug", "biolink:treats"),
            Template::GeneAssociatedWithDisease => (
                "biolink:Disease",
                "biolink:Gene",
                "biolink:genetically_associated_with",
            ),
            Template::ProcessAffectsGene => (
                "biolink:Gene",
                "biolink:BiologicalProcessOrActivity",
                "biolink:affects",
            ),
        };
        let mut nodes = BTreeMap::new();
        nodes.insert(
            "n0".to_owned(),
            QueryNode {
                ids: Some(vec![curie.clone()]),
                categories: Some(vec![pinned_category.to_owned()]),
            },
        );
        nodes.insert(
            "n1".to_owned(),
            QueryNode {
                ids: None,
                categories: Some(vec![answer_category.to_owned()]),
            },
        );
        let mut edges = BTreeMap::new();
        edges.insert(
            "e0".to_owned(),
            QueryEdge {
                subject: "n1".into(),
                object: "n0".into(),
                predicates: vec![predicate.to_owned()],
            },
        );
        QueryRequest::new(QueryGraph { nodes, edges })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    fn ad() -> Curie {
        Curie::new("MONDO:0004975").unwrap()
    }

    #[test]
    fn drug_template_shape() {
        let req = Template::DrugTreatsDisease.request(&ad());
        let hop = req.query_graph().one_hop().unwrap();
        assert_eq!(hop.anchor, &ad());
        assert_eq!(hop.answer_category, "biolink:Drug");
        assert_eq!(hop.predicates, ["biolink:treats".to_owned()]);
        assert_eq!(hop.direction, Direction::In);
        let back = parse_request(&req.to_json_bytes()).unwrap();
        assert_eq!(back, req);
    }

    #[test]
    fn two_pinned_nodes_rejected() {
        let body = json!({"message": {"query_graph": {
            "nodes": {"n0": {"ids": ["MONDO:0004975"]}, "n1": {"ids": ["MONDO:0005180"]}},
            "edges": {"e0": {"subject": "n1", "object": "n0", "predicates": ["biolink:treats"]}}}}});
        let err = parse_request(body.to_string().as_bytes()).unwrap_err();
        let msgs = err.messages();
        assert!(
            msgs.iter().any(|m| m.contains("exactly one pinned node")),
            "{msgs:?}"
        );
        assert!(
            msgs.iter().any(|m| m.contains("exactly one unpinned node")),
            "{msgs:?}"
        );
    }

    #[test]
    fn empty_predicates_rejected() {
        let body = json!({"message": {"query_graph": {
            "nodes": {"n0": {"ids": ["MONDO:0004975"]}, "n1": {"categories": ["biolink:Drug"]}},
            "edges": {"e0": {"subject": "n1", "object": "n0", "predicates": []}}}}});
        let err = parse_request(body.to_string().as_bytes()).unwrap_err();
        assert!(err.is_validation());
        assert!(err
            .messages()
            .iter()
            .any(|m| m.contains("at least one predicate")));
    }

    #[test]
    fn all_violations_reported() {
        let body = json!({"message": {"query_graph": {
            "nodes": {"n0": {"ids": ["bad id"], "is_set": true}, "n1": {"categories": [3]}},
            "edges": {"e0": {"subject": "n1", "object": "n9", "predicates": []}}},
            "extra": 1},
            "options": {"p0": 0, "max_rules": 0, "verbose": true}});
        let msgs = parse_request(body.to_string().as_bytes())
            .unwrap_err()
            .messages();
        for needle in [
            "is_set",
            "invalid curie",
            "categories must be",
            "/message/extra",
            "p0",
            "max_rules",
            "verbose",
        ] {
            assert!(
                msgs.iter().any(|m| m.contains(needle)),
                "missing {needle}: {msgs:?}"
            );
        }
    }

    #[test]
    fn syntax_error_is_validation() {
        let err = parse_request(b"{not json").unwrap_err();
        assert!(err.is_validation());
        assert!(err.messages()[0].starts_with("JSON syntax error"));
    }

    #[test]
    fn edge_must_join_pinned_and_unpinned() {
        let body = json!({"message": {"query_graph": {
            "nodes": {"n0": {"ids": ["MONDO:0004975"]}, "n1": {"categories": ["biolink:Drug"]}},
            "edges": {"e0": {"subject": "n1", "object": "n1", "predicates": ["biolink:treats"]}}}}});
        let msgs = parse_request(body.to_string().as_bytes())
            .unwrap_err()
            .messages();
        assert!(msgs.iter().any(|m| m.contains("must connect")));
    }

    #[test]
    fn options_and_null_fields_accepted() {
        let body = json!({"message": {"query_graph": {
            "nodes": {"a": {"ids": ["MONDO:0004975"]}, "b": {"categories": ["biolink:Drug"]}},
            "edges": {"x": {"subject": "a", "object": "b", "predicates": ["biolink:treated_by"]}}},
            "knowledge_graph": null, "results": null},
            "options": {"p0": 0.01, "min_k": 3}});
        let req = parse_request(body.to_string().as_bytes()).unwrap();
        assert_eq!(req.options.p0, Some(0.01));
        assert_eq!(req.options.min_k, Some(3));
        assert_eq!(
            req.query_graph().one_hop().unwrap().direction,
            Direction::Out
        );
    }

    #[test]
    fn template_names_round_trip() {
        for t in Template::ALL {
            assert_eq!(Template::from_name(t.name()), Some(t));
            assert!(t.request(&ad()).query_graph().violations().is_empty());
        }
        assert_eq!(
            Template::DrugTreatsDisease.question(),
            "What Drugs treats Disease Y?"
        );
    }

    proptest! {
        #[test]
        fn parse_serialize_is_fixpoint(
            pin in "[a-z]{1,4}",
            free in "[A-Z]{1,4}",
            local in "[0-9]{1,7}",
            cat in "biolink:[A-Z][a-z]{1,8}",
            preds in prop::collection::vec("biolink:[a-z_]{1,12}", 1..3),
            forward in any::<bool>(),
            p0 in prop::option::of(1e-9f64..1.0),
        ) {
            let (s, o) = if forward { (&pin, &free) } else { (&free, &pin) };
            let body = json!({"message": {"query_graph": {
                "nodes": {pin.clone(): {"ids": [format!("X:{local}")]}, free.clone(): {"categories": [cat]}},
                "edges": {"e": {"subject": s, "object": o, "predicates": preds}}}},
                "options": {"p0": p0}});
            let first = parse_request(body.to_string().as_bytes()).unwrap();
            let bytes = first.to_json_bytes();
            let second = parse_request(&bytes).unwrap();
            prop_assert_eq!(&first, &second);
            prop_assert_eq!(bytes, second.to_json_bytes());
        }
    }
}
