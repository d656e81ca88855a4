use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curie::Curie;
use crate::error::{Error, Result};
use crate::ontology::{Ontology, TermId};
use crate::query::QueryOptions;
use crate::stats::StatsConfig;

pub const DEFAULT_P0: f64 = 1e-5;
pub const DEFAULT_MAX_RULES: usize = 1000;
pub const DEFAULT_MIN_K: usize = 2;

const DEFAULT_NODE_EXCLUSIONS: [&str; 3] = ["NCBITaxon:9606", "CHEBI:24431", "CHEBI:33304"];
const DEFAULT_PREDICATE_EXCLUSIONS: [&str; 6] = [
    "biolink:contraindicated_for",
    "biolink:causes",
    "biolink:biomarker_for",
    "biolink:contributes_to",
    "biolink:has_adverse_event",
    "biolink:causes_adverse_event",
];

/// Thresholds and filters for the enrichment and inference stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Rules must have `p < p0`.
    pub p0: f64,
    pub max_rules: usize,
    /// Smallest number of answers that must share a feature.
    pub min_k: usize,
    pub node_exclusions: BTreeSet<Curie>,
    /// Bare names get the `biolink:` prefix. Each entry also excludes its
    /// descendants in the predicate ontology.
    pub predicate_exclusions: BTreeSet<String>,
    pub include_lookup_in_results: bool,
    pub stats: StatsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            p0: DEFAULT_P0,
            max_rules: DEFAULT_MAX_RULES,
            min_k: DEFAULT_MIN_K,
            node_exclusions: DEFAULT_NODE_EXCLUSIONS
                .iter()
                .map(|c| Curie::new(*c).expect("valid default"))
                .collect(),
            predicate_exclusions: DEFAULT_PREDICATE_EXCLUSIONS
                .iter()
                .map(|p| p.to_string())
                .collect(),
            include_lookup_in_results: true,
            stats: StatsConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// A config with no exclusions, handy for synthetic graphs.
    pub fn unfiltered() -> Self {
        Self {
            node_exclusions: BTreeSet::new(),
            predicate_exclusions: BTreeSet::new(),
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.p0 > 0.0 && self.p0 <= 1.0) {
            errors.push(format!("p0 must be in (0, 1], got {}", self.p0));
        }
        if self.max_rules < 1 {
            errors.push("max_rules must be at least 1".to_owned());
        }
        if self.min_k < 1 {
            errors.push("min_k must be at least 1".to_owned());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }

    /// This config with per-request overrides applied.
    pub fn with_options(&self, options: &QueryOptions) -> Result<Self> {
        let mut out = self.clone();
        if let Some(p0) = options.p0 {
            out.p0 = p0;
        }
        if let Some(m) = options.max_rules {
            out.max_rules = m;
        }
        if let Some(k) = options.min_k {
            out.min_k = k;
        }
        out.validate()?;
        Ok(out)
    }

    /// Predicate ids excluded from enrichment: every listed predicate and
    /// all of its descendants. Names unknown to the ontology are ignored.
    pub fn excluded_predicates(&self, predicates: &Ontology) -> BTreeSet<TermId> {
        self.predicate_exclusions
            .iter()
            .filter_map(|name| predicates.id(&normalize_predicate(name)))
            .flat_map(|id| predicates.descendants_or_self(id))
            .collect()
    }
}

/// Adds the `biolink:` prefix to bare predicate names.
pub fn normalize_predicate(name: &str) -> String {
    if name.contains(':') {
        name.to_owned()
    } else {
        format!("biolink:{name}")
    }
}
