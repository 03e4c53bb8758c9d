//! TOML run manifests.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusFilter;
use crate::diagram_distance::DistanceKind;
use crate::embedding::{Metric, TrainParams};
use crate::error::{Error, Result};
use crate::projection::TsneParams;
use crate::topology::{DEFAULT_MAX_DIM, DEFAULT_SIMPLEX_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    UserClusters,
    SubredditDivergence,
    IsotropyAudit,
    UserDrift,
    Simulate,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::UserClusters,
        Experiment::SubredditDivergence,
        Experiment::IsotropyAudit,
        Experiment::UserDrift,
        Experiment::Simulate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::UserClusters => "user-clusters",
            Experiment::SubredditDivergence => "subreddit-divergence",
            Experiment::IsotropyAudit => "isotropy-audit",
            Experiment::UserDrift => "user-drift",
            Experiment::Simulate => "simulate",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    /// Reddit-style JSONL comment dumps, read in order.
    pub dumps: Vec<PathBuf>,
    /// A ready-made point cloud (`word,x1,...,xd`) for the isotropy audit.
    pub cloud: Option<PathBuf>,
    /// Simulation config files, one output subdirectory each.
    pub configs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub communities: Option<Vec<String>>,
    pub min_timestamp: Option<i64>,
    pub max_timestamp: Option<i64>,
    pub min_doc_tokens: usize,
}

impl Default for CorpusSection {
    fn default() -> Self {
        let f = CorpusFilter::default();
        CorpusSection { communities: None, min_timestamp: f.min_timestamp, max_timestamp: f.max_timestamp, min_doc_tokens: f.min_doc_tokens }
    }
}

impl CorpusSection {
    pub fn filter(&self) -> CorpusFilter {
        CorpusFilter {
            communities: self.communities.as_ref().map(|c| c.iter().cloned().collect::<BTreeSet<_>>()),
            min_timestamp: self.min_timestamp,
            max_timestamp: self.max_timestamp,
            min_doc_tokens: self.min_doc_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub subsample_threshold: f64,
    /// Words per point cloud.
    pub top_n: usize,
    pub metric: Metric,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        let p = TrainParams::default();
        EmbeddingSection {
            dim: p.dim,
            window: p.window,
            negatives: p.negatives,
            epochs: p.epochs,
            learning_rate: p.learning_rate,
            min_count: p.min_count,
            subsample_threshold: p.subsample_threshold,
            top_n: 200,
            metric: Metric::Angular,
        }
    }
}

impl EmbeddingSection {
    pub fn params(&self, seed: u64) -> TrainParams {
        TrainParams {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            min_count: self.min_count,
            subsample_threshold: self.subsample_threshold,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySection {
    pub max_dim: usize,
    pub max_eps: f64,
    pub simplex_budget: usize,
}

impl Default for TopologySection {
    fn default() -> Self {
        TopologySection { max_dim: DEFAULT_MAX_DIM, max_eps: 1.0, simplex_budget: DEFAULT_SIMPLEX_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceSection {
    pub kind: DistanceKind,
    /// Homology dimensions to compare; all computed ones by default.
    pub dims: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UsersSection {
    /// Users kept per community.
    pub k: usize,
}

impl Default for UsersSection {
    fn default() -> Self {
        UsersSection { k: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSection {
    /// Finite bars shorter than this are left out of the hole report.
    pub min_persistence: f64,
    /// A dimension's longest bar is "dominant" when at least this many times
    /// the second longest.
    pub dominance_factor: f64,
}

impl Default for AuditSection {
    fn default() -> Self {
        AuditSection { min_persistence: 0.1, dominance_factor: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub experiment: Experiment,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub topology: TopologySection,
    #[serde(default)]
    pub distance: DistanceSection,
    #[serde(default)]
    pub tsne: TsneParams,
    #[serde(default)]
    pub users: UsersSection,
    #[serde(default)]
    pub audit: AuditSection,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest> {
        toml::from_str(text).map_err(|e| Error::Validation(e.message().to_owned()))
    }

    /// Dimensions compared by the distance stages.
    pub fn distance_dims(&self) -> Vec<usize> {
        self.distance.dims.clone().unwrap_or_else(|| (0..=self.topology.max_dim).collect())
    }

    /// Checks parameters and that every referenced input exists, resolving
    /// relative paths against `base`.
    pub fn validate(&self, base: &Path) -> Result<()> {
        let invalid = |msg: String| Err(Error::Validation(msg));
        if self.seed.is_none() {
            return invalid("manifest has no seed".into());
        }
        for p in self.inputs.dumps.iter().chain(&self.inputs.cloud).chain(&self.inputs.configs) {
            let path = base.join(p);
            if !path.is_file() {
                return invalid(format!("input {} does not exist", path.display()));
            }
        }
        let wrap = |r: Result<()>| r.map_err(|e| Error::Validation(e.to_string()));
        wrap(self.corpus.filter().validate())?;
        wrap(self.embedding.params(0).validate())?;
        if self.embedding.top_n < 2 {
            return invalid("embedding.top_n must be at least 2".into());
        }
        if !(self.topology.max_eps > 0.0 && self.topology.max_eps.is_finite()) {
            return invalid(format!("topology.max_eps must be positive, got {}", self.topology.max_eps));
        }
        if let Some(bad) = self.distance_dims().into_iter().find(|&d| d > self.topology.max_dim) {
            return invalid(format!("distance dim {bad} exceeds topology.max_dim {}", self.topology.max_dim));
        }
        // the point count is unknown until the data is embedded; check what can be checked
        wrap(self.tsne.validate(usize::MAX))?;
        if self.users.k == 0 {
            return invalid("users.k must be at least 1".into());
        }
        if !(self.audit.min_persistence >= 0.0) || !(self.audit.dominance_factor >= 1.0) {
            return invalid("audit.min_persistence must be >= 0 and audit.dominance_factor >= 1".into());
        }
        match self.experiment {
            Experiment::Simulate => {
                if self.inputs.configs.is_empty() {
                    return invalid("simulate needs inputs.configs".into());
                }
                let stems: BTreeSet<_> = self.inputs.configs.iter().filter_map(|p| p.file_stem()).collect();
                if stems.len() != self.inputs.configs.len() {
                    return invalid("simulation config file names must be distinct".into());
                }
            }
            Experiment::IsotropyAudit => {
                if self.inputs.dumps.is_empty() == self.inputs.cloud.is_none() {
                    return invalid("isotropy-audit needs exactly one of inputs.dumps and inputs.cloud".into());
                }
            }
            _ => {
                if self.inputs.dumps.is_empty() {
                    return invalid(format!("{} needs inputs.dumps", self.experiment));
                }
            }
        }
        Ok(())
    }
}
