use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::epidemic::EpidemicParams;
use crate::error::{Error, Result};
use crate::gcn::{Activation, TrainConfig, NUM_CLASSES};
use crate::graph::SbmSpec;
use crate::interventions::VaccinationStrategy;

/// JSON schema the config format is published under.
pub const SCENARIO_SCHEMA: &str = include_str!("../../schema/scenario.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    Er { n: usize, p: f64 },
    Sbm { block_sizes: Vec<usize>, block_probs: Vec<Vec<f64>> },
    Rgg { n: usize, r: f64 },
    Barbell { clique: usize, bridge: usize },
    /// Edge-list CSV or graph JSON. Relative paths resolve against the
    /// directory holding the config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialInfected {
    /// Drawn uniformly without replacement from the root seed.
    Count(usize),
    Nodes(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GcnSettings {
    #[serde(default = "defaults::lr")]
    pub lr: f64,
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::hidden")]
    pub hidden: usize,
    #[serde(default = "defaults::layers")]
    pub layers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_weights: Option<[f64; NUM_CLASSES]>,
    #[serde(default = "defaults::init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default = "defaults::validation_fraction")]
    pub validation_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_snapshots: Option<usize>,
    /// Snapshot used for embeddings and gradient explanations.
    #[serde(default)]
    pub snapshot: SnapshotRef,
}

impl Default for GcnSettings {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl GcnSettings {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            hidden: self.hidden,
            layers: self.layers,
            class_weights: self.class_weights,
            seed,
            init_scale: self.init_scale,
            activation: self.activation,
        }
    }
}

/// Transition `t -> t + 1` of one replica of the no-vaccination ensemble.
/// Without `t`, the replica's time of peak prevalence is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotRef {
    #[serde(default)]
    pub replica: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XaiMethod {
    Saliency,
    IntegratedGradients,
    Counterfactual,
    AdjacencyGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IgBaseline {
    #[default]
    Zeros,
    /// Column means of the snapshot's feature matrix.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XaiTarget {
    pub node: usize,
    /// Predicted class of the node when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSelection {
    All,
    Edges(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XaiSettings {
    #[serde(default = "defaults::methods")]
    pub methods: Vec<XaiMethod>,
    /// Defaults to the node of highest betweenness.
    #[serde(default)]
    pub targets: Vec<XaiTarget>,
    #[serde(default = "defaults::ig_steps")]
    pub ig_steps: usize,
    #[serde(default)]
    pub ig_baseline: IgBaseline,
    #[serde(default = "defaults::edges")]
    pub counterfactual_edges: EdgeSelection,
    /// Replicas per counterfactual ensemble; the scenario's `n_runs` when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterfactual_runs: Option<usize>,
}

impl Default for XaiSettings {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

mod defaults {
    use super::{EdgeSelection, XaiMethod};

    pub fn lr() -> f64 {
        0.2
    }
    pub fn epochs() -> usize {
        200
    }
    pub fn hidden() -> usize {
        16
    }
    pub fn layers() -> usize {
        2
    }
    pub fn init_scale() -> f64 {
        0.1
    }
    pub fn validation_fraction() -> f64 {
        0.2
    }
    pub fn methods() -> Vec<XaiMethod> {
        vec![
            XaiMethod::Saliency,
            XaiMethod::IntegratedGradients,
            XaiMethod::Counterfactual,
            XaiMethod::AdjacencyGradient,
        ]
    }
    pub fn ig_steps() -> usize {
        64
    }
    pub fn edges() -> EdgeSelection {
        EdgeSelection::All
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub graph: GraphSpec,
    pub epidemic: EpidemicParams,
    pub initial_infected: InitialInfected,
    pub strategies: Vec<VaccinationStrategy>,
    pub t_max: usize,
    pub n_runs: usize,
    pub root_seed: u64,
    #[serde(default)]
    pub gcn: GcnSettings,
    #[serde(default)]
    pub xai: XaiSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(config_err(format!("{name} = {v} is not in [0, 1]")))
    }
}

impl ScenarioConfig {
    /// Parses and validates a config document. File paths are resolved
    /// against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        if let (GraphSpec::File { path }, Some(base)) = (&mut cfg.graph, base_dir) {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent())
    }

    /// The config as recorded in a run directory: the output location is
    /// dropped so that runs written to different places compare equal.
    pub fn effective(&self) -> ScenarioConfig {
        ScenarioConfig {
            output_dir: None,
            ..self.clone()
        }
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        match &self.graph {
            GraphSpec::Er { n, p } => {
                check_unit("graph.p", *p)?;
                if *n == 0 {
                    return Err(config_err("graph.n must be >= 1"));
                }
            }
            GraphSpec::Sbm { block_sizes, block_probs } => {
                SbmSpec {
                    block_sizes: block_sizes.clone(),
                    block_probs: block_probs.clone(),
                }
                .validate()
                .map_err(|e| config_err(format!("graph: {e}")))?;
            }
            GraphSpec::Rgg { n, r } => {
                if *n == 0 {
                    return Err(config_err("graph.n must be >= 1"));
                }
                if !(r.is_finite() && *r >= 0.0) {
                    return Err(config_err(format!("graph.r = {r} must be finite and >= 0")));
                }
            }
            GraphSpec::Barbell { clique, .. } => {
                if *clique < 2 {
                    return Err(config_err("graph.clique must be >= 2"));
                }
            }
            GraphSpec::File { path } => {
                if !path.is_file() {
                    return Err(config_err(format!("graph file {} does not exist", path.display())));
                }
            }
        }
        self.epidemic
            .validate()
            .map_err(|e| config_err(format!("epidemic: {e}")))?;
        match &self.initial_infected {
            InitialInfected::Count(0) => return Err(config_err("initial_infected.count must be >= 1")),
            InitialInfected::Nodes(v) if v.is_empty() => {
                return Err(config_err("initial_infected.nodes must not be empty"))
            }
            _ => {}
        }
        if self.strategies.is_empty() {
            return Err(config_err("strategies must not be empty"));
        }
        let mut tags = BTreeSet::new();
        for s in &self.strategies {
            check_unit(&format!("strategies[{}].coverage", s.tag()), s.coverage())?;
            if !tags.insert(s.tag()) {
                return Err(config_err(format!("strategy `{}` listed twice", s.tag())));
            }
        }
        if self.n_runs == 0 {
            return Err(config_err("n_runs must be >= 1"));
        }
        if self.t_max == 0 {
            return Err(config_err("t_max must be >= 1"));
        }
        let g = &self.gcn;
        if !(g.lr.is_finite() && g.lr >= 0.0) {
            return Err(config_err(format!("gcn.lr = {} must be finite and >= 0", g.lr)));
        }
        if g.layers == 0 || g.hidden == 0 {
            return Err(config_err("gcn.layers and gcn.hidden must be >= 1"));
        }
        if !(0.0..1.0).contains(&g.validation_fraction) {
            return Err(config_err("gcn.validation_fraction must be in [0, 1)"));
        }
        if let Some(w) = g.class_weights {
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(config_err("gcn.class_weights must be finite and >= 0"));
            }
        }
        if g.snapshot.replica >= self.n_runs {
            return Err(config_err("gcn.snapshot.replica must be < n_runs"));
        }
        if self.xai.ig_steps == 0 {
            return Err(config_err("xai.ig_steps must be >= 1"));
        }
        if self.xai.counterfactual_runs == Some(0) {
            return Err(config_err("xai.counterfactual_runs must be >= 1"));
        }
        for t in &self.xai.targets {
            if t.class.is_some_and(|c| c >= NUM_CLASSES) {
                return Err(config_err(format!("xai target class must be < {NUM_CLASSES}")));
            }
        }
        Ok(())
    }
}
