//! Declarative scenarios and reproducible run directories.
//!
//! A [`ScenarioConfig`] fixes every input of the pipeline: graph, initial
//! infections, strategy comparison, snapshot dataset, classifier training
//! and attributions. All randomness descends from `root_seed`, so a run
//! directory can be rebuilt byte for byte from its own `config.json`.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use serde::Serialize;

pub use config::{
    EdgeSelection, GcnSettings, GraphSpec, IgBaseline, InitialInfected, ScenarioConfig, SnapshotRef, XaiMethod,
    XaiSettings, XaiTarget, SCENARIO_SCHEMA,
};
pub use manifest::{
    engine_version, sha256_hex, verify_run_directory, write_run_directory, Artifact, ArtifactRecord, RunManifest,
    StageTiming, MANIFEST_FILE,
};

use crate::centrality::betweenness;
use crate::epidemic::{ensemble_traces, EnsembleSummary, NodeState, SimulationTrace};
use crate::error::{Error, Result};
use crate::gcn::{
    self, node_features, project_embeddings, Evaluation, GcnModel, ModelFile, NormalizedAdjacency, SnapshotDataset,
    StructuralFeatures, TrainingHistory,
};
use crate::graph::{self, generate_er, generate_rgg, generate_sbm, Graph, SbmSpec};
use crate::interventions::{compare_with_traces, StrategyComparison, VaccinationStrategy};
use crate::rng::{rng_from_seed, split, stream};
use crate::xai::{self, Attribution, AttributionMethod};

pub const GRAPH_JSON: &str = "graph.json";
pub const MODEL_JSON: &str = "model.json";

/// Strategy comparison with the traces behind it.
#[derive(Debug, Clone)]
pub struct ComparisonRun {
    pub comparison: StrategyComparison,
    pub traces: BTreeMap<String, Vec<SimulationTrace>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainingReport {
    pub snapshots: usize,
    pub train_snapshots: usize,
    pub validation_snapshots: usize,
    pub history: TrainingHistory,
    pub train: Evaluation,
    pub validation: Option<Evaluation>,
}

/// Feature matrix and next-step labels of the explained snapshot.
#[derive(Debug, Clone)]
pub struct ExplainedSnapshot {
    pub replica: usize,
    pub t: usize,
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
}

/// Pipeline stages for one validated config.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        Ok(Scenario { config })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    fn seed(&self, tag: u64) -> u64 {
        split(self.config.root_seed, tag)
    }

    /// Root seed of every ensemble in the scenario, counterfactual ones
    /// included.
    pub fn ensemble_seed(&self) -> u64 {
        self.seed(stream::ENSEMBLE)
    }

    pub fn build_graph(&self) -> Result<Graph> {
        let seed = self.seed(stream::GRAPH);
        match &self.config.graph {
            GraphSpec::Er { n, p } => generate_er(*n, *p, seed),
            GraphSpec::Sbm { block_sizes, block_probs } => generate_sbm(
                &SbmSpec {
                    block_sizes: block_sizes.clone(),
                    block_probs: block_probs.clone(),
                },
                seed,
            ),
            GraphSpec::Rgg { n, r } => generate_rgg(*n, *r, seed),
            GraphSpec::Barbell { clique, bridge } => Ok(Graph::barbell(*clique, *bridge)),
            GraphSpec::File { path } => graph::io::load_graph(path),
        }
    }

    pub fn initial_infected(&self, g: &Graph) -> Result<Vec<usize>> {
        let n = g.n();
        match &self.config.initial_infected {
            InitialInfected::Count(k) => {
                if *k > n {
                    return Err(Error::Config(format!("initial_infected.count {k} exceeds {n} nodes")));
                }
                let mut rng = rng_from_seed(self.seed(stream::INITIAL_INFECTED));
                let mut v = rand::seq::index::sample(&mut rng, n, *k).into_vec();
                v.sort_unstable();
                Ok(v)
            }
            InitialInfected::Nodes(ids) => {
                let mut v = ids.clone();
                v.sort_unstable();
                v.dedup();
                if let Some(&bad) = v.iter().find(|&&u| u >= n) {
                    return Err(Error::Config(format!("initial infected node {bad} is not in the graph")));
                }
                Ok(v)
            }
        }
    }

    pub fn compare(&self, g: &Graph, infected: &[usize]) -> Result<ComparisonRun> {
        let c = &self.config;
        let (comparison, traces) =
            compare_with_traces(g, &c.epidemic, infected, &c.strategies, c.t_max, c.n_runs, self.ensemble_seed())?;
        Ok(ComparisonRun { comparison, traces })
    }

    /// No-vaccination ensemble traces, taken from `run` when it has them.
    pub fn training_traces(&self, g: &Graph, infected: &[usize], run: Option<&ComparisonRun>) -> Result<Vec<SimulationTrace>> {
        if let Some(tr) = run.and_then(|r| r.traces.get(VaccinationStrategy::None.tag())) {
            return Ok(tr.clone());
        }
        let c = &self.config;
        let (_, traces) = ensemble_traces(
            g,
            &c.epidemic,
            &VaccinationStrategy::None,
            infected,
            c.t_max,
            c.n_runs,
            self.ensemble_seed(),
        )?;
        Ok(traces)
    }

    pub fn dataset(&self, g: &Graph, traces: &[SimulationTrace]) -> Result<SnapshotDataset> {
        let s = &self.config.gcn;
        SnapshotDataset::from_traces(g, traces, s.validation_fraction, s.max_snapshots, self.seed(stream::DATASET_SPLIT))
    }

    pub fn train(&self, ds: &SnapshotDataset) -> Result<(ModelFile, TrainingReport)> {
        let cfg = self.config.gcn.train_config(self.seed(stream::GCN_INIT));
        let trained = gcn::train(ds, &cfg)?;
        let train = gcn::evaluate(&trained.model, ds, &ds.train)?;
        let validation = if ds.validation.is_empty() {
            None
        } else {
            Some(gcn::evaluate(&trained.model, ds, &ds.validation)?)
        };
        let report = TrainingReport {
            snapshots: ds.snapshots.len(),
            train_snapshots: ds.train.len(),
            validation_snapshots: ds.validation.len(),
            history: trained.history,
            train,
            validation,
        };
        Ok((ModelFile::new(&trained.model, &cfg), report))
    }

    pub fn snapshot(&self, g: &Graph, traces: &[SimulationTrace]) -> Result<ExplainedSnapshot> {
        let r = self.config.gcn.snapshot;
        let trace = traces
            .get(r.replica)
            .ok_or_else(|| Error::Config(format!("snapshot replica {} does not exist", r.replica)))?;
        let transitions = trace.node_history.len().saturating_sub(1);
        if transitions == 0 {
            return Err(Error::param("snapshot replica has no transitions"));
        }
        let t = match r.t {
            Some(t) if t >= transitions => {
                return Err(Error::Config(format!(
                    "snapshot t = {t} but replica {} has {transitions} transitions",
                    r.replica
                )))
            }
            Some(t) => t,
            None => {
                let infected = |t: usize| trace.counts[t][NodeState::I.index()];
                (0..transitions).fold(0, |best, t| if infected(t) > infected(best) { t } else { best })
            }
        };
        let features = node_features(g, &StructuralFeatures::new(g), &trace.node_history[t]);
        let labels = trace.node_history[t + 1].iter().map(|s| s.index()).collect();
        Ok(ExplainedSnapshot {
            replica: r.replica,
            t,
            features,
            labels,
        })
    }

    /// Gradient attributions for every configured target, then
    /// counterfactual edge scores, in the order methods are listed.
    pub fn explain(
        &self,
        g: &Graph,
        infected: &[usize],
        model: Option<&GcnModel>,
        snap: &ExplainedSnapshot,
    ) -> Result<Vec<Attribution>> {
        let xs = &self.config.xai;
        let a = NormalizedAdjacency::new(g);
        let needs_model = xs.methods.iter().any(|m| *m != XaiMethod::Counterfactual);
        let targets = match (needs_model, model) {
            (false, _) => Vec::new(),
            (true, None) => return Err(Error::param("gradient attributions need a trained model")),
            (true, Some(m)) => self.resolve_targets(g, m, &a, snap)?,
        };
        let baseline = match xs.ig_baseline {
            IgBaseline::Zeros => Array2::zeros(snap.features.raw_dim()),
            IgBaseline::Mean => {
                let mean = snap.features.mean_axis(ndarray::Axis(0)).expect("graph has nodes");
                let mut b = Array2::zeros(snap.features.raw_dim());
                for mut row in b.rows_mut() {
                    row.assign(&mean);
                }
                b
            }
        };
        let mut out = Vec::new();
        for method in &xs.methods {
            match method {
                XaiMethod::Counterfactual => {
                    let edges = match &xs.counterfactual_edges {
                        EdgeSelection::All => g.edges().to_vec(),
                        EdgeSelection::Edges(e) => e.clone(),
                    };
                    let c = &self.config;
                    let (_, scores) = xai::counterfactual_edge_importance(
                        g,
                        &c.epidemic,
                        &VaccinationStrategy::None,
                        infected,
                        c.t_max,
                        xs.counterfactual_runs.unwrap_or(c.n_runs),
                        self.ensemble_seed(),
                        &edges,
                    )?;
                    out.extend(xai::edge_attributions(
                        AttributionMethod::Counterfactual,
                        None,
                        scores.into_iter().map(|s| (s.edge, s.score)),
                    ));
                }
                gradient => {
                    let m = model.expect("checked above");
                    for &(node, class) in &targets {
                        let rows = match gradient {
                            XaiMethod::Saliency => xai::feature_attributions(
                                AttributionMethod::Saliency,
                                node,
                                class,
                                &xai::saliency(m, &snap.features, &a, node, class)?,
                            ),
                            XaiMethod::IntegratedGradients => xai::feature_attributions(
                                AttributionMethod::IntegratedGradients,
                                node,
                                class,
                                &xai::integrated_gradients(m, &snap.features, &baseline, &a, node, class, xs.ig_steps)?,
                            ),
                            _ => xai::edge_attributions(
                                AttributionMethod::AdjacencyGradient,
                                Some((node, class)),
                                xai::adjacency_gradient_saliency(m, &snap.features, g, node, class)?,
                            ),
                        };
                        out.extend(rows);
                    }
                }
            }
        }
        Ok(out)
    }

    fn resolve_targets(
        &self,
        g: &Graph,
        model: &GcnModel,
        a: &NormalizedAdjacency,
        snap: &ExplainedSnapshot,
    ) -> Result<Vec<(usize, usize)>> {
        let predicted = model.predict(&snap.features, a)?;
        let requested: Vec<XaiTarget> = if self.config.xai.targets.is_empty() {
            let top = betweenness(g).ranking().first().copied().unwrap_or(0);
            vec![XaiTarget { node: top, class: None }]
        } else {
            self.config.xai.targets.clone()
        };
        requested
            .iter()
            .map(|t| {
                if t.node >= g.n() {
                    return Err(Error::Config(format!("xai target node {} is not in the graph", t.node)));
                }
                Ok((t.node, t.class.unwrap_or(predicted[t.node])))
            })
            .collect()
    }
}

pub fn graph_artifacts(g: &Graph) -> Vec<Artifact> {
    let mut out = vec![Artifact::new("graph.csv", graph::io::edge_list_csv(g))];
    if let Some(p) = g.positions() {
        out.push(Artifact::new("positions.csv", graph::io::positions_csv(p)));
    }
    out.push(Artifact::new(GRAPH_JSON, graph::io::to_json(g)));
    out
}

/// Ensemble mean and standard deviation per step and state, long format.
pub fn ensemble_timeseries_csv(summary: &EnsembleSummary) -> String {
    let mut out = String::from("t,state,mean,std\n");
    for (t, (m, s)) in summary.mean.iter().zip(&summary.std).enumerate() {
        for st in NodeState::ALL {
            let i = st.index();
            let _ = writeln!(out, "{t},{},{},{}", st.as_char(), m[i], s[i]);
        }
    }
    out
}

fn json_artifact(path: &str, value: &impl Serialize) -> Result<Artifact> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(Artifact::new(path, text))
}

/// Per-strategy time series, replica-0 node histories, and the summary, with
/// strategies in config order.
pub fn comparison_artifacts(cfg: &ScenarioConfig, run: &ComparisonRun) -> Result<Vec<Artifact>> {
    let mut out = Vec::new();
    for s in &cfg.strategies {
        let tag = s.tag();
        let summary = run.comparison.summary(tag).expect("every strategy was run");
        out.push(Artifact::new(format!("timeseries_{tag}.csv"), ensemble_timeseries_csv(summary)));
        let first = &run.traces[tag][0];
        out.push(Artifact::new(format!("node_states_{tag}.csv"), first.node_history_csv()));
    }
    out.push(json_artifact("summary.json", &run.comparison)?);
    Ok(out)
}

/// `embeddings.csv` (two principal components of the last hidden layer)
/// and `embeddings_hidden.csv` (the raw hidden activations).
pub fn embedding_artifacts(g: &Graph, model: &GcnModel, snap: &ExplainedSnapshot) -> Result<Vec<Artifact>> {
    let a = NormalizedAdjacency::new(g);
    let (logits, hidden) = model.forward(&snap.features, &a)?;
    let predicted = gcn::argmax_rows(&logits);
    let pcs = project_embeddings(&hidden)?;
    let mut csv = String::from("node,pc1,pc2,true_class,predicted_class\n");
    for u in 0..g.n() {
        let _ = writeln!(csv, "{u},{},{},{},{}", pcs[[u, 0]], pcs[[u, 1]], snap.labels[u], predicted[u]);
    }
    let mut raw = String::from("node");
    for j in 0..hidden.ncols() {
        let _ = write!(raw, ",h{j}");
    }
    raw.push('\n');
    for (u, row) in hidden.rows().into_iter().enumerate() {
        let _ = write!(raw, "{u}");
        for v in row {
            let _ = write!(raw, ",{v}");
        }
        raw.push('\n');
    }
    Ok(vec![Artifact::new("embeddings.csv", csv), Artifact::new("embeddings_hidden.csv", raw)])
}

fn write_loose(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for a in artifacts {
        let p = dir.join(&a.path);
        std::fs::write(&p, &a.bytes).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

fn stage_graph(sc: &Scenario, dir: &Path) -> Result<Graph> {
    let p = dir.join(GRAPH_JSON);
    if p.is_file() {
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        graph::io::from_json(&text)
    } else {
        let g = sc.build_graph()?;
        write_loose(dir, &graph_artifacts(&g))?;
        Ok(g)
    }
}

fn stage_model(dir: &Path) -> Result<GcnModel> {
    let p = dir.join(MODEL_JSON);
    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    serde_json::from_str::<ModelFile>(&text)?.to_model()
}

/// Single stages run against a working directory. Each reads the graph
/// and model files earlier stages left there and writes its own outputs;
/// a missing graph is generated from the config.
pub mod stages {
    use super::*;

    pub fn generate_graph(sc: &Scenario, dir: &Path) -> Result<Vec<Artifact>> {
        let arts = graph_artifacts(&sc.build_graph()?);
        write_loose(dir, &arts)?;
        Ok(arts)
    }

    pub fn simulate(sc: &Scenario, dir: &Path) -> Result<Vec<Artifact>> {
        let g = stage_graph(sc, dir)?;
        let run = sc.compare(&g, &sc.initial_infected(&g)?)?;
        let mut arts = comparison_artifacts(sc.config(), &run)?;
        arts.retain(|a| a.path != "summary.json");
        write_loose(dir, &arts)?;
        Ok(arts)
    }

    pub fn compare(sc: &Scenario, dir: &Path) -> Result<Vec<Artifact>> {
        let g = stage_graph(sc, dir)?;
        let run = sc.compare(&g, &sc.initial_infected(&g)?)?;
        let arts = comparison_artifacts(sc.config(), &run)?;
        write_loose(dir, &arts)?;
        Ok(arts)
    }

    pub fn train_gcn(sc: &Scenario, dir: &Path) -> Result<Vec<Artifact>> {
        let g = stage_graph(sc, dir)?;
        let infected = sc.initial_infected(&g)?;
        let traces = sc.training_traces(&g, &infected, None)?;
        let ds = sc.dataset(&g, &traces)?;
        let (file, report) = sc.train(&ds)?;
        let mut arts = vec![json_artifact(MODEL_JSON, &file)?, json_artifact("training.json", &report)?];
        arts.extend(embedding_artifacts(&g, &file.to_model()?, &sc.snapshot(&g, &traces)?)?);
        write_loose(dir, &arts)?;
        Ok(arts)
    }

    pub fn explain(sc: &Scenario, dir: &Path) -> Result<Vec<Artifact>> {
        let g = stage_graph(sc, dir)?;
        let infected = sc.initial_infected(&g)?;
        let needs_model = sc.config().xai.methods.iter().any(|m| *m != XaiMethod::Counterfactual);
        let model = if needs_model { Some(stage_model(dir)?) } else { None };
        let traces = sc.training_traces(&g, &infected, None)?;
        let snap = sc.snapshot(&g, &traces)?;
        let rows = sc.explain(&g, &infected, model.as_ref(), &snap)?;
        let arts = vec![Artifact::new("attributions.csv", xai::attributions_csv(&rows))];
        write_loose(dir, &arts)?;
        Ok(arts)
    }
}

/// Runs every stage and writes a complete run directory, manifest last.
/// `progress` receives the name of each stage as it starts.
pub fn run_scenario(config: &ScenarioConfig, dir: &Path, mut progress: impl FnMut(&str)) -> Result<RunManifest> {
    let effective = config.effective();
    let sc = Scenario::new(effective.clone())?;
    let mut timings = Vec::new();
    let mut clock = |stage: &str, started: Instant| {
        timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: started.elapsed().as_secs_f64(),
        })
    };
    let mut arts = vec![Artifact::new("config.json", effective.to_json_pretty())];

    progress("graph");
    let t = Instant::now();
    let g = sc.build_graph()?;
    let infected = sc.initial_infected(&g)?;
    arts.extend(graph_artifacts(&g));
    clock("graph", t);

    progress("compare");
    let t = Instant::now();
    let run = sc.compare(&g, &infected)?;
    arts.extend(comparison_artifacts(&effective, &run)?);
    clock("compare", t);

    progress("train");
    let t = Instant::now();
    let traces = sc.training_traces(&g, &infected, Some(&run))?;
    let ds = sc.dataset(&g, &traces)?;
    let (file, report) = sc.train(&ds)?;
    let model = file.to_model()?;
    let snap = sc.snapshot(&g, &traces)?;
    arts.push(json_artifact(MODEL_JSON, &file)?);
    arts.push(json_artifact("training.json", &report)?);
    arts.extend(embedding_artifacts(&g, &model, &snap)?);
    clock("train", t);

    progress("explain");
    let t = Instant::now();
    let rows = sc.explain(&g, &infected, Some(&model), &snap)?;
    arts.push(Artifact::new("attributions.csv", xai::attributions_csv(&rows)));
    clock("explain", t);

    write_run_directory(dir, &arts, &effective, timings)
}
