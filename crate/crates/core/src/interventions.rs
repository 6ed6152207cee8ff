//! Vaccination strategies and the three-scenario comparison.
//!
//! Strategies pre-vaccinate a fixed number of nodes at `t = 0`:
//! `round_half_up(coverage * n)`, never touching the initially infected.

use std::collections::BTreeMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::centrality::{centrality, CentralityKind};
use crate::epidemic::{ensemble_traces, EnsembleSummary, EpidemicParams, SimulationTrace};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase", deny_unknown_fields)]
pub enum VaccinationStrategy {
    None,
    Random {
        coverage: f64,
    },
    Targeted {
        #[serde(default = "default_metric")]
        metric: CentralityKind,
        coverage: f64,
    },
}

fn default_metric() -> CentralityKind {
    CentralityKind::Betweenness
}

impl VaccinationStrategy {
    /// Key used for summaries and artifact file names.
    pub fn tag(&self) -> &'static str {
        match self {
            VaccinationStrategy::None => "none",
            VaccinationStrategy::Random { .. } => "random",
            VaccinationStrategy::Targeted { .. } => "targeted",
        }
    }

    pub fn coverage(&self) -> f64 {
        match *self {
            VaccinationStrategy::None => 0.0,
            VaccinationStrategy::Random { coverage } | VaccinationStrategy::Targeted { coverage, .. } => coverage,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.coverage();
        if (0.0..=1.0).contains(&c) {
            Ok(())
        } else {
            Err(Error::param(format!("coverage {c} is not in [0, 1]")))
        }
    }

    /// Number of nodes the strategy vaccinates on an `n`-node graph.
    pub fn target_count(&self, n: usize) -> usize {
        match self {
            VaccinationStrategy::None => 0,
            _ => (self.coverage() * n as f64 + 0.5).floor() as usize,
        }
    }
}

/// Chooses the nodes to pre-vaccinate. Random selection is uniform without
/// replacement over the eligible nodes; targeted selection takes the top
/// scores with ties broken by ascending id and ignores `seed`. The result is
/// sorted ascending. Fails when the strategy asks for more nodes than are
/// eligible.
pub fn select_vaccinees(
    g: &Graph,
    strategy: &VaccinationStrategy,
    exclude: &[usize],
    seed: u64,
) -> Result<Vec<usize>> {
    select(g, strategy, exclude, seed, false)
}

/// Like [`select_vaccinees`] but vaccinates every eligible node instead of
/// failing when the requested count exceeds them. Scenario runs use this so
/// full coverage means "everyone not initially infected".
pub fn select_vaccinees_capped(
    g: &Graph,
    strategy: &VaccinationStrategy,
    exclude: &[usize],
    seed: u64,
) -> Result<Vec<usize>> {
    select(g, strategy, exclude, seed, true)
}

fn select(
    g: &Graph,
    strategy: &VaccinationStrategy,
    exclude: &[usize],
    seed: u64,
    cap: bool,
) -> Result<Vec<usize>> {
    strategy.validate()?;
    let n = g.n();
    let mut excluded = vec![false; n];
    for &u in exclude {
        if u >= n {
            return Err(Error::param(format!("excluded node {u} is out of range")));
        }
        excluded[u] = true;
    }
    let eligible: Vec<usize> = (0..n).filter(|&u| !excluded[u]).collect();
    let mut k = strategy.target_count(n);
    if k > eligible.len() {
        if !cap {
            return Err(Error::param(format!(
                "strategy needs {k} vaccinees but only {} nodes are eligible",
                eligible.len()
            )));
        }
        k = eligible.len();
    }
    let mut chosen = match strategy {
        VaccinationStrategy::None => Vec::new(),
        VaccinationStrategy::Random { .. } => {
            let mut rng = rng_from_seed(seed);
            index::sample(&mut rng, eligible.len(), k)
                .into_iter()
                .map(|i| eligible[i])
                .collect()
        }
        VaccinationStrategy::Targeted { metric, .. } => {
            let scores = centrality(g, *metric);
            scores
                .ranking()
                .into_iter()
                .filter(|&u| !excluded[u])
                .take(k)
                .collect()
        }
    };
    chosen.sort_unstable();
    Ok(chosen)
}

/// Inputs shared by every scenario of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonProvenance {
    pub params: EpidemicParams,
    pub initial_infected: Vec<usize>,
    pub t_max: usize,
    pub n_runs: usize,
    pub root_seed: u64,
    pub n: usize,
    pub edge_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyComparison {
    pub provenance: ComparisonProvenance,
    pub strategies: BTreeMap<String, VaccinationStrategy>,
    pub summaries: BTreeMap<String, EnsembleSummary>,
}

impl StrategyComparison {
    pub fn summary(&self, tag: &str) -> Option<&EnsembleSummary> {
        self.summaries.get(tag)
    }
}

/// Runs one ensemble per strategy with identical graph, parameters, horizon,
/// replica count and root seed. Returns the comparison plus every
/// scenario's traces, keyed by tag.
pub fn compare_with_traces(
    g: &Graph,
    params: &EpidemicParams,
    initial_infected: &[usize],
    strategies: &[VaccinationStrategy],
    t_max: usize,
    n_runs: usize,
    root_seed: u64,
) -> Result<(StrategyComparison, BTreeMap<String, Vec<SimulationTrace>>)> {
    if initial_infected.is_empty() {
        return Err(Error::param("at least one initially infected node is required"));
    }
    let mut summaries = BTreeMap::new();
    let mut traces = BTreeMap::new();
    let mut by_tag = BTreeMap::new();
    for s in strategies {
        let tag = s.tag().to_string();
        if by_tag.insert(tag.clone(), s.clone()).is_some() {
            return Err(Error::param(format!("strategy `{tag}` listed twice")));
        }
        let (summary, tr) = ensemble_traces(g, params, s, initial_infected, t_max, n_runs, root_seed)?;
        summaries.insert(tag.clone(), summary);
        traces.insert(tag, tr);
    }
    let provenance = ComparisonProvenance {
        params: *params,
        initial_infected: initial_infected.to_vec(),
        t_max,
        n_runs,
        root_seed,
        n: g.n(),
        edge_count: g.edge_count(),
    };
    Ok((
        StrategyComparison {
            provenance,
            strategies: by_tag,
            summaries,
        },
        traces,
    ))
}

/// The standard comparison: no vaccination, random vaccination and
/// betweenness-targeted vaccination at the same coverage.
pub fn compare_strategies(
    g: &Graph,
    params: &EpidemicParams,
    initial_infected: &[usize],
    coverage: f64,
    t_max: usize,
    n_runs: usize,
    root_seed: u64,
) -> Result<StrategyComparison> {
    let strategies = [
        VaccinationStrategy::None,
        VaccinationStrategy::Random { coverage },
        VaccinationStrategy::Targeted {
            metric: CentralityKind::Betweenness,
            coverage,
        },
    ];
    compare_with_traces(g, params, initial_infected, &strategies, t_max, n_runs, root_seed).map(|(c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::CentralityScores;
    use proptest::prelude::*;

    fn targeted(coverage: f64) -> VaccinationStrategy {
        VaccinationStrategy::Targeted {
            metric: CentralityKind::Betweenness,
            coverage,
        }
    }

    #[test]
    fn strategy_json_fragments() {
        let none: VaccinationStrategy = serde_json::from_str(r#"{"strategy":"none"}"#).unwrap();
        assert_eq!(none, VaccinationStrategy::None);
        let r: VaccinationStrategy = serde_json::from_str(r#"{"strategy":"random","coverage":0.1}"#).unwrap();
        assert_eq!(r, VaccinationStrategy::Random { coverage: 0.1 });
        let t: VaccinationStrategy =
            serde_json::from_str(r#"{"strategy":"targeted","metric":"betweenness","coverage":0.1}"#).unwrap();
        assert_eq!(t, targeted(0.1));
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"strategy":"targeted","metric":"betweenness","coverage":0.1}"#);
        assert!(serde_json::from_str::<VaccinationStrategy>(r#"{"strategy":"random"}"#).is_err());
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(targeted(0.1).target_count(21), 2);
        assert_eq!(targeted(0.5).target_count(5), 3);
        assert_eq!(targeted(0.25).target_count(10), 3);
        assert_eq!(targeted(1.0).target_count(7), 7);
        assert_eq!(VaccinationStrategy::None.target_count(7), 0);
    }

    #[test]
    fn no_vaccination_is_empty() {
        let g = Graph::complete(5);
        assert!(select_vaccinees(&g, &VaccinationStrategy::None, &[], 1).unwrap().is_empty());
    }

    #[test]
    fn targeted_star_picks_center() {
        let g = Graph::star(4);
        assert_eq!(select_vaccinees(&g, &targeted(0.2), &[], 1).unwrap(), vec![0]);
        // Center excluded: leaves tie at 0, lowest id wins.
        assert_eq!(select_vaccinees(&g, &targeted(0.2), &[0], 1).unwrap(), vec![1]);
    }

    #[test]
    fn too_many_vaccinees_is_an_error() {
        let g = Graph::complete(4);
        assert!(select_vaccinees(&g, &targeted(1.0), &[0], 1).is_err());
        assert_eq!(select_vaccinees_capped(&g, &targeted(1.0), &[0], 1).unwrap(), vec![1, 2, 3]);
        assert!(select_vaccinees(&g, &VaccinationStrategy::Random { coverage: 1.5 }, &[], 1).is_err());
    }

    #[test]
    fn random_selection_is_uniform() {
        let g = Graph::empty(100);
        let s = VaccinationStrategy::Random { coverage: 0.5 };
        let mut hits = [0u32; 100];
        let runs = 2000;
        for seed in 0..runs {
            let chosen = select_vaccinees(&g, &s, &[], seed).unwrap();
            assert_eq!(chosen.len(), 50);
            assert!(chosen.windows(2).all(|w| w[0] < w[1]));
            for u in chosen {
                hits[u] += 1;
            }
        }
        let se = (0.25 / runs as f64).sqrt();
        for h in hits {
            let f = h as f64 / runs as f64;
            assert!((f - 0.5).abs() < 4.0 * se, "frequency {f}");
        }
        // About 0.27 of 100 nodes are expected beyond 3 standard errors.
        let outside = hits
            .iter()
            .filter(|&&h| ((h as f64 / runs as f64) - 0.5).abs() >= 3.0 * se)
            .count();
        assert!(outside <= 3, "{outside} nodes outside 3 standard errors");
    }

    #[test]
    fn random_respects_exclusion() {
        let g = Graph::complete(10);
        let chosen = select_vaccinees(&g, &VaccinationStrategy::Random { coverage: 0.8 }, &[0, 1], 4).unwrap();
        assert_eq!(chosen, (2..10).collect::<Vec<_>>());
    }

    #[test]
    fn zero_coverage_scenarios_coincide() {
        let g = crate::graph::generate_er(40, 0.1, 2).unwrap();
        let p = EpidemicParams { beta_u: 0.3, gamma: 0.2, ..Default::default() };
        let c = compare_strategies(&g, &p, &[0], 0.0, 30, 20, 11).unwrap();
        let none = c.summary("none").unwrap();
        assert_eq!(none, c.summary("random").unwrap());
        assert_eq!(none, c.summary("targeted").unwrap());
    }

    #[test]
    fn full_coverage_blocks_spread() {
        let g = crate::graph::generate_er(30, 0.3, 3).unwrap();
        let p = EpidemicParams { beta_u: 0.9, beta_v: 0.0, gamma: 0.3, ..Default::default() };
        let c = compare_strategies(&g, &p, &[4], 1.0, 30, 10, 1).unwrap();
        for tag in ["random", "targeted"] {
            assert_eq!(c.summary(tag).unwrap().final_attack_rate, 1.0 / 30.0);
        }
        assert!(c.summary("none").unwrap().final_attack_rate > 0.5);
    }

    #[test]
    fn duplicate_strategies_rejected() {
        let g = Graph::complete(4);
        let p = EpidemicParams::default();
        let s = [VaccinationStrategy::None, VaccinationStrategy::None];
        assert!(compare_with_traces(&g, &p, &[0], &s, 5, 1, 0).is_err());
        assert!(compare_with_traces(&g, &p, &[], &s[..1], 5, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn selection_sizes_and_determinism(
            n in 1usize..40,
            p in 0.0f64..0.4,
            coverage in 0.0f64..=1.0,
            seed: u64,
            graph_seed: u64,
        ) {
            let g = crate::graph::generate_er(n, p, graph_seed).unwrap();
            for s in [VaccinationStrategy::Random { coverage }, targeted(coverage)] {
                let a = select_vaccinees(&g, &s, &[], seed).unwrap();
                prop_assert_eq!(a.len(), s.target_count(n));
                prop_assert_eq!(&a, &select_vaccinees(&g, &s, &[], seed).unwrap());
            }
            let t = targeted(coverage);
            prop_assert_eq!(
                select_vaccinees(&g, &t, &[], seed).unwrap(),
                select_vaccinees(&g, &t, &[], seed.wrapping_add(1)).unwrap()
            );
        }

        #[test]
        fn targeted_invariant_under_rescaling(values in proptest::collection::vec(0.0f64..10.0, 1..30), scale in 0.01f64..100.0) {
            let a = CentralityScores { kind: CentralityKind::Degree, values: values.clone() };
            let b = CentralityScores { kind: CentralityKind::Degree, values: values.iter().map(|v| v * scale).collect() };
            // Rescaling can merge or split near-ties only through rounding; skip those draws.
            let distinct = |v: &[f64]| {
                let mut s = v.to_vec();
                s.sort_by(f64::total_cmp);
                s.windows(2).all(|w| w[0] == w[1] || (w[1] - w[0]) > 1e-9)
            };
            prop_assume!(distinct(&values));
            prop_assert_eq!(a.ranking(), b.ranking());
        }
    }
}
