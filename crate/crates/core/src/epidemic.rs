//! Discrete-time stochastic SIRVD dynamics.
//!
//! Updates are synchronous: every node's next state is computed from the
//! full state at time `t`. Each node consumes exactly one uniform draw per
//! step, in ascending id order, whatever its state. Competing events are
//! resolved against cumulative thresholds of that draw:
//!
//! | state | events, in precedence order                                  |
//! |-------|--------------------------------------------------------------|
//! | S     | natural death `mu_n`, else vaccination `p_vacc`, else infection `1 - (1 - beta_u)^m` |
//! | V     | natural death `mu_n`, else infection `1 - (1 - beta_v)^m`     |
//! | I     | disease death `mu_d`, natural death `mu_n`, recovery `gamma` (additive) |
//! | R     | natural death `mu_n`                                          |
//! | D     | absorbing                                                    |
//!
//! `m` is the number of infectious neighbors at time `t`.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::interventions::{select_vaccinees_capped, VaccinationStrategy};
use crate::rng::{rng_from_seed, split, stream, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeState {
    S,
    I,
    R,
    V,
    D,
}

impl NodeState {
    pub const ALL: [NodeState; 5] = [NodeState::S, NodeState::I, NodeState::R, NodeState::V, NodeState::D];

    /// Class index used by counts arrays and the classifier.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<NodeState> {
        Self::ALL.get(i).copied()
    }

    pub fn as_char(self) -> char {
        match self {
            NodeState::S => 'S',
            NodeState::I => 'I',
            NodeState::R => 'R',
            NodeState::V => 'V',
            NodeState::D => 'D',
        }
    }

    pub fn from_char(c: char) -> Option<NodeState> {
        Self::ALL.into_iter().find(|s| s.as_char() == c)
    }

    /// Whether a single step may move a node from `self` to `next`.
    pub fn can_become(self, next: NodeState) -> bool {
        use NodeState::*;
        self == next
            || matches!(
                (self, next),
                (S, I) | (S, V) | (S, D) | (V, I) | (V, D) | (I, R) | (I, D) | (R, D)
            )
    }
}

/// Per-step transition probabilities of the SIRVD model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicParams {
    /// Per-contact infection probability for unvaccinated susceptibles.
    pub beta_u: f64,
    /// Per-contact infection probability for vaccinated nodes.
    pub beta_v: f64,
    /// Recovery probability per step.
    pub gamma: f64,
    /// Disease mortality per step for infectious nodes.
    pub mu_d: f64,
    /// Natural mortality per step for every living node.
    pub mu_n: f64,
    /// Spontaneous vaccination probability per step for susceptibles.
    pub p_vacc: f64,
}

impl EpidemicParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("beta_u", self.beta_u),
            ("beta_v", self.beta_v),
            ("gamma", self.gamma),
            ("mu_d", self.mu_d),
            ("mu_n", self.mu_n),
            ("p_vacc", self.p_vacc),
        ];
        for (name, v) in fields {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name} = {v} is not in [0, 1]")));
            }
        }
        if self.beta_v > self.beta_u {
            return Err(Error::param("beta_v must not exceed beta_u"));
        }
        if self.gamma + self.mu_d + self.mu_n > 1.0 + 1e-12 {
            return Err(Error::param("gamma + mu_d + mu_n must not exceed 1"));
        }
        Ok(())
    }

    /// Whether a state with no infectious nodes can still change.
    fn has_background_events(&self) -> bool {
        self.mu_n > 0.0 || self.p_vacc > 0.0
    }
}

/// `1 - (1 - beta)^m`.
pub fn infection_probability(beta: f64, infected_neighbors: usize) -> f64 {
    1.0 - (1.0 - beta).powi(infected_neighbors as i32)
}

/// Outcome of one node's draw `u` in `[0, 1)`.
fn next_state(state: NodeState, u: f64, m: usize, p: &EpidemicParams) -> NodeState {
    use NodeState::*;
    match state {
        S => {
            let die = p.mu_n;
            let vacc = die + (1.0 - die) * p.p_vacc;
            let infect = vacc + (1.0 - vacc) * infection_probability(p.beta_u, m);
            if u < die {
                D
            } else if u < vacc {
                V
            } else if u < infect {
                I
            } else {
                S
            }
        }
        V => {
            let die = p.mu_n;
            let infect = die + (1.0 - die) * infection_probability(p.beta_v, m);
            if u < die {
                D
            } else if u < infect {
                I
            } else {
                V
            }
        }
        I => {
            let disease = p.mu_d;
            let natural = disease + p.mu_n;
            let recover = natural + p.gamma;
            if u < natural {
                D
            } else if u < recover {
                R
            } else {
                I
            }
        }
        R => {
            if u < p.mu_n {
                D
            } else {
                R
            }
        }
        D => D,
    }
}

/// Assigns `I` to `infected`, `V` to `vaccinated`, `S` to everyone else.
pub fn init_state(g: &Graph, infected: &[usize], vaccinated: &[usize]) -> Result<Vec<NodeState>> {
    let n = g.n();
    let mut state = vec![NodeState::S; n];
    for &u in infected {
        if u >= n {
            return Err(Error::param(format!("initially infected node {u} is out of range")));
        }
        state[u] = NodeState::I;
    }
    for &u in vaccinated {
        if u >= n {
            return Err(Error::param(format!("vaccinated node {u} is out of range")));
        }
        if state[u] == NodeState::I {
            return Err(Error::param(format!(
                "node {u} is both initially infected and vaccinated"
            )));
        }
        state[u] = NodeState::V;
    }
    Ok(state)
}

/// One synchronous update.
pub fn step(state: &[NodeState], g: &Graph, params: &EpidemicParams, rng: &mut SimRng) -> Vec<NodeState> {
    debug_assert_eq!(state.len(), g.n());
    state
        .iter()
        .enumerate()
        .map(|(u, &s)| {
            let draw: f64 = rng.random();
            let m = match s {
                NodeState::S | NodeState::V => g
                    .neighbors(u)
                    .iter()
                    .filter(|&&v| state[v] == NodeState::I)
                    .count(),
                _ => 0,
            };
            next_state(s, draw, m, params)
        })
        .collect()
}

/// Compartment counts indexed by [`NodeState::index`].
pub type Counts = [usize; 5];

pub fn count_states(state: &[NodeState]) -> Counts {
    let mut c = [0; 5];
    for s in state {
        c[s.index()] += 1;
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    /// `counts[t]` for `t = 0..=stopped_at`.
    pub counts: Vec<Counts>,
    /// `node_history[t][u]` for `t = 0..=stopped_at`.
    pub node_history: Vec<Vec<NodeState>>,
    pub seed: u64,
    /// Number of steps taken.
    pub stopped_at: usize,
    /// Nodes that were infectious at any recorded step.
    pub ever_infected: usize,
}

impl SimulationTrace {
    pub fn n(&self) -> usize {
        self.node_history.first().map_or(0, Vec::len)
    }

    pub fn attack_rate(&self) -> f64 {
        match self.n() {
            0 => 0.0,
            n => self.ever_infected as f64 / n as f64,
        }
    }

    pub fn final_state(&self) -> &[NodeState] {
        self.node_history.last().map_or(&[], Vec::as_slice)
    }

    /// Long-format `t,S,I,R,V,D` CSV.
    pub fn timeseries_csv(&self) -> String {
        let mut out = String::from("t,S,I,R,V,D\n");
        for (t, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{t},{},{},{},{},{}", c[0], c[1], c[2], c[3], c[4]);
        }
        out
    }

    /// Long-format `t,node,state` CSV.
    pub fn node_history_csv(&self) -> String {
        let mut out = String::from("t,node,state\n");
        for (t, row) in self.node_history.iter().enumerate() {
            for (u, s) in row.iter().enumerate() {
                let _ = writeln!(out, "{t},{u},{}", s.as_char());
            }
        }
        out
    }
}

/// Runs up to `t_max` steps from `initial`, seeding the dynamics stream with
/// `seed`. Stops early once no node is infectious, unless natural mortality
/// or spontaneous vaccination can still change the state.
pub fn run(
    g: &Graph,
    params: &EpidemicParams,
    initial: &[NodeState],
    t_max: usize,
    seed: u64,
) -> Result<SimulationTrace> {
    params.validate()?;
    if initial.len() != g.n() {
        return Err(Error::Shape(format!(
            "initial state has {} entries for {} nodes",
            initial.len(),
            g.n()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut state = initial.to_vec();
    let mut ever: Vec<bool> = state.iter().map(|&s| s == NodeState::I).collect();
    let mut counts = vec![count_states(&state)];
    let mut history = vec![state.clone()];
    let mut steps = 0;
    while steps < t_max {
        let infectious = counts[steps][NodeState::I.index()];
        if infectious == 0 && !params.has_background_events() {
            break;
        }
        state = step(&state, g, params, &mut rng);
        for (e, &s) in ever.iter_mut().zip(&state) {
            *e |= s == NodeState::I;
        }
        counts.push(count_states(&state));
        history.push(state.clone());
        steps += 1;
    }
    Ok(SimulationTrace {
        counts,
        node_history: history,
        seed,
        stopped_at: steps,
        ever_infected: ever.iter().filter(|&&e| e).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n_runs: usize,
    /// `mean[t][state]` over replicas, `t = 0..=t_max`. Replicas that stopped
    /// early are held at their final counts.
    pub mean: Vec<[f64; 5]>,
    pub std: Vec<[f64; 5]>,
    pub final_attack_rate: f64,
    pub final_attack_rate_std: f64,
    pub peak_infected: f64,
    pub time_to_peak: f64,
    /// Per-replica attack rates in replica order.
    pub attack_rates: Vec<f64>,
}

fn mean_std(xs: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let k = xs.len();
    if k == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / k as f64;
    if k == 1 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, var.sqrt())
}

impl EnsembleSummary {
    /// Aggregates traces in the given order. Standard deviations use the
    /// `k - 1` denominator and are 0 for a single replica.
    pub fn from_traces(traces: &[SimulationTrace], t_max: usize) -> Self {
        let padded: Vec<Vec<[f64; 5]>> = traces
            .iter()
            .map(|tr| {
                (0..=t_max)
                    .map(|t| {
                        let c = tr.counts[t.min(tr.counts.len() - 1)];
                        c.map(|x| x as f64)
                    })
                    .collect()
            })
            .collect();
        let mut mean = vec![[0.0; 5]; t_max + 1];
        let mut std = vec![[0.0; 5]; t_max + 1];
        for t in 0..=t_max {
            for c in 0..5 {
                let (m, s) = mean_std(padded.iter().map(|p| p[t][c]));
                mean[t][c] = m;
                std[t][c] = s;
            }
        }
        let attack_rates: Vec<f64> = traces.iter().map(SimulationTrace::attack_rate).collect();
        let (_, final_attack_rate_std) = mean_std(attack_rates.iter().copied());
        // Integer totals keep the mean exact when every replica agrees.
        let infected_total: usize = traces.iter().map(|t| t.ever_infected).sum();
        let people_total: usize = traces.iter().map(SimulationTrace::n).sum();
        let final_attack_rate = if people_total == 0 {
            0.0
        } else {
            infected_total as f64 / people_total as f64
        };
        let peaks: Vec<(f64, f64)> = traces
            .iter()
            .map(|tr| {
                let mut best = (0usize, 0usize);
                for (t, c) in tr.counts.iter().enumerate() {
                    if c[NodeState::I.index()] > best.1 {
                        best = (t, c[NodeState::I.index()]);
                    }
                }
                (best.1 as f64, best.0 as f64)
            })
            .collect();
        let (peak_infected, _) = mean_std(peaks.iter().map(|p| p.0));
        let (time_to_peak, _) = mean_std(peaks.iter().map(|p| p.1));
        EnsembleSummary {
            n_runs: traces.len(),
            mean,
            std,
            final_attack_rate,
            final_attack_rate_std,
            peak_infected,
            time_to_peak,
            attack_rates,
        }
    }
}

/// Initial state of replica `replica_seed`: `initial_infected` plus the
/// strategy's vaccinees, drawn from the replica's vaccination stream. The
/// vaccinee count is capped at the number of nodes not initially infected.
pub fn replica_initial_state(
    g: &Graph,
    strategy: &VaccinationStrategy,
    initial_infected: &[usize],
    replica_seed: u64,
) -> Result<Vec<NodeState>> {
    let vaccinees = select_vaccinees_capped(
        g,
        strategy,
        initial_infected,
        split(replica_seed, stream::VACCINATION),
    )?;
    init_state(g, initial_infected, &vaccinees)
}

/// Runs `n_runs` replicas, replica `i` seeded by `split(root_seed, i)`.
/// The dynamics stream of a replica does not depend on the strategy, so
/// ensembles that differ only in strategy share random numbers.
pub fn ensemble_traces(
    g: &Graph,
    params: &EpidemicParams,
    strategy: &VaccinationStrategy,
    initial_infected: &[usize],
    t_max: usize,
    n_runs: usize,
    root_seed: u64,
) -> Result<(EnsembleSummary, Vec<SimulationTrace>)> {
    if n_runs == 0 {
        return Err(Error::param("n_runs must be >= 1"));
    }
    params.validate()?;
    strategy.validate()?;
    let traces = (0..n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let replica = split(root_seed, i);
            let init = replica_initial_state(g, strategy, initial_infected, replica)?;
            run(g, params, &init, t_max, split(replica, stream::DYNAMICS))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((EnsembleSummary::from_traces(&traces, t_max), traces))
}

pub fn ensemble(
    g: &Graph,
    params: &EpidemicParams,
    strategy: &VaccinationStrategy,
    initial_infected: &[usize],
    t_max: usize,
    n_runs: usize,
    root_seed: u64,
) -> Result<EnsembleSummary> {
    ensemble_traces(g, params, strategy, initial_infected, t_max, n_runs, root_seed).map(|(s, _)| s)
}
