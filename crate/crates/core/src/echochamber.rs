//! Echo-chamber simulation: learners on a population graph talk about
//! topics, pick words by similarity to the topic in their own
//! representation, and listeners move toward the speaker on the words they
//! heard.
//!
//! Randomness is per entity: each learner draws from `(seed, "learner", id)`,
//! each connected component schedules its conversations from
//! `(seed, "edges", smallest id in the component)`, and every component holds
//! one conversation per step. Components therefore evolve independently, and
//! a component simulated on its own reproduces its trajectory bit for bit.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::embedding::{Metric, PointCloud};
use crate::error::{Error, Result};
use crate::matrix::{angular_distance, dot, norm, Matrix};
use crate::rng::{stream, StreamRng};
use crate::topology::{
    build_vr_filtration, compute_persistence_with, pairwise_distances, PersistenceDiagram, PersistenceOptions,
};

const ER_RETRIES: u64 = 100;

/// How a population graph is generated.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Complete { n: usize },
    Ring { n: usize },
    /// Re-drawn until connected, up to a retry budget.
    ErdosRenyi { n: usize, p: f64 },
    /// Cliques on `0..a` and `a..a+b` joined by `bridges` cross edges.
    TwoCliques { a: usize, b: usize, bridges: usize },
    Custom { n: usize, edges: Vec<(usize, usize, f64)> },
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Complete { n } => write!(f, "complete({n})"),
            GraphSpec::Ring { n } => write!(f, "ring({n})"),
            GraphSpec::ErdosRenyi { n, p } => write!(f, "erdos_renyi({n}, {p})"),
            GraphSpec::TwoCliques { a, b, bridges } => write!(f, "two_cliques({a}, {b}, bridge={bridges})"),
            GraphSpec::Custom { n, edges } => write!(f, "custom({n}, {} edges)", edges.len()),
        }
    }
}

/// Undirected weighted graph of learners. Vertex `i` is the learner with
/// entity id `ids[i]`; ids key the random streams.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    ids: Vec<u64>,
    tag: String,
}

impl PopulationGraph {
    /// Validates edges (`i < j < n`, positive weight, no duplicates); entity
    /// ids default to vertex indices.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>, tag: impl Into<String>) -> Result<Self> {
        Self::with_ids(n, edges, (0..n as u64).collect(), tag)
    }

    pub fn with_ids(n: usize, mut edges: Vec<(usize, usize, f64)>, ids: Vec<u64>, tag: impl Into<String>) -> Result<Self> {
        if ids.len() != n {
            return Err(Error::invalid(format!("{} entity ids for {n} vertices", ids.len())));
        }
        let mut sorted_ids = ids.clone();
        sorted_ids.sort_unstable();
        if sorted_ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate entity ids"));
        }
        for e in &mut edges {
            if e.0 > e.1 {
                *e = (e.1, e.0, e.2);
            }
            let (i, j, w) = *e;
            if i == j {
                return Err(Error::invalid(format!("self-loop at {i}")));
            }
            if j >= n {
                return Err(Error::invalid(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("edge ({i}, {j}) has weight {w}")));
            }
        }
        edges.sort_by_key(|e| (e.0, e.1));
        if edges.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::invalid("duplicate edge"));
        }
        Ok(PopulationGraph { n, edges, ids, tag: tag.into() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v || e.1 == v).count()
    }

    /// Connected components as sorted vertex lists, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(i, j, _) in &self.edges {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            parent[a.max(b)] = a.min(b);
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..self.n {
            let root = find(&mut parent, v);
            groups.entry(root).or_default().push(v);
        }
        groups.into_values().collect()
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.components().len() == 1
    }

    /// The induced subgraph on `vertices`, keeping entity ids.
    pub fn subgraph(&self, vertices: &[usize]) -> Result<PopulationGraph> {
        let mut index = vec![usize::MAX; self.n];
        for (k, &v) in vertices.iter().enumerate() {
            if v >= self.n {
                return Err(Error::invalid(format!("vertex {v} out of range")));
            }
            index[v] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| index[e.0] != usize::MAX && index[e.1] != usize::MAX)
            .map(|&(i, j, w)| (index[i], index[j], w))
            .collect();
        let ids = vertices.iter().map(|&v| self.ids[v]).collect();
        PopulationGraph::with_ids(vertices.len(), edges, ids, format!("subgraph of {}", self.tag))
    }
}

/// Builds the graph described by `spec`; only Erdős-Rényi graphs use `seed`.
pub fn make_graph(spec: &GraphSpec, seed: u64) -> Result<PopulationGraph> {
    let tag = spec.to_string();
    let clique = |range: std::ops::Range<usize>| {
        let r = range.clone();
        r.flat_map(move |i| (i + 1..range.end).map(move |j| (i, j, 1.0)))
    };
    match *spec {
        GraphSpec::Complete { n } => {
            if n < 2 {
                return Err(Error::invalid("complete graph needs n >= 2"));
            }
            PopulationGraph::new(n, clique(0..n).collect(), tag)
        }
        GraphSpec::Ring { n } => {
            if n < 3 {
                return Err(Error::invalid("ring needs n >= 3"));
            }
            PopulationGraph::new(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect(), tag)
        }
        GraphSpec::TwoCliques { a, b, bridges } => {
            if a < 2 || b < 2 {
                return Err(Error::invalid("two_cliques needs cliques of size >= 2"));
            }
            if bridges > a * b {
                return Err(Error::invalid(format!("{bridges} bridges exceed the {} possible", a * b)));
            }
            let mut edges: Vec<_> = clique(0..a).chain(clique(a..a + b)).collect();
            // bridge k joins i = k mod a with a + (k div a + i) mod b; distinct for k < a·b
            edges.extend((0..bridges).map(|k| {
                let i = k % a;
                (i, a + (k / a + i) % b, 1.0)
            }));
            PopulationGraph::new(a + b, edges, tag)
        }
        GraphSpec::ErdosRenyi { n, p } => {
            if n < 2 || !(p > 0.0 && p <= 1.0) {
                return Err(Error::invalid(format!("erdos_renyi needs n >= 2 and p in (0, 1], got n = {n}, p = {p}")));
            }
            for attempt in 0..ER_RETRIES {
                let mut rng = stream(seed, "graph", attempt);
                let edges = (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .filter(|_| rng.random::<f64>() < p)
                    .map(|(i, j)| (i, j, 1.0))
                    .collect();
                let g = PopulationGraph::new(n, edges, tag.clone())?;
                if g.is_connected() {
                    return Ok(g);
                }
            }
            Err(Error::Generation(format!("{tag} not connected after {ER_RETRIES} draws")))
        }
        GraphSpec::Custom { n, ref edges } => PopulationGraph::new(n, edges.clone(), tag),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    /// One base matrix from the global seed, plus per-learner Gaussian noise
    /// of scale `sigma`.
    SharedPerturbed { sigma: f64 },
    /// Every learner draws its own matrix.
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub vocab_size: usize,
    pub dim: usize,
    pub steps: usize,
    pub sample_interval: usize,
    /// Words uttered per conversation.
    pub utterance_length: usize,
    /// Softmax sharpness.
    pub beta: f64,
    /// Listener learning rate.
    pub eta: f64,
    pub init: InitScheme,
    pub seed: u64,
    /// Also record the distance of every learner pair at each sample.
    pub track_pairs: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            vocab_size: 50,
            dim: 16,
            steps: 20_000,
            sample_interval: 100,
            utterance_length: 8,
            beta: 5.0,
            eta: 0.05,
            init: InitScheme::Independent,
            seed: 0,
            track_pairs: false,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 || self.dim < 2 {
            return Err(Error::invalid("vocab_size and dim must be >= 2"));
        }
        if self.sample_interval == 0 {
            return Err(Error::invalid("sample_interval must be >= 1"));
        }
        if self.utterance_length == 0 || self.utterance_length >= self.vocab_size {
            return Err(Error::invalid(format!(
                "utterance_length must be in 1..{} (the topic is never uttered), got {}",
                self.vocab_size, self.utterance_length
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive, got {}", self.beta)));
        }
        // η = 0 is accepted: it freezes the population, which is a useful control
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::invalid(format!("eta must be in [0, 1], got {}", self.eta)));
        }
        if let InitScheme::SharedPerturbed { sigma } = self.init {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub id: u64,
    /// `|V| × d`, unit rows.
    pub representation: Matrix,
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut StreamRng) -> Matrix {
    let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::from_vec(rows, cols, data)
}

/// Normalizes each row in place; a zero row becomes the first basis vector.
fn normalize_rows(m: &mut Matrix) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let len = norm(row);
        if len > 0.0 {
            row.iter_mut().for_each(|x| *x /= len);
        } else {
            row.fill(0.0);
            row[0] = 1.0;
        }
    }
}

pub fn init_population(g: &PopulationGraph, p: &SimParams) -> Result<Vec<LearnerState>> {
    p.validate()?;
    let (v, d) = (p.vocab_size, p.dim);
    let base = match p.init {
        InitScheme::SharedPerturbed { .. } => Some(gaussian_matrix(v, d, &mut stream(p.seed, "base", 0))),
        InitScheme::Independent => None,
    };
    Ok(g.ids()
        .iter()
        .map(|&id| {
            let mut rng = stream(p.seed, "init", id);
            let mut m = match (&base, p.init) {
                (Some(base), InitScheme::SharedPerturbed { sigma }) => {
                    let mut m = base.clone();
                    if sigma > 0.0 {
                        for x in m.as_mut_slice() {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            *x += sigma * z;
                        }
                    }
                    m
                }
                _ => gaussian_matrix(v, d, &mut rng),
            };
            normalize_rows(&mut m);
            LearnerState { id, representation: m }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConversationEvent {
    pub step: usize,
    /// Entity ids.
    pub speaker: u64,
    pub listener: u64,
    pub topic: usize,
    pub words: Vec<usize>,
}

/// Draws `k` distinct words other than `topic`, each draw proportional to
/// `exp(β · cos(R[w], R[topic]))` among the words not yet drawn.
pub fn sample_utterance(rep: &Matrix, topic: usize, k: usize, beta: f64, rng: &mut impl Rng) -> Vec<usize> {
    let t = rep.row(topic);
    let sims: Vec<f64> = (0..rep.rows()).map(|w| dot(rep.row(w), t)).collect();
    let top = sims.iter().enumerate().filter(|&(w, _)| w != topic).map(|(_, &s)| s).fold(f64::MIN, f64::max);
    let mut weights: Vec<f64> =
        sims.iter().enumerate().map(|(w, &s)| if w == topic { 0.0 } else { (beta * (s - top)).exp() }).collect();
    let mut words = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = None;
        for (w, &x) in weights.iter().enumerate() {
            if x <= 0.0 {
                continue;
            }
            pick = Some(w);
            if u < x {
                break;
            }
            u -= x;
        }
        // rounding can run past the end; the last positive weight absorbs it
        let Some(w) = pick else { break };
        words.push(w);
        weights[w] = 0.0;
    }
    words
}

/// `R_l[w] ← normalize(R_l[w] + η (R_s[w] − R_l[w]))`. Rows that already
/// agree, and updates that would cancel to the zero vector, leave the row
/// unchanged.
fn move_toward(listener: &mut [f64], speaker: &[f64], eta: f64) {
    if eta == 0.0 || listener == speaker {
        return;
    }
    let next: Vec<f64> = listener.iter().zip(speaker).map(|(l, s)| l + eta * (s - l)).collect();
    let len = norm(&next);
    if len > 0.0 && len.is_finite() {
        for (x, y) in listener.iter_mut().zip(next) {
            *x = y / len;
        }
    }
}

/// Mean over vocabulary rows of the angular distance between two learners.
pub fn representation_distance(a: &Matrix, b: &Matrix) -> f64 {
    (0..a.rows()).map(|r| angular_distance(a.row(r), b.row(r))).sum::<f64>() / a.rows() as f64
}

/// Distances between all learner pairs `(i, j)`, `i < j`, in row-major order.
pub fn pair_distances(pop: &[LearnerState]) -> Vec<f64> {
    let n = pop.len();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| representation_distance(&pop[i].representation, &pop[j].representation))
        .collect()
}

pub fn mean_pairwise_distance(pop: &[LearnerState]) -> f64 {
    let d = pair_distances(pop);
    if d.is_empty() {
        0.0
    } else {
        d.iter().sum::<f64>() / d.len() as f64
    }
}

struct Component {
    vertices: Vec<usize>,
    edges: Vec<(usize, usize, f64)>,
    total: f64,
    rng: StreamRng,
}

/// A running simulation.
pub struct Simulation {
    params: SimParams,
    population: Vec<LearnerState>,
    components: Vec<Component>,
    learner_rngs: Vec<StreamRng>,
    step: usize,
}

impl Simulation {
    pub fn new(g: &PopulationGraph, params: &SimParams) -> Result<Self> {
        let population = init_population(g, params)?;
        let components = g
            .components()
            .into_iter()
            .filter_map(|vertices| {
                let edges: Vec<_> = g.edges().iter().copied().filter(|e| vertices.binary_search(&e.0).is_ok()).collect();
                if edges.is_empty() {
                    return None;
                }
                let min_id = vertices.iter().map(|&v| g.ids()[v]).min().expect("component is non-empty");
                let total = edges.iter().map(|e| e.2).sum();
                Some(Component { vertices, edges, total, rng: stream(params.seed, "edges", min_id) })
            })
            .collect();
        let learner_rngs = g.ids().iter().map(|&id| stream(params.seed, "learner", id)).collect();
        Ok(Simulation { params: params.clone(), population, components, learner_rngs, step: 0 })
    }

    pub fn population(&self) -> &[LearnerState] {
        &self.population
    }

    /// Steps taken so far.
    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// One step: every connected component with an edge holds one
    /// conversation, in order of their smallest vertex.
    pub fn advance(&mut self) -> Vec<ConversationEvent> {
        let p = &self.params;
        let mut events = Vec::with_capacity(self.components.len());
        for c in &mut self.components {
            debug_assert!(!c.vertices.is_empty());
            let mut u = c.rng.random::<f64>() * c.total;
            let mut edge = *c.edges.last().expect("component has edges");
            for &e in &c.edges {
                if u < e.2 {
                    edge = e;
                    break;
                }
                u -= e.2;
            }
            let (s, l) = if c.rng.random::<bool>() { (edge.0, edge.1) } else { (edge.1, edge.0) };

            let rng = &mut self.learner_rngs[s];
            let topic = rng.random_range(0..p.vocab_size);
            let words = sample_utterance(&self.population[s].representation, topic, p.utterance_length, p.beta, rng);

            let speaker = self.population[s].representation.clone();
            let listener = &mut self.population[l].representation;
            for &w in words.iter().chain(std::iter::once(&topic)) {
                move_toward(listener.row_mut(w), speaker.row(w), p.eta);
            }
            events.push(ConversationEvent {
                step: self.step,
                speaker: self.population[s].id,
                listener: self.population[l].id,
                topic,
                words,
            });
        }
        self.step += 1;
        events
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriftSeries {
    pub steps: Vec<usize>,
    pub mean_distance: Vec<f64>,
    /// Per sample, the distances of all learner pairs `(i, j)`, `i < j`.
    pub pairs: Option<Vec<Vec<f64>>>,
}

impl DriftSeries {
    fn record(&mut self, step: usize, pop: &[LearnerState], track_pairs: bool) {
        let d = pair_distances(pop);
        let mean = if d.is_empty() { 0.0 } else { d.iter().sum::<f64>() / d.len() as f64 };
        self.steps.push(step);
        self.mean_distance.push(mean);
        if track_pairs {
            self.pairs.get_or_insert_with(Vec::new).push(d);
        }
    }

    /// Mean of the last `k` samples.
    pub fn smoothed_final(&self, k: usize) -> f64 {
        let k = k.min(self.mean_distance.len()).max(1);
        let tail = &self.mean_distance[self.mean_distance.len().saturating_sub(k)..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "mean_distance"])?;
        for (s, d) in self.steps.iter().zip(&self.mean_distance) {
            w.write_record([s.to_string(), format!("{d:?}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_events_csv<W: Write>(events: &[ConversationEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "speaker", "listener", "topic", "words"])?;
    for e in events {
        let words = e.words.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        w.write_record([e.step.to_string(), e.speaker.to_string(), e.listener.to_string(), e.topic.to_string(), words])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `p.steps` steps, sampling the mean pairwise learner distance at step
/// 0 and after every `sample_interval` steps (and after the last step).
pub fn simulate(g: &PopulationGraph, p: &SimParams) -> Result<(DriftSeries, Vec<ConversationEvent>)> {
    simulate_with(g, p, |_, _| Ok(()))
}

/// [`simulate`], calling `checkpoint(step, population)` after every step
/// (and once before the first, with step 0).
pub fn simulate_with(
    g: &PopulationGraph,
    p: &SimParams,
    mut checkpoint: impl FnMut(usize, &[LearnerState]) -> Result<()>,
) -> Result<(DriftSeries, Vec<ConversationEvent>)> {
    let mut sim = Simulation::new(g, p)?;
    let mut series = DriftSeries::default();
    let mut events = Vec::new();
    series.record(0, sim.population(), p.track_pairs);
    checkpoint(0, sim.population())?;
    for t in 1..=p.steps {
        events.extend(sim.advance());
        if t % p.sample_interval == 0 || t == p.steps {
            series.record(t, sim.population(), p.track_pairs);
        }
        checkpoint(t, sim.population())?;
    }
    Ok((series, events))
}

/// Labels `w0, w1, ...` for simulated vocabulary rows.
pub fn word_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

/// One persistence diagram per learner, from the angular cloud of its first
/// `top_n` vocabulary rows.
pub fn snapshot_diagrams(
    pop: &[LearnerState],
    top_n: usize,
    max_dim: usize,
    max_eps: f64,
) -> Result<Vec<PersistenceDiagram>> {
    pop.par_iter()
        .map(|learner| {
            let rows = top_n.min(learner.representation.rows());
            if rows < 2 {
                return Err(Error::invalid(format!("top_n = {top_n} leaves fewer than 2 words")));
            }
            let order: Vec<usize> = (0..rows).collect();
            let cloud = PointCloud::normalized(word_labels(rows), learner.representation.select_rows(&order), Metric::Angular)?;
            let f = build_vr_filtration(&pairwise_distances(&cloud)?, max_dim, max_eps)?;
            Ok(compute_persistence_with(&f, PersistenceOptions { generators: false }))
        })
        .collect()
}

/// A simulation run: graph, parameters and what to snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub graph: GraphSpec,
    pub params: SimParams,
    /// Steps after which per-learner diagrams are written.
    pub checkpoints: Vec<usize>,
    pub snapshot_top_n: usize,
    pub snapshot_max_dim: usize,
    pub snapshot_max_eps: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            graph: GraphSpec::Complete { n: 20 },
            params: SimParams::default(),
            checkpoints: Vec::new(),
            snapshot_top_n: 50,
            snapshot_max_dim: 1,
            snapshot_max_eps: 1.0,
        }
    }
}

impl SimConfig {
    /// Parses a config, using `default_seed` unless the text sets `seed`.
    pub fn parse(text: &str, default_seed: u64) -> Result<Self> {
        let has_seed = text
            .lines()
            .filter_map(|l| l.split('#').next()?.split_once('='))
            .any(|(k, _)| k.trim() == "seed");
        let mut cfg: SimConfig = text.parse()?;
        if !has_seed {
            cfg.params.seed = default_seed;
        }
        Ok(cfg)
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Validation(format!("'{key}': cannot parse '{value}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_num(key, s)).collect()
}

impl FromStr for SimConfig {
    type Err = Error;

    /// Flat `key = value` lines; `#` starts a comment. Keys:
    /// `graph` (complete | ring | erdos_renyi | two_cliques | custom), `n`,
    /// `p`, `clique_a`, `clique_b`, `bridges`, `edges` (`i-j:w, ...`),
    /// `vocab_size`, `dim`, `steps`, `sample_interval`, `utterance_length`,
    /// `beta`, `eta`, `init` (independent | shared_perturbed), `sigma`,
    /// `seed`, `track_pairs`, `checkpoints` (comma list), `snapshot_top_n`,
    /// `snapshot_max_dim`, `snapshot_max_eps`.
    fn from_str(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("line {}: expected key = value", lineno + 1)))?;
            if kv.insert(k.trim().to_owned(), v.trim().to_owned()).is_some() {
                return Err(Error::Validation(format!("line {}: duplicate key '{}'", lineno + 1, k.trim())));
            }
        }
        let mut take = |key: &str| kv.remove(key);
        let mut cfg = SimConfig::default();
        let p = &mut cfg.params;

        let graph = take("graph").unwrap_or_else(|| "complete".into());
        let n = take("n").map(|v| parse_num("n", &v)).transpose()?;
        let need_n = || n.ok_or_else(|| Error::Validation(format!("graph '{graph}' needs n")));
        cfg.graph = match graph.as_str() {
            "complete" => GraphSpec::Complete { n: n.unwrap_or(20) },
            "ring" => GraphSpec::Ring { n: need_n()? },
            "erdos_renyi" => {
                let pr = take("p").ok_or_else(|| Error::Validation("erdos_renyi needs p".into()))?;
                GraphSpec::ErdosRenyi { n: need_n()?, p: parse_num("p", &pr)? }
            }
            "two_cliques" => GraphSpec::TwoCliques {
                a: take("clique_a").map(|v| parse_num("clique_a", &v)).transpose()?.unwrap_or(10),
                b: take("clique_b").map(|v| parse_num("clique_b", &v)).transpose()?.unwrap_or(10),
                bridges: take("bridges").map(|v| parse_num("bridges", &v)).transpose()?.unwrap_or(1),
            },
            "custom" => {
                let spec = take("edges").ok_or_else(|| Error::Validation("custom graph needs edges".into()))?;
                let mut edges = Vec::new();
                for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (pair, w) = item.split_once(':').unwrap_or((item, "1"));
                    let (i, j) = pair
                        .split_once('-')
                        .ok_or_else(|| Error::Validation(format!("edge '{item}' is not i-j[:w]")))?;
                    edges.push((parse_num("edges", i.trim())?, parse_num("edges", j.trim())?, parse_num("edges", w.trim())?));
                }
                GraphSpec::Custom { n: need_n()?, edges }
            }
            other => return Err(Error::Validation(format!("unknown graph '{other}'"))),
        };

        macro_rules! field {
            ($key:literal, $slot:expr) => {
                if let Some(v) = take($key) {
                    $slot = parse_num($key, &v)?;
                }
            };
        }
        field!("vocab_size", p.vocab_size);
        field!("dim", p.dim);
        field!("steps", p.steps);
        field!("sample_interval", p.sample_interval);
        field!("utterance_length", p.utterance_length);
        field!("beta", p.beta);
        field!("eta", p.eta);
        field!("seed", p.seed);
        field!("track_pairs", p.track_pairs);
        let sigma: f64 = take("sigma").map(|v| parse_num("sigma", &v)).transpose()?.unwrap_or(0.0);
        p.init = match take("init").as_deref() {
            None | Some("independent") => InitScheme::Independent,
            Some("shared_perturbed") => InitScheme::SharedPerturbed { sigma },
            Some(other) => return Err(Error::Validation(format!("unknown init '{other}'"))),
        };
        if let Some(v) = take("checkpoints") {
            cfg.checkpoints = parse_list("checkpoints", &v)?;
        }
        field!("snapshot_top_n", cfg.snapshot_top_n);
        field!("snapshot_max_dim", cfg.snapshot_max_dim);
        field!("snapshot_max_eps", cfg.snapshot_max_eps);

        if let Some(unknown) = kv.keys().next() {
            return Err(Error::Validation(format!("unknown key '{unknown}'")));
        }
        cfg.params.validate().map_err(|e| Error::Validation(e.to_string()))?;
        if cfg.checkpoints.iter().any(|&c| c > cfg.params.steps) {
            return Err(Error::Validation("checkpoint beyond the last step".into()));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimParams {
        SimParams { vocab_size: 12, dim: 4, steps: 300, sample_interval: 50, utterance_length: 3, ..SimParams::default() }
    }

    #[test]
    fn graph_shapes() {
        let g = make_graph(&GraphSpec::Complete { n: 4 }, 0).unwrap();
        assert_eq!(g.edges().len(), 6);
        let g = make_graph(&GraphSpec::Ring { n: 5 }, 0).unwrap();
        assert_eq!(g.edges().len(), 5);
        assert!((0..5).all(|v| g.degree(v) == 2));
        let g = make_graph(&GraphSpec::TwoCliques { a: 5, b: 5, bridges: 1 }, 0).unwrap();
        assert_eq!(g.edges().len(), 21);
        assert!(g.is_connected());
        let g = make_graph(&GraphSpec::TwoCliques { a: 3, b: 4, bridges: 12 }, 0).unwrap();
        assert_eq!(g.edges().len(), 3 + 6 + 12);
        let g = make_graph(&GraphSpec::TwoCliques { a: 10, b: 10, bridges: 0 }, 0).unwrap();
        assert_eq!(g.components().len(), 2);
    }

    #[test]
    fn erdos_renyi_is_connected_and_seeded() {
        let spec = GraphSpec::ErdosRenyi { n: 12, p: 0.3 };
        let a = make_graph(&spec, 7).unwrap();
        assert!(a.is_connected());
        assert_eq!(a, make_graph(&spec, 7).unwrap());
        assert!(matches!(make_graph(&GraphSpec::ErdosRenyi { n: 40, p: 0.001 }, 1), Err(Error::Generation(_))));
    }

    #[test]
    fn graph_validation() {
        assert!(PopulationGraph::new(3, vec![(0, 0, 1.0)], "x").is_err());
        assert!(PopulationGraph::new(3, vec![(0, 1, 1.0), (1, 0, 2.0)], "x").is_err());
        assert!(PopulationGraph::new(3, vec![(0, 3, 1.0)], "x").is_err());
        assert!(PopulationGraph::new(3, vec![(0, 1, 0.0)], "x").is_err());
    }

    #[test]
    fn init_schemes() {
        let g = make_graph(&GraphSpec::Complete { n: 3 }, 0).unwrap();
        let shared = SimParams { init: InitScheme::SharedPerturbed { sigma: 0.0 }, ..small() };
        let pop = init_population(&g, &shared).unwrap();
        assert!(pop.iter().all(|l| l.representation == pop[0].representation));
        let pop = init_population(&g, &small()).unwrap();
        assert_ne!(pop[0].representation, pop[1].representation);
        for l in &pop {
            for r in 0..l.representation.rows() {
                assert!((norm(l.representation.row(r)) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_eta_freezes_population() {
        let g = make_graph(&GraphSpec::Complete { n: 4 }, 0).unwrap();
        let p = SimParams { eta: 0.0, ..small() };
        let mut sim = Simulation::new(&g, &p).unwrap();
        let before = sim.population().to_vec();
        for _ in 0..200 {
            sim.advance();
        }
        assert_eq!(sim.population(), &before[..]);
    }

    #[test]
    fn identical_learners_stay_identical() {
        let g = make_graph(&GraphSpec::Complete { n: 3 }, 0).unwrap();
        let p = SimParams { init: InitScheme::SharedPerturbed { sigma: 0.0 }, ..small() };
        let (series, events) = simulate(&g, &p).unwrap();
        assert!(series.mean_distance.iter().all(|&d| d == 0.0));
        assert_eq!(events.len(), p.steps);
        assert_eq!(series.steps, vec![0, 50, 100, 150, 200, 250, 300]);
    }

    #[test]
    fn utterances_are_distinct_and_skip_topic() {
        let g = make_graph(&GraphSpec::Complete { n: 2 }, 0).unwrap();
        let pop = init_population(&g, &small()).unwrap();
        let mut rng = stream(3, "test", 0);
        for topic in 0..12 {
            let words = sample_utterance(&pop[0].representation, topic, 5, 5.0, &mut rng);
            assert_eq!(words.len(), 5);
            assert!(!words.contains(&topic));
            let mut sorted = words.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 5);
        }
    }

    #[test]
    fn rows_stay_unit_and_deterministic() {
        let g = make_graph(&GraphSpec::Ring { n: 5 }, 0).unwrap();
        let p = SimParams { eta: 0.5, ..small() };
        let mut a = Simulation::new(&g, &p).unwrap();
        let mut b = Simulation::new(&g, &p).unwrap();
        for _ in 0..500 {
            assert_eq!(a.advance(), b.advance());
        }
        for l in a.population() {
            for r in 0..l.representation.rows() {
                assert!((norm(l.representation.row(r)) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn config_parsing() {
        let cfg: SimConfig = "graph = two_cliques\nclique_a = 4\nclique_b = 3\nbridges = 0\n# comment\nsteps = 10\n\
                              init = shared_perturbed\nsigma = 0.1\ncheckpoints = 5, 10\n"
            .parse()
            .unwrap();
        assert_eq!(cfg.graph, GraphSpec::TwoCliques { a: 4, b: 3, bridges: 0 });
        assert_eq!(cfg.params.steps, 10);
        assert_eq!(cfg.params.init, InitScheme::SharedPerturbed { sigma: 0.1 });
        assert_eq!(cfg.checkpoints, vec![5, 10]);
        let custom: SimConfig = "graph = custom\nn = 3\nedges = 0-1:2.0, 1-2\n".parse().unwrap();
        assert_eq!(custom.graph, GraphSpec::Custom { n: 3, edges: vec![(0, 1, 2.0), (1, 2, 1.0)] });
        assert!("bogus = 1".parse::<SimConfig>().unwrap_err().is_validation());
        assert!("graph = ring".parse::<SimConfig>().is_err());
        assert!("steps = ten".parse::<SimConfig>().is_err());
        assert!("eta = 2".parse::<SimConfig>().is_err());
        assert_eq!(SimConfig::parse("steps = 10\n", 99).unwrap().params.seed, 99);
        assert_eq!(SimConfig::parse("seed = 3 # own\nsteps = 10\n", 99).unwrap().params.seed, 3);
    }

    #[test]
    fn snapshots() {
        let g = make_graph(&GraphSpec::Complete { n: 3 }, 0).unwrap();
        let pop = init_population(&g, &small()).unwrap();
        let diagrams = snapshot_diagrams(&pop, 12, 1, 1.0).unwrap();
        assert_eq!(diagrams.len(), 3);
        assert_eq!(diagrams[0].intervals(0).len(), 12);
    }
}
