//! Skip-gram with negative sampling, incremental continuation across time
//! windows, and point-cloud extraction.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Matrix};
use crate::rng::{self, StreamRng};

/// Floor of the linearly decayed learning rate.
pub const MIN_LEARNING_RATE: f64 = 1e-4;
const NOISE_POWER: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Keeps words with `count >= min_count`, ordered by count descending,
    /// then lexicographically.
    pub fn from_counts<I, S>(counts: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut kept: Vec<(String, u64)> = counts
            .into_iter()
            .map(|(w, c)| (w.into(), c))
            .filter(|(_, c)| *c >= min_count)
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary { min_count: min_count as usize });
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let (words, counts): (Vec<String>, Vec<u64>) = kept.into_iter().unzip();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(Vocabulary { words, counts, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn count_tokens(corpus: &Corpus) -> HashMap<String, u64> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for doc in corpus.documents() {
        for t in &doc.tokens {
            *counts.entry(t.clone()).or_default() += 1;
        }
    }
    counts
}

pub fn build_vocab(corpus: &Corpus, min_count: u64) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Vocabulary::from_counts(count_tokens(corpus), min_count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub subsample_threshold: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            dim: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 5,
            subsample_threshold: 1e-3,
            seed: 0,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::invalid("dim must be at least 2"));
        }
        if self.window < 1 {
            return Err(Error::invalid("window must be at least 1"));
        }
        if self.negatives < 1 {
            return Err(Error::invalid("negatives must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.subsample_threshold >= 0.0) {
            return Err(Error::invalid("subsample_threshold must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    vocab: Vocabulary,
    input: Matrix,
    output: Matrix,
    params: TrainParams,
    /// Number of incremental windows consumed after the initial fit.
    generation: u32,
}

impl EmbeddingModel {
    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn input_vectors(&self) -> &Matrix {
        &self.input
    }

    pub fn output_vectors(&self) -> &Matrix {
        &self.output
    }

    pub fn params(&self) -> &TrainParams {
        &self.params
    }

    pub fn rng_seed(&self) -> u64 {
        self.params.seed
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vocab.get(word).map(|i| self.input.row(i))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x)` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

/// d(loss)/d(score) for one target: `σ(s) - label`.
#[inline]
fn target_coefficient(score: f64, label: f64) -> f64 {
    sigmoid(score) - label
}

/// Loss of one (center, context) pair with its negative samples:
/// `-log σ(u_o·v_c) - Σ log σ(-u_n·v_c)`.
pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    -log_sigmoid(dot(context, center))
        - negatives.iter().map(|u| log_sigmoid(-dot(u, center))).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`sgns_loss`] with respect to every vector involved.
pub fn sgns_gradient(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> SgnsGradient {
    let mut g_center = vec![0.0; center.len()];
    let mut targets: Vec<(&[f64], f64)> = vec![(context, 1.0)];
    targets.extend(negatives.iter().map(|u| (*u, 0.0)));
    let mut per_target = Vec::with_capacity(targets.len());
    for (u, label) in targets {
        let g = target_coefficient(dot(u, center), label);
        for (acc, x) in g_center.iter_mut().zip(u) {
            *acc += g * x;
        }
        per_target.push(center.iter().map(|x| g * x).collect::<Vec<_>>());
    }
    let context_grad = per_target.remove(0);
    SgnsGradient { center: g_center, context: context_grad, negatives: per_target }
}

/// One SGD step on a single (center, context) pair; the update is
/// `-lr` times [`sgns_gradient`].
fn sgns_step(
    input: &mut Matrix,
    output: &mut Matrix,
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: f64,
    scratch: &mut [f64],
) {
    scratch.iter_mut().for_each(|x| *x = 0.0);
    let v = input.row(center).to_vec();
    let targets = std::iter::once((context, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
    for (t, label) in targets {
        let u = output.row(t);
        let g = target_coefficient(dot(u, &v), label);
        for (acc, x) in scratch.iter_mut().zip(u) {
            *acc += g * x;
        }
        let step = lr * g;
        for (ui, vi) in output.row_mut(t).iter_mut().zip(&v) {
            *ui -= step * vi;
        }
    }
    for (vi, gi) in input.row_mut(center).iter_mut().zip(scratch.iter()) {
        *vi -= lr * gi;
    }
}

fn init_input_row(rng: &mut StreamRng, dim: usize) -> Vec<f64> {
    let half = 0.5 / dim as f64;
    (0..dim).map(|_| rng.random_range(-half..=half)).collect()
}

/// Runs `params.epochs` passes over `corpus`. Returns the number of pairs
/// trained; zero means the model was left untouched.
fn train_on(model: &mut EmbeddingModel, corpus: &Corpus, rng: &mut StreamRng) -> usize {
    let sentences: Vec<Vec<usize>> = corpus
        .documents()
        .iter()
        .map(|d| d.tokens.iter().filter_map(|t| model.vocab.get(t)).collect::<Vec<_>>())
        .filter(|s: &Vec<usize>| s.len() >= 2)
        .collect();
    if sentences.is_empty() {
        return 0;
    }
    let params = model.params.clone();
    let weights: Vec<f64> = model.vocab.counts.iter().map(|&c| (c as f64).powf(NOISE_POWER)).collect();
    let noise = WeightedIndex::new(&weights).expect("vocabulary counts are positive");
    let total_count = model.vocab.total() as f64;
    let keep_prob: Vec<f64> = model
        .vocab
        .counts
        .iter()
        .map(|&c| {
            let t = params.subsample_threshold;
            if t <= 0.0 {
                return 1.0;
            }
            let f = c as f64 / total_count;
            (((f / t).sqrt() + 1.0) * t / f).min(1.0)
        })
        .collect();

    let words_per_epoch: usize = sentences.iter().map(Vec::len).sum();
    let planned = (words_per_epoch * params.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut pairs = 0usize;
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut scratch = vec![0.0; params.dim];
    let mut negs = Vec::with_capacity(params.negatives);
    let mut kept = Vec::new();

    for _ in 0..params.epochs {
        order.shuffle(rng);
        for &si in &order {
            let sentence = &sentences[si];
            kept.clear();
            kept.extend(sentence.iter().copied().filter(|&w| rng.random::<f64>() < keep_prob[w]));
            let lr = (params.learning_rate
                - (params.learning_rate - MIN_LEARNING_RATE) * processed as f64 / planned)
                .max(MIN_LEARNING_RATE);
            processed += sentence.len();
            for i in 0..kept.len() {
                let reach = rng.random_range(1..=params.window);
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(kept.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let (center, context) = (kept[i], kept[j]);
                    negs.clear();
                    for _ in 0..params.negatives {
                        let n = noise.sample(rng);
                        if n != context {
                            negs.push(n);
                        }
                    }
                    sgns_step(&mut model.input, &mut model.output, center, context, &negs, lr, &mut scratch);
                    pairs += 1;
                }
            }
        }
    }
    pairs
}

/// Fits a fresh model on `corpus`. Deterministic given `params.seed`.
pub fn train_skipgram(corpus: &Corpus, params: &TrainParams) -> Result<EmbeddingModel> {
    params.validate()?;
    let vocab = build_vocab(corpus, params.min_count)?;
    let mut init = rng::stream(params.seed, "embedding-init", 0);
    let mut input = Matrix::zeros(0, params.dim);
    for _ in 0..vocab.len() {
        input.push_row(&init_input_row(&mut init, params.dim));
    }
    let output = Matrix::zeros(vocab.len(), params.dim);
    let mut model = EmbeddingModel { vocab, input, output, params: params.clone(), generation: 0 };
    let mut train = rng::stream(params.seed, "embedding-train", 0);
    train_on(&mut model, corpus, &mut train);
    Ok(model)
}

/// Continues training on the next time window, warm-starting from `model`.
/// Words reaching `min_count` within `next_corpus` join the vocabulary;
/// counts accumulate across windows.
pub fn train_incremental(model: &EmbeddingModel, next_corpus: &Corpus) -> Result<EmbeddingModel> {
    if next_corpus.is_empty() {
        return Ok(model.clone());
    }
    let params = model.params.clone();
    let generation = model.generation + 1;
    let window_counts = count_tokens(next_corpus);

    let mut merged: Vec<(String, u64)> = model
        .vocab
        .words
        .iter()
        .zip(&model.vocab.counts)
        .map(|(w, &c)| (w.clone(), c + window_counts.get(w).copied().unwrap_or(0)))
        .collect();
    let mut fresh: Vec<(&String, u64)> = window_counts
        .iter()
        .filter(|(w, &c)| c >= params.min_count && model.vocab.get(w).is_none())
        .map(|(w, &c)| (w, c))
        .collect();
    fresh.sort();

    let mut input = model.input.clone();
    let mut output = model.output.clone();
    let mut init = rng::stream(params.seed, "embedding-init", u64::from(generation));
    for (w, c) in fresh {
        merged.push((w.clone(), c));
        input.push_row(&init_input_row(&mut init, params.dim));
        output.push_row(&vec![0.0; params.dim]);
    }

    let vocab = Vocabulary::from_counts(merged.iter().cloned(), 0)?;
    let order: Vec<usize> = {
        let position: HashMap<&str, usize> =
            merged.iter().enumerate().map(|(i, (w, _))| (w.as_str(), i)).collect();
        vocab.words.iter().map(|w| position[w.as_str()]).collect()
    };
    let mut next = EmbeddingModel {
        vocab,
        input: input.select_rows(&order),
        output: output.select_rows(&order),
        params,
        generation,
    };
    let mut train = rng::stream(next.params.seed, "embedding-train", u64::from(generation));
    train_on(&mut next, next_corpus, &mut train);
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Angular,
    Euclidean,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "angular" => Ok(Metric::Angular),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(Error::invalid(format!("unknown metric '{other}'"))),
        }
    }
}

/// Labeled points; rows are unit length when the metric is angular.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    labels: Vec<String>,
    points: Matrix,
    metric: Metric,
}

impl PointCloud {
    pub fn new(labels: Vec<String>, points: Matrix, metric: Metric) -> Result<Self> {
        if labels.len() != points.rows() {
            return Err(Error::invalid(format!(
                "{} labels for {} points",
                labels.len(),
                points.rows()
            )));
        }
        if !points.is_finite() {
            return Err(Error::invalid("point cloud has non-finite coordinates"));
        }
        if metric == Metric::Angular {
            for i in 0..points.rows() {
                let n = norm(points.row(i));
                if (n - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(format!(
                        "row {i} has norm {n}; angular clouds need unit rows"
                    )));
                }
            }
        }
        Ok(PointCloud { labels, points, metric })
    }

    /// Like [`PointCloud::new`], but L2-normalizes rows first when the metric
    /// is angular.
    pub fn normalized(labels: Vec<String>, mut points: Matrix, metric: Metric) -> Result<Self> {
        if metric == Metric::Angular {
            for i in 0..points.rows() {
                let row = points.row_mut(i);
                let n = norm(row);
                if !(n > 0.0 && n.is_finite()) {
                    return Err(Error::invalid(format!("row {i} cannot be normalized")));
                }
                row.iter_mut().for_each(|x| *x /= n);
            }
        }
        PointCloud::new(labels, points, metric)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    /// CSV with header `word,x1,...,xd`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["word".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for (i, label) in self.labels.iter().enumerate() {
            let mut rec = vec![label.clone()];
            rec.extend(self.points.row(i).iter().map(|x| format!("{x:?}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, metric: Metric) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let mut fields = rec.iter();
            let label = fields.next().ok_or_else(|| Error::format("point cloud", "empty row"))?;
            let coords = fields
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::format("point cloud", e.to_string()))?;
            labels.push(label.to_string());
            rows.push(coords);
        }
        if rows.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(Error::format("point cloud", "rows have different lengths"));
        }
        PointCloud::normalized(labels, Matrix::from_rows(&rows), metric)
    }
}

/// The `top_n` most frequent words' input vectors. The flag is set when
/// `top_n` exceeded the vocabulary and was clamped.
pub fn point_cloud(model: &EmbeddingModel, top_n: usize, metric: Metric) -> Result<(PointCloud, bool)> {
    if top_n < 2 {
        return Err(Error::invalid("top_n must be at least 2"));
    }
    let clamped = top_n > model.vocab.len();
    let n = top_n.min(model.vocab.len());
    let order: Vec<usize> = (0..n).collect();
    let cloud = PointCloud::normalized(
        model.vocab.words[..n].to_vec(),
        model.input.select_rows(&order),
        metric,
    )?;
    Ok((cloud, clamped))
}

const MAGIC: &[u8; 8] = b"CREO-EMB";
const FORMAT_VERSION: u32 = 1;

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn get<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(get(r)?))
}

fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(get(r)?))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(get(r)?))
}

/// Binary model file: header, vocabulary block, then the input and output
/// matrices as row-major little-endian `f64`.
pub fn write_model<W: Write>(model: &EmbeddingModel, mut w: W) -> Result<()> {
    let p = &model.params;
    w.write_all(MAGIC)?;
    put_u32(&mut w, FORMAT_VERSION)?;
    put_u64(&mut w, model.vocab.len() as u64)?;
    put_u64(&mut w, p.dim as u64)?;
    put_u64(&mut w, p.seed)?;
    put_u32(&mut w, p.window as u32)?;
    put_u32(&mut w, p.negatives as u32)?;
    put_u32(&mut w, p.epochs as u32)?;
    put_f64(&mut w, p.learning_rate)?;
    put_u64(&mut w, p.min_count)?;
    put_f64(&mut w, p.subsample_threshold)?;
    put_u32(&mut w, model.generation)?;
    for (word, &count) in model.vocab.words.iter().zip(&model.vocab.counts) {
        put_u32(&mut w, word.len() as u32)?;
        w.write_all(word.as_bytes())?;
        put_u64(&mut w, count)?;
    }
    for m in [&model.input, &model.output] {
        for &x in m.as_slice() {
            put_f64(&mut w, x)?;
        }
    }
    Ok(())
}

pub fn read_model<R: Read>(mut r: R) -> Result<EmbeddingModel> {
    let magic: [u8; 8] = get(&mut r)?;
    if &magic != MAGIC {
        return Err(Error::format("model file", "bad magic"));
    }
    let version = get_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(Error::format("model file", format!("unsupported version {version}")));
    }
    let n = get_u64(&mut r)? as usize;
    let dim = get_u64(&mut r)? as usize;
    let params = TrainParams {
        seed: get_u64(&mut r)?,
        window: get_u32(&mut r)? as usize,
        negatives: get_u32(&mut r)? as usize,
        epochs: get_u32(&mut r)? as usize,
        learning_rate: get_f64(&mut r)?,
        min_count: get_u64(&mut r)?,
        subsample_threshold: get_f64(&mut r)?,
        dim,
    };
    let generation = get_u32(&mut r)?;
    let mut counts = Vec::with_capacity(n);
    for _ in 0..n {
        let len = get_u32(&mut r)? as usize;
        let mut bytes = vec![0u8; len];
        r.read_exact(&mut bytes)?;
        let word = String::from_utf8(bytes).map_err(|e| Error::format("model file", e.to_string()))?;
        counts.push((word, get_u64(&mut r)?));
    }
    let vocab = Vocabulary::from_counts(counts.iter().cloned(), 0)?;
    if vocab.words.iter().zip(&counts).any(|(a, (b, _))| a != b) {
        return Err(Error::format("model file", "vocabulary block is not in canonical order"));
    }
    let mut read_matrix = || -> Result<Matrix> {
        let data = (0..n * dim).map(|_| get_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        Ok(Matrix::from_vec(n, dim, data))
    };
    let input = read_matrix()?;
    let output = read_matrix()?;
    Ok(EmbeddingModel { vocab, input, output, params, generation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn corpus_of(sentences: &[&str]) -> Corpus {
        Corpus::new(
            sentences
                .iter()
                .enumerate()
                .map(|(i, s)| Document {
                    author: "a".into(),
                    timestamp: i as i64,
                    community: "c".into(),
                    tokens: s.split_whitespace().map(str::to_owned).collect(),
                })
                .collect(),
        )
    }

    fn small_params(seed: u64) -> TrainParams {
        TrainParams { dim: 8, window: 2, negatives: 3, epochs: 3, min_count: 1, seed, ..TrainParams::default() }
    }

    #[test]
    fn vocab_ordering_and_threshold() {
        let counts = [("cat", 6), ("dog", 6), ("ant", 1)];
        let v = Vocabulary::from_counts(counts, 5).unwrap();
        assert_eq!(v.words(), ["cat", "dog"]);
        let v = Vocabulary::from_counts(counts, 1).unwrap();
        assert_eq!(v.words(), ["cat", "dog", "ant"]);
        assert_eq!(v.get("ant"), Some(2));
        assert!(matches!(Vocabulary::from_counts(counts, 7), Err(Error::EmptyVocabulary { .. })));
    }

    #[test]
    fn build_vocab_from_corpus() {
        let c = corpus_of(&["cat cat dog", "dog ant cat"]);
        let v = build_vocab(&c, 2).unwrap();
        assert_eq!(v.words(), ["cat", "dog"]);
        assert_eq!(v.counts(), [3, 2]);
        assert!(matches!(build_vocab(&Corpus::default(), 1), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn zero_score_positive_loss_is_ln2() {
        let v = [0.0, 0.0];
        let u = [1.0, 2.0];
        assert!((sgns_loss(&v, &u, &[]) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) + std::f64::consts::LN_2).abs() < 1e-15);
        assert!(log_sigmoid(800.0).abs() < 1e-300);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
    }

    #[test]
    fn step_matches_analytic_gradient() {
        let mut init = rng::stream(3, "t", 0);
        let mut input = Matrix::zeros(0, 4);
        let mut output = Matrix::zeros(0, 4);
        for _ in 0..5 {
            input.push_row(&(0..4).map(|_| init.random_range(-1.0..1.0)).collect::<Vec<_>>());
            output.push_row(&(0..4).map(|_| init.random_range(-1.0..1.0)).collect::<Vec<_>>());
        }
        let (c, o, negs) = (1usize, 3usize, [0usize, 4]);
        let grad = sgns_gradient(
            input.row(c),
            output.row(o),
            &[output.row(negs[0]), output.row(negs[1])],
        );
        let lr = 0.1;
        let (before_in, before_out) = (input.clone(), output.clone());
        let mut scratch = vec![0.0; 4];
        sgns_step(&mut input, &mut output, c, o, &negs, lr, &mut scratch);
        for k in 0..4 {
            assert!((input.row(c)[k] - (before_in.row(c)[k] - lr * grad.center[k])).abs() < 1e-14);
            assert!((output.row(o)[k] - (before_out.row(o)[k] - lr * grad.context[k])).abs() < 1e-14);
            assert!((output.row(0)[k] - (before_out.row(0)[k] - lr * grad.negatives[0][k])).abs() < 1e-14);
        }
    }

    #[test]
    fn training_is_deterministic_and_initialized_as_documented() {
        let c = corpus_of(&["the cat sat on the mat", "the dog sat on the log", "a cat and a dog"]);
        let a = train_skipgram(&c, &small_params(11)).unwrap();
        let b = train_skipgram(&c, &small_params(11)).unwrap();
        assert_eq!(a, b);
        let other = train_skipgram(&c, &small_params(12)).unwrap();
        assert_ne!(a.input_vectors(), other.input_vectors());

        let untrained = TrainParams { epochs: 0, ..small_params(11) };
        let m = train_skipgram(&c, &untrained).unwrap();
        assert!(m.output_vectors().as_slice().iter().all(|&x| x == 0.0));
        let bound = 0.5 / 8.0;
        assert!(m.input_vectors().as_slice().iter().all(|x| x.abs() <= bound));
        assert!(a.input_vectors().is_finite() && a.output_vectors().is_finite());
    }

    #[test]
    fn invalid_params_rejected() {
        let c = corpus_of(&["a b"]);
        for p in [
            TrainParams { dim: 1, ..small_params(0) },
            TrainParams { window: 0, ..small_params(0) },
            TrainParams { negatives: 0, ..small_params(0) },
            TrainParams { learning_rate: 0.0, ..small_params(0) },
        ] {
            assert!(matches!(train_skipgram(&c, &p), Err(Error::InvalidInput(_))));
        }
    }

    #[test]
    fn incremental_empty_window_is_noop() {
        let c = corpus_of(&["the cat sat on the mat"]);
        let m = train_skipgram(&c, &small_params(1)).unwrap();
        assert_eq!(train_incremental(&m, &Corpus::default()).unwrap(), m);
    }

    #[test]
    fn incremental_disjoint_window_grows_vocabulary() {
        let c = corpus_of(&["the cat sat on the mat"]);
        let m = train_skipgram(&c, &small_params(1)).unwrap();
        let next = corpus_of(&["quantum flux capacitor overload imminent"]);
        let m2 = train_incremental(&m, &next).unwrap();
        assert_eq!(m2.vocab().len(), m.vocab().len() + 5);
        assert_eq!(m2.input_vectors().rows(), m2.vocab().len());
        assert!(m2.vector("flux").is_some());
        assert_eq!(m2.generation(), 1);
        // vocabulary order invariant survives the merge
        let counts = m2.vocab().counts();
        assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn incremental_untrainable_window_only_extends_vocab() {
        let c = corpus_of(&["the cat sat on the mat"]);
        let m = train_skipgram(&c, &small_params(1)).unwrap();
        // every document has a single known token: no pairs
        let next = corpus_of(&["cat", "mat"]);
        let m2 = train_incremental(&m, &next).unwrap();
        for w in m.vocab().words() {
            assert_eq!(m.vector(w), m2.vector(w));
        }
    }

    #[test]
    fn point_cloud_selection() {
        let c = corpus_of(&["the cat sat on the mat", "the dog sat on the log"]);
        let m = train_skipgram(&c, &small_params(5)).unwrap();
        let v = m.vocab().len();
        let (all, clamped) = point_cloud(&m, v, Metric::Euclidean).unwrap();
        assert!(!clamped);
        assert_eq!(all.labels(), m.vocab().words());
        assert_eq!(all.points(), m.input_vectors());

        let (ang, _) = point_cloud(&m, 3, Metric::Angular).unwrap();
        assert_eq!(ang.len(), 3);
        for i in 0..3 {
            assert!((norm(ang.points().row(i)) - 1.0).abs() < 1e-12);
        }
        let (big, clamped) = point_cloud(&m, v + 10, Metric::Angular).unwrap();
        assert!(clamped);
        assert_eq!(big.len(), v);
        assert!(point_cloud(&m, 1, Metric::Angular).is_err());
    }

    #[test]
    fn model_file_roundtrip() {
        let c = corpus_of(&["the cat sat on the mat", "the dog sat on the log"]);
        let m = train_skipgram(&c, &small_params(5)).unwrap();
        let m = train_incremental(&m, &corpus_of(&["new words arrive here"])).unwrap();
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        assert_eq!(&buf[..8], b"CREO-EMB");
        assert_eq!(read_model(&buf[..]).unwrap(), m);
        buf[0] = b'X';
        assert!(read_model(&buf[..]).is_err());
    }

    #[test]
    fn cloud_csv_roundtrip() {
        let pts = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.6, 0.8]]);
        let cloud = PointCloud::new(vec!["a".into(), "b".into()], pts, Metric::Angular).unwrap();
        let mut buf = Vec::new();
        cloud.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("word,x1,x2\n"));
        assert_eq!(PointCloud::read_csv(&buf[..], Metric::Angular).unwrap(), cloud);
    }
}
