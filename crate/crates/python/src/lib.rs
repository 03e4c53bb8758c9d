//! Python bindings: persistence diagrams, diagram distances, embeddings,
//! t-SNE, the echo-chamber simulator and manifest-driven experiment runs.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use creodrift::corpus::{self, Corpus, Document};
use creodrift::diagram_distance::{bottleneck_distance, wasserstein_distance};
use creodrift::echochamber::{make_graph, simulate as run_simulation, SimConfig};
use creodrift::embedding::{self, Metric, PointCloud, TrainParams};
use creodrift::matrix::Matrix;
use creodrift::pipeline::{self, Experiment, RunOptions};
use creodrift::projection::{self, TsneParams};
use creodrift::topology::{
    betti_numbers, build_vr_filtration, compute_persistence, pairwise_distances, DistanceMatrix, PersistenceDiagram,
};
use creodrift::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Validation(_)
        | Error::InvalidInput(_)
        | Error::Incomparable { .. }
        | Error::IncomparablePairs(_)
        | Error::EmptyVocabulary { .. }
        | Error::EmptyCorpus => PyValueError::new_err(e.to_string()),
        other if other.is_validation() => PyValueError::new_err(other.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn square(rows: &[Vec<f64>]) -> PyResult<(usize, Vec<f64>)> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("distance matrix must be square"));
    }
    Ok((n, rows.concat()))
}

fn dense(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("ragged point rows"));
    }
    Ok(Matrix::from_rows(rows))
}

/// A persistence diagram: `(dim, birth, death)` bars, `death = inf` for
/// classes alive at `max_eps`.
#[pyclass(name = "Diagram", module = "creodrift", frozen)]
struct PyDiagram(PersistenceDiagram);

#[pymethods]
impl PyDiagram {
    /// Bars with positive persistence, optionally of one dimension only.
    #[pyo3(signature = (dim=None))]
    fn pairs(&self, dim: Option<usize>) -> Vec<(usize, f64, f64)> {
        self.0.pairs().filter(|p| dim.is_none_or(|d| p.dim == d)).map(|p| (p.dim, p.birth, p.death)).collect()
    }

    /// Vertex indices of each bar's representative cycle, aligned with `pairs(dim)`.
    #[pyo3(signature = (dim=None))]
    fn generators(&self, dim: Option<usize>) -> Vec<Option<Vec<usize>>> {
        self.0
            .pairs()
            .filter(|p| dim.is_none_or(|d| p.dim == d))
            .map(|p| p.generator.as_deref().map(creodrift::topology::generator_vertices))
            .collect()
    }

    fn betti(&self, eps: f64) -> PyResult<Vec<usize>> {
        betti_numbers(&self.0, eps).map_err(to_py)
    }

    #[getter]
    fn max_dim(&self) -> usize {
        self.0.max_dim()
    }

    #[getter]
    fn max_eps(&self) -> f64 {
        self.0.max_eps()
    }

    fn __len__(&self) -> usize {
        self.0.pairs().count()
    }

    fn __repr__(&self) -> String {
        format!("Diagram(bars={}, max_dim={}, max_eps={})", self.__len__(), self.0.max_dim(), self.0.max_eps())
    }
}

/// Vietoris-Rips persistence of a point cloud (`metric` is "euclidean" or
/// "angular"; angular rows are normalized first).
#[pyfunction]
#[pyo3(signature = (points, max_dim=1, max_eps=1.0, metric="euclidean"))]
fn persistence(points: Vec<Vec<f64>>, max_dim: usize, max_eps: f64, metric: &str) -> PyResult<PyDiagram> {
    let metric: Metric = metric.parse().map_err(to_py)?;
    let labels = (0..points.len()).map(|i| i.to_string()).collect();
    let cloud = PointCloud::normalized(labels, dense(&points)?, metric).map_err(to_py)?;
    let dm = pairwise_distances(&cloud).map_err(to_py)?;
    let filtration = build_vr_filtration(&dm, max_dim, max_eps).map_err(to_py)?;
    Ok(PyDiagram(compute_persistence(&filtration)))
}

/// Vietoris-Rips persistence of a symmetric distance matrix.
#[pyfunction]
#[pyo3(signature = (distances, max_dim=1, max_eps=1.0))]
fn persistence_from_distances(distances: Vec<Vec<f64>>, max_dim: usize, max_eps: f64) -> PyResult<PyDiagram> {
    let (n, entries) = square(&distances)?;
    let dm = DistanceMatrix::new(n, entries).map_err(to_py)?;
    let filtration = build_vr_filtration(&dm, max_dim, max_eps).map_err(to_py)?;
    Ok(PyDiagram(compute_persistence(&filtration)))
}

#[pyfunction]
fn bottleneck(a: &PyDiagram, b: &PyDiagram, dim: usize) -> PyResult<f64> {
    bottleneck_distance(&a.0, &b.0, dim).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (a, b, dim, q=2.0))]
fn wasserstein(a: &PyDiagram, b: &PyDiagram, dim: usize, q: f64) -> PyResult<f64> {
    wasserstein_distance(&a.0, &b.0, dim, q).map_err(to_py)
}

/// A skip-gram embedding model.
#[pyclass(name = "EmbeddingModel", module = "creodrift", frozen)]
struct PyModel(embedding::EmbeddingModel);

fn corpus_of(documents: Vec<Vec<String>>, offset: i64) -> Corpus {
    Corpus::new(
        documents
            .into_iter()
            .enumerate()
            .map(|(i, tokens)| Document {
                author: String::new(),
                timestamp: offset + i as i64,
                community: String::new(),
                tokens,
            })
            .collect(),
    )
}

#[pymethods]
impl PyModel {
    /// Words by descending count.
    #[getter]
    fn vocab(&self) -> Vec<String> {
        self.0.vocab().words().to_vec()
    }

    #[getter]
    fn generation(&self) -> u32 {
        self.0.generation()
    }

    fn vector(&self, word: &str) -> Option<Vec<f64>> {
        self.0.vector(word).map(<[f64]>::to_vec)
    }

    /// `(labels, rows)` of the `top_n` most frequent words.
    #[pyo3(signature = (top_n, metric="angular"))]
    fn point_cloud(&self, top_n: usize, metric: &str) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
        let metric: Metric = metric.parse().map_err(to_py)?;
        let (cloud, _) = embedding::point_cloud(&self.0, top_n, metric).map_err(to_py)?;
        let rows = (0..cloud.len()).map(|r| cloud.points().row(r).to_vec()).collect();
        Ok((cloud.labels().to_vec(), rows))
    }

    /// Continues training on a further window of tokenized documents.
    fn update(&self, documents: Vec<Vec<String>>) -> PyResult<PyModel> {
        let corpus = corpus_of(documents, 0);
        embedding::train_incremental(&self.0, &corpus).map(PyModel).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("EmbeddingModel(vocab={}, dim={}, generation={})", self.0.vocab().len(), self.0.params().dim, self.0.generation())
    }
}

/// Trains skip-gram with negative sampling on tokenized documents.
#[pyfunction]
#[pyo3(signature = (documents, dim=64, window=5, negatives=5, epochs=5, min_count=5, learning_rate=0.025, seed=0))]
#[allow(clippy::too_many_arguments)]
fn train(
    documents: Vec<Vec<String>>,
    dim: usize,
    window: usize,
    negatives: usize,
    epochs: usize,
    min_count: u64,
    learning_rate: f64,
    seed: u64,
) -> PyResult<PyModel> {
    let params =
        TrainParams { dim, window, negatives, epochs, min_count, learning_rate, seed, ..TrainParams::default() };
    embedding::train_skipgram(&corpus_of(documents, 0), &params).map(PyModel).map_err(to_py)
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    corpus::tokenize(text)
}

/// Exact t-SNE of a labeled distance matrix; returns one `(x, y)` per label.
#[pyfunction]
#[pyo3(signature = (labels, distances, perplexity=10.0, iterations=1000, seed=0))]
fn tsne(
    labels: Vec<String>,
    distances: Vec<Vec<f64>>,
    perplexity: f64,
    iterations: usize,
    seed: u64,
) -> PyResult<Vec<(f64, f64)>> {
    let (_, entries) = square(&distances)?;
    let params = TsneParams { perplexity, iterations, seed, ..TsneParams::default() };
    let proj = projection::tsne(&labels, &entries, &params).map_err(to_py)?;
    Ok((0..labels.len()).map(|i| (proj.coords.row(i)[0], proj.coords.row(i)[1])).collect())
}

/// Runs the echo-chamber simulation described by a `key = value` config.
/// Returns `{"steps", "mean_distance", "events"}`.
#[pyfunction]
#[pyo3(signature = (config, seed=0))]
fn simulate<'py>(py: Python<'py>, config: &str, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let cfg = SimConfig::parse(config, seed).map_err(to_py)?;
    let graph = make_graph(&cfg.graph, cfg.params.seed).map_err(to_py)?;
    let (series, events) = run_simulation(&graph, &cfg.params).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("steps", series.steps)?;
    out.set_item("mean_distance", series.mean_distance)?;
    out.set_item("events", events.len())?;
    Ok(out)
}

/// Runs an experiment from a manifest and returns its provenance record.
#[pyfunction]
#[pyo3(signature = (experiment, manifest, out=None, seed=None, stage=None))]
fn run<'py>(
    py: Python<'py>,
    experiment: &str,
    manifest: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    stage: Option<String>,
) -> PyResult<Bound<'py, PyAny>> {
    let experiment: Experiment = experiment.parse().map_err(to_py)?;
    let opts = RunOptions { out, seed, stage };
    let record = pipeline::run(experiment, &manifest, &opts).map_err(to_py)?;
    let json = serde_json::to_string(&record).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (json,))
}

#[pymodule]
#[pyo3(name = "creodrift")]
fn creodrift_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDiagram>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(persistence, m)?)?;
    m.add_function(wrap_pyfunction!(persistence_from_distances, m)?)?;
    m.add_function(wrap_pyfunction!(bottleneck, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(tsne, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
