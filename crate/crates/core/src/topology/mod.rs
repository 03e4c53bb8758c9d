//! Vietoris-Rips persistent homology over the two-element field.

pub mod filtration;
pub mod persistence;

use std::collections::BTreeSet;
use std::io::{Read, Write};

pub use filtration::{
    build_vr_filtration, build_vr_filtration_with_budget, pairwise_distances, DistanceMatrix, Filtration, Simplex,
    DEFAULT_SIMPLEX_BUDGET,
};
pub use persistence::{
    compute_persistence, compute_persistence_with, PersistenceDiagram, PersistenceOptions, PersistencePair,
};

use crate::embedding::PointCloud;
use crate::error::{Error, Result};

/// Default homology dimension cap.
pub const DEFAULT_MAX_DIM: usize = 2;

/// `β_k(eps)` for `k = 0..=max_dim`: bars of dimension `k` with
/// `birth ≤ eps < death`.
pub fn betti_numbers(diag: &PersistenceDiagram, eps: f64) -> Result<Vec<usize>> {
    if !(0.0..=diag.max_eps()).contains(&eps) {
        return Err(Error::invalid(format!("eps = {eps} outside [0, {}]", diag.max_eps())));
    }
    let mut betti = vec![0; diag.max_dim() + 1];
    for p in diag.pairs() {
        if p.birth <= eps && eps < p.death && p.dim < betti.len() {
            betti[p.dim] += 1;
        }
    }
    Ok(betti)
}

fn format_value(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_owned()
    } else {
        format!("{x:?}")
    }
}

fn parse_value(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>().map_err(|e| Error::format("barcode csv", format!("'{s}': {e}")))
}

/// Writes the default view as `dim,birth,death` rows, `inf` for open bars.
pub fn export_barcode<W: Write>(diag: &PersistenceDiagram, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dim", "birth", "death"])?;
    for p in diag.pairs() {
        w.write_record([p.dim.to_string(), format_value(p.birth), format_value(p.death)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn import_barcode<R: Read>(input: R, max_dim: usize, max_eps: f64) -> Result<PersistenceDiagram> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    if header != ["dim", "birth", "death"] {
        return Err(Error::format("barcode csv", format!("unexpected header {header:?}")));
    }
    let mut pairs = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let dim = rec[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::format("barcode csv", format!("row {line}: {e}")))?;
        let (birth, death) = (parse_value(&rec[1])?, parse_value(&rec[2])?);
        if birth.is_nan() || death.is_nan() || !(birth <= death) {
            return Err(Error::format("barcode csv", format!("row {line}: birth {birth} > death {death}")));
        }
        pairs.push(PersistencePair { dim, birth, death, generator: None });
    }
    Ok(PersistenceDiagram::from_pairs(pairs, max_dim, max_eps))
}

/// Distinct vertices of a generator, ascending.
pub fn generator_vertices(generator: &[Simplex]) -> Vec<usize> {
    let set: BTreeSet<usize> = generator.iter().flat_map(|s| s.vertices.iter().copied()).collect();
    set.into_iter().collect()
}

/// Sidecar to [`export_barcode`]: one `pair_id,dim,words...` row per bar
/// that has a generator, `pair_id` being the bar's row index in the barcode.
pub fn export_generators<W: Write>(diag: &PersistenceDiagram, labels: &[String], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(["pair_id", "dim", "vertex_words"])?;
    for (id, p) in diag.pairs().enumerate() {
        let Some(generator) = &p.generator else { continue };
        let mut rec = vec![id.to_string(), p.dim.to_string()];
        for v in generator_vertices(generator) {
            let word = labels.get(v).ok_or_else(|| Error::invalid(format!("no label for vertex {v}")))?;
            rec.push(word.clone());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Hole {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
    /// Labels of the generator's vertices, in vertex order.
    pub words: Vec<String>,
}

impl Hole {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Bars with persistence at least `min_persistence`, plus every open bar of
/// dimension ≥ 1, each with the words on its representative cycle. Open
/// dimension-0 bars (connected components) are not holes and are left out.
pub fn hole_report(diag: &PersistenceDiagram, min_persistence: f64, cloud: &PointCloud) -> Result<Vec<Hole>> {
    if !diag.has_generators() {
        return Err(Error::Unsupported("hole report needs a diagram computed with generators".into()));
    }
    if min_persistence.is_nan() || min_persistence < 0.0 {
        return Err(Error::invalid(format!("min_persistence = {min_persistence}")));
    }
    let mut holes = Vec::new();
    for p in diag.pairs() {
        let keep = if p.is_infinite() { p.dim >= 1 } else { p.persistence() >= min_persistence };
        if !keep {
            continue;
        }
        let generator = p
            .generator
            .as_ref()
            .ok_or_else(|| Error::Unsupported(format!("bar ({}, {}) has no generator", p.birth, p.death)))?;
        let words = generator_vertices(generator)
            .into_iter()
            .map(|v| {
                cloud.labels().get(v).cloned().ok_or_else(|| Error::invalid(format!("no label for vertex {v}")))
            })
            .collect::<Result<Vec<_>>>()?;
        holes.push(Hole { dim: p.dim, birth: p.birth, death: p.death, words });
    }
    Ok(holes)
}
