//! Stage implementations. Artifact layout inside the output directory:
//!
//! - `corpus.jsonl`, `ingest.json` — filtered documents and line counts
//! - `entities.csv` — `id,label,group` for every embedded entity
//! - `clouds/{id}.csv`, `diagrams/{id}.csv` — per-entity cloud and barcode
//! - `windows.csv` — `month,id,label,group,status` for monthly runs, whose
//!   clouds and barcodes live under `clouds/{month}/` and `diagrams/{month}/`

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Context, StageIo};
use crate::corpus::{self, Corpus, IngestStats};
use crate::diagram_distance::{self, DiagramDistanceMatrix, GroupMean, GroupMode};
use crate::echochamber::{self, SimConfig};
use crate::embedding::{self, EmbeddingModel, PointCloud};
use crate::error::{Error, Result};
use crate::projection;
use crate::topology::{self, PersistenceDiagram, PersistenceOptions};

const CORPUS: &str = "corpus.jsonl";
const ENTITIES: &str = "entities.csv";
const WINDOWS: &str = "windows.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Entity {
    id: String,
    label: String,
    group: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum WindowStatus {
    /// Trained on this month's documents.
    Trained,
    /// No documents this month; the previous month's model is reused.
    Carried,
    /// No model yet.
    Absent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WindowRow {
    month: String,
    id: String,
    label: String,
    group: String,
    status: WindowStatus,
}

fn entity_id(i: usize) -> String {
    format!("e{i:03}")
}

fn write_rows<T: Serialize>(io: &mut StageIo, rel: &str, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format("csv", e.to_string()))?;
    io.write(rel, &bytes)
}

fn read_rows<T: for<'de> Deserialize<'de>>(io: &mut StageIo, rel: &str, producer: &str) -> Result<Vec<T>> {
    let bytes = io.read(rel, producer)?;
    let mut r = csv::Reader::from_reader(&bytes[..]);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn load_corpus(io: &mut StageIo) -> Result<Corpus> {
    corpus::read_jsonl(&io.read(CORPUS, "ingest")?[..])
}

fn cloud_path(month: Option<&str>, id: &str) -> String {
    match month {
        Some(m) => format!("clouds/{m}/{id}.csv"),
        None => format!("clouds/{id}.csv"),
    }
}

fn diagram_path(month: Option<&str>, id: &str) -> String {
    match month {
        Some(m) => format!("diagrams/{m}/{id}.csv"),
        None => format!("diagrams/{id}.csv"),
    }
}

fn cloud_bytes(ctx: &Context, model: &EmbeddingModel, label: &str) -> Result<Vec<u8>> {
    let (cloud, clamped) = embedding::point_cloud(model, ctx.manifest.embedding.top_n, ctx.manifest.embedding.metric)?;
    if clamped {
        log::warn!("{label}: vocabulary has only {} words, top_n clamped", cloud.len());
    }
    let mut buf = Vec::new();
    cloud.write_csv(&mut buf)?;
    Ok(buf)
}

fn read_cloud(ctx: &Context, io: &mut StageIo, rel: &str, producer: &str) -> Result<PointCloud> {
    PointCloud::read_csv(&io.read(rel, producer)?[..], ctx.manifest.embedding.metric)
}

fn diagram_of(ctx: &Context, cloud: &PointCloud, generators: bool) -> Result<PersistenceDiagram> {
    let t = &ctx.manifest.topology;
    let dm = topology::pairwise_distances(cloud)?;
    let f = topology::build_vr_filtration_with_budget(&dm, t.max_dim, t.max_eps, t.simplex_budget)?;
    Ok(topology::compute_persistence_with(&f, PersistenceOptions { generators }))
}

fn barcode_bytes(diag: &PersistenceDiagram) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    topology::export_barcode(diag, &mut buf)?;
    Ok(buf)
}

fn read_diagram(ctx: &Context, io: &mut StageIo, rel: &str) -> Result<PersistenceDiagram> {
    let t = &ctx.manifest.topology;
    topology::import_barcode(&io.read(rel, "persistence")?[..], t.max_dim, t.max_eps)
}

// ---------------------------------------------------------------- ingest

#[derive(Serialize)]
struct IngestSummary {
    dumps: Vec<String>,
    stats: IngestStats,
    documents: usize,
    tokens: usize,
    communities: BTreeMap<String, usize>,
}

pub(super) fn ingest(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let filter = ctx.manifest.corpus.filter();
    let mut docs = Vec::new();
    let mut stats = IngestStats::default();
    for dump in &ctx.manifest.inputs.dumps {
        let bytes = io.input(dump)?;
        let ingested = corpus::ingest_jsonl(&bytes[..], &filter)?;
        stats.lines += ingested.stats.lines;
        stats.malformed += ingested.stats.malformed;
        stats.deleted += ingested.stats.deleted;
        stats.filtered += ingested.stats.filtered;
        docs.extend(ingested.corpus.into_documents());
    }
    let corpus = Corpus::new(docs);
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if stats.malformed > 0 {
        log::warn!("skipped {} malformed line(s)", stats.malformed);
    }
    let mut buf = Vec::new();
    corpus::write_jsonl(&corpus, &mut buf)?;
    io.write(CORPUS, &buf)?;
    let summary = IngestSummary {
        dumps: ctx.manifest.inputs.dumps.iter().map(|p| p.display().to_string()).collect(),
        stats,
        documents: corpus.len(),
        tokens: corpus.token_count(),
        communities: corpus.communities().into_iter().map(|c| (c.to_owned(), corpus.community(c).len())).collect(),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::format("ingest summary", e.to_string()))?;
    io.write("ingest.json", format!("{json}\n").as_bytes())
}

// ----------------------------------------------------------------- embed

/// `(label, group, corpus)` per user: the `users.k` most active authors of
/// every community.
fn user_jobs(ctx: &Context, corpus: &Corpus) -> Result<Vec<(String, String, Corpus)>> {
    let k = ctx.manifest.users.k;
    let mut jobs = Vec::new();
    for community in corpus.communities() {
        let users = corpus::top_users(&corpus.community(community), k)?;
        if users.len() < k {
            log::warn!("community {community}: only {} user(s), k = {k} clamped", users.len());
        }
        for (author, sub) in users {
            jobs.push((format!("{community}/{author}"), community.to_owned(), sub));
        }
    }
    Ok(jobs)
}

/// Trains one model per job and writes its cloud; entities whose corpus
/// yields no vocabulary are skipped with a warning.
fn embed_each(ctx: &Context, io: &mut StageIo, jobs: Vec<(String, String, Corpus)>) -> Result<()> {
    // every entity trains with the same seed, so identical corpora give identical models
    let params = ctx.manifest.embedding.params(ctx.seed);
    let clouds: Vec<Option<Vec<u8>>> = jobs
        .par_iter()
        .map(|(label, _, sub)| match embedding::train_skipgram(sub, &params) {
            Err(Error::EmptyVocabulary { .. }) => {
                log::warn!("{label}: no word reaches min_count, skipped");
                Ok(None)
            }
            Err(e) => Err(e),
            Ok(model) => cloud_bytes(ctx, &model, label).map(Some),
        })
        .collect::<Result<_>>()?;
    let mut entities = Vec::new();
    for ((label, group, _), cloud) in jobs.into_iter().zip(clouds) {
        let Some(cloud) = cloud else { continue };
        let id = entity_id(entities.len());
        io.write(&cloud_path(None, &id), &cloud)?;
        entities.push(Entity { id, label, group });
    }
    if entities.is_empty() {
        return Err(Error::invalid("no entity produced an embedding"));
    }
    write_rows(io, ENTITIES, &entities)
}

pub(super) fn embed_users(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let corpus = load_corpus(io)?;
    let jobs = user_jobs(ctx, &corpus)?;
    embed_each(ctx, io, jobs)
}

pub(super) fn embed_communities(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let corpus = load_corpus(io)?;
    let jobs = corpus
        .communities()
        .into_iter()
        .map(|c| (c.to_owned(), c.to_owned(), corpus.community(c)))
        .collect();
    embed_each(ctx, io, jobs)
}

/// Chained incremental training per entity over every month present in the
/// corpus. A month without documents carries the previous model forward.
fn embed_windows(ctx: &Context, io: &mut StageIo, jobs: Vec<(String, String, Corpus)>, months: &[String]) -> Result<()> {
    let params = ctx.manifest.embedding.params(ctx.seed);
    let per_entity: Vec<Vec<(WindowStatus, Option<Vec<u8>>)>> = jobs
        .par_iter()
        .map(|(label, _, sub)| {
            let mut by_month: BTreeMap<String, Corpus> =
                corpus::window_by_month(sub).into_iter().map(|w| (w.key(), w.corpus)).collect();
            let mut model: Option<EmbeddingModel> = None;
            let mut out = Vec::with_capacity(months.len());
            for month in months {
                let docs = by_month.remove(month).unwrap_or_else(|| Corpus::new(Vec::new()));
                let status = match (&model, docs.is_empty()) {
                    (None, true) => WindowStatus::Absent,
                    (Some(_), true) => WindowStatus::Carried,
                    (None, false) => match embedding::train_skipgram(&docs, &params) {
                        Ok(m) => {
                            model = Some(m);
                            WindowStatus::Trained
                        }
                        Err(Error::EmptyVocabulary { .. }) => WindowStatus::Absent,
                        Err(e) => return Err(e),
                    },
                    (Some(m), false) => {
                        model = Some(embedding::train_incremental(m, &docs)?);
                        WindowStatus::Trained
                    }
                };
                let cloud = match &model {
                    Some(m) => Some(cloud_bytes(ctx, m, &format!("{label} {month}"))?),
                    None => None,
                };
                out.push((status, cloud));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let entities: Vec<Entity> = jobs
        .iter()
        .enumerate()
        .map(|(i, (label, group, _))| Entity { id: entity_id(i), label: label.clone(), group: group.clone() })
        .collect();
    let mut rows = Vec::new();
    for (mi, month) in months.iter().enumerate() {
        for (e, windows) in entities.iter().zip(&per_entity) {
            let (status, cloud) = &windows[mi];
            if let Some(cloud) = cloud {
                io.write(&cloud_path(Some(month), &e.id), cloud)?;
            }
            if *status == WindowStatus::Carried {
                log::warn!("{} {month}: no documents, model carried forward", e.label);
            }
            rows.push(WindowRow {
                month: month.clone(),
                id: e.id.clone(),
                label: e.label.clone(),
                group: e.group.clone(),
                status: *status,
            });
        }
    }
    write_rows(io, ENTITIES, &entities)?;
    write_rows(io, WINDOWS, &rows)
}

fn corpus_months(corpus: &Corpus) -> Vec<String> {
    corpus::window_by_month(corpus).iter().map(|w| w.key()).collect()
}

pub(super) fn embed_community_windows(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let corpus = load_corpus(io)?;
    let jobs = corpus
        .communities()
        .into_iter()
        .map(|c| (c.to_owned(), c.to_owned(), corpus.community(c)))
        .collect();
    embed_windows(ctx, io, jobs, &corpus_months(&corpus))
}

pub(super) fn embed_user_windows(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let corpus = load_corpus(io)?;
    let jobs = user_jobs(ctx, &corpus)?;
    embed_windows(ctx, io, jobs, &corpus_months(&corpus))
}

pub(super) fn load_cloud(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let path = ctx.manifest.inputs.cloud.as_ref().expect("validated");
    let cloud = PointCloud::read_csv(&io.input(path)?[..], ctx.manifest.embedding.metric)?;
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "cloud".into());
    let id = entity_id(0);
    let mut buf = Vec::new();
    cloud.write_csv(&mut buf)?;
    io.write(&cloud_path(None, &id), &buf)?;
    write_rows(io, ENTITIES, &[Entity { id, group: label.clone(), label }])
}

// ----------------------------------------------------------- persistence

/// Computes barcodes for `(month, id)` keys in parallel and writes them.
fn persist_keys(ctx: &Context, io: &mut StageIo, keys: &[(Option<String>, String)]) -> Result<()> {
    let clouds = keys
        .iter()
        .map(|(m, id)| read_cloud(ctx, io, &cloud_path(m.as_deref(), id), "embed"))
        .collect::<Result<Vec<_>>>()?;
    let barcodes: Vec<Vec<u8>> = clouds
        .par_iter()
        .map(|c| barcode_bytes(&diagram_of(ctx, c, false)?))
        .collect::<Result<_>>()?;
    for ((m, id), bytes) in keys.iter().zip(barcodes) {
        io.write(&diagram_path(m.as_deref(), id), &bytes)?;
    }
    Ok(())
}

pub(super) fn persistence(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let entities: Vec<Entity> = read_rows(io, ENTITIES, "embed")?;
    let keys: Vec<_> = entities.into_iter().map(|e| (None, e.id)).collect();
    persist_keys(ctx, io, &keys)
}

pub(super) fn window_persistence(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let rows: Vec<WindowRow> = read_rows(io, WINDOWS, "embed")?;
    let keys: Vec<_> = rows
        .into_iter()
        .filter(|r| r.status != WindowStatus::Absent)
        .map(|r| (Some(r.month), r.id))
        .collect();
    persist_keys(ctx, io, &keys)
}

// ------------------------------------------------------------- distances

fn matrix_bytes(dm: &DiagramDistanceMatrix) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    dm.write_csv(&mut buf)?;
    Ok(buf)
}

fn labeled_diagrams(
    ctx: &Context,
    io: &mut StageIo,
    month: Option<&str>,
    entities: &[Entity],
) -> Result<Vec<(String, PersistenceDiagram)>> {
    entities
        .iter()
        .map(|e| Ok((e.label.clone(), read_diagram(ctx, io, &diagram_path(month, &e.id))?)))
        .collect()
}

pub(super) fn cluster_distances(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let entities: Vec<Entity> = read_rows(io, ENTITIES, "embed")?;
    let diagrams = labeled_diagrams(ctx, io, None, &entities)?;
    let kind = ctx.manifest.distance.kind;
    let mut matrices = Vec::new();
    for dim in ctx.manifest.distance_dims() {
        let dm = diagram_distance::distance_matrix(&diagrams, dim, kind)?;
        io.write(&format!("distances_dim{dim}.csv"), &matrix_bytes(&dm)?)?;
        matrices.push(dm);
    }
    let mut buf = Vec::new();
    diagram_distance::write_pair_report(&matrices, &mut buf)?;
    io.write("pairs.csv", &buf)
}

pub(super) fn project(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let entities: Vec<Entity> = read_rows(io, ENTITIES, "embed")?;
    let groups: BTreeMap<String, String> = entities.iter().map(|e| (e.label.clone(), e.group.clone())).collect();
    let params = projection::TsneParams { seed: ctx.seed, ..ctx.manifest.tsne };
    for dim in ctx.manifest.distance_dims() {
        let rel = format!("distances_dim{dim}.csv");
        let dm = DiagramDistanceMatrix::read_csv(&io.read(&rel, "distances")?[..], dim, ctx.manifest.distance.kind)?;
        let proj = projection::tsne_precomputed(&dm, &params)?;
        let mut buf = Vec::new();
        projection::write_scatter_csv(&proj, &groups, &mut buf)?;
        io.write(&format!("proj_dim{dim}.csv"), &buf)?;
        let svg = projection::render_scatter_svg(&proj, &groups)?;
        io.write(&format!("proj_dim{dim}.svg"), svg.as_bytes())?;
    }
    Ok(())
}

/// Window rows grouped by month, keeping only entities that have a model.
fn present_by_month(rows: Vec<WindowRow>) -> BTreeMap<String, Vec<WindowRow>> {
    let mut by_month: BTreeMap<String, Vec<WindowRow>> = BTreeMap::new();
    for r in rows {
        let slot = by_month.entry(r.month.clone()).or_default();
        if r.status != WindowStatus::Absent {
            slot.push(r);
        } else {
            log::warn!("{} {}: no model yet, left out", r.label, r.month);
        }
    }
    by_month
}

fn row_entities(rows: &[WindowRow]) -> Vec<Entity> {
    rows.iter().map(|r| Entity { id: r.id.clone(), label: r.label.clone(), group: r.group.clone() }).collect()
}

#[derive(Serialize)]
struct DivergenceRow {
    month: String,
    pair: String,
    dim: usize,
    distance: f64,
    flag: &'static str,
}

pub(super) fn divergence(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let rows: Vec<WindowRow> = read_rows(io, WINDOWS, "embed")?;
    let kind = ctx.manifest.distance.kind;
    let mut out = Vec::new();
    for (month, present) in present_by_month(rows) {
        let diagrams = labeled_diagrams(ctx, io, Some(&month), &row_entities(&present))?;
        for dim in ctx.manifest.distance_dims() {
            let dm = diagram_distance::distance_matrix(&diagrams, dim, kind)?;
            for i in 0..present.len() {
                for j in i + 1..present.len() {
                    let carried = [&present[i], &present[j]].iter().any(|r| r.status == WindowStatus::Carried);
                    out.push(DivergenceRow {
                        month: month.clone(),
                        pair: format!("{}|{}", present[i].label, present[j].label),
                        dim,
                        distance: dm.get(i, j),
                        flag: if carried { "carried" } else { "" },
                    });
                }
            }
        }
    }
    write_rows(io, "divergence.csv", &out)
}

/// Restriction of `dm` to the rows `keep`.
fn submatrix(dm: &DiagramDistanceMatrix, keep: &[usize]) -> Result<DiagramDistanceMatrix> {
    let labels = keep.iter().map(|&i| dm.labels()[i].clone()).collect();
    let entries = keep.iter().flat_map(|&i| keep.iter().map(move |&j| dm.get(i, j))).collect();
    DiagramDistanceMatrix::new(labels, dm.dim(), dm.kind(), entries)
}

/// Across-group means plus within-group means for every group with at least
/// two members.
fn group_means(dm: &DiagramDistanceMatrix, groups: &BTreeMap<String, String>) -> Result<Vec<GroupMean>> {
    let mut means = diagram_distance::mean_group_distance(dm, groups, GroupMode::Across)?;
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, label) in dm.labels().iter().enumerate() {
        members.entry(groups[label].as_str()).or_default().push(i);
    }
    for (group, idx) in members {
        if idx.len() < 2 {
            log::warn!("group {group} has a single member; within-group mean undefined");
            continue;
        }
        means.extend(diagram_distance::mean_group_distance(&submatrix(dm, &idx)?, groups, GroupMode::Within)?);
    }
    means.sort_by(|a, b| (&a.left, &a.right).cmp(&(&b.left, &b.right)));
    Ok(means)
}

#[derive(Serialize)]
struct DriftRow {
    month: String,
    dim: usize,
    group_a: String,
    group_b: String,
    mean: f64,
    count: usize,
    flag: &'static str,
}

pub(super) fn user_drift(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let rows: Vec<WindowRow> = read_rows(io, WINDOWS, "embed")?;
    let kind = ctx.manifest.distance.kind;
    let mut out = Vec::new();
    for (month, present) in present_by_month(rows) {
        if present.len() < 2 {
            continue;
        }
        let groups: BTreeMap<String, String> = present.iter().map(|r| (r.label.clone(), r.group.clone())).collect();
        let carried: BTreeSet<&str> = present
            .iter()
            .filter(|r| r.status == WindowStatus::Carried)
            .map(|r| r.group.as_str())
            .collect();
        let diagrams = labeled_diagrams(ctx, io, Some(&month), &row_entities(&present))?;
        for dim in ctx.manifest.distance_dims() {
            let dm = diagram_distance::distance_matrix(&diagrams, dim, kind)?;
            io.write(&format!("distances/{month}_dim{dim}.csv"), &matrix_bytes(&dm)?)?;
            for m in group_means(&dm, &groups)? {
                let flagged = carried.contains(m.left.as_str()) || carried.contains(m.right.as_str());
                out.push(DriftRow {
                    month: month.clone(),
                    dim,
                    flag: if flagged { "carried" } else { "" },
                    group_a: m.left,
                    group_b: m.right,
                    mean: m.mean,
                    count: m.count,
                });
            }
        }
    }
    write_rows(io, "drift_users.csv", &out)
}

// ----------------------------------------------------------------- audit

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HoleRow {
    dim: usize,
    birth: f64,
    death: f64,
    persistence: f64,
    words: String,
}

pub(super) fn audit_persistence(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let entities: Vec<Entity> = read_rows(io, ENTITIES, "embed")?;
    let clouds = entities
        .iter()
        .map(|e| read_cloud(ctx, io, &cloud_path(None, &e.id), "embed"))
        .collect::<Result<Vec<_>>>()?;
    let min_persistence = ctx.manifest.audit.min_persistence;
    let results: Vec<(Vec<u8>, Vec<u8>, Vec<HoleRow>)> = clouds
        .par_iter()
        .map(|cloud| {
            let diag = diagram_of(ctx, cloud, true)?;
            let mut generators = Vec::new();
            topology::export_generators(&diag, cloud.labels(), &mut generators)?;
            let holes = topology::hole_report(&diag, min_persistence, cloud)?
                .into_iter()
                .map(|h| HoleRow {
                    dim: h.dim,
                    birth: h.birth,
                    death: h.death,
                    persistence: h.persistence(),
                    words: h.words.join(" "),
                })
                .collect();
            Ok((barcode_bytes(&diag)?, generators, holes))
        })
        .collect::<Result<_>>()?;
    for (e, (barcode, generators, holes)) in entities.iter().zip(results) {
        io.write(&diagram_path(None, &e.id), &barcode)?;
        io.write(&format!("diagrams/{}_generators.csv", e.id), &generators)?;
        write_rows(io, &format!("holes_{}.csv", e.id), &holes)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct DimSummary {
    dim: usize,
    bars: usize,
    /// Bars listed in the hole report.
    large_bars: usize,
    /// Longest persistences, open bars cut off at `max_eps`.
    top_persistence: Vec<f64>,
    /// Longest over second longest; absent with fewer than two bars.
    dominance_ratio: Option<f64>,
    dominant: bool,
}

#[derive(Debug, Clone, Serialize)]
struct EntityReport {
    id: String,
    label: String,
    dims: Vec<DimSummary>,
}

#[derive(Debug, Clone, Serialize)]
struct AuditReport {
    min_persistence: f64,
    dominance_factor: f64,
    max_eps: f64,
    entities: Vec<EntityReport>,
}

pub(super) fn audit_report(ctx: &Context, io: &mut StageIo) -> Result<()> {
    let entities: Vec<Entity> = read_rows(io, ENTITIES, "embed")?;
    let audit = &ctx.manifest.audit;
    let max_eps = ctx.manifest.topology.max_eps;
    let mut reports = Vec::new();
    for e in &entities {
        let diag = read_diagram(ctx, io, &diagram_path(None, &e.id))?;
        let holes: Vec<HoleRow> = read_rows(io, &format!("holes_{}.csv", e.id), "persistence")?;
        let dims = (0..=diag.max_dim())
            .map(|dim| {
                let mut pers: Vec<f64> =
                    diag.pairs().filter(|p| p.dim == dim).map(|p| p.death.min(max_eps) - p.birth).collect();
                pers.sort_by(|a, b| b.total_cmp(a));
                let ratio = (pers.len() >= 2).then(|| pers[0] / pers[1]);
                let dominant = match ratio {
                    Some(r) => r >= audit.dominance_factor,
                    None => pers.first().is_some_and(|&p| p > 0.0),
                };
                let large_bars = holes.iter().filter(|h| h.dim == dim).count();
                DimSummary {
                    dim,
                    bars: pers.len(),
                    large_bars,
                    top_persistence: pers.iter().take(5).copied().collect(),
                    dominance_ratio: ratio.filter(|r| r.is_finite()),
                    dominant,
                }
            })
            .collect();
        reports.push(EntityReport { id: e.id.clone(), label: e.label.clone(), dims });
    }
    let report = AuditReport {
        min_persistence: audit.min_persistence,
        dominance_factor: audit.dominance_factor,
        max_eps,
        entities: reports,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::format("audit report", e.to_string()))?;
    io.write("report.json", format!("{json}\n").as_bytes())
}

// -------------------------------------------------------------- simulate

#[derive(Serialize)]
struct PairRow {
    step: usize,
    a: u64,
    b: u64,
    distance: f64,
}

pub(super) fn simulate(ctx: &Context, io: &mut StageIo) -> Result<()> {
    for path in &ctx.manifest.inputs.configs {
        let text = String::from_utf8(io.input(path)?).map_err(|_| Error::invalid("config is not UTF-8"))?;
        let cfg = SimConfig::parse(&text, ctx.seed).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        let dir = Path::new(path.file_stem().expect("validated")).display().to_string();
        let graph = echochamber::make_graph(&cfg.graph, cfg.params.seed)?;
        let mut snapshots: Vec<(usize, Vec<(u64, Vec<u8>)>)> = Vec::new();
        let checkpoints: BTreeSet<usize> = cfg.checkpoints.iter().copied().collect();
        let (series, events) = echochamber::simulate_with(&graph, &cfg.params, |step, pop| {
            if checkpoints.contains(&step) {
                let diagrams =
                    echochamber::snapshot_diagrams(pop, cfg.snapshot_top_n, cfg.snapshot_max_dim, cfg.snapshot_max_eps)?;
                let files = pop
                    .iter()
                    .zip(&diagrams)
                    .map(|(l, d)| Ok((l.id, barcode_bytes(d)?)))
                    .collect::<Result<_>>()?;
                snapshots.push((step, files));
            }
            Ok(())
        })?;
        log::info!("{dir}: {} on {}, final mean distance {:?}", cfg.graph, graph.n(), series.mean_distance.last());

        let mut buf = Vec::new();
        series.write_csv(&mut buf)?;
        io.write(&format!("{dir}/drift.csv"), &buf)?;
        let mut buf = Vec::new();
        echochamber::write_events_csv(&events, &mut buf)?;
        io.write(&format!("{dir}/events.csv"), &buf)?;
        if let Some(pairs) = &series.pairs {
            let ids = graph.ids();
            let mut rows = Vec::new();
            for (&step, dists) in series.steps.iter().zip(pairs) {
                let mut it = dists.iter();
                for i in 0..ids.len() {
                    for j in i + 1..ids.len() {
                        let distance = *it.next().expect("one distance per pair");
                        rows.push(PairRow { step, a: ids[i], b: ids[j], distance });
                    }
                }
            }
            write_rows(io, &format!("{dir}/pairs.csv"), &rows)?;
        }
        for (step, files) in snapshots {
            for (id, bytes) in files {
                io.write(&format!("{dir}/diagrams/step_{step}/learner_{id}.csv"), &bytes)?;
            }
        }
    }
    Ok(())
}
