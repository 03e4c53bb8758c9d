//! Manifest-driven experiment runs. Every experiment is a fixed chain of
//! stages that talk to each other only through files in the output
//! directory, so a single stage can be re-run on its own and fails fast when
//! an upstream artifact is missing.

pub mod manifest;
pub mod provenance;
mod stages;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use manifest::{Experiment, Manifest};
pub use provenance::{ProvenanceRecord, StageRecord};

use crate::error::{Error, Result};

pub const PROVENANCE_FILE: &str = "provenance.json";

/// Command-line overrides applied on top of the manifest.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Run only this stage, reading upstream artifacts from a previous run.
    pub stage: Option<String>,
}

/// A validated manifest with its resolved directories and seed.
#[derive(Debug, Clone)]
pub struct Context {
    pub manifest: Manifest,
    pub manifest_sha256: String,
    /// Directory relative input paths are resolved against.
    pub base: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    pub fn load(manifest_path: &Path, opts: &RunOptions) -> Result<Context> {
        let bytes = fs::read(manifest_path)
            .map_err(|e| Error::Validation(format!("cannot read manifest {}: {e}", manifest_path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::Validation("manifest is not UTF-8".into()))?;
        let mut manifest = Manifest::parse(text)?;
        if opts.seed.is_some() {
            manifest.seed = opts.seed;
        }
        let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate(&base)?;
        let out = match (&opts.out, &manifest.output_dir) {
            (Some(out), _) => out.clone(),
            (None, Some(dir)) => base.join(dir),
            (None, None) => return Err(Error::Validation("no output directory: set output_dir or pass --out".into())),
        };
        let seed = manifest.seed.expect("validated");
        Ok(Context { manifest, manifest_sha256: provenance::sha256_hex(&bytes), base, out, seed })
    }
}

/// File access for one stage; records the content hash of everything read
/// and written.
pub struct StageIo<'a> {
    ctx: &'a Context,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl<'a> StageIo<'a> {
    fn new(ctx: &'a Context) -> Self {
        StageIo { ctx, inputs: BTreeMap::new(), outputs: BTreeMap::new() }
    }

    /// Reads a manifest input.
    pub fn input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(self.ctx.base.join(path))?;
        self.inputs.insert(format!("input:{}", path.display()), provenance::sha256_hex(&bytes));
        Ok(bytes)
    }

    /// Reads an artifact of an earlier stage.
    pub fn read(&mut self, rel: &str, producer: &str) -> Result<Vec<u8>> {
        let path = self.ctx.out.join(rel);
        if !path.is_file() {
            return Err(Error::invalid(format!("missing artifact {rel}; run stage '{producer}' first")));
        }
        let bytes = fs::read(&path)?;
        self.inputs.insert(rel.to_owned(), provenance::sha256_hex(&bytes));
        Ok(bytes)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.ctx.out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.outputs.insert(rel.to_owned(), provenance::sha256_hex(bytes));
        Ok(())
    }
}

type StageFn = fn(&Context, &mut StageIo) -> Result<()>;

pub struct Stage {
    pub name: &'static str,
    run: StageFn,
}

/// The stage chain of the manifest's experiment, in execution order.
pub fn stages(manifest: &Manifest) -> Vec<Stage> {
    use stages::*;
    let s = |name, run| Stage { name, run };
    match manifest.experiment {
        Experiment::UserClusters => vec![
            s("ingest", ingest),
            s("embed", embed_users),
            s("persistence", persistence),
            s("distances", cluster_distances),
            s("project", project),
        ],
        Experiment::SubredditDivergence => vec![
            s("ingest", ingest),
            s("embed", embed_community_windows),
            s("persistence", window_persistence),
            s("distances", divergence),
        ],
        Experiment::UserDrift => vec![
            s("ingest", ingest),
            s("embed", embed_user_windows),
            s("persistence", window_persistence),
            s("distances", user_drift),
        ],
        Experiment::IsotropyAudit if manifest.inputs.cloud.is_some() => vec![
            s("load", load_cloud),
            s("persistence", audit_persistence),
            s("report", audit_report),
        ],
        Experiment::IsotropyAudit => vec![
            s("ingest", ingest),
            s("embed", embed_communities),
            s("persistence", audit_persistence),
            s("report", audit_report),
        ],
        Experiment::Simulate => vec![s("simulate", simulate)],
    }
}

/// Runs `experiment` as described by the manifest at `manifest_path`.
/// Artifacts of completed stages are kept when a later stage fails, and
/// `provenance.json` is rewritten after every stage.
pub fn run(experiment: Experiment, manifest_path: &Path, opts: &RunOptions) -> Result<ProvenanceRecord> {
    let ctx = Context::load(manifest_path, opts)?;
    if ctx.manifest.experiment != experiment {
        return Err(Error::Validation(format!(
            "manifest describes '{}', not '{experiment}'",
            ctx.manifest.experiment
        )));
    }
    let mut chain = stages(&ctx.manifest);
    if let Some(name) = &opts.stage {
        let names: Vec<_> = chain.iter().map(|s| s.name).collect();
        chain.retain(|s| s.name == name);
        if chain.is_empty() {
            return Err(Error::Validation(format!("{experiment} has no stage '{name}' (stages: {})", names.join(", "))));
        }
    }
    fs::create_dir_all(&ctx.out)?;
    let prov_path = ctx.out.join(PROVENANCE_FILE);
    let fresh = || ProvenanceRecord::new(experiment.name(), ctx.seed, ctx.manifest_sha256.clone());
    let mut record = match &opts.stage {
        // a partial re-run extends the record of the run it continues
        Some(_) => match ProvenanceRecord::read(&prov_path) {
            Ok(r) if r.manifest_sha256 == ctx.manifest_sha256 && r.seed == ctx.seed => r,
            _ => fresh(),
        },
        None => fresh(),
    };
    for stage in chain {
        log::info!("{experiment}: stage {}", stage.name);
        let start = Instant::now();
        let mut io = StageIo::new(&ctx);
        let result = (stage.run)(&ctx, &mut io);
        let StageIo { inputs, outputs, .. } = io;
        if let Err(e) = result {
            record.write(&prov_path)?;
            return Err(Error::Stage { stage: stage.name.to_owned(), source: Box::new(e) });
        }
        record.upsert(StageRecord {
            name: stage.name.to_owned(),
            inputs,
            outputs,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
        record.write(&prov_path)?;
    }
    Ok(record)
}
