//! Benchmark corpora on disk: generation with ground-truth sidecars and
//! loading for benchmarks.

use std::fs;
use std::path::{Path, PathBuf};

use isingrbm_core::bench::{default_coupling, solve, trial_seed, SolverConfig};
use isingrbm_core::oracle::{exhaustive_ground_state_capped, sa_best, GroundSource, GroundTruth, SaSchedule};
use isingrbm_core::{InstanceSpec, IsingProblem, ProblemKind};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::{read_ground_truth, read_instance, sidecar_path, write_ground_truth, write_instance};
use crate::parallel::Pool;
use crate::report::{write_json, RunManifest};

pub const INSTANCE_EXT: &str = "ising";
pub const CORPUS_MANIFEST: &str = "corpus.json";

/// How ground truths are established.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleOptions {
    /// Largest size solved by enumeration.
    pub exhaustive_cap: usize,
    pub sa_sweeps: u32,
    pub sa_restarts: u32,
    /// Independent sampler chains used to cross-check annealing.
    pub rbm_chains: u32,
    pub rbm_samples: u64,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            exhaustive_cap: 24,
            sa_sweeps: 4000,
            sa_restarts: 10,
            rbm_chains: 4,
            rbm_samples: 70_000,
            seed: 0,
        }
    }
}

/// Exhaustive optimum up to the cap; above it the better of annealing and the
/// sampler's best-found, labelled cross-checked.
pub fn ground_truth(p: &IsingProblem, opts: &OracleOptions) -> Result<GroundTruth> {
    if p.n() <= opts.exhaustive_cap {
        return Ok(exhaustive_ground_state_capped(p, opts.exhaustive_cap)?);
    }
    let sched = SaSchedule::new(opts.sa_sweeps, opts.sa_restarts, opts.seed);
    let mut best = sa_best(p, &sched)?;
    if opts.rbm_chains > 0 && p.convention() == isingrbm_core::Convention::Bipolar {
        let cfg = SolverConfig::for_problem(p, 0.25, default_coupling(p), opts.rbm_samples);
        for k in 0..opts.rbm_chains {
            let s = solve(p, &cfg, trial_seed(opts.seed, u64::from(k)))?;
            if let (Some(e), Some(state)) = (s.energy, s.state) {
                if e < best.best_energy {
                    log::warn!(
                        "sampler found energy {e} below annealing's {}; keeping the sampler's state",
                        best.best_energy
                    );
                    best = GroundTruth::from_witness(p, state, GroundSource::CrossChecked)?;
                }
            }
        }
    }
    Ok(best)
}

/// File stem of the `index`-th instance of size `n`.
pub fn instance_id(kind: ProblemKind, n: usize, index: u32) -> String {
    format!("{}-n{n:03}-{index:02}", kind.name())
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusRecord {
    pub id: String,
    pub file: String,
    pub n: usize,
    pub index: u32,
    pub seed: u64,
    pub best_energy: f64,
    pub best_cut: Option<u64>,
    pub source: GroundSource,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusManifest {
    pub manifest: RunManifest,
    pub kind: ProblemKind,
    pub density: f64,
    pub seed: u64,
    pub oracle: OracleOptions,
    pub instances: Vec<CorpusRecord>,
}

#[derive(Clone, Debug)]
pub struct GenerateRequest {
    pub kind: ProblemKind,
    pub sizes: Vec<usize>,
    pub per_size: u32,
    pub density: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub oracle: OracleOptions,
}

/// Writes `<id>.ising`, `<id>.ising.gt` for every instance and a
/// `corpus.json` index. Identical requests produce identical bytes.
pub fn generate_corpus(req: &GenerateRequest, manifest: RunManifest, pool: &Pool) -> Result<CorpusManifest> {
    if let Some(&n) = req.sizes.iter().find(|&&n| n < 2) {
        return Err(Error::Usage(format!("instance size {n} is below 2")));
    }
    if !(0.0..=1.0).contains(&req.density) {
        return Err(Error::Usage(format!("density {} not in [0, 1]", req.density)));
    }
    fs::create_dir_all(&req.out_dir).map_err(|e| Error::io(&req.out_dir, e))?;
    let jobs: Vec<(usize, u32)> = req
        .sizes
        .iter()
        .flat_map(|&n| (0..req.per_size).map(move |k| (n, k)))
        .collect();
    let records = pool.map(&jobs, |&(n, index)| -> Result<CorpusRecord> {
        let spec = InstanceSpec::in_corpus(req.kind, n, index, req.seed, req.density);
        let p = spec.generate()?;
        let id = instance_id(req.kind, n, index);
        let file = format!("{id}.{INSTANCE_EXT}");
        let path = req.out_dir.join(&file);
        let gt = ground_truth(&p, &OracleOptions { seed: spec.seed, ..req.oracle.clone() })?;
        write_instance(&p, &path)?;
        write_ground_truth(&gt, &sidecar_path(&path))?;
        Ok(CorpusRecord {
            id,
            file,
            n,
            index,
            seed: spec.seed,
            best_energy: gt.best_energy,
            best_cut: gt.best_cut,
            source: gt.source,
        })
    });
    let corpus = CorpusManifest {
        manifest,
        kind: req.kind,
        density: req.density,
        seed: req.seed,
        oracle: req.oracle.clone(),
        instances: records.into_iter().collect::<Result<_>>()?,
    };
    write_json(&req.out_dir.join(CORPUS_MANIFEST), &corpus)?;
    Ok(corpus)
}

/// An instance with its ground truth, ready to benchmark.
#[derive(Clone, Debug)]
pub struct Entry {
    pub id: String,
    pub path: PathBuf,
    pub problem: IsingProblem,
    pub ground_truth: GroundTruth,
}

impl Entry {
    /// `maxcut`, `sk` or `ising`, from the couplings.
    pub fn kind(&self) -> &'static str {
        problem_label(&self.problem)
    }
}

pub fn problem_label(p: &IsingProblem) -> &'static str {
    if p.is_maxcut() {
        "maxcut"
    } else if !p.has_fields() && p.edges().count() == p.n() * (p.n() - 1) / 2 && p.edges().all(|e| e.2.abs() == 1.0) {
        "sk"
    } else {
        "ising"
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Reads an instance and its sidecar, failing if the sidecar is absent.
pub fn load_entry(path: &Path) -> Result<Entry> {
    let problem = read_instance(path)?;
    let gt_path = sidecar_path(path);
    if !gt_path.exists() {
        return Err(Error::MissingGroundTruth(vec![path.display().to_string()]));
    }
    let ground_truth = read_ground_truth(&gt_path, &problem)?;
    Ok(Entry {
        id: stem(path),
        path: path.to_path_buf(),
        problem,
        ground_truth,
    })
}

/// Every `*.ising` file of `dir` in name order. Missing sidecars are reported
/// together.
pub fn load_corpus(dir: &Path) -> Result<Vec<Entry>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == INSTANCE_EXT))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyCorpus(dir.to_path_buf()));
    }
    let missing: Vec<String> = paths
        .iter()
        .filter(|p| !sidecar_path(p).exists())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingGroundTruth(missing));
    }
    paths.iter().map(|p| load_entry(p)).collect()
}
