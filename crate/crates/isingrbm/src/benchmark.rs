//! Corpus-level benchmarks: per-instance sweeps, pooled per-size curves,
//! optimal time to solution and the scaling fit.

use std::collections::BTreeMap;

use isingrbm_core::bench::{
    default_coupling, pareto_tts, sweep, Estimation, Method, ParetoPoint, SolverConfig, SweepAxis, SweepPoint,
    TrialRecord, TtsPoint,
};
use isingrbm_core::embed::{CouplingSign, EmbedOptions, FixedPointGrid, PairScaling};
use isingrbm_core::rng::{Stream, DOMAIN_BENCH, DOMAIN_BOOTSTRAP};
use isingrbm_core::sampler::{Init, SigmoidMode};
use isingrbm_core::stats::{bootstrap_ci, linear_fit, time_to_solution, LinearFit, DEFAULT_SAMPLE_RATE};
use serde::Serialize;

use crate::corpus::Entry;
use crate::error::{Error, Result};
use crate::format::witness_string;
use crate::parallel::Pool;
use crate::report::RunManifest;

/// Benchmark settings; serialised verbatim into the manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchParams {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub beta: f64,
    /// `None` picks the per-problem default.
    pub coupling: Option<f64>,
    pub n_samples: u64,
    pub trials: u64,
    pub method: Method,
    /// `None` enables exclusion for MAX-CUT only.
    pub exclude_zero_cut: Option<bool>,
    pub quantization: Option<FixedPointGrid>,
    pub sign: CouplingSign,
    pub pairs: PairScaling,
    pub sigmoid: SigmoidMode,
    pub sample_rate: f64,
    pub ci_level: f64,
    pub bootstrap_resamples: u32,
    pub seed: u64,
}

impl BenchParams {
    pub fn new(axis: SweepAxis, grid: Vec<f64>, n_samples: u64, trials: u64, seed: u64) -> Self {
        Self {
            axis,
            grid,
            beta: 0.25,
            coupling: None,
            n_samples,
            trials,
            method: Method::Hitting,
            exclude_zero_cut: None,
            quantization: None,
            sign: CouplingSign::default(),
            pairs: PairScaling::default(),
            sigmoid: SigmoidMode::Exact,
            sample_rate: DEFAULT_SAMPLE_RATE,
            ci_level: 0.95,
            bootstrap_resamples: 1000,
            seed,
        }
    }

    pub fn solver_config(&self, e: &Entry) -> SolverConfig {
        let p = &e.problem;
        let mut cfg = SolverConfig::for_problem(p, self.beta, self.coupling.unwrap_or_else(|| default_coupling(p)), self.n_samples);
        cfg.method = self.method;
        if let Some(x) = self.exclude_zero_cut {
            cfg.exclude_zero_cut = x;
        }
        cfg.embed = EmbedOptions {
            sign: self.sign,
            pairs: self.pairs,
            quantization: self.quantization,
        };
        cfg.sigmoid = self.sigmoid;
        cfg.init = Init::UniformRandom;
        cfg
    }

    /// Trial seeds of one instance depend only on the run seed and the id.
    pub fn instance_seed(&self, id: &str) -> u64 {
        Stream::new(self.seed).child_seed(DOMAIN_BENCH, fnv1a(id.as_bytes()))
    }

    fn estimation(&self, base_seed: u64) -> Estimation {
        Estimation {
            n_trials: self.trials,
            base_seed,
            sample_rate: self.sample_rate,
            ci_level: self.ci_level,
            bootstrap_resamples: self.bootstrap_resamples,
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundTruthView {
    pub best_energy: f64,
    pub best_cut: Option<u64>,
    pub source: isingrbm_core::GroundSource,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointView {
    pub value: f64,
    pub beta: f64,
    pub coupling: f64,
    pub n_samples: u64,
    pub n_trials: u64,
    pub hits: u64,
    pub p_gnd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Seconds; `null` when unbounded.
    pub t_soln: f64,
    pub median_cut: Option<f64>,
    pub zero_cut_log_ratio: Option<f64>,
}

impl PointView {
    fn from_sweep(p: &SweepPoint) -> Self {
        Self {
            value: p.value,
            beta: p.batch.config.beta,
            coupling: p.batch.config.coupling,
            n_samples: p.tts.n_samples,
            n_trials: p.batch.n_trials,
            hits: p.batch.hits,
            p_gnd: p.tts.p_gnd,
            ci_low: p.tts.ci_low,
            ci_high: p.tts.ci_high,
            t_soln: p.tts.t_soln,
            median_cut: p.median_cut,
            zero_cut_log_ratio: p.zero_cut_log_ratio,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceResult {
    pub instance_id: String,
    pub kind: String,
    pub n: usize,
    pub ground_truth: GroundTruthView,
    pub points: Vec<PointView>,
}

/// Trials of every instance of one (kind, size) pooled at one grid value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PooledPoint {
    pub kind: String,
    pub n: usize,
    pub value: f64,
    pub instances: usize,
    pub n_samples: u64,
    pub n_trials: u64,
    pub hits: u64,
    pub p_gnd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub t_soln: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeSummary {
    pub kind: String,
    pub n: usize,
    /// Optimal sample count and time; present for samples sweeps.
    pub pareto: Option<ParetoPoint>,
}

/// Fit of `ln p_gnd` against size over sizes with a nonzero estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub kind: String,
    pub value: f64,
    pub sizes: Vec<usize>,
    pub fit: LinearFit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub manifest: RunManifest,
    pub corpus: Vec<String>,
    pub params: BenchParams,
    pub points: Vec<PooledPoint>,
    pub per_instance: Vec<InstanceResult>,
    pub per_size: Vec<SizeSummary>,
    pub scaling: Vec<ScalingFit>,
}

impl BenchReport {
    /// True when no trial anywhere reached the ground state.
    pub fn infeasible(&self) -> bool {
        self.points.iter().all(|p| p.hits == 0)
    }

    /// Flat rows, one per (instance, grid point).
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.per_instance
            .iter()
            .flat_map(|r| {
                r.points.iter().map(move |p| CsvRow {
                    instance_id: r.instance_id.clone(),
                    kind: r.kind.clone(),
                    n: r.n,
                    axis: self.params.axis.name(),
                    value: p.value,
                    beta: p.beta,
                    coupling: p.coupling,
                    n_samples: p.n_samples,
                    n_trials: p.n_trials,
                    hits: p.hits,
                    p_gnd: p.p_gnd,
                    ci_low: p.ci_low,
                    ci_high: p.ci_high,
                    t_soln: crate::report::seconds(p.t_soln),
                    median_cut: p.median_cut,
                    zero_cut_log_ratio: p.zero_cut_log_ratio,
                    best_energy: r.ground_truth.best_energy,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CsvRow {
    pub instance_id: String,
    pub kind: String,
    pub n: usize,
    pub axis: &'static str,
    pub value: f64,
    pub beta: f64,
    pub coupling: f64,
    pub n_samples: u64,
    pub n_trials: u64,
    pub hits: u64,
    pub p_gnd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub t_soln: String,
    pub median_cut: Option<f64>,
    pub zero_cut_log_ratio: Option<f64>,
    pub best_energy: f64,
}

/// One line of the per-trial stream.
#[derive(Clone, Debug, Serialize)]
pub struct TrialLine {
    pub instance_id: String,
    pub axis: SweepAxis,
    pub value: f64,
    #[serde(flatten)]
    pub record: TrialRecord,
}

pub struct BenchOutput {
    pub report: BenchReport,
    pub trials: Vec<TrialLine>,
}

/// Sweeps every entry and pools the results by problem kind and size.
pub fn run_benchmark(entries: &[Entry], params: &BenchParams, manifest: RunManifest, pool: &Pool) -> Result<BenchOutput> {
    if params.grid.is_empty() {
        return Err(Error::Usage("grid is empty".into()));
    }
    if params.trials == 0 {
        return Err(Error::Usage("trials must be at least 1".into()));
    }
    let mut per_instance = Vec::with_capacity(entries.len());
    let mut trials = Vec::new();
    let mut sweeps: Vec<(String, usize, Vec<SweepPoint>)> = Vec::with_capacity(entries.len());
    for e in entries {
        let cfg = params.solver_config(e);
        let est = params.estimation(params.instance_seed(&e.id));
        log::info!("{}: {} {} point(s)", e.id, params.axis.name(), params.grid.len());
        let points = sweep(pool, &e.id, &e.problem, &e.ground_truth, params.axis, &params.grid, &cfg, &est)?;
        for p in &points {
            trials.extend(p.batch.outputs.iter().map(|r| TrialLine {
                instance_id: e.id.clone(),
                axis: params.axis,
                value: p.value,
                record: r.clone(),
            }));
        }
        per_instance.push(InstanceResult {
            instance_id: e.id.clone(),
            kind: e.kind().to_string(),
            n: e.problem.n(),
            ground_truth: GroundTruthView {
                best_energy: e.ground_truth.best_energy,
                best_cut: e.ground_truth.best_cut,
                source: e.ground_truth.source,
                witness: witness_string(&e.ground_truth.witness),
            },
            points: points.iter().map(PointView::from_sweep).collect(),
        });
        sweeps.push((e.kind().to_string(), e.problem.n(), points));
    }

    let mut groups: BTreeMap<(String, usize), Vec<&Vec<SweepPoint>>> = BTreeMap::new();
    for (kind, n, pts) in &sweeps {
        groups.entry((kind.clone(), *n)).or_default().push(pts);
    }
    let root = Stream::new(params.seed);
    let mut points = Vec::new();
    let mut per_size = Vec::new();
    for (g, ((kind, n), members)) in groups.iter().enumerate() {
        let mut size_points = Vec::with_capacity(params.grid.len());
        for (k, &value) in params.grid.iter().enumerate() {
            let outcomes: Vec<bool> = members.iter().flat_map(|pts| pts[k].batch.outcomes()).collect();
            let hits = outcomes.iter().filter(|&&x| x).count() as u64;
            let n_samples = members[0][k].tts.n_samples;
            let p = hits as f64 / outcomes.len() as f64;
            let seed = root.child_seed(DOMAIN_BOOTSTRAP, ((g as u64) << 32) | k as u64);
            let (ci_low, ci_high) = bootstrap_ci(&outcomes, params.ci_level, params.bootstrap_resamples, seed)?;
            size_points.push(PooledPoint {
                kind: kind.clone(),
                n: *n,
                value,
                instances: members.len(),
                n_samples,
                n_trials: outcomes.len() as u64,
                hits,
                p_gnd: p,
                ci_low,
                ci_high,
                t_soln: time_to_solution(n_samples, p, params.sample_rate)?,
            });
        }
        let pareto = if params.axis == SweepAxis::Samples {
            let tts: Vec<TtsPoint> = size_points
                .iter()
                .map(|p| TtsPoint {
                    n_samples: p.n_samples,
                    p_gnd: p.p_gnd,
                    ci_low: p.ci_low,
                    ci_high: p.ci_high,
                    t_soln: p.t_soln,
                })
                .collect();
            Some(pareto_tts(&tts)?)
        } else {
            None
        };
        per_size.push(SizeSummary {
            kind: kind.clone(),
            n: *n,
            pareto,
        });
        points.extend(size_points);
    }

    let kinds: Vec<String> = {
        let mut k: Vec<String> = points.iter().map(|p| p.kind.clone()).collect();
        k.dedup();
        k
    };
    let mut scaling = Vec::new();
    for kind in &kinds {
        for &value in &params.grid {
            let usable: Vec<&PooledPoint> = points
                .iter()
                .filter(|p| &p.kind == kind && p.value == value && p.p_gnd > 0.0)
                .collect();
            if usable.len() < 3 {
                continue;
            }
            let xs: Vec<f64> = usable.iter().map(|p| p.n as f64).collect();
            let ys: Vec<f64> = usable.iter().map(|p| p.p_gnd.ln()).collect();
            if let Ok(fit) = linear_fit(&xs, &ys) {
                scaling.push(ScalingFit {
                    kind: kind.clone(),
                    value,
                    sizes: usable.iter().map(|p| p.n).collect(),
                    fit,
                });
            }
        }
    }

    Ok(BenchOutput {
        report: BenchReport {
            manifest,
            corpus: entries.iter().map(|e| e.path.display().to_string()).collect(),
            params: params.clone(),
            points,
            per_instance,
            per_size,
            scaling,
        },
        trials,
    })
}
