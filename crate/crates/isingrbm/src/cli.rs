//! The `isingrbm` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use isingrbm_core::bench::{default_coupling, solve_with, Method, SolverConfig, SweepAxis};
use isingrbm_core::embed::{CouplingSign, EmbedOptions, FixedPointGrid, PairScaling};
use isingrbm_core::oracle::{exhaustive_ground_state_capped, sa_best, SaSchedule};
use isingrbm_core::sampler::{Init, SigmoidMode};
use isingrbm_core::stats::{time_to_solution, DEFAULT_SAMPLE_RATE};
use isingrbm_core::{BitString, ProblemKind};
use serde::Serialize;

use crate::benchmark::{run_benchmark, BenchParams, GroundTruthView};
use crate::corpus::{self, generate_corpus, load_corpus, load_entry, GenerateRequest, OracleOptions};
use crate::error::{Error, Result};
use crate::format::{self, read_ground_truth, read_instance, sidecar_path, witness_string, HexSampleWriter};
use crate::parallel::{resolve_jobs, Pool, JOBS_ENV};
use crate::report::{to_json, write_csv, write_json, write_jsonl, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "isingrbm", version, about = "Ising and MAX-CUT solving by Gibbs sampling on a copy-coupled RBM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads [default: all cores]
    #[arg(long, global = true, env = JOBS_ENV)]
    pub jobs: Option<usize>,

    /// Print the run manifest and exit without doing any work
    #[arg(long, global = true)]
    pub dry_run: bool,

    /// More log output (repeat for more)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded corpus with ground-truth sidecars
    Generate(GenerateArgs),
    /// Solve one instance and print the solution record
    Solve(SolveArgs),
    /// Benchmark a corpus directory
    Bench(BenchArgs),
    /// Sweep one hyperparameter on a single instance
    Sweep(SweepArgs),
    /// Compute a ground truth for one instance
    Oracle(OracleArgs),
    /// Time to solution for a run length and success probability
    Tts(TtsArgs),
}

fn parse_sizes(s: &str) -> std::result::Result<Vec<usize>, String> {
    parse_grid(s)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(format!("size {x} is not a whole number"))
            }
        })
        .collect()
}

/// `a,b,c` or an inclusive range `start:stop:step`.
fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    match parts.as_slice() {
        [single] => single.split(',').map(num).collect(),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(format!("range `{s}` needs start <= stop and a positive step"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|k| a + step * k as f64).collect())
        }
        _ => Err(format!("`{s}` is neither a list nor start:stop:step")),
    }
}

fn parse_sign(s: &str) -> std::result::Result<CouplingSign, String> {
    match s {
        "aligning" => Ok(CouplingSign::Aligning),
        "opposing" => Ok(CouplingSign::Opposing),
        _ => Err(format!("unknown sign `{s}` (expected aligning or opposing)")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Inverse temperature
    #[arg(long, default_value_t = 0.25)]
    pub beta: f64,
    /// Copy coupling C [default: 12 for MAX-CUT, 1 otherwise]
    #[arg(long)]
    pub coupling: Option<f64>,
    /// Readout: hitting (best score seen) or mode (most frequent state)
    #[arg(long, default_value = "hitting")]
    pub method: Method,
    /// Ignore all-zero and all-one samples in the hitting readout [default: on for MAX-CUT]
    #[arg(long, conflicts_with = "include_zero_cut")]
    pub exclude_zero_cut: bool,
    /// Keep all-zero and all-one samples in the hitting readout
    #[arg(long)]
    pub include_zero_cut: bool,
    /// Round model parameters to a fixed-point grid
    #[arg(long)]
    pub quantize: bool,
    /// Fixed-point word length
    #[arg(long, default_value_t = 9, requires = "quantize")]
    pub quant_bits: u32,
    /// Fixed-point fractional bits
    #[arg(long, default_value_t = 2, requires = "quantize")]
    pub quant_frac: u32,
    /// Fail on out-of-range parameters instead of saturating
    #[arg(long, requires = "quantize")]
    pub quant_strict: bool,
    /// Sign of the copy coupling: aligning (+C) or opposing (-C)
    #[arg(long, default_value = "aligning", value_parser = parse_sign)]
    #[serde(skip)]
    pub sign: CouplingSign,
    /// Halve pair weights so the embedding matches the problem energy exactly
    #[arg(long)]
    pub exact_affine: bool,
    /// Use a lookup-table sigmoid with 2^k cells
    #[arg(long, value_name = "K")]
    pub sigmoid_table: Option<u32>,
    /// Clip range of the table sigmoid
    #[arg(long, default_value_t = 8.0, requires = "sigmoid_table")]
    pub sigmoid_clip: f64,
}

impl ModelArgs {
    fn grid(&self) -> Result<Option<FixedPointGrid>> {
        if !self.quantize {
            return Ok(None);
        }
        Ok(Some(FixedPointGrid::new(self.quant_bits, self.quant_frac, !self.quant_strict)?))
    }

    fn zero_cut(&self) -> Option<bool> {
        if self.exclude_zero_cut {
            Some(true)
        } else if self.include_zero_cut {
            Some(false)
        } else {
            None
        }
    }

    fn sigmoid(&self) -> SigmoidMode {
        match self.sigmoid_table {
            Some(k) => SigmoidMode::Table {
                log2_entries: k,
                clip: self.sigmoid_clip,
            },
            None => SigmoidMode::Exact,
        }
    }

    fn pairs(&self) -> PairScaling {
        if self.exact_affine {
            PairScaling::ExactAffine
        } else {
            PairScaling::Doubled
        }
    }

    fn embed(&self) -> Result<EmbedOptions> {
        Ok(EmbedOptions {
            sign: self.sign,
            pairs: self.pairs(),
            quantization: self.grid()?,
        })
    }

    fn bench_params(&self, axis: SweepAxis, grid: Vec<f64>, n_samples: u64, trials: u64, seed: u64) -> Result<BenchParams> {
        let mut p = BenchParams::new(axis, grid, n_samples, trials, seed);
        p.beta = self.beta;
        p.coupling = self.coupling;
        p.method = self.method;
        p.exclude_zero_cut = self.zero_cut();
        p.quantization = self.grid()?;
        p.sign = self.sign;
        p.pairs = self.pairs();
        p.sigmoid = self.sigmoid();
        Ok(p)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    /// maxcut or sk
    #[arg(long)]
    pub kind: ProblemKind,
    /// Sizes as a list (10,20) or range (10:200:10)
    #[arg(long, value_parser = parse_sizes)]
    pub sizes: std::vec::Vec<usize>,
    /// Instances per size
    #[arg(long, default_value_t = 10)]
    pub per_size: u32,
    /// Edge probability for MAX-CUT
    #[arg(long, default_value_t = 0.5)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Largest size solved exhaustively; larger ones are cross-checked
    #[arg(long, default_value_t = 24)]
    pub exhaustive_cap: usize,
    #[arg(long, default_value_t = 4000)]
    pub sa_sweeps: u32,
    #[arg(long, default_value_t = 10)]
    pub sa_restarts: u32,
    /// Sampler chains used to cross-check annealing above the cap
    #[arg(long, default_value_t = 4)]
    pub rbm_chains: u32,
    #[arg(long, default_value_t = 70_000)]
    pub rbm_samples: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    /// Instance file
    pub instance: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Number of samples N_s
    #[arg(long, default_value_t = 70_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write every visible sample as a hex line to this file
    #[arg(long)]
    pub raw_samples: Option<PathBuf>,
    /// Write the embedded model to this file
    #[arg(long)]
    pub dump_model: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Directory of *.ising files with .gt sidecars
    pub corpus: PathBuf,
    /// Only these sizes
    #[arg(long, value_parser = parse_sizes)]
    pub sizes: Option<std::vec::Vec<usize>>,
    /// Swept parameter
    #[arg(long, default_value = "samples")]
    pub axis: SweepAxis,
    /// Grid values [default: the --samples value]
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<std::vec::Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonBench,
}

#[derive(Debug, Args, Serialize)]
pub struct CommonBench {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Number of samples N_s when not swept
    #[arg(long, default_value_t = 70_000)]
    pub samples: u64,
    /// Independent chains per grid point
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    /// Samples per second used for time to solution
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    pub sample_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap_resamples: u32,
    /// Write report.json, report.csv and trials.jsonl here instead of printing
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Instance file with a .gt sidecar
    pub instance: PathBuf,
    #[arg(long)]
    pub axis: SweepAxis,
    #[arg(long, value_parser = parse_grid)]
    pub grid: std::vec::Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonBench,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    pub instance: PathBuf,
    /// exhaustive, sa, or auto (exhaustive up to the cap)
    #[arg(long, default_value = "auto", value_parser = ["auto", "exhaustive", "sa"])]
    pub method: String,
    #[arg(long, default_value_t = 26)]
    pub cap: usize,
    #[arg(long, default_value_t = 4000)]
    pub sa_sweeps: u32,
    #[arg(long, default_value_t = 10)]
    pub sa_restarts: u32,
    #[arg(long, default_value_t = 4)]
    pub rbm_chains: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the sidecar next to the instance
    #[arg(long)]
    pub write: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct TtsArgs {
    /// Samples per run N_s
    #[arg(long)]
    pub samples: u64,
    /// Probability that one run reaches the ground state
    #[arg(long)]
    pub p_gnd: f64,
    /// Samples per second
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    pub rate: f64,
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

impl Cli {
    pub fn manifest(&self) -> Result<RunManifest> {
        match &self.command {
            Command::Generate(a) => RunManifest::new("generate", a.seed, vec![], a),
            Command::Solve(a) => RunManifest::new("solve", a.seed, vec![path_str(&a.instance)], a),
            Command::Bench(a) => RunManifest::new("bench", a.common.seed, vec![path_str(&a.corpus)], a),
            Command::Sweep(a) => RunManifest::new("sweep", a.common.seed, vec![path_str(&a.instance)], a),
            Command::Oracle(a) => RunManifest::new("oracle", a.seed, vec![path_str(&a.instance)], a),
            Command::Tts(a) => RunManifest::new("tts", 0, vec![], a),
        }
    }
}

/// Runs the parsed command, writing results to `out`. Returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let manifest = cli.manifest()?;
    let emit = |out: &mut dyn Write, text: &str| -> Result<()> {
        out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
    };
    if cli.dry_run {
        emit(out, &to_json(&manifest)?)?;
        return Ok(0);
    }
    let pool = || Pool::new(resolve_jobs(cli.jobs));
    match &cli.command {
        Command::Generate(a) => {
            let req = GenerateRequest {
                kind: a.kind,
                sizes: a.sizes.clone(),
                per_size: a.per_size,
                density: a.density,
                seed: a.seed,
                out_dir: a.out.clone(),
                oracle: OracleOptions {
                    exhaustive_cap: a.exhaustive_cap,
                    sa_sweeps: a.sa_sweeps,
                    sa_restarts: a.sa_restarts,
                    rbm_chains: a.rbm_chains,
                    rbm_samples: a.rbm_samples,
                    seed: a.seed,
                },
            };
            let corpus = generate_corpus(&req, manifest, &pool()?)?;
            emit(
                out,
                &format!("wrote {} instances to {}\n", corpus.instances.len(), a.out.display()),
            )?;
            Ok(0)
        }
        Command::Solve(a) => cmd_solve(a, manifest, out).map(|()| 0),
        Command::Bench(a) => {
            let mut entries = load_corpus(&a.corpus)?;
            if let Some(sizes) = &a.sizes {
                entries.retain(|e| sizes.contains(&e.problem.n()));
                if entries.is_empty() {
                    return Err(Error::EmptyCorpus(a.corpus.clone()));
                }
            }
            let grid = a.grid.clone().unwrap_or_else(|| vec![a.common.samples as f64]);
            bench_and_write(&entries, a.axis, grid, &a.common, manifest, &pool()?, out)
        }
        Command::Sweep(a) => {
            let entry = load_entry(&a.instance)?;
            bench_and_write(&[entry], a.axis, a.grid.clone(), &a.common, manifest, &pool()?, out)
        }
        Command::Oracle(a) => cmd_oracle(a, manifest, out).map(|()| 0),
        Command::Tts(a) => {
            let t = time_to_solution(a.samples, a.p_gnd, a.rate)?;
            #[derive(Serialize)]
            struct TtsOut {
                manifest: RunManifest,
                n_samples: u64,
                p_gnd: f64,
                sample_rate: f64,
                t_soln: f64,
            }
            emit(
                out,
                &to_json(&TtsOut {
                    manifest,
                    n_samples: a.samples,
                    p_gnd: a.p_gnd,
                    sample_rate: a.rate,
                    t_soln: t,
                })?,
            )?;
            Ok(if t.is_finite() { 0 } else { 4 })
        }
    }
}

#[derive(Serialize)]
struct SolveRecord {
    manifest: RunManifest,
    instance: String,
    n: usize,
    method: Method,
    n_samples: u64,
    seed: u64,
    beta: f64,
    coupling: f64,
    exclude_zero_cut: bool,
    best_state: Option<String>,
    best_state_hex: Option<String>,
    energy: Option<f64>,
    cut: Option<u64>,
    score: Option<f64>,
    first_hit_step: Option<u64>,
    ground_truth_energy: Option<f64>,
    ground_state_hit: Option<bool>,
}

fn cmd_solve(a: &SolveArgs, manifest: RunManifest, out: &mut dyn Write) -> Result<()> {
    let p = read_instance(&a.instance)?;
    let m = &a.model;
    let mut cfg = SolverConfig::for_problem(&p, m.beta, m.coupling.unwrap_or_else(|| default_coupling(&p)), a.samples);
    cfg.method = m.method;
    if let Some(x) = m.zero_cut() {
        cfg.exclude_zero_cut = x;
    }
    cfg.embed = m.embed()?;
    cfg.sigmoid = m.sigmoid();
    cfg.init = Init::UniformRandom;
    if let Some(path) = &a.dump_model {
        format::write_file(path, format::format_rbm(&cfg.model(&p)?).as_bytes())?;
    }
    let solution = match &a.raw_samples {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let mut sink = HexSampleWriter::new(file);
            let s = solve_with(&p, &cfg, a.seed, &mut sink)?;
            sink.finish().map_err(|e| Error::io(path, e))?;
            s
        }
        None => solve_with(&p, &cfg, a.seed, &mut |_: &isingrbm_core::sampler::Sample<'_>| {})?,
    };
    let gt_path = sidecar_path(&a.instance);
    let gt = if gt_path.exists() {
        Some(read_ground_truth(&gt_path, &p)?)
    } else {
        None
    };
    let record = SolveRecord {
        manifest,
        instance: path_str(&a.instance),
        n: p.n(),
        method: cfg.method,
        n_samples: cfg.n_samples,
        seed: a.seed,
        beta: cfg.beta,
        coupling: cfg.coupling,
        exclude_zero_cut: cfg.exclude_zero_cut,
        best_state: solution.state.as_ref().map(witness_string),
        best_state_hex: solution.state.as_ref().map(|s| BitString::from_bits(&s.bits()).to_hex()),
        energy: solution.energy,
        cut: solution.cut,
        score: solution.best_score,
        first_hit_step: solution.first_hit_step,
        ground_truth_energy: gt.as_ref().map(|g| g.best_energy),
        ground_state_hit: gt
            .as_ref()
            .map(|g| solution.energy.is_some_and(|e| isingrbm_core::bench::is_ground_energy(e, g.best_energy))),
    };
    out.write_all(to_json(&record)?.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_oracle(a: &OracleArgs, manifest: RunManifest, out: &mut dyn Write) -> Result<()> {
    let p = read_instance(&a.instance)?;
    let gt = match a.method.as_str() {
        "exhaustive" => exhaustive_ground_state_capped(&p, a.cap)?,
        "sa" => sa_best(&p, &SaSchedule::new(a.sa_sweeps, a.sa_restarts, a.seed))?,
        _ => corpus::ground_truth(
            &p,
            &OracleOptions {
                exhaustive_cap: a.cap,
                sa_sweeps: a.sa_sweeps,
                sa_restarts: a.sa_restarts,
                rbm_chains: a.rbm_chains,
                seed: a.seed,
                ..OracleOptions::default()
            },
        )?,
    };
    if a.write {
        format::write_ground_truth(&gt, &sidecar_path(&a.instance))?;
    }
    #[derive(Serialize)]
    struct OracleOut {
        manifest: RunManifest,
        instance: String,
        #[serde(flatten)]
        ground_truth: GroundTruthView,
    }
    let view = GroundTruthView {
        best_energy: gt.best_energy,
        best_cut: gt.best_cut,
        source: gt.source,
        witness: witness_string(&gt.witness),
    };
    out.write_all(
        to_json(&OracleOut {
            manifest,
            instance: path_str(&a.instance),
            ground_truth: view,
        })?
        .as_bytes(),
    )
    .map_err(|e| Error::io("<stdout>", e))
}

fn bench_and_write(
    entries: &[corpus::Entry],
    axis: SweepAxis,
    grid: Vec<f64>,
    c: &CommonBench,
    manifest: RunManifest,
    pool: &Pool,
    out: &mut dyn Write,
) -> Result<i32> {
    let mut params = c.model.bench_params(axis, grid, c.samples, c.trials, c.seed)?;
    params.sample_rate = c.sample_rate;
    params.bootstrap_resamples = c.bootstrap_resamples;
    let result = run_benchmark(entries, &params, manifest, pool)?;
    match &c.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            write_json(&dir.join("report.json"), &result.report)?;
            write_csv(&dir.join("report.csv"), result.report.csv_rows())?;
            write_jsonl(&dir.join("trials.jsonl"), &result.trials)?;
            for p in &result.report.points {
                writeln!(
                    out,
                    "{} n={} {}={} p_gnd={:.3} [{:.3}, {:.3}] t_soln={}",
                    p.kind,
                    p.n,
                    axis.name(),
                    p.value,
                    p.p_gnd,
                    p.ci_low,
                    p.ci_high,
                    crate::report::seconds(p.t_soln)
                )
                .map_err(|e| Error::io("<stdout>", e))?;
            }
        }
        None => out
            .write_all(to_json(&result.report)?.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))?,
    }
    Ok(if result.report.infeasible() { 4 } else { 0 })
}
