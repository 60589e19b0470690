//! Repeated-trial estimation of the ground-state probability, hyperparameter
//! sweeps and time-to-solution curves.
//!
//! A trial is one sampling chain seeded from `(base_seed, trial index)`. Several
//! readouts and several sample budgets can be taken from the same chain: the
//! hitting readout after `k` samples only depends on the first `k` samples, so a
//! samples sweep snapshots one long chain instead of rerunning shorter ones.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::embed::{embed, EmbedOptions, RbmModel};
use crate::error::{invalid, Error, Result};
use crate::ising::{Convention, IsingProblem, SpinState};
use crate::oracle::{cut_if_defined, GroundTruth};
use crate::readout::{approx_log_prob, score_from_hidden_input, HittingState, ModeState};
use crate::rng::{Stream, DOMAIN_BOOTSTRAP, DOMAIN_TRIAL};
use crate::sampler::{Init, Kernel, Sample, SampleSink, SigmoidMode};
use crate::stats::{bootstrap_ci, median, time_to_solution, DEFAULT_SAMPLE_RATE};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Method {
    /// Best approximate log-probability seen.
    #[default]
    Hitting,
    /// Most frequent visible state.
    Mode,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hitting => "hitting",
            Method::Mode => "mode",
        }
    }
}

impl core::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "hitting" => Ok(Method::Hitting),
            "mode" => Ok(Method::Mode),
            other => Err(format!("unknown method `{other}` (expected hitting or mode)")),
        }
    }
}

/// One way of turning the sample stream into an answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Readout {
    pub method: Method,
    pub exclude_zero_cut: bool,
}

/// Everything that defines a single solver run apart from its seed.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    pub beta: f64,
    pub coupling: f64,
    pub n_samples: u64,
    pub method: Method,
    pub exclude_zero_cut: bool,
    pub embed: EmbedOptions,
    pub sigmoid: SigmoidMode,
    pub init: Init,
}

impl SolverConfig {
    pub fn new(beta: f64, coupling: f64, n_samples: u64) -> Self {
        Self {
            beta,
            coupling,
            n_samples,
            method: Method::Hitting,
            exclude_zero_cut: false,
            embed: EmbedOptions::default(),
            sigmoid: SigmoidMode::Exact,
            init: Init::UniformRandom,
        }
    }

    /// Defaults for `p`: zero-cut exclusion on for MAX-CUT, off otherwise.
    pub fn for_problem(p: &IsingProblem, beta: f64, coupling: f64, n_samples: u64) -> Self {
        Self {
            exclude_zero_cut: p.is_maxcut(),
            ..Self::new(beta, coupling, n_samples)
        }
    }

    pub fn readout(&self) -> Readout {
        Readout {
            method: self.method,
            exclude_zero_cut: self.exclude_zero_cut,
        }
    }

    pub fn model(&self, p: &IsingProblem) -> Result<RbmModel> {
        embed(p, self.coupling, self.beta, &self.embed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(invalid("n_samples", "must be at least 1"));
        }
        Ok(())
    }
}

/// Decoded output of one readout.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub method: Method,
    /// Visible state as bipolar spins; `None` if every sample was excluded.
    pub state: Option<SpinState>,
    pub best_score: Option<f64>,
    pub first_hit_step: Option<u64>,
    pub energy: Option<f64>,
    pub cut: Option<u64>,
}

impl Solution {
    fn from_bits(p: &IsingProblem, method: Method, bits: Option<Vec<u8>>, score: Option<f64>, step: Option<u64>) -> Result<Self> {
        let state = match bits {
            Some(b) => Some(SpinState::from_bits(&b).to_convention(Convention::Bipolar)),
            None => None,
        };
        let energy = state.as_ref().map(|s| p.energy(s)).transpose()?;
        let cut = state.as_ref().and_then(|s| cut_if_defined(p, s));
        Ok(Self {
            method,
            state,
            best_score: score,
            first_hit_step: step,
            energy,
            cut,
        })
    }

    /// Visible bits as a hex string, or `None` when there is no state.
    pub fn state_hex(&self) -> Option<String> {
        self.state
            .as_ref()
            .map(|s| crate::readout::BitString::from_bits(&s.bits()).to_hex())
    }
}

struct MultiSink<'a> {
    vis_bias: &'a [f64],
    hitting: Vec<HittingState>,
    mode: Option<ModeState>,
    extra: &'a mut dyn SampleSink,
}

impl SampleSink for MultiSink<'_> {
    fn accept(&mut self, s: &Sample<'_>) {
        self.extra.accept(s);
        if !self.hitting.is_empty() {
            let score = score_from_hidden_input(self.vis_bias, s.visible, s.hidden_input);
            for h in &mut self.hitting {
                h.offer(s.visible, score, s.step);
            }
        }
        if let Some(m) = &mut self.mode {
            m.observe(s.visible);
        }
    }
}

/// Runs one chain and reads every readout at every checkpoint.
///
/// `checkpoints` must be strictly increasing and positive. The result is
/// indexed `[checkpoint][readout]`.
pub fn run_readouts(
    p: &IsingProblem,
    kernel: &Kernel<'_>,
    seed: u64,
    init: &Init,
    readouts: &[Readout],
    checkpoints: &[u64],
) -> Result<Vec<Vec<Solution>>> {
    run_readouts_with(p, kernel, seed, init, readouts, checkpoints, &mut |_: &Sample<'_>| {})
}

/// [`run_readouts`] that also forwards every sample to `extra`.
pub fn run_readouts_with(
    p: &IsingProblem,
    kernel: &Kernel<'_>,
    seed: u64,
    init: &Init,
    readouts: &[Readout],
    checkpoints: &[u64],
    extra: &mut dyn SampleSink,
) -> Result<Vec<Vec<Solution>>> {
    validate_checkpoints(checkpoints)?;
    if readouts.is_empty() {
        return Err(invalid("readouts", "need at least one readout"));
    }
    let model = kernel.model();
    let mut sink = MultiSink {
        vis_bias: model.vis_bias(),
        hitting: Vec::new(),
        mode: None,
        extra,
    };
    let mut slot = Vec::with_capacity(readouts.len());
    for r in readouts {
        match r.method {
            Method::Hitting => {
                slot.push(sink.hitting.len());
                sink.hitting.push(HittingState::new(r.exclude_zero_cut));
            }
            Method::Mode => {
                slot.push(0);
                sink.mode.get_or_insert_with(ModeState::new);
            }
        }
    }
    let mut chain = kernel.start(seed, init)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut done = 0;
    for &cp in checkpoints {
        kernel.advance(&mut chain, cp - done, &mut sink);
        done = cp;
        let mut row = Vec::with_capacity(readouts.len());
        for (r, &k) in readouts.iter().zip(&slot) {
            row.push(match r.method {
                Method::Hitting => {
                    let h = &sink.hitting[k];
                    Solution::from_bits(
                        p,
                        Method::Hitting,
                        h.best_v.as_ref().map(|b| b.to_bits()),
                        h.best_v.as_ref().map(|_| h.best_score),
                        h.first_hit_step,
                    )?
                }
                Method::Mode => {
                    let bits = sink.mode.as_ref().ok_or(Error::Empty)?.mode_estimate()?.to_bits();
                    let score = approx_log_prob(model, &bits);
                    Solution::from_bits(p, Method::Mode, Some(bits), Some(score), None)?
                }
            });
        }
        out.push(row);
    }
    Ok(out)
}

fn validate_checkpoints(checkpoints: &[u64]) -> Result<()> {
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("checkpoints", "need strictly increasing positive sample counts"));
    }
    Ok(())
}

/// Solves `p` once with the configured readout.
pub fn solve(p: &IsingProblem, cfg: &SolverConfig, seed: u64) -> Result<Solution> {
    solve_with(p, cfg, seed, &mut |_: &Sample<'_>| {})
}

/// [`solve`] that also forwards every sample to `extra`.
pub fn solve_with(p: &IsingProblem, cfg: &SolverConfig, seed: u64, extra: &mut dyn SampleSink) -> Result<Solution> {
    cfg.validate()?;
    let model = cfg.model(p)?;
    let kernel = Kernel::new(&model, cfg.sigmoid)?;
    let mut rows = run_readouts_with(p, &kernel, seed, &cfg.init, &[cfg.readout()], &[cfg.n_samples], extra)?;
    Ok(rows.remove(0).remove(0))
}

/// Copy coupling used when none is given: 12 for MAX-CUT graphs, 1 otherwise.
pub fn default_coupling(p: &IsingProblem) -> f64 {
    if p.is_maxcut() {
        12.0
    } else {
        1.0
    }
}

/// Seed of trial `index` under `base_seed`.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    Stream::new(base_seed).child_seed(DOMAIN_TRIAL, index)
}

/// Per-trial result record.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub method: Method,
    pub n_samples: u64,
    pub best_state_hex: Option<String>,
    pub best_score: Option<f64>,
    pub first_hit_step: Option<u64>,
    pub energy: Option<f64>,
    pub cut: Option<u64>,
    pub ground_state_hit: bool,
}

/// Energies are compared with a relative slack far below any gap of an
/// integer-valued instance.
pub fn is_ground_energy(energy: f64, best: f64) -> bool {
    (energy - best).abs() <= 1e-9 * best.abs().max(1.0)
}

/// Outcome of `n_trials` independent runs of one configuration.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialBatch {
    pub instance_id: String,
    pub config: SolverConfig,
    pub base_seed: u64,
    pub n_trials: u64,
    pub hits: u64,
    pub outputs: Vec<TrialRecord>,
}

impl TrialBatch {
    pub fn p_gnd(&self) -> f64 {
        if self.n_trials == 0 {
            0.0
        } else {
            self.hits as f64 / self.n_trials as f64
        }
    }

    pub fn outcomes(&self) -> Vec<bool> {
        self.outputs.iter().map(|r| r.ground_state_hit).collect()
    }

    /// Median cut over trials that produced a state.
    pub fn median_cut(&self) -> Option<f64> {
        let cuts: Vec<f64> = self.outputs.iter().filter_map(|r| r.cut.map(|c| c as f64)).collect();
        median(&cuts)
    }

    pub fn median_energy(&self) -> Option<f64> {
        let e: Vec<f64> = self.outputs.iter().filter_map(|r| r.energy).collect();
        median(&e)
    }

    pub fn tts_point(&self, est: &Estimation, ci_seed: u64) -> Result<TtsPoint> {
        let p = self.p_gnd();
        let (ci_low, ci_high) = bootstrap_ci(&self.outcomes(), est.ci_level, est.bootstrap_resamples, ci_seed)?;
        Ok(TtsPoint {
            n_samples: self.config.n_samples,
            p_gnd: p,
            ci_low,
            ci_high,
            t_soln: time_to_solution(self.config.n_samples, p, est.sample_rate)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TtsPoint {
    pub n_samples: u64,
    pub p_gnd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Seconds; infinite when no trial reached the ground state.
    pub t_soln: f64,
}

/// Repetition and reporting settings shared by estimation and sweeps.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimation {
    pub n_trials: u64,
    pub base_seed: u64,
    pub sample_rate: f64,
    pub ci_level: f64,
    pub bootstrap_resamples: u32,
}

impl Estimation {
    pub fn new(n_trials: u64, base_seed: u64) -> Self {
        Self {
            n_trials,
            base_seed,
            sample_rate: DEFAULT_SAMPLE_RATE,
            ci_level: 0.95,
            bootstrap_resamples: 1000,
        }
    }
}

/// Maps a trial function over trial indices. Results must come back in index
/// order whatever the scheduling.
pub trait Executor {
    fn map_trials(&self, n: u64, f: &(dyn Fn(u64) -> Result<TrialRows> + Sync)) -> Vec<Result<TrialRows>>;
}

/// `[checkpoint][readout]` records of one trial.
pub type TrialRows = Vec<Vec<TrialRecord>>;

#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_trials(&self, n: u64, f: &(dyn Fn(u64) -> Result<TrialRows> + Sync)) -> Vec<Result<TrialRows>> {
        (0..n).map(f).collect()
    }
}

/// A batch of trials on one instance, possibly with several readouts and
/// sample budgets per chain.
#[derive(Clone, Debug)]
pub struct TrialPlan<'p> {
    pub instance_id: String,
    problem: &'p IsingProblem,
    config: SolverConfig,
    model: RbmModel,
    best_energy: f64,
    readouts: Vec<Readout>,
    checkpoints: Vec<u64>,
}

impl<'p> TrialPlan<'p> {
    pub fn new(instance_id: &str, problem: &'p IsingProblem, gt: &GroundTruth, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        if gt.witness.len() != problem.n() {
            return Err(Error::Dimension {
                what: "ground-truth witness",
                expected: problem.n(),
                found: gt.witness.len(),
            });
        }
        Ok(Self {
            instance_id: instance_id.to_string(),
            problem,
            model: config.model(problem)?,
            config: config.clone(),
            best_energy: gt.best_energy,
            readouts: alloc::vec![config.readout()],
            checkpoints: alloc::vec![config.n_samples],
        })
    }

    pub fn with_readouts(mut self, readouts: &[Readout]) -> Result<Self> {
        if readouts.is_empty() {
            return Err(invalid("readouts", "need at least one readout"));
        }
        self.readouts = readouts.to_vec();
        Ok(self)
    }

    pub fn with_checkpoints(mut self, checkpoints: &[u64]) -> Result<Self> {
        validate_checkpoints(checkpoints)?;
        self.checkpoints = checkpoints.to_vec();
        Ok(self)
    }

    pub fn model(&self) -> &RbmModel {
        &self.model
    }

    pub fn run_trial(&self, index: u64, base_seed: u64) -> Result<TrialRows> {
        let seed = trial_seed(base_seed, index);
        let kernel = Kernel::new(&self.model, self.config.sigmoid)?;
        let rows = run_readouts(self.problem, &kernel, seed, &self.config.init, &self.readouts, &self.checkpoints)?;
        Ok(rows
            .into_iter()
            .zip(&self.checkpoints)
            .map(|(row, &n_samples)| {
                row.into_iter()
                    .map(|s| TrialRecord {
                        trial: index,
                        seed,
                        method: s.method,
                        n_samples,
                        best_state_hex: s.state_hex(),
                        best_score: s.best_score,
                        first_hit_step: s.first_hit_step,
                        energy: s.energy,
                        cut: s.cut,
                        ground_state_hit: s.energy.is_some_and(|e| is_ground_energy(e, self.best_energy)),
                    })
                    .collect()
            })
            .collect())
    }

    /// Runs trials `0..n_trials` and regroups them as `[checkpoint][readout]` batches.
    pub fn run(&self, exec: &dyn Executor, n_trials: u64, base_seed: u64) -> Result<Vec<Vec<TrialBatch>>> {
        if n_trials == 0 {
            return Err(invalid("n_trials", "must be at least 1"));
        }
        let f = |t: u64| self.run_trial(t, base_seed);
        let rows = exec.map_trials(n_trials, &f);
        let mut batches: Vec<Vec<TrialBatch>> = self
            .checkpoints
            .iter()
            .map(|&cp| {
                self.readouts
                    .iter()
                    .map(|r| TrialBatch {
                        instance_id: self.instance_id.clone(),
                        config: SolverConfig {
                            n_samples: cp,
                            method: r.method,
                            exclude_zero_cut: r.exclude_zero_cut,
                            ..self.config.clone()
                        },
                        base_seed,
                        n_trials,
                        hits: 0,
                        outputs: Vec::with_capacity(n_trials as usize),
                    })
                    .collect()
            })
            .collect();
        for trial in rows {
            for (k, row) in trial?.into_iter().enumerate() {
                for (r, rec) in row.into_iter().enumerate() {
                    let b = &mut batches[k][r];
                    b.hits += u64::from(rec.ground_state_hit);
                    b.outputs.push(rec);
                }
            }
        }
        Ok(batches)
    }
}

/// Estimates the ground-state probability with `n_trials` independent chains.
pub fn estimate_pgnd(
    exec: &dyn Executor,
    instance_id: &str,
    problem: &IsingProblem,
    gt: &GroundTruth,
    config: &SolverConfig,
    n_trials: u64,
    base_seed: u64,
) -> Result<TrialBatch> {
    let plan = TrialPlan::new(instance_id, problem, gt, config)?;
    Ok(plan.run(exec, n_trials, base_seed)?.remove(0).remove(0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SweepAxis {
    Beta,
    Coupling,
    Samples,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Beta => "beta",
            SweepAxis::Coupling => "coupling",
            SweepAxis::Samples => "samples",
        }
    }
}

impl core::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "beta" => Ok(SweepAxis::Beta),
            "coupling" => Ok(SweepAxis::Coupling),
            "samples" => Ok(SweepAxis::Samples),
            other => Err(format!("unknown axis `{other}` (expected beta, coupling or samples)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: f64,
    pub tts: TtsPoint,
    pub median_cut: Option<f64>,
    /// `ln p(all-zero visible) - ln p(ground-state visible)` under the exact
    /// marginal; recorded on coupling sweeps.
    pub zero_cut_log_ratio: Option<f64>,
    pub batch: TrialBatch,
}

/// Exact log-probability gap between the zero-cut visible state and the
/// ground-truth witness.
pub fn zero_cut_log_ratio(model: &RbmModel, gt: &GroundTruth) -> f64 {
    let zeros = alloc::vec![0u8; model.n_vis()];
    let witness = gt.witness.to_convention(Convention::Binary).bits();
    model.log_marginal(&zeros) - model.log_marginal(&witness)
}

/// Evaluates every grid value of `axis` with the other parameters taken from
/// `fixed`. Every point reuses the same trial seeds.
pub fn sweep(
    exec: &dyn Executor,
    instance_id: &str,
    problem: &IsingProblem,
    gt: &GroundTruth,
    axis: SweepAxis,
    grid: &[f64],
    fixed: &SolverConfig,
    est: &Estimation,
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(invalid("grid", "sweep grid is empty"));
    }
    let stream = Stream::new(est.base_seed);
    let finish = |k: usize, value: f64, batch: TrialBatch, ratio: Option<f64>| -> Result<SweepPoint> {
        let tts = batch.tts_point(est, stream.child_seed(DOMAIN_BOOTSTRAP, k as u64))?;
        Ok(SweepPoint {
            axis,
            value,
            tts,
            median_cut: batch.median_cut(),
            zero_cut_log_ratio: ratio,
            batch,
        })
    };
    match axis {
        SweepAxis::Samples => {
            let counts: Vec<u64> = grid
                .iter()
                .map(|&g| {
                    if g >= 1.0 && g == libm::floor(g) && g < 1e15 {
                        Ok(g as u64)
                    } else {
                        Err(invalid("grid", format!("sample count {g} is not a positive integer")))
                    }
                })
                .collect::<Result<_>>()?;
            let mut checkpoints = counts.clone();
            checkpoints.sort_unstable();
            checkpoints.dedup();
            let plan = TrialPlan::new(instance_id, problem, gt, fixed)?.with_checkpoints(&checkpoints)?;
            let batches = plan.run(exec, est.n_trials, est.base_seed)?;
            counts
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let idx = checkpoints.partition_point(|x| x < c);
                    finish(k, *c as f64, batches[idx][0].clone(), None)
                })
                .collect()
        }
        SweepAxis::Beta | SweepAxis::Coupling => grid
            .iter()
            .enumerate()
            .map(|(k, &value)| {
                let mut cfg = fixed.clone();
                if axis == SweepAxis::Beta {
                    cfg.beta = value;
                } else {
                    cfg.coupling = value;
                }
                let plan = TrialPlan::new(instance_id, problem, gt, &cfg)?;
                let ratio = (axis == SweepAxis::Coupling).then(|| zero_cut_log_ratio(plan.model(), gt));
                let batch = plan.run(exec, est.n_trials, est.base_seed)?.remove(0).remove(0);
                finish(k, value, batch, ratio)
            })
            .collect(),
    }
}

/// Minimum time to solution over a samples sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParetoPoint {
    /// `None` when no grid point ever reached the ground state.
    pub n_samples: Option<u64>,
    pub t_soln: f64,
}

/// Lowest `t_soln` over `points`, ties going to the smaller sample count.
pub fn pareto_tts(points: &[TtsPoint]) -> Result<ParetoPoint> {
    if points.is_empty() {
        return Err(Error::Empty);
    }
    let mut best = ParetoPoint {
        n_samples: None,
        t_soln: f64::INFINITY,
    };
    for p in points {
        if !p.t_soln.is_finite() {
            continue;
        }
        let better = match best.n_samples {
            None => true,
            Some(n) => p.t_soln < best.t_soln || (p.t_soln == best.t_soln && p.n_samples < n),
        };
        if better {
            best = ParetoPoint {
                n_samples: Some(p.n_samples),
                t_soln: p.t_soln,
            };
        }
    }
    if best.n_samples.is_none() {
        log::warn!("no sweep point reached the ground state; time to solution is unbounded");
    }
    Ok(best)
}
