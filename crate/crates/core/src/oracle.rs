//! Ground-truth providers: exhaustive enumeration and simulated annealing.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::ising::{Convention, IsingProblem, SpinState};
use crate::rng::{Stream, DOMAIN_SA_INIT, DOMAIN_SA_SWEEP};

/// Largest instance the exhaustive oracle accepts by default.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum GroundSource {
    /// Proven by enumerating every state.
    Exhaustive,
    /// Best of independent heuristic solvers; not a proof.
    CrossChecked,
}

impl GroundSource {
    pub fn tag(self) -> &'static str {
        match self {
            GroundSource::Exhaustive => "exhaustive",
            GroundSource::CrossChecked => "cross-checked",
        }
    }
}

/// Reference optimum for an instance.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruth {
    pub best_energy: f64,
    pub best_cut: Option<u64>,
    pub source: GroundSource,
    pub witness: SpinState,
}

impl GroundTruth {
    /// Builds a record from a witness, recomputing its energy and cut.
    pub fn from_witness(p: &IsingProblem, witness: SpinState, source: GroundSource) -> Result<Self> {
        let best_energy = p.energy(&witness)?;
        let best_cut = cut_if_defined(p, &witness);
        Ok(Self {
            best_energy,
            best_cut,
            source,
            witness,
        })
    }
}

pub(crate) fn cut_if_defined(p: &IsingProblem, s: &SpinState) -> Option<u64> {
    if p.convention() == Convention::Bipolar && p.is_maxcut() {
        p.cut_value(s).ok()
    } else {
        None
    }
}

#[inline]
fn down(c: Convention) -> i8 {
    match c {
        Convention::Bipolar => -1,
        Convention::Binary => 0,
    }
}

/// Minimum energy over all `2^n` states, by Gray-code enumeration with
/// incremental local fields. With zero fields on a bipolar problem the last
/// spin is pinned, halving the work by global flip symmetry.
pub fn exhaustive_ground_state(p: &IsingProblem) -> Result<GroundTruth> {
    exhaustive_ground_state_capped(p, DEFAULT_EXHAUSTIVE_CAP)
}

pub fn exhaustive_ground_state_capped(p: &IsingProblem, cap: usize) -> Result<GroundTruth> {
    let n = p.n();
    if n > cap || n > 40 {
        return Err(Error::OracleCapExceeded { n, cap: cap.min(40) });
    }
    let conv = p.convention();
    let symmetric = conv == Convention::Bipolar && !p.has_fields();
    let free = if symmetric { n - 1 } else { n };
    let lo = down(conv);
    let hi: i8 = 1;
    let mut s: Vec<i8> = alloc::vec![lo; n];
    let fields = p.fields();

    let mut local: Vec<f64> = (0..n)
        .map(|i| p.row(i).iter().zip(&s).map(|(&w, &x)| w * f64::from(x)).sum())
        .collect();
    let mut energy = p.energy(&SpinState::new(conv, s.clone())?)?;
    let mut best = energy;
    let mut best_gray: u64 = 0;

    for k in 1u64..(1u64 << free) {
        let b = k.trailing_zeros() as usize;
        let old = s[b];
        let new = if old == lo { hi } else { lo };
        let delta = f64::from(new - old);
        energy += delta * (local[b] + fields[b]);
        s[b] = new;
        let row = p.row(b);
        for (l, &w) in local.iter_mut().zip(row) {
            *l += w * delta;
        }
        if energy < best {
            best = energy;
            best_gray = k ^ (k >> 1);
        }
    }

    let witness: Vec<i8> = (0..n)
        .map(|i| if i < 64 && (best_gray >> i) & 1 == 1 { hi } else { lo })
        .collect();
    GroundTruth::from_witness(p, SpinState::new(conv, witness)?, GroundSource::Exhaustive)
}

/// Simulated-annealing schedule: `sweeps` Metropolis sweeps per restart with
/// inverse temperature ramped geometrically from `beta_start` to `beta_end`
/// (linearly when `beta_start` is zero).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SaSchedule {
    pub sweeps: u32,
    pub beta_start: f64,
    pub beta_end: f64,
    pub restarts: u32,
    pub seed: u64,
}

impl SaSchedule {
    pub fn new(sweeps: u32, restarts: u32, seed: u64) -> Self {
        Self {
            sweeps,
            beta_start: 0.1,
            beta_end: 3.0,
            restarts,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(invalid("sweeps", "must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(invalid("restarts", "must be at least 1"));
        }
        if !(self.beta_start >= 0.0 && self.beta_start <= self.beta_end && self.beta_end.is_finite()) {
            return Err(invalid(
                "beta",
                format!("need 0 <= beta_start <= beta_end, got {} and {}", self.beta_start, self.beta_end),
            ));
        }
        Ok(())
    }

    pub fn beta_at(&self, sweep: u32) -> f64 {
        if self.sweeps == 1 {
            return self.beta_end;
        }
        let t = f64::from(sweep) / f64::from(self.sweeps - 1);
        if self.beta_start > 0.0 {
            self.beta_start * libm::pow(self.beta_end / self.beta_start, t)
        } else {
            self.beta_start + (self.beta_end - self.beta_start) * t
        }
    }
}

/// Best state seen over all restarts of single-spin-flip Metropolis annealing.
pub fn sa_best(p: &IsingProblem, sched: &SaSchedule) -> Result<GroundTruth> {
    sched.validate()?;
    let n = p.n();
    let conv = p.convention();
    let lo = down(conv);
    let stream = Stream::new(sched.seed);
    let fields = p.fields();
    let mut best_energy = f64::INFINITY;
    let mut best_state: Vec<i8> = Vec::new();

    for restart in 0..sched.restarts {
        let mut s: Vec<i8> = (0..n)
            .map(|i| {
                if stream.word(DOMAIN_SA_INIT, u64::from(restart), i as u32) >> 31 == 1 {
                    1
                } else {
                    lo
                }
            })
            .collect();
        let mut local: Vec<f64> = (0..n)
            .map(|i| p.row(i).iter().zip(&s).map(|(&w, &x)| w * f64::from(x)).sum())
            .collect();
        let mut energy = p.energy(&SpinState::new(conv, s.clone())?)?;
        if energy < best_energy {
            best_energy = energy;
            best_state.clone_from(&s);
        }
        for sweep in 0..sched.sweeps {
            let beta = sched.beta_at(sweep);
            let position = (u64::from(restart) << 32) | u64::from(sweep);
            for block in 0..n.div_ceil(4) {
                let words = stream.block(DOMAIN_SA_SWEEP, position, block as u32);
                for (k, &word) in words.iter().enumerate() {
                    let i = 4 * block + k;
                    if i >= n {
                        break;
                    }
                    let new = if s[i] == lo { 1 } else { lo };
                    let delta = f64::from(new - s[i]);
                    let de = delta * (local[i] + fields[i]);
                    let accept = de <= 0.0
                        || crate::rng::word_to_open_unit(word) < libm::exp(-beta * de);
                    if !accept {
                        continue;
                    }
                    s[i] = new;
                    energy += de;
                    for (l, &w) in local.iter_mut().zip(p.row(i)) {
                        *l += w * delta;
                    }
                    if energy < best_energy {
                        best_energy = energy;
                        best_state.clone_from(&s);
                    }
                }
            }
        }
    }
    GroundTruth::from_witness(p, SpinState::new(conv, best_state)?, GroundSource::CrossChecked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::InstanceSpec;

    fn brute_force(p: &IsingProblem) -> f64 {
        (0..1u64 << p.n())
            .map(|k| p.energy(&SpinState::from_index(p.convention(), p.n(), k)).unwrap())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn triangle_maxcut() {
        let p = IsingProblem::from_edges(3, Convention::Bipolar, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], &[])
            .unwrap();
        let gt = exhaustive_ground_state(&p).unwrap();
        assert_eq!(gt.best_energy, -1.0);
        assert_eq!(gt.best_cut, Some(2));
        assert_eq!(gt.source, GroundSource::Exhaustive);
    }

    #[test]
    fn ferromagnetic_pair() {
        let p = IsingProblem::from_edges(2, Convention::Bipolar, &[(0, 1, -1.0)], &[]).unwrap();
        let gt = exhaustive_ground_state(&p).unwrap();
        assert_eq!(gt.best_energy, -1.0);
        assert_eq!(gt.witness.values()[0], gt.witness.values()[1]);
        assert_eq!(gt.best_cut, None);
    }

    #[test]
    fn gray_code_matches_plain_enumeration() {
        for seed in 0..6 {
            let mc = InstanceSpec::maxcut(10, seed).generate().unwrap();
            let sk = InstanceSpec::sk(9, seed).generate().unwrap();
            for p in [mc, sk] {
                let gt = exhaustive_ground_state(&p).unwrap();
                assert_eq!(gt.best_energy, brute_force(&p));
                assert_eq!(p.energy(&gt.witness).unwrap(), gt.best_energy);
                assert_eq!(p.energy(&gt.witness.flipped()).unwrap(), gt.best_energy);
            }
        }
    }

    #[test]
    fn fields_and_binary_problems_enumerate_everything() {
        let p = IsingProblem::from_edges(
            5,
            Convention::Bipolar,
            &[(0, 1, 1.0), (1, 2, -2.0), (3, 4, 0.5), (0, 4, 1.0)],
            &[(0, 0.7), (2, -1.3)],
        )
        .unwrap();
        let gt = exhaustive_ground_state(&p).unwrap();
        assert!((gt.best_energy - brute_force(&p)).abs() < 1e-12);
        let b = p.to_binary_convention().unwrap();
        let gb = exhaustive_ground_state(&b).unwrap();
        assert!((gb.best_energy - brute_force(&b)).abs() < 1e-12);
        assert!((gb.best_energy + b.offset() - gt.best_energy).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let p = InstanceSpec::maxcut(12, 1).generate().unwrap();
        assert!(matches!(
            exhaustive_ground_state_capped(&p, 10),
            Err(Error::OracleCapExceeded { n: 12, cap: 10 })
        ));
    }

    #[test]
    fn schedule_ramps() {
        let s = SaSchedule {
            sweeps: 3,
            beta_start: 0.5,
            beta_end: 2.0,
            restarts: 1,
            seed: 0,
        };
        assert!((s.beta_at(0) - 0.5).abs() < 1e-12);
        assert!((s.beta_at(1) - 1.0).abs() < 1e-12);
        assert!((s.beta_at(2) - 2.0).abs() < 1e-12);
        assert!(SaSchedule { beta_start: 3.0, ..s }.validate().is_err());
        assert!(SaSchedule { sweeps: 0, ..s }.validate().is_err());
    }

    #[test]
    fn infinite_temperature_smoke() {
        let p = InstanceSpec::maxcut(12, 4).generate().unwrap();
        let sched = SaSchedule {
            sweeps: 1,
            beta_start: 0.0,
            beta_end: 0.0,
            restarts: 1,
            seed: 8,
        };
        let gt = sa_best(&p, &sched).unwrap();
        assert!(gt.best_energy.is_finite());
        assert_eq!(p.energy(&gt.witness).unwrap(), gt.best_energy);
        assert_eq!(gt.source, GroundSource::CrossChecked);
    }

    #[test]
    fn annealing_finds_small_ground_states() {
        for seed in 0..5 {
            let p = InstanceSpec::sk(14, seed).generate().unwrap();
            let exact = exhaustive_ground_state(&p).unwrap();
            let sa = sa_best(&p, &SaSchedule::new(300, 4, seed)).unwrap();
            assert!(sa.best_energy >= exact.best_energy);
            assert_eq!(sa.best_energy, exact.best_energy, "seed {seed}");
        }
    }
}
