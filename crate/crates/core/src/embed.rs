//! Copy-node embedding of an Ising problem into a bipartite RBM.
//!
//! Every spin gets a visible and a hidden copy. Off-diagonal weights carry the
//! problem couplings, the diagonal ties each copy pair with the coupling
//! coefficient `C`, and the whole parameter set is rewritten from bipolar to
//! binary units and multiplied by the inverse temperature `beta`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::ising::{Convention, IsingProblem, SpinState};

/// Two's-complement fixed-point grid with `frac_bits` fractional bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPointGrid {
    pub total_bits: u32,
    pub frac_bits: u32,
    pub saturating: bool,
}

impl Default for FixedPointGrid {
    /// 9-bit words with a 2^-2 step: range [-64, 63.75].
    fn default() -> Self {
        Self {
            total_bits: 9,
            frac_bits: 2,
            saturating: true,
        }
    }
}

impl FixedPointGrid {
    pub fn new(total_bits: u32, frac_bits: u32, saturating: bool) -> Result<Self> {
        if !(2..=32).contains(&total_bits) {
            return Err(invalid("total_bits", format!("{total_bits} not in 2..=32")));
        }
        if frac_bits >= total_bits + 16 {
            return Err(invalid("frac_bits", format!("{frac_bits} too large")));
        }
        Ok(Self {
            total_bits,
            frac_bits,
            saturating,
        })
    }

    pub fn step(&self) -> f64 {
        libm::ldexp(1.0, -(self.frac_bits as i32))
    }

    pub fn min(&self) -> f64 {
        -libm::ldexp(1.0, self.total_bits as i32 - 1) * self.step()
    }

    pub fn max(&self) -> f64 {
        (libm::ldexp(1.0, self.total_bits as i32 - 1) - 1.0) * self.step()
    }

    pub fn contains(&self, x: f64) -> bool {
        let steps = x / self.step();
        steps == libm::rint(steps) && x >= self.min() && x <= self.max()
    }

    /// Nearest grid point, ties to the even multiple of the step.
    pub fn round(&self, x: f64) -> Option<f64> {
        let q = libm::rint(x / self.step()) * self.step();
        if q < self.min() {
            self.saturating.then(|| self.min())
        } else if q > self.max() {
            self.saturating.then(|| self.max())
        } else {
            Some(q)
        }
    }
}

/// Sign of the diagonal weight tying visible copy `i` to hidden copy `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CouplingSign {
    /// Bipolar `w_ii = +C`: agreeing copies are favoured.
    #[default]
    Aligning,
    /// Bipolar `w_ii = -C`: disagreeing copies are favoured, so the model's
    /// mode is the visible/hidden split rather than a problem solution. Kept
    /// for reproducing models written with that sign.
    Opposing,
}

/// How problem couplings map onto off-diagonal weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PairScaling {
    /// `w_ij = w_ji = -J_ij`. Diagonal-state energy is `2 * pairwise + fields + const`.
    #[default]
    Doubled,
    /// `w_ij = w_ji = -J_ij / 2`. Diagonal-state energy is `E_I(s) + const`.
    ExactAffine,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmbedOptions {
    pub sign: CouplingSign,
    pub pairs: PairScaling,
    pub quantization: Option<FixedPointGrid>,
}

/// Binary-unit RBM: `E(v, h) = -(v^T W h + b^T h + c^T v)`, `beta` already applied.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RbmModel {
    n_vis: usize,
    n_hid: usize,
    /// Row-major `n_vis x n_hid`.
    weights: Vec<f64>,
    vis_bias: Vec<f64>,
    hid_bias: Vec<f64>,
    beta: f64,
    coupling: f64,
    quantization: Option<FixedPointGrid>,
}

impl RbmModel {
    /// A model from raw binary-unit parameters (`beta = 1`, no coupling record).
    pub fn new(
        n_vis: usize,
        n_hid: usize,
        weights: Vec<f64>,
        vis_bias: Vec<f64>,
        hid_bias: Vec<f64>,
    ) -> Result<Self> {
        Self::with_meta(n_vis, n_hid, weights, vis_bias, hid_bias, 1.0, 0.0)
    }

    pub fn with_meta(
        n_vis: usize,
        n_hid: usize,
        weights: Vec<f64>,
        vis_bias: Vec<f64>,
        hid_bias: Vec<f64>,
        beta: f64,
        coupling: f64,
    ) -> Result<Self> {
        if weights.len() != n_vis * n_hid {
            return Err(Error::Dimension {
                what: "weight matrix",
                expected: n_vis * n_hid,
                found: weights.len(),
            });
        }
        if vis_bias.len() != n_vis {
            return Err(Error::Dimension {
                what: "visible bias",
                expected: n_vis,
                found: vis_bias.len(),
            });
        }
        if hid_bias.len() != n_hid {
            return Err(Error::Dimension {
                what: "hidden bias",
                expected: n_hid,
                found: hid_bias.len(),
            });
        }
        let m = Self {
            n_vis,
            n_hid,
            weights,
            vis_bias,
            hid_bias,
            beta,
            coupling,
            quantization: None,
        };
        if let Some((name, _)) = m.parameters().find(|(_, x)| !x.is_finite()) {
            return Err(invalid("model", format!("{name} is not finite")));
        }
        Ok(m)
    }

    pub fn n_vis(&self) -> usize {
        self.n_vis
    }

    pub fn n_hid(&self) -> usize {
        self.n_hid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights from visible unit `i` to every hidden unit.
    #[inline]
    pub fn weight_row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n_hid..(i + 1) * self.n_hid]
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n_hid + j]
    }

    pub fn vis_bias(&self) -> &[f64] {
        &self.vis_bias
    }

    pub fn hid_bias(&self) -> &[f64] {
        &self.hid_bias
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn quantization(&self) -> Option<FixedPointGrid> {
        self.quantization
    }

    fn parameters(&self) -> impl Iterator<Item = (ParamName, f64)> + '_ {
        let w = self
            .weights
            .iter()
            .enumerate()
            .map(move |(k, &x)| (ParamName::Weight(k / self.n_hid, k % self.n_hid), x));
        let c = self
            .vis_bias
            .iter()
            .enumerate()
            .map(|(i, &x)| (ParamName::VisBias(i), x));
        let b = self
            .hid_bias
            .iter()
            .enumerate()
            .map(|(j, &x)| (ParamName::HidBias(j), x));
        w.chain(c).chain(b)
    }

    /// Every parameter multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> RbmModel {
        RbmModel {
            weights: self.weights.iter().map(|x| x * factor).collect(),
            vis_bias: self.vis_bias.iter().map(|x| x * factor).collect(),
            hid_bias: self.hid_bias.iter().map(|x| x * factor).collect(),
            beta: self.beta * factor,
            ..self.clone()
        }
    }

    /// True when every parameter is a multiple of 2^-20 below 2^20 in magnitude,
    /// which makes every pre-activation sum exact in `f64` regardless of order.
    pub fn is_dyadic(&self) -> bool {
        const SCALE: f64 = 1_048_576.0;
        self.parameters()
            .all(|(_, x)| x.abs() <= SCALE && libm::rint(x * SCALE) == x * SCALE)
    }

    /// `b_j + sum_i W_ij v_i`, accumulated over set bits in ascending `i`.
    pub fn hidden_input_into(&self, v: &[u8], out: &mut [f64]) {
        out.copy_from_slice(&self.hid_bias);
        for (i, &bit) in v.iter().enumerate() {
            if bit != 0 {
                for (o, &w) in out.iter_mut().zip(self.weight_row(i)) {
                    *o += w;
                }
            }
        }
    }

    pub fn hidden_input(&self, v: &[u8]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_hid];
        self.hidden_input_into(v, &mut out);
        out
    }

    /// `c_i + sum_j W_ij h_j`, accumulated over set bits in ascending `j`.
    pub fn visible_input(&self, h: &[u8]) -> Vec<f64> {
        let mut out = self.vis_bias.clone();
        for (j, &bit) in h.iter().enumerate() {
            if bit != 0 {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += self.weight(i, j);
                }
            }
        }
        out
    }

    /// `-(v^T W h + b^T h + c^T v)` for 0/1 vectors.
    pub fn energy_bits(&self, v: &[u8], h: &[u8]) -> Result<f64> {
        if v.len() != self.n_vis {
            return Err(Error::Dimension {
                what: "visible state",
                expected: self.n_vis,
                found: v.len(),
            });
        }
        if h.len() != self.n_hid {
            return Err(Error::Dimension {
                what: "hidden state",
                expected: self.n_hid,
                found: h.len(),
            });
        }
        let mut s = 0.0;
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0 {
                continue;
            }
            s += self.vis_bias[i];
            for (j, &hj) in h.iter().enumerate() {
                if hj != 0 {
                    s += self.weight(i, j);
                }
            }
        }
        for (j, &hj) in h.iter().enumerate() {
            if hj != 0 {
                s += self.hid_bias[j];
            }
        }
        Ok(-s)
    }

    /// Energy of binary spin states.
    pub fn energy(&self, v: &SpinState, h: &SpinState) -> Result<f64> {
        for s in [v, h] {
            if s.convention() != Convention::Binary {
                return Err(Error::ConventionMismatch {
                    problem: Convention::Binary,
                    state: s.convention(),
                });
            }
        }
        self.energy_bits(&v.bits(), &h.bits())
    }

    /// Exact `log sum_h exp(-E(v, h))`: `c^T v + sum_j log(1 + exp(b_j + W_j^T v))`.
    pub fn log_marginal(&self, v: &[u8]) -> f64 {
        let hin = self.hidden_input(v);
        let vis: f64 = v
            .iter()
            .zip(&self.vis_bias)
            .filter(|(&b, _)| b != 0)
            .map(|(_, &c)| c)
            .sum();
        vis + hin.iter().map(|&x| softplus(x)).sum::<f64>()
    }
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

enum ParamName {
    Weight(usize, usize),
    VisBias(usize),
    HidBias(usize),
}

impl core::fmt::Display for ParamName {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ParamName::Weight(i, j) => write!(f, "W[{i}][{j}]"),
            ParamName::VisBias(i) => write!(f, "vis_bias[{i}]"),
            ParamName::HidBias(j) => write!(f, "hid_bias[{j}]"),
        }
    }
}

/// Builds the RBM whose most probable diagonal state encodes the ground state of `p`.
pub fn embed(p: &IsingProblem, coupling: f64, beta: f64, options: &EmbedOptions) -> Result<RbmModel> {
    if p.convention() != Convention::Bipolar {
        return Err(Error::ConventionMismatch {
            problem: Convention::Bipolar,
            state: p.convention(),
        });
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid("beta", format!("must be positive and finite, got {beta}")));
    }
    if !(coupling >= 0.0 && coupling.is_finite()) {
        return Err(invalid("coupling", format!("must be non-negative, got {coupling}")));
    }
    let n = p.n();
    let pair = match options.pairs {
        PairScaling::Doubled => 1.0,
        PairScaling::ExactAffine => 0.5,
    };
    let diag = match options.sign {
        CouplingSign::Aligning => coupling,
        CouplingSign::Opposing => -coupling,
    };

    // Bipolar parameters.
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = if i == j { diag } else { -pair * p.coupling(i, j) };
        }
    }
    let half_fields: Vec<f64> = p.fields().iter().map(|&a| -0.5 * a).collect();

    // Bipolar -> binary units: W* = 4W, b* = 2(b - W^T 1), c* = 2(c - W 1).
    let mut hid = vec![0.0; n];
    let mut vis = vec![0.0; n];
    for i in 0..n {
        let row: f64 = (0..n).map(|j| w[i * n + j]).sum();
        let col: f64 = (0..n).map(|k| w[k * n + i]).sum();
        vis[i] = 2.0 * (half_fields[i] - row);
        hid[i] = 2.0 * (half_fields[i] - col);
    }
    let weights = w.iter().map(|&x| 4.0 * x * beta).collect();
    let vis = vis.into_iter().map(|x| x * beta).collect();
    let hid = hid.into_iter().map(|x| x * beta).collect();
    let model = RbmModel::with_meta(n, n, weights, vis, hid, beta, coupling)?;

    match options.quantization {
        Some(grid) => {
            if !grid.contains(beta) {
                log::warn!(
                    "beta = {beta} is not on the fixed-point grid (step {}); parameters will be rounded",
                    grid.step()
                );
            }
            quantize(&model, grid)
        }
        None => Ok(model),
    }
}

/// Rounds every parameter onto `grid`.
pub fn quantize(m: &RbmModel, grid: FixedPointGrid) -> Result<RbmModel> {
    let round = |name: ParamName, x: f64| -> Result<f64> {
        grid.round(x).ok_or_else(|| Error::QuantizationOverflow {
            parameter: format!("{name}"),
            value: x,
            min: grid.min(),
            max: grid.max(),
        })
    };
    let n_hid = m.n_hid;
    let weights = m
        .weights
        .iter()
        .enumerate()
        .map(|(k, &x)| round(ParamName::Weight(k / n_hid, k % n_hid), x))
        .collect::<Result<Vec<_>>>()?;
    let vis_bias = m
        .vis_bias
        .iter()
        .enumerate()
        .map(|(i, &x)| round(ParamName::VisBias(i), x))
        .collect::<Result<Vec<_>>>()?;
    let hid_bias = m
        .hid_bias
        .iter()
        .enumerate()
        .map(|(j, &x)| round(ParamName::HidBias(j), x))
        .collect::<Result<Vec<_>>>()?;
    Ok(RbmModel {
        weights,
        vis_bias,
        hid_bias,
        quantization: Some(grid),
        ..m.clone()
    })
}

/// Describes the first parameter that is off `grid`, if any.
pub fn off_grid_parameter(m: &RbmModel, grid: &FixedPointGrid) -> Option<String> {
    m.parameters()
        .find(|(_, x)| !grid.contains(*x))
        .map(|(name, x)| format!("{name} = {x}"))
}
