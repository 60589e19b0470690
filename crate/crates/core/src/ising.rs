//! Ising problems, spin states and their energies.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// The state space an energy function is written over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Convention {
    /// Spins in {-1, +1}.
    Bipolar,
    /// Bits in {0, 1}.
    Binary,
}

impl Convention {
    pub fn admits(self, value: i8) -> bool {
        match self {
            Convention::Bipolar => value == -1 || value == 1,
            Convention::Binary => value == 0 || value == 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Convention::Bipolar => "bipolar",
            Convention::Binary => "binary",
        }
    }
}

/// `E(s) = 1/2 sum_ij J_ij s_i s_j + sum_i a_i s_i` over a dense symmetric `J`.
///
/// `offset` is the constant that maps energies of this problem back onto the
/// problem it was derived from: `E_source(s) = E_self(image(s)) + offset`.
/// It is zero for problems that were not produced by a convention change.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IsingProblem {
    n: usize,
    couplings: Vec<f64>,
    fields: Vec<f64>,
    convention: Convention,
    offset: f64,
}

impl IsingProblem {
    /// Builds a problem from a row-major `n x n` coupling matrix.
    pub fn new(convention: Convention, couplings: Vec<f64>, fields: Vec<f64>) -> Result<Self> {
        let n = fields.len();
        if n == 0 {
            return Err(Error::InvalidProblem("problem needs at least one spin".into()));
        }
        if couplings.len() != n * n {
            return Err(Error::Dimension {
                what: "coupling matrix",
                expected: n * n,
                found: couplings.len(),
            });
        }
        for i in 0..n {
            if couplings[i * n + i] != 0.0 {
                return Err(Error::InvalidProblem(format!(
                    "diagonal coupling J[{i}][{i}] = {} must be zero",
                    couplings[i * n + i]
                )));
            }
            if !fields[i].is_finite() {
                return Err(Error::InvalidProblem(format!("field a[{i}] is not finite")));
            }
            for j in (i + 1)..n {
                let (a, b) = (couplings[i * n + j], couplings[j * n + i]);
                if !a.is_finite() {
                    return Err(Error::InvalidProblem(format!("J[{i}][{j}] is not finite")));
                }
                if a != b {
                    return Err(Error::InvalidProblem(format!(
                        "J[{i}][{j}] = {a} differs from J[{j}][{i}] = {b}"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            couplings,
            fields,
            convention,
            offset: 0.0,
        })
    }

    /// Builds a problem from an unordered edge list; `fields` may be empty for zero fields.
    pub fn from_edges(
        n: usize,
        convention: Convention,
        edges: &[(usize, usize, f64)],
        fields: &[(usize, f64)],
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidProblem("problem needs at least one spin".into()));
        }
        let mut j = vec![0.0; n * n];
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidProblem(format!(
                    "edge ({a}, {b}) out of range for n = {n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidProblem(format!("self-loop on spin {a}")));
            }
            j[a * n + b] = w;
            j[b * n + a] = w;
        }
        let mut a = vec![0.0; n];
        for &(i, v) in fields {
            if i >= n {
                return Err(Error::InvalidProblem(format!("field index {i} out of range")));
            }
            a[i] = v;
        }
        Self::new(convention, j, a)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// The same problem with its constant offset replaced.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.couplings[i * self.n..(i + 1) * self.n]
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn has_fields(&self) -> bool {
        self.fields.iter().any(|&a| a != 0.0)
    }

    /// Nonzero couplings as `(i, j, w)` with `i < j`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            ((i + 1)..self.n).filter_map(move |j| {
                let w = self.coupling(i, j);
                (w != 0.0).then_some((i, j, w))
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// True when every coupling is 0 or 1, i.e. the problem is a MAX-CUT graph.
    pub fn is_maxcut(&self) -> bool {
        self.couplings.iter().all(|&w| w == 0.0 || w == 1.0)
    }

    /// Largest number of nonzero couplings on any spin.
    pub fn max_degree(&self) -> usize {
        (0..self.n)
            .map(|i| self.row(i).iter().filter(|&&w| w != 0.0).count())
            .max()
            .unwrap_or(0)
    }

    fn check_state(&self, s: &SpinState) -> Result<()> {
        if s.len() != self.n {
            return Err(Error::Dimension {
                what: "spin state",
                expected: self.n,
                found: s.len(),
            });
        }
        if s.convention() != self.convention {
            return Err(Error::ConventionMismatch {
                problem: self.convention,
                state: s.convention(),
            });
        }
        Ok(())
    }

    /// `1/2 sum_i sum_j J_ij s_i s_j + sum_i a_i s_i`, summed over ordered pairs.
    pub fn energy(&self, s: &SpinState) -> Result<f64> {
        self.check_state(s)?;
        let x = s.values();
        let mut double = 0.0;
        for i in 0..self.n {
            let si = f64::from(x[i]);
            if si == 0.0 {
                continue;
            }
            let row = self.row(i);
            let mut acc = 0.0;
            for (j, &w) in row.iter().enumerate() {
                acc += w * f64::from(x[j]);
            }
            double += si * acc;
        }
        let field: f64 = self
            .fields
            .iter()
            .zip(x)
            .map(|(&a, &v)| a * f64::from(v))
            .sum();
        Ok(0.5 * double + field)
    }

    /// `sum_{i<j} J_ij s_i s_j`.
    pub fn pairwise_energy(&self, s: &SpinState) -> Result<f64> {
        self.check_state(s)?;
        let x = s.values();
        let mut e = 0.0;
        for (i, j, w) in self.edges() {
            e += w * f64::from(x[i]) * f64::from(x[j]);
        }
        Ok(e)
    }

    /// Number of unit edges whose endpoints disagree.
    pub fn cut_value(&self, s: &SpinState) -> Result<u64> {
        if s.convention() != Convention::Bipolar {
            return Err(Error::ConventionMismatch {
                problem: Convention::Bipolar,
                state: s.convention(),
            });
        }
        if s.len() != self.n {
            return Err(Error::Dimension {
                what: "spin state",
                expected: self.n,
                found: s.len(),
            });
        }
        self.ensure_maxcut()?;
        let x = s.values();
        Ok(self.edges().filter(|&(i, j, _)| x[i] != x[j]).count() as u64)
    }

    pub(crate) fn ensure_maxcut(&self) -> Result<()> {
        for i in 0..self.n {
            for j in 0..self.n {
                let w = self.coupling(i, j);
                if w != 0.0 && w != 1.0 {
                    return Err(Error::NotMaxCut { i, j, value: w });
                }
            }
        }
        Ok(())
    }

    /// Rewrites a bipolar problem over {0, 1} states: `J* = 4J`, `a* = 2(a - J 1)`.
    ///
    /// The returned problem's `offset` satisfies `E(s) = E*(v) + offset` for
    /// `v = (s + 1) / 2`.
    pub fn to_binary_convention(&self) -> Result<IsingProblem> {
        if self.convention == Convention::Binary {
            return Err(Error::AlreadyBinary);
        }
        let n = self.n;
        let couplings: Vec<f64> = self.couplings.iter().map(|&w| 4.0 * w).collect();
        let mut fields = vec![0.0; n];
        let mut total_j = 0.0;
        for i in 0..n {
            let row_sum: f64 = self.row(i).iter().sum();
            total_j += row_sum;
            fields[i] = 2.0 * (self.fields[i] - row_sum);
        }
        let total_a: f64 = self.fields.iter().sum();
        Ok(IsingProblem {
            n,
            couplings,
            fields,
            convention: Convention::Binary,
            offset: self.offset + 0.5 * total_j - total_a,
        })
    }
}

/// A spin configuration tagged with its alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpinState {
    values: Vec<i8>,
    convention: Convention,
}

impl SpinState {
    pub fn new(convention: Convention, values: Vec<i8>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, &v)| !convention.admits(v)) {
            return Err(Error::InvalidState(format!(
                "entry {i} = {v} is not a {} value",
                convention.name()
            )));
        }
        Ok(Self { values, convention })
    }

    pub fn bipolar(values: Vec<i8>) -> Result<Self> {
        Self::new(Convention::Bipolar, values)
    }

    pub fn binary(values: Vec<i8>) -> Result<Self> {
        Self::new(Convention::Binary, values)
    }

    /// Binary state from 0/1 bytes, as produced by the sampler.
    pub fn from_bits(bits: &[u8]) -> Self {
        Self {
            values: bits.iter().map(|&b| (b & 1) as i8).collect(),
            convention: Convention::Binary,
        }
    }

    pub fn uniform(convention: Convention, n: usize, up: bool) -> Self {
        let v = match (convention, up) {
            (_, true) => 1,
            (Convention::Bipolar, false) => -1,
            (Convention::Binary, false) => 0,
        };
        Self {
            values: vec![v; n],
            convention,
        }
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    /// The same configuration in the other alphabet (`v = (s + 1) / 2`).
    pub fn to_convention(&self, target: Convention) -> SpinState {
        let values = match (self.convention, target) {
            (a, b) if a == b => self.values.clone(),
            (Convention::Bipolar, Convention::Binary) => {
                self.values.iter().map(|&s| (s + 1) / 2).collect()
            }
            _ => self.values.iter().map(|&v| 2 * v - 1).collect(),
        };
        SpinState {
            values,
            convention: target,
        }
    }

    /// 0/1 bytes of the binary image.
    pub fn bits(&self) -> Vec<u8> {
        match self.convention {
            Convention::Binary => self.values.iter().map(|&v| v as u8).collect(),
            Convention::Bipolar => self.values.iter().map(|&s| u8::from(s > 0)).collect(),
        }
    }

    /// Global spin flip.
    pub fn flipped(&self) -> SpinState {
        let values = match self.convention {
            Convention::Bipolar => self.values.iter().map(|&s| -s).collect(),
            Convention::Binary => self.values.iter().map(|&v| 1 - v).collect(),
        };
        SpinState {
            values,
            convention: self.convention,
        }
    }

    /// Enumerates the `index`-th state of `2^n`: bit `i` of `index` sets spin `i`.
    pub fn from_index(convention: Convention, n: usize, index: u64) -> SpinState {
        let values = (0..n)
            .map(|i| {
                let up = (index >> i) & 1 == 1;
                match (convention, up) {
                    (_, true) => 1,
                    (Convention::Bipolar, false) => -1,
                    (Convention::Binary, false) => 0,
                }
            })
            .collect();
        SpinState { values, convention }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> IsingProblem {
        IsingProblem::from_edges(
            3,
            Convention::Bipolar,
            &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn triangle_energy_and_cut() {
        let p = triangle();
        let s = SpinState::bipolar(vec![1, 1, -1]).unwrap();
        assert_eq!(p.energy(&s).unwrap(), -1.0);
        assert_eq!(p.cut_value(&s).unwrap(), 2);
        assert_eq!(p.cut_value(&SpinState::uniform(Convention::Bipolar, 3, true)).unwrap(), 0);
    }

    #[test]
    fn ferromagnetic_pair() {
        let p = IsingProblem::from_edges(2, Convention::Bipolar, &[(0, 1, -1.0)], &[]).unwrap();
        let s = SpinState::bipolar(vec![1, 1]).unwrap();
        assert_eq!(p.energy(&s).unwrap(), -1.0);
    }

    #[test]
    fn double_sum_matches_upper_triangle() {
        let p = IsingProblem::from_edges(
            4,
            Convention::Bipolar,
            &[(0, 1, 0.5), (1, 3, -2.0), (2, 3, 1.25), (0, 2, 3.0)],
            &[(1, 0.75), (3, -1.0)],
        )
        .unwrap();
        for idx in 0..16 {
            let s = SpinState::from_index(Convention::Bipolar, 4, idx);
            let field: f64 = p.fields().iter().zip(s.values()).map(|(a, &v)| a * f64::from(v)).sum();
            let e = p.energy(&s).unwrap();
            assert_eq!(e, p.pairwise_energy(&s).unwrap() + field);
        }
    }

    #[test]
    fn dimension_and_convention_errors() {
        let p = triangle();
        let short = SpinState::bipolar(vec![1, 1]).unwrap();
        assert!(matches!(
            p.energy(&short),
            Err(Error::Dimension { expected: 3, found: 2, .. })
        ));
        let bin = SpinState::binary(vec![1, 0, 1]).unwrap();
        assert!(matches!(p.energy(&bin), Err(Error::ConventionMismatch { .. })));
    }

    #[test]
    fn construction_rejects_bad_matrices() {
        assert!(IsingProblem::new(Convention::Bipolar, vec![0.0, 1.0, 2.0, 0.0], vec![0.0; 2]).is_err());
        assert!(IsingProblem::new(Convention::Bipolar, vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 2]).is_err());
        assert!(IsingProblem::new(Convention::Bipolar, vec![], vec![]).is_err());
        assert!(IsingProblem::from_edges(3, Convention::Bipolar, &[(1, 1, 1.0)], &[]).is_err());
    }

    #[test]
    fn cut_requires_unit_couplings() {
        let p = IsingProblem::from_edges(2, Convention::Bipolar, &[(0, 1, -1.0)], &[]).unwrap();
        let s = SpinState::bipolar(vec![1, -1]).unwrap();
        assert!(matches!(p.cut_value(&s), Err(Error::NotMaxCut { .. })));
    }

    #[test]
    fn state_alphabet_is_checked() {
        assert!(SpinState::bipolar(vec![1, 0]).is_err());
        assert!(SpinState::binary(vec![1, -1]).is_err());
    }

    #[test]
    fn binary_transform_examples() {
        let p = IsingProblem::from_edges(2, Convention::Bipolar, &[(0, 1, -1.0)], &[]).unwrap();
        let b = p.to_binary_convention().unwrap();
        assert_eq!(b.couplings(), &[0.0, -4.0, -4.0, 0.0]);
        assert_eq!(b.fields(), &[2.0, 2.0]);
        assert_eq!(b.convention(), Convention::Binary);

        let q = IsingProblem::new(Convention::Bipolar, vec![0.0; 4], vec![1.0, -1.0]).unwrap();
        let qb = q.to_binary_convention().unwrap();
        assert_eq!(qb.couplings(), &[0.0; 4]);
        assert_eq!(qb.fields(), &[2.0, -2.0]);
        assert!(matches!(qb.to_binary_convention(), Err(Error::AlreadyBinary)));
    }

    #[test]
    fn conversions_round_trip() {
        let s = SpinState::bipolar(vec![1, -1, -1, 1]).unwrap();
        let v = s.to_convention(Convention::Binary);
        assert_eq!(v.values(), &[1, 0, 0, 1]);
        assert_eq!(v.to_convention(Convention::Bipolar), s);
        assert_eq!(s.bits(), v.bits());
        assert_eq!(s.flipped().values(), &[-1, 1, 1, -1]);
    }
}
