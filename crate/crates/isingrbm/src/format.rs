//! Plain-text file formats: problem instances, ground-truth sidecars, model
//! dumps and raw sample streams.
//!
//! Instance files look like
//!
//! ```text
//! # optional comments
//! ising 3 bipolar
//! offset 0.5
//! field 0 -1
//! 0 1 1
//! 1 2 1
//! ```
//!
//! `offset` and `field` lines are optional. Edges use 0-based indices and
//! decimal weights; each unordered pair may appear once (repeats must carry the
//! same weight).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use isingrbm_core::oracle::{GroundSource, GroundTruth};
use isingrbm_core::sampler::{Sample, SampleSink};
use isingrbm_core::{BitString, Convention, IsingProblem, RbmModel, SpinState};

use crate::error::{Error, Result};

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Meaningful lines with their 1-based numbers; blank lines and `#` comments
/// are dropped.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(k, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (k + 1, l.split_whitespace().collect()))
    })
}

fn num<T: std::str::FromStr>(path: &str, line: usize, what: &str, tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("invalid {what} `{tok}`")))
}

fn finite(path: &str, line: usize, what: &str, tok: &str) -> Result<f64> {
    let x: f64 = num(path, line, what, tok)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(parse_err(path, line, format!("{what} must be finite, got `{tok}`")))
    }
}

pub fn format_instance(p: &IsingProblem) -> String {
    let mut s = format!("ising {} {}\n", p.n(), p.convention().name());
    if p.offset() != 0.0 {
        let _ = writeln!(s, "offset {}", p.offset());
    }
    for (i, &a) in p.fields().iter().enumerate() {
        if a != 0.0 {
            let _ = writeln!(s, "field {i} {a}");
        }
    }
    for (i, j, w) in p.edges() {
        let _ = writeln!(s, "{i} {j} {w}");
    }
    s
}

/// Parses an instance; `origin` names the source in error messages.
pub fn parse_instance(text: &str, origin: &str) -> Result<IsingProblem> {
    let mut it = lines(text);
    let (hline, header) = it
        .next()
        .ok_or_else(|| parse_err(origin, 1, "empty file, expected `ising <n> <convention>`"))?;
    if header.len() != 3 || header[0] != "ising" {
        return Err(parse_err(origin, hline, "header must be `ising <n> <convention>`"));
    }
    let n: usize = num(origin, hline, "node count", header[1])?;
    if n == 0 {
        return Err(parse_err(origin, hline, "node count must be positive"));
    }
    let convention = match header[2] {
        "bipolar" => Convention::Bipolar,
        "binary" => Convention::Binary,
        other => {
            return Err(parse_err(
                origin,
                hline,
                format!("unknown convention `{other}` (expected bipolar or binary)"),
            ))
        }
    };
    let index = |line: usize, tok: &str| -> Result<usize> {
        let i: usize = num(origin, line, "node index", tok)?;
        if i >= n {
            return Err(parse_err(origin, line, format!("index {i} out of range for n = {n}")));
        }
        Ok(i)
    };
    let mut offset = 0.0;
    let mut fields = vec![0.0; n];
    let mut seen_field = vec![false; n];
    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (line, toks) in it {
        match toks.as_slice() {
            ["offset", v] => offset = finite(origin, line, "offset", v)?,
            ["field", i, a] => {
                let i = index(line, i)?;
                let a = finite(origin, line, "field", a)?;
                if seen_field[i] && fields[i] != a {
                    return Err(parse_err(origin, line, format!("conflicting field for node {i}")));
                }
                seen_field[i] = true;
                fields[i] = a;
            }
            [i, j, w] => {
                let (i, j) = (index(line, i)?, index(line, j)?);
                if i == j {
                    return Err(parse_err(origin, line, format!("self-loop {i} {j} forbidden")));
                }
                let w = finite(origin, line, "weight", w)?;
                let key = (i.min(j), i.max(j));
                if let Some(&old) = edges.get(&key) {
                    if old != w {
                        return Err(parse_err(
                            origin,
                            line,
                            format!("edge {} {} repeated with weight {w}, earlier {old}", key.0, key.1),
                        ));
                    }
                }
                edges.insert(key, w);
            }
            _ => return Err(parse_err(origin, line, "expected `i j w`, `field i a` or `offset x`")),
        }
    }
    let mut j = vec![0.0; n * n];
    for (&(a, b), &w) in &edges {
        j[a * n + b] = w;
        j[b * n + a] = w;
    }
    let p = IsingProblem::new(convention, j, fields)?;
    Ok(if offset != 0.0 { p.with_offset(offset) } else { p })
}

pub fn read_instance(path: &Path) -> Result<IsingProblem> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_instance(&text, &path.display().to_string())
}

pub fn write_instance(p: &IsingProblem, path: &Path) -> Result<()> {
    write_file(path, format_instance(p).as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Witness as `0`/`1` characters, node 0 first; `1` is spin up.
pub fn witness_string(s: &SpinState) -> String {
    s.bits().iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

pub fn format_ground_truth(gt: &GroundTruth) -> String {
    let mut s = format!("best_energy {}\n", gt.best_energy);
    if let Some(c) = gt.best_cut {
        let _ = writeln!(s, "best_cut {c}");
    }
    let _ = writeln!(s, "witness {}", witness_string(&gt.witness));
    let _ = writeln!(s, "source {}", gt.source.tag());
    s
}

/// Parses a sidecar and checks its witness against `p`.
pub fn parse_ground_truth(text: &str, origin: &str, p: &IsingProblem) -> Result<GroundTruth> {
    let mut energy = None;
    let mut cut = None;
    let mut witness = None;
    let mut source = None;
    for (line, toks) in lines(text) {
        match toks.as_slice() {
            ["best_energy", v] => energy = Some((line, finite(origin, line, "energy", v)?)),
            ["best_cut", v] => cut = Some(num::<u64>(origin, line, "cut", v)?),
            ["witness", w] => {
                if w.len() != p.n() || !w.bytes().all(|b| b == b'0' || b == b'1') {
                    return Err(parse_err(
                        origin,
                        line,
                        format!("witness must be {} characters of 0/1", p.n()),
                    ));
                }
                let bits: Vec<u8> = w.bytes().map(|b| b - b'0').collect();
                witness = Some(SpinState::from_bits(&bits).to_convention(p.convention()));
            }
            ["source", "exhaustive"] => source = Some(GroundSource::Exhaustive),
            ["source", "cross-checked"] => source = Some(GroundSource::CrossChecked),
            _ => return Err(parse_err(origin, line, "unrecognised ground-truth line")),
        }
    }
    let missing = |what: &str| parse_err(origin, 0, format!("missing `{what}` line"));
    let (eline, best_energy) = energy.ok_or_else(|| missing("best_energy"))?;
    let witness = witness.ok_or_else(|| missing("witness"))?;
    let source = source.ok_or_else(|| missing("source"))?;
    let attained = p.energy(&witness)?;
    if attained != best_energy {
        return Err(parse_err(
            origin,
            eline,
            format!("witness has energy {attained}, file claims {best_energy}"),
        ));
    }
    Ok(GroundTruth {
        best_energy,
        best_cut: cut,
        source,
        witness,
    })
}

/// Sidecar path for an instance file: the instance path with `.gt` appended.
pub fn sidecar_path(instance: &Path) -> std::path::PathBuf {
    let mut s = instance.as_os_str().to_owned();
    s.push(".gt");
    s.into()
}

pub fn write_ground_truth(gt: &GroundTruth, path: &Path) -> Result<()> {
    write_file(path, format_ground_truth(gt).as_bytes())
}

pub fn read_ground_truth(path: &Path, p: &IsingProblem) -> Result<GroundTruth> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ground_truth(&text, &path.display().to_string(), p)
}

/// Model dump: `rbm <n_vis> <n_hid> <beta> <C>`, then one line per weight row,
/// then the visible and hidden bias lines.
pub fn format_rbm(m: &RbmModel) -> String {
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut s = format!("rbm {} {} {} {}\n", m.n_vis(), m.n_hid(), m.beta(), m.coupling());
    for i in 0..m.n_vis() {
        let _ = writeln!(s, "{}", join(m.weight_row(i)));
    }
    let _ = writeln!(s, "{}", join(m.vis_bias()));
    let _ = writeln!(s, "{}", join(m.hid_bias()));
    s
}

pub fn parse_rbm(text: &str, origin: &str) -> Result<RbmModel> {
    let rows: Vec<(usize, Vec<&str>)> = lines(text).collect();
    let (hline, header) = rows
        .first()
        .ok_or_else(|| parse_err(origin, 1, "empty model dump"))?;
    if header.len() != 5 || header[0] != "rbm" {
        return Err(parse_err(origin, *hline, "header must be `rbm <n_vis> <n_hid> <beta> <C>`"));
    }
    let nv: usize = num(origin, *hline, "n_vis", header[1])?;
    let nh: usize = num(origin, *hline, "n_hid", header[2])?;
    let beta = finite(origin, *hline, "beta", header[3])?;
    let coupling = finite(origin, *hline, "coupling", header[4])?;
    if rows.len() != nv + 3 {
        return Err(parse_err(
            origin,
            *hline,
            format!("expected {} lines after the header, found {}", nv + 2, rows.len() - 1),
        ));
    }
    let vector = |(line, toks): &(usize, Vec<&str>), len: usize| -> Result<Vec<f64>> {
        if toks.len() != len {
            return Err(parse_err(origin, *line, format!("expected {len} values, found {}", toks.len())));
        }
        toks.iter().map(|t| finite(origin, *line, "value", t)).collect()
    };
    let mut w = Vec::with_capacity(nv * nh);
    for row in &rows[1..=nv] {
        w.extend(vector(row, nh)?);
    }
    let vis = vector(&rows[nv + 1], nv)?;
    let hid = vector(&rows[nv + 2], nh)?;
    Ok(RbmModel::with_meta(nv, nh, w, vis, hid, beta, coupling)?)
}

/// Writes every visible sample as one hex line.
pub struct HexSampleWriter<W: Write> {
    out: BufWriter<W>,
    scratch: BitString,
    error: Option<std::io::Error>,
}

impl<W: Write> HexSampleWriter<W> {
    pub fn new(out: W) -> Self {
        Self {
            out: BufWriter::new(out),
            scratch: BitString::from_bits(&[]),
            error: None,
        }
    }

    /// Flushes and reports the first write error, if any.
    pub fn finish(mut self) -> std::io::Result<()> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()
    }
}

impl<W: Write> SampleSink for HexSampleWriter<W> {
    fn accept(&mut self, s: &Sample<'_>) {
        if self.error.is_some() {
            return;
        }
        self.scratch.assign(s.visible);
        if let Err(e) = writeln!(self.out, "{}", self.scratch.to_hex()) {
            self.error = Some(e);
        }
    }
}
