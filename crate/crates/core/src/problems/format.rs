//! The `.prob` instance file.
//!
//! A file is a UTF-8 text header followed by a binary payload:
//!
//! ```text
//! ASMD-PROB 1
//! generator: example1
//! distribution: gumbel
//! seed: 1
//! summands: 75
//! dim: 1500
//! constraints: 50
//! objective: abs-linear
//! constraint: linear-max
//! setup: euclidean-ball
//! radius: 1
//! theta0: 1.4142135623730951
//! block: a 75 1500
//! block: b 75 1
//! block: alpha 50 1500
//! block: beta 50 1
//! payload-bytes: 1212600
//! end-header
//! <payload>
//! ```
//!
//! Every header line ends in a single `\n`. Reals in the header are written
//! in shortest round-trip form. `note:` lines may repeat. The payload is the
//! concatenation of the listed blocks in header order, each block being
//! `rows * cols` IEEE-754 binary64 values, little-endian, row-major.

use std::collections::HashMap;

use crate::linalg::Matrix;
use crate::{Error, ProxKind, ProxSetup, Result};

use super::{ConstraintSpec, GenerationMetadata, ObjectiveSpec, ProblemInstance};

pub const FORMAT_MAGIC: &str = "ASMD-PROB";
pub const FORMAT_VERSION: u32 = 1;
const END: &str = "end-header";

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

struct Block<'a> {
    name: &'a str,
    rows: usize,
    cols: usize,
    data: &'a [f64],
}

fn blocks(inst: &ProblemInstance) -> Vec<Block<'_>> {
    let mut out = Vec::new();
    match &inst.objective {
        ObjectiveSpec::AbsLinear { a, b } => {
            out.push(Block { name: "a", rows: a.rows(), cols: a.cols(), data: a.as_slice() });
            out.push(Block { name: "b", rows: b.len(), cols: 1, data: b });
        }
        ObjectiveSpec::QuadraticSum { matrices, op_norms } => {
            out.push(Block { name: "op_norms", rows: op_norms.len(), cols: 1, data: op_norms });
            for c in matrices {
                out.push(Block { name: "c", rows: c.rows(), cols: c.cols(), data: c.as_slice() });
            }
        }
        ObjectiveSpec::SumOfNorms { anchors } => {
            out.push(Block { name: "anchors", rows: anchors.rows(), cols: anchors.cols(), data: anchors.as_slice() });
        }
        ObjectiveSpec::SimplexQuadratic { a } => {
            out.push(Block { name: "a", rows: a.rows(), cols: a.cols(), data: a.as_slice() });
        }
    }
    let ConstraintSpec::LinearMax { alpha, beta } = &inst.constraints;
    out.push(Block { name: "alpha", rows: alpha.rows(), cols: alpha.cols(), data: alpha.as_slice() });
    out.push(Block { name: "beta", rows: beta.len(), cols: 1, data: beta });
    if let ProxKind::EuclideanBox { lower, upper } = inst.setup.kind() {
        out.push(Block { name: "lower", rows: lower.len(), cols: 1, data: lower });
        out.push(Block { name: "upper", rows: upper.len(), cols: 1, data: upper });
    }
    out
}

pub(super) fn encode(inst: &ProblemInstance) -> Vec<u8> {
    let m = &inst.metadata;
    let mut h = format!("{FORMAT_MAGIC} {FORMAT_VERSION}\n");
    h.push_str(&format!("generator: {}\n", m.generator.as_str()));
    h.push_str(&format!("distribution: {}\n", m.distribution.map_or("none", |d| d.as_str())));
    h.push_str(&format!("seed: {}\nsummands: {}\ndim: {}\nconstraints: {}\n", m.seed, m.summands, m.dim, m.constraints));
    for note in &m.notes {
        h.push_str(&format!("note: {}\n", note.replace(['\n', '\r'], " ")));
    }
    h.push_str(&format!("objective: {}\nconstraint: linear-max\nsetup: {}\n", inst.objective.name(), inst.setup.name()));
    if let ProxKind::EuclideanBall { radius } = inst.setup.kind() {
        h.push_str(&format!("radius: {radius}\n"));
    }
    h.push_str(&format!("theta0: {}\n", inst.setup.theta0()));
    let blocks = blocks(inst);
    let mut total = 0usize;
    for b in &blocks {
        h.push_str(&format!("block: {} {} {}\n", b.name, b.rows, b.cols));
        total += b.data.len() * 8;
    }
    h.push_str(&format!("payload-bytes: {total}\n{END}\n"));

    let mut out = h.into_bytes();
    out.reserve(total);
    for b in &blocks {
        for v in b.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| fmt_err(format!("bad value for `{key}`: `{v}`")))
}

pub(super) fn decode(bytes: &[u8]) -> Result<ProblemInstance> {
    // Locate the end of the header without assuming the payload is UTF-8.
    let marker = format!("\n{END}\n");
    let end = bytes
        .windows(marker.len())
        .position(|w| w == marker.as_bytes())
        .ok_or_else(|| fmt_err("missing end-header line"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| fmt_err("header is not UTF-8"))?;
    let payload = &bytes[end + marker.len()..];

    let mut lines = header.split('\n');
    let first = lines.next().unwrap_or_default();
    let version = first
        .strip_prefix(FORMAT_MAGIC)
        .map(str::trim)
        .ok_or_else(|| fmt_err("not a .prob file (bad magic)"))?;
    if version != FORMAT_VERSION.to_string() {
        return Err(fmt_err(format!("unsupported format version `{version}`")));
    }

    let mut fields: HashMap<&str, &str> = HashMap::new();
    let mut notes = Vec::new();
    let mut block_specs = Vec::new();
    for line in lines {
        let (key, value) = line.split_once(": ").ok_or_else(|| fmt_err(format!("malformed header line `{line}`")))?;
        match key {
            "note" => notes.push(value.to_string()),
            "block" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                let [name, rows, cols] = parts[..] else {
                    return Err(fmt_err(format!("malformed block line `{line}`")));
                };
                block_specs.push((name.to_string(), parse::<usize>("block rows", rows)?, parse::<usize>("block cols", cols)?));
            }
            _ => {
                if fields.insert(key, value).is_some() {
                    return Err(fmt_err(format!("duplicate header key `{key}`")));
                }
            }
        }
    }
    let get = |key: &str| fields.get(key).copied().ok_or_else(|| fmt_err(format!("missing header key `{key}`")));

    let declared: usize = parse("payload-bytes", get("payload-bytes")?)?;
    let expected: usize = block_specs.iter().map(|(_, r, c)| r * c * 8).sum();
    if declared != expected || payload.len() != expected {
        return Err(fmt_err(format!(
            "payload size mismatch: blocks need {expected} bytes, header says {declared}, file has {}",
            payload.len()
        )));
    }

    let mut offset = 0usize;
    let mut by_name: HashMap<String, Vec<Matrix>> = HashMap::new();
    for (name, rows, cols) in block_specs {
        let len = rows * cols;
        let data = payload[offset..offset + 8 * len]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        offset += 8 * len;
        by_name.entry(name).or_default().push(Matrix::from_row_major(rows, cols, data)?);
    }
    let take_all = |by_name: &mut HashMap<String, Vec<Matrix>>, name: &str| {
        by_name.remove(name).ok_or_else(|| fmt_err(format!("missing block `{name}`")))
    };
    let take = |by_name: &mut HashMap<String, Vec<Matrix>>, name: &str| -> Result<Matrix> {
        let mut v = take_all(by_name, name)?;
        if v.len() != 1 {
            return Err(fmt_err(format!("block `{name}` appears {} times", v.len())));
        }
        Ok(v.pop().expect("one block"))
    };
    let vector = |m: Matrix| -> Result<Vec<f64>> {
        if m.cols() != 1 {
            return Err(fmt_err("vector block must have one column"));
        }
        Ok(m.as_slice().to_vec())
    };

    let metadata = GenerationMetadata {
        generator: get("generator")?.parse()?,
        distribution: match get("distribution")? {
            "none" => None,
            d => Some(d.parse()?),
        },
        seed: parse("seed", get("seed")?)?,
        summands: parse("summands", get("summands")?)?,
        dim: parse("dim", get("dim")?)?,
        constraints: parse("constraints", get("constraints")?)?,
        notes,
    };
    let objective = match get("objective")? {
        "abs-linear" => ObjectiveSpec::AbsLinear { a: take(&mut by_name, "a")?, b: vector(take(&mut by_name, "b")?)? },
        "quadratic-sum" => {
            let op_norms = vector(take(&mut by_name, "op_norms")?)?;
            let matrices = take_all(&mut by_name, "c")?;
            if matrices.len() != op_norms.len() {
                return Err(fmt_err("quadratic-sum needs one norm per matrix"));
            }
            ObjectiveSpec::QuadraticSum { matrices, op_norms }
        }
        "sum-of-norms" => ObjectiveSpec::SumOfNorms { anchors: take(&mut by_name, "anchors")? },
        "simplex-quadratic" => ObjectiveSpec::SimplexQuadratic { a: take(&mut by_name, "a")? },
        other => return Err(fmt_err(format!("unknown objective `{other}`"))),
    };
    let constraints = match get("constraint")? {
        "linear-max" => ConstraintSpec::LinearMax { alpha: take(&mut by_name, "alpha")?, beta: vector(take(&mut by_name, "beta")?)? },
        other => return Err(fmt_err(format!("unknown constraint `{other}`"))),
    };
    let theta0: f64 = parse("theta0", get("theta0")?)?;
    let setup = match get("setup")? {
        "euclidean-ball" => ProxSetup::ball(metadata.dim, parse("radius", get("radius")?)?)?,
        "euclidean-box" => ProxSetup::boxed(vector(take(&mut by_name, "lower")?)?, vector(take(&mut by_name, "upper")?)?)?,
        "entropy-simplex" => ProxSetup::simplex(metadata.dim)?,
        other => return Err(fmt_err(format!("unknown setup `{other}`"))),
    }
    .with_theta0(theta0)?;
    if let Some(extra) = by_name.keys().next() {
        return Err(fmt_err(format!("unexpected block `{extra}`")));
    }

    let inst = ProblemInstance { objective, constraints, setup, metadata };
    // Shape consistency is checked by building the oracles.
    inst.oracles()?;
    if inst.setup.dim() != inst.metadata.dim {
        return Err(fmt_err("setup dimension disagrees with header"));
    }
    Ok(inst)
}
