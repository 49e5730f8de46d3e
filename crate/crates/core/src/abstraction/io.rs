//! Model files: a text header with kind, parameters and counts, then a
//! little-endian payload (domain and transition table for grids, source state
//! and outputs for sequences).

use std::fs;
use std::io::Write;
use std::path::Path;

use super::grid::Successors;
use super::{AnyModel, GridModel, SequenceModel, SymbolicModel};
use crate::container::{Decoded, Encoded};
use crate::error::{Error, Result};
use crate::model::{Aabb, BoxSet, Lattice};
use crate::numfmt::fmt17;
use crate::quantizer::{GridParams, SeqParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "SWITCHSYM-MODEL";

fn encode(model: &AnyModel) -> Encoded {
    let mut payload = Vec::new();
    let fields = match model {
        AnyModel::Grid(g) => {
            for b in &g.domain.boxes {
                b.lo.iter().chain(&b.hi).for_each(|v| payload.extend_from_slice(&v.to_le_bytes()));
            }
            let (mode, transitions) = match &g.successors {
                Successors::Nearest(table) => {
                    table.iter().for_each(|t| payload.extend_from_slice(&t.to_le_bytes()));
                    ("nearest", table.len())
                }
                Successors::All { offsets, targets } => {
                    offsets.iter().for_each(|o| payload.extend_from_slice(&o.to_le_bytes()));
                    targets.iter().for_each(|t| payload.extend_from_slice(&t.to_le_bytes()));
                    ("all", targets.len())
                }
            };
            vec![
                ("kind", g.kind().name().to_string()),
                ("n", g.lattice.dim().to_string()),
                ("modes", g.modes.to_string()),
                ("tau", fmt17(g.tau)),
                ("eta", fmt17(g.eta)),
                ("epsilon", fmt17(g.epsilon)),
                ("dwell_steps", g.dwell_steps.unwrap_or(0).to_string()),
                ("lattice_points", g.lattice.len().to_string()),
                ("states", g.num_states().to_string()),
                ("boxes", g.domain.boxes.len().to_string()),
                ("successors", mode.to_string()),
                ("transitions", transitions.to_string()),
            ]
        }
        AnyModel::Sequence(s) => {
            s.source.iter().chain(&s.outputs).for_each(|v| payload.extend_from_slice(&v.to_le_bytes()));
            vec![
                ("kind", s.kind().name().to_string()),
                ("n", s.source.len().to_string()),
                ("modes", s.modes.to_string()),
                ("horizon", s.horizon.to_string()),
                ("tau", fmt17(s.tau)),
                ("epsilon", fmt17(s.epsilon)),
                ("dwell_steps", s.dwell_steps.unwrap_or(0).to_string()),
                ("eta_bar", fmt17(s.eta_bar)),
                ("sequences", s.sequence_count().to_string()),
                ("states", s.num_states().to_string()),
            ]
        }
    };
    Encoded::new(MAGIC, MODEL_FORMAT_VERSION, &fields, payload)
}

/// CRC-32 identifying a model; controllers record it.
pub fn model_checksum(model: &AnyModel) -> u32 {
    encode(model).checksum()
}

pub fn write_model(model: &AnyModel, mut w: impl Write) -> Result<()> {
    encode(model).write(&mut w)
}

pub fn save_model(model: &AnyModel, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    write_model(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AnyModel> {
    read_model(&fs::read(path)?)
}

pub fn read_model(bytes: &[u8]) -> Result<AnyModel> {
    let d = Decoded::parse(bytes, MAGIC, MODEL_FORMAT_VERSION)?;
    let n = d.num("n")?;
    let modes = d.num("modes")?;
    let dwell_steps = Some(d.num("dwell_steps")?).filter(|&k| k > 0);
    let mut cur = d.reader();
    let model = match d.get("kind")? {
        "grid" | "grid-dwell" => {
            let boxes = (0..d.num("boxes")?)
                .map(|_| {
                    let lo = (0..n).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
                    let hi = (0..n).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
                    Aabb::new(lo, hi)
                })
                .collect::<Result<Vec<_>>>()?;
            let domain = BoxSet::new(boxes);
            let params = GridParams { tau: d.real("tau")?, eta: d.real("eta")?, epsilon: d.real("epsilon")?, dwell_steps };
            let lattice = Lattice::new(&domain, params.eta)?;
            if lattice.len() != d.num("lattice_points")? {
                return Err(Error::Format("lattice size disagrees with header".into()));
            }
            let edges = lattice.len() * modes;
            let transitions = d.num("transitions")?;
            let successors = match d.get("successors")? {
                "nearest" => Successors::Nearest((0..transitions).map(|_| cur.u32()).collect::<Result<_>>()?),
                "all" => {
                    let offsets = (0..=edges).map(|_| cur.u64()).collect::<Result<Vec<_>>>()?;
                    let targets = (0..transitions).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
                    Successors::All { offsets, targets }
                }
                other => return Err(Error::Format(format!("unknown successor mode {other:?}"))),
            };
            AnyModel::Grid(GridModel::from_parts(domain, lattice, modes, &params, successors))
        }
        "seq" | "seq-dwell" => {
            let source = (0..n).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
            let count = d.num("sequences")?;
            let outputs = (0..count * n).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
            let params = SeqParams { tau: d.real("tau")?, horizon: d.num("horizon")?, source, epsilon: d.real("epsilon")?, dwell_steps };
            AnyModel::Sequence(SequenceModel::from_parts(&params, modes, outputs, d.real("eta_bar")?)?)
        }
        other => return Err(Error::Format(format!("unknown model kind {other:?}"))),
    };
    cur.finish()?;
    Ok(model)
}
