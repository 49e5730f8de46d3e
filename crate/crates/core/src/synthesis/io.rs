//! Controller files (winning bit set, strategy, distances, spec echo) and
//! strategy CSV export.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Controller, Spec, StateSet};
use crate::abstraction::{ModelKind, SymbolicModel};
use crate::container::{Decoded, Encoded};
use crate::error::{Error, Result};
use crate::numfmt::fmt17;

pub const CONTROLLER_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "SWITCHSYM-CONTROLLER";

fn encode(ctrl: &Controller) -> Result<Encoded> {
    let spec = toml::to_string(&ctrl.spec).map_err(|e| Error::Format(format!("cannot serialize spec: {e}")))?;
    let mut payload = spec.as_bytes().to_vec();
    ctrl.winning.words().iter().for_each(|w| payload.extend_from_slice(&w.to_le_bytes()));
    ctrl.strategy.iter().for_each(|u| payload.extend_from_slice(&u.to_le_bytes()));
    if let Some(d) = &ctrl.distances {
        d.iter().for_each(|v| payload.extend_from_slice(&v.to_le_bytes()));
    }
    let fields = [
        ("model_checksum", format!("{:08x}", ctrl.model_checksum)),
        ("model_kind", ctrl.model_kind.name().to_string()),
        ("objective", ctrl.spec.kind.name().to_string()),
        ("states", ctrl.num_states().to_string()),
        ("winning", ctrl.winning.count().to_string()),
        ("distances", if ctrl.distances.is_some() { "yes" } else { "no" }.to_string()),
        ("spec_bytes", spec.len().to_string()),
    ];
    Ok(Encoded::new(MAGIC, CONTROLLER_FORMAT_VERSION, &fields, payload))
}

pub fn write_controller(ctrl: &Controller, mut w: impl Write) -> Result<()> {
    encode(ctrl)?.write(&mut w)
}

pub fn save_controller(ctrl: &Controller, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    write_controller(ctrl, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_controller(path: impl AsRef<Path>) -> Result<Controller> {
    read_controller(&fs::read(path)?)
}

pub fn read_controller(bytes: &[u8]) -> Result<Controller> {
    let d = Decoded::parse(bytes, MAGIC, CONTROLLER_FORMAT_VERSION)?;
    let states = d.num("states")?;
    let mut cur = d.reader();
    let spec_text = std::str::from_utf8(cur.bytes(d.num("spec_bytes")?)?)
        .map_err(|_| Error::Format("spec echo is not UTF-8".into()))?;
    let spec: Spec = toml::from_str(spec_text).map_err(|e| Error::Format(format!("bad spec echo: {e}")))?;
    let words = (0..states.div_ceil(64)).map(|_| cur.u64()).collect::<Result<Vec<_>>>()?;
    let winning = StateSet::from_words(states, words).ok_or_else(|| Error::Format("bad winning set".into()))?;
    let strategy = (0..states).map(|_| cur.u16()).collect::<Result<Vec<_>>>()?;
    let distances = match d.get("distances")? {
        "yes" => Some((0..states).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?),
        "no" => None,
        other => return Err(Error::Format(format!("bad distances flag {other:?}"))),
    };
    cur.finish()?;
    let model_kind = ModelKind::from_name(d.get("model_kind")?)
        .ok_or_else(|| Error::Format("unknown model kind".into()))?;
    Ok(Controller { model_checksum: d.hex("model_checksum")?, model_kind, spec, winning, strategy, distances })
}

/// `state,y1..yn,mode` for every winning state, modes numbered from 1.
pub fn write_strategy_csv(ctrl: &Controller, model: &dyn SymbolicModel, w: impl Write) -> Result<()> {
    let mut w = std::io::BufWriter::new(w);
    let n = model.state_dim();
    let header: Vec<String> = std::iter::once("state".to_string())
        .chain((1..=n).map(|i| format!("y{i}")))
        .chain(std::iter::once("mode".to_string()))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    let mut y = vec![0.0; n];
    for s in ctrl.winning.iter() {
        model.output_into(s, &mut y);
        let coords: Vec<String> = y.iter().map(|&v| fmt17(v)).collect();
        let mode = ctrl.mode(s).map_or(0, |u| u + 1);
        writeln!(w, "{s},{},{mode}", coords.join(","))?;
    }
    w.flush()?;
    Ok(())
}
