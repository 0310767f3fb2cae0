//! Binary checkpoints: magic `FRFL`, a u32 version, then little-endian metadata
//! and row-major real-space values for every field.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evolution::{FieldName, SimState, Variant};
use crate::spectral::{forward_transform, inverse_transform, GridSpec, ScalarField};

pub const MAGIC: &[u8; 4] = b"FRFL";
pub const VERSION: u32 = 1;

/// Model metadata and real-space fields as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub variant: Variant,
    pub alpha: f64,
    pub beta: f64,
    pub time: f64,
    pub fields: BTreeMap<FieldName, ScalarField>,
}

impl Snapshot {
    pub fn from_state(state: &SimState, variant: Variant, alpha: f64, beta: f64) -> Result<Self> {
        if state.fields.is_empty() {
            return Err(Error::Snapshot("state has no fields".into()));
        }
        let fields = state.fields.iter().map(|(k, f)| (*k, inverse_transform(f))).collect();
        Ok(Self { variant, alpha, beta, time: state.time, fields })
    }

    /// Spectral state; the step counter restarts at zero.
    pub fn to_state(&self) -> SimState {
        let fields = self.fields.iter().map(|(k, f)| (*k, forward_transform(f))).collect();
        SimState { time: self.time, fields, step_count: 0 }
    }

    pub fn grid(&self) -> &GridSpec {
        self.fields.values().next().expect("snapshot has a field").grid()
    }
}

/// Serializes a snapshot.
pub fn encode(snap: &Snapshot) -> Result<Vec<u8>> {
    let grid = *snap.fields.values().next().ok_or_else(|| Error::Snapshot("no fields".into()))?.grid();
    let n = grid.n();
    let (variant, alpha, beta) = (snap.variant, snap.alpha, snap.beta);
    let mut out = Vec::with_capacity(49 + snap.fields.len() * (1 + 8 * n * n));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&grid.box_length().to_le_bytes());
    out.extend_from_slice(&alpha.to_le_bytes());
    out.extend_from_slice(&beta.to_le_bytes());
    out.push(variant.tag());
    out.extend_from_slice(&snap.time.to_le_bytes());
    out.extend_from_slice(&(snap.fields.len() as u32).to_le_bytes());
    for (name, f) in &snap.fields {
        grid.check_same(f.grid())?;
        out.push(name.tag());
        for v in f.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, len: usize, what: &str) -> Result<&[u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Snapshot(format!("truncated while reading {what} at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

/// Parses a snapshot.
pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Snapshot(format!("bad magic {magic:?}, expected FRFL")));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}, expected {VERSION}")));
    }
    let n = r.u32("n")? as usize;
    let box_length = r.f64("box length")?;
    let grid = GridSpec::new(n, box_length).map_err(|e| Error::Snapshot(e.to_string()))?;
    let alpha = r.f64("alpha")?;
    let beta = r.f64("beta")?;
    let tag = r.u8("variant")?;
    let variant = Variant::from_tag(tag).ok_or_else(|| Error::Snapshot(format!("unknown variant tag {tag}")))?;
    let time = r.f64("time")?;
    let count = r.u32("field count")? as usize;
    if count != variant.fields().len() {
        return Err(Error::Snapshot(format!(
            "variant {} stores {} fields, found {count}",
            variant.name(),
            variant.fields().len()
        )));
    }
    let mut fields = BTreeMap::new();
    for _ in 0..count {
        let t = r.u8("field tag")?;
        let name = FieldName::from_tag(t).ok_or_else(|| Error::Snapshot(format!("unknown field tag {t}")))?;
        let raw = r.take(8 * n * n, name.name())?;
        let values: Vec<f64> =
            raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let field = ScalarField::new(grid, values)?;
        if !field.is_finite() {
            return Err(Error::Snapshot(format!("field {} holds non-finite values", name.name())));
        }
        if fields.insert(name, field).is_some() {
            return Err(Error::Snapshot(format!("field {} stored twice", name.name())));
        }
    }
    if variant.fields().iter().any(|f| !fields.contains_key(f)) {
        return Err(Error::Snapshot(format!("fields do not match variant {}", variant.name())));
    }
    if r.pos != bytes.len() {
        return Err(Error::Snapshot(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(Snapshot { variant, alpha, beta, time, fields })
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    fs::write(path, encode(snap)?)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    decode(&fs::read(path)?)
}
