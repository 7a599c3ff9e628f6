//! Little-endian binary snapshots of a Wigner field.
//!
//! | offset | size | content |
//! |---|---|---|
//! | 0 | 4 | magic `QXWF` |
//! | 4 | 4 | format version (u32) |
//! | 8 | 8 | `N_x`, `N_p` (u32 each) |
//! | 16 | 40 | `x₀`, `p₀`, `h_x`, `h_p` in zero-point units, `Ωt` (f64 each) |
//! | 56 | 1 | frame tag: 0 Liouville, 1 lab |
//! | 57 | 8·N | values, `k = i·N_p + j` |

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::PhaseGrid;
use crate::stepper::WignerField;

use super::config::Frame;

pub const MAGIC: &[u8; 4] = b"QXWF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 57;

/// Frame a stored field lives in. Unlike [`Frame`] this has no `Both`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotFrame {
    Liouville,
    Lab,
}

impl From<SnapshotFrame> for Frame {
    fn from(f: SnapshotFrame) -> Self {
        match f {
            SnapshotFrame::Liouville => Frame::Liouville,
            SnapshotFrame::Lab => Frame::Lab,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub field: WignerField,
    pub frame: SnapshotFrame,
}

pub fn encode(field: &WignerField, frame: SnapshotFrame) -> Vec<u8> {
    let g = field.grid;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx as u32).to_le_bytes());
    out.extend_from_slice(&(g.np as u32).to_le_bytes());
    for v in [g.x0, g.p0, g.hx, g.hp, field.time] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(match frame {
        SnapshotFrame::Liouville => 0,
        SnapshotFrame::Lab => 1,
    });
    for v in &field.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn format_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Format { offset: offset as u64, msg: msg.into() }
}

fn take<const N: usize>(bytes: &[u8], at: usize) -> Result<[u8; N]> {
    bytes
        .get(at..at + N)
        .map(|b| b.try_into().unwrap())
        .ok_or_else(|| format_err(bytes.len(), "unexpected end of file"))
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if &take::<4>(bytes, 0)? != MAGIC {
        return Err(format_err(0, "bad magic"));
    }
    let version = u32::from_le_bytes(take(bytes, 4)?);
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let nx = u32::from_le_bytes(take(bytes, 8)?) as usize;
    let np = u32::from_le_bytes(take(bytes, 12)?) as usize;
    let mut f = [0.0; 5];
    for (n, v) in f.iter_mut().enumerate() {
        *v = f64::from_le_bytes(take(bytes, 16 + 8 * n)?);
    }
    let frame = match take::<1>(bytes, 56)?[0] {
        0 => SnapshotFrame::Liouville,
        1 => SnapshotFrame::Lab,
        t => return Err(format_err(56, format!("unknown frame tag {t}"))),
    };
    let grid = PhaseGrid::new(nx, np, f[2], f[3], f[0], f[1]).map_err(|e| format_err(8, e.to_string()))?;
    let expected = HEADER_LEN + 8 * grid.len();
    if bytes.len() != expected {
        return Err(format_err(
            bytes.len().min(expected),
            format!("payload holds {} bytes, header implies {}", bytes.len() - HEADER_LEN, expected - HEADER_LEN),
        ));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Snapshot { field: WignerField { grid, values, time: f[4] }, frame })
}

pub fn write_snapshot<W: Write>(mut w: W, field: &WignerField, frame: SnapshotFrame) -> Result<()> {
    w.write_all(&encode(field, frame))?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn save(path: &Path, field: &WignerField, frame: SnapshotFrame) -> Result<()> {
    std::fs::write(path, encode(field, frame))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Snapshot> {
    decode(&std::fs::read(path)?)
}
