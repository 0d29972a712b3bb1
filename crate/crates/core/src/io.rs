//! Binary snapshot format.
//!
//! A 48-byte little-endian header followed by `N^3` `f64` values, `x`
//! fastest:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 8    | magic `LNDSNAP\0`                       |
//! | 8      | 4    | format version (`u32`)                  |
//! | 12     | 4    | `N` (`u32`)                             |
//! | 16     | 8    | `L` (`f64`)                             |
//! | 24     | 8    | time (`f64`)                            |
//! | 32     | 8    | `gamma` of the producing run (`f64`)    |
//! | 40     | 8    | channel tag, NUL-padded ASCII (`f`, `axx`, ..., `c`, `q-divergence`) |
//!
//! An optional sidecar `<file>.json` holds provenance metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientFields, CHANNELS, CHANNEL_LABELS};
use crate::collision::CollisionOutput;
use crate::error::{LandauError, Result};
use crate::grid::{DistributionState, VelocityGrid};

pub const SNAPSHOT_MAGIC: [u8; 8] = *b"LNDSNAP\0";
pub const SNAPSHOT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub version: u32,
    pub grid: VelocityGrid,
    pub time: f64,
    pub gamma: f64,
    pub channel: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub values: Vec<f64>,
}

impl Snapshot {
    /// Interprets the values as a distribution (checked nonnegative).
    pub fn into_state(self) -> Result<DistributionState> {
        DistributionState::new(self.header.grid, self.values, self.header.time)
    }
}

fn encode_channel(tag: &str) -> Result<[u8; 8]> {
    let bytes = tag.as_bytes();
    if bytes.len() > 8 || !tag.is_ascii() {
        return Err(LandauError::Format(format!(
            "channel tag `{tag}` must be at most 8 ASCII bytes"
        )));
    }
    let mut out = [0u8; 8];
    out[..bytes.len()].copy_from_slice(bytes);
    Ok(out)
}

/// Writes nodal `values` with the given header fields.
pub fn write_values(
    path: &Path,
    grid: &VelocityGrid,
    values: &[f64],
    time: f64,
    gamma: f64,
    channel: &str,
) -> Result<()> {
    if values.len() != grid.len() {
        return Err(LandauError::GridMismatch(format!(
            "{} values for a grid of {} nodes",
            values.len(),
            grid.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(grid.points_per_axis() as u32).to_le_bytes())?;
    w.write_all(&grid.half_width().to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    w.write_all(&gamma.to_le_bytes())?;
    w.write_all(&encode_channel(channel)?)?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_snapshot(path: &Path, f: &DistributionState, gamma: f64) -> Result<()> {
    write_values(path, f.grid(), f.values(), f.time(), gamma, "f")
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head)
        .map_err(|e| LandauError::Format(format!("{}: truncated header ({e})", path.display())))?;
    if head[..8] != SNAPSHOT_MAGIC {
        return Err(LandauError::Format(format!("{}: not a snapshot file", path.display())));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().unwrap());
    let version = u32_at(8);
    if version != SNAPSHOT_VERSION {
        return Err(LandauError::Format(format!(
            "{}: format version {version}, this build reads version {SNAPSHOT_VERSION}",
            path.display()
        )));
    }
    let grid = VelocityGrid::new(u32_at(12) as usize, f64_at(16))
        .map_err(|e| LandauError::Format(format!("{}: bad grid in header ({e})", path.display())))?;
    let channel: String = head[40..48]
        .iter()
        .take_while(|b| **b != 0)
        .map(|b| *b as char)
        .collect();
    let mut raw = Vec::with_capacity(grid.len() * 8);
    r.read_to_end(&mut raw)?;
    if raw.len() != grid.len() * 8 {
        return Err(LandauError::Format(format!(
            "{}: expected {} values, found {} bytes",
            path.display(),
            grid.len(),
            raw.len()
        )));
    }
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Snapshot {
        header: SnapshotHeader {
            version,
            grid,
            time: f64_at(24),
            gamma: f64_at(32),
            channel,
        },
        values,
    })
}

/// `<path>.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_sidecar(path: &Path, metadata: &serde_json::Value) -> Result<()> {
    let mut w = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(&mut w, metadata)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// One snapshot per coefficient channel, named `<stem>-<channel>.snap`.
pub fn export_coefficients(dir: &Path, stem: &str, fields: &CoefficientFields, gamma: f64) -> Result<Vec<PathBuf>> {
    let mut out = Vec::with_capacity(CHANNELS);
    for (c, label) in CHANNEL_LABELS.iter().enumerate() {
        let path = dir.join(format!("{stem}-{label}.snap"));
        write_values(&path, &fields.grid, &fields.channel(c), fields.time, gamma, label)?;
        out.push(path);
    }
    Ok(out)
}

/// Operator output tagged `q-<form>` (truncated to the 8-byte tag).
pub fn export_collision(path: &Path, q: &CollisionOutput, time: f64, gamma: f64) -> Result<()> {
    let tag: String = format!("q-{}", q.form.label()).chars().take(8).collect();
    write_values(path, &q.grid, &q.values, time, gamma, &tag)?;
    write_sidecar(path, &serde_json::json!({ "form": q.form }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_maxwellian;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let f = make_maxwellian(g, 1.3, [0.1, -0.2, 0.3], 0.9).unwrap().with_time(0.125);
        let p = dir.path().join("f.snap");
        write_snapshot(&p, &f, -3.0).unwrap();
        let s = read_snapshot(&p).unwrap();
        assert_eq!(s.header.channel, "f");
        assert_eq!(s.header.gamma, -3.0);
        let back = s.into_state().unwrap();
        assert_eq!(back, f);
        assert_eq!(std::fs::metadata(&p).unwrap().len() as usize, HEADER_LEN + 8 * g.len());
    }

    #[test]
    fn version_mismatch_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let g = VelocityGrid::new(4, 2.0).unwrap();
        let p = dir.path().join("f.snap");
        write_snapshot(&p, &DistributionState::zeros(g), 0.0).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[8] = 9;
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(read_snapshot(&p), Err(LandauError::Format(_))));
    }
}
