//! Binary trajectory dump.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//!      0     8  magic  b"SSFMDUMP"
//!      8     8  L      u64, samples per position
//!     16     8  K      u64, number of space steps
//!     24     8  flags  u64, bit 0 set: every position 0..=K is stored,
//!                      clear: only positions 0 and K are stored
//!     32     .  records
//! ```
//!
//! Each record is one realization: `P` position blocks in increasing
//! position order (`P = K + 1` or `2`), each block `L` pairs of `f64`
//! `(re, im)`. The record count is `(file_len - 32) / (P * L * 16)`.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SimulationGrid;

use super::propagate::PropagationRecord;

pub const MAGIC: [u8; 8] = *b"SSFMDUMP";
pub const HEADER_LEN: usize = 32;
pub const FLAG_FULL_TRAJECTORY: u64 = 1;

/// Decoded dump: `records[r][p][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDump {
    pub num_samples: usize,
    pub num_steps: usize,
    pub full_trajectory: bool,
    pub records: Vec<Vec<Vec<Complex64>>>,
}

impl TrajectoryDump {
    /// Positions stored for every record.
    pub fn positions(&self) -> Vec<usize> {
        if self.full_trajectory {
            (0..=self.num_steps).collect()
        } else {
            vec![0, self.num_steps]
        }
    }
}

pub fn write_dump<W: Write>(
    mut w: W,
    grid: &SimulationGrid,
    records: &[PropagationRecord],
    full_trajectory: bool,
) -> Result<()> {
    let l = grid.num_samples();
    let k = grid.num_steps();
    w.write_all(&MAGIC)?;
    w.write_all(&(l as u64).to_le_bytes())?;
    w.write_all(&(k as u64).to_le_bytes())?;
    let flags = if full_trajectory { FLAG_FULL_TRAJECTORY } else { 0 };
    w.write_all(&flags.to_le_bytes())?;
    let mut buf = Vec::with_capacity(l * 16);
    for rec in records {
        let blocks: Vec<&[Complex64]> = if full_trajectory {
            let t = rec.trajectory.as_ref().ok_or_else(|| {
                Error::MissingTrajectory(format!(
                    "realization {} was run without retaining its trajectory",
                    rec.realization
                ))
            })?;
            t.iter().map(|f| f.samples()).collect()
        } else {
            vec![rec.input.samples(), rec.output.samples()]
        };
        let expected = if full_trajectory { k + 1 } else { 2 };
        if blocks.len() != expected || blocks.iter().any(|b| b.len() != l) {
            return Err(Error::InvalidArgument(format!(
                "record {} does not match the grid (L = {l}, K = {k})",
                rec.realization
            )));
        }
        for b in blocks {
            buf.clear();
            for s in b {
                buf.extend_from_slice(&s.re.to_le_bytes());
                buf.extend_from_slice(&s.im.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
    }
    Ok(())
}

pub fn read_dump<R: Read>(mut r: R) -> Result<TrajectoryDump> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN || bytes[..8] != MAGIC {
        return Err(Error::MalformedDump("missing SSFMDUMP header".into()));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let (l, k, flags) = (word(8) as usize, word(16) as usize, word(24));
    if flags & !FLAG_FULL_TRAJECTORY != 0 {
        return Err(Error::MalformedDump(format!("unknown flags {flags:#x}")));
    }
    let full = flags & FLAG_FULL_TRAJECTORY != 0;
    let positions = if full { k + 1 } else { 2 };
    let record_len = positions * l * 16;
    let body = &bytes[HEADER_LEN..];
    if record_len == 0 || body.len() % record_len != 0 {
        return Err(Error::MalformedDump(format!(
            "body of {} bytes is not a whole number of {record_len}-byte records",
            body.len()
        )));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().unwrap());
    let records = body
        .chunks_exact(record_len)
        .map(|rec| {
            rec.chunks_exact(l * 16)
                .map(|blk| blk.chunks_exact(16).map(|p| Complex64::new(f(&p[..8]), f(&p[8..]))).collect())
                .collect()
        })
        .collect();
    Ok(TrajectoryDump {
        num_samples: l,
        num_steps: k,
        full_trajectory: full,
        records,
    })
}
