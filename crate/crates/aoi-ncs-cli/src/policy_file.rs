//! Binary policy files.
//!
//! Layout (little-endian):
//!
//! | field        | type           |
//! |--------------|----------------|
//! | magic        | `b"AOI1"`      |
//! | version      | `u32` (= 1)    |
//! | N            | `u32`          |
//! | M            | `u32`          |
//! | R            | `u32`          |
//! | cost kind    | `u8` (0 error, 1 aoi) |
//! | gamma        | `f64`          |
//! | action count | `u32`          |
//! | action list  | `u64` × count (N-bit masks, canonical order) |
//! | action index | `u8` × `M^N` (ascending state index, loop 0 least significant) |
//!
//! Indices are single bytes, so a file can hold at most 256 actions; the
//! writer rejects larger action sets.

use std::path::Path;

use aoi_ncs::mdp::Action;
use aoi_ncs::solver::{CostKind, PolicyTable};
use aoi_ncs::NetworkConfig;

use crate::runner::CliError;

pub const MAGIC: [u8; 4] = *b"AOI1";
pub const VERSION: u32 = 1;

pub fn write_policy(policy: &PolicyTable, path: &Path) -> Result<(), CliError> {
    let bytes = encode(policy)?;
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub fn encode(policy: &PolicyTable) -> Result<Vec<u8>, CliError> {
    let actions = policy.actions();
    if actions.len() > 256 {
        return Err(CliError::config(format!(
            "{} actions do not fit the byte-indexed policy format",
            actions.len()
        )));
    }
    let net = policy.network();
    let mut out = Vec::with_capacity(33 + 8 * actions.len() + policy.action_indices().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(net.loops() as u32).to_le_bytes());
    out.extend_from_slice(&net.max_age().to_le_bytes());
    out.extend_from_slice(&(net.resources() as u32).to_le_bytes());
    out.push(match policy.cost_kind() {
        CostKind::Error => 0,
        CostKind::Aoi => 1,
    });
    out.extend_from_slice(&policy.gamma().to_le_bytes());
    out.extend_from_slice(&(actions.len() as u32).to_le_bytes());
    for action in actions {
        out.extend_from_slice(&action.mask().to_le_bytes());
    }
    out.extend(policy.action_indices().iter().map(|&i| i as u8));
    Ok(out)
}

pub fn read_policy(path: &Path) -> Result<PolicyTable, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    decode(&bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn decode(bytes: &[u8]) -> Result<PolicyTable, String> {
    let mut cursor = Cursor { bytes, at: 0 };
    if cursor.take(4)? != MAGIC {
        return Err("bad magic, not a policy file".into());
    }
    let version = cursor.u32()?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let n = cursor.u32()? as usize;
    let m = cursor.u32()?;
    let r = cursor.u32()? as usize;
    let cost = match cursor.u8()? {
        0 => CostKind::Error,
        1 => CostKind::Aoi,
        other => return Err(format!("unknown cost kind {other}")),
    };
    let gamma = f64::from_le_bytes(cursor.take(8)?.try_into().unwrap());
    let action_count = cursor.u32()? as usize;
    let net = NetworkConfig::new(n, r, m).map_err(|e| e.to_string())?;
    let mut actions = Vec::with_capacity(action_count);
    for _ in 0..action_count {
        let mask = u64::from_le_bytes(cursor.take(8)?.try_into().unwrap());
        actions.push(Action::from_mask(mask));
    }
    let table: Vec<u16> = cursor
        .take(net.state_count())?
        .iter()
        .map(|&b| b as u16)
        .collect();
    if cursor.at != bytes.len() {
        return Err(format!(
            "{} trailing bytes after the action table",
            bytes.len() - cursor.at
        ));
    }
    PolicyTable::from_parts(net, cost, gamma, actions, table).map_err(|e| e.to_string())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], String> {
        if self.at + len > self.bytes.len() {
            return Err(format!(
                "truncated file: wanted {len} bytes at offset {}",
                self.at
            ));
        }
        let slice = &self.bytes[self.at..self.at + len];
        self.at += len;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}
