//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "TLNN" | version: u32 | n_classes: u32 | entry*
//! entry = name_len: u32 | name: UTF-8 | rank: u32 | extents: u32 × rank
//!       | values: f32 × Π(extents)
//! ```
//!
//! Entries run until end of file. The eight parameter tensors are written
//! under their canonical names, optimizer moments as `<name>.adam_m` /
//! `<name>.adam_v`, and the shared step counter as a rank-0 `adam.step`.
//! Values are stored in 32-bit precision regardless of the in-memory
//! scalar type.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;

use super::tensor::Tensor;
use super::{ModelConfig, ModelState, ParamId};

pub const MAGIC: [u8; 4] = *b"TLNN";
pub const VERSION: u32 = 1;

/// Keeps absurd headers from causing huge allocations.
const MAX_NAME_LEN: u32 = 4096;
const MAX_RANK: u32 = 8;
const MAX_VALUES: u64 = 1 << 28;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    VersionMismatch(u32),
    #[error("checkpoint truncated: {0}")]
    Truncated(&'static str),
    #[error("entry name is not valid UTF-8")]
    BadName,
    #[error("entry header is implausible: {0}")]
    BadHeader(&'static str),
    #[error("class count {0} is not a valid model size")]
    BadClassCount(u32),
    #[error("missing parameter {0}")]
    MissingParam(&'static str),
    #[error("entry {name} has shape {found:?}, expected {expected:?}")]
    WrongShape {
        name: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },
}

pub fn save_checkpoint<T: Scalar>(state: &ModelState<T>, path: &Path) -> Result<(), CheckpointError> {
    let mut out = BufWriter::new(File::create(path)?);
    save_checkpoint_to(state, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn save_checkpoint_to<T: Scalar, W: Write>(
    state: &ModelState<T>,
    out: &mut W,
) -> Result<(), CheckpointError> {
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(state.n_classes() as u32).to_le_bytes())?;
    for id in ParamId::ALL {
        write_entry(out, id.name(), state.param(id))?;
    }
    for id in ParamId::ALL {
        let (m, v) = state.adam_moments(id);
        write_entry(out, &format!("{}.adam_m", id.name()), m)?;
        write_entry(out, &format!("{}.adam_v", id.name()), v)?;
    }
    write_entry(out, "adam.step", &Tensor::scalar(T::from_f64(state.step() as f64)))?;
    Ok(())
}

fn write_entry<T: Scalar, W: Write>(
    out: &mut W,
    name: &str,
    tensor: &Tensor<T>,
) -> Result<(), CheckpointError> {
    out.write_all(&(name.len() as u32).to_le_bytes())?;
    out.write_all(name.as_bytes())?;
    out.write_all(&(tensor.rank() as u32).to_le_bytes())?;
    for &extent in tensor.shape() {
        out.write_all(&(extent as u32).to_le_bytes())?;
    }
    for v in tensor.data() {
        out.write_all(&v.as_f32().to_le_bytes())?;
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelState<f32>, CheckpointError> {
    load_checkpoint_from(&mut BufReader::new(File::open(path)?))
}

pub fn load_checkpoint_from<R: Read>(input: &mut R) -> Result<ModelState<f32>, CheckpointError> {
    let mut magic = [0u8; 4];
    read_exact(input, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(input, "version")?;
    if version != VERSION {
        return Err(CheckpointError::VersionMismatch(version));
    }
    let n_classes = read_u32(input, "class count")?;
    if n_classes < 2 {
        return Err(CheckpointError::BadClassCount(n_classes));
    }

    let mut entries: HashMap<String, Tensor<f32>> = HashMap::new();
    while let Some((name, tensor)) = read_entry(input)? {
        entries.insert(name, tensor);
    }

    let config = ModelConfig::new(n_classes as usize);
    let mut state = ModelState::<f32>::zeroed(config);
    for id in ParamId::ALL {
        let expected = config.param_spec(id).shape;
        let tensor = entries
            .remove(id.name())
            .ok_or(CheckpointError::MissingParam(id.name()))?;
        if tensor.shape() != expected.as_slice() {
            return Err(CheckpointError::WrongShape {
                name: id.name().to_string(),
                found: tensor.shape().to_vec(),
                expected,
            });
        }
        *state.param_mut(id) = tensor;
    }
    for id in ParamId::ALL {
        let m = entries.remove(&format!("{}.adam_m", id.name()));
        let v = entries.remove(&format!("{}.adam_v", id.name()));
        if let (Some(m), Some(v)) = (m, v) {
            let expected = state.param(id).shape().to_vec();
            if m.shape() != expected.as_slice() || v.shape() != expected.as_slice() {
                return Err(CheckpointError::WrongShape {
                    name: format!("{}.adam_m/v", id.name()),
                    found: m.shape().to_vec(),
                    expected,
                });
            }
            state
                .set_adam_state(id, m, v)
                .expect("shape already validated");
        }
    }
    if let Some(step) = entries.remove("adam.step") {
        state.set_step(step.data().first().copied().unwrap_or(0.0) as u64);
    }
    // Unknown extra entries are tolerated for forward compatibility.
    Ok(state)
}

/// Reads one entry, or `None` at a clean end of file.
fn read_entry<R: Read>(input: &mut R) -> Result<Option<(String, Tensor<f32>)>, CheckpointError> {
    let mut len_bytes = [0u8; 4];
    match read_at_most(input, &mut len_bytes)? {
        0 => return Ok(None),
        4 => {}
        _ => return Err(CheckpointError::Truncated("entry name length")),
    }
    let name_len = u32::from_le_bytes(len_bytes);
    if name_len > MAX_NAME_LEN {
        return Err(CheckpointError::BadHeader("name length"));
    }
    let mut name_bytes = vec![0u8; name_len as usize];
    read_exact(input, &mut name_bytes, "entry name")?;
    let name = String::from_utf8(name_bytes).map_err(|_| CheckpointError::BadName)?;

    let rank = read_u32(input, "rank")?;
    if rank > MAX_RANK {
        return Err(CheckpointError::BadHeader("rank"));
    }
    let mut shape = Vec::with_capacity(rank as usize);
    let mut count: u64 = 1;
    for _ in 0..rank {
        let extent = read_u32(input, "extent")?;
        count = count.saturating_mul(extent as u64);
        shape.push(extent as usize);
    }
    if count > MAX_VALUES {
        return Err(CheckpointError::BadHeader("element count"));
    }
    let mut data = Vec::with_capacity(count as usize);
    let mut value = [0u8; 4];
    for _ in 0..count {
        read_exact(input, &mut value, "tensor values")?;
        data.push(f32::from_le_bytes(value));
    }
    let tensor = Tensor::from_vec(&shape, data).expect("length matches shape by construction");
    Ok(Some((name, tensor)))
}

fn read_u32<R: Read>(input: &mut R, what: &'static str) -> Result<u32, CheckpointError> {
    let mut bytes = [0u8; 4];
    read_exact(input, &mut bytes, what)?;
    Ok(u32::from_le_bytes(bytes))
}

fn read_exact<R: Read>(
    input: &mut R,
    buf: &mut [u8],
    what: &'static str,
) -> Result<(), CheckpointError> {
    if read_at_most(input, buf)? < buf.len() {
        return Err(CheckpointError::Truncated(what));
    }
    Ok(())
}

fn read_at_most<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<usize, CheckpointError> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}
