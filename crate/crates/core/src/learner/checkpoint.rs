//! Actor checkpoint file.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes  "COOPCPAC"
//! version    u32
//! agents     u32      K
//! seed       u64
//! total_hz   f64      bandwidth scale of the B feature
//! networks   u32      = K
//! per network:
//!   layers   u32      L
//!   dims     u32 × (L + 1)
//!   per layer: weights f64 × (in · out), row-major (in, out); biases f64 × out
//! ```

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::maddpg::ActorSet;
use super::nn::{Dense, Mlp};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"COOPCPAC";
pub const CHECKPOINT_VERSION: u32 = 1;
const MAX_DIM: u32 = 1 << 16;

pub fn write_checkpoint<W: Write>(actors: &ActorSet, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&(actors.actors.len() as u32).to_le_bytes())?;
    out.write_all(&actors.seed.to_le_bytes())?;
    out.write_all(&actors.total_hz.to_le_bytes())?;
    out.write_all(&(actors.actors.len() as u32).to_le_bytes())?;
    for net in &actors.actors {
        out.write_all(&(net.layers.len() as u32).to_le_bytes())?;
        for d in net.sizes() {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        for l in &net.layers {
            for v in l.w.iter().chain(l.b.iter()) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn u32_of<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| bad("truncated file"))?;
    Ok(u32::from_le_bytes(b))
}

fn u64_of<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| bad("truncated file"))?;
    Ok(u64::from_le_bytes(b))
}

fn f64_of<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(u64_of(r)?))
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<ActorSet> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(|_| bad("truncated file"))?;
    if &magic != MAGIC {
        return Err(bad("not an actor checkpoint"));
    }
    let version = u32_of(&mut input)?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let agents = u32_of(&mut input)?;
    let seed = u64_of(&mut input)?;
    let total_hz = f64_of(&mut input)?;
    let nets = u32_of(&mut input)?;
    if nets != agents || agents == 0 || agents > MAX_DIM {
        return Err(bad(format!("{nets} networks for {agents} agents")));
    }
    let mut actors = Vec::with_capacity(agents as usize);
    for _ in 0..nets {
        let layers = u32_of(&mut input)?;
        if layers == 0 || layers > 64 {
            return Err(bad(format!("{layers} layers")));
        }
        let dims = (0..=layers).map(|_| u32_of(&mut input)).collect::<Result<Vec<_>>>()?;
        if dims.iter().any(|&d| d == 0 || d > MAX_DIM) {
            return Err(bad(format!("layer dimensions {dims:?}")));
        }
        let mut net = Vec::with_capacity(layers as usize);
        for io in dims.windows(2) {
            let (i, o) = (io[0] as usize, io[1] as usize);
            let w = (0..i * o).map(|_| f64_of(&mut input)).collect::<Result<Vec<_>>>()?;
            let b = (0..o).map(|_| f64_of(&mut input)).collect::<Result<Vec<_>>>()?;
            net.push(Dense { w: Array2::from_shape_vec((i, o), w).expect("sized"), b: Array1::from(b) });
        }
        actors.push(Mlp { layers: net });
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(bad("trailing bytes"));
    }
    Ok(ActorSet { actors, total_hz, seed })
}

pub fn save_checkpoint(actors: &ActorSet, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_checkpoint(actors, std::io::BufWriter::new(f))
}

pub fn load_checkpoint(path: &Path) -> Result<ActorSet> {
    let f = std::fs::File::open(path)?;
    read_checkpoint(std::io::BufReader::new(f))
}
