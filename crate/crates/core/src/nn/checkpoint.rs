//! Flat binary parameter layout.
//!
//! A single network is encoded as (all integers little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `UMNN` |
//! | 2 | format version, `1` |
//! | 1 | hidden activation (0 linear, 1 relu, 2 tanh) |
//! | 1 | output activation |
//! | 4 | number of layer widths `L+1` |
//! | 4·(L+1) | layer widths, `u32` each |
//! | 8 | parameter count `P`, `u64` |
//! | 8·P | parameters as `f64`, layer by layer: weights row-major `[in][out]`, then biases |
//!
//! A bundle of networks is a `u32` count followed by that many single
//! encodings back to back.

use alloc::vec::Vec;

use thiserror::Error;

use super::{Activation, DenseNet};

pub const MAGIC: [u8; 4] = *b"UMNN";
const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CheckpointError {
    #[error("checkpoint truncated")]
    Truncated,
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u16),
    #[error("unknown activation code {0}")]
    Activation(u8),
    #[error("parameter count does not match the layer widths")]
    Inconsistent,
    #[error("trailing bytes after the last network")]
    Trailing,
}

pub fn encode(net: &DenseNet) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 4 * net.dims().len() + 8 * net.param_count());
    write_net(net, &mut out);
    out
}

fn write_net(net: &DenseNet, out: &mut Vec<u8>) {
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(net.hidden_activation().code());
    out.push(net.output_activation().code());
    out.extend_from_slice(&(net.dims().len() as u32).to_le_bytes());
    for &d in net.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(net.param_count() as u64).to_le_bytes());
    for p in net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.buf.len() < n {
            return Err(CheckpointError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn net(&mut self) -> Result<DenseNet, CheckpointError> {
        if self.take(4)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = self.u16()?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let hc = self.u8()?;
        let oc = self.u8()?;
        let hidden = Activation::from_code(hc).ok_or(CheckpointError::Activation(hc))?;
        let output = Activation::from_code(oc).ok_or(CheckpointError::Activation(oc))?;
        let n = self.u32()? as usize;
        if n > self.buf.len() / 4 {
            return Err(CheckpointError::Truncated);
        }
        let dims = (0..n).map(|_| self.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let count = self.u64()? as usize;
        if count > self.buf.len() / 8 {
            return Err(CheckpointError::Truncated);
        }
        let params = (0..count)
            .map(|_| self.take(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))))
            .collect::<Result<Vec<_>, _>>()?;
        DenseNet::from_params(&dims, hidden, output, params).map_err(|_| CheckpointError::Inconsistent)
    }
}

pub fn decode(bytes: &[u8]) -> Result<DenseNet, CheckpointError> {
    let mut r = Reader { buf: bytes };
    let net = r.net()?;
    if !r.buf.is_empty() {
        return Err(CheckpointError::Trailing);
    }
    Ok(net)
}

pub fn encode_many<'a, I: IntoIterator<Item = &'a DenseNet>>(nets: I) -> Vec<u8> {
    let nets: Vec<&DenseNet> = nets.into_iter().collect();
    let mut out = Vec::new();
    out.extend_from_slice(&(nets.len() as u32).to_le_bytes());
    for n in nets {
        write_net(n, &mut out);
    }
    out
}

pub fn decode_many(bytes: &[u8]) -> Result<Vec<DenseNet>, CheckpointError> {
    let mut r = Reader { buf: bytes };
    let n = r.u32()? as usize;
    let mut nets = Vec::new();
    for _ in 0..n {
        nets.push(r.net()?);
    }
    if !r.buf.is_empty() {
        return Err(CheckpointError::Trailing);
    }
    Ok(nets)
}
