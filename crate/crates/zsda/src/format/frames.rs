use std::path::Path;

use zsda_core::numerics::Matrix;

use super::{put_f64s, put_u32, read_bytes, write_file, Reader};
use crate::error::{Error, Result};

pub const FRAMES_MAGIC: &[u8; 4] = b"FRAM";

/// `FRAM`, `u32` rows, `u32` columns, then row-major `f64` values, all little-endian.
pub fn encode_frames(frames: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * frames.data().len());
    out.extend_from_slice(FRAMES_MAGIC);
    put_u32(&mut out, frames.rows());
    put_u32(&mut out, frames.cols());
    put_f64s(&mut out, frames.data());
    out
}

pub fn decode_frames(bytes: &[u8]) -> Result<Matrix, String> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != FRAMES_MAGIC {
        return Err("not a frames file".into());
    }
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let data = r.f64s(rows.checked_mul(cols).ok_or("length overflow")?)?;
    if !r.finished() {
        return Err("trailing bytes".into());
    }
    Matrix::from_vec(rows, cols, data).map_err(|e| e.to_string())
}

pub fn write_frames(path: &Path, frames: &Matrix) -> Result<()> {
    write_file(path, &encode_frames(frames))
}

pub fn read_frames(path: &Path) -> Result<Matrix> {
    decode_frames(&read_bytes(path)?).map_err(|m| Error::format(path, m))
}
