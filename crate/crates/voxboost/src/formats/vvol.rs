//! Volume container: an ASCII header line `vvol v1 C D H W` followed by
//! `C*D*H*W` little-endian `f32` values in channel-major, z, y, x order.

use std::fs;
use std::path::Path;

use voxboost_core::encoder::VolumeTensor;

use crate::error::{CliError, CliResult};

const MAGIC: &str = "vvol v1";

pub fn encode(v: &VolumeTensor) -> Vec<u8> {
    let [c, d, h, w] = v.dims();
    let mut out = format!("{MAGIC} {c} {d} {h} {w}\n").into_bytes();
    out.reserve(v.data().len() * 4);
    for &x in v.data() {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<VolumeTensor, String> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or("missing header line")?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| "header is not ASCII")?;
    let dims_txt = header.strip_prefix(MAGIC).ok_or_else(|| format!("bad magic in header {header:?}"))?;
    let dims: Vec<usize> = dims_txt
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| format!("bad dimension {t:?}")))
        .collect::<Result<_, _>>()?;
    let dims: [usize; 4] = dims.try_into().map_err(|_| "header needs four dimensions".to_string())?;
    let n = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or("dimensions overflow")?;
    let body = &bytes[nl + 1..];
    if body.len() != n * 4 {
        return Err(format!("expected {} data bytes, found {}", n * 4, body.len()));
    }
    let data = body.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))).collect();
    VolumeTensor::new(dims, data).map_err(|e| e.to_string())
}

pub fn write(path: &Path, v: &VolumeTensor) -> CliResult<()> {
    fs::write(path, encode(v)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> CliResult<VolumeTensor> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|m| CliError::format(path, m))
}
