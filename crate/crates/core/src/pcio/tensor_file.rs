use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use super::FeatureTensor;
use crate::error::{Error, Result};

/// `<path>.meta`, the sidecar holding "M C\n".
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn save_tensor(t: &FeatureTensor<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = t.as_slice().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let meta = meta_path(path);
    fs::write(&meta, format!("{} {}\n", t.rows(), t.cols())).map_err(|e| Error::io(&meta, e))
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<FeatureTensor<f32>> {
    let path = path.as_ref();
    let meta = meta_path(path);
    let text = fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
    let dims: Vec<usize> = text
        .trim_end_matches('\n')
        .split(' ')
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::malformed(&meta, format!("expected \"M C\", got {text:?}")))?;
    let [rows, cols] = dims[..] else {
        return Err(Error::malformed(&meta, format!("expected \"M C\", got {text:?}")));
    };
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::malformed(&meta, "dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(Error::malformed(
            path,
            format!("{rows}x{cols} tensor needs {expected} bytes, file has {}", bytes.len()),
        ));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|w| f32::from_le_bytes(w.try_into().unwrap()))
        .collect();
    FeatureTensor::new(rows, cols, data).map_err(|e| Error::malformed(path, e.to_string()))
}
