use std::fs;
use std::path::Path;

use super::{FeatureTensor, LabelMap, PointCloud};
use crate::error::{Error, Result};

const RECORD_BYTES: usize = 16;

/// Reads a KITTI velodyne scan: `N x (x, y, z, intensity)` little-endian `f32`.
pub fn load_kitti_bin(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_kitti_bin(&bytes, path)
}

/// Decodes scan bytes; `origin` only labels errors.
pub fn decode_kitti_bin(bytes: &[u8], origin: &Path) -> Result<PointCloud> {
    if !bytes.len().is_multiple_of(RECORD_BYTES) {
        return Err(Error::malformed(
            origin,
            format!("length {} is not a multiple of {RECORD_BYTES}", bytes.len()),
        ));
    }
    let n = bytes.len() / RECORD_BYTES;
    let mut positions = Vec::with_capacity(n);
    let mut intensity = Vec::with_capacity(n);
    for (i, rec) in bytes.chunks_exact(RECORD_BYTES).enumerate() {
        let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap());
        let p = [f(0), f(1), f(2)];
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::malformed(origin, format!("non-finite position at point {i}")));
        }
        positions.push(p);
        intensity.push(f(3));
    }
    let features = FeatureTensor::new(n, 1, intensity).map_err(|e| Error::malformed(origin, e.to_string()))?;
    PointCloud::new(positions, features, None)
}

/// Encodes a single-channel cloud in KITTI `.bin` layout. Labels are not written.
pub fn encode_kitti_bin(cloud: &PointCloud) -> Result<Vec<u8>> {
    if cloud.channels() != 1 {
        return Err(Error::shape(format!(
            "KITTI scans carry exactly one feature channel, cloud has {}",
            cloud.channels()
        )));
    }
    let mut out = Vec::with_capacity(cloud.len() * RECORD_BYTES);
    for (p, &i) in cloud.positions().iter().zip(cloud.features().as_slice()) {
        for v in [p[0], p[1], p[2], i] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save_kitti_bin(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_kitti_bin(cloud)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads raw `.label` words without masking.
pub fn load_label_words(path: impl AsRef<Path>) -> Result<Vec<u32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::malformed(
            path,
            format!("length {} is not a multiple of 4", bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|w| u32::from_le_bytes(w.try_into().unwrap()))
        .collect())
}

pub fn save_label_words(words: &[u32], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a KITTI `.label` file, drops the instance half of each word and maps
/// the semantic id through `map`.
pub fn load_kitti_labels(path: impl AsRef<Path>, map: &LabelMap) -> Result<Vec<u32>> {
    Ok(load_label_words(path)?
        .into_iter()
        .map(|w| map.map(w & 0xFFFF))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcio::IGNORE;

    fn encode(records: &[[f32; 4]]) -> Vec<u8> {
        records
            .iter()
            .flat_map(|r| r.iter().flat_map(|v| v.to_le_bytes()))
            .collect()
    }

    #[test]
    fn decodes_two_points() {
        let bytes = encode(&[[1.0, 2.0, 3.0, 0.5], [4.0, 5.0, 6.0, 0.25]]);
        assert_eq!(bytes.len(), 32);
        let cloud = decode_kitti_bin(&bytes, Path::new("mem")).unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.positions(), &[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert_eq!(cloud.features().as_slice(), &[0.5, 0.25]);
        assert!(cloud.labels().is_none());
    }

    #[test]
    fn empty_and_truncated_files() {
        let cloud = decode_kitti_bin(&[], Path::new("mem")).unwrap();
        assert_eq!(cloud.len(), 0);
        assert_eq!(cloud.channels(), 1);
        let err = decode_kitti_bin(&[0u8; 17], Path::new("mem")).unwrap_err();
        assert!(matches!(err, Error::Malformed { .. }), "{err}");
    }

    #[test]
    fn nan_position_names_point() {
        let bytes = encode(&[[0.0; 4], [0.0, f32::NAN, 0.0, 0.0]]);
        let err = decode_kitti_bin(&bytes, Path::new("mem")).unwrap_err();
        assert!(err.to_string().contains("point 1"), "{err}");
    }

    #[test]
    fn labels_mask_instance_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.label");
        save_label_words(&[0x0001_0028, 0, 0, 0, 0x0002_0007], &path).unwrap();
        let map = LabelMap::parse("40 1\n0 0\n").unwrap();
        let labels = load_kitti_labels(&path, &map).unwrap();
        assert_eq!(labels, vec![1, 0, 0, 0, IGNORE]);
    }

    #[test]
    fn label_length_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.label");
        std::fs::write(&path, [0u8; 6]).unwrap();
        assert!(load_label_words(&path).is_err());
        assert!(matches!(
            load_label_words(dir.path().join("missing.label")),
            Err(Error::Io { .. })
        ));
    }
}
