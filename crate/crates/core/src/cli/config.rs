use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::index::RangeParams;

/// Environment variable supplying the default dataset root.
pub const DATASET_ROOT_ENV: &str = "RPV_DATASET_ROOT";

/// Settings shared by every subcommand.
///
/// Precedence, lowest first: built-in defaults (dataset root from
/// `RPV_DATASET_ROOT`), the `--config` file, command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Relative input paths are resolved against this directory. Default `.`.
    pub dataset_root: PathBuf,
    /// "raw train" label map for `eval`. Default: none.
    pub label_map: Option<PathBuf>,
    /// Range-image rows. Default 64.
    pub range_height: u32,
    /// Range-image columns. Default 2048.
    pub range_width: u32,
    /// Upper vertical field of view, degrees. Default 3.
    pub fov_up_deg: f64,
    /// Lower vertical field of view, degrees. Default -25.
    pub fov_down_deg: f64,
    /// Voxel edge lengths in meters. Default 0.05, 0.1, 0.3.
    pub voxel_resolutions: Vec<f64>,
    /// Seed for every random draw. Default 0.
    pub seed: u64,
    /// Output directory. Default `out`.
    pub out_dir: PathBuf,
    /// Worker threads for per-frame commands; 0 uses every core. Default 1.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_root: std::env::var_os(DATASET_ROOT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(".")),
            label_map: None,
            range_height: 64,
            range_width: 2048,
            fov_up_deg: 3.0,
            fov_down_deg: -25.0,
            voxel_resolutions: vec![0.05, 0.1, 0.3],
            seed: 0,
            out_dir: PathBuf::from("out"),
            threads: 1,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, lineno: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {lineno}: bad value {value:?} for {key}")))
}

pub(crate) fn parse_resolutions(text: &str) -> Result<Vec<f64>> {
    let list: Vec<f64> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad voxel resolution {s:?}")))
        })
        .collect::<Result<_>>()?;
    if list.is_empty() || list.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Config(format!(
            "voxel resolutions must be positive, got {text:?}"
        )));
    }
    Ok(list)
}

impl RunConfig {
    /// Applies `key = value` lines on top of `self`. `#` starts a comment;
    /// unknown keys are rejected.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected 'key = value'")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "dataset_root" => self.dataset_root = PathBuf::from(value),
                "label_map" => self.label_map = Some(PathBuf::from(value)),
                "range_height" => self.range_height = parse_value(key, value, lineno)?,
                "range_width" => self.range_width = parse_value(key, value, lineno)?,
                "fov_up" => self.fov_up_deg = parse_value(key, value, lineno)?,
                "fov_down" => self.fov_down_deg = parse_value(key, value, lineno)?,
                "voxel_resolutions" => self.voxel_resolutions = parse_resolutions(value)?,
                "seed" => self.seed = parse_value(key, value, lineno)?,
                "out_dir" => self.out_dir = PathBuf::from(value),
                "threads" => self.threads = parse_value(key, value, lineno)?,
                other => return Err(Error::Config(format!("line {lineno}: unknown key {other:?}"))),
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    pub fn range_params(&self) -> Result<RangeParams> {
        if self.range_height == 0 || self.range_width == 0 {
            return Err(Error::Config(format!(
                "range image must be at least 1x1, got {}x{}",
                self.range_height, self.range_width
            )));
        }
        if !(self.fov_up_deg > self.fov_down_deg) {
            return Err(Error::Config(format!(
                "fov_up ({}) must exceed fov_down ({})",
                self.fov_up_deg, self.fov_down_deg
            )));
        }
        Ok(RangeParams {
            height: self.range_height,
            width: self.range_width,
            fov_up: self.fov_up_deg.to_radians(),
            fov_down: self.fov_down_deg.to_radians(),
        })
    }

    /// `path` if absolute, otherwise `dataset_root/path`.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.dataset_root.join(path)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!((c.range_height, c.range_width), (64, 2048));
        assert_eq!(c.voxel_resolutions, vec![0.05, 0.1, 0.3]);
        let p = c.range_params().unwrap();
        assert!((p.fov_up - 3f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn file_overrides() {
        let mut c = RunConfig::default();
        c.apply_text("# run\nseed = 7\nvoxel_resolutions = 0.1, 0.2\nrange_height=32 # nuScenes\nout_dir = /tmp/x\n")
            .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.voxel_resolutions, vec![0.1, 0.2]);
        assert_eq!(c.range_height, 32);
        assert_eq!(c.out_dir, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let mut c = RunConfig::default();
        assert!(c.apply_text("colour = red\n").is_err());
        assert!(c.apply_text("seed\n").is_err());
        assert!(c.apply_text("seed = -1\n").is_err());
        assert!(c.apply_text("voxel_resolutions = 0.1, -2\n").is_err());
        c.fov_up_deg = -30.0;
        assert!(c.range_params().is_err());
    }

    #[test]
    fn resolves_relative_paths() {
        let c = RunConfig {
            dataset_root: PathBuf::from("/data"),
            ..RunConfig::default()
        };
        assert_eq!(c.resolve(Path::new("a.bin")), PathBuf::from("/data/a.bin"));
        assert_eq!(c.resolve(Path::new("/x/a.bin")), PathBuf::from("/x/a.bin"));
    }
}
