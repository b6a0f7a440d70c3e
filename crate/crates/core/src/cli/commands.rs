use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::{CliError, CliResult, RunConfig, ScanArgs};
use crate::augment::{extract_instances, instance_cutmix, CutMixConfig, ExtractConfig, InstanceBank, RngStream};
use crate::error::Error;
use crate::gfm::{gfm_forward, GateParams};
use crate::index::{collision_stats, spherical_project, voxelize};
use crate::metrics::{AbsentClasses, ConfusionMatrix};
use crate::pcio::{
    load_kitti_bin, load_label_words, save_kitti_bin, save_label_words, save_tensor, FeatureTensor, LabelMap,
    PointCloud,
};
use crate::prop::{gather, scatter_average, GatherPlan, ScatterPlan};
use crate::synth::synthetic_scan;

/// Loads the scan named by `scan`, or a synthetic one. Returns the cloud and
/// the stem used for output file names.
pub(crate) fn load_scan(
    cfg: &RunConfig,
    scan: &ScanArgs,
    default_synthetic: Option<usize>,
) -> CliResult<(PointCloud, String)> {
    if let Some(path) = &scan.input {
        let path = cfg.resolve(path);
        let cloud = load_kitti_bin(&path)?;
        let stem = path
            .file_stem()
            .map_or_else(|| "scan".to_string(), |s| s.to_string_lossy().into_owned());
        return Ok((cloud, stem));
    }
    match scan.synthetic.or(default_synthetic) {
        Some(n) => Ok((synthetic_scan(n, cfg.seed), "synthetic".to_string())),
        None => Err(CliError::usage("give a scan path or --synthetic N")),
    }
}

fn create_out_dir(cfg: &RunConfig) -> CliResult<&Path> {
    let dir = cfg.out_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir)
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|e| Error::io(path, e).into())
}

fn thread_pool(cfg: &RunConfig) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {} threads: {e}", cfg.threads)))
}

/// Binary PGM (P5), 8-bit, row-major.
pub fn encode_pgm(width: u32, height: u32, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width as usize * height as usize);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub(crate) fn cmd_project(cfg: &RunConfig, scan: &ScanArgs, max_range: f64, out: &mut dyn Write) -> CliResult {
    if !(max_range > 0.0 && max_range.is_finite()) {
        return Err(CliError::usage(format!(
            "--max-range must be positive, got {max_range}"
        )));
    }
    let params = cfg.range_params()?;
    let (cloud, stem) = load_scan(cfg, scan, None)?;
    let ridx = spherical_project(&cloud, params)?;
    let (h, w) = (ridx.height() as usize, ridx.width() as usize);

    // Nearest return per pixel; empty pixels stay black.
    let mut depth = vec![0u8; h * w];
    for j in 0..ridx.num_occupied() {
        let rho = ridx
            .bucket(j)
            .iter()
            .map(|&i| ridx.range_of_point(i as usize))
            .fold(f64::INFINITY, f64::min);
        let (r, c) = ridx.bucket_pixel(j);
        depth[r as usize * w + c as usize] = (255.0 * rho / max_range).round().clamp(1.0, 255.0) as u8;
    }

    let means = scatter_average(cloud.features(), &ScatterPlan::new(&ridx))?;
    let ch = cloud.channels();
    let mut dense = FeatureTensor::zeros(h * w, ch);
    for j in 0..ridx.num_occupied() {
        let (r, c) = ridx.bucket_pixel(j);
        dense.row_mut(r as usize * w + c as usize).copy_from_slice(means.row(j));
    }

    let dir = create_out_dir(cfg)?;
    let pgm = dir.join(format!("{stem}.pgm"));
    write_file(&pgm, &encode_pgm(w as u32, h as u32, &depth))?;
    let feats = dir.join(format!("{stem}.features"));
    save_tensor(&dense, &feats)?;

    let stats = collision_stats(&ridx);
    let valid = ridx.valid().iter().filter(|&&v| v).count();
    writeln!(out, "points          {}", cloud.len())?;
    writeln!(out, "valid           {valid}")?;
    writeln!(out, "image           {h}x{w}")?;
    writeln!(out, "occupied        {}", stats.occupied)?;
    writeln!(out, "mean/pixel      {:.4}", stats.mean_per_bucket)?;
    writeln!(out, "max/pixel       {}", stats.max_per_bucket)?;
    writeln!(out, "multi fraction  {:.6}", stats.multi_fraction)?;
    writeln!(out, "wrote           {}", pgm.display())?;
    writeln!(out, "wrote           {}", feats.display())?;
    Ok(())
}

/// Whether `coarse` is an integer multiple of `fine`, so every fine voxel lies
/// inside one coarse voxel.
fn nested(fine: f64, coarse: f64) -> bool {
    let ratio = coarse / fine;
    ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-9
}

pub(crate) fn voxelize_report(cloud: &PointCloud, resolutions: &[f64]) -> CliResult<(String, bool)> {
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:>10} {:>10} {:>10} {:>11} {:>10} {:>11}",
        "resolution", "voxels", "points", "mean/voxel", "max/voxel", "multi-frac"
    );
    let mut counts = Vec::with_capacity(resolutions.len());
    for &r in resolutions {
        let vidx = voxelize(cloud, r)?;
        let s = collision_stats(&vidx);
        counts.push((r, s.occupied));
        let _ = writeln!(
            text,
            "{:>10.4} {:>10} {:>10} {:>11.4} {:>10} {:>11.6}",
            r, s.occupied, s.points, s.mean_per_bucket, s.max_per_bucket, s.multi_fraction
        );
    }
    counts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut checked = 0;
    let mut ok = true;
    for pair in counts.windows(2) {
        let ((fine, m_fine), (coarse, m_coarse)) = (pair[0], pair[1]);
        if !nested(fine, coarse) {
            continue;
        }
        checked += 1;
        if m_coarse > m_fine {
            ok = false;
            let _ = writeln!(
                text,
                "trend: FAIL {m_coarse} voxels at {coarse} exceed {m_fine} at {fine}"
            );
        }
    }
    if ok {
        if checked == 0 {
            let _ = writeln!(text, "trend: not checked (no nested resolution pairs)");
        } else {
            let _ = writeln!(text, "trend: ok ({checked} nested pairs non-increasing)");
        }
    }
    Ok((text, ok))
}

pub(crate) fn cmd_voxelize(cfg: &RunConfig, scan: &ScanArgs, out: &mut dyn Write) -> CliResult {
    let (cloud, _) = load_scan(cfg, scan, None)?;
    let (text, ok) = voxelize_report(&cloud, &cfg.voxel_resolutions)?;
    out.write_all(text.as_bytes())?;
    if ok {
        Ok(())
    } else {
        Err(CliError::check("voxel count grew with coarser resolution"))
    }
}

pub(crate) struct CutmixOptions {
    pub input_dir: PathBuf,
    pub rare: Vec<u32>,
    pub ground: Vec<u32>,
    pub count: usize,
    pub bank: Option<PathBuf>,
    pub link_distance: f64,
    pub min_points: usize,
}

struct Frame {
    stem: String,
    cloud: PointCloud,
    words: Vec<u32>,
}

fn list_files(dir: &Path, ext: &str) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn load_frame(bin: &Path) -> CliResult<Frame> {
    let cloud = load_kitti_bin(bin)?;
    let label_path = bin.with_extension("label");
    let words = load_label_words(&label_path)?;
    if words.len() != cloud.len() {
        return Err(Error::malformed(
            &label_path,
            format!("{} labels for {} points", words.len(), cloud.len()),
        )
        .into());
    }
    let cloud = cloud.with_labels(words.iter().map(|w| w & 0xFFFF).collect())?;
    let stem = bin
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Frame { stem, cloud, words })
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

pub(crate) fn cmd_cutmix(cfg: &RunConfig, opts: &CutmixOptions, out: &mut dyn Write) -> CliResult {
    let input_dir = cfg.resolve(&opts.input_dir);
    let bins = list_files(&input_dir, "bin")?;
    if bins.is_empty() {
        return Err(Error::Validation(format!("no .bin scans in {}", input_dir.display())).into());
    }
    let dir = create_out_dir(cfg)?;
    if same_dir(dir, &input_dir) {
        return Err(CliError::usage("output directory must differ from the input directory"));
    }
    let pool = thread_pool(cfg)?;
    let frames: Vec<Frame> = pool.install(|| bins.par_iter().map(|b| load_frame(b)).collect::<CliResult<_>>())?;

    let rare: BTreeSet<u32> = opts.rare.iter().copied().collect();
    let ground: BTreeSet<u32> = opts.ground.iter().copied().collect();
    let mut bank = InstanceBank::new(rare.clone(), ground);
    match &opts.bank {
        Some(path) => bank.extend(InstanceBank::load(cfg.resolve(path))?.iter().cloned())?,
        None => {
            let ecfg = ExtractConfig {
                link_distance: opts.link_distance,
                min_points: opts.min_points,
            };
            let per_frame: Vec<_> = pool.install(|| {
                frames
                    .par_iter()
                    .map(|f| extract_instances(&f.cloud, &rare, &ecfg))
                    .collect::<crate::Result<Vec<_>>>()
            })?;
            bank.extend(per_frame.into_iter().flatten())?;
        }
    }
    bank.save(dir.join("bank"))?;

    let mcfg = CutMixConfig {
        count: opts.count,
        ..CutMixConfig::default()
    };
    let seed = cfg.seed;
    let results: Vec<_> = pool.install(|| {
        frames
            .par_iter()
            .enumerate()
            .map(|(k, f)| -> CliResult<_> {
                let mut rng = RngStream::for_frame(seed, k as u64);
                let (mixed, summary) = instance_cutmix(&f.cloud, &bank, &mcfg, &mut rng)?;
                save_kitti_bin(&mixed, dir.join(format!("{}.bin", f.stem)))?;
                let mut words = f.words.clone();
                words.extend_from_slice(&mixed.labels().expect("labelled")[f.words.len()..]);
                save_label_words(&words, dir.join(format!("{}.label", f.stem)))?;
                Ok(summary)
            })
            .collect::<CliResult<Vec<_>>>()
    })?;

    let mut text = String::new();
    let _ = writeln!(text, "bank {} instances in classes {:?}", bank.len(), bank.classes());
    for (f, s) in frames.iter().zip(&results) {
        let _ = writeln!(
            text,
            "frame {} points {} pasted {} skipped {} added_points {}",
            f.stem,
            f.cloud.len(),
            s.pasted,
            s.skipped,
            s.pasted_points
        );
    }
    write_file(&dir.join("cutmix_summary.txt"), text.as_bytes())?;
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn with_file(path: &Path, e: Error) -> CliError {
    let mut err = CliError::from(e);
    err.message = format!("{}: {}", path.display(), err.message);
    err
}

pub(crate) fn cmd_eval(
    cfg: &RunConfig,
    pred_dir: &Path,
    gt_dir: &Path,
    num_classes: Option<u32>,
    count_absent: bool,
    out: &mut dyn Write,
) -> CliResult {
    let map = match (&cfg.label_map, num_classes) {
        (Some(path), _) => LabelMap::from_file(cfg.resolve(path))?,
        (None, Some(n)) if n > 0 => LabelMap::identity(n),
        _ => return Err(CliError::usage("eval needs --label-map or --num-classes N")),
    };
    let (pred_dir, gt_dir) = (cfg.resolve(pred_dir), cfg.resolve(gt_dir));
    let gts = list_files(&gt_dir, "label")?;
    if gts.is_empty() {
        return Err(Error::Validation(format!("no .label files in {}", gt_dir.display())).into());
    }
    let n = map.num_classes() as usize;
    let pool = thread_pool(cfg)?;
    let shards: Vec<ConfusionMatrix> = pool.install(|| {
        gts.par_iter()
            .map(|gt_path| -> CliResult<_> {
                let pred_path = pred_dir.join(gt_path.file_name().expect("file name"));
                let read = |p: &Path| -> CliResult<Vec<u32>> {
                    Ok(load_label_words(p)?.into_iter().map(|w| map.map(w & 0xFFFF)).collect())
                };
                let gt = read(gt_path)?;
                let pred = read(&pred_path)?;
                let mut cm = ConfusionMatrix::new(n);
                cm.accumulate(&gt, &pred).map_err(|e| with_file(&pred_path, e))?;
                Ok(cm)
            })
            .collect::<CliResult<_>>()
    })?;
    let mut total = ConfusionMatrix::new(n);
    for s in &shards {
        total.merge(s)?;
    }
    let absent = if count_absent {
        AbsentClasses::CountAsZero
    } else {
        AbsentClasses::Exclude
    };
    let report = total.miou_with(absent)?;
    let dir = create_out_dir(cfg)?;
    write_file(&dir.join("miou.txt"), report.to_listing().as_bytes())?;
    writeln!(out, "frames {}  points {}", gts.len(), total.total())?;
    out.write_all(report.to_table(None).as_bytes())?;
    Ok(())
}

fn median_ms(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}

fn time<R>(repeats: usize, mut f: impl FnMut() -> crate::Result<R>) -> crate::Result<f64> {
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        std::hint::black_box(f()?);
        samples.push(t.elapsed().as_secs_f64() * 1e3);
    }
    Ok(median_ms(samples))
}

pub(crate) fn cmd_bench(cfg: &RunConfig, scan: &ScanArgs, repeats: usize, out: &mut dyn Write) -> CliResult {
    if repeats == 0 {
        return Err(CliError::usage("--repeats must be at least 1"));
    }
    let (cloud, _) = load_scan(cfg, scan, Some(120_000))?;
    let params = cfg.range_params()?;
    let r = cfg.voxel_resolutions[0];
    let vidx = voxelize(&cloud, r)?;
    let ridx = spherical_project(&cloud, params)?;
    let feats = cloud.features();
    let vfeat = scatter_average(feats, &ScatterPlan::new(&vidx))?;
    let rfeat = scatter_average(feats, &ScatterPlan::new(&ridx))?;
    let tri = GatherPlan::trilinear(&cloud, &vidx)?;
    let bil = GatherPlan::bilinear(&ridx);
    let views = [feats.clone(), gather(&vfeat, &tri)?, gather(&rfeat, &bil)?];
    let gates = GateParams::zeros(&[feats.cols(); 3])?;

    let stages: Vec<(&str, f64)> = vec![
        ("voxelize", time(repeats, || voxelize(&cloud, r))?),
        ("project", time(repeats, || spherical_project(&cloud, params))?),
        (
            "scatter voxel",
            time(repeats, || scatter_average(feats, &ScatterPlan::new(&vidx)))?,
        ),
        (
            "scatter range",
            time(repeats, || scatter_average(feats, &ScatterPlan::new(&ridx)))?,
        ),
        (
            "trilinear gather",
            time(repeats, || gather(&vfeat, &GatherPlan::trilinear(&cloud, &vidx)?))?,
        ),
        (
            "bilinear gather",
            time(repeats, || gather(&rfeat, &GatherPlan::bilinear(&ridx)))?,
        ),
        ("gated fusion", time(repeats, || gfm_forward(&views, &gates))?),
        (
            "pipeline",
            time(repeats, || {
                let v = voxelize(&cloud, r)?;
                let p = spherical_project(&cloud, params)?;
                let vf = scatter_average(feats, &ScatterPlan::new(&v))?;
                let rf = scatter_average(feats, &ScatterPlan::new(&p))?;
                let a = gather(&vf, &GatherPlan::trilinear(&cloud, &v)?)?;
                let b = gather(&rf, &GatherPlan::bilinear(&p))?;
                gfm_forward(&[feats.clone(), a, b], &gates)
            })?,
        ),
    ];
    writeln!(
        out,
        "points {}  voxel {r} m  image {}x{}  repeats {repeats}",
        cloud.len(),
        params.height,
        params.width
    )?;
    writeln!(out, "{:<18} {:>10} {:>14}", "stage", "median ms", "Mpoints/s")?;
    for (name, ms) in stages {
        let rate = cloud.len() as f64 / (ms * 1e-3) / 1e6;
        writeln!(out, "{name:<18} {ms:>10.3} {rate:>14.2}")?;
    }
    Ok(())
}
