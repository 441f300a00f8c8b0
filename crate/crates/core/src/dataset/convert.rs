use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{augment, DatasetIndex, SampleRecord};
use crate::activity::{activity, mean_stats, ActivityStats};
use crate::codec::{ideal_bits, measured_bits, pack, reduction_ratio, TransmissionModel};
use crate::error::{Error, Result};
use crate::io::read_rgb;
use crate::raster::{resize, to_grayscale, GrayImage};
use crate::threshold::{encode_events, ThresholdMode, ThresholdSpec};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const REPORT_FILE: &str = "report.txt";

const MANIFEST_HEADER: [&str; 14] = [
    "file",
    "source",
    "class_id",
    "augmented",
    "side",
    "mode",
    "threshold",
    "event_activity",
    "on_fraction",
    "off_fraction",
    "active_rows",
    "ideal_bits",
    "measured_bits",
    "rgb_bits",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    /// `.scev` file name, relative to the output directory.
    pub file: String,
    pub source: PathBuf,
    pub class_id: usize,
    pub augmented: bool,
    pub side: usize,
    pub mode: ThresholdMode,
    pub threshold: f64,
    pub stats: ActivityStats,
    pub ideal_bits: u64,
    pub measured_bits: u64,
    pub rgb_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleFailure {
    pub index: usize,
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConversionReport {
    pub samples: usize,
    pub rows: Vec<ManifestRow>,
    pub failures: Vec<SampleFailure>,
    pub spec: ThresholdSpec,
    pub side: usize,
    pub mean_stats: ActivityStats,
    pub total_rgb_bits: u64,
    pub total_ideal_bits: u64,
    pub total_measured_bits: u64,
    /// Mean per-sample ideal reduction vs. 8-bit RGB, over samples with at
    /// least one active row.
    pub mean_ideal_reduction: Option<f64>,
    pub samples_without_events: usize,
}

impl ConversionReport {
    pub fn converted(&self) -> usize {
        self.rows.len()
    }

    /// Reduction if every row were transmitted.
    pub fn full_frame_reduction(&self) -> Option<f64> {
        let rgb = TransmissionModel::rgb8(self.side as u64, self.side as u64).ok()?;
        let sc = TransmissionModel::spatial_contrast(self.side as u64, self.side as u64, 1.0).ok()?;
        reduction_ratio(&rgb, &sc).ok()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                "n/a".to_string()
            } else {
                format!("{:.4}", num as f64 / den as f64)
            }
        };
        let _ = writeln!(s, "samples: {}", self.samples);
        let _ = writeln!(s, "converted: {}", self.converted());
        let _ = writeln!(s, "failures: {}", self.failures.len());
        let _ = writeln!(s, "mode: {}", self.spec.mode());
        let _ = writeln!(s, "threshold: {}", self.spec.value());
        let _ = writeln!(s, "side: {}", self.side);
        let _ = writeln!(s, "aggregation: unweighted mean over samples");
        let _ = writeln!(s, "mean_event_activity: {:.6}", self.mean_stats.event_activity);
        let _ = writeln!(s, "mean_on_fraction: {:.6}", self.mean_stats.on_fraction);
        let _ = writeln!(s, "mean_off_fraction: {:.6}", self.mean_stats.off_fraction);
        let _ = writeln!(s, "mean_active_rows: {:.6}", self.mean_stats.active_rows);
        let _ = writeln!(s, "total_rgb_bits: {}", self.total_rgb_bits);
        let _ = writeln!(s, "total_ideal_bits: {}", self.total_ideal_bits);
        let _ = writeln!(s, "total_measured_bits: {}", self.total_measured_bits);
        let _ = writeln!(
            s,
            "full_frame_reduction: {}",
            self.full_frame_reduction().map_or("n/a".into(), |r| format!("{r}"))
        );
        let _ = writeln!(
            s,
            "mean_ideal_reduction: {}",
            self.mean_ideal_reduction.map_or("n/a".into(), |r| format!("{r}"))
        );
        let _ = writeln!(s, "samples_without_events: {}", self.samples_without_events);
        let _ = writeln!(
            s,
            "aggregate_ideal_reduction: {}",
            ratio(self.total_rgb_bits, self.total_ideal_bits)
        );
        let _ = writeln!(
            s,
            "aggregate_measured_reduction: {}",
            ratio(self.total_rgb_bits, self.total_measured_bits)
        );
        let _ = writeln!(
            s,
            "measured_overhead: header 16 bytes + 2 bytes per active row + row padding"
        );
        for f in &self.failures {
            let _ = writeln!(s, "failed[{}]: {}: {}", f.index, f.path.display(), f.reason);
        }
        s
    }
}

/// Loads a record as a `side x side` grayscale image: ROI crop, augmentation
/// (synthetic samples only), luma, bilinear resize.
pub fn load_sample_gray(record: &SampleRecord, side: Option<usize>) -> Result<GrayImage> {
    let mut rgb = read_rgb(&record.path)?;
    if let Some(roi) = record.roi {
        rgb = rgb.crop(roi)?;
    }
    if let Some(p) = &record.augment {
        rgb = augment(&rgb, p);
    }
    let gray = to_grayscale(&rgb);
    match side {
        Some(side) => resize(&gray, side),
        None => Ok(gray),
    }
}

fn sample_file_name(i: usize, class_id: usize) -> String {
    format!("{i:06}_c{class_id:02}.scev")
}

fn convert_one(
    i: usize,
    record: &SampleRecord,
    spec: ThresholdSpec,
    side: usize,
    out_dir: &Path,
) -> Result<ManifestRow> {
    let gray = load_sample_gray(record, Some(side))?;
    let ev = encode_events(&gray, spec)?;
    let stream = pack(&ev)?;
    let file = sample_file_name(i, record.class_id);
    let path = out_dir.join(&file);
    fs::write(&path, stream.to_bytes()).map_err(|e| Error::io(&path, e))?;
    let stats = activity(&ev);
    let rgb = TransmissionModel::rgb8(side as u64, side as u64)?;
    Ok(ManifestRow {
        file,
        source: record.path.clone(),
        class_id: record.class_id,
        augmented: record.augment.is_some(),
        side,
        mode: spec.mode(),
        threshold: spec.value(),
        stats,
        ideal_bits: ideal_bits(&TransmissionModel::for_stream(&stream)),
        measured_bits: measured_bits(&stream),
        rgb_bits: ideal_bits(&rgb),
    })
}

/// Converts every record to a `.scev` file in `out_dir`, writing
/// [`MANIFEST_FILE`] and [`REPORT_FILE`] alongside. Per-sample failures are
/// recorded in the report and do not stop the run. Work is spread over the
/// current rayon pool; outputs are in index order.
pub fn convert_corpus(
    index: &DatasetIndex,
    spec: ThresholdSpec,
    side: usize,
    out_dir: &Path,
) -> Result<ConversionReport> {
    if side == 0 {
        return Err(Error::InvalidArgument("side must be >= 1".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let results: Vec<Result<ManifestRow>> = index
        .records
        .par_iter()
        .enumerate()
        .map(|(i, r)| convert_one(i, r, spec, side, out_dir))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(SampleFailure {
                index: i,
                path: index.records[i].path.clone(),
                reason: e.to_string(),
            }),
        }
    }

    let stats: Vec<ActivityStats> = rows.iter().map(|r| r.stats).collect();
    let rgb = TransmissionModel::rgb8(side as u64, side as u64)?;
    let mut reductions = Vec::new();
    let mut samples_without_events = 0;
    for r in &rows {
        let sc = TransmissionModel::spatial_contrast(side as u64, side as u64, r.stats.active_rows)?;
        match reduction_ratio(&rgb, &sc) {
            Ok(v) => reductions.push(v),
            Err(Error::DivisionByZero(_)) => samples_without_events += 1,
            Err(e) => return Err(e),
        }
    }
    let mean_ideal_reduction =
        (!reductions.is_empty()).then(|| reductions.iter().sum::<f64>() / reductions.len() as f64);

    let report = ConversionReport {
        samples: index.len(),
        mean_stats: if stats.is_empty() {
            ActivityStats::default()
        } else {
            mean_stats(&stats)
        },
        total_rgb_bits: rows.iter().map(|r| r.rgb_bits).sum(),
        total_ideal_bits: rows.iter().map(|r| r.ideal_bits).sum(),
        total_measured_bits: rows.iter().map(|r| r.measured_bits).sum(),
        rows,
        failures,
        spec,
        side,
        mean_ideal_reduction,
        samples_without_events,
    };
    write_manifest(&out_dir.join(MANIFEST_FILE), &report.rows)?;
    let report_path = out_dir.join(REPORT_FILE);
    fs::write(&report_path, report.to_text()).map_err(|e| Error::io(&report_path, e))?;
    Ok(report)
}

fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MANIFEST_HEADER)?;
    for r in rows {
        w.write_record([
            r.file.clone(),
            r.source.to_string_lossy().into_owned(),
            r.class_id.to_string(),
            u8::from(r.augmented).to_string(),
            r.side.to_string(),
            r.mode.to_string(),
            r.threshold.to_string(),
            r.stats.event_activity.to_string(),
            r.stats.on_fraction.to_string(),
            r.stats.off_fraction.to_string(),
            r.stats.active_rows.to_string(),
            r.ideal_bits.to_string(),
            r.measured_bits.to_string(),
            r.rgb_bits.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads the manifest written by [`convert_corpus`] in `dir`.
pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestRow>> {
    let path = dir.join(MANIFEST_FILE);
    let mut rdr = csv::Reader::from_path(&path)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |field: &str| Error::InvalidArgument(format!("{}:{}: bad {field}", path.display(), i + 2));
        if rec.len() != MANIFEST_HEADER.len() {
            return Err(bad("field count"));
        }
        let f = |k: usize| rec.get(k).unwrap_or_default();
        fn num<T: std::str::FromStr>(s: &str, err: impl FnOnce() -> Error) -> Result<T> {
            s.parse().map_err(|_| err())
        }
        rows.push(ManifestRow {
            file: f(0).to_string(),
            source: PathBuf::from(f(1)),
            class_id: num(f(2), || bad("class_id"))?,
            augmented: f(3) == "1",
            side: num(f(4), || bad("side"))?,
            mode: f(5).parse().map_err(|_| bad("mode"))?,
            threshold: num(f(6), || bad("threshold"))?,
            stats: ActivityStats {
                event_activity: num(f(7), || bad("event_activity"))?,
                on_fraction: num(f(8), || bad("on_fraction"))?,
                off_fraction: num(f(9), || bad("off_fraction"))?,
                active_rows: num(f(10), || bad("active_rows"))?,
            },
            ideal_bits: num(f(11), || bad("ideal_bits"))?,
            measured_bits: num(f(12), || bad("measured_bits"))?,
            rgb_bits: num(f(13), || bad("rgb_bits"))?,
        });
    }
    Ok(rows)
}
