//! Traffic-sign corpus indexing, class balancing and SC dataset export.
//!
//! Two on-disk layouts are understood, both following GTSRB:
//!
//! * per-class subdirectories named by integer class id (`00000/`, `00001/`,
//!   ...), each optionally holding a `GT-*.csv` annotation file;
//! * a flat directory with a single semicolon-separated annotation file
//!   (`Filename;Width;Height;Roi.X1;Roi.Y1;Roi.X2;Roi.Y2;ClassId`).

mod augment;
mod convert;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use augment::{augment, AugmentParams, ROTATION_RANGE_DEG, SHIFT_RANGE_FRAC, ZOOM_RANGE_FRAC};
pub use convert::{
    convert_corpus, load_sample_gray, read_manifest, ConversionReport, ManifestRow, SampleFailure, MANIFEST_FILE,
    REPORT_FILE,
};

use crate::error::{Error, Result};
use crate::io::{image_dimensions, is_image_path};
use crate::raster::Roi;

/// GTSRB class count; class ids are restricted to `[0, MAX_CLASSES)`.
pub const MAX_CLASSES: usize = 43;
pub const DEFAULT_SIDE: usize = 48;
pub const DEFAULT_TARGET: usize = 400;
/// Keep every third frame of a 30-frame track.
pub const DEFAULT_TRACK_STRIDE: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub path: PathBuf,
    pub class_id: usize,
    pub track_id: Option<u32>,
    /// Frame number within the track, from the same filename convention.
    pub frame: Option<u32>,
    pub roi: Option<Roi>,
    /// Present on synthetic samples produced by [`balance`].
    pub augment: Option<AugmentParams>,
}

impl SampleRecord {
    pub fn new(path: impl Into<PathBuf>, class_id: usize) -> Self {
        let path = path.into();
        let (track_id, frame) = parse_track(&path).unzip();
        Self {
            path,
            class_id,
            track_id,
            frame,
            roi: None,
            augment: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    MissingAnnotation,
    UnreadableImage,
}

/// A file that could not be indexed. Issues are collected, not fatal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexIssue {
    pub kind: IssueKind,
    pub path: PathBuf,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetIndex {
    pub split: String,
    pub records: Vec<SampleRecord>,
    pub class_count: usize,
    pub issues: Vec<IndexIssue>,
}

impl DatasetIndex {
    pub fn new(split: impl Into<String>, records: Vec<SampleRecord>, class_count: usize) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| r.class_id >= class_count) {
            return Err(Error::LabelOutOfRange {
                label: r.class_id,
                n_classes: class_count,
            });
        }
        Ok(Self {
            split: split.into(),
            records,
            class_count,
            issues: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.class_count];
        for r in &self.records {
            hist[r.class_id] += 1;
        }
        hist
    }

    /// Records of classes in `classes`, class ids unchanged.
    pub fn filter_classes(&self, classes: &BTreeSet<usize>) -> DatasetIndex {
        let records = self
            .records
            .iter()
            .filter(|r| classes.contains(&r.class_id))
            .cloned()
            .collect();
        DatasetIndex {
            split: self.split.clone(),
            records,
            class_count: self.class_count,
            issues: Vec::new(),
        }
    }
}

/// Parses the GTSRB `TTTTT_FFFFF.ext` filename convention into (track, frame).
pub fn parse_track(path: &Path) -> Option<(u32, u32)> {
    let stem = path.file_stem()?.to_str()?;
    let (track, frame) = stem.split_once('_')?;
    let is_field = |s: &str| s.len() == 5 && s.bytes().all(|b| b.is_ascii_digit());
    if is_field(track) && is_field(frame) {
        Some((track.parse().ok()?, frame.parse().ok()?))
    } else {
        None
    }
}

/// One line of a semicolon-separated annotation file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub filename: String,
    pub width: usize,
    pub height: usize,
    pub roi: Roi,
    pub class_id: usize,
}

/// Parses `Filename;Width;Height;Roi.X1;Roi.Y1;Roi.X2;Roi.Y2;ClassId` by field
/// position.
pub fn parse_annotation_line(line: &str) -> Result<Annotation> {
    let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(';').collect();
    if fields.len() < 8 {
        return Err(Error::MissingAnnotation(format!(
            "annotation line has {} fields, expected 8: {line:?}",
            fields.len()
        )));
    }
    let num = |i: usize| -> Result<usize> {
        fields[i]
            .trim()
            .parse()
            .map_err(|_| Error::MissingAnnotation(format!("field {} of {line:?} is not an integer", i + 1)))
    };
    let class_id = num(7)?;
    if class_id >= MAX_CLASSES {
        return Err(Error::LabelOutOfRange {
            label: class_id,
            n_classes: MAX_CLASSES,
        });
    }
    Ok(Annotation {
        filename: fields[0].trim().to_string(),
        width: num(1)?,
        height: num(2)?,
        roi: Roi::new(num(3)?, num(4)?, num(5)?, num(6)?),
        class_id,
    })
}

fn read_annotation_file(path: &Path) -> Result<Vec<Annotation>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .filter(|l| !l.starts_with("Filename"))
        .map(parse_annotation_line)
        .collect()
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

fn is_annotation_file(path: &Path) -> bool {
    path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn class_dir_id(path: &Path) -> Option<usize> {
    if !path.is_dir() {
        return None;
    }
    let name = path.file_name()?.to_str()?;
    if name.is_empty() || !name.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    name.parse().ok()
}

struct Collector {
    records: Vec<SampleRecord>,
    issues: Vec<IndexIssue>,
}

impl Collector {
    fn issue(&mut self, kind: IssueKind, path: &Path, detail: impl Into<String>) {
        self.issues.push(IndexIssue {
            kind,
            path: path.to_path_buf(),
            detail: detail.into(),
        });
    }

    /// Indexes one directory of images, labelled by `annotations` when given
    /// and by `default_class` otherwise.
    fn scan(&mut self, dir: &Path, default_class: Option<usize>, annotations: Option<Vec<Annotation>>) -> Result<()> {
        let images: Vec<PathBuf> = sorted_entries(dir)?
            .into_iter()
            .filter(|p| p.is_file() && is_image_path(p))
            .collect();
        match annotations {
            Some(rows) => {
                let mut listed = BTreeSet::new();
                for a in rows {
                    let path = dir.join(&a.filename);
                    listed.insert(path.clone());
                    self.add_checked(path, a.class_id, Some(a.roi));
                }
                for p in images.iter().filter(|p| !listed.contains(*p)) {
                    self.issue(IssueKind::MissingAnnotation, p, "image not listed in annotation file");
                }
            }
            None => match default_class {
                Some(class_id) => {
                    for p in images {
                        self.add_checked(p, class_id, None);
                    }
                }
                None => {
                    for p in &images {
                        self.issue(
                            IssueKind::MissingAnnotation,
                            p,
                            "no class directory or annotation file gives this image a label",
                        );
                    }
                }
            },
        }
        Ok(())
    }

    fn add_checked(&mut self, path: PathBuf, class_id: usize, roi: Option<Roi>) {
        match image_dimensions(&path) {
            Ok((w, h)) => {
                if let Some(r) = roi {
                    if let Err(e) = r.check_within(w, h) {
                        self.issue(IssueKind::UnreadableImage, &path, e.to_string());
                        return;
                    }
                }
                let mut rec = SampleRecord::new(path, class_id);
                rec.roi = roi;
                self.records.push(rec);
            }
            Err(e) => self.issue(IssueKind::UnreadableImage, &path, e.to_string()),
        }
    }
}

/// Indexes `root/split` (or `root` itself when that subdirectory does not
/// exist). Unreadable or unlabelled files land in [`DatasetIndex::issues`].
pub fn load_index(root: &Path, split: &str) -> Result<DatasetIndex> {
    let dir = if !split.is_empty() && root.join(split).is_dir() {
        root.join(split)
    } else {
        root.to_path_buf()
    };
    if !dir.is_dir() {
        return Err(Error::io(
            &dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        ));
    }
    let entries = sorted_entries(&dir)?;
    let mut collector = Collector {
        records: Vec::new(),
        issues: Vec::new(),
    };

    let class_dirs: Vec<(usize, PathBuf)> = entries
        .iter()
        .filter_map(|p| class_dir_id(p).map(|id| (id, p.clone())))
        .collect();
    if !class_dirs.is_empty() {
        for (class_id, class_dir) in &class_dirs {
            if *class_id >= MAX_CLASSES {
                collector.issue(
                    IssueKind::MissingAnnotation,
                    class_dir,
                    format!("class directory id {class_id} >= {MAX_CLASSES}"),
                );
                continue;
            }
            let annotation = sorted_entries(class_dir)?.into_iter().find(|p| is_annotation_file(p));
            let rows = annotation.as_deref().map(read_annotation_file).transpose()?;
            collector.scan(class_dir, Some(*class_id), rows)?;
        }
    } else {
        let annotation = entries.iter().find(|p| is_annotation_file(p));
        let rows = annotation.map(|p| read_annotation_file(p)).transpose()?;
        collector.scan(&dir, None, rows)?;
    }

    let Collector { mut records, issues } = collector;
    if records.is_empty() {
        if let Some(first) = issues.first() {
            return Err(match first.kind {
                IssueKind::MissingAnnotation => {
                    Error::MissingAnnotation(format!("{}: {}", first.path.display(), first.detail))
                }
                IssueKind::UnreadableImage => Error::UnreadableImage {
                    path: first.path.clone(),
                    reason: first.detail.clone(),
                },
            });
        }
        return Err(Error::EmptyCorpus);
    }
    records.sort_by(|a, b| a.path.cmp(&b.path));
    let class_count = records.iter().map(|r| r.class_id).max().unwrap_or(0) + 1;
    Ok(DatasetIndex {
        split: split.to_string(),
        records,
        class_count,
        issues,
    })
}

/// Keeps frames whose number is a multiple of `stride`; records outside the
/// track naming convention are kept.
pub fn subsample_tracks(index: &DatasetIndex, stride: u32) -> DatasetIndex {
    let stride = stride.max(1);
    let records = index
        .records
        .iter()
        .filter(|r| r.frame.is_none_or(|f| f % stride == 0))
        .cloned()
        .collect();
    DatasetIndex {
        split: index.split.clone(),
        records,
        class_count: index.class_count,
        issues: index.issues.clone(),
    }
}

/// At most `n` records spread evenly over the index, in index order.
pub fn spread_subset(index: &DatasetIndex, n: usize) -> DatasetIndex {
    let len = index.len();
    let records = if n >= len {
        index.records.clone()
    } else {
        (0..n).map(|i| index.records[i * len / n].clone()).collect()
    };
    DatasetIndex {
        split: index.split.clone(),
        records,
        class_count: index.class_count,
        issues: Vec::new(),
    }
}

/// Per-class RNG stream so a class's draws do not depend on other classes.
fn class_rng(seed: u64, class_id: usize) -> ChaCha8Rng {
    let mix = (class_id as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ChaCha8Rng::seed_from_u64(seed ^ mix)
}

/// Resamples every class to exactly `target` records.
///
/// Larger classes are undersampled uniformly without replacement (kept in
/// index order). Smaller classes keep all originals, followed by augmented
/// copies cycling through the originals, each with freshly drawn
/// [`AugmentParams`].
pub fn balance(index: &DatasetIndex, target: usize, seed: u64) -> Result<DatasetIndex> {
    if target == 0 {
        return Err(Error::InvalidArgument("balance target must be >= 1".into()));
    }
    let mut by_class: Vec<Vec<&SampleRecord>> = vec![Vec::new(); index.class_count];
    for r in &index.records {
        by_class[r.class_id].push(r);
    }
    if let Some(empty) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::InvalidArgument(format!(
            "class {empty} has no samples to balance from"
        )));
    }
    let mut records = Vec::with_capacity(target * index.class_count);
    for (class_id, members) in by_class.iter().enumerate() {
        let mut rng = class_rng(seed, class_id);
        if members.len() >= target {
            let mut keep = rand::seq::index::sample(&mut rng, members.len(), target).into_vec();
            keep.sort_unstable();
            records.extend(keep.into_iter().map(|i| members[i].clone()));
        } else {
            records.extend(members.iter().map(|r| (*r).clone()));
            for i in 0..(target - members.len()) {
                let mut synthetic = members[i % members.len()].clone();
                synthetic.augment = Some(AugmentParams::sample(&mut rng));
                records.push(synthetic);
            }
        }
    }
    Ok(DatasetIndex {
        split: index.split.clone(),
        records,
        class_count: index.class_count,
        issues: Vec::new(),
    })
}

const INDEX_HEADER: [&str; 12] = [
    "path",
    "class_id",
    "track_id",
    "frame",
    "roi_x1",
    "roi_y1",
    "roi_x2",
    "roi_y2",
    "rotation_deg",
    "shift_x_frac",
    "shift_y_frac",
    "zoom_frac",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes an index as comma-separated text, one record per row.
pub fn write_index(path: &Path, index: &DatasetIndex) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(INDEX_HEADER)?;
    for r in &index.records {
        let roi = r.roi;
        let aug = r.augment;
        w.write_record([
            r.path.to_string_lossy().into_owned(),
            r.class_id.to_string(),
            opt(r.track_id),
            opt(r.frame),
            opt(roi.map(|b| b.x1)),
            opt(roi.map(|b| b.y1)),
            opt(roi.map(|b| b.x2)),
            opt(roi.map(|b| b.y2)),
            opt(aug.map(|a| a.rotation_deg)),
            opt(aug.map(|a| a.shift_x_frac)),
            opt(aug.map(|a| a.shift_y_frac)),
            opt(aug.map(|a| a.zoom_frac)),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_index(path: &Path) -> Result<DatasetIndex> {
    let mut rdr = csv::Reader::from_path(path)?;
    let bad = |line: usize, what: &str| Error::InvalidArgument(format!("{}:{line}: bad {what}", path.display()));
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        if row.len() != INDEX_HEADER.len() {
            return Err(bad(line, "field count"));
        }
        let field = |k: usize| row.get(k).unwrap_or("").trim();
        fn parse_opt<T: std::str::FromStr>(s: &str) -> std::result::Result<Option<T>, ()> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| ())
            }
        }
        let class_id: usize = field(1).parse().map_err(|_| bad(line, "class_id"))?;
        let track_id = parse_opt(field(2)).map_err(|_| bad(line, "track_id"))?;
        let frame = parse_opt(field(3)).map_err(|_| bad(line, "frame"))?;
        let roi_fields: Vec<Option<usize>> = (4..8)
            .map(|k| parse_opt(field(k)))
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(line, "roi"))?;
        let roi = match roi_fields.as_slice() {
            [Some(a), Some(b), Some(c), Some(d)] => Some(Roi::new(*a, *b, *c, *d)),
            [None, None, None, None] => None,
            _ => return Err(bad(line, "roi")),
        };
        let aug_fields: Vec<Option<f64>> = (8..12)
            .map(|k| parse_opt(field(k)))
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(line, "augmentation"))?;
        let augment = match aug_fields.as_slice() {
            [Some(r), Some(x), Some(y), Some(z)] => {
                Some(AugmentParams::new(*r, *x, *y, *z).map_err(|_| bad(line, "augmentation"))?)
            }
            [None, None, None, None] => None,
            _ => return Err(bad(line, "augmentation")),
        };
        records.push(SampleRecord {
            path: PathBuf::from(field(0)),
            class_id,
            track_id,
            frame,
            roi,
            augment,
        });
    }
    let class_count = records.iter().map(|r| r.class_id).max().map_or(0, |m| m + 1);
    let split = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    DatasetIndex::new(split, records, class_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_ppm;
    use crate::raster::RgbImage;

    fn write_image(path: &Path, w: usize, h: usize) {
        write_ppm(path, &RgbImage::filled(w, h, [10, 20, 30]).unwrap()).unwrap();
    }

    fn synthetic_index(sizes: &[usize]) -> DatasetIndex {
        let mut records = Vec::new();
        for (class_id, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                records.push(SampleRecord::new(format!("{class_id:05}/{i:05}_00000.ppm"), class_id));
            }
        }
        DatasetIndex::new("train", records, sizes.len()).unwrap()
    }

    #[test]
    fn annotation_line_by_position() {
        let a = parse_annotation_line("00000_00001.ppm;52;54;5;5;47;49;1").unwrap();
        assert_eq!(a.filename, "00000_00001.ppm");
        assert_eq!((a.width, a.height), (52, 54));
        assert_eq!(a.roi, Roi::new(5, 5, 47, 49));
        assert_eq!(a.class_id, 1);
        assert!(parse_annotation_line("a.ppm;1;2;3").is_err());
        assert!(parse_annotation_line("a.ppm;1;2;3;4;5;6;x").is_err());
        assert!(matches!(
            parse_annotation_line("a.ppm;1;2;0;0;1;1;43"),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn track_convention() {
        assert_eq!(parse_track(Path::new("x/00012_00029.ppm")), Some((12, 29)));
        assert_eq!(parse_track(Path::new("00012.ppm")), None);
        assert_eq!(parse_track(Path::new("0012_00029.ppm")), None);
    }

    #[test]
    fn class_directories_without_annotations() {
        let dir = tempfile::tempdir().unwrap();
        for class in 0..2 {
            let cdir = dir.path().join(format!("{class:05}"));
            fs::create_dir(&cdir).unwrap();
            for i in 0..3 {
                write_image(&cdir.join(format!("00000_{i:05}.ppm")), 4, 4);
            }
        }
        let idx = load_index(dir.path(), "").unwrap();
        assert_eq!(idx.len(), 6);
        assert_eq!(idx.class_count, 2);
        assert!(idx.records.iter().all(|r| r.roi.is_none() && r.track_id == Some(0)));
        assert!(idx.issues.is_empty());
        let paths: Vec<_> = idx.records.iter().map(|r| r.path.clone()).collect();
        let mut sorted = paths.clone();
        sorted.sort();
        assert_eq!(paths, sorted);
    }

    #[test]
    fn annotated_class_directory_with_issues() {
        let dir = tempfile::tempdir().unwrap();
        let cdir = dir.path().join("00001");
        fs::create_dir(&cdir).unwrap();
        write_image(&cdir.join("00000_00001.ppm"), 52, 54);
        write_image(&cdir.join("00000_00002.ppm"), 52, 54);
        fs::write(cdir.join("broken.ppm"), b"P6\n").unwrap();
        fs::write(
            cdir.join("GT-00001.csv"),
            "Filename;Width;Height;Roi.X1;Roi.Y1;Roi.X2;Roi.Y2;ClassId\n\
             00000_00001.ppm;52;54;5;5;47;49;1\n\
             broken.ppm;52;54;5;5;47;49;1\n",
        )
        .unwrap();
        let idx = load_index(dir.path(), "").unwrap();
        assert_eq!(idx.len(), 1);
        assert_eq!(idx.records[0].roi, Some(Roi::new(5, 5, 47, 49)));
        assert_eq!(idx.records[0].class_id, 1);
        assert_eq!(idx.issues.len(), 2);
        assert!(idx.issues.iter().any(|i| i.kind == IssueKind::UnreadableImage));
        assert!(idx.issues.iter().any(|i| i.kind == IssueKind::MissingAnnotation));
    }

    #[test]
    fn flat_annotation_file() {
        let dir = tempfile::tempdir().unwrap();
        write_image(&dir.path().join("00000.ppm"), 30, 30);
        write_image(&dir.path().join("00001.ppm"), 30, 30);
        fs::write(
            dir.path().join("GT-final_test.csv"),
            "Filename;Width;Height;Roi.X1;Roi.Y1;Roi.X2;Roi.Y2;ClassId\n\
             00000.ppm;30;30;2;2;28;28;16\n00001.ppm;30;30;1;1;29;29;3\n",
        )
        .unwrap();
        let idx = load_index(dir.path(), "test").unwrap();
        assert_eq!(idx.len(), 2);
        assert_eq!(idx.class_count, 17);
        assert_eq!(idx.records[0].class_id, 16);
        assert_eq!(idx.records[1].track_id, None);
    }

    #[test]
    fn empty_and_unlabelled_directories() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_index(dir.path(), ""), Err(Error::EmptyCorpus)));
        write_image(&dir.path().join("a.ppm"), 3, 3);
        assert!(matches!(load_index(dir.path(), ""), Err(Error::MissingAnnotation(_))));
    }

    #[test]
    fn track_subsampling_keeps_every_third() {
        let records: Vec<_> = (0..30)
            .map(|f| SampleRecord::new(format!("00000/00003_{f:05}.ppm"), 0))
            .chain(std::iter::once(SampleRecord::new("00000/other.ppm", 0)))
            .collect();
        let idx = DatasetIndex::new("train", records, 1).unwrap();
        let sub = subsample_tracks(&idx, DEFAULT_TRACK_STRIDE);
        assert_eq!(sub.len(), 11);
    }

    #[test]
    fn balance_fixed_point() {
        let idx = synthetic_index(&[400, 400]);
        let b = balance(&idx, 400, 7).unwrap();
        assert_eq!(b.records, idx.records);
    }

    #[test]
    fn balance_upsamples_with_params() {
        let idx = synthetic_index(&[100]);
        let b = balance(&idx, 400, 7).unwrap();
        assert_eq!(b.class_histogram(), vec![400]);
        assert!(b.records[..100].iter().all(|r| r.augment.is_none()));
        assert!(b.records[100..].iter().all(|r| r.augment.is_some()));
        assert_eq!(&b.records[..100], &idx.records[..]);
    }

    #[test]
    fn balance_mixed_and_deterministic() {
        let idx = synthetic_index(&[3, 17, 5]);
        let a = balance(&idx, 8, 99).unwrap();
        let b = balance(&idx, 8, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_histogram(), vec![8, 8, 8]);
        let c = balance(&idx, 8, 100).unwrap();
        assert_ne!(a, c);
        // undersampled class keeps index order
        let kept: Vec<_> = a
            .records
            .iter()
            .filter(|r| r.class_id == 1)
            .map(|r| r.path.clone())
            .collect();
        let mut sorted = kept.clone();
        sorted.sort();
        assert_eq!(kept, sorted);
    }

    #[test]
    fn balance_rejects_empty_class() {
        let mut idx = synthetic_index(&[3]);
        idx.class_count = 2;
        assert!(balance(&idx, 5, 0).is_err());
        assert!(balance(&synthetic_index(&[3]), 0, 0).is_err());
    }

    #[test]
    fn index_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut idx = balance(&synthetic_index(&[2, 1]), 4, 3).unwrap();
        idx.records[0].roi = Some(Roi::new(1, 2, 3, 4));
        let path = dir.path().join("balanced.csv");
        write_index(&path, &idx).unwrap();
        let back = read_index(&path).unwrap();
        assert_eq!(back.records, idx.records);
        assert_eq!(back.class_count, 2);
    }
}
