//! Command-line front end.
//!
//! Usage errors exit with status 2, data errors with status 1.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::activity::{activity, emit_plot_data, fit_cubic, render_svg, sweep, ActivityStats, CubicFit};
use crate::codec::{ideal_bits, measured_bits, pack, unpack, EncodedStream, TransmissionModel};
use crate::dataset::{
    balance, convert_corpus, load_index, load_sample_gray, read_index, read_manifest, spread_subset, subsample_tracks,
    write_index, DatasetIndex, SampleRecord, DEFAULT_SIDE, DEFAULT_TARGET, DEFAULT_TRACK_STRIDE,
};
use crate::io::{is_image_path, read_rgb, write_gray_pgm, write_pgm};
use crate::metrics::{evaluate, DistanceMetric, DEFAULT_K};
use crate::raster::{resize, to_grayscale, GrayImage};
use crate::threshold::{encode_events, TernaryEventImage, ThresholdMode, ThresholdSpec};

#[derive(Debug, Parser)]
#[command(name = "scev", version, about = "Spatial-contrast event simulator and codec")]
struct Cli {
    /// Worker threads (default: available parallelism; 1 forces serial execution)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert an image corpus into a SCEV dataset with manifest and report
    Convert(ConvertArgs),
    /// Sweep thresholds over a corpus, fit cubics and write plot data
    Sweep(SweepArgs),
    /// Fit a cubic to two columns of a CSV file
    Fit(FitArgs),
    /// Encode one image into a .scev file (plus a .txt summary sidecar)
    Encode(EncodeArgs),
    /// Decode a .scev file to an 8-bit PGM rendering
    Decode(DecodeArgs),
    /// Print activity statistics of an image or .scev file
    Stats(StatsArgs),
    /// Write a class-balanced, augmented index as CSV
    Balance(BalanceArgs),
    /// k-NN classification between two converted datasets
    Classify(ClassifyArgs),
    /// Render an image's events (or its grayscale) as PGM
    Render(RenderArgs),
}

#[derive(Debug, Clone, Args)]
struct ThresholdArgs {
    /// Thresholding mode
    #[arg(long, value_parser = parse_mode, default_value = "absolute")]
    mode: ThresholdMode,
    /// Threshold value (default: 0.02 absolute, 0.05 relative)
    #[arg(long)]
    threshold: Option<f64>,
}

impl ThresholdArgs {
    fn spec(&self) -> anyhow::Result<ThresholdSpec> {
        let value = self.threshold.unwrap_or(match self.mode {
            ThresholdMode::Absolute => 0.02,
            ThresholdMode::Relative => 0.05,
        });
        Ok(ThresholdSpec::new(self.mode, value)?)
    }
}

#[derive(Debug, Clone, Args)]
struct CorpusArgs {
    /// Dataset root directory, or an index CSV written by `balance`
    input: PathBuf,
    /// Split subdirectory under the root, used when it exists
    #[arg(long, default_value = "")]
    split: String,
    /// Keep every n-th frame of each track (1 keeps all)
    #[arg(long, default_value_t = DEFAULT_TRACK_STRIDE)]
    track_stride: u32,
    /// Use at most this many samples, spread evenly over the index
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    threshold: ThresholdArgs,
    /// Output side length in pixels
    #[arg(long, default_value_t = DEFAULT_SIDE)]
    side: usize,
    /// Balance classes to --target samples before converting
    #[arg(long)]
    balance: bool,
    /// Per-class sample count used with --balance
    #[arg(long, default_value_t = DEFAULT_TARGET)]
    target: usize,
    /// Seed for balancing and augmentation
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_parser = parse_mode, default_value = "absolute")]
    mode: ThresholdMode,
    /// Comma-separated list or start:stop:step range
    /// (default: 0.005:0.04:0.005 absolute, 0.025:0.2:0.025 relative)
    #[arg(long)]
    thresholds: Option<String>,
    /// Resize side length in pixels (0 keeps native resolution)
    #[arg(long, default_value_t = DEFAULT_SIDE)]
    side: usize,
    /// CSV output path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional SVG chart output
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// CSV file with a header row
    input: PathBuf,
    #[arg(long, default_value = "threshold")]
    x: String,
    #[arg(long, default_value = "mean_event_activity")]
    y: String,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    image: PathBuf,
    #[command(flatten)]
    threshold: ThresholdArgs,
    /// Resize to side x side before encoding (default: native)
    #[arg(long)]
    side: Option<usize>,
    /// Output .scev path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    stream: PathBuf,
    /// Output PGM path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Image or .scev file
    input: PathBuf,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[arg(long)]
    side: Option<usize>,
}

#[derive(Debug, Args)]
struct BalanceArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Samples per class
    #[arg(long, default_value_t = DEFAULT_TARGET)]
    target: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output index CSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Converted training dataset directory
    #[arg(long)]
    train: PathBuf,
    /// Converted test dataset directory
    #[arg(long)]
    test: PathBuf,
    /// Neighbour count
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Charge 2 for ON/OFF mismatches instead of 1
    #[arg(long)]
    graded: bool,
    /// Output prefix; writes <prefix>.txt and <prefix>.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    image: PathBuf,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[arg(long)]
    side: Option<usize>,
    /// Render the grayscale input instead of events
    #[arg(long)]
    gray: bool,
    /// Output PGM path
    #[arg(long)]
    out: PathBuf,
}

fn parse_mode(s: &str) -> Result<ThresholdMode, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

/// Parses `a,b,c` or `start:stop:step` (inclusive of `stop`).
pub fn parse_thresholds(s: &str) -> anyhow::Result<Vec<f64>> {
    let s = s.trim();
    if let Some((start, rest)) = s.split_once(':') {
        let (stop, step) = rest.split_once(':').context("range must be start:stop:step")?;
        let (start, stop, step): (f64, f64, f64) = (start.trim().parse()?, stop.trim().parse()?, step.trim().parse()?);
        if step.is_nan() || step <= 0.0 || stop < start {
            bail!("range {s:?} needs step > 0 and stop >= start");
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect())
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad threshold {t:?}")))
            .collect()
    }
}

fn default_thresholds(mode: ThresholdMode) -> &'static str {
    match mode {
        ThresholdMode::Absolute => "0.005:0.04:0.005",
        ThresholdMode::Relative => "0.025:0.2:0.025",
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Convert(a) => cmd_convert(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Balance(a) => cmd_balance(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Render(a) => cmd_render(a),
    }
}

fn list_images(dir: &Path, out: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            list_images(&p, out)?;
        } else if is_image_path(&p) {
            out.push(p);
        }
    }
    Ok(())
}

/// Loads the corpus named by `args`. Directories without labels fall back to
/// an unlabelled listing of every image under them (class 0).
fn load_corpus(args: &CorpusArgs, require_labels: bool) -> anyhow::Result<DatasetIndex> {
    let index = if args.input.is_file() {
        read_index(&args.input)?
    } else {
        match load_index(&args.input, &args.split) {
            Ok(idx) => {
                for issue in &idx.issues {
                    eprintln!("warning: {:?}: {}: {}", issue.kind, issue.path.display(), issue.detail);
                }
                subsample_tracks(&idx, args.track_stride)
            }
            Err(e) if !require_labels => {
                let mut paths = Vec::new();
                list_images(&args.input, &mut paths)?;
                if paths.is_empty() {
                    return Err(e.into());
                }
                let records = paths.into_iter().map(|p| SampleRecord::new(p, 0)).collect();
                DatasetIndex::new("", records, 1)?
            }
            Err(e) => return Err(e.into()),
        }
    };
    Ok(match args.limit {
        Some(n) => spread_subset(&index, n),
        None => index,
    })
}

fn cmd_convert(a: ConvertArgs) -> anyhow::Result<()> {
    let spec = a.threshold.spec()?;
    let mut index = load_corpus(&a.corpus, true)?;
    if a.balance {
        index = balance(&index, a.target, a.seed)?;
    }
    let report = convert_corpus(&index, spec, a.side, &a.out)?;
    print!("{}", report.to_text());
    Ok(())
}

fn fit_line(name: &str, fit: &Option<CubicFit>) -> String {
    match fit {
        Some(f) => format!(
            "{name}: c0={} c1={} c2={} c3={} rms={} r2={}",
            f.coefficients[0], f.coefficients[1], f.coefficients[2], f.coefficients[3], f.rms_residual, f.r_squared
        ),
        None => format!("{name}: fit unavailable (need >= 4 thresholds)"),
    }
}

fn cmd_sweep(a: SweepArgs) -> anyhow::Result<()> {
    let thresholds = parse_thresholds(a.thresholds.as_deref().unwrap_or(default_thresholds(a.mode)))?;
    let index = load_corpus(&a.corpus, false)?;
    let side = (a.side > 0).then_some(a.side);
    use rayon::prelude::*;
    let images = index
        .records
        .par_iter()
        .map(|r| load_sample_gray(r, side))
        .collect::<crate::Result<Vec<GrayImage>>>()?;
    let table = sweep(&images, a.mode, &thresholds)?;
    let xs = table.thresholds();
    let events_fit = fit_cubic(&xs, &table.event_activity()).ok();
    let rows_fit = fit_cubic(&xs, &table.active_rows()).ok();
    let doc = emit_plot_data(&table, events_fit.as_ref());
    match &a.out {
        Some(path) => fs::write(path, &doc).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{doc}"),
    }
    if let Some(path) = &a.svg {
        fs::write(path, render_svg(&table, events_fit.as_ref()))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("images: {} (unweighted mean per threshold)", images.len());
    eprintln!("{}", fit_line("event_activity", &events_fit));
    eprintln!("{}", fit_line("active_rows", &rows_fit));
    Ok(())
}

fn cmd_fit(a: FitArgs) -> anyhow::Result<()> {
    let mut rdr = csv::Reader::from_path(&a.input)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("column {name:?} not found"))
    };
    let (xi, yi) = (col(&a.x)?, col(&a.y)?);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        xs.push(rec.get(xi).unwrap_or_default().parse::<f64>()?);
        ys.push(rec.get(yi).unwrap_or_default().parse::<f64>()?);
    }
    let fit = fit_cubic(&xs, &ys)?;
    println!("{}", fit_line(&a.y, &Some(fit)));
    Ok(())
}

fn load_gray(path: &Path, side: Option<usize>) -> anyhow::Result<GrayImage> {
    let gray = to_grayscale(&read_rgb(path)?);
    Ok(match side {
        Some(s) => resize(&gray, s)?,
        None => gray,
    })
}

fn summary(ev: &TernaryEventImage, stream: &EncodedStream) -> String {
    let stats = activity(ev);
    let mut s = String::new();
    let _ = writeln!(s, "width: {}", ev.width());
    let _ = writeln!(s, "height: {}", ev.height());
    let _ = writeln!(s, "mode: {}", ev.spec().mode());
    let _ = writeln!(s, "threshold: {}", ev.spec().value());
    write_stats(&mut s, &stats);
    let _ = writeln!(s, "active_row_count: {}", stream.header().active_row_count);
    let _ = writeln!(s, "ideal_bits: {}", ideal_bits(&TransmissionModel::for_stream(stream)));
    let _ = writeln!(s, "measured_bits: {}", measured_bits(stream));
    s
}

fn write_stats(s: &mut String, stats: &ActivityStats) {
    let _ = writeln!(s, "event_activity: {}", stats.event_activity);
    let _ = writeln!(s, "on_fraction: {}", stats.on_fraction);
    let _ = writeln!(s, "off_fraction: {}", stats.off_fraction);
    let _ = writeln!(s, "active_rows: {}", stats.active_rows);
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".txt");
    PathBuf::from(name)
}

fn cmd_encode(a: EncodeArgs) -> anyhow::Result<()> {
    let gray = load_gray(&a.image, a.side)?;
    let ev = encode_events(&gray, a.threshold.spec()?)?;
    let stream = pack(&ev)?;
    fs::write(&a.out, stream.to_bytes()).with_context(|| format!("writing {}", a.out.display()))?;
    let text = summary(&ev, &stream);
    let side = sidecar_path(&a.out);
    fs::write(&side, &text).with_context(|| format!("writing {}", side.display()))?;
    print!("{text}");
    Ok(())
}

fn read_stream(path: &Path) -> anyhow::Result<(TernaryEventImage, EncodedStream)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let stream = EncodedStream::from_bytes(&bytes)?;
    Ok((unpack(&stream)?, stream))
}

fn cmd_decode(a: DecodeArgs) -> anyhow::Result<()> {
    let (ev, _) = read_stream(&a.stream)?;
    write_pgm(&a.out, ev.width(), ev.height(), &ev.render())?;
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> anyhow::Result<()> {
    let is_stream = a.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("scev"));
    let (ev, stream) = if is_stream {
        read_stream(&a.input)?
    } else {
        let ev = encode_events(&load_gray(&a.input, a.side)?, a.threshold.spec()?)?;
        let stream = pack(&ev)?;
        (ev, stream)
    };
    print!("{}", summary(&ev, &stream));
    Ok(())
}

fn cmd_balance(a: BalanceArgs) -> anyhow::Result<()> {
    let index = load_corpus(&a.corpus, true)?;
    let balanced = balance(&index, a.target, a.seed)?;
    write_index(&a.out, &balanced)?;
    let synthetic = balanced.records.iter().filter(|r| r.augment.is_some()).count();
    println!(
        "classes: {} per_class: {} records: {} synthetic: {}",
        balanced.class_count,
        a.target,
        balanced.len(),
        synthetic
    );
    Ok(())
}

fn load_dataset(dir: &Path) -> anyhow::Result<Vec<(TernaryEventImage, usize)>> {
    read_manifest(dir)?
        .into_iter()
        .map(|row| {
            let (ev, _) = read_stream(&dir.join(&row.file))?;
            Ok((ev, row.class_id))
        })
        .collect()
}

fn cmd_classify(a: ClassifyArgs) -> anyhow::Result<()> {
    let train = load_dataset(&a.train)?;
    let test = load_dataset(&a.test)?;
    if test.is_empty() {
        bail!("test dataset is empty");
    }
    let n_classes = train.iter().chain(&test).map(|(_, c)| *c).max().unwrap_or(0) + 1;
    let metric = if a.graded {
        DistanceMetric::Graded
    } else {
        DistanceMetric::Hamming
    };
    let eval = evaluate(&train, &test, a.k, n_classes, metric)?;
    let text = eval.to_text();
    if let Some(prefix) = &a.out {
        let mut txt = prefix.as_os_str().to_owned();
        txt.push(".txt");
        let mut csv = prefix.as_os_str().to_owned();
        csv.push(".csv");
        fs::write(PathBuf::from(txt), &text)?;
        fs::write(PathBuf::from(csv), eval.report.to_csv())?;
    }
    print!("{text}");
    Ok(())
}

fn cmd_render(a: RenderArgs) -> anyhow::Result<()> {
    let gray = load_gray(&a.image, a.side)?;
    if a.gray {
        write_gray_pgm(&a.out, &gray)?;
    } else {
        let ev = encode_events(&gray, a.threshold.spec()?)?;
        write_pgm(&a.out, ev.width(), ev.height(), &ev.render())?;
    }
    Ok(())
}
