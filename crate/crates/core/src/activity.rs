//! Event activity statistics, threshold sweeps and cubic trend fits.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::GrayImage;
use crate::threshold::{encode_events, Polarity, TernaryEventImage, ThresholdMode, ThresholdSpec};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActivityStats {
    /// Fraction of pixels carrying an event.
    pub event_activity: f64,
    pub on_fraction: f64,
    pub off_fraction: f64,
    /// Fraction of rows with at least one event.
    pub active_rows: f64,
}

pub fn activity(ev: &TernaryEventImage) -> ActivityStats {
    let (w, h) = (ev.width(), ev.height());
    let mut on = 0usize;
    let mut off = 0usize;
    let mut rows = 0usize;
    for y in 0..h {
        let mut row_active = false;
        for &p in ev.row(y) {
            match p {
                Polarity::On => on += 1,
                Polarity::Off => off += 1,
                Polarity::None => continue,
            }
            row_active = true;
        }
        rows += usize::from(row_active);
    }
    let n = (w * h) as f64;
    ActivityStats {
        event_activity: (on + off) as f64 / n,
        on_fraction: on as f64 / n,
        off_fraction: off as f64 / n,
        active_rows: rows as f64 / h as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub threshold: f64,
    pub mean_event_activity: f64,
    pub mean_active_rows: f64,
    pub mean_on_fraction: f64,
    pub mean_off_fraction: f64,
    pub image_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub mode: ThresholdMode,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn thresholds(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.threshold).collect()
    }

    pub fn event_activity(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean_event_activity).collect()
    }

    pub fn active_rows(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean_active_rows).collect()
    }
}

/// Unweighted per-image mean of [`ActivityStats`].
///
/// Summation runs in slice order, so the result does not depend on how the
/// stats were produced.
pub fn mean_stats(stats: &[ActivityStats]) -> ActivityStats {
    let n = stats.len() as f64;
    let mut acc = ActivityStats::default();
    for s in stats {
        acc.event_activity += s.event_activity;
        acc.on_fraction += s.on_fraction;
        acc.off_fraction += s.off_fraction;
        acc.active_rows += s.active_rows;
    }
    ActivityStats {
        event_activity: acc.event_activity / n,
        on_fraction: acc.on_fraction / n,
        off_fraction: acc.off_fraction / n,
        active_rows: acc.active_rows / n,
    }
}

/// Mean activity of a corpus at each threshold. `thresholds` must be strictly
/// increasing and valid for `mode`. Images are processed on the current rayon
/// pool.
pub fn sweep(images: &[GrayImage], mode: ThresholdMode, thresholds: &[f64]) -> Result<SweepTable> {
    if images.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if thresholds.is_empty() {
        return Err(Error::InvalidArgument("no thresholds to sweep".into()));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("thresholds must be strictly increasing".into()));
    }
    let specs = thresholds
        .iter()
        .map(|&t| ThresholdSpec::new(mode, t))
        .collect::<Result<Vec<_>>>()?;

    // per_image[i][j] = stats of image i at threshold j
    let per_image: Vec<Vec<ActivityStats>> = images
        .par_iter()
        .map(|img| {
            specs
                .iter()
                .map(|&spec| encode_events(img, spec).map(|ev| activity(&ev)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = specs
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let column: Vec<ActivityStats> = per_image.iter().map(|s| s[j]).collect();
            let mean = mean_stats(&column);
            SweepRow {
                threshold: spec.value(),
                mean_event_activity: mean.event_activity,
                mean_active_rows: mean.active_rows,
                mean_on_fraction: mean.on_fraction,
                mean_off_fraction: mean.off_fraction,
                image_count: images.len(),
            }
        })
        .collect();
    Ok(SweepTable { mode, rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicFit {
    /// `c0 + c1 x + c2 x^2 + c3 x^3`.
    pub coefficients: [f64; 4],
    pub rms_residual: f64,
    pub r_squared: f64,
}

impl CubicFit {
    pub fn eval(&self, x: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coefficients;
        ((c3 * x + c2) * x + c1) * x + c0
    }
}

/// Residuals below this are reported as an exact fit.
const EXACT_FIT_RMS: f64 = 1e-12;

/// Least-squares cubic through `(xs, ys)`.
///
/// The abscissae are mapped affinely onto `[-1, 1]`, the rescaled Vandermonde
/// system is solved by Householder QR, and the coefficients are mapped back
/// to the original variable.
pub fn fit_cubic(xs: &[f64], ys: &[f64]) -> Result<CubicFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite fit data".into()));
    }
    let mut distinct = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::DegenerateSystem(format!(
            "{} distinct abscissae, need at least 4",
            distinct.len()
        )));
    }
    let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
    let scale = 2.0 / (hi - lo);
    let shift = -(hi + lo) / (hi - lo);

    let n = xs.len();
    let mut a = vec![[0.0f64; 4]; n];
    for (row, &x) in a.iter_mut().zip(xs) {
        let t = scale * x + shift;
        *row = [1.0, t, t * t, t * t * t];
    }
    let scaled = householder_least_squares(&mut a, ys.to_vec())?;
    let coefficients = unscale(scaled, scale, shift);

    let mean = ys.iter().sum::<f64>() / n as f64;
    let t_of = |x: f64| scale * x + shift;
    let eval_scaled = |t: f64| ((scaled[3] * t + scaled[2]) * t + scaled[1]) * t + scaled[0];
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - eval_scaled(t_of(x))).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let mut rms_residual = (ss_res / n as f64).sqrt();
    if rms_residual < EXACT_FIT_RMS {
        rms_residual = 0.0;
    }
    let r_squared = if ss_tot == 0.0 || rms_residual == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(CubicFit {
        coefficients,
        rms_residual,
        r_squared,
    })
}

/// Solves `min ||A c - y||` for a full-rank n x 4 system in place.
fn householder_least_squares(a: &mut [[f64; 4]], mut y: Vec<f64>) -> Result<[f64; 4]> {
    let n = a.len();
    let mut diag = [0.0f64; 4];
    for k in 0..4 {
        let norm = a[k..].iter().map(|r| r[k] * r[k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateSystem("rank-deficient design matrix".into()));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        // v = x - alpha e1, stored in column k rows k..
        a[k][k] -= alpha;
        let vnorm2: f64 = a[k..].iter().map(|r| r[k] * r[k]).sum();
        if vnorm2 > 0.0 {
            for j in (k + 1)..4 {
                let dot: f64 = a[k..].iter().map(|r| r[k] * r[j]).sum();
                let f = 2.0 * dot / vnorm2;
                for r in a[k..].iter_mut() {
                    r[j] -= f * r[k];
                }
            }
            let dot: f64 = (k..n).map(|i| a[i][k] * y[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                y[i] -= f * a[i][k];
            }
        }
        diag[k] = alpha;
    }
    let max_diag = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if diag.iter().any(|d| d.abs() <= 1e-12 * max_diag) {
        return Err(Error::DegenerateSystem("ill-conditioned design matrix".into()));
    }
    let mut c = [0.0f64; 4];
    for k in (0..4).rev() {
        let mut s = y[k];
        for j in (k + 1)..4 {
            s -= a[k][j] * c[j];
        }
        c[k] = s / diag[k];
    }
    Ok(c)
}

/// Maps coefficients in `t = scale * x + shift` back to coefficients in `x`.
fn unscale(d: [f64; 4], scale: f64, shift: f64) -> [f64; 4] {
    // (scale x + shift)^k expanded binomially
    const BINOM: [[f64; 4]; 4] = [
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0],
        [1.0, 3.0, 3.0, 1.0],
    ];
    let mut c = [0.0f64; 4];
    for (k, &dk) in d.iter().enumerate() {
        for j in 0..=k {
            c[j] += dk * BINOM[k][j] * scale.powi(j as i32) * shift.powi((k - j) as i32);
        }
    }
    c
}

/// Formats `v` with six significant digits and a `.` decimal separator.
pub fn format_sig6(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    if rounded == 0.0 {
        "0".to_string()
    } else {
        rounded.to_string()
    }
}

pub const PLOT_HEADER: &str = "threshold,mean_event_activity,mean_active_rows,fitted_value";

/// CSV rendering of a sweep with the fitted event-activity curve. Without a
/// fit, the `fitted_value` column is left empty.
pub fn emit_plot_data(table: &SweepTable, fit: Option<&CubicFit>) -> String {
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for row in &table.rows {
        let fitted = fit.map(|f| format_sig6(f.eval(row.threshold))).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_sig6(row.threshold),
            format_sig6(row.mean_event_activity),
            format_sig6(row.mean_active_rows),
            fitted
        );
    }
    out
}

/// Minimal SVG chart: sweep points and the fitted curve over the threshold
/// range.
pub fn render_svg(table: &SweepTable, fit: Option<&CubicFit>) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const PAD: f64 = 40.0;
    let xs = table.thresholds();
    let ys = table.event_activity();
    let (x_lo, x_hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };
    let px = |x: f64| PAD + (x - x_lo) / x_span * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - y.clamp(0.0, 1.0) * (H - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{} threshold</text>"#,
        W / 2.0,
        H - 10.0,
        table.mode
    );
    for (&x, &y) in xs.iter().zip(&ys) {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            px(x),
            py(y)
        );
    }
    if let Some(fit) = fit {
        let points: Vec<String> = (0..=64)
            .map(|i| {
                let x = x_lo + x_span * f64::from(i) / 64.0;
                format!("{:.2},{:.2}", px(x), py(fit.eval(x)))
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="crimson"/>"#,
            points.join(" ")
        );
    }
    svg.push_str("</svg>\n");
    svg
}
