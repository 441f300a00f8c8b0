use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scev::codec::{unpack, EncodedStream};
use scev::io::{read_rgb, write_ppm};
use scev::raster::{to_grayscale, RgbImage};
use scev::threshold::{encode_events, ThresholdSpec};

fn scev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scev"))
        .args(args)
        .output()
        .expect("run scev")
}

fn ok(args: &[&str]) -> String {
    let out = scev(args);
    assert!(
        out.status.success(),
        "scev {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn checkerboard(side: usize, phase: usize) -> RgbImage {
    let mut px = Vec::with_capacity(side * side * 3);
    for y in 0..side {
        for x in 0..side {
            let v = if (x + y + phase).is_multiple_of(2) { 255 } else { 0 };
            px.extend_from_slice(&[v, v, v]);
        }
    }
    RgbImage::new(side, side, px).unwrap()
}

fn gradient(w: usize, h: usize, seed: u8) -> RgbImage {
    let mut px = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let v = ((x * 37 + y * 11 + usize::from(seed) * 53) % 256) as u8;
            px.extend_from_slice(&[v, v.wrapping_add(40), 255 - v]);
        }
    }
    RgbImage::new(w, h, px).unwrap()
}

fn toy_corpus(root: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    for class in 0..2 {
        let dir = root.join(format!("{class:05}"));
        fs::create_dir_all(&dir).unwrap();
        for i in 0..3 {
            let p = dir.join(format!("00000_{i:05}.ppm"));
            write_ppm(&p, &checkerboard(8, class)).unwrap();
            files.push(p);
        }
    }
    files
}

#[test]
fn encode_then_decode_matches_render() {
    let tmp = tempfile::tempdir().unwrap();
    let img = tmp.path().join("in.ppm");
    write_ppm(&img, &gradient(21, 13, 3)).unwrap();
    let stream = tmp.path().join("in.scev");
    let decoded = tmp.path().join("decoded.pgm");
    let rendered = tmp.path().join("rendered.pgm");

    let text = ok(&[
        "encode",
        s(&img),
        "--mode",
        "relative",
        "--threshold",
        "0.25",
        "--out",
        s(&stream),
    ]);
    assert!(text.contains("width: 21"));
    assert!(tmp.path().join("in.scev.txt").exists());
    ok(&["decode", s(&stream), "--out", s(&decoded)]);
    ok(&[
        "render",
        s(&img),
        "--mode",
        "relative",
        "--threshold",
        "0.25",
        "--out",
        s(&rendered),
    ]);
    assert_eq!(fs::read(&decoded).unwrap(), fs::read(&rendered).unwrap());

    let bytes = fs::read(&stream).unwrap();
    let ev = unpack(&EncodedStream::from_bytes(&bytes).unwrap()).unwrap();
    let direct = encode_events(
        &to_grayscale(&read_rgb(&img).unwrap()),
        ThresholdSpec::relative(0.25).unwrap(),
    )
    .unwrap();
    assert_eq!(ev.events(), direct.events());
}

#[test]
fn stats_agree_between_image_and_stream() {
    let tmp = tempfile::tempdir().unwrap();
    let img = tmp.path().join("in.ppm");
    write_ppm(&img, &gradient(16, 9, 1)).unwrap();
    let stream = tmp.path().join("in.scev");
    ok(&["encode", s(&img), "--threshold", "0.125", "--out", s(&stream)]);
    let a = ok(&["stats", s(&img), "--threshold", "0.125"]);
    let b = ok(&["stats", s(&stream)]);
    assert_eq!(a, b);
}

#[test]
fn sweep_of_constant_images_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    for i in 0..3u8 {
        let v = 40 + 70 * i;
        write_ppm(
            &tmp.path().join(format!("c{i}.ppm")),
            &RgbImage::filled(10, 10, [v, v, v]).unwrap(),
        )
        .unwrap();
    }
    for mode in ["absolute", "relative"] {
        let csv = ok(&["sweep", s(tmp.path()), "--mode", mode, "--side", "0"]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "threshold,mean_event_activity,mean_active_rows,fitted_value"
        );
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 8);
        for row in rows {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols[1].parse::<f64>().unwrap(), 0.0, "{row}");
            assert_eq!(cols[2].parse::<f64>().unwrap(), 0.0, "{row}");
        }
    }
}

#[test]
fn convert_toy_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("corpus");
    let files = toy_corpus(&root);
    let out = tmp.path().join("out");
    let report = ok(&[
        "convert",
        s(&root),
        "--track-stride",
        "1",
        "--side",
        "8",
        "--out",
        s(&out),
    ]);
    assert!(report.contains("full_frame_reduction: 12"), "{report}");
    assert!(report.contains("mean_ideal_reduction: 12"), "{report}");
    assert!(out.join("report.txt").exists());

    let manifest = scev::dataset::read_manifest(&out).unwrap();
    assert_eq!(manifest.len(), files.len());
    let mut labels: Vec<usize> = manifest.iter().map(|r| r.class_id).collect();
    labels.sort_unstable();
    assert_eq!(labels, vec![0, 0, 0, 1, 1, 1]);
    for row in &manifest {
        assert!(out.join(&row.file).exists());
        assert_eq!(row.stats.event_activity, 1.0);
        assert_eq!(row.ideal_bits * 12, row.rgb_bits);
    }

    let result = tmp.path().join("result");
    let text = ok(&[
        "classify",
        "--train",
        s(&out),
        "--test",
        s(&out),
        "--k",
        "1",
        "--out",
        s(&result),
    ]);
    assert!(text.contains("macro_f1"), "{text}");
    assert!(
        fs::read_to_string(tmp.path().join("result.csv"))
            .unwrap()
            .lines()
            .count()
            >= 3
    );
}

#[test]
fn worker_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("corpus");
    for class in 0..3 {
        let dir = root.join(format!("{class:05}"));
        fs::create_dir_all(&dir).unwrap();
        for i in 0..4u8 {
            write_ppm(
                &dir.join(format!("00000_{i:05}.ppm")),
                &gradient(12, 10, i * 3 + class as u8),
            )
            .unwrap();
        }
    }
    let mut outputs = Vec::new();
    for workers in ["1", "4"] {
        let out = tmp.path().join(format!("out{workers}"));
        ok(&[
            "--workers",
            workers,
            "convert",
            s(&root),
            "--track-stride",
            "1",
            "--balance",
            "--target",
            "6",
            "--seed",
            "9",
            "--side",
            "16",
            "--mode",
            "relative",
            "--threshold",
            "0.1",
            "--out",
            s(&out),
        ]);
        let sweep = ok(&[
            "--workers",
            workers,
            "sweep",
            s(&root),
            "--track-stride",
            "1",
            "--side",
            "16",
        ]);
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    fs::read(&p).unwrap(),
                )
            })
            .collect();
        files.sort();
        outputs.push((files, sweep));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn balance_writes_uniform_index() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("corpus");
    toy_corpus(&root);
    let index = tmp.path().join("balanced.csv");
    let text = ok(&[
        "balance",
        s(&root),
        "--track-stride",
        "1",
        "--target",
        "5",
        "--out",
        s(&index),
    ]);
    assert!(text.contains("records: 10"), "{text}");
    let idx = scev::dataset::read_index(&index).unwrap();
    assert_eq!(idx.class_histogram(), vec![5, 5]);
    let out = tmp.path().join("out");
    ok(&["convert", s(&index), "--side", "8", "--out", s(&out)]);
    assert_eq!(scev::dataset::read_manifest(&out).unwrap().len(), 10);
}

#[test]
fn exit_codes() {
    assert_eq!(scev(&["--help"]).status.code(), Some(0));
    assert_eq!(scev(&["encode"]).status.code(), Some(2));
    assert_eq!(scev(&["bogus"]).status.code(), Some(2));
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.ppm");
    let out = tmp.path().join("x.scev");
    assert_eq!(scev(&["encode", s(&missing), "--out", s(&out)]).status.code(), Some(1));
    let img = tmp.path().join("in.ppm");
    write_ppm(&img, &gradient(4, 4, 0)).unwrap();
    let bad = scev(&["encode", s(&img), "--threshold", "1.5", "--out", s(&out)]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&bad.stderr).is_empty());
    let garbage = tmp.path().join("g.scev");
    fs::write(&garbage, b"SCEV\x01\x00garbage").unwrap();
    assert_eq!(scev(&["decode", s(&garbage), "--out", s(&out)]).status.code(), Some(1));
}
