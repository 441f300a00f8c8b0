//! C ABI over the `scev` library.
//!
//! Objects are opaque handles created by `scev_*_new`/`scev_*_from_*`
//! functions and released with the matching `scev_*_free`. Every fallible
//! function returns a [`ScevStatus`]; on failure a message is available from
//! [`scev_last_error`] on the same thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use scev::activity::activity;
use scev::codec::{ideal_bits, pack, reduction_ratio, unpack, EncodedStream, TransmissionModel};
use scev::metrics::macro_f1;
use scev::raster::{resize, to_grayscale, GrayImage, RgbImage};
use scev::threshold::{encode_events, TernaryEventImage, ThresholdMode, ThresholdSpec};
use scev::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScevStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidImage = 3,
    DimensionMismatch = 4,
    ThresholdOutOfRange = 5,
    ImageTooLarge = 6,
    MalformedStream = 7,
    InvalidModel = 8,
    DivisionByZero = 9,
    LengthMismatch = 10,
    LabelOutOfRange = 11,
    Io = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScevMode {
    Absolute = 0,
    Relative = 1,
}

impl From<ScevMode> for ThresholdMode {
    fn from(m: ScevMode) -> Self {
        match m {
            ScevMode::Absolute => ThresholdMode::Absolute,
            ScevMode::Relative => ThresholdMode::Relative,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScevActivity {
    pub event_activity: f64,
    pub on_fraction: f64,
    pub off_fraction: f64,
    pub active_rows: f64,
}

/// Size model: `ceil(width * height * channels * bits_per_channel * alpha)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScevTransmissionModel {
    pub width: u64,
    pub height: u64,
    pub channels: u64,
    pub bits_per_channel: u64,
    pub alpha: f64,
}

impl ScevTransmissionModel {
    fn to_model(self) -> scev::Result<TransmissionModel> {
        TransmissionModel::new(
            self.width,
            self.height,
            self.channels,
            self.bits_per_channel,
            self.alpha,
        )
    }
}

/// Grayscale image with intensities in [0, 1].
pub struct ScevGrayImage {
    inner: GrayImage,
}

/// Ternary event image (-1 OFF, 0 none, +1 ON) with its threshold.
pub struct ScevEventImage {
    inner: TernaryEventImage,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ScevStatus {
    match e {
        Error::InvalidImage(_) => ScevStatus::InvalidImage,
        Error::DimensionMismatch { .. } => ScevStatus::DimensionMismatch,
        Error::ThresholdOutOfRange { .. } => ScevStatus::ThresholdOutOfRange,
        Error::ImageTooLarge { .. } => ScevStatus::ImageTooLarge,
        Error::MalformedStream(_) => ScevStatus::MalformedStream,
        Error::InvalidModel(_) => ScevStatus::InvalidModel,
        Error::DivisionByZero(_) => ScevStatus::DivisionByZero,
        Error::LengthMismatch { .. } => ScevStatus::LengthMismatch,
        Error::LabelOutOfRange { .. } => ScevStatus::LabelOutOfRange,
        Error::UnreadableImage { .. } | Error::Io { .. } | Error::Csv(_) => ScevStatus::Io,
        _ => ScevStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ScevStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScevStatus::Ok,
        Ok(Err(Fail::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            ScevStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            ScevStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            ScevStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn as_slice<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(name));
    }
    out.write(value);
    Ok(())
}

fn pixel_count(width: usize, height: usize, channels: usize) -> Result<usize, Fail> {
    width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Fail::Arg(format!("image {width}x{height} too large")))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn scev_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a grayscale image from `width * height` row-major values in [0, 1].
#[no_mangle]
pub unsafe extern "C" fn scev_gray_from_f64(
    width: usize,
    height: usize,
    pixels: *const f64,
    out: *mut *mut ScevGrayImage,
) -> ScevStatus {
    guard(|| {
        let px = as_slice(pixels, pixel_count(width, height, 1)?, "pixels")?;
        let inner = GrayImage::new(width, height, px.to_vec())?;
        write_out(out, Box::into_raw(Box::new(ScevGrayImage { inner })), "out")
    })
}

/// Builds a grayscale image from `width * height * 3` interleaved RGB bytes.
#[no_mangle]
pub unsafe extern "C" fn scev_gray_from_rgb8(
    width: usize,
    height: usize,
    rgb: *const u8,
    out: *mut *mut ScevGrayImage,
) -> ScevStatus {
    guard(|| {
        let px = as_slice(rgb, pixel_count(width, height, 3)?, "rgb")?;
        let inner = to_grayscale(&RgbImage::new(width, height, px.to_vec())?);
        write_out(out, Box::into_raw(Box::new(ScevGrayImage { inner })), "out")
    })
}

/// Reads a PNG or PPM file and converts it to grayscale.
#[no_mangle]
pub unsafe extern "C" fn scev_gray_load(path: *const c_char, out: *mut *mut ScevGrayImage) -> ScevStatus {
    guard(|| {
        if path.is_null() {
            return Err(Fail::Null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail::Arg("path is not valid UTF-8".into()))?;
        let inner = to_grayscale(&scev::io::read_rgb(Path::new(path))?);
        write_out(out, Box::into_raw(Box::new(ScevGrayImage { inner })), "out")
    })
}

/// Bilinear resize to `side x side`.
#[no_mangle]
pub unsafe extern "C" fn scev_gray_resize(
    img: *const ScevGrayImage,
    side: usize,
    out: *mut *mut ScevGrayImage,
) -> ScevStatus {
    guard(|| {
        let inner = resize(&as_ref(img, "img")?.inner, side)?;
        write_out(out, Box::into_raw(Box::new(ScevGrayImage { inner })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn scev_gray_width(img: *const ScevGrayImage) -> usize {
    img.as_ref().map_or(0, |i| i.inner.width())
}

#[no_mangle]
pub unsafe extern "C" fn scev_gray_height(img: *const ScevGrayImage) -> usize {
    img.as_ref().map_or(0, |i| i.inner.height())
}

#[no_mangle]
pub unsafe extern "C" fn scev_gray_free(img: *mut ScevGrayImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Spatial contrast followed by thresholding.
#[no_mangle]
pub unsafe extern "C" fn scev_encode_events(
    img: *const ScevGrayImage,
    mode: ScevMode,
    threshold: f64,
    out: *mut *mut ScevEventImage,
) -> ScevStatus {
    guard(|| {
        let spec = ThresholdSpec::new(mode.into(), threshold)?;
        let inner = encode_events(&as_ref(img, "img")?.inner, spec)?;
        write_out(out, Box::into_raw(Box::new(ScevEventImage { inner })), "out")
    })
}

/// Builds an event image from `width * height` values in {-1, 0, 1}.
#[no_mangle]
pub unsafe extern "C" fn scev_events_from_i8(
    width: usize,
    height: usize,
    values: *const i8,
    mode: ScevMode,
    threshold: f64,
    out: *mut *mut ScevEventImage,
) -> ScevStatus {
    guard(|| {
        let vals = as_slice(values, pixel_count(width, height, 1)?, "values")?;
        let spec = ThresholdSpec::new(mode.into(), threshold)?;
        let inner = TernaryEventImage::from_i8(width, height, vals, spec)?;
        write_out(out, Box::into_raw(Box::new(ScevEventImage { inner })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn scev_events_width(ev: *const ScevEventImage) -> usize {
    ev.as_ref().map_or(0, |e| e.inner.width())
}

#[no_mangle]
pub unsafe extern "C" fn scev_events_height(ev: *const ScevEventImage) -> usize {
    ev.as_ref().map_or(0, |e| e.inner.height())
}

/// Copies the row-major polarities into `out`, which must hold
/// `width * height` values.
#[no_mangle]
pub unsafe extern "C" fn scev_events_copy(ev: *const ScevEventImage, out: *mut i8, len: usize) -> ScevStatus {
    guard(|| {
        let vals = as_ref(ev, "ev")?.inner.to_i8();
        if len != vals.len() {
            return Err(Fail::Lib(Error::LengthMismatch {
                left: len,
                right: vals.len(),
            }));
        }
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        ptr::copy_nonoverlapping(vals.as_ptr(), out, len);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn scev_events_free(ev: *mut ScevEventImage) {
    if !ev.is_null() {
        drop(Box::from_raw(ev));
    }
}

#[no_mangle]
pub unsafe extern "C" fn scev_activity(ev: *const ScevEventImage, out: *mut ScevActivity) -> ScevStatus {
    guard(|| {
        let s = activity(&as_ref(ev, "ev")?.inner);
        let stats = ScevActivity {
            event_activity: s.event_activity,
            on_fraction: s.on_fraction,
            off_fraction: s.off_fraction,
            active_rows: s.active_rows,
        };
        write_out(out, stats, "out")
    })
}

/// Serialises to SCEV bytes. Release the buffer with [`scev_bytes_free`].
#[no_mangle]
pub unsafe extern "C" fn scev_pack(ev: *const ScevEventImage, out: *mut *mut u8, out_len: *mut usize) -> ScevStatus {
    guard(|| {
        let ev = as_ref(ev, "ev")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        if out_len.is_null() {
            return Err(Fail::Null("out_len"));
        }
        let bytes = pack(&ev.inner)?.to_bytes().into_boxed_slice();
        out_len.write(bytes.len());
        out.write(Box::into_raw(bytes).cast());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn scev_bytes_free(bytes: *mut u8, len: usize) {
    if !bytes.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(bytes, len)));
    }
}

/// Parses and decodes SCEV bytes.
#[no_mangle]
pub unsafe extern "C" fn scev_unpack(bytes: *const u8, len: usize, out: *mut *mut ScevEventImage) -> ScevStatus {
    guard(|| {
        let data = as_slice(bytes, len, "bytes")?;
        let inner = unpack(&EncodedStream::from_bytes(data)?)?;
        write_out(out, Box::into_raw(Box::new(ScevEventImage { inner })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn scev_ideal_bits(model: ScevTransmissionModel, out: *mut u64) -> ScevStatus {
    guard(|| write_out(out, ideal_bits(&model.to_model()?), "out"))
}

/// `ideal_bits(rgb) / ideal_bits(sc)`.
#[no_mangle]
pub unsafe extern "C" fn scev_reduction_ratio(
    rgb: ScevTransmissionModel,
    sc: ScevTransmissionModel,
    out: *mut f64,
) -> ScevStatus {
    guard(|| write_out(out, reduction_ratio(&rgb.to_model()?, &sc.to_model()?)?, "out"))
}

/// Macro-averaged F1 over `n_classes` classes for `len` label pairs.
#[no_mangle]
pub unsafe extern "C" fn scev_macro_f1(
    truth: *const usize,
    pred: *const usize,
    len: usize,
    n_classes: usize,
    out: *mut f64,
) -> ScevStatus {
    guard(|| {
        let t = as_slice(truth, len, "truth")?;
        let p = as_slice(pred, len, "pred")?;
        write_out(out, macro_f1(t, p, n_classes)?.macro_f1, "out")
    })
}
