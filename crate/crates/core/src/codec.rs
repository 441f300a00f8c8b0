//! SCEV: row-sparse 2-bit event image encoding.
//!
//! Layout (all multi-byte integers little-endian):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "SCEV"
//!      4     1  version (0x01)
//!      5     1  mode (0x00 absolute, 0x01 relative)
//!      6     4  threshold, IEEE-754 binary32
//!     10     2  width
//!     12     2  height
//!     14     2  active_row_count
//!     16     .  row records: u16 row index, then ceil(width / 4) payload bytes
//! ```
//!
//! Payload codes are `00` NO, `01` ON, `10` OFF (`11` reserved), four pixels
//! per byte with the first pixel in the most significant bit pair. Rows with
//! no events are not transmitted.

use crate::error::{Error, Result};
use crate::threshold::{Polarity, TernaryEventImage, ThresholdMode, ThresholdSpec};

pub const MAGIC: [u8; 4] = *b"SCEV";
pub const VERSION: u8 = 0x01;
pub const HEADER_BYTES: usize = 16;
pub const ROW_INDEX_BYTES: usize = 2;
pub const MAX_DIMENSION: usize = u16::MAX as usize;

const CODE_NONE: u8 = 0b00;
const CODE_ON: u8 = 0b01;
const CODE_OFF: u8 = 0b10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamHeader {
    pub version: u8,
    pub mode: ThresholdMode,
    pub threshold: f32,
    pub width: u16,
    pub height: u16,
    pub active_row_count: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowRecord {
    pub row_index: u16,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedStream {
    header: StreamHeader,
    rows: Vec<RowRecord>,
}

pub fn payload_len(width: usize) -> usize {
    width.div_ceil(4)
}

fn mode_byte(mode: ThresholdMode) -> u8 {
    match mode {
        ThresholdMode::Absolute => 0x00,
        ThresholdMode::Relative => 0x01,
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedStream(msg.into())
}

impl EncodedStream {
    /// Builds a stream from parts, checking the structural invariants.
    pub fn from_parts(header: StreamHeader, rows: Vec<RowRecord>) -> Result<Self> {
        let stream = Self { header, rows };
        stream.validate()?;
        Ok(stream)
    }

    pub fn header(&self) -> &StreamHeader {
        &self.header
    }

    pub fn rows(&self) -> &[RowRecord] {
        &self.rows
    }

    pub fn width(&self) -> usize {
        usize::from(self.header.width)
    }

    pub fn height(&self) -> usize {
        usize::from(self.header.height)
    }

    fn validate(&self) -> Result<()> {
        let h = &self.header;
        if h.version != VERSION {
            return Err(malformed(format!("unsupported version {}", h.version)));
        }
        if h.width == 0 || h.height == 0 {
            return Err(malformed("zero width or height"));
        }
        if !h.threshold.is_finite() {
            return Err(malformed("non-finite threshold"));
        }
        if usize::from(h.active_row_count) != self.rows.len() {
            return Err(malformed(format!(
                "header declares {} rows, stream carries {}",
                h.active_row_count,
                self.rows.len()
            )));
        }
        let expected = payload_len(self.width());
        let mut prev: Option<u16> = None;
        for row in &self.rows {
            if row.row_index >= h.height {
                return Err(malformed(format!("row index {} >= height {}", row.row_index, h.height)));
            }
            if prev.is_some_and(|p| row.row_index <= p) {
                return Err(malformed("row indices not strictly increasing"));
            }
            if row.payload.len() != expected {
                return Err(malformed(format!(
                    "row {} has {} payload bytes, expected {expected}",
                    row.row_index,
                    row.payload.len()
                )));
            }
            prev = Some(row.row_index);
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(self.byte_len());
        out.extend_from_slice(&MAGIC);
        out.push(h.version);
        out.push(mode_byte(h.mode));
        out.extend_from_slice(&h.threshold.to_le_bytes());
        out.extend_from_slice(&h.width.to_le_bytes());
        out.extend_from_slice(&h.height.to_le_bytes());
        out.extend_from_slice(&h.active_row_count.to_le_bytes());
        for row in &self.rows {
            out.extend_from_slice(&row.row_index.to_le_bytes());
            out.extend_from_slice(&row.payload);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return Err(malformed(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if bytes[0..4] != MAGIC {
            return Err(malformed("bad magic"));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let mode = match bytes[5] {
            0x00 => ThresholdMode::Absolute,
            0x01 => ThresholdMode::Relative,
            other => return Err(malformed(format!("unknown mode byte {other:#04x}"))),
        };
        let header = StreamHeader {
            version: bytes[4],
            mode,
            threshold: f32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]),
            width: u16_at(10),
            height: u16_at(12),
            active_row_count: u16_at(14),
        };
        let record_len = ROW_INDEX_BYTES + payload_len(usize::from(header.width));
        let body = &bytes[HEADER_BYTES..];
        let declared = usize::from(header.active_row_count);
        if body.len() != declared * record_len {
            return Err(malformed(format!(
                "expected {} body bytes for {declared} rows, found {}",
                declared * record_len,
                body.len()
            )));
        }
        let rows = body
            .chunks_exact(record_len)
            .map(|rec| RowRecord {
                row_index: u16::from_le_bytes([rec[0], rec[1]]),
                payload: rec[ROW_INDEX_BYTES..].to_vec(),
            })
            .collect();
        Self::from_parts(header, rows)
    }

    pub fn byte_len(&self) -> usize {
        HEADER_BYTES + self.rows.len() * (ROW_INDEX_BYTES + payload_len(self.width()))
    }
}

fn code_of(p: Polarity) -> u8 {
    match p {
        Polarity::None => CODE_NONE,
        Polarity::On => CODE_ON,
        Polarity::Off => CODE_OFF,
    }
}

pub fn pack_row(row: &[Polarity]) -> Vec<u8> {
    let mut payload = vec![0u8; payload_len(row.len())];
    for (i, &p) in row.iter().enumerate() {
        payload[i / 4] |= code_of(p) << (6 - 2 * (i % 4));
    }
    payload
}

pub fn pack(ev: &TernaryEventImage) -> Result<EncodedStream> {
    let (w, h) = (ev.width(), ev.height());
    if w > MAX_DIMENSION || h > MAX_DIMENSION {
        return Err(Error::ImageTooLarge { width: w, height: h });
    }
    let threshold = ev.spec().value() as f32;
    if !threshold.is_finite() {
        return Err(Error::ThresholdOutOfRange {
            mode: ev.spec().mode().as_str(),
            value: ev.spec().value(),
        });
    }
    let rows: Vec<RowRecord> = (0..h)
        .filter(|&y| ev.row(y).iter().any(|p| p.is_event()))
        .map(|y| RowRecord {
            row_index: y as u16,
            payload: pack_row(ev.row(y)),
        })
        .collect();
    let header = StreamHeader {
        version: VERSION,
        mode: ev.spec().mode(),
        threshold,
        width: w as u16,
        height: h as u16,
        active_row_count: rows.len() as u16,
    };
    Ok(EncodedStream { header, rows })
}

/// Inverse of [`pack`]. The threshold comes back at binary32 precision.
pub fn unpack(s: &EncodedStream) -> Result<TernaryEventImage> {
    s.validate()?;
    let (w, h) = (s.width(), s.height());
    let spec = ThresholdSpec::new(s.header.mode, f64::from(s.header.threshold))
        .map_err(|_| malformed(format!("threshold {} invalid for mode", s.header.threshold)))?;
    let mut events = vec![Polarity::None; w * h];
    for row in &s.rows {
        let y = usize::from(row.row_index);
        let out = &mut events[y * w..(y + 1) * w];
        let mut any = false;
        for (x, slot) in out.iter_mut().enumerate() {
            let code = (row.payload[x / 4] >> (6 - 2 * (x % 4))) & 0b11;
            *slot = match code {
                CODE_NONE => Polarity::None,
                CODE_ON => Polarity::On,
                CODE_OFF => Polarity::Off,
                _ => return Err(malformed(format!("reserved code 11 in row {y}, column {x}"))),
            };
            any |= slot.is_event();
        }
        let used_bits = 2 * (w % 4);
        if used_bits != 0 {
            let pad_mask = 0xFFu8 >> used_bits;
            if row.payload[w / 4] & pad_mask != 0 {
                return Err(malformed(format!("nonzero pad bits in row {y}")));
            }
        }
        if !any {
            return Err(malformed(format!("row {y} transmitted without events")));
        }
    }
    TernaryEventImage::new(w, h, events, spec)
}

/// Wire cost of a stream in bits, header and row indices included.
pub fn measured_bits(s: &EncodedStream) -> u64 {
    8 * s.byte_len() as u64
}

/// Parameters of the idealized transmission size `w * h * c * b * alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionModel {
    pub width: u64,
    pub height: u64,
    pub channels: u64,
    pub bits_per_channel: u64,
    pub alpha: f64,
}

impl TransmissionModel {
    pub fn new(width: u64, height: u64, channels: u64, bits_per_channel: u64, alpha: f64) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 || bits_per_channel == 0 {
            return Err(Error::InvalidModel(
                "width, height, channels and bits must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidModel(format!("alpha {alpha} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            bits_per_channel,
            alpha,
        })
    }

    /// Three 8-bit channels, every row transmitted.
    pub fn rgb8(width: u64, height: u64) -> Result<Self> {
        Self::new(width, height, 3, 8, 1.0)
    }

    /// One 2-bit channel with the given active-row fraction.
    pub fn spatial_contrast(width: u64, height: u64, alpha: f64) -> Result<Self> {
        Self::new(width, height, 1, 2, alpha)
    }

    /// The model matching an encoded stream's actual active-row fraction.
    pub fn for_stream(s: &EncodedStream) -> Self {
        let h = s.height() as u64;
        Self {
            width: s.width() as u64,
            height: h,
            channels: 1,
            bits_per_channel: 2,
            alpha: f64::from(s.header.active_row_count) / h as f64,
        }
    }
}

/// `w * h * c * b * alpha`, rounded up to whole bits.
///
/// Results within a few ulps of an integer are taken as that integer, so an
/// alpha of `k / h` does not gain a spurious bit from rounding in the division.
pub fn ideal_bits(m: &TransmissionModel) -> u64 {
    let full = m.width * m.height * m.channels * m.bits_per_channel;
    if m.alpha == 1.0 {
        return full;
    }
    let x = full as f64 * m.alpha;
    let nearest = x.round();
    if (x - nearest).abs() <= 4.0 * f64::EPSILON * x.abs() {
        nearest as u64
    } else {
        x.ceil() as u64
    }
}

pub fn reduction_ratio(rgb: &TransmissionModel, sc: &TransmissionModel) -> Result<f64> {
    if (rgb.width, rgb.height) != (sc.width, sc.height) {
        return Err(Error::DimensionMismatch {
            expected: (rgb.width as usize, rgb.height as usize),
            actual: (sc.width as usize, sc.height as usize),
        });
    }
    if sc.alpha == 0.0 {
        return Err(Error::DivisionByZero("spatial-contrast model has alpha = 0"));
    }
    let denom = ideal_bits(sc);
    if denom == 0 {
        return Err(Error::DivisionByZero("spatial-contrast model has zero ideal bits"));
    }
    Ok(ideal_bits(rgb) as f64 / denom as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ThresholdSpec {
        ThresholdSpec::absolute(0.125).unwrap()
    }

    fn image(w: usize, h: usize, v: &[i8]) -> TernaryEventImage {
        TernaryEventImage::from_i8(w, h, v, spec()).unwrap()
    }

    /// Independent packer: builds the bit string character by character.
    fn bit_string_pack(row: &[i8]) -> Vec<u8> {
        let mut bits = String::new();
        for &v in row {
            bits.push_str(match v {
                0 => "00",
                1 => "01",
                -1 => "10",
                _ => unreachable!(),
            });
        }
        while !bits.len().is_multiple_of(8) {
            bits.push('0');
        }
        (0..bits.len() / 8)
            .map(|i| u8::from_str_radix(&bits[i * 8..i * 8 + 8], 2).unwrap())
            .collect()
    }

    #[test]
    fn empty_image_has_no_rows() {
        let s = pack(&image(8, 8, &[0; 64])).unwrap();
        assert_eq!(s.header().active_row_count, 0);
        assert!(s.rows().is_empty());
        assert_eq!(measured_bits(&s), 128);
    }

    #[test]
    fn single_row_payload() {
        let s = pack(&image(4, 1, &[1, -1, 0, 0])).unwrap();
        assert_eq!(s.rows().len(), 1);
        assert_eq!(s.rows()[0].payload, vec![0x60]);
        assert_eq!(s.rows()[0].payload, bit_string_pack(&[1, -1, 0, 0]));
    }

    #[test]
    fn center_on_golden_payloads() {
        let grid = [-1, -1, -1, -1, 1, -1, -1, -1, -1];
        let s = pack(&image(3, 3, &grid)).unwrap();
        let payloads: Vec<_> = s.rows().iter().map(|r| r.payload.clone()).collect();
        assert_eq!(payloads, vec![vec![0xA8], vec![0x98], vec![0xA8]]);
        for (r, chunk) in s.rows().iter().zip(grid.chunks(3)) {
            assert_eq!(r.payload, bit_string_pack(chunk));
        }
        assert_eq!(measured_bits(&s), 200);
        assert_eq!(measured_bits(&s), 8 * s.to_bytes().len() as u64);
    }

    #[test]
    fn one_active_row_of_eight() {
        let mut grid = [0i8; 64];
        grid[3 * 8 + 5] = 1;
        let s = pack(&image(8, 8, &grid)).unwrap();
        assert_eq!(measured_bits(&s), 160);
        assert_eq!(s.rows()[0].row_index, 3);
    }

    #[test]
    fn empty_stream_decodes_to_zero_image() {
        let header = StreamHeader {
            version: VERSION,
            mode: ThresholdMode::Relative,
            threshold: 0.05,
            width: 5,
            height: 4,
            active_row_count: 0,
        };
        let s = EncodedStream::from_parts(header, vec![]).unwrap();
        let ev = unpack(&s).unwrap();
        assert_eq!((ev.width(), ev.height()), (5, 4));
        assert!(ev.events().iter().all(|&p| p == Polarity::None));
    }

    #[test]
    fn golden_bytes() {
        let grid = [-1, -1, -1, -1, 1, -1, -1, -1, -1];
        let bytes = pack(&image(3, 3, &grid)).unwrap().to_bytes();
        let mut expected = b"SCEV\x01\x00".to_vec();
        expected.extend_from_slice(&0.125f32.to_le_bytes());
        expected.extend_from_slice(&[3, 0, 3, 0, 3, 0]);
        expected.extend_from_slice(&[0, 0, 0xA8, 1, 0, 0x98, 2, 0, 0xA8]);
        assert_eq!(bytes, expected);
        let back = unpack(&EncodedStream::from_bytes(&bytes).unwrap()).unwrap();
        assert_eq!(back, image(3, 3, &grid));
    }

    fn single_row_stream(payload: u8) -> Vec<u8> {
        let mut bytes = pack(&image(3, 1, &[1, 0, 0])).unwrap().to_bytes();
        *bytes.last_mut().unwrap() = payload;
        bytes
    }

    #[test]
    fn malformed_streams() {
        let decode = |b: &[u8]| EncodedStream::from_bytes(b).and_then(|s| unpack(&s));
        let reserved = single_row_stream(0b1100_0000);
        assert!(matches!(decode(&reserved), Err(Error::MalformedStream(_))));
        let pad = single_row_stream(0b0100_0001);
        assert!(matches!(decode(&pad), Err(Error::MalformedStream(_))));
        let empty_row = single_row_stream(0);
        assert!(matches!(decode(&empty_row), Err(Error::MalformedStream(_))));

        let good = single_row_stream(0b0100_0000);
        assert!(decode(&good).is_ok());
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode(&bad_magic), Err(Error::MalformedStream(_))));
        assert!(matches!(
            decode(&good[..good.len() - 1]),
            Err(Error::MalformedStream(_))
        ));
        assert!(matches!(decode(&good[..10]), Err(Error::MalformedStream(_))));

        let grid = [1, 0, 0, 0, 1, 0];
        let mut two = pack(&image(3, 2, &grid)).unwrap().to_bytes();
        two[16] = 1;
        two[19] = 0;
        assert!(matches!(decode(&two), Err(Error::MalformedStream(_))));
    }

    #[test]
    fn too_large() {
        let spec = spec();
        let ev = TernaryEventImage::new(MAX_DIMENSION + 1, 1, vec![Polarity::None; MAX_DIMENSION + 1], spec).unwrap();
        assert!(matches!(pack(&ev), Err(Error::ImageTooLarge { .. })));
    }

    #[test]
    fn ideal_bits_examples() {
        assert_eq!(ideal_bits(&TransmissionModel::rgb8(32, 32).unwrap()), 24576);
        assert_eq!(
            ideal_bits(&TransmissionModel::spatial_contrast(32, 32, 1.0).unwrap()),
            2048
        );
        // 1360 * 1024 * 3 * 8, checked with u128 arithmetic
        let expected = 1360u128 * 1024 * 3 * 8;
        assert_eq!(
            u128::from(ideal_bits(&TransmissionModel::rgb8(1360, 1024).unwrap())),
            expected
        );
        assert_eq!(expected, 33_423_360);
        assert_eq!(ideal_bits(&TransmissionModel::new(3, 1, 1, 1, 0.5).unwrap()), 2);
    }

    #[test]
    fn ideal_bits_exact_for_row_fractions() {
        for h in 1..200u64 {
            for k in 0..=h {
                let m = TransmissionModel::spatial_contrast(48, h, k as f64 / h as f64).unwrap();
                assert_eq!(ideal_bits(&m), 96 * k);
            }
        }
    }

    #[test]
    fn reduction_examples() {
        let rgb = TransmissionModel::rgb8(32, 32).unwrap();
        let sc = TransmissionModel::spatial_contrast(32, 32, 1.0).unwrap();
        assert_eq!(reduction_ratio(&rgb, &sc).unwrap(), 12.0);
        assert_eq!(reduction_ratio(&rgb, &rgb).unwrap(), 1.0);
        let half = TransmissionModel::spatial_contrast(32, 32, 0.5).unwrap();
        assert_eq!(reduction_ratio(&rgb, &half).unwrap(), 24.0);
        let none = TransmissionModel::spatial_contrast(32, 32, 0.0).unwrap();
        assert!(matches!(reduction_ratio(&rgb, &none), Err(Error::DivisionByZero(_))));
        let other = TransmissionModel::spatial_contrast(16, 32, 1.0).unwrap();
        assert!(reduction_ratio(&rgb, &other).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(TransmissionModel::new(0, 1, 1, 1, 1.0).is_err());
        assert!(TransmissionModel::new(1, 1, 1, 1, 1.5).is_err());
        assert!(TransmissionModel::new(1, 1, 1, 1, f64::NAN).is_err());
    }
}
