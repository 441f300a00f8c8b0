//! Ternary event generation from spatial contrast.
//!
//! Absolute mode compares the contrast against `±rho` with `rho` in `[0, 1]`.
//! Relative mode compares `contrast / gray` against `±beta` with
//! `beta >= 0`; pixels with zero intensity never fire. In both modes the ON
//! clause is tested first, so at a zero threshold an exactly-zero contrast
//! maps to ON.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::{spatial_contrast, ContrastImage, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdMode {
    Absolute,
    Relative,
}

impl ThresholdMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdMode::Absolute => "absolute",
            ThresholdMode::Relative => "relative",
        }
    }
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "absolute" | "abs" => Ok(ThresholdMode::Absolute),
            "relative" | "rel" => Ok(ThresholdMode::Relative),
            other => Err(Error::InvalidArgument(format!("unknown threshold mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSpec {
    mode: ThresholdMode,
    value: f64,
}

impl ThresholdSpec {
    pub fn new(mode: ThresholdMode, value: f64) -> Result<Self> {
        let ok = match mode {
            ThresholdMode::Absolute => (0.0..=1.0).contains(&value),
            ThresholdMode::Relative => value >= 0.0 && value.is_finite(),
        };
        if ok {
            Ok(Self { mode, value })
        } else {
            Err(Error::ThresholdOutOfRange {
                mode: mode.as_str(),
                value,
            })
        }
    }

    pub fn absolute(rho: f64) -> Result<Self> {
        Self::new(ThresholdMode::Absolute, rho)
    }

    pub fn relative(beta: f64) -> Result<Self> {
        Self::new(ThresholdMode::Relative, beta)
    }

    pub fn mode(&self) -> ThresholdMode {
        self.mode
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Event polarity at one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(i8)]
pub enum Polarity {
    Off = -1,
    None = 0,
    On = 1,
}

impl Polarity {
    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Polarity::Off),
            0 => Some(Polarity::None),
            1 => Some(Polarity::On),
            _ => None,
        }
    }

    pub fn as_i8(self) -> i8 {
        self as i8
    }

    pub fn is_event(self) -> bool {
        self != Polarity::None
    }

    /// Gray level used when rendering event images.
    pub fn render_level(self) -> u8 {
        match self {
            Polarity::Off => 0,
            Polarity::None => 128,
            Polarity::On => 255,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TernaryEventImage {
    width: usize,
    height: usize,
    events: Vec<Polarity>,
    spec: ThresholdSpec,
}

impl TernaryEventImage {
    pub fn new(width: usize, height: usize, events: Vec<Polarity>, spec: ThresholdSpec) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if events.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} events for {width}x{height}, got {}",
                width * height,
                events.len()
            )));
        }
        Ok(Self {
            width,
            height,
            events,
            spec,
        })
    }

    pub fn from_i8(width: usize, height: usize, values: &[i8], spec: ThresholdSpec) -> Result<Self> {
        let events = values
            .iter()
            .map(|&v| {
                Polarity::from_i8(v).ok_or_else(|| Error::InvalidImage(format!("event value {v} not in {{-1, 0, 1}}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(width, height, events, spec)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn events(&self) -> &[Polarity] {
        &self.events
    }

    pub fn spec(&self) -> ThresholdSpec {
        self.spec
    }

    pub fn get(&self, x: usize, y: usize) -> Polarity {
        self.events[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[Polarity] {
        &self.events[y * self.width..(y + 1) * self.width]
    }

    pub fn to_i8(&self) -> Vec<i8> {
        self.events.iter().map(|p| p.as_i8()).collect()
    }

    /// 8-bit rendering: OFF 0, NO 128, ON 255.
    pub fn render(&self) -> Vec<u8> {
        self.events.iter().map(|p| p.render_level()).collect()
    }
}

pub fn apply_absolute(sc: &ContrastImage, rho: f64) -> Result<TernaryEventImage> {
    let spec = ThresholdSpec::absolute(rho)?;
    let events = sc
        .values()
        .iter()
        .map(|&c| {
            if c >= rho {
                Polarity::On
            } else if c <= -rho {
                Polarity::Off
            } else {
                Polarity::None
            }
        })
        .collect();
    TernaryEventImage::new(sc.width(), sc.height(), events, spec)
}

/// `gray` must be the image `sc` was computed from.
pub fn apply_relative(sc: &ContrastImage, gray: &GrayImage, beta: f64) -> Result<TernaryEventImage> {
    if (sc.width(), sc.height()) != (gray.width(), gray.height()) {
        return Err(Error::DimensionMismatch {
            expected: (sc.width(), sc.height()),
            actual: (gray.width(), gray.height()),
        });
    }
    let spec = ThresholdSpec::relative(beta)?;
    let events = sc
        .values()
        .iter()
        .zip(gray.pixels())
        .map(|(&c, &g)| {
            if g <= 0.0 {
                return Polarity::None;
            }
            let ratio = c / g;
            if ratio >= beta {
                Polarity::On
            } else if ratio <= -beta {
                Polarity::Off
            } else {
                Polarity::None
            }
        })
        .collect();
    TernaryEventImage::new(sc.width(), sc.height(), events, spec)
}

/// Full pipeline: spatial contrast, then thresholding per `spec`.
pub fn encode_events(img: &GrayImage, spec: ThresholdSpec) -> Result<TernaryEventImage> {
    let sc = spatial_contrast(img);
    match spec.mode() {
        ThresholdMode::Absolute => apply_absolute(&sc, spec.value()),
        ThresholdMode::Relative => apply_relative(&sc, img, spec.value()),
    }
}
