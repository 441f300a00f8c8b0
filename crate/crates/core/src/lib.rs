//! Spatial-contrast event vision: ternary ON/OFF/NO event images from
//! raster frames, a row-sparse 2-bit wire format modelling a query-based
//! readout, and the corpus statistics used to quantify data-rate reduction.
//!
//! The pipeline is
//! `RgbImage -> GrayImage -> ContrastImage -> TernaryEventImage -> EncodedStream`:
//!
//! ```
//! use scev::{codec, raster, threshold};
//!
//! let rgb = raster::RgbImage::filled(8, 8, [90, 120, 200]).unwrap();
//! let gray = raster::to_grayscale(&rgb);
//! let spec = threshold::ThresholdSpec::absolute(0.02).unwrap();
//! let events = threshold::encode_events(&gray, spec).unwrap();
//! let stream = codec::pack(&events).unwrap();
//! assert_eq!(stream.header().active_row_count, 0);
//! assert_eq!(codec::unpack(&stream).unwrap().events(), events.events());
//! ```

pub mod activity;
pub mod cli;
pub mod codec;
pub mod dataset;
mod error;
pub mod io;
pub mod metrics;
pub mod raster;
pub mod threshold;

pub use error::{Error, Result};
