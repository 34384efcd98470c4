//! Segmentation of index movement series into stationary Gaussian
//! segments by recursive Jensen-Shannon divergence maximization, and
//! complete-link clustering of the segments into volatility phases.
//!
//! The pipeline is:
//!
//! 1. [`ingest`]: ticks to half-hour bars, bars to movements.
//! 2. [`segment`]: recursive cutting, boundary optimization, manual review edits.
//! 3. [`cluster`]: segment distances, complete-link tree, volatility labels.
//! 4. [`report`]: cross-model comparison, timelines, shock scan, exports.
//!
//! [`service`] exposes the same pipeline over HTTP for interactive review
//! and [`cli`] drives it in batch.
//!
//! ```
//! use regimescope::{segment::SegmentationConfig, synth, Model};
//!
//! let regimes = [(600, 0.0, 1.0), (600, 0.0, 20.0)];
//! let series = synth::movement_series(Model::Normal, synth::piecewise_gaussian(&regimes, 7));
//! let seg = regimescope::segment::recursive_segment(&series, SegmentationConfig::default()).unwrap();
//! assert_eq!(seg.boundaries.len(), 1);
//! ```
// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cluster;
pub mod error;
pub mod ingest;
pub mod report;
pub mod segment;
pub mod service;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use ingest::{BarSeries, Model, MovementSeries};
pub use segment::{Segmentation, SegmentationConfig, Segmenter};
