//! Recursive entropic segmentation.
//!
//! A cursor `t` splits an interval `start..end` into `start..t` and
//! `t..end`. Its divergence is
//!
//! ```text
//! D(t) = N ln s - nL ln sL - nR ln sR + 1/2
//! ```
//!
//! where `s`, `sL`, `sR` are the MLE standard deviations of the whole
//! interval and of the two halves. The segmenter repeatedly accepts the
//! strongest cut over all live segments while it reaches the threshold,
//! re-optimizing every boundary inside its supersegment after each cut.
//!
//! Cursor values are "number of samples to the left of the cut", so a
//! boundary at `t` ends one segment at sample `t - 1` and starts the next
//! at sample `t` (0-based).

use std::collections::HashMap;
use std::ops::Range;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Model, MovementSeries};
use crate::stats::{GaussianStats, PrefixStats};

pub const SCHEMA_VERSION: u32 = 1;

/// Spectra with more positions than this are evaluated on the rayon pool.
const PARALLEL_SPECTRUM_MIN: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    /// Minimum divergence for an automatic cut.
    pub threshold: f64,
    /// Minimum automatic segment length, in samples.
    pub min_len: usize,
    pub max_opt_sweeps: usize,
    /// Subsegment variances are floored at this fraction of the whole-interval variance.
    pub variance_floor_ratio: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            threshold: 10.0,
            min_len: 13,
            max_opt_sweeps: 100,
            variance_floor_ratio: 1e-12,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(Error::Config("threshold must be positive".into()));
        }
        if self.min_len < 2 {
            return Err(Error::Config("min_len must be at least 2".into()));
        }
        if !(self.variance_floor_ratio > 0.0 && self.variance_floor_ratio < 1.0) {
            return Err(Error::Config("variance_floor_ratio must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Divergence of every admissible cursor inside one interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSpectrum {
    pub start: usize,
    pub end: usize,
    /// Cursor of `values[0]`.
    pub first_cursor: usize,
    pub values: Vec<f64>,
    pub argmax: usize,
    pub max: f64,
}

impl DivergenceSpectrum {
    pub fn cursors(&self) -> Range<usize> {
        self.first_cursor..self.first_cursor + self.values.len()
    }

    pub fn at(&self, cursor: usize) -> Option<f64> {
        cursor
            .checked_sub(self.first_cursor)
            .and_then(|i| self.values.get(i).copied())
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.cursors().zip(self.values.iter().copied())
    }
}

/// Position of the largest value, smallest cursor on ties.
pub fn best_split(s: &DivergenceSpectrum) -> Result<(usize, f64)> {
    argmax(&s.values)
        .map(|(i, v)| (s.first_cursor + i, v))
        .ok_or(Error::TooShort { needed: 1, got: 0 })
}

fn argmax(values: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Automatic,
    ManualAdd,
    /// Confirmed by the analyst; never moved by optimization.
    ManualKeep,
}

impl Provenance {
    pub fn is_manual(self) -> bool {
        !matches!(self, Provenance::Automatic)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    /// Cursor position: number of samples left of the cut.
    pub index: usize,
    /// Timestamp of the last movement left of the cut.
    pub timestamp: DateTime<Utc>,
    /// Divergence when the cut was introduced.
    pub delta: f64,
    pub provenance: Provenance,
}

/// One stationary segment covering samples `start..end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// Timestamps of the first and last movement in the segment.
    pub start_time: DateTime<Utc>,
    pub end_time: DateTime<Utc>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn stats(&self) -> GaussianStats {
        GaussianStats {
            n: self.n,
            mean: self.mean,
            variance: self.variance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EditKind {
    /// Cut the segment containing sample `at` at its spectrum maximum.
    ForceCut { at: usize },
    /// Delete the boundary at cursor `t`, merging its neighbours.
    RemoveBoundary { t: usize },
    /// Sign off on the segmentation. With a boundary, pin it as manual-keep.
    Accept {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boundary: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManualEdit {
    #[serde(flatten)]
    pub kind: EditKind,
    pub actor: String,
    pub timestamp: DateTime<Utc>,
}

/// Ordered boundaries and per-segment fits over a movement series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub schema_version: u32,
    pub model: Model,
    pub config: SegmentationConfig,
    pub n_total: usize,
    pub bars_per_day: usize,
    pub boundaries: Vec<Boundary>,
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub audit: Vec<ManualEdit>,
}

impl Segmentation {
    pub fn cursors(&self) -> Vec<usize> {
        self.boundaries.iter().map(|b| b.index).collect()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Index of the segment containing sample `i`.
    pub fn segment_of(&self, i: usize) -> Option<usize> {
        if i >= self.n_total {
            return None;
        }
        Some(self.boundaries.partition_point(|b| b.index <= i))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let seg: Segmentation = serde_json::from_str(s)?;
        if seg.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported segmentation schema version {}",
                seg.schema_version
            )));
        }
        seg.check_structure()?;
        Ok(seg)
    }

    fn check_structure(&self) -> Result<()> {
        let mut prev = 0;
        for b in &self.boundaries {
            if b.index <= prev || b.index >= self.n_total {
                return Err(Error::Parse(format!("boundary {} out of order or range", b.index)));
            }
            prev = b.index;
        }
        if self.segments.len() != self.boundaries.len() + 1 {
            return Err(Error::Parse("segment count does not match boundaries".into()));
        }
        Ok(())
    }
}

/// One relocation performed during boundary optimization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryMove {
    pub sweep: usize,
    pub from: usize,
    pub to: usize,
    /// Supersegment divergence at `from`.
    pub before: f64,
    /// Supersegment divergence at `to`, strictly larger than `before`.
    pub after: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizeReport {
    pub sweeps: usize,
    pub converged: bool,
    pub moves: Vec<BoundaryMove>,
}

/// Segmentation engine bound to one movement series.
///
/// Holds the immutable prefix statistics; every method is a pure function
/// of its inputs, so one `Segmenter` can serve many threads.
#[derive(Clone, Debug)]
pub struct Segmenter<'a> {
    series: &'a MovementSeries,
    prefix: PrefixStats,
    config: SegmentationConfig,
    /// Variance indistinguishable from zero given the rounding of the prefix sums.
    zero_variance: f64,
}

impl<'a> Segmenter<'a> {
    pub fn new(series: &'a MovementSeries, config: SegmentationConfig) -> Result<Self> {
        config.validate()?;
        let prefix = PrefixStats::new(series.values())?;
        let n = prefix.len();
        let total = prefix.interval_unchecked(0, n).variance;
        Ok(Self {
            series,
            prefix,
            config,
            zero_variance: 16.0 * f64::EPSILON * f64::EPSILON * n as f64 * total,
        })
    }

    pub fn config(&self) -> &SegmentationConfig {
        &self.config
    }

    pub fn prefix(&self) -> &PrefixStats {
        &self.prefix
    }

    pub fn series(&self) -> &MovementSeries {
        self.series
    }

    /// Spectrum over `range` with `min_len` on both sides.
    pub fn spectrum(&self, range: Range<usize>) -> Result<DivergenceSpectrum> {
        let m = self.config.min_len;
        self.spectrum_with(range, m, m)
    }

    fn spectrum_with(
        &self,
        range: Range<usize>,
        min_left: usize,
        min_right: usize,
    ) -> Result<DivergenceSpectrum> {
        let (start, end) = (range.start, range.end);
        if start >= end || end > self.prefix.len() {
            return Err(Error::BadInterval {
                start,
                end,
                len: self.prefix.len(),
            });
        }
        let len = end - start;
        if len < min_left + min_right {
            return Err(Error::TooShort {
                needed: min_left + min_right,
                got: len,
            });
        }
        let whole = self.prefix.interval_unchecked(start, end);
        if self.is_degenerate(&whole) {
            return Err(Error::DegenerateInterval { start, end });
        }
        let floor = self.config.variance_floor_ratio * whole.variance;
        let base = len as f64 * whole.variance.ln();
        let first = start + min_left;
        let last = end - min_right;
        let eval = |t: usize| {
            let l = self.prefix.interval_unchecked(start, t);
            let r = self.prefix.interval_unchecked(t, end);
            let ll = l.n as f64 * l.variance.max(floor).ln();
            let rr = r.n as f64 * r.variance.max(floor).ln();
            0.5 * (base - ll - rr) + 0.5
        };
        let values: Vec<f64> = if last + 1 - first >= PARALLEL_SPECTRUM_MIN {
            (first..=last).into_par_iter().map(eval).collect()
        } else {
            (first..=last).map(eval).collect()
        };
        let (i, max) = argmax(&values).expect("non-empty spectrum");
        Ok(DivergenceSpectrum {
            start,
            end,
            first_cursor: first,
            values,
            argmax: first + i,
            max,
        })
    }

    /// Zero variance up to the resolution of the values and of the prefix sums.
    fn is_degenerate(&self, s: &GaussianStats) -> bool {
        let noise = 4.0 * s.n as f64 * f64::EPSILON * s.mean.abs();
        s.variance <= (noise * noise).max(self.zero_variance)
    }

    fn segment_over(&self, start: usize, end: usize) -> Segment {
        let s = self.prefix.interval_unchecked(start, end);
        let ts = self.series.timestamps();
        Segment {
            start,
            end,
            n: s.n,
            mean: s.mean,
            variance: s.variance,
            start_time: ts[start],
            end_time: ts[end - 1],
        }
    }

    fn timestamp_of(&self, cursor: usize) -> DateTime<Utc> {
        self.series.timestamps()[cursor - 1]
    }

    fn boundary(&self, index: usize, delta: f64, provenance: Provenance) -> Boundary {
        Boundary {
            index,
            timestamp: self.timestamp_of(index),
            delta,
            provenance,
        }
    }

    fn assemble(&self, mut boundaries: Vec<Boundary>, audit: Vec<ManualEdit>) -> Segmentation {
        boundaries.sort_by_key(|b| b.index);
        let n = self.prefix.len();
        let mut edges = Vec::with_capacity(boundaries.len() + 2);
        edges.push(0);
        edges.extend(boundaries.iter().map(|b| b.index));
        edges.push(n);
        let segments = edges.windows(2).map(|w| self.segment_over(w[0], w[1])).collect();
        for b in &mut boundaries {
            b.timestamp = self.timestamp_of(b.index);
        }
        Segmentation {
            schema_version: SCHEMA_VERSION,
            model: self.series.model(),
            config: self.config,
            n_total: n,
            bars_per_day: self.series.bars_per_day(),
            boundaries,
            segments,
            audit,
        }
    }

    /// A segmentation with no boundaries.
    pub fn unsegmented(&self) -> Segmentation {
        self.assemble(Vec::new(), Vec::new())
    }

    /// Rebuild from explicit boundaries, e.g. a saved document.
    pub fn from_boundaries(&self, boundaries: Vec<Boundary>) -> Result<Segmentation> {
        let seg = self.assemble(boundaries, Vec::new());
        self.check(&seg)?;
        Ok(seg)
    }

    fn check(&self, seg: &Segmentation) -> Result<()> {
        if seg.n_total != self.prefix.len() {
            return Err(Error::Incompatible(format!(
                "segmentation covers {} samples, series has {}",
                seg.n_total,
                self.prefix.len()
            )));
        }
        let mut prev = 0;
        for b in &seg.boundaries {
            if b.index <= prev || b.index >= seg.n_total {
                return Err(Error::Incompatible(format!(
                    "boundary {} out of order or range",
                    b.index
                )));
            }
            prev = b.index;
        }
        Ok(())
    }

    fn best_cut(&self, start: usize, end: usize) -> Option<(usize, f64)> {
        if end - start < 2 * self.config.min_len {
            return None;
        }
        self.spectrum(start..end).ok().map(|s| (s.argmax, s.max))
    }

    /// Cut recursively while the strongest candidate reaches the threshold.
    pub fn recursive_segment(&self) -> Result<Segmentation> {
        let n = self.prefix.len();
        let needed = 2 * self.config.min_len;
        if n < needed {
            return Err(Error::TooShort { needed, got: n });
        }
        let mut seg = self.unsegmented();
        let mut cache: HashMap<(usize, usize), Option<(usize, f64)>> = HashMap::new();
        loop {
            let mut best: Option<(usize, f64)> = None;
            for s in &seg.segments {
                let cut = *cache
                    .entry((s.start, s.end))
                    .or_insert_with(|| self.best_cut(s.start, s.end));
                if let Some((t, d)) = cut {
                    if best.is_none_or(|(_, b)| d > b) {
                        best = Some((t, d));
                    }
                }
            }
            let Some((t, delta)) = best else { break };
            if delta < self.config.threshold {
                break;
            }
            let mut boundaries = seg.boundaries;
            boundaries.push(self.boundary(t, delta, Provenance::Automatic));
            seg = self.assemble(boundaries, seg.audit);
            seg = self.optimize_boundaries(seg)?.0;
            cache.retain(|&(s, e), _| seg.segments.iter().any(|x| x.start == s && x.end == e));
        }
        Ok(seg)
    }

    /// Move each boundary to the divergence maximum of its supersegment
    /// until no boundary moves or `max_opt_sweeps` is reached.
    pub fn optimize_boundaries(&self, seg: Segmentation) -> Result<(Segmentation, OptimizeReport)> {
        self.check(&seg)?;
        let mut report = OptimizeReport::default();
        if seg.boundaries.is_empty() {
            report.converged = true;
            return Ok((seg, report));
        }
        let n = self.prefix.len();
        let min_len = self.config.min_len;
        let mut boundaries = seg.boundaries;
        while report.sweeps < self.config.max_opt_sweeps {
            report.sweeps += 1;
            let mut moved = false;
            for m in 0..boundaries.len() {
                if boundaries[m].provenance == Provenance::ManualKeep {
                    continue;
                }
                let lo = if m == 0 { 0 } else { boundaries[m - 1].index };
                let hi = boundaries.get(m + 1).map_or(n, |b| b.index);
                let t = boundaries[m].index;
                // Short manual segments keep their current length as the floor.
                let min_left = min_len.min(t - lo).max(1);
                let min_right = min_len.min(hi - t).max(1);
                let spectrum = match self.spectrum_with(lo..hi, min_left, min_right) {
                    Ok(s) => s,
                    Err(Error::DegenerateInterval { .. }) => continue,
                    Err(e) => return Err(e),
                };
                let before = spectrum.at(t).expect("current cursor lies in spectrum");
                if spectrum.max > before && spectrum.argmax != t {
                    report.moves.push(BoundaryMove {
                        sweep: report.sweeps,
                        from: t,
                        to: spectrum.argmax,
                        before,
                        after: spectrum.max,
                    });
                    boundaries[m].index = spectrum.argmax;
                    moved = true;
                }
            }
            if !moved {
                report.converged = true;
                break;
            }
        }
        Ok((self.assemble(boundaries, seg.audit), report))
    }

    /// Apply an analyst edit and append it to the audit trail.
    pub fn apply_manual_edit(&self, seg: &Segmentation, edit: ManualEdit) -> Result<Segmentation> {
        self.check(seg)?;
        let mut boundaries = seg.boundaries.clone();
        match &edit.kind {
            EditKind::ForceCut { at } => {
                let m = seg
                    .segment_of(*at)
                    .ok_or_else(|| Error::BadEdit(format!("sample {at} is outside the series")))?;
                let target = seg.segments[m];
                let side = self.config.min_len.min(target.len() / 2);
                if side < 2 {
                    return Err(Error::BadEdit(format!(
                        "segment {m} has {} samples; a manual cut needs at least 4",
                        target.len()
                    )));
                }
                let spectrum = self.spectrum_with(target.range(), side, side).map_err(|e| match e {
                    Error::DegenerateInterval { .. } => {
                        Error::BadEdit(format!("segment {m} has zero variance"))
                    }
                    other => other,
                })?;
                boundaries.push(self.boundary(spectrum.argmax, spectrum.max, Provenance::ManualAdd));
            }
            EditKind::RemoveBoundary { t } => {
                let pos = boundaries
                    .iter()
                    .position(|b| b.index == *t)
                    .ok_or_else(|| Error::BadEdit(format!("no boundary at {t}")))?;
                boundaries.remove(pos);
            }
            EditKind::Accept { boundary: Some(t) } => {
                let b = boundaries
                    .iter_mut()
                    .find(|b| b.index == *t)
                    .ok_or_else(|| Error::BadEdit(format!("no boundary at {t}")))?;
                b.provenance = Provenance::ManualKeep;
            }
            EditKind::Accept { boundary: None } => {}
        }
        let mut audit = seg.audit.clone();
        audit.push(edit);
        Ok(self.assemble(boundaries, audit))
    }
}


/// Spectrum over the 0-based half-open interval `range` of `series`.
pub fn divergence_spectrum(
    series: &MovementSeries,
    range: Range<usize>,
    config: SegmentationConfig,
) -> Result<DivergenceSpectrum> {
    Segmenter::new(series, config)?.spectrum(range)
}

/// Full automatic segmentation (recursive cutting with optimization).
pub fn recursive_segment(series: &MovementSeries, config: SegmentationConfig) -> Result<Segmentation> {
    Segmenter::new(series, config)?.recursive_segment()
}

pub fn optimize_boundaries(
    series: &MovementSeries,
    seg: Segmentation,
    config: SegmentationConfig,
) -> Result<Segmentation> {
    Ok(Segmenter::new(series, config)?.optimize_boundaries(seg)?.0)
}

pub fn apply_manual_edit(
    series: &MovementSeries,
    seg: &Segmentation,
    edit: ManualEdit,
    config: SegmentationConfig,
) -> Result<Segmentation> {
    Segmenter::new(series, config)?.apply_manual_edit(seg, edit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn series(values: &[f64]) -> MovementSeries {
        synth::movement_series(Model::Normal, values.to_vec())
    }

    fn cfg(min_len: usize) -> SegmentationConfig {
        SegmentationConfig {
            min_len,
            ..Default::default()
        }
    }

    fn spectrum_of(values: &[f64], min_len: usize) -> DivergenceSpectrum {
        divergence_spectrum(&series(values), 0..values.len(), cfg(min_len)).unwrap()
    }

    #[test]
    fn equal_statistics_split_is_one_half() {
        let s = spectrum_of(&[-1.0, 1.0, -1.0, 1.0], 2);
        assert_eq!(s.values.len(), 1);
        assert_eq!(s.first_cursor, 2);
        assert!((s.values[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unequal_variance_split() {
        let s = spectrum_of(&[-1.0, 1.0, -3.0, 3.0], 2);
        let expected = 2.0 * (5.0f64 / 3.0).ln() + 0.5;
        assert!((s.values[0] - expected).abs() < 1e-10);
        assert!((s.values[0] - 1.5216).abs() < 1e-4);
    }

    #[test]
    fn affine_map_leaves_spectrum_unchanged() {
        let z: Vec<f64> = (0..60).map(|i| ((i * 7919) % 13) as f64 - 6.0 + if i > 30 { (i % 5) as f64 * 3.0 } else { 0.0 }).collect();
        let w: Vec<f64> = z.iter().map(|v| 2.0 * v + 3.0).collect();
        let (a, b) = (spectrum_of(&z, 5), spectrum_of(&w, 5));
        for (u, v) in a.values.iter().zip(&b.values) {
            assert!((u - v).abs() < 1e-9);
        }
        assert_eq!(a.argmax, b.argmax);
    }

    fn spectrum_from(values: Vec<f64>) -> DivergenceSpectrum {
        let (i, max) = argmax(&values).unwrap();
        DivergenceSpectrum {
            start: 0,
            end: 10,
            first_cursor: 3,
            argmax: 3 + i,
            max,
            values,
        }
    }

    #[test]
    fn best_split_picks_max_then_smallest_cursor() {
        assert_eq!(best_split(&spectrum_from(vec![0.5, 3.1, 0.5])).unwrap(), (4, 3.1));
        assert_eq!(best_split(&spectrum_from(vec![2.0, 2.0])).unwrap(), (3, 2.0));
        let empty = DivergenceSpectrum {
            start: 0,
            end: 0,
            first_cursor: 0,
            values: vec![],
            argmax: 0,
            max: 0.0,
        };
        assert!(matches!(best_split(&empty), Err(Error::TooShort { .. })));
    }

    #[test]
    fn spectrum_errors() {
        let s = series(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            divergence_spectrum(&s, 0..3, cfg(2)),
            Err(Error::TooShort { .. })
        ));
        let flat = series(&[4.0; 10]);
        assert!(matches!(
            divergence_spectrum(&flat, 0..10, cfg(2)),
            Err(Error::DegenerateInterval { .. })
        ));
        let tenth = series(&[0.1; 1000]);
        assert!(matches!(
            divergence_spectrum(&tenth, 0..1000, cfg(2)),
            Err(Error::DegenerateInterval { .. })
        ));
        assert!(matches!(
            divergence_spectrum(&s, 0..4, cfg(1)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn constant_run_gets_floored_not_infinite() {
        let mut z = vec![0.0; 20];
        z.extend((0..20).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }));
        let s = spectrum_of(&z, 5);
        assert!(s.values.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert_eq!(s.argmax, 20);
        // Floor at 1e-12 of the whole variance dominates the maximum.
        assert!(s.max > 200.0);
    }

    #[test]
    fn two_regimes_are_split_near_truth() {
        let z = synth::piecewise_gaussian(&[(500, 0.0, 1.0), (500, 0.0, 20.0)], 7);
        let s = spectrum_of(&z, 13);
        assert!((s.argmax as i64 - 500).abs() <= 5);
    }

    #[test]
    fn recursion_on_noise_and_single_change() {
        let noise = series(&synth::piecewise_gaussian(&[(2000, 0.0, 1.0)], 3));
        let seg = recursive_segment(&noise, SegmentationConfig::default()).unwrap();
        assert!(seg.boundaries.is_empty());
        assert_eq!(seg.segments.len(), 1);

        let one = series(&synth::piecewise_gaussian(&[(800, 0.0, 1.0), (700, 0.0, 5.0)], 3));
        let seg = recursive_segment(&one, SegmentationConfig::default()).unwrap();
        assert_eq!(seg.boundaries.len(), 1);
        assert!((seg.boundaries[0].index as i64 - 800).abs() <= 5);
        assert!(seg.boundaries[0].delta >= 10.0);
        assert_eq!(seg.boundaries[0].timestamp, one.timestamps()[seg.boundaries[0].index - 1]);
    }

    #[test]
    fn recursion_needs_two_min_lengths() {
        let short = series(&[1.0, -1.0, 2.0]);
        assert!(matches!(
            recursive_segment(&short, cfg(2)),
            Err(Error::TooShort { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn optimization_relocates_planted_boundary() {
        let z = series(&synth::piecewise_gaussian(&[(500, 0.0, 1.0), (500, 0.0, 20.0)], 11));
        let eng = Segmenter::new(&z, SegmentationConfig::default()).unwrap();
        let planted = eng
            .from_boundaries(vec![eng.boundary(480, 50.0, Provenance::Automatic)])
            .unwrap();
        let (opt, report) = eng.optimize_boundaries(planted).unwrap();
        assert!((opt.boundaries[0].index as i64 - 500).abs() <= 5);
        assert!(report.converged);
        assert!(report.moves.iter().all(|m| m.after > m.before));

        let (again, report) = eng.optimize_boundaries(opt.clone()).unwrap();
        assert_eq!(again, opt);
        assert_eq!(report.sweeps, 1);
        assert!(report.moves.is_empty());

        let empty = eng.unsegmented();
        let (same, report) = eng.optimize_boundaries(empty.clone()).unwrap();
        assert_eq!(same, empty);
        assert_eq!(report.sweeps, 0);
    }

    #[test]
    fn manual_keep_is_pinned() {
        let z = series(&synth::piecewise_gaussian(&[(500, 0.0, 1.0), (500, 0.0, 20.0)], 11));
        let eng = Segmenter::new(&z, SegmentationConfig::default()).unwrap();
        let pinned = eng
            .from_boundaries(vec![eng.boundary(480, 50.0, Provenance::ManualKeep)])
            .unwrap();
        let (opt, _) = eng.optimize_boundaries(pinned).unwrap();
        assert_eq!(opt.boundaries[0].index, 480);
    }

    fn edit(kind: EditKind) -> ManualEdit {
        ManualEdit {
            kind,
            actor: "analyst".into(),
            timestamp: DateTime::from_timestamp(1_200_000_000, 0).unwrap(),
        }
    }

    #[test]
    fn remove_boundary_merges_neighbours() {
        let z = series(&synth::piecewise_gaussian(
            &[(300, 0.0, 1.0), (300, 0.0, 20.0), (300, 0.0, 1.0), (300, 0.0, 60.0)],
            5,
        ));
        let eng = Segmenter::new(&z, SegmentationConfig::default()).unwrap();
        let seg = eng.recursive_segment().unwrap();
        assert_eq!(seg.boundaries.len(), 3);
        let t = seg.boundaries[1].index;
        let out = eng.apply_manual_edit(&seg, edit(EditKind::RemoveBoundary { t })).unwrap();
        assert_eq!(out.boundaries.len(), 2);
        let merged = out.segments[1];
        let direct = eng.prefix().interval(merged.range()).unwrap();
        assert_eq!(merged.start, seg.segments[1].start);
        assert_eq!(merged.end, seg.segments[2].end);
        assert_eq!((merged.n, merged.mean, merged.variance), (direct.n, direct.mean, direct.variance));
        assert_eq!(out.audit.len(), 1);

        assert!(matches!(
            eng.apply_manual_edit(&seg, edit(EditKind::RemoveBoundary { t: t + 1 })),
            Err(Error::BadEdit(_))
        ));
    }

    #[test]
    fn force_cut_lands_on_spectrum_argmax() {
        let z = series(&synth::piecewise_gaussian(&[(400, 0.0, 1.0)], 9));
        let eng = Segmenter::new(&z, SegmentationConfig::default()).unwrap();
        let seg = eng.recursive_segment().unwrap();
        assert!(seg.boundaries.is_empty());
        let out = eng.apply_manual_edit(&seg, edit(EditKind::ForceCut { at: 17 })).unwrap();
        let expected = eng.spectrum(0..400).unwrap();
        assert_eq!(out.boundaries.len(), 1);
        assert_eq!(out.boundaries[0].index, expected.argmax);
        assert_eq!(out.boundaries[0].delta, expected.max);
        assert_eq!(out.boundaries[0].provenance, Provenance::ManualAdd);
        assert!(out.boundaries[0].delta < 10.0);

        assert!(matches!(
            eng.apply_manual_edit(&seg, edit(EditKind::ForceCut { at: 400 })),
            Err(Error::BadEdit(_))
        ));
    }

    #[test]
    fn force_cut_on_short_segment_relaxes_min_len() {
        let mut values = synth::piecewise_gaussian(&[(40, 0.0, 1.0)], 2);
        values.extend(synth::piecewise_gaussian(&[(10, 0.0, 30.0)], 3));
        let z = series(&values);
        let eng = Segmenter::new(&z, SegmentationConfig::default()).unwrap();
        let seg = eng
            .from_boundaries(vec![eng.boundary(40, 20.0, Provenance::Automatic)])
            .unwrap();
        let out = eng.apply_manual_edit(&seg, edit(EditKind::ForceCut { at: 45 })).unwrap();
        assert_eq!(out.boundaries.len(), 2);
        assert!(out.segments.iter().all(|s| s.len() >= 2));
        let (opt, _) = eng.optimize_boundaries(out).unwrap();
        assert!(opt.segments.iter().all(|s| s.len() >= 2));
    }

    #[test]
    fn accept_is_a_no_op_with_audit() {
        let z = series(&synth::piecewise_gaussian(&[(400, 0.0, 1.0), (400, 0.0, 9.0)], 4));
        let eng = Segmenter::new(&z, SegmentationConfig::default()).unwrap();
        let seg = eng.recursive_segment().unwrap();
        let out = eng.apply_manual_edit(&seg, edit(EditKind::Accept { boundary: None })).unwrap();
        assert_eq!(out.boundaries, seg.boundaries);
        assert_eq!(out.segments, seg.segments);
        assert_eq!(out.audit.len(), 1);

        let t = seg.boundaries[0].index;
        let kept = eng
            .apply_manual_edit(&seg, edit(EditKind::Accept { boundary: Some(t) }))
            .unwrap();
        assert_eq!(kept.boundaries[0].provenance, Provenance::ManualKeep);
    }

    #[test]
    fn edit_json_shape() {
        let e = edit(EditKind::ForceCut { at: 5 });
        let json = serde_json::to_value(&e).unwrap();
        assert_eq!(json["kind"], "force_cut");
        assert_eq!(json["at"], 5);
        let back: ManualEdit = serde_json::from_value(json).unwrap();
        assert_eq!(back, e);
        let accept: ManualEdit = serde_json::from_str(
            r#"{"kind":"accept","actor":"a","timestamp":"2008-01-01T00:00:00Z"}"#,
        )
        .unwrap();
        assert_eq!(accept.kind, EditKind::Accept { boundary: None });
    }

    #[test]
    fn segmentation_json_round_trip() {
        let z = series(&synth::piecewise_gaussian(&[(300, 0.0, 1.0), (300, 0.5, 7.0)], 4));
        let seg = recursive_segment(&z, SegmentationConfig::default()).unwrap();
        let back = Segmentation::from_json(&seg.to_json().unwrap()).unwrap();
        assert_eq!(back, seg);
        let mut broken = seg.clone();
        broken.schema_version = 99;
        assert!(Segmentation::from_json(&broken.to_json().unwrap()).is_err());
    }

    #[test]
    fn exact_zero_run_is_never_cut() {
        let mut z = vec![0.0; 700];
        z.extend(synth::piecewise_gaussian(&[(300, 0.0, 50.0)], 8));
        let shifted: Vec<f64> = z.iter().map(|v| 2.5 * v + 3.0).collect();
        let a = recursive_segment(&series(&z), SegmentationConfig::default()).unwrap();
        let b = recursive_segment(&series(&shifted), SegmentationConfig::default()).unwrap();
        assert_eq!(a.cursors(), vec![700]);
        assert_eq!(a.cursors(), b.cursors());
    }
}
