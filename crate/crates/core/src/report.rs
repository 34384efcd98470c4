//! Cross-model boundary comparison, phase timelines, shock scanning and
//! export of plot-ready artifacts.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::cluster::{Dendrogram, PhaseAssignment, VolatilityLabel};
use crate::error::{Error, Result};
use crate::ingest::{format_timestamp, parse_timestamp};
use crate::segment::{DivergenceSpectrum, Segmentation, Segmenter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    /// Boundary cursor in the first segmentation.
    pub a: usize,
    /// Boundary cursor in the second segmentation.
    pub b: usize,
    /// `b - a`, in bars.
    pub gap: i64,
}

/// A stretch between two exactly shared boundaries where the models disagree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisagreementInterval {
    pub start: usize,
    pub end: usize,
    pub segments_a: usize,
    pub segments_b: usize,
    /// Matched, non-exact boundary pairs inside the interval.
    pub common: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommonBoundaryReport {
    pub tolerance: usize,
    pub pairs: Vec<MatchedPair>,
    pub common: usize,
    pub exact: usize,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
    pub intervals: Vec<DisagreementInterval>,
}

/// One-to-one greedy matching of boundary cursors.
///
/// Candidate pairs within `tolerance` are taken in order of increasing
/// `|gap|`; equal gaps go to the earlier pair (smaller `a + b`, then
/// smaller `a`).
pub fn match_boundaries(a: &[usize], b: &[usize], tolerance: usize) -> Vec<MatchedPair> {
    let mut candidates = Vec::new();
    let mut lo = 0;
    for &x in a {
        while lo < b.len() && b[lo] + tolerance < x {
            lo += 1;
        }
        for &y in b[lo..].iter().take_while(|&&y| y <= x + tolerance) {
            candidates.push((x.abs_diff(y), x + y, x, y));
        }
    }
    candidates.sort_unstable();
    let mut used_a = BTreeSet::new();
    let mut used_b = BTreeSet::new();
    let mut pairs: Vec<MatchedPair> = candidates
        .into_iter()
        .filter_map(|(_, _, x, y)| {
            (!used_a.contains(&x) && !used_b.contains(&y)).then(|| {
                used_a.insert(x);
                used_b.insert(y);
                MatchedPair {
                    a: x,
                    b: y,
                    gap: y as i64 - x as i64,
                }
            })
        })
        .collect();
    pairs.sort_by_key(|p| p.a);
    pairs
}

/// Match boundaries of two segmentations of the same bar series.
pub fn compare_segmentations(
    a: &Segmentation,
    b: &Segmentation,
    tolerance_bars: usize,
) -> Result<CommonBoundaryReport> {
    if a.n_total != b.n_total {
        return Err(Error::Incompatible(format!(
            "segmentations cover {} and {} samples",
            a.n_total, b.n_total
        )));
    }
    let (ca, cb) = (a.cursors(), b.cursors());
    let pairs = match_boundaries(&ca, &cb, tolerance_bars);
    let matched_a: BTreeSet<usize> = pairs.iter().map(|p| p.a).collect();
    let matched_b: BTreeSet<usize> = pairs.iter().map(|p| p.b).collect();
    let unmatched_a: Vec<usize> = ca.iter().copied().filter(|x| !matched_a.contains(x)).collect();
    let unmatched_b: Vec<usize> = cb.iter().copied().filter(|x| !matched_b.contains(x)).collect();
    let exact = pairs.iter().filter(|p| p.gap == 0).count();

    let mut anchors = vec![0];
    anchors.extend(pairs.iter().filter(|p| p.gap == 0).map(|p| p.a));
    anchors.push(a.n_total);
    let inside = |xs: &[usize], lo: usize, hi: usize| xs.iter().filter(|&&x| x > lo && x < hi).count();
    let intervals = anchors
        .windows(2)
        .filter_map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let disputed = inside(&unmatched_a, lo, hi) + inside(&unmatched_b, lo, hi);
            (disputed > 0).then(|| DisagreementInterval {
                start: lo,
                end: hi,
                segments_a: inside(&ca, lo, hi) + 1,
                segments_b: inside(&cb, lo, hi) + 1,
                common: pairs
                    .iter()
                    .filter(|p| p.gap != 0 && p.a > lo && p.a < hi)
                    .count(),
            })
        })
        .collect();

    Ok(CommonBoundaryReport {
        tolerance: tolerance_bars,
        common: pairs.len(),
        exact,
        pairs,
        unmatched_a,
        unmatched_b,
        intervals,
    })
}

/// One segment on the phase timeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpan {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub cluster: usize,
    pub label: VolatilityLabel,
    pub sigma: f64,
    pub color: String,
    pub start_index: usize,
    pub end_index: usize,
}

impl PhaseSpan {
    pub fn len(&self) -> usize {
        self.end_index - self.start_index
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimeline {
    pub spans: Vec<PhaseSpan>,
}

/// Chronological spans, one per segment, colored by phase.
pub fn phase_timeline(seg: &Segmentation, phases: &PhaseAssignment) -> Result<PhaseTimeline> {
    if phases.assignments.len() != seg.segments.len() {
        return Err(Error::Incompatible(format!(
            "phases cover {} segments, segmentation has {}",
            phases.assignments.len(),
            seg.segments.len()
        )));
    }
    let spans = seg
        .segments
        .iter()
        .enumerate()
        .map(|(m, s)| {
            let c = phases.cluster_of(m);
            PhaseSpan {
                start: s.start_time,
                end: s.end_time,
                cluster: c.id,
                label: c.label,
                sigma: s.sigma(),
                color: c.color.clone(),
                start_index: s.start,
                end_index: s.end,
            }
        })
        .collect();
    Ok(PhaseTimeline { spans })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockConfig {
    pub min_run: usize,
    /// Context examined on each side of a run, in bars.
    pub window_bars: usize,
}

impl Default for ShockConfig {
    /// Runs of two or more segments; roughly a trading year of half-hour bars.
    fn default() -> Self {
        Self {
            min_run: 2,
            window_bars: 13 * 250,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShockDirection {
    /// Moderate segments of non-decreasing sigma inside a low-volatility stretch.
    Precursor,
    /// Low or moderate segments inside a high-volatility stretch.
    Inverted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeverityTrend {
    Rising,
    Falling,
    Flat,
    Mixed,
}

fn severity_trend(sigmas: &[f64]) -> SeverityTrend {
    let up = sigmas.windows(2).all(|w| w[0] <= w[1]);
    let down = sigmas.windows(2).all(|w| w[0] >= w[1]);
    match (up, down) {
        (true, true) => SeverityTrend::Flat,
        (true, false) => SeverityTrend::Rising,
        (false, true) => SeverityTrend::Falling,
        (false, false) => SeverityTrend::Mixed,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockRun {
    pub direction: ShockDirection,
    /// Indices into the timeline's spans.
    pub members: Vec<usize>,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub start_index: usize,
    pub end_index: usize,
    pub severity: SeverityTrend,
}

/// Heuristic scan for shock sequences; not a statistical test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockReport {
    pub heuristic: bool,
    pub config: ShockConfig,
    pub runs: Vec<ShockRun>,
}

/// Bars of context on each side of `spans[lo..hi]` and how many of them
/// carry a label accepted by `dominant`.
fn context_bars(
    spans: &[PhaseSpan],
    lo: usize,
    hi: usize,
    window: usize,
    dominant: impl Fn(VolatilityLabel) -> bool,
) -> (usize, usize, usize) {
    let run_start = spans[lo].start_index;
    let run_end = spans[hi - 1].end_index;
    let (left_from, right_to) = (run_start.saturating_sub(window), run_end + window);
    let (mut left, mut right, mut hits) = (0, 0, 0);
    for s in spans[..lo].iter().rev() {
        let overlap = s.end_index.min(run_start).saturating_sub(s.start_index.max(left_from));
        if overlap == 0 {
            break;
        }
        left += overlap;
        hits += if dominant(s.label) { overlap } else { 0 };
    }
    for s in &spans[hi..] {
        let overlap = s.end_index.min(right_to).saturating_sub(s.start_index.max(run_end));
        if overlap == 0 {
            break;
        }
        right += overlap;
        hits += if dominant(s.label) { overlap } else { 0 };
    }
    (left, right, hits)
}

/// Maximal runs of consecutive spans whose label satisfies `pred`.
fn runs_where(spans: &[PhaseSpan], pred: impl Fn(VolatilityLabel) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < spans.len() {
        if pred(spans[i].label) {
            let j = (i..spans.len()).find(|&j| !pred(spans[j].label)).unwrap_or(spans.len());
            out.push((i, j));
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Scan a phase timeline for precursor and inverted shock sequences.
///
/// A run qualifies when it has at least `min_run` members, context on both
/// sides, and more than half of the context bars within `window_bars`
/// carry the surrounding phase's labels.
pub fn detect_shock_sequences(tl: &PhaseTimeline, cfg: &ShockConfig) -> ShockReport {
    use VolatilityLabel::*;
    let spans = &tl.spans;
    let min_run = cfg.min_run.max(1);
    let mut runs = Vec::new();

    let mut push = |direction, lo: usize, hi: usize| {
        let sigmas: Vec<f64> = spans[lo..hi].iter().map(|s| s.sigma).collect();
        runs.push(ShockRun {
            direction,
            members: (lo..hi).collect(),
            start: spans[lo].start,
            end: spans[hi - 1].end,
            start_index: spans[lo].start_index,
            end_index: spans[hi - 1].end_index,
            severity: severity_trend(&sigmas),
        });
    };
    let qualifies = |lo: usize, hi: usize, dominant: &dyn Fn(VolatilityLabel) -> bool| {
        let (left, right, hits) = context_bars(spans, lo, hi, cfg.window_bars, dominant);
        left > 0 && right > 0 && 2 * hits > left + right
    };

    for (lo, hi) in runs_where(spans, |l| l == Moderate) {
        // Split into stretches of non-decreasing sigma.
        let mut start = lo;
        for i in lo + 1..=hi {
            if i == hi || spans[i].sigma < spans[i - 1].sigma {
                if i - start >= min_run && qualifies(start, i, &|l| l == Low) {
                    push(ShockDirection::Precursor, start, i);
                }
                start = i;
            }
        }
    }
    for (lo, hi) in runs_where(spans, |l| matches!(l, Low | Moderate)) {
        if hi - lo >= min_run && qualifies(lo, hi, &|l| matches!(l, High | Extreme)) {
            push(ShockDirection::Inverted, lo, hi);
        }
    }
    runs.sort_by_key(|r| (r.start_index, r.direction == ShockDirection::Inverted));
    ShockReport {
        heuristic: true,
        config: *cfg,
        runs,
    }
}

/// Clustering results that accompany a segmentation in an export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseAnalysis {
    pub dendrogram: Dendrogram,
    pub phases: PhaseAssignment,
    pub timeline: PhaseTimeline,
    pub shocks: ShockReport,
}

impl PhaseAnalysis {
    pub fn new(seg: &Segmentation, dendrogram: Dendrogram, phases: PhaseAssignment, shocks: &ShockConfig) -> Result<Self> {
        let timeline = phase_timeline(seg, &phases)?;
        let shocks = detect_shock_sequences(&timeline, shocks);
        Ok(Self {
            dendrogram,
            phases,
            timeline,
            shocks,
        })
    }
}

/// One artifact of an export bundle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Segmentation,
    Dendrogram,
    Newick,
    Phases,
    Shocks,
    Timeline,
    Spectra,
}

impl ExportFormat {
    pub const ALL: [ExportFormat; 7] = [
        Self::Segmentation,
        Self::Dendrogram,
        Self::Newick,
        Self::Phases,
        Self::Shocks,
        Self::Timeline,
        Self::Spectra,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Self::Segmentation => "segmentation.json",
            Self::Dendrogram => "dendrogram.json",
            Self::Newick => "dendrogram.nwk",
            Self::Phases => "phases.json",
            Self::Shocks => "shocks.json",
            Self::Timeline => "timeline.csv",
            Self::Spectra => "spectra.csv",
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            Self::Segmentation | Self::Dendrogram | Self::Phases | Self::Shocks => "application/json",
            Self::Newick => "text/plain; charset=utf-8",
            Self::Timeline | Self::Spectra => "text/csv; charset=utf-8",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Segmentation => "segmentation",
            Self::Dendrogram => "dendrogram",
            Self::Newick => "newick",
            Self::Phases => "phases",
            Self::Shocks => "shocks",
            Self::Timeline => "timeline",
            Self::Spectra => "spectra",
        }
    }

    /// Accepts the short name or the file name.
    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| s == f.name() || s == f.file_name())
    }
}

/// Ordered set of files ready to write; bytes are deterministic for fixed inputs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExportBundle {
    pub files: Vec<(ExportFormat, Vec<u8>)>,
}

impl ExportBundle {
    pub fn get(&self, format: ExportFormat) -> Option<&[u8]> {
        self.files.iter().find(|(f, _)| *f == format).map(|(_, b)| b.as_slice())
    }

    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.files
            .iter()
            .map(|(format, bytes)| {
                let path = dir.join(format.file_name());
                std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
                Ok(path)
            })
            .collect()
    }
}

pub(crate) fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Serialize, Deserialize)]
struct TimelineRow {
    start: String,
    end: String,
    cluster: usize,
    label: String,
    sigma: f64,
    color: String,
    start_index: usize,
    end_index: usize,
}

pub fn write_timeline_csv<W: Write>(tl: &PhaseTimeline, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for s in &tl.spans {
        wtr.serialize(TimelineRow {
            start: format_timestamp(&s.start),
            end: format_timestamp(&s.end),
            cluster: s.cluster,
            label: s.label.to_string(),
            sigma: s.sigma,
            color: s.color.clone(),
            start_index: s.start_index,
            end_index: s.end_index,
        })?;
    }
    wtr.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_timeline_csv<R: std::io::Read>(reader: R) -> Result<PhaseTimeline> {
    let mut rdr = csv::Reader::from_reader(reader);
    let spans = rdr
        .deserialize::<TimelineRow>()
        .map(|row| {
            let row = row?;
            Ok(PhaseSpan {
                start: parse_timestamp(&row.start)?,
                end: parse_timestamp(&row.end)?,
                cluster: row.cluster,
                label: row.label.parse()?,
                sigma: row.sigma,
                color: row.color,
                start_index: row.start_index,
                end_index: row.end_index,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PhaseTimeline { spans })
}

/// Divergence spectrum of one segment, for plotting.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentSpectrum {
    pub segment: usize,
    pub spectrum: DivergenceSpectrum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub segment: usize,
    pub t: usize,
    pub delta: f64,
}

pub fn write_spectra_csv<W: Write>(spectra: &[SegmentSpectrum], writer: W) -> Result<()> {
    // Header written by hand so an empty export still has one.
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    wtr.write_record(["segment", "t", "delta"])?;
    for s in spectra {
        for (t, delta) in s.spectrum.points() {
            wtr.serialize(SpectrumRow {
                segment: s.segment,
                t,
                delta,
            })?;
        }
    }
    wtr.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_spectra_csv<R: std::io::Read>(reader: R) -> Result<Vec<SpectrumRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Spectra of the requested segments; segments too short or with zero
/// variance are skipped. `None` requests every segment.
pub fn segment_spectra(
    segmenter: &Segmenter<'_>,
    seg: &Segmentation,
    which: Option<&[usize]>,
) -> Vec<SegmentSpectrum> {
    let all: Vec<usize> = (0..seg.segments.len()).collect();
    which
        .unwrap_or(&all)
        .iter()
        .filter_map(|&m| {
            let s = seg.segments.get(m)?;
            segmenter.spectrum(s.range()).ok().map(|spectrum| SegmentSpectrum {
                segment: m,
                spectrum,
            })
        })
        .collect()
}

/// Serialize a segmentation, optional clustering results and segment spectra.
pub fn export_bundle(
    seg: &Segmentation,
    analysis: Option<&PhaseAnalysis>,
    spectra: &[SegmentSpectrum],
) -> Result<ExportBundle> {
    let mut files = vec![(ExportFormat::Segmentation, to_json_bytes(seg)?)];
    if let Some(a) = analysis {
        if a.timeline.spans.len() != seg.segments.len() {
            return Err(Error::Incompatible("timeline does not match segmentation".into()));
        }
        let mut newick = a.dendrogram.to_newick().into_bytes();
        newick.push(b'\n');
        let mut timeline = Vec::new();
        write_timeline_csv(&a.timeline, &mut timeline)?;
        files.push((ExportFormat::Dendrogram, to_json_bytes(&a.dendrogram)?));
        files.push((ExportFormat::Newick, newick));
        files.push((ExportFormat::Phases, to_json_bytes(&a.phases)?));
        files.push((ExportFormat::Shocks, to_json_bytes(&a.shocks)?));
        files.push((ExportFormat::Timeline, timeline));
    }
    let mut csv = Vec::new();
    write_spectra_csv(spectra, &mut csv)?;
    files.push((ExportFormat::Spectra, csv));
    Ok(ExportBundle { files })
}
