//! Complete-link clustering of segments into volatility phases.
//!
//! The distance between two segments is the log-likelihood gain of
//! modeling them as two Gaussians instead of one pooled Gaussian. It uses
//! only the segments' sufficient statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::GaussianStats;

/// Distance between two zero-variance segments with different means.
pub const MAX_DISTANCE: f64 = f64::MAX;

pub const DEFAULT_VARIANCE_FLOOR_RATIO: f64 = 1e-12;

/// Pooled-versus-separate Gaussian log-likelihood ratio between two segments.
pub fn segment_distance(a: &GaussianStats, b: &GaussianStats) -> f64 {
    segment_distance_with_floor(a, b, DEFAULT_VARIANCE_FLOOR_RATIO)
}

pub fn segment_distance_with_floor(a: &GaussianStats, b: &GaussianStats, floor_ratio: f64) -> f64 {
    let pooled = a.merge(b);
    if pooled.variance <= 0.0 {
        return 0.0;
    }
    if a.variance <= 0.0 && b.variance <= 0.0 {
        return MAX_DISTANCE;
    }
    let floor = floor_ratio * pooled.variance;
    let d = 0.5
        * (pooled.n as f64 * pooled.variance.ln()
            - a.n as f64 * a.variance.max(floor).ln()
            - b.n as f64 * b.variance.max(floor).ln());
    d.max(0.0)
}

/// Symmetric pairwise distances with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentDistanceMatrix {
    size: usize,
    data: Vec<f64>,
}

impl SegmentDistanceMatrix {
    pub fn from_segments(segments: &[GaussianStats]) -> Self {
        let size = segments.len();
        let rows: Vec<Vec<f64>> = (0..size)
            .into_par_iter()
            .map(|i| {
                (0..size)
                    .map(|j| match i.cmp(&j) {
                        std::cmp::Ordering::Equal => 0.0,
                        std::cmp::Ordering::Less => segment_distance(&segments[i], &segments[j]),
                        std::cmp::Ordering::Greater => segment_distance(&segments[j], &segments[i]),
                    })
                    .collect()
            })
            .collect();
        Self {
            size,
            data: rows.concat(),
        }
    }

    /// Build from a full row-major matrix; validates symmetry and the diagonal.
    pub fn from_full(size: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != size * size {
            return Err(Error::Incompatible(format!(
                "{} entries for a {size}x{size} matrix",
                data.len()
            )));
        }
        for i in 0..size {
            if data[i * size + i] != 0.0 {
                return Err(Error::Incompatible(format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                let (a, b) = (data[i * size + j], data[j * size + i]);
                if a != b || !(a >= 0.0) {
                    return Err(Error::Incompatible(format!(
                        "entry ({i}, {j}) is negative or asymmetric"
                    )));
                }
            }
        }
        Ok(Self { size, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }
}

/// One agglomeration step. Leaves are `0..n_leaves`; the cluster created
/// by merge `s` has id `n_leaves + s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Flat cluster ids after undoing the `k - 1` highest merges. Ids are
    /// numbered by first appearance in leaf order.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.n_leaves;
        if k < 2 || k > n {
            return Err(Error::BadK { k, max: n });
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        // Representative leaf of every cluster id, leaves included.
        let mut rep: Vec<usize> = (0..n).collect();
        for m in &self.merges[..n - k] {
            let (a, b) = (rep[m.left], rep[m.right]);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[rb] = ra;
            rep.push(ra);
        }
        let mut ids = vec![usize::MAX; n];
        let mut next = 0;
        let mut labels = Vec::with_capacity(n);
        for leaf in 0..n {
            let root = find(&mut parent, leaf);
            if ids[root] == usize::MAX {
                ids[root] = next;
                next += 1;
            }
            labels.push(ids[root]);
        }
        Ok(labels)
    }

    /// Newick tree with branch lengths from merge heights; leaves are `s<index>`.
    pub fn to_newick(&self) -> String {
        let n = self.n_leaves;
        if n == 0 {
            return ";".into();
        }
        if self.merges.is_empty() {
            return "s0;".into();
        }
        let height = |id: usize| if id < n { 0.0 } else { self.merges[id - n].height };
        fn render(d: &Dendrogram, id: usize, height: &dyn Fn(usize) -> f64, out: &mut String) {
            if id < d.n_leaves {
                out.push_str(&format!("s{id}"));
                return;
            }
            let m = &d.merges[id - d.n_leaves];
            out.push('(');
            for (i, child) in [m.left, m.right].into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render(d, child, height, out);
                out.push_str(&format!(":{}", m.height - height(child)));
            }
            out.push(')');
        }
        let mut out = String::new();
        render(self, n + self.merges.len() - 1, &height, &mut out);
        out.push(';');
        out
    }
}

/// Complete-link agglomerative clustering.
///
/// Each step merges the closest pair of clusters, where cluster distance
/// is the largest member-to-member distance. A cluster is keyed by its
/// smallest leaf; equal distances are resolved by the lexicographically
/// smallest key pair.
pub fn complete_link(d: &SegmentDistanceMatrix) -> Result<Dendrogram> {
    let n = d.size();
    if n < 2 {
        return Err(Error::TooFewSegments(n));
    }
    // Slot i holds the cluster whose smallest leaf is i.
    let mut dist: Vec<f64> = d.data.clone();
    let mut active = vec![true; n];
    let mut cluster_id: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    // Nearest higher slot of each row, smallest index on ties.
    let rescan = |i: usize, dist: &[f64], active: &[bool]| {
        let mut best = (usize::MAX, f64::INFINITY);
        for j in i + 1..n {
            if active[j] && dist[i * n + j] < best.1 {
                best = (j, dist[i * n + j]);
            }
        }
        best
    };
    let mut nn: Vec<(usize, f64)> = (0..n).map(|i| rescan(i, &dist, &active)).collect();

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut pick: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if !active[i] || nn[i].0 == usize::MAX {
                continue;
            }
            if pick.is_none_or(|(_, _, h)| nn[i].1 < h) {
                pick = Some((i, nn[i].0, nn[i].1));
            }
        }
        let (i, j, height) = pick.expect("at least two active clusters");
        merges.push(Merge {
            left: cluster_id[i],
            right: cluster_id[j],
            height,
            size: size[i] + size[j],
        });
        active[j] = false;
        size[i] += size[j];
        cluster_id[i] = n + step;
        for k in 0..n {
            if active[k] && k != i {
                let v = dist[i * n + k].max(dist[j * n + k]);
                dist[i * n + k] = v;
                dist[k * n + i] = v;
            }
        }
        nn[i] = rescan(i, &dist, &active);
        for k in 0..i {
            if active[k] && (nn[k].0 == i || nn[k].0 == j) {
                nn[k] = rescan(k, &dist, &active);
            }
        }
        for k in i + 1..j {
            if active[k] && nn[k].0 == j {
                nn[k] = rescan(k, &dist, &active);
            }
        }
    }
    Ok(Dendrogram { n_leaves: n, merges })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolatilityLabel {
    Low,
    Moderate,
    High,
    Extreme,
}

impl VolatilityLabel {
    pub const ALL: [VolatilityLabel; 4] = [Self::Low, Self::Moderate, Self::High, Self::Extreme];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Moderate => "moderate",
            Self::High => "high",
            Self::Extreme => "extreme",
        }
    }

    pub fn palette(self) -> &'static [&'static str] {
        match self {
            Self::Low => &["#00008B", "#0000FF"],
            Self::Moderate => &["#00FFFF", "#008000"],
            Self::High => &["#FFFF00", "#FFA500"],
            Self::Extreme => &["#FF0000"],
        }
    }
}

impl std::str::FromStr for VolatilityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown volatility label {s:?}")))
    }
}

impl std::fmt::Display for VolatilityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Number of clusters given each label, in `VolatilityLabel::ALL` order.
///
/// The top rank is always extreme. From four clusters up, the remaining
/// ranks spread over low, moderate and high as evenly as possible, lower
/// classes taking the remainder.
pub fn label_class_sizes(k: usize) -> [usize; 4] {
    match k {
        0 => [0, 0, 0, 0],
        1 => [0, 0, 0, 1],
        2 => [1, 0, 0, 1],
        3 => [1, 0, 1, 1],
        _ => {
            let (base, rem) = ((k - 1) / 3, (k - 1) % 3);
            [base + usize::from(rem >= 1), base + usize::from(rem >= 2), base, 1]
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub id: usize,
    /// Unweighted mean of member segment standard deviations.
    pub mean_sigma: f64,
    pub members: usize,
    pub label: VolatilityLabel,
    pub color: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseAssignment {
    pub k: usize,
    /// Cluster id of each segment.
    pub assignments: Vec<usize>,
    pub clusters: Vec<ClusterSummary>,
}

impl PhaseAssignment {
    pub fn cluster_of(&self, segment: usize) -> &ClusterSummary {
        &self.clusters[self.assignments[segment]]
    }
}

/// Label clusters by the rank of their mean segment sigma.
pub fn label_clusters(assignments: Vec<usize>, segments: &[GaussianStats]) -> Result<PhaseAssignment> {
    if assignments.len() != segments.len() {
        return Err(Error::Incompatible(format!(
            "{} assignments for {} segments",
            assignments.len(),
            segments.len()
        )));
    }
    let k = assignments.iter().copied().max().map_or(0, |m| m + 1);
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&c, s) in assignments.iter().zip(segments) {
        sums[c] += s.std_dev();
        counts[c] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::Incompatible("cluster ids are not contiguous".into()));
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));

    let mut clusters: Vec<Option<ClusterSummary>> = vec![None; k];
    let mut rank = 0;
    for (label, class_size) in VolatilityLabel::ALL.into_iter().zip(label_class_sizes(k)) {
        let palette = label.palette();
        for j in 0..class_size {
            let id = order[rank];
            clusters[id] = Some(ClusterSummary {
                id,
                mean_sigma: means[id],
                members: counts[id],
                label,
                color: palette[j * palette.len() / class_size].to_string(),
            });
            rank += 1;
        }
    }
    Ok(PhaseAssignment {
        k,
        assignments,
        clusters: clusters.into_iter().map(|c| c.expect("every rank labeled")).collect(),
    })
}

/// Cut the tree into `k` clusters and label them by volatility.
pub fn cut_tree(t: &Dendrogram, k: usize, segments: &[GaussianStats]) -> Result<PhaseAssignment> {
    if segments.len() != t.n_leaves {
        return Err(Error::Incompatible(format!(
            "{} segments for a tree over {} leaves",
            segments.len(),
            t.n_leaves
        )));
    }
    label_clusters(t.cut(k)?, segments)
}

/// Distances, tree and phase labels in one step.
pub fn cluster_segments(segments: &[GaussianStats], k: usize) -> Result<(Dendrogram, PhaseAssignment)> {
    let tree = complete_link(&SegmentDistanceMatrix::from_segments(segments))?;
    let phases = cut_tree(&tree, k, segments)?;
    Ok((tree, phases))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(n: usize, mean: f64, variance: f64) -> GaussianStats {
        GaussianStats { n, mean, variance }
    }

    #[test]
    fn distance_examples() {
        let a = g(100, 0.0, 1.0);
        assert_eq!(segment_distance(&a, &a.clone()), 0.0);

        let b = g(100, 0.0, 100.0);
        let expected = 100.0 * 50.5f64.ln() - 50.0 * 100.0f64.ln();
        assert!((segment_distance(&a, &b) - expected).abs() < 1e-9);
        assert!((segment_distance(&a, &b) - 161.9).abs() < 0.1);

        let c = g(100, 10.0, 1.0);
        assert!((segment_distance(&a, &c) - 100.0 * 26.0f64.ln()).abs() < 1e-9);
        assert!((segment_distance(&a, &c) - 325.8).abs() < 0.05);
    }

    #[test]
    fn distance_matches_brute_force_merge() {
        // Samples with exactly n=100, mean 0, var 1 and n=100, mean 10, var 1.
        let left: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let right: Vec<f64> = left.iter().map(|v| v + 10.0).collect();
        let all: Vec<f64> = left.iter().chain(&right).copied().collect();
        let (sl, sr, sa) = (
            GaussianStats::from_samples(&left).unwrap(),
            GaussianStats::from_samples(&right).unwrap(),
            GaussianStats::from_samples(&all).unwrap(),
        );
        assert!((sa.variance - 26.0).abs() < 1e-12);
        let lr = sl.max_loglik().unwrap() + sr.max_loglik().unwrap() - sa.max_loglik().unwrap();
        assert!((segment_distance(&sl, &sr) - lr).abs() < 1e-9);
    }

    #[test]
    fn degenerate_distances() {
        assert_eq!(segment_distance(&g(5, 1.0, 0.0), &g(7, 1.0, 0.0)), 0.0);
        assert_eq!(segment_distance(&g(5, 1.0, 0.0), &g(7, 2.0, 0.0)), MAX_DISTANCE);
        let d = segment_distance(&g(5, 0.0, 0.0), &g(7, 0.0, 1.0));
        assert!(d.is_finite() && d > 0.0);
    }

    fn matrix(size: usize, entries: &[(usize, usize, f64)]) -> SegmentDistanceMatrix {
        let mut data = vec![0.0; size * size];
        for &(i, j, v) in entries {
            data[i * size + j] = v;
            data[j * size + i] = v;
        }
        SegmentDistanceMatrix::from_full(size, data).unwrap()
    }

    #[test]
    fn complete_link_takes_the_max() {
        let d = matrix(3, &[(0, 1, 0.1), (0, 2, 5.0), (1, 2, 6.0)]);
        let t = complete_link(&d).unwrap();
        assert_eq!(t.heights(), vec![0.1, 6.0]);
        assert_eq!((t.merges[0].left, t.merges[0].right), (0, 1));
        assert_eq!((t.merges[1].left, t.merges[1].right, t.merges[1].size), (3, 2, 3));
        assert_eq!(t.to_newick(), "((s0:0.1,s1:0.1):5.9,s2:6);");
    }

    #[test]
    fn equidistant_ties_follow_key_order() {
        let entries: Vec<_> = (0..4)
            .flat_map(|i| (i + 1..4).map(move |j| (i, j, 1.0)))
            .collect();
        let t = complete_link(&matrix(4, &entries)).unwrap();
        assert_eq!(t.heights(), vec![1.0; 3]);
        let pairs: Vec<_> = t.merges.iter().map(|m| (m.left, m.right)).collect();
        assert_eq!(pairs, vec![(0, 1), (4, 2), (5, 3)]);
    }

    #[test]
    fn complete_link_errors() {
        assert!(matches!(
            complete_link(&matrix(1, &[])),
            Err(Error::TooFewSegments(1))
        ));
        assert!(SegmentDistanceMatrix::from_full(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn cut_examples() {
        let segs = [g(100, 0.0, 1.0), g(100, 0.0, 1.01f64.powi(2)), g(100, 0.0, 100.0)];
        let (tree, phases) = cluster_segments(&segs, 2).unwrap();
        assert_eq!(phases.assignments, vec![0, 0, 1]);
        assert_eq!(phases.clusters[0].label, VolatilityLabel::Low);
        assert_eq!(phases.clusters[1].label, VolatilityLabel::Extreme);

        let full = cut_tree(&tree, 3, &segs).unwrap();
        assert_eq!(full.assignments, vec![0, 1, 2]);
        assert!(matches!(cut_tree(&tree, 1, &segs), Err(Error::BadK { .. })));
        assert!(matches!(cut_tree(&tree, 4, &segs), Err(Error::BadK { .. })));
    }

    #[test]
    fn four_ranks_get_four_labels() {
        let segs: Vec<_> = [150.0, 5.0, 60.0, 20.0].iter().map(|s: &f64| g(50, 0.0, s * s)).collect();
        let phases = label_clusters(vec![0, 1, 2, 3], &segs).unwrap();
        let labels: Vec<_> = phases.clusters.iter().map(|c| c.label).collect();
        use VolatilityLabel::*;
        assert_eq!(labels, vec![Extreme, Low, High, Moderate]);
        assert_eq!(phases.clusters[1].color, "#00008B");
        assert_eq!(phases.clusters[0].color, "#FF0000");
    }

    #[test]
    fn class_sizes_follow_the_palette() {
        assert_eq!(label_class_sizes(4), [1, 1, 1, 1]);
        assert_eq!(label_class_sizes(5), [2, 1, 1, 1]);
        assert_eq!(label_class_sizes(6), [2, 2, 1, 1]);
        assert_eq!(label_class_sizes(7), [2, 2, 2, 1]);
        for k in 2..40 {
            assert_eq!(label_class_sizes(k).iter().sum::<usize>(), k);
        }
        let segs: Vec<_> = (1..=7).map(|s| g(10, 0.0, (s * s) as f64)).collect();
        let phases = label_clusters((0..7).collect(), &segs).unwrap();
        let colors: Vec<_> = phases.clusters.iter().map(|c| c.color.as_str()).collect();
        assert_eq!(
            colors,
            ["#00008B", "#0000FF", "#00FFFF", "#008000", "#FFFF00", "#FFA500", "#FF0000"]
        );
    }

    fn random_stats() -> impl Strategy<Value = Vec<GaussianStats>> {
        prop::collection::vec((13usize..500, -5.0f64..5.0, 0.01f64..1e4), 2..25)
            .prop_map(|v| v.into_iter().map(|(n, m, s)| g(n, m, s)).collect())
    }

    proptest! {
        #[test]
        fn matrix_is_symmetric_with_zero_diagonal(segs in random_stats()) {
            let d = SegmentDistanceMatrix::from_segments(&segs);
            for i in 0..segs.len() {
                prop_assert_eq!(d.get(i, i), 0.0);
                for j in 0..segs.len() {
                    prop_assert!((d.get(i, j) - d.get(j, i)).abs() <= 1e-12 * d.get(i, j).max(1.0));
                    prop_assert!(d.get(i, j) >= 0.0);
                }
            }
        }

        #[test]
        fn heights_never_decrease(segs in random_stats()) {
            let t = complete_link(&SegmentDistanceMatrix::from_segments(&segs)).unwrap();
            prop_assert!(t.heights().windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(t.merges.last().unwrap().size, segs.len());
        }

        #[test]
        fn consecutive_cuts_differ_by_one_merge(segs in random_stats()) {
            let t = complete_link(&SegmentDistanceMatrix::from_segments(&segs)).unwrap();
            for k in 3..=segs.len() {
                let fine = t.cut(k).unwrap();
                let coarse = t.cut(k - 1).unwrap();
                // Every fine cluster maps into exactly one coarse cluster.
                let mut image = vec![None; k];
                for (f, c) in fine.iter().zip(&coarse) {
                    prop_assert!(image[*f].is_none_or(|x| x == *c));
                    image[*f] = Some(*c);
                }
                let coarse_count = coarse.iter().max().unwrap() + 1;
                prop_assert_eq!(coarse_count, k - 1);
            }
        }

        #[test]
        fn labels_ignore_cluster_numbering(segs in random_stats(), k in 2usize..6, rot in 0usize..6) {
            let k = k.min(segs.len());
            let assignments: Vec<usize> = (0..segs.len()).map(|i| i % k).collect();
            let base = label_clusters(assignments.clone(), &segs).unwrap();
            let relabeled: Vec<usize> = assignments.iter().map(|c| (c + rot) % k).collect();
            let other = label_clusters(relabeled, &segs).unwrap();
            for i in 0..segs.len() {
                prop_assert_eq!(base.cluster_of(i).label, other.cluster_of(i).label);
                prop_assert_eq!(&base.cluster_of(i).color, &other.cluster_of(i).color);
            }
        }
    }
}
