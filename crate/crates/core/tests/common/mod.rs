//! Independent reference implementations used as test oracles. Nothing
//! here shares code with the library's fast paths.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mean and MLE variance, two passes.
pub fn two_pass(z: &[f64]) -> (f64, f64) {
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Divergence at every admissible cursor of `z[start..end]`, each side
/// fitted from scratch. Side variances are floored at `floor_ratio` times
/// the whole-interval variance.
pub fn brute_spectrum(z: &[f64], start: usize, end: usize, min_len: usize, floor_ratio: f64) -> Vec<(usize, f64)> {
    let seg = &z[start..end];
    let n = seg.len() as f64;
    let (_, v) = two_pass(seg);
    let floor = floor_ratio * v;
    (start + min_len..=end - min_len)
        .map(|t| {
            let (l, r) = (&z[start..t], &z[t..end]);
            let vl = two_pass(l).1.max(floor);
            let vr = two_pass(r).1.max(floor);
            let d = 0.5 * (n * v.ln() - l.len() as f64 * vl.ln() - r.len() as f64 * vr.ln()) + 0.5;
            (t, d)
        })
        .collect()
}

/// Complete linkage by exhaustive search: clusters are leaf sets, the
/// cluster distance is recomputed from leaves at every step, and ties go
/// to the pair with the smallest (min leaf, min leaf) key.
/// Returns `(left id, right id, height, size)` with scipy-style ids.
pub fn brute_complete_link(d: &[Vec<f64>]) -> Vec<(usize, usize, f64, usize)> {
    let n = d.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut out = Vec::new();
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in 0..clusters.len() {
                let (ka, kb) = (clusters[a].1[0], clusters[b].1[0]);
                if ka >= kb {
                    continue;
                }
                let mut h = f64::NEG_INFINITY;
                for &x in &clusters[a].1 {
                    for &y in &clusters[b].1 {
                        h = h.max(d[x][y]);
                    }
                }
                let better = match best {
                    None => true,
                    Some((bh, bka, bkb, _, _)) => h < bh || (h == bh && (ka, kb) < (bka, bkb)),
                };
                if better {
                    best = Some((h, ka, kb, a, b));
                }
            }
        }
        let (h, _, _, a, b) = best.expect("two clusters remain");
        let (ida, mut la) = clusters[a].clone();
        let (idb, lb) = clusters[b].clone();
        la.extend(lb);
        la.sort_unstable();
        out.push((ida, idb, h, la.len()));
        let (hi, lo) = (a.max(b), a.min(b));
        clusters.remove(hi);
        clusters.remove(lo);
        clusters.push((n + step, la));
    }
    out
}

/// Boundary matching by repeatedly taking the globally closest unused pair
/// within `tol`, ties by smaller `a + b`, then smaller `a`.
pub fn brute_match(a: &[usize], b: &[usize], tol: usize) -> Vec<(usize, usize)> {
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut out = Vec::new();
    loop {
        let mut best: Option<((usize, usize, usize), usize, usize)> = None;
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                if used_a[i] || used_b[j] || x.abs_diff(y) > tol {
                    continue;
                }
                let key = (x.abs_diff(y), x + y, x);
                if best.is_none_or(|(k, _, _)| key < k) {
                    best = Some((key, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        used_a[i] = true;
        used_b[j] = true;
        out.push((a[i], b[j]));
    }
    out.sort_unstable();
    out
}

/// A random series of length `26..=max_len`: one to four Gaussian pieces
/// with log-uniform scales, random means, an optional large offset, and
/// occasional quantization to a price grid.
pub fn fuzz_series(r: &mut ChaCha8Rng, max_len: usize) -> Vec<f64> {
    let n = r.random_range(26..=max_len);
    let pieces = r.random_range(1..=4usize);
    let offset = if r.random_bool(0.3) { r.random_range(-1e4..1e4) } else { 0.0 };
    let mut cuts: Vec<usize> = (0..pieces - 1).map(|_| r.random_range(1..n)).collect();
    cuts.push(n);
    cuts.sort_unstable();
    let mut z = Vec::with_capacity(n);
    for &c in &cuts {
        let sigma = 10f64.powf(r.random_range(-2.0..2.0));
        let mean = r.random_range(-5.0..5.0) * sigma;
        let dist = Normal::new(offset + mean, sigma).unwrap();
        while z.len() < c {
            z.push(dist.sample(r));
        }
    }
    if r.random_bool(0.2) {
        let tick = 0.01 * z.iter().map(|v| (v - offset).abs()).fold(0.0, f64::max).max(1e-6);
        for v in &mut z {
            *v = (*v / tick).round() * tick;
        }
    }
    z
}
