//! Sufficient statistics for O(1) Gaussian maximum-likelihood fits over
//! any interval of a series.

use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample count, mean and MLE (divide-by-n) variance of a Gaussian fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

impl GaussianStats {
    /// Two-pass estimate over a slice.
    pub fn from_samples(z: &[f64]) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::EmptyData);
        }
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let variance = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(Self {
            n: z.len(),
            mean,
            variance,
        })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Statistics of the union of two samples, including the between-means term.
    pub fn merge(&self, other: &GaussianStats) -> GaussianStats {
        let n = self.n + other.n;
        let (na, nb, nt) = (self.n as f64, other.n as f64, n as f64);
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * nb / nt;
        let variance = (na * self.variance + nb * other.variance) / nt + delta * delta * na * nb / (nt * nt);
        GaussianStats {
            n,
            mean,
            variance: variance.max(0.0),
        }
    }

    /// Maximized log-likelihood `-(n/2) ln(2 pi var) - n/2`.
    pub fn max_loglik(&self) -> Result<f64> {
        gaussian_max_loglik(self)
    }
}

/// Log-likelihood of `s.n` samples under the Gaussian fitted to them.
pub fn gaussian_max_loglik(s: &GaussianStats) -> Result<f64> {
    if !(s.variance > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let n = s.n as f64;
    Ok(-0.5 * n * (2.0 * PI * s.variance).ln() - 0.5 * n)
}

/// Prefix sums of `z - shift` and `(z - shift)^2`, where `shift` is the
/// global mean. Sums are kept in double-double precision so that interval
/// variances stay accurate even when they are tiny next to the prefix
/// totals.
#[derive(Clone, Debug)]
pub struct PrefixStats {
    cum_sum: Vec<Dd>,
    cum_sumsq: Vec<Dd>,
    shift: f64,
}

impl PrefixStats {
    pub fn new(z: &[f64]) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::EmptyData);
        }
        let shift = z.iter().sum::<f64>() / z.len() as f64;
        let mut cum_sum = Vec::with_capacity(z.len() + 1);
        let mut cum_sumsq = Vec::with_capacity(z.len() + 1);
        let (mut s, mut q) = (Dd::ZERO, Dd::ZERO);
        cum_sum.push(s);
        cum_sumsq.push(q);
        for &v in z {
            let d = Dd::sum(v, -shift);
            s = s.add(d);
            q = q.add(d.square());
            cum_sum.push(s);
            cum_sumsq.push(q);
        }
        Ok(Self {
            cum_sum,
            cum_sumsq,
            shift,
        })
    }

    pub fn len(&self) -> usize {
        self.cum_sum.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// MLE fit over `range` (0-based, half-open). Variance is clamped at 0.
    pub fn interval(&self, range: Range<usize>) -> Result<GaussianStats> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::BadInterval {
                start: range.start,
                end: range.end,
                len: self.len(),
            });
        }
        Ok(self.interval_unchecked(range.start, range.end))
    }

    #[inline]
    pub(crate) fn interval_unchecked(&self, start: usize, end: usize) -> GaussianStats {
        let n = (end - start) as f64;
        let s = self.cum_sum[end].sub(self.cum_sum[start]);
        let q = self.cum_sumsq[end].sub(self.cum_sumsq[start]);
        let m = s.div(n);
        let variance = q.sub(s.mul(m)).div(n).value();
        GaussianStats {
            n: end - start,
            mean: m.value() + self.shift,
            variance: variance.max(0.0),
        }
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    /// Exact `a + b`.
    #[inline]
    fn sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    #[inline]
    fn renormalize(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    /// Exact `a * b` (Dekker).
    #[inline]
    fn product(a: f64, b: f64) -> Dd {
        const SPLIT: f64 = 134_217_729.0;
        let split = |x: f64| {
            let c = SPLIT * x;
            let h = c - (c - x);
            (h, x - h)
        };
        let p = a * b;
        let (ah, al) = split(a);
        let (bh, bl) = split(b);
        Dd {
            hi: p,
            lo: ((ah * bh - p) + ah * bl + al * bh) + al * bl,
        }
    }

    #[inline]
    fn add(self, o: Dd) -> Dd {
        let s = Dd::sum(self.hi, o.hi);
        let t = Dd::sum(self.lo, o.lo);
        let u = Dd::renormalize(s.hi, s.lo + t.hi);
        Dd::renormalize(u.hi, u.lo + t.lo)
    }

    #[inline]
    fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let p = Dd::product(self.hi, o.hi);
        Dd::renormalize(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }

    #[inline]
    fn square(self) -> Dd {
        self.mul(self)
    }

    #[inline]
    fn div(self, n: f64) -> Dd {
        let q1 = self.hi / n;
        let r = self.sub(Dd::product(q1, n));
        Dd::renormalize(q1, r.hi / n)
    }

    #[inline]
    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Build prefix statistics over a series.
pub fn build_prefix_stats(z: &[f64]) -> Result<PrefixStats> {
    PrefixStats::new(z)
}

/// MLE fit over the 1-based inclusive interval `a..=b`.
pub fn interval_stats(p: &PrefixStats, a: usize, b: usize) -> Result<GaussianStats> {
    if a == 0 || a > b || b > p.len() {
        return Err(Error::BadInterval {
            start: a.saturating_sub(1),
            end: b,
            len: p.len(),
        });
    }
    p.interval(a - 1..b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_pass(z: &[f64]) -> (f64, f64) {
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn prefix_examples() {
        let p = build_prefix_stats(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = interval_stats(&p, 1, 4).unwrap();
        assert_eq!(s.n, 4);
        assert!(close(s.mean, 2.5, 1e-15));
        assert!(close(s.variance, 1.25, 1e-15));
        assert_eq!(p.shift(), 2.5);

        let p = build_prefix_stats(&[7.5; 9]).unwrap();
        for a in 1..=9 {
            for b in a..=9 {
                assert_eq!(interval_stats(&p, a, b).unwrap().variance, 0.0);
            }
        }

        let p = build_prefix_stats(&[-1.0, 1.0]).unwrap();
        let s = interval_stats(&p, 1, 2).unwrap();
        assert_eq!((s.mean, s.variance), (0.0, 1.0));
    }

    #[test]
    fn interval_examples() {
        let p = build_prefix_stats(&[-1.0, 1.0, -3.0, 3.0]).unwrap();
        let s = interval_stats(&p, 3, 4).unwrap();
        assert_eq!(s.n, 2);
        assert!(close(s.mean, 0.0, 1e-15));
        assert!(close(s.variance, 9.0, 1e-12));
        assert_eq!(interval_stats(&p, 2, 2).unwrap().variance, 0.0);
        assert!(close(interval_stats(&p, 1, 4).unwrap().variance, 5.0, 1e-12));
    }

    #[test]
    fn interval_errors() {
        let p = build_prefix_stats(&[1.0, 2.0]).unwrap();
        assert!(matches!(interval_stats(&p, 0, 1), Err(Error::BadInterval { .. })));
        assert!(matches!(interval_stats(&p, 2, 1), Err(Error::BadInterval { .. })));
        assert!(matches!(interval_stats(&p, 1, 3), Err(Error::BadInterval { .. })));
        assert!(matches!(p.interval(1..1), Err(Error::BadInterval { .. })));
        assert!(matches!(build_prefix_stats(&[]), Err(Error::EmptyData)));
    }

    #[test]
    fn max_loglik_examples() {
        let unit = GaussianStats { n: 2, mean: 0.0, variance: 1.0 };
        assert!(close(gaussian_max_loglik(&unit).unwrap(), -(2.0 * PI).ln() - 1.0, 1e-14));
        let s = GaussianStats { n: 4, mean: 0.0, variance: 5.0 };
        assert!(close(gaussian_max_loglik(&s).unwrap(), -2.0 * (10.0 * PI).ln() - 2.0, 1e-13));
        let doubled = GaussianStats { n: 8, ..s };
        assert!(close(
            gaussian_max_loglik(&doubled).unwrap(),
            2.0 * gaussian_max_loglik(&s).unwrap(),
            1e-12
        ));
        let flat = GaussianStats { n: 3, mean: 1.0, variance: 0.0 };
        assert!(matches!(gaussian_max_loglik(&flat), Err(Error::DegenerateVariance)));
    }

    proptest! {
        #[test]
        fn intervals_match_two_pass(
            z in prop::collection::vec(-1e3f64..1e3, 1..1000),
            offset in -1e4f64..1e4,
            picks in prop::collection::vec((0usize..1000, 0usize..1000), 20),
        ) {
            let z: Vec<f64> = z.iter().map(|v| v + offset).collect();
            let p = build_prefix_stats(&z).unwrap();
            for (i, j) in picks {
                let (a, b) = (i % z.len(), j % z.len());
                let (a, b) = (a.min(b), a.max(b) + 1);
                let s = p.interval(a..b).unwrap();
                let (mean, var) = two_pass(&z[a..b]);
                prop_assert_eq!(s.n, b - a);
                prop_assert!((s.mean - mean).abs() <= 1e-12 * (1.0 + offset.abs()));
                prop_assert!((s.variance - var).abs() <= 1e-9 * var.max(1e-300) + 1e-12);
            }
        }

        #[test]
        fn merge_matches_union(
            z in prop::collection::vec(-50f64..50.0, 2..500),
            cut in 1usize..499,
        ) {
            let t = 1 + cut % (z.len() - 1);
            let p = build_prefix_stats(&z).unwrap();
            let merged = p.interval(0..t).unwrap().merge(&p.interval(t..z.len()).unwrap());
            let whole = p.interval(0..z.len()).unwrap();
            prop_assert_eq!(merged.n, whole.n);
            prop_assert!((merged.mean - whole.mean).abs() < 1e-12);
            prop_assert!((merged.variance - whole.variance).abs() <= 1e-9 * whole.variance.max(1e-12));
        }
    }
}
