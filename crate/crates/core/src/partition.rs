//! The α-partition of the non-negative integers.
//!
//! `i_0 = 0, s_0 = 1`; for `p ≥ 1`, `i_p = s_{p-1}`, `β(p) = ⌊i_p^α⌋` and
//! `s_p = i_p + β(p)`. Negative indices mirror the positive ones,
//! `I_{-p} = -I_p`, and are never stored.

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};

/// Exponent `α ∈ [0, 1]`, kept as an exact fraction whenever the value is a
/// ratio with a small denominator so that `⌊i^α⌋` can be decided exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Alpha {
    value: f64,
    #[serde(skip)]
    exact: Option<(u32, u32)>,
}

const MAX_DENOMINATOR: u32 = 1000;

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidAlpha(value));
        }
        let exact = (1..=MAX_DENOMINATOR).find_map(|den| {
            let num = (value * den as f64).round();
            (num / den as f64 == value).then_some((num as u32, den))
        });
        Ok(Self { value, exact })
    }

    pub fn rational(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidAlpha(num as f64 / den as f64));
        }
        let g = gcd(num, den).max(1);
        Ok(Self { value: num as f64 / den as f64, exact: Some((num / g, den / g)) })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// `(numerator, denominator)` when α is held exactly.
    pub fn as_ratio(&self) -> Option<(u32, u32)> {
        self.exact
    }

    /// `⌊x^α⌋` for `x ≥ 1`.
    pub fn floor_pow(&self, x: u64) -> u64 {
        debug_assert!(x >= 1);
        match self.exact {
            Some((0, _)) => 1,
            Some((a, b)) if a == b => x,
            Some((a, b)) => {
                let target = BigUint::from(x).pow(a);
                let fits = |k: u64| BigUint::from(k).pow(b) <= target;
                let mut k = (x as f64).powf(self.value).floor() as u64;
                while k > 1 && !fits(k) {
                    k -= 1;
                }
                while fits(k + 1) {
                    k += 1;
                }
                k.max(1)
            }
            None => ((x as f64).powf(self.value).floor() as u64).max(1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionInterval {
    pub p: usize,
    /// Inclusive lower end `i_{α;p}`.
    pub lower: u64,
    /// Exclusive upper end `s_{α;p}`.
    pub upper: u64,
    pub width: u64,
}

impl PartitionInterval {
    pub fn contains(&self, eta: u64) -> bool {
        eta >= self.lower && eta < self.upper
    }

    pub fn frequencies(&self) -> std::ops::Range<u64> {
        self.lower..self.upper
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaPartition {
    alpha: Alpha,
    intervals: Vec<PartitionInterval>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoveringRatio {
    pub p: usize,
    /// `β(p) / (s_p - 1)^α`.
    pub min_ratio: f64,
    /// `β(p) / i_p^α`.
    pub max_ratio: f64,
    /// Whether both ratios lie in `[2^{-(α+1)}, 1]`, decided exactly for rational α.
    pub within_bounds: bool,
}

impl AlphaPartition {
    pub fn build(alpha: Alpha, p_max: usize) -> Result<Self> {
        if p_max < 1 {
            return Err(Error::InvalidParameter("p_max must be at least 1".into()));
        }
        let mut intervals = Vec::with_capacity(p_max + 1);
        intervals.push(PartitionInterval { p: 0, lower: 0, upper: 1, width: 1 });
        for p in 1..=p_max {
            let lower = intervals[p - 1].upper;
            let width = alpha.floor_pow(lower);
            let upper = lower
                .checked_add(width)
                .ok_or_else(|| Error::InvalidParameter(format!("interval {p} overflows 64-bit frequencies")))?;
            intervals.push(PartitionInterval { p, lower, upper, width });
        }
        Ok(Self { alpha, intervals })
    }

    pub fn new(alpha: f64, p_max: usize) -> Result<Self> {
        Self::build(Alpha::new(alpha)?, p_max)
    }

    /// Shortest partition whose last interval ends at or beyond `bound`.
    pub fn reaching(alpha: Alpha, bound: u64) -> Self {
        let mut part = Self::build(alpha, 1).expect("p_max = 1 is valid");
        while part.upper() < bound {
            part.push_next();
        }
        part
    }

    fn push_next(&mut self) {
        let last = *self.intervals.last().unwrap();
        let lower = last.upper;
        let width = self.alpha.floor_pow(lower);
        self.intervals.push(PartitionInterval { p: last.p + 1, lower, upper: lower + width, width });
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn p_max(&self) -> usize {
        self.intervals.len() - 1
    }

    pub fn intervals(&self) -> &[PartitionInterval] {
        &self.intervals
    }

    pub fn interval(&self, p: usize) -> Option<&PartitionInterval> {
        self.intervals.get(p)
    }

    /// `β(|p|)` for a signed band index.
    pub fn width(&self, p: i64) -> Option<u64> {
        self.intervals.get(p.unsigned_abs() as usize).map(|iv| iv.width)
    }

    /// `s_{α;p_max}`, the end of the covered range.
    pub fn upper(&self) -> u64 {
        self.intervals.last().unwrap().upper
    }

    pub fn interval_of(&self, eta: u64) -> Result<usize> {
        if eta >= self.upper() {
            return Err(Error::EtaOutOfRange { eta, limit: self.upper() });
        }
        Ok(self.intervals.partition_point(|iv| iv.upper <= eta))
    }

    /// Mirror-symmetric lookup: `-η` belongs to band `-p` when `η ∈ I_p`.
    pub fn signed_interval_of(&self, eta: i64) -> Result<i64> {
        let p = self.interval_of(eta.unsigned_abs())? as i64;
        Ok(if eta < 0 { -p } else { p })
    }

    pub fn covering_ratios(&self, p_min: usize) -> Result<Vec<CoveringRatio>> {
        if p_min < 1 {
            return Err(Error::InvalidParameter("p_min must be at least 1".into()));
        }
        let a = self.alpha.value;
        Ok(self.intervals[p_min.min(self.intervals.len())..]
            .iter()
            .map(|iv| {
                if self.alpha.exact.is_some_and(|(num, _)| num == 0) {
                    return CoveringRatio { p: iv.p, min_ratio: 1.0, max_ratio: 1.0, within_bounds: true };
                }
                let beta = iv.width as f64;
                let min_ratio = beta / ((iv.upper - 1) as f64).powf(a);
                let max_ratio = beta / (iv.lower as f64).powf(a);
                let within_bounds = match self.alpha.exact {
                    Some((num, den)) => covering_exact(iv, num, den),
                    None => min_ratio >= 2f64.powf(-(a + 1.0)) && max_ratio <= 1.0,
                };
                CoveringRatio { p: iv.p, min_ratio, max_ratio, within_bounds }
            })
            .collect())
    }

    /// Smallest `p ≥ 1` from which every interval up to `p_max` satisfies the
    /// covering bounds.
    pub fn covering_threshold(&self) -> Option<usize> {
        let ratios = self.covering_ratios(1).ok()?;
        let mut threshold = None;
        for r in ratios.iter().rev() {
            if !r.within_bounds {
                break;
            }
            threshold = Some(r.p);
        }
        threshold
    }
}

/// With `α = a/b`: `β/(s-1)^α ≥ 2^{-(α+1)} ⇔ β^b·2^{a+b} ≥ (s-1)^a` and
/// `β/i^α ≤ 1 ⇔ β^b ≤ i^a`.
fn covering_exact(iv: &PartitionInterval, a: u32, b: u32) -> bool {
    let beta_b = BigUint::from(iv.width).pow(b);
    let lower_ok = &beta_b * (BigUint::one() << (a + b) as usize) >= BigUint::from(iv.upper - 1).pow(a);
    let upper_ok = beta_b <= BigUint::from(iv.lower).pow(a);
    lower_ok && upper_ok
}

/// Integer frequency range `[lo, hi)` of band `p` (signed), in frequency units.
pub fn signed_band_range(part: &AlphaPartition, p: i64) -> Option<(i64, i64)> {
    let iv = part.interval(p.unsigned_abs() as usize)?;
    let (lo, hi) = (iv.lower as i64, iv.upper as i64);
    Some(if p < 0 { (1 - hi, 1 - lo) } else { (lo, hi) })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct iteration with float floor, checked against small exact cases.
    fn oracle(alpha: f64, p_max: usize) -> Vec<(u64, u64)> {
        let mut out = vec![(0u64, 1u64)];
        let mut s = 1u64;
        for _ in 1..=p_max {
            let i = s;
            let target = (i as f64).powf(alpha);
            let mut b = ((target * (1.0 - 1e-12)).floor() as u64).max(1);
            while ((b + 1) as f64) <= target * (1.0 + 1e-12) {
                b += 1;
            }
            out.push((i, b));
            s = i + b;
        }
        out
    }

    #[test]
    fn dyadic_case() {
        let part = AlphaPartition::new(1.0, 4).unwrap();
        let got: Vec<_> = part.intervals().iter().map(|iv| (iv.lower, iv.upper)).collect();
        assert_eq!(got, vec![(0, 1), (1, 2), (2, 4), (4, 8), (8, 16)]);
    }

    #[test]
    fn dyadic_overflow_is_an_error() {
        assert_eq!(AlphaPartition::new(1.0, 63).unwrap().upper(), 1 << 63);
        assert!(matches!(AlphaPartition::new(1.0, 64), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn uniform_case() {
        let part = AlphaPartition::new(0.0, 3).unwrap();
        let got: Vec<_> = part.intervals().iter().map(|iv| (iv.lower, iv.upper, iv.width)).collect();
        assert_eq!(got, vec![(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1)]);
    }

    #[test]
    fn half_case_table() {
        let part = AlphaPartition::new(0.5, 7).unwrap();
        let i: Vec<_> = part.intervals().iter().map(|iv| iv.lower).collect();
        let b: Vec<_> = part.intervals().iter().map(|iv| iv.width).collect();
        assert_eq!(i, vec![0, 1, 2, 3, 4, 6, 8, 10]);
        assert_eq!(b, vec![1, 1, 1, 1, 2, 2, 2, 3]);
        let o = oracle(0.5, 7);
        assert_eq!(o.iter().map(|x| x.0).collect::<Vec<_>>(), i);
    }

    #[test]
    fn exact_floor_at_perfect_powers() {
        let a = Alpha::rational(1, 2).unwrap();
        assert_eq!(a.floor_pow(16), 4);
        assert_eq!(a.floor_pow(15), 3);
        assert_eq!(a.floor_pow(17), 4);
        let a = Alpha::rational(2, 3).unwrap();
        assert_eq!(a.floor_pow(27), 9);
        assert_eq!(a.floor_pow(26), 8);
        assert_eq!(a.floor_pow(1_000_000), 10_000);
        assert_eq!(a.floor_pow(999_999), 9_999);
    }

    #[test]
    fn matches_oracle_on_alpha_grid() {
        for k in 0..=10 {
            let alpha = k as f64 / 10.0;
            let part = AlphaPartition::new(alpha, 40).unwrap();
            let o = oracle(alpha, 40);
            for (iv, &(i, b)) in part.intervals().iter().zip(&o) {
                assert_eq!((iv.lower, iv.width), (i, b), "alpha={alpha} p={}", iv.p);
            }
        }
    }

    #[test]
    fn interval_lookup() {
        assert_eq!(AlphaPartition::new(1.0, 5).unwrap().interval_of(5).unwrap(), 3);
        assert_eq!(AlphaPartition::new(0.0, 10).unwrap().interval_of(7).unwrap(), 7);
        let half = AlphaPartition::new(0.5, 7).unwrap();
        assert_eq!(half.interval_of(9).unwrap(), 6);
        assert_eq!(half.signed_interval_of(-9).unwrap(), -6);
        assert!(matches!(half.interval_of(13), Err(Error::EtaOutOfRange { .. })));
    }

    #[test]
    fn invalid_arguments() {
        assert!(matches!(AlphaPartition::new(1.5, 3), Err(Error::InvalidAlpha(_))));
        assert!(matches!(AlphaPartition::new(-0.1, 3), Err(Error::InvalidAlpha(_))));
        assert!(AlphaPartition::new(0.5, 0).is_err());
        assert!(AlphaPartition::new(0.5, 4).unwrap().covering_ratios(0).is_err());
    }

    #[test]
    fn tiling_and_monotone_widths() {
        for k in 0..=10 {
            let part = AlphaPartition::new(k as f64 / 10.0, 40).unwrap();
            let total: u64 = part.intervals().iter().map(|iv| iv.width).sum();
            assert_eq!(total, part.upper());
            let edges = part.intervals().iter().flat_map(|iv| [iv.lower, iv.upper - 1]);
            for eta in (0..part.upper().min(4096)).chain(edges) {
                let p = part.interval_of(eta).unwrap();
                assert!(part.intervals()[p].contains(eta));
                assert_eq!(part.intervals().iter().filter(|iv| iv.contains(eta)).count(), 1);
            }
            for w in part.intervals()[1..].windows(2) {
                assert!(w[1].width >= w[0].width);
                assert_eq!(w[1].lower, w[0].upper);
            }
        }
    }

    #[test]
    fn growth_rates() {
        let dyadic = AlphaPartition::new(1.0, 30).unwrap();
        for p in 1..30 {
            assert_eq!(dyadic.intervals()[p + 1].width, 2 * dyadic.intervals()[p].width);
        }
        let half = AlphaPartition::new(0.5, 60).unwrap();
        for p in 30..=60 {
            let r = half.intervals()[p].width as f64 / half.intervals()[p - 1].width as f64;
            assert!(r <= 1.5);
        }
    }

    #[test]
    fn covering_examples() {
        let dyadic = AlphaPartition::new(1.0, 6).unwrap();
        let r = dyadic.covering_ratios(5).unwrap()[0];
        assert_eq!(r.p, 5);
        assert!((r.min_ratio - 16.0 / 31.0).abs() < 1e-15 && r.max_ratio == 1.0 && r.within_bounds);

        let half = AlphaPartition::new(0.5, 7).unwrap();
        let r = half.covering_ratios(7).unwrap()[0];
        assert!((r.min_ratio - 3.0 / 12f64.sqrt()).abs() < 1e-15);
        assert!((r.max_ratio - 3.0 / 10f64.sqrt()).abs() < 1e-15);
        assert!(r.within_bounds);

        let uniform = AlphaPartition::new(0.0, 5).unwrap();
        assert!(uniform.covering_ratios(1).unwrap().iter().all(|r| r.min_ratio == 1.0 && r.max_ratio == 1.0));
        assert_eq!(uniform.covering_threshold(), Some(1));
    }

    #[test]
    fn mirrored_band_range() {
        let part = AlphaPartition::new(1.0, 4).unwrap();
        assert_eq!(signed_band_range(&part, 3), Some((4, 8)));
        assert_eq!(signed_band_range(&part, -3), Some((-7, -3)));
        assert_eq!(signed_band_range(&part, 0), Some((0, 1)));
    }
}
