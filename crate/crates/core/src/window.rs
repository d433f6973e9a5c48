//! Frequency windows and the band stacks `Φ_p(ω) = Σ_{η∈I_p} φ̂(ω - μη)`.
//!
//! `μ` is absorbed into window sampling: signal frequencies stay integral and
//! the window profile is evaluated at `j - μη`.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::{signed_band_range, Alpha, AlphaPartition};
use crate::scalar::Real;
use crate::spectral::FrequencyGrid;

/// Beyond this distance `e^{-πx²}` is exactly zero in both `f32` and `f64`.
const GAUSSIAN_REACH: f64 = 16.0;

/// A profile given as samples, linearly interpolated and zero outside the
/// sampled range.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileTable<T> {
    abscissae: Vec<T>,
    values: Vec<T>,
    /// Evaluate at `|ω|`, so only the non-negative half needs to be stored.
    even: bool,
}

impl<T: Real> ProfileTable<T> {
    pub fn new(abscissae: Vec<T>, values: Vec<T>, even: bool) -> Result<Self> {
        if abscissae.len() != values.len() {
            return Err(Error::LengthMismatch { expected: abscissae.len(), found: values.len() });
        }
        if abscissae.len() < 2 || abscissae.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("table abscissae must be strictly increasing, at least two".into()));
        }
        if even && abscissae[0] < T::zero() {
            return Err(Error::InvalidParameter("even table must start at a non-negative abscissa".into()));
        }
        Ok(Self { abscissae, values, even })
    }

    fn eval(&self, omega: T) -> T {
        let x = if self.even { Float::abs(omega) } else { omega };
        let xs = &self.abscissae;
        if x < xs[0] || x > xs[xs.len() - 1] {
            return T::zero();
        }
        let k = xs.partition_point(|&a| a <= x);
        if k == xs.len() {
            return self.values[xs.len() - 1];
        }
        let (x0, x1) = (xs[k - 1], xs[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    fn reach(&self) -> T {
        let last = self.abscissae[self.abscissae.len() - 1];
        if self.even {
            last
        } else {
            Float::max(Float::abs(self.abscissae[0]), Float::abs(last))
        }
    }
}

use num_traits::Float;

#[derive(Clone, Debug, PartialEq)]
pub enum Window<T> {
    /// `φ(x) = φ̂(x) = e^{-πx²}/√2`.
    Gaussian,
    /// The Gaussian profile cut off by `χ_ε`: 1 on `[-1, 1]`, a cubic
    /// smoothstep down to 0 on `1 ≤ |ω| ≤ 1+ε`, 0 beyond.
    TruncatedGaussian { eps: T },
    Table(ProfileTable<T>),
}

fn gaussian<T: Real>(x: T) -> T {
    (-T::PI() * x * x).exp() * T::FRAC_1_SQRT_2()
}

impl<T: Real> Window<T> {
    pub fn gaussian() -> Self {
        Window::Gaussian
    }

    pub fn truncated_gaussian(eps: T) -> Result<Self> {
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("cutoff width must be positive, got {eps}")));
        }
        Ok(Window::TruncatedGaussian { eps })
    }

    pub fn table(table: ProfileTable<T>) -> Self {
        Window::Table(table)
    }

    /// Frequency profile `φ̂(ω)`.
    pub fn freq(&self, omega: T) -> T {
        match self {
            Window::Gaussian => gaussian(omega),
            Window::TruncatedGaussian { eps } => {
                let a = Float::abs(omega);
                if a <= T::one() {
                    gaussian(omega)
                } else if a >= T::one() + *eps {
                    T::zero()
                } else {
                    let x = (a - T::one()) / *eps;
                    let step = x * x * (T::lit(3.0) - T::lit(2.0) * x);
                    gaussian(omega) * (T::one() - step)
                }
            }
            Window::Table(t) => t.eval(omega),
        }
    }

    /// `ln φ̂(ω)`, evaluated without underflow for the Gaussian.
    pub fn ln_freq(&self, omega: T) -> T {
        match self {
            Window::Gaussian => -T::PI() * omega * omega - T::LN_2() * T::lit(0.5),
            _ => self.freq(omega).ln(),
        }
    }

    /// Time profile `φ(t)` when it has a closed form.
    pub fn time(&self, t: T) -> Option<T> {
        match self {
            Window::Gaussian => Some(gaussian(t)),
            _ => None,
        }
    }

    /// `L` with `supp φ̂ ⊂ [-L, L]`, or `None` for non-compact windows.
    pub fn support_radius(&self) -> Option<T> {
        match self {
            Window::Gaussian => None,
            Window::TruncatedGaussian { eps } => Some(T::one() + *eps),
            Window::Table(t) => Some(t.reach()),
        }
    }

    pub fn is_compact(&self) -> bool {
        self.support_radius().is_some()
    }

    /// Distance beyond which `freq` returns exactly zero.
    pub fn reach(&self) -> T {
        self.support_radius().unwrap_or_else(|| T::lit(GAUSSIAN_REACH))
    }

    /// `Σ_k sup_{[k,k+1)} |φ̂|`, sampled 256 times per unit interval.
    pub fn wiener_norm(&self) -> T {
        let r = self.reach().ceil().to_i64().unwrap_or(0) + 1;
        let steps = 256;
        (-r..=r)
            .map(|k| {
                (0..=steps)
                    .map(|s| {
                        let x = T::from_i64_lossy(k) + T::from_usize_lossy(s) / T::from_usize_lossy(steps);
                        Float::abs(self.freq(x))
                    })
                    .fold(T::zero(), Float::max)
            })
            .sum()
    }

    pub fn label(&self) -> String {
        match self {
            Window::Gaussian => "gaussian".into(),
            Window::TruncatedGaussian { eps } => format!("tgauss:{eps}"),
            Window::Table(_) => "table".into(),
        }
    }
}

impl<T: Real> FromStr for Window<T> {
    type Err = Error;

    /// `gaussian` or `tgauss:EPS`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "gaussian" => Ok(Window::Gaussian),
            Some(("tgauss", eps)) => {
                let eps: f64 = eps
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad cutoff width in {s:?}")))?;
                Window::truncated_gaussian(T::lit(eps))
            }
            _ => Err(Error::InvalidParameter(format!("unknown window {s:?} (expected gaussian or tgauss:EPS)"))),
        }
    }
}

/// Least-squares fit of `log φ̂` against `log(1+|ω|)` on `[1, radius]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum DecayFit<T> {
    /// Compact window: every polynomial order holds beyond `radius`.
    Compact { radius: T },
    /// `|φ̂(ω)| ≤ constant / (1+|ω|)^order` on the fit range.
    Power { order: T, constant: T },
}

pub fn decay_fit<T: Real>(window: &Window<T>, radius: T) -> Result<DecayFit<T>> {
    if !(radius > T::one()) {
        return Err(Error::InvalidParameter(format!("fit radius must exceed 1, got {radius}")));
    }
    if let Some(l) = window.support_radius().filter(|&l| l < radius) {
        return Ok(DecayFit::Compact { radius: l });
    }
    let m = 200;
    let samples: Vec<(T, T, T)> = (0..m)
        .filter_map(|k| {
            let omega = T::one() + (radius - T::one()) * T::from_usize_lossy(k) / T::from_usize_lossy(m - 1);
            let v = Float::abs(window.freq(omega));
            (v > T::zero()).then(|| (omega, (T::one() + omega).ln(), v.ln()))
        })
        .collect();
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("profile vanishes on the fit range".into()));
    }
    let cnt = T::from_usize_lossy(samples.len());
    let mx = samples.iter().map(|s| s.1).sum::<T>() / cnt;
    let my = samples.iter().map(|s| s.2).sum::<T>() / cnt;
    let sxy: T = samples.iter().map(|s| (s.1 - mx) * (s.2 - my)).sum();
    let sxx: T = samples.iter().map(|s| (s.1 - mx) * (s.1 - mx)).sum();
    let order = -sxy / sxx;
    let constant = samples
        .iter()
        .map(|&(omega, _, logv)| (logv + order * (T::one() + omega).ln()).exp())
        .fold(T::zero(), Float::max);
    Ok(DecayFit::Power { order, constant })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StackBand<T> {
    pub p: i64,
    /// Values over the grid, lowest frequency first.
    pub values: Vec<T>,
    /// Inclusive slot range holding every nonzero value.
    pub support: Option<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport<T> {
    /// Largest stack value.
    pub c1: T,
    /// Largest number of bands with `Φ_p(ω) > 1e-12` at one frequency.
    pub c2: usize,
    /// `min_ω max_p Φ_p(ω)`.
    pub c3: T,
    /// Compactly supported window, the setting of the admissibility definition.
    pub painless: bool,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StackBounds<T> {
    /// `inf_ω Σ_p Φ_p(ω)²` over the grid.
    pub a_low: T,
    pub b_high: T,
}

const OVERLAP_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct WindowStack<T> {
    window: Window<T>,
    partition: AlphaPartition,
    mu: T,
    grid: FrequencyGrid,
    bands: Vec<StackBand<T>>,
}

/// Slot in band order `0, 1, -1, 2, -2, …`.
fn band_slot(p: i64) -> usize {
    match p {
        0 => 0,
        p if p > 0 => 2 * p as usize - 1,
        p => 2 * p.unsigned_abs() as usize,
    }
}

fn support_of<T: Real>(values: &[T]) -> Option<(usize, usize)> {
    let first = values.iter().position(|v| *v != T::zero())?;
    let last = values.iter().rposition(|v| *v != T::zero())?;
    Some((first, last))
}

impl<T: Real> WindowStack<T> {
    /// Builds every band whose stack is nonzero somewhere on the grid.
    ///
    /// The partition must extend far enough that the first band it does not
    /// contain would vanish on the grid.
    pub fn build(window: &Window<T>, partition: &AlphaPartition, mu: T, grid: FrequencyGrid) -> Result<Self> {
        if !(mu > T::zero()) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
        }
        let bound = Self::coverage_bound(window, mu, grid);
        if partition.upper() < bound {
            let required = AlphaPartition::reaching(partition.alpha(), bound).p_max();
            return Err(Error::PartitionTooShort { required });
        }
        let p_top = partition.p_max() as i64;
        let computed: Vec<(Vec<T>, Vec<T>)> = (0..=p_top)
            .into_par_iter()
            .map(|p| {
                let pos = Self::band_values(window, partition, mu, grid, p);
                let neg = if p == 0 { Vec::new() } else { Self::band_values(window, partition, mu, grid, -p) };
                (pos, neg)
            })
            .collect();
        let nonzero = |v: &[T]| v.iter().any(|x| *x != T::zero());
        let keep = computed
            .iter()
            .rposition(|(a, b)| nonzero(a) || nonzero(b))
            .unwrap_or(0);
        let mut bands = Vec::with_capacity(2 * keep + 1);
        for (p, (pos, neg)) in computed.into_iter().enumerate().take(keep + 1) {
            let p = p as i64;
            bands.push(StackBand { p, support: support_of(&pos), values: pos });
            if p > 0 {
                bands.push(StackBand { p: -p, support: support_of(&neg), values: neg });
            }
        }
        Ok(Self { window: window.clone(), partition: partition.clone(), mu, grid, bands })
    }

    /// Builds the partition as well, just long enough for the grid.
    pub fn for_grid(window: &Window<T>, alpha: Alpha, mu: T, grid: FrequencyGrid) -> Result<Self> {
        if !(mu > T::zero()) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
        }
        let part = AlphaPartition::reaching(alpha, Self::coverage_bound(window, mu, grid).max(2));
        Self::build(window, &part, mu, grid)
    }

    /// Smallest `s` such that bands starting at or beyond `s` vanish on the grid:
    /// `μ s - reach > N/2`.
    fn coverage_bound(window: &Window<T>, mu: T, grid: FrequencyGrid) -> u64 {
        let edge = (T::from_i64_lossy(grid.half()) + window.reach()) / mu;
        edge.floor().to_u64().unwrap_or(u64::MAX - 1) + 1
    }

    /// `Φ_{|p|}(sign(p)·ω)` on the grid.
    fn band_values(window: &Window<T>, partition: &AlphaPartition, mu: T, grid: FrequencyGrid, p: i64) -> Vec<T> {
        let iv = partition.interval(p.unsigned_abs() as usize).expect("band within partition");
        let reach = window.reach();
        let mut values = vec![T::zero(); grid.size()];
        let lo_w = mu * T::from_u64(iv.lower).unwrap() - reach;
        let hi_w = mu * T::from_u64(iv.upper - 1).unwrap() + reach;
        let (lo, hi) = if p < 0 { (-hi_w, -lo_w) } else { (lo_w, hi_w) };
        let lo = lo.ceil().to_i64().unwrap_or(i64::MIN).max(grid.min_freq());
        let hi = hi.floor().to_i64().unwrap_or(i64::MAX).min(grid.max_freq());
        for freq in lo..=hi {
            let w = T::from_i64_lossy(if p < 0 { -freq } else { freq });
            values[grid.slot(freq).unwrap()] = stack_value(window, mu, iv.lower, iv.upper, w);
        }
        values
    }

    pub fn window(&self) -> &Window<T> {
        &self.window
    }

    pub fn partition(&self) -> &AlphaPartition {
        &self.partition
    }

    pub fn alpha(&self) -> Alpha {
        self.partition.alpha()
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    /// Bands in order `0, 1, -1, 2, -2, …`.
    pub fn bands(&self) -> &[StackBand<T>] {
        &self.bands
    }

    pub fn band(&self, p: i64) -> Option<&StackBand<T>> {
        self.bands.get(band_slot(p)).filter(|b| b.p == p)
    }

    /// Largest `|p|` carried by the stack.
    pub fn p_top(&self) -> i64 {
        self.bands.last().map_or(0, |b| b.p.abs())
    }

    /// `β(|p|)`.
    pub fn beta(&self, p: i64) -> u64 {
        self.partition.width(p).expect("band within partition")
    }

    /// `H₀(ω) = Σ_p Φ_p(ω)²` over the grid.
    pub fn h0(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.grid.size()];
        for b in &self.bands {
            if let Some((lo, hi)) = b.support {
                for s in lo..=hi {
                    out[s] = out[s] + b.values[s] * b.values[s];
                }
            }
        }
        out
    }

    pub fn sum_bounds(&self) -> StackBounds<T> {
        let h0 = self.h0();
        StackBounds {
            a_low: h0.iter().copied().fold(T::infinity(), Float::min),
            b_high: h0.iter().copied().fold(T::neg_infinity(), Float::max),
        }
    }

    pub fn admissibility(&self) -> AdmissibilityReport<T> {
        let thr = T::lit(OVERLAP_THRESHOLD);
        let n = self.grid.size();
        let mut c1 = T::zero();
        let mut counts = vec![0usize; n];
        let mut best = vec![T::zero(); n];
        for b in &self.bands {
            for (s, &v) in b.values.iter().enumerate() {
                c1 = Float::max(c1, v);
                if v > thr {
                    counts[s] += 1;
                }
                best[s] = Float::max(best[s], v);
            }
        }
        let c2 = counts.into_iter().max().unwrap_or(0);
        let c3 = best.into_iter().fold(T::infinity(), Float::min);
        AdmissibilityReport { c1, c2, c3, painless: self.window.is_compact(), passed: c1.is_finite() && c3 > T::zero() }
    }

    /// `((1/μ + 1)·‖φ‖_W)²`, an upper bound for `Σ_p Φ_p²` when `φ̂ ≥ 0`.
    pub fn wiener_upper_bound(&self) -> T {
        let w = (T::one() / self.mu + T::one()) * self.window.wiener_norm();
        w * w
    }

    /// Distance from `ω` to the hull of `μ I_p` (mirrored for `p < 0`).
    pub fn band_distance(&self, p: i64, omega: T) -> T {
        let (lo, hi) = signed_band_range(&self.partition, p).expect("band within partition");
        let a = self.mu * T::from_i64_lossy(lo);
        let b = self.mu * T::from_i64_lossy(hi - 1);
        if omega < a {
            a - omega
        } else if omega > b {
            omega - b
        } else {
            T::zero()
        }
    }

    /// `max_ω Φ_p(ω)·(1 + dist(ω, μI_p))^{order-1} / constant`.
    pub fn band_decay_profile(&self, p: i64, order: T, constant: T) -> Result<T> {
        let band = self.band(p).ok_or_else(|| Error::IndexOutOfRange(format!("band {p} not in stack")))?;
        Ok(self
            .grid
            .freqs()
            .zip(&band.values)
            .map(|(freq, &v)| {
                let d = self.band_distance(p, T::from_i64_lossy(freq));
                v * (T::one() + d).powf(order - T::one()) / constant
            })
            .fold(T::zero(), Float::max))
    }

    /// Length of the band's support on the grid, `last - first` nonzero frequency.
    pub fn support_span(&self, p: i64) -> Option<T> {
        let (lo, hi) = self.band(p)?.support?;
        Some(T::from_usize_lossy(hi - lo))
    }
}

/// `Σ_{η=lower}^{upper-1} φ̂(ω - μη)`, skipping terms beyond the window's reach
/// (which are exactly zero).
pub(crate) fn stack_value<T: Real>(window: &Window<T>, mu: T, lower: u64, upper: u64, omega: T) -> T {
    let reach = window.reach();
    let first = ((omega - reach) / mu).ceil().to_i64().unwrap_or(i64::MIN).max(lower as i64);
    let last = ((omega + reach) / mu).floor().to_i64().unwrap_or(i64::MAX).min(upper as i64 - 1);
    (first..=last)
        .map(|eta| window.freq(omega - mu * T::from_i64_lossy(eta)))
        .fold(T::zero(), |acc, v| acc + v)
}

/// `ln Σ_{η=lower}^{upper-1} φ̂(ω - μη)` over every lattice point, by
/// log-sum-exp, so tails far below the floating-point range stay finite.
pub(crate) fn ln_interval_sum<T: Real>(window: &Window<T>, mu: T, lower: i64, upper: i64, omega: T) -> T {
    let logs: Vec<T> = (lower..upper).map(|eta| window.ln_freq(omega - mu * T::from_i64_lossy(eta))).collect();
    log_sum_exp(&logs)
}

pub(crate) fn log_sum_exp<T: Real>(logs: &[T]) -> T {
    let top = logs.iter().copied().fold(T::neg_infinity(), Float::max);
    if top == T::neg_infinity() {
        return top;
    }
    top + logs.iter().map(|&l| (l - top).exp()).sum::<T>().ln()
}
