//! Dyadic (`α = 1`) tiling of `ℤ^d` by coronae and boxes, and the
//! multidimensional DOST frame built on it.
//!
//! Level `p ≥ 1` has side `β(p) = 2^{p-1}`; its corona
//! `[-2β, 2β)^d \ [-β, β)^d` is cut into the half-open boxes
//! `Π_s [βℓ_s, β(ℓ_s+1))` with `ℓ ∈ {-2,-1,0,1}^d` and box centre outside the
//! inner cube. The inner cube `C₀ = [-1, 1)^d` is one extra box with `β = 1`.
//!
//! The frequency window is the `d`-fold product of a 1D profile, so every box
//! stack factors into per-axis interval sums. Signals live on an `N^d` grid,
//! row-major with the last axis fastest, each axis ordered as in
//! [`FrequencyGrid`].

use std::collections::HashMap;

use nalgebra::{DMatrix, RealField};
use num_traits::Float;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::{BoundMethod, FrameBounds, WalnutBoundReport, EIGEN_GRID_LIMIT, FILTER_FLOOR};
use crate::scalar::{czero, ordered_fold, unit_phase, Real};
use crate::spectral::FrequencyGrid;
use crate::window::{ln_interval_sum, log_sum_exp, stack_value, Window};

/// Largest `N` per axis for dense `d`-dimensional grids.
pub fn grid_limit(d: usize) -> usize {
    match d {
        1 => 1 << 20,
        2 => 256,
        _ => 32,
    }
}

/// Cap on the number of frame coefficients materialized at once.
pub const COEFFICIENT_LIMIT: usize = 1 << 27;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BoxIndex {
    pub p: usize,
    pub ell: Vec<i8>,
}

impl BoxIndex {
    pub fn new(p: usize, ell: Vec<i8>) -> Self {
        Self { p, ell }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NdBox {
    pub p: usize,
    /// All zeros for the inner cube.
    pub ell: Vec<i8>,
    pub lower: Vec<i64>,
    pub side: u64,
    /// Translation scale: `β(p)`, and 1 for the inner cube.
    pub beta: u64,
}

impl NdBox {
    pub fn index(&self) -> BoxIndex {
        BoxIndex::new(self.p, self.ell.clone())
    }

    /// Half-open interval `[lo, hi)` along axis `s`.
    pub fn axis_range(&self, s: usize) -> (i64, i64) {
        (self.lower[s], self.lower[s] + self.side as i64)
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        point.iter().enumerate().all(|(s, &x)| {
            let (lo, hi) = self.axis_range(s);
            x >= lo && x < hi
        })
    }
}

/// `β(p) = 2^{p-1}`.
pub fn dyadic_beta(p: usize) -> u64 {
    1u64 << (p - 1)
}

/// Box centre `β(ℓ + 1/2)` lies outside `[-β, β]^d`, i.e. `|2ℓ_s + 1| > 2`
/// on some axis.
pub fn is_admissible(ell: &[i8]) -> bool {
    ell.iter().all(|l| (-2..=1).contains(l)) && ell.iter().any(|&l| (2 * l as i32 + 1).abs() > 2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NdTiling {
    d: usize,
    p_max: usize,
    boxes: Vec<NdBox>,
}

impl NdTiling {
    pub fn build(d: usize, p_max: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if p_max == 0 {
            return Err(Error::InvalidParameter("p_max must be at least 1".into()));
        }
        if p_max > 62 {
            return Err(Error::InvalidParameter(format!("p_max {p_max} overflows the lattice")));
        }
        let mut boxes = vec![NdBox { p: 0, ell: vec![0; d], lower: vec![-1; d], side: 2, beta: 1 }];
        let ells = all_ells(d);
        for p in 1..=p_max {
            let beta = dyadic_beta(p);
            for ell in ells.iter().filter(|e| is_admissible(e)) {
                let lower = ell.iter().map(|&l| beta as i64 * l as i64).collect();
                boxes.push(NdBox { p, ell: ell.clone(), lower, side: beta, beta });
            }
        }
        Ok(Self { d, p_max, boxes })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    /// Inner cube first, then level by level.
    pub fn boxes(&self) -> &[NdBox] {
        &self.boxes
    }

    pub fn boxes_at(&self, p: usize) -> impl Iterator<Item = &NdBox> {
        self.boxes.iter().filter(move |b| b.p == p)
    }

    pub fn find(&self, idx: &BoxIndex) -> Result<&NdBox> {
        if idx.ell.len() != self.d {
            return Err(Error::LengthMismatch { expected: self.d, found: idx.ell.len() });
        }
        if idx.p > self.p_max {
            return Err(Error::IndexOutOfRange(format!("level {} beyond p_max {}", idx.p, self.p_max)));
        }
        let valid = if idx.p == 0 { idx.ell.iter().all(|&l| l == 0) } else { is_admissible(&idx.ell) };
        if !valid {
            return Err(Error::IndexOutOfRange(format!("inadmissible box {:?} at level {}", idx.ell, idx.p)));
        }
        Ok(self.boxes.iter().find(|b| b.p == idx.p && b.ell == idx.ell).expect("admissible box is tiled"))
    }

    /// The `β(p)^d` integer points of the box (`2^d` for the inner cube).
    pub fn lattice_points(&self, idx: &BoxIndex) -> Result<Vec<Vec<i64>>> {
        let b = self.find(idx)?;
        let ranges: Vec<(i64, i64)> = (0..self.d).map(|s| b.axis_range(s)).collect();
        let mut out = Vec::new();
        let mut point: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(point.clone());
            let mut s = self.d;
            loop {
                if s == 0 {
                    return Ok(out);
                }
                s -= 1;
                point[s] += 1;
                if point[s] < ranges[s].1 {
                    break;
                }
                point[s] = ranges[s].0;
            }
        }
    }

    /// Box holding an integer point, if it lies in `[-2^{p_max}, 2^{p_max})^d`.
    pub fn locate(&self, point: &[i64]) -> Option<&NdBox> {
        let m = point.iter().map(|&x| if x < 0 { -x - 1 } else { x }).max()?;
        let p = if m == 0 { 0 } else { 64 - (m as u64).leading_zeros() as usize };
        if p > self.p_max {
            return None;
        }
        self.boxes_at(p).find(|b| b.contains(point))
    }
}

fn all_ells(d: usize) -> Vec<Vec<i8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|e: Vec<i8>| {
                (-2i8..=1).map(move |l| {
                    let mut e = e.clone();
                    e.push(l);
                    e
                })
            })
            .collect();
    }
    out
}

/// Dense complex array on an `N^d` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NdSignal<T> {
    grid: FrequencyGrid,
    d: usize,
    values: Vec<Complex<T>>,
}

impl<T: Real> NdSignal<T> {
    pub fn new(grid: FrequencyGrid, d: usize, values: Vec<Complex<T>>) -> Result<Self> {
        let expected = grid.size().pow(d as u32);
        if values.len() != expected {
            return Err(Error::LengthMismatch { expected, found: values.len() });
        }
        Ok(Self { grid, d, values })
    }

    pub fn zeros(grid: FrequencyGrid, d: usize) -> Self {
        Self { grid, d, values: vec![czero(); grid.size().pow(d as u32)] }
    }

    /// Fills from a function of the per-axis frequencies.
    pub fn from_fn(grid: FrequencyGrid, d: usize, mut f: impl FnMut(&[i64]) -> Complex<T>) -> Self {
        let total = grid.size().pow(d as u32);
        let mut slots = vec![0usize; d];
        let mut freqs = vec![0i64; d];
        let values = (0..total)
            .map(|flat| {
                unflatten(flat, grid.size(), &mut slots);
                freqs.iter_mut().zip(&slots).for_each(|(x, &s)| *x = grid.freq_at(s));
                f(&freqs)
            })
            .collect();
        Self { grid, d, values }
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn at(&self, freqs: &[i64]) -> Complex<T> {
        let n = self.grid.size();
        let mut flat = 0;
        for &f in freqs {
            match self.grid.slot(f) {
                Some(s) => flat = flat * n + s,
                None => return czero(),
            }
        }
        self.values[flat]
    }

    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn energy(&self) -> T {
        self.values.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.energy().sqrt()
    }

    pub fn relative_distance(&self, other: &Self) -> T {
        let diff: T = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        diff.sqrt() / other.norm()
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self { grid: self.grid, d: self.d, values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { grid: self.grid, d: self.d, values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }
}

fn unflatten(mut flat: usize, n: usize, out: &mut [usize]) {
    for s in (0..out.len()).rev() {
        out[s] = flat % n;
        flat /= n;
    }
}

#[allow(clippy::needless_range_loop)]
fn fft_nd<T: Real>(buf: &mut [Complex<T>], n: usize, d: usize, direction: FftDirection, planner: &mut FftPlanner<T>) {
    let fft = planner.plan_fft(n, direction);
    let mut line = vec![czero::<T>(); n];
    let total = buf.len();
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for i in 0..n {
                    line[i] = buf[base + i * stride];
                }
                fft.process(&mut line);
                for i in 0..n {
                    buf[base + i * stride] = line[i];
                }
            }
        }
    }
}

/// `f̂(j) = N^{-d} Σ_x f(x/N) e^{-2πi⟨j,x⟩/N}` on the centred grid.
pub fn nd_to_spectrum<T: Real>(samples: &[Complex<T>], grid: FrequencyGrid, d: usize) -> Result<NdSignal<T>> {
    let n = grid.size();
    let expected = n.pow(d as u32);
    if samples.len() != expected {
        return Err(Error::LengthMismatch { expected, found: samples.len() });
    }
    let mut buf = samples.to_vec();
    fft_nd(&mut buf, n, d, FftDirection::Forward, &mut FftPlanner::new());
    let scale = T::one() / T::from_usize_lossy(expected);
    let mut out = vec![czero::<T>(); expected];
    let mut idx = vec![0usize; d];
    for (flat, v) in buf.into_iter().enumerate() {
        unflatten(flat, n, &mut idx);
        out[centre_flat(&idx, n)] = v * scale;
    }
    NdSignal::new(grid, d, out)
}

/// Inverse of [`nd_to_spectrum`]: samples `Σ_j f̂(j) e^{2πi⟨j,x⟩/N}`.
pub fn nd_from_spectrum<T: Real>(f: &NdSignal<T>) -> Vec<Complex<T>> {
    let n = f.grid.size();
    let mut buf = vec![czero::<T>(); f.values.len()];
    let mut idx = vec![0usize; f.d];
    for (flat, slot) in buf.iter_mut().enumerate() {
        unflatten(flat, n, &mut idx);
        *slot = f.values[centre_flat(&idx, n)];
    }
    fft_nd(&mut buf, n, f.d, FftDirection::Inverse, &mut FftPlanner::new());
    buf
}

/// Centred flat index of FFT-order indices (frequency `i` or `i - N`).
fn centre_flat(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + (i + n / 2) % n)
}

/// One 1D interval sum `Σ_{η∈[lo,hi)} φ̂(ω - μη)` on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisProfile<T> {
    pub lower: i64,
    pub upper: i64,
    pub values: Vec<T>,
    /// Inclusive slot range of the nonzero values.
    pub support: Option<(usize, usize)>,
}

impl<T: Real> AxisProfile<T> {
    fn build(window: &Window<T>, mu: T, grid: FrequencyGrid, lower: i64, upper: i64) -> Self {
        let values: Vec<T> = grid
            .freqs()
            .map(|w| signed_stack_value(window, mu, lower, upper, T::from_i64_lossy(w)))
            .collect();
        let first = values.iter().position(|v| *v != T::zero());
        let last = values.iter().rposition(|v| *v != T::zero());
        Self { lower, upper, values, support: first.zip(last) }
    }
}

/// [`stack_value`] for an integer interval that may straddle zero.
fn signed_stack_value<T: Real>(window: &Window<T>, mu: T, lower: i64, upper: i64, omega: T) -> T {
    let mut acc = T::zero();
    if upper > 0 {
        acc = acc + stack_value(window, mu, lower.max(0) as u64, upper as u64, omega);
    }
    if lower < 0 {
        // η ∈ [lower, min(upper,0)) ⇔ -η ∈ (−min(upper,0), −lower]; φ̂ is even
        let hi = (-lower + 1) as u64;
        let lo = (-upper.min(0) + 1) as u64;
        acc = acc + stack_value(window, mu, lo, hi, -omega);
    }
    acc
}

#[derive(Clone, Debug, PartialEq)]
pub struct NdBand<T> {
    pub index: BoxIndex,
    /// Translates per axis, `qβ`.
    pub len: usize,
    /// `len^d` entries, row-major over `k`.
    pub coeffs: Vec<Complex<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NdCoefficients<T> {
    pub bands: Vec<NdBand<T>>,
}

impl<T: Real> NdCoefficients<T> {
    pub fn get(&self, idx: &BoxIndex, k: &[usize]) -> Option<Complex<T>> {
        let band = self.bands.iter().find(|b| &b.index == idx)?;
        band.coeffs.get(flat_index(k, band.len)?).copied()
    }

    pub fn get_mut(&mut self, idx: &BoxIndex, k: &[usize]) -> Option<&mut Complex<T>> {
        let band = self.bands.iter_mut().find(|b| &b.index == idx)?;
        let flat = flat_index(k, band.len)?;
        band.coeffs.get_mut(flat)
    }

    pub fn energy(&self) -> T {
        self.bands.iter().flat_map(|b| &b.coeffs).map(|c| c.norm_sqr()).sum()
    }

    pub fn len(&self) -> usize {
        self.bands.iter().map(|b| b.coeffs.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = self.clone();
        out.bands.iter_mut().flat_map(|b| b.coeffs.iter_mut()).for_each(|c| *c = *c * s);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.bands.iter_mut().zip(&other.bands) {
            a.coeffs.iter_mut().zip(&b.coeffs).for_each(|(x, y)| *x = *x + y);
        }
        out
    }
}

fn flat_index(k: &[usize], len: usize) -> Option<usize> {
    k.iter().try_fold(0usize, |acc, &x| (x < len).then_some(acc * len + x))
}

/// `Ω = ν^d Φ / Σ Φ²` for every box, dense over the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NdConjugateFilter<T> {
    pub nu_d: T,
    pub bands: Vec<(BoxIndex, Vec<T>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NdReconstruction<T> {
    pub signal: NdSignal<T>,
    pub rel_err: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NdWalnutOutput<T> {
    pub spectrum: NdSignal<T>,
    pub dropped_norm: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LevelDecay<T> {
    pub p: usize,
    /// `max_{ℓ,ω} Φ_{p;ℓ}(ω) (1 + dist(ω, μX_{p,ℓ}))^{order-d}`.
    pub constant: T,
}

/// Box stack given by per-axis factors.
#[derive(Clone, Debug)]
struct FrameBox<T> {
    geometry: NdBox,
    axes: Vec<usize>,
    _scalar: std::marker::PhantomData<T>,
}

#[derive(Clone, Copy)]
enum Profile<'a, T> {
    Stack,
    Dense(&'a [T]),
}

#[derive(Clone, Debug)]
pub struct NdFrameSpec<T> {
    tiling: NdTiling,
    window: Window<T>,
    mu: T,
    q: usize,
    grid: FrequencyGrid,
    /// Distinct per-axis interval sums, shared between boxes.
    profiles: Vec<AxisProfile<T>>,
    boxes: Vec<FrameBox<T>>,
    walnut_k_max: usize,
}

impl<T: Real> NdFrameSpec<T> {
    /// Tiles up to the first level whose outer boxes vanish on the grid.
    pub fn new(d: usize, window: &Window<T>, mu: T, q: usize, n: usize) -> Result<Self> {
        let grid = FrequencyGrid::new(n)?;
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if n > grid_limit(d) {
            return Err(Error::GridTooLarge { n, limit: grid_limit(d) });
        }
        if q == 0 {
            return Err(Error::InvalidParameter("q must be at least 1".into()));
        }
        if !(mu > T::zero()) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
        }
        // outer intervals [β, 2β) vanish once μβ - reach > N/2
        let edge = (T::from_i64_lossy(grid.half()) + window.reach()) / mu;
        let mut p_max = 1;
        while T::from_u64(dyadic_beta(p_max + 1)).unwrap() <= edge {
            p_max += 1;
        }
        let tiling = NdTiling::build(d, p_max)?;

        let mut keys: HashMap<(i64, i64), usize> = HashMap::new();
        let mut wanted = Vec::new();
        for b in tiling.boxes() {
            for s in 0..d {
                let r = b.axis_range(s);
                if !keys.contains_key(&r) {
                    keys.insert(r, wanted.len());
                    wanted.push(r);
                }
            }
        }
        let profiles: Vec<AxisProfile<T>> =
            wanted.par_iter().map(|&(lo, hi)| AxisProfile::build(window, mu, grid, lo, hi)).collect();
        let boxes = tiling
            .boxes()
            .iter()
            .map(|b| FrameBox { geometry: b.clone(), axes: (0..d).map(|s| keys[&b.axis_range(s)]).collect(), _scalar: std::marker::PhantomData })
            .filter(|b| b.axes.iter().all(|&a| profiles[a].support.is_some()))
            .collect();
        let walnut_k_max = n.div_ceil(q);
        Ok(Self { tiling, window: window.clone(), mu, q, grid, profiles, boxes, walnut_k_max })
    }

    pub fn with_walnut_k_max(mut self, k_max: usize) -> Self {
        self.walnut_k_max = k_max;
        self
    }

    pub fn walnut_k_max(&self) -> usize {
        self.walnut_k_max
    }

    pub fn d(&self) -> usize {
        self.tiling.d()
    }

    pub fn tiling(&self) -> &NdTiling {
        &self.tiling
    }

    pub fn window(&self) -> &Window<T> {
        &self.window
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    /// Boxes whose stack is nonzero on the grid.
    pub fn boxes(&self) -> Vec<&NdBox> {
        self.boxes.iter().map(|b| &b.geometry).collect()
    }

    pub fn k_count(&self, idx: &BoxIndex) -> Result<usize> {
        Ok(self.q * self.frame_box(idx)?.geometry.beta as usize)
    }

    pub fn is_painless(&self) -> bool {
        self.window.support_radius().is_some_and(|l| T::from_usize_lossy(self.q) > T::lit(2.0) * l + self.mu)
    }

    fn frame_box(&self, idx: &BoxIndex) -> Result<&FrameBox<T>> {
        self.tiling.find(idx)?;
        self.boxes
            .iter()
            .find(|b| b.geometry.p == idx.p && b.geometry.ell == idx.ell)
            .ok_or_else(|| Error::IndexOutOfRange(format!("box {idx:?} vanishes on the grid")))
    }

    fn axis(&self, b: &FrameBox<T>, s: usize) -> &AxisProfile<T> {
        &self.profiles[b.axes[s]]
    }

    pub fn axis_profiles(&self, idx: &BoxIndex) -> Result<Vec<&AxisProfile<T>>> {
        let b = self.frame_box(idx)?;
        Ok((0..self.d()).map(|s| self.axis(b, s)).collect())
    }

    fn support_ranges(&self, b: &FrameBox<T>) -> Vec<(usize, usize)> {
        (0..self.d()).map(|s| self.axis(b, s).support.unwrap()).collect()
    }

    fn stack_at(&self, b: &FrameBox<T>, slots: &[usize]) -> T {
        slots.iter().enumerate().fold(T::one(), |acc, (s, &i)| acc * self.axis(b, s).values[i])
    }

    fn flat(&self, slots: &[usize]) -> usize {
        let n = self.grid.size();
        slots.iter().fold(0, |acc, &i| acc * n + i)
    }

    /// `Φ_{p;ℓ}` over the whole grid.
    pub fn stack(&self, idx: &BoxIndex) -> Result<Vec<T>> {
        let b = self.frame_box(idx)?;
        let mut out = vec![T::zero(); self.grid.size().pow(self.d() as u32)];
        for_each_slot(&self.support_ranges(b), |slots| out[self.flat(slots)] = self.stack_at(b, slots));
        Ok(out)
    }

    /// `H₀ = Σ_{p,ℓ} Φ_{p;ℓ}²` over the grid.
    pub fn h0(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.grid.size().pow(self.d() as u32)];
        for b in &self.boxes {
            for_each_slot(&self.support_ranges(b), |slots| {
                let v = self.stack_at(b, slots);
                let f = self.flat(slots);
                out[f] = out[f] + v * v;
            });
        }
        out
    }

    fn check_signal(&self, f: &NdSignal<T>) -> Result<()> {
        if f.grid != self.grid || f.d != self.d() {
            return Err(Error::LengthMismatch { expected: self.grid.size().pow(self.d() as u32), found: f.values.len() });
        }
        Ok(())
    }

    fn beta_scale(&self, b: &FrameBox<T>) -> T {
        T::one() / T::from_u64(b.geometry.beta).unwrap().powi(self.d() as i32).sqrt()
    }

    pub fn frame_element(&self, idx: &BoxIndex, k: &[usize]) -> Result<NdSignal<T>> {
        let b = self.frame_box(idx)?;
        let len = self.q * b.geometry.beta as usize;
        if k.len() != self.d() || k.iter().any(|&x| x >= len) {
            return Err(Error::IndexOutOfRange(format!("translate {k:?} outside [0, {len})^{}", self.d())));
        }
        let norm = self.beta_scale(b);
        let half = self.grid.half();
        let mut out = NdSignal::zeros(self.grid, self.d());
        for_each_slot(&self.support_ranges(b), |slots| {
            let dot: i64 = slots.iter().zip(k).map(|(&s, &kk)| (s as i64 - half) * kk as i64).sum();
            out.values[self.flat(slots)] = unit_phase::<T>(-dot, len as i64) * (self.stack_at(b, slots) * norm);
        });
        Ok(out)
    }

    fn coefficient_budget(&self) -> Result<()> {
        let total: usize = self.boxes.iter().map(|b| (self.q * b.geometry.beta as usize).pow(self.d() as u32)).sum();
        if total > COEFFICIENT_LIMIT {
            return Err(Error::InvalidParameter(format!("{total} frame coefficients exceed the limit {COEFFICIENT_LIMIT}")));
        }
        Ok(())
    }

    fn profile_value(&self, b: &FrameBox<T>, profile: Profile<'_, T>, slots: &[usize]) -> T {
        match profile {
            Profile::Stack => self.stack_at(b, slots),
            Profile::Dense(v) => v[self.flat(slots)],
        }
    }

    fn analyze_with(&self, f: &NdSignal<T>, profiles: &[Profile<'_, T>]) -> NdCoefficients<T> {
        let d = self.d();
        let half = self.grid.half();
        let bands = self
            .boxes
            .par_iter()
            .zip(profiles.par_iter())
            .map_init(FftPlanner::<T>::new, |planner, (b, &profile)| {
                let len = self.q * b.geometry.beta as usize;
                let mut buf = vec![czero::<T>(); len.pow(d as u32)];
                for_each_slot(&self.support_ranges(b), |slots| {
                    let g = self.profile_value(b, profile, slots);
                    if g != T::zero() {
                        let r = slots.iter().fold(0, |acc, &s| acc * len + (s as i64 - half).rem_euclid(len as i64) as usize);
                        buf[r] = buf[r] + f.values[self.flat(slots)] * g;
                    }
                });
                fft_nd(&mut buf, len, d, FftDirection::Inverse, planner);
                let norm = self.beta_scale(b);
                buf.iter_mut().for_each(|c| *c = *c * norm);
                NdBand { index: b.geometry.index(), len, coeffs: buf }
            })
            .collect();
        NdCoefficients { bands }
    }

    fn synthesize_with(&self, c: &NdCoefficients<T>, profiles: &[Profile<'_, T>]) -> Result<NdSignal<T>> {
        let aligned = c.bands.len() == self.boxes.len()
            && c.bands.iter().zip(&self.boxes).all(|(band, b)| {
                band.index.p == b.geometry.p && band.index.ell == b.geometry.ell && band.len == self.q * b.geometry.beta as usize
            });
        if !aligned {
            return Err(Error::IndexOutOfRange("coefficients do not match the frame layout".into()));
        }
        let d = self.d();
        let half = self.grid.half();
        let total = self.grid.size().pow(d as u32);
        let items: Vec<_> = c.bands.iter().zip(self.boxes.iter()).zip(profiles.iter()).collect();
        let out = ordered_fold(
            &items,
            vec![czero::<T>(); total],
            |&((band, b), &profile)| {
                let len = band.len;
                let mut buf = band.coeffs.clone();
                fft_nd(&mut buf, len, d, FftDirection::Forward, &mut FftPlanner::<T>::new());
                let norm = self.beta_scale(b);
                let mut part = Vec::new();
                for_each_slot(&self.support_ranges(b), |slots| {
                    let h = self.profile_value(b, profile, slots);
                    if h != T::zero() {
                        let r = slots.iter().fold(0, |acc, &s| acc * len + (s as i64 - half).rem_euclid(len as i64) as usize);
                        part.push((self.flat(slots), buf[r] * (h * norm)));
                    }
                });
                part
            },
            |acc, part| {
                for (i, v) in part {
                    acc[i] = acc[i] + v;
                }
            },
        );
        NdSignal::new(self.grid, d, out)
    }

    pub fn analyze(&self, f: &NdSignal<T>) -> Result<NdCoefficients<T>> {
        self.check_signal(f)?;
        self.coefficient_budget()?;
        Ok(self.analyze_with(f, &vec![Profile::Stack; self.boxes.len()]))
    }

    pub fn analyze_direct(&self, f: &NdSignal<T>) -> Result<NdCoefficients<T>> {
        self.check_signal(f)?;
        self.coefficient_budget()?;
        let d = self.d();
        let bands = self
            .boxes
            .par_iter()
            .map(|b| {
                let idx = b.geometry.index();
                let len = self.q * b.geometry.beta as usize;
                let mut k = vec![0usize; d];
                let coeffs = (0..len.pow(d as u32))
                    .map(|flat| {
                        unflatten(flat, len, &mut k);
                        Ok(f.inner(&self.frame_element(&idx, &k)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(NdBand { index: idx, len, coeffs })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NdCoefficients { bands })
    }

    /// Weighted sum of the analysis family, or of the conjugate family when a
    /// filter is given.
    pub fn synthesize(&self, c: &NdCoefficients<T>, filter: Option<&NdConjugateFilter<T>>) -> Result<NdSignal<T>> {
        match filter {
            None => self.synthesize_with(c, &vec![Profile::Stack; self.boxes.len()]),
            Some(filter) => self.synthesize_with(c, &self.filter_profiles(filter)?),
        }
    }

    fn filter_profiles<'a>(&self, filter: &'a NdConjugateFilter<T>) -> Result<Vec<Profile<'a, T>>> {
        let total = self.grid.size().pow(self.d() as u32);
        let aligned = filter.bands.len() == self.boxes.len()
            && filter.bands.iter().zip(&self.boxes).all(|((i, v), b)| i.p == b.geometry.p && i.ell == b.geometry.ell && v.len() == total);
        if !aligned {
            return Err(Error::InvalidParameter("conjugate filter was built for a different frame".into()));
        }
        Ok(filter.bands.iter().map(|(_, v)| Profile::Dense(v)).collect())
    }

    pub fn frame_operator_apply(&self, f: &NdSignal<T>) -> Result<NdSignal<T>> {
        let c = self.analyze(f)?;
        self.synthesize(&c, None)
    }

    pub fn walnut_apply(&self, f: &NdSignal<T>) -> Result<NdWalnutOutput<T>> {
        self.walnut_apply_boxes(f, |_| true)
    }

    /// Walnut sum over the selected boxes only; shifts `kqβ` per axis with
    /// `|k_s| ≤ walnut_k_max`.
    pub fn walnut_apply_boxes(&self, f: &NdSignal<T>, select: impl Fn(&NdBox) -> bool + Sync) -> Result<NdWalnutOutput<T>> {
        self.check_signal(f)?;
        let d = self.d();
        let total = self.grid.size().pow(d as u32);
        let k_max = self.walnut_k_max as i64;
        let qd = T::from_usize_lossy(self.q).powi(d as i32);
        let chosen: Vec<_> = self.boxes.iter().filter(|b| select(&b.geometry)).collect();
        let (kept, dropped) = ordered_fold(
            &chosen,
            (vec![czero::<T>(); total], vec![czero::<T>(); total]),
            |&b| {
                let mut kept = vec![czero::<T>(); total];
                let mut dropped = vec![czero::<T>(); total];
                let shift = (self.q * b.geometry.beta as usize) as i64;
                let ranges = self.support_ranges(b);
                // per axis and slot: (m, shifted slot, Φ factor) landing in the support
                let partners: Vec<Vec<Vec<(i64, usize, T)>>> = (0..d)
                    .map(|s| {
                        let (lo, hi) = ranges[s];
                        let axis = self.axis(b, s);
                        (0..self.grid.size())
                            .map(|w| {
                                if w < lo || w > hi {
                                    return Vec::new();
                                }
                                let first = (lo as i64 - w as i64).div_euclid(shift)
                                    + i64::from((lo as i64 - w as i64).rem_euclid(shift) != 0);
                                (first..)
                                    .map(|m| (m, w as i64 + m * shift))
                                    .take_while(|&(_, t)| t <= hi as i64)
                                    .map(|(m, t)| (m, t as usize, axis.values[t as usize]))
                                    .collect()
                            })
                            .collect()
                    })
                    .collect();
                for_each_slot(&ranges, |slots| {
                    let lists: Vec<&Vec<(i64, usize, T)>> = (0..d).map(|s| &partners[s][slots[s]]).collect();
                    let mut acc_kept = czero::<T>();
                    let mut acc_drop = czero::<T>();
                    let bounds: Vec<(usize, usize)> = lists.iter().map(|l| (0, l.len().saturating_sub(1))).collect();
                    if lists.iter().any(|l| l.is_empty()) {
                        return;
                    }
                    let mut target = vec![0usize; d];
                    for_each_slot(&bounds, |choice| {
                        let mut phi = T::one();
                        let mut inside = true;
                        for s in 0..d {
                            let (m, t, v) = lists[s][choice[s]];
                            phi = phi * v;
                            target[s] = t;
                            inside &= m.abs() <= k_max;
                        }
                        let term = f.values[self.flat(&target)] * phi;
                        if inside {
                            acc_kept = acc_kept + term;
                        } else {
                            acc_drop = acc_drop + term;
                        }
                    });
                    let w = self.stack_at(b, slots) * qd;
                    let i = self.flat(slots);
                    kept[i] = acc_kept * w;
                    dropped[i] = acc_drop * w;
                });
                (kept, dropped)
            },
            |(a, b), (c, e)| {
                a.iter_mut().zip(c).for_each(|(x, y)| *x = *x + y);
                b.iter_mut().zip(e).for_each(|(x, y)| *x = *x + y);
            },
        );
        let dropped_norm = dropped.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
        Ok(NdWalnutOutput { spectrum: NdSignal::new(self.grid, d, kept)?, dropped_norm })
    }

    /// As in 1D with `ν^{-d}`; the per-shift maximum factors over axes.
    pub fn walnut_bounds(&self) -> WalnutBoundReport<T> {
        let h0 = self.h0();
        let h0_inf = h0.iter().copied().fold(T::infinity(), Float::min);
        let h0_sup = h0.iter().copied().fold(T::neg_infinity(), Float::max);
        let k_max = self.walnut_k_max as i64;
        let h_tail: T = self
            .boxes
            .par_iter()
            .map(|b| {
                let shift = (self.q * b.geometry.beta as usize) as i64;
                let mut zero = Vec::with_capacity(self.d());
                let mut off = Vec::with_capacity(self.d());
                for s in 0..self.d() {
                    let axis = self.axis(b, s);
                    let (lo, hi) = axis.support.unwrap();
                    let a = |m: i64| -> T {
                        let dlt = m * shift;
                        (lo..=hi)
                            .filter_map(|w| {
                                let t = w as i64 - dlt;
                                (t >= lo as i64 && t <= hi as i64).then(|| Float::abs(axis.values[t as usize] * axis.values[w]))
                            })
                            .fold(T::zero(), Float::max)
                    };
                    let reach = (((hi - lo) as i64) / shift).min(k_max);
                    zero.push(a(0));
                    off.push((1..=reach).map(|m| a(m) + a(-m)).fold(T::zero(), |x, y| x + y));
                }
                // Σ_{m≠0} Π_s a_s(m_s), expanded over the nonempty sets of axes with m_s ≠ 0
                (1..1usize << self.d())
                    .map(|mask| {
                        (0..self.d()).fold(T::one(), |acc, s| acc * if mask >> s & 1 == 1 { off[s] } else { zero[s] })
                    })
                    .fold(T::zero(), |x, y| x + y)
            })
            .collect::<Vec<T>>()
            .into_iter()
            .sum();
        let qd = T::from_usize_lossy(self.q).powi(self.d() as i32);
        WalnutBoundReport {
            h0_inf,
            h0_sup,
            h_tail,
            k_max: self.walnut_k_max,
            a: qd * Float::max(h0_inf - h_tail, T::zero()),
            b: qd * (h0_sup + h_tail),
            nu_mu_below_one: self.mu < T::from_usize_lossy(self.q),
        }
    }

    /// `ln h_tail` from log-domain stacks, resolvable after `h_tail` underflows.
    pub fn ln_h_tail(&self) -> T {
        let n = self.grid.size() as i64;
        let d = self.d();
        let k_max = self.walnut_k_max as i64;
        let ln_axis: HashMap<(i64, i64), Vec<T>> = self
            .profiles
            .par_iter()
            .map(|a| {
                let v = self
                    .grid
                    .freqs()
                    .map(|w| ln_interval_sum(&self.window, self.mu, a.lower, a.upper, T::from_i64_lossy(w)))
                    .collect();
                ((a.lower, a.upper), v)
            })
            .collect();
        let terms: Vec<T> = self
            .boxes
            .par_iter()
            .flat_map_iter(|b| {
                let shift = (self.q * b.geometry.beta as usize) as i64;
                let reach = ((n - 1) / shift).min(k_max);
                // ln max_ω g_s(ω - m·shift) g_s(ω) for m ∈ [-reach, reach]
                let per_axis: Vec<Vec<T>> = (0..d)
                    .map(|s| {
                        let a = self.axis(b, s);
                        let ln = &ln_axis[&(a.lower, a.upper)];
                        (-reach..=reach)
                            .map(|m| {
                                let dlt = m * shift;
                                (0..n)
                                    .filter(|&w| (0..n).contains(&(w - dlt)))
                                    .map(|w| ln[(w - dlt) as usize] + ln[w as usize])
                                    .fold(T::neg_infinity(), Float::max)
                            })
                            .collect()
                    })
                    .collect();
                let width = (2 * reach + 1) as usize;
                let mut out = Vec::new();
                let mut m = vec![0usize; d];
                for flat in 0..width.pow(d as u32) {
                    unflatten(flat, width, &mut m);
                    if m.iter().all(|&x| x == reach as usize) {
                        continue;
                    }
                    out.push(m.iter().enumerate().fold(T::zero(), |acc, (s, &i)| acc + per_axis[s][i]));
                }
                out
            })
            .collect();
        log_sum_exp(&terms)
    }

    pub fn frame_bounds_eigen(&self) -> Result<FrameBounds<T>>
    where
        T: RealField,
    {
        let total = self.grid.size().pow(self.d() as u32);
        if total > EIGEN_GRID_LIMIT {
            return Err(Error::GridTooLarge { n: total, limit: EIGEN_GRID_LIMIT });
        }
        let cols = (0..total)
            .into_par_iter()
            .map(|j| {
                let mut e = NdSignal::zeros(self.grid, self.d());
                e.values[j] = Complex::new(T::one(), T::zero());
                self.frame_operator_apply(&e).map(NdSignal::into_values)
            })
            .collect::<Result<Vec<_>>>()?;
        let m = DMatrix::from_fn(total, total, |r, c| cols[c][r]);
        let m = (m.adjoint() + &m) * Complex::new(T::lit(0.5), T::zero());
        let eig = m.symmetric_eigenvalues();
        let lo = eig.iter().copied().fold(T::infinity(), Float::min);
        let hi = eig.iter().copied().fold(T::neg_infinity(), Float::max);
        Ok(FrameBounds { a_lower: Float::max(lo, T::zero()), b_upper: hi, method: BoundMethod::EigenExact })
    }

    pub fn conjugate_filter(&self) -> Result<NdConjugateFilter<T>> {
        let h0 = self.h0();
        let floor = T::lit(FILTER_FLOOR);
        let bad: Vec<usize> = h0.iter().enumerate().filter(|(_, v)| **v <= floor).map(|(i, _)| i).collect();
        if !bad.is_empty() {
            // report the first axis-0 frequencies of the offending points
            let n = self.grid.size();
            let inner = n.pow(self.d() as u32 - 1);
            let mut freqs: Vec<i64> = bad.iter().map(|&i| self.grid.freq_at(i / inner)).collect();
            freqs.dedup();
            return Err(Error::NonInvertible { frequencies: freqs });
        }
        let nu_d = T::one() / T::from_usize_lossy(self.q).powi(self.d() as i32);
        let total = h0.len();
        let bands = self
            .boxes
            .par_iter()
            .map(|b| {
                let mut v = vec![T::zero(); total];
                for_each_slot(&self.support_ranges(b), |slots| {
                    let i = self.flat(slots);
                    v[i] = nu_d * self.stack_at(b, slots) / h0[i];
                });
                (b.geometry.index(), v)
            })
            .collect();
        Ok(NdConjugateFilter { nu_d, bands })
    }

    /// `max_ω |Σ Ω Φ - ν^d|`.
    pub fn partition_of_unity_error(&self, filter: &NdConjugateFilter<T>) -> Result<T> {
        let total = self.grid.size().pow(self.d() as u32);
        let mut sum = vec![T::zero(); total];
        for (idx, omega) in &filter.bands {
            let phi = self.stack(idx)?;
            for i in 0..total {
                sum[i] = sum[i] + omega[i] * phi[i];
            }
        }
        Ok(sum.into_iter().map(|v| Float::abs(v - filter.nu_d)).fold(T::zero(), Float::max))
    }

    pub fn reconstruct(&self, f: &NdSignal<T>) -> Result<NdReconstruction<T>> {
        self.check_signal(f)?;
        self.coefficient_budget()?;
        let filter = self.conjugate_filter()?;
        let c = self.analyze_with(f, &self.filter_profiles(&filter)?);
        let signal = self.synthesize(&c, None)?;
        let rel_err = signal.relative_distance(f);
        Ok(NdReconstruction { signal, rel_err })
    }

    /// Per level, the largest `Φ_{p;ℓ}(ω)(1 + dist(ω, μX_{p,ℓ}))^{order-d}`
    /// with Euclidean distance to the box hull.
    pub fn decay_constants(&self, order: T) -> Vec<LevelDecay<T>> {
        let d = self.d();
        let expo = order - T::from_usize_lossy(d);
        let half = self.grid.half();
        let mut out: Vec<LevelDecay<T>> = Vec::new();
        for b in &self.boxes {
            let mut best = T::zero();
            for_each_slot(&self.support_ranges(b), |slots| {
                let mut dist2 = T::zero();
                for (s, &i) in slots.iter().enumerate() {
                    let (lo, hi) = b.geometry.axis_range(s);
                    let w = T::from_i64_lossy(i as i64 - half);
                    let a = self.mu * T::from_i64_lossy(lo);
                    let c = self.mu * T::from_i64_lossy(hi - 1);
                    let gap = if w < a { a - w } else if w > c { w - c } else { T::zero() };
                    dist2 = dist2 + gap * gap;
                }
                best = Float::max(best, self.stack_at(b, slots) * (T::one() + dist2.sqrt()).powf(expo));
            });
            match out.iter_mut().find(|l| l.p == b.geometry.p) {
                Some(l) => l.constant = Float::max(l.constant, best),
                None => out.push(LevelDecay { p: b.geometry.p, constant: best }),
            }
        }
        out
    }
}

/// Odometer over inclusive per-axis ranges, last axis fastest.
fn for_each_slot(ranges: &[(usize, usize)], mut f: impl FnMut(&[usize])) {
    if ranges.iter().any(|&(lo, hi)| lo > hi) {
        return;
    }
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&idx);
        let mut s = ranges.len();
        loop {
            if s == 0 {
                return;
            }
            s -= 1;
            idx[s] += 1;
            if idx[s] <= ranges[s].1 {
                break;
            }
            idx[s] = ranges[s].0;
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::frame::FrameSpec;
    use crate::partition::Alpha;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_nd(n: usize, d: usize, seed: u64) -> NdSignal<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        NdSignal::from_fn(FrequencyGrid::new(n).unwrap(), d, |_| {
            Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn painless(d: usize, n: usize) -> NdFrameSpec<f64> {
        NdFrameSpec::new(d, &Window::truncated_gaussian(0.1).unwrap(), 0.5, 4, n).unwrap()
    }

    #[test]
    fn box_counts() {
        for (d, count) in [(1, 2), (2, 12), (3, 56)] {
            let t = NdTiling::build(d, 4).unwrap();
            for p in 1..=4 {
                assert_eq!(t.boxes_at(p).count(), count);
            }
            assert_eq!(t.boxes_at(0).count(), 1);
        }
        let t = NdTiling::build(1, 3).unwrap();
        let ranges: Vec<_> = t.boxes_at(3).map(|b| b.axis_range(0)).collect();
        assert_eq!(ranges, vec![(-8, -4), (4, 8)]);
    }

    #[test]
    fn lattice_points_examples() {
        let t = NdTiling::build(2, 5).unwrap();
        let pts = t.lattice_points(&BoxIndex::new(3, vec![1, 1])).unwrap();
        assert_eq!(pts.len(), 16);
        assert!(pts.iter().all(|p| (4..8).contains(&p[0]) && (4..8).contains(&p[1])));
        for b in t.boxes_at(1) {
            assert_eq!(t.lattice_points(&b.index()).unwrap().len(), 1);
        }
        assert!(matches!(t.lattice_points(&BoxIndex::new(3, vec![0, 0])), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(t.lattice_points(&BoxIndex::new(3, vec![0, -1])), Err(Error::IndexOutOfRange(_))));
        assert_eq!(t.lattice_points(&BoxIndex::new(0, vec![0, 0])).unwrap().len(), 4);
    }

    #[test]
    fn lattice_partition_is_exact() {
        let t = NdTiling::build(2, 5).unwrap();
        let mut seen = HashSet::new();
        for b in t.boxes() {
            let pts = t.lattice_points(&b.index()).unwrap();
            assert_eq!(pts.len() as u64, if b.p == 0 { 4 } else { b.beta * b.beta });
            for p in pts {
                assert!(seen.insert(p), "duplicate point");
            }
        }
        let edge = 32i64;
        let expected: HashSet<Vec<i64>> =
            (-edge..edge).flat_map(|x| (-edge..edge).map(move |y| vec![x, y])).collect();
        assert_eq!(seen, expected);
        for p in expected.iter().step_by(37) {
            let b = t.locate(p).unwrap();
            assert!(b.contains(p));
        }
        assert!(t.locate(&[32, 0]).is_none());
    }

    #[test]
    fn nd_fft_round_trip() {
        let grid = FrequencyGrid::new(16).unwrap();
        let x = random_nd(16, 2, 1).into_values();
        let f = nd_to_spectrum(&x, grid, 2).unwrap();
        let back = nd_from_spectrum(&f);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
        // a single mode lands on its own frequency
        let mode: Vec<Complex<f64>> = (0..256)
            .map(|i| Complex::from_polar(1.0, std::f64::consts::TAU * (3.0 * (i / 16) as f64 - 5.0 * (i % 16) as f64) / 16.0))
            .collect();
        let f = nd_to_spectrum(&mode, grid, 2).unwrap();
        assert!((f.at(&[3, -5]) - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert!(f.energy() - 1.0 < 1e-12);
    }

    #[test]
    fn stack_factors_into_direct_double_sum() {
        let s = NdFrameSpec::<f64>::new(2, &Window::gaussian(), 0.5, 4, 32).unwrap();
        let idx = BoxIndex::new(3, vec![-2, 0]);
        let stack = s.stack(&idx).unwrap();
        let w = Window::<f64>::gaussian();
        let grid = s.grid();
        for (i, w1) in grid.freqs().enumerate().step_by(3) {
            for (j, w2) in grid.freqs().enumerate().step_by(5) {
                let mut direct = 0.0;
                for e1 in -8..-4 {
                    for e2 in 0..4 {
                        direct += w.freq(w1 as f64 - 0.5 * e1 as f64) * w.freq(w2 as f64 - 0.5 * e2 as f64);
                    }
                }
                assert!((stack[i * 32 + j] - direct).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn compact_stack_diameter() {
        let s = painless(2, 64);
        for b in s.boxes() {
            let stack = s.stack(&b.index()).unwrap();
            let nz: Vec<usize> = (0..stack.len()).filter(|&i| stack[i] != 0.0).collect();
            let (rows, cols): (Vec<usize>, Vec<usize>) = nz.iter().map(|i| (i / 64, i % 64)).unzip();
            let span = |v: &[usize]| v.iter().max().unwrap() - v.iter().min().unwrap();
            let diam = ((span(&rows).pow(2) + span(&cols).pow(2)) as f64).sqrt();
            // C_{L,μ} = √d (2L + 2μ + 1) with L = 1.1, μ = 1/2
            assert!(diam <= 2f64.sqrt() * (2.0 * 1.1 + 2.0) * b.side as f64, "{b:?}");
        }
    }

    #[test]
    fn element_examples() {
        let s = NdFrameSpec::<f64>::new(2, &Window::gaussian(), 0.5, 2, 64).unwrap();
        let idx = BoxIndex::new(3, vec![1, 1]);
        let e0 = s.frame_element(&idx, &[0, 0]).unwrap();
        let stack = s.stack(&idx).unwrap();
        for (c, v) in e0.values().iter().zip(&stack) {
            assert_eq!(*c, Complex::new(v / 4.0, 0.0));
        }
        let e = s.frame_element(&idx, &[1, 2]).unwrap();
        let expect: f64 = stack.iter().map(|v| v * v).sum::<f64>() / 16.0;
        assert!((e.energy() - expect).abs() < 1e-12 * expect);
        assert!(s.frame_element(&idx, &[16, 0]).is_err());
        assert!(s.frame_element(&BoxIndex::new(3, vec![0, 0]), &[0, 0]).is_err());
    }

    #[test]
    fn element_matches_space_domain_construction() {
        let (n, q) = (64usize, 2usize);
        let w = Window::<f64>::gaussian();
        let s = NdFrameSpec::new(2, &w, 0.5, q, n).unwrap();
        let idx = BoxIndex::new(3, vec![1, 1]);
        let k = [1usize, 2];
        let beta = 4.0;
        // separable: product of periodized 1D factors Σ_η e^{2πiμη(x-s)} φ(x-s)
        let factor = |x: f64, kk: usize| {
            let shift = kk as f64 / (q as f64 * beta);
            let mut acc = Complex::new(0.0, 0.0);
            for wrap in -8..=8 {
                let u = x + wrap as f64 - shift;
                let env = w.time(u).unwrap();
                for eta in 4..8 {
                    acc += Complex::from_polar(env, std::f64::consts::TAU * 0.5 * eta as f64 * u);
                }
            }
            acc
        };
        let f0: Vec<_> = (0..n).map(|i| factor(i as f64 / n as f64, k[0])).collect();
        let f1: Vec<_> = (0..n).map(|i| factor(i as f64 / n as f64, k[1])).collect();
        let samples: Vec<Complex<f64>> = (0..n * n).map(|i| f0[i / n] * f1[i % n] / beta).collect();
        let got = nd_to_spectrum(&samples, s.grid(), 2).unwrap();
        let expect = s.frame_element(&idx, &k).unwrap();
        assert!(got.relative_distance(&expect) < 1e-12, "{}", got.relative_distance(&expect));
    }

    #[test]
    fn fast_analysis_matches_direct() {
        let s = NdFrameSpec::<f64>::new(2, &Window::truncated_gaussian(0.5).unwrap(), 1.0, 2, 16).unwrap();
        let f = random_nd(16, 2, 3);
        let a = s.analyze(&f).unwrap();
        let b = s.analyze_direct(&f).unwrap();
        let diff = a
            .bands
            .iter()
            .zip(&b.bands)
            .flat_map(|(x, y)| x.coeffs.iter().zip(&y.coeffs).map(|(u, v)| (u - v).norm()))
            .fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
        let zero = s.analyze(&NdSignal::zeros(s.grid(), 2)).unwrap();
        assert_eq!(zero.energy(), 0.0);
    }

    #[test]
    fn operator_positive_and_walnut_equivalent() {
        let s = NdFrameSpec::<f64>::new(2, &Window::gaussian(), 0.5, 4, 32).unwrap();
        for seed in 0..2 {
            let f = random_nd(32, 2, seed);
            let sf = s.frame_operator_apply(&f).unwrap();
            let ip = sf.inner(&f);
            assert!(ip.re > 0.0 && ip.im.abs() < 1e-10 * ip.re);
            let w = s.walnut_apply(&f).unwrap();
            assert!(w.spectrum.relative_distance(&sf) < 1e-10);
            assert_eq!(w.dropped_norm, 0.0);
        }
    }

    #[test]
    fn painless_is_diagonal() {
        let s = painless(2, 32);
        assert!(s.is_painless());
        assert_eq!(s.walnut_bounds().h_tail, 0.0);
        let h0 = s.h0();
        let f = random_nd(32, 2, 4);
        let w = s.clone().with_walnut_k_max(0).walnut_apply(&f).unwrap();
        let sf = s.frame_operator_apply(&f).unwrap();
        assert!(w.spectrum.relative_distance(&sf) < 1e-13);
        for (i, (a, b)) in sf.values().iter().zip(f.values()).enumerate() {
            assert!((a / b - Complex::new(16.0 * h0[i], 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn one_dimensional_positive_boxes_match_frame1d() {
        let (n, q) = (128, 4);
        let nd = NdFrameSpec::<f64>::new(1, &Window::gaussian(), 0.5, q, n).unwrap();
        let one = FrameSpec::new(Alpha::new(1.0).unwrap(), &Window::gaussian(), 0.5, q, n).unwrap();
        for b in nd.boxes().into_iter().filter(|b| b.p >= 1 && b.ell == vec![1]) {
            let stack = nd.stack(&b.index()).unwrap();
            assert_eq!(stack, one.stack().band(b.p as i64).unwrap().values);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let vals: Vec<Complex<f64>> = (0..n).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let f_nd = NdSignal::new(nd.grid(), 1, vals.clone()).unwrap();
        let f_1d = crate::spectral::SpectralSignal::new(one.grid(), vals).unwrap();
        let positive: Vec<i64> = one.p_range().into_iter().filter(|&p| p >= 1).collect();
        let a = nd.walnut_apply_boxes(&f_nd, |b| b.p >= 1 && b.ell == vec![1]).unwrap().spectrum;
        let b = one.walnut_apply_bands(&f_1d, None, &positive).unwrap().spectrum;
        for (x, y) in a.values().iter().zip(b.coeffs()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn bounds_and_tail() {
        let s = NdFrameSpec::<f64>::new(2, &Window::gaussian(), 0.5, 8, 64).unwrap();
        let r = s.walnut_bounds();
        assert!(r.a > 0.0);
        let specs: Vec<_> =
            [4, 8, 16, 32].iter().map(|&q| NdFrameSpec::<f64>::new(2, &Window::gaussian(), 0.5, q, 64).unwrap()).collect();
        let tails: Vec<f64> = specs.iter().map(|s| s.walnut_bounds().h_tail).collect();
        assert!(tails[0] > tails[1] && tails[1] >= tails[2]);
        let ln: Vec<f64> = specs.iter().map(|s| s.ln_h_tail()).collect();
        assert!(ln.windows(2).all(|w| w[1] < w[0]), "{ln:?}");
        assert!((ln[0] - tails[0].ln()).abs() < 1e-6);
    }

    #[test]
    fn eigen_sandwich_small_grid() {
        let s = NdFrameSpec::<f64>::new(2, &Window::gaussian(), 0.5, 8, 16).unwrap();
        let r = s.walnut_bounds();
        let e = s.frame_bounds_eigen().unwrap();
        assert!(e.a_lower > 0.0);
        assert!(r.a <= e.a_lower + 1e-9 && e.b_upper <= r.b + 1e-9);
        assert!(matches!(painless(2, 64).frame_bounds_eigen(), Err(Error::GridTooLarge { .. })));
    }

    #[test]
    fn conjugate_filter_and_round_trip() {
        let s = painless(2, 64);
        let filter = s.conjugate_filter().unwrap();
        assert!(s.partition_of_unity_error(&filter).unwrap() < 1e-12);
        let f = random_nd(64, 2, 7);
        assert!(s.reconstruct(&f).unwrap().rel_err < 1e-10);
        let back = s.synthesize(&s.analyze(&f).unwrap(), Some(&filter)).unwrap();
        assert!(back.relative_distance(&f) < 1e-10);
    }

    #[test]
    fn gaussian_round_trip() {
        let s = NdFrameSpec::<f64>::new(2, &Window::gaussian(), 0.5, 8, 32).unwrap();
        let f = random_nd(32, 2, 8);
        assert!(s.reconstruct(&f).unwrap().rel_err < 1e-6);
    }

    #[test]
    fn decay_constant_is_level_uniform() {
        let s = NdFrameSpec::<f64>::new(2, &Window::gaussian(), 0.5, 4, 128).unwrap();
        let levels = s.decay_constants(6.0);
        let lv: Vec<f64> = levels.iter().filter(|l| (1..=5).contains(&l.p)).map(|l| l.constant).collect();
        // the constant saturates once the box is wider than the window
        assert!(lv.iter().all(|c| c.is_finite() && *c > 0.0));
        assert!(lv[2..].iter().all(|c| (c / lv[2] - 1.0).abs() < 0.05), "{lv:?}");
    }

    #[test]
    fn limits() {
        assert!(matches!(NdFrameSpec::<f64>::new(2, &Window::gaussian(), 0.5, 4, 512), Err(Error::GridTooLarge { .. })));
        assert!(matches!(NdFrameSpec::<f64>::new(3, &Window::gaussian(), 0.5, 4, 64), Err(Error::GridTooLarge { .. })));
        assert!(NdTiling::build(0, 3).is_err());
    }
}
