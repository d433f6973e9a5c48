//! The α-DOST orthonormal basis of period-1 signals.
//!
//! `B_{p,τ}(t) = β^{-1/2} Σ_{η∈I_p} e^{2πiη(t - τ/β)}` for `p ≥ 0`, and
//! `B_{-p,τ} = conj(B_{p,τ})`. On a grid of size `N` the basis uses every band
//! with `s_p ≤ N/2`; grid frequencies outside those bands (the partial top
//! band and the Nyquist row `-N/2`) are carried verbatim as a remainder so
//! analysis stays invertible on the whole grid.

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::{signed_band_range, Alpha, AlphaPartition};
use crate::scalar::{czero, unit_phase, Real};
use crate::spectral::{from_spectrum, to_spectrum, FrequencyGrid, SpectralSignal, TimeSamples};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BasisIndex {
    pub p: i64,
    pub tau: u64,
}

impl BasisIndex {
    pub fn new(p: i64, tau: u64) -> Self {
        Self { p, tau }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DostBand<T> {
    pub p: i64,
    /// Indexed by `τ`.
    pub coeffs: Vec<Complex<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DostCoefficients<T> {
    pub alpha: Alpha,
    pub grid: FrequencyGrid,
    pub bands: Vec<DostBand<T>>,
    /// Fourier coefficients at grid frequencies no in-grid band covers.
    pub remainder: Vec<(i64, Complex<T>)>,
}

impl<T: Real> DostCoefficients<T> {
    pub fn get(&self, idx: BasisIndex) -> Option<Complex<T>> {
        self.bands.iter().find(|b| b.p == idx.p)?.coeffs.get(idx.tau as usize).copied()
    }

    pub fn get_mut(&mut self, idx: BasisIndex) -> Option<&mut Complex<T>> {
        self.bands.iter_mut().find(|b| b.p == idx.p)?.coeffs.get_mut(idx.tau as usize)
    }

    /// `Σ|c_{p,τ}|²` over basis coefficients only.
    pub fn band_energy(&self) -> T {
        self.bands.iter().flat_map(|b| &b.coeffs).map(|c| c.norm_sqr()).sum()
    }

    pub fn remainder_energy(&self) -> T {
        self.remainder.iter().map(|(_, c)| c.norm_sqr()).sum()
    }

    pub fn energy(&self) -> T {
        self.band_energy() + self.remainder_energy()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisIndex, Complex<T>)> + '_ {
        self.bands
            .iter()
            .flat_map(|b| b.coeffs.iter().enumerate().map(move |(t, c)| (BasisIndex::new(b.p, t as u64), *c)))
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = self.clone();
        out.bands.iter_mut().flat_map(|b| b.coeffs.iter_mut()).for_each(|c| *c = *c * s);
        out.remainder.iter_mut().for_each(|(_, c)| *c = *c * s);
        out
    }

    /// Elementwise sum; both operands must come from the same basis.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.bands.iter_mut().zip(&other.bands) {
            a.coeffs.iter_mut().zip(&b.coeffs).for_each(|(x, y)| *x = *x + y);
        }
        for (a, b) in out.remainder.iter_mut().zip(&other.remainder) {
            a.1 = a.1 + b.1;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Concentration<T> {
    /// Energy fraction inside `[τ/β - 1/(2β), τ/β + 1/(2β)]` (circular).
    pub fraction: T,
    pub squared: T,
}

#[derive(Clone, Debug)]
pub struct DostBasis<T> {
    partition: AlphaPartition,
    grid: FrequencyGrid,
    /// In-grid bands, order `0, 1, -1, 2, -2, …`.
    bands: Vec<i64>,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real> DostBasis<T> {
    pub fn new(alpha: Alpha, n: usize) -> Result<Self> {
        let grid = FrequencyGrid::new(n)?;
        let half = grid.half() as u64;
        let partition = AlphaPartition::reaching(alpha, half + 1);
        let mut bands = vec![0];
        for iv in &partition.intervals()[1..] {
            if iv.upper > half {
                break;
            }
            bands.push(iv.p as i64);
            bands.push(-(iv.p as i64));
        }
        Ok(Self { partition, grid, bands, _scalar: std::marker::PhantomData })
    }

    pub fn alpha(&self) -> Alpha {
        self.partition.alpha()
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn partition(&self) -> &AlphaPartition {
        &self.partition
    }

    pub fn bands(&self) -> &[i64] {
        &self.bands
    }

    pub fn beta(&self, p: i64) -> u64 {
        self.partition.width(p).expect("band within partition")
    }

    /// All basis indices on the grid, band by band.
    pub fn indices(&self) -> Vec<BasisIndex> {
        self.bands
            .iter()
            .flat_map(|&p| (0..self.beta(p)).map(move |tau| BasisIndex::new(p, tau)))
            .collect()
    }

    fn check(&self, idx: BasisIndex) -> Result<u64> {
        let half = self.grid.half() as u64;
        let iv = self
            .partition
            .interval(idx.p.unsigned_abs() as usize)
            .filter(|iv| iv.upper <= half)
            .ok_or_else(|| {
                let upper = AlphaPartition::build(self.alpha(), idx.p.unsigned_abs() as usize)
                    .map(|pt| pt.upper())
                    .unwrap_or(u64::MAX);
                Error::BandExceedsGrid { p: idx.p, upper, half }
            })?;
        if idx.tau >= iv.width {
            return Err(Error::IndexOutOfRange(format!("tau {} >= beta {}", idx.tau, iv.width)));
        }
        Ok(iv.width)
    }

    /// Samples of `B_{p,τ}` at `t = n/N`, summed directly in time.
    pub fn element(&self, idx: BasisIndex) -> Result<TimeSamples<T>> {
        let beta = self.check(idx)? as i64;
        let n = self.grid.size() as i64;
        let (lo, hi) = signed_band_range(&self.partition, idx.p).unwrap();
        let norm = T::one() / T::from_i64_lossy(beta).sqrt();
        let tau = idx.tau as i64;
        Ok(TimeSamples::new(
            (0..n)
                .map(|m| {
                    // Σ_η e^{2πiη(t - τ/β)}, t = m/N, stepping η by one
                    let num = m * beta - tau * n;
                    let den = n * beta;
                    let step = unit_phase::<T>(num, den);
                    let mut z = unit_phase::<T>(lo * num, den);
                    let mut acc = czero::<T>();
                    for _ in lo..hi {
                        acc = acc + z;
                        z = z * step;
                    }
                    acc * norm
                })
                .collect(),
        ))
    }

    /// Every element in [`indices`](Self::indices) order.
    pub fn elements(&self) -> Result<Vec<(BasisIndex, TimeSamples<T>)>> {
        self.indices().into_par_iter().map(|i| Ok((i, self.element(i)?))).collect()
    }

    /// Spectrum of `B_{p,τ}`: `β^{-1/2} e^{∓2πiητ/β}` on the band.
    pub fn element_spectrum(&self, idx: BasisIndex) -> Result<SpectralSignal<T>> {
        let beta = self.check(idx)? as i64;
        let (lo, hi) = signed_band_range(&self.partition, idx.p).unwrap();
        let norm = T::one() / T::from_i64_lossy(beta).sqrt();
        let tau = idx.tau as i64;
        Ok(SpectralSignal::from_fn(self.grid, |j| {
            if j >= lo && j < hi {
                unit_phase::<T>(-j * tau, beta) * norm
            } else {
                czero()
            }
        }))
    }

    fn remainder_freqs(&self) -> Vec<i64> {
        let covered = self.bands.iter().filter(|&&p| p > 0).count() as u64;
        let top = self.partition.intervals()[covered as usize].upper as i64;
        self.grid.freqs().filter(|j| j.abs() >= top).collect()
    }

    /// Direct inner products against sampled basis elements.
    pub fn analyze_naive(&self, x: &TimeSamples<T>) -> Result<DostCoefficients<T>> {
        self.analyze_with_elements(x, &self.elements()?)
    }

    /// [`analyze_naive`](Self::analyze_naive) with elements from
    /// [`elements`](Self::elements) reused across signals.
    pub fn analyze_with_elements(
        &self,
        x: &TimeSamples<T>,
        elements: &[(BasisIndex, TimeSamples<T>)],
    ) -> Result<DostCoefficients<T>> {
        let spectrum = to_spectrum(x, self.grid)?;
        let n = T::from_usize_lossy(self.grid.size());
        let mut bands: Vec<DostBand<T>> =
            self.bands.iter().map(|&p| DostBand { p, coeffs: vec![czero(); self.beta(p) as usize] }).collect();
        for (idx, e) in elements {
            let slot = self.bands.iter().position(|&p| p == idx.p).ok_or_else(|| {
                Error::IndexOutOfRange(format!("element of band {} not in this basis", idx.p))
            })?;
            let c = bands[slot].coeffs.get_mut(idx.tau as usize).ok_or_else(|| {
                Error::IndexOutOfRange(format!("tau {} out of range", idx.tau))
            })?;
            *c = x.sample_inner(e) / n;
        }
        let remainder = self.remainder_freqs().into_iter().map(|j| (j, spectrum.at(j))).collect();
        Ok(DostCoefficients { alpha: self.alpha(), grid: self.grid, bands, remainder })
    }

    /// One forward FFT of the signal, then one length-`β` FFT per band.
    pub fn analyze_fast(&self, x: &TimeSamples<T>) -> Result<DostCoefficients<T>> {
        let spectrum = to_spectrum(x, self.grid)?;
        Ok(self.analyze_spectrum(&spectrum))
    }

    pub fn analyze_spectrum(&self, spectrum: &SpectralSignal<T>) -> DostCoefficients<T> {
        let bands = self
            .bands
            .par_iter()
            .map_init(FftPlanner::<T>::new, |planner, &p| {
                let beta = self.beta(p) as usize;
                let lower = self.partition.interval(p.unsigned_abs() as usize).unwrap().lower as i64;
                let norm = T::one() / T::from_usize_lossy(beta).sqrt();
                let b = beta as i64;
                // p > 0: c_τ = β^{-1/2} e^{2πi·iτ/β} Σ_m f̂(i+m) e^{2πi mτ/β}
                // p < 0: c_τ = β^{-1/2} e^{-2πi·iτ/β} Σ_m f̂(-(i+m)) e^{-2πi mτ/β}
                let sign = if p < 0 { -1 } else { 1 };
                let mut buf: Vec<Complex<T>> = (0..b).map(|m| spectrum.at(sign * (lower + m))).collect();
                let fft = if p < 0 { planner.plan_fft_forward(beta) } else { planner.plan_fft_inverse(beta) };
                fft.process(&mut buf);
                for (tau, c) in buf.iter_mut().enumerate() {
                    *c = *c * unit_phase::<T>(sign * lower * tau as i64, b) * norm;
                }
                DostBand { p, coeffs: buf }
            })
            .collect();
        let remainder = self.remainder_freqs().into_iter().map(|j| (j, spectrum.at(j))).collect();
        DostCoefficients { alpha: self.alpha(), grid: self.grid, bands, remainder }
    }

    pub fn synthesize(&self, coeffs: &DostCoefficients<T>) -> Result<TimeSamples<T>> {
        Ok(from_spectrum(&self.synthesize_spectrum(coeffs)?))
    }

    pub fn synthesize_spectrum(&self, coeffs: &DostCoefficients<T>) -> Result<SpectralSignal<T>> {
        if coeffs.grid != self.grid {
            return Err(Error::LengthMismatch { expected: self.grid.size(), found: coeffs.grid.size() });
        }
        let mut out = SpectralSignal::zeros(self.grid);
        let mut planner = FftPlanner::<T>::new();
        for band in &coeffs.bands {
            let p = band.p;
            let iv = self
                .partition
                .interval(p.unsigned_abs() as usize)
                .filter(|iv| iv.width as usize == band.coeffs.len())
                .ok_or_else(|| Error::IndexOutOfRange(format!("band {p} does not match the basis")))?;
            let (lower, b) = (iv.lower as i64, iv.width as i64);
            let norm = T::one() / T::from_i64_lossy(b).sqrt();
            let sign = if p < 0 { -1 } else { 1 };
            // f̂(±(i+m)) = β^{-1/2} Σ_τ c_τ e^{∓2πi(i+m)τ/β}
            let mut buf: Vec<Complex<T>> = band
                .coeffs
                .iter()
                .enumerate()
                .map(|(tau, c)| c * unit_phase::<T>(-sign * lower * tau as i64, b) * norm)
                .collect();
            let fft = if p < 0 { planner.plan_fft_inverse(b as usize) } else { planner.plan_fft_forward(b as usize) };
            fft.process(&mut buf);
            for (m, v) in buf.into_iter().enumerate() {
                let j = sign * (lower + m as i64);
                out.set(j, out.at(j) + v)?;
            }
        }
        for &(j, c) in &coeffs.remainder {
            out.set(j, out.at(j) + c)?;
        }
        Ok(out)
    }

    /// Pairwise sample inner products `(1/N) Σ_n B_a(t_n) conj(B_b(t_n))`
    /// over [`indices`](Self::indices).
    pub fn gram_matrix(&self) -> Result<DMatrix<Complex<T>>> {
        let elems: Vec<TimeSamples<T>> = self.elements()?.into_iter().map(|(_, e)| e).collect();
        let n = T::from_usize_lossy(self.grid.size());
        let m = elems.len();
        let rows: Vec<Vec<Complex<T>>> = (0..m)
            .into_par_iter()
            .map(|a| (0..m).map(|b| elems[a].sample_inner(&elems[b]) / n).collect())
            .collect();
        Ok(DMatrix::from_fn(m, m, |a, b| rows[a][b]))
    }

    /// Energy of `B_{p,τ}` within `[τ/β - 1/(2β), τ/β + 1/(2β)]`, by the
    /// trapezoidal rule on the sample grid with endpoints snapped to samples.
    pub fn concentration(&self, idx: BasisIndex) -> Result<Concentration<T>> {
        let beta = self.check(idx)? as i64;
        let n = self.grid.size() as i64;
        let samples = from_spectrum(&self.element_spectrum(idx)?);
        let energy: Vec<T> = samples.values().iter().map(|c| c.norm_sqr()).collect();
        let total: T = energy.iter().copied().sum();
        // endpoints N(2τ ∓ 1)/(2β), rounded half away from zero
        let round_div = |num: i64, den: i64| (2 * num + den).div_euclid(2 * den);
        let tau = idx.tau as i64;
        let lo = round_div(n * (2 * tau - 1), 2 * beta);
        let hi = round_div(n * (2 * tau + 1), 2 * beta);
        let half = T::lit(0.5);
        let inside: T = (lo..=hi)
            .map(|m| {
                let w = if m == lo || m == hi { half } else { T::one() };
                w * energy[m.rem_euclid(n) as usize]
            })
            .sum();
        let fraction = inside / total;
        Ok(Concentration { fraction, squared: fraction * fraction })
    }
}

/// `max |G - I|` for a Gram matrix.
pub fn gram_deviation<T: Real>(gram: &DMatrix<Complex<T>>) -> T {
    let mut worst = T::zero();
    for a in 0..gram.nrows() {
        for b in 0..gram.ncols() {
            let target = if a == b { T::one() } else { T::zero() };
            let d = (gram[(a, b)] - Complex::new(target, T::zero())).norm();
            worst = num_traits::Float::max(worst, d);
        }
    }
    worst
}
