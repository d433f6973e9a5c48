//! Periodized model: period-1 signals on `N` time samples and the integer
//! frequencies `-N/2 ..= N/2-1`.
//!
//! The forward transform carries the `1/N` factor and the inverse carries
//! none, so `coeffs[j]` approximates the Fourier coefficient of the period-1
//! function and `Σ|f̂(j)|²` equals the mean-square of the samples.
//! Frequency content outside the grid is zero by construction.

use rustfft::num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{czero, Real};
use crate::window::Window;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FrequencyGrid {
    n: usize,
}

impl FrequencyGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Self { n })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn half(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Lowest grid frequency, `-N/2`.
    pub fn min_freq(&self) -> i64 {
        -self.half()
    }

    /// Highest grid frequency, `N/2 - 1`.
    pub fn max_freq(&self) -> i64 {
        self.half() - 1
    }

    pub fn contains(&self, freq: i64) -> bool {
        freq >= self.min_freq() && freq <= self.max_freq()
    }

    /// Storage slot of a frequency (storage is ordered from `-N/2` upward).
    pub fn slot(&self, freq: i64) -> Option<usize> {
        self.contains(freq).then(|| (freq + self.half()) as usize)
    }

    pub fn freq_at(&self, slot: usize) -> i64 {
        slot as i64 - self.half()
    }

    pub fn freqs(&self) -> impl Iterator<Item = i64> {
        self.min_freq()..=self.max_freq()
    }
}

/// Fourier coefficients of a period-1 signal, stored from `-N/2` upward.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSignal<T> {
    grid: FrequencyGrid,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralSignal<T> {
    pub fn new(grid: FrequencyGrid, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != grid.size() {
            return Err(Error::LengthMismatch { expected: grid.size(), found: coeffs.len() });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: FrequencyGrid) -> Self {
        Self { grid, coeffs: vec![czero(); grid.size()] }
    }

    /// Builds a spectrum from a function of the integer frequency.
    pub fn from_fn(grid: FrequencyGrid, mut f: impl FnMut(i64) -> Complex<T>) -> Self {
        Self { grid, coeffs: grid.freqs().map(&mut f).collect() }
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    /// Coefficient at an integer frequency; zero off the grid.
    pub fn at(&self, freq: i64) -> Complex<T> {
        self.grid.slot(freq).map_or_else(czero, |s| self.coeffs[s])
    }

    pub fn set(&mut self, freq: i64, value: Complex<T>) -> Result<()> {
        let slot = self
            .grid
            .slot(freq)
            .ok_or_else(|| Error::IndexOutOfRange(format!("frequency {freq} off grid")))?;
        self.coeffs[slot] = value;
        Ok(())
    }

    /// `Σ_j f̂(j) conj(ĝ(j))`, the L² inner product over one period.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn energy(&self) -> T {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.energy().sqrt()
    }

    /// `‖self - other‖ / ‖other‖`.
    pub fn relative_distance(&self, other: &Self) -> T {
        let diff: T = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm_sqr()).sum();
        (diff / other.energy()).sqrt()
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self { grid: self.grid, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Samples `f(n/N)`, `n = 0..N`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSamples<T> {
    values: Vec<Complex<T>>,
}

impl<T: Real> TimeSamples<T> {
    pub fn new(values: Vec<Complex<T>>) -> Self {
        Self { values }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(T) -> Complex<T>) -> Self {
        let nt = T::from_usize_lossy(n);
        Self { values: (0..n).map(|k| f(T::from_usize_lossy(k) / nt)).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    /// Mean-square value, the period-1 `‖f‖²`.
    pub fn energy(&self) -> T {
        let sum: T = self.values.iter().map(|c| c.norm_sqr()).sum();
        sum / T::from_usize_lossy(self.values.len())
    }

    /// Unnormalized sample inner product `Σ_n x_n conj(y_n)`.
    pub fn sample_inner(&self, other: &Self) -> Complex<T> {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum()
    }
}

/// Forward transform: `f̂(j) = (1/N) Σ_n x_n e^{-2πi jn/N}`.
pub fn to_spectrum<T: Real>(x: &TimeSamples<T>, grid: FrequencyGrid) -> Result<SpectralSignal<T>> {
    let n = grid.size();
    if x.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: x.len() });
    }
    let mut buf = x.values.clone();
    FftPlanner::new().plan_fft(n, FftDirection::Forward).process(&mut buf);
    let scale = T::one() / T::from_usize_lossy(n);
    // standard FFT order has frequency 0 first; rotate so -N/2 comes first
    buf.rotate_right(n / 2);
    buf.iter_mut().for_each(|c| *c = *c * scale);
    SpectralSignal::new(grid, buf)
}

/// Inverse transform: `x_n = Σ_j f̂(j) e^{2πi jn/N}`.
pub fn from_spectrum<T: Real>(f: &SpectralSignal<T>) -> TimeSamples<T> {
    let n = f.grid.size();
    let mut buf = f.coeffs.clone();
    buf.rotate_left(n / 2);
    FftPlanner::new().plan_fft(n, FftDirection::Inverse).process(&mut buf);
    TimeSamples::new(buf)
}

/// `|γ Σ_{|n|≤M} φ(x+γn) - Σ_{|n|≤M} φ̂(n/γ) e^{2πi nx/γ}|` for the window's
/// time and frequency profiles.
pub fn poisson_residual<T: Real>(window: &Window<T>, gamma: T, x: T, n_terms: usize) -> Result<T> {
    if gamma <= T::zero() {
        return Err(Error::InvalidParameter(format!("lattice step must be positive, got {gamma}")));
    }
    if n_terms == 0 {
        return Err(Error::InvalidParameter("n_terms must be at least 1".into()));
    }
    if window.time(T::zero()).is_none() {
        return Err(Error::MissingTimeProfile);
    }
    let m = n_terms as i64;
    let mut time_side = czero::<T>();
    let mut freq_side = czero::<T>();
    for k in -m..=m {
        let kt = T::from_i64_lossy(k);
        let phi = window.time(x + gamma * kt).unwrap_or_else(T::zero);
        time_side = time_side + Complex::new(gamma * phi, T::zero());
        let angle = T::TAU() * kt * x / gamma;
        freq_side = freq_side + Complex::from_polar(window.freq(kt / gamma), angle);
    }
    Ok((time_side - freq_side).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_samples(n: usize, seed: u64) -> TimeSamples<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TimeSamples::new(
            (0..n).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        )
    }

    fn naive_dft(x: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let n = x.len() as i64;
        (-n / 2..n / 2)
            .map(|j| {
                x.iter()
                    .enumerate()
                    .map(|(m, v)| {
                        let a = -std::f64::consts::TAU * ((j * m as i64).rem_euclid(n)) as f64 / n as f64;
                        v * Complex::from_polar(1.0, a)
                    })
                    .sum::<Complex<f64>>()
                    / n as f64
            })
            .collect()
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::new(2).is_err());
        assert!(FrequencyGrid::new(7).is_err());
        let g = FrequencyGrid::new(8).unwrap();
        assert_eq!(g.freqs().count(), 8);
        assert_eq!((g.min_freq(), g.max_freq()), (-4, 3));
        assert_eq!(g.slot(-4), Some(0));
        assert_eq!(g.slot(4), None);
    }

    #[test]
    fn constant_signal_is_dc() {
        let g = FrequencyGrid::new(16).unwrap();
        let x = TimeSamples::new(vec![Complex::new(1.0, 0.0); 16]);
        let f = to_spectrum(&x, g).unwrap();
        for j in g.freqs() {
            let expect = if j == 0 { 1.0 } else { 0.0 };
            assert!((f.at(j) - Complex::new(expect, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn single_mode() {
        let g = FrequencyGrid::new(16).unwrap();
        let x = TimeSamples::<f64>::from_fn(16, |t| Complex::from_polar(1.0, std::f64::consts::TAU * 3.0 * t));
        let f = to_spectrum(&x, g).unwrap();
        for j in g.freqs() {
            let expect = if j == 3 { 1.0 } else { 0.0 };
            assert!((f.at(j) - Complex::new(expect, 0.0)).norm() < 1e-14, "j={j}");
        }
    }

    #[test]
    fn matches_direct_dft_and_parseval() {
        let g = FrequencyGrid::new(64).unwrap();
        let x = random_samples(64, 7);
        let f = to_spectrum(&x, g).unwrap();
        let oracle = naive_dft(x.values());
        for (a, b) in f.coeffs().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-13);
        }
        assert!((f.energy() - x.energy()).abs() < 1e-12 * x.energy());
    }

    #[test]
    fn length_mismatch() {
        let g = FrequencyGrid::new(16).unwrap();
        let x = random_samples(8, 1);
        assert!(matches!(to_spectrum(&x, g), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn inverse_cases() {
        let g = FrequencyGrid::new(32).unwrap();
        let mut f = SpectralSignal::<f64>::zeros(g);
        f.set(0, Complex::new(1.0, 0.0)).unwrap();
        assert!(from_spectrum(&f).values().iter().all(|v| (v - Complex::new(1.0, 0.0)).norm() < 1e-15));

        let mut f = SpectralSignal::<f64>::zeros(g);
        f.set(1, Complex::new(0.5, 0.0)).unwrap();
        f.set(-1, Complex::new(0.5, 0.0)).unwrap();
        for (n, v) in from_spectrum(&f).values().iter().enumerate() {
            let c = (std::f64::consts::TAU * n as f64 / 32.0).cos();
            assert!((v - Complex::new(c, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn round_trip_and_plancherel() {
        let g = FrequencyGrid::new(128).unwrap();
        let x = random_samples(128, 11);
        let y = random_samples(128, 12);
        let fx = to_spectrum(&x, g).unwrap();
        let fy = to_spectrum(&y, g).unwrap();
        let back = from_spectrum(&fx);
        for (a, b) in back.values().iter().zip(x.values()) {
            assert!((a - b).norm() < 1e-12);
        }
        let lhs = x.sample_inner(&y);
        let rhs = fx.inner(&fy) * 128.0;
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));

        let again = to_spectrum(&from_spectrum(&fx), g).unwrap();
        for (a, b) in again.coeffs().iter().zip(fx.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn poisson_gaussian() {
        let w = Window::<f64>::gaussian();
        assert!(poisson_residual(&w, 1.0, 0.0, 10).unwrap() < 1e-12);
        assert!(poisson_residual(&w, 1.0, 0.37, 10).unwrap() < 1e-12);
        let r1 = poisson_residual(&w, 1.0, 0.0, 1).unwrap();
        let r5 = poisson_residual(&w, 1.0, 0.0, 5).unwrap();
        assert!(r5 <= r1);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for gamma in [0.5, 1.0, 2.0] {
            for _ in 0..16 {
                let x = rng.gen_range(-1.0..1.0);
                assert!(poisson_residual(&w, gamma, x, 12).unwrap() < 1e-10, "gamma={gamma} x={x}");
            }
        }
    }

    #[test]
    fn poisson_errors() {
        let t = Window::<f64>::truncated_gaussian(0.1).unwrap();
        assert!(matches!(poisson_residual(&t, 1.0, 0.0, 3), Err(Error::MissingTimeProfile)));
        let g = Window::<f64>::gaussian();
        assert!(poisson_residual(&g, 0.0, 0.0, 3).is_err());
        assert!(poisson_residual(&g, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let g = FrequencyGrid::new(32).unwrap();
        let x = TimeSamples::<f32>::from_fn(32, |t| Complex::new((std::f32::consts::TAU * 2.0 * t).cos(), 0.0));
        let f = to_spectrum(&x, g).unwrap();
        assert!((f.at(2).re - 0.5).abs() < 1e-6);
        assert!((f.at(-2).re - 0.5).abs() < 1e-6);
    }
}
