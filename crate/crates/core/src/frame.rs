//! The α-DOST frame `φ_{p,k}` on the periodized model.
//!
//! With redundancy `q` (`ν = 1/q`) band `p` carries `qβ(p)` translates and
//! `φ̂_{p,k}(j) = β^{-1/2} e^{-2πijk/(qβ)} Φ_p(j)`. Coefficients are the
//! unnormalized frequency-domain inner products `Σ_j f̂(j) conj(φ̂_{p,k}(j))`,
//! so the frame operator reads
//! `Ŝf(ω) = q Σ_p Ψ_p(ω) Σ_m f̂(ω + mqβ) Φ_p(ω + mqβ)` exactly.

use nalgebra::{DMatrix, RealField};
use num_traits::Float;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::{signed_band_range, Alpha, AlphaPartition};
use crate::scalar::{czero, ordered_fold, unit_phase, Real};
use crate::spectral::{FrequencyGrid, SpectralSignal};
use crate::window::{ln_interval_sum, log_sum_exp, StackBand, Window, WindowStack};

/// Largest grid for which [`FrameSpec::frame_bounds_eigen`] builds a dense matrix.
pub const EIGEN_GRID_LIMIT: usize = 1024;

/// Floor on `Σ_p Φ_p²` below which the conjugate filter is refused.
pub const FILTER_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct FrameSpec<T> {
    stack: WindowStack<T>,
    q: usize,
    walnut_k_max: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameBand<T> {
    pub p: i64,
    /// Indexed by the translate `k`, length `qβ(p)`.
    pub coeffs: Vec<Complex<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameCoefficients<T> {
    pub bands: Vec<FrameBand<T>>,
}

impl<T: Real> FrameCoefficients<T> {
    pub fn get(&self, p: i64, k: usize) -> Option<Complex<T>> {
        self.bands.iter().find(|b| b.p == p)?.coeffs.get(k).copied()
    }

    pub fn get_mut(&mut self, p: i64, k: usize) -> Option<&mut Complex<T>> {
        self.bands.iter_mut().find(|b| b.p == p)?.coeffs.get_mut(k)
    }

    /// `Σ|c_{p,k}|²`.
    pub fn energy(&self) -> T {
        self.bands.iter().flat_map(|b| &b.coeffs).map(|c| c.norm_sqr()).sum()
    }

    pub fn len(&self) -> usize {
        self.bands.iter().map(|b| b.coeffs.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, usize, Complex<T>)> + '_ {
        self.bands.iter().flat_map(|b| b.coeffs.iter().enumerate().map(move |(k, c)| (b.p, k, *c)))
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

/// `Ω_p = ν Φ_p / Σ_p Φ_p²`, bands in the stack's order.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjugateFilter<T> {
    pub grid: FrequencyGrid,
    pub nu: T,
    pub bands: Vec<StackBand<T>>,
}

impl<T: Real> ConjugateFilter<T> {
    pub fn band(&self, p: i64) -> Option<&StackBand<T>> {
        self.bands.iter().find(|b| b.p == p)
    }

    /// `max_ω |Σ_p Ω_p(ω)Φ_p(ω) - ν|`.
    pub fn partition_of_unity_error(&self, stack: &WindowStack<T>) -> T {
        let mut sum = vec![T::zero(); self.grid.size()];
        for b in &self.bands {
            if let Some(phi) = stack.band(b.p) {
                for (s, (o, f)) in b.values.iter().zip(&phi.values).enumerate() {
                    sum[s] = sum[s] + *o * *f;
                }
            }
        }
        sum.into_iter().map(|v| Float::abs(v - self.nu)).fold(T::zero(), Float::max)
    }
}

/// Synthesis family.
#[derive(Clone, Copy, Debug)]
pub enum Family<'a, T> {
    Analysis,
    Conjugate(&'a ConjugateFilter<T>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    WalnutEstimate,
    EigenExact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrameBounds<T> {
    pub a_lower: T,
    pub b_upper: T,
    pub method: BoundMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WalnutBoundReport<T> {
    pub h0_inf: T,
    pub h0_sup: T,
    /// `Σ_p Σ_{1≤|k|≤k_max} max_ω |Φ_p(ω - kqβ)Φ_p(ω)|`.
    pub h_tail: T,
    pub k_max: usize,
    /// `q·max(h0_inf - h_tail, 0)`.
    pub a: T,
    /// `q·(h0_sup + h_tail)`.
    pub b: T,
    /// Whether `νμ < 1`.
    pub nu_mu_below_one: bool,
}

impl<T: Real> WalnutBoundReport<T> {
    pub fn bounds(&self) -> FrameBounds<T> {
        FrameBounds { a_lower: self.a, b_upper: self.b, method: BoundMethod::WalnutEstimate }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalnutOutput<T> {
    pub spectrum: SpectralSignal<T>,
    /// Norm of the aliasing terms with `|k| > k_max` that were left out.
    pub dropped_norm: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction<T> {
    pub signal: SpectralSignal<T>,
    pub rel_err: T,
}

impl<T: Real> FrameSpec<T> {
    pub fn new(alpha: Alpha, window: &Window<T>, mu: T, q: usize, n: usize) -> Result<Self> {
        let grid = FrequencyGrid::new(n)?;
        Self::from_stack(WindowStack::for_grid(window, alpha, mu, grid)?, q)
    }

    pub fn from_stack(stack: WindowStack<T>, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("q must be at least 1".into()));
        }
        let walnut_k_max = stack.grid().size().div_ceil(q);
        Ok(Self { stack, q, walnut_k_max })
    }

    /// Overrides the aliasing truncation (default `⌈N/q⌉`, every shift that
    /// can still land on the grid).
    pub fn with_walnut_k_max(mut self, k_max: usize) -> Self {
        self.walnut_k_max = k_max;
        self
    }

    pub fn walnut_k_max(&self) -> usize {
        self.walnut_k_max
    }

    pub fn alpha(&self) -> Alpha {
        self.stack.alpha()
    }

    pub fn window(&self) -> &Window<T> {
        self.stack.window()
    }

    pub fn mu(&self) -> T {
        self.stack.mu()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn nu(&self) -> T {
        T::one() / T::from_usize_lossy(self.q)
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.stack.grid()
    }

    pub fn stack(&self) -> &WindowStack<T> {
        &self.stack
    }

    pub fn partition(&self) -> &AlphaPartition {
        self.stack.partition()
    }

    /// Signed bands in order `0, 1, -1, 2, -2, …`.
    pub fn p_range(&self) -> Vec<i64> {
        self.stack.bands().iter().map(|b| b.p).collect()
    }

    pub fn beta(&self, p: i64) -> u64 {
        self.stack.beta(p)
    }

    /// `qβ(|p|)`.
    pub fn k_count(&self, p: i64) -> usize {
        self.q * self.beta(p) as usize
    }

    /// Whether every aliasing term vanishes: compact window of radius `L`
    /// and `q > 2L + μ`.
    pub fn is_painless(&self) -> bool {
        self.window()
            .support_radius()
            .is_some_and(|l| T::from_usize_lossy(self.q) > T::lit(2.0) * l + self.mu())
    }

    fn band(&self, p: i64) -> Result<&StackBand<T>> {
        self.stack.band(p).ok_or_else(|| Error::IndexOutOfRange(format!("band {p} is not in the frame")))
    }

    fn check_grid(&self, f: &SpectralSignal<T>) -> Result<()> {
        if f.grid() != self.grid() {
            return Err(Error::LengthMismatch { expected: self.grid().size(), found: f.grid().size() });
        }
        Ok(())
    }

    pub fn frame_element(&self, p: i64, k: usize) -> Result<SpectralSignal<T>> {
        let band = self.band(p)?;
        let len = self.k_count(p);
        if k >= len {
            return Err(Error::IndexOutOfRange(format!("k {k} >= {len} translates of band {p}")));
        }
        let norm = T::one() / T::from_u64(self.beta(p)).unwrap().sqrt();
        let grid = self.grid();
        Ok(SpectralSignal::from_fn(grid, |j| {
            let v = band.values[grid.slot(j).unwrap()];
            if v == T::zero() {
                czero()
            } else {
                unit_phase::<T>(-j * k as i64, len as i64) * (v * norm)
            }
        }))
    }

    /// Inner products against `β^{-1/2} e^{-2πijk/(qβ)} g_p(j)` for each band
    /// profile `g_p`: fold `f̂·g_p` modulo `qβ`, then one inverse DFT.
    fn analyze_with(&self, f: &SpectralSignal<T>, profiles: &[&StackBand<T>]) -> FrameCoefficients<T> {
        let grid = self.grid();
        let bands = profiles
            .par_iter()
            .map_init(FftPlanner::<T>::new, |planner, band| {
                let len = self.k_count(band.p);
                let mut buf = vec![czero::<T>(); len];
                if let Some((lo, hi)) = band.support {
                    for s in lo..=hi {
                        let r = grid.freq_at(s).rem_euclid(len as i64) as usize;
                        buf[r] = buf[r] + f.coeffs()[s] * band.values[s];
                    }
                    planner.plan_fft_inverse(len).process(&mut buf);
                    let norm = T::one() / T::from_u64(self.beta(band.p)).unwrap().sqrt();
                    buf.iter_mut().for_each(|c| *c = *c * norm);
                }
                FrameBand { p: band.p, coeffs: buf }
            })
            .collect();
        FrameCoefficients { bands }
    }

    /// Transpose of [`analyze_with`](Self::analyze_with): one forward DFT per
    /// band, then the result is read off periodically under `h_p`.
    fn synthesize_with(&self, c: &FrameCoefficients<T>, profiles: &[&StackBand<T>]) -> Result<SpectralSignal<T>> {
        let grid = self.grid();
        let parts: Vec<Option<(usize, usize, Vec<Complex<T>>)>> = c
            .bands
            .par_iter()
            .zip(profiles.par_iter())
            .map_init(FftPlanner::<T>::new, |planner, (band, h)| {
                let (lo, hi) = h.support?;
                let len = band.coeffs.len();
                let mut buf = band.coeffs.clone();
                planner.plan_fft_forward(len).process(&mut buf);
                let norm = T::one() / T::from_u64(self.beta(band.p)).unwrap().sqrt();
                let vals = (lo..=hi)
                    .map(|s| {
                        let r = grid.freq_at(s).rem_euclid(len as i64) as usize;
                        buf[r] * (h.values[s] * norm)
                    })
                    .collect();
                Some((lo, hi, vals))
            })
            .collect();
        let mut out = vec![czero::<T>(); grid.size()];
        for (lo, _, vals) in parts.into_iter().flatten() {
            for (s, v) in (lo..).zip(vals) {
                out[s] = out[s] + v;
            }
        }
        SpectralSignal::new(grid, out)
    }

    fn check_coefficients(&self, c: &FrameCoefficients<T>) -> Result<()> {
        let ok = c.bands.len() == self.stack.bands().len()
            && c.bands.iter().zip(self.stack.bands()).all(|(a, b)| a.p == b.p && a.coeffs.len() == self.k_count(b.p));
        if ok {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange("coefficients do not match the frame layout".into()))
        }
    }

    fn stack_profiles(&self) -> Vec<&StackBand<T>> {
        self.stack.bands().iter().collect()
    }

    /// Profiles of a second window stack aligned with this frame's bands.
    fn aligned_profiles<'a>(&'a self, psi: &'a WindowStack<T>, zero: &'a StackBand<T>) -> Result<Vec<&'a StackBand<T>>> {
        if psi.grid() != self.grid() {
            return Err(Error::LengthMismatch { expected: self.grid().size(), found: psi.grid().size() });
        }
        if psi.alpha() != self.alpha() {
            return Err(Error::InvalidParameter("synthesis stack uses a different partition".into()));
        }
        Ok(self.stack.bands().iter().map(|b| psi.band(b.p).unwrap_or(zero)).collect())
    }

    fn zero_band(&self) -> StackBand<T> {
        StackBand { p: 0, values: vec![T::zero(); self.grid().size()], support: None }
    }

    pub fn analyze(&self, f: &SpectralSignal<T>) -> Result<FrameCoefficients<T>> {
        self.check_grid(f)?;
        Ok(self.analyze_with(f, &self.stack_profiles()))
    }

    /// Inner products with every element built explicitly.
    pub fn analyze_direct(&self, f: &SpectralSignal<T>) -> Result<FrameCoefficients<T>> {
        self.check_grid(f)?;
        let bands = self
            .p_range()
            .into_par_iter()
            .map(|p| {
                let coeffs = (0..self.k_count(p))
                    .map(|k| Ok(f.inner(&self.frame_element(p, k)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(FrameBand { p, coeffs })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FrameCoefficients { bands })
    }

    pub fn synthesize(&self, c: &FrameCoefficients<T>, family: Family<'_, T>) -> Result<SpectralSignal<T>> {
        self.check_coefficients(c)?;
        match family {
            Family::Analysis => self.synthesize_with(c, &self.stack_profiles()),
            Family::Conjugate(filter) => {
                let profiles = self.filter_profiles(filter)?;
                self.synthesize_with(c, &profiles)
            }
        }
    }

    fn filter_profiles<'a>(&self, filter: &'a ConjugateFilter<T>) -> Result<Vec<&'a StackBand<T>>> {
        let aligned = filter.grid == self.grid()
            && filter.bands.len() == self.stack.bands().len()
            && filter.bands.iter().zip(self.stack.bands()).all(|(a, b)| a.p == b.p);
        if !aligned {
            return Err(Error::InvalidParameter("conjugate filter was built for a different frame".into()));
        }
        Ok(filter.bands.iter().collect())
    }

    /// `S f = Σ ⟨f, φ_{p,k}⟩ ψ_{p,k}`, with `ψ = φ` unless a second stack is given.
    pub fn frame_operator_apply(&self, f: &SpectralSignal<T>, psi: Option<&WindowStack<T>>) -> Result<SpectralSignal<T>> {
        let c = self.analyze(f)?;
        match psi {
            None => self.synthesize_with(&c, &self.stack_profiles()),
            Some(psi) => {
                let zero = self.zero_band();
                let profiles = self.aligned_profiles(psi, &zero)?;
                self.synthesize_with(&c, &profiles)
            }
        }
    }

    /// Frequency-domain frame operator: the diagonal term plus aliasing terms
    /// shifted by `kqβ` bins, `1 ≤ |k| ≤ walnut_k_max`.
    pub fn walnut_apply(&self, f: &SpectralSignal<T>, psi: Option<&WindowStack<T>>) -> Result<WalnutOutput<T>> {
        self.walnut_apply_bands(f, psi, &self.p_range())
    }

    /// [`walnut_apply`](Self::walnut_apply) restricted to the listed bands.
    pub fn walnut_apply_bands(
        &self,
        f: &SpectralSignal<T>,
        psi: Option<&WindowStack<T>>,
        bands: &[i64],
    ) -> Result<WalnutOutput<T>> {
        self.check_grid(f)?;
        let zero = self.zero_band();
        let synth = match psi {
            None => self.stack_profiles(),
            Some(psi) => self.aligned_profiles(psi, &zero)?,
        };
        let grid = self.grid();
        let n = grid.size();
        let k_max = self.walnut_k_max as i64;
        let q = T::from_usize_lossy(self.q);
        let pairs: Vec<(&StackBand<T>, &StackBand<T>)> =
            self.stack.bands().iter().zip(synth.iter().copied()).filter(|(phi, _)| bands.contains(&phi.p)).collect();
        let (kept, dropped) = ordered_fold(
            &pairs,
            (vec![czero::<T>(); n], vec![czero::<T>(); n]),
            |&(phi, psi)| {
                let mut kept = vec![czero::<T>(); n];
                let mut dropped = vec![czero::<T>(); n];
                let (Some((plo, phi_hi)), Some((slo, shi))) = (phi.support, psi.support) else {
                    return (kept, dropped);
                };
                let shift = self.k_count(phi.p);
                for s in slo..=shi {
                    // shifted slot s + m·shift must land in Φ_p's support
                    let first = (plo as i64 - s as i64).div_euclid(shift as i64)
                        + i64::from((plo as i64 - s as i64).rem_euclid(shift as i64) != 0);
                    let mut acc_kept = czero::<T>();
                    let mut acc_drop = czero::<T>();
                    let mut m = first;
                    loop {
                        let t = s as i64 + m * shift as i64;
                        if t > phi_hi as i64 {
                            break;
                        }
                        let term = f.coeffs()[t as usize] * phi.values[t as usize];
                        if m.abs() <= k_max {
                            acc_kept = acc_kept + term;
                        } else {
                            acc_drop = acc_drop + term;
                        }
                        m += 1;
                    }
                    let w = psi.values[s] * q;
                    kept[s] = acc_kept * w;
                    dropped[s] = acc_drop * w;
                }
                (kept, dropped)
            },
            |(a, b), (c, d)| {
                a.iter_mut().zip(c).for_each(|(x, y)| *x = *x + y);
                b.iter_mut().zip(d).for_each(|(x, y)| *x = *x + y);
            },
        );
        let dropped_norm = dropped.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
        Ok(WalnutOutput { spectrum: SpectralSignal::new(grid, kept)?, dropped_norm })
    }

    pub fn walnut_bounds(&self) -> WalnutBoundReport<T> {
        let sums = self.stack.sum_bounds();
        let k_max = self.walnut_k_max as i64;
        let h_tail: T = self
            .stack
            .bands()
            .par_iter()
            .map(|band| {
                let Some((lo, hi)) = band.support else { return T::zero() };
                let shift = self.k_count(band.p) as i64;
                let mut total = T::zero();
                for k in (-k_max..=k_max).filter(|&k| k != 0) {
                    let d = k * shift;
                    if d.unsigned_abs() as usize > hi - lo {
                        continue;
                    }
                    let best = (lo..=hi)
                        .filter_map(|s| {
                            let t = s as i64 - d;
                            (t >= lo as i64 && t <= hi as i64).then(|| Float::abs(band.values[t as usize] * band.values[s]))
                        })
                        .fold(T::zero(), Float::max);
                    total = total + best;
                }
                total
            })
            .collect::<Vec<T>>()
            .into_iter()
            .sum();
        let q = T::from_usize_lossy(self.q);
        WalnutBoundReport {
            h0_inf: sums.a_low,
            h0_sup: sums.b_high,
            h_tail,
            k_max: self.walnut_k_max,
            a: q * Float::max(sums.a_low - h_tail, T::zero()),
            b: q * (sums.b_high + h_tail),
            nu_mu_below_one: self.mu() < q,
        }
    }

    /// `ln h_tail` with every stack value taken in log form, so the tail
    /// stays resolvable after `h_tail` itself underflows. Shifts run to
    /// `walnut_k_max` regardless of the window's reach.
    pub fn ln_h_tail(&self) -> T {
        let grid = self.grid();
        let n = grid.size() as i64;
        let k_max = self.walnut_k_max as i64;
        let terms: Vec<T> = self
            .stack
            .bands()
            .par_iter()
            .flat_map_iter(|band| {
                let (lo, hi) = signed_band_range(self.partition(), band.p.abs()).unwrap();
                let sign = if band.p < 0 { -T::one() } else { T::one() };
                let ln: Vec<T> = grid
                    .freqs()
                    .map(|w| ln_interval_sum(self.window(), self.mu(), lo, hi, sign * T::from_i64_lossy(w)))
                    .collect();
                let shift = self.k_count(band.p) as i64;
                (-k_max..=k_max)
                    .filter(move |&k| k != 0 && (k * shift).abs() < n)
                    .map(move |k| {
                        let d = k * shift;
                        (0..n)
                            .filter(|&s| (0..n).contains(&(s - d)))
                            .map(|s| ln[(s - d) as usize] + ln[s as usize])
                            .fold(T::neg_infinity(), Float::max)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        log_sum_exp(&terms)
    }

    /// Dense Hermitian matrix of `S` on the frequency grid, column `j` being
    /// `S` applied to the `j`-th unit vector.
    pub fn operator_matrix(&self) -> Result<DMatrix<Complex<T>>> {
        let grid = self.grid();
        let n = grid.size();
        if n > EIGEN_GRID_LIMIT {
            return Err(Error::GridTooLarge { n, limit: EIGEN_GRID_LIMIT });
        }
        let cols = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = SpectralSignal::zeros(grid);
                e.coeffs_mut()[j] = Complex::new(T::one(), T::zero());
                self.frame_operator_apply(&e, None).map(SpectralSignal::into_coeffs)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(n, n, |r, c| cols[c][r]))
    }

    /// Extreme eigenvalues of the frame operator, the optimal bounds of the
    /// finite model.
    pub fn frame_bounds_eigen(&self) -> Result<FrameBounds<T>>
    where
        T: RealField,
    {
        let mut m = self.operator_matrix()?;
        // symmetrize away rounding before the Hermitian solver
        let adj = m.adjoint();
        m = (m + adj) * Complex::new(T::lit(0.5), T::zero());
        let eig = m.symmetric_eigenvalues();
        let lo = eig.iter().copied().fold(T::infinity(), Float::min);
        let hi = eig.iter().copied().fold(T::neg_infinity(), Float::max);
        Ok(FrameBounds { a_lower: Float::max(lo, T::zero()), b_upper: hi, method: BoundMethod::EigenExact })
    }

    pub fn conjugate_filter(&self) -> Result<ConjugateFilter<T>> {
        let h0 = self.stack.h0();
        let floor = T::lit(FILTER_FLOOR);
        let grid = self.grid();
        let bad: Vec<i64> = h0.iter().enumerate().filter(|(_, v)| **v <= floor).map(|(s, _)| grid.freq_at(s)).collect();
        if !bad.is_empty() {
            return Err(Error::NonInvertible { frequencies: bad });
        }
        let nu = self.nu();
        let bands = self
            .stack
            .bands()
            .iter()
            .map(|b| StackBand {
                p: b.p,
                values: b.values.iter().zip(&h0).map(|(v, h)| nu * *v / *h).collect(),
                support: b.support,
            })
            .collect();
        Ok(ConjugateFilter { grid, nu, bands })
    }

    /// Analyzes against the conjugate family `Ψ_{p,k}` and synthesizes with `φ_{p,k}`.
    pub fn reconstruct(&self, f: &SpectralSignal<T>) -> Result<Reconstruction<T>> {
        self.check_grid(f)?;
        let filter = self.conjugate_filter()?;
        let c = self.analyze_with(f, &self.filter_profiles(&filter)?);
        let signal = self.synthesize_with(&c, &self.stack_profiles())?;
        let rel_err = signal.relative_distance(f);
        Ok(Reconstruction { signal, rel_err })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailPoint<T> {
    pub q: usize,
    pub report: WalnutBoundReport<T>,
    pub ln_h_tail: T,
}

/// Walnut bounds and `ln h_tail` for each `q`, keeping everything else fixed.
pub fn tail_scan<T: Real>(stack: &WindowStack<T>, qs: &[usize]) -> Result<Vec<TailPoint<T>>> {
    qs.iter()
        .map(|&q| {
            let spec = FrameSpec::from_stack(stack.clone(), q)?;
            Ok(TailPoint { q, report: spec.walnut_bounds(), ln_h_tail: spec.ln_h_tail() })
        })
        .collect()
}

/// Smallest `q ≤ q_max` with `h_tail < h0_inf / 2`, the empirical stand-in
/// for the threshold `ν₀`.
pub fn smallest_q_halving<T: Real>(stack: &WindowStack<T>, q_max: usize) -> Result<Option<(usize, WalnutBoundReport<T>)>> {
    for q in 1..=q_max {
        let r = FrameSpec::from_stack(stack.clone(), q)?.walnut_bounds();
        if r.h_tail < r.h0_inf * T::lit(0.5) {
            return Ok(Some((q, r)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{to_spectrum, TimeSamples};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(alpha: f64, window: Window<f64>, q: usize, n: usize) -> FrameSpec<f64> {
        FrameSpec::new(Alpha::new(alpha).unwrap(), &window, 0.5, q, n).unwrap()
    }

    fn painless(n: usize) -> FrameSpec<f64> {
        spec(1.0, Window::truncated_gaussian(0.1).unwrap(), 4, n)
    }

    fn random_spectrum(n: usize, seed: u64) -> SpectralSignal<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpectralSignal::from_fn(FrequencyGrid::new(n).unwrap(), |_| {
            Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn max_diff(a: &FrameCoefficients<f64>, b: &FrameCoefficients<f64>) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| {
            assert_eq!((x.0, x.1), (y.0, y.1));
            (x.2 - y.2).norm()
        }).fold(0.0, f64::max)
    }

    #[test]
    fn element_k_zero_is_scaled_stack() {
        let s = spec(1.0, Window::gaussian(), 4, 128);
        let e = s.frame_element(3, 0).unwrap();
        let band = s.stack().band(3).unwrap();
        for (c, v) in e.coeffs().iter().zip(&band.values) {
            assert!((c - Complex::new(v / 2.0, 0.0)).norm() < 1e-15);
        }
        assert!(matches!(s.frame_element(3, 16), Err(Error::IndexOutOfRange(_))));
        assert!(s.frame_element(3, 15).is_ok());
        assert!(matches!(s.frame_element(500, 0), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn element_matches_time_domain_construction() {
        // β^{-1/2} Σ_η e^{2πiμη(t-s)} φ(t-s), periodized, s = k/(qβ)
        let (n, q, p, k) = (128usize, 2usize, 3i64, 5usize);
        let w = Window::<f64>::gaussian();
        let s = spec(1.0, w.clone(), q, n);
        let beta = s.beta(p) as f64;
        let shift = k as f64 / (q as f64 * beta);
        let iv = *s.partition().interval(p as usize).unwrap();
        let x = TimeSamples::from_fn(n, |t| {
            let mut acc = Complex::new(0.0, 0.0);
            for wrap in -8..=8 {
                let u = t + wrap as f64 - shift;
                let env = w.time(u).unwrap();
                for eta in iv.frequencies() {
                    acc += Complex::from_polar(env, std::f64::consts::TAU * 0.5 * eta as f64 * u);
                }
            }
            acc / beta.sqrt()
        });
        let got = to_spectrum(&x, s.grid()).unwrap();
        let expect = s.frame_element(p, k).unwrap();
        assert!(got.relative_distance(&expect) < 1e-12, "{}", got.relative_distance(&expect));
    }

    #[test]
    fn analysis_examples() {
        let s = spec(1.0, Window::gaussian(), 4, 128);
        let e = s.frame_element(-2, 3).unwrap();
        let c = s.analyze(&e).unwrap();
        assert!((c.get(-2, 3).unwrap() - Complex::new(e.energy(), 0.0)).norm() < 1e-13);
        let zero = s.analyze(&SpectralSignal::zeros(s.grid())).unwrap();
        assert!(zero.iter().all(|(_, _, v)| v == Complex::new(0.0, 0.0)));
        let other = SpectralSignal::zeros(FrequencyGrid::new(64).unwrap());
        assert!(matches!(s.analyze(&other), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn fast_analysis_matches_direct() {
        for alpha in [0.0, 1.0] {
            let s = spec(alpha, Window::gaussian(), 4, 512);
            for seed in 0..10 {
                let f = random_spectrum(512, seed);
                let d = max_diff(&s.analyze(&f).unwrap(), &s.analyze_direct(&f).unwrap());
                assert!(d < 1e-10, "alpha={alpha} seed={seed}: {d}");
            }
        }
    }

    #[test]
    fn synthesis_examples() {
        let s = spec(0.5, Window::gaussian(), 3, 128);
        let f = random_spectrum(128, 4);
        let c = s.analyze(&f).unwrap();
        let via_synth = s.synthesize(&c, Family::Analysis).unwrap();
        assert!(via_synth.relative_distance(&s.frame_operator_apply(&f, None).unwrap()) < 1e-14);

        let mut unit = c.scale(Complex::new(0.0, 0.0));
        *unit.get_mut(2, 1).unwrap() = Complex::new(1.0, 0.0);
        let e = s.synthesize(&unit, Family::Analysis).unwrap();
        assert!(e.relative_distance(&s.frame_element(2, 1).unwrap()) < 1e-13);

        let c2 = s.analyze(&random_spectrum(128, 5)).unwrap();
        let (a, b) = (Complex::new(0.3, -0.8), Complex::new(1.7, 0.1));
        let lhs = s.synthesize(&c.scale(a).add(&c2.scale(b)), Family::Analysis).unwrap();
        let rhs = s
            .synthesize(&c, Family::Analysis)
            .unwrap()
            .scale(a)
            .add(&s.synthesize(&c2, Family::Analysis).unwrap().scale(b));
        assert!(lhs.relative_distance(&rhs) < 1e-12);

        let other = spec(0.5, Window::gaussian(), 3, 64).conjugate_filter().unwrap();
        assert!(s.synthesize(&c, Family::Conjugate(&other)).is_err());
    }

    #[test]
    fn operator_is_positive() {
        let s = spec(0.5, Window::gaussian(), 2, 128);
        for seed in 0..5 {
            let f = random_spectrum(128, seed);
            let sf = s.frame_operator_apply(&f, None).unwrap();
            let ip = sf.inner(&f);
            assert!(ip.re > 0.0 && ip.im.abs() < 1e-10 * ip.re);
            let energy = s.analyze(&f).unwrap().energy();
            assert!((ip.re - energy).abs() < 1e-10 * energy);
        }
    }

    #[test]
    fn painless_operator_is_diagonal() {
        let s = painless(256);
        assert!(s.is_painless());
        let h0 = s.stack().h0();
        for seed in 0..3 {
            let f = random_spectrum(256, seed);
            let sf = s.frame_operator_apply(&f, None).unwrap();
            for (i, (a, b)) in sf.coeffs().iter().zip(f.coeffs()).enumerate() {
                let ratio = a / b;
                assert!((ratio - Complex::new(4.0 * h0[i], 0.0)).norm() < 1e-12);
                assert!(ratio.re > 0.0);
            }
        }
    }

    #[test]
    fn walnut_matches_operator() {
        for alpha in [0.0, 1.0] {
            let s = spec(alpha, Window::gaussian(), 4, 512);
            for seed in 0..4 {
                let f = random_spectrum(512, 10 + seed);
                let w = s.walnut_apply(&f, None).unwrap();
                let direct = s.frame_operator_apply(&f, None).unwrap();
                assert!(w.spectrum.relative_distance(&direct) < 1e-12);
                assert_eq!(w.dropped_norm, 0.0);
            }
            let short = s.clone().with_walnut_k_max(3);
            let f = random_spectrum(512, 99);
            let w = short.walnut_apply(&f, None).unwrap();
            let direct = s.frame_operator_apply(&f, None).unwrap();
            assert!(w.spectrum.relative_distance(&direct) < 1e-8);
        }
    }

    #[test]
    fn walnut_with_second_window() {
        let s = spec(1.0, Window::gaussian(), 4, 256);
        let psi = WindowStack::for_grid(&Window::truncated_gaussian(0.3).unwrap(), s.alpha(), 0.5, s.grid()).unwrap();
        let f = random_spectrum(256, 3);
        let a = s.walnut_apply(&f, Some(&psi)).unwrap().spectrum;
        let b = s.frame_operator_apply(&f, Some(&psi)).unwrap();
        assert!(a.relative_distance(&b) < 1e-12);
    }

    #[test]
    fn painless_walnut_needs_no_aliasing() {
        let s = painless(256).with_walnut_k_max(0);
        let f = random_spectrum(256, 8);
        let w = s.walnut_apply(&f, None).unwrap();
        assert_eq!(w.dropped_norm, 0.0);
        assert!(w.spectrum.relative_distance(&s.frame_operator_apply(&f, None).unwrap()) < 1e-14);
    }

    #[test]
    fn walnut_truncation_reports_dropped_mass() {
        let s = spec(0.0, Window::gaussian(), 1, 128).with_walnut_k_max(1);
        let f = random_spectrum(128, 1);
        let w = s.walnut_apply(&f, None).unwrap();
        let full = s.frame_operator_apply(&f, None).unwrap();
        let gap = w.spectrum.add(&full.scale(Complex::new(-1.0, 0.0))).norm();
        assert!(w.dropped_norm > 0.0);
        assert!((gap - w.dropped_norm).abs() < 1e-12 * full.norm());
    }

    #[test]
    fn gaussian_bounds() {
        let stack = WindowStack::for_grid(&Window::gaussian(), Alpha::new(1.0).unwrap(), 0.5, FrequencyGrid::new(256).unwrap()).unwrap();
        let s8 = FrameSpec::from_stack(stack.clone(), 8).unwrap();
        let r8 = s8.walnut_bounds();
        assert!(r8.h_tail < r8.h0_inf / 2.0);
        assert!(r8.a > 0.0);
        let r16 = FrameSpec::from_stack(stack.clone(), 16).unwrap().walnut_bounds();
        assert!(r16.h_tail < r8.h_tail);
        let eig = s8.frame_bounds_eigen().unwrap();
        assert!(eig.a_lower > 0.0);
        assert!(r8.a <= eig.a_lower + 1e-9 && eig.b_upper <= r8.b + 1e-9);
        let (q, r) = smallest_q_halving(&stack, 64).unwrap().unwrap();
        assert!(q <= 8 && r.h_tail < r.h0_inf / 2.0);
    }

    #[test]
    fn painless_bounds() {
        let s = painless(128);
        assert_eq!(s.walnut_bounds().h_tail, 0.0);
        let sums = s.stack().sum_bounds();
        let eig = s.frame_bounds_eigen().unwrap();
        assert!((eig.a_lower - 4.0 * sums.a_low).abs() < 1e-10);
        assert!((eig.b_upper - 4.0 * sums.b_high).abs() < 1e-10);
        let big = spec(1.0, Window::gaussian(), 4, 2048);
        assert!(matches!(big.frame_bounds_eigen(), Err(Error::GridTooLarge { .. })));
    }

    #[test]
    fn conjugate_filter_properties() {
        let s = painless(256);
        let filter = s.conjugate_filter().unwrap();
        assert!(filter.partition_of_unity_error(s.stack()) < 1e-12);
        for (o, phi) in filter.bands.iter().zip(s.stack().bands()) {
            for (a, b) in o.values.iter().zip(&phi.values) {
                assert_eq!(*a == 0.0, *b == 0.0);
            }
        }
        let g = spec(0.5, Window::gaussian(), 8, 256);
        assert!(g.conjugate_filter().unwrap().partition_of_unity_error(g.stack()) < 1e-12);
    }

    #[test]
    fn vanishing_stack_is_refused() {
        // a narrow compact window with μ = 4 leaves gaps between lattice points
        let w = Window::truncated_gaussian(0.1).unwrap();
        let s = FrameSpec::new(Alpha::new(0.0).unwrap(), &w, 4.0, 4, 64).unwrap();
        match s.conjugate_filter() {
            Err(Error::NonInvertible { frequencies }) => assert!(!frequencies.is_empty()),
            other => panic!("{other:?}"),
        }
        assert!(s.reconstruct(&random_spectrum(64, 0)).is_err());
    }

    #[test]
    fn reconstruction() {
        let s = painless(512);
        let f = random_spectrum(512, 21);
        assert!(s.reconstruct(&f).unwrap().rel_err < 1e-10);
        let e = s.frame_element(4, 9).unwrap();
        assert!(s.reconstruct(&e).unwrap().rel_err < 1e-10);
        let g = spec(1.0, Window::gaussian(), 8, 512);
        assert!(g.reconstruct(&f).unwrap().rel_err < 1e-6);
    }

    #[test]
    fn reconstruction_via_conjugate_synthesis() {
        // the operator with φ and Ψ swapped is the identity as well
        let s = painless(128);
        let filter = s.conjugate_filter().unwrap();
        let f = random_spectrum(128, 2);
        let back = s.synthesize(&s.analyze(&f).unwrap(), Family::Conjugate(&filter)).unwrap();
        assert!(back.relative_distance(&f) < 1e-10);
    }

    #[test]
    fn tail_decreases_with_q() {
        let stack = WindowStack::for_grid(&Window::gaussian(), Alpha::new(1.0).unwrap(), 0.5, FrequencyGrid::new(256).unwrap()).unwrap();
        let scan = tail_scan(&stack, &[4, 8, 16, 32]).unwrap();
        for w in scan.windows(2) {
            assert!(w[1].report.h_tail <= w[0].report.h_tail);
            assert!(w[1].ln_h_tail < w[0].ln_h_tail, "{scan:?}");
        }
        // where h_tail is representable the log form agrees with it
        assert!((scan[0].ln_h_tail - scan[0].report.h_tail.ln()).abs() < 1e-6);
    }

    #[test]
    fn single_precision_round_trip() {
        let w = Window::<f32>::truncated_gaussian(0.1).unwrap();
        let s = FrameSpec::new(Alpha::new(1.0).unwrap(), &w, 0.5, 4, 128).unwrap();
        let f = SpectralSignal::from_fn(s.grid(), |j| Complex::new((j as f32 * 0.37).sin(), (j as f32 * 0.11).cos()));
        assert!(s.reconstruct(&f).unwrap().rel_err < 1e-5);
    }
}
