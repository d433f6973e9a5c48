//! Alpha-DOST orthonormal bases and non-stationary DOST frames on a
//! periodized model.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the `*64`/`*32` aliases below fix the common choices.

pub mod acceptance;
pub mod container;
pub mod dost;
pub mod error;
pub mod frame;
pub mod partition;
pub mod scalar;
pub mod spectral;
pub mod tiling;
pub mod window;

pub use error::{Error, Result};
pub use partition::{Alpha, AlphaPartition, PartitionInterval};
pub use rustfft::num_complex::Complex;
pub use scalar::Real;
pub use spectral::{from_spectrum, to_spectrum, FrequencyGrid, SpectralSignal, TimeSamples};
pub use window::{Window, WindowStack};

pub type SpectralSignal64 = SpectralSignal<f64>;
pub type SpectralSignal32 = SpectralSignal<f32>;
pub type TimeSamples64 = TimeSamples<f64>;
pub type TimeSamples32 = TimeSamples<f32>;
pub type Window64 = Window<f64>;
pub type Window32 = Window<f32>;
pub type WindowStack64 = WindowStack<f64>;
pub type WindowStack32 = WindowStack<f32>;
pub type DostBasis64 = dost::DostBasis<f64>;
pub type DostBasis32 = dost::DostBasis<f32>;
pub type FrameSpec64 = frame::FrameSpec<f64>;
pub type FrameSpec32 = frame::FrameSpec<f32>;
pub type NdFrameSpec64 = tiling::NdFrameSpec<f64>;
pub type NdFrameSpec32 = tiling::NdFrameSpec<f32>;
