//! Simulation of weak-signal recovery through threshold devices, with
//! spectral analysis and an in-silico psychophysics harness.
//!
//! The library covers four layers:
//!
//! * [`signals`] — sampled binary test signals and carriers (triangle,
//!   sawtooth, sine, Gaussian noise).
//! * [`resonator`] — threshold elements (level-crossing detector,
//!   comparator), moving-average smoothing, closed-form output
//!   predictions, and operating-region classification.
//! * [`analysis`] — transfer linearity, spectral signal-to-noise ratio,
//!   carrier-amplitude sweeps, and resampling statistics.
//! * [`psychophysics`] — an adaptive staircase, a simulated observer built
//!   on the resonator model, and forced-choice session orchestration.

pub mod analysis;
pub mod error;
pub mod psychophysics;
pub mod resonator;
pub mod signals;

pub use error::{Error, Result};
pub use signals::SampledSignal;
