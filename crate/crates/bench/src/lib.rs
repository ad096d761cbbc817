//! Shared fixtures for the benchmark suite: one mid-sized configuration
//! per hot path, sized so a benchmark iteration does meaningful work
//! without taking seconds.

use darsim_core::analysis::{SnrOptions, SweepBase};
use darsim_core::psychophysics::{ObserverModel, QuestParams, SessionDesign};
use darsim_core::resonator::{LowPassConfig, ThresholdElementConfig};
use darsim_core::signals::{generate_binary, generate_carrier, BinarySignalSpec, CarrierSpec};
use darsim_core::SampledSignal;

/// Carrier fundamental shared by the deterministic fixtures.
pub const CARRIER_HZ: f64 = 80.0;
/// 256 samples per carrier period.
pub const SAMPLE_RATE_HZ: f64 = 256.0 * CARRIER_HZ;
/// Twelve signal periods at 2.5 Hz.
pub const DURATION_S: f64 = 4.8;

pub fn square_signal() -> BinarySignalSpec {
    BinarySignalSpec::square(2.5, 0.2)
}

pub fn lcd() -> ThresholdElementConfig {
    ThresholdElementConfig::Lcd {
        threshold: 0.5,
        spike_height: 1.0,
        spike_duration_s: 0.001,
    }
}

pub fn comparator() -> ThresholdElementConfig {
    ThresholdElementConfig::Comparator {
        threshold: 0.5,
        high_output: 1.0,
    }
}

/// Rendered signal and triangle-carrier traces for pipeline benchmarks.
pub fn rendered_traces(u_t: f64) -> (SampledSignal, SampledSignal) {
    let signal = generate_binary(&square_signal(), DURATION_S, SAMPLE_RATE_HZ)
        .expect("valid signal fixture");
    let carrier = generate_carrier(
        &CarrierSpec::triangle(CARRIER_HZ, u_t),
        DURATION_S,
        SAMPLE_RATE_HZ,
    )
    .expect("valid carrier fixture");
    (signal, carrier)
}

pub fn periods_lpf() -> LowPassConfig {
    LowPassConfig::carrier_periods(2)
}

/// Sweep context with a triangle carrier.
pub fn triangle_sweep_base() -> SweepBase {
    SweepBase {
        signal: square_signal(),
        duration_s: DURATION_S,
        sample_rate_hz: SAMPLE_RATE_HZ,
        te: comparator(),
        lpf: periods_lpf(),
        carrier_template: CarrierSpec::triangle(CARRIER_HZ, 1.0),
        snr: SnrOptions::default(),
        linearity_grid: None,
    }
}

/// Sweep context with a Gaussian carrier at a coarser rate (the noise has
/// no period to resolve, so 2560 Hz keeps iterations affordable).
pub fn noise_sweep_base() -> SweepBase {
    SweepBase {
        signal: square_signal(),
        duration_s: DURATION_S,
        sample_rate_hz: 2560.0,
        te: comparator(),
        lpf: LowPassConfig::seconds(0.0125),
        carrier_template: CarrierSpec::gaussian_noise(1.0, 0),
        snr: SnrOptions::default(),
        linearity_grid: None,
    }
}

pub fn default_quest() -> QuestParams {
    QuestParams::default()
}

pub fn default_design() -> SessionDesign {
    SessionDesign::default()
}

pub fn weibull_observer() -> ObserverModel {
    ObserverModel::weibull(0.3)
}

/// Deterministic paired samples with a small shift and some spread.
pub fn paired_samples(n: usize) -> (Vec<f64>, Vec<f64>) {
    let control: Vec<f64> = (0..n).map(|i| 0.5 + 0.012 * (i as f64) % 0.09).collect();
    let test: Vec<f64> = control
        .iter()
        .enumerate()
        .map(|(i, c)| c - 0.03 - 0.002 * ((i % 5) as f64))
        .collect();
    (control, test)
}
