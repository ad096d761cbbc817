//! Waveform generation: weak binary signals and the carrier waves
//! (triangle, sawtooth, sine, Gaussian noise) that are mixed with them at
//! the input of a threshold device.
//!
//! Periodic carriers are generated with an integer number of samples per
//! period, so traces are *exactly* periodic in memory. This is what lets a
//! moving average over whole carrier periods null the carrier without
//! leakage, and it makes spectral bins of the signal land exactly on DFT
//! bins downstream.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Uniformly sampled amplitude trace; the common currency between the
/// signal, carrier, and device stages.
///
/// Invariants (enforced on construction): a positive, finite sample rate,
/// at least one sample, and finite sample values.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    sample_rate_hz: f64,
    samples: Vec<f64>,
}

impl SampledSignal {
    /// Wraps a raw sample buffer, validating the trace invariants.
    pub fn new(sample_rate_hz: f64, samples: Vec<f64>) -> Result<Self> {
        if !sample_rate_hz.is_finite() || sample_rate_hz <= 0.0 {
            return Err(Error::validation(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::validation("trace must contain at least one sample"));
        }
        if let Some(bad) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::validation(format!(
                "sample {bad} is not finite"
            )));
        }
        Ok(Self {
            sample_rate_hz,
            samples,
        })
    }

    /// Constant-valued trace of `n` samples.
    pub fn constant(sample_rate_hz: f64, n: usize, value: f64) -> Result<Self> {
        Self::new(sample_rate_hz, vec![value; n])
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; traces are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Time in seconds of sample `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate_hz
    }
}

/// Two-level message signal: a square wave, or a single centered pulse
/// when `pulse_width_s` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinarySignalSpec {
    /// Repetition rate of the square wave, Hz.
    pub frequency_hz: f64,
    /// Level during the active phase.
    pub high_value: f64,
    /// Level during the idle phase (defaults to 0).
    #[serde(default)]
    pub low_value: f64,
    /// Fraction of each period spent at `high_value` (defaults to 0.5).
    #[serde(default = "default_duty")]
    pub duty: f64,
    /// If set, emit one `high_value` pulse of this width, centered in the
    /// trace, instead of a periodic wave.
    #[serde(default)]
    pub pulse_width_s: Option<f64>,
}

fn default_duty() -> f64 {
    0.5
}

impl BinarySignalSpec {
    /// 50%-duty square wave between 0 and `high_value`.
    pub fn square(frequency_hz: f64, high_value: f64) -> Self {
        Self {
            frequency_hz,
            high_value,
            low_value: 0.0,
            duty: 0.5,
            pulse_width_s: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.frequency_hz.is_finite() || self.frequency_hz <= 0.0 {
            return Err(Error::validation(format!(
                "signal frequency must be positive, got {}",
                self.frequency_hz
            )));
        }
        if !self.high_value.is_finite() || !self.low_value.is_finite() {
            return Err(Error::validation("signal levels must be finite"));
        }
        if self.high_value < self.low_value {
            return Err(Error::validation(format!(
                "high level {} is below low level {}",
                self.high_value, self.low_value
            )));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(Error::validation(format!(
                "duty must lie in (0, 1), got {}",
                self.duty
            )));
        }
        if let Some(w) = self.pulse_width_s {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::validation(format!(
                    "pulse width must be positive, got {w}"
                )));
            }
        }
        Ok(())
    }
}

/// Carrier waveform. Deterministic kinds span exactly [0, amplitude];
/// for `GaussianNoise` the amplitude is the RMS value of a zero-mean,
/// white Gaussian trace (a flat-spectrum stand-in for a broadband
/// stimulus), reproducible from its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CarrierSpec {
    Triangle {
        frequency_hz: f64,
        amplitude: f64,
        /// Phase in radians; 0 puts the waveform minimum at t = 0.
        #[serde(default)]
        phase: f64,
    },
    Sawtooth {
        frequency_hz: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    Sine {
        frequency_hz: f64,
        amplitude: f64,
        /// Phase in radians for 0.5·A·(1 + sin(2πft + phase)); the default
        /// of -π/2 puts the waveform minimum at t = 0 like the other kinds.
        #[serde(default = "sine_default_phase")]
        phase: f64,
    },
    GaussianNoise { amplitude: f64, seed: u64 },
}

fn sine_default_phase() -> f64 {
    -FRAC_PI_2
}

/// Data-free tag for a carrier waveform, used when sweeping amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarrierKind {
    Triangle,
    Sawtooth,
    Sine,
    GaussianNoise,
}

impl std::fmt::Display for CarrierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            CarrierKind::Triangle => "triangle",
            CarrierKind::Sawtooth => "sawtooth",
            CarrierKind::Sine => "sine",
            CarrierKind::GaussianNoise => "gaussian_noise",
        };
        f.write_str(name)
    }
}

impl CarrierSpec {
    pub fn triangle(frequency_hz: f64, amplitude: f64) -> Self {
        CarrierSpec::Triangle {
            frequency_hz,
            amplitude,
            phase: 0.0,
        }
    }

    pub fn sawtooth(frequency_hz: f64, amplitude: f64) -> Self {
        CarrierSpec::Sawtooth {
            frequency_hz,
            amplitude,
            phase: 0.0,
        }
    }

    pub fn sine(frequency_hz: f64, amplitude: f64) -> Self {
        CarrierSpec::Sine {
            frequency_hz,
            amplitude,
            phase: sine_default_phase(),
        }
    }

    pub fn gaussian_noise(amplitude: f64, seed: u64) -> Self {
        CarrierSpec::GaussianNoise { amplitude, seed }
    }

    pub fn kind(&self) -> CarrierKind {
        match self {
            CarrierSpec::Triangle { .. } => CarrierKind::Triangle,
            CarrierSpec::Sawtooth { .. } => CarrierKind::Sawtooth,
            CarrierSpec::Sine { .. } => CarrierKind::Sine,
            CarrierSpec::GaussianNoise { .. } => CarrierKind::GaussianNoise,
        }
    }

    /// Peak amplitude (deterministic kinds) or RMS amplitude (noise).
    pub fn amplitude(&self) -> f64 {
        match *self {
            CarrierSpec::Triangle { amplitude, .. }
            | CarrierSpec::Sawtooth { amplitude, .. }
            | CarrierSpec::Sine { amplitude, .. }
            | CarrierSpec::GaussianNoise { amplitude, .. } => amplitude,
        }
    }

    /// Fundamental frequency for periodic kinds; `None` for noise.
    pub fn frequency_hz(&self) -> Option<f64> {
        match *self {
            CarrierSpec::Triangle { frequency_hz, .. }
            | CarrierSpec::Sawtooth { frequency_hz, .. }
            | CarrierSpec::Sine { frequency_hz, .. } => Some(frequency_hz),
            CarrierSpec::GaussianNoise { .. } => None,
        }
    }

    /// Same waveform with a different amplitude; used by amplitude sweeps
    /// and by the simulated observer, which scales one template per trial.
    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            CarrierSpec::Triangle { amplitude: a, .. }
            | CarrierSpec::Sawtooth { amplitude: a, .. }
            | CarrierSpec::Sine { amplitude: a, .. }
            | CarrierSpec::GaussianNoise { amplitude: a, .. } => *a = amplitude,
        }
        spec
    }

    /// Same noise waveform with a different seed; no-op for periodic kinds.
    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut spec = self.clone();
        if let CarrierSpec::GaussianNoise { seed, .. } = &mut spec {
            *seed = new_seed;
        }
        spec
    }

    /// Default sampling rate of 256 samples per carrier period; `None`
    /// for noise, which has no natural period.
    pub fn default_sample_rate_hz(&self) -> Option<f64> {
        self.frequency_hz().map(|f| 256.0 * f)
    }

    pub fn validate(&self) -> Result<()> {
        let amplitude = self.amplitude();
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::validation(format!(
                "carrier amplitude must be non-negative, got {amplitude}"
            )));
        }
        if let Some(f) = self.frequency_hz() {
            if !f.is_finite() || f <= 0.0 {
                return Err(Error::validation(format!(
                    "carrier frequency must be positive, got {f}"
                )));
            }
        }
        if let CarrierSpec::Triangle { phase, .. }
        | CarrierSpec::Sawtooth { phase, .. }
        | CarrierSpec::Sine { phase, .. } = self
        {
            if !phase.is_finite() {
                return Err(Error::validation("carrier phase must be finite"));
            }
        }
        Ok(())
    }
}

/// Number of samples for a requested duration, rejecting empty traces.
fn trace_len(duration_s: f64, sample_rate_hz: f64) -> Result<usize> {
    if !duration_s.is_finite() || duration_s <= 0.0 {
        return Err(Error::validation(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    if !sample_rate_hz.is_finite() || sample_rate_hz <= 0.0 {
        return Err(Error::validation(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let n = (duration_s * sample_rate_hz).round();
    if n < 1.0 {
        return Err(Error::validation(format!(
            "duration {duration_s} s at {sample_rate_hz} Hz yields an empty trace"
        )));
    }
    Ok(n as usize)
}

/// Samples per period if the rate is an integer multiple of `frequency_hz`.
fn integer_samples_per_period(sample_rate_hz: f64, frequency_hz: f64) -> Option<usize> {
    let spp = sample_rate_hz / frequency_hz;
    let rounded = spp.round();
    if (spp - rounded).abs() <= 1e-9 * spp && rounded >= 1.0 {
        Some(rounded as usize)
    } else {
        None
    }
}

/// Renders a binary signal to a trace.
///
/// Requires at least 10 samples per signal period so edges stay sharp
/// relative to the waveform. In pulse mode the pulse occupies exactly
/// `round(pulse_width_s · sample_rate_hz)` samples, centered in the trace.
pub fn generate_binary(
    spec: &BinarySignalSpec,
    duration_s: f64,
    sample_rate_hz: f64,
) -> Result<SampledSignal> {
    spec.validate()?;
    let n = trace_len(duration_s, sample_rate_hz)?;

    if let Some(width_s) = spec.pulse_width_s {
        if width_s > duration_s {
            return Err(Error::validation(format!(
                "pulse width {width_s} s exceeds trace duration {duration_s} s"
            )));
        }
        let n_pulse = ((width_s * sample_rate_hz).round() as usize).min(n);
        let start = (n - n_pulse) / 2;
        let mut samples = vec![spec.low_value; n];
        samples[start..start + n_pulse].fill(spec.high_value);
        return SampledSignal::new(sample_rate_hz, samples);
    }

    if sample_rate_hz < 10.0 * spec.frequency_hz {
        return Err(Error::validation(format!(
            "sample rate {sample_rate_hz} Hz is below 10 samples per signal period \
             (signal at {} Hz)",
            spec.frequency_hz
        )));
    }

    // With an integer number of samples per period the phase is computed
    // from `i mod period`, which keeps long traces free of float drift.
    let samples: Vec<f64> = match integer_samples_per_period(sample_rate_hz, spec.frequency_hz) {
        Some(m) => {
            let cut = spec.duty * m as f64;
            (0..n)
                .map(|i| {
                    if ((i % m) as f64) < cut {
                        spec.high_value
                    } else {
                        spec.low_value
                    }
                })
                .collect()
        }
        None => (0..n)
            .map(|i| {
                let phase = (i as f64 * spec.frequency_hz / sample_rate_hz).fract();
                if phase < spec.duty {
                    spec.high_value
                } else {
                    spec.low_value
                }
            })
            .collect(),
    };
    SampledSignal::new(sample_rate_hz, samples)
}

/// Renders a carrier to a trace.
///
/// Periodic kinds require the sample rate to be an integer multiple of the
/// carrier frequency with at least 64 samples per period; the resulting
/// trace then repeats exactly, sample for sample, every period.
pub fn generate_carrier(
    spec: &CarrierSpec,
    duration_s: f64,
    sample_rate_hz: f64,
) -> Result<SampledSignal> {
    spec.validate()?;
    let n = trace_len(duration_s, sample_rate_hz)?;
    let amplitude = spec.amplitude();

    let samples: Vec<f64> = match *spec {
        CarrierSpec::GaussianNoise { seed, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    amplitude * z
                })
                .collect()
        }
        CarrierSpec::Triangle {
            frequency_hz,
            phase,
            ..
        } => {
            let m = periodic_samples_per_period(sample_rate_hz, frequency_hz)?;
            let shift = phase / (2.0 * PI);
            (0..n)
                .map(|i| {
                    let p = ((i % m) as f64 / m as f64 + shift).rem_euclid(1.0);
                    let unit = if p < 0.5 { 2.0 * p } else { 2.0 * (1.0 - p) };
                    amplitude * unit
                })
                .collect()
        }
        CarrierSpec::Sawtooth {
            frequency_hz,
            phase,
            ..
        } => {
            let m = periodic_samples_per_period(sample_rate_hz, frequency_hz)?;
            let shift = phase / (2.0 * PI);
            (0..n)
                .map(|i| {
                    let p = ((i % m) as f64 / m as f64 + shift).rem_euclid(1.0);
                    amplitude * p
                })
                .collect()
        }
        CarrierSpec::Sine {
            frequency_hz,
            phase,
            ..
        } => {
            let m = periodic_samples_per_period(sample_rate_hz, frequency_hz)?;
            (0..n)
                .map(|i| {
                    let angle = 2.0 * PI * ((i % m) as f64 / m as f64) + phase;
                    0.5 * amplitude * (1.0 + angle.sin())
                })
                .collect()
        }
    };
    SampledSignal::new(sample_rate_hz, samples)
}

fn periodic_samples_per_period(sample_rate_hz: f64, frequency_hz: f64) -> Result<usize> {
    if sample_rate_hz < 64.0 * frequency_hz {
        return Err(Error::validation(format!(
            "sample rate {sample_rate_hz} Hz gives fewer than 64 samples per carrier \
             period at {frequency_hz} Hz"
        )));
    }
    integer_samples_per_period(sample_rate_hz, frequency_hz).ok_or_else(|| {
        Error::validation(format!(
            "sample rate {sample_rate_hz} Hz is not an integer multiple of the carrier \
             frequency {frequency_hz} Hz; integer samples per period are required for \
             exact carrier cancellation"
        ))
    })
}

/// Sample-wise sum of two traces with identical rate and length.
pub fn mix(a: &SampledSignal, b: &SampledSignal) -> Result<SampledSignal> {
    if a.sample_rate_hz != b.sample_rate_hz {
        return Err(Error::validation(format!(
            "cannot mix traces with different sample rates ({} Hz vs {} Hz)",
            a.sample_rate_hz, b.sample_rate_hz
        )));
    }
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "cannot mix traces with different lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let samples = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| x + y)
        .collect();
    SampledSignal::new(a.sample_rate_hz, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn square_wave_splits_period_between_levels() {
        let spec = BinarySignalSpec::square(1.0, 0.2);
        let trace = generate_binary(&spec, 1.0, 1000.0).unwrap();
        assert_eq!(trace.len(), 1000);
        assert!(trace.samples()[..500].iter().all(|&s| s == 0.2));
        assert!(trace.samples()[500..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn zero_levels_yield_all_zero_trace() {
        let spec = BinarySignalSpec {
            frequency_hz: 2.0,
            high_value: 0.0,
            low_value: 0.0,
            duty: 0.5,
            pulse_width_s: None,
        };
        let trace = generate_binary(&spec, 1.0, 500.0).unwrap();
        assert!(trace.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn pulse_mode_emits_exactly_the_requested_samples() {
        let spec = BinarySignalSpec {
            frequency_hz: 1.0,
            high_value: 1.0,
            low_value: 0.0,
            duty: 0.5,
            pulse_width_s: Some(0.040),
        };
        let rate = 10_000.0;
        let trace = generate_binary(&spec, 2.04, rate).unwrap();
        let n_high = trace.samples().iter().filter(|&&s| s == 1.0).count();
        assert_eq!(n_high, (0.040 * rate) as usize);
        // Centered: first and last high samples are equidistant from the ends.
        let first = trace.samples().iter().position(|&s| s == 1.0).unwrap();
        let last = trace.samples().iter().rposition(|&s| s == 1.0).unwrap();
        assert!((first as i64 - (trace.len() - 1 - last) as i64).abs() <= 1);
    }

    #[test]
    fn triangle_slope_matches_two_amplitude_f() {
        let spec = CarrierSpec::triangle(80.0, 1.0);
        let rate = 256.0 * 80.0;
        let trace = generate_carrier(&spec, 0.05, rate).unwrap();
        let s = trace.samples();
        // Finite-difference slope away from the peaks is ±2·f·A.
        let expected = 2.0 * 80.0 * 1.0;
        for i in 1..200 {
            let slope = (s[i] - s[i - 1]) * rate;
            assert_relative_eq!(slope.abs(), expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn triangle_mean_over_period_is_half_amplitude() {
        let spec = CarrierSpec::triangle(50.0, 0.8);
        let rate = 256.0 * 50.0;
        let trace = generate_carrier(&spec, 1.0 / 50.0, rate).unwrap();
        let mean: f64 = trace.samples().iter().sum::<f64>() / trace.len() as f64;
        assert_relative_eq!(mean, 0.4, max_relative = 1e-12);
    }

    #[test]
    fn sine_spans_zero_to_amplitude_with_fundamental_at_carrier() {
        let f = 80.0;
        let rate = 256.0 * f;
        let trace = generate_carrier(&CarrierSpec::sine(f, 1.0), 0.1, rate).unwrap();
        let min = trace.samples().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = trace
            .samples()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(min.abs() < 1e-12, "minimum should be 0, got {min}");
        assert!((max - 1.0).abs() < 1e-12, "maximum should be 1, got {max}");

        // Correlating against the carrier frequency and a neighbor shows the
        // fundamental carries the power.
        let n = trace.len();
        let power_at = |freq: f64| -> f64 {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &s) in trace.samples().iter().enumerate() {
                let a = 2.0 * PI * freq * i as f64 / rate;
                re += s * a.cos();
                im += s * a.sin();
            }
            (re * re + im * im) / (n * n) as f64
        };
        assert!(power_at(f) > 100.0 * power_at(2.0 * f));
        assert!(power_at(f) > 100.0 * power_at(3.0 * f));
    }

    #[test]
    fn sawtooth_stays_within_amplitude_band() {
        let trace =
            generate_carrier(&CarrierSpec::sawtooth(100.0, 0.7), 0.05, 12_800.0).unwrap();
        assert!(trace
            .samples()
            .iter()
            .all(|&s| (0.0..=0.7).contains(&s)));
    }

    #[test]
    fn noise_rms_tracks_requested_amplitude() {
        let spec = CarrierSpec::gaussian_noise(0.3, 42);
        let trace = generate_carrier(&spec, 10.0, 8000.0).unwrap();
        let ms: f64 =
            trace.samples().iter().map(|s| s * s).sum::<f64>() / trace.len() as f64;
        let rms = ms.sqrt();
        assert!(
            (rms - 0.3).abs() / 0.3 < 0.02,
            "sample RMS {rms} deviates more than 2% from 0.3"
        );
    }

    #[test]
    fn noise_is_reproducible_from_seed() {
        let spec = CarrierSpec::gaussian_noise(0.5, 7);
        let a = generate_carrier(&spec, 0.5, 4000.0).unwrap();
        let b = generate_carrier(&spec, 0.5, 4000.0).unwrap();
        assert_eq!(a.samples(), b.samples());
        let c = generate_carrier(&spec.with_seed(8), 0.5, 4000.0).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn mix_adds_samplewise_and_peaks_at_sum_of_amplitudes() {
        let rate = 256.0 * 80.0;
        let signal = generate_binary(&BinarySignalSpec::square(5.0, 0.2), 0.2, rate).unwrap();
        let carrier = generate_carrier(&CarrierSpec::triangle(80.0, 1.0), 0.2, rate).unwrap();
        let mixed = mix(&signal, &carrier).unwrap();
        let max = mixed
            .samples()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(max, 1.2, max_relative = 1e-9);
    }

    #[test]
    fn mix_rejects_mismatched_traces() {
        let a = SampledSignal::constant(100.0, 10, 1.0).unwrap();
        let b = SampledSignal::constant(200.0, 10, 1.0).unwrap();
        assert!(matches!(mix(&a, &b), Err(Error::Validation(_))));
        let c = SampledSignal::constant(100.0, 11, 1.0).unwrap();
        assert!(matches!(mix(&a, &c), Err(Error::Validation(_))));
    }

    #[test]
    fn generation_rejects_bad_parameters() {
        let sig = BinarySignalSpec::square(10.0, 0.1);
        assert!(generate_binary(&sig, 0.0, 1000.0).is_err());
        assert!(generate_binary(&sig, -1.0, 1000.0).is_err());
        assert!(generate_binary(&sig, 1.0, 50.0).is_err()); // < 10 samples/period

        let car = CarrierSpec::triangle(80.0, 1.0);
        assert!(generate_carrier(&car, 1.0, 80.0 * 32.0).is_err()); // < 64/period
        assert!(generate_carrier(&car, 1.0, 80.0 * 100.5).is_err()); // non-integer
        assert!(generate_carrier(&CarrierSpec::triangle(80.0, -1.0), 1.0, 20480.0).is_err());
    }

    #[test]
    fn trace_construction_rejects_bad_buffers() {
        assert!(SampledSignal::new(0.0, vec![1.0]).is_err());
        assert!(SampledSignal::new(100.0, vec![]).is_err());
        assert!(SampledSignal::new(100.0, vec![f64::NAN]).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn periodic_carriers() -> impl Strategy<Value = CarrierSpec> {
            (10.0f64..200.0, 0.01f64..5.0, -3.0f64..3.0, 0usize..3).prop_map(
                |(f, a, phase, kind)| match kind {
                    0 => CarrierSpec::Triangle {
                        frequency_hz: f,
                        amplitude: a,
                        phase,
                    },
                    1 => CarrierSpec::Sawtooth {
                        frequency_hz: f,
                        amplitude: a,
                        phase,
                    },
                    _ => CarrierSpec::Sine {
                        frequency_hz: f,
                        amplitude: a,
                        phase,
                    },
                },
            )
        }

        proptest! {
            // Periodic carriers repeat exactly: equal samples one period apart.
            #[test]
            fn carriers_are_exactly_periodic(spec in periodic_carriers(), periods in 2usize..6) {
                let f = spec.frequency_hz().unwrap();
                let m = 128usize;
                let rate = m as f64 * f;
                let trace = generate_carrier(&spec, periods as f64 / f, rate).unwrap();
                let s = trace.samples();
                for i in 0..s.len() - m {
                    prop_assert_eq!(s[i], s[i + m]);
                }
            }

            // Deterministic carriers never leave [0, amplitude].
            #[test]
            fn carriers_stay_in_band(spec in periodic_carriers()) {
                let f = spec.frequency_hz().unwrap();
                let trace = generate_carrier(&spec, 3.0 / f, 128.0 * f).unwrap();
                let a = spec.amplitude();
                for &s in trace.samples() {
                    prop_assert!((-1e-12..=a + 1e-12).contains(&s));
                }
            }

            // Mixing commutes sample for sample.
            #[test]
            fn mix_commutes(seed in 0u64..1000, amp in 0.01f64..2.0) {
                let rate = 128.0 * 80.0;
                let a = generate_carrier(&CarrierSpec::gaussian_noise(amp, seed), 0.05, rate).unwrap();
                let b = generate_carrier(&CarrierSpec::triangle(80.0, amp), 0.05, rate).unwrap();
                let ab = mix(&a, &b).unwrap();
                let ba = mix(&b, &a).unwrap();
                prop_assert_eq!(ab.samples(), ba.samples());
            }
        }
    }
}
