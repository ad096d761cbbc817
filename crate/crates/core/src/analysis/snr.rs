//! Spectral signal-to-noise estimation of recovered binary signals.
//!
//! The smoothed output is periodogram-analyzed over a whole number of
//! signal periods, so every odd harmonic of the signal lands exactly on an
//! FFT bin and no window/leakage correction is needed. Signal power is
//! collected from those harmonic bins; everything else inside the analysis
//! band — minus DC and the carrier fundamental — counts as noise.
//!
//! A deterministic carrier that the moving average cancels exactly leaves
//! a noise floor at the double-precision level, so the ratio is reported
//! on a capped decibel scale with an `effectively_infinite` marker instead
//! of overflowing to infinity.

use crate::error::{Error, Result};
use crate::resonator::ResonatorRun;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

/// Upper bound of the reported SNR scale, in dB. Ratios at or beyond the
/// cap are flagged as effectively infinite; the mirrored lower bound keeps
/// the scale total for zero-signal traces.
pub const SNR_CAP_DB: f64 = 150.0;

/// Analysis choices for [`estimate_snr`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnrOptions {
    /// Number of odd harmonics of the signal counted as signal power
    /// (the fundamental is the first).
    pub n_harmonics: usize,
    /// Upper edge of the noise-accounting band, in Hz.
    pub band_hz: f64,
}

impl Default for SnrOptions {
    fn default() -> Self {
        Self {
            n_harmonics: 3,
            band_hz: 0.0, // resolved to 2·n_harmonics·f_s at use
        }
    }
}

impl SnrOptions {
    /// Band edge. The default stops at the even-harmonic bin just below
    /// the first *uncounted* odd harmonic, so a clean square wave carries
    /// no residual power inside the noise account, and carrier
    /// intermodulation products stay outside the band.
    fn resolved_band_hz(&self, signal_freq_hz: f64) -> f64 {
        if self.band_hz > 0.0 {
            self.band_hz
        } else {
            (2 * self.n_harmonics) as f64 * signal_freq_hz
        }
    }
}

/// Periodogram-based signal-to-noise ratio of a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralSnr {
    /// One-sided power summed over the signal's odd-harmonic bins.
    pub signal_power: f64,
    /// One-sided power summed over the remaining in-band bins.
    pub noise_power: f64,
    /// 10·log10(signal/noise), clamped to ±[`SNR_CAP_DB`].
    pub snr_db: f64,
    /// True when the noise floor vanished (ratio at or beyond the cap).
    pub effectively_infinite: bool,
    /// Upper band edge actually used, in Hz.
    pub band_hz: f64,
    /// Number of harmonic bins counted as signal.
    pub n_signal_bins: usize,
}

/// Estimates the SNR of `run.smoothed_output` around a binary signal at
/// `signal_freq_hz`.
///
/// One moving-average window is dropped from each end of the trace (edge
/// transients), the remainder is truncated to an integer number of signal
/// periods, and at least 10 such periods must survive.
pub fn estimate_snr(
    run: &ResonatorRun,
    signal_freq_hz: f64,
    opts: &SnrOptions,
) -> Result<SpectralSnr> {
    if !signal_freq_hz.is_finite() || signal_freq_hz <= 0.0 {
        return Err(Error::validation(format!(
            "signal frequency must be positive, got {signal_freq_hz}"
        )));
    }
    if opts.n_harmonics == 0 {
        return Err(Error::validation("need at least one signal harmonic"));
    }
    let rate = run.smoothed_output.sample_rate_hz();
    let band_hz = opts.resolved_band_hz(signal_freq_hz).min(rate / 2.0);
    if band_hz <= signal_freq_hz {
        return Err(Error::validation(format!(
            "analysis band {band_hz} Hz does not contain the signal frequency \
             {signal_freq_hz} Hz"
        )));
    }

    let spp = rate / signal_freq_hz;
    let m = spp.round();
    if (spp - m).abs() > 1e-9 * spp {
        return Err(Error::validation(format!(
            "sample rate {rate} Hz is not an integer multiple of the signal \
             frequency {signal_freq_hz} Hz; harmonic bins would smear"
        )));
    }
    let m = m as usize;

    let samples = run.smoothed_output.samples();
    let edge = run.window_samples;
    if samples.len() < 2 * edge + 10 * m {
        return Err(Error::validation(format!(
            "trace too short for spectral analysis: {} samples leave fewer than \
             10 signal periods after trimming {edge}-sample edges",
            samples.len()
        )));
    }
    let interior = &samples[edge..samples.len() - edge];
    let n_periods = interior.len() / m;
    let n = n_periods * m;
    let trimmed = &interior[..n];

    // Periodogram, one-sided: P[k] = |X[k]|²/n², doubled off DC/Nyquist.
    let mut buf: Vec<Complex<f64>> = trimmed.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let one_sided = |k: usize| -> f64 {
        let p = buf[k].norm_sqr() / (n as f64 * n as f64);
        if k == 0 || (n % 2 == 0 && k == half) {
            p
        } else {
            2.0 * p
        }
    };

    // The signal fundamental sits exactly on bin n_periods.
    let k_band = ((band_hz * n as f64 / rate).floor() as usize).min(half);
    let signal_bins: Vec<usize> = (0..opts.n_harmonics)
        .map(|j| (2 * j + 1) * n_periods)
        .take_while(|&k| k <= half)
        .collect();
    let n_signal_bins = signal_bins.len();

    // Carrier-fundamental bins (±1 for rounding) are excluded from the
    // noise account when a periodic carrier is present in band.
    let carrier_bins: Vec<usize> = match run.carrier_freq_hz {
        Some(f_t) => {
            let k_t = (f_t * n as f64 / rate).round() as i64;
            (k_t - 1..=k_t + 1)
                .filter(|&k| k > 0 && (k as usize) <= half)
                .map(|k| k as usize)
                .collect()
        }
        None => Vec::new(),
    };

    let signal_power: f64 = signal_bins.iter().map(|&k| one_sided(k)).sum();
    let noise_power: f64 = (1..=k_band)
        .filter(|k| !signal_bins.contains(k) && !carrier_bins.contains(k))
        .map(one_sided)
        .sum();

    let (snr_db, effectively_infinite) = if signal_power == 0.0 {
        (-SNR_CAP_DB, false)
    } else if noise_power == 0.0 {
        (SNR_CAP_DB, true)
    } else {
        let db = 10.0 * (signal_power / noise_power).log10();
        if db >= SNR_CAP_DB {
            (SNR_CAP_DB, true)
        } else {
            (db.max(-SNR_CAP_DB), false)
        }
    };

    Ok(SpectralSnr {
        signal_power,
        noise_power,
        snr_db,
        effectively_infinite,
        band_hz,
        n_signal_bins,
    })
}
