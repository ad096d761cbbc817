//! Synthetic observers for the four-alternative forced-choice detection
//! task.
//!
//! Two observer families are modeled:
//!
//! * **Weibull** — responds correctly with a fixed psychometric
//!   probability of the stimulus contrast, independent of the carrier.
//!   Serves as the carrier-blind control.
//! * **Resonator** — four independent sensory channels, each a threshold
//!   device driven by the carrier; the channel under the target quadrant
//!   additionally receives a signal level proportional to the stimulus
//!   contrast. The response is the channel with the largest smoothed
//!   output level plus Gaussian internal noise.
//!
//! The resonator observer evaluates channels with closed-form steady-state
//! levels rather than per-trial trace simulation; [`validate_closed_form`]
//! cross-checks those formulas against full pipeline runs.

use crate::analysis::stats::normal_cdf;
use crate::error::{Error, Result};
use crate::resonator::{
    measure_interior_levels, run_pipeline, LowPassConfig, ThresholdElementConfig,
};
use crate::signals::{CarrierKind, CarrierSpec, SampledSignal};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Number of response alternatives in the forced-choice task.
pub const N_QUADRANTS: usize = 4;

/// A simulated observer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObserverModel {
    /// Carrier-blind observer with accuracy
    /// γ + (1 − γ − δ)·(1 − exp(−(c/T)^β)) at contrast c, which sits
    /// exactly at the chance floor γ for c = 0.
    Weibull {
        true_threshold: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
    },
    /// Four threshold-device channels; channel argmax after internal noise.
    Resonator {
        /// Maps stimulus contrast c to a channel signal level U_s = k·c.
        contrast_gain: f64,
        te: ThresholdElementConfig,
        /// Smoothing stage used by the full-simulation cross-check.
        lpf: LowPassConfig,
        /// Carrier shape and frequency; amplitude is supplied per trial.
        carrier_template: CarrierSpec,
        /// SD of the additive Gaussian noise on each channel's decision
        /// variable.
        internal_noise_sd: f64,
        /// Number of channels; the task fixes this at four.
        #[serde(default = "default_channels")]
        n_channels: usize,
    },
}

fn default_channels() -> usize {
    N_QUADRANTS
}

impl ObserverModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ObserverModel::Weibull {
                true_threshold,
                beta,
                gamma,
                delta,
            } => {
                if !(*true_threshold > 0.0 && *true_threshold < 1.0) {
                    return Err(Error::validation(format!(
                        "true threshold must lie in (0, 1), got {true_threshold}"
                    )));
                }
                if !beta.is_finite() || *beta <= 0.0 {
                    return Err(Error::validation("steepness must be positive"));
                }
                if !(*gamma > 0.0 && *gamma < 1.0 && *delta >= 0.0 && gamma + delta < 1.0) {
                    return Err(Error::validation(
                        "chance and lapse rates must leave room between floor and ceiling",
                    ));
                }
            }
            ObserverModel::Resonator {
                contrast_gain,
                te,
                internal_noise_sd,
                n_channels,
                carrier_template,
                ..
            } => {
                te.validate()?;
                if !contrast_gain.is_finite() || *contrast_gain <= 0.0 {
                    return Err(Error::validation(format!(
                        "contrast gain must be positive, got {contrast_gain}"
                    )));
                }
                if !internal_noise_sd.is_finite() || *internal_noise_sd <= 0.0 {
                    return Err(Error::validation(format!(
                        "internal noise SD must be positive, got {internal_noise_sd}"
                    )));
                }
                if *n_channels < 2 {
                    return Err(Error::validation(
                        "need at least two channels for a forced choice",
                    ));
                }
                if matches!(te, ThresholdElementConfig::Lcd { .. })
                    && carrier_template.kind() == CarrierKind::GaussianNoise
                {
                    return Err(Error::validation(
                        "the spike-train level formula needs a periodic carrier; \
                         a noise carrier has no per-period crossing count",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Convenience constructor: carrier-blind observer with the task's
    /// chance and lapse rates.
    pub fn weibull(true_threshold: f64) -> Self {
        ObserverModel::Weibull {
            true_threshold,
            beta: 3.0,
            gamma: 0.25,
            delta: 0.01,
        }
    }
}

/// Outcome of a single trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObserverResponse {
    pub chosen_quadrant: usize,
    pub correct: bool,
}

/// Steady-state smoothed output level of a threshold device driven by a
/// constant signal `u_s` plus a carrier of amplitude `u_t` (peak for
/// deterministic kinds, RMS for Gaussian noise).
///
/// Comparator: the level is the high output scaled by the fraction of
/// time the summed input spends above threshold — a piecewise-linear duty
/// for triangle/sawtooth, an arccos law for the sine, and a Gaussian tail
/// probability for noise. LCD: one spike per carrier period while the
/// carrier can cross threshold, giving f_t·τ·height, and zero otherwise.
pub fn closed_form_level(
    te: &ThresholdElementConfig,
    carrier: &CarrierSpec,
    u_s: f64,
    u_t: f64,
) -> Result<f64> {
    if !u_s.is_finite() || !u_t.is_finite() || u_t < 0.0 {
        return Err(Error::validation(format!(
            "signal level {u_s} and carrier amplitude {u_t} must be finite \
             (amplitude non-negative)"
        )));
    }
    match *te {
        ThresholdElementConfig::Comparator {
            threshold,
            high_output,
        } => {
            let duty = match carrier.kind() {
                _ if u_t == 0.0 => f64::from(u8::from(u_s > threshold)),
                CarrierKind::Triangle | CarrierKind::Sawtooth => {
                    ((u_t - threshold + u_s) / u_t).clamp(0.0, 1.0)
                }
                CarrierKind::Sine => {
                    let headroom = threshold - u_s;
                    if headroom <= 0.0 {
                        1.0
                    } else if headroom >= u_t {
                        0.0
                    } else {
                        1.0 - (1.0 - 2.0 * headroom / u_t).acos() / std::f64::consts::PI
                    }
                }
                CarrierKind::GaussianNoise => normal_cdf((u_s - threshold) / u_t),
            };
            Ok(high_output * duty)
        }
        ThresholdElementConfig::Lcd {
            threshold,
            spike_height,
            spike_duration_s,
        } => {
            let f_t = carrier.frequency_hz().ok_or_else(|| {
                Error::validation(
                    "the spike-train level formula needs a periodic carrier; \
                     a noise carrier has no per-period crossing count",
                )
            })?;
            te.validate_carrier_frequency(f_t)?;
            // One upward crossing per period needs the input both below
            // and above threshold within the period.
            let crosses = u_s <= threshold && u_s + u_t > threshold;
            Ok(if crosses {
                f_t * spike_duration_s * spike_height
            } else {
                0.0
            })
        }
    }
}

/// Simulates one forced-choice trial.
///
/// The target quadrant must be in `0..N_QUADRANTS` (or `0..n_channels`
/// for a resonator observer with a nonstandard channel count).
pub fn observer_respond<R: Rng + ?Sized>(
    observer: &ObserverModel,
    contrast: f64,
    carrier_amplitude: f64,
    target_quadrant: usize,
    rng: &mut R,
) -> Result<ObserverResponse> {
    if !(0.0..=1.0).contains(&contrast) {
        return Err(Error::validation(format!(
            "contrast must lie in [0, 1], got {contrast}"
        )));
    }
    match observer {
        ObserverModel::Weibull {
            true_threshold,
            beta,
            gamma,
            delta,
        } => {
            if target_quadrant >= N_QUADRANTS {
                return Err(Error::validation(format!(
                    "target quadrant {target_quadrant} out of range"
                )));
            }
            let p = gamma
                + (1.0 - gamma - delta) * (1.0 - (-(contrast / true_threshold).powf(*beta)).exp());
            let correct = rng.random::<f64>() < p;
            let chosen_quadrant = if correct {
                target_quadrant
            } else {
                // Uniform over the three other quadrants.
                let mut pick = rng.random_range(0..N_QUADRANTS - 1);
                if pick >= target_quadrant {
                    pick += 1;
                }
                pick
            };
            Ok(ObserverResponse {
                chosen_quadrant,
                correct,
            })
        }
        ObserverModel::Resonator {
            contrast_gain,
            te,
            carrier_template,
            internal_noise_sd,
            n_channels,
            ..
        } => {
            if target_quadrant >= *n_channels {
                return Err(Error::validation(format!(
                    "target quadrant {target_quadrant} out of range"
                )));
            }
            let mut best = (0usize, f64::NEG_INFINITY);
            for channel in 0..*n_channels {
                let u_s = if channel == target_quadrant {
                    contrast_gain * contrast
                } else {
                    0.0
                };
                let level = closed_form_level(te, carrier_template, u_s, carrier_amplitude)?;
                let noise: f64 = StandardNormal.sample(rng);
                let decision = level + internal_noise_sd * noise;
                if decision > best.1 {
                    best = (channel, decision);
                }
            }
            Ok(ObserverResponse {
                chosen_quadrant: best.0,
                correct: best.0 == target_quadrant,
            })
        }
    }
}

/// Cross-checks [`closed_form_level`] against full pipeline simulation at
/// the given (signal level, carrier amplitude) points and returns the
/// largest relative disagreement.
///
/// Each point simulates a constant signal plus the carrier and measures
/// the interior mean of the smoothed output; relative error is taken
/// against the larger of the two levels, and points where both are below
/// `1e-6` count as exact.
pub fn validate_closed_form(
    te: &ThresholdElementConfig,
    lpf: &LowPassConfig,
    carrier_template: &CarrierSpec,
    duration_s: f64,
    sample_rate_hz: f64,
    points: &[(f64, f64)],
) -> Result<f64> {
    let mut worst = 0.0f64;
    for &(u_s, u_t) in points {
        let predicted = closed_form_level(te, carrier_template, u_s, u_t)?;
        let carrier = crate::signals::generate_carrier(
            &carrier_template.with_amplitude(u_t),
            duration_s,
            sample_rate_hz,
        )?;
        let signal = SampledSignal::constant(sample_rate_hz, carrier.len(), u_s)?;
        let run = run_pipeline(&signal, &carrier, te, lpf, carrier_template.frequency_hz())?;
        let measured = measure_interior_levels(&run.smoothed_output, &signal, run.window_samples)?
            .high_level;
        let scale = predicted.abs().max(measured.abs());
        if scale > 1e-6 {
            worst = worst.max((predicted - measured).abs() / scale);
        }
    }
    Ok(worst)
}
