//! The threshold device and its recovery chain.
//!
//! A weak binary signal mixed with a carrier drives a memory-free threshold
//! element, and a moving-average low-pass stage smooths the element's output
//! back into a copy of the signal. Two elements are modeled:
//!
//! ```text
//!            ┌────────────┐      ┌───────────┐
//!  signal ─┬─┤ threshold  ├──────┤ moving    ├──▶ smoothed output
//! carrier ─┴─┤ element    │      │ average   │
//!            └────────────┘      └───────────┘
//! ```
//!
//! * **LCD** (level-crossing detector): emits a rectangular spike of fixed
//!   height and duration at every upward threshold crossing.
//! * **Comparator**: holds a fixed high level while the input exceeds the
//!   threshold and 0 otherwise.
//!
//! With a deterministic carrier whose period divides the smoothing window,
//! the carrier cancels exactly and the smoothed output settles on the
//! closed-form levels predicted by [`predict_lcd_level`] and
//! [`predict_comparator`].

use crate::error::{Error, Result};
use crate::signals::{mix, SampledSignal};
use serde::{Deserialize, Serialize};

/// Threshold element parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdElementConfig {
    /// Level-crossing detector: a spike of `spike_height` lasting
    /// `spike_duration_s` on each upward crossing of `threshold`.
    Lcd {
        threshold: f64,
        spike_height: f64,
        spike_duration_s: f64,
    },
    /// Comparator: `high_output` while the input exceeds `threshold`.
    Comparator { threshold: f64, high_output: f64 },
}

/// Data-free tag naming the element type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Lcd,
    Comparator,
}

impl ThresholdElementConfig {
    pub fn kind(&self) -> ThresholdKind {
        match self {
            ThresholdElementConfig::Lcd { .. } => ThresholdKind::Lcd,
            ThresholdElementConfig::Comparator { .. } => ThresholdKind::Comparator,
        }
    }

    pub fn threshold(&self) -> f64 {
        match *self {
            ThresholdElementConfig::Lcd { threshold, .. }
            | ThresholdElementConfig::Comparator { threshold, .. } => threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.threshold().is_finite() {
            return Err(Error::validation("threshold must be finite"));
        }
        match *self {
            ThresholdElementConfig::Lcd {
                spike_height,
                spike_duration_s,
                ..
            } => {
                if !spike_height.is_finite() || spike_height <= 0.0 {
                    return Err(Error::validation(format!(
                        "spike height must be positive, got {spike_height}"
                    )));
                }
                if !spike_duration_s.is_finite() || spike_duration_s <= 0.0 {
                    return Err(Error::validation(format!(
                        "spike duration must be positive, got {spike_duration_s}"
                    )));
                }
            }
            ThresholdElementConfig::Comparator { high_output, .. } => {
                if !high_output.is_finite() || high_output <= 0.0 {
                    return Err(Error::validation(format!(
                        "comparator high output must be positive, got {high_output}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks the timescale ordering required for spike trains to resolve:
    /// the carrier period must exceed the LCD spike duration (f_t < 1/τ).
    /// Comparators carry no timescale and always pass.
    pub fn validate_carrier_frequency(&self, carrier_freq_hz: f64) -> Result<()> {
        if let ThresholdElementConfig::Lcd {
            spike_duration_s, ..
        } = *self
        {
            if carrier_freq_hz * spike_duration_s >= 1.0 {
                return Err(Error::validation(format!(
                    "carrier frequency {carrier_freq_hz} Hz does not satisfy \
                     f_t < 1/τ for spike duration {spike_duration_s} s; \
                     consecutive spikes would merge"
                )));
            }
        }
        Ok(())
    }
}

/// Moving-average window for the smoothing stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Whole carrier periods; cancels a periodic carrier exactly.
    CarrierPeriods(u32),
    /// Fixed span in seconds, for carriers with no period.
    Seconds(f64),
}

/// Low-pass stage configuration: a centered rectangular moving average
/// whose window shrinks symmetrically at the trace edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowPassConfig {
    pub window: WindowMode,
}

impl LowPassConfig {
    pub fn carrier_periods(periods: u32) -> Self {
        Self {
            window: WindowMode::CarrierPeriods(periods),
        }
    }

    pub fn seconds(window_s: f64) -> Self {
        Self {
            window: WindowMode::Seconds(window_s),
        }
    }

    /// Window length in samples. `carrier_freq_hz` is required for the
    /// `CarrierPeriods` mode and ignored otherwise.
    pub fn window_samples(
        &self,
        sample_rate_hz: f64,
        carrier_freq_hz: Option<f64>,
    ) -> Result<usize> {
        match self.window {
            WindowMode::CarrierPeriods(periods) => {
                if periods == 0 {
                    return Err(Error::validation(
                        "window must span at least one carrier period",
                    ));
                }
                let f = carrier_freq_hz.ok_or_else(|| {
                    Error::validation(
                        "a carrier-period window needs a periodic carrier frequency",
                    )
                })?;
                let spp = sample_rate_hz / f;
                let rounded = spp.round();
                if (spp - rounded).abs() > 1e-9 * spp {
                    return Err(Error::validation(format!(
                        "sample rate {sample_rate_hz} Hz is not an integer multiple of \
                         the carrier frequency {f} Hz"
                    )));
                }
                Ok(periods as usize * rounded as usize)
            }
            WindowMode::Seconds(window_s) => {
                if !window_s.is_finite() || window_s <= 0.0 {
                    return Err(Error::validation(format!(
                        "window duration must be positive, got {window_s}"
                    )));
                }
                Ok(((window_s * sample_rate_hz).round() as usize).max(1))
            }
        }
    }

    /// Approximate -3 dB cutoff of the rectangular window, 0.443 / T_w.
    pub fn effective_cutoff_hz(
        &self,
        sample_rate_hz: f64,
        carrier_freq_hz: Option<f64>,
    ) -> Result<f64> {
        let w = self.window_samples(sample_rate_hz, carrier_freq_hz)?;
        Ok(0.443 * sample_rate_hz / w as f64)
    }
}

/// One full run of the signal chain.
#[derive(Debug, Clone)]
pub struct ResonatorRun {
    /// Raw threshold-element output.
    pub te_output: SampledSignal,
    /// Low-pass-filtered element output.
    pub smoothed_output: SampledSignal,
    /// Upward-crossing times in seconds (LCD only; empty for comparators).
    pub crossing_times: Vec<f64>,
    /// Element configuration the run was produced with.
    pub te: ThresholdElementConfig,
    /// Smoothing configuration the run was produced with.
    pub lpf: LowPassConfig,
    /// Resolved moving-average window, in samples.
    pub window_samples: usize,
    /// Carrier fundamental, when the carrier was periodic.
    pub carrier_freq_hz: Option<f64>,
}

/// Applies a threshold element to a trace.
pub fn apply_threshold_element(
    input: &SampledSignal,
    config: &ThresholdElementConfig,
) -> Result<SampledSignal> {
    threshold_with_crossings(input, config).map(|(out, _)| out)
}

/// Like [`apply_threshold_element`], but also reports LCD upward-crossing
/// times (always empty for comparators).
pub fn threshold_with_crossings(
    input: &SampledSignal,
    config: &ThresholdElementConfig,
) -> Result<(SampledSignal, Vec<f64>)> {
    config.validate()?;
    let rate = input.sample_rate_hz();
    let s = input.samples();
    match *config {
        ThresholdElementConfig::Comparator {
            threshold,
            high_output,
        } => {
            let out = s
                .iter()
                .map(|&x| if x > threshold { high_output } else { 0.0 })
                .collect();
            Ok((SampledSignal::new(rate, out)?, Vec::new()))
        }
        ThresholdElementConfig::Lcd {
            threshold,
            spike_height,
            spike_duration_s,
        } => {
            let spike_len = (spike_duration_s * rate).round() as usize;
            if spike_len < 2 {
                return Err(Error::validation(format!(
                    "spike duration {spike_duration_s} s spans fewer than 2 samples at \
                     {rate} Hz; raise the sample rate"
                )));
            }
            let n = s.len();
            let mut out = vec![0.0; n];
            let mut crossings = Vec::new();
            let mut high_until = 0usize;
            // A spike starts strictly on a below-to-above transition, so an
            // input that begins supra-threshold produces no spike at t = 0.
            for i in 1..n {
                if s[i - 1] <= threshold && s[i] > threshold {
                    crossings.push(i as f64 / rate);
                    let end = (i + spike_len).min(n);
                    let from = i.max(high_until);
                    if from < end {
                        out[from..end].fill(spike_height);
                    }
                    high_until = high_until.max(end);
                }
            }
            Ok((SampledSignal::new(rate, out)?, crossings))
        }
    }
}

/// Centered rectangular moving average with shrinking windows at the edges.
///
/// `carrier_freq_hz` is needed only when the window is specified in carrier
/// periods.
pub fn apply_lowpass(
    input: &SampledSignal,
    config: &LowPassConfig,
    carrier_freq_hz: Option<f64>,
) -> Result<SampledSignal> {
    let w = config.window_samples(input.sample_rate_hz(), carrier_freq_hz)?;
    if w > input.len() {
        return Err(Error::validation(format!(
            "window of {w} samples exceeds the trace length {}",
            input.len()
        )));
    }
    SampledSignal::new(input.sample_rate_hz(), moving_average(input.samples(), w))
}

fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    // Kahan-compensated prefix sums keep windowed means stable to well
    // below the ppb-level ripple the carrier-cancellation tests assert.
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in x {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        prefix.push(sum);
    }
    let left = (window - 1) / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + (window - 1 - left)).min(n - 1);
            (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1) as f64
        })
        .collect()
}

/// Runs signal + carrier through the threshold element and low-pass stage.
///
/// `carrier_freq_hz` should be the carrier fundamental for periodic
/// carriers (it resolves period-based windows and is echoed into the run
/// for spectral analysis); pass `None` for noise carriers.
pub fn run_pipeline(
    signal: &SampledSignal,
    carrier: &SampledSignal,
    te: &ThresholdElementConfig,
    lpf: &LowPassConfig,
    carrier_freq_hz: Option<f64>,
) -> Result<ResonatorRun> {
    let mixed = mix(signal, carrier)?;
    let (te_output, crossing_times) = threshold_with_crossings(&mixed, te)?;
    let window_samples = lpf.window_samples(mixed.sample_rate_hz(), carrier_freq_hz)?;
    let smoothed_output = apply_lowpass(&te_output, lpf, carrier_freq_hz)?;
    Ok(ResonatorRun {
        te_output,
        smoothed_output,
        crossing_times,
        te: te.clone(),
        lpf: lpf.clone(),
        window_samples,
        carrier_freq_hz,
    })
}

/// Smoothed LCD output level for a resolved spike train: one spike per
/// carrier period gives f_t · τ · spike_height.
pub fn predict_lcd_level(
    carrier_freq_hz: f64,
    spike_duration_s: f64,
    spike_height: f64,
) -> Result<f64> {
    if !carrier_freq_hz.is_finite() || carrier_freq_hz <= 0.0 {
        return Err(Error::validation(format!(
            "carrier frequency must be positive, got {carrier_freq_hz}"
        )));
    }
    if !spike_duration_s.is_finite() || spike_duration_s <= 0.0 {
        return Err(Error::validation(format!(
            "spike duration must be positive, got {spike_duration_s}"
        )));
    }
    if carrier_freq_hz * spike_duration_s >= 1.0 {
        return Err(Error::validation(format!(
            "f_t < 1/τ is violated (f_t = {carrier_freq_hz} Hz, τ = {spike_duration_s} s); \
             spikes merge and the spike-train level no longer applies"
        )));
    }
    Ok(carrier_freq_hz * spike_duration_s * spike_height)
}

/// Closed-form comparator output for a constant signal level riding on a
/// triangle carrier in the signal-restoring region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparatorPrediction {
    /// Time from the carrier minimum until the input reaches threshold:
    /// t_r = (U_th − U_s) / (2·U_t·f_t).
    pub rise_time_s: f64,
    /// Time above threshold per carrier period:
    /// T_H = (U_t − U_th + U_s) / (U_t·f_t).
    pub supra_time_s: f64,
    /// Smoothed output level: U_H·(U_t − U_th)/U_t + (U_H/U_t)·U_s,
    /// affine in the signal level with gain U_H/U_t.
    pub level: f64,
}

/// Predicts the comparator's smoothed output for signal level `U_s` on a
/// triangle carrier of amplitude `U_t`.
///
/// Requires the signal-restoring region: U_s ≤ U_th < U_s + U_t. Outside
/// it a [`Error::Region`] names the failed inequality.
pub fn predict_comparator(
    signal_level: f64,
    carrier_amplitude: f64,
    threshold: f64,
    high_output: f64,
    carrier_freq_hz: f64,
) -> Result<ComparatorPrediction> {
    for (name, v) in [
        ("signal level", signal_level),
        ("carrier amplitude", carrier_amplitude),
        ("threshold", threshold),
        ("high output", high_output),
        ("carrier frequency", carrier_freq_hz),
    ] {
        if !v.is_finite() {
            return Err(Error::validation(format!("{name} must be finite")));
        }
    }
    if carrier_amplitude <= 0.0 {
        return Err(Error::validation(format!(
            "carrier amplitude must be positive, got {carrier_amplitude}"
        )));
    }
    if carrier_freq_hz <= 0.0 {
        return Err(Error::validation(format!(
            "carrier frequency must be positive, got {carrier_freq_hz}"
        )));
    }
    if signal_level > threshold {
        return Err(Error::region(format!(
            "U_s ≤ U_th fails (U_s = {signal_level}, U_th = {threshold}): the signal \
             alone already exceeds the threshold"
        )));
    }
    if signal_level + carrier_amplitude <= threshold {
        return Err(Error::region(format!(
            "U_s + U_t < U_th ({signal_level} + {carrier_amplitude} vs {threshold}): \
             the input never reaches the threshold and no output is produced"
        )));
    }
    let rise_time_s = (threshold - signal_level) / (2.0 * carrier_amplitude * carrier_freq_hz);
    let supra_time_s =
        (carrier_amplitude - threshold + signal_level) / (carrier_amplitude * carrier_freq_hz);
    let level = high_output * (carrier_amplitude - threshold) / carrier_amplitude
        + (high_output / carrier_amplitude) * signal_level;
    Ok(ComparatorPrediction {
        rise_time_s,
        supra_time_s,
        level,
    })
}

/// Linear slope of a triangle carrier, 2·f_t·U_t.
pub fn triangle_slope(carrier_freq_hz: f64, carrier_amplitude: f64) -> f64 {
    2.0 * carrier_freq_hz * carrier_amplitude
}

/// Operating regions of a threshold element driven by signal + carrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// Input never reaches the threshold; no output.
    #[serde(rename = "A_no_output")]
    ANoOutput,
    /// The carrier lifts the signal across the threshold; the smoothed
    /// output reproduces the binary signal.
    #[serde(rename = "B_signal_restored")]
    BSignalRestored,
    /// The carrier alone crosses the threshold; output is produced during
    /// both signal phases and the restored signal degrades.
    #[serde(rename = "C_saturated")]
    CSaturated,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Region::ANoOutput => "A_no_output",
            Region::BSignalRestored => "B_signal_restored",
            Region::CSaturated => "C_saturated",
        };
        f.write_str(name)
    }
}

/// A region together with the inequality that selected it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionLabel {
    pub region: Region,
    /// Defining inequality, as text.
    pub condition: &'static str,
}

/// Classifies the operating region from the amplitudes alone.
///
/// Grazing inputs count as no-output (U_s + U_t = U_th → region A), and for
/// the LCD a carrier exactly at threshold still restores the signal
/// (U_t = U_th → region B). Comparators have no saturated region: their
/// transferred amplitude decays smoothly as U_t grows instead of cutting
/// off at U_t = U_th.
pub fn classify_region(
    kind: ThresholdKind,
    signal_level: f64,
    carrier_amplitude: f64,
    threshold: f64,
) -> RegionLabel {
    if signal_level + carrier_amplitude <= threshold {
        return RegionLabel {
            region: Region::ANoOutput,
            condition: "U_s + U_t ≤ U_th",
        };
    }
    match kind {
        ThresholdKind::Lcd if carrier_amplitude > threshold => RegionLabel {
            region: Region::CSaturated,
            condition: "U_th < U_t",
        },
        ThresholdKind::Lcd => RegionLabel {
            region: Region::BSignalRestored,
            condition: "U_th < U_s + U_t and U_t ≤ U_th",
        },
        ThresholdKind::Comparator => RegionLabel {
            region: Region::BSignalRestored,
            condition: "U_th < U_s + U_t",
        },
    }
}

/// Interior levels of a trace, segmented by the phases of a reference
/// signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteriorLevels {
    /// Mean over interiors of high-phase segments.
    pub high_level: f64,
    /// Mean over interiors of low-phase segments.
    pub low_level: f64,
    /// `high_level − low_level`.
    pub transferred_amplitude: f64,
    /// Largest peak-to-peak excursion inside any interior segment.
    pub max_ripple: f64,
}

/// Measures steady-state levels of `target`, using `segmentation` (usually
/// the binary input signal) to mark the constant-level phases.
///
/// "Interior" drops `margin` samples after every phase transition, before
/// every upcoming transition, and at both trace ends, so smoothing
/// transients never contaminate the means. With `margin` set to the
/// moving-average window this leaves exactly the samples whose windows saw
/// a single phase.
pub fn measure_interior_levels(
    target: &SampledSignal,
    segmentation: &SampledSignal,
    margin: usize,
) -> Result<InteriorLevels> {
    if target.len() != segmentation.len() {
        return Err(Error::validation(format!(
            "target ({} samples) and segmentation ({} samples) must have equal length",
            target.len(),
            segmentation.len()
        )));
    }
    let n = target.len();
    let seg = segmentation.samples();
    let out = target.samples();

    let lo_value = seg.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_value = seg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut acc = [(0.0f64, 0usize); 2]; // (sum, count) for low, high
    let mut max_ripple = 0.0f64;

    let mut start = 0usize;
    while start < n {
        let value = seg[start];
        let mut end = start + 1;
        while end < n && seg[end] == value {
            end += 1;
        }
        // Clip to the segment interior and away from the trace edges.
        let lo = (start + margin).max(margin);
        let hi = (end.saturating_sub(margin)).min(n - margin);
        if lo < hi {
            let slice = &out[lo..hi];
            let sum: f64 = slice.iter().sum();
            let smin = slice.iter().cloned().fold(f64::INFINITY, f64::min);
            let smax = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            max_ripple = max_ripple.max(smax - smin);
            let bucket = usize::from(value == hi_value && hi_value != lo_value) as usize;
            // When the segmentation is constant everything lands in bucket 0.
            acc[bucket].0 += sum;
            acc[bucket].1 += slice.len();
        }
        start = end;
    }

    let (high_level, low_level) = if hi_value == lo_value {
        if acc[0].1 == 0 {
            return Err(Error::validation(
                "margin leaves no interior samples to measure",
            ));
        }
        let level = acc[0].0 / acc[0].1 as f64;
        (level, level)
    } else {
        if acc[0].1 == 0 || acc[1].1 == 0 {
            return Err(Error::validation(
                "margin leaves no interior samples in at least one signal phase",
            ));
        }
        (acc[1].0 / acc[1].1 as f64, acc[0].0 / acc[0].1 as f64)
    };

    Ok(InteriorLevels {
        high_level,
        low_level,
        transferred_amplitude: high_level - low_level,
        max_ripple,
    })
}

impl ResonatorRun {
    /// Interior levels of the smoothed output, segmented by the given
    /// binary input signal, with a one-window margin.
    pub fn interior_levels(&self, signal: &SampledSignal) -> Result<InteriorLevels> {
        measure_interior_levels(&self.smoothed_output, signal, self.window_samples)
    }
}
