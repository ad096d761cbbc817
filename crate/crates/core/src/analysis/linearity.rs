//! Transfer-linearity measurement: how faithfully the smoothed output
//! level tracks the input signal level.
//!
//! In the signal-restoring region a comparator on a triangle carrier has
//! an exactly affine transfer with gain U_H/U_t, so a least-squares line
//! over a grid of signal levels quantifies both the gain and any
//! departure from linearity (sine carriers bend the transfer).

use crate::error::{Error, Result};
use crate::resonator::{run_pipeline, LowPassConfig, ThresholdElementConfig};
use crate::signals::{generate_binary, generate_carrier, BinarySignalSpec, CarrierSpec};
use serde::Serialize;

/// Least-squares line fit of output level against input signal level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearityReport {
    /// Fitted slope: measured output change per unit signal level.
    pub gain: f64,
    /// Fitted intercept: output level extrapolated to zero signal.
    pub intercept: f64,
    /// Coefficient of determination of the fit, in [0, 1].
    pub r_squared: f64,
    /// Largest absolute residual from the fitted line.
    pub max_abs_residual: f64,
    /// Ideal gain U_H/U_t for an exactly linear transfer.
    pub theoretical_gain: f64,
}

/// Fits a least-squares line to output `levels` over a `u_s_grid` of input
/// signal levels, and reports the fit against the ideal gain U_H/U_t.
pub fn fit_linearity(
    u_s_grid: &[f64],
    levels: &[f64],
    u_h: f64,
    u_t: f64,
) -> Result<LinearityReport> {
    if u_s_grid.len() != levels.len() {
        return Err(Error::validation(format!(
            "grid ({}) and levels ({}) must have equal length",
            u_s_grid.len(),
            levels.len()
        )));
    }
    if u_s_grid.len() < 3 {
        return Err(Error::validation(format!(
            "need at least 3 grid points for a meaningful fit, got {}",
            u_s_grid.len()
        )));
    }
    if u_s_grid.iter().chain(levels).any(|v| !v.is_finite()) {
        return Err(Error::validation("grid and levels must be finite"));
    }
    if !u_h.is_finite() || u_h <= 0.0 || !u_t.is_finite() || u_t <= 0.0 {
        return Err(Error::validation(format!(
            "high output and carrier amplitude must be positive, got {u_h} and {u_t}"
        )));
    }

    if u_s_grid.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::validation(
            "signal-level grid is degenerate (all points equal)",
        ));
    }

    let n = u_s_grid.len() as f64;
    let mx = u_s_grid.iter().sum::<f64>() / n;
    let my = levels.iter().sum::<f64>() / n;
    let sxx: f64 = u_s_grid.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = u_s_grid
        .iter()
        .zip(levels)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let gain = sxy / sxx;
    let intercept = my - gain * mx;

    let mut ss_res = 0.0;
    let mut max_abs_residual = 0.0f64;
    for (x, y) in u_s_grid.iter().zip(levels) {
        let r = y - (intercept + gain * x);
        ss_res += r * r;
        max_abs_residual = max_abs_residual.max(r.abs());
    }
    let ss_tot: f64 = levels.iter().map(|y| (y - my).powi(2)).sum();
    // A constant response is fit exactly by a zero-slope line.
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };

    Ok(LinearityReport {
        gain,
        intercept,
        r_squared,
        max_abs_residual,
        theoretical_gain: u_h / u_t,
    })
}

/// Fixed pipeline context for probing the transfer curve over a grid of
/// signal levels.
#[derive(Debug, Clone)]
pub struct TransferProbe {
    /// Binary signal frequency (Hz); its amplitude is what the probe sweeps.
    pub signal_freq_hz: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub te: ThresholdElementConfig,
    pub lpf: LowPassConfig,
    /// Carrier to mix in, amplitude included.
    pub carrier: CarrierSpec,
}

impl TransferProbe {
    /// Simulates the pipeline once per signal level and returns the
    /// measured interior high-phase output level for each.
    pub fn measure_levels(&self, u_s_grid: &[f64]) -> Result<Vec<f64>> {
        if u_s_grid.is_empty() {
            return Err(Error::validation("signal-level grid is empty"));
        }
        let carrier = generate_carrier(&self.carrier, self.duration_s, self.sample_rate_hz)?;
        let f_t = self.carrier.frequency_hz();
        u_s_grid
            .iter()
            .map(|&u_s| {
                let spec = BinarySignalSpec::square(self.signal_freq_hz, u_s);
                let signal = generate_binary(&spec, self.duration_s, self.sample_rate_hz)?;
                let run = run_pipeline(&signal, &carrier, &self.te, &self.lpf, f_t)?;
                Ok(run.interior_levels(&signal)?.high_level)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_line_is_recovered_perfectly() {
        let grid: Vec<f64> = (0..9).map(|i| 0.05 * i as f64).collect();
        let levels: Vec<f64> = grid.iter().map(|u| 0.5 + 1.0 * u).collect();
        let fit = fit_linearity(&grid, &levels, 1.0, 1.0).unwrap();
        assert_relative_eq!(fit.gain, 1.0, max_relative = 1e-12);
        assert_relative_eq!(fit.intercept, 0.5, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0);
        assert!(fit.max_abs_residual < 1e-12);
        assert_relative_eq!(fit.theoretical_gain, 1.0);
    }

    #[test]
    fn constant_levels_fit_a_flat_line() {
        let grid = [0.0, 0.1, 0.2, 0.3];
        let levels = [0.4; 4];
        let fit = fit_linearity(&grid, &levels, 1.0, 2.0).unwrap();
        assert_eq!(fit.gain, 0.0);
        assert_eq!(fit.r_squared, 1.0);
        assert_relative_eq!(fit.theoretical_gain, 0.5);
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        let grid = [0.2, 0.2, 0.2];
        let levels = [0.1, 0.2, 0.3];
        assert!(matches!(
            fit_linearity(&grid, &levels, 1.0, 1.0),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            fit_linearity(&[0.0, 0.1], &[0.0, 0.1], 1.0, 1.0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn simulated_triangle_transfer_is_linear_with_unit_gain() {
        let f_t = 80.0;
        let probe = TransferProbe {
            signal_freq_hz: 2.5,
            duration_s: 0.8,
            sample_rate_hz: 256.0 * f_t,
            te: ThresholdElementConfig::Comparator {
                threshold: 0.5,
                high_output: 1.0,
            },
            lpf: LowPassConfig::carrier_periods(2),
            carrier: CarrierSpec::triangle(f_t, 1.0),
        };
        let grid: Vec<f64> = (0..9).map(|i| 0.05 * i as f64).collect();
        let levels = probe.measure_levels(&grid).unwrap();
        let fit = fit_linearity(&grid, &levels, 1.0, 1.0).unwrap();
        assert!(
            (fit.gain - 1.0).abs() <= 0.02,
            "gain {} should be 1.0 ± 2%",
            fit.gain
        );
        assert!(fit.r_squared >= 0.999, "r² = {}", fit.r_squared);
    }

    #[test]
    fn sine_carrier_bends_the_transfer_more_than_triangle() {
        let f_t = 80.0;
        let base = TransferProbe {
            signal_freq_hz: 2.5,
            duration_s: 0.8,
            sample_rate_hz: 256.0 * f_t,
            te: ThresholdElementConfig::Comparator {
                threshold: 0.5,
                high_output: 1.0,
            },
            lpf: LowPassConfig::carrier_periods(2),
            carrier: CarrierSpec::triangle(f_t, 1.0),
        };
        let grid: Vec<f64> = (0..9).map(|i| 0.05 * i as f64).collect();
        let tri_fit =
            fit_linearity(&grid, &base.measure_levels(&grid).unwrap(), 1.0, 1.0).unwrap();

        let mut sine = base.clone();
        sine.carrier = CarrierSpec::sine(f_t, 1.0);
        let sine_fit =
            fit_linearity(&grid, &sine.measure_levels(&grid).unwrap(), 1.0, 1.0).unwrap();

        assert!(
            sine_fit.max_abs_residual > tri_fit.max_abs_residual,
            "sine residual {} should exceed triangle residual {}",
            sine_fit.max_abs_residual,
            tri_fit.max_abs_residual
        );
    }
}
