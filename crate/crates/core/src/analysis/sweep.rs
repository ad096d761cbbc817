//! Carrier-amplitude sweeps: the resonance curve of transferred amplitude
//! and SNR against carrier strength.
//!
//! Deterministic carriers trace the curve exactly; the Gaussian carrier is
//! averaged over seeded repeats. Repeat seeds are drawn once from the
//! master seed and shared across all grid points (common random numbers),
//! so neighboring points differ by amplitude alone. Points are computed in
//! parallel and merged in grid order, making serial and parallel runs
//! bit-identical.

use crate::analysis::linearity::{fit_linearity, LinearityReport, TransferProbe};
use crate::analysis::snr::{estimate_snr, SnrOptions, SpectralSnr, SNR_CAP_DB};
use crate::error::{Error, Result};
use crate::resonator::{
    classify_region, run_pipeline, LowPassConfig, RegionLabel, ThresholdElementConfig,
};
use crate::signals::{generate_binary, generate_carrier, CarrierKind, CarrierSpec};
use crate::signals::{BinarySignalSpec, SampledSignal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// Pipeline context held fixed while the carrier amplitude is swept.
#[derive(Debug, Clone)]
pub struct SweepBase {
    /// Binary test signal (its `high_value` is the swept-against U_s).
    pub signal: BinarySignalSpec,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub te: ThresholdElementConfig,
    pub lpf: LowPassConfig,
    /// Carrier shape; its amplitude (and seed, for noise) is replaced per
    /// grid point and repeat.
    pub carrier_template: CarrierSpec,
    pub snr: SnrOptions,
    /// When set, each point also gets a transfer-linearity fit over this
    /// grid of signal levels (comparator + deterministic carrier only).
    pub linearity_grid: Option<Vec<f64>>,
}

/// One grid point of an amplitude sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub carrier_kind: CarrierKind,
    pub u_t: f64,
    pub region: RegionLabel,
    /// Smoothed output level during the signal's high phase (repeat mean).
    pub high_level: f64,
    /// Smoothed output level during the signal's low phase (repeat mean).
    pub low_level: f64,
    /// `high_level − low_level`: the recovered signal amplitude.
    pub transferred_amplitude: f64,
    pub linearity: Option<LinearityReport>,
    pub snr: SpectralSnr,
}

/// Sweeps the carrier amplitude over `u_t_grid` (sorted ascending in the
/// output) and measures one [`SweepPoint`] per amplitude.
///
/// `repeats` controls how many noise realizations are averaged per point
/// for the Gaussian carrier; deterministic carriers are repeat-invariant
/// and run once.
pub fn amplitude_sweep(
    base: &SweepBase,
    u_t_grid: &[f64],
    master_seed: u64,
    repeats: usize,
) -> Result<Vec<SweepPoint>> {
    if u_t_grid.is_empty() {
        return Err(Error::validation("amplitude grid is empty"));
    }
    if repeats == 0 {
        return Err(Error::validation("need at least one repeat"));
    }
    if u_t_grid.iter().any(|u| !u.is_finite() || *u < 0.0) {
        return Err(Error::validation(
            "amplitude grid must be finite and non-negative",
        ));
    }
    base.te.validate()?;
    base.signal.validate()?;

    let mut grid = u_t_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));

    let signal = generate_binary(&base.signal, base.duration_s, base.sample_rate_hz)?;

    // One carrier seed per repeat, shared by every grid point, so the
    // curve is not corrugated by realization-to-realization noise.
    let mut seed_rng = ChaCha8Rng::seed_from_u64(master_seed);
    let repeat_seeds: Vec<u64> = (0..repeats).map(|_| seed_rng.random()).collect();

    grid.par_iter()
        .map(|&u_t| sweep_point(base, &signal, u_t, &repeat_seeds))
        .collect()
}

fn sweep_point(
    base: &SweepBase,
    signal: &SampledSignal,
    u_t: f64,
    repeat_seeds: &[u64],
) -> Result<SweepPoint> {
    let kind = base.carrier_template.kind();
    let u_s = base.signal.high_value;
    let region = classify_region(base.te.kind(), u_s, u_t, base.te.threshold());
    let carrier_freq_hz = base.carrier_template.frequency_hz();

    let runs: &[u64] = if kind == CarrierKind::GaussianNoise {
        repeat_seeds
    } else {
        &repeat_seeds[..1]
    };

    let mut high = 0.0;
    let mut low = 0.0;
    let mut signal_power = 0.0;
    let mut noise_power = 0.0;
    let mut band_hz = 0.0;
    let mut n_signal_bins = 0;
    for &seed in runs {
        let mut spec = base.carrier_template.with_amplitude(u_t);
        if kind == CarrierKind::GaussianNoise {
            spec = spec.with_seed(seed);
        }
        let carrier = generate_carrier(&spec, base.duration_s, base.sample_rate_hz)?;
        let run = run_pipeline(signal, &carrier, &base.te, &base.lpf, carrier_freq_hz)?;
        let levels = run.interior_levels(signal)?;
        let snr = estimate_snr(&run, base.signal.frequency_hz, &base.snr)?;
        high += levels.high_level;
        low += levels.low_level;
        signal_power += snr.signal_power;
        noise_power += snr.noise_power;
        band_hz = snr.band_hz;
        n_signal_bins = snr.n_signal_bins;
    }
    let k = runs.len() as f64;
    high /= k;
    low /= k;
    signal_power /= k;
    noise_power /= k;

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

    let linearity = match (&base.linearity_grid, &base.te) {
        (Some(grid), ThresholdElementConfig::Comparator { high_output, .. })
            if kind != CarrierKind::GaussianNoise && u_t > 0.0 =>
        {
            let probe = TransferProbe {
                signal_freq_hz: base.signal.frequency_hz,
                duration_s: base.duration_s,
                sample_rate_hz: base.sample_rate_hz,
                te: base.te.clone(),
                lpf: base.lpf.clone(),
                carrier: base.carrier_template.with_amplitude(u_t),
            };
            let levels = probe.measure_levels(grid)?;
            Some(fit_linearity(grid, &levels, *high_output, u_t)?)
        }
        _ => None,
    };

    Ok(SweepPoint {
        carrier_kind: kind,
        u_t,
        region,
        high_level: high,
        low_level: low,
        transferred_amplitude: high - low,
        linearity,
        snr: SpectralSnr {
            signal_power,
            noise_power,
            snr_db,
            effectively_infinite,
            band_hz,
            n_signal_bins,
        },
    })
}

/// Writes sweep points as CSV with the fixed header
/// `carrier_kind,u_t,region,high_level,low_level,transferred_amplitude,snr_db,gain,r_squared`.
///
/// Numbers use shortest round-trip formatting; the gain and r² columns are
/// empty for points without a linearity fit.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "carrier_kind,u_t,region,high_level,low_level,transferred_amplitude,snr_db,gain,r_squared"
    )?;
    for p in points {
        let (gain, r2) = match &p.linearity {
            Some(fit) => (fit.gain.to_string(), fit.r_squared.to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            p.carrier_kind,
            p.u_t,
            p.region.region,
            p.high_level,
            p.low_level,
            p.transferred_amplitude,
            p.snr.snr_db,
            gain,
            r2
        )?;
    }
    Ok(())
}
