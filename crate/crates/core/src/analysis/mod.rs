//! Quantitative analysis of recovered signals: transfer linearity,
//! spectral SNR, carrier-amplitude sweeps, and resampling statistics.

pub mod linearity;
pub mod snr;
pub mod stats;
pub mod sweep;

pub use linearity::{fit_linearity, LinearityReport, TransferProbe};
pub use snr::{estimate_snr, SnrOptions, SpectralSnr, SNR_CAP_DB};
pub use stats::{
    bootstrap_cohens_d_paired, normal_cdf, normal_quantile, permutation_ttest_paired,
    EffectSize, PermutationResult, DEFAULT_BOOTSTRAP, DEFAULT_RESHUFFLES,
};
pub use sweep::{amplitude_sweep, write_sweep_csv, SweepBase, SweepPoint};
