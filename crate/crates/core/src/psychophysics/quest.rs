//! Bayesian adaptive staircase for threshold estimation.
//!
//! The staircase keeps a log-posterior over a grain-spaced grid of
//! candidate thresholds on [0, range]. Each trial is placed at the current
//! posterior-mean threshold; each response multiplies the posterior by a
//! Weibull-family likelihood
//!
//! ```text
//! p(correct | T) = γ + (1 − γ − δ)·(1 − exp(−10^(β·(x − T))))
//! ```
//!
//! with intensity `x` and threshold `T` in linear contrast units. Correct
//! responses at an intensity pull the posterior below it; incorrect ones
//! push it above.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Staircase parameters. Defaults follow the four-alternative
/// forced-choice detection task: steepness β = 3, lapse rate δ = 0.01,
/// chance level γ = 0.25, a 1001-point grid (grain 0.001 over range 1),
/// starting guess 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuestParams {
    /// Psychometric steepness.
    pub beta: f64,
    /// Lapse/blind-press rate: ceiling accuracy is 1 − δ.
    pub delta: f64,
    /// Chance accuracy floor.
    pub gamma: f64,
    /// Grid step in contrast units.
    pub grain: f64,
    /// Grid span: thresholds live on [0, range].
    pub range: f64,
    /// Prior center (also the first recommended intensity).
    pub t_guess: f64,
    /// Prior standard deviation. The default is narrow enough that a
    /// single chance response at zero intensity cannot tilt the posterior
    /// mode by more than a couple of grid steps in expectation, yet wide
    /// enough to reach thresholds a few tenths away from the guess.
    pub prior_sd: f64,
    /// Accuracy level the threshold nominally corresponds to.
    pub criterion: f64,
}

impl Default for QuestParams {
    fn default() -> Self {
        Self {
            beta: 3.0,
            delta: 0.01,
            gamma: 0.25,
            grain: 0.001,
            range: 1.0,
            t_guess: 0.5,
            prior_sd: 0.15,
            criterion: 0.5,
        }
    }
}

impl QuestParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::validation(format!(
                "chance level must be in (0, 1), got {}",
                self.gamma
            )));
        }
        if !(self.criterion > self.gamma && self.criterion < 1.0) {
            return Err(Error::validation(format!(
                "criterion must satisfy gamma < criterion < 1, got {} with gamma {}",
                self.criterion, self.gamma
            )));
        }
        if !(self.delta >= 0.0 && self.gamma + self.delta < 1.0) {
            return Err(Error::validation(format!(
                "lapse rate {} leaves no room between floor and ceiling",
                self.delta
            )));
        }
        if !self.grain.is_finite() || self.grain <= 0.0 {
            return Err(Error::validation(format!(
                "grain must be positive, got {}",
                self.grain
            )));
        }
        if !self.range.is_finite() || self.range <= 0.0 || self.range < self.grain {
            return Err(Error::validation(format!(
                "range must be positive and at least one grain, got {}",
                self.range
            )));
        }
        if self.range / self.grain > 10_000_000.0 {
            return Err(Error::validation(
                "grid would exceed ten million points; coarsen the grain",
            ));
        }
        if !(self.t_guess >= 0.0 && self.t_guess <= self.range) {
            return Err(Error::validation(format!(
                "starting guess {} lies outside [0, {}]",
                self.t_guess, self.range
            )));
        }
        if !self.prior_sd.is_finite() || self.prior_sd <= 0.0 {
            return Err(Error::validation(format!(
                "prior SD must be positive, got {}",
                self.prior_sd
            )));
        }
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(Error::validation(format!(
                "steepness must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// One completed trial: the intensity shown and whether the response was
/// correct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub intensity: f64,
    pub correct: bool,
}

/// Staircase state: threshold grid, log-posterior, and trial history.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestState {
    params: QuestParams,
    grid: Vec<f64>,
    log_posterior: Vec<f64>,
    history: Vec<TrialOutcome>,
}

/// Creates a fresh staircase with a Gaussian prior centered on
/// `params.t_guess`.
pub fn quest_init(params: QuestParams) -> Result<QuestState> {
    params.validate()?;
    let n = (params.range / params.grain).round() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 * params.grain).collect();
    let log_posterior = grid
        .iter()
        .map(|t| {
            let z = (t - params.t_guess) / params.prior_sd;
            -0.5 * z * z
        })
        .collect();
    Ok(QuestState {
        params,
        grid,
        log_posterior,
        history: Vec::new(),
    })
}

impl QuestState {
    pub fn params(&self) -> &QuestParams {
        &self.params
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn history(&self) -> &[TrialOutcome] {
        &self.history
    }

    /// Normalized posterior probabilities over the grid.
    pub fn posterior(&self) -> Vec<f64> {
        let max = self
            .log_posterior
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = self.log_posterior.iter().map(|lp| (lp - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// Posterior-mean threshold, not snapped to the grid.
    fn posterior_mean(&self) -> f64 {
        let post = self.posterior();
        self.grid
            .iter()
            .zip(&post)
            .map(|(t, p)| t * p)
            .sum::<f64>()
    }

    /// Grid value with the highest posterior density (first on ties).
    pub fn posterior_mode(&self) -> f64 {
        let (idx, _) = self
            .log_posterior
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        self.grid[idx]
    }

    /// Intensity to present next: the posterior-mean threshold, clamped to
    /// the grid span and snapped to the nearest grid point.
    pub fn recommend(&self) -> f64 {
        let mean = self.posterior_mean().clamp(0.0, self.params.range);
        (mean / self.params.grain).round() * self.params.grain
    }

    /// Threshold estimate after at least one trial: the posterior mean,
    /// unsnapped.
    pub fn estimate(&self) -> Result<f64> {
        if self.history.is_empty() {
            return Err(Error::validation(
                "threshold estimate requires at least one completed trial",
            ));
        }
        Ok(self.posterior_mean())
    }

    /// Probability of a correct response at intensity `x` given threshold
    /// `t`, under the staircase's psychometric family.
    pub fn p_correct(&self, x: f64, t: f64) -> f64 {
        let p = &self.params;
        p.gamma + (1.0 - p.gamma - p.delta) * (1.0 - (-10f64.powf(p.beta * (x - t))).exp())
    }

    /// Folds one (intensity, correctness) observation into the posterior.
    pub fn update(&mut self, intensity: f64, correct: bool) -> Result<()> {
        if !(0.0..=self.params.range).contains(&intensity) {
            return Err(Error::validation(format!(
                "intensity {intensity} lies outside [0, {}]",
                self.params.range
            )));
        }
        for (lp, &t) in self.log_posterior.iter_mut().zip(&self.grid) {
            let p = self.params.gamma
                + (1.0 - self.params.gamma - self.params.delta)
                    * (1.0 - (-10f64.powf(self.params.beta * (intensity - t))).exp());
            let likelihood = if correct { p } else { 1.0 - p };
            *lp += likelihood.ln();
        }
        // Keep the log scale anchored so long runs cannot underflow.
        let max = self
            .log_posterior
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::non_finite(
                "posterior collapsed to zero mass after an update",
            ));
        }
        for lp in &mut self.log_posterior {
            *lp -= max;
        }
        self.history.push(TrialOutcome { intensity, correct });
        Ok(())
    }
}
