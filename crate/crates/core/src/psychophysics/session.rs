//! Forced-choice session orchestration: interleaved staircases across
//! carrier-amplitude conditions, threshold extraction, and the contrast
//! threshold vs carrier amplitude resonance curve.

use crate::error::{Error, Result};
use crate::psychophysics::observer::{observer_respond, ObserverModel, N_QUADRANTS};
use crate::psychophysics::quest::{quest_init, QuestParams, QuestState};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Experimental design: which carrier amplitudes run, how many trials per
/// amplitude per block, and how many blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionDesign {
    /// Carrier amplitudes, exactly one of which must be zero (the
    /// baseline that modulations are normalized against).
    pub conditions: Vec<f64>,
    pub trials_per_condition: usize,
    pub blocks: usize,
}

impl Default for SessionDesign {
    fn default() -> Self {
        // Baseline plus 0.75×, 1× and 1.5× a half-unit carrier amplitude.
        Self {
            conditions: vec![0.0, 0.375, 0.5, 0.75],
            trials_per_condition: 40,
            blocks: 2,
        }
    }
}

impl SessionDesign {
    pub fn validate(&self) -> Result<()> {
        if self.conditions.is_empty() {
            return Err(Error::validation("need at least one condition"));
        }
        if self.conditions.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::validation(
                "condition amplitudes must be finite and non-negative",
            ));
        }
        let zeros = self.conditions.iter().filter(|c| **c == 0.0).count();
        if zeros != 1 {
            return Err(Error::validation(format!(
                "exactly one zero-amplitude baseline condition is required, found {zeros}"
            )));
        }
        if self.trials_per_condition == 0 {
            return Err(Error::validation("need at least one trial per condition"));
        }
        if self.blocks == 0 {
            return Err(Error::validation("need at least one block"));
        }
        Ok(())
    }

    /// Index of the zero-amplitude baseline condition.
    pub fn baseline_index(&self) -> usize {
        self.conditions
            .iter()
            .position(|c| *c == 0.0)
            .expect("validated designs contain a baseline")
    }
}

/// One trial as it happened, in chronological order within its block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    /// Block number, 1-based.
    pub block: usize,
    /// Condition index into [`SessionDesign::conditions`].
    pub condition: usize,
    /// Chronological trial number within the block, 1-based.
    pub trial: usize,
    pub intensity: f64,
    pub target_quadrant: usize,
    pub response: usize,
    pub correct: bool,
}

/// Results of one session: thresholds per (condition, block), normalized
/// modulations per condition, and the full trial log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionResult {
    /// Carrier amplitude per condition (echo of the design).
    pub conditions: Vec<f64>,
    /// Contrast threshold estimates, indexed `[condition][block]`.
    pub vct: Vec<Vec<f64>>,
    /// Per condition: 100·(VCT − VCT_baseline)/VCT_baseline, computed per
    /// block and averaged over blocks. Zero for the baseline by
    /// construction.
    pub modulation: Vec<f64>,
    pub trials: Vec<TrialRecord>,
}

/// Runs one session: an independent staircase per (condition, block),
/// trial order randomly interleaved within each block, fully determined
/// by `seed`.
pub fn run_session(
    design: &SessionDesign,
    observer: &ObserverModel,
    quest: &QuestParams,
    seed: u64,
) -> Result<SessionResult> {
    design.validate()?;
    observer.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_session_with_rng(design, observer, quest, &mut rng)
}

fn run_session_with_rng(
    design: &SessionDesign,
    observer: &ObserverModel,
    quest: &QuestParams,
    rng: &mut ChaCha8Rng,
) -> Result<SessionResult> {
    let n_conditions = design.conditions.len();
    let mut states: Vec<Vec<QuestState>> = (0..n_conditions)
        .map(|_| {
            (0..design.blocks)
                .map(|_| quest_init(*quest))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut trials = Vec::with_capacity(n_conditions * design.blocks * design.trials_per_condition);

    for block in 0..design.blocks {
        // Equal trial counts per condition, randomly interleaved.
        let mut order: Vec<usize> = (0..n_conditions)
            .flat_map(|c| std::iter::repeat(c).take(design.trials_per_condition))
            .collect();
        order.shuffle(rng);
        for (t, &condition) in order.iter().enumerate() {
            let state = &mut states[condition][block];
            let intensity = state.recommend();
            let target_quadrant = rng.random_range(0..N_QUADRANTS);
            let response = observer_respond(
                observer,
                intensity,
                design.conditions[condition],
                target_quadrant,
                rng,
            )?;
            state.update(intensity, response.correct)?;
            trials.push(TrialRecord {
                block: block + 1,
                condition,
                trial: t + 1,
                intensity,
                target_quadrant,
                response: response.chosen_quadrant,
                correct: response.correct,
            });
        }
    }

    let vct: Vec<Vec<f64>> = states
        .iter()
        .map(|blocks| blocks.iter().map(|s| s.estimate()).collect())
        .collect::<Result<Vec<_>>>()?;

    let baseline = design.baseline_index();
    let mut modulation = Vec::with_capacity(n_conditions);
    for c in 0..n_conditions {
        let mut acc = 0.0;
        for b in 0..design.blocks {
            let base = vct[baseline][b];
            if base == 0.0 {
                return Err(Error::degenerate(
                    "baseline threshold estimate is zero; modulation is undefined",
                ));
            }
            acc += 100.0 * (vct[c][b] - base) / base;
        }
        modulation.push(acc / design.blocks as f64);
    }

    Ok(SessionResult {
        conditions: design.conditions.clone(),
        vct,
        modulation,
        trials,
    })
}

/// Runs `n_sessions` independent sessions in parallel. Session `i` uses
/// RNG stream `i` of `master_seed`, so results are reproducible and
/// independent of thread scheduling.
pub fn run_sessions_batch(
    design: &SessionDesign,
    observer: &ObserverModel,
    quest: &QuestParams,
    master_seed: u64,
    n_sessions: usize,
) -> Result<Vec<SessionResult>> {
    if n_sessions == 0 {
        return Err(Error::validation("need at least one session"));
    }
    design.validate()?;
    observer.validate()?;
    (0..n_sessions)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(i as u64);
            run_session_with_rng(design, observer, quest, &mut rng)
        })
        .collect()
}

/// Runs a single standalone staircase at one carrier amplitude and
/// returns the threshold estimate.
pub fn run_staircase<R: Rng + ?Sized>(
    observer: &ObserverModel,
    quest: &QuestParams,
    carrier_amplitude: f64,
    n_trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_trials == 0 {
        return Err(Error::validation("need at least one trial"));
    }
    let mut state = quest_init(*quest)?;
    for _ in 0..n_trials {
        let intensity = state.recommend();
        let target = rng.random_range(0..N_QUADRANTS);
        let response = observer_respond(observer, intensity, carrier_amplitude, target, rng)?;
        state.update(intensity, response.correct)?;
    }
    state.estimate()
}

/// Mean contrast threshold as a function of carrier amplitude: for each
/// amplitude, `n_sessions` standalone staircases of `n_trials` trials are
/// run and their estimates averaged.
///
/// Task (amplitude i, session s) uses RNG stream `i·n_sessions + s`, so
/// amplitudes share session seeds (common random numbers) and the curve
/// is deterministic under parallel execution.
pub fn vct_resonance_curve(
    amplitudes: &[f64],
    observer: &ObserverModel,
    quest: &QuestParams,
    n_trials: usize,
    n_sessions: usize,
    master_seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if amplitudes.is_empty() {
        return Err(Error::validation("amplitude grid is empty"));
    }
    if n_sessions == 0 {
        return Err(Error::validation("need at least one session"));
    }
    observer.validate()?;
    amplitudes
        .par_iter()
        .enumerate()
        .map(|(i, &u_t)| {
            let mut total = 0.0;
            for s in 0..n_sessions {
                let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
                rng.set_stream((i * n_sessions + s) as u64);
                total += run_staircase(observer, quest, u_t, n_trials, &mut rng)?;
            }
            Ok((u_t, total / n_sessions as f64))
        })
        .collect()
}
