//! In-silico psychophysics: an adaptive staircase, simulated observers,
//! and forced-choice session orchestration for measuring how a carrier
//! changes contrast thresholds.

pub mod observer;
pub mod quest;
pub mod session;

pub use observer::{
    closed_form_level, observer_respond, validate_closed_form, ObserverModel, ObserverResponse,
    N_QUADRANTS,
};
pub use quest::{quest_init, QuestParams, QuestState, TrialOutcome};
pub use session::{
    run_session, run_sessions_batch, run_staircase, vct_resonance_curve, SessionDesign,
    SessionResult, TrialRecord,
};
