//! Prediction with expert advice under a memory budget.
//!
//! The crate simulates online binary prediction over `n` experts for `T`
//! days and compares full-memory baselines against pool algorithms that keep
//! only a handful of expert indices. A privacy-based ensemble makes the
//! randomized pool algorithm robust to adaptive adversaries, and the
//! adversary lab provides hard instances and adaptive attacks.

// Negated float comparisons below are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod algorithms;
pub mod baselines;
pub mod error;
pub mod io;
pub mod pool;
pub mod privacy;
pub mod rng;
pub mod robust;
pub mod stream;

pub use adversary::{
    agreement_tracker_step, distinguish, gen_no, gen_padded, gen_planted, gen_yes, play_adaptive_game,
    to_expert_stream, verify_causality, Adversary, AdversaryConfig, AdversaryKind, BiasDetectInstance, GameDay,
    GameTranscript, GeneratorSpec, Label, PlantedNoise,
};
pub use algorithms::{AlgorithmKind, AlgorithmParams};
pub use baselines::{MultiplicativeWeights, WeightedMajority};
pub use error::{Error, Result};
pub use pool::{DeterministicPool, DiscPred, ParamViolation, RefillEvent};
pub use privacy::{compose, priv_median, Composition, PrivacyBudget};
pub use rng::{Seed, StreamRng};
pub use robust::{EnsembleConfig, PrivacyLedger, RobustEnsemble};
pub use stream::{
    average_regret, best_expert, run_matrix, run_stream, run_stream_with_budget, DayRecord, ExpertMatrix,
    Forecaster, MemoryMeter, RegretLedger, RunReport, StreamSource, StreamSpec, TraceRow,
};
