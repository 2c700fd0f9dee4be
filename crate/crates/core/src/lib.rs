//! Group-owner negotiation for Wi-Fi Direct devices under battery-depletion
//! attacks: the negotiation protocol and its commitment-based variants, a
//! Bayesian peer-learning defense, and a seeded simulator to compare them.

pub mod commitment;
pub mod experiment;
pub mod learning;
pub mod protocol;
pub mod simulation;

pub use commitment::{coin_flip, commit, verify, Commitment, Nonce, Opening};
pub use learning::{
    assess, should_reject, AttackerPosterior, AttackerType, Bin, DataLevel, DecisionRule, FeatureVector,
    LearningConfig, PeerAssessment, PeerProfile,
};
pub use protocol::{
    decide_go, negotiate, AbortPhase, DeviceId, IntentValue, NegotiationMode, NegotiationOutcome, TieBreakerBit,
};
pub use simulation::{
    run, AttackProfile, DefenseMode, DeviceConfig, EnergyModel, Scenario, Schedule, SimError, SimResult,
};
