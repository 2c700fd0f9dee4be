//! Peer-behavior learning.
//!
//! Each device keeps a sliding window of per-peer statistics, discretizes them
//! into features, and classifies the peer with a small Bayesian network. A
//! peer is rejected as GO-request sender only when it is classified as an
//! attacker *and* has been unfair in sharing the GO role.

mod bayes;
mod profile;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bayes::{posterior, AttackerPosterior, Cpt, DecisionRule, LearningConfig};
pub use profile::{DailyBucket, PeerProfile, WINDOW_DAYS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearningError {
    #[error("day {requested} precedes the profile's current day {current}")]
    ClockRegression { current: u32, requested: u32 },
    #[error("GO time {self_go:?} exceeds communication time {comm:?}")]
    InvalidDuration { self_go: Duration, comm: Duration },
    #[error("fraction {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("all attacker types have zero likelihood")]
    DegenerateDistribution,
    #[error("{0}")]
    Config(String),
}

/// Five-level discretization of a percentage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bin {
    /// [0, 25%)
    VL,
    /// [25%, 40%)
    VS,
    /// [40%, 60%)
    VA,
    /// [60%, 75%)
    VB,
    /// [75%, 100%]
    VH,
}

impl Bin {
    pub const ALL: [Bin; 5] = [Bin::VL, Bin::VS, Bin::VA, Bin::VB, Bin::VH];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// How much interaction history backs the features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DataLevel {
    /// Fewer than 10 negotiations.
    I,
    /// Fewer than 100.
    S,
    R,
}

impl DataLevel {
    pub const ALL: [DataLevel; 3] = [DataLevel::I, DataLevel::S, DataLevel::R];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for DataLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for DataLevel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" => Ok(DataLevel::I),
            "S" => Ok(DataLevel::S),
            "R" => Ok(DataLevel::R),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AttackerType {
    StrongAttacker,
    MediumAttacker,
    Fair,
    BetterThanAverage,
    Altruist,
}

impl AttackerType {
    pub const ALL: [AttackerType; 5] = [
        AttackerType::StrongAttacker,
        AttackerType::MediumAttacker,
        AttackerType::Fair,
        AttackerType::BetterThanAverage,
        AttackerType::Altruist,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            AttackerType::StrongAttacker => "SA",
            AttackerType::MediumAttacker => "MA",
            AttackerType::Fair => "F",
            AttackerType::BetterThanAverage => "BA",
            AttackerType::Altruist => "AL",
        }
    }

    pub fn is_attacker(self) -> bool {
        matches!(self, AttackerType::StrongAttacker | AttackerType::MediumAttacker)
    }
}

impl fmt::Display for AttackerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for AttackerType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttackerType::ALL.into_iter().find(|a| a.code() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    pub igo: Bin,
    pub pgo: Bin,
    pub tgo: Bin,
    pub data: DataLevel,
}

impl FeatureVector {
    /// All 375 combinations.
    pub fn all() -> impl Iterator<Item = FeatureVector> {
        DataLevel::ALL.into_iter().flat_map(|data| {
            Bin::ALL.into_iter().flat_map(move |igo| {
                Bin::ALL.into_iter().flat_map(move |pgo| {
                    Bin::ALL.into_iter().map(move |tgo| FeatureVector { igo, pgo, tgo, data })
                })
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ignorance {
    High,
    Medium,
    Low,
}

impl From<DataLevel> for Ignorance {
    fn from(d: DataLevel) -> Self {
        match d {
            DataLevel::I => Ignorance::High,
            DataLevel::S => Ignorance::Medium,
            DataLevel::R => Ignorance::Low,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeerAssessment {
    pub features: FeatureVector,
    pub posterior: AttackerPosterior,
    /// Peer fairness: share of group time with the peer spent as GO.
    pub pf: f64,
    pub ignorance: Ignorance,
    pub is_attacker: bool,
}

/// Half-open bins, the last closed at 1.0.
pub fn discretize_pct(p: f64) -> Result<Bin, LearningError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(LearningError::OutOfRange(p));
    }
    Ok(match p {
        p if p < 0.25 => Bin::VL,
        p if p < 0.40 => Bin::VS,
        p if p < 0.60 => Bin::VA,
        p if p < 0.75 => Bin::VB,
        _ => Bin::VH,
    })
}

pub fn data_level(negotiations: u64) -> DataLevel {
    match negotiations {
        0..=9 => DataLevel::I,
        10..=99 => DataLevel::S,
        _ => DataLevel::R,
    }
}

fn ratio_bin(num: u64, den: u64) -> Bin {
    if den == 0 {
        return Bin::VL;
    }
    // num <= den always holds for profile totals
    discretize_pct(num as f64 / den as f64).unwrap_or(Bin::VH)
}

pub fn features(profile: &PeerProfile) -> FeatureVector {
    let t = profile.totals();
    let n = t.negotiations as u64;
    FeatureVector {
        igo: ratio_bin(t.self_go_wins as u64, n),
        pgo: ratio_bin((t.peer_premature_quits as u64).min(n), n),
        tgo: ratio_bin(t.self_go_ms, t.comm_ms),
        data: data_level(n),
    }
}

pub fn peer_fairness(profile: &PeerProfile) -> f64 {
    profile.go_time_fraction()
}

pub fn assess(profile: &PeerProfile, cfg: &LearningConfig) -> PeerAssessment {
    let features = features(profile);
    let posterior = posterior(&features, &cfg.cpt, &cfg.prior)
        // a zero-likelihood evidence vector carries no information
        .unwrap_or(cfg.prior);
    PeerAssessment {
        features,
        posterior,
        pf: peer_fairness(profile),
        ignorance: features.data.into(),
        is_attacker: cfg.rule.is_attacker(&posterior),
    }
}

pub fn should_reject(assessment: &PeerAssessment, fairness_threshold: f64) -> bool {
    assessment.is_attacker && assessment.pf > fairness_threshold
}
