//! Seeded discrete-event simulation of devices forming Wi-Fi Direct groups.
//!
//! Devices wake on their communication schedule, pick a peer, negotiate a
//! group owner and hold the group for the scheduled duration. Batteries drain
//! by role. Attackers ground tie bits and quit the GO role; defenders learn
//! peer profiles, use commitment-based tie breaking, or both.

mod attack;
mod energy;
mod engine;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learning::LearningConfig;
use crate::protocol::{AbortPhase, DeviceId, IntentValue, NegotiationMode};

pub use attack::{attacker_choose_tbb, attacker_maybe_quit, AttackProfile, QuitDecision, DEFAULT_RETRY_CAP};
pub use energy::{drain, Battery, EnergyLedger, EnergyModel, Role, DAY_MS, DEFAULT_CAPACITY_UNITS};
pub use engine::run;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DefenseMode {
    /// Standard negotiation, no defense.
    S,
    /// Learn peer profiles and drop GO requests from unfair attackers.
    L,
    /// Commitment-based tie breaking.
    C,
    /// Both.
    LC,
}

impl DefenseMode {
    pub const ALL: [DefenseMode; 4] = [DefenseMode::S, DefenseMode::L, DefenseMode::C, DefenseMode::LC];

    pub fn learns(self) -> bool {
        matches!(self, DefenseMode::L | DefenseMode::LC)
    }

    pub fn commits(self) -> bool {
        matches!(self, DefenseMode::C | DefenseMode::LC)
    }

    pub fn label(self) -> &'static str {
        match self {
            DefenseMode::S => "S",
            DefenseMode::L => "L",
            DefenseMode::C => "C",
            DefenseMode::LC => "LC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "S" => Some(DefenseMode::S),
            "L" => Some(DefenseMode::L),
            "C" => Some(DefenseMode::C),
            "LC" | "L+C" => Some(DefenseMode::LC),
            _ => None,
        }
    }
}

/// Periodic communication pattern: a group of `group_s` seconds every `period_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub period_s: u64,
    pub group_s: u64,
}

impl Schedule {
    /// One minute every six minutes.
    pub const SHORT: Schedule = Schedule { period_s: 360, group_s: 60 };
    /// One hour every twelve hours.
    pub const LONG: Schedule = Schedule { period_s: 12 * 3600, group_s: 3600 };

    pub fn new(period_s: u64, group_s: u64) -> Result<Self, SimError> {
        let s = Schedule { period_s, group_s };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.group_s == 0 || self.group_s > self.period_s {
            return Err(SimError::InvalidConfig(format!(
                "schedule needs 0 < group ({}) <= period ({})",
                self.group_s, self.period_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub defense: DefenseMode,
    pub attack: AttackProfile,
    /// Devices without a schedule never initiate sessions.
    pub schedule: Option<Schedule>,
    pub intent: IntentValue,
    pub capacity_units: u64,
}

impl DeviceConfig {
    pub fn honest(defense: DefenseMode, schedule: Option<Schedule>) -> Self {
        DeviceConfig {
            defense,
            attack: AttackProfile::HONEST,
            schedule,
            intent: IntentValue::ZERO,
            capacity_units: DEFAULT_CAPACITY_UNITS,
        }
    }

    pub fn attacker(attack: AttackProfile, schedule: Option<Schedule>) -> Self {
        DeviceConfig { attack, ..DeviceConfig::honest(DefenseMode::S, schedule) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub devices: Vec<DeviceConfig>,
    /// Variant used whenever either party runs a commitment defense.
    pub commit_mode: NegotiationMode,
    pub horizon_ms: u64,
    pub seed: u64,
    pub energy: EnergyModel,
    pub learning: LearningConfig,
    pub record_sessions: bool,
}

impl Scenario {
    pub fn new(devices: Vec<DeviceConfig>, horizon_days: u64, seed: u64) -> Self {
        Scenario {
            devices,
            commit_mode: NegotiationMode::ProbeCommit,
            horizon_ms: horizon_days * DAY_MS,
            seed,
            energy: EnergyModel::default(),
            learning: LearningConfig::default(),
            record_sessions: true,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.devices.len() < 2 {
            return Err(SimError::InvalidConfig("at least two devices are required".into()));
        }
        if self.horizon_ms == 0 {
            return Err(SimError::InvalidConfig("horizon must be positive".into()));
        }
        if self.commit_mode == NegotiationMode::Standard {
            return Err(SimError::InvalidConfig("commit_mode must be a commitment variant".into()));
        }
        if self.energy.base_rate == 0 {
            return Err(SimError::InvalidConfig("base energy rate must be positive".into()));
        }
        for (i, d) in self.devices.iter().enumerate() {
            d.attack.validate().map_err(|e| SimError::InvalidConfig(format!("device {i}: {e}")))?;
            if let Some(s) = &d.schedule {
                s.validate()?;
            }
            if d.capacity_units == 0 {
                return Err(SimError::InvalidConfig(format!("device {i}: zero battery capacity")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SkipReason {
    InitiatorBusy,
    PeerBusy,
    PeerDepleted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionEvent {
    Group { go: DeviceId },
    Failed,
    Rejected { by: DeviceId },
    /// Elected GO and walked away before the group did anything.
    PrematureQuit { by: DeviceId },
    /// Aborted for a reason other than the defense or a premature quit.
    Aborted { by: DeviceId, phase: AbortPhase },
    CommitmentMismatch { offender: DeviceId },
    Skipped(SkipReason),
}

/// One negotiation attempt (or skipped session) in the run log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub at_ms: u64,
    pub initiator: DeviceId,
    pub responder: DeviceId,
    pub attempt: u32,
    pub mode: NegotiationMode,
    pub event: SessionEvent,
    pub iv_changed: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceStats {
    pub sessions_initiated: u64,
    pub negotiations: u64,
    /// Negotiations settled by the tie-breaker bit.
    pub tie_negotiations: u64,
    /// Of those, how many elected this device.
    pub tie_wins: u64,
    pub groups_as_go: u64,
    pub groups_as_client: u64,
    pub requests_dropped: u64,
    pub premature_quits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceReport {
    pub id: DeviceId,
    pub defense: DefenseMode,
    pub attacker: bool,
    /// `None` when the battery outlived the horizon.
    pub depletion_time_days: Option<f64>,
    pub go_time_fraction: f64,
    pub capacity_mu: u64,
    pub remaining_mu: u64,
    pub ledger: EnergyLedger,
    pub stats: DeviceStats,
}

impl DeviceReport {
    /// Charge used equals the energy implied by the role timeline.
    pub fn energy_conserved(&self, model: &EnergyModel) -> bool {
        let tail_ok = match self.ledger.tail_role {
            Some(_) => self.remaining_mu == 0,
            None => self.ledger.tail_mu == 0,
        };
        tail_ok && self.capacity_mu - self.remaining_mu == self.ledger.energy_mu(model)
    }

    /// Depletion time, or the horizon for batteries that survived it.
    pub fn lifetime_days(&self, horizon_ms: u64) -> f64 {
        self.depletion_time_days.unwrap_or(horizon_ms as f64 / DAY_MS as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub seed: u64,
    pub horizon_ms: u64,
    pub devices: Vec<DeviceReport>,
    pub sessions: Vec<SessionRecord>,
}

impl SimResult {
    /// The victim is always device 0.
    pub fn victim(&self) -> &DeviceReport {
        &self.devices[0]
    }

    pub fn victim_lifetime_days(&self) -> f64 {
        self.victim().lifetime_days(self.horizon_ms)
    }
}
