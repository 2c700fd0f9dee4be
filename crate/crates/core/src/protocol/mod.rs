//! Group-owner negotiation.
//!
//! The standard three-way handshake elects the device with the higher intent
//! value, falling back to the tie-breaker bit announced by the initiator. Two
//! commitment-augmented variants replace that trusted bit with a two-party
//! coin flip: one advertises the commitments with the probe exchange, the
//! other carries the commitment inside the negotiation itself.

pub mod frame;
mod negotiation;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use negotiation::{
    negotiate, Behavior, Confirmation, DualOutcomes, ElectionContext, GoDecision, Honest,
    GoNegotiationRequest, GoNegotiationResponse, Negotiation, NegotiationError, Party, Probe,
    Side, TranscriptMessage,
};

/// Highest intent value; announcing it means the device must become GO.
pub const MAX_INTENT: u8 = 15;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("intent value {0} outside 0..=15")]
    InvalidIntent(u8),
}

/// Preference for becoming group owner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IntentValue(u8);

impl IntentValue {
    pub const ZERO: IntentValue = IntentValue(0);

    pub fn new(value: u8) -> Result<Self, ProtocolError> {
        if value > MAX_INTENT {
            return Err(ProtocolError::InvalidIntent(value));
        }
        Ok(IntentValue(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn requires_go(self) -> bool {
        self.0 == MAX_INTENT
    }
}

impl TryFrom<u8> for IntentValue {
    type Error = ProtocolError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        IntentValue::new(value)
    }
}

impl fmt::Display for IntentValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TieBreakerBit(bool);

impl TieBreakerBit {
    pub const ZERO: TieBreakerBit = TieBreakerBit(false);
    pub const ONE: TieBreakerBit = TieBreakerBit(true);

    pub fn new(bit: bool) -> Self {
        TieBreakerBit(bit)
    }

    pub fn is_set(self) -> bool {
        self.0
    }

    /// Wire byte, 0x00 or 0x01.
    pub fn as_byte(self) -> u8 {
        self.0 as u8
    }

    pub fn flipped(self) -> Self {
        TieBreakerBit(!self.0)
    }
}

impl From<bool> for TieBreakerBit {
    fn from(bit: bool) -> Self {
        TieBreakerBit(bit)
    }
}

impl fmt::Display for TieBreakerBit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_byte())
    }
}

/// Short stable identifier for a simulated device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeviceId(pub u32);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dev{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NegotiationMode {
    Standard,
    /// Commitments travel in probe frames before the negotiation starts.
    ProbeCommit,
    /// The request carries the commitment, the confirmation opens it.
    InlineCommit,
}

impl NegotiationMode {
    pub fn uses_commitment(self) -> bool {
        !matches!(self, NegotiationMode::Standard)
    }
}

/// Where in the handshake a party walked away.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbortPhase {
    AfterRequest,
    AfterResponse,
    AfterConfirmation,
    DroppedByDefense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NegotiationOutcome {
    InitiatorIsGo,
    ResponderIsGo,
    FailedBothRequireGo,
    Aborted { by: DeviceId, phase: AbortPhase },
}

impl NegotiationOutcome {
    pub fn is_aborted(&self) -> bool {
        matches!(self, NegotiationOutcome::Aborted { .. })
    }
}

/// Elects the group owner from the two intents and the effective tie bit.
///
/// A set tie bit makes the initiator GO; the bit only matters when the
/// intents are equal and below 15.
pub fn decide_go(
    iv_initiator: IntentValue,
    iv_responder: IntentValue,
    tie_bit: TieBreakerBit,
) -> NegotiationOutcome {
    use std::cmp::Ordering::*;

    if iv_initiator.requires_go() && iv_responder.requires_go() {
        return NegotiationOutcome::FailedBothRequireGo;
    }
    match iv_initiator.cmp(&iv_responder) {
        Greater => NegotiationOutcome::InitiatorIsGo,
        Less => NegotiationOutcome::ResponderIsGo,
        Equal if tie_bit.is_set() => NegotiationOutcome::InitiatorIsGo,
        Equal => NegotiationOutcome::ResponderIsGo,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(v: u8) -> IntentValue {
        IntentValue::new(v).unwrap()
    }

    #[test]
    fn intent_range_is_enforced() {
        assert!(IntentValue::new(15).is_ok());
        assert_eq!(IntentValue::new(16), Err(ProtocolError::InvalidIntent(16)));
        assert!(IntentValue::try_from(255).is_err());
    }

    #[test]
    fn both_mandatory_fails() {
        for bit in [TieBreakerBit::ZERO, TieBreakerBit::ONE] {
            assert_eq!(decide_go(iv(15), iv(15), bit), NegotiationOutcome::FailedBothRequireGo);
        }
    }

    #[test]
    fn higher_intent_wins() {
        assert_eq!(decide_go(iv(3), iv(7), TieBreakerBit::ZERO), NegotiationOutcome::ResponderIsGo);
        assert_eq!(decide_go(iv(15), iv(14), TieBreakerBit::ZERO), NegotiationOutcome::InitiatorIsGo);
    }

    #[test]
    fn tie_bit_breaks_equal_intents() {
        assert_eq!(decide_go(iv(0), iv(0), TieBreakerBit::ONE), NegotiationOutcome::InitiatorIsGo);
        assert_eq!(decide_go(iv(0), iv(0), TieBreakerBit::ZERO), NegotiationOutcome::ResponderIsGo);
    }

    #[test]
    fn exhaustive_properties() {
        for a in 0..=15 {
            for b in 0..=15 {
                for bit in [TieBreakerBit::ZERO, TieBreakerBit::ONE] {
                    let out = decide_go(iv(a), iv(b), bit);
                    let swapped = decide_go(iv(b), iv(a), bit);
                    if a == 15 && b == 15 {
                        assert_eq!(out, NegotiationOutcome::FailedBothRequireGo);
                        continue;
                    }
                    assert_ne!(out, NegotiationOutcome::FailedBothRequireGo);
                    if a != b {
                        // swapping devices swaps the label
                        let flip = match out {
                            NegotiationOutcome::InitiatorIsGo => NegotiationOutcome::ResponderIsGo,
                            _ => NegotiationOutcome::InitiatorIsGo,
                        };
                        assert_eq!(swapped, flip);
                    } else {
                        let expected = if bit.is_set() {
                            NegotiationOutcome::InitiatorIsGo
                        } else {
                            NegotiationOutcome::ResponderIsGo
                        };
                        assert_eq!(out, expected);
                    }
                }
            }
        }
    }
}
