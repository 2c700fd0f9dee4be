use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frame::{self, FrameConfig, P2pAttribute};
use super::{decide_go, AbortPhase, DeviceId, IntentValue, NegotiationMode, NegotiationOutcome, TieBreakerBit};
use crate::commitment::{coin_flip, verify, Commitment, Opening};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Initiator,
    Responder,
}

/// Passed to a party at the moment it learns it is about to become GO.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElectionContext {
    pub peer: DeviceId,
    pub side: Side,
    pub mode: NegotiationMode,
    pub phase: AbortPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GoDecision {
    Accept,
    /// Walk away from the GO role (premature quit).
    Quit,
    /// Drop the request because the peer is considered an attacker.
    Drop,
}

/// Scripted choices of one negotiating party. The defaults are an honest
/// device: fair random tie bits, accepting the GO role, truthful openings.
pub trait Behavior {
    /// Bit declared in the request (standard mode) or committed to.
    fn tie_bit(&mut self, _side: Side, _mode: NegotiationMode, rng: &mut dyn RngCore) -> TieBreakerBit {
        TieBreakerBit::new(rng.gen())
    }

    fn on_elected_go(&mut self, _ctx: &ElectionContext, _rng: &mut dyn RngCore) -> GoDecision {
        GoDecision::Accept
    }

    /// Last chance to alter an opening before it is sent.
    fn reveal(&mut self, opening: Opening) -> Opening {
        opening
    }
}

/// An honest device with no learned state.
#[derive(Debug, Default, Clone, Copy)]
pub struct Honest;

impl Behavior for Honest {}

pub struct Party<'a> {
    pub id: DeviceId,
    pub iv: IntentValue,
    pub behavior: &'a mut dyn Behavior,
}

impl<'a> Party<'a> {
    pub fn new(id: DeviceId, iv: IntentValue, behavior: &'a mut dyn Behavior) -> Self {
        Party { id, iv, behavior }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub from: DeviceId,
    pub tentative_iv: IntentValue,
    pub tbbc: Commitment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoNegotiationRequest {
    pub initiator: DeviceId,
    pub iv: IntentValue,
    /// Declared tie bit in standard mode, uncorrelated compatibility bit otherwise.
    pub tbb: TieBreakerBit,
    pub commitment: Option<Commitment>,
    /// Probe-commit mode opens the initiator's probe commitment here.
    pub opening: Option<Opening>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub go: DeviceId,
    pub client: DeviceId,
}

/// Both candidate group configurations, prepared before the coin is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DualOutcomes {
    pub initiator_go: GroupAssignment,
    pub responder_go: GroupAssignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoNegotiationResponse {
    pub responder: DeviceId,
    pub iv: IntentValue,
    pub tbb: TieBreakerBit,
    pub opening: Option<Opening>,
    pub dual_outcomes: Option<DualOutcomes>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confirmation {
    pub initiator: DeviceId,
    pub selected: Option<GroupAssignment>,
    pub opening: Option<Opening>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TranscriptMessage {
    Probe(Probe),
    Request(GoNegotiationRequest),
    Response(GoNegotiationResponse),
    Confirmation(Confirmation),
}

impl TranscriptMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            TranscriptMessage::Probe(_) => "probe",
            TranscriptMessage::Request(_) => "request",
            TranscriptMessage::Response(_) => "response",
            TranscriptMessage::Confirmation(_) => "confirmation",
        }
    }

    /// Extension attributes this message adds on top of the standard frame.
    /// Probe commitments travel as vendor IEs and are not included here; see
    /// [`TranscriptMessage::extension_bytes`].
    pub fn extension_attributes(&self, cfg: &FrameConfig) -> Vec<P2pAttribute> {
        let mut attrs = Vec::new();
        match self {
            TranscriptMessage::Probe(_) => {}
            TranscriptMessage::Request(r) => {
                if let Some(c) = &r.commitment {
                    attrs.push(frame::tbbc_attribute(cfg, c));
                }
                if r.commitment.is_some() || r.opening.is_some() {
                    attrs.push(frame::tbb_prime_attribute(cfg, r.tbb));
                }
                if let Some(o) = &r.opening {
                    attrs.push(frame::opening_attribute(cfg, o));
                }
            }
            TranscriptMessage::Response(r) => {
                if let Some(o) = &r.opening {
                    attrs.push(frame::opening_attribute(cfg, o));
                }
            }
            TranscriptMessage::Confirmation(c) => {
                if let Some(o) = &c.opening {
                    attrs.push(frame::opening_attribute(cfg, o));
                }
            }
        }
        attrs
    }

    /// Bytes added to the frame by the commitment extension.
    pub fn extension_bytes(&self, cfg: &FrameConfig) -> usize {
        let ie = match self {
            TranscriptMessage::Probe(p) => frame::tbbc_vendor_ie(cfg, &p.tbbc).encoded_len(),
            _ => 0,
        };
        ie + self.extension_attributes(cfg).iter().map(P2pAttribute::encoded_len).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Negotiation {
    pub outcome: NegotiationOutcome,
    pub transcript: Vec<TranscriptMessage>,
    /// Tie bit the election used, once both inputs were known.
    pub effective_tbb: Option<TieBreakerBit>,
    /// Bits revealed by verified openings or sent in the clear, in
    /// (initiator, responder) order. Commitment modes only.
    pub revealed: Option<(TieBreakerBit, TieBreakerBit)>,
    /// An opened intent differed from the intent declared in the negotiation.
    pub iv_changed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NegotiationError {
    #[error("{offender} opened a commitment that does not verify (detected by {detected_by})")]
    CommitmentMismatch {
        offender: DeviceId,
        detected_by: DeviceId,
        transcript: Vec<TranscriptMessage>,
    },
}

/// Runs one group-owner negotiation between two idle devices.
pub fn negotiate(
    mode: NegotiationMode,
    initiator: &mut Party<'_>,
    responder: &mut Party<'_>,
    rng: &mut dyn RngCore,
) -> Result<Negotiation, NegotiationError> {
    match mode {
        NegotiationMode::Standard => Ok(standard(initiator, responder, rng)),
        NegotiationMode::ProbeCommit => probe_commit(initiator, responder, rng),
        NegotiationMode::InlineCommit => inline_commit(initiator, responder, rng),
    }
}

struct Run {
    transcript: Vec<TranscriptMessage>,
    effective: Option<TieBreakerBit>,
    revealed: Option<(TieBreakerBit, TieBreakerBit)>,
    iv_changed: bool,
}

impl Run {
    fn new() -> Self {
        Run { transcript: Vec::with_capacity(5), effective: None, revealed: None, iv_changed: false }
    }

    fn finish(self, outcome: NegotiationOutcome) -> Negotiation {
        Negotiation {
            outcome,
            transcript: self.transcript,
            effective_tbb: self.effective,
            revealed: self.revealed,
            iv_changed: self.iv_changed,
        }
    }

    fn mismatch(self, offender: DeviceId, detected_by: DeviceId) -> NegotiationError {
        NegotiationError::CommitmentMismatch { offender, detected_by, transcript: self.transcript }
    }
}

/// Asks `party` whether it takes the GO role it is about to be assigned.
fn elect(
    party: &mut Party<'_>,
    peer: DeviceId,
    side: Side,
    mode: NegotiationMode,
    phase: AbortPhase,
    rng: &mut dyn RngCore,
) -> Option<NegotiationOutcome> {
    let ctx = ElectionContext { peer, side, mode, phase };
    match party.behavior.on_elected_go(&ctx, rng) {
        GoDecision::Accept => None,
        GoDecision::Quit => Some(NegotiationOutcome::Aborted { by: party.id, phase }),
        GoDecision::Drop => Some(NegotiationOutcome::Aborted {
            by: party.id,
            phase: AbortPhase::DroppedByDefense,
        }),
    }
}

fn go_side(outcome: NegotiationOutcome) -> Option<Side> {
    match outcome {
        NegotiationOutcome::InitiatorIsGo => Some(Side::Initiator),
        NegotiationOutcome::ResponderIsGo => Some(Side::Responder),
        _ => None,
    }
}

fn standard(a: &mut Party<'_>, b: &mut Party<'_>, rng: &mut dyn RngCore) -> Negotiation {
    let mode = NegotiationMode::Standard;
    let mut run = Run::new();

    let tbb = a.behavior.tie_bit(Side::Initiator, mode, rng);
    run.transcript.push(TranscriptMessage::Request(GoNegotiationRequest {
        initiator: a.id,
        iv: a.iv,
        tbb,
        commitment: None,
        opening: None,
    }));

    let outcome = decide_go(a.iv, b.iv, tbb);
    if a.iv == b.iv && outcome != NegotiationOutcome::FailedBothRequireGo {
        run.effective = Some(tbb);
    }
    if go_side(outcome) == Some(Side::Responder) {
        if let Some(abort) = elect(b, a.id, Side::Responder, mode, AbortPhase::AfterRequest, rng) {
            return run.finish(abort);
        }
    }

    run.transcript.push(TranscriptMessage::Response(GoNegotiationResponse {
        responder: b.id,
        iv: b.iv,
        tbb: tbb.flipped(),
        opening: None,
        dual_outcomes: None,
    }));
    if outcome == NegotiationOutcome::FailedBothRequireGo {
        return run.finish(outcome);
    }

    if go_side(outcome) == Some(Side::Initiator) {
        if let Some(abort) = elect(a, b.id, Side::Initiator, mode, AbortPhase::AfterResponse, rng) {
            return run.finish(abort);
        }
    }
    run.transcript.push(TranscriptMessage::Confirmation(Confirmation {
        initiator: a.id,
        selected: Some(assignment(outcome, a.id, b.id)),
        opening: None,
    }));
    run.finish(outcome)
}

fn probe_commit(
    a: &mut Party<'_>,
    b: &mut Party<'_>,
    rng: &mut dyn RngCore,
) -> Result<Negotiation, NegotiationError> {
    let mode = NegotiationMode::ProbeCommit;
    let mut run = Run::new();

    // both sides advertise a commitment before anything is negotiated
    let bit_a = a.behavior.tie_bit(Side::Initiator, mode, rng);
    let open_a = Opening::random(rng, a.iv, bit_a);
    let c_a = open_a.commitment();
    run.transcript.push(TranscriptMessage::Probe(Probe { from: a.id, tentative_iv: a.iv, tbbc: c_a }));

    let bit_b = b.behavior.tie_bit(Side::Responder, mode, rng);
    let open_b = Opening::random(rng, b.iv, bit_b);
    let c_b = open_b.commitment();
    run.transcript.push(TranscriptMessage::Probe(Probe { from: b.id, tentative_iv: b.iv, tbbc: c_b }));

    let sent_a = a.behavior.reveal(open_a);
    run.transcript.push(TranscriptMessage::Request(GoNegotiationRequest {
        initiator: a.id,
        iv: a.iv,
        tbb: TieBreakerBit::new(rng.gen()),
        commitment: None,
        opening: Some(sent_a),
    }));
    if !verify(&c_a, &sent_a) {
        return Err(run.mismatch(a.id, b.id));
    }
    run.iv_changed |= sent_a.iv != a.iv;

    // B already committed, so learning TBB_A here cannot bias the flip
    let tie = coin_flip(sent_a.tbb, bit_b);
    let outcome = decide_go(sent_a.iv, b.iv, tie);
    if sent_a.iv == b.iv && outcome != NegotiationOutcome::FailedBothRequireGo {
        run.effective = Some(tie);
    }
    if go_side(outcome) == Some(Side::Responder) {
        if let Some(abort) = elect(b, a.id, Side::Responder, mode, AbortPhase::AfterRequest, rng) {
            return Ok(run.finish(abort));
        }
    }

    let sent_b = b.behavior.reveal(open_b);
    run.transcript.push(TranscriptMessage::Response(GoNegotiationResponse {
        responder: b.id,
        iv: b.iv,
        tbb: sent_b.tbb,
        opening: Some(sent_b),
        dual_outcomes: None,
    }));
    if !verify(&c_b, &sent_b) {
        return Err(run.mismatch(b.id, a.id));
    }
    run.iv_changed |= sent_b.iv != b.iv;
    run.revealed = Some((sent_a.tbb, sent_b.tbb));
    if outcome == NegotiationOutcome::FailedBothRequireGo {
        return Ok(run.finish(outcome));
    }

    if go_side(outcome) == Some(Side::Initiator) {
        if let Some(abort) = elect(a, b.id, Side::Initiator, mode, AbortPhase::AfterResponse, rng) {
            return Ok(run.finish(abort));
        }
    }
    run.transcript.push(TranscriptMessage::Confirmation(Confirmation {
        initiator: a.id,
        selected: Some(assignment(outcome, a.id, b.id)),
        opening: None,
    }));
    Ok(run.finish(outcome))
}

fn inline_commit(
    a: &mut Party<'_>,
    b: &mut Party<'_>,
    rng: &mut dyn RngCore,
) -> Result<Negotiation, NegotiationError> {
    let mode = NegotiationMode::InlineCommit;
    let mut run = Run::new();

    let bit_a = a.behavior.tie_bit(Side::Initiator, mode, rng);
    let open_a = Opening::random(rng, a.iv, bit_a);
    let c_a = open_a.commitment();
    run.transcript.push(TranscriptMessage::Request(GoNegotiationRequest {
        initiator: a.id,
        iv: a.iv,
        tbb: TieBreakerBit::new(rng.gen()),
        commitment: Some(c_a),
        opening: None,
    }));

    // unequal intents decide the election before any coin is needed
    let decided_early = a.iv != b.iv || (a.iv.requires_go() && b.iv.requires_go());
    if decided_early {
        let outcome = decide_go(a.iv, b.iv, TieBreakerBit::ZERO);
        if go_side(outcome) == Some(Side::Responder) {
            if let Some(abort) = elect(b, a.id, Side::Responder, mode, AbortPhase::AfterRequest, rng) {
                return Ok(run.finish(abort));
            }
        }
    }

    let bit_b = b.behavior.tie_bit(Side::Responder, mode, rng);
    run.transcript.push(TranscriptMessage::Response(GoNegotiationResponse {
        responder: b.id,
        iv: b.iv,
        tbb: bit_b,
        opening: None,
        dual_outcomes: Some(DualOutcomes {
            initiator_go: GroupAssignment { go: a.id, client: b.id },
            responder_go: GroupAssignment { go: b.id, client: a.id },
        }),
    }));

    let tie = coin_flip(bit_a, bit_b);
    let outcome = decide_go(a.iv, b.iv, tie);
    if outcome == NegotiationOutcome::FailedBothRequireGo {
        return Ok(run.finish(outcome));
    }
    if go_side(outcome) == Some(Side::Initiator) {
        if let Some(abort) = elect(a, b.id, Side::Initiator, mode, AbortPhase::AfterResponse, rng) {
            return Ok(run.finish(abort));
        }
    }

    let sent_a = a.behavior.reveal(open_a);
    let claimed = decide_go(sent_a.iv, b.iv, coin_flip(sent_a.tbb, bit_b));
    run.transcript.push(TranscriptMessage::Confirmation(Confirmation {
        initiator: a.id,
        selected: Some(assignment(claimed, a.id, b.id)),
        opening: Some(sent_a),
    }));
    if !verify(&c_a, &sent_a) {
        return Err(run.mismatch(a.id, b.id));
    }
    run.iv_changed |= sent_a.iv != a.iv;
    run.revealed = Some((sent_a.tbb, bit_b));
    if a.iv == b.iv {
        run.effective = Some(tie);
    }

    if !decided_early && go_side(outcome) == Some(Side::Responder) {
        if let Some(abort) = elect(b, a.id, Side::Responder, mode, AbortPhase::AfterConfirmation, rng) {
            return Ok(run.finish(abort));
        }
    }
    Ok(run.finish(outcome))
}

fn assignment(outcome: NegotiationOutcome, a: DeviceId, b: DeviceId) -> GroupAssignment {
    match outcome {
        NegotiationOutcome::ResponderIsGo => GroupAssignment { go: b, client: a },
        _ => GroupAssignment { go: a, client: b },
    }
}
