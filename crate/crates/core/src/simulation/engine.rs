use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::Duration;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::attack::{attacker_choose_tbb, attacker_maybe_quit, QuitDecision};
use super::energy::{Battery, EnergyLedger, Role, DAY_MS};
use super::{
    DeviceConfig, DeviceReport, DeviceStats, Scenario, SessionEvent, SessionRecord, SimError, SimResult,
    SkipReason,
};
use crate::learning::{assess, should_reject, PeerProfile};
use crate::protocol::{
    negotiate, AbortPhase, Behavior, DeviceId, ElectionContext, GoDecision, NegotiationError,
    NegotiationMode, NegotiationOutcome, Party, Side, TieBreakerBit,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Depletion { dev: usize, gen: u64 },
    GroupEnd(usize),
    Tick(usize),
}

struct Group {
    members: [usize; 2],
    go: usize,
    start_ms: u64,
    open: bool,
}

struct Device {
    cfg: DeviceConfig,
    battery: Battery,
    ledger: EnergyLedger,
    role: Role,
    since_ms: u64,
    group: Option<usize>,
    depleted_at_ms: Option<f64>,
    gen: u64,
    /// Only learning defenders keep profiles.
    profiles: Option<BTreeMap<u32, PeerProfile>>,
    stats: DeviceStats,
}

impl Device {
    fn id(idx: usize) -> DeviceId {
        DeviceId(idx as u32)
    }

    fn live(&self) -> bool {
        self.depleted_at_ms.is_none()
    }

    fn profile_mut(&mut self, peer: usize, day: u32) -> Option<&mut PeerProfile> {
        let p = self
            .profiles
            .as_mut()?
            .entry(peer as u32)
            .or_insert_with(|| PeerProfile::new(Device::id(peer)));
        // days never run backwards within a run
        p.advance_to(day).expect("monotonic simulation clock");
        Some(p)
    }

    /// Charges the current role up to `now`, stopping at depletion.
    fn settle(&mut self, model: &super::EnergyModel, now: u64) {
        if !self.live() || now <= self.since_ms {
            self.since_ms = self.since_ms.max(now);
            return;
        }
        let rate = model.rate(self.role);
        let dt = now - self.since_ms;
        let before = self.battery.remaining_mu();
        match self.battery.drain_ms(rate, dt) {
            None => self.ledger.record(self.role, dt),
            Some(offset) => {
                let full = before / rate;
                self.ledger.record(self.role, full);
                self.ledger.tail_mu = before - full * rate;
                self.ledger.tail_role = Some(self.role);
                self.depleted_at_ms = Some(self.since_ms as f64 + offset);
            }
        }
        self.since_ms = now;
    }
}

/// Per-party script used inside one negotiation.
struct Agent {
    attack: super::AttackProfile,
    attacker: bool,
    retries: u32,
    reject_peer: bool,
    quit: Option<QuitDecision>,
}

impl Behavior for Agent {
    fn tie_bit(&mut self, _side: Side, _mode: NegotiationMode, rng: &mut dyn RngCore) -> TieBreakerBit {
        if self.attacker {
            attacker_choose_tbb(&self.attack, rng)
        } else {
            TieBreakerBit::new(rng.gen())
        }
    }

    fn on_elected_go(&mut self, _ctx: &ElectionContext, rng: &mut dyn RngCore) -> GoDecision {
        if self.reject_peer {
            return GoDecision::Drop;
        }
        if self.attacker {
            let d = attacker_maybe_quit(&self.attack, true, self.retries, rng);
            self.quit = Some(d);
            if d.quits() {
                return GoDecision::Quit;
            }
        }
        GoDecision::Accept
    }
}

struct Engine<'s> {
    sc: &'s Scenario,
    rng: ChaCha8Rng,
    now: u64,
    seq: u64,
    queue: BinaryHeap<Reverse<(u64, u64, Event)>>,
    devices: Vec<Device>,
    groups: Vec<Group>,
    sessions: Vec<SessionRecord>,
}

/// Runs a scenario to its horizon. The same scenario always produces the
/// same result.
pub fn run(sc: &Scenario) -> Result<SimResult, SimError> {
    sc.validate()?;
    let mut e = Engine {
        sc,
        rng: ChaCha8Rng::seed_from_u64(sc.seed),
        now: 0,
        seq: 0,
        queue: BinaryHeap::new(),
        devices: sc
            .devices
            .iter()
            .map(|cfg| Device {
                cfg: cfg.clone(),
                battery: Battery::with_units(cfg.capacity_units),
                ledger: EnergyLedger::default(),
                role: Role::Idle,
                since_ms: 0,
                group: None,
                depleted_at_ms: None,
                gen: 0,
                profiles: cfg.defense.learns().then(BTreeMap::new),
                stats: DeviceStats::default(),
            })
            .collect(),
        groups: Vec::new(),
        sessions: Vec::new(),
    };
    for i in 0..e.devices.len() {
        e.predict_depletion(i);
        if let Some(s) = e.devices[i].cfg.schedule {
            let phase = e.rng.gen_range(0..s.period_s) * 1000;
            e.push(phase, Event::Tick(i));
        }
    }
    while let Some(&Reverse((t, _, ev))) = e.queue.peek() {
        if t > sc.horizon_ms {
            break;
        }
        e.queue.pop();
        e.now = t;
        match ev {
            Event::Tick(i) => e.tick(i),
            Event::GroupEnd(g) => e.end_group(g),
            Event::Depletion { dev, gen } => e.deplete(dev, gen),
        }
    }
    let horizon = sc.horizon_ms;
    for d in &mut e.devices {
        d.settle(&sc.energy, horizon);
    }
    Ok(e.finish())
}

impl<'s> Engine<'s> {
    fn push(&mut self, at: u64, ev: Event) {
        self.seq += 1;
        self.queue.push(Reverse((at, self.seq, ev)));
    }

    fn predict_depletion(&mut self, i: usize) {
        let d = &mut self.devices[i];
        if !d.live() {
            return;
        }
        d.gen += 1;
        let gen = d.gen;
        let rate = self.sc.energy.rate(d.role);
        if let Some(ms) = d.battery.ms_until_empty(rate) {
            let at = d.since_ms + ms;
            self.push(at, Event::Depletion { dev: i, gen });
        }
    }

    fn set_role(&mut self, i: usize, role: Role) {
        let now = self.now;
        let d = &mut self.devices[i];
        d.settle(&self.sc.energy, now);
        d.role = role;
        self.predict_depletion(i);
    }

    fn log(&mut self, initiator: usize, responder: usize, attempt: u32, mode: NegotiationMode, event: SessionEvent, iv_changed: bool) {
        if self.sc.record_sessions {
            self.sessions.push(SessionRecord {
                at_ms: self.now,
                initiator: Device::id(initiator),
                responder: Device::id(responder),
                attempt,
                mode,
                event,
                iv_changed,
            });
        }
    }

    fn day(&self) -> u32 {
        (self.now / DAY_MS) as u32
    }

    fn reject(&mut self, i: usize, peer: usize) -> bool {
        let day = self.day();
        let cfg = &self.sc.learning;
        match self.devices[i].profile_mut(peer, day) {
            Some(p) => should_reject(&assess(p, cfg), cfg.fairness_threshold),
            None => false,
        }
    }

    fn note_negotiation(&mut self, i: usize, peer: usize, self_go: bool, peer_quit: bool) {
        let day = self.day();
        if let Some(p) = self.devices[i].profile_mut(peer, day) {
            p.record_negotiation(day, self_go, peer_quit).expect("monotonic simulation clock");
        }
    }

    fn tick(&mut self, a: usize) {
        if !self.devices[a].live() {
            return;
        }
        let schedule = self.devices[a].cfg.schedule.expect("only scheduled devices tick");
        self.push(self.now + schedule.period_s * 1000, Event::Tick(a));

        let n = self.devices.len();
        let b = if n == 2 {
            1 - a
        } else {
            let k = self.rng.gen_range(0..n - 1);
            if k >= a {
                k + 1
            } else {
                k
            }
        };
        self.devices[a].stats.sessions_initiated += 1;
        let mode = if self.devices[a].cfg.defense.commits() || self.devices[b].cfg.defense.commits() {
            self.sc.commit_mode
        } else {
            NegotiationMode::Standard
        };
        let skip = if self.devices[a].group.is_some() {
            Some(SkipReason::InitiatorBusy)
        } else if !self.devices[b].live() {
            Some(SkipReason::PeerDepleted)
        } else if self.devices[b].group.is_some() {
            Some(SkipReason::PeerBusy)
        } else {
            None
        };
        if let Some(r) = skip {
            self.log(a, b, 0, mode, SessionEvent::Skipped(r), false);
            return;
        }

        let mut attempt = 0u32;
        loop {
            let mut agents = [a, b].map(|i| {
                let cfg = &self.devices[i].cfg;
                Agent {
                    attack: cfg.attack,
                    attacker: !cfg.attack.is_honest(),
                    retries: attempt,
                    reject_peer: false,
                    quit: None,
                }
            });
            // the defense screens incoming requests only
            agents[1].reject_peer = self.reject(b, a);

            let [agent_a, agent_b] = &mut agents;
            let iv_a = self.devices[a].cfg.intent;
            let iv_b = self.devices[b].cfg.intent;
            let mut pa = Party::new(Device::id(a), iv_a, agent_a);
            let mut pb = Party::new(Device::id(b), iv_b, agent_b);
            let result = negotiate(mode, &mut pa, &mut pb, &mut self.rng);

            self.devices[a].stats.negotiations += 1;
            self.devices[b].stats.negotiations += 1;
            let neg = match result {
                Ok(neg) => neg,
                Err(NegotiationError::CommitmentMismatch { offender, .. }) => {
                    let off = offender.0 as usize;
                    let honest = if off == a { b } else { a };
                    self.note_negotiation(honest, off, false, true);
                    self.log(a, b, attempt, mode, SessionEvent::CommitmentMismatch { offender }, false);
                    return;
                }
            };

            let elected = match neg.outcome {
                NegotiationOutcome::InitiatorIsGo => Some(a),
                NegotiationOutcome::ResponderIsGo => Some(b),
                NegotiationOutcome::Aborted { by, .. } => Some(by.0 as usize),
                NegotiationOutcome::FailedBothRequireGo => None,
            };
            if neg.effective_tbb.is_some() {
                self.devices[a].stats.tie_negotiations += 1;
                self.devices[b].stats.tie_negotiations += 1;
                if let Some(w) = elected {
                    self.devices[w].stats.tie_wins += 1;
                }
            }

            match neg.outcome {
                NegotiationOutcome::InitiatorIsGo | NegotiationOutcome::ResponderIsGo => {
                    let go = elected.expect("group has a GO");
                    self.note_negotiation(a, b, go == a, false);
                    self.note_negotiation(b, a, go == b, false);
                    self.log(a, b, attempt, mode, SessionEvent::Group { go: Device::id(go) }, neg.iv_changed);
                    self.start_group(a, b, go, schedule.group_s * 1000);
                    return;
                }
                NegotiationOutcome::FailedBothRequireGo => {
                    self.note_negotiation(a, b, false, false);
                    self.note_negotiation(b, a, false, false);
                    self.log(a, b, attempt, mode, SessionEvent::Failed, neg.iv_changed);
                    return;
                }
                NegotiationOutcome::Aborted { by, phase: AbortPhase::DroppedByDefense } => {
                    let d = by.0 as usize;
                    let other = if d == a { b } else { a };
                    self.devices[d].stats.requests_dropped += 1;
                    // the dropper was elected and walked away from the GO role,
                    // which is what a premature quit looks like from the other side
                    self.note_negotiation(d, other, true, false);
                    self.note_negotiation(other, d, false, true);
                    self.log(a, b, attempt, mode, SessionEvent::Rejected { by }, neg.iv_changed);
                    return;
                }
                NegotiationOutcome::Aborted { by, .. } => {
                    let q = by.0 as usize;
                    let other = if q == a { b } else { a };
                    self.devices[q].stats.premature_quits += 1;
                    self.note_negotiation(other, q, false, true);
                    self.note_negotiation(q, other, false, false);
                    self.log(a, b, attempt, mode, SessionEvent::PrematureQuit { by }, neg.iv_changed);
                    let idx = if q == a { 0 } else { 1 };
                    if agents[idx].quit != Some(QuitDecision::QuitAndRetry) {
                        return;
                    }
                    attempt += 1;
                }
            }
        }
    }

    fn start_group(&mut self, a: usize, b: usize, go: usize, duration_ms: u64) {
        let g = self.groups.len();
        self.groups.push(Group { members: [a, b], go, start_ms: self.now, open: true });
        for i in [a, b] {
            self.devices[i].group = Some(g);
            let role = if i == go { Role::Go } else { Role::Client };
            if i == go {
                self.devices[i].stats.groups_as_go += 1;
            } else {
                self.devices[i].stats.groups_as_client += 1;
            }
            self.set_role(i, role);
        }
        self.push(self.now + duration_ms, Event::GroupEnd(g));
    }

    fn end_group(&mut self, g: usize) {
        if !self.groups[g].open {
            return;
        }
        self.groups[g].open = false;
        let Group { members, go, start_ms, .. } = self.groups[g];
        let comm = Duration::from_millis(self.now - start_ms);
        let day = self.day();
        for (k, &i) in members.iter().enumerate() {
            let peer = members[1 - k];
            self.devices[i].group = None;
            self.set_role(i, Role::Idle);
            let self_go = if i == go { comm } else { Duration::ZERO };
            if let Some(p) = self.devices[i].profile_mut(peer, day) {
                p.record_group_time(day, self_go, comm).expect("GO time never exceeds group time");
            }
        }
    }

    fn deplete(&mut self, i: usize, gen: u64) {
        if self.devices[i].gen != gen || !self.devices[i].live() {
            return;
        }
        let now = self.now;
        self.devices[i].settle(&self.sc.energy, now);
        debug_assert!(!self.devices[i].live(), "depletion predicted exactly");
        if self.devices[i].live() {
            // rounding left a sliver of charge; try again
            self.predict_depletion(i);
            return;
        }
        if let Some(g) = self.devices[i].group {
            self.end_group(g);
        }
    }

    fn finish(self) -> SimResult {
        let devices = self
            .devices
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                let go = d.ledger.role_ms[Role::Go.index()];
                let client = d.ledger.role_ms[Role::Client.index()];
                DeviceReport {
                    id: Device::id(i),
                    defense: d.cfg.defense,
                    attacker: !d.cfg.attack.is_honest(),
                    depletion_time_days: d.depleted_at_ms.map(|ms| ms / DAY_MS as f64),
                    go_time_fraction: if go + client == 0 { 0.0 } else { go as f64 / (go + client) as f64 },
                    capacity_mu: d.battery.capacity_mu(),
                    remaining_mu: d.battery.remaining_mu(),
                    ledger: d.ledger,
                    stats: d.stats,
                }
            })
            .collect();
        SimResult { seed: self.sc.seed, horizon_ms: self.sc.horizon_ms, devices, sessions: self.sessions }
    }
}
