use std::collections::VecDeque;
use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::LearningError;
use crate::protocol::DeviceId;

/// Days retained in a profile window.
pub const WINDOW_DAYS: u32 = 30;

/// Statistics of one day of interaction with a peer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyBucket {
    pub negotiations: u32,
    /// Negotiations where the profiling device was elected GO.
    pub self_go_wins: u32,
    pub peer_premature_quits: u32,
    pub self_go_ms: u64,
    /// Total group time with the peer.
    pub comm_ms: u64,
}

impl DailyBucket {
    fn add(&mut self, other: &DailyBucket) {
        self.negotiations += other.negotiations;
        self.self_go_wins += other.self_go_wins;
        self.peer_premature_quits += other.peer_premature_quits;
        self.self_go_ms += other.self_go_ms;
        self.comm_ms += other.comm_ms;
    }

    fn sub(&mut self, other: &DailyBucket) {
        self.negotiations -= other.negotiations;
        self.self_go_wins -= other.self_go_wins;
        self.peer_premature_quits -= other.peer_premature_quits;
        self.self_go_ms -= other.self_go_ms;
        self.comm_ms -= other.comm_ms;
    }

    pub fn is_empty(&self) -> bool {
        *self == DailyBucket::default()
    }
}

/// Sliding window of daily buckets for one peer, with running totals.
///
/// Only days that saw activity occupy a slot, so the ring holds at most
/// [`WINDOW_DAYS`] buckets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeerProfile {
    peer: DeviceId,
    current_day: u32,
    buckets: VecDeque<(u32, DailyBucket)>,
    totals: DailyBucket,
}

impl PeerProfile {
    pub fn new(peer: DeviceId) -> Self {
        PeerProfile { peer, current_day: 0, buckets: VecDeque::new(), totals: DailyBucket::default() }
    }

    pub fn peer(&self) -> DeviceId {
        self.peer
    }

    pub fn current_day(&self) -> u32 {
        self.current_day
    }

    /// Sum over the retained buckets.
    pub fn totals(&self) -> &DailyBucket {
        &self.totals
    }

    pub fn buckets(&self) -> impl Iterator<Item = (u32, &DailyBucket)> {
        self.buckets.iter().map(|(d, b)| (*d, b))
    }

    /// Moves the window forward to `day`, expiring buckets older than the window.
    pub fn advance_to(&mut self, day: u32) -> Result<(), LearningError> {
        if day < self.current_day {
            return Err(LearningError::ClockRegression { current: self.current_day, requested: day });
        }
        self.current_day = day;
        while let Some((oldest, bucket)) = self.buckets.front() {
            if day - oldest < WINDOW_DAYS {
                break;
            }
            let bucket = *bucket;
            self.totals.sub(&bucket);
            self.buckets.pop_front();
        }
        Ok(())
    }

    fn bucket_mut(&mut self, day: u32) -> Result<&mut DailyBucket, LearningError> {
        self.advance_to(day)?;
        if self.buckets.back().map(|(d, _)| *d) != Some(day) {
            self.buckets.push_back((day, DailyBucket::default()));
        }
        Ok(&mut self.buckets.back_mut().expect("bucket just ensured").1)
    }

    pub fn record_negotiation(
        &mut self,
        day: u32,
        self_was_go: bool,
        peer_quit_prematurely: bool,
    ) -> Result<(), LearningError> {
        let delta = DailyBucket {
            negotiations: 1,
            self_go_wins: self_was_go as u32,
            peer_premature_quits: peer_quit_prematurely as u32,
            ..DailyBucket::default()
        };
        self.bucket_mut(day)?.add(&delta);
        self.totals.add(&delta);
        Ok(())
    }

    pub fn record_group_time(
        &mut self,
        day: u32,
        self_go: Duration,
        comm: Duration,
    ) -> Result<(), LearningError> {
        if self_go > comm {
            return Err(LearningError::InvalidDuration { self_go, comm });
        }
        let delta = DailyBucket {
            self_go_ms: self_go.as_millis() as u64,
            comm_ms: comm.as_millis() as u64,
            ..DailyBucket::default()
        };
        self.bucket_mut(day)?.add(&delta);
        self.totals.add(&delta);
        Ok(())
    }

    /// Fraction of group time with this peer spent as GO; zero without contact.
    pub fn go_time_fraction(&self) -> f64 {
        if self.totals.comm_ms == 0 {
            0.0
        } else {
            self.totals.self_go_ms as f64 / self.totals.comm_ms as f64
        }
    }

    /// One line per retained bucket: `day negotiations wins quits go_ms comm_ms`.
    pub fn export_log(&self) -> String {
        let mut out = String::new();
        for (day, b) in &self.buckets {
            let _ = writeln!(
                out,
                "{day} {} {} {} {} {}",
                b.negotiations, b.self_go_wins, b.peer_premature_quits, b.self_go_ms, b.comm_ms
            );
        }
        out
    }

    /// Rebuilds a profile from [`PeerProfile::export_log`] output.
    pub fn from_log(peer: DeviceId, current_day: u32, log: &str) -> Result<Self, LearningError> {
        let mut profile = PeerProfile::new(peer);
        for (lineno, line) in log.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || LearningError::Config(format!("profile log line {}: {line:?}", lineno + 1));
            let fields: Vec<u64> = line
                .split_whitespace()
                .map(|f| f.parse::<u64>().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            let [day, n, wins, quits, go_ms, comm_ms] = fields[..] else {
                return Err(bad());
            };
            let bucket = DailyBucket {
                negotiations: n as u32,
                self_go_wins: wins as u32,
                peer_premature_quits: quits as u32,
                self_go_ms: go_ms,
                comm_ms,
            };
            if bucket.self_go_wins > bucket.negotiations || bucket.self_go_ms > bucket.comm_ms {
                return Err(bad());
            }
            let day = day as u32;
            profile.advance_to(day)?;
            if profile.buckets.back().is_some_and(|(d, _)| *d == day) {
                return Err(bad());
            }
            profile.buckets.push_back((day, bucket));
            profile.totals.add(&bucket);
        }
        profile.advance_to(current_day.max(profile.current_day))?;
        Ok(profile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PEER: DeviceId = DeviceId(9);

    #[test]
    fn single_win() {
        let mut p = PeerProfile::new(PEER);
        p.record_negotiation(0, true, false).unwrap();
        assert_eq!(p.totals().negotiations, 1);
        assert_eq!(p.totals().self_go_wins, 1);
    }

    #[test]
    fn quits_are_counted() {
        let mut p = PeerProfile::new(PEER);
        for i in 0..10 {
            p.record_negotiation(2, false, i < 3).unwrap();
        }
        assert_eq!(p.totals().negotiations, 10);
        assert_eq!(p.totals().peer_premature_quits, 3);
    }

    #[test]
    fn window_drops_oldest_day() {
        let mut p = PeerProfile::new(PEER);
        for day in 0..31 {
            p.record_negotiation(day, day == 0, false).unwrap();
        }
        assert_eq!(p.totals().negotiations, 30);
        assert_eq!(p.totals().self_go_wins, 0);
        assert!(p.buckets().all(|(d, _)| d >= 1));
        assert!(p.buckets().count() <= WINDOW_DAYS as usize);
    }

    #[test]
    fn clock_regression_rejected() {
        let mut p = PeerProfile::new(PEER);
        p.record_negotiation(5, true, false).unwrap();
        assert!(matches!(
            p.record_negotiation(4, true, false),
            Err(LearningError::ClockRegression { current: 5, requested: 4 })
        ));
    }

    #[test]
    fn group_time_fractions() {
        let s = Duration::from_secs;
        for (go, comm, frac) in [(60, 60, 1.0), (0, 60, 0.0), (30, 60, 0.5)] {
            let mut p = PeerProfile::new(PEER);
            p.record_group_time(0, s(go), s(comm)).unwrap();
            assert_eq!(p.go_time_fraction(), frac);
        }
        let mut p = PeerProfile::new(PEER);
        assert_eq!(p.go_time_fraction(), 0.0);
        assert!(matches!(
            p.record_group_time(0, s(61), s(60)),
            Err(LearningError::InvalidDuration { .. })
        ));
    }

    #[test]
    fn log_round_trip() {
        let mut p = PeerProfile::new(PEER);
        p.record_negotiation(1, true, false).unwrap();
        p.record_group_time(1, Duration::from_secs(60), Duration::from_secs(60)).unwrap();
        p.record_negotiation(3, false, true).unwrap();
        let log = p.export_log();
        assert_eq!(log, "1 1 1 0 60000 60000\n3 1 0 1 0 0\n");
        let q = PeerProfile::from_log(PEER, p.current_day(), &log).unwrap();
        assert_eq!(p, q);
        assert!(PeerProfile::from_log(PEER, 0, "1 2 3").is_err());
        assert!(PeerProfile::from_log(PEER, 0, "1 1 2 0 0 0").is_err());
    }

    #[derive(Debug, Clone)]
    enum Event {
        Negotiation { gap: u32, win: bool, quit: bool },
        Group { gap: u32, go: u64, extra: u64 },
    }

    fn arb_event() -> impl Strategy<Value = Event> {
        prop_oneof![
            (0u32..4, any::<bool>(), any::<bool>())
                .prop_map(|(gap, win, quit)| Event::Negotiation { gap, win, quit }),
            (0u32..4, 0u64..5_000, 0u64..5_000).prop_map(|(gap, go, extra)| Event::Group { gap, go, extra }),
        ]
    }

    proptest! {
        // running totals always equal a naive recompute over the event log
        #[test]
        fn totals_match_recompute(events in proptest::collection::vec(arb_event(), 1..300)) {
            let mut p = PeerProfile::new(PEER);
            let mut log: Vec<(u32, DailyBucket)> = Vec::new();
            let mut day = 0;
            for e in events {
                match e {
                    Event::Negotiation { gap, win, quit } => {
                        day += gap;
                        p.record_negotiation(day, win, quit).unwrap();
                        log.push((day, DailyBucket {
                            negotiations: 1,
                            self_go_wins: win as u32,
                            peer_premature_quits: quit as u32,
                            ..Default::default()
                        }));
                    }
                    Event::Group { gap, go, extra } => {
                        day += gap;
                        p.record_group_time(day, Duration::from_millis(go), Duration::from_millis(go + extra)).unwrap();
                        log.push((day, DailyBucket { self_go_ms: go, comm_ms: go + extra, ..Default::default() }));
                    }
                }
                let mut naive = DailyBucket::default();
                for (d, b) in &log {
                    if day - d < WINDOW_DAYS {
                        naive.add(b);
                    }
                }
                prop_assert_eq!(*p.totals(), naive);
                prop_assert!(p.buckets().count() <= WINDOW_DAYS as usize);
            }
            let rebuilt = PeerProfile::from_log(PEER, p.current_day(), &p.export_log()).unwrap();
            prop_assert_eq!(rebuilt.totals(), p.totals());
        }
    }
}
