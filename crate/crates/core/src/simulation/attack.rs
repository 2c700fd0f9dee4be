use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::protocol::TieBreakerBit;

pub const DEFAULT_RETRY_CAP: u32 = 16;

/// How a false-friend device misbehaves. All-zero strengths is an honest device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackProfile {
    /// Probability of grounding the tie bit in a negotiation it initiates.
    pub tbb_strength: f64,
    /// Probability of quitting prematurely when elected GO.
    pub r_strength: f64,
    /// Fresh negotiations attempted after a premature quit, per session.
    pub retry_cap: u32,
}

impl AttackProfile {
    pub const HONEST: AttackProfile = AttackProfile { tbb_strength: 0.0, r_strength: 0.0, retry_cap: DEFAULT_RETRY_CAP };

    pub fn new(tbb_strength: f64, r_strength: f64) -> Self {
        AttackProfile { tbb_strength, r_strength, retry_cap: DEFAULT_RETRY_CAP }
    }

    pub fn is_honest(&self) -> bool {
        self.tbb_strength == 0.0 && self.r_strength == 0.0
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("tbb_strength", self.tbb_strength), ("r_strength", self.r_strength)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} {v} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

impl Default for AttackProfile {
    fn default() -> Self {
        AttackProfile::HONEST
    }
}

/// Grounds the tie bit with probability `tbb_strength`, otherwise flips a
/// fair coin. A grounded bit hands the GO role to the peer when it decides
/// the election alone; under a coin flip with an honest peer it is just one
/// more input that the peer's uniform bit masks.
pub fn attacker_choose_tbb<R: Rng + ?Sized>(profile: &AttackProfile, rng: &mut R) -> TieBreakerBit {
    if profile.tbb_strength > 0.0 && rng.gen_bool(profile.tbb_strength) {
        TieBreakerBit::ZERO
    } else {
        TieBreakerBit::new(rng.gen())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuitDecision {
    Accept,
    QuitAndRetry,
    QuitAndStop,
}

impl QuitDecision {
    pub fn quits(self) -> bool {
        self != QuitDecision::Accept
    }
}

/// Whether an attacker that has just been elected GO walks away.
pub fn attacker_maybe_quit<R: Rng + ?Sized>(
    profile: &AttackProfile,
    elected_go: bool,
    retries_so_far: u32,
    rng: &mut R,
) -> QuitDecision {
    if !elected_go || profile.r_strength <= 0.0 || !rng.gen_bool(profile.r_strength) {
        return QuitDecision::Accept;
    }
    if retries_so_far < profile.retry_cap {
        QuitDecision::QuitAndRetry
    } else {
        QuitDecision::QuitAndStop
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commitment::coin_flip;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_strength_always_grounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = AttackProfile::new(1.0, 0.0);
        assert!((0..1000).all(|_| attacker_choose_tbb(&p, &mut rng) == TieBreakerBit::ZERO));
    }

    #[test]
    fn zero_strength_is_fair() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let ones = (0..n).filter(|_| attacker_choose_tbb(&AttackProfile::HONEST, &mut rng).is_set()).count();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((ones as f64 - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn grounding_is_masked_by_an_honest_coin() {
        // partner bit uniform over {0, 1}: exactly one of the two XORs is set
        for strength in [0.0, 0.5, 1.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let a = attacker_choose_tbb(&AttackProfile::new(strength, 0.0), &mut rng);
            let wins = [TieBreakerBit::ZERO, TieBreakerBit::ONE]
                .iter()
                .filter(|&&b| coin_flip(a, b).is_set())
                .count();
            assert_eq!(wins, 1);
        }
    }

    #[test]
    fn quit_decisions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let never = AttackProfile::new(0.0, 0.0);
        assert_eq!(attacker_maybe_quit(&never, true, 0, &mut rng), QuitDecision::Accept);
        let always = AttackProfile::new(0.0, 1.0);
        assert_eq!(attacker_maybe_quit(&always, false, 0, &mut rng), QuitDecision::Accept);
        assert_eq!(attacker_maybe_quit(&always, true, 0, &mut rng), QuitDecision::QuitAndRetry);
        assert_eq!(attacker_maybe_quit(&always, true, 16, &mut rng), QuitDecision::QuitAndStop);
    }

    #[test]
    fn retry_until_peer_is_go_is_geometric() {
        // with a fair election and an always-quitting attacker, negotiations per
        // session follow Geometric(1/2) truncated at the retry cap: mean ~ 2
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = AttackProfile::new(0.0, 1.0);
        let sessions = 20_000;
        let mut total = 0u64;
        for _ in 0..sessions {
            let mut retries = 0;
            loop {
                total += 1;
                let attacker_go: bool = rng.gen();
                match attacker_maybe_quit(&p, attacker_go, retries, &mut rng) {
                    QuitDecision::QuitAndRetry => retries += 1,
                    _ => break,
                }
            }
        }
        let mean = total as f64 / sessions as f64;
        // exact truncated mean: sum_{k=0}^{16} (1/2)^k = 2 - 2^-16
        let exact = 2.0 - 0.5f64.powi(16);
        assert!((mean - exact).abs() < 0.05, "{mean}");
    }

    #[test]
    fn validation() {
        assert!(AttackProfile::new(1.1, 0.0).validate().is_err());
        assert!(AttackProfile::new(0.5, -0.1).validate().is_err());
        assert!(AttackProfile::new(0.5, 0.5).validate().is_ok());
        assert!(AttackProfile::HONEST.is_honest());
    }
}
