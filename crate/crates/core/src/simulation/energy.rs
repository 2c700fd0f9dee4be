use std::time::Duration;

use serde::{Deserialize, Serialize};

/// One simulated day.
pub const DAY_MS: u64 = 86_400_000;

/// Capacity that lasts 365 days at the idle rate of one unit per second.
pub const DEFAULT_CAPACITY_UNITS: u64 = 365 * 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Idle,
    Client,
    Go,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Idle, Role::Client, Role::Go];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Power draw in energy units per second. Client and GO draw on top of the
/// base rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub base_rate: u64,
    pub client_extra: u64,
    pub go_extra: u64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel { base_rate: 1, client_extra: 1, go_extra: 10 }
    }
}

impl EnergyModel {
    /// Units per second, which is the same number as milli-units per millisecond.
    pub fn rate(&self, role: Role) -> u64 {
        match role {
            Role::Idle => self.base_rate,
            Role::Client => self.base_rate + self.client_extra,
            Role::Go => self.base_rate + self.go_extra,
        }
    }
}

/// Battery charge kept in milli-units so millisecond segments drain exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Battery {
    capacity_mu: u64,
    remaining_mu: u64,
}

impl Battery {
    pub fn with_units(capacity_units: u64) -> Self {
        let capacity_mu = capacity_units * 1000;
        Battery { capacity_mu, remaining_mu: capacity_mu }
    }

    pub fn capacity_mu(&self) -> u64 {
        self.capacity_mu
    }

    pub fn remaining_mu(&self) -> u64 {
        self.remaining_mu
    }

    pub fn remaining_units(&self) -> f64 {
        self.remaining_mu as f64 / 1000.0
    }

    pub fn consumed_mu(&self) -> u64 {
        self.capacity_mu - self.remaining_mu
    }

    pub fn is_depleted(&self) -> bool {
        self.remaining_mu == 0
    }

    /// Drains `rate` milli-units per millisecond for `duration_ms`. Returns
    /// the offset into the segment at which the battery ran dry, in
    /// fractional milliseconds, if it did.
    pub fn drain_ms(&mut self, rate: u64, duration_ms: u64) -> Option<f64> {
        let need = rate.saturating_mul(duration_ms);
        if need < self.remaining_mu || rate == 0 {
            self.remaining_mu -= need.min(self.remaining_mu);
            return None;
        }
        let offset = self.remaining_mu as f64 / rate as f64;
        self.remaining_mu = 0;
        Some(offset)
    }

    /// Milliseconds until depletion at `rate`, rounded up.
    pub fn ms_until_empty(&self, rate: u64) -> Option<u64> {
        (rate > 0).then(|| self.remaining_mu.div_ceil(rate))
    }
}

/// Drains `battery` for `duration` spent in `role`, at millisecond
/// resolution. Returns how far into the segment the battery ran dry, if it did.
pub fn drain(battery: &mut Battery, model: &EnergyModel, role: Role, duration: Duration) -> Option<Duration> {
    battery
        .drain_ms(model.rate(role), duration.as_millis() as u64)
        .map(|offset_ms| Duration::from_secs_f64(offset_ms / 1000.0))
}

/// Per-device time spent in each role, plus the energy of the final segment
/// that was cut short by depletion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub role_ms: [u64; 3],
    pub tail_mu: u64,
    pub tail_role: Option<Role>,
}

impl EnergyLedger {
    pub fn record(&mut self, role: Role, ms: u64) {
        self.role_ms[role.index()] += ms;
    }

    /// Energy implied by the ledger, in milli-units.
    pub fn energy_mu(&self, model: &EnergyModel) -> u64 {
        Role::ALL.iter().map(|r| model.rate(*r) * self.role_ms[r.index()]).sum::<u64>() + self.tail_mu
    }

    pub fn total_ms(&self) -> u64 {
        self.role_ms.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_rates() {
        let m = EnergyModel::default();
        assert_eq!([m.rate(Role::Idle), m.rate(Role::Client), m.rate(Role::Go)], [1, 2, 11]);
    }

    #[test]
    fn idle_day_and_go_hour() {
        let m = EnergyModel::default();
        let mut b = Battery::with_units(DEFAULT_CAPACITY_UNITS);
        assert_eq!(b.capacity_mu(), 31_536_000_000);
        assert_eq!(drain(&mut b, &m, Role::Idle, Duration::from_secs(86_400)), None);
        assert_eq!(b.consumed_mu(), 86_400_000);
        let mut b = Battery::with_units(DEFAULT_CAPACITY_UNITS);
        drain(&mut b, &m, Role::Go, Duration::from_secs(3600));
        assert_eq!(b.consumed_mu(), 39_600_000);
    }

    #[test]
    fn continuous_go_depletes_in_365_over_11_days() {
        let m = EnergyModel::default();
        let mut b = Battery::with_units(DEFAULT_CAPACITY_UNITS);
        let at = drain(&mut b, &m, Role::Go, Duration::from_secs(400 * 86_400)).unwrap();
        let days = at.as_secs_f64() / 86_400.0;
        assert!((days - 365.0 / 11.0).abs() < 1e-6, "{days}");
        assert!((days - 33.18).abs() < 0.01);
        assert!(b.is_depleted());
        // clamped, further drains do nothing
        assert_eq!(b.drain_ms(11, 1000), Some(0.0));
        assert_eq!(b.remaining_mu(), 0);
    }

    #[test]
    fn crossing_is_interpolated() {
        let mut b = Battery::with_units(1);
        assert_eq!(b.drain_ms(2, 100), None);
        assert_eq!(b.remaining_mu(), 800);
        assert_eq!(b.drain_ms(3, 1000), Some(800.0 / 3.0));
        let b = Battery::with_units(1);
        assert_eq!(b.ms_until_empty(3), Some(334));
    }

    #[test]
    fn ledger_energy() {
        let m = EnergyModel::default();
        let mut l = EnergyLedger::default();
        l.record(Role::Idle, 10);
        l.record(Role::Client, 10);
        l.record(Role::Go, 10);
        l.tail_mu = 5;
        assert_eq!(l.energy_mu(&m), 10 + 20 + 110 + 5);
        assert_eq!(l.total_ms(), 30);
    }
}
