//! Multi-seed experiment sweeps over the simulator, and their CSV form.
//!
//! Config files are `key = value` lines; `#` starts a comment. `experiment`
//! picks a preset and every other key overrides it, whatever the order. When
//! a key repeats, the last line wins.
//!
//! ```text
//! experiment = var_tbb_strength   # or attacker_ratio_5, attacker_ratio_10, var_r_strength, custom
//! devices = 2
//! modes = S, L, C, LC
//! sweep = tbb_strength            # or r_strength, attacker_ratio
//! grid = 0:1:0.1                  # start:stop:step, or a comma list
//! seeds = 10
//! seed_base = 0
//! horizon_days = 400
//! tbb_strength = 1.0              # fixed values for variables not swept
//! r_strength = 0
//! attacker_ratio = 1.0            # attackers = round(ratio * (devices - 1))
//! period_s = 360
//! group_s = 60
//! victim_initiates = false
//! commit_mode = probe             # or inline
//! retry_cap = 16
//! learning.rule = argmax          # learning.* lines go to the learner config
//! ```

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::learning::LearningConfig;
use crate::protocol::NegotiationMode;
use crate::simulation::{
    run, AttackProfile, DefenseMode, DeviceConfig, Scenario, Schedule, SimError, DAY_MS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    VarTbbStrength,
    AttackerRatio5,
    AttackerRatio10,
    VarRStrength,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::VarTbbStrength,
        Preset::AttackerRatio5,
        Preset::AttackerRatio10,
        Preset::VarRStrength,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::VarTbbStrength => "var_tbb_strength",
            Preset::AttackerRatio5 => "attacker_ratio_5",
            Preset::AttackerRatio10 => "attacker_ratio_10",
            Preset::VarRStrength => "var_r_strength",
            Preset::Custom => "custom",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| invalid(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepVar {
    TbbStrength,
    RStrength,
    AttackerRatio,
}

impl SweepVar {
    fn name(self) -> &'static str {
        match self {
            SweepVar::TbbStrength => "tbb_strength",
            SweepVar::RStrength => "r_strength",
            SweepVar::AttackerRatio => "attacker_ratio",
        }
    }
}

impl FromStr for SweepVar {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [SweepVar::TbbStrength, SweepVar::RStrength, SweepVar::AttackerRatio]
            .into_iter()
            .find(|v| v.name() == s.trim())
            .ok_or_else(|| invalid(format!("unknown sweep variable {s:?}")))
    }
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidConfig(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Preset,
    pub device_count: usize,
    pub modes: Vec<DefenseMode>,
    pub sweep: SweepVar,
    pub grid: Vec<f64>,
    pub seeds: u32,
    pub seed_base: u64,
    pub horizon_days: u64,
    pub tbb_strength: f64,
    pub r_strength: f64,
    pub attacker_ratio: f64,
    pub schedule: Schedule,
    /// Whether the victim runs its own schedule. In the two-device runs only
    /// the attacker initiates.
    pub victim_initiates: bool,
    pub commit_mode: NegotiationMode,
    pub retry_cap: u32,
    pub learning: LearningConfig,
}

fn tenths(to: u32) -> Vec<f64> {
    (0..=to).map(|i| i as f64 / 10.0).collect()
}

impl ExperimentConfig {
    pub fn preset(p: Preset) -> Self {
        let base = ExperimentConfig {
            experiment: p,
            device_count: 2,
            modes: DefenseMode::ALL.to_vec(),
            sweep: SweepVar::TbbStrength,
            grid: tenths(10),
            seeds: 10,
            seed_base: 0,
            horizon_days: 400,
            tbb_strength: 1.0,
            r_strength: 0.0,
            attacker_ratio: 1.0,
            schedule: Schedule::SHORT,
            victim_initiates: false,
            commit_mode: NegotiationMode::ProbeCommit,
            retry_cap: crate::simulation::DEFAULT_RETRY_CAP,
            learning: LearningConfig::default(),
        };
        match p {
            Preset::VarTbbStrength | Preset::Custom => base,
            Preset::AttackerRatio5 | Preset::AttackerRatio10 => ExperimentConfig {
                device_count: if p == Preset::AttackerRatio5 { 5 } else { 10 },
                sweep: SweepVar::AttackerRatio,
                grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
                schedule: Schedule::LONG,
                victim_initiates: true,
                ..base
            },
            Preset::VarRStrength => ExperimentConfig { sweep: SweepVar::RStrength, tbb_strength: 0.5, ..base },
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.device_count < 2 {
            return Err(invalid("devices must be at least 2"));
        }
        if self.modes.is_empty() {
            return Err(invalid("modes must not be empty"));
        }
        if self.grid.is_empty() {
            return Err(invalid("grid must not be empty"));
        }
        if self.seeds == 0 {
            return Err(invalid("seeds must be at least 1"));
        }
        if self.horizon_days == 0 {
            return Err(invalid("horizon_days must be positive"));
        }
        for (name, v) in [
            ("tbb_strength", self.tbb_strength),
            ("r_strength", self.r_strength),
            ("attacker_ratio", self.attacker_ratio),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("{name} {v} outside [0, 1]")));
            }
        }
        if let Some(v) = self.grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid(format!("grid value {v} outside [0, 1]")));
        }
        Schedule::new(self.schedule.period_s, self.schedule.group_s)?;
        if self.commit_mode == NegotiationMode::Standard {
            return Err(invalid("commit_mode must be probe or inline"));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut pairs = Vec::new();
        let mut learning = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if let Some(rest) = k.strip_prefix("learning.") {
                learning.push_str(&format!("{rest} = {v}\n"));
            } else {
                pairs.push((lineno + 1, k.to_string(), v.to_string()));
            }
        }
        let preset = match pairs.iter().rev().find(|(_, k, _)| k == "experiment") {
            Some((_, _, v)) => v.parse()?,
            None => Preset::Custom,
        };
        let mut cfg = ExperimentConfig::preset(preset);
        for (lineno, k, v) in &pairs {
            cfg.set(k, v).map_err(|e| match e {
                SimError::InvalidConfig(m) => invalid(format!("line {lineno}: {m}")),
            })?;
        }
        if !learning.is_empty() {
            cfg.learning = LearningConfig::parse(&learning).map_err(|e| invalid(format!("learning: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), SimError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, SimError> {
            v.parse().map_err(|_| invalid(format!("{key}: cannot parse {v:?}")))
        }
        match key {
            "experiment" => {}
            "devices" => self.device_count = num(key, v)?,
            "modes" => {
                self.modes = v
                    .split(',')
                    .map(|m| DefenseMode::parse(m).ok_or_else(|| invalid(format!("modes: unknown mode {m:?}"))))
                    .collect::<Result<_, _>>()?
            }
            "sweep" => self.sweep = v.parse()?,
            "grid" => self.grid = parse_grid(v)?,
            "seeds" => self.seeds = num(key, v)?,
            "seed_base" => self.seed_base = num(key, v)?,
            "horizon_days" => self.horizon_days = num(key, v)?,
            "tbb_strength" => self.tbb_strength = num(key, v)?,
            "r_strength" => self.r_strength = num(key, v)?,
            "attacker_ratio" => self.attacker_ratio = num(key, v)?,
            "period_s" => self.schedule.period_s = num(key, v)?,
            "group_s" => self.schedule.group_s = num(key, v)?,
            "victim_initiates" => self.victim_initiates = num(key, v)?,
            "commit_mode" => {
                self.commit_mode = match v {
                    "probe" => NegotiationMode::ProbeCommit,
                    "inline" => NegotiationMode::InlineCommit,
                    _ => return Err(invalid(format!("commit_mode: expected probe or inline, got {v:?}"))),
                }
            }
            "retry_cap" => self.retry_cap = num(key, v)?,
            _ => return Err(invalid(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Number of attacking devices for a given ratio.
    pub fn attacker_count(&self, ratio: f64) -> usize {
        ((ratio * (self.device_count - 1) as f64).round() as usize).min(self.device_count - 1)
    }

    /// The scenario run for one grid point, mode and seed index. Device 0 is
    /// the victim; attackers follow it, then the remaining honest devices.
    pub fn scenario(&self, sweep_value: f64, mode: DefenseMode, seed_index: u32) -> Scenario {
        let (mut tbb, mut r, mut ratio) = (self.tbb_strength, self.r_strength, self.attacker_ratio);
        match self.sweep {
            SweepVar::TbbStrength => tbb = sweep_value,
            SweepVar::RStrength => r = sweep_value,
            SweepVar::AttackerRatio => ratio = sweep_value,
        }
        let attack = AttackProfile { tbb_strength: tbb, r_strength: r, retry_cap: self.retry_cap };
        let attackers = self.attacker_count(ratio);
        let mut devices = Vec::with_capacity(self.device_count);
        devices.push(DeviceConfig::honest(mode, self.victim_initiates.then_some(self.schedule)));
        for _ in 0..attackers {
            devices.push(DeviceConfig::attacker(attack, Some(self.schedule)));
        }
        while devices.len() < self.device_count {
            devices.push(DeviceConfig::honest(mode, Some(self.schedule)));
        }
        Scenario {
            devices,
            commit_mode: self.commit_mode,
            horizon_ms: self.horizon_days * DAY_MS,
            seed: self.seed_base.wrapping_add(seed_index as u64),
            energy: Default::default(),
            learning: self.learning.clone(),
            record_sessions: false,
        }
    }
}

fn parse_grid(v: &str) -> Result<Vec<f64>, SimError> {
    let bad = || invalid(format!("grid: cannot parse {v:?}"));
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let [a, b, step] = [parts[0], parts[1], parts[2]].map(|s| s.parse::<f64>());
        let (a, b, step) = (a.map_err(|_| bad())?, b.map_err(|_| bad())?, step.map_err(|_| bad())?);
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as u64;
        // rounding keeps 0.1 steps printing as 0.3 rather than 0.30000000000000004
        return Ok((0..=n).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect());
    }
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep: f64,
    pub mode: DefenseMode,
    pub mean_days: f64,
    pub stddev_days: f64,
    pub seed_values: Vec<f64>,
}

impl ResultRow {
    pub fn from_values(sweep: f64, mode: DefenseMode, seed_values: Vec<f64>) -> Self {
        let (mean_days, stddev_days) = mean_sd(&seed_values);
        ResultRow { sweep, mode, mean_days, stddev_days, seed_values }
    }
}

/// Mean and sample standard deviation; zero spread for a single value.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every (grid value, mode, seed) combination. Victims that outlive the
/// horizon count as lasting the full horizon.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, SimError> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize, u32)> = (0..cfg.grid.len())
        .flat_map(|g| (0..cfg.modes.len()).flat_map(move |m| (0..cfg.seeds).map(move |s| (g, m, s))))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(g, m, s)| run(&cfg.scenario(cfg.grid[g], cfg.modes[m], s)).map(|r| r.victim_lifetime_days()))
        .collect::<Result<_, _>>()?;
    Ok(values
        .chunks(cfg.seeds as usize)
        .zip(jobs.iter().step_by(cfg.seeds as usize))
        .map(|(vals, &(g, m, _))| ResultRow::from_values(cfg.grid[g], cfg.modes[m], vals.to_vec()))
        .collect())
}

pub fn csv_header(seeds: usize) -> Vec<String> {
    let mut h: Vec<String> = ["sweep", "mode", "mean_days", "stddev_days"].map(String::from).to_vec();
    h.extend((0..seeds).map(|i| format!("seed_{i}")));
    h
}

pub fn emit_csv(rows: &[ResultRow]) -> Vec<u8> {
    let seeds = rows.iter().map(|r| r.seed_values.len()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    w.write_record(csv_header(seeds)).expect("in-memory write");
    for r in rows {
        let mut rec = vec![r.sweep.to_string(), r.mode.label().to_string(), r.mean_days.to_string(), r.stddev_days.to_string()];
        rec.extend(r.seed_values.iter().map(f64::to_string));
        w.write_record(rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {msg}")]
    Field { row: usize, msg: String },
}

pub fn parse_csv(bytes: &[u8]) -> Result<Vec<ResultRow>, CsvError> {
    let mut rd = csv::ReaderBuilder::new().flexible(true).from_reader(bytes);
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let field = |msg: &str| CsvError::Field { row: i + 1, msg: msg.to_string() };
        let f = |j: usize| -> Result<f64, CsvError> {
            rec.get(j).ok_or_else(|| field("missing column"))?.parse().map_err(|_| field("bad number"))
        };
        let mode = DefenseMode::parse(rec.get(1).ok_or_else(|| field("missing mode"))?)
            .ok_or_else(|| field("unknown mode"))?;
        let seed_values = (4..rec.len()).map(f).collect::<Result<_, _>>()?;
        rows.push(ResultRow { sweep: f(0)?, mode, mean_days: f(2)?, stddev_days: f(3)?, seed_values });
    }
    Ok(rows)
}
