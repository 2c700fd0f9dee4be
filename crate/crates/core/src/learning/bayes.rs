//! Attacker-type network: a single class node `AT` with three leaf evidence
//! nodes (iGO, pGO, tGO) whose conditional tables are selected by the
//! amount of data seen. The leaves are independent given `AT` and `Data`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{AttackerType, Bin, DataLevel, FeatureVector, LearningError};

const ROW_TOLERANCE: f64 = 1e-9;

/// P(bin | AT, Data), indexed `[data][attacker][bin]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    tables: [[[f64; 5]; 5]; 3],
}

impl Cpt {
    /// Validates that every row is a probability distribution.
    pub fn new(tables: [[[f64; 5]; 5]; 3]) -> Result<Self, LearningError> {
        for (d, table) in tables.iter().enumerate() {
            for (a, row) in table.iter().enumerate() {
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(LearningError::Config(format!(
                        "CPT row {}/{} has an entry outside [0, 1]",
                        DataLevel::ALL[d],
                        AttackerType::ALL[a]
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    return Err(LearningError::Config(format!(
                        "CPT row {}/{} sums to {sum}",
                        DataLevel::ALL[d],
                        AttackerType::ALL[a]
                    )));
                }
            }
        }
        Ok(Cpt { tables })
    }

    pub fn prob(&self, data: DataLevel, attacker: AttackerType, bin: Bin) -> f64 {
        self.tables[data.index()][attacker.index()][bin.index()]
    }

    pub fn row(&self, data: DataLevel, attacker: AttackerType) -> &[f64; 5] {
        &self.tables[data.index()][attacker.index()]
    }

    pub(crate) fn row_mut(&mut self, data: DataLevel, attacker: AttackerType) -> &mut [f64; 5] {
        &mut self.tables[data.index()][attacker.index()]
    }
}

impl Default for Cpt {
    /// The attacker-type definitions used throughout the experiments.
    fn default() -> Self {
        Cpt {
            tables: [
                // Data = I
                [
                    [0.17, 0.17, 0.17, 0.24, 0.25],
                    [0.15, 0.15, 0.23, 0.24, 0.23],
                    [0.15, 0.23, 0.24, 0.23, 0.15],
                    [0.23, 0.24, 0.23, 0.15, 0.15],
                    [0.25, 0.24, 0.17, 0.17, 0.17],
                ],
                // Data = S
                [
                    [0.14, 0.14, 0.14, 0.22, 0.36],
                    [0.13, 0.13, 0.20, 0.34, 0.20],
                    [0.13, 0.20, 0.34, 0.20, 0.13],
                    [0.20, 0.34, 0.20, 0.13, 0.13],
                    [0.36, 0.22, 0.14, 0.14, 0.14],
                ],
                // Data = R
                [
                    [0.05, 0.10, 0.20, 0.20, 0.45],
                    [0.05, 0.10, 0.20, 0.45, 0.20],
                    [0.10, 0.20, 0.40, 0.20, 0.10],
                    [0.20, 0.40, 0.20, 0.10, 0.10],
                    [0.40, 0.20, 0.20, 0.10, 0.10],
                ],
            ],
        }
    }
}

/// Distribution over the five attacker types, indexed by [`AttackerType`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackerPosterior {
    probs: [f64; 5],
}

impl AttackerPosterior {
    pub const DEFAULT_PRIOR: [f64; 5] = [0.15, 0.2, 0.45, 0.1, 0.1];

    /// Accepts any non-negative weights and normalizes them.
    pub fn from_weights(weights: [f64; 5]) -> Result<Self, LearningError> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(LearningError::Config("weights must be finite and non-negative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(LearningError::DegenerateDistribution);
        }
        Ok(AttackerPosterior { probs: weights.map(|w| w / sum) })
    }

    pub fn prob(&self, at: AttackerType) -> f64 {
        self.probs[at.index()]
    }

    pub fn probs(&self) -> &[f64; 5] {
        &self.probs
    }

    /// P(SA) + P(MA).
    pub fn attacker_mass(&self) -> f64 {
        self.prob(AttackerType::StrongAttacker) + self.prob(AttackerType::MediumAttacker)
    }

    /// Most probable type; ties resolve toward the stronger attacker.
    /// Probabilities within rounding error of each other count as tied.
    pub fn most_likely(&self) -> AttackerType {
        let mut best = 0;
        for i in 1..5 {
            if self.probs[i] > self.probs[best] + 1e-12 {
                best = i;
            }
        }
        AttackerType::ALL[best]
    }
}

impl Default for AttackerPosterior {
    fn default() -> Self {
        AttackerPosterior { probs: Self::DEFAULT_PRIOR }
    }
}

/// P(AT | features) = alpha * P(iGO|AT,D) P(pGO|AT,D) P(tGO|AT,D) P(AT).
pub fn posterior(
    f: &FeatureVector,
    cpt: &Cpt,
    prior: &AttackerPosterior,
) -> Result<AttackerPosterior, LearningError> {
    let mut unnorm = [0.0; 5];
    for at in AttackerType::ALL {
        let row = cpt.row(f.data, at);
        unnorm[at.index()] =
            row[f.igo.index()] * row[f.pgo.index()] * row[f.tgo.index()] * prior.prob(at);
    }
    AttackerPosterior::from_weights(unnorm)
}

/// How a posterior is turned into a yes/no attacker verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecisionRule {
    /// The most probable type is a strong or medium attacker.
    MostLikelyAttacker,
    /// P(SA) + P(MA) exceeds the threshold.
    AttackerMass(f64),
}

impl DecisionRule {
    pub fn is_attacker(&self, posterior: &AttackerPosterior) -> bool {
        match *self {
            DecisionRule::MostLikelyAttacker => posterior.most_likely().is_attacker(),
            DecisionRule::AttackerMass(threshold) => posterior.attacker_mass() > threshold,
        }
    }
}

impl Default for DecisionRule {
    fn default() -> Self {
        DecisionRule::MostLikelyAttacker
    }
}

/// Everything the learner needs besides the peer profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningConfig {
    pub cpt: Cpt,
    pub prior: AttackerPosterior,
    pub rule: DecisionRule,
    /// Peers whose fairness ratio exceeds this are candidates for rejection.
    pub fairness_threshold: f64,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            cpt: Cpt::default(),
            prior: AttackerPosterior::default(),
            rule: DecisionRule::default(),
            fairness_threshold: 0.6,
        }
    }
}

impl LearningConfig {
    /// Parses `key = value` lines; unspecified keys keep their defaults.
    ///
    /// ```text
    /// prior = 0.15 0.2 0.45 0.1 0.1
    /// cpt.R.SA = 0.05 0.1 0.2 0.2 0.45
    /// rule = argmax            # or: mass 0.5
    /// fairness_threshold = 0.6
    /// ```
    pub fn parse(text: &str) -> Result<Self, LearningError> {
        let mut cfg = LearningConfig::default();
        let mut cpt = cfg.cpt.clone();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| LearningError::Config(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "prior" => cfg.prior = AttackerPosterior::from_weights(parse_row(value).map_err(|m| err(&m))?)?,
                "rule" => {
                    let mut words = value.split_whitespace();
                    cfg.rule = match (words.next(), words.next()) {
                        (Some("argmax"), None) => DecisionRule::MostLikelyAttacker,
                        (Some("mass"), Some(t)) => {
                            DecisionRule::AttackerMass(t.parse().map_err(|_| err("bad mass threshold"))?)
                        }
                        _ => return Err(err("rule must be `argmax` or `mass <threshold>`")),
                    };
                }
                "fairness_threshold" => {
                    cfg.fairness_threshold = value.parse().map_err(|_| err("bad fairness threshold"))?
                }
                _ => {
                    let mut parts = key.split('.');
                    let (Some("cpt"), Some(d), Some(a), None) =
                        (parts.next(), parts.next(), parts.next(), parts.next())
                    else {
                        return Err(err(&format!("unknown key {key:?}")));
                    };
                    let data: DataLevel = d.parse().map_err(|_| err("unknown data level"))?;
                    let at: AttackerType = a.parse().map_err(|_| err("unknown attacker type"))?;
                    *cpt.row_mut(data, at) = parse_row(value).map_err(|m| err(&m))?;
                }
            }
        }
        cfg.cpt = Cpt::new(cpt.tables)?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let row = |r: &[f64]| r.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "prior = {}", row(self.prior.probs()));
        match self.rule {
            DecisionRule::MostLikelyAttacker => out.push_str("rule = argmax\n"),
            DecisionRule::AttackerMass(t) => {
                let _ = writeln!(out, "rule = mass {t}");
            }
        }
        let _ = writeln!(out, "fairness_threshold = {}", self.fairness_threshold);
        for d in DataLevel::ALL {
            for a in AttackerType::ALL {
                let _ = writeln!(out, "cpt.{d}.{a} = {}", row(self.cpt.row(d, a)));
            }
        }
        out
    }
}

fn parse_row(value: &str) -> Result<[f64; 5], String> {
    let nums: Vec<f64> = value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("bad number {s:?}")))
        .collect::<Result<_, _>>()?;
    nums.try_into().map_err(|v: Vec<f64>| format!("expected 5 values, got {}", v.len()))
}
