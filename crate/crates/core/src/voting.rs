//! Hard, soft and cutoff-based mixed voting over base-model probabilities.
//!
//! A probability counts as a sarcastic vote when it is strictly greater than
//! the threshold. Mixed voting uses the hard majority when the vote margin
//! `|c₁ - c₀|` is strictly greater than the cutoff `n`, and the soft average
//! otherwise; `n = 0` with an odd number of voters is plain hard voting and
//! `n = M` is plain soft voting. Exact ties resolve to `tie_label`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::predictions::PredictionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Hard,
    Soft,
    Mixed,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Hard => "hard",
            Scheme::Soft => "soft",
            Scheme::Mixed => "mixed",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "hard" => Ok(Scheme::Hard),
            "soft" => Ok(Scheme::Soft),
            "mixed" => Ok(Scheme::Mixed),
            other => Err(format!("unknown voting scheme `{other}` (expected hard, soft or mixed)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VotingConfig {
    pub scheme: Scheme,
    #[serde(default)]
    pub cutoff_n: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_tie_label")]
    pub tie_label: Label,
}

fn default_threshold() -> f64 {
    0.5
}

fn default_tie_label() -> Label {
    Label::NotSarcastic
}

impl Default for VotingConfig {
    fn default() -> Self {
        VotingConfig {
            scheme: Scheme::Hard,
            cutoff_n: 0,
            threshold: default_threshold(),
            tie_label: default_tie_label(),
        }
    }
}

impl VotingConfig {
    pub fn hard() -> Self {
        VotingConfig::default()
    }

    pub fn soft() -> Self {
        VotingConfig {
            scheme: Scheme::Soft,
            ..VotingConfig::default()
        }
    }

    pub fn mixed(cutoff_n: usize) -> Self {
        VotingConfig {
            scheme: Scheme::Mixed,
            cutoff_n,
            ..VotingConfig::default()
        }
    }
}

fn positive_votes(row: &[f64], threshold: f64) -> usize {
    row.iter().filter(|&&p| p > threshold).count()
}

pub fn hard_vote(row: &[f64], config: &VotingConfig) -> Result<Label> {
    if row.is_empty() {
        return Err(Error::EmptyRow);
    }
    let positive = positive_votes(row, config.threshold);
    let negative = row.len() - positive;
    Ok(match positive.cmp(&negative) {
        std::cmp::Ordering::Greater => Label::Sarcastic,
        std::cmp::Ordering::Less => Label::NotSarcastic,
        std::cmp::Ordering::Equal => config.tie_label,
    })
}

/// Mean of the row, summed in ascending order so the result does not depend on
/// column order and is monotone in every entry.
fn ordered_mean(row: &[f64]) -> f64 {
    let mut sorted = row.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum::<f64>() / row.len() as f64
}

pub fn soft_vote(row: &[f64], config: &VotingConfig) -> Result<Label> {
    if row.is_empty() {
        return Err(Error::EmptyRow);
    }
    let mean = ordered_mean(row);
    Ok(if mean > config.threshold {
        Label::Sarcastic
    } else if mean < config.threshold {
        Label::NotSarcastic
    } else {
        config.tie_label
    })
}

pub fn mixed_vote(row: &[f64], config: &VotingConfig) -> Result<Label> {
    if row.is_empty() {
        return Err(Error::EmptyRow);
    }
    if config.cutoff_n > row.len() {
        return Err(Error::InvalidCutoff {
            n: config.cutoff_n,
            m: row.len(),
        });
    }
    let positive = positive_votes(row, config.threshold);
    let margin = positive.abs_diff(row.len() - positive);
    if margin > config.cutoff_n {
        hard_vote(row, config)
    } else {
        soft_vote(row, config)
    }
}

pub fn vote(row: &[f64], config: &VotingConfig) -> Result<Label> {
    match config.scheme {
        Scheme::Hard => hard_vote(row, config),
        Scheme::Soft => soft_vote(row, config),
        Scheme::Mixed => mixed_vote(row, config),
    }
}

pub fn vote_matrix(matrix: &PredictionMatrix, config: &VotingConfig) -> Result<Vec<Label>> {
    if config.scheme == Scheme::Mixed && config.cutoff_n > matrix.n_models() {
        return Err(Error::InvalidCutoff {
            n: config.cutoff_n,
            m: matrix.n_models(),
        });
    }
    matrix.rows().iter().map(|row| vote(row, config)).collect()
}

/// Scans every cutoff `n ∈ 0..=M` with mixed voting and returns the one with
/// the highest validation accuracy (smallest `n` on ties) with that accuracy.
pub fn tune_cutoff(val_matrix: &PredictionMatrix, config: &VotingConfig) -> Result<(usize, f64)> {
    if val_matrix.n_examples() == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let mut best: Option<(usize, f64)> = None;
    for n in 0..=val_matrix.n_models() {
        let cfg = VotingConfig {
            scheme: Scheme::Mixed,
            cutoff_n: n,
            ..*config
        };
        let predicted = vote_matrix(val_matrix, &cfg)?;
        let correct = predicted
            .iter()
            .zip(val_matrix.labels())
            .filter(|(p, g)| p == g)
            .count();
        let acc = correct as f64 / val_matrix.n_examples() as f64;
        if best.is_none_or(|(_, best_acc)| acc > best_acc) {
            best = Some((n, acc));
        }
    }
    Ok(best.expect("at least n = 0 is scanned"))
}
