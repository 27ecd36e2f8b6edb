//! Two-part hurdle model on citation counts: a logistic part for crossing
//! the hurdle (more than three citations by default) and a Bayesian quantile
//! part for the counts above it.

mod logistic;
mod quantile;
pub mod summary;

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PubId, Publication};
use crate::growth::GrowthRecord;

pub use logistic::{fit_logistic_design, signif_code, two_sided_p, LogisticCoef, LogisticFit};
pub use quantile::{fit_quantile_design, CoefSummary, QuantileFit};
pub use summary::{logistic_table, quantile_table, summarize_fits, LogisticTableRow, QuantileTableRow, SIGNIF_LEGEND};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("design underdetermined: {rows} rows for {cols} coefficients")]
    Underdetermined { rows: usize, cols: usize },
    #[error("non-finite value in regression input")]
    NonFinite,
    #[error("quantile must lie strictly inside (0, 1), got {0}")]
    InvalidQuantile(f64),
    #[error("invalid MCMC config: {0}")]
    InvalidMcmc(String),
    #[error("outcome has a single class")]
    SingleClassOutcome,
    #[error("perfect separation: estimates do not exist")]
    PerfectSeparation,
    #[error("singular design; columns may be collinear")]
    SingularDesign,
}

/// One regression observation: the dependent citation count plus the four
/// explanatory variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionRow {
    pub citations: u64,
    pub growth_ratio: f64,
    pub num_authors: u32,
    pub num_references: u32,
    pub jif: f64,
}

pub const COEF_NAMES: [&str; 5] = [
    "(Intercept)",
    "growth_ratio",
    "num_authors",
    "num_references",
    "jif",
];

pub const DEFAULT_HURDLE: u64 = 3;

/// Rows at or below the hurdle versus strictly above it; order preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct HurdleSplit {
    pub low: Vec<RegressionRow>,
    pub high: Vec<RegressionRow>,
    pub hurdle: u64,
}

pub fn split_hurdle(rows: &[RegressionRow], hurdle: u64) -> HurdleSplit {
    let (high, low) = rows.iter().partition(|r| r.citations > hurdle);
    HurdleSplit { low, high, hurdle }
}

/// Quantile-regression check loss `sum_i r_i * (q - [r_i < 0])`.
pub fn check_loss(residuals: &[f64], q: f64) -> f64 {
    residuals
        .iter()
        .map(|&r| r * (q - if r < 0.0 { 1.0 } else { 0.0 }))
        .sum()
}

/// Sampler settings; defaults follow the reporting convention of 10,000
/// draws thinned by 10 with the first 500 kept draws discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub ndraw: usize,
    pub thin: usize,
    pub burnin_kept: usize,
    pub quantiles: Vec<f64>,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            ndraw: 10_000,
            thin: 10,
            burnin_kept: 500,
            quantiles: (1..=9).map(|d| d as f64 / 10.0).collect(),
            seed: 0,
        }
    }
}

impl McmcConfig {
    /// Kept draws before burn-in removal.
    pub fn kept(&self) -> usize {
        self.ndraw / self.thin
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if self.thin == 0 || self.ndraw < self.thin {
            return Err(StatsError::InvalidMcmc(format!(
                "need ndraw >= thin >= 1, got ndraw {} thin {}",
                self.ndraw, self.thin
            )));
        }
        if self.burnin_kept >= self.kept() {
            return Err(StatsError::InvalidMcmc(format!(
                "burn-in {} must be below kept draws {}",
                self.burnin_kept,
                self.kept()
            )));
        }
        Ok(())
    }
}

pub fn design_from_rows(rows: &[RegressionRow]) -> (DMatrix<f64>, DVector<f64>, Vec<String>) {
    let x = DMatrix::from_fn(rows.len(), 5, |i, j| match j {
        0 => 1.0,
        1 => rows[i].growth_ratio,
        2 => rows[i].num_authors as f64,
        3 => rows[i].num_references as f64,
        _ => rows[i].jif,
    });
    let y = DVector::from_fn(rows.len(), |i, _| rows[i].citations as f64);
    let names = COEF_NAMES.iter().map(|s| s.to_string()).collect();
    (x, y, names)
}

/// Quantile part: citation counts of the rows above the hurdle, response
/// untransformed, design = intercept plus the four explanatory variables.
pub fn fit_quantile(
    high_rows: &[RegressionRow],
    q: f64,
    cfg: &McmcConfig,
) -> Result<QuantileFit, StatsError> {
    let (x, y, names) = design_from_rows(high_rows);
    fit_quantile_design(&x, &y, &names, q, cfg)
}

/// Decile sweep, parallel across quantiles with per-quantile derived seeds;
/// results arrive in quantile order regardless of scheduling.
pub fn fit_quantile_sweep(
    high_rows: &[RegressionRow],
    cfg: &McmcConfig,
) -> Vec<(f64, Result<QuantileFit, StatsError>)> {
    let (x, y, names) = design_from_rows(high_rows);
    cfg.quantiles
        .par_iter()
        .enumerate()
        .map(|(i, &q)| {
            let per_fit = McmcConfig {
                seed: cfg.seed.wrapping_add(i as u64),
                ..cfg.clone()
            };
            (q, fit_quantile_design(&x, &y, &names, q, &per_fit))
        })
        .collect()
}

/// Logistic part: crossing the hurdle versus not.
pub fn fit_logistic(rows: &[RegressionRow], hurdle: u64) -> Result<LogisticFit, StatsError> {
    let (x, _, names) = design_from_rows(rows);
    let y = DVector::from_fn(rows.len(), |i, _| {
        if rows[i].citations > hurdle {
            1.0
        } else {
            0.0
        }
    });
    fit_logistic_design(&x, &y, &names)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssembledRows {
    pub rows: Vec<RegressionRow>,
    /// Publications whose topic had no growth record.
    pub missing_growth: u64,
    /// Publications in topics below the growth eligibility filter.
    pub ineligible_topic: u64,
}

/// Joins focal publications with their topic's growth record, keeping only
/// the given discipline and eligible topics. `pubs` must already carry
/// citation counts.
pub fn assemble_rows(
    pubs: &[Publication],
    growth: &BTreeMap<usize, GrowthRecord>,
    topic_of: &HashMap<PubId, usize>,
    discipline_of_topic: &BTreeMap<usize, usize>,
    discipline: usize,
) -> AssembledRows {
    let mut out = AssembledRows::default();
    for p in pubs {
        let Some(&topic) = topic_of.get(&p.pub_id) else {
            out.missing_growth += 1;
            continue;
        };
        if discipline_of_topic.get(&topic) != Some(&discipline) {
            continue;
        }
        let Some(record) = growth.get(&topic) else {
            out.missing_growth += 1;
            continue;
        };
        if !record.eligible {
            out.ineligible_topic += 1;
            continue;
        }
        out.rows.push(RegressionRow {
            citations: p.citation_count,
            growth_ratio: record.ratio,
            num_authors: p.n_authors,
            num_references: p.n_references,
            jif: p.jif,
        });
    }
    out
}
