//! Synthetic corpora with planted topics, growth schedules, and known
//! citation-generating coefficients. Yearly counts follow the schedule
//! exactly; expected citations of focal-year publications follow
//! `log lambda = beta0 + beta . x` with a negative-binomial realization, and
//! every generated citation is attached to a concrete later-year citing
//! publication so the same corpus exercises counting and clustering.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CitationEdge, DocType, PubId, Publication};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedBeta {
    pub intercept: f64,
    pub growth: f64,
    pub authors: f64,
    pub references: f64,
    pub jif: f64,
}

impl Default for PlantedBeta {
    fn default() -> Self {
        // Magnitudes shaped like the published discipline fits.
        PlantedBeta {
            intercept: 0.2,
            growth: 0.9,
            authors: 0.05,
            references: 0.01,
            jif: 0.3,
        }
    }
}

/// Covariate distribution shapes: authors shifted-geometric, references
/// negative-binomial, JIF log-normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariateConfig {
    pub author_success: f64,
    pub references_mean: f64,
    pub references_dispersion: f64,
    pub jif_log_mean: f64,
    pub jif_log_sd: f64,
}

impl Default for CovariateConfig {
    fn default() -> Self {
        CovariateConfig {
            author_success: 0.35,
            references_mean: 30.0,
            references_dispersion: 8.0,
            jif_log_mean: 0.7,
            jif_log_sd: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSchedule {
    /// Publications to create per year; exact, not expected.
    pub counts: BTreeMap<i32, u64>,
}

impl TopicSchedule {
    pub fn flat(years: RangeInclusive<i32>, per_year: u64) -> TopicSchedule {
        TopicSchedule {
            counts: years.map(|y| (y, per_year)).collect(),
        }
    }

    /// Step schedule: `base` per year up to and including `step_year - 1`,
    /// `later` from `step_year` on.
    pub fn step(years: RangeInclusive<i32>, step_year: i32, base: u64, later: u64) -> TopicSchedule {
        TopicSchedule {
            counts: years
                .map(|y| (y, if y < step_year { base } else { later }))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub topics: Vec<TopicSchedule>,
    pub focal_year: i32,
    /// Probability that a citation or reference stays inside its topic.
    pub within_topic_prob: f64,
    /// Background references drawn by every non-first-year publication.
    pub refs_per_pub: u32,
    pub beta: PlantedBeta,
    /// Negative-binomial dispersion of realized citation counts; larger
    /// values approach Poisson.
    pub dispersion: f64,
    pub covariates: CovariateConfig,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.within_topic_prob) {
            return Err(SynthError::InvalidConfig(format!(
                "within_topic_prob must lie in [0, 1], got {}",
                self.within_topic_prob
            )));
        }
        if !(self.dispersion > 0.0) {
            return Err(SynthError::InvalidConfig(
                "dispersion must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.covariates.author_success)
            || self.covariates.author_success <= 0.0
        {
            return Err(SynthError::InvalidConfig(
                "author_success must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedTopicTruth {
    pub topic_id: usize,
    pub dominant_term: String,
    pub schedule: BTreeMap<i32, u64>,
    /// Smoothed growth ratio implied by the schedule (windows `t-2..=t` and
    /// `t+1..=t+3` around the focal year); absent when the base window is empty.
    pub growth_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub seed: u64,
    pub beta: PlantedBeta,
    pub topics: Vec<PlantedTopicTruth>,
    /// pub_id -> planted topic.
    pub assignments: BTreeMap<u64, usize>,
    /// Citation events dropped because the citer pools ran dry.
    pub truncated_citations: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub publications: Vec<Publication>,
    pub edges: Vec<CitationEdge>,
    pub truth: PlantedTruth,
}

const SHARED_NOUNS: [&str; 6] = ["analysis", "study", "model", "data", "method", "evaluation"];
const SHARED_ADJECTIVES: [&str; 3] = ["novel", "robust", "empirical"];

fn schedule_growth_ratio(schedule: &BTreeMap<i32, u64>, focal_year: i32) -> Option<f64> {
    let window = |from: i32| -> u64 {
        (0..3)
            .map(|off| schedule.get(&(from - off)).copied().unwrap_or(0))
            .sum()
    };
    let base = window(focal_year);
    let later = window(focal_year + 3);
    if base == 0 {
        None
    } else {
        Some(later as f64 / base as f64)
    }
}

fn sample_shifted_geometric(rng: &mut ChaCha8Rng, success: f64) -> u32 {
    let u: f64 = rng.random();
    1 + ((1.0 - u).ln() / (1.0 - success).ln()).floor().max(0.0) as u32
}

fn sample_negative_binomial(rng: &mut ChaCha8Rng, mean: f64, dispersion: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let gamma = Gamma::new(dispersion, mean / dispersion).expect("valid gamma");
    let lambda: f64 = gamma.sample(rng);
    if lambda <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(lambda.min(1e6)).expect("positive lambda");
    poisson.sample(rng) as u64
}

/// Draws `k` distinct elements from `pool`, removing them. Order inside the
/// pool is irrelevant; selection is uniform.
fn draw_without_replacement(rng: &mut ChaCha8Rng, pool: &mut Vec<usize>, k: usize) -> Vec<usize> {
    let take = k.min(pool.len());
    let mut out = Vec::with_capacity(take);
    for _ in 0..take {
        let idx = rng.random_range(0..pool.len());
        out.push(pool.swap_remove(idx));
    }
    out
}

pub fn generate_corpus(cfg: &SynthConfig) -> Result<SyntheticCorpus, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut publications: Vec<Publication> = Vec::new();
    let mut topic_of: Vec<usize> = Vec::new(); // by publication index
    let mut assignments: BTreeMap<u64, usize> = BTreeMap::new();

    // Publications, topic by topic, year by year; ids are sequential.
    for (topic_id, schedule) in cfg.topics.iter().enumerate() {
        let dominant = format!("field{topic_id}term");
        for (&year, &count) in &schedule.counts {
            for k in 0..count {
                let pub_id = PubId(publications.len() as u64 + 1);
                let n_authors = sample_shifted_geometric(&mut rng, cfg.covariates.author_success);
                let n_references = sample_negative_binomial(
                    &mut rng,
                    cfg.covariates.references_mean,
                    cfg.covariates.references_dispersion,
                ) as u32;
                let jif = LogNormal::new(cfg.covariates.jif_log_mean, cfg.covariates.jif_log_sd)
                    .expect("valid log-normal")
                    .sample(&mut rng);
                let shared = SHARED_NOUNS[(pub_id.0 as usize) % SHARED_NOUNS.len()];
                let mut title_tokens = Vec::with_capacity(3);
                if rng.random::<f64>() < 0.3 {
                    let adj = SHARED_ADJECTIVES[(pub_id.0 as usize) % SHARED_ADJECTIVES.len()];
                    title_tokens.push(adj.to_string());
                }
                title_tokens.push(dominant.clone());
                title_tokens.push(shared.to_string());
                publications.push(Publication {
                    pub_id,
                    year,
                    doc_type: DocType::Article,
                    journal_id: (topic_id * 10 + (k % 5) as usize) as u64,
                    jif,
                    n_authors,
                    n_references,
                    title_tokens,
                    citation_count: 0,
                });
                topic_of.push(topic_id);
                assignments.insert(pub_id.0, topic_id);
            }
        }
    }

    let n = publications.len();
    let planted_growth: Vec<Option<f64>> = cfg
        .topics
        .iter()
        .map(|t| schedule_growth_ratio(&t.counts, cfg.focal_year))
        .collect();

    let mut edges: Vec<CitationEdge> = Vec::new();

    // Background references: every publication cites earlier years inside
    // (mostly) its own topic. Focal-year publications are never background
    // targets, so their citation counts stay exactly the planted draws.
    let min_year = publications.iter().map(|p| p.year).min().unwrap_or(0);
    for v in 0..n {
        let year = publications[v].year;
        if year == min_year {
            continue;
        }
        let topic = topic_of[v];
        let eligible = |u: usize| {
            publications[u].year < year && publications[u].year != cfg.focal_year
        };
        let mut within: Vec<usize> = (0..n).filter(|&u| eligible(u) && topic_of[u] == topic).collect();
        let mut cross: Vec<usize> = (0..n).filter(|&u| eligible(u) && topic_of[u] != topic).collect();
        for _ in 0..cfg.refs_per_pub {
            let use_within = rng.random::<f64>() < cfg.within_topic_prob;
            let pool = if use_within && !within.is_empty() {
                &mut within
            } else if !cross.is_empty() {
                &mut cross
            } else if !within.is_empty() {
                &mut within
            } else {
                break;
            };
            let target = draw_without_replacement(&mut rng, pool, 1);
            if let Some(&t) = target.first() {
                edges.push(CitationEdge {
                    citing: publications[v].pub_id,
                    cited: publications[t].pub_id,
                    citing_year: year,
                });
            }
        }
    }

    // Planted citations to focal-year publications from later years.
    let mut truncated = 0u64;
    let focal: Vec<usize> = (0..n)
        .filter(|&v| publications[v].year == cfg.focal_year)
        .collect();
    for &v in &focal {
        let topic = topic_of[v];
        let growth = planted_growth[topic].unwrap_or(1.0);
        let p = &publications[v];
        let log_lambda = cfg.beta.intercept
            + cfg.beta.growth * growth
            + cfg.beta.authors * p.n_authors as f64
            + cfg.beta.references * p.n_references as f64
            + cfg.beta.jif * p.jif;
        let lambda = log_lambda.exp().min(1e5);
        let wanted = sample_negative_binomial(&mut rng, lambda, cfg.dispersion);

        let mut within: Vec<usize> = (0..n)
            .filter(|&u| publications[u].year > cfg.focal_year && topic_of[u] == topic)
            .collect();
        let mut cross: Vec<usize> = (0..n)
            .filter(|&u| publications[u].year > cfg.focal_year && topic_of[u] != topic)
            .collect();
        let mut placed = 0u64;
        while placed < wanted {
            let use_within = rng.random::<f64>() < cfg.within_topic_prob;
            let pool = if use_within && !within.is_empty() {
                &mut within
            } else if !cross.is_empty() {
                &mut cross
            } else if !within.is_empty() {
                &mut within
            } else {
                truncated += wanted - placed;
                break;
            };
            let citer = draw_without_replacement(&mut rng, pool, 1)[0];
            edges.push(CitationEdge {
                citing: publications[citer].pub_id,
                cited: publications[v].pub_id,
                citing_year: publications[citer].year,
            });
            placed += 1;
        }
    }

    edges.sort_by_key(|e| (e.citing, e.cited, e.citing_year));

    let topics = cfg
        .topics
        .iter()
        .enumerate()
        .map(|(topic_id, t)| PlantedTopicTruth {
            topic_id,
            dominant_term: format!("field{topic_id}term"),
            schedule: t.counts.clone(),
            growth_ratio: planted_growth[topic_id],
        })
        .collect();

    Ok(SyntheticCorpus {
        publications,
        edges,
        truth: PlantedTruth {
            seed: cfg.seed,
            beta: cfg.beta,
            topics,
            assignments,
            truncated_citations: truncated,
        },
    })
}
