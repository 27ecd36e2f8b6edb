//! Class labels from title terms. Terms are adjective/noun token runs ending
//! in a noun; term-frequency-to-specificity blends how common a term is in
//! the class with how exclusive it is to the class.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartOfSpeech {
    Noun,
    Adjective,
    Other,
}

/// Lexicon-based tagger; unknown tokens default to noun so untagged domain
/// vocabulary still forms terms.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PosLexicon {
    map: HashMap<String, PartOfSpeech>,
}

impl PosLexicon {
    pub fn new(entries: impl IntoIterator<Item = (String, PartOfSpeech)>) -> PosLexicon {
        PosLexicon {
            map: entries.into_iter().collect(),
        }
    }

    pub fn tag(&self, token: &str) -> PartOfSpeech {
        self.map.get(token).copied().unwrap_or(PartOfSpeech::Noun)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelConfig {
    /// Frequency weight in the score; 1 ranks by raw class frequency,
    /// 0 by specificity alone.
    pub alpha: f64,
    pub top_k: usize,
    pub lexicon: PosLexicon,
    /// Token canonicalization applied before term extraction, e.g. plural
    /// to singular. Identity when empty.
    pub normalizer: BTreeMap<String, String>,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            alpha: 0.67,
            top_k: 3,
            lexicon: PosLexicon::default(),
            normalizer: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermStats {
    pub term: String,
    pub class_freq: u64,
    pub corpus_freq: u64,
    /// `class_freq / corpus_freq`, in (0, 1].
    pub specificity: f64,
    /// `class_freq^alpha * specificity^(1-alpha)`.
    pub score: f64,
}

fn normalize<'a>(token: &'a str, cfg: &'a LabelConfig) -> &'a str {
    cfg.normalizer.get(token).map(String::as_str).unwrap_or(token)
}

/// Every contiguous sub-sequence of adjective/noun tokens that ends with a
/// noun, as a multiset. Tokens are expected lowercased and punctuation-free.
pub fn extract_terms(tokens: &[String], cfg: &LabelConfig) -> Vec<String> {
    let normalized: Vec<&str> = tokens.iter().map(|t| normalize(t, cfg)).collect();
    let tags: Vec<PartOfSpeech> = normalized.iter().map(|t| cfg.lexicon.tag(t)).collect();
    let mut terms = Vec::new();
    let mut run_start = 0;
    for i in 0..=tokens.len() {
        let in_run = i < tokens.len() && tags[i] != PartOfSpeech::Other;
        if in_run {
            continue;
        }
        // tokens[run_start..i] is a maximal adjective/noun run
        for end in run_start..i {
            if tags[end] != PartOfSpeech::Noun {
                continue;
            }
            for start in run_start..=end {
                terms.push(normalized[start..=end].join(" "));
            }
        }
        run_start = i + 1;
    }
    terms
}

/// Per-class and corpus-wide term frequencies over one hierarchy level.
#[derive(Debug, Clone, Default)]
pub struct TermCounts {
    pub per_class: BTreeMap<usize, BTreeMap<String, u64>>,
    pub corpus: BTreeMap<String, u64>,
}

pub fn collect_term_counts<'a>(
    titles: impl Iterator<Item = (usize, &'a [String])>,
    cfg: &LabelConfig,
) -> TermCounts {
    let mut counts = TermCounts::default();
    for (class, tokens) in titles {
        let class_counts = counts.per_class.entry(class).or_default();
        for term in extract_terms(tokens, cfg) {
            *class_counts.entry(term.clone()).or_insert(0) += 1;
            *counts.corpus.entry(term).or_insert(0) += 1;
        }
    }
    counts
}

/// Ranks one class's terms by descending score; ties break lexicographically.
pub fn tfs_rank(
    class_counts: &BTreeMap<String, u64>,
    corpus_counts: &BTreeMap<String, u64>,
    cfg: &LabelConfig,
) -> Vec<TermStats> {
    let mut stats: Vec<TermStats> = class_counts
        .iter()
        .map(|(term, &class_freq)| {
            let corpus_freq = corpus_counts.get(term).copied().unwrap_or(class_freq);
            let specificity = class_freq as f64 / corpus_freq as f64;
            let score = (class_freq as f64).powf(cfg.alpha) * specificity.powf(1.0 - cfg.alpha);
            TermStats {
                term: term.clone(),
                class_freq,
                corpus_freq,
                specificity,
                score,
            }
        })
        .collect();
    stats.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then_with(|| a.term.cmp(&b.term))
    });
    stats
}

/// Top-k ranked terms joined with "; ". Duplicate surface forms are
/// collapsed before joining; a class without terms gets a placeholder.
pub fn label_class(ranked: &[TermStats], class_id: usize, cfg: &LabelConfig) -> String {
    let mut picked: Vec<&str> = Vec::new();
    for stat in ranked {
        if picked.iter().any(|&t| t == stat.term) {
            continue;
        }
        picked.push(&stat.term);
        if picked.len() == cfg.top_k {
            break;
        }
    }
    if picked.is_empty() {
        return format!("unlabeled-{class_id}");
    }
    picked.join("; ")
}

/// Labels every class of one level in one pass.
pub fn label_level<'a>(
    titles: impl Iterator<Item = (usize, &'a [String])>,
    n_classes: usize,
    cfg: &LabelConfig,
) -> Vec<String> {
    let counts = collect_term_counts(titles, cfg);
    (0..n_classes)
        .map(|class| match counts.per_class.get(&class) {
            Some(class_counts) => {
                let ranked = tfs_rank(class_counts, &counts.corpus, cfg);
                label_class(&ranked, class, cfg)
            }
            None => format!("unlabeled-{class}"),
        })
        .collect()
}

/// `class_id	level	label`
pub fn write_labels_tsv(
    path: &Path,
    levels: &[(String, Vec<String>)],
) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: PathBuf::from(path),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(w, "class_id\tlevel\tlabel").map_err(io_err)?;
    for (level, labels) in levels {
        for (class_id, label) in labels.iter().enumerate() {
            writeln!(w, "{class_id}\t{level}\t{label}").map_err(io_err)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexicon() -> PosLexicon {
        PosLexicon::new(
            [
                ("cognitive", PartOfSpeech::Adjective),
                ("neuroscience", PartOfSpeech::Noun),
                ("memory", PartOfSpeech::Noun),
                ("of", PartOfSpeech::Other),
                ("running", PartOfSpeech::Other),
                ("quickly", PartOfSpeech::Other),
                ("deep", PartOfSpeech::Adjective),
            ]
            .map(|(t, p)| (t.to_string(), p)),
        )
    }

    fn cfg() -> LabelConfig {
        LabelConfig {
            lexicon: lexicon(),
            ..LabelConfig::default()
        }
    }

    fn tokens(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn empty_title_yields_no_terms() {
        assert!(extract_terms(&[], &cfg()).is_empty());
    }

    #[test]
    fn adjective_noun_runs_yield_noun_final_subsequences() {
        let terms = extract_terms(&tokens("cognitive neuroscience of memory"), &cfg());
        let mut sorted = terms.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["cognitive neuroscience", "memory", "neuroscience"]);
    }

    #[test]
    fn titles_without_a_noun_ending_yield_nothing() {
        assert!(extract_terms(&tokens("running quickly"), &cfg()).is_empty());
    }

    #[test]
    fn embedded_subsequences_are_all_extracted() {
        // deep(A) neuroscience(N) memory(N): each noun ends its prefixes.
        let terms = extract_terms(&tokens("deep neuroscience memory"), &cfg());
        let mut sorted = terms.clone();
        sorted.sort();
        assert_eq!(
            sorted,
            vec![
                "deep neuroscience",
                "deep neuroscience memory",
                "memory",
                "neuroscience",
                "neuroscience memory",
            ]
        );
    }

    #[test]
    fn alpha_one_ranks_by_class_frequency() {
        let class: BTreeMap<String, u64> =
            [("alpha".into(), 3), ("beta".into(), 9), ("gamma".into(), 5)].into();
        let corpus: BTreeMap<String, u64> =
            [("alpha".into(), 3), ("beta".into(), 900), ("gamma".into(), 5)].into();
        let mut c = cfg();
        c.alpha = 1.0;
        let ranked = tfs_rank(&class, &corpus, &c);
        let order: Vec<&str> = ranked.iter().map(|s| s.term.as_str()).collect();
        assert_eq!(order, vec!["beta", "gamma", "alpha"]);
    }

    #[test]
    fn alpha_zero_ranks_by_specificity() {
        let class: BTreeMap<String, u64> =
            [("alpha".into(), 3), ("beta".into(), 9), ("gamma".into(), 5)].into();
        let corpus: BTreeMap<String, u64> =
            [("alpha".into(), 3), ("beta".into(), 900), ("gamma".into(), 10)].into();
        let mut c = cfg();
        c.alpha = 0.0;
        let ranked = tfs_rank(&class, &corpus, &c);
        let order: Vec<&str> = ranked.iter().map(|s| s.term.as_str()).collect();
        assert_eq!(order, vec!["alpha", "gamma", "beta"]);
    }

    #[test]
    fn blended_score_matches_independent_recomputation() {
        // Two classes, four terms; expected scores recomputed by hand with
        // score = cf^0.67 * (cf/corpus)^0.33.
        let class: BTreeMap<String, u64> = [
            ("graphene".into(), 12),
            ("synthesis".into(), 8),
            ("novel".into(), 20),
            ("oxide".into(), 12),
        ]
        .into();
        let corpus: BTreeMap<String, u64> = [
            ("graphene".into(), 14),
            ("synthesis".into(), 60),
            ("novel".into(), 400),
            ("oxide".into(), 12),
        ]
        .into();
        let ranked = tfs_rank(&class, &corpus, &cfg());
        for s in &ranked {
            let expected =
                (s.class_freq as f64).powf(0.67) * (s.specificity).powf(0.33);
            assert!((s.score - expected).abs() < 1e-12);
        }
        let order: Vec<&str> = ranked.iter().map(|s| s.term.as_str()).collect();
        // oxide: 12^0.67*1 = 5.28; graphene: 12^0.67*(12/14)^0.33 = 5.02;
        // novel: 20^0.67*(0.05)^0.33 = 2.77; synthesis: 8^0.67*(8/60)^0.33 = 2.06.
        assert_eq!(order, vec!["oxide", "graphene", "novel", "synthesis"]);
    }

    #[test]
    fn equal_scores_break_lexicographically() {
        let class: BTreeMap<String, u64> = [("zeta".into(), 4), ("eta".into(), 4)].into();
        let corpus: BTreeMap<String, u64> = [("zeta".into(), 4), ("eta".into(), 4)].into();
        let ranked = tfs_rank(&class, &corpus, &cfg());
        assert_eq!(ranked[0].term, "eta");
    }

    #[test]
    fn label_joins_top_three_with_semicolons() {
        let ranked = vec![
            TermStats { term: "psychology".into(), class_freq: 9, corpus_freq: 9, specificity: 1.0, score: 9.0 },
            TermStats { term: "cognition".into(), class_freq: 7, corpus_freq: 7, specificity: 1.0, score: 7.0 },
            TermStats { term: "cognitive neuroscience".into(), class_freq: 5, corpus_freq: 5, specificity: 1.0, score: 5.0 },
            TermStats { term: "memory".into(), class_freq: 2, corpus_freq: 2, specificity: 1.0, score: 2.0 },
        ];
        assert_eq!(
            label_class(&ranked, 0, &cfg()),
            "psychology; cognition; cognitive neuroscience"
        );
    }

    #[test]
    fn single_term_class_is_that_term() {
        let ranked = vec![TermStats {
            term: "geology".into(),
            class_freq: 1,
            corpus_freq: 1,
            specificity: 1.0,
            score: 1.0,
        }];
        assert_eq!(label_class(&ranked, 0, &cfg()), "geology");
    }

    #[test]
    fn empty_class_gets_placeholder() {
        assert_eq!(label_class(&[], 17, &cfg()), "unlabeled-17");
    }

    #[test]
    fn plural_variants_collapse_under_normalizer() {
        let mut c = cfg();
        c.normalizer.insert("memories".into(), "memory".into());
        // Both titles produce "memory" after normalization; the ranked list
        // must not label with the same surface form twice.
        let titles = [
            (0usize, tokens("memory")),
            (0usize, tokens("memories")),
            (0usize, tokens("neuroscience")),
        ];
        let labels = label_level(titles.iter().map(|(c, t)| (*c, t.as_slice())), 1, &c);
        assert_eq!(labels[0], "memory; neuroscience");
    }

    #[test]
    fn labeling_is_deterministic() {
        let titles: Vec<(usize, Vec<String>)> = vec![
            (0, tokens("deep memory")),
            (1, tokens("cognitive neuroscience")),
            (0, tokens("memory")),
            (1, tokens("neuroscience memory")),
        ];
        let a = label_level(titles.iter().map(|(c, t)| (*c, t.as_slice())), 2, &cfg());
        let b = label_level(titles.iter().map(|(c, t)| (*c, t.as_slice())), 2, &cfg());
        assert_eq!(a, b);
    }

    #[test]
    fn titled_classes_never_get_empty_labels() {
        let titles = [(0usize, tokens("neuroscience"))];
        let labels = label_level(titles.iter().map(|(c, t)| (*c, t.as_slice())), 2, &cfg());
        assert_eq!(labels[0], "neuroscience");
        assert_eq!(labels[1], "unlabeled-1"); // class without any title
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Raising class frequency (corpus fixed) never lowers a term's
            /// rank; raising corpus frequency (class fixed) never raises it.
            #[test]
            fn score_monotonicity(
                cf in 1u64..40,
                extra_cf in 1u64..10,
                extra_corpus in 1u64..50,
                alpha in 0.0f64..=1.0,
            ) {
                let corpus = cf + extra_cf + extra_corpus;
                let score = |class_freq: u64, corpus_freq: u64| {
                    let spec = class_freq as f64 / corpus_freq as f64;
                    (class_freq as f64).powf(alpha) * spec.powf(1.0 - alpha)
                };
                // more in-class occurrences, corpus total fixed
                prop_assert!(score(cf + extra_cf, corpus) >= score(cf, corpus) - 1e-12);
                // same in-class occurrences, larger corpus total
                prop_assert!(score(cf, corpus + extra_corpus) <= score(cf, corpus) + 1e-12);
            }
        }
    }
}
