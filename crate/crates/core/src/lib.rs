//! Citation-network topic analysis: build a fractionally normalized
//! direct-citation graph over a publication corpus, detect topics with
//! Leiden under the constant Potts model, label them from title terms,
//! compute topic growth ratios, and relate growth to citation counts with a
//! two-part hurdle regression (Bayesian quantile part above the hurdle,
//! logistic part below). A synthetic-corpus generator with planted ground
//! truth drives verification end to end.

pub mod citegraph;
pub mod cluster;
pub mod corpus;
pub mod growth;
pub mod hurdle;
pub mod label;
pub mod pipeline;
pub mod synth;

pub use citegraph::{build_network, normalize_links, NormalizationMode, WeightedCitationGraph};
pub use cluster::{
    adjusted_rand_index, aggregate_network, build_hierarchy, cpm_quality, leiden_cpm,
    reclassify_small, ClassificationHierarchy, ClusterConfig, ClusterError, Partition,
};
pub use corpus::{
    count_citations, filter_corpus, load_citations, load_publications, CitationEdge, ColumnMap,
    CorpusError, CorpusFilter, DocType, PubId, Publication, YearRange,
};
pub use growth::{
    filter_topics, growth_ratio, smoothed_growth_ratio, topic_series, GrowthError, GrowthRecord,
    TopicSeries,
};
pub use hurdle::{
    assemble_rows, check_loss, fit_logistic, fit_quantile, split_hurdle, HurdleSplit, LogisticFit,
    McmcConfig, QuantileFit, RegressionRow, StatsError,
};
pub use pipeline::{run_pipeline, PipelineError, RunConfig};
pub use synth::{generate_corpus, SynthConfig, SynthError};
