//! End-to-end orchestration from a JSON config: ingest, citation graph,
//! hierarchy clustering, labeling, growth ratios, per-discipline hurdle
//! fits, and report emission. Stage subcommands recompute their upstream
//! stages deterministically, so artifacts written by a partial run are
//! byte-identical to those of a full run under the same config and seeds.

pub mod figures;
pub mod report;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::fs::File;
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::citegraph::{build_network, normalize_links, NormalizationMode};
use crate::cluster::{
    build_hierarchy, write_classification_tsv, ClusterConfig,
};
use crate::corpus::{
    count_citations, filter_corpus, load_citations, load_publications, ColumnMap, CorpusFilter,
    DocType, PubId, Publication, YearRange,
};
use crate::growth::{
    filter_topics, smoothed_growth_ratio, topic_series, write_growth_tsv, GrowthRecord,
};
use crate::hurdle::{
    assemble_rows, fit_logistic, fit_quantile_sweep, logistic_table, quantile_table,
    split_hurdle, LogisticFit, McmcConfig, QuantileFit,
};
use crate::label::{label_level, LabelConfig};
use crate::synth::generate_corpus;
use crate::synth::SynthConfig;
use figures::{FIGURE_VARIABLES, FIGURE_VARIABLES as VARS};
use report::{counts_tsv, averages_tsv, discipline_averages, DisciplineAverages, DisciplineCounts};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {stage}: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
}

fn err(stage: &'static str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputPaths {
    pub publications: PathBuf,
    pub citations: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub focal_year: i32,
    pub doc_types: Vec<String>,
    pub citation_window: YearRange,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            focal_year: 2015,
            doc_types: vec!["article".into(), "review".into()],
            citation_window: YearRange {
                start: 2015,
                end: 2021,
            },
        }
    }
}

impl FilterConfig {
    fn to_corpus_filter(&self) -> Result<CorpusFilter, crate::corpus::CorpusError> {
        let window = YearRange::new(self.citation_window.start, self.citation_window.end)?;
        CorpusFilter::new(
            self.focal_year,
            self.doc_types.iter().map(|s| DocType::parse(s)),
            window,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub normalization: NormalizationMode,
    /// Also write `graph.tsv` (canonical a < b link dump).
    pub dump: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            normalization: NormalizationMode::TotalLinks,
            dump: false,
        }
    }
}

/// Clustering section. The default resolutions are calibrated for the
/// synthetic corpora this toolkit verifies against, not for a full
/// bibliographic database; override them for other scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterSection {
    pub resolutions: Vec<f64>,
    pub iterations: u32,
    pub seed: u64,
    pub min_class_size: u64,
}

impl Default for ClusterSection {
    fn default() -> Self {
        ClusterSection {
            resolutions: vec![0.02, 0.005, 0.00125, 0.0003],
            iterations: 10,
            seed: 0,
            min_class_size: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthSection {
    pub t: i32,
    pub delta_t: i32,
    pub min_mean: f64,
    /// Year range for the topic series; derived from the corpus when absent.
    pub years: Option<YearRange>,
}

impl Default for GrowthSection {
    fn default() -> Self {
        GrowthSection {
            t: 2015,
            delta_t: 3,
            min_mean: 5.0,
            years: None,
        }
    }
}

fn default_hurdle() -> u64 {
    3
}

fn default_max_disciplines() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Defaults to `<out_dir>/publications.tsv` and `<out_dir>/citations.tsv`,
    /// which is where the `synth` stage writes.
    #[serde(default)]
    pub inputs: Option<InputPaths>,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub cluster: ClusterSection,
    #[serde(default)]
    pub label: LabelConfig,
    #[serde(default)]
    pub growth: GrowthSection,
    #[serde(default)]
    pub mcmc: McmcConfig,
    #[serde(default = "default_hurdle")]
    pub hurdle: u64,
    /// Explicit discipline class ids; absent means the largest disciplines
    /// (by focal publications) up to `max_default_disciplines`.
    #[serde(default)]
    pub disciplines: Option<Vec<usize>>,
    #[serde(default = "default_max_disciplines")]
    pub max_default_disciplines: usize,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub synth: Option<SynthConfig>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| err("config", e))?;
        serde_json::from_str(&text).map_err(|e| err("config", e))
    }

    pub fn publications_path(&self) -> PathBuf {
        self.inputs
            .as_ref()
            .map(|i| i.publications.clone())
            .unwrap_or_else(|| self.out_dir.join("publications.tsv"))
    }

    pub fn citations_path(&self) -> PathBuf {
        self.inputs
            .as_ref()
            .map(|i| i.citations.clone())
            .unwrap_or_else(|| self.out_dir.join("citations.tsv"))
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// How far down the pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StageKind {
    Ingest,
    Cluster,
    Label,
    Growth,
    Fit,
    Report,
}

#[derive(Debug)]
pub struct DisciplineRun {
    pub discipline: usize,
    pub label: String,
    pub n_total: u64,
    pub n_included: u64,
    pub n_topics: u64,
    pub logistic: Result<LogisticFit, String>,
    pub quantile: Vec<(f64, Result<QuantileFit, String>)>,
}

#[derive(Debug, Default)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub n_publications: usize,
    pub n_focal: usize,
    pub warnings: Vec<String>,
    pub disciplines: Vec<DisciplineRun>,
}

pub const FOCAL_HEADER: &str =
    "pub_id\tyear\tdoc_type\tjournal_id\tjif\tn_authors\tn_references\ttitle\tcitation_count";

fn write_focal_tsv(path: &Path, pubs: &[Publication]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    writeln!(w, "{FOCAL_HEADER}")?;
    for p in pubs {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.pub_id,
            p.year,
            p.doc_type.as_str(),
            p.journal_id,
            p.jif,
            p.n_authors,
            p.n_references,
            p.title_tokens.join(" "),
            p.citation_count
        )?;
    }
    Ok(())
}

pub fn read_focal_tsv(path: &Path) -> Result<Vec<Publication>, PipelineError> {
    let file = File::open(path).map_err(|e| err("fit", format!("{}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| err("fit", "empty focal table"))?
        .map_err(|e| err("fit", e))?;
    if header != FOCAL_HEADER {
        return Err(err("fit", format!("unexpected focal header `{header}`")));
    }
    let mut pubs = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| err("fit", e))?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 9 {
            return Err(err("fit", format!("focal line {}: expected 9 fields", i + 2)));
        }
        let bad = |what: &str| err("fit", format!("focal line {}: bad {what}", i + 2));
        pubs.push(Publication {
            pub_id: PubId(f[0].parse().map_err(|_| bad("pub_id"))?),
            year: f[1].parse().map_err(|_| bad("year"))?,
            doc_type: DocType::parse(f[2]),
            journal_id: f[3].parse().map_err(|_| bad("journal_id"))?,
            jif: f[4].parse().map_err(|_| bad("jif"))?,
            n_authors: f[5].parse().map_err(|_| bad("n_authors"))?,
            n_references: f[6].parse().map_err(|_| bad("n_references"))?,
            title_tokens: crate::corpus::tokenize_title(f[7]),
            citation_count: f[8].parse().map_err(|_| bad("citation_count"))?,
        });
    }
    Ok(pubs)
}

/// Generates the synthetic corpus named by the config's `synth` section and
/// writes it in the exact formats the ingest stage consumes, plus the
/// planted ground truth.
pub fn run_synth(cfg: &RunConfig) -> Result<(), PipelineError> {
    let synth_cfg = cfg
        .synth
        .as_ref()
        .ok_or_else(|| err("synth", "config has no `synth` section"))?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| err("synth", e))?;
    let corpus = generate_corpus(synth_cfg).map_err(|e| err("synth", e))?;
    crate::corpus::write_publications(&cfg.out_dir.join("publications.tsv"), &corpus.publications)
        .map_err(|e| err("synth", e))?;
    crate::corpus::write_citations(&cfg.out_dir.join("citations.tsv"), &corpus.edges)
        .map_err(|e| err("synth", e))?;
    let truth = serde_json::to_string_pretty(&corpus.truth).map_err(|e| err("synth", e))?;
    fs::write(cfg.out_dir.join("truth.json"), truth + "\n").map_err(|e| err("synth", e))?;
    Ok(())
}

#[derive(Serialize)]
struct IngestMeta {
    n_publications: usize,
    n_focal: usize,
    citations_counted: u64,
    dangling_cited: u64,
    out_of_window: u64,
    duplicate_citation_rows: u64,
}

#[derive(Serialize)]
struct FitMeta<'a> {
    hurdle: u64,
    mcmc: &'a McmcConfig,
    seeds: BTreeMap<String, u64>,
    disciplines: Vec<FitDisciplineMeta>,
}

#[derive(Serialize)]
struct FitDisciplineMeta {
    id: usize,
    label: String,
    n_rows: u64,
    n_low: u64,
    n_high: u64,
    logistic: String,
    quantiles: Vec<(f64, String)>,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    version: &'a str,
    config: &'a RunConfig,
    warnings: &'a [String],
    disciplines: Vec<RunDisciplineMeta>,
}

#[derive(Serialize)]
struct RunDisciplineMeta {
    id: usize,
    label: String,
    n_total: u64,
    n_included: u64,
    n_topics: u64,
    logistic: String,
    quantiles: Vec<(f64, String)>,
}

/// Runs the pipeline from ingest through `through`, writing every artifact
/// along the way. All randomness is seed-derived, so partial runs agree with
/// full runs byte for byte.
pub fn run_through(cfg: &RunConfig, through: StageKind) -> Result<RunReport, PipelineError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| err("setup", e))?;
    let mut warnings: Vec<String> = Vec::new();
    let mut timings: Vec<(&'static str, u128)> = Vec::new();
    let mut report = RunReport {
        out_dir: cfg.out_dir.clone(),
        ..RunReport::default()
    };

    // ingest: load, validate, filter, count citations
    let clock = Instant::now();
    let schema = ColumnMap::default();
    let mut pubs =
        load_publications(&cfg.publications_path(), &schema).map_err(|e| err("ingest", e))?;
    if pubs.is_empty() {
        return Err(err("ingest", "empty corpus"));
    }
    let (edges, edge_report) =
        load_citations(&cfg.citations_path()).map_err(|e| err("ingest", e))?;
    if edge_report.duplicate_rows > 0 {
        warnings.push(format!(
            "ingest: {} duplicate citation rows collapsed",
            edge_report.duplicate_rows
        ));
    }
    let filter = cfg.filter.to_corpus_filter().map_err(|e| err("ingest", e))?;
    let count_report = count_citations(&mut pubs, &edges, filter.citation_window);
    if count_report.dangling_cited > 0 {
        warnings.push(format!(
            "ingest: {} in-window citations point outside the corpus",
            count_report.dangling_cited
        ));
    }
    let focal = filter_corpus(&pubs, &filter);
    write_focal_tsv(&cfg.artifact("focal.tsv"), &focal).map_err(|e| err("ingest", e))?;
    let ingest_meta = IngestMeta {
        n_publications: pubs.len(),
        n_focal: focal.len(),
        citations_counted: count_report.counted,
        dangling_cited: count_report.dangling_cited,
        out_of_window: count_report.out_of_window,
        duplicate_citation_rows: edge_report.duplicate_rows,
    };
    fs::write(
        cfg.artifact("ingest_meta.json"),
        serde_json::to_string_pretty(&ingest_meta).map_err(|e| err("ingest", e))? + "\n",
    )
    .map_err(|e| err("ingest", e))?;
    timings.push(("ingest", clock.elapsed().as_millis()));
    report.n_publications = pubs.len();
    report.n_focal = focal.len();
    if through == StageKind::Ingest {
        report.warnings = warnings;
        return Ok(report);
    }

    // graph + cluster
    let clock = Instant::now();
    let unit = build_network(&pubs, &edges);
    if unit.dropped_endpoints() > 0 {
        warnings.push(format!(
            "cluster: {} citation edges had endpoints outside the corpus",
            unit.dropped_endpoints()
        ));
    }
    let graph = normalize_links(&unit, cfg.graph.normalization);
    if cfg.graph.dump {
        graph
            .write_tsv(&cfg.artifact("graph.tsv"))
            .map_err(|e| err("cluster", e))?;
    }
    let cluster_cfg = ClusterConfig {
        resolution: *cfg.cluster.resolutions.first().unwrap_or(&0.0),
        iterations: cfg.cluster.iterations,
        seed: cfg.cluster.seed,
        min_class_size: cfg.cluster.min_class_size,
    };
    let hierarchy = build_hierarchy(&graph, &cfg.cluster.resolutions, &cluster_cfg)
        .map_err(|e| err("cluster", e))?;
    write_classification_tsv(&cfg.artifact("classification.tsv"), graph.ids(), &hierarchy)
        .map_err(|e| err("cluster", e))?;
    timings.push(("cluster", clock.elapsed().as_millis()));
    if through == StageKind::Cluster {
        report.warnings = warnings;
        return Ok(report);
    }

    // label every level from title terms
    let clock = Instant::now();
    debug_assert_eq!(graph.node_count(), pubs.len());
    let labels: Vec<(String, Vec<String>)> = hierarchy
        .levels
        .iter()
        .zip(hierarchy.level_names.iter())
        .map(|(level, name)| {
            let titles = (0..graph.node_count())
                .map(|v| (level.class_of(v), pubs[v].title_tokens.as_slice()));
            (
                name.clone(),
                label_level(titles, level.n_classes(), &cfg.label),
            )
        })
        .collect();
    crate::label::write_labels_tsv(&cfg.artifact("labels.tsv"), &labels)
        .map_err(|e| err("label", e))?;
    timings.push(("label", clock.elapsed().as_millis()));
    if through == StageKind::Label {
        report.warnings = warnings;
        return Ok(report);
    }

    // growth ratios at the topic level
    let clock = Instant::now();
    let topics = hierarchy.topics();
    let mut topic_of: BTreeMap<PubId, usize> = BTreeMap::new();
    let mut orphan_pubs = 0u64;
    for v in 0..graph.node_count() {
        let t = topics.class_of(v);
        if topics.is_orphan(t) {
            orphan_pubs += 1;
        } else {
            topic_of.insert(graph.ids()[v], t);
        }
    }
    if orphan_pubs > 0 {
        warnings.push(format!(
            "growth: {orphan_pubs} publications sit in orphan topics and are excluded"
        ));
    }
    let years = match cfg.growth.years {
        Some(r) => r.start..=r.end,
        None => {
            let lo = pubs.iter().map(|p| p.year).min().unwrap_or(cfg.growth.t);
            let hi = pubs.iter().map(|p| p.year).max().unwrap_or(cfg.growth.t);
            lo..=hi
        }
    };
    let series = topic_series(&topic_of, &pubs, years);
    let mut records: Vec<GrowthRecord> = Vec::new();
    let mut undefined = 0u64;
    let mut missing_years = 0u64;
    for s in series.values() {
        match smoothed_growth_ratio(s, cfg.growth.t, cfg.growth.delta_t) {
            Ok(r) => {
                missing_years += r.missing_years as u64;
                records.push(r);
            }
            Err(_) => undefined += 1,
        }
    }
    if undefined > 0 {
        warnings.push(format!(
            "growth: {undefined} topics had an empty base window and no growth ratio"
        ));
    }
    if missing_years > 0 {
        warnings.push(format!(
            "growth: {missing_years} window years were absent from the series and counted as zero"
        ));
    }
    filter_topics(&mut records, cfg.growth.min_mean);
    write_growth_tsv(&cfg.artifact("growth.tsv"), &records).map_err(|e| err("growth", e))?;
    timings.push(("growth", clock.elapsed().as_millis()));
    if through == StageKind::Growth {
        report.warnings = warnings;
        return Ok(report);
    }

    // per-discipline hurdle fits
    let clock = Instant::now();
    let disc_level = hierarchy
        .level_index("discipline")
        .unwrap_or(hierarchy.n_levels() - 1);
    let disc_part = &hierarchy.levels[disc_level];
    let disc_labels = &labels[disc_level].1;
    let mut discipline_of_topic: BTreeMap<usize, usize> = BTreeMap::new();
    for v in 0..graph.node_count() {
        let t = topics.class_of(v);
        let d = disc_part.class_of(v);
        if !topics.is_orphan(t) && !disc_part.is_orphan(d) {
            discipline_of_topic.insert(t, d);
        }
    }
    let growth_by_topic: BTreeMap<usize, GrowthRecord> =
        records.iter().map(|r| (r.topic_id, r.clone())).collect();
    let topic_of_focal: HashMap<PubId, usize> =
        topic_of.iter().map(|(&id, &t)| (id, t)).collect();

    let mut focal_per_discipline: BTreeMap<usize, u64> = BTreeMap::new();
    for p in &focal {
        if let Some(t) = topic_of.get(&p.pub_id) {
            if let Some(&d) = discipline_of_topic.get(t) {
                *focal_per_discipline.entry(d).or_insert(0) += 1;
            }
        }
    }
    let selected: Vec<usize> = match &cfg.disciplines {
        Some(ids) => {
            let mut ids = ids.clone();
            ids.sort_unstable();
            ids.dedup();
            for d in &ids {
                if *d >= disc_part.n_classes() {
                    warnings.push(format!("fit: discipline {d} does not exist; skipped"));
                }
            }
            ids.retain(|d| *d < disc_part.n_classes());
            ids
        }
        None => {
            let mut by_size: Vec<(u64, usize)> = focal_per_discipline
                .iter()
                .map(|(&d, &n)| (n, d))
                .collect();
            by_size.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut ids: Vec<usize> = by_size
                .into_iter()
                .take(cfg.max_default_disciplines)
                .map(|(_, d)| d)
                .collect();
            ids.sort_unstable();
            ids
        }
    };

    let mut seeds: BTreeMap<String, u64> = BTreeMap::new();
    let mut fit_metas: Vec<FitDisciplineMeta> = Vec::new();
    let mut averages: Vec<DisciplineAverages> = Vec::new();
    let mut counts: Vec<DisciplineCounts> = Vec::new();
    let mut figure_rows: Vec<(usize, Vec<crate::hurdle::RegressionRow>)> = Vec::new();

    for &d in &selected {
        let label = disc_labels
            .get(d)
            .cloned()
            .unwrap_or_else(|| format!("unlabeled-{d}"));
        let assembled = assemble_rows(
            &focal,
            &growth_by_topic,
            &topic_of_focal,
            &discipline_of_topic,
            d,
        );
        let n_total = focal_per_discipline.get(&d).copied().unwrap_or(0);
        let n_topics = growth_by_topic
            .values()
            .filter(|r| r.eligible && discipline_of_topic.get(&r.topic_id) == Some(&d))
            .count() as u64;
        let split = split_hurdle(&assembled.rows, cfg.hurdle);
        let disc_seed = cfg.mcmc.seed.wrapping_add((d as u64) << 32);
        seeds.insert(format!("discipline_{d}"), disc_seed);

        let logistic = fit_logistic(&assembled.rows, cfg.hurdle).map_err(|e| e.to_string());
        let quantile: Vec<(f64, Result<QuantileFit, String>)> = if split.high.is_empty() {
            warnings.push(format!(
                "fit: discipline {d} has no rows above the hurdle; quantile part omitted"
            ));
            Vec::new()
        } else {
            let mcmc = McmcConfig {
                seed: disc_seed,
                ..cfg.mcmc.clone()
            };
            fit_quantile_sweep(&split.high, &mcmc)
                .into_iter()
                .map(|(q, r)| (q, r.map_err(|e| e.to_string())))
                .collect()
        };

        match &logistic {
            Ok(fit) => {
                let table = logistic_table(fit);
                fs::write(
                    cfg.artifact(&format!("logistic_{d}.tsv")),
                    report::logistic_tsv(&table),
                )
                .map_err(|e| err("fit", e))?;
            }
            Err(e) => warnings.push(format!("fit: discipline {d} logistic part failed: {e}")),
        }
        let converged: Vec<QuantileFit> = quantile
            .iter()
            .filter_map(|(_, r)| r.as_ref().ok().filter(|f| f.converged).cloned())
            .collect();
        for (q, r) in &quantile {
            match r {
                Ok(f) if !f.converged => warnings.push(format!(
                    "fit: discipline {d} quantile {q} did not converge; omitted from reports"
                )),
                Err(e) => {
                    warnings.push(format!("fit: discipline {d} quantile {q} failed: {e}"))
                }
                _ => {}
            }
        }
        fs::write(
            cfg.artifact(&format!("quantile_{d}.tsv")),
            report::quantile_tsv(&quantile_table(&converged)),
        )
        .map_err(|e| err("fit", e))?;

        fit_metas.push(FitDisciplineMeta {
            id: d,
            label: label.clone(),
            n_rows: assembled.rows.len() as u64,
            n_low: split.low.len() as u64,
            n_high: split.high.len() as u64,
            logistic: match &logistic {
                Ok(_) => "ok".into(),
                Err(e) => format!("error: {e}"),
            },
            quantiles: quantile
                .iter()
                .map(|(q, r)| {
                    let status = match r {
                        Ok(f) if f.converged => "converged".to_string(),
                        Ok(_) => "non-converged (omitted)".to_string(),
                        Err(e) => format!("error: {e}"),
                    };
                    (*q, status)
                })
                .collect(),
        });
        averages.push(discipline_averages(d, &label, &assembled.rows));
        counts.push(DisciplineCounts {
            discipline: d,
            label: label.clone(),
            n_total,
            n_included: assembled.rows.len() as u64,
            n_topics,
        });
        figure_rows.push((d, assembled.rows.clone()));
        report.disciplines.push(DisciplineRun {
            discipline: d,
            label,
            n_total,
            n_included: assembled.rows.len() as u64,
            n_topics,
            logistic,
            quantile,
        });
    }

    let fit_meta = FitMeta {
        hurdle: cfg.hurdle,
        mcmc: &cfg.mcmc,
        seeds,
        disciplines: fit_metas,
    };
    fs::write(
        cfg.artifact("fit_meta.json"),
        serde_json::to_string_pretty(&fit_meta).map_err(|e| err("fit", e))? + "\n",
    )
    .map_err(|e| err("fit", e))?;
    timings.push(("fit", clock.elapsed().as_millis()));
    if through == StageKind::Fit {
        report.warnings = warnings;
        return Ok(report);
    }

    // report tables and figures
    let clock = Instant::now();
    fs::write(cfg.artifact("counts.tsv"), counts_tsv(&counts)).map_err(|e| err("report", e))?;
    fs::write(cfg.artifact("averages.tsv"), averages_tsv(&averages))
        .map_err(|e| err("report", e))?;
    let fig_dir = cfg.out_dir.join("figures");
    fs::create_dir_all(&fig_dir).map_err(|e| err("report", e))?;
    for (d, rows) in &figure_rows {
        let label = &report
            .disciplines
            .iter()
            .find(|r| r.discipline == *d)
            .expect("discipline present")
            .label;
        let extract = |name: &str| -> Vec<f64> {
            rows.iter()
                .map(|r| match name {
                    "citations" => r.citations as f64,
                    "growth_ratio" => r.growth_ratio,
                    "authors" => r.num_authors as f64,
                    "references" => r.num_references as f64,
                    _ => r.jif,
                })
                .collect()
        };
        let mut hist_panels = Vec::new();
        for spec in FIGURE_VARIABLES {
            let values = extract(spec.name);
            let bins = figures::histogram(&values, &spec);
            fs::write(
                fig_dir.join(format!("hist_{d}_{}.csv", spec.name)),
                figures::histogram_csv(&bins),
            )
            .map_err(|e| err("report", e))?;
            hist_panels.push((spec, bins));
        }
        fs::write(
            fig_dir.join(format!("fig1_{d}.svg")),
            figures::histograms_svg(label, &hist_panels),
        )
        .map_err(|e| err("report", e))?;

        let mut scatter_panels = Vec::new();
        for spec in &VARS[1..] {
            let points: Vec<(f64, u64)> = rows
                .iter()
                .map(|r| {
                    let x = match spec.name {
                        "growth_ratio" => r.growth_ratio,
                        "authors" => r.num_authors as f64,
                        "references" => r.num_references as f64,
                        _ => r.jif,
                    };
                    (x, r.citations)
                })
                .collect();
            fs::write(
                fig_dir.join(format!("scatter_{d}_{}.csv", spec.name)),
                figures::scatter_csv(spec.name, &points),
            )
            .map_err(|e| err("report", e))?;
            scatter_panels.push((*spec, points));
        }
        fs::write(
            fig_dir.join(format!("fig2_{d}.svg")),
            figures::scatter_svg(label, &scatter_panels),
        )
        .map_err(|e| err("report", e))?;

        let run = report
            .disciplines
            .iter()
            .find(|r| r.discipline == *d)
            .expect("discipline present");
        let converged: Vec<QuantileFit> = run
            .quantile
            .iter()
            .filter_map(|(_, r)| r.as_ref().ok().filter(|f| f.converged).cloned())
            .collect();
        if converged.is_empty() {
            warnings.push(format!(
                "report: discipline {d} has no converged quantile fits; figure 3 omitted"
            ));
        } else {
            fs::write(
                fig_dir.join(format!("fig3_{d}.svg")),
                figures::quantile_svg(label, &quantile_table(&converged)),
            )
            .map_err(|e| err("report", e))?;
        }
    }
    timings.push(("report", clock.elapsed().as_millis()));

    // deterministic run metadata; wall-clock timings go to a separate log
    let run_meta = RunMeta {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        warnings: &warnings,
        disciplines: report
            .disciplines
            .iter()
            .map(|r| RunDisciplineMeta {
                id: r.discipline,
                label: r.label.clone(),
                n_total: r.n_total,
                n_included: r.n_included,
                n_topics: r.n_topics,
                logistic: match &r.logistic {
                    Ok(_) => "ok".into(),
                    Err(e) => format!("error: {e}"),
                },
                quantiles: r
                    .quantile
                    .iter()
                    .map(|(q, res)| {
                        let status = match res {
                            Ok(f) if f.converged => "converged".to_string(),
                            Ok(_) => "non-converged (omitted)".to_string(),
                            Err(e) => format!("error: {e}"),
                        };
                        (*q, status)
                    })
                    .collect(),
            })
            .collect(),
    };
    fs::write(
        cfg.artifact("run_meta.json"),
        serde_json::to_string_pretty(&run_meta).map_err(|e| err("report", e))? + "\n",
    )
    .map_err(|e| err("report", e))?;
    let mut timing_log = String::new();
    for (stage, ms) in &timings {
        timing_log.push_str(&format!("{stage}\t{ms} ms\n"));
    }
    fs::write(cfg.artifact("timings.log"), timing_log).map_err(|e| err("report", e))?;

    report.warnings = warnings;
    Ok(report)
}

/// Full pipeline: ingest through report, with run metadata.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport, PipelineError> {
    run_through(cfg, StageKind::Report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{CovariateConfig, PlantedBeta, TopicSchedule};

    fn synth_section(seed: u64) -> SynthConfig {
        let mut topics = Vec::new();
        for i in 0..6 {
            let (base, later) = if i % 2 == 0 { (8, 20) } else { (12, 10) };
            topics.push(TopicSchedule::step(2012..=2018, 2016, base, later));
        }
        SynthConfig {
            topics,
            focal_year: 2015,
            within_topic_prob: 0.97,
            refs_per_pub: 5,
            beta: PlantedBeta::default(),
            dispersion: 3.0,
            covariates: CovariateConfig::default(),
            seed,
        }
    }

    fn test_config(dir: &Path) -> RunConfig {
        RunConfig {
            inputs: None,
            filter: FilterConfig::default(),
            graph: GraphConfig { normalization: NormalizationMode::TotalLinks, dump: true },
            cluster: ClusterSection {
                resolutions: vec![0.01, 0.004, 0.0015, 0.0005],
                iterations: 6,
                seed: 3,
                min_class_size: 5,
            },
            label: LabelConfig::default(),
            growth: GrowthSection::default(),
            mcmc: McmcConfig {
                ndraw: 600,
                thin: 3,
                burnin_kept: 100,
                quantiles: vec![0.25, 0.5, 0.75],
                seed: 9,
            },
            hurdle: 3,
            disciplines: None,
            max_default_disciplines: 8,
            out_dir: dir.to_path_buf(),
            synth: Some(synth_section(21)),
        }
    }

    #[test]
    fn full_run_writes_the_complete_artifact_set() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = test_config(dir.path());
        run_synth(&cfg).unwrap();
        let report = run_pipeline(&cfg).unwrap();
        assert!(report.n_publications > 0);
        assert!(!report.disciplines.is_empty());
        for name in [
            "publications.tsv",
            "citations.tsv",
            "truth.json",
            "focal.tsv",
            "ingest_meta.json",
            "graph.tsv",
            "classification.tsv",
            "labels.tsv",
            "growth.tsv",
            "fit_meta.json",
            "counts.tsv",
            "averages.tsv",
            "run_meta.json",
            "timings.log",
        ] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
        let d = report.disciplines[0].discipline;
        assert!(dir.path().join(format!("quantile_{d}.tsv")).exists());
        let figdir = dir.path().join("figures");
        assert!(figdir.join(format!("fig1_{d}.svg")).exists());
        assert!(figdir.join(format!("fig2_{d}.svg")).exists());
        assert!(figdir.join(format!("hist_{d}_citations.csv")).exists());
    }

    #[test]
    fn empty_corpus_aborts_with_stage_tag() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = test_config(dir.path());
        std::fs::write(
            dir.path().join("publications.tsv"),
            crate::corpus::PUBLICATIONS_HEADER.to_string() + "\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("citations.tsv"),
            crate::corpus::CITATIONS_HEADER.to_string() + "\n",
        )
        .unwrap();
        let e = run_pipeline(&cfg).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("ingest"), "{msg}");
        assert!(msg.contains("empty corpus"), "{msg}");
    }

    #[test]
    fn stage_prefixes_stop_where_asked() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = test_config(dir.path());
        run_synth(&cfg).unwrap();
        run_through(&cfg, StageKind::Growth).unwrap();
        assert!(dir.path().join("growth.tsv").exists());
        assert!(!dir.path().join("counts.tsv").exists());
        assert!(dir.path().join("classification.tsv").exists());
    }

    #[test]
    fn focal_roundtrip_preserves_counts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = test_config(dir.path());
        run_synth(&cfg).unwrap();
        run_through(&cfg, StageKind::Ingest).unwrap();
        let focal = read_focal_tsv(&cfg.artifact("focal.tsv")).unwrap();
        assert!(!focal.is_empty());
        assert!(focal.iter().any(|p| p.citation_count > 0));
        assert!(focal.iter().all(|p| p.year == 2015));
    }
}
