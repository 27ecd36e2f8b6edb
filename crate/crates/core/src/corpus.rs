//! Publication and citation tables: loading, validation, filtering, and
//! citation counting within a configured window.
//!
//! A loaded corpus is immutable and can be shared freely across threads;
//! every downstream stage only reads it.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Publication identifier as it appears in the input tables.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct PubId(pub u64);

impl fmt::Display for PubId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocType {
    Article,
    Review,
    Other,
}

impl DocType {
    pub fn parse(s: &str) -> DocType {
        match s {
            "article" => DocType::Article,
            "review" => DocType::Review,
            _ => DocType::Other,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DocType::Article => "article",
            DocType::Review => "review",
            DocType::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Publication {
    pub pub_id: PubId,
    pub year: i32,
    pub doc_type: DocType,
    pub journal_id: u64,
    /// Journal impact factor, edition of the publication year. Ingested, not computed.
    pub jif: f64,
    pub n_authors: u32,
    pub n_references: u32,
    pub title_tokens: Vec<String>,
    /// Computed by [`count_citations`]; zero straight after loading.
    pub citation_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CitationEdge {
    pub citing: PubId,
    pub cited: PubId,
    pub citing_year: i32,
}

/// Inclusive calendar-year range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn new(start: i32, end: i32) -> Result<YearRange, CorpusError> {
        if start > end {
            return Err(CorpusError::InvalidFilter(format!(
                "year range start {start} after end {end}"
            )));
        }
        Ok(YearRange { start, end })
    }

    pub fn contains(&self, year: i32) -> bool {
        self.start <= year && year <= self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFilter {
    pub focal_year: i32,
    pub doc_types: BTreeSet<DocType>,
    pub citation_window: YearRange,
}

impl CorpusFilter {
    /// Focal-year articles and reviews with a multi-year citation window.
    pub fn new(
        focal_year: i32,
        doc_types: impl IntoIterator<Item = DocType>,
        citation_window: YearRange,
    ) -> Result<CorpusFilter, CorpusError> {
        if !citation_window.contains(focal_year) {
            return Err(CorpusError::InvalidFilter(format!(
                "focal year {} outside citation window {}-{}",
                focal_year, citation_window.start, citation_window.end
            )));
        }
        Ok(CorpusFilter {
            focal_year,
            doc_types: doc_types.into_iter().collect(),
            citation_window,
        })
    }
}

/// Maps the mandatory publication-table fields onto header names. The
/// defaults are the file contract; overriding them adapts foreign extracts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMap {
    pub pub_id: String,
    pub year: String,
    pub doc_type: String,
    pub journal_id: String,
    pub jif: String,
    pub n_authors: String,
    pub n_references: String,
    pub title: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            pub_id: "pub_id".into(),
            year: "year".into(),
            doc_type: "doc_type".into(),
            journal_id: "journal_id".into(),
            jif: "jif".into(),
            n_authors: "n_authors".into(),
            n_references: "n_references".into(),
            title: "title".into(),
        }
    }
}

pub const PUBLICATIONS_HEADER: &str =
    "pub_id\tyear\tdoc_type\tjournal_id\tjif\tn_authors\tn_references\ttitle";
pub const CITATIONS_HEADER: &str = "citing\tcited\tciting_year";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the input file (header is line 1).
    pub line: usize,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("empty file, no header row")]
    EmptyFile,
    #[error("missing mandatory column `{0}`")]
    MissingColumn(String),
    #[error("{} malformed row(s), first: {}", .0.len(), .0[0])]
    InvalidRows(Vec<RowError>),
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
}

/// Lowercases and splits a title on every non-alphanumeric character.
pub fn tokenize_title(title: &str) -> Vec<String> {
    title
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufReader::new(file).lines())
}

fn header_indices(
    header: &str,
    wanted: &[(&str, &String)],
) -> Result<HashMap<String, usize>, CorpusError> {
    let cols: Vec<&str> = header.split('\t').collect();
    let mut out = HashMap::new();
    for (field, name) in wanted {
        match cols.iter().position(|c| *c == name.as_str()) {
            Some(idx) => {
                out.insert((*field).to_string(), idx);
            }
            None => return Err(CorpusError::MissingColumn((*name).clone())),
        }
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(
    fields: &[&str],
    idx: usize,
    name: &str,
    line: usize,
    errors: &mut Vec<RowError>,
) -> Option<T> {
    let raw = match fields.get(idx) {
        Some(v) => *v,
        None => {
            errors.push(RowError {
                line,
                message: format!("missing value for `{name}`"),
            });
            return None;
        }
    };
    match raw.parse::<T>() {
        Ok(v) => Some(v),
        Err(_) => {
            errors.push(RowError {
                line,
                message: format!("non-numeric value `{raw}` in column `{name}`"),
            });
            None
        }
    }
}

/// Loads the publication table. Every malformed row is collected with its
/// line number and reported in one error; a clean file yields one
/// `Publication` per data row.
pub fn load_publications(path: &Path, schema: &ColumnMap) -> Result<Vec<Publication>, CorpusError> {
    let mut lines = open_lines(path)?;
    let header = match lines.next() {
        Some(h) => h.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?,
        None => return Err(CorpusError::EmptyFile),
    };
    let idx = header_indices(
        &header,
        &[
            ("pub_id", &schema.pub_id),
            ("year", &schema.year),
            ("doc_type", &schema.doc_type),
            ("journal_id", &schema.journal_id),
            ("jif", &schema.jif),
            ("n_authors", &schema.n_authors),
            ("n_references", &schema.n_references),
            ("title", &schema.title),
        ],
    )?;

    let mut pubs = Vec::new();
    let mut seen = HashMap::new();
    let mut errors = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let lineno = lineno + 2; // 1-based, after the header
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let pub_id: Option<u64> = parse_field(&fields, idx["pub_id"], "pub_id", lineno, &mut errors);
        let year: Option<i32> = parse_field(&fields, idx["year"], "year", lineno, &mut errors);
        let doc_type = fields.get(idx["doc_type"]).map(|s| DocType::parse(s));
        let journal_id: Option<u64> =
            parse_field(&fields, idx["journal_id"], "journal_id", lineno, &mut errors);
        let jif: Option<f64> = parse_field(&fields, idx["jif"], "jif", lineno, &mut errors);
        let n_authors: Option<u32> =
            parse_field(&fields, idx["n_authors"], "n_authors", lineno, &mut errors);
        let n_references: Option<u32> = parse_field(
            &fields,
            idx["n_references"],
            "n_references",
            lineno,
            &mut errors,
        );
        let title = fields.get(idx["title"]).copied().unwrap_or("");

        let (Some(pub_id), Some(year), Some(doc_type), Some(journal_id)) =
            (pub_id, year, doc_type, journal_id)
        else {
            continue;
        };
        let (Some(jif), Some(n_authors), Some(n_references)) = (jif, n_authors, n_references)
        else {
            continue;
        };

        if n_authors < 1 {
            errors.push(RowError {
                line: lineno,
                message: "n_authors must be at least 1".into(),
            });
            continue;
        }
        if !jif.is_finite() || jif < 0.0 {
            errors.push(RowError {
                line: lineno,
                message: format!("jif must be a finite nonnegative number, got {jif}"),
            });
            continue;
        }
        if let Some(prev) = seen.insert(pub_id, lineno) {
            errors.push(RowError {
                line: lineno,
                message: format!("duplicate pub_id {pub_id}, first seen on line {prev}"),
            });
            continue;
        }

        pubs.push(Publication {
            pub_id: PubId(pub_id),
            year,
            doc_type,
            journal_id,
            jif,
            n_authors,
            n_references,
            title_tokens: tokenize_title(title),
            citation_count: 0,
        });
    }

    if !errors.is_empty() {
        return Err(CorpusError::InvalidRows(errors));
    }
    pubs.sort_by_key(|p| p.pub_id);
    Ok(pubs)
}

/// Citation-table load report; duplicates are collapsed, not errors.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CitationLoadReport {
    pub duplicate_rows: u64,
}

pub fn load_citations(
    path: &Path,
) -> Result<(Vec<CitationEdge>, CitationLoadReport), CorpusError> {
    let mut lines = open_lines(path)?;
    let header = match lines.next() {
        Some(h) => h.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?,
        None => return Err(CorpusError::EmptyFile),
    };
    let names = ColumnMap::default();
    let citing_name = "citing".to_string();
    let cited_name = "cited".to_string();
    let year_name = "citing_year".to_string();
    let _ = names;
    let idx = header_indices(
        &header,
        &[
            ("citing", &citing_name),
            ("cited", &cited_name),
            ("citing_year", &year_name),
        ],
    )?;

    let mut edges = Vec::new();
    let mut errors = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let lineno = lineno + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let citing: Option<u64> = parse_field(&fields, idx["citing"], "citing", lineno, &mut errors);
        let cited: Option<u64> = parse_field(&fields, idx["cited"], "cited", lineno, &mut errors);
        let citing_year: Option<i32> =
            parse_field(&fields, idx["citing_year"], "citing_year", lineno, &mut errors);
        let (Some(citing), Some(cited), Some(citing_year)) = (citing, cited, citing_year) else {
            continue;
        };
        if citing == cited {
            errors.push(RowError {
                line: lineno,
                message: format!("self-citation: {citing} cites itself"),
            });
            continue;
        }
        edges.push(CitationEdge {
            citing: PubId(citing),
            cited: PubId(cited),
            citing_year,
        });
    }
    if !errors.is_empty() {
        return Err(CorpusError::InvalidRows(errors));
    }

    edges.sort_by_key(|e| (e.citing, e.cited, e.citing_year));
    let before = edges.len();
    edges.dedup();
    let report = CitationLoadReport {
        duplicate_rows: (before - edges.len()) as u64,
    };
    Ok((edges, report))
}

/// Retains exactly the publications with the focal year and an admitted
/// document type. Subset of the input; idempotent.
pub fn filter_corpus(pubs: &[Publication], filter: &CorpusFilter) -> Vec<Publication> {
    pubs.iter()
        .filter(|p| p.year == filter.focal_year && filter.doc_types.contains(&p.doc_type))
        .cloned()
        .collect()
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CitationCountReport {
    /// In-window edges whose cited id resolved to a publication.
    pub counted: u64,
    /// In-window edges pointing at ids absent from the corpus.
    pub dangling_cited: u64,
    /// Edges outside the citation window (ignored).
    pub out_of_window: u64,
}

/// Sets each publication's `citation_count` to the number of in-window
/// edges pointing at it. Dangling cited ids are warnings, not errors.
pub fn count_citations(
    pubs: &mut [Publication],
    edges: &[CitationEdge],
    window: YearRange,
) -> CitationCountReport {
    let index: HashMap<PubId, usize> = pubs
        .iter()
        .enumerate()
        .map(|(i, p)| (p.pub_id, i))
        .collect();
    for p in pubs.iter_mut() {
        p.citation_count = 0;
    }
    let mut report = CitationCountReport::default();
    for edge in edges {
        if !window.contains(edge.citing_year) {
            report.out_of_window += 1;
            continue;
        }
        match index.get(&edge.cited) {
            Some(&i) => {
                pubs[i].citation_count += 1;
                report.counted += 1;
            }
            None => report.dangling_cited += 1,
        }
    }
    report
}

/// Writes the publication table in the contract format (no citation_count
/// column; that field is computed, not ingested). Round-trips through
/// [`load_publications`].
pub fn write_publications(path: &Path, pubs: &[Publication]) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    writeln!(w, "{PUBLICATIONS_HEADER}").map_err(io_err)?;
    for p in pubs {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.pub_id,
            p.year,
            p.doc_type.as_str(),
            p.journal_id,
            p.jif,
            p.n_authors,
            p.n_references,
            p.title_tokens.join(" ")
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_citations(path: &Path, edges: &[CitationEdge]) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    writeln!(w, "{CITATIONS_HEADER}").map_err(io_err)?;
    for e in edges {
        writeln!(w, "{}\t{}\t{}", e.citing, e.cited, e.citing_year).map_err(io_err)?;
    }
    Ok(())
}
