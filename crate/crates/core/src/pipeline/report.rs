//! Per-discipline report tables: publication/topic counts, per-publication
//! variable averages, and the regression result tables. Formatters only
//! round; every number comes from an upstream artifact.

use std::fmt::Write as _;

use crate::hurdle::{
    LogisticTableRow, QuantileTableRow, RegressionRow, SIGNIF_LEGEND,
};

/// Counts line: total focal publications, publications kept after the
/// small-topic exclusion, and eligible topics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisciplineCounts {
    pub discipline: usize,
    pub label: String,
    pub n_total: u64,
    pub n_included: u64,
    pub n_topics: u64,
}

pub fn counts_tsv(rows: &[DisciplineCounts]) -> String {
    let mut out =
        String::from("discipline_id\tlabel\tn_publications_total\tn_publications_included\tn_topics\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.discipline, r.label, r.n_total, r.n_included, r.n_topics
        );
    }
    out
}

/// Per-publication means of the five analysis variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DisciplineAverages {
    pub discipline: usize,
    pub label: String,
    pub n: u64,
    pub citations: f64,
    pub authors: f64,
    pub references: f64,
    pub growth_ratio: f64,
    pub jif: f64,
}

/// Means weighted per publication across all of a discipline's rows.
pub fn discipline_averages(
    discipline: usize,
    label: &str,
    rows: &[RegressionRow],
) -> DisciplineAverages {
    let n = rows.len() as f64;
    let sum = |f: &dyn Fn(&RegressionRow) -> f64| -> f64 {
        if rows.is_empty() {
            0.0
        } else {
            rows.iter().map(f).sum::<f64>() / n
        }
    };
    DisciplineAverages {
        discipline,
        label: label.to_string(),
        n: rows.len() as u64,
        citations: sum(&|r| r.citations as f64),
        authors: sum(&|r| r.num_authors as f64),
        references: sum(&|r| r.num_references as f64),
        growth_ratio: sum(&|r| r.growth_ratio),
        jif: sum(&|r| r.jif),
    }
}

/// One decimal place with a trailing `.0` dropped, the averages-table style
/// (19.4, 4.1, but 12 rather than 12.0).
pub fn format_average(x: f64) -> String {
    let s = format!("{x:.1}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

pub fn averages_tsv(rows: &[DisciplineAverages]) -> String {
    let mut out = String::from(
        "discipline_id\tlabel\tavg_citations\tavg_authors\tavg_references\tavg_growth_ratio\tavg_jif\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.discipline,
            r.label,
            format_average(r.citations),
            format_average(r.authors),
            format_average(r.references),
            format_average(r.growth_ratio),
            format_average(r.jif),
        );
    }
    out
}

pub fn logistic_tsv(rows: &[LogisticTableRow]) -> String {
    let mut out = String::from("variable\testimate\texp_estimate\tse\tz_value\tp_value\tsignif\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.variable, r.estimate, r.exp_estimate, r.se, r.z_value, r.p_value, r.signif
        );
    }
    let _ = writeln!(out, "# Signif. codes: {SIGNIF_LEGEND}");
    out
}

pub fn quantile_tsv(rows: &[QuantileTableRow]) -> String {
    let mut out = String::from("quantile\tvariable\tmean\tlower_2_5\tupper_97_5\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.quantile, r.variable, r.mean, r.lower, r.upper
        );
    }
    out
}

/// Parses a quantile table back for figure generation from artifacts.
pub fn parse_quantile_tsv(content: &str) -> Result<Vec<QuantileTableRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if i == 0 || line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(format!("line {}: expected 5 fields", i + 1));
        }
        let parse = |s: &str| -> Result<f64, String> {
            s.parse().map_err(|_| format!("line {}: bad number `{s}`", i + 1))
        };
        rows.push(QuantileTableRow {
            quantile: parse(f[0])?,
            variable: f[1].to_string(),
            mean: parse(f[2])?,
            lower: parse(f[3])?,
            upper: parse(f[4])?,
        });
    }
    Ok(rows)
}
