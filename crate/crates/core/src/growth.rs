//! Per-topic publication time series and growth ratios. Window sums are kept
//! as integers internally so three-year means never pick up rounding drift;
//! floating point appears only in the exported values.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::{CorpusError, PubId, Publication};

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("growth ratio undefined for topic {topic}: base count is zero")]
    UndefinedRatio { topic: usize },
}

/// Yearly publication counts of one topic over a requested year range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicSeries {
    pub topic_id: usize,
    pub counts: BTreeMap<i32, u64>,
}

impl TopicSeries {
    pub fn count(&self, year: i32) -> u64 {
        self.counts.get(&year).copied().unwrap_or(0)
    }
}

/// Smoothed growth of one topic: three-year mean publication counts around
/// `t` and `t + delta_t`, and their ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRecord {
    pub topic_id: usize,
    pub mean_base: f64,
    pub mean_later: f64,
    pub ratio: f64,
    pub eligible: bool,
    sum_base: u64,
    sum_later: u64,
    window_len: u32,
    /// Years absent from the series that were treated as zero.
    pub missing_years: u32,
}

impl GrowthRecord {
    pub fn sum_base(&self) -> u64 {
        self.sum_base
    }

    pub fn sum_later(&self) -> u64 {
        self.sum_later
    }

    pub fn window_len(&self) -> u32 {
        self.window_len
    }
}

/// Counts publications per topic per year. Years outside the requested
/// range are omitted; years without publications appear with count 0.
pub fn topic_series(
    topic_of: &BTreeMap<PubId, usize>,
    pubs: &[Publication],
    years: RangeInclusive<i32>,
) -> BTreeMap<usize, TopicSeries> {
    let mut series: BTreeMap<usize, TopicSeries> = BTreeMap::new();
    for &topic_id in topic_of.values() {
        series.entry(topic_id).or_insert_with(|| TopicSeries {
            topic_id,
            counts: years.clone().map(|y| (y, 0)).collect(),
        });
    }
    for p in pubs {
        if !years.contains(&p.year) {
            continue;
        }
        let Some(&topic_id) = topic_of.get(&p.pub_id) else {
            continue;
        };
        if let Some(s) = series.get_mut(&topic_id) {
            *s.counts.get_mut(&p.year).expect("year materialized") += 1;
        }
    }
    series
}

/// Raw one-year growth ratio `count(t + delta_t) / count(t)`.
pub fn growth_ratio(series: &TopicSeries, t: i32, delta_t: i32) -> Result<f64, GrowthError> {
    let base = series.count(t);
    if base == 0 {
        return Err(GrowthError::UndefinedRatio {
            topic: series.topic_id,
        });
    }
    Ok(series.count(t + delta_t) as f64 / base as f64)
}

/// Smoothed growth ratio: mean count over `{t-2, t-1, t}` versus the mean
/// over `{t+dt-2, t+dt-1, t+dt}`. Both windows have equal length, so the
/// ratio is computed straight from the integer sums.
pub fn smoothed_growth_ratio(
    series: &TopicSeries,
    t: i32,
    delta_t: i32,
) -> Result<GrowthRecord, GrowthError> {
    const WINDOW: i32 = 3;
    let mut sum_base = 0u64;
    let mut sum_later = 0u64;
    let mut missing_years = 0u32;
    for off in 0..WINDOW {
        let base_year = t - off;
        let later_year = t + delta_t - off;
        for (year, sum) in [(base_year, &mut sum_base), (later_year, &mut sum_later)] {
            match series.counts.get(&year) {
                Some(&c) => *sum += c,
                None => missing_years += 1, // treated as zero
            }
        }
    }
    if sum_base == 0 {
        return Err(GrowthError::UndefinedRatio {
            topic: series.topic_id,
        });
    }
    Ok(GrowthRecord {
        topic_id: series.topic_id,
        mean_base: sum_base as f64 / WINDOW as f64,
        mean_later: sum_later as f64 / WINDOW as f64,
        ratio: sum_later as f64 / sum_base as f64,
        eligible: false,
        sum_base,
        sum_later,
        window_len: WINDOW as u32,
        missing_years,
    })
}

/// Flags records whose both window means exceed `min_mean`. With the
/// default of 5 and three-year windows this is exactly the "more than 15
/// publications per window" rule.
pub fn filter_topics(records: &mut [GrowthRecord], min_mean: f64) {
    for r in records {
        let threshold = min_mean * r.window_len as f64;
        r.eligible = (r.sum_base as f64) > threshold && (r.sum_later as f64) > threshold;
    }
}

/// `topic_id	mean_base	mean_later	ratio	eligible`
pub fn write_growth_tsv(path: &Path, records: &[GrowthRecord]) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: PathBuf::from(path),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(w, "topic_id\tmean_base\tmean_later\tratio\teligible").map_err(io_err)?;
    for r in records {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            r.topic_id, r.mean_base, r.mean_later, r.ratio, r.eligible
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn read_growth_tsv(path: &Path) -> Result<Vec<GrowthRecord>, CorpusError> {
    use std::io::BufRead;
    let io_err = |source| CorpusError::Io {
        path: PathBuf::from(path),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut lines = std::io::BufReader::new(file).lines();
    let _header = lines.next().ok_or(CorpusError::EmptyFile)?.map_err(io_err)?;
    let mut out = Vec::new();
    for line in lines {
        let line = line.map_err(io_err)?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let bad = |msg: &str| {
            CorpusError::InvalidRows(vec![crate::corpus::RowError {
                line: 0,
                message: msg.to_string(),
            }])
        };
        if f.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        let mean_base: f64 = f[1].parse().map_err(|_| bad("bad mean_base"))?;
        let mean_later: f64 = f[2].parse().map_err(|_| bad("bad mean_later"))?;
        out.push(GrowthRecord {
            topic_id: f[0].parse().map_err(|_| bad("bad topic_id"))?,
            mean_base,
            mean_later,
            ratio: f[3].parse().map_err(|_| bad("bad ratio"))?,
            eligible: f[4].parse().map_err(|_| bad("bad eligible"))?,
            sum_base: (mean_base * 3.0).round() as u64,
            sum_later: (mean_later * 3.0).round() as u64,
            window_len: 3,
            missing_years: 0,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocType;

    fn series(topic_id: usize, pairs: &[(i32, u64)]) -> TopicSeries {
        TopicSeries {
            topic_id,
            counts: pairs.iter().copied().collect(),
        }
    }

    fn pub_in(pub_id: u64, year: i32) -> Publication {
        Publication {
            pub_id: PubId(pub_id),
            year,
            doc_type: DocType::Article,
            journal_id: 0,
            jif: 0.0,
            n_authors: 1,
            n_references: 0,
            title_tokens: vec![],
            citation_count: 0,
        }
    }

    #[test]
    fn topic_series_materializes_zero_years_and_clips_range() {
        let pubs = vec![
            pub_in(1, 2013),
            pub_in(2, 2013),
            pub_in(3, 2015),
            pub_in(4, 2011), // outside requested range
        ];
        let topic_of: BTreeMap<PubId, usize> =
            [(PubId(1), 0), (PubId(2), 0), (PubId(3), 0), (PubId(4), 0)].into();
        let s = topic_series(&topic_of, &pubs, 2013..=2015);
        let t = &s[&0];
        assert_eq!(t.count(2013), 2);
        assert_eq!(t.count(2014), 0);
        assert_eq!(t.count(2015), 1);
        assert!(!t.counts.contains_key(&2011));
    }

    #[test]
    fn topic_series_matches_hand_tally() {
        // 7 pubs across 3 topics.
        let pubs = vec![
            pub_in(1, 2013),
            pub_in(2, 2014),
            pub_in(3, 2014),
            pub_in(4, 2013),
            pub_in(5, 2015),
            pub_in(6, 2015),
            pub_in(7, 2015),
        ];
        let topic_of: BTreeMap<PubId, usize> = [
            (PubId(1), 0),
            (PubId(2), 0),
            (PubId(3), 1),
            (PubId(4), 1),
            (PubId(5), 1),
            (PubId(6), 2),
            (PubId(7), 2),
        ]
        .into();
        let s = topic_series(&topic_of, &pubs, 2013..=2015);
        assert_eq!(s[&0].counts, [(2013, 1), (2014, 1), (2015, 0)].into());
        assert_eq!(s[&1].counts, [(2013, 1), (2014, 1), (2015, 1)].into());
        assert_eq!(s[&2].counts, [(2013, 0), (2014, 0), (2015, 2)].into());
    }

    #[test]
    fn raw_ratio_constant_series_is_one() {
        let s = series(0, &[(2015, 12), (2018, 12)]);
        assert_eq!(growth_ratio(&s, 2015, 3).unwrap(), 1.0);
    }

    #[test]
    fn raw_ratio_direct_evaluation() {
        let s = series(0, &[(2015, 10), (2018, 25)]);
        assert_eq!(growth_ratio(&s, 2015, 3).unwrap(), 2.5);
    }

    #[test]
    fn raw_ratio_guards_division_by_zero() {
        let s = series(7, &[(2015, 0), (2018, 25)]);
        assert!(matches!(
            growth_ratio(&s, 2015, 3),
            Err(GrowthError::UndefinedRatio { topic: 7 })
        ));
    }

    #[test]
    fn smoothed_ratio_hand_arithmetic() {
        let s = series(
            0,
            &[(2013, 10), (2014, 12), (2015, 14), (2016, 18), (2017, 20), (2018, 22)],
        );
        let r = smoothed_growth_ratio(&s, 2015, 3).unwrap();
        assert_eq!(r.mean_base, 12.0);
        assert_eq!(r.mean_later, 20.0);
        assert_eq!(r.ratio, 20.0 / 12.0);
        assert_eq!(r.sum_base(), 36);
        assert_eq!(r.sum_later(), 60);
    }

    #[test]
    fn smoothed_ratio_constant_series_is_exactly_one() {
        let s = series(
            0,
            &[(2013, 9), (2014, 9), (2015, 9), (2016, 9), (2017, 9), (2018, 9)],
        );
        assert_eq!(smoothed_growth_ratio(&s, 2015, 3).unwrap().ratio, 1.0);
    }

    #[test]
    fn smoothed_ratio_windows_are_2013_2015_and_2016_2018() {
        // Only window years contribute: values outside are ignored.
        let s = series(
            0,
            &[
                (2012, 99),
                (2013, 1),
                (2014, 2),
                (2015, 3),
                (2016, 4),
                (2017, 5),
                (2018, 6),
                (2019, 99),
            ],
        );
        let r = smoothed_growth_ratio(&s, 2015, 3).unwrap();
        assert_eq!(r.sum_base(), 6);
        assert_eq!(r.sum_later(), 15);
    }

    #[test]
    fn missing_years_count_as_zero_with_warning() {
        let s = series(0, &[(2015, 6), (2018, 9)]);
        let r = smoothed_growth_ratio(&s, 2015, 3).unwrap();
        assert_eq!(r.missing_years, 4);
        assert_eq!(r.mean_base, 2.0);
        assert_eq!(r.mean_later, 3.0);
    }

    #[test]
    fn smoothed_ratio_zero_base_errors() {
        let s = series(3, &[(2016, 4), (2017, 5), (2018, 6)]);
        assert!(matches!(
            smoothed_growth_ratio(&s, 2015, 3),
            Err(GrowthError::UndefinedRatio { topic: 3 })
        ));
    }

    #[test]
    fn mean_exactly_five_is_ineligible() {
        // Window sum 15 => mean 5.0: excluded, matching the "<= 15
        // publications per window" rule.
        let s = series(
            0,
            &[(2013, 5), (2014, 5), (2015, 5), (2016, 9), (2017, 9), (2018, 9)],
        );
        let mut records = vec![smoothed_growth_ratio(&s, 2015, 3).unwrap()];
        filter_topics(&mut records, 5.0);
        assert!(!records[0].eligible);
    }

    #[test]
    fn means_just_above_five_are_eligible() {
        let s = series(
            0,
            &[(2013, 6), (2014, 5), (2015, 5), (2016, 6), (2017, 6), (2018, 6)],
        );
        let mut records = vec![smoothed_growth_ratio(&s, 2015, 3).unwrap()];
        filter_topics(&mut records, 5.0);
        assert!(records[0].eligible);
        assert!((records[0].mean_base - 16.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn large_topics_are_all_kept() {
        let mut records: Vec<GrowthRecord> = (0..5)
            .map(|i| {
                let s = series(
                    i,
                    &[(2013, 40), (2014, 40), (2015, 40), (2016, 50), (2017, 50), (2018, 50)],
                );
                smoothed_growth_ratio(&s, 2015, 3).unwrap()
            })
            .collect();
        filter_topics(&mut records, 5.0);
        assert!(records.iter().all(|r| r.eligible));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Scaling every count by a positive integer leaves ratios alone.
            #[test]
            fn scale_equivariance(
                counts in prop::collection::vec(1u64..50, 6),
                scale in 1u64..9,
            ) {
                let years: Vec<i32> = (2013..=2018).collect();
                let base = series(0, &years.iter().copied().zip(counts.iter().copied()).collect::<Vec<_>>());
                let scaled = series(0, &years.iter().copied().zip(counts.iter().map(|c| c * scale)).collect::<Vec<_>>());
                let a = smoothed_growth_ratio(&base, 2015, 3).unwrap();
                let b = smoothed_growth_ratio(&scaled, 2015, 3).unwrap();
                prop_assert_eq!(a.ratio, b.ratio);
            }

            /// The "window sum > 15" rule and the "mean > 5" rule pick the
            /// same topics.
            #[test]
            fn sum_and_mean_filters_agree(
                counts in prop::collection::vec(0u64..12, 6),
            ) {
                prop_assume!(counts[..3].iter().sum::<u64>() > 0);
                let years: Vec<i32> = (2013..=2018).collect();
                let s = series(0, &years.into_iter().zip(counts.iter().copied()).collect::<Vec<_>>());
                let mut records = vec![smoothed_growth_ratio(&s, 2015, 3).unwrap()];
                filter_topics(&mut records, 5.0);
                let by_sum = records[0].sum_base() > 15 && records[0].sum_later() > 15;
                prop_assert_eq!(records[0].eligible, by_sum);
            }
        }
    }
}
