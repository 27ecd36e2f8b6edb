//! Constant Potts model clustering of the normalized citation graph with the
//! Leiden algorithm, small-class reclassification, class-graph aggregation,
//! and the four-level classification hierarchy.

mod leiden;

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::citegraph::{Link, WeightedCitationGraph};
use crate::corpus::PubId;
use leiden::LevelGraph;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("partition covers {got} nodes, graph has {expected}")]
    PartitionMismatch { expected: usize, got: usize },
    #[error("invalid cluster config: {0}")]
    InvalidConfig(String),
    #[error("hierarchy needs at least one resolution")]
    NoResolutions,
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed classification file: {0}")]
    MalformedClassification(String),
}

/// Clustering run parameters. `resolution` is the CPM penalty; smaller
/// values give larger classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub resolution: f64,
    pub iterations: u32,
    pub seed: u64,
    pub min_class_size: u64,
}

impl ClusterConfig {
    /// Defaults: 100 iterations from one seeded start, classes under 50
    /// publications reclassified.
    pub fn new(resolution: f64) -> ClusterConfig {
        ClusterConfig {
            resolution,
            iterations: 100,
            seed: 0,
            min_class_size: 50,
        }
    }

    fn validate(&self) -> Result<(), ClusterError> {
        if !(self.resolution > 0.0) || !self.resolution.is_finite() {
            return Err(ClusterError::InvalidConfig(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        if self.iterations == 0 {
            return Err(ClusterError::InvalidConfig(
                "iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Total partition of a graph's nodes into dense class ids `[0, n_classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: Vec<usize>,
    n_classes: usize,
    orphan: Vec<bool>,
}

impl Partition {
    /// Builds a partition from raw per-node class labels, renumbering them
    /// densely in order of first occurrence.
    pub fn from_assignment(raw: Vec<usize>) -> Partition {
        let assignment = leiden::renumber(raw);
        let n_classes = assignment.iter().copied().max().map_or(0, |m| m + 1);
        Partition {
            assignment,
            n_classes,
            orphan: vec![false; n_classes],
        }
    }

    pub fn singletons(n: usize) -> Partition {
        Partition::from_assignment((0..n).collect())
    }

    pub(crate) fn from_dense_parts(
        assignment: Vec<usize>,
        n_classes: usize,
        orphan: Vec<bool>,
    ) -> Partition {
        debug_assert_eq!(orphan.len(), n_classes);
        debug_assert!(assignment.iter().all(|&c| c < n_classes));
        Partition {
            assignment,
            n_classes,
            orphan,
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn class_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn is_orphan(&self, class: usize) -> bool {
        self.orphan[class]
    }

    pub fn orphan_flags(&self) -> &[bool] {
        &self.orphan
    }

    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_classes];
        for (v, &c) in self.assignment.iter().enumerate() {
            members[c].push(v);
        }
        members
    }

    /// Class sizes in represented publications.
    pub fn class_sizes(&self, node_size: &[u64]) -> Vec<u64> {
        let mut sizes = vec![0u64; self.n_classes];
        for (v, &c) in self.assignment.iter().enumerate() {
            sizes[c] += node_size[v];
        }
        sizes
    }
}

fn level_graph(g: &WeightedCitationGraph) -> LevelGraph {
    LevelGraph {
        n: g.node_count(),
        links: g.links().iter().map(|l| (l.a, l.b, l.weight)).collect(),
        size: g.node_size().to_vec(),
        self_mass: g.self_mass().to_vec(),
    }
}

/// CPM quality: sum over classes of intra-class weight minus
/// `gamma * pairs(class)`, where pairs counts represented publications.
/// The pair total is accumulated in integers so the penalty does not depend
/// on class labeling.
pub fn cpm_quality(
    g: &WeightedCitationGraph,
    p: &Partition,
    gamma: f64,
) -> Result<f64, ClusterError> {
    if p.len() != g.node_count() {
        return Err(ClusterError::PartitionMismatch {
            expected: g.node_count(),
            got: p.len(),
        });
    }
    let mut intra: f64 = g.self_mass().iter().sum();
    for l in g.links() {
        if p.class_of(l.a) == p.class_of(l.b) {
            intra += l.weight;
        }
    }
    let sizes = p.class_sizes(g.node_size());
    let pairs: u128 = sizes
        .iter()
        .map(|&s| (s as u128) * (s.saturating_sub(1) as u128) / 2)
        .sum();
    Ok(intra - gamma * pairs as f64)
}

/// Leiden optimization of CPM quality. Deterministic for a given seed; the
/// partition quality is non-decreasing across the configured iterations.
pub fn leiden_cpm(
    g: &WeightedCitationGraph,
    cfg: &ClusterConfig,
) -> Result<Partition, ClusterError> {
    cfg.validate()?;
    let level = level_graph(g);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut membership: Vec<usize> = (0..g.node_count()).collect();
    #[cfg(debug_assertions)]
    let mut last_quality = cpm_quality(
        g,
        &Partition::from_assignment(membership.clone()),
        cfg.resolution,
    )?;
    for _ in 0..cfg.iterations {
        leiden::leiden_pass(&level, &mut membership, cfg.resolution, &mut rng);
        #[cfg(debug_assertions)]
        {
            let q = cpm_quality(
                g,
                &Partition::from_assignment(membership.clone()),
                cfg.resolution,
            )?;
            debug_assert!(q >= last_quality - 1e-9, "quality decreased: {last_quality} -> {q}");
            last_quality = q;
        }
    }
    Ok(Partition::from_assignment(membership))
}

/// Dissolves every class smaller than `min_size`, smallest first, moving
/// each member to the class holding the largest link weight to it. Weights
/// are recomputed after each dissolution. A small class with no external
/// weight at all is kept and flagged as an orphan.
pub fn reclassify_small(
    g: &WeightedCitationGraph,
    p: &Partition,
    min_size: u64,
) -> Partition {
    let n = g.node_count();
    let adj = g.adjacency();
    let node_size = g.node_size();
    let mut assignment = p.assignment().to_vec();
    let n_classes = p.n_classes();
    let mut orphan = p.orphan_flags().to_vec();

    loop {
        let mut class_size = vec![0u64; n_classes];
        for v in 0..n {
            class_size[assignment[v]] += node_size[v];
        }
        let mut dissolve: Option<(u64, usize)> = None;
        for c in 0..n_classes {
            if orphan[c] || class_size[c] == 0 || class_size[c] >= min_size {
                continue;
            }
            if dissolve.map_or(true, |(s, _)| class_size[c] < s) {
                dissolve = Some((class_size[c], c));
            }
        }
        let Some((_, dis)) = dissolve else { break };

        let members: Vec<usize> = (0..n).filter(|&v| assignment[v] == dis).collect();
        let mut class_total: BTreeMap<usize, f64> = BTreeMap::new();
        let mut member_best: Vec<Option<usize>> = Vec::with_capacity(members.len());
        for &v in &members {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for &(u, w) in &adj[v] {
                let c = assignment[u];
                if c != dis {
                    *acc.entry(c).or_insert(0.0) += w;
                    *class_total.entry(c).or_insert(0.0) += w;
                }
            }
            let mut best: Option<(usize, f64)> = None;
            for (&c, &w) in &acc {
                if best.map_or(true, |(_, bw)| w > bw) {
                    best = Some((c, w));
                }
            }
            member_best.push(best.map(|(c, _)| c));
        }

        if class_total.is_empty() {
            orphan[dis] = true; // isolated: keep as orphan, excluded downstream
            continue;
        }
        let mut fallback = 0usize;
        let mut fallback_w = f64::NEG_INFINITY;
        for (&c, &w) in &class_total {
            if w > fallback_w {
                fallback_w = w;
                fallback = c;
            }
        }
        for (i, &v) in members.iter().enumerate() {
            assignment[v] = member_best[i].unwrap_or(fallback);
        }
    }

    // Renumber densely, carrying orphan flags along.
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut new_assignment = Vec::with_capacity(n);
    let mut new_orphan = Vec::new();
    for &c in &assignment {
        let next = remap.len();
        let id = *remap.entry(c).or_insert_with(|| {
            new_orphan.push(orphan[c]);
            next
        });
        new_assignment.push(id);
    }
    let k = remap.len();
    Partition::from_dense_parts(new_assignment, k, new_orphan)
}

/// Collapses a partition into a class-level graph: one node per class,
/// inter-class weights summed, intra-class weight kept as node self-mass.
/// Node ids of the result are the class ids.
pub fn aggregate_network(
    g: &WeightedCitationGraph,
    p: &Partition,
) -> Result<WeightedCitationGraph, ClusterError> {
    if p.len() != g.node_count() {
        return Err(ClusterError::PartitionMismatch {
            expected: g.node_count(),
            got: p.len(),
        });
    }
    let k = p.n_classes();
    let mut size = vec![0u64; k];
    let mut self_mass = vec![0.0; k];
    for v in 0..g.node_count() {
        let c = p.class_of(v);
        size[c] += g.node_size()[v];
        self_mass[c] += g.self_mass()[v];
    }
    let mut inter: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for l in g.links() {
        let (ca, cb) = (p.class_of(l.a), p.class_of(l.b));
        if ca == cb {
            self_mass[ca] += l.weight;
        } else {
            *inter.entry((ca.min(cb), ca.max(cb))).or_insert(0.0) += l.weight;
        }
    }
    let links: Vec<Link> = inter
        .into_iter()
        .map(|((a, b), w)| Link {
            a,
            b,
            weight: w,
            from_a: w / 2.0,
            from_b: w / 2.0,
        })
        .collect();
    let ids: Vec<PubId> = (0..k).map(|c| PubId(c as u64)).collect();
    Ok(WeightedCitationGraph::from_parts(
        ids,
        links,
        Vec::new(),
        size,
        self_mass,
        0,
    ))
}

pub const LEVEL_NAMES: [&str; 4] = ["topic", "specialty", "discipline", "area"];

fn level_name(i: usize) -> String {
    LEVEL_NAMES
        .get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("level{i}"))
}

/// Nested partitions, finest (topics) first. `levels` are all expressed over
/// the base graph's nodes; `parents[l]` maps level-`l` class ids to their
/// class at level `l + 1`.
#[derive(Debug, Clone)]
pub struct ClassificationHierarchy {
    pub level_names: Vec<String>,
    pub levels: Vec<Partition>,
    pub parents: Vec<Vec<usize>>,
}

impl ClassificationHierarchy {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn topics(&self) -> &Partition {
        &self.levels[0]
    }

    /// Level index by name, e.g. "discipline".
    pub fn level_index(&self, name: &str) -> Option<usize> {
        self.level_names.iter().position(|n| n == name)
    }
}

/// Builds the hierarchy bottom-up: Leiden at the first (largest) resolution
/// gives topics, which are reclassified against the minimum class size; each
/// coarser level comes from Leiden on the aggregated network of the previous
/// one, so nesting holds by construction.
pub fn build_hierarchy(
    g: &WeightedCitationGraph,
    resolutions: &[f64],
    cfg: &ClusterConfig,
) -> Result<ClassificationHierarchy, ClusterError> {
    if resolutions.is_empty() {
        return Err(ClusterError::NoResolutions);
    }
    if resolutions.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ClusterError::InvalidConfig(
            "hierarchy resolutions must be strictly decreasing".into(),
        ));
    }

    let topic_cfg = ClusterConfig {
        resolution: resolutions[0],
        ..cfg.clone()
    };
    let raw_topics = leiden_cpm(g, &topic_cfg)?;
    let topics = if cfg.min_class_size > 1 {
        reclassify_small(g, &raw_topics, cfg.min_class_size)
    } else {
        raw_topics
    };

    let mut levels = vec![topics.clone()];
    let mut parents: Vec<Vec<usize>> = Vec::new();
    let mut current_graph = g.clone();
    let mut current = topics;

    for (i, &res) in resolutions.iter().enumerate().skip(1) {
        let agg = aggregate_network(&current_graph, &current)?;
        let level_cfg = ClusterConfig {
            resolution: res,
            seed: cfg.seed.wrapping_add(i as u64),
            ..cfg.clone()
        };
        let coarse = leiden_cpm(&agg, &level_cfg)?;

        // An aggregate class is an orphan when all its children are.
        let mut orphan = vec![true; coarse.n_classes()];
        for child in 0..current.n_classes() {
            if !current.is_orphan(child) {
                orphan[coarse.class_of(child)] = false;
            }
        }
        let coarse =
            Partition::from_dense_parts(coarse.assignment().to_vec(), coarse.n_classes(), orphan);

        parents.push(coarse.assignment().to_vec());
        let composed: Vec<usize> = levels[i - 1]
            .assignment()
            .iter()
            .map(|&c| coarse.class_of(c))
            .collect();
        levels.push(Partition::from_dense_parts(
            composed,
            coarse.n_classes(),
            coarse.orphan_flags().to_vec(),
        ));
        current_graph = agg;
        current = coarse;
    }

    Ok(ClassificationHierarchy {
        level_names: (0..resolutions.len()).map(level_name).collect(),
        levels,
        parents,
    })
}

/// Chance-corrected agreement between two labelings of the same nodes.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same nodes");
    let n = a.len() as u128;
    if n == 0 {
        return 1.0;
    }
    let mut cont: HashMap<(usize, usize), u128> = HashMap::new();
    let mut rows: HashMap<usize, u128> = HashMap::new();
    let mut cols: HashMap<usize, u128> = HashMap::new();
    for (&x, &y) in a.iter().zip(b.iter()) {
        *cont.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let c2 = |x: u128| (x * x.saturating_sub(1) / 2) as f64;
    let sum_ij: f64 = cont.values().map(|&v| c2(v)).sum();
    let sum_a: f64 = rows.values().map(|&v| c2(v)).sum();
    let sum_b: f64 = cols.values().map(|&v| c2(v)).sum();
    let total = c2(n);
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (sum_ij - expected) / (max_index - expected)
}

/// `pub_id` plus one `<level>_id` column per hierarchy level.
pub fn write_classification_tsv(
    path: &Path,
    ids: &[PubId],
    hier: &ClassificationHierarchy,
) -> Result<(), ClusterError> {
    let io_err = |source| ClusterError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut header = String::from("pub_id");
    for name in &hier.level_names {
        header.push('\t');
        header.push_str(name);
        header.push_str("_id");
    }
    writeln!(w, "{header}").map_err(io_err)?;
    for (v, id) in ids.iter().enumerate() {
        let mut line = id.to_string();
        for level in &hier.levels {
            line.push('\t');
            line.push_str(&level.class_of(v).to_string());
        }
        writeln!(w, "{line}").map_err(io_err)?;
    }
    Ok(())
}

/// Reads a classification table back: per-publication class ids per level.
pub fn read_classification_tsv(
    path: &Path,
) -> Result<(Vec<String>, Vec<PubId>, Vec<Vec<usize>>), ClusterError> {
    let io_err = |source| ClusterError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| ClusterError::MalformedClassification("empty file".into()))?
        .map_err(io_err)?;
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.first() != Some(&"pub_id") || cols.len() < 2 {
        return Err(ClusterError::MalformedClassification(format!(
            "unexpected header `{header}`"
        )));
    }
    let level_names: Vec<String> = cols[1..]
        .iter()
        .map(|c| c.trim_end_matches("_id").to_string())
        .collect();
    let mut ids = Vec::new();
    let mut assignments: Vec<Vec<usize>> = vec![Vec::new(); level_names.len()];
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(io_err)?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols.len() {
            return Err(ClusterError::MalformedClassification(format!(
                "line {}: expected {} fields, got {}",
                lineno + 2,
                cols.len(),
                fields.len()
            )));
        }
        let id: u64 = fields[0].parse().map_err(|_| {
            ClusterError::MalformedClassification(format!(
                "line {}: bad pub_id `{}`",
                lineno + 2,
                fields[0]
            ))
        })?;
        ids.push(PubId(id));
        for (l, f) in fields[1..].iter().enumerate() {
            let class: usize = f.parse().map_err(|_| {
                ClusterError::MalformedClassification(format!(
                    "line {}: bad class id `{f}`",
                    lineno + 2
                ))
            })?;
            assignments[l].push(class);
        }
    }
    Ok((level_names, ids, assignments))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::citegraph::{build_network, normalize_links, NormalizationMode};
    use crate::corpus::{CitationEdge, DocType, Publication};

    pub(crate) fn unit_graph(n: u64, edges: &[(u64, u64)]) -> WeightedCitationGraph {
        let pubs: Vec<Publication> = (0..n)
            .map(|i| Publication {
                pub_id: PubId(i),
                year: 2015,
                doc_type: DocType::Article,
                journal_id: 0,
                jif: 0.0,
                n_authors: 1,
                n_references: 0,
                title_tokens: vec![],
                citation_count: 0,
            })
            .collect();
        let edges: Vec<CitationEdge> = edges
            .iter()
            .map(|&(a, b)| CitationEdge {
                citing: PubId(a),
                cited: PubId(b),
                citing_year: 2016,
            })
            .collect();
        build_network(&pubs, &edges)
    }

    /// Two disjoint unit triangles: 0-1-2 and 3-4-5.
    fn two_triangles() -> WeightedCitationGraph {
        unit_graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    }

    fn partition(raw: &[usize]) -> Partition {
        Partition::from_assignment(raw.to_vec())
    }

    #[test]
    fn cpm_of_singletons_on_edgeless_graph_is_zero() {
        let g = unit_graph(4, &[]);
        let p = Partition::singletons(4);
        assert_eq!(cpm_quality(&g, &p, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn cpm_hand_values_for_two_triangles() {
        let g = two_triangles();
        let separate = partition(&[0, 0, 0, 1, 1, 1]);
        let q = cpm_quality(&g, &separate, 0.1).unwrap();
        assert!((q - 5.4).abs() < 1e-12, "got {q}");

        let merged = partition(&[0, 0, 0, 0, 0, 0]);
        let qm = cpm_quality(&g, &merged, 0.1).unwrap();
        assert!((qm - 4.5).abs() < 1e-12, "got {qm}");
        assert!(qm < q);
    }

    #[test]
    fn cpm_rejects_partition_missing_nodes() {
        let g = two_triangles();
        let p = Partition::singletons(5);
        assert!(matches!(
            cpm_quality(&g, &p, 0.1),
            Err(ClusterError::PartitionMismatch { expected: 6, got: 5 })
        ));
    }

    #[test]
    fn leiden_splits_disconnected_triangles() {
        let g = two_triangles();
        let cfg = ClusterConfig {
            resolution: 0.1,
            iterations: 5,
            seed: 7,
            min_class_size: 1,
        };
        let p = leiden_cpm(&g, &cfg).unwrap();
        assert_eq!(p.n_classes(), 2);
        assert_eq!(p.class_of(0), p.class_of(1));
        assert_eq!(p.class_of(0), p.class_of(2));
        assert_eq!(p.class_of(3), p.class_of(4));
        assert_ne!(p.class_of(0), p.class_of(3));
    }

    /// Exhaustive set-partition enumeration via restricted growth strings.
    pub(crate) fn for_each_partition(n: usize, f: &mut impl FnMut(&[usize])) {
        fn rec(current: &mut Vec<usize>, n: usize, max: usize, f: &mut impl FnMut(&[usize])) {
            if current.len() == n {
                f(current);
                return;
            }
            for c in 0..=max {
                current.push(c);
                let next_max = if c == max { max + 1 } else { max };
                rec(current, n, next_max, f);
                current.pop();
            }
        }
        rec(&mut Vec::with_capacity(n), n, 0, f);
    }

    #[test]
    fn barbell_leiden_matches_exhaustive_search() {
        // Two triangles joined by a bridge edge 2-3.
        let g = unit_graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
        let gamma = 0.3;
        let mut n_partitions = 0u32;
        let mut best = f64::NEG_INFINITY;
        for_each_partition(6, &mut |assignment| {
            n_partitions += 1;
            let q = cpm_quality(&g, &partition(assignment), gamma).unwrap();
            if q > best {
                best = q;
            }
        });
        assert_eq!(n_partitions, 203); // Bell(6)

        let cfg = ClusterConfig {
            resolution: gamma,
            iterations: 10,
            seed: 3,
            min_class_size: 1,
        };
        let p = leiden_cpm(&g, &cfg).unwrap();
        let q = cpm_quality(&g, &p, gamma).unwrap();
        assert_eq!(q, best);
    }

    #[test]
    fn paper_scale_config_record() {
        let cfg = ClusterConfig::new(0.000125);
        assert_eq!(cfg.resolution, 0.000125);
        assert_eq!(cfg.iterations, 100);
        assert_eq!(cfg.min_class_size, 50);
    }

    #[test]
    fn leiden_is_deterministic_given_seed() {
        let g = unit_graph(
            10,
            &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (6, 7), (7, 8), (8, 9), (9, 6), (2, 3), (5, 6)],
        );
        let cfg = ClusterConfig {
            resolution: 0.2,
            iterations: 4,
            seed: 99,
            min_class_size: 1,
        };
        let a = leiden_cpm(&g, &cfg).unwrap();
        let b = leiden_cpm(&g, &cfg).unwrap();
        assert_eq!(a.assignment(), b.assignment());
    }

    #[test]
    fn leiden_quality_beats_singletons() {
        let g = two_triangles();
        let cfg = ClusterConfig {
            resolution: 0.1,
            iterations: 3,
            seed: 1,
            min_class_size: 1,
        };
        let p = leiden_cpm(&g, &cfg).unwrap();
        let q = cpm_quality(&g, &p, 0.1).unwrap();
        let q0 = cpm_quality(&g, &Partition::singletons(6), 0.1).unwrap();
        assert!(q >= q0);
    }

    #[test]
    fn leiden_output_is_node_move_optimal() {
        // Spot check: no single-node move to any class (or a new one) improves.
        let g = unit_graph(
            8,
            &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (6, 7), (2, 3), (5, 6), (0, 7)],
        );
        let gamma = 0.25;
        let cfg = ClusterConfig {
            resolution: gamma,
            iterations: 8,
            seed: 5,
            min_class_size: 1,
        };
        let p = leiden_cpm(&g, &cfg).unwrap();
        let q = cpm_quality(&g, &p, gamma).unwrap();
        for v in 0..8 {
            for target in 0..=p.n_classes() {
                if target == p.class_of(v) {
                    continue;
                }
                let mut moved = p.assignment().to_vec();
                moved[v] = target;
                let q2 = cpm_quality(&g, &partition(&moved), gamma).unwrap();
                assert!(
                    q2 <= q + 1e-9,
                    "moving node {v} to class {target} improved {q} -> {q2}"
                );
            }
        }
    }

    #[test]
    fn reclassify_leaves_large_classes_untouched() {
        let g = two_triangles();
        let p = partition(&[0, 0, 0, 1, 1, 1]);
        let r = reclassify_small(&g, &p, 3);
        assert_eq!(r.assignment(), p.assignment());
    }

    #[test]
    fn reclassify_dissolves_small_class_towards_heaviest_neighbor() {
        // Class A = {0,1,2} triangle, class B = {3,4} pair, class C = {5,6,7}.
        // B's members both link mostly to A.
        let g = unit_graph(
            8,
            &[(0, 1), (1, 2), (0, 2), (3, 4), (0, 3), (1, 3), (0, 4), (5, 6), (6, 7), (5, 7), (4, 5)],
        );
        let p = partition(&[0, 0, 0, 1, 1, 2, 2, 2]);
        let r = reclassify_small(&g, &p, 3);
        assert_eq!(r.n_classes(), 2);
        // Node 3: weight 2 to A, 0 to C -> A. Node 4: weight 1 to A, 1 to C -> tie, lowest id (A).
        assert_eq!(r.class_of(3), r.class_of(0));
        assert_eq!(r.class_of(4), r.class_of(0));
    }

    #[test]
    fn reclassify_keeps_isolated_small_class_as_orphan() {
        let g = unit_graph(5, &[(0, 1), (1, 2), (0, 2), (3, 4)]);
        let p = partition(&[0, 0, 0, 1, 1]);
        let r = reclassify_small(&g, &p, 3);
        assert_eq!(r.n_classes(), 2);
        assert!(!r.is_orphan(r.class_of(0)));
        assert!(r.is_orphan(r.class_of(3)));
    }

    #[test]
    fn reclassify_never_increases_class_count() {
        let g = unit_graph(6, &[(0, 1), (2, 3), (4, 5), (1, 2), (3, 4)]);
        for min_size in [1u64, 2, 3, 6] {
            let p = partition(&[0, 0, 1, 1, 2, 2]);
            let r = reclassify_small(&g, &p, min_size);
            assert!(r.n_classes() <= p.n_classes());
        }
    }

    #[test]
    fn aggregate_of_singletons_is_isomorphic() {
        let g = two_triangles();
        let p = Partition::singletons(6);
        let agg = aggregate_network(&g, &p).unwrap();
        assert_eq!(agg.node_count(), 6);
        assert_eq!(agg.links().len(), g.links().len());
        for (a, b) in agg.links().iter().zip(g.links().iter()) {
            assert_eq!((a.a, a.b), (b.a, b.b));
            assert_eq!(a.weight, b.weight);
        }
        assert!(agg.self_mass().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn aggregate_sums_cross_links() {
        // Classes {0,1} and {2,3} with three unit cross links.
        let g = unit_graph(4, &[(0, 1), (2, 3), (0, 2), (1, 2), (1, 3)]);
        let p = partition(&[0, 0, 1, 1]);
        let agg = aggregate_network(&g, &p).unwrap();
        assert_eq!(agg.node_count(), 2);
        assert_eq!(agg.links().len(), 1);
        assert_eq!(agg.links()[0].weight, 3.0);
        assert_eq!(agg.self_mass(), &[1.0, 1.0]);
        assert_eq!(agg.node_size(), &[2, 2]);
    }

    #[test]
    fn aggregate_full_merge_is_one_node_no_links() {
        let g = two_triangles();
        let p = partition(&[0; 6]);
        let agg = aggregate_network(&g, &p).unwrap();
        assert_eq!(agg.node_count(), 1);
        assert!(agg.links().is_empty());
        assert_eq!(agg.self_mass()[0], 6.0);
    }

    #[test]
    fn aggregation_preserves_cpm_quality() {
        let g = unit_graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
        let p = partition(&[0, 0, 0, 1, 1, 1]);
        let gamma = 0.3;
        let q = cpm_quality(&g, &p, gamma).unwrap();
        let agg = aggregate_network(&g, &p).unwrap();
        let q_agg = cpm_quality(&agg, &Partition::singletons(2), gamma).unwrap();
        assert!((q - q_agg).abs() < 1e-12);
    }

    #[test]
    fn hierarchy_with_single_resolution_is_one_leiden_level() {
        let g = two_triangles();
        let cfg = ClusterConfig {
            resolution: 0.1,
            iterations: 3,
            seed: 2,
            min_class_size: 1,
        };
        let h = build_hierarchy(&g, &[0.1], &cfg).unwrap();
        assert_eq!(h.n_levels(), 1);
        let direct = leiden_cpm(&g, &cfg).unwrap();
        assert_eq!(h.topics().assignment(), direct.assignment());
        assert_eq!(h.level_names, vec!["topic"]);
    }

    #[test]
    fn hierarchy_levels_are_named_topic_to_area() {
        let g = two_triangles();
        let cfg = ClusterConfig {
            resolution: 0.5,
            iterations: 2,
            seed: 2,
            min_class_size: 1,
        };
        let h = build_hierarchy(&g, &[0.5, 0.2, 0.05, 0.01], &cfg).unwrap();
        assert_eq!(h.level_names, vec!["topic", "specialty", "discipline", "area"]);
    }

    #[test]
    fn hierarchy_requires_descending_resolutions() {
        let g = two_triangles();
        let cfg = ClusterConfig::new(0.1);
        assert!(matches!(
            build_hierarchy(&g, &[], &cfg),
            Err(ClusterError::NoResolutions)
        ));
        assert!(matches!(
            build_hierarchy(&g, &[0.1, 0.1], &cfg),
            Err(ClusterError::InvalidConfig(_))
        ));
    }

    #[test]
    fn hierarchy_nesting_holds() {
        // Four triangles chained weakly; multi-level clustering must nest.
        let mut edges = vec![];
        for t in 0..4u64 {
            let b = t * 3;
            edges.extend_from_slice(&[(b, b + 1), (b + 1, b + 2), (b, b + 2)]);
        }
        edges.extend_from_slice(&[(2, 3), (5, 6), (8, 9)]);
        let g = unit_graph(12, &edges);
        let norm = normalize_links(&g, NormalizationMode::TotalLinks);
        let cfg = ClusterConfig {
            resolution: 0.2,
            iterations: 5,
            seed: 11,
            min_class_size: 1,
        };
        let h = build_hierarchy(&norm, &[0.2, 0.05, 0.01], &cfg).unwrap();
        for l in 0..h.n_levels() - 1 {
            let fine = &h.levels[l];
            let coarse = &h.levels[l + 1];
            for a in 0..12 {
                for b in 0..12 {
                    if fine.class_of(a) == fine.class_of(b) {
                        assert_eq!(coarse.class_of(a), coarse.class_of(b));
                    }
                }
            }
            // Parent maps agree with the composed levels.
            for v in 0..12 {
                assert_eq!(h.parents[l][fine.class_of(v)], coarse.class_of(v));
            }
        }
    }

    #[test]
    fn ari_known_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 1, 2, 3], &[0, 1, 2, 3]), 1.0);
        let ari = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]);
        assert!(ari < 0.01, "independent labelings should score near zero, got {ari}");
    }

    #[test]
    fn classification_tsv_roundtrip() {
        let g = two_triangles();
        let cfg = ClusterConfig {
            resolution: 0.1,
            iterations: 3,
            seed: 2,
            min_class_size: 1,
        };
        let h = build_hierarchy(&g, &[0.1, 0.05], &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("classification.tsv");
        write_classification_tsv(&path, g.ids(), &h).unwrap();
        let (names, ids, assignments) = read_classification_tsv(&path).unwrap();
        assert_eq!(names, vec!["topic", "specialty"]);
        assert_eq!(ids, g.ids());
        assert_eq!(assignments[0], h.levels[0].assignment());
        assert_eq!(assignments[1], h.levels[1].assignment());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            /// Leiden quality is at least the singleton quality, and moving
            /// any single node never helps.
            #[test]
            fn leiden_beats_singletons_on_random_graphs(
                edges in prop::collection::btree_set((0u64..7, 0u64..7), 1..15),
                seed in 0u64..500,
            ) {
                let edges: Vec<(u64, u64)> = edges.into_iter().filter(|(a, b)| a != b).collect();
                prop_assume!(!edges.is_empty());
                let g = unit_graph(7, &edges);
                let cfg = ClusterConfig { resolution: 0.3, iterations: 5, seed, min_class_size: 1 };
                let p = leiden_cpm(&g, &cfg).unwrap();
                let q = cpm_quality(&g, &p, 0.3).unwrap();
                let q0 = cpm_quality(&g, &Partition::singletons(7), 0.3).unwrap();
                prop_assert!(q >= q0 - 1e-12);
            }
        }
    }
}
