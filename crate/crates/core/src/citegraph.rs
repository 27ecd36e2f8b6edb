//! Direct-citation network over a multi-year corpus with fractional link
//! normalization. The clustering graph is undirected; direction survives in
//! the raw edge store for citation counting and the out-link mode.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{CitationEdge, CorpusError, PubId, Publication};

/// Which links count as "the publication's total number of links" when
/// normalizing. `TotalLinks` treats every incident link (in plus out) as
/// the denominator; `OutLinks` divides only by distinct out-links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    #[default]
    TotalLinks,
    OutLinks,
}

/// Undirected link between node indices `a < b`. `from_a`/`from_b` are the
/// weight shares attributed by each endpoint; `weight = from_a + from_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    pub from_a: f64,
    pub from_b: f64,
}

#[derive(Debug, Clone)]
pub struct WeightedCitationGraph {
    ids: Vec<PubId>,
    id_index: HashMap<PubId, usize>,
    links: Vec<Link>,
    /// Distinct citing→cited pairs inside the corpus, as node indices.
    directed_pairs: Vec<(usize, usize)>,
    node_size: Vec<u64>,
    self_mass: Vec<f64>,
    dropped_endpoints: u64,
}

impl WeightedCitationGraph {
    pub(crate) fn from_parts(
        ids: Vec<PubId>,
        links: Vec<Link>,
        directed_pairs: Vec<(usize, usize)>,
        node_size: Vec<u64>,
        self_mass: Vec<f64>,
        dropped_endpoints: u64,
    ) -> WeightedCitationGraph {
        let id_index = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        WeightedCitationGraph {
            ids,
            id_index,
            links,
            directed_pairs,
            node_size,
            self_mass,
            dropped_endpoints,
        }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[PubId] {
        &self.ids
    }

    pub fn node_index(&self, id: PubId) -> Option<usize> {
        self.id_index.get(&id).copied()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn directed_pairs(&self) -> &[(usize, usize)] {
        &self.directed_pairs
    }

    pub fn node_size(&self) -> &[u64] {
        &self.node_size
    }

    pub fn self_mass(&self) -> &[f64] {
        &self.self_mass
    }

    /// Edges whose endpoints fell outside the corpus at build time.
    pub fn dropped_endpoints(&self) -> u64 {
        self.dropped_endpoints
    }

    /// Number of distinct undirected links incident to each node.
    pub fn link_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.node_count()];
        for l in &self.links {
            counts[l.a] += 1;
            counts[l.b] += 1;
        }
        counts
    }

    /// Distinct out-links (citing side) per node.
    pub fn out_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.node_count()];
        for &(citing, _) in &self.directed_pairs {
            counts[citing] += 1;
        }
        counts
    }

    /// Per-node sum of attributed link weight shares.
    pub fn attributed_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.node_count()];
        for l in &self.links {
            sums[l.a] += l.from_a;
            sums[l.b] += l.from_b;
        }
        sums
    }

    pub fn total_link_weight(&self) -> f64 {
        self.links.iter().map(|l| l.weight).sum()
    }

    /// Neighbor lists, symmetric, excluding self.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for l in &self.links {
            adj[l.a].push((l.b, l.weight));
            adj[l.b].push((l.a, l.weight));
        }
        adj
    }

    /// Canonical (a < b, sorted) dump: `node_a	node_b	weight`.
    pub fn write_tsv(&self, path: &Path) -> Result<(), CorpusError> {
        let io_err = |source| CorpusError::Io {
            path: PathBuf::from(path),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        writeln!(w, "node_a\tnode_b\tweight").map_err(io_err)?;
        for l in &self.links {
            writeln!(w, "{}\t{}\t{}", self.ids[l.a], self.ids[l.b], l.weight).map_err(io_err)?;
        }
        Ok(())
    }
}

/// Builds the unit-weight citation network: one undirected link per distinct
/// cited/citing pair inside the corpus. Out-of-corpus endpoints are dropped
/// and counted, never fatal.
pub fn build_network(pubs: &[Publication], edges: &[CitationEdge]) -> WeightedCitationGraph {
    let mut ids: Vec<PubId> = pubs.iter().map(|p| p.pub_id).collect();
    ids.sort_unstable();
    ids.dedup();
    let id_index: HashMap<PubId, usize> =
        ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut dropped = 0u64;
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
    for e in edges {
        match (id_index.get(&e.citing), id_index.get(&e.cited)) {
            (Some(&c), Some(&t)) if c != t => pairs.push((c, t)),
            (Some(_), Some(_)) => {} // self pair, unreachable after load validation
            _ => dropped += 1,
        }
    }
    pairs.sort_unstable();
    pairs.dedup();

    let mut undirected: Vec<(usize, usize)> = pairs
        .iter()
        .map(|&(c, t)| (c.min(t), c.max(t)))
        .collect();
    undirected.sort_unstable();
    undirected.dedup();

    let n = ids.len();
    let links = undirected
        .into_iter()
        .map(|(a, b)| Link {
            a,
            b,
            weight: 1.0,
            from_a: 0.5,
            from_b: 0.5,
        })
        .collect();

    WeightedCitationGraph::from_parts(ids, links, pairs, vec![1; n], vec![0.0; n], dropped)
}

/// Fractional normalization. Always recomputes from link counts, never from
/// prior weights, so re-running from any weighted state is stable.
pub fn normalize_links(
    g: &WeightedCitationGraph,
    mode: NormalizationMode,
) -> WeightedCitationGraph {
    let mut links = g.links().to_vec();
    match mode {
        NormalizationMode::TotalLinks => {
            let counts = g.link_counts();
            for l in &mut links {
                l.from_a = 1.0 / counts[l.a] as f64;
                l.from_b = 1.0 / counts[l.b] as f64;
                l.weight = l.from_a + l.from_b;
            }
        }
        NormalizationMode::OutLinks => {
            let out = g.out_counts();
            let mut share: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
            for &(citing, cited) in g.directed_pairs() {
                let key = (citing.min(cited), citing.max(cited));
                let entry = share.entry(key).or_insert((0.0, 0.0));
                let contribution = 1.0 / out[citing] as f64;
                if citing < cited {
                    entry.0 += contribution;
                } else {
                    entry.1 += contribution;
                }
            }
            for l in &mut links {
                let (from_a, from_b) = share.get(&(l.a, l.b)).copied().unwrap_or((0.0, 0.0));
                l.from_a = from_a;
                l.from_b = from_b;
                l.weight = from_a + from_b;
            }
        }
    }
    WeightedCitationGraph::from_parts(
        g.ids().to_vec(),
        links,
        g.directed_pairs().to_vec(),
        g.node_size().to_vec(),
        g.self_mass().to_vec(),
        g.dropped_endpoints(),
    )
}
