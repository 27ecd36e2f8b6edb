//! Leiden optimization loop for the constant Potts model: queue-based local
//! moving, refinement inside communities, and aggregation, repeated until the
//! graph stops shrinking. Single-threaded so a seed fixes the result.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

/// Move gains below this threshold are treated as ties and rejected.
const MIN_GAIN: f64 = 1e-12;

#[derive(Clone)]
pub(crate) struct LevelGraph {
    pub n: usize,
    /// Undirected links `(a, b, weight)` with `a < b`, strictly positive weight.
    pub links: Vec<(usize, usize, f64)>,
    /// Original-node count represented by each node.
    pub size: Vec<u64>,
    /// Link weight collapsed inside each node by aggregation.
    pub self_mass: Vec<f64>,
}

impl LevelGraph {
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b, w) in &self.links {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        adj
    }
}

/// Renumbers class ids densely in order of first occurrence.
pub(crate) fn renumber(assignment: Vec<usize>) -> Vec<usize> {
    let mut ids: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::with_capacity(assignment.len());
    for c in assignment {
        let next = ids.len();
        out.push(*ids.entry(c).or_insert(next));
    }
    out
}

fn count_classes(assignment: &[usize]) -> usize {
    assignment.iter().copied().max().map_or(0, |m| m + 1)
}

/// One full pass over the level stack. `membership` is updated in place and
/// its CPM quality never decreases.
pub(crate) fn leiden_pass(
    base: &LevelGraph,
    membership: &mut [usize],
    gamma: f64,
    rng: &mut ChaCha8Rng,
) {
    let mut level = base.clone();
    let mut node_of_base: Vec<usize> = (0..base.n).collect();
    let mut comm = renumber(membership.to_vec());
    loop {
        let adj = level.adjacency();
        local_move(&level, &adj, &mut comm, gamma, rng);
        comm = renumber(comm);
        if count_classes(&comm) == level.n {
            break; // every node alone: nothing to aggregate
        }
        let refined = refine(&level, &adj, &comm, gamma, rng);
        let k = count_classes(&refined);
        if k == level.n {
            break; // refinement kept singletons: aggregation would not shrink
        }
        let (agg, agg_comm) = aggregate(&level, &refined, &comm);
        for nb in node_of_base.iter_mut() {
            *nb = refined[*nb];
        }
        level = agg;
        comm = agg_comm;
    }
    for (b, nb) in node_of_base.iter().enumerate() {
        membership[b] = comm[*nb];
    }
}

/// Queue-based local moving. Candidate targets are neighbor communities plus
/// one empty community; stability against the empty community implies
/// stability against every non-neighbor community under CPM.
fn local_move(
    level: &LevelGraph,
    adj: &[Vec<(usize, f64)>],
    comm: &mut Vec<usize>,
    gamma: f64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let n = level.n;
    let mut n_ids = count_classes(comm);
    let mut comm_size: Vec<f64> = vec![0.0; n_ids];
    for v in 0..n {
        comm_size[comm[v]] += level.size[v] as f64;
    }
    let mut vacant: BTreeSet<usize> = (0..n_ids).filter(|&c| comm_size[c] == 0.0).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut queue: VecDeque<usize> = order.into();
    let mut in_queue = vec![true; n];

    let mut w_to: Vec<f64> = vec![0.0; n_ids];
    let mut touched: Vec<usize> = Vec::new();
    let mut moved_any = false;

    while let Some(v) = queue.pop_front() {
        in_queue[v] = false;
        let c = comm[v];
        for &(u, w) in &adj[v] {
            let d = comm[u];
            if w_to[d] == 0.0 {
                touched.push(d);
            }
            w_to[d] += w;
        }
        let s = level.size[v] as f64;
        let size_rest = comm_size[c] - s;
        let base = w_to[c];

        let mut best_gain = MIN_GAIN;
        let mut best: Option<usize> = None;
        touched.sort_unstable();
        for &d in &touched {
            if d == c {
                continue;
            }
            let gain = w_to[d] - base - gamma * s * (comm_size[d] - size_rest);
            if gain > best_gain {
                best_gain = gain;
                best = Some(d);
            }
        }
        // Splitting off into an empty community.
        if size_rest > 0.0 {
            let gain = gamma * s * size_rest - base;
            if gain > best_gain {
                best = Some(usize::MAX);
            }
        }
        for &d in &touched {
            w_to[d] = 0.0;
        }
        touched.clear();

        if let Some(mut d) = best {
            if d == usize::MAX {
                d = match vacant.iter().next().copied() {
                    Some(id) => {
                        vacant.remove(&id);
                        id
                    }
                    None => {
                        comm_size.push(0.0);
                        w_to.push(0.0);
                        n_ids += 1;
                        n_ids - 1
                    }
                };
            }
            comm_size[c] -= s;
            if comm_size[c] == 0.0 {
                vacant.insert(c);
            }
            comm_size[d] += s;
            comm[v] = d;
            moved_any = true;
            for &(u, _) in &adj[v] {
                if comm[u] != d && !in_queue[u] {
                    queue.push_back(u);
                    in_queue[u] = true;
                }
            }
        }
    }
    moved_any
}

/// Splits each community into well-merged sub-communities. Only nodes that
/// are still alone in the refined partition may merge, and only within their
/// community, so the induced base partition is unchanged.
fn refine(
    level: &LevelGraph,
    adj: &[Vec<(usize, f64)>],
    comm: &[usize],
    gamma: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let n = level.n;
    let mut refined: Vec<usize> = (0..n).collect();
    let mut rsize: Vec<f64> = level.size.iter().map(|&s| s as f64).collect();
    let mut rnodes: Vec<u32> = vec![1; n];

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut w_to: Vec<f64> = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    for v in order {
        if rnodes[refined[v]] > 1 {
            continue;
        }
        let s = level.size[v] as f64;
        for &(u, w) in &adj[v] {
            if comm[u] != comm[v] {
                continue;
            }
            let r = refined[u];
            if w_to[r] == 0.0 {
                touched.push(r);
            }
            w_to[r] += w;
        }
        touched.sort_unstable();
        let mut best_gain = MIN_GAIN;
        let mut best = None;
        for &r in &touched {
            if r == refined[v] {
                continue;
            }
            let gain = w_to[r] - gamma * s * rsize[r];
            if gain > best_gain {
                best_gain = gain;
                best = Some(r);
            }
        }
        if let Some(r) = best {
            let old = refined[v];
            rnodes[old] -= 1;
            rsize[old] -= s;
            refined[v] = r;
            rsize[r] += s;
            rnodes[r] += 1;
        }
        for &r in &touched {
            w_to[r] = 0.0;
        }
        touched.clear();
    }
    renumber(refined)
}

/// Collapses refined communities into single nodes. Intra-community weight
/// moves into node self-mass; the carried-over community of an aggregate
/// node is the community of its members.
fn aggregate(
    level: &LevelGraph,
    refined: &[usize],
    comm: &[usize],
) -> (LevelGraph, Vec<usize>) {
    let k = count_classes(refined);
    let mut size = vec![0u64; k];
    let mut self_mass = vec![0.0; k];
    let mut agg_comm = vec![0usize; k];
    for v in 0..level.n {
        let r = refined[v];
        size[r] += level.size[v];
        self_mass[r] += level.self_mass[v];
        agg_comm[r] = comm[v];
    }
    let mut inter: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(a, b, w) in &level.links {
        let (ra, rb) = (refined[a], refined[b]);
        if ra == rb {
            self_mass[ra] += w;
        } else {
            *inter.entry((ra.min(rb), ra.max(rb))).or_insert(0.0) += w;
        }
    }
    let links: Vec<(usize, usize, f64)> =
        inter.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    (
        LevelGraph {
            n: k,
            links,
            size,
            self_mass,
        },
        agg_comm,
    )
}
