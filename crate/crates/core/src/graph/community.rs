//! Deterministic greedy agglomerative modularity maximization.
//!
//! Starting from singletons, repeatedly merge the pair of adjacent
//! communities with the largest modularity gain until no merge improves Q.
//! Gains are compared in exact integer-valued arithmetic (scaled by `2m²`)
//! for binary graphs, and ties go to the lexicographically smallest pair of
//! community indices, so the partition is a pure function of the adjacency.

use std::collections::BTreeMap;

use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityPartition {
    /// Community label per node; labels are the smallest node index in each community.
    pub labels: Vec<usize>,
    pub q: f64,
}

impl CommunityPartition {
    pub fn community_count(&self) -> usize {
        let mut l = self.labels.clone();
        l.sort_unstable();
        l.dedup();
        l.len()
    }
}

/// Newman modularity of an arbitrary partition given by `labels`.
pub fn modularity_of(graph: &Graph, labels: &[usize]) -> Result<f64> {
    let n = graph.n();
    if labels.len() != n {
        return Err(Error::Dimension(format!("{} labels for {n} nodes", labels.len())));
    }
    let m = graph.edge_count();
    if m == 0.0 {
        return Err(Error::DegenerateInput("modularity undefined for an edgeless graph".into()));
    }
    let a = graph.adjacency();
    let mut within: BTreeMap<usize, f64> = BTreeMap::new();
    let mut total: BTreeMap<usize, f64> = BTreeMap::new();
    for i in 0..n {
        *total.entry(labels[i]).or_default() += graph.degrees()[i];
        for j in i + 1..n {
            if labels[i] == labels[j] {
                *within.entry(labels[i]).or_default() += a[(i, j)];
            }
        }
    }
    Ok(total
        .iter()
        .map(|(c, d)| within.get(c).copied().unwrap_or(0.0) / m - (d / (2.0 * m)).powi(2))
        .sum())
}

/// Greedy agglomerative partition of `graph` with its modularity.
pub fn greedy_partition(graph: &Graph) -> Result<CommunityPartition> {
    let n = graph.n();
    let m = graph.edge_count();
    if m == 0.0 {
        return Err(Error::DegenerateInput("modularity undefined for an edgeless graph".into()));
    }
    let a = graph.adjacency();
    let two_m = 2.0 * m;
    let mut links: Vec<BTreeMap<usize, f64>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && a[(i, j)] > 0.0).map(|j| (j, a[(i, j)])).collect())
        .collect();
    let mut deg: Vec<f64> = graph.degrees().iter().copied().collect();
    let mut alive = vec![true; n];
    let mut parent: Vec<usize> = (0..n).collect();

    loop {
        // score = 2m·e_ij − d_i·d_j = 2m²·ΔQ
        let mut best: Option<(f64, usize, usize)> = None;
        for i in (0..n).filter(|&i| alive[i]) {
            for (&j, &e) in links[i].range(i + 1..) {
                let score = two_m * e - deg[i] * deg[j];
                if best.is_none_or(|(s, _, _)| score > s) {
                    best = Some((score, i, j));
                }
            }
        }
        let Some((score, i, j)) = best else { break };
        if score <= 0.0 {
            break;
        }
        let moved = std::mem::take(&mut links[j]);
        for (k, e) in moved {
            if k == i {
                continue;
            }
            let kl = &mut links[k];
            kl.remove(&j);
            *kl.entry(i).or_default() += e;
            *links[i].entry(k).or_default() += e;
        }
        links[i].remove(&j);
        deg[i] += deg[j];
        alive[j] = false;
        parent[j] = i;
    }

    let labels: Vec<usize> = (0..n)
        .map(|mut v| {
            while parent[v] != v {
                v = parent[v];
            }
            v
        })
        .collect();
    let q = modularity_of(graph, &labels)?;
    Ok(CommunityPartition { labels, q })
}

/// Modularity of the greedy partition.
pub fn modularity(graph: &Graph) -> Result<f64> {
    greedy_partition(graph).map(|p| p.q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cliques(sizes: &[usize], bridges: &[(usize, usize)]) -> Graph {
        let mut edges = Vec::new();
        let mut off = 0;
        for &s in sizes {
            for i in 0..s {
                for j in i + 1..s {
                    edges.push((off + i, off + j));
                }
            }
            off += s;
        }
        edges.extend_from_slice(bridges);
        Graph::from_edges(off, &edges).unwrap()
    }

    #[test]
    fn two_triangles() {
        let g = cliques(&[3, 3], &[]);
        let p = greedy_partition(&g).unwrap();
        assert_eq!(p.labels, vec![0, 0, 0, 3, 3, 3]);
        assert!((p.q - 0.5).abs() < 1e-12);
        assert!((modularity_of(&g, &[0, 0, 0, 1, 1, 1]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn complete_graph_collapses_to_one_community() {
        for n in 3..7 {
            let p = greedy_partition(&cliques(&[n], &[])).unwrap();
            assert_eq!(p.community_count(), 1);
            assert!(p.q.abs() < 1e-12);
        }
    }

    #[test]
    fn bridged_cliques() {
        let g = cliques(&[5, 5], &[(4, 5)]);
        let p = greedy_partition(&g).unwrap();
        assert!(p.q > 0.4, "q = {}", p.q);
        assert_eq!(p.community_count(), 2);
        // m = 21, each side: 10 internal edges, total degree 21.
        let hand = 2.0 * (10.0 / 21.0 - 0.25);
        assert!((p.q - hand).abs() < 1e-12);
    }

    #[test]
    fn edgeless_is_degenerate() {
        assert!(modularity(&Graph::empty(4)).is_err());
    }
}
