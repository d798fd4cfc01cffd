use super::Graph;
use crate::error::{Error, Result};

/// Global clustering coefficient: `3 × triangles / connected triples`.
///
/// Edges are taken as the positive entries of the adjacency. Returns 0 when
/// the graph has no connected triple.
pub fn transitivity(graph: &Graph) -> f64 {
    let nbrs = graph.neighbors();
    let a = graph.adjacency();
    let mut triangles = 0u64;
    for (i, ni) in nbrs.iter().enumerate() {
        for &j in ni.iter().filter(|&&j| j > i) {
            for &k in nbrs[j].iter().filter(|&&k| k > j) {
                if a[(i, k)] > 0.0 {
                    triangles += 1;
                }
            }
        }
    }
    let triples: u64 = nbrs
        .iter()
        .map(|ni| {
            let d = ni.len() as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum();
    if triples == 0 {
        0.0
    } else {
        3.0 * triangles as f64 / triples as f64
    }
}

/// Sample standard deviation (divisor `n − 1`) of the row means of `A`.
pub fn sd_row_means(graph: &Graph) -> Result<f64> {
    let n = graph.n();
    if n < 2 {
        return Err(Error::DegenerateInput(format!("row-mean spread needs at least 2 nodes, got {n}")));
    }
    let nf = n as f64;
    let means: Vec<f64> = graph.degrees().iter().map(|d| d / nf).collect();
    let mu = means.iter().sum::<f64>() / nf;
    let ss: f64 = means.iter().map(|m| (m - mu).powi(2)).sum();
    Ok((ss / (nf - 1.0)).sqrt())
}
