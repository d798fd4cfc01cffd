use serde::Serialize;

use super::PeerEffectsFit;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaldRow {
    /// `D`, `B1` or `B2`.
    pub block: &'static str,
    /// Regressor index within the block.
    pub regressor: usize,
    /// Outcome equation.
    pub equation: usize,
    /// Position in `vec(beta)`.
    pub vec_index: usize,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
    /// Set when the variance estimate is not strictly positive.
    pub flagged: bool,
}

/// Per-coefficient estimates, standard errors and z statistics, with the `D`
/// block first, then `B1`, then `B2`.
pub fn wald_table(fit: &PeerEffectsFit) -> Vec<WaldRow> {
    let (q, m) = fit.beta.shape();
    let p = fit.diagnostics.p;
    let blocks = [("D", 0, m), ("B1", m, p), ("B2", m + p, p)];
    let mut rows = Vec::with_capacity(q * m);
    for (name, start, len) in blocks {
        for eq in 0..m {
            for r in 0..len {
                let vec_index = eq * q + start + r;
                let var = fit.sigma_beta[(vec_index, vec_index)];
                let estimate = fit.beta[(start + r, eq)];
                let flagged = !(var > 0.0);
                let se = if flagged { f64::NAN } else { var.sqrt() };
                rows.push(WaldRow {
                    block: name,
                    regressor: r,
                    equation: eq,
                    vec_index,
                    estimate,
                    se,
                    z: estimate / se,
                    flagged,
                });
            }
        }
    }
    rows
}
