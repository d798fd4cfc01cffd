//! Sparse latent space model with additive and multiplicative node effects
//! and edge covariates:
//!
//! `logit P(a_ij = 1) = q_iᵀq_j + v_i + v_j + Σ_k β_k x^k_ij + ρ`.
//!
//! Fitting is maximum likelihood by projected gradient ascent from a USVT
//! start. After every step the parameters are projected onto the
//! identified set (`Qᵀ1 = 0`, `QᵀQ` diagonal, `Σ v = 0`); the projection
//! moves mass between `Q`, `v`, and `ρ` without changing any logit, so it
//! never lowers the likelihood.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::usvt::{decompose_logits, usvt_logits, UsvtOptions};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::StreamRng;

/// Symmetric node-pair covariates (one matrix per covariate).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCovariates {
    mats: Vec<DMatrix<f64>>,
}

impl EdgeCovariates {
    pub fn new(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(Error::InvalidArgument("edge covariates need at least one matrix".into()));
        };
        let n = first.nrows();
        let mut out = Vec::with_capacity(mats.len());
        for (k, m) in mats.into_iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!(
                    "edge covariate {k} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("edge covariate {k} has non-finite entries")));
            }
            if (&m - m.transpose()).amax() > 1e-9 {
                return Err(Error::InvalidArgument(format!("edge covariate {k} is not symmetric")));
            }
            let mut sym = (&m + m.transpose()) * 0.5;
            sym.fill_diagonal(0.0);
            out.push(sym);
        }
        Ok(EdgeCovariates { mats: out })
    }

    pub fn count(&self) -> usize {
        self.mats.len()
    }

    pub fn n(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.mats
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsmParams {
    /// n×d multiplicative latent factors.
    #[serde(with = "crate::io::serde_matrix")]
    pub q: DMatrix<f64>,
    /// Additive node effects.
    #[serde(with = "crate::io::serde_vector")]
    pub v: DVector<f64>,
    /// Edge-covariate coefficients; `None` when the model has no covariates.
    pub beta: Option<Vec<f64>>,
    /// Sparsity offset `log ω_N`.
    pub rho: f64,
}

impl LsmParams {
    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn d(&self) -> usize {
        self.q.ncols()
    }

    /// Node latent vectors `[q_i, v_i]`, the input to the sieve basis.
    pub fn latent_positions(&self) -> DMatrix<f64> {
        let (n, d) = self.q.shape();
        let mut u = DMatrix::zeros(n, d + 1);
        u.columns_mut(0, d).copy_from(&self.q);
        u.set_column(d, &self.v);
        u
    }

    /// Logit matrix `θ` (diagonal set to zero).
    pub fn logits(&self, cov: Option<&EdgeCovariates>) -> Result<DMatrix<f64>> {
        let n = self.n();
        if self.v.len() != n {
            return Err(Error::Dimension(format!("q has {n} rows but v has {} entries", self.v.len())));
        }
        let mut theta = &self.q * self.q.transpose();
        for j in 0..n {
            for i in 0..n {
                theta[(i, j)] += self.v[i] + self.v[j] + self.rho;
            }
        }
        match (&self.beta, cov) {
            (Some(beta), Some(c)) => {
                if c.count() != beta.len() || c.n() != n {
                    return Err(Error::Dimension(format!(
                        "{} coefficients / {n} nodes vs {} covariates on {} nodes",
                        beta.len(),
                        c.count(),
                        c.n()
                    )));
                }
                for (b, x) in beta.iter().zip(c.matrices()) {
                    theta += x * *b;
                }
            }
            (None, None) => {}
            (Some(_), None) => {
                return Err(Error::Dimension("model has covariate coefficients but no covariates were supplied".into()))
            }
            (None, Some(_)) => {
                return Err(Error::Dimension("covariates supplied to a model without coefficients".into()))
            }
        }
        theta.fill_diagonal(0.0);
        Ok(theta)
    }

    /// Project onto `Qᵀ1 = 0`, diagonal `QᵀQ`, and `Σ v = 0` without
    /// changing any off-diagonal logit.
    pub fn project(&mut self) {
        let (n, d) = self.q.shape();
        if n == 0 {
            return;
        }
        let mu = DVector::from_fn(d, |c, _| self.q.column(c).mean());
        for c in 0..d {
            self.q.column_mut(c).add_scalar_mut(-mu[c]);
        }
        self.v += &self.q * &mu;
        self.rho += mu.norm_squared();
        let vbar = self.v.mean();
        self.v.add_scalar_mut(-vbar);
        self.rho += 2.0 * vbar;

        if d > 1 {
            let gram = self.q.transpose() * &self.q;
            let eig = SymmetricEigen::new(gram);
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
            let mut rot = DMatrix::zeros(d, d);
            for (c, &k) in order.iter().enumerate() {
                rot.set_column(c, &eig.eigenvectors.column(k));
            }
            self.q = &self.q * rot;
        }
        for c in 0..d {
            let col = self.q.column(c);
            let big = col.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if big < 0.0 {
                self.q.column_mut(c).neg_mut();
            }
        }
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli log-likelihood `Σ_{i<j} [a_ij θ_ij − log(1 + e^{θ_ij})]`.
pub fn bernoulli_loglik(a: &DMatrix<f64>, theta: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut ll = 0.0;
    for j in 0..n {
        for i in 0..j {
            let t = theta[(i, j)];
            ll += a[(i, j)] * t - softplus(t);
        }
    }
    ll
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LsmOptions {
    /// Initial line-search step, as a multiple of the curvature-scaled direction.
    pub initial_step: f64,
    pub max_iter: usize,
    /// Stop when the relative log-likelihood gain falls below this.
    pub tol: f64,
    pub usvt: UsvtOptions,
}

impl Default for LsmOptions {
    fn default() -> Self {
        LsmOptions { initial_step: 0.5, max_iter: 2000, tol: 1e-7, usvt: UsvtOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LsmFit {
    pub params: LsmParams,
    /// Fitted linear predictor `θ_ij` (diagonal zero).
    #[serde(skip)]
    pub logit_theta: DMatrix<f64>,
    /// Log-likelihood after initialization and after every accepted step.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub usvt_components: usize,
}

impl LsmFit {
    pub fn loglik(&self) -> f64 {
        *self.loglik_trace.last().expect("trace is never empty")
    }
}

/// Curvature-scaled ascent direction, already projected onto the tangent
/// of the linear constraints `Qᵀ1 = 0` and `Σ v = 0`.
struct Direction {
    q: DMatrix<f64>,
    v: DVector<f64>,
    rho: f64,
    beta: Vec<f64>,
    /// Directional derivative of the log-likelihood along this direction.
    slope: f64,
}

fn center_columns(m: &mut DMatrix<f64>) {
    for c in 0..m.ncols() {
        let mean = m.column(c).mean();
        m.column_mut(c).add_scalar_mut(-mean);
    }
}

fn ascent_direction(
    a: &DMatrix<f64>,
    theta: &DMatrix<f64>,
    params: &LsmParams,
    cov: Option<&EdgeCovariates>,
    iteration: usize,
) -> Result<Direction> {
    let n = a.nrows();
    let d = params.d();
    let k = cov.map_or(0, |c| c.count());
    let mut r = DMatrix::zeros(n, n);
    let mut w = DMatrix::zeros(n, n);
    let mut g_rho = 0.0;
    let mut w_sum = 0.0;
    let mut g_beta = vec![0.0; k];
    let mut wx2 = vec![0.0; k];
    for j in 0..n {
        for i in 0..j {
            let s = sigmoid(theta[(i, j)]);
            let res = a[(i, j)] - s;
            let wt = s * (1.0 - s);
            r[(i, j)] = res;
            r[(j, i)] = res;
            w[(i, j)] = wt;
            w[(j, i)] = wt;
            g_rho += res;
            w_sum += wt;
            if let Some(c) = cov {
                for (kk, x) in c.matrices().iter().enumerate() {
                    let xv = x[(i, j)];
                    g_beta[kk] += res * xv;
                    wx2[kk] += wt * xv * xv;
                }
            }
        }
    }
    let g_v = DVector::from_fn(n, |i, _| r.row(i).sum());
    let g_q = &r * &params.q;
    let finite = g_q.iter().chain(g_v.iter()).chain(g_beta.iter()).all(|x| x.is_finite()) && g_rho.is_finite();
    if !finite {
        return Err(Error::NonFinite { iteration, message: "gradient of the log-likelihood".into() });
    }

    // P·D·P with P the centering projector keeps the direction in the
    // constraint tangent space and guarantees a nonnegative slope.
    let w_node = DVector::from_fn(n, |i, _| w.row(i).sum().max(1e-12));
    let mut g_qc = g_q.clone();
    center_columns(&mut g_qc);
    let mut dir_q = DMatrix::zeros(n, d);
    for i in 0..n {
        // Fisher block Σ_j w_ij q_j q_jᵀ, ridged so empty neighborhoods stay finite.
        let mut h = DMatrix::from_diagonal_element(d, d, 1e-2 * w_node[i]);
        for j in 0..n {
            let wij = w[(i, j)];
            if wij > 0.0 {
                let qj = params.q.row(j);
                h.ger(wij, &qj.transpose(), &qj.transpose(), 1.0);
            }
        }
        let rhs = g_qc.row(i).transpose();
        let step = match h.cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => rhs / w_node[i],
        };
        dir_q.set_row(i, &step.transpose());
    }
    center_columns(&mut dir_q);
    let g_vc = g_v.add_scalar(-g_v.mean());
    let mut dir_v = DVector::from_fn(n, |i, _| g_vc[i] / w_node[i]);
    let vm = dir_v.mean();
    dir_v.add_scalar_mut(-vm);
    let dir_rho = g_rho / w_sum.max(1e-12);
    let dir_beta: Vec<f64> = g_beta.iter().zip(&wx2).map(|(g, h)| g / h.max(1e-12)).collect();

    let slope = dir_q.dot(&g_q)
        + dir_v.dot(&g_v)
        + dir_rho * g_rho
        + dir_beta.iter().zip(&g_beta).map(|(a, b)| a * b).sum::<f64>();
    Ok(Direction { q: dir_q, v: dir_v, rho: dir_rho, beta: dir_beta, slope })
}

/// Maximum-likelihood fit of the latent space model.
pub fn lsm_fit(graph: &Graph, cov: Option<&EdgeCovariates>, d: usize, opts: &LsmOptions) -> Result<LsmFit> {
    let n = graph.n();
    if d == 0 {
        return Err(Error::InvalidArgument("latent dimension must be positive".into()));
    }
    if d >= n {
        return Err(Error::Dimension(format!("latent dimension {d} must be below node count {n}")));
    }
    if let Some(c) = cov {
        if c.n() != n {
            return Err(Error::Dimension(format!("edge covariates are {}x{0}, graph has {n} nodes", c.n())));
        }
    }
    let a = graph.adjacency();
    let (mut params, usvt_components) = initialize(graph, cov, d, &opts.usvt)?;
    params.project();

    let mut theta = params.logits(cov)?;
    let mut ll = bernoulli_loglik(a, &theta);
    if !ll.is_finite() {
        return Err(Error::NonFinite { iteration: 0, message: "initial log-likelihood".into() });
    }
    let mut trace = vec![ll];
    let mut step = opts.initial_step;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iter {
        iterations = it;
        let dir = ascent_direction(a, &theta, &params, cov, it)?;
        let slope = dir.slope;
        if !(slope > 0.0) {
            converged = true;
            break;
        }

        let mut t = (2.0 * step).min(1.0);
        let mut accepted = None;
        for _ in 0..50 {
            let mut cand = params.clone();
            cand.q += &dir.q * t;
            cand.v += &dir.v * t;
            cand.rho += t * dir.rho;
            if let Some(b) = cand.beta.as_mut() {
                for (bk, dk) in b.iter_mut().zip(&dir.beta) {
                    *bk += t * dk;
                }
            }
            cand.project();
            let cand_theta = cand.logits(cov)?;
            let cand_ll = bernoulli_loglik(a, &cand_theta);
            if cand_ll.is_finite() && cand_ll >= ll + 1e-4 * t * slope {
                accepted = Some((cand, cand_theta, cand_ll));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cand_theta, cand_ll)) = accepted else {
            converged = true;
            break;
        };
        step = t;
        let gain = (cand_ll - ll) / ll.abs().max(1e-300);
        params = cand;
        theta = cand_theta;
        ll = cand_ll;
        trace.push(ll);
        if gain < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(LsmFit { params, logit_theta: theta, loglik_trace: trace, iterations, converged, usvt_components })
}

fn initialize(graph: &Graph, cov: Option<&EdgeCovariates>, d: usize, usvt: &UsvtOptions) -> Result<(LsmParams, usize)> {
    let n = graph.n();
    let (mut logits, kept) = usvt_logits(graph, usvt)?;
    let beta = match cov {
        None => None,
        Some(c) => {
            let b = covariate_start(&logits, c);
            for (bk, x) in b.iter().zip(c.matrices()) {
                logits -= x * *bk;
            }
            Some(b)
        }
    };
    let (mut q, v, rho) = decompose_logits(&logits, d)?;
    // A zero Q is a stationary point of the likelihood in Q; nudge it off.
    if q.norm() < 1e-8 * (n as f64).sqrt() {
        let centered = double_center(graph.adjacency());
        let eig = crate::linalg::symmetric_leading(&centered, d, crate::linalg::SpectrumOrder::Algebraic)?;
        q = eig.vectors * 0.1;
    }
    Ok((LsmParams { q, v, beta, rho }, kept))
}

fn double_center(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let rm = DVector::from_fn(n, |i, _| m.row(i).mean());
    let gm = rm.mean();
    DMatrix::from_fn(n, n, |i, j| m[(i, j)] - rm[i] - rm[j] + gm)
}

/// Least-squares coefficients of the double-centered logits on the
/// double-centered covariates, over off-diagonal pairs.
fn covariate_start(logits: &DMatrix<f64>, cov: &EdgeCovariates) -> Vec<f64> {
    let k = cov.count();
    let n = logits.nrows();
    let lc = double_center(logits);
    let xs: Vec<DMatrix<f64>> = cov.matrices().iter().map(double_center).collect();
    let mut gram = DMatrix::zeros(k, k);
    let mut rhs = DVector::zeros(k);
    for j in 0..n {
        for i in 0..j {
            for a in 0..k {
                rhs[a] += xs[a][(i, j)] * lc[(i, j)];
                for b in 0..k {
                    gram[(a, b)] += xs[a][(i, j)] * xs[b][(i, j)];
                }
            }
        }
    }
    match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs).iter().copied().collect(),
        None => vec![0.0; k],
    }
}

/// Independent Bernoulli draws from the model, one uniform per pair `i < j`.
pub fn lsm_simulate(params: &LsmParams, cov: Option<&EdgeCovariates>, rng: &mut StreamRng) -> Result<Graph> {
    let theta = params.logits(cov)?;
    simulate_from_logits(&theta, rng)
}

pub(crate) fn simulate_from_logits(theta: &DMatrix<f64>, rng: &mut StreamRng) -> Result<Graph> {
    let n = theta.nrows();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let p = sigmoid(theta[(i, j)]);
            let u: f64 = rng.random();
            if u < p {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    Graph::new(a)
}
