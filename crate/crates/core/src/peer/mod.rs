//! Multivariate spatial autoregression `Y = GYD + XB1 + GXB2 + E` estimated
//! by (latent-adjusted) vectorized two-stage least squares.

mod composition;
mod wald;

pub use composition::{alr, alr_inverse, Composition, SMOOTHING_FLOOR};
pub use wald::{wald_table, WaldRow};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PeerOperator;
use crate::io::{serde_matrix, serde_vector};
use crate::linalg::{condition_number, hstack, kron, singular_values, spd_inverse, symmetrize, unvec, vec_cols};
use crate::sieve::{residualize, SieveDesign, SieveSpec};

/// Threshold on the smallest singular value of `K̃ᵀZ̃ / N`.
pub const IDENTIFICATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct MsarData {
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub g: PeerOperator,
}

impl MsarData {
    pub fn new(y: DMatrix<f64>, x: DMatrix<f64>, g: PeerOperator) -> Result<Self> {
        let n = g.n();
        if y.nrows() != n || x.nrows() != n {
            return Err(Error::Dimension(format!(
                "outcomes have {} rows, covariates {} rows, peer operator {} nodes",
                y.nrows(),
                x.nrows(),
                n
            )));
        }
        if y.ncols() == 0 {
            return Err(Error::Dimension("at least one outcome column is required".into()));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("non-finite outcome or covariate".into()));
        }
        Ok(MsarData { y, x, g })
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn m(&self) -> usize {
        self.y.ncols()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Removes nodes whose peer-operator row is zero, returning the reduced
    /// data and the indices of the retained nodes.
    pub fn drop_isolated(&self) -> Result<(MsarData, Vec<usize>)> {
        let iso = self.g.isolated();
        let keep: Vec<usize> = (0..self.n()).filter(|i| iso.binary_search(i).is_err()).collect();
        let g = self.g.matrix().select_rows(&keep).select_columns(&keep);
        let data = MsarData::new(
            self.y.select_rows(&keep),
            self.x.select_rows(&keep),
            PeerOperator::from_matrix(g)?,
        )?;
        Ok((data, keep))
    }
}

/// Regressors `Z = [GY | X | GX]` and instruments `K = [X | GX | G²X]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentSet {
    pub z: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

pub fn build_instruments(data: &MsarData) -> InstrumentSet {
    let gy = data.g.apply(&data.y);
    let gx = data.g.apply(&data.x);
    let ggx = data.g.apply(&gx);
    InstrumentSet {
        z: hstack(&[&gy, &data.x, &gx]),
        k: hstack(&[&data.x, &gx, &ggx]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Naive,
    Adjusted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub sieve_columns: usize,
    pub sieve_rank: usize,
    /// Smallest singular value of `K̃ᵀZ̃ / N`.
    pub min_singular_kz: f64,
    pub rank_kz: usize,
    pub cond_kk: f64,
    pub cond_first_stage: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeerEffectsFit {
    pub estimator: EstimatorKind,
    /// Stacked `[D; B1; B2]`, one column per outcome.
    #[serde(with = "serde_matrix")]
    pub beta: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub d_hat: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub b1_hat: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub b2_hat: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub v_hat: DMatrix<f64>,
    /// Covariance of `vec(beta)`.
    #[serde(with = "serde_matrix")]
    pub sigma_beta: DMatrix<f64>,
    #[serde(with = "serde_vector")]
    pub se: DVector<f64>,
    pub diagnostics: FitDiagnostics,
}

impl PeerEffectsFit {
    pub fn beta_vec(&self) -> DVector<f64> {
        vec_cols(&self.beta)
    }

    /// Standard error of `D[(i, j)]`.
    pub fn d_se(&self, i: usize, j: usize) -> f64 {
        let q = self.beta.nrows();
        self.se[j * q + i]
    }
}

struct Residualized {
    y: DMatrix<f64>,
    z: DMatrix<f64>,
    k: DMatrix<f64>,
    sieve_columns: usize,
    sieve_rank: usize,
}

fn prepare(data: &MsarData, design: &SieveDesign) -> Result<Residualized> {
    let (m, p) = (data.m(), data.p());
    if p < m {
        return Err(Error::Identification(format!(
            "instrument count 3p = {} is below regressor count m + 2p = {}; need at least as many covariates as outcomes",
            3 * p,
            m + 2 * p
        )));
    }
    let inst = build_instruments(data);
    Ok(Residualized {
        y: residualize(&data.y, design)?,
        z: residualize(&inst.z, design)?,
        k: residualize(&inst.k, design)?,
        sieve_columns: design.basis_count(),
        sieve_rank: design.rank,
    })
}

fn block_of(index: usize, edges: &[(usize, &'static str)]) -> &'static str {
    edges
        .iter()
        .find(|(end, _)| index < *end)
        .map(|(_, name)| *name)
        .unwrap_or("unknown")
}

/// Names the block holding most of the weight of the weakest direction of
/// `mat`'s column space.
fn weakest_block(mat: &DMatrix<f64>, edges: &[(usize, &'static str)]) -> &'static str {
    let svd = mat.clone().svd(false, true);
    let vt = match svd.v_t {
        Some(v) => v,
        None => return "unknown",
    };
    let sv = &svd.singular_values;
    let (mut row, mut smallest) = (0, f64::INFINITY);
    for (i, &s) in sv.iter().enumerate() {
        if s < smallest {
            smallest = s;
            row = i;
        }
    }
    let dir = vt.row(row);
    let mut best = 0;
    for i in 0..dir.len() {
        if dir[i].abs() > dir[best].abs() {
            best = i;
        }
    }
    block_of(best, edges)
}

struct Core {
    a_inv: DMatrix<f64>,
    diagnostics: FitDiagnostics,
    kk_inv: DMatrix<f64>,
}

fn identify(r: &Residualized, m: usize, p: usize) -> Result<Core> {
    let n = r.y.nrows();
    let nf = n as f64;
    let z_edges = [(m, "GY"), (m + p, "X"), (m + 2 * p, "GX")];
    let k_edges = [(p, "X"), (2 * p, "GX"), (3 * p, "G²X")];

    let kk = r.k.transpose() * &r.k;
    let kk_inv = spd_inverse(&symmetrize(&kk), "instrument cross-product").map_err(|_| {
        Error::Identification(format!(
            "instrument matrix K = [X | GX | G²X] is rank deficient after latent adjustment (weakest block: {})",
            weakest_block(&r.k, &k_edges)
        ))
    })?;

    let kz = r.k.transpose() * &r.z / nf;
    let sv = singular_values(&kz);
    let min_sv = if sv.is_empty() { 0.0 } else { sv.min() };
    let smax = if sv.is_empty() { 0.0 } else { sv.max() };
    let rank_kz = sv.iter().filter(|&&s| s > IDENTIFICATION_TOL.max(1e-12 * smax)).count();
    if !(min_sv >= IDENTIFICATION_TOL) {
        return Err(Error::Identification(format!(
            "K̃ᵀZ̃/N does not have full column rank (smallest singular value {:.3e}); weakest regressor block: {}",
            min_sv,
            weakest_block(&kz, &z_edges)
        )));
    }

    let zk = r.z.transpose() * &r.k;
    let a = symmetrize(&(&zk * &kk_inv * zk.transpose()));
    let a_inv = spd_inverse(&a, "first-stage projection").map_err(|_| {
        Error::Identification(format!(
            "Z̃ᵀP_K̃Z̃ is singular; weakest regressor block: {}",
            weakest_block(&r.z, &z_edges)
        ))
    })?;

    Ok(Core {
        diagnostics: FitDiagnostics {
            n,
            m,
            p,
            sieve_columns: r.sieve_columns,
            sieve_rank: r.sieve_rank,
            min_singular_kz: min_sv,
            rank_kz,
            cond_kk: condition_number(&kk),
            cond_first_stage: condition_number(&a),
        },
        a_inv,
        kk_inv,
    })
}

fn assemble(
    estimator: EstimatorKind,
    beta: DMatrix<f64>,
    v_hat: DMatrix<f64>,
    sigma_beta: DMatrix<f64>,
    diagnostics: FitDiagnostics,
) -> Result<PeerEffectsFit> {
    if beta.iter().chain(sigma_beta.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite coefficient or covariance estimate".into()));
    }
    let (m, p) = (diagnostics.m, diagnostics.p);
    let se = DVector::from_iterator(
        sigma_beta.nrows(),
        sigma_beta.diagonal().iter().map(|&v| if v > 0.0 { v.sqrt() } else { f64::NAN }),
    );
    Ok(PeerEffectsFit {
        estimator,
        d_hat: beta.rows(0, m).into_owned(),
        b1_hat: beta.rows(m, p).into_owned(),
        b2_hat: beta.rows(m + p, p).into_owned(),
        beta,
        v_hat,
        sigma_beta,
        se,
        diagnostics,
    })
}

/// `(ZᵀK(KᵀK)⁻¹KᵀZ)⁻¹ ZᵀK(KᵀK)⁻¹KᵀY` given the two inverses.
fn two_stage(
    y: &DMatrix<f64>,
    z: &DMatrix<f64>,
    k: &DMatrix<f64>,
    kk_inv: &DMatrix<f64>,
    a_inv: &DMatrix<f64>,
) -> DMatrix<f64> {
    let zk = z.transpose() * k;
    a_inv * (zk * kk_inv * (k.transpose() * y))
}

/// Kronecker-factored estimator. Never forms any `mN × mN` matrix.
pub fn fast_kronecker_path(data: &MsarData, design: &SieveDesign) -> Result<PeerEffectsFit> {
    fit_fast(data, design, EstimatorKind::Adjusted)
}

fn fit_fast(data: &MsarData, design: &SieveDesign, kind: EstimatorKind) -> Result<PeerEffectsFit> {
    let (m, p) = (data.m(), data.p());
    let r = prepare(data, design)?;
    let core = identify(&r, m, p)?;
    let nf = data.n() as f64;

    let beta = two_stage(&r.y, &r.z, &r.k, &core.kk_inv, &core.a_inv);
    let e = &r.y - &r.z * &beta;
    let v_hat = symmetrize(&(e.transpose() * &e / nf));
    let sigma_beta = kron(&v_hat, &core.a_inv);
    assemble(kind, beta, v_hat, sigma_beta, core.diagnostics)
}

/// Reference implementation that materializes `I_m ⊗ Z̃`, `I_m ⊗ K̃` and the
/// `mN × mN` projection exactly as written in the vectorized formulas.
pub fn literal_vectorized_path(data: &MsarData, design: &SieveDesign) -> Result<PeerEffectsFit> {
    let (n, m, p) = (data.n(), data.m(), data.p());
    let r = prepare(data, design)?;
    let core = identify(&r, m, p)?;
    let nf = n as f64;

    let eye_m = DMatrix::<f64>::identity(m, m);
    let y_v = vec_cols(&r.y);
    let z_v = kron(&eye_m, &r.z);
    let k_v = kron(&eye_m, &r.k);
    let kvkv_inv = spd_inverse(&symmetrize(&(k_v.transpose() * &k_v)), "vectorized instrument cross-product")?;
    let p_k = &k_v * kvkv_inv * k_v.transpose();
    let zp = z_v.transpose() * &p_k;
    let bread = spd_inverse(&symmetrize(&(&zp * &z_v)), "vectorized first stage")?;
    let beta_v = &bread * (&zp * &y_v);

    let e_v = &y_v - &z_v * &beta_v;
    let e = unvec(&e_v, n, m);
    let v_hat = symmetrize(&(e.transpose() * &e / nf));
    let meat = &zp * kron(&v_hat, &DMatrix::identity(n, n)) * zp.transpose();
    let sigma_beta = symmetrize(&(&bread * meat * &bread));
    let beta = unvec(&beta_v, m + 2 * p, m);
    assemble(EstimatorKind::Adjusted, beta, v_hat, sigma_beta, core.diagnostics)
}

/// Latent-adjusted estimator: residualize `Y`, `Z`, `K` against the sieve
/// design, then vectorized 2SLS.
pub fn adjusted_2sls(data: &MsarData, design: &SieveDesign) -> Result<PeerEffectsFit> {
    fast_kronecker_path(data, design)
}

/// Unadjusted estimator `(ZᵀP_K Z)⁻¹ZᵀP_K Y`.
pub fn naive_2sls(data: &MsarData) -> Result<PeerEffectsFit> {
    let empty = crate::sieve::build_basis(&DMatrix::zeros(data.n(), 0), &SieveSpec::empty())?;
    fit_fast(data, &empty, EstimatorKind::Naive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{row_normalize, Graph};
    use crate::rng::stream;
    use crate::sieve::build_basis;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal(n: usize, k: usize, label: &str, idx: u64) -> DMatrix<f64> {
        let mut rng = stream(21, label, idx);
        DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng))
    }

    fn random_graph(n: usize, prob: f64, idx: u64) -> Graph {
        let mut rng = stream(21, "graph", idx);
        let mut edges = Vec::new();
        for j in 0..n {
            for i in 0..j {
                if rng.random::<f64>() < prob {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    fn path3() -> PeerOperator {
        row_normalize(&Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap())
    }

    #[test]
    fn instruments_on_empty_graph() {
        let x = normal(4, 2, "x", 0);
        let y = normal(4, 2, "y", 0);
        let data = MsarData::new(y, x.clone(), row_normalize(&Graph::empty(4))).unwrap();
        let inst = build_instruments(&data);
        let z0 = DMatrix::zeros(4, 2);
        assert_eq!(inst.z, hstack(&[&z0, &x, &z0]));
        assert_eq!(inst.k, hstack(&[&x, &z0, &z0]));
    }

    #[test]
    fn instruments_on_path_graph() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 2.0, 3.0]);
        let y = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 4.0]);
        let data = MsarData::new(y, x, path3()).unwrap();
        let inst = build_instruments(&data);
        // G = [[0,1,0],[.5,0,.5],[0,1,0]]
        let gy = [2.0, 2.5, 2.0];
        let gx = [[0.0, 1.0], [1.5, 1.5], [0.0, 1.0]];
        let ggx = [[1.5, 1.5], [0.0, 1.0], [1.5, 1.5]];
        for i in 0..3 {
            assert_eq!(inst.z[(i, 0)], gy[i]);
            assert_eq!(inst.z[(i, 3)], gx[i][0]);
            assert_eq!(inst.z[(i, 4)], gx[i][1]);
            assert_eq!(inst.k[(i, 4)], ggx[i][0]);
            assert_eq!(inst.k[(i, 5)], ggx[i][1]);
        }
    }

    #[test]
    fn instruments_are_permutation_equivariant() {
        let g = random_graph(12, 0.3, 0);
        let perm: Vec<usize> = vec![3, 7, 0, 11, 5, 1, 9, 2, 10, 6, 4, 8];
        let gp = g.permuted(&perm).unwrap();
        let mut inv = vec![0; 12];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let x = normal(12, 2, "x", 1);
        let y = normal(12, 2, "y", 1);
        let a = build_instruments(&MsarData::new(y.clone(), x.clone(), row_normalize(&g)).unwrap());
        let b = build_instruments(&MsarData::new(y.select_rows(&inv), x.select_rows(&inv), row_normalize(&gp)).unwrap());
        assert!((a.z.select_rows(&inv) - b.z).amax() < 1e-12);
        assert!((a.k.select_rows(&inv) - b.k).amax() < 1e-12);
    }

    #[test]
    fn moment_conditions_hold() {
        let n = 90;
        let g = row_normalize(&random_graph(n, 0.1, 2));
        let data = MsarData::new(normal(n, 2, "y", 2), normal(n, 3, "x", 2), g).unwrap();
        let design = build_basis(&normal(n, 2, "u", 2), &SieveSpec::default()).unwrap();
        let fit = adjusted_2sls(&data, &design).unwrap();
        let inst = build_instruments(&data);
        let (y, z, k) = (
            residualize(&data.y, &design).unwrap(),
            residualize(&inst.z, &design).unwrap(),
            residualize(&inst.k, &design).unwrap(),
        );
        let e = &y - &z * &fit.beta;
        let kk_inv = spd_inverse(&(k.transpose() * &k), "kk").unwrap();
        let z_hat = &k * kk_inv * (k.transpose() * &z);
        assert!((z_hat.transpose() * &e).amax() < 1e-8 * y.norm() * z.norm());

        // Just-identified case: p = m makes K̃ᵀÊ vanish.
        let data = MsarData::new(normal(n, 2, "y", 3), normal(n, 2, "x", 3), row_normalize(&random_graph(n, 0.1, 3))).unwrap();
        let fit = adjusted_2sls(&data, &design).unwrap();
        let inst = build_instruments(&data);
        let e = residualize(&data.y, &design).unwrap() - residualize(&inst.z, &design).unwrap() * &fit.beta;
        let k = residualize(&inst.k, &design).unwrap();
        assert!((k.transpose() * e).amax() < 1e-8 * k.norm() * data.y.norm());
    }

    #[test]
    fn noiseless_structural_model_is_recovered() {
        let n = 120;
        let (m, p) = (2, 3);
        let g = row_normalize(&random_graph(n, 0.08, 3));
        let x = normal(n, p, "x", 3);
        let d = DMatrix::from_row_slice(2, 2, &[0.3, 0.2, 0.25, 0.6]);
        let b1 = normal(p, m, "b1", 3);
        let b2 = normal(p, m, "b2", 3);
        let y = crate::dgp::solve_outcomes(g.matrix(), &d, &(&x * &b1 + g.apply(&x) * &b2)).unwrap();
        let data = MsarData::new(y, x, g).unwrap();
        let fit = naive_2sls(&data).unwrap();
        let truth = crate::linalg::vstack(&[&d, &b1, &b2]);
        assert!((&fit.beta - &truth).amax() < 1e-8, "{}", (&fit.beta - &truth).amax());
    }

    #[test]
    fn self_instrumenting_collapses_to_ols() {
        let n = 50;
        let z = normal(n, 4, "z", 4);
        let y = normal(n, 2, "y", 4);
        let zz_inv = spd_inverse(&(z.transpose() * &z), "zz").unwrap();
        let a_inv = spd_inverse(&(z.transpose() * &z * &zz_inv * z.transpose() * &z), "a").unwrap();
        let iv = two_stage(&y, &z, &z, &zz_inv, &a_inv);
        let ols = &zz_inv * z.transpose() * &y;
        assert!((ols - iv).amax() < 1e-9);
    }

    #[test]
    fn fast_path_matches_literal_path() {
        for (idx, &(n, m, p)) in [(30, 1, 2), (45, 2, 3), (60, 3, 4)].iter().enumerate() {
            let g = row_normalize(&random_graph(n, 0.15, idx as u64 + 10));
            let data = MsarData::new(normal(n, m, "y", idx as u64), normal(n, p, "x", idx as u64), g).unwrap();
            let design = build_basis(&normal(n, 2, "u", idx as u64), &SieveSpec::default()).unwrap();
            let a = fast_kronecker_path(&data, &design).unwrap();
            let b = literal_vectorized_path(&data, &design).unwrap();
            let rel = |x: &DMatrix<f64>, y: &DMatrix<f64>| (x - y).norm() / y.norm();
            assert!(rel(&a.beta, &b.beta) < 1e-8);
            assert!(rel(&a.sigma_beta, &b.sigma_beta) < 1e-8);
        }
    }

    #[test]
    fn constant_basis_equals_naive_on_demeaned_data() {
        let n = 70;
        let g = row_normalize(&random_graph(n, 0.1, 30));
        let data = MsarData::new(normal(n, 2, "y", 30), normal(n, 3, "x", 30), g).unwrap();
        let design = build_basis(&DMatrix::zeros(n, 1), &SieveSpec::constant_only()).unwrap();
        let adj = adjusted_2sls(&data, &design).unwrap();

        let inst = build_instruments(&data);
        let center = |m: &DMatrix<f64>| {
            let mut c = m.clone();
            for mut col in c.column_iter_mut() {
                let mean = col.mean();
                col.add_scalar_mut(-mean);
            }
            c
        };
        let (y, z, k) = (center(&data.y), center(&inst.z), center(&inst.k));
        let kk_inv = spd_inverse(&(k.transpose() * &k), "kk").unwrap();
        let zk = z.transpose() * &k;
        let a_inv = spd_inverse(&(&zk * &kk_inv * zk.transpose()), "a").unwrap();
        let beta = a_inv * zk * kk_inv * k.transpose() * y;
        assert!((adj.beta - beta).amax() < 1e-9);
    }

    #[test]
    fn empty_basis_adjusted_equals_naive() {
        let n = 60;
        let g = row_normalize(&random_graph(n, 0.1, 31));
        let data = MsarData::new(normal(n, 2, "y", 31), normal(n, 2, "x", 31), g).unwrap();
        let design = build_basis(&normal(n, 2, "u", 31), &SieveSpec::empty()).unwrap();
        let a = adjusted_2sls(&data, &design).unwrap();
        let b = naive_2sls(&data).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.sigma_beta, b.sigma_beta);
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let n = 80;
        let g = row_normalize(&random_graph(n, 0.1, 32));
        let data = MsarData::new(normal(n, 2, "y", 32), normal(n, 3, "x", 32), g).unwrap();
        let fit = naive_2sls(&data).unwrap();
        let s = &fit.sigma_beta;
        assert!((s - s.transpose()).amax() < 1e-14);
        let eig = s.clone().symmetric_eigenvalues();
        assert!(eig.min() >= -1e-8 * s.trace());
        assert_eq!(fit.se.len(), 2 * 8);
    }

    #[test]
    fn empty_graph_is_not_identified() {
        let n = 30;
        let data = MsarData::new(normal(n, 2, "y", 33), normal(n, 2, "x", 33), row_normalize(&Graph::empty(n))).unwrap();
        match naive_2sls(&data) {
            Err(Error::Identification(msg)) => assert!(msg.contains("G"), "{msg}"),
            other => panic!("expected identification error, got {other:?}"),
        }
    }

    #[test]
    fn covariates_in_sieve_span_are_not_identified() {
        let n = 60;
        let g = row_normalize(&random_graph(n, 0.1, 34));
        let u = normal(n, 2, "u", 34);
        let data = MsarData::new(normal(n, 2, "y", 34), u.clone(), g).unwrap();
        let design = build_basis(&u, &SieveSpec::polynomial(1)).unwrap();
        assert!(matches!(adjusted_2sls(&data, &design), Err(Error::Identification(_))));
    }

    #[test]
    fn fewer_covariates_than_outcomes_is_rejected() {
        let n = 30;
        let g = row_normalize(&random_graph(n, 0.2, 35));
        let data = MsarData::new(normal(n, 3, "y", 35), normal(n, 2, "x", 35), g).unwrap();
        assert!(matches!(naive_2sls(&data), Err(Error::Identification(_))));
    }

    #[test]
    fn dropping_isolated_nodes() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 3)]).unwrap();
        let data = MsarData::new(normal(5, 1, "y", 36), normal(5, 1, "x", 36), row_normalize(&g)).unwrap();
        let (reduced, keep) = data.drop_isolated().unwrap();
        assert_eq!(keep, vec![0, 1, 3]);
        assert_eq!(reduced.n(), 3);
        assert!(reduced.g.isolated().is_empty());
    }
}
