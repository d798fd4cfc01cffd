//! Simulation designs for endogenous networks with latent-confounded
//! outcomes, and the Monte Carlo harness built on them.

mod mc;

pub use mc::{mse_table, run_monte_carlo, Estimator, McReport, MseRow, RepDraw, RepFailure};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{row_normalize, Graph};
use crate::io::serde_matrix;
use crate::linalg::spectral_radius;
use crate::network::{lsm_simulate, rdpg_simulate, EdgeCovariates, LsmParams};
use crate::peer::MsarData;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkModel {
    Rdpg,
    LsmCov,
}

/// Form of the latent outcome shift `h^Y(U) = features(U) Θ_Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HSpec {
    /// `[u1, u2]`
    Linear,
    /// `[u1, u2, u1², u2²]`
    Quadratic,
    /// `[u1, u2, u1², u2², u1·u2]`
    QuadraticInteraction,
}

impl HSpec {
    pub fn feature_count(self, d: usize) -> usize {
        match self {
            HSpec::Linear => d,
            HSpec::Quadratic => 2 * d,
            HSpec::QuadraticInteraction => 2 * d + d * (d - 1) / 2,
        }
    }

    pub fn features(self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, d) = u.shape();
        let mut cols: Vec<Vec<f64>> = (0..d).map(|c| u.column(c).iter().copied().collect()).collect();
        if self != HSpec::Linear {
            for c in 0..d {
                cols.push(u.column(c).iter().map(|v| v * v).collect());
            }
        }
        if self == HSpec::QuadraticInteraction {
            for a in 0..d {
                for b in a + 1..d {
                    cols.push((0..n).map(|i| u[(i, a)] * u[(i, b)]).collect());
                }
            }
        }
        DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
    }
}

/// A complete simulation design. Build one with [`ScenarioSpec::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub network_model: NetworkModel,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub latent_dim: usize,
    #[serde(with = "serde_matrix")]
    pub d_true: DMatrix<f64>,
    pub h_spec: HSpec,
    #[serde(with = "serde_matrix")]
    pub theta_y: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub b1: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub b2: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub v_err: DMatrix<f64>,
    pub confound_strength: f64,
    /// Mean of every covariate column.
    pub x_mean: f64,
    /// Edge-probability multiplier for the dot-product model at `n = 100`.
    pub sparsity: f64,
    /// The multiplier scales as `(100 / n)^sparsity_exponent`.
    pub sparsity_exponent: f64,
    /// Logistic offset for the latent-space model at `n = 100`, shifted by
    /// `-sparsity_exponent · ln(n / 100)`.
    pub lsm_offset: f64,
    pub lsm_beta: Vec<f64>,
    pub lsm_q_sd: f64,
    pub lsm_v_sd: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Partially specified scenario as written in a configuration file. Missing
/// fields take documented defaults that depend on the network model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: Option<String>,
    pub network_model: Option<NetworkModel>,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub d_true: Option<Vec<Vec<f64>>>,
    pub h_spec: Option<HSpec>,
    pub theta_y: Option<Vec<Vec<f64>>>,
    pub b1: Option<Vec<Vec<f64>>>,
    pub b2: Option<Vec<Vec<f64>>>,
    pub v_err: Option<Vec<Vec<f64>>>,
    pub confound_strength: Option<f64>,
    pub x_mean: Option<f64>,
    pub sparsity: Option<f64>,
    pub sparsity_exponent: Option<f64>,
    pub lsm_offset: Option<f64>,
    pub lsm_beta: Option<Vec<f64>>,
    pub lsm_q_sd: Option<f64>,
    pub lsm_v_sd: Option<f64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Scenario(format!("{what} has ragged rows")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn alternating(rows: usize, cols: usize, a: f64, b: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| if (i + j) % 2 == 0 { a } else { b })
}

impl ScenarioSpec {
    pub fn resolve(&self) -> Result<Scenario> {
        let model = self.network_model.unwrap_or(NetworkModel::Rdpg);
        let (default_d, default_exponent) = match model {
            NetworkModel::Rdpg => (vec![vec![0.3, 0.2], vec![0.25, 0.6]], 1.0),
            NetworkModel::LsmCov => (vec![vec![0.8, 0.2], vec![0.3, 0.6]], 1.0),
        };
        let d_true = rows_to_matrix(self.d_true.as_ref().unwrap_or(&default_d), "d_true")?;
        let m = d_true.nrows();
        let p = self.p.unwrap_or(5);
        let latent_dim = 2;
        let h_spec = self.h_spec.unwrap_or(HSpec::Linear);
        let feats = h_spec.feature_count(latent_dim);
        let get = |field: &Option<Vec<Vec<f64>>>, default: DMatrix<f64>, what: &str| -> Result<DMatrix<f64>> {
            match field {
                Some(rows) => rows_to_matrix(rows, what),
                None => Ok(default),
            }
        };
        let v_default = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.3 });
        let sc = Scenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            network_model: model,
            n: self.n.unwrap_or(500),
            m,
            p,
            latent_dim,
            h_spec,
            theta_y: get(&self.theta_y, alternating(feats, m, 1.0, 0.5), "theta_y")?,
            b1: get(&self.b1, alternating(p, m, 4.0, 2.0), "b1")?,
            b2: get(&self.b2, alternating(p, m, 2.0, 4.0), "b2")?,
            v_err: get(&self.v_err, v_default, "v_err")?,
            d_true,
            confound_strength: self.confound_strength.unwrap_or(1.0),
            x_mean: self.x_mean.unwrap_or(0.0),
            sparsity: self.sparsity.unwrap_or(0.3),
            sparsity_exponent: self.sparsity_exponent.unwrap_or(default_exponent),
            lsm_offset: self.lsm_offset.unwrap_or(-1.0),
            lsm_beta: self.lsm_beta.clone().unwrap_or_else(|| vec![-1.0, 0.5]),
            lsm_q_sd: self.lsm_q_sd.unwrap_or(0.7),
            lsm_v_sd: self.lsm_v_sd.unwrap_or(0.5),
            reps: self.reps.unwrap_or(100),
            seed: self.seed.unwrap_or(1),
        };
        sc.validate()?;
        Ok(sc)
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let (m, p, f) = (self.m, self.p, self.h_spec.feature_count(self.latent_dim));
        let check = |mat: &DMatrix<f64>, r: usize, c: usize, what: &str| -> Result<()> {
            if mat.shape() != (r, c) {
                return Err(Error::Scenario(format!(
                    "{what} must be {r}x{c}, got {}x{}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            Ok(())
        };
        check(&self.d_true, m, m, "d_true")?;
        check(&self.theta_y, f, m, "theta_y")?;
        check(&self.b1, p, m, "b1")?;
        check(&self.b2, p, m, "b2")?;
        check(&self.v_err, m, m, "v_err")?;
        if self.n < 10 {
            return Err(Error::Scenario(format!("n = {} is too small", self.n)));
        }
        let rho = spectral_radius(&self.d_true);
        if !(rho < 1.0) {
            return Err(Error::Scenario(format!(
                "spectral radius of d_true is {rho:.4}; the outcome system needs it below 1"
            )));
        }
        if self.v_err.clone().cholesky().is_none() || (&self.v_err - self.v_err.transpose()).amax() > 1e-12 {
            return Err(Error::Scenario("v_err must be symmetric positive definite".into()));
        }
        if self.network_model == NetworkModel::LsmCov && self.lsm_beta.len() != 2 {
            return Err(Error::Scenario("lsm_cov scenarios use exactly two edge covariates".into()));
        }
        if !(self.sparsity > 0.0) {
            return Err(Error::Scenario("sparsity must be positive".into()));
        }
        Ok(())
    }

    /// Same design at a different network size.
    pub fn with_n(&self, n: usize) -> Scenario {
        Scenario { n, ..self.clone() }
    }

    pub fn rdpg_scale(&self) -> f64 {
        self.sparsity * (100.0 / self.n as f64).powf(self.sparsity_exponent)
    }

    /// Latent positions divided by the population standard deviation of
    /// their sampling law, so outcome features have unit spread. They are
    /// not centered.
    pub fn scaled_latent(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.latent_dim as f64;
        let scale = match self.network_model {
            NetworkModel::Rdpg => 0.7 / (12.0 * d).sqrt(),
            NetworkModel::LsmCov => self.lsm_q_sd,
        };
        u / scale
    }

    pub fn lsm_rho(&self) -> f64 {
        self.lsm_offset - self.sparsity_exponent * (self.n as f64 / 100.0).ln()
    }
}

/// Everything drawn for one replication that the estimator never sees.
#[derive(Debug, Clone)]
pub struct Truth {
    pub u: DMatrix<f64>,
    pub h_y: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub lsm: Option<LsmParams>,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub graph: Graph,
    pub data: MsarData,
    pub edge_covariates: Option<EdgeCovariates>,
    pub truth: Truth,
}

/// Solves `Y - G Y D = rhs` through `(I - Dᵀ⊗G) vec(Y) = vec(rhs)` by dense LU.
pub fn solve_outcomes(g: &DMatrix<f64>, d: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, m) = rhs.shape();
    let mut sys = DMatrix::<f64>::identity(n * m, n * m);
    for a in 0..m {
        for b in 0..m {
            let w = d[(b, a)];
            if w != 0.0 {
                let mut blk = sys.view_mut((a * n, b * n), (n, n));
                blk -= g * w;
            }
        }
    }
    let rhs_v = DMatrix::from_column_slice(n * m, 1, rhs.as_slice());
    let sol = sys
        .lu()
        .solve(&rhs_v)
        .ok_or_else(|| Error::Numerical("outcome system is singular".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite outcome solution".into()));
    }
    Ok(DMatrix::from_column_slice(n, m, sol.as_slice()))
}

/// Truncated series `Σ_k G^k · rhs · D^k`.
pub fn solve_outcomes_series(g: &DMatrix<f64>, d: &DMatrix<f64>, rhs: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let mut term = rhs.clone();
    let mut total = rhs.clone();
    for _ in 0..terms {
        term = g * term * d;
        total += &term;
    }
    total
}

fn draw_rdpg_u(n: usize, d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let scale = (d as f64).sqrt();
    let unif = Uniform::new(0.2, 0.9).expect("valid bounds");
    DMatrix::from_fn(n, d, |_, _| unif.sample(rng) / scale)
}

/// Draws one replication of `scenario`. Identical `(scenario, rep)` pairs
/// always give identical output.
pub fn generate(scenario: &Scenario, rep: u64) -> Result<Generated> {
    scenario.validate()?;
    let (n, m, p, d) = (scenario.n, scenario.m, scenario.p, scenario.latent_dim);
    let master = scenario.seed;

    let (graph, u, cov, lsm) = match scenario.network_model {
        NetworkModel::Rdpg => {
            let u = draw_rdpg_u(n, d, &mut stream(master, "dgp/latent", rep));
            let scale = scenario.rdpg_scale();
            if scale * (u.row_iter().map(|r| r.norm_squared()).fold(0.0, f64::max)) > 1.0 {
                return Err(Error::Scenario(format!(
                    "sparsity multiplier {scale:.3} pushes edge probabilities above one"
                )));
            }
            let draw = rdpg_simulate(&u, scale, &mut stream(master, "dgp/network", rep))?;
            (draw.graph, u, None, None)
        }
        NetworkModel::LsmCov => {
            let mut rng = stream(master, "dgp/latent", rep);
            let qn = Normal::new(0.0, scenario.lsm_q_sd).expect("valid sd");
            let vn = Normal::new(0.0, scenario.lsm_v_sd).expect("valid sd");
            let q = DMatrix::from_fn(n, d, |_, _| qn.sample(&mut rng));
            let v = nalgebra::DVector::from_fn(n, |_, _| vn.sample(&mut rng));
            let mut crng = stream(master, "dgp/edge-covariates", rep);
            let t: Vec<f64> = (0..n).map(|_| crng.random::<f64>()).collect();
            let s: Vec<bool> = (0..n).map(|_| crng.random::<bool>()).collect();
            let x1 = DMatrix::from_fn(n, n, |i, j| (t[i] - t[j]).abs());
            let x2 = DMatrix::from_fn(n, n, |i, j| if s[i] == s[j] { 1.0 } else { 0.0 });
            let cov = EdgeCovariates::new(vec![x1, x2])?;
            let params = LsmParams {
                q: q.clone(),
                v,
                beta: Some(scenario.lsm_beta.clone()),
                rho: scenario.lsm_rho(),
            };
            let graph = lsm_simulate(&params, Some(&cov), &mut stream(master, "dgp/network", rep))?;
            (graph, q, Some(cov), Some(params))
        }
    };

    let mut xrng = stream(master, "dgp/covariates", rep);
    let x = DMatrix::from_fn(n, p, |_, _| scenario.x_mean + { let z: f64 = StandardNormal.sample(&mut xrng); z });

    let features = scenario.h_spec.features(&scenario.scaled_latent(&u));
    let h_y = &features * &scenario.theta_y;
    let chol = scenario.v_err.clone().cholesky().expect("validated positive definite").l();
    let mut erng = stream(master, "dgp/errors", rep);
    let white = DMatrix::from_fn(n, m, |_, _| { let z: f64 = StandardNormal.sample(&mut erng); z });
    let mut e = white * chol.transpose();
    for i in 0..n {
        let shift = scenario.confound_strength * features[(i, 0)];
        e.row_mut(i).add_scalar_mut(shift);
    }

    let g = row_normalize(&graph);
    let row_bound = g.matrix().row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    if spectral_radius(&scenario.d_true) * row_bound >= 1.0 {
        return Err(Error::Scenario("spectral radius of Dᵀ⊗G is not below one".into()));
    }
    let gx = g.apply(&x);
    let rhs = &x * &scenario.b1 + &gx * &scenario.b2 + &h_y + &e;
    let y = solve_outcomes(g.matrix(), &scenario.d_true, &rhs)?;

    Ok(Generated {
        data: MsarData::new(y, x, g)?,
        graph,
        edge_covariates: cov,
        truth: Truth { u, h_y, e, lsm },
    })
}
