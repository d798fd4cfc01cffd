use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::serde_vector;

/// Coefficient norm beyond which an unpenalized fit is declared divergent.
pub const SEPARATION_NORM: f64 = 1e3;
const REL_TOL: f64 = 1e-9;
const MAX_ITER: usize = 10_000;
const MONOTONE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticFit {
    pub intercept: f64,
    #[serde(with = "serde_vector")]
    pub coef: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Penalized negative log-likelihood at the solution.
    pub objective: f64,
    /// Objective after every accepted iteration.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl LogisticFit {
    pub fn linear_predictor(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let mut eta = x * &self.coef;
        eta.add_scalar_mut(self.intercept);
        eta
    }

    pub fn predict_proba(&self, x: &DMatrix<f64>) -> DVector<f64> {
        self.linear_predictor(x).map(sigmoid)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.coef.len()).filter(|&j| self.coef[j] != 0.0).collect()
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Negative Bernoulli log-likelihood `Σ log(1 + e^η) − yη`.
pub fn neg_loglik(y: &[f64], eta: &DVector<f64>) -> f64 {
    y.iter().zip(eta.iter()).map(|(&yi, &e)| softplus(e) - yi * e).sum()
}

/// Binomial deviance `2 · neg_loglik`.
pub fn deviance(y: &[f64], eta: &DVector<f64>) -> f64 {
    2.0 * neg_loglik(y, eta)
}

/// Deviance of the intercept-only model.
pub fn null_deviance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let p = y.iter().sum::<f64>() / n;
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -2.0 * n * (p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

fn check_inputs(x: &DMatrix<f64>, y: &[f64], penalty: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("{} labels for {} rows", y.len(), x.nrows())));
    }
    if penalty.len() != x.ncols() {
        return Err(Error::Dimension(format!(
            "{} penalty weights for {} columns",
            penalty.len(),
            x.ncols()
        )));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    if penalty.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidArgument("penalties must be finite and nonnegative".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite feature value".into()));
    }
    Ok(())
}

struct Standardized {
    z: DMatrix<f64>,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

fn standardize(x: &DMatrix<f64>) -> Standardized {
    let (n, p) = x.shape();
    let mut z = x.clone();
    let mut mean = vec![0.0; p];
    let mut scale = vec![1.0; p];
    for j in 0..p {
        let col = x.column(j);
        let mu = col.mean();
        let sd = (col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n as f64).sqrt();
        mean[j] = mu;
        scale[j] = if sd > 0.0 { sd } else { 1.0 };
        for i in 0..n {
            z[(i, j)] = (x[(i, j)] - mu) / scale[j];
        }
    }
    Standardized { z, mean, scale }
}

fn objective(s: &Standardized, y: &[f64], b0: f64, b: &DVector<f64>, pen: &[f64]) -> f64 {
    let mut eta = &s.z * b;
    eta.add_scalar_mut(b0);
    neg_loglik(y, &eta) + b.iter().zip(pen).map(|(v, l)| l * v.abs()).sum::<f64>()
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Minimizes `−ℓ(β₀, β) + Σ_j penalty_j |β_j|`; the intercept is never
/// penalized. An optional warm start is given on the original scale.
pub fn fit_penalized(
    x: &DMatrix<f64>,
    y: &[f64],
    penalty: &[f64],
    warm: Option<&LogisticFit>,
) -> Result<LogisticFit> {
    check_inputs(x, y, penalty)?;
    if y.is_empty() {
        return Err(Error::DegenerateInput("no observations".into()));
    }
    let s = standardize(x);
    let p = x.ncols();
    let pen: Vec<f64> = (0..p).map(|j| penalty[j] / s.scale[j]).collect();

    let mean_y = y.iter().sum::<f64>() / y.len() as f64;
    let (mut b0, mut b) = match warm {
        Some(w) => {
            let b = DVector::from_fn(p, |j, _| w.coef[j] * s.scale[j]);
            let shift: f64 = (0..p).map(|j| w.coef[j] * s.mean[j]).sum();
            (w.intercept + shift, b)
        }
        None => (logit_clamped(mean_y), DVector::zeros(p)),
    };

    let unpenalized = pen.iter().all(|&l| l == 0.0);
    let out = if unpenalized {
        newton(&s, y, &mut b0, &mut b)?
    } else {
        proximal(&s, y, &pen, &mut b0, &mut b)
    };

    let coef = DVector::from_fn(p, |j, _| b[j] / s.scale[j]);
    let intercept = b0 - (0..p).map(|j| coef[j] * s.mean[j]).sum::<f64>();
    if unpenalized && (coef.norm() > SEPARATION_NORM || intercept.abs() > SEPARATION_NORM || separates(x, y, intercept, &coef)) {
        return Err(Error::Separation { norm: coef.norm().max(intercept.abs()) });
    }
    Ok(LogisticFit {
        intercept,
        coef,
        iterations: out.0,
        converged: out.1,
        objective: *out.2.last().unwrap_or(&f64::NAN),
        trace: out.2,
    })
}

/// Whether the linear predictor classifies every observation strictly
/// correctly, in which case the unpenalized maximum likelihood estimate
/// does not exist.
fn separates(x: &DMatrix<f64>, y: &[f64], b0: f64, b: &DVector<f64>) -> bool {
    if b.iter().all(|&v| v == 0.0) {
        return false;
    }
    let mut eta = x * b;
    eta.add_scalar_mut(b0);
    eta.iter().zip(y).all(|(&e, &yi)| if yi == 1.0 { e > 0.0 } else { e < 0.0 })
}

fn logit_clamped(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

fn proximal(
    s: &Standardized,
    y: &[f64],
    pen: &[f64],
    b0: &mut f64,
    b: &mut DVector<f64>,
) -> (usize, bool, Vec<f64>) {
    let (n, p) = s.z.shape();
    // Curvature bound of the logistic loss on standardized columns.
    let lipschitz = 0.25 * (n as f64) * (1.0 + p as f64);
    let mut step = 1.0 / lipschitz;
    let mut f = objective(s, y, *b0, b, pen);
    let mut trace = vec![f];
    let mut converged = false;
    let mut it = 0;
    while it < MAX_ITER {
        it += 1;
        let mut eta = &s.z * &*b;
        eta.add_scalar_mut(*b0);
        let r = DVector::from_fn(n, |i, _| sigmoid(eta[i]) - y[i]);
        let g0 = r.sum();
        let g = s.z.transpose() * &r;
        let smooth = neg_loglik(y, &eta);

        step *= 2.0;
        let mut accepted = None;
        for _ in 0..60 {
            let c0 = *b0 - step * g0;
            let c = DVector::from_fn(p, |j, _| soft(b[j] - step * g[j], step * pen[j]));
            let mut ceta = &s.z * &c;
            ceta.add_scalar_mut(c0);
            let csmooth = neg_loglik(y, &ceta);
            let d0 = c0 - *b0;
            let d = &c - &*b;
            let quad = smooth + g0 * d0 + g.dot(&d) + (d0 * d0 + d.norm_squared()) / (2.0 * step);
            if csmooth <= quad + MONOTONE_SLACK * smooth.abs().max(1.0) {
                let cf = csmooth + c.iter().zip(pen).map(|(v, l)| l * v.abs()).sum::<f64>();
                accepted = Some((c0, c, cf));
                break;
            }
            step *= 0.5;
        }
        let Some((c0, c, cf)) = accepted else { break };
        let rel = (f - cf).abs() / f.abs().max(1e-12);
        *b0 = c0;
        *b = c;
        f = cf;
        trace.push(f);
        if rel < REL_TOL {
            converged = true;
            break;
        }
    }
    (it, converged, trace)
}

fn newton(s: &Standardized, y: &[f64], b0: &mut f64, b: &mut DVector<f64>) -> Result<(usize, bool, Vec<f64>)> {
    let (n, p) = s.z.shape();
    let mut design = DMatrix::from_element(n, p + 1, 1.0);
    design.columns_mut(1, p).copy_from(&s.z);
    let mut theta = DVector::from_fn(p + 1, |j, _| if j == 0 { *b0 } else { b[j - 1] });
    let none = vec![0.0; p];
    let mut f = objective(s, y, theta[0], &theta.rows(1, p).into_owned(), &none);
    let mut trace = vec![f];
    let mut converged = false;
    let mut it = 0;
    while it < 200 {
        it += 1;
        let eta = &design * &theta;
        let mu = eta.map(sigmoid);
        let grad = design.transpose() * (&mu - DVector::from_column_slice(y));
        let mut h = DMatrix::zeros(p + 1, p + 1);
        for i in 0..n {
            let w = mu[i] * (1.0 - mu[i]);
            if w > 0.0 {
                let row = design.row(i).transpose();
                h.ger(w, &row, &row, 1.0);
            }
        }
        for j in 0..=p {
            h[(j, j)] += 1e-12 * n as f64;
        }
        let dir = match h.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => h.lu().solve(&grad).unwrap_or_else(|| grad.clone()),
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let cand = &theta - &dir * t;
            let cf = objective(s, y, cand[0], &cand.rows(1, p).into_owned(), &none);
            if cf <= f + MONOTONE_SLACK * f.abs().max(1.0) {
                let rel = (f - cf).abs() / f.abs().max(1e-12);
                theta = cand;
                f = cf;
                trace.push(f);
                accepted = true;
                if rel < 1e-12 || grad.amax() < 1e-10 {
                    converged = true;
                }
                break;
            }
            t *= 0.5;
        }
        if theta.norm() > 1e6 || !accepted {
            break;
        }
        if converged {
            break;
        }
    }
    *b0 = theta[0];
    *b = theta.rows(1, p).into_owned();
    Ok((it, converged, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn synthetic(n: usize, beta: &[f64], b0: f64, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = stream(seed, "logistic", 0);
        let p = beta.len();
        let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let y = (0..n)
            .map(|i| {
                let eta = b0 + (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>();
                if rng.random::<f64>() < sigmoid(eta) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        (x, y)
    }

    #[test]
    fn huge_penalty_zeroes_everything() {
        let (x, y) = synthetic(300, &[1.0, -2.0, 0.5], 0.3, 1);
        let lam = 1e6 * 300.0;
        let fit = fit_penalized(&x, &y, &[lam; 3], None).unwrap();
        assert!(fit.coef.iter().all(|&c| c == 0.0));
        let mean = y.iter().sum::<f64>() / 300.0;
        assert!((fit.intercept - (mean / (1.0 - mean)).ln()).abs() < 1e-6);
    }

    #[test]
    fn unpenalized_matches_grid_search() {
        let (x, y) = synthetic(400, &[0.8], 0.0, 2);
        let fit = fit_penalized(&x, &y, &[0.0], None).unwrap();
        // Profile out the intercept on a fine grid for each slope.
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let mut b1 = 0.0;
        while b1 <= 2.0 {
            let mut b0 = -1.0;
            while b0 <= 1.0 {
                let eta = DVector::from_fn(400, |i, _| b0 + b1 * x[(i, 0)]);
                let f = neg_loglik(&y, &eta);
                if f < best.0 {
                    best = (f, b0, b1);
                }
                b0 += 0.002;
            }
            b1 += 0.0005;
        }
        assert!((fit.coef[0] - best.2).abs() < 1e-3, "{} vs {}", fit.coef[0], best.2);
        assert!((fit.intercept - best.1).abs() < 2e-3);
    }

    #[test]
    fn duplicated_columns_give_same_objective() {
        let (x, y) = synthetic(300, &[1.5, -0.5], 0.0, 3);
        let mut dup = DMatrix::zeros(300, 3);
        dup.columns_mut(0, 2).copy_from(&x);
        dup.set_column(2, &x.column(0));
        let lam = 5.0;
        let a = fit_penalized(&x, &y, &[lam; 2], None).unwrap();
        let b = fit_penalized(&dup, &y, &[lam; 3], None).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-6 * a.objective, "{} {}", a.objective, b.objective);
        // Splitting the weight between the copies leaves the objective alone.
        let mut split = b.clone();
        let total = b.coef[0] + b.coef[2];
        split.coef[0] = 0.3 * total;
        split.coef[2] = 0.7 * total;
        let obj = |f: &LogisticFit| neg_loglik(&y, &f.linear_predictor(&dup)) + lam * f.coef.iter().map(|c| c.abs()).sum::<f64>();
        assert!((obj(&split) - obj(&b)).abs() < 1e-8 * obj(&b));
    }

    #[test]
    fn objective_is_monotone() {
        let (x, y) = synthetic(500, &[1.0, 0.0, -1.0, 0.5, 0.0], 0.2, 4);
        let fit = fit_penalized(&x, &y, &[3.0; 5], None).unwrap();
        assert!(fit.converged);
        for w in fit.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10 * w[0].abs());
        }
    }

    #[test]
    fn separable_data_is_detected() {
        let x = DMatrix::from_column_slice(6, 1, &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        assert!(matches!(fit_penalized(&x, &y, &[0.0], None), Err(Error::Separation { .. })));
        assert!(fit_penalized(&x, &y, &[0.5], None).is_ok());
    }

    #[test]
    fn null_deviance_matches_intercept_fit() {
        let (x, y) = synthetic(200, &[0.0], -0.5, 5);
        let fit = fit_penalized(&x, &y, &[1e9], None).unwrap();
        let dev = deviance(&y, &fit.linear_predictor(&x));
        assert!((dev - null_deviance(&y)).abs() < 1e-6);
    }
}
