use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logistic::{deviance, fit_penalized, LogisticFit};
use super::metrics::auc;
use super::PredDataset;
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LambdaRule {
    Fixed { lambda1: f64, lambda2: f64 },
    Unpenalized,
    /// Grid value with the smallest cross-validated deviance.
    CvMin,
    /// Largest grid value within one standard error of the minimum.
    Cv1se,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvOptions {
    pub rule: LambdaRule,
    pub n_lambda: usize,
    /// Smallest grid value as a fraction of the largest.
    pub min_ratio: f64,
    /// `lambda2 = t_penalty_ratio · lambda1`.
    pub t_penalty_ratio: f64,
    /// Folds used when choosing lambda on the full sample.
    pub inner_folds: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            rule: LambdaRule::Cv1se,
            n_lambda: 30,
            min_ratio: 1e-3,
            t_penalty_ratio: 1.0,
            inner_folds: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaChoice {
    pub lambda1: f64,
    pub lambda2: f64,
    pub grid: Vec<f64>,
    pub cv_deviance: Vec<f64>,
    pub cv_se: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvResult {
    pub folds: Vec<usize>,
    pub lambda: LambdaChoice,
    pub fits: Vec<LogisticFit>,
    /// Out-of-sample predicted probability for every observation.
    pub scores: Vec<f64>,
    pub auc: f64,
    /// Indices of nonzero coefficients per fold.
    pub support: Vec<Vec<usize>>,
}

/// Assigns each observation to one of `k` folds, dealing each class out in
/// shuffled round-robin order.
pub fn stratified_folds(y: &[f64], k: usize, seed: u64, attempt: u64) -> Vec<usize> {
    let mut rng = stream(seed, "predict/folds", attempt);
    let mut folds = vec![0; y.len()];
    let mut offset = 0;
    for class in [1.0, 0.0] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for (r, &i) in idx.iter().enumerate() {
            folds[i] = (r + offset) % k;
        }
        offset += idx.len();
    }
    folds
}

fn both_classes(y: &[f64], rows: &[usize]) -> bool {
    let pos = rows.iter().filter(|&&i| y[i] == 1.0).count();
    pos > 0 && pos < rows.len()
}

fn split(folds: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    let train = (0..folds.len()).filter(|&i| folds[i] != f).collect();
    let test = (0..folds.len()).filter(|&i| folds[i] == f).collect();
    (train, test)
}

fn valid_folds(y: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    for attempt in 0..2 {
        let folds = stratified_folds(y, k, seed, attempt);
        if (0..k).all(|f| {
            let (train, test) = split(&folds, f);
            both_classes(y, &train) && both_classes(y, &test)
        }) {
            return Ok(folds);
        }
    }
    Err(Error::InvalidArgument(format!(
        "cannot form {k} folds that each contain both classes"
    )))
}

/// Log-spaced grid from the smallest penalty that zeroes every coefficient
/// down to `min_ratio` times it.
pub fn lambda_grid(data: &PredDataset, opts: &CvOptions) -> Vec<f64> {
    let x = data.design();
    let n = data.n() as f64;
    let ybar = data.y.iter().sum::<f64>() / n;
    let factors = data.penalties(1.0, opts.t_penalty_ratio);
    let mut lmax: f64 = 0.0;
    for j in 0..x.ncols() {
        let col = x.column(j);
        let mu = col.mean();
        let g: f64 = col.iter().zip(&data.y).map(|(v, y)| (v - mu) * (y - ybar)).sum();
        if factors[j] > 0.0 {
            lmax = lmax.max(g.abs() / factors[j]);
        }
    }
    let k = opts.n_lambda.max(1);
    if lmax == 0.0 {
        return vec![0.0];
    }
    (0..k)
        .map(|i| {
            let frac = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
            lmax * opts.min_ratio.powf(frac)
        })
        .collect()
}

/// Chooses lambda once on the full sample according to `opts.rule`.
pub fn select_lambda(data: &PredDataset, opts: &CvOptions, seed: u64) -> Result<LambdaChoice> {
    let fixed = |l1: f64, l2: f64| LambdaChoice {
        lambda1: l1,
        lambda2: l2,
        grid: Vec::new(),
        cv_deviance: Vec::new(),
        cv_se: Vec::new(),
    };
    match opts.rule {
        LambdaRule::Fixed { lambda1, lambda2 } => return Ok(fixed(lambda1, lambda2)),
        LambdaRule::Unpenalized => return Ok(fixed(0.0, 0.0)),
        LambdaRule::CvMin | LambdaRule::Cv1se => {}
    }
    let grid = lambda_grid(data, opts);
    let k = opts.inner_folds.max(2);
    let folds = valid_folds(&data.y, k, seed ^ 0x5eed)?;
    let x = data.design();
    let per_fold: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|f| -> Result<Vec<f64>> {
            let (train, test) = split(&folds, f);
            let xt = x.select_rows(&train);
            let yt: Vec<f64> = train.iter().map(|&i| data.y[i]).collect();
            let xv = x.select_rows(&test);
            let yv: Vec<f64> = test.iter().map(|&i| data.y[i]).collect();
            let mut warm: Option<LogisticFit> = None;
            let mut devs = Vec::with_capacity(grid.len());
            for &lam in &grid {
                let fit = fit_penalized(&xt, &yt, &data.penalties(lam, lam * opts.t_penalty_ratio), warm.as_ref())?;
                devs.push(deviance(&yv, &fit.linear_predictor(&xv)) / yv.len() as f64);
                warm = Some(fit);
            }
            Ok(devs)
        })
        .collect::<Result<_>>()?;

    let kf = k as f64;
    let mut mean = vec![0.0; grid.len()];
    let mut se = vec![0.0; grid.len()];
    for g in 0..grid.len() {
        let vals: Vec<f64> = per_fold.iter().map(|d| d[g]).collect();
        let mu = vals.iter().sum::<f64>() / kf;
        let var = vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (kf - 1.0);
        mean[g] = mu;
        se[g] = (var / kf).sqrt();
    }
    let mut best = 0;
    for g in 1..grid.len() {
        if mean[g] < mean[best] {
            best = g;
        }
    }
    let chosen = match opts.rule {
        LambdaRule::Cv1se => (0..=best).find(|&g| mean[g] <= mean[best] + se[best]).unwrap_or(best),
        _ => best,
    };
    Ok(LambdaChoice {
        lambda1: grid[chosen],
        lambda2: grid[chosen] * opts.t_penalty_ratio,
        grid,
        cv_deviance: mean,
        cv_se: se,
    })
}

/// `k`-fold cross-fitting with a penalty chosen once on the full data and
/// then frozen. Every observation is scored by the model that did not see it.
pub fn cross_fit(data: &PredDataset, k: usize, opts: &CvOptions, seed: u64) -> Result<CvResult> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    let lambda = select_lambda(data, opts, seed)?;
    let folds = valid_folds(&data.y, k, seed)?;
    let x = data.design();
    let penalties = data.penalties(lambda.lambda1, lambda.lambda2);
    let fitted: Vec<(LogisticFit, Vec<usize>, Vec<f64>)> = (0..k)
        .into_par_iter()
        .map(|f| -> Result<_> {
            let (train, test) = split(&folds, f);
            let yt: Vec<f64> = train.iter().map(|&i| data.y[i]).collect();
            let fit = fit_penalized(&x.select_rows(&train), &yt, &penalties, None)?;
            let scores = fit.predict_proba(&x.select_rows(&test)).iter().copied().collect();
            Ok((fit, test, scores))
        })
        .collect::<Result<_>>()?;

    let mut scores = vec![f64::NAN; data.n()];
    let mut fits = Vec::with_capacity(k);
    let mut support = Vec::with_capacity(k);
    for (fit, test, s) in fitted {
        for (i, v) in test.into_iter().zip(s) {
            scores[i] = v;
        }
        support.push(fit.support());
        fits.push(fit);
    }
    let auc = auc(&scores, &data.y)?;
    Ok(CvResult {
        folds,
        lambda,
        fits,
        scores,
        auc,
        support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::logistic::sigmoid;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn folds_are_stratified() {
        let y: Vec<f64> = (0..103).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect();
        let folds = stratified_folds(&y, 5, 1, 0);
        for f in 0..5 {
            let pos = (0..103).filter(|&i| folds[i] == f && y[i] == 1.0).count();
            assert!((5..=6).contains(&pos));
        }
    }

    #[test]
    fn too_few_positives_for_the_folds() {
        let mut y = vec![0.0; 20];
        y[0] = 1.0;
        y[1] = 1.0;
        let data = PredDataset::new(y, DMatrix::from_fn(20, 1, |i, _| i as f64), None).unwrap();
        let opts = CvOptions {
            rule: LambdaRule::Unpenalized,
            ..Default::default()
        };
        assert!(cross_fit(&data, 5, &opts, 0).is_err());
    }

    #[test]
    fn every_observation_scored_once_and_folds_do_not_leak() {
        let mut rng = stream(8, "cv", 0);
        let n = 200;
        let x = DMatrix::from_fn(n, 3, |_, _| StandardNormal.sample(&mut rng));
        let y: Vec<f64> = (0..n)
            .map(|i| if rng.random::<f64>() < sigmoid(x[(i, 0)]) { 1.0 } else { 0.0 })
            .collect();
        let data = PredDataset::new(y, x, None).unwrap();
        let opts = CvOptions {
            rule: LambdaRule::Fixed { lambda1: 2.0, lambda2: 2.0 },
            ..Default::default()
        };
        let res = cross_fit(&data, 4, &opts, 3).unwrap();
        assert!(res.scores.iter().all(|s| s.is_finite()));
        // Removing fold 0's rows from training only affects scores of folds
        // whose training set included them, i.e. all folds other than 0.
        let keep: Vec<usize> = (0..n).filter(|&i| res.folds[i] != 0).collect();
        let (train1, test1) = split(&res.folds, 1);
        let train_wo: Vec<usize> = train1.iter().copied().filter(|i| keep.contains(i)).collect();
        let xd = data.design();
        let refit = fit_penalized(
            &xd.select_rows(&train_wo),
            &train_wo.iter().map(|&i| data.y[i]).collect::<Vec<_>>(),
            &data.penalties(2.0, 2.0),
            None,
        )
        .unwrap();
        let s_new = refit.predict_proba(&xd.select_rows(&test1));
        let s_old: Vec<f64> = test1.iter().map(|&i| res.scores[i]).collect();
        assert!(s_new.iter().zip(&s_old).any(|(a, b)| (a - b).abs() > 1e-9));
        let (train0, test0) = split(&res.folds, 0);
        let again = fit_penalized(
            &xd.select_rows(&train0),
            &train0.iter().map(|&i| data.y[i]).collect::<Vec<_>>(),
            &data.penalties(2.0, 2.0),
            None,
        )
        .unwrap();
        let s0 = again.predict_proba(&xd.select_rows(&test0));
        assert!(test0.iter().zip(s0.iter()).all(|(&i, &s)| s == res.scores[i]));
    }

    #[test]
    fn grid_top_zeroes_all_coefficients() {
        let mut rng = stream(9, "grid", 0);
        let x = DMatrix::from_fn(150, 4, |_, _| StandardNormal.sample(&mut rng));
        let y: Vec<f64> = (0..150).map(|i| if x[(i, 1)] + 0.3 > 0.0 { 1.0 } else { 0.0 }).collect();
        let data = PredDataset::new(y, x, None).unwrap();
        let grid = lambda_grid(&data, &CvOptions::default());
        let top = fit_logistic_at(&data, grid[0] * 1.0001);
        assert!(top.coef.iter().all(|&c| c == 0.0));
        let below = fit_logistic_at(&data, grid[0] * 0.95);
        assert!(below.coef.iter().any(|&c| c != 0.0));
    }

    fn fit_logistic_at(data: &PredDataset, lam: f64) -> LogisticFit {
        crate::predict::fit_logistic(data, lam, lam).unwrap()
    }
}
