use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cv::CvResult;
use super::logistic::{deviance, fit_penalized, null_deviance, sigmoid, LogisticFit};
use super::PredDataset;
use crate::error::{Error, Result};

/// Mann–Whitney estimate of `P(s⁺ > s⁻) + ½ P(s⁺ = s⁻)` via mid-ranks.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::DegenerateInput("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] == 1.0 {
                rank_sum += mid;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve from the highest threshold down, one point per distinct score
/// plus the origin.
pub fn roc_points(scores: &[f64], labels: &[f64]) -> Result<Vec<RocPoint>> {
    auc(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l == 1.0).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut pts = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1.0 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        pts.push(RocPoint {
            threshold: s,
            fpr: fp / n_neg,
            tpr: tp / n_pos,
        });
    }
    Ok(pts)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub names: Vec<String>,
    /// Full-model McFadden pseudo-R² per fold.
    pub full_r2: Vec<f64>,
    /// `delta[v][f]`: full minus reduced pseudo-R² for variable `v` in fold
    /// `f`; `NaN` where the reduced refit failed.
    pub delta: Vec<Vec<f64>>,
    pub failures: Vec<(usize, usize, String)>,
}

fn pseudo_r2(fit: &LogisticFit, x: &nalgebra::DMatrix<f64>, y: &[f64]) -> f64 {
    let null = null_deviance(y);
    if null == 0.0 {
        return 0.0;
    }
    1.0 - deviance(y, &fit.linear_predictor(x)) / null
}

/// Drop-one-variable change in McFadden pseudo-R² for unpenalized fits, on
/// each fold's training sample.
pub fn variable_importance(data: &PredDataset, cv: &CvResult) -> Result<ImportanceReport> {
    let x = data.design();
    let p = x.ncols();
    let k = cv.fits.len();
    let mut full_r2 = Vec::with_capacity(k);
    let mut delta = vec![vec![f64::NAN; k]; p];
    let mut failures = Vec::new();
    for f in 0..k {
        let train: Vec<usize> = (0..data.n()).filter(|&i| cv.folds[i] != f).collect();
        let xt = x.select_rows(&train);
        let yt: Vec<f64> = train.iter().map(|&i| data.y[i]).collect();
        let full = fit_penalized(&xt, &yt, &vec![0.0; p], None)?;
        let r_full = pseudo_r2(&full, &xt, &yt);
        full_r2.push(r_full);
        for v in 0..p {
            let cols: Vec<usize> = (0..p).filter(|&j| j != v).collect();
            let xr = xt.select_columns(&cols);
            match fit_penalized(&xr, &yt, &vec![0.0; p - 1], None) {
                Ok(red) => delta[v][f] = r_full - pseudo_r2(&red, &xr, &yt),
                Err(e) => failures.push((v, f, e.to_string())),
            }
        }
    }
    Ok(ImportanceReport {
        names: data.names.clone(),
        full_r2,
        delta,
        failures,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalCurve {
    pub variable: String,
    pub points: Vec<(f64, f64)>,
    pub warning: Option<String>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Predicted probability as `target` sweeps `grid`, with every other column
/// held at its median or at the value given in `reference`.
pub fn marginal_effect_curve(
    fit: &LogisticFit,
    data: &PredDataset,
    target: usize,
    grid: &[f64],
    reference: &BTreeMap<usize, f64>,
) -> Result<MarginalCurve> {
    let x = data.design();
    let p = x.ncols();
    if target >= p || fit.coef.len() != p {
        return Err(Error::Dimension(format!(
            "target column {target} with {p} features and {} coefficients",
            fit.coef.len()
        )));
    }
    let mut base: Vec<f64> = (0..p)
        .map(|j| match reference.get(&j) {
            Some(&v) => v,
            None => median(&mut x.column(j).iter().copied().collect::<Vec<_>>()),
        })
        .collect();
    let col = x.column(target);
    let (lo, hi) = (col.min(), col.max());
    let outside = grid.iter().filter(|&&g| g < lo || g > hi).count();
    let warning = (outside > 0).then(|| {
        format!("{outside} grid values lie outside the observed range [{lo}, {hi}]")
    });
    let points = grid
        .iter()
        .map(|&g| {
            base[target] = g;
            let eta = fit.intercept + (0..p).map(|j| fit.coef[j] * base[j]).sum::<f64>();
            (g, sigmoid(eta))
        })
        .collect();
    Ok(MarginalCurve {
        variable: data.names.get(target).cloned().unwrap_or_default(),
        points,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn hand_auc() {
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 0.75);
        assert_eq!(auc(&[0.0, 0.0, 1.0, 1.0], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 6], &[0.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap(), 0.5);
        assert!(auc(&[0.1, 0.2], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn auc_is_rank_invariant() {
        let s = [0.1, 0.7, 0.3, 0.3, 0.9, 0.2, 0.5];
        let l = [0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let t: Vec<f64> = s.iter().map(|v: &f64| (5.0 * v).exp() - 3.0).collect();
        assert_eq!(auc(&s, &l).unwrap(), auc(&t, &l).unwrap());
    }

    #[test]
    fn roc_ends_at_one_and_matches_auc() {
        let s = [0.1, 0.4, 0.35, 0.8, 0.4];
        let l = [0.0, 0.0, 1.0, 1.0, 1.0];
        let pts = roc_points(&s, &l).unwrap();
        let last = pts.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        let area: f64 = pts.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum();
        assert!((area - auc(&s, &l).unwrap()).abs() < 1e-12);
    }

    fn dataset() -> PredDataset {
        let x = DMatrix::from_fn(9, 2, |i, j| (i as f64) * (j as f64 + 1.0) - 3.0);
        PredDataset::new(vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0], x, None).unwrap()
    }

    fn model(b0: f64, b: &[f64]) -> LogisticFit {
        LogisticFit {
            intercept: b0,
            coef: DVector::from_column_slice(b),
            iterations: 0,
            converged: true,
            objective: 0.0,
            trace: Vec::new(),
        }
    }

    #[test]
    fn hand_marginal_value() {
        let data = dataset();
        let mut refs = BTreeMap::new();
        refs.insert(1, 0.0);
        let curve = marginal_effect_curve(&model(-1.0, &[0.5, 2.0]), &data, 0, &[0.0], &refs).unwrap();
        assert!((curve.points[0].1 - 0.2689414213699951).abs() < 1e-12);
    }

    #[test]
    fn curve_shapes_and_range_warning() {
        let data = dataset();
        let grid: Vec<f64> = (0..5).map(|k| k as f64 - 2.0).collect();
        let flat = marginal_effect_curve(&model(0.2, &[0.0, 1.0]), &data, 0, &grid, &BTreeMap::new()).unwrap();
        assert!(flat.points.windows(2).all(|w| w[0].1 == w[1].1));
        assert!(flat.warning.is_none());
        let dec = marginal_effect_curve(&model(0.2, &[-0.7, 1.0]), &data, 0, &grid, &BTreeMap::new()).unwrap();
        assert!(dec.points.windows(2).all(|w| w[1].1 < w[0].1));
        let wide = marginal_effect_curve(&model(0.2, &[-0.7, 1.0]), &data, 0, &[100.0], &BTreeMap::new()).unwrap();
        assert!(wide.warning.is_some());
        assert_eq!(wide.points.len(), 1);
    }
}
