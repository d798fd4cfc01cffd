//! Binary-outcome prediction: lasso and unpenalized logistic regression,
//! cross-fitting with out-of-sample AUC, pseudo-R² importance, and
//! marginal-effect curves.

mod cv;
mod logistic;
mod metrics;

pub use cv::{cross_fit, lambda_grid, select_lambda, stratified_folds, CvOptions, CvResult, LambdaChoice, LambdaRule};
pub use logistic::{deviance, fit_penalized, neg_loglik, null_deviance, LogisticFit, SEPARATION_NORM};
pub use metrics::{
    auc, marginal_effect_curve, roc_points, variable_importance, ImportanceReport, MarginalCurve, RocPoint,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PredDataset {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    /// Embedding profile or log-ratio block, penalized separately.
    pub t: Option<DMatrix<f64>>,
    pub names: Vec<String>,
}

impl PredDataset {
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, t: Option<DMatrix<f64>>) -> Result<Self> {
        let n = y.len();
        if x.nrows() != n || t.as_ref().is_some_and(|t| t.nrows() != n) {
            return Err(Error::Dimension(format!(
                "{} labels, {} covariate rows{}",
                n,
                x.nrows(),
                t.as_ref().map(|t| format!(", {} profile rows", t.nrows())).unwrap_or_default()
            )));
        }
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
        }
        let mut names: Vec<String> = (0..x.ncols()).map(|j| format!("x{}", j + 1)).collect();
        if let Some(t) = &t {
            names.extend((0..t.ncols()).map(|j| format!("t{}", j + 1)));
        }
        Ok(PredDataset { y, x, t, names })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.width() {
            return Err(Error::Dimension(format!(
                "{} names for {} features",
                names.len(),
                self.width()
            )));
        }
        self.names = names;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn x_width(&self) -> usize {
        self.x.ncols()
    }

    pub fn width(&self) -> usize {
        self.x.ncols() + self.t.as_ref().map_or(0, |t| t.ncols())
    }

    /// `[x | t]`.
    pub fn design(&self) -> DMatrix<f64> {
        match &self.t {
            None => self.x.clone(),
            Some(t) => crate::linalg::hstack(&[&self.x, t]),
        }
    }

    /// Per-column penalties: `lambda1` on `x`, `lambda2` on `t`.
    pub fn penalties(&self, lambda1: f64, lambda2: f64) -> Vec<f64> {
        let mut p = vec![lambda1; self.x_width()];
        p.resize(self.width(), lambda2);
        p
    }

    pub fn subset(&self, rows: &[usize]) -> PredDataset {
        PredDataset {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            x: self.x.select_rows(rows),
            t: self.t.as_ref().map(|t| t.select_rows(rows)),
            names: self.names.clone(),
        }
    }
}

/// Penalized logistic regression with `lambda1` on the covariate block and
/// `lambda2` on the profile block.
pub fn fit_logistic(data: &PredDataset, lambda1: f64, lambda2: f64) -> Result<LogisticFit> {
    fit_penalized(&data.design(), &data.y, &data.penalties(lambda1, lambda2), None)
}
