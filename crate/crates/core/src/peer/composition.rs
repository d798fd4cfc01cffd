use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Probabilities below this are raised to it before renormalizing.
pub const SMOOTHING_FLOOR: f64 = 1e-6;

/// Rows of class probabilities on the simplex, strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    q: DMatrix<f64>,
    baseline: usize,
}

impl Composition {
    /// Floors every entry at [`SMOOTHING_FLOOR`] and rescales rows to sum to
    /// one. Returns the composition and the indices of rows whose raw sum
    /// differed from one by more than `1e-9`.
    pub fn smoothed(raw: &DMatrix<f64>, baseline: usize) -> Result<(Self, Vec<usize>)> {
        let (n, c) = raw.shape();
        if c < 2 {
            return Err(Error::Dimension("a composition needs at least two classes".into()));
        }
        if baseline >= c {
            return Err(Error::InvalidArgument(format!(
                "baseline class {baseline} out of range for {c} classes"
            )));
        }
        let mut q = raw.clone();
        let mut off = Vec::new();
        for i in 0..n {
            let row = raw.row(i);
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::DegenerateInput(format!(
                    "row {i} has a negative or non-finite probability"
                )));
            }
            if (row.sum() - 1.0).abs() > 1e-9 {
                off.push(i);
            }
            let mut r = q.row_mut(i);
            r.apply(|v| *v = v.max(SMOOTHING_FLOOR));
            let s = r.sum();
            r.unscale_mut(s);
        }
        Ok((Composition { q, baseline }, off))
    }

    pub fn probabilities(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn baseline(&self) -> usize {
        self.baseline
    }

    pub fn classes(&self) -> usize {
        self.q.ncols()
    }
}

/// Additive log-ratio transform against the baseline class. The output has
/// the non-baseline classes in their original order.
pub fn alr(comp: &Composition) -> DMatrix<f64> {
    let (n, c) = comp.q.shape();
    let b = comp.baseline;
    DMatrix::from_fn(n, c - 1, |i, j| {
        let col = if j < b { j } else { j + 1 };
        (comp.q[(i, col)] / comp.q[(i, b)]).ln()
    })
}

pub fn alr_inverse(ratios: &DMatrix<f64>, baseline: usize) -> Result<Composition> {
    let (n, k) = ratios.shape();
    let c = k + 1;
    if baseline >= c {
        return Err(Error::InvalidArgument(format!(
            "baseline class {baseline} out of range for {c} classes"
        )));
    }
    let mut q = DMatrix::zeros(n, c);
    for i in 0..n {
        let shift = ratios.row(i).iter().fold(0.0f64, |a, &v| a.max(v));
        let mut total = 0.0;
        for col in 0..c {
            let e = match col.cmp(&baseline) {
                std::cmp::Ordering::Less => (ratios[(i, col)] - shift).exp(),
                std::cmp::Ordering::Equal => (-shift).exp(),
                std::cmp::Ordering::Greater => (ratios[(i, col - 1)] - shift).exp(),
            };
            q[(i, col)] = e;
            total += e;
        }
        q.row_mut(i).unscale_mut(total);
    }
    Ok(Composition { q, baseline })
}
