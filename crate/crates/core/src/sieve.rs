//! Tensor-product sieve bases over latent positions and the associated
//! residual-maker `M_Φ = I - Φ(ΦᵀΦ)⁻Φᵀ`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::orthonormal_range;

/// Relative singular-value cutoff for the generalized inverse.
pub const PINV_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisFamily {
    Polynomial,
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SieveSpec {
    pub family: BasisFamily,
    /// Overrides `family` coordinate by coordinate when present.
    pub coordinate_families: Option<Vec<BasisFamily>>,
    /// Maximum degree in any single coordinate.
    pub degree: usize,
    /// Maximum total degree of a multi-index.
    pub total_degree_cap: usize,
    pub include_constant: bool,
}

impl Default for SieveSpec {
    fn default() -> Self {
        SieveSpec {
            family: BasisFamily::Polynomial,
            coordinate_families: None,
            degree: 2,
            total_degree_cap: 2,
            include_constant: true,
        }
    }
}

impl SieveSpec {
    /// The basis with no columns; residualizing against it is the identity.
    pub fn empty() -> Self {
        SieveSpec {
            degree: 0,
            total_degree_cap: 0,
            include_constant: false,
            ..Default::default()
        }
    }

    /// Centering only.
    pub fn constant_only() -> Self {
        SieveSpec {
            degree: 0,
            total_degree_cap: 0,
            include_constant: true,
            ..Default::default()
        }
    }

    pub fn polynomial(cap: usize) -> Self {
        SieveSpec {
            degree: cap,
            total_degree_cap: cap,
            ..Default::default()
        }
    }

    fn family_of(&self, coord: usize) -> BasisFamily {
        self.coordinate_families
            .as_ref()
            .and_then(|f| f.get(coord).copied())
            .unwrap_or(self.family)
    }

    /// Multi-indices admitted for `d` coordinates, ordered by total degree and
    /// then with earlier coordinates carrying more weight.
    pub fn multi_indices(&self, d: usize) -> Vec<Vec<usize>> {
        let per = self.degree.min(self.total_degree_cap);
        let mut out = Vec::new();
        for total in 0..=self.total_degree_cap {
            if total == 0 && !self.include_constant {
                continue;
            }
            let mut current = vec![0; d];
            push_compositions(&mut out, &mut current, 0, total, per);
        }
        out
    }

    pub fn basis_size(&self, d: usize) -> usize {
        self.multi_indices(d).len()
    }

    fn validate(&self, d: usize) -> Result<()> {
        if let Some(f) = &self.coordinate_families {
            if f.len() != d {
                return Err(Error::Dimension(format!(
                    "sieve lists {} coordinate families but latent input has {} columns",
                    f.len(),
                    d
                )));
            }
        }
        Ok(())
    }
}

fn push_compositions(out: &mut Vec<Vec<usize>>, current: &mut Vec<usize>, pos: usize, remaining: usize, per: usize) {
    let d = current.len();
    if d == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == d - 1 {
        if remaining <= per {
            current[pos] = remaining;
            out.push(current.clone());
            current[pos] = 0;
        }
        return;
    }
    for k in (0..=remaining.min(per)).rev() {
        current[pos] = k;
        push_compositions(out, current, pos + 1, remaining - k, per);
    }
    current[pos] = 0;
}

/// Evaluated sieve design `Φ_N` together with an orthonormal basis for its
/// range, used for residualization.
#[derive(Debug, Clone)]
pub struct SieveDesign {
    pub phi: DMatrix<f64>,
    pub spec: SieveSpec,
    pub rank: usize,
    pub u_source: DMatrix<f64>,
    pub multi_indices: Vec<Vec<usize>>,
    range: DMatrix<f64>,
}

impl SieveDesign {
    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    pub fn basis_count(&self) -> usize {
        self.phi.ncols()
    }

    /// Orthonormal columns spanning `Φ`.
    pub fn range(&self) -> &DMatrix<f64> {
        &self.range
    }

    /// Builds a design directly from a given matrix `Φ`.
    pub fn from_phi(phi: DMatrix<f64>) -> Result<Self> {
        let n = phi.nrows();
        if phi.ncols() > 0 && phi.ncols() >= n {
            return Err(Error::InvalidArgument(format!(
                "sieve basis too rich: {} columns for {} observations",
                phi.ncols(),
                n
            )));
        }
        let (range, rank) = orthonormal_range(&phi, PINV_RTOL)?;
        Ok(SieveDesign {
            multi_indices: Vec::new(),
            spec: SieveSpec::empty(),
            u_source: DMatrix::zeros(n, 0),
            phi,
            rank,
            range,
        })
    }

    /// `M_Φ · w`.
    pub fn residualize(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        residualize(w, self)
    }
}

pub fn build_basis(u: &DMatrix<f64>, spec: &SieveSpec) -> Result<SieveDesign> {
    let (n, d) = u.shape();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite latent position".into()));
    }
    spec.validate(d)?;
    let indices = spec.multi_indices(d);
    let l = indices.len();
    if l > 0 && l >= n {
        return Err(Error::InvalidArgument(format!(
            "sieve basis too rich: {l} basis functions for {n} observations"
        )));
    }

    let mut coords: Vec<DMatrix<f64>> = Vec::with_capacity(d);
    for c in 0..d {
        let col = u.column(c);
        let max_k = indices.iter().map(|k| k[c]).max().unwrap_or(0);
        let mut table = DMatrix::from_element(n, max_k + 1, 1.0);
        match spec.family_of(c) {
            BasisFamily::Polynomial => {
                for k in 1..=max_k {
                    for i in 0..n {
                        table[(i, k)] = table[(i, k - 1)] * col[i];
                    }
                }
            }
            BasisFamily::Cosine => {
                let lo = col.min();
                let hi = col.max();
                let span = hi - lo;
                for i in 0..n {
                    let s = if span > 0.0 { (col[i] - lo) / span } else { 0.0 };
                    for k in 1..=max_k {
                        table[(i, k)] = (k as f64 * std::f64::consts::PI * s).cos();
                    }
                }
            }
        }
        coords.push(table);
    }

    let mut phi = DMatrix::from_element(n, l, 1.0);
    for (j, k) in indices.iter().enumerate() {
        for (c, &kc) in k.iter().enumerate() {
            if kc > 0 {
                for i in 0..n {
                    phi[(i, j)] *= coords[c][(i, kc)];
                }
            }
        }
    }

    let (range, rank) = orthonormal_range(&phi, PINV_RTOL)?;
    Ok(SieveDesign {
        phi,
        spec: spec.clone(),
        rank,
        u_source: u.clone(),
        multi_indices: indices,
        range,
    })
}

/// Applies `M_Φ` to every column of `w`.
pub fn residualize(w: &DMatrix<f64>, design: &SieveDesign) -> Result<DMatrix<f64>> {
    if w.nrows() != design.n() {
        return Err(Error::Dimension(format!(
            "cannot residualize {} rows against a sieve design with {} rows",
            w.nrows(),
            design.n()
        )));
    }
    if design.rank == 0 {
        return Ok(w.clone());
    }
    let q = &design.range;
    let coef = q.transpose() * w;
    Ok(w - q * coef)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, StandardNormal};

    fn random(n: usize, k: usize, label: &str) -> DMatrix<f64> {
        let mut rng = stream(5, label, 0);
        DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn polynomial_cap_two_in_two_dims() {
        let spec = SieveSpec::polynomial(2);
        assert_eq!(
            spec.multi_indices(2),
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        let u = DMatrix::from_row_slice(7, 2, &[0.1, 2.0, 0.3, -1.0, 0.5, 0.4, 0.7, 0.2, 0.9, 1.5, -0.2, 0.8, 1.1, -0.6]);
        let design = build_basis(&u, &spec).unwrap();
        assert_eq!(design.basis_count(), 6);
        for i in 0..7 {
            let (a, b) = (u[(i, 0)], u[(i, 1)]);
            let expect = [1.0, a, b, a * a, a * b, b * b];
            for j in 0..6 {
                assert!((design.phi[(i, j)] - expect[j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn polynomial_cap_one_in_one_dim() {
        let u = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 5.0]);
        let design = build_basis(&u, &SieveSpec::polynomial(1)).unwrap();
        assert_eq!(design.phi.column(0).as_slice(), &[1.0; 4]);
        assert_eq!(design.phi.column(1).as_slice(), u.as_slice());
    }

    #[test]
    fn cosine_cap_one_rescales() {
        let u = DMatrix::from_row_slice(4, 2, &[0.0, 10.0, 1.0, 20.0, 2.0, 15.0, 1.0, 12.5]);
        let spec = SieveSpec {
            family: BasisFamily::Cosine,
            degree: 1,
            total_degree_cap: 1,
            ..Default::default()
        };
        let design = build_basis(&u, &spec).unwrap();
        assert_eq!(design.basis_count(), 3);
        let pi = std::f64::consts::PI;
        let s1 = [0.0, 0.5, 1.0, 0.5];
        let s2 = [0.0, 1.0, 0.5, 0.25];
        for i in 0..4 {
            assert_eq!(design.phi[(i, 0)], 1.0);
            assert!((design.phi[(i, 1)] - (pi * s1[i]).cos()).abs() < 1e-14);
            assert!((design.phi[(i, 2)] - (pi * s2[i]).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn per_coordinate_degree_limit() {
        let spec = SieveSpec {
            degree: 1,
            total_degree_cap: 2,
            ..Default::default()
        };
        assert_eq!(spec.multi_indices(2), vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn too_rich_basis_is_rejected() {
        let u = random(5, 2, "rich");
        let err = build_basis(&u, &SieveSpec::polynomial(2)).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn empty_basis_is_identity() {
        let u = random(10, 2, "u");
        let design = build_basis(&u, &SieveSpec::empty()).unwrap();
        assert_eq!(design.basis_count(), 0);
        let w = random(10, 3, "w");
        assert_eq!(residualize(&w, &design).unwrap(), w);
    }

    #[test]
    fn span_is_annihilated() {
        let u = random(40, 2, "u");
        let design = build_basis(&u, &SieveSpec::default()).unwrap();
        let coef = random(6, 3, "c");
        let w = &design.phi * coef;
        let r = residualize(&w, &design).unwrap();
        assert!(r.norm() <= 1e-8 * w.norm());
        assert!(residualize(&design.phi, &design).unwrap().norm() < 1e-8 * design.phi.norm());
    }

    #[test]
    fn orthogonal_input_is_unchanged() {
        let u = random(30, 2, "u");
        let design = build_basis(&u, &SieveSpec::default()).unwrap();
        let w = random(30, 2, "w");
        let orth = &w - design.range() * (design.range().transpose() * &w);
        let r = residualize(&orth, &design).unwrap();
        assert!((r - &orth).amax() < 1e-10);
    }

    #[test]
    fn duplicated_column_matches_deduplicated() {
        let u = random(30, 2, "u");
        let design = build_basis(&u, &SieveSpec::default()).unwrap();
        let mut dup = design.phi.clone().insert_column(6, 0.0);
        dup.set_column(6, &design.phi.column(2));
        let dup_design = SieveDesign::from_phi(dup).unwrap();
        assert_eq!(dup_design.rank, 6);
        let w = random(30, 4, "w");
        let a = residualize(&w, &design).unwrap();
        let b = residualize(&w, &dup_design).unwrap();
        assert!((a - b).amax() < 1e-10);
    }

    #[test]
    fn dimension_mismatch() {
        let design = build_basis(&random(10, 1, "u"), &SieveSpec::polynomial(1)).unwrap();
        assert!(matches!(residualize(&random(9, 1, "w"), &design), Err(Error::Dimension(_))));
    }
}
