//! Principal component analysis via the eigendecomposition of the sample
//! covariance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// One orthonormal component per row, ordered by explained variance.
    pub components: DMatrix<f64>,
    /// Fraction of total variance per component; all zero for constant data.
    pub explained_variance_ratio: Vec<f64>,
}

/// Fits `components` principal axes to the rows of `data`.
pub fn fit_pca(data: &DMatrix<f64>, components: usize) -> Result<PcaModel> {
    let (n, d) = data.shape();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("PCA needs at least 2 samples, got {n}")));
    }
    if components == 0 || components > n.min(d) {
        return Err(Error::InvalidArgument(format!(
            "component count {components} outside 1..={}",
            n.min(d)
        )));
    }
    let mean = data.row_mean().transpose();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n - 1) as f64;
    let total: f64 = cov.trace();
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut basis = DMatrix::zeros(components, d);
    let mut ratio = Vec::with_capacity(components);
    for (row, &k) in order.iter().take(components).enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        // Sign convention: largest-magnitude entry positive.
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        basis.set_row(row, &v.transpose());
        let lambda = eig.eigenvalues[k].max(0.0);
        ratio.push(if total > 0.0 { lambda / total } else { 0.0 });
    }
    // Round-off can break monotonicity among (near-)equal eigenvalues.
    for k in 1..ratio.len() {
        ratio[k] = ratio[k].min(ratio[k - 1]);
    }
    Ok(PcaModel {
        mean,
        components: basis,
        explained_variance_ratio: ratio,
    })
}

impl PcaModel {
    /// Scores of each row of `data`, one column per component.
    pub fn transform(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        let mut centered = data.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.mean.transpose();
        }
        centered * self.components.transpose()
    }

    pub fn inverse_transform(&self, scores: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = scores * &self.components;
        for mut row in out.row_iter_mut() {
            row += self.mean.transpose();
        }
        out
    }
}
