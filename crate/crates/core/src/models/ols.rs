use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Columns whose equilibrated condition number exceeds `1 / RANK_TOL` are
/// treated as collinear.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) struct OlsFit {
    pub coef: Vec<f64>,
    pub ssr: f64,
}

/// Least squares via SVD of the column-equilibrated design.
pub(crate) fn ols(design: &DMatrix<f64>, y: &DVector<f64>, names: &[&str]) -> Result<OlsFit> {
    let (n, k) = design.shape();
    if n <= k {
        return Err(Error::estimation(format!(
            "{n} observations for {k} regressors"
        )));
    }
    let mut scaled = design.clone();
    let mut scales = vec![1.0; k];
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::estimation(format!(
                "regressor {} is identically zero or non-finite",
                names.get(j).copied().unwrap_or("?")
            )));
        }
        col /= norm;
        scales[j] = norm;
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= RANK_TOL * smax {
        return Err(Error::estimation(format!(
            "collinear design: regressors {} are linearly dependent (condition {:.3e})",
            names.join(", "),
            smax / smin
        )));
    }
    let beta_scaled = svd
        .solve(y, 0.0)
        .map_err(|e| Error::estimation(format!("least-squares solve failed: {e}")))?;
    let coef: Vec<f64> = beta_scaled.iter().zip(&scales).map(|(b, s)| b / s).collect();
    let fitted = design * DVector::from_column_slice(&coef);
    let ssr = (y - fitted).norm_squared();
    Ok(OlsFit { coef, ssr })
}
