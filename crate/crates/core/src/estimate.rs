//! Conditional least-squares estimation of pure VAR(p) models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cholesky_lower, cholesky_solve, solve, Matrix};
use crate::varma::{ModelSpec, Series};

/// A VAR(p) fitted by least squares together with its residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedVar {
    pub order: usize,
    pub phi_hat: Vec<Matrix>,
    /// Zero vector when fitted without intercept.
    pub intercept: Vec<f64>,
    pub with_intercept: bool,
    /// Residuals for t = p+1..n, so `n_eff = n − p` rows.
    pub residuals: Series,
    /// `n_eff⁻¹ Σ â_t â_tᵀ`.
    pub gamma0_hat: Matrix,
}

impl FittedVar {
    pub fn k(&self) -> usize {
        self.residuals.k()
    }

    pub fn n_eff(&self) -> usize {
        self.residuals.n()
    }

    /// The fitted model as a simulable [`ModelSpec`]. The mean is
    /// `(I − ΣΦ̂ᵢ)⁻¹ ĉ`; a singular `I − ΣΦ̂ᵢ` means the fit has a unit root.
    pub fn to_model_spec(&self) -> Result<ModelSpec> {
        let k = self.k();
        let mean = if self.with_intercept && self.intercept.iter().any(|&c| c != 0.0) {
            let mut lhs = Matrix::identity(k);
            for phi in &self.phi_hat {
                lhs = &lhs - phi;
            }
            solve(&lhs, &Matrix::column(&self.intercept))
                .map_err(|_| Error::InvalidModel("fitted VAR has a unit root".into()))?
                .as_slice()
                .to_vec()
        } else {
            vec![0.0; k]
        };
        Ok(ModelSpec::new(self.phi_hat.clone(), vec![], self.gamma0_hat.clone()).with_mean(mean))
    }

    /// Fitted values `Ẑ_t = Z_t − â_t` for t = p+1..n.
    pub fn fitted_values(&self, series: &Series) -> Matrix {
        let p = self.order;
        Matrix::from_fn(self.n_eff(), self.k(), |t, j| {
            series.values()[(t + p, j)] - self.residuals.values()[(t, j)]
        })
    }
}

/// Regressor matrix with rows `(1, Z_{t−1}ᵀ, …, Z_{t−p}ᵀ)` for t = p+1..n;
/// the leading column is omitted without intercept.
pub fn design_matrix(series: &Series, p: usize, with_intercept: bool) -> Matrix {
    let (n, k) = (series.n(), series.k());
    let offset = usize::from(with_intercept);
    let mut x = Matrix::zeros(n - p, offset + k * p);
    for t in p..n {
        let row = x.row_mut(t - p);
        if with_intercept {
            row[0] = 1.0;
        }
        for lag in 1..=p {
            let start = offset + (lag - 1) * k;
            row[start..start + k].copy_from_slice(series.row(t - lag));
        }
    }
    x
}

/// Residual covariance `n⁻¹ Σ â_t â_tᵀ`.
pub fn residual_covariance(residuals: &Matrix) -> Matrix {
    let n = residuals.rows() as f64;
    let mut g = residuals.t_matmul(residuals).scale(1.0 / n);
    let k = g.rows();
    for i in 0..k {
        for j in 0..i {
            let v = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Fits `Z_t = c + Φ₁Z_{t−1} + … + Φ_pZ_{t−p} + a_t` by least squares over
/// t = p+1..n, solving the normal equations with a Cholesky factorization.
pub fn fit_var(series: &Series, p: usize, with_intercept: bool) -> Result<FittedVar> {
    let (n, k) = (series.n(), series.k());
    if n <= p || n - p <= k * p + 1 {
        return Err(Error::TooShort(format!(
            "need n − p > k·p + 1, got n = {n}, p = {p}, k = {k}"
        )));
    }
    let y = Matrix::from_fn(n - p, k, |t, j| series.values()[(t + p, j)]);
    let ncoef = usize::from(with_intercept) + k * p;
    if ncoef == 0 {
        let residuals = Series::new(y)?;
        let gamma0_hat = residual_covariance(residuals.values());
        return Ok(FittedVar {
            order: 0,
            phi_hat: vec![],
            intercept: vec![0.0; k],
            with_intercept,
            residuals,
            gamma0_hat,
        });
    }

    let x = design_matrix(series, p, with_intercept);
    let gram = x.t_matmul(&x);
    let chol = cholesky_lower(&gram).map_err(|_| Error::SingularDesign)?;
    // rows of `beta` follow the regressor columns, one column per equation
    let beta = cholesky_solve(&chol, &x.t_matmul(&y));
    let resid = &y - &x.matmul(&beta);

    let offset = usize::from(with_intercept);
    let intercept = if with_intercept {
        beta.row(0).to_vec()
    } else {
        vec![0.0; k]
    };
    let phi_hat = (0..p)
        .map(|lag| Matrix::from_fn(k, k, |i, j| beta[(offset + lag * k + j, i)]))
        .collect();
    let gamma0_hat = residual_covariance(&resid);
    Ok(FittedVar {
        order: p,
        phi_hat,
        intercept,
        with_intercept,
        residuals: Series::new(resid)?,
        gamma0_hat,
    })
}
