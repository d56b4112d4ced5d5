//! Large-sample theory for the portmanteau statistics.
//!
//! Under the null, `D_m` is asymptotically a weighted sum of independent χ²₁
//! variables whose weights are the eigenvalues of `(I − Q)M`. Only the first
//! two moments are needed for the `a·χ²_b` approximation, so this module
//! builds `G`, `H`, `X`, `W`, `M` and `Q` explicitly and reduces them to two
//! trace sums; no eigensolver is involved.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{residual_transform, statistics_for_lags, ResidualTransform, Statistic};
use crate::error::{Error, Result};
use crate::estimate::{fit_var, FittedVar};
use crate::matrix::{cholesky_lower, cholesky_solve, kron, spd_inverse, Matrix};
use crate::montecarlo::validate_lags;
use crate::varma::{inverse_ma_weights, ma_weights, ModelSpec, Series};

/// Design matrices of the asymptotic theory for a model tested at lag `m`.
#[derive(Debug, Clone)]
pub struct DesignSet {
    pub k: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    /// `k²m × k²p`, block `(i, j)` is `G_{i−j}`.
    pub g: Matrix,
    /// `k²m × k²q`, block `(i, j)` is `H_{i−j}`.
    pub h: Matrix,
    /// `[G | −H]`.
    pub x: Matrix,
    /// `I_m ⊗ Γ₀ ⊗ Γ₀`.
    pub w: Matrix,
    /// `diag(m, m−1, …, 1) ⊗ I_{k²}`.
    pub m_mat: Matrix,
    /// `X (XᵀW⁻¹X)⁻¹ XᵀW⁻¹`.
    pub q_mat: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaTraces {
    /// `Σλᵢ = tr((I − Q)M)`.
    pub sum: f64,
    /// `Σλᵢ² = tr((I − Q)M(I − Q)M)`.
    pub sum_sq: f64,
}

/// Scale and degrees of freedom of the `a·χ²_b` approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbParams {
    pub a: f64,
    pub b: f64,
}

/// Where `a` and `b` come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbSource {
    /// `a = (2m+1)/3`, `b = 3k²m(m+1)/(2(2m+1)) − k²(p+q)`.
    Closed {
        k: usize,
        m: usize,
        p: usize,
        q: usize,
    },
    /// `a = Σλ²/Σλ`, `b = (Σλ)²/Σλ²`.
    Traces(LambdaTraces),
}

/// Block lower-triangular Toeplitz matrix with `cols` block columns built
/// from `blocks[r]` on the r-th block subdiagonal.
fn block_lower_toeplitz(blocks: &[Matrix], rows: usize, cols: usize) -> Matrix {
    let bs = blocks.first().map_or(0, Matrix::rows);
    let mut out = Matrix::zeros(rows * bs, cols * bs);
    for i in 0..rows {
        for j in 0..cols.min(i + 1) {
            out.set_block(i * bs, j * bs, &blocks[i - j]);
        }
    }
    out
}

/// Builds `G`, `H`, `X`, `W`, `M` and `Q` for `spec` at lag `m`.
/// `spec.gamma0` plays the role of `Γ₀` (pass `Γ̂₀` for a fitted model).
pub fn build_design(spec: &ModelSpec, m: usize) -> Result<DesignSet> {
    let (k, p, q) = (spec.k, spec.p(), spec.q());
    if m <= p + q {
        return Err(Error::DegenerateDf(format!(
            "lag m = {m} must exceed p + q = {}",
            p + q
        )));
    }
    let k2 = k * k;
    let gamma0 = &spec.gamma0;
    let psi = ma_weights(spec, m);
    let pi = inverse_ma_weights(spec, m);

    let g_blocks: Vec<Matrix> = (0..m)
        .map(|r| {
            let mut acc = Matrix::zeros(k2, k2);
            for i in 0..=r {
                acc = &acc + &kron(&gamma0.matmul(&psi[i].transpose()), &pi[r - i]);
            }
            acc
        })
        .collect();
    let h_blocks: Vec<Matrix> = (0..m).map(|r| kron(gamma0, &pi[r])).collect();

    let g = block_lower_toeplitz(&g_blocks, m, p);
    let h = block_lower_toeplitz(&h_blocks, m, q);
    let mut x = Matrix::zeros(k2 * m, k2 * (p + q));
    if p > 0 {
        x.set_block(0, 0, &g);
    }
    if q > 0 {
        x.set_block(0, k2 * p, &(-&h));
    }

    let gg = kron(gamma0, gamma0);
    let gg_inv = spd_inverse(&gg)?;
    let w = kron(&Matrix::identity(m), &gg);
    let w_inv = kron(&Matrix::identity(m), &gg_inv);

    let mut m_mat = Matrix::zeros(k2 * m, k2 * m);
    for blk in 0..m {
        for i in 0..k2 {
            m_mat[(blk * k2 + i, blk * k2 + i)] = (m - blk) as f64;
        }
    }

    let q_mat = if p + q == 0 {
        Matrix::zeros(k2 * m, k2 * m)
    } else {
        let xt_winv = x.t_matmul(&w_inv);
        let info = xt_winv.matmul(&x);
        let chol = cholesky_lower(&info).map_err(|_| Error::SingularDesign)?;
        x.matmul(&cholesky_solve(&chol, &xt_winv))
    };

    Ok(DesignSet {
        k,
        m,
        p,
        q,
        g,
        h,
        x,
        w,
        m_mat,
        q_mat,
    })
}

/// Design for a fitted VAR, using `Φ̂` and `Γ̂₀`.
pub fn build_design_for_fit(fit: &FittedVar, m: usize) -> Result<DesignSet> {
    let spec = ModelSpec::new(fit.phi_hat.clone(), vec![], fit.gamma0_hat.clone());
    build_design(&spec, m)
}

/// The two eigenvalue trace sums of `(I − Q)M`.
pub fn lambda_traces(design: &DesignSet) -> LambdaTraces {
    let n = design.m_mat.rows();
    let i_minus_q = &Matrix::identity(n) - &design.q_mat;
    let b = i_minus_q.matmul(&design.m_mat);
    let sum = b.trace();
    // tr(B·B) = Σ_ij B_ij B_ji
    let mut sum_sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            sum_sq += b[(i, j)] * b[(j, i)];
        }
    }
    LambdaTraces { sum, sum_sq }
}

pub fn ab_params(source: AbSource) -> Result<AbParams> {
    let (a, b) = match source {
        AbSource::Closed { k, m, p, q } => {
            let (k2, mf) = ((k * k) as f64, m as f64);
            let a = (2.0 * mf + 1.0) / 3.0;
            let b = 3.0 * k2 * mf * (mf + 1.0) / (2.0 * (2.0 * mf + 1.0)) - k2 * (p + q) as f64;
            (a, b)
        }
        AbSource::Traces(t) => {
            if !(t.sum > 0.0 && t.sum_sq > 0.0) {
                return Err(Error::DegenerateDf(
                    "eigenvalue traces are not positive".into(),
                ));
            }
            (t.sum_sq / t.sum, t.sum * t.sum / t.sum_sq)
        }
    };
    if b.is_nan() || b <= 0.0 {
        return Err(Error::DegenerateDf(format!(
            "b = {b} is not positive; increase the lag"
        )));
    }
    Ok(AbParams { a, b })
}

/// Upper tail `P(χ²_df > x)` for real `df > 0`, as the regularized upper
/// incomplete gamma function `Q(df/2, x/2)`.
pub fn chisq_sf(x: f64, df: f64) -> f64 {
    assert!(df > 0.0, "chi-square degrees of freedom must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    statrs::function::gamma::gamma_ur(0.5 * df, 0.5 * x).clamp(0.0, 1.0)
}

/// p-value of `D_m` under the `a·χ²_b` approximation; `+∞` maps to 0.
pub fn approx_pvalue(stat: f64, ab: AbParams) -> f64 {
    if stat == f64::INFINITY {
        return 0.0;
    }
    chisq_sf(stat / ab.a, ab.b)
}

/// Degrees of freedom `k²(m − p − q)` of the asymptotic χ² for `Q_m`/`Q̃_m`.
pub fn q_degrees_of_freedom(k: usize, m: usize, p: usize, q: usize) -> Result<usize> {
    if m <= p + q {
        return Err(Error::DegenerateDf(format!(
            "lag m = {m} must exceed p + q = {}",
            p + q
        )));
    }
    Ok(k * k * (m - p - q))
}

pub fn q_pvalue_asymptotic(stat: f64, k: usize, m: usize, p: usize, q: usize) -> Result<f64> {
    let df = q_degrees_of_freedom(k, m, p, q)?;
    Ok(chisq_sf(stat, df as f64))
}

/// `a·χ²_b` (for `D_m`) or `χ²_{k²(m−p)}` (for `Q_m`, `Q̃_m`) result at one lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chi2LagResult {
    pub lag: usize,
    #[serde(with = "crate::serde_inf")]
    pub observed: f64,
    pub observed_non_pd: bool,
    /// Scale of the approximating distribution; 1 for the Q statistics.
    pub a: f64,
    /// Degrees of freedom.
    pub b: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chi2Report {
    pub statistic: Statistic,
    pub transform: ResidualTransform,
    pub with_intercept: bool,
    pub n: usize,
    pub n_eff: usize,
    pub order: usize,
    pub lags: Vec<Chi2LagResult>,
}

/// Asymptotic test of a VAR(`order`) fit. `D_m` uses the closed-form `a` and
/// `b` with `p = order`, `q = 0`; every lag must exceed `order`.
pub fn chi2_test(
    series: &Series,
    order: usize,
    statistic: Statistic,
    lags: &[usize],
    transform: ResidualTransform,
    with_intercept: bool,
) -> Result<Chi2Report> {
    validate_lags(lags)?;
    let fit = fit_var(series, order, with_intercept)?;
    let k = fit.k();
    let resid = residual_transform(&fit.residuals, transform);
    let values = statistics_for_lags(&resid, lags, &[statistic])?.remove(0);
    let lags = lags
        .iter()
        .zip(values)
        .map(|(&m, v)| {
            let (a, b, p_value) = match statistic {
                Statistic::Gv => {
                    let ab = ab_params(AbSource::Closed {
                        k,
                        m,
                        p: order,
                        q: 0,
                    })?;
                    (ab.a, ab.b, approx_pvalue(v.value, ab))
                }
                Statistic::QClassic | Statistic::QModified => {
                    let df = q_degrees_of_freedom(k, m, order, 0)? as f64;
                    (1.0, df, chisq_sf(v.value, df))
                }
            };
            Ok(Chi2LagResult {
                lag: m,
                observed: v.value,
                observed_non_pd: v.non_pd,
                a,
                b,
                p_value,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Chi2Report {
        statistic,
        transform,
        with_intercept,
        n: series.n(),
        n_eff: fit.n_eff(),
        order,
        lags,
    })
}
