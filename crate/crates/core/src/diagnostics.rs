//! Residual autocorrelation diagnostics.
//!
//! Computes biased residual autocovariances `Γ̂_ℓ = n⁻¹ Σ_{t>ℓ} â_t â_{t−ℓ}ᵀ`,
//! the three standardizations of the residual autocorrelation matrices, the
//! classical portmanteau statistic `Q_m` and its modified form `Q̃_m`, the
//! block-Toeplitz correlation matrix `𝕽̂_m` and the generalized-variance
//! statistic `D_m = −n log|𝕽̂_m|` with its per-lag decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    cholesky_lower, cholesky_prefix, cholesky_solve, det, kron, log_det_from_cholesky, spd_inverse,
    Matrix,
};
use crate::varma::Series;

/// Sample autocovariances `Γ̂₀..Γ̂_m` of a residual series.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfSet {
    pub k: usize,
    pub m: usize,
    pub n_eff: usize,
    pub gamma: Vec<Matrix>,
}

impl AcfSet {
    /// `Γ̂_ℓ` for any integer lag, using `Γ̂_{−ℓ} = Γ̂_ℓᵀ`.
    pub fn at(&self, lag: isize) -> Matrix {
        if lag >= 0 {
            self.gamma[lag as usize].clone()
        } else {
            self.gamma[(-lag) as usize].transpose()
        }
    }
}

/// Standardization used for residual autocorrelation matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RacfMode {
    /// `R̂_ℓ = L̂ᵀ Γ̂_ℓ L̂` with `L̂ L̂ᵀ = Γ̂₀⁻¹`.
    Hosking,
    /// `R̂_ℓ = D̂^{-1/2} Γ̂_ℓ D̂^{-1/2}` with `D̂ = diag Γ̂₀`.
    LiMcleod,
    /// `R̂_ℓ = Γ̂_ℓ Γ̂₀⁻¹`.
    Chitturi,
}

impl RacfMode {
    pub const ALL: [RacfMode; 3] = [RacfMode::Hosking, RacfMode::LiMcleod, RacfMode::Chitturi];
}

/// Residual autocorrelation matrices `R̂₀..R̂_m` in one standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct RacfSet {
    pub mode: RacfMode,
    pub r: Vec<Matrix>,
}

impl RacfSet {
    pub fn k(&self) -> usize {
        self.r[0].rows()
    }

    pub fn max_lag(&self) -> usize {
        self.r.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QVariant {
    /// Weights `n`.
    Classic,
    /// Weights `n² / (n − ℓ)`.
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QForm {
    Trace,
    Kron,
}

/// A statistic value; `non_pd` marks the `+∞` sentinel used for `D_m` when
/// `𝕽̂_m` is not numerically positive definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatValue {
    pub value: f64,
    pub non_pd: bool,
}

impl StatValue {
    fn non_pd() -> Self {
        StatValue {
            value: f64::INFINITY,
            non_pd: true,
        }
    }
}

/// Per-lag decomposition of the generalized variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GvDecomposition {
    /// `η̂²_ℓ = 1 − |I − A_ℓ|` for ℓ = 1..m.
    pub eta_sq: Vec<f64>,
    /// `|I − A_ℓ|` for ℓ = 1..m.
    pub step_dets: Vec<f64>,
}

impl GvDecomposition {
    /// `Π(1 − η̂²_ℓ)`, equal to `|𝕽̂_m|`.
    pub fn product(&self) -> f64 {
        self.step_dets.iter().product()
    }
}

/// Portmanteau statistics available to the tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `D_m = −n log|𝕽̂_m|`.
    Gv,
    /// `Q_m`.
    QClassic,
    /// `Q̃_m`.
    QModified,
}

impl Statistic {
    pub fn label(self) -> &'static str {
        match self {
            Statistic::Gv => "D",
            Statistic::QClassic => "Q",
            Statistic::QModified => "Q~",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualTransform {
    Identity,
    Square,
    Abs,
}

/// Biased residual autocovariances up to lag `m`.
pub fn sample_acov(residuals: &Series, m: usize) -> Result<AcfSet> {
    let (n, k) = (residuals.n(), residuals.k());
    if m == 0 {
        return Err(Error::InvalidConfig(
            "maximum lag must be at least 1".into(),
        ));
    }
    if n <= (m + 1) * k {
        return Err(Error::DegenerateResiduals(format!(
            "n = {n} too small for lag {m} with k = {k} (need n > {})",
            (m + 1) * k
        )));
    }
    let a = residuals.values();
    let inv_n = 1.0 / n as f64;
    let mut gamma = Vec::with_capacity(m + 1);
    for lag in 0..=m {
        let mut g = Matrix::zeros(k, k);
        for t in lag..n {
            let cur = a.row(t);
            let prev = a.row(t - lag);
            for i in 0..k {
                let ci = cur[i];
                for j in 0..k {
                    g[(i, j)] += ci * prev[j];
                }
            }
        }
        gamma.push(g.scale(inv_n));
    }
    if cholesky_lower(&gamma[0]).is_err() {
        return Err(Error::DegenerateResiduals(
            "residual covariance is not positive definite".into(),
        ));
    }
    Ok(AcfSet {
        k,
        m,
        n_eff: n,
        gamma,
    })
}

/// Residual autocorrelation matrices in the requested standardization.
pub fn racf(acf: &AcfSet, mode: RacfMode) -> Result<RacfSet> {
    let r = match mode {
        RacfMode::Hosking => {
            let l = cholesky_lower(&spd_inverse(&acf.gamma[0])?)?;
            acf.gamma.iter().map(|g| l.t_matmul(g).matmul(&l)).collect()
        }
        RacfMode::LiMcleod => {
            let d: Vec<f64> = (0..acf.k)
                .map(|i| acf.gamma[0][(i, i)].sqrt().recip())
                .collect();
            acf.gamma
                .iter()
                .map(|g| Matrix::from_fn(acf.k, acf.k, |i, j| g[(i, j)] * d[i] * d[j]))
                .collect()
        }
        RacfMode::Chitturi => {
            let inv = spd_inverse(&acf.gamma[0])?;
            let mut r: Vec<Matrix> = acf.gamma.iter().map(|g| g.matmul(&inv)).collect();
            r[0] = Matrix::identity(acf.k);
            r
        }
    };
    Ok(RacfSet { mode, r })
}

fn lag_weight(n: usize, lag: usize, variant: QVariant) -> f64 {
    let n = n as f64;
    match variant {
        QVariant::Classic => n,
        QVariant::Modified => n * n / (n - lag as f64),
    }
}

/// Lag-ℓ quadratic form of the portmanteau statistic, evaluated in the
/// standardization `mode` by the trace or Kronecker route. Every route
/// equals `tr(Γ̂_ℓᵀ Γ̂₀⁻¹ Γ̂_ℓ Γ̂₀⁻¹)`.
fn lag_term(acf: &AcfSet, set: &RacfSet, lag: usize, form: QForm) -> Result<f64> {
    let r = &set.r[lag];
    let v = match (set.mode, form) {
        (RacfMode::Hosking | RacfMode::LiMcleod, QForm::Trace) => {
            let r0_inv = spd_inverse(&set.r[0])?;
            r.transpose()
                .matmul(&r0_inv)
                .matmul(r)
                .matmul(&r0_inv)
                .trace()
        }
        (RacfMode::Hosking | RacfMode::LiMcleod, QForm::Kron) => {
            // r̂_ℓ = vec(R̂_ℓᵀ) stacks the rows of R̂_ℓ
            let r0_inv = spd_inverse(&set.r[0])?;
            let w = kron(&r0_inv, &r0_inv);
            let rv = r.transpose().vec();
            dot(&rv, &w.mul_vec(&rv))
        }
        (RacfMode::Chitturi, QForm::Trace) => {
            // tr(R̂‡_ℓ R̂‡_{−ℓ}) with R̂‡_{−ℓ} = Γ̂_ℓᵀ Γ̂₀⁻¹
            let inv = spd_inverse(&acf.gamma[0])?;
            let r_neg = acf.gamma[lag].transpose().matmul(&inv);
            r.matmul(&r_neg).trace()
        }
        (RacfMode::Chitturi, QForm::Kron) => {
            // vec(R̂‡_ℓ)ᵀ (Γ̂₀ ⊗ Γ̂₀⁻¹) vec(R̂‡_ℓ)
            let inv = spd_inverse(&acf.gamma[0])?;
            let w = kron(&acf.gamma[0], &inv);
            let rv = r.vec();
            dot(&rv, &w.mul_vec(&rv))
        }
    };
    Ok(v)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Q_m` (classic) or `Q̃_m` (modified) computed by the chosen route.
pub fn portmanteau_q(
    acf: &AcfSet,
    m: usize,
    variant: QVariant,
    form: QForm,
    mode: RacfMode,
) -> Result<f64> {
    if m == 0 || m > acf.m {
        return Err(Error::InvalidConfig(format!(
            "lag {m} outside the computed range 1..={}",
            acf.m
        )));
    }
    let set = racf(acf, mode)?;
    let mut q = 0.0;
    for lag in 1..=m {
        q += lag_weight(acf.n_eff, lag, variant) * lag_term(acf, &set, lag, form)?;
    }
    Ok(q)
}

/// `Q` or `Q̃` at each requested lag from a single pass over `Γ̂₁..Γ̂_max`.
pub fn portmanteau_q_for_lags(acf: &AcfSet, lags: &[usize], variant: QVariant) -> Result<Vec<f64>> {
    let max = lags.iter().copied().max().unwrap_or(0);
    if max > acf.m || lags.contains(&0) {
        return Err(Error::InvalidConfig(
            "lag outside the computed range".into(),
        ));
    }
    let inv = spd_inverse(&acf.gamma[0])?;
    let mut cumulative = vec![0.0; max + 1];
    for lag in 1..=max {
        let g = &acf.gamma[lag];
        let term = g.t_matmul(&inv).matmul(g).matmul(&inv).trace();
        cumulative[lag] = cumulative[lag - 1] + lag_weight(acf.n_eff, lag, variant) * term;
    }
    Ok(lags.iter().map(|&l| cumulative[l]).collect())
}

/// Block-Toeplitz matrix with `(i, j)` block `R̂_{j−i}` on and above the
/// diagonal and `R̂ᵀ_{i−j}` below. Hosking blocks get an exact identity on
/// the diagonal; Li–McLeod blocks keep `R̂₀`.
pub fn block_toeplitz(racfs: &RacfSet, m: usize) -> Matrix {
    assert!(
        racfs.mode != RacfMode::Chitturi,
        "Chitturi blocks are not symmetric; use chitturi_block_matrix"
    );
    assert!(m <= racfs.max_lag());
    let k = racfs.k();
    let mut big = Matrix::zeros((m + 1) * k, (m + 1) * k);
    let diag = match racfs.mode {
        RacfMode::Hosking => Matrix::identity(k),
        _ => racfs.r[0].clone(),
    };
    for i in 0..=m {
        big.set_block(i * k, i * k, &diag);
        for j in i + 1..=m {
            let r = &racfs.r[j - i];
            big.set_block(i * k, j * k, r);
            big.set_block(j * k, i * k, &r.transpose());
        }
    }
    big
}

/// Non-symmetric block matrix with `(i, j)` block `R̂‡_{i−j} = Γ̂_{i−j} Γ̂₀⁻¹`.
pub fn chitturi_block_matrix(acf: &AcfSet, m: usize) -> Result<Matrix> {
    let k = acf.k;
    let inv = spd_inverse(&acf.gamma[0])?;
    let mut big = Matrix::zeros((m + 1) * k, (m + 1) * k);
    for i in 0..=m {
        for j in 0..=m {
            let block = acf.at(i as isize - j as isize).matmul(&inv);
            big.set_block(i * k, j * k, &block);
        }
    }
    Ok(big)
}

/// `D_m = −n log|𝕽̂_m|`, or the `+∞` sentinel when `𝕽̂_m` fails Cholesky.
pub fn gv_stat(racfs: &RacfSet, m: usize, n_eff: usize) -> StatValue {
    gv_stats_for_lags(racfs, &[m], n_eff)[0]
}

/// `D_ℓ` for every requested lag from one Cholesky factorization of the
/// largest matrix: `𝕽̂_ℓ` is the leading principal block of `𝕽̂_m`, so its
/// factor is the leading block of the full factor.
pub fn gv_stats_for_lags(racfs: &RacfSet, lags: &[usize], n_eff: usize) -> Vec<StatValue> {
    let k = racfs.k();
    let max = lags.iter().copied().max().unwrap_or(0);
    let big = block_toeplitz(racfs, max);
    let (l, done) = cholesky_prefix(&big);
    lags.iter()
        .map(|&lag| {
            let size = (lag + 1) * k;
            if size > done {
                StatValue::non_pd()
            } else {
                StatValue {
                    value: -(n_eff as f64) * log_det_from_cholesky(&l, size),
                    non_pd: false,
                }
            }
        })
        .collect()
}

/// Partitioned-determinant decomposition `|𝕽̂_m| = Π |I − A_ℓ|` with
/// `A_ℓ = 𝕽̂_(ℓ) 𝕽̂⁻¹_{ℓ−1} 𝕽̂ᵀ_(ℓ)` and `𝕽̂_(ℓ) = [R̂₁ : … : R̂_ℓ]`.
pub fn gv_decompose(racfs: &RacfSet, m: usize) -> Result<GvDecomposition> {
    let k = racfs.k();
    let big = block_toeplitz(racfs, m);
    let mut eta_sq = Vec::with_capacity(m);
    let mut step_dets = Vec::with_capacity(m);
    for lag in 1..=m {
        let prev = big.block(0, 0, lag * k, lag * k);
        let chol = cholesky_lower(&prev)?;
        let mut row = Matrix::zeros(k, lag * k);
        for j in 0..lag {
            row.set_block(0, j * k, &racfs.r[j + 1]);
        }
        let solved = cholesky_solve(&chol, &row.transpose());
        let a = row.matmul(&solved);
        let d = det(&(&Matrix::identity(k) - &a));
        step_dets.push(d);
        eta_sq.push(1.0 - d);
    }
    Ok(GvDecomposition { eta_sq, step_dets })
}

/// Every statistic in `stats` at every lag in `lags`, from one set of
/// autocovariances. The outer vector follows `stats`, the inner one `lags`.
pub fn statistics_for_lags(
    residuals: &Series,
    lags: &[usize],
    stats: &[Statistic],
) -> Result<Vec<Vec<StatValue>>> {
    let max = lags.iter().copied().max().unwrap_or(0);
    let acf = sample_acov(residuals, max)?;
    let mut hosking = None;
    stats
        .iter()
        .map(|&stat| match stat {
            Statistic::Gv => {
                if hosking.is_none() {
                    hosking = Some(racf(&acf, RacfMode::Hosking)?);
                }
                let set = hosking.as_ref().expect("computed above");
                Ok(gv_stats_for_lags(set, lags, acf.n_eff))
            }
            Statistic::QClassic | Statistic::QModified => {
                let variant = if stat == Statistic::QClassic {
                    QVariant::Classic
                } else {
                    QVariant::Modified
                };
                Ok(portmanteau_q_for_lags(&acf, lags, variant)?
                    .into_iter()
                    .map(|value| StatValue {
                        value,
                        non_pd: false,
                    })
                    .collect())
            }
        })
        .collect()
}

/// Identity, or squared / absolute residuals centered to zero column means.
pub fn residual_transform(residuals: &Series, kind: ResidualTransform) -> Series {
    let f: fn(f64) -> f64 = match kind {
        ResidualTransform::Identity => return residuals.clone(),
        ResidualTransform::Square => |v| v * v,
        ResidualTransform::Abs => f64::abs,
    };
    let (n, k) = (residuals.n(), residuals.k());
    let mapped = Matrix::from_fn(n, k, |t, j| f(residuals.values()[(t, j)]));
    let means: Vec<f64> = (0..k)
        .map(|j| (0..n).map(|t| mapped[(t, j)]).sum::<f64>() / n as f64)
        .collect();
    let centered = Matrix::from_fn(n, k, |t, j| mapped[(t, j)] - means[j]);
    Series::new(centered).expect("transform of a finite series is finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(rows: usize, k: usize, vals: &[f64]) -> Series {
        Series::new(Matrix::from_fn(rows, k, |t, j| vals[t * k + j])).unwrap()
    }

    fn random_series(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Series {
        Series::new(Matrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    fn alternating() -> Series {
        series(4, 1, &[1.0, -1.0, 1.0, -1.0])
    }

    #[test]
    fn alternating_series_autocovariance() {
        let acf = sample_acov(&alternating(), 1).unwrap();
        assert!((acf.gamma[0][(0, 0)] - 1.0).abs() < 1e-15);
        assert!((acf.gamma[1][(0, 0)] + 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_residuals_are_degenerate() {
        let s = series(10, 2, &[0.0; 20]);
        assert!(matches!(
            sample_acov(&s, 1),
            Err(Error::DegenerateResiduals(_))
        ));
    }

    #[test]
    fn lag_guard_refuses_large_m() {
        let s = series(4, 1, &[1.0, -1.0, 1.0, -1.0]);
        assert!(matches!(
            sample_acov(&s, 3),
            Err(Error::DegenerateResiduals(_))
        ));
    }

    #[test]
    fn gamma0_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let acf = sample_acov(&random_series(&mut rng, 60, 3), 4).unwrap();
        assert!(acf.gamma[0].max_abs_diff(&acf.gamma[0].transpose()) <= 1e-15);
    }

    #[test]
    fn scalar_racf_is_the_same_in_every_mode() {
        let acf = sample_acov(&alternating(), 1).unwrap();
        for mode in RacfMode::ALL {
            let set = racf(&acf, mode).unwrap();
            assert!((set.r[1][(0, 0)] + 0.75).abs() < 1e-14, "{mode:?}");
        }
    }

    #[test]
    fn r0_conventions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let acf = sample_acov(&random_series(&mut rng, 80, 3), 3).unwrap();
        let h = racf(&acf, RacfMode::Hosking).unwrap();
        assert!(h.r[0].max_abs_diff(&Matrix::identity(3)) < 1e-10);
        let c = racf(&acf, RacfMode::Chitturi).unwrap();
        assert_eq!(c.r[0], Matrix::identity(3));
        let lm = racf(&acf, RacfMode::LiMcleod).unwrap();
        for i in 0..3 {
            assert!((lm.r[0][(i, i)] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_portmanteau_values() {
        let acf = sample_acov(&alternating(), 1).unwrap();
        for mode in RacfMode::ALL {
            for form in [QForm::Trace, QForm::Kron] {
                let q = portmanteau_q(&acf, 1, QVariant::Classic, form, mode).unwrap();
                assert!((q - 2.25).abs() < 1e-12);
                let qt = portmanteau_q(&acf, 1, QVariant::Modified, form, mode).unwrap();
                assert!((qt - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_autocovariances_give_zero_q() {
        let acf = AcfSet {
            k: 2,
            m: 3,
            n_eff: 100,
            gamma: vec![
                Matrix::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]),
                Matrix::zeros(2, 2),
                Matrix::zeros(2, 2),
                Matrix::zeros(2, 2),
            ],
        };
        assert_eq!(
            portmanteau_q(&acf, 3, QVariant::Classic, QForm::Trace, RacfMode::Hosking).unwrap(),
            0.0
        );
        let set = racf(&acf, RacfMode::Hosking).unwrap();
        assert_eq!(gv_stat(&set, 3, 100).value, 0.0);
        assert_eq!(block_toeplitz(&set, 3), Matrix::identity(8));
        let dec = gv_decompose(&set, 3).unwrap();
        assert!(dec.eta_sq.iter().all(|&e| e.abs() < 1e-15));
    }

    #[test]
    fn block_toeplitz_small_cases() {
        let set = RacfSet {
            mode: RacfMode::Hosking,
            r: vec![Matrix::identity(1), Matrix::from_rows(&[&[0.3]])],
        };
        assert_eq!(block_toeplitz(&set, 0), Matrix::identity(1));
        assert_eq!(
            block_toeplitz(&set, 1),
            Matrix::from_rows(&[&[1.0, 0.3], &[0.3, 1.0]])
        );
    }

    #[test]
    fn block_toeplitz_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let acf = sample_acov(&random_series(&mut rng, 50, 2), 3).unwrap();
        let set = racf(&acf, RacfMode::Hosking).unwrap();
        let big = block_toeplitz(&set, 3);
        assert!(big.max_abs_diff(&big.transpose()) == 0.0);
        assert_eq!(big.block(0, 4, 2, 2), set.r[2]);
        assert_eq!(big.block(4, 0, 2, 2), set.r[2].transpose());
        assert_eq!(big.block(2, 2, 2, 2), Matrix::identity(2));
    }

    #[test]
    fn scalar_gv_value() {
        let acf = sample_acov(&alternating(), 1).unwrap();
        let set = racf(&acf, RacfMode::Hosking).unwrap();
        let d = gv_stat(&set, 1, 4);
        assert!(!d.non_pd);
        assert!((d.value + 4.0 * 0.4375f64.ln()).abs() < 1e-12);
        assert!((d.value - 3.3067).abs() < 1e-4);
        let dec = gv_decompose(&set, 1).unwrap();
        assert!((dec.eta_sq[0] - 0.5625).abs() < 1e-12);
    }

    #[test]
    fn non_pd_block_matrix_gives_sentinel() {
        let set = RacfSet {
            mode: RacfMode::Hosking,
            r: vec![Matrix::identity(1), Matrix::from_rows(&[&[1.2]])],
        };
        let d = gv_stat(&set, 1, 10);
        assert!(d.non_pd && d.value == f64::INFINITY);
        // a lag whose matrix is still PD is unaffected
        let set = RacfSet {
            mode: RacfMode::Hosking,
            r: vec![
                Matrix::identity(1),
                Matrix::from_rows(&[&[0.9]]),
                Matrix::from_rows(&[&[-0.9]]),
            ],
        };
        let both = gv_stats_for_lags(&set, &[1, 2], 10);
        assert!(!both[0].non_pd && both[1].non_pd);
    }

    #[test]
    fn prefix_route_matches_direct_log_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_series(&mut rng, 120, 2);
        let acf = sample_acov(&s, 6).unwrap();
        let set = racf(&acf, RacfMode::Hosking).unwrap();
        let lags = [1, 2, 4, 6];
        let fast = gv_stats_for_lags(&set, &lags, 120);
        for (d, &m) in fast.iter().zip(&lags) {
            let direct = -120.0 * crate::matrix::log_det_spd(&block_toeplitz(&set, m)).unwrap();
            assert!((d.value - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn fast_q_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_series(&mut rng, 90, 3);
        let acf = sample_acov(&s, 5).unwrap();
        for variant in [QVariant::Classic, QVariant::Modified] {
            let fast = portmanteau_q_for_lags(&acf, &[2, 5], variant).unwrap();
            for (v, m) in fast.iter().zip([2, 5]) {
                let r = portmanteau_q(&acf, m, variant, QForm::Trace, RacfMode::Hosking).unwrap();
                assert!((v - r).abs() < 1e-10 * r);
            }
        }
    }

    #[test]
    fn transforms() {
        let s = series(2, 1, &[1.0, -2.0]);
        assert_eq!(residual_transform(&s, ResidualTransform::Identity), s);
        let sq = residual_transform(&s, ResidualTransform::Square);
        assert_eq!(sq.values().as_slice(), &[-1.5, 1.5]);
        let ab = residual_transform(&series(2, 1, &[-3.0, 3.0]), ResidualTransform::Abs);
        assert_eq!(ab.values().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn neudecker_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let k = rng.random_range(1..=3);
            let acf = sample_acov(&random_series(&mut rng, 40, k), 1).unwrap();
            let inv = spd_inverse(&acf.gamma[0]).unwrap();
            let g = &acf.gamma[1];
            let tr = g.transpose().matmul(&inv).matmul(g).matmul(&inv).trace();
            let v = g.vec();
            let quad = dot(&v, &kron(&inv, &inv).mul_vec(&v));
            assert!((tr - quad).abs() < 1e-10 * tr.abs().max(1.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn modified_dominates_classic(seed in any::<u64>(), k in 1usize..=3, m in 1usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let acf = sample_acov(&random_series(&mut rng, 60, k), m).unwrap();
            let q = portmanteau_q(&acf, m, QVariant::Classic, QForm::Trace, RacfMode::Hosking).unwrap();
            let qt = portmanteau_q(&acf, m, QVariant::Modified, QForm::Trace, RacfMode::Hosking).unwrap();
            prop_assert!(q >= 0.0);
            prop_assert!(qt >= q);
        }

        #[test]
        fn biased_block_matrix_is_pd(seed in any::<u64>(), k in 1usize..=3, m in 1usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 2 * (m + 1) * k;
            let acf = sample_acov(&random_series(&mut rng, n, k), m).unwrap();
            let set = racf(&acf, RacfMode::Hosking).unwrap();
            prop_assert!(cholesky_lower(&block_toeplitz(&set, m)).is_ok());
            let d = gv_stat(&set, m, n);
            prop_assert!(!d.non_pd);
            prop_assert!(d.value >= -1e-8 * n as f64);
        }

        #[test]
        fn chitturi_determinant_matches(seed in any::<u64>(), k in 1usize..=3, m in 1usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let acf = sample_acov(&random_series(&mut rng, 80, k), m).unwrap();
            let set = racf(&acf, RacfMode::Hosking).unwrap();
            let d_sym = crate::matrix::log_det_spd(&block_toeplitz(&set, m)).unwrap().exp();
            let d_chit = det(&chitturi_block_matrix(&acf, m).unwrap());
            prop_assert!((d_sym - d_chit).abs() <= 1e-8 * d_sym.abs().max(1e-300));
        }
    }
}
