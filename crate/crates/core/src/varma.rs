//! VARMA(p, q) models: representation, stationarity and invertibility checks,
//! the Ψ and Π weight recursions, Gaussian simulation, and the built-in
//! model catalog used by the size and power studies.
//!
//! Sign convention: `Φ(B) Z_t = Θ(B) a_t` with `Φ(B) = I − Φ₁B − … − Φ_pB^p`
//! and `Θ(B) = I − Θ₁B − … − Θ_qB^q`, so the moving-average terms enter the
//! recursion with a minus sign.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cholesky_lower, Matrix};
use crate::montecarlo::SeedState;

/// Spectral radii at or above this value count as a unit root.
pub const UNIT_ROOT_THRESHOLD: f64 = 1.0 - 1e-6;

/// Number of repeated squarings used by the Gelfand spectral-radius estimate.
const GELFAND_SQUARINGS: u32 = 6;

/// Full VARMA(p, q) parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub k: usize,
    #[serde(default)]
    pub phi: Vec<Matrix>,
    #[serde(default)]
    pub theta: Vec<Matrix>,
    pub gamma0: Matrix,
    #[serde(default)]
    pub mean: Vec<f64>,
}

impl ModelSpec {
    /// Zero-mean model with the given coefficients.
    pub fn new(phi: Vec<Matrix>, theta: Vec<Matrix>, gamma0: Matrix) -> Self {
        let k = gamma0.rows();
        ModelSpec {
            k,
            phi,
            theta,
            gamma0,
            mean: vec![0.0; k],
        }
    }

    pub fn with_mean(mut self, mean: Vec<f64>) -> Self {
        self.mean = mean;
        self
    }

    pub fn p(&self) -> usize {
        self.phi.len()
    }

    pub fn q(&self) -> usize {
        self.theta.len()
    }

    /// Mean vector, treating an empty `mean` as zero.
    pub fn mean_vec(&self) -> Vec<f64> {
        if self.mean.is_empty() {
            vec![0.0; self.k]
        } else {
            self.mean.clone()
        }
    }

    fn check_dimensions(&self) -> Result<()> {
        let k = self.k;
        if k == 0 {
            return Err(Error::DimensionMismatch("model dimension k is zero".into()));
        }
        let square = |m: &Matrix| m.rows() == k && m.cols() == k;
        if !square(&self.gamma0) {
            return Err(Error::DimensionMismatch(format!(
                "gamma0 is {}x{}, expected {k}x{k}",
                self.gamma0.rows(),
                self.gamma0.cols()
            )));
        }
        for (name, list) in [("phi", &self.phi), ("theta", &self.theta)] {
            if let Some(i) = list.iter().position(|m| !square(m)) {
                return Err(Error::DimensionMismatch(format!(
                    "{name}[{}] is {}x{}, expected {k}x{k}",
                    i + 1,
                    list[i].rows(),
                    list[i].cols()
                )));
            }
        }
        if !self.mean.is_empty() && self.mean.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {}, expected {k}",
                self.mean.len()
            )));
        }
        Ok(())
    }
}

/// Time-ordered `n × k` block of observations or residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct Series {
    values: Matrix,
}

impl Series {
    pub fn new(values: Matrix) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::TooShort("series has no observations".into()));
        }
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("series".into()));
        }
        Ok(Series { values })
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn k(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    /// Observation at time `t` (zero-based).
    pub fn row(&self, t: usize) -> &[f64] {
        self.values.row(t)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.k())
            .map(|j| (0..self.n()).map(|t| self.values[(t, j)]).sum::<f64>() / n)
            .collect()
    }
}

impl TryFrom<Matrix> for Series {
    type Error = Error;
    fn try_from(m: Matrix) -> Result<Self> {
        Series::new(m)
    }
}

impl From<Series> for Matrix {
    fn from(s: Series) -> Matrix {
        s.values
    }
}

/// Outcome of [`validate_model`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelValidity {
    pub stationary: bool,
    pub invertible: bool,
    pub spectral_radius_ar: f64,
    pub spectral_radius_ma: f64,
}

/// Companion matrix of a lag polynomial `I − C₁B − … − C_rB^r`.
pub fn companion(coefs: &[Matrix], k: usize) -> Matrix {
    let r = coefs.len();
    let mut c = Matrix::zeros(k * r, k * r);
    for (i, m) in coefs.iter().enumerate() {
        c.set_block(0, i * k, m);
    }
    for i in 1..r {
        c.set_block(i * k, (i - 1) * k, &Matrix::identity(k));
    }
    c
}

/// Gelfand estimate `‖A^{2^j}‖_F^{1/2^j}` with normalization after every
/// squaring so that neither overflow nor underflow occurs.
pub fn spectral_radius(a: &Matrix) -> f64 {
    if a.rows() == 0 {
        return 0.0;
    }
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mut b = a.scale(1.0 / norm);
    let mut log_scale = norm.ln();
    for _ in 0..GELFAND_SQUARINGS {
        let sq = b.matmul(&b);
        let c = sq.frobenius_norm();
        if c == 0.0 {
            return 0.0;
        }
        log_scale = 2.0 * log_scale + c.ln();
        b = sq.scale(1.0 / c);
    }
    (log_scale / f64::from(1u32 << GELFAND_SQUARINGS)).exp()
}

/// Stationarity and invertibility via the AR and MA companion matrices.
pub fn validate_model(spec: &ModelSpec) -> Result<ModelValidity> {
    spec.check_dimensions()?;
    let rho_ar = spectral_radius(&companion(&spec.phi, spec.k));
    let rho_ma = spectral_radius(&companion(&spec.theta, spec.k));
    Ok(ModelValidity {
        stationary: rho_ar < UNIT_ROOT_THRESHOLD,
        invertible: rho_ma < UNIT_ROOT_THRESHOLD,
        spectral_radius_ar: rho_ar,
        spectral_radius_ma: rho_ma,
    })
}

/// Ψ₀..Ψ_{count−1} of `Ψ(B) = Φ(B)⁻¹Θ(B)`.
pub fn ma_weights(spec: &ModelSpec, count: usize) -> Vec<Matrix> {
    let k = spec.k;
    let mut psi: Vec<Matrix> = Vec::with_capacity(count);
    for j in 0..count {
        if j == 0 {
            psi.push(Matrix::identity(k));
            continue;
        }
        let mut acc = Matrix::zeros(k, k);
        for i in 1..=j.min(spec.p()) {
            acc = &acc + &spec.phi[i - 1].matmul(&psi[j - i]);
        }
        if j <= spec.q() {
            acc = &acc - &spec.theta[j - 1];
        }
        psi.push(acc);
    }
    psi
}

/// Π₀..Π_{count−1} of `Π(B) = Θ(B)⁻¹`.
pub fn inverse_ma_weights(spec: &ModelSpec, count: usize) -> Vec<Matrix> {
    let k = spec.k;
    let mut pi: Vec<Matrix> = Vec::with_capacity(count);
    for j in 0..count {
        if j == 0 {
            pi.push(Matrix::identity(k));
            continue;
        }
        let mut acc = Matrix::zeros(k, k);
        for i in 1..=j.min(spec.q()) {
            acc = &acc + &spec.theta[i - 1].matmul(&pi[j - i]);
        }
        pi.push(acc);
    }
    pi
}

/// Discarded initial segment for a model of orders (p, q).
pub fn burn_in(spec: &ModelSpec) -> usize {
    100 + 10 * (spec.p() + spec.q())
}

fn ensure_simulable(spec: &ModelSpec) -> Result<()> {
    let v = validate_model(spec)?;
    if !v.stationary {
        return Err(Error::InvalidModel(format!(
            "not stationary (AR spectral radius {:.6})",
            v.spectral_radius_ar
        )));
    }
    if !v.invertible {
        return Err(Error::InvalidModel(format!(
            "not invertible (MA spectral radius {:.6})",
            v.spectral_radius_ma
        )));
    }
    Ok(())
}

/// Runs the VARMA recursion on a given innovation sequence (one row per
/// time step) starting from the mean with zero pre-sample innovations, and
/// returns the last `n` rows.
pub fn simulate_with_innovations(
    spec: &ModelSpec,
    innovations: &Matrix,
    n: usize,
) -> Result<Series> {
    let k = spec.k;
    let total = innovations.rows();
    if innovations.cols() != k || total < n {
        return Err(Error::DimensionMismatch(format!(
            "innovations are {}x{}, need at least {n}x{k}",
            total,
            innovations.cols()
        )));
    }
    let mean = spec.mean_vec();
    // deviations from the mean
    let mut dev = Matrix::zeros(total, k);
    let mut row = vec![0.0; k];
    for t in 0..total {
        row.copy_from_slice(innovations.row(t));
        for (i, phi) in spec.phi.iter().enumerate() {
            if t > i {
                let prev = dev.row(t - i - 1).to_vec();
                for (r, v) in row.iter_mut().zip(phi.mul_vec(&prev)) {
                    *r += v;
                }
            }
        }
        for (j, theta) in spec.theta.iter().enumerate() {
            if t > j {
                for (r, v) in row
                    .iter_mut()
                    .zip(theta.mul_vec(innovations.row(t - j - 1)))
                {
                    *r -= v;
                }
            }
        }
        dev.row_mut(t).copy_from_slice(&row);
    }
    let start = total - n;
    let out = Matrix::from_fn(n, k, |t, j| dev[(start + t, j)] + mean[j]);
    Series::new(out)
}

/// Gaussian simulation of `n` observations after a burn-in, drawing the
/// standard normal vectors from `rng` in time-major order.
pub fn simulate_with_rng<R: Rng + ?Sized>(
    spec: &ModelSpec,
    n: usize,
    rng: &mut R,
) -> Result<Series> {
    if n == 0 {
        return Err(Error::TooShort("cannot simulate zero observations".into()));
    }
    ensure_simulable(spec)?;
    let chol = cholesky_lower(&spec.gamma0)
        .map_err(|_| Error::InvalidModel("gamma0 is not positive definite".into()))?;
    let total = burn_in(spec) + n;
    let k = spec.k;
    let mut innov = Matrix::zeros(total, k);
    let mut z = vec![0.0; k];
    for t in 0..total {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        innov.row_mut(t).copy_from_slice(&chol.mul_vec(&z));
    }
    simulate_with_innovations(spec, &innov, n)
}

/// Gaussian simulation seeded from a [`SeedState`]; identical seeds give
/// bitwise-identical series.
pub fn simulate(spec: &ModelSpec, n: usize, seed: SeedState) -> Result<Series> {
    simulate_with_rng(spec, n, &mut seed.rng())
}

/// Names accepted by [`catalog`].
pub const CATALOG_NAMES: [&str; 12] = [
    "phi1", "phi2", "phi3", "phi4", "model1", "model2", "model3", "model4", "model5", "model6",
    "model7", "model8",
];

fn mat2(a: f64, b: f64, c: f64, d: f64) -> Matrix {
    Matrix::from_rows(&[&[a, b], &[c, d]])
}

/// Built-in test models: the four bivariate VAR(1) size-study models
/// `phi1..phi4` and the eight power-study models `model1..model8`.
pub fn catalog(name: &str) -> Result<ModelSpec> {
    let size_cov = || mat2(1.0, 0.5, 0.5, 1.0);
    let spec = match name {
        "phi1" => ModelSpec::new(vec![mat2(0.9, 0.1, -0.6, 0.4)], vec![], size_cov()),
        "phi2" => ModelSpec::new(vec![mat2(-1.5, 1.2, -0.9, 0.5)], vec![], size_cov()),
        "phi3" => ModelSpec::new(vec![mat2(0.4, 0.1, -1.0, 0.5)], vec![], size_cov()),
        "phi4" => ModelSpec::new(vec![mat2(0.3, 0.5, 0.0, 0.3)], vec![], size_cov()),
        "model1" => ModelSpec::new(
            vec![mat2(0.5, 0.1, 0.4, 0.5), mat2(0.0, 0.0, 0.3, 0.0)],
            vec![],
            mat2(1.0, 0.71, 0.71, 1.0),
        ),
        "model2" => ModelSpec::new(
            vec![mat2(0.7, 0.0, 0.0, 0.6)],
            vec![mat2(0.5, 0.6, -0.7, 0.8)],
            mat2(1.0, 0.71, 0.71, 2.0),
        ),
        "model3" => ModelSpec::new(
            vec![mat2(1.2, -0.5, 0.6, 0.3)],
            vec![mat2(-0.6, 0.3, 0.3, 0.6)],
            mat2(1.0, 0.5, 0.5, 1.25),
        ),
        "model4" => ModelSpec::new(
            vec![mat2(0.8, -2.0, 0.0, 0.0)],
            vec![mat2(-0.5, 0.0, 0.0, 0.0)],
            mat2(1.0, 0.71, 0.71, 1.0),
        ),
        "model5" => ModelSpec::new(
            vec![],
            vec![mat2(0.8, 0.7, -0.4, 0.6)],
            mat2(4.0, 1.0, 1.0, 2.0),
        ),
        "model6" => ModelSpec::new(
            vec![],
            vec![mat2(0.2, 0.3, -0.6, 1.1)],
            mat2(2.0, 1.0, 1.0, 1.0),
        ),
        "model7" => ModelSpec::new(
            vec![mat2(0.5, 0.1, 0.4, 0.5), mat2(0.0, 0.0, 0.25, 0.0)],
            vec![mat2(0.6, 0.2, 0.0, 0.3)],
            mat2(1.0, 0.3, 0.3, 1.0),
        ),
        "model8" => ModelSpec::new(
            vec![Matrix::from_rows(&[
                &[0.4, 0.3, -0.6],
                &[0.0, 0.8, 0.4],
                &[0.3, 0.0, 0.0],
            ])],
            vec![Matrix::from_rows(&[
                &[0.7, 0.0, 0.0],
                &[0.1, 0.2, 0.0],
                &[-0.4, 0.5, -0.1],
            ])],
            Matrix::from_rows(&[&[1.0, 0.5, 0.4], &[0.5, 1.0, 0.7], &[0.4, 0.7, 1.0]]),
        ),
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::derive_seed;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_rows(&[&[v]])
    }

    #[test]
    fn phi1_is_stationary_with_radius_near_0_7() {
        let v = validate_model(&catalog("phi1").unwrap()).unwrap();
        assert!(v.stationary && v.invertible);
        // eigenvalues 0.7 and 0.6; Gelfand overestimates by a (cond)^(1/64) factor
        assert!(v.spectral_radius_ar >= 0.7 - 1e-9);
        assert!(v.spectral_radius_ar < 0.73, "{}", v.spectral_radius_ar);
    }

    #[test]
    fn unit_root_is_not_stationary() {
        let spec = ModelSpec::new(vec![Matrix::identity(2)], vec![], Matrix::identity(2));
        let v = validate_model(&spec).unwrap();
        assert!(!v.stationary);
    }

    #[test]
    fn complex_pair_radius() {
        let v = validate_model(&catalog("phi2").unwrap()).unwrap();
        assert!(v.stationary);
        assert!((v.spectral_radius_ar - 0.33f64.sqrt()).abs() < 0.02);
    }

    #[test]
    fn radius_of_scalar_is_exact() {
        assert!((spectral_radius(&scalar(-0.8)) - 0.8).abs() < 1e-12);
        assert_eq!(spectral_radius(&Matrix::zeros(3, 3)), 0.0);
        // nilpotent
        assert_eq!(
            spectral_radius(&Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]])),
            0.0
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = ModelSpec::new(vec![Matrix::identity(3)], vec![], Matrix::identity(2));
        assert!(matches!(
            validate_model(&spec),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn var1_weights_are_powers() {
        let spec = catalog("phi1").unwrap();
        let psi = ma_weights(&spec, 6);
        let mut pow = Matrix::identity(2);
        for w in &psi {
            assert!(w.max_abs_diff(&pow) < 1e-14);
            pow = pow.matmul(&spec.phi[0]);
        }
    }

    #[test]
    fn vma1_weights() {
        let spec = catalog("model5").unwrap();
        let psi = ma_weights(&spec, 5);
        assert_eq!(psi[0], Matrix::identity(2));
        assert_eq!(psi[1], -&spec.theta[0]);
        for w in &psi[2..] {
            assert_eq!(*w, Matrix::zeros(2, 2));
        }
    }

    #[test]
    fn scalar_arma11_weights() {
        let spec = ModelSpec::new(vec![scalar(0.5)], vec![scalar(0.3)], scalar(1.0));
        let psi = ma_weights(&spec, 3);
        assert!((psi[1][(0, 0)] - 0.2).abs() < 1e-15);
        assert!((psi[2][(0, 0)] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn inverse_weights() {
        let pure_ar = catalog("phi1").unwrap();
        let pi = inverse_ma_weights(&pure_ar, 4);
        assert_eq!(pi[0], Matrix::identity(2));
        assert!(pi[1..].iter().all(|m| *m == Matrix::zeros(2, 2)));

        let spec = ModelSpec::new(vec![], vec![scalar(0.5)], scalar(1.0));
        for (j, p) in inverse_ma_weights(&spec, 8).iter().enumerate() {
            assert!((p[(0, 0)] - 0.5f64.powi(j as i32)).abs() < 1e-15);
        }

        let spec = catalog("model6").unwrap();
        let mut pow = Matrix::identity(2);
        for p in inverse_ma_weights(&spec, 6) {
            assert!(p.max_abs_diff(&pow) < 1e-13);
            pow = pow.matmul(&spec.theta[0]);
        }
    }

    #[test]
    fn catalog_entries_have_expected_coefficients() {
        assert_eq!(catalog("phi3").unwrap().phi[0], mat2(0.4, 0.1, -1.0, 0.5));
        let m6 = catalog("model6").unwrap();
        assert_eq!(m6.theta[0], mat2(0.2, 0.3, -0.6, 1.1));
        assert_eq!(m6.gamma0, mat2(2.0, 1.0, 1.0, 1.0));
        let m5 = catalog("model5").unwrap();
        assert_eq!(m5.theta[0], mat2(0.8, 0.7, -0.4, 0.6));
        assert_eq!(m5.gamma0, mat2(4.0, 1.0, 1.0, 2.0));
        assert_eq!(catalog("phi1").unwrap().gamma0, mat2(1.0, 0.5, 0.5, 1.0));
        let m8 = catalog("model8").unwrap();
        assert_eq!((m8.k, m8.p(), m8.q()), (3, 1, 1));
        assert!(matches!(catalog("bogus"), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn every_catalog_entry_is_valid_and_weights_decay() {
        for name in CATALOG_NAMES {
            let spec = catalog(name).unwrap();
            let v = validate_model(&spec).unwrap();
            assert!(v.stationary && v.invertible, "{name}: {v:?}");
            assert!(cholesky_lower(&spec.gamma0).is_ok());
            let psi = ma_weights(&spec, 51);
            assert!(psi[50].frobenius_norm() < 1e-3, "{name}");
        }
    }

    #[test]
    fn lag_polynomial_identity_holds() {
        for name in CATALOG_NAMES {
            let spec = catalog(name).unwrap();
            let psi = ma_weights(&spec, 21);
            for j in 0..=20 {
                let mut r = psi[j].clone();
                for i in 1..=j.min(spec.p()) {
                    r = &r - &spec.phi[i - 1].matmul(&psi[j - i]);
                }
                if (1..=spec.q()).contains(&j) {
                    r = &r + &spec.theta[j - 1];
                }
                if j == 0 {
                    r = &r - &Matrix::identity(spec.k);
                }
                assert!(r.max_abs() < 1e-12, "{name} j={j}");
            }
        }
    }

    #[test]
    fn white_noise_simulation_has_small_autocovariances() {
        let spec = ModelSpec::new(vec![], vec![], Matrix::identity(2));
        let n = 10_000;
        let s = simulate(&spec, n, derive_seed(7, 0, 0)).unwrap();
        let bound = 4.0 / (n as f64).sqrt();
        for lag in 1..=5 {
            for a in 0..2 {
                for b in 0..2 {
                    let g: f64 = (lag..n)
                        .map(|t| s.row(t)[a] * s.row(t - lag)[b])
                        .sum::<f64>()
                        / n as f64;
                    assert!(g.abs() < bound, "lag {lag} ({a},{b}) = {g}");
                }
            }
        }
    }

    #[test]
    fn simulated_mean_matches() {
        let spec =
            ModelSpec::new(vec![], vec![], mat2(2.0, 0.3, 0.3, 0.5)).with_mean(vec![3.0, -1.0]);
        let n = 10_000;
        let s = simulate(&spec, n, derive_seed(11, 3, 0)).unwrap();
        for (j, m) in s.column_means().iter().enumerate() {
            let tol = 4.0 * (spec.gamma0[(j, j)] / n as f64).sqrt();
            assert!((m - spec.mean[j]).abs() < tol);
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let spec = catalog("model8").unwrap();
        let a = simulate(&spec, 300, derive_seed(42, 9, 0)).unwrap();
        let b = simulate(&spec, 300, derive_seed(42, 9, 0)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&spec, 300, derive_seed(42, 10, 0)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn nonstationary_model_is_rejected() {
        let spec = ModelSpec::new(vec![Matrix::identity(2)], vec![], Matrix::identity(2));
        assert!(matches!(
            simulate(&spec, 10, derive_seed(1, 1, 0)),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn model4_zero_row_is_accepted() {
        let v = validate_model(&catalog("model4").unwrap()).unwrap();
        assert!(v.stationary);
        assert!(v.spectral_radius_ar < 0.9);
    }
}
