//! VAR(h) models, their companion form, and the stationarity check.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectral radius must stay at or below `1 - STABILITY_MARGIN` to count as stationary.
pub const STABILITY_MARGIN: f64 = 1e-6;

/// Largest companion dimension handed to the dense eigensolver.
const DENSE_EIGEN_LIMIT: usize = 512;
/// QR iterations allowed before the Schur solver is abandoned for the iterative estimate.
const SCHUR_MAX_ITER: usize = 10_000;

/// Attempts `make_jump` makes before giving up on a stationary draw.
pub const JUMP_RETRY_BUDGET: usize = 1000;

/// Per-component noise variance: one value shared by all components, or one per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseScale {
    Scalar(f64),
    PerComponent(Vec<f64>),
}

impl NoiseScale {
    pub fn component(&self, j: usize) -> f64 {
        match self {
            NoiseScale::Scalar(v) => *v,
            NoiseScale::PerComponent(v) => v[j],
        }
    }

    /// Sum over `dim` components.
    pub fn total(&self, dim: usize) -> f64 {
        match self {
            NoiseScale::Scalar(v) => v * dim as f64,
            NoiseScale::PerComponent(v) => v.iter().sum(),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let ok = match self {
            NoiseScale::Scalar(v) => v.is_finite() && *v >= 0.0,
            NoiseScale::PerComponent(v) => {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: v.len(),
                    });
                }
                v.iter().all(|x| x.is_finite() && *x >= 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel("noise variances must be finite and >= 0".into()))
        }
    }
}

/// Sub-Gaussian innovation families, all scaled to the requested variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    UniformScaled,
    RademacherScaled,
}

impl NoiseKind {
    /// Unit-variance draw.
    pub(crate) fn draw<R: rand::Rng>(self, rng: &mut R) -> f64 {
        match self {
            NoiseKind::Gaussian => StandardNormal.sample(rng),
            NoiseKind::UniformScaled => {
                let u: f64 = rng.random();
                (2.0 * u - 1.0) * 3f64.sqrt()
            }
            NoiseKind::RademacherScaled => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// `X_t = sum_l A_l X_{t-l} + eps_t`, with diagonal noise covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    transitions: Vec<DMatrix<f64>>,
    noise: NoiseScale,
    noise_kind: NoiseKind,
}

impl VarModel {
    pub fn new(transitions: Vec<DMatrix<f64>>, noise: NoiseScale, noise_kind: NoiseKind) -> Result<Self> {
        let Some(first) = transitions.first() else {
            return Err(Error::InvalidModel("lag order must be at least 1".into()));
        };
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        for a in &transitions {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::InvalidModel(format!(
                    "transition matrix is {}x{}, expected {dim}x{dim}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("transition matrix"));
            }
        }
        noise.validate(dim)?;
        Ok(Self {
            transitions,
            noise,
            noise_kind,
        })
    }

    /// VAR(1) with `A_1 = a * I_p` and Gaussian noise.
    pub fn diagonal(dim: usize, a: f64, sigma2: f64) -> Result<Self> {
        Self::new(
            vec![DMatrix::identity(dim, dim) * a],
            NoiseScale::Scalar(sigma2),
            NoiseKind::Gaussian,
        )
    }

    /// Rebuild from a coefficient vector in the normative layout (see [`VarModel::coefficients`]).
    pub fn from_coefficients(
        beta: &[f64],
        dim: usize,
        lag: usize,
        noise: NoiseScale,
        noise_kind: NoiseKind,
    ) -> Result<Self> {
        let hp = lag * dim;
        if beta.len() != hp * dim {
            return Err(Error::DimensionMismatch {
                expected: hp * dim,
                got: beta.len(),
            });
        }
        let transitions = (0..lag)
            .map(|l| DMatrix::from_fn(dim, dim, |j, k| beta[j * hp + l * dim + k]))
            .collect();
        Self::new(transitions, noise, noise_kind)
    }

    pub fn dim(&self) -> usize {
        self.transitions[0].nrows()
    }

    pub fn lag(&self) -> usize {
        self.transitions.len()
    }

    pub fn transitions(&self) -> &[DMatrix<f64>] {
        &self.transitions
    }

    pub fn noise(&self) -> &NoiseScale {
        &self.noise
    }

    pub fn noise_kind(&self) -> NoiseKind {
        self.noise_kind
    }

    pub fn with_noise(mut self, noise: NoiseScale) -> Result<Self> {
        noise.validate(self.dim())?;
        self.noise = noise;
        Ok(self)
    }

    pub fn with_noise_kind(mut self, kind: NoiseKind) -> Self {
        self.noise_kind = kind;
        self
    }

    /// Vectorized coefficients: entry for target row `j`, source column `k`, lag `l`
    /// (all 0-based) sits at `j * h * p + l * p + k`.
    pub fn coefficients(&self) -> Vec<f64> {
        let (p, h) = (self.dim(), self.lag());
        let mut beta = vec![0.0; h * p * p];
        for (l, a) in self.transitions.iter().enumerate() {
            for j in 0..p {
                for k in 0..p {
                    beta[j * h * p + l * p + k] = a[(j, k)];
                }
            }
        }
        beta
    }

    /// Same model with zero matrices appended up to lag `lag`.
    pub fn padded_to(&self, lag: usize) -> VarModel {
        let mut out = self.clone();
        let p = self.dim();
        while out.transitions.len() < lag {
            out.transitions.push(DMatrix::zeros(p, p));
        }
        out
    }
}

/// One-step prediction `out[j] = sum_{l,k} beta[j*hp + l*p + k] * lagged[l*p + k]`, where
/// `lagged` stacks `(X_{t-1}, ..., X_{t-h})`.
pub(crate) fn predict_into(beta: &[f64], lagged: &[f64], out: &mut [f64]) {
    let hp = lagged.len();
    for (j, o) in out.iter_mut().enumerate() {
        *o = beta[j * hp..(j + 1) * hp]
            .iter()
            .zip(lagged)
            .map(|(b, x)| b * x)
            .sum();
    }
}

/// `hp x hp` companion matrix: `[A_1 ... A_h]` on top, identity blocks below the diagonal.
pub fn companion(model: &VarModel) -> DMatrix<f64> {
    let (p, h) = (model.dim(), model.lag());
    let mut c = DMatrix::zeros(h * p, h * p);
    for (l, a) in model.transitions().iter().enumerate() {
        c.view_mut((0, l * p), (p, p)).copy_from(a);
    }
    for i in p..h * p {
        c[(i, i - p)] = 1.0;
    }
    c
}

pub fn spectral_radius(model: &VarModel) -> f64 {
    let c = companion(model);
    if c.nrows() <= DENSE_EIGEN_LIMIT {
        if let Some(schur) = Schur::try_new(c.clone(), f64::EPSILON, SCHUR_MAX_ITER) {
            return schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
        }
    }
    growth_rate(&c)
}

/// Gelfand-style estimate `||C^k v||^{1/k}` for matrices too large for the dense solver.
fn growth_rate(c: &DMatrix<f64>) -> f64 {
    const ITERATIONS: usize = 4000;
    let n = c.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = nalgebra::DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    v /= v.norm();
    let mut log_growth = 0.0;
    let burn = ITERATIONS / 4;
    for it in 0..ITERATIONS {
        v = c * &v;
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v /= norm;
        if it >= burn {
            log_growth += norm.ln();
        }
    }
    (log_growth / (ITERATIONS - burn) as f64).exp()
}

/// Lag-0 covariance `Gamma_0` of the stationary process, summed by repeated squaring of the
/// companion matrix. `None` if the series does not settle (non-stationary model).
pub fn stationary_covariance(model: &VarModel) -> Option<DMatrix<f64>> {
    let p = model.dim();
    let mut power = companion(model);
    let m = power.nrows();
    let mut gamma = DMatrix::<f64>::zeros(m, m);
    for j in 0..p {
        gamma[(j, j)] = model.noise().component(j);
    }
    for _ in 0..64 {
        let next = &gamma + &power * &gamma * power.transpose();
        let settled = (&next - &gamma).amax() <= 1e-13 * next.amax();
        gamma = next;
        if settled {
            return gamma.iter().all(|v| v.is_finite()).then(|| gamma.view((0, 0), (p, p)).into_owned());
        }
        power = &power * &power;
    }
    None
}

pub fn is_stationary(model: &VarModel) -> bool {
    spectral_radius(model) <= 1.0 - STABILITY_MARGIN
}

pub(crate) fn ensure_stationary(model: &VarModel) -> Result<()> {
    let rho = spectral_radius(model);
    if rho <= 1.0 - STABILITY_MARGIN {
        Ok(())
    } else {
        Err(Error::NonStationary { spectral_radius: rho })
    }
}

/// Perturb `base` on `sparsity` random coefficients so that the coefficient vectors differ
/// by exactly `jump` in Euclidean norm, redrawing until the result is stationary.
pub fn make_jump(base: &VarModel, jump: f64, sparsity: usize, seed: u64) -> Result<VarModel> {
    if !(jump.is_finite() && jump >= 0.0) {
        return Err(Error::InvalidConfig(format!("jump size must be >= 0, got {jump}")));
    }
    ensure_stationary(base)?;
    if jump == 0.0 {
        return Ok(base.clone());
    }
    let beta = base.coefficients();
    if sparsity == 0 || sparsity > beta.len() {
        return Err(Error::InvalidConfig(format!(
            "perturbation support must be in 1..={}, got {sparsity}",
            beta.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..JUMP_RETRY_BUDGET {
        let support = index::sample(&mut rng, beta.len(), sparsity);
        let direction: Vec<f64> = (0..sparsity).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut perturbed = beta.clone();
        for (idx, d) in support.iter().zip(&direction) {
            perturbed[idx] += jump * d / norm;
        }
        let candidate = VarModel::from_coefficients(
            &perturbed,
            base.dim(),
            base.lag(),
            base.noise.clone(),
            base.noise_kind,
        )?;
        if is_stationary(&candidate) {
            return Ok(candidate);
        }
    }
    Err(Error::RetryBudgetExhausted(JUMP_RETRY_BUDGET))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex_oracle::*;

    #[test]
    fn stationary_covariance_closed_forms() {
        let m = VarModel::diagonal(1, 0.5, 2.0).unwrap();
        let g = stationary_covariance(&m).unwrap();
        assert!((g[(0, 0)] - 2.0 / 0.75).abs() < 1e-12);
        assert!(stationary_covariance(&VarModel::diagonal(2, 1.0, 1.0).unwrap()).is_none());
    }

    #[test]
    fn stationary_covariance_solves_the_lyapunov_equation() {
        // VAR(2), p = 2: Gamma_0 from the vectorized companion equation G = C G C' + Q,
        // solved directly as (I - C (x) C) vec G = vec Q.
        let a1 = DMatrix::from_row_slice(2, 2, &[0.4, 0.3, -0.2, 0.1]);
        let a2 = DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.2, -0.3]);
        let m = VarModel::new(vec![a1, a2], NoiseScale::PerComponent(vec![1.0, 0.5]), NoiseKind::Gaussian)
            .unwrap();
        let c = companion(&m);
        let k = c.kronecker(&c);
        let lhs = DMatrix::<f64>::identity(16, 16) - k;
        let mut q = DMatrix::<f64>::zeros(4, 4);
        q[(0, 0)] = 1.0;
        q[(1, 1)] = 0.5;
        let vec_g = lhs.lu().solve(&nalgebra::DVector::from_column_slice(q.as_slice())).unwrap();
        let full = DMatrix::from_column_slice(4, 4, vec_g.as_slice());
        let got = stationary_covariance(&m).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((got[(i, j)] - full[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn companion_of_var1_is_the_transition() {
        let a = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.4]);
        let m = VarModel::new(vec![a.clone()], NoiseScale::Scalar(1.0), NoiseKind::Gaussian).unwrap();
        assert_eq!(companion(&m), a);
    }

    #[test]
    fn companion_zero_lag2_scalar() {
        let z = DMatrix::zeros(1, 1);
        let m = VarModel::new(vec![z.clone(), z], NoiseScale::Scalar(1.0), NoiseKind::Gaussian).unwrap();
        assert_eq!(companion(&m), DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn rejects_malformed_models() {
        let a = DMatrix::zeros(2, 2);
        let b = DMatrix::zeros(3, 3);
        assert!(VarModel::new(vec![a.clone(), b], NoiseScale::Scalar(1.0), NoiseKind::Gaussian).is_err());
        assert!(VarModel::new(vec![], NoiseScale::Scalar(1.0), NoiseKind::Gaussian).is_err());
        assert!(VarModel::new(vec![a.clone()], NoiseScale::Scalar(-1.0), NoiseKind::Gaussian).is_err());
        assert!(VarModel::new(vec![a], NoiseScale::PerComponent(vec![1.0]), NoiseKind::Gaussian).is_err());
    }

    #[test]
    fn stationarity_examples() {
        assert!(is_stationary(&VarModel::diagonal(10, 0.8, 1.0).unwrap()));
        assert!(!is_stationary(&VarModel::diagonal(4, 1.0, 1.0).unwrap()));
        // Borderline radius inside the numerical margin is rejected.
        assert!(!is_stationary(&VarModel::diagonal(3, 1.0 - 1e-7, 1.0).unwrap()));
    }

    #[test]
    fn rescaled_dense_matrix_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = 6;
        let a = DMatrix::from_fn(p, p, |_, _| Distribution::<f64>::sample(&StandardNormal, &mut rng));
        let rho = a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let a = a * (0.95 / rho);
        let m = VarModel::new(vec![a], NoiseScale::Scalar(1.0), NoiseKind::Gaussian).unwrap();
        assert!((spectral_radius(&m) - 0.95).abs() < 1e-9);
        assert!(is_stationary(&m));
    }

    #[test]
    fn growth_rate_matches_dense_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a1 = DMatrix::from_fn(5, 5, |_, _| 0.2 * Distribution::<f64>::sample(&StandardNormal, &mut rng));
        let a2 = DMatrix::from_fn(5, 5, |_, _| 0.1 * Distribution::<f64>::sample(&StandardNormal, &mut rng));
        let m = VarModel::new(vec![a1, a2], NoiseScale::Scalar(1.0), NoiseKind::Gaussian).unwrap();
        let c = companion(&m);
        let dense = c.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((growth_rate(&c) - dense).abs() < 1e-2, "{} vs {dense}", growth_rate(&c));
    }

    /// Eigenvalues of the companion form are the inverted roots of det(I - A_1 z - A_2 z^2),
    /// i.e. the roots of det(lambda^2 I - lambda A_1 - A_2). The oracle expands that 2x2
    /// determinant into a quartic and solves it with Durand-Kerner.
    #[test]
    fn companion_eigenvalues_match_polynomial_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let a1 = DMatrix::from_fn(2, 2, |_, _| 0.5 * Distribution::<f64>::sample(&StandardNormal, &mut rng));
            let a2 = DMatrix::from_fn(2, 2, |_, _| 0.3 * Distribution::<f64>::sample(&StandardNormal, &mut rng));
            let m = VarModel::new(vec![a1.clone(), a2.clone()], NoiseScale::Scalar(1.0), NoiseKind::Gaussian)
                .unwrap();
            // entry (r, c) of lambda^2 I - lambda A_1 - A_2 as a polynomial [c0, c1, c2]
            let entry = |r: usize, c: usize| {
                let id = if r == c { 1.0 } else { 0.0 };
                vec![-a2[(r, c)], -a1[(r, c)], id]
            };
            let det = poly_sub(
                &poly_mul(&entry(0, 0), &entry(1, 1)),
                &poly_mul(&entry(0, 1), &entry(1, 0)),
            );
            let mut roots = durand_kerner(&det);
            let mut eig: Vec<C64> = companion(&m)
                .complex_eigenvalues()
                .iter()
                .map(|z| C64(z.re, z.im))
                .collect();
            sort_c(&mut roots);
            assert_eq!(roots.len(), 4);
            for r in &roots {
                let (pos, dist) = eig
                    .iter()
                    .enumerate()
                    .map(|(i, e)| (i, r.sub(*e).abs()))
                    .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
                assert!(dist < 1e-8, "root {r:?} has no matching eigenvalue in {eig:?}");
                eig.remove(pos);
            }
        }
    }

    #[test]
    fn make_jump_zero_is_identity() {
        let base = VarModel::diagonal(5, 0.8, 1.0).unwrap();
        assert_eq!(make_jump(&base, 0.0, 5, 1).unwrap(), base);
    }

    #[test]
    fn make_jump_hits_requested_norm_and_stays_stationary() {
        let base = VarModel::diagonal(10, 0.8, 1.0).unwrap();
        for seed in 0..20 {
            let new = make_jump(&base, 4.0, 10, seed).unwrap();
            assert!(is_stationary(&new));
            let dist = base
                .coefficients()
                .iter()
                .zip(new.coefficients())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!((dist - 4.0).abs() < 1e-12, "distance {dist}");
            let changed = base
                .coefficients()
                .iter()
                .zip(new.coefficients())
                .filter(|(a, b)| *a != b)
                .count();
            assert!(changed <= 10);
        }
    }

    #[test]
    fn make_jump_rejects_bad_support() {
        let base = VarModel::diagonal(2, 0.5, 1.0).unwrap();
        assert!(make_jump(&base, 1.0, 0, 1).is_err());
        assert!(make_jump(&base, 1.0, 5, 1).is_err());
    }

    #[test]
    fn make_jump_reports_exhausted_budget() {
        // Any perturbation of norm 50 on a 1x1 model is explosive.
        let base = VarModel::diagonal(1, 0.5, 1.0).unwrap();
        assert!(matches!(
            make_jump(&base, 50.0, 1, 1),
            Err(Error::RetryBudgetExhausted(_))
        ));
    }

    #[test]
    fn coefficient_layout_round_trips() {
        let a1 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let a2 = DMatrix::from_row_slice(2, 2, &[5.0, 6.0, 7.0, 8.0]);
        let m = VarModel::new(vec![a1, a2], NoiseScale::Scalar(1.0), NoiseKind::Gaussian).unwrap();
        let beta = m.coefficients();
        // target 0: lag1 row 0, lag2 row 0; target 1: lag1 row 1, lag2 row 1
        assert_eq!(beta, vec![1.0, 2.0, 5.0, 6.0, 3.0, 4.0, 7.0, 8.0]);
        let back = VarModel::from_coefficients(&beta, 2, 2, NoiseScale::Scalar(1.0), NoiseKind::Gaussian).unwrap();
        assert_eq!(back, m);
    }

    mod num_complex_oracle {
        #[derive(Debug, Clone, Copy)]
        pub struct C64(pub f64, pub f64);

        impl C64 {
            pub fn add(self, o: C64) -> C64 {
                C64(self.0 + o.0, self.1 + o.1)
            }
            pub fn sub(self, o: C64) -> C64 {
                C64(self.0 - o.0, self.1 - o.1)
            }
            pub fn mul(self, o: C64) -> C64 {
                C64(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
            }
            pub fn div(self, o: C64) -> C64 {
                let d = o.0 * o.0 + o.1 * o.1;
                C64((self.0 * o.0 + self.1 * o.1) / d, (self.1 * o.0 - self.0 * o.1) / d)
            }
            pub fn abs(self) -> f64 {
                self.0.hypot(self.1)
            }
        }

        pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
            let mut out = vec![0.0; a.len() + b.len() - 1];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        }

        pub fn poly_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
            let n = a.len().max(b.len());
            (0..n)
                .map(|i| a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0))
                .collect()
        }

        /// Roots of a monic polynomial given by ascending coefficients.
        pub fn durand_kerner(coeffs: &[f64]) -> Vec<C64> {
            let deg = coeffs.len() - 1;
            let lead = coeffs[deg];
            let eval = |z: C64| {
                let mut acc = C64(0.0, 0.0);
                for c in coeffs.iter().rev() {
                    acc = acc.mul(z).add(C64(c / lead, 0.0));
                }
                acc
            };
            let seed = C64(0.4, 0.9);
            let mut roots: Vec<C64> = (0..deg)
                .map(|i| {
                    let mut z = C64(1.0, 0.0);
                    for _ in 0..i {
                        z = z.mul(seed);
                    }
                    z
                })
                .collect();
            for _ in 0..2000 {
                let prev = roots.clone();
                for i in 0..deg {
                    let mut denom = C64(1.0, 0.0);
                    for j in 0..deg {
                        if i != j {
                            denom = denom.mul(roots[i].sub(roots[j]));
                        }
                    }
                    roots[i] = roots[i].sub(eval(roots[i]).div(denom));
                }
                if roots.iter().zip(&prev).all(|(a, b)| a.sub(*b).abs() < 1e-15) {
                    break;
                }
            }
            roots
        }

        pub fn sort_c(v: &mut [C64]) {
            v.sort_by(|a, b| {
                (a.0, a.1)
                    .partial_cmp(&(b.0, b.1))
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
        }
    }
}
