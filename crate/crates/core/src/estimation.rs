//! Plant model and the covariance recursion of the local Kalman filter.
//!
//! The remote estimator's error covariance after `m` consecutive packet
//! losses is `h^m(P̄)`, where `h(X) = A X Aᵀ + Q` is the one-step prediction
//! (Lyapunov) map and `P̄` is the steady-state a-posteriori covariance, the
//! fixed point of `g̃ ∘ h` with the measurement update
//! `g̃(X) = X − X Cᵀ (C X Cᵀ + R)⁻¹ C X`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value threshold used by the rank tests.
pub const RANK_TOL: f64 = 1e-9;
/// Default stopping tolerance of the fixed-point iteration.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default iteration budget of the fixed-point iteration.
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// Linear time-invariant plant `x_{k+1} = A x_k + w_k`, `y_k = C x_k + v_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    a: DMatrix<f64>,
    c: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    pi0: DMatrix<f64>,
}

impl SystemModel {
    /// Validates shapes, definiteness, observability of `(A, C)` and
    /// controllability of `(A, √Q)`.
    pub fn new(
        a: DMatrix<f64>,
        c: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        pi0: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::Dimension(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if c.ncols() != n || c.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "C must have {n} columns, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        let p = c.nrows();
        check_shape("Q", &q, n)?;
        check_shape("R", &r, p)?;
        check_shape("Pi0", &pi0, n)?;
        for (name, m) in [("A", &a), ("C", &c), ("Q", &q), ("R", &r), ("Pi0", &pi0)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!("{name} has non-finite entries")));
            }
        }
        require_psd("Q", &q, false)?;
        require_psd("R", &r, true)?;
        require_psd("Pi0", &pi0, false)?;

        if rank(&observability_matrix(&a, &c)) < n {
            return Err(Error::InvalidModel("(A, C) is not observable".into()));
        }
        let sqrt_q = symmetric_sqrt(&q);
        if rank(&controllability_matrix(&a, &sqrt_q)) < n {
            return Err(Error::InvalidModel("(A, sqrt(Q)) is not controllable".into()));
        }
        Ok(Self { a, c, q, r, pi0 })
    }

    /// Scalar plant with `Π₀ = 0`.
    pub fn scalar(a: f64, c: f64, q: f64, r: f64) -> Result<Self> {
        let m = |v| DMatrix::from_element(1, 1, v);
        Self::new(m(a), m(c), m(q), m(r), m(0.0))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn pi0(&self) -> &DMatrix<f64> {
        &self.pi0
    }

    /// Replaces the initial covariance, keeping the rest of the model.
    pub fn with_pi0(mut self, pi0: DMatrix<f64>) -> Result<Self> {
        check_shape("Pi0", &pi0, self.dim())?;
        require_psd("Pi0", &pi0, false)?;
        self.pi0 = pi0;
        Ok(self)
    }

    /// `h(X) = A X Aᵀ + Q`.
    pub fn lyapunov_step(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        lyapunov(&self.a, &self.q, x)
    }

    /// `g̃(X) = X − X Cᵀ (C X Cᵀ + R)⁻¹ C X`.
    pub fn riccati_step(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        riccati(&self.c, &self.r, x)
    }

    /// Spectral radius of `A`.
    pub fn spectral_radius(&self) -> f64 {
        self.a
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

fn check_shape(name: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension(format!(
            "{name} must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn require_psd(name: &str, m: &DMatrix<f64>, strict: bool) -> Result<()> {
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-9 * scale {
        return Err(Error::InvalidModel(format!("{name} is not symmetric")));
    }
    let sym = (m + m.transpose()) * 0.5;
    let min_eig = sym.symmetric_eigenvalues().min();
    if strict && min_eig <= 1e-12 * scale {
        return Err(Error::InvalidModel(format!(
            "{name} is not positive definite (min eigenvalue {min_eig:e})"
        )));
    }
    if !strict && min_eig < -1e-9 * scale {
        return Err(Error::InvalidModel(format!(
            "{name} is not positive semidefinite (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(())
}

/// Numerical rank with a singular-value cut at `RANK_TOL · σ_max`.
pub fn rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// `[C; CA; …; CA^{n-1}]`
pub fn observability_matrix(a: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let p = c.nrows();
    let mut out = DMatrix::zeros(p * n, n);
    let mut block = c.clone();
    for k in 0..n {
        out.view_mut((k * p, 0), (p, n)).copy_from(&block);
        block = &block * a;
    }
    out
}

/// `[B, AB, …, A^{n-1}B]`
pub fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let k = b.ncols();
    let mut out = DMatrix::zeros(n, k * n);
    let mut block = b.clone();
    for j in 0..n {
        out.view_mut((0, j * k), (n, k)).copy_from(&block);
        block = a * &block;
    }
    out
}

/// Principal square root of a symmetric PSD matrix.
pub fn symmetric_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = ((m + m.transpose()) * 0.5).symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// `A X Aᵀ + Q`, symmetrized.
pub fn lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if x.shape() != (n, n) || q.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "lyapunov step expects {n}x{n} operands, got X {:?}, Q {:?}",
            x.shape(),
            q.shape()
        )));
    }
    Ok(symmetrize(a * x * a.transpose() + q))
}

/// `X − X Cᵀ (C X Cᵀ + R)⁻¹ C X`, symmetrized.
pub fn riccati(c: &DMatrix<f64>, r: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = c.ncols();
    let p = c.nrows();
    if x.shape() != (n, n) || r.shape() != (p, p) {
        return Err(Error::Dimension(format!(
            "riccati step expects X {n}x{n} and R {p}x{p}, got X {:?}, R {:?}",
            x.shape(),
            r.shape()
        )));
    }
    let xc = x * c.transpose();
    let s = c * &xc + r;
    let s_inv = s
        .clone()
        .cholesky()
        .map(|ch| ch.inverse())
        .or_else(|| s.try_inverse())
        .ok_or_else(|| Error::InvalidModel("C X Cᵀ + R is singular".into()))?;
    Ok(symmetrize(x - &xc * s_inv * xc.transpose()))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Steady-state covariance and the holding-time trace table derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadySummary {
    /// Steady-state a-posteriori covariance `P̄`, row-major.
    pub p_bar: Vec<Vec<f64>>,
    /// Spectral radius of `A`.
    pub rho_a: f64,
    /// Entry `m` is `Tr[h^m(P̄)]`, for `m = 0..=tau_max`.
    pub trace_table: Vec<f64>,
    /// Number of fixed-point iterations used.
    pub iterations: usize,
    /// `‖g̃(h(P̄)) − P̄‖` (max-abs entry) at the returned point.
    pub residual: f64,
}

impl SteadySummary {
    pub fn p_bar_matrix(&self) -> DMatrix<f64> {
        let n = self.p_bar.len();
        DMatrix::from_fn(n, n, |i, j| self.p_bar[i][j])
    }

    pub fn tau_max(&self) -> usize {
        self.trace_table.len() - 1
    }

    /// `Tr[h^m(P̄)]`.
    pub fn holding_time_trace(&self, m: usize) -> Result<f64> {
        self.trace_table.get(m).copied().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "holding time {m} exceeds the tabulated range 0..={}",
                self.tau_max()
            ))
        })
    }

    /// `1 − 1/ρ(A)²`: the packet arrival rate must exceed this for the
    /// expected estimation error covariance to stay bounded.
    pub fn boundedness_threshold(&self) -> f64 {
        1.0 - 1.0 / (self.rho_a * self.rho_a)
    }
}

/// Iterates `P ← g̃(h(P))` from `Π₀` until successive iterates differ by at
/// most `tol`, then tabulates `Tr[h^m(P̄)]` for `m ≤ tau_max`.
pub fn steady_state_covariance(
    model: &SystemModel,
    tol: f64,
    max_iter: usize,
    tau_max: usize,
) -> Result<SteadySummary> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let fixed_map = |p: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        model.riccati_step(&model.lyapunov_step(p)?)
    };
    let mut p = model.pi0.clone();
    let mut last_step = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let next = fixed_map(&p)?;
        last_step = (&next - &p).amax();
        p = next;
        iterations += 1;
        if !last_step.is_finite() {
            break;
        }
        if last_step <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations,
            last_step,
        });
    }
    let residual = (&fixed_map(&p)? - &p).amax();

    let mut trace_table = Vec::with_capacity(tau_max + 1);
    let mut cov = p.clone();
    trace_table.push(cov.trace());
    for _ in 0..tau_max {
        cov = model.lyapunov_step(&cov)?;
        trace_table.push(cov.trace());
    }

    let n = p.nrows();
    Ok(SteadySummary {
        p_bar: (0..n).map(|i| (0..n).map(|j| p[(i, j)]).collect()).collect(),
        rho_a: model.spectral_radius(),
        trace_table,
        iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    // Positive root of 0.7056 P² + 0.04 P − 0.64 = 0, obtained by writing
    // g̃(h(P)) = P out for the scalar plant A=1.2, C=0.7, Q=R=0.8.
    fn quadratic_root() -> f64 {
        let (a, b, c) = (0.7056_f64, 0.04_f64, -0.64_f64);
        (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
    }

    #[test]
    fn quadratic_oracle_matches_fixed_point_equation() {
        let p = quadratic_root();
        assert!((p - 0.9245).abs() < 1e-4, "{p}");
        // Substitute back into the scalar operators by hand.
        let x = 1.44 * p + 0.8;
        let back = x - x * x * 0.49 / (0.49 * x + 0.8);
        assert!((back - p).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_examples() {
        let model = SystemModel::scalar(1.2, 0.7, 0.8, 0.8).unwrap();
        let y = model.lyapunov_step(&scalar(0.0)).unwrap();
        assert!((y[(0, 0)] - 0.8).abs() < 1e-15);

        let eye = DMatrix::<f64>::identity(3, 3);
        let zero = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(lyapunov(&eye, &zero, &eye).unwrap(), eye);

        let p = quadratic_root();
        let y = model.lyapunov_step(&scalar(p)).unwrap()[(0, 0)];
        assert!((y - (1.44 * p + 0.8)).abs() < 1e-12);
        assert!((y - 2.1313).abs() < 1e-4);
    }

    #[test]
    fn riccati_examples() {
        let one = scalar(1.0);
        assert_eq!(riccati(&one, &one, &scalar(0.0)).unwrap()[(0, 0)], 0.0);
        assert!((riccati(&one, &one, &one).unwrap()[(0, 0)] - 0.5).abs() < 1e-15);

        let p = quadratic_root();
        let x = 1.44 * p + 0.8;
        let g = riccati(&scalar(0.7), &scalar(0.8), &scalar(x)).unwrap()[(0, 0)];
        assert!((g - p).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let model = SystemModel::scalar(1.2, 0.7, 0.8, 0.8).unwrap();
        let bad = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(model.lyapunov_step(&bad), Err(Error::Dimension(_))));
        assert!(matches!(model.riccati_step(&bad), Err(Error::Dimension(_))));
    }

    #[test]
    fn steady_state_scalar_default_plant() {
        let model = SystemModel::scalar(1.2, 0.7, 0.8, 0.8).unwrap();
        let s = steady_state_covariance(&model, DEFAULT_TOL, DEFAULT_MAX_ITER, 4).unwrap();
        assert!((s.p_bar[0][0] - quadratic_root()).abs() < 1e-10);
        assert!((s.holding_time_trace(0).unwrap() - quadratic_root()).abs() < 1e-10);
        assert!((s.holding_time_trace(1).unwrap() - 2.1313).abs() < 1e-4);
        assert!((s.rho_a - 1.2).abs() < 1e-12);
        assert!((s.boundedness_threshold() - (1.0 - 1.0 / 1.44)).abs() < 1e-12);
        assert!((s.boundedness_threshold() - 0.30556).abs() < 1e-5);
        assert!(s.holding_time_trace(5).is_err());
        assert!(s.residual <= 10.0 * DEFAULT_TOL);
    }

    #[test]
    fn zero_dynamics_gives_one_measurement_update() {
        let model = SystemModel::scalar(0.0, 0.7, 0.5, 0.3).unwrap();
        let s = steady_state_covariance(&model, DEFAULT_TOL, DEFAULT_MAX_ITER, 2).unwrap();
        let expected = riccati(&scalar(0.7), &scalar(0.3), &scalar(0.5)).unwrap()[(0, 0)];
        assert!((s.p_bar[0][0] - expected).abs() < 1e-14);
    }

    #[test]
    fn fixed_point_independent_of_initial_covariance() {
        let tol = 1e-12;
        let base = SystemModel::scalar(1.2, 0.7, 0.8, 0.8).unwrap();
        let from_zero = steady_state_covariance(&base, tol, DEFAULT_MAX_ITER, 0).unwrap();
        let high = base.with_pi0(scalar(10.0)).unwrap();
        let from_ten = steady_state_covariance(&high, tol, DEFAULT_MAX_ITER, 0).unwrap();
        assert!((from_zero.p_bar[0][0] - from_ten.p_bar[0][0]).abs() <= 2.0 * tol);
    }

    #[test]
    fn iterates_from_zero_are_nondecreasing() {
        let model = SystemModel::scalar(1.2, 0.7, 0.8, 0.8).unwrap();
        let mut p = scalar(0.0);
        for _ in 0..50 {
            let next = model.riccati_step(&model.lyapunov_step(&p).unwrap()).unwrap();
            assert!(next[(0, 0)] >= p[(0, 0)]);
            p = next;
        }
    }

    #[test]
    fn multivariate_plant_and_trace_table() {
        let a = DMatrix::from_row_slice(2, 2, &[1.1, 0.2, 0.0, 0.9]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let q = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.4]);
        let r = scalar(0.3);
        let model = SystemModel::new(a, c, q, r, DMatrix::zeros(2, 2)).unwrap();
        let s = steady_state_covariance(&model, 1e-12, DEFAULT_MAX_ITER, 6).unwrap();
        let p = s.p_bar_matrix();
        let fixed = model.riccati_step(&model.lyapunov_step(&p).unwrap()).unwrap();
        assert!((&fixed - &p).amax() <= 1e-11);
        // riccati output is below its input in the PSD order
        let hp = model.lyapunov_step(&p).unwrap();
        let diff = &hp - model.riccati_step(&hp).unwrap();
        assert!(diff.symmetric_eigenvalues().min() >= -1e-12);
        // trace table = repeated lyapunov composition
        let mut cov = p.clone();
        for m in 0..=6 {
            assert!((s.trace_table[m] - cov.trace()).abs() < 1e-12);
            cov = model.lyapunov_step(&cov).unwrap();
        }
        assert!(s.trace_table.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_invalid_models() {
        // unobservable: C = 0
        assert!(SystemModel::scalar(1.2, 0.0, 0.8, 0.8).is_err());
        // R not PD
        assert!(SystemModel::scalar(1.2, 0.7, 0.8, 0.0).is_err());
        // Q not PSD
        assert!(SystemModel::scalar(1.2, 0.7, -0.8, 0.8).is_err());
        // uncontrollable: Q = 0
        assert!(SystemModel::scalar(1.2, 0.7, 0.0, 0.8).is_err());
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let q = DMatrix::identity(2, 2);
        let err = SystemModel::new(a, c, q, scalar(1.0), DMatrix::zeros(2, 2)).unwrap_err();
        assert!(err.to_string().contains("observable"));
    }

    #[test]
    fn threshold_signs() {
        let unit = SystemModel::scalar(1.0, 1.0, 1.0, 1.0).unwrap();
        let s = steady_state_covariance(&unit, 1e-12, DEFAULT_MAX_ITER, 1).unwrap();
        assert!(s.boundedness_threshold().abs() < 1e-12);
        let stable = SystemModel::scalar(0.5, 1.0, 1.0, 1.0).unwrap();
        let s = steady_state_covariance(&stable, 1e-12, DEFAULT_MAX_ITER, 1).unwrap();
        assert!(s.boundedness_threshold() < 0.0);
    }
}
