//! Imperfect-CSI variant of the solver.
//!
//! With only a channel estimate `H̃` available and the true channel known to
//! lie within `‖Δ‖_F ≤ σ_Δ` of it, the communication cost is replaced by the
//! worst-case surrogate
//!
//! ```text
//! g(x) = (‖x − x̃_comm‖ + σ′_Δ·‖x‖)²,   σ′_Δ = σ_Δ / ‖H̃‖_F,
//! ```
//!
//! whose x-update no longer has a closed form. The minimizer is found by a
//! short fixed-point iteration; every other ADMM step is untouched.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::frame::WaveformFrame;
use crate::model::{zf_precode, Scenario};
use crate::solver::{run_loop, SolveOutput, SolverConfig, SolverState};

/// Norm guard below which the σ′_Δ correction terms are dropped (their
/// factor is the gradient of a norm, which admits 0 as a subgradient at 0).
const NORM_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RobustConfig {
    pub base: SolverConfig,
    /// Worst-case CSI error norm σ_Δ (linear, ≥ 0).
    pub sigma_delta: f64,
    /// Budget for the inner fixed-point iteration.
    pub inner_iters: usize,
    /// Inner exit threshold on ‖x̄_(p+1) − x̄_(p)‖.
    pub inner_tol: f64,
}

impl Default for RobustConfig {
    fn default() -> Self {
        RobustConfig {
            base: SolverConfig::default(),
            sigma_delta: 0.0,
            inner_iters: 50,
            inner_tol: 1e-10,
        }
    }
}

impl RobustConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.sigma_delta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_delta {} must be >= 0",
                self.sigma_delta
            )));
        }
        if self.inner_iters == 0 {
            return Err(Error::InvalidParameter("inner_iters must be >= 1".into()));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "inner_tol {} must be > 0",
                self.inner_tol
            )));
        }
        Ok(())
    }
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Unit-norm precoded target against the channel estimate, and the
/// normalized uncertainty σ′_Δ = σ_Δ/‖H̃‖_F it implies.
pub fn robust_target(
    h_est: &DMatrix<Complex64>,
    s: &DMatrix<Complex64>,
    sigma_delta: f64,
) -> Result<(WaveformFrame, f64)> {
    if sigma_delta < 0.0 {
        return Err(Error::InvalidParameter(format!("sigma_delta {sigma_delta} < 0")));
    }
    let hf = frobenius(h_est);
    if hf <= 0.0 {
        return Err(Error::Degenerate("channel estimate is identically zero".into()));
    }
    let zf = zf_precode(h_est, s)?;
    Ok((zf.frame, sigma_delta / hf))
}

/// Worst-case surrogate objective `(‖x − x̃_comm‖ + σ′_Δ‖x‖)²` on real
/// stacks.
pub fn robust_objective(xbar: &[f64], xtilde: &[f64], sigma_prime: f64) -> f64 {
    let a = xbar
        .iter()
        .zip(xtilde)
        .map(|(x, t)| (x - t) * (x - t))
        .sum::<f64>()
        .sqrt();
    let b = xbar.iter().map(|x| x * x).sum::<f64>().sqrt();
    (a + sigma_prime * b).powi(2)
}

/// Fixed-point x-update for the robust surrogate.
///
/// Iterates `x̄_(p+1) = φ(x̄_(p)) / (2 + 3ρ + 2σ′²_Δ)` from `x̄_(0) = 0`,
/// where φ is the nominal update numerator built around `x̃_comm` minus the
/// correction `2σ′_Δ·[(‖x‖/‖x−x̃‖)(x−x̃) + (‖x−x̃‖/‖x‖)x]`; a correction term
/// whose denominator is below the guard is dropped for that iterate. Returns
/// the iterate and the number of inner iterations spent.
pub fn robust_update_x(
    state: &SolverState,
    config: &RobustConfig,
    sigma_prime: f64,
    xtilde: &[f64],
    xbar0: &[f64],
) -> Result<(Vec<f64>, usize)> {
    let nl = state.nl();
    let dim = 2 * nl;
    let rho = config.base.rho;
    let denom = 2.0 + 3.0 * rho + 2.0 * sigma_prime * sigma_prime;

    let mut base = vec![0.0; dim];
    for i in 0..dim {
        let n = if i < nl { i } else { i - nl };
        let part = if i < nl { 0 } else { 1 };
        base[i] = 2.0 * xtilde[i] - state.u[i] - state.v[i] - state.w[n][part]
            + rho * (state.alpha[i] + xbar0[i] + state.beta[i] + state.gamma[n][part]);
    }

    if sigma_prime == 0.0 {
        let x: Vec<f64> = base.iter().map(|b| b / denom).collect();
        return finite_or_diverged(x, state.iter).map(|x| (x, 1));
    }

    let mut x = vec![0.0; dim];
    let mut used = 0;
    for _ in 0..config.inner_iters {
        let a = x
            .iter()
            .zip(xtilde)
            .map(|(xi, t)| (xi - t) * (xi - t))
            .sum::<f64>()
            .sqrt();
        let b = x.iter().map(|xi| xi * xi).sum::<f64>().sqrt();
        let mut next = vec![0.0; dim];
        let mut step_sq = 0.0;
        for i in 0..dim {
            let mut corr = 0.0;
            if a >= NORM_GUARD {
                corr += b / a * (x[i] - xtilde[i]);
            }
            if b >= NORM_GUARD {
                corr += a / b * x[i];
            }
            next[i] = (base[i] - 2.0 * sigma_prime * corr) / denom;
            step_sq += (next[i] - x[i]) * (next[i] - x[i]);
        }
        x = finite_or_diverged(next, state.iter)?;
        used += 1;
        if step_sq.sqrt() < config.inner_tol {
            break;
        }
    }
    Ok((x, used))
}

fn finite_or_diverged(x: Vec<f64>, iter: usize) -> Result<Vec<f64>> {
    if x.iter().any(|a| !a.is_finite()) {
        return Err(Error::Diverged { iter });
    }
    Ok(x)
}

/// The full robust solve: the nominal ADMM loop with [`robust_update_x`]
/// substituted for the x-step. With σ_Δ = 0 it reduces exactly to
/// [`crate::solver::solve`].
pub fn robust_solve(scenario: &Scenario, config: &RobustConfig) -> Result<SolveOutput> {
    config.validate()?;
    let hf = frobenius(scenario.h());
    if hf <= 0.0 {
        return Err(Error::Degenerate("channel estimate is identically zero".into()));
    }
    let sigma_prime = config.sigma_delta / hf;
    let xtilde = scenario.x_comm().real_stack();
    let xbar0 = scenario.x0().real_stack();
    let cfg = config.clone();
    let mut step = |state: &SolverState| {
        robust_update_x(state, &cfg, sigma_prime, &xtilde, &xbar0).map(|(x, p)| (x, Some(p)))
    };
    run_loop(scenario, &config.base, &xtilde, &mut step)
}

/// CSI error draw for evaluation: i.i.d. circularly-symmetric Gaussian
/// entries rescaled so ‖Δ‖_F equals `sigma_delta` exactly (errors live on
/// the worst-case norm surface, matching the norm-bounded model).
pub fn sample_csi_error(
    k_users: usize,
    n_antennas: usize,
    sigma_delta: f64,
    seed: u64,
) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut delta = DMatrix::from_fn(k_users, n_antennas, |_, _| {
        let re: f64 = normal.sample(&mut rng);
        let im: f64 = normal.sample(&mut rng);
        Complex64::new(re, im)
    });
    let norm = frobenius(&delta);
    if norm > 0.0 {
        delta *= Complex64::new(sigma_delta / norm, 0.0);
    }
    delta
}
