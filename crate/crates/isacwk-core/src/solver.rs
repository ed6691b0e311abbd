//! ADMM solver for the similarity- and PAPR-constrained waveform problem.
//!
//! The problem is posed over the real stacking `x̄ = [Re(x); Im(x)]` of the
//! vectorized frame:
//!
//! ```text
//! minimize   ‖x̄ − x̄_comm‖²
//! subject to ‖x̄‖² = 1,
//!            x̄[n]² + x̄[NL+n]² ≤ η/(NL)   for n = 0..NL,
//!            ‖x̄ − x̄0‖ ≤ ε.
//! ```
//!
//! Splitting variables α (sphere), β (ball) and γ_n (per-sample caps) carry
//! one constraint each; scaled duals u, v, w_n close the loop. Every update
//! has a closed form, so one iteration costs Θ(NL): the per-sample cap
//! couples only the real/imaginary parts of one sample, and the γ_n, w_n
//! vectors are stored as `NL` (re, im) pairs rather than as full-length
//! vectors that are zero everywhere else.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frame::{unstack, WaveformFrame};
use crate::metrics::{metric_report, papr, to_db, MetricReport};
use crate::model::Scenario;

/// Tuning knobs of the ADMM loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Penalty weight ρ on the splitting residuals.
    pub rho: f64,
    /// PAPR cap η, linear (≥ 1; 1 forces constant modulus).
    pub eta: f64,
    /// Similarity radius ε ∈ [0, 2] around the reference chirp.
    pub epsilon: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Early-exit threshold on max(‖e‖, aux step).
    pub primal_tol: f64,
    /// Consecutive sub-threshold iterations required before the early exit
    /// fires. Zero disables the early exit and the loop always runs
    /// `max_iter` iterations.
    pub stall_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 0.1,
            eta: crate::metrics::from_db(9.0),
            epsilon: 1.85,
            max_iter: 2000,
            primal_tol: 1e-10,
            stall_window: 20,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::InvalidParameter(format!("rho {} must be > 0", self.rho)));
        }
        if !(self.eta >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta {} must be >= 1 (PAPR is never below 1)",
                self.eta
            )));
        }
        if !(0.0..=2.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} must lie in [0, 2]",
                self.epsilon
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        if !(self.primal_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "primal_tol {} must be > 0",
                self.primal_tol
            )));
        }
        Ok(())
    }
}

/// All loop variables at one iteration.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// Primal iterate, real stacking, length 2NL.
    pub xbar: Vec<f64>,
    /// Sphere splitting variable, length 2NL.
    pub alpha: Vec<f64>,
    /// Ball splitting variable (offset from x̄0), length 2NL.
    pub beta: Vec<f64>,
    /// Per-sample cap variables, one (re, im) pair per sample.
    pub gamma: Vec<[f64; 2]>,
    /// Dual for the sphere constraint, length 2NL.
    pub u: Vec<f64>,
    /// Dual for the ball constraint, length 2NL.
    pub v: Vec<f64>,
    /// Duals for the per-sample caps, one pair per sample.
    pub w: Vec<[f64; 2]>,
    /// Iterations completed.
    pub iter: usize,
    /// Per-iteration residual traces.
    pub history: ConvergenceDiagnostics,
}

impl SolverState {
    /// All-zeros start for a frame of `nl` samples.
    pub fn new(nl: usize) -> Self {
        SolverState {
            xbar: vec![0.0; 2 * nl],
            alpha: vec![0.0; 2 * nl],
            beta: vec![0.0; 2 * nl],
            gamma: vec![[0.0; 2]; nl],
            u: vec![0.0; 2 * nl],
            v: vec![0.0; 2 * nl],
            w: vec![[0.0; 2]; nl],
            iter: 0,
            history: ConvergenceDiagnostics::default(),
        }
    }

    pub fn nl(&self) -> usize {
        self.gamma.len()
    }
}

/// Per-iteration traces; every vector has one entry per iteration run.
#[derive(Debug, Clone, Default)]
pub struct ConvergenceDiagnostics {
    /// ‖e‖ with e the stacked feasibility gap (see [`drift`]).
    pub drift_norm: Vec<f64>,
    /// ‖(α,β,γ) step‖ between consecutive iterations.
    pub aux_step_norm: Vec<f64>,
    /// (ρ/2)·(‖e‖² + aux_step²), the summable convergence certificate.
    pub a_m: Vec<f64>,
    /// Objective ‖x̄ − x̄_comm‖² (linear, not dB).
    pub objective: Vec<f64>,
    /// PAPR of the iterate, dB.
    pub papr_db: Vec<f64>,
    /// Distance ‖x̄ − x̄0‖ to the reference chirp.
    pub similarity: Vec<f64>,
    /// Inner fixed-point iterations per outer iteration; populated only by
    /// the robust solver.
    pub inner_iters_used: Vec<usize>,
}

impl ConvergenceDiagnostics {
    pub fn len(&self) -> usize {
        self.drift_norm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drift_norm.is_empty()
    }
}

/// Everything a solve returns.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    /// Final waveform after the feasibility projection.
    pub waveform: WaveformFrame,
    /// Last ADMM iterate before that projection.
    pub raw_waveform: WaveformFrame,
    pub diagnostics: ConvergenceDiagnostics,
    /// Metrics of `waveform`.
    pub metrics: MetricReport,
    /// Metrics of `raw_waveform`.
    pub raw_metrics: MetricReport,
    pub iterations: usize,
    /// Whether the drift criterion fired before `max_iter`.
    pub converged: bool,
}

#[inline]
fn pair(xbar: &[f64], nl: usize, n: usize) -> [f64; 2] {
    [xbar[n], xbar[nl + n]]
}

/// Minimizer of the augmented Lagrangian in x̄ with all other variables
/// frozen:
///
/// `x̄ = (2x̄_comm − u − v − scatter(w) + ρ(α + x̄0 + β + scatter(γ))) / (2+3ρ)`
///
/// where `scatter` places pair n at slots (n, NL+n). The 2+3ρ denominator
/// uses the fact that the per-sample selections sum to the identity.
pub fn update_x(
    state: &SolverState,
    config: &SolverConfig,
    xbar_comm: &[f64],
    xbar0: &[f64],
) -> Vec<f64> {
    let nl = state.nl();
    let rho = config.rho;
    let denom = 2.0 + 3.0 * rho;
    let mut out = vec![0.0; 2 * nl];
    for i in 0..2 * nl {
        let n = if i < nl { i } else { i - nl };
        let part = if i < nl { 0 } else { 1 };
        let w_i = state.w[n][part];
        let g_i = state.gamma[n][part];
        out[i] = (2.0 * xbar_comm[i] - state.u[i] - state.v[i] - w_i
            + rho * (state.alpha[i] + xbar0[i] + state.beta[i] + g_i))
            / denom;
    }
    out
}

/// Projection of `x̄ + u/ρ` onto the unit sphere. Errors on a (measure-zero)
/// zero argument; the solve loop keeps the previous α in that case.
pub fn update_alpha(xbar_new: &[f64], u: &[f64], rho: f64) -> Result<Vec<f64>> {
    let mut t: Vec<f64> = xbar_new.iter().zip(u).map(|(x, ui)| x + ui / rho).collect();
    let norm = t.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm < 1e-14 {
        return Err(Error::Degenerate(
            "sphere projection of a zero vector is undefined".into(),
        ));
    }
    for a in &mut t {
        *a /= norm;
    }
    Ok(t)
}

/// Projection of `x̄ − x̄0 + v/ρ` onto the ε-ball around the origin.
pub fn update_beta(
    xbar_new: &[f64],
    xbar0: &[f64],
    v: &[f64],
    rho: f64,
    epsilon: f64,
) -> Vec<f64> {
    let mut t: Vec<f64> = xbar_new
        .iter()
        .zip(xbar0)
        .zip(v)
        .map(|((x, x0), vi)| x - x0 + vi / rho)
        .collect();
    let norm = t.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > epsilon {
        let scale = if norm > 0.0 { epsilon / norm } else { 0.0 };
        for a in &mut t {
            *a *= scale;
        }
    }
    t
}

/// Per-sample disc projections: each candidate pair `pair_n(x̄) + w_n/ρ` is
/// kept if inside the radius `√(η/NL)` disc and radially clipped otherwise.
pub fn update_gamma(xbar_new: &[f64], w: &[[f64; 2]], rho: f64, eta: f64) -> Vec<[f64; 2]> {
    let nl = w.len();
    let radius = (eta / nl as f64).sqrt();
    let mut out = Vec::with_capacity(nl);
    for n in 0..nl {
        let mut c = [
            xbar_new[n] + w[n][0] / rho,
            xbar_new[nl + n] + w[n][1] / rho,
        ];
        let m = (c[0] * c[0] + c[1] * c[1]).sqrt();
        if m > radius {
            c[0] *= radius / m;
            c[1] *= radius / m;
        }
        out.push(c);
    }
    out
}

/// Dual ascent with step size ρ on every splitting residual. Returns the new
/// (u, v, w) without touching the state.
#[allow(clippy::type_complexity)]
pub fn update_duals(
    state: &SolverState,
    xbar_new: &[f64],
    alpha_new: &[f64],
    beta_new: &[f64],
    gamma_new: &[[f64; 2]],
    rho: f64,
    xbar0: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<[f64; 2]>) {
    let nl = state.nl();
    let u = state
        .u
        .iter()
        .zip(xbar_new)
        .zip(alpha_new)
        .map(|((ui, x), a)| ui + rho * (x - a))
        .collect();
    let v = state
        .v
        .iter()
        .zip(xbar_new)
        .zip(xbar0)
        .zip(beta_new)
        .map(|(((vi, x), x0), b)| vi + rho * (x - x0 - b))
        .collect();
    let w = (0..nl)
        .map(|n| {
            let p = pair(xbar_new, nl, n);
            [
                state.w[n][0] + rho * (p[0] - gamma_new[n][0]),
                state.w[n][1] + rho * (p[1] - gamma_new[n][1]),
            ]
        })
        .collect();
    (u, v, w)
}

/// Stacked feasibility gap `e = (x̄ − α, x̄ − x̄0 − β, pairs(x̄) − γ)` and its
/// norm. All three splitting residuals vanish exactly when the iterate sits
/// on every constraint set simultaneously.
pub fn drift(state: &SolverState, xbar: &[f64], xbar0: &[f64]) -> (Vec<f64>, f64) {
    let nl = state.nl();
    let mut e = Vec::with_capacity(6 * nl);
    for i in 0..2 * nl {
        e.push(xbar[i] - state.alpha[i]);
    }
    for i in 0..2 * nl {
        e.push(xbar[i] - xbar0[i] - state.beta[i]);
    }
    for n in 0..nl {
        let p = pair(xbar, nl, n);
        e.push(p[0] - state.gamma[n][0]);
        e.push(p[1] - state.gamma[n][1]);
    }
    let norm = e.iter().map(|a| a * a).sum::<f64>().sqrt();
    (e, norm)
}

/// One x̄-step: returns the new iterate and, for the robust solver, how many
/// inner fixed-point iterations it spent.
pub(crate) type XStep<'a> = dyn FnMut(&SolverState) -> Result<(Vec<f64>, Option<usize>)> + 'a;

/// The shared ADMM loop. `objective_target` is the point whose squared
/// distance is reported as the objective trace (the precoded target for the
/// nominal solver, its robust surrogate for the robust one).
pub(crate) fn run_loop(
    scenario: &Scenario,
    config: &SolverConfig,
    objective_target: &[f64],
    x_step: &mut XStep,
) -> Result<SolveOutput> {
    config.validate()?;
    let nl = scenario.nl();
    let xbar0 = scenario.x0().real_stack();
    let mut state = SolverState::new(nl);
    let mut streak = 0usize;
    let mut converged = false;

    while state.iter < config.max_iter {
        let (x_new, inner) = x_step(&state)?;
        if x_new.iter().any(|a| !a.is_finite()) {
            return Err(Error::Diverged { iter: state.iter });
        }
        let alpha_new = match update_alpha(&x_new, &state.u, config.rho) {
            Ok(a) => a,
            Err(_) => state.alpha.clone(), // keep the previous projection
        };
        let beta_new = update_beta(&x_new, &xbar0, &state.v, config.rho, config.epsilon);
        let gamma_new = update_gamma(&x_new, &state.w, config.rho, config.eta);
        let (u, v, w) =
            update_duals(&state, &x_new, &alpha_new, &beta_new, &gamma_new, config.rho, &xbar0);

        let mut aux_sq = 0.0f64;
        for i in 0..2 * nl {
            aux_sq += (alpha_new[i] - state.alpha[i]).powi(2)
                + (beta_new[i] - state.beta[i]).powi(2);
        }
        for n in 0..nl {
            aux_sq += (gamma_new[n][0] - state.gamma[n][0]).powi(2)
                + (gamma_new[n][1] - state.gamma[n][1]).powi(2);
        }
        let aux_step = aux_sq.sqrt();

        state.xbar = x_new;
        state.alpha = alpha_new;
        state.beta = beta_new;
        state.gamma = gamma_new;
        state.u = u;
        state.v = v;
        state.w = w;
        state.iter += 1;

        let (_, drift_norm) = drift(&state, &state.xbar, &xbar0);
        let objective: f64 = state
            .xbar
            .iter()
            .zip(objective_target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let similarity: f64 = state
            .xbar
            .iter()
            .zip(&xbar0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let iterate = unstack(&state.xbar);
        let papr_db_now = papr(&iterate).map(to_db).unwrap_or(f64::NAN);

        state.history.drift_norm.push(drift_norm);
        state.history.aux_step_norm.push(aux_step);
        state
            .history
            .a_m
            .push(config.rho / 2.0 * (drift_norm * drift_norm + aux_step * aux_step));
        state.history.objective.push(objective);
        state.history.papr_db.push(papr_db_now);
        state.history.similarity.push(similarity);
        if let Some(p) = inner {
            state.history.inner_iters_used.push(p);
        }

        if config.stall_window > 0 {
            if drift_norm.max(aux_step) < config.primal_tol {
                streak += 1;
                if streak >= config.stall_window {
                    converged = true;
                    break;
                }
            } else {
                streak = 0;
            }
        }
    }

    let raw = WaveformFrame::from_real_stack(scenario.n_antennas(), scenario.n_samples(), &state.xbar)?;
    let projected = project_feasible(&raw, config.eta)?;
    Ok(SolveOutput {
        metrics: metric_report(scenario, &projected)?,
        raw_metrics: metric_report(scenario, &raw)?,
        waveform: projected,
        raw_waveform: raw,
        diagnostics: state.history,
        iterations: state.iter,
        converged,
    })
}

/// Final feasibility projection: alternate unit-norm scaling with
/// per-sample clipping at `√(η/NL)` until the PAPR cap holds. Each clip can
/// only shrink the norm, so rescaling inflates the peak by a factor that
/// tends to 1 and the alternation reaches a joint fixed point quickly.
pub fn project_feasible(frame: &WaveformFrame, eta: f64) -> Result<WaveformFrame> {
    let nl = frame.len();
    let cap = (eta / nl as f64).sqrt();
    let mut data: Vec<Complex64> = frame.vec().to_vec();
    let norm: f64 = data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return Err(Error::Degenerate("cannot project the zero frame onto the sphere".into()));
    }
    // At eta = 1 the cap forces constant modulus and the alternation converges
    // geometrically, so give it a generous round budget; each round is O(NL).
    // The loop always ends on a rescale, keeping the norm exactly 1.
    let mut rounds = 0;
    loop {
        let norm: f64 = data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut data {
            *z /= norm;
        }
        let peak = data.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if peak <= cap * (1.0 + 1e-9) || rounds >= 20_000 {
            break;
        }
        for z in &mut data {
            let m = z.norm();
            if m > cap {
                *z *= cap / m;
            }
        }
        rounds += 1;
    }
    WaveformFrame::from_vec(frame.n_antennas(), frame.n_samples(), data)
}

/// Run the ADMM loop on a scenario: round-robin updates of x̄, α, β, γ and
/// the duals from the all-zeros start, stopping at `max_iter` or once
/// max(‖e‖, aux step) stays below `primal_tol` for `stall_window`
/// consecutive iterations.
pub fn solve(scenario: &Scenario, config: &SolverConfig) -> Result<SolveOutput> {
    let xbar_comm = scenario.x_comm().real_stack();
    let xbar0 = scenario.x0().real_stack();
    let cfg = config.clone();
    let mut step = |state: &SolverState| -> Result<(Vec<f64>, Option<usize>)> {
        Ok((update_x(state, &cfg, &xbar_comm, &xbar0), None))
    };
    run_loop(scenario, config, &xbar_comm, &mut step)
}
