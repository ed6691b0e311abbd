//! Slow, independent reference solvers for small instances, plus the
//! two-objective Pareto study.
//!
//! Nothing here shares code with the ADMM path: the grid search enumerates
//! the unit sphere through polar angles and the multistart descent is plain
//! projected gradient, so agreement between the two families is meaningful
//! evidence of correctness.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::frame::unstack;
use crate::metrics::{hpa_clip, papr, to_db};
use crate::model::{derive_seed, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    GridPolar,
    ProjectedDescentMultistart,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_x: Vec<Complex64>,
    pub best_objective: f64,
    pub method: OracleMethod,
    /// Number of candidate evaluations spent.
    pub evaluations: u64,
}

/// Angular resolution for the polar grid, chosen by stacked dimension so the
/// point count (res^(d−1)) stays near 10⁷: 64³ for d=4, 20⁵ for d=6, 10⁷
/// for d=8.
fn grid_resolution(dim: usize) -> Option<usize> {
    match dim {
        0..=4 => Some(64),
        5 | 6 => Some(20),
        7 | 8 => Some(10),
        _ => None,
    }
}

/// Worst-case objective gap attributable to the grid's angular spacing: the
/// nearest grid point to any sphere point lies within the half-diagonal of
/// an angular cell, and the objective is Lipschitz with constant ≤ 4 on the
/// sphere (both arguments within distance 2 of the anchor).
pub fn grid_slack(dim: usize) -> f64 {
    let res = grid_resolution(dim).unwrap_or(10);
    let mut sum_sq = 0.0;
    for _ in 0..dim.saturating_sub(2) {
        sum_sq += (std::f64::consts::PI / (res - 1) as f64).powi(2);
    }
    sum_sq += (2.0 * std::f64::consts::PI / res as f64).powi(2);
    let h = 0.5 * sum_sq.sqrt();
    4.0 * h + h * h
}

struct Constraints<'a> {
    xbar0: &'a [f64],
    eta: f64,
    epsilon: f64,
    nl: usize,
}

impl Constraints<'_> {
    fn cap(&self) -> f64 {
        (self.eta / self.nl as f64).sqrt()
    }

    /// Largest constraint violation: sphere, ball, per-sample caps.
    fn violation(&self, x: &[f64]) -> f64 {
        let nl = self.nl;
        let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut worst = (norm - 1.0).abs();
        let dist = x
            .iter()
            .zip(self.xbar0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(dist - self.epsilon);
        let cap = self.cap();
        for n in 0..nl {
            let m = (x[n] * x[n] + x[nl + n] * x[nl + n]).sqrt();
            worst = worst.max(m - cap);
        }
        worst
    }

    /// Cyclic projection onto sphere ∩ ball ∩ caps.
    fn project(&self, x: &mut [f64]) {
        let nl = self.nl;
        let cap = self.cap();
        for _ in 0..2000 {
            let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 {
                for a in x.iter_mut() {
                    *a /= norm;
                }
            } else {
                x.copy_from_slice(self.xbar0);
            }
            let dist = x
                .iter()
                .zip(self.xbar0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist > self.epsilon {
                let t = if dist > 0.0 { self.epsilon / dist } else { 0.0 };
                for (a, b) in x.iter_mut().zip(self.xbar0) {
                    *a = b + (*a - b) * t;
                }
            }
            for n in 0..nl {
                let m = (x[n] * x[n] + x[nl + n] * x[nl + n]).sqrt();
                if m > cap {
                    x[n] *= cap / m;
                    x[nl + n] *= cap / m;
                }
            }
            if self.violation(x) < 1e-12 {
                break;
            }
        }
    }
}

fn polar_grid_search(
    dim: usize,
    res: usize,
    cons: &Constraints,
    obj: &dyn Fn(&[f64]) -> f64,
) -> (Option<(Vec<f64>, f64)>, u64) {
    // Polar parameterization: angles 0..d-2 span [0, π]; the last spans
    // [0, 2π). Recursion carries the running product of sines.
    fn rec(
        level: usize,
        prefix: f64,
        x: &mut [f64],
        res: usize,
        cons: &Constraints,
        obj: &dyn Fn(&[f64]) -> f64,
        best: &mut Option<(Vec<f64>, f64)>,
        evals: &mut u64,
    ) {
        let d = x.len();
        if level == d - 2 {
            for j in 0..res {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / res as f64;
                x[d - 2] = prefix * theta.cos();
                x[d - 1] = prefix * theta.sin();
                *evals += 1;
                if cons.violation(x) <= 1e-9 {
                    let f = obj(x);
                    if best.as_ref().map_or(true, |(_, b)| f < *b) {
                        *best = Some((x.to_vec(), f));
                    }
                }
            }
            return;
        }
        for j in 0..res {
            let theta = std::f64::consts::PI * j as f64 / (res - 1) as f64;
            x[level] = prefix * theta.cos();
            rec(level + 1, prefix * theta.sin(), x, res, cons, obj, best, evals);
        }
    }

    let mut best = None;
    let mut evals = 0;
    let mut x = vec![0.0; dim];
    rec(0, 1.0, &mut x, res, cons, obj, &mut best, &mut evals);
    (best, evals)
}

#[allow(clippy::too_many_arguments)]
fn multistart_descent(
    dim: usize,
    n_starts: usize,
    seed: u64,
    cons: &Constraints,
    obj: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64], &mut [f64]),
    anchor: &[f64],
) -> (Option<(Vec<f64>, f64)>, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evals = 0u64;

    for start in 0..n_starts + 2 {
        let mut x: Vec<f64> = match start {
            0 => cons.xbar0.to_vec(),
            1 => anchor.to_vec(),
            _ => (0..dim).map(|_| normal.sample(&mut rng)).collect(),
        };
        cons.project(&mut x);

        let mut tau = 0.25;
        let mut g = vec![0.0; dim];
        for _ in 0..250 {
            grad(&x, &mut g);
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= tau * gi;
            }
            cons.project(&mut x);
            evals += 1;
            tau *= 0.98;
        }
        if cons.violation(&x) <= 1e-9 {
            let f = obj(&x);
            if best.as_ref().map_or(true, |(_, b)| f < *b) {
                best = Some((x, f));
            }
        }
    }
    (best, evals)
}

fn oracle_dispatch(
    scenario: &Scenario,
    eta: f64,
    epsilon: f64,
    obj: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64], &mut [f64]),
    anchor: &[f64],
) -> Result<OracleResult> {
    if !(eta >= 1.0) {
        return Err(Error::InvalidParameter(format!("eta {eta} must be >= 1")));
    }
    if !(0.0..=2.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must lie in [0, 2]")));
    }
    let nl = scenario.nl();
    let dim = 2 * nl;
    let xbar0 = scenario.x0().real_stack();
    let cons = Constraints { xbar0: &xbar0, eta, epsilon, nl };

    let (multi, multi_evals) = multistart_descent(
        dim,
        100,
        derive_seed(scenario.rng_seed(), 0x0bac1e),
        &cons,
        obj,
        grad,
        anchor,
    );
    let mut evaluations = multi_evals;
    let mut best = multi.map(|(x, f)| (x, f, OracleMethod::ProjectedDescentMultistart));

    if let Some(res) = grid_resolution(dim) {
        let (grid, grid_evals) = polar_grid_search(dim, res, &cons, obj);
        evaluations += grid_evals;
        if let Some((x, f)) = grid {
            if best.as_ref().map_or(true, |(_, b, _)| f < *b) {
                best = Some((x, f, OracleMethod::GridPolar));
            }
        }
    }

    match best {
        Some((x, f, method)) => Ok(OracleResult {
            best_x: unstack(&x),
            best_objective: f,
            method,
            evaluations,
        }),
        None => Err(Error::Infeasible(format!(
            "no feasible point found for eta {eta}, epsilon {epsilon}"
        ))),
    }
}

/// Reference solution of the constrained design problem on a small instance:
/// polar-grid enumeration (when 2NL ≤ 8) cross-checked against 100-start
/// projected gradient descent, returning whichever found the lower feasible
/// objective.
pub fn oracle_solve(scenario: &Scenario, eta: f64, epsilon: f64) -> Result<OracleResult> {
    let xc = scenario.x_comm().real_stack();
    let obj = {
        let xc = xc.clone();
        move |x: &[f64]| -> f64 {
            x.iter().zip(&xc).map(|(a, b)| (a - b) * (a - b)).sum()
        }
    };
    let grad = {
        let xc = xc.clone();
        move |x: &[f64], g: &mut [f64]| {
            for i in 0..x.len() {
                g[i] = 2.0 * (x[i] - xc[i]);
            }
        }
    };
    oracle_dispatch(scenario, eta, epsilon, &obj, &grad, &xc)
}

/// Reference solution for the robust surrogate objective
/// `(‖x − x̃_comm‖ + σ′_Δ‖x‖)²` with σ′_Δ = σ_Δ/‖H̃‖_F.
pub fn oracle_solve_robust(
    scenario: &Scenario,
    eta: f64,
    epsilon: f64,
    sigma_delta: f64,
) -> Result<OracleResult> {
    if sigma_delta < 0.0 {
        return Err(Error::InvalidParameter(format!("sigma_delta {sigma_delta} < 0")));
    }
    let hf = scenario.h().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let sp = sigma_delta / hf;
    let xc = scenario.x_comm().real_stack();
    let obj = {
        let xc = xc.clone();
        move |x: &[f64]| crate::robust::robust_objective(x, &xc, sp)
    };
    let grad = {
        let xc = xc.clone();
        move |x: &[f64], g: &mut [f64]| {
            let a = x.iter().zip(&xc).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            let b = x.iter().map(|p| p * p).sum::<f64>().sqrt();
            for i in 0..x.len() {
                let mut v = 2.0 * (x[i] - xc[i]) + 2.0 * sp * sp * x[i];
                if a >= 1e-12 {
                    v += 2.0 * sp * b / a * (x[i] - xc[i]);
                }
                if b >= 1e-12 {
                    v += 2.0 * sp * a / b * x[i];
                }
                g[i] = v;
            }
        }
    };
    oracle_dispatch(scenario, eta, epsilon, &obj, &grad, &xc)
}

// ------------------------------------------------------------- Pareto ----

/// One scalarization outcome: both objectives plus the PAPR it lands on.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub weight: f64,
    /// `‖HX − S‖_F²`.
    pub mui_energy: f64,
    /// `‖x − x0‖`.
    pub similarity: f64,
    pub papr_db: f64,
}

/// The three trade-off families, each filtered to its non-dominated set.
#[derive(Debug, Clone)]
pub struct ParetoStudy {
    /// Closed-form scalarization with no PAPR handling.
    pub unconstrained: Vec<ParetoPoint>,
    /// The same solutions hard-clipped at each cap, keyed by cap.
    pub clipped: Vec<(f64, Vec<ParetoPoint>)>,
    /// PAPR-constrained scalarization, keyed by cap.
    pub constrained: Vec<(f64, Vec<ParetoPoint>)>,
}

/// 32 log-spaced scalarization weights over [1e-3, 1e3].
pub fn default_weight_grid() -> Vec<f64> {
    (0..32).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 31.0)).collect()
}

/// Drop every point that another point weakly dominates (≤ in both
/// coordinates, < in at least one); exact duplicates keep one copy.
pub fn non_dominated(points: Vec<ParetoPoint>) -> Vec<ParetoPoint> {
    let mut keep = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let le = q.mui_energy <= p.mui_energy && q.similarity <= p.similarity;
            let lt = q.mui_energy < p.mui_energy || q.similarity < p.similarity;
            if le && (lt || j < i) {
                continue 'outer;
            }
        }
        keep.push(p.clone());
    }
    keep
}

fn evaluate_point(
    scenario: &Scenario,
    weight: f64,
    x: &DMatrix<Complex64>,
) -> Result<ParetoPoint> {
    let mui = scenario.h() * x - scenario.s();
    let x0 = scenario.x0().to_matrix();
    let diff = x - &x0;
    Ok(ParetoPoint {
        weight,
        mui_energy: mui.iter().map(|z| z.norm_sqr()).sum(),
        similarity: diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        papr_db: to_db(papr(x.as_slice())?),
    })
}

/// Trade-off sweep between communication cost and chirp similarity.
///
/// For each weight w the scalarized problem `min ‖HX−S‖² + w‖X−X0‖²` is
/// solved three ways: in closed form with PAPR ignored; closed form followed
/// by a hard clip at each cap in `eta_values`; and with the PAPR cap imposed
/// during the optimization (operator splitting whose projection step is the
/// iterated clip). Each family is reduced to its non-dominated set.
pub fn pareto_sweep(
    scenario: &Scenario,
    eta_values: &[f64],
    weight_grid: &[f64],
) -> Result<ParetoStudy> {
    if weight_grid.is_empty() {
        return Err(Error::InvalidParameter("empty weight grid".into()));
    }
    for &w in weight_grid {
        if !(w > 0.0) {
            return Err(Error::InvalidParameter(format!("weight {w} must be > 0")));
        }
    }
    for &eta in eta_values {
        if !(eta >= 1.0) {
            return Err(Error::InvalidParameter(format!("eta {eta} must be >= 1")));
        }
    }
    let h = scenario.h();
    let s = scenario.s();
    let x0 = scenario.x0().to_matrix();
    let n = scenario.n_antennas();
    let hh = h.adjoint() * h;
    let hs = h.adjoint() * s;

    let mut unconstrained = Vec::new();
    let mut clipped: Vec<(f64, Vec<ParetoPoint>)> =
        eta_values.iter().map(|&e| (e, Vec::new())).collect();
    let mut constrained: Vec<(f64, Vec<ParetoPoint>)> =
        eta_values.iter().map(|&e| (e, Vec::new())).collect();

    for &w in weight_grid {
        let wc = Complex64::new(w, 0.0);
        let a = &hh + DMatrix::<Complex64>::identity(n, n) * wc;
        let chol = a
            .cholesky()
            .ok_or_else(|| Error::RankDeficient("scalarized normal matrix".into()))?;
        let x_closed = chol.solve(&(&hs + &x0 * wc));
        unconstrained.push(evaluate_point(scenario, w, &x_closed)?);

        for (eta, front) in &mut clipped {
            let c = hpa_clip(x_closed.as_slice(), *eta)?;
            let xc = DMatrix::from_column_slice(n, scenario.n_samples(), &c);
            front.push(evaluate_point(scenario, w, &xc)?);
        }

        for (eta, front) in &mut constrained {
            let x = constrained_scalarized(scenario, &hh, &hs, &x0, &x_closed, w, *eta)?;
            front.push(evaluate_point(scenario, w, &x)?);
        }
    }

    Ok(ParetoStudy {
        unconstrained: non_dominated(unconstrained),
        clipped: clipped.into_iter().map(|(e, f)| (e, non_dominated(f))).collect(),
        constrained: constrained.into_iter().map(|(e, f)| (e, non_dominated(f))).collect(),
    })
}

/// `min ‖HX−S‖² + w‖X−X0‖²  s.t. PAPR(vec X) ≤ η` by operator splitting:
/// quadratic X-step in closed form, splitting variable projected by the
/// iterated clip (the PAPR set is scale free, so clipping at the adapted
/// threshold is the natural projection), dual ascent on the difference.
///
/// The cap set is nonconvex, so the splitting can stall on a poor stationary
/// point. Iteration starts from the clipped closed-form solution and the
/// best feasible iterate by scalarized objective is kept, so the result is
/// never worse than the plain clip at the same weight.
fn constrained_scalarized(
    scenario: &Scenario,
    hh: &DMatrix<Complex64>,
    hs: &DMatrix<Complex64>,
    x0: &DMatrix<Complex64>,
    x_closed: &DMatrix<Complex64>,
    w: f64,
    eta: f64,
) -> Result<DMatrix<Complex64>> {
    let n = scenario.n_antennas();
    let l = scenario.n_samples();
    let rho = 1.0;
    let a = hh * Complex64::new(2.0, 0.0)
        + DMatrix::<Complex64>::identity(n, n) * Complex64::new(2.0 * w + rho, 0.0);
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("scalarized splitting matrix".into()))?;
    let rhs_fixed = hs * Complex64::new(2.0, 0.0) + x0 * Complex64::new(2.0 * w, 0.0);

    let scalarized = |z: &DMatrix<Complex64>| -> f64 {
        let mui = scenario.h() * z - scenario.s();
        let diff = z - x0;
        mui.iter().map(|v| v.norm_sqr()).sum::<f64>()
            + w * diff.iter().map(|v| v.norm_sqr()).sum::<f64>()
    };

    let mut z = DMatrix::from_column_slice(n, l, &hpa_clip(x_closed.as_slice(), eta)?);
    let mut u = DMatrix::<Complex64>::zeros(n, l);
    let mut best = z.clone();
    let mut best_value = scalarized(&z);
    for _ in 0..4000 {
        let x = chol.solve(&(&rhs_fixed + (&z - &u) * Complex64::new(rho, 0.0)));
        let y = &x + &u;
        let zc = hpa_clip(y.as_slice(), eta)?;
        z = DMatrix::from_column_slice(n, l, &zc);
        u += &x - &z;
        let value = scalarized(&z);
        if value < best_value {
            best_value = value;
            best = z.clone();
        }
        let gap: f64 = (&x - &z).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if gap < 1e-12 {
            break;
        }
    }
    // Every candidate passed through the clip, so the result is feasible.
    Ok(best)
}
