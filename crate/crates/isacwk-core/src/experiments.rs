//! Declarative Monte-Carlo studies.
//!
//! An [`ExperimentSpec`] (usually loaded from a TOML file) names one of the
//! canned study kinds, the scenario family, solver settings, sweep axes and
//! a base seed. [`run`] executes the trials — in parallel, but with a
//! deterministic merge so the resulting [`ResultTable`] depends only on the
//! spec — and [`emit`]/[`emit_plot_data`] persist the table as CSV, JSON or
//! long-format plot data.
//!
//! Trial `t` of a study uses scenario seed `base_seed + t`, so sweep points
//! share channels and symbols (common random numbers across the axis).

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::WaveformFrame;
use crate::metrics::{
    ambiguity, ccdf, from_db, pulse_compression, ser, surface_xcorr, to_db, Window,
};
use crate::model::{derive_seed, ChirpKind, Constellation, Scenario};
use crate::oracle::{default_weight_grid, pareto_sweep};
use crate::robust::{robust_solve, sample_csi_error, RobustConfig};
use crate::solver::{solve, SolverConfig};

/// The canned study kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Received-symbol scatter per similarity radius.
    ConstellationVsEpsilon,
    /// Mean objective trace per iteration for each PAPR cap.
    CostConvergence,
    /// Empirical PAPR exceedance curves.
    PaprCcdf,
    /// Mean iterate PAPR per iteration.
    PaprVsIter,
    /// Average achievable rate across the similarity sweep.
    SumRateTradeoff,
    /// Matched-filter range profile of designed waveforms.
    PulseCompression,
    /// Symbol error rate vs SNR, nominal and robust arms.
    SerVsSnr,
    /// Delay–Doppler surfaces of designed waveform vs reference.
    Ambiguity,
    /// Communication/similarity trade-off fronts.
    ParetoSweep,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::ConstellationVsEpsilon => "constellation-vs-epsilon",
            ExperimentKind::CostConvergence => "cost-convergence",
            ExperimentKind::PaprCcdf => "papr-ccdf",
            ExperimentKind::PaprVsIter => "papr-vs-iter",
            ExperimentKind::SumRateTradeoff => "sum-rate-tradeoff",
            ExperimentKind::PulseCompression => "pulse-compression",
            ExperimentKind::SerVsSnr => "ser-vs-snr",
            ExperimentKind::Ambiguity => "ambiguity",
            ExperimentKind::ParetoSweep => "pareto-sweep",
        }
    }
}

fn default_trials() -> usize {
    100
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub constellation: Constellation,
    #[serde(default = "default_chirp")]
    pub chirp: ChirpKind,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
}

fn default_chirp() -> ChirpKind {
    ChirpKind::OrthogonalLfm
}

fn default_snr() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// PAPR cap, linear. Mutually exclusive with `eta_db`.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub eta_db: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_primal_tol")]
    pub primal_tol: f64,
    /// 0 disables the early exit (every trial runs `max_iter` iterations).
    #[serde(default)]
    pub stall_window: usize,
}

fn default_rho() -> f64 {
    0.1
}

fn default_epsilon() -> f64 {
    1.85
}

fn default_max_iter() -> usize {
    1000
}

fn default_primal_tol() -> f64 {
    1e-10
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            rho: default_rho(),
            eta: None,
            eta_db: None,
            epsilon: default_epsilon(),
            max_iter: default_max_iter(),
            primal_tol: default_primal_tol(),
            stall_window: 0,
        }
    }
}

fn resolve_eta(eta: Option<f64>, eta_db: Option<f64>, what: &str) -> Result<Option<f64>> {
    match (eta, eta_db) {
        (Some(_), Some(_)) => Err(Error::InvalidSpec(format!(
            "{what}: eta and eta_db are mutually exclusive"
        ))),
        (Some(e), None) => Ok(Some(e)),
        (None, Some(db)) => Ok(Some(from_db(db))),
        (None, None) => Ok(None),
    }
}

impl SolverSpec {
    pub fn config(&self) -> Result<SolverConfig> {
        let eta = resolve_eta(self.eta, self.eta_db, "solver")?.unwrap_or_else(|| from_db(9.0));
        let cfg = SolverConfig {
            rho: self.rho,
            eta,
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            primal_tol: self.primal_tol,
            stall_window: self.stall_window,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustSpec {
    #[serde(default)]
    pub sigma_delta: Option<f64>,
    #[serde(default)]
    pub sigma_delta_db: Option<f64>,
    #[serde(default = "default_inner_iters")]
    pub inner_iters: usize,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
}

fn default_inner_iters() -> usize {
    50
}

fn default_inner_tol() -> f64 {
    1e-10
}

impl RobustSpec {
    pub fn sigma(&self) -> Result<f64> {
        match (self.sigma_delta, self.sigma_delta_db) {
            (Some(_), Some(_)) => Err(Error::InvalidSpec(
                "robust: sigma_delta and sigma_delta_db are mutually exclusive".into(),
            )),
            (Some(s), None) => Ok(s),
            (None, Some(db)) => Ok(from_db(db)),
            (None, None) => Ok(0.0),
        }
    }
}

/// Sweep axes; each kind reads the axes it needs and ignores the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub epsilon: Option<Vec<f64>>,
    #[serde(default)]
    pub eta: Option<Vec<f64>>,
    #[serde(default)]
    pub eta_db: Option<Vec<f64>>,
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
    #[serde(default)]
    pub snr_db: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma_db: Option<Vec<f64>>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarSpec {
    /// Antenna row used for pulse compression.
    #[serde(default)]
    pub antenna: usize,
    #[serde(default)]
    pub max_lag: Option<usize>,
    #[serde(default)]
    pub doppler: Option<Vec<f64>>,
    /// "taylor" or "rectangular".
    #[serde(default = "default_window")]
    pub window: String,
    #[serde(default = "default_nbar")]
    pub taylor_nbar: usize,
    #[serde(default = "default_sll")]
    pub taylor_sll_db: f64,
}

fn default_window() -> String {
    "taylor".into()
}

fn default_nbar() -> usize {
    4
}

fn default_sll() -> f64 {
    35.0
}

impl Default for RadarSpec {
    fn default() -> Self {
        RadarSpec {
            antenna: 0,
            max_lag: None,
            doppler: None,
            window: default_window(),
            taylor_nbar: default_nbar(),
            taylor_sll_db: default_sll(),
        }
    }
}

impl RadarSpec {
    fn window(&self) -> Result<Window> {
        match self.window.as_str() {
            "rectangular" => Ok(Window::Rectangular),
            "taylor" => Ok(Window::Taylor { nbar: self.taylor_nbar, sll_db: self.taylor_sll_db }),
            other => Err(Error::InvalidSpec(format!("unknown window {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStat {
    Min,
    Max,
    Mean,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckOp {
    Le,
    Ge,
}

/// A pass/fail predicate over one result column, usable as an acceptance
/// gate inside a spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecCheck {
    pub column: String,
    pub stat: CheckStat,
    pub op: CheckOp,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub description: String,
    pub actual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub spec_version: u32,
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub robust: Option<RobustSpec>,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub radar: RadarSpec,
    #[serde(default)]
    pub checks: Vec<SpecCheck>,
    /// Average dB quantities in the linear domain (true) or directly in dB.
    #[serde(default = "default_true")]
    pub aggregate_linear: bool,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<ExperimentSpec> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<ExperimentSpec> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.spec_version != 1 {
            return Err(Error::InvalidSpec(format!(
                "unsupported spec_version {} (expected 1)",
                self.spec_version
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be >= 1".into()));
        }
        self.solver.config()?;
        if let Some(r) = &self.robust {
            let s = r.sigma()?;
            if s < 0.0 {
                return Err(Error::InvalidSpec("sigma_delta must be >= 0".into()));
            }
        }
        if self.sweep.eta.is_some() && self.sweep.eta_db.is_some() {
            return Err(Error::InvalidSpec(
                "sweep.eta and sweep.eta_db are mutually exclusive".into(),
            ));
        }
        let need = |axis: &Option<Vec<f64>>, name: &str| -> Result<()> {
            match axis {
                Some(v) if !v.is_empty() => Ok(()),
                _ => Err(Error::InvalidSpec(format!(
                    "{} requires a nonempty sweep.{name}",
                    self.kind.name()
                ))),
            }
        };
        match self.kind {
            ExperimentKind::ConstellationVsEpsilon | ExperimentKind::Ambiguity => {
                need(&self.sweep.epsilon, "epsilon")?
            }
            ExperimentKind::SumRateTradeoff => need(&self.sweep.epsilon, "epsilon")?,
            ExperimentKind::SerVsSnr => need(&self.sweep.snr_db, "snr_db")?,
            ExperimentKind::ParetoSweep => {
                if self.sweep.eta.as_ref().map_or(true, |v| v.is_empty())
                    && self.sweep.eta_db.as_ref().map_or(true, |v| v.is_empty())
                {
                    return Err(Error::InvalidSpec(
                        "pareto-sweep requires sweep.eta or sweep.eta_db".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// One table cell: a number or a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Text(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Text(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Text(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub kind: ExperimentKind,
    /// FNV-1a hash of the spec's canonical TOML serialization.
    pub spec_hash: String,
    pub seed: u64,
    pub code_version: String,
    pub diverged_trials: u64,
    /// Full spec echo for provenance.
    pub spec: ExperimentSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub metadata: TableMetadata,
}

impl ResultTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column_values(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::InvalidSpec(format!("no column named {name:?}")))?;
        self.rows
            .iter()
            .map(|r| {
                r[idx]
                    .as_f64()
                    .ok_or_else(|| Error::InvalidSpec(format!("column {name:?} is not numeric")))
            })
            .collect()
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn spec_hash(spec: &ExperimentSpec) -> Result<String> {
    Ok(format!("{:016x}", fnv1a(spec.to_toml()?.as_bytes())))
}

// ----------------------------------------------------------- execution ----

struct Ctx<'a> {
    spec: &'a ExperimentSpec,
    base: SolverConfig,
}

impl Ctx<'_> {
    fn scenario(&self, trial: u64, snr_db: f64) -> Result<Scenario> {
        let s = &self.spec.scenario;
        Scenario::generate(
            s.n,
            s.k,
            s.l,
            s.constellation,
            &s.chirp,
            snr_db,
            self.spec.seed.wrapping_add(trial),
        )
    }

    /// Mean of dB-valued samples under the spec's aggregation switch.
    fn mean_db(&self, samples_db: &[f64]) -> f64 {
        if samples_db.is_empty() {
            return f64::NAN;
        }
        if self.spec.aggregate_linear {
            let lin = samples_db.iter().map(|&d| from_db(d)).sum::<f64>() / samples_db.len() as f64;
            to_db(lin.max(1e-300))
        } else {
            samples_db.iter().sum::<f64>() / samples_db.len() as f64
        }
    }

    fn eta_axis(&self) -> Result<Vec<(f64, f64)>> {
        match (&self.spec.sweep.eta, &self.spec.sweep.eta_db) {
            (Some(_), Some(_)) => Err(Error::InvalidSpec(
                "sweep.eta and sweep.eta_db are mutually exclusive".into(),
            )),
            (Some(v), None) => Ok(v.iter().map(|&e| (e, to_db(e))).collect()),
            (None, Some(v)) => Ok(v.iter().map(|&db| (from_db(db), db)).collect()),
            (None, None) => Ok(vec![(self.base.eta, to_db(self.base.eta))]),
        }
    }
}

/// Run trials in parallel, merge by trial index, count diverged trials
/// instead of failing on them.
fn run_trials<T: Send>(
    trials: usize,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<(Vec<T>, u64)> {
    let results: Vec<Result<T>> = (0..trials as u64).into_par_iter().map(f).collect();
    let mut ok = Vec::with_capacity(trials);
    let mut diverged = 0u64;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(Error::Diverged { iter }) => {
                log::warn!("trial diverged at iteration {iter}; excluded from aggregation");
                diverged += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((ok, diverged))
}

/// Execute a study and return its table.
pub fn run(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let ctx = Ctx { spec, base: spec.solver.config()? };
    let (columns, rows, diverged) = match spec.kind {
        ExperimentKind::ConstellationVsEpsilon => run_constellation(&ctx)?,
        ExperimentKind::CostConvergence => run_cost_convergence(&ctx)?,
        ExperimentKind::PaprCcdf => run_papr_ccdf(&ctx)?,
        ExperimentKind::PaprVsIter => run_papr_vs_iter(&ctx)?,
        ExperimentKind::SumRateTradeoff => run_sum_rate(&ctx)?,
        ExperimentKind::PulseCompression => run_pulse_compression(&ctx)?,
        ExperimentKind::SerVsSnr => run_ser_vs_snr(&ctx)?,
        ExperimentKind::Ambiguity => run_ambiguity(&ctx)?,
        ExperimentKind::ParetoSweep => run_pareto(&ctx)?,
    };
    Ok(ResultTable {
        columns,
        rows,
        metadata: TableMetadata {
            kind: spec.kind,
            spec_hash: spec_hash(spec)?,
            seed: spec.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            diverged_trials: diverged,
            spec: spec.clone(),
        },
    })
}

type Body = (Vec<String>, Vec<Vec<Value>>, u64);

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn epsilon_axis(ctx: &Ctx) -> Vec<f64> {
    ctx.spec
        .sweep
        .epsilon
        .clone()
        .unwrap_or_else(|| vec![ctx.base.epsilon])
}

fn run_constellation(ctx: &Ctx) -> Result<Body> {
    let mut rows = Vec::new();
    let mut diverged = 0;
    for &eps in &epsilon_axis(ctx) {
        let cfg = SolverConfig { epsilon: eps, ..ctx.base.clone() };
        let (per_trial, d) = run_trials(ctx.spec.trials, |t| {
            let sc = ctx.scenario(t, ctx.spec.scenario.snr_db)?;
            let out = solve(&sc, &cfg)?;
            // Receiver-side view at the raw constellation scale.
            let y = sc.h() * out.waveform.to_matrix() * Complex64::from(sc.zf_scale());
            let mut pts = Vec::with_capacity(y.len());
            for l in 0..y.ncols() {
                for k in 0..y.nrows() {
                    pts.push((k, l, y[(k, l)]));
                }
            }
            Ok(pts)
        })?;
        diverged += d;
        for (t, pts) in per_trial.iter().enumerate() {
            for (k, l, z) in pts {
                rows.push(vec![
                    Value::Num(eps),
                    Value::Num(t as f64),
                    Value::Num(*k as f64),
                    Value::Num(*l as f64),
                    Value::Num(z.re),
                    Value::Num(z.im),
                ]);
            }
        }
    }
    Ok((cols(&["epsilon", "trial", "user", "sample", "re", "im"]), rows, diverged))
}

fn run_cost_convergence(ctx: &Ctx) -> Result<Body> {
    let mut rows = Vec::new();
    let mut diverged = 0;
    for (eta_lin, eta_db) in ctx.eta_axis()? {
        // Fixed-length histories: the early exit is disabled so every trial
        // contributes to every iteration's mean.
        let cfg = SolverConfig { eta: eta_lin, stall_window: 0, ..ctx.base.clone() };
        let (histories, d) = run_trials(ctx.spec.trials, |t| {
            let sc = ctx.scenario(t, ctx.spec.scenario.snr_db)?;
            Ok(solve(&sc, &cfg)?.diagnostics.objective)
        })?;
        diverged += d;
        if histories.is_empty() {
            continue;
        }
        for it in 0..cfg.max_iter {
            let mean_lin =
                histories.iter().map(|h| h[it]).sum::<f64>() / histories.len() as f64;
            let mean_db = if ctx.spec.aggregate_linear {
                to_db(mean_lin.max(1e-300))
            } else {
                let dbs: Vec<f64> =
                    histories.iter().map(|h| to_db(h[it].max(1e-300))).collect();
                dbs.iter().sum::<f64>() / dbs.len() as f64
            };
            rows.push(vec![
                Value::Num(eta_db),
                Value::Num((it + 1) as f64),
                Value::Num(mean_db),
            ]);
        }
    }
    Ok((cols(&["eta_db", "iter", "mean_objective_db"]), rows, diverged))
}

fn default_gamma_grid() -> Vec<f64> {
    (0..=40).map(|i| i as f64 * 0.25).collect()
}

fn run_papr_ccdf(ctx: &Ctx) -> Result<Body> {
    let rhos = ctx.spec.sweep.rho.clone().unwrap_or_else(|| vec![ctx.base.rho]);
    let gammas = ctx.spec.sweep.gamma_db.clone().unwrap_or_else(default_gamma_grid);
    let mut rows = Vec::new();
    let mut diverged = 0;
    for &rho in &rhos {
        for (eta_lin, eta_db) in ctx.eta_axis()? {
            let cfg = SolverConfig { eta: eta_lin, rho, ..ctx.base.clone() };
            let (paprs, d) = run_trials(ctx.spec.trials, |t| {
                let sc = ctx.scenario(t, ctx.spec.scenario.snr_db)?;
                let out = solve(&sc, &cfg)?;
                Ok((out.raw_metrics.papr_db, out.metrics.papr_db))
            })?;
            diverged += d;
            let raw: Vec<f64> = paprs.iter().map(|p| p.0).collect();
            let proj: Vec<f64> = paprs.iter().map(|p| p.1).collect();
            let curve_raw = ccdf(&raw, &gammas);
            let curve_proj = ccdf(&proj, &gammas);
            for (i, &(g, c_raw)) in curve_raw.iter().enumerate() {
                rows.push(vec![
                    Value::Num(eta_db),
                    Value::Num(rho),
                    Value::Num(g),
                    Value::Num(c_raw),
                    Value::Num(curve_proj[i].1),
                ]);
            }
        }
    }
    Ok((cols(&["eta_db", "rho", "gamma_db", "ccdf_raw", "ccdf_projected"]), rows, diverged))
}

fn run_papr_vs_iter(ctx: &Ctx) -> Result<Body> {
    let mut rows = Vec::new();
    let mut diverged = 0;
    for (eta_lin, eta_db) in ctx.eta_axis()? {
        let cfg = SolverConfig { eta: eta_lin, stall_window: 0, ..ctx.base.clone() };
        let (histories, d) = run_trials(ctx.spec.trials, |t| {
            let sc = ctx.scenario(t, ctx.spec.scenario.snr_db)?;
            Ok(solve(&sc, &cfg)?.diagnostics.papr_db)
        })?;
        diverged += d;
        if histories.is_empty() {
            continue;
        }
        for it in 0..cfg.max_iter {
            let samples: Vec<f64> = histories.iter().map(|h| h[it]).collect();
            rows.push(vec![
                Value::Num(eta_db),
                Value::Num((it + 1) as f64),
                Value::Num(ctx.mean_db(&samples)),
            ]);
        }
    }
    Ok((cols(&["eta_db", "iter", "mean_papr_db"]), rows, diverged))
}

fn run_sum_rate(ctx: &Ctx) -> Result<Body> {
    let snrs = ctx
        .spec
        .sweep
        .snr_db
        .clone()
        .unwrap_or_else(|| vec![ctx.spec.scenario.snr_db]);
    let epsilons = ctx
        .spec
        .sweep
        .epsilon
        .clone()
        .ok_or_else(|| Error::InvalidSpec("sum-rate-tradeoff requires sweep.epsilon".into()))?;
    let mut rows = Vec::new();
    let mut diverged = 0;
    for &snr in &snrs {
        for (eta_lin, _) in ctx.eta_axis()? {
            for &eps in &epsilons {
                let cfg = SolverConfig { eta: eta_lin, epsilon: eps, ..ctx.base.clone() };
                let (rates, d) = run_trials(ctx.spec.trials, |t| {
                    let sc = ctx.scenario(t, snr)?;
                    Ok(solve(&sc, &cfg)?.metrics.sum_rate)
                })?;
                diverged += d;
                let mean = rates.iter().sum::<f64>() / rates.len().max(1) as f64;
                rows.push(vec![
                    Value::Num(snr),
                    Value::Num(eta_lin),
                    Value::Num(eps),
                    Value::Num(mean),
                ]);
            }
        }
    }
    Ok((cols(&["snr_db", "eta", "epsilon", "mean_sum_rate_bits"]), rows, diverged))
}

fn run_pulse_compression(ctx: &Ctx) -> Result<Body> {
    let window = ctx.spec.radar.window()?;
    let row = ctx.spec.radar.antenna;
    if row >= ctx.spec.scenario.n {
        return Err(Error::InvalidSpec(format!(
            "radar.antenna {row} out of range for {} antennas",
            ctx.spec.scenario.n
        )));
    }
    let mut rows = Vec::new();
    let mut diverged = 0;
    for &eps in &epsilon_axis(ctx) {
        let cfg = SolverConfig { epsilon: eps, ..ctx.base.clone() };
        let (profiles, d) = run_trials(ctx.spec.trials, |t| {
            let sc = ctx.scenario(t, ctx.spec.scenario.snr_db)?;
            let out = solve(&sc, &cfg)?;
            let designed =
                pulse_compression(&out.waveform.row(row), &sc.x0().row(row), &window)?;
            let reference = pulse_compression(&sc.x0().row(row), &sc.x0().row(row), &window)?;
            Ok((designed, reference))
        })?;
        diverged += d;
        if profiles.is_empty() {
            continue;
        }
        let l = profiles[0].0.len();
        for lag in 0..l {
            let designed: Vec<f64> = profiles.iter().map(|p| p.0[lag]).collect();
            let reference: Vec<f64> = profiles.iter().map(|p| p.1[lag]).collect();
            rows.push(vec![
                Value::Num(eps),
                Value::Num(lag as f64),
                Value::Num(ctx.mean_db(&designed)),
                Value::Num(ctx.mean_db(&reference)),
            ]);
        }
    }
    Ok((cols(&["epsilon", "lag", "designed_db", "reference_db"]), rows, diverged))
}

fn run_ser_vs_snr(ctx: &Ctx) -> Result<Body> {
    let snrs = ctx
        .spec
        .sweep
        .snr_db
        .clone()
        .ok_or_else(|| Error::InvalidSpec("ser-vs-snr requires sweep.snr_db".into()))?;
    let (sigma, robust_cfg) = match &ctx.spec.robust {
        Some(r) => {
            let s = r.sigma()?;
            (
                s,
                Some(RobustConfig {
                    base: ctx.base.clone(),
                    sigma_delta: s,
                    inner_iters: r.inner_iters,
                    inner_tol: r.inner_tol,
                }),
            )
        }
        None => (0.0, None),
    };
    let sigma_db = if sigma > 0.0 { to_db(sigma) } else { f64::NEG_INFINITY };
    let k = ctx.spec.scenario.k;
    let n = ctx.spec.scenario.n;
    let constellation = ctx.spec.scenario.constellation;

    let mut rows = Vec::new();
    let mut diverged = 0;
    for (si, &snr) in snrs.iter().enumerate() {
        let (sers, d) = run_trials(ctx.spec.trials, |t| {
            let sc = ctx.scenario(t, snr)?;
            // Mismatch and receiver noise are shared by both arms so the
            // comparison runs on common random numbers.
            let delta = sample_csi_error(
                k,
                n,
                sigma,
                derive_seed(ctx.spec.seed ^ 0xde17a, t),
            );
            let h_true = sc.h() + &delta;
            let noise_seed =
                derive_seed(ctx.spec.seed ^ 0x4011e, si as u64 * 0x10_0000 + t);
            let noise_var = sc.noise_var() * sc.zf_scale() * sc.zf_scale();
            let s_raw = sc.s_raw();
            let eval = |frame: &WaveformFrame| -> Result<f64> {
                let mut scaled = frame.clone();
                scaled.scale(sc.zf_scale());
                ser(
                    &h_true,
                    std::slice::from_ref(&scaled),
                    std::slice::from_ref(&s_raw),
                    constellation,
                    noise_var,
                    noise_seed,
                )
            };
            let nominal = eval(&solve(&sc, &ctx.base)?.waveform)?;
            let robust = match &robust_cfg {
                Some(rc) => Some(eval(&robust_solve(&sc, rc)?.waveform)?),
                None => None,
            };
            Ok((nominal, robust))
        })?;
        diverged += d;
        if sers.is_empty() {
            continue;
        }
        let mean_nom = sers.iter().map(|s| s.0).sum::<f64>() / sers.len() as f64;
        rows.push(vec![
            Value::Num(snr),
            Value::Num(sigma_db),
            Value::Text("nominal".into()),
            Value::Num(mean_nom),
        ]);
        if robust_cfg.is_some() {
            let mean_rob =
                sers.iter().filter_map(|s| s.1).sum::<f64>() / sers.len() as f64;
            rows.push(vec![
                Value::Num(snr),
                Value::Num(sigma_db),
                Value::Text("robust".into()),
                Value::Num(mean_rob),
            ]);
        }
    }
    Ok((cols(&["snr_db", "sigma_delta_db", "arm", "ser"]), rows, diverged))
}

fn run_ambiguity(ctx: &Ctx) -> Result<Body> {
    let epsilons = ctx
        .spec
        .sweep
        .epsilon
        .clone()
        .ok_or_else(|| Error::InvalidSpec("ambiguity requires sweep.epsilon".into()))?;
    let nl = ctx.spec.scenario.n * ctx.spec.scenario.l;
    let max_lag = ctx.spec.radar.max_lag.unwrap_or(nl / 2).min(nl.saturating_sub(1));
    let dopplers = ctx
        .spec
        .radar
        .doppler
        .clone()
        .unwrap_or_else(|| (-8..=8).map(|i| i as f64 / 2.0).collect());

    let mut rows = Vec::new();
    let mut diverged = 0;
    for &eps in &epsilons {
        let cfg = SolverConfig { epsilon: eps, ..ctx.base.clone() };
        let sc = ctx.scenario(0, ctx.spec.scenario.snr_db)?;
        let out = match solve(&sc, &cfg) {
            Ok(o) => o,
            Err(Error::Diverged { .. }) => {
                diverged += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let designed = ambiguity(out.waveform.vec(), max_lag, &dopplers)?;
        let reference = ambiguity(sc.x0().vec(), max_lag, &dopplers)?;
        let xcorr = surface_xcorr(&designed, &reference)?;
        for (di, &delay) in designed.delays.iter().enumerate() {
            for (fi, &nu) in designed.dopplers.iter().enumerate() {
                rows.push(vec![
                    Value::Num(eps),
                    Value::Num(delay as f64),
                    Value::Num(nu),
                    Value::Num(designed.value(di, fi)),
                    Value::Num(reference.value(di, fi)),
                    Value::Num(xcorr),
                ]);
            }
        }
    }
    Ok((
        cols(&["epsilon", "delay", "doppler", "designed_mag", "reference_mag", "xcorr"]),
        rows,
        diverged,
    ))
}

fn run_pareto(ctx: &Ctx) -> Result<Body> {
    let etas: Vec<f64> = ctx.eta_axis()?.iter().map(|&(lin, _)| lin).collect();
    if ctx.spec.sweep.eta.is_none() && ctx.spec.sweep.eta_db.is_none() {
        return Err(Error::InvalidSpec("pareto-sweep requires sweep.eta or sweep.eta_db".into()));
    }
    let weights = ctx.spec.sweep.weights.clone().unwrap_or_else(default_weight_grid);
    let sc = ctx.scenario(0, ctx.spec.scenario.snr_db)?;
    let study = pareto_sweep(&sc, &etas, &weights)?;

    let mut rows = Vec::new();
    let mut push = |family: &str, eta: Option<f64>, pts: &[crate::oracle::ParetoPoint]| {
        for p in pts {
            rows.push(vec![
                Value::Text(family.into()),
                match eta {
                    Some(e) => Value::Num(e),
                    None => Value::Text(String::new()),
                },
                Value::Num(p.weight),
                Value::Num(to_db(p.mui_energy.max(1e-300))),
                Value::Num(p.similarity),
                Value::Num(p.papr_db),
            ]);
        }
    };
    push("unconstrained", None, &study.unconstrained);
    for (eta, front) in &study.clipped {
        push("clipped", Some(*eta), front);
    }
    for (eta, front) in &study.constrained {
        push("constrained", Some(*eta), front);
    }
    Ok((cols(&["family", "eta", "w", "e_mui_db", "similarity", "papr_db"]), rows, 0))
}

// ------------------------------------------------------------- checks ----

pub fn evaluate_checks(spec: &ExperimentSpec, table: &ResultTable) -> Result<Vec<CheckOutcome>> {
    let mut outcomes = Vec::new();
    for check in &spec.checks {
        let values = table.column_values(&check.column)?;
        if values.is_empty() {
            return Err(Error::InvalidSpec(format!(
                "check on column {:?}: table has no rows",
                check.column
            )));
        }
        let actual = match check.stat {
            CheckStat::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            CheckStat::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            CheckStat::Mean => values.iter().sum::<f64>() / values.len() as f64,
            CheckStat::Last => *values.last().unwrap(),
        };
        let passed = match check.op {
            CheckOp::Le => actual <= check.value,
            CheckOp::Ge => actual >= check.value,
        };
        let op = match check.op {
            CheckOp::Le => "<=",
            CheckOp::Ge => ">=",
        };
        outcomes.push(CheckOutcome {
            description: format!(
                "{:?}({}) {} {}",
                check.stat, check.column, op, check.value
            ),
            actual,
            passed,
        });
    }
    Ok(outcomes)
}

// ------------------------------------------------------------ emission ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

pub fn table_to_csv_string(table: &ResultTable) -> String {
    let mut out = String::new();
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn table_to_json_string(table: &ResultTable) -> Result<String> {
    serde_json::to_string_pretty(table).map_err(|e| Error::InvalidSpec(e.to_string()))
}

pub fn read_table_json(path: &Path) -> Result<ResultTable> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::format(path.display().to_string(), e.to_string()))
}

pub fn emit(table: &ResultTable, path: &Path, format: EmitFormat) -> Result<()> {
    let text = match format {
        EmitFormat::Csv => table_to_csv_string(table),
        EmitFormat::Json => table_to_json_string(table)?,
    };
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Which columns form the series label, the x axis, and the y axes of each
/// study's canonical figure.
fn plot_mapping(kind: ExperimentKind) -> (Vec<&'static str>, &'static str, Vec<(&'static str, &'static str)>) {
    match kind {
        ExperimentKind::ConstellationVsEpsilon => {
            (vec!["epsilon", "user"], "re", vec![("", "im")])
        }
        ExperimentKind::CostConvergence => (vec!["eta_db"], "iter", vec![("", "mean_objective_db")]),
        ExperimentKind::PaprCcdf => (
            vec!["eta_db", "rho"],
            "gamma_db",
            vec![("raw", "ccdf_raw"), ("projected", "ccdf_projected")],
        ),
        ExperimentKind::PaprVsIter => (vec!["eta_db"], "iter", vec![("", "mean_papr_db")]),
        ExperimentKind::SumRateTradeoff => {
            (vec!["snr_db", "eta"], "epsilon", vec![("", "mean_sum_rate_bits")])
        }
        ExperimentKind::PulseCompression => (
            vec!["epsilon"],
            "lag",
            vec![("designed", "designed_db"), ("reference", "reference_db")],
        ),
        ExperimentKind::SerVsSnr => (vec!["sigma_delta_db", "arm"], "snr_db", vec![("", "ser")]),
        ExperimentKind::Ambiguity => (
            vec!["epsilon", "doppler"],
            "delay",
            vec![("designed", "designed_mag"), ("reference", "reference_mag")],
        ),
        ExperimentKind::ParetoSweep => {
            (vec!["family", "eta"], "similarity", vec![("", "e_mui_db")])
        }
    }
}

/// Long-format `series,x,y` CSV for plotting tools.
pub fn emit_plot_data(table: &ResultTable, path: &Path) -> Result<()> {
    let (series_cols, x_col, y_cols) = plot_mapping(table.metadata.kind);
    let series_idx: Vec<usize> = series_cols
        .iter()
        .map(|c| {
            table
                .column_index(c)
                .ok_or_else(|| Error::InvalidSpec(format!("missing plot column {c:?}")))
        })
        .collect::<Result<_>>()?;
    let x_idx = table
        .column_index(x_col)
        .ok_or_else(|| Error::InvalidSpec(format!("missing plot column {x_col:?}")))?;
    let y_idx: Vec<(&str, usize)> = y_cols
        .iter()
        .map(|&(suffix, y_col)| {
            table
                .column_index(y_col)
                .map(|i| (suffix, i))
                .ok_or_else(|| Error::InvalidSpec(format!("missing plot column {y_col:?}")))
        })
        .collect::<Result<_>>()?;
    let mut out = String::from("series,x,y\n");
    for row in &table.rows {
        let label: Vec<String> = series_idx.iter().map(|&i| row[i].to_string()).collect();
        for &(suffix, yi) in &y_idx {
            let mut full = label.join("/");
            if !suffix.is_empty() {
                full.push(':');
                full.push_str(suffix);
            }
            out.push_str(&format!("{},{},{}\n", full, row[x_idx], row[yi]));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
