//! Acceptance gate: eleven go/no-go criteria for the waveform design stack.
//! Every criterion prints exactly one PASS/FAIL line; run with
//!
//!     cargo test --test acceptance -- --nocapture
//!
//! to see the lines on a passing build. The criteria run sequentially inside
//! one test so the wall-clock scaling measurement is not polluted by sibling
//! tests competing for cores.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use isacwk_core::experiments::{run as run_experiment, ExperimentSpec, ResultTable, Value};
use isacwk_core::metrics::{ambiguity, from_db, papr, surface_xcorr};
use isacwk_core::model::{ChirpKind, Constellation, Scenario};
use isacwk_core::oracle::{grid_slack, oracle_solve, pareto_sweep};
use isacwk_core::robust::{robust_solve, RobustConfig};
use isacwk_core::solver::{solve, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Criterion = Result<String, String>;

// ----------------------------------------------------------- helpers ----

fn scenario(n: usize, k: usize, l: usize, c: Constellation, seed: u64) -> Scenario {
    Scenario::generate(n, k, l, c, &ChirpKind::OrthogonalLfm, 10.0, seed).unwrap()
}

fn spec(text: &str) -> ExperimentSpec {
    ExperimentSpec::from_toml(text).expect("acceptance spec must parse")
}

fn col(table: &ResultTable, name: &str) -> usize {
    table.column_index(name).unwrap_or_else(|| panic!("missing column {name}"))
}

fn numeric(v: &Value) -> f64 {
    v.as_f64().expect("numeric cell")
}

/// Rows whose listed numeric columns match the given values within 1e-9.
fn rows_where<'a>(table: &'a ResultTable, eq: &[(&str, f64)]) -> Vec<&'a Vec<Value>> {
    let idx: Vec<(usize, f64)> = eq.iter().map(|(n, v)| (col(table, n), *v)).collect();
    table
        .rows
        .iter()
        .filter(|r| idx.iter().all(|&(i, v)| (numeric(&r[i]) - v).abs() < 1e-9))
        .collect()
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

// --------------------------------------------------------- criteria ----

/// 100 random instances at rho = 0.1 for 2000 iterations: the drift norm and
/// the dual step (rho times the drift) must both sit below 1e-4 over the last
/// 10% of iterations on at least 99 instances, in under two minutes.
fn c01_convergence_tail() -> Criterion {
    let started = Instant::now();
    let rho = 0.1;
    let oks: Vec<bool> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(5000 + i);
            let n = rng.random_range(2..=4usize);
            let k = rng.random_range(1..=2usize);
            let l = rng.random_range(4..=8usize);
            let eta_db: f64 = rng.random_range(7.0..10.0);
            let eps: f64 = rng.random_range(1.9..2.0);
            let sc = scenario(n, k, l, Constellation::Qpsk, 5000 + i);
            let cfg = SolverConfig {
                rho,
                eta: from_db(eta_db),
                epsilon: eps,
                max_iter: 2000,
                primal_tol: 1e-10,
                stall_window: 0,
            };
            let out = solve(&sc, &cfg).unwrap();
            let drift = &out.diagnostics.drift_norm;
            let tail = &drift[drift.len() - drift.len() / 10..];
            tail.iter().all(|&d| d.max(rho * d) < 1e-4)
        })
        .collect();
    let passed = oks.iter().filter(|&&b| b).count();
    let secs = started.elapsed().as_secs_f64();
    if passed >= 99 && secs < 120.0 {
        Ok(format!("{passed}/100 instances with tail drift < 1e-4 in {secs:.1}s"))
    } else {
        Err(format!("{passed}/100 instances ok, {secs:.1}s elapsed (need >= 99 in < 120s)"))
    }
}

/// 200 random instances (a quarter of them robust designs): the returned
/// waveform must satisfy all three constraints at the library tolerances.
fn c02_feasibility() -> Criterion {
    let violations: Vec<String> = (0..200u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(7000 + i);
            let n = rng.random_range(2..=4usize);
            let k = rng.random_range(1..=2usize);
            let l = rng.random_range(4..=10usize);
            let eta = from_db(rng.random_range(0.0..9.0));
            let eps: f64 = rng.random_range(0.3..2.0);
            let sc = scenario(n, k, l, Constellation::Qpsk, 7000 + i);
            // rho 10: corner instances where both the cap and the ball bind can
            // cycle indefinitely under a softer penalty instead of stalling.
            let base = SolverConfig {
                rho: 10.0,
                eta,
                epsilon: eps,
                max_iter: 6000,
                primal_tol: 1e-10,
                stall_window: 20,
            };
            let out = if i % 4 == 0 {
                let cfg = RobustConfig {
                    base,
                    sigma_delta: from_db(rng.random_range(-8.0..-2.0)),
                    inner_iters: 50,
                    inner_tol: 1e-10,
                };
                robust_solve(&sc, &cfg).unwrap()
            } else {
                solve(&sc, &base).unwrap()
            };
            let m = &out.metrics;
            let norm_err = (out.waveform.norm() - 1.0).abs();
            if norm_err > 1e-6 || m.papr_linear > eta * (1.0 + 1e-6) || m.similarity_dist > eps + 1e-6
            {
                Some(format!(
                    "instance {i}: |norm-1|={norm_err:.2e} papr={:.8} (cap {eta:.6}) sim={:.8} (radius {eps:.6})",
                    m.papr_linear, m.similarity_dist
                ))
            } else {
                None
            }
        })
        .collect();
    if violations.is_empty() {
        Ok("200/200 outputs feasible at the stated tolerances".into())
    } else {
        Err(format!("{} infeasible outputs, first: {}", violations.len(), violations[0]))
    }
}

/// 25 tiny instances (stacked dimension <= 8): the ADMM objective must land
/// within +1% of the enumeration oracle and no further below it than the
/// oracle's own grid resolution, in under five minutes.
fn c03_oracle_equivalence() -> Criterion {
    let started = Instant::now();
    let shapes = [(1usize, 1usize, 4usize), (2, 1, 2), (1, 1, 3), (2, 2, 2), (1, 1, 2)];
    let eta = 2.0;
    let eps = 0.5;
    let failures: Vec<String> = (0..25u64)
        .into_par_iter()
        .filter_map(|i| {
            let (n, k, l) = shapes[(i % 5) as usize];
            let sc = scenario(n, k, l, Constellation::Qpsk, 9000 + i);
            let cfg = SolverConfig {
                rho: 5.0,
                eta,
                epsilon: eps,
                max_iter: 3000,
                primal_tol: 1e-10,
                stall_window: 30,
            };
            let out = solve(&sc, &cfg).unwrap();
            let f_admm: f64 = out
                .waveform
                .vec()
                .iter()
                .zip(sc.x_comm().vec())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            let oracle = oracle_solve(&sc, eta, eps).unwrap();
            let f_star = oracle.best_objective;
            let slack = grid_slack(2 * n * l);
            if f_admm <= 1.01 * f_star + 1e-9 && f_admm >= f_star - slack - 1e-9 {
                None
            } else {
                Some(format!("instance {i} ({n},{k},{l}): admm {f_admm:.6e} vs oracle {f_star:.6e} slack {slack:.2e}"))
            }
        })
        .collect();
    let secs = started.elapsed().as_secs_f64();
    if failures.is_empty() && secs < 300.0 {
        Ok(format!("25/25 instances within oracle brackets in {secs:.1}s"))
    } else if !failures.is_empty() {
        Err(format!("{} instances out of bracket, first: {}", failures.len(), failures[0]))
    } else {
        Err(format!("took {secs:.1}s (budget 300s)"))
    }
}

/// Mean cost trajectories at eta = 0/6/9 dB on the 4x2x20 QPSK scenario: the
/// 9 dB curve must cross below -100 dB by iteration 1000 and the final means
/// must be strictly ordered 9 dB < 6 dB < 0 dB.
fn c04_cost_convergence() -> Criterion {
    let table = run_experiment(&spec(
        r#"
spec_version = 1
kind = "cost-convergence"
seed = 404
trials = 100

[scenario]
n = 4
k = 2
l = 20
constellation = "qpsk"

[solver]
rho = 0.1
epsilon = 1.85
max_iter = 1200

[sweep]
eta_db = [0.0, 6.0, 9.0]
"#,
    ))
    .map_err(|e| e.to_string())?;
    let at = |eta_db: f64, iter: f64| -> f64 {
        let rows = rows_where(&table, &[("eta_db", eta_db), ("iter", iter)]);
        assert_eq!(rows.len(), 1);
        numeric(&rows[0][col(&table, "mean_objective_db")])
    };
    let nine_at_1000 = at(9.0, 1000.0);
    let (f0, f6, f9) = (at(0.0, 1200.0), at(6.0, 1200.0), at(9.0, 1200.0));
    if nine_at_1000 < -100.0 && f9 < f6 && f6 < f0 {
        Ok(format!(
            "eta=9dB mean cost {nine_at_1000:.1} dB at iteration 1000; final means {f9:.1} < {f6:.1} < {f0:.1} dB"
        ))
    } else {
        Err(format!(
            "eta=9dB at iter 1000: {nine_at_1000:.1} dB (need < -100); finals 9dB={f9:.1} 6dB={f6:.1} 0dB={f0:.1}"
        ))
    }
}

/// PAPR settling at eta = 4.8 dB over 100 trials: the settled mean must land
/// in [4.0, 4.8] dB for QPSK and [4.5, 4.85] dB for 256-QAM.
///
/// Levels are read as dB-domain means of the per-trial trajectories. The
/// penalty must be stiff enough that runs actually converge inside the cap
/// over this horizon; at rho = 0.1 the dense-constellation iterates hover
/// just above it (about 4.92 dB) no matter how long they run.
fn c05_papr_settling() -> Criterion {
    let run_one = |constellation: &str| -> Result<f64, String> {
        let table = run_experiment(&spec(&format!(
            r#"
spec_version = 1
kind = "papr-vs-iter"
seed = 505
trials = 100
aggregate_linear = false

[scenario]
n = 4
k = 2
l = 20
constellation = "{constellation}"

[solver]
rho = 0.5
epsilon = 1.85
max_iter = 1500

[sweep]
eta_db = [4.8]
"#
        )))
        .map_err(|e| e.to_string())?;
        let rows = rows_where(&table, &[("iter", 1500.0)]);
        assert_eq!(rows.len(), 1);
        Ok(numeric(&rows[0][col(&table, "mean_papr_db")]))
    };
    let qpsk = run_one("qpsk")?;
    let qam256 = run_one("256qam")?;
    let ok_qpsk = (4.0..=4.8).contains(&qpsk);
    let ok_qam = (4.5..=4.85).contains(&qam256);
    if ok_qpsk && ok_qam {
        Ok(format!("settled PAPR {qpsk:.2} dB (QPSK), {qam256:.2} dB (256-QAM)"))
    } else {
        Err(format!(
            "settled PAPR {qpsk:.2} dB (QPSK, want [4.0,4.8]), {qam256:.2} dB (256-QAM, want [4.5,4.85])"
        ))
    }
}

/// CCDF at eta = 0 dB over 1000 waveforms per penalty: the projected-output
/// CCDF must be exactly zero at gamma = 0.5 dB for every rho, and the raw
/// curves must shift left as rho grows (gamma at the 0.1 level decreasing).
fn c06_ccdf_cutoff() -> Criterion {
    let rhos = [0.1, 1.0, 10.0];
    let table = run_experiment(&spec(
        r#"
spec_version = 1
kind = "papr-ccdf"
seed = 606
trials = 1000

[scenario]
n = 4
k = 2
l = 20
constellation = "qpsk"

[solver]
epsilon = 1.85
max_iter = 600

[sweep]
eta_db = [0.0]
rho = [0.1, 1.0, 10.0]
"#,
    ))
    .map_err(|e| e.to_string())?;
    for &rho in &rhos {
        let rows = rows_where(&table, &[("rho", rho), ("gamma_db", 0.5)]);
        assert_eq!(rows.len(), 1);
        let ccdf_proj = numeric(&rows[0][col(&table, "ccdf_projected")]);
        if ccdf_proj != 0.0 {
            return Err(format!("projected CCDF at 0.5 dB is {ccdf_proj} for rho={rho} (want 0)"));
        }
    }
    // Smallest gamma where the raw CCDF drops to or below 0.1.
    let gamma_at_level = |rho: f64| -> f64 {
        let gi = col(&table, "gamma_db");
        let ci = col(&table, "ccdf_raw");
        let mut rows = rows_where(&table, &[("rho", rho)]);
        rows.sort_by(|a, b| numeric(&a[gi]).total_cmp(&numeric(&b[gi])));
        rows.iter()
            .find(|r| numeric(&r[ci]) <= 0.1)
            .map(|r| numeric(&r[gi]))
            .unwrap_or(f64::INFINITY)
    };
    let gammas: Vec<f64> = rhos.iter().map(|&r| gamma_at_level(r)).collect();
    if gammas.windows(2).all(|w| w[1] <= w[0]) && gammas[2] < gammas[0] {
        Ok(format!(
            "projected CCDF(0.5 dB) = 0 for all rho; raw gamma@0.1 level {:.2} / {:.2} / {:.2} dB for rho 0.1/1/10",
            gammas[0], gammas[1], gammas[2]
        ))
    } else {
        Err(format!("raw gamma@0.1 level not decreasing in rho: {gammas:?}"))
    }
}

/// 100 channels at SNR = 10 dB with eta = 3 (linear) and epsilon = 1.8: the
/// mean per-user achievable rate must be within 5% of log2(11).
fn c07_sum_rate() -> Criterion {
    let table = run_experiment(&spec(
        r#"
spec_version = 1
kind = "sum-rate-tradeoff"
seed = 707
trials = 100

[scenario]
n = 4
k = 2
l = 20
constellation = "qpsk"
snr_db = 10.0

[solver]
rho = 1.0
eta = 3.0
epsilon = 1.8
max_iter = 1500
stall_window = 20

[sweep]
epsilon = [1.8]
snr_db = [10.0]
"#,
    ))
    .map_err(|e| e.to_string())?;
    assert_eq!(table.rows.len(), 1);
    let rate = numeric(&table.rows[0][col(&table, "mean_sum_rate_bits")]);
    let target = 11f64.log2();
    let rel = (rate - target).abs() / target;
    if rel <= 0.05 {
        Ok(format!("mean rate {rate:.3} bit/s/Hz per user vs log2(11) = {target:.3} ({:.1}% off)", rel * 100.0))
    } else {
        Err(format!("mean rate {rate:.3} vs target {target:.3}: {:.1}% off (allow 5%)", rel * 100.0))
    }
}

/// Mismatched-channel SER at sigma = -2 dB on the 5x2 scenario: the robust
/// design must not lose to the nominal one at any tested SNR, 1000 frames
/// per point on common random numbers.
fn c08_robust_ordering() -> Criterion {
    let snrs = [4.0, 8.0, 12.0, 16.0];
    let table = run_experiment(&spec(
        r#"
spec_version = 1
kind = "ser-vs-snr"
seed = 808
trials = 1000

[scenario]
n = 5
k = 2
l = 8
constellation = "qpsk"

[solver]
rho = 1.0
eta = 1.0
epsilon = 1.25
max_iter = 800
stall_window = 20

[robust]
sigma_delta_db = -2.0
inner_iters = 50

[sweep]
snr_db = [4.0, 8.0, 12.0, 16.0]
"#,
    ))
    .map_err(|e| e.to_string())?;
    let arm_i = col(&table, "arm");
    let ser_i = col(&table, "ser");
    let ser_of = |snr: f64, arm: &str| -> f64 {
        rows_where(&table, &[("snr_db", snr)])
            .into_iter()
            .find(|r| matches!(&r[arm_i], Value::Text(t) if t == arm))
            .map(|r| numeric(&r[ser_i]))
            .expect("arm row present")
    };
    let mut report = Vec::new();
    let mut ok = true;
    for &snr in &snrs {
        let nom = ser_of(snr, "nominal");
        let rob = ser_of(snr, "robust");
        ok &= rob <= nom;
        report.push(format!("{snr:.0}dB {rob:.4}<={nom:.4}"));
    }
    if ok {
        Ok(format!("robust SER <= nominal at every SNR: {}", report.join(", ")))
    } else {
        Err(format!("ordering violated: {}", report.join(", ")))
    }
}

/// Per-iteration wall time across NL in {32..512} at fixed iteration count:
/// the log-log slope must be 1.0 +/- 0.25.
fn c09_linear_scaling() -> Criterion {
    let sizes = [8usize, 16, 32, 64, 128]; // L values; N = 4 so NL = 32..512
    let iters = 2000;
    let mut points = Vec::new();
    for &l in &sizes {
        let sc = scenario(4, 2, l, Constellation::Qpsk, 900 + l as u64);
        let cfg = SolverConfig {
            rho: 0.1,
            eta: from_db(9.0),
            epsilon: 1.85,
            max_iter: iters,
            primal_tol: 1e-10,
            stall_window: 0,
        };
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            let out = solve(&sc, &cfg).unwrap();
            let per_iter = t.elapsed().as_secs_f64() / out.iterations as f64;
            best = best.min(per_iter);
        }
        points.push(((4 * l) as f64, best));
    }
    let logged: Vec<(f64, f64)> =
        points.iter().map(|&(nl, t)| (nl.ln(), t.ln())).collect();
    let slope = least_squares_slope(&logged);
    let per_iter_us: Vec<String> =
        points.iter().map(|&(nl, t)| format!("NL={nl:.0}:{:.1}us", t * 1e6)).collect();
    if (0.75..=1.25).contains(&slope) {
        Ok(format!("log-log slope {slope:.2} ({})", per_iter_us.join(" ")))
    } else {
        Err(format!("log-log slope {slope:.2} outside [0.75, 1.25] ({})", per_iter_us.join(" ")))
    }
}

/// With the cap matched to the clip level, the constrained front must weakly
/// dominate the clipped front at every similarity level the latter attains,
/// and it must recover at least two decades of MUI at the aggressive end.
///
/// Both fronts are sampled on the same weight grid, so their points sit at
/// slightly offset similarity levels. The staircase comparison below (best
/// constrained MUI at equal-or-tighter similarity) therefore carries a
/// discretization residue that shrinks with the grid; a dense grid plus a 5%
/// relative margin separates that residue from a real ordering violation.
fn c10_pareto_ordering() -> Criterion {
    let sc = scenario(2, 1, 6, Constellation::Qpsk, 606);
    let eta = from_db(3.0);
    let weights: Vec<f64> =
        (0..512).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 511.0)).collect();
    let study = pareto_sweep(&sc, &[eta], &weights).map_err(|e| e.to_string())?;
    let clipped = &study.clipped[0].1;
    let constrained = &study.constrained[0].1;
    if clipped.is_empty() || constrained.is_empty() {
        return Err("empty front".into());
    }
    let mut worst_ratio = f64::NEG_INFINITY;
    for c in clipped {
        let best = constrained
            .iter()
            .filter(|p| p.similarity <= c.similarity + 1e-9)
            .map(|p| p.mui_energy)
            .fold(f64::INFINITY, f64::min);
        worst_ratio = worst_ratio.max(best / c.mui_energy);
        if best > c.mui_energy * 1.05 {
            return Err(format!(
                "clipped point (sim {:.4}, mui {:.6e}) beats the constrained front (best {best:.6e})",
                c.similarity, c.mui_energy
            ));
        }
    }
    let min_clipped = clipped.iter().map(|p| p.mui_energy).fold(f64::INFINITY, f64::min);
    let min_constrained =
        constrained.iter().map(|p| p.mui_energy).fold(f64::INFINITY, f64::min);
    if min_constrained > min_clipped * 1e-2 {
        return Err(format!(
            "constrained best MUI {min_constrained:.3e} recovers less than two decades over clipped {min_clipped:.3e}"
        ));
    }
    Ok(format!(
        "dominates at all {} clipped points (worst MUI ratio {worst_ratio:.3}); best MUI {min_constrained:.1e} vs clipped {min_clipped:.1e}",
        clipped.len()
    ))
}

/// At epsilon = 0.7 the designed waveform's ambiguity surface must correlate
/// with the chirp reference at 0.9 or better.
///
/// The solve must actually stall inside the ball: a truncated run sits well
/// outside epsilon and its surface is meaningless for this check. The
/// surfaces are compared over the mainlobe region (delays within 10 slots,
/// Dopplers within 2 cycles per frame) where the resolution structure lives;
/// the far sidelobe floor of any data-bearing design is noise-like and has no
/// counterpart in the deterministic chirp reference.
fn c11_ambiguity_similarity() -> Criterion {
    let sc = scenario(4, 2, 40, Constellation::Qpsk, 1);
    let cfg = SolverConfig {
        rho: 5.0,
        eta: from_db(3.0),
        epsilon: 0.7,
        max_iter: 20000,
        primal_tol: 1e-10,
        stall_window: 30,
    };
    let out = solve(&sc, &cfg).map_err(|e| e.to_string())?;
    if !out.converged {
        return Err(format!("solver did not converge in {} iterations", out.iterations));
    }
    let sim = out.metrics.similarity_dist;
    if sim > cfg.epsilon + 1e-6 {
        return Err(format!("similarity {sim:.6} outside the 0.7 ball"));
    }
    let dopplers: Vec<f64> = (-4..=4).map(|i| i as f64 / 2.0).collect();
    let designed = ambiguity(out.waveform.vec(), 10, &dopplers).map_err(|e| e.to_string())?;
    let reference = ambiguity(sc.x0().vec(), 10, &dopplers).map_err(|e| e.to_string())?;
    let xcorr = surface_xcorr(&designed, &reference).map_err(|e| e.to_string())?;
    // Sanity on the design itself: the PAPR cap still holds after the solve.
    let papr_lin = papr(out.waveform.vec()).map_err(|e| e.to_string())?;
    if xcorr >= 0.9 && papr_lin <= cfg.eta * (1.0 + 1e-6) {
        Ok(format!("ambiguity cross-correlation {xcorr:.3} at similarity {sim:.3}"))
    } else {
        Err(format!("ambiguity cross-correlation {xcorr:.3} (need >= 0.9)"))
    }
}

// ------------------------------------------------------------- runner ----

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Criterion)> = vec![
        ("C01 convergence tail", c01_convergence_tail),
        ("C02 output feasibility", c02_feasibility),
        ("C03 oracle equivalence", c03_oracle_equivalence),
        ("C04 cost convergence ordering", c04_cost_convergence),
        ("C05 papr settling", c05_papr_settling),
        ("C06 ccdf cutoff and rho effect", c06_ccdf_cutoff),
        ("C07 sum-rate attainment", c07_sum_rate),
        ("C08 robust ser ordering", c08_robust_ordering),
        ("C09 linear per-iteration scaling", c09_linear_scaling),
        ("C10 pareto recovery", c10_pareto_ordering),
        ("C11 ambiguity similarity", c11_ambiguity_similarity),
    ];
    let mut failures = Vec::new();
    for (name, criterion) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(criterion));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(Ok(detail)) => println!("acceptance {name}: PASS ({detail}) [{secs:.1}s]"),
            Ok(Err(detail)) => {
                println!("acceptance {name}: FAIL ({detail}) [{secs:.1}s]");
                failures.push(format!("{name}: {detail}"));
            }
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<String>()
                    .map(String::as_str)
                    .or_else(|| panic.downcast_ref::<&str>().copied())
                    .unwrap_or("panic");
                println!("acceptance {name}: FAIL (panicked: {msg}) [{secs:.1}s]");
                failures.push(format!("{name}: panicked: {msg}"));
            }
        }
    }
    assert!(failures.is_empty(), "acceptance failures:\n{}", failures.join("\n"));
}
