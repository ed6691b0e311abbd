//! Waveform quality metrics.
//!
//! Everything here is a pure function of its inputs: peak-to-average power
//! ratio, multi-user interference energy, per-user SINR and achievable rate,
//! PAPR exceedance curves, the discrete narrowband ambiguity surface,
//! FFT-based pulse compression with Taylor weighting, empirical symbol error
//! rate, and the hard amplitude clipper that models a power amplifier's
//! headroom limit.
//!
//! Conventions:
//!
//! * PAPR averages power over all `NL` samples of the vectorized frame, so
//!   the per-sample cap `|x_n|² ≤ η/(NL)` on a unit-norm waveform is exactly
//!   the set `{PAPR ≤ η}`.
//! * dB conversions are `10·log10` (power quantities throughout).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::WaveformFrame;
use crate::model::{Constellation, Scenario};

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

// ------------------------------------------------------------------ PAPR ----

/// Peak-to-average power ratio over the `NL` vectorized samples:
/// `max |x(ℓ)|² / ((1/NL)·Σ|x(ℓ)|²)`. Scale invariant and ≥ 1.
pub fn papr(x: &[Complex64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Degenerate("PAPR of an empty vector".into()));
    }
    let mut peak = 0.0f64;
    let mut total = 0.0f64;
    for z in x {
        let p = z.norm_sqr();
        peak = peak.max(p);
        total += p;
    }
    if total <= 0.0 {
        return Err(Error::Degenerate("PAPR of the zero vector".into()));
    }
    Ok(peak * x.len() as f64 / total)
}

pub fn papr_db(x: &[Complex64]) -> Result<f64> {
    Ok(to_db(papr(x)?))
}

// ------------------------------------------------------------------- MUI ----

/// Multi-user interference energy `‖H·X − S‖_F²`.
pub fn mui_energy(
    h: &DMatrix<Complex64>,
    x: &WaveformFrame,
    s: &DMatrix<Complex64>,
) -> Result<f64> {
    check_shapes(h, x, s)?;
    let mui = h * x.to_matrix() - s;
    Ok(mui.iter().map(|z| z.norm_sqr()).sum())
}

fn check_shapes(h: &DMatrix<Complex64>, x: &WaveformFrame, s: &DMatrix<Complex64>) -> Result<()> {
    if h.ncols() != x.n_antennas() || h.nrows() != s.nrows() || x.n_samples() != s.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "H is {}x{}, X is {}x{}, S is {}x{}",
            h.nrows(),
            h.ncols(),
            x.n_antennas(),
            x.n_samples(),
            s.nrows(),
            s.ncols()
        )));
    }
    Ok(())
}

// ------------------------------------------------------------ SINR / rate ----

/// Per-user SINR and the average achievable sum rate.
///
/// `SINR_k = Ê(|S_{k,ℓ}|²) / (Ê(|MUI_{k,ℓ}|²) + σ_c²)` with empirical means
/// over the frame's `L` samples, `R_k = log2(1 + SINR_k)`, and the returned
/// rate is the per-user average `(1/K)·Σ R_k`.
pub fn sinr_and_rate(
    h: &DMatrix<Complex64>,
    x: &WaveformFrame,
    s: &DMatrix<Complex64>,
    noise_var: f64,
) -> Result<(Vec<f64>, f64)> {
    if noise_var < 0.0 {
        return Err(Error::InvalidParameter(format!("noise variance {noise_var} < 0")));
    }
    check_shapes(h, x, s)?;
    let mui = h * x.to_matrix() - s;
    let l = s.ncols() as f64;
    let mut sinrs = Vec::with_capacity(s.nrows());
    for k in 0..s.nrows() {
        let sig: f64 = (0..s.ncols()).map(|j| s[(k, j)].norm_sqr()).sum::<f64>() / l;
        let interference: f64 = (0..s.ncols()).map(|j| mui[(k, j)].norm_sqr()).sum::<f64>() / l;
        sinrs.push(sig / (interference + noise_var));
    }
    let rate = sinrs.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / sinrs.len() as f64;
    Ok((sinrs, rate))
}

// ------------------------------------------------------------------ CCDF ----

/// Empirical complementary CDF `Pr(sample > γ)` evaluated at each threshold.
/// Thresholds are sorted ascending in the output, so the curve is a
/// non-increasing step function regardless of input order.
pub fn ccdf(samples: &[f64], thresholds: &[f64]) -> Vec<(f64, f64)> {
    let mut gammas: Vec<f64> = thresholds.to_vec();
    gammas.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len().max(1) as f64;
    gammas
        .into_iter()
        .map(|g| {
            let exceed = samples.iter().filter(|&&s| s > g).count() as f64;
            (g, exceed / n)
        })
        .collect()
}

// ------------------------------------------------------------- ambiguity ----

/// Discrete narrowband delay–Doppler ambiguity surface, normalized so the
/// zero-delay zero-Doppler cell is 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmbiguitySurface {
    /// Integer delays, `-max_lag ..= max_lag`.
    pub delays: Vec<i64>,
    /// Normalized Doppler frequencies (cycles per frame), sorted ascending.
    pub dopplers: Vec<f64>,
    /// Row-major magnitudes: `magnitude[delay_index][doppler_index]`.
    pub magnitude: Vec<Vec<f64>>,
}

impl AmbiguitySurface {
    pub fn value(&self, delay_index: usize, doppler_index: usize) -> f64 {
        self.magnitude[delay_index][doppler_index]
    }

    /// Flattened copy, row-major over (delay, doppler).
    pub fn flat(&self) -> Vec<f64> {
        self.magnitude.iter().flatten().copied().collect()
    }
}

/// `χ(τ,ν) = |Σ_n x[n]·conj(x[n+τ])·exp(−j2πνn/NL)|` over the vectorized
/// frame (aperiodic lags: terms with `n+τ` outside the support drop out),
/// normalized by `χ(0,0) = Σ|x[n]|²`. For a per-antenna view, pass one row.
pub fn ambiguity(x: &[Complex64], max_lag: usize, doppler_grid: &[f64]) -> Result<AmbiguitySurface> {
    let nl = x.len();
    if max_lag >= nl {
        return Err(Error::InvalidParameter(format!(
            "max_lag {max_lag} must be below the sample count {nl}"
        )));
    }
    let energy: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    if energy <= 0.0 {
        return Err(Error::Degenerate("ambiguity of the zero vector".into()));
    }
    let mut dopplers: Vec<f64> = doppler_grid.to_vec();
    dopplers.sort_by(|a, b| a.total_cmp(b));

    let delays: Vec<i64> = (-(max_lag as i64)..=max_lag as i64).collect();
    let mut magnitude = Vec::with_capacity(delays.len());
    for &tau in &delays {
        let mut row = Vec::with_capacity(dopplers.len());
        for &nu in &dopplers {
            let mut acc = Complex64::ZERO;
            for n in 0..nl as i64 {
                let shifted = n + tau;
                if shifted < 0 || shifted >= nl as i64 {
                    continue;
                }
                let phase = -2.0 * std::f64::consts::PI * nu * n as f64 / nl as f64;
                acc += x[n as usize]
                    * x[shifted as usize].conj()
                    * Complex64::from_polar(1.0, phase);
            }
            row.push(acc.norm() / energy);
        }
        magnitude.push(row);
    }
    Ok(AmbiguitySurface { delays, dopplers, magnitude })
}

/// Normalized cross-correlation `⟨A,B⟩/(‖A‖·‖B‖)` between two ambiguity
/// surfaces of identical shape. 1 means proportional surfaces.
pub fn surface_xcorr(a: &AmbiguitySurface, b: &AmbiguitySurface) -> Result<f64> {
    if a.delays != b.delays || a.dopplers != b.dopplers {
        return Err(Error::ShapeMismatch(
            "ambiguity surfaces cover different delay/Doppler grids".into(),
        ));
    }
    let fa = a.flat();
    let fb = b.flat();
    let dot: f64 = fa.iter().zip(&fb).map(|(x, y)| x * y).sum();
    let na: f64 = fa.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = fb.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na <= 0.0 || nb <= 0.0 {
        return Err(Error::Degenerate("all-zero ambiguity surface".into()));
    }
    Ok(dot / (na * nb))
}

// ------------------------------------------------------ pulse compression ----

/// Spectral weighting applied inside [`pulse_compression`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Window {
    Rectangular,
    /// Taylor taper with `nbar` near-in sidelobes held at `sll_db` below the
    /// mainlobe.
    Taylor { nbar: usize, sll_db: f64 },
}

impl Default for Window {
    fn default() -> Self {
        Window::Taylor { nbar: 4, sll_db: 35.0 }
    }
}

/// Taylor window of the given length (peak unnormalized).
///
/// `w(n) = 1 + 2·Σ_m F_m·cos(2πm(n − L/2 + 1/2)/L)` where the `F_m`
/// coefficients place `nbar − 1` near-in sidelobes `sll_db` below the peak.
pub fn taylor_window(len: usize, nbar: usize, sll_db: f64) -> Vec<f64> {
    assert!(len >= 1 && nbar >= 1);
    let b = 10f64.powf(sll_db / 20.0);
    let a = b.acosh() / std::f64::consts::PI;
    let s2 = (nbar * nbar) as f64 / (a * a + (nbar as f64 - 0.5).powi(2));

    let mut fm = vec![0.0f64; nbar.saturating_sub(1)];
    for (mi, f) in fm.iter_mut().enumerate() {
        let m = (mi + 1) as f64;
        let sign = if mi % 2 == 0 { 1.0 } else { -1.0 };
        let mut numer = sign;
        for k in 1..nbar {
            numer *= 1.0 - m * m / s2 / (a * a + (k as f64 - 0.5).powi(2));
        }
        let mut denom = 2.0;
        for k in 1..nbar {
            if k != mi + 1 {
                denom *= 1.0 - m * m / ((k * k) as f64);
            }
        }
        *f = numer / denom;
    }

    (0..len)
        .map(|n| {
            let arg = n as f64 - len as f64 / 2.0 + 0.5;
            1.0 + 2.0
                * fm.iter()
                    .enumerate()
                    .map(|(mi, f)| {
                        f * (2.0 * std::f64::consts::PI * (mi + 1) as f64 * arg / len as f64).cos()
                    })
                    .sum::<f64>()
        })
        .collect()
}

/// Classical FFT–IFFT pulse compression of one antenna row against a
/// reference row: inverse transform of
/// `FFT(tx) · conj(FFT(reference)) · window`, returned as magnitude in dB
/// normalized to the peak. The window is centered on DC (its taper falls on
/// the band edges). Output index `i` is the circular lag `i`.
pub fn pulse_compression(
    tx_row: &[Complex64],
    reference_row: &[Complex64],
    window: &Window,
) -> Result<Vec<f64>> {
    let len = tx_row.len();
    if len == 0 || reference_row.len() != len {
        return Err(Error::ShapeMismatch(format!(
            "tx row has {} samples, reference has {}",
            len,
            reference_row.len()
        )));
    }
    if tx_row.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::Degenerate("pulse compression of an all-zero tx row".into()));
    }
    if reference_row.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::Degenerate("pulse compression against an all-zero reference".into()));
    }

    let taps: Vec<f64> = match window {
        Window::Rectangular => vec![1.0; len],
        Window::Taylor { nbar, sll_db } => taylor_window(len, *nbar, *sll_db),
    };

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    let mut tx: Vec<Complex64> = tx_row.to_vec();
    let mut rf: Vec<Complex64> = reference_row.to_vec();
    fwd.process(&mut tx);
    fwd.process(&mut rf);

    // The window peaks at taps[len/2]; rotate so the peak lands on bin 0
    // (DC) and the taper on the wrap-around band edges.
    let mut spectrum: Vec<Complex64> = (0..len)
        .map(|k| tx[k] * rf[k].conj() * taps[(k + len / 2) % len])
        .collect();
    inv.process(&mut spectrum);

    let peak = spectrum.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    if peak <= 0.0 {
        return Err(Error::Degenerate("pulse compression output is identically zero".into()));
    }
    Ok(spectrum.iter().map(|z| 20.0 * (z.norm() / peak).log10()).collect())
}

// ------------------------------------------------------------------- SER ----

/// Empirical symbol error rate over a batch of frames.
///
/// For each frame the receiver observes `Y = H·X + Z` with i.i.d.
/// circularly-symmetric Gaussian noise of variance `noise_var` per entry,
/// detects every sample by minimum distance over the constellation points,
/// and is scored against the minimum-distance quantization of the true `S`.
/// Noise is deterministic per `noise_seed` (drawn frame by frame,
/// column-major within a frame).
pub fn ser(
    h: &DMatrix<Complex64>,
    x_frames: &[WaveformFrame],
    s_frames: &[DMatrix<Complex64>],
    constellation: Constellation,
    noise_var: f64,
    noise_seed: u64,
) -> Result<f64> {
    if x_frames.len() != s_frames.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} waveform frames vs {} symbol frames",
            x_frames.len(),
            s_frames.len()
        )));
    }
    if x_frames.is_empty() {
        return Err(Error::InvalidParameter("SER over zero frames".into()));
    }
    if noise_var < 0.0 {
        return Err(Error::InvalidParameter(format!("noise variance {noise_var} < 0")));
    }
    let points = constellation.points();
    let sigma = (noise_var / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let normal = StandardNormal;

    let mut errors = 0usize;
    let mut total = 0usize;
    for (x, s) in x_frames.iter().zip(s_frames) {
        check_shapes(h, x, s)?;
        let y = h * x.to_matrix();
        for l in 0..s.ncols() {
            for k in 0..s.nrows() {
                let re: f64 = normal.sample(&mut rng);
                let im: f64 = normal.sample(&mut rng);
                let received = y[(k, l)] + Complex64::new(re * sigma, im * sigma);
                if nearest_point(&points, received) != nearest_point(&points, s[(k, l)]) {
                    errors += 1;
                }
                total += 1;
            }
        }
    }
    Ok(errors as f64 / total as f64)
}

fn nearest_point(points: &[Complex64], z: Complex64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = (z - p).norm_sqr();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

// ------------------------------------------------------------------ HPA ----

/// Hard amplitude limiter: repeatedly clips sample magnitudes at
/// `√(papr_cap · mean power)`, re-deriving the threshold from the clipped
/// power, until the PAPR settles at or below the cap. Phases are preserved.
/// Idempotent: a waveform already inside the cap is returned unchanged.
pub fn hpa_clip(x: &[Complex64], papr_cap: f64) -> Result<Vec<Complex64>> {
    if papr_cap < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "PAPR cap {papr_cap} < 1 is unattainable"
        )));
    }
    let mut out = x.to_vec();
    let nl = out.len() as f64;
    for _ in 0..200 {
        let mean: f64 = out.iter().map(|z| z.norm_sqr()).sum::<f64>() / nl;
        if mean <= 0.0 {
            return Ok(out); // zero signal: nothing to clip
        }
        let limit_sq = papr_cap * mean;
        let peak = out.iter().map(|z| z.norm_sqr()).fold(0.0f64, f64::max);
        if peak <= limit_sq * (1.0 + 1e-12) {
            break;
        }
        let limit = limit_sq.sqrt();
        for z in &mut out {
            let m = z.norm();
            if m > limit {
                *z *= limit / m;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- report ----

/// Everything the experiments track for one waveform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub papr_linear: f64,
    pub papr_db: f64,
    pub mui_energy: f64,
    /// `‖x − x0‖` against the scenario's reference chirp.
    pub similarity_dist: f64,
    pub per_user_sinr: Vec<f64>,
    pub sum_rate: f64,
}

/// Evaluate the full report for a waveform against its scenario.
pub fn metric_report(scenario: &Scenario, frame: &WaveformFrame) -> Result<MetricReport> {
    let papr_linear = papr(frame.vec())?;
    let (per_user_sinr, sum_rate) =
        sinr_and_rate(scenario.h(), frame, scenario.s(), scenario.noise_var())?;
    let similarity_dist = frame
        .vec()
        .iter()
        .zip(scenario.x0().vec())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(MetricReport {
        papr_linear,
        papr_db: to_db(papr_linear),
        mui_energy: mui_energy(scenario.h(), frame, scenario.s())?,
        similarity_dist,
        per_user_sinr,
        sum_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn papr_of_constant_modulus_is_one() {
        let x: Vec<Complex64> =
            (0..16).map(|i| Complex64::from_polar(0.25, i as f64 * 0.7)).collect();
        assert_relative_eq!(papr(&x).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn papr_of_single_spike_is_sample_count() {
        let mut x = vec![Complex64::ZERO; 8];
        x[3] = Complex64::new(0.0, 1.0);
        assert_relative_eq!(papr(&x).unwrap(), 8.0, max_relative = 1e-12);
    }

    #[test]
    fn papr_rejects_zero_vector() {
        assert!(papr(&[Complex64::ZERO; 4]).is_err());
    }

    #[test]
    fn papr_is_scale_invariant() {
        let x: Vec<Complex64> =
            (0..12).map(|i| Complex64::new(i as f64 * 0.3 - 1.0, (i % 5) as f64)).collect();
        let scaled: Vec<Complex64> = x.iter().map(|z| z * Complex64::new(-2.5, 1.25)).collect();
        assert_relative_eq!(papr(&x).unwrap(), papr(&scaled).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn mui_zero_at_identity_zero_frame() {
        let h = DMatrix::<Complex64>::identity(2, 2);
        let s = DMatrix::from_fn(2, 3, |k, l| Complex64::new(k as f64, l as f64));
        let x = WaveformFrame::zeros(2, 3);
        let expected: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(mui_energy(&h, &x, &s).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn rate_hits_awgn_capacity_when_interference_free() {
        let h = DMatrix::<Complex64>::identity(2, 2);
        let s = DMatrix::from_fn(2, 4, |_, l| {
            Complex64::from_polar(1.0, l as f64 * std::f64::consts::FRAC_PI_3)
        });
        let x = WaveformFrame::from_matrix(&s); // identity channel: X = S is MUI-free
        let (sinr, rate) = sinr_and_rate(&h, &x, &s, 0.1).unwrap();
        for v in sinr {
            assert_relative_eq!(v, 10.0, max_relative = 1e-12);
        }
        assert_relative_eq!(rate, 11f64.log2(), max_relative = 1e-12);
    }

    #[test]
    fn ccdf_step_at_common_value() {
        let samples = vec![2.0; 10];
        let curve = ccdf(&samples, &[1.0, 2.0, 3.0]);
        assert_eq!(curve, vec![(1.0, 1.0), (2.0, 0.0), (3.0, 0.0)]);
    }

    #[test]
    fn ccdf_sorts_thresholds_and_decreases() {
        let samples = vec![0.5, 1.5, 2.5, 3.5];
        let curve = ccdf(&samples, &[3.0, 1.0, 2.0]);
        let gammas: Vec<f64> = curve.iter().map(|(g, _)| *g).collect();
        assert_eq!(gammas, vec![1.0, 2.0, 3.0]);
        for pair in curve.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
        }
    }

    #[test]
    fn ambiguity_peak_is_one_and_far_lag_unreachable() {
        let x: Vec<Complex64> =
            (0..8).map(|i| Complex64::from_polar(1.0, i as f64 * 0.9)).collect();
        let surf = ambiguity(&x, 7, &[0.0]).unwrap();
        let zero_delay = surf.delays.iter().position(|&d| d == 0).unwrap();
        assert_relative_eq!(surf.value(zero_delay, 0), 1.0, max_relative = 1e-12);
        assert!(ambiguity(&x, 8, &[0.0]).is_err());
    }

    #[test]
    fn surface_correlates_perfectly_with_itself() {
        let x: Vec<Complex64> =
            (0..6).map(|i| Complex64::from_polar(1.0, i as f64 * 1.3)).collect();
        let surf = ambiguity(&x, 3, &[-1.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(surface_xcorr(&surf, &surf).unwrap(), 1.0, max_relative = 1e-12);
        let other = ambiguity(&x, 2, &[-1.0, 0.0, 1.0]).unwrap();
        assert!(surface_xcorr(&surf, &other).is_err());
    }

    #[test]
    fn taylor_window_matches_reference_values() {
        // Independently generated reference (nbar=4, 35 dB, length 8).
        let expected = [
            0.344193923336118,
            0.766421795568369,
            1.275994648610177,
            1.613389632485337,
            1.613389632485337,
            1.275994648610177,
            0.766421795568369,
            0.344193923336118,
        ];
        let w = taylor_window(8, 4, 35.0);
        for (a, b) in w.iter().zip(expected) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn matched_filter_peaks_at_zero_lag() {
        let x: Vec<Complex64> =
            (0..32).map(|i| Complex64::from_polar(1.0, (i * i) as f64 * 0.1)).collect();
        let profile = pulse_compression(&x, &x, &Window::Rectangular).unwrap();
        assert_relative_eq!(profile[0], 0.0, epsilon = 1e-9);
        for &v in &profile[1..] {
            assert!(v < 0.0);
        }
    }

    #[test]
    fn pulse_compression_rejects_zero_rows() {
        let x = vec![Complex64::new(1.0, 0.0); 8];
        let z = vec![Complex64::ZERO; 8];
        assert!(pulse_compression(&z, &x, &Window::Rectangular).is_err());
        assert!(pulse_compression(&x, &z, &Window::Rectangular).is_err());
    }

    #[test]
    fn clip_is_identity_inside_cap_and_idempotent() {
        let x: Vec<Complex64> =
            (0..10).map(|i| Complex64::from_polar(1.0, i as f64)).collect();
        assert_eq!(hpa_clip(&x, 2.0).unwrap(), x);

        let mut spiky = vec![Complex64::new(0.1, 0.0); 16];
        spiky[5] = Complex64::new(3.0, -4.0);
        let once = hpa_clip(&spiky, 2.0).unwrap();
        let twice = hpa_clip(&once, 2.0).unwrap();
        assert_eq!(once, twice);
        assert!(papr(&once).unwrap() <= 2.0 + 1e-9);
    }

    #[test]
    fn clip_to_unity_flattens_magnitudes() {
        let mut spiky = vec![Complex64::new(0.5, 0.0); 6];
        spiky[0] = Complex64::new(0.0, 7.0);
        let flat = hpa_clip(&spiky, 1.0).unwrap();
        let m0 = flat[0].norm();
        for z in &flat {
            assert_relative_eq!(z.norm(), m0, max_relative = 1e-9);
        }
        // Phase survives clipping.
        assert!(flat[0].re.abs() < 1e-12 && flat[0].im > 0.0);
    }
}
