//! Problem-instance construction.
//!
//! A design instance couples a flat Rayleigh fading downlink channel `H`
//! (`K` users, `N` antennas), one frame of information symbols `S`, and a
//! unit-energy reference radar chirp `x0`. The communication-optimal point
//! of the design objective is the zero-forcing precoder target `x_comm`;
//! everything downstream measures distance from it.
//!
//! Scale convention: the stored symbol frame is the *effective* frame, i.e.
//! the raw constellation draw divided by the Frobenius norm of its ZF
//! precoder. With that convention `x_comm` is exactly unit-norm (so the
//! similarity radius `ε = 2` is the inactive regime), `H·x_comm` reproduces
//! the stored symbols exactly, and the noise variance is calibrated against
//! the stored symbol energy. The applied divisor is kept as
//! [`Scenario::zf_scale`] so the raw scale can always be recovered.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::WaveformFrame;

// ---------------------------------------------------------------- seeds ----

/// Derive a decorrelated stream seed from a base seed and a stream index
/// (splitmix64 finalizer). Used so one scenario seed can drive channel,
/// symbol, and noise generation independently.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// -------------------------------------------------------- constellations ----

/// Square QAM constellations with unit average symbol energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
    #[serde(rename = "64qam")]
    Qam64,
    #[serde(rename = "256qam")]
    Qam256,
}

impl Constellation {
    /// Points with exact unit mean energy; the set is closed under negation.
    pub fn points(&self) -> Vec<Complex64> {
        let side = self.side();
        // Levels -(side-1), ..., -1, 1, ..., side-1 stepping by 2; mean
        // per-axis energy is (side^2 - 1)/3, so the grid energy is twice that.
        let scale = (3.0 / (2.0 * (side * side - 1) as f64)).sqrt();
        let mut pts = Vec::with_capacity(side * side);
        for i in 0..side {
            for q in 0..side {
                let re = (2 * i as i64 - (side as i64 - 1)) as f64;
                let im = (2 * q as i64 - (side as i64 - 1)) as f64;
                pts.push(Complex64::new(re * scale, im * scale));
            }
        }
        pts
    }

    fn side(&self) -> usize {
        match self {
            Constellation::Qpsk => 2,
            Constellation::Qam16 => 4,
            Constellation::Qam64 => 8,
            Constellation::Qam256 => 16,
        }
    }

    pub fn order(&self) -> usize {
        let s = self.side();
        s * s
    }

    pub fn bits_per_symbol(&self) -> u32 {
        (self.order() as f64).log2() as u32
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Constellation::Qpsk => "qpsk",
            Constellation::Qam16 => "16qam",
            Constellation::Qam64 => "64qam",
            Constellation::Qam256 => "256qam",
        };
        f.write_str(s)
    }
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Ok(Constellation::Qpsk),
            "16qam" => Ok(Constellation::Qam16),
            "64qam" => Ok(Constellation::Qam64),
            "256qam" => Ok(Constellation::Qam256),
            other => Err(Error::InvalidParameter(format!(
                "unknown constellation {other:?} (expected qpsk|16qam|64qam|256qam)"
            ))),
        }
    }
}

// ----------------------------------------------------------------- chirps ----

/// Reference radar chirp families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ChirpKind {
    /// Orthogonal linear-FM chirp bank, one chirp slope per antenna.
    #[serde(rename = "lfm")]
    OrthogonalLfm,
    /// BPSK maximal-length sequence, tiled per antenna with cyclic shifts.
    #[serde(rename = "mseq")]
    MSequence {
        /// Exponents of the LFSR feedback polynomial (the constant term is
        /// implied), e.g. `[3, 1]` for `x^3 + x + 1`.
        taps: Vec<u32>,
    },
}

impl ChirpKind {
    /// Default m-sequence taps: the primitive trinomial `x^3 + x + 1`.
    pub fn default_mseq() -> Self {
        ChirpKind::MSequence { taps: vec![3, 1] }
    }

    pub fn generate(&self, n_antennas: usize, n_samples: usize) -> Result<WaveformFrame> {
        match self {
            ChirpKind::OrthogonalLfm => Ok(orthogonal_lfm_chirp(n_antennas, n_samples)),
            ChirpKind::MSequence { taps } => m_sequence_chirp(n_antennas, n_samples, taps),
        }
    }
}

/// Orthogonal LFM chirp bank:
/// `X0(m,ℓ) = exp(j2πm(ℓ-1)/L)·exp(jπm(ℓ-1)²/L)/√(NL)` with the antenna
/// index `m` running 1..N. Every entry has magnitude `1/√(NL)`, so the frame
/// has unit norm and unit PAPR.
pub fn orthogonal_lfm_chirp(n_antennas: usize, n_samples: usize) -> WaveformFrame {
    assert!(n_antennas >= 1 && n_samples >= 1);
    let nl = (n_antennas * n_samples) as f64;
    let amp = 1.0 / nl.sqrt();
    let l = n_samples as f64;
    WaveformFrame::from_fn(n_antennas, n_samples, |row, col| {
        let m = (row + 1) as f64;
        let t = col as f64; // ℓ - 1
        let phase = 2.0 * std::f64::consts::PI * m * t / l
            + std::f64::consts::PI * m * t * t / l;
        Complex64::from_polar(amp, phase)
    })
}

/// One period of the maximal-length sequence for the given feedback taps,
/// as ±1 chips. Errors unless the polynomial is primitive (period 2^d − 1).
fn m_sequence_period(taps: &[u32]) -> Result<Vec<f64>> {
    let degree = *taps.iter().max().ok_or_else(|| {
        Error::InvalidParameter("m-sequence taps must be nonempty".into())
    })? as usize;
    if degree == 0 || degree > 24 {
        return Err(Error::InvalidParameter(format!(
            "m-sequence degree {degree} out of range 1..=24"
        )));
    }
    let period = (1usize << degree) - 1;
    let mut state: u32 = 1;
    let mut chips = Vec::with_capacity(period);
    for step in 0..period {
        let out = state & 1;
        chips.push(1.0 - 2.0 * out as f64);
        let mut fb = 0u32;
        for &t in taps {
            fb ^= (state >> (degree - t as usize)) & 1;
        }
        state = (state >> 1) | (fb << (degree - 1));
        if state == 1 && step + 1 < period {
            return Err(Error::InvalidParameter(format!(
                "taps {taps:?} are not primitive: register returned to the seed after {} steps, period should be {period}",
                step + 1
            )));
        }
    }
    if state != 1 {
        return Err(Error::InvalidParameter(format!(
            "taps {taps:?} are not primitive: register did not close its cycle at {period} steps"
        )));
    }
    Ok(chips)
}

/// BPSK m-sequence chirp: each antenna row tiles the ±1 maximal-length
/// sequence (truncated or repeated to `L` samples) with a per-antenna cyclic
/// shift spreading the rows across the period; all entries are `±1/√(NL)`.
pub fn m_sequence_chirp(n_antennas: usize, n_samples: usize, taps: &[u32]) -> Result<WaveformFrame> {
    assert!(n_antennas >= 1 && n_samples >= 1);
    let chips = m_sequence_period(taps)?;
    let period = chips.len();
    let amp = 1.0 / ((n_antennas * n_samples) as f64).sqrt();
    Ok(WaveformFrame::from_fn(n_antennas, n_samples, |row, col| {
        let shift = row * period / n_antennas;
        let chip = chips[(shift + col) % period];
        Complex64::new(amp * chip, 0.0)
    }))
}

// -------------------------------------------------------------- channels ----

/// i.i.d. circularly-symmetric complex Gaussian channel, zero mean and unit
/// variance per entry (flat Rayleigh fading). Deterministic per seed.
pub fn generate_channel(k_users: usize, n_antennas: usize, seed: u64) -> Result<DMatrix<Complex64>> {
    if k_users < 1 {
        return Err(Error::InvalidParameter("need at least one user".into()));
    }
    if k_users > n_antennas {
        return Err(Error::RankDeficient(format!(
            "K={k_users} users exceed N={n_antennas} antennas; the ZF precoder needs K <= N"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    Ok(DMatrix::from_fn(k_users, n_antennas, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    }))
}

/// Uniform i.i.d. draw of a `K x L` symbol frame from the constellation.
pub fn generate_symbols(
    constellation: Constellation,
    k_users: usize,
    n_samples: usize,
    seed: u64,
) -> DMatrix<Complex64> {
    let points = constellation.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(k_users, n_samples, |_, _| points[rng.random_range(0..points.len())])
}

// ------------------------------------------------------------- precoding ----

/// Zero-forcing precode output: the unit-norm frame plus the norm that was
/// divided out.
#[derive(Debug, Clone)]
pub struct ZfPrecoded {
    pub frame: WaveformFrame,
    /// Frobenius norm of the unscaled precoder `H^H (H H^H)^{-1} S`.
    pub scale: f64,
}

/// Numerical row-rank check: every singular value must clear
/// `1e-10 · σ_max`.
fn check_full_row_rank(h: &DMatrix<Complex64>) -> Result<()> {
    let svd = h.clone().svd(false, false);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return Err(Error::RankDeficient("channel matrix is zero".into()));
    }
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count();
    if rank < h.nrows() {
        return Err(Error::RankDeficient(format!(
            "numerical rank {rank} < K={} rows (σ_min/σ_max = {:.3e})",
            h.nrows(),
            svd.singular_values.min() / smax
        )));
    }
    Ok(())
}

/// Zero-forcing precoder for `H X = S`: `X = H^H (H H^H)^{-1} S`, returned
/// with unit Frobenius norm alongside the divided-out scale.
pub fn zf_precode(h: &DMatrix<Complex64>, s: &DMatrix<Complex64>) -> Result<ZfPrecoded> {
    if h.nrows() != s.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "channel has {} rows but symbol frame has {}",
            h.nrows(),
            s.nrows()
        )));
    }
    if h.nrows() > h.ncols() {
        return Err(Error::RankDeficient(format!(
            "K={} > N={}: wide channel required",
            h.nrows(),
            h.ncols()
        )));
    }
    check_full_row_rank(h)?;
    let gram = h * h.adjoint();
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("Gram matrix H·H^H is not positive definite".into()))?;
    let x_unscaled = h.adjoint() * chol.solve(s);

    // The precoder must reproduce S essentially exactly before rescaling.
    let residual = (h * &x_unscaled - s).norm();
    if residual > 1e-9 * s.norm().max(1e-300) {
        return Err(Error::RankDeficient(format!(
            "ZF residual {residual:.3e} exceeds tolerance; channel is too ill-conditioned"
        )));
    }

    let scale = x_unscaled.norm();
    if scale <= 0.0 {
        return Err(Error::Degenerate("ZF precoder is the zero frame".into()));
    }
    let mut frame = WaveformFrame::from_matrix(&x_unscaled);
    frame.scale(1.0 / scale);
    Ok(ZfPrecoded { frame, scale })
}

// -------------------------------------------------------------- scenario ----

/// One complete design instance. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Scenario {
    h: DMatrix<Complex64>,
    /// Effective symbol frame (raw symbols divided by `zf_scale`).
    s: DMatrix<Complex64>,
    x0: WaveformFrame,
    x_comm: WaveformFrame,
    noise_var: f64,
    rng_seed: u64,
    zf_scale: f64,
}

impl Scenario {
    /// Assemble a scenario from raw parts. `s_raw` is in constellation scale;
    /// it is divided by the ZF norm here so that the stored frame pairs with
    /// the unit-norm `x_comm`.
    pub fn from_parts(
        h: DMatrix<Complex64>,
        s_raw: DMatrix<Complex64>,
        x0: WaveformFrame,
        noise_var: f64,
        rng_seed: u64,
    ) -> Result<Self> {
        if noise_var < 0.0 {
            return Err(Error::InvalidParameter(format!("noise variance {noise_var} < 0")));
        }
        if x0.n_antennas() != h.ncols() || x0.n_samples() != s_raw.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "chirp is {}x{} but the instance needs {}x{}",
                x0.n_antennas(),
                x0.n_samples(),
                h.ncols(),
                s_raw.ncols()
            )));
        }
        let x0_norm = x0.norm();
        if (x0_norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "reference chirp norm {x0_norm} is not 1 ± 1e-9"
            )));
        }
        let precoded = zf_precode(&h, &s_raw)?;
        let s = s_raw / Complex64::new(precoded.scale, 0.0);
        Ok(Scenario {
            h,
            s,
            x0,
            x_comm: precoded.frame,
            noise_var,
            rng_seed,
            zf_scale: precoded.scale,
        })
    }

    /// Draw a random instance: Rayleigh channel, uniform symbols, reference
    /// chirp, and noise variance calibrated so that
    /// `mean |S_eff|² / noise_var` equals the requested SNR.
    pub fn generate(
        n_antennas: usize,
        k_users: usize,
        n_samples: usize,
        constellation: Constellation,
        chirp: &ChirpKind,
        snr_db: f64,
        seed: u64,
    ) -> Result<Self> {
        let h = generate_channel(k_users, n_antennas, derive_seed(seed, 0))?;
        let s_raw = generate_symbols(constellation, k_users, n_samples, derive_seed(seed, 1));
        let x0 = chirp.generate(n_antennas, n_samples)?;
        let mut scenario = Scenario::from_parts(h, s_raw, x0, 0.0, seed)?;
        let mean_sym_energy =
            scenario.s.iter().map(|z| z.norm_sqr()).sum::<f64>() / scenario.s.len() as f64;
        scenario.noise_var = mean_sym_energy / 10f64.powf(snr_db / 10.0);
        Ok(scenario)
    }

    pub fn h(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    /// Effective symbol frame (see the module docs for the scale convention).
    pub fn s(&self) -> &DMatrix<Complex64> {
        &self.s
    }

    /// Raw symbol frame in constellation scale.
    pub fn s_raw(&self) -> DMatrix<Complex64> {
        &self.s * Complex64::new(self.zf_scale, 0.0)
    }

    pub fn x0(&self) -> &WaveformFrame {
        &self.x0
    }

    /// Unit-norm ZF precoder target; the unconstrained communication optimum.
    pub fn x_comm(&self) -> &WaveformFrame {
        &self.x_comm
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Norm divided out of the raw ZF precoder (the D-scale factor).
    pub fn zf_scale(&self) -> f64 {
        self.zf_scale
    }

    pub fn k_users(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_samples(&self) -> usize {
        self.s.ncols()
    }

    pub fn nl(&self) -> usize {
        self.n_antennas() * self.n_samples()
    }
}
