//! The transmit waveform container.
//!
//! A waveform frame is a complex `N x L` matrix: one row per transmit
//! antenna, one column per time sample. Two flattened views are used by the
//! optimizers:
//!
//! * the *vectorized* view `x = vec(X)`, a length-`NL` complex vector that
//!   stacks the matrix columns;
//! * the *real-stacked* view `x̄ = [Re(x)^T Im(x)^T]^T`, a length-`2NL` real
//!   vector on which the ADMM iteration operates.
//!
//! Both views are bijective with the matrix, and all three share Euclidean
//! norm: `‖x̄‖ = ‖x‖ = ‖X‖_F`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex `N x L` transmit frame, stored column-major so that the
/// vectorized view is a plain slice of the storage.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformFrame {
    n_antennas: usize,
    n_samples: usize,
    /// Column-major entries; `data[l * n_antennas + m]` is `X(m, l)`.
    data: Vec<Complex64>,
}

impl WaveformFrame {
    /// All-zero frame.
    pub fn zeros(n_antennas: usize, n_samples: usize) -> Self {
        WaveformFrame {
            n_antennas,
            n_samples,
            data: vec![Complex64::ZERO; n_antennas * n_samples],
        }
    }

    /// Build from a column-stacked vector `x` of length `N·L`.
    pub fn from_vec(n_antennas: usize, n_samples: usize, x: Vec<Complex64>) -> Result<Self> {
        if x.len() != n_antennas * n_samples {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} cannot fill a {}x{} frame",
                x.len(),
                n_antennas,
                n_samples
            )));
        }
        Ok(WaveformFrame { n_antennas, n_samples, data: x })
    }

    /// Build from a real-stacked vector `x̄` of length `2·N·L`
    /// (real parts first, then imaginary parts).
    pub fn from_real_stack(n_antennas: usize, n_samples: usize, xbar: &[f64]) -> Result<Self> {
        let nl = n_antennas * n_samples;
        if xbar.len() != 2 * nl {
            return Err(Error::ShapeMismatch(format!(
                "real stack of length {} cannot fill a {}x{} frame (need {})",
                xbar.len(),
                n_antennas,
                n_samples,
                2 * nl
            )));
        }
        let data = (0..nl).map(|i| Complex64::new(xbar[i], xbar[nl + i])).collect();
        Ok(WaveformFrame { n_antennas, n_samples, data })
    }

    /// Build entry-by-entry; `f(m, l)` fills `X(m, l)`.
    pub fn from_fn(
        n_antennas: usize,
        n_samples: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        let mut frame = WaveformFrame::zeros(n_antennas, n_samples);
        for l in 0..n_samples {
            for m in 0..n_antennas {
                frame.data[l * n_antennas + m] = f(m, l);
            }
        }
        frame
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Number of complex entries, `N·L`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, antenna: usize, sample: usize) -> Complex64 {
        self.data[sample * self.n_antennas + antenna]
    }

    pub fn set(&mut self, antenna: usize, sample: usize, value: Complex64) {
        self.data[sample * self.n_antennas + antenna] = value;
    }

    /// The vectorized (column-stacked) view `x = vec(X)`.
    pub fn vec(&self) -> &[Complex64] {
        &self.data
    }

    /// One antenna row as an owned vector of `L` samples.
    pub fn row(&self, antenna: usize) -> Vec<Complex64> {
        (0..self.n_samples).map(|l| self.get(antenna, l)).collect()
    }

    /// The real-stacked view `x̄ = [Re(x)^T Im(x)^T]^T` of length `2NL`.
    pub fn real_stack(&self) -> Vec<f64> {
        let nl = self.data.len();
        let mut xbar = vec![0.0; 2 * nl];
        for (i, z) in self.data.iter().enumerate() {
            xbar[i] = z.re;
            xbar[nl + i] = z.im;
        }
        xbar
    }

    /// Frobenius norm of the matrix (equals the 2-norm of both views).
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Scale every entry in place.
    pub fn scale(&mut self, factor: f64) {
        for z in &mut self.data {
            *z *= factor;
        }
    }

    /// Interop with the linear-algebra layer.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_column_slice(self.n_antennas, self.n_samples, &self.data)
    }

    pub fn from_matrix(m: &DMatrix<Complex64>) -> Self {
        WaveformFrame {
            n_antennas: m.nrows(),
            n_samples: m.ncols(),
            data: m.as_slice().to_vec(),
        }
    }
}

/// Real-stack a bare complex slice (same layout as
/// [`WaveformFrame::real_stack`]).
pub fn real_stack_of(x: &[Complex64]) -> Vec<f64> {
    let nl = x.len();
    let mut xbar = vec![0.0; 2 * nl];
    for (i, z) in x.iter().enumerate() {
        xbar[i] = z.re;
        xbar[nl + i] = z.im;
    }
    xbar
}

/// Inverse of [`real_stack_of`].
pub fn unstack(xbar: &[f64]) -> Vec<Complex64> {
    debug_assert!(xbar.len() % 2 == 0);
    let nl = xbar.len() / 2;
    (0..nl).map(|i| Complex64::new(xbar[i], xbar[nl + i])).collect()
}
