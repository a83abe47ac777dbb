//! Fourier differentiation on the periodic string grid `σ_j = jπ/M`.
//!
//! The period is `π`, so grid mode `k` is `exp(2ikσ)` and differentiates to `2ik`.
//! The Nyquist mode (`k = M/2`) of a real field has zero derivative at the nodes.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Nodes `σ_j = jπ/M`.
pub fn sigma_grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| j as f64 * PI / m as f64).collect()
}

/// Dense spectral first-derivative matrix for period `π`.
///
/// Closed form of the trigonometric-interpolant derivative for even `M`;
/// `M = 1` gives the zero matrix.
pub fn diff_matrix(m: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m, m);
    if m < 2 {
        return d;
    }
    let h = 2.0 * PI / m as f64;
    for j in 0..m {
        for l in 0..m {
            if j != l {
                let off = j as isize - l as isize;
                let sign = if off.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                // d/dσ = 2 d/dθ with θ = 2σ.
                d[(j, l)] = sign / (0.5 * off as f64 * h).tan();
            }
        }
    }
    d
}

/// Signed grid wavenumber of FFT bin `b` (Nyquist reported as `+M/2`).
fn wavenumber(b: usize, m: usize) -> i64 {
    if b <= m / 2 {
        b as i64
    } else {
        b as i64 - m as i64
    }
}

/// FFT-backed periodic operators for one grid size.
#[derive(Clone)]
pub struct PeriodicFft {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PeriodicFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicFft").field("m", &self.m).finish()
    }
}

impl PeriodicFft {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        PeriodicFft {
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    fn apply(&self, values: &[f64], mut symbol: impl FnMut(usize, i64) -> Complex64) -> Vec<f64> {
        let m = self.m;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        for (b, c) in buf.iter_mut().enumerate() {
            *c *= symbol(b, wavenumber(b, m));
        }
        self.inverse.process(&mut buf);
        buf.iter().map(|c| c.re / m as f64).collect()
    }

    /// Spectral derivative `f'(σ_j)`.
    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        let m = self.m;
        self.apply(values, |_, k| {
            if m % 2 == 0 && k == (m / 2) as i64 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, 2.0 * k as f64)
            }
        })
    }

    /// Exact translation `f(σ_j − shift)` of the trigonometric interpolant.
    pub fn shift(&self, values: &[f64], shift: f64) -> Vec<f64> {
        let m = self.m;
        self.apply(values, |_, k| {
            let phase = -2.0 * k as f64 * shift;
            if m % 2 == 0 && k == (m / 2) as i64 {
                // Only the cosine part of the Nyquist mode is visible on the grid.
                Complex64::new(phase.cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, phase)
            }
        })
    }
}

/// Orthonormal real Fourier basis of `R^M` grouped by wavenumber.
#[derive(Debug, Clone)]
pub struct RealFourierBasis {
    /// Columns are the basis vectors.
    pub vectors: DMatrix<f64>,
    /// Column indices per wavenumber `k = 0, 1, ..., M/2`.
    pub blocks: Vec<Vec<usize>>,
}

impl RealFourierBasis {
    pub fn new(m: usize) -> Self {
        let sigma = sigma_grid(m);
        let mut vectors = DMatrix::zeros(m, m);
        let mut blocks = Vec::new();
        let norm0 = 1.0 / (m as f64).sqrt();
        let norm = (2.0 / m as f64).sqrt();
        let mut col = 0;
        for j in 0..m {
            vectors[(j, col)] = norm0;
        }
        blocks.push(vec![col]);
        col += 1;
        let kmax = if m % 2 == 0 { m / 2 } else { (m + 1) / 2 };
        for k in 1..kmax {
            for j in 0..m {
                let arg = 2.0 * k as f64 * sigma[j];
                vectors[(j, col)] = norm * arg.cos();
                vectors[(j, col + 1)] = norm * arg.sin();
            }
            blocks.push(vec![col, col + 1]);
            col += 2;
        }
        if m % 2 == 0 && m >= 2 {
            for j in 0..m {
                vectors[(j, col)] = if j % 2 == 0 { norm0 } else { -norm0 };
            }
            blocks.push(vec![col]);
        }
        RealFourierBasis { vectors, blocks }
    }

    /// Basis vectors of block `b` as an `M × width` matrix.
    pub fn block(&self, b: usize) -> DMatrix<f64> {
        let cols = &self.blocks[b];
        DMatrix::from_fn(self.vectors.nrows(), cols.len(), |i, c| self.vectors[(i, cols[c])])
    }
}
