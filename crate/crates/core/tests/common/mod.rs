//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use qap_core::string_action::StringScenario;

/// Nodes `σ_j = jπ/M`.
pub fn sigma_nodes(m: usize) -> Vec<f64> {
    (0..m).map(|j| j as f64 * PI / m as f64).collect()
}

/// Fourier differentiation matrix on `[0, π)` from the cotangent formula.
pub fn cot_diff_matrix(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |j, l| {
        if j == l {
            0.0
        } else {
            let d = j as f64 - l as f64;
            let sign = if (j + l) % 2 == 0 { 1.0 } else { -1.0 };
            sign / (d * PI / m as f64).tan()
        }
    })
}

/// Quadratic form `A` (with `H = ½ zᵀAz`, `z = (x, P)`) of the two moving sectors
/// plus the decoupled Nyquist oscillator.
pub fn reference_hamiltonian(s: &StringScenario) -> DMatrix<f64> {
    let m = s.sigma_points;
    let h = PI / m as f64;
    let d = cot_diff_matrix(m);
    let nyq = DMatrix::from_fn(m, 1, |j, _| if j % 2 == 0 { 1.0 } else { -1.0 } / (m as f64).sqrt());
    let proj = if m > 1 { &nyq * nyq.transpose() } else { DMatrix::zeros(m, m) };
    let pi_tilde = DMatrix::identity(m, m) - &proj;
    let mut a = DMatrix::zeros(2 * m, 2 * m);
    for (lapse, sign) in [(&s.n1, 1.0), (&s.n2, -1.0)] {
        let mut b = DMatrix::zeros(m, 2 * m);
        b.view_mut((0, 0), (m, m)).copy_from(&(&d * (sign * s.gamma)));
        b.view_mut((0, m), (m, m)).copy_from(&(&pi_tilde / h));
        let n = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lapse));
        a += b.transpose() * n * &b * (2.0 * h);
    }
    if m > 1 {
        let nbar = s.n1.iter().zip(&s.n2).map(|(a, b)| a + b).sum::<f64>() / m as f64;
        let g = s.gamma * m as f64;
        let mut xx = a.view_mut((0, 0), (m, m));
        xx += &proj * (2.0 * nbar * g * g * h);
        let mut pp = a.view_mut((m, m), (m, m));
        pp += &proj * (2.0 * nbar / h);
    }
    a
}

/// Positive frequencies of `H = ½zᵀAz` from the eigenvalues `±iω` of `J·A`,
/// via a real Schur decomposition. Returns the sorted nonzero `ω` (one per pair)
/// and the number of zero eigenvalues.
pub fn schur_frequencies(a: &DMatrix<f64>) -> (Vec<f64>, usize) {
    let n = a.nrows() / 2;
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    let eig = (j * a).complex_eigenvalues();
    let top = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut pos: Vec<f64> = eig.iter().filter(|z| z.im > 1e-7 * top.max(1.0)).map(|z| z.im).collect();
    pos.sort_by(f64::total_cmp);
    let zeros = 2 * n - 2 * pos.len();
    (pos, zeros)
}

/// σ-dependent positive profile `c·(1 + a·cos(2σ + φ))`.
pub fn lapse_profile(m: usize, c: f64, a: f64, phi: f64) -> Vec<f64> {
    sigma_nodes(m).iter().map(|x| c * (1.0 + a * (2.0 * x + phi).cos())).collect()
}

/// Smooth nonconstant boundary distribution.
pub fn wavy_boundary(m: usize, base: f64) -> Vec<f64> {
    sigma_nodes(m)
        .iter()
        .map(|x| base + 0.3 * (2.0 * x).cos() - 0.2 * (4.0 * x).sin())
        .collect()
}

/// Central-difference derivative.
pub fn central<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
