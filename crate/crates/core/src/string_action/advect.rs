//! Transport of the multipliers `λ₁, λ₂` in `τ`.
//!
//! With `τ`-independent lapses the stationarity conditions reduce to
//! `∂τ λ₁ = 4γN₁ λ₁′` and `∂τ λ₂ = −4γN₂ λ₂′` with `λ₁,₂(0) = −2N₁,₂ p₀`:
//! `λ₁` moves toward decreasing `σ`, `λ₂` toward increasing `σ`.
//! [`AdvectionConvention::Printed`] flips both speeds and the sign of `λ₂(0)`.

use nalgebra::DMatrix;

use super::{LambdaField, StringScenario};
use crate::error::{QapError, Result};
use crate::spectral::PeriodicFft;

/// Largest `Δτ·|λ|` on the imaginary axis kept for classical RK4 (the bound is `2√2`).
const RK4_LIMIT: f64 = 2.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdvectionConvention {
    /// Signs obtained by differentiating the discretized action.
    #[default]
    Derived,
    /// Right-moving `λ₁`, left-moving `λ₂`, `λ₁,₂(0) = ∓2N₁,₂p₀`.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Exact shift for σ-independent lapses, RK4 otherwise.
    #[default]
    Auto,
    /// Classical RK4 in `τ` with spectral `σ` derivatives.
    Rk4,
    /// Exact Fourier phase shift; σ-independent lapses only.
    PhaseShift,
    /// First-order upwind differences with explicit Euler substeps.
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AdvectOptions {
    pub convention: AdvectionConvention,
    pub integrator: Integrator,
}

impl AdvectionConvention {
    /// `(direction of λ₁, direction of λ₂, sign of λ₂(0))`, where direction `+1`
    /// means `∂τλ = +c λ′`.
    fn signs(self) -> (f64, f64, f64) {
        match self {
            AdvectionConvention::Derived => (1.0, -1.0, -1.0),
            AdvectionConvention::Printed => (-1.0, 1.0, 1.0),
        }
    }
}

/// Advects the multipliers from initial data set by `p0`, using the default options.
pub fn lambda_advect(scenario: &StringScenario, p0: &[f64]) -> Result<LambdaField> {
    lambda_advect_with(scenario, p0, AdvectOptions::default())
}

pub fn lambda_advect_with(scenario: &StringScenario, p0: &[f64], options: AdvectOptions) -> Result<LambdaField> {
    let m = scenario.sigma_points;
    if p0.len() != m || scenario.n1.len() != m || scenario.n2.len() != m {
        return Err(QapError::shape("p0 and lapses must have sigma_points entries"));
    }
    if scenario.n1.iter().chain(&scenario.n2).any(|&n| !(n > 0.0)) {
        return Err(QapError::domain("lapses N1, N2 must be strictly positive"));
    }
    let (dir1, dir2, sign2) = options.convention.signs();
    let init1: Vec<f64> = (0..m).map(|j| -2.0 * scenario.n1[j] * p0[j]).collect();
    let init2: Vec<f64> = (0..m).map(|j| sign2 * 2.0 * scenario.n2[j] * p0[j]).collect();
    let speed1: Vec<f64> = scenario.n1.iter().map(|n| dir1 * 4.0 * scenario.gamma * n).collect();
    let speed2: Vec<f64> = scenario.n2.iter().map(|n| dir2 * 4.0 * scenario.gamma * n).collect();

    let uniform = scenario.lapse_is_uniform();
    let integrator = match options.integrator {
        Integrator::Auto if uniform => Integrator::PhaseShift,
        Integrator::Auto => Integrator::Rk4,
        Integrator::PhaseShift if !uniform => {
            return Err(QapError::domain("phase-shift propagation needs sigma-independent lapses"))
        }
        other => other,
    };

    let fft = PeriodicFft::new(m);
    let k = scenario.tau_steps;
    let transport = |init: &[f64], speed: &[f64]| -> Result<DMatrix<f64>> {
        match integrator {
            Integrator::PhaseShift => Ok(phase_shift(&fft, init, speed[0], k)),
            Integrator::Rk4 => rk4(&fft, init, speed, k),
            Integrator::Upwind => Ok(upwind(init, speed, k)),
            Integrator::Auto => unreachable!(),
        }
    };
    let lam1 = transport(&init1, &speed1)?;
    let lam2 = transport(&init2, &speed2)?;
    let d1 = DMatrix::from_fn(k + 1, m, |r, c| -lam1[(r, c)] / (2.0 * scenario.n1[c]));
    let d2 = DMatrix::from_fn(k + 1, m, |r, c| -lam2[(r, c)] / (2.0 * scenario.n2[c]));
    Ok(LambdaField { lam1, lam2, d1, d2, p0: p0.to_vec() })
}

/// `∂τλ = cλ′` solved by `λ(τ, σ) = λ(0, σ + cτ)`.
fn phase_shift(fft: &PeriodicFft, init: &[f64], speed: f64, steps: usize) -> DMatrix<f64> {
    let m = init.len();
    let mut out = DMatrix::zeros(steps + 1, m);
    for r in 0..=steps {
        let tau = r as f64 / steps as f64;
        let row = if speed == 0.0 { init.to_vec() } else { fft.shift(init, -speed * tau) };
        for (c, v) in row.into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    out
}

fn rk4(fft: &PeriodicFft, init: &[f64], speed: &[f64], steps: usize) -> Result<DMatrix<f64>> {
    let m = init.len();
    let dt = 1.0 / steps as f64;
    let cmax = speed.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let top_wavenumber = m.saturating_sub(2) as f64;
    let stiffness = cmax * top_wavenumber;
    if dt * stiffness > RK4_LIMIT {
        let suggested = (stiffness / RK4_LIMIT).ceil() as usize;
        return Err(QapError::StepSize {
            message: format!(
                "RK4 step {dt:.3e} exceeds the stability bound for transport speed {cmax:.3e} on {m} nodes"
            ),
            suggested_steps: suggested.max(steps + 1),
        });
    }
    let rhs = |v: &[f64]| -> Vec<f64> {
        fft.derivative(v).iter().zip(speed).map(|(d, c)| c * d).collect()
    };
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };

    let mut out = DMatrix::zeros(steps + 1, m);
    let mut v = init.to_vec();
    for (c, x) in v.iter().enumerate() {
        out[(0, c)] = *x;
    }
    for r in 1..=steps {
        let k1 = rhs(&v);
        let k2 = rhs(&axpy(&v, 0.5 * dt, &k1));
        let k3 = rhs(&axpy(&v, 0.5 * dt, &k2));
        let k4 = rhs(&axpy(&v, dt, &k3));
        for j in 0..m {
            v[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            out[(r, j)] = v[j];
        }
    }
    Ok(out)
}

fn upwind(init: &[f64], speed: &[f64], steps: usize) -> DMatrix<f64> {
    let m = init.len();
    let dsigma = std::f64::consts::PI / m as f64;
    let cmax = speed.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let dt = 1.0 / steps as f64;
    let sub = ((cmax * dt / dsigma) / 0.9).ceil().max(1.0) as usize;
    let h = dt / sub as f64;

    let mut out = DMatrix::zeros(steps + 1, m);
    let mut v = init.to_vec();
    for (c, x) in v.iter().enumerate() {
        out[(0, c)] = *x;
    }
    let mut next = vec![0.0; m];
    for r in 1..=steps {
        for _ in 0..sub {
            for j in 0..m {
                let c = speed[j];
                // Information arrives from +σ when c > 0.
                let slope = if c > 0.0 {
                    (v[(j + 1) % m] - v[j]) / dsigma
                } else {
                    (v[j] - v[(j + m - 1) % m]) / dsigma
                };
                next[j] = v[j] + h * c * slope;
            }
            std::mem::swap(&mut v, &mut next);
        }
        for (c, x) in v.iter().enumerate() {
            out[(r, c)] = *x;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::sigma_grid;

    fn opts(convention: AdvectionConvention, integrator: Integrator) -> AdvectOptions {
        AdvectOptions { convention, integrator }
    }

    #[test]
    fn constant_data_stays_constant() {
        let s = StringScenario::uniform(16, 40, 0.8, 1.0, 2.0, 1.0);
        for integrator in [Integrator::PhaseShift, Integrator::Rk4, Integrator::Upwind] {
            let f = lambda_advect_with(&s, &[0.7; 16], opts(AdvectionConvention::Derived, integrator)).unwrap();
            assert!(f.lam1.iter().all(|v| (v + 1.4).abs() < 1e-12));
            assert!(f.lam2.iter().all(|v| (v + 2.8).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_tension_freezes_initial_data() {
        let s = StringScenario::uniform(8, 10, 0.0, 1.0, 1.0, 1.0);
        let p0: Vec<f64> = sigma_grid(8).iter().map(|x| (2.0 * x).sin()).collect();
        let f = lambda_advect_with(&s, &p0, opts(AdvectionConvention::Derived, Integrator::Rk4)).unwrap();
        for r in 0..=10 {
            for j in 0..8 {
                assert_eq!(f.lam1[(r, j)], -2.0 * p0[j]);
            }
        }
    }

    #[test]
    fn cosine_data_follows_characteristics() {
        let (m, k, gamma, n1, n2) = (64, 400, 0.3, 1.2, 0.7);
        let s = StringScenario::uniform(m, k, gamma, n1, n2, 1.0);
        let sig = sigma_grid(m);
        let p0: Vec<f64> = sig.iter().map(|x| (2.0 * x).cos()).collect();
        for (conv, dir1, dir2, sign2) in [
            (AdvectionConvention::Derived, 1.0, -1.0, -1.0),
            (AdvectionConvention::Printed, -1.0, 1.0, 1.0),
        ] {
            let f = lambda_advect_with(&s, &p0, opts(conv, Integrator::Rk4)).unwrap();
            let mut err: f64 = 0.0;
            for r in 0..=k {
                let tau = r as f64 / k as f64;
                for j in 0..m {
                    let e1 = -2.0 * n1 * (2.0 * (sig[j] + dir1 * 4.0 * gamma * n1 * tau)).cos();
                    let e2 = sign2 * 2.0 * n2 * (2.0 * (sig[j] + dir2 * 4.0 * gamma * n2 * tau)).cos();
                    err = err.max((f.lam1[(r, j)] - e1).abs()).max((f.lam2[(r, j)] - e2).abs());
                }
            }
            assert!(err < 1e-6, "{conv:?}: {err}");
        }
    }

    #[test]
    fn upwind_converges_to_spectral_result() {
        let s = StringScenario::uniform(128, 50, 0.25, 1.0, 1.0, 1.0);
        let p0: Vec<f64> = sigma_grid(128).iter().map(|x| (2.0 * x).cos()).collect();
        let exact = lambda_advect(&s, &p0).unwrap();
        let up = lambda_advect_with(&s, &p0, opts(AdvectionConvention::Derived, Integrator::Upwind)).unwrap();
        let err = (&exact.lam1 - &up.lam1).amax();
        assert!(err < 0.1, "{err}");
    }

    #[test]
    fn coarse_rk4_reports_step_suggestion() {
        let s = StringScenario::uniform(64, 10, 1.0, 1.0, 1.0, 1.0);
        let err = lambda_advect_with(&s, &[1.0; 64], opts(AdvectionConvention::Derived, Integrator::Rk4)).unwrap_err();
        match err {
            QapError::StepSize { suggested_steps, .. } => {
                let ok = StringScenario::uniform(64, suggested_steps, 1.0, 1.0, 1.0, 1.0);
                assert!(lambda_advect_with(&ok, &[1.0; 64], opts(AdvectionConvention::Derived, Integrator::Rk4)).is_ok());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn phase_shift_rejects_nonuniform_lapse() {
        let mut s = StringScenario::uniform(8, 10, 1.0, 1.0, 1.0, 1.0);
        s.n1[3] = 2.0;
        let r = lambda_advect_with(&s, &[1.0; 8], opts(AdvectionConvention::Derived, Integrator::PhaseShift));
        assert!(matches!(r, Err(QapError::Domain(_))));
    }
}
