//! The `x⁰` sector of the closed string on a periodic `σ` grid.
//!
//! Conventions used throughout:
//!
//! * `σ_j = jπ/M`, `j = 0..M`, with Riemann weight `π/M`;
//! * `τ_k = k/K`, `k = 0..=K`, with trapezoid weights;
//! * `σ` derivatives are spectral (see [`crate::spectral`]);
//! * field arrays are `(K+1) × M` matrices, row `k` holding `τ_k`.

mod advect;
mod kkt;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QapError, Result};
use crate::quadrature::{cumulative_trapezoid, partial_trapezoid, trapezoid_weights, unit_grid};
use crate::spectral::PeriodicFft;

pub use advect::{lambda_advect, lambda_advect_with, AdvectOptions, AdvectionConvention, Integrator};
pub use kkt::{
    adjudicate_printed_relations, advection_residual, projected_gradient, stationary_x0_solve,
    stationary_x0_solve_with, KktRoute, PrintedRelationReport, StationaryX0, DENSE_LIMIT,
};

/// Closed-string set-up: grids, tension, lapse fields and the final `x⁰` distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringScenario {
    /// Number of periodic `σ` nodes `M` (1 or even).
    pub sigma_points: usize,
    /// Number of `τ` steps `K` on `[0, 1]`.
    pub tau_steps: usize,
    /// String tension `γ`.
    pub gamma: f64,
    pub n1: Vec<f64>,
    pub n2: Vec<f64>,
    /// `x̃⁰(σ_j)`.
    pub x0_final: Vec<f64>,
    #[serde(default = "one")]
    pub hbar: f64,
    /// Number of transverse directions `x^i`.
    #[serde(default = "one_usize")]
    pub dim_transverse: usize,
    /// Total transverse momentum of the centre of mass; empty means zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub com_momentum: Vec<f64>,
    /// Include `ω/2` per oscillator in the energy.
    #[serde(default)]
    pub zero_point: bool,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl StringScenario {
    /// σ-independent lapses and boundary value.
    pub fn uniform(sigma_points: usize, tau_steps: usize, gamma: f64, n1: f64, n2: f64, x0: f64) -> Self {
        StringScenario {
            sigma_points,
            tau_steps,
            gamma,
            n1: vec![n1; sigma_points],
            n2: vec![n2; sigma_points],
            x0_final: vec![x0; sigma_points],
            hbar: 1.0,
            dim_transverse: 1,
            com_momentum: Vec::new(),
            zero_point: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.sigma_points;
        if m == 0 || (m > 1 && m % 2 != 0) {
            return Err(QapError::validation("sigma_points", "must be 1 or a positive even number"));
        }
        if self.tau_steps == 0 {
            return Err(QapError::validation("tau_steps", "must be positive"));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(QapError::validation("gamma", "must be finite and nonnegative"));
        }
        for (name, field) in [("n1", &self.n1), ("n2", &self.n2), ("x0_final", &self.x0_final)] {
            if field.len() != m {
                return Err(QapError::validation(
                    name,
                    format!("has {} entries, expected sigma_points = {m}", field.len()),
                ));
            }
            if field.iter().any(|v| !v.is_finite()) {
                return Err(QapError::validation(name, "must be finite"));
            }
        }
        if self.n1.iter().chain(&self.n2).any(|&n| !(n > 0.0)) {
            let field = if self.n1.iter().any(|&n| !(n > 0.0)) { "n1" } else { "n2" };
            return Err(QapError::validation(field, "lapse must be strictly positive"));
        }
        if !(self.hbar > 0.0) {
            return Err(QapError::validation("hbar", "must be positive"));
        }
        if self.dim_transverse == 0 {
            return Err(QapError::validation("dim_transverse", "must be at least 1"));
        }
        if self.com_momentum.iter().any(|p| !p.is_finite()) {
            return Err(QapError::validation("com_momentum", "must be finite"));
        }
        Ok(())
    }

    /// Riemann weight `π/M`.
    pub fn sigma_weight(&self) -> f64 {
        PI / self.sigma_points as f64
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        unit_grid(self.tau_steps)
    }

    pub fn tau_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.tau_steps)
    }

    /// True when both lapses are σ-independent.
    pub fn lapse_is_uniform(&self) -> bool {
        let flat = |v: &[f64]| v.iter().all(|&x| x == v[0]);
        flat(&self.n1) && flat(&self.n2)
    }

    /// True when `x̃⁰(σ)` is constant.
    pub fn boundary_is_constant(&self) -> bool {
        self.x0_final.iter().all(|&x| x == self.x0_final[0])
    }

    /// Same scenario with both lapses multiplied by `s`.
    pub fn scale_lapse(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.n1.iter_mut().chain(out.n2.iter_mut()).for_each(|n| *n *= s);
        out
    }

    /// Same scenario with `x̃⁰` multiplied by `s`.
    pub fn scale_boundary(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.x0_final.iter_mut().for_each(|x| *x *= s);
        out
    }
}

/// Multiplier fields of the `x⁰` sector on the `τ × σ` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaField {
    pub lam1: DMatrix<f64>,
    pub lam2: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    /// `p₀(σ_j)`.
    pub p0: Vec<f64>,
}

impl LambdaField {
    pub fn zeros(scenario: &StringScenario) -> Self {
        let (r, c) = (scenario.tau_steps + 1, scenario.sigma_points);
        LambdaField {
            lam1: DMatrix::zeros(r, c),
            lam2: DMatrix::zeros(r, c),
            d1: DMatrix::zeros(r, c),
            d2: DMatrix::zeros(r, c),
            p0: vec![0.0; c],
        }
    }

    /// All fields constant in `τ` and `σ`.
    pub fn constant(scenario: &StringScenario, d1: f64, d2: f64, lam1: f64, lam2: f64, p0: f64) -> Self {
        let (r, c) = (scenario.tau_steps + 1, scenario.sigma_points);
        LambdaField {
            lam1: DMatrix::from_element(r, c, lam1),
            lam2: DMatrix::from_element(r, c, lam2),
            d1: DMatrix::from_element(r, c, d1),
            d2: DMatrix::from_element(r, c, d2),
            p0: vec![p0; c],
        }
    }

    pub fn check_shape(&self, scenario: &StringScenario) -> Result<()> {
        let want = (scenario.tau_steps + 1, scenario.sigma_points);
        for (name, f) in [("lam1", &self.lam1), ("lam2", &self.lam2), ("d1", &self.d1), ("d2", &self.d2)] {
            if f.shape() != want {
                return Err(QapError::shape(format!(
                    "{name} is {:?}, expected {:?}",
                    f.shape(),
                    want
                )));
            }
        }
        if self.p0.len() != scenario.sigma_points {
            return Err(QapError::shape("p0 length differs from sigma_points"));
        }
        Ok(())
    }

    /// Flattened `(d1, d2, lam1, lam2, p0)` in row-major `(τ, σ)` order.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for f in [&self.d1, &self.d2, &self.lam1, &self.lam2] {
            for r in 0..f.nrows() {
                v.extend(f.row(r).iter());
            }
        }
        v.extend(&self.p0);
        v
    }

    /// Inverse of [`LambdaField::to_vector`].
    pub fn from_vector(scenario: &StringScenario, v: &[f64]) -> Result<Self> {
        let (r, c) = (scenario.tau_steps + 1, scenario.sigma_points);
        if v.len() != 4 * r * c + c {
            return Err(QapError::shape("flattened field has the wrong length"));
        }
        let block = |b: usize| DMatrix::from_row_slice(r, c, &v[b * r * c..(b + 1) * r * c]);
        Ok(LambdaField {
            d1: block(0),
            d2: block(1),
            lam1: block(2),
            lam2: block(3),
            p0: v[4 * r * c..].to_vec(),
        })
    }
}

/// Row-wise spectral `σ` derivative.
pub(crate) fn sigma_derivative(fft: &PeriodicFft, field: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(field.nrows(), field.ncols());
    for r in 0..field.nrows() {
        let row: Vec<f64> = field.row(r).iter().copied().collect();
        let d = fft.derivative(&row);
        for (c, v) in d.into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    out
}

/// Discretized `Λ_{x⁰}`:
///
/// ```text
/// − ∫∫ (N₁d₁² + N₂d₂² + λ₁d₁ + λ₂d₂) + ∫∫ (λ₁+λ₂) p₀ + ∫ p₀ x̃⁰
/// − γ ∫dσ ∫dτ (λ₁+λ₂)(τ) ∫₀^τ (λ₁′−λ₂′) − γ ∫∫ (λ₁′−λ₂′) x̃⁰
/// ```
pub fn action_x0(scenario: &StringScenario, field: &LambdaField) -> Result<f64> {
    field.check_shape(scenario)?;
    if scenario.n1.len() != scenario.sigma_points
        || scenario.n2.len() != scenario.sigma_points
        || scenario.x0_final.len() != scenario.sigma_points
    {
        return Err(QapError::shape("scenario fields do not match sigma_points"));
    }
    let fft = PeriodicFft::new(scenario.sigma_points);
    Ok(action_x0_unchecked(scenario, field, &fft))
}

pub(crate) fn action_x0_unchecked(scenario: &StringScenario, field: &LambdaField, fft: &PeriodicFft) -> f64 {
    let m = scenario.sigma_points;
    let h = scenario.sigma_weight();
    let w = scenario.tau_weights();
    let grid = scenario.tau_grid();
    let x0 = &scenario.x0_final;
    let gamma = scenario.gamma;

    let sum = &field.lam1 + &field.lam2;
    let ddiff = sigma_derivative(fft, &(&field.lam1 - &field.lam2));

    let mut local = 0.0;
    let mut transport = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let mut row = 0.0;
        let mut row_x = 0.0;
        for j in 0..m {
            let (d1, d2, l1, l2) = (field.d1[(k, j)], field.d2[(k, j)], field.lam1[(k, j)], field.lam2[(k, j)]);
            row += -(scenario.n1[j] * d1 * d1 + scenario.n2[j] * d2 * d2 + l1 * d1 + l2 * d2)
                + sum[(k, j)] * field.p0[j];
            row_x += ddiff[(k, j)] * x0[j];
        }
        local += wk * h * row;
        transport += wk * h * row_x;
    }
    let boundary: f64 = h * field.p0.iter().zip(x0).map(|(p, x)| p * x).sum::<f64>();

    let mut nested = 0.0;
    for j in 0..m {
        let col: Vec<f64> = (0..=scenario.tau_steps).map(|k| ddiff[(k, j)]).collect();
        let running = cumulative_trapezoid(&grid, &col);
        nested += h * w.iter().enumerate().map(|(k, wk)| wk * sum[(k, j)] * running[k]).sum::<f64>();
    }
    local + boundary - gamma * nested - gamma * transport
}

/// Coefficients of the quadratic functional phase of the `x⁰` wave packet.
#[derive(Debug, Clone, PartialEq)]
pub struct StringPhase {
    pub chi0: Complex64,
    /// `χ₁(τ, σ_j)`.
    pub chi1: Vec<Complex64>,
    /// `χ₂(σ_j, σ_l)`, the discrete `(iħ/2ε²) δ(σ − σ̃)`.
    pub chi2: DMatrix<Complex64>,
    pub epsilon: f64,
    sigma_weight: f64,
}

impl StringPhase {
    /// `χ[x⁰] = χ₀ + ∫χ₁x⁰ + ½∫∫χ₂x⁰x⁰` with Riemann sums in `σ`.
    pub fn phase(&self, x0: &[f64]) -> Complex64 {
        let h = self.sigma_weight;
        let lin: Complex64 = self.chi1.iter().zip(x0).map(|(c, x)| c * x).sum();
        let mut quad = Complex64::new(0.0, 0.0);
        for (j, xj) in x0.iter().enumerate() {
            for (l, xl) in x0.iter().enumerate() {
                quad += self.chi2[(j, l)] * xj * xl;
            }
        }
        self.chi0 + h * lin + 0.5 * h * h * quad
    }
}

/// Phase coefficients at time `tau` for the given multiplier fields.
///
/// `χ₁ = p₀ − γ∫₀^τ(λ₁′−λ₂′) + (iħ/2ε²)∫₀^τ(λ₁+λ₂)`; `χ₀` accumulates
/// `−∫[N₁d₁² + N₂d₂² + λ₁d₁ + λ₂d₂] + ∫(λ₁+λ₂)χ₁`.
pub fn string_phase_evolution(
    scenario: &StringScenario,
    field: &LambdaField,
    epsilon: f64,
    tau: f64,
) -> Result<StringPhase> {
    field.check_shape(scenario)?;
    if !(epsilon > 0.0) {
        return Err(QapError::domain("wave-packet width epsilon must be positive"));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(QapError::domain(format!("tau = {tau} outside [0, 1]")));
    }
    let m = scenario.sigma_points;
    let h = scenario.sigma_weight();
    let grid = scenario.tau_grid();
    let kappa = scenario.hbar / (2.0 * epsilon * epsilon);
    let fft = PeriodicFft::new(m);
    let sum = &field.lam1 + &field.lam2;
    let ddiff = sigma_derivative(&fft, &(&field.lam1 - &field.lam2));

    let mut chi1 = Vec::with_capacity(m);
    let mut chi0 = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let col = |f: &DMatrix<f64>| -> Vec<f64> { (0..grid.len()).map(|k| f[(k, j)]).collect() };
        let s = col(&sum);
        let dd = col(&ddiff);
        let transported = cumulative_trapezoid(&grid, &dd);
        let accumulated = cumulative_trapezoid(&grid, &s);
        chi1.push(Complex64::new(
            field.p0[j] - scenario.gamma * partial_trapezoid(&grid, &dd, tau),
            kappa * partial_trapezoid(&grid, &s, tau),
        ));

        let local: Vec<f64> = (0..grid.len())
            .map(|k| {
                -(scenario.n1[j] * field.d1[(k, j)].powi(2)
                    + scenario.n2[j] * field.d2[(k, j)].powi(2)
                    + field.lam1[(k, j)] * field.d1[(k, j)]
                    + field.lam2[(k, j)] * field.d2[(k, j)])
                    + s[k] * field.p0[j]
                    - scenario.gamma * s[k] * transported[k]
            })
            .collect();
        let damping: Vec<f64> = s.iter().zip(&accumulated).map(|(a, b)| a * b).collect();
        chi0 += h * Complex64::new(
            partial_trapezoid(&grid, &local, tau),
            kappa * partial_trapezoid(&grid, &damping, tau),
        );
    }
    let chi2 = DMatrix::from_fn(m, m, |j, l| {
        if j == l {
            Complex64::new(0.0, kappa / h)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(StringPhase { chi0, chi1, chi2, epsilon, sigma_weight: h })
}

/// `R_{x⁰}` bracket `x̃⁰(σ) + ∫₀¹(λ₁+λ₂)dτ` per node; zero on the constraint surface.
pub fn boundary_residual(scenario: &StringScenario, field: &LambdaField) -> Vec<f64> {
    let w = scenario.tau_weights();
    (0..scenario.sigma_points)
        .map(|j| {
            scenario.x0_final[j]
                + w.iter()
                    .enumerate()
                    .map(|(k, wk)| wk * (field.lam1[(k, j)] + field.lam2[(k, j)]))
                    .sum::<f64>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::sigma_grid;

    #[test]
    fn zero_fields_have_zero_action() {
        let s = StringScenario::uniform(8, 10, 1.0, 1.0, 2.0, 3.0);
        assert_eq!(action_x0(&s, &LambdaField::zeros(&s)).unwrap(), 0.0);
    }

    #[test]
    fn constant_fields_match_hand_quadrature() {
        let (n1, n2, x0) = (0.7, 1.3, 2.5);
        let s = StringScenario::uniform(8, 12, 0.9, n1, n2, x0);
        let (d1, d2, l1, l2, p0) = (0.4, -0.3, 1.1, -0.6, 0.8);
        let f = LambdaField::constant(&s, d1, d2, l1, l2, p0);
        let expected = PI * (-(n1 * d1 * d1 + n2 * d2 * d2 + l1 * d1 + l2 * d2) + (l1 + l2) * p0 + p0 * x0);
        let got = action_x0(&s, &f).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn doubling_boundary_changes_only_linear_terms() {
        let s = StringScenario::uniform(8, 16, 0.5, 1.0, 1.0, 1.0);
        let mut s2 = s.clone();
        let sig = sigma_grid(8);
        for (j, x) in s2.x0_final.iter_mut().enumerate() {
            *x = 1.0 + 0.3 * (2.0 * sig[j]).cos();
        }
        let tau = s.tau_grid();
        let mut f = LambdaField::zeros(&s);
        for k in 0..tau.len() {
            for j in 0..8 {
                f.lam1[(k, j)] = (2.0 * sig[j] + tau[k]).sin();
                f.lam2[(k, j)] = 0.5 * (4.0 * sig[j]).cos() * tau[k];
                f.d1[(k, j)] = 0.2;
                f.d2[(k, j)] = -0.1 * tau[k];
            }
            f.p0 = sig.iter().map(|x| 0.3 + x.sin()).collect();
        }
        let a1 = action_x0(&s2, &f).unwrap();
        let a2 = action_x0(&s2.scale_boundary(2.0), &f).unwrap();
        let a0 = action_x0(&s2.scale_boundary(0.0), &f).unwrap();
        // Affine in x̃⁰: A(2x) − A(x) = A(x) − A(0).
        assert!(((a2 - a1) - (a1 - a0)).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let s = StringScenario::uniform(8, 10, 1.0, 1.0, 1.0, 1.0);
        let mut f = LambdaField::zeros(&s);
        f.p0.pop();
        assert!(matches!(action_x0(&s, &f), Err(QapError::Shape(_))));
    }

    #[test]
    fn phase_examples() {
        let s = StringScenario::uniform(16, 20, 0.7, 1.0, 1.0, 1.0);
        let sig = sigma_grid(16);
        let mut f = LambdaField::zeros(&s);
        f.p0 = sig.iter().map(|x| 1.0 + x.cos().powi(2)).collect();
        let ph = string_phase_evolution(&s, &f, 0.3, 0.6).unwrap();
        for j in 0..16 {
            assert!((ph.chi1[j] - Complex64::new(f.p0[j], 0.0)).norm() < 1e-15);
        }
        // σ-constant multipliers: no γ contribution.
        let fc = LambdaField::constant(&s, 0.1, 0.2, 0.3, 0.4, 0.5);
        let ph = string_phase_evolution(&s, &fc, 0.3, 0.6).unwrap();
        for j in 0..16 {
            assert!((ph.chi1[j].re - 0.5).abs() < 1e-14);
        }
        // λ₁ = cos 2σ, λ₂ = 0: Re χ₁ = p₀ + 2γτ sin 2σ.
        let mut fw = LambdaField::zeros(&s);
        for k in 0..=20 {
            for j in 0..16 {
                fw.lam1[(k, j)] = (2.0 * sig[j]).cos();
            }
        }
        for tau in [0.0, 0.35, 1.0] {
            let ph = string_phase_evolution(&s, &fw, 0.3, tau).unwrap();
            for j in 0..16 {
                let expected = 2.0 * 0.7 * tau * (2.0 * sig[j]).sin();
                assert!((ph.chi1[j].re - expected).abs() < 1e-12);
            }
            assert!((&ph.chi2 - ph.chi2.transpose()).iter().all(|c| c.norm() == 0.0));
        }
        assert!(string_phase_evolution(&s, &fw, -1.0, 0.5).is_err());
    }

    #[test]
    fn final_phase_reproduces_action_and_damping() {
        let mut s = StringScenario::uniform(8, 24, 0.6, 1.0, 1.5, 0.0);
        s.hbar = 1.3;
        let sig = sigma_grid(8);
        s.x0_final = sig.iter().map(|x| 1.0 + 0.2 * (2.0 * x).sin()).collect();
        let mut f = LambdaField::zeros(&s);
        for k in 0..=24 {
            for j in 0..8 {
                f.lam1[(k, j)] = -0.4 + 0.1 * (2.0 * sig[j]).cos();
                f.lam2[(k, j)] = -0.3 + 0.05 * (4.0 * sig[j]).sin();
                f.d1[(k, j)] = 0.2 * sig[j].cos();
                f.d2[(k, j)] = 0.1;
            }
        }
        f.p0 = sig.iter().map(|x| 0.5 + 0.1 * (2.0 * x).cos()).collect();
        let eps = 0.4;
        let ph = string_phase_evolution(&s, &f, eps, 1.0).unwrap();
        let chi = ph.phase(&s.x0_final);
        let act = action_x0(&s, &f).unwrap();
        assert!((chi.re - act).abs() < 1e-12, "{} vs {}", chi.re, act);
        // λ constant in τ: the nested trapezoid is exact.
        let r: f64 = -boundary_residual(&s, &f).iter().map(|b| b * b).sum::<f64>() * s.sigma_weight()
            / (4.0 * eps * eps);
        assert!((-chi.im / s.hbar - r).abs() < 1e-12);
    }
}
