//! Relativistic particle: classical checks, phase-coefficient evolution, the quantum
//! action and its delayed stationarity in the lapse.
//!
//! Signature is `(+,−,−,−)`: `(Δx)² = (Δx⁰)² − Σ(Δxⁱ)²`. All `τ` integrals are trapezoid
//! sums on the path's grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QapError, Result};
use crate::optimize::{minimize_positive, ScalarMin};
use crate::quadrature::{
    cumulative_trapezoid, gradient, partial_trapezoid, trapezoid, unit_grid,
};

/// Physical set-up of a single particle transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleScenario {
    pub dim_space: usize,
    pub mass: f64,
    pub p_spatial: Vec<f64>,
    /// Final time coordinate `x̃⁰`.
    pub x0_final: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub c: f64,
    /// Final spatial position; only enters the constant plane-wave phase `−p·x`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x_spatial_final: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl ParticleScenario {
    /// Three spatial dimensions, `ħ = c = 1`.
    pub fn new(mass: f64, p_spatial: Vec<f64>, x0_final: f64) -> Self {
        ParticleScenario {
            dim_space: p_spatial.len(),
            mass,
            p_spatial,
            x0_final,
            hbar: 1.0,
            c: 1.0,
            x_spatial_final: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim_space < 1 {
            return Err(QapError::validation("dim_space", "must be at least 1"));
        }
        if self.p_spatial.len() != self.dim_space {
            return Err(QapError::validation(
                "p_spatial",
                format!("length {} does not match dim_space {}", self.p_spatial.len(), self.dim_space),
            ));
        }
        if !self.x_spatial_final.is_empty() && self.x_spatial_final.len() != self.dim_space {
            return Err(QapError::validation("x_spatial_final", "length must match dim_space"));
        }
        if !(self.mass >= 0.0) || !self.mass.is_finite() {
            return Err(QapError::validation("mass", "must be finite and nonnegative"));
        }
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return Err(QapError::validation("hbar", "must be finite and positive"));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(QapError::validation("c", "must be finite and positive"));
        }
        if !self.x0_final.is_finite() || self.p_spatial.iter().any(|p| !p.is_finite()) {
            return Err(QapError::validation("x0_final", "must be finite"));
        }
        Ok(())
    }

    /// `p_i² + m²c²`.
    pub fn dispersion(&self) -> f64 {
        let p2: f64 = self.p_spatial.iter().map(|p| p * p).sum();
        p2 + (self.mass * self.c).powi(2)
    }

    /// The `−p_i x^i` phase of the spatial plane wave.
    pub fn plane_wave_phase(&self) -> f64 {
        -self
            .p_spatial
            .iter()
            .zip(&self.x_spatial_final)
            .map(|(p, x)| p * x)
            .sum::<f64>()
    }
}

/// Minkowski square of a displacement `(Δx⁰, Δx¹, ...)`.
pub fn minkowski_square(dx: &[f64]) -> f64 {
    match dx.split_first() {
        Some((t, space)) => t * t - space.iter().map(|x| x * x).sum::<f64>(),
        None => 0.0,
    }
}

/// Lagrangian-form classical action `∫ (ẋ²/4N + m²c²N) dτ`.
///
/// `path[k]` is the event `x^μ(τ_k)`; velocities use second-order finite differences.
pub fn classical_action_lagrangian(
    tau: &[f64],
    path: &[Vec<f64>],
    lapse: &[f64],
    scenario: &ParticleScenario,
) -> Result<f64> {
    if path.len() != tau.len() || lapse.len() != tau.len() {
        return Err(QapError::shape(format!(
            "tau has {} nodes, path {}, lapse {}",
            tau.len(),
            path.len(),
            lapse.len()
        )));
    }
    if tau.len() < 2 {
        return Err(QapError::shape("need at least two tau nodes"));
    }
    let dim = scenario.dim_space + 1;
    if path.iter().any(|x| x.len() != dim) {
        return Err(QapError::shape(format!("events must have {dim} components")));
    }
    if lapse.iter().any(|&n| !(n > 0.0)) {
        return Err(QapError::domain("lapse N must be positive everywhere"));
    }
    let velocities: Vec<Vec<f64>> = (0..dim)
        .map(|mu| {
            let comp: Vec<f64> = path.iter().map(|x| x[mu]).collect();
            gradient(tau, &comp)
        })
        .collect();
    let mc2 = (scenario.mass * scenario.c).powi(2);
    let integrand: Vec<f64> = (0..tau.len())
        .map(|k| {
            let v: Vec<f64> = velocities.iter().map(|comp| comp[k]).collect();
            minkowski_square(&v) / (4.0 * lapse[k]) + mc2 * lapse[k]
        })
        .collect();
    Ok(trapezoid(tau, &integrand))
}

/// Straight worldline from `start` to `end` sampled on `steps + 1` nodes.
pub fn straight_worldline(start: &[f64], end: &[f64], steps: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let tau = unit_grid(steps);
    let path = tau
        .iter()
        .map(|t| start.iter().zip(end).map(|(a, b)| a + t * (b - a)).collect())
        .collect();
    (tau, path)
}

/// Stationary reparameterization-invariant integral `T = √((Δx)²) / 2mc`.
pub fn stationary_proper_time(x_start: &[f64], x_end: &[f64], scenario: &ParticleScenario) -> Result<f64> {
    if x_start.len() != x_end.len() {
        return Err(QapError::shape("endpoint dimensions differ"));
    }
    if !(scenario.mass > 0.0) {
        return Err(QapError::domain("proper time is singular for m = 0"));
    }
    let dx: Vec<f64> = x_end.iter().zip(x_start).map(|(b, a)| b - a).collect();
    let s2 = minkowski_square(&dx);
    if s2 < 0.0 {
        return Err(QapError::domain(format!("spacelike separation, (Δx)² = {s2}")));
    }
    Ok(s2.sqrt() / (2.0 * scenario.mass * scenario.c))
}

/// Minimizes the classical action of the straight worldline over a constant lapse.
pub fn minimize_constant_lapse(
    x_start: &[f64],
    x_end: &[f64],
    scenario: &ParticleScenario,
    steps: usize,
) -> Result<ScalarMin> {
    let (tau, path) = straight_worldline(x_start, x_end, steps);
    let eval = |n: f64| {
        let lapse = vec![n; tau.len()];
        classical_action_lagrangian(&tau, &path, &lapse, scenario).unwrap_or(f64::INFINITY)
    };
    // Probe once so shape errors surface instead of becoming +inf.
    classical_action_lagrangian(&tau, &path, &vec![1.0; tau.len()], scenario)?;
    minimize_positive(eval, 1.0).ok_or_else(|| QapError::domain("action unbounded over constant lapse"))
}

/// Multiplier profiles `N(τ), λ(τ), d(τ)` and the initial momentum `p₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierPath {
    pub tau_grid: Vec<f64>,
    pub lapse: Vec<f64>,
    pub lam: Vec<f64>,
    pub d: Vec<f64>,
    pub p0: f64,
}

impl MultiplierPath {
    /// Uniform grid with `steps` cells and the given profiles evaluated at the nodes.
    pub fn from_fns(
        steps: usize,
        lapse: impl Fn(f64) -> f64,
        lam: impl Fn(f64) -> f64,
        d: impl Fn(f64) -> f64,
        p0: f64,
    ) -> Self {
        let tau_grid = unit_grid(steps);
        MultiplierPath {
            lapse: tau_grid.iter().map(|&t| lapse(t)).collect(),
            lam: tau_grid.iter().map(|&t| lam(t)).collect(),
            d: tau_grid.iter().map(|&t| d(t)).collect(),
            tau_grid,
            p0,
        }
    }

    pub fn check_shape(&self) -> Result<()> {
        let n = self.tau_grid.len();
        if n < 2 || self.lapse.len() != n || self.lam.len() != n || self.d.len() != n {
            return Err(QapError::shape("multiplier arrays must share the tau grid (>= 2 nodes)"));
        }
        if self.tau_grid[0] != 0.0 || self.tau_grid[n - 1] != 1.0 {
            return Err(QapError::shape("tau grid must span [0, 1]"));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.lapse) || !finite(&self.lam) || !finite(&self.d) || !self.p0.is_finite() {
            return Err(QapError::domain("multiplier path contains non-finite values"));
        }
        Ok(())
    }

    /// `T = ∫₀¹ N dτ`.
    pub fn proper_time(&self) -> f64 {
        trapezoid(&self.tau_grid, &self.lapse)
    }

    /// `∫₀¹ λ dτ`.
    pub fn lam_integral(&self) -> f64 {
        trapezoid(&self.tau_grid, &self.lam)
    }
}

/// Coefficients of the quadratic phase `χ = χ₀ + χ₁x⁰ + ½χ₂(x⁰)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCoefficients {
    pub chi0: Complex64,
    pub chi1: Complex64,
    pub chi2: Complex64,
    pub epsilon: f64,
}

impl PhaseCoefficients {
    /// `χ(τ, x⁰)`.
    pub fn phase(&self, x0: f64) -> Complex64 {
        self.chi0 + self.chi1 * x0 + 0.5 * self.chi2 * x0 * x0
    }
}

/// Phase coefficients of the `x⁰` wave packet at time `tau`.
///
/// Starting from a packet of width `ε` at the origin with momentum `p₀`, the curvature
/// `χ₂ = iħ/2ε²` is frozen, `χ₁` drifts by `χ₂∫λ` and `χ₀` collects
/// `−∫[Nd² + λ(d − p₀)] + χ₂∫λ(τ')Λ(τ')dτ'` with `Λ(τ') = ∫₀^τ' λ`.
pub fn phase_evolution(
    path: &MultiplierPath,
    scenario: &ParticleScenario,
    epsilon: f64,
    tau: f64,
) -> Result<PhaseCoefficients> {
    path.check_shape()?;
    if !(epsilon > 0.0) {
        return Err(QapError::domain("wave-packet width epsilon must be positive"));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(QapError::domain(format!("tau = {tau} outside [0, 1]")));
    }
    let grid = &path.tau_grid;
    let chi2 = Complex64::new(0.0, scenario.hbar / (2.0 * epsilon * epsilon));
    let lam_running = cumulative_trapezoid(grid, &path.lam);
    let drift = partial_trapezoid(grid, &path.lam, tau);
    let chi1 = path.p0 + chi2 * drift;

    let real_density: Vec<f64> = (0..grid.len())
        .map(|k| path.lapse[k] * path.d[k].powi(2) + path.lam[k] * (path.d[k] - path.p0))
        .collect();
    let nested: Vec<f64> = path.lam.iter().zip(&lam_running).map(|(l, a)| l * a).collect();
    let chi0 = -partial_trapezoid(grid, &real_density, tau) + chi2 * partial_trapezoid(grid, &nested, tau);

    Ok(PhaseCoefficients { chi0, chi1, chi2, epsilon })
}

/// Real functionals of the transition amplitude `exp(iΛ/ħ + R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParticleAction {
    /// `Λ` without the constant plane-wave phase.
    pub lambda: f64,
    /// The `−p_i x^i` phase, independent of the multipliers.
    pub plane_wave_phase: f64,
    /// `x̃⁰ + ∫λ dτ`; the `ε → 0` limit forces it to zero.
    pub constraint_residual: f64,
    /// `−1/4ε²`.
    pub r_coefficient: f64,
}

impl ParticleAction {
    pub fn r(&self) -> f64 {
        self.r_coefficient * self.constraint_residual.powi(2)
    }
}

/// `Λ = −∫[Nd² + λ(d − p₀)] + p₀x̃⁰ + ∫N(p_i² + m²c²)` and the `R` bracket.
pub fn quantum_action_particle(
    path: &MultiplierPath,
    scenario: &ParticleScenario,
    epsilon: f64,
) -> Result<ParticleAction> {
    path.check_shape()?;
    if !(epsilon > 0.0) {
        return Err(QapError::domain("wave-packet width epsilon must be positive"));
    }
    Ok(ParticleAction {
        lambda: discrete_quantum_action(path, scenario),
        plane_wave_phase: scenario.plane_wave_phase(),
        constraint_residual: scenario.x0_final + path.lam_integral(),
        r_coefficient: -1.0 / (4.0 * epsilon * epsilon),
    })
}

/// The discretized `Λ` as a plain function of the path (no shape checks).
pub fn discrete_quantum_action(path: &MultiplierPath, scenario: &ParticleScenario) -> f64 {
    let density: Vec<f64> = (0..path.tau_grid.len())
        .map(|k| path.lapse[k] * path.d[k].powi(2) + path.lam[k] * (path.d[k] - path.p0))
        .collect();
    -trapezoid(&path.tau_grid, &density)
        + path.p0 * scenario.x0_final
        + path.proper_time() * scenario.dispersion()
}

/// Reduced action `(x̃⁰)²/4T + T(p_i² + m²c²)` after eliminating `d`, `λ` and `p₀`.
pub fn reduced_action(x0_final: f64, proper_time: f64, dispersion: f64) -> f64 {
    x0_final * x0_final / (4.0 * proper_time) + proper_time * dispersion
}

/// Stationary point of the particle's quantum action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryParticle {
    /// `None` when no interior stationary `T` exists (`p = 0`, `m = 0`).
    pub t_star: Option<f64>,
    pub p0_star: f64,
    /// Numerically minimized reduced action.
    pub lambda_star: f64,
    /// `x̃⁰ √(p_i² + m²c²)`.
    pub lambda_closed_form: f64,
    pub degenerate_dispersion: bool,
    pub evaluations: usize,
}

/// Solves `d = p₀`, `2Nd + λ = 0`, `x̃⁰ = 2Tp₀`, then minimizes the reduced action over `T > 0`.
pub fn stationary_particle(scenario: &ParticleScenario) -> Result<StationaryParticle> {
    scenario.validate()?;
    let x0 = scenario.x0_final;
    if x0 < 0.0 {
        return Err(QapError::domain("past-directed boundary x0_final < 0 is not supported"));
    }
    let b = scenario.dispersion();
    let closed = x0 * b.sqrt();
    if b == 0.0 {
        return Ok(StationaryParticle {
            t_star: None,
            p0_star: 0.0,
            lambda_star: 0.0,
            lambda_closed_form: 0.0,
            degenerate_dispersion: true,
            evaluations: 0,
        });
    }
    if x0 == 0.0 {
        // Infimum at T → 0; p₀ = x̃⁰/2T tends to √b.
        return Ok(StationaryParticle {
            t_star: Some(0.0),
            p0_star: b.sqrt(),
            lambda_star: 0.0,
            lambda_closed_form: 0.0,
            degenerate_dispersion: false,
            evaluations: 0,
        });
    }
    let found = minimize_positive(|t| reduced_action(x0, t, b), 1.0)
        .ok_or_else(|| QapError::NoStationaryPoint { iterations: 0, gradient_norm: f64::NAN, trace: vec![] })?;
    // Newton polish on dΛ/d(ln T) = T b − x²/4T.
    let mut t = found.argmin;
    for _ in 0..4 {
        let g = t * b - x0 * x0 / (4.0 * t);
        let h = t * b + x0 * x0 / (4.0 * t);
        t *= (-g / h).exp();
    }
    Ok(StationaryParticle {
        t_star: Some(t),
        p0_star: x0 / (2.0 * t),
        lambda_star: reduced_action(x0, t, b).min(found.value),
        lambda_closed_form: closed,
        degenerate_dispersion: false,
        evaluations: found.evaluations + 4,
    })
}

/// The stationary multiplier path: constant `N = T`, `d = p₀`, `λ = −2Nd`.
pub fn stationary_path(scenario: &ParticleScenario, proper_time: f64, steps: usize) -> MultiplierPath {
    let p0 = scenario.x0_final / (2.0 * proper_time);
    MultiplierPath::from_fns(steps, |_| proper_time, |_| -2.0 * proper_time * p0, |_| p0, p0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scen(mass: f64, p: [f64; 3], x0: f64) -> ParticleScenario {
        ParticleScenario::new(mass, p.to_vec(), x0)
    }

    #[test]
    fn straight_worldline_action() {
        let s = scen(1.0, [0.0; 3], 2.0);
        let (tau, path) = straight_worldline(&[0.0; 4], &[2.0, 0.0, 0.0, 0.0], 50);
        let lapse = vec![1.0; tau.len()];
        let a = classical_action_lagrangian(&tau, &path, &lapse, &s).unwrap();
        assert!((a - 2.0).abs() < 1e-13);
    }

    #[test]
    fn massless_constant_path_has_zero_action() {
        let s = scen(0.0, [0.0; 3], 2.0);
        let (tau, path) = straight_worldline(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0], 10);
        for n in [0.1, 1.0, 7.0] {
            let a = classical_action_lagrangian(&tau, &path, &vec![n; tau.len()], &s).unwrap();
            assert_eq!(a, 0.0);
        }
    }

    #[test]
    fn lagrangian_errors() {
        let s = scen(1.0, [0.0; 3], 2.0);
        let (tau, path) = straight_worldline(&[0.0; 4], &[2.0, 0.0, 0.0, 0.0], 4);
        let bad = vec![1.0, 1.0, 0.0, 1.0, 1.0];
        assert!(matches!(
            classical_action_lagrangian(&tau, &path, &bad, &s),
            Err(QapError::Domain(_))
        ));
        assert!(matches!(
            classical_action_lagrangian(&tau, &path, &[1.0; 3], &s),
            Err(QapError::Shape(_))
        ));
    }

    #[test]
    fn proper_time_examples_and_errors() {
        let s1 = scen(1.0, [0.0; 3], 0.0);
        let t = stationary_proper_time(&[0.0; 4], &[2.0, 0.0, 0.0, 0.0], &s1).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
        assert_eq!(stationary_proper_time(&[1.0; 4], &[1.0; 4], &s1).unwrap(), 0.0);
        let s2 = scen(2.0, [0.0; 3], 0.0);
        let t = stationary_proper_time(&[0.0; 4], &[10.0, 6.0, 0.0, 0.0], &s2).unwrap();
        assert!((t - 2.0).abs() < 1e-15);
        assert!(matches!(
            stationary_proper_time(&[0.0; 4], &[1.0, 2.0, 0.0, 0.0], &s1),
            Err(QapError::Domain(_))
        ));
        let massless = scen(0.0, [0.0; 3], 0.0);
        assert!(stationary_proper_time(&[0.0; 4], &[1.0, 0.0, 0.0, 0.0], &massless).is_err());
    }

    #[test]
    fn constant_lapse_minimum_reproduces_proper_time() {
        let s = scen(1.0, [0.0; 3], 0.0);
        let m = minimize_constant_lapse(&[0.0; 4], &[2.0, 0.0, 0.0, 0.0], &s, 40).unwrap();
        assert!((m.argmin - 1.0).abs() < 1e-7);
        assert!((m.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn phase_evolution_examples() {
        let s = scen(1.0, [0.0; 3], 1.0);
        let zero_lam = MultiplierPath::from_fns(20, |t| 1.0 + t, |_| 0.0, |t| t * t, 0.7);
        for tau in [0.0, 0.33, 1.0] {
            let pc = phase_evolution(&zero_lam, &s, 0.1, tau).unwrap();
            assert_eq!(pc.chi1, Complex64::new(0.7, 0.0));
        }
        let lbar = 0.8;
        let eps = 0.2;
        let constant = MultiplierPath::from_fns(20, |_| 1.0, |_| lbar, |_| 0.3, 0.5);
        for tau in [0.0, 0.25, 0.61, 1.0] {
            let pc = phase_evolution(&constant, &s, eps, tau).unwrap();
            let expected = lbar * tau / (2.0 * eps * eps);
            assert!((pc.chi1.im - expected).abs() < 1e-12);
            assert_eq!(pc.chi2, Complex64::new(0.0, 1.0 / (2.0 * eps * eps)));
        }
        let silent = MultiplierPath::from_fns(20, |_| 0.0, |_| 0.0, |t| 3.0 * t - 1.0, 0.5);
        let pc = phase_evolution(&silent, &s, 0.3, 0.8).unwrap();
        assert_eq!(pc.chi0, Complex64::new(0.0, 0.0));
        assert!(phase_evolution(&silent, &s, 0.0, 0.5).is_err());
    }

    #[test]
    fn final_phase_reproduces_action_and_damping() {
        // Re χ(1, x̃⁰) gives the x⁰ part of Λ and −Im χ(1, x̃⁰)/ħ gives R.
        let mut s = scen(0.0, [0.0; 3], 1.3);
        s.hbar = 0.7;
        let eps = 0.25;
        let path = MultiplierPath::from_fns(64, |t| 1.0 + 0.2 * t, |_| -0.9, |t| 0.5 - t, 0.4);
        let pc = phase_evolution(&path, &s, eps, 1.0).unwrap();
        let chi = pc.phase(s.x0_final);
        let act = quantum_action_particle(&path, &s, eps).unwrap();
        assert!((chi.re - act.lambda).abs() < 1e-12);
        assert!((-chi.im / s.hbar - act.r()).abs() < 1e-10);
    }

    #[test]
    fn action_at_substitution_equals_reduced_form() {
        let s = scen(1.5, [0.3, -0.4, 1.0], 2.2);
        let t = 0.8;
        let path = stationary_path(&s, t, 100);
        let act = quantum_action_particle(&path, &s, 0.1).unwrap();
        let expected = reduced_action(s.x0_final, t, s.dispersion());
        assert!((act.lambda - expected).abs() < 1e-12 * expected);
        assert!(act.constraint_residual.abs() < 1e-12);
    }

    #[test]
    fn action_trivial_cases() {
        let s = scen(0.0, [0.0; 3], 0.0);
        let zero = MultiplierPath::from_fns(10, |_| 0.0, |_| 0.0, |_| 0.0, 0.0);
        let act = quantum_action_particle(&zero, &s, 1.0).unwrap();
        assert_eq!(act.lambda, 0.0);
        assert_eq!(act.constraint_residual, 0.0);
        let s = scen(1.0, [0.0; 3], 3.0);
        let path = MultiplierPath::from_fns(10, |_| 1.0, |_| -3.0, |_| 0.0, 0.0);
        assert!(quantum_action_particle(&path, &s, 1.0).unwrap().constraint_residual.abs() < 1e-14);
    }

    #[test]
    fn stationary_examples() {
        let r = stationary_particle(&scen(1.0, [0.0; 3], 2.0)).unwrap();
        assert!((r.t_star.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.p0_star - 1.0).abs() < 1e-12);
        assert!((r.lambda_star - 2.0).abs() < 1e-12);

        let r = stationary_particle(&scen(4.0, [3.0, 0.0, 0.0], 2.0)).unwrap();
        assert!((r.lambda_star - 10.0).abs() < 1e-10);
        assert!((r.lambda_closed_form - 10.0).abs() < 1e-14);

        let r = stationary_particle(&scen(1.0, [0.0; 3], 0.0)).unwrap();
        assert_eq!(r.lambda_star, 0.0);

        let r = stationary_particle(&scen(0.0, [0.0; 3], 2.0)).unwrap();
        assert!(r.degenerate_dispersion);
        assert!(r.t_star.is_none());
        assert_eq!(r.lambda_star, 0.0);

        assert!(matches!(
            stationary_particle(&scen(1.0, [0.0; 3], -1.0)),
            Err(QapError::Domain(_))
        ));
    }

    #[test]
    fn validation_names_fields() {
        let mut s = scen(-1.0, [0.0; 3], 1.0);
        match s.validate() {
            Err(QapError::Validation { field, .. }) => assert_eq!(field, "mass"),
            other => panic!("{other:?}"),
        }
        s.mass = 1.0;
        s.hbar = 0.0;
        assert!(s.validate().is_err());
    }
}
