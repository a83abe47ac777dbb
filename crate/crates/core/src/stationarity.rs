//! Stationary lapses of the full string action and the energy `W_n`.
//!
//! The action is `Λ(N) = Λ*_{x⁰}(N) + Λ_{x^i}(N)` with `Λ_{x^i} = −E_n`. With the
//! stationary `Λ*_{x⁰} > 0` this sum is `A/s − B·s` along `N → sN`, which has no
//! interior stationary point. The engine therefore extremizes the effective action
//! `Λ*_{x⁰} + E_n`, the `A/s + B·s` structure of the particle's `x̃²/4T + T·b`, and
//! marks every result with `sign_adjudicated`.
//!
//! Lapse degrees of freedom are logarithmic (`N = N₀·e^u`), so gradients are
//! log-derivatives `N ∂Λ/∂N` and carry the units of the action.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QapError, Result};
use crate::string_action::{stationary_x0_solve, KktRoute, StringScenario};
use crate::string_spectrum::{action_xi, com_energy, energy, energy_by_mode, normal_modes, ModeId, OccupationVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// `N₁,₂ = s·N₁,₂⁰`.
    #[default]
    UniformScale,
    /// `N₁ = a·N₁⁰`, `N₂ = b·N₂⁰`.
    TwoScalars,
    /// Every `N₁(σ_j)`, `N₂(σ_j)` independently.
    SigmaFields,
}

impl SearchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchMode::UniformScale => "uniform-scale",
            SearchMode::TwoScalars => "two-scalars",
            SearchMode::SigmaFields => "sigma-fields",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub mode: SearchMode,
    /// Convergence when `max|N ∂Λ/∂N| ≤ gradient_tol · |Λ*|`.
    pub gradient_tol: f64,
    pub max_iterations: usize,
    /// Step in `ln N` for finite differences.
    pub fd_step: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { mode: SearchMode::UniformScale, gradient_tol: 1e-8, max_iterations: 50, fd_step: 1e-4 }
    }
}

/// Inputs and counters needed to reproduce a [`StationaryResult`].
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub sigma_points: usize,
    pub tau_steps: usize,
    pub gamma: f64,
    pub mode: SearchMode,
    pub iterations: usize,
    pub action_evaluations: usize,
    pub gradient_tol: f64,
    pub fd_step: f64,
    pub kkt_route: KktRoute,
    /// Closed-form scale `√(A/B)` the search started from.
    pub initial_scale: f64,
    /// The effective action `Λ*_{x⁰} + E_n` was extremized instead of `Λ*_{x⁰} − E_n`.
    pub sign_adjudicated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    pub n1_star: Vec<f64>,
    pub n2_star: Vec<f64>,
    pub lambda_star: f64,
    /// `Λ*_{x⁰}` at the stationary lapse.
    pub lambda_x0: f64,
    /// `E_n` (including any centre-of-mass term) at the stationary lapse.
    pub energy: f64,
    /// `Λ*/x̃⁰` for constant nonzero `x̃⁰`.
    pub w_n: Option<f64>,
    /// `(positive, negative, zero)` eigenvalue counts of the Hessian in `ln N`.
    pub hessian_signature: (usize, usize, usize),
    pub converged: bool,
    pub gradient_norm: f64,
    /// Gradient norms per iteration.
    pub trace: Vec<f64>,
    pub provenance: Provenance,
}

/// Oscillator plus centre-of-mass energy.
fn total_energy(scenario: &StringScenario, occ: &OccupationVector) -> Result<f64> {
    let spectrum = normal_modes(scenario)?;
    Ok(energy(&spectrum, occ)? + com_energy(scenario))
}

/// Energy with occupations attached to mode identities, smooth through level crossings.
fn tracked_energy(scenario: &StringScenario, occ: &BTreeMap<ModeId, i64>) -> Result<f64> {
    let spectrum = normal_modes(scenario)?;
    Ok(energy_by_mode(&spectrum, occ)? + com_energy(scenario))
}

/// `Λ*_{x⁰} + Λ_{x^i}` with `Λ_{x^i} = −E_n`.
pub fn total_action(scenario: &StringScenario, occ: &OccupationVector) -> Result<f64> {
    let x0 = stationary_x0_solve(scenario)?.lambda_star;
    Ok(x0 + action_xi(total_energy(scenario, occ)?))
}

/// `Λ*_{x⁰} + E_n`, the function whose stationary point in `N` the engine finds.
pub fn effective_action(scenario: &StringScenario, occ: &OccupationVector) -> Result<f64> {
    let x0 = stationary_x0_solve(scenario)?.lambda_star;
    Ok(x0 + total_energy(scenario, occ)?)
}

/// Log-derivative gradient of the effective action with respect to
/// `(N₁(σ_j), N₂(σ_j))`: envelope formula `−∫ N d²dτ` for `Λ*_{x⁰}`,
/// central differences in `ln N` for the energy.
fn field_gradient(scenario: &StringScenario, occ: &BTreeMap<ModeId, i64>, step: f64) -> Result<(f64, DVector<f64>)> {
    let m = scenario.sigma_points;
    let sol = stationary_x0_solve(scenario)?;
    let e0 = tracked_energy(scenario, occ)?;
    let h = scenario.sigma_weight();
    let w = scenario.tau_weights();
    let mut g = DVector::zeros(2 * m);
    for j in 0..m {
        let (mut s1, mut s2) = (0.0, 0.0);
        for (k, wk) in w.iter().enumerate() {
            s1 += wk * sol.field.d1[(k, j)].powi(2);
            s2 += wk * sol.field.d2[(k, j)].powi(2);
        }
        g[j] = -h * scenario.n1[j] * s1;
        g[m + j] = -h * scenario.n2[j] * s2;
    }
    for i in 0..2 * m {
        let bump = |sign: f64| -> Result<f64> {
            let mut s = scenario.clone();
            let field = if i < m { &mut s.n1[i] } else { &mut s.n2[i - m] };
            *field *= (sign * step).exp();
            tracked_energy(&s, occ)
        };
        g[i] += (bump(1.0)? - bump(-1.0)?) / (2.0 * step);
    }
    Ok((sol.lambda_star + e0, g))
}

/// Lapse parametrization for one search mode.
struct Chart<'a> {
    base: &'a StringScenario,
    mode: SearchMode,
}

impl Chart<'_> {
    fn dim(&self) -> usize {
        match self.mode {
            SearchMode::UniformScale => 1,
            SearchMode::TwoScalars => 2,
            SearchMode::SigmaFields => 2 * self.base.sigma_points,
        }
    }

    fn scenario(&self, u: &DVector<f64>) -> StringScenario {
        let m = self.base.sigma_points;
        let mut s = self.base.clone();
        for j in 0..m {
            let (a, b) = match self.mode {
                SearchMode::UniformScale => (u[0], u[0]),
                SearchMode::TwoScalars => (u[0], u[1]),
                SearchMode::SigmaFields => (u[j], u[m + j]),
            };
            s.n1[j] *= a.exp();
            s.n2[j] *= b.exp();
        }
        s
    }

    /// Pulls a field gradient back to the chart coordinates.
    fn pull(&self, g: &DVector<f64>) -> DVector<f64> {
        let m = self.base.sigma_points;
        match self.mode {
            SearchMode::UniformScale => DVector::from_element(1, g.sum()),
            SearchMode::TwoScalars => DVector::from_vec(vec![g.rows(0, m).sum(), g.rows(m, m).sum()]),
            SearchMode::SigmaFields => g.clone(),
        }
    }
}

/// Finds `N` with `∇_N (Λ*_{x⁰} + E_n) = 0`, starting from the closed-form scale.
pub fn find_stationary_n(
    template: &StringScenario,
    occ: &OccupationVector,
    options: EngineOptions,
) -> Result<StationaryResult> {
    template.validate()?;
    let a = stationary_x0_solve(template)?.lambda_star;
    let b = total_energy(template, occ)?;
    if !(b > 0.0) {
        return Err(QapError::DegenerateScale(format!(
            "spatial energy is {b:.3e}; with no excitation, zero point or centre-of-mass momentum there is no interior stationary scale"
        )));
    }
    if !(a > 0.0) {
        return Err(QapError::DegenerateScale(format!(
            "stationary x0-sector action is {a:.3e}; the A/s + B s structure needs A > 0"
        )));
    }
    let tracked = occ.by_mode(&normal_modes(template)?)?;
    let occ = &tracked;
    let s0 = (a / b).sqrt();
    let mut base = template.scale_lapse(s0);
    let route = stationary_x0_solve(&base)?.route;
    let chart = Chart { base: &base, mode: options.mode };
    let dim = chart.dim();
    let mut evaluations = 2;

    let mut u = DVector::zeros(dim);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let (mut value, grad) = field_gradient(&chart.scenario(&u), occ, options.fd_step)?;
    evaluations += 1;
    let mut g = chart.pull(&grad);
    let mut gnorm = g.amax();
    trace.push(gnorm);
    let mut converged = gnorm <= options.gradient_tol * value.abs();

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let hess = hessian(&chart, &u, occ, options.fd_step)?;
        evaluations += 2 * dim;
        let step = pseudo_solve(&hess, &(-&g));
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &u + t * &step;
            let (v, gr) = field_gradient(&chart.scenario(&trial), occ, options.fd_step)?;
            evaluations += 1;
            let gt = chart.pull(&gr);
            if gt.amax() < gnorm {
                u = trial;
                value = v;
                g = gt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        gnorm = g.amax();
        trace.push(gnorm);
        converged = gnorm <= options.gradient_tol * value.abs();
        if !accepted {
            break;
        }
    }
    if !converged {
        return Err(QapError::NoStationaryPoint { iterations, gradient_norm: gnorm, trace });
    }

    let star = chart.scenario(&u);
    let hess = hessian(&chart, &u, occ, options.fd_step)?;
    evaluations += 2 * dim;
    let signature = hessian_signature(&hess);
    let lambda_x0 = stationary_x0_solve(&star)?.lambda_star;
    let energy = tracked_energy(&star, occ)?;
    let w_n = if star.boundary_is_constant() && star.x0_final[0] != 0.0 {
        Some(value / star.x0_final[0])
    } else {
        None
    };
    base.n1.clone_from(&star.n1);
    base.n2.clone_from(&star.n2);
    Ok(StationaryResult {
        n1_star: base.n1,
        n2_star: base.n2,
        lambda_star: value,
        lambda_x0,
        energy,
        w_n,
        hessian_signature: signature,
        converged,
        gradient_norm: gnorm,
        trace,
        provenance: Provenance {
            sigma_points: template.sigma_points,
            tau_steps: template.tau_steps,
            gamma: template.gamma,
            mode: options.mode,
            iterations,
            action_evaluations: evaluations,
            gradient_tol: options.gradient_tol,
            fd_step: options.fd_step,
            kkt_route: route,
            initial_scale: s0,
            sign_adjudicated: true,
        },
    })
}

/// Central-difference Hessian of the chart gradient, symmetrized.
fn hessian(chart: &Chart<'_>, u: &DVector<f64>, occ: &BTreeMap<ModeId, i64>, step: f64) -> Result<DMatrix<f64>> {
    let dim = chart.dim();
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let mut up = u.clone();
        up[i] += step;
        let mut dn = u.clone();
        dn[i] -= step;
        let gp = chart.pull(&field_gradient(&chart.scenario(&up), occ, step)?.1);
        let gm = chart.pull(&field_gradient(&chart.scenario(&dn), occ, step)?.1);
        h.set_column(i, &((gp - gm) / (2.0 * step)));
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// Minimum-norm solution of `H x = b`, ignoring directions with tiny singular values.
fn pseudo_solve(h: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = h.clone().svd(true, true);
    let top = svd.singular_values.max();
    svd.solve(b, 1e-8 * top).unwrap_or_else(|_| DVector::zeros(b.len()))
}

/// Eigenvalue sign counts with zeros below `1e-6` of the largest magnitude.
pub fn hessian_signature(h: &DMatrix<f64>) -> (usize, usize, usize) {
    let eig = h.symmetric_eigenvalues();
    let top = eig.amax();
    let tol = 1e-6 * top;
    let pos = eig.iter().filter(|&&e| e > tol).count();
    let neg = eig.iter().filter(|&&e| e < -tol).count();
    (pos, neg, eig.len() - pos - neg)
}

/// Least-squares slope of `ln f(s)` against `ln s`.
pub fn scaling_probe<F>(mut evaluator: F, scales: &[f64]) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if scales.len() < 2 || scales.iter().any(|&s| !(s > 0.0)) {
        return Err(QapError::domain("scaling probe needs at least two positive scales"));
    }
    let mut pts = Vec::with_capacity(scales.len());
    for &s in scales {
        let v = evaluator(s)?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(QapError::domain(format!("value {v:e} at scale {s} is not positive")));
        }
        pts.push((s.ln(), v.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(QapError::domain("scaling probe needs distinct scales"));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn excited(m: usize) -> (StringScenario, OccupationVector) {
        let s = StringScenario::uniform(m, 20, 0.4, 0.7, 0.7, 2.0);
        let len = normal_modes(&s).unwrap().frequencies.len();
        (s, OccupationVector::single(len, 0, 3))
    }

    #[test]
    fn probe_basics() {
        assert!((scaling_probe(|s| Ok(s * s), &[0.5, 1.0, 2.0, 4.0]).unwrap() - 2.0).abs() < 1e-14);
        assert!(scaling_probe(|_| Ok(3.0), &[0.5, 2.0]).unwrap().abs() < 1e-14);
        assert!(matches!(scaling_probe(|_| Ok(-1.0), &[0.5, 2.0]), Err(QapError::Domain(_))));
    }

    #[test]
    fn ground_state_with_zero_boundary_is_zero() {
        let s = StringScenario::uniform(4, 10, 0.5, 1.0, 1.0, 0.0);
        assert_eq!(total_action(&s, &OccupationVector::default()).unwrap(), 0.0);
    }

    #[test]
    fn action_splits_into_inverse_and_linear_parts() {
        let (s, occ) = excited(4);
        let a = stationary_x0_solve(&s).unwrap().lambda_star;
        let e = total_energy(&s, &occ).unwrap();
        for k in [0.5, 2.0, 4.0] {
            let t = total_action(&s.scale_lapse(k), &occ).unwrap();
            assert!((t - (a / k - k * e)).abs() < 1e-10 * a.abs().max(e));
        }
    }

    #[test]
    fn uniform_scale_matches_closed_form() {
        let (s, occ) = excited(4);
        let a = stationary_x0_solve(&s).unwrap().lambda_star;
        let b = total_energy(&s, &occ).unwrap();
        let r = find_stationary_n(&s, &occ, EngineOptions::default()).unwrap();
        assert!((r.lambda_star - 2.0 * (a * b).sqrt()).abs() < 1e-10 * r.lambda_star);
        assert!((r.lambda_x0 - r.energy).abs() < 1e-10 * r.lambda_star);
        assert_eq!(r.hessian_signature, (1, 0, 0));
        assert!(r.provenance.sign_adjudicated);
        assert!((r.w_n.unwrap() - r.lambda_star / 2.0).abs() < 1e-15);
    }

    #[test]
    fn ground_state_has_no_scale() {
        let s = StringScenario::uniform(4, 10, 0.5, 1.0, 1.0, 1.0);
        let r = find_stationary_n(&s, &OccupationVector::default(), EngineOptions::default());
        assert!(matches!(r, Err(QapError::DegenerateScale(_))));
    }

    #[test]
    fn asymmetric_family_has_no_two_scalar_stationary_point() {
        // Only N₁ is excited: ∂/∂N₂ (A/(N₁+N₂)) never vanishes.
        let (s, occ) = excited(4);
        let opts = EngineOptions { mode: SearchMode::TwoScalars, max_iterations: 8, ..Default::default() };
        match find_stationary_n(&s, &occ, opts) {
            Err(QapError::NoStationaryPoint { trace, .. }) => assert!(!trace.is_empty()),
            other => panic!("{other:?}"),
        }
    }
}
