//! Transverse oscillator spectrum of the closed string.
//!
//! One transverse direction is discretized with canonical pairs
//! `(x_j, P_j = (π/M) p_j)`, so that
//!
//! ```text
//! H = ∫dσ [N₁(p + γx′)² + N₂(p − γx′)²] = ½ zᵀ A z,   z = (x, P).
//! ```
//!
//! With an antisymmetric derivative matrix the combinations `a = p + γx′` and
//! `b = p − γx′` commute, so `H` splits into a left sector `∫N₁a²` and a right
//! sector `∫N₂b²` for any lapse profile. The spectral derivative annihilates the
//! Nyquist mode `(−1)^j`; it is removed from both sectors and given its own
//! oscillator with the mean lapse and the stiffness of wavenumber `M/2`,
//! `N̄(P_ν²/h + γ²M²h x_ν²)` with `N̄ = mean(N₁+N₂)`, frequency `2γMN̄`.
//! It is reported in the left family and flagged.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{QapError, Result};
use crate::spectral::diff_matrix;
use crate::string_action::StringScenario;

/// Relative tolerance on eigenvalues of `A` below zero.
const PSD_TOL: f64 = 1e-10;
/// Relative tolerance on `ω²` for counting zero modes.
const ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// The `∫N₁(p + γx′)²` sector, transported toward decreasing `σ`.
    Left,
    /// The `∫N₂(p − γx′)²` sector, transported toward increasing `σ`.
    Right,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Left => "left",
            Family::Right => "right",
        }
    }
}

/// Stable identity of an oscillator across lapse changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeId {
    pub family: Family,
    /// Rank within the family (the wavenumber for σ-independent lapses);
    /// `M/2` for the Nyquist oscillator.
    pub k: usize,
    /// Transverse direction index.
    pub direction: usize,
}

/// One oscillator of one transverse direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub omega: f64,
    pub id: ModeId,
    pub nyquist: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    /// Nonzero frequencies, ascending, replicated over transverse directions.
    pub frequencies: Vec<f64>,
    /// Labels aligned with `frequencies`.
    pub modes: Vec<Mode>,
    pub dim_transverse: usize,
    /// Zero eigenvalues of `J·A`, over all transverse directions.
    pub zero_modes: usize,
    pub include_zero_point: bool,
}

/// Occupation numbers aligned with [`ModeSpectrum::frequencies`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OccupationVector {
    pub n: Vec<i64>,
}

impl OccupationVector {
    pub fn new(n: Vec<i64>) -> Self {
        OccupationVector { n }
    }

    /// Ground state.
    pub fn zeros(len: usize) -> Self {
        OccupationVector { n: vec![0; len] }
    }

    /// `n` quanta in mode `index`, all others empty.
    pub fn single(len: usize, index: usize, n: i64) -> Self {
        let mut v = vec![0; len];
        if index < len {
            v[index] = n;
        }
        OccupationVector { n: v }
    }

    /// Scales every occupation number by `s`.
    pub fn scaled(&self, s: i64) -> Self {
        OccupationVector { n: self.n.iter().map(|v| v * s).collect() }
    }

    /// Attaches the occupations to mode identities of `spectrum`.
    pub fn by_mode(&self, spectrum: &ModeSpectrum) -> Result<BTreeMap<ModeId, i64>> {
        check_occupations(spectrum, self)?;
        Ok(spectrum
            .modes
            .iter()
            .zip(self.n.iter().chain(std::iter::repeat(&0)))
            .filter(|(_, &n)| n != 0)
            .map(|(m, &n)| (m.id, n))
            .collect())
    }
}

fn check_lapse(scenario: &StringScenario) -> Result<()> {
    let m = scenario.sigma_points;
    if scenario.n1.len() != m || scenario.n2.len() != m {
        return Err(QapError::shape("lapses must have sigma_points entries"));
    }
    if scenario.n1.iter().chain(&scenario.n2).any(|&n| !(n > 0.0)) {
        return Err(QapError::domain("lapses N1, N2 must be strictly positive"));
    }
    Ok(())
}

/// Unit Nyquist vector `(−1)^j/√M`, absent for odd `M`.
fn nyquist_vector(m: usize) -> Option<DVector<f64>> {
    (m % 2 == 0 && m >= 2).then(|| {
        let c = 1.0 / (m as f64).sqrt();
        DVector::from_iterator(m, (0..m).map(|j| if j % 2 == 0 { c } else { -c }))
    })
}

/// `2M × 2M` matrix of `h ∫ N (P̃/h ± γDx)²` where `P̃` drops the Nyquist component.
fn sector_matrix(scenario: &StringScenario, family: Family) -> DMatrix<f64> {
    let m = scenario.sigma_points;
    let h = PI / m as f64;
    let (lapse, sign) = match family {
        Family::Left => (&scenario.n1, 1.0),
        Family::Right => (&scenario.n2, -1.0),
    };
    let mut keep = DMatrix::identity(m, m);
    if let Some(e) = nyquist_vector(m) {
        keep -= &e * e.transpose();
    }
    let mut l = DMatrix::zeros(m, 2 * m);
    l.view_mut((0, 0), (m, m)).copy_from(&(diff_matrix(m) * (sign * scenario.gamma)));
    l.view_mut((0, m), (m, m)).copy_from(&(keep / h));
    let weight = DMatrix::from_diagonal(&DVector::from_column_slice(lapse));
    let a = l.transpose() * weight * &l * (2.0 * h);
    (&a + a.transpose()) * 0.5
}

/// Mean of `N₁ + N₂`.
fn mean_lapse(scenario: &StringScenario) -> f64 {
    scenario.n1.iter().zip(&scenario.n2).map(|(a, b)| a + b).sum::<f64>() / scenario.sigma_points as f64
}

/// `2M × 2M` matrix `A` of one transverse direction.
pub fn build_hamiltonian_matrix(scenario: &StringScenario) -> Result<DMatrix<f64>> {
    check_lapse(scenario)?;
    let m = scenario.sigma_points;
    let mut a = sector_matrix(scenario, Family::Left) + sector_matrix(scenario, Family::Right);
    if let Some(e) = nyquist_vector(m) {
        let h = PI / m as f64;
        let nbar = mean_lapse(scenario);
        let proj = &e * e.transpose();
        let g = scenario.gamma * m as f64;
        let mut xx = a.view_mut((0, 0), (m, m));
        xx += &proj * (2.0 * nbar * g * g * h);
        let mut pp = a.view_mut((m, m), (m, m));
        pp += &proj * (2.0 * nbar / h);
    }
    Ok(a)
}

/// Symplectic frequencies of `H = ½zᵀAz`: the `ω ≥ 0` with `±iω` eigenvalues of `J·A`.
///
/// Computed from the singular values of the antisymmetric `K = A^{1/2} J A^{1/2}`,
/// which shares the spectrum of `J·A`. Returns `(nonzero ω ascending, zero count)`
/// for one direction.
pub fn symplectic_frequencies(a: &DMatrix<f64>) -> Result<(Vec<f64>, usize)> {
    let n = a.nrows();
    if n != a.ncols() || n % 2 != 0 {
        return Err(QapError::shape("Hamiltonian matrix must be square of even size"));
    }
    let scale = a.amax();
    if (a - a.transpose()).amax() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(QapError::NotAHamiltonian("matrix is not symmetric".into()));
    }
    if scale == 0.0 {
        return Ok((Vec::new(), n));
    }
    let eig = a.clone().symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let low = eig.eigenvalues.min();
    if low < -PSD_TOL * top {
        return Err(QapError::NotAHamiltonian(format!(
            "quadratic form is indefinite (eigenvalue {low:.3e} against {top:.3e})"
        )));
    }
    let roots = eig.eigenvalues.map(|e| e.max(0.0).sqrt());
    let half = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
    let m = n / 2;
    let mut j = DMatrix::zeros(n, n);
    for i in 0..m {
        j[(i, m + i)] = 1.0;
        j[(m + i, i)] = -1.0;
    }
    let k = &half * j * &half;
    let mut sq: Vec<f64> = (k.transpose() * &k).symmetric_eigenvalues().iter().map(|v| v.max(0.0)).collect();
    sq.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // `KᵀK` scales like `A²`.
    let zero_count = sq.iter().filter(|&&v| v <= ZERO_TOL * top * top).count();
    // Nonzero ω² come in equal pairs.
    let nonzero: Vec<f64> = sq[zero_count..].iter().map(|v| v.sqrt()).collect();
    let freqs = nonzero.chunks(2).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    Ok((freqs, zero_count))
}

/// Builds the spectrum of `scenario` over all transverse directions, one
/// sector at a time.
pub fn normal_modes(scenario: &StringScenario) -> Result<ModeSpectrum> {
    check_lapse(scenario)?;
    let m = scenario.sigma_points;
    let mut one: Vec<(f64, Family, usize, bool)> = Vec::new();
    for family in [Family::Left, Family::Right] {
        let (freqs, _) = symplectic_frequencies(&sector_matrix(scenario, family))?;
        one.extend(freqs.into_iter().enumerate().map(|(i, w)| (w, family, i + 1, false)));
    }
    if nyquist_vector(m).is_some() && scenario.gamma > 0.0 {
        one.push((2.0 * scenario.gamma * m as f64 * mean_lapse(scenario), Family::Left, m / 2, true));
    }
    let zeros = 2 * m - 2 * one.len();
    let mut modes: Vec<Mode> = (0..scenario.dim_transverse)
        .flat_map(|direction| {
            one.iter().map(move |&(omega, family, k, nyquist)| Mode {
                omega,
                id: ModeId { family, k, direction },
                nyquist,
            })
        })
        .collect();
    modes.sort_by(|a, b| a.omega.partial_cmp(&b.omega).unwrap().then(a.id.cmp(&b.id)));
    Ok(ModeSpectrum {
        frequencies: modes.iter().map(|m| m.omega).collect(),
        modes,
        dim_transverse: scenario.dim_transverse,
        zero_modes: zeros * scenario.dim_transverse,
        include_zero_point: scenario.zero_point,
    })
}

fn check_occupations(spectrum: &ModeSpectrum, occ: &OccupationVector) -> Result<()> {
    if !occ.n.is_empty() && occ.n.len() != spectrum.frequencies.len() {
        return Err(QapError::shape(format!(
            "occupation vector has {} entries for {} oscillators",
            occ.n.len(),
            spectrum.frequencies.len()
        )));
    }
    if let Some(bad) = occ.n.iter().find(|&&v| v < 0) {
        return Err(QapError::domain(format!("negative occupation number {bad}")));
    }
    Ok(())
}

fn zero_point_energy(spectrum: &ModeSpectrum) -> f64 {
    if spectrum.include_zero_point {
        0.5 * spectrum.frequencies.iter().sum::<f64>()
    } else {
        0.0
    }
}

/// `E_n` for occupations keyed by mode identity; modes absent from the spectrum are an error.
pub fn energy_by_mode(spectrum: &ModeSpectrum, occ: &BTreeMap<ModeId, i64>) -> Result<f64> {
    let mut e = zero_point_energy(spectrum);
    for (id, &n) in occ {
        if n < 0 {
            return Err(QapError::domain(format!("negative occupation number {n}")));
        }
        let mode = spectrum
            .modes
            .iter()
            .find(|m| m.id == *id)
            .ok_or_else(|| QapError::shape(format!("mode {id:?} is not in the spectrum")))?;
        e += mode.omega * n as f64;
    }
    Ok(e)
}

/// `E_n = Σ ω_k (n_k + ζ/2)` with `ħ = 1`; an empty occupation vector is the ground state.
pub fn energy(spectrum: &ModeSpectrum, occ: &OccupationVector) -> Result<f64> {
    check_occupations(spectrum, occ)?;
    let excited: f64 = spectrum.frequencies.iter().zip(&occ.n).map(|(w, &n)| w * n as f64).sum();
    Ok(excited + zero_point_energy(spectrum))
}

/// Spatial part of the quantum action over the unit `τ` interval.
pub fn action_xi(energy: f64) -> f64 {
    -energy
}

/// Energy of the centre-of-mass motion with total momentum `P`:
/// `|P|²/π² · ∫(N₁+N₂)dσ`.
pub fn com_energy(scenario: &StringScenario) -> f64 {
    let p2: f64 = scenario.com_momentum.iter().map(|p| p * p).sum();
    if p2 == 0.0 {
        return 0.0;
    }
    let h = PI / scenario.sigma_points as f64;
    let lapse: f64 = scenario.n1.iter().zip(&scenario.n2).map(|(a, b)| a + b).sum::<f64>() * h;
    p2 / (PI * PI) * lapse
}
