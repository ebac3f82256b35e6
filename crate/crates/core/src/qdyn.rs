//! Quantum kicked rotator on the torus: coherent states, split-operator
//! Floquet evolution, the Loschmidt echo and its long-time saturation.
//!
//! The torus `[0, 2π) × [0, 2π)` is quantised with `N` states, giving
//! `ħ = 2π/N`. Position and momentum grids are both `2πj/N`, `j = 0..N−1`;
//! momenta are *not* shifted to a symmetric range, and the kinetic phase
//! `exp(−i p²/(2ħ))` is evaluated on these unshifted values (it is periodic
//! in `p → p + 2π` for even `N`).
//!
//! One Floquet period applies the kick `exp(−iK cos r/ħ)` in position space,
//! then the free rotation in momentum space — the quantum counterpart of
//! [`KickOrder::KickFirst`](crate::maps::KickOrder::KickFirst).

use crate::error::{arg, Error, Result};
use crate::numerics::{CompensatedComplexSum, CompensatedSum};
use crate::TWO_PI;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Quantised torus of dimension `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    n: usize,
}

/// Largest dimension accepted without complaint; bigger grids are allowed
/// but reported as long-running by [`TorusGrid::is_long_running`].
pub const DESK_SCALE_MAX_N: usize = 1 << 16;

impl TorusGrid {
    /// Grid with `n` states; `n` must be a power of two and at least 8.
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(arg(format!("grid dimension must be a power of two >= 8, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Effective Planck constant `2π/N`.
    pub fn hbar(&self) -> f64 {
        TWO_PI / self.n as f64
    }

    /// Position (and momentum) of grid index `j`: `2πj/N`.
    pub fn coord(&self, j: usize) -> f64 {
        TWO_PI * j as f64 / self.n as f64
    }

    pub fn is_long_running(&self) -> bool {
        self.n > DESK_SCALE_MAX_N
    }
}

/// State vector in the position representation.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub grid: TorusGrid,
    pub amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// Wraps amplitudes, normalising them.
    pub fn from_amplitudes(grid: TorusGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n() {
            return Err(arg(format!(
                "expected {} amplitudes, got {}",
                grid.n(),
                amplitudes.len()
            )));
        }
        let mut s = Self { grid, amplitudes };
        let nrm = s.norm();
        if !(nrm.is_finite() && nrm > 0.0) {
            return Err(arg("state has zero or non-finite norm"));
        }
        s.amplitudes.iter_mut().for_each(|a| *a /= nrm);
        Ok(s)
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .collect::<CompensatedSum>()
            .value()
            .sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &QuantumState) -> Complex64 {
        overlap(&self.amplitudes, &other.amplitudes)
    }

    /// Momentum-representation amplitudes `⟨p_k|ψ⟩` (unitary DFT).
    pub fn momentum_amplitudes(&self) -> Vec<Complex64> {
        let mut buf = self.amplitudes.clone();
        FftPlanner::new().plan_fft_forward(self.grid.n()).process(&mut buf);
        let s = 1.0 / (self.grid.n() as f64).sqrt();
        buf.iter_mut().for_each(|a| *a *= s);
        buf
    }

    /// Circular mean position `arg⟨e^{ir}⟩`, in `[0, 2π)`.
    pub fn mean_position(&self) -> f64 {
        circular_mean(&self.amplitudes, &self.grid)
    }

    /// Circular mean momentum from the momentum distribution, in `[0, 2π)`.
    pub fn mean_momentum(&self) -> f64 {
        circular_mean(&self.momentum_amplitudes(), &self.grid)
    }
}

fn circular_mean(amps: &[Complex64], grid: &TorusGrid) -> f64 {
    let mut acc = CompensatedComplexSum::default();
    for (j, a) in amps.iter().enumerate() {
        acc.add(Complex64::from_polar(a.norm_sqr(), grid.coord(j)));
    }
    crate::maps::wrap(acc.value().arg())
}

/// `Σ conj(a_j) b_j` with compensated summation.
pub fn overlap(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = CompensatedComplexSum::default();
    for (x, y) in a.iter().zip(b) {
        acc.add(x.conj() * y);
    }
    acc.value()
}

/// Periodic images summed on each side when building a coherent state.
pub const COHERENT_IMAGES: i32 = 3;

/// Largest relative weight tolerated for the first neglected image.
pub const IMAGE_TRUNCATION_TOL: f64 = 1e-12;

/// Periodised Gaussian wave packet centred at `(r0, p0)` with width `xi`:
///
/// `ψ(r_j) ∝ Σ_w exp[i p0 (r_j + 2πw)/ħ − (r_j + 2πw − r0)²/(2ξ²)]`, `|w| ≤ 3`.
///
/// `ξ = √ħ` gives the circular (`k = 1`) coherent state.
pub fn coherent_state(grid: &TorusGrid, r0: f64, p0: f64, xi: f64) -> Result<QuantumState> {
    if !(xi.is_finite() && xi > 0.0) {
        return Err(arg(format!("dispersion must be positive, got {xi}")));
    }
    let r0 = crate::maps::wrap(r0);
    // With r_j and r0 both in [0, 2π), the nearest neglected image lies at
    // least `COHERENT_IMAGES` periods from the centre.
    let gap = TWO_PI * COHERENT_IMAGES as f64;
    let neglected = (-(gap * gap) / (2.0 * xi * xi)).exp();
    if neglected > IMAGE_TRUNCATION_TOL {
        return Err(Error::Config(format!(
            "dispersion {xi} too large: periodisation truncation error {neglected:e} exceeds \
             {IMAGE_TRUNCATION_TOL:e}"
        )));
    }
    let hbar = grid.hbar();
    let amps = (0..grid.n())
        .map(|j| {
            let r = grid.coord(j);
            (-COHERENT_IMAGES..=COHERENT_IMAGES)
                .map(|w| {
                    let x = r + TWO_PI * w as f64;
                    let d = x - r0;
                    Complex64::from_polar((-d * d / (2.0 * xi * xi)).exp(), p0 * x / hbar)
                })
                .sum::<Complex64>()
        })
        .collect();
    QuantumState::from_amplitudes(*grid, amps)
}

/// Split-operator Floquet propagator for one kick strength.
///
/// Owns its FFT plans and scratch space, so each evolution carries its own
/// instance.
pub struct Floquet {
    grid: TorusGrid,
    k: f64,
    kick: Vec<Complex64>,
    /// Kinetic phase with the inverse-DFT normalisation folded in.
    kinetic: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Floquet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Floquet").field("grid", &self.grid).field("k", &self.k).finish()
    }
}

impl Floquet {
    pub fn new(grid: &TorusGrid, k: f64) -> Self {
        let n = grid.n();
        let hbar = grid.hbar();
        let kick = (0..n)
            .map(|j| Complex64::from_polar(1.0, -k * grid.coord(j).cos() / hbar))
            .collect();
        let kinetic = (0..n)
            .map(|m| {
                let p = grid.coord(m);
                Complex64::from_polar(1.0 / n as f64, -p * p / (2.0 * hbar))
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            grid: *grid,
            k,
            kick,
            kinetic,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Applies one period in place: kick, DFT, kinetic phase, inverse DFT.
    pub fn apply(&mut self, psi: &mut [Complex64]) {
        debug_assert_eq!(psi.len(), self.grid.n());
        psi.iter_mut().zip(&self.kick).for_each(|(a, u)| *a *= u);
        self.forward.process_with_scratch(psi, &mut self.scratch);
        psi.iter_mut().zip(&self.kinetic).for_each(|(a, u)| *a *= u);
        self.inverse.process_with_scratch(psi, &mut self.scratch);
    }

    /// Applies the inverse period in place.
    pub fn apply_inverse(&mut self, psi: &mut [Complex64]) {
        self.forward.process_with_scratch(psi, &mut self.scratch);
        psi.iter_mut().zip(&self.kinetic).for_each(|(a, u)| *a *= u.conj());
        self.inverse.process_with_scratch(psi, &mut self.scratch);
        psi.iter_mut().zip(&self.kick).for_each(|(a, u)| *a *= u.conj());
    }

    /// Advances a state by one period.
    pub fn step(&mut self, state: &mut QuantumState) {
        self.apply(&mut state.amplitudes);
    }
}

/// Advances `state` by one Floquet period with kick strength `k`.
///
/// Builds a fresh propagator; use [`Floquet`] directly for repeated steps.
pub fn floquet_step(state: &QuantumState, k: f64) -> QuantumState {
    let mut out = state.clone();
    Floquet::new(&state.grid, k).step(&mut out);
    out
}

/// Loschmidt echo `M(t)` for `t = 0..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoSeries {
    /// Scaled perturbation `σ = ε/ħ`.
    pub sigma: f64,
    /// Unperturbed kick strength.
    pub k: f64,
    /// Grid dimension.
    pub n: usize,
    /// `values[t] = M(t)`.
    pub values: Vec<f64>,
    /// Non-fatal diagnostics raised while computing the series.
    pub notes: Vec<String>,
}

impl EchoSeries {
    pub fn horizon(&self) -> u64 {
        (self.values.len() - 1) as u64
    }
}

/// Ratio `ε/K` above which a perturbation is flagged as not small.
pub const LARGE_PERTURBATION_RATIO: f64 = 0.1;

/// Echo of `state0` under kick strengths `K` and `K + σħ`, recorded after
/// every period up to `horizon`.
///
/// The overlap is divided by both squared norms, so rounding drift of the
/// norms does not enter `M(t)`.
pub fn loschmidt_echo(state0: &QuantumState, k: f64, sigma: f64, horizon: u64) -> Result<EchoSeries> {
    Ok(loschmidt_echo_multi(state0, k, &[sigma], horizon)?.remove(0))
}

/// Echo series for several perturbations sharing one unperturbed evolution.
pub fn loschmidt_echo_multi(
    state0: &QuantumState,
    k: f64,
    sigmas: &[f64],
    horizon: u64,
) -> Result<Vec<EchoSeries>> {
    if sigmas.is_empty() {
        return Err(arg("at least one perturbation is required"));
    }
    if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(arg(format!("perturbation must be finite and >= 0, got {s}")));
    }
    let grid = state0.grid;
    let hbar = grid.hbar();
    let mut reference = Floquet::new(&grid, k);
    let mut perturbed: Vec<Floquet> = sigmas.iter().map(|s| Floquet::new(&grid, k + s * hbar)).collect();
    let mut psi = state0.amplitudes.clone();
    let mut phis: Vec<Vec<Complex64>> = sigmas.iter().map(|_| state0.amplitudes.clone()).collect();
    let mut out: Vec<EchoSeries> = sigmas
        .iter()
        .map(|&sigma| {
            let mut notes = Vec::new();
            let eps = sigma * hbar;
            if k > 0.0 && eps > LARGE_PERTURBATION_RATIO * k {
                notes.push(format!("perturbation ε = {eps} exceeds {LARGE_PERTURBATION_RATIO}·K"));
            }
            let mut values = Vec::with_capacity(horizon as usize + 1);
            values.push(1.0);
            EchoSeries { sigma, k, n: grid.n(), values, notes }
        })
        .collect();
    for _ in 0..horizon {
        reference.apply(&mut psi);
        let psi_norm = norm_sqr(&psi);
        for ((u, phi), series) in perturbed.iter_mut().zip(phis.iter_mut()).zip(out.iter_mut()) {
            u.apply(phi);
            series.values.push(overlap(phi, &psi).norm_sqr() / (norm_sqr(phi) * psi_norm));
        }
    }
    Ok(out)
}

fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).collect::<CompensatedSum>().value()
}

/// Fewest tail points accepted by [`saturation_estimate`].
pub const MIN_TAIL_POINTS: usize = 1000;

/// Long-time saturation `F∞`: mean of the last `tail_fraction` of the series.
pub fn saturation_estimate(values: &[f64], tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(arg(format!("tail fraction must lie in (0, 1], got {tail_fraction}")));
    }
    let len = (values.len() as f64 * tail_fraction).floor() as usize;
    if len == 0 {
        return Err(arg("saturation tail window is empty"));
    }
    if len < MIN_TAIL_POINTS {
        return Err(arg(format!(
            "saturation tail has {len} points, at least {MIN_TAIL_POINTS} required"
        )));
    }
    let tail = &values[values.len() - len..];
    Ok(crate::numerics::sum(tail) / len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(4).is_err());
        assert!(TorusGrid::new(24).is_err());
        let g = TorusGrid::new(8).unwrap();
        assert_eq!(g.hbar(), TWO_PI / 8.0);
        assert!(!TorusGrid::new(1 << 12).unwrap().is_long_running());
        assert!(TorusGrid::new(1 << 21).unwrap().is_long_running());
    }

    #[test]
    fn coherent_state_moments() {
        let g = TorusGrid::new(1 << 12).unwrap();
        let xi = g.hbar().sqrt();
        let psi = coherent_state(&g, 2.2, 3.0, xi).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        assert!((psi.mean_position() - 2.2).abs() < 1e-8);
        assert!((psi.mean_momentum() - 3.0).abs() < 1e-8);
        // Spreads about the means (packets are far from the cut).
        let spread = |amps: &[Complex64], mean: f64| {
            amps.iter()
                .enumerate()
                .map(|(j, a)| a.norm_sqr() * (g.coord(j) - mean).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let dr = spread(&psi.amplitudes, 2.2);
        let dp = spread(&psi.momentum_amplitudes(), 3.0);
        assert!((dr * dp / (g.hbar() / 2.0) - 1.0).abs() < 0.01, "{}", dr * dp / g.hbar());
    }

    #[test]
    fn coherent_state_rejects_wide_packets() {
        let g = TorusGrid::new(64).unwrap();
        assert!(matches!(coherent_state(&g, 1.0, 1.0, 3.0), Err(Error::Config(_))));
        assert!(coherent_state(&g, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn free_evolution_keeps_momentum_distribution() {
        let g = TorusGrid::new(256).unwrap();
        let psi0 = coherent_state(&g, 1.0, 2.0, g.hbar().sqrt()).unwrap();
        let p0: Vec<f64> = psi0.momentum_amplitudes().iter().map(|a| a.norm()).collect();
        let mut u = Floquet::new(&g, 0.0);
        let mut psi = psi0.clone();
        for _ in 0..50 {
            u.step(&mut psi);
        }
        for (a, b) in psi.momentum_amplitudes().iter().zip(&p0) {
            assert!((a.norm() - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_step_preserves_norm() {
        let g = TorusGrid::new(1 << 12).unwrap();
        let psi = coherent_state(&g, 2.2, 3.0, g.hbar().sqrt()).unwrap();
        let next = floquet_step(&psi, 3.0);
        assert!((next.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_step_undoes_step() {
        let g = TorusGrid::new(128).unwrap();
        let psi0 = coherent_state(&g, 2.2, 3.0, g.hbar().sqrt()).unwrap();
        let mut u = Floquet::new(&g, 5.0);
        let mut a = psi0.amplitudes.clone();
        u.apply(&mut a);
        u.apply_inverse(&mut a);
        for (x, y) in a.iter().zip(&psi0.amplitudes) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn echo_trivial_cases() {
        let g = TorusGrid::new(256).unwrap();
        let psi = coherent_state(&g, 2.2, 3.0, g.hbar().sqrt()).unwrap();
        let e = loschmidt_echo(&psi, 3.0, 0.0, 200).unwrap();
        assert_eq!(e.values[0], 1.0);
        assert!(e.values.iter().all(|m| (m - 1.0).abs() < 1e-12));
        let e = loschmidt_echo(&psi, 3.0, 0.7, 0).unwrap();
        assert_eq!(e.values, vec![1.0]);
        assert!(loschmidt_echo(&psi, 3.0, -0.1, 5).is_err());
    }

    #[test]
    fn large_perturbations_are_flagged() {
        let g = TorusGrid::new(8).unwrap();
        let psi = coherent_state(&g, 2.2, 3.0, 0.5).unwrap();
        let e = loschmidt_echo(&psi, 1.0, 1.0, 3).unwrap();
        assert_eq!(e.notes.len(), 1);
    }

    #[test]
    fn saturation_of_constant_series() {
        let v = vec![0.25; 4000];
        assert_eq!(saturation_estimate(&v, 0.5).unwrap(), 0.25);
        assert!(saturation_estimate(&v[..1500], 0.5).is_err());
        assert!(saturation_estimate(&v, 0.0).is_err());
    }
}
