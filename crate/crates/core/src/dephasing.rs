//! Semiclassical echo estimators built on classical action distributions.
//!
//! The echo is estimated as the squared modulus of the characteristic
//! function of the accumulated action, `M_sc = |Σ_j w_j e^{iσ s_j}|²`
//! (first order), or with per-trajectory Gaussian-window corrections `D`
//! (second order). One set of trajectories serves every perturbation σ.

use crate::ensembles::{ActionDistribution, Ensemble, Provenance, WavePacketSpec};
use crate::error::{arg, Error, Result};
use crate::maps::{jacobian, step, KickOrder, MapParams, PhasePoint};
use crate::numerics::{CompensatedComplexSum, CompensatedSum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Members per parallel chunk. Chunk sums are combined in a fixed order,
/// so results do not depend on the number of worker threads.
const CHUNK: usize = 4096;

/// `Σ_j w_j e^{iσ s_j}` with compensated, thread-count-independent summation.
pub fn phase_sum(samples: &[f64], weights: &[f64], sigma: f64) -> Complex64 {
    let partials: Vec<CompensatedComplexSum> = samples
        .par_chunks(CHUNK)
        .zip(weights.par_chunks(CHUNK))
        .map(|(s, w)| {
            let mut acc = CompensatedComplexSum::default();
            for (&sj, &wj) in s.iter().zip(w) {
                acc.add(Complex64::from_polar(wj, sigma * sj));
            }
            acc
        })
        .collect();
    let mut total = CompensatedComplexSum::default();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// `|Σ w_j e^{iσ s_j}|²` for normalised weights; exactly 1 at `σ = 0`.
pub fn msc_from_samples(samples: &[f64], weights: &[f64], sigma: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(arg("semiclassical estimate needs at least one sample"));
    }
    if samples.len() != weights.len() {
        return Err(arg("samples and weights differ in length"));
    }
    if sigma == 0.0 {
        return Ok(1.0);
    }
    Ok(phase_sum(samples, weights, sigma).norm_sqr())
}

/// Semiclassical echo of one action distribution.
pub fn msc_direct(actions: &ActionDistribution, sigma: f64) -> Result<f64> {
    msc_from_samples(&actions.samples, &actions.weights, sigma)
}

/// Order of the semiclassical approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    First,
    Second,
}

/// Semiclassical echo `M_sc(t)` for `t = 0..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalSeries {
    pub sigma: f64,
    pub order: Order,
    /// `values[t] = M_sc(t)`.
    pub values: Vec<f64>,
    /// Diagnostics, e.g. detected revivals.
    pub notes: Vec<String>,
}

/// Level below which the series counts as decayed and above which a later
/// value counts as a revival.
pub const REVIVAL_LEVELS: (f64, f64) = (0.05, 0.5);

/// First time the series climbs back above `REVIVAL_LEVELS.1` after having
/// dropped below `REVIVAL_LEVELS.0`.
pub fn detect_revival(values: &[f64]) -> Option<u64> {
    let mut decayed = false;
    for (t, &m) in values.iter().enumerate() {
        if m < REVIVAL_LEVELS.0 {
            decayed = true;
        } else if decayed && m > REVIVAL_LEVELS.1 {
            return Some(t as u64);
        }
    }
    None
}

fn finish(sigma: f64, order: Order, values: Vec<f64>) -> SemiclassicalSeries {
    let notes = detect_revival(&values)
        .map(|t| vec![format!("revival of the semiclassical echo at t = {t}")])
        .unwrap_or_default();
    SemiclassicalSeries { sigma, order, values, notes }
}

/// First-order series for several perturbations from one set of trajectories.
pub fn msc_first_order_multi(
    ensemble: &Ensemble,
    params: &MapParams,
    sigmas: &[f64],
    horizon: u64,
) -> Result<Vec<SemiclassicalSeries>> {
    if ensemble.is_empty() {
        return Err(arg("semiclassical estimate needs at least one sample"));
    }
    let mut tracker = crate::ensembles::ActionTracker::new(ensemble, *params);
    let mut values: Vec<Vec<f64>> = sigmas.iter().map(|_| vec![1.0]).collect();
    for _ in 0..horizon {
        tracker.advance();
        for (v, &s) in values.iter_mut().zip(sigmas) {
            v.push(msc_from_samples(tracker.actions(), &ensemble.weights, s)?);
        }
    }
    Ok(sigmas
        .iter()
        .zip(values)
        .map(|(&s, v)| finish(s, Order::First, v))
        .collect())
}

/// First-order series `t = 0..=T`: the weighted phase average over the
/// ensemble's trajectories.
pub fn msc_first_order_series(
    ensemble: &Ensemble,
    params: &MapParams,
    sigma: f64,
    horizon: u64,
) -> Result<SemiclassicalSeries> {
    Ok(msc_first_order_multi(ensemble, params, &[sigma], horizon)?.remove(0))
}

/// How `∂p_s/∂r̃₀` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeScheme {
    /// Exact linearisation: `−m₁₁/m₁₂` from the rescaled monodromy matrix.
    #[default]
    Tangent,
    /// Central differences of the final position with step `1e−6·2π`,
    /// refined once by Richardson extrapolation.
    CentralDifference,
}

/// Finite-difference step for [`DerivativeScheme::CentralDifference`].
pub const FD_STEP: f64 = 1e-6 * crate::TWO_PI;

/// Relative disagreement between the `h` and `h/2` difference quotients
/// beyond which the finite-difference estimate is rejected.
pub const FD_CONSISTENCY_TOL: f64 = 1e-3;

/// Second-order correction factor at one initial condition and time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DFactorSample {
    pub p0: f64,
    pub t: u64,
    /// `∂p_s/∂r̃₀`: change of the initial momentum reaching the same final
    /// position when the initial position moves.
    pub dps_dr0: f64,
    /// `D = √(1 + (∂p_s/∂r̃₀)²/k²) ≥ 1`.
    pub d: f64,
}

/// Rescaled monodromy matrix of the orbit of `x0` after `t` steps.
fn monodromy(params: &MapParams, x0: PhasePoint, t: u64) -> [[f64; 2]; 2] {
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    let mut x = x0;
    for _ in 0..t {
        m = mul(jacobian(params, x), m);
        rescale(&mut m);
        x = step(params, x);
    }
    m
}

fn mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn rescale(m: &mut [[f64; 2]; 2]) {
    let s = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if s > 1e100 || (s < 1e-100 && s > 0.0) {
        m.iter_mut().flatten().for_each(|v| *v /= s);
    }
}

fn ratio_from_row(m11: f64, m12: f64) -> Result<f64> {
    if m12 == 0.0 {
        return Err(Error::Numerical(
            "final position independent of initial momentum (focal point)".into(),
        ));
    }
    Ok(-m11 / m12)
}

/// Unwrapped final position after `t` steps (the momentum is not reduced,
/// so the orbit lives on the cylinder).
fn cylinder_position(params: &MapParams, r0: f64, p0: f64, t: u64) -> f64 {
    let (mut r, mut p) = (r0, p0);
    for _ in 0..t {
        match params.order {
            KickOrder::KickFirst => {
                p += params.k * r.sin();
                r += p;
            }
            KickOrder::DriftFirst => {
                r += p;
                p += params.k * r.sin();
            }
        }
    }
    r
}

fn richardson<F: Fn(f64) -> f64>(f: F, h: f64) -> Result<f64> {
    let d1 = (f(h) - f(-h)) / (2.0 * h);
    let d2 = (f(h / 2.0) - f(-h / 2.0)) / h;
    if !(d1.is_finite() && d2.is_finite()) || d2 == 0.0 {
        return Err(Error::Numerical("finite difference produced no usable slope".into()));
    }
    if ((d1 - d2) / d2).abs() > FD_CONSISTENCY_TOL {
        return Err(Error::Numerical(format!(
            "finite-difference step {h:e} too coarse: quotients {d1:e} and {d2:e} disagree"
        )));
    }
    Ok((4.0 * d2 - d1) / 3.0)
}

/// `∂p_s/∂r̃₀` for the orbit starting at `(r0, p0)` after `t` steps.
pub fn dps_dr0(params: &MapParams, r0: f64, p0: f64, t: u64, scheme: DerivativeScheme) -> Result<f64> {
    match scheme {
        DerivativeScheme::Tangent => {
            let m = monodromy(params, PhasePoint::new(r0, p0), t);
            ratio_from_row(m[0][0], m[0][1])
        }
        DerivativeScheme::CentralDifference => {
            let drdr = richardson(|h| cylinder_position(params, r0 + h, p0, t), FD_STEP)?;
            let drdp = richardson(|h| cylinder_position(params, r0, p0 + h, t), FD_STEP)?;
            ratio_from_row(drdr, drdp)
        }
    }
}

/// Second-order correction factor `D` for the orbit `(r̃₀, p0)` at time `t`
/// and shape ratio `k = ħ/ξ²`.
pub fn d_factor(
    params: &MapParams,
    r0_tilde: f64,
    p0: f64,
    t: u64,
    k: f64,
    scheme: DerivativeScheme,
) -> Result<DFactorSample> {
    if t < 1 {
        return Err(arg("D factor needs t >= 1"));
    }
    if !(k > 0.0) {
        return Err(arg(format!("shape ratio k must be positive, got {k}")));
    }
    let g = dps_dr0(params, r0_tilde, p0, t, scheme)?;
    let d = if k.is_infinite() { 1.0 } else { (1.0 + (g / k) * (g / k)).sqrt() };
    Ok(DFactorSample { p0, t, dps_dr0: g, d })
}

fn packet_of(ensemble: &Ensemble) -> Result<WavePacketSpec> {
    match ensemble.provenance {
        Provenance::WavePacket { spec } => Ok(spec),
        _ => Err(arg("second-order estimate needs a wave-packet ensemble")),
    }
}

/// Signed momentum offset folded into `(−π, π]`.
fn momentum_offset(p: f64, p_mean: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let d = (p - p_mean).rem_euclid(crate::TWO_PI);
    if d > pi {
        d - crate::TWO_PI
    } else {
        d
    }
}

/// Second-order series for several perturbations.
///
/// Each trajectory is reweighted from the first-order Gaussian window
/// `exp[−Δp²/(ħ/ξ)²]` to the widened window `D⁻¹ exp[−Δp²/(ħD/ξ)²]`, with
/// `D` evaluated along the trajectory at every step (tangent scheme). The
/// weights are self-normalised, so `σ = 0` and single-trajectory ensembles
/// give exactly 1.
pub fn msc_second_order_multi(
    ensemble: &Ensemble,
    params: &MapParams,
    sigmas: &[f64],
    horizon: u64,
    k: f64,
) -> Result<Vec<SemiclassicalSeries>> {
    if ensemble.is_empty() {
        return Err(arg("semiclassical estimate needs at least one sample"));
    }
    if !(k > 0.0) {
        return Err(arg(format!("shape ratio k must be positive, got {k}")));
    }
    let spec = packet_of(ensemble)?;
    let inv_width2 = (spec.xi / spec.hbar).powi(2);
    let dp2: Vec<f64> = ensemble
        .points
        .iter()
        .map(|x| momentum_offset(x.p, spec.p0).powi(2))
        .collect();
    let mut points = ensemble.points.clone();
    let mut actions = vec![0.0; ensemble.len()];
    let mut mono = vec![[[1.0, 0.0], [0.0, 1.0]]; ensemble.len()];
    let mut weights = vec![0.0; ensemble.len()];
    let mut values: Vec<Vec<f64>> = sigmas.iter().map(|_| vec![1.0]).collect();
    let p = *params;
    for _ in 0..horizon {
        points
            .par_iter_mut()
            .zip(actions.par_iter_mut())
            .zip(mono.par_iter_mut())
            .with_min_len(1024)
            .for_each(|((x, s), m)| {
                *s += x.r.cos();
                *m = mul(jacobian(&p, *x), *m);
                rescale(m);
                *x = step(&p, *x);
            });
        weights
            .par_iter_mut()
            .zip(mono.par_iter())
            .zip(ensemble.weights.par_iter().zip(dp2.par_iter()))
            .with_min_len(1024)
            .for_each(|((w, m), (&w0, &dp2))| {
                let g = if m[0][1] == 0.0 { f64::INFINITY } else { -m[0][0] / m[0][1] };
                let d = (1.0 + (g / k) * (g / k)).sqrt();
                *w = if d.is_finite() {
                    w0 / d * (dp2 * inv_width2 * (1.0 - 1.0 / (d * d))).exp()
                } else {
                    0.0
                };
            });
        let total: CompensatedSum = weights.iter().copied().collect();
        let total = total.value();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Numerical("second-order weights degenerate".into()));
        }
        let normalized: Vec<f64> = weights.iter().map(|w| w / total).collect();
        for (v, &s) in values.iter_mut().zip(sigmas) {
            v.push(msc_from_samples(&actions, &normalized, s)?);
        }
    }
    Ok(sigmas
        .iter()
        .zip(values)
        .map(|(&s, v)| finish(s, Order::Second, v))
        .collect())
}

/// Second-order series for one perturbation.
pub fn msc_second_order_series(
    ensemble: &Ensemble,
    params: &MapParams,
    sigma: f64,
    horizon: u64,
    k: f64,
) -> Result<SemiclassicalSeries> {
    Ok(msc_second_order_multi(ensemble, params, &[sigma], horizon, k)?.remove(0))
}

/// Default validity floor on the quantum echo for error averages.
pub const DEFAULT_ERROR_FLOOR: f64 = 1e-2;

/// Mean of `(M_sc(t) − M(t))/σ` over the times with `M(t) > floor`.
pub fn avg_scaled_error(quantum: &[f64], semiclassical: &[f64], sigma: f64, floor: f64) -> Result<f64> {
    if quantum.len() != semiclassical.len() {
        return Err(arg("quantum and semiclassical series differ in length"));
    }
    if !(sigma > 0.0) {
        return Err(arg("scaled error needs σ > 0"));
    }
    let diffs: Vec<f64> = quantum
        .iter()
        .zip(semiclassical)
        .filter(|(q, _)| **q > floor)
        .map(|(q, s)| (s - q) / sigma)
        .collect();
    crate::numerics::mean(&diffs)
        .ok_or_else(|| Error::Undefined(format!("no time with M(t) > {floor}")))
}

/// Mean of `|M_sc(t) − M(t)|` over the first `t_max + 1` times with
/// `M(t) > floor`.
pub fn mean_abs_error(quantum: &[f64], semiclassical: &[f64], floor: f64, t_max: usize) -> Result<f64> {
    let diffs: Vec<f64> = quantum
        .iter()
        .zip(semiclassical)
        .take(t_max + 1)
        .filter(|(q, _)| **q > floor)
        .map(|(q, s)| (s - q).abs())
        .collect();
    crate::numerics::mean(&diffs)
        .ok_or_else(|| Error::Undefined(format!("no time with M(t) > {floor}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{evolve_actions, sample_wavepacket, Binning, DEFAULT_SAMPLE_CAP};
    use crate::TWO_PI;

    fn packet(n: usize, k: f64, seed: u64) -> Ensemble {
        let spec = WavePacketSpec::with_k(2.2, 3.0, TWO_PI / 4096.0, k).unwrap();
        sample_wavepacket(&spec, n, seed).unwrap()
    }

    #[test]
    fn zero_perturbation_is_exactly_one() {
        let d = ActionDistribution::new(3, vec![0.1, 5.0, -2.0], vec![1.0; 3], Binning::default()).unwrap();
        assert_eq!(msc_direct(&d, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn opposite_phases_cancel() {
        let sigma = 0.37;
        let d = ActionDistribution::new(1, vec![0.0, std::f64::consts::PI / sigma], vec![1.0, 1.0], Binning::default())
            .unwrap();
        assert!(msc_direct(&d, sigma).unwrap() < 1e-30);
    }

    #[test]
    fn empty_samples_rejected() {
        assert!(msc_from_samples(&[], &[], 0.1).is_err());
    }

    #[test]
    fn first_order_equals_direct_on_evolved_actions() {
        let e = packet(3000, 1.0, 1);
        let m = MapParams::kick_first(1.5).unwrap();
        let series = msc_first_order_series(&e, &m, 0.3, 60).unwrap();
        let times: Vec<u64> = (0..=60).collect();
        let d = evolve_actions(&e, &m, &times, Binning::default(), DEFAULT_SAMPLE_CAP).unwrap();
        for (t, dist) in d.iter().enumerate() {
            assert_eq!(series.values[t], msc_direct(dist, 0.3).unwrap());
        }
    }

    #[test]
    fn single_trajectory_never_decays() {
        let e = Ensemble::from_points(vec![PhasePoint::new(2.2, 3.0)], None).unwrap();
        let m = MapParams::kick_first(3.0).unwrap();
        let s = msc_first_order_series(&e, &m, 2.0, 100).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn large_perturbation_stays_non_negative() {
        let e = packet(500, 1.0, 2);
        let m = MapParams::kick_first(3.0).unwrap();
        let s = msc_first_order_series(&e, &m, 50.0, 200).unwrap();
        assert!(s.values.iter().all(|v| *v >= 0.0 && *v <= 1.0 + 1e-12));
        let tail = &s.values[100..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!(mean < 10.0 / 500.0, "{mean}");
    }

    #[test]
    fn d_factor_limits() {
        let m = MapParams::kick_first(3.0).unwrap();
        let d = d_factor(&m, 2.2, 3.0, 20, f64::INFINITY, DerivativeScheme::Tangent).unwrap();
        assert_eq!(d.d, 1.0);
        // Free rotation: r_t = r0 + t p0, so ∂p_s/∂r̃₀ = −1/t.
        let free = MapParams::kick_first(0.0).unwrap();
        let d = d_factor(&free, 2.2, 3.0, 10, 1.0, DerivativeScheme::Tangent).unwrap();
        assert!((d.dps_dr0 + 0.1).abs() < 1e-14);
        assert!(d.d >= 1.0);
        assert!(d_factor(&m, 2.2, 3.0, 0, 1.0, DerivativeScheme::Tangent).is_err());
    }

    #[test]
    fn finite_difference_agrees_with_tangent_at_short_times() {
        let m = MapParams::kick_first(3.0).unwrap();
        for t in [1, 3, 6] {
            let a = dps_dr0(&m, 2.2, 3.0, t, DerivativeScheme::Tangent).unwrap();
            let b = dps_dr0(&m, 2.2, 3.0, t, DerivativeScheme::CentralDifference).unwrap();
            assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn finite_difference_refuses_long_chaotic_orbits() {
        let m = MapParams::kick_first(7.0).unwrap();
        let r = dps_dr0(&m, 2.2, 3.0, 60, DerivativeScheme::CentralDifference);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }

    /// Cylinder action `Σ [(r_{n+1} − r_n)²/2 − K cos r_n]` of the kick-first
    /// orbit, the generating function with `p₀ = −∂S/∂r₀`.
    fn generating_action(k: f64, r0: f64, p0: f64, t: u64) -> (f64, f64) {
        let (mut r, mut p, mut s) = (r0, p0, 0.0);
        for _ in 0..t {
            let v = k * r.cos();
            p += k * r.sin();
            let r1 = r + p;
            s += 0.5 * (r1 - r) * (r1 - r) - v;
            r = r1;
        }
        (r, s)
    }

    /// Initial momentum reaching `target` from `r0` in `t` steps (secant).
    fn shoot(k: f64, r0: f64, guess: f64, target: f64, t: u64) -> f64 {
        let f = |p: f64| generating_action(k, r0, p, t).0 - target;
        let (mut a, mut b) = (guess, guess + 1e-9);
        for _ in 0..100 {
            let (fa, fb) = (f(a), f(b));
            if fb == fa {
                break;
            }
            let c = b - fb * (b - a) / (fb - fa);
            a = b;
            b = c;
            if (b - a).abs() < 1e-15 {
                break;
            }
        }
        b
    }

    #[test]
    fn d_factor_matches_generating_function_curvature() {
        let (kk, r0, p0, t, k) = (3.0, 2.2, 3.0, 8u64, 1.0);
        let m = MapParams::kick_first(kk).unwrap();
        let target = generating_action(kk, r0, p0, t).0;
        let h = 1e-4;
        let offsets = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let actions: Vec<f64> = offsets
            .iter()
            .map(|&o| {
                let p = shoot(kk, r0 + o * h, p0, target, t);
                generating_action(kk, r0 + o * h, p, t).1
            })
            .collect();
        // Least-squares quadratic on symmetric offsets: curvature from the
        // second-difference weights (2, −1, −2, −1, 2)/14.
        let c2: f64 = [2.0, -1.0, -2.0, -1.0, 2.0].iter().zip(&actions).map(|(w, s)| w * s).sum::<f64>()
            / (14.0 * h * h);
        let oracle = (1.0 + (2.0 * c2 / k).powi(2)).sqrt();
        let d = d_factor(&m, r0, p0, t, k, DerivativeScheme::Tangent).unwrap();
        assert!((d.d - oracle).abs() < 1e-2 * oracle, "{} vs {oracle}", d.d);
    }

    #[test]
    fn second_order_trivial_cases() {
        let e = packet(400, 1.0, 3);
        let m = MapParams::kick_first(2.0).unwrap();
        let s = msc_second_order_series(&e, &m, 0.0, 50, 1.0).unwrap();
        assert!(s.values.iter().all(|v| *v == 1.0));
        let spec = WavePacketSpec::with_k(2.2, 3.0, 0.01, 1.0).unwrap();
        let one = sample_wavepacket(&spec, 1, 4).unwrap();
        let s = msc_second_order_series(&one, &m, 1.5, 50, 1.0).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let disc = crate::ensembles::sample_disc(PhasePoint::new(1.0, 1.0), 0.1, 10, 1).unwrap();
        assert!(msc_second_order_series(&disc, &m, 0.1, 5, 1.0).is_err());
    }

    #[test]
    fn narrow_packets_make_orders_agree() {
        let e = packet(5000, 50.0, 5);
        let m = MapParams::kick_first(3.0).unwrap();
        let a = msc_first_order_series(&e, &m, 0.5, 100).unwrap();
        let b = msc_second_order_series(&e, &m, 0.5, 100, 50.0).unwrap();
        let worst = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-3, "max difference {worst}");
    }

    #[test]
    fn scaled_error_cases() {
        let q = vec![1.0, 0.8, 0.5, 0.005];
        assert_eq!(avg_scaled_error(&q, &q, 0.1, 0.01).unwrap(), 0.0);
        let shifted: Vec<f64> = q.iter().map(|v| v + 0.02).collect();
        assert!((avg_scaled_error(&q, &shifted, 0.1, 0.01).unwrap() - 0.2).abs() < 1e-12);
        assert!(matches!(avg_scaled_error(&[0.001], &[0.0], 0.1, 0.01), Err(Error::Undefined(_))));
    }

    #[test]
    fn revival_detection() {
        assert_eq!(detect_revival(&[1.0, 0.5, 0.01, 0.2, 0.6, 0.1]), Some(4));
        assert_eq!(detect_revival(&[1.0, 0.5, 0.2, 0.6]), None);
    }
}
