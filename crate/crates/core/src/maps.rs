//! Classical standard-map dynamics on the 2π × 2π torus.
//!
//! Two kick orderings are supported:
//!
//! * [`KickOrder::DriftFirst`]: `r' = r + p`, then `p' = p + K sin r'`;
//! * [`KickOrder::KickFirst`]: `p' = p + K sin r`, then `r' = r + p'`.
//!
//! Kick-first is the ordering of the quantum Floquet operator
//! (kick, then free rotation) and is the default. The two orderings generate
//! the same orbits up to a one-step relabelling, see
//! [`kick_first_partner`].
//!
//! Every coordinate is reduced modulo 2π exactly once per half-step.

use crate::error::{arg, Error, Result};
use crate::TWO_PI;
use serde::{Deserialize, Serialize};

/// Ordering of the kick and the free rotation within one map step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KickOrder {
    /// Rotate with the old momentum, then kick at the new angle.
    DriftFirst,
    /// Kick at the old angle, then rotate with the new momentum.
    #[default]
    KickFirst,
}

/// Parameters of the standard map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    /// Stochasticity (kick strength) `K ≥ 0`.
    pub k: f64,
    pub order: KickOrder,
}

impl MapParams {
    pub fn new(k: f64, order: KickOrder) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(arg(format!("kick strength must be finite and >= 0, got {k}")));
        }
        Ok(Self { k, order })
    }

    /// Kick-first map with strength `k`.
    pub fn kick_first(k: f64) -> Result<Self> {
        Self::new(k, KickOrder::KickFirst)
    }

    /// Drift-first map with strength `k`.
    pub fn drift_first(k: f64) -> Result<Self> {
        Self::new(k, KickOrder::DriftFirst)
    }
}

/// Reduces an angle to `[0, 2π)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(TWO_PI);
    // rem_euclid may round tiny negative inputs up to exactly 2π.
    if y >= TWO_PI {
        0.0
    } else {
        y
    }
}

/// A point of the torus, both coordinates in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub r: f64,
    pub p: f64,
}

impl PhasePoint {
    /// Builds a point, reducing both coordinates modulo 2π.
    pub fn new(r: f64, p: f64) -> Self {
        Self { r: wrap(r), p: wrap(p) }
    }
}

/// One iteration of the map.
#[inline]
pub fn step(params: &MapParams, x: PhasePoint) -> PhasePoint {
    match params.order {
        KickOrder::KickFirst => {
            let p = wrap(x.p + params.k * x.r.sin());
            let r = wrap(x.r + p);
            PhasePoint { r, p }
        }
        KickOrder::DriftFirst => {
            let r = wrap(x.r + x.p);
            let p = wrap(x.p + params.k * r.sin());
            PhasePoint { r, p }
        }
    }
}

/// Iterates the map `n` times.
pub fn iterate(params: &MapParams, mut x: PhasePoint, n: u64) -> PhasePoint {
    for _ in 0..n {
        x = step(params, x);
    }
    x
}

/// One-step tangent map in `(r, p)` coordinates: `[[∂r'/∂r, ∂r'/∂p], [∂p'/∂r, ∂p'/∂p]]`.
///
/// The map is area preserving, so the determinant is 1.
pub fn jacobian(params: &MapParams, x: PhasePoint) -> [[f64; 2]; 2] {
    match params.order {
        KickOrder::KickFirst => {
            let kc = params.k * x.r.cos();
            [[1.0 + kc, 1.0], [kc, 1.0]]
        }
        KickOrder::DriftFirst => {
            let kc = params.k * wrap(x.r + x.p).cos();
            [[1.0, 1.0], [kc, 1.0 + kc]]
        }
    }
}

/// Fewest steps for which a Lyapunov estimate is reported.
pub const MIN_LYAPUNOV_STEPS: u64 = 100;

/// Both Lyapunov exponents, in descending order, from two tangent vectors
/// re-orthonormalised by modified Gram–Schmidt after every step.
pub fn lyapunov_spectrum(params: &MapParams, x0: PhasePoint, steps: u64) -> Result<(f64, f64)> {
    if steps < MIN_LYAPUNOV_STEPS {
        return Err(Error::Config(format!(
            "Lyapunov estimate needs at least {MIN_LYAPUNOV_STEPS} steps, got {steps}"
        )));
    }
    let mut x = x0;
    let mut v1 = [1.0, 0.0];
    let mut v2 = [0.0, 1.0];
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..steps {
        let j = jacobian(params, x);
        let apply = |v: [f64; 2]| [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1]];
        let mut w1 = apply(v1);
        let mut w2 = apply(v2);
        let n1 = w1[0].hypot(w1[1]);
        w1 = [w1[0] / n1, w1[1] / n1];
        let proj = w2[0] * w1[0] + w2[1] * w1[1];
        w2 = [w2[0] - proj * w1[0], w2[1] - proj * w1[1]];
        let n2 = w2[0].hypot(w2[1]);
        w2 = [w2[0] / n2, w2[1] / n2];
        s1 += n1.ln();
        s2 += n2.ln();
        v1 = w1;
        v2 = w2;
        x = step(params, x);
    }
    let (l1, l2) = (s1 / steps as f64, s2 / steps as f64);
    Ok(if l1 >= l2 { (l1, l2) } else { (l2, l1) })
}

/// Region whose entry marks escape into the chaotic sea:
/// `|r − r_center| < half_width` and `p > p_threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeRegion {
    pub r_center: f64,
    pub half_width: f64,
    pub p_threshold: f64,
}

impl Default for EscapeRegion {
    fn default() -> Self {
        Self {
            r_center: 2.2,
            half_width: 0.1,
            p_threshold: 2.0,
        }
    }
}

impl EscapeRegion {
    pub fn contains(&self, x: PhasePoint) -> bool {
        (x.r - self.r_center).abs() < self.half_width && x.p > self.p_threshold
    }
}

/// Result of a sticking-time search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum StickOutcome {
    /// First map step (counted from 1) after which a point was inside the
    /// escape region.
    Escaped { step: u64 },
    /// No point entered the escape region within `max_steps`.
    Stuck { max_steps: u64 },
}

impl StickOutcome {
    pub fn escaped(&self) -> bool {
        matches!(self, StickOutcome::Escaped { .. })
    }

    pub fn escape_time(&self) -> Option<u64> {
        match *self {
            StickOutcome::Escaped { step } => Some(step),
            StickOutcome::Stuck { .. } => None,
        }
    }
}

/// Iterates every start point and reports the first step at which *any* of
/// them lies in the escape region.
pub fn sticking_time(
    params: &MapParams,
    start: &[PhasePoint],
    region: &EscapeRegion,
    max_steps: u64,
) -> Result<StickOutcome> {
    if max_steps == 0 {
        return Err(arg("max_steps must be at least 1"));
    }
    if start.is_empty() {
        return Err(arg("sticking time needs at least one start point"));
    }
    if !(0.0..TWO_PI).contains(&region.r_center) {
        return Err(arg(format!("r_center {} outside [0, 2π)", region.r_center)));
    }
    let mut pts = start.to_vec();
    for t in 1..=max_steps {
        let mut hit = false;
        for x in pts.iter_mut() {
            *x = step(params, *x);
            hit |= region.contains(*x);
        }
        if hit {
            return Ok(StickOutcome::Escaped { step: t });
        }
    }
    Ok(StickOutcome::Stuck { max_steps })
}

/// Accumulated action `s(t) = Σ_{t'=0}^{t−1} cos r(t')` along the unperturbed
/// orbit of `x0`, sampled at the ascending `times`.
///
/// The term at `t' = 0` is included and the one at `t' = t` excluded, so
/// `s(0) = 0` and `s(1) = cos r₀`. The perturbed action difference is
/// `ΔS(t) = ε·s(t)`.
pub fn accumulate_action(params: &MapParams, x0: PhasePoint, times: &[u64]) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Err(arg("times must be non-empty"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(arg("times must be ascending"));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut x = x0;
    let mut s = 0.0;
    let mut t = 0u64;
    for &target in times {
        while t < target {
            s += x.r.cos();
            x = step(params, x);
            t += 1;
        }
        out.push(s);
    }
    Ok(out)
}

/// Kick-first start point whose orbit relabels the drift-first orbit of `x`.
///
/// If `(r_n, p_n)` is the drift-first orbit of `x`, the kick-first orbit of
/// the returned point is `(r_{n+1}, p_n)`: the same sequence of angles,
/// shifted by one step, paired with the preceding momenta.
pub fn kick_first_partner(x: PhasePoint) -> PhasePoint {
    PhasePoint::new(x.r + x.p, x.p)
}

/// Point reflection `(r, p) → (2π − r, 2π − p)`, a symmetry of both orderings.
pub fn reflect(x: PhasePoint) -> PhasePoint {
    PhasePoint::new(-x.r, -x.p)
}
