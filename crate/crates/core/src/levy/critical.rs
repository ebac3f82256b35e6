//! Monotonicity of `M_sc(η) = exp(−2σ^η D_L(η))` and its critical points.
//!
//! Writing `L = ln σ`, the exponent `f(η) = σ^η D_L(η)` has derivative
//! `f'(η) = σ^η g(η)` with
//!
//! * exponential model `D_L = c + a e^{bη}`: `g = cL + a(b + L) e^{bη}`;
//! * linear model `D_L = aη + b`: `g = a + bL + aLη`.
//!
//! `g` is monotone in `η`, so `M_sc` has at most one turning point on
//! `(0, ∞)`, and it exists exactly when `g(0⁺)` and `g(∞)` differ in sign.
//! `M_sc` increases where `g < 0`.

use super::lm::{DlModel, ModelFitExp, ModelFitLin};
use crate::error::{arg, Error, Result};
use serde::{Deserialize, Serialize};

/// Monotonicity of `M_sc` as a function of `η ∈ (0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Increasing,
    Decreasing,
    DecreasingThenIncreasing,
    IncreasingThenDecreasing,
    /// `D_L σ^η` independent of `η` (degenerate parameters).
    Constant,
}

impl Regime {
    fn from_signs(g0: f64, ginf: f64) -> Self {
        match (sign(g0), sign(ginf)) {
            (1, -1) => Regime::DecreasingThenIncreasing,
            (-1, 1) => Regime::IncreasingThenDecreasing,
            (1, _) | (0, 1) => Regime::Decreasing,
            (-1, _) | (0, -1) => Regime::Increasing,
            _ => Regime::Constant,
        }
    }

    /// Whether the regime has an interior turning point.
    pub fn has_turning_point(&self) -> bool {
        matches!(self, Regime::DecreasingThenIncreasing | Regime::IncreasingThenDecreasing)
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Critical-point analysis at one perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalEta {
    /// Turning point of `M_sc(η)` on `(0, ∞)`, if any.
    pub eta_star: Option<f64>,
    /// Value of the closed-form root even when it lies outside `(0, ∞)`.
    pub root: Option<f64>,
    /// Maximal σ-interval around the given σ on which the turning point
    /// exists.
    pub sigma_bounds: Option<(f64, f64)>,
    /// Extrema `σ₁ ≤ σ₂` of `dη*/dσ` (exponential model only).
    pub transitions: Option<(f64, f64)>,
    pub regime: Regime,
}

fn check_sigma(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(arg(format!("σ must be positive, got {sigma}")));
    }
    if sigma == 1.0 {
        return Err(arg("σ = 1 is singular (ln σ = 0)"));
    }
    Ok(sigma.ln())
}

/// `(g(0), g(∞))` of the exponential model, up to positive factors.
fn exp_end_signs(a: f64, b: f64, c: f64, l: f64) -> (f64, f64) {
    let g0 = c * l + a * (b + l);
    let ginf = if b > 0.0 && a * (b + l) != 0.0 {
        a * (b + l)
    } else if b == 0.0 {
        g0
    } else {
        c * l
    };
    (g0, ginf)
}

fn exp_exists(a: f64, b: f64, c: f64, l: f64) -> bool {
    let (g0, ginf) = exp_end_signs(a, b, c, l);
    sign(g0) * sign(ginf) == -1
}

fn lin_root(a: f64, b: f64, l: f64) -> f64 {
    -1.0 / l - b / a
}

fn lin_exists(a: f64, b: f64, l: f64) -> bool {
    l != 0.0 && lin_root(a, b, l) > 0.0
}

/// Union of σ-intervals on which `exists(ln σ)` holds, from the points in
/// `ln σ` where the existence test can change.
fn intervals(mut breaks: Vec<f64>, exists: impl Fn(f64) -> bool) -> Vec<(f64, f64)> {
    breaks.retain(|v| v.is_finite());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut probes: Vec<(f64, f64, f64)> = Vec::new(); // (lo, hi, probe) in ln σ
    let mut lo = f64::NEG_INFINITY;
    for &b in &breaks {
        let mid = if lo.is_finite() { 0.5 * (lo + b) } else { b - 1.0 };
        probes.push((lo, b, mid));
        probes.push((b, b, b));
        lo = b;
    }
    probes.push((lo, f64::INFINITY, if lo.is_finite() { lo + 1.0 } else { 0.5 }));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for (l, h, probe) in probes {
        if exists(probe) {
            open.get_or_insert(l);
            let _ = h;
        } else if let Some(start) = open.take() {
            out.push((start.exp(), l.exp()));
        }
    }
    if let Some(start) = open {
        out.push((start.exp(), f64::INFINITY));
    }
    out
}

/// σ-intervals on which the exponential model has a turning point.
pub fn existence_intervals_exp(a: f64, b: f64, c: f64) -> Vec<(f64, f64)> {
    let mut breaks = vec![0.0, -b];
    if a + c != 0.0 {
        breaks.push(-a * b / (a + c));
    }
    intervals(breaks, |l| l != 0.0 && exp_exists(a, b, c, l))
}

/// σ-intervals on which the linear model has a turning point.
pub fn existence_intervals_lin(a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut breaks = vec![0.0];
    if b != 0.0 {
        breaks.push(-a / b);
    }
    intervals(breaks, |l| a != 0.0 && lin_exists(a, b, l))
}

fn containing(ints: &[(f64, f64)], sigma: f64) -> Option<(f64, f64)> {
    ints.iter().copied().find(|(lo, hi)| *lo < sigma && sigma < *hi)
}

/// Extrema of `dη*/dσ`: `σ₁,₂ = exp{[−(b + 2) ∓ √(b² + 4)]/2}`.
pub fn transition_sigmas(b: f64) -> (f64, f64) {
    let root = (b * b + 4.0).sqrt();
    (((-(b + 2.0) - root) / 2.0).exp(), ((-(b + 2.0) + root) / 2.0).exp())
}

/// Critical analysis of the exponential width model at `σ`.
pub fn critical_eta_exp(fit: &ModelFitExp, sigma: f64) -> Result<CriticalEta> {
    let l = check_sigma(sigma)?;
    let (a, b, c) = (fit.a, fit.b, fit.c);
    let (g0, ginf) = exp_end_signs(a, b, c, l);
    let regime = Regime::from_signs(g0, ginf);
    let arg_log = -a * (b + l) / (c * l);
    let root = (b != 0.0 && arg_log > 0.0 && arg_log.is_finite()).then(|| -arg_log.ln() / b);
    let eta_star = if regime.has_turning_point() { root } else { None };
    let sigma_bounds = eta_star.and_then(|_| containing(&existence_intervals_exp(a, b, c), sigma));
    Ok(CriticalEta {
        eta_star,
        root,
        sigma_bounds,
        transitions: Some(transition_sigmas(b)),
        regime,
    })
}

/// Critical analysis of the linear width model at `σ`.
pub fn critical_eta_lin(fit: &ModelFitLin, sigma: f64) -> Result<CriticalEta> {
    let l = check_sigma(sigma)?;
    let (a, b) = (fit.a, fit.b);
    if a == 0.0 {
        return Err(Error::Domain("constant width model (a = 0) has no critical value".into()));
    }
    let root = lin_root(a, b, l);
    let g0 = a + b * l;
    let slope = a * l;
    let regime = if root > 0.0 {
        Regime::from_signs(g0, slope)
    } else {
        Regime::from_signs(slope, slope)
    };
    let eta_star = (root > 0.0).then_some(root);
    let sigma_bounds = eta_star.and_then(|_| containing(&existence_intervals_lin(a, b), sigma));
    Ok(CriticalEta { eta_star, root: Some(root), sigma_bounds, transitions: None, regime })
}

/// `dη*/dσ = 1/[(b + ln σ)(ln σ)σ]` for the exponential model.
pub fn eta_star_sensitivity(fit: &ModelFitExp, sigma: f64) -> Result<f64> {
    let l = check_sigma(sigma).map_err(|_| Error::Domain("dη*/dσ is singular at σ = 1".into()))?;
    if fit.b + l == 0.0 {
        return Err(Error::Domain("dη*/dσ is singular where b + ln σ = 0".into()));
    }
    if critical_eta_exp(fit, sigma)?.eta_star.is_none() {
        return Err(Error::Undefined(format!("no critical η at σ = {sigma}")));
    }
    Ok(1.0 / ((fit.b + l) * l * sigma))
}

/// First-order change of `M_sc` when `η` moves from `eta0` by `d_eta`:
/// `ΔM ≈ −2σ^η g(η) M_sc(η) Δη`.
pub fn taylor_delta_msc(model: &DlModel, eta0: f64, sigma: f64, d_eta: f64) -> f64 {
    let l = sigma.ln();
    let g = match model {
        DlModel::Exp(m) => m.c * l + m.a * (m.b + l) * (m.b * eta0).exp(),
        DlModel::Lin(m) => m.a + m.b * l + m.a * l * eta0,
    };
    let s = sigma.powf(eta0);
    let msc = (-2.0 * s * model.dl(eta0)).exp();
    -2.0 * s * g * msc * d_eta
}

/// A row of the published monotonicity tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableVerdict {
    /// Whether the table lists the critical value as existing.
    pub eta_exists: bool,
    pub regime: Regime,
}

/// Lookup in the exponential-model table by sign pattern of `(a, b, c)`,
/// σ range and added conditions on `q = (c/a) ln σ`, `u = b + ln σ`.
/// Returns `None` when no row covers the parameters.
pub fn table1_lookup(a: f64, b: f64, c: f64, sigma: f64) -> Option<TableVerdict> {
    use Regime::*;
    let l = sigma.ln();
    let (q, u) = (c / a * l, b + l);
    let v = |eta_exists, regime| Some(TableVerdict { eta_exists, regime });
    let pattern = (sign(a), sign(b), sign(c));
    if l < 0.0 {
        match pattern {
            (1, -1, 1) => v(false, Increasing),
            (-1, -1, 1) if q > u.abs() => v(false, Increasing),
            (-1, -1, 1) if q < u.abs() => v(true, DecreasingThenIncreasing),
            (1, 1, 1) if u < 0.0 => v(false, Increasing),
            (1, 1, 1) if u > 0.0 && q.abs() > u => v(true, IncreasingThenDecreasing),
            (1, 1, -1) if u > 0.0 => v(false, Decreasing),
            (1, 1, -1) if u < 0.0 && q > u.abs() => v(true, DecreasingThenIncreasing),
            _ => None,
        }
    } else if l > 0.0 {
        match pattern {
            (1, 1, 1) => v(false, Decreasing),
            (1, -1, 1) if u > 0.0 => v(false, Decreasing),
            (1, -1, 1) if u < 0.0 && q > u.abs() => v(false, Decreasing),
            (1, -1, 1) if u < 0.0 && q < u.abs() => v(true, IncreasingThenDecreasing),
            (-1, -1, 1) if u < 0.0 => v(false, Decreasing),
            (-1, -1, 1) if u > 0.0 && q.abs() > u => v(false, Decreasing),
            (-1, -1, 1) if u > 0.0 && q.abs() < u => v(true, IncreasingThenDecreasing),
            (1, 1, -1) if q.abs() < u => v(false, Decreasing),
            (1, 1, -1) if q.abs() > u => v(true, IncreasingThenDecreasing),
            _ => None,
        }
    } else {
        None
    }
}

/// Lookup in the linear-model table by signs of `(a, b)`, σ range and the
/// added condition on `a/b + ln σ`.
pub fn table2_lookup(a: f64, b: f64, sigma: f64) -> Option<TableVerdict> {
    use Regime::*;
    let l = sigma.ln();
    let w = a / b + l;
    let v = |eta_exists, regime| Some(TableVerdict { eta_exists, regime });
    match (sign(a), sign(b), l < 0.0, l > 0.0) {
        (1, -1, true, _) => v(true, DecreasingThenIncreasing),
        (-1, 1, true, _) => v(true, IncreasingThenDecreasing),
        (1, -1, _, true) if w < 0.0 => v(true, Decreasing),
        (1, -1, _, true) if w > 0.0 => v(true, IncreasingThenDecreasing),
        (-1, 1, _, true) if w < 0.0 => v(false, Increasing),
        (-1, 1, _, true) if w > 0.0 => v(true, DecreasingThenIncreasing),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Damping;

    fn exp(a: f64, b: f64, c: f64) -> ModelFitExp {
        ModelFitExp { a, b, c, residual: 0.0, converged: true, steps: 0, damping: Damping::default() }
    }

    #[test]
    fn decreasing_row_without_critical_value() {
        let r = critical_eta_exp(&exp(1.0, 1.0, -10.0), 0.5).unwrap();
        assert_eq!(r.regime, Regime::Decreasing);
        assert!(r.eta_star.is_none() && r.sigma_bounds.is_none());
        assert_eq!(table1_lookup(1.0, 1.0, -10.0, 0.5).unwrap().regime, Regime::Decreasing);
    }

    #[test]
    fn increasing_row_without_critical_value() {
        // (−,−,+), σ < 1, (c/a) ln σ > |b + ln σ|.
        let (a, b, c, s): (f64, f64, f64, f64) = (-1.0, -0.5, 3.0, 0.5);
        assert!(c / a * s.ln() > (b + s.ln()).abs());
        let r = critical_eta_exp(&exp(a, b, c), s).unwrap();
        assert_eq!(r.regime, Regime::Increasing);
        assert!(r.eta_star.is_none());
    }

    #[test]
    fn linear_examples() {
        let r = critical_eta_lin(&ModelFitLin { a: -1.0, b: 2.0, residual: 0.0 }, std::f64::consts::E).unwrap();
        assert!((r.eta_star.unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(r.regime, Regime::DecreasingThenIncreasing);
        let r = critical_eta_lin(&ModelFitLin { a: 1.0, b: -2.0, residual: 0.0 }, 0.3).unwrap();
        assert!(r.eta_star.is_some());
        assert_eq!(r.regime, Regime::DecreasingThenIncreasing);
        assert!(critical_eta_lin(&ModelFitLin { a: 1.0, b: -2.0, residual: 0.0 }, 1.0).is_err());
        assert!(critical_eta_lin(&ModelFitLin { a: 0.0, b: 1.0, residual: 0.0 }, 0.5).is_err());
    }

    #[test]
    fn sensitivity_sign_and_singularities() {
        // Pick parameters with a critical point at σ = 0.5, b = 1.
        let (a, b, s) = (1.0, 1.0, 0.5f64);
        let l = s.ln();
        // (+,+,+) with b + L > 0 and |(c/a)L| > b + L.
        let c = 2.0 * (b + l) / l.abs() * a;
        let f = exp(a, b, c);
        assert!(critical_eta_exp(&f, s).unwrap().eta_star.is_some());
        assert!(eta_star_sensitivity(&f, s).unwrap() < 0.0);
        assert!(eta_star_sensitivity(&f, 1.0).is_err());
        let near = eta_star_sensitivity(&exp(1.0, -1.0, 1.0), 1.0 - 1e-9);
        assert!(near.map_or(true, |d| d.abs() > 1e6));
    }

    #[test]
    fn taylor_is_linear_in_the_step() {
        let m = DlModel::Exp(exp(2.0, -1.3, 0.5));
        assert_eq!(taylor_delta_msc(&m, 1.2, 0.3, 0.0), 0.0);
        let one = taylor_delta_msc(&m, 1.2, 0.3, 0.01);
        assert!((taylor_delta_msc(&m, 1.2, 0.3, 0.02) - 2.0 * one).abs() < 1e-15);
        let direct = |eta: f64| (-2.0 * 0.3f64.powf(eta) * m.dl(eta)).exp();
        let fd = direct(1.2 + 1e-3) - direct(1.2);
        assert!((taylor_delta_msc(&m, 1.2, 0.3, 1e-3) - fd).abs() < 0.05 * fd.abs());
    }

    #[test]
    fn transitions_are_ordered() {
        for b in [-3.0, -0.5, 0.0, 1.0, 4.0] {
            let (s1, s2) = transition_sigmas(b);
            assert!(s1 <= s2);
        }
    }
}
