//! Decay-law extraction for `M(t) ≈ exp(−c₀ σ^ν t^α)`: exponent fits,
//! characteristic times, decay times and critical perturbations.
//!
//! Every `ln(−ln M)` clamps `M` to `[floor, 1 − 1e−15]`.

use crate::error::{arg, Error, Result};
use crate::numerics::{fit_line, repeated_moving_average, solve_dense, LineFit};
use serde::{Deserialize, Serialize};

/// Smallest usable echo value.
pub const DEFAULT_FLOOR: f64 = 1e-5;
/// Echo level regarded as having entered saturation.
pub const SATURATION_ENTRY: f64 = 1e-6;
/// Upper clamp of `M` before taking `ln(−ln M)`.
pub const UPPER_CLAMP: f64 = 1.0 - 1e-15;

/// `ln(−ln M)` with `M` clamped to `[floor, 1 − 1e−15]`.
pub fn lnln(m: f64, floor: f64) -> f64 {
    let m = m.clamp(floor, UPPER_CLAMP);
    (-m.ln()).ln()
}

/// Source and selection rule of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    /// Quantum echo, fixed small perturbations.
    Num1,
    /// Quantum echo, longest increasing prefix.
    Num2,
    /// Semiclassical series, fixed small perturbations.
    Semi1,
    /// Semiclassical series, longest increasing prefix.
    Semi2,
}

/// Perturbation-exponent fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuFit {
    pub nu: f64,
    /// Intercept of `ln(−ln M)` versus `ln σ`.
    pub intercept: f64,
    /// Perturbations that entered the fit.
    pub sigmas: Vec<f64>,
    pub method: FitMethod,
}

/// Perturbations used by the fixed-point selection.
pub const NUM1_SIGMAS: [f64; 3] = [0.01, 0.02, 0.03];

/// Fits `ν` as the slope of `ln(−ln M)` versus `ln σ` at fixed time.
///
/// `grid` holds `(σ, M)` pairs. `Num1`/`Semi1` use exactly the
/// perturbations [`NUM1_SIGMAS`]; `Num2`/`Semi2` walk the σ-sorted grid and
/// keep a point while `M > floor` and the next point's `ln(−ln M)` is
/// strictly larger, so the last point of an increasing run never enters.
pub fn fit_nu(grid: &[(f64, f64)], method: FitMethod, floor: f64) -> Result<NuFit> {
    let mut pts: Vec<(f64, f64)> = grid.to_vec();
    if pts.iter().any(|(s, m)| !(*s > 0.0) || !m.is_finite()) {
        return Err(arg("perturbations must be positive and echo values finite"));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let chosen: Vec<(f64, f64)> = match method {
        FitMethod::Num1 | FitMethod::Semi1 => {
            let mut out = Vec::new();
            for target in NUM1_SIGMAS {
                let p = pts
                    .iter()
                    .find(|(s, _)| (s - target).abs() < 1e-12)
                    .ok_or_else(|| Error::FitInfeasible(format!("σ = {target} missing from the grid")))?;
                if p.1 > floor && p.1 < 1.0 {
                    out.push(*p);
                }
            }
            out
        }
        FitMethod::Num2 | FitMethod::Semi2 => {
            let mut out = Vec::new();
            for w in pts.windows(2) {
                let (a, b) = (w[0], w[1]);
                if !(a.1 > floor && a.1 < 1.0) || lnln(b.1, floor) <= lnln(a.1, floor) {
                    break;
                }
                out.push(a);
            }
            out
        }
    };
    if chosen.len() < 2 {
        return Err(Error::FitInfeasible(format!("{} usable perturbations, need 2", chosen.len())));
    }
    let x: Vec<f64> = chosen.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = chosen.iter().map(|p| lnln(p.1, floor)).collect();
    let line = fit_line(&x, &y)?;
    Ok(NuFit {
        nu: line.slope,
        intercept: line.intercept,
        sigmas: chosen.iter().map(|p| p.0).collect(),
        method,
    })
}

/// Joint fit of the decay law over a `(σ, t)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayLawFit {
    pub c0: f64,
    pub nu: f64,
    pub alpha: f64,
    /// `(σ_min, σ_max)` of the points used.
    pub sigma_window: (f64, f64),
    /// `(t_min, t_max)` of the points used.
    pub t_window: (f64, f64),
    pub method: FitMethod,
    /// Points used.
    pub n: usize,
}

/// Least squares of `ln(−ln M) = ln c₀ + ν ln σ + α ln t` over
/// `(σ, t, M)` triples with `floor < M < 1`.
pub fn fit_decay_law(points: &[(f64, f64, f64)], method: FitMethod, floor: f64) -> Result<DecayLawFit> {
    let used: Vec<&(f64, f64, f64)> = points
        .iter()
        .filter(|(s, t, m)| *s > 0.0 && *t > 0.0 && *m > floor && *m < 1.0)
        .collect();
    if used.len() < 3 {
        return Err(Error::FitInfeasible(format!("{} usable points, need 3", used.len())));
    }
    let n = used.len() as f64;
    let rows: Vec<[f64; 3]> = used.iter().map(|(s, t, _)| [1.0, s.ln(), t.ln()]).collect();
    let y: Vec<f64> = used.iter().map(|(_, _, m)| lnln(*m, floor)).collect();
    // Centre the regressors for conditioning.
    let mx = [1.0, rows.iter().map(|r| r[1]).sum::<f64>() / n, rows.iter().map(|r| r[2]).sum::<f64>() / n];
    let my = y.iter().sum::<f64>() / n;
    let mut a = vec![vec![0.0; 2]; 2];
    let mut b = vec![0.0; 2];
    for (r, yi) in rows.iter().zip(&y) {
        let v = [r[1] - mx[1], r[2] - mx[2]];
        for i in 0..2 {
            b[i] += v[i] * (yi - my);
            for j in 0..2 {
                a[i][j] += v[i] * v[j];
            }
        }
    }
    let sol = solve_dense(a, b)
        .ok_or_else(|| Error::FitInfeasible("σ and t do not both vary over the points".into()))?;
    let (nu, alpha) = (sol[0], sol[1]);
    let ln_c0 = my - nu * mx[1] - alpha * mx[2];
    let span = |f: &dyn Fn(&(f64, f64, f64)) -> f64| {
        used.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(f(p)), hi.max(f(p))))
    };
    Ok(DecayLawFit {
        c0: ln_c0.exp(),
        nu,
        alpha,
        sigma_window: span(&|p| p.0),
        t_window: span(&|p| p.1),
        method,
        n: used.len(),
    })
}

/// Slope of `ln(−ln M)` versus `ln t` over `t ∈ [t_lo, t_hi]` of one series
/// (`series[t] = M(t)`); the intercept is `ln c₀ + ν ln σ`.
pub fn fit_alpha_window(series: &[f64], t_lo: usize, t_hi: usize, floor: f64) -> Result<LineFit> {
    let t_lo = t_lo.max(1);
    if t_hi >= series.len() || t_hi <= t_lo {
        return Err(arg("time window outside the series"));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = (t_lo..=t_hi)
        .filter(|&t| series[t] < 1.0 && series[t] > floor)
        .map(|t| ((t as f64).ln(), lnln(series[t], floor)))
        .unzip();
    if x.len() < 2 {
        return Err(Error::FitInfeasible("fewer than two usable times in the window".into()));
    }
    fit_line(&x, &y)
}

/// Local decay exponents on consecutive windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaTrace {
    pub step: u64,
    /// Window labels `k·step`; window `k` covers `t ∈ [max(1, k·step), (k+1)·step]`.
    pub times: Vec<u64>,
    pub values: Vec<f64>,
    pub smoothed: bool,
}

/// Span and number of passes of the repeated moving average.
pub const SMOOTH_SPAN: usize = 5;
pub const SMOOTH_PASSES: usize = 20;

/// Local `α(t)`: slope of `ln(−ln M)` versus `ln t` on each window.
/// Windows containing `M ≥ 1` are skipped.
pub fn local_alpha(series: &[f64], step: u64, smooth: bool, floor: f64) -> Result<AlphaTrace> {
    if step < 1 {
        return Err(arg("window step must be positive"));
    }
    let step_us = step as usize;
    if series.len() < 2 * step_us {
        return Err(arg(format!("series of length {} is shorter than two windows", series.len())));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut k = 0usize;
    while (k + 1) * step_us < series.len() {
        let lo = (k * step_us).max(1);
        let hi = (k + 1) * step_us;
        if series[lo..=hi].iter().all(|m| *m < 1.0) {
            let x: Vec<f64> = (lo..=hi).map(|t| (t as f64).ln()).collect();
            let y: Vec<f64> = (lo..=hi).map(|t| lnln(series[t], floor)).collect();
            values.push(fit_line(&x, &y)?.slope);
            times.push((k * step_us) as u64);
        }
        k += 1;
    }
    if smooth {
        values = repeated_moving_average(&values, SMOOTH_SPAN, SMOOTH_PASSES);
    }
    Ok(AlphaTrace { step, times, values, smoothed: smooth })
}

/// `ln c₀(t) = ln(−ln M(t)) − ν ln σ − α(t) ln t` at each window label of
/// the trace; times with `M ≥ 1` or `M ≤ floor` are skipped.
pub fn extract_c0(series: &[f64], sigma: f64, nu: f64, alpha: &AlphaTrace, floor: f64) -> Vec<(u64, f64)> {
    alpha
        .times
        .iter()
        .zip(&alpha.values)
        .filter_map(|(&t, &a)| {
            let m = *series.get(t as usize)?;
            (t >= 1 && m < 1.0 && m > floor)
                .then(|| (t, lnln(m, floor) - nu * sigma.ln() - a * (t as f64).ln()))
        })
        .collect()
}

/// Thresholds of the characteristic-time extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CharTimesConfig {
    /// Window step of the local exponents.
    pub step: u64,
    /// `|α(σ=0.01) − α(σ=0.1)|` gap marking the end of the common decay.
    pub gap_threshold: f64,
    /// Smoothed `α` at or below this marks saturation (or a revival).
    pub saturation_alpha: f64,
    /// Tolerance on successive differences of the smoothed `α`.
    pub inflection_tol: f64,
    /// Look-ahead after `t₁` deciding between the two search procedures.
    pub search_span: u64,
    /// Longest time considered; also the sentinel for undetected times.
    pub horizon: u64,
    /// Smooth the target trace before the search.
    pub smooth: bool,
    /// Below this σ, transition times under `guard_min_t2` are rejected.
    pub guard_sigma: f64,
    pub guard_min_t2: u64,
    /// Echo floor for `ln(−ln M)`.
    pub floor: f64,
}

impl Default for CharTimesConfig {
    fn default() -> Self {
        Self {
            step: 20,
            gap_threshold: 0.05,
            saturation_alpha: 0.2,
            inflection_tol: 0.0005,
            search_span: 2000,
            horizon: 10_000,
            smooth: true,
            guard_sigma: 0.1,
            guard_min_t2: 100,
            floor: DEFAULT_FLOOR,
        }
    }
}

impl CharTimesConfig {
    /// Parameterisation for chaotic-sea initial states: gap threshold 0.01
    /// and floor 1e−4.
    pub fn chaotic_sea() -> Self {
        Self { gap_threshold: 0.01, floor: 1e-4, ..Self::default() }
    }
}

/// Characteristic times of one echo series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharTimes {
    pub t0: u64,
    pub t1: u64,
    pub t2: u64,
    pub t3: u64,
    pub sigma_h: f64,
    pub t_tr: Option<u64>,
    pub t_s: Option<u64>,
    /// 1 when the smoothed exponent rises above its value at `t₁` within
    /// the search span (minimum searched after the maximum), else 2.
    pub procedure: u8,
}

/// First window label where the gap between the two traces exceeds the
/// threshold on that window and the next one; `horizon` if never.
pub fn detect_t0(low: &AlphaTrace, high: &AlphaTrace, threshold: f64, horizon: u64) -> u64 {
    let gaps: Vec<(u64, f64)> = low
        .times
        .iter()
        .zip(&low.values)
        .filter_map(|(t, a)| {
            let j = high.times.iter().position(|u| u == t)?;
            Some((*t, (a - high.values[j]).abs()))
        })
        .collect();
    gaps.windows(2)
        .find(|w| w[0].1 > threshold && w[1].1 > threshold)
        .map_or(horizon, |w| w[0].0)
}

/// Largest perturbation whose echo still follows the common law at `t`:
/// `σ_h = (−ln F∞/c₀)^{1/2} t^{−α₀/2}`.
pub fn sigma_h(f_inf: f64, c0: f64, t: f64, alpha0: f64) -> Result<f64> {
    if !(f_inf > 0.0 && f_inf < 1.0) || !(c0 > 0.0) || !(t > 0.0) {
        return Err(arg("σ_h needs 0 < F∞ < 1, c₀ > 0 and t > 0"));
    }
    Ok((-f_inf.ln() / c0).sqrt() * t.powf(-alpha0 / 2.0))
}

/// `t₁ = t₀` for `σ ≤ σ_h`, else `t₀(σ_h/σ)^{2/α₀}`, rounded to a multiple
/// of `step`.
pub fn initial_time_t1(t0: u64, sigma: f64, sigma_h: f64, alpha0: f64, step: u64) -> u64 {
    if sigma <= sigma_h {
        return t0;
    }
    let t1 = t0 as f64 * (sigma_h / sigma).powf(2.0 / alpha0);
    let step = step.max(1) as f64;
    ((t1 / step).round() * step) as u64
}

/// Transition and saturation times from a local-exponent trace starting
/// at `t₁`: returns `(t2, t3, t_tr, t_s, procedure)`.
///
/// `t_tr` ends the first decline of the trace (the first window whose
/// forward difference is no longer below `−inflection_tol` after one that
/// was), searched after the trace maximum when procedure 1 applies; `t_s`
/// is the first window with `α ≤ saturation_alpha`. The pair becomes
/// `(t_tr, t_s)` when `t_tr < t_s`, otherwise `(t_s, horizon)`.
pub fn transition_times(
    trace: &AlphaTrace,
    t1: u64,
    sigma: f64,
    cfg: &CharTimesConfig,
) -> (u64, u64, Option<u64>, Option<u64>, u8) {
    let v = if cfg.smooth && !trace.smoothed {
        repeated_moving_average(&trace.values, SMOOTH_SPAN, SMOOTH_PASSES)
    } else {
        trace.values.clone()
    };
    let lab = &trace.times;
    let Some(i1) = lab.iter().position(|&t| t >= t1) else {
        return (cfg.horizon, cfg.horizon, None, None, 2);
    };
    let end = t1 + cfg.search_span;
    let in_span = |k: usize| lab[k] <= end;
    let procedure = if (i1 + 1..lab.len()).any(|k| in_span(k) && v[k] > v[i1]) { 1 } else { 2 };
    let start = if procedure == 1 {
        (i1..lab.len())
            .filter(|&k| in_span(k))
            .max_by(|&a, &b| v[a].total_cmp(&v[b]).then(b.cmp(&a)))
            .unwrap_or(i1)
    } else {
        i1
    };
    let decline_end = |from: usize| -> Option<u64> {
        let onset = (from..v.len().saturating_sub(1)).find(|&k| v[k + 1] - v[k] < -cfg.inflection_tol)?;
        (onset + 1..v.len().saturating_sub(1))
            .find(|&j| v[j + 1] - v[j] >= -cfg.inflection_tol)
            .map(|j| lab[j])
    };
    let mut t_tr = decline_end(start);
    if sigma < cfg.guard_sigma {
        if let Some(t) = t_tr {
            if t < cfg.guard_min_t2 {
                t_tr = lab.iter().position(|&u| u >= cfg.guard_min_t2).and_then(decline_end);
            }
        }
    }
    let t_s = (i1..v.len()).find(|&k| v[k] <= cfg.saturation_alpha).map(|k| lab[k]);
    let sat = t_s.unwrap_or(cfg.horizon);
    let (t2, t3) = match t_tr {
        Some(t) if t < sat => (t, sat),
        _ => (sat, cfg.horizon),
    };
    (t2, t3, t_tr, t_s, procedure)
}

/// Full characteristic-time extraction for the series whose local exponents
/// are `target`, given the `σ = 0.01` and `σ = 0.1` traces for `t₀`, the
/// saturation level `F∞` and the common-law constants `(c₀, α₀)`.
#[allow(clippy::too_many_arguments)]
pub fn characteristic_times(
    low: &AlphaTrace,
    high: &AlphaTrace,
    target: &AlphaTrace,
    sigma: f64,
    f_inf: f64,
    c0: f64,
    alpha0: f64,
    cfg: &CharTimesConfig,
) -> Result<CharTimes> {
    let t0 = detect_t0(low, high, cfg.gap_threshold, cfg.horizon);
    let sh = sigma_h(f_inf, c0, t0.max(1) as f64, alpha0)?;
    let t1 = initial_time_t1(t0, sigma, sh, alpha0, cfg.step);
    let (t2, t3, t_tr, t_s, procedure) = transition_times(target, t1, sigma, cfg);
    Ok(CharTimes { t0, t1, t2: t2.max(t1), t3: t3.max(t2.max(t1)), sigma_h: sh, t_tr, t_s, procedure })
}

/// Decay time: first `t` with `M(t) ≤ e^{−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tau {
    /// Linearly interpolated crossing time, or the horizon.
    pub value: f64,
    /// `false` when the series never reaches `e^{−1}` (sentinel value).
    pub reached: bool,
}

pub fn decay_time_tau(series: &[f64]) -> Tau {
    let level = (-1.0f64).exp();
    for t in 1..series.len() {
        if series[t] <= level {
            let (a, b) = (series[t - 1], series[t]);
            let frac = if a > b { (a - level) / (a - b) } else { 1.0 };
            return Tau { value: (t - 1) as f64 + frac, reached: true };
        }
    }
    Tau { value: series.len().saturating_sub(1) as f64, reached: false }
}

/// Least-squares exponential rate `Γ` of `M ≈ A e^{−Γt}` over the times
/// with `m_lo < M(t) < m_hi`.
pub fn fit_exponential_rate(series: &[f64], m_hi: f64, m_lo: f64) -> Result<LineFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = series
        .iter()
        .enumerate()
        .filter(|(_, m)| **m < m_hi && **m > m_lo)
        .map(|(t, m)| (t as f64, -m.ln()))
        .unzip();
    if x.len() < 2 {
        return Err(Error::FitInfeasible("fewer than two times in the rate window".into()));
    }
    fit_line(&x, &y)
}

/// Power law `τ ≈ c_γ σ^{−γ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeScaleFit {
    pub gamma: f64,
    pub c_gamma: f64,
    pub sigma_window: (f64, f64),
}

/// Endpoint rule: the line through the smallest- and largest-σ entries in
/// `[lo, hi]`; interior points are ignored.
pub fn fit_gamma(taus: &[(f64, Tau)], window: (f64, f64)) -> Result<TimeScaleFit> {
    let inside: Vec<&(f64, Tau)> = taus.iter().filter(|(s, _)| *s >= window.0 && *s <= window.1).collect();
    if inside.len() < 2 {
        return Err(Error::FitInfeasible("fewer than two perturbations in the window".into()));
    }
    if inside.iter().any(|(_, t)| !t.reached) {
        return Err(Error::FitInfeasible("decay time not reached inside the window".into()));
    }
    let first = inside.iter().min_by(|a, b| a.0.total_cmp(&b.0)).expect("non-empty");
    let last = inside.iter().max_by(|a, b| a.0.total_cmp(&b.0)).expect("non-empty");
    if first.0 == last.0 || !(first.1.value > 0.0 && last.1.value > 0.0) {
        return Err(Error::FitInfeasible("degenerate endpoints".into()));
    }
    let gamma = -(last.1.value.ln() - first.1.value.ln()) / (last.0.ln() - first.0.ln());
    Ok(TimeScaleFit { gamma, c_gamma: first.1.value * first.0.powf(gamma), sigma_window: (first.0, last.0) })
}

/// Perturbations above this are reported as out of the physical range.
pub const SIGMA_PHYSICAL_MAX: f64 = 10.0;

/// Crossing perturbation of two time scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalSigma {
    pub sigma_crit: f64,
    /// `(c̄₀, ν̄, ᾱ, 2K(E) or c_s)`.
    pub inputs: (f64, f64, f64, f64),
    pub out_of_range: bool,
}

fn critical(sigma: f64, inputs: (f64, f64, f64, f64)) -> Result<CriticalSigma> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Numerical(format!("critical σ is not a positive number: {sigma}")));
    }
    Ok(CriticalSigma { sigma_crit: sigma, inputs, out_of_range: sigma > SIGMA_PHYSICAL_MAX })
}

/// Strong chaos (`τ = (2K(E)σ²)^{−1}`) versus the averaged mixed decay law
/// (`τ = (c̄₀σ^ν̄)^{−1/ᾱ}`): `σ_crit = [c̄₀^{1/ᾱ}/(2K(E))]^{1/(2 − ν̄/ᾱ)}`.
pub fn critical_sigma_chaos(c0: f64, nu: f64, alpha: f64, two_ke: f64) -> Result<CriticalSigma> {
    if !(alpha > 0.0 && c0 > 0.0 && two_ke > 0.0) {
        return Err(arg("critical σ needs ᾱ > 0, c̄₀ > 0 and 2K(E) > 0"));
    }
    let e = 2.0 - nu / alpha;
    if e == 0.0 {
        return Err(Error::Domain("exponent 2 − ν̄/ᾱ vanishes: the time scales never cross".into()));
    }
    critical((c0.powf(1.0 / alpha) / two_ke).powf(1.0 / e), (c0, nu, alpha, two_ke))
}

/// Stable dynamics (`τ = c_s σ^{−1}`) versus the averaged mixed law:
/// `ln σ_crit = (ln c_s + ln c̄₀/ᾱ)/(1 − ν̄/ᾱ)`.
pub fn critical_sigma_stable(c0: f64, nu: f64, alpha: f64, c_s: f64) -> Result<CriticalSigma> {
    if !(alpha > 0.0 && c0 > 0.0 && c_s > 0.0) {
        return Err(arg("critical σ needs ᾱ > 0, c̄₀ > 0 and c_s > 0"));
    }
    let e = 1.0 - nu / alpha;
    if e == 0.0 {
        return Err(Error::Domain("exponent 1 − ν̄/ᾱ vanishes: the time scales never cross".into()));
    }
    critical(((c_s.ln() + c0.ln() / alpha) / e).exp(), (c0, nu, alpha, c_s))
}

/// Strong chaos versus stable dynamics: `(2K(E)σ²)^{−1} = c_s σ^{−1}`.
pub fn critical_sigma_strong_vs_stable(two_ke: f64, c_s: f64) -> Result<CriticalSigma> {
    if !(two_ke > 0.0 && c_s > 0.0) {
        return Err(arg("critical σ needs 2K(E) > 0 and c_s > 0"));
    }
    critical(1.0 / (two_ke * c_s), (f64::NAN, 2.0, 1.0, c_s))
}

/// `c_s = τσ` averaged over a `τ ∝ σ^{−1}` table.
pub fn stable_coefficient(taus: &[(f64, Tau)]) -> Result<f64> {
    let v: Vec<f64> = taus.iter().filter(|(_, t)| t.reached).map(|(s, t)| s * t.value).collect();
    crate::numerics::mean(&v).ok_or_else(|| Error::FitInfeasible("no reached decay times".into()))
}

/// Split of the local decay exponent into stability-index and width parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaPartition {
    /// Window centre (geometric mean of the window times).
    pub t: f64,
    /// Slope of `η ln σ` versus `ln t`.
    pub alpha_eta: f64,
    /// Slope of `ln D_L` versus `ln t`.
    pub alpha_d: f64,
    /// `α_η + α_D`.
    pub alpha: f64,
    /// `A` of `η ≈ A ln t + B`.
    pub a: f64,
    /// `B` of `η ≈ A ln t + B`, the implied `ν`.
    pub nu: f64,
}

/// Partitions on consecutive windows of `window` points of the time-indexed
/// `(t, η, D_L)` fits; points with `D_L ≤ 0` are skipped.
pub fn alpha_partition(fits: &[(f64, f64, f64)], sigma: f64, window: usize) -> Result<Vec<AlphaPartition>> {
    if window < 2 {
        return Err(arg("partition window needs at least two points"));
    }
    let good: Vec<&(f64, f64, f64)> = fits.iter().filter(|(t, _, d)| *d > 0.0 && *t > 0.0).collect();
    let ls = sigma.ln();
    let mut out = Vec::new();
    for chunk in good.chunks(window).filter(|c| c.len() == window) {
        let x: Vec<f64> = chunk.iter().map(|p| p.0.ln()).collect();
        let eta: Vec<f64> = chunk.iter().map(|p| p.1).collect();
        let eta_term: Vec<f64> = eta.iter().map(|e| e * ls).collect();
        let lnd: Vec<f64> = chunk.iter().map(|p| p.2.ln()).collect();
        let ae = fit_line(&x, &eta_term)?.slope;
        let ad = fit_line(&x, &lnd)?.slope;
        let line = fit_line(&x, &eta)?;
        out.push(AlphaPartition {
            t: (x.iter().sum::<f64>() / x.len() as f64).exp(),
            alpha_eta: ae,
            alpha_d: ad,
            alpha: ae + ad,
            a: line.slope,
            nu: line.intercept,
        });
    }
    if out.is_empty() {
        return Err(Error::FitInfeasible("no complete window of usable fits".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(c: f64, nu: f64, alpha: f64, sigma: f64, t: f64) -> f64 {
        (-c * sigma.powf(nu) * t.powf(alpha)).exp()
    }

    #[test]
    fn nu_from_synthetic_grid() {
        let grid: Vec<(f64, f64)> = [0.01, 0.02, 0.03, 0.05].iter().map(|&s| (s, law(0.1, 2.0, 1.0, s, 10.0))).collect();
        for m in [FitMethod::Num1, FitMethod::Num2] {
            let f = fit_nu(&grid, m, DEFAULT_FLOOR).unwrap();
            assert!((f.nu - 2.0).abs() < 1e-9, "{m:?}: {}", f.nu);
        }
        let f = fit_nu(&grid, FitMethod::Num2, DEFAULT_FLOOR).unwrap();
        assert_eq!(f.sigmas, vec![0.01, 0.02, 0.03]);
    }

    #[test]
    fn nu_fails_below_floor() {
        let grid = [(0.01, 1e-9), (0.02, 1e-10), (0.03, 1e-12)];
        assert!(matches!(fit_nu(&grid, FitMethod::Num1, DEFAULT_FLOOR), Err(Error::FitInfeasible(_))));
        assert!(matches!(fit_nu(&grid, FitMethod::Num2, DEFAULT_FLOOR), Err(Error::FitInfeasible(_))));
    }

    #[test]
    fn joint_law_recovered() {
        let mut pts = Vec::new();
        for s in [0.01, 0.03, 0.1] {
            for t in [5.0, 20.0, 80.0] {
                pts.push((s, t, law(0.3, 1.6, 1.2, s, t)));
            }
        }
        let f = fit_decay_law(&pts, FitMethod::Num2, DEFAULT_FLOOR).unwrap();
        assert!((f.c0 - 0.3).abs() < 1e-9 && (f.nu - 1.6).abs() < 1e-9 && (f.alpha - 1.2).abs() < 1e-9);
    }

    #[test]
    fn local_alpha_exact_on_power_law() {
        let series: Vec<f64> = (0..400).map(|t| if t == 0 { 1.0 } else { law(1e-4, 0.0, 1.7, 1.0, t as f64) }).collect();
        let tr = local_alpha(&series, 20, false, DEFAULT_FLOOR).unwrap();
        assert!(tr.values.iter().all(|a| (a - 1.7).abs() < 1e-6));
        assert_eq!(tr.times[0], 0);
    }

    #[test]
    fn local_alpha_skips_unit_windows() {
        let mut series: Vec<f64> = (0..100).map(|t| law(1e-3, 0.0, 1.0, 1.0, t as f64)).collect();
        series[30] = 1.0;
        let tr = local_alpha(&series, 20, false, DEFAULT_FLOOR).unwrap();
        assert!(!tr.times.contains(&20));
    }

    #[test]
    fn c0_trace_is_constant_for_gaussian_law() {
        let sigma: f64 = 0.01;
        let series: Vec<f64> = (0..=200).map(|t| law(2.5, 2.0, 2.0, sigma, t as f64)).collect();
        let tr = local_alpha(&series, 20, false, DEFAULT_FLOOR).unwrap();
        let c = extract_c0(&series, sigma, 2.0, &tr, DEFAULT_FLOOR);
        assert!(!c.is_empty());
        assert!(c.iter().all(|(_, v)| (v - 2.5f64.ln()).abs() < 1e-6));
    }

    #[test]
    fn t0_sentinel_for_identical_traces() {
        let tr = AlphaTrace { step: 20, times: vec![0, 20, 40], values: vec![2.0, 2.0, 1.9], smoothed: false };
        assert_eq!(detect_t0(&tr, &tr, 0.05, 10_000), 10_000);
    }

    #[test]
    fn t1_power_law() {
        let t1 = initial_time_t1(1000, 10.0, 1.0, 3.0, 20);
        let expected = 1000.0 * 10f64.powf(-2.0 / 3.0);
        assert!((t1 as f64 - expected).abs() <= 10.0);
        assert_eq!(initial_time_t1(1000, 0.5, 1.0, 3.0, 20), 1000);
    }

    #[test]
    fn piecewise_law_transition_times() {
        let c = 1e-6;
        let series: Vec<f64> = (0..=4000)
            .map(|t| {
                let t = (t as f64).min(2000.0);
                if t < 100.0 {
                    (-c * t.powi(3)).exp()
                } else {
                    (-c * 1e6 * (t / 100.0).sqrt()).exp()
                }
            })
            .collect();
        let tr = local_alpha(&series, 20, false, DEFAULT_FLOOR).unwrap();
        let cfg = CharTimesConfig { smooth: false, ..CharTimesConfig::default() };
        let (t2, t3, ..) = transition_times(&tr, 20, 0.5, &cfg);
        assert!(t2.abs_diff(100) <= 20, "t2 = {t2}");
        assert!(t3.abs_diff(2000) <= 20, "t3 = {t3}");
    }

    #[test]
    fn tau_and_gamma() {
        let s: Vec<f64> = (0..400).map(|t| (-(t as f64) / 50.0).exp()).collect();
        let tau = decay_time_tau(&s);
        assert!(tau.reached && (tau.value - 50.0).abs() < 1.0);
        assert!(!decay_time_tau(&[1.0; 10]).reached);
        let table: Vec<(f64, Tau)> =
            [0.1, 0.2, 0.5, 1.0].iter().map(|&s| (s, Tau { value: 100.0 / s, reached: true })).collect();
        let g = fit_gamma(&table, (0.0, 10.0)).unwrap();
        assert!((g.gamma - 1.0).abs() < 1e-12 && (g.c_gamma - 100.0).abs() < 1e-9);
        let sentinel = vec![(0.1, Tau { value: 5.0, reached: false }), (0.2, Tau { value: 3.0, reached: true })];
        assert!(fit_gamma(&sentinel, (0.0, 1.0)).is_err());
    }

    #[test]
    fn critical_sigma_values() {
        let a = critical_sigma_chaos(1e-2, 1.5, 2.0, 0.3).unwrap();
        assert!((a.sigma_crit / 0.4152 - 1.0).abs() < 1e-3);
        let b = critical_sigma_strong_vs_stable(0.3, 3.2e3).unwrap();
        assert!((b.sigma_crit / 1.0417e-3 - 1.0).abs() < 1e-3);
        let c = critical_sigma_stable(1e-2, 1.5, 2.0, 3.2e3).unwrap();
        assert!((c.sigma_crit.ln() - 23.0732).abs() < 1e-3 && c.out_of_range);
        assert!(critical_sigma_chaos(1e-2, 4.0, 2.0, 0.3).is_err());
    }

    #[test]
    fn stable_coefficient_recovered() {
        let table: Vec<(f64, Tau)> = [0.01, 0.1].iter().map(|&s| (s, Tau { value: 3200.0 / s, reached: true })).collect();
        assert!((stable_coefficient(&table).unwrap() - 3200.0).abs() < 1e-9);
    }

    #[test]
    fn partition_limits() {
        let fits: Vec<(f64, f64, f64)> = (1..=20).map(|t| (t as f64 * 10.0, 1.3, 0.2 * t as f64 * 10.0)).collect();
        let p = alpha_partition(&fits, 0.1, 5).unwrap();
        assert!(p.iter().all(|q| q.alpha_eta.abs() < 1e-12 && (q.alpha_d - 1.0).abs() < 1e-12));
        let fits: Vec<(f64, f64, f64)> = (1..=20).map(|t| (t as f64, 2.0, (t as f64).powi(2))).collect();
        let p = alpha_partition(&fits, 0.1, 5).unwrap();
        assert!(p.iter().all(|q| (q.alpha - 2.0).abs() < 1e-12));
    }
}
