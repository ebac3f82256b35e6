//! Echo generation and the per-cell decay analysis shared by `decay-fit`
//! and `sweep`.

use crate::config::{DecaySection, EchoSource, ExperimentConfig, NuSelection};
use crate::output::{float, opt_float};
use anyhow::{anyhow, Result};
use fidelity::decayfit::{
    characteristic_times, decay_time_tau, detect_t0, extract_c0, fit_alpha_window, fit_exponential_rate, fit_gamma,
    fit_nu, local_alpha, Tau, NUM1_SIGMAS,
};
use fidelity::dephasing::{msc_first_order_multi, msc_second_order_multi, Order};
use fidelity::ensembles::{sample_wavepacket, WavePacketSpec};
use fidelity::maps::MapParams;
use fidelity::qdyn::{coherent_state, loschmidt_echo_multi, saturation_estimate, TorusGrid};

/// Perturbation of the low-σ reference trace (onset detection).
pub const LOW_SIGMA: f64 = 0.01;
/// Perturbation of the high-σ reference trace (onset detection and `c₀`).
pub const HIGH_SIGMA: f64 = 0.1;

/// Where and how one set of echo series is generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoSetup {
    pub k: f64,
    pub r0: f64,
    pub p0: f64,
    pub n: usize,
    pub shape_k: f64,
    pub horizon: u64,
    pub source: EchoSource,
    /// Ensemble seed (semiclassical source only).
    pub seed: u64,
}

/// Echo series `M(t)`, `t = 0..=horizon`, one per perturbation, plus any
/// diagnostics raised while computing them.
pub fn echo_series(setup: &EchoSetup, cfg: &ExperimentConfig, sigmas: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let grid = TorusGrid::new(setup.n)?;
    let hbar = grid.hbar();
    match setup.source {
        EchoSource::Quantum => {
            let xi = (hbar / setup.shape_k).sqrt();
            let state = coherent_state(&grid, setup.r0, setup.p0, xi)?;
            let series = loschmidt_echo_multi(&state, setup.k, sigmas, setup.horizon)?;
            let notes = series.iter().flat_map(|s| s.notes.iter().map(|n| format!("σ = {}: {n}", s.sigma))).collect();
            Ok((series.into_iter().map(|s| s.values).collect(), notes))
        }
        EchoSource::Semiclassical => {
            let spec = WavePacketSpec::with_k(setup.r0, setup.p0, hbar, setup.shape_k)?;
            let ens = sample_wavepacket(&spec, cfg.semiclassical.samples, setup.seed)?;
            let params = MapParams::kick_first(setup.k)?;
            let series = match cfg.semiclassical.order {
                Order::First => msc_first_order_multi(&ens, &params, sigmas, setup.horizon)?,
                Order::Second => msc_second_order_multi(&ens, &params, sigmas, setup.horizon, setup.shape_k)?,
            };
            let notes = series.iter().flat_map(|s| s.notes.iter().map(|n| format!("σ = {}: {n}", s.sigma))).collect();
            Ok((series.into_iter().map(|s| s.values).collect(), notes))
        }
    }
}

/// Sorted union of the target perturbations and the reference perturbations
/// the analysis needs.
pub fn analysis_sigmas(targets: &[f64], selection: NuSelection) -> Vec<f64> {
    let mut all: Vec<f64> = targets.to_vec();
    all.push(LOW_SIGMA);
    all.push(HIGH_SIGMA);
    if selection == NuSelection::Fixed {
        all.extend(NUM1_SIGMAS);
    }
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

/// Decay-law summary of one echo series.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFit {
    pub sigma: f64,
    /// Window `[t_lo, t_hi]` of the `α` fit.
    pub t_window: (u64, u64),
    /// Common-law constants from the `σ = 0.1` series.
    pub c0: f64,
    pub alpha0: f64,
    pub nu: f64,
    pub alpha: f64,
    pub t0: u64,
    pub t1: u64,
    pub t2: u64,
    pub t3: u64,
    pub sigma_h: f64,
    pub f_inf: f64,
    pub tau: Tau,
    /// Exponential rate over the configured echo band, when fittable.
    pub rate: Option<f64>,
    /// Decay-time power law of the cell's group, filled in after all
    /// cells of the group are done.
    pub gamma: Option<f64>,
}

fn series_for<'a>(sigmas: &[f64], series: &'a [Vec<f64>], sigma: f64) -> Result<&'a [f64]> {
    let i = sigmas
        .iter()
        .position(|s| *s == sigma)
        .ok_or_else(|| anyhow!("no echo series for σ = {sigma}"))?;
    Ok(&series[i])
}

/// Full analysis of the series at `target` given all computed series.
pub fn analyze_cell(
    sigmas: &[f64],
    series: &[Vec<f64>],
    target: f64,
    decay: &DecaySection,
    tail_fraction: f64,
) -> Result<CellFit> {
    let th = &decay.thresholds;
    let m = series_for(sigmas, series, target)?;
    let low_m = series_for(sigmas, series, LOW_SIGMA)?;
    let high_m = series_for(sigmas, series, HIGH_SIGMA)?;
    let horizon = m.len() - 1;

    let low = local_alpha(low_m, th.step, th.smooth, th.floor)?;
    let high = local_alpha(high_m, th.step, th.smooth, th.floor)?;
    let trace = local_alpha(m, th.step, false, th.floor)?;
    let f_inf = saturation_estimate(m, tail_fraction)?;

    let t_nu = decay.nu_time as usize;
    let nu_grid: Vec<(f64, f64)> = sigmas.iter().zip(series).map(|(s, v)| (*s, v[t_nu])).collect();
    let nu = fit_nu(&nu_grid, decay.nu_selection.method(decay.source), th.floor)?.nu;

    let t0 = detect_t0(&low, &high, th.gap_threshold, th.horizon);
    let alpha0_hi = (t0 as usize).max(2 * th.step as usize).min(horizon);
    let alpha0 = fit_alpha_window(high_m, 1, alpha0_hi, th.floor)?.slope;
    let ln_c0: Vec<f64> = extract_c0(high_m, HIGH_SIGMA, nu, &high, th.floor)
        .into_iter()
        .filter(|(t, _)| *t <= decay.c0_t_max)
        .map(|(_, c)| c)
        .collect();
    if ln_c0.is_empty() {
        return Err(anyhow!("no usable c0 points at σ = {HIGH_SIGMA} for t <= {}", decay.c0_t_max));
    }
    let c0 = (ln_c0.iter().sum::<f64>() / ln_c0.len() as f64).exp();

    let ct = characteristic_times(&low, &high, &trace, target, f_inf, c0, alpha0, th)?;
    let lo = ct.t1.max(1);
    let mut hi = ct.t2.min(horizon as u64);
    if hi < lo + 2 {
        hi = (lo + th.step).min(horizon as u64);
    }
    let alpha = fit_alpha_window(m, lo as usize, hi as usize, th.floor)?.slope;
    let rate = fit_exponential_rate(m, decay.rate_window.0, decay.rate_window.1).ok().map(|l| l.slope);
    Ok(CellFit {
        sigma: target,
        t_window: (lo, hi),
        c0,
        alpha0,
        nu,
        alpha,
        t0: ct.t0,
        t1: ct.t1,
        t2: ct.t2,
        t3: ct.t3,
        sigma_h: ct.sigma_h,
        f_inf,
        tau: decay_time_tau(m),
        rate,
        gamma: None,
    })
}

/// Decay-time exponent over the cells of one group, if it can be fitted.
pub fn group_gamma(taus: &[(f64, Tau)], window: Option<(f64, f64)>) -> Option<f64> {
    let window = window.unwrap_or((0.0, f64::MAX));
    fit_gamma(taus, window).ok().map(|g| g.gamma)
}

/// Header of the fit table.
pub const FIT_HEADER: [&str; 24] = [
    "k", "p_center", "n", "sigma", "status", "t_lo", "t_hi", "c0", "nu", "alpha", "alpha0", "t0", "t1", "t2", "t3",
    "sigma_h", "f_inf", "tau", "tau_reached", "rate", "gamma", "cell", "cell_seed", "message",
];

/// Identity of a fit-table row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellKey {
    pub k: f64,
    pub p_center: f64,
    pub n: usize,
    pub sigma: f64,
    pub index: usize,
    /// Ensemble seed for semiclassical cells.
    pub seed: Option<u64>,
}

/// One fit-table row; a failed cell keeps its identity and the message.
pub fn fit_row(key: &CellKey, fit: &Result<CellFit, String>) -> Vec<String> {
    let mut row = vec![float(key.k), float(key.p_center), key.n.to_string(), float(key.sigma)];
    match fit {
        Ok(f) => row.extend([
            "ok".to_string(),
            f.t_window.0.to_string(),
            f.t_window.1.to_string(),
            float(f.c0),
            float(f.nu),
            float(f.alpha),
            float(f.alpha0),
            f.t0.to_string(),
            f.t1.to_string(),
            f.t2.to_string(),
            f.t3.to_string(),
            float(f.sigma_h),
            float(f.f_inf),
            float(f.tau.value),
            f.tau.reached.to_string(),
            opt_float(f.rate),
            opt_float(f.gamma),
        ]),
        Err(_) => {
            row.push("failed".into());
            row.extend(std::iter::repeat_n(String::new(), 16));
        }
    }
    row.push(key.index.to_string());
    row.push(key.seed.map(|s| s.to_string()).unwrap_or_default());
    row.push(fit.as_ref().err().cloned().unwrap_or_default());
    row
}
