//! Frequency relation `ln(−ln|F(z)|)` versus `ln z` of an action density.

use crate::ensembles::ActionDistribution;
use crate::error::{arg, Error, Result};
use crate::numerics::fit_line;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Frequencies with `ln(−ln|F|)` at or above this are not "efficient".
pub const EFFICIENT_LIMIT: f64 = 1.0;
/// Number of leading efficient frequencies used in a fit.
pub const DEFAULT_N_FREQ: usize = 4;
/// Zero-padding factor applied before the DFT (rounded up to a power of two).
pub const DEFAULT_PAD_FACTOR: usize = 4;

/// Sampled characteristic-function relation of a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRelation {
    /// Positive physical frequencies `z` (units of 1/s) with `0 < |F(z)| < 1`.
    pub freqs: Vec<f64>,
    pub logz: Vec<f64>,
    /// `ln(−ln|F(z)|)`.
    pub y: Vec<f64>,
    /// Indices into `freqs` of the efficient frequencies, ascending.
    pub efficient: Vec<usize>,
    /// Uniform spacing of the resampled density (`0` for synthetic input).
    pub ds: f64,
    /// Frequency spacing `2π/(n_pad·ds)`; index-based frequencies `k`
    /// relate to physical ones by `z = k·dz`.
    pub dz: f64,
    /// Set when the density is a point mass (`|F| ≡ 1`).
    pub degenerate: bool,
}

impl SpectrumRelation {
    /// Relation from given `(z, ln(−ln|F|))` pairs.
    pub fn from_pairs(freqs: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if freqs.len() != y.len() {
            return Err(arg("frequencies and values differ in length"));
        }
        if freqs.iter().any(|z| !(*z > 0.0)) || y.iter().any(|v| !v.is_finite()) {
            return Err(arg("frequencies must be positive and values finite"));
        }
        let logz = freqs.iter().map(|z| z.ln()).collect();
        let efficient = (0..y.len()).filter(|&i| y[i] < EFFICIENT_LIMIT).collect();
        Ok(Self { freqs, logz, y, efficient, ds: 0.0, dz: 0.0, degenerate: false })
    }
}

/// Spectrum of an action distribution with the default padding.
pub fn spectrum(dist: &ActionDistribution) -> Result<SpectrumRelation> {
    spectrum_with_padding(dist, DEFAULT_PAD_FACTOR)
}

/// Spectrum of the centred histogram density.
///
/// The histogram is resampled onto a uniform grid with the smallest bin
/// width as spacing, zero-padded to a power of two at least `pad` times its
/// length and transformed; `|F(z_k)| = |Σ_j p_j ds e^{−i z_k s_j}|` with
/// `z_k = 2πk/(n_pad ds)`. The spacing is recorded so fitted widths refer to
/// physical frequencies and are invariant under grid refinement.
pub fn spectrum_with_padding(dist: &ActionDistribution, pad: usize) -> Result<SpectrumRelation> {
    if pad == 0 {
        return Err(arg("padding factor must be at least 1"));
    }
    let first = dist.samples[0];
    if dist.samples.iter().all(|&s| s == first) {
        return Ok(SpectrumRelation {
            freqs: vec![],
            logz: vec![],
            y: vec![],
            efficient: vec![],
            ds: 0.0,
            dz: 0.0,
            degenerate: true,
        });
    }
    let h = &dist.histogram;
    let widths = h.widths();
    let ds = widths.iter().copied().fold(f64::INFINITY, f64::min);
    let lo = h.edges[0];
    let hi = *h.edges.last().expect("histogram has edges");
    let n = (((hi - lo) / ds).round() as usize).max(1);
    let mut grid = Vec::with_capacity(n);
    let mut bin = 0;
    for j in 0..n {
        let s = lo + (j as f64 + 0.5) * ds;
        while bin + 1 < h.density.len() && s >= h.edges[bin + 1] {
            bin += 1;
        }
        grid.push(h.density[bin] * ds);
    }
    let n_pad = (n * pad).next_power_of_two();
    let mut buf: Vec<Complex64> = grid.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(n_pad, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n_pad).process(&mut buf);
    let mass: f64 = grid.iter().sum();
    let dz = crate::TWO_PI / (n_pad as f64 * ds);
    let (mut freqs, mut y) = (Vec::new(), Vec::new());
    for (k, f) in buf.iter().enumerate().take(n_pad / 2 + 1).skip(1) {
        let modulus = f.norm() / mass;
        if modulus > 0.0 && modulus < 1.0 {
            let v = (-modulus.ln()).ln();
            if v.is_finite() {
                freqs.push(k as f64 * dz);
                y.push(v);
            }
        }
    }
    let mut rel = SpectrumRelation::from_pairs(freqs, y)?;
    rel.ds = ds;
    rel.dz = dz;
    Ok(rel)
}

/// Line fit `y = η ln z + ln D_L` over leading efficient frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyFit {
    pub eta: f64,
    pub dl: f64,
    pub n_freq: usize,
    /// RMS residual of the line.
    pub residual: f64,
    /// Fitted intercept (`ln D_L` for physical frequencies).
    pub intercept: f64,
    /// Frequency spacing of the source spectrum; the intercept for
    /// index-based frequencies is `intercept + η ln dz`.
    pub dz: f64,
}

/// Fits `(η, D_L)` through the first `n_freq` efficient nonzero frequencies.
pub fn fit_eta_dl(rel: &SpectrumRelation, n_freq: usize) -> Result<LevyFit> {
    if rel.degenerate {
        return Err(Error::FitInfeasible("degenerate spectrum (point-mass density)".into()));
    }
    if n_freq < 2 || rel.efficient.len() < n_freq {
        return Err(Error::FitInfeasible(format!(
            "{} efficient frequencies available, {n_freq} requested",
            rel.efficient.len()
        )));
    }
    let idx = &rel.efficient[..n_freq];
    let x: Vec<f64> = idx.iter().map(|&i| rel.logz[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| rel.y[i]).collect();
    let line = fit_line(&x, &y)?;
    Ok(LevyFit {
        eta: line.slope,
        dl: line.intercept.exp(),
        n_freq,
        residual: line.rms,
        intercept: line.intercept,
        dz: rel.dz,
    })
}

/// Linearity metric `L_v`: mean squared residual to the fitted line over the
/// subset, divided by the mean distance between adjacent subset points in
/// the `(ln z, y)` plane.
pub fn linearity_metric(rel: &SpectrumRelation, subset: &[usize]) -> Result<f64> {
    if subset.len() < 3 {
        return Err(arg("linearity metric needs at least three frequencies"));
    }
    if subset.iter().any(|&i| i >= rel.y.len()) {
        return Err(arg("frequency index out of range"));
    }
    let x: Vec<f64> = subset.iter().map(|&i| rel.logz[i]).collect();
    let y: Vec<f64> = subset.iter().map(|&i| rel.y[i]).collect();
    let line = fit_line(&x, &y)?;
    let n = x.len() as f64;
    let numerator = x.iter().zip(&y).map(|(a, b)| (line.eval(*a) - b).powi(2)).sum::<f64>() / n;
    let spacing = x
        .windows(2)
        .zip(y.windows(2))
        .map(|(a, b)| (a[1] - a[0]).hypot(b[1] - b[0]))
        .sum::<f64>()
        / (n - 1.0);
    if spacing == 0.0 {
        return Err(Error::Domain("adjacent frequencies coincide".into()));
    }
    Ok(numerator / spacing)
}
