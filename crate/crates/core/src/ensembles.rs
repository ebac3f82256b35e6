//! Classical Monte Carlo ensembles, action distributions `P(s)` and
//! diffusion fits of the accumulated action.
//!
//! Ensembles are either area-uniform discs (for sticking and diffusion
//! studies) or Gaussian ensembles matched to a quantum wave packet. All
//! sampling is driven by a seeded ChaCha20 stream so results are reproducible
//! and independent of thread scheduling.

use crate::error::{arg, Error, Result};
use crate::maps::{step, MapParams, PhasePoint};
use crate::numerics::{fit_line, integrate, CompensatedSum, LineFit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Seeded generator for stream `stream` of master seed `seed`.
///
/// Distinct streams of one seed are statistically independent, which gives
/// every sweep cell its own generator regardless of execution order.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// 64-bit seed for stream `stream` of master seed `seed`, for components
/// that take a plain seed (e.g. one ensemble per sweep cell).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    use rand::RngCore;
    rng_for(seed, stream).next_u64()
}

/// Gaussian wave packet on the torus.
///
/// `k = ħ/ξ²` measures the packet width against the minimal-uncertainty
/// width; `k = 1` is the coherent state of circular shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePacketSpec {
    /// Mean position `r̃₀`.
    pub r0: f64,
    /// Mean momentum `p̃₀`.
    pub p0: f64,
    /// Position dispersion `ξ`.
    pub xi: f64,
    /// Effective Planck constant.
    pub hbar: f64,
}

impl WavePacketSpec {
    pub fn new(r0: f64, p0: f64, xi: f64, hbar: f64) -> Result<Self> {
        if !(xi.is_finite() && xi > 0.0) {
            return Err(arg(format!("dispersion must be positive, got {xi}")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(arg(format!("hbar must be positive, got {hbar}")));
        }
        if !(r0.is_finite() && p0.is_finite()) {
            return Err(arg("packet centre must be finite"));
        }
        Ok(Self { r0, p0, xi, hbar })
    }

    /// Packet with a prescribed shape ratio `k`, i.e. `ξ = √(ħ/k)`.
    pub fn with_k(r0: f64, p0: f64, hbar: f64, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(arg(format!("shape ratio k must be positive, got {k}")));
        }
        Self::new(r0, p0, (hbar / k).sqrt(), hbar)
    }

    /// Shape ratio `k = ħ/ξ²`.
    pub fn k(&self) -> f64 {
        self.hbar / (self.xi * self.xi)
    }

    /// Standard deviation of sampled initial momenta, `ħ/(ξ√2)`.
    pub fn momentum_sd(&self) -> f64 {
        self.hbar / (self.xi * std::f64::consts::SQRT_2)
    }

    /// Standard deviation of sampled initial positions, `ξ/√2`.
    pub fn position_sd(&self) -> f64 {
        self.xi / std::f64::consts::SQRT_2
    }
}

/// How an ensemble was generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Disc { center: PhasePoint, radius: f64 },
    WavePacket { spec: WavePacketSpec },
    Explicit,
}

/// Weighted set of phase points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub points: Vec<PhasePoint>,
    /// Non-negative weights summing to one.
    pub weights: Vec<f64>,
    pub seed: u64,
    pub provenance: Provenance,
}

impl Ensemble {
    /// Builds an ensemble from explicit points and (unnormalised) weights.
    pub fn from_points(points: Vec<PhasePoint>, weights: Option<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(arg("ensemble needs at least one point"));
        }
        let weights = normalize_weights(weights.unwrap_or_else(|| vec![1.0; points.len()]))?;
        if weights.len() != points.len() {
            return Err(arg("weights and points differ in length"));
        }
        Ok(Self {
            points,
            weights,
            seed: 0,
            provenance: Provenance::Explicit,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Weighted centroid (plain, not circular: ensembles are small compared
    /// with the torus).
    pub fn centroid(&self) -> PhasePoint {
        let r: CompensatedSum = self.points.iter().zip(&self.weights).map(|(x, w)| w * x.r).collect();
        let p: CompensatedSum = self.points.iter().zip(&self.weights).map(|(x, w)| w * x.p).collect();
        PhasePoint { r: r.value(), p: p.value() }
    }
}

fn normalize_weights(w: Vec<f64>) -> Result<Vec<f64>> {
    if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(arg("weights must be finite and non-negative"));
    }
    let total: CompensatedSum = w.iter().copied().collect();
    let total = total.value();
    if total <= 0.0 {
        return Err(arg("weights sum to zero"));
    }
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// `n` points distributed uniformly (by area) on the disc of `radius` around
/// `center`, with uniform weights.
pub fn sample_disc(center: PhasePoint, radius: f64, n: usize, seed: u64) -> Result<Ensemble> {
    if n == 0 {
        return Err(arg("sample count must be at least 1"));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(arg(format!("radius must be positive, got {radius}")));
    }
    let mut rng = rng_for(seed, 0);
    let points = (0..n)
        .map(|_| {
            let rho = radius * rng.gen::<f64>().sqrt();
            let theta = 2.0 * PI * rng.gen::<f64>();
            PhasePoint::new(center.r + rho * theta.cos(), center.p + rho * theta.sin())
        })
        .collect();
    Ok(Ensemble {
        points,
        weights: vec![1.0 / n as f64; n],
        seed,
        provenance: Provenance::Disc { center, radius },
    })
}

/// Gaussian ensemble matched to a wave packet: momenta with standard
/// deviation `ħ/(ξ√2)` and positions with standard deviation `ξ/√2`.
pub fn sample_wavepacket(spec: &WavePacketSpec, n: usize, seed: u64) -> Result<Ensemble> {
    if n == 0 {
        return Err(arg("sample count must be at least 1"));
    }
    let mut rng = rng_for(seed, 0);
    let nr = Normal::new(spec.r0, spec.position_sd()).map_err(|e| arg(e.to_string()))?;
    let np = Normal::new(spec.p0, spec.momentum_sd()).map_err(|e| arg(e.to_string()))?;
    let points = (0..n)
        .map(|_| {
            let r = nr.sample(&mut rng);
            let p = np.sample(&mut rng);
            PhasePoint::new(r, p)
        })
        .collect();
    Ok(Ensemble {
        points,
        weights: vec![1.0 / n as f64; n],
        seed,
        provenance: Provenance::WavePacket { spec: *spec },
    })
}

/// Histogram bin-width rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Binning {
    /// Freedman–Diaconis width `2·IQR·n_eff^{−1/3}`.
    #[default]
    FreedmanDiaconis,
    /// Fixed number of equal-width bins spanning the sample range.
    Bins { count: usize },
}

/// Upper bound on the number of histogram bins.
pub const MAX_BINS: usize = 1 << 20;

/// Normalised histogram of a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Strictly increasing bin edges (`density.len() + 1` values).
    pub edges: Vec<f64>,
    /// Density per bin; `Σ density·width = 1`.
    pub density: Vec<f64>,
}

impl Histogram {
    /// Weighted histogram of `samples` (weights must sum to one).
    pub fn build(samples: &[f64], weights: &[f64], binning: Binning) -> Result<Self> {
        if samples.is_empty() || samples.len() != weights.len() {
            return Err(arg("histogram needs matching, non-empty samples and weights"));
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Domain("non-finite sample".into()));
        }
        let spread = hi - lo;
        if spread <= 1e-300 || spread <= 1e-14 * lo.abs().max(hi.abs()) {
            // Point mass: a single unit-width bin centred on the value.
            let c = 0.5 * (lo + hi);
            return Ok(Self {
                edges: vec![c - 0.5, c + 0.5],
                density: vec![1.0],
            });
        }
        let bins = match binning {
            Binning::Bins { count } => count.max(1),
            Binning::FreedmanDiaconis => {
                let n_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
                let iqr = weighted_quantile(samples, weights, 0.75)
                    - weighted_quantile(samples, weights, 0.25);
                let width = if iqr > 0.0 {
                    2.0 * iqr * n_eff.powf(-1.0 / 3.0)
                } else {
                    spread / n_eff.sqrt().ceil()
                };
                (spread / width).ceil() as usize
            }
        }
        .clamp(1, MAX_BINS);
        let width = spread / bins as f64;
        let edges: Vec<f64> = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + i as f64 * width })
            .collect();
        let mut mass = vec![CompensatedSum::new(); bins];
        for (&s, &w) in samples.iter().zip(weights) {
            let i = (((s - lo) / width) as usize).min(bins - 1);
            mass[i].add(w);
        }
        let density = mass
            .iter()
            .zip(edges.windows(2))
            .map(|(m, e)| m.value() / (e[1] - e[0]))
            .collect();
        Ok(Self { edges, density })
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| e[1] - e[0]).collect()
    }

    /// `Σ density·width`.
    pub fn total_mass(&self) -> f64 {
        self.density
            .iter()
            .zip(self.widths())
            .map(|(d, w)| d * w)
            .collect::<CompensatedSum>()
            .value()
    }
}

/// Weighted quantile by linear scan of the sorted samples.
fn weighted_quantile(samples: &[f64], weights: &[f64], q: f64) -> f64 {
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.sort_by(|&a, &b| samples[a].total_cmp(&samples[b]));
    let mut acc = 0.0;
    for &i in &idx {
        acc += weights[i];
        if acc >= q {
            return samples[i];
        }
    }
    samples[*idx.last().expect("non-empty")]
}

/// Empirical action distribution at a fixed time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    pub time: u64,
    /// Raw (uncentred) action samples `s_j(t)`.
    pub samples: Vec<f64>,
    /// Normalised sample weights.
    pub weights: Vec<f64>,
    /// Weighted mean `⟨s⟩`.
    pub mean: f64,
    /// Histogram of the centred samples `s − ⟨s⟩`.
    pub histogram: Histogram,
}

impl ActionDistribution {
    pub fn new(time: u64, samples: Vec<f64>, weights: Vec<f64>, binning: Binning) -> Result<Self> {
        if samples.is_empty() {
            return Err(arg("action distribution needs at least one sample"));
        }
        if samples.len() != weights.len() {
            return Err(arg("samples and weights differ in length"));
        }
        let weights = normalize_weights(weights)?;
        let mean = weighted_mean(&samples, &weights);
        let centred: Vec<f64> = samples.iter().map(|s| s - mean).collect();
        let histogram = Histogram::build(&centred, &weights, binning)?;
        Ok(Self {
            time,
            samples,
            weights,
            mean,
            histogram,
        })
    }

    /// Centred samples `s − ⟨s⟩`.
    pub fn centered(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s - self.mean).collect()
    }

    /// Raw second moment `⟨s²⟩`.
    pub fn second_moment(&self) -> f64 {
        self.samples
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * s * s)
            .collect::<CompensatedSum>()
            .value()
    }

    /// Weighted variance `⟨(s − ⟨s⟩)²⟩`.
    pub fn variance(&self) -> f64 {
        self.samples
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * (s - self.mean) * (s - self.mean))
            .collect::<CompensatedSum>()
            .value()
    }

    /// Weighted union of several distributions at the same time; `masses`
    /// are the relative probability masses of the parts.
    pub fn merge(parts: &[(&ActionDistribution, f64)], binning: Binning) -> Result<Self> {
        let first = parts.first().ok_or_else(|| arg("nothing to merge"))?.0;
        if parts.iter().any(|(d, _)| d.time != first.time) {
            return Err(arg("cannot merge distributions at different times"));
        }
        let mut samples = Vec::new();
        let mut weights = Vec::new();
        for (d, m) in parts {
            samples.extend_from_slice(&d.samples);
            weights.extend(d.weights.iter().map(|w| w * m));
        }
        Self::new(first.time, samples, weights, binning)
    }
}

fn weighted_mean(samples: &[f64], weights: &[f64]) -> f64 {
    samples
        .iter()
        .zip(weights)
        .map(|(s, w)| s * w)
        .collect::<CompensatedSum>()
        .value()
}

/// Members of an ensemble advanced in lock step together with their
/// accumulated actions.
///
/// Stepping is data-parallel over members; each member's arithmetic is
/// independent of the partitioning, so results are bitwise reproducible.
#[derive(Debug, Clone)]
pub struct ActionTracker {
    params: MapParams,
    points: Vec<PhasePoint>,
    actions: Vec<f64>,
    time: u64,
}

impl ActionTracker {
    pub fn new(ensemble: &Ensemble, params: MapParams) -> Self {
        Self {
            params,
            points: ensemble.points.clone(),
            actions: vec![0.0; ensemble.len()],
            time: 0,
        }
    }

    /// Adds `cos r` of every member and applies one map step.
    pub fn advance(&mut self) {
        let params = self.params;
        self.points
            .par_iter_mut()
            .zip(self.actions.par_iter_mut())
            .with_min_len(1024)
            .for_each(|(x, s)| {
                *s += x.r.cos();
                *x = step(&params, *x);
            });
        self.time += 1;
    }

    /// Advances until `time` is reached.
    pub fn advance_to(&mut self, time: u64) {
        while self.time < time {
            self.advance();
        }
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }
}

/// Default cap on `|times|·|points|` for [`evolve_actions`].
pub const DEFAULT_SAMPLE_CAP: usize = 200_000_000;

/// Action distributions of the ensemble at each requested time.
///
/// The returned distributions are reusable for any perturbation strength.
pub fn evolve_actions(
    ensemble: &Ensemble,
    params: &MapParams,
    times: &[u64],
    binning: Binning,
    sample_cap: usize,
) -> Result<Vec<ActionDistribution>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(arg("times must be ascending"));
    }
    let total = times.len().saturating_mul(ensemble.len());
    if total > sample_cap {
        return Err(Error::Resource(format!(
            "{} times × {} members = {total} samples exceeds the cap of {sample_cap}",
            times.len(),
            ensemble.len()
        )));
    }
    let mut tracker = ActionTracker::new(ensemble, *params);
    times
        .iter()
        .map(|&t| {
            tracker.advance_to(t);
            ActionDistribution::new(t, tracker.actions().to_vec(), ensemble.weights.clone(), binning)
        })
        .collect()
}

/// Clip distance from `s = ±1` inside which the analytic initial density is
/// taken as zero.
pub const EDGE_CLIP: f64 = 1e-12;

/// Analytic action density after one kick for a wave-packet ensemble:
///
/// `P(s) = (πξ²)^{−1/2} (1−s²)^{−1/2} exp[−(s−s₀)²/(ξ²(1−s₀²))]`, `s₀ = cos r̃₀`.
///
/// Points with `|s| ≥ 1 − EDGE_CLIP` evaluate to 0.
pub fn initial_ps_analytic(spec: &WavePacketSpec, s_grid: &[f64]) -> Vec<f64> {
    s_grid.iter().map(|&s| initial_density(spec, s)).collect()
}

fn initial_density(spec: &WavePacketSpec, s: f64) -> f64 {
    if s.abs() >= 1.0 - EDGE_CLIP {
        return 0.0;
    }
    let s0 = spec.r0.cos();
    let xi2 = spec.xi * spec.xi;
    let var = xi2 * (1.0 - s0 * s0);
    (PI * xi2).powf(-0.5) * (1.0 - s * s).powf(-0.5) * (-(s - s0) * (s - s0) / var).exp()
}

/// Cumulative distribution of [`initial_ps_analytic`], by adaptive
/// quadrature from the lower edge of the support.
pub fn initial_ps_cdf(spec: &WavePacketSpec, s: f64) -> Result<f64> {
    let lo = -1.0 + EDGE_CLIP;
    let hi = s.min(1.0 - EDGE_CLIP);
    if hi <= lo {
        return Ok(0.0);
    }
    // Start the integral where the Gaussian factor is negligible.
    let s0 = spec.r0.cos();
    let width = spec.xi * (1.0 - s0 * s0).sqrt();
    let start = (s0 - 40.0 * width).max(lo);
    if hi <= start {
        return Ok(0.0);
    }
    integrate(|x| initial_density(spec, x), start, hi, 1e-13, 1e-11, 4000).map(|q| q.value)
}

/// Growth regime of the action second moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionKind {
    Sub,
    Normal,
    Super,
    Ballistic,
}

/// Half-width of the exponent band treated as normal (≈1) or ballistic (≈2).
pub const DIFFUSION_BAND: f64 = 0.05;

/// Power-law fit `⟨s²⟩ ≈ D t^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionFit {
    /// Exponent α (log–log slope).
    pub exponent: f64,
    /// `ln D` (log–log intercept).
    pub intercept: f64,
    pub window: (u64, u64),
    pub kind: DiffusionKind,
    pub line: LineFit,
}

/// Least-squares fit of `ln⟨s²⟩` against `ln t` over `times ∈ [window.0, window.1]`.
pub fn diffusion_fit(times: &[u64], second_moments: &[f64], window: (u64, u64)) -> Result<DiffusionFit> {
    if times.len() != second_moments.len() {
        return Err(arg("times and moments differ in length"));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&t, &m) in times.iter().zip(second_moments) {
        if t < window.0 || t > window.1 || t == 0 {
            continue;
        }
        if !(m > 0.0) {
            return Err(Error::Domain(format!("non-positive second moment {m} at t = {t}")));
        }
        x.push((t as f64).ln());
        y.push(m.ln());
    }
    if x.len() < 3 {
        return Err(Error::FitInfeasible(format!(
            "diffusion fit needs 3 in-window points, got {}",
            x.len()
        )));
    }
    let line = fit_line(&x, &y)?;
    let a = line.slope;
    let kind = if a >= 2.0 - DIFFUSION_BAND {
        DiffusionKind::Ballistic
    } else if (a - 1.0).abs() <= DIFFUSION_BAND {
        DiffusionKind::Normal
    } else if a < 1.0 {
        DiffusionKind::Sub
    } else {
        DiffusionKind::Super
    };
    Ok(DiffusionFit {
        exponent: a,
        intercept: line.intercept,
        window,
        kind,
        line,
    })
}
