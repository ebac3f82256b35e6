//! Experiment configuration.
//!
//! A run is described by one TOML file in which every field is optional and
//! falls back to the default documented here. Command-line flags override
//! the file, and the full effective configuration is echoed into the run
//! manifest.

use fidelity::decayfit::{CharTimesConfig, FitMethod};
use fidelity::dephasing::Order;
use fidelity::ensembles::Binning;
use fidelity::levy::Damping;
use fidelity::maps::{EscapeRegion, KickOrder};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};

/// Complete description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every ensemble derives its own stream from it.
    pub seed: u64,
    /// Directory receiving every artifact of the run.
    pub output: PathBuf,
    pub map: MapSection,
    pub grid: GridSection,
    pub packet: PacketSection,
    pub echo: EchoSection,
    pub classical: ClassicalSection,
    pub stick: StickSection,
    pub semiclassical: SemiclassicalSection,
    pub levy: LevySection,
    pub decay: DecaySection,
    pub sweep: SweepSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output: PathBuf::from("out"),
            map: MapSection::default(),
            grid: GridSection::default(),
            packet: PacketSection::default(),
            echo: EchoSection::default(),
            classical: ClassicalSection::default(),
            stick: StickSection::default(),
            semiclassical: SemiclassicalSection::default(),
            levy: LevySection::default(),
            decay: DecaySection::default(),
            sweep: SweepSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSection {
    /// Kick strength `K` of the quantum and semiclassical dynamics; 7 is
    /// deep in the chaotic regime.
    pub k: f64,
}

impl Default for MapSection {
    fn default() -> Self {
        Self { k: 7.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Hilbert-space dimension `N` (`ħ = 2π/N`); 2^12 is the desk-scale size.
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n: 1 << 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketSection {
    /// Packet centre `(r̃₀, p̃₀)`.
    pub r0: f64,
    pub p0: f64,
    /// Shape ratio `k = ħ/ξ²`; 1 is the circular coherent state.
    pub shape_k: f64,
}

impl Default for PacketSection {
    fn default() -> Self {
        Self { r0: 2.2, p0: 3.0, shape_k: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EchoSection {
    /// Scaled perturbations `σ = ε/ħ`, strictly ascending.
    pub sigmas: Vec<f64>,
    /// Number of recorded periods; 10^4 is the longest time studied.
    pub horizon: u64,
    /// Trailing fraction of a series averaged into the saturation `F∞`.
    pub tail_fraction: f64,
}

impl Default for EchoSection {
    fn default() -> Self {
        Self { sigmas: vec![0.01, 0.02, 0.03, 0.1, 0.3, 1.0], horizon: 10_000, tail_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalSection {
    /// Map ordering of the classical studies. The regular island around
    /// `(2.2, 1.5)` at `K = 3` is a drift-first structure.
    pub order: KickOrder,
    /// Kick strength of the classical studies.
    pub k: f64,
    /// Length of the single orbit written by `classical`.
    pub orbit_steps: u64,
    /// Steps of the Lyapunov estimate; 10^5 matches the sticking horizon.
    pub lyapunov_steps: u64,
    /// Ensemble size of the action-diffusion study.
    pub diffusion_samples: usize,
    /// Ascending times at which `⟨s²⟩` is recorded.
    pub diffusion_times: Vec<u64>,
}

impl Default for ClassicalSection {
    fn default() -> Self {
        Self {
            order: KickOrder::DriftFirst,
            k: 3.0,
            orbit_steps: 1000,
            lyapunov_steps: 100_000,
            diffusion_samples: 10_000,
            diffusion_times: vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StickSection {
    /// Radius of the start disc around the packet centre.
    pub radius: f64,
    /// Number of disc points.
    pub samples: usize,
    /// Search horizon; an ensemble that never escapes is reported as stuck.
    pub max_steps: u64,
    /// Region whose entry counts as escape into the chaotic sea.
    pub region: EscapeRegion,
}

impl Default for StickSection {
    fn default() -> Self {
        Self { radius: 1e-3, samples: 10_000, max_steps: 100_000, region: EscapeRegion::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemiclassicalSection {
    /// Trajectories in the wave-packet ensemble.
    pub samples: usize,
    pub order: Order,
    /// Fixed ensemble seed; when absent it is derived from the master seed
    /// and the cell index.
    pub ensemble_seed: Option<u64>,
}

impl Default for SemiclassicalSection {
    fn default() -> Self {
        Self { samples: 10_000, order: Order::First, ensemble_seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevySection {
    /// Wave-packet ensemble size.
    pub samples: usize,
    /// Ascending times at which the action distribution is fitted.
    pub times: Vec<u64>,
    /// Leading efficient frequencies entering the `(η, D_L)` line fit.
    pub n_freq: usize,
    /// Zero-padding factor of the spectrum.
    pub pad_factor: usize,
    pub damping: Damping,
    pub binning: Binning,
}

impl Default for LevySection {
    fn default() -> Self {
        Self {
            samples: 100_000,
            times: vec![10, 20, 50, 100, 200, 500, 1000],
            n_freq: fidelity::levy::DEFAULT_N_FREQ,
            pad_factor: fidelity::levy::DEFAULT_PAD_FACTOR,
            damping: Damping::default(),
            binning: Binning::default(),
        }
    }
}

/// Which echo the decay analysis is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EchoSource {
    #[default]
    Quantum,
    Semiclassical,
}

/// Point selection of the perturbation-exponent fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuSelection {
    /// Exactly `σ ∈ {0.01, 0.02, 0.03}`.
    #[default]
    Fixed,
    /// Longest increasing prefix of all computed perturbations.
    Increasing,
}

impl NuSelection {
    pub fn method(self, source: EchoSource) -> FitMethod {
        match (self, source) {
            (NuSelection::Fixed, EchoSource::Quantum) => FitMethod::Num1,
            (NuSelection::Increasing, EchoSource::Quantum) => FitMethod::Num2,
            (NuSelection::Fixed, EchoSource::Semiclassical) => FitMethod::Semi1,
            (NuSelection::Increasing, EchoSource::Semiclassical) => FitMethod::Semi2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecaySection {
    pub source: EchoSource,
    /// Characteristic-time thresholds (window step 20, gap 0.05, saturation
    /// exponent 0.2, inflection tolerance 0.0005, search span 2000,
    /// horizon 10^4, floor 1e−5). Chaotic-sea states use gap 0.01 and
    /// floor 1e−4.
    pub thresholds: CharTimesConfig,
    /// Time at which `ν` is fitted across perturbations.
    pub nu_time: u64,
    pub nu_selection: NuSelection,
    /// `c₀` is averaged over `t ≤ c0_t_max` of the `σ = 0.1` series.
    pub c0_t_max: u64,
    /// Echo band `(upper, lower)` of the exponential-rate fit.
    pub rate_window: (f64, f64),
    /// σ-interval of the decay-time power law; all perturbations when absent.
    pub gamma_window: Option<(f64, f64)>,
}

impl Default for DecaySection {
    fn default() -> Self {
        Self {
            source: EchoSource::Quantum,
            thresholds: CharTimesConfig::default(),
            nu_time: 10,
            nu_selection: NuSelection::Fixed,
            c0_t_max: 1000,
            rate_window: (0.9, 0.05),
            gamma_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Kick strengths of the grid.
    pub k: Vec<f64>,
    /// Packet momenta `p̃₀` of the grid (the position stays `packet.r0`).
    pub p_center: Vec<f64>,
    /// Perturbations of the grid, strictly ascending.
    pub sigmas: Vec<f64>,
    /// Hilbert-space dimensions of the grid.
    pub n: Vec<usize>,
    /// Largest number of cells a sweep may contain.
    pub max_cells: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            k: vec![3.0],
            p_center: vec![1.85, 1.87, 1.89],
            sigmas: vec![0.01, 0.1, 1.0],
            n: vec![1 << 12],
            max_cells: 10_000,
        }
    }
}

/// One invalid field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    /// Dotted path of the field, e.g. `echo.sigmas`.
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Configuration rejected before any computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub Vec<FieldError>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    pub fn single(field: &str, message: impl Into<String>) -> Self {
        Self(vec![FieldError { field: field.into(), message: message.into() }])
    }
}

impl ExperimentConfig {
    /// Parses a TOML document; unknown keys are rejected.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::single("<file>", e.message().trim().to_string() + &span_hint(text, e.span())))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::single("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable in TOML")
    }

    /// SHA-256 of the canonical JSON form, excluding the output directory
    /// (which does not influence any result).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("configuration serialises");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Validator::default();
        v.finite_nonneg("map.k", self.map.k);
        v.finite_nonneg("classical.k", self.classical.k);
        if !self.grid.n.is_power_of_two() || self.grid.n < 4 {
            v.push("grid.n", format!("must be a power of two >= 4, got {}", self.grid.n));
        }
        if self.grid.n > fidelity::qdyn::DESK_SCALE_MAX_N << 5 {
            v.push("grid.n", format!("{} exceeds the supported maximum 2^21", self.grid.n));
        }
        v.finite("packet.r0", self.packet.r0);
        v.finite("packet.p0", self.packet.p0);
        v.positive("packet.shape_k", self.packet.shape_k);
        v.sigmas("echo.sigmas", &self.echo.sigmas);
        v.at_least("echo.horizon", self.echo.horizon, 1);
        if !(self.echo.tail_fraction > 0.0 && self.echo.tail_fraction <= 1.0) {
            v.push("echo.tail_fraction", format!("must lie in (0, 1], got {}", self.echo.tail_fraction));
        }
        v.at_least("classical.orbit_steps", self.classical.orbit_steps, 1);
        v.at_least("classical.lyapunov_steps", self.classical.lyapunov_steps, fidelity::maps::MIN_LYAPUNOV_STEPS);
        v.at_least("classical.diffusion_samples", self.classical.diffusion_samples as u64, 1);
        v.times("classical.diffusion_times", &self.classical.diffusion_times, 2);
        v.positive("stick.radius", self.stick.radius);
        v.at_least("stick.samples", self.stick.samples as u64, 1);
        v.at_least("stick.max_steps", self.stick.max_steps, 1);
        v.positive("stick.region.half_width", self.stick.region.half_width);
        if !(0.0..fidelity::TWO_PI).contains(&self.stick.region.r_center) {
            v.push("stick.region.r_center", "must lie in [0, 2π)".to_string());
        }
        v.finite("stick.region.p_threshold", self.stick.region.p_threshold);
        v.at_least("semiclassical.samples", self.semiclassical.samples as u64, 1);
        v.at_least("levy.samples", self.levy.samples as u64, 2);
        v.times("levy.times", &self.levy.times, 1);
        v.at_least("levy.n_freq", self.levy.n_freq as u64, 2);
        v.at_least("levy.pad_factor", self.levy.pad_factor as u64, 1);
        if let Binning::Bins { count } = self.levy.binning {
            v.at_least("levy.binning.count", count as u64, 1);
        }
        let th = &self.decay.thresholds;
        v.at_least("decay.thresholds.step", th.step, 1);
        v.positive("decay.thresholds.gap_threshold", th.gap_threshold);
        v.finite("decay.thresholds.saturation_alpha", th.saturation_alpha);
        v.positive("decay.thresholds.inflection_tol", th.inflection_tol);
        v.at_least("decay.thresholds.horizon", th.horizon, 1);
        if !(th.floor > 0.0 && th.floor < 1.0) {
            v.push("decay.thresholds.floor", format!("must lie in (0, 1), got {}", th.floor));
        }
        v.at_least("decay.nu_time", self.decay.nu_time, 1);
        if self.decay.nu_time > self.echo.horizon {
            v.push("decay.nu_time", format!("exceeds echo.horizon = {}", self.echo.horizon));
        }
        v.at_least("decay.c0_t_max", self.decay.c0_t_max, 1);
        let (hi, lo) = self.decay.rate_window;
        if !(0.0 < lo && lo < hi && hi <= 1.0) {
            v.push("decay.rate_window", format!("needs 0 < lower < upper <= 1, got ({hi}, {lo})"));
        }
        if let Some((a, b)) = self.decay.gamma_window {
            if !(a.is_finite() && b.is_finite() && 0.0 <= a && a < b) {
                v.push("decay.gamma_window", format!("needs 0 <= lower < upper, got ({a}, {b})"));
            }
        }
        if self.sweep.k.is_empty() {
            v.push("sweep.k", "must not be empty".into());
        }
        for (i, k) in self.sweep.k.iter().enumerate() {
            v.finite_nonneg(&format!("sweep.k[{i}]"), *k);
        }
        if self.sweep.p_center.is_empty() {
            v.push("sweep.p_center", "must not be empty".into());
        }
        for (i, p) in self.sweep.p_center.iter().enumerate() {
            v.finite(&format!("sweep.p_center[{i}]"), *p);
        }
        v.sigmas("sweep.sigmas", &self.sweep.sigmas);
        if self.sweep.n.is_empty() {
            v.push("sweep.n", "must not be empty".into());
        }
        for (i, n) in self.sweep.n.iter().enumerate() {
            if !n.is_power_of_two() || *n < 4 {
                v.push(&format!("sweep.n[{i}]"), format!("must be a power of two >= 4, got {n}"));
            }
        }
        v.at_least("sweep.max_cells", self.sweep.max_cells as u64, 1);
        v.finish()
    }

    /// Number of cells of the sweep grid.
    pub fn sweep_cells(&self) -> usize {
        self.sweep.k.len() * self.sweep.p_center.len() * self.sweep.sigmas.len() * self.sweep.n.len()
    }
}

fn span_hint(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

#[derive(Default)]
struct Validator(Vec<FieldError>);

impl Validator {
    fn push(&mut self, field: &str, message: String) {
        self.0.push(FieldError { field: field.into(), message });
    }

    fn finite(&mut self, field: &str, x: f64) {
        if !x.is_finite() {
            self.push(field, format!("must be finite, got {x}"));
        }
    }

    fn finite_nonneg(&mut self, field: &str, x: f64) {
        if !(x.is_finite() && x >= 0.0) {
            self.push(field, format!("must be finite and >= 0, got {x}"));
        }
    }

    fn positive(&mut self, field: &str, x: f64) {
        if !(x.is_finite() && x > 0.0) {
            self.push(field, format!("must be finite and > 0, got {x}"));
        }
    }

    fn at_least(&mut self, field: &str, x: u64, min: u64) {
        if x < min {
            self.push(field, format!("must be >= {min}, got {x}"));
        }
    }

    fn sigmas(&mut self, field: &str, s: &[f64]) {
        if s.is_empty() {
            self.push(field, "must not be empty".into());
            return;
        }
        if let Some(x) = s.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            self.push(field, format!("entries must be finite and >= 0, got {x}"));
        }
        if s.windows(2).any(|w| !(w[0] < w[1])) {
            self.push(field, "must be strictly ascending".into());
        }
    }

    fn times(&mut self, field: &str, t: &[u64], min_len: usize) {
        if t.len() < min_len {
            self.push(field, format!("needs at least {min_len} entries, got {}", t.len()));
        }
        if t.windows(2).any(|w| w[0] >= w[1]) {
            self.push(field, "must be strictly ascending".into());
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(self.0))
        }
    }
}
