//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use fidelity::levy::Regime;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Width model evaluated by the scan oracle.
#[derive(Debug, Clone, Copy)]
pub enum Width {
    /// `D_L = c + a e^{bη}`.
    Exp { a: f64, b: f64, c: f64 },
    /// `D_L = aη + b`.
    Lin { a: f64, b: f64 },
}

/// Sign of `f(η + h) − f(η)` for `f = σ^η D_L(η)`, evaluated with the common
/// factor `σ^η` (and `e^{bη}` when it dominates) divided out so that the
/// comparison neither overflows nor underflows at large `η`.
pub fn exponent_step_sign(w: Width, ln_sigma: f64, eta: f64, h: f64) -> i8 {
    let shrink = (h * ln_sigma).exp();
    let diff = match w {
        Width::Exp { a, b, c } => {
            if b > 0.0 {
                let ce = c * (-b * eta).exp();
                shrink * (ce * (-b * h).exp() + a) * (b * h).exp() - (ce + a)
            } else {
                let e0 = (b * eta).exp();
                shrink * (c + a * e0 * (b * h).exp()) - (c + a * e0)
            }
        }
        Width::Lin { a, b } => shrink * (a * (eta + h) + b) - (a * eta + b),
    };
    if diff > 0.0 {
        1
    } else if diff < 0.0 {
        -1
    } else {
        0
    }
}

/// Grid points used by the coarse scan: a fine uniform part followed by a
/// geometric tail reaching `η = 10⁴`.
fn scan_points(step: f64, uniform_end: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=(uniform_end / step).round() as usize).map(|i| i as f64 * step).collect();
    let mut e = uniform_end;
    while e < 1e4 {
        e *= 1.01;
        pts.push(e);
    }
    pts
}

/// Monotonicity of `M_sc(η) = exp(−2σ^η D_L(η))` on `(0, 10⁴]` from the signs
/// of successive differences; `M_sc` increases where the exponent falls.
pub fn scan_regime(w: Width, sigma: f64) -> Regime {
    let l = sigma.ln();
    let pts = scan_points(1e-3, 20.0);
    let mut signs: Vec<i8> = Vec::new();
    for win in pts.windows(2) {
        let s = exponent_step_sign(w, l, win[0], win[1] - win[0]);
        if s != 0 && signs.last() != Some(&s) {
            signs.push(s);
        }
    }
    match signs.as_slice() {
        [] => Regime::Constant,
        [1] => Regime::Decreasing,
        [-1] => Regime::Increasing,
        [1, -1] => Regime::DecreasingThenIncreasing,
        [-1, 1] => Regime::IncreasingThenDecreasing,
        other => panic!("M_sc(η) changes direction {} times", other.len() - 1),
    }
}

/// Location of the direction change on a `cell`-spaced grid around `guess`:
/// the left edge of the first cell whose difference sign differs from the
/// previous cell's.
pub fn scan_turning_point(w: Width, sigma: f64, guess: f64, cell: f64) -> Option<f64> {
    let l = sigma.ln();
    let lo = (guess - 1.0).max(0.0);
    let n = (2.0 / cell) as usize;
    let mut prev = None;
    for i in 0..n {
        let eta = lo + i as f64 * cell;
        let s = exponent_step_sign(w, l, eta, cell);
        if s == 0 {
            continue;
        }
        if let Some(p) = prev {
            if p != s {
                return Some(eta);
            }
        }
        prev = Some(s);
    }
    None
}

/// Dense one-period Floquet matrix `U = F⁻¹ diag(e^{−ip²/2ħ}) F diag(e^{−iK cos r/ħ})`
/// assembled element by element from the DFT definition.
pub fn dense_floquet(n: usize, k: f64) -> Vec<Vec<Complex64>> {
    let hbar = 2.0 * PI / n as f64;
    let coord = |j: usize| 2.0 * PI * j as f64 / n as f64;
    let mut u = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (j, row) in u.iter_mut().enumerate() {
        for (l, entry) in row.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..n {
                let p = coord(m);
                let phase = 2.0 * PI * (m as f64) * (j as f64 - l as f64) / n as f64 - p * p / (2.0 * hbar);
                acc += Complex64::from_polar(1.0, phase);
            }
            *entry = acc / n as f64 * Complex64::from_polar(1.0, -k * coord(l).cos() / hbar);
        }
    }
    u
}

pub fn mat_vec(m: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}
