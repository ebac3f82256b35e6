//! Levenberg–Marquardt fits of the width models `D_L(η)`.

use crate::error::{arg, Error, Result};
use crate::numerics::{fit_line, solve_dense};
use serde::{Deserialize, Serialize};

/// Iteration cap of every Levenberg–Marquardt run.
pub const LM_MAX_ITERATIONS: usize = 2000;
/// Convergence when `‖Jᵀr‖∞` drops below this.
pub const LM_GRADIENT_TOL: f64 = 1e-10;
/// Convergence when the accepted step is below this (relative to `‖x‖ + tol`).
pub const LM_STEP_TOL: f64 = 1e-12;

/// Damping policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Damping {
    /// `(JᵀJ + λ diag JᵀJ) δ = −Jᵀr`; λ is divided by 10 after an accepted
    /// step and multiplied by 10 after a rejected one.
    #[default]
    ScaledDiagonal,
    /// `(JᵀJ + μI) δ = −Jᵀr` with gain-ratio control: accepted steps scale μ
    /// by `max(1/3, 1 − (2ρ − 1)³)`, rejected ones by a doubling factor ν.
    GainRatio,
}

/// Result of a Levenberg–Marquardt run.
#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    /// Root-mean-square residual at `x`.
    pub rms: f64,
    pub converged: bool,
    pub steps: usize,
}

/// Minimises `Σ r_i(x)²` where `model(x)` returns residuals and the
/// Jacobian rows `∂r_i/∂x`.
pub fn levenberg_marquardt<F>(model: F, x0: &[f64], damping: Damping, max_iterations: usize) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut r, mut jac) = model(&x);
    let cost = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut c = cost(&r);
    let failed = |reason: &str, it: usize, last: &[f64]| Error::FitFailed {
        reason: reason.into(),
        iterations: it,
        last: last.to_vec(),
    };
    if !c.is_finite() {
        return Err(failed("non-finite residual at the starting point", 0, &x));
    }
    let normal = |jac: &[Vec<f64>], r: &[f64]| {
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for (row, ri) in jac.iter().zip(r) {
            for a in 0..n {
                jtr[a] += row[a] * ri;
                for b in 0..n {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        (jtj, jtr)
    };
    let (mut jtj, mut jtr) = normal(&jac, &r);
    let mut lambda = match damping {
        Damping::ScaledDiagonal => 1e-3,
        Damping::GainRatio => 1e-3 * (0..n).map(|i| jtj[i][i]).fold(0.0, f64::max).max(1e-300),
    };
    let mut nu = 2.0;
    let mut steps = 0;
    let mut converged = false;
    while steps < max_iterations {
        if jtr.iter().fold(0.0f64, |m, v| m.max(v.abs())) < LM_GRADIENT_TOL {
            converged = true;
            break;
        }
        steps += 1;
        let mut a = jtj.clone();
        for i in 0..n {
            a[i][i] += match damping {
                Damping::ScaledDiagonal => lambda * jtj[i][i].max(1e-300),
                Damping::GainRatio => lambda,
            };
        }
        let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
        let Some(delta) = solve_dense(a, rhs) else {
            lambda *= 10.0;
            if !lambda.is_finite() {
                return Err(failed("damped normal equations singular", steps, &x));
            }
            continue;
        };
        let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let (rt, jt) = model(&trial);
        let ct = cost(&rt);
        let predicted: f64 = {
            // L(0) − L(δ) = −δᵀJᵀr − ½δᵀJᵀJδ.
            let jd: f64 = (0..n)
                .map(|i| delta[i] * (0..n).map(|k| jtj[i][k] * delta[k]).sum::<f64>())
                .sum();
            -(0..n).map(|i| delta[i] * jtr[i]).sum::<f64>() - 0.5 * jd
        };
        let step_norm = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ct.is_finite() && ct <= c {
            let actual = c - ct;
            x = trial;
            r = rt;
            jac = jt;
            c = ct;
            (jtj, jtr) = normal(&jac, &r);
            match damping {
                Damping::ScaledDiagonal => lambda = (lambda / 10.0).max(1e-15),
                Damping::GainRatio => {
                    let rho = if predicted > 0.0 { actual / predicted } else { 1.0 };
                    let rho = rho.clamp(0.0, 1.0);
                    lambda *= (1.0 / 3.0f64).max(1.0 - (2.0 * rho - 1.0).powi(3));
                    nu = 2.0;
                }
            }
            if step_norm < LM_STEP_TOL * (x_norm + LM_STEP_TOL) {
                converged = true;
                break;
            }
        } else {
            match damping {
                Damping::ScaledDiagonal => lambda *= 10.0,
                Damping::GainRatio => {
                    lambda *= nu;
                    nu *= 2.0;
                }
            }
            if !lambda.is_finite() || lambda > 1e300 {
                if step_norm < LM_STEP_TOL * (x_norm + LM_STEP_TOL) || c == 0.0 {
                    converged = true;
                    break;
                }
                return Err(failed("damping diverged without progress", steps, &x));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(failed("non-finite iterate", steps, &x));
        }
    }
    let rms = (c / r.len().max(1) as f64).sqrt();
    Ok(LmOutcome { x, rms, converged, steps })
}

/// Fit of `D_L = c + a·e^{bη}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFitExp {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// RMS residual.
    pub residual: f64,
    pub converged: bool,
    pub steps: usize,
    pub damping: Damping,
}

/// Fit of `D_L = a·η + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFitLin {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
}

/// Either width model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum DlModel {
    Exp(ModelFitExp),
    Lin(ModelFitLin),
}

impl DlModel {
    /// `D_L(η)`.
    pub fn dl(&self, eta: f64) -> f64 {
        match self {
            DlModel::Exp(m) => m.c + m.a * (m.b * eta).exp(),
            DlModel::Lin(m) => m.a * eta + m.b,
        }
    }
}

/// Best `(a, c)` for fixed `b` by linear least squares, with its cost.
fn profile(points: &[(f64, f64)], b: f64) -> Option<(f64, f64, f64)> {
    let x: Vec<f64> = points.iter().map(|(e, _)| (b * e).exp()).collect();
    let y: Vec<f64> = points.iter().map(|(_, d)| *d).collect();
    let line = fit_line(&x, &y).ok()?;
    let cost = x.iter().zip(&y).map(|(xi, yi)| (line.eval(*xi) - yi).powi(2)).sum();
    Some((line.slope, line.intercept, cost))
}

/// Fits the exponential model; the start is the best point of a profile
/// scan over `b ∈ [−6, 6]` (the model is linear in `a, c` for fixed `b`).
pub fn lm_fit_exp(points: &[(f64, f64)], damping: Damping) -> Result<ModelFitExp> {
    if points.len() < 4 {
        return Err(Error::FitInfeasible("exponential model needs at least 4 points".into()));
    }
    if points.iter().any(|(e, d)| !(e.is_finite() && d.is_finite())) {
        return Err(arg("model points must be finite"));
    }
    let mut start = None;
    for i in -240..=240 {
        let b = f64::from(i) * 0.025;
        if b == 0.0 {
            continue;
        }
        if let Some((a, c, cost)) = profile(points, b) {
            if start.is_none_or(|(_, _, _, best)| cost < best) {
                start = Some((a, b, c, cost));
            }
        }
    }
    let (a0, b0, c0, _) = start.ok_or_else(|| Error::FitInfeasible("no usable starting point".into()))?;
    let model = |p: &[f64]| {
        let (a, b, c) = (p[0], p[1], p[2]);
        let mut r = Vec::with_capacity(points.len());
        let mut j = Vec::with_capacity(points.len());
        for &(eta, d) in points {
            let e = (b * eta).exp();
            r.push(c + a * e - d);
            j.push(vec![e, a * eta * e, 1.0]);
        }
        (r, j)
    };
    let out = levenberg_marquardt(model, &[a0, b0, c0], damping, LM_MAX_ITERATIONS)?;
    Ok(ModelFitExp {
        a: out.x[0],
        b: out.x[1],
        c: out.x[2],
        residual: out.rms,
        converged: out.converged,
        steps: out.steps,
        damping,
    })
}

/// Fits the linear model (the least-squares line is the unique minimiser).
pub fn lm_fit_lin(points: &[(f64, f64)]) -> Result<ModelFitLin> {
    if points.len() < 2 {
        return Err(Error::FitInfeasible("linear model needs at least 2 points".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let line = fit_line(&x, &y)?;
    Ok(ModelFitLin { a: line.slope, b: line.intercept, residual: line.rms })
}
