//! Small numerical building blocks shared across modules: compensated
//! summation, straight-line least squares, adaptive Gauss–Kronrod quadrature
//! and moving-average smoothing.

use crate::error::{arg, Error, Result};
use num_complex::Complex64;
use std::collections::BinaryHeap;

/// Neumaier-compensated running sum.
///
/// The error of the final sum is bounded independently of the number of
/// terms, which keeps reductions insensitive to summation order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Merges another partial sum into this one (used by parallel reductions).
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated complex accumulator (independent real and imaginary parts).
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl CompensatedComplexSum {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(&mut self, other: &CompensatedComplexSum) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Compensated sum of a slice.
pub fn sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<CompensatedSum>().value()
}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(sum(xs) / xs.len() as f64)
    }
}

/// Ordinary least-squares straight line `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    /// Number of points used.
    pub n: usize,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Fits a straight line by least squares using centred sums.
///
/// Requires at least two points with distinct abscissae.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(arg(format!(
            "abscissa/ordinate length mismatch ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::FitInfeasible(format!(
            "line fit needs at least 2 points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in line-fit input".into()));
    }
    let n = x.len() as f64;
    let mx = sum(x) / n;
    let my = sum(y) / n;
    let sxx: CompensatedSum = x.iter().map(|&xi| (xi - mx) * (xi - mx)).collect();
    let sxy: CompensatedSum = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (xi - mx) * (yi - my))
        .collect();
    let sxx = sxx.value();
    if sxx <= 0.0 {
        return Err(Error::Domain("all abscissae coincide".into()));
    }
    let slope = sxy.value() / sxx;
    let intercept = my - slope * mx;
    let ss: CompensatedSum = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - (slope * xi + intercept);
            r * r
        })
        .collect();
    Ok(LineFit {
        slope,
        intercept,
        rms: (ss.value() / n).sqrt(),
        n: x.len(),
    })
}

/// Centred moving average with span `span` (odd), shrinking the window
/// symmetrically near the ends so the first and last points are kept.
///
/// A constant sequence is a fixed point.
pub fn moving_average(x: &[f64], span: usize) -> Vec<f64> {
    let half = span.max(1) / 2;
    let n = x.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            // Averaging deviations from the centre keeps constants exact.
            let w = &x[i - h..=i + h];
            let c = x[i];
            c + w.iter().map(|v| v - c).collect::<CompensatedSum>().value() / w.len() as f64
        })
        .collect()
}

/// Applies [`moving_average`] `passes` times.
pub fn repeated_moving_average(x: &[f64], span: usize, passes: usize) -> Vec<f64> {
    let mut out = x.to_vec();
    for _ in 0..passes {
        out = moving_average(&out, span);
    }
    out
}

/// Solves the dense system `a·x = b` by Gaussian elimination with partial
/// pivoting; `None` when a pivot vanishes.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Outcome of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated absolute error (sum of Kronrod–Gauss differences).
    pub error: f64,
    pub evaluations: usize,
}

// 15-point Kronrod nodes (non-negative half) and weights, with the embedded
// 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let fsum = f(c - dx) + f(c + dx);
        kron += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(PartialEq)]
struct Panel {
    err: f64,
    a: f64,
    b: f64,
    value: f64,
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature on `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the total
/// error estimate falls below `max(abs_tol, rel_tol·|I|)` or `max_panels`
/// panels are in use, in which case a [`Error::Numerical`] carrying the
/// achieved estimate is returned.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(arg("integration limits must be finite"));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (v, e) = gk15(&f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { err: e, a, b, value: v });
    let mut total = v;
    let mut total_err = e;
    loop {
        if !total.is_finite() {
            return Err(Error::Numerical(format!(
                "quadrature produced a non-finite value on [{a}, {b}]"
            )));
        }
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        if heap.len() >= max_panels {
            return Err(Error::Numerical(format!(
                "quadrature on [{a}, {b}] did not converge: estimate {total}, error {total_err:e} \
                 after {evaluations} evaluations"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { err: e1, a: worst.a, b: mid, value: v1 });
        heap.push(Panel { err: e2, a: mid, b: worst.b, value: v2 });
    }
    // Re-sum the panels to shed the drift of the running totals.
    let value: CompensatedSum = heap.iter().map(|p| p.value).collect();
    let error: CompensatedSum = heap.iter().map(|p| p.err).collect();
    Ok(Quadrature {
        value: value.value(),
        error: error.value(),
        evaluations,
    })
}

/// Two-sample-free Kolmogorov–Smirnov distance between the empirical CDF of
/// `samples` and a reference CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(arg("KS distance needs at least one sample"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}
