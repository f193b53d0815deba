//! Four-parameter logistic fit of conditional entropy against `log10 p_min`.
//!
//! ```text
//! f(x) = d + L / (1 + exp(k (x − x0)))
//! ```
//!
//! With `L, k > 0` the curve falls from `d + L` to `d` and its inflection is
//! at `x0`. The fit is damped Gauss-Newton (Marquardt scaling) started from
//! data-driven guesses; if that fails a coarse `(k, x0)` scan, with `L` and
//! `d` solved linearly at each node, supplies a second start. When both fail
//! the result falls back to the point where the curve has lost half of its
//! initial value.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::distribution::Conditional;
use crate::error::{Error, Result};
use crate::filtering::FilterCurve;

pub const MIN_FIT_POINTS: usize = 8;
const FLAT_RANGE: f64 = 1e-6;
const STATIONARY: f64 = 1e-8;
const MAX_STEPS: usize = 500;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    LeastSquares,
    HalfReductionFallback,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFit {
    pub amplitude: f64,
    pub floor: f64,
    pub steepness: f64,
    /// Inflection point in `log10 p_min`.
    pub center: f64,
    pub residual_rms: f64,
    pub converged: bool,
    pub method: FitMethod,
}

impl SigmoidFit {
    pub fn eval(&self, x: f64) -> f64 {
        logistic(&params(self), x)
    }

    pub fn p_star(&self) -> f64 {
        10f64.powf(self.center)
    }
}

fn params(f: &SigmoidFit) -> [f64; 4] {
    [f.amplitude, f.floor, f.steepness, f.center]
}

#[inline]
fn falling(k: f64, x0: f64, x: f64) -> f64 {
    1.0 / (1.0 + (k * (x - x0)).exp())
}

#[inline]
fn logistic(p: &[f64; 4], x: f64) -> f64 {
    let [l, d, k, x0] = *p;
    d + l * falling(k, x0, x)
}

/// `∂f/∂(L, d, k, x0)`
fn gradient(p: &[f64; 4], x: f64) -> Vector4<f64> {
    let [l, _, k, x0] = *p;
    let s = falling(k, x0, x);
    let slope = s * (1.0 - s);
    Vector4::new(s, 1.0, -l * slope * (x - x0), l * slope * k)
}

fn sse(p: &[f64; 4], xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().zip(ys).map(|(&x, &y)| (logistic(p, x) - y).powi(2)).sum()
}

/// `(x, conditional entropy)` pairs for every point with `p_min > 0`.
pub fn fit_data(curve: &FilterCurve, which: Conditional) -> (Vec<f64>, Vec<f64>) {
    curve
        .points
        .iter()
        .filter(|p| p.p_min > 0.0)
        .map(|p| (p.p_min.log10(), p.summary.conditional(which)))
        .unzip()
}

/// First `x` at which `ys` drops to `level` or below, linearly interpolated
/// between the bracketing samples.
fn first_crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    let i = ys.iter().position(|&y| y <= level)?;
    if i == 0 {
        return Some(xs[0]);
    }
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    if y0 == y1 {
        return Some(x1);
    }
    Some(x0 + (y0 - level) / (y0 - y1) * (x1 - x0))
}

fn initial_guess(xs: &[f64], ys: &[f64]) -> [f64; 4] {
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let x_mid = first_crossing(xs, ys, lo + range / 2.0).unwrap_or(xs[xs.len() / 2]);
    let x_hi = first_crossing(xs, ys, lo + 0.75 * range);
    let x_lo = first_crossing(xs, ys, lo + 0.25 * range);
    let span = match (x_hi, x_lo) {
        (Some(a), Some(b)) if b > a => b - a,
        _ => (xs[xs.len() - 1] - xs[0]) / 4.0,
    };
    [range, lo, 4.0 / span, x_mid]
}

struct Outcome {
    params: [f64; 4],
    sse: f64,
    converged: bool,
}

fn levenberg_marquardt(start: [f64; 4], xs: &[f64], ys: &[f64]) -> Outcome {
    let mut p = start;
    let mut cost = sse(&p, xs, ys);
    let mut lambda = 1e-3;
    for _ in 0..MAX_STEPS {
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (&x, &y) in xs.iter().zip(ys) {
            let g = gradient(&p, x);
            let r = logistic(&p, x) - y;
            jtj += g * g.transpose();
            jtr += g * r;
        }
        if jtr.amax() <= 1e-15 * (1.0 + cost) {
            return Outcome { params: p, sse: cost, converged: true };
        }
        loop {
            let mut a = jtj;
            for i in 0..4 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                if lambda > 1e12 {
                    return Outcome { params: p, sse: cost, converged: false };
                }
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
            let trial_cost = sse(&trial, xs, ys);
            if trial_cost.is_finite() && trial_cost <= cost {
                let scale = p.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                let small_step = step.amax() <= STATIONARY * scale;
                let small_gain = cost - trial_cost <= STATIONARY * cost.max(1e-300);
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                if small_step && small_gain {
                    return Outcome { params: p, sse: cost, converged: true };
                }
                break;
            }
            lambda *= 2.0;
            if lambda > 1e12 {
                return Outcome { params: p, sse: cost, converged: false };
            }
        }
    }
    Outcome { params: p, sse: cost, converged: false }
}

/// Puts a fitted parameter set into the `L, k > 0` orientation and checks it
/// describes a falling sigmoid centred near the data.
fn canonical(p: [f64; 4], xs: &[f64]) -> Option<[f64; 4]> {
    let [mut l, mut d, mut k, x0] = p;
    if k < 0.0 {
        // d + L/(1+e^{-u}) == (d + L) − L/(1+e^{u})
        d += l;
        l = -l;
        k = -k;
    }
    let (x_min, x_max) = (xs[0], xs[xs.len() - 1]);
    let ok = p.iter().all(|v| v.is_finite())
        && l > 0.0
        && k > 0.0
        && (x_min - 1.0..=x_max + 1.0).contains(&x0);
    ok.then_some([l, d, k, x0])
}

/// Best `(L, d)` for fixed `(k, x0)` by linear least squares.
fn linear_amplitudes(k: f64, x0: f64, xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mut ss, mut s, mut sy, mut y) = (0.0, 0.0, 0.0, 0.0);
    for (&x, &yi) in xs.iter().zip(ys) {
        let f = falling(k, x0, x);
        ss += f * f;
        s += f;
        sy += f * yi;
        y += yi;
    }
    let det = n * ss - s * s;
    if det.abs() < 1e-300 {
        return (0.0, y / n);
    }
    ((n * sy - s * y) / det, (ss * y - s * sy) / det)
}

fn scan_start(xs: &[f64], ys: &[f64]) -> [f64; 4] {
    let (x_min, x_max) = (xs[0], xs[xs.len() - 1]);
    let mut best = ([0.0; 4], f64::INFINITY);
    for i in 0..=40 {
        let x0 = x_min + (x_max - x_min) * i as f64 / 40.0;
        for j in 0..12 {
            let k = 0.25 * 2f64.powf(j as f64 * 0.5);
            let (l, d) = linear_amplitudes(k, x0, xs, ys);
            let p = [l, d, k, x0];
            let c = sse(&p, xs, ys);
            if c < best.1 {
                best = (p, c);
            }
        }
    }
    best.0
}

/// Fits the sigmoid to `(x, y)` samples with `x` increasing.
pub fn fit_points(xs: &[f64], ys: &[f64]) -> Result<SigmoidFit> {
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints { needed: MIN_FIT_POINTS, got: n });
    }
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < FLAT_RANGE {
        return Err(Error::FlatCurve { range: hi - lo });
    }
    let init = initial_guess(xs, ys);
    for start in [init, scan_start(xs, ys)] {
        let out = levenberg_marquardt(start, xs, ys);
        if !out.converged {
            continue;
        }
        if let Some([l, d, k, x0]) = canonical(out.params, xs) {
            return Ok(SigmoidFit {
                amplitude: l,
                floor: d,
                steepness: k,
                center: x0,
                residual_rms: (out.sse / n as f64).sqrt(),
                converged: true,
                method: FitMethod::LeastSquares,
            });
        }
    }
    let half = first_crossing(xs, ys, ys[0] / 2.0).ok_or_else(|| Error::FitFailed {
        reason: "least squares diverged and the curve never drops to half its initial value".into(),
    })?;
    let [l, d, k, _] = init;
    let p = [l, d, k, half];
    Ok(SigmoidFit {
        amplitude: l,
        floor: d,
        steepness: k,
        center: half,
        residual_rms: (sse(&p, xs, ys) / n as f64).sqrt(),
        converged: false,
        method: FitMethod::HalfReductionFallback,
    })
}

/// Half-reduction estimate alone (used for cross-checks).
pub fn half_reduction_center(xs: &[f64], ys: &[f64]) -> Option<f64> {
    first_crossing(xs, ys, *ys.first()? / 2.0)
}

pub fn fit_sigmoid(curve: &FilterCurve, which: Conditional) -> Result<SigmoidFit> {
    let (xs, ys) = fit_data(curve, which);
    fit_points(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| -7.0 + 6.5 * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn recovers_exact_parameters() {
        let xs = grid(121);
        for truth in [[1.6, 0.05, 2.0, -2.0], [0.9, 0.0, 3.5, -3.2], [2.2, 0.3, 1.1, -4.5]] {
            let ys: Vec<f64> = xs.iter().map(|&x| logistic(&truth, x)).collect();
            let f = fit_points(&xs, &ys).unwrap();
            assert_eq!(f.method, FitMethod::LeastSquares);
            assert!(f.converged);
            for (got, want) in params(&f).iter().zip(truth) {
                assert!((got - want).abs() < 1e-6, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn inflection_is_at_center() {
        // second derivative by central differences changes sign at x0
        let f = SigmoidFit {
            amplitude: 1.3,
            floor: 0.1,
            steepness: 2.5,
            center: -2.0,
            residual_rms: 0.0,
            converged: true,
            method: FitMethod::LeastSquares,
        };
        let h = 1e-3;
        let curv = |x: f64| f.eval(x + h) - 2.0 * f.eval(x) + f.eval(x - h);
        assert!(curv(-2.1) < 0.0);
        assert!(curv(-1.9) > 0.0);
        assert!(curv(-2.0).abs() < 1e-12);
        for w in grid(50).windows(2) {
            assert!(f.eval(w[1]) <= f.eval(w[0]));
        }
    }

    #[test]
    fn flat_and_short_curves_rejected() {
        let xs = grid(20);
        assert!(matches!(fit_points(&xs, &[0.5; 20]), Err(Error::FlatCurve { .. })));
        assert!(matches!(fit_points(&xs[..5], &[1.0, 0.9, 0.5, 0.1, 0.0]), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn fallback_agrees_with_least_squares_on_model_curves() {
        let xs = grid(121);
        let step = xs[1] - xs[0];
        for truth in [[1.6, 0.0, 2.0, -2.0], [1.0, 0.0, 4.0, -3.0], [2.0, 0.0, 1.5, -4.0]] {
            let ys: Vec<f64> = xs.iter().map(|&x| logistic(&truth, x)).collect();
            let lsq = fit_points(&xs, &ys).unwrap();
            let half = half_reduction_center(&xs, &ys).unwrap();
            assert!((lsq.center - half).abs() <= step, "{} vs {half}", lsq.center);
        }
    }

    #[test]
    fn negative_orientation_is_canonicalized() {
        let xs = grid(10);
        let p = canonical([-1.0, 2.0, -3.0, -3.0], &xs).unwrap();
        for &x in &xs {
            assert!((logistic(&p, x) - logistic(&[-1.0, 2.0, -3.0, -3.0], x)).abs() < 1e-12);
        }
        assert!(canonical([1.0, 0.0, 1.0, 5.0], &xs).is_none());
    }
}
