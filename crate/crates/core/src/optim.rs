//! Derivative-free minimization (Nelder–Mead) used by the fitting routines.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once `max f - min f` over the simplex falls below this.
    pub tolerance: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { max_iterations: 2000, tolerance: 1e-12, initial_step: 0.25 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Minimizes `f` from `start`. Non-finite objective values are treated as
/// `+inf`; the start point itself must be finite.
///
/// When the simplex collapses the search restarts around the incumbent, which
/// costs a few evaluations at a true minimum and rescues premature stalls.
/// The returned value never exceeds `f(start)`.
pub fn nelder_mead<F>(f: F, start: &[f64], opts: NelderMeadOptions) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let f0 = eval(start);
    if !f0.is_finite() {
        return Err(Error::OptimizationFailed("objective is not finite at the start point".into()));
    }
    let mut best = Minimum { x: start.to_vec(), value: f0, iterations: 0 };
    let mut budget = opts.max_iterations;
    for _restart in 0..4 {
        let run = run_simplex(&eval, &best.x, best.value, opts, budget);
        budget -= run.iterations;
        let improved = best.value - run.value;
        best.iterations += run.iterations;
        if run.value < best.value {
            best.x = run.x;
            best.value = run.value;
        }
        if budget == 0 || improved <= opts.tolerance {
            break;
        }
    }
    Ok(best)
}

fn run_simplex<F>(f: &F, start: &[f64], f_start: f64, opts: NelderMeadOptions, budget: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(start.to_vec());
    vals.push(f_start);
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += opts.initial_step * p[i].abs().max(1.0);
        vals.push(f(&p));
        pts.push(p);
    }

    let mut it = 0;
    while it < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        // stable sort keeps ties in insertion order, so runs are reproducible
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if vals[n] - vals[0] < opts.tolerance {
            break;
        }
        it += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|k| pts[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (w - c)).collect()
        };

        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(-0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            let p: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
            vals[i] = f(&p);
            pts[i] = p;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    Minimum { x: pts[best].clone(), value: vals[best], iterations: it }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], NelderMeadOptions::default()).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{m:?}");
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| (x[0] - 3.0).abs().sqrt();
        let m = nelder_mead(f, &[2.9], NelderMeadOptions::default()).unwrap();
        assert!(m.value <= f(&[2.9]));
    }

    #[test]
    fn rejects_non_finite_start() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { x[0] };
        assert!(matches!(
            nelder_mead(f, &[-1.0], NelderMeadOptions::default()),
            Err(Error::OptimizationFailed(_))
        ));
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(4);
        let a = nelder_mead(f, &[0.0, 0.0], NelderMeadOptions::default()).unwrap();
        let b = nelder_mead(f, &[0.0, 0.0], NelderMeadOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
