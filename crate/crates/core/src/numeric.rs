//! Small numeric helpers shared across modules.

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Trapezoid rule over (possibly non-uniform) nodes.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_ln_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

/// Solves `f(x) = target` for a nondecreasing `f` on `[lo, hi]` where
/// `f(lo) <= target <= f(hi)`. Newton steps are taken when they stay inside
/// the bracket and bisection otherwise, so the bracket always shrinks.
pub fn invert_monotone(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    guess: Option<f64>,
) -> f64 {
    let mut x = match guess {
        Some(g) if g > lo && g < hi => g,
        _ => 0.5 * (lo + hi),
    };
    for _ in 0..500 {
        let fx = f(x) - target;
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d > 0.0 && d.is_finite() && newton > lo && newton < hi {
            newton
        } else if lo > 0.0 && hi / lo > 1e3 {
            // geometric midpoint reaches tiny quantiles near a zero lower bound quickly
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
    }
    // pick whichever bracket end is closest in value
    let (flo, fhi, fx) = (f(lo) - target, f(hi) - target, f(x) - target);
    [(fx.abs(), x), (flo.abs(), lo), (fhi.abs(), hi)]
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, v)| v)
        .unwrap_or(x)
}
