//! Small numerical helpers shared by the solver modules.

use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

/// Pairwise (tree) summation with a fixed split order, so results do not
/// depend on thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Gauss-Legendre rule on [-1, 1] as (node, weight) pairs.
pub fn gauss_legendre(order: usize) -> &'static [(f64, f64)] {
    static RULES: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        (0..=32)
            .map(|k| {
                if k < 2 {
                    Vec::new()
                } else {
                    let mut pairs = GaussLegendre::new(k)
                        .expect("order >= 2")
                        .as_node_weight_pairs()
                        .to_vec();
                    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                    pairs
                }
            })
            .collect()
    });
    assert!((2..=32).contains(&order), "Gauss-Legendre order {order} not tabulated");
    &rules[order]
}

/// Integrate `f` over [a, b] with a composite Gauss-Legendre rule on `panels` equal panels.
pub fn integrate_panels(a: f64, b: f64, panels: usize, order: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut parts = Vec::with_capacity(panels);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        let s: f64 = rule.iter().map(|&(x, w)| w * f(mid + 0.5 * width * x)).sum();
        parts.push(0.5 * width * s);
    }
    pairwise_sum(&parts)
}

/// Maximise `f` on `[a, b]`: a uniform scan with `samples` points, then
/// golden-section refinement of the best bracket. Returns `(argmax, max)`.
pub fn scan_max(a: f64, b: f64, samples: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let samples = samples.max(3);
    let step = (b - a) / (samples - 1) as f64;
    let (mut best, mut best_v) = (0, f64::NEG_INFINITY);
    for i in 0..samples {
        let v = f(a + i as f64 * step);
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    let mut lo = a + best.saturating_sub(1) as f64 * step;
    let mut hi = a + (best + 1).min(samples - 1) as f64 * step;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-10 * (1.0 + hi.abs()) {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    let v = f(x);
    if v >= best_v {
        (x, v)
    } else {
        (a + best as f64 * step, best_v)
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// One-dimensional heat kernel `G_t(d) = (4 pi t)^{-1/2} exp(-d^2 / 4t)`.
#[inline]
pub fn gauss_1d(t: f64, d: f64) -> f64 {
    (-d * d / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt()
}

/// `G_t(x - y) - G_t(x + y)` for x, y >= 0, evaluated without cancellation.
#[inline]
pub fn reflected_1d(t: f64, x: f64, y: f64) -> f64 {
    gauss_1d(t, x - y) * (-(-x * y / t).exp_m1())
}

/// `(G_t(x - y) - G_t(x + y)) / x`, continuous at x = 0 where it equals `y G_t(y) / t`.
#[inline]
pub fn reflected_1d_over_x(t: f64, x: f64, y: f64) -> f64 {
    let z = x * y / t;
    let ratio = if z.abs() < 1e-8 {
        (y / t) * (1.0 - 0.5 * z)
    } else {
        -(-z).exp_m1() / x
    };
    gauss_1d(t, x - y) * ratio
}

/// Least-squares line `y = a + b x`; returns (a, b, residual sum of squares).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    (a, b, rss)
}
