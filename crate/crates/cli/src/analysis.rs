//! Convergence-rate fits and extrapolation.

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Limit of a sequence `v_i ≈ v* + C h_i^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub limit: f64,
    pub order: f64,
}

/// Richardson extrapolation from three levels with decreasing `h`.
///
/// The observed order solves
/// `(v1 - v2) / (v2 - v3) = (h1^p - h2^p) / (h2^p - h3^p)` by bisection on
/// `p ∈ [0.05, 20]`. Returns `None` for non-monotone data or when no order in
/// that range fits.
pub fn richardson(h: [f64; 3], v: [f64; 3]) -> Option<Extrapolation> {
    let (d1, d2) = (v[0] - v[1], v[1] - v[2]);
    if d2 == 0.0 {
        return (d1 == 0.0).then_some(Extrapolation {
            limit: v[2],
            order: f64::INFINITY,
        });
    }
    let ratio = d1 / d2;
    if !(ratio > 0.0) || !(h[0] > h[1] && h[1] > h[2]) {
        return None;
    }
    let g = |p: f64| (h[0].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[2].powf(p)) - ratio;
    let (mut lo, mut hi) = (0.05, 20.0);
    if g(lo) * g(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let (a, b) = (h[1].powf(p), h[2].powf(p));
    Some(Extrapolation {
        limit: v[2] - d2 * b / (a - b),
        order: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let h = [0.1, 0.05, 0.025, 0.0125];
        let e: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
        assert!((loglog_slope(&h, &e) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn richardson_recovers_limit_and_order() {
        let f = |h: f64| 2.5 - 0.8 * h.powf(1.6);
        let h = [0.4, 0.23, 0.1];
        let ex = richardson(h, h.map(f)).unwrap();
        assert!((ex.limit - 2.5).abs() < 1e-10, "{ex:?}");
        assert!((ex.order - 1.6).abs() < 1e-8);
    }

    #[test]
    fn richardson_rejects_oscillation() {
        assert!(richardson([0.4, 0.2, 0.1], [1.0, 1.2, 1.1]).is_none());
    }
}
