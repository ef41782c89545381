/// Exponential proximity kernel `exp(-distance^2 / width^2)`.
pub fn lime_kernel(distance: f64, width: f64) -> f64 {
    debug_assert!(width > 0.0);
    (-(distance * distance) / (width * width)).exp()
}

/// Binomial coefficient as a float; exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel weight `(M-1) / (C(M,s) s (M-s))` of a coalition with
/// `s` of `m` players present. The empty and full coalitions have
/// infinite weight and return `f64::INFINITY`.
pub fn shap_kernel(m: usize, s: usize) -> f64 {
    if s == 0 || s >= m {
        return f64::INFINITY;
    }
    (m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64)
}
