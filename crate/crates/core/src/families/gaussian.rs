//! Gaussian pair-copula base functions (rotation 0).

use crate::numeric::{norm_cdf, norm_quantile};

pub fn pdf(u: f64, v: f64, rho: f64) -> f64 {
    let x = norm_quantile(u);
    let y = norm_quantile(v);
    let r2 = 1.0 - rho * rho;
    let expo = -(rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2);
    expo.exp() / r2.sqrt()
}

/// h(u|v) = Phi((x - rho*y) / sqrt(1 - rho^2)).
pub fn hfunc(u: f64, v: f64, rho: f64) -> f64 {
    let x = norm_quantile(u);
    let y = norm_quantile(v);
    norm_cdf((x - rho * y) / (1.0 - rho * rho).sqrt())
}

pub fn hinv(p: f64, v: f64, rho: f64) -> f64 {
    let y = norm_quantile(v);
    let x = norm_quantile(p) * (1.0 - rho * rho).sqrt() + rho * y;
    norm_cdf(x)
}

/// CDF by quadrature of the conditional distribution over the first
/// argument; accurate to ~1e-12 with the 64-point rule.
pub fn cdf(u: f64, v: f64, rho: f64) -> f64 {
    crate::numeric::integrate_gl64(|s| hfunc(v, s, rho), 0.0, u)
}
