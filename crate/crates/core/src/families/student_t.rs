//! Student-t pair-copula base functions (rotation 0).

use statrs::function::gamma::ln_gamma;

use crate::numeric::{t_cdf, t_quantile};

/// Log density in terms of already-transformed t-scores `x`, `y`.
///
/// Splitting the quantile transform from the density lets the fitting loop
/// cache the transforms while the association parameter moves.
pub fn ln_pdf_scores(x: f64, y: f64, rho: f64, df: f64) -> f64 {
    let r2 = 1.0 - rho * rho;
    let quad = (x * x - 2.0 * rho * x * y + y * y) / (df * r2);
    // ln of bivariate t density minus the two marginal ln densities.
    let ln_biv = ln_gamma((df + 2.0) / 2.0)
        - ln_gamma(df / 2.0)
        - (df * std::f64::consts::PI).ln()
        - 0.5 * r2.ln()
        - 0.5 * (df + 2.0) * quad.ln_1p();
    let ln_marg = |t: f64| {
        ln_gamma((df + 1.0) / 2.0)
            - ln_gamma(df / 2.0)
            - 0.5 * (df * std::f64::consts::PI).ln()
            - 0.5 * (df + 1.0) * (t * t / df).ln_1p()
    };
    ln_biv - ln_marg(x) - ln_marg(y)
}

pub fn pdf(u: f64, v: f64, rho: f64, df: f64) -> f64 {
    let x = t_quantile(u, df);
    let y = t_quantile(v, df);
    ln_pdf_scores(x, y, rho, df).exp()
}

/// h(u|v) = T_{df+1}((x - rho*y) / s(y)) with the usual conditional scale.
pub fn hfunc(u: f64, v: f64, rho: f64, df: f64) -> f64 {
    let x = t_quantile(u, df);
    let y = t_quantile(v, df);
    let scale = ((df + y * y) * (1.0 - rho * rho) / (df + 1.0)).sqrt();
    t_cdf((x - rho * y) / scale, df + 1.0)
}

pub fn hinv(p: f64, v: f64, rho: f64, df: f64) -> f64 {
    let y = t_quantile(v, df);
    let scale = ((df + y * y) * (1.0 - rho * rho) / (df + 1.0)).sqrt();
    let x = t_quantile(p, df + 1.0) * scale + rho * y;
    t_cdf(x, df)
}

pub fn cdf(u: f64, v: f64, rho: f64, df: f64) -> f64 {
    crate::numeric::integrate_gl64(|s| hfunc(v, s, rho, df), 0.0, u)
}
