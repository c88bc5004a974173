//! Kendall's tau to parameter maps and their inverses.
//!
//! Gaussian/Student-t and the one-parameter families with algebraic tau maps
//! use closed forms; Frank and Joe invert their integral/series formulas by
//! bisection to 1e-12.

use crate::error::{Result, VineError};
use crate::families::{Family, ParamBounds};

/// First-order Debye function D1(x) = (1/x) * int_0^x t/(e^t - 1) dt.
///
/// Bernoulli series for |x| <= 1, exponential tail sum otherwise; both
/// branches are accurate to ~1e-13.
pub fn debye1(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x < 0.0 {
        // D1(-x) = D1(x) + x/2.
        return debye1(-x) - x / 2.0;
    }
    if x <= 1.0 {
        let x2 = x * x;
        // 1 - x/4 + sum B_{2k} x^{2k} / ((2k)! (2k+1))
        let c = [
            1.0 / 36.0,
            -1.0 / 3600.0,
            1.0 / 211_680.0,
            -1.0 / 10_886_400.0,
            1.0 / 526_901_760.0,
            -691.0 / 16_999_766_784_000.0,
        ];
        let mut acc = 1.0 - x / 4.0;
        let mut p = x2;
        for ck in c {
            acc += ck * p;
            p *= x2;
        }
        acc
    } else {
        // (1/x) [pi^2/6 - sum_{k>=1} e^{-kx} (x/k + 1/k^2)]
        let mut tail = 0.0;
        for k in 1..200 {
            let kf = k as f64;
            let t = (-kf * x).exp() * (x / kf + 1.0 / (kf * kf));
            tail += t;
            if t < 1e-16 * (1.0 + tail.abs()) {
                break;
            }
        }
        (std::f64::consts::PI * std::f64::consts::PI / 6.0 - tail) / x
    }
}

/// Kendall's tau of the Frank copula as a function of theta.
pub fn frank_tau(theta: f64) -> f64 {
    if theta.abs() < 1e-12 {
        return 0.0;
    }
    1.0 - 4.0 / theta * (1.0 - debye1(theta))
}

/// Kendall's tau of the Joe copula: 1 - 4 sum_k 1/(k (theta k + 2)(theta (k-1) + 2)).
pub fn joe_tau(theta: f64) -> f64 {
    let mut sum = 0.0;
    let cap = 10_000usize;
    for k in 1..=cap {
        let kf = k as f64;
        sum += 1.0 / (kf * (theta * kf + 2.0) * (theta * (kf - 1.0) + 2.0));
    }
    // Integral tail estimate: terms decay like 1/(theta^2 k^3).
    let kf = cap as f64 + 0.5;
    sum += 1.0 / (2.0 * theta * theta * kf * kf);
    1.0 - 4.0 * sum
}

fn invert_increasing<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Kendall's tau implied by the main parameter (rotation 0; for Student-t
/// the map concerns the association parameter only).
pub fn param_to_tau(family: Family, param: f64) -> Result<f64> {
    let tau = match family {
        Family::Independence => 0.0,
        Family::Gaussian | Family::StudentT => 2.0 * param.asin() / std::f64::consts::PI,
        Family::Clayton => param / (param + 2.0),
        Family::Gumbel => 1.0 - 1.0 / param,
        Family::Frank => frank_tau(param),
        Family::Joe => joe_tau(param),
    };
    Ok(tau)
}

/// Main parameter achieving a given Kendall's tau (rotation 0).
pub fn tau_to_param(family: Family, tau: f64) -> Result<f64> {
    let bounds = ParamBounds::main(family);
    let (lo, hi) = (bounds.lo, bounds.hi);
    let out_of_range = |t: f64| {
        VineError::ParameterDomain(format!(
            "tau {t} outside attainable range for {family:?}"
        ))
    };
    match family {
        Family::Independence => {
            if tau.abs() > 1e-12 {
                return Err(out_of_range(tau));
            }
            Ok(0.0)
        }
        Family::Gaussian | Family::StudentT => {
            let rho = (std::f64::consts::PI * tau / 2.0).sin();
            if rho <= lo || rho >= hi {
                return Err(out_of_range(tau));
            }
            Ok(rho)
        }
        Family::Clayton => {
            if tau <= 0.0 {
                return Err(out_of_range(tau));
            }
            let theta = 2.0 * tau / (1.0 - tau);
            if theta > hi {
                return Err(out_of_range(tau));
            }
            Ok(theta)
        }
        Family::Gumbel => {
            if tau < 0.0 {
                return Err(out_of_range(tau));
            }
            let theta = 1.0 / (1.0 - tau);
            if theta > hi {
                return Err(out_of_range(tau));
            }
            Ok(theta)
        }
        Family::Frank => {
            if tau.abs() >= frank_tau(hi) {
                return Err(out_of_range(tau));
            }
            if tau.abs() < 1e-12 {
                return Ok(0.0);
            }
            let theta = invert_increasing(frank_tau, tau.abs(), 1e-10, hi);
            Ok(theta * tau.signum())
        }
        Family::Joe => {
            if tau < 0.0 || tau >= joe_tau(hi) {
                return Err(out_of_range(tau));
            }
            Ok(invert_increasing(joe_tau, tau, lo, hi))
        }
    }
}

/// Attainable tau interval for a family at rotation 0.
pub fn tau_range(family: Family) -> (f64, f64) {
    let b = ParamBounds::main(family);
    match family {
        Family::Independence => (0.0, 0.0),
        Family::Gaussian | Family::StudentT => {
            let m = 2.0 * b.hi.asin() / std::f64::consts::PI;
            (-m, m)
        }
        Family::Clayton => (0.0, b.hi / (b.hi + 2.0)),
        Family::Gumbel => (0.0, 1.0 - 1.0 / b.hi),
        Family::Frank => {
            let m = frank_tau(b.hi);
            (-m, m)
        }
        Family::Joe => (0.0, joe_tau(b.hi)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn debye_matches_quadrature() {
        for x in [0.3, 0.9, 1.0, 2.0, 7.5, 18.67, 40.0] {
            let quad = crate::numeric::integrate_gl64(|t| t / t.exp_m1(), 1e-12, x) / x;
            assert!((debye1(x) - quad).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn frank_18_67_has_tau_0_8() {
        // tau printed as 0.8 at two decimals corresponds to theta 18.67.
        let tau = frank_tau(18.67);
        assert!((tau - 0.80).abs() < 0.005, "tau={tau}");
        let theta = tau_to_param(Family::Frank, tau).unwrap();
        assert!((theta - 18.67).abs() < 1e-6, "theta={theta}");
    }

    #[test]
    fn gumbel_tau_0_63() {
        let theta = tau_to_param(Family::Gumbel, 0.63).unwrap();
        assert!((theta - 1.0 / 0.37).abs() < 1e-12);
        assert!((theta - 2.70).abs() < 0.01);
    }

    #[test]
    fn clayton_0_44_gives_tau_0_180() {
        let tau = param_to_tau(Family::Clayton, 0.44).unwrap();
        assert!((tau - 0.44 / 2.44).abs() < 1e-14);
    }

    #[test]
    fn joe_tau_matches_generator_integral() {
        assert!(joe_tau(1.0).abs() < 1e-9);
        // tau = 1 + 4 int_0^1 phi(t)/phi'(t) dt with the Joe generator.
        for theta in [1.3, 2.0, 4.0] {
            let integrand = |t: f64| {
                let s = 1.0 - (1.0 - t).powf(theta);
                s.ln() * s / (theta * (1.0 - t).powf(theta - 1.0))
            };
            let integral = crate::numeric::integrate_gl64(integrand, 0.0, 1e-3)
                + crate::numeric::integrate_gl64(integrand, 1e-3, 1.0);
            assert!(
                (joe_tau(theta) - (1.0 + 4.0 * integral)).abs() < 1e-6,
                "theta={theta}"
            );
        }
    }

    #[test]
    fn roundtrips_across_grid() {
        for family in [
            Family::Gaussian,
            Family::StudentT,
            Family::Clayton,
            Family::Gumbel,
            Family::Frank,
            Family::Joe,
        ] {
            for k in -9..=9 {
                let tau = k as f64 / 10.0;
                let (lo, hi) = tau_range(family);
                if tau <= lo || tau >= hi || tau.abs() < 1e-9 {
                    continue;
                }
                let p = tau_to_param(family, tau).unwrap();
                let back = param_to_tau(family, p).unwrap();
                assert!(
                    (back - tau).abs() < 1e-8,
                    "{family:?} tau={tau} p={p} back={back}"
                );
            }
        }
    }
}
