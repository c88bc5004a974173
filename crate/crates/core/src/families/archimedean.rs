//! Archimedean pair-copula base functions (rotation 0): Clayton, Gumbel,
//! Frank and Joe. Everything is written in logs where powers can grow large;
//! inputs are assumed clamped away from the unit-square boundary.

pub mod clayton {
    pub fn cdf(u: f64, v: f64, theta: f64) -> f64 {
        let s = u.powf(-theta) + v.powf(-theta) - 1.0;
        s.powf(-1.0 / theta)
    }

    pub fn pdf(u: f64, v: f64, theta: f64) -> f64 {
        let s = u.powf(-theta) + v.powf(-theta) - 1.0;
        let ln_pdf = (1.0 + theta).ln() - (theta + 1.0) * (u.ln() + v.ln())
            - (2.0 + 1.0 / theta) * s.ln();
        ln_pdf.exp()
    }

    pub fn hfunc(u: f64, v: f64, theta: f64) -> f64 {
        let s = u.powf(-theta) + v.powf(-theta) - 1.0;
        let ln_h = -(theta + 1.0) * v.ln() - (1.0 + 1.0 / theta) * s.ln();
        ln_h.exp()
    }

    pub fn hinv(p: f64, v: f64, theta: f64) -> f64 {
        let t = (p * v.powf(theta + 1.0)).powf(-theta / (theta + 1.0));
        // Mathematically t + 1 - v^-theta = u^-theta >= 1; the subtraction
        // of two huge powers can cancel below 1 in floats.
        let base = (t + 1.0 - v.powf(-theta)).max(1.0);
        base.powf(-1.0 / theta).clamp(0.0, 1.0)
    }
}

pub mod gumbel {
    pub fn cdf(u: f64, v: f64, theta: f64) -> f64 {
        let (lu, lv) = (-u.ln(), -v.ln());
        let s = lu.powf(theta) + lv.powf(theta);
        (-s.powf(1.0 / theta)).exp()
    }

    pub fn pdf(u: f64, v: f64, theta: f64) -> f64 {
        let (lu, lv) = (-u.ln(), -v.ln());
        let s = lu.powf(theta) + lv.powf(theta);
        let w = s.powf(1.0 / theta);
        let ln_pdf = -w - (u.ln() + v.ln()) + (theta - 1.0) * (lu.ln() + lv.ln())
            + (2.0 / theta - 2.0) * s.ln()
            + (1.0 + (theta - 1.0) / w).ln();
        ln_pdf.exp()
    }

    pub fn hfunc(u: f64, v: f64, theta: f64) -> f64 {
        let (lu, lv) = (-u.ln(), -v.ln());
        let s = lu.powf(theta) + lv.powf(theta);
        let w = s.powf(1.0 / theta);
        let ln_h = -w + (theta - 1.0) * lv.ln() + (1.0 / theta - 1.0) * s.ln() - v.ln();
        ln_h.exp()
    }
}

pub mod frank {
    /// Below this the family is numerically indistinguishable from
    /// independence and is treated as such.
    pub const THETA_TINY: f64 = 1e-10;

    pub fn cdf(u: f64, v: f64, theta: f64) -> f64 {
        if theta.abs() < THETA_TINY {
            return u * v;
        }
        let num = (-theta * u).exp_m1() * (-theta * v).exp_m1();
        -(num / (-theta).exp_m1()).ln_1p() / theta
    }

    pub fn pdf(u: f64, v: f64, theta: f64) -> f64 {
        if theta.abs() < THETA_TINY {
            return 1.0;
        }
        let eg = (-theta).exp_m1(); // g - 1
        let ea = (-theta * u).exp_m1(); // a - 1
        let eb = (-theta * v).exp_m1(); // b - 1
        let denom = eg + ea * eb;
        -theta * eg * (ea + 1.0) * (eb + 1.0) / (denom * denom)
    }

    pub fn hfunc(u: f64, v: f64, theta: f64) -> f64 {
        if theta.abs() < THETA_TINY {
            return u;
        }
        let eg = (-theta).exp_m1();
        let ea = (-theta * u).exp_m1();
        let eb = (-theta * v).exp_m1();
        (eb + 1.0) * ea / (eg + ea * eb)
    }

    pub fn hinv(p: f64, v: f64, theta: f64) -> f64 {
        if theta.abs() < THETA_TINY {
            return p;
        }
        let eg = (-theta).exp_m1();
        let eb = (-theta * v).exp_m1();
        let b = eb + 1.0;
        // Rounding can push a - 1 to or below -1 at extreme arguments.
        let ea = (p * eg / (b - p * eb)).max(-1.0 + 1e-16);
        (-(ea).ln_1p() / theta).clamp(0.0, 1.0)
    }
}

pub mod joe {
    pub fn cdf(u: f64, v: f64, theta: f64) -> f64 {
        let s = s_term(u, v, theta);
        1.0 - s.powf(1.0 / theta)
    }

    pub fn pdf(u: f64, v: f64, theta: f64) -> f64 {
        let (ub, vb) = ((1.0 - u).max(1e-300), (1.0 - v).max(1e-300));
        let s = s_term(u, v, theta);
        let ln_pdf = (1.0 / theta - 2.0) * s.ln()
            + (theta - 1.0 + s).ln()
            + (theta - 1.0) * (ub.ln() + vb.ln());
        ln_pdf.exp()
    }

    pub fn hfunc(u: f64, v: f64, theta: f64) -> f64 {
        let (ub, vb) = ((1.0 - u).max(1e-300), (1.0 - v).max(1e-300));
        let a = ub.powf(theta);
        let s = s_term(u, v, theta);
        let ln_h = (1.0 / theta - 1.0) * s.ln() + (theta - 1.0) * vb.ln() + (1.0 - a).max(1e-300).ln();
        ln_h.exp()
    }

    fn s_term(u: f64, v: f64, theta: f64) -> f64 {
        let a = (1.0 - u).max(1e-300).powf(theta);
        let b = (1.0 - v).max(1e-300).powf(theta);
        (a + b - a * b).clamp(1e-300, 1.0)
    }
}
