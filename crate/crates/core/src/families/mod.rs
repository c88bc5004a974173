//! Bivariate pair-copula families: densities, conditional distributions
//! (h-functions) and their inverses, Kendall's tau maps, maximum-likelihood
//! fitting and AIC-based family selection.
//!
//! All base families here are exchangeable; negative dependence for the
//! asymmetric Archimedean families (Clayton, Gumbel, Joe) is reached through
//! 90/270-degree rotations, while Gaussian, Student-t and Frank cover it
//! natively through their parameter sign.

mod archimedean;
pub mod fit;
mod gaussian;
mod student_t;
pub mod tau;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VineError};
use crate::{clamp_unit, UNIT_EPS};

pub use fit::{fit_mle, independence_p_value, independence_test, select_family, FitOutcome};
pub use tau::{param_to_tau, tau_range, tau_to_param};

/// Closed enumeration of the supported pair-copula families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[serde(rename = "indep")]
    Independence,
    Gaussian,
    #[serde(rename = "t")]
    StudentT,
    Clayton,
    Gumbel,
    Frank,
    Joe,
}

impl Family {
    /// All parametric families (excludes the independence copula).
    pub const PARAMETRIC: [Family; 6] = [
        Family::Gaussian,
        Family::StudentT,
        Family::Clayton,
        Family::Gumbel,
        Family::Frank,
        Family::Joe,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            Family::Independence => "indep",
            Family::Gaussian => "gaussian",
            Family::StudentT => "t",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
            Family::Joe => "joe",
        }
    }

    pub fn from_code(code: &str) -> Result<Family> {
        Ok(match code {
            "indep" => Family::Independence,
            "gaussian" => Family::Gaussian,
            "t" => Family::StudentT,
            "clayton" => Family::Clayton,
            "gumbel" => Family::Gumbel,
            "frank" => Family::Frank,
            "joe" => Family::Joe,
            other => {
                return Err(VineError::InvalidModel(format!(
                    "unknown family code {other:?}"
                )))
            }
        })
    }

    pub fn param_count(&self) -> usize {
        match self {
            Family::Independence => 0,
            Family::StudentT => 2,
            _ => 1,
        }
    }

    /// Families whose density is not radially symmetric; only these admit
    /// 90/180/270-degree rotations as genuinely new copulas.
    pub fn is_rotatable(&self) -> bool {
        matches!(self, Family::Clayton | Family::Gumbel | Family::Joe)
    }
}

/// Rotation of the copula density in 90-degree steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rotation {
    Deg0,
    Deg90,
    Deg180,
    Deg270,
}

impl Rotation {
    pub fn degrees(&self) -> u16 {
        match self {
            Rotation::Deg0 => 0,
            Rotation::Deg90 => 90,
            Rotation::Deg180 => 180,
            Rotation::Deg270 => 270,
        }
    }

    pub fn from_degrees(deg: u16) -> Result<Rotation> {
        Ok(match deg {
            0 => Rotation::Deg0,
            90 => Rotation::Deg90,
            180 => Rotation::Deg180,
            270 => Rotation::Deg270,
            other => {
                return Err(VineError::InvalidModel(format!(
                    "invalid rotation {other} (expected 0/90/180/270)"
                )))
            }
        })
    }

    /// Rotations by 90/270 flip the sign of the implied Kendall's tau.
    pub fn tau_sign(&self) -> f64 {
        match self {
            Rotation::Deg0 | Rotation::Deg180 => 1.0,
            Rotation::Deg90 | Rotation::Deg270 => -1.0,
        }
    }
}

/// Admissible range of a scalar copula parameter.
#[derive(Debug, Clone, Copy)]
pub struct ParamBounds {
    pub lo: f64,
    pub hi: f64,
}

impl ParamBounds {
    /// Bounds of the main parameter (rotation 0).
    pub fn main(family: Family) -> ParamBounds {
        match family {
            Family::Independence => ParamBounds { lo: 0.0, hi: 0.0 },
            Family::Gaussian | Family::StudentT => ParamBounds {
                lo: -0.9999,
                hi: 0.9999,
            },
            Family::Clayton => ParamBounds { lo: 1e-4, hi: 28.0 },
            Family::Gumbel => ParamBounds { lo: 1.0, hi: 20.0 },
            Family::Frank => ParamBounds { lo: -50.0, hi: 50.0 },
            Family::Joe => ParamBounds { lo: 1.0, hi: 30.0 },
        }
    }

    /// Degrees-of-freedom search range for the Student-t fit.
    pub fn student_df() -> ParamBounds {
        ParamBounds { lo: 2.05, hi: 30.0 }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Which argument of C(u, v) is the conditioning one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondVar {
    /// Condition on the first argument: hfunc = dC/du = P(V <= v | U = u).
    First,
    /// Condition on the second argument: hfunc = dC/dv = P(U <= u | V = v).
    Second,
}

/// A parametric bivariate copula: family, rotation and parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateCopula {
    family: Family,
    rotation: Rotation,
    params: Vec<f64>,
    /// Empirical Kendall's tau recorded at fit time, if any.
    pub fitted_tau: Option<f64>,
}

impl BivariateCopula {
    pub fn independence() -> BivariateCopula {
        BivariateCopula {
            family: Family::Independence,
            rotation: Rotation::Deg0,
            params: Vec::new(),
            fitted_tau: None,
        }
    }

    /// Validate parameters and rotation admissibility. Rotations of radially
    /// symmetric families are normalized: 180 degrees is the identity for
    /// Gaussian/Student-t/Frank, and a 90/270-degree Frank is the same copula
    /// with the parameter sign flipped.
    pub fn new(family: Family, rotation: Rotation, params: Vec<f64>) -> Result<BivariateCopula> {
        if params.len() != family.param_count() {
            return Err(VineError::ParameterDomain(format!(
                "{} expects {} parameter(s), got {}",
                family.code(),
                family.param_count(),
                params.len()
            )));
        }
        for p in &params {
            if !p.is_finite() {
                return Err(VineError::ParameterDomain(format!(
                    "non-finite parameter for {}",
                    family.code()
                )));
            }
        }
        let (family, rotation, params) = match family {
            Family::Independence => (family, Rotation::Deg0, params),
            Family::Gaussian | Family::StudentT => {
                let rho = params[0];
                if rho.abs() >= 1.0 {
                    return Err(VineError::ParameterDomain(format!(
                        "association {rho} outside (-1, 1)"
                    )));
                }
                if family == Family::StudentT && params[1] <= 2.0 {
                    return Err(VineError::ParameterDomain(format!(
                        "degrees of freedom {} must exceed 2",
                        params[1]
                    )));
                }
                match rotation {
                    Rotation::Deg0 | Rotation::Deg180 => (family, Rotation::Deg0, params),
                    _ => {
                        return Err(VineError::ParameterDomain(format!(
                            "90/270-degree rotations are not defined for {}; \
                             negative dependence uses a negative association",
                            family.code()
                        )))
                    }
                }
            }
            Family::Frank => {
                let b = ParamBounds::main(family);
                if !b.contains(params[0]) {
                    return Err(VineError::ParameterDomain(format!(
                        "frank parameter {} outside [{}, {}]",
                        params[0], b.lo, b.hi
                    )));
                }
                match rotation {
                    Rotation::Deg0 | Rotation::Deg180 => (family, Rotation::Deg0, params),
                    Rotation::Deg90 | Rotation::Deg270 => {
                        (family, Rotation::Deg0, vec![-params[0]])
                    }
                }
            }
            Family::Clayton | Family::Gumbel | Family::Joe => {
                let b = ParamBounds::main(family);
                if !b.contains(params[0]) {
                    return Err(VineError::ParameterDomain(format!(
                        "{} parameter {} outside [{}, {}]",
                        family.code(),
                        params[0],
                        b.lo,
                        b.hi
                    )));
                }
                (family, rotation, params)
            }
        };
        Ok(BivariateCopula {
            family,
            rotation,
            params,
            fitted_tau: None,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rotation(&self) -> Rotation {
        self.rotation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn is_independence(&self) -> bool {
        self.family == Family::Independence
    }

    /// The copula of the swapped argument pair. The base families are
    /// exchangeable, so only the 90/270 rotations trade places.
    pub fn transpose(&self) -> BivariateCopula {
        let rotation = match self.rotation {
            Rotation::Deg90 => Rotation::Deg270,
            Rotation::Deg270 => Rotation::Deg90,
            r => r,
        };
        BivariateCopula {
            family: self.family,
            rotation,
            params: self.params.clone(),
            fitted_tau: self.fitted_tau,
        }
    }

    /// Kendall's tau implied by the parameters, including the rotation sign.
    pub fn implied_tau(&self) -> Result<f64> {
        let base = tau::param_to_tau(self.family, *self.params.first().unwrap_or(&0.0))?;
        Ok(base * self.rotation.tau_sign())
    }

    fn base_pdf(&self, u: f64, v: f64) -> f64 {
        match self.family {
            Family::Independence => 1.0,
            Family::Gaussian => gaussian::pdf(u, v, self.params[0]),
            Family::StudentT => student_t::pdf(u, v, self.params[0], self.params[1]),
            Family::Clayton => archimedean::clayton::pdf(u, v, self.params[0]),
            Family::Gumbel => archimedean::gumbel::pdf(u, v, self.params[0]),
            Family::Frank => archimedean::frank::pdf(u, v, self.params[0]),
            Family::Joe => archimedean::joe::pdf(u, v, self.params[0]),
        }
    }

    fn base_cdf(&self, u: f64, v: f64) -> f64 {
        match self.family {
            Family::Independence => u * v,
            Family::Gaussian => gaussian::cdf(u, v, self.params[0]),
            Family::StudentT => student_t::cdf(u, v, self.params[0], self.params[1]),
            Family::Clayton => archimedean::clayton::cdf(u, v, self.params[0]),
            Family::Gumbel => archimedean::gumbel::cdf(u, v, self.params[0]),
            Family::Frank => archimedean::frank::cdf(u, v, self.params[0]),
            Family::Joe => archimedean::joe::cdf(u, v, self.params[0]),
        }
    }

    /// Base h(u|v) = dC/dv at rotation 0.
    fn base_hfunc(&self, u: f64, v: f64) -> f64 {
        match self.family {
            Family::Independence => u,
            Family::Gaussian => gaussian::hfunc(u, v, self.params[0]),
            Family::StudentT => student_t::hfunc(u, v, self.params[0], self.params[1]),
            Family::Clayton => archimedean::clayton::hfunc(u, v, self.params[0]),
            Family::Gumbel => archimedean::gumbel::hfunc(u, v, self.params[0]),
            Family::Frank => archimedean::frank::hfunc(u, v, self.params[0]),
            Family::Joe => archimedean::joe::hfunc(u, v, self.params[0]),
        }
    }

    /// Base inverse of u -> h(u|v); closed form where available, otherwise a
    /// monotone bisection on the clamped interval.
    fn base_hinv(&self, p: f64, v: f64) -> Result<f64> {
        match self.family {
            Family::Independence => Ok(p),
            Family::Gaussian => Ok(gaussian::hinv(p, v, self.params[0])),
            Family::StudentT => Ok(student_t::hinv(p, v, self.params[0], self.params[1])),
            Family::Clayton => Ok(archimedean::clayton::hinv(p, v, self.params[0])),
            Family::Frank => Ok(archimedean::frank::hinv(p, v, self.params[0])),
            Family::Gumbel | Family::Joe => self.bisect_hinv(p, v),
        }
    }

    fn bisect_hinv(&self, p: f64, v: f64) -> Result<f64> {
        let (mut lo, mut hi) = (UNIT_EPS, 1.0 - UNIT_EPS);
        if self.base_hfunc(lo, v) >= p {
            return Ok(lo);
        }
        if self.base_hfunc(hi, v) <= p {
            return Ok(hi);
        }
        let mut iterations = 0;
        while hi - lo > 1e-13 {
            iterations += 1;
            if iterations > 200 {
                // 200 bisections shrink any bracket below the tolerance;
                // reaching this means the h-function is not monotone.
                return Err(VineError::Numeric(format!(
                    "h-inverse bisection failed for {} at p={p}, v={v}",
                    self.family.code()
                )));
            }
            let mid = 0.5 * (lo + hi);
            if self.base_hfunc(mid, v) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Copula density with the rotation applied.
    pub fn pdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        let d = match self.rotation {
            Rotation::Deg0 => self.base_pdf(u, v),
            Rotation::Deg90 => self.base_pdf(v, 1.0 - u),
            Rotation::Deg180 => self.base_pdf(1.0 - u, 1.0 - v),
            Rotation::Deg270 => self.base_pdf(1.0 - v, u),
        };
        if d.is_finite() {
            d.max(0.0)
        } else {
            0.0
        }
    }

    /// Copula distribution function C(u, v) with the rotation applied.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        let c = match self.rotation {
            Rotation::Deg0 => self.base_cdf(u, v),
            Rotation::Deg90 => v - self.base_cdf(v, 1.0 - u),
            Rotation::Deg180 => u + v - 1.0 + self.base_cdf(1.0 - u, 1.0 - v),
            Rotation::Deg270 => u - self.base_cdf(1.0 - v, u),
        };
        c.clamp(0.0, 1.0)
    }

    /// Conditional distribution (h-function): the partial derivative of the
    /// rotated C(u, v) with respect to the conditioning argument.
    pub fn hfunc(&self, u: f64, v: f64, cond: CondVar) -> f64 {
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        let h = match (cond, self.rotation) {
            (CondVar::Second, Rotation::Deg0) => self.base_hfunc(u, v),
            (CondVar::Second, Rotation::Deg90) => 1.0 - self.base_hfunc(1.0 - u, v),
            (CondVar::Second, Rotation::Deg180) => 1.0 - self.base_hfunc(1.0 - u, 1.0 - v),
            (CondVar::Second, Rotation::Deg270) => self.base_hfunc(u, 1.0 - v),
            // The base families are exchangeable, so conditioning on the
            // first argument is the transposed copula: 90 and 270 swap.
            (CondVar::First, Rotation::Deg0) => self.base_hfunc(v, u),
            (CondVar::First, Rotation::Deg90) => self.base_hfunc(v, 1.0 - u),
            (CondVar::First, Rotation::Deg180) => 1.0 - self.base_hfunc(1.0 - v, 1.0 - u),
            (CondVar::First, Rotation::Deg270) => 1.0 - self.base_hfunc(1.0 - v, u),
        };
        h.clamp(0.0, 1.0)
    }

    /// Inverse h-function. `w` is always the conditioning value; returns the
    /// conditioned value x with `hfunc(x, w, Second) = p` (or the transposed
    /// equation under `CondVar::First`).
    pub fn hinv(&self, p: f64, w: f64, cond: CondVar) -> Result<f64> {
        let (p, w) = (clamp_unit(p), clamp_unit(w));
        let x = match (cond, self.rotation) {
            (CondVar::Second, Rotation::Deg0) => self.base_hinv(p, w)?,
            (CondVar::Second, Rotation::Deg90) => 1.0 - self.base_hinv(1.0 - p, w)?,
            (CondVar::Second, Rotation::Deg180) => 1.0 - self.base_hinv(1.0 - p, 1.0 - w)?,
            (CondVar::Second, Rotation::Deg270) => self.base_hinv(p, 1.0 - w)?,
            (CondVar::First, Rotation::Deg0) => self.base_hinv(p, w)?,
            (CondVar::First, Rotation::Deg90) => self.base_hinv(p, 1.0 - w)?,
            (CondVar::First, Rotation::Deg180) => 1.0 - self.base_hinv(1.0 - p, 1.0 - w)?,
            (CondVar::First, Rotation::Deg270) => 1.0 - self.base_hinv(1.0 - p, w)?,
        };
        Ok(clamp_unit(x))
    }

    /// Sum of log densities over paired observations.
    pub fn loglik(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(VineError::DimensionMismatch(format!(
                "loglik inputs {} vs {}",
                u.len(),
                v.len()
            )));
        }
        if self.is_independence() {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for (&a, &b) in u.iter().zip(v) {
            let d = self.pdf(a, b);
            acc += d.max(1e-300).ln();
        }
        Ok(acc)
    }
}


#[cfg(test)]
mod oracle_tests {
    use super::*;

    #[test]
    fn clayton_pdf_matches_mixed_partial_of_cdf() {
        // Central mixed finite difference of the closed-form CDF.
        let cop = BivariateCopula::new(Family::Clayton, Rotation::Deg0, vec![2.0]).unwrap();
        let (u, v) = (0.5, 0.5);
        let d = 1e-4;
        let mixed = (cop.cdf(u + d, v + d) - cop.cdf(u + d, v - d) - cop.cdf(u - d, v + d)
            + cop.cdf(u - d, v - d))
            / (4.0 * d * d);
        let pdf = cop.pdf(u, v);
        assert!((pdf - mixed).abs() < 1e-5, "pdf {pdf} vs mixed partial {mixed}");
    }

    #[test]
    fn frank_hfunc_matches_cdf_difference_quotient() {
        let cop = BivariateCopula::new(Family::Frank, Rotation::Deg0, vec![5.0]).unwrap();
        let d = 1e-5;
        let h = cop.hfunc(0.3, 0.8, CondVar::Second);
        let fd = (cop.cdf(0.3, 0.8 + d) - cop.cdf(0.3, 0.8 - d)) / (2.0 * d);
        assert!((h - fd).abs() < 1e-4, "h {h} vs finite difference {fd}");
    }

    #[test]
    fn clayton_hinv_roundtrip_at_spec_point() {
        let cop = BivariateCopula::new(Family::Clayton, Rotation::Deg0, vec![0.44]).unwrap();
        let u = cop.hinv(0.25, 0.6, CondVar::Second).unwrap();
        assert!((cop.hfunc(u, 0.6, CondVar::Second) - 0.25).abs() < 1e-8);
    }
}
