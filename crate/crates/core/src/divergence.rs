//! Bregman divergences generated by strictly convex scalar functions.
//!
//! For a generating function φ the pointwise divergence is
//! `d(a, b) = φ(a) − φ(b) − φ′(b)(a − b)` and the aggregate divergence is the
//! mean of `d` over paired entries. Eight generators are provided:
//!
//! | key             | φ(x)                              | domain |
//! |-----------------|-----------------------------------|--------|
//! | `logistic`      | x log x + (1−x) log(1−x)          | [0, 1] |
//! | `kl`            | x log(x + ε) − x                  | [0, ∞) |
//! | `beta:<β>`      | x^(1+β)/(β(1+β)) − x/β            | [0, ∞) |
//! | `itakura-saito` | −log x                            | (0, ∞) |
//! | `inverse`       | 1/x                               | (0, ∞) |
//! | `quadratic`     | (x² − x)/2                        | ℝ      |
//! | `exponential`   | exp x                             | ℝ      |
//! | `dual-logistic` | log(1 + exp x)                    | ℝ      |
//!
//! `0 · log 0` is taken to be 0 wherever it appears.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default offset added inside the logarithm of the KL generator.
pub const DEFAULT_KL_EPSILON: f64 = 1e-4;

/// Which member of the Bregman family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceKind {
    Logistic,
    Kl,
    Beta(f64),
    ItakuraSaito,
    Inverse,
    Quadratic,
    Exponential,
    DualLogistic,
}

/// A real interval, possibly open or unbounded at either end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Domain {
    const REALS: Domain = Domain { lo: f64::NEG_INFINITY, hi: f64::INFINITY, lo_closed: false, hi_closed: false };
    const NON_NEGATIVE: Domain = Domain { lo: 0.0, hi: f64::INFINITY, lo_closed: true, hi_closed: false };
    const POSITIVE: Domain = Domain { lo: 0.0, hi: f64::INFINITY, lo_closed: false, hi_closed: false };
    const UNIT: Domain = Domain { lo: 0.0, hi: 1.0, lo_closed: true, hi_closed: true };

    /// Membership with an absolute slack `tol` past each finite end.
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        if x.is_nan() {
            return false;
        }
        let above = if self.lo_closed { x >= self.lo - tol } else { x > self.lo - tol };
        let below = if self.hi_closed { x <= self.hi + tol } else { x < self.hi + tol };
        above && below && x.is_finite()
    }

    pub fn contains_interior(&self, x: f64) -> bool {
        x.is_finite() && x > self.lo && x < self.hi
    }

    /// Projects `x` into `[lo + margin, hi − margin]`, leaving infinite ends alone.
    pub fn clamp_inside(&self, x: f64, margin: f64) -> f64 {
        let mut y = x;
        if self.lo.is_finite() && y < self.lo + margin {
            y = self.lo + margin;
        }
        if self.hi.is_finite() && y > self.hi - margin {
            y = self.hi - margin;
        }
        y
    }
}

/// A strictly convex generating function φ together with its domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratingFunction {
    kind: DivergenceKind,
    epsilon: f64,
    tolerance: f64,
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl GeneratingFunction {
    pub fn new(kind: DivergenceKind) -> Result<Self> {
        if let DivergenceKind::Beta(beta) = kind {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::Config(format!("beta must be positive, got {beta}")));
            }
        }
        let epsilon = if kind == DivergenceKind::Kl { DEFAULT_KL_EPSILON } else { 0.0 };
        Ok(Self { kind, epsilon, tolerance: 0.0 })
    }

    pub fn logistic() -> Self {
        Self::new(DivergenceKind::Logistic).unwrap()
    }

    /// KL generator with the default ε = 1e-4.
    pub fn kl() -> Self {
        Self::new(DivergenceKind::Kl).unwrap()
    }

    /// KL generator with an explicit ε ≥ 0; ε = 0 is the textbook `x log x − x`.
    pub fn kl_with_epsilon(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {epsilon}")));
        }
        Ok(Self { kind: DivergenceKind::Kl, epsilon, tolerance: 0.0 })
    }

    pub fn beta(beta: f64) -> Result<Self> {
        Self::new(DivergenceKind::Beta(beta))
    }

    pub fn itakura_saito() -> Self {
        Self::new(DivergenceKind::ItakuraSaito).unwrap()
    }

    pub fn inverse() -> Self {
        Self::new(DivergenceKind::Inverse).unwrap()
    }

    pub fn quadratic() -> Self {
        Self::new(DivergenceKind::Quadratic).unwrap()
    }

    pub fn exponential() -> Self {
        Self::new(DivergenceKind::Exponential).unwrap()
    }

    pub fn dual_logistic() -> Self {
        Self::new(DivergenceKind::DualLogistic).unwrap()
    }

    /// One instance of every generator, with β = 0.5 and KL ε at its default.
    pub fn all_kinds() -> Vec<Self> {
        vec![
            Self::logistic(),
            Self::kl(),
            Self::beta(0.5).unwrap(),
            Self::itakura_saito(),
            Self::inverse(),
            Self::quadratic(),
            Self::exponential(),
            Self::dual_logistic(),
        ]
    }

    /// Absolute slack accepted past the domain boundary before `phi` errors.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance.max(0.0);
        self
    }

    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn domain(&self) -> Domain {
        match self.kind {
            DivergenceKind::Logistic => Domain::UNIT,
            DivergenceKind::Kl | DivergenceKind::Beta(_) => Domain::NON_NEGATIVE,
            DivergenceKind::ItakuraSaito | DivergenceKind::Inverse => Domain::POSITIVE,
            DivergenceKind::Quadratic | DivergenceKind::Exponential | DivergenceKind::DualLogistic => Domain::REALS,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DivergenceKind::Logistic => "logistic",
            DivergenceKind::Kl => "kl",
            DivergenceKind::Beta(_) => "beta",
            DivergenceKind::ItakuraSaito => "itakura-saito",
            DivergenceKind::Inverse => "inverse",
            DivergenceKind::Quadratic => "quadratic",
            DivergenceKind::Exponential => "exponential",
            DivergenceKind::DualLogistic => "dual-logistic",
        }
    }

    fn check(&self, x: f64) -> Result<f64> {
        let dom = self.domain();
        if !dom.contains(x, self.tolerance) {
            return Err(Error::domain(self.name(), x));
        }
        // values inside the slack are evaluated at the boundary
        Ok(x.clamp(dom.lo, dom.hi))
    }

    fn finite(&self, x: f64, value: f64) -> Result<f64> {
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::domain(self.name(), x))
        }
    }

    /// φ(x).
    pub fn phi(&self, x: f64) -> Result<f64> {
        let x = self.check(x)?;
        let v = match self.kind {
            DivergenceKind::Logistic => xlogy(x, x) + xlogy(1.0 - x, 1.0 - x),
            DivergenceKind::Kl => xlogy(x, x + self.epsilon) - x,
            DivergenceKind::Beta(b) => x.powf(1.0 + b) / (b * (1.0 + b)) - x / b,
            DivergenceKind::ItakuraSaito => -x.ln(),
            DivergenceKind::Inverse => 1.0 / x,
            DivergenceKind::Quadratic => (x * x - x) / 2.0,
            DivergenceKind::Exponential => x.exp(),
            DivergenceKind::DualLogistic => softplus(x),
        };
        self.finite(x, v)
    }

    /// φ′(x).
    pub fn phi_grad(&self, x: f64) -> Result<f64> {
        let x = self.check(x)?;
        let v = match self.kind {
            DivergenceKind::Logistic => x.ln() - (1.0 - x).ln(),
            DivergenceKind::Kl => {
                let s = x + self.epsilon;
                s.ln() + x / s - 1.0
            }
            DivergenceKind::Beta(b) => (x.powf(b) - 1.0) / b,
            DivergenceKind::ItakuraSaito => -1.0 / x,
            DivergenceKind::Inverse => -1.0 / (x * x),
            DivergenceKind::Quadratic => x - 0.5,
            DivergenceKind::Exponential => x.exp(),
            DivergenceKind::DualLogistic => sigmoid(x),
        };
        self.finite(x, v)
    }

    /// φ″(x).
    pub fn phi_hess(&self, x: f64) -> Result<f64> {
        let x = self.check(x)?;
        let v = match self.kind {
            DivergenceKind::Logistic => 1.0 / (x * (1.0 - x)),
            DivergenceKind::Kl => {
                let s = x + self.epsilon;
                1.0 / s + self.epsilon / (s * s)
            }
            DivergenceKind::Beta(b) => x.powf(b - 1.0),
            DivergenceKind::ItakuraSaito => 1.0 / (x * x),
            DivergenceKind::Inverse => 2.0 / (x * x * x),
            DivergenceKind::Quadratic => 1.0,
            DivergenceKind::Exponential => x.exp(),
            DivergenceKind::DualLogistic => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
        };
        self.finite(x, v)
    }

    /// Pointwise divergence `d(a, b)`; non-negative, zero iff `a == b`.
    pub fn d_phi(&self, a: f64, b: f64) -> Result<f64> {
        let a = self.check(a)?;
        let b = self.check(b)?;
        let v = match self.kind {
            DivergenceKind::Logistic => {
                if b <= 0.0 || b >= 1.0 {
                    if a == b {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    xlogy(a, a / b) + xlogy(1.0 - a, (1.0 - a) / (1.0 - b))
                }
            }
            DivergenceKind::Kl if self.epsilon == 0.0 => {
                if b == 0.0 {
                    if a == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    xlogy(a, a / b) - a + b
                }
            }
            DivergenceKind::Kl => self.taylor_gap(a, b)?,
            DivergenceKind::Beta(beta) => {
                if b == 0.0 {
                    self.taylor_gap(a, b)?
                } else if a == 0.0 {
                    b.powf(1.0 + beta) / (1.0 + beta)
                } else {
                    // b^(1+β) h(a/b), arranged so that β → 0 stays well conditioned
                    let r = a / b;
                    let t = r.ln();
                    let h = (r * (beta * t).exp_m1() / beta - (r - 1.0)) / (1.0 + beta);
                    b.powf(1.0 + beta) * h
                }
            }
            DivergenceKind::ItakuraSaito => {
                let r = a / b;
                r - r.ln() - 1.0
            }
            DivergenceKind::Inverse => (a - b) * (a - b) / (a * b * b),
            DivergenceKind::Quadratic => 0.5 * (a - b) * (a - b),
            DivergenceKind::Exponential => {
                let d = a - b;
                b.exp() * (d.exp_m1() - d)
            }
            DivergenceKind::DualLogistic => softplus(a) - softplus(b) - (a - b) * sigmoid(b),
        };
        let v = self.finite(b, v)?;
        // rounding can leave a tiny negative residue near a == b
        Ok(v.max(0.0))
    }

    /// `φ(a) − φ(b) − φ′(b)(a − b)` evaluated literally.
    pub fn taylor_gap(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self.phi(a)? - self.phi(b)? - self.phi_grad(b)? * (a - b))
    }

    /// Mean of `d(a_i, b_i)`.
    pub fn big_d(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
        }
        let mut sum = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            sum += self.d_phi(x, y)?;
        }
        Ok(sum / a.len() as f64)
    }

    /// Natural-parameter coefficients `(φ′(μ), φ(μ) − μ φ′(μ))` of the
    /// exponential family associated with φ.
    pub fn exp_family_coeffs(&self, mu: f64) -> Result<(f64, f64)> {
        if !self.domain().contains_interior(mu) {
            return Err(Error::domain(self.name(), mu));
        }
        let z1 = self.phi_grad(mu)?;
        let z2 = self.phi(mu)? - mu * z1;
        Ok((z1, z2))
    }
}

impl fmt::Display for GeneratingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DivergenceKind::Beta(b) => write!(f, "beta:{b}"),
            DivergenceKind::Kl if self.epsilon != DEFAULT_KL_EPSILON => {
                write!(f, "kl:{}", self.epsilon)
            }
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for GeneratingFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let parse_arg = |a: &str| a.parse::<f64>().map_err(|_| Error::Config(format!("bad divergence parameter in {s:?}")));
        match (head.to_ascii_lowercase().as_str(), arg) {
            ("logistic", None) => Ok(Self::logistic()),
            ("kl", None) => Ok(Self::kl()),
            ("kl", Some(a)) => Self::kl_with_epsilon(parse_arg(a)?),
            ("beta", Some(a)) => Self::beta(parse_arg(a)?),
            ("itakura-saito", None) => Ok(Self::itakura_saito()),
            ("inverse", None) => Ok(Self::inverse()),
            ("quadratic", None) => Ok(Self::quadratic()),
            ("exponential", None) => Ok(Self::exponential()),
            ("dual-logistic", None) => Ok(Self::dual_logistic()),
            _ => Err(Error::Config(format!("unknown divergence {s:?}"))),
        }
    }
}

impl Serialize for GeneratingFunction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GeneratingFunction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn phi_examples() {
        assert_eq!(GeneratingFunction::quadratic().phi(2.0).unwrap(), 1.0);
        let kl0 = GeneratingFunction::kl_with_epsilon(0.0).unwrap();
        assert_eq!(kl0.phi(1.0).unwrap(), -1.0);
        assert_eq!(GeneratingFunction::logistic().phi(0.0).unwrap(), 0.0);
        assert_eq!(GeneratingFunction::logistic().phi(1.0).unwrap(), 0.0);
    }

    #[test]
    fn phi_outside_domain_errors() {
        assert!(GeneratingFunction::logistic().phi(1.5).is_err());
        assert!(GeneratingFunction::kl().phi(-0.1).is_err());
        assert!(GeneratingFunction::itakura_saito().phi(0.0).is_err());
        assert!(GeneratingFunction::quadratic().phi(f64::NAN).is_err());
        let lax = GeneratingFunction::kl().with_tolerance(1e-3);
        assert_eq!(lax.phi(-1e-4).unwrap(), 0.0);
    }

    #[test]
    fn derivative_examples() {
        let q = GeneratingFunction::quadratic();
        assert_eq!(q.phi_grad(3.0).unwrap(), 2.5);
        assert_eq!(q.phi_hess(3.0).unwrap(), 1.0);
        let e = GeneratingFunction::exponential();
        assert_eq!(e.phi_grad(0.0).unwrap(), 1.0);
        assert_eq!(e.phi_hess(0.0).unwrap(), 1.0);
        let b1 = GeneratingFunction::beta(1.0).unwrap();
        for x in [0.1, 1.0, 7.5] {
            assert_eq!(b1.phi_hess(x).unwrap(), 1.0);
        }
    }

    #[test]
    fn unbounded_derivative_at_boundary_errors() {
        let kl0 = GeneratingFunction::kl_with_epsilon(0.0).unwrap();
        assert!(kl0.phi_grad(0.0).is_err());
        assert!(kl0.phi_hess(0.0).is_err());
        assert!(GeneratingFunction::logistic().phi_grad(1.0).is_err());
        // with the offset the derivative at zero is finite
        assert!(GeneratingFunction::kl().phi_grad(0.0).is_ok());
    }

    #[test]
    fn d_phi_examples() {
        assert_eq!(GeneratingFunction::quadratic().d_phi(3.0, 1.0).unwrap(), 2.0);
        for g in GeneratingFunction::all_kinds() {
            assert_eq!(g.d_phi(0.5, 0.5).unwrap(), 0.0, "{g}");
        }
        let l = GeneratingFunction::logistic().d_phi(1.0, 0.5).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
        let b1 = GeneratingFunction::beta(1.0).unwrap();
        assert!((b1.d_phi(3.0, 1.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_match_taylor_gap() {
        let pts = [0.2, 0.5, 0.9];
        for g in GeneratingFunction::all_kinds() {
            for &a in &pts {
                for &b in &pts {
                    let d = g.d_phi(a, b).unwrap();
                    let t = g.taylor_gap(a, b).unwrap();
                    assert!(close(d, t, 1e-12), "{g} a={a} b={b}: {d} vs {t}");
                }
            }
        }
    }

    #[test]
    fn big_d_examples() {
        let q = GeneratingFunction::quadratic();
        assert_eq!(q.big_d(&[3.0, 1.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(q.big_d(&[0.3, 4.0], &[0.3, 4.0]).unwrap(), 0.0);
        let kl0 = GeneratingFunction::kl_with_epsilon(0.0).unwrap();
        let v = kl0.big_d(&[2.0], &[1.0]).unwrap();
        assert!((v - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!(matches!(q.big_d(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
        assert!(q.big_d(&[], &[]).is_err());
    }

    #[test]
    fn exp_family_examples() {
        let (z1, z2) = GeneratingFunction::quadratic().exp_family_coeffs(1.0).unwrap();
        assert_eq!((z1, z2), (0.5, -0.5));
        let kl0 = GeneratingFunction::kl_with_epsilon(0.0).unwrap();
        assert_eq!(kl0.exp_family_coeffs(1.0).unwrap(), (0.0, -1.0));
        for g in GeneratingFunction::all_kinds() {
            let (z1, z2) = g.exp_family_coeffs(0.4).unwrap();
            assert_eq!(z2, g.phi(0.4).unwrap() - 0.4 * z1);
        }
        assert!(kl0.exp_family_coeffs(0.0).is_err());
    }

    #[test]
    fn affine_terms_do_not_change_divergence() {
        // (x² − x)/2 and x²/2 differ by an affine term
        let q = GeneratingFunction::quadratic();
        for (a, b) in [(3.0, 1.0), (-2.0, 0.5), (0.1, 0.1)] {
            let plain = 0.5 * a * a - 0.5 * b * b - b * (a - b);
            assert!((q.taylor_gap(a, b).unwrap() - plain).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_round_trip() {
        for key in ["logistic", "kl", "beta:0.5", "itakura-saito", "inverse", "quadratic", "exponential", "dual-logistic", "kl:0"] {
            let g: GeneratingFunction = key.parse().unwrap();
            assert_eq!(g.to_string(), key);
        }
        assert!("beta:-1".parse::<GeneratingFunction>().is_err());
        assert!("beta".parse::<GeneratingFunction>().is_err());
        assert!("hinge".parse::<GeneratingFunction>().is_err());
    }

    #[test]
    fn clamp_inside_domain() {
        let d = GeneratingFunction::logistic().domain();
        assert_eq!(d.clamp_inside(1.0, 1e-7), 1.0 - 1e-7);
        assert_eq!(d.clamp_inside(-3.0, 1e-7), 1e-7);
        assert_eq!(d.clamp_inside(0.3, 1e-7), 0.3);
        let r = GeneratingFunction::quadratic().domain();
        assert_eq!(r.clamp_inside(-1e300, 1e-7), -1e300);
    }
}
