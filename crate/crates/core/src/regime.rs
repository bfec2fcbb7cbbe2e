//! Threshold arithmetic: characteristic roots of the Hardy operator, critical
//! exponents and the existence/nonexistence verdict for large solutions.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::real::Real;

/// The triple `(mu, p, s)` of `-u'' - mu/delta^2 u + u^p/delta^s = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams<T>", bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ProblemParams<T = f64> {
    mu: T,
    p: T,
    s: T,
}

#[derive(Deserialize)]
struct RawParams<T> {
    mu: T,
    p: T,
    s: T,
}

impl<T: Real> TryFrom<RawParams<T>> for ProblemParams<T> {
    type Error = Error;

    fn try_from(raw: RawParams<T>) -> Result<Self> {
        ProblemParams::new(raw.mu, raw.p, raw.s)
    }
}

impl<T: Real> ProblemParams<T> {
    pub fn new(mu: T, p: T, s: T) -> Result<Self> {
        if !(mu.is_finite() && p.is_finite() && s.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "mu, p, s must be finite (got {mu}, {p}, {s})"
            )));
        }
        if p <= T::one() {
            return Err(Error::InvalidParams(format!("p must exceed 1 (got {p})")));
        }
        Ok(Self { mu, p, s })
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn s(&self) -> T {
        self.s
    }

    /// Keller-Osserman exponent `(s - 2)/(p - 1)`.
    pub fn ko_exponent(&self) -> T {
        (self.s - T::lit(2.0)) / (self.p - T::one())
    }

    pub fn roots(&self) -> Option<CharacteristicRoots<T>> {
        characteristic_roots(self.mu)
    }
}

/// Real roots `beta_- <= beta_+` of `beta (1 - beta) = mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRoots<T = f64> {
    pub beta_minus: T,
    pub beta_plus: T,
    pub degenerate: bool,
}

/// Extended real line used for the critical exponent `p*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal<T> {
    NegInfinity,
    Finite(T),
    PosInfinity,
}

impl<T: Real> ExtendedReal<T> {
    /// `x < self` on the extended line.
    pub fn exceeds(&self, x: T) -> bool {
        match *self {
            ExtendedReal::NegInfinity => false,
            ExtendedReal::Finite(v) => x < v,
            ExtendedReal::PosInfinity => true,
        }
    }

    /// `x > self` on the extended line.
    pub fn is_below(&self, x: T) -> bool {
        match *self {
            ExtendedReal::NegInfinity => true,
            ExtendedReal::Finite(v) => x > v,
            ExtendedReal::PosInfinity => false,
        }
    }
}

impl<T: Real + Serialize> Serialize for ExtendedReal<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::NegInfinity => serializer.serialize_str("-inf"),
            ExtendedReal::Finite(v) => v.serialize(serializer),
            ExtendedReal::PosInfinity => serializer.serialize_str("+inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    /// `mu > 1/4`: no positive local super-harmonics, no classification.
    NoSuperharmonics,
    Nonexistence,
    Existence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport<T: Real + Serialize = f64> {
    pub params: ProblemParams<T>,
    pub roots: Option<CharacteristicRoots<T>>,
    /// `beta_- (p - 1) + 2`; absent when `mu > 1/4`.
    pub threshold_s: Option<T>,
    pub ko_exponent: T,
    pub p_star: Option<ExtendedReal<T>>,
    pub mu_star: T,
    pub verdict: Verdict,
}

pub fn characteristic_roots<T: Real>(mu: T) -> Option<CharacteristicRoots<T>> {
    let quarter = T::lit(0.25);
    if !mu.is_finite() || mu > quarter {
        return None;
    }
    let half = T::lit(0.5);
    let disc = (quarter - mu).sqrt();
    Some(CharacteristicRoots {
        beta_minus: half - disc,
        beta_plus: half + disc,
        degenerate: mu == quarter,
    })
}

/// Critical Hardy coefficient `mu*(p, s) = 1/4 - ((p - 2s + 3)/(2(p - 1)))^2`.
///
/// Obtained by solving `beta_-(mu) = (s - 2)/(p - 1)`; meaningful as a
/// threshold when `s < (p + 3)/2`.
pub fn critical_mu<T: Real>(p: T, s: T) -> T {
    debug_assert!(p > T::one());
    let two = T::lit(2.0);
    let q = (p - two * s + T::lit(3.0)) / (two * (p - T::one()));
    T::lit(0.25) - q * q
}

/// Critical nonlinearity exponent `p* = 1 - (2 - s)/beta_-`, with the
/// conventions `+inf` (`beta_- = 0`, `s < 2`) and `-inf` (`beta_- = 0`, `s >= 2`).
pub fn critical_p<T: Real>(beta_minus: T, s: T) -> ExtendedReal<T> {
    let two = T::lit(2.0);
    if beta_minus == T::zero() {
        if s < two {
            ExtendedReal::PosInfinity
        } else {
            ExtendedReal::NegInfinity
        }
    } else {
        ExtendedReal::Finite(T::one() - (two - s) / beta_minus)
    }
}

pub fn existence_verdict<T: Real + Serialize>(params: ProblemParams<T>) -> RegimeReport<T> {
    let roots = params.roots();
    let ko_exponent = params.ko_exponent();
    let mu_star = critical_mu(params.p, params.s);
    match roots {
        None => RegimeReport {
            params,
            roots,
            threshold_s: None,
            ko_exponent,
            p_star: None,
            mu_star,
            verdict: Verdict::NoSuperharmonics,
        },
        Some(r) => {
            let threshold = r.beta_minus * (params.p - T::one()) + T::lit(2.0);
            // s == threshold is the critical case and belongs to nonexistence.
            let verdict = if params.s < threshold {
                Verdict::Existence
            } else {
                Verdict::Nonexistence
            };
            RegimeReport {
                params,
                roots,
                threshold_s: Some(threshold),
                ko_exponent,
                p_star: Some(critical_p(r.beta_minus, params.s)),
                mu_star,
                verdict,
            }
        }
    }
}

/// Verdict read off the critical exponent `p*`.
///
/// For `beta_- <= 0` existence holds iff `p < p*`, for `beta_- > 0` iff
/// `p > p*`; `p = p*` is the critical, nonexistent case.
pub fn verdict_from_p_star<T: Real>(params: ProblemParams<T>) -> Verdict {
    let Some(r) = params.roots() else {
        return Verdict::NoSuperharmonics;
    };
    let p_star = critical_p(r.beta_minus, params.s);
    let exists = if r.beta_minus <= T::zero() {
        p_star.exceeds(params.p)
    } else {
        p_star.is_below(params.p)
    };
    if exists {
        Verdict::Existence
    } else {
        Verdict::Nonexistence
    }
}

/// Verdict read off the critical Hardy coefficient `mu*`.
pub fn verdict_from_mu_star<T: Real>(params: ProblemParams<T>) -> Verdict {
    if params.mu > T::lit(0.25) {
        return Verdict::NoSuperharmonics;
    }
    let s_cap = (params.p + T::lit(3.0)) / T::lit(2.0);
    if params.s >= s_cap {
        return Verdict::Nonexistence;
    }
    if params.mu > critical_mu(params.p, params.s) {
        Verdict::Existence
    } else {
        Verdict::Nonexistence
    }
}

/// Signed distances to the threshold in each parameterization, positive on
/// the existence side: `(threshold_s - s, p-side margin, mu - mu*)`.
///
/// The `p` margin is `p* - p` when `beta_- <= 0` and `p - p*` otherwise
/// (infinite when `p*` is); the `mu` margin is `None` when `s >= (p+3)/2`.
pub fn threshold_margins<T: Real>(params: ProblemParams<T>) -> Option<(T, T, Option<T>)> {
    let r = params.roots()?;
    let threshold = r.beta_minus * (params.p - T::one()) + T::lit(2.0);
    let p_margin = match critical_p(r.beta_minus, params.s) {
        ExtendedReal::PosInfinity => T::infinity(),
        ExtendedReal::NegInfinity => T::neg_infinity(),
        ExtendedReal::Finite(ps) => {
            if r.beta_minus <= T::zero() {
                ps - params.p
            } else {
                params.p - ps
            }
        }
    };
    let s_cap = (params.p + T::lit(3.0)) / T::lit(2.0);
    let mu_margin = if params.s < s_cap {
        Some(params.mu - critical_mu(params.p, params.s))
    } else {
        None
    };
    Some((threshold - params.s, p_margin, mu_margin))
}
