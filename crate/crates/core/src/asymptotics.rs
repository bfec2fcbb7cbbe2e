//! Boundary behavior of computed profiles: log-log power fits, the
//! `delta^{1/2} log^k(1/delta)` model at `mu = 1/4`, and the S/ML/XXL taxonomy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial_solver::ExhaustionRun;
use crate::real::Real;
use crate::regime::{CharacteristicRoots, RegimeReport};

/// Fewest samples a fit accepts.
pub const MIN_FIT_SAMPLES: usize = 8;

/// Exponent tolerance of [`classify`].
pub const CLASS_TOL: f64 = 0.05;

/// Largest relative misfit for which [`classify`] assigns a class.
pub const MAX_CLASS_RESIDUAL: f64 = 0.05;

/// Largest exponent change under a one-decade window shift for a resolved fit.
pub const WINDOW_SENSITIVITY_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitModel {
    PurePower,
    PowerTimesLogPower,
}

/// `value ~ amplitude * delta^exponent * log(1/delta)^log_power` on `fit_window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit<T = f64> {
    pub amplitude: T,
    pub exponent: T,
    pub log_power: T,
    pub fit_window: (T, T),
    pub max_rel_residual: T,
    pub model: FitModel,
}

impl<T: Real> AsymptoticFit<T> {
    pub fn eval(&self, delta: T) -> T {
        let base = self.amplitude * delta.powf(self.exponent);
        match self.model {
            FitModel::PurePower => base,
            FitModel::PowerTimesLogPower => base * (-delta.ln()).powf(self.log_power),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassVerdict {
    S,
    ML,
    XXL,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionClass<T = f64> {
    pub verdict: ClassVerdict,
    pub evidence: AsymptoticFit<T>,
    pub roots: Option<CharacteristicRoots<T>>,
    pub ko_exponent: T,
}

/// Classification of the limit of an exhaustion family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LimitClass<T = f64> {
    /// The family collapses to zero; `relative_limit` is the extrapolated
    /// limit over the finest level at the probe points.
    Trivial { relative_limit: T },
    Nontrivial(SolutionClass<T>),
}

impl<T: Real> LimitClass<T> {
    pub fn is_trivial_or_small(&self) -> bool {
        matches!(
            self,
            LimitClass::Trivial { .. } | LimitClass::Nontrivial(SolutionClass { verdict: ClassVerdict::S, .. })
        )
    }
}

fn window_samples<T: Real>(samples: &[(T, T)], window: (T, T)) -> Result<Vec<(T, T)>> {
    if !(window.0 > T::zero() && window.0 < window.1) {
        return Err(Error::Precondition(format!("invalid fit window ({}, {})", window.0, window.1)));
    }
    let inside: Vec<(T, T)> = samples.iter().copied().filter(|&(d, _)| d >= window.0 && d <= window.1).collect();
    if inside.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_FIT_SAMPLES, found: inside.len() });
    }
    if let Some(&(d, v)) = inside.iter().find(|&&(_, v)| !(v > T::zero())) {
        return Err(Error::NonpositiveValues { delta: d.as_f64(), value: v.as_f64() });
    }
    Ok(inside)
}

/// Ordinary least squares `y = a + b x`.
fn least_squares<T: Real>(points: &[(T, T)]) -> (T, T) {
    let n = T::from_usize(points.len()).unwrap();
    let mx = points.iter().fold(T::zero(), |s, p| s + p.0) / n;
    let my = points.iter().fold(T::zero(), |s, p| s + p.1) / n;
    let sxy = points.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    let sxx = points.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.0 - mx));
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    (my - slope * mx, slope)
}

fn max_rel_residual<T: Real>(fit: &AsymptoticFit<T>, inside: &[(T, T)]) -> T {
    inside.iter().fold(T::zero(), |m, &(d, v)| {
        let f = fit.eval(d);
        m.max(((v - f) / f).abs())
    })
}

/// Least-squares power law in log-log coordinates over `window`.
pub fn fit_power<T: Real>(samples: &[(T, T)], window: (T, T)) -> Result<AsymptoticFit<T>> {
    let inside = window_samples(samples, window)?;
    let logs: Vec<(T, T)> = inside.iter().map(|&(d, v)| (d.ln(), v.ln())).collect();
    let (intercept, slope) = least_squares(&logs);
    let mut fit = AsymptoticFit {
        amplitude: intercept.exp(),
        exponent: slope,
        log_power: T::zero(),
        fit_window: window,
        max_rel_residual: T::zero(),
        model: FitModel::PurePower,
    };
    fit.max_rel_residual = max_rel_residual(&fit, &inside);
    Ok(fit)
}

/// Fit of `amplitude * delta^{1/2} * log(1/delta)^k`; the window must lie in `(0, 1)`.
pub fn fit_power_log<T: Real>(samples: &[(T, T)], window: (T, T)) -> Result<AsymptoticFit<T>> {
    if !(window.1 < T::one()) {
        return Err(Error::Precondition("log model needs a window inside (0, 1)".into()));
    }
    let inside = window_samples(samples, window)?;
    let half = T::lit(0.5);
    let logs: Vec<(T, T)> = inside.iter().map(|&(d, v)| ((-d.ln()).ln(), v.ln() - half * d.ln())).collect();
    let (intercept, slope) = least_squares(&logs);
    let mut fit = AsymptoticFit {
        amplitude: intercept.exp(),
        exponent: half,
        log_power: slope,
        fit_window: window,
        max_rel_residual: T::zero(),
        model: FitModel::PowerTimesLogPower,
    };
    fit.max_rel_residual = max_rel_residual(&fit, &inside);
    Ok(fit)
}

/// Default window `[10 delta_min, 1000 delta_min]`.
pub fn default_window<T: Real>(delta_min: T) -> (T, T) {
    (T::lit(10.0) * delta_min, T::lit(1000.0) * delta_min)
}

/// Exponent change when the window is moved one decade (towards the boundary
/// when enough samples exist there, otherwise away from it).
pub fn window_sensitivity<T: Real>(samples: &[(T, T)], window: (T, T)) -> Result<T> {
    let base = fit_power(samples, window)?;
    let ten = T::lit(10.0);
    let shifted = fit_power(samples, (window.0 / ten, window.1 / ten))
        .or_else(|_| fit_power(samples, (window.0 * ten, window.1 * ten)))?;
    Ok((shifted.exponent - base.exponent).abs())
}

pub fn classify<T: Real + Serialize>(fit: &AsymptoticFit<T>, report: &RegimeReport<T>) -> SolutionClass<T> {
    let tol = T::lit(CLASS_TOL);
    let b = report.ko_exponent;
    let verdict = if !(fit.max_rel_residual < T::lit(MAX_CLASS_RESIDUAL)) {
        ClassVerdict::Indeterminate
    } else {
        match (fit.model, report.roots) {
            (FitModel::PowerTimesLogPower, Some(_)) => {
                if (fit.log_power - T::one()).abs() <= tol {
                    ClassVerdict::ML
                } else if fit.log_power <= tol {
                    ClassVerdict::S
                } else {
                    ClassVerdict::Indeterminate
                }
            }
            (FitModel::PowerTimesLogPower, None) => ClassVerdict::Indeterminate,
            (FitModel::PurePower, roots) => {
                let e = fit.exponent;
                match roots {
                    Some(r) if e >= r.beta_plus - tol => ClassVerdict::S,
                    _ if (e - b).abs() <= tol => ClassVerdict::XXL,
                    Some(r) if !r.degenerate && (e - r.beta_minus).abs() <= tol => ClassVerdict::ML,
                    _ => ClassVerdict::Indeterminate,
                }
            }
        }
    };
    SolutionClass { verdict, evidence: *fit, roots: report.roots, ko_exponent: b }
}

/// Fit window for the limit of an exhaustion run: the default window of the
/// finest `eps`, moved up to the start of the extrapolated profile if needed.
pub fn limit_window<T: Real>(run: &ExhaustionRun<T>) -> (T, T) {
    let eps_min = run.levels.last().map(|l| l.eps).unwrap_or(T::zero());
    let (lo, hi) = default_window(eps_min);
    let start = run.limit.delta.first().copied().unwrap_or(lo);
    if start > lo {
        (start, start * (hi / lo))
    } else {
        (lo, hi)
    }
}

/// Trivial when the collapse estimate says so at `trivial_tol`, otherwise the
/// power-law class of the extrapolated profile on `window`.
pub fn classify_limit<T: Real + Serialize>(
    run: &ExhaustionRun<T>,
    report: &RegimeReport<T>,
    window: (T, T),
    trivial_tol: T,
) -> Result<LimitClass<T>> {
    if let Some(c) = &run.collapse {
        if c.is_trivial(trivial_tol) {
            return Ok(LimitClass::Trivial { relative_limit: c.relative_limit });
        }
    }
    let samples: Vec<(T, T)> = run.limit.delta.iter().copied().zip(run.limit.values.iter().copied()).collect();
    let fit = fit_power(&samples, window)?;
    Ok(LimitClass::Nontrivial(classify(&fit, report)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::geometric_samples;
    use crate::regime::{existence_verdict, ProblemParams};
    use proptest::prelude::*;

    fn sampled(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        geometric_samples(lo, hi, 200).into_iter().map(|d| (d, f(d))).collect()
    }

    #[test]
    fn exact_power() {
        let fit = fit_power(&sampled(|d| d.sqrt(), 1e-6, 1.0), (1e-5, 1e-1)).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-10);
        assert!((fit.amplitude - 1.0).abs() < 1e-10);
        assert!(fit.max_rel_residual < 1e-10);
    }

    #[test]
    fn perturbed_power() {
        let s = sampled(|d| 2f64.sqrt() / d * (1.0 + d), 1e-5, 1e-2);
        let fit = fit_power(&s, (1e-4, 1e-3)).unwrap();
        assert!((fit.exponent + 1.0).abs() < 0.01);
    }

    #[test]
    fn constant_samples() {
        let fit = fit_power(&sampled(|_| 3.0, 1e-4, 1.0), (1e-3, 0.5)).unwrap();
        assert!(fit.exponent.abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let s = sampled(|d| d, 1e-3, 1e-2);
        assert!(matches!(fit_power(&s, (1e-1, 1.0)), Err(Error::InsufficientSamples { .. })));
        let z = sampled(|d| d - 5e-3, 1e-3, 1e-2);
        assert!(matches!(fit_power(&z, (1e-3, 1e-2)), Err(Error::NonpositiveValues { .. })));
    }

    #[test]
    fn log_model() {
        let s = sampled(|d| d.sqrt() * (1.0 / d).ln(), 1e-7, 1e-3);
        let fit = fit_power_log(&s, (1e-6, 1e-4)).unwrap();
        assert!((fit.log_power - 1.0).abs() < 0.02);
        let s = sampled(|d| d.sqrt(), 1e-7, 1e-3);
        assert!(fit_power_log(&s, (1e-6, 1e-4)).unwrap().log_power.abs() < 1e-10);
    }

    fn power_fit(exponent: f64) -> AsymptoticFit {
        AsymptoticFit {
            amplitude: 1.0,
            exponent,
            log_power: 0.0,
            fit_window: (1e-4, 1e-2),
            max_rel_residual: 0.0,
            model: FitModel::PurePower,
        }
    }

    #[test]
    fn taxonomy() {
        let report = existence_verdict(ProblemParams::new(-0.75, 3.0, 0.0).unwrap());
        // beta_- = -1/2, beta_+ = 3/2, ko exponent -1.
        assert_eq!(classify(&power_fit(-1.0), &report).verdict, ClassVerdict::XXL);
        assert_eq!(classify(&power_fit(1.5), &report).verdict, ClassVerdict::S);
        assert_eq!(classify(&power_fit(-0.5), &report).verdict, ClassVerdict::ML);
        assert_eq!(classify(&power_fit(-0.75), &report).verdict, ClassVerdict::Indeterminate);
        let mut noisy = power_fit(-1.0);
        noisy.max_rel_residual = 0.2;
        assert_eq!(classify(&noisy, &report).verdict, ClassVerdict::Indeterminate);
    }

    #[test]
    fn log_taxonomy_at_quarter() {
        let report = existence_verdict(ProblemParams::new(0.25, 2.0, 1.0).unwrap());
        let mut fit = power_fit(0.5);
        fit.model = FitModel::PowerTimesLogPower;
        fit.log_power = 1.0;
        assert_eq!(classify(&fit, &report).verdict, ClassVerdict::ML);
        fit.log_power = 0.0;
        assert_eq!(classify(&fit, &report).verdict, ClassVerdict::S);
    }

    #[test]
    fn window_shift_of_exact_power_is_zero() {
        let s = sampled(|d| d.powf(-2.0 / 3.0), 1e-6, 1.0);
        assert!(window_sensitivity(&s, (1e-4, 1e-2)).unwrap() < 1e-10);
    }

    proptest! {
        #[test]
        fn pure_powers_are_exact(e in -3.0f64..3.0, a in 0.1f64..10.0) {
            let fit = fit_power(&sampled(|d| a * d.powf(e), 1e-6, 1.0), (1e-5, 1e-1)).unwrap();
            prop_assert!((fit.exponent - e).abs() < 1e-10);
            prop_assert!(fit.max_rel_residual < 1e-10);
        }

        #[test]
        fn scale_invariant_verdict(e in -3.0f64..3.0, k in 1e-3f64..1e3, mu in -2.0f64..0.25, p in 1.2f64..5.0, s in -1.0f64..4.0) {
            let report = existence_verdict(ProblemParams::new(mu, p, s).unwrap());
            let a = fit_power(&sampled(|d| d.powf(e), 1e-5, 1.0), (1e-4, 1e-1)).unwrap();
            let b = fit_power(&sampled(|d| k * d.powf(e), 1e-5, 1.0), (1e-4, 1e-1)).unwrap();
            prop_assert_eq!(classify(&a, &report).verdict, classify(&b, &report).verdict);
        }
    }
}
