//! Closed-form barrier functions of the distance `delta` and their residuals
//! in slab geometry (`|grad delta| = 1`, `Laplacian delta = 0`).
//!
//! Every family except the regularized Keller-Osserman profile is a finite sum
//! of terms `c * delta^g * log(1/delta)^q`, whose first and second derivatives
//! are evaluated in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::regime::{characteristic_roots, ProblemParams};

/// Relative tolerance used when checking the sign of a residual. The residual
/// is compared against the sum of magnitudes of its constituent terms.
pub const SIGN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BarrierFamily {
    PurePower,
    PowerCorrected,
    LogPower,
    LogCorrected,
    KoPower,
    KoRegularized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Correction {
    Plus,
    Minus,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BarrierRole {
    SubHarmonic,
    SuperHarmonic,
    SubSolution,
    SuperSolution,
}

impl BarrierRole {
    pub fn is_nonlinear(self) -> bool {
        matches!(self, BarrierRole::SubSolution | BarrierRole::SuperSolution)
    }

    pub fn is_super(self) -> bool {
        matches!(self, BarrierRole::SuperHarmonic | BarrierRole::SuperSolution)
    }
}

/// Shape of a barrier, without amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BarrierShape<T = f64> {
    /// `delta^beta`
    PurePower { beta: T },
    /// `delta^beta (1 +- delta^eps)`
    PowerCorrected { beta: T, eps: T, sign: Correction },
    /// `delta^{1/2} log(1/delta)^beta`
    LogPower { beta: T },
    /// `delta^{1/2} log(1/delta)^k (1 +- log(1/delta)^{-eps})`, `k` in {0, 1}
    LogCorrected { log_power: T, eps: T, sign: Correction },
    /// `delta^exponent`
    KoPower { exponent: T },
    /// `d^{d_power} (d - eps)^{pole_power}` with `d = delta`
    KoRegularized { d_power: T, pole_power: T, eps: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec<T = f64> {
    pub shape: BarrierShape<T>,
    pub gamma: T,
    pub role: BarrierRole,
}

/// The four named barriers of the linear operator, in either the power
/// (`mu < 1/4`) or logarithmic (`mu = 1/4`) form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NamedBarrier {
    /// `h-bar`: small positive super-harmonic.
    SmallSuper,
    /// `H-bar`: large positive super-harmonic.
    LargeSuper,
    /// `h-underbar`: small positive sub-harmonic.
    SmallSub,
    /// `H-underbar`: large positive sub-harmonic.
    LargeSub,
}

impl NamedBarrier {
    pub const ALL: [NamedBarrier; 4] = [
        NamedBarrier::SmallSuper,
        NamedBarrier::LargeSuper,
        NamedBarrier::SmallSub,
        NamedBarrier::LargeSub,
    ];
}

/// Value and first two derivatives with respect to `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
}

/// Upper bound on admissible power corrections: `min(1, sqrt(1 - 4 mu))`.
pub fn power_eps_bound<T: Real>(mu: T) -> T {
    let disc = (T::one() - T::lit(4.0) * mu).max(T::zero()).sqrt();
    disc.min(T::one())
}

#[derive(Clone, Copy)]
struct Term<T> {
    coef: T,
    power: T,
    log_power: T,
}

impl<T: Real> Term<T> {
    fn new(coef: T, power: T, log_power: T) -> Self {
        Self { coef, power, log_power }
    }

    fn jet(&self, delta: T, log_inv: T) -> Jet<T> {
        let (g, q) = (self.power, self.log_power);
        let one = T::one();
        if q == T::zero() {
            let base = self.coef * delta.powf(g - T::lit(2.0));
            return Jet {
                value: base * delta * delta,
                d1: base * delta * g,
                d2: base * g * (g - one),
            };
        }
        let lq = log_inv.powf(q);
        let lq1 = log_inv.powf(q - one);
        let lq2 = log_inv.powf(q - T::lit(2.0));
        let base = self.coef * delta.powf(g - T::lit(2.0));
        Jet {
            value: base * delta * delta * lq,
            d1: base * delta * (g * lq - q * lq1),
            d2: base
                * (g * (g - one) * lq + q * (one - T::lit(2.0) * g) * lq1 + q * (q - one) * lq2),
        }
    }

    /// Slab residual `-g'' - mu g / delta^2` and the magnitude of its parts.
    fn linear_residual(&self, delta: T, log_inv: T, mu: T) -> (T, T) {
        let (g, q) = (self.power, self.log_power);
        let one = T::one();
        let base = self.coef * delta.powf(g - T::lit(2.0));
        if q == T::zero() {
            let r = base * (g * (one - g) - mu);
            let scale = base.abs() * ((g * (one - g)).abs() + mu.abs());
            return (r, scale);
        }
        let lq = log_inv.powf(q);
        let lq1 = log_inv.powf(q - one);
        let lq2 = log_inv.powf(q - T::lit(2.0));
        let parts = [
            (g * (one - g) - mu) * lq,
            q * (T::lit(2.0) * g - one) * lq1,
            q * (one - q) * lq2,
        ];
        let r = base * (parts[0] + parts[1] + parts[2]);
        let scale = base.abs()
            * ((g * (one - g)).abs() * lq + mu.abs() * lq + parts[1].abs() + parts[2].abs());
        (r, scale)
    }
}

impl<T: Real> BarrierSpec<T> {
    pub fn new(shape: BarrierShape<T>, gamma: T, role: BarrierRole) -> Result<Self> {
        if !(gamma > T::zero() && gamma.is_finite()) {
            return Err(Error::InvalidBarrier(format!("amplitude must be positive (got {gamma})")));
        }
        match shape {
            BarrierShape::LogCorrected { log_power, eps, .. } => {
                if !(eps > T::zero() && eps < T::one()) {
                    return Err(Error::InvalidBarrier(format!(
                        "log correction exponent must lie in (0, 1) (got {eps})"
                    )));
                }
                if log_power != T::zero() && log_power != T::one() {
                    return Err(Error::InvalidBarrier("log_power must be 0 or 1".into()));
                }
            }
            BarrierShape::PowerCorrected { eps, .. } if !(eps > T::zero()) => {
                return Err(Error::InvalidBarrier(format!(
                    "power correction exponent must be positive (got {eps})"
                )));
            }
            BarrierShape::KoRegularized { eps, .. } if eps < T::zero() => {
                return Err(Error::InvalidBarrier("regularization shift must be >= 0".into()));
            }
            _ => {}
        }
        Ok(Self { shape, gamma, role })
    }

    pub fn pure_power(beta: T, role: BarrierRole) -> Self {
        Self { shape: BarrierShape::PurePower { beta }, gamma: T::one(), role }
    }

    pub fn log_power(beta: T, role: BarrierRole) -> Self {
        Self { shape: BarrierShape::LogPower { beta }, gamma: T::one(), role }
    }

    /// One of the four named barriers for the given `mu <= 1/4`.
    ///
    /// Power form for `mu < 1/4` requires `eps` in `(0, min(1, sqrt(1 - 4 mu)))`,
    /// the logarithmic form at `mu = 1/4` requires `eps` in `(0, 1)`.
    pub fn named(kind: NamedBarrier, mu: T, eps: T) -> Result<Self> {
        let roots = characteristic_roots(mu).ok_or_else(|| {
            Error::InvalidBarrier(format!("no positive harmonics exist for mu = {mu} > 1/4"))
        })?;
        let (sign, role) = match kind {
            NamedBarrier::SmallSuper => (Correction::Minus, BarrierRole::SuperHarmonic),
            NamedBarrier::LargeSuper => (Correction::Plus, BarrierRole::SuperHarmonic),
            NamedBarrier::SmallSub => (Correction::Plus, BarrierRole::SubHarmonic),
            NamedBarrier::LargeSub => (Correction::Minus, BarrierRole::SubHarmonic),
        };
        let large = matches!(kind, NamedBarrier::LargeSuper | NamedBarrier::LargeSub);
        let shape = if roots.degenerate {
            BarrierShape::LogCorrected {
                log_power: if large { T::one() } else { T::zero() },
                eps,
                sign,
            }
        } else {
            let bound = power_eps_bound(mu);
            if !(eps > T::zero() && eps < bound) {
                return Err(Error::InvalidBarrier(format!(
                    "power correction exponent must lie in (0, {bound}) for mu = {mu} (got {eps})"
                )));
            }
            let beta = if large { roots.beta_minus } else { roots.beta_plus };
            BarrierShape::PowerCorrected { beta, eps, sign }
        };
        Self::new(shape, T::one(), role)
    }

    pub fn family(&self) -> BarrierFamily {
        match self.shape {
            BarrierShape::PurePower { .. } => BarrierFamily::PurePower,
            BarrierShape::PowerCorrected { .. } => BarrierFamily::PowerCorrected,
            BarrierShape::LogPower { .. } => BarrierFamily::LogPower,
            BarrierShape::LogCorrected { .. } => BarrierFamily::LogCorrected,
            BarrierShape::KoPower { .. } => BarrierFamily::KoPower,
            BarrierShape::KoRegularized { .. } => BarrierFamily::KoRegularized,
        }
    }

    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_role(mut self, role: BarrierRole) -> Self {
        self.role = role;
        self
    }

    fn uses_log(&self) -> bool {
        matches!(self.shape, BarrierShape::LogPower { .. } | BarrierShape::LogCorrected { .. })
    }

    fn check_domain(&self, delta: T) -> Result<()> {
        if !(delta > T::zero()) || !delta.is_finite() {
            return Err(Error::Domain(format!("delta must be positive (got {delta})")));
        }
        if self.uses_log() && delta >= T::one() {
            return Err(Error::Domain(format!(
                "log barriers need delta < 1 (got {delta})"
            )));
        }
        if let BarrierShape::KoRegularized { eps, .. } = self.shape {
            if delta <= eps {
                return Err(Error::Domain(format!(
                    "regularized profile is defined for delta > {eps} (got {delta})"
                )));
            }
        }
        Ok(())
    }

    fn terms(&self) -> Vec<Term<T>> {
        let g = self.gamma;
        let zero = T::zero();
        let half = T::lit(0.5);
        let signed = |sign: Correction| match sign {
            Correction::Plus => g,
            Correction::Minus => -g,
            Correction::None => zero,
        };
        match self.shape {
            BarrierShape::PurePower { beta } => vec![Term::new(g, beta, zero)],
            BarrierShape::KoPower { exponent } => vec![Term::new(g, exponent, zero)],
            BarrierShape::PowerCorrected { beta, eps, sign } => {
                vec![Term::new(g, beta, zero), Term::new(signed(sign), beta + eps, zero)]
            }
            BarrierShape::LogPower { beta } => vec![Term::new(g, half, beta)],
            BarrierShape::LogCorrected { log_power, eps, sign } => vec![
                Term::new(g, half, log_power),
                Term::new(signed(sign), half, log_power - eps),
            ],
            BarrierShape::KoRegularized { .. } => unreachable!("handled separately"),
        }
    }

    fn regularized_jet(&self, delta: T) -> Jet<T> {
        let BarrierShape::KoRegularized { d_power, pole_power, eps } = self.shape else {
            unreachable!()
        };
        let y = delta - eps;
        let value = self.gamma * delta.powf(d_power) * y.powf(pole_power);
        let log_d = d_power / delta + pole_power / y;
        Jet {
            value,
            d1: value * log_d,
            d2: value * (log_d * log_d - d_power / (delta * delta) - pole_power / (y * y)),
        }
    }

    pub fn eval(&self, delta: T) -> Result<T> {
        Ok(self.jet(delta)?.value)
    }

    pub fn jet(&self, delta: T) -> Result<Jet<T>> {
        self.check_domain(delta)?;
        if matches!(self.shape, BarrierShape::KoRegularized { .. }) {
            return Ok(self.regularized_jet(delta));
        }
        let log_inv = if self.uses_log() { -delta.ln() } else { T::nan() };
        let mut acc = Jet { value: T::zero(), d1: T::zero(), d2: T::zero() };
        for t in self.terms() {
            let j = t.jet(delta, log_inv);
            acc.value = acc.value + j.value;
            acc.d1 = acc.d1 + j.d1;
            acc.d2 = acc.d2 + j.d2;
        }
        Ok(acc)
    }

    /// `-h'' - mu h / delta^2` together with the magnitude of its parts.
    pub fn linear_residual_scaled(&self, mu: T, delta: T) -> Result<(T, T)> {
        self.check_domain(delta)?;
        if matches!(self.shape, BarrierShape::KoRegularized { .. }) {
            let j = self.regularized_jet(delta);
            let hardy = mu * j.value / (delta * delta);
            return Ok((-j.d2 - hardy, j.d2.abs() + hardy.abs()));
        }
        let log_inv = if self.uses_log() { -delta.ln() } else { T::nan() };
        let mut res = T::zero();
        let mut scale = T::zero();
        for t in self.terms() {
            let (r, s) = t.linear_residual(delta, log_inv, mu);
            res = res + r;
            scale = scale + s;
        }
        Ok((res, scale))
    }

    /// Residual matching the claimed role (linear for harmonics, nonlinear for
    /// solutions) and its scale.
    pub fn role_residual(&self, params: &ProblemParams<T>, delta: T) -> Result<(T, T)> {
        if self.role.is_nonlinear() {
            let j = self.jet(delta)?;
            nonlinear_residual_scaled(j.value, j.d2, params, delta)
        } else {
            self.linear_residual_scaled(params.mu(), delta)
        }
    }

    /// Whether the residual at `delta` has the claimed sign, up to [`SIGN_TOL`].
    pub fn sign_holds(&self, params: &ProblemParams<T>, delta: T) -> Result<bool> {
        let (r, scale) = self.role_residual(params, delta)?;
        let slack = T::lit(SIGN_TOL) * scale;
        Ok(if self.role.is_super() { r >= -slack } else { r <= slack })
    }
}

/// Slab residual `-h'' - (mu/delta^2) h` of a barrier.
pub fn linear_residual<T: Real>(spec: &BarrierSpec<T>, params: &ProblemParams<T>, delta: T) -> Result<T> {
    Ok(spec.linear_residual_scaled(params.mu(), delta)?.0)
}

pub fn eval_barrier<T: Real>(spec: &BarrierSpec<T>, delta: T) -> Result<T> {
    spec.eval(delta)
}

/// `-u'' - (mu/delta^2) u + u^p / delta^s`.
pub fn nonlinear_residual<T: Real>(
    u_value: T,
    u_second_deriv: T,
    params: &ProblemParams<T>,
    delta: T,
) -> Result<T> {
    Ok(nonlinear_residual_scaled(u_value, u_second_deriv, params, delta)?.0)
}

pub fn nonlinear_residual_scaled<T: Real>(
    u_value: T,
    u_second_deriv: T,
    params: &ProblemParams<T>,
    delta: T,
) -> Result<(T, T)> {
    if u_value < T::zero() {
        return Err(Error::Domain(format!("u must be nonnegative (got {u_value})")));
    }
    if !(delta > T::zero()) {
        return Err(Error::Domain(format!("delta must be positive (got {delta})")));
    }
    let hardy = params.mu() * u_value / (delta * delta);
    let absorption = u_value.powf(params.p()) / delta.powf(params.s());
    let r = -u_second_deriv - hardy + absorption;
    Ok((r, u_second_deriv.abs() + hardy.abs() + absorption))
}

/// Sampling window `[delta_min, delta_max]` used for sign scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceWindow<T = f64> {
    delta_min: T,
    delta_max: T,
    n_samples: usize,
}

impl<T: Real> DistanceWindow<T> {
    pub fn new(delta_min: T, delta_max: T, n_samples: usize) -> Result<Self> {
        if !(delta_min > T::zero() && delta_min < delta_max && delta_max < T::one()) {
            return Err(Error::Domain(format!(
                "window needs 0 < delta_min < delta_max < 1 (got {delta_min}, {delta_max})"
            )));
        }
        if n_samples < 2 {
            return Err(Error::Domain("window needs at least two samples".into()));
        }
        Ok(Self { delta_min, delta_max, n_samples })
    }

    pub fn delta_min(&self) -> T {
        self.delta_min
    }

    pub fn delta_max(&self) -> T {
        self.delta_max
    }

    /// Geometrically spaced samples from `delta_min` to `delta_max`.
    pub fn samples(&self) -> Vec<T> {
        geometric_samples(self.delta_min, self.delta_max, self.n_samples)
    }
}

pub fn geometric_samples<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let (a, b) = (lo.ln(), hi.ln());
    let last = T::from_usize(n - 1).unwrap();
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * T::from_usize(i).unwrap() / last).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityRadius<T = f64> {
    /// Largest sampled radius up to which the claimed sign holds; 0 when it
    /// fails already at `delta_min`.
    pub rho0: T,
    /// First sample at which the sign failed, if any.
    pub first_failure: Option<T>,
}

pub fn validity_radius<T: Real>(
    spec: &BarrierSpec<T>,
    params: &ProblemParams<T>,
    window: &DistanceWindow<T>,
) -> ValidityRadius<T> {
    let mut rho0 = T::zero();
    for delta in window.samples() {
        match spec.sign_holds(params, delta) {
            Ok(true) => rho0 = delta,
            _ => return ValidityRadius { rho0, first_failure: Some(delta) },
        }
    }
    ValidityRadius { rho0, first_failure: None }
}

const KO_SAMPLES: usize = 1000;
const KO_DOUBLINGS: u32 = 20;

/// Slab super-solution `gamma d^{s/(p-1)} (d - eps)^{-2/(p-1)}` on `{delta > eps}`.
///
/// `gamma` starts at `max(1, b(b-1), 2(p+1)/(p-1)^2)^{1/(p-1)}` with
/// `b = (s-2)/(p-1)` (the last term is the sharp constant of the pole) and is
/// doubled until the nonlinear residual is nonnegative at every sample of the
/// domain, up to `2^20` times the start value. Samples reach down to a
/// distance `1e-6 min(1, eps)` from the pole.
pub fn ko_supersolution<T: Real>(params: &ProblemParams<T>, eps: T) -> Result<BarrierSpec<T>> {
    if !(eps >= T::zero() && eps < T::one()) {
        return Err(Error::Domain(format!("eps must lie in [0, 1) (got {eps})")));
    }
    let pm1 = params.p() - T::one();
    let b = params.ko_exponent();
    let pole = T::lit(2.0) * (params.p() + T::one()) / (pm1 * pm1);
    let gamma0 = (b * (b - T::one())).max(T::one()).max(pole).powf(T::one() / pm1);
    let shape = BarrierShape::KoRegularized {
        d_power: params.s() / pm1,
        pole_power: -T::lit(2.0) / pm1,
        eps,
    };
    let nearest = if eps > T::zero() { eps.min(T::one()) } else { T::one() };
    let offsets = geometric_samples(T::lit(1e-6) * nearest.min(T::one() - eps), T::one() - eps, KO_SAMPLES);
    let mut gamma = gamma0;
    for _ in 0..=KO_DOUBLINGS {
        let spec = BarrierSpec { shape, gamma, role: BarrierRole::SuperSolution };
        let ok = offsets
            .iter()
            .all(|&t| spec.sign_holds(params, eps + t).unwrap_or(false));
        if ok {
            return Ok(spec);
        }
        gamma = gamma * T::lit(2.0);
    }
    Err(Error::GammaCap { cap: (gamma0 * T::lit(2f64.powi(KO_DOUBLINGS as i32))).as_f64() })
}

/// Amplitude `gamma*` of the Keller-Osserman bound valid on every `{delta > eps}`
/// for the listed shifts (including `eps = 0`).
pub fn ko_gamma<T: Real>(params: &ProblemParams<T>, shifts: &[T]) -> Result<T> {
    let mut gamma = ko_supersolution(params, T::zero())?.gamma;
    for &eps in shifts {
        gamma = gamma.max(ko_supersolution(params, eps)?.gamma);
    }
    Ok(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(mu: f64, p: f64, s: f64) -> ProblemParams {
        ProblemParams::new(mu, p, s).unwrap()
    }

    /// Residual from a centered difference of the closed-form first derivative.
    fn fd_residual(spec: &BarrierSpec, mu: f64, delta: f64) -> f64 {
        let k = 1e-6 * delta;
        let d2 = (spec.jet(delta + k).unwrap().d1 - spec.jet(delta - k).unwrap().d1) / (2.0 * k);
        -d2 - mu * spec.eval(delta).unwrap() / (delta * delta)
    }

    #[test]
    fn eval_examples() {
        let h = BarrierSpec::pure_power(0.5, BarrierRole::SuperHarmonic);
        assert_abs_diff_eq!(h.eval(0.25).unwrap(), 0.5, epsilon = 1e-15);

        // H-bar with beta_- = 0 (mu = 0), eps = 1/2.
        let big = BarrierSpec::named(NamedBarrier::LargeSuper, 0.0, 0.5).unwrap();
        assert_abs_diff_eq!(big.eval(0.25).unwrap(), 1.5, epsilon = 1e-15);

        let lp = BarrierSpec::log_power(1.0, BarrierRole::SuperHarmonic);
        let d = (-1.0f64).exp();
        assert_abs_diff_eq!(lp.eval(d).unwrap(), (-0.5f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn domain_errors() {
        let lp = BarrierSpec::log_power(1.0, BarrierRole::SuperHarmonic);
        assert!(matches!(lp.eval(1.0), Err(Error::Domain(_))));
        assert!(matches!(lp.eval(0.0), Err(Error::Domain(_))));
        let pp = BarrierSpec::pure_power(1.0, BarrierRole::SuperHarmonic);
        assert!(pp.eval(-0.1).is_err());
        assert!(pp.eval(2.0).is_ok());
        assert!(nonlinear_residual(-1.0, 0.0, &params(0.0, 3.0, 0.0), 0.1).is_err());
    }

    #[test]
    fn power_correction_bound_enforced() {
        // sqrt(1 - 0.8) < 1/2, so eps = 1/2 is outside the admissible range at mu = 0.2.
        assert!(BarrierSpec::named(NamedBarrier::LargeSuper, 0.2, 0.5).is_err());
        assert!(BarrierSpec::named(NamedBarrier::LargeSuper, 0.2, 0.2).is_ok());
        assert!(BarrierSpec::named(NamedBarrier::LargeSuper, 0.3, 0.2).is_err());
        assert!(BarrierSpec::named(NamedBarrier::SmallSub, 0.25, 1.0).is_err());
    }

    #[test]
    fn residual_examples() {
        for mu in [-1.0, -0.25, 0.0, 0.2, 0.25] {
            let roots = characteristic_roots::<f64>(mu).unwrap();
            let h = BarrierSpec::pure_power(roots.beta_minus, BarrierRole::SuperHarmonic);
            let (r, scale) = h.linear_residual_scaled(mu, 0.1).unwrap();
            assert!(r.abs() <= 1e-12 * scale, "mu={mu} r={r}");
        }
        let p = params(0.0, 3.0, 0.0);
        let small_super = BarrierSpec::named(NamedBarrier::SmallSuper, 0.0, 0.5).unwrap();
        assert!(linear_residual(&small_super, &p, 0.01).unwrap() > 0.0);
        let q = params(0.25, 3.0, 0.0);
        let large_sub = BarrierSpec::named(NamedBarrier::LargeSub, 0.25, 0.5).unwrap();
        assert!(linear_residual(&large_sub, &q, 0.01).unwrap() < 0.0);
    }

    #[test]
    fn nonlinear_residual_examples() {
        let p = params(0.0, 3.0, 0.0);
        assert_eq!(nonlinear_residual(0.0, 0.0, &p, 0.3).unwrap(), 0.0);

        // u = sqrt(2)/delta: u'' = 2 sqrt(2)/delta^3 = u^3.
        let d = 0.1;
        let u = 2f64.sqrt() / d;
        let u2 = 2.0 * 2f64.sqrt() / (d * d * d);
        let (r, scale) = nonlinear_residual_scaled(u, u2, &p, d).unwrap();
        assert!(r.abs() <= 1e-12 * scale);

        // gamma delta^b with gamma^{p-1} = b(b-1), mu = 0.
        let pp = params(0.0, 2.5, -1.0);
        let b: f64 = pp.ko_exponent();
        let gamma = (b * (b - 1.0)).powf(1.0 / (pp.p() - 1.0));
        for d in [1e-4f64, 1e-2, 0.5] {
            let u = gamma * d.powf(b);
            let u2 = gamma * b * (b - 1.0) * d.powf(b - 2.0);
            let (r, scale) = nonlinear_residual_scaled(u, u2, &pp, d).unwrap();
            assert!(r.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn closed_form_matches_finite_differences() {
        let mut specs = vec![];
        for mu in [-1.0, 0.0, 0.2] {
            let eps = power_eps_bound(mu) * 0.5;
            for kind in NamedBarrier::ALL {
                specs.push((mu, BarrierSpec::named(kind, mu, eps).unwrap()));
            }
        }
        for kind in NamedBarrier::ALL {
            specs.push((0.25, BarrierSpec::named(kind, 0.25, 0.5).unwrap()));
        }
        specs.push((0.1, BarrierSpec::log_power(0.3, BarrierRole::SuperHarmonic)));
        let ko = ko_supersolution(&params(0.0, 3.0, 1.0), 0.05).unwrap();
        specs.push((0.0, ko));
        for (mu, spec) in specs {
            for delta in [1e-5, 1e-3, 0.07, 0.3, 0.8] {
                if spec.eval(delta).is_err() {
                    continue;
                }
                let (r, scale) = spec.linear_residual_scaled(mu, delta).unwrap();
                let fd = fd_residual(&spec, mu, delta);
                assert!(
                    (r - fd).abs() <= 1e-5 * scale,
                    "{:?} mu={mu} delta={delta}: {r} vs {fd}",
                    spec.shape
                );
                // First derivative against a difference of values.
                let k = 1e-4 * delta;
                let j = spec.jet(delta).unwrap();
                let fd1 = (spec.eval(delta + k).unwrap() - spec.eval(delta - k).unwrap()) / (2.0 * k);
                assert!((j.d1 - fd1).abs() <= 1e-6 * (j.d1.abs() + j.value.abs() / delta));
            }
        }
    }

    #[test]
    fn validity_radius_examples() {
        let window = DistanceWindow::new(1e-6, 0.5, 1000).unwrap();
        let p0 = params(0.0, 3.0, 0.0);
        let small_super = BarrierSpec::named(NamedBarrier::SmallSuper, 0.0, 0.5).unwrap();
        assert!(validity_radius(&small_super, &p0, &window).rho0 >= 0.2);

        let p2 = params(0.2, 3.0, 0.0);
        let r = characteristic_roots(0.2).unwrap();
        let mid = BarrierSpec::pure_power(0.5 * (r.beta_minus + r.beta_plus), BarrierRole::SuperHarmonic);
        let v = validity_radius(&mid, &p2, &window);
        assert_eq!(v.rho0, window.delta_max());
        assert!(v.first_failure.is_none());

        let outside = BarrierSpec::pure_power(1.1, BarrierRole::SuperHarmonic);
        let v = validity_radius(&outside, &p0, &window);
        assert_eq!(v.rho0, 0.0);
        assert_eq!(v.first_failure, Some(1e-6));
        // ... and it is a sub-harmonic instead.
        let v = validity_radius(&outside.with_role(BarrierRole::SubHarmonic), &p0, &window);
        assert_eq!(v.rho0, window.delta_max());
    }

    #[test]
    fn ko_supersolution_examples() {
        let p = params(0.0, 3.0, 0.0);
        let ko = ko_supersolution(&p, 0.0).unwrap();
        assert!(ko.gamma >= 2f64.sqrt() - 1e-15);
        assert_eq!(ko.family(), BarrierFamily::KoRegularized);
        for d in geometric_samples(1e-6, 0.999, 1000) {
            let (r, scale) = ko.role_residual(&p, d).unwrap();
            assert!(r >= -1e-10 * scale);
        }

        let ko = ko_supersolution(&p, 0.1).unwrap();
        assert!(ko.eval(0.1 + 1e-9).unwrap() > 1e8);
        assert!(ko.eval(0.1).is_err());

        let q = params(0.25, 2.0, 1.0);
        let ko = ko_supersolution(&q, 0.0).unwrap();
        for d in geometric_samples(1e-6, 0.999, 1000) {
            assert!(ko.sign_holds(&q, d).unwrap());
        }
    }

    #[test]
    fn named_barriers_have_claimed_sign_everywhere_in_slab() {
        for mu in [-1.0, -0.25, 0.0, 0.2, 0.25] {
            let eps = if mu < 0.25 { (0.5f64).min(0.5 * power_eps_bound(mu)) } else { 0.5 };
            let p = params(mu, 2.0, 0.0);
            let window = DistanceWindow::new(1e-6, 0.05, 1000).unwrap();
            for kind in NamedBarrier::ALL {
                let spec = BarrierSpec::named(kind, mu, eps).unwrap();
                let v = validity_radius(&spec, &p, &window);
                assert_eq!(v.rho0, 0.05, "mu={mu} {kind:?}");
            }
        }
    }
}
