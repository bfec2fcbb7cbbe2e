//! Shooting ODE for the barrier construction: with `u = eta * v`,
//!
//! `-v'' - (2 eta'/eta - H) v' + eta^{p-1} r^{-s} v^p = 0`, `v(rho) = 0`, `v'(rho) = -kappa`,
//!
//! integrated leftward from `rho` towards the boundary `r = 0`.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::{
    geometric_samples, validity_radius, BarrierRole, BarrierShape, BarrierSpec, DistanceWindow,
    NamedBarrier, power_eps_bound, SIGN_TOL,
};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::integrator::{hermite, integrate, Outcome, Step, StepControl};
use crate::real::Real;
use crate::regime::ProblemParams;

/// Right endpoint used when none is given: half the slab width for the power
/// weight (no point of `(0, 1)` is farther from the boundary), and a point
/// inside the admissible range `(0, 1/e)` of the logarithmic one.
pub fn default_rho<T: Real>(mu: T) -> T {
    if mu < T::lit(0.25) {
        T::lit(0.5)
    } else {
        T::lit(0.2)
    }
}

pub const DEFAULT_V_MAX: f64 = 1e8;
pub const DEFAULT_V_MAX_SEQUENCE: [f64; 3] = [1e4, 1e6, 1e8];
/// Left end used when a run is meant to find a blow-up radius rather than to
/// reach a prescribed `r_min`.
pub const BLOWUP_R_MIN: f64 = 1e-10;

/// Correction exponent of the default `eta`: 1/2 when admissible, otherwise
/// half the admissible bound.
pub fn default_eta_eps<T: Real>(mu: T) -> T {
    let half = T::lit(0.5);
    if mu >= T::lit(0.25) {
        return half;
    }
    let bound = power_eps_bound(mu);
    if half < bound {
        half
    } else {
        half * bound
    }
}

/// Default weight: `r^{beta_-}(1 + r^eps)` for `mu < 1/4` and
/// `r^{1/2}(1 - log(1/r)^{-eps})` at `mu = 1/4`.
pub fn default_eta<T: Real>(mu: T, eps: T) -> Result<BarrierSpec<T>> {
    if mu > T::lit(0.25) {
        return Err(Error::InvalidBarrier(format!(
            "no positive super-harmonic weight exists for mu = {mu} > 1/4"
        )));
    }
    let kind = if mu == T::lit(0.25) { NamedBarrier::SmallSuper } else { NamedBarrier::LargeSuper };
    BarrierSpec::named(kind, mu, eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeProblem<T = f64> {
    params: ProblemParams<T>,
    eta: BarrierSpec<T>,
    h_bar: T,
    rho: T,
    kappa: T,
}

impl<T: Real> OdeProblem<T> {
    pub fn new(params: ProblemParams<T>, eta: BarrierSpec<T>, h_bar: T, rho: T, kappa: T) -> Result<Self> {
        if !(rho > T::zero() && rho < T::one()) {
            return Err(Error::InvalidParams(format!("rho must lie in (0, 1) (got {rho})")));
        }
        if !(kappa >= T::zero() && kappa.is_finite()) {
            return Err(Error::InvalidParams(format!("kappa must be >= 0 (got {kappa})")));
        }
        if !(h_bar >= T::zero() && h_bar.is_finite()) {
            return Err(Error::InvalidParams(format!("curvature bound must be >= 0 (got {h_bar})")));
        }
        if eta.role != BarrierRole::SuperHarmonic {
            return Err(Error::InvalidBarrier("eta must be a super-harmonic".into()));
        }
        let window = DistanceWindow::new((T::lit(1e-8) * rho).min(T::lit(1e-6)), rho, 400)?;
        let v = validity_radius(&eta, &params, &window);
        if v.first_failure.is_some() {
            return Err(Error::InvalidBarrier(format!(
                "eta is not super-harmonic on (0, {rho}]; sign fails at {}",
                v.first_failure.unwrap()
            )));
        }
        if window.samples().into_iter().any(|r| !(eta.eval(r).unwrap_or(T::zero()) > T::zero())) {
            return Err(Error::InvalidBarrier(format!("eta is not positive on (0, {rho}]")));
        }
        Ok(Self { params, eta, h_bar, rho, kappa })
    }

    /// Default weight, default `rho`, and `H` the curvature bound of `geometry`.
    pub fn standard(params: ProblemParams<T>, geometry: Geometry, kappa: T) -> Result<Self> {
        Self::with_defaults(params, geometry, default_rho(params.mu()), kappa)
    }

    /// Problem with the default weight and `H = sup` of the curvature term.
    pub fn with_defaults(params: ProblemParams<T>, geometry: Geometry, rho: T, kappa: T) -> Result<Self> {
        let eta = default_eta(params.mu(), default_eta_eps(params.mu()))?;
        Self::new(params, eta, geometry.curvature_bound(rho), rho, kappa)
    }

    pub fn params(&self) -> &ProblemParams<T> {
        &self.params
    }

    pub fn eta(&self) -> &BarrierSpec<T> {
        &self.eta
    }

    pub fn h_bar(&self) -> T {
        self.h_bar
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn with_kappa(&self, kappa: T) -> Result<Self> {
        if !(kappa >= T::zero() && kappa.is_finite()) {
            return Err(Error::InvalidParams(format!("kappa must be >= 0 (got {kappa})")));
        }
        Ok(Self { kappa, ..*self })
    }

    /// Same coefficients, possibly different `kappa`.
    pub fn same_coefficients(&self, other: &Self) -> bool {
        self.params == other.params && self.eta == other.eta && self.h_bar == other.h_bar && self.rho == other.rho
    }

    /// `v''` from the ODE.
    pub fn second_derivative(&self, r: T, v: T, v_dot: T) -> T {
        let j = self.eta.jet(r).expect("r inside (0, rho]");
        let drift = T::lit(2.0) * j.d1 / j.value - self.h_bar;
        let absorption =
            j.value.powf(self.params.p() - T::one()) * r.powf(-self.params.s()) * v.pos().powf(self.params.p());
        -drift * v_dot + absorption
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample<T = f64> {
    pub r: T,
    pub v: T,
    pub v_dot: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Terminal<T = f64> {
    ReachedRMin,
    BlowUp { r_kappa: T },
    StepFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<T = f64> {
    pub samples: Vec<TrajectorySample<T>>,
    pub terminal: Terminal<T>,
    pub r_min_target: T,
    #[serde(skip)]
    pub problem: OdeProblem<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn r_kappa(&self) -> Option<T> {
        match self.terminal {
            Terminal::BlowUp { r_kappa } => Some(r_kappa),
            _ => None,
        }
    }

    /// Smallest radius covered.
    pub fn r_end(&self) -> T {
        self.samples.last().map(|s| s.r).unwrap_or(self.problem.rho)
    }

    fn bracket(&self, r: T) -> Option<usize> {
        if self.samples.len() < 2 || r > self.samples[0].r || r < self.r_end() {
            return None;
        }
        // samples[i].r >= r >= samples[i+1].r
        let idx = self.samples.partition_point(|s| s.r > r);
        Some(idx.saturating_sub(1).min(self.samples.len() - 2))
    }

    /// Hermite interpolation of `v` at `r`, `None` outside the covered range.
    pub fn value_at(&self, r: T) -> Option<T> {
        let i = self.bracket(r)?;
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        Some(hermite(a.r, a.v, a.v_dot, b.r, b.v, b.v_dot, r))
    }

    pub fn slope_at(&self, r: T) -> Option<T> {
        let i = self.bracket(r)?;
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        let pr = &self.problem;
        let da = pr.second_derivative(a.r, a.v, a.v_dot);
        let db = pr.second_derivative(b.r, b.v, b.v_dot);
        Some(hermite(a.r, a.v_dot, da, b.r, b.v_dot, db, r))
    }

    /// Radius at which `v` first reaches `level`, if it does.
    pub fn crossing_radius(&self, level: T) -> Option<T> {
        let i = self.samples.iter().position(|s| s.v >= level)?;
        if i == 0 {
            return Some(self.samples[0].r);
        }
        let (a, b) = (self.samples[i - 1], self.samples[i]);
        let f = |r: T| hermite(a.r, a.v, a.v_dot, b.r, b.v, b.v_dot, r) - level;
        Some(bisect_root(f, b.r, a.r))
    }

    /// Trajectory of a closed-form function on the given decreasing radii.
    pub fn from_closed_form(problem: OdeProblem<T>, spec: &BarrierSpec<T>, radii: &[T]) -> Result<Self> {
        let mut samples = Vec::with_capacity(radii.len());
        for &r in radii {
            let j = spec.jet(r)?;
            samples.push(TrajectorySample { r, v: j.value, v_dot: j.d1 });
        }
        let r_min_target = radii.last().copied().unwrap_or(problem.rho);
        Ok(Self { samples, terminal: Terminal::ReachedRMin, r_min_target, problem })
    }
}

/// Root of a continuous `f` with `f(lo) >= 0 >= f(hi)` or the reverse.
fn bisect_root<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) >= T::zero()) == (flo >= T::zero()) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    T::lit(0.5) * (lo + hi)
}

/// Integrates leftward from `rho` to `r_min`, stopping when `v` exceeds `v_max`.
pub fn integrate_left<T: Real>(problem: &OdeProblem<T>, r_min: T, v_max: T) -> Result<Trajectory<T>> {
    integrate_left_with(problem, r_min, v_max, &StepControl::default())
}

pub fn integrate_left_with<T: Real>(
    problem: &OdeProblem<T>,
    r_min: T,
    v_max: T,
    control: &StepControl<T>,
) -> Result<Trajectory<T>> {
    let rho = problem.rho;
    if !(r_min > T::zero() && r_min < rho) {
        return Err(Error::Domain(format!("r_min must lie in (0, rho) (got {r_min})")));
    }
    if !(v_max > T::zero()) {
        return Err(Error::Domain(format!("v_max must be positive (got {v_max})")));
    }
    let start = TrajectorySample { r: rho, v: T::zero(), v_dot: -problem.kappa };
    if problem.kappa == T::zero() {
        let end = TrajectorySample { r: r_min, v: T::zero(), v_dot: T::zero() };
        return Ok(Trajectory {
            samples: vec![start, end],
            terminal: Terminal::ReachedRMin,
            r_min_target: r_min,
            problem: *problem,
        });
    }

    let mut samples = vec![start];
    let mut blow_up = None;
    let mut monotonicity = None;
    let rhs = |r: T, y: &[T; 2]| [y[1], problem.second_derivative(r, y[0], y[1])];
    let outcome = integrate(rhs, rho, [T::zero(), -problem.kappa], r_min, control, |step: &Step<T>| {
        if step.y1[0] > v_max {
            let r_cross = bisect_root(|r| step.interpolate(0, r) - v_max, step.t1, step.t0);
            let v_dot = step.interpolate(1, r_cross);
            samples.push(TrajectorySample { r: r_cross, v: v_max, v_dot });
            blow_up = Some(r_cross);
            return ControlFlow::Break(());
        }
        if !(step.y1[1] < T::zero()) {
            monotonicity = Some(step.t1);
            return ControlFlow::Break(());
        }
        samples.push(TrajectorySample { r: step.t1, v: step.y1[0], v_dot: step.y1[1] });
        ControlFlow::Continue(())
    });
    if let Some(r) = monotonicity {
        return Err(Error::Monotonicity { r: r.as_f64() });
    }
    let terminal = match (outcome, blow_up) {
        (_, Some(r_kappa)) => Terminal::BlowUp { r_kappa },
        (Outcome::Completed, None) => Terminal::ReachedRMin,
        _ => Terminal::StepFailure,
    };
    Ok(Trajectory { samples, terminal, r_min_target: r_min, problem: *problem })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowUpEstimate<T = f64> {
    /// Extrapolated blow-up radius.
    pub radius: T,
    pub error_estimate: T,
    /// Termination radius for each threshold of the sequence.
    pub termination_radii: Vec<T>,
}

/// Blow-up radius from the radii at which `v` crosses an increasing sequence
/// of thresholds, extrapolated with the local profile `r - R ~ V^{-(p-1)/2}`.
pub fn detect_blowup_radius<T: Real>(problem: &OdeProblem<T>, v_max_sequence: &[T]) -> Result<BlowUpEstimate<T>> {
    detect_blowup_radius_with(problem, v_max_sequence, &StepControl::default())
}

pub fn detect_blowup_radius_with<T: Real>(
    problem: &OdeProblem<T>,
    v_max_sequence: &[T],
    control: &StepControl<T>,
) -> Result<BlowUpEstimate<T>> {
    if v_max_sequence.len() < 2 || v_max_sequence.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Precondition("v_max sequence must be increasing with at least two entries".into()));
    }
    let r_min = T::lit(BLOWUP_R_MIN).min(problem.rho * T::lit(0.5));
    let top = *v_max_sequence.last().unwrap();
    let traj = integrate_left_with(problem, r_min, top, control)?;
    if traj.r_kappa().is_none() {
        return Err(Error::NotBlowingUp { r_min: r_min.as_f64() });
    }
    let radii: Vec<T> = v_max_sequence
        .iter()
        .map(|&v| traj.crossing_radius(v).expect("trajectory reached the top threshold"))
        .collect();
    let tol = T::lit(1e-9);
    if radii.windows(2).any(|w| w[1] > w[0] + tol * w[0]) {
        return Err(Error::Precondition("termination radii are not decreasing".into()));
    }
    let n = radii.len();
    let q = T::lit(0.5) * (problem.params.p() - T::one());
    let (v1, v2) = (v_max_sequence[n - 2], v_max_sequence[n - 1]);
    let (r1, r2) = (radii[n - 2], radii[n - 1]);
    let lambda = (v1 / v2).powf(q);
    let radius = ((r2 - lambda * r1) / (T::one() - lambda)).max(T::zero()).min(r2);
    Ok(BlowUpEstimate { radius, error_estimate: (radius - r2).abs(), termination_radii: radii })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepEntry<T = f64> {
    pub kappa: T,
    /// Blow-up radius, or the integration floor when no blow-up was seen.
    pub r_kappa: T,
    /// Whether `r_kappa` is a resolved blow-up radius (false: upper bound only).
    pub resolved: bool,
    /// `sup v` on `[r_star, rho]`, infinite when blow-up happens before `r_star`.
    pub sup_v: T,
}

/// Blow-up radius and tail supremum for each `kappa`, evaluated in parallel.
pub fn kappa_sweep<T: Real>(template: &OdeProblem<T>, kappas: &[T], r_star: T) -> Result<Vec<SweepEntry<T>>> {
    if kappas.windows(2).any(|w| !(w[0] > w[1])) || kappas.iter().any(|&k| !(k > T::zero())) {
        return Err(Error::Precondition("kappas must be positive and strictly decreasing".into()));
    }
    if !(r_star > T::zero() && r_star < template.rho) {
        return Err(Error::Domain(format!("r_star must lie in (0, rho) (got {r_star})")));
    }
    let r_min = T::lit(BLOWUP_R_MIN).min(r_star * T::lit(0.5));
    let seq: Vec<T> = DEFAULT_V_MAX_SEQUENCE.iter().map(|&v| T::lit(v)).collect();
    kappas
        .par_iter()
        .map(|&kappa| {
            let problem = template.with_kappa(kappa)?;
            let traj = integrate_left(&problem, r_min, *seq.last().unwrap())?;
            let sup_v = traj.value_at(r_star).unwrap_or(T::infinity());
            let (r_kappa, resolved) = match traj.terminal {
                Terminal::BlowUp { .. } => {
                    let est = detect_blowup_radius(&problem, &seq)?;
                    (est.radius, true)
                }
                _ => (r_min, false),
            };
            Ok(SweepEntry { kappa, r_kappa, resolved, sup_v })
        })
        .collect()
}

/// Shooting for `v(r_star) = eps`, `v(rho) = 0`. Returns `kappa(eps)` and the
/// trajectory on `[r_star, rho]`.
pub fn solve_bvp_eps<T: Real>(template: &OdeProblem<T>, r_star: T, eps: T) -> Result<(T, Trajectory<T>)> {
    if !(r_star > T::zero() && r_star < template.rho) {
        return Err(Error::Domain(format!("r_star must lie in (0, rho) (got {r_star})")));
    }
    if !(eps > T::zero()) {
        return Err(Error::Domain(format!("eps must be positive (got {eps})")));
    }
    // v(r_star) as a function of kappa; infinite when blow-up precedes r_star.
    let shoot = |kappa: T| -> Result<(T, Trajectory<T>)> {
        let traj = integrate_left(&template.with_kappa(kappa)?, r_star, T::lit(DEFAULT_V_MAX).max(eps * T::lit(1e4)))?;
        let v = match traj.terminal {
            Terminal::ReachedRMin => traj.samples.last().unwrap().v,
            Terminal::BlowUp { .. } => T::infinity(),
            Terminal::StepFailure => {
                return Err(Error::NonConvergence { iterations: 0, residual: f64::NAN });
            }
        };
        Ok((v, traj))
    };
    let mut lo = T::zero();
    let mut hi = T::one();
    let mut found = false;
    for _ in 0..60 {
        if shoot(hi)?.0 >= eps {
            found = true;
            break;
        }
        lo = hi;
        hi = hi * T::lit(2.0);
    }
    if !found {
        return Err(Error::BracketFailure { target: eps.as_f64() });
    }
    let mut best = shoot(hi)?;
    let mut best_kappa = hi;
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        let (v, traj) = shoot(mid)?;
        if v >= eps {
            hi = mid;
        } else {
            lo = mid;
        }
        let close = (v - eps).abs() <= T::lit(1e-10) * eps;
        if close || (v.is_finite() && (v - eps).abs() < (best.0 - eps).abs()) {
            best = (v, traj);
            best_kappa = mid;
        }
        if close || hi - lo <= T::lit(4.0) * T::epsilon() * hi {
            break;
        }
    }
    Ok((best_kappa, best.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComparisonMode {
    /// Ordered data and slopes at `rho`.
    Ivp,
    /// Ordered values at both ends of the common interval.
    Bvp,
}

/// Checks the ordering conclusion `u <= v` (strict for `Ivp`) on the common
/// range of two trajectories. Returns `true` when the hypotheses do not hold.
pub fn ode_comparison_check<T: Real>(u: &Trajectory<T>, v: &Trajectory<T>, mode: ComparisonMode) -> Result<bool> {
    if !u.problem.same_coefficients(&v.problem) {
        return Err(Error::IncompatibleProblems);
    }
    let hi = u.samples[0].r.min(v.samples[0].r);
    let lo = u.r_end().max(v.r_end());
    if !(lo < hi) {
        return Ok(true);
    }
    let mut radii: Vec<T> = u
        .samples
        .iter()
        .chain(v.samples.iter())
        .map(|s| s.r)
        .filter(|&r| r >= lo && r <= hi)
        .collect();
    radii.push(lo);
    radii.push(hi);
    radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
    radii.dedup();

    let tol = |a: T, b: T| T::lit(1e-9) * a.abs().max(b.abs());
    let at = |t: &Trajectory<T>, r: T| t.value_at(r).unwrap();
    let (u_hi, v_hi, u_lo, v_lo) = (at(u, hi), at(v, hi), at(u, lo), at(v, lo));
    match mode {
        ComparisonMode::Ivp => {
            let slope_u = u.slope_at(hi).unwrap();
            let slope_v = v.slope_at(hi).unwrap();
            if !(u_hi <= v_hi && slope_u > slope_v) {
                return Ok(true);
            }
            Ok(radii.iter().filter(|&&r| r < hi).all(|&r| {
                let (a, b) = (at(u, r), at(v, r));
                a < b || (a - b).abs() <= tol(a, b)
            }))
        }
        ComparisonMode::Bvp => {
            if !(u_hi <= v_hi + tol(u_hi, v_hi) && u_lo <= v_lo + tol(u_lo, v_lo)) {
                return Ok(true);
            }
            Ok(radii.iter().all(|&r| {
                let (a, b) = (at(u, r), at(v, r));
                a <= b + tol(a, b)
            }))
        }
    }
}

/// `gamma r^{s/(p-1) - beta_-} (r - R)^{-2/(p-1)}` with `gamma` doubled from 1
/// until it is a super-solution of the shooting ODE on `(R, rho]`.
pub fn ko_ode_supersolution<T: Real>(problem: &OdeProblem<T>, r_blow: T) -> Result<BarrierSpec<T>> {
    let params = problem.params;
    let roots = params
        .roots()
        .ok_or_else(|| Error::Regime("the shooting ODE needs mu <= 1/4".into()))?;
    if !(r_blow >= T::zero() && r_blow < problem.rho) {
        return Err(Error::Domain(format!("R must lie in [0, rho) (got {r_blow})")));
    }
    let pm1 = params.p() - T::one();
    let shape = BarrierShape::KoRegularized {
        d_power: params.s() / pm1 - roots.beta_minus,
        pole_power: -T::lit(2.0) / pm1,
        eps: r_blow,
    };
    let span = problem.rho - r_blow;
    let radii: Vec<T> = geometric_samples(T::lit(1e-6) * span, span, 1000)
        .into_iter()
        .map(|t| r_blow + t)
        .collect();
    let mut gamma = T::one();
    for _ in 0..=40 {
        let spec = BarrierSpec { shape, gamma, role: BarrierRole::SuperSolution };
        let ok = radii.iter().all(|&r| {
            let j = spec.jet(r).unwrap();
            let e = problem.eta.jet(r).unwrap();
            let drift = T::lit(2.0) * e.d1 / e.value - problem.h_bar;
            let absorption = e.value.powf(pm1) * r.powf(-params.s()) * j.value.powf(params.p());
            let res = -j.d2 - drift * j.d1 + absorption;
            let scale = j.d2.abs() + (drift * j.d1).abs() + absorption;
            res >= -T::lit(SIGN_TOL) * scale
        });
        if ok {
            return Ok(spec);
        }
        gamma = gamma * T::lit(2.0);
    }
    Err(Error::GammaCap { cap: 2f64.powi(40) })
}
