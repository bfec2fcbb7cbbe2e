//! Adaptive Dormand-Prince 5(4) integration of two-component first order
//! systems, with cubic Hermite interpolation inside accepted steps.

use std::ops::ControlFlow;

use crate::real::Real;

pub type State<T> = [T; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl<T = f64> {
    pub rtol: T,
    pub atol: T,
    /// Upper bound on `|h| / |t|`; keeps steps small next to the singular point `t = 0`.
    pub max_step_fraction: T,
    pub max_steps: usize,
}

impl<T: Real> Default for StepControl<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-9),
            atol: T::lit(1e-12),
            max_step_fraction: T::lit(0.1),
            max_steps: 2_000_000,
        }
    }
}

impl<T: Real> StepControl<T> {
    pub fn halved(&self) -> Self {
        let half = T::lit(0.5);
        Self { rtol: self.rtol * half, atol: self.atol * half, ..*self }
    }

    fn effective_rtol(&self) -> T {
        self.rtol.max(T::lit(64.0) * T::epsilon())
    }
}

/// Accepted step as seen by the observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step<T> {
    pub t0: T,
    pub y0: State<T>,
    pub f0: State<T>,
    pub t1: T,
    pub y1: State<T>,
    pub f1: State<T>,
}

impl<T: Real> Step<T> {
    /// Cubic Hermite interpolant of component `k` at `t`.
    pub fn interpolate(&self, k: usize, t: T) -> T {
        hermite(self.t0, self.y0[k], self.f0[k], self.t1, self.y1[k], self.f1[k], t)
    }
}

pub fn hermite<T: Real>(t0: T, y0: T, d0: T, t1: T, y1: T, d1: T, t: T) -> T {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = two * s3 - three * s2 + one;
    let h10 = s3 - two * s2 + s;
    let h01 = -two * s3 + three * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Reached the end point.
    Completed,
    /// The observer asked to stop.
    Stopped,
    /// Step size underflow, non-finite state, or step budget exhausted.
    Failed,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth and embedded fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<T: Real>(y: &State<T>, h: T, terms: &[(f64, &State<T>)]) -> State<T> {
    let mut out = *y;
    for k in 0..2 {
        let mut acc = T::zero();
        for (c, v) in terms {
            acc = acc + T::lit(*c) * v[k];
        }
        out[k] = out[k] + h * acc;
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction). The final
/// step lands exactly on `t_end`. `observer` sees every accepted step.
pub fn integrate<T, F, O>(
    mut f: F,
    t0: T,
    y0: State<T>,
    t_end: T,
    control: &StepControl<T>,
    mut observer: O,
) -> Outcome
where
    T: Real,
    F: FnMut(T, &State<T>) -> State<T>,
    O: FnMut(&Step<T>) -> ControlFlow<()>,
{
    let dir = if t_end >= t0 { T::one() } else { -T::one() };
    let span = (t_end - t0).abs();
    if span == T::zero() {
        return Outcome::Completed;
    }
    let rtol = control.effective_rtol();
    let atol = control.atol;
    let max_h = |t: T| {
        let cap = control.max_step_fraction * t.abs();
        if cap > T::zero() {
            cap
        } else {
            span
        }
    };

    let mut t = t0;
    let mut y = y0;
    let mut fy = f(t, &y);
    let mut h = (span * T::lit(1e-3)).min(max_h(t));
    let min_h = T::lit(16.0) * T::epsilon();

    for _ in 0..control.max_steps {
        let remaining = (t_end - t).abs();
        let mut last = false;
        h = h.min(max_h(t));
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h <= min_h * t.abs().max(T::min_positive_value()) {
            return Outcome::Failed;
        }
        let hs = h * dir;
        let k1 = fy;
        let k2 = f(t + hs * T::lit(C2), &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(t + hs * T::lit(C3), &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + hs * T::lit(C4), &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + hs * T::lit(C5),
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + hs,
            &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let t_new = if last { t_end } else { t + hs };
        let k7 = f(t_new, &y_new);

        let mut err = T::zero();
        let mut finite = true;
        for k in 0..2 {
            let e = hs
                * (T::lit(E1) * k1[k]
                    + T::lit(E3) * k3[k]
                    + T::lit(E4) * k4[k]
                    + T::lit(E5) * k5[k]
                    + T::lit(E6) * k6[k]
                    + T::lit(E7) * k7[k]);
            let sc = atol + rtol * y[k].abs().max(y_new[k].abs());
            let ratio = (e / sc).abs();
            finite &= y_new[k].is_finite() && k7[k].is_finite() && ratio.is_finite();
            err = err.max(ratio);
        }
        if !finite {
            h = h * T::lit(0.25);
            continue;
        }
        if err <= T::one() {
            let step = Step { t0: t, y0: y, f0: fy, t1: t_new, y1: y_new, f1: k7 };
            t = t_new;
            y = y_new;
            fy = k7;
            if observer(&step).is_break() {
                return Outcome::Stopped;
            }
            if last {
                return Outcome::Completed;
            }
            let factor = if err == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0))
            };
            h = h * factor;
        } else {
            let factor = (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2));
            h = h * factor;
        }
    }
    Outcome::Failed
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_to_tolerance() {
        let control = StepControl::<f64>::default();
        let mut end = [0.0f64; 2];
        let out = integrate(
            |_, y| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            10.0,
            &StepControl { max_step_fraction: 0.0, ..control },
            |s| {
                end = s.y1;
                ControlFlow::Continue(())
            },
        );
        assert_eq!(out, Outcome::Completed);
        assert!((end[0] - 10f64.sin()).abs() < 1e-8);
        assert!((end[1] - 10f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn leftward_power_law_lands_on_endpoint() {
        // y = t^3 integrated from 1 down to 1e-3 with the step capped by 0.1 t.
        let mut last_t = 1.0f64;
        let mut end = [0.0f64; 2];
        let out = integrate(
            |t, _| [3.0 * t * t, 6.0 * t],
            1.0,
            [1.0, 3.0],
            1e-3,
            &StepControl::default(),
            |s| {
                assert!(s.t1 < s.t0);
                assert!(s.t0 - s.t1 <= 0.1 * s.t0 * (1.0 + 1e-12));
                last_t = s.t1;
                end = s.y1;
                ControlFlow::Continue(())
            },
        );
        assert_eq!(out, Outcome::Completed);
        assert_eq!(last_t, 1e-3);
        assert!((end[0] - 1e-9).abs() < 1e-11);
    }

    #[test]
    fn observer_can_stop() {
        let mut n = 0;
        let out = integrate(
            |_, y| [y[0], 0.0],
            0.0,
            [1.0, 0.0],
            5.0,
            &StepControl { max_step_fraction: 0.0, ..StepControl::default() },
            |s| {
                n += 1;
                if s.y1[0] > 10.0 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            },
        );
        assert_eq!(out, Outcome::Stopped);
        assert!(n > 1);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let c = |t: f64| 2.0 * t * t * t - t * t + 0.5 * t - 3.0;
        let d = |t: f64| 6.0 * t * t - 2.0 * t + 0.5;
        for t in [0.1, 0.37, 0.8] {
            let v = hermite(0.0, c(0.0), d(0.0), 1.0, c(1.0), d(1.0), t);
            assert!((v - c(t)).abs() < 1e-14);
        }
    }
}
