//! Monotone piecewise cubic interpolation (Fritsch-Carlson), optionally in
//! log-log coordinates for positive power-law-like data.

use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Pchip<T> {
    x: Vec<T>,
    y: Vec<T>,
    d: Vec<T>,
}

impl<T: Real> Pchip<T> {
    /// `x` strictly increasing, at least two points.
    pub fn new(x: Vec<T>, y: Vec<T>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len());
        let n = x.len();
        let secant: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut d = vec![T::zero(); n];
        d[0] = secant[0];
        d[n - 1] = secant[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secant[i - 1], secant[i]);
            if a * b <= T::zero() {
                d[i] = T::zero();
            } else {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let w1 = T::lit(2.0) * h1 + h0;
                let w2 = h1 + T::lit(2.0) * h0;
                d[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        Self { x, y, d }
    }

    pub fn domain(&self) -> (T, T) {
        (self.x[0], *self.x.last().unwrap())
    }

    /// Value at `t`, `None` outside the data range.
    pub fn eval(&self, t: T) -> Option<T> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let i = self.x.partition_point(|&v| v <= t).clamp(1, self.x.len() - 1) - 1;
        Some(crate::integrator::hermite(
            self.x[i], self.y[i], self.d[i], self.x[i + 1], self.y[i + 1], self.d[i + 1], t,
        ))
    }
}

/// Interpolant of sampled `u(delta)`, in log-log coordinates when all values
/// are positive and in linear coordinates otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileInterp<T> {
    LogLog(Pchip<T>),
    Linear(Pchip<T>),
}

impl<T: Real> ProfileInterp<T> {
    pub fn new(delta: &[T], values: &[T]) -> Self {
        if values.iter().all(|&v| v > T::zero()) && delta.iter().all(|&d| d > T::zero()) {
            ProfileInterp::LogLog(Pchip::new(
                delta.iter().map(|d| d.ln()).collect(),
                values.iter().map(|v| v.ln()).collect(),
            ))
        } else {
            ProfileInterp::Linear(Pchip::new(delta.to_vec(), values.to_vec()))
        }
    }

    pub fn eval(&self, delta: T) -> Option<T> {
        match self {
            ProfileInterp::LogLog(p) => {
                // Guard the endpoints against ln/exp round-off.
                let (lo, hi) = p.domain();
                let t = delta.ln().max(lo).min(hi);
                if delta.ln() < lo - T::lit(1e-12) || delta.ln() > hi + T::lit(1e-12) {
                    return None;
                }
                p.eval(t).map(|v| v.exp())
            }
            ProfileInterp::Linear(p) => p.eval(delta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_power_laws_in_log_log() {
        let x: Vec<f64> = (0..30).map(|i| 1e-5 * 1.5f64.powi(i)).collect();
        let y: Vec<f64> = x.iter().map(|d| 3.0 * d.powf(-0.7)).collect();
        let p = ProfileInterp::new(&x, &y);
        for t in [2e-5, 1e-4, 3.3e-3] {
            let v = p.eval(t).unwrap();
            assert!((v / (3.0 * t.powf(-0.7)) - 1.0).abs() < 1e-12);
        }
        assert!(p.eval(1e-6).is_none());
        assert!(p.eval(x[0]).is_some());
        assert!(p.eval(*x.last().unwrap()).is_some());
    }

    #[test]
    fn preserves_monotonicity() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![0.0, 0.0, 1.0, 1.0, 5.0];
        let p = Pchip::new(x, y);
        let mut prev = -1.0;
        for i in 0..=400 {
            let v = p.eval(i as f64 / 100.0).unwrap();
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn linear_fallback_with_zeros() {
        let p = ProfileInterp::new(&[0.1, 0.5, 1.0], &[0.0, 1.0, 2.0]);
        assert!(matches!(p, ProfileInterp::Linear(_)));
        assert!(p.eval(0.3).unwrap() > 0.0);
    }
}
