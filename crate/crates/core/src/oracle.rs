//! ODE-level reference for the growth of `Y`: the equality dynamics
//! `Y″ = (3/2c₀)Y²` and its closed-form zero-energy solution.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default cap on `Y` for [`integrate_comparison`].
pub const Y_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeState<T> {
    pub t: T,
    pub y: T,
    pub yp: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRun<T> {
    pub c0: T,
    pub states: Vec<OdeState<T>>,
    /// `Y` passed the cap (or overflowed) before `t_end`.
    pub blew_up: bool,
}

impl<T: Scalar> ComparisonRun<T> {
    /// `(Y′)² − Y³/c₀` at sample `k`.
    pub fn energy(&self, k: usize) -> T {
        first_integral(&self.states[k], self.c0)
    }

    /// Largest `|E(t) − E(0)|` relative to the running size `(Y′)² + Y³/c₀`.
    pub fn relative_drift(&self) -> T {
        let e0 = self.energy(0);
        self.states
            .iter()
            .map(|s| {
                let scale = s.yp * s.yp + s.y.powi(3) / self.c0;
                (first_integral(s, self.c0) - e0).abs() / scale
            })
            .fold(T::zero(), |m, v| m.max(v))
    }

    pub fn last(&self) -> OdeState<T> {
        *self.states.last().expect("run has at least the initial state")
    }
}

pub fn first_integral<T: Scalar>(s: &OdeState<T>, c0: T) -> T {
    s.yp * s.yp - s.y.powi(3) / c0
}

/// Fixed-step RK4 for `Y″ = (3/2c₀)Y²` from `(Y₀, Y′₀)` until `t_end` or
/// `Y > y_cap`.
pub fn integrate_comparison<T: Scalar>(y0: T, yp0: T, c0: T, dt: T, t_end: T, y_cap: T) -> Result<ComparisonRun<T>> {
    let zero = T::zero();
    if !(y0 > zero && yp0 > zero && c0 > zero && dt > zero && t_end > zero) {
        return Err(Error::Domain("comparison ODE parameters must be positive".into()));
    }
    let k = T::lit(1.5) / c0;
    let f = |y: T, yp: T| (yp, k * y * y);
    let mut s = OdeState {
        t: zero,
        y: y0,
        yp: yp0,
    };
    let mut states = vec![s];
    let mut blew_up = false;
    let steps = (t_end / dt).ceil().to_usize().unwrap_or(usize::MAX);
    for n in 1..=steps {
        let h = (t_end - s.t).min(dt);
        let half = h / T::lit(2.0);
        let (a1, b1) = f(s.y, s.yp);
        let (a2, b2) = f(s.y + half * a1, s.yp + half * b1);
        let (a3, b3) = f(s.y + half * a2, s.yp + half * b2);
        let (a4, b4) = f(s.y + h * a3, s.yp + h * b3);
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        s = OdeState {
            t: if n == steps { t_end } else { T::from_usize_lossy(n) * dt },
            y: s.y + sixth * (a1 + two * a2 + two * a3 + a4),
            yp: s.yp + sixth * (b1 + two * b2 + two * b3 + b4),
        };
        if !s.y.is_finite() || !s.yp.is_finite() {
            blew_up = true;
            break;
        }
        states.push(s);
        if s.y > y_cap {
            blew_up = true;
            break;
        }
    }
    Ok(ComparisonRun { c0, states, blew_up })
}

/// `Y′₀ = √(Y₀³/c₀)`, the slope that puts the trajectory on `E = 0`.
pub fn equality_slope<T: Scalar>(y0: T, c0: T) -> T {
    (y0.powi(3) / c0).sqrt()
}

/// `2√c₀ / √Y₀`.
pub fn pole_time<T: Scalar>(y0: T, c0: T) -> T {
    T::lit(2.0) * c0.sqrt() / y0.sqrt()
}

/// `4c₀Y₀ / (2√c₀ − t√Y₀)²`, the zero-energy solution.
pub fn closed_form_lower<T: Scalar>(y0: T, c0: T, t: T) -> Result<T> {
    let gap = gap(y0, c0, t)?;
    Ok(T::lit(4.0) * c0 * y0 / (gap * gap))
}

/// `8c₀Y₀√Y₀ / (2√c₀ − t√Y₀)³`.
pub fn closed_form_lower_derivative<T: Scalar>(y0: T, c0: T, t: T) -> Result<T> {
    let gap = gap(y0, c0, t)?;
    Ok(T::lit(8.0) * c0 * y0 * y0.sqrt() / gap.powi(3))
}

fn gap<T: Scalar>(y0: T, c0: T, t: T) -> Result<T> {
    if !(y0 > T::zero() && c0 > T::zero()) {
        return Err(Error::Domain("Y0 and c0 must be positive".into()));
    }
    if t < T::zero() {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    let g = T::lit(2.0) * c0.sqrt() - t * y0.sqrt();
    if !(g > T::zero()) {
        return Err(Error::PastBlowupTime {
            t: t.as_f64(),
            t_star: pole_time(y0, c0).as_f64(),
        });
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_lower(1.0, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(closed_form_lower(1.0, 1.0, 1.0).unwrap(), 4.0);
        assert!((closed_form_lower(0.3f64, 0.7, 0.0).unwrap() - 0.3).abs() < 1e-15);
        assert!(matches!(
            closed_form_lower(1.0, 1.0, 2.0),
            Err(Error::PastBlowupTime { .. })
        ));
    }

    #[test]
    fn closed_form_is_zero_energy() {
        let (y0, c0) = (0.01, 0.5357);
        let ts = pole_time(y0, c0);
        for k in 0..20 {
            let t = ts * k as f64 / 21.0;
            let y = closed_form_lower(y0, c0, t).unwrap();
            let yp = closed_form_lower_derivative(y0, c0, t).unwrap();
            assert!((yp * yp - y.powi(3) / c0).abs() <= 1e-12 * (yp * yp));
        }
    }

    #[test]
    fn unit_trajectory_hits_four_at_one() {
        let run = integrate_comparison(1.0, 1.0, 1.0, 1e-3, 1.0, Y_CAP).unwrap();
        assert!(!run.blew_up);
        assert!((run.last().y - 4.0).abs() < 1e-9);
        assert!(run.relative_drift() < 1e-8);
    }

    #[test]
    fn steeper_start_blows_up_earlier() {
        let a = integrate_comparison(1.0, 1.5, 1.0, 1e-3, 3.0, Y_CAP).unwrap();
        let b = integrate_comparison(1.0, 1.0, 1.0, 1e-3, 3.0, Y_CAP).unwrap();
        assert!(a.blew_up && b.blew_up);
        assert!(a.last().t < b.last().t);
        assert!((b.last().t - 2.0).abs() < 1e-2);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(integrate_comparison(0.0, 1.0, 1.0, 1e-3, 1.0, Y_CAP).is_err());
        assert!(integrate_comparison(1.0, 1.0, 1.0, 0.0, 1.0, Y_CAP).is_err());
    }
}
