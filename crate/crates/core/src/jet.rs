//! Second-order Taylor jets in `(r, z)` for building manufactured solutions.
//!
//! A [`Jet`] carries a value together with its first and second partial
//! derivatives; arithmetic and the elementary functions propagate them
//! exactly, so `L₅` of a closed-form expression is available without hand
//! differentiation.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::grid::{Field, Grid};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub v: T,
    pub r: T,
    pub z: T,
    pub rr: T,
    pub rz: T,
    pub zz: T,
}

impl<T: Scalar> Jet<T> {
    pub fn constant(c: T) -> Self {
        Self {
            v: c,
            r: T::zero(),
            z: T::zero(),
            rr: T::zero(),
            rz: T::zero(),
            zz: T::zero(),
        }
    }

    /// The coordinate jets `(r, z)` at a point.
    pub fn coords(r: T, z: T) -> (Self, Self) {
        let mut jr = Self::constant(r);
        jr.r = T::one();
        let mut jz = Self::constant(z);
        jz.z = T::one();
        (jr, jz)
    }

    /// `h(self)` given `h`, `h′`, `h″` at `self.v`.
    fn chain(self, h: T, dh: T, d2h: T) -> Self {
        Self {
            v: h,
            r: dh * self.r,
            z: dh * self.z,
            rr: d2h * self.r * self.r + dh * self.rr,
            rz: d2h * self.r * self.z + dh * self.rz,
            zz: d2h * self.z * self.z + dh * self.zz,
        }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sinh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(c, s, c)
    }

    pub fn powi(self, n: i32) -> Self {
        let nn = T::lit(n as f64);
        let h = self.v.powi(n);
        let dh = if n == 0 { T::zero() } else { nn * self.v.powi(n - 1) };
        let d2h = if (0..2).contains(&n) {
            T::zero()
        } else {
            nn * (nn - T::one()) * self.v.powi(n - 2)
        };
        self.chain(h, dh, d2h)
    }

    pub fn scale(self, c: T) -> Self {
        Self {
            v: c * self.v,
            r: c * self.r,
            z: c * self.z,
            rr: c * self.rr,
            rz: c * self.rz,
            zz: c * self.zz,
        }
    }

    /// `L₅ = ∂_r² + (3/r)∂_r + ∂_z²` at radius `r`; on the axis the radial
    /// part is `4∂_r²`.
    pub fn l5(&self, r: T) -> T {
        if r == T::zero() {
            T::lit(4.0) * self.rr + self.zz
        } else {
            self.rr + T::lit(3.0) / r * self.r + self.zz
        }
    }
}

impl<T: Scalar> Add for Jet<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            r: self.r + o.r,
            z: self.z + o.z,
            rr: self.rr + o.rr,
            rz: self.rz + o.rz,
            zz: self.zz + o.zz,
        }
    }
}

impl<T: Scalar> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            r: self.r * o.v + self.v * o.r,
            z: self.z * o.v + self.v * o.z,
            rr: self.rr * o.v + T::lit(2.0) * self.r * o.r + self.v * o.rr,
            rz: self.rz * o.v + self.r * o.z + self.z * o.r + self.v * o.rz,
            zz: self.zz * o.v + T::lit(2.0) * self.z * o.z + self.v * o.zz,
        }
    }
}

impl<T: Scalar> Div for Jet<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.v.recip();
        self * o.chain(inv, -inv * inv, T::lit(2.0) * inv * inv * inv)
    }
}

impl<T: Scalar> Add<T> for Jet<T> {
    type Output = Self;
    fn add(mut self, c: T) -> Self {
        self.v += c;
        self
    }
}

impl<T: Scalar> Mul<T> for Jet<T> {
    type Output = Self;
    fn mul(self, c: T) -> Self {
        self.scale(c)
    }
}

/// A sampled closed-form `ψ*` together with `ω* = −L₅ψ*`.
#[derive(Debug, Clone)]
pub struct Manufactured<T> {
    pub psi: Field<T>,
    pub omega: Field<T>,
}

/// Samples `ψ*` and the exact `−L₅ψ*` on `grid`.
pub fn manufacture<T: Scalar>(grid: &Arc<Grid<T>>, f: impl Fn(Jet<T>, Jet<T>) -> Jet<T>) -> Manufactured<T> {
    let jet = |r: T, z: T| {
        let (jr, jz) = Jet::coords(r, z);
        f(jr, jz)
    };
    Manufactured {
        psi: Field::from_fn(grid, |r, z| jet(r, z).v),
        omega: Field::from_fn(grid, |r, z| -jet(r, z).l5(r)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_products() {
        let (r, z) = Jet::coords(0.7f64, 0.3);
        let f = (r * r).scale(-3.0).exp() * (z * std::f64::consts::PI).sin();
        let phi = (-3.0 * 0.49f64).exp() * (0.3 * std::f64::consts::PI).sin();
        let expected = (36.0 * 0.49 - 24.0 - std::f64::consts::PI.powi(2)) * phi;
        assert!((f.l5(0.7) - expected).abs() < 1e-13);
        assert!(
            (f.rz - (-6.0 * 0.7) * (-3.0 * 0.49f64).exp() * std::f64::consts::PI * (0.3 * std::f64::consts::PI).cos())
                .abs()
                < 1e-13
        );
    }

    #[test]
    fn quotient_and_powers() {
        let (r, _) = Jet::coords(2.0f64, 0.0);
        let g = Jet::constant(1.0) / (r * r);
        let h = r.powi(-2);
        assert!((g.v - 0.25).abs() < 1e-15 && (h.v - 0.25).abs() < 1e-15);
        assert!((g.r - h.r).abs() < 1e-15 && (g.rr - h.rr).abs() < 1e-15);
        // r⁻² is L₅-harmonic
        assert!(g.l5(2.0).abs() < 1e-15);
    }
}
