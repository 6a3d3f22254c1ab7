//! Forward-mode dual numbers used for exact mixed derivatives.
//!
//! Nesting [`Dual`] gives higher derivatives: `Dual<Dual<f64>>` carries a
//! mixed second derivative and `Dual<Dual<Dual<f64>>>` a mixed third
//! derivative along three chosen directions.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the generic phase and defining-function code.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Lifts a constant.
    fn cst(v: f64) -> Self;
    /// Real (value) part.
    fn re(self) -> f64;
    fn sqrt(self) -> Self;

    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }
    fn sq(self) -> Self {
        self * self
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// Value plus infinitesimal part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub v: T,
    pub d: T,
}

pub type D1 = Dual<f64>;
pub type D2 = Dual<D1>;
pub type D3 = Dual<D2>;

impl<T: Scalar> Dual<T> {
    pub fn new(v: T, d: T) -> Self {
        Dual { v, d }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        Dual::new(q, (self.d - q * o.d) / o.v)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.v, -self.d)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual::new(T::cst(v), T::cst(0.0))
    }
    fn re(self) -> f64 {
        self.v.re()
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Dual::new(s, self.d / (s + s))
    }
    fn scale(self, k: f64) -> Self {
        Dual::new(self.v.scale(k), self.d.scale(k))
    }
}

/// Seeds `base + a·ε₂ + b·ε₁` for a mixed second derivative.
pub fn seed2(base: f64, a: f64, b: f64) -> D2 {
    Dual::new(Dual::new(base, b), Dual::new(a, 0.0))
}

/// Second-order mixed part of a [`D2`] result.
pub fn part2(r: D2) -> f64 {
    r.d.d
}

/// Seeds `base + a·ε₃ + b·ε₂ + c·ε₁` for a mixed third derivative.
pub fn seed3(base: f64, a: f64, b: f64, c: f64) -> D3 {
    Dual::new(
        Dual::new(Dual::new(base, c), Dual::new(b, 0.0)),
        Dual::new(Dual::new(a, 0.0), Dual::new(0.0, 0.0)),
    )
}

/// Third-order mixed part of a [`D3`] result.
pub fn part3(r: D3) -> f64 {
    r.d.d.d
}

/// Seeds `base + a·ε` for a first derivative.
pub fn seed1(base: f64, a: f64) -> D1 {
    Dual::new(base, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<S: Scalar>(x: S, y: S, z: S) -> S {
        (x * x * y + z).sqrt() * x / (S::cst(1.0) + y * z)
    }

    #[test]
    fn first_derivative_matches_hand_computation() {
        // d/dx (x^3) at 2 = 12
        let x = seed1(2.0, 1.0);
        assert!(((x * x * x).d - 12.0).abs() < 1e-14);
    }

    #[test]
    fn mixed_partials_match_central_differences() {
        let (x0, y0, z0) = (0.7, 1.3, 0.4);
        let h = 1e-3;
        let fd = |dx: f64, dy: f64, dz: f64| f(x0 + dx, y0 + dy, z0 + dz);
        // ∂x∂y by a 4-point stencil
        let fxy_fd = (fd(h, h, 0.0) - fd(h, -h, 0.0) - fd(-h, h, 0.0) + fd(-h, -h, 0.0)) / (4.0 * h * h);
        let r = f(seed2(x0, 1.0, 0.0), seed2(y0, 0.0, 1.0), seed2(z0, 0.0, 0.0));
        assert!((part2(r) - fxy_fd).abs() < 1e-5);
        // ∂x∂y∂z by an 8-point stencil
        let mut fxyz_fd = 0.0;
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0f64, 1.0] {
                    fxyz_fd += sx * sy * sz * fd(sx * h, sy * h, sz * h);
                }
            }
        }
        fxyz_fd /= 8.0 * h * h * h;
        let r3 = f(seed3(x0, 1.0, 0.0, 0.0), seed3(y0, 0.0, 1.0, 0.0), seed3(z0, 0.0, 0.0, 1.0));
        assert!((part3(r3) - fxyz_fd).abs() < 1e-4, "{} vs {}", part3(r3), fxyz_fd);
    }

    #[test]
    fn repeated_direction_gives_pure_third_derivative() {
        // d³/dx³ sqrt(x) = 3/8 x^{-5/2}
        let x = 1.7;
        let r = seed3(x, 1.0, 1.0, 1.0).sqrt();
        assert!((part3(r) - 0.375 * x.powf(-2.5)).abs() < 1e-14);
    }
}
