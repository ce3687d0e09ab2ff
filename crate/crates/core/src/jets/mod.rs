//! Truncated Taylor series in one time variable.
//!
//! A [`Jet`] of order `d` stores `c_0 ..= c_d` with `c_k = s^(k)(t0) / k!`.
//! Binary operations between jets of different orders truncate to the lower
//! order, so the result is always exact up to the order it reports.

mod erf;

pub use erf::{erf, erfc, TWO_OVER_SQRT_PI};

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Highest supported jet order.
pub const MAX_ORDER: usize = 9;
const CAP: usize = MAX_ORDER + 1;

#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; CAP],
    order: usize,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Jet").field(&self.coeffs()).finish()
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::OrderTooLarge { order, max: MAX_ORDER })
    } else {
        Ok(())
    }
}

impl Jet {
    /// Constant signal. Panics if `order > MAX_ORDER`.
    pub fn constant(value: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} > {MAX_ORDER}");
        let mut c = [0.0; CAP];
        c[0] = value;
        Jet { c, order }
    }

    /// The signal `value + t`.
    pub fn variable(value: f64, order: usize) -> Self {
        let mut j = Self::constant(value, order);
        if order >= 1 {
            j.c[1] = 1.0;
        }
        j
    }

    /// From normalized Taylor coefficients; the order is `coeffs.len() - 1`.
    pub fn from_coeffs(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Dimension("a jet needs at least one coefficient".into()));
        }
        check_order(coeffs.len() - 1)?;
        let mut c = [0.0; CAP];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Ok(Jet {
            c,
            order: coeffs.len() - 1,
        })
    }

    /// From raw derivatives `s, s', s'', ...`.
    pub fn from_derivatives(derivs: &[f64]) -> Result<Self> {
        let mut j = Self::from_coeffs(derivs)?;
        let mut fact = 1.0;
        for k in 1..=j.order {
            fact *= k as f64;
            j.c[k] /= fact;
        }
        Ok(j)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..=self.order]
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th normalized coefficient (zero beyond the order).
    pub fn coeff(&self, k: usize) -> f64 {
        if k <= self.order {
            self.c[k]
        } else {
            0.0
        }
    }

    /// `k`-th time derivative, `k! * c_k`.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for n in 2..=k {
            fact *= n as f64;
        }
        self.coeff(k) * fact
    }

    /// Raw derivatives `s, s', ..., s^(d)`.
    pub fn derivatives(&self) -> Vec<f64> {
        (0..=self.order).map(|k| self.derivative(k)).collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let mut c = [0.0; CAP];
        c[..=order].copy_from_slice(&self.c[..=order]);
        Jet { c, order }
    }

    /// Constant with this jet's order.
    pub fn lift(&self, value: f64) -> Self {
        Self::constant(value, self.order)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|c| c.is_finite())
    }

    /// Time derivative as a jet of order `d - 1`: `c'_k = (k+1) c_{k+1}`.
    pub fn shift(&self) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::ZeroOrderShift);
        }
        let mut c = [0.0; CAP];
        for k in 0..self.order {
            c[k] = (k + 1) as f64 * self.c[k + 1];
        }
        Ok(Jet {
            c,
            order: self.order - 1,
        })
    }

    /// Antiderivative with constant term `c0`; inverse of [`Jet::shift`].
    pub fn integrate(&self, c0: f64) -> Result<Self> {
        check_order(self.order + 1)?;
        let mut c = [0.0; CAP];
        c[0] = c0;
        for k in 0..=self.order {
            c[k + 1] = self.c[k] / (k + 1) as f64;
        }
        Ok(Jet {
            c,
            order: self.order + 1,
        })
    }

    /// Re-expand the truncated polynomial about `t0 + dt`.
    pub fn advance(&self, dt: f64) -> Self {
        let d = self.order;
        let mut c = self.c;
        // Taylor shift by repeated synthetic division.
        for k in 0..d {
            for n in (k..d).rev() {
                c[n] += dt * c[n + 1];
            }
        }
        Jet { c, order: d }
    }

    /// Evaluate the truncated polynomial at offset `dt`.
    pub fn eval(&self, dt: f64) -> f64 {
        self.coeffs().iter().rev().fold(0.0, |acc, &c| acc * dt + c)
    }

    pub fn checked_add(&self, rhs: &Jet) -> Result<Self> {
        same_order(self, rhs)?;
        Ok(*self + *rhs)
    }

    pub fn checked_sub(&self, rhs: &Jet) -> Result<Self> {
        same_order(self, rhs)?;
        Ok(*self - *rhs)
    }

    pub fn checked_mul(&self, rhs: &Jet) -> Result<Self> {
        same_order(self, rhs)?;
        Ok(*self * *rhs)
    }

    pub fn checked_div(&self, rhs: &Jet) -> Result<Self> {
        same_order(self, rhs)?;
        if rhs.c[0] == 0.0 {
            return Err(Error::SingularJet {
                op: "div",
                detail: "divisor has zero constant term".into(),
            });
        }
        Ok(*self / *rhs)
    }

    pub fn checked_recip(&self) -> Result<Self> {
        if self.c[0] == 0.0 {
            return Err(Error::SingularJet {
                op: "recip",
                detail: "zero constant term".into(),
            });
        }
        Ok(self.recip())
    }

    pub fn checked_sqrt(&self) -> Result<Self> {
        if !(self.c[0] > 0.0) {
            return Err(Error::SingularJet {
                op: "sqrt",
                detail: format!("constant term {} is not positive", self.c[0]),
            });
        }
        Ok(self.sqrt())
    }

    pub fn checked_atan2(&self, x: &Jet) -> Result<Self> {
        if self.c[0] == 0.0 && x.c[0] == 0.0 {
            return Err(Error::SingularJet {
                op: "atan2",
                detail: "both arguments vanish".into(),
            });
        }
        Ok(self.atan2(*x))
    }

    pub fn recip(&self) -> Self {
        self.lift(1.0) / *self
    }

    pub fn square(&self) -> Self {
        *self * *self
    }

    pub fn exp(&self) -> Self {
        let d = self.order;
        let mut e = [0.0; CAP];
        e[0] = self.c[0].exp();
        for n in 1..=d {
            let mut s = 0.0;
            for j in 1..=n {
                s += j as f64 * self.c[j] * e[n - j];
            }
            e[n] = s / n as f64;
        }
        Jet { c: e, order: d }
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let d = self.order;
        let mut s = [0.0; CAP];
        let mut c = [0.0; CAP];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for n in 1..=d {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=n {
                let ja = j as f64 * self.c[j];
                ss += ja * c[n - j];
                cc += ja * s[n - j];
            }
            s[n] = ss / n as f64;
            c[n] = -cc / n as f64;
        }
        (Jet { c: s, order: d }, Jet { c, order: d })
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Self {
        self.sin_cos().1
    }

    /// Square root; NaN coefficients when the constant term is not positive.
    pub fn sqrt(&self) -> Self {
        let d = self.order;
        let mut r = [0.0; CAP];
        r[0] = self.c[0].sqrt();
        for n in 1..=d {
            let mut s = self.c[n];
            for j in 1..n {
                s -= r[j] * r[n - j];
            }
            r[n] = s / (2.0 * r[0]);
        }
        Jet { c: r, order: d }
    }

    /// Error function, propagated through `erf'(s) = 2/sqrt(pi) exp(-s^2)`.
    pub fn erf(&self) -> Self {
        let g = (-self.square()).exp() * TWO_OVER_SQRT_PI;
        chain_integrate(erf(self.c[0]), self, &g)
    }

    /// Complementary error function; accurate constant term far in the tail.
    pub fn erfc(&self) -> Self {
        let g = (-self.square()).exp() * -TWO_OVER_SQRT_PI;
        chain_integrate(erfc(self.c[0]), self, &g)
    }

    /// Four-quadrant `atan2(self, x)`; the constant term lies in (-pi, pi].
    pub fn atan2(&self, x: Jet) -> Self {
        let y = *self;
        let d = y.order.min(x.order);
        let (y, x) = (y.truncate(d), x.truncate(d));
        let theta0 = y.c[0].atan2(x.c[0]);
        if d == 0 {
            return Jet::constant(theta0, 0);
        }
        let lower = d - 1;
        let (yl, xl) = (y.truncate(lower), x.truncate(lower));
        let (dy, dx) = (y.shift().unwrap(), x.shift().unwrap());
        let rate = (xl * dy - yl * dx) / (xl * xl + yl * yl);
        rate.integrate(theta0).expect("order bounded by inputs")
    }
}

fn same_order(a: &Jet, b: &Jet) -> Result<()> {
    if a.order != b.order {
        Err(Error::OrderMismatch {
            left: a.order,
            right: b.order,
        })
    } else {
        Ok(())
    }
}

// c_n = (1/n) sum_{j=1}^n j a_j g_{n-j}, i.e. integrate g(a) * a'.
fn chain_integrate(c0: f64, a: &Jet, g: &Jet) -> Jet {
    let d = a.order.min(g.order);
    let mut c = [0.0; CAP];
    c[0] = c0;
    for n in 1..=d {
        let mut s = 0.0;
        for j in 1..=n {
            s += j as f64 * a.c[j] * g.c[n - j];
        }
        c[n] = s / n as f64;
    }
    Jet { c, order: d }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let d = self.order.min(rhs.order);
        let mut c = [0.0; CAP];
        for k in 0..=d {
            c[k] = self.c[k] + rhs.c[k];
        }
        Jet { c, order: d }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let d = self.order.min(rhs.order);
        let mut c = [0.0; CAP];
        for k in 0..=d {
            c[k] = self.c[k] - rhs.c[k];
        }
        Jet { c, order: d }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let d = self.order.min(rhs.order);
        let mut c = [0.0; CAP];
        for n in 0..=d {
            let mut s = 0.0;
            for j in 0..=n {
                s += self.c[j] * rhs.c[n - j];
            }
            c[n] = s;
        }
        Jet { c, order: d }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        let d = self.order.min(rhs.order);
        let mut c = [0.0; CAP];
        let inv = 1.0 / rhs.c[0];
        for n in 0..=d {
            let mut s = self.c[n];
            for j in 1..=n {
                s -= rhs.c[j] * c[n - j];
            }
            c[n] = s * inv;
        }
        Jet { c, order: d }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for k in 0..=self.order {
            self.c[k] = -self.c[k];
        }
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        for k in 0..=self.order {
            self.c[k] *= rhs;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(mut self, rhs: f64) -> Jet {
        for k in 0..=self.order {
            self.c[k] /= rhs;
        }
        self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

/// Scalar interface shared by `f64` and [`Jet`], so model formulas can be
/// written once and evaluated on either.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant of the same kind (same jet order).
    fn lift(&self, c: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn erf(self) -> Self;
    fn erfc(self) -> Self;
    fn atan2(self, x: Self) -> Self;
}

impl Real for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> f64 {
        c
    }
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn cos(self) -> f64 {
        f64::cos(self)
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn erf(self) -> f64 {
        erf(self)
    }
    fn erfc(self) -> f64 {
        erfc(self)
    }
    fn atan2(self, x: f64) -> f64 {
        f64::atan2(self, x)
    }
}

impl Real for Jet {
    fn value(&self) -> f64 {
        self.c[0]
    }
    fn lift(&self, c: f64) -> Jet {
        Jet::lift(self, c)
    }
    fn sin(self) -> Jet {
        Jet::sin(&self)
    }
    fn cos(self) -> Jet {
        Jet::cos(&self)
    }
    fn exp(self) -> Jet {
        Jet::exp(&self)
    }
    fn sqrt(self) -> Jet {
        Jet::sqrt(&self)
    }
    fn erf(self) -> Jet {
        Jet::erf(&self)
    }
    fn erfc(self) -> Jet {
        Jet::erfc(&self)
    }
    fn atan2(self, x: Jet) -> Jet {
        Jet::atan2(&self, x)
    }
}
