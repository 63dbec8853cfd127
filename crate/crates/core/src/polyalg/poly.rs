use std::ops::{Add, Mul, Neg, Sub};

use super::Scalar;
use crate::error::{Error, Result};

/// Dense polynomial over the coefficient field, stored low degree first.
///
/// Trailing zero coefficients are permitted; degree queries skip them. The
/// empty (or all-zero) vector is the zero polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T: Scalar> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn from_real_slice(coeffs: &[f64]) -> Self {
        Self {
            coeffs: coeffs.iter().map(|&c| T::from_real(c)).collect(),
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of `t^j`, zero beyond the stored length.
    pub fn coeff(&self, j: usize) -> T {
        self.coeffs.get(j).copied().unwrap_or_else(T::zero)
    }

    /// Highest power with a nonzero coefficient; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| *c != T::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    /// Horner evaluation at a real abscissa.
    pub fn eval(&self, t: f64) -> T {
        let mut acc = T::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul_real(t) + c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &c)| c.mul_real(j as f64))
            .collect();
        Self { coeffs }
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Self {
        if self.coeffs.is_empty() {
            return Self::zero();
        }
        let mut coeffs = vec![T::zero(); self.coeffs.len() + 1];
        for (j, &c) in self.coeffs.iter().enumerate() {
            coeffs[j + 1] = c.mul_real(1.0 / (j + 1) as f64);
        }
        Self { coeffs }
    }

    pub fn scale(&self, factor: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * factor).collect(),
        }
    }

    /// Coefficients with the imaginary parts dropped.
    pub fn real_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re()).collect()
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|j| self.coeff(j) + rhs.coeff(j)).collect();
        Polynomial { coeffs }
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|j| self.coeff(j) - rhs.coeff(j)).collect();
        Polynomial { coeffs }
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        Polynomial {
            coeffs: self.coeffs.iter().map(|&c| -c).collect(),
        }
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    /// Coefficient convolution; the zero polynomial annihilates.
    fn mul(self, rhs: Self) -> Polynomial<T> {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Polynomial::zero();
        }
        let mut coeffs = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial { coeffs }
    }
}

/// Coefficients of the second-order operator annihilating any combination
/// `a1 f1 + a2 f2` of solutions of `f' + P_i f = 0`:
///
/// ```text
/// A = P2 - P1
/// B = (P2^2 - P1^2) - (P2 - P1)'
/// C = P2 P1 (P2 - P1) - (P1 P2' - P2 P1')
/// ```
///
/// Requires `p1 != p2` coefficient-wise, otherwise A vanishes identically.
pub fn compose_abc<T: Scalar>(
    p1: &Polynomial<T>,
    p2: &Polynomial<T>,
) -> Result<(Polynomial<T>, Polynomial<T>, Polynomial<T>)> {
    let a = p2 - p1;
    if a.is_zero() {
        return Err(Error::EqualOperators);
    }
    let b = &(&(p2 * p2) - &(p1 * p1)) - &a.derivative();
    let wronskian = &(p1 * &p2.derivative()) - &(p2 * &p1.derivative());
    let c = &(&(p2 * p1) * &a) - &wronskian;
    Ok((a, b, c))
}
