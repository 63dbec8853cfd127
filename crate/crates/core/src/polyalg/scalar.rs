use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_complex::Complex64;

/// Element of the commutative coefficient field a run operates in.
///
/// Two fields are supported: the reals (`f64`) for scalar generators, and the
/// complex plane (`Complex64`), which embeds the 2x2 rotation-generator case
/// (the antisymmetric generator acts as multiplication by `i`).
pub trait Scalar:
    Copy
    + PartialEq
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Send
    + Sync
    + 'static
{
    /// Number of real components (1 for the real field, 2 for complex).
    const COMPONENTS: usize;
    /// Short field name used in headers and reports.
    const FIELD_NAME: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(x: f64) -> Self;
    fn from_re_im(re: f64, im: f64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    /// Field magnitude |x| (modulus for complex).
    fn abs(self) -> f64;
    fn conj(self) -> Self;
    fn mul_real(self, x: f64) -> Self;
    fn is_finite(self) -> bool;

    /// Real component `k` (0 = re, 1 = im); `k < COMPONENTS`.
    fn component(self, k: usize) -> f64 {
        match k {
            0 => self.re(),
            _ => self.im(),
        }
    }

    /// Entry of the real matrix representation of multiplication by `self`.
    ///
    /// A complex unknown `u` contributes `self * u` to a residual; splitting
    /// both into real parts, the coefficient of `u`'s part `j` in residual
    /// part `part` is `realified(part, j)`. The real field is the 1x1 case.
    fn realified(self, part: usize, j: usize) -> f64;

    /// Square root of a quadratic discriminant, or `None` to mask the node.
    ///
    /// The real field clamps small negative discriminants (|disc| <= `clamp`)
    /// to zero and refuses large ones; the complex field always succeeds.
    fn disc_sqrt(self, clamp: f64) -> Option<Self>;
}

impl Scalar for f64 {
    const COMPONENTS: usize = 1;
    const FIELD_NAME: &'static str = "real";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn from_re_im(re: f64, _im: f64) -> Self {
        re
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn conj(self) -> Self {
        self
    }
    fn mul_real(self, x: f64) -> Self {
        self * x
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    fn realified(self, _part: usize, _j: usize) -> f64 {
        self
    }

    fn disc_sqrt(self, clamp: f64) -> Option<Self> {
        if self >= 0.0 {
            Some(self.sqrt())
        } else if -self <= clamp {
            Some(0.0)
        } else {
            None
        }
    }
}

impl Scalar for Complex64 {
    const COMPONENTS: usize = 2;
    const FIELD_NAME: &'static str = "complex";

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_re_im(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn mul_real(self, x: f64) -> Self {
        self * x
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn realified(self, part: usize, j: usize) -> f64 {
        // [re -im; im re], the 2x2 representation of complex multiplication.
        match (part, j) {
            (0, 0) => self.re,
            (0, _) => -self.im,
            (1, 0) => self.im,
            _ => self.re,
        }
    }

    fn disc_sqrt(self, _clamp: f64) -> Option<Self> {
        Some(self.sqrt())
    }
}

/// Distance between two values in units in the last place of the larger one.
/// Used by the field-axiom tests.
pub fn ulp_distance(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let scale = a.abs().max(b.abs());
    let ulp = if scale == 0.0 {
        f64::MIN_POSITIVE
    } else {
        // spacing of floats at this magnitude
        let bits = scale.to_bits();
        f64::from_bits(bits + 1) - scale
    };
    (a - b).abs() / ulp
}
