//! Univariate second-order forward jets over complex scalars.
//!
//! A [`Jet2`] carries a value and its first and second derivative along one
//! direction in the input plane. Pushing a point through a computation once
//! per coordinate axis yields the Laplacian (sum of the two `dd` parts)
//! without any cross terms; seeding along a boundary normal yields the
//! normal derivative in a single pass. Jets stay complex even for networks
//! whose hidden signals are real (the imaginary parts just remain zero), so
//! there is one code path for all activations.

use crate::specfun::{Cplx, I};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    /// value
    pub v: Cplx,
    /// first directional derivative
    pub d: Cplx,
    /// second directional derivative
    pub dd: Cplx,
}

impl Jet2 {
    pub const fn new(v: Cplx, d: Cplx, dd: Cplx) -> Self {
        Self { v, d, dd }
    }

    pub fn constant(v: Cplx) -> Self {
        Self::new(v, Cplx::ZERO, Cplx::ZERO)
    }

    pub fn constant_re(v: f64) -> Self {
        Self::constant(Cplx::new(v, 0.0))
    }

    /// Variable seeded with unit first derivative.
    pub fn variable(v: f64) -> Self {
        Self::new(Cplx::new(v, 0.0), Cplx::ONE, Cplx::ZERO)
    }

    pub fn zero() -> Self {
        Self::constant(Cplx::ZERO)
    }

    /// Chain rule through an analytic scalar function given its value and
    /// first two derivatives at `self.v`.
    #[inline]
    pub fn compose(self, f: Cplx, f1: Cplx, f2: Cplx) -> Self {
        Self {
            v: f,
            d: f1 * self.d,
            dd: f2 * self.d * self.d + f1 * self.dd,
        }
    }

    #[inline]
    pub fn scale_re(self, a: f64) -> Self {
        Self {
            v: self.v * a,
            d: self.d * a,
            dd: self.dd * a,
        }
    }

    pub fn tanh(self) -> Self {
        let t = complex_tanh(self.v);
        let sech2 = Cplx::ONE - t * t;
        self.compose(t, sech2, -2.0 * t * sech2)
    }

    pub fn sin(self) -> Self {
        let (s, c) = complex_sin_cos(self.v);
        self.compose(s, c, -s)
    }

    /// z ↦ e^{iz}; for z = a + bi this is e^{-b}(cos a + i sin a).
    pub fn exp_i(self) -> Self {
        let e = exp_i(self.v);
        self.compose(e, I * e, -e)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(self, rhs: Jet2) -> Jet2 {
        Jet2::new(self.v + rhs.v, self.d + rhs.d, self.dd + rhs.dd)
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(self, rhs: Jet2) -> Jet2 {
        Jet2::new(self.v - rhs.v, self.d - rhs.d, self.dd - rhs.dd)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, rhs: Jet2) -> Jet2 {
        // (fg)'' = f''g + 2f'g' + fg''
        Jet2::new(
            self.v * rhs.v,
            self.d * rhs.v + self.v * rhs.d,
            self.dd * rhs.v + 2.0 * self.d * rhs.d + self.v * rhs.dd,
        )
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, a: f64) -> Jet2 {
        self.scale_re(a)
    }
}

impl Mul<Cplx> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, a: Cplx) -> Jet2 {
        Jet2::new(self.v * a, self.d * a, self.dd * a)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    #[inline]
    fn neg(self) -> Jet2 {
        Jet2::new(-self.v, -self.d, -self.dd)
    }
}

/// Seed a 2D point for differentiation along one coordinate axis: the
/// seeded coordinate carries (x_j, 1, 0), the other (x_other, 0, 0).
pub fn jet_seed(x: [f64; 2], direction: usize) -> [Jet2; 2] {
    debug_assert!(direction < 2);
    let mut out = [Jet2::constant_re(x[0]), Jet2::constant_re(x[1])];
    out[direction].d = Cplx::ONE;
    out
}

/// Seed a 2D point for differentiation along an arbitrary direction vector.
pub fn jet_seed_directional(x: [f64; 2], dir: [f64; 2]) -> [Jet2; 2] {
    [
        Jet2::new(Cplx::new(x[0], 0.0), Cplx::new(dir[0], 0.0), Cplx::ZERO),
        Jet2::new(Cplx::new(x[1], 0.0), Cplx::new(dir[1], 0.0), Cplx::ZERO),
    ]
}

/// e^{iz} = e^{-Im z} (cos Re z + i sin Re z).
#[inline]
pub fn exp_i(z: Cplx) -> Cplx {
    let (s, c) = z.re.sin_cos();
    if z.im == 0.0 {
        Cplx::new(c, s)
    } else {
        let r = (-z.im).exp();
        Cplx::new(r * c, r * s)
    }
}

#[inline]
pub fn complex_tanh(z: Cplx) -> Cplx {
    if z.im == 0.0 {
        Cplx::new(z.re.tanh(), 0.0)
    } else {
        z.tanh()
    }
}

/// (sin z, cos z) in one call.
#[inline]
pub fn complex_sin_cos(z: Cplx) -> (Cplx, Cplx) {
    let (s, c) = z.re.sin_cos();
    if z.im == 0.0 {
        (Cplx::new(s, 0.0), Cplx::new(c, 0.0))
    } else {
        let (sh, ch) = (z.im.sinh(), z.im.cosh());
        (Cplx::new(s * ch, c * sh), Cplx::new(c * ch, -s * sh))
    }
}
