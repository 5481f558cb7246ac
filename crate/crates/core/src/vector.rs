//! Fixed-capacity vectors for dimensions two and three.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::scalar::Real;

pub const MAX_DIM: usize = 3;

/// A point or direction in R^2 or R^3, stored inline so hot loops never allocate.
#[derive(Clone, Copy, PartialEq)]
pub struct Vect<F> {
    data: [F; MAX_DIM],
    dim: usize,
}

impl<F: Real> Vect<F> {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        Self { data: [F::zero(); MAX_DIM], dim }
    }

    pub fn from_slice(xs: &[F]) -> Self {
        let mut v = Self::zeros(xs.len());
        v.data[..xs.len()].copy_from_slice(xs);
        v
    }

    pub fn from_f64(xs: &[f64]) -> Self {
        let mut v = Self::zeros(xs.len());
        for (d, &x) in v.data.iter_mut().zip(xs) {
            *d = F::lit(x);
        }
        v
    }

    pub fn from_ints(xs: &[i64]) -> Self {
        let mut v = Self::zeros(xs.len());
        for (d, &x) in v.data.iter_mut().zip(xs) {
            *d = F::from_int(x);
        }
        v
    }

    /// Unit vector along axis `axis`.
    pub fn axis(dim: usize, axis: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[axis] = F::one();
        v
    }

    pub fn planar(angle: F) -> Self {
        Self::from_slice(&[angle.cos(), angle.sin()])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[F] {
        &self.data[..self.dim]
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> F {
        let mut s = F::zero();
        for i in 0..self.dim {
            s += self.data[i] * other.data[i];
        }
        s
    }

    #[inline]
    pub fn norm_sq(&self) -> F {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> F {
        match self.dim {
            2 => self.data[0].hypot(self.data[1]),
            _ => self.norm_sq().sqrt(),
        }
    }

    #[inline]
    pub fn scale(mut self, s: F) -> Self {
        for x in &mut self.data[..self.dim] {
            *x = *x * s;
        }
        self
    }

    /// Returns `self / |self|`; the zero vector maps to itself.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n == F::zero() {
            self
        } else {
            self.scale(F::one() / n)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_slice().iter().all(|x| *x == F::zero())
    }

    pub fn iter(&self) -> impl Iterator<Item = &F> {
        self.as_slice().iter()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.iter().map(|x| x.as_f64()).collect()
    }

    pub fn cross(&self, other: &Self) -> Self {
        assert_eq!(self.dim, 3);
        let (a, b) = (&self.data, &other.data);
        Self::from_slice(&[
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    /// An orthonormal basis of the plane orthogonal to the unit vector `self` (d = 3).
    pub fn orthonormal_complement(&self) -> (Self, Self) {
        assert_eq!(self.dim, 3);
        let a = self.data.map(|x| x.abs());
        let pick = if a[0] <= a[1] && a[0] <= a[2] {
            0
        } else if a[1] <= a[2] {
            1
        } else {
            2
        };
        let helper = Self::axis(3, pick);
        let e1 = helper.cross(self).normalized();
        let e2 = self.cross(&e1);
        (e1, e2)
    }
}

impl<F: std::fmt::Debug> std::fmt::Debug for Vect<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(&self.data[..self.dim]).finish()
    }
}

impl<F> Index<usize> for Vect<F> {
    type Output = F;
    #[inline]
    fn index(&self, i: usize) -> &F {
        debug_assert!(i < self.dim);
        &self.data[i]
    }
}

impl<F> IndexMut<usize> for Vect<F> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut F {
        debug_assert!(i < self.dim);
        &mut self.data[i]
    }
}

impl<F: Real> Add for Vect<F> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.data[i] += rhs.data[i];
        }
        self
    }
}

impl<F: Real> Sub for Vect<F> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.data[i] -= rhs.data[i];
        }
        self
    }
}

impl<F: Real> Neg for Vect<F> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.scale(-F::one())
    }
}

impl<F: Real> Mul<F> for Vect<F> {
    type Output = Self;
    #[inline]
    fn mul(self, s: F) -> Self {
        self.scale(s)
    }
}
