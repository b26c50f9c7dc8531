//! Scalar abstraction and the handful of dense vector helpers the controller
//! and integrator need.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar the numerical core is generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FromPrimitive + NumCast + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or configuration value.
    fn lit(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 is representable in every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn dist_sq<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

/// `y += k * x`
pub fn axpy<T: Scalar>(y: &mut [T], k: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + k * xi;
    }
}

/// Symmetric positive-definite matrix stored with its Cholesky factor, used
/// for the per-agent inertia `B_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix<T> {
    dim: usize,
    /// Row-major full matrix.
    data: Vec<T>,
    /// Row-major lower-triangular factor `L` with `B = L Lᵀ`.
    chol: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatrixError {
    #[error("matrix is not square: expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
}

impl<T: Scalar> SpdMatrix<T> {
    pub fn new(dim: usize, data: Vec<T>) -> Result<Self, MatrixError> {
        if data.len() != dim * dim {
            return Err(MatrixError::Shape {
                expected: dim * dim,
                got: data.len(),
            });
        }
        let tol = T::epsilon() * T::lit(64.0);
        for r in 0..dim {
            for c in 0..r {
                let (a, b) = (data[r * dim + c], data[c * dim + r]);
                let scale = a.abs().max(b.abs()).max(T::one());
                if (a - b).abs() > tol * scale {
                    return Err(MatrixError::NotSymmetric { row: r, col: c });
                }
            }
        }
        let mut chol = vec![T::zero(); dim * dim];
        for j in 0..dim {
            let mut d = data[j * dim + j];
            for k in 0..j {
                d = d - chol[j * dim + k] * chol[j * dim + k];
            }
            if !(d > T::zero()) {
                return Err(MatrixError::NotPositiveDefinite { pivot: j });
            }
            let d = d.sqrt();
            chol[j * dim + j] = d;
            for i in (j + 1)..dim {
                let mut s = data[i * dim + j];
                for k in 0..j {
                    s = s - chol[i * dim + k] * chol[j * dim + k];
                }
                chol[i * dim + j] = s / d;
            }
        }
        Ok(Self { dim, data, chol })
    }

    pub fn scaled_identity(dim: usize, s: T) -> Result<Self, MatrixError> {
        let mut data = vec![T::zero(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = s;
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|r| dot(&self.data[r * self.dim..(r + 1) * self.dim], x))
            .collect()
    }

    /// `xᵀ B x`
    pub fn quad_form(&self, x: &[T]) -> T {
        dot(x, &self.mul_vec(x))
    }

    /// Solves `B y = rhs` through the stored factor.
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let n = self.dim;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.chol[i * n + k] * y[k];
            }
            y[i] = s / self.chol[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s = s - self.chol[k * n + i] * y[k];
            }
            y[i] = s / self.chol[i * n + i];
        }
        y
    }
}
