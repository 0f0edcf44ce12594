//! Scalar-generic vector and matrix primitives shared by the whole harness.

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::{Result, ZslError};

/// Scalar bound used everywhere. `f32` is the pipeline type (it matches the
/// on-disk feature and checkpoint formats), `f64` is used wherever tests need
/// tight numeric tolerances.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + std::ops::AddAssign
        + std::ops::SubAssign
        + std::ops::MulAssign
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = F::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

pub fn norm<F: Scalar>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

/// Cosine distance 1 − a·b / (‖a‖‖b‖), always in [0, 2].
pub fn cosine_distance<F: Scalar>(a: &[F], b: &[F]) -> Result<F> {
    if a.len() != b.len() {
        return Err(ZslError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let na = norm(a);
    let nb = norm(b);
    if na == F::zero() || nb == F::zero() {
        return Err(ZslError::ZeroNorm);
    }
    let cos = dot(a, b) / (na * nb);
    // clamp rounding noise so the result stays in [0, 2]
    let cos = cos.min(F::one()).max(-F::one());
    Ok(F::one() - cos)
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        assert!(!rows.is_empty());
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols);
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[F]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// Row-vector times matrix: y (1×rows) · self (rows×cols) → 1×cols.
    pub fn vec_mul(&self, y: &[F]) -> Vec<F> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![F::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            let row = self.row(i);
            for (o, &w) in out.iter_mut().zip(row) {
                *o += yi * w;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> F {
        norm(&self.data)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn mean_rows<F: Scalar>(rows: &[&[F]]) -> Vec<F> {
    assert!(!rows.is_empty());
    let dim = rows[0].len();
    let mut out = vec![F::zero(); dim];
    for r in rows {
        for (o, v) in out.iter_mut().zip(*r) {
            *o += *v;
        }
    }
    let n = F::from_usize(rows.len()).unwrap();
    for o in &mut out {
        *o = *o / n;
    }
    out
}

pub fn squared_distance<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = F::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        acc += d * d;
    }
    acc
}
