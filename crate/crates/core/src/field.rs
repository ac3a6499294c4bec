//! Dense 2D grid containers.
//!
//! A [`Field<C>`] stores `C` real channels per pixel on a `height × width`
//! grid in row-major order. Row index `i` runs along the first coordinate
//! `x1`, column index `j` along `x2`; all stencils in [`crate::diffops`] use
//! this convention with unit grid spacing.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use thiserror::Error;

/// Smallest grid edge accepted: every stencil needs one interior difference.
pub const MIN_EDGE: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Shape, right: Shape },
    #[error("grid {height}x{width} is too small (both edges must be >= {MIN_EDGE})")]
    TooSmall { height: usize, width: usize },
    #[error("data length {len} does not match {height}x{width}")]
    LengthMismatch {
        len: usize,
        height: usize,
        width: usize,
    },
}

/// Grid dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub fn new(height: usize, width: usize) -> Result<Self, FieldError> {
        if height < MIN_EDGE || width < MIN_EDGE {
            return Err(FieldError::TooSmall { height, width });
        }
        Ok(Self { height, width })
    }

    pub fn square(n: usize) -> Result<Self, FieldError> {
        Self::new(n, n)
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when `(i, j)` is at least one pixel away from every edge.
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i > 0 && j > 0 && i + 1 < self.height && j + 1 < self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field<const C: usize> {
    shape: Shape,
    data: Vec<[f64; C]>,
}

pub type ScalarField = Field<1>;
pub type VectorField = Field<2>;
/// Three channels `(e11, e12, e22)` of a symmetric 2×2 tensor per pixel.
pub type SymField = Field<3>;
pub type QuadField = Field<4>;

impl<const C: usize> Field<C> {
    pub fn zeros(shape: Shape) -> Self {
        Self {
            shape,
            data: vec![[0.0; C]; shape.len()],
        }
    }

    pub fn constant(shape: Shape, value: [f64; C]) -> Self {
        Self {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize) -> [f64; C]) -> Self {
        let mut data = Vec::with_capacity(shape.len());
        for i in 0..shape.height {
            for j in 0..shape.width {
                data.push(f(i, j));
            }
        }
        Self { shape, data }
    }

    pub fn from_pixels(shape: Shape, data: Vec<[f64; C]>) -> Result<Self, FieldError> {
        if data.len() != shape.len() {
            return Err(FieldError::LengthMismatch {
                len: data.len(),
                height: shape.height,
                width: shape.width,
            });
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn pixels(&self) -> &[[f64; C]] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [[f64; C]] {
        &mut self.data
    }

    pub fn into_pixels(self) -> Vec<[f64; C]> {
        self.data
    }

    /// Iterates over every channel value of every pixel, row-major.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().flat_map(|p| p.iter().copied())
    }

    pub fn check_same_shape<const D: usize>(&self, other: &Field<D>) -> Result<(), FieldError> {
        if self.shape != other.shape {
            return Err(FieldError::ShapeMismatch {
                left: self.shape,
                right: other.shape,
            });
        }
        Ok(())
    }

    fn assert_same_shape<const D: usize>(&self, other: &Field<D>) {
        assert_eq!(self.shape, other.shape, "field shape mismatch");
    }

    pub fn map(&self, mut f: impl FnMut([f64; C]) -> [f64; C]) -> Self {
        Self {
            shape: self.shape,
            data: self.data.iter().map(|&p| f(p)).collect(),
        }
    }

    /// Pointwise combination. Panics on shape mismatch.
    pub fn zip_map(&self, other: &Self, mut f: impl FnMut([f64; C], [f64; C]) -> [f64; C]) -> Self {
        self.assert_same_shape(other);
        Self {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += a * x`. Panics on shape mismatch.
    pub fn axpy(&mut self, a: f64, x: &Self) {
        self.assert_same_shape(x);
        for (p, q) in self.data.iter_mut().zip(&x.data) {
            for c in 0..C {
                p[c] += a * q[c];
            }
        }
    }

    pub fn scale(&mut self, a: f64) {
        for p in &mut self.data {
            for v in p.iter_mut() {
                *v *= a;
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|p| p.map(|v| a * v))
    }

    /// Extracts channel `k` as a scalar field.
    pub fn channel(&self, k: usize) -> ScalarField {
        assert!(k < C, "channel {k} out of range for {C}-channel field");
        Field {
            shape: self.shape,
            data: self.data.iter().map(|p| [p[k]]).collect(),
        }
    }

    pub fn set_channel(&mut self, k: usize, values: &ScalarField) {
        assert!(k < C, "channel {k} out of range for {C}-channel field");
        self.assert_same_shape(values);
        for (p, v) in self.data.iter_mut().zip(&values.data) {
            p[k] = v[0];
        }
    }

    pub fn from_channels(channels: [&ScalarField; C]) -> Result<Self, FieldError> {
        let shape = channels[0].shape;
        for ch in &channels[1..] {
            channels[0].check_same_shape(ch)?;
        }
        let data = (0..shape.len())
            .map(|n| std::array::from_fn(|c| channels[c].data[n][0]))
            .collect();
        Ok(Self { shape, data })
    }

    /// Sum of absolute values over all pixels and channels.
    pub fn l1_norm(&self) -> f64 {
        self.values().map(f64::abs).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    /// Pointwise Euclidean magnitude across channels.
    pub fn magnitude(&self) -> ScalarField {
        Field {
            shape: self.shape,
            data: self.data.iter().map(|p| [pixel_norm(p)]).collect(),
        }
    }

    /// Largest absolute value over pixels with `is_interior(i, j)`.
    pub fn interior_max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 1..self.height() - 1 {
            for j in 1..self.width() - 1 {
                for v in self[(i, j)] {
                    m = m.max(v.abs());
                }
            }
        }
        m
    }

    /// Rotates the grid by 90 degrees counter-clockwise. The result has the
    /// transposed shape and its pixel `(i, j)` is input pixel `(j, width - 1 - i)`.
    pub fn rot90(&self) -> Self {
        let (h, w) = (self.height(), self.width());
        let shape = Shape {
            height: w,
            width: h,
        };
        Self::from_fn(shape, |i, j| self[(j, w - 1 - i)])
    }
}

impl<const C: usize> Field<C> {
    /// Independent uniform samples in `[lo, hi)` for every channel.
    pub fn random_uniform(shape: Shape, lo: f64, hi: f64, rng: &mut impl rand::Rng) -> Self {
        Self::from_fn(shape, |_, _| std::array::from_fn(|_| rng.random_range(lo..hi)))
    }
}

impl ScalarField {
    pub fn from_values(shape: Shape, values: Vec<f64>) -> Result<Self, FieldError> {
        Self::from_pixels(shape, values.into_iter().map(|v| [v]).collect())
    }

    pub fn from_scalar_fn(shape: Shape, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_fn(shape, |i, j| [f(i, j)])
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self[(i, j)][0]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self[(i, j)][0] = v;
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|p| p[0]).sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.shape.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn to_values(&self) -> Vec<f64> {
        self.values().collect()
    }
}

impl<const C: usize> Index<(usize, usize)> for Field<C> {
    type Output = [f64; C];

    fn index(&self, (i, j): (usize, usize)) -> &[f64; C] {
        debug_assert!(i < self.shape.height && j < self.shape.width);
        &self.data[i * self.shape.width + j]
    }
}

impl<const C: usize> IndexMut<(usize, usize)> for Field<C> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut [f64; C] {
        debug_assert!(i < self.shape.height && j < self.shape.width);
        &mut self.data[i * self.shape.width + j]
    }
}

impl<const C: usize> Add for &Field<C> {
    type Output = Field<C>;

    fn add(self, rhs: Self) -> Field<C> {
        self.zip_map(rhs, |a, b| std::array::from_fn(|c| a[c] + b[c]))
    }
}

impl<const C: usize> Sub for &Field<C> {
    type Output = Field<C>;

    fn sub(self, rhs: Self) -> Field<C> {
        self.zip_map(rhs, |a, b| std::array::from_fn(|c| a[c] - b[c]))
    }
}

impl<const C: usize> Neg for &Field<C> {
    type Output = Field<C>;

    fn neg(self) -> Field<C> {
        self.map(|p| p.map(|v| -v))
    }
}

impl<const C: usize> Mul<&Field<C>> for f64 {
    type Output = Field<C>;

    fn mul(self, rhs: &Field<C>) -> Field<C> {
        rhs.scaled(self)
    }
}

#[inline]
pub(crate) fn pixel_norm<const C: usize>(p: &[f64; C]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Discrete L2 pairing: sum over all pixels and channels of `a·b`.
pub fn inner_product<const C: usize>(a: &Field<C>, b: &Field<C>) -> Result<f64, FieldError> {
    a.check_same_shape(b)?;
    Ok(dot(a, b))
}

/// [`inner_product`] for callers that already guarantee equal shapes.
pub(crate) fn dot<const C: usize>(a: &Field<C>, b: &Field<C>) -> f64 {
    debug_assert_eq!(a.shape, b.shape);
    a.data
        .iter()
        .zip(&b.data)
        .map(|(p, q)| (0..C).map(|c| p[c] * q[c]).sum::<f64>())
        .sum()
}

/// Sum over pixels of the per-pixel Euclidean magnitude (the discrete
/// mixed `ℓ2,1` norm).
pub fn mixed_norm_21<const C: usize>(v: &Field<C>) -> f64 {
    v.data.iter().map(pixel_norm).sum()
}

/// Pointwise projection onto the Euclidean ball of the given radius.
pub fn project_l2_ball<const C: usize>(v: &Field<C>, radius: f64) -> Field<C> {
    let mut out = v.clone();
    project_l2_ball_in_place(&mut out, radius);
    out
}

pub fn project_l2_ball_in_place<const C: usize>(v: &mut Field<C>, radius: f64) {
    debug_assert!(radius >= 0.0);
    for p in &mut v.data {
        let m = pixel_norm(p);
        if m > radius {
            let s = radius / m;
            for x in p.iter_mut() {
                *x *= s;
            }
        }
    }
}

/// Vector-space operations the primal-dual engine needs on its primal and
/// dual variables. Implemented for every field type and for pairs of them.
pub trait Space: Clone {
    fn axpy(&mut self, a: f64, x: &Self);
    fn scale(&mut self, a: f64);
    fn dot(&self, other: &Self) -> f64;
    fn l1_norm(&self) -> f64;
    fn is_finite(&self) -> bool;
    /// Pixel count of the underlying grid (shared by all components).
    fn pixel_count(&self) -> usize;

    fn zeroed(&self) -> Self {
        let mut z = self.clone();
        z.scale(0.0);
        z
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self - other`.
    fn minus(&self, other: &Self) -> Self {
        let mut d = self.clone();
        d.axpy(-1.0, other);
        d
    }
}

impl<const C: usize> Space for Field<C> {
    fn axpy(&mut self, a: f64, x: &Self) {
        Field::axpy(self, a, x)
    }

    fn scale(&mut self, a: f64) {
        Field::scale(self, a)
    }

    fn dot(&self, other: &Self) -> f64 {
        dot(self, other)
    }

    fn l1_norm(&self) -> f64 {
        Field::l1_norm(self)
    }

    fn is_finite(&self) -> bool {
        Field::is_finite(self)
    }

    fn pixel_count(&self) -> usize {
        self.shape.len()
    }

    fn zeroed(&self) -> Self {
        Field::zeros(self.shape)
    }
}

impl<A: Space, B: Space> Space for (A, B) {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.0.axpy(a, &x.0);
        self.1.axpy(a, &x.1);
    }

    fn scale(&mut self, a: f64) {
        self.0.scale(a);
        self.1.scale(a);
    }

    fn dot(&self, other: &Self) -> f64 {
        self.0.dot(&other.0) + self.1.dot(&other.1)
    }

    fn l1_norm(&self) -> f64 {
        self.0.l1_norm() + self.1.l1_norm()
    }

    fn is_finite(&self) -> bool {
        self.0.is_finite() && self.1.is_finite()
    }

    fn pixel_count(&self) -> usize {
        self.0.pixel_count()
    }

    fn zeroed(&self) -> Self {
        (self.0.zeroed(), self.1.zeroed())
    }
}
