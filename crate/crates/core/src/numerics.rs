//! Scalar and array primitives shared by every module: activations, affine
//! maps, weight initialization and the seeded random source.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand_core::{RngCore, SeedableRng};

use crate::{Error, Result};

/// Math shim so the crate builds without `std`. With the default `std`
/// feature these are the usual intrinsics; with `libm` they come from libm.
pub(crate) mod real {
    #[cfg(feature = "std")]
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    #[cfg(all(not(feature = "std"), feature = "libm"))]
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }

    #[cfg(feature = "std")]
    pub fn tanh(x: f64) -> f64 {
        x.tanh()
    }
    #[cfg(all(not(feature = "std"), feature = "libm"))]
    pub fn tanh(x: f64) -> f64 {
        libm::tanh(x)
    }

    #[cfg(feature = "std")]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[cfg(all(not(feature = "std"), feature = "libm"))]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }

    #[cfg(feature = "std")]
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    #[cfg(all(not(feature = "std"), feature = "libm"))]
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }

    pub fn abs(x: f64) -> f64 {
        if x < 0.0 {
            -x
        } else {
            x
        }
    }
}

/// Dense row-major matrix of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix2D {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix2D {
    /// Builds a matrix from row-major values, checking length and finiteness.
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Matrix2D { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix2D { rows, cols, values: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Dense vector of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector1D {
    values: Vec<f64>,
}

impl Vector1D {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("vector entries must be finite".into()));
        }
        Ok(Vector1D { values })
    }

    pub fn zeros(len: usize) -> Self {
        Vector1D { values: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl From<Vec<f64>> for Vector1D {
    fn from(values: Vec<f64>) -> Self {
        Vector1D { values }
    }
}

/// Seeded deterministic random source (ChaCha with 8 rounds).
///
/// Identical seeds yield identical draw sequences on every platform, which
/// is what makes training runs and checkpoints byte-reproducible. One
/// instance belongs to one consumer; never share it across threads.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: rand_chacha::ChaCha8Rng,
}

impl SeededRng {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        SeededRng { seed, inner: rand_chacha::ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        Self::ALGORITHM
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw from `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Unbiased draw from `0..n` by rejection sampling.
    pub fn next_below(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_below requires n > 0");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Derives an independent child generator from this generator's seed and
    /// a stream label, without consuming any draws from `self`.
    pub fn derive(&self, stream: u64) -> SeededRng {
        SeededRng::new(derive_seed(self.seed, stream, 0))
    }
}

/// Mixes a base seed and two labels into a new seed (splitmix64 chain).
/// Used wherever a protocol calls for per-purpose sub-seeds.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(base) ^ a) ^ b)
}

/// Pointwise activation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Identity,
    Relu,
}

/// Numerically stable logistic function. For x < 0 the exp(x)/(1+exp(x))
/// branch avoids overflow; saturates exactly to 0.0 / 1.0 for |x| large.
#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + real::exp(-x))
    } else {
        let e = real::exp(x);
        e / (1.0 + e)
    }
}

#[inline]
pub(crate) fn tanh(x: f64) -> f64 {
    real::tanh(x)
}

/// Applies an activation to a finite scalar.
pub fn activation(x: f64, kind: Activation) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("activation input must be finite, got {x}")));
    }
    Ok(apply_activation(x, kind))
}

#[inline]
pub(crate) fn apply_activation(x: f64, kind: Activation) -> f64 {
    match kind {
        Activation::Sigmoid => sigmoid(x),
        Activation::Tanh => tanh(x),
        Activation::Identity => x,
        Activation::Relu => {
            if x > 0.0 {
                x
            } else {
                0.0
            }
        }
    }
}

/// Derivative of an activation expressed through its output value.
#[inline]
pub(crate) fn activation_grad_from_output(y: f64, kind: Activation) -> f64 {
    match kind {
        Activation::Sigmoid => y * (1.0 - y),
        Activation::Tanh => 1.0 - y * y,
        Activation::Identity => 1.0,
        Activation::Relu => {
            if y > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Computes `W·x + b`.
pub fn affine(w: &Matrix2D, x: &Vector1D, b: &Vector1D) -> Result<Vector1D> {
    if w.cols() != x.len() || w.rows() != b.len() {
        return Err(Error::Shape(format!(
            "affine expects W {}x{} against x[{}] and b[{}]",
            w.rows(),
            w.cols(),
            x.len(),
            b.len()
        )));
    }
    let mut out = b.values().to_vec();
    for (r, acc) in out.iter_mut().enumerate() {
        *acc += dot(w.row(r), x.values());
    }
    Ok(Vector1D::from(out))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// out[r] += dot(W.row(r), x); slice-level sibling of `affine` for hot loops.
#[inline]
pub(crate) fn matvec_add(w: &Matrix2D, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.cols(), x.len());
    debug_assert_eq!(w.rows(), out.len());
    for (r, acc) in out.iter_mut().enumerate() {
        *acc += dot(w.row(r), x);
    }
}

/// out[c] += dot(W.col(c), y), i.e. out += Wᵀ·y.
#[inline]
pub(crate) fn matvec_transpose_add(w: &Matrix2D, y: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.rows(), y.len());
    debug_assert_eq!(w.cols(), out.len());
    for (r, &yr) in y.iter().enumerate() {
        for (o, &wrc) in out.iter_mut().zip(w.row(r)) {
            *o += yr * wrc;
        }
    }
}

/// W += y ⊗ x (rank-one update), the gradient shape of an affine map.
#[inline]
pub(crate) fn outer_add(w: &mut Matrix2D, y: &[f64], x: &[f64]) {
    debug_assert_eq!(w.rows(), y.len());
    debug_assert_eq!(w.cols(), x.len());
    for (r, &yr) in y.iter().enumerate() {
        for (wrc, &xc) in w.row_mut(r).iter_mut().zip(x) {
            *wrc += yr * xc;
        }
    }
}

/// Weight initialization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// i.i.d. uniform on `[-1/sqrt(fan_in), +1/sqrt(fan_in)]`.
    UniformFanIn,
    Zeros,
}

/// Draws a freshly initialized `rows x cols` matrix.
pub fn init_params(rows: usize, cols: usize, rng: &mut SeededRng, scheme: InitScheme) -> Result<Matrix2D> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "init_params dimensions must be positive, got {rows}x{cols}"
        )));
    }
    let values = match scheme {
        InitScheme::Zeros => vec![0.0; rows * cols],
        InitScheme::UniformFanIn => {
            let bound = 1.0 / real::sqrt(cols as f64);
            (0..rows * cols).map(|_| rng.uniform(-bound, bound)).collect()
        }
    };
    Ok(Matrix2D { rows, cols, values })
}
