//! Dense row-major tensors with reverse-mode automatic differentiation.
//!
//! A [`Tensor`] owns a shared, immutable value buffer and optionally a graph
//! node. Operations on tensors that carry nodes record new nodes whose
//! backward closures hold whatever the adjoint needs. Node ids grow
//! monotonically, so creation order is a topological order and
//! [`Tensor::backward`] simply walks reachable nodes in descending id order.
//!
//! Precision is a type parameter: `Tensor<f32>` for training, `Tensor<f64>`
//! for gradient checks and oracles. Mixing precisions in one graph does not
//! type-check.

mod autograd;
mod conv;
pub mod fft;
pub mod memory;
mod ops;

use std::fmt;
use std::sync::Arc;

use rustfft::num_traits::Float;
use rustfft::{Fft, FftNum, FftPlanner};

pub use autograd::{grad_enabled, no_grad};
pub(crate) use autograd::Node;
pub use conv::Padding;
pub use fft::ComplexTensor;

use crate::error::{Error, Result};

/// Floating point precision of a computation graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

/// Scalar element type of a tensor.
pub trait Real:
    Float + FftNum + Default + Send + Sync + fmt::Debug + fmt::Display + 'static
{
    const PRECISION: Precision;

    fn of(v: f64) -> Self;

    fn as_f64(self) -> f64;

    /// Cached FFT plan of the given length.
    fn fft_plan(len: usize, inverse: bool) -> Arc<dyn Fft<Self>>;

    /// `c = alpha * op(a) * op(b) + beta * c` for row-major matrices, where
    /// `op(a)` is `m x k` and `op(b)` is `k x n`.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        trans_a: bool,
        b: &[Self],
        trans_b: bool,
        c: &mut [Self],
        accumulate: bool,
    ) {
        assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
        if m == 0 || n == 0 {
            return;
        }
        let (rsa, csa) = if trans_a { (1, m) } else { (k, 1) };
        let (rsb, csb) = if trans_b { (1, k) } else { (n, 1) };
        let beta = if accumulate { Self::one() } else { Self::zero() };
        // SAFETY: slice lengths checked above; strides describe in-bounds
        // row-major layouts of exactly those extents.
        unsafe {
            Self::gemm_raw(
                m,
                k,
                n,
                a.as_ptr(),
                rsa as isize,
                csa as isize,
                b.as_ptr(),
                rsb as isize,
                csb as isize,
                beta,
                c.as_mut_ptr(),
                n as isize,
            )
        }
    }

    #[doc(hidden)]
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
    );
}

macro_rules! fft_cache {
    ($t:ty) => {{
        thread_local! {
            static PLANNER: std::cell::RefCell<FftPlanner<$t>> =
                std::cell::RefCell::new(FftPlanner::new());
        }
        |len: usize, inverse: bool| {
            PLANNER.with(|p| {
                let mut p = p.borrow_mut();
                if inverse {
                    p.plan_fft_inverse(len)
                } else {
                    p.plan_fft_forward(len)
                }
            })
        }
    }};
}

impl Real for f32 {
    const PRECISION: Precision = Precision::Single;

    fn of(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }

    fn fft_plan(len: usize, inverse: bool) -> Arc<dyn Fft<Self>> {
        (fft_cache!(f32))(len, inverse)
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, beta, c, rsc, 1);
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Double;

    fn of(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn fft_plan(len: usize, inverse: bool) -> Arc<dyn Fft<Self>> {
        (fft_cache!(f64))(len, inverse)
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, beta, c, rsc, 1);
    }
}

/// Shorthand for converting an `f64` literal into `F`.
#[inline]
pub fn lit<F: Real>(v: f64) -> F {
    F::of(v)
}

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Dense n-dimensional tensor.
#[derive(Clone)]
pub struct Tensor<F: Real> {
    shape: Arc<[usize]>,
    data: Arc<memory::Storage<F>>,
    node: Option<Arc<Node<F>>>,
}

impl<F: Real> fmt::Debug for Tensor<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape())
            .field("precision", &F::PRECISION)
            .field("tracked", &self.node.is_some())
            .finish()
    }
}

impl<F: Real> Tensor<F> {
    /// Creates an untracked tensor, checking that the shape matches the data.
    pub fn from_vec(shape: &[usize], data: Vec<F>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::invalid_shape(
                "from_vec",
                format!("zero-length axis in {shape:?}"),
            ));
        }
        if numel(shape) != data.len() {
            return Err(Error::invalid_shape(
                "from_vec",
                format!("{shape:?} needs {} values, got {}", numel(shape), data.len()),
            ));
        }
        Ok(Self::raw(shape, data))
    }

    pub(crate) fn raw(shape: &[usize], data: Vec<F>) -> Self {
        debug_assert_eq!(numel(shape), data.len());
        Tensor {
            shape: shape.into(),
            data: Arc::new(memory::Storage::new(data)),
            node: None,
        }
    }

    pub fn from_f64(shape: &[usize], data: &[f64]) -> Result<Self> {
        Self::from_vec(shape, data.iter().map(|&v| F::of(v)).collect())
    }

    pub fn scalar(v: F) -> Self {
        Self::raw(&[], vec![v])
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::raw(shape, vec![F::zero(); numel(shape)])
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::raw(shape, vec![F::one(); numel(shape)])
    }

    pub fn full(shape: &[usize], v: F) -> Self {
        Self::raw(shape, vec![v; numel(shape)])
    }

    pub fn ones_like(&self) -> Self {
        Self::ones(self.shape())
    }

    /// Returns a leaf tensor with the same values that accumulates gradients.
    pub fn requires_grad(&self) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.clone(),
            node: Some(Node::leaf(self.numel())),
        }
    }

    /// Returns the same values without any graph attachment.
    pub fn detach(&self) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.clone(),
            node: None,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn precision(&self) -> Precision {
        F::PRECISION
    }

    pub fn data(&self) -> &[F] {
        self.data.as_slice()
    }

    pub fn to_vec(&self) -> Vec<F> {
        self.data.as_slice().to_vec()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data().iter().map(|v| v.as_f64()).collect()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> Result<F> {
        if self.numel() != 1 {
            return Err(Error::invalid_shape(
                "item",
                format!("tensor of shape {:?} is not a scalar", self.shape()),
            ));
        }
        Ok(self.data()[0])
    }

    pub fn is_tracked(&self) -> bool {
        self.node.is_some()
    }

    /// Whether this tensor is a gradient-accumulating leaf.
    pub fn is_leaf(&self) -> bool {
        self.node.as_ref().is_some_and(|n| n.is_leaf())
    }

    /// Accumulated gradient of a leaf tensor, if any backward pass reached it.
    pub fn grad(&self) -> Option<Vec<F>> {
        self.node.as_ref().and_then(|n| n.grad())
    }

    pub fn zero_grad(&self) {
        if let Some(n) = &self.node {
            n.zero_grad();
        }
    }

    pub(crate) fn storage(&self) -> &Arc<memory::Storage<F>> {
        &self.data
    }

    /// Builds the result of a differentiable op. `backward` receives the
    /// upstream gradient and a per-input flag saying whether that input needs
    /// one, and returns one optional gradient per input.
    pub(crate) fn from_op<B>(shape: &[usize], data: Vec<F>, inputs: &[&Tensor<F>], backward: B) -> Self
    where
        B: Fn(&[F], &[bool]) -> Vec<Option<Vec<F>>> + Send + Sync + 'static,
    {
        let mut out = Self::raw(shape, data);
        if grad_enabled() && inputs.iter().any(|t| t.node.is_some()) {
            let parents: Vec<Option<Arc<Node<F>>>> =
                inputs.iter().map(|t| t.node.clone()).collect();
            out.node = Some(Node::op(out.numel(), parents, backward));
        }
        out
    }

    /// View with a new shape; shares values and graph node.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        if numel(shape) != self.numel() || shape.iter().any(|&d| d == 0) {
            return Err(Error::shape("reshape", self.shape(), shape));
        }
        Ok(Tensor {
            shape: shape.into(),
            data: self.data.clone(),
            node: self.node.clone(),
        })
    }

    /// Runs reverse-mode differentiation from this one-element tensor,
    /// accumulating into every reachable leaf.
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return Err(Error::Backward(format!(
                "loss has shape {:?} ({} elements)",
                self.shape(),
                self.numel()
            )));
        }
        let node = self
            .node
            .as_ref()
            .ok_or_else(|| Error::Backward("loss is not attached to a graph".into()))?;
        autograd::run_backward(node, vec![F::one()]);
        Ok(())
    }
}
