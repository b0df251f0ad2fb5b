use super::{numel, Real, Tensor};
use crate::error::{Error, Result};

/// Plan for broadcasting `b` onto the shape of `a`. Only `b` broadcasts, and
/// only by trailing-axis alignment with length-1 axes expanding.
#[derive(Clone)]
struct Broadcast {
    /// Collapsed output extents.
    dims: Vec<usize>,
    /// Stride into `b` for each collapsed dim (0 where broadcast).
    b_strides: Vec<usize>,
    same: bool,
}

impl Broadcast {
    fn new(op: &'static str, a: &[usize], b: &[usize]) -> Result<Self> {
        if a == b {
            return Ok(Broadcast {
                dims: vec![numel(a)],
                b_strides: vec![1],
                same: true,
            });
        }
        if b.len() > a.len() {
            return Err(Error::shape(op, a, b));
        }
        let mut b_full = vec![1; a.len() - b.len()];
        b_full.extend_from_slice(b);
        for (&da, &db) in a.iter().zip(&b_full) {
            if db != da && db != 1 {
                return Err(Error::shape(op, a, b));
            }
        }
        let mut strides = vec![0; a.len()];
        let mut acc = 1;
        for i in (0..a.len()).rev() {
            strides[i] = if b_full[i] == 1 { 0 } else { acc };
            acc *= b_full[i];
        }
        // Merge adjacent dims that are both broadcast or both contiguous.
        let mut dims: Vec<usize> = Vec::new();
        let mut b_strides: Vec<usize> = Vec::new();
        for i in 0..a.len() {
            if a[i] == 1 {
                continue;
            }
            if let (Some(d), Some(s)) = (dims.last_mut(), b_strides.last_mut()) {
                let both_zero = *s == 0 && strides[i] == 0;
                let contiguous = strides[i] != 0 && *s == strides[i] * a[i];
                if both_zero || contiguous {
                    *d *= a[i];
                    *s = strides[i];
                    continue;
                }
            }
            dims.push(a[i]);
            b_strides.push(strides[i]);
        }
        if dims.is_empty() {
            dims.push(1);
            b_strides.push(0);
        }
        Ok(Broadcast {
            dims,
            b_strides,
            same: false,
        })
    }

    /// Calls `f(out_offset, b_offset, b_inner_stride, run_len)` for each
    /// innermost run of the output.
    fn for_each_run(&self, mut f: impl FnMut(usize, usize, usize, usize)) {
        let nd = self.dims.len();
        let inner = self.dims[nd - 1];
        let inner_stride = self.b_strides[nd - 1];
        let outer: usize = self.dims[..nd - 1].iter().product();
        let mut idx = vec![0usize; nd - 1];
        let mut b_off = 0usize;
        for o in 0..outer {
            f(o * inner, b_off, inner_stride, inner);
            for d in (0..nd - 1).rev() {
                idx[d] += 1;
                b_off += self.b_strides[d];
                if idx[d] < self.dims[d] {
                    break;
                }
                b_off -= self.b_strides[d] * self.dims[d];
                idx[d] = 0;
            }
        }
    }

    fn expand<F: Real>(&self, b: &[F], out_len: usize) -> Vec<F> {
        if self.same {
            return b.to_vec();
        }
        let mut out = vec![F::zero(); out_len];
        self.for_each_run(|o, bo, s, n| {
            for i in 0..n {
                out[o + i] = b[bo + i * s];
            }
        });
        out
    }

    fn reduce<F: Real>(&self, g: &[F], b_len: usize) -> Vec<F> {
        if self.same {
            return g.to_vec();
        }
        let mut out = vec![F::zero(); b_len];
        self.for_each_run(|o, bo, s, n| {
            for i in 0..n {
                out[bo + i * s] = out[bo + i * s] + g[o + i];
            }
        });
        out
    }
}

#[derive(Clone, Copy)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Div => "div",
        }
    }

    #[inline]
    fn apply<F: Real>(self, a: F, b: F) -> F {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        }
    }
}

fn binary<F: Real>(a: &Tensor<F>, b: &Tensor<F>, op: BinOp) -> Result<Tensor<F>> {
    let plan = Broadcast::new(op.name(), a.shape(), b.shape())?;
    let ad = a.data();
    let bd = b.data();
    let mut out = vec![F::zero(); a.numel()];
    plan.for_each_run(|o, bo, s, n| {
        for i in 0..n {
            out[o + i] = op.apply(ad[o + i], bd[bo + i * s]);
        }
    });
    let sa = a.storage().clone();
    let sb = b.storage().clone();
    let b_len = b.numel();
    Ok(Tensor::from_op(a.shape(), out, &[a, b], move |g, needs| {
        let ga = needs[0].then(|| match op {
            BinOp::Add | BinOp::Sub => g.to_vec(),
            BinOp::Mul | BinOp::Div => {
                let bb = plan.expand(sb.as_slice(), g.len());
                g.iter()
                    .zip(&bb)
                    .map(|(&g, &b)| if matches!(op, BinOp::Mul) { g * b } else { g / b })
                    .collect()
            }
        });
        let gb = needs[1].then(|| match op {
            BinOp::Add => plan.reduce(g, b_len),
            BinOp::Sub => plan.reduce(g, b_len).into_iter().map(|v| -v).collect(),
            BinOp::Mul => {
                let prod: Vec<F> = g.iter().zip(sa.as_slice()).map(|(&g, &a)| g * a).collect();
                plan.reduce(&prod, b_len)
            }
            BinOp::Div => {
                let bb = plan.expand(sb.as_slice(), g.len());
                let prod: Vec<F> = g
                    .iter()
                    .zip(sa.as_slice())
                    .zip(&bb)
                    .map(|((&g, &a), &b)| -g * a / (b * b))
                    .collect();
                plan.reduce(&prod, b_len)
            }
        });
        vec![ga, gb]
    }))
}

fn unary<F: Real>(
    x: &Tensor<F>,
    f: impl Fn(F) -> F,
    df: impl Fn(F, F) -> F + Send + Sync + 'static,
) -> Tensor<F> {
    let out: Vec<F> = x.data().iter().map(|&v| f(v)).collect();
    let sx = x.storage().clone();
    Tensor::from_op(x.shape(), out, &[x], move |g, _| {
        vec![Some(
            g.iter()
                .zip(sx.as_slice())
                .map(|(&g, &x)| df(g, x))
                .collect(),
        )]
    })
}

fn check_axis(op: &'static str, shape: &[usize], axis: usize) -> Result<()> {
    if axis >= shape.len() {
        return Err(Error::invalid_shape(
            op,
            format!("axis {axis} out of range for {shape:?}"),
        ));
    }
    Ok(())
}

impl<F: Real> Tensor<F> {
    pub fn add(&self, other: &Tensor<F>) -> Result<Tensor<F>> {
        binary(self, other, BinOp::Add)
    }

    pub fn sub(&self, other: &Tensor<F>) -> Result<Tensor<F>> {
        binary(self, other, BinOp::Sub)
    }

    pub fn mul(&self, other: &Tensor<F>) -> Result<Tensor<F>> {
        binary(self, other, BinOp::Mul)
    }

    pub fn div(&self, other: &Tensor<F>) -> Result<Tensor<F>> {
        binary(self, other, BinOp::Div)
    }

    pub fn scale(&self, c: F) -> Tensor<F> {
        unary(self, |v| v * c, move |g, _| g * c)
    }

    pub fn add_scalar(&self, c: F) -> Tensor<F> {
        unary(self, |v| v + c, |g, _| g)
    }

    pub fn relu(&self) -> Tensor<F> {
        unary(
            self,
            |v| if v > F::zero() { v } else { F::zero() },
            |g, x| if x > F::zero() { g } else { F::zero() },
        )
    }

    /// Broadcasts length-1 axes (trailing alignment) up to `shape`.
    pub fn expand(&self, shape: &[usize]) -> Result<Tensor<F>> {
        Tensor::zeros(shape).add(self)
    }

    /// Sum of all elements as a scalar tensor.
    pub fn sum(&self) -> Tensor<F> {
        let total = self.data().iter().fold(F::zero(), |a, &b| a + b);
        let len = self.numel();
        Tensor::from_op(&[], vec![total], &[self], move |g, _| {
            vec![Some(vec![g[0]; len])]
        })
    }

    pub fn mean(&self) -> Tensor<F> {
        let n = F::of(self.numel() as f64);
        self.sum().scale(F::one() / n)
    }

    /// Per-row p-norm over everything but the leading axis: `[B, ..] -> [B]`.
    pub fn pnorm_rows(&self, p: f64) -> Result<Tensor<F>> {
        if p < 1.0 {
            return Err(Error::InvalidArgument(format!("norm order {p} < 1")));
        }
        if self.ndim() == 0 {
            return Err(Error::invalid_shape("pnorm_rows", "scalar input"));
        }
        let rows = self.shape()[0];
        let cols = self.numel() / rows;
        let pf = F::of(p);
        let norms: Vec<F> = self
            .data()
            .chunks(cols)
            .map(|r| {
                if p == 2.0 {
                    r.iter().fold(F::zero(), |a, &v| a + v * v).sqrt()
                } else {
                    r.iter()
                        .fold(F::zero(), |a, &v| a + v.abs().powf(pf))
                        .powf(F::one() / pf)
                }
            })
            .collect();
        let sx = self.storage().clone();
        let saved = norms.clone();
        Ok(Tensor::from_op(&[rows], norms, &[self], move |g, _| {
            let x = sx.as_slice();
            let mut gx = vec![F::zero(); x.len()];
            for r in 0..rows {
                let n = saved[r];
                if n == F::zero() {
                    continue;
                }
                let row = &x[r * cols..(r + 1) * cols];
                let out = &mut gx[r * cols..(r + 1) * cols];
                if p == 2.0 {
                    let c = g[r] / n;
                    out.iter_mut().zip(row).for_each(|(o, &v)| *o = c * v);
                } else {
                    let c = g[r] / n.powf(pf - F::one());
                    out.iter_mut().zip(row).for_each(|(o, &v)| {
                        *o = c * v.signum() * v.abs().powf(pf - F::one());
                    });
                }
            }
            vec![Some(gx)]
        }))
    }

    /// Forward differences along `axis`: `out[i] = x[i + 1] - x[i]`.
    pub fn diff(&self, axis: usize) -> Result<Tensor<F>> {
        check_axis("diff", self.shape(), axis)?;
        let n = self.shape()[axis];
        if n < 2 {
            return Err(Error::invalid_shape(
                "diff",
                format!("axis {axis} of {:?} has fewer than 2 entries", self.shape()),
            ));
        }
        let outer: usize = self.shape()[..axis].iter().product();
        let inner: usize = self.shape()[axis + 1..].iter().product();
        let mut shape = self.shape().to_vec();
        shape[axis] = n - 1;
        let x = self.data();
        let mut out = Vec::with_capacity(outer * (n - 1) * inner);
        for o in 0..outer {
            let base = o * n * inner;
            for i in 0..n - 1 {
                for j in 0..inner {
                    out.push(x[base + (i + 1) * inner + j] - x[base + i * inner + j]);
                }
            }
        }
        let len = self.numel();
        Ok(Tensor::from_op(&shape, out, &[self], move |g, _| {
            let mut gx = vec![F::zero(); len];
            for o in 0..outer {
                let base = o * n * inner;
                let gbase = o * (n - 1) * inner;
                for i in 0..n - 1 {
                    for j in 0..inner {
                        let gv = g[gbase + i * inner + j];
                        gx[base + (i + 1) * inner + j] = gx[base + (i + 1) * inner + j] + gv;
                        gx[base + i * inner + j] = gx[base + i * inner + j] - gv;
                    }
                }
            }
            vec![Some(gx)]
        }))
    }

    /// Concatenates tensors along `axis`; all other extents must agree.
    pub fn cat(parts: &[&Tensor<F>], axis: usize) -> Result<Tensor<F>> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("cat of zero tensors".into()))?;
        check_axis("cat", first.shape(), axis)?;
        for p in &parts[1..] {
            let ok = p.ndim() == first.ndim()
                && p.shape()
                    .iter()
                    .zip(first.shape())
                    .enumerate()
                    .all(|(i, (a, b))| i == axis || a == b);
            if !ok {
                return Err(Error::shape("cat", first.shape(), p.shape()));
            }
        }
        let outer: usize = first.shape()[..axis].iter().product();
        let inner: usize = first.shape()[axis + 1..].iter().product();
        let chunks: Vec<usize> = parts.iter().map(|p| p.shape()[axis] * inner).collect();
        let total: usize = chunks.iter().sum();
        let mut shape = first.shape().to_vec();
        shape[axis] = total / inner;
        let mut out = Vec::with_capacity(outer * total);
        for o in 0..outer {
            for (p, &c) in parts.iter().zip(&chunks) {
                out.extend_from_slice(&p.data()[o * c..(o + 1) * c]);
            }
        }
        Ok(Tensor::from_op(&shape, out, parts, move |g, needs| {
            let mut grads: Vec<Option<Vec<F>>> = needs
                .iter()
                .zip(&chunks)
                .map(|(&n, &c)| n.then(|| Vec::with_capacity(outer * c)))
                .collect();
            for o in 0..outer {
                let mut off = o * total;
                for (gp, &c) in grads.iter_mut().zip(&chunks) {
                    if let Some(gp) = gp {
                        gp.extend_from_slice(&g[off..off + c]);
                    }
                    off += c;
                }
            }
            grads
        }))
    }

    /// Nearest-neighbour 2x upsampling of the last two axes.
    pub fn upsample2x(&self) -> Result<Tensor<F>> {
        if self.ndim() < 2 {
            return Err(Error::invalid_shape("upsample2x", "needs at least 2 axes"));
        }
        let nd = self.ndim();
        let (h, w) = (self.shape()[nd - 2], self.shape()[nd - 1]);
        let planes = self.numel() / (h * w);
        let mut shape = self.shape().to_vec();
        shape[nd - 2] = 2 * h;
        shape[nd - 1] = 2 * w;
        let x = self.data();
        let mut out = vec![F::zero(); planes * 4 * h * w];
        for p in 0..planes {
            let src = &x[p * h * w..(p + 1) * h * w];
            let dst = &mut out[p * 4 * h * w..(p + 1) * 4 * h * w];
            for i in 0..2 * h {
                for j in 0..2 * w {
                    dst[i * 2 * w + j] = src[(i / 2) * w + j / 2];
                }
            }
        }
        Ok(Tensor::from_op(&shape, out, &[self], move |g, _| {
            let mut gx = vec![F::zero(); planes * h * w];
            for p in 0..planes {
                let src = &g[p * 4 * h * w..(p + 1) * 4 * h * w];
                let dst = &mut gx[p * h * w..(p + 1) * h * w];
                for i in 0..2 * h {
                    for j in 0..2 * w {
                        let d = &mut dst[(i / 2) * w + j / 2];
                        *d = *d + src[i * 2 * w + j];
                    }
                }
            }
            vec![Some(gx)]
        }))
    }

    /// Batched matrix product `[.., M, K] @ [K, N] -> [.., M, N]`.
    pub fn matmul(&self, b: &Tensor<F>) -> Result<Tensor<F>> {
        if self.ndim() < 2 || b.ndim() != 2 || self.shape()[self.ndim() - 1] != b.shape()[0] {
            return Err(Error::shape("matmul", self.shape(), b.shape()));
        }
        let k = b.shape()[0];
        let n = b.shape()[1];
        let rows = self.numel() / k;
        let mut shape = self.shape().to_vec();
        *shape.last_mut().unwrap() = n;
        let mut out = vec![F::zero(); rows * n];
        F::gemm(rows, k, n, self.data(), false, b.data(), false, &mut out, false);
        let sa = self.storage().clone();
        let sb = b.storage().clone();
        Ok(Tensor::from_op(&shape, out, &[self, b], move |g, needs| {
            let ga = needs[0].then(|| {
                let mut ga = vec![F::zero(); rows * k];
                F::gemm(rows, n, k, g, false, sb.as_slice(), true, &mut ga, false);
                ga
            });
            let gb = needs[1].then(|| {
                let mut gb = vec![F::zero(); k * n];
                F::gemm(k, rows, n, sa.as_slice(), true, g, false, &mut gb, false);
                gb
            });
            vec![ga, gb]
        }))
    }

    /// Affine map over the trailing axis: `x @ w + b`.
    pub fn linear(&self, w: &Tensor<F>, b: &Tensor<F>) -> Result<Tensor<F>> {
        self.matmul(w)?.add(b)
    }
}
