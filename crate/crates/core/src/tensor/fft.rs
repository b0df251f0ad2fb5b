//! Real-input FFTs along a chosen axis, and the line transforms the spectral
//! layers are built from.
//!
//! Conventions: the forward transform is unnormalized,
//! `X[k] = sum_n x[n] exp(-2 pi i k n / N)`, and the inverse divides by `N`.
//! Complex values are stored interleaved in a trailing axis of length 2.

use rustfft::num_complex::Complex;

use super::{Real, Tensor};
use crate::error::{Error, Result};

/// In-place complex FFT of every consecutive length-`len` chunk of `buf`.
/// The inverse direction is unnormalized.
pub(crate) fn fft_lines<F: Real>(buf: &mut [Complex<F>], len: usize, inverse: bool) {
    if buf.is_empty() {
        return;
    }
    let plan = F::fft_plan(len, inverse);
    let mut scratch = vec![Complex::new(F::zero(), F::zero()); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(buf, &mut scratch);
}

/// First `bins` coefficients of the unnormalized DFT of a real line.
pub(crate) fn analyze<F: Real>(line: &[F], bins: usize, out: &mut [Complex<F>]) {
    let n = line.len();
    let mut buf: Vec<Complex<F>> = line.iter().map(|&v| Complex::new(v, F::zero())).collect();
    fft_lines(&mut buf, n, false);
    out[..bins].copy_from_slice(&buf[..bins]);
}

/// `out[n] = Re(sum_k coeffs[k] exp(+2 pi i k n / N))` with `N = out.len()`
/// and coefficients past `coeffs.len()` taken as zero.
pub(crate) fn synthesize<F: Real>(coeffs: &[Complex<F>], out: &mut [F]) {
    let n = out.len();
    let mut buf = vec![Complex::new(F::zero(), F::zero()); n];
    buf[..coeffs.len()].copy_from_slice(coeffs);
    fft_lines(&mut buf, n, true);
    out.iter_mut().zip(&buf).for_each(|(o, c)| *o = c.re);
}

/// Weight of half-spectrum bin `k` when reconstructing a real signal of
/// length `n`: interior bins stand for a conjugate pair.
pub(crate) fn hermitian_weight(k: usize, n: usize) -> f64 {
    if k == 0 || (n % 2 == 0 && k == n / 2) {
        1.0
    } else {
        2.0
    }
}

/// Complex tensor stored as a real tensor with a trailing axis of length 2.
#[derive(Clone, Debug)]
pub struct ComplexTensor<F: Real> {
    inner: Tensor<F>,
}

impl<F: Real> ComplexTensor<F> {
    /// Wraps an interleaved real tensor whose last axis has length 2.
    pub fn from_interleaved(inner: Tensor<F>) -> Result<Self> {
        if inner.shape().last() != Some(&2) {
            return Err(Error::invalid_shape(
                "complex",
                format!("interleaved tensor {:?} lacks trailing axis 2", inner.shape()),
            ));
        }
        Ok(ComplexTensor { inner })
    }

    /// Logical complex shape (without the interleaving axis).
    pub fn shape(&self) -> &[usize] {
        let s = self.inner.shape();
        &s[..s.len() - 1]
    }

    pub fn as_interleaved(&self) -> &Tensor<F> {
        &self.inner
    }

    pub fn values(&self) -> Vec<Complex<F>> {
        self.inner
            .data()
            .chunks(2)
            .map(|c| Complex::new(c[0], c[1]))
            .collect()
    }

    /// Inverse of [`Tensor::rfft`]: reconstructs a real signal of `length`
    /// samples from its `length / 2 + 1` half-spectrum bins along `axis`.
    pub fn irfft(&self, axis: usize, length: usize) -> Result<Tensor<F>> {
        let shape = self.shape().to_vec();
        if axis >= shape.len() {
            return Err(Error::invalid_shape("irfft", format!("axis {axis} of {shape:?}")));
        }
        if length == 0 {
            return Err(Error::invalid_shape("irfft", "zero-length output axis"));
        }
        let bins = length / 2 + 1;
        if shape[axis] != bins {
            return Err(Error::invalid_shape(
                "irfft",
                format!("length {length} needs {bins} bins, axis {axis} has {}", shape[axis]),
            ));
        }
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let spec = self.values();
        let mut out_shape = shape.clone();
        out_shape[axis] = length;
        let norm = F::one() / F::of(length as f64);
        let mut out = vec![F::zero(); outer * length * inner];
        let mut coeffs = vec![Complex::new(F::zero(), F::zero()); bins];
        let mut line = vec![F::zero(); length];
        for o in 0..outer {
            for j in 0..inner {
                for (k, c) in coeffs.iter_mut().enumerate() {
                    let w = F::of(hermitian_weight(k, length));
                    *c = spec[(o * bins + k) * inner + j] * w;
                }
                synthesize(&coeffs, &mut line);
                for (n, &v) in line.iter().enumerate() {
                    out[(o * length + n) * inner + j] = v * norm;
                }
            }
        }
        Ok(Tensor::from_op(&out_shape, out, &[&self.inner], move |g, _| {
            let mut gs = vec![F::zero(); outer * bins * inner * 2];
            let mut line = vec![F::zero(); length];
            let mut bins_buf = vec![Complex::new(F::zero(), F::zero()); bins];
            for o in 0..outer {
                for j in 0..inner {
                    for (n, v) in line.iter_mut().enumerate() {
                        *v = g[(o * length + n) * inner + j];
                    }
                    analyze(&line, bins, &mut bins_buf);
                    for (k, c) in bins_buf.iter().enumerate() {
                        let w = F::of(hermitian_weight(k, length)) * norm;
                        let idx = ((o * bins + k) * inner + j) * 2;
                        gs[idx] = c.re * w;
                        gs[idx + 1] = c.im * w;
                    }
                }
            }
            vec![Some(gs)]
        }))
    }
}

impl<F: Real> Tensor<F> {
    /// Unnormalized real-to-complex FFT along `axis`, keeping the
    /// `N / 2 + 1` non-redundant bins.
    pub fn rfft(&self, axis: usize) -> Result<ComplexTensor<F>> {
        let shape = self.shape().to_vec();
        if axis >= shape.len() {
            return Err(Error::invalid_shape("rfft", format!("axis {axis} of {shape:?}")));
        }
        let n = shape[axis];
        if n == 0 {
            return Err(Error::invalid_shape("rfft", "zero-length axis"));
        }
        let bins = n / 2 + 1;
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let x = self.data();
        let mut out = vec![F::zero(); outer * bins * inner * 2];
        let mut line = vec![F::zero(); n];
        let mut spec = vec![Complex::new(F::zero(), F::zero()); bins];
        for o in 0..outer {
            for j in 0..inner {
                for (i, v) in line.iter_mut().enumerate() {
                    *v = x[(o * n + i) * inner + j];
                }
                analyze(&line, bins, &mut spec);
                for (k, c) in spec.iter().enumerate() {
                    let idx = ((o * bins + k) * inner + j) * 2;
                    out[idx] = c.re;
                    out[idx + 1] = c.im;
                }
            }
        }
        let mut out_shape = shape.clone();
        out_shape[axis] = bins;
        out_shape.push(2);
        let t = Tensor::from_op(&out_shape, out, &[self], move |g, _| {
            let mut gx = vec![F::zero(); outer * n * inner];
            let mut coeffs = vec![Complex::new(F::zero(), F::zero()); bins];
            let mut line = vec![F::zero(); n];
            for o in 0..outer {
                for j in 0..inner {
                    for (k, c) in coeffs.iter_mut().enumerate() {
                        let idx = ((o * bins + k) * inner + j) * 2;
                        *c = Complex::new(g[idx], g[idx + 1]);
                    }
                    synthesize(&coeffs, &mut line);
                    for (i, &v) in line.iter().enumerate() {
                        gx[(o * n + i) * inner + j] = v;
                    }
                }
            }
            vec![Some(gx)]
        });
        ComplexTensor::from_interleaved(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal() {
        let c = 2.5;
        let x = Tensor::<f64>::full(&[4], c);
        let v = x.rfft(0).unwrap().values();
        assert_eq!(v.len(), 3);
        assert!((v[0].re - 4.0 * c).abs() < 1e-14 && v[0].im.abs() < 1e-14);
        for z in &v[1..] {
            assert!(z.norm() < 1e-14);
        }
    }

    #[test]
    fn unit_impulse() {
        let x = Tensor::<f64>::from_f64(&[4], &[1., 0., 0., 0.]).unwrap();
        for z in x.rfft(0).unwrap().values() {
            assert!((z.re - 1.0).abs() < 1e-15 && z.im.abs() < 1e-15);
        }
    }

    #[test]
    fn irfft_rejects_inconsistent_length() {
        let x = Tensor::<f64>::ones(&[2, 6]);
        let s = x.rfft(1).unwrap();
        assert!(s.irfft(1, 8).is_err());
        assert!(s.irfft(1, 6).is_ok());
        assert!(s.irfft(1, 7).is_ok());
    }

    #[test]
    fn round_trip_along_middle_axis() {
        let data: Vec<f64> = (0..2 * 5 * 3).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let x = Tensor::<f64>::from_f64(&[2, 5, 3], &data).unwrap();
        let back = x.rfft(1).unwrap().irfft(1, 5).unwrap();
        for (a, b) in back.data().iter().zip(&data) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
