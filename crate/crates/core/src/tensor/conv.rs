use rayon::prelude::*;

use super::{Real, Tensor};
use crate::error::{Error, Result};

/// Spatial padding mode of [`Tensor::conv2d`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Zero padding of `(k - 1) / 2` on each side; needs odd kernels.
    Same,
    Valid,
}

#[derive(Clone, Copy)]
struct Geometry {
    cin: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    pad_h: usize,
    pad_w: usize,
    stride: usize,
    ho: usize,
    wo: usize,
}

impl Geometry {
    fn pointwise(&self) -> bool {
        self.kh == 1 && self.kw == 1 && self.stride == 1 && self.pad_h == 0 && self.pad_w == 0
    }

    fn k(&self) -> usize {
        self.cin * self.kh * self.kw
    }

    fn p(&self) -> usize {
        self.ho * self.wo
    }

    fn im2col<F: Real>(&self, x: &[F], col: &mut [F]) {
        let p = self.p();
        for ci in 0..self.cin {
            let plane = &x[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for i in 0..self.kh {
                for j in 0..self.kw {
                    let row = &mut col[((ci * self.kh + i) * self.kw + j) * p..][..p];
                    for oy in 0..self.ho {
                        let y = (oy * self.stride + i) as isize - self.pad_h as isize;
                        let dst = &mut row[oy * self.wo..(oy + 1) * self.wo];
                        if y < 0 || y >= self.h as isize {
                            dst.fill(F::zero());
                            continue;
                        }
                        let src = &plane[y as usize * self.w..(y as usize + 1) * self.w];
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let xx = (ox * self.stride + j) as isize - self.pad_w as isize;
                            *d = if xx < 0 || xx >= self.w as isize {
                                F::zero()
                            } else {
                                src[xx as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im<F: Real>(&self, col: &[F], gx: &mut [F]) {
        let p = self.p();
        for ci in 0..self.cin {
            let plane = &mut gx[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for i in 0..self.kh {
                for j in 0..self.kw {
                    let row = &col[((ci * self.kh + i) * self.kw + j) * p..][..p];
                    for oy in 0..self.ho {
                        let y = (oy * self.stride + i) as isize - self.pad_h as isize;
                        if y < 0 || y >= self.h as isize {
                            continue;
                        }
                        let dst = &mut plane[y as usize * self.w..(y as usize + 1) * self.w];
                        for ox in 0..self.wo {
                            let xx = (ox * self.stride + j) as isize - self.pad_w as isize;
                            if xx >= 0 && xx < self.w as isize {
                                dst[xx as usize] = dst[xx as usize] + row[oy * self.wo + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

impl<F: Real> Tensor<F> {
    /// 2-D cross-correlation plus bias: `[B, Cin, H, W] * [Cout, Cin, kh, kw]`.
    pub fn conv2d(
        &self,
        weight: &Tensor<F>,
        bias: &Tensor<F>,
        padding: Padding,
        stride: usize,
    ) -> Result<Tensor<F>> {
        let (xs, ws) = (self.shape(), weight.shape());
        if xs.len() != 4 || ws.len() != 4 || xs[1] != ws[1] {
            return Err(Error::shape("conv2d", xs, ws));
        }
        if bias.shape() != [ws[0]] {
            return Err(Error::shape("conv2d bias", ws, bias.shape()));
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("conv2d stride must be positive".into()));
        }
        let (batch, cin, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let (cout, kh, kw) = (ws[0], ws[2], ws[3]);
        let (pad_h, pad_w) = match padding {
            Padding::Valid => (0, 0),
            Padding::Same => {
                if kh % 2 == 0 || kw % 2 == 0 {
                    return Err(Error::invalid_shape(
                        "conv2d",
                        format!("same padding needs odd kernel, got {kh}x{kw}"),
                    ));
                }
                ((kh - 1) / 2, (kw - 1) / 2)
            }
        };
        if kh > h + 2 * pad_h || kw > w + 2 * pad_w {
            return Err(Error::invalid_shape(
                "conv2d",
                format!(
                    "kernel {kh}x{kw} larger than padded input {}x{}",
                    h + 2 * pad_h,
                    w + 2 * pad_w
                ),
            ));
        }
        let geo = Geometry {
            cin,
            h,
            w,
            kh,
            kw,
            pad_h,
            pad_w,
            stride,
            ho: (h + 2 * pad_h - kh) / stride + 1,
            wo: (w + 2 * pad_w - kw) / stride + 1,
        };
        let (k, p) = (geo.k(), geo.p());
        let in_len = cin * h * w;
        let out_len = cout * p;

        let x = self.data();
        let wd = weight.data();
        let bd = bias.data();
        let mut out = vec![F::zero(); batch * out_len];
        out.par_chunks_mut(out_len).enumerate().for_each(|(b, o)| {
            for (co, row) in o.chunks_mut(p).enumerate() {
                row.fill(bd[co]);
            }
            let xb = &x[b * in_len..(b + 1) * in_len];
            if geo.pointwise() {
                F::gemm(cout, k, p, wd, false, xb, false, o, true);
            } else {
                let mut col = vec![F::zero(); k * p];
                geo.im2col(xb, &mut col);
                F::gemm(cout, k, p, wd, false, &col, false, o, true);
            }
        });

        let sx = self.storage().clone();
        let sw = weight.storage().clone();
        let shape = [batch, cout, geo.ho, geo.wo];
        Ok(Tensor::from_op(&shape, out, &[self, weight, bias], move |g, needs| {
            let x = sx.as_slice();
            let wd = sw.as_slice();
            let gx = needs[0].then(|| {
                let mut gx = vec![F::zero(); batch * in_len];
                gx.par_chunks_mut(in_len).enumerate().for_each(|(b, gxb)| {
                    let gb = &g[b * out_len..(b + 1) * out_len];
                    if geo.pointwise() {
                        F::gemm(k, cout, p, wd, true, gb, false, gxb, false);
                    } else {
                        let mut col = vec![F::zero(); k * p];
                        F::gemm(k, cout, p, wd, true, gb, false, &mut col, false);
                        geo.col2im(&col, gxb);
                    }
                });
                gx
            });
            let gw = needs[1].then(|| {
                let partials: Vec<Vec<F>> = (0..batch)
                    .into_par_iter()
                    .map(|b| {
                        let gb = &g[b * out_len..(b + 1) * out_len];
                        let xb = &x[b * in_len..(b + 1) * in_len];
                        let mut gw = vec![F::zero(); cout * k];
                        if geo.pointwise() {
                            F::gemm(cout, p, k, gb, false, xb, true, &mut gw, false);
                        } else {
                            let mut col = vec![F::zero(); k * p];
                            geo.im2col(xb, &mut col);
                            F::gemm(cout, p, k, gb, false, &col, true, &mut gw, false);
                        }
                        gw
                    })
                    .collect();
                // Fixed-order reduction keeps results independent of threading.
                let mut gw = vec![F::zero(); cout * k];
                for part in partials {
                    gw.iter_mut().zip(part).for_each(|(a, b)| *a = *a + b);
                }
                gw
            });
            let gbias = needs[2].then(|| {
                let mut gbias = vec![F::zero(); cout];
                for b in 0..batch {
                    for (co, gsum) in gbias.iter_mut().enumerate() {
                        let row = &g[b * out_len + co * p..][..p];
                        *gsum = row.iter().fold(*gsum, |a, &v| a + v);
                    }
                }
                gbias
            });
            vec![gx, gw, gbias]
        }))
    }
}
