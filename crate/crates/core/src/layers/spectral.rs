//! Spectral convolutions over `[B, C, N_r, N_z]` fields.
//!
//! [`SpectralConv2d`] transforms both spatial axes, mixes channels on a block
//! of low modes and zeroes the rest. The last axis uses the half spectrum;
//! along the full-length `r` axis both the positive band `0..modes_r` and the
//! negative band `-1..-(modes_r - 1)` are kept, each with its own weights.
//!
//! [`FactorizedSpectralConv`] applies an independent 1-D transform along each
//! spatial axis and sums the per-axis results in physical space.
//!
//! Both are fused autodiff ops: forward and adjoint are written directly in
//! terms of the line transforms of [`crate::tensor::fft`].

use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;

use super::{check_width, uniform, Module, Param};
use crate::error::{Error, Result};
use crate::tensor::fft::{fft_lines, hermitian_weight};
use crate::tensor::{lit, Real, Tensor};

type C<F> = Complex<F>;

fn czero<F: Real>() -> C<F> {
    C::new(F::zero(), F::zero())
}

fn complex_values<F: Real>(t: &Tensor<F>) -> Vec<C<F>> {
    t.data().chunks(2).map(|c| C::new(c[0], c[1])).collect()
}

fn interleave<F: Real>(v: &[C<F>]) -> Vec<F> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// `(weight slot, row)` pairs retained along the full-length axis.
pub(crate) fn kept_rows(modes: usize, n: usize) -> Vec<(usize, usize)> {
    let mut kept: Vec<(usize, usize)> = (0..modes.min(n)).map(|k| (k, k)).collect();
    for j in 1..modes {
        if n >= j && n - j >= modes {
            kept.push((modes + j - 1, n - j));
        }
    }
    kept
}

fn check_modes(what: &str, modes: usize, n: usize) -> Result<()> {
    if modes == 0 || modes > n / 2 + 1 {
        return Err(Error::Config(format!(
            "{what} modes {modes} outside 1..={} for grid length {n}",
            n / 2 + 1
        )));
    }
    Ok(())
}

/// Forward transform of one real `[nr, nz]` plane at the kept modes:
/// unnormalized DFT along `z` (first `mz` bins) then along `r`.
fn analyze2<F: Real>(plane: &[F], nr: usize, nz: usize, mz: usize, kept: &[(usize, usize)], out: &mut [C<F>]) {
    let mut rows: Vec<C<F>> = plane.iter().map(|&v| C::new(v, F::zero())).collect();
    fft_lines(&mut rows, nz, false);
    let mut cols = vec![czero(); mz * nr];
    for r in 0..nr {
        for kz in 0..mz {
            cols[kz * nr + r] = rows[r * nz + kz];
        }
    }
    fft_lines(&mut cols, nr, false);
    for (qi, &(_, row)) in kept.iter().enumerate() {
        for kz in 0..mz {
            out[qi * mz + kz] = cols[kz * nr + row];
        }
    }
}

/// `Re(sum over kept modes of coeff * exp(+i(theta_r + theta_z)))`.
fn synth2<F: Real>(coeffs: &[C<F>], nr: usize, nz: usize, mz: usize, kept: &[(usize, usize)], out: &mut [F]) {
    let mut cols = vec![czero(); mz * nr];
    for (qi, &(_, row)) in kept.iter().enumerate() {
        for kz in 0..mz {
            cols[kz * nr + row] = coeffs[qi * mz + kz];
        }
    }
    fft_lines(&mut cols, nr, true);
    let mut rows = vec![czero(); nr * nz];
    for r in 0..nr {
        for kz in 0..mz {
            rows[r * nz + kz] = cols[kz * nr + r];
        }
    }
    fft_lines(&mut rows, nz, true);
    out.iter_mut().zip(&rows).for_each(|(o, c)| *o = c.re);
}

/// `ys[b, o, m] = sum_i xs[b, i, m] * w[slot(m), i, o]` where `m` runs over
/// `modes` positions and `slot_of` maps a position to its weight block.
fn mix<F: Real>(
    xs: &[C<F>],
    w: &[C<F>],
    batch: usize,
    cin: usize,
    cout: usize,
    modes: usize,
    slot_of: impl Fn(usize) -> usize,
) -> Vec<C<F>> {
    let mut ys = vec![czero(); batch * cout * modes];
    for b in 0..batch {
        for m in 0..modes {
            let wb = &w[slot_of(m) * cin * cout..][..cin * cout];
            for i in 0..cin {
                let x = xs[(b * cin + i) * modes + m];
                let wr = &wb[i * cout..(i + 1) * cout];
                for (o, &wv) in wr.iter().enumerate() {
                    let y = &mut ys[(b * cout + o) * modes + m];
                    *y = *y + x * wv;
                }
            }
        }
    }
    ys
}

/// Adjoint of [`mix`]: returns `(gxs, gw)`.
#[allow(clippy::too_many_arguments)]
fn mix_adjoint<F: Real>(
    gys: &[C<F>],
    xs: &[C<F>],
    w: &[C<F>],
    batch: usize,
    cin: usize,
    cout: usize,
    modes: usize,
    slots: usize,
    slot_of: impl Fn(usize) -> usize,
) -> (Vec<C<F>>, Vec<C<F>>) {
    let mut gxs = vec![czero(); batch * cin * modes];
    let mut gw = vec![czero(); slots * cin * cout];
    for b in 0..batch {
        for m in 0..modes {
            let s = slot_of(m);
            for i in 0..cin {
                let x = xs[(b * cin + i) * modes + m];
                let mut acc = czero();
                for o in 0..cout {
                    let gy = gys[(b * cout + o) * modes + m];
                    let widx = (s * cin + i) * cout + o;
                    acc = acc + gy * w[widx].conj();
                    gw[widx] = gw[widx] + gy * x.conj();
                }
                gxs[(b * cin + i) * modes + m] = acc;
            }
        }
    }
    (gxs, gw)
}

/// 2-D spectral convolution with weights `[2 modes_r - 1, modes_z, Cin, Cout]`
/// (complex, interleaved). Slot `s < modes_r` holds frequency `+s` along `r`;
/// slot `modes_r + j - 1` holds frequency `-j`.
#[derive(Clone, Debug)]
pub struct SpectralConv2d<F: Real> {
    pub weight: Param<F>,
    modes_r: usize,
    modes_z: usize,
}

impl<F: Real> SpectralConv2d<F> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        cin: usize,
        cout: usize,
        modes_r: usize,
        modes_z: usize,
        grid: (usize, usize),
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        check_modes("r", modes_r, grid.0)?;
        check_modes("z", modes_z, grid.1)?;
        let scale = 1.0 / (cin * cout) as f64;
        let shape = [2 * modes_r - 1, modes_z, cin, cout, 2];
        Ok(SpectralConv2d {
            weight: Param::new(format!("{name}.weight"), uniform(rng, &shape, 0.0, scale)),
            modes_r,
            modes_z,
        })
    }

    pub fn from_weight(weight: Param<F>) -> Result<Self> {
        let s = weight.shape().to_vec();
        if s.len() != 5 || s[4] != 2 || s[0] % 2 == 0 {
            return Err(Error::invalid_shape(
                "spectral weights",
                format!("{s:?} is not [2m-1, mz, Cin, Cout, 2]"),
            ));
        }
        Ok(SpectralConv2d {
            modes_r: s[0].div_ceil(2),
            modes_z: s[1],
            weight,
        })
    }

    pub fn modes(&self) -> (usize, usize) {
        (self.modes_r, self.modes_z)
    }

    pub(crate) fn analytic_count(cin: usize, cout: usize, modes_r: usize, modes_z: usize) -> usize {
        (2 * modes_r - 1) * modes_z * cin * cout * 2
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        let ws = self.weight.shape();
        let (cin, cout) = (ws[2], ws[3]);
        check_width("spectral_conv2d", x, cin)?;
        let (batch, nr, nz) = (x.shape()[0], x.shape()[2], x.shape()[3]);
        check_modes("r", self.modes_r, nr)?;
        check_modes("z", self.modes_z, nz)?;
        let mz = self.modes_z;
        let mr = self.modes_r;
        let kept = kept_rows(mr, nr);
        let q = kept.len();
        let modes = q * mz;
        let slots = ws[0];
        let slot_of = {
            let kept = kept.clone();
            move |m: usize| kept[m / mz].0 * mz + m % mz
        };
        let plane = nr * nz;

        let xd = x.data();
        let mut xs = vec![czero(); batch * cin * modes];
        for (p, chunk) in xs.chunks_mut(modes).enumerate() {
            analyze2(&xd[p * plane..(p + 1) * plane], nr, nz, mz, &kept, chunk);
        }
        let w = complex_values(self.weight.tensor());
        let mut ys = mix(&xs, &w, batch, cin, cout, modes, &slot_of);
        let norm = 1.0 / (nr * nz) as f64;
        let zw: Vec<F> = (0..mz).map(|k| lit(hermitian_weight(k, nz) * norm)).collect();
        for (m, y) in ys.iter_mut().enumerate() {
            *y = *y * zw[m % mz];
        }
        let mut out = vec![F::zero(); batch * cout * plane];
        for (p, o) in out.chunks_mut(plane).enumerate() {
            synth2(&ys[p * modes..(p + 1) * modes], nr, nz, mz, &kept, o);
        }

        let shape = [batch, cout, nr, nz];
        Ok(Tensor::from_op(
            &shape,
            out,
            &[x, self.weight.tensor()],
            move |g, needs| {
                let mut gys = vec![czero(); batch * cout * modes];
                for (p, chunk) in gys.chunks_mut(modes).enumerate() {
                    analyze2(&g[p * plane..(p + 1) * plane], nr, nz, mz, &kept, chunk);
                    for (m, v) in chunk.iter_mut().enumerate() {
                        *v = *v * zw[m % mz];
                    }
                }
                let (gxs, gw) =
                    mix_adjoint(&gys, &xs, &w, batch, cin, cout, modes, slots * mz, &slot_of);
                let gx = needs[0].then(|| {
                    let mut gx = vec![F::zero(); batch * cin * plane];
                    for (p, o) in gx.chunks_mut(plane).enumerate() {
                        synth2(&gxs[p * modes..(p + 1) * modes], nr, nz, mz, &kept, o);
                    }
                    gx
                });
                vec![gx, needs[1].then(|| interleave(&gw))]
            },
        ))
    }
}

impl<F: Real> Module<F> for SpectralConv2d<F> {
    fn params(&self) -> Vec<&Param<F>> {
        vec![&self.weight]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.weight]
    }
}

/// Which spatial axis a 1-D transform runs along.
#[derive(Clone, Copy, Debug)]
enum Axis {
    R,
    Z,
}

/// Lines of a `[nr, nz]` plane along `axis`: `(count, len, elem_stride, line_stride)`.
fn lines(axis: Axis, nr: usize, nz: usize) -> (usize, usize, usize, usize) {
    match axis {
        Axis::R => (nz, nr, nz, 1),
        Axis::Z => (nr, nz, 1, nz),
    }
}

fn analyze1<F: Real>(plane: &[F], axis: Axis, nr: usize, nz: usize, m: usize, out: &mut [C<F>]) {
    let (count, len, es, ls) = lines(axis, nr, nz);
    let mut buf = vec![czero(); count * len];
    for l in 0..count {
        for n in 0..len {
            buf[l * len + n] = C::new(plane[l * ls + n * es], F::zero());
        }
    }
    fft_lines(&mut buf, len, false);
    for l in 0..count {
        out[l * m..(l + 1) * m].copy_from_slice(&buf[l * len..l * len + m]);
    }
}

fn synth1<F: Real>(coeffs: &[C<F>], axis: Axis, nr: usize, nz: usize, m: usize, out: &mut [F]) {
    let (count, len, es, ls) = lines(axis, nr, nz);
    let mut buf = vec![czero(); count * len];
    for l in 0..count {
        buf[l * len..l * len + m].copy_from_slice(&coeffs[l * m..(l + 1) * m]);
    }
    fft_lines(&mut buf, len, true);
    for l in 0..count {
        for n in 0..len {
            out[l * ls + n * es] = buf[l * len + n].re;
        }
    }
}

/// One axis of the factorized transform; output has shape `[B, Cout, nr, nz]`.
fn factorized_axis<F: Real>(
    x: &Tensor<F>,
    weight: &Param<F>,
    axis: Axis,
) -> Result<Tensor<F>> {
    let ws = weight.shape();
    let (m, cin, cout) = (ws[0], ws[1], ws[2]);
    let (batch, nr, nz) = (x.shape()[0], x.shape()[2], x.shape()[3]);
    let (count, len, _, _) = lines(axis, nr, nz);
    check_modes(match axis { Axis::R => "r", Axis::Z => "z" }, m, len)?;
    let plane = nr * nz;
    let modes = count * m;
    let slot_of = move |pos: usize| pos % m;

    let xd = x.data();
    let mut xs = vec![czero(); batch * cin * modes];
    for (p, chunk) in xs.chunks_mut(modes).enumerate() {
        analyze1(&xd[p * plane..(p + 1) * plane], axis, nr, nz, m, chunk);
    }
    let w = complex_values(weight.tensor());
    let mut ys = mix(&xs, &w, batch, cin, cout, modes, slot_of);
    let norm = 1.0 / len as f64;
    let kw: Vec<F> = (0..m).map(|k| lit(hermitian_weight(k, len) * norm)).collect();
    for (pos, y) in ys.iter_mut().enumerate() {
        *y = *y * kw[pos % m];
    }
    let mut out = vec![F::zero(); batch * cout * plane];
    for (p, o) in out.chunks_mut(plane).enumerate() {
        synth1(&ys[p * modes..(p + 1) * modes], axis, nr, nz, m, o);
    }
    let shape = [batch, cout, nr, nz];
    Ok(Tensor::from_op(&shape, out, &[x, weight.tensor()], move |g, needs| {
        let mut gys = vec![czero(); batch * cout * modes];
        for (p, chunk) in gys.chunks_mut(modes).enumerate() {
            analyze1(&g[p * plane..(p + 1) * plane], axis, nr, nz, m, chunk);
            for (pos, v) in chunk.iter_mut().enumerate() {
                *v = *v * kw[pos % m];
            }
        }
        let (gxs, gw) = mix_adjoint(&gys, &xs, &w, batch, cin, cout, modes, m, slot_of);
        let gx = needs[0].then(|| {
            let mut gx = vec![F::zero(); batch * cin * plane];
            for (p, o) in gx.chunks_mut(plane).enumerate() {
                synth1(&gxs[p * modes..(p + 1) * modes], axis, nr, nz, m, o);
            }
            gx
        });
        vec![gx, needs[1].then(|| interleave(&gw))]
    }))
}

/// Factorized spectral convolution: per-axis 1-D spectral mixing with
/// weights `[modes_d, Cin, Cout]` (complex) for `d` in `{r, z}`, summed.
#[derive(Clone, Debug)]
pub struct FactorizedSpectralConv<F: Real> {
    pub weight_r: Param<F>,
    pub weight_z: Param<F>,
}

impl<F: Real> FactorizedSpectralConv<F> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        cin: usize,
        cout: usize,
        modes_r: usize,
        modes_z: usize,
        grid: (usize, usize),
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        check_modes("r", modes_r, grid.0)?;
        check_modes("z", modes_z, grid.1)?;
        let scale = 1.0 / (cin * cout) as f64;
        Ok(FactorizedSpectralConv {
            weight_r: Param::new(
                format!("{name}.weight_r"),
                uniform(rng, &[modes_r, cin, cout, 2], 0.0, scale),
            ),
            weight_z: Param::new(
                format!("{name}.weight_z"),
                uniform(rng, &[modes_z, cin, cout, 2], 0.0, scale),
            ),
        })
    }

    pub fn from_weights(weight_r: Param<F>, weight_z: Param<F>) -> Result<Self> {
        let (r, z) = (weight_r.shape(), weight_z.shape());
        if r.len() != 4 || z.len() != 4 || r[1..] != z[1..] || r[3] != 2 {
            return Err(Error::shape("factorized spectral weights", r, z));
        }
        Ok(FactorizedSpectralConv { weight_r, weight_z })
    }

    pub(crate) fn analytic_count(cin: usize, cout: usize, modes_r: usize, modes_z: usize) -> usize {
        (modes_r + modes_z) * cin * cout * 2
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        check_width("spectral_conv_factorized", x, self.weight_r.shape()[1])?;
        let kr = factorized_axis(x, &self.weight_r, Axis::R)?;
        let kz = factorized_axis(x, &self.weight_z, Axis::Z)?;
        kr.add(&kz)
    }
}

impl<F: Real> Module<F> for FactorizedSpectralConv<F> {
    fn params(&self) -> Vec<&Param<F>> {
        vec![&self.weight_r, &self.weight_z]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.weight_r, &mut self.weight_z]
    }
}
