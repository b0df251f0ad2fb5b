//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use ffino::datagen::physics::frac_flow;
use ffino::datagen::RelPermCoeffs;
use ffino::layers::{Module, Param};
use ffino::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ffino::rng::stream(seed, &[0xACCE])
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn random_tensor(r: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, random_vec(r, n)).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let s = norm(a).max(norm(b));
    if s == 0.0 {
        0.0
    } else {
        norm(&d) / s
    }
}

// ------------------------------------------------------------ dense DFTs

/// Complex number as a pair, kept local so the oracle shares no code with
/// the FFT path.
#[derive(Clone, Copy)]
struct Cx(f64, f64);

impl Cx {
    fn mul(self, o: Cx) -> Cx {
        Cx(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn add(self, o: Cx) -> Cx {
        Cx(self.0 + o.0, self.1 + o.1)
    }
    fn expi(theta: f64) -> Cx {
        Cx(theta.cos(), theta.sin())
    }
}

/// Rows kept along the full-length axis: `0..m` then `n-1 .. n-m+1`,
/// skipping any row already in the positive band.
fn kept_rows(m: usize, n: usize) -> Vec<(usize, usize)> {
    let mut kept: Vec<(usize, usize)> = (0..m.min(n)).map(|k| (k, k)).collect();
    for j in 1..m {
        let row = n - j;
        if row >= m {
            kept.push((m + j - 1, row));
        }
    }
    kept
}

fn hermitian(k: usize, n: usize) -> f64 {
    if k == 0 || (n % 2 == 0 && 2 * k == n) {
        1.0
    } else {
        2.0
    }
}

/// 2-D spectral convolution by explicit DFT sums. `x: [B, Cin, nr, nz]`,
/// `w: [2 mr - 1, mz, Cin, Cout, 2]`.
pub fn dense_spectral2d(x: &[f64], shape: [usize; 4], w: &[f64], mr: usize, mz: usize, cout: usize) -> Vec<f64> {
    let [b, cin, nr, nz] = shape;
    let kept = kept_rows(mr, nr);
    let wi = |slot: usize, kz: usize, i: usize, o: usize| {
        let base = (((slot * mz + kz) * cin + i) * cout + o) * 2;
        Cx(w[base], w[base + 1])
    };
    let mut out = vec![0.0; b * cout * nr * nz];
    for bi in 0..b {
        // forward DFT at the kept modes, per input channel
        let mut xh = vec![Cx(0.0, 0.0); kept.len() * mz * cin];
        for (q, &(_, kr)) in kept.iter().enumerate() {
            for kz in 0..mz {
                for i in 0..cin {
                    let mut acc = Cx(0.0, 0.0);
                    for r in 0..nr {
                        for z in 0..nz {
                            let v = x[((bi * cin + i) * nr + r) * nz + z];
                            let th = -2.0 * PI * ((kr * r) as f64 / nr as f64 + (kz * z) as f64 / nz as f64);
                            acc = acc.add(Cx::expi(th).mul(Cx(v, 0.0)));
                        }
                    }
                    xh[(q * mz + kz) * cin + i] = acc;
                }
            }
        }
        for o in 0..cout {
            for r in 0..nr {
                for z in 0..nz {
                    let mut s = 0.0;
                    for (q, &(slot, kr)) in kept.iter().enumerate() {
                        for kz in 0..mz {
                            let mut y = Cx(0.0, 0.0);
                            for i in 0..cin {
                                y = y.add(xh[(q * mz + kz) * cin + i].mul(wi(slot, kz, i, o)));
                            }
                            let th = 2.0 * PI * ((kr * r) as f64 / nr as f64 + (kz * z) as f64 / nz as f64);
                            s += hermitian(kz, nz) * y.mul(Cx::expi(th)).0;
                        }
                    }
                    out[((bi * cout + o) * nr + r) * nz + z] = s / (nr * nz) as f64;
                }
            }
        }
    }
    out
}

/// One axis of the factorized convolution by explicit DFT sums.
/// `w: [m, Cin, Cout, 2]`; `axis` 0 is `r`, 1 is `z`.
fn dense_axis(x: &[f64], shape: [usize; 4], w: &[f64], m: usize, cout: usize, axis: usize, out: &mut [f64]) {
    let [b, cin, nr, nz] = shape;
    let len = if axis == 0 { nr } else { nz };
    let at = |bi: usize, c: usize, r: usize, z: usize, ch: usize| ((bi * ch + c) * nr + r) * nz + z;
    for bi in 0..b {
        for o in 0..cout {
            for r in 0..nr {
                for z in 0..nz {
                    let n = if axis == 0 { r } else { z };
                    let mut s = 0.0;
                    for k in 0..m {
                        let mut y = Cx(0.0, 0.0);
                        for i in 0..cin {
                            let mut xh = Cx(0.0, 0.0);
                            for t in 0..len {
                                let (rr, zz) = if axis == 0 { (t, z) } else { (r, t) };
                                let v = x[at(bi, i, rr, zz, cin)];
                                xh = xh.add(Cx::expi(-2.0 * PI * (k * t) as f64 / len as f64).mul(Cx(v, 0.0)));
                            }
                            let base = ((k * cin + i) * cout + o) * 2;
                            y = y.add(xh.mul(Cx(w[base], w[base + 1])));
                        }
                        s += hermitian(k, len) * y.mul(Cx::expi(2.0 * PI * (k * n) as f64 / len as f64)).0;
                    }
                    out[at(bi, o, r, z, cout)] += s / len as f64;
                }
            }
        }
    }
}

pub fn dense_factorized(
    x: &[f64],
    shape: [usize; 4],
    wr: &[f64],
    mr: usize,
    wz: &[f64],
    mz: usize,
    cout: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; shape[0] * cout * shape[2] * shape[3]];
    dense_axis(x, shape, wr, mr, cout, 0, &mut out);
    dense_axis(x, shape, wz, mz, cout, 1, &mut out);
    out
}

// ------------------------------------------------------ gradient checking

/// Central-difference gradient of a scalar function.
pub fn fd_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let v = x[i];
            xp[i] = v + h;
            let a = f(&xp);
            xp[i] = v - h;
            let b = f(&xp);
            xp[i] = v;
            (a - b) / (2.0 * h)
        })
        .collect()
}

/// Scalarizes `y` against fixed random weights so every output element
/// contributes a distinct gradient.
pub fn probe(y: &Tensor<f64>, weights: &[f64]) -> Tensor<f64> {
    let w = Tensor::from_vec(y.shape(), weights.to_vec()).unwrap();
    y.mul(&w).unwrap().sum()
}

/// Worst relative error between analytic and central-difference gradients
/// over the input `x` and every parameter of `module`.
pub fn check_module<M: Module<f64>>(
    module: &mut M,
    x: &Tensor<f64>,
    h: f64,
    forward: impl Fn(&M, &Tensor<f64>) -> Tensor<f64>,
) -> f64 {
    let mut r = rng(99);
    let out_n = forward(module, x).numel();
    let probe_w = random_vec(&mut r, out_n);
    let eval = |m: &M, x: &Tensor<f64>| probe(&forward(m, x), &probe_w).item().unwrap();

    let xg = x.detach().requires_grad();
    module.zero_grad();
    probe(&forward(module, &xg), &probe_w).backward().unwrap();
    let analytic_x = xg.grad().unwrap();
    let analytic_p: Vec<Vec<f64>> = module
        .params()
        .iter()
        .map(|p| p.grad().unwrap_or_else(|| vec![0.0; p.numel()]))
        .collect();

    let x0 = x.to_vec();
    let fd_x = fd_grad(&x0, h, |v| eval(module, &Tensor::from_vec(x.shape(), v.to_vec()).unwrap()));
    let mut worst = rel_err(&analytic_x, &fd_x);

    let count = module.params().len();
    for k in 0..count {
        let p0 = module.params()[k].tensor().to_vec();
        let mut fd = vec![0.0; p0.len()];
        for i in 0..p0.len() {
            let mut v = p0.clone();
            v[i] = p0[i] + h;
            set_param(module, k, v.clone());
            let a = eval(module, x);
            v[i] = p0[i] - h;
            set_param(module, k, v);
            let b = eval(module, x);
            fd[i] = (a - b) / (2.0 * h);
        }
        set_param(module, k, p0);
        worst = worst.max(rel_err(&analytic_p[k], &fd));
    }
    worst
}

fn set_param<M: Module<f64>>(module: &mut M, k: usize, v: Vec<f64>) {
    let mut ps: Vec<&mut Param<f64>> = module.params_mut();
    ps[k].set(v).unwrap();
}

/// Gradient check of a function of plain tensors.
pub fn check_fn(inputs: &[Tensor<f64>], h: f64, f: impl Fn(&[Tensor<f64>]) -> Tensor<f64>) -> f64 {
    let mut r = rng(7);
    let out_n = f(inputs).numel();
    let probe_w = random_vec(&mut r, out_n);
    let leaves: Vec<Tensor<f64>> = inputs.iter().map(|t| t.detach().requires_grad()).collect();
    probe(&f(&leaves), &probe_w).backward().unwrap();
    let mut worst: f64 = 0.0;
    for (k, t) in inputs.iter().enumerate() {
        let analytic = leaves[k].grad().unwrap_or_else(|| vec![0.0; t.numel()]);
        let fd = fd_grad(&t.to_vec(), h, |v| {
            let mut xs = inputs.to_vec();
            xs[k] = Tensor::from_vec(t.shape(), v.to_vec()).unwrap();
            probe(&f(&xs), &probe_w).item().unwrap()
        });
        worst = worst.max(rel_err(&analytic, &fd));
    }
    worst
}

// ---------------------------------------------------------------- loss

/// Scalar-loop relative lp loss: per leading-axis sample, value term plus
/// `beta` times the forward-difference term along the second to last axis.
pub fn lp_loss_loop(y: &[f64], y_hat: &[f64], shape: &[usize], p: f64, beta: f64) -> f64 {
    let b = shape[0];
    let per = y.len() / b;
    let nd = shape.len();
    let (nr, nz) = (shape[nd - 2], shape[nd - 1]);
    let outer = per / (nr * nz);
    let mut total = 0.0;
    for s in 0..b {
        let off = s * per;
        let (mut num, mut den, mut dnum, mut dden) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..per {
            num += (y_hat[off + i] - y[off + i]).abs().powf(p);
            den += y[off + i].abs().powf(p);
        }
        for o in 0..outer {
            for r in 0..nr - 1 {
                for z in 0..nz {
                    let i0 = off + (o * nr + r) * nz + z;
                    let i1 = i0 + nz;
                    let e = (y_hat[i1] - y[i1]) - (y_hat[i0] - y[i0]);
                    let d = y[i1] - y[i0];
                    dnum += e.abs().powf(p);
                    dden += d.abs().powf(p);
                }
            }
        }
        let mut l = (num / den).powf(1.0 / p);
        if beta > 0.0 {
            l += beta * (dnum / dden).powf(1.0 / p);
        }
        total += l;
    }
    total / b as f64
}

// ---------------------------------------------------------------- Welge

/// Saturation maximizing the chord slope `f_g(S) / S` on a uniform grid of
/// `n` points over the mobile gas range.
pub fn brute_welge(c: &RelPermCoeffs, mu_g: f64, mu_w: f64, n: usize) -> f64 {
    let (lo, hi) = (c.sgr, 1.0 - c.swi);
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 1..=n {
        let s = lo + (hi - lo) * i as f64 / n as f64;
        let slope = frac_flow(s, c, mu_g, mu_w).0 / s;
        if slope > best.0 {
            best = (slope, s);
        }
    }
    best.1
}

// ----------------------------------------------------------------- SSIM

/// SSIM straight from the definition: for every valid window, weighted
/// moments with the 2-D Gaussian `g_i g_j`.
pub fn ssim_direct(y: &[f64], y_hat: &[f64], h: usize, w: usize, l: f64) -> f64 {
    let k = 11;
    let sigma: f64 = 1.5;
    let c = 5.0;
    let g1: Vec<f64> = (0..k).map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = g1.iter().sum();
    let g1: Vec<f64> = g1.iter().map(|v| v / s).collect();
    let (c1, c2) = ((0.01 * l).powi(2), (0.03 * l).powi(2));
    let mut total = 0.0;
    let mut count = 0;
    for i0 in 0..=h - k {
        for j0 in 0..=w - k {
            let (mut mx, mut my) = (0.0, 0.0);
            for a in 0..k {
                for b in 0..k {
                    let wt = g1[a] * g1[b];
                    mx += wt * y[(i0 + a) * w + j0 + b];
                    my += wt * y_hat[(i0 + a) * w + j0 + b];
                }
            }
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for a in 0..k {
                for b in 0..k {
                    let wt = g1[a] * g1[b];
                    let dx = y[(i0 + a) * w + j0 + b] - mx;
                    let dy = y_hat[(i0 + a) * w + j0 + b] - my;
                    vx += wt * dx * dx;
                    vy += wt * dy * dy;
                    cov += wt * dx * dy;
                }
            }
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    total / count as f64
}
