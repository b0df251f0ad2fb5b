mod common;

use common::*;
use ffino::tensor::{no_grad, Padding};
use ffino::{Error, Tensor};

const TIGHT: f64 = 1e-6;
const LOOSE: f64 = 1e-4;

#[test]
fn elementwise_gradients() {
    let mut r = rng(1);
    let a = random_tensor(&mut r, &[3, 4]);
    let b = random_tensor(&mut r, &[3, 4]).add_scalar(3.0); // keep divisors away from 0
    let cases: Vec<(&str, Box<dyn Fn(&[Tensor<f64>]) -> Tensor<f64>>)> = vec![
        ("add", Box::new(|x| x[0].add(&x[1]).unwrap())),
        ("sub", Box::new(|x| x[0].sub(&x[1]).unwrap())),
        ("mul", Box::new(|x| x[0].mul(&x[1]).unwrap())),
        ("div", Box::new(|x| x[0].div(&x[1]).unwrap())),
        ("scale", Box::new(|x| x[0].scale(-2.5).add(&x[1]).unwrap())),
        ("relu", Box::new(|x| x[0].relu().mul(&x[1]).unwrap())),
        ("sum", Box::new(|x| x[0].mul(&x[1]).unwrap().sum())),
        ("mean", Box::new(|x| x[0].add(&x[1]).unwrap().mean())),
    ];
    for (name, f) in cases {
        let e = check_fn(&[a.clone(), b.clone()], 1e-6, f);
        assert!(e < TIGHT, "{name}: {e:e}");
    }
}

#[test]
fn broadcast_and_shape_gradients() {
    let mut r = rng(2);
    let a = random_tensor(&mut r, &[2, 3, 4]);
    let row = random_tensor(&mut r, &[3, 1]);
    let e = check_fn(&[a.clone(), row], 1e-6, |x| x[0].mul(&x[1]).unwrap());
    assert!(e < TIGHT, "broadcast mul {e:e}");
    let small = random_tensor(&mut r, &[2, 1, 4]);
    let e = check_fn(&[small], 1e-6, |x| x[0].expand(&[2, 3, 4]).unwrap());
    assert!(e < TIGHT, "expand {e:e}");
    let b = random_tensor(&mut r, &[2, 2, 4]);
    let e = check_fn(&[a.clone(), b], 1e-6, |x| Tensor::cat(&[&x[0], &x[1]], 1).unwrap());
    assert!(e < TIGHT, "cat {e:e}");
    let e = check_fn(&[a.clone()], 1e-6, |x| x[0].diff(1).unwrap());
    assert!(e < TIGHT, "diff {e:e}");
    let e = check_fn(&[a], 1e-6, |x| x[0].reshape(&[6, 4]).unwrap());
    assert!(e < TIGHT, "reshape {e:e}");
}

#[test]
fn linear_algebra_gradients() {
    let mut r = rng(3);
    let x = random_tensor(&mut r, &[5, 3]);
    let w = random_tensor(&mut r, &[3, 4]);
    let b = random_tensor(&mut r, &[4]);
    let e = check_fn(&[x.clone(), w.clone()], 1e-6, |t| t[0].matmul(&t[1]).unwrap());
    assert!(e < TIGHT, "matmul {e:e}");
    let e = check_fn(&[x, w, b], 1e-6, |t| t[0].linear(&t[1], &t[2]).unwrap());
    assert!(e < TIGHT, "linear {e:e}");
}

#[test]
fn norm_and_resampling_gradients() {
    let mut r = rng(4);
    let a = random_tensor(&mut r, &[3, 2, 4]);
    for p in [1.5, 2.0, 3.0] {
        let e = check_fn(&[a.clone()], 1e-6, |x| x[0].pnorm_rows(p).unwrap());
        assert!(e < LOOSE, "pnorm p={p}: {e:e}");
    }
    let img = random_tensor(&mut r, &[1, 2, 3, 4]);
    let e = check_fn(&[img], 1e-6, |x| x[0].upsample2x().unwrap());
    assert!(e < TIGHT, "upsample {e:e}");
}

#[test]
fn conv2d_gradients() {
    let mut r = rng(5);
    let x = random_tensor(&mut r, &[2, 3, 7, 6]);
    let w = random_tensor(&mut r, &[4, 3, 3, 3]);
    let b = random_tensor(&mut r, &[4]);
    for (pad, stride) in [(Padding::Same, 1), (Padding::Same, 2), (Padding::Valid, 1)] {
        let e = check_fn(&[x.clone(), w.clone(), b.clone()], 1e-6, |t| {
            t[0].conv2d(&t[1], &t[2], pad, stride).unwrap()
        });
        assert!(e < TIGHT, "conv {pad:?}/{stride}: {e:e}");
    }
}

#[test]
fn conv2d_matches_direct_sum() {
    let mut r = rng(6);
    let (ci, co, h, w) = (2, 3, 5, 4);
    let x = random_tensor(&mut r, &[1, ci, h, w]);
    let k = random_tensor(&mut r, &[co, ci, 3, 3]);
    let b = random_tensor(&mut r, &[co]);
    let y = x.conv2d(&k, &b, Padding::Same, 1).unwrap().to_vec();
    let (xv, kv, bv) = (x.to_vec(), k.to_vec(), b.to_vec());
    let mut expect = vec![0.0; co * h * w];
    for o in 0..co {
        for i in 0..h {
            for j in 0..w {
                let mut s = bv[o];
                for c in 0..ci {
                    for di in 0..3 {
                        for dj in 0..3 {
                            let (ii, jj) = (i as isize + di as isize - 1, j as isize + dj as isize - 1);
                            if ii >= 0 && jj >= 0 && (ii as usize) < h && (jj as usize) < w {
                                s += kv[((o * ci + c) * 3 + di) * 3 + dj] * xv[(c * h + ii as usize) * w + jj as usize];
                            }
                        }
                    }
                }
                expect[(o * h + i) * w + j] = s;
            }
        }
    }
    assert!(max_abs_diff(&y, &expect) < 1e-12);
}

#[test]
fn fft_round_trip_and_gradients() {
    let mut r = rng(7);
    for n in [1usize, 2, 5, 8, 12] {
        let x = random_tensor(&mut r, &[3, n]);
        let back = x.rfft(1).unwrap().irfft(1, n).unwrap();
        assert!(max_abs_diff(&back.to_vec(), &x.to_vec()) < 1e-12, "n={n}");
    }
    let x = random_tensor(&mut r, &[2, 6, 3]);
    let e = check_fn(&[x.clone()], 1e-6, |t| t[0].rfft(1).unwrap().as_interleaved().clone());
    assert!(e < TIGHT, "rfft {e:e}");
    let spec = random_tensor(&mut r, &[2, 3, 4, 2]);
    let e = check_fn(&[spec], 1e-6, |t| {
        ffino::tensor::ComplexTensor::from_interleaved(t[0].clone()).unwrap().irfft(2, 7).unwrap()
    });
    assert!(e < TIGHT, "irfft {e:e}");
}

#[test]
fn fft_linearity_and_parseval() {
    let mut r = rng(8);
    let n = 16;
    let a = random_tensor(&mut r, &[n]);
    let b = random_tensor(&mut r, &[n]);
    let fa = a.rfft(0).unwrap().values();
    let fb = b.rfft(0).unwrap().values();
    let fab = a.scale(2.0).add(&b.scale(-3.0)).unwrap().rfft(0).unwrap().values();
    for k in 0..fab.len() {
        let e = fab[k] - (fa[k] * 2.0 - fb[k] * 3.0);
        assert!(e.norm() < 1e-12);
    }
    // sum x^2 = (1/N) sum_k w_k |X_k|^2 over the half spectrum
    let energy: f64 = a.to_vec().iter().map(|v| v * v).sum();
    let spectral: f64 = fa
        .iter()
        .enumerate()
        .map(|(k, c)| if k == 0 || k == n / 2 { 1.0 } else { 2.0 } * c.norm_sqr())
        .sum::<f64>()
        / n as f64;
    assert!((energy - spectral).abs() < 1e-12 * energy.max(1.0));
}

#[test]
fn fft_matches_dense_dft() {
    let mut r = rng(9);
    let n = 9;
    let x = random_tensor(&mut r, &[n]);
    let xv = x.to_vec();
    let got = x.rfft(0).unwrap().values();
    for (k, c) in got.iter().enumerate() {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, v) in xv.iter().enumerate() {
            let th = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
            re += v * th.cos();
            im += v * th.sin();
        }
        assert!((c.re - re).abs() < 1e-12 && (c.im - im).abs() < 1e-12);
    }
}

#[test]
fn gradients_accumulate_and_reset() {
    let x = Tensor::from_f64(&[2], &[1.0, 2.0]).unwrap().requires_grad();
    x.scale(3.0).sum().backward().unwrap();
    x.scale(3.0).sum().backward().unwrap();
    assert_eq!(x.grad().unwrap(), vec![6.0, 6.0]);
    x.zero_grad();
    assert!(x.grad().map_or(true, |g| g.iter().all(|v| *v == 0.0)));
}

#[test]
fn backward_needs_scalar() {
    let x = Tensor::<f64>::ones(&[3]).requires_grad();
    assert!(matches!(x.scale(2.0).backward(), Err(Error::Backward(_))));
}

#[test]
fn no_grad_builds_no_graph() {
    let x = Tensor::<f64>::ones(&[3]).requires_grad();
    let y = no_grad(|| x.scale(2.0));
    assert!(!y.is_tracked());
}

#[test]
fn shape_errors() {
    let a = Tensor::<f32>::ones(&[2, 3]);
    let b = Tensor::<f32>::ones(&[3, 2]);
    assert!(matches!(a.add(&b), Err(Error::ShapeMismatch { .. })));
    assert!(a.matmul(&a).is_err());
    assert!(a.reshape(&[5]).is_err());
    assert!(Tensor::<f32>::from_vec(&[2, 2], vec![1.0; 3]).is_err());
}

#[test]
fn single_precision_tracks_double() {
    let mut r = rng(10);
    let x = random_tensor(&mut r, &[2, 3, 8, 6]);
    let w = random_tensor(&mut r, &[3, 3, 3, 3]);
    let b = random_tensor(&mut r, &[3]);
    let y64 = x.conv2d(&w, &b, Padding::Same, 1).unwrap().to_vec();
    let c = |t: &Tensor<f64>| Tensor::<f32>::from_f64(t.shape(), &t.to_vec()).unwrap();
    let y32 = c(&x).conv2d(&c(&w), &c(&b), Padding::Same, 1).unwrap().to_f64_vec();
    assert!(max_abs_diff(&y64, &y32) < 1e-5);
}
