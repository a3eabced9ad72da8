//! Numerics vs. independent naive references, plus pinned hand-computed
//! cases for each op.

use gnh_core::{attention_reference, Graph, Tensor};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn randt(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

/// Quadruple-loop conv2d reference, kept independent of the im2col path.
fn conv2d_naive(x: &Tensor<f64>, w: &Tensor<f64>, stride: usize, pad: usize) -> Tensor<f64> {
    let (n, c, h, wid) = x.dims4().unwrap();
    let (oc, _, kh, kw) = w.dims4().unwrap();
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (wid + 2 * pad - kw) / stride + 1;
    let mut out = Tensor::zeros(&[n, oc, oh, ow]);
    let xd = x.data();
    let wd = w.data();
    let od = out.data_mut();
    for ni in 0..n {
        for oci in 0..oc {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = 0.0;
                    for ci in 0..c {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = (oy * stride + ky) as isize - pad as isize;
                                let ix = (ox * stride + kx) as isize - pad as isize;
                                if iy < 0 || iy >= h as isize || ix < 0 || ix >= wid as isize {
                                    continue;
                                }
                                let xv = xd[((ni * c + ci) * h + iy as usize) * wid + ix as usize];
                                let wv = wd[((oci * c + ci) * kh + ky) * kw + kx];
                                acc += xv * wv;
                            }
                        }
                    }
                    od[((ni * oc + oci) * oh + oy) * ow + ox] = acc;
                }
            }
        }
    }
    out
}

fn matmul_naive(a: &Tensor<f64>, b: &Tensor<f64>) -> Tensor<f64> {
    let (m, k) = a.dims2().unwrap();
    let (_, n) = b.dims2().unwrap();
    let mut out = Tensor::zeros(&[m, n]);
    let (ad, bd) = (a.data(), b.data());
    let od = out.data_mut();
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for l in 0..k {
                acc += ad[i * k + l] * bd[l * n + j];
            }
            od[i * n + j] = acc;
        }
    }
    out
}

fn max_abs_diff(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn conv2d_matches_naive_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..40 {
        let n = rng.gen_range(1..3);
        let c = rng.gen_range(1..4);
        let oc = rng.gen_range(1..4);
        let k = rng.gen_range(1..4);
        let h = rng.gen_range(k..k + 6);
        let w = rng.gen_range(k..k + 6);
        let stride = rng.gen_range(1..3);
        let pad = rng.gen_range(0..2);
        let x = randt(&mut rng, &[n, c, h, w]);
        let ker = randt(&mut rng, &[oc, c, k, k]);
        let expect = conv2d_naive(&x, &ker, stride, pad);

        let mut g = Graph::<f64>::new();
        let xi = g.constant(x);
        let ki = g.constant(ker);
        let y = g.conv2d(xi, ki, stride, pad).unwrap();
        assert_eq!(g.value(y).shape(), expect.shape(), "trial {trial}");
        assert!(
            max_abs_diff(g.value(y), &expect) < 1e-10,
            "trial {trial}: conv2d deviates from naive reference"
        );
    }
}

#[test]
fn matmul_matches_naive_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..40 {
        let m = rng.gen_range(1..9);
        let k = rng.gen_range(1..9);
        let n = rng.gen_range(1..9);
        let a = randt(&mut rng, &[m, k]);
        let b = randt(&mut rng, &[k, n]);
        let expect = matmul_naive(&a, &b);
        let mut g = Graph::<f64>::new();
        let ai = g.constant(a);
        let bi = g.constant(b);
        let y = g.matmul(ai, bi).unwrap();
        assert!(max_abs_diff(g.value(y), &expect) < 1e-10);
    }
}

#[test]
fn conv2d_identity_kernel_copies_input() {
    let mut g = Graph::<f64>::new();
    let x = g.constant(Tensor::from_fn(&[1, 1, 4, 4], |i| i as f64));
    let k = g.constant(Tensor::full(&[1, 1, 1, 1], 1.0));
    let y = g.conv2d(x, k, 1, 0).unwrap();
    assert_eq!(g.value(y).data(), g.value(x).data());
}

#[test]
fn conv2d_all_ones_kernel_sums() {
    // 2x2 input [[1,2],[3,4]] against an all-ones 2x2 kernel -> [[10]]
    let mut g = Graph::<f64>::new();
    let x = g.constant(Tensor::new(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap());
    let k = g.constant(Tensor::full(&[1, 1, 2, 2], 1.0));
    let y = g.conv2d(x, k, 1, 0).unwrap();
    assert_eq!(g.value(y).shape(), &[1, 1, 1, 1]);
    assert_eq!(g.value(y).item(), 10.0);
}

#[test]
fn conv2d_zero_input_zero_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut g = Graph::<f64>::new();
    let x = g.constant(Tensor::zeros(&[1, 2, 5, 5]));
    let k = g.constant(randt(&mut rng, &[3, 2, 3, 3]));
    let y = g.conv2d(x, k, 1, 1).unwrap();
    assert!(g.value(y).data().iter().all(|&v| v == 0.0));
}

#[test]
fn conv2d_rejects_too_small_input() {
    let mut g = Graph::<f64>::new();
    let x = g.constant(Tensor::zeros(&[1, 1, 2, 2]));
    let k = g.constant(Tensor::zeros(&[1, 1, 3, 3]));
    assert!(g.conv2d(x, k, 1, 0).is_err());
    // padding makes it legal again
    let x2 = g.constant(Tensor::zeros(&[1, 1, 2, 2]));
    let k2 = g.constant(Tensor::zeros(&[1, 1, 3, 3]));
    assert!(g.conv2d(x2, k2, 1, 1).is_ok());
}

#[test]
fn group_norm_constant_input_collapses_to_shift() {
    let mut g = Graph::<f64>::new();
    let x = g.constant(Tensor::full(&[1, 4, 3, 3], 7.5));
    let gamma = g.constant(Tensor::full(&[4], 1.0));
    let beta = g.constant(Tensor::zeros(&[4]));
    let y = g.group_norm(x, 2, gamma, beta, 1e-5).unwrap();
    assert!(g.value(y).data().iter().all(|&v| v.abs() < 1e-12));
}

#[test]
fn group_norm_two_value_row() {
    // values [1, 3]: mean 2, population std 1 -> normalized ~[-1, 1]
    let mut g = Graph::<f64>::new();
    let x = g.constant(Tensor::new(&[1, 2, 1, 1], vec![1.0, 3.0]).unwrap());
    let gamma = g.constant(Tensor::full(&[2], 1.0));
    let beta = g.constant(Tensor::zeros(&[2]));
    let y = g.group_norm(x, 1, gamma, beta, 1e-5).unwrap();
    let d = g.value(y).data();
    assert!((d[0] + 1.0).abs() < 1e-4, "{d:?}");
    assert!((d[1] - 1.0).abs() < 1e-4, "{d:?}");
}

#[test]
fn group_norm_zero_gamma_yields_beta() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut g = Graph::<f64>::new();
    let x = g.constant(randt(&mut rng, &[2, 4, 3, 2]));
    let gamma = g.constant(Tensor::zeros(&[4]));
    let beta = g.constant(Tensor::new(&[4], vec![0.5, -0.25, 2.0, 1.0]).unwrap());
    let y = g.group_norm(x, 4, gamma, beta, 1e-5).unwrap();
    let yd = g.value(y).data();
    for n in 0..2 {
        for c in 0..4 {
            let expect = [0.5, -0.25, 2.0, 1.0][c];
            for i in 0..6 {
                assert_eq!(yd[(n * 4 + c) * 6 + i], expect);
            }
        }
    }
}

#[test]
fn group_norm_requires_divisible_channels() {
    let mut g = Graph::<f64>::new();
    let x = g.constant(Tensor::zeros(&[1, 6, 2, 2]));
    let gamma = g.constant(Tensor::full(&[6], 1.0));
    let beta = g.constant(Tensor::zeros(&[6]));
    assert!(g.group_norm(x, 4, gamma, beta, 1e-5).is_err());
}

#[test]
fn group_norm_statistics_within_groups() {
    // per-group mean ~0 and variance ~1 after normalization (gamma=1, beta=0)
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (n, c, h, w, groups) = (2, 8, 4, 4, 4);
    let mut g = Graph::<f64>::new();
    let x = g.constant(randt(&mut rng, &[n, c, h, w]));
    let gamma = g.constant(Tensor::full(&[c], 1.0));
    let beta = g.constant(Tensor::zeros(&[c]));
    let y = g.group_norm(x, groups, gamma, beta, 1e-5).unwrap();
    let yd = g.value(y).data();
    let cg = c / groups;
    let m = (cg * h * w) as f64;
    for ni in 0..n {
        for gi in 0..groups {
            let mut mean = 0.0;
            let mut sq = 0.0;
            for ci in gi * cg..(gi + 1) * cg {
                for i in 0..h * w {
                    let v = yd[(ni * c + ci) * h * w + i];
                    mean += v;
                    sq += v * v;
                }
            }
            mean /= m;
            let var = sq / m - mean * mean;
            assert!(mean.abs() < 1e-5, "group mean {mean}");
            assert!((var - 1.0).abs() < 1e-3, "group var {var}");
        }
    }
}

#[test]
fn attention_single_token_returns_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = randt(&mut rng, &[1, 6]);
    let k = randt(&mut rng, &[1, 6]);
    let v = randt(&mut rng, &[1, 6]);
    let (out, w) = attention_reference(&q, &k, &v).unwrap();
    assert_eq!(out.data(), v.data());
    assert_eq!(w.item(), 1.0);
}

#[test]
fn attention_identical_keys_average_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = 5;
    let d = 4;
    let q = randt(&mut rng, &[2, d]);
    let key_row: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let k = Tensor::from_fn(&[t, d], |i| key_row[i % d]);
    let v = randt(&mut rng, &[t, d]);
    let (out, w) = attention_reference(&q, &k, &v).unwrap();
    for row in 0..2 {
        for e in 0..d {
            let mean: f64 = (0..t).map(|j| v.data()[j * d + e]).sum::<f64>() / t as f64;
            assert!((out.data()[row * d + e] - mean).abs() < 1e-12);
        }
    }
    for wv in w.data() {
        assert!((wv - 1.0 / t as f64).abs() < 1e-12);
    }
}

#[test]
fn attention_saturates_on_dominant_key() {
    let d = 4;
    // one key aligned with the query and scaled, others orthogonal
    let q = Tensor::new(&[1, d], vec![60.0, 0.0, 0.0, 0.0]).unwrap();
    let mut kd = vec![0.0; 3 * d];
    kd[0] = 1.0; // key 0 -> logit 60/sqrt(d)
    kd[d + 1] = 1.0;
    kd[2 * d + 2] = 1.0;
    let k = Tensor::new(&[3, d], kd).unwrap();
    let v = Tensor::from_fn(&[3, d], |i| i as f64);
    let (out, _) = attention_reference(&q, &k, &v).unwrap();
    for e in 0..d {
        assert!(
            (out.data()[e] - v.data()[e]).abs() < 1e-9,
            "softmax saturation should pick value row 0"
        );
    }
}

#[test]
fn attention_weights_are_convex_and_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let t = rng.gen_range(1..7);
        let d = rng.gen_range(1..6);
        let q = randt(&mut rng, &[t, d]);
        let k = randt(&mut rng, &[t, d]);
        let v = randt(&mut rng, &[t, d]);
        let (out, w) = attention_reference(&q, &k, &v).unwrap();
        for r in 0..t {
            let sum: f64 = (0..t).map(|j| w.data()[r * t + j]).sum();
            assert!((sum - 1.0).abs() < 1e-6, "weight row must sum to 1");
            assert!(w.data()[r * t..(r + 1) * t].iter().all(|&x| x >= 0.0));
        }
        // simultaneous permutation of key/value rows leaves output unchanged
        let perm: Vec<usize> = {
            let mut p: Vec<usize> = (0..t).collect();
            for i in (1..t).rev() {
                let j = rng.gen_range(0..=i);
                p.swap(i, j);
            }
            p
        };
        let kp = Tensor::from_fn(&[t, d], |i| k.data()[perm[i / d] * d + i % d]);
        let vp = Tensor::from_fn(&[t, d], |i| v.data()[perm[i / d] * d + i % d]);
        let (out_p, _) = attention_reference(&q, &kp, &vp).unwrap();
        for (a, b) in out.data().iter().zip(out_p.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn bilinear_constant_map_stays_constant() {
    let mut g = Graph::<f64>::new();
    let x = g.constant(Tensor::full(&[1, 1, 4, 4], 5.0));
    let y = g.bilinear_resize(x, 8, 8).unwrap();
    assert!(g.value(y).data().iter().all(|&v| v == 5.0));
}

#[test]
fn bilinear_midpoint_of_two_texels() {
    // row [0, 1] widened to 4 samples at src = dst/2: [0, 0.5, 1, 1]
    let mut g = Graph::<f64>::new();
    let x = g.constant(Tensor::new(&[1, 1, 2, 2], vec![0.0, 1.0, 0.0, 1.0]).unwrap());
    let y = g.bilinear_resize(x, 2, 4).unwrap();
    let d = g.value(y).data();
    assert_eq!(&d[0..4], &[0.0, 0.5, 1.0, 1.0]);
    assert_eq!(&d[4..8], &[0.0, 0.5, 1.0, 1.0]);
}

#[test]
fn bilinear_same_size_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut g = Graph::<f64>::new();
    let t = randt(&mut rng, &[1, 3, 5, 7]);
    let x = g.constant(t.clone());
    let y = g.bilinear_resize(x, 5, 7).unwrap();
    assert_eq!(g.value(y).data(), t.data());
}

#[test]
fn avg_pool_then_upsample_is_identity_on_constants() {
    let mut g = Graph::<f64>::new();
    let x = g.constant(Tensor::full(&[1, 2, 8, 8], -3.25));
    let p = g.avg_pool2d(x, 2).unwrap();
    let u = g.bilinear_resize(p, 8, 8).unwrap();
    assert!(g.value(u).data().iter().all(|&v| v == -3.25));
}

#[test]
fn avg_pool_requires_divisible_dims() {
    let mut g = Graph::<f64>::new();
    let x = g.constant(Tensor::zeros(&[1, 1, 5, 4]));
    assert!(g.avg_pool2d(x, 2).is_err());
}

#[test]
fn softmax_rows_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut g = Graph::<f64>::new();
    let x = g.constant(randt(&mut rng, &[6, 9]));
    let y = g.softmax(x).unwrap();
    for r in 0..6 {
        let sum: f64 = g.value(y).data()[r * 9..(r + 1) * 9].iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ops_produce_finite_outputs_on_finite_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let mut g = Graph::<f64>::new();
        let x = g.constant(randt(&mut rng, &[1, 4, 6, 6]).map(|v| v * 100.0));
        let k = g.constant(randt(&mut rng, &[4, 4, 3, 3]));
        let gamma = g.constant(Tensor::full(&[4], 1.0));
        let beta = g.constant(Tensor::zeros(&[4]));
        let c = g.conv2d(x, k, 1, 1).unwrap();
        let n = g.group_norm(c, 2, gamma, beta, 1e-5).unwrap();
        let a = g.leaky_relu(n, 0.01).unwrap();
        let s = g.sigmoid(a).unwrap();
        let r = g.bilinear_resize(s, 12, 12).unwrap();
        let p = g.avg_pool2d(r, 2).unwrap();
        let m = g.mean(p).unwrap();
        for id in [c, n, a, s, r, p, m] {
            assert!(g.value(id).all_finite());
        }
    }
}
