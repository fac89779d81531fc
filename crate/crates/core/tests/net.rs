use footcast_core::net::*;
use footcast_core::rng::Stream;

fn sample_inputs(seed: u64) -> (MainInput, UncInput) {
    let mut s = Stream::new(&[seed, 0xFEED]);
    let mut x = [0.0; MAIN_INPUT_LEN];
    for v in x.iter_mut() {
        *v = s.uniform_in(-0.5, 0.5);
    }
    let mut u = [0.0; UNC_INPUT_LEN];
    for v in u.iter_mut() {
        *v = s.uniform_in(-0.5, 0.5);
    }
    (MainInput(x), UncInput(u))
}

#[test]
fn zero_weights_give_zero_output() {
    let net = NetworkWeights::zeros();
    let (x, u) = sample_inputs(1);
    let y = forward(&net, &x, &u, None).unwrap();
    assert_eq!(y, [0.0; OUTPUT_LEN]);
}

#[test]
fn forward_matches_matrix_oracle() {
    let net = NetworkWeights::init(9);
    let (x, u) = sample_inputs(2);
    let y = forward(&net, &x, &u, None).unwrap();

    // independent evaluation: column-major accumulation and std tanh
    let run = |layers: &[Layer], input: &[f64]| -> Vec<f64> {
        let mut cur = input.to_vec();
        for l in layers {
            let mut z = l.biases.clone();
            for (i, xi) in cur.iter().enumerate() {
                for o in 0..l.out_dim {
                    z[o] += l.weights[o * l.in_dim + i] * xi;
                }
            }
            if matches!(l.activation, Activation::Tanh) {
                for v in z.iter_mut() {
                    *v = v.tanh();
                }
            }
            cur = z;
        }
        cur
    };
    let xo = run(&net.x_branch, &x.0);
    let uo = run(&net.u_branch, &u.0);
    let joined: Vec<f64> = xo.iter().chain(uo.iter()).copied().collect();
    let yo = run(&net.head, &joined);
    for j in 0..OUTPUT_LEN {
        assert!((y[j] - yo[j]).abs() < 1e-12, "output {j}: {} vs {}", y[j], yo[j]);
    }
}

#[test]
fn mc_statistics_two_passes() {
    let mut a = [0.0; OUTPUT_LEN];
    let mut b = [0.0; OUTPUT_LEN];
    a[0] = 1.0;
    b[0] = 1.2;
    let p = mc_statistics(&[a, b]).unwrap();
    assert!((p.mean[0] - 1.1).abs() < 1e-15);
    // unbiased: 2 * 0.1^2 / (2 - 1)
    assert!((p.variance[0] - 0.02).abs() < 1e-15);
    for j in 1..OUTPUT_LEN {
        assert_eq!(p.mean[j], 0.0);
        assert_eq!(p.variance[j], VAR_FLOOR);
    }
    let expected = (0.02 + 11.0 * VAR_FLOOR) / 12.0;
    assert!((p.scalar_summary - expected).abs() < 1e-18);
}

#[test]
fn mc_variance_is_clamped_both_ways() {
    let mut a = [0.0; OUTPUT_LEN];
    let mut b = [0.0; OUTPUT_LEN];
    a[3] = 1.0;
    b[3] = 3.0;
    let p = mc_statistics(&[a, b]).unwrap();
    assert_eq!(p.variance[3], VAR_CEIL);
    assert_eq!(p.variance[0], VAR_FLOOR);
}

#[test]
fn mc_statistics_needs_two_passes() {
    assert!(mc_statistics(&[[0.0; OUTPUT_LEN]]).is_err());
}

#[test]
fn deterministic_passes_hit_variance_floor() {
    let mut net = NetworkWeights::init(3);
    for l in net.layers_mut() {
        l.dropout_p = 0.0;
    }
    let (x, u) = sample_inputs(4);
    let p = predict(&[net.clone()], &x, &u, 2, 11).unwrap();
    assert!(p.variance.iter().all(|&v| v == VAR_FLOOR));
    assert!((p.scalar_summary - VAR_FLOOR).abs() < 1e-22);
    let y = forward(&net, &x, &u, None).unwrap();
    for j in 0..OUTPUT_LEN {
        assert!((p.mean[j] - y[j]).abs() < 1e-15);
    }
}

#[test]
fn predict_is_deterministic_in_seed() {
    let ensemble: Vec<_> = (0..3).map(NetworkWeights::init).collect();
    let (x, u) = sample_inputs(5);
    let a = predict(&ensemble, &x, &u, 5, 42).unwrap();
    let b = predict(&ensemble, &x, &u, 5, 42).unwrap();
    assert_eq!(a.mean, b.mean);
    assert_eq!(a.variance, b.variance);
    let c = predict(&ensemble, &x, &u, 5, 43).unwrap();
    assert!(a.mean != c.mean);
}

#[test]
fn statistics_invariant_under_pass_order() {
    let mut s = Stream::new(&[0xAB]);
    let mut passes: Vec<[f64; OUTPUT_LEN]> = Vec::new();
    for _ in 0..15 {
        let mut p = [0.0; OUTPUT_LEN];
        for v in p.iter_mut() {
            *v = s.uniform_in(-1.0, 1.0);
        }
        passes.push(p);
    }
    let a = mc_statistics(&passes).unwrap();
    passes.reverse();
    passes.swap(2, 9);
    let b = mc_statistics(&passes).unwrap();
    for j in 0..OUTPUT_LEN {
        assert!((a.mean[j] - b.mean[j]).abs() < 1e-12);
        assert!((a.variance[j] - b.variance[j]).abs() < 1e-12);
    }
}

#[test]
fn dropout_masks_have_expected_rate_and_scale() {
    let net = NetworkWeights::zeros();
    let mut zeros = 0usize;
    let mut total = 0usize;
    for pass in 0..2000u64 {
        let mask = DropoutMask::sample(&net, 7, 0, pass);
        for (layer, m) in net.layers().iter().zip(mask.masks.iter()) {
            if layer.dropout_p == 0.0 {
                assert!(m.is_empty());
                continue;
            }
            for &v in m {
                assert!(v == 0.0 || (v - 1.0 / 0.9).abs() < 1e-15);
                if v == 0.0 {
                    zeros += 1;
                }
                total += 1;
            }
        }
    }
    let rate = zeros as f64 / total as f64;
    assert!((rate - 0.1).abs() < 0.01, "drop rate {rate}");
}

#[test]
fn member_seeds_differ() {
    let a = NetworkWeights::init(0);
    let b = NetworkWeights::init(1);
    assert!(a.x_branch[0].weights != b.x_branch[0].weights);
    assert!(a.x_branch[0].biases.iter().all(|&v| v == 0.0));
}

#[test]
fn glorot_bounds_respected() {
    let net = NetworkWeights::init(12);
    for layer in net.layers() {
        let bound = (6.0 / (layer.in_dim + layer.out_dim) as f64).sqrt();
        for &w in &layer.weights {
            assert!(w.abs() <= bound);
        }
    }
}

#[test]
fn assemble_orders_fields() {
    let mut scan = [0.0; 102];
    scan[0] = 9.0;
    scan[101] = -9.0;
    let x = MainInput::assemble(&scan, (1.0, 2.0, 3.0), 0.25);
    assert_eq!(x.0[0], 9.0);
    assert_eq!(x.0[101], -9.0);
    assert_eq!(&x.0[102..105], &[1.0, 2.0, 3.0]);
    assert_eq!(x.0[105], 0.25);

    let mut pooled = [0.0; 12];
    pooled[11] = 4.5;
    let u = UncInput::assemble((1.0, 2.0, 3.0), &pooled);
    assert_eq!(&u.0[0..3], &[1.0, 2.0, 3.0]);
    assert_eq!(u.0[14], 4.5);
}

#[test]
fn validate_rejects_mismatched_dims() {
    let mut net = NetworkWeights::zeros();
    net.head[1].out_dim = 11;
    net.head[1].weights.truncate(11 * 64);
    net.head[1].biases.truncate(11);
    assert!(net.validate().is_err());
}

#[test]
fn param_count_matches_architecture() {
    let net = NetworkWeights::zeros();
    let expected = (106 * 64 + 64)
        + (64 * 32 + 32)
        + (15 * 32 + 32)
        + (32 * 32 + 32)
        + (64 * 64 + 64)
        + (64 * 12 + 12);
    assert_eq!(net.param_count(), expected);
}
