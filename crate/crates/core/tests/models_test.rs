use ndarray::Array4;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use cyclegan_core::models::{
    build_discriminator, build_generator, receptive_field, DiscriminatorSpec, GeneratorSpec,
    NetworkRole, NormKind,
};
use cyclegan_core::nn::{Conv2d, InstanceNorm2d, Layer};

/// Independent parameter-count oracle: sum over convolution layers of
/// k*k*c_in*c_out + c_out, over the layer list implied by the spec.
fn generator_param_oracle(spec: &GeneratorSpec) -> usize {
    let mut layers: Vec<(usize, usize, usize)> = Vec::new(); // (c_in, c_out, k)
    layers.push((spec.in_channels, spec.encoder_channels[0], 7));
    for pair in spec.encoder_channels.windows(2) {
        layers.push((pair[0], pair[1], 3));
    }
    let bott = *spec.encoder_channels.last().unwrap();
    for _ in 0..spec.n_residual_blocks {
        layers.push((bott, bott, 3));
        layers.push((bott, bott, 3));
    }
    let mut prev = bott;
    for &ch in &spec.decoder_channels {
        layers.push((prev, ch, 3));
        prev = ch;
    }
    layers.push((prev, spec.out_channels, 7));
    layers
        .iter()
        .map(|&(ci, co, k)| k * k * ci * co + co)
        .sum()
}

fn discriminator_param_oracle(spec: &DiscriminatorSpec) -> usize {
    let k = spec.kernel_size;
    let mut layers: Vec<(usize, usize)> = Vec::new();
    let mut prev = spec.in_channels;
    for &ch in &spec.layer_channels {
        layers.push((prev, ch));
        prev = ch;
    }
    layers.push((prev, 1));
    layers.iter().map(|&(ci, co)| k * k * ci * co + co).sum()
}

#[test]
fn parameter_counts_match_layer_formula_oracle() {
    let specs = [
        GeneratorSpec::default(),
        GeneratorSpec {
            in_channels: 1,
            encoder_channels: vec![8, 16],
            n_residual_blocks: 2,
            decoder_channels: vec![8],
            out_channels: 1,
            ..GeneratorSpec::default()
        },
        GeneratorSpec {
            n_residual_blocks: 0,
            ..GeneratorSpec::default()
        },
    ];
    for spec in &specs {
        let mut net = build_generator::<f32>(spec, 0, NetworkRole::GXy).unwrap();
        assert_eq!(net.param_count(), generator_param_oracle(spec), "{spec:?}");
    }

    let dspecs = [
        DiscriminatorSpec::default(),
        DiscriminatorSpec {
            layer_channels: vec![8, 16],
            strides: vec![2, 1],
            kernel_size: 3,
            ..DiscriminatorSpec::default()
        },
    ];
    for spec in &dspecs {
        let mut net = build_discriminator::<f32>(spec, 0, NetworkRole::DX).unwrap();
        assert_eq!(net.param_count(), discriminator_param_oracle(spec), "{spec:?}");
    }
}

#[test]
fn same_spec_same_parameter_count() {
    let spec = GeneratorSpec::default();
    let mut a = build_generator::<f32>(&spec, 1, NetworkRole::GXy).unwrap();
    let mut b = build_generator::<f32>(&spec, 99, NetworkRole::FYx).unwrap();
    assert_eq!(a.param_count(), b.param_count());
}

#[test]
fn default_generator_maps_256_to_256_in_range() {
    let spec = GeneratorSpec::default();
    let mut net = build_generator::<f32>(&spec, 3, NetworkRole::GXy).unwrap();
    let mut rng = StdRng::seed_from_u64(1);
    let x = Array4::from_shape_simple_fn((1, 3, 256, 256), || rng.gen_range(-1.0f32..1.0));
    let y = net.forward(&x, false).unwrap();
    assert_eq!(y.dim(), (1, 3, 256, 256));
    assert!(y.iter().all(|&v| (-1.0..=1.0).contains(&v)));
}

#[test]
fn generator_is_size_preserving_when_divisible_by_four() {
    let spec = GeneratorSpec::default();
    let mut net = build_generator::<f32>(&spec, 3, NetworkRole::GXy).unwrap();
    for (h, w) in [(64, 64), (32, 48), (12, 20)] {
        let x = Array4::zeros((1, 3, h, w));
        let y = net.forward(&x, false).unwrap();
        assert_eq!(y.dim(), (1, 3, h, w));
        assert!(y.iter().all(|&v| (-1.0..=1.0).contains(&v)));
    }
}

#[test]
fn forward_is_deterministic() {
    let spec = GeneratorSpec::default();
    let mut net = build_generator::<f32>(&spec, 5, NetworkRole::GXy).unwrap();
    let mut rng = StdRng::seed_from_u64(2);
    let x = Array4::from_shape_simple_fn((1, 3, 16, 16), || rng.gen_range(-1.0f32..1.0));
    let a = net.forward(&x, false).unwrap();
    let b = net.forward(&x, false).unwrap();
    assert_eq!(a, b);
}

#[test]
fn default_discriminator_score_map_is_30x30_for_256() {
    let spec = DiscriminatorSpec::default();
    let mut net = build_discriminator::<f32>(&spec, 7, NetworkRole::DY).unwrap();
    let x = Array4::zeros((1, 3, 256, 256));
    let y = net.forward(&x, false).unwrap();
    assert_eq!(y.dim(), (1, 1, 30, 30));
}

#[test]
fn default_discriminator_receptive_field_is_70() {
    assert_eq!(receptive_field(&DiscriminatorSpec::default()), 70);
}

#[test]
fn receptive_field_formula_examples() {
    // Two layers k=4: s=2 then s=1 -> 1 + 3*1 + 3*2 = 10.
    let spec = DiscriminatorSpec {
        layer_channels: vec![8],
        strides: vec![2],
        final_stride: 1,
        ..DiscriminatorSpec::default()
    };
    assert_eq!(receptive_field(&spec), 10);
    // Single k=3 s=1 layer reading: with the mandatory 1-channel head this
    // spec has two convolutions, 1 + 2 + 2 = 5.
    let spec = DiscriminatorSpec {
        layer_channels: vec![8],
        strides: vec![1],
        kernel_size: 3,
        final_stride: 1,
        ..DiscriminatorSpec::default()
    };
    assert_eq!(receptive_field(&spec), 5);
}

#[test]
fn single_conv_output_depends_on_exactly_3x3_region() {
    let mut rng = StdRng::seed_from_u64(3);
    let mut conv = Conv2d::<f64>::new(1, 1, 3, 1, 0, 0.5, &mut rng);
    let x = Array4::from_shape_simple_fn((1, 1, 7, 7), || rng.gen_range(-1.0..1.0));
    let y0 = conv.forward(&x, false).unwrap();
    for i in 0..7 {
        for j in 0..7 {
            let mut xp = x.clone();
            xp[[0, 0, i, j]] += 0.5;
            let y1 = conv.forward(&xp, false).unwrap();
            let inside = (2..5).contains(&i) && (2..5).contains(&j);
            let changed = y1[[0, 0, 2, 2]] != y0[[0, 0, 2, 2]];
            assert_eq!(changed, inside, "pixel ({i},{j})");
        }
    }
}

#[test]
fn discriminator_on_70x70_patch() {
    let spec = DiscriminatorSpec::default();
    let mut net = build_discriminator::<f64>(&spec, 9, NetworkRole::DX).unwrap();
    let mut rng = StdRng::seed_from_u64(4);
    let x = Array4::from_shape_simple_fn((1, 3, 70, 70), || rng.gen_range(-1.0..1.0));
    let y0 = net.forward(&x, false).unwrap();
    let (_, _, sh, sw) = y0.dim();
    assert!(sh >= 1 && sw >= 1);

    // The top-left score depends on the whole 70x70 input: every corner
    // perturbation reaches it (the far corners through the instance-norm
    // statistics).
    for (i, j) in [(0, 0), (0, 69), (69, 0), (69, 69)] {
        let mut xp = x.clone();
        xp[[0, 0, i, j]] += 1.0;
        let y1 = net.forward(&xp, false).unwrap();
        assert_ne!(y1[[0, 0, 0, 0]], y0[[0, 0, 0, 0]], "corner ({i},{j})");
    }
}

#[test]
fn norm_free_discriminator_locality_matches_receptive_field() {
    // Without normalization the dependency region is exactly the receptive
    // field: span 70 shifted by the accumulated padding offset of 23, so
    // score (0,0) sees input rows/cols up to 46 and no further.
    let spec = DiscriminatorSpec {
        norm_kind: NormKind::None,
        ..DiscriminatorSpec::default()
    };
    let mut net = build_discriminator::<f64>(&spec, 9, NetworkRole::DX).unwrap();
    let mut rng = StdRng::seed_from_u64(4);
    let x = Array4::from_shape_simple_fn((1, 3, 80, 80), || rng.gen_range(-1.0..1.0));
    let y0 = net.forward(&x, false).unwrap();
    let probe = |net: &mut cyclegan_core::models::Network<f64>, i: usize, j: usize| {
        let mut xp = x.clone();
        xp[[0, 0, i, j]] += 1.0;
        net.forward(&xp, false).unwrap()[[0, 0, 0, 0]]
    };
    assert_ne!(probe(&mut net, 0, 0), y0[[0, 0, 0, 0]]);
    assert_ne!(probe(&mut net, 46, 46), y0[[0, 0, 0, 0]]);
    assert_eq!(probe(&mut net, 47, 47), y0[[0, 0, 0, 0]]);
}

#[test]
fn instance_norm_is_invariant_to_per_channel_affine_rescale() {
    let mut norm = InstanceNorm2d::<f64>::new();
    let mut rng = StdRng::seed_from_u64(5);
    let x = Array4::from_shape_simple_fn((1, 3, 8, 8), || rng.gen_range(-1.0..1.0));
    let base = norm.forward(&x, false).unwrap();
    let mut scaled = x.clone();
    for (c, factor) in [(0usize, 3.5), (1, 0.25), (2, 11.0)] {
        let mut plane = scaled.index_axis_mut(ndarray::Axis(1), c);
        plane.mapv_inplace(|v| v * factor + 0.7);
    }
    let out = norm.forward(&scaled, false).unwrap();
    // Invariance is exact only at eps = 0; with eps = 1e-5 the smallest
    // scale factor (0.25) perturbs the denominator by ~2e-4 relative.
    let max_dev = (&out - &base).iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    assert!(max_dev < 1e-2, "max deviation {max_dev}");
}

#[test]
fn invalid_specs_name_the_offending_field() {
    let spec = GeneratorSpec {
        encoder_channels: vec![64, 32],
        ..GeneratorSpec::default()
    };
    let err = build_generator::<f32>(&spec, 0, NetworkRole::GXy).unwrap_err();
    assert!(err.to_string().contains("encoder_channels"), "{err}");

    let spec = GeneratorSpec {
        decoder_channels: vec![0],
        ..GeneratorSpec::default()
    };
    let err = build_generator::<f32>(&spec, 0, NetworkRole::GXy).unwrap_err();
    assert!(err.to_string().contains("decoder_channels"), "{err}");

    let spec = DiscriminatorSpec {
        leaky_slope: 1.5,
        ..DiscriminatorSpec::default()
    };
    let err = build_discriminator::<f32>(&spec, 0, NetworkRole::DX).unwrap_err();
    assert!(err.to_string().contains("leaky_slope"), "{err}");

    let spec = DiscriminatorSpec {
        strides: vec![2],
        ..DiscriminatorSpec::default()
    };
    let err = build_discriminator::<f32>(&spec, 0, NetworkRole::DX).unwrap_err();
    assert!(err.to_string().contains("strides"), "{err}");
}

#[test]
fn forward_rejects_wrong_channel_count() {
    let mut net = build_generator::<f32>(&GeneratorSpec::default(), 0, NetworkRole::GXy).unwrap();
    let x = Array4::zeros((1, 4, 16, 16));
    let err = net.forward(&x, false).unwrap_err();
    assert!(err.to_string().contains("expected"), "{err}");
}

#[test]
fn norm_free_networks_build_and_run() {
    let spec = GeneratorSpec {
        norm_kind: NormKind::None,
        encoder_channels: vec![4, 8],
        n_residual_blocks: 1,
        decoder_channels: vec![4],
        ..GeneratorSpec::default()
    };
    let mut net = build_generator::<f32>(&spec, 0, NetworkRole::GXy).unwrap();
    let y = net.forward(&Array4::zeros((1, 3, 8, 8)), false).unwrap();
    assert_eq!(y.dim(), (1, 3, 8, 8));
}
