use ndarray::Array3;
use tempfile::TempDir;

use cyclegan_core::checkpoint::{load_checkpoint, save_checkpoint};
use cyclegan_core::config::TrainConfig;
use cyclegan_core::data::{iterate_epoch, Sample, UnpairedDataset};
use cyclegan_core::losses::LossReport;
use cyclegan_core::models::{DiscriminatorSpec, GeneratorSpec};
use cyclegan_core::schedule::ScheduleConfig;
use cyclegan_core::trainer::{derive_seed, Trainer};

fn tiny_config() -> TrainConfig {
    TrainConfig {
        generator: GeneratorSpec {
            encoder_channels: vec![4, 8],
            n_residual_blocks: 1,
            decoder_channels: vec![4],
            ..GeneratorSpec::default()
        },
        discriminator: DiscriminatorSpec {
            layer_channels: vec![4, 8],
            strides: vec![2, 2],
            ..DiscriminatorSpec::default()
        },
        image_size: 16,
        buffer_capacity: 4,
        schedule: Some(ScheduleConfig {
            constant_epochs: 3,
            total_epochs: 3,
        }),
        checkpoint_every: 1,
        seed: 7,
        ..TrainConfig::default()
    }
}

fn synthetic_sample(seed: u64, size: usize) -> Sample<f32> {
    let fill = |offset: f64| {
        Array3::from_shape_fn((3, size, size), |(c, h, w)| {
            let v = ((c + 1) as f64 * 0.3 + h as f64 * 0.11 + w as f64 * 0.07 + offset).sin();
            v as f32
        })
    };
    Sample {
        image_a: fill(seed as f64 * 0.37),
        image_b: fill(seed as f64 * 0.53 + 1.0),
        index_a: 0,
        index_b: 0,
    }
}

/// In-memory dataset on disk: writes `n_a`/`n_b` distinct tiny images.
fn synthetic_dataset(dir: &TempDir, n_a: usize, n_b: usize, size: usize) -> UnpairedDataset {
    for (folder, count) in [("trainA", n_a), ("trainB", n_b)] {
        let d = dir.path().join(folder);
        std::fs::create_dir_all(&d).unwrap();
        for i in 0..count {
            let img = image::RgbImage::from_fn(size as u32, size as u32, |x, y| {
                image::Rgb([
                    (x * 37 + i as u32 * 90) as u8,
                    (y * 21 + i as u32 * 50) as u8,
                    ((x + y) * 11) as u8,
                ])
            });
            img.save(d.join(format!("{i:02}.png"))).unwrap();
        }
    }
    cyclegan_core::data::load_dataset(dir.path(), cyclegan_core::data::Split::Train, size).unwrap()
}

#[test]
fn derive_seed_separates_streams() {
    let a = derive_seed(7, 1);
    let b = derive_seed(7, 2);
    let c = derive_seed(8, 1);
    assert_ne!(a, b);
    assert_ne!(a, c);
    assert_eq!(a, derive_seed(7, 1));
}

#[test]
fn generator_step_does_not_touch_discriminators() {
    let mut t: Trainer<f32> = Trainer::new(tiny_config()).unwrap();
    let d_x_before = t.d_x.state();
    let d_y_before = t.d_y.state();
    let g_before = t.g.state();
    let sample = synthetic_sample(1, 16);
    t.generator_step(&sample).unwrap();
    assert_eq!(t.d_x.state(), d_x_before);
    assert_eq!(t.d_y.state(), d_y_before);
    assert_ne!(t.g.state(), g_before);
}

#[test]
fn discriminator_step_does_not_touch_generators() {
    let mut t: Trainer<f32> = Trainer::new(tiny_config()).unwrap();
    let sample = synthetic_sample(2, 16);
    let (_, fake_x, fake_y) = t.generator_step(&sample).unwrap();
    let g_after = t.g.state();
    let f_after = t.f.state();
    let d_x_before = t.d_x.state();
    t.discriminator_step(&sample, &fake_x, &fake_y).unwrap();
    assert_eq!(t.g.state(), g_after);
    assert_eq!(t.f.state(), f_after);
    assert_ne!(t.d_x.state(), d_x_before);
}

#[test]
fn reported_total_matches_components() {
    let mut t: Trainer<f32> = Trainer::new(tiny_config()).unwrap();
    for i in 0..5 {
        let sample = synthetic_sample(i, 16);
        let (gen, _, _) = t.generator_step(&sample).unwrap();
        let expected = gen.g_xy_adv
            + gen.g_yx_adv
            + t.cfg.lambda_cyc * (gen.cycle_forward + gen.cycle_backward);
        assert!(
            (gen.total_generator - expected).abs() < 1e-6,
            "total {} vs components {}",
            gen.total_generator,
            expected
        );
    }
}

#[test]
fn replay_buffers_grow_with_iterations() {
    let mut t: Trainer<f32> = Trainer::new(tiny_config()).unwrap();
    assert_eq!(t.buffer_x.len(), 0);
    for i in 0..6 {
        let sample = synthetic_sample(i, 16);
        let (_, fake_x, fake_y) = t.generator_step(&sample).unwrap();
        t.discriminator_step(&sample, &fake_x, &fake_y).unwrap();
        assert_eq!(t.buffer_x.len(), ((i + 1) as usize).min(4));
        assert_eq!(t.buffer_y.len(), ((i + 1) as usize).min(4));
    }
}

#[test]
fn cycle_loss_descends_with_frozen_discriminators() {
    let mut t: Trainer<f32> = Trainer::new(tiny_config()).unwrap();
    let mut cycles = Vec::new();
    for i in 0..200 {
        let sample = synthetic_sample(i % 8, 16);
        let (gen, _, _) = t.generator_step(&sample).unwrap();
        cycles.push(gen.cycle_forward + gen.cycle_backward);
    }
    let head: f64 = cycles[..20].iter().sum::<f64>() / 20.0;
    let tail: f64 = cycles[180..].iter().sum::<f64>() / 20.0;
    assert!(
        tail < 0.8 * head,
        "cycle loss did not descend: first 20 mean {head}, last 20 mean {tail}"
    );
}

#[test]
fn checkpoint_roundtrip_preserves_everything() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("ckpt.bin");
    let mut t: Trainer<f32> = Trainer::new(tiny_config()).unwrap();
    for i in 0..3 {
        let sample = synthetic_sample(i, 16);
        let (_, fake_x, fake_y) = t.generator_step(&sample).unwrap();
        t.discriminator_step(&sample, &fake_x, &fake_y).unwrap();
        t.iteration += 1;
    }
    t.epoch = 1;
    let state = t.checkpoint();
    save_checkpoint(&state, &path).unwrap();
    let loaded = load_checkpoint::<f32>(&path).unwrap();
    loaded.verify_config(&t.cfg).unwrap();
    let mut resumed = Trainer::from_checkpoint(loaded).unwrap();
    assert_eq!(resumed.epoch, 1);
    assert_eq!(resumed.iteration, 3);
    assert_eq!(resumed.g.state(), t.g.state());
    assert_eq!(resumed.f.state(), t.f.state());
    assert_eq!(resumed.d_x.state(), t.d_x.state());
    assert_eq!(resumed.d_y.state(), t.d_y.state());

    // Both copies must now evolve identically.
    let sample = synthetic_sample(99, 16);
    let (a, _, _) = t.generator_step(&sample).unwrap();
    let (b, _, _) = resumed.generator_step(&sample).unwrap();
    assert_eq!(a.total_generator, b.total_generator);
}

#[test]
fn checkpoint_rejects_different_config() {
    let mut t: Trainer<f32> = Trainer::new(tiny_config()).unwrap();
    let state = t.checkpoint();
    let mut other = tiny_config();
    other.lambda_cyc = 3.0;
    assert!(state.verify_config(&other).is_err());
}

#[test]
fn corrupt_checkpoint_is_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("ckpt.bin");
    let mut t: Trainer<f32> = Trainer::new(tiny_config()).unwrap();
    save_checkpoint(&t.checkpoint(), &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes.truncate(mid);
    std::fs::write(&path, &bytes).unwrap();
    assert!(load_checkpoint::<f32>(&path).is_err());
}

#[test]
fn full_run_emits_one_report_per_iteration_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let ds = synthetic_dataset(&dir, 3, 5, 16);
    let run = || -> Vec<LossReport> {
        let mut reports = Vec::new();
        let mut t: Trainer<f32> = Trainer::new(tiny_config()).unwrap();
        t.train(&ds, &mut reports, None).unwrap();
        reports
    };
    let a = run();
    assert_eq!(a.len(), 3 * 5);
    for (i, r) in a.iter().enumerate() {
        assert_eq!(r.iteration, i);
        assert_eq!(r.epoch, i / 5);
        assert!(r.total_generator.is_finite());
    }
    let b = run();
    let rows_a: Vec<String> = a.iter().map(|r| r.csv_row()).collect();
    let rows_b: Vec<String> = b.iter().map(|r| r.csv_row()).collect();
    assert_eq!(rows_a, rows_b);
}

#[test]
fn resuming_from_a_checkpoint_matches_an_uninterrupted_run() {
    let dir = TempDir::new().unwrap();
    let ds = synthetic_dataset(&dir, 2, 3, 16);
    let cfg = tiny_config();

    // Uninterrupted: three epochs in one go.
    let mut full_reports: Vec<LossReport> = Vec::new();
    let mut full: Trainer<f32> = Trainer::new(cfg.clone()).unwrap();
    full.train(&ds, &mut full_reports, None).unwrap();

    // Interrupted: run epoch 0 by hand, checkpoint, restore, finish.
    let mut part: Trainer<f32> = Trainer::new(cfg.clone()).unwrap();
    let mut part_reports: Vec<LossReport> = Vec::new();
    for sample in iterate_epoch::<f32>(&ds, derive_seed(cfg.seed, 1000)) {
        let sample = sample.unwrap();
        let (gen, fake_x, fake_y) = part.generator_step(&sample).unwrap();
        let (d_x_total, d_y_total) = part
            .discriminator_step(&sample, &fake_x, &fake_y)
            .unwrap();
        part_reports.push(LossReport {
            epoch: part.epoch,
            iteration: part.iteration,
            g_xy_adv: gen.g_xy_adv,
            g_yx_adv: gen.g_yx_adv,
            cycle_forward: gen.cycle_forward,
            cycle_backward: gen.cycle_backward,
            total_generator: gen.total_generator,
            d_x_total,
            d_y_total,
        });
        part.iteration += 1;
    }
    part.epoch = 1;
    let ckpt_path = dir.path().join("ckpt.bin");
    save_checkpoint(&part.checkpoint(), &ckpt_path).unwrap();

    let loaded = load_checkpoint::<f32>(&ckpt_path).unwrap();
    loaded.verify_config(&cfg).unwrap();
    let mut resumed = Trainer::from_checkpoint(loaded).unwrap();
    resumed.train(&ds, &mut part_reports, None).unwrap();

    assert_eq!(full_reports.len(), part_reports.len());
    let rows_full: Vec<String> = full_reports.iter().map(|r| r.csv_row()).collect();
    let rows_part: Vec<String> = part_reports.iter().map(|r| r.csv_row()).collect();
    assert_eq!(rows_full, rows_part);
    assert_eq!(full.g.state(), resumed.g.state());
    assert_eq!(full.d_x.state(), resumed.d_x.state());
}
