mod config_file;
mod plot;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use cyclegan_core::checkpoint::load_checkpoint;
use cyclegan_core::data::{from_tensor, list_images, load_dataset, load_rgb, to_tensor, Split};
use cyclegan_core::models::{build_generator, NetworkRole};
use cyclegan_core::report::CsvSink;
use cyclegan_core::trainer::Trainer;
use cyclegan_core::{CheckpointState, Error, LossReport, Result, TrainScalar};

use config_file::{echo_effective_config, parse_config};
use plot::{line_plot, Series, PALETTE};

/// Env var supplying the default output root for `train`.
const OUTPUT_DIR_ENV: &str = "CYCLEGAN_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "cyclegan", version, about = "Unpaired image-to-image translation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the two generators and two discriminators on an unpaired dataset.
    Train {
        /// TOML run config; an empty file means all defaults.
        #[arg(long)]
        config: PathBuf,
        /// Dataset root containing trainA/ and trainB/.
        #[arg(long)]
        data: PathBuf,
        /// Output directory (default: $CYCLEGAN_OUTPUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from <out>/checkpoint.ckpt.
        #[arg(long)]
        resume: bool,
        /// Config overrides, e.g. --set lambda_cyc=5 --set optimizer.learning_rate=1e-4
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Translate a directory of images with a trained checkpoint.
    Translate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        direction: Direction,
        #[arg(long)]
        output: PathBuf,
    },
    /// Render loss curves and per-epoch means from a losses.csv.
    PlotLosses {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    A2b,
    B2a,
    /// original -> translated -> reconstructed; emits all three.
    Cycle,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train {
            config,
            data,
            out,
            resume,
            set,
        } => cmd_train(&config, &data, out, resume, &set),
        Command::Translate {
            checkpoint,
            input,
            direction,
            output,
        } => cmd_translate(&checkpoint, &input, direction, &output),
        Command::PlotLosses { csv, out } => cmd_plot_losses(&csv, &out),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

/// One exit code per error class.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => 2,
        Error::Dataset { .. } => 3,
        Error::Shape { .. } => 4,
        Error::Training { .. } => 5,
        Error::CheckpointCorrupt(_) => 6,
        Error::CheckpointConfigMismatch(_) => 7,
        Error::Argument(_) => 8,
        Error::Format(_) => 9,
        Error::Io(_) => 10,
        Error::Image(_) => 11,
    }
}

fn cmd_train(
    config: &Path,
    data: &Path,
    out: Option<PathBuf>,
    resume: bool,
    overrides: &[String],
) -> Result<()> {
    let cfg = parse_config(config, overrides)?;
    let out_dir = out
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .ok_or_else(|| {
            Error::config("out", format!("pass --out or set {OUTPUT_DIR_ENV}"))
        })?;
    std::fs::create_dir_all(&out_dir)?;
    echo_effective_config(&cfg, &out_dir)?;

    let dataset = load_dataset(data, Split::Train, cfg.image_size)?;
    let checkpoint_path = out_dir.join("checkpoint.ckpt");
    let csv_path = out_dir.join("losses.csv");

    let (mut trainer, mut sink) = if resume && checkpoint_path.exists() {
        let state: CheckpointState = load_checkpoint(&checkpoint_path)?;
        state.verify_config(&cfg)?;
        (Trainer::from_checkpoint(state)?, CsvSink::append(&csv_path)?)
    } else {
        (Trainer::new(cfg)?, CsvSink::create(&csv_path)?)
    };
    trainer.train(&dataset, &mut sink, Some(&checkpoint_path))?;
    sink.flush()?;
    Ok(())
}

fn cmd_translate(
    checkpoint: &Path,
    input: &Path,
    direction: Direction,
    output: &Path,
) -> Result<()> {
    let state: CheckpointState = load_checkpoint(checkpoint)?;
    let cfg = &state.config;

    let mut g = build_generator::<TrainScalar>(&cfg.generator, 0, NetworkRole::GXy)?;
    g.load_state(&state.g_params)?;
    let mut f = build_generator::<TrainScalar>(&cfg.generator, 0, NetworkRole::FYx)?;
    f.load_state(&state.f_params)?;
    // In b2a mode the first hop is F.
    let (first, second) = match direction {
        Direction::B2a => (&mut f, &mut g),
        _ => (&mut g, &mut f),
    };

    let files = list_images(input)?;
    if files.is_empty() {
        return Err(Error::Argument(format!(
            "no input images in {}",
            input.display()
        )));
    }
    std::fs::create_dir_all(output)?;

    for path in files {
        let stem = path.file_stem().unwrap_or_default().to_string_lossy();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_string())
            .unwrap_or_else(|| "png".into());
        let tensor = to_tensor::<TrainScalar>(&load_rgb(&path)?, cfg.image_size);
        let batch = tensor.clone().insert_axis(ndarray::Axis(0));

        let fake = first.forward(&batch, false)?;
        let save = |img: &cyclegan_core::ImageBatch, suffix: &str| -> Result<()> {
            let plane = img.index_axis(ndarray::Axis(0), 0).to_owned();
            let out_path = output.join(format!("{stem}_{suffix}.{ext}"));
            from_tensor(&plane)?.save(out_path)?;
            Ok(())
        };
        match direction {
            Direction::A2b | Direction::B2a => save(&fake, "fake")?,
            Direction::Cycle => {
                let rec = second.forward(&fake, false)?;
                save(&batch, "real")?;
                save(&fake, "fake")?;
                save(&rec, "rec")?;
            }
        }
    }
    Ok(())
}

const LOSS_COLUMNS: [&str; 7] = [
    "g_xy_adv",
    "g_yx_adv",
    "cycle_forward",
    "cycle_backward",
    "total_generator",
    "d_x_total",
    "d_y_total",
];

fn cmd_plot_losses(csv_path: &Path, out_dir: &Path) -> Result<()> {
    let reports = read_losses_csv(csv_path)?;
    std::fs::create_dir_all(out_dir)?;

    let col = |get: fn(&LossReport) -> f64| reports.iter().map(get).collect::<Vec<_>>();
    let cycle_f = col(|r| r.cycle_forward);
    let cycle_b = col(|r| r.cycle_backward);
    line_plot(
        &[
            Series { values: &cycle_f, color: PALETTE[0] },
            Series { values: &cycle_b, color: PALETTE[1] },
        ],
        &out_dir.join("cycle_losses.png"),
    )?;

    let total_g = col(|r| r.total_generator);
    let d_x = col(|r| r.d_x_total);
    let d_y = col(|r| r.d_y_total);
    line_plot(
        &[
            Series { values: &total_g, color: PALETTE[0] },
            Series { values: &d_x, color: PALETTE[1] },
            Series { values: &d_y, color: PALETTE[2] },
        ],
        &out_dir.join("adversarial_losses.png"),
    )?;

    write_epoch_means(&reports, &out_dir.join("epoch_means.csv"))?;
    Ok(())
}

fn read_losses_csv(path: &Path) -> Result<Vec<LossReport>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path, 0))?;
    {
        let headers = reader.headers().map_err(csv_err(path, 0))?;
        let expected: Vec<&str> = LossReport::CSV_HEADER.split(',').collect();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Format(format!(
                "{}: unexpected header {:?}",
                path.display(),
                headers
            )));
        }
    }
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<LossReport>().enumerate() {
        out.push(row.map_err(csv_err(path, i + 2))?);
    }
    Ok(out)
}

fn csv_err(path: &Path, row: usize) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Format(format!("{} row {row}: {e}", path.display()))
}

fn write_epoch_means(reports: &[LossReport], path: &Path) -> Result<()> {
    let mut groups: BTreeMap<usize, (usize, [f64; 7])> = BTreeMap::new();
    for r in reports {
        let entry = groups.entry(r.epoch).or_insert((0, [0.0; 7]));
        entry.0 += 1;
        for (acc, v) in entry.1.iter_mut().zip([
            r.g_xy_adv,
            r.g_yx_adv,
            r.cycle_forward,
            r.cycle_backward,
            r.total_generator,
            r.d_x_total,
            r.d_y_total,
        ]) {
            *acc += v;
        }
    }
    let mut text = format!("epoch,{}\n", LOSS_COLUMNS.join(","));
    for (epoch, (count, sums)) in groups {
        let means: Vec<String> = sums.iter().map(|s| (s / count as f64).to_string()).collect();
        text.push_str(&format!("{epoch},{}\n", means.join(",")));
    }
    std::fs::write(path, text)?;
    Ok(())
}
