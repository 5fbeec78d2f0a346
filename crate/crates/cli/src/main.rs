use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gal_cli::ablate::ablate;
use gal_cli::dataset::{load_dataset, with_truth};
use gal_cli::eval::evaluate_dirs;
use gal_cli::learn::learn_from_dataset;
use gal_cli::pipeline::{builtin_model, builtin_pipeline, write_outputs, Pipeline};
use gal_cli::synth::{generate_scenes, write_scenes, SceneKind};
use gal_core::crf::CrfParams;
use gal_core::gae::{read_boxes, AttributeSet};
use gal_core::ipl::{IplModel, TrainingExample};
use gal_core::raster::read_raster;
use gal_core::{Config, GalError};

#[derive(Parser)]
#[command(
    name = "gal",
    version,
    about = "Geometric layout labeling of outdoor images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Flat `key value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Initial-labeling model (JSON); trained on synthetic scenes if absent.
    #[arg(long)]
    model: Option<PathBuf>,
    /// CRF parameters `w0 w1 w2 w3 w4 lambda`; learned on synthetic scenes
    /// when both this and the model are absent.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Label one image.
    Run {
        image: PathBuf,
        #[arg(long)]
        boxes: Option<PathBuf>,
        #[arg(long)]
        vertical_probs: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare predicted label maps with ground truth.
    Eval {
        pred_dir: PathBuf,
        truth_dir: PathBuf,
    },
    /// Accuracy as attributes are added one by one.
    Ablate {
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Generate synthetic scenes with ground truth.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value = "all")]
        kinds: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn CRF parameters on a labeled dataset.
    Learn {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train the initial-labeling model on a labeled dataset.
    Train {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

enum Failure {
    Input(GalError),
    Config(GalError),
    Runtime(GalError),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Input(_) => 2,
            Failure::Config(_) => 3,
        }
    }

    fn error(&self) -> &GalError {
        match self {
            Failure::Input(e) | Failure::Config(e) | Failure::Runtime(e) => e,
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn input<T>(r: gal_core::Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| match e {
        GalError::Config(_) => Failure::Config(e),
        e => Failure::Input(e),
    })
}

fn config<T>(r: gal_core::Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| match e {
        GalError::Io { .. } => Failure::Input(e),
        e => Failure::Config(e),
    })
}

fn runtime<T>(r: gal_core::Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Runtime)
}

fn load_config(path: &Option<PathBuf>) -> std::result::Result<Config, Failure> {
    match path {
        Some(p) => config(Config::load(p)),
        None => Ok(Config::default()),
    }
}

fn build_pipeline(common: &Common) -> std::result::Result<Pipeline, Failure> {
    let cfg = load_config(&common.config)?;
    let params = match &common.params {
        Some(p) => Some(config(CrfParams::load(
            p,
            cfg.crf_epsilon,
            cfg.crf_cost_cap,
        ))?),
        None => None,
    };
    let model = match &common.model {
        Some(p) => input(IplModel::load(p))?,
        None if params.is_none() => return runtime(builtin_pipeline(cfg)),
        None => runtime(builtin_model(&cfg))?,
    };
    config(Pipeline::new(cfg, model, params))
}

fn read_text(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(GalError::io(path, e)))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Run {
            image,
            boxes,
            vertical_probs,
            out,
            common,
        } => {
            let img = input(read_raster(&image))?;
            let boxes = match &boxes {
                Some(b) => input(read_boxes(b))?,
                None => Vec::new(),
            };
            let vertical = vertical_probs.as_deref().map(read_text).transpose()?;
            let pipeline = build_pipeline(&common)?;
            let result =
                input(pipeline.run(&img, &boxes, vertical.as_deref(), &AttributeSet::all()))?;
            let stem = image
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("image");
            runtime(write_outputs(&out, stem, &img, &result))?;
            print!("{}", result.gae.gav.report());
            Ok(())
        }
        Command::Eval {
            pred_dir,
            truth_dir,
        } => {
            let (report, errors) = input(evaluate_dirs(&pred_dir, &truth_dir))?;
            print!("{}", report.to_text());
            for e in &errors {
                eprintln!("error: {e}");
            }
            if errors.is_empty() {
                Ok(())
            } else {
                Err(Failure::Input(GalError::Format(format!(
                    "{} pairs failed",
                    errors.len()
                ))))
            }
        }
        Command::Ablate { dataset, common } => {
            let items = input(load_dataset(&dataset))?;
            let labeled = input(with_truth(&items))?;
            let pipeline = build_pipeline(&common)?;
            let table = runtime(ablate(&labeled, &pipeline))?;
            print!("{}", table.to_text());
            Ok(())
        }
        Command::Synth {
            seed,
            count,
            kinds,
            out,
        } => {
            let kinds = input(SceneKind::parse_list(&kinds))?;
            let scenes = input(generate_scenes(seed, count, &kinds))?;
            runtime(write_scenes(&out, &scenes))?;
            println!("wrote {} scenes to {}", scenes.len(), out.display());
            Ok(())
        }
        Command::Learn {
            dataset,
            out,
            common,
        } => {
            let items = input(load_dataset(&dataset))?;
            let labeled = input(with_truth(&items))?;
            let pipeline = build_pipeline(&common)?;
            let params = runtime(learn_from_dataset(&labeled, &pipeline))?;
            runtime(params.save(&out))?;
            print!("{}", params.to_text());
            Ok(())
        }
        Command::Train {
            dataset,
            out,
            config,
        } => {
            let cfg = load_config(&config)?;
            let items = input(load_dataset(&dataset))?;
            let labeled = input(with_truth(&items))?;
            let examples: Vec<TrainingExample> = labeled
                .iter()
                .map(|(i, t)| TrainingExample {
                    image: &i.image,
                    truth: t,
                })
                .collect();
            let model = runtime(IplModel::train(&examples, &cfg))?;
            runtime(model.save(&out))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("GAL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error());
            ExitCode::from(f.code())
        }
    }
}
