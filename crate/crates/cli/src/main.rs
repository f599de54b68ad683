use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use whatif_cli::bench::{self, Suite};
use whatif_cli::commands::{self, CamMode};
use whatif_core::cam::DEFAULT_OVERLAY_ALPHA;
use whatif_core::model::DEFAULT_TOP_K;
use whatif_core::{Algorithm, InpaintOptions};
use whatif_service::{BusyMode, ServiceConfig};

/// Inpaint image regions and watch a CNN's predictions change.
#[derive(Parser)]
#[command(name = "whatif", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the top-k classes of an image as JSON.
    Classify {
        /// Model manifest (model.json).
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(short, long, default_value_t = DEFAULT_TOP_K)]
        k: usize,
    },
    /// Fill the masked region of an image and write a PNG.
    Inpaint {
        #[arg(long)]
        image: PathBuf,
        /// Single-channel mask; pixels brighter than 0.5 are filled.
        #[arg(long)]
        mask: PathBuf,
        #[arg(long, default_value = "telea")]
        algorithm: Algorithm,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Telea neighborhood radius.
        #[arg(long)]
        radius: Option<usize>,
        #[arg(long)]
        patch_size: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        pyramid_min: Option<usize>,
        #[arg(long)]
        search_decay: Option<f64>,
    },
    /// Export a class activation map as a PNG.
    Cam {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        class: usize,
        #[arg(long, value_enum, default_value = "overlay")]
        mode: CamMode,
        #[arg(long, default_value_t = DEFAULT_OVERLAY_ALPHA)]
        alpha: f32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time each operation at fixed sizes and report median and p95.
    Bench {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        /// Also time classification with this model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP service. Flags override WHATIF_* environment variables.
    Serve {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        host: Option<std::net::IpAddr>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        session_ttl_secs: Option<u64>,
        #[arg(long)]
        history_cap: Option<usize>,
        #[arg(long)]
        max_image_dim: Option<usize>,
        /// `wait` queues concurrent edits on one session; `reject` answers 409.
        #[arg(long)]
        busy_mode: Option<BusyMode>,
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Classify { model, image, k } => {
            let scores = commands::classify_file(&model, &image, k)?;
            println!("{}", serde_json::to_string_pretty(&scores)?);
        }
        Command::Inpaint {
            image,
            mask,
            algorithm,
            out,
            seed,
            radius,
            patch_size,
            iterations,
            pyramid_min,
            search_decay,
        } => {
            let options = InpaintOptions {
                radius,
                patch_size,
                iterations,
                pyramid_min,
                search_decay,
                seed,
            };
            commands::inpaint_file(&image, &mask, algorithm, &options, &out)?;
        }
        Command::Cam {
            model,
            image,
            class,
            mode,
            alpha,
            out,
        } => {
            let summary = commands::cam_file(&model, &image, class, mode, alpha, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Bench {
            suite,
            runs,
            model,
            json,
        } => {
            let extra = model.as_deref().map(commands::load_model).transpose()?;
            let reports = bench::run(suite, runs, extra.as_ref())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                println!("{:<28} {:>10} {:>5} {:>11} {:>11}", "op", "size", "runs", "median_ms", "p95_ms");
                for r in &reports {
                    println!("{r}");
                }
            }
        }
        Command::Serve {
            model,
            host,
            port,
            session_ttl_secs,
            history_cap,
            max_image_dim,
            busy_mode,
            static_dir,
            snapshot_dir,
        } => {
            let mut config = ServiceConfig::new(PathBuf::from("model.json"))
                .apply_env()
                .map_err(anyhow::Error::msg)?;
            if let Some(m) = model {
                config.model_path = m;
            }
            if let Some(h) = host {
                config.host = h;
            }
            if let Some(p) = port {
                config.port = p;
            }
            if let Some(s) = session_ttl_secs {
                config.session_ttl = std::time::Duration::from_secs(s);
            }
            if let Some(c) = history_cap {
                config.history_cap = c;
            }
            if let Some(d) = max_image_dim {
                config.max_image_dim = d;
            }
            if let Some(b) = busy_mode {
                config.busy_mode = b;
            }
            if static_dir.is_some() {
                config.static_dir = static_dir;
            }
            if snapshot_dir.is_some() {
                config.snapshot_dir = snapshot_dir;
            }
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
            runtime.block_on(whatif_service::serve(config))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(whatif_cli::exit_code(&err))
        }
    }
}
