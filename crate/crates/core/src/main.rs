use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nirfuse::{io, metrics, run_pipeline, synthesize_pair, FusionConfig, Rect, SyntheticSpec};

#[derive(Parser)]
#[command(
    name = "nirfuse",
    version,
    about = "Fuse a noisy visible image with a near-infrared image"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse a visible color image with a near-infrared gray image.
    Fuse {
        #[arg(long)]
        vci: PathBuf,
        #[arg(long)]
        ngi: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML configuration; missing keys take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for the four intermediate images.
        #[arg(long, value_name = "DIR")]
        dump_intermediates: Option<PathBuf>,
    },
    /// Build a synthetic noisy-visible / near-infrared pair from a clean image.
    Synth {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Amplitude of the multiplicative brightness field on the NIR image.
        #[arg(long, default_value_t = 0.2)]
        brightness: f64,
        /// Region flattened in the NIR image, as row,col,height,width.
        #[arg(long, value_name = "R")]
        erase_rect: Option<Rect>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Writes <P>vci.png, <P>ngi.png and <P>clean.png.
        #[arg(long, value_name = "P")]
        out_prefix: String,
    },
    /// Print the PSNR between two images of the same size.
    Metrics {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

fn run(cli: Cli) -> nirfuse::Result<()> {
    match cli.command {
        Command::Fuse {
            vci,
            ngi,
            out,
            config,
            dump_intermediates,
        } => {
            let cfg = match config {
                Some(path) => FusionConfig::load(path)?,
                None => FusionConfig::default(),
            };
            let vci = io::load_color(&vci)?;
            let ngi = io::load_gray(&ngi)?;
            let result = run_pipeline(&vci, &ngi, &cfg)?;
            io::save_color(&result.fused, &out)?;
            let dump_dir = dump_intermediates.or_else(|| {
                cfg.dump_intermediates.then(|| {
                    out.parent()
                        .map(PathBuf::from)
                        .unwrap_or_else(|| PathBuf::from("."))
                })
            });
            if let Some(dir) = dump_dir {
                result.write_intermediates(dir)?;
            }
        }
        Command::Synth {
            clean,
            sigma,
            brightness,
            erase_rect,
            seed,
            out_prefix,
        } => {
            let clean = io::load_color(&clean)?;
            let spec = SyntheticSpec {
                noise_sigma: sigma,
                brightness_amplitude: brightness,
                erase_rect,
                rng_seed: seed,
            };
            let pair = synthesize_pair(&clean, &spec)?;
            io::save_color(&pair.vci, format!("{out_prefix}vci.png"))?;
            io::save_gray(&pair.ngi, format!("{out_prefix}ngi.png"))?;
            io::save_color(&pair.clean, format!("{out_prefix}clean.png"))?;
        }
        Command::Metrics { a, b } => {
            let a = io::load_color(&a)?;
            let b = io::load_color(&b)?;
            println!("{:.4}", metrics::psnr(&a, &b)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
