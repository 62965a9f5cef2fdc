//! `vqsplit` command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::codec::{self, CodecError, MAX_CODEBOOK_SIZE};
use crate::metrics::{self, MetricsError, QualityReport};
use crate::persistence::{self, CodebookFileError, IndexFileError};
use crate::pixelgrid::{self, GrayImage, PgmError};
use crate::quantizer::{self, Codebook, TrainError, TrainerConfig};

pub const CODEBOOK_FILE: &str = "codebook.cbk.csv";
pub const INDEX_FILE: &str = "indices.vqi";
pub const IMAGE_FILE: &str = "reconstructed.pgm";

#[derive(Debug, Parser)]
#[command(
    name = "vqsplit",
    version,
    about = "Grayscale vector-quantization codec"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a codebook from a PGM image.
    Train {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, value_parser = parse_codebook_size)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        trainer: TrainerArgs,
    },
    /// Quantize a PGM image into an index file.
    Compress {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild a PGM image from an index file and its codebook.
    Decompress {
        #[arg(long)]
        indices: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on one image, compress another, and report quality and rates.
    Roundtrip {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_parser = parse_codebook_size)]
        size: usize,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        trainer: TrainerArgs,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        report: ReportFormat,
    },
    /// Compare two PGM images.
    Metrics {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        reconstructed: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct TrainerArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 1)]
    pub inner_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub refine_iters: usize,
}

impl TrainerArgs {
    pub fn config(&self, target_size: usize) -> TrainerConfig {
        TrainerConfig {
            target_size,
            delta: self.delta,
            seed: self.seed,
            inner_iters: self.inner_iters,
            refine_iters: self.refine_iters,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

fn parse_codebook_size(s: &str) -> Result<usize, String> {
    let m: usize = s.parse().map_err(|e| format!("{e}"))?;
    if !(2..=MAX_CODEBOOK_SIZE).contains(&m) || !m.is_power_of_two() {
        return Err(format!("{m} is not a power of two in [2, 65536]"));
    }
    Ok(m)
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Pgm { path: PathBuf, source: PgmError },
    #[error("{}: {source}", path.display())]
    CodebookFile {
        path: PathBuf,
        source: CodebookFileError,
    },
    #[error("{}: {source}", path.display())]
    IndexFile {
        path: PathBuf,
        source: IndexFileError,
    },
    #[error("{}: written bytes did not read back identically", path.display())]
    Verify { path: PathBuf },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `bytes` and reads them back to confirm the file landed intact.
fn write_checked(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    fs::write(path, bytes).map_err(io)?;
    if fs::read(path).map_err(io)? != bytes {
        return Err(CliError::Verify {
            path: path.to_path_buf(),
        });
    }
    Ok(())
}

fn read_image(path: &Path) -> Result<GrayImage, CliError> {
    pixelgrid::load_pgm(&read(path)?).map_err(|source| CliError::Pgm {
        path: path.to_path_buf(),
        source,
    })
}

fn read_codebook(path: &Path) -> Result<Codebook, CliError> {
    persistence::load_codebook(&read(path)?).map_err(|source| CliError::CodebookFile {
        path: path.to_path_buf(),
        source,
    })
}

fn read_index_file(path: &Path) -> Result<codec::IndexMap, CliError> {
    persistence::load_index_file(&read(path)?).map_err(|source| CliError::IndexFile {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: &mut dyn Write, text: &str) {
    // Reporting is best effort; the artifacts on disk are what count.
    let _ = out.write_all(text.as_bytes());
}

/// Executes one parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Train {
            image,
            size,
            out: path,
            trainer,
        } => {
            let img = read_image(&image)?;
            let vectors = pixelgrid::image_to_blocks(&img);
            let (codebook, report) = quantizer::train_codebook(&vectors, &trainer.config(size))?;
            write_checked(&path, &persistence::save_codebook(&codebook))?;
            let entries = [
                ("training_vectors", vectors.len() as f64),
                ("codebook_size", codebook.len() as f64),
                ("train_seconds", report.elapsed.as_secs_f64()),
                ("final_distortion", report.final_distortion().unwrap_or(0.0)),
            ];
            emit(out, &metrics::render_text(&entries));
        }
        Command::Compress {
            image,
            codebook,
            out: path,
        } => {
            let img = read_image(&image)?;
            let cb = read_codebook(&codebook)?;
            let start = Instant::now();
            let map = codec::compress_image(&img, &cb)?;
            let seconds = start.elapsed().as_secs_f64();
            write_checked(&path, &persistence::save_index_file(&map))?;
            let entries = [
                ("indices", map.indices().len() as f64),
                ("compress_seconds", seconds),
            ];
            emit(out, &metrics::render_text(&entries));
        }
        Command::Decompress {
            indices,
            codebook,
            out: path,
        } => {
            let map = read_index_file(&indices)?;
            let cb = read_codebook(&codebook)?;
            let img = codec::decompress_image(&map, &cb)?;
            write_checked(&path, &pixelgrid::save_pgm(&img))?;
            let entries = [
                ("width", img.width() as f64),
                ("height", img.height() as f64),
            ];
            emit(out, &metrics::render_text(&entries));
        }
        Command::Roundtrip {
            train,
            test,
            size,
            out_dir,
            trainer,
            report,
        } => {
            let train_img = read_image(&train)?;
            let test_img = read_image(&test)?;
            fs::create_dir_all(&out_dir).map_err(|source| CliError::Io {
                path: out_dir.clone(),
                source,
            })?;

            let vectors = pixelgrid::image_to_blocks(&train_img);
            let (codebook, train_report) =
                quantizer::train_codebook(&vectors, &trainer.config(size))?;
            let start = Instant::now();
            let map = codec::compress_image(&test_img, &codebook)?;
            let compress_seconds = start.elapsed().as_secs_f64();
            let reconstructed = codec::decompress_image(&map, &codebook)?;

            let codebook_bytes = persistence::save_codebook(&codebook);
            write_checked(&out_dir.join(CODEBOOK_FILE), &codebook_bytes)?;
            write_checked(
                &out_dir.join(INDEX_FILE),
                &persistence::save_index_file(&map),
            )?;
            write_checked(
                &out_dir.join(IMAGE_FILE),
                &pixelgrid::save_pgm(&reconstructed),
            )?;

            let quality = QualityReport::evaluate(&test_img, &reconstructed, &map)?;
            let mut entries: Vec<(&str, f64)> = quality.fields().to_vec();
            entries.push(("train_seconds", train_report.elapsed.as_secs_f64()));
            entries.push(("compress_seconds", compress_seconds));
            let (rendered, name) = match report {
                ReportFormat::Json => (metrics::render_json(&entries) + "\n", "report.json"),
                ReportFormat::Text => {
                    entries.push(("codebook_overhead_bytes", codebook_bytes.len() as f64));
                    (metrics::render_text(&entries), "report.txt")
                }
            };
            write_checked(&out_dir.join(name), rendered.as_bytes())?;
            emit(out, &rendered);
        }
        Command::Metrics {
            original,
            reconstructed,
        } => {
            let a = read_image(&original)?;
            let b = read_image(&reconstructed)?;
            let mse = metrics::mse(&a, &b)?;
            let entries = [("mse", mse), ("psnr_db", metrics::psnr(mse)?)];
            emit(out, &metrics::render_text(&entries));
        }
    }
    Ok(())
}
