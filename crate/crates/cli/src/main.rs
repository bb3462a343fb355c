use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rsvrc::channel::{diff_report, recompress_image, tcm};
use rsvrc::codec::{compress, quant_table, read_pgm_from, read_qdct_from, write_qdct};
use rsvrc::distortion::juniward_costmap;
use rsvrc::pipeline::{embed, evaluate, extract, Cover, EvalConfig};
use rsvrc::{ChannelParams, CoefficientImage, EmbedParams, Error, Method, SpatialImage, StegoKey};

#[derive(Parser)]
#[command(name = "rsvrc", version, about = "Recompression-robust JPEG steganography on quantized DCT coefficients")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Channel-match an image by repeated recompression.
    Tcm {
        input: PathBuf,
        #[arg(long, default_value_t = 85)]
        quality: u32,
        #[arg(long, default_value_t = 12)]
        max_iters: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Hide a message file in a cover (PGM or QDCT).
    Embed {
        cover: PathBuf,
        #[arg(long)]
        msg: PathBuf,
        #[arg(long)]
        key: String,
        #[arg(long, default_value_t = 0.1)]
        payload: f64,
        #[arg(long, default_value_t = 85)]
        quality: u32,
        /// BCH code as `n,k`; n must be 127.
        #[arg(long, default_value = "127,64")]
        bch: String,
        #[arg(long, default_value = "rsvrc")]
        method: String,
        #[arg(long, default_value_t = 3)]
        height: usize,
        #[arg(long, default_value_t = 16)]
        subimages: usize,
        #[arg(long, default_value_t = 12)]
        max_iters: usize,
        /// Write the embedding report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Recover a message from a (possibly recompressed) stego QDCT file.
    Extract {
        stego: PathBuf,
        #[arg(long)]
        key: String,
        #[arg(long, default_value = "127,64")]
        bch: String,
        /// Payload the sender used; only speeds up the block-count search.
        #[arg(long, default_value_t = 0.1)]
        payload: f64,
        #[arg(long, default_value_t = 3)]
        height: usize,
        #[arg(long, default_value_t = 16)]
        subimages: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Pass an image through the channel and report per-pass change counts.
    Simulate {
        input: PathBuf,
        #[arg(long, default_value_t = 85)]
        quality: u32,
        #[arg(long, default_value_t = 1)]
        passes: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Embed, recompress and extract over a directory of PGM covers.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "rsvrc,baseline")]
        methods: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "75,85,95")]
        quality: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1")]
        payload: Vec<f64>,
        #[arg(long, default_value = "127,64")]
        bch: String,
        #[arg(long, default_value = "00")]
        key: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump the J-UNIWARD cost map as little-endian f64 in coefficient order.
    Costmap {
        input: PathBuf,
        #[arg(long, default_value_t = 85)]
        quality: u32,
        #[arg(short, long)]
        output: PathBuf,
    },
}

enum Input {
    Pixels(SpatialImage),
    Coefficients(CoefficientImage),
}

fn read_input(path: &Path) -> anyhow::Result<Input> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.starts_with(b"P5") {
        Ok(Input::Pixels(read_pgm_from(bytes.as_slice())?))
    } else if bytes.starts_with(b"QDCT1") {
        Ok(Input::Coefficients(read_qdct_from(bytes.as_slice())?))
    } else {
        Err(Error::Format(format!("{} is neither PGM (P5) nor QDCT", path.display())).into())
    }
}

fn coefficients_at(input: Input, quality: u32) -> anyhow::Result<CoefficientImage> {
    Ok(match input {
        Input::Pixels(img) => compress(&img, &quant_table(quality)?),
        Input::Coefficients(ci) => ci,
    })
}

fn parse_bch(spec: &str) -> anyhow::Result<usize> {
    let (n, k) = spec
        .split_once(',')
        .ok_or_else(|| Error::InvalidArgument(format!("--bch expects n,k, got {spec:?}")))?;
    let (n, k): (usize, usize) = (n.trim().parse()?, k.trim().parse()?);
    if n != 127 {
        return Err(Error::InvalidArgument(format!("only n = 127 is supported, got {n}")).into());
    }
    Ok(k)
}

fn load_corpus(dir: &Path) -> anyhow::Result<Vec<(String, SpatialImage)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!(Error::InvalidArgument(format!("no .pgm files in {}", dir.display())));
    }
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let img = read_pgm_from(fs::read(&p)?.as_slice()).with_context(|| format!("reading {}", p.display()))?;
            Ok((name, img))
        })
        .collect()
}

fn run(args: Args) -> anyhow::Result<()> {
    match args.command {
        Command::Tcm {
            input,
            quality,
            max_iters,
            output,
        } => {
            let q = quant_table(quality)?;
            let ci = coefficients_at(read_input(&input)?, quality)?;
            let t = tcm(&ci, &ChannelParams::new(*ci.qtable(), q), max_iters)?;
            write_qdct(&t.image, &output)?;
            println!(
                "{}",
                serde_json::json!({
                    "iterations": t.iterations,
                    "residual_changes": t.residual_changes,
                    "history": t.history,
                })
            );
        }
        Command::Embed {
            cover,
            msg,
            key,
            payload,
            quality,
            bch,
            method,
            height,
            subimages,
            max_iters,
            report,
            output,
        } => {
            let p = EmbedParams {
                payload,
                quality,
                max_tcm_iters: max_iters,
                h: height,
                bch_k: parse_bch(&bch)?,
                subimages,
                method: method.parse::<Method>()?,
            };
            let key = StegoKey::from_hex(&key)?;
            let message = fs::read(&msg).with_context(|| format!("reading {}", msg.display()))?;
            let input = read_input(&cover)?;
            let (stego, rep) = match &input {
                Input::Pixels(img) => embed(Cover::Spatial(img), &message, &key, &p)?,
                Input::Coefficients(ci) => embed(Cover::Coefficients(ci), &message, &key, &p)?,
            };
            write_qdct(&stego, &output)?;
            if let Some(path) = report {
                fs::write(&path, serde_json::to_vec_pretty(&rep)?)?;
            }
            if rep.tcm.residual_changes > 0 {
                eprintln!("warning: cover still changes in {} coefficients after matching", rep.tcm.residual_changes);
            }
            eprintln!(
                "embedded {} bytes ({} coded bits of {} available), {} changes, channel P_e {:.3e}",
                rep.message_bytes, rep.coded_bits, rep.capacity_bits, rep.changes, rep.verify.p_e
            );
        }
        Command::Extract {
            stego,
            key,
            bch,
            payload,
            height,
            subimages,
            output,
        } => {
            let ci = match read_input(&stego)? {
                Input::Coefficients(ci) => ci,
                Input::Pixels(_) => bail!(Error::Format("extraction needs a QDCT file".into())),
            };
            let p = EmbedParams {
                payload,
                quality: ci.qtable().quality() as u32,
                h: height,
                bch_k: parse_bch(&bch)?,
                subimages,
                ..Default::default()
            };
            let out = extract(&ci, &StegoKey::from_hex(&key)?, &p)?;
            fs::write(&output, &out.message)?;
            eprintln!(
                "recovered {} bytes, {} bits corrected in {} blocks",
                out.message.len(),
                out.stats.corrected,
                out.stats.bch_blocks
            );
        }
        Command::Simulate {
            input,
            quality,
            passes,
            output,
        } => {
            let q = quant_table(quality)?;
            let mut ci = coefficients_at(read_input(&input)?, quality)?;
            let mut counts = Vec::with_capacity(passes);
            for _ in 0..passes {
                let next = recompress_image(&ci, &ChannelParams::new(*ci.qtable(), q));
                counts.push(diff_report(&ci, &next)?);
                ci = next;
            }
            if let Some(path) = output {
                write_qdct(&ci, &path)?;
            }
            println!("{}", serde_json::to_string_pretty(&counts)?);
        }
        Command::Evaluate {
            corpus,
            methods,
            quality,
            payload,
            bch,
            key,
            out,
        } => {
            let cfg = EvalConfig {
                methods: methods.iter().map(|m| m.parse()).collect::<rsvrc::Result<_>>()?,
                qualities: quality,
                payloads: payload,
                bch_k: parse_bch(&bch)?,
                ..Default::default()
            };
            let covers = load_corpus(&corpus)?;
            let report = evaluate(&covers, &cfg, &StegoKey::from_hex(&key)?)?;
            fs::write(&out, serde_json::to_vec_pretty(&report)?)?;
            for c in &report.cells {
                eprintln!(
                    "{:>8} QF{} {:<5} n={:<3} P_e {:.5}%  P_s {:.4}%  R_s {:.1}%",
                    c.method,
                    c.quality,
                    c.payload,
                    c.images,
                    100.0 * c.p_e,
                    100.0 * c.p_s,
                    100.0 * c.r_s
                );
            }
        }
        Command::Costmap { input, quality, output } => {
            let ci = coefficients_at(read_input(&input)?, quality)?;
            let cm = juniward_costmap::<f64>(&ci);
            let mut f = std::io::BufWriter::new(fs::File::create(&output)?);
            for r in cm.rho() {
                f.write_all(&r.to_le_bytes())?;
            }
            f.flush()?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::CapacityExceeded { .. } | Error::Format(_) | Error::InvalidArgument(_) | Error::DimensionMismatch(_)) => 2,
        Some(Error::ExtractionFailed(_) | Error::DecodeFailure) => 3,
        _ if err.downcast_ref::<std::num::ParseIntError>().is_some() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
