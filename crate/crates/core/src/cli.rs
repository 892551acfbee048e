//! Command-line surface: config binding, subcommands and the exit-code
//! contract (0 ok, 1 other failure, 2 config/precondition, 3 format,
//! 4 detection rejected).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::attack::{apply_attack, swap_attack, AttackSpec, SwapPair};
use crate::detect::{DetectionThresholds, Detector, Thresholding};
use crate::error::{Error, Result};
use crate::flow::{generate, invert_joint, invert_separate, ToyFlowSpec, TrajectoryConfig};
use crate::grid::{write_grid_dump, Dims4, Modality};
use crate::keyring::{KeyLookup, PlainIndex, Registry, SecretPayload};
use crate::latent::{extract_symbols, load_latent, sample_latent, save_latent, LatentTensor, RepetitionFactors, SymbolMap};
use crate::pipeline::{embed, SessionGrids, WatermarkConfig};
use crate::stats::{
    exact_swap_fp, hoeffding_bound, ks_one_sample, monte_carlo_swap, monte_carlo_swap_pipeline, TrialSummary,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_REJECTED: i32 = 4;

/// Single JSON run configuration. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub latent_dims: Dims4,
    pub factors: RepetitionFactors,
    pub bind_len: usize,
    pub index_reps: usize,
    /// Bits per latent coordinate; the entangled pipeline uses 1.
    pub bits_per_symbol: u8,
    pub delta: f64,
    pub trajectory: TrajectoryConfig,
    pub thresholds: DetectionThresholds,
    pub flow: ToyFlowSpec,
    pub master_seed: u64,
    pub registry: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let w = WatermarkConfig::default();
        RunConfig {
            latent_dims: w.latent_dims(),
            factors: w.factors,
            bind_len: w.bind_len,
            index_reps: w.index_reps,
            bits_per_symbol: 1,
            delta: w.delta,
            trajectory: TrajectoryConfig::default(),
            thresholds: DetectionThresholds::default(),
            flow: ToyFlowSpec::default(),
            master_seed: 0,
            registry: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))
    }

    pub fn watermark(&self) -> Result<WatermarkConfig> {
        if self.bits_per_symbol != 1 {
            return Err(Error::invalid("the entangled pipeline embeds 1 bit per coordinate"));
        }
        let w = WatermarkConfig {
            grid_dims: self.factors.grid_dims(self.latent_dims)?,
            factors: self.factors,
            bind_len: self.bind_len,
            index_reps: self.index_reps,
            delta: self.delta,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        self.watermark()?;
        self.trajectory.validate()?;
        self.thresholds.validate()?;
        self.flow.validate()
    }

    pub fn registry_path(&self) -> Result<&Path> {
        self.registry
            .as_deref()
            .ok_or_else(|| Error::invalid("config has no registry path"))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }
}

#[derive(Debug, Parser)]
#[command(name = "avbind", version, about = "Entangled audio-visual latent watermarking toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct Pair {
    #[arg(long)]
    pub video: PathBuf,
    #[arg(long)]
    pub audio: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum McMode {
    Fast,
    Pipeline,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a secret, register it and write the entangled initial noise.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out_dir: PathBuf,
        /// Index as 8 hex digits; drawn from the seed when omitted.
        #[arg(long)]
        index: Option<String>,
        #[arg(long)]
        prompt: String,
    },
    /// Run the toy flow forward from initial noise.
    Generate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the toy flow backward to recover initial noise.
    Invert {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        out_dir: PathBuf,
        /// Invert each modality in its own pass.
        #[arg(long)]
        separate: bool,
    },
    /// Apply an attack given as AttackSpec JSON.
    Attack {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        out_dir: PathBuf,
        /// e.g. '{"kind":"frame_swap","p":0.25,"seed":1}'
        #[arg(long)]
        spec: String,
    },
    /// Detect and verify a recovered pair; prints the report.
    Detect {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_enum, default_value = "zero")]
        thresholding: ThresholdingArg,
        /// Skip temporal synchronization.
        #[arg(long)]
        no_resync: bool,
    },
    /// Monte Carlo swap false-positive rate against the exact tail and bound.
    BenchSecurity {
        #[command(flatten)]
        common: Common,
        #[arg(long = "N", alias = "n", default_value_t = 128)]
        n: usize,
        #[arg(long, default_value_t = 0.8)]
        tau: f64,
        /// Accepts scientific notation, e.g. 1e6.
        #[arg(long, default_value = "1e6")]
        trials: String,
        #[arg(long, value_enum, default_value = "fast")]
        mode: McMode,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// KS rejection rate of watermarked coordinates over independent keys.
    BenchLossless {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        keys: usize,
        #[arg(long, default_value_t = 100_000)]
        coords: usize,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long = "bits", default_value_t = 1)]
        bits_per_symbol: u8,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write the ideal grid of a registered session in the grid dump format.
    DumpGrid {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        index: String,
        #[arg(long, value_enum, default_value = "video")]
        modality: ModalityArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ThresholdingArg {
    Zero,
    Median,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModalityArg {
    Video,
    Audio,
}

/// Outcome of a successful command.
pub struct Outcome {
    pub stdout: serde_json::Value,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: serde_json::Value) -> Self {
        Outcome { stdout, code: EXIT_OK }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Format(_) | Error::RegistryCorrupt { .. } | Error::Json(_) => EXIT_FORMAT,
        Error::Io(_) => EXIT_FAILURE,
        _ => EXIT_CONFIG,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::EmptySecret => "empty_secret",
        Error::SecretTooShort { .. } => "secret_too_short",
        Error::DuplicateIndex(_) => "duplicate_index",
        Error::NotFound(_) => "not_found",
        Error::LayoutOverflow(_) => "layout_overflow",
        Error::DimensionMismatch(_) => "dimension_mismatch",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::SyncFailed { .. } => "sync_failed",
        Error::Format(_) => "format",
        Error::RegistryCorrupt { .. } => "registry_corrupt",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

pub fn error_json(err: &Error) -> serde_json::Value {
    json!({ "error": error_kind(err), "message": err.to_string() })
}

/// Parses `args`, runs the command, prints to stdout/stderr and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string() }));
            return EXIT_CONFIG;
        }
    };
    match run(cli.command) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.stdout).expect("json"));
            out.code
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut c = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        c.master_seed = s;
    }
    c.validate()?;
    Ok(c)
}

fn load_pair(pair: &Pair) -> Result<(LatentTensor, LatentTensor)> {
    let v = load_latent(&pair.video)?;
    let a = load_latent(&pair.audio)?;
    if v.modality != Modality::Video || a.modality != Modality::Audio {
        return Err(Error::invalid("--video and --audio must hold video and audio latents"));
    }
    Ok((v, a))
}

fn file_sha256(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn write_pair(dir: &Path, v: &LatentTensor, a: &LatentTensor) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let (pv, pa) = (dir.join("video.mave"), dir.join("audio.mave"));
    save_latent(&pv, v)?;
    save_latent(&pa, a)?;
    Ok((pv, pa))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn parse_count(s: &str) -> Result<u64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::invalid(format!("not a count: {s}")))?;
    if !(v >= 1.0 && v.fract() == 0.0 && v <= 1e15) {
        return Err(Error::invalid(format!("not a positive integer count: {s}")));
    }
    Ok(v as u64)
}

fn derive_rng(seed: u64, label: &str) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"avbind/cli/");
    h.update(label.as_bytes());
    h.update(seed.to_le_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Embed { common, out_dir, index, prompt } => cmd_embed(&load_config(&common)?, &out_dir, index.as_deref(), &prompt),
        Command::Generate { common, pair, out_dir } => {
            let c = load_config(&common)?;
            let (v, a) = load_pair(&pair)?;
            let xv = generate(&v, &c.flow, &c.trajectory)?;
            let xa = generate(&a, &c.flow, &c.trajectory)?;
            let (pv, pa) = write_pair(&out_dir, &xv, &xa)?;
            Ok(Outcome::ok(json!({ "video": pv, "audio": pa, "n_steps": c.trajectory.n_steps, "delta_t": c.trajectory.delta_t })))
        }
        Command::Invert { common, pair, out_dir, separate } => {
            let c = load_config(&common)?;
            let (v, a) = load_pair(&pair)?;
            let inv = if separate {
                invert_separate(&v, &a, &c.flow, &c.trajectory)?
            } else {
                invert_joint(&v, &a, &c.flow, &c.trajectory)?
            };
            let (pv, pa) = write_pair(&out_dir, &inv.video, &inv.audio)?;
            Ok(Outcome::ok(json!({
                "video": pv,
                "audio": pa,
                "mode": if separate { "separate" } else { "joint" },
                "model_evaluations": inv.model_evaluations,
            })))
        }
        Command::Attack { common, pair, out_dir, spec } => {
            load_config(&common)?;
            let spec: AttackSpec =
                serde_json::from_str(&spec).map_err(|e| Error::invalid(format!("attack spec: {e}")))?;
            let (v, a) = load_pair(&pair)?;
            let (av, aa, transcript) = match spec {
                AttackSpec::Swap => {
                    let pair = SwapPair {
                        video_from: file_sha256(&pair.video)?,
                        audio_from: file_sha256(&pair.audio)?,
                    };
                    swap_attack(&v, &a, pair)
                }
                other => apply_attack(&other, &v, &a)?,
            };
            let (pv, pa) = write_pair(&out_dir, &av, &aa)?;
            let tp = out_dir.join("transcript.json");
            write_json(&tp, &transcript)?;
            Ok(Outcome::ok(json!({ "video": pv, "audio": pa, "transcript": tp })))
        }
        Command::Detect { common, pair, thresholding, no_resync } => {
            let c = load_config(&common)?;
            let registry = Registry::open(c.registry_path()?)?;
            let (v, a) = load_pair(&pair)?;
            let mut d = Detector::new(c.watermark()?, c.thresholds);
            d.thresholding = match thresholding {
                ThresholdingArg::Zero => Thresholding::Zero,
                ThresholdingArg::Median => Thresholding::Median,
            };
            d.resync = !no_resync;
            let report = d.detect(&v, &a, &registry)?;
            let code = if report.is_authentic() { EXIT_OK } else { EXIT_REJECTED };
            Ok(Outcome { stdout: serde_json::to_value(&report)?, code })
        }
        Command::BenchSecurity { common, n, tau, trials, mode, out_dir } => {
            let c = load_config(&common)?;
            let trials = parse_count(&trials)?;
            let summary = match mode {
                McMode::Fast => monte_carlo_swap(trials, n, tau, c.master_seed)?,
                McMode::Pipeline => monte_carlo_swap_pipeline(trials, n, tau, c.master_seed)?,
            };
            let exact = exact_swap_fp(n, tau)?;
            let bound = hoeffding_bound(n, tau)?;
            let out = json!({
                "schema": "avbind.bench-security/v1",
                "mode": format!("{mode:?}").to_lowercase(),
                "summary": summary,
                "exact": exact,
                "hoeffding": bound,
                "exact_in_wilson_interval": summary.contains(exact),
            });
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("security.csv"), format!("{}\n{}\n", TrialSummary::CSV_HEADER, summary.csv_row()))?;
                write_json(&dir.join("security.json"), &out)?;
            }
            Ok(Outcome::ok(out))
        }
        Command::BenchLossless { common, keys, coords, delta, bits_per_symbol, alpha, out_dir } => {
            let c = load_config(&common)?;
            cmd_bench_lossless(&c, keys, coords, delta, bits_per_symbol, alpha, out_dir.as_deref())
        }
        Command::DumpGrid { common, index, modality, out } => {
            let c = load_config(&common)?;
            let registry = Registry::open(c.registry_path()?)?;
            let index = PlainIndex::from_hex(&index)?;
            let rec = registry.lookup(index)?;
            let grids = SessionGrids::derive(&rec.secret, &rec.prompt, index, &c.watermark()?)?;
            let grid = match modality {
                ModalityArg::Video => &grids.video,
                ModalityArg::Audio => &grids.audio,
            };
            fs::write(&out, write_grid_dump(grid))?;
            Ok(Outcome::ok(json!({ "out": out, "bits": grid.bits.len(), "digest": hex::encode(grid.digest()) })))
        }
    }
}

fn cmd_embed(c: &RunConfig, out_dir: &Path, index: Option<&str>, prompt: &str) -> Result<Outcome> {
    let registry_path = c.registry_path()?;
    let w = c.watermark()?;
    let mut rng = derive_rng(c.master_seed, "embed");
    let secret = SecretPayload::random(&mut rng);
    let index = match index {
        Some(h) => PlainIndex::from_hex(h)?,
        None => PlainIndex(rng.next_u32()),
    };
    let noise_seed = rng.next_u64();
    let session = embed(&secret, prompt, index, &w, noise_seed)?;
    Registry::open(registry_path)?.register(index, &secret, prompt)?;
    let (pv, pa) = write_pair(out_dir, &session.video, &session.audio)?;
    let manifest = json!({
        "schema": "avbind.manifest/v1",
        "index_hex": index.to_hex(),
        "prompt": prompt,
        "master_seed": c.master_seed,
        "config_sha256": c.content_hash(),
        "grid_dims": w.grid_dims,
        "latent_dims": w.latent_dims(),
        "video": { "path": "video.mave", "sha256": file_sha256(&pv)? },
        "audio": { "path": "audio.mave", "sha256": file_sha256(&pa)? },
        "video_grid_sha256": hex::encode(session.grids.video.digest()),
    });
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(Outcome::ok(manifest))
}

fn cmd_bench_lossless(
    c: &RunConfig,
    keys: usize,
    coords: usize,
    delta: f64,
    l: u8,
    alpha: f64,
    out_dir: Option<&Path>,
) -> Result<Outcome> {
    use rayon::prelude::*;
    if keys == 0 {
        return Err(Error::invalid("at least one key required"));
    }
    if !(1..=8).contains(&l) {
        return Err(Error::invalid(format!("bits per symbol {l} not in 1..=8")));
    }
    let cdf = crate::latent::watermarked_cdf(l, delta);
    let rows: Result<Vec<(usize, f64, f64, bool)>> = (0..keys)
        .into_par_iter()
        .map(|k| {
            let mut rng = derive_rng(c.master_seed ^ k as u64, "lossless");
            let key: [u8; 32] = {
                let mut b = [0u8; 32];
                rng.fill_bytes(&mut b);
                b
            };
            // payload-independent symbols: keystream-randomized constant map
            let bits = crate::keyring::keystream(&key, coords * usize::from(l));
            let symbols = bits
                .chunks(usize::from(l))
                .map(|ch| ch.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (b << i)))
                .collect();
            let map = SymbolMap::new(Modality::Video, Dims4::new(1, 1, 1, coords), l, symbols)?;
            let z = sample_latent(&map, delta, rng.next_u64())?;
            debug_assert_eq!(extract_symbols(&z, l)?.symbols, map.symbols);
            let xs: Vec<f64> = z.values.iter().map(|&v| f64::from(v)).collect();
            let r = ks_one_sample(&xs, &cdf)?;
            Ok((k, r.statistic, r.p_value, r.p_value < alpha))
        })
        .collect();
    let rows = rows?;
    let rejections = rows.iter().filter(|r| r.3).count();
    let out = json!({
        "schema": "avbind.bench-lossless/v1",
        "keys": keys,
        "coords": coords,
        "delta": delta,
        "bits_per_symbol": l,
        "alpha": alpha,
        "rejections": rejections,
        "rejection_rate": rejections as f64 / keys as f64,
        "master_seed": c.master_seed,
    });
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let mut csv = String::from("key,ks_statistic,p_value,rejected\n");
        for (k, d, p, rej) in &rows {
            csv.push_str(&format!("{k},{d},{p},{rej}\n"));
        }
        fs::write(dir.join("lossless.csv"), csv)?;
        write_json(&dir.join("lossless.json"), &out)?;
    }
    Ok(Outcome::ok(out))
}
