//! Command-line front end: argument parsing, settings resolution and the
//! subcommands. Results go to the supplied writer (stdout in the binary),
//! diagnostics go through `log`.
//!
//! Exit codes: 0 success, 1 any other failure, 2 missing input file or
//! weights (also used by the argument parser for usage errors), 3 training
//! diverged, 4 contours could not be aligned, 5 synthesis ranges invalid.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::audio_io::{
    read_contour_csv, read_wav, write_contour_csv, write_wav, AudioBuffer, PitchContour, WavFormat,
};
use crate::baseline::AcfEstimator;
use crate::decode::DecoderConfig;
use crate::dsp::StftConfig;
use crate::error::{Error, Result};
use crate::grid::{PitchGrid, DEFAULT_BINS, F_MAX_HZ, F_MIN_HZ};
use crate::metrics::{align, evaluate, evaluate_noisy, Estimator, EvalReport};
use crate::model::{load_params, params_checksum, save_params};
use crate::pipeline::{AnalysisConfig, NeuralEstimator};
use crate::train::{
    load_noise_dir, read_manifest, synth_corpus, train_loop, write_loss_csv, write_manifest,
    Corpus, NoiseBank, SynthRanges, TrainConfig,
};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_MISSING_INPUT: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;
pub const EXIT_ALIGNMENT: u8 = 4;
pub const EXIT_SYNTH_RANGE: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "pitchkit", version, about = "Monophonic pitch estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// `key = value` settings file; its values take precedence over flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub flags: CommonFlags,
}

/// Analysis, decoding and seeding overrides shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonFlags {
    /// Analysis sample rate in Hz.
    #[arg(long, global = true)]
    pub sr: Option<u32>,
    /// STFT window length in samples.
    #[arg(long, global = true)]
    pub n_fft: Option<usize>,
    /// Hop between frames in samples.
    #[arg(long, global = true)]
    pub hop: Option<usize>,
    /// Lowest pitch in Hz.
    #[arg(long, global = true)]
    pub fmin: Option<f64>,
    /// Highest pitch in Hz.
    #[arg(long, global = true)]
    pub fmax: Option<f64>,
    /// Number of pitch classes.
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// Decoder half-width in bins.
    #[arg(long, global = true)]
    pub window: Option<usize>,
    /// Voicing confidence threshold.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// SNR in dB for noisy evaluation; giving it enables noisy mode.
    #[arg(long, global = true)]
    pub snr: Option<f64>,
    /// Seed for training, synthesis and noise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a pitch contour with a trained model.
    Analyze {
        input: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Estimate a pitch contour with the autocorrelation baseline.
    Acf {
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Train a model on a manifest of `wav,csv` pairs.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Weights file to write.
        #[arg(long, short)]
        output: PathBuf,
        /// Per-epoch loss CSV; defaults to the weights path with a
        /// `.loss.csv` extension.
        #[arg(long)]
        loss_csv: Option<PathBuf>,
        /// Manifest scored after each epoch.
        #[arg(long)]
        validation: Option<PathBuf>,
    },
    /// Score predictions against a reference contour.
    Eval(EvalArgs),
    /// Generate synthetic harmonic examples with exact pitch.
    Synth(SynthArgs),
    /// Time the full analysis pipeline.
    Bench {
        input: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
    },
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted contour CSV, or a WAV file to analyze.
    pub input: Option<PathBuf>,
    /// Reference contour CSV for a single input.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Evaluate every `wav,csv` pair of a manifest instead.
    #[arg(long, conflicts_with_all = ["input", "truth"])]
    pub manifest: Option<PathBuf>,
    #[arg(long, conflicts_with = "acf")]
    pub weights: Option<PathBuf>,
    /// Use the autocorrelation baseline as the estimator.
    #[arg(long)]
    pub acf: bool,
    /// Directory of noise recordings; enables noisy mode.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Also write the report as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 100.0)]
    pub f0_min: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub f0_max: f64,
    #[arg(long, default_value_t = 3)]
    pub harmonics_min: usize,
    #[arg(long, default_value_t = 10)]
    pub harmonics_max: usize,
    /// Length of each example in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
}

/// A failed command: the error plus the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match &error {
            Error::Io(e) if e.kind() == io::ErrorKind::NotFound => EXIT_MISSING_INPUT,
            Error::Divergence { .. } => EXIT_DIVERGED,
            Error::Alignment(_) => EXIT_ALIGNMENT,
            _ => EXIT_FAILURE,
        };
        Self { code, error }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::Io(e).into()
    }
}

pub type CliResult = std::result::Result<(), Failure>;

fn require(path: &Path) -> std::result::Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_MISSING_INPUT,
            error: Error::Io(io::Error::new(
                io::ErrorKind::NotFound,
                format!("{}: no such file or directory", path.display()),
            )),
        })
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub analysis: AnalysisConfig,
    pub decoder: DecoderConfig,
    pub snr_db: f64,
    /// Whether an SNR was given at all, by flag or config file.
    pub snr_given: bool,
    pub seed: u64,
    pub train: TrainConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Self::resolve(&CommonFlags::default(), None).expect("defaults are valid")
    }
}

struct Raw {
    sr: u32,
    n_fft: usize,
    hop: usize,
    fmin: f64,
    fmax: f64,
    bins: usize,
    window: usize,
    threshold: f64,
    snr: Option<f64>,
    seed: u64,
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Argument(format!("{key}: cannot parse `{v}`")))
}

impl Settings {
    /// Defaults, then flags, then `config_text` on top.
    pub fn resolve(flags: &CommonFlags, config_text: Option<&str>) -> Result<Self> {
        let stft = StftConfig::default();
        let dec = DecoderConfig::default();
        let mut raw = Raw {
            sr: flags.sr.unwrap_or(stft.sample_rate),
            n_fft: flags.n_fft.unwrap_or(stft.window_len),
            hop: flags.hop.unwrap_or(stft.hop),
            fmin: flags.fmin.unwrap_or(F_MIN_HZ),
            fmax: flags.fmax.unwrap_or(F_MAX_HZ),
            bins: flags.bins.unwrap_or(DEFAULT_BINS),
            window: flags.window.unwrap_or(dec.half_width),
            threshold: flags.threshold.unwrap_or(dec.voicing_threshold),
            snr: flags.snr,
            seed: flags.seed.unwrap_or(0),
        };
        let mut train = TrainConfig::default();
        for (n, line) in config_text.unwrap_or("").lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Argument(format!("config line {}: expected `key = value`", n + 1))
            })?;
            let key = k.trim().replace('-', "_");
            let v = v.trim();
            let from_flag = match key.as_str() {
                "sr" => {
                    raw.sr = parse_value(&key, v)?;
                    flags.sr.is_some()
                }
                "n_fft" => {
                    raw.n_fft = parse_value(&key, v)?;
                    flags.n_fft.is_some()
                }
                "hop" => {
                    raw.hop = parse_value(&key, v)?;
                    flags.hop.is_some()
                }
                "fmin" => {
                    raw.fmin = parse_value(&key, v)?;
                    flags.fmin.is_some()
                }
                "fmax" => {
                    raw.fmax = parse_value(&key, v)?;
                    flags.fmax.is_some()
                }
                "bins" => {
                    raw.bins = parse_value(&key, v)?;
                    flags.bins.is_some()
                }
                "window" => {
                    raw.window = parse_value(&key, v)?;
                    flags.window.is_some()
                }
                "threshold" => {
                    raw.threshold = parse_value(&key, v)?;
                    flags.threshold.is_some()
                }
                "snr" => {
                    raw.snr = Some(parse_value(&key, v)?);
                    flags.snr.is_some()
                }
                "seed" => {
                    raw.seed = parse_value(&key, v)?;
                    flags.seed.is_some()
                }
                _ => {
                    train
                        .set(&key, v)
                        .map_err(|e| Error::Argument(format!("config line {}: {e}", n + 1)))?;
                    false
                }
            };
            if from_flag {
                log::warn!("config file sets `{key}`, overriding the command-line flag");
            }
        }
        train.seed = raw.seed;
        train.validate()?;

        let stft = StftConfig {
            window_len: raw.n_fft,
            hop: raw.hop,
            sample_rate: raw.sr,
            f_min: raw.fmin,
            f_max: raw.fmax,
            ..stft
        };
        stft.validate()?;
        if raw.fmin < F_MIN_HZ || raw.fmax > F_MAX_HZ {
            return Err(Error::Argument(format!(
                "pitch range [{}, {}] must lie inside [{F_MIN_HZ}, {F_MAX_HZ}]",
                raw.fmin, raw.fmax
            )));
        }
        let grid = PitchGrid::new(raw.bins, raw.fmin, raw.fmax)?;
        let decoder = DecoderConfig {
            half_width: raw.window,
            voicing_threshold: raw.threshold,
        };
        decoder.validate(raw.bins)?;
        if let Some(snr) = raw.snr {
            if snr.is_nan() {
                return Err(Error::Argument("snr must be a number".into()));
            }
        }
        Ok(Self {
            analysis: AnalysisConfig { stft, grid },
            decoder,
            snr_db: raw.snr.unwrap_or(10.0),
            snr_given: raw.snr.is_some(),
            seed: raw.seed,
            train,
        })
    }

    fn acf(&self) -> AcfEstimator {
        AcfEstimator {
            frames: self.analysis.stft,
            voicing_threshold: self.decoder.voicing_threshold,
        }
    }

    fn neural(&self, weights: &Path) -> std::result::Result<NeuralEstimator, Failure> {
        require(weights)?;
        let params = load_params(weights)?;
        Ok(NeuralEstimator::new(params, &self.analysis, self.decoder)?)
    }
}

pub fn run<W: Write>(cli: &Cli, out: &mut W) -> CliResult {
    let config_text = match &cli.config {
        Some(path) => {
            require(path)?;
            Some(fs::read_to_string(path)?)
        }
        None => None,
    };
    let settings = Settings::resolve(&cli.flags, config_text.as_deref())?;
    match &cli.command {
        Command::Analyze {
            input,
            weights,
            output,
        } => cmd_analyze(&settings, input, weights, output, out),
        Command::Acf { input, output } => cmd_acf(&settings, input, output, out),
        Command::Train {
            manifest,
            output,
            loss_csv,
            validation,
        } => cmd_train(
            &settings,
            manifest,
            output,
            loss_csv.as_deref(),
            validation.as_deref(),
            out,
        ),
        Command::Eval(args) => cmd_eval(&settings, args, out),
        Command::Synth(args) => cmd_synth(&settings, args, out),
        Command::Bench {
            input,
            weights,
            repeats,
        } => cmd_bench(&settings, input, weights, *repeats, out),
    }
}

fn write_summary<W: Write>(contour: &PitchContour, out: &mut W) -> io::Result<()> {
    writeln!(out, "frames: {}", contour.len())?;
    writeln!(out, "voiced fraction: {:.4}", contour.voiced_fraction())
}

pub fn cmd_analyze<W: Write>(
    s: &Settings,
    input: &Path,
    weights: &Path,
    output: &Path,
    out: &mut W,
) -> CliResult {
    require(input)?;
    let est = s.neural(weights)?;
    let contour = est.analyze(&read_wav(input)?)?;
    write_contour_csv(&contour, output)?;
    write_summary(&contour, out)?;
    Ok(())
}

pub fn cmd_acf<W: Write>(s: &Settings, input: &Path, output: &Path, out: &mut W) -> CliResult {
    require(input)?;
    let contour = s.acf().analyze(&read_wav(input)?)?;
    write_contour_csv(&contour, output)?;
    write_summary(&contour, out)?;
    Ok(())
}

pub fn cmd_train<W: Write>(
    s: &Settings,
    manifest: &Path,
    output: &Path,
    loss_csv: Option<&Path>,
    validation: Option<&Path>,
    out: &mut W,
) -> CliResult {
    require(manifest)?;
    if let Some(v) = validation {
        require(v)?;
    }
    let noise = match &s.train.noise_dir {
        Some(dir) => {
            require(dir)?;
            load_noise_dir(dir)?
        }
        None => NoiseBank::default(),
    };
    let corpus = Corpus::from_manifest(manifest, &s.analysis)?;
    let val = validation
        .map(|v| Corpus::from_manifest(v, &s.analysis))
        .transpose()?;
    log::info!(
        "training on {} files, {} epochs",
        corpus.len(),
        s.train.epochs
    );
    let outcome = train_loop(&corpus, &s.train, &s.analysis, &noise, val.as_ref(), |e| {
        let val = e
            .val_rpa
            .map(|v| format!(", val rpa {v:.4}"))
            .unwrap_or_default();
        log::info!(
            "epoch {}: loss {:.5} (ce {:.5}, cents {:.5}){val}",
            e.epoch,
            e.loss,
            e.ce,
            e.cents
        );
    })?;
    save_params(&outcome.params, output)?;
    let loss_path = loss_csv
        .map(Path::to_path_buf)
        .unwrap_or_else(|| output.with_extension("loss.csv"));
    write_loss_csv(&loss_path, &outcome.log)?;
    writeln!(out, "epochs: {}", outcome.log.len())?;
    writeln!(out, "best epoch: {}", outcome.best_epoch)?;
    writeln!(out, "checksum: {}", params_checksum(&outcome.params))?;
    Ok(())
}

fn is_wav(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

pub fn cmd_eval<W: Write>(s: &Settings, args: &EvalArgs, out: &mut W) -> CliResult {
    let noisy = s.snr_given || args.noise.is_some();
    let estimator = || -> std::result::Result<Box<dyn Estimator>, Failure> {
        match (&args.weights, args.acf) {
            (Some(w), _) => Ok(Box::new(s.neural(w)?)),
            (None, true) => Ok(Box::new(s.acf())),
            (None, false) => {
                Err(Error::Argument("audio input needs --weights or --acf".into()).into())
            }
        }
    };
    let files: Vec<(AudioBuffer, PitchContour)> = if let Some(m) = &args.manifest {
        require(m)?;
        read_manifest(m)?
            .into_iter()
            .map(|(wav, csv)| {
                require(&wav)?;
                require(&csv)?;
                Ok((read_wav(&wav)?, read_contour_csv(&csv)?))
            })
            .collect::<std::result::Result<_, Failure>>()?
    } else {
        let (Some(input), Some(truth)) = (&args.input, &args.truth) else {
            return Err(Error::Argument("give INPUT with --truth, or --manifest".into()).into());
        };
        require(input)?;
        require(truth)?;
        let truth = read_contour_csv(truth)?;
        if !is_wav(input) {
            if noisy {
                return Err(
                    Error::Argument("noisy mode needs audio input, not a contour".into()).into(),
                );
            }
            let report = EvalReport::compute_lenient(&align(&read_contour_csv(input)?, &truth)?)?;
            return print_report(&report, args.csv.as_deref(), out);
        }
        vec![(read_wav(input)?, truth)]
    };
    let est = estimator()?;
    let report = if noisy {
        let bank = match &args.noise {
            Some(dir) => {
                require(dir)?;
                load_noise_dir(dir)?
            }
            None => NoiseBank::default(),
        };
        evaluate_noisy(est.as_ref(), &files, &bank, s.snr_db, s.seed)?
    } else {
        evaluate(est.as_ref(), &files)?
    };
    print_report(&report, args.csv.as_deref(), out)
}

fn print_report<W: Write>(report: &EvalReport, csv: Option<&Path>, out: &mut W) -> CliResult {
    write!(out, "{report}")?;
    if let Some(path) = csv {
        fs::write(path, report.to_csv())?;
    }
    Ok(())
}

pub fn cmd_synth<W: Write>(s: &Settings, args: &SynthArgs, out: &mut W) -> CliResult {
    let ranges = SynthRanges {
        f0_hz: (args.f0_min, args.f0_max),
        harmonics: (args.harmonics_min, args.harmonics_max),
        duration_s: args.duration,
        ..SynthRanges::default()
    };
    ranges.validate().map_err(|error| Failure {
        code: EXIT_SYNTH_RANGE,
        error,
    })?;
    fs::create_dir_all(&args.out_dir)?;
    let mut pairs = Vec::with_capacity(args.count);
    for (i, (_, ex)) in synth_corpus(&ranges, args.count, s.seed)?
        .into_iter()
        .enumerate()
    {
        let (wav, csv) = (format!("synth_{i:05}.wav"), format!("synth_{i:05}.csv"));
        write_wav(&ex.audio, args.out_dir.join(&wav), WavFormat::Float32)?;
        write_contour_csv(&ex.truth, args.out_dir.join(&csv))?;
        pairs.push((wav, csv));
    }
    let manifest = args.out_dir.join("manifest.txt");
    write_manifest(&manifest, &pairs)?;
    writeln!(out, "examples: {}", pairs.len())?;
    writeln!(out, "manifest: {}", manifest.display())?;
    Ok(())
}

/// Wall-clock statistics of repeated pipeline passes.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchStats {
    pub runs: usize,
    pub audio_seconds: f64,
    pub mean_seconds: f64,
    pub min_seconds: f64,
}

impl BenchStats {
    /// Audio seconds processed per compute second, from the mean pass.
    pub fn real_time_factor(&self) -> f64 {
        self.audio_seconds / self.mean_seconds
    }
}

/// One untimed warm-up pass, then `repeats` timed passes.
pub fn bench_pipeline(
    est: &NeuralEstimator,
    audio: &AudioBuffer,
    repeats: usize,
) -> Result<BenchStats> {
    if repeats == 0 {
        return Err(Error::Argument("repeats must be at least 1".into()));
    }
    est.analyze(audio)?;
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        est.analyze(audio)?;
        times.push(t.elapsed().as_secs_f64());
    }
    Ok(BenchStats {
        runs: repeats,
        audio_seconds: audio.duration_seconds(),
        mean_seconds: times.iter().sum::<f64>() / repeats as f64,
        min_seconds: times.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

pub fn cmd_bench<W: Write>(
    s: &Settings,
    input: &Path,
    weights: &Path,
    repeats: usize,
    out: &mut W,
) -> CliResult {
    require(input)?;
    let est = s.neural(weights)?;
    let stats = bench_pipeline(&est, &read_wav(input)?, repeats)?;
    if stats.real_time_factor() < 1.0 {
        log::warn!("pipeline runs slower than real time");
    }
    writeln!(out, "runs: {}", stats.runs)?;
    writeln!(out, "audio seconds: {:.3}", stats.audio_seconds)?;
    writeln!(out, "mean ms: {:.3}", stats.mean_seconds * 1e3)?;
    writeln!(out, "min ms: {:.3}", stats.min_seconds * 1e3)?;
    writeln!(out, "real-time factor: {:.1}", stats.real_time_factor())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let s = Settings::default();
        assert_eq!(s.analysis, AnalysisConfig::default());
        assert_eq!(s.decoder, DecoderConfig::default());
        assert_eq!(s.snr_db, 10.0);
        assert!(!s.snr_given);
        assert_eq!(s.train, TrainConfig::default());
    }

    #[test]
    fn flags_override_defaults_and_config_overrides_flags() {
        let flags = CommonFlags {
            threshold: Some(0.5),
            window: Some(4),
            seed: Some(9),
            ..Default::default()
        };
        let s = Settings::resolve(&flags, None).unwrap();
        assert_eq!(s.decoder.voicing_threshold, 0.5);
        assert_eq!(s.decoder.half_width, 4);
        assert_eq!(s.train.seed, 9);
        let s = Settings::resolve(&flags, Some("threshold = 0.7\nepochs = 3 # short\nsnr = 5"))
            .unwrap();
        assert_eq!(s.decoder.voicing_threshold, 0.7);
        assert_eq!(s.decoder.half_width, 4);
        assert_eq!(s.train.epochs, 3);
        assert_eq!(s.snr_db, 5.0);
        assert!(s.snr_given);
    }

    #[test]
    fn config_accepts_dashed_keys() {
        let s =
            Settings::resolve(&CommonFlags::default(), Some("n-fft = 2048\nhop = 512")).unwrap();
        assert_eq!(s.analysis.stft.window_len, 2048);
        assert_eq!(s.analysis.stft.hop, 512);
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let bad = |text: &str| Settings::resolve(&CommonFlags::default(), Some(text)).is_err();
        assert!(bad("window = 0"));
        assert!(bad("threshold = 1.5"));
        assert!(bad("hop = 300"));
        assert!(bad("fmin = 20"));
        assert!(bad("bogus = 1"));
        assert!(bad("seed"));
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        let code = |e: Error| Failure::from(e).code;
        assert_eq!(
            code(Error::Io(io::Error::new(io::ErrorKind::NotFound, "x"))),
            EXIT_MISSING_INPUT
        );
        assert_eq!(
            code(Error::Divergence {
                epoch: 1,
                step: 1,
                loss: f64::NAN
            }),
            EXIT_DIVERGED
        );
        assert_eq!(code(Error::Alignment("hop".into())), EXIT_ALIGNMENT);
        assert_eq!(code(Error::Format("x".into())), EXIT_FAILURE);
    }

    #[test]
    fn command_line_parses() {
        let cli = Cli::try_parse_from([
            "pitchkit", "eval", "p.csv", "--truth", "t.csv", "--snr", "10", "--seed", "4",
        ])
        .unwrap();
        assert_eq!(cli.flags.snr, Some(10.0));
        assert_eq!(cli.flags.seed, Some(4));
        assert!(matches!(cli.command, Command::Eval(_)));
        assert!(
            Cli::try_parse_from(["pitchkit", "eval", "--manifest", "m", "--truth", "t"]).is_err()
        );
        assert!(Cli::try_parse_from(["pitchkit", "analyze", "a.wav"]).is_err());
    }
}
