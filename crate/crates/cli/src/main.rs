//! `erpwave` command-line tool: synthesize trials, detect N170 complexes,
//! and dump filter/scale diagnostics.
//!
//! Exit codes: 0 when the command ran (whether or not anything was
//! detected), 1 for usage or configuration errors, 2 for data errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use erpwave::io::{load_config, read_trials, read_truth, trial_order, write_trials, write_truth, RunOutput, TrialFile, TrialOutput};
use erpwave::scale::{calibrate_with, scale_energy};
use erpwave::synth::{make_corpus, CorpusSpec, TemplateParams};
use erpwave::wavelet::{group_delay, scale_grid, Cwt};
use erpwave::{load_wavelet, score, Detector, DetectorConfig, Signal, TrialSpec};

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<erpwave::Error> for Failure {
    fn from(e: erpwave::Error) -> Self {
        if e.is_config_error() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn data(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

#[derive(Parser)]
#[command(name = "erpwave", version, about = "Single-trial N170 detection by wavelet asymmetry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detector over every trial of a CSV file.
    Detect(DetectArgs),
    /// Write a synthetic corpus and its truth sidecar.
    Synth(SynthArgs),
    /// Filter and scale diagnostics.
    #[command(subcommand)]
    Analyze(Analyze),
}

/// Settings shared by every command that builds a detector.
#[derive(Args, Clone)]
struct PipelineArgs {
    /// JSON config; repeatable, later files win.
    #[arg(long = "config")]
    configs: Vec<PathBuf>,
    #[arg(long)]
    wavelet: Option<String>,
    /// Sampling rate in Hz, used when the file has no `# sampling_rate` line.
    #[arg(long)]
    rate: Option<f64>,
    /// Scale search band as `lo:hi`.
    #[arg(long, value_parser = parse_range)]
    scale_band: Option<[f64; 2]>,
    #[arg(long)]
    c_tau: Option<f64>,
}

impl PipelineArgs {
    fn config(&self) -> CliResult<DetectorConfig> {
        let docs = self
            .configs
            .iter()
            .map(|p| std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))))
            .collect::<CliResult<Vec<_>>>()?;
        let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
        let mut config = load_config(&refs).map_err(|e| Failure::Usage(e.to_string()))?;
        if let Some(w) = &self.wavelet {
            config.wavelet = w.clone();
        }
        if let Some(b) = self.scale_band {
            config.scale_band = b;
        }
        if let Some(c) = self.c_tau {
            config.c_tau = c;
        }
        config.validate()?;
        Ok(config)
    }

    fn trials(&self, path: &Path) -> CliResult<TrialFile> {
        let file = File::open(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
        read_trials(io::BufReader::new(file), self.rate).map_err(|e| data(format!("{}: {e}", path.display())))
    }
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Truth CSV (`trial_id,has_erp,n1_index`); adds a report to the output.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Total trials, split into ceil(n/2) positives and floor(n/2) negatives.
    #[arg(long, conflicts_with_all = ["positives", "negatives"])]
    count: Option<usize>,
    #[arg(long)]
    positives: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha_power: f64,
    /// Fixed N1 latency after onset (ms).
    #[arg(long, conflicts_with = "n1_range")]
    n1_latency: Option<f64>,
    /// N1 latency drawn per trial from `lo:hi` ms.
    #[arg(long, value_parser = parse_range)]
    n1_range: Option<[f64; 2]>,
    #[arg(long, default_value_t = 1000.0)]
    duration_ms: f64,
    #[arg(long, default_value_t = 200.0)]
    onset_ms: f64,
    #[arg(long, default_value_t = 512.0)]
    rate: f64,
    #[arg(long, default_value = "Cz")]
    channel: String,
    #[arg(long)]
    out: PathBuf,
    /// Truth sidecar path; defaults to `<out>.truth.csv`.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Analyze {
    /// Phase, group delay and phase delay of a wavelet's scaling filter as CSV.
    GroupDelay {
        wavelet: String,
        #[arg(long, default_value_t = 512)]
        n_freqs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summed |coefficient| per scale of the trial average, as CSV.
    ScaleEnergy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "sym5")]
        wavelet: String,
        #[arg(long)]
        rate: Option<f64>,
        /// Scales as `lo:hi`, unit steps.
        #[arg(long, value_parser = parse_range, default_value = "1:128")]
        scales: [f64; 2],
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coefficient threshold from trials known to contain the complex, as JSON.
    Calibrate {
        #[arg(long)]
        input: PathBuf,
        /// Restrict to trials marked positive in this truth CSV.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
    Ok([num(lo)?, num(hi)?])
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn detect(args: DetectArgs) -> CliResult<()> {
    let config = args.pipeline.config()?;
    let file = args.pipeline.trials(&args.input)?;
    let fs = file.sampling_rate;
    let detector = Detector::new(config, fs)?;

    let mut trials = file.trials;
    trials.sort_by(|a, b| {
        trial_order(&a.trial_id)
            .cmp(&trial_order(&b.trial_id))
            .then_with(|| a.channel.cmp(&b.channel))
    });
    let detections = trials
        .par_iter()
        .map(|t| {
            detector
                .detect(&t.signal)
                .map_err(|e| data(format!("trial {}: {e}", t.trial_id)))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let report = match &args.truth {
        None => None,
        Some(path) => {
            let f = File::open(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
            let records = read_truth(f).map_err(|e| data(format!("{}: {e}", path.display())))?;
            let truths = trials
                .iter()
                .map(|t| {
                    records
                        .iter()
                        .find(|r| r.trial_id == t.trial_id)
                        .map(|r| r.truth())
                        .ok_or_else(|| data(format!("no truth row for trial {}", t.trial_id)))
                })
                .collect::<CliResult<Vec<_>>>()?;
            Some(score(&detections, &truths, fs)?)
        }
    };

    let output = RunOutput {
        config_echo: detector.config().clone(),
        per_trial: trials
            .iter()
            .zip(&detections)
            .map(|(t, d)| TrialOutput::new(&t.trial_id, &t.channel, d, fs))
            .collect(),
        report,
    };
    let mut w = open_out(args.out.as_deref())?;
    w.write_all(output.to_json()?.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn synth(args: SynthArgs) -> CliResult<()> {
    let (positives, negatives) = match args.count {
        Some(n) => (n - n / 2, n / 2),
        None => (args.positives.unwrap_or(0), args.negatives.unwrap_or(0)),
    };
    let mut template = TemplateParams::default();
    if let Some(n1) = args.n1_latency {
        template = template.shifted_to(n1);
    }
    let base = TrialSpec {
        seed: args.seed,
        duration_ms: args.duration_ms,
        sampling_rate: args.rate,
        onset_ms: args.onset_ms,
        has_erp: true,
        snr_db: args.snr_db,
        template,
        alpha_power: args.alpha_power,
    };
    base.validate()?;
    if let Some([lo, hi]) = args.n1_range {
        for n1 in [lo, hi] {
            TrialSpec {
                template: base.template.shifted_to(n1),
                ..base.clone()
            }
            .validate()?;
        }
    }
    let corpus = make_corpus(&CorpusSpec {
        base: base.clone(),
        positives,
        negatives,
        n1_range_ms: args.n1_range,
        seed: args.seed,
    })?;

    let mut file = TrialFile::from_corpus(&corpus, &args.channel)?;
    file.sampling_rate = args.rate;
    write_trials(open_out(Some(&args.out))?, &file)?;

    let truth_path = args.truth_out.unwrap_or_else(|| {
        let stem = args.out.with_extension("");
        PathBuf::from(format!("{}.truth.csv", stem.display()))
    });
    write_truth(open_out(Some(&truth_path))?, &corpus)?;
    Ok(())
}

fn analyze(cmd: Analyze) -> CliResult<()> {
    match cmd {
        Analyze::GroupDelay { wavelet, n_freqs, out } => {
            let p = group_delay(&load_wavelet(&wavelet)?, n_freqs)?;
            let mut w = open_out(out.as_deref())?;
            writeln!(w, "omega,phase,group_delay,phase_delay")?;
            let cell = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
            for i in 0..p.omega.len() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    p.omega[i],
                    p.phase[i],
                    cell(p.group_delay[i]),
                    cell(p.phase_delay[i])
                )?;
            }
            w.flush()?;
        }
        Analyze::ScaleEnergy {
            input,
            wavelet,
            rate,
            scales,
            out,
        } => {
            let pipeline = PipelineArgs {
                configs: vec![],
                wavelet: None,
                rate,
                scale_band: None,
                c_tau: None,
            };
            let file = pipeline.trials(&input)?;
            let first = file.trials.first().ok_or_else(|| data("input has no trials"))?;
            let n = first.signal.len();
            if file.trials.iter().any(|t| t.signal.len() != n) {
                return Err(data("trials differ in length; cannot average"));
            }
            let mut mean = vec![0.0; n];
            for t in &file.trials {
                for (m, v) in mean.iter_mut().zip(&t.signal.samples) {
                    *m += v / file.trials.len() as f64;
                }
            }
            let spec = load_wavelet(&wavelet)?;
            let transform = Cwt::new(&spec, erpwave::wavelet::DEFAULT_ITERATIONS)?;
            let m = transform.transform(&Signal::new(mean, file.sampling_rate), &scale_grid(scales[0], scales[1], 1.0))?;
            let e = scale_energy(&m)?;
            let mut w = open_out(out.as_deref())?;
            writeln!(w, "scale,energy")?;
            for (s, v) in e.scales.iter().zip(&e.energy) {
                writeln!(w, "{s},{v}")?;
            }
            w.flush()?;
        }
        Analyze::Calibrate {
            input,
            truth,
            pipeline,
            out,
        } => {
            let config = pipeline.config()?;
            let file = pipeline.trials(&input)?;
            let keep: Option<Vec<String>> = match truth {
                None => None,
                Some(path) => {
                    let f = File::open(&path).map_err(|e| data(format!("{}: {e}", path.display())))?;
                    let records = read_truth(f).map_err(|e| data(format!("{}: {e}", path.display())))?;
                    Some(records.into_iter().filter(|r| r.has_erp).map(|r| r.trial_id).collect())
                }
            };
            let signals: Vec<Signal> = file
                .trials
                .into_iter()
                .filter(|t| keep.as_ref().map_or(true, |k| k.contains(&t.trial_id)))
                .map(|t| t.signal)
                .collect();
            let detector = Detector::new(config, file.sampling_rate)?;
            let calibration = calibrate_with(&detector, &signals).map_err(data)?;
            let mut w = open_out(out.as_deref())?;
            let mut json = serde_json::to_string_pretty(&calibration).map_err(data)?;
            json.push('\n');
            w.write_all(json.as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Detect(a) => detect(a),
        Command::Synth(a) => synth(a),
        Command::Analyze(a) => analyze(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
