//! `opmode`: synthesize, impair, channelize, featurize, train and evaluate.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "opmode", version, about = "Digital operating-mode synthesis and classification")]
struct Cli {
    /// Global seed; overrides the seed of a loaded configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Default base directory for generated data.
    #[arg(long, global = true, env = "OPMODE_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the operating modes and their parameterizations.
    Catalog {
        /// Only print the OMP and OM counts.
        #[arg(long)]
        counts: bool,
    },
    /// Synthesize one clean signal per class and write a manifest.
    Gen(GenArgs),
    /// Apply an impairment plan to an audio file.
    Augment(AugmentArgs),
    /// Upper-sideband modulate audio into a wideband I/Q capture.
    Txsim(TxsimArgs),
    /// Channelize a wideband I/Q capture and demodulate it to audio.
    Rx(RxArgs),
    /// Export the spectrogram of one audio window.
    Featurize(FeaturizeArgs),
    /// Train and evaluate one configuration into a run directory.
    Train(RunArgs),
    /// Evaluate a trained model on the files of a manifest.
    Eval(EvalArgs),
    /// Train the duration x FFT-length grid.
    Grid(GridArgs),
    /// Accuracy of a trained model over SNR.
    SnrSweep(SweepArgs),
    /// Train with augmentations removed one at a time.
    Ablate(AblateArgs),
    /// Re-emit result files from a results directory.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AudioKind {
    Wav,
    F32,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "train")]
    split: String,
    /// Seconds per class; defaults to the split's standard length.
    #[arg(long)]
    duration: Option<f64>,
    /// Comma-separated OMP labels; all 98 when omitted.
    #[arg(long, value_delimiter = ',')]
    classes: Vec<String>,
    /// Output directory; defaults to `<data-dir>/<split>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "wav")]
    format: AudioKind,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanKind {
    /// The fixed validation plan.
    Fixed,
    /// A plan sampled from the training ranges.
    Random,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "fixed")]
    plan: PlanKind,
    /// Saturate instead of failing when the result exceeds full scale.
    #[arg(long)]
    allow_clip: bool,
}

#[derive(Args)]
struct TxsimArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output capture (interleaved f32 I/Q); the sidecar goes to `<output>.json`.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    rate: u32,
    #[arg(long, default_value_t = 200_000.0)]
    offset: f64,
}

#[derive(Args)]
struct RxArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Cut start within the demodulated audio, in seconds.
    #[arg(long, default_value_t = 0.0)]
    start: f64,
    /// Cut length in seconds; to the end when omitted.
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    allow_clip: bool,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output stem; writes `<stem>.pgm` and `<stem>.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 128)]
    n_fft: usize,
    #[arg(long, default_value_t = 2.0)]
    duration: f64,
    /// Window start in seconds.
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Twenty classes, 60 s training audio, small CNN.
    Desk,
    /// All 98 classes with the reference split lengths and recipe.
    Full,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration (TOML); overrides `--preset`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
    /// Override the maximum number of epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Spread per-window work over all cores.
    #[arg(long)]
    fast: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    n_fft: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Run directory holding `weights.bin` and `model.json`.
    #[arg(long)]
    model: PathBuf,
    /// Manifest of test files.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    shift: f64,
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_windows: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [4.0, 3.0, 2.0, 1.0])]
    durations: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [256, 128, 64])]
    n_ffts: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2])]
    seeds: Vec<u64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Run directories; each gets its own curve.
    #[arg(long, required = true, num_args = 1..)]
    model: Vec<PathBuf>,
    /// Clean test files; synthesized from the first run's configuration when omitted.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snrs: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.5)]
    shift: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    max_windows: Option<usize>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
    /// Subset of rows, e.g. `with-all,no-noise`; all seven when omitted.
    #[arg(long, value_delimiter = ',')]
    rows: Vec<commands::Row>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Table,
    PlotData,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory containing report.json, grid.json, ablation.json or snr_curves.json.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: ReportKind,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
