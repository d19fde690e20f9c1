//! Command-line front end. Every subcommand resolves a [`RunConfig`] (config
//! file, then flags), calls the library, writes its outputs atomically and
//! leaves a `<output stem>.manifest.json` next to the main output.
//!
//! Exit codes: 0 success (including `--help`), 1 data or numeric error,
//! 2 usage error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::RunConfig;
use crate::dataset::Dataset;
use crate::density::SupportBounds;
use crate::detection::{detect_series_with, threshold_from_training, Tail};
use crate::divergence::{bhattacharyya, compare_densities, GaussianSummary, ProfileConfig};
use crate::entropy::{normalized_scores, EntropyPipeline, EstimateEnsemble};
use crate::error::Error;
use crate::evaluation::{
    convergence_sweep, median, qq_against_normal, replicate, roc_curve, sweep_csv, AnomalyExperiment,
};
use crate::ingest::{
    self, parse_raw, remove_local_means, synchronize, synthetic_session, MotionPipeline, SessionSpec,
};
use crate::io::{column_csv, read_column, read_dataset, sidecar_path, write_atomic, Manifest};
use crate::synthetic::{inject_anomalies, AnomalyKind, AnomalySpec, GeneratorSpec, MixtureSpec};

#[derive(Debug, Parser)]
#[command(name = "sensor-anomaly", version, about = "k-NN entropy and Bhattacharyya anomaly detection")]
struct Cli {
    /// Root seed for every random choice
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a synthetic dataset (or an RSSI session with --dist rssi)
    Generate(GenerateArgs),
    /// Contaminate a dataset and write the truth mask
    Inject(InjectArgs),
    /// k-NN density at the evaluation split
    Density(EstimateArgs),
    /// Plug-in and bias-corrected entropy
    Entropy(EstimateArgs),
    /// Threshold a score series against its training prefix
    Detect(DetectArgs),
    /// Windowed Bhattacharyya profile between two 1-D datasets
    Bhatt(CompareArgs),
    /// KL divergence of the test density from the normal density
    Kl(CompareArgs),
    /// ROC curve from scores and labels, or from a synthetic experiment
    Roc(RocArgs),
    /// Q-Q diagnostic against the standard normal
    Qq(QqArgs),
    /// Entropy convergence over increasing sample sizes
    Sweep(SweepArgs),
    /// Synchronize and detrend a raw RSSI log, optionally detect motion
    Ingest(IngestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistKind {
    Gaussian,
    Beta,
    Mixture,
    Rssi,
}

#[derive(Debug, Args)]
struct DistArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    dist: DistKind,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Gaussian mean (every axis)
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    /// Gaussian variance
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// First Beta shape parameter
    #[arg(long, default_value_t = 4.0)]
    beta_a: f64,
    /// Second Beta shape parameter
    #[arg(long, default_value_t = 4.0)]
    beta_b: f64,
    /// Mixture weight of the Beta component
    #[arg(long, default_value_t = 0.8)]
    p: f64,
}

impl DistArgs {
    fn spec(&self) -> Result<GeneratorSpec, CliError> {
        Ok(match self.dist {
            DistKind::Gaussian => GeneratorSpec::gaussian(self.dim, self.mu, self.sigma2),
            DistKind::Beta => GeneratorSpec::beta(self.dim, self.beta_a, self.beta_b),
            DistKind::Mixture => GeneratorSpec::mixture(
                self.dim,
                MixtureSpec {
                    p: self.p,
                    beta_alpha: self.beta_a,
                    beta_beta: self.beta_b,
                },
            ),
            DistKind::Rssi => return Err(CliError::Usage("--dist rssi is only valid for generate".into())),
        })
    }
}

#[derive(Debug, Args)]
struct EstimatorArgs {
    /// Neighbour rank (default ceil(sqrt(M)))
    #[arg(long)]
    k: Option<usize>,
    /// Fraction of points in the evaluation set
    #[arg(long)]
    split: Option<f64>,
    /// Support bounds LO,HI on every axis; enables boundary correction
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    bounds: Option<Vec<f64>>,
    /// Normalize the density to unit integral (default: on for 1-D data)
    #[arg(long)]
    renormalize: Option<bool>,
}

impl EstimatorArgs {
    fn apply(&self, config: &mut RunConfig) {
        if self.k.is_some() {
            config.k = self.k;
        }
        if let Some(s) = self.split {
            config.split_fraction = s;
        }
    }

    fn pipeline(&self, config: &RunConfig, dim: usize) -> Result<EntropyPipeline, CliError> {
        let bounds = match &self.bounds {
            None => None,
            Some(b) if b.len() == 2 => Some(SupportBounds::new(vec![b[0]; dim], vec![b[1]; dim])?),
            Some(_) => return Err(CliError::Usage("--bounds takes LO,HI".into())),
        };
        Ok(EntropyPipeline {
            split_fraction: config.split_fraction,
            k: config.k,
            bounds,
            renormalize: self.renormalize,
            grid_len: None,
        })
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Sensors in an RSSI session
    #[arg(long, default_value_t = 14)]
    sensors: u32,
    /// Time instants in an RSSI session
    #[arg(long, default_value_t = 200)]
    instants: usize,
    /// Main output file (default: a fixed name under output_dir)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InjectArgs {
    /// Dataset CSV, one point per row
    #[arg(long)]
    data: PathBuf,
    /// extreme, missing, constant_increment, variable_increment, repetition or subtle_shift
    #[arg(long, default_value = "extreme")]
    kind: String,
    #[arg(long, default_value_t = 0.05)]
    fraction: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    magnitude: f64,
    /// Main output file (default: a fixed name under output_dir)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Dataset CSV, one point per row
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Main output file (default: a fixed name under output_dir)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TailArg {
    Upper,
    Both,
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Score series CSV
    #[arg(long)]
    scores: PathBuf,
    /// Score column name (default: first column)
    #[arg(long)]
    column: Option<String>,
    /// Leading rows that form the normal period
    #[arg(long)]
    train: usize,
    #[arg(long)]
    alpha: Option<f64>,
    /// 0/1 truth for the rows after the training prefix
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "upper")]
    tail: TailArg,
    /// Main output file (default: a fixed name under output_dir)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Normal-condition 1-D dataset CSV
    #[arg(long)]
    normal: PathBuf,
    /// Test 1-D dataset CSV
    #[arg(long)]
    test: PathBuf,
    /// Window length in grid points (default: k)
    #[arg(long)]
    window: Option<usize>,
    /// Window stride (default: window length)
    #[arg(long)]
    stride: Option<usize>,
    /// Grid points over the union range (default: larger dataset size)
    #[arg(long)]
    grid: Option<usize>,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Main output file (default: a fixed name under output_dir)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RocArgs {
    /// Score CSV; with --labels, skips the synthetic experiment
    #[arg(long, requires = "labels")]
    scores: Option<PathBuf>,
    /// 0/1 label CSV
    #[arg(long, requires = "scores")]
    labels: Option<PathBuf>,
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, default_value_t = 100)]
    instants: usize,
    #[arg(long, default_value_t = 20)]
    anomalous: usize,
    /// Points per instant
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, default_value_t = 0.05)]
    fraction: f64,
    #[arg(long, default_value_t = 10.0)]
    magnitude: f64,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Main output file (default: a fixed name under output_dir)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct QqArgs {
    /// Sample CSV; without it, normalized entropy estimates are simulated
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    column: Option<String>,
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    realizations: usize,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Main output file (default: a fixed name under output_dir)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, value_delimiter = ',', default_value = "400,2000,10000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    realizations: usize,
    /// Reference value for the truth column (default: the distribution's entropy)
    #[arg(long, allow_hyphen_values = true)]
    truth: Option<f64>,
    #[command(flatten)]
    est: EstimatorArgs,
    /// Main output file (default: a fixed name under output_dir)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Raw CSV with header time,tx,rx,rssi
    #[arg(long)]
    raw: PathBuf,
    /// Grid spacing in seconds
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    /// Local-mean window in instants (odd)
    #[arg(long, default_value_t = ingest::DEFAULT_WINDOW)]
    window: usize,
    /// Write the synchronized matrix without removing local means
    #[arg(long)]
    no_detrend: bool,
    /// Run per-instant entropy detection after preprocessing
    #[arg(long)]
    detect: bool,
    /// 0/1 truth series for the whole session
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Last instant of the normal period
    #[arg(long, default_value_t = ingest::DEFAULT_BOUNDARY)]
    boundary: usize,
    /// Offset of the test period into the truth series
    #[arg(long)]
    offset: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Neighbour rank for the per-instant entropy
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Main output file (default: a fixed name under output_dir)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, &argv)),
            Err(e) => Err(CliError::Usage(e.to_string())),
        },
        None => dispatch(&cli, &argv),
    };
    match outcome {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let mut ctx = Context {
        argv: argv.to_vec(),
        config,
    };
    match &cli.command {
        Command::Generate(a) => cmd_generate(&mut ctx, a),
        Command::Inject(a) => cmd_inject(&mut ctx, a),
        Command::Density(a) => cmd_density(&mut ctx, a),
        Command::Entropy(a) => cmd_entropy(&mut ctx, a),
        Command::Detect(a) => cmd_detect(&mut ctx, a),
        Command::Bhatt(a) => cmd_bhatt(&mut ctx, a),
        Command::Kl(a) => cmd_kl(&mut ctx, a),
        Command::Roc(a) => cmd_roc(&mut ctx, a),
        Command::Qq(a) => cmd_qq(&mut ctx, a),
        Command::Sweep(a) => cmd_sweep(&mut ctx, a),
        Command::Ingest(a) => cmd_ingest(&mut ctx, a),
    }
}

struct Context {
    argv: Vec<String>,
    config: RunConfig,
}

impl Context {
    fn validate(&self) -> Result<(), CliError> {
        self.config.validate().map_err(|e| CliError::Usage(e.to_string()))
    }

    fn output(&self, given: &Option<PathBuf>, default_name: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.config.output_dir.join(default_name))
    }

    /// Writes every `(path, contents)` pair, then the manifest next to the first.
    fn finish(&self, command: &str, params: serde_json::Value, files: Vec<(PathBuf, String)>) -> Result<(), CliError> {
        let mut manifest = Manifest::new(command, &self.argv, &self.config, params);
        for (path, contents) in &files {
            write_atomic(path, contents.as_bytes())?;
            manifest.outputs.push(path.clone());
        }
        let main = &files.first().expect("every command writes an output").0;
        manifest.write(&sidecar_path(main, "manifest.json"))?;
        Ok(())
    }
}

fn to_json(value: &impl serde::Serialize) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value).map_err(Error::from)?)
}

fn cmd_generate(ctx: &mut Context, a: &GenerateArgs) -> Result<(), CliError> {
    ctx.validate()?;
    let seed = ctx.config.seed;
    if a.dist.dist == DistKind::Rssi {
        let spec = SessionSpec {
            sensors: a.sensors,
            instants: a.instants,
            motion_start: a.instants * 3 / 5,
            motion_end: a.instants * 7 / 10,
            ..SessionSpec::default()
        };
        let session = synthetic_session(&spec, seed)?;
        let raw = ctx.output(&a.output, "raw.csv");
        let truth = sidecar_path(&raw, "truth.csv");
        let params = json!({ "dist": "rssi", "session": spec });
        return ctx.finish(
            "generate",
            params,
            vec![
                (raw, ingest::raw_to_csv_string(&session.records)),
                (truth, ingest::truth_to_csv_string(&session.truth)),
            ],
        );
    }
    let spec = a.dist.spec()?;
    let data = spec.generate(a.n, seed)?;
    let out = ctx.output(&a.output, "data.csv");
    let params = json!({ "generator": spec, "n": a.n, "seed": seed });
    ctx.finish("generate", params, vec![(out, data.to_csv_string(true))])
}

fn cmd_inject(ctx: &mut Context, a: &InjectArgs) -> Result<(), CliError> {
    ctx.validate()?;
    let kind: AnomalyKind = a.kind.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let spec = AnomalySpec {
        kind,
        fraction: a.fraction,
        magnitude: a.magnitude,
        seed: ctx.config.seed,
    };
    let data = read_dataset(&a.data)?;
    let (out_data, truth) = inject_anomalies(&data, &spec)?;
    let out = ctx.output(&a.output, "injected.csv");
    let truth_path = sidecar_path(&out, "truth.csv");
    let params = json!({ "input": a.data, "anomaly": spec });
    ctx.finish(
        "inject",
        params,
        vec![
            (out, out_data.to_csv_string(true)),
            (truth_path, ingest::truth_to_csv_string(&truth)),
        ],
    )
}

fn cmd_density(ctx: &mut Context, a: &EstimateArgs) -> Result<(), CliError> {
    a.est.apply(&mut ctx.config);
    ctx.validate()?;
    let data = read_dataset(&a.data)?;
    let pipeline = a.est.pipeline(&ctx.config, data.dim())?;
    let out = pipeline.run(&data, ctx.config.seed)?;
    let path = ctx.output(&a.output, "density.csv");
    let meta = json!({ "meta": out.density.meta(), "normalizer": out.normalizer });
    let params = json!({ "input": a.data, "pipeline": pipeline });
    ctx.finish(
        "density",
        params,
        vec![
            (path.clone(), out.density.to_csv_string()),
            (sidecar_path(&path, "json"), to_json(&meta)?),
        ],
    )
}

fn cmd_entropy(ctx: &mut Context, a: &EstimateArgs) -> Result<(), CliError> {
    a.est.apply(&mut ctx.config);
    ctx.validate()?;
    let data = read_dataset(&a.data)?;
    let pipeline = a.est.pipeline(&ctx.config, data.dim())?;
    let out = pipeline.run(&data, ctx.config.seed)?;
    let result = json!({
        "plug_in": out.plug_in.value,
        "corrected": out.corrected.value,
        "k": out.plug_in.k,
        "n_eval": out.plug_in.n_eval,
        "m_ref": out.plug_in.m_ref,
        "renormalized": out.plug_in.renormalized,
        "normalizer": out.normalizer,
    });
    let text = to_json(&result)?;
    println!("{text}");
    let path = ctx.output(&a.output, "entropy.json");
    let params = json!({ "input": a.data, "pipeline": pipeline });
    ctx.finish("entropy", params, vec![(path, text)])
}

fn cmd_detect(ctx: &mut Context, a: &DetectArgs) -> Result<(), CliError> {
    if let Some(alpha) = a.alpha {
        ctx.config.alpha = alpha;
    }
    ctx.validate()?;
    let scores = read_column(&a.scores, a.column.as_deref())?;
    if a.train < 2 || a.train >= scores.len() {
        return Err(CliError::Usage(format!(
            "--train {} must leave at least 2 training and 1 test rows of {}",
            a.train,
            scores.len()
        )));
    }
    let (train, test) = scores.split_at(a.train);
    let threshold = threshold_from_training(train, ctx.config.alpha)?;
    let truth = a.truth.as_deref().map(ingest::read_truth_csv).transpose()?;
    let tail = match a.tail {
        TailArg::Upper => Tail::Upper,
        TailArg::Both => Tail::Both,
    };
    let mut report = detect_series_with(test, &threshold, truth.as_deref(), tail)?;
    report.indices = (a.train..scores.len()).collect();
    let path = ctx.output(&a.output, "detections.csv");
    let summary = json!({
        "threshold": threshold,
        "flagged": report.flagged().collect::<Vec<_>>(),
        "rates": report.rates().map(|(fa, det)| json!({ "false_alarm": fa, "detection": det })),
    });
    let params = json!({ "scores": a.scores, "column": a.column, "train": a.train, "tail": format!("{:?}", a.tail) });
    ctx.finish(
        "detect",
        params,
        vec![
            (path.clone(), report.to_csv_string()),
            (sidecar_path(&path, "json"), to_json(&summary)?),
        ],
    )
}

fn compare_config(ctx: &mut Context, a: &CompareArgs) -> Result<(Dataset, Dataset, ProfileConfig), CliError> {
    a.est.apply(&mut ctx.config);
    if a.window.is_some() {
        ctx.config.window_len = a.window;
    }
    if a.grid.is_some() {
        ctx.config.grid_size = a.grid;
    }
    ctx.validate()?;
    let normal = read_dataset(&a.normal)?;
    let test = read_dataset(&a.test)?;
    let mut pipeline = a.est.pipeline(&ctx.config, 1)?;
    pipeline.renormalize = Some(a.est.renormalize.unwrap_or(true));
    let config = ProfileConfig {
        pipeline,
        window_len: ctx.config.window_len,
        stride: a.stride,
        grid_len: ctx.config.grid_size,
    };
    Ok((normal, test, config))
}

fn cmd_bhatt(ctx: &mut Context, a: &CompareArgs) -> Result<(), CliError> {
    let (normal, test, config) = compare_config(ctx, a)?;
    let cmp = compare_densities(&normal, &test, &config, ctx.config.seed)?;
    let whole = bhattacharyya(&GaussianSummary::from_dataset(&normal)?, &GaussianSummary::from_dataset(&test)?)?;
    let profile = &cmp.profile;
    let summary = json!({
        "window_len": profile.window_len,
        "stride": profile.stride,
        "grid_size": profile.grid_size,
        "grid_min": cmp.grid.first(),
        "grid_max": cmp.grid.last(),
        "floor_hits": profile.floor_hits,
        "windows": profile.len(),
        "max_distance": profile.max_distance(),
        "median_distance": median(&profile.distances),
        "whole_set_distance": whole,
    });
    let path = ctx.output(&a.output, "profile.csv");
    let params = json!({ "normal": a.normal, "test": a.test, "profile": config });
    ctx.finish(
        "bhatt",
        params,
        vec![
            (path.clone(), profile.to_csv_string()),
            (sidecar_path(&path, "json"), to_json(&summary)?),
        ],
    )
}

fn cmd_kl(ctx: &mut Context, a: &CompareArgs) -> Result<(), CliError> {
    let (normal, test, config) = compare_config(ctx, a)?;
    let cmp = compare_densities(&normal, &test, &config, ctx.config.seed)?;
    let kl = cmp.kl_test_normal()?;
    let text = to_json(&json!({
        "kl": kl.value,
        "floored": kl.floored,
        "floored_contribution": kl.floored_contribution,
        "grid_size": cmp.grid.len(),
    }))?;
    println!("{text}");
    let path = ctx.output(&a.output, "kl.json");
    let params = json!({ "normal": a.normal, "test": a.test, "profile": config });
    ctx.finish("kl", params, vec![(path, text)])
}

fn cmd_roc(ctx: &mut Context, a: &RocArgs) -> Result<(), CliError> {
    a.est.apply(&mut ctx.config);
    ctx.validate()?;
    let path = ctx.output(&a.output, "roc.csv");
    let (roc, params, extra) = match (&a.scores, &a.labels) {
        (Some(scores), Some(labels)) => {
            let s = read_column(scores, None)?;
            let l = ingest::read_truth_csv(labels)?;
            (roc_curve(&s, &l)?, json!({ "scores": scores, "labels": labels }), None)
        }
        _ => {
            let generator = a.dist.spec()?;
            let experiment = AnomalyExperiment {
                generator,
                pipeline: a.est.pipeline(&ctx.config, generator.dim)?,
                instants: a.instants,
                anomalous_instants: a.anomalous,
                points_per_instant: a.points,
                anomaly: AnomalySpec {
                    fraction: a.fraction,
                    magnitude: a.magnitude,
                    ..AnomalySpec::default()
                },
            };
            let out = experiment.run(ctx.config.seed)?;
            let mut rows = String::from("instant,score,label\n");
            for (t, (s, l)) in out.scores.iter().zip(&out.labels).enumerate() {
                rows.push_str(&format!("{t},{s},{}\n", u8::from(*l)));
            }
            (out.roc, json!({ "experiment": experiment }), Some(rows))
        }
    };
    let text = to_json(&json!({ "auc": roc.auc }))?;
    println!("{text}");
    let mut files = vec![(path.clone(), roc.to_csv_string()), (sidecar_path(&path, "json"), text)];
    if let Some(rows) = extra {
        files.push((sidecar_path(&path, "scores.csv"), rows));
    }
    ctx.finish("roc", params, files)
}

fn cmd_qq(ctx: &mut Context, a: &QqArgs) -> Result<(), CliError> {
    a.est.apply(&mut ctx.config);
    ctx.validate()?;
    let (samples, params) = match &a.samples {
        Some(path) => (read_column(path, a.column.as_deref())?, json!({ "samples": path })),
        None => {
            let generator = a.dist.spec()?;
            let pipeline = a.est.pipeline(&ctx.config, generator.dim)?;
            let reps = replicate(&generator, &pipeline, a.n, a.realizations, ctx.config.seed)?;
            let ensemble = EstimateEnsemble::new(reps.plug_in)?;
            let params = json!({ "generator": generator, "pipeline": pipeline, "n": a.n, "realizations": a.realizations });
            (normalized_scores(&ensemble)?, params)
        }
    };
    let qq = qq_against_normal(&samples)?;
    let text = to_json(&json!({ "correlation": qq.correlation, "n": samples.len() }))?;
    println!("{text}");
    let path = ctx.output(&a.output, "qq.csv");
    ctx.finish("qq", params, vec![(path.clone(), qq.to_csv_string()), (sidecar_path(&path, "json"), text)])
}

fn cmd_sweep(ctx: &mut Context, a: &SweepArgs) -> Result<(), CliError> {
    a.est.apply(&mut ctx.config);
    ctx.validate()?;
    let generator = a.dist.spec()?;
    let pipeline = a.est.pipeline(&ctx.config, generator.dim)?;
    let rows = convergence_sweep(&generator, &pipeline, &a.sizes, a.realizations, a.truth, ctx.config.seed)?;
    let path = ctx.output(&a.output, "sweep.csv");
    let params = json!({ "generator": generator, "pipeline": pipeline, "sizes": a.sizes, "realizations": a.realizations });
    ctx.finish(
        "sweep",
        params,
        vec![(path.clone(), sweep_csv(&rows)), (sidecar_path(&path, "json"), to_json(&rows)?)],
    )
}

/// Grid from the first to the last record time, both rounded to the step.
fn session_grid(records: &[ingest::RawRecord], step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) {
        return Err(CliError::Usage("--step must be positive".into()));
    }
    let (lo, hi) = records
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.time), hi.max(r.time)));
    if records.is_empty() {
        return Err(Error::EmptyDataset.into());
    }
    let (first, last) = ((lo / step).round() as i64, (hi / step).round() as i64);
    Ok((first..=last).map(|i| i as f64 * step).collect())
}

fn cmd_ingest(ctx: &mut Context, a: &IngestArgs) -> Result<(), CliError> {
    if let Some(alpha) = a.alpha {
        ctx.config.alpha = alpha;
    }
    ctx.config.k = Some(a.k);
    ctx.validate()?;
    let records = parse_raw(&a.raw)?;
    let grid = session_grid(&records, a.step)?;
    let synced = synchronize(&records, &grid)?;
    let (matrix, window) = if a.no_detrend {
        (synced.clone(), None)
    } else {
        (remove_local_means(&synced, a.window)?, Some(a.window))
    };
    let path = ctx.output(&a.output, "matrix.csv");
    let mut files = vec![
        (path.clone(), matrix.to_csv_string()),
        (sidecar_path(&path, "json"), to_json(&matrix.manifest(window))?),
    ];
    let mut params = json!({ "raw": a.raw, "step": a.step, "window": window });
    if a.detect {
        let pipeline = MotionPipeline {
            window: a.window,
            boundary: a.boundary,
            truth_offset: a.offset.unwrap_or(a.boundary),
            alpha: ctx.config.alpha,
            entropy: EntropyPipeline {
                k: Some(a.k),
                split_fraction: ctx.config.split_fraction,
                renormalize: Some(true),
                ..EntropyPipeline::default()
            },
        };
        let truth = a.truth.as_deref().map(ingest::read_truth_csv).transpose()?;
        let out = pipeline.run(&synced, truth.as_deref(), ctx.config.seed)?;
        let summary = json!({
            "threshold": out.report.threshold,
            "flagged": out.report.flagged().collect::<Vec<_>>(),
            "rates": out.report.rates().map(|(fa, det)| json!({ "false_alarm": fa, "detection": det })),
            "training_qq_correlation": qq_against_normal(&out.training_scores).ok().map(|q| q.correlation),
        });
        files.push((sidecar_path(&path, "detections.csv"), out.report.to_csv_string()));
        files.push((sidecar_path(&path, "entropy.csv"), column_csv("entropy", &out.entropy)));
        files.push((sidecar_path(&path, "detections.json"), to_json(&summary)?));
        params["motion"] = json!(pipeline);
        params["truth"] = json!(a.truth);
    }
    ctx.finish("ingest", params, files)
}
