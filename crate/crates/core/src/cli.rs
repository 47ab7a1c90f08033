//! Command-line front end. Each subcommand resolves its settings from
//! defaults, an optional `key=value` config file, `--set key=value`
//! overrides and explicit flags (later sources win), writes the resolved
//! settings next to its outputs and maps failures to one-line errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::datagen::{
    collect_training_set_datcol, gen_training_set, load_training_set, save_training_set, ChannelParams,
    Extractor,
};
use crate::elm::{init_model, load_model, save_model, train, InputKind, HIDDEN_FACTOR};
use crate::error::{Error, Result};
use crate::harness::{
    self, run_experiment, sweep_snr, CfoSpec, Estimator, ExperimentConfig, Method, Preset, PresetOptions,
};
use crate::labels::{LabelKind, LabelStrategy};
use crate::rng::{label_tag, stream_rng};
use crate::signal::OfdmConfig;

/// Exit code for bad configuration or missing inputs.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for failures while running.
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "syncforge", version, about = "ELM-based OFDM timing synchronization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// Flat key=value settings file (keys are the long flag names, '-' or '_').
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a setting, e.g. --set seed=3 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or collect a training set.
    Gen(GenArgs),
    /// Fit an ELM to a training set.
    Train(TrainArgs),
    /// Sweep P_e over SNR for a trained model or a classic baseline.
    Eval(EvalArgs),
    /// Run a figure preset (fig2a, fig2b, fig3, fig4, fig5, fig6, fig7, table3).
    Experiment(ExperimentArgs),
    /// Storage and bandwidth table for collected versus generated data.
    Table3(Table3Args),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// onehot | midpoint | region | lc | fc | datcol
    #[arg(long)]
    pub strategy: Option<String>,
    /// Loose bound (lc, fc).
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Cyclic-prefix length.
    #[arg(long = "Lc")]
    pub lc: Option<usize>,
    /// Subcarriers per symbol.
    #[arg(long = "N")]
    pub n_sub: Option<usize>,
    /// Number of training samples.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// sc | minn | raw
    #[arg(long)]
    pub extractor: Option<String>,
    /// Channel delay for onehot, midpoint, region and datcol.
    #[arg(long)]
    pub tau_p_train: Option<usize>,
    /// Power-delay-profile decay factor.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Collection SNR in dB (datcol).
    #[arg(long)]
    pub snr: Option<f64>,
    /// Output dataset path; metadata goes to <out>.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset written by `gen`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Seed for the hidden-layer weights.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tikhonov term added to the Gram matrix (0 = plain pseudoinverse).
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Hidden width as a multiple of K.
    #[arg(long)]
    pub hidden_factor: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model written by `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Classic argmax baseline instead of a model: sc | minn.
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long = "N")]
    pub n_sub: Option<usize>,
    #[arg(long = "Lc")]
    pub lc: Option<usize>,
    /// Feature extractor for metric-input models: sc | minn.
    #[arg(long)]
    pub extractor: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated SNR grid in dB.
    #[arg(long)]
    pub snr_grid: Option<String>,
    #[arg(long)]
    pub tau_p_test: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Test CFO drawn uniformly from [-cfo_max, cfo_max] (0 = none).
    #[arg(long)]
    pub cfo_max: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// fig2a | fig2b | fig3 | fig4 | fig5 | fig6 | fig7 | table3
    pub preset: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo trials per SNR point.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Training-set size.
    #[arg(long)]
    pub nt: Option<usize>,
    /// Train on 1e5 samples instead of the desk-scale default.
    #[arg(long)]
    pub full_scale: bool,
    #[arg(long)]
    pub snr_grid: Option<String>,
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long)]
    pub cfo_max: Option<f64>,
    /// Link rate for the bandwidth column (table3).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Output directory (default out/<preset>).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Table3Args {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub full_scale: bool,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

/// Settings after merging every source, keyed by normalized flag name.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize_key(k: &str) -> String {
    k.trim().trim_start_matches("--").replace('-', "_")
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

impl Settings {
    /// Merges `defaults`, then the config file, then `--set`, then flags.
    fn resolve(
        allowed: &[(&str, Option<String>)],
        defaults: &[(&str, &str)],
        common: &Common,
    ) -> Result<Self> {
        let known: Vec<&str> = allowed.iter().map(|(k, _)| *k).collect();
        let check = |key: &str, origin: &str| -> Result<String> {
            let key = normalize_key(key);
            if known.contains(&key.as_str()) {
                Ok(key)
            } else {
                Err(bad(format!("unknown setting {key:?} in {origin}; known keys: {}", known.join(", "))))
            }
        };
        let mut values = BTreeMap::new();
        for (k, v) in defaults {
            values.insert((*k).to_string(), (*v).to_string());
        }
        if let Some(path) = &common.config {
            let text = fs::read_to_string(path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => bad(format!("config file not found: {}", path.display())),
                _ => Error::Io(e),
            })?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    bad(format!("{}:{}: expected key=value", path.display(), lineno + 1))
                })?;
                let key = check(k, &format!("{}:{}", path.display(), lineno + 1))?;
                values.insert(key, v.trim().to_string());
            }
        }
        for item in &common.set {
            let (k, v) = item.split_once('=').ok_or_else(|| bad(format!("--set expects KEY=VALUE, got {item:?}")))?;
            let key = check(k, "--set")?;
            values.insert(key, v.trim().to_string());
        }
        for (k, v) in allowed {
            if let Some(v) = v {
                values.insert((*k).to_string(), v.clone());
            }
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        let raw = self.raw(key).ok_or_else(|| bad(format!("missing required setting {key}")))?;
        raw.parse::<T>().map_err(|e| bad(format!("setting {key}={raw:?}: {e}")))
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(_) => self.get(key).map(Some),
        }
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(bad(format!("setting {key}={v:?}: expected true or false"))),
        }
    }

    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

fn p(v: &Option<PathBuf>) -> Option<String> {
    v.as_ref().map(|p| p.display().to_string())
}

fn parse_extractor(s: &str) -> Result<Extractor> {
    match s {
        "sc" => Ok(Extractor::Sc),
        "minn" => Ok(Extractor::Minn),
        "raw" => Ok(Extractor::RawSamples),
        other => Err(bad(format!("unknown extractor {other:?}; expected sc, minn or raw"))),
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let grid = s
        .split(',')
        .map(|v| {
            let v = v.trim();
            match v {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => v.parse::<f64>().map_err(|e| bad(format!("SNR grid entry {v:?}: {e}"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if grid.is_empty() {
        return Err(bad("SNR grid is empty"));
    }
    Ok(grid)
}

fn format_grid(grid: &[f64]) -> String {
    grid.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn cfo_spec(max: f64) -> Result<CfoSpec> {
    if !(max >= 0.0 && max.is_finite()) {
        return Err(bad(format!("cfo_max must be finite and >= 0, got {max}")));
    }
    Ok(if max == 0.0 { CfoSpec::default() } else { CfoSpec::Uniform { max } })
}

fn write_resolved(path: &Path, settings: &Settings) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, settings.to_text())?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<Vec<PathBuf>> {
    let allowed = [
        ("strategy", a.strategy.clone()),
        ("L", s(&a.l)),
        ("Lc", s(&a.lc)),
        ("N", s(&a.n_sub)),
        ("n", s(&a.n)),
        ("seed", s(&a.seed)),
        ("extractor", a.extractor.clone()),
        ("tau_p_train", s(&a.tau_p_train)),
        ("eta", s(&a.eta)),
        ("snr", s(&a.snr)),
        ("out", p(&a.out)),
    ];
    let defaults = [
        ("strategy", "fc"),
        ("Lc", "32"),
        ("N", "128"),
        ("n", "20000"),
        ("seed", "0"),
        ("extractor", "sc"),
        ("tau_p_train", "20"),
        ("eta", "0.2"),
        ("snr", "20"),
        ("out", "dataset.bin"),
    ];
    let st = Settings::resolve(&allowed, &defaults, &a.common)?;
    let cfg = OfdmConfig::new(st.get("N")?, st.get("Lc")?)?;
    let strategy_name: String = st.get("strategy")?;
    let l: Option<usize> = st.opt("L")?;
    let need_l = || l.ok_or_else(|| bad(format!("strategy {strategy_name} needs --L")));
    let channel = ChannelParams { tau_p_train: st.get("tau_p_train")?, eta: st.get("eta")? };
    let n: usize = st.get("n")?;
    let seed: u64 = st.get("seed")?;
    let extractor = parse_extractor(&st.get::<String>("extractor")?)?;
    let out: PathBuf = st.get("out")?;

    let set = match strategy_name.as_str() {
        "datcol" => {
            if extractor != Extractor::Sc {
                return Err(bad("datcol collects S&C features only"));
            }
            collect_training_set_datcol(&cfg, &channel, n, st.get("snr")?, seed)?.0
        }
        other => {
            let strategy = match other {
                "onehot" => LabelStrategy::fixed(LabelKind::OneHot)?,
                "midpoint" => LabelStrategy::fixed(LabelKind::Midpoint)?,
                "region" => LabelStrategy::fixed(LabelKind::Region)?,
                "lc" => LabelStrategy::loose(need_l()?, &cfg)?,
                "fc" => LabelStrategy::flexible(need_l()?, &cfg)?,
                _ => {
                    return Err(bad(format!(
                        "unknown strategy {other:?}; expected onehot, midpoint, region, lc, fc or datcol"
                    )))
                }
            };
            gen_training_set(&strategy, &cfg, &channel, n, extractor, seed)?
        }
    };
    ensure_parent(&out)?;
    save_training_set(&set, &out)?;
    let resolved = with_suffix(&out, ".resolved.txt");
    write_resolved(&resolved, &st)?;
    Ok(vec![out.clone(), crate::datagen::sidecar_path(&out), resolved])
}

fn cmd_train(a: &TrainArgs) -> Result<Vec<PathBuf>> {
    let allowed = [
        ("data", p(&a.data)),
        ("seed", s(&a.seed)),
        ("ridge", s(&a.ridge)),
        ("hidden_factor", s(&a.hidden_factor)),
        ("out", p(&a.out)),
    ];
    let hf = HIDDEN_FACTOR.to_string();
    let defaults = [("seed", "0"), ("ridge", "0"), ("hidden_factor", hf.as_str()), ("out", "model.elm")];
    let st = Settings::resolve(&allowed, &defaults, &a.common)?;
    let data: PathBuf = st.get("data").map_err(|_| bad("train needs --data"))?;
    let set = load_training_set(&data).map_err(|e| match e {
        Error::NotFound(p) => bad(format!("dataset not found: {}", p.display())),
        other => other,
    })?;
    let k = set.label_dim;
    let hidden_factor: usize = st.get("hidden_factor")?;
    if hidden_factor == 0 {
        return Err(bad("hidden_factor must be positive"));
    }
    let kind = harness::input_kind(set.header.extractor);
    let mut model = init_model(k, hidden_factor * k, kind, &mut stream_rng(st.get("seed")?, &[label_tag("init")]))?;
    if model.input_dim != set.input_dim {
        return Err(Error::Format(format!(
            "dataset feature width {} does not match {:?} input for K={k}",
            set.input_dim, kind
        )));
    }
    train(&mut model, &set.features, &set.labels, set.len(), st.get("ridge")?)?;
    let out: PathBuf = st.get("out")?;
    ensure_parent(&out)?;
    save_model(&model, &out)?;
    let resolved = with_suffix(&out, ".resolved.txt");
    write_resolved(&resolved, &st)?;
    Ok(vec![out, resolved])
}

fn cmd_eval(a: &EvalArgs) -> Result<Vec<PathBuf>> {
    let allowed = [
        ("model", p(&a.model)),
        ("baseline", a.baseline.clone()),
        ("N", s(&a.n_sub)),
        ("Lc", s(&a.lc)),
        ("extractor", a.extractor.clone()),
        ("trials", s(&a.trials)),
        ("snr_grid", a.snr_grid.clone()),
        ("tau_p_test", s(&a.tau_p_test)),
        ("eta", s(&a.eta)),
        ("seed", s(&a.seed)),
        ("cfo_max", s(&a.cfo_max)),
        ("out", p(&a.out)),
    ];
    let grid = format_grid(&harness::default_snr_grid());
    let defaults = [
        ("N", "128"),
        ("Lc", "32"),
        ("extractor", "sc"),
        ("trials", "10000"),
        ("snr_grid", grid.as_str()),
        ("tau_p_test", "20"),
        ("eta", "0.2"),
        ("seed", "0"),
        ("cfo_max", "0"),
        ("out", "eval.csv"),
    ];
    let st = Settings::resolve(&allowed, &defaults, &a.common)?;
    let cfg = OfdmConfig::new(st.get("N")?, st.get("Lc")?)?;
    let model_path: Option<PathBuf> = st.opt("model")?;
    let baseline: Option<String> = st.opt("baseline")?;
    let mut exp = ExperimentConfig {
        cfg,
        snr_grid_db: parse_grid(&st.get::<String>("snr_grid")?)?,
        trials_per_point: st.get("trials")?,
        tau_p_test: st.get("tau_p_test")?,
        eta: st.get("eta")?,
        seed: st.get("seed")?,
        test_cfo: cfo_spec(st.get("cfo_max")?)?,
        ..ExperimentConfig::default()
    };
    let model;
    let (name, estimator) = match (&model_path, &baseline) {
        (Some(_), Some(_)) => return Err(bad("give either --model or --baseline, not both")),
        (None, None) => return Err(bad("eval needs --model or --baseline")),
        (None, Some(b)) => {
            exp.extractor = parse_extractor(b)?;
            if exp.extractor == Extractor::RawSamples {
                return Err(bad("baseline must be sc or minn"));
            }
            exp.method = Method::ClassicArgmax;
            (format!("corr_{b}"), Estimator::Classic)
        }
        (Some(path), None) => {
            model = load_model(path).map_err(|e| match e {
                Error::NotFound(p) => bad(format!("model not found: {}", p.display())),
                other => other,
            })?;
            exp.extractor = match model.input_kind {
                InputKind::Raw => Extractor::RawSamples,
                InputKind::Metric => parse_extractor(&st.get::<String>("extractor")?)?,
            };
            if model.k != cfg.metric_len() {
                return Err(bad(format!(
                    "model has K={} but N={} and Lc={} give K={}",
                    model.k,
                    cfg.n,
                    cfg.cp_len,
                    cfg.metric_len()
                )));
            }
            exp.method = Method::Elm;
            ("elm".to_string(), Estimator::Elm(&model))
        }
    };
    let sweep = sweep_snr(&name, &exp, estimator)?;
    let out: PathBuf = st.get("out")?;
    ensure_parent(&out)?;
    fs::write(&out, sweep.to_csv())?;
    let resolved = with_suffix(&out, ".resolved.txt");
    write_resolved(&resolved, &st)?;
    Ok(vec![out, resolved])
}

fn preset_options(st: &Settings) -> Result<PresetOptions> {
    let mut opts = PresetOptions::default();
    opts.seed = st.get("seed")?;
    if let Some(t) = st.opt("trials")? {
        opts.trials_per_point = t;
    }
    if st.flag("full_scale")? {
        opts.n_t = PresetOptions::FULL_SCALE_N_T;
    }
    if let Some(n) = st.opt("nt")? {
        opts.n_t = n;
    }
    if let Some(g) = st.opt::<String>("snr_grid")? {
        opts.snr_grid_db = parse_grid(&g)?;
    }
    if let Some(r) = st.opt("ridge")? {
        opts.ridge = r;
    }
    if let Some(c) = st.opt("cfo_max")? {
        opts.test_cfo = cfo_spec(c)?;
    }
    if let Some(b) = st.opt("bandwidth")? {
        opts.bandwidth_hz = b;
    }
    if opts.trials_per_point == 0 || opts.n_t == 0 {
        return Err(bad("trials and nt must be positive"));
    }
    if !(opts.bandwidth_hz > 0.0) {
        return Err(bad(format!("bandwidth must be positive, got {}", opts.bandwidth_hz)));
    }
    Ok(opts)
}

fn run_preset(preset: Preset, st: &Settings) -> Result<Vec<PathBuf>> {
    let opts = preset_options(st)?;
    let out_dir: PathBuf = st.get("out_dir")?;
    let mut files = run_experiment(preset, &opts, &out_dir)?.files;
    let resolved = out_dir.join("resolved_config.txt");
    write_resolved(&resolved, st)?;
    files.push(resolved);
    Ok(files)
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<Vec<PathBuf>> {
    let preset: Preset = a.preset.parse()?;
    let allowed = [
        ("seed", s(&a.seed)),
        ("trials", s(&a.trials)),
        ("nt", s(&a.nt)),
        ("full_scale", a.full_scale.then(|| "true".to_string())),
        ("snr_grid", a.snr_grid.clone()),
        ("ridge", s(&a.ridge)),
        ("cfo_max", s(&a.cfo_max)),
        ("bandwidth", s(&a.bandwidth)),
        ("out_dir", p(&a.out_dir)),
    ];
    let out_dir = format!("out/{}", preset.name());
    let defaults = [("seed", "0"), ("out_dir", out_dir.as_str())];
    let st = Settings::resolve(&allowed, &defaults, &a.common)?;
    run_preset(preset, &st)
}

fn cmd_table3(a: &Table3Args) -> Result<Vec<PathBuf>> {
    let allowed = [
        ("seed", s(&a.seed)),
        ("nt", s(&a.nt)),
        ("full_scale", a.full_scale.then(|| "true".to_string())),
        ("bandwidth", s(&a.bandwidth)),
        ("out_dir", p(&a.out_dir)),
    ];
    let defaults = [("seed", "0"), ("out_dir", "out/table3")];
    let st = Settings::resolve(&allowed, &defaults, &a.common)?;
    run_preset(Preset::Table3, &st)
}

/// Runs a parsed command inside the worker pool.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let pool = harness::thread_pool()?;
    pool.install(|| match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Table3(a) => cmd_table3(a),
    })
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidArgument(_) => "invalid_argument",
        Error::Numeric(_) => "numeric",
        Error::State(_) => "state",
        Error::Format(_) => "format",
        Error::CollectionFailure(_) => "collection_failure",
        Error::NotFound(_) => "not_found",
        Error::Io(_) => "io",
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::NotFound(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn detail(e: &Error) -> String {
    match e {
        Error::InvalidArgument(m)
        | Error::Numeric(m)
        | Error::State(m)
        | Error::Format(m)
        | Error::CollectionFailure(m) => m.clone(),
        Error::NotFound(p) => format!("{} not found", p.display()),
        Error::Io(io) => io.to_string(),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `args`, runs the command and returns the process exit code.
/// Output paths go to stdout, a single `error[kind]: message` line to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            eprintln!("error[usage]: {}", one_line(first.trim_start_matches("error: ")));
            return EXIT_CONFIG;
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error[{}]: {}", error_kind(&e), one_line(&detail(&e)));
            exit_code(&e)
        }
    }
}
