use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use porophys_core::dataio::synth::{write_synthetic, CategoryNoise, PlateLayout, SynthSpec};
use porophys_core::dataio::{load_porosity, load_setup, read_json, write_json, SetupConfig};
use porophys_core::evaluate::{run_comparison, ComparisonConfig, ErrorMetric, QualityGate};
use porophys_core::features::{
    combined_features, feature_names, physics_features, setting_features, Aggregator, Effect, ModelKind,
};
use porophys_core::physics::{
    default_spot_area_mm2, photon_budget, DEFAULT_POWER_W, DEFAULT_WAVELENGTH_M,
};
use porophys_core::pipge::{build_map, detect_regions, export_maps, RegionParams};
use porophys_core::regress::Algorithm;
use porophys_core::{
    Dataset, Error, FeatureVector, Hyperparameters, PhysicalConstants, PointEffects, PorosityTarget, TrainedModel,
};

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  2  usage error (unknown flag, bad value, conflicting arguments)
  3  I/O failure (missing or unwritable file)
  4  invalid input (malformed CSV/JSON, invariant violation, bad parameter)
  5  numerical failure (factorization, solver non-convergence, undefined metric)

Logging: POROPHYS_LOG=error|warn|info|debug";

#[derive(Parser, Debug)]
#[command(name = "porophys", version, about = "Physics-informed porosity modeling for laser powder bed fusion")]
#[command(after_help = EXIT_HELP)]
struct Cli {
    /// Replay a run_config.json written by an earlier run.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; nothing is written outside it.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Generate a synthetic plate with porosity labels.
    Synth(SynthArgs),
    /// Write setting, physics and combined feature tables.
    Features(FeaturesArgs),
    /// Fit one model and save it as model.json.
    Train(TrainArgs),
    /// Cross-validate every category, model kind, algorithm and target.
    Evaluate(EvaluateArgs),
    /// Build physics-porosity maps and detect influence regions.
    Explain(ExplainArgs),
    /// Single-point physics diagnostics.
    Physics {
        #[command(subcommand)]
        action: PhysicsAction,
    },
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
enum PhysicsAction {
    /// Effects of one laser at a given incident angle.
    Probe(ProbeArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SynthArgs {
    /// Setup JSON used as the plate and laser template (default: reference plate).
    #[arg(long)]
    setup: Option<PathBuf>,
    /// Full generator spec as JSON; overrides the flags below.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 549)]
    n_parts: usize,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, value_enum, default_value_t = LayoutArg::Grid)]
    layout: LayoutArg,
    /// Relative noise for pass,flag,fail parts.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    category_noise: Option<Vec<f64>>,
    /// Filled in before the run config is written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    #[arg(skip)]
    resolved: Option<SynthSpec>,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum LayoutArg {
    Grid,
    PoseBands,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct FeaturesArgs {
    #[arg(long)]
    setup: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct DataArgs {
    #[arg(long)]
    setup: PathBuf,
    #[arg(long)]
    porosity: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct HyperArgs {
    #[arg(long, default_value_t = 10.0)]
    svr_c: f64,
    #[arg(long, default_value_t = 0.05)]
    svr_epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    rbf_sigma: f64,
    #[arg(long, default_value_t = 2)]
    poly_degree: u32,
}

impl HyperArgs {
    fn resolve(&self) -> Hyperparameters {
        let mut h = Hyperparameters::default();
        h.svr.c = self.svr_c;
        h.svr.epsilon = self.svr_epsilon;
        h.svr.rbf_sigma = self.rbf_sigma;
        h.svr.poly_degree = self.poly_degree;
        h
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "svrRBF")]
    algorithm: Algorithm,
    #[arg(long, default_value = "physics")]
    model: ModelKind,
    #[arg(long, default_value = "max_d")]
    target: PorosityTarget,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value = "percentage")]
    metric: ErrorMetric,
    #[arg(long, default_value_t = 97.10)]
    gate_pass: f64,
    #[arg(long, default_value_t = 220.40)]
    gate_fail: f64,
    #[arg(long, value_delimiter = ',', default_value = "max_d,mean_d,median_d,median_spacing")]
    targets: Vec<PorosityTarget>,
    #[arg(long, value_delimiter = ',', default_value = "Linear,GPR,svrL,svrG,svrRBF,svrP")]
    algorithms: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', default_value = "setting,physics,combined")]
    models: Vec<ModelKind>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct ExplainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long, default_value_t = 0.8)]
    suppress_fraction: f64,
    #[arg(long, default_value_t = 0.5)]
    encourage_fraction: f64,
    #[arg(long, default_value_t = 5)]
    min_support: usize,
    #[arg(long, default_value_t = 0.3)]
    low_porosity: f64,
    #[arg(long, default_value_t = 0.3)]
    high_porosity: f64,
    #[arg(long, default_value_t = 0.3)]
    outlier_cut: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct ProbeArgs {
    #[arg(long)]
    theta_deg: f64,
    #[arg(long, default_value_t = DEFAULT_POWER_W)]
    power_w: f64,
    /// Default: 50 µm diameter disc.
    #[arg(long)]
    spot_area_mm2: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_WAVELENGTH_M)]
    wavelength_m: f64,
}

/// Everything needed to replay a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunConfig {
    version: String,
    seed: u64,
    jobs: Option<usize>,
    command: Command,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::Io { .. } => 3,
            Error::Csv { source, .. } if matches!(source.kind(), csv::ErrorKind::Io(_)) => 3,
            Error::Factorization(_)
            | Error::NotConverged { .. }
            | Error::MetricUndefined(_)
            | Error::DegenerateAxis(_)
            | Error::GrazingIncidence { .. } => 5,
            _ => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn make_paths_absolute(cmd: &mut Command) {
    let fix = |p: &mut PathBuf| *p = absolute(p);
    match cmd {
        Command::Synth(a) => {
            a.setup.as_mut().map(fix);
            a.spec.as_mut().map(fix);
        }
        Command::Features(a) => fix(&mut a.setup),
        Command::Train(a) => {
            fix(&mut a.data.setup);
            fix(&mut a.data.porosity);
        }
        Command::Evaluate(a) => {
            fix(&mut a.data.setup);
            fix(&mut a.data.porosity);
        }
        Command::Explain(a) => {
            fix(&mut a.data.setup);
            fix(&mut a.data.porosity);
        }
        Command::Physics { .. } => {}
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("POROPHYS_LOG", "warn")).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("porophys: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let mut config = match (&cli.config, cli.command) {
        (Some(_), Some(_)) => return Err(usage("--config replays a run; do not also give a subcommand")),
        (None, None) => return Err(usage("no subcommand given (see --help)")),
        (Some(path), None) => read_json::<RunConfig>(path)?,
        (None, Some(command)) => RunConfig {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: 0,
            jobs: None,
            command,
        },
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.jobs.is_some() {
        config.jobs = cli.jobs;
    }
    if config.jobs == Some(0) {
        return Err(usage("--jobs must be at least 1"));
    }
    make_paths_absolute(&mut config.command);
    if let Some(n) = config.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("cannot size worker pool: {e}")))?;
    }
    let out = cli.out.unwrap_or_else(|| PathBuf::from("porophys-out"));
    fs::create_dir_all(&out).map_err(|e| Failure::from(Error::Io { path: out.clone(), source: e }))?;

    if let Command::Synth(args) = &mut config.command {
        let mut spec = match args.resolved.take() {
            Some(spec) => spec,
            None => synth_spec(args)?,
        };
        spec.seed = config.seed;
        args.resolved = Some(spec);
    }
    write_json(&out.join("run_config.json"), &config)?;
    match &config.command {
        Command::Synth(a) => synth(a, &out),
        Command::Features(a) => features(a, &out),
        Command::Train(a) => train(a, &out),
        Command::Evaluate(a) => evaluate(a, config.seed, &out),
        Command::Explain(a) => explain(a, &out),
        Command::Physics { action: PhysicsAction::Probe(a) } => probe(a, &out),
    }
}

fn synth_spec(a: &SynthArgs) -> Outcome<SynthSpec> {
    if let Some(path) = &a.spec {
        return Ok(read_json(path)?);
    }
    let category_noise = a
        .category_noise
        .as_ref()
        .map(|v| CategoryNoise { pass: v[0], flag: v[1], fail: v[2] });
    Ok(SynthSpec {
        n_parts: a.n_parts,
        noise_sigma: a.noise_sigma,
        layout: match a.layout {
            LayoutArg::Grid => PlateLayout::Grid,
            LayoutArg::PoseBands => PlateLayout::PoseBands,
        },
        category_noise,
        ..SynthSpec::default()
    })
}

fn synth(a: &SynthArgs, out: &Path) -> Outcome {
    let template = match &a.setup {
        Some(p) => SetupConfig::read(p)?,
        None => SetupConfig::reference(),
    };
    let spec = a.resolved.clone().expect("resolved before dispatch");
    let (gen, manifest) = write_synthetic(out, &spec, &template)?;
    for f in &manifest.files {
        println!("{}  {}", f.sha256, f.name);
    }
    log::info!("generated {} parts into {}", gen.setup.parts.len(), out.display());
    Ok(())
}

fn features(a: &FeaturesArgs, out: &Path) -> Outcome {
    let (_, setup) = load_setup(&a.setup)?;
    let k = PhysicalConstants::default();
    let mut table: Vec<[FeatureVector; 3]> = Vec::with_capacity(setup.parts.len());
    for part in &setup.parts {
        let s = setting_features(&setup, part);
        let p = physics_features(&setup, part, &k)?;
        let c = combined_features(&s, &p)?;
        table.push([s, p, c]);
    }
    for kind in ModelKind::ALL {
        let path = out.join(format!("features_{}.csv", kind.name()));
        let mut rows = Vec::with_capacity(table.len() + 1);
        let mut header = vec!["part_id".to_string(), "model_kind".to_string()];
        header.extend(feature_names(kind));
        rows.push(header);
        for fv in table.iter().map(|t| &t[kind as usize]) {
            let mut row = vec![fv.part_id.clone(), kind.name().to_string()];
            row.extend(fv.values.iter().map(|v| v.to_string()));
            rows.push(row);
        }
        write_csv(&path, &rows)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn write_csv(path: &Path, rows: &[Vec<String>]) -> Outcome {
    let err = |source| Failure::from(Error::Csv { path: path.to_path_buf(), source });
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| Failure::from(Error::Io { path: path.to_path_buf(), source: e }))
}

fn load_dataset(d: &DataArgs) -> Outcome<Dataset> {
    let (_, setup) = load_setup(&d.setup)?;
    let porosity = load_porosity(&d.porosity)?;
    Ok(Dataset::build(&setup, &porosity, &PhysicalConstants::default())?)
}

fn train(a: &TrainArgs, out: &Path) -> Outcome {
    let ds = load_dataset(&a.data)?;
    let model = TrainedModel::fit(a.algorithm, &a.hyper.resolve(), &ds.rows(a.model), &ds.targets(a.target))?
        .with_feature_names(feature_names(a.model));
    let path = out.join("model.json");
    let json = model.to_json()?;
    fs::write(&path, json + "\n").map_err(|e| Failure::from(Error::Io { path: path.clone(), source: e }))?;
    println!("{}", path.display());
    Ok(())
}

fn evaluate(a: &EvaluateArgs, seed: u64, out: &Path) -> Outcome {
    let ds = load_dataset(&a.data)?;
    let config = ComparisonConfig {
        folds: a.folds,
        metric: a.metric,
        seed,
        gate: QualityGate::new(a.gate_pass, a.gate_fail)?,
        models: a.models.clone(),
        algorithms: a.algorithms.clone(),
        targets: a.targets.clone(),
        hyper: a.hyper.resolve(),
        ..ComparisonConfig::default()
    };
    let matrix = run_comparison(&ds, &config)?;
    let csv_path = out.join("comparison_matrix.csv");
    let file = fs::File::create(&csv_path).map_err(|e| Failure::from(Error::Io { path: csv_path.clone(), source: e }))?;
    matrix
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|source| Failure::from(Error::Csv { path: csv_path.clone(), source }))?;
    write_json(&out.join("comparison_matrix.json"), &matrix)?;
    let filled = matrix.cells.iter().filter(|c| c.error.is_some()).count();
    println!("{} cells ({} insufficient) -> {}", matrix.cells.len(), matrix.cells.len() - filled, csv_path.display());
    Ok(())
}

fn explain(a: &ExplainArgs, out: &Path) -> Outcome {
    let params = RegionParams {
        bins: a.bins,
        suppress_fraction: a.suppress_fraction,
        encourage_fraction: a.encourage_fraction,
        min_support: a.min_support,
        low_porosity: a.low_porosity,
        high_porosity: a.high_porosity,
        outlier_cut: a.outlier_cut,
    };
    params.validate()?;
    let ds = load_dataset(&a.data)?;
    let profiles = ds.profiles();
    let porosity = ds.porosity();
    let mut maps = Vec::new();
    let mut regions = Vec::new();
    for effect in Effect::ALL {
        for agg in Aggregator::ALL {
            for target in PorosityTarget::ALL {
                match build_map(&profiles, &porosity, effect, agg, target) {
                    Ok(map) => {
                        let r = detect_regions(&map, &params)?;
                        for region in &r {
                            println!("{effect} {target} {}: {}", region.kind, region.bracket(agg));
                        }
                        maps.push(map);
                        regions.push(r);
                    }
                    Err(Error::DegenerateAxis(name)) => log::warn!("skipping {name}/{target}: constant effect"),
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    let files = export_maps(&maps, &regions, &params, &out.join("maps"))?;
    log::info!("wrote {} files", files.len());
    Ok(())
}

#[derive(Serialize)]
struct ProbeReport {
    theta_deg: f64,
    theta_rad: f64,
    power_w: f64,
    spot_area_mm2: f64,
    wavelength_m: f64,
    projection_area_mm2: f64,
    energy_density_w_mm2: f64,
    f: f64,
    fv: f64,
    fh: f64,
    photon_energy_j: f64,
    photons_per_second: f64,
    total_force_n: f64,
}

fn probe(a: &ProbeArgs, out: &Path) -> Outcome {
    let k = PhysicalConstants::default();
    let spot = a.spot_area_mm2.unwrap_or_else(default_spot_area_mm2);
    let theta = a.theta_deg.to_radians();
    let pe = PointEffects::evaluate(a.power_w, spot, theta, &k)?;
    let budget = photon_budget(a.power_w, a.wavelength_m, &k)?;
    let report = ProbeReport {
        theta_deg: a.theta_deg,
        theta_rad: theta,
        power_w: a.power_w,
        spot_area_mm2: spot,
        wavelength_m: a.wavelength_m,
        projection_area_mm2: pe.projection_area_mm2,
        energy_density_w_mm2: pe.power_intensity_w_mm2,
        f: pe.radiation_pressure_pa,
        fv: pe.vertical_pressure_pa,
        fh: pe.horizontal_pressure_pa,
        photon_energy_j: budget.photon_energy_j,
        photons_per_second: budget.photons_per_second,
        total_force_n: budget.total_force_n,
    };
    write_json(&out.join("probe.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("plain struct"));
    Ok(())
}
