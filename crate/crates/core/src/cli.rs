//! The `hetpanel` command-line tool.
//!
//! Every command reads an optional configuration file, applies its flags on
//! top and echoes the result into its output directory, so any run can be
//! repeated from `config.toml` alone.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Variant;
use crate::io::{load_checkpoint, load_config, load_dataset, save_checkpoint, save_dataset, write_atomic, RunConfig};
use crate::oracle::{Channel, GRID_COLS, GRID_POINTS, GRID_ROWS};
use crate::training::{
    ablation_run, compare_homo_hetero, data_size_study, derive_seeds, generate_dataset_with_progress,
    predict, quasi_random_search, score_predictions, split_dataset, total_displacement_rmse, train, Dataset,
    Normalization, PreparedData, Split, TrainConfig, TrainedModel,
};

/// Default output root when `HETPANEL_DATA_DIR` is unset.
pub const DEFAULT_DATA_DIR: &str = "hetpanel-data";
pub const DATA_DIR_ENV: &str = "HETPANEL_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "hetpanel", version, about = "Heterogeneous graph surrogates for stiffened panels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Case-generation seed (gen), training seed (train) or master seed (experiments).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Dataset archive; defaults to `$HETPANEL_DATA_DIR/dataset.hpds`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Graph representation: a-f or homogeneous.
    #[arg(long)]
    pub variant: Option<String>,
    /// Predicted field: u1, u2, u3 or stress.
    #[arg(long)]
    pub channel: Option<String>,
    /// Training epochs, overriding the configuration.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw and label panel cases into a dataset archive.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Number of cases.
        #[arg(short = 'n')]
        n: Option<usize>,
        /// Largest accepted relative residual of the oracle solve.
        #[arg(long)]
        residual_tol: Option<f64>,
    },
    /// Train one model and write a run directory.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Score a run on its test split and save the predictions.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Run directory written by `train`.
        #[arg(long)]
        run: PathBuf,
        /// Dataset archive; defaults to the one the run was trained on.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Runs for u1, u2 and u3, comma separated, scored as total displacement.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        displacement_runs: Option<Vec<PathBuf>>,
    },
    /// Train every listed variant over repeated seeds.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
        /// Comma-separated variants.
        #[arg(long, value_delimiter = ',')]
        variants: Option<Vec<String>>,
    },
    /// GraphSAGE on the homogeneous graph against HGT on `--variant`.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Quasi-random hyperparameter search.
    Hpsearch {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Test error against training-set size.
    Datasize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
        /// Comma-separated training-set sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Export path tables and grids of one evaluated case.
    Plot {
        #[command(flatten)]
        common: Common,
        /// Run directory with saved predictions.
        #[arg(long)]
        run: PathBuf,
        /// Dataset index of a test case.
        #[arg(long)]
        case: usize,
        /// Path through one unit's grid, e.g. `unit=3,row=4` or `unit=0,edge=start`.
        #[arg(long)]
        path: String,
    },
}

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn data_root() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR))
}

pub fn parse_channel(s: &str) -> Result<Channel> {
    Channel::parse(&s.trim().to_ascii_lowercase())
        .ok_or_else(|| Error::Usage(format!("unknown channel `{s}`; legal channels: u1, u2, u3, stress")))
}

fn base_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            require(p)?;
            load_config(p)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn apply_train_args(cfg: &mut RunConfig, t: &TrainArgs) -> Result<()> {
    if let Some(v) = &t.variant {
        cfg.variant = v.parse()?;
    }
    if let Some(c) = &t.channel {
        cfg.channel = parse_channel(c)?;
    }
    if let Some(e) = t.epochs {
        cfg.epochs = e;
    }
    if let Some(d) = &t.data {
        cfg.data.path = d.display().to_string();
    }
    cfg.validate()
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Usage(format!("missing input {}", path.display())))
    }
}

fn dataset_path(cfg: &RunConfig) -> PathBuf {
    if cfg.data.path.is_empty() {
        data_root().join("dataset.hpds")
    } else {
        PathBuf::from(&cfg.data.path)
    }
}

fn open_dataset(cfg: &mut RunConfig) -> Result<Dataset> {
    let p = dataset_path(cfg);
    require(&p)?;
    cfg.data.path = p.display().to_string();
    let ds = load_dataset(&p)?;
    if ds.cases.is_empty() {
        return Err(Error::Usage(format!("{} holds no cases", p.display())));
    }
    Ok(ds)
}

fn split_of(cfg: &RunConfig, n: usize) -> Result<Split> {
    split_dataset(n, cfg.data.split, cfg.data.split_seed)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::Usage(format!("cannot encode {}: {e}", path.display())))?;
    write_text(path, &(s + "\n"))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Format {
        offset: e.column() as u64,
        message: format!("{}: {e}", path.display()),
    })
}

/// Curves as `epoch,train_rmse,val_rmse` rows.
pub fn curves_csv(model: &TrainedModel) -> String {
    let m = &model.metrics;
    let mut s = String::from("epoch,train_rmse,val_rmse\n");
    for (i, (t, v)) in m.train_curve.iter().zip(&m.val_curve).enumerate() {
        let _ = writeln!(s, "{},{t},{v}", i + 1);
    }
    s
}

/// Config echo, metrics, curves and checkpoint of one run.
pub fn write_run_dir(dir: &Path, cfg: &RunConfig, model: &TrainedModel) -> Result<()> {
    let mut echo = cfg.clone();
    let t = model.config;
    echo.variant = t.variant;
    echo.channel = t.channel;
    echo.seed = t.seed;
    echo.layers = t.network.layers;
    echo.hidden = t.network.hidden;
    echo.heads = t.network.heads;
    echo.activation = t.network.activation;
    echo.lr = t.lr;
    echo.l2 = t.l2;
    echo.epochs = t.epochs;
    echo.batch_size = t.batch_size;
    echo.bn_momentum = t.bn_momentum;
    write_text(&dir.join("config.toml"), &echo.to_toml()?)?;
    write_json(&dir.join("metrics.json"), &model.metrics)?;
    write_text(&dir.join("curves.csv"), &curves_csv(model))?;
    save_checkpoint(model, &dir.join("model.hpck"))
}

fn run_name(t: &TrainConfig) -> String {
    format!("{}-{}-s{}", t.variant, t.channel.name(), t.seed)
}

fn prepare(ds: &Dataset, cfg: &RunConfig, variant: Variant) -> Result<PreparedData> {
    PreparedData::new(ds, variant, &cfg.features)
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen { common, n, residual_tol } => cmd_gen(&common, n, residual_tol),
        Command::Train { common, train } => cmd_train(&common, &train),
        Command::Eval {
            common,
            run,
            data,
            displacement_runs,
        } => cmd_eval(&common, &run, data.as_deref(), displacement_runs.as_deref()),
        Command::Ablate { common, train, variants } => cmd_ablate(&common, &train, variants.as_deref()),
        Command::Compare { common, train } => cmd_compare(&common, &train),
        Command::Hpsearch { common, train, budget } => cmd_hpsearch(&common, &train, budget),
        Command::Datasize { common, train, sizes } => cmd_datasize(&common, &train, sizes),
        Command::Plot { common, run, case, path } => cmd_plot(&common, &run, case, &path),
    }
}

/// Largest tolerated share of failed solves.
const MAX_FAILURE_SHARE: f64 = 0.01;

fn cmd_gen(common: &Common, n: Option<usize>, residual_tol: Option<f64>) -> Result<()> {
    let mut cfg = base_config(common)?;
    if let Some(s) = common.seed {
        cfg.data.seed = s;
    }
    if let Some(t) = residual_tol {
        cfg.oracle.residual_tol = t;
    }
    if let Some(n) = n {
        cfg.data.cases = n;
    }
    cfg.validate()?;
    let out = common.out.clone().unwrap_or_else(|| dataset_path(&cfg));
    let jobs = common.jobs.unwrap_or(1);
    let g = generate_dataset_with_progress(
        &cfg.case_spec(),
        &cfg.oracle,
        cfg.data.cases,
        cfg.data.seed,
        jobs,
        &mut |done, total| eprintln!("labelled {done}/{total}"),
    )?;
    for (seed, msg) in &g.failures {
        eprintln!("skipped case seed {seed}: {msg}");
    }
    save_dataset(&g.dataset, &out)?;
    cfg.data.path = out.display().to_string();
    write_text(&out.with_extension("toml"), &cfg.to_toml()?)?;
    println!("wrote {} cases to {}", g.dataset.cases.len(), out.display());
    let n = cfg.data.cases;
    if n > 0 && g.failures.len() as f64 > MAX_FAILURE_SHARE * n as f64 {
        return Err(Error::Numeric(format!(
            "{} of {n} oracle solves failed (more than 1%)",
            g.failures.len()
        )));
    }
    Ok(())
}

fn cmd_train(common: &Common, t: &TrainArgs) -> Result<()> {
    let mut cfg = base_config(common)?;
    apply_train_args(&mut cfg, t)?;
    let ds = open_dataset(&mut cfg)?;
    let split = split_of(&cfg, ds.cases.len())?;
    let data = prepare(&ds, &cfg, cfg.variant)?;
    let norm = Normalization::fit(&data, &split.train)?;
    let tc = cfg.train_config();
    let dir = common
        .out
        .clone()
        .unwrap_or_else(|| data_root().join("runs").join(format!("train-{}", run_name(&tc))));
    let model = train(&tc, &data, &split, &norm)?;
    write_run_dir(&dir, &cfg, &model)?;
    let m = &model.metrics;
    println!(
        "{}: best epoch {}, validation RMSE {:.4} {u}, test RMSE {:.4} {u}, {:.1} s -> {}",
        run_name(&tc),
        m.best_epoch + 1,
        m.best_val,
        m.test_rmse,
        m.wall_time_s,
        dir.display(),
        u = tc.channel.unit()
    );
    Ok(())
}

/// Predictions of one run on its test split, as written by `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub channel: Channel,
    pub cases: Vec<CasePrediction>,
}

/// Unit-major `n_units × 200` blocks in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasePrediction {
    pub case: usize,
    pub prediction: Vec<f64>,
    pub target: Vec<f64>,
}

struct LoadedRun {
    cfg: RunConfig,
    model: TrainedModel,
}

fn load_run(dir: &Path) -> Result<LoadedRun> {
    let cfg_path = dir.join("config.toml");
    let ck = dir.join("model.hpck");
    require(&cfg_path)?;
    require(&ck)?;
    let cfg = load_config(&cfg_path)?;
    let model = load_checkpoint(&ck, &cfg.train_config())?;
    Ok(LoadedRun { cfg, model })
}

fn cmd_eval(common: &Common, run: &Path, data: Option<&Path>, disp: Option<&[PathBuf]>) -> Result<()> {
    let mut r = load_run(run)?;
    if let Some(d) = data {
        r.cfg.data.path = d.display().to_string();
    }
    let ds = open_dataset(&mut r.cfg)?;
    let split = split_of(&r.cfg, ds.cases.len())?;
    if split.test.is_empty() {
        return Err(Error::Usage("the test split is empty".into()));
    }
    let data = prepare(&ds, &r.cfg, r.model.config.variant)?;
    let m = &r.model;
    let ch = m.config.channel;
    let pred = predict(&m.network, &m.store, &m.norm, ch, &data, &split.test)?;
    let metrics = score_predictions(&pred, &data, ch, &split.test)?;
    let out = common.out.clone().unwrap_or_else(|| run.to_path_buf());
    write_json(&out.join("eval.json"), &metrics)?;
    let preds = Predictions {
        channel: ch,
        cases: split
            .test
            .iter()
            .zip(pred)
            .map(|(i, p)| CasePrediction {
                case: *i,
                prediction: p,
                target: data.targets[*i][ch.index()].clone(),
            })
            .collect(),
    };
    write_json(&out.join("predictions.json"), &preds)?;
    println!(
        "{} test RMSE {:.4} {} over {} cases",
        ch.name(),
        metrics.rmse,
        ch.unit(),
        split.test.len()
    );
    if let Some(runs) = disp {
        let mut comps = Vec::with_capacity(3);
        for (want, dir) in [Channel::U1, Channel::U2, Channel::U3].into_iter().zip(runs) {
            let c = load_run(dir)?;
            if c.model.config.channel != want {
                return Err(Error::Usage(format!(
                    "{} predicts {}, expected {}",
                    dir.display(),
                    c.model.config.channel.name(),
                    want.name()
                )));
            }
            let d = prepare(&ds, &r.cfg, c.model.config.variant)?;
            let m = &c.model;
            comps.push(predict(&m.network, &m.store, &m.norm, want, &d, &split.test)?);
        }
        let total = total_displacement_rmse([&comps[0], &comps[1], &comps[2]], &data, &split.test)?;
        write_json(&out.join("total_displacement.json"), &serde_json::json!({ "rmse_mm": total }))?;
        println!("total displacement test RMSE {total:.4} mm");
    }
    Ok(())
}

fn seeds_of(cfg: &RunConfig, common: &Common) -> Vec<u64> {
    derive_seeds(common.seed.unwrap_or(cfg.experiment.master_seed), cfg.experiment.repeats)
}

fn experiment_dir(common: &Common, name: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| data_root().join("runs").join(name))
}

fn cmd_ablate(common: &Common, t: &TrainArgs, variants: Option<&[String]>) -> Result<()> {
    let mut cfg = base_config(common)?;
    apply_train_args(&mut cfg, t)?;
    if let Some(v) = variants {
        cfg.experiment.variants = v.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    }
    if cfg.experiment.variants.is_empty() {
        return Err(Error::Usage("no variants to ablate".into()));
    }
    let ds = open_dataset(&mut cfg)?;
    let split = split_of(&cfg, ds.cases.len())?;
    let seeds = seeds_of(&cfg, common);
    let dir = experiment_dir(common, &format!("ablate-{}", cfg.channel.name()));
    let table = ablation_run(
        &cfg.train_config(),
        &cfg.experiment.variants,
        |v| prepare(&ds, &cfg, v),
        &split,
        &seeds,
        &mut |m| write_run_dir(&dir.join(run_name(&m.config)), &cfg, m),
    )?;
    write_json(&dir.join("ablation.json"), &table)?;
    let mut s = format!("variant  params  rmse_mean ({u})  rmse_std  pct_from_best\n", u = cfg.channel.unit());
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{:<7}  {:>6}  {:>14.4}  {:>8.4}  {:>13.2}",
            r.variant.name(),
            r.params,
            r.rmse_mean,
            r.rmse_std,
            r.pct_from_best
        );
    }
    write_text(&dir.join("ablation.txt"), &s)?;
    print!("{s}");
    Ok(())
}

fn cmd_compare(common: &Common, t: &TrainArgs) -> Result<()> {
    let mut cfg = base_config(common)?;
    apply_train_args(&mut cfg, t)?;
    if cfg.variant == Variant::Homogeneous {
        return Err(Error::Usage("--variant must name a heterogeneous variant (a-f)".into()));
    }
    let ds = open_dataset(&mut cfg)?;
    let split = split_of(&cfg, ds.cases.len())?;
    let seeds = seeds_of(&cfg, common);
    let dir = experiment_dir(common, &format!("compare-{}-{}", cfg.variant, cfg.channel.name()));
    let tc = cfg.train_config();
    let homo = prepare(&ds, &cfg, Variant::Homogeneous)?;
    let hetero = prepare(&ds, &cfg, cfg.variant)?;
    let c = compare_homo_hetero(&tc, &tc, &homo, &hetero, &split, &seeds, &mut |m| {
        write_run_dir(&dir.join(run_name(&m.config)), &cfg, m)
    })?;
    write_json(&dir.join("comparison.json"), &c)?;
    let s = format!(
        "graphsage (homogeneous)  {:.4} ± {:.4} {u}\nhgt ({})                  {:.4} ± {:.4} {u}\nreduction {:.1}%\n",
        c.homogeneous.rmse_mean,
        c.homogeneous.rmse_std,
        cfg.variant,
        c.heterogeneous.rmse_mean,
        c.heterogeneous.rmse_std,
        c.reduction_pct(),
        u = cfg.channel.unit()
    );
    write_text(&dir.join("comparison.txt"), &s)?;
    print!("{s}");
    Ok(())
}

fn cmd_hpsearch(common: &Common, t: &TrainArgs, budget: Option<usize>) -> Result<()> {
    let mut cfg = base_config(common)?;
    apply_train_args(&mut cfg, t)?;
    if let Some(b) = budget {
        cfg.experiment.budget = b;
    }
    let ds = open_dataset(&mut cfg)?;
    let split = split_of(&cfg, ds.cases.len())?;
    let dir = experiment_dir(common, &format!("hpsearch-{}-{}", cfg.variant, cfg.channel.name()));
    let data = prepare(&ds, &cfg, cfg.variant)?;
    let mut k = 0;
    let rows = quasi_random_search(
        &cfg.train_config(),
        &cfg.experiment.search,
        cfg.experiment.budget,
        common.seed.unwrap_or(cfg.experiment.master_seed),
        &data,
        &split,
        &mut |m| {
            k += 1;
            write_run_dir(&dir.join(format!("trial{k:03}")), &cfg, m)
        },
    )?;
    write_json(&dir.join("search.json"), &rows)?;
    let mut s = String::from("lr,layers,hidden,l2,val_rmse,test_rmse\n");
    for r in &rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.lr, r.layers, r.hidden, r.l2, r.val_rmse, r.test_rmse);
    }
    write_text(&dir.join("search.csv"), &s)?;
    print!("{s}");
    Ok(())
}

fn cmd_datasize(common: &Common, t: &TrainArgs, sizes: Option<Vec<usize>>) -> Result<()> {
    let mut cfg = base_config(common)?;
    apply_train_args(&mut cfg, t)?;
    if let Some(s) = sizes {
        cfg.experiment.sizes = s;
    }
    let ds = open_dataset(&mut cfg)?;
    let split = split_of(&cfg, ds.cases.len())?;
    let seeds = seeds_of(&cfg, common);
    let dir = experiment_dir(common, &format!("datasize-{}-{}", cfg.variant, cfg.channel.name()));
    let data = prepare(&ds, &cfg, cfg.variant)?;
    let sizes = cfg.experiment.sizes.clone();
    let mut k = 0;
    let rows = data_size_study(&cfg.train_config(), &data, &split, &sizes, &seeds, &mut |m| {
        let size = sizes[k / seeds.len()];
        k += 1;
        write_run_dir(&dir.join(format!("n{size}-{}", run_name(&m.config))), &cfg, m)
    })?;
    write_json(&dir.join("datasize.json"), &rows)?;
    let mut s = format!("size,rmse_mean,rmse_std ({})\n", cfg.channel.unit());
    for r in &rows {
        let _ = writeln!(s, "{},{},{}", r.size, r.rmse_mean, r.rmse_std);
    }
    write_text(&dir.join("datasize.csv"), &s)?;
    print!("{s}");
    Ok(())
}

/// One line through a unit's 10 × 20 grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathSpec {
    pub unit: usize,
    pub line: GridLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridLine {
    /// Fixed row: 20 points along the unit's long side.
    Row(usize),
    /// Fixed column: 10 points across the short side.
    Col(usize),
}

impl PathSpec {
    /// Parses `unit=U,row=R`, `unit=U,col=C` or `unit=U,edge=E` with `E`
    /// one of `bottom` (row 0), `top` (last row), `start` (column 0) and
    /// `end` (last column).
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::Usage(format!("bad path `{s}`: {m}"));
        let mut unit = None;
        let mut line = None;
        for part in s.split(',') {
            let (k, v) = part.split_once('=').ok_or_else(|| bad("expected key=value pairs"))?;
            let num = || v.trim().parse::<usize>().map_err(|_| bad(&format!("`{v}` is not an index")));
            let l = match k.trim() {
                "unit" => {
                    unit = Some(num()?);
                    continue;
                }
                "row" => GridLine::Row(num()?),
                "col" => GridLine::Col(num()?),
                "edge" => match v.trim() {
                    "bottom" => GridLine::Row(0),
                    "top" => GridLine::Row(GRID_ROWS - 1),
                    "start" => GridLine::Col(0),
                    "end" => GridLine::Col(GRID_COLS - 1),
                    e => return Err(bad(&format!("unknown edge `{e}`; use bottom, top, start or end"))),
                },
                other => return Err(bad(&format!("unknown key `{other}`"))),
            };
            if line.replace(l).is_some() {
                return Err(bad("more than one line descriptor"));
            }
        }
        let p = Self {
            unit: unit.ok_or_else(|| bad("missing unit"))?,
            line: line.ok_or_else(|| bad("missing row, col or edge"))?,
        };
        match p.line {
            GridLine::Row(r) if r >= GRID_ROWS => Err(bad(&format!("row {r} outside 0..{GRID_ROWS}"))),
            GridLine::Col(c) if c >= GRID_COLS => Err(bad(&format!("column {c} outside 0..{GRID_COLS}"))),
            _ => Ok(p),
        }
    }

    /// Grid points of the path as `(row, col)`.
    pub fn points(&self) -> Vec<(usize, usize)> {
        match self.line {
            GridLine::Row(r) => (0..GRID_COLS).map(|c| (r, c)).collect(),
            GridLine::Col(c) => (0..GRID_ROWS).map(|r| (r, c)).collect(),
        }
    }

    pub fn label(&self) -> String {
        match self.line {
            GridLine::Row(r) => format!("unit{}_row{r}", self.unit),
            GridLine::Col(c) => format!("unit{}_col{c}", self.unit),
        }
    }
}

/// `1 − |max_pred − max_true| / |max_true|`.
pub fn max_accuracy(pred: &[f64], truth: &[f64]) -> f64 {
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (p, t) = (max(pred), max(truth));
    1.0 - (p - t).abs() / t.abs()
}

/// `position,oracle,prediction,abs_error` rows; position runs from 0 to 1.
pub fn path_table(spec: &PathSpec, pred: &[f64], truth: &[f64]) -> Result<String> {
    let n_units = truth.len() / GRID_POINTS;
    if spec.unit >= n_units || pred.len() != truth.len() {
        return Err(Error::Usage(format!(
            "unit {} outside 0..{n_units} for this case",
            spec.unit
        )));
    }
    let pts = spec.points();
    let mut s = String::from("position,oracle,prediction,abs_error\n");
    for (k, (r, c)) in pts.iter().enumerate() {
        let i = spec.unit * GRID_POINTS + r * GRID_COLS + c;
        let pos = k as f64 / (pts.len() - 1) as f64;
        let _ = writeln!(s, "{pos},{},{},{}", truth[i], pred[i], (pred[i] - truth[i]).abs());
    }
    Ok(s)
}

/// One unit's grid as 10 comma-separated rows of 20 values.
pub fn grid_csv(values: &[f64], unit: usize) -> String {
    let mut s = String::new();
    for r in 0..GRID_ROWS {
        let row: Vec<String> = (0..GRID_COLS)
            .map(|c| values[unit * GRID_POINTS + r * GRID_COLS + c].to_string())
            .collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn cmd_plot(common: &Common, run: &Path, case: usize, path: &str) -> Result<()> {
    let spec = PathSpec::parse(path)?;
    let pred_path = run.join("predictions.json");
    if !pred_path.exists() {
        return Err(Error::Usage(format!(
            "missing input {}; run `hetpanel eval --run {}` first",
            pred_path.display(),
            run.display()
        )));
    }
    let preds: Predictions = read_json(&pred_path)?;
    let cp = preds
        .cases
        .iter()
        .find(|c| c.case == case)
        .ok_or_else(|| Error::Usage(format!("case {case} is not among the evaluated test cases")))?;
    let table = path_table(&spec, &cp.prediction, &cp.target)?;
    let out = common.out.clone().unwrap_or_else(|| run.join("plots"));
    let stem = format!("case{case}_{}_{}", preds.channel.name(), spec.label());
    write_text(&out.join(format!("{stem}.csv")), &table)?;
    write_text(
        &out.join(format!("case{case}_{}_unit{}_oracle.csv", preds.channel.name(), spec.unit)),
        &grid_csv(&cp.target, spec.unit),
    )?;
    write_text(
        &out.join(format!("case{case}_{}_unit{}_prediction.csv", preds.channel.name(), spec.unit)),
        &grid_csv(&cp.prediction, spec.unit),
    )?;
    let acc = max_accuracy(&cp.prediction, &cp.target);
    write_json(
        &out.join(format!("case{case}_{}_summary.json", preds.channel.name())),
        &serde_json::json!({ "case": case, "channel": preds.channel, "max_accuracy": acc }),
    )?;
    print!("{table}");
    println!("max-value accuracy {:.2}% -> {}", 100.0 * acc, out.display());
    Ok(())
}
