use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use bsrf_core::counterexample::consistency_contrast;
use bsrf_core::data::read_table_file;
use bsrf_core::eval::mean_std;
use bsrf_core::rng::derive_seed;
use bsrf_core::{
    ingest_csv, load_model, measure_geometry, run_benchmark, save_model, train_forest,
    BenchmarkConfig, ContrastConfig, Dataset64, Forest64, ForestParams, LabelColumn, Mode,
    ParamGrid, Strategy, StrategyKind,
};
use clap::error::ErrorKind;
use clap::CommandFactory;
use rayon::prelude::*;

use crate::config::{list, single, FileConfig, OneOrMany};
use crate::{
    BenchmarkArgs, Cli, Command, CounterexampleArgs, DataArgs, ForestArgs, GeometryArgs,
    PredictArgs, TrainArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(threads) = cli.threads.or(file.threads) {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    match cli.command {
        Command::Train(args) => train(args, file),
        Command::Predict(args) => predict(args, file),
        Command::Benchmark(args) => benchmark(args, file),
        Command::Counterexample(args) => counterexample(args, file),
        Command::Geometry(args) => geometry(args, file),
    }
}

/// Hyperparameter defaults of a subcommand.
struct Defaults {
    trees: usize,
    candidates: usize,
    strategy: StrategyKind,
    lambda: f64,
    splits: usize,
    folds: usize,
    mode: Mode,
    cut_width: f64,
}

const TRAIN_DEFAULTS: Defaults = Defaults {
    trees: 11,
    candidates: 5,
    strategy: StrategyKind::CrossValidated,
    lambda: 1e-3,
    splits: 50,
    folds: 10,
    mode: Mode::Adaptive,
    cut_width: 0.5,
};

const CONTRAST_DEFAULTS: Defaults = Defaults {
    splits: 20,
    ..TRAIN_DEFAULTS
};

fn parse_strings<T>(name: &str, values: Option<OneOrMany<String>>) -> Result<Option<OneOrMany<T>>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let Some(values) = values else {
        return Ok(None);
    };
    let parsed = values
        .into_vec()
        .iter()
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| anyhow!("config key {name}: {e}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(OneOrMany::Many(parsed)))
}

fn forest_params(
    args: ForestArgs,
    file: &FileConfig,
    d: &Defaults,
    seed: u64,
) -> Result<ForestParams> {
    let strategy_kind = single(
        "strategy",
        args.strategy,
        parse_strings("strategy", file.strategy.clone())?,
        d.strategy,
    )?;
    let strategy = match strategy_kind {
        StrategyKind::Regularized => Strategy::Regularized {
            lambda: single("lambda", args.lambda, file.lambda.clone(), d.lambda)?,
        },
        StrategyKind::CrossValidated => Strategy::CrossValidated {
            splits: single("splits", args.splits, file.splits.clone(), d.splits)?,
            folds: args.folds.or(file.folds).unwrap_or(d.folds),
        },
    };
    let params = ForestParams {
        trees: single("trees", args.trees, file.trees.clone(), d.trees)?,
        candidates: single(
            "candidates",
            args.candidates,
            file.candidates.clone(),
            d.candidates,
        )?,
        strategy,
        mode: single(
            "mode",
            args.mode,
            parse_strings("mode", file.mode.clone())?,
            d.mode,
        )?,
        cut_width: single(
            "cut-width",
            args.cut_width,
            file.cut_width.clone(),
            d.cut_width,
        )?,
        seed,
    };
    params.validate()?;
    Ok(params)
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| {
        anyhow!(
            "missing --{flag} (or `{}` in the config file)",
            flag.replace('-', "_")
        )
    })
}

fn load_dataset(args: DataArgs, file: &FileConfig) -> Result<(PathBuf, Dataset64)> {
    let path = required(args.data.or_else(|| file.data.clone()), "data")?;
    let column = required(
        args.label_column.or_else(|| file.label_column.clone()),
        "label-column",
    )?;
    let positive = args.positive_label.or_else(|| file.positive_label.clone());
    let ds = ingest_csv(&path, &LabelColumn::parse(&column), positive.as_deref())
        .with_context(|| format!("cannot load data set {}", path.display()))?;
    Ok((path, ds))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes to `out`, or to standard output when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn csv_text(rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    Ok(String::from_utf8(bytes)?)
}

fn train(args: TrainArgs, file: FileConfig) -> Result<()> {
    let seed = required(args.seed.or(file.seed), "seed")?;
    let out = required(args.out.or_else(|| file.out.clone()), "out")?;
    let (path, ds) = load_dataset(args.data, &file)?;
    let params = forest_params(args.forest, &file, &TRAIN_DEFAULTS, seed)?;

    let start = Instant::now();
    let forest = train_forest(&ds, &params)?;
    let elapsed = start.elapsed();
    save_model(&forest, &out).with_context(|| format!("cannot save model {}", out.display()))?;

    println!(
        "trained {} trees on {} ({} rows, d = {}), strategy {}",
        forest.trees().len(),
        path.display(),
        ds.len(),
        ds.dim(),
        params.strategy
    );
    println!(
        "{:>5} {:>6} {:>12} {:>12}",
        "tree", "p", "criterion", "train_risk"
    );
    for (t, tree) in forest.trees().iter().enumerate() {
        println!(
            "{:>5} {:>6} {:>12.6} {:>12.6}",
            t,
            tree.p(),
            tree.score().criterion(),
            tree.score().risk()
        );
    }
    println!("model written to {}", out.display());
    eprintln!("wall-clock: {:.3} s", elapsed.as_secs_f64());
    Ok(())
}

fn predict(args: PredictArgs, file: FileConfig) -> Result<()> {
    let model = required(args.model.or_else(|| file.model.clone()), "model")?;
    let data = required(args.data.or_else(|| file.data.clone()), "data")?;
    let forest: Forest64 =
        load_model(&model).with_context(|| format!("cannot load model {}", model.display()))?;
    let column = args
        .label_column
        .or_else(|| file.label_column.clone())
        .map(|c| LabelColumn::parse(&c));
    let table = read_table_file(&data, column.as_ref())
        .with_context(|| format!("cannot read {}", data.display()))?;
    if table.dim != forest.dim() {
        bail!(
            "{}: model expects {} feature columns, found {}",
            data.display(),
            forest.dim(),
            table.dim
        );
    }
    let features = match forest.scaling() {
        Some(scaling) => table.scaled::<f64>(scaling)?,
        None => table.values.clone(),
    };
    let predictions = features
        .par_chunks(table.dim)
        .map(|x| forest.predict(x))
        .collect::<bsrf_core::Result<Vec<_>>>()
        .with_context(|| format!("cannot score {}", data.display()))?;

    let rows = std::iter::once(vec!["row".to_string(), "prediction".to_string()]).chain(
        predictions
            .iter()
            .enumerate()
            .map(|(i, l)| vec![i.to_string(), l.to_string()]),
    );
    emit(
        args.out.or_else(|| file.out.clone()).as_deref(),
        &csv_text(rows)?,
    )
}

fn benchmark(args: BenchmarkArgs, file: FileConfig) -> Result<()> {
    let seed = required(args.seed.or(file.seed), "seed")?;
    let out = required(args.out.or_else(|| file.out.clone()), "out")?;
    let (path, ds) = load_dataset(args.data, &file)?;
    let defaults = ParamGrid::default();
    let f = args.forest;
    let grid = ParamGrid {
        trees: list(f.trees, file.trees.clone(), &defaults.trees),
        candidates: list(f.candidates, file.candidates.clone(), &defaults.candidates),
        lambdas: list(f.lambda, file.lambda.clone(), &defaults.lambdas),
        splits: list(f.splits, file.splits.clone(), &defaults.splits),
        cut_widths: list(f.cut_width, file.cut_width.clone(), &defaults.cut_widths),
        modes: list(
            f.mode,
            parse_strings("mode", file.mode.clone())?,
            &defaults.modes,
        ),
        strategies: list(
            f.strategy,
            parse_strings("strategy", file.strategy.clone())?,
            &defaults.strategies,
        ),
        selection_folds: f.folds.or(file.folds).unwrap_or(defaults.selection_folds),
    };
    let base = BenchmarkConfig::default();
    let config = BenchmarkConfig {
        repeats: args.repeats.or(file.repeats).unwrap_or(base.repeats),
        train_fraction: args
            .train_fraction
            .or(file.train_fraction)
            .unwrap_or(base.train_fraction),
        search_folds: args
            .search_folds
            .or(file.search_folds)
            .unwrap_or(base.search_folds),
        seed,
    };
    let name = args
        .name
        .or_else(|| file.name.clone())
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "data".into());

    let start = Instant::now();
    let report = run_benchmark(&ds, &name, &grid, &config)?;
    std::fs::create_dir_all(&out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    let mut summary = Vec::new();
    report.write_summary_csv(&mut summary)?;
    write_file(&out.join("summary.csv"), &summary)?;
    let mut repeats = Vec::new();
    report.write_repeats_csv(&mut repeats)?;
    write_file(&out.join("repeats.csv"), &repeats)?;
    let table = report.text_table();
    write_file(&out.join("table.txt"), table.as_bytes())?;
    print!("{table}");
    eprintln!("wall-clock: {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn counterexample(args: CounterexampleArgs, file: FileConfig) -> Result<()> {
    let seed = required(args.seed.or(file.seed), "seed")?;
    let dim = args.dim.or(file.dim).unwrap_or(4);
    let samples = args.samples.or(file.samples).unwrap_or(2000);
    let test_samples = args.test_samples.or(file.test_samples).unwrap_or(samples);
    let trials = args.trials.or(file.trials).unwrap_or(50);
    if trials == 0 {
        bail!("--trials must be at least 1");
    }
    let restricted_dims = if args.restricted_dims.is_empty() {
        file.restricted_dims.clone().unwrap_or_else(|| vec![0])
    } else {
        args.restricted_dims
    };
    let config = ContrastConfig {
        restricted_dims,
        full: forest_params(args.forest, &file, &CONTRAST_DEFAULTS, seed)?,
        n_test: test_samples,
    };

    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| consistency_contrast::<f64>(dim, samples, derive_seed(seed, t as u64), &config))
        .collect::<bsrf_core::Result<Vec<_>>>()?;

    let restricted: Vec<f64> = outcomes.iter().map(|o| o.restricted_error).collect();
    let full: Vec<f64> = outcomes.iter().map(|o| o.full_error).collect();
    let (r_mean, r_std) = mean_std(&restricted);
    let (f_mean, f_std) = mean_std(&full);
    let header = [
        "trial",
        "d",
        "n_train",
        "n_test",
        "restricted_error",
        "full_error",
    ];
    let row = |trial: String, r: f64, f: f64| {
        vec![
            trial,
            dim.to_string(),
            samples.to_string(),
            test_samples.to_string(),
            format!("{r:.6}"),
            format!("{f:.6}"),
        ]
    };
    let rows = std::iter::once(header.iter().map(|s| s.to_string()).collect())
        .chain(
            outcomes
                .iter()
                .enumerate()
                .map(|(t, o)| row(t.to_string(), o.restricted_error, o.full_error)),
        )
        .chain([
            row("mean".into(), r_mean, f_mean),
            row("std".into(), r_std, f_std),
        ]);
    let out = args.out.or_else(|| file.out.clone());
    emit(out.as_deref(), &csv_text(rows)?)?;
    if out.is_some() {
        println!(
            "restricted error {r_mean:.4} (±{r_std:.4}), full error {f_mean:.4} (±{f_std:.4}) over {trials} trials"
        );
    }
    Ok(())
}

fn geometry(args: GeometryArgs, file: FileConfig) -> Result<()> {
    let seed = required(args.seed.or(file.seed), "seed")?;
    let dim = args.dim.or(file.dim).unwrap_or(2);
    let grid = if !args.grid.is_empty() {
        args.grid
    } else {
        file.grid.clone().unwrap_or_else(|| vec![16, 64, 256, 1024])
    };
    if grid.is_empty() {
        Cli::command()
            .error(ErrorKind::InvalidValue, "the split grid is empty")
            .exit();
    }
    let trials = args.trials.or(file.trials).unwrap_or(200);
    let cut_width = args
        .cut_width
        .or_else(|| {
            file.cut_width
                .clone()
                .and_then(|c| c.into_vec().first().copied())
        })
        .unwrap_or(0.5);

    let reports = measure_geometry::<f64>(dim, &grid, trials, cut_width, seed)?;
    let mut header = vec!["p".to_string(), "trials".into(), "mean_max_diameter".into()];
    header.extend((0..dim).map(|j| format!("mean_max_side_{j}")));
    let rows = std::iter::once(header).chain(reports.iter().map(|r| {
        let mut row = vec![
            r.split_count.to_string(),
            r.trials.to_string(),
            r.mean_max_diameter().to_string(),
        ];
        row.extend((0..dim).map(|j| r.mean_max_side(j).to_string()));
        row
    }));
    emit(
        args.out.or_else(|| file.out.clone()).as_deref(),
        &csv_text(rows)?,
    )
}
