//! `lol`: simulate, fit, embed, benchmark and test from the command line.
//!
//! Exit codes: 0 on success, 1 when a run fails (a JSON error object is
//! written to stderr), 2 for invalid arguments.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lol_core::chernoff::{chernoff_pairwise_min, gap_sweep, lol_quadform_closed, pca_quadform_closed};
use lol_core::classify::{bayes_error_monte_carlo, bayes_error_two_class, ClassifierKind};
use lol_core::embed::{embed_matrix, fit, read_projection_binary, read_projection_csv, write_projection_binary, write_projection_csv, FitOptions};
use lol_core::extensions::{lol_regression, pls_regression, projected_test_power, projected_test_pvalue, Calibration, TestOptions, DEFAULT_REGRESSION_BINS};
use lol_core::harness::{load_csv, report_json, run_benchmark, write_curves_csv, BenchmarkConfig, CsvOptions, LabelColumn, SweepOptions};
use lol_core::linalg::SvdMode;
use lol_core::rng::stream;
use lol_core::scaling::{parse_sweep, scale_sweep, ScaleAxis, ScaleConfig};
use lol_core::sim::{sample, sample_regression, Family, LabelScheme, Sample, SimSpec};
use lol_core::{Error, Method, Projection, RngSeed};

#[derive(Parser, Debug)]
#[command(name = "lol", version, about = "Linear Optimal Low-rank projections and friends")]
struct Cli {
    /// Master seed; every random choice is derived from it.
    #[arg(long, global = true, env = "LOL_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = available parallelism).
    #[arg(long, global = true, env = "LOL_THREADS", default_value_t = 0)]
    threads: usize,
    /// Directory for output files.
    #[arg(long, global = true, env = "LOL_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a synthetic dataset; writes data.csv and model.json.
    Sim(SimArgs),
    /// Fit a projection to a labelled CSV.
    Fit(FitArgs),
    /// Apply a saved projection to a labelled CSV.
    Embed(EmbedArgs),
    /// Cross-validated benchmark; writes curves.csv and report.json.
    Bench(BenchArgs),
    /// Chernoff-information reports and property sweeps.
    Chernoff(ChernoffArgs),
    /// Projection followed by a two-sample Hotelling test.
    Test(TestArgs),
    /// Quantile-partitioned LOL regression against a PLS baseline.
    Regress(RegressArgs),
    /// Time projection fits over a sweep of p, n or thread count; writes scale.csv.
    Scale(ScaleArgs),
}

#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    #[arg(long, default_value = "trunk")]
    family: String,
    #[arg(long, default_value_t = 100)]
    p: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Family shape parameter `a` (family default when unset).
    #[arg(long)]
    a: Option<f64>,
    /// Family shape parameter `b` (family default when unset).
    #[arg(long)]
    b: Option<f64>,
    /// Toeplitz decay.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Mean-shift norm of the Toeplitz families.
    #[arg(long, default_value_t = 1.0)]
    signal: f64,
    /// Mean-difference norm of the spherical family.
    #[arg(long, default_value_t = lol_core::sim::SPHERICAL_SEPARATION)]
    separation: f64,
    #[arg(long, default_value_t = 0.7)]
    inlier_fraction: f64,
    /// Noise standard deviation of the regression target.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, value_enum, default_value_t = Labels::Iid)]
    labels: Labels,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Labels {
    Iid,
    Balanced,
}

impl FamilyArgs {
    fn spec(&self, seed: u64) -> Result<SimSpec, Error> {
        let family: Family = self.family.parse()?;
        let mut spec = SimSpec::new(family, self.p, self.n, seed);
        spec.a = self.a;
        spec.b = self.b;
        spec.rho = self.rho;
        spec.signal = self.signal;
        spec.separation = self.separation;
        spec.inlier_fraction = self.inlier_fraction;
        spec.noise = self.noise;
        spec.labels = match self.labels {
            Labels::Iid => LabelScheme::Iid,
            Labels::Balanced => LabelScheme::Balanced,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct SimArgs {
    #[command(flatten)]
    family: FamilyArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Svd {
    Auto,
    Exact,
    Randomized,
}

impl From<Svd> for SvdMode {
    fn from(s: Svd) -> Self {
        match s {
            Svd::Auto => SvdMode::Auto,
            Svd::Exact => SvdMode::Exact,
            Svd::Randomized => SvdMode::randomized(),
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ProjFormat {
    Bin,
    Csv,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Delimited text file with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Label column, by name or zero-based index (default: last column).
    #[arg(long)]
    label: Option<String>,
}

impl InputArgs {
    fn options(&self) -> Result<CsvOptions, Error> {
        Ok(CsvOptions {
            label: match &self.label {
                Some(l) => l.parse()?,
                None => LabelColumn::Last,
            },
            delimiter: None,
        })
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "lol")]
    method: String,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, value_enum, default_value_t = Svd::Auto)]
    svd: Svd,
    #[arg(long, value_enum, default_value_t = ProjFormat::Bin)]
    format: ProjFormat,
    /// Output file name inside the output directory.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Projection written by `fit` (binary or CSV, told apart by content).
    #[arg(long)]
    projection: PathBuf,
    #[arg(long, default_value = "embedded.csv")]
    output: String,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated algorithm list.
    #[arg(long, default_value = "lol,pca,rrlda,cca,pls,rp")]
    algs: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Largest embedding dimension (default min(p-1, 100, n_train-1)).
    #[arg(long)]
    d_max: Option<usize>,
    #[arg(long, value_enum, default_value_t = Clf::Lda)]
    classifier: Clf,
    #[arg(long, value_enum, default_value_t = Svd::Auto)]
    svd: Svd,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Clf {
    Lda,
    Qda,
}

#[derive(Args, Debug)]
struct ChernoffArgs {
    #[command(subcommand)]
    what: ChernoffCmd,
}

#[derive(Subcommand, Debug)]
enum ChernoffCmd {
    /// Random instances checking LOL against the top-d eigenvector projection.
    Sweep {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 30)]
        max_p: usize,
    },
    /// The diag(4,2,1) example where PCA keeps no discriminant information.
    Counterexample,
    /// Chernoff information and Bayes error of a population under a fitted projection.
    Project {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value = "lol")]
        method: String,
        #[arg(long, default_value_t = 5)]
        d: usize,
        /// Monte Carlo samples when no closed-form Bayes error applies.
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum CalibrationArg {
    Parametric,
    Split,
    Permutation,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Test this labelled CSV once instead of simulating.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value = "lol")]
    method: String,
    #[arg(long, default_value_t = 5)]
    d: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, value_enum, default_value_t = CalibrationArg::Permutation)]
    calibration: CalibrationArg,
    #[arg(long, default_value_t = 39)]
    permutations: usize,
    #[arg(long, value_enum, default_value_t = Svd::Auto)]
    svd: Svd,
}

#[derive(Args, Debug)]
struct RegressArgs {
    #[arg(long, default_value_t = 100)]
    p: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 5)]
    d: usize,
    /// Quantile classes for the LOL fit.
    #[arg(long, default_value_t = DEFAULT_REGRESSION_BINS)]
    k: usize,
    #[arg(long, default_value_t = 20)]
    reps: usize,
}

#[derive(Args, Debug)]
struct ScaleArgs {
    /// Sweep over p, e.g. `10000:80000:x2` or `1000,2000`.
    #[arg(long, group = "axis")]
    p_sweep: Option<String>,
    #[arg(long, group = "axis")]
    n_sweep: Option<String>,
    #[arg(long, group = "axis")]
    thread_sweep: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    p: usize,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value = "lol")]
    method: String,
    #[arg(long, value_enum, default_value_t = Svd::Randomized)]
    svd: Svd,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value = "scale.csv")]
    output: String,
}

/// Writes through a temporary file in the target directory, then renames it
/// into place, so a failed run never leaves a partial file.
fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> Result<(), Error> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn parse_methods(list: &str) -> Result<Vec<Method>, Error> {
    let mut out = Vec::new();
    for m in list.split(',').filter(|s| !s.trim().is_empty()) {
        let m: Method = m.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no algorithms given".into()));
    }
    Ok(out)
}

/// Samples as rows: `x1..xp` then a label (or target) column.
fn write_table(w: &mut dyn Write, x: &nalgebra::DMatrix<f64>, last_name: &str, last: &[String]) -> Result<(), Error> {
    let p = x.nrows();
    let header: Vec<String> = (1..=p).map(|i| format!("x{i}")).chain([last_name.to_string()]).collect();
    writeln!(w, "{}", header.join(","))?;
    for (j, col) in x.column_iter().enumerate() {
        let mut line = String::with_capacity(p * 12);
        for v in col.iter() {
            line.push_str(&v.to_string());
            line.push(',');
        }
        line.push_str(&last[j]);
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn cmd_sim(cli: &Cli, args: &SimArgs) -> Result<(), Error> {
    let spec = args.family.spec(cli.seed)?;
    let data = cli.output_dir.join("data.csv");
    let model = cli.output_dir.join("model.json");
    match sample(&spec)? {
        Sample::Classification(s) => {
            let labels: Vec<String> = s.dataset.labels().iter().map(usize::to_string).collect();
            write_atomic(&data, |w| write_table(w, s.dataset.data().values(), "label", &labels))?;
            let meta = serde_json::json!({ "spec": spec, "model": s.model, "outliers": s.outliers });
            write_atomic(&model, |w| Ok(serde_json::to_writer_pretty(w, &meta)?))?;
        }
        Sample::Regression(s) => {
            let y: Vec<String> = s.y.iter().map(f64::to_string).collect();
            write_atomic(&data, |w| write_table(w, s.x.values(), "target", &y))?;
            let meta = serde_json::json!({ "spec": spec, "model": s.model });
            write_atomic(&model, |w| Ok(serde_json::to_writer_pretty(w, &meta)?))?;
        }
    }
    print_json(&serde_json::json!({ "data": data, "model": model, "p": spec.p, "n": spec.n }))
}

fn cmd_fit(cli: &Cli, args: &FitArgs) -> Result<(), Error> {
    let loaded = load_csv(&args.input.input, &args.input.options()?)?;
    let method: Method = args.method.parse()?;
    let opts = FitOptions {
        svd_mode: args.svd.into(),
        seed: RngSeed(cli.seed),
        orthonormalize: false,
    };
    let proj = fit(method, &loaded.dataset, args.d, &opts)?;
    let name = args.output.clone().unwrap_or_else(|| match args.format {
        ProjFormat::Bin => "projection.bin".into(),
        ProjFormat::Csv => "projection.csv".into(),
    });
    let path = cli.output_dir.join(name);
    write_atomic(&path, |w| match args.format {
        ProjFormat::Bin => write_projection_binary(&proj, w),
        ProjFormat::Csv => write_projection_csv(&proj, w),
    })?;
    print_json(&serde_json::json!({
        "projection": path, "method": method, "p": proj.p(), "d": proj.d(),
        "n": loaded.dataset.n(), "features": loaded.feature_names, "dropped_rows": loaded.dropped_rows,
    }))
}

fn read_projection(path: &Path) -> Result<Projection, Error> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(b"LOLPROJ") {
        read_projection_binary(bytes.as_slice())
    } else {
        read_projection_csv(bytes.as_slice())
    }
}

fn cmd_embed(cli: &Cli, args: &EmbedArgs) -> Result<(), Error> {
    let loaded = load_csv(&args.input.input, &args.input.options()?)?;
    let proj = read_projection(&args.projection)?;
    let z = embed_matrix(&proj, loaded.dataset.data().values())?;
    let labels: Vec<String> = loaded.dataset.labels().iter().map(|&l| loaded.label_names[l].clone()).collect();
    let path = cli.output_dir.join(&args.output);
    write_atomic(&path, |w| write_table(w, &z, "label", &labels))?;
    print_json(&serde_json::json!({ "embedded": path, "d": proj.d(), "n": z.ncols() }))
}

fn cmd_bench(cli: &Cli, args: &BenchArgs) -> Result<(), Error> {
    let loaded = load_csv(&args.input.input, &args.input.options()?)?;
    let config = BenchmarkConfig {
        methods: parse_methods(&args.algs)?,
        k: args.k,
        d_max: args.d_max,
        seed: RngSeed(cli.seed),
        sweep: SweepOptions {
            classifier: match args.classifier {
                Clf::Lda => ClassifierKind::Lda,
                Clf::Qda => ClassifierKind::Qda,
            },
            fit: FitOptions {
                svd_mode: args.svd.into(),
                ..FitOptions::default()
            },
            refit_per_r: false,
        },
    };
    let (curves, report) = run_benchmark(&loaded.dataset, &config)?;
    let curves_path = cli.output_dir.join("curves.csv");
    let report_path = cli.output_dir.join("report.json");
    write_atomic(&curves_path, |w| write_curves_csv(&curves, w))?;
    let json = report_json(&report)?;
    write_atomic(&report_path, |w| Ok(w.write_all(json.as_bytes())?))?;
    print_json(&serde_json::json!({ "curves": curves_path, "report": report_path }))
}

fn cmd_chernoff(cli: &Cli, args: &ChernoffArgs) -> Result<(), Error> {
    match &args.what {
        ChernoffCmd::Sweep { instances, max_p } => print_json(&gap_sweep(*instances, *max_p, RngSeed(cli.seed))),
        ChernoffCmd::Counterexample => {
            let sigma = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 2.0, 1.0]));
            let delta = nalgebra::DVector::from_vec(vec![0.0, 0.0, 1.0]);
            print_json(&serde_json::json!({
                "sigma_diag": [4.0, 2.0, 1.0], "delta": [0.0, 0.0, 1.0], "d": 2,
                "pca_quadform": pca_quadform_closed(&delta, &sigma, 2)?,
                "lol_quadform": lol_quadform_closed(&delta, &sigma, 2)?,
            }))
        }
        ChernoffCmd::Project { family, method, d, mc_samples } => {
            let spec = family.spec(cli.seed)?;
            let s = match sample(&spec)? {
                Sample::Classification(s) => s,
                Sample::Regression(_) => return Err(Error::InvalidInput("chernoff needs a classification family".into())),
            };
            let method: Method = method.parse()?;
            let proj = fit(method, &s.dataset, *d, &FitOptions::with_seed(cli.seed))?;
            let a = &proj.directions;
            let chernoff = chernoff_pairwise_min(&s.model, Some(a))?;
            let full = chernoff_pairwise_min(&s.model, None)?;
            let closed = s.model.num_classes() == 2 && s.model.shared_cov().is_some();
            let bayes = if closed {
                bayes_error_two_class(&s.model, Some(a))?
            } else {
                bayes_error_monte_carlo(&s.model, Some(a), *mc_samples, RngSeed(cli.seed).derive(stream::MONTE_CARLO, 0))?.estimate
            };
            print_json(&serde_json::json!({
                "method": method, "d": proj.d(), "chernoff_projected": chernoff, "chernoff_full": full,
                "bayes_error_projected": bayes, "bayes_error_closed_form": closed,
            }))
        }
    }
}

fn cmd_test(cli: &Cli, args: &TestArgs) -> Result<(), Error> {
    let method: Method = args.method.parse()?;
    let opts = TestOptions {
        calibration: match args.calibration {
            CalibrationArg::Parametric => Calibration::Parametric,
            CalibrationArg::Split => Calibration::SplitSample,
            CalibrationArg::Permutation => Calibration::Permutation { permutations: args.permutations },
        },
        svd_mode: args.svd.into(),
    };
    if let Some(input) = &args.input {
        let csv = InputArgs {
            input: input.clone(),
            label: args.label.clone(),
        };
        let loaded = load_csv(input, &csv.options()?)?;
        let p_value = projected_test_pvalue(&loaded.dataset, method, args.d, RngSeed(cli.seed), &opts)?;
        return print_json(&serde_json::json!({
            "method": method, "d": args.d, "calibration": opts.calibration,
            "p_value": p_value, "reject": p_value <= args.alpha, "alpha": args.alpha,
        }));
    }
    let spec = args.family.spec(cli.seed)?;
    let est = projected_test_power(&spec, method, args.d, args.alpha, args.reps, RngSeed(cli.seed), &opts)?;
    print_json(&serde_json::json!({
        "family": spec.family, "p": spec.p, "n": spec.n, "rho": spec.rho, "signal": spec.signal,
        "method": method, "d": args.d, "alpha": args.alpha, "calibration": opts.calibration, "power": est,
    }))
}

fn cmd_regress(cli: &Cli, args: &RegressArgs) -> Result<(), Error> {
    let seed = RngSeed(cli.seed);
    let mut lol = Vec::with_capacity(args.reps);
    let mut pls = Vec::with_capacity(args.reps);
    for r in 0..args.reps {
        let mut spec = SimSpec::new(Family::RegressionLinear, args.p, args.n, seed.derive(stream::REPLICATE, r as u64));
        spec.rho = args.rho;
        spec.noise = args.noise;
        let train = sample_regression(&spec)?;
        let test = sample_regression(&spec.with_seed(spec.seed.derive(stream::REPLICATE, 0)).with_n(args.n_test))?;
        let opts = FitOptions::with_seed(spec.seed);
        lol.push(lol_regression(&train.x, &train.y, args.k, args.d, &opts)?.mse(test.x.values(), &test.y)?);
        pls.push(pls_regression(&train.x, &train.y, args.d)?.mse(test.x.values(), &test.y)?);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    print_json(&serde_json::json!({
        "p": args.p, "n": args.n, "rho": args.rho, "d": args.d, "k": args.k, "reps": args.reps,
        "lol_mse_mean": mean(&lol), "pls_mse_mean": mean(&pls), "lol_mse": lol, "pls_mse": pls,
    }))
}

fn cmd_scale(cli: &Cli, args: &ScaleArgs) -> Result<(), Error> {
    let axis = match (&args.p_sweep, &args.n_sweep, &args.thread_sweep) {
        (Some(s), None, None) => ScaleAxis::P(parse_sweep(s)?),
        (None, Some(s), None) => ScaleAxis::N(parse_sweep(s)?),
        (None, None, Some(s)) => ScaleAxis::Threads(parse_sweep(s)?),
        _ => return Err(Error::InvalidInput("give exactly one of --p-sweep, --n-sweep, --thread-sweep".into())),
    };
    let mut cfg = ScaleConfig::new(axis);
    cfg.p = args.p;
    cfg.n = args.n;
    cfg.d = args.d;
    cfg.threads = cli.threads;
    cfg.method = args.method.parse()?;
    cfg.svd_mode = args.svd.into();
    cfg.repeats = args.repeats;
    cfg.seed = RngSeed(cli.seed);
    let rows = scale_sweep(&cfg)?;
    let path = cli.output_dir.join(&args.output);
    write_atomic(&path, |w| {
        writeln!(w, "p,n,threads,d,seconds,ratio")?;
        for r in &rows {
            let ratio = r.ratio.map_or(String::new(), |v| format!("{v:.4}"));
            writeln!(w, "{},{},{},{},{:.6},{ratio}", r.p, r.n, r.threads, r.d, r.seconds)?;
        }
        Ok(())
    })?;
    print_json(&serde_json::json!({ "timings": path, "rows": rows }))
}

fn run(cli: &Cli) -> Result<(), Error> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    match &cli.command {
        Command::Sim(a) => cmd_sim(cli, a),
        Command::Fit(a) => cmd_fit(cli, a),
        Command::Embed(a) => cmd_embed(cli, a),
        Command::Bench(a) => cmd_bench(cli, a),
        Command::Chernoff(a) => cmd_chernoff(cli, a),
        Command::Test(a) => cmd_test(cli, a),
        Command::Regress(a) => cmd_regress(cli, a),
        Command::Scale(a) => cmd_scale(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::from(1)
        }
    }
}
