mod config;
mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use radonreg::activations::{synth_antisymmetric, synth_rbf_kernel, synth_symmetric, KernelMode, TGrid};
use radonreg::catalog::{catalog_list, catalog_profile, OperatorProfile};
use radonreg::io::{load_dataset, Dataset, ModelFile};
use radonreg::lp::{fit_lp, LpGrid, Psi};
use radonreg::rbf::fit_rbf;
use radonreg::sparse::{build_dictionary, fit_mnorm, MnormOptions};
use radonreg::verify;

use config::{pick, Config};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "radonreg", version, about = "Activation and kernel synthesis, Radon-domain checks and regularized fitting")]
struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized solver starts.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log level: -v info, -vv debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Built-in operator profiles.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Tabulate activations or kernels as CSV.
    Synth {
        #[command(subcommand)]
        what: SynthWhat,
    },
    /// Run a verification suite; exits 1 on failure.
    Verify(VerifyArgs),
    /// Fit a model to a CSV dataset.
    Fit(FitArgs),
    /// Evaluate a model on a CSV file.
    Predict(PredictArgs),
}

#[derive(Subcommand, Debug)]
enum CatalogAction {
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct ProfileArgs {
    /// Catalog profile name.
    #[arg(long)]
    profile: Option<String>,
    /// Profile parameter (m or alpha).
    #[arg(long = "param")]
    params: Vec<f64>,
}

#[derive(Subcommand, Debug)]
enum SynthWhat {
    /// t,value samples of the activation.
    Activation {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long)]
        antisymmetric: bool,
        #[arg(long, default_value_t = 5.0)]
        range: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// r,value samples of the radial kernel.
    Kernel {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Radon)]
        mode: ModeArg,
        #[arg(long, default_value_t = 5.0)]
        range: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Radon,
    Classical,
}

impl From<ModeArg> for KernelMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Radon => KernelMode::Radon,
            ModeArg::Classical => KernelMode::Classical,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum Suite {
    Radon,
    Slice,
    Nu,
    Bounds,
    ClosedForms,
    Duality,
    Equivalence,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    /// Skip the refinement levels.
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    json: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum FitMode {
    Rbf,
    Mnorm,
    Lp,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, value_enum)]
    mode: FitMode,
    /// CSV with header x1..xd,y.
    #[arg(long)]
    data: PathBuf,
    /// Model JSON path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long)]
    antisymmetric: bool,
    #[arg(long)]
    lambda: Option<f64>,
    /// Polynomial degree for rbf mode (default: what the kernel requires).
    #[arg(long)]
    n0: Option<i32>,
    /// rbf kernel mode: radon or classical.
    #[arg(long)]
    kernel_mode: Option<String>,
    /// lp exponent in (1, 2].
    #[arg(long)]
    p: Option<f64>,
    /// lp regularizer shape: linear or square.
    #[arg(long)]
    psi: Option<String>,
    /// mnorm directions for d ≥ 2.
    #[arg(long = "dirs", alias = "n-dirs")]
    n_dirs: Option<usize>,
    /// lp image size; the Radon grid scales with it.
    #[arg(long = "grid-size", alias = "grid-n")]
    grid_n: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// mnorm: least-squares re-solve on the support.
    #[arg(long)]
    resolve: bool,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV with header x1..xd (a trailing y column is allowed).
    #[arg(long)]
    data: PathBuf,
    /// Prediction CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report the mean squared error against the y column.
    #[arg(long)]
    truth: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let seed = cli.seed.or(cfg.seed);
    match cli.command {
        Command::Catalog { action: CatalogAction::List { json } } => catalog(json),
        Command::Synth { what } => synth(what, &cfg),
        Command::Verify(args) => run_verify(args, &cfg),
        Command::Fit(args) => run_fit(args, &cfg, seed),
        Command::Predict(args) => run_predict(args),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn resolve_profile(args: &ProfileArgs, antisymmetric: bool, cfg: &Config) -> Result<OperatorProfile, CliError> {
    let name = args
        .profile
        .clone()
        .or_else(|| cfg.profile.clone())
        .ok_or_else(|| CliError::Usage("--profile is required".into()))?;
    let params = if args.params.is_empty() { cfg.params.clone().unwrap_or_default() } else { args.params.clone() };
    let anti = antisymmetric || cfg.antisymmetric.unwrap_or(false);
    Ok(catalog_profile(&name, &params)?.with_antisymmetric(anti))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn catalog(json: bool) -> Result<(), CliError> {
    let rows = catalog_list();
    if json {
        println!("{}", serde_json::to_string_pretty(&rows).expect("catalog rows serialize"));
        return Ok(());
    }
    println!("{:<28} {:<10} {:>7} {:>7} {:>4}  formula", "name", "params", "gamma0", "gamma1", "n0");
    for r in rows {
        let params: Vec<String> = r.params.iter().map(|p| p.to_string()).collect();
        println!("{:<28} {:<10} {:>7} {:>7} {:>4}  {}", r.name, params.join(","), r.gamma0, r.gamma1, r.n0, r.formula);
    }
    Ok(())
}

fn synth(what: SynthWhat, cfg: &Config) -> Result<(), CliError> {
    match what {
        SynthWhat::Activation { profile, antisymmetric, range, points, out } => {
            let anti = antisymmetric || cfg.antisymmetric.unwrap_or(false);
            let prof = resolve_profile(&profile, anti, cfg)?;
            let act = if anti {
                synth_antisymmetric(&prof, &TGrid::default())?
            } else {
                synth_symmetric(&prof, &TGrid::default())?
            };
            eprintln!("activation {} ({:?}): {}", prof.name, act.parity, act.formula());
            let mut csv = String::from("t,value\n");
            for t in linspace(-range, range, points) {
                csv.push_str(&format!("{t:?},{:?}\n", act.eval(t)));
            }
            write_output(out.as_deref(), &csv)
        }
        SynthWhat::Kernel { profile, dim, mode, range, points, out } => {
            if dim == 0 {
                return Err(CliError::Usage("--dim must be at least 1".into()));
            }
            let prof = resolve_profile(&profile, false, cfg)?;
            let kernel = synth_rbf_kernel(&prof, dim, mode.into())?;
            eprintln!(
                "kernel {} d={dim} {:?}: {} (polynomial degree {})",
                prof.name,
                kernel.mode,
                kernel.closed_form().unwrap_or_else(|| "tabulated".into()),
                kernel.poly_degree
            );
            let mut csv = String::from("r,value\n");
            for r in linspace(0.0, range, points) {
                csv.push_str(&format!("{r:?},{:?}\n", kernel.eval(r)));
            }
            write_output(out.as_deref(), &csv)
        }
    }
}

fn run_verify(args: VerifyArgs, cfg: &Config) -> Result<(), CliError> {
    let quick = args.quick || cfg.quick.unwrap_or(false);
    let report = match args.suite {
        Suite::Radon => verify::suite_radon(quick)?,
        Suite::Slice => verify::suite_slice()?,
        Suite::Nu => verify::suite_nu()?,
        Suite::Bounds => verify::suite_bounds()?,
        Suite::ClosedForms => verify::suite_closed_forms()?,
        Suite::Duality => verify::suite_duality()?,
        Suite::Equivalence => verify::suite_equivalence(quick)?,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{}", report.to_text());
    }
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Verification(failed.join("; ")))
    }
}

fn run_fit(args: FitArgs, cfg: &Config, seed: Option<u64>) -> Result<(), CliError> {
    let data = load_dataset(&args.data, true)?;
    let profile = resolve_profile(&args.profile, args.antisymmetric, cfg)?;
    let lambda = pick(args.lambda, &cfg.lambda, 1e-3);
    let file = match args.mode {
        FitMode::Rbf => {
            let mode: KernelMode = pick(args.kernel_mode, &cfg.kernel_mode, "radon".into()).parse()?;
            let kernel = synth_rbf_kernel(&profile, data.d, mode)?;
            let n0 = pick(args.n0, &cfg.n0, profile.n0.max(kernel.poly_degree));
            let model = fit_rbf(&data.x, &data.y, &kernel, n0, lambda)?;
            let loss = model.training_loss(&data.x, &data.y)?;
            eprintln!("rbf: {} centers, n0 = {n0}, training loss {loss:.3e}, reg cost {:.3e}", model.centers.len(), model.reg_cost());
            ModelFile::from_rbf(&profile, &model)
        }
        FitMode::Mnorm => {
            let act = if profile.antisymmetric_variant {
                synth_antisymmetric(&profile, &TGrid::default())?
            } else {
                synth_symmetric(&profile, &TGrid::default())?
            };
            let dict = build_dictionary(&data.x, pick(args.n_dirs, &cfg.dirs, 64))?;
            let defaults = MnormOptions::default();
            let opts = MnormOptions {
                max_iter: pick(args.max_iter, &cfg.max_iter, defaults.max_iter),
                tol: pick(args.tol, &cfg.tol, defaults.tol),
                seed,
                resolve: args.resolve || cfg.resolve.unwrap_or(false),
                prune: defaults.prune,
            };
            let model = fit_mnorm(&data.x, &data.y, &act, profile.n0, lambda, &dict, &opts)?;
            eprintln!(
                "mnorm: K0 = {} (bound {}), sum|a| = {:.6e}, gap {:.2e}, {} iterations",
                model.k0(),
                model.k0_bound,
                model.reg_cost(),
                model.duality_gap,
                model.iterations
            );
            ModelFile::from_mnorm(&profile, &model)
        }
        FitMode::Lp => {
            if data.d != 2 {
                return Err(CliError::Data(format!("lp mode needs d = 2, the data has d = {}", data.d)));
            }
            let p = pick(args.p, &cfg.p, 1.5);
            let psi: Psi = pick(args.psi, &cfg.psi, "linear".into()).parse()?;
            let grid = match args.grid_n.or(cfg.grid_size) {
                Some(n) => LpGrid::with_size(n),
                None => LpGrid::default(),
            };
            let model = fit_lp(&data.x, &data.y, &profile, p, lambda, psi, grid)?;
            eprintln!(
                "lp: p = {p}, objective {:.6e}, ||s||_q = {:.6e}, {} iterations",
                model.objective,
                model.reg_norm(),
                model.iterations
            );
            ModelFile::from_lp(&profile, &model)
        }
    };
    std::fs::write(&args.out, file.to_json()?)?;
    Ok(())
}

fn run_predict(args: PredictArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.model)?;
    let model = ModelFile::from_json(&text)?.into_model()?;
    let data: Dataset = load_dataset(&args.data, args.truth)?;
    if data.d != model.d() {
        return Err(CliError::Data(format!("dimension mismatch: model has d = {}, data has d = {}", model.d(), data.d)));
    }
    let yhat = model.predict_batch(&data.x)?;
    let mut csv: String = (1..=data.d).map(|i| format!("x{i},")).collect::<String>() + "yhat\n";
    for (x, v) in data.x.iter().zip(&yhat) {
        for c in x {
            csv.push_str(&format!("{c:?},"));
        }
        csv.push_str(&format!("{v:?}\n"));
    }
    write_output(args.out.as_deref(), &csv)?;
    if args.truth {
        let mse = yhat.iter().zip(&data.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / yhat.len() as f64;
        eprintln!("mse {mse:.6e}");
        if args.out.is_some() {
            println!("mse {mse:e}");
        }
    }
    Ok(())
}
