//! `latdir`: discover, compare and apply latent directions, and run
//! augmentation experiments.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or validation error,
//! 4 numerical failure.

mod config;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use latdir::augment::{
    execute_plan, imbalance_dataset, seed_latent, serve_oracle, ClassifierOracle, DatasetVariantSpec, Protocol,
    SubprocessOracle,
};
use latdir::directions::{compare_directions, lpp_directions, pca_directions, DirectionSet, Method, WeightMatrix};
use latdir::editor::{apply_edit_batch, LatentCode};
use latdir::io::{read_direction_set, read_matrix, sha256_hex, write_atomic, write_direction_set, write_matrix, SourceInfo};
use latdir::spectral::Regularization;
use ndarray::Array2;

use config::{ConfigError, LoadedConfig, OracleKind};

#[derive(Parser)]
#[command(name = "latdir", version, about = "Latent direction discovery, editing and augmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover directions from a weight matrix and write a manifest.
    Discover {
        #[arg(long, value_parser = parse_method)]
        method: Method,
        /// Weight matrix, one weight vector per row (LDM1 or CSV).
        #[arg(long)]
        weights: PathBuf,
        /// Neighbors per point (LPP only).
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        #[arg(long, default_value_t = 512)]
        components: usize,
        /// `auto` or a non-negative diagonal shift (LPP only).
        #[arg(long, default_value = "auto", value_parser = parse_reg)]
        reg: Regularization,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print angles between two direction sets.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 7)]
        top: usize,
        /// Also write the comparison as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Edit latent codes along one direction.
    Edit {
        #[arg(long)]
        directions: PathBuf,
        /// 0-based direction index.
        #[arg(long)]
        index: usize,
        /// Comma-separated magnitudes, e.g. `-2,-1,1,2`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        alphas: Vec<f64>,
        /// Latent codes, one per row.
        #[arg(long)]
        latents: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an augmentation experiment config and write its report.
    Augment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `rng_seed`.
        #[arg(long)]
        rng_seed: Option<u64>,
        /// Report path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign samples of each class to train/val/test for a dataset variant.
    Split {
        #[arg(long)]
        variant: String,
        /// Number of classes.
        #[arg(long)]
        classes: u32,
        /// Samples per class.
        #[arg(long)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw standard-normal latent codes.
    Sample {
        #[arg(long)]
        count: u64,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the seeded random weight matrix used by the toy generator.
    ToyWeights {
        #[arg(long, default_value_t = 64)]
        rows: usize,
        #[arg(long, default_value_t = 16)]
        cols: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve a config's toy classifier over the subprocess oracle protocol.
    #[command(hide = true)]
    ToyOracle {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: latdir::Error| e.to_string())
}

fn parse_reg(s: &str) -> Result<Regularization, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Regularization::Auto);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.is_finite() => Ok(Regularization::Fixed(x)),
        _ => Err(format!("expected `auto` or a non-negative number, got {s:?}")),
    }
}

enum Failure {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<latdir::Error> for Failure {
    fn from(e: latdir::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Data(e.0)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LATDIR_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let line = rendered.lines().next().unwrap_or("usage error");
            eprintln!("latdir: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = f.message().replace('\n', " ");
            eprintln!("latdir: {msg}");
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Discover { method, weights, k, components, reg, out } => {
            discover(method, &weights, k as usize, components, reg, &out)
        }
        Command::Compare { a, b, top, report } => compare(&a, &b, top, report.as_deref()),
        Command::Edit { directions, index, alphas, latents, out } => edit(&directions, index, &alphas, &latents, &out),
        Command::Augment { config, rng_seed, out } => augment(&config, rng_seed, out.as_deref()),
        Command::Split { variant, classes, per_class, rng_seed, out } => {
            split(&variant, classes, per_class, rng_seed, out.as_deref())
        }
        Command::Sample { count, dim, rng_seed, out } => {
            if dim == 0 {
                return Err(Failure::Usage("--dim must be positive".into()));
            }
            let mut m = Array2::zeros((count as usize, dim));
            for (i, mut row) in m.rows_mut().into_iter().enumerate() {
                row.assign(seed_latent(rng_seed, i as u64, dim).as_array());
            }
            write_matrix(&out, &m)?;
            println!("wrote {count} latent codes of dim {dim} to {}", out.display());
            Ok(())
        }
        Command::ToyWeights { rows, cols, seed, out } => {
            let g = latdir::editor::ToyGenerator::random(rows, cols, seed)?;
            write_matrix(&out, g.matrix())?;
            println!("wrote {rows}x{cols} weights to {}", out.display());
            Ok(())
        }
        Command::ToyOracle { config } => {
            let loaded = LoadedConfig::load(&config)?;
            let plan = loaded.plan()?;
            let generator = loaded.generator()?;
            let mut classifier = loaded.toy_classifier(&generator, &plan.imbalanced_classes)?;
            let stdin = std::io::stdin();
            serve_oracle(stdin.lock(), std::io::stdout().lock(), &mut classifier)?;
            Ok(())
        }
    }
}

fn discover(method: Method, weights: &Path, k: usize, count: usize, reg: Regularization, out: &Path) -> CliResult {
    let bytes = std::fs::read(weights).map_err(|e| Failure::Data(format!("{}: {e}", weights.display())))?;
    let data = latdir::io::decode_matrix(&bytes)?;
    let a = WeightMatrix::new(data)?;
    log::info!("weights {}x{}", a.n_points(), a.latent_dim());
    let set = match method {
        Method::Lpp => lpp_directions(&a, k, count, reg)?,
        Method::Pca => pca_directions(&a, count)?,
    };
    let source = SourceInfo {
        weights_sha256: sha256_hex(&bytes),
        n_points: a.n_points(),
        latent_dim: a.latent_dim(),
    };
    let path = write_direction_set(out, &set, Some(source))?;
    let trivial = set.trivial().iter().filter(|&&t| t).count();
    println!(
        "wrote {}: {} directions by {method}, {trivial} trivial",
        path.display(),
        set.count()
    );
    Ok(())
}

fn load_set(path: &Path) -> CliResult<DirectionSet> {
    let path = if path.is_dir() { path.join(latdir::io::MANIFEST_FILE) } else { path.to_path_buf() };
    read_direction_set(&path)
        .map(|(set, _)| set)
        .map_err(|e| Failure::from(e).prefixed(&path))
}

impl Failure {
    fn prefixed(self, path: &Path) -> Self {
        let add = |m: String| format!("{}: {m}", path.display());
        match self {
            Failure::Usage(m) => Failure::Usage(add(m)),
            Failure::Data(m) => Failure::Data(add(m)),
            Failure::Numerical(m) => Failure::Numerical(add(m)),
        }
    }
}

fn compare(a: &Path, b: &Path, top: usize, report: Option<&Path>) -> CliResult {
    let (sa, sb) = (load_set(a)?, load_set(b)?);
    let r = top.min(sa.count()).min(sb.count());
    if top == 0 {
        return Err(Failure::Usage("--top must be at least 1".into()));
    }
    let cmp = compare_directions(&sa, &sb, r)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{:>9}  {:>9}", "direction", "angle")?;
    for (i, angle) in cmp.pairwise_angles.iter().enumerate() {
        writeln!(out, "{:>9}  {:>8.2}°", i + 1, angle)?;
    }
    let principal: Vec<String> = cmp.principal_angles.iter().map(|x| format!("{x:.2}")).collect();
    writeln!(out, "principal angles (°, top {r}): {}", principal.join(" "))?;
    if let Some(path) = report {
        let mut text = serde_json::to_string_pretty(&cmp)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

fn edit(directions: &Path, index: usize, alphas: &[f64], latents: &Path, out: &Path) -> CliResult {
    let set = load_set(directions)?;
    let codes = read_matrix(latents)?;
    let codes: Vec<LatentCode> = codes
        .rows()
        .into_iter()
        .map(|r| LatentCode::new(r.to_owned()))
        .collect::<Result<_, _>>()?;
    let edited = apply_edit_batch(&codes, &set, index, alphas)?;
    let dim = set.latent_dim();
    let mut m = Array2::zeros((edited.len(), dim));
    for (mut row, z) in m.rows_mut().into_iter().zip(&edited) {
        row.assign(z.as_array());
    }
    write_matrix(out, &m)?;
    println!("wrote {} edited codes to {}", edited.len(), out.display());
    Ok(())
}

fn augment(config: &Path, rng_seed: Option<u64>, out: Option<&Path>) -> CliResult {
    let mut loaded = LoadedConfig::load(config)?;
    if let Some(seed) = rng_seed {
        loaded.config.rng_seed = seed;
    }
    let plan = loaded.plan()?;
    let generator = loaded.generator()?;

    let dirs = if plan.protocol == Protocol::GeometricBaseline {
        None
    } else {
        let c = &loaded.config;
        Some(match &c.directions {
            Some(p) => load_set(&loaded.resolve(p))?,
            None => {
                let w = WeightMatrix::new(generator.matrix().clone())?;
                let count = w.latent_dim();
                match plan.method.expect("validated") {
                    Method::Lpp => lpp_directions(&w, c.k.min(w.n_points() - 1), count, Regularization::Auto)?,
                    Method::Pca => pca_directions(&w, count)?,
                }
            }
        })
    };

    let mut oracle: Box<dyn ClassifierOracle> = match loaded.config.oracle {
        OracleKind::Toy => Box::new(loaded.toy_classifier(&generator, &plan.imbalanced_classes)?),
        OracleKind::Subprocess => {
            let cmd = &loaded.config.oracle_command;
            Box::new(SubprocessOracle::spawn(&cmd[0], &cmd[1..])?)
        }
    };
    let report = execute_plan(&plan, dirs.as_ref(), &generator, oracle.as_mut())?;
    drop(oracle);

    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    let totals = report.total();
    let finals: BTreeMap<_, _> = report.final_train_sizes.iter().collect();
    eprintln!(
        "{:?}: generated {}, accepted {}, rejected {}, final sizes {:?}",
        report.status, totals.generated, totals.accepted, totals.rejected, finals
    );
    Ok(())
}

fn split(variant: &str, classes: u32, per_class: usize, rng_seed: u64, out: Option<&Path>) -> CliResult {
    let spec = DatasetVariantSpec::by_name(variant)
        .ok_or_else(|| Failure::Usage(format!("unknown variant {variant:?}")))?;
    let sizes = (0..classes).map(|c| (c, per_class)).collect();
    let manifest = imbalance_dataset(&sizes, &spec, rng_seed)?;
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    match out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
