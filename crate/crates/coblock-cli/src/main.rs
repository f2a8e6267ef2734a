//! Batch front end: fit, simulate, evaluate, study.
//!
//! Exit codes: 0 success, 1 input/data errors (with file and line where
//! known), 2 usage errors (bad flags or flag combinations).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coblock::heatmap::{render_heatmap, write_study_plot};
use coblock::report::{write_trace_csv, FitReport};
use coblock::search::resolved_inits;
use coblock::sim::{load_truth, write_truth, GeneratorSpec};
use coblock::study::{mean_nmi_by_q, run_study, write_study_csv, StudyConfig};
use coblock::{
    combined_nmi, fit, BipartiteAdjacency, Error, ModelKind, PriorConfig, SearchConfig,
};

#[derive(Parser)]
#[command(
    name = "coblock",
    version,
    about = "Co-clusters bipartite matrices by greedy search over an exact integrated likelihood"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit row and column clusters to a matrix
    Fit(FitArgs),
    /// Generate a matrix from the blockmodel, with true labels
    Simulate(SimulateArgs),
    /// Score a fit report against true labels (combined NMI)
    Evaluate(EvaluateArgs),
    /// Sweep the diagonal benchmark over a noise grid
    Study(StudyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    /// One whitespace- or comma-separated row per line
    Dense,
    /// Header "N M nnz", then 1-based "i j value" triplets
    Sparse,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Bernoulli,
    Categorical,
    Poisson,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    /// Visit every cell of each block
    Dense,
    /// Visit stored nonzeros, fold zeros in per block
    Sparse,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct FitArgs {
    /// Matrix file
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FileFormat::Dense)]
    format: FileFormat,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Number of categories (categorical model only)
    #[arg(long)]
    categories: Option<u32>,
    /// Initial row clusters (default: min(rows, 50))
    #[arg(long)]
    kmax: Option<usize>,
    /// Initial column clusters (default: min(columns, 50))
    #[arg(long)]
    gmax: Option<usize>,
    /// Row label concentration
    #[arg(long, default_value_t = 1.0)]
    alpha0: f64,
    /// Column label concentration
    #[arg(long, default_value_t = 1.0)]
    beta0: f64,
    /// Beta prior strength (bernoulli)
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Dirichlet prior strength (categorical)
    #[arg(long, default_value_t = 1.0)]
    zeta: f64,
    /// Rate prior shape (poisson) / precision prior rate scale (gaussian)
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Rate prior rate (poisson) / precision prior shape scale (gaussian)
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Prior mean (gaussian)
    #[arg(long, default_value_t = 0.0)]
    xi: f64,
    /// Prior mean precision scale (gaussian)
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Permanently drop move candidates far behind the best
    #[arg(long, value_enum, default_value_t = Toggle::Off)]
    prune: Toggle,
    #[arg(long, value_enum, default_value_t = EngineArg::Dense)]
    engine: EngineArg,
    #[arg(long, default_value_t = 1)]
    restarts: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads across restarts (does not change results)
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Fit report destination
    #[arg(long)]
    output: PathBuf,
    /// Re-ordered matrix image (.ppm for binary PPM, SVG otherwise)
    #[arg(long)]
    heatmap: Option<PathBuf>,
    /// Per-sweep objective CSV
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Rows
    #[arg(long)]
    n: usize,
    /// Columns
    #[arg(long)]
    m: usize,
    /// Clusters per side for the diagonal design (requires --q)
    #[arg(long)]
    k: Option<usize>,
    /// Off-diagonal edge probability; diagonal blocks get 1-q
    #[arg(long, value_parser = parse_unit_interval)]
    q: Option<f64>,
    /// K x G grid of edge probabilities, one row per line
    #[arg(long)]
    theta_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Matrix destination (dense format)
    #[arg(long)]
    output: PathBuf,
    /// True label sidecar destination
    #[arg(long)]
    truth_output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Fit report file
    #[arg(long)]
    pred: PathBuf,
    /// Truth sidecar file
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct StudyArgs {
    /// Noise grid as start:step:end
    #[arg(long, default_value = "0.0125:0.0125:0.5")]
    q_grid: String,
    /// Replicated datasets per grid value
    #[arg(long, default_value_t = 20)]
    reps: u32,
    #[arg(long, default_value_t = 5)]
    restarts: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads across grid cells (does not change results)
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Rows per dataset
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Columns per dataset
    #[arg(long, default_value_t = 100)]
    m: usize,
    /// True clusters per side
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    out_csv: PathBuf,
    #[arg(long)]
    out_plot: Option<PathBuf>,
}

fn parse_unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Study(args) => cmd_study(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn resolve_model(model: ModelArg, categories: Option<u32>) -> Result<ModelKind, ExitCode> {
    match (model, categories) {
        (ModelArg::Categorical, Some(c)) => {
            ModelKind::from_name("categorical", Some(c)).map_err(|e| usage_error(&e.to_string()))
        }
        (ModelArg::Categorical, None) => {
            Err(usage_error("--model categorical requires --categories"))
        }
        (_, Some(_)) => Err(usage_error("--categories only applies to --model categorical")),
        (ModelArg::Bernoulli, None) => Ok(ModelKind::Bernoulli),
        (ModelArg::Poisson, None) => Ok(ModelKind::Poisson),
        (ModelArg::Gaussian, None) => Ok(ModelKind::Gaussian),
    }
}

fn cmd_fit(args: FitArgs) -> coblock::Result<ExitCode> {
    let model = match resolve_model(args.model, args.categories) {
        Ok(m) => m,
        Err(code) => return Ok(code),
    };
    let prior = PriorConfig {
        alpha0: args.alpha0,
        beta0: args.beta0,
        eta: args.eta,
        zeta: args.zeta,
        delta: args.delta,
        gamma: args.gamma,
        xi: args.xi,
        kappa: args.kappa,
    };
    if let Err(err) = prior.validate() {
        return Ok(usage_error(&err.to_string()));
    }
    let adj = match args.format {
        FileFormat::Dense => BipartiteAdjacency::load_dense(&args.input, model)?,
        FileFormat::Sparse => BipartiteAdjacency::load_sparse(&args.input, model)?,
    };
    let sparse = matches!(args.engine, EngineArg::Sparse);
    // store-wise match the engine so the hot loops walk the cheap path
    let adj = if sparse && !adj.is_sparse() {
        adj.to_sparse()
    } else {
        adj
    };
    let cfg = SearchConfig {
        prior,
        k_init: args.kmax,
        g_init: args.gmax,
        pruning: matches!(args.prune, Toggle::On),
        sparse,
        restarts: args.restarts,
        seed: args.seed,
        threads: args.threads,
        ..SearchConfig::default()
    };
    let result = fit(&adj, &cfg)?;
    let (kmax, gmax) = resolved_inits(&adj, &cfg);
    let report = FitReport::new(model, &cfg, kmax, gmax, &result);
    report.write(&args.output)?;
    if let Some(path) = &args.trace {
        write_trace_csv(path, &result.trace)?;
    }
    if let Some(path) = &args.heatmap {
        render_heatmap(&adj, &result.partition, path)?;
    }
    println!(
        "icl {} k {} g {} sweeps {} moves {} merges {} wall_ms {}",
        result.icl,
        result.k(),
        result.g(),
        result.sweeps,
        result.moves,
        result.merges,
        result.wall_time_ms
    );
    Ok(ExitCode::SUCCESS)
}

fn load_theta_grid(path: &PathBuf) -> coblock::Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let file = path.display().to_string();
    let mut grid: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for tok in trimmed.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            let v: f64 = tok.parse().map_err(|_| {
                Error::parse(&file, idx + 1, format!("bad probability {tok:?}"))
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parse(
                    &file,
                    idx + 1,
                    format!("probability {v} is outside [0, 1]"),
                ));
            }
            row.push(v);
        }
        if let Some(first) = grid.first() {
            if row.len() != first.len() {
                return Err(Error::parse(
                    &file,
                    idx + 1,
                    format!("expected {} values, found {}", first.len(), row.len()),
                ));
            }
        }
        grid.push(row);
    }
    if grid.is_empty() {
        return Err(Error::parse(&file, 1, "empty probability grid".to_string()));
    }
    Ok(grid)
}

fn cmd_simulate(args: SimulateArgs) -> coblock::Result<ExitCode> {
    let spec = match (&args.q, &args.theta_file) {
        (Some(_), Some(_)) => {
            return Ok(usage_error("--q and --theta-file are mutually exclusive"))
        }
        (None, None) => return Ok(usage_error("one of --q or --theta-file is required")),
        (Some(q), None) => {
            let Some(k) = args.k else {
                return Ok(usage_error("--q requires --k"));
            };
            GeneratorSpec::diagonal_bernoulli(args.n, args.m, k, *q)?
        }
        (None, Some(path)) => {
            if args.k.is_some() {
                return Ok(usage_error("--k conflicts with --theta-file"));
            }
            GeneratorSpec::bernoulli_grid(args.n, args.m, load_theta_grid(path)?)?
        }
    };
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(args.seed);
    let (adj, rows, cols) = spec.generate(&mut rng);
    adj.write_dense(&args.output)?;
    if let Some(path) = &args.truth_output {
        write_truth(path, &rows, &cols)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(args: EvaluateArgs) -> coblock::Result<ExitCode> {
    let report = FitReport::load(&args.pred)?;
    let (rows, cols) = load_truth(&args.truth)?;
    if rows.len() != report.row_labels.len() || cols.len() != report.col_labels.len() {
        return Err(Error::Config(format!(
            "label length mismatch: report has {}x{} labels, truth has {}x{}",
            report.row_labels.len(),
            report.col_labels.len(),
            rows.len(),
            cols.len()
        )));
    }
    let score = combined_nmi(&report.row_labels, &rows, &report.col_labels, &cols);
    println!("{score:.6}");
    Ok(ExitCode::SUCCESS)
}

fn parse_q_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, step, end] = parts.as_slice() else {
        return Err(format!("expected start:step:end, got {spec:?}"));
    };
    let parse = |s: &str| s.parse::<f64>().map_err(|_| format!("not a number: {s:?}"));
    let (start, step, end) = (parse(start)?, parse(step)?, parse(end)?);
    if step <= 0.0 || start > end || !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end)
    {
        return Err(format!("bad grid {spec:?}: need 0 <= start <= end <= 1 and step > 0"));
    }
    let count = ((end - start) / step).round() as usize + 1;
    Ok((0..count)
        .map(|i| {
            // snap accumulated grid points back to their decimal reading
            let q = start + step * i as f64;
            format!("{q:.10}").parse().unwrap()
        })
        .filter(|&q| q <= end + 1e-12)
        .collect())
}

fn cmd_study(args: StudyArgs) -> coblock::Result<ExitCode> {
    let q_grid = match parse_q_grid(&args.q_grid) {
        Ok(grid) => grid,
        Err(msg) => return Ok(usage_error(&msg)),
    };
    let cfg = StudyConfig {
        n_rows: args.n,
        n_cols: args.m,
        k_true: args.k,
        q_grid,
        reps: args.reps,
        restarts: args.restarts,
        seed: args.seed,
        threads: args.threads,
        ..StudyConfig::default()
    };
    let points = run_study(&cfg)?;
    write_study_csv(&args.out_csv, &points)?;
    if let Some(path) = &args.out_plot {
        write_study_plot(path, &mean_nmi_by_q(&points))?;
    }
    for (q, mean) in mean_nmi_by_q(&points) {
        println!("q {q} mean_nmi {mean:.4}");
    }
    Ok(ExitCode::SUCCESS)
}
