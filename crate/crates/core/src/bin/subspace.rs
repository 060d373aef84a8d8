use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use subspace_core::experiment::{
    configure_threads, flatten_csv, render_report, run_gap_experiment, run_round, run_solve, GapOptions,
    InstanceSource, RoundOptions,
};
use subspace_core::generators::{
    gaussian_gap_instance, min_uncut_exhaustive, minuncut_reduce, ulc_parameters, ulc_reduce, Graph, UlcInstance,
};
use subspace_core::instance::save_instance_with_meta;
use subspace_core::relaxation::SolverConfig;
use subspace_core::rounding::RoundingConfig;
use subspace_core::verify::{run_suite, Suite};
use subspace_core::Error;

const EXIT_VERIFY: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NONCONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "subspace",
    version,
    about = "l_p subspace approximation: relaxation, rounding, baselines and generators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the convex relaxation.
    Solve(SolveArgs),
    /// Solve, round and compare against the baselines.
    Round(RoundArgs),
    /// Write a generated instance.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run the executable property suites.
    Verify(VerifyArgs),
    /// Measure the rank gap on Gaussian instances.
    GapExperiment(GapArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Instance JSON file.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Generator spec, e.g. gap:n=100,m=50000,p=4,seed=7.
    #[arg(long)]
    gen: Option<String>,
}

impl Source {
    fn load(&self) -> Result<InstanceSource, Error> {
        match (&self.instance, &self.gen) {
            (Some(path), _) => InstanceSource::from_file(path),
            (None, Some(spec)) => InstanceSource::from_gen(spec),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = SolverConfig::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().max_iters)]
    max_iters: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iters: self.max_iters,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the report flattened to key,value CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Replace wall times with zero for reproducible output.
    #[arg(long)]
    mask_times: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Write the relaxation matrix X as JSON rows.
    #[arg(long)]
    x_out: Option<PathBuf>,
    /// Exit with status 3 when the solver does not converge.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct RoundArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, default_value_t = 32)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random restarts of the sphere oracle.
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Angular step of the grid oracle.
    #[arg(long, default_value_t = 1e-3)]
    grid_step: f64,
    /// Write the rounded Z as JSON rows.
    #[arg(long)]
    z_out: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Gaussian integrality-gap instance.
    Gap {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Min-Uncut reduction of a graph file.
    Minuncut {
        /// Graph JSON {"n": .., "edges": [[i, j], ..]}.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unique-Label-Cover reduction.
    Ulc {
        /// ULC JSON {"V", "W", "R", "edges": [{"v", "w", "pi"}, ..]}.
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        p: f64,
        /// Penalty B; derived from --eta when omitted.
        #[arg(long = "B")]
        penalty: Option<f64>,
        /// Soundness parameter for the schedule.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// moments, greedy, projection, gradient, p2 or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON summary path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GapArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 50_000)]
    m: usize,
    #[arg(long, default_value_t = 4.0)]
    p: f64,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1000)]
    directions: usize,
    #[arg(long, default_value_t = 50)]
    refine_iters: usize,
    /// Also solve the relaxation (slow for large m).
    #[arg(long)]
    solve: bool,
    #[command(flatten)]
    output: OutputArgs,
}

enum Failure {
    Input(Error),
    Verify,
    NotConverged,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn emit<T: Serialize>(report: &T, out: &OutputArgs) -> Result<(), Error> {
    let text = render_report(report, out.mask_times)?;
    match &out.out {
        Some(path) => write_text(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(path) = &out.csv {
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::invalid(e.to_string()))?;
        write_text(path, &flatten_csv(&value))?;
    }
    Ok(())
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn write_matrix(path: &Path, m: &nalgebra::DMatrix<f64>) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(&matrix_rows(m)).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let src = args.source.load()?;
    let (report, x) = run_solve(&src, &args.solver.config())?;
    emit(&report, &args.output)?;
    if let Some(path) = &args.x_out {
        write_matrix(path, x.as_matrix())?;
    }
    if args.strict && !report.relaxation.converged {
        return Err(Failure::NotConverged);
    }
    Ok(())
}

fn round(args: RoundArgs) -> Result<(), Failure> {
    let src = args.source.load()?;
    let opts = RoundOptions {
        solver: args.solver.config(),
        rounding: RoundingConfig {
            runs: args.runs,
            seed: args.seed,
            ..RoundingConfig::default()
        },
        oracle_restarts: args.restarts,
        grid_step: args.grid_step,
    };
    let (report, z) = run_round(&src, &opts)?;
    emit(&report, &args.output)?;
    if let Some(path) = &args.z_out {
        write_matrix(path, &z)?;
    }
    if args.strict && !report.relaxation.converged {
        return Err(Failure::NotConverged);
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn meta(pairs: &[(&str, String)]) -> std::collections::BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn generate(cmd: GenCommand) -> Result<(), Failure> {
    match cmd {
        GenCommand::Gap { n, m, p, seed, out } => {
            let (ps, spec) = gaussian_gap_instance(n, m, p, seed)?;
            let info = meta(&[
                ("generator", "gap".into()),
                ("spec", format!("gap:n={n},m={m},p={p},seed={seed}")),
                ("seed", seed.to_string()),
                ("row_scale", format!("m^(-1/p) = {}", (m as f64).powf(-1.0 / p))),
            ]);
            save_instance_with_meta(&ps, &spec, &info, &out)?;
        }
        GenCommand::Minuncut { graph, p, out } => {
            let g: Graph = read_json(&graph)?;
            let r = minuncut_reduce(&g, p)?;
            let mut pairs = vec![
                ("generator", "minuncut".to_string()),
                ("graph", graph.display().to_string()),
                ("N", r.penalty.to_string()),
                ("yes_values", serde_json::to_string(&r.yes_values).expect("floats")),
                (
                    "threshold_convention",
                    "p-th power of the cost at a unit cut vector: (t 2^p + N n) / n^(p/2)".into(),
                ),
                ("epsilon", r.epsilon.to_string()),
            ];
            if g.n() <= 20 {
                pairs.push(("min_uncut", min_uncut_exhaustive(&g)?.0.to_string()));
            }
            if !r.exponent_caveat {
                pairs.push(("caveat", "the soundness argument assumes p > 2(1 + 1/(n-1))".into()));
            }
            save_instance_with_meta(&r.points, &r.spec, &meta(&pairs), &out)?;
        }
        GenCommand::Ulc {
            instance,
            p,
            penalty,
            eta,
            out,
        } => {
            let u: UlcInstance = read_json(&instance)?;
            let (b, params) = match (penalty, eta) {
                (Some(b), _) => (b, eta.map(|e| ulc_parameters(e, p)).transpose()?),
                (None, Some(e)) => {
                    let params = ulc_parameters(e, p)?;
                    (params.b, Some(params))
                }
                (None, None) => {
                    return Err(Error::invalid("gen ulc needs --B or --eta").into());
                }
            };
            let r = ulc_reduce(&u, p, b)?;
            let mut pairs = vec![
                ("generator", "ulc".to_string()),
                ("ulc_instance", instance.display().to_string()),
                ("B", b.to_string()),
                ("permutation_orientation", "pi maps labels of v to labels of w".into()),
                ("col_measure", serde_json::to_string(&r.col_weights).expect("floats")),
            ];
            if let Some(params) = params {
                pairs.push(("ulc_params", serde_json::to_string(&params).expect("floats")));
            }
            save_instance_with_meta(&r.points, &r.spec, &meta(&pairs), &out)?;
        }
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let suites = Suite::parse(&args.suite)?;
    let mut reports = Vec::new();
    let mut ok = true;
    for s in suites {
        let rep = run_suite(s, args.seed);
        for prop in &rep.properties {
            let status = if prop.passed() { "PASS" } else { "FAIL" };
            println!(
                "{status} [{}] {}: {}/{} cases passed",
                rep.suite,
                prop.name,
                prop.cases - prop.failures,
                prop.cases
            );
            if let Some(d) = &prop.detail {
                println!("       first failure: {d}");
            }
        }
        ok &= rep.passed();
        reports.push(rep);
    }
    if let Some(path) = &args.out {
        let mut text = serde_json::to_string_pretty(&reports).map_err(|e| Error::invalid(e.to_string()))?;
        text.push('\n');
        write_text(path, &text)?;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn gap_experiment(args: GapArgs) -> Result<(), Failure> {
    let opts = GapOptions {
        n: args.n,
        m: args.m,
        p: args.p,
        directions: args.directions,
        refine_iters: args.refine_iters,
        solve: args.solve,
        ..GapOptions::default()
    };
    let report = run_gap_experiment(&opts, &args.seeds)?;
    emit(&report, &args.output)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INPUT);
    }
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Round(a) => round(a),
        Command::Gen(c) => generate(c),
        Command::Verify(a) => verify(a),
        Command::GapExperiment(a) => gap_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            if matches!(e, Error::EigenNonConvergence { .. }) {
                ExitCode::from(EXIT_NONCONVERGED)
            } else {
                ExitCode::from(EXIT_INPUT)
            }
        }
        Err(Failure::Verify) => {
            eprintln!("verification failed");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(Failure::NotConverged) => {
            eprintln!("error: solver did not converge (--strict)");
            ExitCode::from(EXIT_NONCONVERGED)
        }
    }
}
