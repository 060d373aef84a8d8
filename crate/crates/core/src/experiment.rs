//! Report types and the pipelines behind the `subspace` command.
//!
//! Reports are plain serializable structs. Wall times live in a separate
//! map so they can be masked for byte-for-byte comparisons.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::baselines::{grid_oracle, sphere_oracle_with, svd_optimal, SphereOracleConfig};
use crate::error::{Error, Result};
use crate::generators::{
    gap_net_parameters, gaussian_gap_instance, minuncut_reduce, ulc_reduce, GapNetParameters, Graph, UlcInstance,
};
use crate::instance::{load_instance, relaxation_cost, PointSet, ProblemSpec};
use crate::relaxation::{solve_relaxation, SolverConfig};
use crate::rng;
use crate::rounding::{expected_ratio_bound, round_solution, RoundingConfig};
use crate::spectral::SymMatrix;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seconds per named stage.
pub type WallTimes = BTreeMap<String, f64>;

fn timed<T>(times: &mut WallTimes, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    times.insert(stage.to_string(), start.elapsed().as_secs_f64());
    out
}

/// Generator specification such as `gap:n=100,m=50000,p=4,seed=7`.
#[derive(Debug, Clone, PartialEq)]
pub enum GenSpec {
    Gap {
        n: usize,
        m: usize,
        p: f64,
        seed: u64,
    },
    /// `graph` is `complete<N>`, `path<N>`, `cycle<N>` or `triangle`.
    MinUncut {
        graph: String,
        p: f64,
    },
    /// ULC instance read from `file`, penalty `b`.
    Ulc {
        file: PathBuf,
        p: f64,
        b: f64,
    },
}

impl GenSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut kv = BTreeMap::new();
        for part in rest.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("generator parameter '{part}' is not key=value")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let take = |kv: &mut BTreeMap<String, String>, key: &str| {
            kv.remove(key)
                .ok_or_else(|| Error::invalid(format!("generator '{kind}' needs parameter '{key}'")))
        };
        let num = |key: &str, v: String| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::invalid(format!("parameter '{key}' = '{v}' is not a number")))
        };
        let int = |key: &str, v: String| -> Result<u64> {
            v.parse()
                .map_err(|_| Error::invalid(format!("parameter '{key}' = '{v}' is not an integer")))
        };
        let spec = match kind {
            "gap" => GenSpec::Gap {
                n: int("n", take(&mut kv, "n")?)? as usize,
                m: int("m", take(&mut kv, "m")?)? as usize,
                p: num("p", take(&mut kv, "p")?)?,
                seed: match kv.remove("seed") {
                    Some(v) => int("seed", v)?,
                    None => 0,
                },
            },
            "minuncut" => GenSpec::MinUncut {
                graph: take(&mut kv, "graph")?,
                p: num("p", take(&mut kv, "p")?)?,
            },
            "ulc" => GenSpec::Ulc {
                file: PathBuf::from(take(&mut kv, "file")?),
                p: num("p", take(&mut kv, "p")?)?,
                b: num("B", take(&mut kv, "B")?)?,
            },
            other => {
                return Err(Error::invalid(format!(
                    "unknown generator '{other}' (expected gap, minuncut or ulc)"
                )))
            }
        };
        if let Some(extra) = kv.keys().next() {
            return Err(Error::invalid(format!(
                "unknown parameter '{extra}' for generator '{kind}'"
            )));
        }
        Ok(spec)
    }

    /// Canonical text form, parsing back to the same value.
    pub fn canonical(&self) -> String {
        match self {
            GenSpec::Gap { n, m, p, seed } => format!("gap:n={n},m={m},p={p},seed={seed}"),
            GenSpec::MinUncut { graph, p } => format!("minuncut:graph={graph},p={p}"),
            GenSpec::Ulc { file, p, b } => format!("ulc:file={},p={p},B={b}", file.display()),
        }
    }

    pub fn build(&self) -> Result<(PointSet, ProblemSpec)> {
        match self {
            GenSpec::Gap { n, m, p, seed } => gaussian_gap_instance(*n, *m, *p, *seed),
            GenSpec::MinUncut { graph, p } => {
                let r = minuncut_reduce(&named_graph(graph)?, *p)?;
                Ok((r.points, r.spec))
            }
            GenSpec::Ulc { file, p, b } => {
                let text = std::fs::read_to_string(file).map_err(|source| Error::Io {
                    path: file.clone(),
                    source,
                })?;
                let u: UlcInstance = serde_json::from_str(&text).map_err(|e| Error::Parse {
                    path: file.clone(),
                    message: e.to_string(),
                })?;
                let r = ulc_reduce(&u, *p, *b)?;
                Ok((r.points, r.spec))
            }
        }
    }
}

/// `triangle`, `complete<N>`, `path<N>` or `cycle<N>`.
pub fn named_graph(name: &str) -> Result<Graph> {
    if name == "triangle" {
        return Ok(Graph::complete(3));
    }
    let split = name.find(|c: char| c.is_ascii_digit()).unwrap_or(name.len());
    let (family, digits) = name.split_at(split);
    let n: usize = digits
        .parse()
        .map_err(|_| Error::invalid(format!("graph name '{name}' must end in a vertex count")))?;
    match family {
        "complete" => Ok(Graph::complete(n)),
        "path" => Ok(Graph::path(n)),
        "cycle" if n >= 3 => Ok(Graph::cycle(n)),
        _ => Err(Error::invalid(format!("unknown graph '{name}'"))),
    }
}

/// Where the instance came from.
#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum InstanceDescriptor {
    File { path: String },
    Generator { spec: String },
}

#[derive(Debug, Clone)]
pub struct InstanceSource {
    pub descriptor: InstanceDescriptor,
    pub points: PointSet,
    pub spec: ProblemSpec,
}

impl InstanceSource {
    pub fn from_file(path: &Path) -> Result<Self> {
        let (points, spec) = load_instance(path)?;
        Ok(Self {
            descriptor: InstanceDescriptor::File {
                path: path.display().to_string(),
            },
            points,
            spec,
        })
    }

    pub fn from_gen(text: &str) -> Result<Self> {
        let g = GenSpec::parse(text)?;
        let (points, spec) = g.build()?;
        Ok(Self {
            descriptor: InstanceDescriptor::Generator { spec: g.canonical() },
            points,
            spec,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxationReport {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub kind: &'static str,
    pub version: &'static str,
    pub instance: InstanceDescriptor,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub solver: SolverConfig,
    pub relaxation: RelaxationReport,
    /// Exact optimum when `p = 2`.
    pub svd_value: Option<f64>,
    pub wall_times: WallTimes,
}

/// Relaxation solve plus the matrix `X` for an optional dump.
pub fn run_solve(src: &InstanceSource, cfg: &SolverConfig) -> Result<(SolveReport, SymMatrix)> {
    let mut times = WallTimes::new();
    let sol = timed(&mut times, "solve", || solve_relaxation(&src.points, &src.spec, cfg))?;
    let svd_value = if src.spec.p == 2.0 {
        Some(timed(&mut times, "svd", || svd_optimal(&src.points, src.spec.k))?.optimal_value)
    } else {
        None
    };
    let report = SolveReport {
        kind: "solve",
        version: TOOL_VERSION,
        instance: src.descriptor.clone(),
        m: src.points.m(),
        n: src.points.n(),
        k: src.spec.k,
        p: src.spec.p,
        solver: *cfg,
        relaxation: relaxation_report(&sol),
        svd_value,
        wall_times: times,
    };
    Ok((report, sol.x))
}

fn relaxation_report(sol: &crate::instance::RelaxationSolution) -> RelaxationReport {
    RelaxationReport {
        value: sol.value,
        converged: sol.converged,
        iterations: sol.iterations,
        trace: sol.x.trace(),
        min_eigenvalue: sol.spectrum.values.last().copied().unwrap_or(0.0),
        max_eigenvalue: sol.spectrum.values.first().copied().unwrap_or(0.0),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RoundOptions {
    pub solver: SolverConfig,
    pub rounding: RoundingConfig,
    /// Random restarts of the sphere oracle (used when `k = n - 1`).
    pub oracle_restarts: usize,
    /// Angular step of the grid oracle (used when `n <= 3`).
    pub grid_step: f64,
}

impl Default for RoundOptions {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            rounding: RoundingConfig::default(),
            oracle_restarts: 16,
            grid_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundedReport {
    pub value: f64,
    pub runs: usize,
    pub best_run: usize,
    pub run_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereReport {
    pub value: f64,
    pub restarts: usize,
    pub start_index: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub grid_min: f64,
    pub lower_bound: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineReport {
    pub svd: Option<f64>,
    pub sphere: Option<SphereReport>,
    pub grid: Option<GridReport>,
}

/// Full solve, round and compare pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub kind: &'static str,
    pub version: &'static str,
    pub instance: InstanceDescriptor,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub config: RoundOptions,
    pub relaxation: RelaxationReport,
    pub rounded: RoundedReport,
    pub baselines: BaselineReport,
    /// Rounded value over relaxation value.
    pub ratio: f64,
    /// `gamma_q sqrt(2 - 1/(n-k))`.
    pub bound: f64,
    pub wall_times: WallTimes,
}

pub fn run_round(src: &InstanceSource, opts: &RoundOptions) -> Result<(ExperimentReport, DMatrix<f64>)> {
    let (ps, spec) = (&src.points, &src.spec);
    let n = ps.n();
    let mut times = WallTimes::new();
    let sol = timed(&mut times, "solve", || solve_relaxation(ps, spec, &opts.solver))?;
    let out = timed(&mut times, "round", || round_solution(ps, spec, &sol, &opts.rounding))?;

    let svd = if spec.p == 2.0 {
        Some(timed(&mut times, "svd", || svd_optimal(ps, spec.k))?.optimal_value)
    } else {
        None
    };
    let sphere = if spec.k + 1 == n {
        let cfg = SphereOracleConfig {
            restarts: opts.oracle_restarts,
            seed: opts.rounding.seed,
            ..SphereOracleConfig::default()
        };
        let r = timed(&mut times, "sphere_oracle", || sphere_oracle_with(ps, spec.p, &cfg))?;
        Some(SphereReport {
            value: r.value,
            restarts: opts.oracle_restarts,
            start_index: r.start_index,
        })
    } else {
        None
    };
    let grid = if (n == 2 || n == 3) && spec.k + 1 == n {
        let g = timed(&mut times, "grid_oracle", || grid_oracle(ps, spec.p, opts.grid_step))?;
        Some(GridReport {
            grid_min: g.grid_min,
            lower_bound: g.lower_bound,
            step: g.step,
        })
    } else {
        None
    };

    let ratio = if sol.value > 0.0 {
        out.solution.value / sol.value
    } else if out.solution.value <= 1e-12 {
        1.0
    } else {
        f64::INFINITY
    };
    let report = ExperimentReport {
        kind: "round",
        version: TOOL_VERSION,
        instance: src.descriptor.clone(),
        m: ps.m(),
        n,
        k: spec.k,
        p: spec.p,
        config: *opts,
        relaxation: relaxation_report(&sol),
        rounded: RoundedReport {
            value: out.solution.value,
            runs: opts.rounding.runs,
            best_run: out.best_run,
            run_values: out.run_values,
        },
        baselines: BaselineReport { svd, sphere, grid },
        ratio,
        bound: expected_ratio_bound(n, spec.k, spec.p)?,
        wall_times: times,
    };
    Ok((report, out.solution.z))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapOptions {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub directions: usize,
    /// Descent iterations applied to every random direction.
    pub refine_iters: usize,
    /// Also run the relaxation solver (expensive at large `m`).
    pub solve: bool,
    /// `eta` used only for the reported net parameters.
    pub eta: f64,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            n: 100,
            m: 50_000,
            p: 4.0,
            directions: 1000,
            refine_iters: 50,
            solve: false,
            eta: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapSeedReport {
    pub seed: u64,
    /// Relaxation value at `X = I/n`.
    pub witness_value: f64,
    pub solver_value: Option<f64>,
    pub solver_converged: Option<bool>,
    /// Smallest cost among the refined directions.
    pub min_direction_value: f64,
    /// Smallest cost among the unrefined random directions.
    pub min_raw_direction_value: f64,
    /// `min_direction_value / witness_value`.
    pub gap_vs_witness: f64,
    /// `min_direction_value / solver_value`, when solved.
    pub gap_vs_solver: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

impl MeanStderr {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n).sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub kind: &'static str,
    pub version: &'static str,
    pub config: GapOptions,
    pub seeds: Vec<u64>,
    pub gamma_p: f64,
    /// The theoretical schedule; its `m_min` is far beyond desk scale.
    pub net_parameters: GapNetParameters,
    pub per_seed: Vec<GapSeedReport>,
    pub witness_value: MeanStderr,
    pub min_direction_value: MeanStderr,
    pub gap_vs_witness: MeanStderr,
    pub gap_vs_solver: Option<MeanStderr>,
    pub wall_times: WallTimes,
}

pub fn run_gap_experiment(opts: &GapOptions, seeds: &[u64]) -> Result<GapReport> {
    if seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    if opts.directions == 0 {
        return Err(Error::invalid("directions must be at least 1"));
    }
    let mut times = WallTimes::new();
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let tag = format!("seed_{seed}");
        let (ps, spec) = timed(&mut times, &format!("{tag}_generate"), || {
            gaussian_gap_instance(opts.n, opts.m, opts.p, seed)
        })?;
        let witness = SymMatrix::scaled_identity(opts.n, 1.0 / opts.n as f64);
        let witness_value = relaxation_cost(&ps, &spec, &witness)?;
        let solved = if opts.solve {
            Some(timed(&mut times, &format!("{tag}_solve"), || {
                solve_relaxation(&ps, &spec, &SolverConfig::default())
            })?)
        } else {
            None
        };
        let (raw_min, refined_min) = timed(&mut times, &format!("{tag}_directions"), || {
            Ok(refine_directions(
                ps.rows(),
                opts.p,
                opts.directions,
                opts.refine_iters,
                seed,
            ))
        })?;
        per_seed.push(GapSeedReport {
            seed,
            witness_value,
            solver_value: solved.as_ref().map(|s| s.value),
            solver_converged: solved.as_ref().map(|s| s.converged),
            min_direction_value: refined_min,
            min_raw_direction_value: raw_min,
            gap_vs_witness: refined_min / witness_value,
            gap_vs_solver: solved.as_ref().map(|s| refined_min / s.value),
        });
    }
    let collect = |f: &dyn Fn(&GapSeedReport) -> f64| per_seed.iter().map(f).collect::<Vec<_>>();
    let gap_vs_solver = if opts.solve {
        Some(MeanStderr::of(&collect(&|s| s.gap_vs_solver.unwrap_or(f64::NAN))))
    } else {
        None
    };
    Ok(GapReport {
        kind: "gap",
        version: TOOL_VERSION,
        config: *opts,
        seeds: seeds.to_vec(),
        gamma_p: crate::moments::gamma_p(opts.p)?,
        net_parameters: gap_net_parameters(opts.n, opts.p, opts.eta)?,
        witness_value: MeanStderr::of(&collect(&|s| s.witness_value)),
        min_direction_value: MeanStderr::of(&collect(&|s| s.min_direction_value)),
        gap_vs_witness: MeanStderr::of(&collect(&|s| s.gap_vs_witness)),
        gap_vs_solver,
        per_seed,
        wall_times: times,
    })
}

/// Stream offset separating direction draws from instance draws.
const DIRECTION_STREAM: u64 = 1 << 32;

/// Draws `count` random unit directions and refines all of them together by
/// Riemannian gradient descent on `f(z) = sum_i |a_i . z|^p`, one Armijo step
/// size per direction. Batching turns every step into two matrix products.
///
/// Returns the smallest cost `f^(1/p)` before and after refinement.
pub fn refine_directions(a: &DMatrix<f64>, p: f64, count: usize, iters: usize, seed: u64) -> (f64, f64) {
    let n = a.ncols();
    let at = a.transpose();
    let mut z = DMatrix::zeros(n, count);
    for j in 0..count {
        let u = rng::unit_vector(&mut rng::stream(seed, DIRECTION_STREAM + j as u64), n);
        z.column_mut(j).copy_from_slice(&u);
    }
    let eval = |z: &DMatrix<f64>| -> (Vec<f64>, DMatrix<f64>) {
        let az = a * z;
        let vals = az
            .column_iter()
            .map(|c| c.iter().map(|&v| abs_pow(v, p)).sum())
            .collect();
        (vals, az)
    };
    let (mut f, mut az) = eval(&z);
    let raw_min = f.iter().copied().fold(f64::INFINITY, f64::min);
    let mut step = vec![f64::NAN; count];

    for _ in 0..iters {
        let w = az.map(|v| p * abs_pow(v, p - 1.0).copysign(v));
        let g = &at * w;
        let mut trial = z.clone();
        let mut tangent_sq = vec![0.0; count];
        for j in 0..count {
            let zj = z.column(j);
            let gj = g.column(j);
            let t = gj - zj * gj.dot(&zj);
            tangent_sq[j] = t.norm_squared();
            if step[j].is_nan() {
                // First move rotates by about 0.1 radians.
                step[j] = 0.1 / tangent_sq[j].sqrt().max(1e-300);
            }
            let mut c = zj - t * step[j];
            let norm = c.norm();
            c /= norm;
            trial.column_mut(j).copy_from(&c);
        }
        let (ft, azt) = eval(&trial);
        for j in 0..count {
            if ft[j] <= f[j] - 1e-4 * step[j] * tangent_sq[j] {
                z.column_mut(j).copy_from(&trial.column(j));
                az.column_mut(j).copy_from(&azt.column(j));
                f[j] = ft[j];
                step[j] *= 1.5;
            } else {
                step[j] *= 0.5;
            }
        }
    }
    let refined_min = f.iter().copied().fold(f64::INFINITY, f64::min);
    (raw_min.powf(1.0 / p), refined_min.powf(1.0 / p))
}

/// `|v|^e`, with repeated multiplication for small integer exponents.
fn abs_pow(v: f64, e: f64) -> f64 {
    let a = v.abs();
    if e.fract() == 0.0 && (0.0..=32.0).contains(&e) {
        a.powi(e as i32)
    } else {
        a.powf(e)
    }
}

/// Zeroes every wall-time entry of a serialized report.
pub fn mask_wall_times(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map.iter_mut() {
                if k == "wall_times" {
                    if let serde_json::Value::Object(times) = v {
                        for t in times.values_mut() {
                            *t = serde_json::Value::from(0.0);
                        }
                    }
                } else {
                    mask_wall_times(v);
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(mask_wall_times),
        _ => {}
    }
}

/// Pretty JSON with a trailing newline, optionally with masked wall times.
pub fn render_report<T: Serialize>(report: &T, mask_times: bool) -> Result<String> {
    let mut value = serde_json::to_value(report).map_err(|e| Error::invalid(e.to_string()))?;
    if mask_times {
        mask_wall_times(&mut value);
    }
    let mut s = serde_json::to_string_pretty(&value).map_err(|e| Error::invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Flattens a report into `key,value` CSV lines with dotted keys.
pub fn flatten_csv(value: &serde_json::Value) -> String {
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) {
        match v {
            serde_json::Value::Object(map) => {
                for (k, x) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, x, out);
                }
            }
            serde_json::Value::Array(items) => {
                for (i, x) in items.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), x, out);
                }
            }
            serde_json::Value::String(s) => out.push((prefix.to_string(), s.clone())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", value, &mut rows);
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        let quoted = if v.contains(',') || v.contains('"') {
            format!("\"{}\"", v.replace('"', "\"\""))
        } else {
            v
        };
        s.push_str(&format!("{k},{quoted}\n"));
    }
    s
}

/// Applies `SUBSPACE_THREADS` (0 or unset means automatic) to the global
/// worker pool. Safe to call more than once; later calls are ignored.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SUBSPACE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("SUBSPACE_THREADS = '{raw}' is not a non-negative integer")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gen_spec_round_trip() {
        let g = GenSpec::parse("gap:n=100,m=50000,p=4,seed=7").unwrap();
        assert_eq!(
            g,
            GenSpec::Gap {
                n: 100,
                m: 50000,
                p: 4.0,
                seed: 7
            }
        );
        assert_eq!(GenSpec::parse(&g.canonical()).unwrap(), g);
        let g = GenSpec::parse("minuncut:graph=triangle,p=3").unwrap();
        assert_eq!(g.build().unwrap().0.m(), 6);
        assert!(GenSpec::parse("gap:n=3,m=4").is_err());
        assert!(GenSpec::parse("gap:n=3,m=4,p=2,q=1").is_err());
        assert!(GenSpec::parse("nope:x=1").is_err());
        assert!(named_graph("cycle2").is_err());
        assert_eq!(named_graph("path4").unwrap().edges().len(), 3);
    }

    #[test]
    fn masking_and_csv() {
        let mut v = serde_json::json!({"a": 1, "wall_times": {"x": 2.5}, "b": [{"wall_times": {"y": 1.0}}]});
        mask_wall_times(&mut v);
        assert_eq!(v["wall_times"]["x"], 0.0);
        assert_eq!(v["b"][0]["wall_times"]["y"], 0.0);
        let csv = flatten_csv(&serde_json::json!({"a": {"b": 1}, "c": "x,y"}));
        assert_eq!(csv, "key,value\na.b,1\nc,\"x,y\"\n");
    }

    #[test]
    fn refinement_never_increases() {
        let (ps, _) = gaussian_gap_instance(5, 400, 4.0, 2).unwrap();
        let (raw, refined) = refine_directions(ps.rows(), 4.0, 20, 30, 2);
        assert!(refined <= raw);
    }

    #[test]
    fn mean_stderr() {
        let s = MeanStderr::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.stderr - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanStderr::of(&[4.0]).stderr, 0.0);
    }
}
