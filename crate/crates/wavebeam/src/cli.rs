//! Command-line front end.
//!
//! Subcommands: `trace`, `reducible-tree`, `stability`, `field-sample` and
//! `rescale`. Options resolve in three layers: built-in defaults, then a
//! flat `key=value` config file (`--config`), then command-line flags.
//! Exit codes: 0 success, 2 invalid input, 3 partial results.

use crate::continuation::{self, switch_branch, trace, BranchCurve, Termination, TraceConfig};
use crate::floquet::{self, ScanConfig};
use crate::io;
use crate::model::{self, EquationKind, RescaleParams, SolutionPoint};
use crate::reducible;
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "wavebeam",
    about = "Time-periodic solutions of the cubic wave and beam equations",
    version
)]
pub struct Cli {
    #[command(flatten)]
    pub globals: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Flat key=value config file; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Equation: 1 = wave, 2 = beam.
    #[arg(long, global = true)]
    pub nu: Option<u32>,
    /// Spatial mode count.
    #[arg(long = "N", global = true)]
    pub n_modes: Option<usize>,
    /// Time mode count (default N^2).
    #[arg(long = "M", global = true)]
    pub m_modes: Option<usize>,
    /// Solver tolerance on the residual max-norm.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for scans and tree generation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Frequency at which the trunk is seeded.
    #[arg(long, global = true)]
    pub seed_omega: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Trace the trunk (and optionally its branches) and emit CSV/JSON curves.
    Trace(TraceOpts),
    /// Emit the closed-form reducible tree for a truncation.
    ReducibleTree(TreeOpts),
    /// Floquet-classify every point of a stored curve.
    Stability(StabilityOpts),
    /// Sample a stored solution on a (tau, x) grid.
    FieldSample(FieldOpts),
    /// Apply the scaling symmetry to a stored solution.
    Rescale(RescaleOpts),
}

#[derive(Args, Debug, Clone)]
pub struct TraceOpts {
    #[arg(long)]
    pub omega_min: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub e_max: Option<f64>,
    #[arg(long)]
    pub max_points: Option<usize>,
    #[arg(long)]
    pub step_init: Option<f64>,
    #[arg(long)]
    pub step_min: Option<f64>,
    #[arg(long)]
    pub step_max: Option<f64>,
    /// Switch onto every localized branch point and trace the branches too.
    #[arg(long)]
    pub branches: bool,
}

#[derive(Args, Debug, Clone)]
pub struct TreeOpts {
    #[arg(long)]
    pub omega_min: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    /// Number of frequency samples between the bounds.
    #[arg(long)]
    pub omega_points: Option<usize>,
    /// Time cutoff on branch modes (2m+1 <= 2 m_cut - 1); defaults to N.
    #[arg(long)]
    pub m_cut: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct StabilityOpts {
    /// Curve file (.json or .csv) produced by `trace`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k_modes: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Also dump every multiplier as [re, im] pairs.
    #[arg(long)]
    pub dump_multipliers: bool,
}

#[derive(Args, Debug, Clone)]
pub struct FieldOpts {
    /// Solution file (.json) produced by `trace` or `rescale`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub tau_samples: Option<usize>,
    #[arg(long)]
    pub x_samples: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct RescaleOpts {
    /// Solution file (.json).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub m_scale: u32,
    #[arg(long)]
    pub n_scale: u32,
}

/// Resolved run configuration after layering defaults, config file and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kind: EquationKind,
    pub n_modes: usize,
    pub m_modes: usize,
    pub tol: f64,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub seed_omega: f64,
    pub file: BTreeMap<String, String>,
}

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map = BTreeMap::new();
    const KNOWN: &[&str] = &[
        "nu",
        "N",
        "M",
        "tol",
        "out-dir",
        "threads",
        "seed-omega",
        "omega-min",
        "omega-max",
        "e-max",
        "max-points",
        "step-init",
        "step-min",
        "step-max",
        "omega-points",
        "m-cut",
        "k-modes",
        "steps",
        "order",
        "tau-samples",
        "x-samples",
    ];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(format!(
            "config line {}: expected key=value, got {line:?}",
            lineno + 1
        ))?;
        let key = key.trim();
        if !KNOWN.contains(&key) {
            return Err(format!("config line {}: unknown key {key:?}", lineno + 1));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn file_value<T: std::str::FromStr>(
    file: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, String> {
    match file.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| format!("config key {key:?}: cannot parse value {raw:?}")),
    }
}

impl RunConfig {
    pub fn resolve(globals: &GlobalOpts) -> Result<Self, String> {
        let file = match &globals.config {
            Some(path) => parse_config_file(path)?,
            None => BTreeMap::new(),
        };
        let nu = globals.nu.or(file_value::<u32>(&file, "nu")?).unwrap_or(2);
        let kind = EquationKind::from_nu(nu).map_err(|e| e.to_string())?;
        let n_modes = globals
            .n_modes
            .or(file_value::<usize>(&file, "N")?)
            .unwrap_or(1);
        if n_modes == 0 {
            return Err("N: mode count must be positive".into());
        }
        let m_modes = globals
            .m_modes
            .or(file_value::<usize>(&file, "M")?)
            .unwrap_or(n_modes * n_modes);
        if m_modes == 0 {
            return Err("M: mode count must be positive".into());
        }
        let tol = globals
            .tol
            .or(file_value::<f64>(&file, "tol")?)
            .unwrap_or(1e-11);
        if !(tol > 0.0) {
            return Err(format!("tol: must be positive, got {tol}"));
        }
        let out_dir = globals
            .out_dir
            .clone()
            .or(file_value::<PathBuf>(&file, "out-dir")?)
            .unwrap_or_else(|| PathBuf::from("out"));
        let threads = match globals.threads.or(file_value::<usize>(&file, "threads")?) {
            Some(0) => return Err("threads: must be positive".into()),
            other => other,
        };
        let seed_omega = globals
            .seed_omega
            .or(file_value::<f64>(&file, "seed-omega")?)
            .unwrap_or(1.0 + 1e-4);
        if !(seed_omega > 1.0) {
            return Err(format!(
                "seed-omega: trunk seeds must lie above 1, got {seed_omega}"
            ));
        }
        Ok(Self {
            kind,
            n_modes,
            m_modes,
            tol,
            out_dir,
            threads,
            seed_omega,
            file,
        })
    }
}

fn install_thread_pool(threads: Option<usize>) {
    if let Some(t) = threads {
        // Ignore failure: the global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(path)
}

/// Entry point used by the binary: parse `std::env::args` and run.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap prints help/version through the error path with exit 0.
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    let config = match RunConfig::resolve(&cli.globals) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_INVALID;
        }
    };
    install_thread_pool(config.threads);
    let result = match &cli.command {
        Command::Trace(opts) => cmd_trace(&config, opts),
        Command::ReducibleTree(opts) => cmd_reducible_tree(&config, opts),
        Command::Stability(opts) => cmd_stability(&config, opts),
        Command::FieldSample(opts) => cmd_field_sample(&config, opts),
        Command::Rescale(opts) => cmd_rescale(&config, opts),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
    }
}

fn trace_config(config: &RunConfig, opts: &TraceOpts) -> Result<TraceConfig, String> {
    let file = &config.file;
    let mut tc = TraceConfig {
        tol: config.tol,
        ..TraceConfig::default()
    };
    tc.omega_min = opts
        .omega_min
        .or(file_value(file, "omega-min")?)
        .unwrap_or(0.0);
    tc.omega_max = opts
        .omega_max
        .or(file_value(file, "omega-max")?)
        .unwrap_or(f64::INFINITY);
    tc.energy_max = opts
        .e_max
        .or(file_value(file, "e-max")?)
        .unwrap_or(f64::INFINITY);
    if let Some(mp) = opts.max_points.or(file_value(file, "max-points")?) {
        tc.max_points = mp;
    }
    if let Some(v) = opts.step_init.or(file_value(file, "step-init")?) {
        tc.step_initial = v;
    }
    if let Some(v) = opts.step_min.or(file_value(file, "step-min")?) {
        tc.step_min = v;
    }
    if let Some(v) = opts.step_max.or(file_value(file, "step-max")?) {
        tc.step_max = v;
    }
    if tc.omega_max <= config.seed_omega || tc.omega_max <= tc.omega_min {
        return Err(format!(
            "omega-max: empty frequency range ({} .. {})",
            tc.omega_min.max(config.seed_omega),
            tc.omega_max
        ));
    }
    if tc.step_min > tc.step_max || tc.step_min <= 0.0 {
        return Err("step-min: invalid step bounds".into());
    }
    Ok(tc)
}

/// Label a branch by the dominant non-fundamental mode at its endpoint.
fn branch_label(curve: &BranchCurve) -> String {
    let last = match curve.points.last() {
        Some(p) => p,
        None => return "branch".into(),
    };
    let g = &last.grid;
    let mut best = (0usize, 0usize);
    let mut best_val = 0.0;
    for m in 0..g.m_modes() {
        for n in 0..g.n_modes() {
            if (m, n) == (0, 0) {
                continue;
            }
            if g.get(m, n).abs() > best_val {
                best_val = g.get(m, n).abs();
                best = (m, n);
            }
        }
    }
    format!("branch_m{}_n{}", best.0, best.1)
}

fn cmd_trace(config: &RunConfig, opts: &TraceOpts) -> Result<i32, String> {
    let tc = trace_config(config, opts)?;
    let start = continuation::seed_trunk(
        config.seed_omega,
        config.m_modes,
        config.n_modes,
        config.kind,
        config.tol,
    )
    .map_err(|e| format!("seeding the trunk failed: {e}"))?;

    let trunk = trace(&start, 1.0, config.kind, &tc, "trunk")
        .map_err(|e| format!("trace failed at the first point: {e}"))?;
    let mut exit = EXIT_OK;
    if let Termination::Stalled(reason) = &trunk.termination {
        eprintln!("trunk trace aborted mid-curve: {reason}");
        exit = EXIT_PARTIAL;
    }
    write_file(
        &config.out_dir,
        "trunk.csv",
        &io::curve_to_csv(&trunk.curve),
    )?;
    write_file(
        &config.out_dir,
        "trunk.json",
        &io::curve_to_json(&trunk.curve, config.kind),
    )?;

    if opts.branches {
        let mut written = std::collections::BTreeSet::new();
        for idx in trunk.curve.branch_point_indices() {
            let at = &trunk.curve.points[idx];
            let tangent = &trunk.tangents[idx];
            let null_dir = match continuation::branch_null_direction(at, tangent, config.kind) {
                Ok(w) => w,
                Err(e) => {
                    eprintln!("branch point at omega {:.6}: {e}", at.omega);
                    exit = EXIT_PARTIAL;
                    continue;
                }
            };
            let switched = match switch_branch(at, &null_dir, 1e-3, config.kind, &tc) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("branch switch at omega {:.6}: {e}", at.omega);
                    exit = EXIT_PARTIAL;
                    continue;
                }
            };
            for direction in [1.0, -1.0] {
                let branch = match trace(&switched, direction, config.kind, &tc, "branch") {
                    Ok(t) => t,
                    Err(e) => {
                        eprintln!("branch trace at omega {:.6}: {e}", at.omega);
                        exit = EXIT_PARTIAL;
                        continue;
                    }
                };
                if let Termination::Stalled(reason) = &branch.termination {
                    eprintln!("branch trace aborted mid-curve: {reason}");
                    exit = EXIT_PARTIAL;
                }
                let mut curve = branch.curve;
                let mut label = branch_label(&curve);
                if direction < 0.0 {
                    label.push_str("_rev");
                }
                if !written.insert(label.clone()) {
                    label = format!("{label}_at{idx}");
                    written.insert(label.clone());
                }
                curve.provenance = label.clone();
                write_file(
                    &config.out_dir,
                    &format!("{label}.csv"),
                    &io::curve_to_csv(&curve),
                )?;
                write_file(
                    &config.out_dir,
                    &format!("{label}.json"),
                    &io::curve_to_json(&curve, config.kind),
                )?;
            }
        }
    }
    Ok(exit)
}

fn cmd_reducible_tree(config: &RunConfig, opts: &TreeOpts) -> Result<i32, String> {
    let file = &config.file;
    let omega_min = opts
        .omega_min
        .or(file_value(file, "omega-min")?)
        .unwrap_or(1.0);
    let omega_max = opts
        .omega_max
        .or(file_value(file, "omega-max")?)
        .unwrap_or(4.0);
    let points = opts
        .omega_points
        .or(file_value(file, "omega-points")?)
        .unwrap_or(400);
    if !(omega_max > omega_min) || points < 2 {
        return Err("omega-points: need an increasing range with at least two samples".into());
    }
    let m_cut = opts
        .m_cut
        .or(file_value(file, "m-cut")?)
        .unwrap_or(config.n_modes);
    let grid: Vec<f64> = (0..points)
        .map(|i| omega_min + (omega_max - omega_min) * i as f64 / (points - 1) as f64)
        .collect();
    let rows = reducible::reducible_tree_with_cutoffs(m_cut, config.n_modes, config.kind, &grid);
    write_file(
        &config.out_dir,
        "reducible_tree.csv",
        &io::tree_to_csv(&rows),
    )?;
    Ok(EXIT_OK)
}

fn cmd_stability(config: &RunConfig, opts: &StabilityOpts) -> Result<i32, String> {
    let text = std::fs::read_to_string(&opts.input)
        .map_err(|e| format!("cannot read {}: {e}", opts.input.display()))?;
    let (curve, kind) = if opts.input.extension().and_then(|e| e.to_str()) == Some("csv") {
        let curve = io::curve_from_csv(&text).map_err(|e| e.to_string())?;
        (curve, config.kind)
    } else {
        let (c, k) = io::curve_from_json(&text).map_err(|e| e.to_string())?;
        (c, k)
    };

    let file = &config.file;
    let mut sc = ScanConfig {
        tol: config.tol,
        ..ScanConfig::default()
    };
    sc.k_override = opts.k_modes.or(file_value(file, "k-modes")?);
    if let Some(k) = sc.k_override {
        if k == 0 || k % 2 == 0 {
            return Err(format!("k-modes: must be a positive odd integer, got {k}"));
        }
    }
    if let Some(s) = opts.steps.or(file_value(file, "steps")?) {
        if s < 64 {
            return Err(format!("steps: need at least 64, got {s}"));
        }
        sc.steps = s;
    }
    if let Some(o) = opts.order.or(file_value(file, "order")?) {
        if !matches!(o, 4 | 6 | 8) {
            return Err(format!("order: must be 4, 6 or 8, got {o}"));
        }
        sc.order = o;
    }

    let entries = floquet::stability_scan(&curve, kind, &sc);
    for e in &entries {
        if let Some(err) = &e.error {
            eprintln!("point {} (omega {:.6}): {err}", e.index, e.omega);
        }
    }
    write_file(&config.out_dir, "stability.csv", &io::scan_to_csv(&entries))?;
    if opts.dump_multipliers {
        write_file(
            &config.out_dir,
            "multipliers.json",
            &io::multipliers_to_json(&entries),
        )?;
    }
    Ok(EXIT_OK)
}

fn read_solution(path: &Path) -> Result<(SolutionPoint, EquationKind), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    io::solution_from_json(&text).map_err(|e| e.to_string())
}

fn cmd_field_sample(config: &RunConfig, opts: &FieldOpts) -> Result<i32, String> {
    let (point, _) = read_solution(&opts.input)?;
    let file = &config.file;
    let tau_samples = opts
        .tau_samples
        .or(file_value(file, "tau-samples")?)
        .unwrap_or(128);
    let x_samples = opts
        .x_samples
        .or(file_value(file, "x-samples")?)
        .unwrap_or(64);
    if tau_samples == 0 || x_samples == 0 {
        return Err("tau-samples: sample counts must be positive".into());
    }
    write_file(
        &config.out_dir,
        "field.csv",
        &io::field_grid_csv(&point, tau_samples, x_samples),
    )?;
    Ok(EXIT_OK)
}

fn cmd_rescale(config: &RunConfig, opts: &RescaleOpts) -> Result<i32, String> {
    let (point, kind) = read_solution(&opts.input)?;
    let params = RescaleParams::new(opts.m_scale, opts.n_scale).map_err(|e| e.to_string())?;
    let rescaled = model::rescale(&point, params, kind).map_err(|e| e.to_string())?;
    write_file(
        &config.out_dir,
        "rescaled.json",
        &io::solution_to_json(&rescaled, kind),
    )?;
    Ok(EXIT_OK)
}
