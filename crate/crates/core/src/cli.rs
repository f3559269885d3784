//! Command-line front end: `analyze`, `evolve` and `verify-theorem`.
//!
//! Every run writes into one output directory. A failing run still leaves
//! `error.json` (`{"code", "message"}`) behind, and the process exit code
//! follows [`Error::exit_code`]. Outputs depend only on the configuration,
//! so repeated runs produce byte-identical files.
//!
//! Options can also come from a flat `key = value` file passed with
//! `--config`; keys are the long flag names and flags given on the command
//! line win. `--sweep key=v1,v2,..` repeats the command once per value, in
//! parallel, each run writing to `<out>/<key>=<value>/`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{
    cross_validate, evolve_madelung, evolve_schrodinger, write_field_dumps, write_trace_csv,
    CrossValidation, EvolutionTrace, PotentialSpec, SolverConfig,
};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, RealField};
use crate::output::{write_csv, write_json};
use crate::state::{make_state, wavefunction_to_fields, StateSpec};
use crate::theorem::{
    additivity_check, c_from_hbar, coefficient_filter, fluctuation_from_theorem, hbar_from_c,
    scaling_check, AdditivityReport, CoefficientMask, GaussianMixture, ScalingReport,
    TheoremFluctuation,
};
use crate::uncertainty::{classical_momentum_field, variance_decomposition, UncertaintyReport};

/// Overrides the default output root (`runs/`).
pub const OUT_ROOT_ENV: &str = "EXACT_UNCERTAINTY_OUT";

/// Stand-in for a seeded random Gaussian mixture density in `--ensemble`.
const MIXTURE: &str = "mixture";

const DEFAULT_ENSEMBLE: &str =
    "gaussian:sigma=1;mixture;chirped_gaussian:x0=0.5,sigma=1.3,alpha=0.3";

#[derive(Debug, Parser)]
#[command(
    name = "exact-uncertainty",
    version,
    about = "Exact uncertainty relations on 1-D grids"
)]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Uncertainty report and field dumps for one state.
    Analyze(CommonArgs),
    /// Time evolution with the Schrodinger and/or Madelung solver.
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        evolve: EvolveArgs,
    },
    /// Additivity and dilation checks of the four basis functionals.
    VerifyTheorem {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        theorem: TheoremArgs,
    },
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// State spec, e.g. `gaussian:x0=2,sigma=1`.
    #[arg(long)]
    state: Option<String>,
    #[arg(long, conflicts_with = "c", allow_negative_numbers = true)]
    hbar: Option<f64>,
    /// Nonclassicality constant; `hbar = 2 sqrt(C)`.
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    /// Grid points (a power of two).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default `<root>/<command>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat `key = value` file; command-line flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=v1,v2,..`: one run per value.
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SolverChoice {
    Schrodinger,
    Madelung,
    Both,
}

#[derive(Debug, Clone, Args)]
struct EvolveArgs {
    /// `free`, `harmonic:omega=1`, `well:depth=3,width=4`, `sampled:path=v.csv`.
    #[arg(long)]
    potential: Option<String>,
    #[arg(long, value_enum)]
    solver: Option<SolverChoice>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    store_every: Option<usize>,
}

#[derive(Debug, Clone, Args)]
struct TheoremArgs {
    /// Comma-separated dilation factors.
    #[arg(long)]
    k: Option<String>,
    /// `;`-separated state specs; `mixture` draws a seeded random Gaussian
    /// mixture density.
    #[arg(long)]
    ensemble: Option<String>,
}

/// Keys accepted in `--config` files and `--sweep`.
const KEYS: &[&str] = &[
    "state",
    "hbar",
    "c",
    "mass",
    "x-min",
    "x-max",
    "n",
    "seed",
    "out",
    "potential",
    "solver",
    "dt",
    "steps",
    "store-every",
    "k",
    "ensemble",
];

/// Resolved settings of one run, echoed into every report.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    command: &'static str,
    x_min: f64,
    x_max: f64,
    n: usize,
    hbar: f64,
    c: f64,
    mass: f64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    potential: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<SolverChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    store_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ensemble: Option<Vec<String>>,
}

impl RunConfig {
    fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.x_min, self.x_max, self.n)
    }
}

#[derive(Serialize)]
struct ErrorFile<'a> {
    code: &'a str,
    message: String,
}

/// Parse `args` (program name first), run the command and return the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let common = cli.command.common();
    match (&common.config, &common.sweep) {
        (Some(path), _) => match with_config(&args, path, common) {
            Ok(merged) => run(merged),
            Err(e) => report_error(&output_dir(&cli.command), &e),
        },
        (None, Some(sweep)) => run_sweep(&args, sweep, &output_dir(&cli.command)),
        (None, None) => {
            let out = output_dir(&cli.command);
            match execute(&cli.command, &out) {
                Ok(code) => code,
                Err(e) => report_error(&out, &e),
            }
        }
    }
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Analyze(c) => c,
            Command::Evolve { common, .. } | Command::VerifyTheorem { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Evolve { .. } => "evolve",
            Command::VerifyTheorem { .. } => "verify-theorem",
        }
    }
}

fn output_dir(cmd: &Command) -> PathBuf {
    match &cmd.common().out {
        Some(p) => p.clone(),
        None => {
            let root = std::env::var_os(OUT_ROOT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("runs"));
            root.join(cmd.name())
        }
    }
}

fn report_error(out: &Path, e: &Error) -> i32 {
    eprintln!("error: {e}");
    let file = ErrorFile {
        code: e.code(),
        message: e.to_string(),
    };
    if std::fs::create_dir_all(out).is_ok() {
        let _ = write_json(&out.join("error.json"), &file);
    }
    e.exit_code()
}

/// Command line with the config file's entries spliced in ahead of the
/// user's own flags (later flags override earlier ones).
fn with_config(args: &[OsString], path: &Path, common: &CommonArgs) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ConfigParse(format!("cannot read {}: {e}", path.display())))?;
    let user_sets_hbar = common.hbar.is_some() || common.c.is_some();
    let mut injected = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::ConfigParse(format!(
                "{} line {}: expected key = value",
                path.display(),
                i + 1
            ))
        })?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) || key == "config" {
            return Err(Error::ConfigParse(format!(
                "{} line {}: unknown key {key:?}",
                path.display(),
                i + 1
            )));
        }
        if user_sets_hbar && (key == "hbar" || key == "c") {
            continue;
        }
        injected.push(OsString::from(format!("--{key}")));
        injected.push(OsString::from(value.trim()));
    }
    let mut merged = Vec::with_capacity(args.len() + injected.len());
    merged.extend_from_slice(&args[..2]);
    merged.extend(injected);
    let mut rest = args[2..].iter();
    while let Some(a) = rest.next() {
        if a == "--config" {
            rest.next();
        } else if a.to_string_lossy().starts_with("--config=") {
            continue;
        } else {
            merged.push(a.clone());
        }
    }
    Ok(merged)
}

fn run_sweep(args: &[OsString], sweep: &str, out: &Path) -> i32 {
    let parsed = sweep
        .split_once('=')
        .map(|(k, v)| (k.trim().replace('_', "-"), v))
        .filter(|(k, _)| KEYS.contains(&k.as_str()) && k != "out");
    let Some((key, values)) = parsed else {
        return report_error(
            out,
            &Error::ConfigParse(format!("--sweep expects key=v1,v2,.. got {sweep:?}")),
        );
    };
    let values: Vec<&str> = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return report_error(out, &Error::ConfigParse("--sweep has no values".into()));
    }
    let base: Vec<OsString> = {
        let mut v = Vec::new();
        let mut it = args.iter();
        while let Some(a) = it.next() {
            if a == "--sweep" {
                it.next();
            } else if !a.to_string_lossy().starts_with("--sweep=") {
                v.push(a.clone());
            }
        }
        v
    };
    let codes: Vec<i32> = std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .iter()
            .map(|value| {
                let mut argv = base.clone();
                let dir = out.join(format!("{key}={value}"));
                argv.extend(
                    [format!("--{key}"), value.to_string(), "--out".into()].map(OsString::from),
                );
                argv.push(dir.into_os_string());
                scope.spawn(move || run(argv))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or(1)).collect()
    });

    #[derive(Serialize)]
    struct SweepRow<'a> {
        value: &'a str,
        dir: String,
        exit_code: i32,
    }
    let rows: Vec<SweepRow> = values
        .iter()
        .zip(&codes)
        .map(|(value, &exit_code)| SweepRow {
            value,
            dir: format!("{key}={value}"),
            exit_code,
        })
        .collect();
    if let Err(e) = std::fs::create_dir_all(out)
        .map_err(Error::from)
        .and_then(|_| write_json(&out.join("sweep.json"), &rows))
    {
        return report_error(out, &e);
    }
    codes.into_iter().find(|&c| c != 0).unwrap_or(0)
}

fn execute(cmd: &Command, out: &Path) -> Result<i32> {
    std::fs::create_dir_all(out)?;
    let stale = out.join("error.json");
    if stale.exists() {
        std::fs::remove_file(stale)?;
    }
    match cmd {
        Command::Analyze(common) => analyze(resolve(common, "analyze", (-10.0, 10.0, 1024))?, out),
        Command::Evolve { common, evolve } => {
            let mut cfg = resolve(common, "evolve", (-10.0, 10.0, 1024))?;
            let steps = evolve.steps.unwrap_or(1000);
            cfg.potential = Some(evolve.potential.clone().unwrap_or_else(|| "free".into()));
            cfg.solver = Some(evolve.solver.unwrap_or(SolverChoice::Schrodinger));
            cfg.dt = Some(evolve.dt.unwrap_or(1e-3));
            cfg.steps = Some(steps);
            cfg.store_every = Some(evolve.store_every.unwrap_or((steps / 100).max(1)));
            evolve_cmd(cfg, out)
        }
        Command::VerifyTheorem { common, theorem } => {
            let mut cfg = resolve(common, "verify-theorem", (-32.0, 32.0, 1024))?;
            cfg.k = Some(parse_k(theorem.k.as_deref().unwrap_or("0.5,2,3"))?);
            cfg.ensemble = Some(
                theorem
                    .ensemble
                    .as_deref()
                    .unwrap_or(DEFAULT_ENSEMBLE)
                    .split(';')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect(),
            );
            verify_theorem(cfg, out)
        }
    }
}

fn resolve(
    common: &CommonArgs,
    command: &'static str,
    grid: (f64, f64, usize),
) -> Result<RunConfig> {
    let (hbar, c) = match (common.hbar, common.c) {
        (Some(h), None) => (h, c_from_hbar(h)?),
        (None, Some(c)) => (hbar_from_c(c)?, c),
        (None, None) => (1.0, 0.25),
        (Some(_), Some(_)) => {
            return Err(Error::ConfigParse(
                "give either --hbar or --c, not both".into(),
            ))
        }
    };
    let mass = common.mass.unwrap_or(1.0);
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "mass must be positive, got {mass}"
        )));
    }
    Ok(RunConfig {
        command,
        x_min: common.x_min.unwrap_or(grid.0),
        x_max: common.x_max.unwrap_or(grid.1),
        n: common.n.unwrap_or(grid.2),
        hbar,
        c,
        mass,
        seed: common.seed.unwrap_or(0),
        state: Some(
            common
                .state
                .clone()
                .unwrap_or_else(|| "gaussian:sigma=1".into()),
        ),
        potential: None,
        solver: None,
        dt: None,
        steps: None,
        store_every: None,
        k: None,
        ensemble: None,
    })
}

/// At least three distinct factors other than 1 are required.
fn parse_k(list: &str) -> Result<Vec<f64>> {
    let ks = list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|k| *k > 0.0 && k.is_finite())
                .ok_or_else(|| Error::ConfigParse(format!("--k: {s:?} is not a positive number")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut distinct: Vec<f64> = ks.iter().copied().filter(|&k| k != 1.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::ConfigParse(format!(
            "--k needs at least 3 distinct factors other than 1, got {list:?}"
        )));
    }
    Ok(ks)
}

fn parse_state(spec: &str) -> Result<StateSpec> {
    StateSpec::from_str(spec)
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    config: &'a RunConfig,
    report: &'a UncertaintyReport,
    violations: Vec<String>,
    /// Present when `s` is defined (no node).
    s_field: bool,
}

fn analyze(cfg: RunConfig, out: &Path) -> Result<i32> {
    let spec = parse_state(cfg.state.as_deref().unwrap_or_default())?;
    let grid = cfg.grid()?;
    let psi = make_state(&spec, &grid, cfg.hbar)?;
    let report = variance_decomposition(&psi, cfg.hbar)?;

    let fields = out.join("fields");
    std::fs::create_dir_all(&fields)?;
    let xs = grid.points();
    let column = |name: &str, f: &RealField| {
        write_csv(
            &fields.join(format!("{name}.csv")),
            &["x", name],
            xs.iter().zip(f.values()).map(|(x, v)| vec![*x, *v]),
        )
    };
    column("p", &psi.density())?;
    column("P_cl", &classical_momentum_field(&psi, cfg.hbar)?)?;
    let s_field = match wavefunction_to_fields(&psi, cfg.hbar) {
        Ok(m) => {
            column("s", &m.s)?;
            true
        }
        Err(Error::NodePresent { .. }) => false,
        Err(e) => return Err(e),
    };
    let violations = report.violations();
    let code = if violations.is_empty() { 0 } else { 1 };
    write_json(
        &out.join("report.json"),
        &AnalyzeReport {
            config: &cfg,
            report: &report,
            violations,
            s_field,
        },
    )?;
    Ok(code)
}

#[derive(Serialize)]
struct TraceSummary {
    solver: &'static str,
    hbar: f64,
    stored_steps: usize,
    t_final: f64,
    norm_drift: f64,
    energy_drift: f64,
    halt: Option<ErrorFile<'static>>,
}

fn summarize(trace: &EvolutionTrace) -> TraceSummary {
    TraceSummary {
        solver: match trace.solver {
            crate::dynamics::SolverKind::Schrodinger => "schrodinger",
            crate::dynamics::SolverKind::Madelung => "madelung",
        },
        hbar: trace.hbar,
        stored_steps: trace.diagnostics.len(),
        t_final: trace.last().t(),
        norm_drift: trace.norm_drift(),
        energy_drift: trace.energy_drift(),
        halt: trace.halt.as_ref().map(|e| ErrorFile {
            code: e.code(),
            message: e.to_string(),
        }),
    }
}

#[derive(Serialize)]
struct EvolveReport<'a> {
    config: &'a RunConfig,
    runs: Vec<TraceSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<CrossValidation>,
}

fn evolve_cmd(cfg: RunConfig, out: &Path) -> Result<i32> {
    let spec = parse_state(cfg.state.as_deref().unwrap_or_default())?;
    let potential: PotentialSpec = cfg.potential.as_deref().unwrap_or("free").parse()?;
    let grid = cfg.grid()?;
    let solver_cfg = SolverConfig {
        dt: cfg.dt.unwrap_or(1e-3),
        steps: cfg.steps.unwrap_or(1000),
        mass: cfg.mass,
        hbar: cfg.hbar,
        store_every: cfg.store_every.unwrap_or(10),
        ..SolverConfig::default()
    };
    solver_cfg.validate()?;
    let psi = make_state(&spec, &grid, cfg.hbar)?;
    let choice = cfg.solver.unwrap_or(SolverChoice::Schrodinger);

    let mut traces = Vec::new();
    if matches!(choice, SolverChoice::Schrodinger | SolverChoice::Both) {
        traces.push((
            "schrodinger",
            evolve_schrodinger(&psi, &potential, &solver_cfg)?,
        ));
    }
    if matches!(choice, SolverChoice::Madelung | SolverChoice::Both) {
        let m0 = wavefunction_to_fields(&psi, cfg.hbar)?;
        traces.push((
            "madelung",
            evolve_madelung(&m0, &potential, &solver_cfg, cfg.c)?,
        ));
    }
    let nested = traces.len() > 1;
    for (name, trace) in &traces {
        let dir = if nested {
            out.join(name)
        } else {
            out.to_path_buf()
        };
        std::fs::create_dir_all(&dir)?;
        write_trace_csv(trace, &dir.join("trace.csv"))?;
        write_field_dumps(trace, &dir.join("fields"))?;
    }
    let halt = traces.iter().find_map(|(_, t)| t.halt.clone());
    let comparison = if nested && halt.is_none() {
        Some(cross_validate(&psi, &potential, &solver_cfg, cfg.c)?)
    } else {
        None
    };
    write_json(
        &out.join("report.json"),
        &EvolveReport {
            config: &cfg,
            runs: traces.iter().map(|(_, t)| summarize(t)).collect(),
            comparison,
        },
    )?;
    match halt {
        Some(e) => Err(e),
        None => Ok(0),
    }
}

#[derive(Serialize)]
struct Verdict<'a> {
    config: &'a RunConfig,
    /// Densities actually used (mixtures expanded to their components).
    densities: Vec<String>,
    additivity: Vec<AdditivityReport>,
    scaling: Vec<ScalingReport>,
    mask: String,
    coefficients: CoefficientMask,
    fluctuation: Vec<TheoremFluctuation>,
    max_law_residual: f64,
    max_additivity_residual: f64,
    verdict: String,
    passes: bool,
}

fn verify_theorem(cfg: RunConfig, out: &Path) -> Result<i32> {
    let grid = cfg.grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut densities = Vec::new();
    let mut labels = Vec::new();
    for entry in cfg.ensemble.as_deref().unwrap_or_default() {
        let (label, p) = if entry == MIXTURE {
            let mixture = GaussianMixture::random(&mut rng);
            (mixture.to_string(), mixture.density(&grid)?)
        } else {
            let spec = parse_state(entry)?;
            (
                spec.to_string(),
                make_state(&spec, &grid, cfg.hbar)?.density(),
            )
        };
        labels.push(label);
        densities.push(p);
    }
    if densities.len() < 2 {
        return Err(Error::ConfigParse(
            "--ensemble needs at least two densities".into(),
        ));
    }

    let additivity = densities
        .iter()
        .zip(densities.iter().cycle().skip(1))
        .map(|(a, b)| additivity_check(a, b))
        .collect::<Result<Vec<_>>>()?;
    let mut scaling = Vec::new();
    for p in &densities {
        for &k in cfg.k.as_deref().unwrap_or_default() {
            scaling.push(scaling_check(p, k)?);
        }
    }
    let mask = coefficient_filter(&scaling)?;
    let fluctuation = densities
        .iter()
        .map(|p| fluctuation_from_theorem(p, cfg.c))
        .collect::<Result<Vec<_>>>()?;

    let max_law_residual = scaling
        .iter()
        .flat_map(|r| r.terms.iter().map(|t| t.residual))
        .fold(0.0, f64::max);
    let max_additivity_residual = additivity
        .iter()
        .flat_map(|r| r.terms.iter().map(|t| t.residual))
        .fold(0.0, f64::max);
    let laws_hold = scaling.iter().all(|r| r.terms.iter().all(|t| t.law_holds));
    let passes = mask.is_fisher_only() && laws_hold && additivity.iter().all(|a| a.passes);
    let verdict = if mask.is_fisher_only() {
        "A=B=D=0".to_string()
    } else {
        format!("unexpected mask {mask}")
    };
    write_json(
        &out.join("verdict.json"),
        &Verdict {
            config: &cfg,
            densities: labels,
            additivity,
            scaling,
            mask: mask.to_string(),
            coefficients: mask,
            fluctuation,
            max_law_residual,
            max_additivity_residual,
            verdict,
            passes,
        },
    )?;
    Ok(if passes { 0 } else { 1 })
}
