//! Experiment runner: single runs, convergence studies and bundled test
//! problems, with CSV output.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Arg, ArgAction, ArgMatches, Command};

pub use config::{DtChoice, InitialCondition, RunConfig, Settings, KEYS};

use crate::analysis::{l1_error_dg, l1_error_fv_conservative, ErrorReport};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::solver::{initialize, Solution};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

/// Names accepted by `test <name>`.
pub const BUNDLES: [&str; 7] = ["test1a", "test1b", "test2", "test3-advection", "test3-lwr", "test4-lwr", "test4-sed"];

/// Default settings of a bundled test. Bundles are ordinary settings, so any
/// key can be overridden from a config file or the command line.
pub fn bundle(name: &str) -> Result<Settings> {
    let sine = [("ic", "sine"), ("ic-base", "0.5"), ("ic-amplitude", "0.4"), ("ic-frequency", "1")];
    let symmetric = [("x-min", "-1"), ("x-max", "1"), ("bc", "periodic")];
    let mut s = match name {
        "test1a" => Settings::from_pairs([
            ("model", "nonlocal-lwr"),
            ("kernel", "parabolic"),
            ("eta", "0.1"),
            ("x-min", "-1"),
            ("x-max", "1"),
            ("cells", "1600"),
            ("bc", "absorbing"),
            ("t-final", "0.1"),
            ("scheme", "dg-k1"),
            ("limiter", "tvb"),
            ("mb", "35"),
            ("ic", "riemann"),
            ("ic-inside", "0.95"),
            ("ic-outside", "0.05"),
            ("ic-a", "-0.5"),
            ("ic-b", "0.4"),
        ]),
        "test1b" => Settings::from_pairs([
            ("model", "nonlocal-lwr"),
            ("kernel", "increasing-linear"),
            ("eta", "0.05"),
            ("x-min", "0"),
            ("x-max", "1"),
            ("cells", "400"),
            ("bc", "periodic"),
            ("t-final", "0.3"),
            ("scheme", "fv-weno5"),
            ("ic", "perturbed-constant"),
            ("ic-base", "0.35"),
            ("ic-amplitude", "1"),
            ("ic-center", "0.5"),
            ("ic-width", "2000"),
        ]),
        "test2" => Settings::from_pairs([
            ("model", "sedimentation"),
            ("kernel", "sed-parabola"),
            ("eta", "0.025"),
            ("sed-alpha", "1"),
            ("sed-n", "3"),
            ("x-min", "0"),
            ("x-max", "1"),
            ("cells", "400"),
            ("bc", "zero-flux:0,1"),
            ("t-final", "1"),
            ("scheme", "dg-k1"),
            ("limiter", "tvb"),
            ("mb", "50"),
            ("ic", "constant"),
            ("ic-value", "0.5"),
            ("history-stride", "50"),
        ]),
        "test3-advection" => {
            let mut s = Settings::from_pairs(sine.into_iter().chain(symmetric));
            for (k, v) in [("model", "advection"), ("t-final", "1"), ("scheme", "dg-k2"), ("cells", "20")] {
                s.set(k, v)?;
            }
            s.set("resolutions", "20,40,80,160,320")?;
            s
        }
        "test3-lwr" => {
            let mut s = Settings::from_pairs(sine.into_iter().chain(symmetric));
            for (k, v) in [("model", "lwr"), ("t-final", "0.15"), ("scheme", "dg-k2"), ("cells", "20")] {
                s.set(k, v)?;
            }
            s.set("resolutions", "20,40,80,160,320")?;
            s
        }
        "test4-lwr" => {
            let mut s = Settings::from_pairs(sine.into_iter().chain(symmetric));
            for (k, v) in [
                ("model", "nonlocal-lwr"),
                ("kernel", "constant"),
                ("eta", "0.1"),
                ("t-final", "0.15"),
                ("scheme", "dg-k2"),
                ("cells", "40"),
            ] {
                s.set(k, v)?;
            }
            s.set("resolutions", "40,80,160,320,640")?;
            s
        }
        "test4-sed" => Settings::from_pairs([
            ("model", "sedimentation"),
            ("kernel", "sed-parabola"),
            ("eta", "0.025"),
            ("sed-alpha", "1"),
            ("sed-n", "3"),
            ("x-min", "0"),
            ("x-max", "1"),
            ("bc", "zero-flux:0,1"),
            ("t-final", "0.04"),
            ("scheme", "dg-k2"),
            ("ic", "sine-power"),
            ("ic-amplitude", "0.8"),
            ("ic-frequency", "1"),
            ("ic-exponent", "10"),
            ("cells", "100"),
            ("resolutions", "100,200,400,800,1600"),
        ]),
        other => {
            return Err(Error::config(
                "test",
                format!("unknown test `{other}` (expected one of {})", BUNDLES.join(", ")),
            ))
        }
    };
    s.set("dt-reduction", "auto")?;
    Ok(s)
}

/// True for bundles that run a convergence study rather than a single run.
pub fn bundle_is_study(name: &str) -> bool {
    name.starts_with("test3") || name.starts_with("test4")
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub solution: Solution,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub wall: Duration,
}

impl RunOutcome {
    pub fn summary(&self) -> String {
        format!(
            "mass(t=0) = {}\nmass(t={}) = {}\nmin = {}\nmax = {}\nsteps = {}\nwall-clock = {:.3} s\n",
            self.initial_mass,
            self.solution.time(),
            self.final_mass,
            self.min,
            self.max,
            self.steps,
            self.wall.as_secs_f64()
        )
    }
}

/// Discrete initial data of `config` on its own grid.
pub fn initial_solution(config: &RunConfig) -> Result<Solution> {
    let ic = config.ic.clone();
    initialize(config.scheme, &config.grid()?, |x| ic.eval(x), &config.ic.jumps())
}

/// Solves `config`, streaming `t,x,rho` history rows to `history` every
/// `history_stride` steps (and at the final time).
pub fn solve(config: &RunConfig, mut history: Option<&mut dyn Write>) -> Result<RunOutcome> {
    let start = Instant::now();
    let initial = initial_solution(config)?;
    let problem = config.problem()?;
    let initial_mass = initial.mass();
    let mut steps = 0;
    let mut io_error = None;
    if let Some(h) = history.as_mut() {
        writeln!(h, "t,x,rho")?;
    }
    let t_final = config.t_final;
    let stride = config.history_stride;
    let subsample = if config.scheme.is_dg() { config.dg_subsample } else { 1 };
    let solution = problem.solve_with(&initial, |step, t, s| {
        steps = step;
        if let Some(h) = history.as_mut() {
            if step % stride == 0 || t == t_final {
                for (x, rho) in s.sample(subsample) {
                    if let Err(e) = writeln!(h, "{t},{x},{rho}") {
                        io_error.get_or_insert(e);
                    }
                }
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let means = solution.means();
    let min = means.iter().copied().fold(f64::INFINITY, f64::min);
    let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RunOutcome {
        final_mass: solution.mass(),
        solution,
        initial_mass,
        min,
        max,
        steps,
        wall: start.elapsed(),
    })
}

/// `x,rho` profile: cell means, or `subsample` point values per DG cell.
pub fn profile_csv(solution: &Solution, subsample: usize) -> String {
    let mut out = String::from("x,rho\n");
    let rows = if subsample > 1 && matches!(solution, Solution::Dg(_)) {
        solution.sample(subsample)
    } else {
        solution.grid().centers().into_iter().zip(solution.means()).collect()
    };
    for (x, rho) in rows {
        out.push_str(&format!("{x},{rho}\n"));
    }
    out
}

/// L1 distance between two runs of the same scheme on a grid and its
/// uniform refinement. FV runs compare each coarse average with the mean of
/// its two fine cells, which is exact for cell averages.
pub fn cross_resolution_error(coarse: &Solution, fine: &Solution) -> Result<f64> {
    match (coarse, fine) {
        (Solution::Dg(c), Solution::Dg(f)) => l1_error_dg(c, f),
        (Solution::Fv(c), Solution::Fv(f)) => l1_error_fv_conservative(c, f),
        _ => Err(Error::config("scheme", "cannot compare DG and FV solutions")),
    }
}

/// Runs every resolution plus one extra refinement and reports the error of
/// each resolution against the next finer run. The coarsest resolution runs
/// at the plain CFL step when a step reduction is active.
pub fn run_eoa_study(config: &RunConfig, resolutions: &[usize]) -> Result<ErrorReport> {
    if resolutions.is_empty() {
        return Err(Error::config("resolutions", "need at least one resolution"));
    }
    let mut all = resolutions.to_vec();
    all.push(2 * resolutions[resolutions.len() - 1]);
    let mut base = config.clone();
    base.resolutions = all.clone();
    base.dt_reference_cells = Some(config.dt_reference_cells.unwrap_or(resolutions[0]));
    base.validate()?;
    let exec = if config.sequential { Execution::Sequential } else { Execution::default() };
    let solutions = exec
        .map(&all, |&m| solve(&base.with_cells(m), None).map(|o| o.solution))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let errors = solutions
        .windows(2)
        .map(|w| cross_resolution_error(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    ErrorReport::new(
        format!("{} {} {}", config.model.name, config.scheme, config.t_final),
        resolutions.to_vec(),
        errors,
    )
}

fn command() -> Command {
    let common = |cmd: Command| -> Command {
        let mut cmd = cmd
            .arg(Arg::new("config").long("config").value_name("FILE").help("key = value settings file"))
            .arg(Arg::new("output").long("output").short('o').value_name("FILE").help("CSV output (stdout if absent)"))
            .arg(
                Arg::new("summary")
                    .long("summary")
                    .action(ArgAction::SetTrue)
                    .help("print mass, density range and wall-clock to stderr"),
            )
            .arg(
                Arg::new("sequential")
                    .long("sequential")
                    .action(ArgAction::SetTrue)
                    .help("evaluate the spatial operator on the calling thread only"),
            );
        for (key, help) in KEYS {
            cmd = cmd.arg(Arg::new(*key).long(*key).value_name("VALUE").help(*help));
        }
        cmd
    };
    let run_args = |cmd: Command| {
        cmd.arg(Arg::new("history").long("history").value_name("FILE").help("write t,x,rho rows every history-stride steps"))
    };
    Command::new("nlclaw")
        .about("RKDG and FV-WENO solvers for local and non-local 1-D conservation laws")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(run_args(common(Command::new("run").about("integrate one configuration to t-final"))))
        .subcommand(common(Command::new("eoa").about("convergence study over doubling resolutions")))
        .subcommand(run_args(common(
            Command::new("test")
                .about("run a bundled test problem")
                .arg(Arg::new("name").required(true).value_parser(BUNDLES)),
        )))
}

fn settings_from(m: &ArgMatches, defaults: Settings) -> Result<Settings> {
    let mut s = defaults;
    if let Some(path) = m.get_one::<String>("config") {
        s.merge(&Settings::load(path.as_ref())?);
    }
    for (key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            s.set(key, v.clone())?;
        }
    }
    Ok(s)
}

fn config_from(m: &ArgMatches, defaults: Settings) -> Result<RunConfig> {
    let mut c = RunConfig::from_settings(&settings_from(m, defaults)?)?;
    c.output = m.get_one::<String>("output").map(PathBuf::from);
    c.history = m.try_get_one::<String>("history").ok().flatten().map(PathBuf::from);
    c.summary = m.get_flag("summary");
    c.sequential = m.get_flag("sequential");
    Ok(c)
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute_run(c: &RunConfig) -> Result<()> {
    let outcome = match &c.history {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            let o = solve(c, Some(&mut w))?;
            w.flush()?;
            o
        }
        None => solve(c, None)?,
    };
    emit(c.output.as_ref(), &profile_csv(&outcome.solution, c.dg_subsample))?;
    if c.summary {
        eprint!("{}", outcome.summary());
    }
    Ok(())
}

fn execute_study(c: &RunConfig) -> Result<()> {
    let resolutions = if c.resolutions.is_empty() { vec![c.cells] } else { c.resolutions.clone() };
    let start = Instant::now();
    let report = run_eoa_study(c, &resolutions)?;
    emit(c.output.as_ref(), &report.to_csv())?;
    if c.summary {
        eprintln!("wall-clock = {:.3} s", start.elapsed().as_secs_f64());
    }
    Ok(())
}

fn dispatch(m: &ArgMatches) -> Result<()> {
    match m.subcommand() {
        Some(("run", sub)) => execute_run(&config_from(sub, Settings::new())?),
        Some(("eoa", sub)) => execute_study(&config_from(sub, Settings::new())?),
        Some(("test", sub)) => {
            let name = sub.get_one::<String>("name").expect("required");
            let c = config_from(sub, bundle(name)?)?;
            if bundle_is_study(name) {
                execute_study(&c)
            } else {
                execute_run(&c)
            }
        }
        _ => unreachable!("subcommand required"),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::Io(_) => EXIT_IO,
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&matches) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
