//! Run configuration assembled from flat `key = value` settings.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::convolution::kernel_radius;
use crate::dg::Limiter;
use crate::error::{Error, Result};
use crate::mesh::{build_grid, BoundaryCondition, Grid};
use crate::models::{KernelFamily, KernelSpec, ModelSpec};
use crate::solver::{Problem, Scheme};
use crate::time::{DtReduction, TimeConfig};

/// Every recognised setting with its help text.
pub const KEYS: &[(&str, &str)] = &[
    ("model", "advection, lwr, nonlocal-lwr or sedimentation"),
    ("scheme", "dg-k0..dg-k3, fv-lxf, fv-weno3 or fv-weno5"),
    ("kernel", "constant, decreasing-linear, parabolic, increasing-linear or sed-parabola"),
    ("eta", "kernel length scale"),
    ("sed-alpha", "hindered settling exponent of f (sedimentation)"),
    ("sed-n", "velocity exponent of V (sedimentation)"),
    ("cells", "number of cells"),
    ("x-min", "left end of the domain"),
    ("x-max", "right end of the domain"),
    ("t-final", "final time"),
    ("bc", "periodic, absorbing, dirichlet:L,R or zero-flux:L,R"),
    ("limiter", "none, minmod or tvb (DG only)"),
    ("mb", "TVB constant"),
    ("cfl", "CFL number (default depends on the scheme)"),
    ("dt-reduction", "auto, none or a power p with dt ~ dx^p"),
    ("dt-reference-cells", "resolution that runs at the plain CFL step under dt reduction"),
    ("ic", "constant, riemann, perturbed-constant, sine or sine-power"),
    ("ic-value", "constant level"),
    ("ic-inside", "riemann: level on [ic-a, ic-b]"),
    ("ic-outside", "riemann: level elsewhere"),
    ("ic-a", "riemann: left end of the inner interval"),
    ("ic-b", "riemann: right end of the inner interval"),
    ("ic-base", "perturbed-constant / sine: base level"),
    ("ic-amplitude", "perturbation or sine amplitude"),
    ("ic-center", "perturbed-constant: centre"),
    ("ic-width", "perturbed-constant: Gaussian rate"),
    ("ic-frequency", "sine / sine-power: frequency in units of pi"),
    ("ic-exponent", "sine-power: exponent"),
    ("resolutions", "comma separated cell counts for convergence studies"),
    ("history-stride", "steps between history rows"),
    ("dg-subsample", "point values written per DG cell"),
];

/// Flat string settings; later layers override earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut s = Settings::new();
        for (k, v) in pairs {
            s.0.insert(k.to_string(), v.to_string());
        }
        s
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::config(key, "unknown setting"));
        }
        self.0.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config("config", format!("line {}: expected `key = value`", n + 1)))?;
            s.set(k.trim(), v.trim())?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::config(key, format!("expected a number, got `{v}`")))
            })
            .transpose()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn usize_opt(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::config(key, format!("expected a nonnegative integer, got `{v}`")))
            })
            .transpose()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Constant { value: f64 },
    /// `inside` on `[a, b]`, `outside` elsewhere.
    Riemann { inside: f64, outside: f64, a: f64, b: f64 },
    /// `base - amplitude (x - center) exp(-width (x - center)^2)`
    PerturbedConstant { base: f64, amplitude: f64, center: f64, width: f64 },
    /// `base + amplitude sin(frequency pi x)`
    Sine { base: f64, amplitude: f64, frequency: f64 },
    /// `amplitude sin(frequency pi x)^exponent`
    SinePower { amplitude: f64, frequency: f64, exponent: f64 },
}

impl InitialCondition {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        Ok(match s.str_or("ic", "sine") {
            "constant" => InitialCondition::Constant { value: s.f64_or("ic-value", 0.5)? },
            "riemann" => InitialCondition::Riemann {
                inside: s.f64_or("ic-inside", 0.95)?,
                outside: s.f64_or("ic-outside", 0.05)?,
                a: s.f64_or("ic-a", -0.5)?,
                b: s.f64_or("ic-b", 0.4)?,
            },
            "perturbed-constant" => InitialCondition::PerturbedConstant {
                base: s.f64_or("ic-base", 0.35)?,
                amplitude: s.f64_or("ic-amplitude", 1.0)?,
                center: s.f64_or("ic-center", 0.5)?,
                width: s.f64_or("ic-width", 2000.0)?,
            },
            "sine" => InitialCondition::Sine {
                base: s.f64_or("ic-base", 0.5)?,
                amplitude: s.f64_or("ic-amplitude", 0.4)?,
                frequency: s.f64_or("ic-frequency", 1.0)?,
            },
            "sine-power" => InitialCondition::SinePower {
                amplitude: s.f64_or("ic-amplitude", 0.8)?,
                frequency: s.f64_or("ic-frequency", 1.0)?,
                exponent: s.f64_or("ic-exponent", 10.0)?,
            },
            other => {
                return Err(Error::config(
                    "ic",
                    format!("unknown initial condition `{other}` (expected constant, riemann, perturbed-constant, sine, sine-power)"),
                ))
            }
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            InitialCondition::Constant { value } => value,
            InitialCondition::Riemann { inside, outside, a, b } => {
                if (a..b).contains(&x) {
                    inside
                } else {
                    outside
                }
            }
            InitialCondition::PerturbedConstant { base, amplitude, center, width } => {
                let d = x - center;
                base - amplitude * d * (-width * d * d).exp()
            }
            InitialCondition::Sine { base, amplitude, frequency } => base + amplitude * (frequency * PI * x).sin(),
            InitialCondition::SinePower { amplitude, frequency, exponent } => {
                amplitude * (frequency * PI * x).sin().powf(exponent)
            }
        }
    }

    /// Discontinuities of the profile.
    pub fn jumps(&self) -> Vec<f64> {
        match *self {
            InitialCondition::Riemann { a, b, .. } => vec![a, b],
            _ => Vec::new(),
        }
    }
}

fn parse_bc(s: &str) -> Result<BoundaryCondition> {
    let pair = |rest: &str| -> Result<(f64, f64)> {
        let (l, r) = rest
            .split_once(',')
            .ok_or_else(|| Error::config("bc", format!("expected two values, got `{rest}`")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::config("bc", format!("expected a number, got `{v}`")))
        };
        Ok((num(l)?, num(r)?))
    };
    match s.split_once(':') {
        None if s == "periodic" => Ok(BoundaryCondition::Periodic),
        None if s == "absorbing" => Ok(BoundaryCondition::Absorbing),
        Some(("dirichlet", rest)) => {
            let (left, right) = pair(rest)?;
            Ok(BoundaryCondition::DirichletConstant { left, right })
        }
        Some(("zero-flux", rest)) => {
            let (left, right) = pair(rest)?;
            Ok(BoundaryCondition::ZeroFlux { left, right })
        }
        _ => Err(Error::config(
            "bc",
            format!("unknown boundary condition `{s}` (expected periodic, absorbing, dirichlet:L,R, zero-flux:L,R)"),
        )),
    }
}

/// Step size rule requested by the user.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtChoice {
    /// `dx^(4/3)` for dg-k3, `dx^(5/3)` for fv-weno5, plain CFL otherwise.
    Auto,
    None,
    Power(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub scheme: Scheme,
    pub cells: usize,
    pub domain: (f64, f64),
    pub t_final: f64,
    pub bc: BoundaryCondition,
    pub limiter: Limiter,
    pub cfl: f64,
    pub dt: DtChoice,
    pub dt_reference_cells: Option<usize>,
    pub ic: InitialCondition,
    pub resolutions: Vec<usize>,
    pub history_stride: usize,
    pub dg_subsample: usize,
    pub output: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub summary: bool,
    pub sequential: bool,
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let scheme: Scheme = s.str_or("scheme", "dg-k1").parse()?;
        let kernel = match s.get("kernel") {
            Some(name) => {
                let family = KernelFamily::parse(name)?;
                let eta = s
                    .f64_opt("eta")?
                    .ok_or_else(|| Error::config("eta", "a kernel needs eta"))?;
                Some(KernelSpec::new(family, eta)?)
            }
            None => None,
        };
        let need_kernel = || Error::config("kernel", "non-local models need `kernel` and `eta`");
        let model = match s.str_or("model", "nonlocal-lwr") {
            "advection" | "lwr" if kernel.is_some() => {
                return Err(Error::config("kernel", "local models take no kernel"));
            }
            "advection" => ModelSpec::advection(),
            "lwr" => ModelSpec::lwr(),
            "nonlocal-lwr" => ModelSpec::nonlocal_lwr(kernel.ok_or_else(need_kernel)?)?,
            "sedimentation" => ModelSpec::sedimentation(
                kernel.ok_or_else(need_kernel)?,
                s.f64_or("sed-alpha", 1.0)?,
                s.f64_or("sed-n", 3.0)?,
            )?,
            other => {
                return Err(Error::config(
                    "model",
                    format!("unknown model `{other}` (expected advection, lwr, nonlocal-lwr, sedimentation)"),
                ))
            }
        };

        let cells = s.usize_opt("cells")?.unwrap_or(400);
        let domain = (s.f64_or("x-min", 0.0)?, s.f64_or("x-max", 1.0)?);
        let t_final = s.f64_or("t-final", 0.1)?;
        let bc = parse_bc(s.str_or("bc", "periodic"))?;

        let limiter = match s.str_or("limiter", "none") {
            "none" => Limiter::None,
            "minmod" => Limiter::Minmod,
            "tvb" => {
                let mb = s.f64_or("mb", 50.0)?;
                if !(mb >= 0.0 && mb.is_finite()) {
                    return Err(Error::config("mb", format!("must be nonnegative, got {mb}")));
                }
                Limiter::Tvb { mb }
            }
            other => return Err(Error::config("limiter", format!("unknown limiter `{other}`"))),
        };
        if !scheme.is_dg() && limiter != Limiter::None {
            return Err(Error::config("limiter", format!("limiters apply to DG schemes only, not {scheme}")));
        }

        let cfl = s.f64_or("cfl", scheme.default_cfl())?;
        let dt = match s.str_or("dt-reduction", "auto") {
            "auto" => DtChoice::Auto,
            "none" => DtChoice::None,
            p => DtChoice::Power(
                p.parse::<f64>()
                    .ok()
                    .filter(|p| *p >= 1.0)
                    .ok_or_else(|| Error::config("dt-reduction", format!("expected auto, none or a power >= 1, got `{p}`")))?,
            ),
        };

        let resolutions = match s.get("resolutions") {
            Some(list) => list
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::config("resolutions", format!("bad cell count `{v}`")))
                })
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let config = RunConfig {
            model,
            scheme,
            cells,
            domain,
            t_final,
            bc,
            limiter,
            cfl,
            dt,
            dt_reference_cells: s.usize_opt("dt-reference-cells")?,
            ic: InitialCondition::from_settings(s)?,
            resolutions,
            history_stride: s.usize_opt("history-stride")?.unwrap_or(10).max(1),
            dg_subsample: s.usize_opt("dg-subsample")?.unwrap_or(1).max(1),
            output: None,
            history: None,
            summary: false,
            sequential: false,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks everything that can be checked before allocating a solver.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        TimeConfig::new(self.cfl, self.t_final)?;
        self.bc.validate(self.model.density_range)?;
        self.check_cells(self.cells)?;
        for w in self.resolutions.windows(2) {
            if w[1] != 2 * w[0] {
                return Err(Error::config("resolutions", "each resolution must double the previous one"));
            }
        }
        for &m in &self.resolutions {
            self.check_cells(m)?;
        }
        Ok(())
    }

    fn check_cells(&self, cells: usize) -> Result<()> {
        let grid = build_grid(self.domain.0, self.domain.1, cells)?;
        if let Some(k) = self.model.kernel {
            let n = kernel_radius(&k, grid.dx()).map_err(|e| match e {
                Error::Config { reason, .. } => Error::config("cells", format!("{cells} cells: {reason}")),
                other => other,
            })?;
            if self.bc == BoundaryCondition::Periodic && n > cells {
                return Err(Error::config("eta", "kernel support exceeds the periodic domain"));
            }
        }
        if self.bc == BoundaryCondition::Periodic && cells < 3 {
            return Err(Error::config("cells", "periodic runs need at least 3 cells"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        build_grid(self.domain.0, self.domain.1, self.cells)
    }

    pub fn with_cells(&self, cells: usize) -> RunConfig {
        RunConfig { cells, ..self.clone() }
    }

    /// Exponent `p` of `dt ~ dx^p`, if any.
    pub fn dt_exponent(&self) -> Option<f64> {
        match self.dt {
            DtChoice::None => None,
            DtChoice::Power(p) => Some(p),
            DtChoice::Auto => match self.scheme {
                Scheme::Dg(3) => Some(4.0 / 3.0),
                Scheme::FvWeno5 => Some(5.0 / 3.0),
                _ => None,
            },
        }
    }

    pub fn time_config(&self) -> Result<TimeConfig> {
        let t = TimeConfig::new(self.cfl, self.t_final)?;
        Ok(match self.dt_exponent() {
            Some(exponent) => {
                let reference = self.dt_reference_cells.unwrap_or(self.cells);
                let reference_dx = (self.domain.1 - self.domain.0) / reference as f64;
                t.with_reduction(DtReduction::PowerLaw { exponent, reference_dx })
            }
            None => t,
        })
    }

    pub fn problem(&self) -> Result<Problem> {
        let p = Problem::new(self.model.clone(), self.scheme, self.bc, self.time_config()?).with_limiter(self.limiter);
        Ok(if self.sequential { p.with_execution(crate::Execution::Sequential) } else { p })
    }
}
