//! Scheme selection, initialization and time integration of a complete run.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::basis::{cell_rule, l2_project_piecewise};
use crate::convolution::build_table;
use crate::dg::{eval_modes, DgOperator, DgState, Limiter};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fvweno::{FvOperator, FvOrder, FvState};
use crate::mesh::{BoundaryCondition, Grid};
use crate::models::ModelSpec;
use crate::time::{integrate, TimeConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// RKDG with polynomial degree `0..=3`.
    Dg(usize),
    FvLxf,
    FvWeno3,
    FvWeno5,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Dg(0),
        Scheme::Dg(1),
        Scheme::Dg(2),
        Scheme::Dg(3),
        Scheme::FvLxf,
        Scheme::FvWeno3,
        Scheme::FvWeno5,
    ];

    pub fn is_dg(self) -> bool {
        matches!(self, Scheme::Dg(_))
    }

    /// Default CFL number: `1/(2k+1)`-type bounds for RKDG, 0.6 for FV.
    pub fn default_cfl(self) -> f64 {
        match self {
            Scheme::Dg(1) => 0.2,
            Scheme::Dg(2) => 0.1,
            Scheme::Dg(3) => 0.05,
            _ => 0.6,
        }
    }

    /// Formal order of accuracy.
    pub fn order(self) -> usize {
        match self {
            Scheme::Dg(k) => k + 1,
            Scheme::FvLxf => 1,
            Scheme::FvWeno3 => 3,
            Scheme::FvWeno5 => 5,
        }
    }

    pub fn fv_order(self) -> Option<FvOrder> {
        match self {
            Scheme::Dg(_) => None,
            Scheme::FvLxf => Some(FvOrder::First),
            Scheme::FvWeno3 => Some(FvOrder::Weno3),
            Scheme::FvWeno5 => Some(FvOrder::Weno5),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Dg(k) => write!(f, "dg-k{k}"),
            Scheme::FvLxf => f.write_str("fv-lxf"),
            Scheme::FvWeno3 => f.write_str("fv-weno3"),
            Scheme::FvWeno5 => f.write_str("fv-weno5"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.to_string() == s)
            .ok_or_else(|| {
                Error::config(
                    "scheme",
                    format!("unknown scheme `{s}` (expected dg-k0..dg-k3, fv-lxf, fv-weno3, fv-weno5)"),
                )
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Solution {
    Dg(DgState),
    Fv(FvState),
}

impl Solution {
    pub fn grid(&self) -> &Grid {
        match self {
            Solution::Dg(s) => s.grid(),
            Solution::Fv(s) => s.grid(),
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            Solution::Dg(s) => s.time,
            Solution::Fv(s) => s.time,
        }
    }

    /// Cell means.
    pub fn means(&self) -> Vec<f64> {
        match self {
            Solution::Dg(s) => s.means(),
            Solution::Fv(s) => s.averages.clone(),
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            Solution::Dg(s) => s.mass(),
            Solution::Fv(s) => s.mass(),
        }
    }

    /// `(x, rho)` at `n` equally spaced points inside each cell (cell centres
    /// for `n = 1`). FV solutions are piecewise constant.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(1);
        let g = *self.grid();
        let mut out = Vec::with_capacity(g.cells() * n);
        for j in 0..g.cells() {
            for i in 0..n {
                let zeta = -1.0 + (2 * i + 1) as f64 / n as f64;
                let x = g.center(j) + 0.5 * g.dx() * zeta;
                let rho = match self {
                    Solution::Dg(s) => eval_modes(s.cell(j), zeta),
                    Solution::Fv(s) => s.averages[j],
                };
                out.push((x, rho));
            }
        }
        out
    }

    fn state_vec(&self) -> &[f64] {
        match self {
            Solution::Dg(s) => s.coeffs(),
            Solution::Fv(s) => &s.averages,
        }
    }

    fn with_state(&self, u: Vec<f64>, time: f64) -> Result<Solution> {
        Ok(match self {
            Solution::Dg(s) => {
                let mut out = DgState::new(*s.grid(), s.degree(), u)?;
                out.time = time;
                Solution::Dg(out)
            }
            Solution::Fv(s) => {
                let mut out = FvState::new(*s.grid(), u)?;
                out.time = time;
                Solution::Fv(out)
            }
        })
    }
}

/// Discrete initial data: L2 projection for DG, cell averages by the cell
/// Gauss rule for FV. `jumps` lists discontinuities of `rho0`; cells
/// containing one are integrated piecewise.
pub fn initialize(scheme: Scheme, grid: &Grid, rho0: impl Fn(f64) -> f64, jumps: &[f64]) -> Result<Solution> {
    match scheme {
        Scheme::Dg(k) => Ok(Solution::Dg(l2_project_piecewise(rho0, jumps, grid, k)?)),
        _ => {
            let p = l2_project_piecewise(rho0, jumps, grid, 0)?;
            Ok(Solution::Fv(FvState::new(*grid, p.into_coeffs())?))
        }
    }
}

/// Everything needed to advance a discrete solution.
#[derive(Clone, Debug)]
pub struct Problem {
    pub model: ModelSpec,
    pub scheme: Scheme,
    pub bc: BoundaryCondition,
    pub limiter: Limiter,
    pub time: TimeConfig,
    pub exec: Execution,
}

type Observer<'a> = dyn FnMut(usize, f64, &Solution) + 'a;

/// The semi-discrete operator of a [`Problem`] on a given grid.
pub enum Operator {
    Dg(DgOperator),
    Fv(FvOperator),
}

impl Problem {
    pub fn new(model: ModelSpec, scheme: Scheme, bc: BoundaryCondition, time: TimeConfig) -> Self {
        Problem { model, scheme, bc, limiter: Limiter::None, time, exec: Execution::default() }
    }

    pub fn with_limiter(mut self, limiter: Limiter) -> Self {
        self.limiter = limiter;
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.bc.validate(self.model.density_range)?;
        if !self.scheme.is_dg() && self.limiter != Limiter::None {
            return Err(Error::config("limiter", "slope limiters apply to DG schemes only"));
        }
        Ok(())
    }

    pub fn operator(&self, grid: &Grid) -> Result<Operator> {
        self.validate()?;
        let rule = cell_rule();
        let table_degree = match self.scheme {
            Scheme::Dg(k) => k,
            _ => 2,
        };
        let table = match self.model.kernel {
            Some(kernel) if !self.model.is_local() => {
                Some(Arc::new(build_table(&kernel, grid.dx(), table_degree, &rule, self.model.kind)?))
            }
            _ => None,
        };
        Ok(match self.scheme {
            Scheme::Dg(k) => Operator::Dg(
                DgOperator::new(*grid, k, self.model.clone(), table, self.bc, &rule)?
                    .with_limiter(self.limiter)
                    .with_execution(self.exec),
            ),
            s => Operator::Fv(
                FvOperator::new(*grid, s.fv_order().expect("fv scheme"), self.model.clone(), table, self.bc)?
                    .with_execution(self.exec),
            ),
        })
    }

    /// Advances `initial` to the configured final time. `observer(step, t,
    /// solution)` sees the initial state and every completed step.
    pub fn solve_with<F>(&self, initial: &Solution, mut observer: F) -> Result<Solution>
    where
        F: FnMut(usize, f64, &Solution),
    {
        self.run(initial, Some(&mut observer))
    }

    pub fn solve(&self, initial: &Solution) -> Result<Solution> {
        self.run(initial, None)
    }

    fn run(&self, initial: &Solution, mut observer: Option<&mut Observer>) -> Result<Solution> {
        let grid = *initial.grid();
        match (self.scheme, initial) {
            (Scheme::Dg(k), Solution::Dg(s)) if s.degree() == k => {}
            (s, Solution::Fv(_)) if !s.is_dg() => {}
            _ => return Err(Error::config("scheme", "initial data does not match the scheme")),
        }
        let op = self.operator(&grid)?;
        let dx = grid.dx();
        let alpha = self.model.lipschitz_alpha();
        let mut u0 = initial.state_vec().to_vec();
        let mut wrap = |step: usize, t: f64, u: &[f64]| {
            if let Some(obs) = observer.as_mut() {
                if let Ok(s) = initial.with_state(u.to_vec(), t) {
                    obs(step, t, &s);
                }
            }
        };
        let result = match &op {
            Operator::Dg(op) => {
                // limit the projected data once before the first stage
                crate::time::SpatialOperator::post_stage(op, &mut u0)?;
                integrate(op, u0, &self.time, dx, alpha, &mut wrap)?
            }
            Operator::Fv(op) => integrate(op, u0, &self.time, dx, alpha, &mut wrap)?,
        };
        initial.with_state(result.state, result.time)
    }
}
