//! Runge-Kutta discontinuous Galerkin spatial operator.
//!
//! On cell `I_j` the solution is `rho_j(x) = sum_l c_{j,l} P_l(zeta_j(x))`
//! with `zeta_j = (x - x_j)/(dx/2)`. The degrees of freedom evolve by
//!
//! ```text
//! dc_{j,l}/dt = -(2l+1)/dx [ -sum_e w_e f(rho(x_e)) V(R(x_e)) P_l'(y_e)
//!                            + F_{j+1/2} - (-1)^l F_{j-1/2} ]
//! ```
//!
//! where `F` is the Lax-Friedrichs flux evaluated with the single-valued
//! convolution `R_{j+1/2}` at the interfaces (or `V(rho)` per side for local
//! models).

use std::sync::Arc;

use crate::basis::{legendre, legendre_deriv, QuadratureRule};
use crate::convolution::ConvolutionTable;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{ghost_pad_modes, BoundaryCondition, Grid};
use crate::models::ModelSpec;
use crate::time::SpatialOperator;

#[derive(Clone, Debug, PartialEq)]
pub struct DgState {
    grid: Grid,
    degree: usize,
    coeffs: Vec<f64>,
    pub time: f64,
}

impl DgState {
    pub fn new(grid: Grid, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if degree > 3 {
            return Err(Error::config("degree", format!("supported degrees are 0..=3, got {degree}")));
        }
        if coeffs.len() != grid.cells() * (degree + 1) {
            return Err(Error::config(
                "coeffs",
                format!("expected {} values, got {}", grid.cells() * (degree + 1), coeffs.len()),
            ));
        }
        Ok(DgState { grid, degree, coeffs, time: 0.0 })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn modes(&self) -> usize {
        self.degree + 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        let m = self.modes();
        &self.coeffs[j * m..(j + 1) * m]
    }

    /// Cell average, which is the zeroth Legendre coefficient.
    pub fn mean(&self, j: usize) -> f64 {
        self.coeffs[j * self.modes()]
    }

    pub fn means(&self) -> Vec<f64> {
        self.coeffs.iter().step_by(self.modes()).copied().collect()
    }

    /// Value of the cell polynomial at reference coordinate `zeta`.
    pub fn eval(&self, j: usize, zeta: f64) -> f64 {
        eval_modes(self.cell(j), zeta)
    }

    /// `dx * sum_j mean_j`
    pub fn mass(&self) -> f64 {
        self.grid.dx() * self.means().iter().sum::<f64>()
    }
}

pub(crate) fn eval_modes(c: &[f64], zeta: f64) -> f64 {
    c.iter().enumerate().map(|(l, &v)| v * legendre(l, zeta)).sum()
}

fn right_trace(c: &[f64]) -> f64 {
    c.iter().sum()
}

fn left_trace(c: &[f64]) -> f64 {
    c.iter()
        .enumerate()
        .map(|(l, &v)| if l % 2 == 0 { v } else { -v })
        .sum()
}

/// Non-local Lax-Friedrichs flux
/// `((f(a) + f(b)) V(R) + alpha (a - b)) / 2`.
pub fn lf_flux_nonlocal(rho_minus: f64, rho_plus: f64, r: f64, lf_alpha: f64, model: &ModelSpec) -> f64 {
    0.5 * ((model.f(rho_minus) + model.f(rho_plus)) * model.v(r) + lf_alpha * (rho_minus - rho_plus))
}

/// Classical Lax-Friedrichs flux `(g(a) + g(b) + alpha (a - b)) / 2`.
pub fn lf_flux_local(rho_minus: f64, rho_plus: f64, lf_alpha: f64, model: &ModelSpec) -> f64 {
    0.5 * (model.local_flux(rho_minus) + model.local_flux(rho_plus) + lf_alpha * (rho_minus - rho_plus))
}

pub fn minmod(a1: f64, a2: f64, a3: f64) -> f64 {
    if a1 > 0.0 && a2 > 0.0 && a3 > 0.0 {
        a1.min(a2).min(a3)
    } else if a1 < 0.0 && a2 < 0.0 && a3 < 0.0 {
        a1.max(a2).max(a3)
    } else {
        0.0
    }
}

/// TVB-modified minmod: keeps `a1` when `|a1| <= mb h^2`.
pub fn tvb_minmod(a1: f64, a2: f64, a3: f64, mb: f64, h: f64) -> f64 {
    if a1.abs() <= mb * h * h {
        a1
    } else {
        minmod(a1, a2, a3)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Limiter {
    #[default]
    None,
    Minmod,
    /// TVB-modified minmod with constant `M_b`.
    Tvb { mb: f64 },
}

impl Limiter {
    fn mm(self, a1: f64, a2: f64, a3: f64, h: f64) -> f64 {
        match self {
            Limiter::None => a1,
            Limiter::Minmod => minmod(a1, a2, a3),
            Limiter::Tvb { mb } => tvb_minmod(a1, a2, a3, mb, h),
        }
    }
}

/// Generalized slope limiter applied to flat coefficients in place. Cell
/// means are never modified.
pub fn limit_coeffs(
    coeffs: &mut [f64],
    modes: usize,
    dx: f64,
    limiter: Limiter,
    bc: BoundaryCondition,
) -> Result<()> {
    if modes < 2 || limiter == Limiter::None {
        return Ok(());
    }
    let means: Vec<f64> = coeffs.iter().step_by(modes).copied().collect();
    let padded = ghost_pad_modes(&means, 1, bc, 1)?;
    for (j, cell) in coeffs.chunks_mut(modes).enumerate() {
        let mean = cell[0];
        let dp = padded[j + 2] - mean;
        let dm = mean - padded[j];
        let r = right_trace(cell) - mean;
        let l = mean - left_trace(cell);
        // The cell is kept when neither face value is altered by mm.
        if limiter.mm(r, dp, dm, dx) == r && limiter.mm(l, dp, dm, dx) == l {
            continue;
        }
        cell[1] = limiter.mm(cell[1], dp, dm, dx);
        for c in &mut cell[2..] {
            *c = 0.0;
        }
    }
    Ok(())
}

pub fn apply_limiter(state: &DgState, limiter: Limiter, bc: BoundaryCondition) -> Result<DgState> {
    let mut out = state.clone();
    let modes = out.modes();
    let dx = out.grid.dx();
    limit_coeffs(&mut out.coeffs, modes, dx, limiter, bc)?;
    Ok(out)
}

/// DG semi-discrete operator `L(c)` for a fixed grid, model and boundary.
#[derive(Clone, Debug)]
pub struct DgOperator {
    pub grid: Grid,
    pub degree: usize,
    pub model: ModelSpec,
    pub table: Option<Arc<ConvolutionTable>>,
    pub bc: BoundaryCondition,
    pub limiter: Limiter,
    pub lf_alpha: f64,
    pub exec: Execution,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `P_l(y_e)` at `[e * modes + l]`
    basis_at_nodes: Vec<f64>,
    /// `P_l'(y_e)` at `[e * modes + l]`
    deriv_at_nodes: Vec<f64>,
}

impl DgOperator {
    pub fn new(
        grid: Grid,
        degree: usize,
        model: ModelSpec,
        table: Option<Arc<ConvolutionTable>>,
        bc: BoundaryCondition,
        rule: &QuadratureRule,
    ) -> Result<Self> {
        if degree > 3 {
            return Err(Error::config("degree", format!("supported degrees are 0..=3, got {degree}")));
        }
        match (&table, model.is_local()) {
            (None, false) => {
                return Err(Error::config("kernel", "non-local model needs a convolution table"));
            }
            (Some(t), false) => {
                if t.modes() != degree + 1 {
                    return Err(Error::config("degree", "convolution table degree does not match the scheme"));
                }
                if t.kind() != model.kind {
                    return Err(Error::config("kernel", "convolution table does not match the model"));
                }
                if (t.dx() - grid.dx()).abs() > 1e-12 * grid.dx() {
                    return Err(Error::config("cells", "convolution table dx does not match the grid"));
                }
                if t.quad_nodes() != rule.len() {
                    return Err(Error::config("quadrature nodes", "table and rule disagree"));
                }
            }
            _ => {}
        }
        let table = if model.is_local() { None } else { table };
        let modes = degree + 1;
        let mut basis_at_nodes = Vec::with_capacity(rule.len() * modes);
        let mut deriv_at_nodes = Vec::with_capacity(rule.len() * modes);
        for &y in &rule.nodes {
            for l in 0..modes {
                basis_at_nodes.push(legendre(l, y));
                deriv_at_nodes.push(legendre_deriv(l, y));
            }
        }
        let lf_alpha = model.lipschitz_alpha();
        Ok(DgOperator {
            grid,
            degree,
            model,
            table,
            bc,
            limiter: Limiter::None,
            lf_alpha,
            exec: Execution::default(),
            nodes: rule.nodes.clone(),
            weights: rule.weights.clone(),
            basis_at_nodes,
            deriv_at_nodes,
        })
    }

    pub fn with_limiter(mut self, limiter: Limiter) -> Self {
        self.limiter = limiter;
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn modes(&self) -> usize {
        self.degree + 1
    }

    fn ghost_width(&self) -> usize {
        self.table.as_ref().map_or(1, |t| t.ghost_width().max(1))
    }

    /// Interface fluxes `F_s`, `s = 0..=M`, from padded coefficients.
    fn interface_fluxes(&self, padded: &[f64], ghost: usize) -> Vec<f64> {
        let m = self.modes();
        let cells = self.grid.cells();
        let r = self
            .table
            .as_ref()
            .map(|t| t.gather_interfaces(padded, ghost, cells));
        let mut fluxes: Vec<f64> = (0..=cells)
            .map(|s| {
                let left = &padded[(ghost + s - 1) * m..(ghost + s) * m];
                let right = &padded[(ghost + s) * m..(ghost + s + 1) * m];
                let (a, b) = (right_trace(left), left_trace(right));
                match &r {
                    Some(r) => lf_flux_nonlocal(a, b, r[s], self.lf_alpha, &self.model),
                    None => lf_flux_local(a, b, self.lf_alpha, &self.model),
                }
            })
            .collect();
        if self.bc.closes_walls() {
            fluxes[0] = 0.0;
            fluxes[cells] = 0.0;
        }
        fluxes
    }

    /// Time derivative of the flat coefficient vector.
    pub fn evaluate(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let m = self.modes();
        let cells = self.grid.cells();
        assert_eq!(coeffs.len(), cells * m);
        let ghost = self.ghost_width();
        let padded = ghost_pad_modes(coeffs, m, self.bc, ghost)?;
        let fluxes = self.interface_fluxes(&padded, ghost);
        let ng = self.nodes.len();
        let inv_dx = 1.0 / self.grid.dx();
        let r_nodes = match &self.table {
            Some(t) if m > 1 => Some(t.gather_nodes_node_major(&padded, ghost, cells, self.exec)),
            _ => None,
        };

        let mut out = vec![0.0; cells * m];
        self.exec.for_each_chunk(&mut out, m, |j, dc| {
            let cell = &padded[(ghost + j) * m..(ghost + j + 1) * m];
            let mut volume = [0.0; 4];
            if m > 1 {
                for e in 0..ng {
                    let basis = &self.basis_at_nodes[e * m..(e + 1) * m];
                    let rho: f64 = cell.iter().zip(basis).map(|(c, p)| c * p).sum();
                    let g = match &r_nodes {
                        Some(r) => self.model.flux_g(rho, r[e * cells + j]),
                        None => self.model.local_flux(rho),
                    };
                    let wg = self.weights[e] * g;
                    for (l, v) in volume.iter_mut().enumerate().take(m).skip(1) {
                        *v += wg * self.deriv_at_nodes[e * m + l];
                    }
                }
            }
            for (l, d) in dc.iter_mut().enumerate() {
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                let a_inv = (2 * l + 1) as f64 * inv_dx;
                *d = -a_inv * (-volume[l] + fluxes[j + 1] - sign * fluxes[j]);
            }
        });
        Ok(out)
    }
}

impl SpatialOperator for DgOperator {
    fn rhs(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.evaluate(u)
    }

    fn post_stage(&self, u: &mut [f64]) -> Result<()> {
        limit_coeffs(u, self.modes(), self.grid.dx(), self.limiter, self.bc)
    }
}

/// `dc/dt` for `state`. Non-local models require `table`.
pub fn dg_rhs(
    state: &DgState,
    model: &ModelSpec,
    table: Option<&ConvolutionTable>,
    bc: BoundaryCondition,
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    let op = DgOperator::new(
        state.grid,
        state.degree,
        model.clone(),
        table.map(|t| Arc::new(t.clone())),
        bc,
        rule,
    )?;
    op.evaluate(&state.coeffs)
}
