//! Finite volume scheme with WENO3/WENO5 interface reconstruction.
//!
//! Cell averages evolve by `d rho_j/dt = -(F_{j+1/2} - F_{j-1/2}) / dx` with a
//! Lax-Friedrichs flux built from the left/right reconstructed interface
//! values. For non-local models each cell also carries the quadratic that
//! matches its mean and both reconstructed face values; the convolution at
//! the interfaces is taken against these quadratics so that the velocity
//! argument keeps the accuracy of the reconstruction.

use std::sync::Arc;

use crate::convolution::{pad_quadratic, quadratic_cell_coeffs, ConvolutionTable, QuadraticCellCoeffs};
use crate::dg::{lf_flux_local, lf_flux_nonlocal};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{ghost_pad, BoundaryCondition, Grid};
use crate::models::ModelSpec;
use crate::time::SpatialOperator;

/// Default WENO regularization.
pub const WENO_EPSILON: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct FvState {
    grid: Grid,
    pub averages: Vec<f64>,
    pub time: f64,
}

impl FvState {
    pub fn new(grid: Grid, averages: Vec<f64>) -> Result<Self> {
        if averages.len() != grid.cells() {
            return Err(Error::config(
                "averages",
                format!("expected {} values, got {}", grid.cells(), averages.len()),
            ));
        }
        Ok(FvState { grid, averages, time: 0.0 })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.grid.dx() * self.averages.iter().sum::<f64>()
    }
}

/// Reconstruction order of the finite volume scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FvOrder {
    /// Piecewise constant (first-order Lax-Friedrichs).
    First,
    Weno3,
    Weno5,
}

impl FvOrder {
    /// Number of candidate stencils `k`; the window holds `2k - 1` cells.
    pub fn stencils(self) -> usize {
        match self {
            FvOrder::First => 1,
            FvOrder::Weno3 => 2,
            FvOrder::Weno5 => 3,
        }
    }

    pub fn order(self) -> usize {
        2 * self.stencils() - 1
    }

    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            1 => Ok(FvOrder::First),
            3 => Ok(FvOrder::Weno3),
            5 => Ok(FvOrder::Weno5),
            _ => Err(Error::config("order", format!("supported orders are 1, 3, 5; got {order}"))),
        }
    }
}

/// How the candidate stencils are blended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weights {
    /// `w_r ~ d_r / (eps + beta_r)^2`
    Nonlinear { epsilon: f64 },
    /// The optimal linear weights `d_r`; used to check the underlying
    /// high-order stencil.
    Linear,
}

impl Default for Weights {
    fn default() -> Self {
        Weights::Nonlinear { epsilon: WENO_EPSILON }
    }
}

// Candidate values at x_{j+1/2} from cell averages, stencil r covering
// j-r..j-r+k-1, with linear weights d_r.
const D3: [f64; 2] = [2.0 / 3.0, 1.0 / 3.0];
const D5: [f64; 3] = [0.3, 0.6, 0.1];

fn blend<const K: usize>(candidates: [f64; K], beta: [f64; K], d: [f64; K], weights: Weights) -> f64 {
    let alpha: [f64; K] = match weights {
        Weights::Linear => d,
        Weights::Nonlinear { epsilon } => std::array::from_fn(|r| d[r] / ((epsilon + beta[r]) * (epsilon + beta[r]))),
    };
    let total: f64 = alpha.iter().sum();
    candidates.iter().zip(alpha).map(|(c, a)| c * a).sum::<f64>() / total
}

/// Left-biased value `rho^l_{j+1/2}` from a window of `2k - 1` averages
/// centred on cell `j`.
pub fn weno_left_with(window: &[f64], k: usize, weights: Weights) -> f64 {
    assert_eq!(window.len(), 2 * k - 1, "window must hold 2k-1 cells");
    match k {
        1 => window[0],
        2 => {
            let (um, u0, up) = (window[0], window[1], window[2]);
            let cand = [0.5 * u0 + 0.5 * up, -0.5 * um + 1.5 * u0];
            let beta = [(up - u0) * (up - u0), (u0 - um) * (u0 - um)];
            blend(cand, beta, D3, weights)
        }
        3 => {
            let (u2m, um, u0, up, u2p) = (window[0], window[1], window[2], window[3], window[4]);
            let cand = [
                (2.0 * u0 + 5.0 * up - u2p) / 6.0,
                (-um + 5.0 * u0 + 2.0 * up) / 6.0,
                (2.0 * u2m - 7.0 * um + 11.0 * u0) / 6.0,
            ];
            let sq = |x: f64| x * x;
            let beta = [
                13.0 / 12.0 * sq(u0 - 2.0 * up + u2p) + 0.25 * sq(3.0 * u0 - 4.0 * up + u2p),
                13.0 / 12.0 * sq(um - 2.0 * u0 + up) + 0.25 * sq(um - up),
                13.0 / 12.0 * sq(u2m - 2.0 * um + u0) + 0.25 * sq(u2m - 4.0 * um + 3.0 * u0),
            ];
            blend(cand, beta, D5, weights)
        }
        _ => panic!("unsupported WENO stencil count {k}"),
    }
}

/// Right value `rho^r_{j-1/2}`: the left reconstruction on the mirrored window.
pub fn weno_right_with(window: &[f64], k: usize, weights: Weights) -> f64 {
    let mut rev = window.to_vec();
    rev.reverse();
    weno_left_with(&rev, k, weights)
}

pub fn weno_reconstruct_left(window: &[f64], k: usize) -> f64 {
    weno_left_with(window, k, Weights::default())
}

pub fn weno_reconstruct_right(window: &[f64], k: usize) -> f64 {
    weno_right_with(window, k, Weights::default())
}

/// Finite volume semi-discrete operator on cell averages.
#[derive(Clone, Debug)]
pub struct FvOperator {
    pub grid: Grid,
    pub order: FvOrder,
    pub model: ModelSpec,
    pub table: Option<Arc<ConvolutionTable>>,
    pub bc: BoundaryCondition,
    pub weights: Weights,
    pub lf_alpha: f64,
    pub exec: Execution,
}

/// Reconstructed face values of one cell: `(at x_{j-1/2}, at x_{j+1/2})`.
type Faces = (f64, f64);

impl FvOperator {
    pub fn new(
        grid: Grid,
        order: FvOrder,
        model: ModelSpec,
        table: Option<Arc<ConvolutionTable>>,
        bc: BoundaryCondition,
    ) -> Result<Self> {
        let table = match (table, model.is_local()) {
            (_, true) => None,
            (None, false) => {
                return Err(Error::config("kernel", "non-local model needs a convolution table"));
            }
            (Some(t), false) => {
                if t.modes() != 3 {
                    return Err(Error::config("degree", "finite volume tables must cover l = 0..=2"));
                }
                if t.kind() != model.kind {
                    return Err(Error::config("kernel", "convolution table does not match the model"));
                }
                if (t.dx() - grid.dx()).abs() > 1e-12 * grid.dx() {
                    return Err(Error::config("cells", "convolution table dx does not match the grid"));
                }
                Some(t)
            }
        };
        let lf_alpha = model.lipschitz_alpha();
        Ok(FvOperator {
            grid,
            order,
            model,
            table,
            bc,
            weights: Weights::default(),
            lf_alpha,
            exec: Execution::default(),
        })
    }

    pub fn with_weights(mut self, weights: Weights) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Face values for cells `-1..=M` (index `j + 1`), from averages padded
    /// with `ghost >= k` cells.
    fn faces(&self, padded: &[f64], ghost: usize) -> Vec<Faces> {
        let k = self.order.stencils();
        let cells = self.grid.cells();
        let mut out = vec![0.0; 2 * (cells + 2)];
        self.exec.for_each_chunk(&mut out, 2, |idx, f| {
            // padded index of the cell centre
            let c = ghost + idx - 1;
            let window = &padded[c + 1 - k..c + k];
            f[0] = weno_right_with(window, k, self.weights);
            f[1] = weno_left_with(window, k, self.weights);
        });
        out.chunks(2).map(|f| (f[0], f[1])).collect()
    }

    /// In-cell quadratics of the interior cells.
    pub fn quadratics(&self, averages: &[f64]) -> Result<Vec<QuadraticCellCoeffs>> {
        let k = self.order.stencils();
        let padded = ghost_pad(averages, self.bc, k)?;
        let faces = self.faces(&padded, k);
        Ok(self.quadratics_from_faces(averages, &faces))
    }

    fn quadratics_from_faces(&self, averages: &[f64], faces: &[Faces]) -> Vec<QuadraticCellCoeffs> {
        averages
            .iter()
            .enumerate()
            .map(|(j, &avg)| match self.order {
                FvOrder::First => QuadraticCellCoeffs::constant(avg),
                _ => quadratic_cell_coeffs(avg, faces[j + 1].0, faces[j + 1].1),
            })
            .collect()
    }

    /// Interface fluxes `F_s`, `s = 0..=M`.
    pub fn fluxes(&self, averages: &[f64]) -> Result<Vec<f64>> {
        let cells = self.grid.cells();
        assert_eq!(averages.len(), cells);
        let k = self.order.stencils();
        let padded = ghost_pad(averages, self.bc, k)?;
        let faces = self.faces(&padded, k);
        let r = match &self.table {
            Some(t) => {
                let quads = self.quadratics_from_faces(averages, &faces);
                let g = t.ghost_width();
                let padded_q = pad_quadratic(&quads, self.bc, g)?;
                Some(t.gather_interfaces(&padded_q, g, cells))
            }
            None => None,
        };
        let mut fluxes: Vec<f64> = (0..=cells)
            .map(|s| {
                // right face of cell s-1, left face of cell s
                let a = faces[s].1;
                let b = faces[s + 1].0;
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
        Ok(fluxes)
    }

    pub fn evaluate(&self, averages: &[f64]) -> Result<Vec<f64>> {
        let f = self.fluxes(averages)?;
        let inv_dx = 1.0 / self.grid.dx();
        Ok(f.windows(2).map(|w| -(w[1] - w[0]) * inv_dx).collect())
    }
}

impl SpatialOperator for FvOperator {
    fn rhs(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.evaluate(u)
    }
}

/// `d rho/dt` for `state` with reconstruction order 1, 3 or 5.
pub fn fv_rhs(
    state: &FvState,
    model: &ModelSpec,
    table: Option<&ConvolutionTable>,
    bc: BoundaryCondition,
    order: usize,
) -> Result<Vec<f64>> {
    let op = FvOperator::new(
        state.grid,
        FvOrder::from_order(order)?,
        model.clone(),
        table.map(|t| Arc::new(t.clone())),
        bc,
    )?;
    op.evaluate(&state.averages)
}
