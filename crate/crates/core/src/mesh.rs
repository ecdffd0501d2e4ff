//! Uniform grids and ghost-cell padding.
//!
//! Cells are stored 0-based: cell `j` spans `[x_min + j dx, x_min + (j+1) dx]`
//! and interface `s` (for `s = 0..=M`) sits at `x_min + s dx`, between cells
//! `s - 1` and `s`.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    cells: usize,
    dx: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::config("cells", "need at least one cell"));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::config(
                "domain",
                format!("empty or non-finite interval [{x_min}, {x_max}]"),
            ));
        }
        Ok(Grid {
            x_min,
            x_max,
            cells,
            dx: (x_max - x_min) / cells as f64,
        })
    }

    /// Number of interior cells.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 0.5) * self.dx
    }

    pub fn interface(&self, s: usize) -> f64 {
        self.x_min + s as f64 * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|j| self.center(j)).collect()
    }

    /// The grid with every cell split in two.
    pub fn refined(&self) -> Grid {
        Grid {
            x_min: self.x_min,
            x_max: self.x_max,
            cells: 2 * self.cells,
            dx: (self.x_max - self.x_min) / (2 * self.cells) as f64,
        }
    }

    /// True when `fine` is the uniform dyadic refinement of `self`.
    pub fn is_refined_by(&self, fine: &Grid) -> bool {
        fine.cells == 2 * self.cells
            && (fine.x_min - self.x_min).abs() <= 1e-12 * self.length()
            && (fine.x_max - self.x_max).abs() <= 1e-12 * self.length()
    }
}

pub fn build_grid(x_min: f64, x_max: f64, cells: usize) -> Result<Grid> {
    Grid::new(x_min, x_max, cells)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryCondition {
    Periodic,
    /// Zero-gradient outflow: ghosts copy the nearest interior cell.
    Absorbing,
    /// Ghost densities held at fixed values; boundary fluxes are computed
    /// from them like any other interface.
    DirichletConstant { left: f64, right: f64 },
    /// Closed vessel: ghosts hold fixed densities (seen by reconstructions
    /// and convolutions) and no mass crosses either wall.
    ZeroFlux { left: f64, right: f64 },
}

impl BoundaryCondition {
    /// Exterior density on each side for the fixed-value variants.
    pub fn fixed_values(&self) -> Option<(f64, f64)> {
        match *self {
            BoundaryCondition::DirichletConstant { left, right }
            | BoundaryCondition::ZeroFlux { left, right } => Some((left, right)),
            _ => None,
        }
    }

    pub fn closes_walls(&self) -> bool {
        matches!(self, BoundaryCondition::ZeroFlux { .. })
    }

    pub fn validate(&self, range: (f64, f64)) -> Result<()> {
        if let Some((l, r)) = self.fixed_values() {
            for v in [l, r] {
                if !(range.0..=range.1).contains(&v) {
                    return Err(Error::config(
                        "bc",
                        format!("boundary value {v} outside [{}, {}]", range.0, range.1),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Pads a scalar cell sequence with `width` ghost cells on each side.
pub fn ghost_pad(values: &[f64], bc: BoundaryCondition, width: usize) -> Result<Vec<f64>> {
    ghost_pad_modes(values, 1, bc, width)
}

/// Pads a cell sequence stored as `modes` consecutive values per cell
/// (Legendre coefficients, for instance). Fixed-value ghosts carry the value
/// in the first mode and zeros in the rest.
pub fn ghost_pad_modes(
    values: &[f64],
    modes: usize,
    bc: BoundaryCondition,
    width: usize,
) -> Result<Vec<f64>> {
    assert!(modes > 0 && values.len().is_multiple_of(modes));
    let cells = values.len() / modes;
    if cells == 0 {
        return Err(Error::config("cells", "cannot pad an empty sequence"));
    }
    if width == 0 {
        return Err(Error::config("ghost width", "must be at least 1"));
    }
    let mut out = Vec::with_capacity(values.len() + 2 * width * modes);
    match bc {
        BoundaryCondition::Periodic => {
            if width > cells {
                return Err(Error::config(
                    "ghost width",
                    format!("periodic padding of {width} cells exceeds the {cells} interior cells"),
                ));
            }
            out.extend_from_slice(&values[(cells - width) * modes..]);
            out.extend_from_slice(values);
            out.extend_from_slice(&values[..width * modes]);
        }
        BoundaryCondition::Absorbing => {
            let first = &values[..modes];
            let last = &values[(cells - 1) * modes..];
            for _ in 0..width {
                out.extend_from_slice(first);
            }
            out.extend_from_slice(values);
            for _ in 0..width {
                out.extend_from_slice(last);
            }
        }
        BoundaryCondition::DirichletConstant { left, right }
        | BoundaryCondition::ZeroFlux { left, right } => {
            let fill = |out: &mut Vec<f64>, v: f64| {
                for _ in 0..width {
                    out.push(v);
                    out.extend(std::iter::repeat_n(0.0, modes - 1));
                }
            };
            fill(&mut out, left);
            out.extend_from_slice(values);
            fill(&mut out, right);
        }
    }
    Ok(out)
}
