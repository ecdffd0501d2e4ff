//! Cross-resolution L1 errors, experimental order of accuracy and profile
//! diagnostics.

use crate::basis::cell_rule;
use crate::dg::{eval_modes, DgState};
use crate::error::{Error, Result};
use crate::fvweno::FvState;
use crate::mesh::{ghost_pad, BoundaryCondition, Grid};

fn check_refinement(coarse: &Grid, fine: &Grid) -> Result<()> {
    if coarse.is_refined_by(fine) {
        Ok(())
    } else {
        Err(Error::config(
            "cells",
            format!(
                "fine grid ({} cells) is not the uniform refinement of the coarse grid ({} cells)",
                fine.cells(),
                coarse.cells()
            ),
        ))
    }
}

/// `sum over fine cells of int |rho_coarse - rho_fine| dx`, with the cell
/// rule mapped onto each fine cell and the coarse polynomial evaluated there
/// by affine reparameterization.
pub fn l1_error_dg(coarse: &DgState, fine: &DgState) -> Result<f64> {
    check_refinement(coarse.grid(), fine.grid())?;
    let rule = cell_rule();
    let half_fine = 0.5 * fine.grid().dx();
    let mut total = 0.0;
    for j in 0..coarse.grid().cells() {
        let c = coarse.cell(j);
        for (side, sub) in [(-0.5, 2 * j), (0.5, 2 * j + 1)] {
            let f = fine.cell(sub);
            total += half_fine
                * rule.integrate(|y| (eval_modes(c, side + 0.5 * y) - eval_modes(f, y)).abs());
        }
    }
    Ok(total)
}

/// `dx * sum_j |rho_j - rho~_j|` where `rho~_j` is the four-point cubic
/// interpolation `9/16 (two inner fine values) - 1/16 (two outer fine values)`.
/// The outer values at the domain ends come from the boundary ghost padding.
pub fn l1_error_fv(coarse: &FvState, fine: &FvState, bc: BoundaryCondition) -> Result<f64> {
    check_refinement(coarse.grid(), fine.grid())?;
    let padded = ghost_pad(&fine.averages, bc, 1)?;
    let total: f64 = coarse
        .averages
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            // fine cells 2j-1, 2j, 2j+1, 2j+2 sit at padded 2j..2j+3
            let w = &padded[2 * j..2 * j + 4];
            let interp = 9.0 / 16.0 * (w[1] + w[2]) - 1.0 / 16.0 * (w[0] + w[3]);
            (c - interp).abs()
        })
        .sum();
    Ok(coarse.grid().dx() * total)
}

/// `dx * sum_j |rho_j - (rho_{2j} + rho_{2j+1}) / 2|`: the coarse average
/// against the exact average of the fine solution over the same cell.
pub fn l1_error_fv_conservative(coarse: &FvState, fine: &FvState) -> Result<f64> {
    check_refinement(coarse.grid(), fine.grid())?;
    let total: f64 = coarse
        .averages
        .iter()
        .zip(fine.averages.chunks(2))
        .map(|(c, f)| (c - 0.5 * (f[0] + f[1])).abs())
        .sum();
    Ok(coarse.grid().dx() * total)
}

/// `log2(e_coarse / e_fine)`; `None` when either error is not positive.
pub fn eoa(e_coarse: f64, e_fine: f64) -> Option<f64> {
    if e_coarse > 0.0 && e_fine > 0.0 && e_coarse.is_finite() && e_fine.is_finite() {
        Some((e_coarse / e_fine).log2())
    } else {
        None
    }
}

/// Errors of a refinement study. `errors[i]` compares `resolutions[i]` with
/// the next finer run; `orders[i]` compares `errors[i]` with `errors[i + 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub label: String,
    pub resolutions: Vec<usize>,
    pub errors: Vec<f64>,
    pub orders: Vec<Option<f64>>,
}

impl ErrorReport {
    pub fn new(label: impl Into<String>, resolutions: Vec<usize>, errors: Vec<f64>) -> Result<Self> {
        if resolutions.len() != errors.len() {
            return Err(Error::config("resolutions", "one error per resolution"));
        }
        if let Some(e) = errors.iter().find(|e| !(**e >= 0.0)) {
            return Err(Error::config("errors", format!("errors must be nonnegative, got {e}")));
        }
        let orders = errors.windows(2).map(|w| eoa(w[0], w[1])).collect();
        Ok(ErrorReport { label: label.into(), resolutions, errors, orders })
    }

    /// Order paired with row `i` (the comparison with the previous row).
    pub fn order_at(&self, i: usize) -> Option<f64> {
        if i == 0 {
            None
        } else {
            self.orders[i - 1]
        }
    }

    /// CSV with header `M,l1_error,order`; the first row and undefined
    /// orders carry `nan`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("M,l1_error,order\n");
        for (i, (m, e)) in self.resolutions.iter().zip(&self.errors).enumerate() {
            let order = self.order_at(i).map_or_else(|| "nan".to_string(), |o| o.to_string());
            out.push_str(&format!("{m},{e},{order}\n"));
        }
        out
    }
}

/// `sum |v_{i+1} - v_i|` over the sequence (no wrap-around).
pub fn total_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// A flat run of a profile: `start..end` cell indices and the mean level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plateau {
    pub start: usize,
    pub end: usize,
    pub level: f64,
}

/// Runs of at least `min_len` cells whose values all lie within `flat_tol`
/// of each other, found greedily from the left.
pub fn plateaus(values: &[f64], flat_tol: f64, min_len: usize) -> Vec<Plateau> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let (mut lo, mut hi) = (values[i], values[i]);
        let mut end = i + 1;
        while end < values.len() {
            let v = values[end];
            if v.max(hi) - v.min(lo) >= flat_tol {
                break;
            }
            lo = lo.min(v);
            hi = hi.max(v);
            end += 1;
        }
        if end - i >= min_len {
            let level = values[i..end].iter().sum::<f64>() / (end - i) as f64;
            out.push(Plateau { start: i, end, level });
            i = end;
        } else {
            i += 1;
        }
    }
    out
}

/// Number of layers in a staircase profile: the longest chain of plateaus
/// whose levels move strictly in one direction by at least `min_jump` per
/// step. Plateaus within `min_jump` of either end of `range` (clear liquid,
/// packed sediment) are not layers; neighbouring plateaus closer than
/// `min_jump` in level belong to the same step.
pub fn count_layers(values: &[f64], flat_tol: f64, min_len: usize, min_jump: f64, range: (f64, f64)) -> usize {
    let mut steps: Vec<f64> = Vec::new();
    for p in plateaus(values, flat_tol, min_len) {
        if p.level < range.0 + min_jump || p.level > range.1 - min_jump {
            continue;
        }
        match steps.last() {
            Some(&last) if (p.level - last).abs() < min_jump => {}
            _ => steps.push(p.level),
        }
    }
    if steps.is_empty() {
        return 0;
    }
    let mut best = 1;
    for dir in [1.0, -1.0] {
        let mut run = 1;
        for w in steps.windows(2) {
            run = if dir * (w[1] - w[0]) > 0.0 { run + 1 } else { 1 };
            best = best.max(run);
        }
    }
    best
}
