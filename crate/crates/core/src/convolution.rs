//! Precomputed kernel moment tables for the non-local velocity argument
//! `R = rho * omega_eta`.
//!
//! For a piecewise polynomial density `rho|_{I_m} = sum_l c_{m,l} P_l(zeta_m)`
//! the convolution at any point reduces to a gather
//!
//! ```text
//! R = sum_i sum_l c_{j+i,l} Gamma_{i,l}
//! ```
//!
//! where `Gamma_{i,l}` is the moment of the kernel against `P_l` over the
//! `i`-th neighbouring cell (or the part of it inside the kernel support).
//! Two tables are built: one for cell interfaces `x_{j+1/2}` and one for the
//! Gauss nodes of every cell. Each entry is integrated with a 10-point Gauss
//! rule on every sub-interval between kernel breakpoints, which is exact for
//! the polynomial kernels in use.

use std::collections::HashMap;

use crate::basis::{gauss_legendre, legendre, QuadratureRule};
use crate::dg::DgState;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{ghost_pad_modes, BoundaryCondition};
use crate::models::{KernelFamily, KernelSpec, ModelKind};

const SEGMENT_NODES: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvolutionTable {
    kind: ModelKind,
    kernel: KernelSpec,
    /// Kernel radius in cells (`N dx = eta` or `N dx = 2 eta`).
    radius: usize,
    modes: usize,
    dx: f64,
    /// Gauss nodes on the reference cell the quad table is evaluated at.
    nodes: Vec<f64>,
    iface_lo: i64,
    iface_hi: i64,
    quad_lo: i64,
    quad_hi: i64,
    /// `[(i - iface_lo) * modes + l]`
    interface: Vec<f64>,
    /// `[e][(i - quad_lo) * modes + l]`, flattened over `e`.
    quad: Vec<f64>,
}

/// Number of cells covered by the kernel support, rejecting grids that do not
/// divide it exactly.
pub fn kernel_radius(kernel: &KernelSpec, dx: f64) -> Result<usize> {
    let (lo, hi) = kernel.support();
    let width = match kernel.family.kind() {
        ModelKind::NonlocalSymmetric => hi,
        _ => hi - lo,
    };
    let ratio = width / dx;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        let what = match kernel.family.kind() {
            ModelKind::NonlocalSymmetric => "2*eta",
            _ => "eta",
        };
        return Err(Error::config(
            "eta",
            format!(
                "{what} = {width} must be a positive integer multiple N of dx = {dx} (N dx = {what}); got {what}/dx = {ratio}"
            ),
        ));
    }
    Ok(n as usize)
}

impl ConvolutionTable {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Kernel radius `N` in cells.
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Highest Legendre degree covered.
    pub fn degree(&self) -> usize {
        self.modes - 1
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Number of Gauss nodes of the quad-point table.
    pub fn quad_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Cell offsets `i` of the interface table.
    pub fn interface_offsets(&self) -> std::ops::RangeInclusive<i64> {
        self.iface_lo..=self.iface_hi
    }

    /// Cell offsets `i` of the quad-point table.
    pub fn quad_offsets(&self) -> std::ops::RangeInclusive<i64> {
        self.quad_lo..=self.quad_hi
    }

    /// `Gamma_{i,l}` for the interface `x_{j+1/2}` and cell `j + i`.
    pub fn interface_entry(&self, i: i64, l: usize) -> f64 {
        assert!(self.interface_offsets().contains(&i) && l < self.modes);
        self.interface[(i - self.iface_lo) as usize * self.modes + l]
    }

    /// `Gamma^{(e)}_{i,l}` for Gauss node `e` of cell `j` and cell `j + i`.
    pub fn quad_entry(&self, e: usize, i: i64, l: usize) -> f64 {
        assert!(self.quad_offsets().contains(&i) && l < self.modes);
        self.quad[e * self.quad_row_len() + (i - self.quad_lo) as usize * self.modes + l]
    }

    fn quad_row_len(&self) -> usize {
        (self.quad_hi - self.quad_lo + 1) as usize * self.modes
    }

    /// Ghost cells needed on each side of the interior for the gathers.
    pub fn ghost_width(&self) -> usize {
        self.radius
    }

    /// `R` at every interface `s = 0..=cells` from ghost-padded data stored
    /// with `modes` coefficients per cell and `ghost` ghost cells per side.
    pub fn gather_interfaces(&self, padded: &[f64], ghost: usize, cells: usize) -> Vec<f64> {
        assert!(ghost >= self.radius);
        assert_eq!(padded.len(), (cells + 2 * ghost) * self.modes);
        let len = self.interface.len();
        (0..=cells)
            .map(|s| {
                // interface s is x_{j+1/2} with j = s - 1
                let start = (ghost as i64 + s as i64 - 1 + self.iface_lo) as usize * self.modes;
                dot(&padded[start..start + len], &self.interface)
            })
            .collect()
    }

    /// `R` at Gauss node `e` of cell `j`, from ghost-padded data.
    pub fn gather_node(&self, padded: &[f64], ghost: usize, j: usize, e: usize) -> f64 {
        let row = self.quad_row_len();
        let start = (ghost as i64 + j as i64 + self.quad_lo) as usize * self.modes;
        dot(&padded[start..start + row], &self.quad[e * row..(e + 1) * row])
    }

    /// `R` at every Gauss node of every interior cell, `[j * nodes + e]`.
    pub fn gather_nodes(&self, padded: &[f64], ghost: usize, cells: usize) -> Vec<f64> {
        assert!(ghost >= self.radius);
        assert_eq!(padded.len(), (cells + 2 * ghost) * self.modes);
        let ng = self.nodes.len();
        let major = self.gather_nodes_node_major(padded, ghost, cells, Execution::Sequential);
        let mut out = vec![0.0; cells * ng];
        for (idx, r) in major.into_iter().enumerate() {
            out[(idx % cells) * ng + idx / cells] = r;
        }
        out
    }

    /// As [`gather_nodes`](Self::gather_nodes) but indexed `[e * cells + j]`,
    /// which keeps one table row in cache while sweeping the cells.
    pub fn gather_nodes_node_major(&self, padded: &[f64], ghost: usize, cells: usize, exec: Execution) -> Vec<f64> {
        assert!(ghost >= self.radius);
        assert_eq!(padded.len(), (cells + 2 * ghost) * self.modes);
        let mut out = vec![0.0; cells * self.nodes.len()];
        const BLOCK: usize = 32;
        exec.for_each_chunk(&mut out, BLOCK, |b, block| {
            for (k, r) in block.iter_mut().enumerate() {
                let idx = b * BLOCK + k;
                *r = self.gather_node(padded, ghost, idx % cells, idx / cells);
            }
        });
        out
    }
}

/// Dot product with eight independent partial sums so the loop vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// `(dx/2) int_{-1}^{1} omega(offset + dx y / 2) P_l(y) dy` for `l < modes`,
/// split at the kernel breakpoints.
fn kernel_moments(
    kernel: &KernelSpec,
    segment: &QuadratureRule,
    dx: f64,
    offset: f64,
    modes: usize,
) -> Vec<f64> {
    let half = 0.5 * dx;
    let mut cuts = vec![-1.0];
    cuts.extend(
        kernel
            .breakpoints()
            .iter()
            .map(|&b| (b - offset) / half)
            .filter(|&y| y > -1.0 && y < 1.0),
    );
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    (0..modes)
        .map(|l| {
            cuts.windows(2)
                .map(|w| segment.integrate_on(w[0], w[1], |y| kernel.eval(offset + half * y) * legendre(l, y)))
                .sum::<f64>()
                * half
        })
        .collect()
}

/// Builds the interface and quad-point tables for Legendre degrees `0..=k`
/// and the Gauss nodes of `rule`.
pub fn build_table(
    kernel: &KernelSpec,
    dx: f64,
    k: usize,
    rule: &QuadratureRule,
    kind: ModelKind,
) -> Result<ConvolutionTable> {
    if kind == ModelKind::Local {
        return Err(Error::config("model", "local models have no convolution"));
    }
    if kernel.family.kind() != kind {
        return Err(Error::config(
            "kernel",
            format!("kernel `{}` does not fit a {kind:?} convolution", kernel.family.name()),
        ));
    }
    if !(dx.is_finite() && dx > 0.0) {
        return Err(Error::config("cells", format!("dx must be positive, got {dx}")));
    }
    let radius = kernel_radius(kernel, dx)?;
    let n = radius as i64;
    let (iface_lo, iface_hi, quad_lo, quad_hi) = match kind {
        ModelKind::NonlocalDownstream => (1, n, 0, n),
        _ => (-n + 1, n, -n, n),
    };
    let modes = k + 1;
    let segment = gauss_legendre(SEGMENT_NODES)?;

    let mut interface = Vec::with_capacity((iface_hi - iface_lo + 1) as usize * modes);
    for i in iface_lo..=iface_hi {
        interface.extend(kernel_moments(kernel, &segment, dx, (i as f64 - 0.5) * dx, modes));
    }

    // Node x_e = x_j + dx y_e / 2; cell j + i seen from it sits at offset
    // i dx - dx y_e / 2. The support ends cut the first and last cells
    // (the partial-cell integrals over [y_e, 1] and [-1, y_e]).
    let mut quad = Vec::with_capacity(rule.len() * (quad_hi - quad_lo + 1) as usize * modes);
    for &ye in &rule.nodes {
        for i in quad_lo..=quad_hi {
            quad.extend(kernel_moments(kernel, &segment, dx, i as f64 * dx - 0.5 * dx * ye, modes));
        }
    }

    Ok(ConvolutionTable {
        kind,
        kernel: *kernel,
        radius,
        modes,
        dx,
        nodes: rule.nodes.clone(),
        iface_lo,
        iface_hi,
        quad_lo,
        quad_hi,
        interface,
        quad,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct TableKey {
    family: KernelFamily,
    eta: u64,
    dx: u64,
    k: usize,
    nodes: usize,
}

/// Tables keyed by `(kernel family, eta, dx, k, N_G)`; a lookup with a new key
/// builds and stores a fresh table.
#[derive(Debug, Default)]
pub struct TableCache {
    tables: HashMap<TableKey, std::sync::Arc<ConvolutionTable>>,
}

impl TableCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(
        &mut self,
        kernel: &KernelSpec,
        dx: f64,
        k: usize,
        rule: &QuadratureRule,
    ) -> Result<std::sync::Arc<ConvolutionTable>> {
        let key = TableKey {
            family: kernel.family,
            eta: kernel.eta.to_bits(),
            dx: dx.to_bits(),
            k,
            nodes: rule.len(),
        };
        if let Some(t) = self.tables.get(&key) {
            return Ok(t.clone());
        }
        let table = std::sync::Arc::new(build_table(kernel, dx, k, rule, kernel.family.kind())?);
        self.tables.insert(key, table.clone());
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

fn check_dg_table(state: &DgState, table: &ConvolutionTable) -> Result<()> {
    if table.modes != state.modes() {
        return Err(Error::config(
            "degree",
            format!("table built for degree {} but state has degree {}", table.degree(), state.degree()),
        ));
    }
    if (table.dx - state.grid().dx()).abs() > 1e-12 * table.dx {
        return Err(Error::config("cells", "table dx does not match the grid"));
    }
    Ok(())
}

/// `R_{j+1/2}` at every interface `j + 1/2`, `j = 0..=M` (0-based `s`).
pub fn conv_interfaces_dg(
    state: &DgState,
    table: &ConvolutionTable,
    bc: BoundaryCondition,
) -> Result<Vec<f64>> {
    check_dg_table(state, table)?;
    let g = table.ghost_width();
    let padded = ghost_pad_modes(state.coeffs(), state.modes(), bc, g)?;
    Ok(table.gather_interfaces(&padded, g, state.grid().cells()))
}

/// `R` at the Gauss nodes of every cell, indexed `[j * N_G + e]`.
pub fn conv_quadpoints_dg(
    state: &DgState,
    table: &ConvolutionTable,
    bc: BoundaryCondition,
) -> Result<Vec<f64>> {
    check_dg_table(state, table)?;
    let g = table.ghost_width();
    let padded = ghost_pad_modes(state.coeffs(), state.modes(), bc, g)?;
    Ok(table.gather_nodes(&padded, g, state.grid().cells()))
}

/// Coefficients of the in-cell quadratic `P = a0 + a1 P_1(zeta) + a2 P_2(zeta)`
/// matching the cell mean and both face values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticCellCoeffs {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl QuadraticCellCoeffs {
    pub fn constant(v: f64) -> Self {
        QuadraticCellCoeffs { a0: v, a1: 0.0, a2: 0.0 }
    }

    pub fn eval(&self, zeta: f64) -> f64 {
        self.a0 + self.a1 * zeta + self.a2 * 0.5 * (3.0 * zeta * zeta - 1.0)
    }
}

/// `left_face` is the value at `x_{j-1/2}`, `right_face` at `x_{j+1/2}`.
pub fn quadratic_cell_coeffs(cell_avg: f64, left_face: f64, right_face: f64) -> QuadraticCellCoeffs {
    QuadraticCellCoeffs {
        a0: cell_avg,
        a1: 0.5 * (right_face - left_face),
        a2: 0.5 * (right_face + left_face) - cell_avg,
    }
}

/// Flattens quadratic coefficients and adds `width` ghost cells: periodic
/// copies, otherwise constants at the ghost density.
pub fn pad_quadratic(
    coeffs: &[QuadraticCellCoeffs],
    bc: BoundaryCondition,
    width: usize,
) -> Result<Vec<f64>> {
    let flat: Vec<f64> = coeffs.iter().flat_map(|c| [c.a0, c.a1, c.a2]).collect();
    match bc {
        BoundaryCondition::Periodic => ghost_pad_modes(&flat, 3, bc, width),
        BoundaryCondition::Absorbing => {
            let first = coeffs.first().map(|c| c.a0).unwrap_or(0.0);
            let last = coeffs.last().map(|c| c.a0).unwrap_or(0.0);
            ghost_pad_modes(&flat, 3, BoundaryCondition::DirichletConstant { left: first, right: last }, width)
        }
        _ => ghost_pad_modes(&flat, 3, bc, width),
    }
}

/// `R_{j+1/2}` from in-cell quadratics, using a table with `l <= 2`.
pub fn conv_interfaces_fv(
    coeffs: &[QuadraticCellCoeffs],
    table: &ConvolutionTable,
    bc: BoundaryCondition,
) -> Result<Vec<f64>> {
    if table.modes != 3 {
        return Err(Error::config("degree", "finite volume tables must cover l = 0..=2"));
    }
    let g = table.ghost_width();
    let padded = pad_quadratic(coeffs, bc, g)?;
    Ok(table.gather_interfaces(&padded, g, coeffs.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{cell_rule, l2_project};
    use crate::mesh::build_grid;

    fn kernel(family: KernelFamily, eta: f64) -> KernelSpec {
        KernelSpec::new(family, eta).unwrap()
    }

    #[test]
    fn constant_kernel_entries() {
        let k = kernel(KernelFamily::Constant, 0.1);
        let t = build_table(&k, 0.025, 2, &cell_rule(), ModelKind::NonlocalDownstream).unwrap();
        assert_eq!(t.radius(), 4);
        for i in 1..=4 {
            assert!((t.interface_entry(i, 0) - 0.25).abs() < 1e-15);
            assert!(t.interface_entry(i, 1).abs() < 1e-15);
            assert!(t.interface_entry(i, 2).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_mass_identity() {
        let rule = cell_rule();
        for family in KernelFamily::ALL {
            let k = kernel(family, 0.05);
            for dx in [0.05, 0.01, 0.0025] {
                let t = build_table(&k, dx, 3, &rule, family.kind()).unwrap();
                let s: f64 = t.interface_offsets().map(|i| t.interface_entry(i, 0)).sum();
                assert!((s - 1.0).abs() < 1e-12, "{family:?} dx={dx}: {s}");
                for e in 0..rule.len() {
                    let s: f64 = t.quad_offsets().map(|i| t.quad_entry(e, i, 0)).sum();
                    assert!((s - 1.0).abs() < 1e-12, "{family:?} dx={dx} e={e}: {s}");
                }
            }
        }
    }

    #[test]
    fn symmetric_end_entries_mirror_at_the_center_node() {
        let k = kernel(KernelFamily::SedimentationParabola, 0.025);
        let rule = cell_rule();
        let t = build_table(&k, 0.01, 2, &rule, ModelKind::NonlocalSymmetric).unwrap();
        let n = t.radius() as i64;
        let e = 2; // y_e = 0
        assert_eq!(rule.nodes[e], 0.0);
        assert!((t.quad_entry(e, -n, 0) - t.quad_entry(e, n, 0)).abs() < 1e-16);
        // odd modes flip sign under the mirror
        assert!((t.quad_entry(e, -n, 1) + t.quad_entry(e, n, 1)).abs() < 1e-16);
    }

    #[test]
    fn divisibility_enforced() {
        let k = kernel(KernelFamily::Parabolic, 0.1);
        let err = build_table(&k, 0.03, 1, &cell_rule(), ModelKind::NonlocalDownstream).unwrap_err();
        assert!(err.to_string().contains("N dx = eta"), "{err}");
        let k = kernel(KernelFamily::SedimentationParabola, 0.025);
        assert!(build_table(&k, 0.01, 1, &cell_rule(), ModelKind::NonlocalSymmetric).is_ok());
        assert!(build_table(&k, 0.02, 1, &cell_rule(), ModelKind::NonlocalSymmetric).is_err());
        assert!(build_table(&k, 0.01, 1, &cell_rule(), ModelKind::NonlocalDownstream).is_err());
    }

    #[test]
    fn tables_are_deterministic_and_cached() {
        let k = kernel(KernelFamily::DecreasingLinear, 0.1);
        let a = build_table(&k, 0.01, 3, &cell_rule(), ModelKind::NonlocalDownstream).unwrap();
        let b = build_table(&k, 0.01, 3, &cell_rule(), ModelKind::NonlocalDownstream).unwrap();
        assert_eq!(a, b);
        let mut cache = TableCache::new();
        let c1 = cache.get(&k, 0.01, 3, &cell_rule()).unwrap();
        let c2 = cache.get(&k, 0.01, 3, &cell_rule()).unwrap();
        assert!(std::sync::Arc::ptr_eq(&c1, &c2));
        cache.get(&k, 0.005, 3, &cell_rule()).unwrap();
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn dg_convolution_of_constants_and_zero() {
        let g = build_grid(0.0, 1.0, 40).unwrap();
        let rule = cell_rule();
        for family in KernelFamily::ALL {
            let k = kernel(family, 0.05);
            let t = build_table(&k, g.dx(), 2, &rule, family.kind()).unwrap();
            let bc = BoundaryCondition::Periodic;
            let s = l2_project(|_| 0.3, &g, 2).unwrap();
            for r in conv_interfaces_dg(&s, &t, bc).unwrap() {
                assert!((r - 0.3).abs() < 1e-12);
            }
            for r in conv_quadpoints_dg(&s, &t, bc).unwrap() {
                assert!((r - 0.3).abs() < 1e-12);
            }
            let z = l2_project(|_| 0.0, &g, 2).unwrap();
            assert!(conv_interfaces_dg(&z, &t, bc).unwrap().iter().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn moving_average_of_a_linear_profile() {
        // Constant downstream kernel: R(x) = (1/eta) int_x^{x+eta} rho = rho(x + eta/2).
        let g = build_grid(0.0, 1.0, 50).unwrap();
        let eta = 0.1;
        let k = kernel(KernelFamily::Constant, eta);
        let t = build_table(&k, g.dx(), 1, &cell_rule(), ModelKind::NonlocalDownstream).unwrap();
        let rho = |x: f64| 0.2 + 0.5 * x;
        let s = l2_project(rho, &g, 1).unwrap();
        // Absorbing ghosts would not be linear; look only at interfaces whose
        // stencil stays inside the domain.
        let r = conv_interfaces_dg(&s, &t, BoundaryCondition::Absorbing).unwrap();
        for (sidx, &rv) in r.iter().enumerate().take(g.cells() - t.radius() + 1) {
            let x = g.interface(sidx);
            assert!((rv - rho(x + eta / 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_coefficients() {
        assert_eq!(quadratic_cell_coeffs(1.0, 1.0, 1.0), QuadraticCellCoeffs { a0: 1.0, a1: 0.0, a2: 0.0 });
        assert_eq!(quadratic_cell_coeffs(0.5, 0.0, 1.0), QuadraticCellCoeffs { a0: 0.5, a1: 0.5, a2: 0.0 });
        let c = quadratic_cell_coeffs(0.0, -1.0, 1.0);
        assert_eq!(c, QuadraticCellCoeffs { a0: 0.0, a1: 1.0, a2: 0.0 });
        assert_eq!(c.eval(-1.0), -1.0);
        assert_eq!(c.eval(1.0), 1.0);
        let c = quadratic_cell_coeffs(0.3, 0.9, -0.4);
        assert!((c.eval(-1.0) - 0.9).abs() < 1e-15);
        assert!((c.eval(1.0) + 0.4).abs() < 1e-15);
    }

    #[test]
    fn fv_convolution_of_constants() {
        let k = kernel(KernelFamily::SedimentationParabola, 0.025);
        let t = build_table(&k, 0.01, 2, &cell_rule(), ModelKind::NonlocalSymmetric).unwrap();
        let coeffs = vec![QuadraticCellCoeffs::constant(0.4); 100];
        let bc = BoundaryCondition::DirichletConstant { left: 0.4, right: 0.4 };
        for r in conv_interfaces_fv(&coeffs, &t, bc).unwrap() {
            assert!((r - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn fv_symmetric_kernel_sees_mirrored_data_alike() {
        let k = kernel(KernelFamily::SedimentationParabola, 0.05);
        let t = build_table(&k, 0.01, 2, &cell_rule(), ModelKind::NonlocalSymmetric).unwrap();
        let m = 40;
        let coeffs: Vec<_> = (0..m)
            .map(|j| {
                let x = j as f64 - 19.5;
                quadratic_cell_coeffs(0.5 + 0.01 * x, 0.5 + 0.01 * (x - 0.4), 0.5 + 0.01 * (x + 0.3))
            })
            .collect();
        let mirrored: Vec<_> = coeffs
            .iter()
            .rev()
            .map(|c| QuadraticCellCoeffs { a0: c.a0, a1: -c.a1, a2: c.a2 })
            .collect();
        let bc = BoundaryCondition::Periodic;
        let r = conv_interfaces_fv(&coeffs, &t, bc).unwrap();
        let rm = conv_interfaces_fv(&mirrored, &t, bc).unwrap();
        // interface s maps to interface m - s
        for s in 0..=m {
            assert!((r[s] - rm[m - s]).abs() < 1e-13);
        }
    }
}
