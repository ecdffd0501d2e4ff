// Checks shared by the property suites and the acceptance run. Each returns
// the measured quantity so callers can compare it against their tolerance.
#![allow(dead_code)]

use std::sync::Arc;

use nonlocal_claw::basis::{cell_rule, legendre};
use nonlocal_claw::convolution::{
    build_table, conv_interfaces_dg, conv_interfaces_fv, conv_quadpoints_dg, QuadraticCellCoeffs,
};
use nonlocal_claw::dg::{limit_coeffs, DgState, Limiter};
use nonlocal_claw::fvweno::{weno_left_with, weno_right_with, FvOperator, FvOrder, Weights};
use nonlocal_claw::mesh::{BoundaryCondition, Grid};
use nonlocal_claw::models::{KernelFamily, KernelSpec, ModelKind, ModelSpec};
use nonlocal_claw::solver::{initialize, Operator, Problem, Scheme, Solution};
use nonlocal_claw::time::{ssp_rk3_step, FnOperator, SpatialOperator, TimeConfig};

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Integral of `f` over `[a, b]`, split at every point of `cuts` inside it.
pub fn piecewise_integral(f: &dyn Fn(f64) -> f64, a: f64, b: f64, cuts: &[f64], tol: f64) -> f64 {
    let mut pts: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.windows(2).map(|w| adaptive_simpson(f, w[0], w[1], tol)).sum()
}

pub fn kernel(family: KernelFamily, eta: f64) -> KernelSpec {
    KernelSpec::new(family, eta).unwrap()
}

/// `|int omega - 1|`, integrated independently of the library.
pub fn kernel_mass_defect(family: KernelFamily, eta: f64) -> f64 {
    let k = kernel(family, eta);
    let (lo, hi) = k.support();
    (piecewise_integral(&|x| k.eval(x), lo, hi, &[], 1e-15) - 1.0).abs()
}

/// Largest `|sum_i Gamma^0 - 1|` over the interface row and every node row.
pub fn table_mass_defect(family: KernelFamily, eta: f64, cells_per_eta: usize, degree: usize) -> f64 {
    let k = kernel(family, eta);
    let width = match family.kind() {
        ModelKind::NonlocalSymmetric => 2.0 * eta,
        _ => eta,
    };
    let dx = width / cells_per_eta as f64;
    let t = build_table(&k, dx, degree, &cell_rule(), family.kind()).unwrap();
    let mut worst = (t.interface_offsets().map(|i| t.interface_entry(i, 0)).sum::<f64>() - 1.0).abs();
    for e in 0..t.quad_nodes() {
        let s: f64 = t.quad_offsets().map(|i| t.quad_entry(e, i, 0)).sum();
        worst = worst.max((s - 1.0).abs());
    }
    worst
}

/// Periodic grid on `[0, 1]` sized so the kernel covers `cells_per_eta` cells.
pub fn kernel_grid(family: KernelFamily, cells_per_eta: usize, cells: usize) -> (KernelSpec, Grid) {
    let dx = 1.0 / cells as f64;
    let eta = match family.kind() {
        ModelKind::NonlocalSymmetric => 0.5 * cells_per_eta as f64 * dx,
        _ => cells_per_eta as f64 * dx,
    };
    (kernel(family, eta), Grid::new(0.0, 1.0, cells).unwrap())
}

/// Worst deviation of the table convolution of a periodic DG polynomial from
/// an adaptive-quadrature evaluation of `int omega(y) rho(x + y) dy`, at every
/// interface and every Gauss node.
pub fn convolution_oracle_defect(family: KernelFamily, state: &DgState, cells_per_eta: usize) -> f64 {
    let grid = *state.grid();
    let dx = grid.dx();
    let (k, _) = kernel_grid(family, cells_per_eta, grid.cells());
    let table = build_table(&k, dx, state.degree(), &cell_rule(), family.kind()).unwrap();
    let bc = BoundaryCondition::Periodic;
    let rho = |x: f64| {
        let len = grid.length();
        let y = (x - grid.interface(0)).rem_euclid(len);
        let j = ((y / dx).floor() as usize).min(grid.cells() - 1);
        let zeta = 2.0 * (y - (j as f64 + 0.5) * dx) / dx;
        state.cell(j).iter().enumerate().map(|(l, c)| c * legendre(l, zeta)).sum::<f64>()
    };
    let (lo, hi) = k.support();
    let oracle = |x: f64| {
        // cuts where the integrand changes polynomial piece
        let first = ((x + lo - grid.interface(0)) / dx).floor() as i64 - 1;
        let last = ((x + hi - grid.interface(0)) / dx).ceil() as i64 + 1;
        let cuts: Vec<f64> = (first..=last).map(|s| grid.interface(0) + s as f64 * dx - x).collect();
        piecewise_integral(&|y| k.eval(y) * rho(x + y), lo, hi, &cuts, 1e-15)
    };
    let at_faces = conv_interfaces_dg(state, &table, bc).unwrap();
    let at_nodes = conv_quadpoints_dg(state, &table, bc).unwrap();
    let rule = cell_rule();
    let mut worst: f64 = 0.0;
    for (s, r) in at_faces.iter().enumerate() {
        worst = worst.max((r - oracle(grid.interface(s))).abs());
    }
    for j in 0..grid.cells() {
        for (e, y) in rule.nodes.iter().enumerate() {
            let x = grid.center(j) + 0.5 * dx * y;
            worst = worst.max((at_nodes[j * rule.len() + e] - oracle(x)).abs());
        }
    }
    worst
}

/// Every model/kernel pairing the solvers accept.
pub fn all_models() -> Vec<ModelSpec> {
    let mut out = vec![ModelSpec::advection(), ModelSpec::lwr()];
    for family in [
        KernelFamily::Constant,
        KernelFamily::DecreasingLinear,
        KernelFamily::Parabolic,
        KernelFamily::IncreasingLinear,
    ] {
        out.push(ModelSpec::nonlocal_lwr(kernel(family, 0.1)).unwrap());
    }
    out.push(ModelSpec::sedimentation(kernel(KernelFamily::SedimentationParabola, 0.05), 1.0, 3.0).unwrap());
    out
}

/// Boundary conditions under which the constant `c` is an exact steady state.
pub fn steady_bcs(model: &ModelSpec, c: f64) -> Vec<BoundaryCondition> {
    let mut out = vec![
        BoundaryCondition::Periodic,
        BoundaryCondition::Absorbing,
        BoundaryCondition::DirichletConstant { left: c, right: c },
    ];
    // closed walls hold a constant only if nothing flows through it
    if model.local_flux(c) == 0.0 {
        out.push(BoundaryCondition::ZeroFlux { left: c, right: c });
    }
    out
}

/// The operator of `problem` on `grid`, as a trait object.
pub fn operator(problem: &Problem, grid: &Grid) -> Box<dyn SpatialOperator> {
    match problem.operator(grid).unwrap() {
        Operator::Dg(op) => Box::new(op),
        Operator::Fv(op) => Box::new(op),
    }
}

fn state_vec(s: &Solution) -> Vec<f64> {
    match s {
        Solution::Dg(d) => d.coeffs().to_vec(),
        Solution::Fv(f) => f.averages.clone(),
    }
}

/// Largest change of any state entry after one SSP-RK3 step from `rho = c`.
pub fn constant_state_drift(model: &ModelSpec, scheme: Scheme, bc: BoundaryCondition, c: f64) -> f64 {
    let grid = Grid::new(0.0, 1.0, 40).unwrap();
    let limiter = if scheme.is_dg() { Limiter::Tvb { mb: 10.0 } } else { Limiter::None };
    let problem = Problem::new(model.clone(), scheme, bc, TimeConfig::new(scheme.default_cfl(), 1.0).unwrap())
        .with_limiter(limiter);
    let op = operator(&problem, &grid);
    let u0 = state_vec(&initialize(scheme, &grid, |_| c, &[]).unwrap());
    let dt = problem.time.dt(grid.dx(), model.lipschitz_alpha()).unwrap();
    let u1 = ssp_rk3_step(op.as_ref(), &u0, 0.0, dt).unwrap();
    u0.iter().zip(&u1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// `|mass(T) - mass(0)| / T` for a periodic run of smooth data.
pub fn periodic_mass_drift(model: &ModelSpec, scheme: Scheme, base: f64, amp: f64, phase: f64, t_final: f64) -> f64 {
    let grid = Grid::new(0.0, 1.0, 40).unwrap();
    let rho0 = |x: f64| base + amp * (2.0 * std::f64::consts::PI * x + phase).sin();
    let initial = initialize(scheme, &grid, rho0, &[]).unwrap();
    let limiter = if scheme.is_dg() { Limiter::Tvb { mb: 10.0 } } else { Limiter::None };
    let problem = Problem::new(
        model.clone(),
        scheme,
        BoundaryCondition::Periodic,
        TimeConfig::new(scheme.default_cfl(), t_final).unwrap(),
    )
    .with_limiter(limiter);
    let end = problem.solve(&initial).unwrap();
    (end.mass() - initial.mass()).abs() / t_final
}

/// Exact averages of the polynomial `sum_p coeffs[p] x^p` over `count`
/// consecutive cells of width `h`, the middle one centred on zero.
pub fn poly_averages(coeffs: &[f64], h: f64, count: usize) -> Vec<f64> {
    let antider = |x: f64| coeffs.iter().enumerate().map(|(p, c)| c * x.powi(p as i32 + 1) / (p + 1) as f64).sum::<f64>();
    let half = (count / 2) as f64;
    (0..count)
        .map(|i| {
            let a = (i as f64 - half - 0.5) * h;
            (antider(a + h) - antider(a)) / h
        })
        .collect()
}

pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Worst face error of the `k`-stencil reconstruction for a polynomial of
/// the given coefficients, centred cell `[-h/2, h/2]`.
pub fn weno_face_defect(coeffs: &[f64], h: f64, k: usize, weights: Weights) -> f64 {
    let window = poly_averages(coeffs, h, 2 * k - 1);
    let left = weno_left_with(&window, k, weights);
    let right = weno_right_with(&window, k, weights);
    (left - poly_eval(coeffs, 0.5 * h)).abs().max((right - poly_eval(coeffs, -0.5 * h)).abs())
}

/// `(mean preserved, idempotent)` for one application of `limiter`.
pub fn limiter_properties(coeffs: &[f64], modes: usize, dx: f64, limiter: Limiter, bc: BoundaryCondition) -> (bool, bool) {
    let mut once = coeffs.to_vec();
    limit_coeffs(&mut once, modes, dx, limiter, bc).unwrap();
    let mut twice = once.clone();
    limit_coeffs(&mut twice, modes, dx, limiter, bc).unwrap();
    let means = coeffs.iter().step_by(modes).zip(once.iter().step_by(modes)).all(|(a, b)| a == b);
    (means, once == twice)
}

/// Relative deviation of one SSP-RK3 step on `y' = lambda y` from the cubic
/// Taylor polynomial of `exp(lambda dt)`.
pub fn rk3_taylor_defect(lambda: f64, dt: f64, y0: f64) -> f64 {
    let op = FnOperator(move |u: &[f64]| Ok(u.iter().map(|v| lambda * v).collect::<Vec<_>>()));
    let y1 = ssp_rk3_step(&op, &[y0], 0.0, dt).unwrap()[0];
    let z = lambda * dt;
    let expected = y0 * (1.0 + z + z * z / 2.0 + z * z * z / 6.0);
    (y1 - expected).abs() / expected.abs().max(y0.abs())
}

/// `dx`-weighted L1 errors of `R_{j+1/2}` computed from WENO5 in-cell
/// quadratics and from piecewise-constant cells, for smooth periodic data
/// on `[0, 1]`.
pub fn convolution_errors(family: KernelFamily, eta: f64, cells: usize) -> (f64, f64) {
    use std::f64::consts::PI;
    let grid = Grid::new(0.0, 1.0, cells).unwrap();
    let dx = grid.dx();
    let k = kernel(family, eta);
    let rho = |x: f64| 0.5 + 0.3 * (2.0 * PI * x).sin() + 0.1 * (4.0 * PI * x).cos();
    // exact averages
    let prim = |x: f64| 0.5 * x - 0.3 * (2.0 * PI * x).cos() / (2.0 * PI) + 0.1 * (4.0 * PI * x).sin() / (4.0 * PI);
    let averages: Vec<f64> = (0..cells).map(|j| (prim(grid.interface(j + 1)) - prim(grid.interface(j))) / dx).collect();
    let model = ModelSpec::nonlocal_lwr(k).unwrap();
    let table = Arc::new(build_table(&k, dx, 2, &cell_rule(), model.kind).unwrap());
    let bc = BoundaryCondition::Periodic;
    let op = FvOperator::new(grid, FvOrder::Weno5, model, Some(table.clone()), bc).unwrap();
    let quad = op.quadratics(&averages).unwrap();
    let flat: Vec<QuadraticCellCoeffs> = averages.iter().map(|&a| QuadraticCellCoeffs::constant(a)).collect();
    let r_quad = conv_interfaces_fv(&quad, &table, bc).unwrap();
    let r_flat = conv_interfaces_fv(&flat, &table, bc).unwrap();
    let (lo, hi) = k.support();
    let mut e_quad = 0.0;
    let mut e_flat = 0.0;
    for s in 0..cells {
        let x = grid.interface(s);
        let exact = piecewise_integral(&|y| k.eval(y) * rho(x + y), lo, hi, &[], 1e-14);
        e_quad += dx * (r_quad[s] - exact).abs();
        e_flat += dx * (r_flat[s] - exact).abs();
    }
    (e_quad, e_flat)
}

/// Least-squares slope of `log e` against `log dx`.
pub fn fitted_slope(cells: &[usize], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = cells.iter().map(|&m| (1.0 / m as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
