//! Legendre basis on the reference cell `[-1, 1]`, Gauss-Legendre rules and
//! L2 projection of initial data.

use crate::dg::DgState;
use crate::error::{Error, Result};
use crate::mesh::Grid;

/// Gauss nodes per cell used by the DG volume terms, projections and errors.
pub const CELL_NODES: usize = 5;

/// Legendre polynomial `P_l(y)`, normalized so that `P_l(1) = 1`.
pub fn legendre(l: usize, y: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => y,
        _ => {
            let (mut p0, mut p1) = (1.0, y);
            for n in 1..l {
                let n = n as f64;
                let p2 = ((2.0 * n + 1.0) * y * p1 - n * p0) / (n + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// `P_l'(y)` via `P'_{n+1} = P'_{n-1} + (2n + 1) P_n`.
pub fn legendre_deriv(l: usize, y: f64) -> f64 {
    let mut d = [0.0, 1.0];
    if l < 2 {
        return d[l];
    }
    for n in 1..l {
        let next = d[0] + (2 * n + 1) as f64 * legendre(n, y);
        d = [d[1], next];
    }
    d[1]
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `int_{-1}^{1} f`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&y, &w)| w * f(y)).sum()
    }

    /// `int_a^b f`, mapping the rule affinely onto `[a, b]`.
    pub fn integrate_on(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self.integrate(|y| f(mid + half * y))
    }
}

/// Gauss-Legendre rule with `n` nodes, `1 <= n <= 20`, by Newton iteration on
/// `P_n` from the asymptotic guess `cos(pi (i - 1/4) / (n + 1/2))`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if !(1..=20).contains(&n) {
        return Err(Error::config("quadrature nodes", format!("need 1..=20, got {n}")));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut y = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let step = legendre(n, y) / legendre_deriv(n, y);
            y -= step;
            if step.abs() <= 1e-15 {
                break;
            }
        }
        let dp = legendre_deriv(n, y);
        let w = 2.0 / ((1.0 - y * y) * dp * dp);
        // Nodes come out in decreasing order; store ascending and mirrored.
        nodes[n - 1 - i] = y;
        nodes[i] = -y;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// The cell rule used throughout the solvers.
pub fn cell_rule() -> QuadratureRule {
    gauss_legendre(CELL_NODES).expect("valid node count")
}

/// L2 projection of `rho0` onto degree-`k` Legendre polynomials per cell,
/// `c_l = (2l+1)/2 int_{-1}^{1} rho0(x_j + dx y / 2) P_l(y) dy`.
pub fn l2_project(rho0: impl Fn(f64) -> f64, grid: &Grid, k: usize) -> Result<DgState> {
    l2_project_piecewise(rho0, &[], grid, k)
}

/// As [`l2_project`], but integrates separately on each side of the given
/// discontinuities of `rho0` so that jumps inside a cell are handled exactly.
pub fn l2_project_piecewise(
    rho0: impl Fn(f64) -> f64,
    jumps: &[f64],
    grid: &Grid,
    k: usize,
) -> Result<DgState> {
    if k > 3 {
        return Err(Error::config("degree", format!("supported degrees are 0..=3, got {k}")));
    }
    let rule = cell_rule();
    let modes = k + 1;
    let dx = grid.dx();
    let mut coeffs = vec![0.0; grid.cells() * modes];
    for (j, cell) in coeffs.chunks_mut(modes).enumerate() {
        let xc = grid.center(j);
        let mut cuts = vec![-1.0];
        cuts.extend(
            jumps
                .iter()
                .map(|&x| (x - xc) / (0.5 * dx))
                .filter(|&y| y > -1.0 && y < 1.0),
        );
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        for (l, c) in cell.iter_mut().enumerate() {
            let integral: f64 = cuts
                .windows(2)
                .map(|w| rule.integrate_on(w[0], w[1], |y| rho0(xc + 0.5 * dx * y) * legendre(l, y)))
                .sum();
            *c = 0.5 * (2 * l + 1) as f64 * integral;
        }
    }
    DgState::new(*grid, k, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_grid;

    #[test]
    fn legendre_values() {
        assert_eq!(legendre(2, 1.0), 1.0);
        assert_eq!(legendre(2, 0.0), -0.5);
        for l in 0..6 {
            assert!((legendre(l, 1.0) - 1.0).abs() < 1e-15);
            assert!((legendre(l, -1.0) - if l % 2 == 0 { 1.0 } else { -1.0 }).abs() < 1e-15);
        }
        // P_3 = (5y^3 - 3y)/2, P_3' = (15y^2 - 3)/2
        let y = 0.3;
        assert!((legendre(3, y) - 0.5 * (5.0 * y * y * y - 3.0 * y)).abs() < 1e-15);
        assert!((legendre_deriv(3, y) - 0.5 * (15.0 * y * y - 3.0)).abs() < 1e-14);
        assert!((legendre_deriv(2, y) - 3.0 * y).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let h = 1e-6;
        for l in 0..6 {
            for i in 0..=10 {
                let y = -0.9 + 0.18 * i as f64;
                let fd = (legendre(l, y + h) - legendre(l, y - h)) / (2.0 * h);
                assert!((legendre_deriv(l, y) - fd).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn orthogonality() {
        let rule = gauss_legendre(CELL_NODES).unwrap();
        for l in 0..5 {
            for m in 0..5 {
                let ip = rule.integrate(|y| legendre(l, y) * legendre(m, y));
                let expect = if l == m { 2.0 / (2 * l + 1) as f64 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-13, "({l},{m}) {ip}");
            }
        }
    }

    #[test]
    fn gauss_rules() {
        let r1 = gauss_legendre(1).unwrap();
        assert_eq!(r1.nodes, vec![0.0]);
        assert!((r1.weights[0] - 2.0).abs() < 1e-15);
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(21).is_err());

        let r5 = gauss_legendre(5).unwrap();
        assert!((r5.integrate(|y| y.powi(8)) - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_rules_are_exact_and_symmetric() {
        for n in 1..=20 {
            let rule = gauss_legendre(n).unwrap();
            assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for w in rule.nodes.windows(2) {
                assert!(w[0] < w[1]);
            }
            for i in 0..n {
                assert!((rule.nodes[i] + rule.nodes[n - 1 - i]).abs() < 1e-15);
                assert!(rule.weights[i] > 0.0);
            }
            for p in 0..2 * n {
                let exact = if p % 2 == 0 { 2.0 / (p + 1) as f64 } else { 0.0 };
                assert!((rule.integrate(|y| y.powi(p as i32)) - exact).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn five_point_rule_against_tabulated_roots() {
        // Roots of P_5: 0, +-sqrt(5 -+ 2 sqrt(10/7))/3.
        let r = gauss_legendre(5).unwrap();
        let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
        let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
        let expect = [-b, -a, 0.0, a, b];
        for (x, e) in r.nodes.iter().zip(expect) {
            assert!((x - e).abs() < 1e-15);
        }
        let wa = (322.0 + 13.0 * 70.0f64.sqrt()) / 900.0;
        let wb = (322.0 - 13.0 * 70.0f64.sqrt()) / 900.0;
        for (w, e) in r.weights.iter().zip([wb, wa, 128.0 / 225.0, wa, wb]) {
            assert!((w - e).abs() < 1e-15);
        }
    }

    #[test]
    fn projections() {
        let g = build_grid(0.0, 1.0, 5).unwrap();
        let s = l2_project(|_| 0.7, &g, 3).unwrap();
        for j in 0..5 {
            assert!((s.cell(j)[0] - 0.7).abs() < 1e-15);
            assert!(s.cell(j)[1..].iter().all(|c| c.abs() < 1e-15));
        }
        let s = l2_project(|x| x, &g, 2).unwrap();
        for j in 0..5 {
            let c = s.cell(j);
            assert!((c[0] - g.center(j)).abs() < 1e-15);
            assert!((c[1] - g.dx() / 2.0).abs() < 1e-15);
            assert!(c[2].abs() < 1e-15);
        }
        // y^2 = 1/3 P_0 + 2/3 P_2
        let g = build_grid(-1.0, 1.0, 1).unwrap();
        let s = l2_project(|x| x * x, &g, 3).unwrap();
        let c = s.cell(0);
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(c[1].abs() < 1e-15);
        assert!((c[2] - 2.0 / 3.0).abs() < 1e-15);
        assert!(c[3].abs() < 1e-15);
    }

    #[test]
    fn projection_preserves_cell_means_of_polynomials() {
        let g = build_grid(-0.3, 1.1, 7).unwrap();
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(4) - 0.3 * x.powi(9);
        let antider = |x: f64| x - x * x + 0.1 * x.powi(5) - 0.03 * x.powi(10);
        let s = l2_project(p, &g, 1).unwrap();
        for j in 0..7 {
            let exact = (antider(g.interface(j + 1)) - antider(g.interface(j))) / g.dx();
            assert!((s.mean(j) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn piecewise_projection_of_a_jump() {
        let g = build_grid(0.0, 1.0, 2).unwrap();
        // jump at x = 0.125, a quarter into cell 0
        let s = l2_project_piecewise(|x| if x < 0.125 { 1.0 } else { 0.0 }, &[0.125], &g, 1).unwrap();
        assert!((s.mean(0) - 0.25).abs() < 1e-15);
        // c1 = 3/2 int_{-1}^{-1/2} y dy = 3/2 * (1/8 - 1/2) = -9/16
        assert!((s.cell(0)[1] + 9.0 / 16.0).abs() < 1e-15);
        assert_eq!(s.mean(1), 0.0);
    }
}
