//! SSP (TVD) third-order Runge-Kutta time stepping with CFL step control.

use crate::error::{Error, Result};

/// A semi-discrete operator `du/dt = L(u)` on a flat state vector.
pub trait SpatialOperator {
    fn rhs(&self, u: &[f64]) -> Result<Vec<f64>>;

    /// Applied after every Runge-Kutta stage (slope limiting).
    fn post_stage(&self, _u: &mut [f64]) -> Result<()> {
        Ok(())
    }
}

/// Adapts a closure into a [`SpatialOperator`] without a post-stage hook.
pub struct FnOperator<F>(pub F);

impl<F> SpatialOperator for FnOperator<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    fn rhs(&self, u: &[f64]) -> Result<Vec<f64>> {
        (self.0)(u)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum DtReduction {
    #[default]
    None,
    /// `dt = cfl dx / alpha * (dx / reference_dx)^(exponent - 1)`, so that
    /// `dt ~ dx^exponent` under refinement and the coarsest grid of a study
    /// (`reference_dx`) runs at the plain CFL step.
    PowerLaw { exponent: f64, reference_dx: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeConfig {
    pub cfl: f64,
    pub t_final: f64,
    pub dt_reduction: DtReduction,
}

impl TimeConfig {
    pub fn new(cfl: f64, t_final: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::config("cfl", format!("must lie in (0, 1], got {cfl}")));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::config("t-final", format!("must be positive, got {t_final}")));
        }
        Ok(TimeConfig { cfl, t_final, dt_reduction: DtReduction::None })
    }

    pub fn with_reduction(mut self, r: DtReduction) -> Self {
        self.dt_reduction = r;
        self
    }

    /// Nominal step for grid spacing `dx` and Lax-Friedrichs constant `lf_alpha`.
    pub fn dt(&self, dx: f64, lf_alpha: f64) -> Result<f64> {
        let base = cfl_dt(dx, lf_alpha, self.cfl)?;
        Ok(match self.dt_reduction {
            DtReduction::None => base,
            DtReduction::PowerLaw { exponent, reference_dx } => {
                base * (dx / reference_dx).powf(exponent - 1.0).min(1.0)
            }
        })
    }
}

/// `dt = cfl dx / lf_alpha`.
pub fn cfl_dt(dx: f64, lf_alpha: f64, cfl: f64) -> Result<f64> {
    for (name, v) in [("dx", dx), ("lf_alpha", lf_alpha), ("cfl", cfl)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::config(name, format!("must be positive, got {v}")));
        }
    }
    Ok(cfl * dx / lf_alpha)
}

fn check_finite(u: &[f64], stage: usize, time: f64) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { stage, time })
    }
}

/// One SSP-RK3 step from time `t`:
///
/// ```text
/// u1 = u + dt L(u)
/// u2 = 3/4 u + 1/4 u1 + 1/4 dt L(u1)
/// u' = 1/3 u + 2/3 u2 + 2/3 dt L(u2)
/// ```
///
/// with the operator's post-stage hook after each stage.
pub fn ssp_rk3_step<O: SpatialOperator + ?Sized>(op: &O, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
    let l0 = op.rhs(u)?;
    let mut u1: Vec<f64> = u.iter().zip(&l0).map(|(a, l)| a + dt * l).collect();
    op.post_stage(&mut u1)?;
    check_finite(&u1, 1, t)?;

    let l1 = op.rhs(&u1)?;
    let mut u2: Vec<f64> = u
        .iter()
        .zip(&u1)
        .zip(&l1)
        .map(|((a, b), l)| 0.75 * a + 0.25 * b + 0.25 * dt * l)
        .collect();
    op.post_stage(&mut u2)?;
    check_finite(&u2, 2, t)?;

    let l2 = op.rhs(&u2)?;
    let mut out: Vec<f64> = u
        .iter()
        .zip(&u2)
        .zip(&l2)
        .map(|((a, b), l)| a / 3.0 + 2.0 / 3.0 * b + 2.0 / 3.0 * dt * l)
        .collect();
    op.post_stage(&mut out)?;
    check_finite(&out, 3, t)?;
    Ok(out)
}

/// Result of [`integrate`].
#[derive(Clone, Debug)]
pub struct Integration {
    pub state: Vec<f64>,
    pub steps: usize,
    pub time: f64,
}

/// Advances `u0` to `config.t_final`, clipping the final step so the run
/// lands on it exactly. `observer(step, t, u)` is called after the initial
/// state and after every step.
pub fn integrate<O, F>(
    op: &O,
    u0: Vec<f64>,
    config: &TimeConfig,
    dx: f64,
    lf_alpha: f64,
    mut observer: F,
) -> Result<Integration>
where
    O: SpatialOperator + ?Sized,
    F: FnMut(usize, f64, &[f64]),
{
    let dt = config.dt(dx, lf_alpha)?;
    let mut u = u0;
    let mut t = 0.0;
    let mut steps = 0;
    observer(0, t, &u);
    while t < config.t_final {
        let remaining = config.t_final - t;
        // avoid a sliver step from rounding in the accumulated time
        let h = if remaining <= dt * (1.0 + 1e-10) { remaining } else { dt };
        u = ssp_rk3_step(op, &u, t, h)?;
        steps += 1;
        t = if h == remaining { config.t_final } else { t + h };
        observer(steps, t, &u);
    }
    Ok(Integration { state: u, steps, time: t })
}
