//! Flux, velocity and kernel definitions for the supported models.
//!
//! A model is the pair `(f, V)` with flux `g(rho, R) = f(rho) V(R)`. For
//! local models `R = rho`; for non-local models `R` is the convolution of the
//! density with a compactly supported kernel.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Local,
    /// `R(x) = int_0^eta omega(y) rho(x + y) dy` (traffic, looking ahead).
    NonlocalDownstream,
    /// `R(x) = int_{-2eta}^{2eta} omega(y) rho(x + y) dy` (sedimentation).
    NonlocalSymmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// `1/eta` on `[0, eta]`.
    Constant,
    /// `2(eta - x)/eta^2` on `[0, eta]`.
    DecreasingLinear,
    /// `3(eta^2 - x^2)/(2 eta^3)` on `[0, eta]`.
    Parabolic,
    /// `2x/eta^2` on `[0, eta]`.
    IncreasingLinear,
    /// `eta^-1 K(x/eta)` with `K(x) = 3/8 (1 - x^2/4)` on `|x| < 2`.
    SedimentationParabola,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 5] = [
        KernelFamily::Constant,
        KernelFamily::DecreasingLinear,
        KernelFamily::Parabolic,
        KernelFamily::IncreasingLinear,
        KernelFamily::SedimentationParabola,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Constant => "constant",
            KernelFamily::DecreasingLinear => "decreasing-linear",
            KernelFamily::Parabolic => "parabolic",
            KernelFamily::IncreasingLinear => "increasing-linear",
            KernelFamily::SedimentationParabola => "sed-parabola",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        KernelFamily::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "kernel",
                    format!(
                        "unknown kernel `{s}` (expected one of {})",
                        KernelFamily::ALL.map(|k| k.name()).join(", ")
                    ),
                )
            })
    }

    /// The convolution shape this kernel is defined for.
    pub fn kind(self) -> ModelKind {
        match self {
            KernelFamily::SedimentationParabola => ModelKind::NonlocalSymmetric,
            _ => ModelKind::NonlocalDownstream,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub eta: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::config("eta", format!("must be positive, got {eta}")));
        }
        Ok(KernelSpec { family, eta })
    }

    pub fn support(&self) -> (f64, f64) {
        match self.family {
            KernelFamily::SedimentationParabola => (-2.0 * self.eta, 2.0 * self.eta),
            _ => (0.0, self.eta),
        }
    }

    /// Kernel density at `x`; zero outside the support.
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        let eta = self.eta;
        match self.family {
            KernelFamily::Constant => 1.0 / eta,
            KernelFamily::DecreasingLinear => 2.0 * (eta - x) / (eta * eta),
            KernelFamily::Parabolic => 3.0 * (eta * eta - x * x) / (2.0 * eta * eta * eta),
            KernelFamily::IncreasingLinear => 2.0 * x / (eta * eta),
            KernelFamily::SedimentationParabola => {
                let s = x / eta;
                0.375 * (1.0 - 0.25 * s * s) / eta
            }
        }
    }

    /// Points where the kernel (or a derivative) is discontinuous.
    pub fn breakpoints(&self) -> [f64; 2] {
        let (lo, hi) = self.support();
        [lo, hi]
    }
}

/// Real power that stays finite for the slightly negative bases produced by
/// overshoots of high-order schemes.
fn pow_real(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() < i32::MAX as f64 {
        base.powi(exponent as i32)
    } else {
        base.max(0.0).powf(exponent)
    }
}

/// Flux factor `f(rho)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FluxFactor {
    /// `f(rho) = rho`
    Identity,
    /// `f(rho) = rho (1 - rho)^sed_alpha`
    HinderedSettling { sed_alpha: f64 },
}

impl FluxFactor {
    pub fn eval(&self, rho: f64) -> f64 {
        match *self {
            FluxFactor::Identity => rho,
            FluxFactor::HinderedSettling { sed_alpha } => rho * pow_real(1.0 - rho, sed_alpha),
        }
    }
}

/// Velocity factor `V(R)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VelocityFactor {
    /// `V = 1`
    Unit,
    /// `V(R) = (1 - R)^n`; `n = 1` is the LWR velocity.
    Power { n: f64 },
}

impl VelocityFactor {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            VelocityFactor::Unit => 1.0,
            VelocityFactor::Power { n: 1.0 } => 1.0 - r,
            VelocityFactor::Power { n } => pow_real(1.0 - r, n),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub kind: ModelKind,
    pub flux: FluxFactor,
    pub velocity: VelocityFactor,
    pub kernel: Option<KernelSpec>,
    pub density_range: (f64, f64),
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        kind: ModelKind,
        flux: FluxFactor,
        velocity: VelocityFactor,
        kernel: Option<KernelSpec>,
    ) -> Result<Self> {
        match (kind, kernel) {
            (ModelKind::Local, Some(_)) => {
                return Err(Error::config("kernel", "local models take no kernel"));
            }
            (ModelKind::Local, None) => {}
            (_, None) => {
                return Err(Error::config("kernel", "non-local models need a kernel and eta"));
            }
            (kind, Some(k)) if k.family.kind() != kind => {
                return Err(Error::config(
                    "kernel",
                    format!("kernel `{}` does not fit a {kind:?} model", k.family.name()),
                ));
            }
            _ => {}
        }
        Ok(ModelSpec {
            name: name.into(),
            kind,
            flux,
            velocity,
            kernel,
            density_range: (0.0, 1.0),
        })
    }

    /// Linear advection `rho_t + rho_x = 0`.
    pub fn advection() -> Self {
        Self::new("advection", ModelKind::Local, FluxFactor::Identity, VelocityFactor::Unit, None)
            .expect("valid model")
    }

    /// Local LWR traffic model, `g = rho (1 - rho)`.
    pub fn lwr() -> Self {
        Self::new(
            "lwr",
            ModelKind::Local,
            FluxFactor::Identity,
            VelocityFactor::Power { n: 1.0 },
            None,
        )
        .expect("valid model")
    }

    /// Non-local LWR traffic model with a downstream kernel.
    pub fn nonlocal_lwr(kernel: KernelSpec) -> Result<Self> {
        Self::new(
            "nonlocal-lwr",
            ModelKind::NonlocalDownstream,
            FluxFactor::Identity,
            VelocityFactor::Power { n: 1.0 },
            Some(kernel),
        )
    }

    /// Non-local sedimentation, `f = rho (1-rho)^sed_alpha`, `V = (1-R)^n`.
    pub fn sedimentation(kernel: KernelSpec, sed_alpha: f64, n: f64) -> Result<Self> {
        if !(sed_alpha == 0.0 || sed_alpha >= 1.0) {
            return Err(Error::config("sed-alpha", format!("must be 0 or >= 1, got {sed_alpha}")));
        }
        if !(n >= 1.0) {
            return Err(Error::config("sed-n", format!("must be >= 1, got {n}")));
        }
        Self::new(
            "sedimentation",
            ModelKind::NonlocalSymmetric,
            FluxFactor::HinderedSettling { sed_alpha },
            VelocityFactor::Power { n },
            Some(kernel),
        )
    }

    pub fn is_local(&self) -> bool {
        self.kind == ModelKind::Local
    }

    pub fn eta(&self) -> Option<f64> {
        self.kernel.map(|k| k.eta)
    }

    pub fn f(&self, rho: f64) -> f64 {
        self.flux.eval(rho)
    }

    pub fn v(&self, r: f64) -> f64 {
        self.velocity.eval(r)
    }

    /// `g(rho, R) = f(rho) V(R)`.
    pub fn flux_g(&self, rho: f64, r: f64) -> f64 {
        self.f(rho) * self.v(r)
    }

    /// The classical flux `g(rho) = f(rho) V(rho)`.
    pub fn local_flux(&self, rho: f64) -> f64 {
        self.flux_g(rho, rho)
    }

    /// Global Lax-Friedrichs constant `max |d/drho f(rho) V(rho)|` over the
    /// density range, sampled at 100 001 points with central differences and
    /// inflated by `1 + 1e-6`.
    pub fn lipschitz_alpha(&self) -> f64 {
        const SAMPLES: usize = 100_001;
        const STEP: f64 = 1e-7;
        let (lo, hi) = self.density_range;
        let max = (0..SAMPLES)
            .map(|i| {
                let rho = lo + (hi - lo) * i as f64 / (SAMPLES - 1) as f64;
                ((self.local_flux(rho + STEP) - self.local_flux(rho - STEP)) / (2.0 * STEP)).abs()
            })
            .fold(0.0, f64::max);
        max * (1.0 + 1e-6)
    }
}

/// Free-function form of [`ModelSpec::flux_g`].
pub fn flux_g(model: &ModelSpec, rho: f64, r: f64) -> f64 {
    model.flux_g(rho, r)
}

pub fn kernel_eval(kernel: &KernelSpec, x: f64) -> f64 {
    kernel.eval(x)
}

pub fn lipschitz_alpha(model: &ModelSpec) -> f64 {
    model.lipschitz_alpha()
}
