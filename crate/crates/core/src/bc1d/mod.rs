//! Continuum operators on `Ω = (0, 1)` for the four Dirichlet treatments.
//!
//! Every treatment replaces the missing values of `u` on the outer collar
//! `B_δ(x) \ Ω` by a ghost extension and evaluates
//! `∫_{B_δ(x)} (u(x) - ũ(y)) w_δ(|x - y|) dy`:
//!
//! * nonlocal gradient: `ũ(y) = u(x) + G_δu(x) (y - x)` with the averaged
//!   slope `G_δ` (constant gradient kernel);
//! * constant extension: `ũ = g` (the boundary value);
//! * Morris: linear extrapolation through `g` at the closest boundary point;
//! * Zhang–Shi: a separate point-integral formulation with a smooth kernel on
//!   horizon `2δ`, see [`zhang_shi`].
//!
//! Integrals are evaluated by adaptive quadrature, which doubles as the
//! continuum oracle for the collocation matrices in [`crate::discrete1d`].

mod apply;
mod assumptions;
pub mod zhang_shi;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use apply::{
    apply_comparison, apply_operator, lift_inhomogeneous, nonlocal_gradient, truncation_error, Lift,
};
pub use assumptions::{check_assumptions, AssumptionReport, Margin};
pub use zhang_shi::{build_zs_kernels, ZSKernelSet};

use crate::error::{Error, Result};
use crate::kernel::{KernelProfile, ScaledKernel};
use crate::quad::Adaptive;

/// Boundary treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NonlocalGradient,
    ConstantExtension,
    Morris,
    ZhangShi,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::NonlocalGradient,
        Method::ConstantExtension,
        Method::Morris,
        Method::ZhangShi,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::NonlocalGradient => "nonlocal_gradient",
            Method::ConstantExtension => "constant_extension",
            Method::Morris => "morris",
            Method::ZhangShi => "zhang_shi",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "nonlocal_gradient" | "ng" => Ok(Method::NonlocalGradient),
            "constant_extension" | "ce" => Ok(Method::ConstantExtension),
            "morris" => Ok(Method::Morris),
            "zhang_shi" | "zs" => Ok(Method::ZhangShi),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// A boundary treatment bound to a kernel, a horizon and Dirichlet data.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub kernel: ScaledKernel,
    pub method: Method,
    /// `(u(0), u(1))`.
    pub boundary_data: (f64, f64),
    zs: Option<Arc<ZSKernelSet>>,
}

impl OperatorSpec {
    pub fn new(profile: KernelProfile, delta: f64, method: Method) -> Result<Self> {
        let kernel = ScaledKernel::new(profile, delta)?;
        let zs = if method == Method::ZhangShi {
            if delta >= 0.25 {
                return Err(Error::LayerOverlap(delta));
            }
            Some(Arc::new(build_zs_kernels(delta)?))
        } else {
            None
        };
        Ok(OperatorSpec {
            kernel,
            method,
            boundary_data: (0.0, 0.0),
            zs,
        })
    }

    /// Sets inhomogeneous Dirichlet data. The Zhang–Shi treatment is only
    /// available for homogeneous data.
    pub fn with_boundary_data(mut self, left: f64, right: f64) -> Result<Self> {
        if self.method == Method::ZhangShi && (left != 0.0 || right != 0.0) {
            return Err(Error::InvalidConfig(
                "zhang_shi supports homogeneous boundary data only".into(),
            ));
        }
        self.boundary_data = (left, right);
        Ok(self)
    }

    /// Same kernel and horizon, different treatment.
    pub fn with_method(&self, method: Method) -> Result<Self> {
        let spec = OperatorSpec::new(self.kernel.base.clone(), self.delta(), method)?;
        spec.with_boundary_data(self.boundary_data.0, self.boundary_data.1)
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.kernel.delta
    }

    pub fn zs(&self) -> Option<&ZSKernelSet> {
        self.zs.as_deref()
    }

    pub(crate) fn quad(&self) -> Adaptive {
        Adaptive::default()
    }

    /// Boundary layer containing `x`, if any.
    pub(crate) fn layer(&self, x: f64) -> Option<Layer> {
        let d = self.delta();
        if x < d {
            Some(Layer {
                side: Side::Left,
                dist: x,
                data: self.boundary_data.0,
            })
        } else if x > 1.0 - d {
            Some(Layer {
                side: Side::Right,
                dist: 1.0 - x,
                data: self.boundary_data.1,
            })
        } else {
            None
        }
    }

    /// Quadrature breakpoints for integrands in `y` built from `w_δ(|x-y|)`.
    pub(crate) fn breaks_around(&self, x: f64) -> Vec<f64> {
        let d = self.delta();
        let mut b = vec![x, x - d, x + d];
        for r in self.kernel.breakpoints() {
            b.push(x - r);
            b.push(x + r);
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Layer {
    pub side: Side,
    /// Distance to the closest boundary point.
    pub dist: f64,
    /// Dirichlet value at that point.
    pub data: f64,
}

/// Kernel moments over the outer collar of a layer point at distance `d`
/// from the boundary, in the radial variable `r = |x - y| ∈ (d, δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarMoments {
    /// `∫ w_δ`.
    pub m0: f64,
    /// `∫ |x - y| w_δ`.
    pub m1: f64,
    /// `∫ |y - p(x)|/|x - p(x)| w_δ`, the Morris extrapolation weight.
    pub m_eta: f64,
}

pub(crate) fn check_domain(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain(x))
    }
}

/// Collar moments at distance `dist` from the boundary; zero outside the
/// layer.
pub fn collar_moments(kernel: &ScaledKernel, dist: f64) -> Result<CollarMoments> {
    let d = kernel.delta;
    if dist >= d {
        return Ok(CollarMoments {
            m0: 0.0,
            m1: 0.0,
            m_eta: 0.0,
        });
    }
    if kernel.is_constant() {
        let c = kernel.eval(0.0);
        return Ok(CollarMoments {
            m0: c * (d - dist),
            m1: 0.5 * c * (d * d - dist * dist),
            m_eta: c * (d - dist) * (d - dist) / (2.0 * dist),
        });
    }
    let q = Adaptive::default();
    let breaks = kernel.breakpoints();
    let m0 = q.integrate(|r| kernel.eval(r), dist, d, &breaks)?;
    let m1 = q.integrate(|r| r * kernel.eval(r), dist, d, &breaks)?;
    let m_eta = q.integrate(|r| (r - dist) * kernel.eval(r), dist, d, &breaks)? / dist;
    Ok(CollarMoments { m0, m1, m_eta })
}

/// `∫_ℝ w_δ(|z|) dz`.
pub(crate) fn full_mass(kernel: &ScaledKernel) -> Result<f64> {
    if kernel.is_constant() {
        return Ok(2.0 * kernel.eval(0.0) * kernel.delta);
    }
    Ok(2.0 * Adaptive::default().integrate(|r| kernel.eval(r), 0.0, kernel.delta, &kernel.breakpoints())?)
}

/// `a_δ(x) = ∫_Ω w_δ(|x - y|) dy`.
pub fn a_delta(spec: &OperatorSpec, x: f64) -> Result<f64> {
    check_domain(x)?;
    let full = full_mass(&spec.kernel)?;
    let cut = match spec.layer(x) {
        Some(l) => collar_moments(&spec.kernel, l.dist)?.m0,
        None => 0.0,
    };
    Ok(full - cut)
}

/// `b_δ(x)`: collar first moment divided by `(dist + δ)²/2`, zero outside the
/// layer.
pub fn b_delta(spec: &OperatorSpec, x: f64) -> Result<f64> {
    check_domain(x)?;
    match spec.layer(x) {
        Some(l) => {
            let m = collar_moments(&spec.kernel, l.dist)?;
            let span = l.dist + spec.delta();
            Ok(2.0 * m.m1 / (span * span))
        }
        None => Ok(0.0),
    }
}

/// Comparison kernel `|w_δ(|x-y|) - b_δ(x) χ_(0,δ)(|y-x|)|`.
pub fn w_tilde(spec: &OperatorSpec, x: f64, y: f64) -> Result<f64> {
    check_domain(x)?;
    check_domain(y)?;
    let b = b_delta(spec, x)?;
    Ok(w_tilde_with(spec, b, x, y))
}

#[inline]
pub(crate) fn w_tilde_with(spec: &OperatorSpec, b: f64, x: f64, y: f64) -> f64 {
    let r = (y - x).abs();
    let chi = if r > 0.0 && r < spec.delta() { 1.0 } else { 0.0 };
    (spec.kernel.eval(r) - b * chi).abs()
}

/// Arithmetic symmetrization `½(w̃(x,y) + w̃(y,x))`.
pub fn w_tilde_sym(spec: &OperatorSpec, x: f64, y: f64) -> Result<f64> {
    Ok(0.5 * (w_tilde(spec, x, y)? + w_tilde(spec, y, x)?))
}

/// Morris weight `η_δ(x) = 1 + ∫_{B_δ(x)\Ω} |y - p(x)|/|x - p(x)| w_δ dy`.
pub fn morris_weight(spec: &OperatorSpec, x: f64) -> Result<f64> {
    check_domain(x)?;
    match spec.layer(x) {
        Some(l) => Ok(1.0 + collar_moments(&spec.kernel, l.dist)?.m_eta),
        None => Ok(1.0),
    }
}

/// Horizon-radius `r*` where `w_δ(r*) = level` for a nonincreasing kernel
/// (`δ` if the kernel stays above the level).
pub(crate) fn crossing_radius(kernel: &ScaledKernel, level: f64) -> f64 {
    let d = kernel.delta;
    if level <= 0.0 {
        return d;
    }
    if kernel.eval(0.0) < level {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, d);
    if kernel.eval(d * (1.0 - 1e-15)) >= level {
        return d;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if kernel.eval(mid) >= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
