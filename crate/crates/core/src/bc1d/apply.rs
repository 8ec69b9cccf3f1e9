use super::{
    a_delta, b_delta, check_domain, collar_moments, crossing_radius, w_tilde_with, Method, OperatorSpec, Side,
};
use crate::error::Result;

/// Averaged slope with gradient kernel `ρ ≡ 1`.
///
/// Left layer: `(2/(x+δ)²) ∫_0^{x+δ} (u(y) - u(0)) dy`; right layer:
/// `(2/(1-x+δ)²) ∫_{x-δ}^1 (u(1) - u(y)) dy`; zero in the bulk. The boundary
/// values come from `spec.boundary_data`.
pub fn nonlocal_gradient<U: Fn(f64) -> f64>(spec: &OperatorSpec, u: U, x: f64) -> Result<f64> {
    check_domain(x)?;
    let d = spec.delta();
    let Some(layer) = spec.layer(x) else {
        return Ok(0.0);
    };
    let span = layer.dist + d;
    let g = layer.data;
    let q = spec.quad();
    let integral = match layer.side {
        Side::Left => q.integrate(|y| u(y) - g, 0.0, span, &[])?,
        Side::Right => q.integrate(|y| g - u(y), 1.0 - span, 1.0, &[])?,
    };
    Ok(2.0 * integral / (span * span))
}

/// `∫_{Ω ∩ B_δ(x)} (u(x) - u(y)) w_δ(|x-y|) dy`.
fn bulk_part<U: Fn(f64) -> f64>(spec: &OperatorSpec, u: &U, x: f64) -> Result<f64> {
    let d = spec.delta();
    let ux = u(x);
    let k = &spec.kernel;
    spec.quad().integrate(
        |y| (ux - u(y)) * k.eval(y - x),
        (x - d).max(0.0),
        (x + d).min(1.0),
        &spec.breaks_around(x),
    )
}

/// Value of the chosen treatment's operator at `x`.
///
/// For `zhang_shi` this is the left-hand side of the point-integral equation;
/// its mollified right-hand side is [`super::ZSKernelSet::rhs`].
pub fn apply_operator<U: Fn(f64) -> f64>(spec: &OperatorSpec, u: U, x: f64) -> Result<f64> {
    check_domain(x)?;
    if spec.method == Method::ZhangShi {
        let zs = spec.zs().expect("zhang_shi spec carries its kernel set");
        return zs.lhs(&u, x);
    }
    let bulk = bulk_part(spec, &u, x)?;
    let Some(layer) = spec.layer(x) else {
        return Ok(bulk);
    };
    let m = collar_moments(&spec.kernel, layer.dist)?;
    let collar = match spec.method {
        Method::NonlocalGradient => {
            let grad = nonlocal_gradient(spec, &u, x)?;
            match layer.side {
                Side::Left => m.m1 * grad,
                Side::Right => -m.m1 * grad,
            }
        }
        Method::ConstantExtension => (u(x) - layer.data) * m.m0,
        Method::Morris => (u(x) - layer.data) * (m.m0 + m.m_eta),
        Method::ZhangShi => unreachable!(),
    };
    Ok(bulk + collar)
}

/// Comparison operator `a_δ(x) u(x) - ∫_Ω u(y) w̃_δ(x, y) dy`.
pub fn apply_comparison<U: Fn(f64) -> f64>(spec: &OperatorSpec, u: U, x: f64) -> Result<f64> {
    check_domain(x)?;
    let d = spec.delta();
    let a = a_delta(spec, x)?;
    let b = b_delta(spec, x)?;
    let ux = u(x);
    let lo = (x - d).max(0.0);
    let hi = (x + d).min(1.0);
    let mut breaks = spec.breaks_around(x);
    if b > 0.0 {
        let r = crossing_radius(&spec.kernel, b);
        breaks.push(x - r);
        breaks.push(x + r);
    }
    let q = spec.quad();
    // split as ∫(u(x)-u(y))w̃ + u(x)(a - ∫w̃) to avoid cancellation in the bulk
    let diff = q.integrate(|y| (ux - u(y)) * w_tilde_with(spec, b, x, y), lo, hi, &breaks)?;
    let mass = if spec.kernel.is_constant() {
        let c = spec.kernel.eval(0.0);
        (hi - lo) * (c - b).abs()
    } else {
        q.integrate(|y| w_tilde_with(spec, b, x, y), lo, hi, &breaks)?
    };
    Ok(diff + ux * (a - mass))
}

/// Residual of `φ` in the nonlocal equation with data `-Δφ`: the operator
/// value plus `Δφ(x)` (for `zhang_shi`, LHS minus mollified RHS).
pub fn truncation_error<P, L>(spec: &OperatorSpec, phi: P, lap_phi: L, x: f64) -> Result<f64>
where
    P: Fn(f64) -> f64,
    L: Fn(f64) -> f64,
{
    check_domain(x)?;
    if spec.method == Method::ZhangShi {
        let zs = spec.zs().expect("zhang_shi spec carries its kernel set");
        let f = |y: f64| -lap_phi(y);
        return Ok(zs.lhs(&phi, x)? - zs.rhs(&f, x)?);
    }
    Ok(apply_operator(spec, &phi, x)? + lap_phi(x))
}

/// Reduction of inhomogeneous Dirichlet data to the homogeneous problem.
///
/// With the linear lift `φ(x) = a + (b - a) x` and `f̂ = f - Ñ^{(a,b)} φ`,
/// where `Ñ^{(a,b)}` is the treatment's operator carrying the data `(a, b)`,
/// the solution of the homogeneous problem with data `f̂` plus `φ` equals the
/// solution of the inhomogeneous problem.
#[derive(Debug, Clone)]
pub struct Lift<F> {
    /// `(a, b)`.
    pub data: (f64, f64),
    inhomogeneous: OperatorSpec,
    f: F,
}

pub fn lift_inhomogeneous<F: Fn(f64) -> f64>(spec: &OperatorSpec, f: F, data: (f64, f64)) -> Result<Lift<F>> {
    let base = spec.clone().with_boundary_data(0.0, 0.0)?;
    let inhomogeneous = base.with_boundary_data(data.0, data.1)?;
    Ok(Lift { data, inhomogeneous, f })
}

impl<F: Fn(f64) -> f64> Lift<F> {
    pub fn phi(&self, x: f64) -> f64 {
        self.data.0 + (self.data.1 - self.data.0) * x
    }

    /// Modified data `f̂(x)`.
    pub fn f_hat(&self, x: f64) -> Result<f64> {
        let correction = apply_operator(&self.inhomogeneous, |y| self.phi(y), x)?;
        Ok((self.f)(x) - correction)
    }

    /// The alternative route: the same treatment with the data built into
    /// the ghost extension (for the nonlocal gradient, the modified `G_δ`).
    pub fn inhomogeneous_spec(&self) -> &OperatorSpec {
        &self.inhomogeneous
    }
}
