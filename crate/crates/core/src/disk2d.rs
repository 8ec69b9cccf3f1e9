//! Truncated-ball geometry around the unit-disk hole of the punctured square
//! and the layer-point row of the 2D nonlocal-gradient treatment with the
//! constant kernel `16/δ⁴ χ_(0,δ)`.
//!
//! Computations are done in the rotated frame where the point sits at
//! `(d, 0)`, `d = |x| > 1`; vector outputs are rotated back.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{Adaptive, GaussLegendre};

pub type Vec2 = [f64; 2];

fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

/// `16/δ⁴`.
pub fn kernel_value(delta: f64) -> f64 {
    16.0 / delta.powi(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputedBy {
    ClosedForm,
    Quadrature,
}

/// `B_δ(center)` clipped by the unit disk (the lens) and its moments.
#[derive(Debug, Clone, Serialize)]
pub struct TruncatedBall {
    pub center: Vec2,
    pub radius: f64,
    pub lens_area: f64,
    /// `∫_lens (y - center) dy`.
    pub lens_first_moment: Vec2,
    pub computed_by: ComputedBy,
    /// The ball misses the disk.
    pub empty: bool,
}

impl TruncatedBall {
    /// Area of `B_δ(center) ∖ disk`.
    pub fn retained_area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius - self.lens_area
    }

    /// `∫_{B ∖ disk} (y - center) dy`, the negative of the lens moment.
    pub fn retained_moment(&self) -> Vec2 {
        [-self.lens_first_moment[0], -self.lens_first_moment[1]]
    }
}

fn check_center(center: Vec2, delta: f64) -> Result<f64> {
    let d = norm(center);
    if !(d > 1.0) {
        return Err(Error::InvalidConfig(format!("center must lie outside the unit disk, |x| = {d}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!("horizon must be in (0, 1), got {delta}")));
    }
    Ok(d)
}

/// Abscissa of the radical line of the unit circle and `∂B_r((d, 0))`.
fn radical(d: f64, r: f64) -> f64 {
    (d * d + 1.0 - r * r) / (2.0 * d)
}

/// Two-circle lens area and its first moment about the origin along the
/// center direction, for a ball `B_r((d, 0))` with `1 - r < d < 1 + r`.
fn lens_closed(d: f64, r: f64) -> (f64, f64) {
    // cancellation-free forms of 1 - xc, t and their squares
    let one_minus_xc = (r * r - (d - 1.0) * (d - 1.0)) / (2.0 * d);
    let xc = 1.0 - one_minus_xc;
    let t = (d * d - 1.0 + r * r) / (2.0 * d);
    let hc2 = (one_minus_xc * (1.0 + xc)).max(0.0);
    let rc2 = ((r - t) * (r + t)).max(0.0);
    // disk segment x ≥ xc and ball segment x ≤ xc
    let disk_area = segment_area(1.0, xc, hc2.sqrt());
    let ball_area = segment_area(r, t, rc2.sqrt());
    let disk_mom = 2.0 / 3.0 * hc2.powf(1.5);
    let ball_mom = d * ball_area - 2.0 / 3.0 * rc2.powf(1.5);
    (disk_area + ball_area, disk_mom + ball_mom)
}

/// Circular segment of radius `radius` cut by a chord at signed distance
/// `c` from the center with half-length `h`.
fn segment_area(radius: f64, c: f64, h: f64) -> f64 {
    let phi = 2.0 * h.atan2(c);
    0.5 * radius * radius * phi_minus_sin(phi)
}

fn phi_minus_sin(phi: f64) -> f64 {
    if phi > 1.0 {
        return phi - phi.sin();
    }
    let mut term = phi * phi * phi / 6.0;
    let mut sum: f64 = 0.0;
    let mut k = 1.0;
    while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
        sum += term;
        term *= -phi * phi / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
        k += 1.0;
    }
    sum
}

/// Lens area and moment by slicing in `y₂`; the independent oracle.
fn lens_quadrature(d: f64, r: f64, tol: f64) -> Result<(f64, f64)> {
    let xc = radical(d, r);
    let hc = (1.0 - xc * xc).max(0.0).sqrt();
    let q = Adaptive::with_abs_tol(tol);
    let slice = |y: f64| {
        let lo = d - (r * r - y * y).max(0.0).sqrt();
        let hi = (1.0 - y * y).max(0.0).sqrt();
        (lo, hi.max(lo))
    };
    // y = hc (1 - s²) removes the square-root endpoint behaviour at y = hc
    let jac = |s: f64| 2.0 * hc * s;
    let area = 2.0 * q.integrate(
        |s| {
            let (lo, hi) = slice(hc * (1.0 - s * s));
            (hi - lo) * jac(s)
        },
        0.0,
        1.0,
        &[],
    )?;
    let mom = 2.0 * q.integrate(
        |s| {
            let (lo, hi) = slice(hc * (1.0 - s * s));
            0.5 * (hi * hi - lo * lo) * jac(s)
        },
        0.0,
        1.0,
        &[],
    )?;
    Ok((area, mom))
}

fn build(center: Vec2, delta: f64, area: f64, mom_origin: f64, by: ComputedBy) -> TruncatedBall {
    let d = norm(center);
    let e = [center[0] / d, center[1] / d];
    // moment about the center, along e
    let m = mom_origin - d * area;
    TruncatedBall {
        center,
        radius: delta,
        lens_area: area,
        lens_first_moment: [m * e[0], m * e[1]],
        computed_by: by,
        empty: area == 0.0,
    }
}

/// Lens of `B_δ(center)` with the unit disk, by the closed form. A ball that
/// misses the disk yields an empty lens.
pub fn lens_geometry(center: Vec2, delta: f64) -> Result<TruncatedBall> {
    let d = check_center(center, delta)?;
    if d >= 1.0 + delta {
        return Ok(build(center, delta, 0.0, 0.0, ComputedBy::ClosedForm));
    }
    let (a, m) = lens_closed(d, delta);
    Ok(build(center, delta, a, m, ComputedBy::ClosedForm))
}

/// Same as [`lens_geometry`] by adaptive quadrature.
pub fn lens_geometry_quadrature(center: Vec2, delta: f64) -> Result<TruncatedBall> {
    let d = check_center(center, delta)?;
    if d >= 1.0 + delta {
        return Ok(build(center, delta, 0.0, 0.0, ComputedBy::Quadrature));
    }
    let (a, m) = lens_quadrature(d, delta, 1e-16)?;
    Ok(build(center, delta, a, m, ComputedBy::Quadrature))
}

/// Normalized first moment of `B_δ(x) ∖ disk` about `x`.
pub fn n_delta_direction(x: Vec2, delta: f64) -> Result<Vec2> {
    let ball = lens_geometry(x, delta)?;
    let m = ball.retained_moment();
    let len = norm(m);
    if len < 1e-13 {
        return Err(Error::DegenerateDirection(x[0], x[1]));
    }
    Ok([m[0] / len, m[1] / len])
}

fn layer_eps(x: Vec2, delta: f64) -> Result<f64> {
    let d = norm(x);
    let eps = d - 1.0;
    if !(eps > 0.0 && eps < delta) {
        return Err(Error::OutsideLayer(x[0], x[1]));
    }
    Ok(eps)
}

/// Integrates `g(y₁, y₂)` over `B_δ((1+ε, 0)) ∖ disk` in the rotated frame:
/// adaptive in `θ` with `y₂ = δ sin θ` (removes the square-root endpoint
/// behaviour), Gauss–Legendre in `y₁`.
fn integrate_retained<G: Fn(f64, f64) -> f64>(eps: f64, delta: f64, g: G, tol: f64) -> Result<f64> {
    let x1 = 1.0 + eps;
    let xc = radical(x1, delta);
    let hc = (1.0 - xc * xc).max(0.0).sqrt();
    let tc = (hc / delta).min(1.0).asin();
    let gl = GaussLegendre::new(16);
    let half_pi = std::f64::consts::FRAC_PI_2;
    Adaptive::with_abs_tol(tol).integrate(
        |theta| {
            let y2 = delta * theta.sin();
            let s = delta * theta.cos();
            let lo = (x1 - s).max((1.0 - y2 * y2).max(0.0).sqrt());
            let hi = x1 + s;
            if hi <= lo {
                0.0
            } else {
                s * gl.integrate(|y1| g(y1, y2), lo, hi)
            }
        },
        -half_pi,
        half_pi,
        &[-tc, tc],
    )
}

/// `∫_{B_δ(x)∖disk} (x₁ + √(δ² - y₂²) - y₁) dy` for `x = (1+ε, 0)`: the
/// distance along `n_δ` to the far cap, integrated over the retained region.
pub fn cap_distance_denominator(eps: f64, delta: f64) -> Result<f64> {
    cap_denominator_tol(eps, delta, 1e-15)
}

fn cap_denominator_tol(eps: f64, delta: f64, tol: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < delta && delta < 1.0) {
        return Err(Error::OutsideLayer(1.0 + eps, 0.0));
    }
    let x1 = 1.0 + eps;
    let xc = radical(x1, delta);
    let hc = (1.0 - xc * xc).max(0.0).sqrt();
    // inner integral of (hi - y₁) over [lo, hi] is (hi - lo)²/2
    Adaptive::with_abs_tol(tol).integrate(
        |y2| {
            let s = (delta * delta - y2 * y2).max(0.0).sqrt();
            let lo = (x1 - s).max((1.0 - y2 * y2).max(0.0).sqrt());
            let hi = x1 + s;
            if hi <= lo {
                0.0
            } else {
                0.5 * (hi - lo) * (hi - lo)
            }
        },
        -delta,
        delta,
        &[-hc, hc],
    )
}

/// Row data of the 2D equation at a layer point.
#[derive(Debug, Clone, Serialize)]
pub struct LayerPoint2D {
    pub position: Vec2,
    pub delta: f64,
    pub n_delta: Vec2,
    /// `∫_{B∩Ω} 16/δ⁴ dy`.
    pub a_coeff: f64,
    /// `16/δ⁴ ∫_{B∩Ω} (y - x)·n_δ dy`.
    pub numerator: f64,
    pub denominator: f64,
    pub b_hat: f64,
    pub retained_area: f64,
}

/// Assembles the row at a point of the `δ`-layer around the hole.
pub fn assemble_row_2d(x: Vec2, delta: f64) -> Result<LayerPoint2D> {
    let eps = layer_eps(x, delta)?;
    let ball = lens_geometry(x, delta)?;
    let n = n_delta_direction(x, delta)?;
    let k = kernel_value(delta);
    let m = ball.retained_moment();
    let numerator = k * (m[0] * n[0] + m[1] * n[1]);
    let denominator = cap_distance_denominator(eps, delta)?;
    Ok(LayerPoint2D {
        position: x,
        delta,
        n_delta: n,
        a_coeff: k * ball.retained_area(),
        numerator,
        denominator,
        b_hat: numerator / denominator,
        retained_area: ball.retained_area(),
    })
}

impl LayerPoint2D {
    fn rotation(&self) -> (f64, f64) {
        let d = norm(self.position);
        (self.position[0] / d, self.position[1] / d)
    }

    /// `a u(x) - ∫_{B∩Ω} u(y)(16/δ⁴ - b̂) dy`.
    pub fn apply<U: Fn(Vec2) -> f64>(&self, u: U) -> Result<f64> {
        let (c, s) = self.rotation();
        let eps = norm(self.position) - 1.0;
        let w = kernel_value(self.delta) - self.b_hat;
        let integral = integrate_retained(
            eps,
            self.delta,
            |y1, y2| u([c * y1 - s * y2, s * y1 + c * y2]) * w,
            1e-13,
        )?;
        Ok(self.a_coeff * u(self.position) - integral)
    }

    /// `∫_{B∩Ω} (u(x) - u(y)) 16/δ⁴ dy`.
    pub fn bulk<U: Fn(Vec2) -> f64>(&self, u: U) -> Result<f64> {
        let (c, s) = self.rotation();
        let eps = norm(self.position) - 1.0;
        let ux = u(self.position);
        let k = kernel_value(self.delta);
        integrate_retained(
            eps,
            self.delta,
            |y1, y2| (ux - u([c * y1 - s * y2, s * y1 + c * y2])) * k,
            1e-13,
        )
    }

    /// Left side of the comparison row-sum inequality,
    /// `a - ∫_{B∩Ω} |16/δ⁴ - b̂| dy`.
    pub fn comparison_row_sum(&self) -> f64 {
        self.a_coeff - (kernel_value(self.delta) - self.b_hat).abs() * self.retained_area
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MorrisTruncation {
    pub delta: f64,
    pub epsilon: f64,
    pub lens_area: f64,
    /// `∫_{B∩Ω}(y₁ - 1 - ε) dy + ∫_{B∖Ω}(y₁ - 1) dy` by quadrature.
    pub paren_integral: f64,
    /// `ε · lens_area`.
    pub paren_closed_form: f64,
    /// `16/δ⁴ · ∂₁u · paren`.
    pub morris_t_estimate: f64,
}

/// Leading truncation term of the Morris extrapolation at `(1+ε, 0)`.
pub fn morris_truncation_2d(delta: f64, epsilon: f64, du1: f64) -> Result<MorrisTruncation> {
    if !(delta > 0.0 && delta < 1.0 && epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!("need 0 < δ < 1 and ε > 0, got δ = {delta}, ε = {epsilon}")));
    }
    let x1 = 1.0 + epsilon;
    let ball = lens_geometry([x1, 0.0], delta)?;
    let (paren, lens_area) = if ball.empty {
        (0.0, 0.0)
    } else {
        let tol = 1e-22;
        let retained = integrate_retained(epsilon, delta, |y1, _| y1 - x1, tol)?;
        let (area, mom) = lens_quadrature(x1, delta, tol)?;
        (retained + mom - area, ball.lens_area)
    };
    Ok(MorrisTruncation {
        delta,
        epsilon,
        lens_area,
        paren_integral: paren,
        paren_closed_form: epsilon * lens_area,
        morris_t_estimate: kernel_value(delta) * du1 * paren,
    })
}

/// `case2d.csv` body: one row per horizon at `ε = δ/3`, `∂₁u = 1`.
pub fn case2d_rows(deltas: &[f64]) -> Result<Vec<MorrisTruncation>> {
    deltas.iter().map(|&d| morris_truncation_2d(d, d / 3.0, 1.0)).collect()
}

pub fn case2d_csv(rows: &[MorrisTruncation]) -> String {
    let mut s = String::from("delta,epsilon,lens_area,paren_integral,paren_ratio,morris_T_estimate\n");
    for (k, r) in rows.iter().enumerate() {
        let ratio = if k == 0 {
            String::new()
        } else {
            format!("{:.6}", rows[k - 1].paren_integral / r.paren_integral)
        };
        s.push_str(&format!(
            "{},{:.10e},{:.10e},{:.10e},{},{:.10e}\n",
            r.delta, r.epsilon, r.lens_area, r.paren_integral, ratio, r.morris_t_estimate
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangent_ball_has_empty_lens() {
        let b = lens_geometry([1.1, 0.0], 0.1).unwrap();
        assert!(b.empty && b.lens_area == 0.0);
    }

    #[test]
    fn lens_closed_form_matches_quadrature() {
        for (c, d) in [([1.0 + 0.1 / 3.0, 0.0], 0.1), ([0.6, 0.85], 0.2), ([1.01, 0.0], 0.0125)] {
            let a = lens_geometry(c, d).unwrap();
            let b = lens_geometry_quadrature(c, d).unwrap();
            assert!((a.lens_area - b.lens_area).abs() <= 1e-9 * a.lens_area, "{a:?} {b:?}");
            for k in 0..2 {
                assert!(
                    (a.lens_first_moment[k] - b.lens_first_moment[k]).abs() <= 1e-9 * norm(a.lens_first_moment),
                    "{a:?} {b:?}"
                );
            }
        }
    }

    #[test]
    fn reference_lens_area() {
        let a = lens_geometry([31.0 / 30.0, 0.0], 0.1).unwrap().lens_area;
        assert!((a - 8.894283399e-3).abs() < 1e-11, "{a}");
        assert_eq!(lens_geometry([31.0 / 30.0, 0.0], 0.1).unwrap().lens_first_moment[1], 0.0);
    }

    #[test]
    fn direction_examples() {
        assert_eq!(n_delta_direction([1.0 + 0.1 / 3.0, 0.0], 0.1).unwrap(), [1.0, 0.0]);
        assert_eq!(n_delta_direction([0.0, 1.0 + 0.1 / 3.0], 0.1).unwrap(), [0.0, 1.0]);
        assert!(matches!(n_delta_direction([1.5, 0.0], 0.1), Err(Error::DegenerateDirection(..))));
    }

    #[test]
    fn denominator_is_positive_and_increasing() {
        let d = 0.1;
        let mut prev = 0.0;
        for k in 1..20 {
            let v = cap_distance_denominator(d * k as f64 / 20.0, d).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let a = cap_denominator_tol(0.03, d, 1e-15).unwrap();
        let b = cap_denominator_tol(0.03, d, 1e-12).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn row_applied_to_zero_is_zero() {
        let p = assemble_row_2d([1.03, 0.0], 0.1).unwrap();
        assert_eq!(p.apply(|_| 0.0).unwrap(), 0.0);
        assert!(matches!(assemble_row_2d([1.2, 0.0], 0.1), Err(Error::OutsideLayer(..))));
    }

    #[test]
    fn paren_matches_identity() {
        let m = morris_truncation_2d(0.1, 0.1 / 3.0, 1.0).unwrap();
        assert!((m.paren_integral - m.paren_closed_form).abs() < 1e-9 * m.paren_closed_form);
        assert_eq!(morris_truncation_2d(0.1, 0.2, 1.0).unwrap().paren_integral, 0.0);
    }
}
