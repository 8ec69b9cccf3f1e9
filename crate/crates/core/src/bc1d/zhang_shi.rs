//! Point-integral (Zhang–Shi) formulation with a smooth bump on horizon `2δ`.
//!
//! With `W(s) = exp(s/(s-1))`, `W̄(r) = ∫_r^1 W`, `W̿(r) = ∫_r^1 W̄` and the
//! scaled kernels `K_δ(r) = C_δ K(r²/(4δ²))` for `K ∈ {W, W̄, W̿}`, the
//! equation at `x` with `p` the closest boundary point reads
//!
//! ```text
//! (1/δ²) ∫_Ω (u(x) - u(y)) W_δ dy + c(x) ∫_S u(y) W̄_δ(|y-p|) dy
//!   = ∫_Ω f W̄_δ(|x-y|) dy + f(p) |x-p| W̄_δ(|x-p|)
//!     - (W̄_δ(|x-p|)/W̿_δ(0)) ∫_S f(y) W̿_δ(|y-p|) dy
//! ```
//!
//! where `S` is the `2δ` strip at `p` and `c(x) = W̄_δ(|x-p|)/(δ² W̿_δ(0))`.
//! `C_δ` is calibrated so that `∫ W_δ(|z|) z²/δ² dz = 2`.

use crate::error::{Error, Result};
use crate::quad::{Adaptive, GaussLegendre};

const TABLE_POINTS: usize = 2048;

/// The bump `W(s) = exp(s/(s-1))` on `[0, 1)`, zero beyond.
pub fn bump(s: f64) -> f64 {
    if !(0.0..1.0).contains(&s) {
        return 0.0;
    }
    (s / (s - 1.0)).exp()
}

/// Cubic Hermite table on a uniform grid of `[0, 1]`.
#[derive(Debug, Clone)]
struct Hermite {
    v: Vec<f64>,
    dv: Vec<f64>,
    step: f64,
}

impl Hermite {
    fn eval(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 0.0;
        }
        let s = s.max(0.0);
        let n = self.v.len() - 1;
        let k = ((s / self.step) as usize).min(n - 1);
        let t = s / self.step - k as f64;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.v[k] + h01 * self.v[k + 1] + self.step * (h10 * self.dv[k] + h11 * self.dv[k + 1])
    }
}

/// Tabulated `W`, `W̄`, `W̿` and the calibration constant for one `δ`.
#[derive(Debug, Clone)]
pub struct ZSKernelSet {
    pub delta: f64,
    c_delta: f64,
    wbar: Hermite,
    wbarbar: Hermite,
}

/// `∫_0^1 W(t²) t² dt`.
fn half_moment() -> Result<f64> {
    Adaptive::with_abs_tol(1e-15).integrate(|t| bump(t * t) * t * t, 0.0, 1.0, &[])
}

pub fn build_zs_kernels(delta: f64) -> Result<ZSKernelSet> {
    if !(delta > 0.0 && delta < 0.25) {
        return Err(Error::LayerOverlap(delta));
    }
    let n = TABLE_POINTS - 1;
    let step = 1.0 / n as f64;
    let gl = GaussLegendre::new(10);
    // W̄ at the nodes, accumulated from s = 1 downward
    let mut wb = vec![0.0; n + 1];
    for k in (0..n).rev() {
        let a = k as f64 * step;
        wb[k] = wb[k + 1] + gl.integrate(bump, a, a + step);
    }
    let wb_d: Vec<f64> = (0..=n).map(|k| -bump(k as f64 * step)).collect();
    // W̿ from the exact integral of the W̄ Hermite cubic on each cell
    let mut wbb = vec![0.0; n + 1];
    for k in (0..n).rev() {
        let cell = 0.5 * step * (wb[k] + wb[k + 1]) + step * step / 12.0 * (wb_d[k] - wb_d[k + 1]);
        wbb[k] = wbb[k + 1] + cell;
    }
    let wbb_d: Vec<f64> = wb.iter().map(|v| -v).collect();
    Ok(ZSKernelSet {
        delta,
        c_delta: 1.0 / (8.0 * delta * half_moment()?),
        wbar: Hermite { v: wb, dv: wb_d, step },
        wbarbar: Hermite { v: wbb, dv: wbb_d, step },
    })
}

impl ZSKernelSet {
    pub fn w(&self, s: f64) -> f64 {
        bump(s)
    }

    pub fn wbar(&self, s: f64) -> f64 {
        self.wbar.eval(s)
    }

    pub fn wbarbar(&self, s: f64) -> f64 {
        self.wbarbar.eval(s)
    }

    pub fn c_delta(&self) -> f64 {
        self.c_delta
    }

    fn arg(&self, r: f64) -> f64 {
        r * r / (4.0 * self.delta * self.delta)
    }

    pub fn w_delta(&self, r: f64) -> f64 {
        self.c_delta * bump(self.arg(r))
    }

    pub fn wbar_delta(&self, r: f64) -> f64 {
        self.c_delta * self.wbar(self.arg(r))
    }

    pub fn wbarbar_delta(&self, r: f64) -> f64 {
        self.c_delta * self.wbarbar(self.arg(r))
    }

    /// `|∫ W_δ(|z|) z²/δ² dz - 2|`, by quadrature independent of the
    /// calibration integral.
    pub fn calibration_residual(&self) -> Result<f64> {
        let d = self.delta;
        let v = Adaptive::with_abs_tol(1e-13).integrate(
            |z| self.w_delta(z) * z * z / (d * d),
            -2.0 * d,
            2.0 * d,
            &[0.0, -d, d],
        )?;
        Ok((v - 2.0).abs())
    }

    /// Closest boundary point and the strip `S` next to it.
    pub(crate) fn anchor(&self, x: f64) -> (f64, f64, f64) {
        let w = 2.0 * self.delta;
        if x < 0.5 {
            (0.0, 0.0, w)
        } else {
            (1.0, 1.0 - w, 1.0)
        }
    }

    /// Coefficient `c(x)` of the strip functional in the left-hand side.
    pub fn strip_coefficient(&self, x: f64) -> f64 {
        let (p, _, _) = self.anchor(x);
        self.wbar_delta((x - p).abs()) / (self.delta * self.delta * self.wbarbar_delta(0.0))
    }

    fn quad(&self) -> Adaptive {
        Adaptive::default()
    }

    /// Left-hand side of the point-integral equation at `x`.
    pub fn lhs<U: Fn(f64) -> f64>(&self, u: &U, x: f64) -> Result<f64> {
        let d = self.delta;
        let ux = u(x);
        let bulk = self.quad().integrate(
            |y| (ux - u(y)) * self.w_delta(y - x),
            (x - 2.0 * d).max(0.0),
            (x + 2.0 * d).min(1.0),
            &[x],
        )? / (d * d);
        let c = self.strip_coefficient(x);
        if c == 0.0 {
            return Ok(bulk);
        }
        let (p, lo, hi) = self.anchor(x);
        let strip = self.quad().integrate(|y| u(y) * self.wbar_delta(y - p), lo, hi, &[])?;
        Ok(bulk + c * strip)
    }

    /// Mollified right-hand side at `x` for source `f`.
    pub fn rhs<F: Fn(f64) -> f64>(&self, f: &F, x: f64) -> Result<f64> {
        let d = self.delta;
        let main = self.quad().integrate(
            |y| f(y) * self.wbar_delta(y - x),
            (x - 2.0 * d).max(0.0),
            (x + 2.0 * d).min(1.0),
            &[x],
        )?;
        let (p, lo, hi) = self.anchor(x);
        let dist = (x - p).abs();
        let wb = self.wbar_delta(dist);
        if wb == 0.0 {
            return Ok(main);
        }
        let strip = self.quad().integrate(|y| f(y) * self.wbarbar_delta(y - p), lo, hi, &[])?;
        Ok(main + f(p) * dist * wb - wb / self.wbarbar_delta(0.0) * strip)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_endpoints() {
        let z = build_zs_kernels(0.1).unwrap();
        assert_eq!(z.w(0.0), 1.0);
        assert_eq!(z.wbar(1.0), 0.0);
        assert_eq!(z.wbarbar(1.0), 0.0);
        let total = Adaptive::with_abs_tol(1e-15).integrate(bump, 0.0, 1.0, &[]).unwrap();
        assert!((z.wbar(0.0) - total).abs() < 1e-13);
    }

    #[test]
    fn tables_match_direct_quadrature() {
        let z = build_zs_kernels(0.1).unwrap();
        let q = Adaptive::with_abs_tol(1e-14);
        for s in [0.0, 0.123, 0.5, 0.77, 0.95] {
            let wb = q.integrate(bump, s, 1.0, &[]).unwrap();
            assert!((z.wbar(s) - wb).abs() < 1e-12, "s={s}");
            let wbb = q
                .integrate(|t| q.integrate(bump, t, 1.0, &[]).unwrap(), s, 1.0, &[])
                .unwrap();
            assert!((z.wbarbar(s) - wbb).abs() < 1e-11, "s={s}");
        }
    }

    #[test]
    fn tables_are_nonincreasing() {
        let z = build_zs_kernels(0.05).unwrap();
        let mut prev = (z.wbar(0.0), z.wbarbar(0.0));
        for i in 1..=5000 {
            let s = i as f64 / 5000.0;
            let cur = (z.wbar(s), z.wbarbar(s));
            assert!(cur.0 <= prev.0 + 1e-16 && cur.1 <= prev.1 + 1e-16);
            prev = cur;
        }
    }

    #[test]
    fn calibration() {
        for d in [0.1, 0.05, 0.0125] {
            assert!(build_zs_kernels(d).unwrap().calibration_residual().unwrap() < 1e-10);
        }
        assert!(build_zs_kernels(0.3).is_err());
    }

    #[test]
    fn interior_truncation_is_second_order() {
        let u = |y: f64| (std::f64::consts::PI * y).sin();
        let f = |y: f64| std::f64::consts::PI.powi(2) * u(y);
        let t: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|&d| {
                let z = build_zs_kernels(d).unwrap();
                (z.lhs(&u, 0.5).unwrap() - z.rhs(&f, 0.5).unwrap()).abs()
            })
            .collect();
        let slope = (t[0] / t[1]).log2();
        assert!(slope > 1.9, "{t:?}");
    }
}
