//! Radial kernel profiles on `[0, 1]` and their horizon scalings.
//!
//! A profile `w` is supported on `[0, 1)`; its 1D rescaling for horizon `δ` is
//! `w_δ(r) = w(r/δ)/δ³`. Normalized profiles satisfy `∫_ℝ w(|z|) z² dz = 2`,
//! so the bulk nonlocal operator is consistent with `-u''`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::Adaptive;

/// Which family a profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Constant,
    Linear,
    Custom,
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Builtin::Constant => "constant",
            Builtin::Linear => "linear",
            Builtin::Custom => "custom",
        })
    }
}

/// Piecewise-linear profile read from a `.kern` table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    s: Vec<f64>,
    v: Vec<f64>,
}

impl Table {
    pub fn new(s: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if s.len() != v.len() || s.len() < 2 {
            return Err(Error::Parse("kernel table needs at least two `s value` rows".into()));
        }
        for w in s.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Parse(format!("kernel table abscissae not increasing at s = {}", w[1])));
            }
        }
        if s[0] < 0.0 || s[s.len() - 1] > 1.0 {
            return Err(Error::Parse("kernel table abscissae must lie in [0, 1]".into()));
        }
        for (&si, &vi) in s.iter().zip(&v) {
            if !vi.is_finite() {
                return Err(Error::SingularProfile(si));
            }
            if vi < 0.0 {
                return Err(Error::NegativeProfile { s: si, value: vi });
            }
        }
        Ok(Table { s, v })
    }

    /// Parses the two-column `s value` format; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (a, b) = match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1))),
            };
            let parse = |t: &str| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            s.push(parse(a)?);
            v.push(parse(b)?);
        }
        Table::new(s, v)
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.s.len();
        if x <= self.s[0] {
            return self.v[0];
        }
        if x >= self.s[n - 1] {
            return self.v[n - 1];
        }
        let k = self.s.partition_point(|&t| t <= x) - 1;
        let t = (x - self.s[k]) / (self.s[k + 1] - self.s[k]);
        self.v[k] * (1.0 - t) + self.v[k + 1] * t
    }
}

#[derive(Clone)]
enum Shape {
    Constant,
    Linear,
    Table(Arc<Table>),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A radial kernel profile `s ↦ w(s)` supported on `[0, 1)`.
#[derive(Clone)]
pub struct KernelProfile {
    name: String,
    shape: Shape,
    scale: f64,
    second_moment: f64,
    builtin: Builtin,
    singular_at_zero: bool,
}

impl fmt::Debug for KernelProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelProfile")
            .field("name", &self.name)
            .field("builtin", &self.builtin)
            .field("scale", &self.scale)
            .field("second_moment", &self.second_moment)
            .finish()
    }
}

const MOMENT_TOL: f64 = 1e-12;

/// `3 χ_[0,1)`.
pub fn builtin_constant() -> KernelProfile {
    KernelProfile::from_shape("constant", Shape::Constant, 3.0, Builtin::Constant)
}

/// `12 (1 - s)` on `[0, 1]`.
pub fn builtin_linear() -> KernelProfile {
    KernelProfile::from_shape("linear", Shape::Linear, 12.0, Builtin::Linear)
}

/// Rescales `profile` so that its second moment is 2.
pub fn normalize(profile: &KernelProfile) -> Result<KernelProfile> {
    profile.check_nonnegative()?;
    let m = profile.second_moment;
    if !(m > 1e-14) {
        return Err(Error::ZeroMoment(m));
    }
    let mut out = profile.clone();
    out.scale = profile.scale * 2.0 / m;
    out.second_moment = out.compute_moment(2)?;
    Ok(out)
}

impl KernelProfile {
    fn from_shape(name: &str, shape: Shape, scale: f64, builtin: Builtin) -> Self {
        let mut k = KernelProfile {
            name: name.to_string(),
            shape,
            scale,
            second_moment: 0.0,
            builtin,
            singular_at_zero: false,
        };
        k.second_moment = k
            .compute_moment(2)
            .expect("moments of bounded profiles converge");
        k
    }

    /// Wraps an arbitrary profile. The result is not normalized; pass it
    /// through [`normalize`] before use.
    pub fn custom<F>(name: &str, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let v0 = f(0.0);
        if !v0.is_finite() {
            return Err(Error::SingularProfile(0.0));
        }
        let mut k = KernelProfile {
            name: name.to_string(),
            shape: Shape::Function(Arc::new(f)),
            scale: 1.0,
            second_moment: 0.0,
            builtin: Builtin::Custom,
            singular_at_zero: false,
        };
        k.check_nonnegative()?;
        k.second_moment = k.compute_moment(2)?;
        Ok(k)
    }

    /// Piecewise-linear profile through the table samples (not normalized).
    pub fn from_table(name: &str, table: Table) -> Result<Self> {
        let mut k = KernelProfile {
            name: name.to_string(),
            shape: Shape::Table(Arc::new(table)),
            scale: 1.0,
            second_moment: 0.0,
            builtin: Builtin::Custom,
            singular_at_zero: false,
        };
        k.second_moment = k.compute_moment(2)?;
        Ok(k)
    }

    /// Reads a `.kern` file (not normalized).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        KernelProfile::from_table(&name, Table::parse(&text)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn builtin(&self) -> Builtin {
        self.builtin
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn singular_at_zero(&self) -> bool {
        self.singular_at_zero
    }

    /// Profile value; zero for `s ≥ 1` and for negative `s`.
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        if !(0.0..1.0).contains(&s) {
            return 0.0;
        }
        self.scale
            * match &self.shape {
                Shape::Constant => 1.0,
                Shape::Linear => 1.0 - s,
                Shape::Table(t) => t.eval(s),
                Shape::Function(f) => f(s),
            }
    }

    /// Interior points of `(0, 1)` where the profile may fail to be smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Table(t) => t.s.iter().copied().filter(|&s| s > 0.0 && s < 1.0).collect(),
            _ => Vec::new(),
        }
    }

    /// `∫_0^1 w(s) s^k ds`.
    pub fn half_moment(&self, k: i32) -> Result<f64> {
        Adaptive::with_abs_tol(MOMENT_TOL).integrate(
            |s| self.eval(s) * s.powi(k),
            0.0,
            1.0,
            &self.breakpoints(),
        )
    }

    /// `∫_ℝ w(|z|) |z|^k dz` for even support extension.
    fn compute_moment(&self, k: i32) -> Result<f64> {
        Ok(2.0 * self.half_moment(k)?)
    }

    fn check_nonnegative(&self) -> Result<()> {
        if let Shape::Table(t) = &self.shape {
            for (&s, &v) in t.s.iter().zip(&t.v) {
                if v < 0.0 {
                    return Err(Error::NegativeProfile { s, value: v });
                }
            }
        }
        for i in 0..=1000 {
            let s = i as f64 / 1000.0 * (1.0 - 1e-12);
            let v = self.eval(s);
            if !v.is_finite() {
                return Err(Error::SingularProfile(s));
            }
            if v < 0.0 {
                return Err(Error::NegativeProfile { s, value: v });
            }
        }
        Ok(())
    }

    /// Sampled check of the admissibility conditions: nonnegative,
    /// nonincreasing and strictly positive on `(0, 1)`, second moment 2.
    pub fn check_admissible(&self, n_samples: usize) -> AdmissibilityReport {
        let n = n_samples.max(1000);
        let mut nonincreasing = true;
        let mut positive = true;
        let mut min_value = f64::INFINITY;
        let mut prev = self.eval(0.0);
        for i in 1..n {
            let s = i as f64 / n as f64;
            let v = self.eval(s);
            min_value = min_value.min(v);
            if v <= 0.0 {
                positive = false;
            }
            if v > prev * (1.0 + 1e-14) + 1e-300 {
                nonincreasing = false;
            }
            prev = v;
        }
        let moment_error = (self.second_moment - 2.0).abs();
        AdmissibilityReport {
            nonincreasing,
            positive_interior: positive,
            min_interior_value: min_value,
            moment_error,
            holds: nonincreasing && positive && moment_error <= 1e-10 && !self.singular_at_zero,
        }
    }
}

/// Outcome of [`KernelProfile::check_admissible`].
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub nonincreasing: bool,
    pub positive_interior: bool,
    pub min_interior_value: f64,
    pub moment_error: f64,
    pub holds: bool,
}

/// A profile bound to a horizon: `w_δ(r) = w(r/δ)/δ³`.
#[derive(Debug, Clone)]
pub struct ScaledKernel {
    pub base: KernelProfile,
    pub delta: f64,
    inv_delta3: f64,
}

impl ScaledKernel {
    /// Requires `0 < δ < 1/2` so the two boundary layers of `(0, 1)` do not
    /// overlap.
    pub fn new(base: KernelProfile, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {delta}")));
        }
        if delta >= 0.5 {
            return Err(Error::LayerOverlap(delta));
        }
        Ok(ScaledKernel {
            base,
            delta,
            inv_delta3: 1.0 / (delta * delta * delta),
        })
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        self.base.eval(r.abs() / self.delta) * self.inv_delta3
    }

    /// Breakpoints of `r ↦ w_δ(r)` in `(0, δ)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.base.breakpoints().into_iter().map(|s| s * self.delta).collect()
    }

    pub fn is_constant(&self) -> bool {
        self.base.builtin() == Builtin::Constant
    }
}

/// Radial lower-bound kernel `ρ` used in the uniform Poincaré argument.
#[derive(Clone)]
pub struct LowerBoundKernel {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Supremum of the support.
    pub support: f64,
    /// `∫_ℝ ρ(|z|) z² dz`.
    pub second_moment: f64,
}

impl fmt::Debug for LowerBoundKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LowerBoundKernel")
            .field("support", &self.support)
            .field("second_moment", &self.second_moment)
            .finish()
    }
}

impl LowerBoundKernel {
    pub fn eval(&self, s: f64) -> f64 {
        if !(0.0..=self.support).contains(&s) {
            0.0
        } else {
            (self.f)(s)
        }
    }

    /// `ρ_δ(r) = ρ(r/δ)/δ³`.
    pub fn eval_scaled(&self, r: f64, delta: f64) -> f64 {
        self.eval(r.abs() / delta) / (delta * delta * delta)
    }
}

/// Builds the radial kernel bounding the symmetrized comparison kernel from
/// below. The constant profile gets `ρ(s) = (3/2) s/(s+1)` on `[0, 1]`;
/// any other profile gets `ρ(s) = ½ max(w(s) - 2∫_0^1 y w(y) dy, 0)`.
pub fn lower_bound_profile(k: &KernelProfile) -> Result<LowerBoundKernel> {
    let (f, support): (Arc<dyn Fn(f64) -> f64 + Send + Sync>, f64) = if k.builtin() == Builtin::Constant {
        (Arc::new(|s: f64| 1.5 * s / (s + 1.0)), 1.0)
    } else {
        let level = 2.0 * k.half_moment(1)?;
        if k.eval(0.0) <= level * (1.0 + 1e-12) {
            return Err(Error::EmptySupport);
        }
        let kk = k.clone();
        let rho = move |s: f64| 0.5 * (kk.eval(s) - level).max(0.0);
        // last sampled point with ρ > 0, then bisect toward the crossing
        let n = 4096;
        let mut last = 0;
        for i in 0..n {
            if rho(i as f64 / n as f64) > 0.0 {
                last = i;
            }
        }
        let (mut lo, mut hi) = (last as f64 / n as f64, ((last + 1) as f64 / n as f64).min(1.0));
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if rho(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (Arc::new(rho), hi)
    };
    let mut breaks = k.breakpoints();
    breaks.push(support);
    let half = Adaptive::with_abs_tol(MOMENT_TOL).integrate(|s| f(s) * s * s, 0.0, support, &breaks)?;
    if !(half > 0.0) {
        return Err(Error::EmptySupport);
    }
    Ok(LowerBoundKernel {
        f,
        support,
        second_moment: 2.0 * half,
    })
}
