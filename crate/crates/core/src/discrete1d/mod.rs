//! Collocation on the uniform grid `x_i = i h`, `δ = m h`.
//!
//! Unknowns live at the interior nodes `i = 1..N-1`; the boundary nodes carry
//! the Dirichlet data. The bulk integral `∫_{Ω∩B}(u(x) - u(y)) K(|x-y|) dy`
//! is written as `∫ D(z) z K(z) dz` with the difference quotient
//! `D(z) = (u(x) - u(x+z))/z`, and `D` is interpolated linearly between
//! nodes. The resulting weights come from the cell moments
//! `P_c = ∫_cell (1-t) z K dz`, `Q_c = ∫_cell t z K dz` and make the bulk
//! rows exact on quadratics. Collar terms use the trapezoid rule.

mod certify;
mod lu;
mod matrix_market;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use certify::{
    certify_inverse_positivity, comparison_matrix, comparison_principle_trials, stability_survey,
    InversePositivity, StabilityRow, StabilitySurvey, TrialReport,
};
pub use lu::{solve, SolveReport};
pub use matrix_market::{read_matrix_market, write_matrix_market};

use crate::bc1d::{collar_moments, Method, OperatorSpec};
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;

/// Grid refinement rule for studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridRule {
    /// Fixed nodes per horizon, `h = δ/m`.
    Coupled,
    /// `h ≈ δ^{3/2}/2`, adjusted so that `δ/h` is an integer.
    Resolved,
}

impl fmt::Display for GridRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridRule::Coupled => "coupled",
            GridRule::Resolved => "resolved",
        })
    }
}

impl FromStr for GridRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "coupled" => Ok(GridRule::Coupled),
            "resolved" => Ok(GridRule::Resolved),
            other => Err(Error::InvalidConfig(format!("unknown grid rule `{other}`"))),
        }
    }
}

pub const DEFAULT_COUPLED_M: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub n_cells: usize,
    pub h: f64,
    /// Nodes per horizon.
    pub m: usize,
}

fn integral_ratio(delta: f64, m: usize) -> Option<usize> {
    let n = (m as f64 / delta).round();
    if n >= 1.0 && (n * delta - m as f64).abs() <= 1e-9 * m as f64 {
        Some(n as usize)
    } else {
        None
    }
}

impl Grid1D {
    pub fn new(n_cells: usize, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 nodes per horizon, got {m}")));
        }
        if 2 * m >= n_cells {
            return Err(Error::LayerOverlap(m as f64 / n_cells as f64));
        }
        Ok(Grid1D {
            n_cells,
            h: 1.0 / n_cells as f64,
            m,
        })
    }

    /// Grid for horizon `delta` under `rule`; `m` is used by the coupled
    /// rule only.
    pub fn for_delta(delta: f64, rule: GridRule, m: usize) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {delta}")));
        }
        let mismatch = |m: usize| Error::GridMismatch {
            delta,
            h: delta / m as f64,
        };
        match rule {
            GridRule::Coupled => {
                let n = integral_ratio(delta, m).ok_or_else(|| mismatch(m))?;
                Grid1D::new(n, m)
            }
            GridRule::Resolved => {
                let m0 = ((2.0 / delta.sqrt()).round() as usize).max(2);
                (m0..=4 * m0)
                    .find_map(|m| integral_ratio(delta, m).map(|n| (n, m)))
                    .ok_or_else(|| mismatch(m0))
                    .and_then(|(n, m)| Grid1D::new(n, m))
            }
        }
    }

    pub fn delta(&self) -> f64 {
        self.m as f64 * self.h
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n_cells as f64
    }

    /// Number of unknowns.
    pub fn dim(&self) -> usize {
        self.n_cells - 1
    }

    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..self.n_cells).map(|i| self.node(i)).collect()
    }

    fn check_compatible(&self, delta: f64) -> Result<()> {
        if (self.delta() - delta).abs() > 1e-12 * delta.max(1.0) {
            return Err(Error::GridMismatch { delta, h: self.h });
        }
        Ok(())
    }
}

/// Square banded matrix on the interior unknowns plus the coefficients of
/// the two boundary nodes and a constant load per row. Row `r` is the
/// equation at node `r + 1`:
///
/// `Σ_c A[r][c] u_{c+1} + left[r] u_0 + right[r] u_N + load[r] = f(x_{r+1})`.
#[derive(Debug, Clone)]
pub struct BandSystem {
    pub dim: usize,
    pub lower_bw: usize,
    pub upper_bw: usize,
    band: Vec<f64>,
    pub left_col: Vec<f64>,
    pub right_col: Vec<f64>,
    pub load: Vec<f64>,
    /// Collar coefficient per row (`b_δ` for the nonlocal gradient, the
    /// extension mass for the other treatments, zero in the bulk).
    pub collar: Vec<f64>,
    pub boundary_data: (f64, f64),
    pub grid: Grid1D,
    pub method: Method,
    /// Off-diagonal entries whose sign was flipped when forming a comparison
    /// matrix; zero for assembled systems.
    pub sign_flips: usize,
}

impl BandSystem {
    pub fn zeros(dim: usize, lower_bw: usize, upper_bw: usize, grid: Grid1D, method: Method) -> Self {
        BandSystem {
            dim,
            lower_bw,
            upper_bw,
            band: vec![0.0; dim * (lower_bw + upper_bw + 1)],
            left_col: vec![0.0; dim],
            right_col: vec![0.0; dim],
            load: vec![0.0; dim],
            collar: vec![0.0; dim],
            boundary_data: (0.0, 0.0),
            grid,
            method,
            sign_flips: 0,
        }
    }

    fn width(&self) -> usize {
        self.lower_bw + self.upper_bw + 1
    }

    pub fn in_band(&self, r: usize, c: usize) -> bool {
        c + self.lower_bw >= r && c <= r + self.upper_bw && c < self.dim && r < self.dim
    }

    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width() + c + self.lower_bw - r
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if self.in_band(r, c) {
            self.band[self.idx(r, c)]
        } else {
            0.0
        }
    }

    /// Panics if `(r, c)` lies outside the band.
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        assert!(self.in_band(r, c), "({r}, {c}) outside the band");
        let k = self.idx(r, c);
        self.band[k] = v;
    }

    /// Column range of row `r` inside the band.
    pub fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        r.saturating_sub(self.lower_bw)..(r + self.upper_bw + 1).min(self.dim)
    }

    /// `A u` on interior unknowns.
    pub fn matvec(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.dim);
        (0..self.dim)
            .map(|r| self.row_range(r).map(|c| self.get(r, c) * u[c]).sum())
            .collect()
    }

    /// Operator applied to nodal values `u_0..u_N` (boundary nodes included),
    /// without the constant load.
    pub fn apply_nodal(&self, nodal: &[f64]) -> Vec<f64> {
        assert_eq!(nodal.len(), self.dim + 2);
        let mut out = self.matvec(&nodal[1..=self.dim]);
        for (r, o) in out.iter_mut().enumerate() {
            *o += self.left_col[r] * nodal[0] + self.right_col[r] * nodal[self.dim + 1];
        }
        out
    }

    /// Contribution of the boundary data moved to the right-hand side.
    pub fn boundary_offset(&self) -> Vec<f64> {
        let (a, b) = self.boundary_data;
        (0..self.dim)
            .map(|r| self.left_col[r] * a + self.right_col[r] * b + self.load[r])
            .collect()
    }

    /// Max-row-sum norm of the interior matrix.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row_range(r).map(|c| self.get(r, c).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |r, c| self.get(r, c))
    }
}

/// Cell moments of `z ↦ z K(z)` over `[c h, (c+1) h]`, `c = 0..cells`.
fn cell_moments<K: Fn(f64) -> f64>(k: K, h: f64, cells: usize, breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let gl = GaussLegendre::new(8);
    let mut p = vec![0.0; cells];
    let mut q = vec![0.0; cells];
    for c in 0..cells {
        let lo = c as f64 * h;
        let hi = lo + h;
        let mut cuts = vec![lo];
        cuts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
        cuts.push(hi);
        for w in cuts.windows(2) {
            for (z, wt) in gl.mapped(w[0], w[1]) {
                let t = (z - lo) / h;
                let f = z * k(z) * wt;
                p[c] += (1.0 - t) * f;
                q[c] += t * f;
            }
        }
    }
    (p, q)
}

struct BulkStencil {
    p: Vec<f64>,
    q: Vec<f64>,
    reach: usize,
    h: f64,
}

impl BulkStencil {
    fn hw(&self, k: usize, lo: usize, hi: usize) -> f64 {
        let mut v = 0.0;
        if k > lo {
            v += self.q[k - 1];
        }
        if k < hi {
            v += self.p[k];
        }
        v
    }

    /// Adds the bulk coefficients of node `i` to `row` (indexed by node
    /// offset `j - i + reach`, so `row[reach]` is the diagonal).
    fn fill(&self, i: usize, n: usize, row: &mut [f64]) {
        let m = self.reach;
        let l = i.min(m);
        let r = (n - i).min(m);
        let s = l.min(r);
        for k in 1..=s {
            let c = self.hw(k, 0, s) / (k as f64 * self.h);
            row[m] += 2.0 * c;
            row[m + k] -= c;
            row[m - k] -= c;
        }
        for (reach, right) in [(r, true), (l, false)] {
            if reach > s {
                for k in s..=reach {
                    let c = self.hw(k, s, reach) / (k as f64 * self.h);
                    row[m] += c;
                    if right {
                        row[m + k] -= c;
                    } else {
                        row[m - k] -= c;
                    }
                }
            }
        }
    }
}

/// One assembled row before it is scattered into band storage.
struct RowData {
    /// Coefficients on nodes `i - reach ..= i + reach` (may include nodes
    /// outside `0..=N`, which stay zero).
    stencil: Vec<f64>,
    /// Extra coefficients on nodes `0..` (left strip) or `..=N` (right).
    strip: Vec<(usize, f64)>,
    load: f64,
    collar: f64,
}

/// Assembles the collocation system of `spec` on `grid`.
pub fn assemble(spec: &OperatorSpec, grid: &Grid1D) -> Result<BandSystem> {
    grid.check_compatible(spec.delta())?;
    if 2.0 * spec.delta() >= 1.0 {
        return Err(Error::LayerOverlap(spec.delta()));
    }
    let n = grid.n_cells;
    let h = grid.h;
    let zs = spec.zs();
    let reach = if zs.is_some() { 2 * grid.m } else { grid.m };
    if 2 * reach >= n {
        return Err(Error::LayerOverlap(spec.delta()));
    }
    let stencil = {
        let (p, q) = match zs {
            Some(z) => {
                let d2 = spec.delta() * spec.delta();
                cell_moments(|r| z.w_delta(r) / d2, h, reach, &[])
            }
            None => cell_moments(|r| spec.kernel.eval(r), h, reach, &spec.kernel.breakpoints()),
        };
        BulkStencil { p, q, reach, h }
    };
    let zs_weights = zs.map(|z| strip_weights(|r| z.wbar_delta(r), h, reach));

    let rows: Vec<RowData> = (1..n)
        .into_par_iter()
        .map(|i| -> Result<RowData> {
            let mut st = vec![0.0; 2 * reach + 1];
            stencil.fill(i, n, &mut st);
            let x = grid.node(i);
            let mut strip = Vec::new();
            let mut load = 0.0;
            let mut collar = 0.0;
            if let Some(z) = zs {
                let c = z.strip_coefficient(x);
                if c != 0.0 {
                    let w = zs_weights.as_ref().expect("zhang_shi strip weights");
                    for (j, &wj) in w.iter().enumerate() {
                        let node = if x < 0.5 { j } else { n - j };
                        strip.push((node, c * wj));
                    }
                    collar = c;
                }
            } else if let Some(layer) = spec.layer(x) {
                let mom = collar_moments(&spec.kernel, layer.dist)?;
                let g = layer.data;
                let left = x < 0.5;
                match spec.method {
                    Method::NonlocalGradient => {
                        let span = layer.dist + spec.delta();
                        let b = 2.0 * mom.m1 / (span * span);
                        let top = (span / h).round() as usize;
                        for j in 0..=top {
                            let wj = if j == 0 || j == top { 0.5 * h } else { h };
                            let node = if left { j } else { n - j };
                            strip.push((node, b * wj));
                        }
                        load -= b * g * span;
                        collar = b;
                    }
                    Method::ConstantExtension => {
                        st[reach] += mom.m0;
                        load -= mom.m0 * g;
                        collar = mom.m0;
                    }
                    Method::Morris => {
                        let mass = mom.m0 + mom.m_eta;
                        st[reach] += mass;
                        load -= mass * g;
                        collar = mass;
                    }
                    Method::ZhangShi => unreachable!(),
                }
            }
            Ok(RowData {
                stencil: st,
                strip,
                load,
                collar,
            })
        })
        .collect::<Result<_>>()?;

    let dim = n - 1;
    let mut sys = BandSystem::zeros(dim, reach, reach, *grid, spec.method);
    sys.boundary_data = spec.boundary_data;
    for (r, row) in rows.into_iter().enumerate() {
        let i = r + 1;
        let put = |node: usize, v: f64, sys: &mut BandSystem| {
            if node == 0 {
                sys.left_col[r] += v;
            } else if node == n {
                sys.right_col[r] += v;
            } else {
                let c = node - 1;
                let cur = sys.get(r, c);
                sys.set(r, c, cur + v);
            }
        };
        for (k, &v) in row.stencil.iter().enumerate() {
            if v != 0.0 {
                let node = i + k - reach;
                put(node, v, &mut sys);
            }
        }
        for (node, v) in row.strip {
            put(node, v, &mut sys);
        }
        sys.load[r] = row.load;
        sys.collar[r] = row.collar;
    }
    Ok(sys)
}

/// `ω_j = ∫_0^{reach h} hat_j(y) K(y) dy` for the nodes of a boundary strip.
fn strip_weights<K: Fn(f64) -> f64>(k: K, h: f64, reach: usize) -> Vec<f64> {
    let gl = GaussLegendre::new(8);
    let mut w = vec![0.0; reach + 1];
    for c in 0..reach {
        let lo = c as f64 * h;
        for (y, wt) in gl.mapped(lo, lo + h) {
            let t = (y - lo) / h;
            let f = k(y) * wt;
            w[c] += (1.0 - t) * f;
            w[c + 1] += t * f;
        }
    }
    w
}

/// Right-hand side `f(x_i)` (mollified for Zhang–Shi) minus the boundary
/// offset.
pub fn rhs_vector<F: Fn(f64) -> f64 + Sync>(spec: &OperatorSpec, sys: &BandSystem, f: F) -> Result<Vec<f64>> {
    let nodes = sys.grid.interior_nodes();
    let off = sys.boundary_offset();
    let vals: Vec<f64> = match spec.zs() {
        Some(z) => nodes
            .par_iter()
            .map(|&x| z.rhs(&f, x))
            .collect::<Result<_>>()?,
        None => nodes.iter().map(|&x| f(x)).collect(),
    };
    Ok(vals.into_iter().zip(off).map(|(v, o)| v - o).collect())
}

/// Assembles and solves the nonlocal problem with source `f`; returns nodal
/// values `u_0..u_N` (boundary data included).
pub fn solve_problem<F: Fn(f64) -> f64 + Sync>(spec: &OperatorSpec, grid: &Grid1D, f: F) -> Result<Vec<f64>> {
    let sys = assemble(spec, grid)?;
    let rhs = rhs_vector(spec, &sys, f)?;
    let sol = solve(&sys, &rhs)?;
    let mut out = Vec::with_capacity(sys.dim + 2);
    out.push(spec.boundary_data.0);
    out.extend(sol.u);
    out.push(spec.boundary_data.1);
    Ok(out)
}
