use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::lu::dense_inverse;
use super::{assemble, solve, BandSystem, Grid1D, GridRule};
use crate::bc1d::{Method, OperatorSpec};
use crate::error::{Error, Result};

/// Ostrowski companion: `|a_ii|` on the diagonal, `-|a_ij|` elsewhere
/// (boundary columns included), no load.
///
/// `sign_flips` counts interior off-diagonal entries that were positive.
pub fn comparison_matrix(sys: &BandSystem) -> Result<BandSystem> {
    if sys.method != Method::NonlocalGradient {
        return Err(Error::MethodMismatch {
            expected: Method::NonlocalGradient.to_string(),
            found: sys.method.to_string(),
        });
    }
    let mut out = sys.clone();
    let mut flips = 0;
    for r in 0..sys.dim {
        for c in sys.row_range(r) {
            let v = sys.get(r, c);
            if r == c {
                out.set(r, c, v.abs());
            } else {
                if v > 0.0 {
                    flips += 1;
                }
                out.set(r, c, -v.abs());
            }
        }
        out.left_col[r] = -sys.left_col[r].abs();
        out.right_col[r] = -sys.right_col[r].abs();
        out.load[r] = 0.0;
    }
    out.boundary_data = (0.0, 0.0);
    out.sign_flips = flips;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct InversePositivity {
    pub is_inverse_nonneg: bool,
    pub min_entry: f64,
    pub max_entry: f64,
    pub dim: usize,
}

/// Dense inverse of `sys` (normally a comparison matrix) and the sign of its
/// smallest entry, with tolerance `-1e-11 max|A⁻¹|`.
pub fn certify_inverse_positivity(sys: &BandSystem) -> Result<InversePositivity> {
    if sys.dim > 2048 {
        return Err(Error::InvalidConfig(format!(
            "dense inverse limited to dimension 2048, got {}",
            sys.dim
        )));
    }
    let inv = dense_inverse(&sys.to_dense())?;
    let min_entry = inv.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs = inv.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let max_entry = inv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(InversePositivity {
        is_inverse_nonneg: min_entry >= -1e-11 * max_abs,
        min_entry,
        max_entry,
        dim: sys.dim,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub trials: usize,
    /// Smallest solution entry over all trials.
    pub min_value: f64,
    pub all_nonneg: bool,
}

/// Solves `sys u = g` for `trials` seeded random right-hand sides with
/// entries uniform in `[0, 1)`.
pub fn comparison_principle_trials(sys: &BandSystem, trials: usize, seed: u64) -> Result<TrialReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_value = f64::INFINITY;
    let mut ok = true;
    for _ in 0..trials {
        let g: Vec<f64> = (0..sys.dim).map(|_| rng.random::<f64>()).collect();
        let u = solve(sys, &g)?.u;
        let scale = u.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
        min_value = min_value.min(lo);
        if lo < -1e-10 * scale {
            ok = false;
        }
    }
    Ok(TrialReport {
        trials,
        min_value,
        all_nonneg: ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRow {
    pub delta: f64,
    pub n_cells: usize,
    /// Smallest singular value of the discrete operator.
    pub sigma_min: f64,
    /// Smallest eigenvalue of the symmetric part of the comparison matrix.
    pub sym_eig_min: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilitySurvey {
    pub rows: Vec<StabilityRow>,
    pub sigma_uniform: bool,
    pub eig_uniform: bool,
}

impl StabilitySurvey {
    pub fn uniform(&self) -> bool {
        self.sigma_uniform && self.eig_uniform
    }
}

fn within_quarter(v: impl Iterator<Item = f64> + Clone) -> bool {
    let lo = v.clone().fold(f64::INFINITY, f64::min);
    let hi = v.fold(f64::NEG_INFINITY, f64::max);
    lo > 0.0 && lo >= 0.75 * hi
}

/// Lower stability constants across horizons.
///
/// With the grid inner product `h Σ u_i v_i` on both sides the `h` weights
/// cancel, so the plain singular values approximate the `L²` operator
/// bounds. The comparison matrix always comes from the nonlocal-gradient
/// assembly, since it is a property of the kernel.
pub fn stability_survey(spec: &OperatorSpec, deltas: &[f64], rule: GridRule, m: usize) -> Result<StabilitySurvey> {
    if deltas.is_empty() {
        return Err(Error::InvalidConfig("empty horizon list".into()));
    }
    let mut rows = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let grid = Grid1D::for_delta(d, rule, m)?;
        let s = OperatorSpec::new(spec.kernel.base.clone(), d, spec.method)?;
        let a = assemble(&s, &grid)?;
        let sigma_min = smallest_singular_value(&a.to_dense());
        let ng = if spec.method == Method::NonlocalGradient {
            a
        } else {
            assemble(&s.with_method(Method::NonlocalGradient)?, &grid)?
        };
        let p = comparison_matrix(&ng)?.to_dense();
        let sym = (&p + p.transpose()) * 0.5;
        let sym_eig_min = SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        rows.push(StabilityRow {
            delta: d,
            n_cells: grid.n_cells,
            sigma_min,
            sym_eig_min,
        });
    }
    Ok(StabilitySurvey {
        sigma_uniform: within_quarter(rows.iter().map(|r| r.sigma_min)),
        eig_uniform: within_quarter(rows.iter().map(|r| r.sym_eig_min)),
        rows,
    })
}

pub(crate) fn smallest_singular_value(a: &DMatrix<f64>) -> f64 {
    a.clone().svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{builtin_constant, builtin_linear};

    fn ng_system(k: crate::kernel::KernelProfile, d: f64, n: usize) -> BandSystem {
        let s = OperatorSpec::new(k, d, Method::NonlocalGradient).unwrap();
        let g = Grid1D::new(n, (d * n as f64).round() as usize).unwrap();
        assemble(&s, &g).unwrap()
    }

    #[test]
    fn comparison_requires_nonlocal_gradient() {
        let s = OperatorSpec::new(builtin_constant(), 0.1, Method::Morris).unwrap();
        let sys = assemble(&s, &Grid1D::new(60, 6).unwrap()).unwrap();
        assert!(matches!(comparison_matrix(&sys), Err(Error::MethodMismatch { .. })));
    }

    #[test]
    fn comparison_is_idempotent() {
        let p = comparison_matrix(&ng_system(builtin_linear(), 0.1, 60)).unwrap();
        let pp = comparison_matrix(&p).unwrap();
        assert_eq!(pp.sign_flips, 0);
        for r in 0..p.dim {
            for c in p.row_range(r) {
                assert_eq!(p.get(r, c), pp.get(r, c));
            }
        }
    }

    #[test]
    fn inverse_positivity_and_control() {
        for k in [builtin_constant(), builtin_linear()] {
            let p = comparison_matrix(&ng_system(k, 0.1, 200)).unwrap();
            let rep = certify_inverse_positivity(&p).unwrap();
            assert!(rep.is_inverse_nonneg, "{rep:?}");
        }
        let mut p = comparison_matrix(&ng_system(builtin_constant(), 0.1, 60)).unwrap();
        let d = p.get(30, 30);
        p.set(30, 31, 0.9 * d);
        p.set(30, 29, 0.9 * d);
        assert!(!certify_inverse_positivity(&p).unwrap().is_inverse_nonneg);
    }

    #[test]
    fn zero_row_has_vanishing_singular_value() {
        let mut a = ng_system(builtin_constant(), 0.1, 60);
        for c in a.row_range(10) {
            a.set(10, c, 0.0);
        }
        assert!(smallest_singular_value(&a.to_dense()) < 1e-10);
    }

    #[test]
    fn random_trials_stay_nonnegative() {
        let p = comparison_matrix(&ng_system(builtin_constant(), 0.1, 60)).unwrap();
        let rep = comparison_principle_trials(&p, 20, 42).unwrap();
        assert!(rep.all_nonneg && rep.min_value >= 0.0);
    }
}
