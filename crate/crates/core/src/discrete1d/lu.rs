//! Direct solvers: dense LU for small systems, banded LU with partial
//! pivoting above [`DENSE_LIMIT`].

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::BandSystem;
use crate::error::{Error, Result};

pub const DENSE_LIMIT: usize = 1024;
const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub u: Vec<f64>,
    /// `‖A u - rhs‖_∞`.
    pub residual: f64,
    /// `residual / ‖rhs‖_∞` (zero for a zero right-hand side).
    pub relative_residual: f64,
    pub banded: bool,
}

/// Solves `A u = rhs` on the interior unknowns.
pub fn solve(sys: &BandSystem, rhs: &[f64]) -> Result<SolveReport> {
    if rhs.len() != sys.dim {
        return Err(Error::InvalidConfig(format!(
            "right-hand side has {} entries, system has {}",
            rhs.len(),
            sys.dim
        )));
    }
    let norm = sys.norm_inf();
    let banded = sys.dim > DENSE_LIMIT;
    let u = if banded {
        BandLu::factor(sys, norm)?.solve(rhs)
    } else {
        dense_solve(sys, rhs, norm)?
    };
    let au = sys.matvec(&u);
    let residual = au.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let rhs_norm = rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(SolveReport {
        u,
        residual,
        relative_residual: if rhs_norm > 0.0 { residual / rhs_norm } else { residual },
        banded,
    })
}

fn dense_solve(sys: &BandSystem, rhs: &[f64], norm: f64) -> Result<Vec<f64>> {
    let lu = sys.to_dense().lu();
    check_pivots(lu.u().diagonal().iter().copied(), norm)?;
    let x = lu
        .solve(&DVector::from_column_slice(rhs))
        .ok_or(Error::SingularMatrix { row: 0, pivot: 0.0 })?;
    Ok(x.iter().copied().collect())
}

fn check_pivots(diag: impl Iterator<Item = f64>, norm: f64) -> Result<()> {
    for (row, p) in diag.enumerate() {
        if !(p.abs() >= PIVOT_TOL * norm) || norm == 0.0 {
            return Err(Error::SingularMatrix { row, pivot: p });
        }
    }
    Ok(())
}

/// Dense inverse through LU; fails on tiny pivots.
pub(crate) fn dense_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let norm = a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let lu = a.clone().lu();
    check_pivots(lu.u().diagonal().iter().copied(), norm)?;
    lu.try_inverse().ok_or(Error::SingularMatrix { row: 0, pivot: 0.0 })
}

/// LU factors in row windows: row `i` holds columns
/// `i - kl ..= i + kl + ku`, room for the fill created by row swaps.
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width() + c + self.kl - r
    }

    fn factor(sys: &BandSystem, norm: f64) -> Result<Self> {
        let (n, kl, ku) = (sys.dim, sys.lower_bw, sys.upper_bw);
        let mut lu = BandLu {
            n,
            kl,
            ku,
            a: vec![0.0; n * (2 * kl + ku + 1)],
            piv: vec![0; n],
        };
        for r in 0..n {
            for c in sys.row_range(r) {
                let k = lu.idx(r, c);
                lu.a[k] = sys.get(r, c);
            }
        }
        let ufill = kl + ku;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.a[lu.idx(k, k)].abs();
            for r in k + 1..=last {
                let v = lu.a[lu.idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best >= PIVOT_TOL * norm) || norm == 0.0 {
                return Err(Error::SingularMatrix {
                    row: k,
                    pivot: lu.a[lu.idx(p, k)],
                });
            }
            lu.piv[k] = p;
            let cmax = (k + ufill).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    let (i1, i2) = (lu.idx(k, c), lu.idx(p, c));
                    lu.a.swap(i1, i2);
                }
            }
            let pivot = lu.a[lu.idx(k, k)];
            for r in k + 1..=last {
                let ir = lu.idx(r, k);
                let l = lu.a[ir] / pivot;
                lu.a[ir] = l;
                if l != 0.0 {
                    for c in k + 1..=cmax {
                        let v = lu.a[lu.idx(k, c)];
                        let ic = lu.idx(r, c);
                        lu.a[ic] -= l * v;
                    }
                }
            }
        }
        Ok(lu)
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = rhs.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let last = (k + self.kl).min(n - 1);
            for r in k + 1..=last {
                x[r] -= self.a[self.idx(r, k)] * x[k];
            }
        }
        let ufill = self.kl + self.ku;
        for k in (0..n).rev() {
            let cmax = (k + ufill).min(n - 1);
            let mut s = x[k];
            for c in k + 1..=cmax {
                s -= self.a[self.idx(k, c)] * x[c];
            }
            x[k] = s / self.a[self.idx(k, k)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc1d::Method;
    use crate::discrete1d::Grid1D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> BandSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid1D::new(n + 1, 2).unwrap();
        let mut s = BandSystem::zeros(n, kl, ku, grid, Method::NonlocalGradient);
        for r in 0..n {
            for c in s.row_range(r) {
                s.set(r, c, rng.random_range(-1.0..1.0));
            }
        }
        s
    }

    #[test]
    fn banded_and_dense_agree() {
        let sys = random_band(60, 3, 5, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rhs = sys.matvec(&v);
        let norm = sys.norm_inf();
        let band = BandLu::factor(&sys, norm).unwrap().solve(&rhs);
        let dense = dense_solve(&sys, &rhs, norm).unwrap();
        for i in 0..60 {
            assert!((band[i] - v[i]).abs() < 1e-8);
            assert!((dense[i] - v[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn banded_path_above_limit() {
        let n = DENSE_LIMIT + 50;
        let mut sys = random_band(n, 4, 4, 3);
        for r in 0..n {
            let v = sys.get(r, r);
            sys.set(r, r, v + 10.0);
        }
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * 0.01).sin()).collect();
        let rep = solve(&sys, &sys.matvec(&v)).unwrap();
        assert!(rep.banded);
        assert!(rep.relative_residual < 1e-10);
        assert!(rep.u.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn zero_rhs_and_singular() {
        let sys = random_band(20, 2, 2, 11);
        let rep = solve(&sys, &[0.0; 20]).unwrap();
        assert!(rep.u.iter().all(|&v| v == 0.0));
        let mut sing = sys.clone();
        for c in sing.row_range(4) {
            sing.set(4, c, 0.0);
        }
        assert!(matches!(solve(&sing, &[1.0; 20]), Err(Error::SingularMatrix { .. })));
    }
}
