use serde::Serialize;

use super::{a_delta, apply_comparison, b_delta, check_domain, OperatorSpec};
use crate::error::{Error, Result};
use crate::quad::Adaptive;

/// Worst sampled value of one assumption's slack.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Margin {
    pub assumption: String,
    /// Smallest slack found (relative to `a_δ` for A2/A3, to the ball
    /// measure for A2s, moment error for A1).
    pub min: f64,
    /// Where it was found (`NaN` for A1).
    pub at: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub a1: bool,
    pub a2: bool,
    pub a2s: bool,
    pub a3: bool,
    pub margins: Vec<Margin>,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.a1 && self.a2 && self.a2s && self.a3
    }
}

const REL_TOL: f64 = 1e-9;

/// Chebyshev points of the first kind mapped to `(lo, hi)`.
pub(crate) fn chebyshev(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
            lo + (hi - lo) * 0.5 * (1.0 - t)
        })
        .collect()
}

/// `∫_Ω w̃_δ(y, x) dy`: the column mass of the comparison kernel.
fn column_mass(spec: &OperatorSpec, x: f64) -> Result<f64> {
    let d = spec.delta();
    let lo = (x - d).max(0.0);
    let hi = (x + d).min(1.0);
    let mut breaks = spec.breaks_around(x);
    breaks.extend([d, 1.0 - d]);
    let q = Adaptive {
        abs_tol: 1e-9,
        ..Default::default()
    };
    q.integrate(
        |y| {
            if y <= 0.0 || y >= 1.0 {
                return 0.0;
            }
            let b = b_delta(spec, y).unwrap_or(0.0);
            super::w_tilde_with(spec, b, y, x)
        },
        lo,
        hi,
        &breaks,
    )
}

/// Relative measure difference `(|{w - bχ ≥ 0}| - |{w - bχ ≤ 0}|)/|B ∩ Ω|`,
/// estimated on a midpoint sample of `B_δ(x) ∩ Ω`.
fn sign_balance(spec: &OperatorSpec, x: f64) -> Result<f64> {
    let d = spec.delta();
    let b = b_delta(spec, x)?;
    let lo = (x - d).max(0.0);
    let hi = (x + d).min(1.0);
    let n = 4000;
    let step = (hi - lo) / n as f64;
    let mut balance = 0i64;
    for k in 0..n {
        let y = lo + (k as f64 + 0.5) * step;
        let v = spec.kernel.eval(y - x) - b;
        if v >= 0.0 {
            balance += 1;
        }
        if v <= 0.0 {
            balance -= 1;
        }
    }
    Ok(balance as f64 / n as f64)
}

/// Samples (A1)-(A3) and (A2s).
///
/// (A2) and (A2s) are checked at `n_samples` Chebyshev points of `(0, 1)`;
/// (A3) at `n_samples` Chebyshev points in each `2δ` layer.
pub fn check_assumptions(spec: &OperatorSpec, n_samples: usize) -> Result<AssumptionReport> {
    if n_samples < 100 {
        return Err(Error::InvalidConfig(format!("need at least 100 samples, got {n_samples}")));
    }
    let adm = spec.kernel.base.check_admissible(n_samples.max(1000));
    let mut a2 = Margin {
        assumption: "A2".into(),
        min: f64::INFINITY,
        at: f64::NAN,
    };
    let mut a2s = Margin {
        assumption: "A2s".into(),
        min: f64::INFINITY,
        at: f64::NAN,
    };
    for x in chebyshev(n_samples, 0.0, 1.0) {
        check_domain(x)?;
        let a = a_delta(spec, x)?;
        let slack = apply_comparison(spec, |_| 1.0, x)? / a;
        if slack < a2.min {
            a2.min = slack;
            a2.at = x;
        }
        let bal = sign_balance(spec, x)?;
        if bal < a2s.min {
            a2s.min = bal;
            a2s.at = x;
        }
    }
    let mut a3 = Margin {
        assumption: "A3".into(),
        min: f64::INFINITY,
        at: f64::NAN,
    };
    let w = (2.0 * spec.delta()).min(0.5);
    let left = chebyshev(n_samples, 0.0, w);
    let right = chebyshev(n_samples, 1.0 - w, 1.0);
    for x in left.into_iter().chain(right) {
        let a = a_delta(spec, x)?;
        let slack = (a - column_mass(spec, x)?) / a;
        if slack < a3.min {
            a3.min = slack;
            a3.at = x;
        }
    }
    Ok(AssumptionReport {
        a1: adm.holds,
        a2: a2.min >= -REL_TOL,
        a2s: a2s.min >= 0.0,
        a3: a3.min >= -REL_TOL,
        margins: vec![
            Margin {
                assumption: "A1".into(),
                min: adm.moment_error,
                at: f64::NAN,
            },
            a2,
            a2s,
            a3,
        ],
    })
}
