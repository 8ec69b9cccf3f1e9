//! Numerical integration.
//!
//! [`Adaptive`] is a globally adaptive Gauss–Kronrod (7/15) integrator: the
//! panel with the largest error estimate is bisected until the summed error
//! falls below tolerance. Callers pass the points where the integrand is not
//! smooth (kernel support edges, domain ends) as breakpoints so every initial
//! panel is smooth. [`GaussLegendre`] provides fixed rules used by assembly.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hl * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * hl, ((kron - gauss) * hl).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integrator.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive {
            abs_tol: 1e-11,
            rel_tol: 1e-13,
            max_depth: 40,
        }
    }
}

impl Adaptive {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Adaptive {
            abs_tol,
            ..Default::default()
        }
    }

    /// Integrates `f` over `[a, b]`, splitting first at every breakpoint that
    /// falls strictly inside the interval.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
        cuts.push(a);
        let span = b - a;
        for &p in breaks {
            if p > a + 1e-15 * span && p < b - 1e-15 * span {
                cuts.push(p);
            }
        }
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut heap = BinaryHeap::new();
        let mut total = 0.0;
        let mut err = 0.0;
        let mut scale = 0.0;
        for w in cuts.windows(2) {
            let (v, e) = gk15(&f, w[0], w[1]);
            total += v;
            err += e;
            scale += v.abs();
            heap.push(Panel {
                a: w[0],
                b: w[1],
                value: v,
                error: e,
                depth: 0,
            });
        }
        loop {
            let tol = self.abs_tol.max(self.rel_tol * scale);
            if err <= tol {
                return Ok(total);
            }
            let worst = heap.pop().expect("nonempty panel list");
            if worst.depth >= self.max_depth {
                return Err(Error::QuadratureFailure {
                    tol,
                    estimate: total,
                    error: err,
                });
            }
            let mid = 0.5 * (worst.a + worst.b);
            let (v1, e1) = gk15(&f, worst.a, mid);
            let (v2, e2) = gk15(&f, mid, worst.b);
            total += v1 + v2 - worst.value;
            err += e1 + e2 - worst.error;
            scale += v1.abs() + v2.abs() - worst.value.abs();
            // Running sums drift; recompute when the estimate gets close.
            if err <= tol {
                let (t, e, s) = heap.iter().fold((v1 + v2, e1 + e2, v1.abs() + v2.abs()), |acc, p| {
                    (acc.0 + p.value, acc.1 + p.error, acc.2 + p.value.abs())
                });
                total = t;
                err = e;
                scale = s;
            }
            heap.push(Panel {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
                depth: worst.depth + 1,
            });
            heap.push(Panel {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
                depth: worst.depth + 1,
            });
        }
    }
}

/// Shorthand for [`Adaptive::default`] integration.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
    Adaptive::default().integrate(f, a, b, breaks)
}

/// Fixed n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if n == 1 { x } else { p1 };
                let pm1 = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Applies the rule on `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let hl = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(c + hl * t))
            .sum::<f64>()
            * hl
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let hl = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (c + hl * t, w * hl))
    }
}
