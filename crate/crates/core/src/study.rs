//! Manufactured-solution convergence studies, truncation surveys and method
//! comparisons.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::bc1d::{b_delta, truncation_error, Method, OperatorSpec};
use crate::discrete1d::{solve_problem, Grid1D, GridRule};
use crate::error::{Error, Result};
use crate::kernel::KernelProfile;

type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Exact local solution `u0` of `-u'' = f` with its data.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    u0: Func,
    f: Func,
    /// `(u0(0), u0(1))`.
    pub boundary: (f64, f64),
    /// `polynomial` or `smooth`.
    pub smoothness: &'static str,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .field("boundary", &self.boundary)
            .finish()
    }
}

use std::f64::consts::PI;

impl ManufacturedCase {
    pub fn new<U, F>(name: &str, u0: U, f: F, smoothness: &'static str) -> Self
    where
        U: Fn(f64) -> f64 + Send + Sync + 'static,
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        // sin(π) and friends are zero up to rounding
        let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
        let boundary = (snap(u0(0.0)), snap(u0(1.0)));
        ManufacturedCase {
            name: name.to_string(),
            u0: Arc::new(u0),
            f: Arc::new(f),
            boundary,
            smoothness,
        }
    }

    /// `x(1-x)`, `f = 2`.
    pub fn quadratic() -> Self {
        Self::new("quadratic", |x| x * (1.0 - x), |_| 2.0, "polynomial")
    }

    /// `x(1-x)/2`, `f = 1`.
    pub fn half_quadratic() -> Self {
        Self::new("half_quadratic", |x| 0.5 * x * (1.0 - x), |_| 1.0, "polynomial")
    }

    /// `sin(πx)`.
    pub fn sine() -> Self {
        Self::new("sine", |x| (PI * x).sin(), |x| PI * PI * (PI * x).sin(), "smooth")
    }

    /// `sin(πx) + x(1-x)²`, no mirror symmetry.
    pub fn asymmetric() -> Self {
        Self::new(
            "asymmetric",
            |x| (PI * x).sin() + x * (1.0 - x) * (1.0 - x),
            |x| PI * PI * (PI * x).sin() - (6.0 * x - 4.0),
            "smooth",
        )
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0, |_| 0.0, "polynomial")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "quadratic" => Ok(Self::quadratic()),
            "half_quadratic" => Ok(Self::half_quadratic()),
            "sine" | "sin" => Ok(Self::sine()),
            "asymmetric" => Ok(Self::asymmetric()),
            "zero" => Ok(Self::zero()),
            other => Err(Error::InvalidConfig(format!("unknown manufactured case `{other}`"))),
        }
    }

    pub const NAMES: [&'static str; 5] = ["quadratic", "half_quadratic", "sine", "asymmetric", "zero"];

    pub fn u0(&self, x: f64) -> f64 {
        (self.u0)(x)
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    /// Largest `|-u0'' - f|` over 100 interior points, with `u0''` from a
    /// twice Richardson-extrapolated central difference.
    pub fn residual_check(&self) -> f64 {
        let d2 = |x: f64, h: f64| (self.u0(x + h) - 2.0 * self.u0(x) + self.u0(x - h)) / (h * h);
        (1..=100)
            .map(|k| {
                let x = k as f64 / 101.0;
                let h = 0.02;
                let (a, b, c) = (d2(x, h), d2(x, h / 2.0), d2(x, h / 4.0));
                let r1 = (4.0 * b - a) / 3.0;
                let r2 = (4.0 * c - b) / 3.0;
                let lap = (16.0 * r2 - r1) / 15.0;
                (-lap - self.f(x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyResult {
    pub method: Method,
    pub kernel: String,
    pub case: String,
    pub grid_rule: GridRule,
    pub delta_list: Vec<f64>,
    pub h_list: Vec<f64>,
    pub error_linf: Vec<f64>,
    pub error_l2: Vec<f64>,
    pub fitted_rate_linf: Option<f64>,
    pub fitted_rate_l2: Option<f64>,
    /// Wall-clock seconds; left out of serialized artifacts so that reruns
    /// are byte-identical.
    #[serde(skip)]
    pub wall_time: f64,
}

impl StudyResult {
    /// Slopes between consecutive horizons (`None` for the first).
    pub fn running_rates(&self) -> Vec<Option<f64>> {
        let mut out = vec![None];
        for k in 1..self.delta_list.len() {
            out.push(
                fit_rate(&self.delta_list[k - 1..=k], &self.error_linf[k - 1..=k]).ok(),
            );
        }
        out
    }
}

/// Least-squares slope of `log(error)` against `log(δ)`.
pub fn fit_rate(deltas: &[f64], errors: &[f64]) -> Result<f64> {
    if deltas.len() != errors.len() {
        return Err(Error::DegenerateFit("length mismatch".into()));
    }
    if deltas.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    if let Some(e) = errors.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::DegenerateFit(format!("nonpositive error {e}")));
    }
    if let Some(d) = deltas.iter().find(|&&d| !(d > 0.0)) {
        return Err(Error::DegenerateFit(format!("nonpositive horizon {d}")));
    }
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all horizons equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Solves the nonlocal problem for every horizon and records the errors
/// against `case.u0` at the interior nodes.
pub fn run_convergence(
    case: &ManufacturedCase,
    template: &OperatorSpec,
    deltas: &[f64],
    rule: GridRule,
    m: usize,
) -> Result<StudyResult> {
    if deltas.is_empty() {
        return Err(Error::InvalidConfig("empty horizon list".into()));
    }
    let start = Instant::now();
    let runs: Vec<(f64, f64, f64)> = deltas
        .par_iter()
        .map(|&d| -> Result<(f64, f64, f64)> {
            let spec = OperatorSpec::new(template.kernel.base.clone(), d, template.method)?
                .with_boundary_data(case.boundary.0, case.boundary.1)?;
            let grid = Grid1D::for_delta(d, rule, m)?;
            let u = solve_problem(&spec, &grid, |x| case.f(x))?;
            let mut linf: f64 = 0.0;
            let mut sq = 0.0;
            for i in 1..grid.n_cells {
                let e = u[i] - case.u0(grid.node(i));
                linf = linf.max(e.abs());
                sq += e * e;
            }
            Ok((grid.h, linf, (grid.h * sq).sqrt()))
        })
        .collect::<Result<_>>()?;
    let error_linf: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let error_l2: Vec<f64> = runs.iter().map(|r| r.2).collect();
    Ok(StudyResult {
        method: template.method,
        kernel: template.kernel.base.name().to_string(),
        case: case.name.clone(),
        grid_rule: rule,
        delta_list: deltas.to_vec(),
        h_list: runs.iter().map(|r| r.0).collect(),
        fitted_rate_linf: fit_rate(deltas, &error_linf).ok(),
        fitted_rate_l2: fit_rate(deltas, &error_l2).ok(),
        error_linf,
        error_l2,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationRow {
    pub delta: f64,
    /// Max `|T|` over nodes outside the boundary layers.
    pub interior_max: f64,
    /// Max `|T|` over layer nodes.
    pub layer_max: f64,
    /// Max `|T|/(δ³ b_δ + δ²)` over layer nodes.
    pub layer_ratio_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationSurvey {
    pub method: Method,
    pub kernel: String,
    pub case: String,
    pub rows: Vec<TruncationRow>,
    pub interior_slope: Option<f64>,
}

/// Continuum truncation error `T_δ u0` at the grid nodes of every horizon.
///
/// The layer has width `δ`, or `2δ` for Zhang–Shi.
pub fn truncation_survey(
    case: &ManufacturedCase,
    template: &OperatorSpec,
    deltas: &[f64],
    rule: GridRule,
    m: usize,
) -> Result<TruncationSurvey> {
    if deltas.is_empty() {
        return Err(Error::InvalidConfig("empty horizon list".into()));
    }
    // -Δu0 = f
    let lap = |x: f64| -case.f(x);
    let rows: Vec<TruncationRow> = deltas
        .iter()
        .map(|&d| -> Result<TruncationRow> {
            let spec = OperatorSpec::new(template.kernel.base.clone(), d, template.method)?
                .with_boundary_data(case.boundary.0, case.boundary.1)?;
            let grid = Grid1D::for_delta(d, rule, m)?;
            let width = if template.method == Method::ZhangShi { 2.0 * d } else { d };
            let vals: Vec<(f64, f64, f64)> = grid
                .interior_nodes()
                .par_iter()
                .map(|&x| -> Result<(f64, f64, f64)> {
                    let t = truncation_error(&spec, |y| case.u0(y), lap, x)?.abs();
                    let b = b_delta(&spec, x)?;
                    Ok((x, t, t / (d * d * d * b + d * d)))
                })
                .collect::<Result<_>>()?;
            let mut row = TruncationRow {
                delta: d,
                interior_max: 0.0,
                layer_max: 0.0,
                layer_ratio_max: 0.0,
            };
            for (x, t, ratio) in vals {
                if x < width || x > 1.0 - width {
                    row.layer_max = row.layer_max.max(t);
                    row.layer_ratio_max = row.layer_ratio_max.max(ratio);
                } else {
                    row.interior_max = row.interior_max.max(t);
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let interior: Vec<f64> = rows.iter().map(|r| r.interior_max).collect();
    Ok(TruncationSurvey {
        method: template.method,
        kernel: template.kernel.base.name().to_string(),
        case: case.name.clone(),
        interior_slope: fit_rate(deltas, &interior).ok(),
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub result: Option<StudyResult>,
    /// Failure message when the convergence run did not complete.
    pub error: Option<String>,
    pub interior_truncation_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodComparison {
    pub case: String,
    pub kernel: String,
    pub outcomes: Vec<MethodOutcome>,
    /// Methods with a fitted `L∞` rate, lowest rate first.
    pub ordering: Vec<(Method, f64)>,
}

/// Runs every treatment on shared grids; failures are recorded per method.
pub fn compare_methods(
    case: &ManufacturedCase,
    kernel: &KernelProfile,
    deltas: &[f64],
    rule: GridRule,
    m: usize,
) -> Result<MethodComparison> {
    if deltas.is_empty() {
        return Err(Error::InvalidConfig("empty horizon list".into()));
    }
    let mut outcomes = Vec::new();
    for method in Method::ALL {
        let template = OperatorSpec::new(kernel.clone(), deltas[0], method);
        let (result, error) = match template
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|t| run_convergence(case, t, deltas, rule, m))
        {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let interior_truncation_slope = template
            .ok()
            .and_then(|t| truncation_survey(case, &t, deltas, rule, m).ok())
            .and_then(|s| s.interior_slope);
        outcomes.push(MethodOutcome {
            method,
            result,
            error,
            interior_truncation_slope,
        });
    }
    let mut ordering: Vec<(Method, f64)> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().and_then(|r| r.fitted_rate_linf).map(|p| (o.method, p)))
        .collect();
    ordering.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(MethodComparison {
        case: case.name.clone(),
        kernel: kernel.name().to_string(),
        outcomes,
        ordering,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|r| format!("{r:.6}")).unwrap_or_default()
}

/// `study.csv` body.
pub fn study_csv(results: &[StudyResult]) -> String {
    let mut s = String::from("method,kernel,delta,h,err_linf,err_l2,rate_running\n");
    for r in results {
        for (k, rate) in r.running_rates().into_iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{:.10e},{:.10e},{:.10e},{}",
                r.method,
                r.kernel,
                r.delta_list[k],
                r.h_list[k],
                r.error_linf[k],
                r.error_l2[k],
                fmt_opt(rate)
            );
        }
    }
    s
}

/// Truncation table as CSV.
pub fn truncation_csv(surveys: &[TruncationSurvey]) -> String {
    let mut s = String::from("method,kernel,case,delta,interior_max,layer_max,layer_ratio_max\n");
    for t in surveys {
        for r in &t.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.10e},{:.10e},{:.10e}",
                t.method, t.kernel, t.case, r.delta, r.interior_max, r.layer_max, r.layer_ratio_max
            );
        }
    }
    s
}

/// Minimal log-log chart of `err_linf` against `δ` with fitted lines.
pub fn study_svg(results: &[StudyResult]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const PAD: f64 = 60.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let pts: Vec<(f64, f64)> = results
        .iter()
        .flat_map(|r| r.delta_list.iter().zip(&r.error_linf).map(|(&d, &e)| (d, e)))
        .filter(|&(d, e)| d > 0.0 && e > 0.0)
        .collect();
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
    let (x0, x1) = (
        lx.iter().cloned().fold(f64::INFINITY, f64::min).floor(),
        lx.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil(),
    );
    let (y0, y1) = (
        ly.iter().cloned().fold(f64::INFINITY, f64::min).floor(),
        ly.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil(),
    );
    let (x1, y1) = (if x1 > x0 { x1 } else { x0 + 1.0 }, if y1 > y0 { y1 } else { y0 + 1.0 });
    let px = |v: f64| PAD + (v - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = writeln!(
        s,
        "<path d=\"M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2}\" stroke=\"black\" fill=\"none\"/>",
        PAD,
        PAD,
        PAD,
        H - PAD,
        W - PAD,
        H - PAD
    );
    for e in x0 as i32..=x1 as i32 {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">1e{e}</text>",
            px(e as f64),
            H - PAD + 18.0
        );
    }
    for e in y0 as i32..=y1 as i32 {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">1e{e}</text>",
            PAD - 6.0,
            py(e as f64) + 4.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">delta</text>",
        W / 2.0,
        H - 12.0
    );
    for (k, r) in results.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        for (&d, &e) in r.delta_list.iter().zip(&r.error_linf) {
            if d > 0.0 && e > 0.0 {
                let _ = writeln!(
                    s,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\"/>",
                    px(d.log10()),
                    py(e.log10())
                );
            }
        }
        if let Some(p) = r.fitted_rate_linf {
            let n = r.delta_list.len() as f64;
            let mx = r.delta_list.iter().map(|d| d.log10()).sum::<f64>() / n;
            let my = r.error_linf.iter().map(|e| e.log10()).sum::<f64>() / n;
            let (a, b) = (
                r.delta_list.iter().cloned().fold(f64::INFINITY, f64::min).log10(),
                r.delta_list.iter().cloned().fold(f64::NEG_INFINITY, f64::max).log10(),
            );
            let _ = writeln!(
                s,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\"/>",
                px(a),
                py(my + p * (a - mx)),
                px(b),
                py(my + p * (b - mx))
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"{color}\">{} ({}) rate {}</text>",
            PAD + 10.0,
            PAD + 16.0 * (k as f64 + 1.0),
            r.method,
            r.kernel,
            fmt_opt(r.fitted_rate_linf)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::builtin_constant;

    #[test]
    fn fit_rate_examples() {
        assert!((fit_rate(&[0.1, 0.05], &[1e-2, 2.5e-3]).unwrap() - 2.0).abs() < 1e-12);
        assert!((fit_rate(&[0.1, 0.05], &[1e-2, 5e-3]).unwrap() - 1.0).abs() < 1e-12);
        let d = [0.1, 0.05, 0.025];
        let e: Vec<f64> = d.iter().map(|x: &f64| 7.0 * x.powi(3)).collect();
        assert!((fit_rate(&d, &e).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(fit_rate(&[0.1], &[1.0]), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_rate(&[0.1, 0.05], &[1.0, 0.0]), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn cases_satisfy_their_equation() {
        for name in ManufacturedCase::NAMES {
            let c = ManufacturedCase::by_name(name).unwrap();
            assert!(c.residual_check() < 1e-9, "{name}: {}", c.residual_check());
            assert_eq!(c.boundary, (0.0, 0.0));
        }
        assert!(ManufacturedCase::by_name("cubic").is_err());
    }

    #[test]
    fn single_horizon_has_no_rate() {
        let s = OperatorSpec::new(builtin_constant(), 0.1, Method::NonlocalGradient).unwrap();
        let r = run_convergence(&ManufacturedCase::quadratic(), &s, &[0.1], GridRule::Resolved, 8).unwrap();
        assert!(r.fitted_rate_linf.is_none());
        assert!(r.error_linf[0] > 0.0);
        assert!(r.error_l2[0] <= r.error_linf[0]);
    }

    #[test]
    fn zero_case_truncation_vanishes() {
        let s = OperatorSpec::new(builtin_constant(), 0.1, Method::NonlocalGradient).unwrap();
        let t = truncation_survey(&ManufacturedCase::zero(), &s, &[0.1, 0.05], GridRule::Resolved, 8).unwrap();
        for r in &t.rows {
            assert_eq!((r.interior_max, r.layer_max), (0.0, 0.0));
        }
    }

    #[test]
    fn empty_list_is_rejected() {
        assert!(matches!(
            compare_methods(&ManufacturedCase::sine(), &builtin_constant(), &[], GridRule::Resolved, 8),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn csv_has_one_row_per_delta() {
        let s = OperatorSpec::new(builtin_constant(), 0.1, Method::NonlocalGradient).unwrap();
        let r = run_convergence(&ManufacturedCase::quadratic(), &s, &[0.1, 0.05], GridRule::Resolved, 8).unwrap();
        let csv = study_csv(std::slice::from_ref(&r));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("method,kernel,delta,h,err_linf,err_l2,rate_running"));
        assert_eq!(csv, study_csv(std::slice::from_ref(&r)));
        assert!(study_svg(&[r]).contains("<circle"));
    }
}
