//! `nlbc` command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a scientific check fails,
//! 2 on operational errors (bad input, I/O, singular systems).

mod config;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlbc::bc1d::{check_assumptions, Method, OperatorSpec};
use nlbc::discrete1d::{
    assemble, certify_inverse_positivity, comparison_matrix, comparison_principle_trials, stability_survey,
    write_matrix_market, Grid1D,
};
use nlbc::disk2d::{case2d_csv, case2d_rows};
use nlbc::kernel::{builtin_constant, builtin_linear, normalize, KernelProfile};
use nlbc::study::{
    compare_methods, fit_rate, run_convergence, study_csv, study_svg, truncation_csv, truncation_survey,
    ManufacturedCase,
};
use serde::Serialize;
use serde_json::json;

use config::{Common, RunConfig};

#[derive(Parser)]
#[command(name = "nlbc", version = nlbc::VERSION, about = "Nonlocal Dirichlet boundary treatments: checks and studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel admissibility and the structural assumptions at each horizon.
    CheckKernel(Common),
    /// Inverse positivity, comparison-principle trials and stability constants.
    Certify(Common),
    /// Manufactured-solution convergence study.
    Convergence(Common),
    /// Continuum truncation-error survey.
    Truncation(Common),
    /// All four treatments side by side.
    Compare(Common),
    /// Morris truncation in the punctured-disk case study.
    Case2d(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::CheckKernel(c) => ("check-kernel", c),
            Command::Certify(c) => ("certify", c),
            Command::Convergence(c) => ("convergence", c),
            Command::Truncation(c) => ("truncation", c),
            Command::Compare(c) => ("compare", c),
            Command::Case2d(c) => ("case2d", c),
        }
    }
}

/// `Ok(true)` pass, `Ok(false)` scientific failure, `Err` operational.
type Outcome = Result<bool, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags) = cli.command.parts();
    let cfg = match RunConfig::resolve(name, flags) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if flags.print_config {
        println!("{}", cfg.canonical_json());
        return ExitCode::SUCCESS;
    }
    let outcome = match name {
        "check-kernel" => cmd_check_kernel(&cfg),
        "certify" => cmd_certify(&cfg),
        "convergence" => cmd_convergence(&cfg),
        "truncation" => cmd_truncation(&cfg),
        "compare" => cmd_compare(&cfg),
        _ => cmd_case2d(&cfg),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            println!("result: FAIL");
            ExitCode::from(1)
        }
        Err(e) => fail(&e),
    }
}

fn fail(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn op<T>(r: nlbc::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn load_kernel(spec: &str) -> nlbc::Result<KernelProfile> {
    match spec {
        "constant" => Ok(builtin_constant()),
        "linear" => Ok(builtin_linear()),
        path => normalize(&KernelProfile::load(Path::new(path))?),
    }
}

fn grid_for(cfg: &RunConfig, delta: f64) -> nlbc::Result<Grid1D> {
    match cfg.n {
        Some(n) => Grid1D::new(n, (delta * n as f64).round().max(2.0) as usize),
        None => Grid1D::for_delta(delta, cfg.grid_rule, cfg.m),
    }
}

fn header(cfg: &RunConfig) -> String {
    let compact = serde_json::to_string(cfg).expect("config serializes");
    format!("# nlbc {}\n# config {compact}\n", nlbc::VERSION)
}

fn write(cfg: &RunConfig, name: &str, body: &str) -> Result<(), String> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| format!("{}: {e}", cfg.out.display()))?;
    let path = cfg.out.join(name);
    std::fs::write(&path, body).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_csv(cfg: &RunConfig, name: &str, body: &str) -> Result<(), String> {
    write(cfg, name, &format!("{}{body}", header(cfg)))
}

fn write_json<T: Serialize>(cfg: &RunConfig, name: &str, result: &T) -> Result<(), String> {
    let doc = json!({
        "tool": "nlbc",
        "version": nlbc::VERSION,
        "config": cfg,
        "result": result,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
    write(cfg, name, &(text + "\n"))
}

fn dump_matrix(cfg: &RunConfig, spec: &OperatorSpec, grid: &Grid1D) -> Result<(), String> {
    if let Some(path) = &cfg.dump_matrix {
        let sys = op(assemble(spec, grid))?;
        op(write_matrix_market(&sys, path))?;
        println!("matrix written to {}", path.display());
    }
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn cmd_check_kernel(cfg: &RunConfig) -> Outcome {
    let kernel = op(load_kernel(&cfg.kernel))?;
    let n = cfg.n.unwrap_or(200);
    let adm = kernel.check_admissible(1000);
    println!(
        "kernel {}: nonincreasing={} positive={} moment_error={:.2e}",
        kernel.name(),
        adm.nonincreasing,
        adm.positive_interior,
        adm.moment_error
    );
    let mut pass = adm.holds;
    let mut reports = Vec::new();
    println!("{:>10} {:>5} {:>5} {:>5} {:>5}", "delta", "A1", "A2", "A2s", "A3");
    for &d in &cfg.deltas {
        let spec = op(OperatorSpec::new(kernel.clone(), d, cfg.methods[0]))?;
        let r = op(check_assumptions(&spec, n))?;
        println!(
            "{d:>10} {:>5} {:>5} {:>5} {:>5}",
            verdict(r.a1),
            verdict(r.a2),
            verdict(r.a2s),
            verdict(r.a3)
        );
        for m in r.margins.iter().filter(|m| m.min < -1e-9) {
            println!("  {} violated: margin {:.3e} at x = {}", m.assumption, m.min, m.at);
        }
        pass &= r.all_hold();
        reports.push(json!({ "delta": d, "report": r }));
    }
    write_json(cfg, "check_kernel.json", &json!({ "admissibility": adm, "assumptions": reports }))?;
    Ok(pass)
}

fn cmd_certify(cfg: &RunConfig) -> Outcome {
    let kernel = op(load_kernel(&cfg.kernel))?;
    let method = cfg.methods[0];
    let mut pass = true;
    let mut rows = Vec::new();
    for (k, &d) in cfg.deltas.iter().enumerate() {
        let spec = op(OperatorSpec::new(kernel.clone(), d, method))?;
        let grid = op(grid_for(cfg, d))?;
        if k == 0 {
            dump_matrix(cfg, &spec, &grid)?;
        }
        let p = op(comparison_matrix(&op(assemble(&spec, &grid))?))?;
        let inv = op(certify_inverse_positivity(&p))?;
        let trials = op(comparison_principle_trials(&p, cfg.trials, cfg.seed))?;
        println!(
            "delta {d}: n_cells={} inverse_nonneg={} min_entry={:.3e} trials={} min_solution={:.3e} sign_flips={}",
            grid.n_cells, inv.is_inverse_nonneg, inv.min_entry, trials.trials, trials.min_value, p.sign_flips
        );
        pass &= inv.is_inverse_nonneg && trials.all_nonneg;
        rows.push(json!({
            "delta": d,
            "n_cells": grid.n_cells,
            "sign_flips": p.sign_flips,
            "inverse": inv,
            "trials": trials,
        }));
    }
    let stability = if cfg.deltas.len() >= 2 && cfg.n.is_none() {
        let template = op(OperatorSpec::new(kernel, cfg.deltas[0], method))?;
        let s = op(stability_survey(&template, &cfg.deltas, cfg.grid_rule, cfg.m))?;
        for r in &s.rows {
            println!("delta {}: sigma_min={:.4} sym_eig_min={:.4}", r.delta, r.sigma_min, r.sym_eig_min);
        }
        println!("stability uniform: {}", s.uniform());
        pass &= s.uniform();
        Some(s)
    } else {
        None
    };
    write_json(cfg, "certify.json", &json!({ "rows": rows, "stability": stability }))?;
    Ok(pass)
}

fn check_rate(cfg: &RunConfig, method: Method, rate: Option<f64>) -> bool {
    match (cfg.window_for(method), rate) {
        (Some([lo, hi]), Some(p)) => p >= lo && p <= hi,
        _ => true,
    }
}

fn fmt_rate(rate: Option<f64>) -> String {
    rate.map(|p| format!("{p:.3}")).unwrap_or_else(|| "n/a".into())
}

fn cmd_convergence(cfg: &RunConfig) -> Outcome {
    let kernel = op(load_kernel(&cfg.kernel))?;
    let case = op(ManufacturedCase::by_name(&cfg.case))?;
    let mut results = Vec::new();
    let mut pass = true;
    for (k, &method) in cfg.methods.iter().enumerate() {
        let template = op(OperatorSpec::new(kernel.clone(), cfg.deltas[0], method))?;
        if k == 0 {
            let spec = op(template.clone().with_boundary_data(case.boundary.0, case.boundary.1))?;
            dump_matrix(cfg, &spec, &op(Grid1D::for_delta(cfg.deltas[0], cfg.grid_rule, cfg.m))?)?;
        }
        let r = op(run_convergence(&case, &template, &cfg.deltas, cfg.grid_rule, cfg.m))?;
        let ok = check_rate(cfg, method, r.fitted_rate_linf);
        println!(
            "{method}: rate_linf={} rate_l2={} window={:?} {}",
            fmt_rate(r.fitted_rate_linf),
            fmt_rate(r.fitted_rate_l2),
            cfg.window_for(method),
            verdict(ok)
        );
        pass &= ok;
        results.push(r);
    }
    write_csv(cfg, "study.csv", &study_csv(&results))?;
    write_json(cfg, "study.json", &results)?;
    write(cfg, "study.svg", &study_svg(&results))?;
    Ok(pass)
}

fn cmd_truncation(cfg: &RunConfig) -> Outcome {
    let kernel = op(load_kernel(&cfg.kernel))?;
    let case = op(ManufacturedCase::by_name(&cfg.case))?;
    let mut surveys = Vec::new();
    let mut pass = true;
    for &method in &cfg.methods {
        let template = op(OperatorSpec::new(kernel.clone(), cfg.deltas[0], method))?;
        let s = op(truncation_survey(&case, &template, &cfg.deltas, cfg.grid_rule, cfg.m))?;
        // polynomial cases are reproduced exactly away from the layers
        let ok = if case.smoothness == "polynomial" {
            s.rows.iter().all(|r| r.interior_max <= 1e-9)
        } else {
            s.interior_slope.is_none_or(|p| p >= 1.9)
        };
        for r in &s.rows {
            println!(
                "{method} delta {}: interior={:.3e} layer={:.3e} layer_ratio={:.3e}",
                r.delta, r.interior_max, r.layer_max, r.layer_ratio_max
            );
        }
        println!("{method}: interior slope {} {}", fmt_rate(s.interior_slope), verdict(ok));
        pass &= ok;
        surveys.push(s);
    }
    write_csv(cfg, "truncation.csv", &truncation_csv(&surveys))?;
    write_json(cfg, "truncation.json", &surveys)?;
    Ok(pass)
}

fn cmd_compare(cfg: &RunConfig) -> Outcome {
    let kernel = op(load_kernel(&cfg.kernel))?;
    let case = op(ManufacturedCase::by_name(&cfg.case))?;
    let cmp = op(compare_methods(&case, &kernel, &cfg.deltas, cfg.grid_rule, cfg.m))?;
    let mut pass = true;
    let mut results = Vec::new();
    for o in cmp.outcomes.iter().filter(|o| cfg.methods.contains(&o.method)) {
        let rate = o.result.as_ref().and_then(|r| r.fitted_rate_linf);
        let ok = match &o.result {
            Some(_) => check_rate(cfg, o.method, rate),
            None => o.method == Method::ZhangShi,
        };
        println!(
            "{:<20} rate_linf={:<8} interior_truncation_slope={:<8} {}{}",
            o.method.as_str(),
            fmt_rate(rate),
            fmt_rate(o.interior_truncation_slope),
            verdict(ok),
            o.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default()
        );
        pass &= ok;
        results.extend(o.result.clone());
    }
    let order: Vec<String> = cmp.ordering.iter().map(|(m, p)| format!("{m} ({p:.2})")).collect();
    println!("ordering: {}", order.join(" < "));
    write_csv(cfg, "study.csv", &study_csv(&results))?;
    write_json(cfg, "compare.json", &cmp)?;
    write(cfg, "study.svg", &study_svg(&results))?;
    Ok(pass)
}

fn cmd_case2d(cfg: &RunConfig) -> Outcome {
    let rows = op(case2d_rows(&cfg.deltas))?;
    let mut pass = true;
    for r in &rows {
        let rel = if r.paren_closed_form > 0.0 {
            (r.paren_integral - r.paren_closed_form).abs() / r.paren_closed_form
        } else {
            r.paren_integral.abs()
        };
        println!(
            "delta {}: lens_area={:.6e} paren={:.6e} closed_form_rel={:.1e} T={:.6e}",
            r.delta, r.lens_area, r.paren_integral, rel, r.morris_t_estimate
        );
        pass &= rel <= 1e-9;
    }
    if rows.len() >= 2 {
        let t: Vec<f64> = rows.iter().map(|r| r.morris_t_estimate).collect();
        let slope = op(fit_rate(&cfg.deltas, &t))?;
        let ok = (slope + 1.0).abs() <= 0.15;
        println!("Morris truncation slope {slope:.3} (expected -1) {}", verdict(ok));
        pass &= ok;
    }
    write_csv(cfg, "case2d.csv", &case2d_csv(&rows))?;
    write_json(cfg, "case2d.json", &rows)?;
    Ok(pass)
}
