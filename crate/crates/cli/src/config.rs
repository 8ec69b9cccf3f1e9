use std::path::{Path, PathBuf};

use clap::Args;
use nlbc::bc1d::Method;
use nlbc::discrete1d::{GridRule, DEFAULT_COUPLED_M};
use serde::{Deserialize, Serialize};

pub const DEFAULT_DELTAS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

/// Fully resolved run configuration. Field order is the canonical JSON order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub kernel: String,
    pub methods: Vec<Method>,
    pub deltas: Vec<f64>,
    pub grid_rule: GridRule,
    pub m: usize,
    pub case: String,
    pub out: PathBuf,
    pub dump_matrix: Option<PathBuf>,
    /// Acceptance window for fitted rates; `None` uses per-method defaults.
    pub window: Option<[f64; 2]>,
    /// Grid cells for `certify`, or samples for `check-kernel`.
    pub n: Option<usize>,
    pub trials: usize,
    pub seed: u64,
}

/// File form: every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    command: Option<String>,
    kernel: Option<String>,
    methods: Option<Vec<Method>>,
    deltas: Option<Vec<f64>>,
    grid_rule: Option<GridRule>,
    m: Option<usize>,
    case: Option<String>,
    out: Option<PathBuf>,
    dump_matrix: Option<PathBuf>,
    window: Option<[f64; 2]>,
    n: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
}

/// Flags shared by every subcommand.
#[derive(Debug, Default, Clone, Args)]
pub struct Common {
    /// `constant`, `linear` or a path to a `.kern` table.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Horizon list, comma separated.
    #[arg(long, visible_alias = "deltas", value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    /// `nonlocal_gradient`, `constant_extension`, `morris`, `zhang_shi`.
    #[arg(long, visible_alias = "methods", value_delimiter = ',')]
    pub method: Option<Vec<Method>>,
    #[arg(long)]
    pub grid_rule: Option<GridRule>,
    /// Nodes per horizon for the coupled grid rule.
    #[arg(long)]
    pub m: Option<usize>,
    /// Manufactured solution.
    #[arg(long)]
    pub case: Option<String>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the first assembled matrix in MatrixMarket format.
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
    /// Rate window `LO,HI`.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<[f64; 2]>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Random right-hand sides for the comparison-principle trials.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON configuration file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as canonical JSON and exit.
    #[arg(long)]
    pub print_config: bool,
}

fn parse_window(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected LO,HI, got `{s}`"));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo <= hi) {
        return Err(format!("window lower bound {lo} exceeds upper bound {hi}"));
    }
    Ok([lo, hi])
}

fn default_methods(command: &str) -> Vec<Method> {
    match command {
        "compare" => Method::ALL.to_vec(),
        _ => vec![Method::NonlocalGradient],
    }
}

fn default_deltas(command: &str) -> Vec<f64> {
    match command {
        "check-kernel" | "certify" => vec![0.1],
        _ => DEFAULT_DELTAS.to_vec(),
    }
}

fn default_case(command: &str) -> &'static str {
    match command {
        "truncation" => "sine",
        _ => "quadratic",
    }
}

impl RunConfig {
    /// Defaults, then the optional file, then the flags.
    pub fn resolve(command: &str, flags: &Common) -> Result<Self, String> {
        let file = match &flags.config {
            Some(p) => read_partial(p)?,
            None => PartialConfig::default(),
        };
        if let Some(c) = &file.command {
            if c != command {
                return Err(format!("config file is for `{c}`, not `{command}`"));
            }
        }
        let cfg = RunConfig {
            command: command.to_string(),
            kernel: flags.kernel.clone().or(file.kernel).unwrap_or_else(|| "constant".into()),
            methods: flags
                .method
                .clone()
                .or(file.methods)
                .unwrap_or_else(|| default_methods(command)),
            deltas: flags
                .delta
                .clone()
                .or(file.deltas)
                .unwrap_or_else(|| default_deltas(command)),
            grid_rule: flags.grid_rule.or(file.grid_rule).unwrap_or(GridRule::Resolved),
            m: flags.m.or(file.m).unwrap_or(DEFAULT_COUPLED_M),
            case: flags
                .case
                .clone()
                .or(file.case)
                .unwrap_or_else(|| default_case(command).into()),
            out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("nlbc-out")),
            dump_matrix: flags.dump_matrix.clone().or(file.dump_matrix),
            window: flags.window.or(file.window),
            n: flags.n.or(file.n),
            trials: flags.trials.or(file.trials).unwrap_or(100),
            seed: flags.seed.or(file.seed).unwrap_or(2024),
        };
        if cfg.methods.is_empty() {
            return Err("empty method list".into());
        }
        if cfg.deltas.is_empty() {
            return Err("empty horizon list".into());
        }
        Ok(cfg)
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    #[cfg(test)]
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    /// Fitted-rate window for `method`: the flag if given, otherwise the
    /// theoretical order ± 0.3. Zhang–Shi has none.
    pub fn window_for(&self, method: Method) -> Option<[f64; 2]> {
        if let Some(w) = self.window {
            return Some(w);
        }
        match method {
            Method::NonlocalGradient | Method::Morris => Some([1.7, 2.3]),
            Method::ConstantExtension => Some([0.7, 1.3]),
            Method::ZhangShi => None,
        }
    }
}

fn read_partial(path: &Path) -> Result<PartialConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}
