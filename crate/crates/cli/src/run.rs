use std::path::{Path, PathBuf};

use gmm_bridge_core::simulator::continuous_probe;
use gmm_bridge_core::{
    empirical_marginal, estimate_control_cost, estimate_path_kl, limit_check, rollout, Error,
    Mixture64, Mode, Scheme,
};
use thiserror::Error;

use crate::config::{parse_config, ConfigError, ProblemConfig};
use crate::output::{self, EstimatesFile, KlOrdering, SchemeEstimates, Staging};

pub const EXAMPLE1: &str = include_str!("../configs/example1.cfg");
pub const EXAMPLE2: &str = include_str!("../configs/example2.cfg");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{module}: {source}")]
    Solver {
        module: &'static str,
        #[source]
        source: Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for configuration problems, 3 for solver failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }
}

/// Module an error originates from, for diagnostics.
fn module_of(err: &Error) -> &'static str {
    match err {
        Error::InfeasibleBridge { .. } | Error::DegenerateBridge(_) => "gaussian_bridge",
        Error::Uncontrollable | Error::Infeasible { .. } => "covariance_steering",
        Error::BadMarginals(_) => "transport_plan",
        Error::DegenerateDensity | Error::ModeMismatch { .. } => "mixture_policy",
        Error::SchemeMismatch { .. } | Error::MissingControls => "simulator",
        _ => "matrix_kit",
    }
}

fn solver(err: Error) -> CliError {
    CliError::Solver {
        module: module_of(&err),
        source: err,
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
}

pub fn load_config(path: &Path) -> Result<ProblemConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_config(&text)?)
}

fn apply(mut cfg: ProblemConfig, o: Overrides) -> Result<ProblemConfig, CliError> {
    if let Some(seed) = o.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(paths) = o.paths {
        if paths == 0 {
            return Err(ConfigError::Validation {
                field: "--paths-override".into(),
                line: None,
                message: "must be at least 1".into(),
            }
            .into());
        }
        cfg.simulation.paths = paths;
    }
    Ok(cfg)
}

pub fn build_mixture(cfg: &ProblemConfig) -> Result<Mixture64, CliError> {
    match cfg.mode {
        Mode::Sb => Mixture64::schrodinger(cfg.initial.clone(), cfg.terminal.clone(), cfg.steps, cfg.eps, cfg.dt),
        Mode::Ds => {
            let dynamics = cfg.build_dynamics().map_err(solver)?;
            Mixture64::density_steering(cfg.initial.clone(), cfg.terminal.clone(), dynamics, &cfg.steering)
        }
    }
    .map_err(solver)
}

fn verbose() -> bool {
    std::env::var_os("GMM_BRIDGE_VERBOSE").is_some_and(|v| !v.is_empty() && v != "0")
}

fn log(msg: impl AsRef<str>) {
    if verbose() {
        eprintln!("gmm-bridge: {}", msg.as_ref());
    }
}

fn stage(staging: &mut Staging, rel: &Path, contents: &str) -> Result<(), CliError> {
    staging.write(rel, contents).map_err(|source| CliError::Io {
        path: rel.to_path_buf(),
        source,
    })
}

fn solve_into(cfg: &ProblemConfig, staging: &mut Staging, prefix: &Path) -> Result<Mixture64, CliError> {
    log(format!("solving {} pairs in {} mode", cfg.initial.len() * cfg.terminal.len(), cfg.mode.as_str()));
    let mb = build_mixture(cfg)?;
    stage(staging, &prefix.join("plan.json"), &output::plan_json(&mb))?;
    stage(staging, &prefix.join("marginals.csv"), &output::marginals_csv(&mb).map_err(solver)?)?;
    Ok(mb)
}

fn simulate_into(cfg: &ProblemConfig, staging: &mut Staging, prefix: &Path) -> Result<(), CliError> {
    let mb = solve_into(cfg, staging, prefix)?;
    let sim = &cfg.simulation;
    let steps = mb.steps();
    let mut schemes = Vec::new();
    for &scheme in &sim.schemes {
        log(format!("rolling out {} paths ({})", sim.paths, scheme.as_str()));
        let batch = rollout(&mb, scheme, sim.paths, sim.seed).map_err(solver)?;
        stage(
            staging,
            &prefix.join(output::trajectory_file(scheme)),
            &output::trajectories_csv(&batch, sim.write_paths),
        )?;
        let (path_kl, control_cost) = match mb.mode() {
            Mode::Sb => (Some(estimate_path_kl(&mb, &batch, scheme).map_err(solver)?), None),
            Mode::Ds => (None, Some(estimate_control_cost(&batch).map_err(solver)?)),
        };
        let terminal = empirical_marginal(&batch, steps, mb.terminal()).map_err(solver)?;
        schemes.push(SchemeEstimates {
            scheme,
            path_kl,
            control_cost,
            terminal_weights: terminal.histogram,
            terminal_means: terminal.component_means,
        });
    }
    let find = |s: Scheme| schemes.iter().find(|e| e.scheme == s).and_then(|e| e.path_kl);
    let kl_ordering = match (find(Scheme::PerStep), find(Scheme::Once)) {
        (Some(p), Some(r)) => {
            let se = p.combined_std_error(&r);
            Some(KlOrdering {
                per_step: p.value,
                once: r.value,
                combined_std_error: se,
                holds: p.value <= r.value + 2.0 * se,
            })
        }
        _ => None,
    };
    let analytic_cost = match mb.mode() {
        Mode::Sb => mb.sb_upper_bound(),
        Mode::Ds => mb.ds_total_cost(),
    }
    .map_err(solver)?;
    let est = EstimatesFile {
        mode: mb.mode(),
        seed: sim.seed,
        paths: sim.paths,
        analytic_cost,
        schemes,
        kl_ordering,
    };
    stage(staging, &prefix.join("estimates.json"), &output::estimates_json(&est))
}

fn limit_into(cfg: &ProblemConfig, staging: &mut Staging, prefix: &Path) -> Result<(), CliError> {
    let Some(spec) = &cfg.limit_check else {
        return Err(ConfigError::Validation {
            field: "limit_check".into(),
            line: None,
            message: "limit-check needs a [limit_check] section".into(),
        }
        .into());
    };
    if cfg.mode != Mode::Sb {
        return Err(ConfigError::Validation {
            field: "mode".into(),
            line: None,
            message: "limit-check applies to sb mode".into(),
        }
        .into());
    }
    let t_probe = spec.t_probe.unwrap_or(spec.horizon / 2.0);
    let x_probe = match &spec.x_probe {
        Some(x) => x.clone(),
        None => {
            let dt = spec.dt_list[0];
            let steps = (spec.horizon / dt).round() as usize;
            let mb = Mixture64::schrodinger(cfg.initial.clone(), cfg.terminal.clone(), steps.max(1), cfg.eps, dt)
                .map_err(solver)?;
            continuous_probe(&mb, t_probe, spec.probe_seed).map_err(solver)?
        }
    };
    log(format!("limit check at t = {t_probe}, x = {x_probe:?}"));
    let table = limit_check(
        &cfg.initial,
        &cfg.terminal,
        cfg.eps,
        spec.horizon,
        &spec.dt_list,
        &x_probe,
        t_probe,
    )
    .map_err(|e| match e {
        Error::InvalidArgument(message) => ConfigError::Validation {
            field: "limit_check".into(),
            line: None,
            message,
        }
        .into(),
        other => solver(other),
    })?;
    stage(staging, &prefix.join("limits.csv"), &output::limits_csv(&table))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Simulate,
    LimitCheck,
    Reproduce(u8),
}

/// Runs `command` and writes its artifacts under `out`, or under the
/// configured `[output] dir` when `out` is `None`. Nothing is left in the
/// output directory if any step fails.
pub fn execute(
    command: Command,
    config: Option<&Path>,
    out: Option<&Path>,
    overrides: Overrides,
) -> Result<Vec<PathBuf>, CliError> {
    let cfg = match (config, command) {
        (Some(path), _) => load_config(path)?,
        (None, Command::Reproduce(1)) => parse_config(EXAMPLE1)?,
        (None, Command::Reproduce(2)) => parse_config(EXAMPLE2)?,
        (None, _) => {
            return Err(ConfigError::Validation {
                field: "--config".into(),
                line: None,
                message: "a configuration file is required".into(),
            }
            .into())
        }
    };
    let cfg = apply(cfg, overrides)?;
    let out = match (out, &cfg.output) {
        (Some(out), _) => out.to_path_buf(),
        (None, Some(dir)) => dir.clone(),
        (None, None) => {
            return Err(ConfigError::Validation {
                field: "--out".into(),
                line: None,
                message: "no output directory given and the configuration has no [output] dir".into(),
            }
            .into())
        }
    };
    let out = out.as_path();
    let mut staging = Staging::new(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let root = Path::new("");
    match command {
        Command::Solve => {
            solve_into(&cfg, &mut staging, root)?;
        }
        Command::Simulate => simulate_into(&cfg, &mut staging, root)?,
        Command::LimitCheck => limit_into(&cfg, &mut staging, root)?,
        Command::Reproduce(1) => {
            // The same boundaries as a bridge of the random walk and as
            // steering of x_{k+1} = x_k + u_k + √ε w_k.
            for mode in [Mode::Sb, Mode::Ds] {
                let mut c = cfg.clone();
                c.mode = mode;
                simulate_into(&c, &mut staging, Path::new(mode.as_str()))?;
            }
        }
        Command::Reproduce(_) => simulate_into(&cfg, &mut staging, root)?,
    }
    staging.commit().map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })
}
