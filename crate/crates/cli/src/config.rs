//! Line-oriented problem configuration.
//!
//! ```text
//! # comment
//! mode = sb            # sb | ds
//! steps = 10
//! dt = 1
//! eps = 0.1/10
//!
//! [dynamics]           # random-walk | double-integrator | explicit
//! kind = random-walk
//!
//! [initial.component]  # repeated once per component
//! weight = 1
//! mean = 0, 0
//! var = 0.1            # or: cov = 0.1 0; 0 0.1
//!
//! [terminal.ring]      # `count` components on a circle
//! count = 8
//! radius = 5
//! var = 0.1
//!
//! [simulation]
//! paths = 20000
//! seed = 1
//! ```
//!
//! Numbers accept fractions (`1/3`); vectors are comma or space separated;
//! matrix rows are separated by `;`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

use gmm_bridge_core::{
    Dynamics64, Gaussian64, Gmm64, Mat64, Mode, Scheme, SteeringOptions, SymMat64,
};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid {field}{}: {message}", .line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Validation {
        field: String,
        line: Option<usize>,
        message: String,
    },
}

fn invalid(field: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.into(),
        line,
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DynamicsSpec {
    /// `A = B = I`, `D = noise_std·I`.
    RandomWalk { noise_std: f64 },
    /// Positions then velocities, `D = noise_std·I`.
    DoubleIntegrator { axes: usize, noise_std: f64 },
    /// Time-invariant `A`, `B`, `D`.
    Explicit { a: Mat64, b: Mat64, d: Mat64 },
}

impl DynamicsSpec {
    pub fn build(&self, dim: usize, steps: usize, dt: f64) -> gmm_bridge_core::Result<Dynamics64> {
        match self {
            DynamicsSpec::RandomWalk { noise_std } => Dynamics64::random_walk(dim, steps, *noise_std),
            DynamicsSpec::DoubleIntegrator { axes, noise_std } => {
                Dynamics64::double_integrator(*axes, steps, dt, *noise_std)
            }
            DynamicsSpec::Explicit { a, b, d } => {
                Dynamics64::time_invariant(a.clone(), b.clone(), d.clone(), steps)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSpec {
    pub paths: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    /// Number of paths written to the trajectory files.
    pub write_paths: usize,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            paths: 2000,
            seed: 0,
            schemes: vec![Scheme::PerStep, Scheme::Once],
            write_paths: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitSpec {
    pub horizon: f64,
    pub dt_list: Vec<f64>,
    /// Defaults to `horizon / 2`.
    pub t_probe: Option<f64>,
    /// Defaults to one draw from the continuous marginal at `t_probe`.
    pub x_probe: Option<Vec<f64>>,
    pub probe_seed: u64,
}

#[derive(Clone, Debug)]
pub struct ProblemConfig {
    pub mode: Mode,
    pub steps: usize,
    pub dt: f64,
    pub eps: f64,
    pub dynamics: DynamicsSpec,
    pub initial: Gmm64,
    pub terminal: Gmm64,
    pub simulation: SimulationSpec,
    pub limit_check: Option<LimitSpec>,
    pub steering: SteeringOptions<f64>,
    pub output: Option<PathBuf>,
}

impl ProblemConfig {
    pub fn dim(&self) -> usize {
        self.initial.dim()
    }

    pub fn build_dynamics(&self) -> gmm_bridge_core::Result<Dynamics64> {
        self.dynamics.build(self.dim(), self.steps, self.dt)
    }
}

struct Entry {
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

const SECTIONS: &[&str] = &[
    "dynamics",
    "initial.component",
    "terminal.component",
    "initial.ring",
    "terminal.ring",
    "simulation",
    "limit_check",
    "steering",
    "output",
];

fn tokenize(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections = vec![Section {
        name: String::new(),
        line: 0,
        entries: BTreeMap::new(),
    }];
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Parse {
                    line,
                    message: "unterminated section header".into(),
                })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("unknown section [{name}]"),
                });
            }
            let repeatable = name.ends_with(".component") || name.ends_with(".ring");
            if !repeatable && sections.iter().any(|s| s.name == name) {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("section [{name}] appears twice"),
                });
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError::Parse {
                line,
                message: format!("invalid key `{key}`"),
            });
        }
        let section = sections.last_mut().expect("root section");
        if section.entries.contains_key(key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        section.entries.insert(
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                line,
            },
        );
    }
    Ok(sections)
}

/// Parses a number, allowing a single fraction `p/q`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((p, q)) => p.trim().parse::<f64>().ok()? / q.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

fn parse_vector(s: &str) -> Option<Vec<f64>> {
    let v: Option<Vec<f64>> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(parse_number)
        .collect();
    v.filter(|v| !v.is_empty())
}

fn parse_matrix(s: &str) -> Option<Mat64> {
    let rows: Option<Vec<Vec<f64>>> = s.split(';').map(parse_vector).collect();
    Mat64::from_rows(&rows?).ok()
}

/// Keys of one section, consumed as they are read; leftovers are errors.
struct Fields {
    section: String,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Fields {
    fn new(section: Section) -> Self {
        Self {
            section: section.name,
            line: section.line,
            entries: section.entries,
        }
    }

    fn field(&self, key: &str) -> String {
        if self.section.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.section)
        }
    }

    fn take<V>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Option<V>) -> Result<Option<(V, usize)>, ConfigError> {
        let Some(entry) = self.entries.remove(key) else {
            return Ok(None);
        };
        match parse(&entry.value) {
            Some(v) => Ok(Some((v, entry.line))),
            None => Err(ConfigError::Parse {
                line: entry.line,
                message: format!("`{}` must be {what}, found `{}`", self.field(key), entry.value),
            }),
        }
    }

    fn required<V>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Option<V>) -> Result<(V, usize), ConfigError> {
        self.take(key, what, parse)?.ok_or_else(|| {
            invalid(
                self.field(key),
                (self.line > 0).then_some(self.line),
                "missing required key",
            )
        })
    }

    fn number(&mut self, key: &str) -> Result<Option<(f64, usize)>, ConfigError> {
        self.take(key, "a number", parse_number)
    }

    fn positive(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.number(key)? {
            Some((v, _)) if v > 0.0 => Ok(Some(v)),
            Some((_, line)) => Err(invalid(self.field(key), Some(line), "must be positive")),
            None => Ok(None),
        }
    }

    fn count(&mut self, key: &str) -> Result<Option<(usize, usize)>, ConfigError> {
        self.take(key, "a non-negative integer", |s| s.trim().parse::<usize>().ok())
    }

    fn string(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key).map(|e| (e.value, e.line))
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some((key, entry)) = self.entries.into_iter().next() {
            let field = if self.section.is_empty() {
                key
            } else {
                format!("{}.{key}", self.section)
            };
            return Err(invalid(field, Some(entry.line), "unknown key"));
        }
        Ok(())
    }
}

struct ComponentDraft {
    weight: f64,
    component: Gaussian64,
    line: usize,
}

fn covariance(fields: &mut Fields, dim: usize) -> Result<SymMat64, ConfigError> {
    let var = fields.number("var")?;
    let cov = fields.take("cov", "a matrix (rows separated by `;`)", parse_matrix)?;
    match (var, cov) {
        (Some(_), Some((_, line))) => Err(invalid(fields.field("cov"), Some(line), "give either `var` or `cov`, not both")),
        (Some((v, _)), None) => Ok(SymMat64::scaled_identity(dim, v)),
        (None, Some((m, line))) => {
            if m.rows() != dim || m.cols() != dim {
                return Err(invalid(
                    fields.field("cov"),
                    Some(line),
                    format!("expected {dim}x{dim}, found {}x{}", m.rows(), m.cols()),
                ));
            }
            let sym = SymMat64::new(m.clone());
            if (&m - sym.as_matrix()).max_abs() > 1e-12 * m.max_abs().max(1.0) {
                return Err(invalid(fields.field("cov"), Some(line), "covariance must be symmetric"));
            }
            Ok(sym)
        }
        (None, None) => Err(invalid(fields.field("var"), Some(fields.line), "missing `var` or `cov`")),
    }
}

fn component_block(mut fields: Fields) -> Result<Vec<ComponentDraft>, ConfigError> {
    let line = fields.line;
    let (weight, wline) = fields.required("weight", "a number", parse_number)?;
    if !(weight > 0.0) {
        return Err(invalid(fields.field("weight"), Some(wline), "must be positive"));
    }
    let (mean, _) = fields.required("mean", "a vector", parse_vector)?;
    let cov = covariance(&mut fields, mean.len())?;
    let component = Gaussian64::new(mean, cov)
        .map_err(|e| invalid(fields.section.clone(), Some(line), e.to_string()))?;
    fields.finish()?;
    Ok(vec![ComponentDraft {
        weight,
        component,
        line,
    }])
}

fn ring_block(mut fields: Fields) -> Result<Vec<ComponentDraft>, ConfigError> {
    let line = fields.line;
    let (count, cline) = fields.required("count", "a positive integer", |s| s.trim().parse::<usize>().ok())?;
    if count == 0 {
        return Err(invalid(fields.field("count"), Some(cline), "must be at least 1"));
    }
    let (radius, _) = fields.required("radius", "a number", parse_number)?;
    let center = fields
        .take("center", "a vector", parse_vector)?
        .map(|(v, _)| v)
        .unwrap_or_else(|| vec![0.0, 0.0]);
    if center.len() < 2 {
        return Err(invalid(fields.field("center"), Some(line), "a ring needs at least two dimensions"));
    }
    let weight = fields.number("weight")?.map_or(1.0, |(w, _)| w);
    if !(weight > 0.0) {
        return Err(invalid(fields.field("weight"), Some(line), "must be positive"));
    }
    // `full` spreads the components over the circle; `printed` uses
    // θ_j = jπ/count, which covers only half of it.
    let step = match fields.string("angles") {
        None => TAU / count as f64,
        Some((s, _)) if s == "full" => TAU / count as f64,
        Some((s, _)) if s == "printed" => PI / count as f64,
        Some((s, l)) => {
            return Err(invalid(
                fields.field("angles"),
                Some(l),
                format!("expected `full` or `printed`, found `{s}`"),
            ))
        }
    };
    let cov = covariance(&mut fields, center.len())?;
    fields.finish()?;
    (0..count)
        .map(|j| {
            let theta = step * j as f64;
            let mut mean = center.clone();
            mean[0] += radius * theta.cos();
            mean[1] += radius * theta.sin();
            let component = Gaussian64::new(mean, cov.clone())
                .map_err(|e| invalid("ring", Some(line), e.to_string()))?;
            Ok(ComponentDraft {
                weight: weight / count as f64,
                component,
                line,
            })
        })
        .collect()
}

fn mixture(name: &str, drafts: Vec<ComponentDraft>) -> Result<Gmm64, ConfigError> {
    let Some(first) = drafts.first() else {
        return Err(invalid(name, None, "at least one component block is required"));
    };
    let line = first.line;
    let dim = first.component.dim();
    if let Some(bad) = drafts.iter().find(|d| d.component.dim() != dim) {
        return Err(invalid(
            name,
            Some(bad.line),
            format!("component has dimension {}, expected {dim}", bad.component.dim()),
        ));
    }
    let weights: Vec<f64> = drafts.iter().map(|d| d.weight).collect();
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(invalid(name, Some(line), format!("mixture weights sum to {sum}, expected 1")));
    }
    // Absorb representation error of fractions like 1/3 into the simplex.
    let weights = weights.into_iter().map(|w| w / sum).collect();
    Gmm64::new(weights, drafts.into_iter().map(|d| d.component).collect())
        .map_err(|e| invalid(name, Some(line), e.to_string()))
}

pub fn parse_config(text: &str) -> Result<ProblemConfig, ConfigError> {
    let mut sections = tokenize(text)?.into_iter();
    let mut root = Fields::new(sections.next().expect("root section"));

    let mode = match root.string("mode") {
        Some((s, _)) if s == "sb" => Mode::Sb,
        Some((s, _)) if s == "ds" => Mode::Ds,
        Some((s, l)) => return Err(invalid("mode", Some(l), format!("expected `sb` or `ds`, found `{s}`"))),
        None => return Err(invalid("mode", None, "missing required key")),
    };
    let (steps, sline) = root.required("steps", "a positive integer", |s| s.trim().parse::<usize>().ok())?;
    if steps == 0 {
        return Err(invalid("steps", Some(sline), "must be at least 1"));
    }
    let dt = root.positive("dt")?.ok_or_else(|| invalid("dt", None, "missing required key"))?;
    let eps = root.positive("eps")?.ok_or_else(|| invalid("eps", None, "missing required key"))?;
    root.finish()?;

    let mut dynamics_fields = None;
    let mut initial = Vec::new();
    let mut terminal = Vec::new();
    let mut simulation = SimulationSpec::default();
    let mut limit_check = None;
    let mut steering = SteeringOptions::default();
    let mut output = None;

    for section in sections {
        let fields = Fields::new(section);
        match fields.section.as_str() {
            "dynamics" => dynamics_fields = Some(fields),
            "initial.component" => initial.extend(component_block(fields)?),
            "terminal.component" => terminal.extend(component_block(fields)?),
            "initial.ring" => initial.extend(ring_block(fields)?),
            "terminal.ring" => terminal.extend(ring_block(fields)?),
            "simulation" => simulation = simulation_block(fields)?,
            "limit_check" => limit_check = Some(limit_block(fields, steps as f64 * dt)?),
            "steering" => steering = steering_block(fields)?,
            "output" => {
                let mut fields = fields;
                output = fields.string("dir").map(|(s, _)| PathBuf::from(s));
                fields.finish()?;
            }
            _ => unreachable!("section names are checked by the tokenizer"),
        }
    }

    let initial = mixture("initial", initial)?;
    let terminal = mixture("terminal", terminal)?;
    if initial.dim() != terminal.dim() {
        return Err(invalid(
            "terminal",
            None,
            format!("dimension {} differs from the initial dimension {}", terminal.dim(), initial.dim()),
        ));
    }
    let dim = initial.dim();
    let dynamics = dynamics_block(dynamics_fields, dim, eps, dt, mode)?;
    if let Some(limit) = &limit_check {
        if let Some(x) = &limit.x_probe {
            if x.len() != dim {
                return Err(invalid("limit_check.x_probe", None, format!("expected {dim} entries")));
            }
        }
    }

    Ok(ProblemConfig {
        mode,
        steps,
        dt,
        eps,
        dynamics,
        initial,
        terminal,
        simulation,
        limit_check,
        steering,
        output,
    })
}

fn dynamics_block(fields: Option<Fields>, dim: usize, eps: f64, dt: f64, mode: Mode) -> Result<DynamicsSpec, ConfigError> {
    let reference_std = (eps * dt).sqrt();
    let Some(mut fields) = fields else {
        return Ok(DynamicsSpec::RandomWalk {
            noise_std: reference_std,
        });
    };
    let line = Some(fields.line);
    let kind = fields.string("kind").map_or("random-walk".to_string(), |(s, _)| s);
    let noise_std = fields.number("noise_std")?;
    let spec = match kind.as_str() {
        "random-walk" => DynamicsSpec::RandomWalk {
            noise_std: noise_std.map_or(reference_std, |(v, _)| v),
        },
        "double-integrator" => {
            let (axes, aline) = fields
                .count("axes")?
                .unwrap_or((dim / 2, fields.line));
            if 2 * axes != dim || axes == 0 {
                return Err(invalid(
                    "dynamics.axes",
                    Some(aline),
                    format!("{axes} axes give a {}-dimensional state, components are {dim}-dimensional", 2 * axes),
                ));
            }
            DynamicsSpec::DoubleIntegrator {
                axes,
                noise_std: noise_std.map_or(reference_std, |(v, _)| v),
            }
        }
        "explicit" => {
            if let Some((_, l)) = noise_std {
                return Err(invalid("dynamics.noise_std", Some(l), "explicit dynamics take `d` instead"));
            }
            let (a, _) = fields.required("a", "a matrix", parse_matrix)?;
            let (b, _) = fields.required("b", "a matrix", parse_matrix)?;
            let (d, _) = fields.required("d", "a matrix", parse_matrix)?;
            if a.rows() != dim || a.cols() != dim || b.rows() != dim || d.rows() != dim {
                return Err(invalid("dynamics", line, format!("A, B and D need {dim} rows and A must be square")));
            }
            DynamicsSpec::Explicit { a, b, d }
        }
        other => {
            return Err(invalid(
                "dynamics.kind",
                line,
                format!("expected random-walk, double-integrator or explicit, found `{other}`"),
            ))
        }
    };
    fields.finish()?;

    if mode == Mode::Sb {
        // The bridge reference is the walk x_{k+1} = x_k + √(ε·Δt) w_k.
        let ok = match &spec {
            DynamicsSpec::RandomWalk { noise_std } => {
                (noise_std - reference_std).abs() <= 1e-12 * reference_std.max(1.0)
            }
            DynamicsSpec::Explicit { a, d, .. } => {
                *a == Mat64::identity(dim) && (d - &Mat64::scaled_identity(dim, reference_std)).max_abs() <= 1e-12
            }
            DynamicsSpec::DoubleIntegrator { .. } => false,
        };
        if !ok {
            return Err(invalid(
                "dynamics",
                line,
                "sb mode requires identity drift and reference noise sqrt(eps*dt)*I",
            ));
        }
    }
    Ok(spec)
}

fn simulation_block(mut fields: Fields) -> Result<SimulationSpec, ConfigError> {
    let mut spec = SimulationSpec::default();
    if let Some((paths, line)) = fields.count("paths")? {
        if paths == 0 {
            return Err(invalid("simulation.paths", Some(line), "must be at least 1"));
        }
        spec.paths = paths;
    }
    if let Some((seed, _)) = fields.take("seed", "an unsigned 64-bit integer", |s| s.trim().parse::<u64>().ok())? {
        spec.seed = seed;
    }
    if let Some((s, line)) = fields.string("schemes") {
        let mut schemes = Vec::new();
        for token in s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let scheme = match token {
                "per-step" => Scheme::PerStep,
                "once" => Scheme::Once,
                other => {
                    return Err(invalid(
                        "simulation.schemes",
                        Some(line),
                        format!("expected per-step or once, found `{other}`"),
                    ))
                }
            };
            if !schemes.contains(&scheme) {
                schemes.push(scheme);
            }
        }
        if schemes.is_empty() {
            return Err(invalid("simulation.schemes", Some(line), "no scheme given"));
        }
        spec.schemes = schemes;
    }
    if let Some((w, _)) = fields.count("write_paths")? {
        spec.write_paths = w;
    }
    fields.finish()?;
    Ok(spec)
}

fn limit_block(mut fields: Fields, default_horizon: f64) -> Result<LimitSpec, ConfigError> {
    let horizon = fields.positive("horizon")?.unwrap_or(default_horizon);
    let (dt_list, dline) = fields.required("dt_list", "a list of numbers", parse_vector)?;
    if dt_list.iter().any(|&d| !(d > 0.0)) || dt_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("limit_check.dt_list", Some(dline), "must be positive and strictly decreasing"));
    }
    let t_probe = match fields.number("t_probe")? {
        Some((t, _)) if (0.0..horizon).contains(&t) => Some(t),
        Some((_, l)) => return Err(invalid("limit_check.t_probe", Some(l), "must lie in [0, horizon)")),
        None => None,
    };
    let x_probe = match fields.string("x_probe") {
        None => None,
        Some((s, _)) if s == "auto" => None,
        Some((s, l)) => Some(parse_vector(&s).ok_or_else(|| ConfigError::Parse {
            line: l,
            message: format!("`limit_check.x_probe` must be `auto` or a vector, found `{s}`"),
        })?),
    };
    let probe_seed = fields
        .take("probe_seed", "an unsigned 64-bit integer", |s| s.trim().parse::<u64>().ok())?
        .map_or(0, |(v, _)| v);
    fields.finish()?;
    Ok(LimitSpec {
        horizon,
        dt_list,
        t_probe,
        x_probe,
        probe_seed,
    })
}

fn steering_block(mut fields: Fields) -> Result<SteeringOptions<f64>, ConfigError> {
    let mut opts = SteeringOptions::default();
    if let Some(v) = fields.positive("eps_reg")? {
        opts.eps_reg = v;
    }
    if let Some((v, _)) = fields.count("max_iterations")? {
        opts.max_iterations = v;
    }
    if let Some(v) = fields.positive("tolerance")? {
        opts.tolerance = v;
    }
    if let Some(v) = fields.positive("acceptance")? {
        opts.acceptance = v;
    }
    fields.finish()?;
    Ok(opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "mode = sb\nsteps = 4\ndt = 1\neps = 0.1\n\
        [initial.component]\nweight = 1\nmean = 0\nvar = 1\n\
        [terminal.component]\nweight = 1\nmean = 1\nvar = 1/2\n";

    #[test]
    fn fractions_and_vectors() {
        assert_eq!(parse_number("1/4"), Some(0.25));
        assert_eq!(parse_number(" -2e-1 "), Some(-0.2));
        assert_eq!(parse_number("1/0"), None);
        assert_eq!(parse_vector("1, 2 3"), Some(vec![1.0, 2.0, 3.0]));
        let m = parse_matrix("1 0; 0 2").unwrap();
        assert_eq!(m[(1, 1)], 2.0);
        assert!(parse_matrix("1 0; 0").is_none());
    }

    #[test]
    fn minimal_config() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.steps, 4);
        assert_eq!(cfg.terminal.components()[0].cov[(0, 0)], 0.5);
        assert_eq!(
            cfg.dynamics,
            DynamicsSpec::RandomWalk {
                noise_std: 0.1f64.sqrt()
            }
        );
    }

    #[test]
    fn unknown_keys_carry_line_numbers() {
        let text = format!("{MINIMAL}[simulation]\npaths = 10\nseeds = 3\n");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(
            err,
            ConfigError::Validation {
                field: "simulation.seeds".into(),
                line: Some(15),
                message: "unknown key".into()
            }
        );
    }

    #[test]
    fn malformed_lines() {
        let err = parse_config("mode = sb\nsteps 4\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }));
        let err = parse_config("mode = sb\n[nowhere]\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }));
    }

    #[test]
    fn sb_rejects_non_identity_drift() {
        let text = MINIMAL.replace("eps = 0.1\n", "eps = 0.1\n[dynamics]\nkind = explicit\na = 2\nb = 1\nd = 1\n");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref field, .. } if field == "dynamics"));
    }
}
