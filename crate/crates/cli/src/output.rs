//! Artifact writers and the staging directory that keeps failed runs from
//! leaving partial output behind.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! value reads back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use gmm_bridge_core::{
    KlEstimate, LimitTable, Mixture64, Mode, Scheme, TrajectoryBatch,
};
use serde::{Deserialize, Serialize};

/// Files written under `<out>/.staging-<pid>` and moved into `<out>` on commit.
pub struct Staging {
    out: PathBuf,
    dir: PathBuf,
    created_out: bool,
    files: Vec<PathBuf>,
    committed: bool,
}

impl Staging {
    pub fn new(out: &Path) -> io::Result<Self> {
        let created_out = !out.exists();
        fs::create_dir_all(out)?;
        let dir = out.join(format!(".staging-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir(&dir)?;
        Ok(Self {
            out: out.to_path_buf(),
            dir,
            created_out,
            files: Vec::new(),
            committed: false,
        })
    }

    /// Writes `contents` to the staged file `rel`.
    pub fn write(&mut self, rel: impl AsRef<Path>, contents: &str) -> io::Result<()> {
        let rel = rel.as_ref();
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.files.push(rel.to_path_buf());
        Ok(())
    }

    /// Moves every staged file into the output directory.
    pub fn commit(mut self) -> io::Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.files.len());
        for rel in &self.files {
            let target = self.out.join(rel);
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::rename(self.dir.join(rel), &target)?;
            written.push(target);
        }
        fs::remove_dir_all(&self.dir)?;
        self.committed = true;
        Ok(written)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        let _ = fs::remove_dir_all(&self.dir);
        if self.created_out {
            // Only removes the directory if nothing else appeared in it.
            let _ = fs::remove_dir(&self.out);
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Contents of `plan.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub mode: Mode,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda: Vec<Vec<f64>>,
    pub objective: f64,
    pub pair_costs: Vec<Vec<f64>>,
    pub row_potentials: Vec<f64>,
    pub col_potentials: Vec<f64>,
}

impl PlanFile {
    pub fn from_mixture(mb: &Mixture64) -> Self {
        let plan = mb.plan();
        let (n1, n2) = mb.shape();
        let rows = |m: &gmm_bridge_core::Mat64| (0..n1).map(|i| (0..n2).map(|j| m[(i, j)]).collect()).collect();
        Self {
            mode: mb.mode(),
            alpha: mb.initial().weights().to_vec(),
            beta: mb.terminal().weights().to_vec(),
            lambda: rows(&plan.lambda),
            objective: plan.objective,
            pair_costs: rows(&mb.pair_costs()),
            row_potentials: plan.row_potentials.clone(),
            col_potentials: plan.col_potentials.clone(),
        }
    }
}

pub fn plan_json(mb: &Mixture64) -> String {
    let mut s = serde_json::to_string_pretty(&PlanFile::from_mixture(mb)).expect("plan serializes");
    s.push('\n');
    s
}

fn marginal_header(n: usize) -> String {
    let mut h = String::from("k,i,j,weight");
    for r in 0..n {
        let _ = write!(h, ",mean_{r}");
    }
    for r in 0..n {
        for c in 0..n {
            let _ = write!(h, ",cov_{r}_{c}");
        }
    }
    h.push('\n');
    h
}

fn marginal_row(out: &mut String, k: usize, i: Option<usize>, j: Option<usize>, weight: f64, comp: &gmm_bridge_core::Gaussian64) {
    let idx = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
    let _ = write!(out, "{k},{},{},{}", idx(i), idx(j), num(weight));
    for &m in &comp.mean {
        let _ = write!(out, ",{}", num(m));
    }
    for &v in comp.cov.as_slice() {
        let _ = write!(out, ",{}", num(v));
    }
    out.push('\n');
}

/// `marginals.csv`: the analytic mixture marginal at every step.
///
/// Step `0` lists the initial components (`j` empty), step `N` the terminal
/// components (`i` empty), both exactly as configured. Intermediate steps
/// list one row per pair with positive mass, weighted by `λ_ij`.
pub fn marginals_csv(mb: &Mixture64) -> gmm_bridge_core::Result<String> {
    let n = mb.dim();
    let steps = mb.steps();
    let (n1, n2) = mb.shape();
    let mut out = marginal_header(n);
    for (i, (w, c)) in mb.initial().weights().iter().zip(mb.initial().components()).enumerate() {
        marginal_row(&mut out, 0, Some(i), None, *w, c);
    }
    for k in 1..steps {
        for i in 0..n1 {
            for j in 0..n2 {
                let w = mb.plan().lambda[(i, j)];
                if w > 0.0 {
                    marginal_row(&mut out, k, Some(i), Some(j), w, &mb.pair(i, j).marginal_at(k)?);
                }
            }
        }
    }
    for (j, (w, c)) in mb.terminal().weights().iter().zip(mb.terminal().components()).enumerate() {
        marginal_row(&mut out, steps, None, Some(j), *w, c);
    }
    Ok(out)
}

/// `trajectories.csv`: `path,k,x_0,...` for the first `limit` paths.
pub fn trajectories_csv(batch: &TrajectoryBatch<f64>, limit: usize) -> String {
    let n = batch.dim();
    let mut out = String::from("path,k");
    for r in 0..n {
        let _ = write!(out, ",x_{r}");
    }
    out.push('\n');
    for (p, path) in batch.states.iter().take(limit).enumerate() {
        for (k, x) in path.iter().enumerate() {
            let _ = write!(out, "{p},{k}");
            for &v in x {
                let _ = write!(out, ",{}", num(v));
            }
            out.push('\n');
        }
    }
    out
}

pub fn trajectory_file(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::PerStep => "trajectories.csv",
        Scheme::Once => "trajectories_once.csv",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeEstimates {
    pub scheme: Scheme,
    /// `KL(· ‖ q)` against the reference walk (sb mode).
    pub path_kl: Option<KlEstimate<f64>>,
    /// `E Σ‖u_k‖²` (ds mode).
    pub control_cost: Option<KlEstimate<f64>>,
    /// Fraction of terminal states nearest each terminal component.
    pub terminal_weights: Vec<f64>,
    /// Mean of the terminal states assigned to each component.
    pub terminal_means: Vec<Option<Vec<f64>>>,
}

/// `KL(p‖q) ≤ KL(r‖q)` check on paired per-step and once batches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlOrdering {
    pub per_step: f64,
    pub once: f64,
    pub combined_std_error: f64,
    /// `per_step ≤ once + 2·combined_std_error`.
    pub holds: bool,
}

/// Contents of `estimates.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatesFile {
    pub mode: Mode,
    pub seed: u64,
    pub paths: usize,
    /// `Σ λ_ij J_ij`: the path-KL bound (sb) or the expected control cost (ds).
    pub analytic_cost: f64,
    pub schemes: Vec<SchemeEstimates>,
    pub kl_ordering: Option<KlOrdering>,
}

pub fn estimates_json(est: &EstimatesFile) -> String {
    let mut s = serde_json::to_string_pretty(est).expect("estimates serialize");
    s.push('\n');
    s
}

/// `limits.csv`: `dt,steps,k,drift_err,diff_err,diff_identity_gap,drift_ratio,diff_ratio`.
pub fn limits_csv(table: &LimitTable<f64>) -> String {
    let mut out = String::from("dt,steps,k,drift_err,diff_err,diff_identity_gap,drift_ratio,diff_ratio\n");
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            num(r.dt),
            r.steps,
            r.k,
            num(r.drift_err),
            num(r.diff_err),
            num(r.diff_identity_gap),
            opt(r.drift_ratio),
            opt(r.diff_ratio)
        );
    }
    out
}
