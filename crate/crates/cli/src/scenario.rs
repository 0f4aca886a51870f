//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "ring3"
//! nodes = ["A", "B", "C"]
//!
//! [[channels]]
//! u = "A"
//! v = "B"
//! capacity = 100.0
//!
//! [[demands]]
//! source = "A"
//! destination = "B"
//! amount = 10.0
//! eta = 0.1
//! utility = { family = "linear", alpha = 1.0 }
//!
//! [solver]
//! gamma = 0.01
//! horizon = 5000
//! demand_mode = "constant"
//! ```
//!
//! Unknown keys are rejected. `utility.family` is `linear` (`alpha`) or
//! `scaled-log` (`alpha`, `beta`). A demand without `eta` takes
//! `solver.eta`. `demand_mode` is one of `constant`, `poisson` (integer
//! draws with the declared amounts as means), `piecewise` (uses
//! `[[solver.segments]]`, each with `start` and one amount per demand) and
//! `reversal` (every amount moves to the reverse pair at
//! `solver.reversal_at`, default half the horizon; missing reverse pairs are
//! added with zero demand).

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use debt_core::dual::{check_assumptions, Warning};
use debt_core::network::{DemandSpec, Model, PairDemand, Topology};
use debt_core::sim::{DemandProcess, DemandSegment};
use debt_core::Utility;
use serde::{Deserialize, Serialize};

use crate::builtin;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub nodes: Vec<String>,
    #[serde(default)]
    pub channels: Vec<ChannelEntry>,
    #[serde(default)]
    pub demands: Vec<DemandEntry>,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub u: String,
    pub v: String,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandEntry {
    pub source: String,
    pub destination: String,
    pub amount: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub utility: UtilitySpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum UtilitySpec {
    Linear { alpha: f64 },
    ScaledLog { alpha: f64, beta: f64 },
}

impl From<UtilitySpec> for Utility {
    fn from(u: UtilitySpec) -> Self {
        match u {
            UtilitySpec::Linear { alpha } => Utility::linear(alpha),
            UtilitySpec::ScaledLog { alpha, beta } => Utility::scaled_log(alpha, beta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DemandMode {
    #[default]
    Constant,
    Poisson,
    Piecewise,
    Reversal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentEntry {
    pub start: u64,
    pub amounts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub max_hops: usize,
    pub horizon: u64,
    /// Pair solver bisection tolerance, scaled by `max(1, amount)`.
    pub tolerance: f64,
    /// Residual `||R f||_2` counted as balanced.
    pub stop_tol: f64,
    pub seed: u64,
    pub demand_mode: DemandMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reversal_at: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SegmentEntry>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            gamma: 0.01,
            eta: None,
            max_hops: debt_core::network::DEFAULT_MAX_HOPS,
            horizon: 5000,
            tolerance: debt_core::dual::DEFAULT_SOLVER_TOL,
            stop_tol: debt_core::dual::DEFAULT_STOP_TOL,
            seed: 0,
            demand_mode: DemandMode::Constant,
            reversal_at: None,
            segments: Vec::new(),
        }
    }
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub gamma: Option<f64>,
    /// Replaces every pair's weight, not just the default.
    pub eta: Option<f64>,
    pub horizon: Option<u64>,
    pub seed: Option<u64>,
    pub max_hops: Option<usize>,
    pub demand_mode: Option<DemandMode>,
    pub stop_tol: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, file: &mut ScenarioFile) {
        let s = &mut file.solver;
        if let Some(g) = self.gamma {
            s.gamma = g;
        }
        if let Some(h) = self.horizon {
            s.horizon = h;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(m) = self.max_hops {
            s.max_hops = m;
        }
        if let Some(mode) = self.demand_mode {
            s.demand_mode = mode;
        }
        if let Some(t) = self.stop_tol {
            s.stop_tol = t;
        }
        if let Some(eta) = self.eta {
            s.eta = Some(eta);
            file.demands.iter_mut().for_each(|d| d.eta = Some(eta));
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    toml::from_str(text).map_err(|e| CliError::Validation(format!("scenario parse error: {e}")))
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenario(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn to_toml(file: &ScenarioFile) -> String {
    toml::to_string(file).expect("scenario serializes")
}

/// A file path, or the name of a built-in scenario when no such file
/// exists. Returns the scenario and its display name.
pub fn resolve(arg: &str) -> Result<(ScenarioFile, String)> {
    let path = Path::new(arg);
    if path.exists() {
        let file = load_scenario(path)?;
        let name = file.name.clone().unwrap_or_else(|| {
            path.file_stem()
                .map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned())
        });
        return Ok((file, name));
    }
    match builtin::lookup(arg) {
        Some(file) => Ok((file, arg.to_string())),
        None => Err(CliError::Validation(format!(
            "{arg}: no such file or built-in scenario (built-ins: {})",
            builtin::NAMES.join(", ")
        ))),
    }
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: Model,
    pub gamma: f64,
    pub horizon: u64,
    pub tolerance: f64,
    pub stop_tol: f64,
    pub process: DemandProcess,
    /// Conditions under which convergence or feasibility is not guaranteed.
    pub warnings: Vec<String>,
}

impl Scenario {
    pub fn build(name: &str, file: &ScenarioFile) -> Result<Self> {
        let s = &file.solver;
        let mut problems = Vec::new();
        if !(s.gamma.is_finite() && s.gamma > 0.0) {
            problems.push(format!("solver.gamma must be positive, got {}", s.gamma));
        }
        if s.max_hops == 0 {
            problems.push("solver.max_hops must be at least 1".into());
        }
        if !(s.tolerance.is_finite() && s.tolerance > 0.0) {
            problems.push(format!("solver.tolerance must be positive, got {}", s.tolerance));
        }
        if !(s.stop_tol.is_finite() && s.stop_tol >= 0.0) {
            problems.push(format!("solver.stop_tol must be nonnegative, got {}", s.stop_tol));
        }
        if s.demand_mode == DemandMode::Piecewise && s.segments.is_empty() {
            problems.push("piecewise demand needs [[solver.segments]]".into());
        }
        let mut pairs_in = Vec::new();
        for d in &file.demands {
            match d.eta.or(s.eta) {
                Some(eta) => pairs_in.push((d, eta)),
                None => problems.push(format!(
                    "demand {}->{} has no eta and solver.eta is unset",
                    d.source, d.destination
                )),
            }
        }
        let channels: Vec<(&str, &str, f64)> = file
            .channels
            .iter()
            .map(|c| (c.u.as_str(), c.v.as_str(), c.capacity))
            .collect();
        let topology = match Topology::new(file.nodes.iter().map(String::as_str), &channels) {
            Ok(t) => Some(t),
            Err(debt_core::Error::Validation(list)) => {
                problems.extend(list);
                None
            }
            Err(e) => return Err(e.into()),
        };
        let (Some(topology), true) = (topology, problems.is_empty()) else {
            return Err(CliError::Validation(problems.join("; ")));
        };

        let mut pairs = Vec::with_capacity(pairs_in.len());
        for (d, eta) in &pairs_in {
            let (Some(source), Some(destination)) =
                (topology.node(&d.source), topology.node(&d.destination))
            else {
                problems.push(format!(
                    "demand {}->{} names an unknown node",
                    d.source, d.destination
                ));
                continue;
            };
            pairs.push(PairDemand {
                source,
                destination,
                amount: d.amount,
                utility: d.utility.into(),
                eta: *eta,
            });
        }
        if !problems.is_empty() {
            return Err(CliError::Validation(problems.join("; ")));
        }
        if s.demand_mode == DemandMode::Reversal {
            let missing: Vec<PairDemand> = pairs
                .iter()
                .filter(|p| {
                    !pairs
                        .iter()
                        .any(|q| q.source == p.destination && q.destination == p.source)
                })
                .map(|p| PairDemand {
                    source: p.destination,
                    destination: p.source,
                    amount: 0.0,
                    ..*p
                })
                .collect();
            pairs.extend(missing);
        }
        let demand = DemandSpec::new(&topology, pairs)?;
        let model = Model::new(topology, demand, s.max_hops)?;

        let process = match s.demand_mode {
            DemandMode::Constant => DemandProcess::constant(&model),
            DemandMode::Poisson => DemandProcess::Poisson {
                means: model.demand().amounts(),
                seed: s.seed,
            },
            DemandMode::Reversal => {
                DemandProcess::reversal(&model, s.reversal_at.unwrap_or(s.horizon / 2))?
            }
            DemandMode::Piecewise => DemandProcess::Piecewise(
                s.segments
                    .iter()
                    .map(|seg| DemandSegment {
                        start: seg.start,
                        amounts: seg.amounts.clone(),
                    })
                    .collect(),
            ),
        };
        process.validate(model.num_pairs())?;

        let mut warnings = Vec::new();
        let report = model.capacity_report();
        if !report.holds() {
            let names: Vec<String> = report
                .violations()
                .map(|m| model.topology().channel_name(m.channel))
                .collect();
            warnings.push(format!(
                "capacity assumption fails on {}: channels may need on-chain resets",
                names.join(", ")
            ));
        }
        for w in check_assumptions(&model, s.gamma) {
            warnings.push(match w {
                Warning::Unregularized => {
                    "eta = 0 on some pair: convergence is not guaranteed".to_string()
                }
                Warning::StepsizeAboveBound { gamma, bound } => format!(
                    "gamma {gamma} is not below eta/||R||^2 = {bound}: convergence is not guaranteed"
                ),
            });
        }

        Ok(Scenario {
            name: name.to_string(),
            model,
            gamma: s.gamma,
            horizon: s.horizon,
            tolerance: s.tolerance,
            stop_tol: s.stop_tol,
            process,
            warnings,
        })
    }
}
