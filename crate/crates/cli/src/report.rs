//! Structured reports printed by the subcommands.

use debt_core::dual::{operator_norm, run_dual_descent, stepsize_bound, DescentConfig, StopReason};
use debt_core::oracle::{brute_force_primal, OracleConfig};
use debt_core::sim::SimTrace;
use serde::Serialize;

use crate::error::Result;
use crate::output::{channel_names, pair_name, path_names};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairStat {
    pub pair: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStat {
    pub path: String,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub slots: u64,
    pub gamma: f64,
    pub final_residual: f64,
    /// `final_residual <= stop_tol`
    pub converged: bool,
    /// First slot with residual at most `stop_tol`.
    pub balanced_from: Option<u64>,
    pub total_resets: usize,
    /// Last-window standard deviation of some pair total exceeds 1e-3 of
    /// its mean.
    pub oscillating: bool,
    pub window: usize,
    pub pair_totals: Vec<PairStat>,
    pub path_flows: Vec<PathStat>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resets_file: Option<String>,
}

impl RunSummary {
    pub fn new(scenario: &Scenario, trace: &SimTrace) -> Self {
        let s = trace.summary();
        let model = &scenario.model;
        let pair_totals = if trace.is_empty() {
            Vec::new()
        } else {
            (0..model.num_pairs())
                .map(|k| PairStat {
                    pair: pair_name(model, k),
                    mean: s.mean_totals[k],
                    std: s.std_totals[k],
                })
                .collect()
        };
        let path_flows = path_names(model)
            .into_iter()
            .zip(&s.mean_flows)
            .map(|(path, mean)| PathStat { path, mean: *mean })
            .collect();
        RunSummary {
            scenario: scenario.name.clone(),
            slots: s.slots,
            gamma: scenario.gamma,
            final_residual: s.final_residual,
            converged: !trace.is_empty() && s.final_residual <= scenario.stop_tol,
            balanced_from: trace.first_balanced_slot(scenario.stop_tol),
            total_resets: s.total_resets,
            oscillating: s.oscillating(),
            window: s.window,
            pair_totals,
            path_flows,
            warnings: scenario.warnings.clone(),
            trace_file: None,
            resets_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedFlow {
    pub path: String,
    pub oracle: f64,
    pub descent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `dual_value - primal_value`
    pub duality_gap: f64,
    /// `max |f[T] - f*|`
    pub max_flow_deviation: f64,
    pub final_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub flows: Vec<NamedFlow>,
    pub warnings: Vec<String>,
}

/// Solves the primal directly and compares it with the last price-descent
/// iterate.
pub fn verify(scenario: &Scenario) -> Result<VerifyReport> {
    let model = &scenario.model;
    let primal = brute_force_primal(model, &OracleConfig::default())?;
    let cfg = DescentConfig {
        gamma: scenario.gamma,
        horizon: scenario.horizon.max(1),
        stop_tol: scenario.stop_tol,
        solver_tol: scenario.tolerance,
    };
    let descent = run_dual_descent(model, &cfg)?;
    let last = descent.last().expect("horizon is at least one");
    let flows: Vec<NamedFlow> = path_names(model)
        .into_iter()
        .zip(primal.flows.iter().zip(last.flows.iter()))
        .map(|(path, (o, d))| NamedFlow {
            path,
            oracle: *o,
            descent: *d,
        })
        .collect();
    Ok(VerifyReport {
        scenario: scenario.name.clone(),
        primal_value: primal.value,
        dual_value: last.dual_value,
        duality_gap: last.dual_value - primal.value,
        max_flow_deviation: flows
            .iter()
            .map(|f| (f.oracle - f.descent).abs())
            .fold(0.0, f64::max),
        final_residual: last.residual,
        iterations: descent.iterates.len(),
        converged: matches!(descent.stop, StopReason::Converged { .. }),
        flows,
        warnings: scenario.warnings.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelCheck {
    pub channel: String,
    pub forward_peak: f64,
    pub backward_peak: f64,
    pub half_capacity: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub scenario: String,
    pub capacity_holds: bool,
    pub offending_channels: Vec<String>,
    pub channels: Vec<ChannelCheck>,
    pub operator_norm: f64,
    /// Smallest weight over transacting pairs.
    pub eta: Option<f64>,
    pub gamma: f64,
    pub stepsize_bound: Option<f64>,
    /// `pass`, `fail`, or `not applicable (eta=0)`.
    pub stepsize_check: String,
}

pub fn check(scenario: &Scenario) -> CheckReport {
    let model = &scenario.model;
    let names = channel_names(model);
    let channels: Vec<ChannelCheck> = model
        .capacity_report()
        .channels
        .iter()
        .map(|m| ChannelCheck {
            channel: names[m.channel.0].clone(),
            forward_peak: m.forward_peak,
            backward_peak: m.backward_peak,
            half_capacity: m.half_capacity,
            slack: m.slack(),
            holds: m.holds(),
        })
        .collect();
    let eta = model.demand().min_eta();
    let bound = stepsize_bound(model);
    let stepsize_check = match (eta, bound) {
        (Some(0.0), _) => "not applicable (eta=0)".to_string(),
        (_, Some(b)) if scenario.gamma < b => "pass".to_string(),
        (_, Some(_)) => "fail".to_string(),
        _ => "not applicable (no demand)".to_string(),
    };
    CheckReport {
        scenario: scenario.name.clone(),
        capacity_holds: channels.iter().all(|c| c.holds),
        offending_channels: channels
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.channel.clone())
            .collect(),
        channels,
        operator_norm: operator_norm(model.routing()),
        eta,
        gamma: scenario.gamma,
        stepsize_bound: bound,
        stepsize_check,
    }
}
