//! Dual price descent on channel prices.
//!
//! Channel prices `lambda` are multipliers of the detailed-balance
//! constraints `R f = 0`. For given prices each pair responds to its path
//! prices `mu = R^T lambda`; the dual function `D(lambda)` is the sum of the
//! pairs' optimal Lagrangian values and its gradient is `-R F(lambda)`.
//! Descent moves prices by `gamma R f`, raising the price of every channel
//! in the direction of its net flow.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::linalg::{dot, norm};
use crate::network::{Model, RoutingMatrix};
use crate::pair::{pair_lagrangian_value, solve_pair, PairProblem};
use crate::{Error, Result};

/// Price norm beyond which descent and simulation abort.
pub const DIVERGENCE_LIMIT: f64 = 1e9;
pub const DEFAULT_STOP_TOL: f64 = 1e-6;
/// Pair solver tolerance, scaled per pair by `max(1, demand)`.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-9;

/// One price per channel; positive prices charge flow in the `u -> v`
/// direction and pay flow in the `v -> u` direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPrices(Vec<f64>);

impl ChannelPrices {
    pub fn zeros(channels: usize) -> Self {
        ChannelPrices(vec![0.0; channels])
    }

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite channel price {v}")));
        }
        Ok(ChannelPrices(values))
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ChannelPrices {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Nonnegative flow per path, in global path order.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowVector(Vec<f64>);

impl FlowVector {
    pub fn zeros(paths: usize) -> Self {
        FlowVector(vec![0.0; paths])
    }

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidInput(format!("invalid path flow {v}")));
        }
        Ok(FlowVector(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FlowVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `mu = R^T lambda`
pub fn path_prices(prices: &ChannelPrices, routing: &RoutingMatrix) -> Result<Vec<f64>> {
    routing.apply_transpose(prices)
}

/// Every pair's optimal response to a vector of path prices.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResponse {
    pub flows: FlowVector,
    /// Total per pair.
    pub totals: Vec<f64>,
    /// Demand-cap multiplier per pair.
    pub multipliers: Vec<f64>,
    /// Sum of the pairs' Lagrangian values, i.e. `D(lambda)`.
    pub value: f64,
}

/// Solves each pair independently at path prices `mu` with per-pair
/// `amounts` (zero-amount pairs send nothing).
pub fn respond(model: &Model, amounts: &[f64], mu: &[f64], tol: f64) -> Result<FlowResponse> {
    if amounts.len() != model.num_pairs() {
        return Err(Error::DimensionMismatch {
            what: "demand amounts",
            expected: model.num_pairs(),
            actual: amounts.len(),
        });
    }
    if mu.len() != model.num_paths() {
        return Err(Error::DimensionMismatch {
            what: "path prices",
            expected: model.num_paths(),
            actual: mu.len(),
        });
    }
    let mut flows = vec![0.0; model.num_paths()];
    let mut totals = vec![0.0; model.num_pairs()];
    let mut multipliers = vec![0.0; model.num_pairs()];
    let mut value = 0.0;
    for (k, pair) in model.demand().pairs().iter().enumerate() {
        let range = model.paths().range(k);
        let amount = amounts[k];
        if amount <= 0.0 || range.is_empty() {
            continue;
        }
        let problem = PairProblem {
            prices: &mu[range.clone()],
            demand: amount,
            eta: pair.eta,
            utility: pair.utility,
        };
        let solution = solve_pair(
            &problem,
            &model.path_lengths()[range.clone()],
            tol * amount.max(1.0),
        )?;
        value += pair_lagrangian_value(&solution.flows, &problem);
        flows[range].copy_from_slice(&solution.flows);
        totals[k] = solution.total;
        multipliers[k] = solution.multiplier;
    }
    Ok(FlowResponse {
        flows: FlowVector(flows),
        totals,
        multipliers,
        value,
    })
}

fn respond_at(prices: &ChannelPrices, model: &Model, tol: f64) -> Result<FlowResponse> {
    check_prices(prices, model)?;
    let mu = path_prices(prices, model.routing())?;
    respond(model, &model.demand().amounts(), &mu, tol)
}

fn check_prices(prices: &ChannelPrices, model: &Model) -> Result<()> {
    if prices.len() != model.num_channels() {
        return Err(Error::DimensionMismatch {
            what: "channel prices",
            expected: model.num_channels(),
            actual: prices.len(),
        });
    }
    Ok(())
}

/// `F(lambda)`: the flow maximizing the Lagrangian at `prices`.
pub fn global_flow(prices: &ChannelPrices, model: &Model, tol: f64) -> Result<FlowVector> {
    Ok(respond_at(prices, model, tol)?.flows)
}

/// `D(lambda)`
pub fn dual_value(prices: &ChannelPrices, model: &Model, tol: f64) -> Result<f64> {
    Ok(respond_at(prices, model, tol)?.value)
}

/// `-R F(lambda)`. When some transacting pair has `eta = 0` this is one
/// subgradient (the tie-broken response), see [`is_differentiable`].
pub fn dual_gradient(prices: &ChannelPrices, model: &Model, tol: f64) -> Result<Vec<f64>> {
    let response = respond_at(prices, model, tol)?;
    let mut g = model.routing().apply(&response.flows)?;
    g.iter_mut().for_each(|x| *x = -*x);
    Ok(g)
}

/// The dual is differentiable everywhere when every transacting pair has a
/// positive regularizer weight.
pub fn is_differentiable(model: &Model) -> bool {
    model.demand().transacting().all(|p| p.eta > 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualDiagnostics {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// `||R f||_2`, the detailed-balance residual.
    pub residual: f64,
    pub operator_norm: f64,
    pub differentiable: bool,
}

pub fn diagnostics(prices: &ChannelPrices, model: &Model, tol: f64) -> Result<DualDiagnostics> {
    let response = respond_at(prices, model, tol)?;
    let net = model.routing().apply(&response.flows)?;
    let residual = norm(&net);
    Ok(DualDiagnostics {
        value: response.value,
        gradient: net.iter().map(|x| -x).collect(),
        residual,
        operator_norm: operator_norm(model.routing()),
        differentiable: is_differentiable(model),
    })
}

/// `lambda + gamma R f`
pub fn price_step(
    prices: &ChannelPrices,
    flows: &[f64],
    routing: &RoutingMatrix,
    gamma: f64,
) -> Result<ChannelPrices> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidInput(format!("stepsize must be positive, got {gamma}")));
    }
    if prices.len() != routing.num_channels() {
        return Err(Error::DimensionMismatch {
            what: "channel prices",
            expected: routing.num_channels(),
            actual: prices.len(),
        });
    }
    let net = routing.apply(flows)?;
    Ok(step_with_net(prices, &net, gamma))
}

pub(crate) fn step_with_net(prices: &ChannelPrices, net: &[f64], gamma: f64) -> ChannelPrices {
    ChannelPrices(prices.iter().zip(net).map(|(l, n)| l + gamma * n).collect())
}

/// Largest singular value of `R`, by power iteration on `R^T R`.
pub fn operator_norm(routing: &RoutingMatrix) -> f64 {
    const MAX_ITERATIONS: usize = 10_000;
    const REL_TOL: f64 = 1e-8;

    let n = routing.num_paths();
    if n == 0 || routing.num_channels() == 0 {
        return 0.0;
    }
    // irregular start so it is not orthogonal to the top singular vector of
    // sign-symmetric matrices
    let golden = 0.618_033_988_749_894_9;
    let mut v: Vec<f64> = (0..n)
        .map(|i| 0.5 + ((i as f64 + 1.0) * golden) % 1.0)
        .collect();
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);

    let mut estimate = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let rv = routing.apply(&v).expect("dimensions match");
        let w = routing.apply_transpose(&rv).expect("dimensions match");
        let next = dot(&v, &w);
        let wn = norm(&w);
        if wn == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / wn).collect();
        if (next - estimate).abs() <= REL_TOL * next {
            estimate = next;
            break;
        }
        estimate = next;
    }
    libm::sqrt(estimate)
}

/// `eta / ||R||_op^2` with `eta` the smallest regularizer weight over
/// transacting pairs; `None` when that weight is zero or nothing transacts.
pub fn stepsize_bound(model: &Model) -> Option<f64> {
    let eta = model.demand().min_eta()?;
    let op = operator_norm(model.routing());
    (eta > 0.0 && op > 0.0).then(|| eta / (op * op))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// Some transacting pair has `eta = 0`; convergence is not guaranteed.
    Unregularized,
    /// `gamma >= eta / ||R||_op^2`.
    StepsizeAboveBound { gamma: f64, bound: f64 },
}

/// Warnings about the regularizer and stepsize conditions that guarantee
/// convergence of price descent.
pub fn check_assumptions(model: &Model, gamma: f64) -> Vec<Warning> {
    let mut out = Vec::new();
    if !is_differentiable(model) {
        out.push(Warning::Unregularized);
    } else if let Some(bound) = stepsize_bound(model) {
        if gamma >= bound {
            out.push(Warning::StepsizeAboveBound { gamma, bound });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentConfig {
    pub gamma: f64,
    /// Maximum number of iterates.
    pub horizon: u64,
    /// Stop once `||R f||_2` is at most this.
    pub stop_tol: f64,
    pub solver_tol: f64,
}

impl DescentConfig {
    pub fn new(gamma: f64, horizon: u64) -> Self {
        DescentConfig {
            gamma,
            horizon,
            stop_tol: DEFAULT_STOP_TOL,
            solver_tol: DEFAULT_SOLVER_TOL,
        }
    }
}

/// Prices at step `t` and the flow chosen in response.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub t: u64,
    pub prices: ChannelPrices,
    pub flows: FlowVector,
    pub dual_value: f64,
    /// `||R f||_2`
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The residual dropped to `stop_tol` at this iterate.
    Converged { iteration: u64 },
    Horizon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentTrace {
    pub iterates: Vec<Iterate>,
    pub stop: StopReason,
    pub warnings: Vec<Warning>,
}

impl DescentTrace {
    pub fn last(&self) -> Option<&Iterate> {
        self.iterates.last()
    }
}

/// Gradient descent on the dual from `lambda = 0`:
/// `f[t] = F(lambda[t])`, `lambda[t+1] = lambda[t] + gamma R f[t]`.
pub fn run_dual_descent(model: &Model, config: &DescentConfig) -> Result<DescentTrace> {
    if !(config.gamma.is_finite() && config.gamma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "stepsize must be positive, got {}",
            config.gamma
        )));
    }
    let warnings = check_assumptions(model, config.gamma);
    let amounts = model.demand().amounts();
    let mut prices = ChannelPrices::zeros(model.num_channels());
    let mut iterates = Vec::new();
    let mut stop = StopReason::Horizon;
    for t in 0..config.horizon {
        let mu = path_prices(&prices, model.routing())?;
        let response = respond(model, &amounts, &mu, config.solver_tol)?;
        let net = model.routing().apply(&response.flows)?;
        let residual = norm(&net);
        let next = step_with_net(&prices, &net, config.gamma);
        iterates.push(Iterate {
            t,
            prices,
            flows: response.flows,
            dual_value: response.value,
            residual,
        });
        if residual <= config.stop_tol {
            stop = StopReason::Converged { iteration: t };
            break;
        }
        let size = next.norm();
        if size > DIVERGENCE_LIMIT {
            return Err(Error::Divergence {
                iteration: t + 1,
                norm: size,
                limit: DIVERGENCE_LIMIT,
            });
        }
        prices = next;
    }
    Ok(DescentTrace {
        iterates,
        stop,
        warnings,
    })
}
