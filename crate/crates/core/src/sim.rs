//! Discrete-time channel balance simulation.
//!
//! Each slot: channels publish prices and pairs compute path prices; demand
//! arrives and every pair picks its flows; each channel that cannot carry
//! its requested flow is reset on-chain to half capacity and then all flows
//! are executed; finally each channel moves its price by `gamma` times its
//! net flow. Prices never see balances, so on constant demand the price and
//! flow sequence is exactly that of [`run_dual_descent`](crate::dual::run_dual_descent).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::dual::{
    path_prices, respond, step_with_net, ChannelPrices, FlowVector, DEFAULT_SOLVER_TOL,
    DIVERGENCE_LIMIT,
};
use crate::linalg::norm;
use crate::network::{ChannelId, Model, RoutingMatrix, Topology};
use crate::{Error, Result};

/// Balance of the lower-indexed endpoint of each channel; the other endpoint
/// holds `capacity - x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBalances(Vec<f64>);

impl ChannelBalances {
    /// Every channel split evenly.
    pub fn balanced(topology: &Topology) -> Self {
        ChannelBalances(topology.channels().iter().map(|c| c.capacity / 2.0).collect())
    }

    pub fn new(topology: &Topology, values: Vec<f64>) -> Result<Self> {
        if values.len() != topology.num_channels() {
            return Err(Error::DimensionMismatch {
                what: "channel balances",
                expected: topology.num_channels(),
                actual: values.len(),
            });
        }
        for (x, ch) in values.iter().zip(topology.channels()) {
            if !(x.is_finite() && *x >= 0.0 && *x <= ch.capacity) {
                return Err(Error::InvalidInput(format!(
                    "balance {x} outside [0, {}]",
                    ch.capacity
                )));
            }
        }
        Ok(ChannelBalances(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ChannelBalances {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A change of demand taking effect at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSegment {
    pub start: u64,
    /// Amount per pair, in model pair order.
    pub amounts: Vec<f64>,
}

/// How per-slot demand is generated. Vectors are indexed by model pair.
#[derive(Debug, Clone, PartialEq)]
pub enum DemandProcess {
    Constant(Vec<f64>),
    /// Piecewise constant; the first segment must start at slot 0.
    Piecewise(Vec<DemandSegment>),
    /// Independent integer Poisson draws per pair and slot from a ChaCha8
    /// stream seeded with `seed`.
    Poisson { means: Vec<f64>, seed: u64 },
}

impl DemandProcess {
    /// The model's own amounts, every slot.
    pub fn constant(model: &Model) -> Self {
        DemandProcess::Constant(model.demand().amounts())
    }

    /// The model's amounts until `at`, then every pair's amount moves to its
    /// reverse pair. Every reverse pair must be declared in the model.
    pub fn reversal(model: &Model, at: u64) -> Result<Self> {
        let pairs = model.demand().pairs();
        let amounts = model.demand().amounts();
        let mut reversed = vec![0.0; pairs.len()];
        for (k, p) in pairs.iter().enumerate() {
            if amounts[k] == 0.0 {
                continue;
            }
            let back = pairs
                .iter()
                .position(|q| q.source == p.destination && q.destination == p.source)
                .ok_or_else(|| {
                    let t = model.topology();
                    Error::InvalidInput(format!(
                        "reverse pair {}->{} is not declared",
                        t.node_name(p.destination),
                        t.node_name(p.source)
                    ))
                })?;
            reversed[back] = amounts[k];
        }
        Ok(DemandProcess::Piecewise(vec![
            DemandSegment { start: 0, amounts },
            DemandSegment {
                start: at,
                amounts: reversed,
            },
        ]))
    }

    pub fn validate(&self, pairs: usize) -> Result<()> {
        let check = |v: &[f64]| -> Result<()> {
            if v.len() != pairs {
                return Err(Error::DimensionMismatch {
                    what: "demand vector",
                    expected: pairs,
                    actual: v.len(),
                });
            }
            if let Some(a) = v.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
                return Err(Error::InvalidInput(format!("invalid demand amount {a}")));
            }
            Ok(())
        };
        match self {
            DemandProcess::Constant(v) => check(v),
            DemandProcess::Poisson { means, .. } => check(means),
            DemandProcess::Piecewise(segments) => {
                if segments.first().map(|s| s.start) != Some(0) {
                    return Err(Error::InvalidInput(
                        "first demand segment must start at slot 0".into(),
                    ));
                }
                if segments.windows(2).any(|w| w[0].start >= w[1].start) {
                    return Err(Error::InvalidInput(
                        "demand segments must have increasing start slots".into(),
                    ));
                }
                segments.iter().try_for_each(|s| check(&s.amounts))
            }
        }
    }
}

/// Demand for slot `t`. Only the Poisson mode draws from `rng`.
pub fn sample_demand(process: &DemandProcess, t: u64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match process {
        DemandProcess::Constant(v) => v.clone(),
        DemandProcess::Piecewise(segments) => {
            let idx = segments.partition_point(|s| s.start <= t).saturating_sub(1);
            segments[idx].amounts.clone()
        }
        DemandProcess::Poisson { means, .. } => means
            .iter()
            .map(|&m| match Poisson::new(m) {
                Ok(dist) if m > 0.0 => dist.sample(rng),
                _ => 0.0,
            })
            .collect(),
    }
}

/// Owns a demand process and its random stream.
#[derive(Debug, Clone)]
pub struct DemandSampler {
    process: DemandProcess,
    rng: ChaCha8Rng,
}

impl DemandSampler {
    pub fn new(process: DemandProcess) -> Self {
        let seed = match &process {
            DemandProcess::Poisson { seed, .. } => *seed,
            _ => 0,
        };
        DemandSampler {
            process,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self, t: u64) -> Vec<f64> {
        sample_demand(&self.process, t, &mut self.rng)
    }

    pub fn process(&self) -> &DemandProcess {
        &self.process
    }
}

/// An on-chain rebalancing of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetEvent {
    pub slot: u64,
    pub channel: ChannelId,
    /// Balance of the lower-indexed endpoint before the reset.
    pub pre_balance: f64,
}

/// Per channel, whether it can carry `flows` from balances `x`: channel `e`
/// fails iff `(R+ f)_e > x_e` or `(R- f)_e > c_e - x_e`.
pub fn feasibility_check(
    flows: &[f64],
    balances: &ChannelBalances,
    topology: &Topology,
    routing: &RoutingMatrix,
) -> Result<Vec<bool>> {
    let forward = routing.apply_plus(flows)?;
    let backward = routing.apply_minus(flows)?;
    check_balances(balances, topology)?;
    Ok(topology
        .channels()
        .iter()
        .enumerate()
        .map(|(e, ch)| forward[e] <= balances[e] && backward[e] <= ch.capacity - balances[e])
        .collect())
}

fn check_balances(balances: &ChannelBalances, topology: &Topology) -> Result<()> {
    if balances.len() != topology.num_channels() {
        return Err(Error::DimensionMismatch {
            what: "channel balances",
            expected: topology.num_channels(),
            actual: balances.len(),
        });
    }
    Ok(())
}

/// Resets every infeasible channel to half capacity, then executes the
/// flows: `x' = x~ - R f`.
///
/// Fails with [`Error::CapacityViolation`] if a reset channel still cannot
/// carry its flow, which only happens when the capacity assumption is
/// violated.
pub fn rebalance_and_apply(
    flows: &[f64],
    balances: &ChannelBalances,
    topology: &Topology,
    routing: &RoutingMatrix,
    slot: u64,
) -> Result<(ChannelBalances, Vec<ResetEvent>)> {
    let feasible = feasibility_check(flows, balances, topology, routing)?;
    let forward = routing.apply_plus(flows)?;
    let backward = routing.apply_minus(flows)?;
    let net = routing.apply(flows)?;
    let mut resets = Vec::new();
    let mut next = Vec::with_capacity(balances.len());
    for (e, ch) in topology.channels().iter().enumerate() {
        let mut x = balances[e];
        if !feasible[e] {
            resets.push(ResetEvent {
                slot,
                channel: ChannelId(e),
                pre_balance: x,
            });
            x = ch.capacity / 2.0;
            if forward[e] > x || backward[e] > ch.capacity - x {
                return Err(Error::CapacityViolation { slot, channel: e });
            }
        }
        // feasibility guarantees x - net in [0, c] up to rounding
        next.push((x - net[e]).clamp(0.0, ch.capacity));
    }
    Ok((ChannelBalances(next), resets))
}

/// Mutable protocol state at the start of a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolState {
    pub slot: u64,
    pub prices: ChannelPrices,
    pub balances: ChannelBalances,
}

impl ProtocolState {
    /// Slot 0, zero prices, balanced channels.
    pub fn initial(model: &Model) -> Self {
        ProtocolState {
            slot: 0,
            prices: ChannelPrices::zeros(model.num_channels()),
            balances: ChannelBalances::balanced(model.topology()),
        }
    }
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: u64,
    /// Prices the decisions were based on.
    pub prices: ChannelPrices,
    pub path_prices: Vec<f64>,
    pub demand: Vec<f64>,
    /// Requested flows, all of which were executed.
    pub flows: FlowVector,
    /// Total per pair.
    pub totals: Vec<f64>,
    /// `R f`
    pub net_flow: Vec<f64>,
    pub resets: Vec<ResetEvent>,
    /// Lagrangian value of the chosen flows at this slot's demand, i.e. the
    /// dual function at `prices`.
    pub dual_value: f64,
}

impl SlotRecord {
    /// `||R f||_2`
    pub fn residual(&self) -> f64 {
        norm(&self.net_flow)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub gamma: f64,
    pub solver_tol: f64,
}

impl SimConfig {
    pub fn new(gamma: f64) -> Self {
        SimConfig {
            gamma,
            solver_tol: DEFAULT_SOLVER_TOL,
        }
    }
}

pub struct Simulator<'m> {
    model: &'m Model,
    sampler: DemandSampler,
    config: SimConfig,
    state: ProtocolState,
}

impl<'m> Simulator<'m> {
    pub fn new(model: &'m Model, process: DemandProcess, config: SimConfig) -> Result<Self> {
        Self::with_state(model, process, config, ProtocolState::initial(model))
    }

    pub fn with_state(
        model: &'m Model,
        process: DemandProcess,
        config: SimConfig,
        state: ProtocolState,
    ) -> Result<Self> {
        if !(config.gamma.is_finite() && config.gamma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "stepsize must be positive, got {}",
                config.gamma
            )));
        }
        process.validate(model.num_pairs())?;
        check_balances(&state.balances, model.topology())?;
        if state.prices.len() != model.num_channels() {
            return Err(Error::DimensionMismatch {
                what: "channel prices",
                expected: model.num_channels(),
                actual: state.prices.len(),
            });
        }
        Ok(Simulator {
            model,
            sampler: DemandSampler::new(process),
            config,
            state,
        })
    }

    pub fn state(&self) -> &ProtocolState {
        &self.state
    }

    /// Advances one slot.
    pub fn step(&mut self) -> Result<SlotRecord> {
        let model = self.model;
        let routing = model.routing();
        let slot = self.state.slot;

        let mu = path_prices(&self.state.prices, routing)?;
        let demand = self.sampler.sample(slot);
        let response = respond(model, &demand, &mu, self.config.solver_tol)?;
        let (balances, resets) = rebalance_and_apply(
            &response.flows,
            &self.state.balances,
            model.topology(),
            routing,
            slot,
        )?;
        let net_flow = routing.apply(&response.flows)?;
        let prices = step_with_net(&self.state.prices, &net_flow, self.config.gamma);
        let size = prices.norm();
        if size > DIVERGENCE_LIMIT {
            return Err(Error::Divergence {
                iteration: slot + 1,
                norm: size,
                limit: DIVERGENCE_LIMIT,
            });
        }

        let previous = core::mem::replace(
            &mut self.state,
            ProtocolState {
                slot: slot + 1,
                prices,
                balances,
            },
        );
        Ok(SlotRecord {
            slot,
            prices: previous.prices,
            path_prices: mu,
            demand,
            flows: response.flows,
            totals: response.totals,
            net_flow,
            resets,
            dual_value: response.value,
        })
    }

    /// Runs `horizon` slots.
    pub fn run(&mut self, horizon: u64) -> Result<SimTrace> {
        let mut records = Vec::with_capacity(horizon as usize);
        for _ in 0..horizon {
            records.push(self.step()?);
        }
        Ok(SimTrace { records })
    }
}

/// Simulates `horizon` slots from the initial state.
pub fn run_simulation(
    model: &Model,
    process: DemandProcess,
    config: SimConfig,
    horizon: u64,
) -> Result<SimTrace> {
    Simulator::new(model, process, config)?.run(horizon)
}

/// One record per simulated slot, in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub records: Vec<SlotRecord>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn resets(&self) -> impl Iterator<Item = &ResetEvent> {
        self.records.iter().flat_map(|r| r.resets.iter())
    }

    /// First slot whose residual `||R f||_2` is at most `threshold`.
    pub fn first_balanced_slot(&self, threshold: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.residual() <= threshold)
            .map(|r| r.slot)
    }

    pub fn summary(&self) -> SimSummary {
        SimSummary::of(self)
    }
}

/// Aggregate statistics over a trace. Window statistics cover the last 10%
/// of slots (at least one).
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub slots: u64,
    pub final_residual: f64,
    pub total_resets: usize,
    pub window: usize,
    pub mean_flows: Vec<f64>,
    pub mean_totals: Vec<f64>,
    pub std_totals: Vec<f64>,
}

/// Relative standard deviation above which window flows count as oscillating.
pub const OSCILLATION_REL_STD: f64 = 1e-3;

impl SimSummary {
    pub fn of(trace: &SimTrace) -> Self {
        let n = trace.len();
        let window = n.div_ceil(10).max(1).min(n);
        let tail = &trace.records[n - window..];
        let mean_of = |get: &dyn Fn(&SlotRecord) -> &[f64]| -> Vec<f64> {
            let Some(first) = tail.first() else {
                return Vec::new();
            };
            let mut acc = vec![0.0; get(first).len()];
            for r in tail {
                acc.iter_mut().zip(get(r)).for_each(|(a, x)| *a += x);
            }
            acc.iter_mut().for_each(|a| *a /= window as f64);
            acc
        };
        let mean_flows = mean_of(&|r| &r.flows);
        let mean_totals = mean_of(&|r| &r.totals);
        let std_totals = mean_totals
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let var = tail.iter().map(|r| (r.totals[k] - m) * (r.totals[k] - m)).sum::<f64>()
                    / window as f64;
                libm::sqrt(var)
            })
            .collect();
        SimSummary {
            slots: n as u64,
            final_residual: trace.records.last().map_or(0.0, SlotRecord::residual),
            total_resets: trace.resets().count(),
            window,
            mean_flows,
            mean_totals,
            std_totals,
        }
    }

    /// Some pair's window standard deviation exceeds
    /// [`OSCILLATION_REL_STD`] times its window mean.
    pub fn oscillating(&self) -> bool {
        self.std_totals
            .iter()
            .zip(&self.mean_totals)
            .any(|(s, m)| *m > 0.0 && *s > OSCILLATION_REL_STD * m)
    }
}
