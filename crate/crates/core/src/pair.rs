//! Per-pair flow response to path prices.
//!
//! Given prices `mu_k` on the candidate paths of one pair, the pair chooses
//! flows `f_k >= 0` with `sum f_k <= a` maximizing
//! `U(sum f) - sum (f_k mu_k + eta f_k^2)`.
//!
//! With `eta > 0` the maximizer is unique and has the waterfilling form
//! `f_k = ((U'(q) - nu - mu_k) / (2 eta))^+` where `nu >= 0` prices the
//! demand cap. With `eta = 0` all flow goes to the cheapest path and only
//! the amount is a flow-control decision.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, Utility};

/// Upper bound on bisection steps; each bracket halves, so this is enough to
/// collapse any finite bracket to adjacent floats.
const MAX_BISECTIONS: usize = 1100;

#[derive(Debug, Clone, Copy)]
pub struct PairProblem<'a> {
    /// Price of each candidate path.
    pub prices: &'a [f64],
    /// Amount requested this slot; must be positive.
    pub demand: f64,
    pub eta: f64,
    pub utility: Utility,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSolution {
    pub flows: Vec<f64>,
    /// `sum flows`
    pub total: f64,
    /// Multiplier of the demand cap `total <= demand`.
    pub multiplier: f64,
}

impl PairSolution {
    fn zero(paths: usize) -> Self {
        PairSolution {
            flows: vec![0.0; paths],
            total: 0.0,
            multiplier: 0.0,
        }
    }
}

/// Default bisection tolerance for a pair with demand `a`.
pub fn default_tolerance(demand: f64) -> f64 {
    1e-9 * demand.max(1.0)
}

impl PairProblem<'_> {
    fn validate(&self) -> Result<()> {
        if let Some(p) = self.prices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite path price {p}")));
        }
        if !(self.demand.is_finite() && self.demand > 0.0) {
            return Err(Error::InvalidInput(format!(
                "pair demand must be positive, got {}",
                self.demand
            )));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidInput(format!("invalid eta {}", self.eta)));
        }
        self.utility.validate()
    }

    fn min_price(&self) -> f64 {
        self.prices.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Waterfilling solution for `eta > 0`.
///
/// If every path is priced at or above `U'(0)` nothing is sent. Otherwise the
/// full demand is tried with `nu = 0`: if the waterfilling flows then exceed
/// the demand, `nu` is raised by bisection until they sum to it; if not,
/// `nu = 0` and the total `q` is found by bisection on the fixed point
/// `sum_k ((U'(q) - mu_k) / (2 eta))^+ = q`.
///
/// The water level `U'(q) - nu` never exceeds `min_k mu_k + 2 eta a` at the
/// optimum (the cheapest path alone would otherwise exceed the demand), and
/// the solver clamps it there, so paths priced that far above the cheapest
/// get exactly zero flow.
pub fn solve_pair_regularized(problem: &PairProblem<'_>, tol: f64) -> Result<PairSolution> {
    problem.validate()?;
    if problem.eta <= 0.0 {
        return Err(Error::WrongSolver { eta: problem.eta });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }

    let PairProblem {
        prices,
        demand,
        eta,
        utility,
    } = *problem;
    let min_price = problem.min_price();
    if prices.is_empty() || min_price >= utility.slope_at_zero() {
        return Ok(PairSolution::zero(prices.len()));
    }

    let flow = |level: f64, price: f64| ((level - price) / (2.0 * eta)).max(0.0);
    let sum_at = |level: f64| prices.iter().map(|&p| flow(level, p)).sum::<f64>();

    let full_level = utility.slope_at(demand);
    let (level, multiplier) = if sum_at(full_level) >= demand {
        // Demand cap binds: find nu with sum = a. `lo` keeps sum >= a, `hi`
        // keeps sum <= a, and the returned nu is `hi` so the cap is never
        // exceeded.
        let mut lo = 0.0;
        let mut hi = full_level - min_price;
        for _ in 0..MAX_BISECTIONS {
            if demand - sum_at(full_level - hi) <= tol / hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sum_at(full_level - mid) >= demand {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (full_level - hi, hi)
    } else {
        // Cap slack: nu = 0 and the fixed point in q. The residual
        // sum(U'(q)) - q is strictly decreasing; `lo` keeps it >= 0 and `hi`
        // keeps it < 0.
        let residual = |q: f64| sum_at(utility.slope_at(q)) - q;
        // stop early enough that U'(q) is within tol of U'(sum f)
        let stop = tol * (2.0 * eta / utility.curvature_bound().max(2.0 * eta));
        let mut lo = 0.0;
        let mut hi = demand;
        for _ in 0..MAX_BISECTIONS {
            if -residual(hi) <= stop {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if residual(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (utility.slope_at(hi), 0.0)
    };

    // only rounding can put the level above the ceiling
    let level = level.min(min_price + 2.0 * eta * demand);
    let flows: Vec<f64> = prices.iter().map(|&p| flow(level, p)).collect();
    let total = flows.iter().sum();
    Ok(PairSolution {
        flows,
        total,
        multiplier,
    })
}

/// Min-price flow control for `eta = 0`.
///
/// All flow goes to the cheapest path; equal prices go to the path with
/// fewer hops, then to the lower index. The amount maximizes
/// `U(q) - q mu*` over `[0, a]`, serving the full demand when the slope at
/// `a` equals the price.
pub fn solve_pair_unregularized(
    problem: &PairProblem<'_>,
    path_lengths: &[usize],
) -> Result<PairSolution> {
    problem.validate()?;
    if problem.eta != 0.0 {
        return Err(Error::WrongSolver { eta: problem.eta });
    }
    if path_lengths.len() != problem.prices.len() {
        return Err(Error::DimensionMismatch {
            what: "path lengths",
            expected: problem.prices.len(),
            actual: path_lengths.len(),
        });
    }
    let Some(best) = cheapest_path(problem.prices, path_lengths) else {
        return Ok(PairSolution::zero(0));
    };
    let price = problem.prices[best];
    let amount = problem.utility.best_response(price, problem.demand);
    let mut solution = PairSolution::zero(problem.prices.len());
    solution.flows[best] = amount;
    solution.total = amount;
    if amount >= problem.demand {
        solution.multiplier = (problem.utility.slope_at(problem.demand) - price).max(0.0);
    }
    Ok(solution)
}

/// Index of the cheapest path, ties broken by hop count and then index.
pub fn cheapest_path(prices: &[f64], path_lengths: &[usize]) -> Option<usize> {
    (0..prices.len()).reduce(|best, k| {
        let better = prices[k] < prices[best]
            || (prices[k] == prices[best] && path_lengths[k] < path_lengths[best]);
        if better {
            k
        } else {
            best
        }
    })
}

/// Dispatches on `eta`: waterfilling when positive, min-price otherwise.
pub fn solve_pair(
    problem: &PairProblem<'_>,
    path_lengths: &[usize],
    tol: f64,
) -> Result<PairSolution> {
    if problem.eta > 0.0 {
        solve_pair_regularized(problem, tol)
    } else {
        solve_pair_unregularized(problem, path_lengths)
    }
}

/// `U(sum f) - sum_k (f_k mu_k + eta f_k^2)`
pub fn pair_lagrangian_value(flows: &[f64], problem: &PairProblem<'_>) -> f64 {
    let total: f64 = flows.iter().sum();
    let cost: f64 = flows
        .iter()
        .zip(problem.prices)
        .map(|(f, mu)| f * mu + problem.eta * f * f)
        .sum();
    problem.utility.value_at(total) - cost
}
