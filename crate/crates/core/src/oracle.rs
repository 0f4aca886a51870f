//! Brute-force primal solver used to check the dual route.
//!
//! Maximizes `U(f) + H(f)` over `{f in A, R f = 0}` by projected gradient
//! ascent. The projection onto the intersection of the demand box `A` and
//! the null space of `R` is computed with Dykstra's alternating projections.

use alloc::vec::Vec;

use crate::dual::FlowVector;
use crate::linalg::{max_abs, norm, orthonormal_basis, project_capped_simplex, project_out};
use crate::network::Model;
use crate::pair::{pair_lagrangian_value, PairProblem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Gradient ascent iterations.
    pub iterations: usize,
    /// Dykstra sweeps per projection.
    pub projection_sweeps: usize,
    /// Largest `||R f||_2` accepted for a returned solution.
    pub feasibility_tol: f64,
    /// Instances with more paths are rejected.
    pub max_paths: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            iterations: 10_000,
            projection_sweeps: 2_000,
            feasibility_tol: 1e-6,
            max_paths: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSolution {
    pub flows: FlowVector,
    /// `U(f) + H(f)`
    pub value: f64,
    /// `||R f||_2`
    pub residual: f64,
    pub iterations: usize,
}

/// Primal objective `U(f) + H(f)` of a flow vector.
pub fn primal_value(model: &Model, flows: &[f64]) -> f64 {
    let zero = alloc::vec![0.0; flows.len()];
    model
        .demand()
        .pairs()
        .iter()
        .enumerate()
        .map(|(k, pair)| {
            let range = model.paths().range(k);
            let problem = PairProblem {
                prices: &zero[range.clone()],
                demand: pair.amount,
                eta: pair.eta,
                utility: pair.utility,
            };
            pair_lagrangian_value(&flows[range], &problem)
        })
        .sum()
}

struct Projector<'a> {
    model: &'a Model,
    amounts: Vec<f64>,
    null_basis: Vec<Vec<f64>>,
    sweeps: usize,
}

impl Projector<'_> {
    fn onto_box(&self, v: &mut [f64]) {
        for (k, amount) in self.amounts.iter().enumerate() {
            project_capped_simplex(&mut v[self.model.paths().range(k)], *amount);
        }
    }

    fn onto_balance(&self, v: &mut [f64]) {
        project_out(v, &self.null_basis);
    }

    /// Dykstra's algorithm; the balance set is a subspace so only the box
    /// step needs a correction term.
    fn project(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let mut x = y.to_vec();
        let mut correction = alloc::vec![0.0; n];
        let mut z = alloc::vec![0.0; n];
        for _ in 0..self.sweeps {
            for i in 0..n {
                z[i] = x[i] + correction[i];
            }
            self.onto_box(&mut z);
            for i in 0..n {
                correction[i] = x[i] + correction[i] - z[i];
            }
            let mut next = z.clone();
            self.onto_balance(&mut next);
            let moved = next
                .iter()
                .zip(&x)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let gap = next
                .iter()
                .zip(&z)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            x = next;
            if moved <= 1e-15 * (1.0 + max_abs(&x)) && gap <= 1e-12 {
                break;
            }
        }
        // land inside the box; the balance residual is checked by the caller
        self.onto_box(&mut x);
        x
    }
}

/// Solves the detailed-balance-constrained utility maximization directly.
///
/// The step is `1 / L` with `L = max_pair (2 eta + |U''| * paths)`, the
/// Lipschitz constant of the objective gradient (step 1 when the objective
/// is linear).
pub fn brute_force_primal(model: &Model, config: &OracleConfig) -> Result<PrimalSolution> {
    let n = model.num_paths();
    if n > config.max_paths {
        return Err(Error::OracleTooLarge {
            paths: n,
            limit: config.max_paths,
        });
    }
    let routing = model.routing();
    let null_basis = orthonormal_basis(
        (0..routing.num_channels()).map(|e| routing.row(e).iter().map(|&r| f64::from(r)).collect()),
        1e-10,
    );
    let projector = Projector {
        model,
        amounts: model.demand().amounts(),
        null_basis,
        sweeps: config.projection_sweeps,
    };

    let lipschitz = model
        .demand()
        .pairs()
        .iter()
        .enumerate()
        .map(|(k, p)| 2.0 * p.eta + p.utility.curvature_bound() * model.paths().range(k).len() as f64)
        .fold(0.0, f64::max);
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };

    let gradient = |f: &[f64]| -> Vec<f64> {
        let mut g = alloc::vec![0.0; n];
        for (k, pair) in model.demand().pairs().iter().enumerate() {
            let range = model.paths().range(k);
            let total: f64 = f[range.clone()].iter().sum();
            let slope = pair.utility.slope_at(total.max(0.0));
            for p in range {
                g[p] = slope - 2.0 * pair.eta * f[p];
            }
        }
        g
    };

    let residual_of = |f: &[f64]| norm(&routing.apply(f).expect("dimensions match"));

    let mut f = alloc::vec![0.0; n];
    let mut best = (f.clone(), primal_value(model, &f), 0.0);
    let mut iterations = 0;
    for it in 0..config.iterations {
        iterations = it + 1;
        let g = gradient(&f);
        let y: Vec<f64> = f.iter().zip(&g).map(|(x, d)| x + step * d).collect();
        let next = projector.project(&y);
        let moved = next
            .iter()
            .zip(&f)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        f = next;
        let residual = residual_of(&f);
        if residual <= config.feasibility_tol {
            let value = primal_value(model, &f);
            if value > best.1 {
                best = (f.clone(), value, residual);
            }
        }
        if moved <= 1e-13 * (1.0 + max_abs(&f)) {
            break;
        }
    }
    Ok(PrimalSolution {
        flows: FlowVector::new(best.0)?,
        value: best.1,
        residual: best.2,
        iterations,
    })
}
