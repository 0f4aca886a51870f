//! Small dense helpers over `f64` slices.

use alloc::vec::Vec;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub(crate) fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Orthonormal basis of the span of `rows`, by modified Gram-Schmidt with
/// one re-orthogonalization pass. Rows whose residual falls below
/// `rel_tol` times their original norm are treated as dependent.
pub(crate) fn orthonormal_basis(rows: impl Iterator<Item = Vec<f64>>, rel_tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut v in rows {
        let original = norm(&v);
        if original == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = norm(&v);
        if n > rel_tol * original {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

/// Removes the component of `v` in the span of the orthonormal `basis`.
pub(crate) fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
}

/// Euclidean projection of `v` onto `{x >= 0, sum x <= cap}`.
pub(crate) fn project_capped_simplex(v: &mut [f64], cap: f64) {
    let clipped: f64 = v.iter().map(|x| x.max(0.0)).sum();
    if clipped <= cap {
        v.iter_mut().for_each(|x| *x = x.max(0.0));
        return;
    }
    // projection onto {x >= 0, sum x = cap}: x = (v - theta)^+
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut running = 0.0;
    let mut theta = 0.0;
    for (i, s) in sorted.iter().enumerate() {
        running += s;
        let candidate = (running - cap) / (i + 1) as f64;
        if i == 0 || s - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}
