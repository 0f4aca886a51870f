use alloc::format;

use crate::{Error, Result};

/// Utility a node pair gains from having an amount `q` served in one slot.
///
/// Both families satisfy `U(0) = 0`, are concave, differentiable and
/// nondecreasing, and have a finite slope at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Utility {
    /// `U(q) = alpha * q`
    Linear { alpha: f64 },
    /// `U(q) = alpha * ln(1 + beta * q)`
    ScaledLog { alpha: f64, beta: f64 },
}

impl Utility {
    pub fn linear(alpha: f64) -> Self {
        Utility::Linear { alpha }
    }

    pub fn scaled_log(alpha: f64, beta: f64) -> Self {
        Utility::ScaledLog { alpha, beta }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Utility::Linear { alpha } => {
                if !(alpha.is_finite() && alpha >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "linear utility needs a finite alpha >= 0, got {alpha}"
                    )));
                }
            }
            Utility::ScaledLog { alpha, beta } => {
                if !(alpha.is_finite() && alpha >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "scaled-log utility needs a finite alpha >= 0, got {alpha}"
                    )));
                }
                if !(beta.is_finite() && beta > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "scaled-log utility needs a finite beta > 0, got {beta}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `U(q)`; `q` must be nonnegative.
    pub fn value(&self, q: f64) -> Result<f64> {
        check_amount(q)?;
        Ok(self.value_at(q))
    }

    /// `U'(q)`; `q` must be nonnegative.
    pub fn derivative(&self, q: f64) -> Result<f64> {
        check_amount(q)?;
        Ok(self.slope_at(q))
    }

    /// `U'(0)`, the price ceiling above which a path never carries flow.
    pub fn slope_at_zero(&self) -> f64 {
        self.slope_at(0.0)
    }

    /// Upper bound on `|U''|` over `q >= 0`.
    pub fn curvature_bound(&self) -> f64 {
        match *self {
            Utility::Linear { .. } => 0.0,
            Utility::ScaledLog { alpha, beta } => alpha * beta * beta,
        }
    }

    pub(crate) fn value_at(&self, q: f64) -> f64 {
        match *self {
            Utility::Linear { alpha } => alpha * q,
            Utility::ScaledLog { alpha, beta } => alpha * libm::log1p(beta * q),
        }
    }

    pub(crate) fn slope_at(&self, q: f64) -> f64 {
        match *self {
            Utility::Linear { alpha } => alpha,
            Utility::ScaledLog { alpha, beta } => alpha * beta / (1.0 + beta * q),
        }
    }

    /// `argmax_{q in [0, cap]} U(q) - q * price`. When the slope at `cap`
    /// equals the price the full amount is served.
    pub(crate) fn best_response(&self, price: f64, cap: f64) -> f64 {
        if self.slope_at(cap) >= price {
            return cap;
        }
        if self.slope_at(0.0) <= price {
            return 0.0;
        }
        match *self {
            // unreachable: a linear slope is either >= or < the price everywhere
            Utility::Linear { .. } => 0.0,
            Utility::ScaledLog { alpha, beta } => (alpha / price - 1.0 / beta).clamp(0.0, cap),
        }
    }
}

fn check_amount(q: f64) -> Result<()> {
    if q.is_nan() || q < 0.0 {
        return Err(Error::InvalidInput(format!(
            "utility evaluated at negative amount {q}"
        )));
    }
    Ok(())
}
