//! Entropy-linear programming over the simplex:
//! `min Σ x_i ln(x_i/ξ_i)` subject to `Ax = b`, `x ∈ S_n(1)`.
//!
//! The inner maximizer is a softmax, `x(λ) ∝ ξ ⊙ exp(−Aᵀλ)`, and
//! `φ(λ) = ⟨λ, b⟩ + ln Σ ξ_i exp(−[Aᵀλ]_i)`.

use ndarray::{Array2, ArrayView1};

use crate::error::{check_dim, Error, Result};
use crate::pdastm::{ConstrainedProblem, DualOracle};
use crate::vecops::{dot, log_sum_exp};

#[derive(Debug, Clone, PartialEq)]
pub struct ElpInstance {
    a: Array2<f64>,
    b: Vec<f64>,
    xi: Vec<f64>,
    log_xi: Vec<f64>,
}

impl ElpInstance {
    pub fn new(a: Array2<f64>, b: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        check_dim(a.ncols(), xi.len())?;
        if xi.is_empty() {
            return Err(Error::InvalidArgument("empty reference measure".into()));
        }
        if xi.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("reference measure must be strictly positive".into()));
        }
        let log_xi = xi.iter().map(|v| v.ln()).collect();
        Ok(Self { a, b, xi, log_xi })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn reference(&self) -> &[f64] {
        &self.xi
    }

    /// `ln ξ − Aᵀλ`
    fn scores(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.b.len(), lambda.len())?;
        let at = self.a.t().dot(&ArrayView1::from(lambda));
        Ok(self.log_xi.iter().zip(at.iter()).map(|(l, v)| l - v).collect())
    }

    pub fn primal_from_dual(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        let s = self.scores(lambda)?;
        let lse = log_sum_exp(&s);
        if !lse.is_finite() {
            return Err(Error::NonFinite { component: "softmax normalizer" });
        }
        Ok(s.iter().map(|v| (v - lse).exp()).collect())
    }

    pub fn dual_value(&self, lambda: &[f64]) -> Result<f64> {
        let s = self.scores(lambda)?;
        let lse = log_sum_exp(&s);
        if !lse.is_finite() {
            return Err(Error::NonFinite { component: "softmax normalizer" });
        }
        Ok(dot(lambda, &self.b) + lse)
    }

    /// `max_j ‖A_{:,j}‖₂²`, the squared `ℓ₁ → ℓ₂` operator norm; the
    /// relative entropy is 1-strongly convex in `ℓ₁` on the simplex.
    pub fn lipschitz_bound(&self) -> f64 {
        self.a
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl ConstrainedProblem for ElpInstance {
    fn primal_dim(&self) -> usize {
        self.xi.len()
    }

    fn eq_dim(&self) -> usize {
        self.b.len()
    }

    fn strong_convexity(&self) -> f64 {
        1.0
    }

    fn inner_solution(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        self.primal_from_dual(lambda)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.xi)
            .map(|(&v, r)| if v > 0.0 { v * (v / r).ln() } else { 0.0 })
            .sum()
    }

    fn eq_residual(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .dot(&ArrayView1::from(x))
            .iter()
            .zip(&self.b)
            .map(|(ax, b)| ax - b)
            .collect()
    }

    fn dual_value(&self, lambda: &[f64]) -> Result<f64> {
        ElpInstance::dual_value(self, lambda)
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(ElpInstance::lipschitz_bound(self))
    }
}

/// The smooth dual oracle of an ELP instance.
pub fn elp_dual_oracle(inst: &ElpInstance) -> DualOracle<'_, ElpInstance> {
    DualOracle::new(inst)
}
