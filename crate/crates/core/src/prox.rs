//! Proximal setups: a norm, a 1-strongly convex prox-function `d` and the
//! Bregman divergence it induces.
//!
//! Only the Euclidean instance ships. The trait keeps the accelerated
//! method generic over the setup.

use crate::error::{check_dim, Result};
use crate::vecops::{dot, norm2};

/// A proximal setup over the dual space.
///
/// Implementations must keep `d` 1-strongly convex with respect to `norm`,
/// which makes `bregman(zeta, lambda) >= norm(lambda - zeta)^2 / 2`.
pub trait ProxSetup {
    fn norm(&self, v: &[f64]) -> f64;

    /// Prox-function value `d(λ)`.
    fn prox_value(&self, lambda: &[f64]) -> f64;

    /// A subgradient selection `∇d(λ)`.
    fn prox_gradient(&self, lambda: &[f64]) -> Vec<f64>;

    /// `V[ζ](λ) = d(λ) − d(ζ) − ⟨∇d(ζ), λ − ζ⟩`.
    fn bregman(&self, zeta: &[f64], lambda: &[f64]) -> Result<f64> {
        check_dim(zeta.len(), lambda.len())?;
        let grad = self.prox_gradient(zeta);
        let diff: Vec<f64> = lambda.iter().zip(zeta).map(|(l, z)| l - z).collect();
        Ok(self.prox_value(lambda) - self.prox_value(zeta) - dot(&grad, &diff))
    }

    /// Minimizer of `V[ζ](λ) + α⟨g, λ⟩` over the feasible set, given the
    /// Euclidean projection onto that set.
    fn prox_step(
        &self,
        zeta: &[f64],
        alpha: f64,
        grad: &[f64],
        project: &dyn Fn(&mut [f64]),
    ) -> Result<Vec<f64>>;

    /// `min { ⟨s, λ⟩ : V[center](λ) ≤ r² }` over the whole space.
    fn linear_min_over_ball(&self, center: &[f64], slope: &[f64], radius_sq: f64) -> f64;
}

/// `d(λ) = ½‖λ‖₂²`, so `V[ζ](λ) = ½‖λ − ζ‖₂²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EuclideanSetup;

impl ProxSetup for EuclideanSetup {
    fn norm(&self, v: &[f64]) -> f64 {
        norm2(v)
    }

    fn prox_value(&self, lambda: &[f64]) -> f64 {
        0.5 * dot(lambda, lambda)
    }

    fn prox_gradient(&self, lambda: &[f64]) -> Vec<f64> {
        lambda.to_vec()
    }

    fn bregman(&self, zeta: &[f64], lambda: &[f64]) -> Result<f64> {
        check_dim(zeta.len(), lambda.len())?;
        Ok(0.5
            * zeta
                .iter()
                .zip(lambda)
                .map(|(z, l)| (l - z) * (l - z))
                .sum::<f64>())
    }

    fn prox_step(
        &self,
        zeta: &[f64],
        alpha: f64,
        grad: &[f64],
        project: &dyn Fn(&mut [f64]),
    ) -> Result<Vec<f64>> {
        check_dim(zeta.len(), grad.len())?;
        let mut next: Vec<f64> = zeta.iter().zip(grad).map(|(z, g)| z - alpha * g).collect();
        project(&mut next);
        Ok(next)
    }

    fn linear_min_over_ball(&self, center: &[f64], slope: &[f64], radius_sq: f64) -> f64 {
        // the ball {½‖λ−c‖² ≤ r²} has Euclidean radius √2·r
        dot(slope, center) - (2.0 * radius_sq).sqrt() * norm2(slope)
    }
}
