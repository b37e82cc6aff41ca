//! Entropy-regularized optimal transport
//!
//! ```text
//! min_{X ≥ 0}  Σ c_ij x_ij + γ Σ x_ij ln x_ij   s.t.  Xe = μ,  Xᵀe = ν
//! ```
//!
//! Dual points are `[α; β]` (row potentials, then column potentials). The
//! inner maximizer is `x_ij(λ) = exp(−1 − (c_ij + α_i + β_j)/γ)` and
//! `φ(λ) = ⟨α, μ⟩ + ⟨β, ν⟩ + γ Σ x_ij(λ)`. Everything is evaluated from the
//! log-domain exponent `s_ij`, so no intermediate kernel `exp(−C/γ)` is ever
//! formed.

use ndarray::Array2;

use crate::error::{check_dim, Error, Result};
use crate::pdastm::ConstrainedProblem;

/// Largest exponent whose `exp` is finite.
pub(crate) const MAX_EXPONENT: f64 = 709.782_712_893_384;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportInstance {
    cost: Array2<f64>,
    mu: Vec<f64>,
    nu: Vec<f64>,
    gamma: f64,
}

pub(crate) fn compensated_sum<'a>(v: impl IntoIterator<Item = &'a f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &x in v {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

fn check_marginal(which: &'static str, v: &[f64]) -> Result<()> {
    if let Some(index) = v.iter().position(|&x| x == 0.0) {
        return Err(Error::ZeroMarginal { which, index });
    }
    if v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("marginal {which} must be positive and finite")));
    }
    let s = compensated_sum(v);
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("marginal {which} sums to {s}, expected 1")));
    }
    Ok(())
}

impl TransportInstance {
    /// Validates a square nonnegative cost, strictly positive probability
    /// marginals and `γ > 0`.
    pub fn new(cost: Array2<f64>, mu: Vec<f64>, nu: Vec<f64>, gamma: f64) -> Result<Self> {
        let p = mu.len();
        if p == 0 {
            return Err(Error::InvalidArgument("empty marginals".into()));
        }
        check_dim(p, nu.len())?;
        check_dim(p, cost.nrows())?;
        check_dim(p, cost.ncols())?;
        if cost.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidArgument("cost entries must be finite and nonnegative".into()));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        check_marginal("mu", &mu)?;
        check_marginal("nu", &nu)?;
        Ok(Self { cost, mu, nu, gamma })
    }

    /// The same marginals and cost at a different regularization.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { gamma, ..self.clone() })
    }

    pub fn p(&self) -> usize {
        self.mu.len()
    }

    pub fn cost(&self) -> &Array2<f64> {
        &self.cost
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn split<'a>(&self, lambda: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
        check_dim(2 * self.p(), lambda.len())?;
        if !lambda.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { component: "dual point" });
        }
        Ok(lambda.split_at(self.p()))
    }

    /// Calls `visit(i, j, s_ij)` row by row and returns `max s_ij`.
    fn for_each_exponent(&self, lambda: &[f64], mut visit: impl FnMut(usize, usize, f64)) -> Result<f64> {
        let (row, col) = self.split(lambda)?;
        let inv = 1.0 / self.gamma;
        let mut max = f64::NEG_INFINITY;
        for (i, crow) in self.cost.rows().into_iter().enumerate() {
            let ai = row[i];
            for (j, &c) in crow.iter().enumerate() {
                let s = -1.0 - (c + ai + col[j]) * inv;
                max = max.max(s);
                visit(i, j, s);
            }
        }
        Ok(max)
    }

    fn overflow_check(&self, max_exponent: f64) -> Result<()> {
        if max_exponent > MAX_EXPONENT || !max_exponent.is_finite() {
            return Err(Error::Overflow { gamma: self.gamma, max_exponent });
        }
        Ok(())
    }

    /// The plan `x(λ)`. Entries far below the smallest double flush to zero.
    pub fn plan(&self, lambda: &[f64]) -> Result<Array2<f64>> {
        let p = self.p();
        let mut plan = Array2::zeros((p, p));
        let max = self.for_each_exponent(lambda, |i, j, s| plan[[i, j]] = s.exp())?;
        self.overflow_check(max)?;
        Ok(plan)
    }

    /// `φ(λ)` through a max-shifted log-sum-exp of the exponents.
    pub fn dual_value(&self, lambda: &[f64]) -> Result<f64> {
        let (row, col) = self.split(lambda)?;
        let linear: f64 = row.iter().zip(&self.mu).map(|(a, m)| a * m).sum::<f64>()
            + col.iter().zip(&self.nu).map(|(b, n)| b * n).sum::<f64>();
        let max = self.for_each_exponent(lambda, |_, _, _| {})?;
        let mut shifted = 0.0;
        self.for_each_exponent(lambda, |_, _, s| shifted += (s - max).exp())?;
        let log_mass = max + shifted.ln();
        self.overflow_check(log_mass)?;
        Ok(linear + self.gamma * log_mass.exp())
    }

    /// `∇φ(λ) = (μ − Xe; ν − Xᵀe)`.
    pub fn dual_gradient(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        let plan = self.plan(lambda)?;
        let (rows, cols) = marginals(&plan);
        let mut g: Vec<f64> = self.mu.iter().zip(&rows).map(|(m, r)| m - r).collect();
        g.extend(self.nu.iter().zip(&cols).map(|(n, c)| n - c));
        Ok(g)
    }

    /// `‖A₁‖²/γ` with `‖A₁‖²_{ℓ₁→ℓ₂} = 2`: every column of the
    /// row/column-sum operator holds exactly two ones.
    pub fn lipschitz_bound(&self) -> f64 {
        2.0 / self.gamma
    }

    /// `⟨C, X⟩ + γ Σ x ln x` with `0 ln 0 = 0`.
    pub fn primal_objective(&self, plan: &[f64]) -> f64 {
        self.cost
            .iter()
            .zip(plan)
            .map(|(c, &x)| c * x + if x > 0.0 { self.gamma * x * x.ln() } else { 0.0 })
            .sum()
    }
}

/// Row and column sums of a plan.
pub fn marginals(plan: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let rows = plan.rows().into_iter().map(|r| r.sum()).collect();
    let cols = plan.columns().into_iter().map(|c| c.sum()).collect();
    (rows, cols)
}

impl ConstrainedProblem for TransportInstance {
    fn primal_dim(&self) -> usize {
        self.p() * self.p()
    }

    fn eq_dim(&self) -> usize {
        2 * self.p()
    }

    fn strong_convexity(&self) -> f64 {
        self.gamma
    }

    fn inner_solution(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        Ok(self.plan(lambda)?.into_raw_vec_and_offset().0)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.primal_objective(x)
    }

    fn eq_residual(&self, x: &[f64]) -> Vec<f64> {
        let p = self.p();
        let mut r = vec![0.0; 2 * p];
        for i in 0..p {
            for j in 0..p {
                let v = x[i * p + j];
                r[i] += v;
                r[p + j] += v;
            }
        }
        for i in 0..p {
            r[i] -= self.mu[i];
            r[p + i] -= self.nu[i];
        }
        r
    }

    /// At the maximizer `−f(x) − ⟨Aᵀλ, x⟩ = γ Σ x_ij`.
    fn dual_value_at(&self, lambda: &[f64], x: &[f64]) -> f64 {
        let p = self.p();
        let linear: f64 = lambda[..p].iter().zip(&self.mu).map(|(a, m)| a * m).sum::<f64>()
            + lambda[p..].iter().zip(&self.nu).map(|(b, n)| b * n).sum::<f64>();
        linear + self.gamma * compensated_sum(x)
    }

    fn dual_value(&self, lambda: &[f64]) -> Result<f64> {
        TransportInstance::dual_value(self, lambda)
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(TransportInstance::lipschitz_bound(self))
    }
}
