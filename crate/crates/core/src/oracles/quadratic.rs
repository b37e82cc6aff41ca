//! Euclidean projection onto a polyhedron, `min (γ/2)‖x − c‖²` subject to
//! `A₁x = b₁`, `A₂x ≤ b₂`. The inner problem has the closed form
//! `x(λ) = c − (A₁ᵀλ⁽¹⁾ + A₂ᵀλ⁽²⁾)/γ`, which makes it a convenient
//! instance for the cone-constrained path.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{check_dim, Error, Result};
use crate::pdastm::{ConstrainedProblem, DualCone, NonnegativeOrthant};

#[derive(Debug, Clone)]
pub struct ProjectionProblem {
    gamma: f64,
    center: Array1<f64>,
    a_eq: Array2<f64>,
    b_eq: Array1<f64>,
    ineq: Option<(Array2<f64>, Array1<f64>, NonnegativeOrthant)>,
}

impl ProjectionProblem {
    pub fn new(
        gamma: f64,
        center: Vec<f64>,
        a_eq: Array2<f64>,
        b_eq: Vec<f64>,
        ineq: Option<(Array2<f64>, Vec<f64>)>,
    ) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        let n = center.len();
        check_dim(n, a_eq.ncols())?;
        check_dim(a_eq.nrows(), b_eq.len())?;
        let ineq = match ineq {
            Some((a, b)) => {
                check_dim(n, a.ncols())?;
                check_dim(a.nrows(), b.len())?;
                let cone = NonnegativeOrthant { dim: b.len() };
                Some((a, Array1::from(b), cone))
            }
            None => None,
        };
        Ok(Self { gamma, center: Array1::from(center), a_eq, b_eq: Array1::from(b_eq), ineq })
    }
}

fn frobenius_sq(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

impl ConstrainedProblem for ProjectionProblem {
    fn primal_dim(&self) -> usize {
        self.center.len()
    }

    fn eq_dim(&self) -> usize {
        self.b_eq.len()
    }

    fn cone(&self) -> Option<&dyn DualCone> {
        self.ineq.as_ref().map(|(_, _, k)| k as &dyn DualCone)
    }

    fn strong_convexity(&self) -> f64 {
        self.gamma
    }

    fn inner_solution(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dual_dim(), lambda.len())?;
        let m1 = self.eq_dim();
        let mut shift = self.a_eq.t().dot(&ArrayView1::from(&lambda[..m1]));
        if let Some((a, _, _)) = &self.ineq {
            shift += &a.t().dot(&ArrayView1::from(&lambda[m1..]));
        }
        Ok((&self.center - &(shift / self.gamma)).to_vec())
    }

    fn objective(&self, x: &[f64]) -> f64 {
        0.5 * self.gamma
            * x.iter()
                .zip(&self.center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
    }

    fn eq_residual(&self, x: &[f64]) -> Vec<f64> {
        (self.a_eq.dot(&ArrayView1::from(x)) - &self.b_eq).to_vec()
    }

    fn cone_residual(&self, x: &[f64]) -> Vec<f64> {
        match &self.ineq {
            Some((a, b, _)) => (a.dot(&ArrayView1::from(x)) - b).to_vec(),
            None => Vec::new(),
        }
    }

    /// Frobenius norms bound the spectral ones.
    fn lipschitz_bound(&self) -> Option<f64> {
        let a2 = self.ineq.as_ref().map_or(0.0, |(a, _, _)| frobenius_sq(a));
        Some((frobenius_sq(&self.a_eq) + a2) / self.gamma)
    }
}
