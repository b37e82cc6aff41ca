//! Primal-dual adaptive similar-triangles method.
//!
//! Solves `min_{x ∈ Q} f(x)` subject to `A₁x = b₁` and `A₂x − b₂ ∈ −K` for a
//! γ-strongly convex `f` by running the accelerated method on the dual
//! `φ(λ) = ⟨λ, b⟩ + max_{x ∈ Q}(−f(x) − ⟨Aᵀλ, x⟩)` over
//! `Λ = H₁* × K*` with the Euclidean setup, and reconstructing a primal point
//! as the `α`-weighted average of the inner maximizers `x(λ_i)`.
//!
//! Stopping is certificate-based: `|f(x̂) + φ(η)|`, `‖A₁x̂ − b₁‖₂` and
//! `ρ(A₂x̂ − b₂, −K)` must all fall below their tolerances.

use std::time::Instant;

use crate::astm::{Astm, AstmOptions, AstmState, Evaluation, SmoothObjective};
use crate::error::{check_dim, Error, Result};
use crate::prox::EuclideanSetup;
use crate::vecops::{all_finite, dot, norm2};

/// A closed convex cone `K`, accessed through its dual cone `K*`.
pub trait DualCone {
    fn dim(&self) -> usize;

    /// Euclidean projection onto `K*`, in place.
    fn project_dual(&self, v: &mut [f64]);

    /// `ρ(v, −K) = max { ⟨μ, v⟩ : μ ∈ K*, ‖μ‖₂ ≤ 1 }`.
    fn dual_distance(&self, v: &[f64]) -> f64;
}

/// `K = K* = ℝ₊ⁿ`, i.e. componentwise inequalities `A₂x ≤ b₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonnegativeOrthant {
    pub dim: usize,
}

impl DualCone for NonnegativeOrthant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn project_dual(&self, v: &mut [f64]) {
        for x in v {
            *x = x.max(0.0);
        }
    }

    fn dual_distance(&self, v: &[f64]) -> f64 {
        v.iter().map(|x| x.max(0.0).powi(2)).sum::<f64>().sqrt()
    }
}

/// The primal problem together with a closed-form inner solver.
///
/// Dual points are laid out as `[λ⁽¹⁾; λ⁽²⁾]` with `λ⁽¹⁾` of length
/// [`eq_dim`](Self::eq_dim) and `λ⁽²⁾` of length `cone().dim()`.
pub trait ConstrainedProblem {
    fn primal_dim(&self) -> usize;

    fn eq_dim(&self) -> usize;

    fn cone(&self) -> Option<&dyn DualCone> {
        None
    }

    /// Modulus γ of strong convexity of `f`.
    fn strong_convexity(&self) -> f64;

    /// `x(λ) = argmax_{x ∈ Q} (−f(x) − ⟨A₁ᵀλ⁽¹⁾ + A₂ᵀλ⁽²⁾, x⟩)`.
    fn inner_solution(&self, lambda: &[f64]) -> Result<Vec<f64>>;

    fn objective(&self, x: &[f64]) -> f64;

    /// `A₁x − b₁`.
    fn eq_residual(&self, x: &[f64]) -> Vec<f64>;

    /// `A₂x − b₂`; empty without a cone block.
    fn cone_residual(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    /// `φ(λ)` given `x = x(λ)`: `−f(x) − ⟨λ, Ax − b⟩`.
    fn dual_value_at(&self, lambda: &[f64], x: &[f64]) -> f64 {
        let m1 = self.eq_dim();
        let r1 = self.eq_residual(x);
        let r2 = self.cone_residual(x);
        -self.objective(x) - dot(&lambda[..m1], &r1) - dot(&lambda[m1..], &r2)
    }

    fn dual_value(&self, lambda: &[f64]) -> Result<f64> {
        let x = self.inner_solution(lambda)?;
        Ok(self.dual_value_at(lambda, &x))
    }

    /// A global Lipschitz bound for `∇φ`, when one is known.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }

    fn dual_dim(&self) -> usize {
        self.eq_dim() + self.cone().map_or(0, |c| c.dim())
    }
}

/// The dual objective `φ` of a [`ConstrainedProblem`] as a smooth oracle.
pub struct DualOracle<'p, P: ?Sized> {
    problem: &'p P,
}

impl<'p, P: ConstrainedProblem + ?Sized> DualOracle<'p, P> {
    pub fn new(problem: &'p P) -> Self {
        Self { problem }
    }

    pub fn problem(&self) -> &'p P {
        self.problem
    }
}

impl<P: ConstrainedProblem + ?Sized> SmoothObjective for DualOracle<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dual_dim()
    }

    fn evaluate(&self, lambda: &[f64]) -> Result<Evaluation> {
        check_dim(self.dim(), lambda.len())?;
        let x = self.problem.inner_solution(lambda)?;
        if !all_finite(&x) {
            return Err(Error::NonFinite { component: "inner solution x(λ)" });
        }
        let mut gradient: Vec<f64> = self.problem.eq_residual(&x).iter().map(|r| -r).collect();
        gradient.extend(self.problem.cone_residual(&x).iter().map(|r| -r));
        if !all_finite(&gradient) {
            return Err(Error::NonFinite { component: "dual gradient ∇φ" });
        }
        let value = self.problem.dual_value_at(lambda, &x);
        if !value.is_finite() {
            return Err(Error::NonFinite { component: "dual value φ" });
        }
        Ok(Evaluation { value, gradient, primal: Some(x) })
    }

    fn value(&self, lambda: &[f64]) -> Result<f64> {
        let v = self.problem.dual_value(lambda)?;
        if !v.is_finite() {
            return Err(Error::NonFinite { component: "dual value φ" });
        }
        Ok(v)
    }

    fn project(&self, lambda: &mut [f64]) {
        if let Some(cone) = self.problem.cone() {
            let m1 = self.problem.eq_dim();
            cone.project_dual(&mut lambda[m1..]);
        }
    }

    fn is_constrained(&self) -> bool {
        self.problem.cone().is_some()
    }
}

/// Explicit dual prox step: `ζ⁽¹⁾ + α(A₁x − b₁)` and
/// `Π_{K*}(ζ⁽²⁾ + α(A₂x − b₂))`.
pub fn dual_zeta_update<P: ConstrainedProblem + ?Sized>(
    zeta: &[f64],
    alpha: f64,
    x: &[f64],
    problem: &P,
) -> Result<Vec<f64>> {
    check_dim(problem.dual_dim(), zeta.len())?;
    check_dim(problem.primal_dim(), x.len())?;
    let m1 = problem.eq_dim();
    let r1 = problem.eq_residual(x);
    let r2 = problem.cone_residual(x);
    let mut next: Vec<f64> = zeta[..m1].iter().zip(&r1).map(|(z, r)| z + alpha * r).collect();
    let mut tail: Vec<f64> = zeta[m1..].iter().zip(&r2).map(|(z, r)| z + alpha * r).collect();
    if let Some(cone) = problem.cone() {
        cone.project_dual(&mut tail);
    }
    next.extend(tail);
    Ok(next)
}

/// Streaming form of `x̂_{k+1} = (α_{k+1} x(λ_{k+1}) + C_k x̂_k) / C_{k+1}`.
pub fn primal_average(prev: &[f64], cumulative: f64, alpha: f64, x_next: &[f64], cumulative_next: f64) -> Vec<f64> {
    if cumulative == 0.0 || prev.is_empty() {
        return x_next.to_vec();
    }
    prev.iter()
        .zip(x_next)
        .map(|(p, x)| (alpha * x + cumulative * p) / cumulative_next)
        .collect()
}

/// Stopping tolerances `(ε̃_f, ε̃_eq, ε̃_in)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub gap: f64,
    pub eq: f64,
    pub cone: f64,
}

impl Tolerances {
    pub fn new(gap: f64, eq: f64, cone: f64) -> Result<Self> {
        for (name, v) in [("gap", gap), ("eq", eq), ("cone", cone)] {
            if !(v >= 0.0) || v.is_nan() {
                return Err(Error::InvalidArgument(format!("{name} tolerance must be nonnegative, got {v}")));
            }
        }
        Ok(Self { gap, eq, cone })
    }

    /// Tolerances that certify an `(ε_f, ε_eq, ε_in)`-solution when the dual
    /// solution satisfies `‖λ*⁽¹⁾‖ ≤ R₁`, `‖λ*⁽²⁾‖ ≤ R₂`.
    pub fn for_targets(eps_f: f64, eps_eq: f64, eps_in: f64, r1: f64, r2: f64) -> Self {
        let scaled = |r: f64, eps: f64| if r > 0.0 { (eps_f / (2.0 * r)).min(eps) } else { eps };
        Self { gap: eps_f, eq: scaled(r1, eps_eq), cone: scaled(r2, eps_in) }
    }

    /// Tolerances relative to the certificate at `λ = 0`.
    ///
    /// At `λ = 0` the exact identity `φ(0) = −f(x(0))` makes the gap vanish,
    /// so the objective tolerance is scaled by `|f(x(0))| + |φ(0)|` instead.
    pub fn relative<P: ConstrainedProblem + ?Sized>(problem: &P, accuracy: f64) -> Result<Self> {
        if !(accuracy > 0.0) {
            return Err(Error::InvalidArgument(format!("accuracy must be positive, got {accuracy}")));
        }
        let zero = vec![0.0; problem.dual_dim()];
        let x0 = problem.inner_solution(&zero)?;
        let f0 = problem.objective(&x0);
        let phi0 = problem.dual_value_at(&zero, &x0);
        let eq0 = norm2(&problem.eq_residual(&x0));
        let cone0 = match problem.cone() {
            Some(cone) => {
                let r2 = problem.cone_residual(&x0);
                let rho = cone.dual_distance(&r2);
                if rho > 0.0 { rho } else { norm2(&r2) }
            }
            None => 0.0,
        };
        if !(f0.is_finite() && phi0.is_finite() && eq0.is_finite()) {
            return Err(Error::NonFinite { component: "certificate at λ = 0" });
        }
        Ok(Self {
            gap: accuracy * (f0.abs() + phi0.abs()),
            eq: accuracy * eq0,
            cone: accuracy * cone0,
        })
    }
}

/// Averaged primal point, last dual point and their certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualResult {
    pub x_hat: Vec<f64>,
    pub eta: Vec<f64>,
    /// `f(x̂) + φ(η)`; its absolute value is the gap.
    pub signed_gap: f64,
    pub gap: f64,
    pub eq_infeas: f64,
    pub cone_infeas: f64,
    pub iterations: usize,
    pub oracle_calls: u64,
    pub cumulative: f64,
}

/// True iff every part of the certificate is within tolerance.
pub fn check_stopping(result: &PrimalDualResult, tol: &Tolerances) -> bool {
    result.gap <= tol.gap && result.eq_infeas <= tol.eq && result.cone_infeas <= tol.cone
}

/// Per-iteration trace record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdastmTrace {
    pub k: usize,
    pub cumulative: f64,
    pub curvature: f64,
    pub signed_gap: f64,
    pub gap: f64,
    pub eq_infeas: f64,
    pub cone_infeas: f64,
    pub oracle_calls: u64,
    pub wall_nanos: u128,
}

/// Step-by-step driver over [`Astm`] with primal averaging.
pub struct Pdastm<'p, P: ?Sized> {
    problem: &'p P,
    inner: Astm<'p, DualOracle<'p, P>, EuclideanSetup>,
    x_hat: Vec<f64>,
    last: Option<PdastmTrace>,
    started: Instant,
}

static EUCLIDEAN: EuclideanSetup = EuclideanSetup;

impl<'p, P: ConstrainedProblem + ?Sized> Pdastm<'p, P> {
    /// `lambda0 = None` starts from `λ₀ = 0`. A warm start keeps the
    /// certificate valid but voids the a priori iteration bound.
    pub fn new(oracle: &'p DualOracle<'p, P>, l0: f64, lambda0: Option<Vec<f64>>, options: AstmOptions) -> Result<Self> {
        let problem = oracle.problem();
        let lambda0 = lambda0.unwrap_or_else(|| vec![0.0; problem.dual_dim()]);
        check_dim(problem.dual_dim(), lambda0.len())?;
        let mut lambda0 = lambda0;
        oracle.project(&mut lambda0);
        let inner = Astm::new(oracle, &EUCLIDEAN, lambda0, l0, options)?;
        Ok(Self { problem, inner, x_hat: Vec::new(), last: None, started: Instant::now() })
    }

    pub fn step(&mut self) -> Result<PdastmTrace> {
        let c_prev = self.inner.state().cumulative;
        let report = self.inner.step()?;
        let state = self.inner.state();
        let x = report
            .at_lambda
            .primal
            .as_ref()
            .ok_or_else(|| Error::Unsupported("dual oracle returned no primal point".into()))?;
        self.x_hat = primal_average(&self.x_hat, c_prev, state.alpha, x, state.cumulative);
        let f = self.problem.objective(&self.x_hat);
        if !f.is_finite() {
            return Err(Error::NonFinite { component: "primal objective f(x̂)" });
        }
        let signed_gap = f + report.phi_eta;
        let eq_infeas = norm2(&self.problem.eq_residual(&self.x_hat));
        let cone_infeas = self
            .problem
            .cone()
            .map_or(0.0, |c| c.dual_distance(&self.problem.cone_residual(&self.x_hat)));
        let trace = PdastmTrace {
            k: state.k,
            cumulative: state.cumulative,
            curvature: report.curvature,
            signed_gap,
            gap: signed_gap.abs(),
            eq_infeas,
            cone_infeas,
            oracle_calls: state.oracle_calls,
            wall_nanos: self.started.elapsed().as_nanos(),
        };
        self.last = Some(trace);
        Ok(trace)
    }

    pub fn state(&self) -> &AstmState {
        self.inner.state()
    }

    pub fn x_hat(&self) -> &[f64] {
        &self.x_hat
    }

    /// Current primal-dual pair and certificate; `None` before the first step.
    pub fn result(&self) -> Option<PrimalDualResult> {
        let t = self.last?;
        let state = self.inner.state();
        Some(PrimalDualResult {
            x_hat: self.x_hat.clone(),
            eta: state.eta.clone(),
            signed_gap: t.signed_gap,
            gap: t.gap,
            eq_infeas: t.eq_infeas,
            cone_infeas: t.cone_infeas,
            iterations: t.k,
            oracle_calls: t.oracle_calls,
            cumulative: t.cumulative,
        })
    }

    /// Steps until the certificate meets `tol`, feeding each trace record to `sink`.
    pub fn run(&mut self, tol: &Tolerances, mut sink: impl FnMut(&PdastmTrace)) -> Result<PrimalDualResult> {
        let cap = self.inner.options().max_iterations;
        loop {
            if self.inner.state().k >= cap {
                return Err(Error::BudgetExhausted(cap));
            }
            let trace = self.step()?;
            sink(&trace);
            let result = self.result().expect("a step was taken");
            if check_stopping(&result, tol) {
                return Ok(result);
            }
        }
    }
}

/// Runs the primal-dual method until the certificate meets `tol`.
pub fn run_pdastm<P: ConstrainedProblem + ?Sized>(
    problem: &P,
    l0: f64,
    tol: &Tolerances,
    lambda0: Option<Vec<f64>>,
    options: AstmOptions,
) -> Result<PrimalDualResult> {
    let oracle = DualOracle::new(problem);
    let mut solver = Pdastm::new(&oracle, l0, lambda0, options)?;
    solver.run(tol, |_| {})
}

/// A priori iteration bound of the primal-dual method for known `L`, `R₁`, `R₂`.
pub fn iteration_bound(l: f64, r1: f64, r2: f64, tol: &Tolerances) -> usize {
    let num = 16.0 * l * (r1 * r1 + r2 * r2);
    let mut k = (num / tol.gap).sqrt().ceil();
    if r1 > 0.0 {
        k = k.max((num / (r1 * tol.eq)).sqrt().ceil());
    }
    if r2 > 0.0 {
        k = k.max((num / (r2 * tol.cone)).sqrt().ceil());
    }
    k as usize
}
