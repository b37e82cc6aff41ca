//! Adaptive similar-triangles method for `min_{λ ∈ Λ} φ(λ)` with a smooth
//! convex `φ`, plus its non-adaptive variant.
//!
//! Each iteration finds the largest root `α` of `C_k + α = M α²`, forms the
//! extrapolated point `λ_{k+1}` on the segment `[ζ_k, η_k]`, takes one prox
//! step on the linear model of `φ` at `λ_{k+1}` and moves `η` along the
//! similar triangle. The adaptive variant doubles `M` until the quadratic
//! upper model holds at `η_{k+1}` and halves the accepted value for the next
//! iteration, so the step size tracks the local curvature instead of a
//! global Lipschitz constant.

use std::time::Instant;

use crate::error::{check_dim, Error, Result};
use crate::prox::ProxSetup;
use crate::vecops::{axpy, combine, dot};

/// Value, gradient and (for dual oracles) the inner primal maximizer at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// `x(λ)` when the objective is a Lagrange dual function.
    pub primal: Option<Vec<f64>>,
}

/// A convex function with Lipschitz gradient over a closed convex set `Λ`.
///
/// `project` is the Euclidean projection onto `Λ`; the default is the
/// identity, i.e. `Λ` is the whole space.
pub trait SmoothObjective {
    fn dim(&self) -> usize;

    /// One oracle call: `φ(λ)` and `∇φ(λ)`.
    fn evaluate(&self, point: &[f64]) -> Result<Evaluation>;

    fn value(&self, point: &[f64]) -> Result<f64> {
        Ok(self.evaluate(point)?.value)
    }

    fn project(&self, _point: &mut [f64]) {}

    fn is_constrained(&self) -> bool {
        false
    }
}

/// The largest root of `M α² − α − C = 0`.
pub fn largest_root(cumulative: f64, curvature: f64) -> Result<f64> {
    if !(curvature > 0.0) || !curvature.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "curvature estimate must be positive and finite, got {curvature}"
        )));
    }
    if !(cumulative >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cumulative weight must be nonnegative, got {cumulative}"
        )));
    }
    Ok((1.0 + (1.0 + 4.0 * curvature * cumulative).sqrt()) / (2.0 * curvature))
}

/// `λ_{k+1} = (α ζ_k + C_k η_k) / C_{k+1}`.
pub fn triangle_extrapolate(
    zeta: &[f64],
    eta: &[f64],
    alpha: f64,
    cumulative: f64,
    cumulative_next: f64,
) -> Result<Vec<f64>> {
    check_dim(zeta.len(), eta.len())?;
    if !(cumulative_next > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "next cumulative weight must be positive, got {cumulative_next}"
        )));
    }
    if cumulative == 0.0 {
        return Ok(zeta.to_vec());
    }
    Ok(combine(alpha, zeta, cumulative, eta, cumulative_next))
}

/// `argmin_{λ ∈ Λ} V[ζ](λ) + α⟨∇φ(λ_{k+1}), λ⟩`; the constant part of the
/// linear model does not move the minimizer.
pub fn model_prox_step<O, S>(
    oracle: &O,
    setup: &S,
    zeta: &[f64],
    alpha: f64,
    gradient: &[f64],
) -> Result<Vec<f64>>
where
    O: SmoothObjective + ?Sized,
    S: ProxSetup + ?Sized,
{
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("step weight must be positive, got {alpha}")));
    }
    let next = setup.prox_step(zeta, alpha, gradient, &|v| oracle.project(v))?;
    if !next.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite { component: "prox step" });
    }
    Ok(next)
}

/// When to stop the outer loop.
pub enum StoppingRule<'f> {
    /// Stop once `k = k_max`. Carries no accuracy guarantee by itself.
    MaxIter(usize),
    /// Stop once `R² / C_k ≤ ε`.
    RadiusBound { radius: f64, eps: f64 },
    /// Stop once the linearized gap over `{V[ζ₀](λ) ≤ R²}` is at most `ε`.
    /// Requires an unconstrained `Λ`.
    LinearizedGap { radius: f64, eps: f64 },
    External(Box<dyn FnMut(&AstmState) -> bool + 'f>),
}

impl std::fmt::Debug for StoppingRule<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::MaxIter(k) => write!(f, "MaxIter({k})"),
            Self::RadiusBound { radius, eps } => write!(f, "RadiusBound({radius}, {eps})"),
            Self::LinearizedGap { radius, eps } => write!(f, "LinearizedGap({radius}, {eps})"),
            Self::External(_) => write!(f, "External(..)"),
        }
    }
}

impl StoppingRule<'_> {
    fn validate(&self) -> Result<()> {
        match *self {
            Self::RadiusBound { radius, eps } | Self::LinearizedGap { radius, eps } => {
                if !(radius > 0.0) || !(eps > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "stopping rule needs R > 0 and eps > 0, got R = {radius}, eps = {eps}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AstmOptions {
    /// Adapt `M_k` by doubling/halving. When off every iteration uses
    /// `M_k = L₀`, which must then be a global Lipschitz bound.
    pub adaptive: bool,
    /// Ceiling on `M_k`; exceeding it is reported as [`Error::Nonsmooth`].
    pub max_curvature: f64,
    /// Hard iteration cap for [`run_astm`].
    pub max_iterations: usize,
    /// Keep `(α_i, λ_i, φ(λ_i), ∇φ(λ_i))` for every iteration.
    pub keep_history: bool,
    /// Relative slack on the upper-model check, absorbing rounding in
    /// `φ(η) − φ(λ)` once the two values agree to machine precision.
    pub check_slack: f64,
}

impl Default for AstmOptions {
    fn default() -> Self {
        Self {
            adaptive: true,
            max_curvature: 1e18,
            max_iterations: 10_000_000,
            keep_history: false,
            check_slack: 4.0 * f64::EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub alpha: f64,
    pub lambda: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Full iterate state of the method.
#[derive(Debug, Clone)]
pub struct AstmState {
    pub k: usize,
    /// `C_k = Σ_{i ≤ k} α_i`.
    pub cumulative: f64,
    /// `α_k`.
    pub alpha: f64,
    /// `L_k`, the seed for the next line search.
    pub lipschitz: f64,
    /// The `M` accepted at the last iteration (0 before the first one).
    pub curvature: f64,
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub zeta0: Vec<f64>,
    /// `φ(η_k)`; `None` before the first iteration.
    pub phi_eta: Option<f64>,
    pub oracle_calls: u64,
    /// `Σ α_i (φ(λ_i) − ⟨∇φ(λ_i), λ_i⟩)`
    pub model_offset: f64,
    /// `Σ α_i ∇φ(λ_i)`; with `model_offset` this is the aggregated linear
    /// model `Σ α_i (φ(λ_i) + ⟨∇φ(λ_i), λ − λ_i⟩)`.
    pub model_slope: Vec<f64>,
    pub history: Option<Vec<HistoryEntry>>,
}

impl AstmState {
    fn new(lambda0: Vec<f64>, l0: f64, keep_history: bool) -> Self {
        let n = lambda0.len();
        Self {
            k: 0,
            cumulative: 0.0,
            alpha: 0.0,
            lipschitz: l0,
            curvature: 0.0,
            eta: lambda0.clone(),
            zeta: lambda0.clone(),
            lambda: lambda0.clone(),
            zeta0: lambda0,
            phi_eta: None,
            oracle_calls: 0,
            model_offset: 0.0,
            model_slope: vec![0.0; n],
            history: keep_history.then(Vec::new),
        }
    }

    /// The aggregated linear model `Σ α_i (φ(λ_i) + ⟨∇φ(λ_i), λ − λ_i⟩)` at `λ`.
    pub fn linear_model(&self, lambda: &[f64]) -> f64 {
        self.model_offset + dot(&self.model_slope, lambda)
    }
}

/// What happened in one outer iteration.
#[derive(Debug, Clone)]
pub struct StepReport {
    /// Number of upper-model checks performed (1 in non-adaptive mode).
    pub trials: usize,
    /// Accepted `M_k`.
    pub curvature: f64,
    /// Oracle output at the accepted `λ_{k+1}`.
    pub at_lambda: Evaluation,
    pub phi_eta: f64,
}

/// One iteration of the outer loop, including the inner doubling search.
/// Commits the accepted iterate into `state`.
pub fn line_search_iteration<O, S>(
    oracle: &O,
    setup: &S,
    state: &mut AstmState,
    options: &AstmOptions,
) -> Result<StepReport>
where
    O: SmoothObjective + ?Sized,
    S: ProxSetup + ?Sized,
{
    let mut m = if options.adaptive { state.lipschitz / 2.0 } else { state.lipschitz };
    let mut trials = 0;
    loop {
        if options.adaptive {
            m *= 2.0;
        }
        if m > options.max_curvature {
            return Err(Error::Nonsmooth {
                m,
                ceiling: options.max_curvature,
                iteration: state.k,
            });
        }
        let alpha = largest_root(state.cumulative, m)?;
        let c_next = state.cumulative + alpha;
        let lambda = triangle_extrapolate(&state.zeta, &state.eta, alpha, state.cumulative, c_next)?;
        let at_lambda = oracle.evaluate(&lambda)?;
        state.oracle_calls += 1;
        if !at_lambda.value.is_finite() {
            return Err(Error::NonFinite { component: "objective value" });
        }
        if !at_lambda.gradient.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite { component: "objective gradient" });
        }
        let zeta = model_prox_step(oracle, setup, &state.zeta, alpha, &at_lambda.gradient)?;
        let eta = combine(alpha, &zeta, state.cumulative, &state.eta, c_next);
        let phi_eta = oracle.value(&eta)?;
        state.oracle_calls += 1;
        if !phi_eta.is_finite() {
            return Err(Error::NonFinite { component: "objective value" });
        }
        trials += 1;

        let accepted = if options.adaptive {
            let step: Vec<f64> = eta.iter().zip(&lambda).map(|(e, l)| e - l).collect();
            let sq = setup.norm(&step).powi(2);
            let upper = at_lambda.value + dot(&at_lambda.gradient, &step) + 0.5 * m * sq;
            let slack = options.check_slack * (at_lambda.value.abs() + phi_eta.abs());
            phi_eta <= upper + slack
        } else {
            true
        };
        if !accepted {
            continue;
        }

        state.model_offset += alpha * (at_lambda.value - dot(&at_lambda.gradient, &lambda));
        axpy(alpha, &at_lambda.gradient, &mut state.model_slope);
        if let Some(history) = state.history.as_mut() {
            history.push(HistoryEntry {
                alpha,
                lambda: lambda.clone(),
                value: at_lambda.value,
                gradient: at_lambda.gradient.clone(),
            });
        }
        state.k += 1;
        state.alpha = alpha;
        state.cumulative = c_next;
        state.lambda = lambda;
        state.zeta = zeta;
        state.eta = eta;
        state.phi_eta = Some(phi_eta);
        state.curvature = m;
        if options.adaptive {
            state.lipschitz = m / 2.0;
        }
        return Ok(StepReport {
            trials,
            curvature: m,
            at_lambda,
            phi_eta,
        });
    }
}

/// `φ(η_k) − min_{V[ζ₀](λ) ≤ R²} Σ (α_i / C_k)(φ(λ_i) + ⟨∇φ(λ_i), λ − λ_i⟩)`
/// computed from a stored history.
///
/// An upper bound on `φ(η_k) − min φ` whenever `V[ζ₀](λ*) ≤ R²`. Only
/// defined for unconstrained `Λ`, where the ball minimization has a closed
/// form.
pub fn linearized_gap<O, S>(
    oracle: &O,
    setup: &S,
    history: &[HistoryEntry],
    zeta0: &[f64],
    radius: f64,
    eta: &[f64],
    cumulative: f64,
) -> Result<f64>
where
    O: SmoothObjective + ?Sized,
    S: ProxSetup + ?Sized,
{
    if oracle.is_constrained() {
        return Err(Error::Unsupported(
            "linearized-gap stopping needs an unconstrained feasible set".into(),
        ));
    }
    if history.is_empty() || !(cumulative > 0.0) {
        return Err(Error::InvalidArgument("linearized gap needs a nonempty history".into()));
    }
    let mut offset = 0.0;
    let mut slope = vec![0.0; zeta0.len()];
    for entry in history {
        check_dim(zeta0.len(), entry.gradient.len())?;
        offset += entry.alpha * (entry.value - dot(&entry.gradient, &entry.lambda));
        axpy(entry.alpha, &entry.gradient, &mut slope);
    }
    let model_min = offset + setup.linear_min_over_ball(zeta0, &slope, radius * radius);
    Ok(oracle.value(eta)? - model_min / cumulative)
}

fn gap_from_state<S: ProxSetup + ?Sized>(setup: &S, state: &AstmState, radius: f64) -> f64 {
    let phi_eta = state.phi_eta.unwrap_or(f64::INFINITY);
    let model_min =
        state.model_offset + setup.linear_min_over_ball(&state.zeta0, &state.model_slope, radius * radius);
    phi_eta - model_min / state.cumulative
}

/// Per-iteration trace record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AstmTrace {
    pub k: usize,
    pub cumulative: f64,
    pub alpha: f64,
    pub curvature: f64,
    pub phi_eta: f64,
    pub oracle_calls: u64,
    pub wall_nanos: u128,
}

/// Step-by-step driver. [`run_astm`] is a loop over [`Astm::step`].
pub struct Astm<'a, O: ?Sized, S: ?Sized> {
    oracle: &'a O,
    setup: &'a S,
    options: AstmOptions,
    state: AstmState,
    started: Instant,
}

impl<'a, O, S> Astm<'a, O, S>
where
    O: SmoothObjective + ?Sized,
    S: ProxSetup + ?Sized,
{
    pub fn new(oracle: &'a O, setup: &'a S, lambda0: Vec<f64>, l0: f64, options: AstmOptions) -> Result<Self> {
        check_dim(oracle.dim(), lambda0.len())?;
        if !(l0 > 0.0) || !l0.is_finite() {
            return Err(Error::InvalidArgument(format!("initial guess L0 must be positive, got {l0}")));
        }
        if !lambda0.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { component: "starting point" });
        }
        Ok(Self {
            oracle,
            setup,
            options,
            state: AstmState::new(lambda0, l0, options.keep_history),
            started: Instant::now(),
        })
    }

    pub fn step(&mut self) -> Result<StepReport> {
        line_search_iteration(self.oracle, self.setup, &mut self.state, &self.options)
    }

    pub fn state(&self) -> &AstmState {
        &self.state
    }

    pub fn into_state(self) -> AstmState {
        self.state
    }

    pub fn options(&self) -> &AstmOptions {
        &self.options
    }

    pub fn trace(&self) -> AstmTrace {
        AstmTrace {
            k: self.state.k,
            cumulative: self.state.cumulative,
            alpha: self.state.alpha,
            curvature: self.state.curvature,
            phi_eta: self.state.phi_eta.unwrap_or(f64::NAN),
            oracle_calls: self.state.oracle_calls,
            wall_nanos: self.started.elapsed().as_nanos(),
        }
    }

    fn should_stop(&self, stop: &mut StoppingRule<'_>) -> bool {
        let state = &self.state;
        match stop {
            StoppingRule::MaxIter(k_max) => state.k >= *k_max,
            _ if state.k == 0 => false,
            StoppingRule::RadiusBound { radius, eps } => *radius * *radius / state.cumulative <= *eps,
            StoppingRule::LinearizedGap { radius, eps } => gap_from_state(self.setup, state, *radius) <= *eps,
            StoppingRule::External(f) => f(state),
        }
    }
}

/// Runs the method from `λ₀` until `stop` fires. Returns `η_k` and the
/// final state.
pub fn run_astm<O, S>(
    oracle: &O,
    setup: &S,
    lambda0: Vec<f64>,
    l0: f64,
    mut stop: StoppingRule<'_>,
    options: AstmOptions,
) -> Result<(Vec<f64>, AstmState)>
where
    O: SmoothObjective + ?Sized,
    S: ProxSetup + ?Sized,
{
    stop.validate()?;
    if matches!(stop, StoppingRule::LinearizedGap { .. }) && oracle.is_constrained() {
        return Err(Error::Unsupported(
            "linearized-gap stopping needs an unconstrained feasible set".into(),
        ));
    }
    let mut solver = Astm::new(oracle, setup, lambda0, l0, options)?;
    while !solver.should_stop(&mut stop) {
        if solver.state.k >= options.max_iterations {
            return Err(Error::BudgetExhausted(options.max_iterations));
        }
        solver.step()?;
    }
    let state = solver.into_state();
    Ok((state.eta.clone(), state))
}
