//! Sinkhorn's diagonal scaling for entropy-regularized transport, in direct
//! and log-domain form, with the same primal-dual certificate used by the
//! accelerated solver and the warm-start bridge into it.
//!
//! The plan is `diag(u) K diag(v)` with `K = exp(−C/γ)`. A sweep first fixes
//! the rows (`u ← μ ⊘ Kv`) and then the columns (`v ← ν ⊘ Kᵀu`). Scalings map
//! to dual potentials through `λ = −γ(ln u + ½)`, under which the plan is
//! exactly the inner maximizer `x(λ)` of the transport oracle.

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::transport::marginals;
use crate::oracles::TransportInstance;
use crate::pdastm::Tolerances;
use crate::vecops::{dot, log_sum_exp, norm2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    Direct,
    Log,
}

/// Scaling vectors, stored as `u, v` in direct mode and as `ln u, ln v` in
/// log mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalings {
    Direct { u: Vec<f64>, v: Vec<f64> },
    Log { log_u: Vec<f64>, log_v: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingState {
    pub scalings: Scalings,
    /// Completed full sweeps.
    pub iteration: usize,
}

impl ScalingState {
    /// Scalings of the dual point `λ = 0`: `u = v = e^{−1/2}`.
    pub fn at_zero_dual(p: usize, mode: ScalingMode) -> Self {
        let scalings = match mode {
            ScalingMode::Direct => Scalings::Direct { u: vec![(-0.5f64).exp(); p], v: vec![(-0.5f64).exp(); p] },
            ScalingMode::Log => Scalings::Log { log_u: vec![-0.5; p], log_v: vec![-0.5; p] },
        };
        Self { scalings, iteration: 0 }
    }

    pub fn mode(&self) -> ScalingMode {
        match self.scalings {
            Scalings::Direct { .. } => ScalingMode::Direct,
            Scalings::Log { .. } => ScalingMode::Log,
        }
    }

    /// `(ln u, ln v)`.
    pub fn log_scalings(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.scalings {
            Scalings::Direct { u, v } => {
                if u.iter().chain(v).any(|x| !(*x > 0.0) || !x.is_finite()) {
                    return Err(Error::InvalidArgument("scalings must be positive and finite".into()));
                }
                Ok((u.iter().map(|x| x.ln()).collect(), v.iter().map(|x| x.ln()).collect()))
            }
            Scalings::Log { log_u, log_v } => Ok((log_u.clone(), log_v.clone())),
        }
    }
}

/// Dual potentials of a scaling pair: `λ_i = −γ(ln u_i + ½)` and
/// `λ_{p+j} = −γ(ln v_j + ½)`.
pub fn duals_from_scalings(state: &ScalingState, inst: &TransportInstance) -> Result<Vec<f64>> {
    let (lu, lv) = state.log_scalings()?;
    if lu.len() != inst.p() || lv.len() != inst.p() {
        return Err(Error::DimensionMismatch { expected: inst.p(), got: lu.len().min(lv.len()) });
    }
    let g = inst.gamma();
    Ok(lu.iter().chain(&lv).map(|l| -g * (l + 0.5)).collect())
}

/// Final certificate and counters of a Sinkhorn solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornStats {
    pub sweeps: usize,
    pub gap: f64,
    pub eq_infeas: f64,
    pub wall_nanos: u128,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornTrace {
    pub iteration: usize,
    pub gap: f64,
    pub eq_infeas: f64,
    pub wall_nanos: u128,
}

/// Alternating-scaling solver bound to one instance.
pub struct Sinkhorn<'a> {
    inst: &'a TransportInstance,
    kernel: Option<Array2<f64>>,
    /// `C/γ`, used by log mode.
    scaled_cost: Option<Array2<f64>>,
    state: ScalingState,
}

impl<'a> Sinkhorn<'a> {
    /// Direct mode fails right away when an entry of `exp(−C/γ)` is below
    /// the smallest normal double.
    pub fn new(inst: &'a TransportInstance, mode: ScalingMode) -> Result<Self> {
        Self::with_state(inst, ScalingState::at_zero_dual(inst.p(), mode))
    }

    pub fn with_state(inst: &'a TransportInstance, state: ScalingState) -> Result<Self> {
        let g = inst.gamma();
        let (kernel, scaled_cost) = match state.mode() {
            ScalingMode::Direct => {
                let k = inst.cost().mapv(|c| (-c / g).exp());
                if let Some(&min) = k.iter().min_by(|a, b| a.total_cmp(b)) {
                    if min < f64::MIN_POSITIVE {
                        let cmax = inst.cost().iter().copied().fold(0.0, f64::max);
                        return Err(Error::Underflow(format!(
                            "kernel exp(-C/gamma): exponent -{:.1} at gamma = {g:e}",
                            cmax / g
                        )));
                    }
                }
                (Some(k), None)
            }
            ScalingMode::Log => (None, Some(inst.cost().mapv(|c| c / g))),
        };
        Ok(Self { inst, kernel, scaled_cost, state })
    }

    pub fn state(&self) -> &ScalingState {
        &self.state
    }

    pub fn into_state(self) -> ScalingState {
        self.state
    }

    /// `u ← μ ⊘ Kv`; afterwards the row marginals equal `μ`.
    pub fn update_rows(&mut self) -> Result<()> {
        let inst = self.inst;
        match &mut self.state.scalings {
            Scalings::Direct { u, v } => {
                let k = self.kernel.as_ref().expect("direct mode has a kernel");
                for (i, row) in k.rows().into_iter().enumerate() {
                    let kv: f64 = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                    let next = inst.mu()[i] / kv;
                    if !(kv > 0.0) || !next.is_finite() || next == 0.0 {
                        return Err(Error::Underflow(format!("row scaling u[{i}] (Kv = {kv:e})")));
                    }
                    u[i] = next;
                }
            }
            Scalings::Log { log_u, log_v } => {
                let sc = self.scaled_cost.as_ref().expect("log mode has a scaled cost");
                let mut buf = vec![0.0; log_v.len()];
                for (i, row) in sc.rows().into_iter().enumerate() {
                    for (b, (lv, c)) in buf.iter_mut().zip(log_v.iter().zip(row.iter())) {
                        *b = lv - c;
                    }
                    log_u[i] = inst.mu()[i].ln() - log_sum_exp(&buf);
                }
            }
        }
        Ok(())
    }

    /// `v ← ν ⊘ Kᵀu`; afterwards the column marginals equal `ν`.
    pub fn update_cols(&mut self) -> Result<()> {
        let inst = self.inst;
        match &mut self.state.scalings {
            Scalings::Direct { u, v } => {
                let k = self.kernel.as_ref().expect("direct mode has a kernel");
                for (j, col) in k.columns().into_iter().enumerate() {
                    let ktu: f64 = col.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
                    let next = inst.nu()[j] / ktu;
                    if !(ktu > 0.0) || !next.is_finite() || next == 0.0 {
                        return Err(Error::Underflow(format!("column scaling v[{j}] (K^T u = {ktu:e})")));
                    }
                    v[j] = next;
                }
            }
            Scalings::Log { log_u, log_v } => {
                let sc = self.scaled_cost.as_ref().expect("log mode has a scaled cost");
                let mut buf = vec![0.0; log_u.len()];
                for (j, col) in sc.columns().into_iter().enumerate() {
                    for (b, (lu, c)) in buf.iter_mut().zip(log_u.iter().zip(col.iter())) {
                        *b = lu - c;
                    }
                    log_v[j] = inst.nu()[j].ln() - log_sum_exp(&buf);
                }
            }
        }
        Ok(())
    }

    /// One full sweep: rows, then columns.
    pub fn step(&mut self) -> Result<()> {
        self.update_rows()?;
        self.update_cols()?;
        self.state.iteration += 1;
        Ok(())
    }

    /// `diag(u) K diag(v)`.
    pub fn plan(&self) -> Result<Array2<f64>> {
        let p = self.inst.p();
        let plan = match &self.state.scalings {
            Scalings::Direct { u, v } => {
                let k = self.kernel.as_ref().expect("direct mode has a kernel");
                Array2::from_shape_fn((p, p), |(i, j)| u[i] * k[[i, j]] * v[j])
            }
            Scalings::Log { log_u, log_v } => {
                let sc = self.scaled_cost.as_ref().expect("log mode has a scaled cost");
                Array2::from_shape_fn((p, p), |(i, j)| (log_u[i] + log_v[j] - sc[[i, j]]).exp())
            }
        };
        if !plan.iter().all(|x| x.is_finite()) {
            return Err(Error::Underflow("plan entries overflowed".into()));
        }
        Ok(plan)
    }

    /// `(|f(X) + φ(λ)|, ‖A₁X − b₁‖₂)` for `X = plan`, `λ = duals`.
    ///
    /// Since `X = x(λ)` exactly, `f(X) + φ(λ) = −⟨λ, A₁X − b₁⟩`; that form
    /// avoids cancelling two large terms.
    pub fn certificate(&self) -> Result<(f64, f64)> {
        let plan = self.plan()?;
        let (rows, cols) = marginals(&plan);
        let mut r: Vec<f64> = rows.iter().zip(self.inst.mu()).map(|(a, b)| a - b).collect();
        r.extend(cols.iter().zip(self.inst.nu()).map(|(a, b)| a - b));
        let lambda = duals_from_scalings(&self.state, self.inst)?;
        Ok((dot(&lambda, &r).abs(), norm2(&r)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions {
    pub max_sweeps: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        Self { max_sweeps: 1_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct SinkhornOutcome {
    pub plan: Array2<f64>,
    pub state: ScalingState,
    pub stats: SinkhornStats,
}

/// Sweeps from the `λ = 0` scalings until the certificate meets the
/// tolerances relative to `λ = 0` (the same ones the accelerated solver uses).
pub fn sinkhorn_solve(
    inst: &TransportInstance,
    accuracy: f64,
    mode: ScalingMode,
    options: SinkhornOptions,
) -> Result<SinkhornOutcome> {
    sinkhorn_solve_traced(inst, accuracy, mode, options, |_| {})
}

pub fn sinkhorn_solve_traced(
    inst: &TransportInstance,
    accuracy: f64,
    mode: ScalingMode,
    options: SinkhornOptions,
    mut sink: impl FnMut(&SinkhornTrace),
) -> Result<SinkhornOutcome> {
    if !(accuracy > 0.0 && accuracy <= 1.0) {
        return Err(Error::InvalidArgument(format!("accuracy must lie in (0, 1], got {accuracy}")));
    }
    let started = Instant::now();
    let tolerances = Tolerances::relative(inst, accuracy)?;
    let mut solver = Sinkhorn::new(inst, mode)?;
    loop {
        let (gap, eq_infeas) = solver.certificate()?;
        let iteration = solver.state().iteration;
        let wall_nanos = started.elapsed().as_nanos();
        sink(&SinkhornTrace { iteration, gap, eq_infeas, wall_nanos });
        if gap <= tolerances.gap && eq_infeas <= tolerances.eq {
            let plan = solver.plan()?;
            return Ok(SinkhornOutcome {
                plan,
                state: solver.into_state(),
                stats: SinkhornStats { sweeps: iteration, gap, eq_infeas, wall_nanos, tolerances },
            });
        }
        if iteration >= options.max_sweeps {
            return Err(Error::BudgetExhausted(options.max_sweeps));
        }
        solver.step()?;
    }
}

/// Solves the instance at `gamma_ws ≥ γ` and returns its dual potentials,
/// unchanged, as a starting point at the target `γ`. Direct scaling is tried
/// first and log-domain scaling is used if it breaks down.
pub fn warm_start(inst_target: &TransportInstance, gamma_ws: f64, accuracy_ws: f64) -> Result<Vec<f64>> {
    if !(gamma_ws >= inst_target.gamma()) {
        return Err(Error::InvalidArgument(format!(
            "warm-start gamma {gamma_ws} must not be below the target {}",
            inst_target.gamma()
        )));
    }
    let ws = inst_target.with_gamma(gamma_ws)?;
    let outcome = match sinkhorn_solve(&ws, accuracy_ws, ScalingMode::Direct, SinkhornOptions::default()) {
        Ok(o) => o,
        Err(Error::Underflow(_)) | Err(Error::Overflow { .. }) => {
            sinkhorn_solve(&ws, accuracy_ws, ScalingMode::Log, SinkhornOptions::default())?
        }
        Err(e) => return Err(e),
    };
    duals_from_scalings(&outcome.state, &ws)
}
