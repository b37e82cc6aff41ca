use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::manifest::{ExperimentManifest, SolverKind};
use crate::astm::AstmOptions;
use crate::error::{Error, Result};
use crate::oracles::TransportInstance;
use crate::pdastm::{DualOracle, Pdastm, Tolerances};
use crate::sinkhorn::{sinkhorn_solve, warm_start, ScalingMode, SinkhornOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Underflow,
    Budget,
}

impl RunStatus {
    fn from_error(e: &Error) -> Option<Self> {
        match e {
            Error::BudgetExhausted(_) | Error::Nonsmooth { .. } => Some(RunStatus::Budget),
            Error::Underflow(_) | Error::Overflow { .. } | Error::NonFinite { .. } => Some(RunStatus::Underflow),
            _ => None,
        }
    }
}

/// One CSV row. `oracle_calls` counts dual-oracle evaluations for the
/// gradient methods and half-sweeps for Sinkhorn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub manifest_id: String,
    pub solver: SolverKind,
    pub gamma: f64,
    pub accuracy: f64,
    pub rep: usize,
    pub seed: u64,
    pub iterations: usize,
    pub oracle_calls: u64,
    pub wall_nanos: u128,
    pub gap: f64,
    pub eq_infeas: f64,
    pub status: RunStatus,
}

/// Result of one solver on one instance; `plan` is present when it succeeded.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub status: RunStatus,
    pub iterations: usize,
    pub oracle_calls: u64,
    pub wall_nanos: u128,
    pub gap: f64,
    pub eq_infeas: f64,
    pub tolerances: Tolerances,
    pub plan: Option<Array2<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSettings {
    pub l0: f64,
    pub gamma_ws: f64,
    pub accuracy_ws: f64,
    pub max_iterations: usize,
}

impl Default for CellSettings {
    fn default() -> Self {
        Self { l0: 1.0, gamma_ws: 0.1, accuracy_ws: 0.1, max_iterations: 1_000_000 }
    }
}

impl From<&ExperimentManifest> for CellSettings {
    fn from(m: &ExperimentManifest) -> Self {
        Self { l0: m.l0, gamma_ws: m.gamma_ws, accuracy_ws: m.accuracy_ws, max_iterations: m.max_iterations }
    }
}

fn plan_from_flat(p: usize, x: Vec<f64>) -> Array2<f64> {
    Array2::from_shape_vec((p, p), x).expect("plan has p² entries")
}

fn run_gradient(
    inst: &TransportInstance,
    tol: &Tolerances,
    l0: f64,
    lambda0: Option<Vec<f64>>,
    options: AstmOptions,
    last: &mut (usize, u64, f64, f64),
) -> Result<Array2<f64>> {
    let oracle = DualOracle::new(inst);
    let mut solver = Pdastm::new(&oracle, l0, lambda0, options)?;
    let result = solver.run(tol, |t| *last = (t.k, t.oracle_calls, t.gap, t.eq_infeas));
    Ok(plan_from_flat(inst.p(), result?.x_hat))
}

/// Runs one solver to the relative accuracy on `inst`. Numerical breakdowns
/// and exhausted budgets become a status; other errors are returned.
pub fn solve_cell(inst: &TransportInstance, solver: SolverKind, accuracy: f64, settings: &CellSettings) -> Result<CellOutcome> {
    let tolerances = Tolerances::relative(inst, accuracy)?;
    let started = Instant::now();
    let mut last = (0usize, 0u64, f64::NAN, f64::NAN);
    let options = AstmOptions { max_iterations: settings.max_iterations, ..AstmOptions::default() };
    let outcome: Result<Array2<f64>> = match solver {
        SolverKind::Pdastm => run_gradient(inst, &tolerances, settings.l0, None, options, &mut last),
        SolverKind::PdastmWarm => warm_start(inst, settings.gamma_ws.max(inst.gamma()), settings.accuracy_ws)
            .and_then(|lambda| run_gradient(inst, &tolerances, settings.l0, Some(lambda), options, &mut last)),
        SolverKind::Stm => {
            let stm = AstmOptions { adaptive: false, ..options };
            run_gradient(inst, &tolerances, inst.lipschitz_bound(), None, stm, &mut last)
        }
        SolverKind::Sinkhorn | SolverKind::SinkhornLog => {
            let mode = if solver == SolverKind::Sinkhorn { ScalingMode::Direct } else { ScalingMode::Log };
            let opts = SinkhornOptions { max_sweeps: settings.max_iterations };
            sinkhorn_solve(inst, accuracy, mode, opts).map(|out| {
                let s = out.stats;
                last = (s.sweeps, 2 * s.sweeps as u64, s.gap, s.eq_infeas);
                out.plan
            })
        }
    };
    let wall_nanos = started.elapsed().as_nanos();
    let (iterations, oracle_calls, gap, eq_infeas) = last;
    let (status, plan) = match outcome {
        Ok(plan) => (RunStatus::Ok, Some(plan)),
        Err(e) => (RunStatus::from_error(&e).ok_or(e)?, None),
    };
    Ok(CellOutcome { status, iterations, oracle_calls, wall_nanos, gap, eq_infeas, tolerances, plan })
}

/// Runs every `(solver, γ, accuracy, repetition)` cell sequentially and
/// returns records sorted by `(solver, γ, accuracy, repetition)`.
pub fn run_experiment(manifest: &ExperimentManifest) -> Result<Vec<RunRecord>> {
    manifest.validate()?;
    let settings = CellSettings::from(manifest);
    let mut records = Vec::new();
    for rep in 0..manifest.repetitions {
        for &gamma in &manifest.gammas {
            let inst = manifest.instance(rep, gamma)?;
            for &accuracy in &manifest.accuracies {
                for &solver in &manifest.solvers {
                    let out = solve_cell(&inst, solver, accuracy, &settings)?;
                    records.push(RunRecord {
                        manifest_id: manifest.id.clone(),
                        solver,
                        gamma,
                        accuracy,
                        rep,
                        seed: manifest.rep_seed(rep),
                        iterations: out.iterations,
                        oracle_calls: out.oracle_calls,
                        wall_nanos: out.wall_nanos,
                        gap: out.gap,
                        eq_infeas: out.eq_infeas,
                        status: out.status,
                    });
                }
            }
        }
    }
    sort_records(&mut records);
    Ok(records)
}

pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        a.solver
            .cmp(&b.solver)
            .then(a.gamma.total_cmp(&b.gamma))
            .then(a.accuracy.total_cmp(&b.accuracy))
            .then(a.rep.cmp(&b.rep))
    });
}

/// `ε / (4 ln p)`: below this γ the regularized optimum is within `ε` of
/// the unregularized one.
pub fn gamma_star(p: usize, eps_f: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("gamma_star needs p >= 2, got {p}")));
    }
    if !(eps_f > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps_f}")));
    }
    Ok(eps_f / (4.0 * (p as f64).ln()))
}
