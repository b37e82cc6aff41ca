//! Regularized transport between two random 10×10 grid histograms, solved by the
//! primal-dual method and by Sinkhorn at the same relative accuracy.

use astm::datagen::{grid_euclidean_cost, normalize_cost, uniform_marginal, GridSpec};
use astm::sinkhorn::SinkhornOptions;
use astm::{run_pdastm, sinkhorn_solve, AstmOptions, ConstrainedProblem, Result, ScalingMode, Tolerances, TransportInstance};

fn main() -> Result<()> {
    let spec = GridSpec::new(10)?;
    let cost = normalize_cost(&grid_euclidean_cost(spec))?;
    let (mu, nu) = (uniform_marginal(spec.points(), 1)?, uniform_marginal(spec.points(), 2)?);

    for gamma in [0.5, 0.1, 0.02] {
        let inst = TransportInstance::new(cost.clone(), mu.clone(), nu.clone(), gamma)?;
        let accuracy = 1e-5;
        let tol = Tolerances::relative(&inst, accuracy)?;
        let t = std::time::Instant::now();
        let pd = run_pdastm(&inst, 1.0, &tol, None, AstmOptions::default())?;
        let pd_time = t.elapsed();
        let t = std::time::Instant::now();
        let sk = sinkhorn_solve(&inst, accuracy, ScalingMode::Log, SinkhornOptions::default())?;
        let sk_time = t.elapsed();
        println!(
            "gamma {gamma:<5} pdastm: {:>5} iterations {:>9.2?} objective {:.6} | sinkhorn: {:>5} sweeps {:>9.2?} objective {:.6}",
            pd.iterations,
            pd_time,
            inst.objective(&pd.x_hat),
            sk.stats.sweeps,
            sk_time,
            inst.objective(sk.plan.as_slice().expect("contiguous plan")),
        );
    }
    Ok(())
}
