//! Small-γ transport from a cold start and from Sinkhorn duals computed at a
//! larger γ, over several accuracies.

use astm::datagen::{grid_euclidean_cost, normalize_cost, uniform_marginal, GridSpec};
use astm::{run_pdastm, warm_start, AstmOptions, Result, Tolerances, TransportInstance};

fn main() -> Result<()> {
    let spec = GridSpec::new(7)?;
    let cost = normalize_cost(&grid_euclidean_cost(spec))?;
    let inst = TransportInstance::new(cost, uniform_marginal(49, 5)?, uniform_marginal(49, 6)?, 0.01)?;

    for accuracy in [0.05, 0.01, 0.001] {
        let tol = Tolerances::relative(&inst, accuracy)?;
        let cold = run_pdastm(&inst, 1.0, &tol, None, AstmOptions::default())?;
        let lambda0 = warm_start(&inst, 0.1, 0.1)?;
        let warm = run_pdastm(&inst, 1.0, &tol, Some(lambda0), AstmOptions::default())?;
        println!("accuracy {accuracy:<6} cold {:>5} iterations, warm {:>5}", cold.iterations, warm.iterations);
    }
    Ok(())
}
