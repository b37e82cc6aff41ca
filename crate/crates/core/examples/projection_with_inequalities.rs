//! Primal-dual solve of a Euclidean projection onto `{x : Σx = 1, x ≤ 0.4}`,
//! exercising the cone-constrained dual path.

use ndarray::Array2;

use astm::{run_pdastm, AstmOptions, ProjectionProblem, Result, Tolerances};

fn main() -> Result<()> {
    let center = vec![0.9, 0.3, -0.2, 0.5];
    let n = center.len();
    let a_eq = Array2::ones((1, n));
    let a_in = Array2::eye(n);
    let problem = ProjectionProblem::new(1.0, center.clone(), a_eq, vec![1.0], Some((a_in, vec![0.4; n])))?;

    let tol = Tolerances::new(1e-6, 1e-6, 1e-6)?;
    let result = run_pdastm(&problem, 1.0, &tol, None, AstmOptions::default())?;
    println!("center     {center:?}");
    println!("projection {:.6?}", result.x_hat);
    println!(
        "iterations {}, gap {:.2e}, equality residual {:.2e}, cone violation {:.2e}",
        result.iterations, result.gap, result.eq_infeas, result.cone_infeas
    );
    Ok(())
}
