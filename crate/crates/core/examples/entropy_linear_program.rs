//! Maximum-entropy distribution on six outcomes with a prescribed mean and
//! second moment, solved through its dual.

use ndarray::Array2;

use astm::oracles::elp::elp_dual_oracle;
use astm::{AstmOptions, ElpInstance, Pdastm, Result, Tolerances};

fn main() -> Result<()> {
    let values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let mut a = Array2::zeros((2, values.len()));
    for (j, v) in values.iter().enumerate() {
        a[[0, j]] = *v;
        a[[1, j]] = v * v;
    }
    let inst = ElpInstance::new(a, vec![4.5, 22.0], vec![1.0 / 6.0; 6])?;
    let oracle = elp_dual_oracle(&inst);
    let mut solver = Pdastm::new(&oracle, 1.0, None, AstmOptions::default())?;
    let result = solver.run(&Tolerances::new(1e-6, 1e-6, 0.0)?, |_| {})?;

    println!("distribution {:.5?}", result.x_hat);
    let mean: f64 = result.x_hat.iter().zip(values).map(|(x, v)| x * v).sum();
    println!("mean {mean:.6}, iterations {}, oracle calls {}", result.iterations, result.oracle_calls);
    Ok(())
}
