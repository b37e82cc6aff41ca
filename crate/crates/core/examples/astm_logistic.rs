//! Adaptive similar-triangles method on a small regularized logistic regression,
//! compared with the same method run on the true global Lipschitz constant.

use astm::{run_astm, AstmOptions, EuclideanSetup, Evaluation, Result, SmoothObjective, StoppingRule};

struct Logistic {
    rows: Vec<[f64; 3]>,
    labels: Vec<f64>,
    ridge: f64,
}

impl SmoothObjective for Logistic {
    fn dim(&self) -> usize {
        3
    }

    fn evaluate(&self, w: &[f64]) -> Result<Evaluation> {
        let n = self.rows.len() as f64;
        let mut value = 0.5 * self.ridge * w.iter().map(|x| x * x).sum::<f64>();
        let mut gradient: Vec<f64> = w.iter().map(|x| self.ridge * x).collect();
        for (row, y) in self.rows.iter().zip(&self.labels) {
            let margin = y * row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
            value += (-margin).exp().ln_1p() / n;
            let s = -y / (1.0 + margin.exp()) / n;
            for (g, a) in gradient.iter_mut().zip(row) {
                *g += s * a;
            }
        }
        Ok(Evaluation { value, gradient, primal: None })
    }
}

fn main() -> Result<()> {
    let rows: Vec<[f64; 3]> = (0..40).map(|i| {
        let t = i as f64 / 40.0;
        [1.0, (7.0 * t).sin(), 2.0 * t - 1.0]
    }).collect();
    let labels = rows.iter().map(|r| if r[1] + 0.5 * r[2] > 0.1 { 1.0 } else { -1.0 }).collect();
    let problem = Logistic { rows, labels, ridge: 1e-3 };
    // Each row has squared norm at most 3, so the loss curvature is at most 3/4.
    let global = 0.75 + problem.ridge;

    for (name, l0, adaptive) in [("adaptive", 1.0, true), ("fixed", global, false)] {
        let opts = AstmOptions { adaptive, ..AstmOptions::default() };
        let (w, state) = run_astm(&problem, &EuclideanSetup, vec![0.0; 3], l0, StoppingRule::MaxIter(300), opts)?;
        println!(
            "{name:>8}: loss {:.8} after {} iterations, {} oracle calls, w = {:.4?}",
            problem.value(&w)?,
            state.k,
            state.oracle_calls,
            w
        );
    }
    Ok(())
}
