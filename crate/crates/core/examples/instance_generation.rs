//! Builds each instance family, writes one to disk and reads it back.
//! Pass an IDX image file as the first argument to also load two digits from it.

use astm::datagen::{grid_exp_cost, load_idx_images, random_images_marginals, smooth_marginal, GridSpec};
use astm::oracles::io::{read_instance, write_instance, Normalization};
use astm::{Result, TransportInstance};

fn main() -> Result<()> {
    let spec = GridSpec::new(4)?;
    let cost = grid_exp_cost(spec);
    println!("exp-euclidean cost, first row: {:.4?}", cost.row(0).to_vec());

    let (mu, nu) = random_images_marginals(spec.points(), 11, 1e-6)?;
    let inst = TransportInstance::new(cost, mu, nu, 0.1)?;
    let dir = std::env::temp_dir().join("astm-instance-demo");
    let manifest = write_instance(&dir, "demo", &inst, Normalization::None)?;
    let back = read_instance(&manifest)?;
    println!("round trip through {}: identical = {}", manifest.display(), back == inst);

    if let Some(path) = std::env::args().nth(1) {
        let images = load_idx_images(path.as_ref(), &[0, 1])?;
        for (i, img) in images.iter().enumerate() {
            let m = smooth_marginal(img, 1e-6);
            println!("image {i}: {} pixels, mass {:.6}", m.len(), m.iter().sum::<f64>());
        }
    }
    Ok(())
}
