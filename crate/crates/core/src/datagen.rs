//! Instance generators: grid cost matrices, seeded random marginals and an
//! IDX3 image reader.
//!
//! Random draws use `ChaCha8Rng::seed_from_u64`, so vectors are identical on
//! every platform for a given seed.

use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracles::transport::compensated_sum;

/// Rate in the Exp-Euclidean cost `exp(−0.065·D)`.
pub const EXP_COST_RATE: f64 = 0.065;

/// Side length of an `m × m` unit grid; `p = m²` points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    m: usize,
}

impl GridSpec {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("grid side must be at least 1".into()));
        }
        Ok(Self { m })
    }

    /// The grid with `p` points; `p` must be a perfect square.
    pub fn from_points(p: usize) -> Result<Self> {
        let m = (p as f64).sqrt().round() as usize;
        if m * m != p {
            return Err(Error::InvalidArgument(format!("p = {p} is not a perfect square")));
        }
        Self::new(m)
    }

    pub fn side(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> usize {
        self.m * self.m
    }

    /// Row-major grid coordinates `(row, col)` with unit spacing.
    pub fn coordinates(&self) -> Vec<[f64; 2]> {
        (0..self.m)
            .flat_map(|r| (0..self.m).map(move |c| [r as f64, c as f64]))
            .collect()
    }
}

/// Pairwise Euclidean distances, `c_ij = ‖src_i − dst_j‖₂`.
pub fn euclidean_cost(src: &[[f64; 2]], dst: &[[f64; 2]]) -> Result<Array2<f64>> {
    if src.is_empty() || dst.is_empty() {
        return Err(Error::InvalidArgument("point sets must be nonempty".into()));
    }
    if src.len() != dst.len() {
        return Err(Error::DimensionMismatch { expected: src.len(), got: dst.len() });
    }
    Ok(Array2::from_shape_fn((src.len(), dst.len()), |(i, j)| {
        (src[i][0] - dst[j][0]).hypot(src[i][1] - dst[j][1])
    }))
}

/// Euclidean cost between the cells of the grid.
pub fn grid_euclidean_cost(spec: GridSpec) -> Array2<f64> {
    let pts = spec.coordinates();
    euclidean_cost(&pts, &pts).expect("grid has at least one point")
}

/// `exp(−0.065·D)` over the grid's pairwise distances.
pub fn grid_exp_cost(spec: GridSpec) -> Array2<f64> {
    grid_euclidean_cost(spec).mapv(|d| (-EXP_COST_RATE * d).exp())
}

/// Divides every entry by the mean entry.
pub fn normalize_cost(cost: &Array2<f64>) -> Result<Array2<f64>> {
    if cost.is_empty() {
        return Err(Error::InvalidArgument("empty cost matrix".into()));
    }
    let mean = compensated_sum(cost.iter()) / cost.len() as f64;
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::InvalidArgument(format!("cost mean must be positive, got {mean}")));
    }
    Ok(cost.mapv(|c| c / mean))
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s = compensated_sum(&v);
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn positive_draws(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        if v.iter().all(|x| *x > 0.0) {
            return v;
        }
    }
}

/// `p` Uniform[0,1) draws divided by their sum.
pub fn uniform_marginal(p: usize, seed: u64) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(normalized(positive_draws(&mut rng, p)))
}

/// Half-supported marginals: `μ` lives on the first `p/2` coordinates and
/// `ν` on the last `p/2`. A positive `smoothing` δ maps each vector to
/// `(v + δ)/(1 + pδ)`.
pub fn random_images_marginals(p: usize, seed: u64, smoothing: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if p == 0 || p % 2 != 0 {
        return Err(Error::InvalidArgument(format!("p must be even and positive, got {p}")));
    }
    if !(smoothing >= 0.0) || !smoothing.is_finite() {
        return Err(Error::InvalidArgument(format!("smoothing must be a finite nonnegative number, got {smoothing}")));
    }
    let half = p / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = normalized(positive_draws(&mut rng, half));
    let b = normalized(positive_draws(&mut rng, half));
    let mut mu = a;
    mu.resize(p, 0.0);
    let mut nu = vec![0.0; half];
    nu.extend(b);
    if smoothing > 0.0 {
        let denom = 1.0 + p as f64 * smoothing;
        for v in [&mut mu, &mut nu] {
            v.iter_mut().for_each(|x| *x = (*x + smoothing) / denom);
            *v = normalized(std::mem::take(v));
        }
    }
    Ok((mu, nu))
}

/// Adds `δ` to every entry and renormalizes, so all entries are positive.
pub fn smooth_marginal(v: &[f64], smoothing: f64) -> Vec<f64> {
    let denom = 1.0 + v.len() as f64 * smoothing;
    normalized(v.iter().map(|x| (x + smoothing) / denom).collect())
}

const IDX3_MAGIC: u32 = 0x0000_0803;

/// Reads images from an IDX3 file and returns each selected image as a
/// row-major probability vector (pixels scaled by 1/255, then normalized).
pub fn load_idx_images(path: &Path, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
    let bytes = std::fs::read(path)?;
    parse_idx_images(&bytes, indices)
}

pub fn parse_idx_images(bytes: &[u8], indices: &[usize]) -> Result<Vec<Vec<f64>>> {
    let word = |k: usize| -> Result<u32> {
        bytes
            .get(4 * k..4 * k + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| Error::Idx("truncated header".into()))
    };
    let magic = word(0)?;
    if magic != IDX3_MAGIC {
        return Err(Error::Idx(format!("bad magic 0x{magic:08x}, expected 0x{IDX3_MAGIC:08x}")));
    }
    let (count, rows, cols) = (word(1)? as usize, word(2)? as usize, word(3)? as usize);
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() < count * size {
        return Err(Error::Idx(format!(
            "truncated file: {count} images of {rows}x{cols} need {} bytes, found {}",
            count * size,
            body.len()
        )));
    }
    indices
        .iter()
        .map(|&i| {
            if i >= count {
                return Err(Error::Idx(format!("image index {i} out of range (file holds {count})")));
            }
            let pixels = &body[i * size..(i + 1) * size];
            if pixels.iter().all(|&b| b == 0) {
                return Err(Error::Idx(format!("image {i} has no lit pixels")));
            }
            Ok(normalized(pixels.iter().map(|&b| b as f64 / 255.0).collect()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn idx_bytes(images: &[Vec<u8>], rows: u32, cols: u32) -> Vec<u8> {
        let mut out = Vec::new();
        for w in [IDX3_MAGIC, images.len() as u32, rows, cols] {
            out.extend_from_slice(&w.to_be_bytes());
        }
        images.iter().for_each(|im| out.extend_from_slice(im));
        out
    }

    #[test]
    fn euclidean_examples() {
        let c = euclidean_cost(&[[0.0, 0.0]], &[[3.0, 4.0]]).unwrap();
        assert_eq!(c[[0, 0]], 5.0);
        let pix = grid_euclidean_cost(GridSpec::new(28).unwrap());
        assert!((pix[[0, 783]] - 27.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((pix[[0, 783]] - 38.1838).abs() < 1e-4);
        assert!(pix.diag().iter().all(|d| *d == 0.0));
        assert!(euclidean_cost(&[], &[]).is_err());
        assert!(euclidean_cost(&[[0.0, 0.0]], &[[0.0, 0.0], [1.0, 1.0]]).is_err());
    }

    #[test]
    fn exp_cost_examples() {
        assert_eq!(grid_exp_cost(GridSpec::new(1).unwrap()), ndarray::array![[1.0]]);
        let c = grid_exp_cost(GridSpec::new(2).unwrap());
        assert!((c[[0, 1]] - 0.937_067).abs() < 1e-6);
        assert!((c[[0, 3]] - 0.912_174_580_213_877).abs() < 1e-12);
        let c = grid_exp_cost(GridSpec::new(10).unwrap());
        for i in 0..100 {
            assert_eq!(c[[i, i]], 1.0);
            for j in 0..100 {
                assert!(c[[i, j]] > 0.0 && c[[i, j]] <= 1.0);
                assert_eq!(c[[i, j]], c[[j, i]]);
            }
        }
        assert!(GridSpec::new(0).is_err());
        assert!(GridSpec::from_points(50).is_err());
        assert_eq!(GridSpec::from_points(49).unwrap().side(), 7);
    }

    #[test]
    fn normalization_examples() {
        let c = normalize_cost(&Array2::from_elem((3, 3), 4.2)).unwrap();
        assert!(c.iter().all(|x| (x - 1.0).abs() < 1e-15));
        let a = ndarray::array![[0.0, 2.0], [2.0, 0.0]];
        assert_eq!(normalize_cost(&a).unwrap(), a);
        let b = ndarray::array![[0.0, 1.0], [1.0, 2.0]];
        assert_eq!(normalize_cost(&b).unwrap(), b);
        assert!(normalize_cost(&Array2::zeros((2, 2))).is_err());
        let g = normalize_cost(&grid_euclidean_cost(GridSpec::new(5).unwrap())).unwrap();
        let twice = normalize_cost(&g).unwrap();
        assert!((&g - &twice).iter().all(|d| d.abs() < 1e-14));
        assert!((g.mean().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_marginal_contract() {
        assert_eq!(uniform_marginal(1, 7).unwrap(), vec![1.0]);
        assert_eq!(uniform_marginal(50, 11).unwrap(), uniform_marginal(50, 11).unwrap());
        assert_ne!(uniform_marginal(50, 11).unwrap(), uniform_marginal(50, 12).unwrap());
        let v = uniform_marginal(100_000, 3).unwrap();
        assert!((compensated_sum(&v) - 1.0).abs() < 1e-12);
        assert!(v.iter().all(|x| *x > 0.0));
        assert!(uniform_marginal(0, 0).is_err());
    }

    #[test]
    fn uniform_marginal_golden_vector() {
        let v = uniform_marginal(4, 42).unwrap();
        let golden = GOLDEN_SEED42_P4;
        for (a, b) in v.iter().zip(golden) {
            assert!((a - b).abs() < 1e-15, "{v:?}");
        }
    }

    const GOLDEN_SEED42_P4: [f64; 4] = [0.25377144707577043, 0.3536502594475693, 0.15910259864412737, 0.23347569483253292];

    #[test]
    fn random_images_examples() {
        let (mu, nu) = random_images_marginals(10, 5, 0.0).unwrap();
        assert_eq!(mu[5..].iter().filter(|x| **x == 0.0).count(), 5);
        assert!(mu[..5].iter().all(|x| *x > 0.0));
        assert!(nu[..5].iter().all(|x| *x == 0.0));
        let err = crate::oracles::TransportInstance::new(Array2::zeros((10, 10)), mu, nu, 1.0).unwrap_err();
        assert!(matches!(err, Error::ZeroMarginal { .. }));

        let d = 1e-6;
        let (mu, nu) = random_images_marginals(4, 9, d).unwrap();
        for x in mu.iter().chain(&nu) {
            assert!(*x >= d / (1.0 + 4.0 * d) * (1.0 - 1e-12));
        }
        assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(random_images_marginals(5, 0, 0.0).is_err());
    }

    #[test]
    fn idx_reader_examples() {
        let full = vec![255u8; 784];
        let mut one = vec![0u8; 784];
        one[300] = 17;
        let bytes = idx_bytes(&[full, one, vec![0u8; 784]], 28, 28);
        let out = parse_idx_images(&bytes, &[0, 1]).unwrap();
        assert!(out[0].iter().all(|x| (x - 1.0 / 784.0).abs() < 1e-15));
        assert_eq!(out[1][300], 1.0);
        assert_eq!(out[1].iter().filter(|x| **x != 0.0).count(), 1);

        assert!(matches!(parse_idx_images(&bytes, &[2]), Err(Error::Idx(_))));
        assert!(matches!(parse_idx_images(&bytes, &[3]), Err(Error::Idx(_))));
        assert!(matches!(parse_idx_images(&bytes[..100], &[0]), Err(Error::Idx(_))));
        let mut bad = bytes.clone();
        bad[3] = 0x01;
        assert!(matches!(parse_idx_images(&bad, &[0]), Err(Error::Idx(_))));
        assert!(matches!(parse_idx_images(&bytes[..8], &[0]), Err(Error::Idx(_))));
    }

    proptest! {
        #[test]
        fn idx_images_sum_to_one(pixels in proptest::collection::vec(any::<u8>(), 16)) {
            prop_assume!(pixels.iter().any(|b| *b != 0));
            let bytes = idx_bytes(&[pixels], 4, 4);
            let out = parse_idx_images(&bytes, &[0]).unwrap();
            prop_assert!((out[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
