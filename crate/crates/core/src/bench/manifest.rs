use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::datagen::{
    grid_euclidean_cost, grid_exp_cost, load_idx_images, normalize_cost, random_images_marginals, smooth_marginal,
    uniform_marginal, GridSpec,
};
use crate::error::{Error, Result};
use crate::oracles::TransportInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceFamily {
    /// Euclidean distances on a √p × √p grid with uniform-random marginals.
    Euclidean,
    /// `exp(−0.065·D)` on a √p × √p grid with uniform-random marginals.
    ExpEuclidean,
    /// Pairs of 28×28 images on the pixel grid.
    Mnist,
    /// Euclidean grid cost with half-supported random marginals.
    RandomImages,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Pdastm,
    PdastmWarm,
    Stm,
    Sinkhorn,
    SinkhornLog,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] =
        [SolverKind::Pdastm, SolverKind::PdastmWarm, SolverKind::Stm, SolverKind::Sinkhorn, SolverKind::SinkhornLog];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Pdastm => "pdastm",
            SolverKind::PdastmWarm => "pdastm-warm",
            SolverKind::Stm => "stm",
            SolverKind::Sinkhorn => "sinkhorn",
            SolverKind::SinkhornLog => "sinkhorn-log",
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown solver {s:?}")))
    }
}

/// IDX3 image source for the `mnist` family. Repetition `r` uses pair
/// `r mod pairs.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSource {
    pub path: PathBuf,
    pub pairs: Vec<(usize, usize)>,
}

fn default_gamma_ws() -> f64 {
    0.1
}

fn default_accuracy_ws() -> f64 {
    0.1
}

fn default_l0() -> f64 {
    1.0
}

fn default_max_iterations() -> usize {
    1_000_000
}

fn default_repetitions() -> usize {
    1
}

/// One experiment: every `(solver, γ, accuracy, repetition)` cell is run on
/// the instance seeded with `seed + repetition`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub id: String,
    pub family: InstanceFamily,
    /// Number of support points per marginal.
    pub p: usize,
    pub gammas: Vec<f64>,
    pub accuracies: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    pub solvers: Vec<SolverKind>,
    #[serde(default = "default_gamma_ws")]
    pub gamma_ws: f64,
    #[serde(default = "default_accuracy_ws")]
    pub accuracy_ws: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Divide the cost by its mean. Defaults to on for Euclidean costs and
    /// off for Exp-Euclidean.
    #[serde(default)]
    pub normalize_cost: Option<bool>,
    /// Additive smoothing applied to the marginals (`mnist`, `random-images`).
    #[serde(default)]
    pub smoothing: f64,
    /// Initial curvature guess of the adaptive solvers.
    #[serde(default = "default_l0")]
    pub l0: f64,
    /// Cap on iterations (or Sinkhorn sweeps) per cell.
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub images: Option<ImageSource>,
}

impl ExperimentManifest {
    /// A manifest with the documented defaults for everything optional.
    pub fn new(id: impl Into<String>, family: InstanceFamily, p: usize, gammas: Vec<f64>, accuracies: Vec<f64>, solvers: Vec<SolverKind>) -> Self {
        Self {
            id: id.into(),
            family,
            p,
            gammas,
            accuracies,
            seed: 0,
            solvers,
            gamma_ws: default_gamma_ws(),
            accuracy_ws: default_accuracy_ws(),
            repetitions: default_repetitions(),
            output_dir: None,
            normalize_cost: None,
            smoothing: 0.0,
            l0: default_l0(),
            max_iterations: default_max_iterations(),
            images: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.solvers.is_empty() {
            return bad("manifest lists no solvers".into());
        }
        if self.gammas.is_empty() || self.accuracies.is_empty() {
            return bad("manifest needs at least one gamma and one accuracy".into());
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
            return bad(format!("gamma must be positive, got {g}"));
        }
        if let Some(a) = self.accuracies.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad(format!("accuracy must lie in (0, 1), got {a}"));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if !(self.gamma_ws > 0.0) || !(self.accuracy_ws > 0.0 && self.accuracy_ws <= 1.0) {
            return bad("warm-start gamma and accuracy must be positive".into());
        }
        if !(self.l0 > 0.0) || !self.l0.is_finite() {
            return bad(format!("l0 must be positive, got {}", self.l0));
        }
        if !(self.smoothing >= 0.0) {
            return bad(format!("smoothing must be nonnegative, got {}", self.smoothing));
        }
        match self.family {
            InstanceFamily::Mnist => {
                if self.p != 784 {
                    return bad(format!("the mnist family has p = 784, got {}", self.p));
                }
                match &self.images {
                    Some(src) if !src.pairs.is_empty() => {}
                    _ => return bad("the mnist family needs an image source with at least one pair".into()),
                }
            }
            _ => {
                GridSpec::from_points(self.p)?;
            }
        }
        if self.family == InstanceFamily::RandomImages && self.p % 2 != 0 {
            return bad(format!("the random-images family needs an even p, got {}", self.p));
        }
        Ok(())
    }

    pub fn normalizes_cost(&self) -> bool {
        self.normalize_cost.unwrap_or(self.family != InstanceFamily::ExpEuclidean)
    }

    pub fn rep_seed(&self, rep: usize) -> u64 {
        self.seed.wrapping_add(rep as u64)
    }

    /// The instance of repetition `rep` at regularization `gamma`.
    pub fn instance(&self, rep: usize, gamma: f64) -> Result<TransportInstance> {
        build_instance(self, self.rep_seed(rep), rep, gamma)
    }
}

/// Offset separating the seeds of `μ` and `ν`.
const NU_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

fn build_instance(m: &ExperimentManifest, seed: u64, rep: usize, gamma: f64) -> Result<TransportInstance> {
    let (cost, mu, nu) = match m.family {
        InstanceFamily::Euclidean | InstanceFamily::ExpEuclidean => {
            let grid = GridSpec::from_points(m.p)?;
            let cost = if m.family == InstanceFamily::Euclidean { grid_euclidean_cost(grid) } else { grid_exp_cost(grid) };
            (cost, uniform_marginal(m.p, seed)?, uniform_marginal(m.p, seed.wrapping_add(NU_SEED_OFFSET))?)
        }
        InstanceFamily::RandomImages => {
            let (mu, nu) = random_images_marginals(m.p, seed, m.smoothing)?;
            (grid_euclidean_cost(GridSpec::from_points(m.p)?), mu, nu)
        }
        InstanceFamily::Mnist => {
            let src = m.images.as_ref().ok_or_else(|| Error::InvalidArgument("missing image source".into()))?;
            let (a, b) = src.pairs[rep % src.pairs.len()];
            let mut images = load_idx_images(&src.path, &[a, b])?;
            let nu = images.pop().expect("two images");
            let mu = images.pop().expect("two images");
            let (mu, nu) = if m.smoothing > 0.0 {
                (smooth_marginal(&mu, m.smoothing), smooth_marginal(&nu, m.smoothing))
            } else {
                (mu, nu)
            };
            (grid_euclidean_cost(GridSpec::new(28)?), mu, nu)
        }
    };
    let cost = if m.normalizes_cost() { normalize_cost(&cost)? } else { cost };
    TransportInstance::new(cost, mu, nu, gamma)
}
