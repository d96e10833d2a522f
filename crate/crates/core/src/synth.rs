//! Seeded Gaussian-blob datasets.
//!
//! Randomness comes from SplitMix64 (state initialised to the seed, outputs
//! mixed with Stafford's variant 13), so a seed produces the same dataset in
//! any language. Uniforms are `(next_u64 >> 11) · 2⁻⁵³`; normals use the
//! cosine branch of Box–Muller, `sqrt(−2 ln(1 − u₁)) · cos(2π u₂)`.
//! All class centres are drawn first, class by class, each coordinate uniform
//! in `[−center_box, center_box]`; then the points of class 0, class 1, ….

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_CENTER_BOX: f64 = 10.0;
pub const DEFAULT_SIGMA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub class_sizes: Vec<usize>,
    pub dim: usize,
    /// Half-width of the cube class centres are drawn from.
    pub center_box: f64,
    /// Per-coordinate standard deviation around each centre.
    pub sigma: f64,
    pub seed: u64,
}

impl BlobSpec {
    pub fn new(class_sizes: Vec<usize>, dim: usize, seed: u64) -> Self {
        Self {
            class_sizes,
            dim,
            center_box: DEFAULT_CENTER_BOX,
            sigma: DEFAULT_SIGMA,
            seed,
        }
    }

    pub fn uniform(classes: usize, per_class: usize, dim: usize, seed: u64) -> Self {
        Self::new(vec![per_class; classes], dim, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_sizes.is_empty() || self.class_sizes.contains(&0) {
            return Err(Error::Usage("every class needs at least one point".into()));
        }
        if self.dim == 0 {
            return Err(Error::Usage("dimension must be at least 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Usage(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.center_box > 0.0 && self.center_box.is_finite()) {
            return Err(Error::Usage(format!("center box must be positive, got {}", self.center_box)));
        }
        Ok(())
    }

    pub fn total_points(&self) -> usize {
        self.class_sizes.iter().sum()
    }
}

struct Stream(SplitMix64);

impl Stream {
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * std::f64::consts::PI * u2)
    }
}

/// The dataset together with the centres it was drawn around.
pub fn generate_with_centers(spec: &BlobSpec) -> Result<(Dataset, Vec<Vec<f64>>)> {
    spec.validate()?;
    let mut rng = Stream(SplitMix64::seed_from_u64(spec.seed));
    let centers: Vec<Vec<f64>> = spec
        .class_sizes
        .iter()
        .map(|_| {
            (0..spec.dim)
                .map(|_| spec.center_box * (2.0 * rng.uniform() - 1.0))
                .collect()
        })
        .collect();
    let mut points = Vec::with_capacity(spec.total_points() * spec.dim);
    let mut labels = Vec::with_capacity(spec.total_points());
    for (class, (&size, center)) in spec.class_sizes.iter().zip(&centers).enumerate() {
        for _ in 0..size {
            for &c in center {
                points.push(c + spec.sigma * rng.normal());
            }
            labels.push(class);
        }
    }
    let names = (0..centers.len()).map(|c| format!("c{c}")).collect();
    Ok((Dataset::new(points, spec.dim, labels, names)?, centers))
}

pub fn generate(spec: &BlobSpec) -> Result<Dataset> {
    generate_with_centers(spec).map(|(ds, _)| ds)
}

/// A synthetic experiment regime: dataset shape plus line-finding setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthPreset {
    pub name: String,
    pub spec: BlobSpec,
    /// Registry name of the line-finder.
    pub method: &'static str,
    pub lines: usize,
}

/// Number of preliminary clusters used for the 100-class regime.
pub const GIANT_LINES: usize = 24;
/// Number of preliminary clusters used for the 80-class dimension sweep.
pub const SWEEP_LINES: usize = 23;

pub const PRESET_NAMES: &[&str] = &[
    "regular1",
    "regular2",
    "regular5",
    "small",
    "imbalanced1",
    "imbalanced2",
    "giant",
    "dimsweep",
];

/// Looks up a synthetic regime by (case-insensitive) name. `dim` only affects
/// `dimsweep`, whose default is 2.
pub fn preset(name: &str, dim: Option<usize>, seed: u64) -> Result<SynthPreset> {
    let key = name.to_ascii_lowercase();
    let (spec, method, lines) = match key.as_str() {
        "regular1" => (BlobSpec::uniform(10, 100, 2, seed), "brute", 3),
        "regular2" => (BlobSpec::uniform(10, 100, 2, seed), "brute", 4),
        "regular5" => (BlobSpec::uniform(5, 200, 2, seed), "brute", 2),
        "small" => (BlobSpec::uniform(10, 10, 2, seed), "brute", 3),
        "imbalanced1" => {
            let sizes = [vec![10; 5], vec![100; 5]].concat();
            (BlobSpec::new(sizes, 2, seed), "brute", 3)
        }
        "imbalanced2" => (BlobSpec::new((1..=10).map(|i| 10 * i).collect(), 2, seed), "brute", 3),
        "giant" => (BlobSpec::uniform(100, 20, 2, seed), "da", GIANT_LINES),
        "dimsweep" => (BlobSpec::uniform(80, 25, dim.unwrap_or(2), seed), "da", SWEEP_LINES),
        _ => {
            return Err(Error::Usage(format!(
                "unknown preset `{name}` (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    if dim.is_some() && key != "dimsweep" && dim != Some(2) {
        return Err(Error::Usage(format!("preset `{name}` is two-dimensional")));
    }
    Ok(SynthPreset {
        name: key,
        spec,
        method,
        lines,
    })
}
