//! Synthetic 2-D benchmark datasets, CSV ingest/export and seeded splits.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Self { features, label }
    }
}

/// A labeled collection of fixed-width feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
    class_names: Vec<String>,
    feature_count: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, class_names: Vec<String>, feature_count: usize) -> Result<Self> {
        if class_names.is_empty() {
            return Err(Error::Schema("dataset needs at least one class".into()));
        }
        if feature_count == 0 {
            return Err(Error::Schema("dataset needs at least one feature".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != feature_count {
                return Err(Error::Schema(format!(
                    "sample {i} has {} features, expected {feature_count}",
                    s.features.len()
                )));
            }
            if s.label >= class_names.len() {
                return Err(Error::Schema(format!(
                    "sample {i} has label {} but only {} classes exist",
                    s.label,
                    class_names.len()
                )));
            }
        }
        Ok(Self {
            samples,
            class_names,
            feature_count,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Per-feature (min, max) over all samples.
    pub fn feature_ranges(&self) -> Option<Vec<(f64, f64)>> {
        let first = self.samples.first()?;
        let mut ranges: Vec<(f64, f64)> = first.features.iter().map(|&v| (v, v)).collect();
        for s in &self.samples[1..] {
            for (r, &v) in ranges.iter_mut().zip(&s.features) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        Some(ranges)
    }

    fn with_samples(&self, samples: Vec<Sample>) -> Dataset {
        Dataset {
            samples,
            class_names: self.class_names.clone(),
            feature_count: self.feature_count,
        }
    }
}

/// Default class names, `class_0`, `class_1`, ...
pub fn default_class_names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("class_{i}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    HalfKernel,
    TwoSpirals,
    ClusterInCluster,
    CrescentMoon,
    Corners,
    Outliers,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 6] = [
        DatasetKind::HalfKernel,
        DatasetKind::TwoSpirals,
        DatasetKind::ClusterInCluster,
        DatasetKind::CrescentMoon,
        DatasetKind::Corners,
        DatasetKind::Outliers,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            DatasetKind::HalfKernel => "half-kernel",
            DatasetKind::TwoSpirals => "two-spirals",
            DatasetKind::ClusterInCluster => "cluster-in-cluster",
            DatasetKind::CrescentMoon => "crescent-moon",
            DatasetKind::Corners => "corners",
            DatasetKind::Outliers => "outliers",
        }
    }

    /// Column header used in the accuracy table.
    pub fn title(self) -> &'static str {
        match self {
            DatasetKind::HalfKernel => "Half Kernel",
            DatasetKind::TwoSpirals => "Two Spirals",
            DatasetKind::ClusterInCluster => "Cluster-in-Cluster",
            DatasetKind::CrescentMoon => "Crescent Moon",
            DatasetKind::Corners => "Corners",
            DatasetKind::Outliers => "Outliers",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DatasetKind::ALL.into_iter().find(|k| k.slug() == s).ok_or_else(|| {
            let valid: Vec<_> = DatasetKind::ALL.iter().map(|k| k.slug()).collect();
            invalid(format!("unknown dataset kind `{s}` (valid: {})", valid.join(", ")))
        })
    }
}

/// Shape constants for each generator. Noise is the standard deviation of
/// the Gaussian jitter added to every point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub half_kernel: HalfKernelParams,
    pub two_spirals: TwoSpiralsParams,
    pub cluster_in_cluster: ClusterInClusterParams,
    pub crescent_moon: CrescentMoonParams,
    pub corners: CornersParams,
    pub outliers: OutliersParams,
}

impl GeneratorConfig {
    pub fn noise(&self, kind: DatasetKind) -> f64 {
        match kind {
            DatasetKind::HalfKernel => self.half_kernel.noise,
            DatasetKind::TwoSpirals => self.two_spirals.noise,
            DatasetKind::ClusterInCluster => self.cluster_in_cluster.noise,
            DatasetKind::CrescentMoon => self.crescent_moon.noise,
            DatasetKind::Corners => self.corners.noise,
            DatasetKind::Outliers => self.outliers.noise,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for kind in DatasetKind::ALL {
            let noise = self.noise(kind);
            if !(noise.is_finite() && noise >= 0.0) {
                return Err(Error::Config(format!("{kind}: noise must be finite and >= 0")));
            }
        }
        let positive = [
            ("half_kernel.inner_radius", self.half_kernel.inner_radius),
            ("half_kernel.outer_radius", self.half_kernel.outer_radius),
            ("two_spirals.turns", self.two_spirals.turns),
            ("cluster_in_cluster.core_sigma", self.cluster_in_cluster.core_sigma),
            ("cluster_in_cluster.ring_radius", self.cluster_in_cluster.ring_radius),
            ("crescent_moon.radius", self.crescent_moon.radius),
            ("corners.half_extent", self.corners.half_extent),
            ("corners.arm_length", self.corners.arm_length),
            ("corners.center_half_width", self.corners.center_half_width),
            ("outliers.blob_sigma", self.outliers.blob_sigma),
            ("outliers.outlier_reach", self.outliers.outlier_reach),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.outliers.outlier_fraction) {
            return Err(Error::Config("outliers.outlier_fraction must be in [0,1)".into()));
        }
        Ok(())
    }
}

/// Two concentric upper half-rings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HalfKernelParams {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub noise: f64,
}

impl Default for HalfKernelParams {
    fn default() -> Self {
        Self {
            inner_radius: 10.0,
            outer_radius: 17.0,
            noise: 1.0,
        }
    }
}

/// Interleaved Archimedean spirals `r = θ`; class 1 is the point reflection
/// of class 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoSpiralsParams {
    pub start_angle: f64,
    pub turns: f64,
    pub noise: f64,
}

impl Default for TwoSpiralsParams {
    fn default() -> Self {
        Self {
            start_angle: PI / 2.0,
            turns: 1.5,
            noise: 0.3,
        }
    }
}

impl TwoSpiralsParams {
    /// Angle of the `i`-th of `n` points on an arm. Spacing grows as
    /// `sqrt(i)` so that points are roughly uniform in arc length.
    pub fn angle(&self, i: usize, n: usize) -> f64 {
        let span = self.turns * 2.0 * PI;
        if n <= 1 {
            return self.start_angle;
        }
        let t = (i as f64 / (n - 1) as f64).sqrt();
        self.start_angle + span * t
    }
}

/// Gaussian core surrounded by a ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterInClusterParams {
    pub core_sigma: f64,
    pub ring_radius: f64,
    pub noise: f64,
}

impl Default for ClusterInClusterParams {
    fn default() -> Self {
        Self {
            core_sigma: 1.0,
            ring_radius: 6.0,
            noise: 0.6,
        }
    }
}

/// Two interleaved half-moons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrescentMoonParams {
    pub radius: f64,
    pub noise: f64,
}

impl Default for CrescentMoonParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            noise: 0.12,
        }
    }
}

/// Four L-shaped corner brackets (class 0) around a filled center square
/// (class 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CornersParams {
    pub half_extent: f64,
    pub arm_length: f64,
    pub center_half_width: f64,
    pub noise: f64,
}

impl Default for CornersParams {
    fn default() -> Self {
        Self {
            half_extent: 6.0,
            arm_length: 4.0,
            center_half_width: 3.0,
            noise: 0.4,
        }
    }
}

/// Two Gaussian blobs at `(∓separation, 0)`; a fraction of each class is
/// replaced by uniform outliers scattered on that class's far side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutliersParams {
    pub blob_sigma: f64,
    pub separation: f64,
    pub outlier_fraction: f64,
    pub outlier_reach: f64,
    pub noise: f64,
}

impl Default for OutliersParams {
    fn default() -> Self {
        Self {
            blob_sigma: 1.0,
            separation: 3.0,
            outlier_fraction: 0.1,
            outlier_reach: 12.0,
            noise: 0.3,
        }
    }
}

/// Generate a two-class dataset with `n_per_class` samples per class,
/// class 0 first. `noise` overrides the jitter in `params`.
pub fn generate_with(
    kind: DatasetKind,
    n_per_class: usize,
    noise: f64,
    seed: u64,
    params: &GeneratorConfig,
) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(invalid("n_per_class must be at least 1"));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(invalid(format!("noise must be finite and >= 0, got {noise}")));
    }
    let mut rng = rng_from_seed(seed);
    let n = n_per_class;
    let mut samples = Vec::with_capacity(2 * n);

    match kind {
        DatasetKind::HalfKernel => {
            let p = &params.half_kernel;
            for (label, radius) in [(0, p.inner_radius), (1, p.outer_radius)] {
                for _ in 0..n {
                    let theta = rng.random::<f64>() * PI;
                    samples.push((label, radius * theta.cos(), radius * theta.sin()));
                }
            }
        }
        DatasetKind::TwoSpirals => {
            let p = &params.two_spirals;
            for label in 0..2 {
                let sign = if label == 0 { 1.0 } else { -1.0 };
                for i in 0..n {
                    let theta = p.angle(i, n);
                    samples.push((label, sign * theta * theta.cos(), sign * theta * theta.sin()));
                }
            }
        }
        DatasetKind::ClusterInCluster => {
            let p = &params.cluster_in_cluster;
            for _ in 0..n {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                samples.push((0, p.core_sigma * x, p.core_sigma * y));
            }
            for _ in 0..n {
                let theta = rng.random::<f64>() * 2.0 * PI;
                samples.push((1, p.ring_radius * theta.cos(), p.ring_radius * theta.sin()));
            }
        }
        DatasetKind::CrescentMoon => {
            let r = params.crescent_moon.radius;
            for _ in 0..n {
                let theta = rng.random::<f64>() * PI;
                samples.push((0, r * theta.cos(), r * theta.sin()));
            }
            for _ in 0..n {
                let theta = rng.random::<f64>() * PI;
                samples.push((1, r * (1.0 - theta.cos()), r * (0.5 - theta.sin())));
            }
        }
        DatasetKind::Corners => {
            let p = &params.corners;
            for _ in 0..n {
                let corner = rng.random_range(0..4usize);
                let sx = if corner & 1 == 0 { -1.0 } else { 1.0 };
                let sy = if corner & 2 == 0 { -1.0 } else { 1.0 };
                // distance walked from the corner along one of its two arms
                let along = rng.random::<f64>() * p.arm_length;
                let (x, y) = if rng.random::<bool>() {
                    (p.half_extent - along, p.half_extent)
                } else {
                    (p.half_extent, p.half_extent - along)
                };
                samples.push((0, sx * x, sy * y));
            }
            for _ in 0..n {
                let x = (rng.random::<f64>() * 2.0 - 1.0) * p.center_half_width;
                let y = (rng.random::<f64>() * 2.0 - 1.0) * p.center_half_width;
                samples.push((1, x, y));
            }
        }
        DatasetKind::Outliers => {
            let p = &params.outliers;
            let n_out = (p.outlier_fraction * n as f64).round() as usize;
            for label in 0..2 {
                let side = if label == 0 { -1.0 } else { 1.0 };
                for i in 0..n {
                    if i < n - n_out {
                        let x: f64 = rng.sample(StandardNormal);
                        let y: f64 = rng.sample(StandardNormal);
                        samples.push((label, side * p.separation + p.blob_sigma * x, p.blob_sigma * y));
                    } else {
                        let near = p.separation + 3.0 * p.blob_sigma;
                        let far = near.max(p.outlier_reach);
                        let x = near + rng.random::<f64>() * (far - near);
                        let y = (rng.random::<f64>() * 2.0 - 1.0) * p.outlier_reach;
                        samples.push((label, side * x, y));
                    }
                }
            }
        }
    }

    let samples = samples
        .into_iter()
        .map(|(label, x, y)| {
            let (dx, dy) = if noise > 0.0 {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                (noise * a, noise * b)
            } else {
                (0.0, 0.0)
            };
            Sample::new(vec![x + dx, y + dy], label)
        })
        .collect();
    Dataset::new(samples, default_class_names(2), 2)
}

/// [`generate_with`] using the default shape constants.
pub fn generate(kind: DatasetKind, n_per_class: usize, noise: f64, seed: u64) -> Result<Dataset> {
    generate_with(kind, n_per_class, noise, seed, &GeneratorConfig::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        let spec = Self { train_fraction, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid(format!(
                "train_fraction must be in (0,1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Shuffle with the split seed and cut at `round(train_fraction * n)`.
pub fn split(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    if ds.is_empty() {
        return Err(invalid("cannot split an empty dataset"));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rng_from_seed(spec.seed));
    let n_train = (spec.train_fraction * ds.len() as f64).round() as usize;
    let pick = |idx: &[usize]| idx.iter().map(|&i| ds.samples[i].clone()).collect();
    Ok((
        ds.with_samples(pick(&order[..n_train])),
        ds.with_samples(pick(&order[n_train..])),
    ))
}

/// Write header-free `f1,...,fn,label` rows.
pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, to_csv_string(ds)).map_err(|e| Error::io(path, e))
}

pub fn to_csv_string(ds: &Dataset) -> String {
    let mut out = String::new();
    for s in ds.samples() {
        for v in &s.features {
            // `{}` prints the shortest representation that round-trips exactly
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", s.label));
    }
    out
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut samples = Vec::new();
    let mut width: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(Error::Schema(format!(
                "line {line_no}: expected at least one feature and a label"
            )));
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Schema(format!(
                    "line {line_no}: expected {w} columns, found {}",
                    fields.len()
                )))
            }
            _ => {}
        }
        let (label_field, feature_fields) = fields.split_last().expect("non-empty");
        let features = feature_fields
            .iter()
            .map(|f| parse_feature(f, line_no))
            .collect::<Result<Vec<_>>>()?;
        let label = label_field.parse::<usize>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("label `{label_field}` is not a non-negative integer"),
        })?;
        samples.push(Sample::new(features, label));
    }
    let width = width.ok_or_else(|| Error::Schema("CSV contains no rows".into()))?;
    let k = samples.iter().map(|s| s.label).max().unwrap_or(0) + 1;
    Dataset::new(samples, default_class_names(k), width - 1)
}

/// Read rows for prediction. Each row holds `feature_count` values,
/// optionally followed by a label column, which is dropped.
pub fn parse_feature_rows(text: &str, feature_count: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let used = match fields.len() {
            n if n == feature_count || n == feature_count + 1 => &fields[..feature_count],
            n => {
                return Err(Error::Schema(format!(
                    "line {line_no}: {n} columns, the model expects {feature_count} features"
                )))
            }
        };
        rows.push(
            used.iter()
                .map(|f| parse_feature(f, line_no))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(rows)
}

fn parse_feature(field: &str, line: usize) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("`{field}` is not a finite number"),
        }),
    }
}
