//! The six classifiers behind one interface, and the fuzzify → render →
//! Datamart → CNN path.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::fnn::FnnConfig;
use crate::baselines::{
    predict_bayes, train_bayes, train_fnn, train_forest, train_svm, train_tree, FnnModel, ForestConfig, ForestModel,
    GaussianClassStats, SvmConfig, SvmModel, TreeConfig, TreeNode,
};
use crate::cnn::{self, argmax, Architecture, CnnModel, LearningCurve, TrainConfig};
use crate::datasets::Dataset;
use crate::error::{invalid, Error, Result};
use crate::fuzzy::{fit_partitions, fuzzify, Family, TermPartition, TERM_COUNT};
use crate::imagemap::{export_datamart, import_datamart, render, ImageCanvas, LayoutSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tree,
    Svm,
    Bayes,
    Forest,
    Fnn,
    Fcnn,
}

impl ModelKind {
    /// Row order of the accuracy table.
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Tree,
        ModelKind::Svm,
        ModelKind::Bayes,
        ModelKind::Forest,
        ModelKind::Fnn,
        ModelKind::Fcnn,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::Svm => "svm",
            ModelKind::Bayes => "bayes",
            ModelKind::Forest => "forest",
            ModelKind::Fnn => "fnn",
            ModelKind::Fcnn => "fcnn",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ModelKind::Tree => "Decision Tree",
            ModelKind::Svm => "Support Vector Machine",
            ModelKind::Bayes => "Bayes' Classifier",
            ModelKind::Forest => "Random Forest",
            ModelKind::Fnn => "Fuzzy Neural Network",
            ModelKind::Fcnn => "Fuzzy Convolution Neural Network",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for ModelKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL.into_iter().find(|k| k.slug() == s).ok_or_else(|| {
            let valid: Vec<_> = ModelKind::ALL.iter().map(|k| k.slug()).collect();
            invalid(format!("unknown model kind `{s}` (valid: {})", valid.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FcnnConfig {
    pub family: Family,
    pub layout: LayoutSpec,
    pub architecture: Architecture,
    pub train: TrainConfig,
}

impl Default for FcnnConfig {
    fn default() -> Self {
        Self {
            family: Family::Trapezoid,
            layout: LayoutSpec::default(),
            architecture: Architecture::default(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    pub tree: TreeConfig,
    pub forest: ForestConfig,
    pub svm: SvmConfig,
    pub fnn: FnnConfig,
    pub fcnn: FcnnConfig,
}

/// Fuzzifier, image converter and CNN bundled for raw-feature prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcnnClassifier {
    pub partitions: Vec<TermPartition>,
    pub layout: LayoutSpec,
    pub cnn: CnnModel,
}

impl FcnnClassifier {
    pub fn image(&self, features: &[f64]) -> Result<ImageCanvas> {
        render(&fuzzify(features, &self.partitions)?, &self.layout)
    }

    pub fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.cnn.forward(&self.image(features)?)
    }
}

/// Render every sample of `ds` with the given partitions.
pub fn render_dataset(
    ds: &Dataset,
    partitions: &[TermPartition],
    layout: &LayoutSpec,
) -> Result<Vec<(ImageCanvas, usize)>> {
    ds.samples()
        .iter()
        .map(|s| Ok((render(&fuzzify(&s.features, partitions)?, layout)?, s.label)))
        .collect()
}

pub fn dataset_rows(ds: &Dataset) -> Vec<Vec<f64>> {
    ds.samples().iter().map(|s| s.features.clone()).collect()
}

/// Fit term sets on the training range, render, and train the CNN. When
/// `datamart` is given, images are exported there and the CNN trains on
/// what is read back.
pub fn train_fcnn(
    train: &Dataset,
    cfg: &FcnnConfig,
    seed: u64,
    datamart: Option<&Path>,
) -> Result<(FcnnClassifier, LearningCurve)> {
    if train.is_empty() {
        return Err(invalid("training set is empty"));
    }
    let partitions = fit_partitions(&dataset_rows(train), cfg.family)?;
    cfg.layout.geometry(partitions.len(), TERM_COUNT)?;
    let mut images = render_dataset(train, &partitions, &cfg.layout)?;
    if let Some(root) = datamart {
        export_datamart(&images, train.class_names(), root)?;
        images = import_datamart(root, Some(cfg.layout.image_side))?
            .into_export_order()
            .relabel_to(train.class_names())?;
    }
    let (cnn, curve) = train_cnn_on_images(&images, train.class_count(), cfg, seed)?;
    Ok((
        FcnnClassifier {
            partitions,
            layout: cfg.layout.clone(),
            cnn,
        },
        curve,
    ))
}

/// Build the default network and train it on rendered images.
pub fn train_cnn_on_images(
    images: &[(ImageCanvas, usize)],
    class_count: usize,
    cfg: &FcnnConfig,
    seed: u64,
) -> Result<(CnnModel, LearningCurve)> {
    let model = CnnModel::desk_scale(cfg.layout.image_side, class_count, &cfg.architecture, seed)?;
    let train_cfg = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    cnn::train(model, images, &train_cfg)
}

pub const MANIFEST_FILE: &str = "pipeline.json";

/// What a rendered Datamart needs to be turned back into a raw-feature
/// classifier: the fitted term sets, the layout and the class order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderManifest {
    pub class_names: Vec<String>,
    pub partitions: Vec<TermPartition>,
    pub layout: LayoutSpec,
}

impl RenderManifest {
    pub fn path(root: &Path) -> PathBuf {
        root.join(MANIFEST_FILE)
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        let path = Self::path(root);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Schema(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = Self::path(root);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: RenderManifest =
            serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        for p in &m.partitions {
            p.validate()?;
        }
        m.layout.geometry(m.partitions.len(), TERM_COUNT)?;
        Ok(m)
    }
}

/// Fit term sets on all of `ds`, render every sample and export a Datamart
/// with its manifest at `root`.
pub fn render_to_datamart(ds: &Dataset, family: Family, layout: &LayoutSpec, root: &Path) -> Result<RenderManifest> {
    if ds.is_empty() {
        return Err(invalid("dataset is empty"));
    }
    let partitions = fit_partitions(&dataset_rows(ds), family)?;
    layout.geometry(partitions.len(), TERM_COUNT)?;
    let images = render_dataset(ds, &partitions, layout)?;
    export_datamart(&images, ds.class_names(), root)?;
    let manifest = RenderManifest {
        class_names: ds.class_names().to_vec(),
        partitions,
        layout: layout.clone(),
    };
    manifest.save(root)?;
    Ok(manifest)
}

/// Train the CNN on a Datamart written by [`render_to_datamart`]. The
/// manifest's layout wins over the one in `cfg`.
pub fn train_fcnn_from_datamart(root: &Path, cfg: &FcnnConfig, seed: u64) -> Result<(FcnnClassifier, LearningCurve)> {
    let manifest = RenderManifest::load(root)?;
    let images = import_datamart(root, Some(manifest.layout.image_side))?
        .into_export_order()
        .relabel_to(&manifest.class_names)?;
    if images.is_empty() {
        return Err(invalid(format!("{} holds no images", root.display())));
    }
    let cfg = FcnnConfig {
        layout: manifest.layout.clone(),
        ..cfg.clone()
    };
    let (cnn, curve) = train_cnn_on_images(&images, manifest.class_names.len(), &cfg, seed)?;
    Ok((
        FcnnClassifier {
            partitions: manifest.partitions,
            layout: manifest.layout,
            cnn,
        },
        curve,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Tree { root: TreeNode, class_count: usize },
    Forest(ForestModel),
    Bayes(GaussianClassStats),
    Svm(SvmModel),
    Fnn(FnnModel),
    Fcnn(FcnnClassifier),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Tree { .. } => ModelKind::Tree,
            TrainedModel::Forest(_) => ModelKind::Forest,
            TrainedModel::Bayes(_) => ModelKind::Bayes,
            TrainedModel::Svm(_) => ModelKind::Svm,
            TrainedModel::Fnn(_) => ModelKind::Fnn,
            TrainedModel::Fcnn(_) => ModelKind::Fcnn,
        }
    }

    /// Per-class scores; the positive-class entry drives ROC curves.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Tree { root, class_count } => {
                let mut p = root.predict_proba(x);
                p.resize(*class_count, 0.0);
                Ok(p)
            }
            TrainedModel::Forest(m) => Ok(m.predict_proba(x)),
            TrainedModel::Bayes(m) => m.posterior(x),
            TrainedModel::Svm(m) => Ok(m.predict_proba(x)),
            TrainedModel::Fnn(m) => m.predict_proba(x),
            TrainedModel::Fcnn(m) => m.predict_proba(x),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        match self {
            TrainedModel::Tree { root, .. } => Ok(root.predict(x)),
            TrainedModel::Forest(m) => Ok(m.predict(x)),
            TrainedModel::Bayes(m) => Ok(predict_bayes(m, x)?.0),
            TrainedModel::Svm(m) => Ok(m.predict(x)),
            TrainedModel::Fnn(_) | TrainedModel::Fcnn(_) => Ok(argmax(&self.predict_proba(x)?)),
        }
    }

    pub fn input_features(&self) -> Option<usize> {
        match self {
            TrainedModel::Bayes(m) => Some(m.feature_count),
            TrainedModel::Svm(SvmModel::Linear { weights, .. }) => Some(weights.len()),
            TrainedModel::Fnn(m) => Some(m.partitions.len()),
            TrainedModel::Fcnn(m) => Some(m.partitions.len()),
            _ => None,
        }
    }
}

/// Train one classifier of the given kind. `datamart` only matters for the
/// FCNN path.
pub fn train_model(
    kind: ModelKind,
    train: &Dataset,
    cfg: &ModelsConfig,
    seed: u64,
    datamart: Option<&Path>,
) -> Result<(TrainedModel, Option<LearningCurve>)> {
    Ok(match kind {
        ModelKind::Tree => (
            TrainedModel::Tree {
                root: train_tree(train, &cfg.tree)?,
                class_count: train.class_count(),
            },
            None,
        ),
        ModelKind::Forest => (TrainedModel::Forest(train_forest(train, &cfg.forest, seed)?), None),
        ModelKind::Bayes => (TrainedModel::Bayes(train_bayes(train)?), None),
        ModelKind::Svm => (TrainedModel::Svm(train_svm(train, &cfg.svm, seed)?), None),
        ModelKind::Fnn => {
            let partitions = fit_partitions(&dataset_rows(train), cfg.fcnn.family)?;
            let train_cfg = TrainConfig {
                seed,
                ..cfg.fnn.train.clone()
            };
            let (m, curve) = train_fnn(train, partitions, cfg.fnn.hidden_units, &train_cfg)?;
            (TrainedModel::Fnn(m), Some(curve))
        }
        ModelKind::Fcnn => {
            let (m, curve) = train_fcnn(train, &cfg.fcnn, seed, datamart)?;
            (TrainedModel::Fcnn(m), Some(curve))
        }
    })
}
