//! Generate → split → train → evaluate over every (dataset, classifier)
//! cell, and write the report files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, confusion, roc, ConfusionMatrix, RocCurve};
use crate::cnn::LearningCurve;
use crate::config::RunConfig;
use crate::datasets::{generate_with, split, Dataset, DatasetKind, SplitSpec};
use crate::error::{Error, Result};
use crate::imagemap::ImageCanvas;
use crate::pipeline::{train_model, ModelKind, TrainedModel};
use crate::seed::derive_seed;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct BenchmarkOptions {
    pub config: RunConfig,
    /// Datamarts of the FCNN cells are written under `work_dir/datamart/`.
    pub work_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub dataset: DatasetKind,
    pub model: ModelKind,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    /// Test accuracy in percent.
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// Positive class is class 1.
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub dataset: DatasetKind,
    pub generator_seed: u64,
    pub split_seed: u64,
    pub noise: f64,
    pub size: usize,
}

/// Deterministic part of a benchmark run: identical configs give
/// byte-identical serializations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub master_seed: u64,
    pub datasets: Vec<DatasetReport>,
    pub models: Vec<ModelKind>,
    pub cells: Vec<CellReport>,
    pub config: RunConfig,
}

impl BenchmarkReport {
    pub fn cell(&self, dataset: DatasetKind, model: ModelKind) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.dataset == dataset && c.model == model)
    }

    pub fn accuracy(&self, dataset: DatasetKind, model: ModelKind) -> Option<f64> {
        self.cell(dataset, model).map(|c| c.accuracy)
    }

    pub fn dataset_kinds(&self) -> Vec<DatasetKind> {
        self.datasets.iter().map(|d| d.dataset).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Classifiers as rows, datasets as columns, accuracies to 2 decimals.
    pub fn table_csv(&self) -> String {
        let kinds = self.dataset_kinds();
        let mut out = String::from("classifier");
        for k in &kinds {
            out.push(',');
            out.push_str(k.title());
        }
        out.push('\n');
        for m in &self.models {
            out.push_str(m.title());
            for k in &kinds {
                match self.accuracy(*k, *m) {
                    Some(a) => out.push_str(&format!(",{a:.2}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn table_text(&self) -> String {
        let kinds = self.dataset_kinds();
        let first = self.models.iter().map(|m| m.title().len()).max().unwrap_or(10);
        let mut out = format!("{:first$}", "");
        for k in &kinds {
            out.push_str(&format!("  {:>18}", k.title()));
        }
        out.push('\n');
        for m in &self.models {
            out.push_str(&format!("{:first$}", m.title()));
            for k in &kinds {
                match self.accuracy(*k, *m) {
                    Some(a) => out.push_str(&format!("  {a:>18.2}")),
                    None => out.push_str(&format!("  {:>18}", "-")),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellTiming {
    pub dataset: DatasetKind,
    pub model: ModelKind,
    pub train_seconds: f64,
    pub eval_seconds: f64,
}

/// `(row, col, true label, predicted label)` for one image in a sample grid.
pub type GridCaption = (usize, usize, usize, usize);

/// Everything a run produces. All of it except `timings` is deterministic.
#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub report: BenchmarkReport,
    pub timings: Vec<CellTiming>,
    pub rocs: Vec<(DatasetKind, ModelKind, RocCurve)>,
    pub curves: Vec<(DatasetKind, ModelKind, LearningCurve)>,
    /// Per dataset, a grid of rendered test images (one row per true class)
    /// and `(row, col, true, predicted)` captions.
    pub sample_grids: Vec<(DatasetKind, ImageCanvas, Vec<GridCaption>)>,
    /// Predictions on each test split, for cross-checks.
    pub predictions: Vec<(DatasetKind, ModelKind, Vec<usize>)>,
}

/// Generate a benchmark dataset and its split exactly as the harness does.
pub fn prepare_dataset(cfg: &RunConfig, kind: DatasetKind) -> Result<(Dataset, Dataset, DatasetReport)> {
    let generator_seed = derive_seed(cfg.master_seed, &format!("dataset/{kind}"));
    let split_seed = derive_seed(cfg.master_seed, &format!("split/{kind}"));
    let noise = cfg.data.generators.noise(kind);
    let ds = generate_with(kind, cfg.data.n_per_class, noise, generator_seed, &cfg.data.generators)?;
    let (train, test) = split(&ds, SplitSpec::new(cfg.data.train_fraction, split_seed)?)?;
    Ok((
        train,
        test,
        DatasetReport {
            dataset: kind,
            generator_seed,
            split_seed,
            noise,
            size: ds.len(),
        },
    ))
}

pub fn model_seed(master: u64, dataset: DatasetKind, model: ModelKind) -> u64 {
    derive_seed(master, &format!("model/{dataset}/{model}"))
}

const GRID_COLUMNS: usize = 4;

pub fn run_benchmark(opts: &BenchmarkOptions) -> Result<BenchmarkOutput> {
    let cfg = &opts.config;
    cfg.validate()?;
    let mut out = BenchmarkOutput {
        report: BenchmarkReport {
            schema_version: REPORT_SCHEMA_VERSION,
            master_seed: cfg.master_seed,
            datasets: Vec::new(),
            models: cfg.benchmark.models.clone(),
            cells: Vec::new(),
            config: cfg.clone(),
        },
        timings: Vec::new(),
        rocs: Vec::new(),
        curves: Vec::new(),
        sample_grids: Vec::new(),
        predictions: Vec::new(),
    };

    for &kind in &cfg.benchmark.datasets {
        let (train, test, info) = prepare_dataset(cfg, kind).map_err(|e| e.context(format!("dataset {kind}")))?;
        out.report.datasets.push(info);
        let truth = test.labels();
        for &model_kind in &cfg.benchmark.models {
            let ctx = |e: Error| e.context(format!("dataset {kind}, classifier {model_kind}"));
            let seed = model_seed(cfg.master_seed, kind, model_kind);
            let datamart = opts.work_dir.join("datamart").join(kind.slug());
            let started = Instant::now();
            let (model, curve) = train_model(model_kind, &train, &cfg.models, seed, Some(&datamart)).map_err(ctx)?;
            let train_seconds = started.elapsed().as_secs_f64();
            log::info!("{kind}/{model_kind}: trained in {train_seconds:.1}s");

            let started = Instant::now();
            let mut preds = Vec::with_capacity(test.len());
            let mut scores = Vec::with_capacity(test.len());
            for s in test.samples() {
                preds.push(model.predict(&s.features).map_err(ctx)?);
                let p = model.predict_proba(&s.features).map_err(ctx)?;
                scores.push(p.get(1).copied().unwrap_or(0.0));
            }
            let acc = accuracy(&preds, &truth).map_err(ctx)?;
            let cm = confusion(&preds, &truth, test.class_count()).map_err(ctx)?;
            let positives: Vec<bool> = truth.iter().map(|&t| t == 1).collect();
            let curve_roc = roc(&scores, &positives).map_err(ctx)?;
            let eval_seconds = started.elapsed().as_secs_f64();

            if let TrainedModel::Fcnn(fcnn) = &model {
                out.sample_grids
                    .push(sample_grid(kind, fcnn, &test, &preds).map_err(ctx)?);
            }
            out.report.cells.push(CellReport {
                dataset: kind,
                model: model_kind,
                seed,
                train_size: train.len(),
                test_size: test.len(),
                accuracy: acc,
                confusion: cm,
                auc: curve_roc.auc,
            });
            out.timings.push(CellTiming {
                dataset: kind,
                model: model_kind,
                train_seconds,
                eval_seconds,
            });
            out.rocs.push((kind, model_kind, curve_roc));
            if let Some(c) = curve {
                out.curves.push((kind, model_kind, c));
            }
            out.predictions.push((kind, model_kind, preds));
        }
    }
    Ok(out)
}

fn sample_grid(
    kind: DatasetKind,
    fcnn: &crate::pipeline::FcnnClassifier,
    test: &Dataset,
    preds: &[usize],
) -> Result<(DatasetKind, ImageCanvas, Vec<GridCaption>)> {
    let side = fcnn.layout.image_side;
    let gap = 2;
    let k = test.class_count();
    let width = GRID_COLUMNS * side + (GRID_COLUMNS + 1) * gap;
    let height = k * side + (k + 1) * gap;
    let mut grid = ImageCanvas::filled(width, height, 128);
    let mut captions = Vec::new();
    for class in 0..k {
        let picks = test
            .samples()
            .iter()
            .zip(preds)
            .filter(|(s, _)| s.label == class)
            .take(GRID_COLUMNS);
        for (col, (s, &pred)) in picks.enumerate() {
            let img = fcnn.image(&s.features)?;
            grid.blit(&img, gap + col * (side + gap), gap + class * (side + gap));
            captions.push((class, col, class, pred));
        }
    }
    Ok((kind, grid, captions))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Write `report.json`, `table.csv`, `table.txt`, `roc/*.csv`,
/// `curves/*.csv`, `samples/*` and the non-deterministic `timings.json`.
pub fn write_outputs(out: &BenchmarkOutput, dir: &Path) -> Result<()> {
    write(&dir.join("report.json"), out.report.to_json()?)?;
    write(&dir.join("table.csv"), out.report.table_csv())?;
    write(&dir.join("table.txt"), out.report.table_text())?;
    for (ds, model, curve) in &out.rocs {
        let mut csv = String::from("fpr,tpr\n");
        for (fpr, tpr) in &curve.points {
            csv.push_str(&format!("{fpr},{tpr}\n"));
        }
        write(&dir.join("roc").join(format!("{ds}__{model}.csv")), csv)?;
    }
    for (ds, model, curve) in &out.curves {
        let mut csv = String::from("epoch,loss,accuracy\n");
        for (i, (l, a)) in curve.loss.iter().zip(&curve.accuracy).enumerate() {
            csv.push_str(&format!("{},{l},{a}\n", i + 1));
        }
        write(&dir.join("curves").join(format!("{ds}__{model}.csv")), csv)?;
    }
    for (ds, grid, captions) in &out.sample_grids {
        write(&dir.join("samples").join(format!("{ds}.png")), grid.to_png_bytes()?)?;
        let mut csv = String::from("row,col,true_label,predicted_label\n");
        for (r, c, t, p) in captions {
            csv.push_str(&format!("{r},{c},{t},{p}\n"));
        }
        write(&dir.join("samples").join(format!("{ds}.csv")), csv)?;
    }
    let timings = serde_json::to_string_pretty(&out.timings).map_err(|e| Error::Schema(e.to_string()))?;
    write(&dir.join("timings.json"), timings)?;
    Ok(())
}
