//! The experiment pipeline: split, scale, cluster, pretrain, detector-train,
//! score, and evaluate, repeated over derived seeds.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use argue_core::baseline::{train_ae, AeBaseline};
use argue_core::clustering::{
    assign_by_algorithm, assign_by_attribute, assign_by_class, ClusterAssignment,
};
use argue_core::datasets::{
    apply_scale, fit_scale, load_csv, load_idx, make_split, synth_gaussian_mixture, CsvSchema,
    Dataset, Matrix, ScalerState, SplitManifest, SplitSpec,
};
use argue_core::metrics::{evaluate, wilcoxon_signed_rank, EvalResult};
use argue_core::model::{ArgueConfig, ArgueModel};
use argue_core::persist;
use argue_core::trainer::{
    pretrain, train_detector, DetectorEpoch, PretrainEpoch, SampleKind, TrainConfig,
};

use crate::config::{ClusteringChoice, DatasetSource, ExperimentConfig, SweepSection};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run: usize,
    pub seed: u64,
    pub argue: EvalResult,
    pub baseline: EvalResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub auc_mean: f64,
    pub auc_std: f64,
    pub ap_mean: f64,
    pub ap_std: f64,
}

/// Mean gating distribution over one group of test samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateMassRow {
    pub group: String,
    pub count: usize,
    pub mean_gate: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub base_seed: u64,
    pub repeat_count: usize,
    pub expert_count: usize,
    pub runs: Vec<RunMetrics>,
    pub argue: MethodSummary,
    pub baseline: MethodSummary,
    /// Two-sided signed-rank p-value over the paired per-run AUC values;
    /// absent for single runs.
    pub wilcoxon_p_auc: Option<f64>,
    /// Per-group mean gating mass, averaged over runs.
    pub gate_ablation: Vec<GateMassRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub class_limit: usize,
    pub report: RunReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
}

/// Everything one seeded run produces.
pub struct RunArtifacts {
    pub seed: u64,
    pub model: ArgueModel,
    pub baseline: AeBaseline,
    pub manifest: SplitManifest,
    pub argue_eval: EvalResult,
    pub baseline_eval: EvalResult,
    pub argue_scores: Vec<f64>,
    pub baseline_scores: Vec<f64>,
    pub test_labels: Vec<bool>,
    pub test_row_ids: Vec<usize>,
    pub gate_table: Vec<GateMassRow>,
    pub pretrain_log: Vec<PretrainEpoch>,
    pub detector_log: Vec<DetectorEpoch>,
    pub baseline_log: Vec<PretrainEpoch>,
}

/// Loads or generates the full dataset for one run.
pub fn load_dataset(source: &DatasetSource, run_seed: u64) -> Result<Dataset> {
    match source {
        DatasetSource::Synthetic(spec) => synth_gaussian_mixture(spec, run_seed)
            .context("stage dataset: synthetic generation"),
        DatasetSource::Csv {
            path,
            label_column,
            class_column,
            attribute_column,
        } => {
            let schema = CsvSchema {
                label_column: label_column.clone(),
                class_column: class_column.clone(),
                attribute_column: attribute_column.clone(),
            };
            load_csv(path, &schema).context("stage dataset: csv load")
        }
        DatasetSource::Idx {
            images,
            labels,
            normal_classes,
        } => {
            let mut ds = load_idx(images, labels).context("stage dataset: idx load")?;
            let classes = ds
                .class_labels
                .as_ref()
                .ok_or_else(|| anyhow!("idx data without labels"))?;
            ds.anomaly_labels = Some(
                classes
                    .iter()
                    .map(|c| u8::from(!normal_classes.contains(c)))
                    .collect(),
            );
            Ok(ds)
        }
    }
}

/// Sorted distinct class labels of the normal rows.
pub fn normal_classes(ds: &Dataset) -> Result<Vec<String>> {
    let classes = ds
        .class_labels
        .as_ref()
        .ok_or_else(|| anyhow!("dataset has no class labels"))?;
    let labels = ds.anomaly_labels.as_deref().unwrap_or(&[]);
    let mut distinct: Vec<String> = classes
        .iter()
        .enumerate()
        .filter(|(i, _)| labels.get(*i).copied().unwrap_or(0) == 0)
        .map(|(_, c)| c.clone())
        .collect();
    distinct.sort();
    distinct.dedup();
    Ok(distinct)
}

fn cluster_train_normals(
    choice: &ClusteringChoice,
    train: &Dataset,
    normal_rows: &[usize],
    scaled: &Matrix,
    run_seed: u64,
) -> Result<ClusterAssignment> {
    match choice {
        ClusteringChoice::ByClass => {
            let classes = train
                .class_labels
                .as_ref()
                .ok_or_else(|| anyhow!("by_class clustering needs class labels"))?;
            let labels: Vec<String> = normal_rows.iter().map(|&i| classes[i].clone()).collect();
            Ok(assign_by_class(&labels)?)
        }
        ClusteringChoice::ByAttribute { cap } => {
            let attrs = train
                .cluster_attribute
                .as_ref()
                .ok_or_else(|| anyhow!("by_attribute clustering needs an attribute column"))?;
            let values: Vec<String> = normal_rows.iter().map(|&i| attrs[i].clone()).collect();
            Ok(assign_by_attribute(&values, *cap)?)
        }
        ClusteringChoice::ByAlgorithm { k } => {
            let normal_scaled = scaled.select_rows(normal_rows);
            Ok(assign_by_algorithm(&normal_scaled, *k, run_seed)?)
        }
    }
}

/// One seeded pipeline run over an already-materialized dataset.
pub fn run_single(config: &ExperimentConfig, ds: &Dataset, run_seed: u64) -> Result<RunArtifacts> {
    let split_spec = SplitSpec {
        test_fraction: config.split.test_fraction,
        pollution_rate: config.split.pollution_rate,
        known_anomaly_budget: config.split.known_anomaly_budget,
        seed: run_seed,
    };
    let (mut train, test, mut manifest) =
        make_split(ds, &split_spec).context("stage split")?;

    // optional untouched validation holdout, taken from the training normals
    if let Some(frac) = config.validation_fraction {
        let n_train_normal =
            manifest.train_rows.len() - manifest.pollution_rows.len() - manifest.known_anomaly_rows.len();
        let v_count = ((n_train_normal as f64) * frac).floor() as usize;
        if v_count > 0 {
            let kept: Vec<usize> = (0..n_train_normal - v_count)
                .chain(n_train_normal..train.len())
                .collect();
            manifest.validation_rows = manifest.train_rows[n_train_normal - v_count..n_train_normal].to_vec();
            manifest.train_rows = kept.iter().map(|&i| manifest.train_rows[i]).collect();
            train = train.select(&kept);
        }
    }

    let visible = train
        .anomaly_labels
        .clone()
        .unwrap_or_else(|| vec![0; train.len()]);
    let normal_rows: Vec<usize> = (0..train.len()).filter(|&i| visible[i] == 0).collect();
    if normal_rows.is_empty() {
        bail!("stage split: no training normals left");
    }

    let scaler = fit_scale(&train.features.select_rows(&normal_rows)).context("stage scale")?;
    let train_scaled = apply_scale(&scaler, &train.features).context("stage scale")?;
    let test_scaled = apply_scale(&scaler, &test.features).context("stage scale")?;
    manifest.scaler = Some(scaler.clone());

    let assignment = cluster_train_normals(
        &config.clustering,
        &train,
        &normal_rows,
        &train_scaled,
        run_seed,
    )
    .context("stage cluster")?;

    let train_cfg = TrainConfig {
        epochs_pretrain: config.training.epochs_pretrain,
        epochs_detector: config.training.epochs_detector,
        batch_size: config.training.batch_size,
        noise_ratio: config.training.noise_ratio,
        mode: config.training.mode,
        known_anomaly_budget: config.split.known_anomaly_budget,
        learning_rate: config.training.learning_rate,
        seed: run_seed,
    };

    let argue_config = ArgueConfig {
        input_dim: train_scaled.cols(),
        encoder_dims: config.model.encoder_dims.clone(),
        expert_count: assignment.expert_count,
        alarm_dims: config.model.alarm_dims.clone(),
        gate_dims: config.model.gate_dims.clone(),
    };
    let mut model = ArgueModel::build(argue_config, run_seed).context("stage build")?;

    let normal_scaled = train_scaled.select_rows(&normal_rows);
    let pretrain_log =
        pretrain(&mut model, &normal_scaled, &assignment, &train_cfg).context("stage pretrain")?;

    // detector sees every training row; known anomalies carry their label,
    // everything else flows through its assigned expert
    let mut kinds = Vec::with_capacity(train.len());
    let mut normal_pos = 0usize;
    for i in 0..train.len() {
        if visible[i] == 1 {
            kinds.push(SampleKind::KnownAnomaly);
        } else {
            kinds.push(SampleKind::Normal(assignment.expert_index[normal_pos]));
            normal_pos += 1;
        }
    }
    let detector_log =
        train_detector(&mut model, &train_scaled, &kinds, &train_cfg).context("stage detector")?;

    let mut baseline = AeBaseline::build(
        train_scaled.cols(),
        config.model.encoder_dims.clone(),
        run_seed,
    )
    .context("stage baseline")?;
    let baseline_log =
        train_ae(&mut baseline, &normal_scaled, &train_cfg).context("stage baseline")?;

    // scoring
    let test_labels: Vec<bool> = test
        .anomaly_labels
        .as_ref()
        .map(|l| l.iter().map(|&v| v == 1).collect())
        .unwrap_or_else(|| vec![false; test.len()]);
    let mut argue_scores = Vec::with_capacity(test.len());
    let mut gatings = Vec::with_capacity(test.len());
    for i in 0..test_scaled.rows() {
        let scored = model.score(test_scaled.row(i)).context("stage score")?;
        argue_scores.push(scored.anomaly_score);
        gatings.push(scored.gating);
    }
    let baseline_scores: Vec<f64> = (0..test_scaled.rows())
        .map(|i| baseline.score(test_scaled.row(i)))
        .collect::<argue_core::Result<_>>()
        .context("stage score")?;

    let argue_eval = evaluate(&argue_scores, &test_labels).context("stage metrics")?;
    let baseline_eval = evaluate(&baseline_scores, &test_labels).context("stage metrics")?;

    let gate_table = gate_mass_table(&gatings, test.class_labels.as_deref(), &test_labels);

    let test_row_ids = manifest.test_rows.clone();
    Ok(RunArtifacts {
        seed: run_seed,
        model,
        baseline,
        manifest,
        argue_eval,
        baseline_eval,
        argue_scores,
        baseline_scores,
        test_labels,
        test_row_ids,
        gate_table,
        pretrain_log,
        detector_log,
        baseline_log,
    })
}

/// Mean gating distribution per group: one row per normal class present in
/// the test set (sorted), plus one for the anomalous samples. Empty groups
/// are skipped with a warning.
pub fn gate_mass_table(
    gatings: &[argue_core::model::GatingDistribution],
    class_labels: Option<&[String]>,
    anomaly_labels: &[bool],
) -> Vec<GateMassRow> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    if let Some(classes) = class_labels {
        let mut names: Vec<String> = classes
            .iter()
            .zip(anomaly_labels)
            .filter(|(_, &anom)| !anom)
            .map(|(c, _)| c.clone())
            .collect();
        names.sort();
        names.dedup();
        for name in names {
            let members: Vec<usize> = (0..gatings.len())
                .filter(|&i| !anomaly_labels[i] && classes[i] == name)
                .collect();
            groups.push((format!("normal class {name}"), members));
        }
    } else {
        let members: Vec<usize> = (0..gatings.len()).filter(|&i| !anomaly_labels[i]).collect();
        groups.push(("normal".to_string(), members));
    }
    let anomalous: Vec<usize> = (0..gatings.len()).filter(|&i| anomaly_labels[i]).collect();
    groups.push(("anomalous".to_string(), anomalous));

    let mut rows = Vec::new();
    for (group, members) in groups {
        if members.is_empty() {
            eprintln!("warning: gate ablation group '{group}' is empty; omitted");
            continue;
        }
        let width = gatings[members[0]].0.len();
        let mut mean = vec![0.0; width];
        for &i in &members {
            for (m, p) in mean.iter_mut().zip(&gatings[i].0) {
                *m += p;
            }
        }
        for m in mean.iter_mut() {
            *m /= members.len() as f64;
        }
        rows.push(GateMassRow {
            group,
            count: members.len(),
            mean_gate: mean,
        });
    }
    rows
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(evals: &[EvalResult]) -> MethodSummary {
    let (auc_mean, auc_std) = mean_std(&evals.iter().map(|e| e.auc).collect::<Vec<_>>());
    let (ap_mean, ap_std) = mean_std(&evals.iter().map(|e| e.ap).collect::<Vec<_>>());
    MethodSummary {
        auc_mean,
        auc_std,
        ap_mean,
        ap_std,
    }
}

fn average_gate_tables(tables: &[Vec<GateMassRow>]) -> Vec<GateMassRow> {
    let mut out: Vec<GateMassRow> = Vec::new();
    let mut contributions: Vec<usize> = Vec::new();
    for table in tables {
        for row in table {
            match out.iter_mut().position(|r| r.group == row.group) {
                Some(idx) if out[idx].mean_gate.len() == row.mean_gate.len() => {
                    for (a, b) in out[idx].mean_gate.iter_mut().zip(&row.mean_gate) {
                        *a += b;
                    }
                    out[idx].count += row.count;
                    contributions[idx] += 1;
                }
                _ => {
                    out.push(row.clone());
                    contributions.push(1);
                }
            }
        }
    }
    for (row, n) in out.iter_mut().zip(&contributions) {
        for v in &mut row.mean_gate {
            *v /= *n as f64;
        }
    }
    out
}

/// Writes one run's artifacts under `dir`.
pub fn persist_run(dir: &Path, art: &RunArtifacts) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    persist::save_argue(&art.model, &dir.join("model.json")).context("stage persist")?;
    persist::save_baseline(&art.baseline, &dir.join("baseline.json")).context("stage persist")?;
    write_json(&dir.join("manifest.json"), &art.manifest)?;
    write_jsonl(&dir.join("pretrain_log.jsonl"), &art.pretrain_log)?;
    write_jsonl(&dir.join("detector_log.jsonl"), &art.detector_log)?;
    write_jsonl(&dir.join("baseline_log.jsonl"), &art.baseline_log)?;
    write_scores(&dir.join("scores.csv"), art)?;
    write_json(&dir.join("gate_ablation.json"), &art.gate_table)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row)?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn write_scores(path: &Path, art: &RunArtifacts) -> Result<()> {
    let mut out = String::from("row_index,anomaly_score,label\n");
    for i in 0..art.argue_scores.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            art.test_row_ids[i],
            art.argue_scores[i],
            u8::from(art.test_labels[i])
        ));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Runs the full experiment `repeat_count` times with derived seeds and
/// aggregates the report. Artifacts land under `out_dir/run_<i>/`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let mut runs = Vec::new();
    let mut argue_evals = Vec::new();
    let mut baseline_evals = Vec::new();
    let mut gate_tables = Vec::new();
    let mut expert_count = 0;
    for run in 0..config.repeat_count {
        let run_seed = config.seed + run as u64;
        let ds = load_dataset(&config.dataset, run_seed)?;
        let art = run_single(config, &ds, run_seed)
            .with_context(|| format!("run {run} (seed {run_seed})"))?;
        persist_run(&out_dir.join(format!("run_{run}")), &art)?;
        expert_count = art.model.expert_count();
        runs.push(RunMetrics {
            run,
            seed: run_seed,
            argue: art.argue_eval,
            baseline: art.baseline_eval,
        });
        argue_evals.push(art.argue_eval);
        baseline_evals.push(art.baseline_eval);
        gate_tables.push(art.gate_table);
    }

    let wilcoxon_p_auc = if runs.len() >= 2 {
        let a: Vec<f64> = argue_evals.iter().map(|e| e.auc).collect();
        let b: Vec<f64> = baseline_evals.iter().map(|e| e.auc).collect();
        Some(wilcoxon_signed_rank(&a, &b).context("stage metrics")?)
    } else {
        None
    };

    Ok(RunReport {
        base_seed: config.seed,
        repeat_count: config.repeat_count,
        expert_count,
        runs,
        argue: summarize(&argue_evals),
        baseline: summarize(&baseline_evals),
        wilcoxon_p_auc,
        gate_ablation: average_gate_tables(&gate_tables),
    })
}

/// Runs the class-count sweep: for each limit, the dataset's normal rows are
/// restricted to the first `limit` classes (sorted), the anomaly set stays
/// fixed, and the whole repeat protocol runs.
pub fn run_sweep(config: &ExperimentConfig, sweep: &SweepSection, out_dir: &Path) -> Result<SweepReport> {
    let mut points = Vec::new();
    for &limit in &sweep.normal_class_limits {
        let mut point_config = config.clone();
        point_config.sweep = None;

        let mut runs = Vec::new();
        let mut argue_evals = Vec::new();
        let mut baseline_evals = Vec::new();
        let mut gate_tables = Vec::new();
        let mut expert_count = 0;
        for run in 0..config.repeat_count {
            let run_seed = config.seed + run as u64;
            let full = load_dataset(&config.dataset, run_seed)?;
            let classes = normal_classes(&full)?;
            if limit > classes.len() {
                bail!(
                    "sweep limit {limit} exceeds the {} normal classes present",
                    classes.len()
                );
            }
            let kept = classes[..limit].to_vec();
            let ds = full
                .restrict_normal_classes(&kept)
                .context("stage sweep restriction")?;

            // fixed pollution count across sweep points
            if let Some(count) = sweep.pollution_count {
                let n_normal = ds
                    .anomaly_labels
                    .as_ref()
                    .map(|l| l.iter().filter(|&&v| v == 0).count())
                    .unwrap_or(ds.len());
                let train_normals = n_normal
                    - ((n_normal as f64) * config.split.test_fraction).floor() as usize;
                point_config.split.pollution_rate =
                    (count as f64 + 0.5) / train_normals as f64;
            }

            let art = run_single(&point_config, &ds, run_seed)
                .with_context(|| format!("sweep k={limit} run {run}"))?;
            persist_run(&out_dir.join(format!("k_{limit}/run_{run}")), &art)?;
            expert_count = art.model.expert_count();
            runs.push(RunMetrics {
                run,
                seed: run_seed,
                argue: art.argue_eval,
                baseline: art.baseline_eval,
            });
            argue_evals.push(art.argue_eval);
            baseline_evals.push(art.baseline_eval);
            gate_tables.push(art.gate_table);
        }

        let wilcoxon_p_auc = if runs.len() >= 2 {
            let a: Vec<f64> = argue_evals.iter().map(|e| e.auc).collect();
            let b: Vec<f64> = baseline_evals.iter().map(|e| e.auc).collect();
            Some(wilcoxon_signed_rank(&a, &b).context("stage metrics")?)
        } else {
            None
        };
        points.push(SweepPoint {
            class_limit: limit,
            report: RunReport {
                base_seed: config.seed,
                repeat_count: config.repeat_count,
                expert_count,
                runs,
                argue: summarize(&argue_evals),
                baseline: summarize(&baseline_evals),
                wilcoxon_p_auc,
                gate_ablation: average_gate_tables(&gate_tables),
            },
        });
    }
    Ok(SweepReport { points })
}
