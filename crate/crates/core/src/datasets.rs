//! Data ingestion, min-max scaling, train/test split protocols with
//! pollution and label budgets, and synthetic multi-cluster generation.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn with_cols(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            data: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row width mismatch");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    /// New matrix containing the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut out = Matrix::with_cols(self.cols);
        for &i in indices {
            out.push_row(self.row(i));
        }
        out
    }
}

/// A feature matrix plus optional per-row annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Matrix,
    /// 0/1 anomaly ground truth, when known.
    pub anomaly_labels: Option<Vec<u8>>,
    /// Class-of-normal labels, when known (drives by-class clustering).
    pub class_labels: Option<Vec<String>>,
    /// Raw categorical attribute column reserved for by-attribute clustering;
    /// never part of the feature matrix.
    pub cluster_attribute: Option<Vec<String>>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.features.cols() != self.feature_names.len() {
            return Err(Error::Shape(format!(
                "{} feature columns vs {} feature names",
                self.features.cols(),
                self.feature_names.len()
            )));
        }
        for (name, len) in [
            ("anomaly_labels", self.anomaly_labels.as_ref().map(Vec::len)),
            ("class_labels", self.class_labels.as_ref().map(Vec::len)),
            (
                "cluster_attribute",
                self.cluster_attribute.as_ref().map(Vec::len),
            ),
        ] {
            if let Some(len) = len {
                if len != n {
                    return Err(Error::Shape(format!(
                        "{name} has {len} entries for {n} rows"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Dataset restricted to the given rows, in order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            anomaly_labels: self
                .anomaly_labels
                .as_ref()
                .map(|v| indices.iter().map(|&i| v[i]).collect()),
            class_labels: self
                .class_labels
                .as_ref()
                .map(|v| indices.iter().map(|&i| v[i].clone()).collect()),
            cluster_attribute: self
                .cluster_attribute
                .as_ref()
                .map(|v| indices.iter().map(|&i| v[i].clone()).collect()),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Drops normal rows whose class label is not in `kept`; anomalous rows
    /// always stay. Used by the class-count sweep, which grows the set of
    /// normal classes against a fixed anomaly set.
    pub fn restrict_normal_classes(&self, kept: &[String]) -> Result<Dataset> {
        let classes = self
            .class_labels
            .as_ref()
            .ok_or_else(|| Error::Config("class labels required to restrict classes".into()))?;
        let labels = self
            .anomaly_labels
            .as_ref()
            .ok_or_else(|| Error::Config("anomaly labels required to restrict classes".into()))?;
        let indices: Vec<usize> = (0..self.len())
            .filter(|&i| labels[i] == 1 || kept.contains(&classes[i]))
            .collect();
        if indices.is_empty() {
            return Err(Error::Config("no rows left after class restriction".into()));
        }
        Ok(self.select(&indices))
    }
}

// ---- CSV ---------------------------------------------------------------

/// Column roles for CSV ingestion.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CsvSchema {
    /// 0/1 anomaly label column.
    pub label_column: Option<String>,
    /// Class-of-normal column (kept out of the features).
    pub class_column: Option<String>,
    /// Categorical attribute column reserved for by-attribute clustering
    /// (kept out of the features).
    pub attribute_column: Option<String>,
}

/// Loads a CSV file with a header row. Numeric feature columns are parsed
/// directly, non-numeric ones are one-hot encoded over their sorted distinct
/// values; column order follows the header.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Ingestion(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();

    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column '{name}' not found in header")))
    };
    let label_idx = schema.label_column.as_deref().map(col_index).transpose()?;
    let class_idx = schema.class_column.as_deref().map(col_index).transpose()?;
    let attr_idx = schema
        .attribute_column
        .as_deref()
        .map(col_index)
        .transpose()?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Ingestion(format!("row {}: {e}", r + 2)))?;
        if record.len() != headers.len() {
            return Err(Error::Ingestion(format!(
                "row {} has {} cells, expected {}",
                r + 2,
                record.len(),
                headers.len()
            )));
        }
        rows.push(record.iter().map(str::to_string).collect());
    }

    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|c| Some(*c) != label_idx && Some(*c) != class_idx && Some(*c) != attr_idx)
        .collect();

    // a feature column is numeric iff every cell parses as f64
    let mut numeric = vec![true; headers.len()];
    for &c in &feature_cols {
        numeric[c] = rows.iter().all(|row| row[c].trim().parse::<f64>().is_ok());
    }

    let mut feature_names = Vec::new();
    let mut encoders: Vec<Option<Vec<String>>> = vec![None; headers.len()];
    for &c in &feature_cols {
        if numeric[c] {
            feature_names.push(headers[c].clone());
        } else {
            let mut values: Vec<String> = rows.iter().map(|row| row[c].clone()).collect();
            values.sort();
            values.dedup();
            for v in &values {
                feature_names.push(format!("{}={v}", headers[c]));
            }
            encoders[c] = Some(values);
        }
    }

    let mut features = Matrix::with_cols(feature_names.len());
    let mut row_buf = Vec::with_capacity(feature_names.len());
    for (r, row) in rows.iter().enumerate() {
        row_buf.clear();
        for &c in &feature_cols {
            match &encoders[c] {
                None => {
                    let v = row[c].trim().parse::<f64>().map_err(|_| {
                        Error::Ingestion(format!(
                            "row {} column '{}': cannot parse '{}' as a number",
                            r + 2,
                            headers[c],
                            row[c]
                        ))
                    })?;
                    row_buf.push(v);
                }
                Some(values) => {
                    for v in values {
                        row_buf.push(if *v == row[c] { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        features.push_row(&row_buf);
    }

    let anomaly_labels = label_idx
        .map(|c| {
            rows.iter()
                .enumerate()
                .map(|(r, row)| match row[c].trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::Ingestion(format!(
                        "row {} column '{}': label must be 0 or 1, got '{other}'",
                        r + 2,
                        headers[c]
                    ))),
                })
                .collect::<Result<Vec<u8>>>()
        })
        .transpose()?;
    let class_labels = class_idx.map(|c| rows.iter().map(|row| row[c].clone()).collect());
    let cluster_attribute = attr_idx.map(|c| rows.iter().map(|row| row[c].clone()).collect());

    let ds = Dataset {
        features,
        anomaly_labels,
        class_labels,
        cluster_attribute,
        feature_names,
    };
    ds.validate()?;
    Ok(ds)
}

/// Writes features (and the label column when present) back out as CSV.
pub fn export_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut file = File::create(path)?;
    let mut header = ds.feature_names.join(",");
    if ds.anomaly_labels.is_some() {
        header.push_str(",label");
    }
    writeln!(file, "{header}")?;
    for i in 0..ds.len() {
        let mut line = ds
            .features
            .row(i)
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(",");
        if let Some(labels) = &ds.anomaly_labels {
            line.push_str(&format!(",{}", labels[i]));
        }
        writeln!(file, "{line}")?;
    }
    Ok(())
}

// ---- IDX ---------------------------------------------------------------

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(reader: &mut impl Read, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader
        .read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated {what}: {e}")))?;
    Ok(u32::from_be_bytes(buf))
}

/// Loads an IDX image/label file pair (the MNIST distribution format).
/// Images are flattened row-major and divided by 255; labels become class
/// labels.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let mut img = BufReader::new(
        File::open(images_path)
            .map_err(|e| Error::Format(format!("{}: {e}", images_path.display())))?,
    );
    let magic = read_u32_be(&mut img, "image header")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "bad image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"
        )));
    }
    let count = read_u32_be(&mut img, "image count")? as usize;
    let rows = read_u32_be(&mut img, "image rows")? as usize;
    let cols = read_u32_be(&mut img, "image cols")? as usize;
    let dim = rows * cols;
    let mut pixels = vec![0u8; count * dim];
    img.read_exact(&mut pixels)
        .map_err(|e| Error::Format(format!("truncated image data: {e}")))?;

    let mut lbl = BufReader::new(
        File::open(labels_path)
            .map_err(|e| Error::Format(format!("{}: {e}", labels_path.display())))?,
    );
    let magic = read_u32_be(&mut lbl, "label header")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!(
            "bad label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"
        )));
    }
    let label_count = read_u32_be(&mut lbl, "label count")? as usize;
    if label_count != count {
        return Err(Error::Format(format!(
            "{count} images but {label_count} labels"
        )));
    }
    let mut labels = vec![0u8; count];
    lbl.read_exact(&mut labels)
        .map_err(|e| Error::Format(format!("truncated label data: {e}")))?;

    let mut features = Matrix::with_cols(dim);
    let mut row = vec![0.0; dim];
    for i in 0..count {
        for (j, p) in pixels[i * dim..(i + 1) * dim].iter().enumerate() {
            row[j] = *p as f64 / 255.0;
        }
        features.push_row(&row);
    }

    Ok(Dataset {
        features,
        anomaly_labels: None,
        class_labels: Some(labels.iter().map(u8::to_string).collect()),
        cluster_attribute: None,
        feature_names: (0..dim).map(|i| format!("px{i}")).collect(),
    })
}

// ---- scaling -------------------------------------------------------------

/// Per-feature min/max fitted on training normals. Constant features map to
/// 0.5 so they stay uninformative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerState {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Fits the scaler on the training-split normal rows.
pub fn fit_scale(train_normals: &Matrix) -> Result<ScalerState> {
    if train_normals.rows() == 0 {
        return Err(Error::Config("cannot fit a scaler on zero rows".into()));
    }
    let cols = train_normals.cols();
    let mut min = vec![f64::INFINITY; cols];
    let mut max = vec![f64::NEG_INFINITY; cols];
    for row in train_normals.iter_rows() {
        for (c, v) in row.iter().enumerate() {
            min[c] = min[c].min(*v);
            max[c] = max[c].max(*v);
        }
    }
    Ok(ScalerState { min, max })
}

/// Applies the fitted affine map. Outputs are intentionally not clipped:
/// out-of-range values on test rows are genuine anomaly signal.
pub fn apply_scale(state: &ScalerState, features: &Matrix) -> Result<Matrix> {
    if features.cols() != state.min.len() {
        return Err(Error::Shape(format!(
            "{} feature columns vs scaler fitted on {}",
            features.cols(),
            state.min.len()
        )));
    }
    let mut out = features.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        for c in 0..row.len() {
            let range = state.max[c] - state.min[c];
            row[c] = if range == 0.0 {
                0.5
            } else {
                (row[c] - state.min[c]) / range
            };
        }
    }
    Ok(out)
}

// ---- splitting -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of normal rows held out for testing.
    pub test_fraction: f64,
    /// Fraction of the training-normal count to pollute with hidden
    /// anomalies.
    pub pollution_rate: f64,
    /// Number of labelled anomalies added to the training split.
    pub known_anomaly_budget: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must be in (0,1), got {}",
                self.test_fraction
            )));
        }
        if !(0.0..1.0).contains(&self.pollution_rate) {
            return Err(Error::Config(format!(
                "pollution_rate must be in [0,1), got {}",
                self.pollution_rate
            )));
        }
        Ok(())
    }
}

/// Record of a split, sufficient to re-create it bit-exactly: the seed plus
/// the original row index of every selected row. The pipeline fills in the
/// scaler after fitting it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub pollution_rows: Vec<usize>,
    pub known_anomaly_rows: Vec<usize>,
    /// Training normals held back from training for manual validation.
    #[serde(default)]
    pub validation_rows: Vec<usize>,
    pub scaler: Option<ScalerState>,
}

/// Splits a dataset into train and test under the pollution / known-anomaly
/// protocol.
///
/// Training rows are normals plus `floor(pollution_rate * train_normal_count)`
/// hidden anomalies (relabelled normal, class label inherited from the
/// nearest training normal) plus exactly `known_anomaly_budget` labelled
/// anomalies. Test rows are the held-out normals and all remaining
/// anomalies.
pub fn make_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, SplitManifest)> {
    spec.validate()?;
    ds.validate()?;
    let labels = match &ds.anomaly_labels {
        Some(l) => l.clone(),
        None => {
            if spec.pollution_rate > 0.0 || spec.known_anomaly_budget > 0 {
                return Err(Error::Protocol(
                    "pollution or an anomaly budget requires anomaly labels".into(),
                ));
            }
            vec![0u8; ds.len()]
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal_idx: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == 0).collect();
    let mut anomaly_idx: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == 1).collect();
    if normal_idx.is_empty() {
        return Err(Error::Protocol("no normal rows to split".into()));
    }
    normal_idx.shuffle(&mut rng);
    anomaly_idx.shuffle(&mut rng);

    let n_test_normal = ((normal_idx.len() as f64) * spec.test_fraction).floor() as usize;
    let test_normals = &normal_idx[..n_test_normal];
    let train_normals = &normal_idx[n_test_normal..];

    let n_pollution = ((train_normals.len() as f64) * spec.pollution_rate).floor() as usize;
    let needed = n_pollution + spec.known_anomaly_budget;
    if needed > anomaly_idx.len() {
        return Err(Error::Protocol(format!(
            "protocol needs {needed} anomalies ({n_pollution} pollution + {} budget) but only {} are available",
            spec.known_anomaly_budget,
            anomaly_idx.len()
        )));
    }
    let pollution = &anomaly_idx[..n_pollution];
    let known = &anomaly_idx[n_pollution..needed];
    let test_anomalies = &anomaly_idx[needed..];

    let mut train_rows: Vec<usize> = train_normals.to_vec();
    train_rows.extend_from_slice(pollution);
    train_rows.extend_from_slice(known);
    let mut test_rows: Vec<usize> = test_normals.to_vec();
    test_rows.extend_from_slice(test_anomalies);

    let mut train = ds.select(&train_rows);
    let test = ds.select(&test_rows);

    // Pollution is invisible to the trainer: anomaly label cleared, class
    // label borrowed from the nearest genuine training normal so label-driven
    // clustering treats the row as that cluster.
    let n_train_normal = train_normals.len();
    let train_labels = train
        .anomaly_labels
        .get_or_insert_with(|| vec![0; train_rows.len()]);
    for local in n_train_normal..n_train_normal + n_pollution {
        train_labels[local] = 0;
    }
    for local in n_train_normal + n_pollution..train_rows.len() {
        train_labels[local] = 1;
    }
    if train.class_labels.is_some() && n_pollution > 0 {
        for local in n_train_normal..n_train_normal + n_pollution {
            let nearest = nearest_row(&train.features, local, 0..n_train_normal);
            let class = train.class_labels.as_ref().unwrap()[nearest].clone();
            train.class_labels.as_mut().unwrap()[local] = class;
        }
    }

    let manifest = SplitManifest {
        seed: spec.seed,
        train_rows,
        test_rows,
        pollution_rows: pollution.to_vec(),
        known_anomaly_rows: known.to_vec(),
        validation_rows: Vec::new(),
        scaler: None,
    };
    Ok((train, test, manifest))
}

fn nearest_row(features: &Matrix, target: usize, candidates: std::ops::Range<usize>) -> usize {
    let t = features.row(target);
    let mut best = candidates.start;
    let mut best_d = f64::INFINITY;
    for i in candidates {
        let d: f64 = features
            .row(i)
            .iter()
            .zip(t)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

// ---- synthetic data --------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub k_clusters: usize,
    pub dim: usize,
    pub n_per_cluster: usize,
    pub anomaly_count: usize,
    /// Distance between cluster centers in units of the cluster standard
    /// deviation.
    pub separation: f64,
}

/// Generates an isotropic Gaussian mixture with uniform box anomalies.
///
/// Cluster `i` sits at `(separation / sqrt(2)) * e_i` so all centers are
/// exactly `separation` sigma apart. Anomalies are drawn uniformly over the
/// bounding box of the normal data and rejected within 3 sigma of any
/// center; their class label is the nearest center's, so label-driven
/// splits see them as members of that cluster.
pub fn synth_gaussian_mixture(spec: &SynthSpec, seed: u64) -> Result<Dataset> {
    if spec.k_clusters == 0 || spec.dim == 0 || spec.n_per_cluster == 0 {
        return Err(Error::Config(
            "k_clusters, dim, n_per_cluster must be >= 1".into(),
        ));
    }
    if spec.separation <= 0.0 {
        return Err(Error::Config("separation must be > 0".into()));
    }
    if spec.dim < spec.k_clusters {
        return Err(Error::Config(format!(
            "axis-aligned centers need dim >= k_clusters ({} < {})",
            spec.dim, spec.k_clusters
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = spec.separation / std::f64::consts::SQRT_2;
    let centers: Vec<Vec<f64>> = (0..spec.k_clusters)
        .map(|i| {
            let mut c = vec![0.0; spec.dim];
            c[i] = offset;
            c
        })
        .collect();

    let n_normal = spec.k_clusters * spec.n_per_cluster;
    let mut features = Matrix::with_cols(spec.dim);
    let mut class_labels = Vec::with_capacity(n_normal + spec.anomaly_count);
    let mut anomaly_labels = Vec::with_capacity(n_normal + spec.anomaly_count);

    let mut row = vec![0.0; spec.dim];
    for (ci, center) in centers.iter().enumerate() {
        for _ in 0..spec.n_per_cluster {
            for d in 0..spec.dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                row[d] = center[d] + z;
            }
            features.push_row(&row);
            class_labels.push(ci.to_string());
            anomaly_labels.push(0);
        }
    }

    // bounding box of the normals
    let bounds = fit_scale(&features)?;

    let nearest_center = |p: &[f64]| -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (ci, c) in centers.iter().enumerate() {
            let d2: f64 = c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best.1 {
                best = (ci, d2);
            }
        }
        best
    };

    for _ in 0..spec.anomaly_count {
        let mut attempts = 0;
        loop {
            for d in 0..spec.dim {
                row[d] = rng.gen_range(bounds.min[d]..bounds.max[d]);
            }
            let (ci, d2) = nearest_center(&row);
            if d2.sqrt() >= 3.0 {
                features.push_row(&row);
                class_labels.push(ci.to_string());
                anomaly_labels.push(1);
                break;
            }
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::Config(
                    "anomaly rejection sampling failed; the box is saturated by cluster cores"
                        .into(),
                ));
            }
        }
    }

    Ok(Dataset {
        features,
        anomaly_labels: Some(anomaly_labels),
        class_labels: Some(class_labels),
        cluster_attribute: None,
        feature_names: (0..spec.dim).map(|d| format!("f{d}")).collect(),
    })
}
