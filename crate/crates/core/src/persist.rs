//! Model persistence: a single versioned JSON file per model holding the
//! config, seed, and every parameter tensor in declared layer order.
//! Serialized floats use the shortest round-tripping decimal form, so a
//! save/load cycle is bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::AeBaseline;
use crate::error::{Error, Result};
use crate::model::ArgueModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SavedModel {
    Argue {
        format_version: u32,
        model: ArgueModel,
    },
    AeBaseline {
        format_version: u32,
        model: AeBaseline,
    },
}

fn write(path: &Path, saved: &SavedModel) -> Result<()> {
    let file = File::create(path)
        .map_err(|e| Error::Persistence(format!("{}: {e}", path.display())))?;
    serde_json::to_writer(BufWriter::new(file), saved)
        .map_err(|e| Error::Persistence(format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> Result<SavedModel> {
    let file = File::open(path)
        .map_err(|e| Error::Persistence(format!("{}: {e}", path.display())))?;
    let saved: SavedModel = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Persistence(format!("{}: {e}", path.display())))?;
    let version = match &saved {
        SavedModel::Argue { format_version, .. } => *format_version,
        SavedModel::AeBaseline { format_version, .. } => *format_version,
    };
    if version != FORMAT_VERSION {
        return Err(Error::Persistence(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(saved)
}

pub fn save_argue(model: &ArgueModel, path: &Path) -> Result<()> {
    write(
        path,
        &SavedModel::Argue {
            format_version: FORMAT_VERSION,
            model: model.clone(),
        },
    )
}

pub fn load_argue(path: &Path) -> Result<ArgueModel> {
    match read(path)? {
        SavedModel::Argue { model, .. } => Ok(model),
        SavedModel::AeBaseline { .. } => Err(Error::Persistence(format!(
            "{} holds a baseline autoencoder, not a multi-expert model",
            path.display()
        ))),
    }
}

pub fn save_baseline(model: &AeBaseline, path: &Path) -> Result<()> {
    write(
        path,
        &SavedModel::AeBaseline {
            format_version: FORMAT_VERSION,
            model: model.clone(),
        },
    )
}

pub fn load_baseline(path: &Path) -> Result<AeBaseline> {
    match read(path)? {
        SavedModel::AeBaseline { model, .. } => Ok(model),
        SavedModel::Argue { .. } => Err(Error::Persistence(format!(
            "{} holds a multi-expert model, not a baseline autoencoder",
            path.display()
        ))),
    }
}
