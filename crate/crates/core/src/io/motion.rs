//! JSON artifacts: optimized motion, run report and ground truth.
//!
//! Floats go through serde_json's shortest round-trip formatting, so every
//! `f64` reads back bit-exactly.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::optimizer::{LossTerms, MotionSequence, OptimizeConfig, OptimizeReport};

pub const MOTION_FILE: &str = "motion.json";
pub const REPORT_FILE: &str = "report.json";
pub const TRUTH_FILE: &str = "truth.json";
pub const SCENE_FILE: &str = "scene.ply";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionFile {
    pub version: u32,
    pub frame_count: usize,
    pub keyframes: [usize; 2],
    /// Optimized translation per frame.
    pub translations: Vec<[f64; 3]>,
    pub iterations_run: usize,
    pub loss_history: Vec<LossTerms>,
    pub final_loss: LossTerms,
    pub config: OptimizeConfig,
}

impl MotionFile {
    pub fn new(
        report: &OptimizeReport,
        seq: &MotionSequence,
        config: &OptimizeConfig,
    ) -> Result<Self> {
        if report.final_translations.len() != seq.len() {
            return Err(Error::validation(format!(
                "report has {} translations, sequence has {} frames",
                report.final_translations.len(),
                seq.len()
            )));
        }
        let (first, last) = seq.keyframes();
        Ok(MotionFile {
            version: 1,
            frame_count: seq.len(),
            keyframes: [first, last],
            translations: report
                .final_translations
                .iter()
                .map(|t| (*t).into())
                .collect(),
            iterations_run: report.iterations_run,
            loss_history: report.loss_history.clone(),
            final_loss: report.final_loss,
            config: config.clone(),
        })
    }

    pub fn translations(&self) -> Vec<Vec3> {
        self.translations.iter().map(|&t| Vec3::from(t)).collect()
    }
}

/// Summary of one reconstruction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub frame_count: usize,
    pub scale_factor: f64,
    pub overlap_pixels: usize,
    pub scene_points: usize,
    pub human_points: [usize; 2],
    pub iterations_run: usize,
    pub initial_loss: Option<LossTerms>,
    pub final_loss: LossTerms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub translations: Vec<[f64; 3]>,
}

impl TruthFile {
    pub fn new(translations: &[Vec3]) -> Self {
        TruthFile {
            translations: translations.iter().map(|t| (*t).into()).collect(),
        }
    }

    pub fn translations(&self) -> Vec<Vec3> {
        self.translations.iter().map(|&t| Vec3::from(t)).collect()
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("artifact types serialize");
    out.push(b'\n');
    out
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json_bytes(value)).map_err(|e| Error::io(path, e))
}

pub fn write_motion_json(
    report: &OptimizeReport,
    seq: &MotionSequence,
    config: &OptimizeConfig,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_json(&MotionFile::new(report, seq, config)?, path)
}

pub fn read_motion_json(path: impl AsRef<Path>) -> Result<MotionFile> {
    read_json(path)
}

/// Writes every `(file name, bytes)` pair into `dir`, or none of them.
///
/// Each file is first written to a temporary file in `dir`; the temporaries
/// are renamed into place only after all writes succeed.
pub fn write_files_atomically(dir: impl AsRef<Path>, files: &[(&str, Vec<u8>)]) -> Result<()> {
    use std::io::Write;

    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let mut tmp = tempfile::Builder::new()
            .prefix(&format!(".{name}."))
            .tempfile_in(dir)
            .map_err(|e| Error::io(dir, e))?;
        tmp.write_all(bytes)
            .and_then(|_| tmp.as_file().sync_all())
            .map_err(|e| Error::io(tmp.path(), e))?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, dest) in staged {
        tmp.persist(&dest).map_err(|e| Error::io(&dest, e.error))?;
    }
    Ok(())
}
