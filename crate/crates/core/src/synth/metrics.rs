//! Root and vertex position errors against ground truth.

use serde::{Deserialize, Serialize};

use crate::chamfer::PointSet;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::optimizer::MotionSequence;

/// Mean and population standard deviation over frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MeanStd {
                mean: 0.0,
                std: 0.0,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd {
            mean,
            std: var.sqrt(),
        }
    }
}

fn same_len(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::validation(format!(
            "{what}: {a} predicted frames vs {b} ground-truth frames"
        )));
    }
    Ok(())
}

/// Euclidean root error of each frame.
pub fn root_errors(predicted: &[Vec3], truth: &[Vec3]) -> Result<Vec<f64>> {
    same_len("root error", predicted.len(), truth.len())?;
    Ok(predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).norm())
        .collect())
}

/// Mean root position error in meters.
pub fn mrpe(predicted: &[Vec3], truth: &[Vec3]) -> Result<f64> {
    let errs = root_errors(predicted, truth)?;
    Ok(MeanStd::of(&errs).mean)
}

/// Mean corresponding-vertex distance of each frame.
pub fn vertex_errors(predicted: &[PointSet], truth: &[PointSet]) -> Result<Vec<f64>> {
    same_len("vertex error", predicted.len(), truth.len())?;
    predicted
        .iter()
        .zip(truth)
        .enumerate()
        .map(|(t, (p, q))| {
            if p.len() != q.len() || p.is_empty() {
                return Err(Error::validation(format!(
                    "frame {t}: {} predicted vs {} ground-truth vertices",
                    p.len(),
                    q.len()
                )));
            }
            let sum: f64 = p
                .points()
                .iter()
                .zip(q.points())
                .map(|(a, b)| (a - b).norm())
                .sum();
            Ok(sum / p.len() as f64)
        })
        .collect()
}

/// Mean vertex-to-vertex error in meters, averaged over frames and vertices.
pub fn v2v(predicted: &[PointSet], truth: &[PointSet]) -> Result<f64> {
    let errs = vertex_errors(predicted, truth)?;
    Ok(MeanStd::of(&errs).mean)
}

/// Root and vertex errors of predicted translations for a motion sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub frame_count: usize,
    pub mrpe: MeanStd,
    pub v2v: MeanStd,
}

/// Scores `predicted` against `truth` translations, both applied to the
/// canonical bodies and roots of `seq`.
pub fn evaluate(predicted: &[Vec3], truth: &[Vec3], seq: &MotionSequence) -> Result<EvalReport> {
    same_len("evaluation", predicted.len(), truth.len())?;
    same_len("evaluation", truth.len(), seq.len())?;
    let roots = |ts: &[Vec3]| -> Vec<Vec3> {
        seq.frames()
            .iter()
            .zip(ts)
            .map(|(f, t)| f.canonical_root + t)
            .collect()
    };
    let bodies = |ts: &[Vec3]| -> Vec<PointSet> {
        seq.frames()
            .iter()
            .zip(ts)
            .map(|(f, t)| f.canonical_vertices.translated(t))
            .collect()
    };
    Ok(EvalReport {
        frame_count: seq.len(),
        mrpe: MeanStd::of(&root_errors(&roots(predicted), &roots(truth))?),
        v2v: MeanStd::of(&vertex_errors(&bodies(predicted), &bodies(truth))?),
    })
}
