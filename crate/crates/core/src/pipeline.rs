//! End-to-end reconstruction of one input bundle.

use std::path::Path;

use log::info;

use crate::error::Result;
use crate::io::{
    encode_scene_ply, to_json_bytes, write_files_atomically, InputBundle, MotionFile, RunReport,
    MOTION_FILE, REPORT_FILE, SCENE_FILE,
};
use crate::optimizer::{optimize, MotionSequence, OptimizeConfig, OptimizeReport};
use crate::scene::{reconstruct_scene, SceneReconstruction};

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub scene: SceneReconstruction,
    pub optimization: OptimizeReport,
    pub config: OptimizeConfig,
    /// Input sequence with the optimized translations applied.
    pub sequence: MotionSequence,
}

impl Reconstruction {
    pub fn run_report(&self) -> RunReport {
        RunReport {
            frame_count: self.sequence.len(),
            scale_factor: self.scene.alpha,
            overlap_pixels: self.scene.overlap_pixels,
            scene_points: self.scene.scene.len(),
            human_points: self.optimization.target_sizes,
            iterations_run: self.optimization.iterations_run,
            initial_loss: self.optimization.loss_history.first().copied(),
            final_loss: self.optimization.final_loss,
        }
    }

    /// Writes `scene.ply`, `motion.json` and `report.json` into `dir`, all or nothing.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let motion = MotionFile::new(&self.optimization, &self.sequence, &self.config)?;
        write_files_atomically(
            dir,
            &[
                (SCENE_FILE, encode_scene_ply(&self.scene.scene)?),
                (MOTION_FILE, to_json_bytes(&motion)),
                (REPORT_FILE, to_json_bytes(&self.run_report())),
            ],
        )
    }
}

/// Scene reconstruction followed by translation optimization.
pub fn reconstruct(bundle: &InputBundle, config: &OptimizeConfig) -> Result<Reconstruction> {
    config.validate()?;
    let [first_mask, last_mask] = bundle.keyframe_masks();
    let scene = reconstruct_scene(
        &bundle.keyframes[0],
        &bundle.keyframes[1],
        first_mask,
        last_mask,
    )?;
    info!(
        "scene: scale factor {:.6}, {} points, {} overlapping mask pixels",
        scene.alpha,
        scene.scene.len(),
        scene.overlap_pixels
    );
    let optimization = optimize(
        &bundle.sequence,
        [
            (&scene.keyframe_maps[0], first_mask),
            (&scene.keyframe_maps[1], last_mask),
        ],
        config,
    )?;
    let sequence = bundle
        .sequence
        .with_translations(&optimization.final_translations)?;
    Ok(Reconstruction {
        scene,
        optimization,
        config: config.clone(),
        sequence,
    })
}
