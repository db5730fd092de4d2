//! Adam descent over per-frame body translations.
//!
//! Only translations move. The objective is the Chamfer distance between
//! each keyframe body and that keyframe's human points, plus the relative
//! root loss against the Gaussian-smoothed initial root trajectory.

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::chamfer::{extract_human_points, ChamferTarget, PointSet};
use crate::error::{Error, Result};
use crate::geometry::{PointMap, Vec3};
use crate::scene::HumanMask;
use crate::trajectory::{gaussian_smooth, root_loss, RootTrajectory};

const LOG_EVERY: usize = 50;

/// One frame's body: frozen canonical geometry plus its free translation.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyFrame {
    pub canonical_vertices: PointSet,
    pub canonical_root: Vec3,
    pub translation: Vec3,
}

impl BodyFrame {
    pub fn new(
        canonical_vertices: PointSet,
        canonical_root: Vec3,
        translation: Vec3,
    ) -> Result<Self> {
        if canonical_vertices.is_empty() {
            return Err(Error::validation("body frame has no canonical vertices"));
        }
        if !canonical_root.iter().all(|v| v.is_finite()) {
            return Err(Error::validation("canonical root is not finite"));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::validation("translation is not finite"));
        }
        Ok(BodyFrame {
            canonical_vertices,
            canonical_root,
            translation,
        })
    }

    pub fn root(&self) -> Vec3 {
        self.canonical_root + self.translation
    }

    pub fn vertices(&self) -> PointSet {
        self.canonical_vertices.translated(&self.translation)
    }
}

/// All frames of one clip. The keyframes are always the first and last frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    frames: Vec<BodyFrame>,
    initial_translations: Vec<Vec3>,
}

impl MotionSequence {
    /// Takes each frame's current translation as its initial translation.
    pub fn new(frames: Vec<BodyFrame>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::validation(format!(
                "a motion sequence needs at least 2 frames, got {}",
                frames.len()
            )));
        }
        let initial_translations = frames.iter().map(|f| f.translation).collect();
        Ok(MotionSequence {
            frames,
            initial_translations,
        })
    }

    pub fn frames(&self) -> &[BodyFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn keyframes(&self) -> (usize, usize) {
        (0, self.frames.len() - 1)
    }

    pub fn initial_translations(&self) -> &[Vec3] {
        &self.initial_translations
    }

    pub fn translations(&self) -> Vec<Vec3> {
        self.frames.iter().map(|f| f.translation).collect()
    }

    /// Copy with new current translations; canonical data and initial translations are kept.
    pub fn with_translations(&self, translations: &[Vec3]) -> Result<Self> {
        if translations.len() != self.frames.len() {
            return Err(Error::validation(format!(
                "{} translations for {} frames",
                translations.len(),
                self.frames.len()
            )));
        }
        let frames = self
            .frames
            .iter()
            .zip(translations)
            .map(|(f, t)| BodyFrame {
                translation: *t,
                ..f.clone()
            })
            .collect();
        Ok(MotionSequence {
            frames,
            initial_translations: self.initial_translations.clone(),
        })
    }

    pub fn roots(&self) -> Result<RootTrajectory> {
        RootTrajectory::new(self.frames.iter().map(BodyFrame::root).collect())
    }

    pub fn initial_roots(&self) -> Result<RootTrajectory> {
        RootTrajectory::new(
            self.frames
                .iter()
                .zip(&self.initial_translations)
                .map(|(f, t)| f.canonical_root + t)
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Standard deviation, in frames, of the filter applied to the initial root trajectory.
    pub gaussian_sigma: f64,
    /// Use every n-th canonical vertex in the Chamfer terms.
    pub vertex_stride: usize,
    pub body_weight: f64,
    pub root_weight: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            iterations: 600,
            learning_rate: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            gaussian_sigma: 3.0,
            vertex_stride: 1,
            body_weight: 1.0,
            root_weight: 1.0,
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        };
        positive("learning_rate", self.learning_rate)?;
        positive("adam_epsilon", self.adam_epsilon)?;
        positive("gaussian_sigma", self.gaussian_sigma)?;
        for (name, beta) in [
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
        ] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::validation(format!(
                    "{name} must lie in [0, 1), got {beta}"
                )));
            }
        }
        for (name, w) in [
            ("body_weight", self.body_weight),
            ("root_weight", self.root_weight),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::validation(format!(
                    "{name} must be finite and >= 0, got {w}"
                )));
            }
        }
        if self.vertex_stride == 0 {
            return Err(Error::validation("vertex_stride must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub total: f64,
    pub body: f64,
    pub root: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGrads {
    pub terms: LossTerms,
    pub grads: Vec<Vec3>,
}

/// Full objective with its static pieces (target indices, subsampled
/// canonical keyframe vertices and the smoothed reference) prepared once.
#[derive(Debug, Clone)]
pub struct Objective {
    targets: [ChamferTarget; 2],
    keyframe_vertices: [PointSet; 2],
    canonical_roots: Vec<Vec3>,
    reference: RootTrajectory,
    body_weight: f64,
    root_weight: f64,
}

impl Objective {
    pub fn new(
        seq: &MotionSequence,
        targets: [PointSet; 2],
        smoothed_init: RootTrajectory,
        vertex_stride: usize,
        body_weight: f64,
        root_weight: f64,
    ) -> Result<Self> {
        if smoothed_init.len() != seq.len() {
            return Err(Error::validation(format!(
                "reference trajectory has {} frames, sequence has {}",
                smoothed_init.len(),
                seq.len()
            )));
        }
        let (first, last) = seq.keyframes();
        let [t0, t1] = targets;
        let sub = |k: usize| seq.frames()[k].canonical_vertices.subsample(vertex_stride);
        Ok(Objective {
            targets: [ChamferTarget::new(t0)?, ChamferTarget::new(t1)?],
            keyframe_vertices: [sub(first), sub(last)],
            canonical_roots: seq.frames().iter().map(|f| f.canonical_root).collect(),
            reference: smoothed_init,
            body_weight,
            root_weight,
        })
    }

    pub fn reference(&self) -> &RootTrajectory {
        &self.reference
    }

    pub fn evaluate(&self, translations: &[Vec3]) -> Result<LossAndGrads> {
        let n = self.canonical_roots.len();
        if translations.len() != n {
            return Err(Error::validation(format!(
                "{} translations for {n} frames",
                translations.len()
            )));
        }
        let roots = RootTrajectory::new(
            self.canonical_roots
                .iter()
                .zip(translations)
                .map(|(c, t)| c + t)
                .collect(),
        )?;
        let rl = root_loss(&roots, &self.reference)?;
        let mut grads: Vec<Vec3> = rl.grads.iter().map(|g| g * self.root_weight).collect();

        let mut body = 0.0;
        for (slot, frame) in [0, n - 1].into_iter().enumerate() {
            let cg = self.targets[slot]
                .loss_and_grad(&self.keyframe_vertices[slot], &translations[frame])?;
            body += cg.loss;
            grads[frame] += cg.grad * self.body_weight;
        }
        let root = rl.loss;
        Ok(LossAndGrads {
            terms: LossTerms {
                total: self.body_weight * body + self.root_weight * root,
                body,
                root,
            },
            grads,
        })
    }
}

/// Unweighted objective at the sequence's current translations, all vertices used.
pub fn total_loss_and_grads(
    seq: &MotionSequence,
    targets: &[PointSet; 2],
    smoothed_init: &RootTrajectory,
) -> Result<LossAndGrads> {
    Objective::new(seq, targets.clone(), smoothed_init.clone(), 1, 1.0, 1.0)?
        .evaluate(&seq.translations())
}

/// First and second moment estimates, one per translation.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec3>,
    pub v: Vec<Vec3>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![Vec3::zeros(); len],
            v: vec![Vec3::zeros(); len],
        }
    }
}

/// Bias-corrected Adam update. `step_index` counts from 1.
pub fn adam_step(
    params: &mut [Vec3],
    grads: &[Vec3],
    state: &mut AdamState,
    step_index: usize,
    config: &OptimizeConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() || params.len() != state.v.len()
    {
        return Err(Error::validation(format!(
            "adam shapes disagree: {} params, {} grads, {}/{} moments",
            params.len(),
            grads.len(),
            state.m.len(),
            state.v.len()
        )));
    }
    if step_index == 0 {
        return Err(Error::validation("adam step index starts at 1"));
    }
    if let Some(frame) = grads.iter().position(|g| !g.iter().all(|v| v.is_finite())) {
        return Err(Error::NonFinite {
            quantity: "gradient",
            frame,
        });
    }

    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let step = step_index as i32;
    let bias1 = 1.0 - b1.powi(step);
    let bias2 = 1.0 - b2.powi(step);
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for a in 0..3 {
            m[a] = b1 * m[a] + (1.0 - b1) * g[a];
            v[a] = b2 * v[a] + (1.0 - b2) * g[a] * g[a];
            let m_hat = m[a] / bias1;
            let v_hat = v[a] / bias2;
            p[a] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_epsilon);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeReport {
    /// Loss before each step; one entry per iteration.
    pub loss_history: Vec<LossTerms>,
    /// Loss at the final translations.
    pub final_loss: LossTerms,
    pub final_translations: Vec<Vec3>,
    pub iterations_run: usize,
    /// Human points used as the Chamfer target at the first and last keyframe.
    pub target_sizes: [usize; 2],
}

/// Runs the descent against human points taken from the keyframe point maps.
///
/// `scene_inputs` holds the reference-scale point map and human mask of the
/// first and last keyframe.
pub fn optimize(
    seq: &MotionSequence,
    scene_inputs: [(&PointMap, &HumanMask); 2],
    config: &OptimizeConfig,
) -> Result<OptimizeReport> {
    let (first, last) = seq.keyframes();
    let extract = |(pm, mask): (&PointMap, &HumanMask), frame: usize| {
        extract_human_points(pm, mask).map_err(|e| match e {
            Error::HumanNotVisible { .. } => Error::HumanNotVisible {
                keyframe: Some(frame),
            },
            other => other,
        })
    };
    let targets = [
        extract(scene_inputs[0], first)?,
        extract(scene_inputs[1], last)?,
    ];
    optimize_with_targets(seq, targets, config)
}

/// Runs the descent against explicit human target sets for the two keyframes.
pub fn optimize_with_targets(
    seq: &MotionSequence,
    targets: [PointSet; 2],
    config: &OptimizeConfig,
) -> Result<OptimizeReport> {
    config.validate()?;
    for (slot, t) in targets.iter().enumerate() {
        if t.is_empty() {
            let frame = if slot == 0 { 0 } else { seq.len() - 1 };
            return Err(Error::HumanNotVisible {
                keyframe: Some(frame),
            });
        }
    }
    let target_sizes = [targets[0].len(), targets[1].len()];
    let reference = gaussian_smooth(&seq.initial_roots()?, config.gaussian_sigma)?;
    let objective = Objective::new(
        seq,
        targets,
        reference,
        config.vertex_stride,
        config.body_weight,
        config.root_weight,
    )?;

    let mut params = seq.translations();
    let mut state = AdamState::new(params.len());
    let mut history = Vec::with_capacity(config.iterations);
    for it in 0..config.iterations {
        let eval = objective.evaluate(&params)?;
        if !eval.terms.total.is_finite() {
            return Err(Error::Numerical(format!(
                "loss became {} at iteration {it}",
                eval.terms.total
            )));
        }
        if it % LOG_EVERY == 0 {
            info!(
                "iter {it:>4}: loss {:.6e} (body {:.6e}, root {:.6e})",
                eval.terms.total, eval.terms.body, eval.terms.root
            );
        }
        history.push(eval.terms);
        adam_step(&mut params, &eval.grads, &mut state, it + 1, config)?;
    }
    let final_loss = objective.evaluate(&params)?.terms;
    debug!(
        "finished {} iterations: loss {:.6e}",
        config.iterations, final_loss.total
    );

    Ok(OptimizeReport {
        loss_history: history,
        final_loss,
        final_translations: params,
        iterations_run: config.iterations,
        target_sizes,
    })
}
