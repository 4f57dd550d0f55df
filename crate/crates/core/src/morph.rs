//! Morphs between two embeddings with the same combinatorics.
//!
//! Both endpoints are converted to mean value weights. Each intermediate
//! frame linearly blends the two weight sets, retracts the blend onto the
//! admissible set, and takes the Tutte embedding of the result.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{retract, FlowStatus, RetractOptions};
use crate::geometry::{verify_embedding, Placement};
use crate::mesh::TorusTriangulation;
use crate::mvc::mean_value_weights;
use crate::solver::{tutte_map, WeightAssignment};

#[derive(Clone, Debug, Serialize)]
pub struct MorphFrame {
    pub t: f64,
    pub placement: Placement,
    /// Energy of the blended weights before retraction.
    pub blended_energy: f64,
    pub retract_steps: usize,
    pub retract_status: FlowStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct Morph {
    pub frames: Vec<MorphFrame>,
}

impl Morph {
    pub fn placements(&self) -> Vec<Placement> {
        self.frames.iter().map(|f| f.placement.clone()).collect()
    }
}

/// `steps` frames at `t = k / (steps - 1)`, endpoints included.
pub fn morph(
    mesh: &TorusTriangulation,
    p0: &Placement,
    p1: &Placement,
    steps: usize,
    opts: &RetractOptions,
) -> Result<Morph> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("morph needs at least 2 frames, got {steps}")));
    }
    let w0 = mean_value_weights(mesh, p0)?;
    let w1 = mean_value_weights(mesh, p1)?;
    let frames = (0..steps)
        .map(|k| {
            let t = k as f64 / (steps - 1) as f64;
            let blend = WeightAssignment::lerp(&w0, &w1, t);
            let trace = retract(mesh, &blend, opts)?;
            if trace.status == FlowStatus::BudgetExceeded {
                return Err(Error::RetractFailed {
                    t,
                    reason: format!(
                        "energy {:e} after {} steps, {} rejected",
                        trace.final_energy(),
                        trace.steps,
                        trace.rejected
                    ),
                });
            }
            let placement = tutte_map(mesh, &trace.final_assignment(), opts.tol)?;
            Ok(MorphFrame {
                t,
                placement,
                blended_energy: trace.samples[0].energy,
                retract_steps: trace.steps,
                retract_status: trace.status,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Morph { frames })
}

#[derive(Clone, Debug, Serialize)]
pub struct FrameCheck {
    pub min_area: f64,
    pub total_area: f64,
    pub is_embedding: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MorphVerification {
    pub frames: Vec<FrameCheck>,
    /// Largest sup-norm displacement between consecutive frames.
    pub max_displacement: f64,
    pub first_failure: Option<usize>,
    pub passed: bool,
}

pub fn verify_morph(mesh: &TorusTriangulation, frames: &[Placement]) -> Result<MorphVerification> {
    for p in frames {
        p.check_size(mesh)?;
    }
    let checks: Vec<FrameCheck> = frames
        .iter()
        .map(|p| {
            let r = verify_embedding(mesh, p);
            FrameCheck { min_area: r.min_area, total_area: r.total_area, is_embedding: r.is_embedding }
        })
        .collect();
    let max_displacement = frames.windows(2).map(|w| w[0].sup_distance(&w[1])).fold(0.0, f64::max);
    let first_failure = checks.iter().position(|c| !c.is_embedding);
    Ok(MorphVerification { passed: first_failure.is_none(), frames: checks, max_displacement, first_failure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{gen_grid, perturb};
    use crate::geometry::Vec2;

    #[test]
    fn constant_morph_is_constant() {
        let (mesh, p) = gen_grid(4).unwrap();
        let m = morph(&mesh, &p, &p, 5, &RetractOptions::default()).unwrap();
        assert_eq!(m.frames.len(), 5);
        for f in &m.frames {
            assert!(f.placement.sup_distance(&p) < 1e-9);
            assert_eq!(f.retract_status, FlowStatus::AlreadyAdmissible);
        }
    }

    #[test]
    fn morph_reproduces_endpoints() {
        let (mesh, grid) = gen_grid(4).unwrap();
        let mut coords = grid.coords().to_vec();
        coords[5] += Vec2::new(0.05, 0.03);
        let moved = Placement::new(coords).unwrap();
        let m = morph(&mesh, &grid, &moved, 9, &RetractOptions::default()).unwrap();
        assert_eq!(m.frames.len(), 9);
        assert!(m.frames[0].placement.sup_distance(&grid) < 1e-6);
        assert!(m.frames[8].placement.sup_distance(&moved) < 1e-6);
        let v = verify_morph(&mesh, &m.placements()).unwrap();
        assert!(v.passed, "{v:?}");
        assert!(v.max_displacement < 0.05);
        for (k, f) in m.frames.iter().enumerate() {
            assert!((f.t - k as f64 / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn morph_between_perturbations() {
        let (mesh, grid) = gen_grid(4).unwrap();
        let a = perturb(&mesh, &grid, 0.06, 3).unwrap();
        let b = perturb(&mesh, &grid, 0.06, 4).unwrap();
        let m = morph(&mesh, &a, &b, 6, &RetractOptions::default()).unwrap();
        assert!(verify_morph(&mesh, &m.placements()).unwrap().passed);
        assert!(m.frames[5].placement.sup_distance(&b) < 1e-6);
    }

    #[test]
    fn verification_flags_bad_frames() {
        let (mesh, grid) = gen_grid(3).unwrap();
        let mut coords = grid.coords().to_vec();
        coords[4] = Vec2::new(-0.05, -0.05);
        let bad = Placement::new(coords).unwrap();
        let v = verify_morph(&mesh, &[grid.clone(), bad, grid.clone()]).unwrap();
        assert!(!v.passed);
        assert_eq!(v.first_failure, Some(1));

        let same = verify_morph(&mesh, &vec![grid.clone(); 5]).unwrap();
        assert_eq!(same.frames.len(), 5);
        assert!(same.passed);
        assert_eq!(same.max_displacement, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let (mesh, grid) = gen_grid(3).unwrap();
        assert!(matches!(morph(&mesh, &grid, &grid, 1, &RetractOptions::default()), Err(Error::InvalidArgument(_))));
        let mut coords = grid.coords().to_vec();
        coords[4] = Vec2::new(-0.05, -0.05);
        let bad = Placement::new(coords).unwrap();
        assert!(matches!(morph(&mesh, &grid, &bad, 3, &RetractOptions::default()), Err(Error::NotEmbedded)));
    }
}
