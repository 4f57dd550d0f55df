//! Floater's mean value weights of an embedded placement. The placement is
//! balanced with respect to its own mean value weights, so these weights
//! are a right inverse of the Tutte map.

use crate::error::{Error, Result};
use crate::geometry::{face_signed_area, lifted_edge_vector, verify_embedding, Placement, Vec2, AREA_EPS};
use crate::mesh::TorusTriangulation;
use crate::solver::WeightAssignment;

/// `tan(theta / 2)` for the counter-clockwise angle from `u` to `v`,
/// as `(|u||v| - u.v) / (u x v)`.
fn half_angle_tan(u: Vec2, v: Vec2) -> f64 {
    let cross = u.x * v.y - u.y * v.x;
    (u.norm() * v.norm() - u.dot(&v)) / cross
}

/// `w_ij = (tan(alpha/2) + tan(beta/2)) / l_ij`, where alpha and beta are the
/// angles at `i` of the two faces sharing edge `ij`.
pub fn mean_value_weights(mesh: &TorusTriangulation, p: &Placement) -> Result<WeightAssignment> {
    p.check_size(mesh)?;
    if !verify_embedding(mesh, p).is_embedding {
        return Err(Error::NotEmbedded);
    }
    let mut values = Vec::with_capacity(mesh.directed_edge_count());
    for e in 0..mesh.directed_edge_count() {
        // faces (i, j, next) and (i, prev, j) around i
        let next = mesh.rotation_next(e);
        let prev = mesh.rotation_prev(e);
        for f in [mesh.left_face(e), mesh.left_face(prev)] {
            if face_signed_area(mesh, p, f).abs() < AREA_EPS {
                return Err(Error::NotEmbedded);
            }
        }
        let eij = lifted_edge_vector(mesh, p, e);
        let alpha = half_angle_tan(eij, lifted_edge_vector(mesh, p, next));
        let beta = half_angle_tan(lifted_edge_vector(mesh, p, prev), eij);
        values.push((alpha + beta) / eij.norm());
    }
    Ok(WeightAssignment::from_values_unchecked(values))
}

/// Largest vertex imbalance `|| sum_j w_ij (x_j - x_i + b_ij) ||`.
pub fn check_balanced(mesh: &TorusTriangulation, p: &Placement, w: &WeightAssignment) -> f64 {
    (0..mesh.vertex_count())
        .map(|i| {
            mesh.out_edges(i)
                .map(|e| lifted_edge_vector(mesh, p, e) * w.get(e))
                .fold(Vec2::zeros(), |acc, v| acc + v)
                .norm()
        })
        .fold(0.0, f64::max)
}
