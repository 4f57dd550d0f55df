//! Lifted edge vectors, signed areas, corner angles and the embedding
//! certificate for simplexwise-linear maps into the flat torus.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{EdgeId, TorusTriangulation};

pub type Vec2 = Vector2<f64>;

/// Faces with signed area at or below this are not counted as embedded.
pub const AREA_EPS: f64 = 1e-12;
/// Allowed deviation of the total signed area from one.
pub const DEGREE_TOL: f64 = 1e-9;

/// Lifted vertex coordinates of a map from the triangulation to the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct Placement {
    coords: Vec<Vec2>,
}

impl Placement {
    pub fn new(coords: Vec<Vec2>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::NonFiniteCoordinate(i));
        }
        Ok(Self { coords })
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        Self::new(pairs.iter().map(|&[x, y]| Vec2::new(x, y)).collect())
    }

    pub fn coords(&self) -> &[Vec2] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> Vec2 {
        self.coords[i]
    }

    /// Vertex 0 sits exactly at the origin.
    pub fn is_anchored(&self) -> bool {
        self.coords.first().is_some_and(|p| p.x == 0.0 && p.y == 0.0)
    }

    /// Translate so vertex 0 sits at the origin.
    pub fn anchored(&self) -> Self {
        let base = self.coords.first().copied().unwrap_or_else(Vec2::zeros);
        Self { coords: self.coords.iter().map(|p| p - base).collect() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { coords: self.coords.iter().map(|p| p * factor).collect() }
    }

    pub fn translated(&self, offset: Vec2) -> Self {
        Self { coords: self.coords.iter().map(|p| p + offset).collect() }
    }

    /// Largest coordinate difference to another placement.
    pub fn sup_distance(&self, other: &Placement) -> f64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| (a.x - b.x).abs().max((a.y - b.y).abs())).fold(0.0, f64::max)
    }

    pub fn check_size(&self, mesh: &TorusTriangulation) -> Result<()> {
        if self.coords.len() != mesh.vertex_count() {
            return Err(Error::PlacementSize { expected: mesh.vertex_count(), got: self.coords.len() });
        }
        Ok(())
    }
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// `x_j + b_ij - x_i` for the directed edge `e = i -> j`.
///
/// Evaluated on the `i < j` orientation and negated for the other, so the
/// two directions are exact negatives of each other.
pub fn lifted_edge_vector(mesh: &TorusTriangulation, p: &Placement, e: EdgeId) -> Vec2 {
    let (i, j) = mesh.edge(e);
    if i > j {
        return -lifted_edge_vector(mesh, p, mesh.reverse(e));
    }
    let b = mesh.shift(e);
    Vec2::new(p.coords[j].x + b.x as f64 - p.coords[i].x, p.coords[j].y + b.y as f64 - p.coords[i].y)
}

/// Signed area of face `f`, positive when its image is counter-clockwise.
pub fn face_signed_area(mesh: &TorusTriangulation, p: &Placement, f: usize) -> f64 {
    let [ab, _, ca] = mesh.face_edges(f);
    let u = lifted_edge_vector(mesh, p, ab);
    let v = -lifted_edge_vector(mesh, p, ca);
    0.5 * cross(u, v)
}

/// Inner angle of face `f` at its corner `vertex`, in `(0, pi)`.
pub fn corner_angle(mesh: &TorusTriangulation, p: &Placement, f: usize, vertex: usize) -> Result<f64> {
    if face_signed_area(mesh, p, f).abs() < AREA_EPS {
        return Err(Error::DegenerateFace(f));
    }
    let (u, v) = corner_vectors(mesh, p, f, vertex).ok_or(Error::NotACorner(vertex, f))?;
    Ok(unsigned_angle(u, v))
}

/// The two lifted edge vectors leaving `vertex` inside face `f`, in
/// counter-clockwise face order.
pub(crate) fn corner_vectors(
    mesh: &TorusTriangulation,
    p: &Placement,
    f: usize,
    vertex: usize,
) -> Option<(Vec2, Vec2)> {
    let face = mesh.faces()[f];
    let r = face.iter().position(|&v| v == vertex)?;
    let (j, k) = (face[(r + 1) % 3], face[(r + 2) % 3]);
    let eij = mesh.edge_id(vertex, j)?;
    let eik = mesh.edge_id(vertex, k)?;
    Some((lifted_edge_vector(mesh, p, eij), lifted_edge_vector(mesh, p, eik)))
}

fn unsigned_angle(u: Vec2, v: Vec2) -> f64 {
    cross(u, v).abs().atan2(u.dot(&v))
}

/// Certificate that a placement is a degree-one simplexwise-linear
/// homeomorphism onto the unit torus.
#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingReport {
    pub face_areas: Vec<f64>,
    pub total_area: f64,
    pub min_area: f64,
    /// `2 pi` minus the angle sum at each vertex.
    pub vertex_angle_defects: Vec<f64>,
    pub is_embedding: bool,
    pub degree: i64,
}

impl EmbeddingReport {
    pub fn max_abs_angle_defect(&self) -> f64 {
        self.vertex_angle_defects.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Faces with non-positive area beyond tolerance.
    pub fn flipped_faces(&self) -> Vec<usize> {
        (0..self.face_areas.len()).filter(|&f| self.face_areas[f] <= AREA_EPS).collect()
    }
}

pub fn verify_embedding(mesh: &TorusTriangulation, p: &Placement) -> EmbeddingReport {
    let face_areas: Vec<f64> = (0..mesh.face_count()).map(|f| face_signed_area(mesh, p, f)).collect();
    let total_area: f64 = face_areas.iter().sum();
    let min_area = face_areas.iter().copied().fold(f64::INFINITY, f64::min);

    let mut angle_sums = vec![0.0; mesh.vertex_count()];
    for (f, face) in mesh.faces().iter().enumerate() {
        for &v in face {
            if let Some((a, b)) = corner_vectors(mesh, p, f, v) {
                angle_sums[v] += unsigned_angle(a, b);
            }
        }
    }
    let vertex_angle_defects = angle_sums.iter().map(|s| 2.0 * PI - s).collect();

    let is_embedding = min_area > AREA_EPS && (total_area - 1.0).abs() <= DEGREE_TOL;
    EmbeddingReport {
        face_areas,
        total_area,
        min_area,
        vertex_angle_defects,
        is_embedding,
        degree: total_area.round() as i64,
    }
}
