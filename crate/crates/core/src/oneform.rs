//! Discrete one-forms, sign-change indices and the torus index theorem.
//!
//! The index of a vertex or face is `(2 - sc) / 2`, where `sc` counts sign
//! changes of the nonzero form values met in counter-clockwise order. For a
//! non-vanishing form on a torus triangulation the indices sum to zero.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{lifted_edge_vector, Placement, Vec2};
use crate::mesh::{EdgeId, TorusTriangulation};

/// Form values with magnitude at or below this count as zero.
pub const ZERO_THRESHOLD: f64 = 1e-13;
/// Angle increment between tries of the generic-direction sampler.
pub const DIRECTION_STEP: f64 = 0.6;
pub const DIRECTION_TRIES: usize = 64;

/// A half-integer stored as twice its value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInteger(pub i64);

impl HalfInteger {
    pub fn doubled(self) -> i64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// `(2 - sc) / 2`
    pub fn from_sign_changes(sc: usize) -> Self {
        HalfInteger(2 - sc as i64)
    }
}

impl std::ops::Add for HalfInteger {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        HalfInteger(self.0 + o.0)
    }
}

impl std::iter::Sum for HalfInteger {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(HalfInteger(0), |a, b| a + b)
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for HalfInteger {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

/// Antisymmetric real function on directed edges.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteOneForm {
    eta: Vec<f64>,
}

impl DiscreteOneForm {
    /// Requires `eta[reverse(e)] == -eta[e]` exactly.
    pub fn new(mesh: &TorusTriangulation, eta: Vec<f64>) -> Result<Self> {
        if eta.len() != mesh.directed_edge_count() {
            return Err(Error::InvalidArgument(format!(
                "one-form has {} values for {} directed edges",
                eta.len(),
                mesh.directed_edge_count()
            )));
        }
        for e in 0..eta.len() {
            if eta[mesh.reverse(e)] != -eta[e] {
                let (i, j) = mesh.edge(e);
                return Err(Error::NotAntisymmetric(i, j));
            }
        }
        Ok(Self { eta })
    }

    /// Values given on the `i < j` orientation of each edge.
    pub fn from_undirected(mesh: &TorusTriangulation, mut f: impl FnMut(EdgeId) -> f64) -> Self {
        let mut eta = vec![0.0; mesh.directed_edge_count()];
        for e in mesh.undirected_edges() {
            let v = f(e);
            eta[e] = v;
            eta[mesh.reverse(e)] = -v;
        }
        Self { eta }
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.eta[e]
    }

    pub fn values(&self) -> &[f64] {
        &self.eta
    }

    pub fn is_zero_on(&self, e: EdgeId) -> bool {
        self.eta[e].abs() <= ZERO_THRESHOLD
    }
}

/// `eta_ij = dir . (x_j - x_i + b_ij)`.
pub fn direction_form(mesh: &TorusTriangulation, p: &Placement, dir: Vec2) -> DiscreteOneForm {
    DiscreteOneForm::from_undirected(mesh, |e| dir.dot(&lifted_edge_vector(mesh, p, e)))
}

/// Tries directions at angles `start, start + 0.6, ...` until the direction
/// form vanishes on no edge. Returns the angle used and the form.
pub fn generic_direction_form(mesh: &TorusTriangulation, p: &Placement, start: f64) -> Option<(f64, DiscreteOneForm)> {
    (0..DIRECTION_TRIES).find_map(|k| {
        let angle = start + DIRECTION_STEP * k as f64;
        let form = direction_form(mesh, p, Vec2::new(angle.cos(), angle.sin()));
        (0..mesh.directed_edge_count()).all(|e| !form.is_zero_on(e)).then_some((angle, form))
    })
}

/// Cyclic sign changes among the nonzero entries, or `None` if all vanish.
pub fn sign_changes_cyclic(values: &[f64]) -> Option<usize> {
    let signs: Vec<bool> = values.iter().filter(|v| v.abs() > ZERO_THRESHOLD).map(|&v| v > 0.0).collect();
    if signs.is_empty() {
        return None;
    }
    Some((0..signs.len()).filter(|&k| signs[k] != signs[(k + 1) % signs.len()]).count())
}

pub fn sign_changes_vertex(mesh: &TorusTriangulation, eta: &DiscreteOneForm, v: usize) -> Result<usize> {
    let values: Vec<f64> = mesh.rotation_order(v)?.iter().map(|&e| eta.get(e)).collect();
    sign_changes_cyclic(&values).ok_or(Error::DegenerateVertex(v))
}

pub fn index_vertex(mesh: &TorusTriangulation, eta: &DiscreteOneForm, v: usize) -> Result<HalfInteger> {
    sign_changes_vertex(mesh, eta, v).map(HalfInteger::from_sign_changes)
}

pub fn sign_changes_face(mesh: &TorusTriangulation, eta: &DiscreteOneForm, f: usize) -> Result<usize> {
    let values = mesh.face_edges(f).map(|e| eta.get(e));
    sign_changes_cyclic(&values).ok_or(Error::DegenerateFace(f))
}

pub fn index_face(mesh: &TorusTriangulation, eta: &DiscreteOneForm, f: usize) -> Result<HalfInteger> {
    sign_changes_face(mesh, eta, f).map(HalfInteger::from_sign_changes)
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    /// `None` for degenerate vertices.
    pub vertex_indices: Vec<Option<HalfInteger>>,
    /// `None` for degenerate faces.
    pub face_indices: Vec<Option<HalfInteger>>,
    pub degenerate_vertices: Vec<usize>,
    /// Undirected edges `(i, j)`, `i < j`, where the form vanishes.
    pub degenerate_edges: Vec<(usize, usize)>,
    pub degenerate_faces: Vec<usize>,
    /// Sum of all defined indices.
    pub total: HalfInteger,
    pub nonvanishing: bool,
}

impl IndexReport {
    /// The index theorem applies and its sum is zero.
    pub fn theorem_holds(&self) -> bool {
        self.nonvanishing && self.total == HalfInteger(0)
    }

    pub fn all_indices_zero(&self) -> bool {
        self.vertex_indices.iter().chain(&self.face_indices).all(|i| *i == Some(HalfInteger(0)))
    }
}

pub fn index_theorem_check(mesh: &TorusTriangulation, eta: &DiscreteOneForm) -> IndexReport {
    let vertex_indices: Vec<Option<HalfInteger>> =
        (0..mesh.vertex_count()).map(|v| index_vertex(mesh, eta, v).ok()).collect();
    let face_indices: Vec<Option<HalfInteger>> =
        (0..mesh.face_count()).map(|f| index_face(mesh, eta, f).ok()).collect();
    let degenerate_edges: Vec<(usize, usize)> =
        mesh.undirected_edges().filter(|&e| eta.is_zero_on(e)).map(|e| mesh.edge(e)).collect();
    let degenerate_vertices = (0..vertex_indices.len()).filter(|&v| vertex_indices[v].is_none()).collect();
    let degenerate_faces = (0..face_indices.len()).filter(|&f| face_indices[f].is_none()).collect();
    let total = vertex_indices.iter().chain(&face_indices).flatten().copied().sum();
    IndexReport {
        nonvanishing: degenerate_edges.is_empty(),
        vertex_indices,
        face_indices,
        degenerate_vertices,
        degenerate_edges,
        degenerate_faces,
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{gen_grid, perturb};
    use crate::geometry::verify_embedding;
    use proptest::prelude::*;

    #[test]
    fn sign_change_examples() {
        assert_eq!(sign_changes_cyclic(&[1.0, 1.0, 1.0, -1.0, -1.0, -1.0]), Some(2));
        assert_eq!(HalfInteger::from_sign_changes(2), HalfInteger(0));
        assert_eq!(sign_changes_cyclic(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0]), Some(6));
        assert_eq!(HalfInteger::from_sign_changes(6).value(), -2.0);
        assert_eq!(sign_changes_cyclic(&[0.2, -0.1, -0.1]), Some(2));
        assert_eq!(sign_changes_cyclic(&[0.0, 0.0, 0.0]), None);
        // zeros are skipped, not treated as a sign
        assert_eq!(sign_changes_cyclic(&[1.0, 0.0, 1.0, 0.0]), Some(0));
        assert_eq!(HalfInteger::from_sign_changes(0).value(), 1.0);
    }

    #[test]
    fn grid_direction_forms() {
        let (mesh, p) = gen_grid(3).unwrap();
        let eta = direction_form(&mesh, &p, Vec2::new(1.0, 0.0));
        let h = mesh.edge_id(0, 1).unwrap();
        let v = mesh.edge_id(0, 3).unwrap();
        assert!((eta.get(h) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(eta.get(v), 0.0);
        assert!(!index_theorem_check(&mesh, &eta).nonvanishing);

        let tilted = direction_form(&mesh, &p, Vec2::new(0.1f64.cos(), 0.1f64.sin()));
        assert!((0..mesh.directed_edge_count()).all(|e| !tilted.is_zero_on(e)));
        for f in 0..mesh.face_count() {
            let [a, b, c] = mesh.face_edges(f);
            assert!((tilted.get(a) + tilted.get(b) + tilted.get(c)).abs() < 1e-15);
        }
        let report = index_theorem_check(&mesh, &tilted);
        assert!(report.nonvanishing);
        assert!(report.all_indices_zero());
        assert!(report.theorem_holds());
    }

    #[test]
    fn degenerate_cells_are_reported() {
        let (mesh, _) = gen_grid(3).unwrap();
        let zero = DiscreteOneForm::from_undirected(&mesh, |_| 0.0);
        assert!(matches!(index_face(&mesh, &zero, 0), Err(Error::DegenerateFace(0))));
        assert!(matches!(index_vertex(&mesh, &zero, 2), Err(Error::DegenerateVertex(2))));
        let report = index_theorem_check(&mesh, &zero);
        assert!(!report.nonvanishing);
        assert_eq!(report.degenerate_vertices.len(), 9);
        assert_eq!(report.degenerate_faces.len(), 18);
        assert_eq!(report.degenerate_edges.len(), 27);
        assert!(!report.theorem_holds());
    }

    #[test]
    fn antisymmetry_enforced() {
        let (mesh, _) = gen_grid(3).unwrap();
        assert!(matches!(
            DiscreteOneForm::new(&mesh, vec![1.0; mesh.directed_edge_count()]),
            Err(Error::NotAntisymmetric(..))
        ));
        let ok = DiscreteOneForm::from_undirected(&mesh, |e| e as f64 + 1.0);
        assert!(DiscreteOneForm::new(&mesh, ok.values().to_vec()).is_ok());
    }

    #[test]
    fn perturbed_embeddings_have_zero_indices() {
        let (mesh, grid) = gen_grid(4).unwrap();
        let p = perturb(&mesh, &grid, 0.05, 12).unwrap();
        for k in 0..20 {
            let (_, eta) = generic_direction_form(&mesh, &p, 0.1 + 0.31 * k as f64).unwrap();
            let report = index_theorem_check(&mesh, &eta);
            assert!(report.nonvanishing);
            assert!(report.all_indices_zero());
            assert_eq!(report.total, HalfInteger(0));
        }
    }

    proptest! {
        #[test]
        fn sign_changes_are_even(values in proptest::collection::vec(-1.0f64..1.0, 1..12)) {
            if let Some(sc) = sign_changes_cyclic(&values) {
                prop_assert_eq!(sc % 2, 0);
            }
        }

        #[test]
        fn random_forms_satisfy_index_theorem(seed in 0u64..1000) {
            // arbitrary non-vanishing forms, not only direction forms
            let (mesh, _) = gen_grid(4).unwrap();
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let eta = DiscreteOneForm::from_undirected(&mesh, |_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                if v.abs() < 1e-6 { 0.25 } else { v }
            });
            let report = index_theorem_check(&mesh, &eta);
            prop_assert!(report.nonvanishing);
            prop_assert_eq!(report.total, HalfInteger(0));
        }

        #[test]
        fn balanced_vertices_have_nonpositive_index(seed in 0u64..200, angle in 0.0f64..std::f64::consts::TAU) {
            let (mesh, grid) = gen_grid(4).unwrap();
            let p = perturb(&mesh, &grid, 0.05, seed).unwrap();
            prop_assume!(verify_embedding(&mesh, &p).is_embedding);
            if let Some((_, eta)) = generic_direction_form(&mesh, &p, angle) {
                for v in 0..mesh.vertex_count() {
                    let sc = sign_changes_vertex(&mesh, &eta, v).unwrap();
                    prop_assert!(sc >= 2);
                    prop_assert!(index_vertex(&mesh, &eta, v).unwrap().value() <= 0.0);
                }
            }
        }
    }
}
