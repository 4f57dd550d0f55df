//! Tutte embeddings of geodesic triangulations on the flat torus, a weight
//! flow that repairs non-admissible weights, and morphs between embeddings.

pub mod error;
pub mod fixtures;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod morph;
pub mod mvc;
pub mod oneform;
pub mod solver;
pub mod sparse;
pub mod svg;

pub use error::{Error, Result};
pub use fixtures::{gen_grid, lattice_torus, perturb, seven_vertex_torus};
pub use flow::{flow_constants, retract, FlowConstants, FlowStatus, FlowTrace, RetractOptions};
pub use geometry::{verify_embedding, EmbeddingReport, Placement, Vec2};
pub use mesh::{build_mesh, EdgeId, LatticeShift, TorusTriangulation};
pub use morph::{morph, verify_morph, Morph, MorphVerification};
pub use mvc::{check_balanced, mean_value_weights};
pub use oneform::{direction_form, index_theorem_check, DiscreteOneForm, HalfInteger, IndexReport};
pub use solver::{energy, is_admissible, residual_structure, solve_balance, tutte_map, WeightAssignment};
pub use svg::{render_svg, SvgOptions};
