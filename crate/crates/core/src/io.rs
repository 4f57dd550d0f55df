//! JSON formats for meshes, weights and placements, and JSONL flow traces.
//!
//! Mesh: `{"vertex_count": n, "faces": [[a, b, c], ...], "shifts": [[i, j, bx, by], ...]}`
//! where unlisted edges have zero shift and a listed `i -> j` implies
//! `j -> i` with the opposite shift.
//!
//! Weights: `{"weights": [[i, j, w], ...]}`, one entry per directed edge.
//!
//! Placement: `{"coords": [[x, y], ...]}`.
//!
//! Floats are written in shortest round-trip form, so parsing a written
//! file gives back the same bits.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::flow::FlowTrace;
use crate::geometry::{Placement, Vec2};
use crate::mesh::{LatticeShift, TorusTriangulation};
use crate::solver::WeightAssignment;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub vertex_count: usize,
    pub faces: Vec<[usize; 3]>,
    #[serde(default)]
    pub shifts: Vec<(usize, usize, i64, i64)>,
}

impl MeshFile {
    /// Nonzero shifts are listed once, on the `i < j` orientation.
    pub fn from_mesh(mesh: &TorusTriangulation) -> Self {
        let shifts = mesh
            .undirected_edges()
            .filter(|&e| !mesh.shift(e).is_zero())
            .map(|e| {
                let (i, j) = mesh.edge(e);
                let b = mesh.shift(e);
                (i, j, b.x, b.y)
            })
            .collect();
        Self { vertex_count: mesh.vertex_count(), faces: mesh.faces().to_vec(), shifts }
    }

    pub fn to_mesh(&self) -> Result<TorusTriangulation> {
        let mut map = BTreeMap::new();
        for &(i, j, bx, by) in &self.shifts {
            if map.insert((i, j), LatticeShift::new(bx, by)).is_some() {
                return Err(Error::DuplicateShift(i, j));
            }
        }
        TorusTriangulation::new(self.vertex_count, &self.faces, &map)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub weights: Vec<(usize, usize, f64)>,
}

impl WeightsFile {
    pub fn from_weights(mesh: &TorusTriangulation, w: &WeightAssignment) -> Self {
        let weights = (0..mesh.directed_edge_count())
            .map(|e| {
                let (i, j) = mesh.edge(e);
                (i, j, w.get(e))
            })
            .collect();
        Self { weights }
    }

    pub fn to_weights(&self, mesh: &TorusTriangulation) -> Result<WeightAssignment> {
        WeightAssignment::from_triples(mesh, &self.weights)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlacementFile {
    coords: Vec<[f64; 2]>,
}

impl Serialize for Placement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PlacementFile { coords: self.coords().iter().map(|p| [p.x, p.y]).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Placement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = PlacementFile::deserialize(d)?;
        Placement::new(file.coords.iter().map(|&[x, y]| Vec2::new(x, y)).collect()).map_err(serde::de::Error::custom)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    from_json(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn mesh_to_json(mesh: &TorusTriangulation) -> Result<String> {
    to_json(&MeshFile::from_mesh(mesh))
}

pub fn mesh_from_json(text: &str) -> Result<TorusTriangulation> {
    from_json::<MeshFile>(text)?.to_mesh()
}

pub fn read_mesh(path: &Path) -> Result<TorusTriangulation> {
    read_json::<MeshFile>(path)?.to_mesh()
}

pub fn weights_to_json(mesh: &TorusTriangulation, w: &WeightAssignment) -> Result<String> {
    to_json(&WeightsFile::from_weights(mesh, w))
}

pub fn weights_from_json(mesh: &TorusTriangulation, text: &str) -> Result<WeightAssignment> {
    from_json::<WeightsFile>(text)?.to_weights(mesh)
}

pub fn read_weights(mesh: &TorusTriangulation, path: &Path) -> Result<WeightAssignment> {
    read_json::<WeightsFile>(path)?.to_weights(mesh)
}

pub fn read_placement(path: &Path) -> Result<Placement> {
    read_json(path)
}

/// One line per accepted state, then a summary line with `"status"`.
pub fn write_trace_jsonl<W: Write>(mut out: W, trace: &FlowTrace) -> Result<()> {
    for s in &trace.samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        status: crate::flow::FlowStatus,
        steps: usize,
        rejected: usize,
        end_time: f64,
        final_energy: f64,
        beta: f64,
        initial: &'a crate::flow::FlowConstants,
    }
    serde_json::to_writer(
        &mut out,
        &Summary {
            status: trace.status,
            steps: trace.steps,
            rejected: trace.rejected,
            end_time: trace.end_time(),
            final_energy: trace.final_energy(),
            beta: trace.beta,
            initial: &trace.initial,
        },
    )?;
    out.write_all(b"\n")?;
    Ok(())
}
