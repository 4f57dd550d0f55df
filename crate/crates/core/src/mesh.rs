//! Combinatorial torus triangulations carrying a lattice-shift cocycle.
//!
//! A vertex `i` of the triangulation is drawn at a lifted point `x_i` in the
//! plane. The directed edge `i -> j` runs from `x_i` to `x_j + b_ij`, where
//! `b_ij` is an integer lattice shift. Shifts are antisymmetric and close up
//! around every face, and they are required to represent the identity
//! homotopy class of the torus.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest vertex count of a simplicial torus triangulation.
pub const MIN_VERTICES: usize = 7;

/// Index of a directed edge in canonical `(source, target)` order.
pub type EdgeId = usize;

/// Integer translation in the lattice `Z^2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeShift {
    pub x: i64,
    pub y: i64,
}

impl LatticeShift {
    pub const ZERO: LatticeShift = LatticeShift { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn is_zero(self) -> bool {
        self.x == 0 && self.y == 0
    }

    fn cross(self, other: Self) -> i64 {
        self.x * other.y - self.y * other.x
    }
}

impl Add for LatticeShift {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for LatticeShift {
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for LatticeShift {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for LatticeShift {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl fmt::Display for LatticeShift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A triangulation of the torus together with per-edge lattice shifts and the
/// counter-clockwise rotation system at every vertex.
///
/// Immutable once built; every accessor is a cheap lookup.
#[derive(Clone, Debug)]
pub struct TorusTriangulation {
    vertex_count: usize,
    faces: Vec<[usize; 3]>,
    /// directed edges sorted by (source, target)
    edges: Vec<(usize, usize)>,
    shifts: Vec<LatticeShift>,
    reverse: Vec<EdgeId>,
    /// `out_start[v]..out_start[v + 1]` are the outgoing edges of `v`
    out_start: Vec<usize>,
    /// face that has the directed edge on its counter-clockwise boundary
    left_face: Vec<usize>,
    /// position of each edge within its source's rotation
    rotation_slot: Vec<usize>,
    rotation: Vec<Vec<EdgeId>>,
}

/// Shortest combinatorial loops realizing the two lattice generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorLoops {
    /// Closed vertex sequence (first vertex not repeated) with shift sum (1, 0).
    pub horizontal: Vec<usize>,
    /// Closed vertex sequence with shift sum (0, 1).
    pub vertical: Vec<usize>,
}

impl GeneratorLoops {
    /// Number of edges in the horizontal loop.
    pub fn k(&self) -> usize {
        self.horizontal.len()
    }

    /// Number of edges in the vertical loop.
    pub fn k_prime(&self) -> usize {
        self.vertical.len()
    }
}

/// Builds a mesh, taking the vertex count as one past the largest index used.
pub fn build_mesh(faces: &[[usize; 3]], shifts: &BTreeMap<(usize, usize), LatticeShift>) -> Result<TorusTriangulation> {
    let n = faces.iter().flatten().copied().max().map_or(0, |m| m + 1);
    TorusTriangulation::new(n, faces, shifts)
}

impl TorusTriangulation {
    /// Validates the complex and shift data and derives the rotation system.
    ///
    /// `shifts` may list either or both orientations of an edge; a missing
    /// reverse is filled by antisymmetry and unlisted edges get `(0, 0)`.
    pub fn new(
        vertex_count: usize,
        faces: &[[usize; 3]],
        shifts: &BTreeMap<(usize, usize), LatticeShift>,
    ) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        for (f, &[a, b, c]) in faces.iter().enumerate() {
            for v in [a, b, c] {
                if v >= vertex_count {
                    return Err(Error::InvalidVertex(v));
                }
            }
            if a == b || b == c || a == c {
                return Err(Error::NotSimplicial { face: f, vertices: [a, b, c] });
            }
        }
        if vertex_count < MIN_VERTICES {
            return Err(Error::TooFewVertices(vertex_count));
        }

        // Directed edge incidences. A simplicial complex has one undirected
        // edge per vertex pair, so faces determine the edge set.
        let mut incidence: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (f, &[a, b, c]) in faces.iter().enumerate() {
            for (s, t) in [(a, b), (b, c), (c, a)] {
                incidence.entry((s, t)).or_default().push(f);
            }
        }
        for (&(s, t), fs) in &incidence {
            let back = incidence.get(&(t, s)).map_or(0, Vec::len);
            let total = fs.len() + back;
            if total != 2 {
                return Err(Error::NonManifoldEdge(s.min(t), s.max(t), total));
            }
            if back == 0 {
                return Err(Error::BadOrientation(s.min(t), s.max(t)));
            }
        }

        let edges: Vec<(usize, usize)> = incidence.keys().copied().collect();
        let edge_index: HashMap<(usize, usize), EdgeId> = edges.iter().enumerate().map(|(e, &st)| (st, e)).collect();
        let left_face: Vec<usize> = incidence.values().map(|fs| fs[0]).collect();
        let reverse: Vec<EdgeId> = edges.iter().map(|&(s, t)| edge_index[&(t, s)]).collect();

        let mut out_start = vec![0usize; vertex_count + 1];
        for &(s, _) in &edges {
            out_start[s + 1] += 1;
        }
        for v in 0..vertex_count {
            out_start[v + 1] += out_start[v];
        }

        // Shifts: explicit entries first, then antisymmetric fill.
        let mut given: Vec<Option<LatticeShift>> = vec![None; edges.len()];
        for (&(s, t), &b) in shifts {
            let e = *edge_index.get(&(s, t)).ok_or(Error::UnknownEdge(s, t))?;
            given[e] = Some(b);
        }
        let mut shift = vec![LatticeShift::ZERO; edges.len()];
        for e in 0..edges.len() {
            let (s, t) = edges[e];
            shift[e] = match (given[e], given[reverse[e]]) {
                (Some(b), Some(rb)) if b != -rb => return Err(Error::ShiftAntisymmetry(s, t)),
                (Some(b), _) => b,
                (None, Some(rb)) => -rb,
                (None, None) => LatticeShift::ZERO,
            };
        }

        for (f, &[a, b, c]) in faces.iter().enumerate() {
            let sum = shift[edge_index[&(a, b)]] + shift[edge_index[&(b, c)]] + shift[edge_index[&(c, a)]];
            if !sum.is_zero() {
                return Err(Error::CocycleViolation { face: f, sum_x: sum.x, sum_y: sum.y });
            }
        }

        let v = vertex_count as i64;
        let e_count = (edges.len() / 2) as i64;
        let chi = v - e_count + faces.len() as i64;
        if chi != 0 {
            return Err(Error::EulerCharacteristic(chi));
        }

        // connectivity (also catches isolated vertices)
        let mut seen = vec![false; vertex_count];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(_, t) in &edges[out_start[u]..out_start[u + 1]] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Disconnected);
        }

        // Rotation system: in a counter-clockwise face (i, j, k) the edge i->k
        // follows i->j around i.
        let mut successor = vec![usize::MAX; edges.len()];
        for &[a, b, c] in faces {
            for (i, j, k) in [(a, b, c), (b, c, a), (c, a, b)] {
                successor[edge_index[&(i, j)]] = edge_index[&(i, k)];
            }
        }
        let mut rotation = Vec::with_capacity(vertex_count);
        let mut rotation_slot = vec![0usize; edges.len()];
        for u in 0..vertex_count {
            let degree = out_start[u + 1] - out_start[u];
            let first = out_start[u];
            let mut cycle = vec![first];
            let mut cur = successor[first];
            while cur != first && cycle.len() <= degree {
                cycle.push(cur);
                cur = successor[cur];
            }
            if cur != first || cycle.len() != degree {
                return Err(Error::NonManifoldVertex(u));
            }
            for (slot, &e) in cycle.iter().enumerate() {
                rotation_slot[e] = slot;
            }
            rotation.push(cycle);
        }

        let mesh = Self {
            vertex_count,
            faces: faces.to_vec(),
            edges,
            shifts: shift,
            reverse,
            out_start,
            left_face,
            rotation_slot,
            rotation,
        };

        let degree = mesh.cocycle_degree();
        if degree != 1 {
            return Err(Error::HomotopyClass(degree));
        }
        Ok(mesh)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len() / 2
    }

    pub fn directed_edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// All directed edges in canonical order; the position is the [`EdgeId`].
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> (usize, usize) {
        self.edges[e]
    }

    pub fn shift(&self, e: EdgeId) -> LatticeShift {
        self.shifts[e]
    }

    pub fn reverse(&self, e: EdgeId) -> EdgeId {
        self.reverse[e]
    }

    /// Face whose counter-clockwise boundary contains `e`.
    pub fn left_face(&self, e: EdgeId) -> usize {
        self.left_face[e]
    }

    pub fn edge_id(&self, source: usize, target: usize) -> Option<EdgeId> {
        if source >= self.vertex_count {
            return None;
        }
        let range = self.out_start[source]..self.out_start[source + 1];
        self.edges[range.clone()].binary_search_by_key(&target, |&(_, t)| t).ok().map(|k| range.start + k)
    }

    /// Outgoing edges of `v` in canonical (target-sorted) order.
    pub fn out_edges(&self, v: usize) -> std::ops::Range<EdgeId> {
        self.out_start[v]..self.out_start[v + 1]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.out_start[v + 1] - self.out_start[v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_edges(v).map(move |e| self.edges[e].1)
    }

    /// Undirected edges as the ids of their `i -> j` orientation with `i < j`.
    pub fn undirected_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).filter(move |&e| self.edges[e].0 < self.edges[e].1)
    }

    /// Outgoing edges of `v` in counter-clockwise cyclic order.
    pub fn rotation_order(&self, v: usize) -> Result<&[EdgeId]> {
        self.rotation.get(v).map(Vec::as_slice).ok_or(Error::InvalidVertex(v))
    }

    /// Edge following `e` counter-clockwise around its source.
    pub fn rotation_next(&self, e: EdgeId) -> EdgeId {
        let rot = &self.rotation[self.edges[e].0];
        rot[(self.rotation_slot[e] + 1) % rot.len()]
    }

    /// Edge preceding `e` counter-clockwise around its source.
    pub fn rotation_prev(&self, e: EdgeId) -> EdgeId {
        let rot = &self.rotation[self.edges[e].0];
        rot[(self.rotation_slot[e] + rot.len() - 1) % rot.len()]
    }

    /// Directed boundary edges `(i->j, j->k, k->i)` of a face.
    pub fn face_edges(&self, f: usize) -> [EdgeId; 3] {
        let [a, b, c] = self.faces[f];
        let id = |s, t| self.edge_id(s, t).expect("face edge");
        [id(a, b), id(b, c), id(c, a)]
    }

    /// Signed degree of the shift cocycle: twice the total signed area of
    /// the placement with every vertex at the origin, halved. Placement
    /// independent, and equal to 1 in the identity class.
    fn cocycle_degree(&self) -> i64 {
        let twice: i64 = (0..self.faces.len())
            .map(|f| {
                let [ab, _, ca] = self.face_edges(f);
                self.shifts[ab].cross(-self.shifts[ca])
            })
            .sum();
        twice / 2
    }

    /// Shortest loops with shift sums `(1, 0)` and `(0, 1)`.
    pub fn generator_loops(&self) -> Result<GeneratorLoops> {
        let horizontal = self.shortest_loop(LatticeShift::new(1, 0)).ok_or(Error::NoGeneratorLoop(1, 0))?;
        let vertical = self.shortest_loop(LatticeShift::new(0, 1)).ok_or(Error::NoGeneratorLoop(0, 1))?;
        Ok(GeneratorLoops { horizontal, vertical })
    }

    /// Breadth-first search over `(vertex, accumulated shift)` states, one
    /// search per start vertex, keeping the overall shortest loop. Shift
    /// components are clamped to `[-V, V]`.
    fn shortest_loop(&self, target: LatticeShift) -> Option<Vec<usize>> {
        let bound = self.vertex_count as i64;
        let mut best: Option<Vec<usize>> = None;
        for start in 0..self.vertex_count {
            let limit = best.as_ref().map_or(usize::MAX, |b| b.len() - 1);
            let mut parent: HashMap<(usize, LatticeShift), (usize, LatticeShift)> = HashMap::new();
            let mut depth: HashMap<(usize, LatticeShift), usize> = HashMap::new();
            let origin = (start, LatticeShift::ZERO);
            depth.insert(origin, 0);
            let mut queue = VecDeque::from([origin]);
            let goal = (start, target);
            let mut found = false;
            'bfs: while let Some(state) = queue.pop_front() {
                let d = depth[&state];
                if d >= limit {
                    break;
                }
                let (u, acc) = state;
                for e in self.out_edges(u) {
                    let next = (self.edges[e].1, acc + self.shifts[e]);
                    if next.1.x.abs() > bound || next.1.y.abs() > bound || depth.contains_key(&next) {
                        continue;
                    }
                    depth.insert(next, d + 1);
                    parent.insert(next, state);
                    if next == goal {
                        found = true;
                        break 'bfs;
                    }
                    queue.push_back(next);
                }
            }
            if found {
                let mut path = Vec::new();
                let mut cur = goal;
                while cur != origin {
                    cur = parent[&cur];
                    path.push(cur.0);
                }
                path.reverse();
                best = Some(path);
            }
        }
        best
    }
}
