//! Test and demo fixtures: regular lattice tori and seeded perturbations.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{verify_embedding, Placement, Vec2};
use crate::mesh::{LatticeShift, TorusTriangulation};

/// Halvings attempted by [`perturb`] before giving up.
pub const MAX_HALVINGS: usize = 20;

/// The `m x m` grid: vertex `j * m + i` at `(i/m, j/m)`, every cell split by
/// its `(+1, +1)` diagonal.
pub fn gen_grid(m: usize) -> Result<(TorusTriangulation, Placement)> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!("grid size must be at least 3, got {m}")));
    }
    let m = m as i64;
    lattice_torus([m, 0], [0, m])
}

/// Minimal 7-vertex triangulation of the torus (the triangular lattice
/// modulo the index-7 sublattice spanned by `(1, 3)` and `(-2, 1)`).
pub fn seven_vertex_torus() -> (TorusTriangulation, Placement) {
    lattice_torus([1, 3], [-2, 1]).expect("7-vertex torus is a valid triangulation")
}

/// Quotient of the diagonal-split square lattice `Z^2` by the sublattice
/// spanned by `a` and `b`, mapped linearly so that `a -> (1, 0)` and
/// `b -> (0, 1)`. The vertex count is `det[a b]`, which must be positive.
pub fn lattice_torus(a: [i64; 2], b: [i64; 2]) -> Result<(TorusTriangulation, Placement)> {
    let det = a[0] * b[1] - a[1] * b[0];
    if det <= 0 {
        return Err(Error::InvalidArgument(format!("sublattice basis must be positively oriented, det = {det}")));
    }
    // fundamental coordinates of lattice point p, scaled by det
    let to_fund = |p: [i64; 2]| [b[1] * p[0] - b[0] * p[1], -a[1] * p[0] + a[0] * p[1]];

    let xs = [0, a[0], b[0], a[0] + b[0]];
    let ys = [0, a[1], b[1], a[1] + b[1]];
    let (x0, x1) = (*xs.iter().min().unwrap(), *xs.iter().max().unwrap());
    let (y0, y1) = (*ys.iter().min().unwrap(), *ys.iter().max().unwrap());

    let mut reps: Vec<([i64; 2], [i64; 2])> = Vec::new();
    for px in x0..=x1 {
        for py in y0..=y1 {
            let q = to_fund([px, py]);
            if (0..det).contains(&q[0]) && (0..det).contains(&q[1]) {
                reps.push(([px, py], q));
            }
        }
    }
    reps.sort_by_key(|&(_, q)| (q[1], q[0]));
    let label: HashMap<[i64; 2], usize> = reps.iter().enumerate().map(|(v, &(_, q))| (q, v)).collect();

    // vertex and lattice shift reached from rep `v` by the offset `d`
    let step = |v: usize, d: [i64; 2]| -> (usize, LatticeShift) {
        let p = reps[v].0;
        let q = to_fund([p[0] + d[0], p[1] + d[1]]);
        let s = [q[0].div_euclid(det), q[1].div_euclid(det)];
        let rem = [q[0] - s[0] * det, q[1] - s[1] * det];
        (label[&rem], LatticeShift::new(s[0], s[1]))
    };

    let mut faces = Vec::with_capacity(2 * reps.len());
    let mut shifts = BTreeMap::new();
    for v in 0..reps.len() {
        let (r, br) = step(v, [1, 0]);
        let (d, bd) = step(v, [1, 1]);
        let (u, bu) = step(v, [0, 1]);
        faces.push([v, r, d]);
        faces.push([v, d, u]);
        shifts.insert((v, r), br);
        shifts.insert((v, d), bd);
        shifts.insert((v, u), bu);
    }
    let mesh = TorusTriangulation::new(reps.len(), &faces, &shifts)?;
    let placement = Placement::new(
        reps.iter().map(|&(_, q)| Vec2::new(q[0] as f64 / det as f64, q[1] as f64 / det as f64)).collect(),
    )?;
    Ok((mesh, placement))
}

/// Seeded random displacement of every vertex except vertex 0, with the
/// magnitude halved until the result is still an embedding.
pub fn perturb(mesh: &TorusTriangulation, p: &Placement, magnitude: f64, seed: u64) -> Result<Placement> {
    p.check_size(mesh)?;
    if !verify_embedding(mesh, p).is_embedding {
        return Err(Error::NotEmbedded);
    }
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad perturbation magnitude {magnitude}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let directions: Vec<Vec2> = (0..p.len())
        .map(|v| {
            let d = Vec2::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
            if v == 0 {
                Vec2::zeros()
            } else {
                d
            }
        })
        .collect();

    let mut scale = magnitude;
    for _ in 0..=MAX_HALVINGS {
        let moved = Placement::new(p.coords().iter().zip(&directions).map(|(x, d)| x + d * scale).collect())?;
        if verify_embedding(mesh, &moved).is_embedding {
            return Ok(moved);
        }
        scale *= 0.5;
    }
    Err(Error::PerturbFailed(MAX_HALVINGS))
}
