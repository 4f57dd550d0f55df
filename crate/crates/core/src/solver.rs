//! The weighted balance system `A(w) x = b(w)`, its least-squares energy,
//! residual structure, and the Tutte map from admissible weights to
//! balanced placements.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{lifted_edge_vector, verify_embedding, Placement, Vec2};
use crate::mesh::{EdgeId, TorusTriangulation};
use crate::sparse::{cgls, CsrMatrix};

/// Weights with energy at or below this are treated as admissible.
pub const DEFAULT_ADMISSIBLE_TOL: f64 = 1e-10;
/// Largest vertex count assembled as a dense matrix.
pub const DENSE_LIMIT: usize = 256;

/// Positive weight on every directed edge, indexed by [`EdgeId`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeightAssignment {
    values: Vec<f64>,
}

impl WeightAssignment {
    pub fn new(mesh: &TorusTriangulation, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.directed_edge_count() {
            return Err(Error::WeightSize { expected: mesh.directed_edge_count(), got: values.len() });
        }
        if let Some(e) = values.iter().position(|&w| !(w > 0.0 && w.is_finite())) {
            let (i, j) = mesh.edge(e);
            return Err(Error::NonPositiveWeight(i, j, values[e]));
        }
        Ok(Self { values })
    }

    pub fn uniform(mesh: &TorusTriangulation, value: f64) -> Result<Self> {
        Self::new(mesh, vec![value; mesh.directed_edge_count()])
    }

    /// Weight for each directed edge `(i, j)` from a closure.
    pub fn from_fn(mesh: &TorusTriangulation, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(mesh, mesh.edges().iter().map(|&(i, j)| f(i, j)).collect())
    }

    /// From `(i, j, w)` triples that must cover every directed edge once.
    pub fn from_triples(mesh: &TorusTriangulation, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let mut values = vec![f64::NAN; mesh.directed_edge_count()];
        for &(i, j, w) in triples {
            let e = mesh.edge_id(i, j).ok_or(Error::UnknownEdge(i, j))?;
            if !values[e].is_nan() {
                return Err(Error::Parse(format!("duplicate weight for {i}->{j}")));
            }
            values[e] = w;
        }
        if let Some(e) = values.iter().position(|w| w.is_nan()) {
            let (i, j) = mesh.edge(e);
            return Err(Error::MissingWeight(i, j));
        }
        Self::new(mesh, values)
    }

    pub(crate) fn from_values_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.values[e]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { values: self.values.iter().map(|w| w * factor).collect() }
    }

    /// `(1 - t) a + t b`, positive whenever both ends are.
    pub fn lerp(a: &Self, b: &Self, t: f64) -> Self {
        Self { values: a.values.iter().zip(&b.values).map(|(x, y)| (1.0 - t) * x + t * y).collect() }
    }

    /// Smallest directed weight.
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest `|w_ij - w_ji|`.
    pub fn max_asymmetry(&self, mesh: &TorusTriangulation) -> f64 {
        (0..self.values.len()).map(|e| (self.values[e] - self.values[mesh.reverse(e)]).abs()).fold(0.0, f64::max)
    }

    /// Largest ratio `w_ij / w_ji`.
    pub fn max_ratio(&self, mesh: &TorusTriangulation) -> f64 {
        (0..self.values.len()).map(|e| self.values[e] / self.values[mesh.reverse(e)]).fold(0.0, f64::max)
    }

    /// `w_ij == w_ji` on every edge.
    pub fn is_symmetric(&self, mesh: &TorusTriangulation) -> bool {
        (0..self.values.len()).all(|e| self.values[e] == self.values[mesh.reverse(e)])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Dense,
    Sparse,
}

impl Representation {
    pub fn for_size(n: usize) -> Self {
        if n <= DENSE_LIMIT {
            Representation::Dense
        } else {
            Representation::Sparse
        }
    }
}

#[derive(Clone, Debug)]
pub enum WeightMatrix {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl WeightMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            WeightMatrix::Dense(m) => m[(i, j)],
            WeightMatrix::Sparse(m) => m.get(i, j),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            WeightMatrix::Dense(m) => m.nrows(),
            WeightMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            WeightMatrix::Dense(m) => m.norm(),
            WeightMatrix::Sparse(m) => m.frobenius_norm(),
        }
    }

    /// `A x` for an `n x 2` right-hand side.
    pub fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            WeightMatrix::Dense(m) => m * x,
            WeightMatrix::Sparse(m) => {
                let mut out = DMatrix::zeros(m.nrows(), x.ncols());
                let mut col = vec![0.0; m.nrows()];
                for c in 0..x.ncols() {
                    let src: Vec<f64> = x.column(c).iter().copied().collect();
                    m.mul_vec(&src, &mut col);
                    out.column_mut(c).copy_from_slice(&col);
                }
                out
            }
        }
    }

    /// `A^T x` for an `n x 2` matrix.
    pub fn tr_mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            WeightMatrix::Dense(m) => m.tr_mul(x),
            WeightMatrix::Sparse(m) => {
                let mut out = DMatrix::zeros(m.ncols(), x.ncols());
                let mut col = vec![0.0; m.ncols()];
                for c in 0..x.ncols() {
                    let src: Vec<f64> = x.column(c).iter().copied().collect();
                    m.tr_mul_vec(&src, &mut col);
                    out.column_mut(c).copy_from_slice(&col);
                }
                out
            }
        }
    }
}

/// `A(w)` and `b(w)`.
#[derive(Clone, Debug)]
pub struct BalanceSystem {
    pub matrix: WeightMatrix,
    /// `n x 2`, row `i` is `-sum_j w_ij b_ij`.
    pub rhs: DMatrix<f64>,
}

impl BalanceSystem {
    /// `A x - b`
    pub fn residual(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.matrix.mul(x) - &self.rhs
    }
}

pub fn assemble_system(mesh: &TorusTriangulation, w: &WeightAssignment) -> Result<BalanceSystem> {
    assemble_system_with(mesh, w, Representation::for_size(mesh.vertex_count()))
}

pub fn assemble_system_with(
    mesh: &TorusTriangulation,
    w: &WeightAssignment,
    repr: Representation,
) -> Result<BalanceSystem> {
    check_weights(mesh, w)?;
    let n = mesh.vertex_count();
    let mut rhs = DMatrix::zeros(n, 2);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(mesh.degree(i) + 1);
        let mut diag = 0.0;
        for e in mesh.out_edges(i) {
            let (_, j) = mesh.edge(e);
            let wij = w.get(e);
            let b = mesh.shift(e);
            row.push((j, wij));
            diag -= wij;
            rhs[(i, 0)] -= wij * b.x as f64;
            rhs[(i, 1)] -= wij * b.y as f64;
        }
        row.push((i, diag));
        rows.push(row);
    }
    let matrix = match repr {
        Representation::Dense => {
            let mut a = DMatrix::zeros(n, n);
            for (i, row) in rows.iter().enumerate() {
                for &(j, v) in row {
                    a[(i, j)] = v;
                }
            }
            WeightMatrix::Dense(a)
        }
        Representation::Sparse => WeightMatrix::Sparse(CsrMatrix::from_rows(n, rows)),
    };
    Ok(BalanceSystem { matrix, rhs })
}

fn check_weights(mesh: &TorusTriangulation, w: &WeightAssignment) -> Result<()> {
    if w.len() != mesh.directed_edge_count() {
        return Err(Error::WeightSize { expected: mesh.directed_edge_count(), got: w.len() });
    }
    if let Some(e) = w.values().iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        let (i, j) = mesh.edge(e);
        return Err(Error::NonPositiveWeight(i, j, w.get(e)));
    }
    Ok(())
}

/// Least-squares residual of the balance system and the quantities derived
/// from it.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    /// `n x 2` residual `A x - b` at the pinned minimizer.
    pub residual: DMatrix<f64>,
    /// Squared Frobenius norm of the residual.
    pub energy: f64,
    /// Unit vector along the residual rows, absent when the energy is at or
    /// below the admissibility tolerance.
    pub direction: Option<Vec2>,
    /// `n . (x_j - x_i + b_ij)` per directed edge, present with `direction`.
    pub u: Option<Vec<f64>>,
    /// `max w_ij / w_ji`
    pub ratio_c: f64,
    /// `ratio_c^(n-1)`, the bound on residual row norm ratios.
    pub ratio_c_pow: f64,
    /// `sigma_2(r) / sigma_1(r)`, zero when the residual vanishes.
    pub second_singular_ratio: f64,
    /// Smallest `<r_i, r_j>` over all vertex pairs.
    pub min_pairwise_inner: f64,
    /// `max ||r_i|| / min ||r_i||`.
    pub row_norm_ratio: f64,
    pub zero_residual: bool,
}

impl ResidualReport {
    pub fn row(&self, i: usize) -> Vec2 {
        Vec2::new(self.residual[(i, 0)], self.residual[(i, 1)])
    }

    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.residual.nrows()).map(|i| self.row(i).norm()).collect()
    }

    pub fn pairwise_inner(&self, i: usize, j: usize) -> f64 {
        self.row(i).dot(&self.row(j))
    }

    pub fn min_u(&self) -> Option<f64> {
        self.u.as_ref().map(|u| u.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

/// Solves the balance system in the least-squares sense with vertex 0
/// pinned at the origin, using the default admissibility tolerance.
pub fn solve_balance(mesh: &TorusTriangulation, w: &WeightAssignment) -> Result<(Placement, ResidualReport)> {
    solve_with_tol(mesh, w, DEFAULT_ADMISSIBLE_TOL)
}

/// Least-squares energy `E(w)`.
pub fn energy(mesh: &TorusTriangulation, w: &WeightAssignment) -> Result<f64> {
    Ok(solve_balance(mesh, w)?.1.energy)
}

pub fn is_admissible(mesh: &TorusTriangulation, w: &WeightAssignment, tol: f64) -> Result<bool> {
    Ok(solve_with_tol(mesh, w, tol)?.1.energy <= tol)
}

/// Residual report with `zero_residual` decided against `tol`.
pub fn residual_structure(mesh: &TorusTriangulation, w: &WeightAssignment, tol: f64) -> Result<ResidualReport> {
    Ok(solve_with_tol(mesh, w, tol)?.1)
}

/// The unique `w`-balanced placement with vertex 0 at the origin, certified
/// to be an embedding.
pub fn tutte_map(mesh: &TorusTriangulation, w: &WeightAssignment, tol: f64) -> Result<Placement> {
    let (p, report) = solve_with_tol(mesh, w, tol)?;
    if report.energy > tol {
        return Err(Error::NotAdmissible { energy: report.energy, tol });
    }
    let cert = verify_embedding(mesh, &p);
    if !cert.is_embedding {
        return Err(Error::EmbeddingCheckFailed { energy: report.energy, min_area: cert.min_area });
    }
    Ok(p)
}

pub fn solve_with_tol(
    mesh: &TorusTriangulation,
    w: &WeightAssignment,
    tol: f64,
) -> Result<(Placement, ResidualReport)> {
    let system = assemble_system(mesh, w)?;
    let x = solve_pinned(&system)?;
    let placement = Placement::new((0..x.nrows()).map(|i| Vec2::new(x[(i, 0)], x[(i, 1)])).collect())?;
    let residual = system.residual(&x);
    let report = analyze_residual(mesh, w, &placement, residual, tol);
    Ok((placement, report))
}

/// Minimizer of `||A x - b||_F` over `x` with row 0 fixed at zero.
pub fn solve_pinned(system: &BalanceSystem) -> Result<DMatrix<f64>> {
    let n = system.matrix.dim();
    let mut x = DMatrix::zeros(n, 2);
    match &system.matrix {
        WeightMatrix::Dense(a) => {
            let reduced = a.columns(1, n - 1).into_owned();
            let qr = reduced.qr();
            let r = qr.r();
            let diag_max = r.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let diag_min = r.diagonal().iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
            if diag_min.is_nan() || diag_min <= 1e-14 * diag_max {
                return Err(Error::SingularSystem);
            }
            let mut qtb = system.rhs.clone();
            qr.q_tr_mul(&mut qtb);
            let top = qtb.rows(0, n - 1).into_owned();
            let z = r.solve_upper_triangular(&top).ok_or(Error::SingularSystem)?;
            x.rows_mut(1, n - 1).copy_from(&z);
        }
        WeightMatrix::Sparse(a) => {
            let norm_a = a.frobenius_norm();
            for c in 0..2 {
                let rhs: Vec<f64> = system.rhs.column(c).iter().copied().collect();
                let z = cgls(
                    n,
                    n - 1,
                    |z, y| {
                        let mut full = Vec::with_capacity(n);
                        full.push(0.0);
                        full.extend_from_slice(z);
                        a.mul_vec(&full, y);
                    },
                    |r, y| {
                        let mut full = vec![0.0; n];
                        a.tr_mul_vec(r, &mut full);
                        y.copy_from_slice(&full[1..]);
                    },
                    &rhs,
                    norm_a,
                    1e-14,
                    1e-15,
                    50 * n,
                )
                .ok_or(Error::SingularSystem)?;
                for (k, v) in z.into_iter().enumerate() {
                    x[(k + 1, c)] = v;
                }
            }
        }
    }
    Ok(x)
}

fn analyze_residual(
    mesh: &TorusTriangulation,
    w: &WeightAssignment,
    p: &Placement,
    residual: DMatrix<f64>,
    tol: f64,
) -> ResidualReport {
    let n = residual.nrows();
    let energy = residual.norm_squared();
    let rows: Vec<Vec2> = (0..n).map(|i| Vec2::new(residual[(i, 0)], residual[(i, 1)])).collect();
    let norms: Vec<f64> = rows.iter().map(|r| r.norm()).collect();

    let singular = residual.clone().svd(false, false).singular_values;
    let (s1, s2) = (singular[0].max(singular[1]), singular[0].min(singular[1]));
    let second_singular_ratio = if s1 > 0.0 { s2 / s1 } else { 0.0 };

    let mut min_pairwise_inner = f64::INFINITY;
    for i in 0..n {
        for j in i..n {
            min_pairwise_inner = min_pairwise_inner.min(rows[i].dot(&rows[j]));
        }
    }
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let min_norm = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let row_norm_ratio = if min_norm > 0.0 { max_norm / min_norm } else { f64::INFINITY };

    let ratio_c = w.max_ratio(mesh);
    let ratio_c_pow = ratio_c.powi(n as i32 - 1);

    let zero_residual = energy <= tol || max_norm == 0.0;
    let (direction, u) = if zero_residual {
        (None, None)
    } else {
        let k = (0..n).max_by(|&a, &b| norms[a].total_cmp(&norms[b])).unwrap_or(0);
        let dir = rows[k] / norms[k];
        let u = (0..mesh.directed_edge_count()).map(|e| dir.dot(&lifted_edge_vector(mesh, p, e))).collect();
        (Some(dir), Some(u))
    };

    ResidualReport {
        residual,
        energy,
        direction,
        u,
        ratio_c,
        ratio_c_pow,
        second_singular_ratio,
        min_pairwise_inner,
        row_norm_ratio,
        zero_residual,
    }
}
