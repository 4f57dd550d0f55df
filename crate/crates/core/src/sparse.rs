//! Compressed sparse row storage and a CGLS least-squares solver, used for
//! balance systems too large for dense factorization.

/// Square or rectangular matrix in CSR form.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; columns need not be sorted.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                debug_assert!(c < ncols);
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// `y = A^T x`
    pub fn tr_mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, xi) in x.iter().enumerate().take(self.nrows) {
            for (c, v) in self.row(i) {
                y[c] += v * xi;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `||A z - rhs||` by conjugate gradients on the normal equations.
///
/// `apply` computes `A z`, `apply_tr` computes `A^T r`. Iteration stops once
/// `||A^T r|| <= rtol * norm_a * ||r||` or the normal residual has dropped
/// by `atol` relative to its starting value. Returns `None` when the
/// iteration breaks down (a zero search direction image before convergence).
#[allow(clippy::too_many_arguments)]
pub fn cgls(
    nrows: usize,
    ncols: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    apply_tr: impl Fn(&[f64], &mut [f64]),
    rhs: &[f64],
    norm_a: f64,
    rtol: f64,
    atol: f64,
    max_iter: usize,
) -> Option<Vec<f64>> {
    let mut z = vec![0.0; ncols];
    let mut r = rhs.to_vec();
    let mut s = vec![0.0; ncols];
    apply_tr(&r, &mut s);
    let s0 = dot(&s, &s).sqrt();
    if s0 == 0.0 {
        return Some(z);
    }
    let mut p = s.clone();
    let mut q = vec![0.0; nrows];
    let mut gamma = s0 * s0;
    for _ in 0..max_iter {
        apply(&p, &mut q);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            return None;
        }
        let alpha = gamma / qq;
        z.iter_mut().zip(&p).for_each(|(zi, pi)| *zi += alpha * pi);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
        apply_tr(&r, &mut s);
        let gamma_next = dot(&s, &s);
        let s_norm = gamma_next.sqrt();
        let r_norm = dot(&r, &r).sqrt();
        if s_norm <= rtol * norm_a * r_norm || s_norm <= atol * s0 {
            return Some(z);
        }
        let beta = gamma_next / gamma;
        gamma = gamma_next;
        p.iter_mut().zip(&s).for_each(|(pi, si)| *pi = si + beta * *pi);
    }
    Some(z)
}
