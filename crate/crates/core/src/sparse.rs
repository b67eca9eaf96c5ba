//! Compressed sparse row matrices and the linear solves used by the stepper.
//!
//! The backward Euler systems assembled elsewhere in this crate are strictly
//! column diagonally dominant M-matrices whenever the step-size restriction
//! holds, so `solve` first tries Gauss-Seidel (a convergent regular splitting
//! for H-matrices, and the dominance check certifies the H-matrix property).
//! Anything else, and any stalled iteration, goes through banded LU with
//! partial pivoting plus iterative refinement. Both paths are sequential and
//! deterministic, and both enforce the same residual contract:
//! `||Ax - b||_inf <= tol * ||b||_inf`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("triplet index ({row}, {col}) outside {n_rows}x{n_cols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("matrix is singular: no usable pivot in column {0}")]
    Singular(usize),
    #[error("solve stalled: relative residual {achieved:.3e} exceeds tolerance {tol:.3e}")]
    ToleranceNotMet { achieved: f64, tol: f64 },
}

/// Square or rectangular sparse matrix in CSR form. Column indices are
/// sorted and unique within each row; explicitly stored zeros are kept, so
/// a matrix can pin a sparsity pattern shared with others.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// How a solve was carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Right side was exactly zero; x = 0 returned without iteration.
    TrivialZero,
    GaussSeidel,
    BandLu,
}

/// Outcome of a successful solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    pub method: SolveMethod,
    /// Gauss-Seidel sweeps or LU refinement rounds.
    pub iterations: usize,
    /// `||Ax - b||_inf / ||b||_inf` of the returned solution.
    pub relative_residual: f64,
}

/// Column diagonal dominance summary. `margin` is the minimum over columns
/// of `|a_jj| - sum_{i != j} |a_ij|`; strict dominance means every margin
/// is positive.
#[derive(Debug, Clone, Copy)]
pub struct DominanceReport {
    pub strict: bool,
    pub worst_margin: f64,
    pub worst_column: usize,
}

const GS_MAX_SWEEPS: usize = 512;
const LU_MAX_REFINEMENTS: usize = 8;

pub fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, &v| m.max(v.abs()))
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets; duplicate positions are summed.
    /// Explicit zeros are kept in the pattern.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, SparseError> {
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(SparseError::IndexOutOfBounds {
                    row: r,
                    col: c,
                    n_rows,
                    n_cols,
                });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            if prev == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                prev = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_mut(&mut self, i: usize) -> (&[usize], &mut [f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &mut self.values[lo..hi])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Stored value at (i, j), or 0 for positions outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[i][j] = v;
            }
        }
        out
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        if x.len() != self.n_cols {
            return Err(SparseError::DimensionMismatch(format!(
                "spmv: vector length {} vs {} columns",
                x.len(),
                self.n_cols
            )));
        }
        let mut y = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// `self + s * other` on the union sparsity pattern.
    pub fn add_scaled(&self, other: &SparseMatrix, s: f64) -> Result<SparseMatrix, SparseError> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(SparseError::DimensionMismatch(format!(
                "add_scaled: {}x{} vs {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut row_offsets = vec![0usize; self.n_rows + 1];
        let mut col_indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(col_indices.capacity());
        for i in 0..self.n_rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let ja = ca.get(p).copied().unwrap_or(usize::MAX);
                let jb = cb.get(q).copied().unwrap_or(usize::MAX);
                if ja < jb {
                    col_indices.push(ja);
                    values.push(va[p]);
                    p += 1;
                } else if jb < ja {
                    col_indices.push(jb);
                    values.push(s * vb[q]);
                    q += 1;
                } else {
                    col_indices.push(ja);
                    values.push(va[p] + s * vb[q]);
                    p += 1;
                    q += 1;
                }
            }
            row_offsets[i + 1] = col_indices.len();
        }
        Ok(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn column_diagonal_dominance(&self) -> DominanceReport {
        debug_assert_eq!(self.n_rows, self.n_cols);
        let n = self.n_cols;
        let mut diag = vec![0.0f64; n];
        let mut off = vec![0.0f64; n];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if i == j {
                    diag[j] = v.abs();
                } else {
                    off[j] += v.abs();
                }
            }
        }
        let mut worst = f64::INFINITY;
        let mut worst_col = 0;
        for j in 0..n {
            let margin = diag[j] - off[j];
            if margin < worst {
                worst = margin;
                worst_col = j;
            }
        }
        if n == 0 {
            worst = 0.0;
        }
        DominanceReport {
            strict: worst > 0.0,
            worst_margin: worst,
            worst_column: worst_col,
        }
    }

    /// Solve `Ax = b` to `||Ax - b||_inf <= tol * ||b||_inf`. A zero right
    /// side returns x = 0 immediately. Strictly column diagonally dominant
    /// systems go through Gauss-Seidel; everything else (and a stalled
    /// iteration) through banded LU with partial pivoting and refinement.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport), SparseError> {
        if self.n_rows != self.n_cols {
            return Err(SparseError::DimensionMismatch(format!(
                "solve: matrix is {}x{}",
                self.n_rows, self.n_cols
            )));
        }
        if b.len() != self.n_rows {
            return Err(SparseError::DimensionMismatch(format!(
                "solve: right side length {} vs {} rows",
                b.len(),
                self.n_rows
            )));
        }
        let b_norm = inf_norm(b);
        if b_norm == 0.0 {
            return Ok((
                vec![0.0; self.n_rows],
                SolveReport {
                    method: SolveMethod::TrivialZero,
                    iterations: 0,
                    relative_residual: 0.0,
                },
            ));
        }
        if self.column_diagonal_dominance().strict {
            if let Some(ok) = self.gauss_seidel(b, tol, b_norm) {
                return Ok(ok);
            }
        }
        let lu = self.factorize()?;
        lu.solve_refined(self, b, tol, b_norm)
    }

    /// Banded LU factorization with partial pivoting. The band is taken
    /// from the sparsity pattern; fill-in stays inside `bl + bu` above the
    /// diagonal, which the storage accommodates.
    pub fn factorize(&self) -> Result<BandLu, SparseError> {
        if self.n_rows != self.n_cols {
            return Err(SparseError::DimensionMismatch(format!(
                "factorize: matrix is {}x{}",
                self.n_rows, self.n_cols
            )));
        }
        BandLu::new(self)
    }

    fn gauss_seidel(&self, b: &[f64], tol: f64, b_norm: f64) -> Option<(Vec<f64>, SolveReport)> {
        let n = self.n_rows;
        let mut x = vec![0.0; n];
        // diagonal positions; dominance guarantees they exist and are nonzero
        let mut diag_pos = vec![usize::MAX; n];
        for i in 0..n {
            let (cols, _) = self.row(i);
            match cols.binary_search(&i) {
                Ok(p) => diag_pos[i] = self.row_offsets[i] + p,
                Err(_) => return None,
            }
        }
        let target = tol * b_norm;
        let mut prev_res = f64::INFINITY;
        for sweep in 1..=GS_MAX_SWEEPS {
            for i in 0..n {
                let (cols, vals) = self.row(i);
                let mut acc = b[i];
                for (&j, &v) in cols.iter().zip(vals) {
                    if j != i {
                        acc -= v * x[j];
                    }
                }
                x[i] = acc / self.values[diag_pos[i]];
            }
            let r = self.residual_norm(&x, b);
            if r <= target {
                return Some((
                    x,
                    SolveReport {
                        method: SolveMethod::GaussSeidel,
                        iterations: sweep,
                        relative_residual: r / b_norm,
                    },
                ));
            }
            if r >= prev_res {
                return None; // stalled; let the direct path take over
            }
            prev_res = r;
        }
        None
    }

    fn residual_norm(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = b[i];
            for (&j, &v) in cols.iter().zip(vals) {
                acc -= v * x[j];
            }
            worst = worst.max(acc.abs());
        }
        worst
    }

    /// Write the matrix as coordinate-format text: one `i j value` line per
    /// stored entry, 0-based indices, row-major order.
    pub fn write_coo<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.16e}", i, j, v)?;
            }
        }
        Ok(())
    }
}

/// Banded LU factors with partial pivoting. Row i of the working array
/// holds columns `i - bl ..= i + bl + bu` of the evolving matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    bl: usize,
    bu: usize,
    width: usize,
    ab: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn new(a: &SparseMatrix) -> Result<Self, SparseError> {
        let n = a.n_rows();
        let (mut bl, mut bu) = (0usize, 0usize);
        for i in 0..n {
            let (cols, _) = a.row(i);
            for &j in cols {
                if j < i {
                    bl = bl.max(i - j);
                } else {
                    bu = bu.max(j - i);
                }
            }
        }
        let width = 2 * bl + bu + 1;
        // row i's slot for column j: j - i + bl, valid for -bl <= j-i <= bl+bu
        let slot = |i: usize, j: usize| j + bl - i;
        let mut ab = vec![0.0f64; n * width];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                ab[i * width + slot(i, j)] = v;
            }
        }
        let mut pivots = vec![0usize; n];
        let scale: f64 = ab.iter().fold(0.0, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Err(SparseError::Singular(0));
        }
        let tiny = scale * 1e-300;
        for k in 0..n {
            let last_row = (k + bl).min(n - 1);
            let mut p = k;
            let mut best = ab[k * width + slot(k, k)].abs();
            for r in (k + 1)..=last_row {
                let v = ab[r * width + slot(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= tiny {
                return Err(SparseError::Singular(k));
            }
            pivots[k] = p;
            let last_col = (k + bl + bu).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a1 = k * width + slot(k, j);
                    let a2 = p * width + slot(p, j);
                    ab.swap(a1, a2);
                }
            }
            let pivot = ab[k * width + slot(k, k)];
            for r in (k + 1)..=last_row {
                let m = ab[r * width + slot(r, k)] / pivot;
                ab[r * width + slot(r, k)] = m;
                if m != 0.0 {
                    for j in (k + 1)..=last_col {
                        let upper = ab[k * width + slot(k, j)];
                        if upper != 0.0 {
                            ab[r * width + slot(r, j)] -= m * upper;
                        }
                    }
                }
            }
        }
        Ok(BandLu {
            n,
            bl,
            bu,
            width,
            ab,
            pivots,
        })
    }

    /// Solve using the stored factors. `rhs` is overwritten with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let (n, bl, bu, width) = (self.n, self.bl, self.bu, self.width);
        let slot = |i: usize, j: usize| j + bl - i;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                rhs.swap(k, p);
            }
            let last_row = (k + bl).min(n - 1);
            let rk = rhs[k];
            if rk != 0.0 {
                for r in (k + 1)..=last_row {
                    rhs[r] -= self.ab[r * width + slot(r, k)] * rk;
                }
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + bl + bu).min(n - 1);
            let mut acc = rhs[k];
            for j in (k + 1)..=last_col {
                let u = self.ab[k * width + slot(k, j)];
                if u != 0.0 {
                    acc -= u * rhs[j];
                }
            }
            rhs[k] = acc / self.ab[k * width + slot(k, k)];
        }
    }

    /// Solve with iterative refinement against the original matrix until the
    /// residual contract holds.
    pub fn solve_refined(
        &self,
        a: &SparseMatrix,
        b: &[f64],
        tol: f64,
        b_norm: f64,
    ) -> Result<(Vec<f64>, SolveReport), SparseError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        let mut rounds = 0;
        loop {
            let mut r = b.to_vec();
            for i in 0..a.n_rows() {
                let (cols, vals) = a.row(i);
                let mut acc = 0.0;
                for (&j, &v) in cols.iter().zip(vals) {
                    acc += v * x[j];
                }
                r[i] -= acc;
            }
            let res = inf_norm(&r);
            if res <= tol * b_norm {
                return Ok((
                    x,
                    SolveReport {
                        method: SolveMethod::BandLu,
                        iterations: rounds,
                        relative_residual: res / b_norm,
                    },
                ));
            }
            if rounds >= LU_MAX_REFINEMENTS {
                return Err(SparseError::ToleranceNotMet {
                    achieved: res / b_norm,
                    tol,
                });
            }
            self.solve_in_place(&mut r);
            for (xi, di) in x.iter_mut().zip(&r) {
                *xi += di;
            }
            rounds += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(n: usize, entries: &[(usize, usize, f64)]) -> SparseMatrix {
        SparseMatrix::from_triplets(n, n, entries).unwrap()
    }

    #[test]
    fn spmv_small_example() {
        let a = dense(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 1, 4.0)]);
        let y = a.spmv(&[1.0, 1.0]).unwrap();
        assert_eq!(y, vec![3.0, 7.0]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let a = SparseMatrix::identity(3);
        assert!(a.spmv(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let a = dense(2, &[(0, 1, 2.0), (0, 0, 1.0), (0, 1, 3.0)]);
        let (cols, vals) = a.row(0);
        assert_eq!(cols, &[0, 1]);
        assert_eq!(vals, &[1.0, 5.0]);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn triplets_out_of_bounds() {
        assert!(SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn add_scaled_union_pattern() {
        let a = dense(2, &[(0, 0, 1.0), (1, 1, 2.0)]);
        let b = dense(2, &[(0, 1, 4.0), (1, 1, 1.0)]);
        let c = a.add_scaled(&b, 0.5).unwrap();
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(0, 1), 2.0);
        assert_eq!(c.get(1, 1), 2.5);
        assert_eq!(c.nnz(), 3);
    }

    #[test]
    fn add_scaled_dimension_mismatch() {
        let a = SparseMatrix::identity(2);
        let b = SparseMatrix::identity(3);
        assert!(a.add_scaled(&b, 1.0).is_err());
    }

    #[test]
    fn dominance_report_example() {
        let a = dense(2, &[(0, 0, 3.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]);
        let rep = a.column_diagonal_dominance();
        assert!(rep.strict);
        assert!((rep.worst_margin - 1.0).abs() < 1e-15);
        assert_eq!(rep.worst_column, 1);
    }

    #[test]
    fn dominance_detects_non_strict() {
        let a = dense(2, &[(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)]);
        let rep = a.column_diagonal_dominance();
        assert!(!rep.strict);
        assert_eq!(rep.worst_margin, 0.0);
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let a = SparseMatrix::identity(4);
        let b = [1.0, -2.0, 3.5, 0.25];
        let (x, rep) = a.solve(&b, 1e-12).unwrap();
        assert_eq!(x, b.to_vec());
        assert!(rep.relative_residual <= 1e-12);
    }

    #[test]
    fn solve_zero_rhs_is_exact_zero() {
        let a = dense(2, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let (x, rep) = a.solve(&[0.0, 0.0], 1e-12).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(rep.method, SolveMethod::TrivialZero);
    }

    #[test]
    fn solve_manufactured_solution_band_path() {
        // symmetric tridiagonal, weakly dominant rows at the ends only:
        // column dominance fails, forcing the LU path
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let a = dense(n, &t);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.spmv(&x_true).unwrap();
        let (x, rep) = a.solve(&b, 1e-12).unwrap();
        assert_eq!(rep.method, SolveMethod::BandLu);
        let err = x
            .iter()
            .zip(&x_true)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-9, "error {err}");
    }

    #[test]
    fn solve_requires_pivoting() {
        // zero diagonal entry: unpivoted elimination would divide by zero
        let a = dense(
            2,
            &[(0, 0, 0.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1e-3)],
        );
        let b = [1.0, 2.0];
        let (x, _) = a.solve(&b, 1e-12).unwrap();
        assert!((x[0] - (2.0 - 1e-3)).abs() < 1e-12);
        assert!((x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_singular_is_an_error() {
        let a = dense(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        match a.solve(&[1.0, 0.0], 1e-12) {
            Err(SparseError::Singular(_)) => {}
            other => panic!("expected singularity error, got {other:?}"),
        }
    }

    #[test]
    fn solve_dominant_uses_gauss_seidel() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 5.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let a = dense(n, &t);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
        let (x, rep) = a.solve(&b, 1e-12).unwrap();
        assert_eq!(rep.method, SolveMethod::GaussSeidel);
        let r = {
            let ax = a.spmv(&x).unwrap();
            ax.iter()
                .zip(&b)
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
        };
        assert!(r <= 1e-12 * inf_norm(&b));
    }

    #[test]
    fn solve_is_bitwise_deterministic() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + (i % 5) as f64));
            if i > 0 {
                t.push((i, i - 1, -1.25));
            }
            if i + 1 < n {
                t.push((i, i + 1, -0.75));
            }
        }
        let a = dense(n, &t);
        let b: Vec<f64> = (0..n).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let (x1, _) = a.solve(&b, 1e-13).unwrap();
        let (x2, _) = a.solve(&b, 1e-13).unwrap();
        assert!(x1.iter().zip(&x2).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn randomized_solves_meet_residual_contract() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5ea1);
        for trial in 0..100 {
            let n = rng.random_range(2..=200);
            let mut t = Vec::new();
            let mut col_load = vec![0.0f64; n];
            for i in 0..n {
                for _ in 0..rng.random_range(1..=4) {
                    let j = rng.random_range(0..n);
                    if j != i {
                        let v: f64 = rng.random_range(-1.0..1.0);
                        t.push((i, j, v));
                        col_load[j] += v.abs();
                    }
                }
            }
            for j in 0..n {
                // strictly column dominant with a random margin
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                t.push((j, j, sign * (col_load[j] + rng.random_range(0.1..2.0))));
            }
            let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let tol = 1e-12;
            let (x, rep) = a.solve(&b, tol).unwrap();
            let ax = a.spmv(&x).unwrap();
            let res = ax
                .iter()
                .zip(&b)
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            assert!(
                res <= tol * inf_norm(&b),
                "trial {trial}: residual {res:.3e} report {rep:?}"
            );
        }
    }

    #[test]
    fn coo_dump_round_trips() {
        let a = dense(2, &[(0, 0, 1.5), (1, 0, -2.25), (1, 1, 1.0 / 3.0)]);
        let mut buf = Vec::new();
        a.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut trip = Vec::new();
        for line in text.lines() {
            let mut it = line.split_whitespace();
            let i: usize = it.next().unwrap().parse().unwrap();
            let j: usize = it.next().unwrap().parse().unwrap();
            let v: f64 = it.next().unwrap().parse().unwrap();
            trip.push((i, j, v));
        }
        let back = SparseMatrix::from_triplets(2, 2, &trip).unwrap();
        assert_eq!(a, back);
    }
}
