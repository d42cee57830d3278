//! Compressed sparse row storage and the few kernels the solver needs.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Validate raw CSR arrays.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidMatrix("matrix must have at least one row and column".into()));
        }
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidMatrix(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if col_indices.len() != values.len() {
            return Err(Error::InvalidMatrix("col_indices and values differ in length".into()));
        }
        if row_offsets[0] != 0 || row_offsets[n_rows] != values.len() {
            return Err(Error::InvalidMatrix("row_offsets must start at 0 and end at nnz".into()));
        }
        for i in 0..n_rows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(Error::InvalidMatrix(format!("row_offsets decrease at row {i}")));
            }
            let cols = &col_indices[lo..hi];
            if cols.iter().any(|&c| c >= n_cols) {
                return Err(Error::InvalidMatrix(format!("column index out of range in row {i}")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Assemble from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &triplets).expect("identity is valid")
    }

    pub fn from_dense(a: &DenseMatrix) -> Result<Self> {
        let mut t = Vec::new();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.rows(), a.cols(), &t)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
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

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    /// Stored value at `(i, j)`, zero if absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        match self.col_indices[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        Self::from_triplets(self.n_cols, self.n_rows, &t).expect("transpose of valid matrix")
    }

    /// Same sparsity pattern and bitwise equal values as the transpose.
    pub fn is_symmetric(&self) -> bool {
        self.n_rows == self.n_cols && *self == self.transpose()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `y = A x`, accumulated left to right within each row.
pub fn spmv(a: &CsrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let mut y = vec![0.0; a.n_rows];
    spmv_into(a, x, &mut y)?;
    Ok(y)
}

pub fn spmv_into(a: &CsrMatrix, x: &[f64], y: &mut [f64]) -> Result<()> {
    check_len(a.n_cols, x.len())?;
    check_len(a.n_rows, y.len())?;
    for (i, yi) in y.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in a.row_offsets[i]..a.row_offsets[i + 1] {
            s += a.values[k] * x[a.col_indices[k]];
        }
        *yi = s;
    }
    Ok(())
}

/// `r = b - A x` written into `r`.
pub fn residual_into(a: &CsrMatrix, x: &[f64], b: &[f64], r: &mut [f64]) -> Result<()> {
    check_len(a.n_rows, b.len())?;
    spmv_into(a, x, r)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    Ok(())
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||b - A x||_2`.
pub fn residual_norm(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    let mut r = vec![0.0; a.n_rows];
    residual_into(a, x, b, &mut r)?;
    Ok(norm2(&r))
}

/// Reciprocal of the diagonal, for the residual-form Jacobi update.
pub fn jacobi_split(a: &CsrMatrix) -> Result<Vec<f64>> {
    if a.n_rows != a.n_cols {
        return Err(Error::InvalidMatrix(format!(
            "Jacobi splitting needs a square matrix, got {}x{}",
            a.n_rows, a.n_cols
        )));
    }
    (0..a.n_rows)
        .map(|i| {
            let d = a.get(i, i);
            if d == 0.0 || !d.is_finite() {
                Err(Error::SingularSplitting { row: i })
            } else {
                Ok(1.0 / d)
            }
        })
        .collect()
}

/// Dense Jacobi iteration matrix `I - D^{-1} A`, with an exactly zero diagonal.
pub fn jacobi_iteration_dense(a: &CsrMatrix) -> Result<DenseMatrix> {
    let inv = jacobi_split(a)?;
    let n = a.n_rows;
    let mut b = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            if j != i {
                b[(i, j)] = -v * inv[i];
            }
        }
    }
    Ok(b)
}

/// Write `a` in Matrix Market coordinate real general format.
pub fn write_matrix_market<W: Write>(a: &CsrMatrix, comment: Option<&str>, mut w: W) -> Result<()> {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    if let Some(c) = comment {
        for line in c.lines() {
            let _ = writeln!(s, "% {line}");
        }
    }
    let _ = writeln!(s, "{} {} {}", a.n_rows, a.n_cols, a.nnz());
    for i in 0..a.n_rows {
        for (j, v) in a.row(i) {
            let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
        }
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

/// Write a dense vector as a Matrix Market `array real general` column.
pub fn write_vector_market<W: Write>(v: &[f64], mut w: W) -> Result<()> {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} 1", v.len());
    for x in v {
        let _ = writeln!(s, "{x:e}");
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn parse_err(path: Option<&Path>, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.map(Path::to_path_buf),
        line,
        message: message.into(),
    }
}

/// Read a Matrix Market coordinate matrix (`real`/`integer`, `general` or `symmetric`).
pub fn read_matrix_market<R: BufRead>(r: R, path: Option<&Path>) -> Result<CsrMatrix> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let header = header?;
    let h: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if h.len() < 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" {
        return Err(parse_err(path, 1, "expected '%%MatrixMarket matrix coordinate' header"));
    }
    if h[3] != "real" && h[3] != "integer" {
        return Err(parse_err(path, 1, format!("unsupported field type {:?}", h[3])));
    }
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(path, 1, format!("unsupported symmetry {other:?}"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(path, lineno, "size line needs rows, cols and nnz"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| parse_err(path, lineno, format!("bad integer {s:?}")));
                size = Some((p(fields[0])?, p(fields[1])?, p(fields[2])?));
            }
            Some((nr, nc, _)) => {
                if fields.len() != 3 {
                    return Err(parse_err(path, lineno, "entry line needs row, col and value"));
                }
                let i: usize = fields[0].parse().map_err(|_| parse_err(path, lineno, "bad row index"))?;
                let j: usize = fields[1].parse().map_err(|_| parse_err(path, lineno, "bad column index"))?;
                let v: f64 = fields[2].parse().map_err(|_| parse_err(path, lineno, "bad value"))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(parse_err(path, lineno, format!("index ({i}, {j}) out of range")));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| parse_err(path, 0, "missing size line"))?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 <= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(parse_err(path, 0, format!("header declares {nnz} entries, found {stored}")));
    }
    CsrMatrix::from_triplets(nr, nc, &triplets)
}

pub fn save_matrix_market(a: &CsrMatrix, comment: Option<&str>, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_matrix_market(a, comment, std::io::BufWriter::new(f))
}

pub fn load_matrix_market(path: &Path) -> Result<CsrMatrix> {
    let f = std::fs::File::open(path)?;
    read_matrix_market(std::io::BufReader::new(f), Some(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(rng: &mut ChaCha8Rng, r: usize, c: usize, density: f64) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                if rng.gen_bool(density) {
                    d[(i, j)] = rng.gen_range(-5.0..5.0);
                }
            }
        }
        d
    }

    #[test]
    fn identity_and_zero_rows() {
        let i3 = CsrMatrix::identity(3);
        assert_eq!(spmv(&i3, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (2, 1, 1.0)]).unwrap();
        assert_eq!(spmv(&a, &[1.0, 1.0, 1.0]).unwrap(), vec![2.0, 0.0, 1.0]);
    }

    #[test]
    fn spmv_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (r, c) in [(5, 5), (7, 3), (64, 64), (1, 9)] {
            let d = random_dense(&mut rng, r, c, 0.4);
            let a = CsrMatrix::from_dense(&d).unwrap();
            let x: Vec<f64> = (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ys = spmv(&a, &x).unwrap();
            let yd = d.matvec(&x);
            for (s, t) in ys.iter().zip(&yd) {
                assert!((s - t).abs() <= 1e-13 * t.abs().max(1.0));
            }
            assert_eq!(a.to_dense(), d);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = CsrMatrix::identity(3);
        assert!(matches!(spmv(&a, &[1.0, 2.0]), Err(Error::DimensionMismatch { expected: 3, found: 2 })));
        assert!(residual_norm(&a, &[0.0; 3], &[0.0; 4]).is_err());
    }

    #[test]
    fn residual_norm_examples() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        assert_eq!(residual_norm(&a, &[1.0, 1.0], &[2.0, 5.0]).unwrap(), 1.0);
        assert_eq!(residual_norm(&a, &[1.0, 1.25], &[2.0, 5.0]).unwrap(), 0.0);
        assert_eq!(residual_norm(&a, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn jacobi_split_examples() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        assert_eq!(jacobi_split(&a).unwrap(), vec![0.5, 0.25]);
        let missing = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 0, 4.0)]).unwrap();
        assert!(matches!(jacobi_split(&missing), Err(Error::SingularSplitting { row: 1 })));
        let zero = CsrMatrix::from_triplets(2, 2, &[(0, 0, 0.0), (1, 1, 4.0)]).unwrap();
        assert!(matches!(jacobi_split(&zero), Err(Error::SingularSplitting { row: 0 })));
    }

    #[test]
    fn residual_form_equals_splitting_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 6;
            let mut d = random_dense(&mut rng, n, n, 0.6);
            for i in 0..n {
                d[(i, i)] = rng.gen_range(5.0..10.0);
            }
            let a = CsrMatrix::from_dense(&d).unwrap();
            let inv = jacobi_split(&a).unwrap();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: f64 = rng.gen_range(0.1..20.0);
            let ax = d.matvec(&x);
            for i in 0..n {
                let residual_form = x[i] + w * inv[i] * (b[i] - ax[i]);
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| d[(i, j)] * x[j]).sum();
                let split_form = (1.0 - w) * x[i] + w * (b[i] - off) / d[(i, i)];
                assert!((residual_form - split_form).abs() < 1e-12 * w.max(1.0));
            }
        }
    }

    #[test]
    fn rejects_malformed_csr() {
        assert!(CsrMatrix::new(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(CsrMatrix::new(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(2, 2, vec![0, 1, 2], vec![0, 2], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(2, 2, vec![0, 1, 2], vec![0, 1], vec![1.0]).is_err());
    }

    #[test]
    fn duplicate_triplets_sum() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.5), (1, 0, 1.0)]).unwrap();
        assert_eq!(a.get(0, 1), 3.5);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn matrix_market_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = random_dense(&mut rng, 7, 5, 0.5);
        let a = CsrMatrix::from_dense(&d).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, Some("test matrix\nsecond line"), &mut buf).unwrap();
        let b = read_matrix_market(std::io::Cursor::new(buf), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn matrix_market_symmetric_expands() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 4\n2 1 -1\n";
        let a = read_matrix_market(std::io::Cursor::new(text), None).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert!(a.is_symmetric());
    }

    #[test]
    fn matrix_market_errors_carry_line() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        match read_matrix_market(std::io::Cursor::new(text), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "%%MatrixMarket matrix array real general\n";
        assert!(read_matrix_market(std::io::Cursor::new(text), None).is_err());
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read_matrix_market(std::io::Cursor::new(text), None).is_err());
    }

    #[test]
    fn jacobi_matrix_has_zero_diagonal() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 3.0), (1, 1, 4.0)]).unwrap();
        let b = jacobi_iteration_dense(&a).unwrap();
        assert_eq!(b[(0, 0)], 0.0);
        assert_eq!(b[(0, 1)], -0.5);
        assert_eq!(b[(1, 0)], -0.75);
    }
}
