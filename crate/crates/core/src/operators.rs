//! Linear operators `K: R^n -> R^m` with their adjoints.
//!
//! Everything the solvers need from `K` goes through [`LinearMap`]:
//! forward application, adjoint application, column extraction, and
//! blocks of the normal operator `K^T K`. The normal operator itself is
//! never formed globally; only the blocks indexed by an active set are
//! materialized (see [`LinearMap::normal_submatrix`]).

use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{check_len, Error, Result};

const NORM_MAX_ITERS: usize = 200;
const NORM_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
enum Repr {
    Dense(Array2<f64>),
    /// `outer ∘ inner`, i.e. `x -> outer(inner(x))`.
    Composed {
        outer: Box<LinearMap>,
        inner: Box<LinearMap>,
    },
}

/// A finite-dimensional linear map, either a dense matrix or a
/// composition of two maps.
#[derive(Debug, Clone)]
pub struct LinearMap {
    repr: Repr,
}

impl LinearMap {
    pub fn dense(matrix: Array2<f64>) -> Self {
        LinearMap {
            repr: Repr::Dense(matrix),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::dense(Array2::eye(n))
    }

    pub fn diag(entries: &[f64]) -> Self {
        Self::dense(Array2::from_diag(&ArrayView1::from(entries)))
    }

    /// Returns `outer ∘ inner`.
    pub fn compose(outer: LinearMap, inner: LinearMap) -> Result<Self> {
        check_len("compose", outer.domain_dim(), inner.range_dim())?;
        Ok(LinearMap {
            repr: Repr::Composed {
                outer: Box::new(outer),
                inner: Box::new(inner),
            },
        })
    }

    pub fn domain_dim(&self) -> usize {
        match &self.repr {
            Repr::Dense(m) => m.ncols(),
            Repr::Composed { inner, .. } => inner.domain_dim(),
        }
    }

    pub fn range_dim(&self) -> usize {
        match &self.repr {
            Repr::Dense(m) => m.nrows(),
            Repr::Composed { outer, .. } => outer.range_dim(),
        }
    }

    pub fn apply(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len("apply", self.domain_dim(), x.len())?;
        Ok(self.apply_unchecked(x))
    }

    pub fn adjoint_apply(&self, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len("adjoint_apply", self.range_dim(), y.len())?;
        Ok(self.adjoint_unchecked(y))
    }

    pub(crate) fn apply_unchecked(&self, x: ArrayView1<f64>) -> Array1<f64> {
        match &self.repr {
            Repr::Dense(m) => m.dot(&x),
            Repr::Composed { outer, inner } => {
                outer.apply_unchecked(inner.apply_unchecked(x).view())
            }
        }
    }

    pub(crate) fn adjoint_unchecked(&self, y: ArrayView1<f64>) -> Array1<f64> {
        match &self.repr {
            Repr::Dense(m) => m.t().dot(&y),
            Repr::Composed { outer, inner } => {
                inner.adjoint_unchecked(outer.adjoint_unchecked(y).view())
            }
        }
    }

    /// Applies the map to every column of `x` (`domain_dim × k`).
    fn apply_columns(&self, x: &Array2<f64>) -> Array2<f64> {
        match &self.repr {
            Repr::Dense(m) => m.dot(x),
            Repr::Composed { outer, inner } => outer.apply_columns(&inner.apply_columns(x)),
        }
    }

    /// The columns `K e_j` for `j` in `indices`, as a `range_dim × |indices|` matrix.
    pub fn columns(&self, indices: &[usize]) -> Result<Array2<f64>> {
        let n = self.domain_dim();
        if let Some(&bad) = indices.iter().find(|&&j| j >= n) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                bound: n,
            });
        }
        Ok(self.columns_unchecked(indices))
    }

    pub(crate) fn columns_unchecked(&self, indices: &[usize]) -> Array2<f64> {
        match &self.repr {
            Repr::Dense(m) => m.select(Axis(1), indices),
            Repr::Composed { outer, inner } => outer.apply_columns(&inner.columns_unchecked(indices)),
        }
    }

    /// Dense matrix of the whole map. Composition is evaluated as a
    /// matrix product.
    pub fn to_dense(&self) -> Array2<f64> {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Composed { outer, inner } => outer.apply_columns(&inner.to_dense()),
        }
    }

    /// The block `(K^T K)[rows, cols]`, evaluated lazily.
    pub fn normal_submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<SubmatrixView<'_>> {
        let n = self.domain_dim();
        for &k in rows.iter().chain(cols) {
            if k >= n {
                return Err(Error::IndexOutOfRange { index: k, bound: n });
            }
        }
        Ok(SubmatrixView {
            parent: self,
            rows: rows.to_vec(),
            cols: cols.to_vec(),
        })
    }

    /// Estimate of the spectral norm `‖K‖₂` by power iteration on `K^T K`.
    ///
    /// Starts from the normalized all-ones vector, runs at most 200
    /// iterations and stops once the Rayleigh quotient changes by less than
    /// `1e-6` relative. Deterministic for a given map.
    pub fn operator_norm_estimate(&self) -> f64 {
        let n = self.domain_dim();
        if n == 0 || self.range_dim() == 0 {
            return 0.0;
        }
        let mut x = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
        let mut lambda = 0.0;
        for _ in 0..NORM_MAX_ITERS {
            let y = self.adjoint_unchecked(self.apply_unchecked(x.view()).view());
            let norm = y.dot(&y).sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            // x has unit norm, so x·y is the Rayleigh quotient.
            let next = x.dot(&y);
            x = y / norm;
            if (next - lambda).abs() <= NORM_REL_TOL * next.abs() {
                lambda = next;
                break;
            }
            lambda = next;
        }
        lambda.max(0.0).sqrt()
    }

    /// Reads a dense matrix from CSV: one row per line, comma-separated
    /// decimals, no header.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        Ok(Self::dense(read_csv_matrix(reader)?))
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }
}

pub(crate) fn read_csv_matrix<R: Read>(reader: R) -> Result<Array2<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for record in rdr.records() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let width = record.len();
        match ncols {
            None => ncols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Parse(format!(
                    "row {} has {} columns, expected {}",
                    nrows + 1,
                    width,
                    c
                )))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("not a number: {field:?}")))?;
            data.push(v);
        }
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| Error::Parse("empty matrix".into()))?;
    Array2::from_shape_vec((nrows, ncols), data).map_err(|e| Error::Parse(e.to_string()))
}

/// Reads a vector from CSV. Either a single row or a single column is accepted.
pub fn read_csv_vector<R: Read>(reader: R) -> Result<Array1<f64>> {
    let m = read_csv_matrix(reader)?;
    if m.nrows() != 1 && m.ncols() != 1 {
        return Err(Error::Parse(format!(
            "expected a single row or column, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.iter().copied().collect())
}

pub fn write_csv_matrix<W: std::io::Write>(writer: W, m: &Array2<f64>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in m.rows() {
        wtr.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Lazy view of the block `(K^T K)[rows, cols]`.
#[derive(Debug, Clone)]
pub struct SubmatrixView<'a> {
    parent: &'a LinearMap,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl SubmatrixView<'_> {
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    /// `⟨K e_cols[j], K e_rows[i]⟩`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let a = self.parent.columns_unchecked(&[self.rows[i]]);
        let b = self.parent.columns_unchecked(&[self.cols[j]]);
        a.column(0).dot(&b.column(0))
    }

    pub fn materialize(&self) -> Array2<f64> {
        let kr = self.parent.columns_unchecked(&self.rows);
        if self.rows == self.cols {
            let mut g = kr.t().dot(&kr);
            symmetrize(&mut g);
            g
        } else {
            let kc = self.parent.columns_unchecked(&self.cols);
            kr.t().dot(&kc)
        }
    }
}

fn symmetrize(g: &mut Array2<f64>) {
    let n = g.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (g[[i, j]] + g[[j, i]]);
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::integration_operator;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(rng: &mut ChaCha8Rng, m: usize, n: usize) -> LinearMap {
        LinearMap::dense(Array2::from_shape_fn((m, n), |_| rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn identity_and_zero() {
        let id = LinearMap::identity(3);
        assert_eq!(id.apply(array![1.0, 2.0, 3.0].view()).unwrap(), array![1.0, 2.0, 3.0]);
        assert_eq!(id.adjoint_apply(array![4.0, 5.0, 6.0].view()).unwrap(), array![4.0, 5.0, 6.0]);
        let k = integration_operator(4);
        assert_eq!(k.apply(Array1::zeros(4).view()).unwrap(), Array1::<f64>::zeros(4));
        assert_eq!(k.adjoint_apply(Array1::zeros(4).view()).unwrap(), Array1::<f64>::zeros(4));
    }

    #[test]
    fn integration_matrix_hand_values() {
        let k = integration_operator(2);
        assert_eq!(k.apply(array![1.0, 1.0].view()).unwrap(), array![0.5, 1.0]);
        assert_eq!(k.adjoint_apply(array![1.0, 0.0].view()).unwrap(), array![0.5, 0.0]);
    }

    #[test]
    fn dimension_errors_report_both_sizes() {
        let k = LinearMap::identity(3);
        match k.apply(array![1.0, 2.0].view()) {
            Err(Error::DimensionMismatch { expected: 3, found: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(k.adjoint_apply(array![1.0].view()).is_err());
        assert!(LinearMap::compose(LinearMap::identity(2), LinearMap::identity(3)).is_err());
    }

    #[test]
    fn adjoint_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_dense(&mut rng, 7, 5);
        let b = random_dense(&mut rng, 5, 4);
        let maps = [
            a.clone(),
            integration_operator(6),
            LinearMap::compose(a, b).unwrap(),
        ];
        for k in &maps {
            for _ in 0..100 {
                let x: Array1<f64> = (0..k.domain_dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
                let y: Array1<f64> = (0..k.range_dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
                let lhs = k.apply(x.view()).unwrap().dot(&y);
                let rhs = x.dot(&k.adjoint_apply(y.view()).unwrap());
                let scale = 1.0 + x.dot(&x).sqrt() * y.dot(&y).sqrt();
                assert!((lhs - rhs).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn composition_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_dense(&mut rng, 4, 6);
        let b = random_dense(&mut rng, 6, 5);
        let ab = LinearMap::compose(a.clone(), b.clone()).unwrap();
        assert_eq!((ab.domain_dim(), ab.range_dim()), (5, 4));
        for _ in 0..20 {
            let x: Array1<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let seq = a.apply(b.apply(x.view()).unwrap().view()).unwrap();
            assert_eq!(ab.apply(x.view()).unwrap(), seq);
        }
    }

    #[test]
    fn normal_submatrix_matches_dense_product() {
        let empty = LinearMap::identity(3);
        assert_eq!(empty.normal_submatrix(&[], &[]).unwrap().materialize().dim(), (0, 0));

        let id = LinearMap::identity(3);
        assert_eq!(id.normal_submatrix(&[0, 2], &[0, 2]).unwrap().materialize(), Array2::<f64>::eye(2));

        let k = integration_operator(4);
        let dense = k.to_dense();
        let ktk = dense.t().dot(&dense);
        let view = k.normal_submatrix(&[1, 3], &[1, 3]).unwrap();
        let block = view.materialize();
        for (i, &r) in [1usize, 3].iter().enumerate() {
            for (j, &c) in [1usize, 3].iter().enumerate() {
                assert!((block[[i, j]] - ktk[[r, c]]).abs() < 1e-15);
                assert!((view.entry(i, j) - ktk[[r, c]]).abs() < 1e-15);
            }
        }
        // (K^T K)_{ij} = (n - max(i, j)) / n^2 for the integration matrix.
        assert!((block[[0, 1]] - 1.0 / 16.0).abs() < 1e-15);
        assert!((block[[0, 0]] - 3.0 / 16.0).abs() < 1e-15);

        assert!(matches!(
            k.normal_submatrix(&[4], &[0]),
            Err(Error::IndexOutOfRange { index: 4, bound: 4 })
        ));
    }

    #[test]
    fn square_blocks_are_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = random_dense(&mut rng, 30, 20);
        let idx = [0, 3, 4, 9, 17, 19];
        let g = k.normal_submatrix(&idx, &idx).unwrap().materialize();
        for i in 0..idx.len() {
            for j in 0..idx.len() {
                assert!((g[[i, j]] - g[[j, i]]).abs() <= 1e-12);
            }
        }
        let rect = k.normal_submatrix(&[1, 2], &[5, 6, 7]).unwrap().materialize();
        assert_eq!(rect.dim(), (2, 3));
    }

    #[test]
    fn norm_estimates() {
        assert!((LinearMap::identity(5).operator_norm_estimate() - 1.0).abs() < 1e-6);
        assert!((LinearMap::diag(&[3.0, 1.0]).operator_norm_estimate() - 3.0).abs() < 0.03);
        assert_eq!(LinearMap::dense(Array2::zeros((3, 4))).operator_norm_estimate(), 0.0);

        // Dense SVD oracle.
        let k = integration_operator(100);
        let d = k.to_dense();
        let na = nalgebra::DMatrix::from_fn(100, 100, |i, j| d[[i, j]]);
        let sigma_max = na.singular_values().max();
        let est = k.operator_norm_estimate();
        assert!((est - sigma_max).abs() <= 0.01 * sigma_max, "{est} vs {sigma_max}");
    }

    #[test]
    fn csv_round_trip() {
        let m = array![[1.0, -2.5], [3.25e-3, 4.0]];
        let mut buf = Vec::new();
        write_csv_matrix(&mut buf, &m).unwrap();
        let k = LinearMap::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(k.to_dense(), m);

        let v = read_csv_vector("1.5\n2\n-3\n".as_bytes()).unwrap();
        assert_eq!(v, array![1.5, 2.0, -3.0]);
        assert!(LinearMap::from_csv_reader("1,2\n3\n".as_bytes()).is_err());
        assert!(LinearMap::from_csv_reader("1,x\n".as_bytes()).is_err());
    }
}
