//! Truncated operators on a mode grid.
//!
//! Two storage backends share one type. Mode permutations and diagonal
//! factors stay sparse, Galerkin matrices are dense. Norms and smallest
//! singular values are computed block by block over the connected
//! components of the nonzero pattern, which is exact and turns a weighted
//! permutation into many tiny problems.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::linalg::{
    complex_gemm, inverse_iteration_smallest, lanczos_largest, start_vector, svd_largest,
    svd_smallest, svd_smallest_value,
};
use super::sparse::CscMatrix;
use super::{FourierVector, TruncatedGrid};
use crate::error::{Error, Result};

type C = Complex64;

/// Blocks up to this size get an exact SVD in `operator_norm`; larger ones
/// use Lanczos.
pub const NORM_SVD_LIMIT: usize = 500;
/// Blocks up to this size get an exact SVD in `smallest_singular`.
pub const SIGMA_MIN_SVD_LIMIT: usize = 2000;
/// Relative tolerance of the iterative fallbacks.
pub const ITERATIVE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
enum Storage {
    Dense(DMatrix<C>),
    Sparse(CscMatrix),
}

#[derive(Clone, Debug)]
struct Blocks {
    /// (rows, cols) of each connected component of the bipartite pattern.
    rectangular: Vec<(Vec<usize>, Vec<usize>)>,
    /// Index sets of the components of the symmetrised pattern.
    square: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct DenseOperator {
    grid: TruncatedGrid,
    storage: Storage,
    blocks: OnceLock<Blocks>,
}

impl PartialEq for DenseOperator {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.to_matrix() == other.to_matrix()
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

fn group(parent: &mut [usize], range: std::ops::Range<usize>) -> Vec<Vec<usize>> {
    let mut map = std::collections::BTreeMap::new();
    for i in range {
        let r = find(parent, i);
        map.entry(r).or_insert_with(Vec::new).push(i);
    }
    map.into_values().collect()
}

impl DenseOperator {
    fn with_storage(grid: &TruncatedGrid, storage: Storage) -> Self {
        DenseOperator {
            grid: grid.clone(),
            storage,
            blocks: OnceLock::new(),
        }
    }

    pub fn identity(grid: &TruncatedGrid) -> Self {
        Self::diagonal(grid, &vec![C::new(1.0, 0.0); grid.len()]).unwrap()
    }

    pub fn zeros(grid: &TruncatedGrid) -> Self {
        Self::with_storage(grid, Storage::Sparse(CscMatrix::from_triplets(grid.len(), vec![])))
    }

    pub fn diagonal(grid: &TruncatedGrid, values: &[C]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} diagonal entries for {} modes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self::with_storage(grid, Storage::Sparse(CscMatrix::diagonal(values))))
    }

    pub fn from_matrix(grid: &TruncatedGrid, m: DMatrix<C>) -> Result<Self> {
        if m.nrows() != grid.len() || m.ncols() != grid.len() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for a grid of {} modes",
                m.nrows(),
                m.ncols(),
                grid.len()
            )));
        }
        Ok(Self::with_storage(grid, Storage::Dense(m)))
    }

    /// Sparse operator from `(row, column, value)` triplets; duplicates add.
    pub fn from_triplets(grid: &TruncatedGrid, triplets: Vec<(usize, usize, C)>) -> Result<Self> {
        let n = grid.len();
        if let Some(t) = triplets.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(Error::Dimension(format!(
                "entry ({}, {}) outside a {n}x{n} operator",
                t.0, t.1
            )));
        }
        Ok(Self::with_storage(grid, Storage::Sparse(CscMatrix::from_triplets(n, triplets))))
    }

    pub fn grid(&self) -> &TruncatedGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn entry(&self, i: usize, j: usize) -> C {
        match &self.storage {
            Storage::Dense(m) => m[(i, j)],
            Storage::Sparse(s) => s.get(i, j),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<C> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(s) => {
                let mut m = DMatrix::zeros(s.n(), s.n());
                for (i, j, v) in s.triplets() {
                    m[(i, j)] = v;
                }
                m
            }
        }
    }

    /// Column `j` as `(row, value)` pairs, zeros omitted.
    pub fn column(&self, j: usize) -> Vec<(usize, C)> {
        match &self.storage {
            Storage::Dense(m) => m
                .column(j)
                .iter()
                .enumerate()
                .filter(|(_, v)| v.norm_sqr() > 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
            Storage::Sparse(s) => s.column(j).collect(),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Dimension(format!(
                "vector of length {len} for an operator of size {}",
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn apply_slice(&self, x: &[C]) -> Result<Vec<C>> {
        self.check_len(x.len())?;
        Ok(match &self.storage {
            Storage::Dense(m) => (m * nalgebra::DVector::from_column_slice(x)).data.into(),
            Storage::Sparse(s) => s.matvec(x),
        })
    }

    pub fn apply_adjoint_slice(&self, x: &[C]) -> Result<Vec<C>> {
        self.check_len(x.len())?;
        Ok(match &self.storage {
            Storage::Dense(m) => (m.ad_mul(&nalgebra::DVector::from_column_slice(x))).data.into(),
            Storage::Sparse(s) => s.adjoint_matvec(x),
        })
    }

    pub fn apply(&self, f: &FourierVector) -> Result<FourierVector> {
        if f.grid() != &self.grid {
            return Err(Error::Dimension("vector and operator live on different grids".into()));
        }
        FourierVector::from_coeffs(&self.grid, self.apply_slice(f.coeffs())?)
    }

    /// The product `self * other`.
    pub fn compose(&self, other: &DenseOperator) -> Result<DenseOperator> {
        if self.grid != other.grid {
            return Err(Error::Dimension("composing operators on different grids".into()));
        }
        let n = self.dim();
        let storage = match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let p = a.mul(b);
                if p.nnz() > n * n / 8 && n > 64 {
                    Storage::Dense(Self::with_storage(&self.grid, Storage::Sparse(p)).to_matrix())
                } else {
                    Storage::Sparse(p)
                }
            }
            (Storage::Dense(a), Storage::Dense(b)) => Storage::Dense(complex_gemm(a, b)),
            (Storage::Dense(a), Storage::Sparse(b)) => {
                let mut out = DMatrix::zeros(n, n);
                for j in 0..n {
                    for (k, v) in b.column(j) {
                        out.column_mut(j).axpy(v, &a.column(k), C::new(1.0, 0.0));
                    }
                }
                Storage::Dense(out)
            }
            (Storage::Sparse(a), Storage::Dense(b)) => {
                let mut out = DMatrix::zeros(n, n);
                for k in 0..n {
                    for (i, v) in a.column(k) {
                        let row = b.row(k) * v;
                        let mut dst = out.row_mut(i);
                        dst += row;
                    }
                }
                Storage::Dense(out)
            }
        };
        Ok(Self::with_storage(&self.grid, storage))
    }

    /// `self^n` by repeated squaring; `power(0)` is the identity.
    pub fn power(&self, n: u64) -> DenseOperator {
        let mut result = DenseOperator::identity(&self.grid);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.compose(&base).expect("same grid");
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base).expect("same grid");
            }
        }
        result
    }

    /// `diag(d) * self`.
    pub fn scale_rows(&self, d: &[f64]) -> Result<DenseOperator> {
        self.check_len(d.len())?;
        let storage = match &self.storage {
            Storage::Dense(m) => {
                let mut m = m.clone();
                for (i, mut row) in m.row_iter_mut().enumerate() {
                    row *= C::new(d[i], 0.0);
                }
                Storage::Dense(m)
            }
            Storage::Sparse(s) => Storage::Sparse(s.scale_rows(d)),
        };
        Ok(Self::with_storage(&self.grid, storage))
    }

    /// `self * diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> Result<DenseOperator> {
        self.check_len(d.len())?;
        let storage = match &self.storage {
            Storage::Dense(m) => {
                let mut m = m.clone();
                for (j, mut col) in m.column_iter_mut().enumerate() {
                    col *= C::new(d[j], 0.0);
                }
                Storage::Dense(m)
            }
            Storage::Sparse(s) => Storage::Sparse(s.scale_cols(d)),
        };
        Ok(Self::with_storage(&self.grid, storage))
    }

    fn nonzeros(&self) -> Vec<(usize, usize)> {
        match &self.storage {
            Storage::Dense(m) => {
                let mut v = Vec::new();
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        if m[(i, j)].norm_sqr() > 0.0 {
                            v.push((i, j));
                        }
                    }
                }
                v
            }
            Storage::Sparse(s) => s.triplets().map(|(i, j, _)| (i, j)).collect(),
        }
    }

    fn blocks(&self) -> &Blocks {
        self.blocks.get_or_init(|| {
            let n = self.dim();
            let nz = self.nonzeros();
            // rows are nodes 0..n, columns n..2n
            let mut parent: Vec<usize> = (0..2 * n).collect();
            for &(i, j) in &nz {
                union(&mut parent, i, n + j);
            }
            let mut rect = std::collections::BTreeMap::<usize, (Vec<usize>, Vec<usize>)>::new();
            for i in 0..n {
                let r = find(&mut parent, i);
                rect.entry(r).or_default().0.push(i);
            }
            for j in 0..n {
                let r = find(&mut parent, n + j);
                rect.entry(r).or_default().1.push(j);
            }
            let rectangular = rect
                .into_values()
                .filter(|(r, c)| !r.is_empty() && !c.is_empty())
                .collect();
            let mut parent: Vec<usize> = (0..n).collect();
            for &(i, j) in &nz {
                union(&mut parent, i, j);
            }
            let square = group(&mut parent, 0..n);
            Blocks {
                rectangular,
                square,
            }
        })
    }

    fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMatrix<C> {
        match &self.storage {
            Storage::Dense(m) => DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])]),
            Storage::Sparse(s) => {
                let mut pos = std::collections::HashMap::with_capacity(rows.len());
                for (a, &r) in rows.iter().enumerate() {
                    pos.insert(r, a);
                }
                let mut out = DMatrix::zeros(rows.len(), cols.len());
                for (b, &c) in cols.iter().enumerate() {
                    for (r, v) in s.column(c) {
                        if let Some(&a) = pos.get(&r) {
                            out[(a, b)] = v;
                        }
                    }
                }
                out
            }
        }
    }

    /// Largest singular value to relative accuracy `tol`.
    pub fn operator_norm(&self, tol: f64) -> Result<f64> {
        Ok(self.norm_with_vector(tol)?.0)
    }

    /// Largest singular value together with a unit right singular vector.
    pub fn norm_with_vector(&self, tol: f64) -> Result<(f64, Vec<C>)> {
        if !(tol > 0.0) {
            return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
        }
        let n = self.dim();
        let mut best = (0.0f64, start_vector(n, &[0]));
        for (rows, cols) in &self.blocks().rectangular {
            let (sigma, v) = if rows.len().max(cols.len()) <= NORM_SVD_LIMIT {
                let (s, v) = svd_largest(&self.submatrix(rows, cols))?;
                let mut full = vec![C::new(0.0, 0.0); n];
                for (b, &c) in cols.iter().enumerate() {
                    full[c] = v[b];
                }
                (s, full)
            } else {
                lanczos_largest(
                    start_vector(n, cols),
                    tol,
                    |x| self.apply_slice(x).expect("length checked"),
                    |x| self.apply_adjoint_slice(x).expect("length checked"),
                )?
            };
            if sigma > best.0 {
                best = (sigma, v);
            }
        }
        Ok(best)
    }

    /// `sigma_min(lambda I - T)`, zero when `lambda` is an eigenvalue.
    pub fn smallest_singular(&self, lambda: C) -> Result<f64> {
        let mut best = f64::INFINITY;
        for idx in &self.blocks().square {
            if idx.len() > SIGMA_MIN_SVD_LIMIT {
                return Ok(self.smallest_singular_with_vector(lambda)?.0);
            }
            let mut m = -self.submatrix(idx, idx);
            for a in 0..idx.len() {
                m[(a, a)] += lambda;
            }
            best = best.min(svd_smallest_value(&m)?);
        }
        Ok(best)
    }

    /// `sigma_min(lambda I - T)` with a unit right singular vector.
    pub fn smallest_singular_with_vector(&self, lambda: C) -> Result<(f64, Vec<C>)> {
        let n = self.dim();
        let mut best: Option<(f64, Vec<C>)> = None;
        for idx in &self.blocks().square {
            let mut m = -self.submatrix(idx, idx);
            for a in 0..idx.len() {
                m[(a, a)] += lambda;
            }
            let (sigma, v) = if idx.len() <= SIGMA_MIN_SVD_LIMIT {
                svd_smallest(&m)?
            } else {
                inverse_iteration_smallest(&m, ITERATIVE_TOL)?
            };
            if best.as_ref().is_none_or(|b| sigma < b.0) {
                let mut full = vec![C::new(0.0, 0.0); n];
                for (a, &i) in idx.iter().enumerate() {
                    full[i] = v[a];
                }
                best = Some((sigma, full));
            }
        }
        Ok(best.expect("grids are never empty"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn grid1(k: i64) -> TruncatedGrid {
        TruncatedGrid::new(1, k).unwrap()
    }

    #[test]
    fn identity_and_nilpotent_norms() {
        let g = grid1(3);
        assert!((DenseOperator::identity(&g).operator_norm(1e-12).unwrap() - 1.0).abs() < 1e-14);
        let n = DenseOperator::from_triplets(&grid1(1), vec![(0, 1, c(1.0))]).unwrap();
        assert!((n.operator_norm(1e-12).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn noise_diagonal_norm() {
        // max over k in {±1,±2,±3} of exp(-(0.5k)^2)
        let g = grid1(3);
        let d: Vec<C> = g.modes().map(|k| c((-(0.5 * k[0] as f64).powi(2)).exp())).collect();
        let op = DenseOperator::diagonal(&g, &d).unwrap();
        assert!((op.operator_norm(1e-12).unwrap() - (-0.25f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn smallest_singular_examples() {
        let g = grid1(1);
        let zero = DenseOperator::zeros(&g);
        assert!((zero.smallest_singular(c(1.0)).unwrap() - 1.0).abs() < 1e-14);
        let d = DenseOperator::diagonal(&g, &[c(0.5), c(0.2)]).unwrap();
        assert!((d.smallest_singular(c(1.0)).unwrap() - 0.5).abs() < 1e-14);
        let nil = DenseOperator::from_triplets(&g, vec![(0, 1, c(1.0))]).unwrap();
        for r in [0.3, 0.7, 1.0] {
            for theta in [0.0, 1.1, 2.5] {
                let lam = C::from_polar(r, theta);
                // [[r, -1], [0, r]]: s_min^2 = (2r^2 + 1 - sqrt(4r^2 + 1)) / 2
                let expect = ((2.0 * r * r + 1.0 - (4.0 * r * r + 1.0f64).sqrt()) / 2.0).sqrt();
                let got = nil.smallest_singular(lam).unwrap();
                assert!((got - expect).abs() < 1e-12, "r={r}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn algebra_examples() {
        let g = grid1(2);
        let m = DMatrix::from_fn(4, 4, |i, j| C::new(i as f64 + 0.5, j as f64 - 1.0));
        let t = DenseOperator::from_matrix(&g, m).unwrap();
        assert_eq!(t.power(0), DenseOperator::identity(&g));
        let f = FourierVector::from_coeffs(&g, vec![c(1.0), c(-2.0), C::new(0.0, 1.0), c(3.0)]).unwrap();
        assert_eq!(DenseOperator::identity(&g).apply(&f).unwrap(), f);
        let a = DenseOperator::diagonal(&g, &[c(1.0), c(2.0), c(3.0), c(4.0)]).unwrap();
        let b = DenseOperator::diagonal(&g, &[c(2.0), c(0.5), c(-1.0), c(1.0)]).unwrap();
        let ab = DenseOperator::diagonal(&g, &[c(2.0), c(1.0), c(-3.0), c(4.0)]).unwrap();
        assert_eq!(a.compose(&b).unwrap(), ab);
        let t3 = t.compose(&t).unwrap().compose(&t).unwrap();
        let diff = (t.power(3).to_matrix() - t3.to_matrix()).norm();
        assert!(diff < 1e-9 * t3.to_matrix().norm());
        assert!(t.compose(&DenseOperator::identity(&grid1(3))).is_err());
    }

    #[test]
    fn iterative_paths_agree_with_svd() {
        let g = TruncatedGrid::new(2, 11).unwrap(); // 528 modes, above the SVD limit
        let n = g.len();
        let m = DMatrix::from_fn(n, n, |i, j| {
            let x = (i * 31 + j * 17) as f64;
            C::new((x * 0.37).sin(), (x * 0.11).cos()) / (1.0 + (i as f64 - j as f64).abs())
        });
        let t = DenseOperator::from_matrix(&g, m.clone()).unwrap();
        let exact = m.clone().singular_values().max();
        let iterative = t.operator_norm(1e-12).unwrap();
        assert!((iterative - exact).abs() < 1e-8 * exact, "{iterative} vs {exact}");
        let lam = C::new(0.3, 0.4);
        let mut shifted = -m;
        for i in 0..n {
            shifted[(i, i)] += lam;
        }
        let smin = shifted.clone().singular_values().min();
        let (inv, _) = inverse_iteration_smallest(&shifted, 1e-12).unwrap();
        assert!((inv - smin).abs() < 1e-7 * smin.max(1e-3), "{inv} vs {smin}");
    }

    fn random_op(n_modes_k: i64, vals: Vec<(f64, f64)>) -> DenseOperator {
        let g = grid1(n_modes_k);
        let n = g.len();
        DenseOperator::from_matrix(
            &g,
            DMatrix::from_fn(n, n, |i, j| C::new(vals[i * n + j].0, vals[i * n + j].1)),
        )
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn norm_dominates_columns(vals in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 36)) {
            let t = random_op(3, vals);
            let norm = t.operator_norm(1e-12).unwrap();
            for j in 0..t.dim() {
                let col: f64 = t.column(j).iter().map(|(_, v)| v.norm_sqr()).sum::<f64>().sqrt();
                prop_assert!(norm >= col * (1.0 - 1e-12));
            }
        }

        #[test]
        fn sigma_min_times_resolvent_norm_is_one(
            vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 100),
            re in -2.0f64..2.0, im in -2.0f64..2.0,
        ) {
            let g = TruncatedGrid::new(1, 5).unwrap();
            let m = DMatrix::from_fn(10, 10, |i, j| C::new(vals[i * 10 + j].0, vals[i * 10 + j].1));
            let t = DenseOperator::from_matrix(&g, m.clone()).unwrap();
            let lam = C::new(re, im);
            let mut shifted = -m;
            for i in 0..10 { shifted[(i, i)] += lam; }
            if let Some(inv) = shifted.try_inverse() {
                let rnorm = inv.singular_values().max();
                let s = t.smallest_singular(lam).unwrap();
                prop_assert!((s * rnorm - 1.0).abs() < 1e-8);
            }
        }

        #[test]
        fn sparse_and_dense_storage_agree(perm_seed in 0u64..1000, w in proptest::collection::vec(0.1f64..1.0, 8)) {
            let g = TruncatedGrid::new(1, 4).unwrap();
            let p: Vec<usize> = (0..8).map(|i| ((i as u64 * 5 + perm_seed) % 8) as usize).collect();
            let trip: Vec<_> = (0..8).map(|j| (p[j], j, c(w[j]))).collect();
            let s = DenseOperator::from_triplets(&g, trip).unwrap();
            let d = DenseOperator::from_matrix(&g, s.to_matrix()).unwrap();
            prop_assert!((s.operator_norm(1e-12).unwrap() - d.operator_norm(1e-12).unwrap()).abs() < 1e-12);
            let lam = C::new(0.2, 0.9);
            prop_assert!((s.smallest_singular(lam).unwrap() - d.smallest_singular(lam).unwrap()).abs() < 1e-12);
            let s3 = s.power(3);
            let d3 = d.power(3);
            prop_assert!((s3.to_matrix() - d3.to_matrix()).norm() < 1e-12);
        }
    }
}
