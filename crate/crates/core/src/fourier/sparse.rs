//! Compressed-column storage for operators that move modes around without
//! mixing them much (mode permutations, diagonal noise, their products).

use num_complex::Complex64;

type C = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct CscMatrix {
    n: usize,
    colptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<C>,
}

impl CscMatrix {
    /// Duplicates are summed, exact zeros dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C)>) -> Self {
        triplets.sort_by_key(|a| (a.1, a.0));
        let mut colptr = vec![0usize; n + 1];
        let mut rows = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            rows.push(r);
            vals.push(v);
            colptr[c + 1] += 1;
        }
        for j in 0..n {
            colptr[j + 1] += colptr[j];
        }
        let mut m = CscMatrix {
            n,
            colptr,
            rows,
            vals,
        };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        if self.vals.iter().all(|v| v.norm_sqr() > 0.0) {
            return;
        }
        let mut colptr = vec![0usize; self.n + 1];
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        for j in 0..self.n {
            for p in self.colptr[j]..self.colptr[j + 1] {
                if self.vals[p].norm_sqr() > 0.0 {
                    rows.push(self.rows[p]);
                    vals.push(self.vals[p]);
                }
            }
            colptr[j + 1] = rows.len();
        }
        self.colptr = colptr;
        self.rows = rows;
        self.vals = vals;
    }

    pub fn diagonal(values: &[C]) -> Self {
        let n = values.len();
        Self::from_triplets(n, values.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, C)> + '_ {
        (self.colptr[j]..self.colptr[j + 1]).map(move |p| (self.rows[p], self.vals[p]))
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        self.column(j)
            .find(|&(r, _)| r == i)
            .map_or(C::new(0.0, 0.0), |(_, v)| v)
    }

    pub fn matvec(&self, x: &[C]) -> Vec<C> {
        let mut y = vec![C::new(0.0, 0.0); self.n];
        for (j, &xj) in x.iter().enumerate() {
            if xj.norm_sqr() == 0.0 {
                continue;
            }
            for (r, v) in self.column(j) {
                y[r] += v * xj;
            }
        }
        y
    }

    pub fn adjoint_matvec(&self, x: &[C]) -> Vec<C> {
        (0..self.n)
            .map(|j| self.column(j).map(|(r, v)| v.conj() * x[r]).sum())
            .collect()
    }

    /// `self * other`.
    pub fn mul(&self, other: &CscMatrix) -> CscMatrix {
        let n = self.n;
        let mut acc = vec![C::new(0.0, 0.0); n];
        let mut mark = vec![usize::MAX; n];
        let mut touched = Vec::new();
        let mut colptr = vec![0usize; n + 1];
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        for j in 0..n {
            touched.clear();
            for (k, b) in other.column(j) {
                for (i, a) in self.column(k) {
                    if mark[i] != j {
                        mark[i] = j;
                        acc[i] = C::new(0.0, 0.0);
                        touched.push(i);
                    }
                    acc[i] += a * b;
                }
            }
            touched.sort_unstable();
            for &i in &touched {
                if acc[i].norm_sqr() > 0.0 {
                    rows.push(i);
                    vals.push(acc[i]);
                }
            }
            colptr[j + 1] = rows.len();
        }
        CscMatrix {
            n,
            colptr,
            rows,
            vals,
        }
    }

    pub fn scale_rows(&self, d: &[f64]) -> CscMatrix {
        let mut m = self.clone();
        for (p, v) in m.vals.iter_mut().enumerate() {
            *v *= d[self.rows[p]];
        }
        m.drop_zeros();
        m
    }

    pub fn scale_cols(&self, d: &[f64]) -> CscMatrix {
        let mut m = self.clone();
        for j in 0..self.n {
            for p in m.colptr[j]..m.colptr[j + 1] {
                m.vals[p] *= d[j];
            }
        }
        m.drop_zeros();
        m
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C)> + '_ {
        (0..self.n).flat_map(move |j| self.column(j).map(move |(r, v)| (r, j, v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }

    #[test]
    fn duplicates_sum_and_zeros_vanish() {
        let m = CscMatrix::from_triplets(
            2,
            vec![(0, 1, c(1.0)), (0, 1, c(2.0)), (1, 0, c(1.0)), (1, 0, c(-1.0))],
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0));
    }

    #[test]
    fn product_matches_dense() {
        let a = CscMatrix::from_triplets(3, vec![(0, 0, c(1.0)), (1, 0, c(2.0)), (2, 1, c(3.0))]);
        let b = CscMatrix::from_triplets(3, vec![(0, 1, c(4.0)), (1, 2, c(5.0))]);
        let p = a.mul(&b);
        assert_eq!(p.get(0, 1), c(4.0));
        assert_eq!(p.get(1, 1), c(8.0));
        assert_eq!(p.get(2, 2), c(15.0));
        assert_eq!(p.nnz(), 3);
        let x = vec![c(1.0), c(2.0), c(3.0)];
        assert_eq!(a.matvec(&x), vec![c(1.0), c(2.0), c(6.0)]);
        assert_eq!(a.adjoint_matvec(&x), vec![c(5.0), c(9.0), c(0.0)]);
    }
}
