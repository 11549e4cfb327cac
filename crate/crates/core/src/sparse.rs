use sprs::{CsMat, TriMat};

/// Symmetric sparse matrix in compressed-row storage with sorted columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSpdMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl SparseSpdMatrix {
    /// Sums duplicate entries; the caller supplies both triangles.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut tri = TriMat::new((n, n));
        for (i, j, v) in triplets {
            tri.add_triplet(i, j, v);
        }
        let csr: CsMat<f64> = tri.to_csr();
        let (indptr, indices, data) = csr.into_raw_storage();
        Self {
            n,
            indptr,
            indices,
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Iterates the stored entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.data[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.data[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// Principal submatrix on `keep` (in the given order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let mut trip = Vec::new();
        for (ri, &i) in keep.iter().enumerate() {
            for (j, v) in self.row(i) {
                if map[j] != usize::MAX {
                    trip.push((ri, map[j], v));
                }
            }
        }
        Self::from_triplets(keep.len(), trip)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// First stored column of each row (capped at the diagonal), for
    /// envelope factorizations.
    pub(crate) fn row_first_column(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| {
                let r = self.indptr[i]..self.indptr[i + 1];
                self.indices[r].first().copied().unwrap_or(i).min(i)
            })
            .collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
