//! Lumped mass and cotangent stiffness operators.

use super::TriangleMesh;

/// Cotangent magnitudes are clamped here so near-degenerate triangles on
/// coarse reconstructions cannot blow up the stiffness matrix.
pub const COT_CLAMP: f64 = 1e6;

/// Symmetric sparse matrix in CSR form. Both triangles are stored so that
/// matrix-vector products are a single row sweep.
#[derive(Debug, Clone)]
pub struct SparseSymmetricMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetricMatrix {
    /// Assemble from (row, col, value) triplets. Duplicates are summed,
    /// exact zeros after summation are dropped. The caller is responsible for
    /// providing symmetric content; symmetry is checked in debug builds.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets.to_vec();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != 0.0);

        let mut row_ptr = vec![0usize; dim + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = merged.iter().map(|&(_, c, _)| c).collect();
        let values = merged.iter().map(|&(_, _, v)| v).collect();
        let m = SparseSymmetricMatrix {
            dim,
            row_ptr,
            col_idx,
            values,
        };
        debug_assert!(m.symmetry_error() <= 1e-10 * m.max_abs().max(1.0));
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Entry (i, j), zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[i] = acc;
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |A_ij - A_ji|; exercised by the symmetry invariant tests.
    pub fn symmetry_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(*c, i)).abs());
            }
        }
        worst
    }

    /// Per-row sums; the stiffness matrix must return (near-)zeros.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.row(i).1.iter().sum())
            .collect()
    }

    /// Dense copy, for small test problems.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                m[(i, *c)] = *v;
            }
        }
        m
    }
}

/// Lumped (diagonal) mass: each vertex receives one third of the area of its
/// incident triangles. Vertices referenced by no face get zero.
pub fn vertex_areas(mesh: &TriangleMesh) -> Vec<f64> {
    let mut areas = vec![0.0; mesh.vertex_count()];
    for fi in 0..mesh.face_count() {
        let contribution = mesh.face_area(fi) / 3.0;
        for &v in &mesh.faces()[fi] {
            areas[v] += contribution;
        }
    }
    areas
}

/// Cotangent stiffness matrix L (positive semidefinite convention):
/// off-diagonal L_ij = -w_ij with w_ij the halved sum of cotangents opposite
/// the edge (i, j), diagonal = negated row sum. Returns the clamp count for
/// near-degenerate corners alongside the matrix.
pub fn cotangent_laplacian_with_stats(mesh: &TriangleMesh) -> (SparseSymmetricMatrix, usize) {
    let n = mesh.vertex_count();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(mesh.face_count() * 12);
    let mut clamped = 0usize;

    for &[a, b, c] in mesh.faces() {
        let pa = mesh.vertex(a);
        let pb = mesh.vertex(b);
        let pc = mesh.vertex(c);
        // Cotangent at each corner, opposite the edge not touching it.
        let corners = [
            (a, (pb - pa), (pc - pa), [b, c]),
            (b, (pc - pb), (pa - pb), [c, a]),
            (c, (pa - pc), (pb - pc), [a, b]),
        ];
        for (_, u, v, edge) in corners {
            let cross = u.cross(&v).norm();
            let mut cot = if cross > 0.0 { u.dot(&v) / cross } else { COT_CLAMP };
            if cot.abs() > COT_CLAMP {
                cot = cot.signum() * COT_CLAMP;
                clamped += 1;
            }
            let w = 0.5 * cot;
            let [i, j] = edge;
            triplets.push((i, j, -w));
            triplets.push((j, i, -w));
            triplets.push((i, i, w));
            triplets.push((j, j, w));
        }
    }
    (SparseSymmetricMatrix::from_triplets(n, &triplets), clamped)
}

/// Cotangent stiffness matrix; see [`cotangent_laplacian_with_stats`].
pub fn cotangent_laplacian(mesh: &TriangleMesh) -> SparseSymmetricMatrix {
    cotangent_laplacian_with_stats(mesh).0
}
