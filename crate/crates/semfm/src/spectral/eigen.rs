//! Smallest eigenpairs of the generalized problem L x = lambda M x with
//! diagonal mass M.
//!
//! Small problems go through a dense symmetric solve of the mass-whitened
//! operator. Larger ones use shift-inverted subspace iteration: factor
//! K = L - sigma*M once (sigma < 0 keeps K positive definite), then iterate a
//! block through K^-1 M with Rayleigh-Ritz extraction. The block formulation
//! resolves eigenvalue multiplicities (sphere spectra) cleanly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::SparseSymmetricMatrix;
use crate::rng::Rng;

/// Meshes at or below this vertex count use the dense path.
pub const DENSE_LIMIT: usize = 500;

pub struct EigenPairs {
    /// Nondecreasing eigenvalues.
    pub values: Vec<f64>,
    /// M-orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<f64>,
}

pub fn smallest_eigenpairs(
    stiffness: &SparseSymmetricMatrix,
    mass: &[f64],
    k: usize,
) -> Result<EigenPairs> {
    let n = stiffness.dim();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "basis size k = {k} must satisfy 1 <= k < |V| = {n}"
        )));
    }
    if mass.len() != n {
        return Err(Error::InvalidArgument("mass length != matrix dimension".into()));
    }
    if mass.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidArgument(
            "mesh has zero-area vertices; the lumped mass must be positive".into(),
        ));
    }
    let mut pairs = if n <= DENSE_LIMIT {
        dense_smallest(stiffness, mass, k)
    } else {
        subspace_smallest(stiffness, mass, k)
    }?;
    fix_signs(&mut pairs.vectors);
    Ok(pairs)
}

/// Dense path: whiten with M^(-1/2), symmetric eigensolve, unwhiten.
fn dense_smallest(
    stiffness: &SparseSymmetricMatrix,
    mass: &[f64],
    k: usize,
) -> Result<EigenPairs> {
    let n = stiffness.dim();
    let inv_sqrt_m: Vec<f64> = mass.iter().map(|&m| 1.0 / m.sqrt()).collect();
    let mut whitened = stiffness.to_dense();
    for i in 0..n {
        for j in 0..n {
            whitened[(i, j)] *= inv_sqrt_m[i] * inv_sqrt_m[j];
        }
    }
    // Symmetrize away assembly round-off before the QR iteration.
    let whitened = (&whitened + whitened.transpose()) * 0.5;
    let eig = whitened.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let mut values = Vec::with_capacity(k);
    let mut vectors = DMatrix::zeros(n, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        values.push(eig.eigenvalues[idx]);
        for r in 0..n {
            vectors[(r, col)] = eig.eigenvectors[(r, idx)] * inv_sqrt_m[r];
        }
    }
    Ok(EigenPairs { values, vectors })
}

/// Shift-invert block subspace iteration for large meshes.
fn subspace_smallest(
    stiffness: &SparseSymmetricMatrix,
    mass: &[f64],
    k: usize,
) -> Result<EigenPairs> {
    let n = stiffness.dim();
    // Whitened diagonal average sets the spectral scale.
    let scale = (0..n)
        .map(|i| stiffness.get(i, i) / mass[i])
        .sum::<f64>()
        / n as f64;
    let sigma = -1e-6 * scale.max(1e-300);

    let factor = ShiftedFactor::new(stiffness, mass, sigma)?;

    // Buffer columns past k sharpen the shift-invert separation ratio
    // (roughly lambda_k / lambda_block under a linear spectral density).
    let block = (k + (k / 2).max(16)).min(n - 1);
    let mut rng = Rng::new(0x5eed_ba51);
    let mut x = DMatrix::from_fn(n, block, |_, _| rng.normal());
    m_orthonormalize(&mut x, mass)?;

    let max_rounds = 150;
    let tol = 1e-9 * scale.max(1.0);
    let mut values = vec![0.0; k];

    for round in 0..max_rounds {
        // Y = K^-1 M X
        let mut y = DMatrix::zeros(n, block);
        let mut rhs = vec![0.0; n];
        for c in 0..block {
            for r in 0..n {
                rhs[r] = mass[r] * x[(r, c)];
            }
            let sol = factor.solve(&rhs);
            for r in 0..n {
                y[(r, c)] = sol[r];
            }
        }
        m_orthonormalize(&mut y, mass)?;

        // Rayleigh-Ritz in the (L, M) pencil restricted to span(Y).
        let mut ly = DMatrix::zeros(n, block);
        let mut col_in = vec![0.0; n];
        let mut col_out = vec![0.0; n];
        for c in 0..block {
            for r in 0..n {
                col_in[r] = y[(r, c)];
            }
            stiffness.matvec_into(&col_in, &mut col_out);
            for r in 0..n {
                ly[(r, c)] = col_out[r];
            }
        }
        let reduced = {
            let a = y.transpose() * &ly;
            (&a + a.transpose()) * 0.5
        };
        let eig = reduced.symmetric_eigen();
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

        let rotation = {
            let mut s = DMatrix::zeros(block, block);
            for (new_col, &old_col) in order.iter().enumerate() {
                for r in 0..block {
                    s[(r, new_col)] = eig.eigenvectors[(r, old_col)];
                }
            }
            s
        };
        x = &y * &rotation;
        for (i, &idx) in order.iter().take(k).enumerate() {
            values[i] = eig.eigenvalues[idx];
        }

        // Residual check on the k requested pairs: ||L v - lambda M v||.
        let mut worst = 0.0_f64;
        let lx = &ly * &rotation;
        for c in 0..k {
            let mut res = 0.0;
            for r in 0..n {
                let d = lx[(r, c)] - values[c] * mass[r] * x[(r, c)];
                res += d * d;
            }
            worst = worst.max(res.sqrt());
        }
        if worst <= tol {
            let vectors = x.columns(0, k).into_owned();
            return Ok(EigenPairs { values, vectors });
        }
        if round == max_rounds - 1 {
            let achieved = (0..k)
                .take_while(|&c| {
                    let mut res = 0.0;
                    for r in 0..n {
                        let d = lx[(r, c)] - values[c] * mass[r] * x[(r, c)];
                        res += d * d;
                    }
                    res.sqrt() <= tol
                })
                .count();
            return Err(Error::EigensolverNonConvergence {
                requested: k,
                achieved,
            });
        }
    }
    unreachable!()
}

/// In-place M-orthonormalization via the Gram matrix Cholesky; falls back to
/// re-randomizing directions that collapse.
fn m_orthonormalize(x: &mut DMatrix<f64>, mass: &[f64]) -> Result<()> {
    let (n, cols) = x.shape();
    for attempt in 0..3 {
        let mut weighted = x.clone();
        for r in 0..n {
            let m = mass[r];
            for c in 0..cols {
                weighted[(r, c)] *= m;
            }
        }
        let gram = x.transpose() * &weighted;
        let gram = (&gram + gram.transpose()) * 0.5;
        match nalgebra::Cholesky::new(gram) {
            Some(chol) => {
                // X <- X R^-1 with G = R^T R.
                let r_inv = chol
                    .l()
                    .transpose()
                    .solve_upper_triangular(&DMatrix::identity(cols, cols))
                    .ok_or_else(|| Error::SingularSystem("orthonormalization failed".into()))?;
                *x *= r_inv;
                return Ok(());
            }
            None => {
                // Nearly dependent block: nudge and retry.
                let mut rng = Rng::new(0xdead_beef + attempt as u64);
                for v in x.iter_mut() {
                    *v += 1e-8 * rng.normal();
                }
            }
        }
    }
    Err(Error::SingularSystem(
        "subspace block collapsed during orthonormalization".into(),
    ))
}

/// Deterministic sign fix: the entry of largest magnitude in each column is
/// made positive.
pub fn fix_signs(vectors: &mut DMatrix<f64>) {
    let (n, cols) = vectors.shape();
    for c in 0..cols {
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for r in 0..n {
            let a = vectors[(r, c)].abs();
            if a > best_abs {
                best_abs = a;
                best = r;
            }
        }
        if vectors[(best, c)] < 0.0 {
            for r in 0..n {
                vectors[(r, c)] = -vectors[(r, c)];
            }
        }
    }
}

/// Cholesky factorization of L - sigma*M on a reverse-Cuthill-McKee
/// permutation, stored in skyline (envelope) form.
struct ShiftedFactor {
    perm: Vec<usize>,
    /// Column index where each row's envelope starts.
    first: Vec<usize>,
    /// Row-major envelope storage: row i holds columns first[i]..=i.
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl ShiftedFactor {
    fn new(stiffness: &SparseSymmetricMatrix, mass: &[f64], sigma: f64) -> Result<Self> {
        let n = stiffness.dim();
        let perm = reverse_cuthill_mckee(stiffness);
        let mut inv_perm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }

        // Envelope start per permuted row.
        let mut first: Vec<usize> = (0..n).collect();
        for old_row in 0..n {
            let i = inv_perm[old_row];
            let (cols, _) = stiffness.row(old_row);
            for &old_col in cols {
                let j = inv_perm[old_col];
                if j < i {
                    first[i] = first[i].min(j);
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0usize);
        for i in 0..n {
            offsets.push(offsets[i] + (i - first[i] + 1));
        }
        let mut data = vec![0.0; offsets[n]];

        // Scatter K = L - sigma*M into the envelope (lower triangle).
        for old_row in 0..n {
            let i = inv_perm[old_row];
            let (cols, vals) = stiffness.row(old_row);
            for (&old_col, &v) in cols.iter().zip(vals) {
                let j = inv_perm[old_col];
                if j <= i {
                    data[offsets[i] + (j - first[i])] += v;
                }
            }
            data[offsets[i] + (i - first[i])] -= sigma * mass[old_row];
        }

        // In-place skyline Cholesky.
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut sum = data[offsets[i] + (j - fi)];
                for t in lo..j {
                    sum -= data[offsets[i] + (t - fi)] * data[offsets[j] + (t - fj)];
                }
                let diag_j = data[offsets[j] + (j - fj)];
                data[offsets[i] + (j - fi)] = sum / diag_j;
            }
            let mut sum = data[offsets[i] + (i - fi)];
            for t in fi..i {
                let v = data[offsets[i] + (t - fi)];
                sum -= v * v;
            }
            if !(sum > 0.0) {
                return Err(Error::SingularSystem(format!(
                    "shifted stiffness lost positive definiteness at row {i}"
                )));
            }
            data[offsets[i] + (i - fi)] = sum.sqrt();
        }

        Ok(ShiftedFactor {
            perm,
            first,
            offsets,
            data,
        })
    }

    /// Solve K x = b.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = b[self.perm[i]];
        }
        // Forward: L y' = y.
        for i in 0..n {
            let fi = self.first[i];
            let base = self.offsets[i];
            let mut sum = y[i];
            for t in fi..i {
                sum -= self.data[base + (t - fi)] * y[t];
            }
            y[i] = sum / self.data[base + (i - fi)];
        }
        // Backward: L^T x' = y' (column sweep).
        for i in (0..n).rev() {
            let fi = self.first[i];
            let base = self.offsets[i];
            let xi = y[i] / self.data[base + (i - fi)];
            y[i] = xi;
            for t in fi..i {
                y[t] -= self.data[base + (t - fi)] * xi;
            }
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }
}

/// Reverse Cuthill-McKee ordering of the matrix adjacency. Keeps the
/// envelope of mesh Laplacians narrow so the skyline factor stays small.
fn reverse_cuthill_mckee(matrix: &SparseSymmetricMatrix) -> Vec<usize> {
    let n = matrix.dim();
    let degree: Vec<usize> = (0..n).map(|i| matrix.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    while order.len() < n {
        // Start each component from its minimum-degree vertex.
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        visited[start] = true;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = matrix
                .row(v)
                .0
                .iter()
                .copied()
                .filter(|&u| u != v && !visited[u])
                .collect();
            next.sort_unstable_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}
