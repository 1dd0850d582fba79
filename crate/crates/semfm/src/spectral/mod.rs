//! Truncated Laplace-Beltrami eigenbasis, spectral projection, heat diffusion.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{cotangent_laplacian, vertex_areas, TriangleMesh};

pub mod cache;
mod eigen;

pub use eigen::DENSE_LIMIT;

/// Standalone default basis size; the transfer pipeline sizes its own basis
/// from the refinement ceiling instead.
pub const DEFAULT_BASIS_K: usize = 50;

/// Truncated generalized eigenbasis of (stiffness, lumped mass).
///
/// Eigenvalues are nondecreasing with the first one numerically zero;
/// eigenfunctions (columns of `phi`) are M-orthonormal with a deterministic
/// sign convention (largest-magnitude entry positive).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    eigenvalues: Vec<f64>,
    phi: DMatrix<f64>,
    mass: Vec<f64>,
}

impl SpectralBasis {
    /// Compute the k algebraically smallest eigenpairs of (L, M).
    pub fn compute(mesh: &TriangleMesh, k: usize) -> Result<Self> {
        let stiffness = cotangent_laplacian(mesh);
        let mass = vertex_areas(mesh);
        let pairs = eigen::smallest_eigenpairs(&stiffness, &mass, k)?;
        Ok(SpectralBasis {
            eigenvalues: pairs.values,
            phi: pairs.vectors,
            mass,
        })
    }

    pub fn from_parts(eigenvalues: Vec<f64>, phi: DMatrix<f64>, mass: Vec<f64>) -> Result<Self> {
        if phi.ncols() != eigenvalues.len() || phi.nrows() != mass.len() {
            return Err(Error::InvalidArgument(
                "inconsistent basis dimensions".into(),
            ));
        }
        Ok(SpectralBasis {
            eigenvalues,
            phi,
            mass,
        })
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.phi.nrows()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn surface_area(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Spectral coefficients of per-vertex fields: Phi^T M fields.
    /// The result minimizes the M-weighted reconstruction error in span(Phi).
    pub fn project(&self, fields: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if fields.nrows() != self.vertex_count() {
            return Err(Error::InvalidArgument(format!(
                "field rows {} != vertex count {}",
                fields.nrows(),
                self.vertex_count()
            )));
        }
        let mut weighted = fields.clone();
        for r in 0..weighted.nrows() {
            let m = self.mass[r];
            for c in 0..weighted.ncols() {
                weighted[(r, c)] *= m;
            }
        }
        Ok(self.phi.transpose() * weighted)
    }

    pub fn project_column(&self, field: &[f64]) -> Result<Vec<f64>> {
        let m = DMatrix::from_column_slice(field.len(), 1, field);
        Ok(self.project(&m)?.column(0).iter().copied().collect())
    }

    /// Per-vertex fields from spectral coefficients: Phi * coeffs.
    pub fn reconstruct(&self, coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if coeffs.nrows() != self.k() {
            return Err(Error::InvalidArgument(format!(
                "coefficient rows {} != basis size {}",
                coeffs.nrows(),
                self.k()
            )));
        }
        Ok(&self.phi * coeffs)
    }

    pub fn reconstruct_column(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let m = DMatrix::from_column_slice(coeffs.len(), 1, coeffs);
        Ok(self.reconstruct(&m)?.column(0).iter().copied().collect())
    }

    /// Heat diffusion exp(-t * Laplacian) restricted to the resolved band:
    /// Phi diag(exp(-t lambda)) Phi^T M field.
    pub fn heat_diffuse(&self, field: &[f64], t: f64) -> Result<Vec<f64>> {
        let m = DMatrix::from_column_slice(field.len(), 1, field);
        Ok(self.heat_diffuse_matrix(&m, t)?.column(0).iter().copied().collect())
    }

    /// Column-wise heat diffusion.
    pub fn heat_diffuse_matrix(&self, fields: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "diffusion time must be nonnegative, got {t}"
            )));
        }
        let mut coeffs = self.project(fields)?;
        // Eigenvalues at round-off scale are zero modes: snapping them keeps
        // diffusion a contraction and preserves constants for any t.
        let zero_threshold = 1e-9 * self.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
        for (i, &lambda) in self.eigenvalues.iter().enumerate() {
            let lambda = if lambda <= zero_threshold { 0.0 } else { lambda };
            let factor = (-t * lambda).exp();
            for c in 0..coeffs.ncols() {
                coeffs[(i, c)] *= factor;
            }
        }
        self.reconstruct(&coeffs)
    }

    /// M-weighted inner product of two per-vertex fields.
    pub fn mass_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.mass)
            .map(|((x, y), m)| x * y * m)
            .sum()
    }

    /// M-weighted surface integral of a field.
    pub fn integral(&self, field: &[f64]) -> f64 {
        field.iter().zip(&self.mass).map(|(f, m)| f * m).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use crate::rng::Rng;

    fn band(values: &[f64], lo: f64, hi: f64) -> usize {
        values.iter().filter(|&&v| v > lo && v <= hi).count()
    }

    #[test]
    fn small_sphere_spectrum_bands() {
        // Unit sphere eigenvalues l(l+1): 0, then 2 (x3), 6 (x5).
        let m = primitives::icosphere(2, 1.0);
        let basis = SpectralBasis::compute(&m, 9).unwrap();
        let ev = basis.eigenvalues();
        assert!(ev[0].abs() <= 1e-6 * ev[1] + 1e-10);
        assert_eq!(band(ev, 2.0 * 0.95, 2.0 * 1.05), 3, "{ev:?}");
        assert_eq!(band(ev, 6.0 * 0.95, 6.0 * 1.05), 5, "{ev:?}");
    }

    #[test]
    fn square_grid_first_mode_is_pi_squared() {
        // Free boundary behaves as a Neumann problem: lambda_1 = pi^2.
        let m = primitives::unit_square_grid(14);
        let basis = SpectralBasis::compute(&m, 2).unwrap();
        let target = std::f64::consts::PI.powi(2);
        let rel = (basis.eigenvalues()[1] - target).abs() / target;
        assert!(rel < 0.10, "lambda_1 = {}", basis.eigenvalues()[1]);
    }

    #[test]
    fn single_mode_basis_is_constant() {
        let m = primitives::icosphere(1, 1.0);
        let basis = SpectralBasis::compute(&m, 1).unwrap();
        assert!(basis.eigenvalues()[0].abs() < 1e-8);
        let col = basis.eigenfunctions().column(0);
        let mean: f64 = col.iter().sum::<f64>() / col.len() as f64;
        for v in col.iter() {
            assert!((v - mean).abs() <= 1e-5 * mean.abs());
        }
    }

    #[test]
    fn basis_is_mass_orthonormal() {
        let m = primitives::icosphere(2, 1.0);
        let basis = SpectralBasis::compute(&m, 20).unwrap();
        let phi = basis.eigenfunctions();
        for i in 0..basis.k() {
            for j in 0..basis.k() {
                let a: Vec<f64> = phi.column(i).iter().copied().collect();
                let b: Vec<f64> = phi.column(j).iter().copied().collect();
                let dot = basis.mass_inner(&a, &b);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-6, "({i},{j}) = {dot}");
            }
        }
    }

    #[test]
    fn eigenvalues_nondecreasing_and_nonnegative() {
        let m = primitives::unit_square_grid(10);
        let basis = SpectralBasis::compute(&m, 15).unwrap();
        let ev = basis.eigenvalues();
        for w in ev.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(ev.iter().all(|&v| v >= -1e-8));
    }

    #[test]
    fn project_eigenfunction_gives_unit_vector() {
        let m = primitives::icosphere(1, 1.0);
        let basis = SpectralBasis::compute(&m, 8).unwrap();
        let j = 5;
        let col: Vec<f64> = basis.eigenfunctions().column(j).iter().copied().collect();
        let coeffs = basis.project_column(&col).unwrap();
        for (i, &c) in coeffs.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((c - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn project_constant_hits_only_mode_zero() {
        let m = primitives::icosphere(1, 1.0);
        let basis = SpectralBasis::compute(&m, 6).unwrap();
        let c = 2.5;
        let field = vec![c; basis.vertex_count()];
        let coeffs = basis.project_column(&field).unwrap();
        let expected = c * basis.surface_area().sqrt();
        assert!((coeffs[0].abs() - expected).abs() < 1e-6 * expected);
        for &v in &coeffs[1..] {
            assert!(v.abs() < 1e-6 * expected);
        }
    }

    #[test]
    fn project_zero_field_is_zero() {
        let m = primitives::tetrahedron(1.0);
        let basis = SpectralBasis::compute(&m, 3).unwrap();
        let coeffs = basis.project_column(&vec![0.0; 4]).unwrap();
        assert!(coeffs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reconstruct_unit_vector_gives_eigenfunction() {
        let m = primitives::icosphere(1, 1.0);
        let basis = SpectralBasis::compute(&m, 5).unwrap();
        let mut e = vec![0.0; 5];
        e[3] = 1.0;
        let field = basis.reconstruct_column(&e).unwrap();
        for (a, b) in field.iter().zip(basis.eigenfunctions().column(3).iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent_on_band_limited_fields() {
        let m = primitives::icosphere(1, 1.0);
        let basis = SpectralBasis::compute(&m, 10).unwrap();
        let mut rng = Rng::new(4);
        let coeffs: Vec<f64> = (0..10).map(|_| rng.normal()).collect();
        let field = basis.reconstruct_column(&coeffs).unwrap();
        let again = basis.project_column(&field).unwrap();
        for (a, b) in coeffs.iter().zip(&again) {
            assert!((a - b).abs() < 1e-8);
        }
        let round_trip = basis.reconstruct_column(&again).unwrap();
        for (a, b) in field.iter().zip(&round_trip) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn white_noise_round_trip_matches_dense_projector_and_loses_energy() {
        // Oracle: M-orthogonal projector built by dense least squares on the
        // mass-weighted eigenfunction matrix (QR path, independent of the
        // orthonormality shortcut used by project()).
        let m = primitives::icosphere(2, 1.0); // 162 vertices
        let basis = SpectralBasis::compute(&m, 12).unwrap();
        let n = basis.vertex_count();
        let mut rng = Rng::new(123);
        let noise: Vec<f64> = (0..n).map(|_| rng.normal()).collect();

        let sqrt_m: Vec<f64> = basis.mass().iter().map(|&v| v.sqrt()).collect();
        let mut a = basis.eigenfunctions().clone();
        for r in 0..n {
            for c in 0..a.ncols() {
                a[(r, c)] *= sqrt_m[r];
            }
        }
        let b = nalgebra::DVector::from_iterator(n, noise.iter().zip(&sqrt_m).map(|(x, s)| x * s));
        let coeffs_oracle = a
            .clone()
            .svd(true, true)
            .solve(&b, 1e-12)
            .expect("least squares");

        let recon = basis
            .reconstruct_column(basis.project_column(&noise).unwrap().as_slice())
            .unwrap();
        let oracle_recon = basis.reconstruct_column(coeffs_oracle.as_slice()).unwrap();
        for (x, y) in recon.iter().zip(&oracle_recon) {
            assert!((x - y).abs() < 1e-8);
        }

        let diff: Vec<f64> = recon.iter().zip(&noise).map(|(a, b)| a - b).collect();
        let residual = basis.mass_inner(&diff, &diff).sqrt();
        assert!(residual > 1e-3, "white noise must lose energy, residual {residual}");
    }

    #[test]
    fn heat_zero_time_is_projection() {
        let m = primitives::icosphere(1, 1.0);
        let basis = SpectralBasis::compute(&m, 8).unwrap();
        let mut rng = Rng::new(9);
        let field: Vec<f64> = (0..basis.vertex_count()).map(|_| rng.normal()).collect();
        let diffused = basis.heat_diffuse(&field, 0.0).unwrap();
        let projected = basis
            .reconstruct_column(basis.project_column(&field).unwrap().as_slice())
            .unwrap();
        for (a, b) in diffused.iter().zip(&projected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn heat_long_time_is_area_weighted_mean() {
        let m = primitives::icosphere(1, 1.0);
        let basis = SpectralBasis::compute(&m, 8).unwrap();
        let mut rng = Rng::new(10);
        let field: Vec<f64> = (0..basis.vertex_count()).map(|_| rng.uniform()).collect();
        let mean = basis.integral(&field) / basis.surface_area();
        let diffused = basis.heat_diffuse(&field, 1e9).unwrap();
        for v in diffused {
            assert!((v - mean).abs() < 1e-8, "{v} vs {mean}");
        }
    }

    #[test]
    fn heat_preserves_integral_and_contracts() {
        let m = primitives::icosphere(2, 1.0);
        let basis = SpectralBasis::compute(&m, 15).unwrap();
        let mut rng = Rng::new(11);
        let field: Vec<f64> = (0..basis.vertex_count()).map(|_| rng.normal()).collect();
        let projected = basis
            .reconstruct_column(basis.project_column(&field).unwrap().as_slice())
            .unwrap();
        let t = m.mean_edge_length().powi(2) * 10.0;
        let diffused = basis.heat_diffuse(&field, t).unwrap();

        let rel = (basis.integral(&diffused) - basis.integral(&projected)).abs()
            / basis.integral(&projected).abs().max(1e-30);
        assert!(rel < 1e-6);

        let norm_in = basis.mass_inner(&projected, &projected).sqrt();
        let norm_out = basis.mass_inner(&diffused, &diffused).sqrt();
        assert!(norm_out <= norm_in + 1e-10);
    }

    #[test]
    fn heat_semigroup_property() {
        let m = primitives::icosphere(1, 1.0);
        let basis = SpectralBasis::compute(&m, 10).unwrap();
        let mut rng = Rng::new(12);
        let coeffs: Vec<f64> = (0..10).map(|_| rng.normal()).collect();
        let field = basis.reconstruct_column(&coeffs).unwrap();
        let (t1, t2) = (0.05, 0.13);
        let two_step = basis
            .heat_diffuse(&basis.heat_diffuse(&field, t1).unwrap(), t2)
            .unwrap();
        let one_step = basis.heat_diffuse(&field, t1 + t2).unwrap();
        for (a, b) in two_step.iter().zip(&one_step) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn negative_time_rejected() {
        let m = primitives::tetrahedron(1.0);
        let basis = SpectralBasis::compute(&m, 3).unwrap();
        assert!(basis.heat_diffuse(&vec![1.0; 4], -0.1).is_err());
    }

    #[test]
    fn compute_is_deterministic() {
        let m = primitives::icosphere(2, 1.0);
        let a = SpectralBasis::compute(&m, 10).unwrap();
        let b = SpectralBasis::compute(&m, 10).unwrap();
        assert_eq!(a.eigenvalues(), b.eigenvalues());
        assert_eq!(a.eigenfunctions(), b.eigenfunctions());
    }

    #[test]
    fn dimension_mismatch_errors() {
        let m = primitives::tetrahedron(1.0);
        let basis = SpectralBasis::compute(&m, 3).unwrap();
        assert!(basis.project_column(&vec![0.0; 5]).is_err());
        assert!(basis.reconstruct_column(&vec![0.0; 4]).is_err());
    }
}
