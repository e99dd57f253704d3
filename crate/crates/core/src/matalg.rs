//! Dense symmetric linear algebra shared by the kernels, the solver and the
//! relaxation builders.
//!
//! Eigendecompositions go through Householder tridiagonalization followed by
//! implicit symmetric QR; eigenvalues are always returned in ascending order
//! so that downstream code is reproducible run to run.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math outside std
use num_traits::Float as _;

use crate::error::{bail, Error, Result};
use crate::simpleset::{PointSet, SimpleSet};

/// Default relative threshold below which eigenvalues count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative asymmetry tolerated by [`SymMatrix::new`] before it refuses the input.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A dense real symmetric matrix.
///
/// Construction checks that the input is symmetric up to [`SYMMETRY_TOL`]
/// relative to its Frobenius norm and then symmetrizes it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            bail!(Dimension, "expected a square matrix, got {}x{}", m.nrows(), m.ncols());
        }
        let scale = m.norm();
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..i {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if worst > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) && worst > 0.0 {
            bail!(Argument, "matrix is not symmetric (max asymmetry {worst:e})");
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes `m` without checking how asymmetric it was.
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn eigen(&self) -> Eigen {
        sym_eigen(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.order() == 0 {
            return 0.0;
        }
        self.eigen().values[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        let n = self.order();
        if n == 0 {
            return 0.0;
        }
        self.eigen().values[n - 1]
    }
}

impl core::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> Eigen {
    let n = m.nrows();
    if n == 0 {
        return Eigen { values: DVector::zeros(0), vectors: DMatrix::zeros(0, 0) };
    }
    let e = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]).then(a.cmp(&b)));
    let values = DVector::from_iterator(n, order.iter().map(|&k| e.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &e.eigenvectors.column(src));
    }
    Eigen { values, vectors }
}

/// Singular value decomposition `M = U diag(σ) Vᵀ` of a square matrix by
/// one-sided Jacobi rotations, which keeps small singular values accurate to
/// high relative precision. Singular values are not sorted. Columns of `U`
/// belonging to a zero singular value are left at zero.
pub fn svd_jacobi(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    const MAX_SWEEPS: usize = 60;
    let n = m.ncols();
    let mut a = m.clone();
    let mut v = DMatrix::identity(n, n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = DVector::from_iterator(n, (0..n).map(|j| a.column(j).norm()));
    for j in 0..n {
        if sigma[j] > 0.0 {
            a.column_mut(j).scale_mut(1.0 / sigma[j]);
        }
    }
    (a, sigma, v)
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (x, y) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * x - s * y;
        m[(i, q)] = s * x + c * y;
    }
}

/// Moore-Penrose inverse square root of a PSD matrix.
///
/// Eigenvalues below `rank_tol * lambda_max` are treated as zero, so that
/// `X K X` is the orthogonal projector onto the range of `K`.
pub fn inv_sqrt(k: &SymMatrix, rank_tol: f64) -> Result<SymMatrix> {
    let n = k.order();
    if n == 0 {
        return Ok(SymMatrix::zeros(0));
    }
    let e = k.eigen();
    let lmax = e.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if e.values[0] < -1e-8 * lmax {
        return Err(Error::NotPsd { min_eigenvalue: e.values[0] });
    }
    let cut = rank_tol * lmax;
    let scaled = DVector::from_iterator(
        n,
        e.values.iter().map(|&l| if l > cut { 1.0 / l.sqrt() } else { 0.0 }),
    );
    let mut vs = e.vectors.clone();
    for (j, s) in scaled.iter().enumerate() {
        vs.column_mut(j).scale_mut(*s);
    }
    Ok(SymMatrix::symmetrized(&vs * e.vectors.transpose()))
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &SymMatrix, b: &SymMatrix) -> SymMatrix {
    SymMatrix::symmetrized(a.0.kronecker(&b.0))
}

/// Entrywise (Schur) product.
pub fn hadamard(a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    if a.order() != b.order() {
        bail!(Dimension, "hadamard of orders {} and {}", a.order(), b.order());
    }
    Ok(SymMatrix(a.0.component_mul(&b.0)))
}

/// `min eig(A) >= -tol * max(1, lambda_max)`.
pub fn is_psd(a: &SymMatrix, tol: f64) -> bool {
    if a.order() == 0 {
        return true;
    }
    let e = a.eigen();
    let lmax = e.values[a.order() - 1];
    e.values[0] >= -tol * lmax.max(1.0)
}

/// Number of eigenvalues above `rel_tol` times the largest one in magnitude.
pub fn numerical_rank(a: &SymMatrix, rel_tol: f64) -> usize {
    let e = a.eigen();
    let lmax = e.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if lmax == 0.0 {
        return 0;
    }
    e.values.iter().filter(|&&v| v > rel_tol * lmax).count()
}

/// Gram matrix `[kernel(x_i, x_j)^power]` of a point list.
pub fn kernel_matrix(set: &SimpleSet, pts: &[Vec<f64>], power: i32) -> SymMatrix {
    SymMatrix::from_fn(pts.len(), |i, j| set.kernel_unchecked(&pts[i], &pts[j]).powi(power))
}

/// Cross kernel matrix `[kernel(a_i, b_j)^power]`.
pub fn cross_kernel(set: &SimpleSet, a: &[Vec<f64>], b: &[Vec<f64>], power: i32) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| set.kernel_unchecked(&a[i], &b[j]).powi(power))
}

/// Empirical feature map `x -> K^{-1/2} (k(x_i, x)^power)_i` built on a
/// fixed list of basis points.
///
/// With `power = 1` this realizes the feature map of the set; with `power = 2`
/// it realizes features of `vec(φ(x)φ(x)ᵀ)`, whose inner products are `k²`.
#[derive(Debug, Clone)]
pub struct EmpiricalFeatures {
    set: SimpleSet,
    power: i32,
    basis: Vec<Vec<f64>>,
    whitening: SymMatrix,
}

impl EmpiricalFeatures {
    /// Builds the map from the first `count` points of `pts`.
    pub fn new(set: &SimpleSet, pts: &[Vec<f64>], count: usize, power: i32) -> Result<Self> {
        if pts.len() < count {
            bail!(Argument, "need {count} basis points, got {}", pts.len());
        }
        let basis: Vec<Vec<f64>> = pts[..count].to_vec();
        let k = kernel_matrix(set, &basis, power);
        let e = k.eigen();
        let lmax = e.values[count - 1];
        if e.values[0] <= DEFAULT_RANK_TOL * lmax {
            return Err(Error::Conditioning(format!(
                "leading kernel matrix (order {count}, power {power}) has min eigenvalue {:e} relative to {:e}",
                e.values[0], lmax
            )));
        }
        let whitening = inv_sqrt(&k, DEFAULT_RANK_TOL)?;
        Ok(Self { set: set.clone(), power, basis, whitening })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn set(&self) -> &SimpleSet {
        &self.set
    }

    pub fn whitening(&self) -> &SymMatrix {
        &self.whitening
    }

    pub fn features(&self, x: &[f64]) -> DVector<f64> {
        let kx = DVector::from_iterator(
            self.basis.len(),
            self.basis.iter().map(|b| self.set.kernel_unchecked(b, x).powi(self.power)),
        );
        self.whitening.as_matrix() * kx
    }

    /// Rows are the features of `pts`.
    pub fn matrix(&self, pts: &[Vec<f64>]) -> DMatrix<f64> {
        let l = cross_kernel(&self.set, pts, &self.basis, self.power);
        l * self.whitening.as_matrix()
    }
}

/// Empirical feature matrix `Φ = L K^{-1/2}` of all points of `pts`, using
/// the first `m` points as the basis.
pub fn empirical_features(set: &SimpleSet, pts: &PointSet) -> Result<DMatrix<f64>> {
    let (m, _, _) = set.dims();
    let map = EmpiricalFeatures::new(set, pts.points(), m, 1)?;
    Ok(map.matrix(pts.points()))
}

/// `Φᵀ diag(w) Φ`.
pub fn weighted_gram(phi: &DMatrix<f64>, w: &[f64]) -> SymMatrix {
    let mut scaled = phi.clone();
    for (i, wi) in w.iter().enumerate() {
        scaled.row_mut(i).scale_mut(*wi);
    }
    SymMatrix::symmetrized(phi.transpose() * scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::symmetrized(&b * b.transpose() + DMatrix::identity(n, n) * 0.1)
    }

    #[test]
    fn inv_sqrt_of_identity_and_diagonal() {
        let x = inv_sqrt(&SymMatrix::identity(3), DEFAULT_RANK_TOL).unwrap();
        assert!((x.as_matrix() - DMatrix::identity(3, 3)).norm() < 1e-14);
        let x = inv_sqrt(&SymMatrix::from_diagonal(&[4.0, 9.0]), DEFAULT_RANK_TOL).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((x[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert!(x[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn inv_sqrt_whitens_random_spd() {
        for seed in 0..5 {
            let a = random_spd(6, seed);
            let x = inv_sqrt(&a, DEFAULT_RANK_TOL).unwrap();
            let p = x.as_matrix() * a.as_matrix() * x.as_matrix();
            assert!((p - DMatrix::identity(6, 6)).amax() < 1e-10);
        }
    }

    #[test]
    fn inv_sqrt_of_singular_matrix_is_projector() {
        let v = DVector::from_vec(alloc::vec![1.0, 2.0, -1.0]);
        let a = SymMatrix::symmetrized(&v * v.transpose());
        let x = inv_sqrt(&a, DEFAULT_RANK_TOL).unwrap();
        let p = x.as_matrix() * a.as_matrix() * x.as_matrix();
        let proj = &v * v.transpose() / v.norm_squared();
        assert!((p - proj).amax() < 1e-9);
    }

    #[test]
    fn inv_sqrt_rejects_indefinite() {
        let a = SymMatrix::from_diagonal(&[1.0, -0.5]);
        assert!(matches!(inv_sqrt(&a, DEFAULT_RANK_TOL), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn kron_and_hadamard_basics() {
        let k = kron(&SymMatrix::identity(2), &SymMatrix::from_diagonal(&[1.0, 2.0]));
        assert_eq!(k, SymMatrix::from_diagonal(&[1.0, 2.0, 1.0, 2.0]));
        let a = random_spd(2, 9);
        let ones = SymMatrix::from_fn(2, |_, _| 1.0);
        assert_eq!(hadamard(&ones, &a).unwrap(), a);
        assert!(hadamard(&ones, &SymMatrix::identity(3)).is_err());
    }

    #[test]
    fn psd_test_uses_relative_tolerance() {
        assert!(!is_psd(&SymMatrix::from_diagonal(&[1.0, -1e-3]), 1e-9));
        assert!(is_psd(&SymMatrix::from_diagonal(&[1.0, -1e-12]), 1e-9));
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(SymMatrix::new(m).is_err());
        let m = DMatrix::from_row_slice(2, 3, &[1.0; 6]);
        assert!(matches!(SymMatrix::new(m), Err(Error::Dimension(_))));
    }

    #[test]
    fn eigenvalues_are_ascending() {
        let a = random_spd(7, 3);
        let e = a.eigen();
        for k in 1..7 {
            assert!(e.values[k - 1] <= e.values[k]);
        }
        let recon = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
        assert!((recon - a.as_matrix()).amax() < 1e-12);
    }

    #[test]
    fn jacobi_svd_reconstructs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 7, 45, 80] {
            let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let (u, s, v) = svd_jacobi(&m);
            let recon = &u * DMatrix::from_diagonal(&s) * v.transpose();
            assert!((recon - &m).amax() < 1e-12 * n as f64, "order {n}");
            let eye = DMatrix::<f64>::identity(n, n);
            assert!((u.transpose() * &u - &eye).amax() < 1e-12);
            assert!((v.transpose() * &v - &eye).amax() < 1e-12);
        }
    }

    #[test]
    fn jacobi_svd_keeps_small_singular_values() {
        // Graded diagonal times an orthogonal rotation: singular values are
        // the diagonal entries, spanning 24 orders of magnitude.
        let d = DVector::from_vec(alloc::vec![1.0, 1e-8, 1e-16, 1e-24]);
        let (c, s) = (0.6, 0.8);
        let mut q = DMatrix::<f64>::identity(4, 4);
        q[(0, 0)] = c;
        q[(0, 3)] = -s;
        q[(3, 0)] = s;
        q[(3, 3)] = c;
        let m = DMatrix::from_diagonal(&d) * &q;
        let (_, sv, _) = svd_jacobi(&m);
        let mut got: Vec<f64> = sv.iter().copied().collect();
        got.sort_by(|a, b| b.total_cmp(a));
        for (g, e) in got.iter().zip(d.iter()) {
            assert!(((g - e) / e).abs() < 1e-12, "{g} vs {e}");
        }
    }
}
