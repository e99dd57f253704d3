//! Kernelized one-stage relaxations.
//!
//! Variables are laid out as `α` (one weight per `X`-point, `m''` of them),
//! then `λ` (`m'`), then for a general inner set the `m'` symmetric matrices
//! `D_i` in svec form.

use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::DMatrix;
#[allow(unused_imports)] // float math outside std
use num_traits::Float as _;

use super::objective::{BilinearObjective, Inner};
use crate::error::{bail, Result};
use crate::matalg::{cross_kernel, kernel_matrix, EmpiricalFeatures};
use crate::sdp::{LmiBlock, SdpProblem, Sense};
use crate::simpleset::SimpleSet;
use crate::sosmin::{outer, Polynomial};

/// A built relaxation with the data needed to interpret its solution.
#[derive(Debug, Clone)]
pub(crate) struct Relaxation {
    pub problem: SdpProblem,
    /// `φ̃` built on the first `m` X-points.
    pub features: EmpiricalFeatures,
    /// The `m''` X-points.
    pub points: Vec<Vec<f64>>,
    /// The `p'` Y-points (general inner set only).
    pub y_points: Vec<Vec<f64>>,
    /// `ψ̃` built on the first `p` Y-points (general inner set only).
    pub y_features: Option<EmpiricalFeatures>,
    pub alpha: Range<usize>,
    pub lambda: Range<usize>,
    /// Index of the `Φ₂ᵀ diag(α) Φ₂` block.
    pub moment_block: usize,
}

/// Finite inner set: `min Σ λ_i` subject to, for every `j`,
/// `Σ_k α_k g_j(x_k) φ̃_kφ̃_kᵀ ⪯ Σ_i λ_i φ̃_iφ̃_iᵀ`, with `Σ α = 1` and
/// `Φ₂ᵀ diag(α) Φ₂ ⪰ 0`. Block `j` carries `g_j`; the last block is the
/// moment block.
pub fn build_primal_dual_finite(set_x: &SimpleSet, g_list: &[Polynomial], pts: &[Vec<f64>]) -> Result<SdpProblem> {
    let obj = BilinearObjective::finite(set_x, g_list.to_vec())?;
    Ok(finite(&obj, pts)?.problem)
}

pub(crate) fn finite(obj: &BilinearObjective, pts: &[Vec<f64>]) -> Result<Relaxation> {
    let Inner::Finite(g_list) = obj.inner() else {
        bail!(Argument, "expected a finite inner set");
    };
    let set = obj.set_x();
    let (m, m1, m2) = set.dims();
    if pts.len() < m2 {
        bail!(Argument, "need {m2} points, got {}", pts.len());
    }
    let points = pts[..m2].to_vec();
    let features = EmpiricalFeatures::new(set, &points, m, 1)?;
    let phi = features.matrix(&points);
    let phi2 = EmpiricalFeatures::new(set, &points, m1, 2)?.matrix(&points);
    let table = obj.eval_table(&points, &[]);

    let (alpha, lambda) = (0..m2, m2..m2 + m1);
    let mut p = SdpProblem::new(m2 + m1, Sense::Minimize);
    for i in lambda.clone() {
        p.set_objective(i, 1.0)?;
    }
    let outers: Vec<DMatrix<f64>> = (0..m2).map(|k| outer(&phi, k)).collect();
    for j in 0..g_list.len() {
        let mut block = LmiBlock::new(m);
        for i in 0..m1 {
            block.add_term(lambda.start + i, outers[i].clone())?;
        }
        for k in 0..m2 {
            block.add_term(alpha.start + k, &outers[k] * -table[(k, j)])?;
        }
        p.add_block(block)?;
    }
    let moment_block = add_moment_constraints(&mut p, &phi2, alpha.clone())?;
    Ok(Relaxation {
        problem: p,
        features,
        points,
        y_points: Vec::new(),
        y_features: None,
        alpha,
        lambda,
        moment_block,
    })
}

/// General inner set: `min Σ λ_i` subject to
/// `ψ̃(y_j)ᵀ D_i ψ̃(y_j) − λ_i + [N diag(α) G]_{ij} = 0`,
/// `Σ_i D_i ⊗ φ̃_iφ̃_iᵀ ⪰ 0`, `Σ α = 1` and `Φ₂ᵀ diag(α) Φ₂ ⪰ 0`, where
/// `N = (K'∘K')⁻¹ (K''∘K'')` expresses every `φ(x_k)φ(x_k)ᵀ` in the basis
/// of the first `m'` ones and `G = [g(x_k, y_j)]`.
///
/// Block 0 is the matrix sum-of-squares block, block 1 the moment block.
pub fn build_primal_dual(
    set_x: &SimpleSet,
    set_y: &SimpleSet,
    g: &Polynomial,
    pts_x: &[Vec<f64>],
    pts_y: &[Vec<f64>],
) -> Result<SdpProblem> {
    let obj = BilinearObjective::general(set_x, set_y, g.clone())?;
    Ok(general(&obj, pts_x, pts_y)?.problem)
}

pub(crate) fn general(obj: &BilinearObjective, pts_x: &[Vec<f64>], pts_y: &[Vec<f64>]) -> Result<Relaxation> {
    let Inner::Set { set: set_y, .. } = obj.inner() else {
        bail!(Argument, "expected a general inner set");
    };
    let set = obj.set_x();
    let (m, m1, m2) = set.dims();
    let (py, py1, _) = set_y.dims();
    if pts_x.len() < m2 {
        bail!(Argument, "need {m2} X-points, got {}", pts_x.len());
    }
    if pts_y.len() < py1 {
        bail!(Dimension, "need {py1} Y-points to span the inner features, got {}", pts_y.len());
    }
    let points = pts_x[..m2].to_vec();
    let y_points = pts_y[..py1].to_vec();
    let features = EmpiricalFeatures::new(set, &points, m, 1)?;
    let phi = features.matrix(&points);
    let phi2 = EmpiricalFeatures::new(set, &points, m1, 2)?.matrix(&points);
    let y_features = EmpiricalFeatures::new(set_y, &y_points, py, 1)?;
    let psi = y_features.matrix(&y_points);
    // Fails with a conditioning error when the inner points do not span.
    EmpiricalFeatures::new(set_y, &y_points, py1, 2)?;
    let table = obj.eval_table(&points, &y_points);
    let n = basis_change(set, &points, m1)?;

    let nsv = py * (py + 1) / 2;
    let (alpha, lambda) = (0..m2, m2..m2 + m1);
    let d_start = lambda.end;
    let mut p = SdpProblem::new(d_start + m1 * nsv, Sense::Minimize);
    for i in lambda.clone() {
        p.set_objective(i, 1.0)?;
    }

    let svec = svec_basis(py);
    let mut big = LmiBlock::new(py * m);
    for i in 0..m1 {
        let oi = outer(&phi, i);
        for (e, (a, b, scale)) in svec.iter().enumerate() {
            let mut eab = DMatrix::zeros(py, py);
            eab[(*a, *b)] = *scale;
            eab[(*b, *a)] = *scale;
            big.add_term(d_start + i * nsv + e, eab.kronecker(&oi))?;
        }
    }

    // [N diag(α) G]_{ij} = Σ_k N_ik G_kj α_k.
    for i in 0..m1 {
        for j in 0..py1 {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(m2 + 1 + nsv);
            for (e, (a, b, scale)) in svec.iter().enumerate() {
                let c = if a == b { psi[(j, *a)] * psi[(j, *a)] } else { 2.0 * scale * psi[(j, *a)] * psi[(j, *b)] };
                row.push((d_start + i * nsv + e, c));
            }
            row.push((lambda.start + i, -1.0));
            for k in 0..m2 {
                row.push((alpha.start + k, n[(i, k)] * table[(k, j)]));
            }
            p.add_equality(row, 0.0)?;
        }
    }
    p.add_block(big)?;
    let moment_block = add_moment_constraints(&mut p, &phi2, alpha.clone())?;
    Ok(Relaxation {
        problem: p,
        features,
        points,
        y_points,
        y_features: Some(y_features),
        alpha,
        lambda,
        moment_block,
    })
}

/// `Σ α = 1` and `Φ₂ᵀ diag(α) Φ₂ ⪰ 0`; returns the block index and restricts
/// rank refinement to `α`.
fn add_moment_constraints(p: &mut SdpProblem, phi2: &DMatrix<f64>, alpha: Range<usize>) -> Result<usize> {
    let mut moment = LmiBlock::new(phi2.ncols());
    for (k, var) in alpha.clone().enumerate() {
        moment.add_term(var, outer(phi2, k))?;
    }
    let b = p.add_block(moment)?;
    p.add_equality(alpha.clone().map(|k| (k, 1.0)).collect(), 1.0)?;
    p.set_refine_vars(alpha)?;
    Ok(b)
}

/// `N = (K'∘K')⁻¹ (K''∘K'')` for the first `m1` of `points`.
pub(crate) fn basis_change(set: &SimpleSet, points: &[Vec<f64>], m1: usize) -> Result<DMatrix<f64>> {
    let k2 = kernel_matrix(set, &points[..m1], 2).into_matrix();
    let cross = cross_kernel(set, &points[..m1], points, 2);
    match k2.cholesky() {
        Some(c) => Ok(c.solve(&cross)),
        None => Err(crate::error::Error::Conditioning("squared kernel matrix is not positive definite".into())),
    }
}

/// Index pairs `(a, b)` with `a ≤ b` and the coefficient of the matching
/// svec basis matrix entry: 1 on the diagonal, `1/√2` off it.
pub(crate) fn svec_basis(n: usize) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for b in a..n {
            out.push((a, b, if a == b { 1.0 } else { core::f64::consts::FRAC_1_SQRT_2 }));
        }
    }
    out
}

/// Symmetric matrix from its svec coordinates.
pub(crate) fn smat(n: usize, v: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    for ((a, b, scale), x) in svec_basis(n).into_iter().zip(v) {
        out[(a, b)] += scale * x;
        if a != b {
            out[(b, a)] += scale * x;
        }
    }
    out
}
