//! Two-stage baseline: fit the polynomial `a(x) ≥ g(x, y)` with the smallest
//! `μ`-expectation, then minimize `a`.
//!
//! Stage one is solved in its moment form
//!
//! ```text
//! max Σ_ij α_ij g(x_i, y_j)   s.t.   Σ_j α_ij = μ_i,   Σ_ij α_ij φ̃_iφ̃_iᵀ ⊗ ψ̃_jψ̃_jᵀ ⪰ 0
//! ```
//!
//! and `a(x_i)` is read off the multiplier of the row-sum constraint `i`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math outside std
use num_traits::Float as _;

use super::objective::{BilinearObjective, Inner};
use crate::error::{bail, Error, Result};
use crate::matalg::{kernel_matrix, EmpiricalFeatures};
use crate::sdp::{solve, LmiBlock, SdpProblem, SdpSolution, Sense, SolveOptions};
use crate::simpleset::SimpleSet;
use crate::sosmin::{outer, solve_min_values, MinResult};

#[derive(Debug, Clone)]
pub struct TwoStageResult {
    /// `a(x_i)` on the `m'` points.
    pub upper_values: Vec<f64>,
    /// `Σ_i μ_i a(x_i)`.
    pub stage1_value: f64,
    /// Minimum of `a` found by the second stage.
    pub value: f64,
    pub x_star: Vec<f64>,
    /// `a(x_star) − value`, zero when the second stage is exact.
    pub certificate_gap: f64,
    pub mu: Vec<f64>,
    /// The `m'` points.
    pub points: Vec<Vec<f64>>,
    pub stage1: SdpSolution,
    pub stage2: MinResult,
    set: SimpleSet,
    /// `c` with `a(x) = Σ_i c_i k(x_i, x)²`.
    coef: DVector<f64>,
}

impl TwoStageResult {
    /// `a(x)` anywhere on the set.
    pub fn upper_bound(&self, x: &[f64]) -> f64 {
        self.points.iter().zip(self.coef.iter()).map(|(p, c)| c * self.set.kernel_unchecked(p, x).powi(2)).sum()
    }
}

/// Weights `μ` on the first `m'` points with `Σ_i μ_i φ̃_iφ̃_iᵀ` the
/// projection of `I/m`, i.e. `(K'∘K') μ = 1/m`.
pub fn uniform_weights(set: &SimpleSet, pts: &[Vec<f64>]) -> Result<Vec<f64>> {
    let (m, m1, _) = set.dims();
    if pts.len() < m1 {
        bail!(Argument, "need {m1} points, got {}", pts.len());
    }
    let k2 = kernel_matrix(set, &pts[..m1], 2).into_matrix();
    let rhs = DVector::from_element(m1, 1.0 / m as f64);
    let sol = k2.lu().solve(&rhs).ok_or_else(|| Error::Conditioning("squared kernel matrix is singular".into()))?;
    Ok(sol.iter().copied().collect())
}

/// Runs both stages with weights `mu` on the first `m'` of `pts`.
pub fn two_stage(obj: &BilinearObjective, pts: &[Vec<f64>], mu: &[f64], seed: u64) -> Result<TwoStageResult> {
    obj.check_representable()?;
    let set = obj.set_x();
    let (m, m1, _) = set.dims();
    if pts.len() < m1 || mu.len() != m1 {
        bail!(Dimension, "need {m1} points and weights, got {} and {}", pts.len(), mu.len());
    }
    let points = pts[..m1].to_vec();
    let phi = EmpiricalFeatures::new(set, &points, m, 1)?.matrix(&points);
    EmpiricalFeatures::new(set, &points, m1, 2)?;

    let p = stage_one(obj, &points, &phi, mu, seed)?;
    let sol = solve(&p, &SolveOptions::default())?;
    if !sol.is_optimal() {
        bail!(Solver, "first stage ended with status {:?}", sol.status);
    }
    // Duals are reported for the minimization of −cᵀx, hence the sign.
    let upper: Vec<f64> = sol.y.iter().map(|v| -v).collect();
    let stage2 = solve_min_values(set, &points, &upper, seed)?;
    if !stage2.solution.is_optimal() {
        bail!(Solver, "second stage ended with status {:?}", stage2.status);
    }
    let k2 = kernel_matrix(set, &points, 2).into_matrix();
    let coef = k2
        .lu()
        .solve(&DVector::from_vec(upper.clone()))
        .ok_or_else(|| Error::Conditioning("squared kernel matrix is singular".into()))?;
    let mut out = TwoStageResult {
        upper_values: upper,
        stage1_value: sol.objective,
        value: stage2.value,
        x_star: stage2.x_star.clone(),
        certificate_gap: 0.0,
        mu: mu.to_vec(),
        points,
        stage1: sol,
        stage2,
        set: set.clone(),
        coef,
    };
    out.certificate_gap = out.upper_bound(&out.x_star) - out.value;
    Ok(out)
}

/// First-stage problem on the first `m'` of `pts`.
pub fn stage_one_problem(obj: &BilinearObjective, pts: &[Vec<f64>], mu: &[f64], seed: u64) -> Result<SdpProblem> {
    let set = obj.set_x();
    let (m, m1, _) = set.dims();
    let points = pts[..m1].to_vec();
    let phi = EmpiricalFeatures::new(set, &points, m, 1)?.matrix(&points);
    stage_one(obj, &points, &phi, mu, seed)
}

fn stage_one(obj: &BilinearObjective, points: &[Vec<f64>], phi: &DMatrix<f64>, mu: &[f64], seed: u64) -> Result<SdpProblem> {
    match obj.inner() {
        Inner::Finite(_) => stage_one_finite(obj, points, phi, mu),
        Inner::Set { set: set_y, .. } => {
            let (_, py1, _) = set_y.dims();
            let ys = set_y.sample_points(py1, seed)?;
            stage_one_general(obj, points, phi, ys.points(), mu)
        }
    }
}

fn stage_one_finite(obj: &BilinearObjective, points: &[Vec<f64>], phi: &DMatrix<f64>, mu: &[f64]) -> Result<SdpProblem> {
    let table = obj.eval_table(points, &[]);
    let (m1, np) = (points.len(), table.ncols());
    let mut p = SdpProblem::new(m1 * np, Sense::Maximize);
    for i in 0..m1 {
        for j in 0..np {
            p.set_objective(i * np + j, table[(i, j)])?;
        }
        p.add_equality((0..np).map(|j| (i * np + j, 1.0)).collect(), mu[i])?;
    }
    for j in 0..np {
        let mut block = LmiBlock::new(phi.ncols());
        for i in 0..m1 {
            block.add_term(i * np + j, outer(phi, i))?;
        }
        p.add_block(block)?;
    }
    Ok(p)
}

fn stage_one_general(
    obj: &BilinearObjective,
    points: &[Vec<f64>],
    phi: &DMatrix<f64>,
    ys: &[Vec<f64>],
    mu: &[f64],
) -> Result<SdpProblem> {
    let Some(set_y) = obj.set_y() else { unreachable!() };
    let (py, _, _) = set_y.dims();
    let psi = EmpiricalFeatures::new(set_y, ys, py, 1)?.matrix(ys);
    EmpiricalFeatures::new(set_y, ys, ys.len(), 2)?;
    let table = obj.eval_table(points, ys);
    let (m1, np) = (points.len(), ys.len());
    let mut p = SdpProblem::new(m1 * np, Sense::Maximize);
    let mut block = LmiBlock::new(py * phi.ncols());
    for i in 0..m1 {
        let oi = outer(phi, i);
        for j in 0..np {
            p.set_objective(i * np + j, table[(i, j)])?;
            block.add_term(i * np + j, outer(&psi, j).kronecker(&oi))?;
        }
        p.add_equality((0..np).map(|j| (i * np + j, 1.0)).collect(), mu[i])?;
    }
    p.add_block(block)?;
    Ok(p)
}

pub const ALTERNATE_MIX: f64 = 1e-3;

/// Per-iteration record of [`alternate_two_stage`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlternateTrace {
    /// First-stage objective `Σ_i μ_i a(x_i)` of every iteration.
    pub values: Vec<f64>,
    /// Minimum of `a` found by every second stage.
    pub stage2_values: Vec<f64>,
    pub x_star: Vec<Vec<f64>>,
}

/// Alternates the two stages, replacing `μ` by the weights of the previous
/// second-stage solution.
pub fn alternate_two_stage(
    obj: &BilinearObjective,
    pts: &[Vec<f64>],
    mu0: &[f64],
    iters: usize,
    seed: u64,
) -> Result<AlternateTrace> {
    alternate_two_stage_mix(obj, pts, mu0, iters, seed, ALTERNATE_MIX)
}

pub fn alternate_two_stage_mix(
    obj: &BilinearObjective,
    pts: &[Vec<f64>],
    mu0: &[f64],
    iters: usize,
    seed: u64,
    mix: f64,
) -> Result<AlternateTrace> {
    if iters == 0 {
        bail!(Argument, "at least one iteration is required");
    }
    let mut trace = AlternateTrace { values: vec![], stage2_values: vec![], x_star: vec![] };
    let mut mu = mu0.to_vec();
    for _ in 0..iters {
        let r = two_stage(obj, pts, &mu, seed)?;
        trace.values.push(r.stage1_value);
        trace.stage2_values.push(r.value);
        trace.x_star.push(r.x_star.clone());
        mu = r.stage2.alpha.iter().zip(mu0).map(|(a, u)| (1.0 - mix) * a + mix * u).collect();
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sosmin::{Polynomial, TrigTerm};

    #[test]
    fn constant_upper_bound() {
        let t = SimpleSet::trig(1, 2).unwrap();
        let obj = BilinearObjective::finite(&t, vec![Polynomial::constant(&t, 1.5)]).unwrap();
        let pts = t.sample_points(t.dims().1, 0).unwrap();
        let mu = uniform_weights(&t, pts.points()).unwrap();
        assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let r = two_stage(&obj, pts.points(), &mu, 0).unwrap();
        assert!((r.value - 1.5).abs() < 1e-7);
        assert!(r.upper_values.iter().all(|a| (a - 1.5).abs() < 1e-6));
        assert!((r.upper_bound(&[0.123]) - 1.5).abs() < 1e-6);
    }

    #[test]
    fn upper_bound_dominates() {
        let t = SimpleSet::trig(1, 2).unwrap();
        let g = vec![
            Polynomial::trig(&t, vec![TrigTerm { freq: vec![1], cos: 1.0, sin: 0.0 }]).unwrap(),
            Polynomial::trig(&t, vec![TrigTerm { freq: vec![1], cos: 0.0, sin: 1.0 }]).unwrap(),
        ];
        let obj = BilinearObjective::finite(&t, g.clone()).unwrap();
        let pts = t.sample_points(t.dims().1, 0).unwrap();
        let mu = uniform_weights(&t, pts.points()).unwrap();
        let r = two_stage(&obj, pts.points(), &mu, 0).unwrap();
        for k in 0..200 {
            let x = [k as f64 / 200.0];
            let m = g.iter().map(|g| g.evaluate(&x).unwrap()).fold(f64::MIN, f64::max);
            assert!(r.upper_bound(&x) >= m - 1e-7);
        }
        assert!(r.value >= -core::f64::consts::FRAC_1_SQRT_2 - 1e-7);
    }
}
