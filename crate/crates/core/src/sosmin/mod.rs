//! Kernelized sum-of-squares minimization of one function over a simple set.
//!
//! With `m'` well-positioned points `x_i` and empirical features `φ̃`, the
//! relaxation is
//!
//! ```text
//! min_α Σ_i α_i f(x_i)   s.t.   Σ_i α_i = 1,   Σ_i α_i φ̃(x_i)φ̃(x_i)ᵀ ⪰ 0
//! ```
//!
//! which only touches `f` through its values at the points.

mod polynomial;

use alloc::vec::Vec;

use nalgebra::DMatrix;

pub use polynomial::{Basis, MonoTerm, Oracle, Polynomial, TrigTerm};

use crate::error::{bail, Result};
use crate::matalg::{numerical_rank, EmpiricalFeatures, SymMatrix};
use crate::sdp::{refine_rank_one, solve, LmiBlock, SdpProblem, SdpSolution, Sense, SolveOptions, Status};
use crate::simpleset::{PointSet, SimpleSet};

/// Eigenvalues below this fraction of the largest do not count towards the
/// moment rank.
pub const MOMENT_RANK_TOL: f64 = 1e-6;

/// Relative duality gap of the solve that produces `value`. Tighter than the
/// solver default so that values at different hierarchy levels or for shifted
/// data compare to about 1e-9.
pub const VALUE_GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct MinResult {
    pub value: f64,
    /// Weights on the evaluation points.
    pub alpha: Vec<f64>,
    pub x_star: Vec<f64>,
    pub moment_rank: usize,
    pub status: Status,
    /// Whether a rank-reduction re-solve was run and succeeded.
    pub refined: bool,
    /// The `m'` evaluation points.
    pub points: Vec<Vec<f64>>,
    /// Solution of the relaxation, after refinement when it succeeded.
    pub solution: SdpSolution,
}

/// Builds the relaxation for `f` using the first `m'` points of `pts`.
pub fn build_min_sdp(set: &SimpleSet, f: &Polynomial, pts: &PointSet) -> Result<SdpProblem> {
    let (_, m1, _) = set.dims();
    if pts.len() < m1 {
        bail!(Argument, "need {m1} points, got {}", pts.len());
    }
    let values: Vec<f64> = pts.points()[..m1].iter().map(|x| f.evaluate(x)).collect::<Result<_>>()?;
    build_min_sdp_from_values(set, pts.points(), &values)
}

/// Same as [`build_min_sdp`] for a function known only through its values
/// at the first `values.len() = m'` points of `pts`.
pub fn build_min_sdp_from_values(set: &SimpleSet, pts: &[Vec<f64>], values: &[f64]) -> Result<SdpProblem> {
    let (m, m1, _) = set.dims();
    if values.len() != m1 || pts.len() < m1 {
        bail!(Dimension, "need {m1} points and values, got {} and {}", pts.len(), values.len());
    }
    let phi = EmpiricalFeatures::new(set, pts, m, 1)?.matrix(&pts[..m1]);
    // The moment map α -> Σ α_i φ̃_i φ̃_iᵀ must be injective.
    EmpiricalFeatures::new(set, pts, m1, 2)?;
    let mut p = SdpProblem::new(m1, Sense::Minimize);
    let mut block = LmiBlock::new(m);
    for i in 0..m1 {
        p.set_objective(i, values[i])?;
        block.add_term(i, outer(&phi, i))?;
    }
    p.add_block(block)?;
    p.add_equality((0..m1).map(|i| (i, 1.0)).collect(), 1.0)?;
    Ok(p)
}

/// Solves to [`VALUE_GAP_TOL`], falling back to the default tolerances when
/// the tighter target cannot be reached.
pub(crate) fn solve_for_value(p: &SdpProblem) -> Result<SdpSolution> {
    let tight = solve(p, &SolveOptions { gap_tol: VALUE_GAP_TOL, ..SolveOptions::default() })?;
    if tight.is_optimal() {
        return Ok(tight);
    }
    solve(p, &SolveOptions::default())
}

/// `φ̃_i φ̃_iᵀ` for row `i` of `phi`.
pub(crate) fn outer(phi: &DMatrix<f64>, i: usize) -> DMatrix<f64> {
    let r = phi.row(i);
    r.transpose() * r
}

/// Samples `m'` points, solves, refines towards rank one and extracts a
/// candidate minimizer.
pub fn solve_min(set: &SimpleSet, f: &Polynomial, seed: u64) -> Result<MinResult> {
    f.check_representable()?;
    let (_, m1, _) = set.dims();
    let pts = set.sample_points(m1, seed)?;
    let values: Vec<f64> = pts.points().iter().map(|x| f.evaluate(x)).collect::<Result<_>>()?;
    solve_min_values(set, pts.points(), &values, seed)
}

/// [`solve_min`] for a function given by its values at `pts[..m']`.
///
/// The values are centered before solving; since the weights sum to one this
/// shifts the objective by a constant, and makes adding a constant to `f`
/// shift the value exactly rather than up to the solver tolerance. The
/// objectives stored in `solution` include the shift back; its `trace` does
/// not.
pub fn solve_min_values(set: &SimpleSet, pts: &[Vec<f64>], values: &[f64], seed: u64) -> Result<MinResult> {
    let center = if values.is_empty() { 0.0 } else { values.iter().sum::<f64>() / values.len() as f64 };
    let centered: Vec<f64> = values.iter().map(|v| v - center).collect();
    let p = build_min_sdp_from_values(set, pts, &centered)?;
    let mut sol = solve_for_value(&p)?;
    let uncenter = |sol: &mut SdpSolution| {
        sol.objective += center;
        sol.dual_objective += center;
    };
    let m1 = values.len();
    let points = pts[..m1].to_vec();
    if sol.status != Status::Optimal {
        uncenter(&mut sol);
        return Ok(MinResult {
            value: sol.objective,
            alpha: sol.x.clone(),
            x_star: set.weighted_mean(&points, &sol.x),
            moment_rank: 0,
            status: sol.status,
            refined: false,
            points,
            solution: sol,
        });
    }
    let value = sol.objective + center;
    let (mut used, refined) = reduce_rank(&p, sol, 0, seed)?;
    uncenter(&mut used);
    let moment = SymMatrix::symmetrized(used.slacks[0].clone());
    Ok(MinResult {
        value,
        alpha: used.x.clone(),
        x_star: set.weighted_mean(&points, &used.x),
        moment_rank: moment_rank(&moment),
        status: Status::Optimal,
        refined,
        points,
        solution: used,
    })
}

/// Applies [`refine_rank_one`] when the moment block `block` of `sol` has
/// rank above one. A rank-one optimum is already extreme on the optimal face,
/// and re-solving would only move it to the edge of the tolerance band.
pub(crate) fn reduce_rank(p: &SdpProblem, sol: SdpSolution, block: usize, seed: u64) -> Result<(SdpSolution, bool)> {
    let rank = moment_rank(&SymMatrix::symmetrized(sol.slacks[block].clone()));
    if rank <= 1 {
        return Ok((sol, false));
    }
    let refined = refine_rank_one(p, &sol, seed)?;
    if refined.status == Status::Optimal {
        Ok((refined, true))
    } else {
        Ok((sol, false))
    }
}

/// Numerical rank with threshold [`MOMENT_RANK_TOL`].
pub fn moment_rank(m: &SymMatrix) -> usize {
    numerical_rank(m, MOMENT_RANK_TOL)
}

/// `f(x*) − value`: non-negative up to solver accuracy, zero when the
/// relaxation is tight and the candidate exact.
pub fn certificate_gap(f: &Polynomial, res: &MinResult) -> f64 {
    f.eval_unchecked(&res.x_star) - res.value
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cosine(set: &SimpleSet) -> Polynomial {
        Polynomial::trig(set, vec![TrigTerm { freq: vec![1], cos: 1.0, sin: 0.0 }]).unwrap()
    }

    #[test]
    fn constant_function() {
        let t = SimpleSet::trig(1, 1).unwrap();
        let f = Polynomial::constant(&t, 3.0);
        let r = solve_min(&t, &f, 0).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.value - 3.0).abs() < 1e-7);
        assert!(certificate_gap(&f, &r).abs() < 1e-7);
    }

    #[test]
    fn cosine_minimum() {
        let t = SimpleSet::trig(1, 1).unwrap();
        let f = cosine(&t);
        let r = solve_min(&t, &f, 0).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.value + 1.0).abs() < 1e-7, "{}", r.value);
        assert!((r.x_star[0] - 0.5).abs() < 1e-4, "{:?}", r.x_star);
        assert_eq!(r.moment_rank, 1);
        let total: f64 = r.alpha.iter().sum();
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn too_few_points() {
        let t = SimpleSet::trig(1, 1).unwrap();
        let pts = t.sample_points(3, 0).unwrap();
        assert!(build_min_sdp(&t, &cosine(&t), &pts).is_err());
    }

    #[test]
    fn discrete_minimum_is_smallest_value() {
        let d = SimpleSet::discrete(4).unwrap();
        let vals = [0.3, -0.2, 0.9, 0.1];
        let f = Polynomial::tabulated(&d, move |x| vals[x[0].round() as usize]);
        let r = solve_min(&d, &f, 1).unwrap();
        assert!((r.value + 0.2).abs() < 1e-7);
        assert_eq!(r.x_star, vec![1.0]);
    }
}
