//! One-stage primal-dual relaxation of `min_x max_y g(x, y)`, the two-stage
//! upper-bounding baseline and its alternating variant.

mod objective;
pub(crate) mod relax;
mod two_stage;

use alloc::vec::Vec;

use nalgebra::DMatrix;

pub use objective::{BilinearObjective, Inner};
pub use relax::{build_primal_dual, build_primal_dual_finite};
pub use two_stage::{stage_one_problem, alternate_two_stage, alternate_two_stage_mix, ALTERNATE_MIX, two_stage, uniform_weights, AlternateTrace, TwoStageResult};

use crate::error::{bail, Result};
use crate::matalg::{EmpiricalFeatures, SymMatrix};
use crate::sdp::{SdpSolution, Status};
use crate::sosmin::{moment_rank, reduce_rank, solve_for_value};

/// Agreement required between the relaxation value and the inner maximum at
/// the extracted point for a bound to be called tight.
pub const TIGHT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundStatus {
    /// The value is at most the true min-max value.
    LowerBound,
    /// The value equals the min-max value, attained at `x_star`.
    Tight,
    /// The value is at least the true min-max value.
    UpperBound,
    Unknown,
}

/// Multipliers of the semidefinite constraints.
#[derive(Debug, Clone, PartialEq)]
pub enum DualBlocks {
    /// `T_j`, one per function, in the empirical basis of `X`.
    Finite(Vec<DMatrix<f64>>),
    /// The primal matrices `D_i` (in the empirical basis of `Y`) and the
    /// multiplier `T` of `Σ_i D_i ⊗ φ̃_iφ̃_iᵀ ⪰ 0`.
    General { d: Vec<DMatrix<f64>>, t: DMatrix<f64> },
}

#[derive(Debug, Clone)]
pub struct MinMaxResult {
    pub value: f64,
    /// Weights on the `m''` X-points.
    pub alpha: Vec<f64>,
    /// Weights on the first `m'` X-points.
    pub lambda: Vec<f64>,
    /// Taken from the solve before rank refinement.
    pub dual_blocks: DualBlocks,
    pub x_star: Vec<f64>,
    pub moment_rank: usize,
    pub bound_status: BoundStatus,
    pub status: Status,
    pub refined: bool,
    /// The `m''` X-points.
    pub points: Vec<Vec<f64>>,
    /// The `p'` Y-points of a general inner set.
    pub y_points: Vec<Vec<f64>>,
    pub solution: SdpSolution,
    pub seed: u64,
    features: EmpiricalFeatures,
}

impl MinMaxResult {
    /// Empirical features `φ̃(x)` in which the dual blocks are expressed.
    pub fn features(&self) -> &EmpiricalFeatures {
        &self.features
    }
}

/// Samples points, solves the relaxation, refines the moment block towards
/// rank one, extracts `x_star` and classifies the bound.
pub fn solve_minmax(obj: &BilinearObjective, seed: u64) -> Result<MinMaxResult> {
    obj.check_representable()?;
    let (_, _, m2) = obj.set_x().dims();
    let pts = obj.set_x().sample_points(m2, seed)?;
    let relax = match obj.set_y() {
        None => relax::finite(obj, pts.points())?,
        Some(set_y) => {
            let (_, py1, _) = set_y.dims();
            let pts_y = set_y.sample_points(py1, seed)?;
            relax::general(obj, pts.points(), pts_y.points())?
        }
    };
    let sol = solve_for_value(&relax.problem)?;
    let value = sol.objective;
    let optimal = sol.is_optimal();
    // Multipliers come from the first solve: an interior-point method ends
    // near the analytic center of the optimal face, which is canonical (and
    // equivariant under relabelling the g_j), whereas rank refinement moves
    // along a seeded random direction.
    let central = sol.clone();
    let (used, refined) = if optimal {
        reduce_rank(&relax.problem, sol, relax.moment_block, seed)?
    } else {
        (sol, false)
    };
    let alpha = used.x[relax.alpha.clone()].to_vec();
    let lambda = used.x[relax.lambda.clone()].to_vec();
    let dual_blocks = match obj.p() {
        Some(p) => DualBlocks::Finite(central.duals[..p].to_vec()),
        None => {
            let py = relax.y_features.as_ref().map_or(0, |f| f.dim());
            let nsv = py * (py + 1) / 2;
            let start = relax.lambda.end;
            let d = (0..lambda.len()).map(|i| relax::smat(py, &central.x[start + i * nsv..start + (i + 1) * nsv])).collect();
            DualBlocks::General { d, t: central.duals[0].clone() }
        }
    };
    let rank = if optimal { moment_rank(&SymMatrix::symmetrized(used.slacks[relax.moment_block].clone())) } else { 0 };
    let mut res = MinMaxResult {
        value,
        x_star: obj.set_x().weighted_mean(&relax.points, &alpha),
        alpha,
        lambda,
        dual_blocks,
        moment_rank: rank,
        bound_status: BoundStatus::Unknown,
        status: used.status,
        refined,
        points: relax.points,
        y_points: relax.y_points,
        solution: used,
        seed,
        features: relax.features,
    };
    if optimal {
        res.status = Status::Optimal;
        res.bound_status = posteriori_check(&res, obj)?;
    }
    Ok(res)
}

/// `v_j(x) = φ̃(x)ᵀ T_j φ̃(x)` for a finite inner set.
pub fn dual_weights(res: &MinMaxResult, x: &[f64]) -> Result<Vec<f64>> {
    let DualBlocks::Finite(t) = &res.dual_blocks else {
        bail!(Unsupported, "dual weights are only defined for a finite inner set; use the D_i blocks");
    };
    if res.status != Status::Optimal {
        bail!(Solver, "dual weights need an optimal solution, got {:?}", res.status);
    }
    res.features.set().check_member(x)?;
    let f = res.features.features(x);
    Ok(t.iter().map(|tj| f.dot(&(tj * &f))).collect())
}

/// Classifies the relaxation value.
///
/// When the inner relaxation is exact the value is a lower bound. A rank-one
/// moment block whose point attains the value (within [`TIGHT_TOL`]) makes it
/// tight in that case and an upper bound otherwise.
pub fn posteriori_check(res: &MinMaxResult, obj: &BilinearObjective) -> Result<BoundStatus> {
    if res.status != Status::Optimal {
        return Ok(BoundStatus::Unknown);
    }
    let exact = obj.inner_relaxation_exact();
    let attained = res.moment_rank == 1 && {
        let inner = obj.inner_max(&res.x_star, res.seed)?;
        (inner - res.value).abs() <= TIGHT_TOL
    };
    Ok(match (exact, attained) {
        (true, true) => BoundStatus::Tight,
        (true, false) => BoundStatus::LowerBound,
        (false, true) => BoundStatus::UpperBound,
        (false, false) => BoundStatus::Unknown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simpleset::SimpleSet;
    use crate::sosmin::{solve_min, Polynomial, TrigTerm};
    use alloc::vec;

    fn trig1(set: &SimpleSet, w: i32, c: f64, s: f64) -> Polynomial {
        Polynomial::trig(set, vec![TrigTerm { freq: vec![w], cos: c, sin: s }]).unwrap()
    }

    #[test]
    fn abs_cosine() {
        let t = SimpleSet::trig(1, 2).unwrap();
        let obj = BilinearObjective::finite(&t, vec![trig1(&t, 1, 1.0, 0.0), trig1(&t, 1, -1.0, 0.0)]).unwrap();
        let r = solve_minmax(&obj, 0).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!(r.value.abs() < 1e-6, "{}", r.value);
        let x = r.x_star[0];
        assert!((x - 0.25).abs() < 1e-4 || (x - 0.75).abs() < 1e-4, "{x}");
        assert_eq!(r.bound_status, BoundStatus::Tight);
        let v = dual_weights(&r, &r.x_star).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-3 && (v[1] - 0.5).abs() < 1e-3, "{v:?}");
    }

    #[test]
    fn cosine_and_sine() {
        let t = SimpleSet::trig(1, 2).unwrap();
        let obj = BilinearObjective::finite(&t, vec![trig1(&t, 1, 1.0, 0.0), trig1(&t, 1, 0.0, 1.0)]).unwrap();
        let r = solve_minmax(&obj, 0).unwrap();
        assert!((r.value + core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5, "{}", r.value);
        assert!((r.x_star[0] - 0.625).abs() < 1e-4, "{:?}", r.x_star);
        assert_eq!(r.bound_status, BoundStatus::Tight);
    }

    #[test]
    fn single_function_matches_minimization() {
        let t = SimpleSet::trig(1, 1).unwrap();
        let f = Polynomial::trig(
            &t,
            vec![TrigTerm { freq: vec![1], cos: 0.3, sin: -0.8 }, TrigTerm { freq: vec![2], cos: 0.5, sin: 0.1 }],
        )
        .unwrap();
        let obj = BilinearObjective::finite(&t, vec![f.clone()]).unwrap();
        let r = solve_minmax(&obj, 3).unwrap();
        let s = solve_min(&t, &f, 3).unwrap();
        assert!((r.value - s.value).abs() < 1e-7, "{} vs {}", r.value, s.value);
        let v = dual_weights(&r, &[0.37]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_is_tight() {
        let t = SimpleSet::trig(1, 1).unwrap();
        let obj = BilinearObjective::finite(&t, vec![Polynomial::constant(&t, 2.5)]).unwrap();
        let r = solve_minmax(&obj, 0).unwrap();
        assert!((r.value - 2.5).abs() < 1e-7);
        assert_eq!(r.bound_status, BoundStatus::Tight);
        let d = SimpleSet::discrete(3).unwrap();
        let g = Polynomial::constant(&SimpleSet::product(vec![t.clone(), d.clone()]).unwrap(), 2.5);
        let obj = BilinearObjective::general(&t, &d, g).unwrap();
        let r = solve_minmax(&obj, 0).unwrap();
        assert!((r.value - 2.5).abs() < 1e-7, "{}", r.value);
        assert_eq!(r.bound_status, BoundStatus::Tight);
    }

    #[test]
    fn general_weights_are_unsupported() {
        let t = SimpleSet::trig(1, 1).unwrap();
        let g = Polynomial::constant(&SimpleSet::product(vec![t.clone(), t.clone()]).unwrap(), 1.0);
        let obj = BilinearObjective::general(&t, &t, g).unwrap();
        let r = solve_minmax(&obj, 0).unwrap();
        assert!(matches!(dual_weights(&r, &[0.1]), Err(crate::Error::Unsupported(_))));
    }
}
