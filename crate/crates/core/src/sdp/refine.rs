//! Rank reduction on the optimal face: re-solve with the objective pinned to
//! its optimal value and a random linear objective, which generically lands
//! on an extreme point of the face.

use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // float math outside std
use num_traits::Float as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{solve, LmiBlock, Sense, SdpProblem, SdpSolution, SolveOptions, Status};
use crate::error::{bail, Result};

/// Half-width of the band `|cᵀx − c*| ≤ band` imposed by the re-solve.
pub const REFINE_BAND: f64 = 1e-7;

/// Re-solves `p` over `{x : |cᵀx − sol.objective| ≤ band}` minimizing a
/// seeded random linear function of the refinement variables.
///
/// The band is [`REFINE_BAND`], widened to twice the duality gap of `sol`
/// when the latter is larger so that the optimal face stays inside it. The
/// result carries the refined primal point and the multipliers of `sol`,
/// which remain optimal for the original problem. Only the primal side of the
/// re-solve is used, so a re-solve that stalls on its dual residual is still
/// accepted when its point satisfies the band and the original constraints
/// within the solver tolerance. Otherwise `sol` is returned unchanged except
/// for its status, which becomes `MaxIter`.
pub fn refine_rank_one(p: &SdpProblem, sol: &SdpSolution, seed: u64) -> Result<SdpSolution> {
    if sol.status != Status::Optimal {
        bail!(Argument, "rank refinement needs an optimal solution, got {:?}", sol.status);
    }
    let sign = p.sense().sign();
    let c: Vec<f64> = p.objective().iter().map(|v| sign * v).collect();
    let target = sign * sol.objective;
    let abs_gap = sol.gap * (1.0 + sol.objective.abs());
    let band = REFINE_BAND.max(2.0 * abs_gap);

    let mut q = p.clone();
    let mut lower = LmiBlock::new(1);
    let mut upper = LmiBlock::new(1);
    lower.set_constant(DMatrix::from_element(1, 1, band - target))?;
    upper.set_constant(DMatrix::from_element(1, 1, band + target))?;
    for (k, &ck) in c.iter().enumerate() {
        if ck != 0.0 {
            lower.add_term(k, DMatrix::from_element(1, 1, ck))?;
            upper.add_term(k, DMatrix::from_element(1, 1, -ck))?;
        }
    }
    q.add_block(lower)?;
    q.add_block(upper)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = p.refine_vars();
    let w: Vec<f64> = vars.clone().map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut obj = alloc::vec![0.0; p.n_vars()];
    for (k, wk) in vars.zip(&w) {
        obj[k] = wk / norm;
    }
    let q = SdpProblem { objective: obj, sense: Sense::Minimize, ..q };

    let opts = SolveOptions::default();
    let refined = solve(&q, &opts)?;
    let usable = match refined.status {
        Status::Optimal => true,
        Status::MaxIter | Status::NumericalFailure => {
            refined.x.iter().all(|v| v.is_finite()) && q.primal_violation(&refined.x) <= opts.feas_tol
        }
        _ => false,
    };
    if !usable {
        let mut out = sol.clone();
        out.status = Status::MaxIter;
        return Ok(out);
    }
    let nb = p.blocks().len();
    Ok(SdpSolution {
        objective: p.objective_value(&refined.x),
        x: refined.x,
        slacks: refined.slacks[..nb].to_vec(),
        duals: sol.duals.clone(),
        y: sol.y.clone(),
        dual_objective: sol.dual_objective,
        gap: sol.gap,
        pres: refined.pres,
        dres: sol.dres,
        status: Status::Optimal,
        iterations: refined.iterations,
        trace: refined.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matalg::SymMatrix;
    use crate::simpleset::SimpleSet;
    use crate::sosmin::{build_min_sdp, moment_rank, Polynomial, TrigTerm};
    use alloc::vec;

    fn relaxation(terms: Vec<TrigTerm>, seed: u64) -> SdpProblem {
        let t = SimpleSet::trig(1, 2).unwrap();
        let f = Polynomial::trig(&t, terms).unwrap();
        let pts = t.sample_points(t.dims().1, seed).unwrap();
        build_min_sdp(&t, &f, &pts).unwrap()
    }

    #[test]
    fn unique_optimum_is_kept() {
        let p = relaxation(vec![TrigTerm { freq: vec![1], cos: 1.0, sin: 0.3 }], 1);
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        let r = refine_rank_one(&p, &sol, 5).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective - sol.objective).abs() <= 1e-6);
        // The band lets the weights drift by about its square root.
        let dx = r.x.iter().zip(&sol.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dx <= 1e-2, "{dx}");
        // The pipeline does not re-solve a rank-one optimum at all.
        let (kept, refined) = crate::sosmin::reduce_rank(&p, sol.clone(), 0, 5).unwrap();
        assert!(!refined);
        assert_eq!(kept.x, sol.x);
    }

    #[test]
    fn two_minimizers_refine_to_rank_one() {
        // cos 4πx is minimal at 1/4 and 3/4.
        let p = relaxation(vec![TrigTerm { freq: vec![2], cos: 1.0, sin: 0.0 }], 0);
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-6);
        let before = moment_rank(&SymMatrix::symmetrized(sol.slacks[0].clone()));
        let r = refine_rank_one(&p, &sol, 3).unwrap();
        assert_eq!(r.status, Status::Optimal);
        let ev = SymMatrix::symmetrized(r.slacks[0].clone()).eigen().values;
        let n = ev.len();
        assert!(ev[n - 2] < 1e-6 * ev[n - 1], "rank before {before}, eigenvalues {ev:?}");
        assert!((r.objective - sol.objective).abs() <= 1e-6);
    }

    #[test]
    fn objective_is_preserved() {
        for seed in 0..20u64 {
            let a = (seed as f64 * 0.37).sin();
            let b = (seed as f64 * 1.3).cos();
            let p = relaxation(
                vec![TrigTerm { freq: vec![1], cos: a, sin: b }, TrigTerm { freq: vec![2], cos: b, sin: -a }],
                seed,
            );
            let sol = solve(&p, &SolveOptions::default()).unwrap();
            let r = refine_rank_one(&p, &sol, seed).unwrap();
            if r.status == Status::Optimal {
                assert!((r.objective - sol.objective).abs() <= 1e-6, "seed {seed}");
            }
        }
    }

    #[test]
    fn needs_an_optimal_input() {
        let p = relaxation(vec![TrigTerm { freq: vec![1], cos: 1.0, sin: 0.0 }], 0);
        let mut sol = solve(&p, &SolveOptions::default()).unwrap();
        sol.status = Status::MaxIter;
        assert!(refine_rank_one(&p, &sol, 0).is_err());
    }
}
