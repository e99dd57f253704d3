//! Infeasible primal-dual path-following with Nesterov-Todd scaling and
//! Mehrotra predictor-corrector steps.
//!
//! For every block the scaling matrix `R` satisfies
//! `R⁻¹ S R⁻ᵀ = Rᵀ Z R = Λ` with `Λ` diagonal; both `R` and `R⁻ᵀ` are
//! carried along and updated from Cholesky factors of the scaled iterates
//! after every step, so no matrix square roots are taken.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math outside std
use num_traits::Float as _;

use super::{Iterate, SdpProblem, SdpSolution, SolveOptions, Status};
use crate::error::{bail, Result};
use crate::matalg::svd_jacobi;

/// Fraction of the distance to the boundary taken by each step.
const STEP_FRACTION: f64 = 0.99;

/// Iterations tolerated with a converged primal side and gap but a dual
/// residual above tolerance.
const STALL_ITERATIONS: usize = 10;

/// Relative norm under which an equality row counts as dependent.
const DEPENDENT_ROW_TOL: f64 = 1e-10;

struct Block {
    vars: Vec<usize>,
    coefs: Vec<DMatrix<f64>>,
    f0: DMatrix<f64>,
    r: DMatrix<f64>,
    rti: DMatrix<f64>,
    lam: DVector<f64>,
}

impl Block {
    fn order(&self) -> usize {
        self.f0.nrows()
    }

    fn slack(&self) -> DMatrix<f64> {
        scaled_product(&self.r, &self.lam)
    }

    fn dual(&self) -> DMatrix<f64> {
        scaled_product(&self.rti, &self.lam)
    }

    fn lin(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.order(), self.order());
        for (k, f) in self.vars.iter().zip(&self.coefs) {
            out += f * x[*k];
        }
        out
    }

    fn adjoint_into(&self, m: &DMatrix<f64>, out: &mut [f64]) {
        for (k, f) in self.vars.iter().zip(&self.coefs) {
            out[*k] += f.dot(m);
        }
    }
}

/// `M diag(lam) Mᵀ`.
fn scaled_product(m: &DMatrix<f64>, lam: &DVector<f64>) -> DMatrix<f64> {
    let mut ml = m.clone();
    for (j, l) in lam.iter().enumerate() {
        ml.column_mut(j).scale_mut(*l);
    }
    let out = ml * m.transpose();
    let t = out.transpose();
    (out + t) * 0.5
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

struct Presolved {
    a: DMatrix<f64>,
    b: DVector<f64>,
    kept: Vec<usize>,
}

/// Drops linearly dependent equality rows (modified Gram-Schmidt with one
/// reorthogonalization pass). Returns `None` when a dependent row has an
/// inconsistent right-hand side.
fn presolve(p: &SdpProblem) -> Option<Presolved> {
    let (a, b) = p.equality_matrix();
    let n = p.n_vars();
    let mut basis: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut kept = Vec::new();
    for i in 0..a.nrows() {
        let row: DVector<f64> = a.row(i).transpose();
        let norm0 = row.norm();
        let mut v = row.clone();
        let mut rhs = b[i];
        for _ in 0..2 {
            for (q, beta) in &basis {
                let c = q.dot(&v);
                v -= q * c;
                rhs -= c * beta;
            }
        }
        let norm = v.norm();
        if norm <= DEPENDENT_ROW_TOL * norm0.max(f64::MIN_POSITIVE) || norm0 == 0.0 {
            if rhs.abs() > 1e-8 * (1.0 + b[i].abs()) {
                return None;
            }
            continue;
        }
        basis.push((v / norm, rhs / norm));
        kept.push(i);
    }
    let mut ak = DMatrix::zeros(kept.len(), n);
    for (r, &i) in kept.iter().enumerate() {
        ak.set_row(r, &a.row(i));
    }
    let bk = DVector::from_iterator(kept.len(), kept.iter().map(|&i| b[i]));
    Some(Presolved { a: ak, b: bk, kept })
}

/// Smallest `α_max` with `Λ + α D ⪰ 0` (infinite if `D ⪰ 0`).
fn max_step(lam: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    let n = lam.len();
    let inv: Vec<f64> = lam.iter().map(|l| 1.0 / l.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| d[(i, j)] * inv[i] * inv[j]);
    let e = sym(m).symmetric_eigenvalues();
    let lmin = e.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

/// Solves `Λ∘C = rhs`, i.e. `C_ij = 2 rhs_ij / (λ_i + λ_j)`.
fn lyapunov(lam: &DVector<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = lam.len();
    DMatrix::from_fn(n, n, |i, j| 2.0 * rhs[(i, j)] / (lam[i] + lam[j]))
}

struct Direction {
    dx: DVector<f64>,
    dy: DVector<f64>,
    ds: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
}

/// Solves the semidefinite program `p` from a scaled-identity cold start.
pub fn solve(p: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution> {
    if p.blocks().is_empty() && p.equalities().is_empty() {
        bail!(Argument, "problem has neither blocks nor equalities");
    }
    let n = p.n_vars();
    let sign = p.sense().sign();
    let c = DVector::from_iterator(n, p.objective().iter().map(|v| sign * v));

    let Some(pre) = presolve(p) else {
        return Ok(failure(p, Status::Infeasible, n, Vec::new()));
    };
    let me = pre.a.nrows();
    let a = &pre.a;
    let b = &pre.b;

    let data_norm = (c.norm_squared()
        + b.norm_squared()
        + p.blocks().iter().map(|bl| bl.constant().norm_squared()).sum::<f64>())
    .sqrt();
    let xi = 1.0 + data_norm;
    let f0_norm = p.blocks().iter().map(|bl| bl.constant().norm_squared()).sum::<f64>().sqrt();

    let mut blocks: Vec<Block> = p
        .blocks()
        .iter()
        .map(|bl| {
            let k = bl.order();
            Block {
                vars: bl.terms().keys().copied().collect(),
                coefs: bl.terms().values().cloned().collect(),
                f0: bl.constant().clone(),
                r: DMatrix::identity(k, k),
                rti: DMatrix::identity(k, k),
                lam: DVector::from_element(k, xi),
            }
        })
        .collect();
    let total_order: usize = blocks.iter().map(|b| b.order()).sum();

    let mut x = DVector::zeros(n);
    let mut y = DVector::zeros(me);
    let mut trace = Vec::new();
    let mut status = Status::MaxIter;
    let mut step = 0.0;
    let mut stalled = 0usize;

    for iter in 0..=opts.max_iter {
        // Residuals and costs at the current iterate.
        let slacks: Vec<DMatrix<f64>> = blocks.iter().map(|b| b.slack()).collect();
        let duals: Vec<DMatrix<f64>> = blocks.iter().map(|b| b.dual()).collect();
        let xs = x.as_slice();
        let mut fstar_z = vec![0.0; n];
        for (bl, z) in blocks.iter().zip(&duals) {
            bl.adjoint_into(z, &mut fstar_z);
        }
        let rd = &c - a.transpose() * &y - DVector::from_vec(fstar_z);
        let rp = b - a * &x;
        let rb: Vec<DMatrix<f64>> = blocks
            .iter()
            .zip(&slacks)
            .map(|(bl, s)| &bl.f0 + bl.lin(xs) - s)
            .collect();
        let pcost = c.dot(&x);
        let dcost = b.dot(&y) - blocks.iter().zip(&duals).map(|(bl, z)| bl.f0.dot(z)).sum::<f64>();
        let compl: f64 = blocks.iter().map(|bl| bl.lam.norm_squared()).sum();
        let correction = rd.dot(&x) - y.dot(&rp) + rb.iter().zip(&duals).map(|(r, z)| r.dot(z)).sum::<f64>();
        let rb_norm = rb.iter().map(|r| r.norm_squared()).sum::<f64>();
        let pres = (rp.norm_squared() + rb_norm).sqrt() / (1.0 + (b.norm_squared() + f0_norm * f0_norm).sqrt());
        let dres = rd.norm() / (1.0 + c.norm());
        let relgap = compl.max((pcost - dcost).abs()) / (1.0 + pcost.abs());
        trace.push(Iterate { pcost, dcost, complementarity: compl, residual_correction: correction, pres, dres, step });

        if !(pcost.is_finite() && dcost.is_finite() && compl.is_finite()) {
            status = Status::NumericalFailure;
            break;
        }
        if pres <= opts.feas_tol && dres <= opts.feas_tol && relgap <= opts.gap_tol {
            status = Status::Optimal;
            break;
        }
        // Rays: a dual improving direction certifies primal infeasibility,
        // a primal one certifies dual infeasibility.
        let dray = dcost;
        if dray > 0.0 && (&c - &rd).norm() <= opts.feas_tol * dray && iter > 0 {
            status = Status::Infeasible;
            break;
        }
        let pray = -pcost;
        if pray > 0.0 && iter > 0 {
            let ax = (a * &x).norm();
            let lmin = blocks
                .iter()
                .zip(&slacks)
                .zip(&rb)
                .map(|((bl, s), r)| {
                    let m = sym(s - &bl.f0 + r);
                    m.symmetric_eigenvalues().iter().fold(f64::INFINITY, |acc, &v| acc.min(v))
                })
                .fold(f64::INFINITY, f64::min);
            if ax <= opts.feas_tol * pray && lmin >= -opts.feas_tol * pray {
                status = Status::Unbounded;
                break;
            }
        }
        // Primal side and gap converged while the dual residual no longer
        // improves: further iterations only amplify rounding.
        if pres <= opts.feas_tol && relgap <= opts.gap_tol {
            stalled += 1;
            if stalled >= STALL_ITERATIONS {
                status = Status::NumericalFailure;
                break;
            }
        } else {
            stalled = 0;
        }
        if iter == opts.max_iter {
            break;
        }

        // Scaled coefficients F̃_k = R⁻¹ F_k R⁻ᵀ and the Schur matrix.
        let scaled: Vec<Vec<DMatrix<f64>>> = blocks
            .iter()
            .map(|bl| {
                let rt = bl.rti.transpose();
                bl.coefs.iter().map(|f| sym(&rt * f * &bl.rti)).collect()
            })
            .collect();
        let dim = n + me;
        let mut kkt = DMatrix::zeros(dim, dim);
        for (bl, ft) in blocks.iter().zip(&scaled) {
            for (i, fi) in ft.iter().enumerate() {
                for j in 0..=i {
                    let v = fi.dot(&ft[j]);
                    kkt[(bl.vars[i], bl.vars[j])] += v;
                    if i != j {
                        kkt[(bl.vars[j], bl.vars[i])] += v;
                    }
                }
            }
        }
        for i in 0..me {
            for k in 0..n {
                kkt[(n + i, k)] = a[(i, k)];
                kkt[(k, n + i)] = a[(i, k)];
            }
        }
        let lu = kkt.clone().full_piv_lu();

        let rb_scaled: Vec<DMatrix<f64>> =
            blocks.iter().zip(&rb).map(|(bl, r)| sym(bl.rti.transpose() * r * &bl.rti)).collect();

        let solve_dir = |cs: &[DMatrix<f64>], eta: f64| -> Option<Direction> {
            let mut rhs = DVector::zeros(dim);
            let mut top = vec![0.0; n];
            for ((ft, bl), (cm, rbs)) in scaled.iter().zip(&blocks).zip(cs.iter().zip(&rb_scaled)) {
                let m = cm - rbs * eta;
                for (f, &k) in ft.iter().zip(&bl.vars) {
                    top[k] += f.dot(&m);
                }
            }
            for k in 0..n {
                rhs[k] = top[k] - eta * rd[k];
            }
            for i in 0..me {
                rhs[n + i] = eta * rp[i];
            }
            let mut sol = lu.solve(&rhs)?;
            for _ in 0..2 {
                let res = &rhs - &kkt * &sol;
                if let Some(corr) = lu.solve(&res) {
                    sol += corr;
                }
            }
            if sol.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let dx = sol.rows(0, n).into_owned();
            let dy = -sol.rows(n, me).into_owned();
            let mut ds = Vec::with_capacity(blocks.len());
            let mut dz = Vec::with_capacity(blocks.len());
            for ((ft, bl), (cm, rbs)) in scaled.iter().zip(&blocks).zip(cs.iter().zip(&rb_scaled)) {
                let mut d = rbs * eta;
                for (f, &k) in ft.iter().zip(&bl.vars) {
                    d += f * dx[k];
                }
                dz.push(cm - &d);
                ds.push(d);
            }
            Some(Direction { dx, dy, ds, dz })
        };
        let step_of = |d: &Direction| -> f64 {
            blocks
                .iter()
                .enumerate()
                .map(|(i, bl)| max_step(&bl.lam, &d.ds[i]).min(max_step(&bl.lam, &d.dz[i])))
                .fold(f64::INFINITY, f64::min)
        };

        // Predictor.
        let c_aff: Vec<DMatrix<f64>> =
            blocks.iter().map(|bl| DMatrix::from_diagonal(&(-&bl.lam))).collect();
        let Some(aff) = solve_dir(&c_aff, 1.0) else {
            status = Status::NumericalFailure;
            break;
        };
        let alpha_aff = step_of(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).clamp(0.0, 1.0).powi(3);
        let mu = compl / total_order.max(1) as f64;

        // Corrector.
        let c_cor: Vec<DMatrix<f64>> = blocks
            .iter()
            .enumerate()
            .map(|(i, bl)| {
                let k = bl.order();
                let mut rhs = sym(&aff.ds[i] * &aff.dz[i]) * -1.0;
                for j in 0..k {
                    rhs[(j, j)] += sigma * mu - bl.lam[j] * bl.lam[j];
                }
                lyapunov(&bl.lam, &rhs)
            })
            .collect();
        let Some(dir) = solve_dir(&c_cor, 1.0 - sigma) else {
            status = Status::NumericalFailure;
            break;
        };
        let alpha = (STEP_FRACTION * step_of(&dir)).min(1.0);
        if !(alpha > 1e-12) {
            status = Status::NumericalFailure;
            break;
        }
        step = alpha;

        x += &dir.dx * alpha;
        y += &dir.dy * alpha;
        let mut ok = true;
        for (i, bl) in blocks.iter_mut().enumerate() {
            let base = DMatrix::from_diagonal(&bl.lam);
            let sn = sym(&base + &dir.ds[i] * alpha);
            let zn = sym(&base + &dir.dz[i] * alpha);
            let (Some(ls), Some(lz)) = (sn.cholesky(), zn.cholesky()) else {
                ok = false;
                break;
            };
            let ls = ls.l();
            let lz = lz.l();
            let (u, lam_new, v) = svd_jacobi(&(lz.transpose() * &ls));
            if lam_new.iter().any(|&l| !(l > 0.0)) {
                ok = false;
                break;
            }
            let isq = DVector::from_iterator(lam_new.len(), lam_new.iter().map(|l| 1.0 / l.sqrt()));
            let mut v = v;
            let mut uu = u;
            for (j, s) in isq.iter().enumerate() {
                v.column_mut(j).scale_mut(*s);
                uu.column_mut(j).scale_mut(*s);
            }
            bl.r = &bl.r * ls * v;
            bl.rti = &bl.rti * lz * uu;
            bl.lam = lam_new;
        }
        if !ok {
            status = Status::NumericalFailure;
            break;
        }
    }

    let last = *trace.last().expect("at least one iterate is recorded");
    let mut y_full = vec![0.0; p.equalities().len()];
    for (r, &i) in pre.kept.iter().enumerate() {
        y_full[i] = y[r];
    }
    Ok(SdpSolution {
        x: x.iter().copied().collect(),
        slacks: blocks.iter().map(|b| b.slack()).collect(),
        duals: blocks.iter().map(|b| b.dual()).collect(),
        y: y_full,
        objective: sign * last.pcost,
        dual_objective: sign * last.dcost,
        gap: last.complementarity.max((last.pcost - last.dcost).abs()) / (1.0 + last.pcost.abs()),
        pres: last.pres,
        dres: last.dres,
        status,
        iterations: trace.len() - 1,
        trace,
    })
}

fn failure(p: &SdpProblem, status: Status, n: usize, trace: Vec<Iterate>) -> SdpSolution {
    SdpSolution {
        x: vec![0.0; n],
        slacks: p.blocks().iter().map(|b| DMatrix::zeros(b.order(), b.order())).collect(),
        duals: p.blocks().iter().map(|b| DMatrix::zeros(b.order(), b.order())).collect(),
        y: vec![0.0; p.equalities().len()],
        objective: f64::NAN,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        pres: f64::NAN,
        dres: f64::NAN,
        status,
        iterations: 0,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{LmiBlock, Sense};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lambda_min_program(cm: &DMatrix<f64>) -> SdpProblem {
        let n = cm.nrows();
        let mut p = SdpProblem::new(1, Sense::Maximize);
        p.set_objective(0, 1.0).unwrap();
        let mut b = LmiBlock::new(n);
        b.set_constant(cm.clone()).unwrap();
        b.add_term(0, -DMatrix::identity(n, n)).unwrap();
        p.add_block(b).unwrap();
        p
    }

    fn random_sym(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        sym(m)
    }

    #[test]
    fn lambda_min_of_diagonal() {
        let p = lambda_min_program(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])));
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-7);
        // The dual matrix is the minimizer of tr(CX) over the spectraplex.
        let z = &s.duals[0];
        assert!((z[(0, 0)] - 1.0).abs() < 1e-6 && z[(1, 1)].abs() < 1e-6);
    }

    #[test]
    fn lambda_min_of_random_matrix() {
        let cm = random_sym(5, 42);
        let s = solve(&lambda_min_program(&cm), &SolveOptions::default()).unwrap();
        let lmin = cm.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &v| a.min(v));
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - lmin).abs() < 1e-7, "{} vs {}", s.objective, lmin);
    }

    #[test]
    fn spectraplex_in_entry_variables() {
        // min tr(CX), tr X = 1, X ⪰ 0 with X parameterized by its entries.
        let cm = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let mut p = SdpProblem::new(3, Sense::Minimize);
        let mut b = LmiBlock::new(2);
        let e = |i: usize, j: usize| {
            let mut m = DMatrix::zeros(2, 2);
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
            m
        };
        b.add_term(0, e(0, 0)).unwrap();
        b.add_term(1, e(1, 1)).unwrap();
        b.add_term(2, e(0, 1)).unwrap();
        p.add_block(b).unwrap();
        p.set_objective(0, cm[(0, 0)]).unwrap();
        p.set_objective(1, cm[(1, 1)]).unwrap();
        p.add_equality(vec![(0, 1.0), (1, 1.0)], 1.0).unwrap();
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-7);
        assert!((s.x[0] - 1.0).abs() < 1e-6 && s.x[1].abs() < 1e-6 && s.x[2].abs() < 1e-6);
    }

    #[test]
    fn diagonal_lp() {
        let mut p = SdpProblem::new(2, Sense::Minimize);
        let mut b = LmiBlock::new(2);
        b.add_term(0, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]))).unwrap();
        b.add_term(1, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]))).unwrap();
        p.add_block(b).unwrap();
        p.set_objective(0, 1.0).unwrap();
        p.set_objective(1, 1.0).unwrap();
        p.add_equality(vec![(0, 1.0), (1, 1.0)], 1.0).unwrap();
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn dependent_equalities_are_dropped() {
        let mut p = SdpProblem::new(2, Sense::Minimize);
        let mut b = LmiBlock::new(2);
        b.add_term(0, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]))).unwrap();
        b.add_term(1, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]))).unwrap();
        p.add_block(b).unwrap();
        p.set_objective(0, 1.0).unwrap();
        p.set_objective(1, 2.0).unwrap();
        p.add_equality(vec![(0, 1.0), (1, 1.0)], 1.0).unwrap();
        p.add_equality(vec![(0, 2.0), (1, 2.0)], 2.0).unwrap();
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-7);
        assert_eq!(s.y[1], 0.0);

        p.add_equality(vec![(0, 1.0), (1, 1.0)], 3.0).unwrap();
        assert_eq!(solve(&p, &SolveOptions::default()).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn infeasible_lmi_is_detected() {
        // x ⪰ 0 and -1 - x ⪰ 0 cannot both hold.
        let mut p = SdpProblem::new(1, Sense::Minimize);
        let mut b = LmiBlock::new(2);
        b.set_constant(DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, -1.0]))).unwrap();
        b.add_term(0, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]))).unwrap();
        p.add_block(b).unwrap();
        p.set_objective(0, 1.0).unwrap();
        assert_eq!(solve(&p, &SolveOptions::default()).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn unbounded_lmi_is_detected() {
        let mut p = SdpProblem::new(1, Sense::Minimize);
        let mut b = LmiBlock::new(1);
        b.add_term(0, DMatrix::from_element(1, 1, -1.0)).unwrap();
        p.add_block(b).unwrap();
        p.set_objective(0, 1.0).unwrap();
        assert_eq!(solve(&p, &SolveOptions::default()).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn repeated_solves_are_identical() {
        let cm = random_sym(8, 3);
        let p = lambda_min_program(&cm);
        let a = solve(&p, &SolveOptions::default()).unwrap();
        let b = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_problem_is_rejected() {
        assert!(solve(&SdpProblem::new(1, Sense::Minimize), &SolveOptions::default()).is_err());
    }
}
