//! Emptiness certificates for `{x : ‖x‖₂ ≤ 1, g_j(x) ≥ 0 for all j}`.
//!
//! The set is empty exactly when `min_x max_j −g_j(x) > 0` on the ball. When
//! the finite min-max relaxation of that problem has a positive value `c`, the
//! multipliers `T_j ⪰ 0` of its semidefinite constraints and `A ⪰ 0` of the
//! moment constraint satisfy, on the ball,
//!
//! ```text
//! −c = Σ_j g_j(x) q_j(x) + q_0(x),    q_j = φ̃ᵀ T_j φ̃,   q_0 = φ̃₂ᵀ A φ̃₂.
//! ```
//!
//! Ball features are polynomials in `(x, t)` with `t = √(1 − ‖x‖²)`; the part
//! of a quadratic form that is even in `t` reads `(1 − ‖x‖²) u(x) + v(x)` with
//! `u`, `v` sums of squares, which is the form stored here.

mod poly;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // float math outside std
use num_traits::Float as _;

pub use poly::{ball_kernel_expansion, monomial, monomials, LiftedBasis, MultiPoly};

use crate::error::{bail, Error, Result};
use crate::matalg::{sym_eigen, EmpiricalFeatures};
use crate::minmax::{relax, BilinearObjective};
use crate::sdp::{solve, SolveOptions};
use crate::simpleset::{kronecker_steps, SetKind, SimpleSet};
use crate::sosmin::Polynomial;

/// Relaxed values of `max_x min_j g_j(x)` at or above `−DECISION_MARGIN` are
/// not trusted to certify emptiness.
pub const DECISION_MARGIN: f64 = 1e-7;

/// Largest identity violation of an accepted certificate.
pub const ACCEPT_RESIDUAL: f64 = 1e-6;

/// Most negative Gram eigenvalue of an accepted certificate.
pub const ACCEPT_EIGENVALUE: f64 = -1e-8;

/// Verification grid size used when a certificate is built.
pub const DEFAULT_GRID: usize = 1000;

/// `(1 − ‖x‖²) u(x) + v(x)` with `u = β_uᵀ U β_u` and `v = β_vᵀ V β_v` over
/// monomial vectors `β_u`, `β_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSos {
    pub u_basis: Vec<Vec<u32>>,
    pub u_gram: DMatrix<f64>,
    pub v_basis: Vec<Vec<u32>>,
    pub v_gram: DMatrix<f64>,
}

impl BallSos {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let form = |basis: &[Vec<u32>], g: &DMatrix<f64>| {
            let b: Vec<f64> = basis.iter().map(|e| monomial(e, x)).collect();
            let mut acc = 0.0;
            for (i, bi) in b.iter().enumerate() {
                for (j, bj) in b.iter().enumerate() {
                    acc += g[(i, j)] * bi * bj;
                }
            }
            acc
        };
        let defect = 1.0 - x.iter().map(|v| v * v).sum::<f64>();
        defect * form(&self.u_basis, &self.u_gram) + form(&self.v_basis, &self.v_gram)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let lmin = |g: &DMatrix<f64>| if g.is_empty() { f64::INFINITY } else { sym_eigen(g).values[0] };
        lmin(&self.u_gram).min(lmin(&self.v_gram))
    }

    pub fn to_poly(&self, n: usize) -> MultiPoly {
        let mut p = MultiPoly::ball_defect(n).mul(&MultiPoly::from_gram(n, &self.u_basis, &self.u_gram));
        p.add_scaled(&MultiPoly::from_gram(n, &self.v_basis, &self.v_gram), 1.0);
        p
    }

    fn scaled(&self, a: f64) -> Self {
        Self { u_gram: &self.u_gram * a, v_gram: &self.v_gram * a, ..self.clone() }
    }

    /// Part of `βᵀ G β` even in `t`, for `β` the lifted basis.
    fn from_lifted(lb: &LiftedBasis, g: &DMatrix<f64>) -> Self {
        let ne = lb.even.len();
        let no = lb.odd.len();
        let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
        Self {
            u_basis: lb.odd.clone(),
            u_gram: sym(g.view((ne, ne), (no, no)).into_owned()),
            v_basis: lb.even.clone(),
            v_gram: sym(g.view((0, 0), (ne, ne)).into_owned()),
        }
    }
}

/// Certificate of `−c = Σ_j g_j q_j + q_0` on the ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub c: f64,
    /// Hierarchy level `s` of the relaxation.
    pub degree: u32,
    pub dim: usize,
    pub q0: BallSos,
    /// `q_1, …, q_p`.
    pub q: Vec<BallSos>,
    /// Relaxed value of `max_x min_j g_j(x)`.
    pub value: f64,
    /// Largest coefficient of the identity defect removed from `v_0` after
    /// rounding the solver output.
    pub correction: f64,
    pub residual: f64,
    pub min_eigenvalue: f64,
    /// The `m''` points of the relaxation; the first `m` and `m'` carry the
    /// empirical features the multipliers were read in.
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
}

impl Certificate {
    /// Same certificate scaled to `c = 1`.
    pub fn normalized(&self) -> Self {
        let a = 1.0 / self.c;
        Self {
            c: 1.0,
            q0: self.q0.scaled(a),
            q: self.q.iter().map(|q| q.scaled(a)).collect(),
            min_eigenvalue: self.min_eigenvalue * a,
            ..self.clone()
        }
    }

    /// Every Gram matrix, `u` before `v`, `q_0` first.
    pub fn gram_blocks(&self) -> Vec<&DMatrix<f64>> {
        let mut out = Vec::with_capacity(2 * (self.q.len() + 1));
        for q in core::iter::once(&self.q0).chain(&self.q) {
            out.push(&q.u_gram);
            out.push(&q.v_gram);
        }
        out
    }

    fn blocks_min_eigenvalue(&self) -> f64 {
        core::iter::once(&self.q0).chain(&self.q).map(BallSos::min_eigenvalue).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Certificate(Box<Certificate>),
    /// The relaxation did not certify emptiness; `value` is the relaxed
    /// `max_x min_j g_j(x)`, NaN when the relaxation could not be formed or
    /// solved at this level (see `note`).
    Undecided { value: f64, note: Option<String> },
}

pub fn emptiness_certificate(g_list: &[Polynomial], s: u32) -> Result<Outcome> {
    emptiness_certificate_seeded(g_list, s, 0)
}

pub fn emptiness_certificate_seeded(g_list: &[Polynomial], s: u32, seed: u64) -> Result<Outcome> {
    let d = ball_dim(g_list)?;
    let set = SimpleSet::ball(d, s)?;
    let obj = BilinearObjective::finite(&set, g_list.iter().map(|g| g.scaled(-1.0)).collect())?;
    obj.check_representable()?;
    let gpoly: Vec<MultiPoly> = g_list.iter().map(MultiPoly::from_polynomial).collect::<Result<_>>()?;

    let (m, m1, m2) = set.dims();
    // High levels on the ball exhaust double precision before the sample
    // conditioning test passes; that level cannot decide anything.
    let relax = match set.sample_points(m2, seed).and_then(|pts| relax::finite(&obj, pts.points())) {
        Ok(r) => r,
        Err(Error::Conditioning(msg)) => return Ok(Outcome::Undecided { value: f64::NAN, note: Some(msg) }),
        Err(e) => return Err(e),
    };
    let sol = solve(&relax.problem, &SolveOptions::default())?;
    if !sol.is_optimal() {
        return Ok(Outcome::Undecided {
            value: f64::NAN,
            note: Some(format!("solver ended with status {:?}", sol.status)),
        });
    }
    let value = -sol.objective;
    if value >= -DECISION_MARGIN {
        return Ok(Outcome::Undecided { value, note: None });
    }
    let c = sol.objective;

    // Multipliers in the lifted monomial basis.
    let pts = &relax.points;
    let (lb1, c1) = ball_kernel_expansion(&pts[..m], s, 1);
    let f1 = relax.features.whitening().as_matrix() * c1;
    let feat2 = EmpiricalFeatures::new(&set, pts, m1, 2)?;
    let (lb2, c2) = ball_kernel_expansion(&pts[..m1], s, 2);
    let f2 = feat2.whitening().as_matrix() * c2;
    let q: Vec<BallSos> =
        (0..g_list.len()).map(|j| BallSos::from_lifted(&lb1, &(f1.transpose() * &sol.duals[j] * &f1))).collect();
    // ‖φ̃₂(x)‖² = k(x, x)² = 1, so moving c/2 into q_0 as c/2·I keeps the
    // identity and makes its Gram matrix definite.
    let kappa = 0.5 * c;
    let a = &sol.duals[relax.moment_block] + DMatrix::identity(m1, m1) * kappa;
    let mut q0 = BallSos::from_lifted(&lb2, &(f2.transpose() * a * &f2));
    let c = c - kappa;

    let mut defect = MultiPoly::constant(d, -c);
    for (g, qj) in gpoly.iter().zip(&q) {
        defect.add_scaled(&g.mul(&qj.to_poly(d)), -1.0);
    }
    defect.add_scaled(&q0.to_poly(d), -1.0);
    let correction = defect.max_abs();
    if let Err(e) = absorb(&mut q0.v_gram, &q0.v_basis, &defect) {
        return Ok(Outcome::Undecided { value, note: Some(format!("{e}")) });
    }

    let mut cert = Certificate {
        c,
        degree: s,
        dim: d,
        q0,
        q,
        value,
        correction,
        residual: 0.0,
        min_eigenvalue: 0.0,
        points: relax.points.clone(),
        seed,
    };
    cert.min_eigenvalue = cert.blocks_min_eigenvalue();
    cert.residual = verify_certificate(&cert, g_list, DEFAULT_GRID)?;
    if cert.residual > ACCEPT_RESIDUAL || cert.min_eigenvalue < ACCEPT_EIGENVALUE * cert.c.max(1.0) {
        return Ok(Outcome::Undecided {
            value,
            note: Some(format!(
                "assembled certificate failed verification (residual {:e}, min eigenvalue {:e})",
                cert.residual, cert.min_eigenvalue
            )),
        });
    }
    Ok(Outcome::Certificate(Box::new(cert)))
}

/// Largest violation of `−1 = Σ_j g_j q_j / c + q_0 / c` over a
/// low-discrepancy grid of `grid_n` points of the ball. Polynomials and Gram
/// forms are evaluated directly.
pub fn verify_certificate(cert: &Certificate, g_list: &[Polynomial], grid_n: usize) -> Result<f64> {
    let d = ball_dim(g_list)?;
    if d != cert.dim || g_list.len() != cert.q.len() {
        bail!(
            Dimension,
            "certificate has {} multipliers in dimension {}, got {} functions in dimension {d}",
            cert.q.len(),
            cert.dim,
            g_list.len()
        );
    }
    if grid_n == 0 {
        bail!(Argument, "the verification grid needs at least one point");
    }
    let mut worst: f64 = 0.0;
    for x in ball_grid(d, grid_n) {
        let mut rhs = cert.q0.evaluate(&x);
        for (g, q) in g_list.iter().zip(&cert.q) {
            rhs += g.evaluate(&x)? * q.evaluate(&x);
        }
        worst = worst.max((1.0 + rhs / cert.c).abs());
    }
    Ok(worst)
}

/// `n` points of the unit ball from an additive Kronecker sequence on the
/// cube, starting at the center.
pub fn ball_grid(d: usize, n: usize) -> Vec<Vec<f64>> {
    let steps = kronecker_steps(d);
    let mut out = Vec::with_capacity(n);
    let mut k = 0u64;
    while out.len() < n {
        let x: Vec<f64> = steps.iter().map(|a| 2.0 * (0.5 + k as f64 * a).fract() - 1.0).collect();
        if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            out.push(x);
        }
        k += 1;
    }
    out
}

fn ball_dim(g_list: &[Polynomial]) -> Result<usize> {
    let Some(first) = g_list.first() else {
        bail!(Argument, "at least one function is required");
    };
    let dim_of = |g: &Polynomial| match g.domain().kind() {
        SetKind::Ball { d } => Some(*d),
        _ => None,
    };
    let Some(d) = dim_of(first) else {
        bail!(Argument, "certificates are built for functions on the unit ball");
    };
    if g_list.iter().any(|g| dim_of(g) != Some(d)) {
        bail!(Dimension, "all functions must live on the same ball");
    }
    Ok(d)
}

/// Adds to `gram` the least-norm symmetric matrix `R` with
/// `β_vᵀ R β_v = p`.
fn absorb(gram: &mut DMatrix<f64>, basis: &[Vec<u32>], p: &MultiPoly) -> Result<()> {
    let mut pairs: BTreeMap<Vec<u32>, Vec<(usize, usize)>> = BTreeMap::new();
    for (a, ea) in basis.iter().enumerate() {
        for (b, eb) in basis.iter().enumerate() {
            pairs.entry(ea.iter().zip(eb).map(|(u, v)| u + v).collect()).or_default().push((a, b));
        }
    }
    for (e, coef) in p.terms() {
        let Some(list) = pairs.get(e) else {
            return Err(Error::Dimension(format!("monomial {e:?} is outside the span of the v_0 Gram form")));
        };
        let share = coef / list.len() as f64;
        for &(a, b) in list {
            gram[(a, b)] += share;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sosmin::MonoTerm;
    use alloc::vec;

    fn linear(d: usize, c0: f64, coef: &[f64]) -> Polynomial {
        let ball = SimpleSet::ball(d, 1).unwrap();
        let mut terms = vec![MonoTerm { exp: vec![0; d], coef: c0 }];
        for (i, c) in coef.iter().enumerate() {
            let mut e = vec![0; d];
            e[i] = 1;
            terms.push(MonoTerm { exp: e, coef: *c });
        }
        Polynomial::monomial(&ball, terms).unwrap()
    }

    #[test]
    fn x_minus_two_is_certified() {
        let g = vec![linear(1, -2.0, &[1.0])];
        let Outcome::Certificate(cert) = emptiness_certificate(&g, 1).unwrap() else { panic!("expected a certificate") };
        assert!((cert.value + 1.0).abs() < 1e-6, "{}", cert.value);
        assert!(cert.residual <= 1e-10, "{}", cert.residual);
        assert!(cert.min_eigenvalue >= -1e-9);
        let n = cert.normalized();
        assert_eq!(n.c, 1.0);
        assert!(verify_certificate(&n, &g, 500).unwrap() <= 1e-10);
    }

    #[test]
    fn nonempty_set_is_undecided() {
        let g = vec![linear(1, 0.0, &[1.0])];
        for s in 1..=4 {
            match emptiness_certificate(&g, s).unwrap() {
                Outcome::Undecided { value, note } => {
                    assert!(value >= -DECISION_MARGIN || (value.is_nan() && note.is_some()), "{value}")
                }
                Outcome::Certificate(_) => panic!("certificate for a nonempty set at s = {s}"),
            }
        }
    }

    #[test]
    fn corrupted_certificate_fails() {
        let g = vec![linear(2, -1.1, &[1.0, 0.0])];
        let Outcome::Certificate(cert) = emptiness_certificate(&g, 1).unwrap() else { panic!("expected a certificate") };
        assert!((cert.value + 0.1).abs() < 1e-5, "{}", cert.value);
        let mut bad = (*cert).clone();
        bad.q[0].v_gram[(0, 1)] += 0.1;
        bad.q[0].v_gram[(1, 0)] += 0.1;
        assert!(verify_certificate(&bad, &g, 1000).unwrap() > 1e-3);
    }

    #[test]
    fn accepted_certificates_are_sound() {
        let cases = [
            vec![linear(2, -1.1, &[1.0, 0.0])],
            vec![linear(2, -0.8, &[1.0, 0.0]), linear(2, -0.8, &[-1.0, 0.0])],
        ];
        for g in cases {
            let Outcome::Certificate(cert) = emptiness_certificate(&g, 1).unwrap() else { panic!("expected a certificate") };
            assert!(cert.residual <= ACCEPT_RESIDUAL && cert.min_eigenvalue >= -1e-8);
            let n = cert.normalized();
            let r = verify_certificate(&n, &g, 2000).unwrap();
            assert!((r - cert.residual).abs() <= 1e-9, "{r} vs {}", cert.residual);
            // On the ball some g_j is negative everywhere.
            let worst = ball_grid(2, 100_000)
                .iter()
                .map(|x| g.iter().map(|g| g.evaluate(x).unwrap()).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(worst < 0.0 && worst <= cert.value + 1e-6, "{worst} vs {}", cert.value);
        }
    }

    #[test]
    fn preconditions() {
        assert!(matches!(emptiness_certificate(&[], 1), Err(Error::Argument(_))));
        let t = SimpleSet::trig(1, 1).unwrap();
        assert!(emptiness_certificate(&[Polynomial::constant(&t, 1.0)], 1).is_err());
    }

    #[test]
    fn grid_stays_in_ball() {
        let g = ball_grid(2, 300);
        assert_eq!(g.len(), 300);
        assert!(g.iter().all(|x| x[0] * x[0] + x[1] * x[1] <= 1.0));
        assert_eq!(g[0], vec![0.0, 0.0]);
    }
}
