//! Sparse polynomials in `x ∈ R^d`, and the expansion of ball kernels in the
//! monomials of the lifted point `(x, t)` with `t = √(1 − ‖x‖²)`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // float math outside std
use num_traits::Float as _;

use crate::error::{bail, Result};
use crate::sosmin::Polynomial;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultiPoly {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl MultiPoly {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(vec![0; n], c);
        p
    }

    /// `Σ_i coef_i x_i + c0`.
    pub fn affine(c0: f64, coef: &[f64]) -> Self {
        let n = coef.len();
        let mut p = Self::constant(n, c0);
        for (i, c) in coef.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, *c);
        }
        p
    }

    /// `1 − ‖x‖²`.
    pub fn ball_defect(n: usize) -> Self {
        let mut p = Self::constant(n, 1.0);
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 2;
            p.add_term(e, -1.0);
        }
        p
    }

    pub fn from_polynomial(f: &Polynomial) -> Result<Self> {
        let Some(terms) = f.monomial_terms() else {
            bail!(Unsupported, "certificates need polynomials given by monomial coefficients");
        };
        let mut p = Self::zero(f.domain().ambient_dim());
        for t in terms {
            p.add_term(t.exp, t.coef);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, f64> {
        &self.terms
    }

    pub fn add_term(&mut self, exp: Vec<u32>, c: f64) {
        if c != 0.0 {
            *self.terms.entry(exp).or_insert(0.0) += c;
        }
    }

    pub fn add_scaled(&mut self, other: &Self, a: f64) {
        for (e, c) in &other.terms {
            self.add_term(e.clone(), a * c);
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(ea.iter().zip(eb).map(|(a, b)| a + b).collect(), ca * cb);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * monomial(e, x)).sum()
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `Σ_ab G_ab x^{a+b}`.
    pub fn from_gram(n: usize, basis: &[Vec<u32>], gram: &DMatrix<f64>) -> Self {
        let mut p = Self::zero(n);
        for (a, ea) in basis.iter().enumerate() {
            for (b, eb) in basis.iter().enumerate() {
                p.add_term(ea.iter().zip(eb).map(|(u, v)| u + v).collect(), gram[(a, b)]);
            }
        }
        p
    }
}

pub fn monomial(exp: &[u32], x: &[f64]) -> f64 {
    exp.iter().zip(x).map(|(e, v)| v.powi(*e as i32)).product()
}

/// Exponents of total degree at most `deg` in `n` variables, by degree and
/// then lexicographically.
pub fn monomials(n: usize, deg: u32) -> Vec<Vec<u32>> {
    fn fill(rest: u32, i: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i + 1 == cur.len() {
            cur[i] = rest;
            out.push(cur.clone());
            return;
        }
        for e in (0..=rest).rev() {
            cur[i] = e;
            fill(rest - e, i + 1, cur, out);
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    for k in 0..=deg {
        let mut cur = vec![0; n];
        fill(k, 0, &mut cur, &mut out);
    }
    out
}

/// Reduced basis of polynomials of degree `deg` in `(x, t)` modulo
/// `t² = 1 − ‖x‖²`: the monomials `x^a` (`|a| ≤ deg`) followed by `t·x^a`
/// (`|a| < deg`).
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedBasis {
    pub even: Vec<Vec<u32>>,
    pub odd: Vec<Vec<u32>>,
}

impl LiftedBasis {
    pub fn new(n: usize, deg: u32) -> Self {
        let odd = if deg == 0 { Vec::new() } else { monomials(n, deg - 1) };
        Self { even: monomials(n, deg), odd }
    }

    pub fn len(&self) -> usize {
        self.even.len() + self.odd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.even.is_empty()
    }

    /// Coefficients of `E + t·O` in this basis.
    fn coefficients(&self, e: &MultiPoly, o: &MultiPoly) -> Vec<f64> {
        let get = |p: &MultiPoly, k: &Vec<u32>| p.terms.get(k).copied().unwrap_or(0.0);
        self.even.iter().map(|k| get(e, k)).chain(self.odd.iter().map(|k| get(o, k))).collect()
    }
}

/// Matrix `C` with `k(b_i, x)^power = Σ_c C_ic β_c(x, t)` for the ball kernel
/// of level `s`, where `β` is the [`LiftedBasis`] of degree `power·s`.
pub fn ball_kernel_expansion(basis_pts: &[Vec<f64>], s: u32, power: u32) -> (LiftedBasis, DMatrix<f64>) {
    let n = basis_pts.first().map_or(0, |b| b.len());
    let deg = s * power;
    let lb = LiftedBasis::new(n, deg);
    let defect = MultiPoly::ball_defect(n);
    let mut c = DMatrix::zeros(basis_pts.len(), lb.len());
    for (i, b) in basis_pts.iter().enumerate() {
        let tau = (1.0 - b.iter().map(|v| v * v).sum::<f64>()).max(0.0).sqrt();
        let half: Vec<f64> = b.iter().map(|v| 0.5 * v).collect();
        let l = MultiPoly::affine(0.5, &half);
        // (E + tO)(l + τt/2) = (lE + τ/2 (1 − ‖x‖²) O) + t (lO + τ/2 E).
        let mut e = MultiPoly::constant(n, 1.0);
        let mut o = MultiPoly::zero(n);
        for _ in 0..deg {
            let mut ne = l.mul(&e);
            ne.add_scaled(&defect.mul(&o), 0.5 * tau);
            let mut no = l.mul(&o);
            no.add_scaled(&e, 0.5 * tau);
            e = ne;
            o = no;
        }
        for (k, v) in lb.coefficients(&e, &o).into_iter().enumerate() {
            c[(i, k)] = v;
        }
    }
    (lb, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simpleset::SimpleSet;

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(1, 3).len(), 4);
        assert_eq!(monomials(2, 2), vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(monomials(3, 2).len(), 10);
        // Lifted basis sizes match the ball feature dimensions.
        for (d, s) in [(1, 1), (1, 3), (2, 2), (3, 1)] {
            let set = SimpleSet::ball(d, s).unwrap();
            assert_eq!(LiftedBasis::new(d, s).len(), set.dims().0);
            assert_eq!(LiftedBasis::new(d, 2 * s).len(), set.dims().1);
        }
    }

    #[test]
    fn expansion_reproduces_kernel() {
        for (d, s, power) in [(1usize, 1u32, 1u32), (1, 2, 2), (2, 2, 1), (2, 1, 2)] {
            let set = SimpleSet::ball(d, s).unwrap();
            let pts = set.sample_points(6, 4).unwrap();
            let (lb, c) = ball_kernel_expansion(pts.points(), s, power);
            for x in pts.points() {
                let t = (1.0 - x.iter().map(|v| v * v).sum::<f64>()).max(0.0).sqrt();
                let beta: Vec<f64> = lb
                    .even
                    .iter()
                    .map(|e| monomial(e, x))
                    .chain(lb.odd.iter().map(|e| t * monomial(e, x)))
                    .collect();
                for (i, b) in pts.points().iter().enumerate() {
                    let direct = set.kernel(b, x).unwrap().powi(power as i32);
                    let via: f64 = (0..lb.len()).map(|k| c[(i, k)] * beta[k]).sum();
                    assert!((direct - via).abs() < 1e-12, "{direct} vs {via}");
                }
            }
        }
    }

    #[test]
    fn product_and_gram() {
        let p = MultiPoly::affine(1.0, &[2.0]);
        let q = p.mul(&p);
        assert_eq!(q.eval(&[0.5]), 4.0);
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let r = MultiPoly::from_gram(1, &monomials(1, 1), &g);
        assert_eq!(r, q);
    }
}
