//! Fejér-product smoothing of matrix-valued trigonometric polynomials and
//! the tightness constant of matrix sums of squares.
//!
//! With `q̂(ω) = a ∏_i (1 − |ω_i|/s)₊` and `(q̂ ∗ q̂)(0) = 1`, the operator
//! `T h = ∫ |q(· − y)|² h(y) dy` maps PSD-valued `h` to sums of squares of
//! degree `s` and acts on Fourier coefficients by `(q̂ ∗ q̂)(ω)`. A polynomial
//! `f` of degree `2r` with `f ⪰ ε(s) Σ_{ω≠0} ‖f̂(ω)‖_op` has a PSD preimage
//! `h = T⁻¹ f`, where `ε(s) = (1 − 6r²/s²)^{−d} − 1`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // float math outside std
use num_traits::Float as _;

use crate::error::{bail, Result};
use crate::matalg::sym_eigen;

/// Slack allowed by [`verify_bound`] on top of `ε(s)`.
pub const BOUND_SLACK: f64 = 1e-12;

/// `ε(s) = (1 − 6r²/s²)^{−d} − 1`, defined for `s ≥ 3r ≥ 3`.
///
/// Evaluated as the single rounding of `(s^{2d} − (s² − 6r²)^d) / (s² − 6r²)^d`
/// when the integers fit, so `ε(1, 1, 6)` is the double nearest to `0.2`.
pub fn epsilon_bound(d: u32, r: u32, s: u32) -> Result<f64> {
    if d == 0 || r == 0 {
        bail!(Argument, "dimension and degree must be positive, got d = {d}, r = {r}");
    }
    if s < 3 * r {
        bail!(Domain, "the bound needs s ≥ 3r, got s = {s}, r = {r}");
    }
    let s2 = i128::from(s) * i128::from(s);
    let c = s2 - 6 * i128::from(r) * i128::from(r);
    if let (Some(num), Some(den)) = (s2.checked_pow(d), c.checked_pow(d)) {
        return Ok((num - den) as f64 / den as f64);
    }
    let ratio = 1.0 - 6.0 * f64::from(r * r) / (f64::from(s) * f64::from(s));
    Ok(ratio.powi(-(d as i32)) - 1.0)
}

/// The kernel `q̂(ω) = a ∏_i (1 − |ω_i|/s)₊` normalized by `(q̂ ∗ q̂)(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FejerKernel {
    d: usize,
    s: u32,
    /// `Σ_k (s − |k|)(s − |ω − k|)` for `ω = 0, …, 2s`.
    numerators: Vec<i128>,
}

impl FejerKernel {
    pub fn new(d: usize, s: u32) -> Result<Self> {
        if d == 0 || s == 0 {
            bail!(Argument, "dimension and degree must be positive, got d = {d}, s = {s}");
        }
        let si = i128::from(s);
        let tri = |k: i128| (si - k.abs()).max(0);
        let numerators = (0..=2 * si).map(|w| (w - si..=si).map(|k| tri(k) * tri(w - k)).sum()).collect();
        Ok(Self { d, s, numerators })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> u32 {
        self.s
    }

    /// The constant `a`.
    pub fn normalization(&self) -> f64 {
        let s = f64::from(self.s);
        (s * s / self.numerators[0] as f64).powf(0.5 * self.d as f64)
    }

    /// `q̂(ω)`.
    pub fn coefficient(&self, w: &[i64]) -> f64 {
        let s = f64::from(self.s);
        self.normalization() * w.iter().map(|&k| (1.0 - k.unsigned_abs() as f64 / s).max(0.0)).product::<f64>()
    }

    /// `(q̂ ∗ q̂)(ω)`, exactly `1` at `ω = 0` and zero outside `‖ω‖_∞ < 2s`.
    pub fn autocorrelation(&self, w: &[i64]) -> f64 {
        let den = self.numerators[0] as f64;
        w.iter()
            .map(|&k| {
                let k = k.unsigned_abs() as usize;
                self.numerators.get(k).map_or(0.0, |&n| n as f64 / den)
            })
            .product()
    }
}

/// Non-zero values of `q̂ ∗ q̂` on `‖ω‖_∞ ≤ 2s`.
pub fn fejer_autocorrelation(d: usize, s: u32) -> Result<BTreeMap<Vec<i64>, f64>> {
    let q = FejerKernel::new(d, s)?;
    let mut out = BTreeMap::new();
    for w in box_points(d, 2 * i64::from(s)) {
        let v = q.autocorrelation(&w);
        if v != 0.0 {
            out.insert(w, v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    /// `max_{‖ω‖_∞ ≤ 2r} |1/(q̂ ∗ q̂)(ω) − 1|`.
    pub max_dev: f64,
    /// `ε(s)`.
    pub bound: f64,
    pub ok: bool,
}

pub fn verify_bound(d: u32, r: u32, s: u32) -> Result<BoundCheck> {
    let bound = epsilon_bound(d, r, s)?;
    let q = FejerKernel::new(d as usize, s)?;
    let max_dev = box_points(d as usize, 2 * i64::from(r))
        .iter()
        .map(|w| (1.0 / q.autocorrelation(w) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(BoundCheck { max_dev, bound, ok: max_dev <= bound + BOUND_SLACK })
}

/// Integer points of `[−k, k]^d`.
fn box_points(d: usize, k: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(d)];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-k..=k).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// `f(x) = Σ_ω C_ω cos 2πωᵀx + S_ω sin 2πωᵀx` with symmetric `n × n`
/// coefficients, over `ω = 0` and frequencies whose first non-zero entry is
/// positive. In complex form `f̂(±ω) = (C_ω ∓ i S_ω)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTrigPoly {
    d: usize,
    n: usize,
    terms: BTreeMap<Vec<i64>, (DMatrix<f64>, DMatrix<f64>)>,
}

impl MatrixTrigPoly {
    pub fn zero(d: usize, n: usize) -> Self {
        Self { d, n, terms: BTreeMap::new() }
    }

    /// Scalar polynomial from `(ω, cos, sin)` triples.
    pub fn scalar(d: usize, terms: &[(Vec<i64>, f64, f64)]) -> Result<Self> {
        let mut p = Self::zero(d, 1);
        for (w, c, s) in terms {
            p.add_term(w, DMatrix::from_element(1, 1, *c), DMatrix::from_element(1, 1, *s))?;
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Vec<i64>, (DMatrix<f64>, DMatrix<f64>)> {
        &self.terms
    }

    /// Adds `C cos 2πωᵀx + S sin 2πωᵀx`. Frequencies in the negative half are
    /// folded onto `−ω`.
    pub fn add_term(&mut self, w: &[i64], c: DMatrix<f64>, s: DMatrix<f64>) -> Result<()> {
        if w.len() != self.d {
            bail!(Dimension, "frequency has {} entries, expected {}", w.len(), self.d);
        }
        for m in [&c, &s] {
            if m.shape() != (self.n, self.n) {
                bail!(Dimension, "coefficient is {:?}, expected {n}x{n}", m.shape(), n = self.n);
            }
            if (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
                bail!(Argument, "coefficients must be symmetric");
            }
        }
        let (w, s) = match w.iter().find(|&&k| k != 0) {
            None => (w.to_vec(), DMatrix::zeros(self.n, self.n)),
            Some(&k) if k < 0 => (w.iter().map(|k| -k).collect(), -s),
            Some(_) => (w.to_vec(), s),
        };
        let n = self.n;
        let e = self.terms.entry(w).or_insert_with(|| (DMatrix::zeros(n, n), DMatrix::zeros(n, n)));
        e.0 += c;
        e.1 += s;
        Ok(())
    }

    /// Largest `‖ω‖_∞`.
    pub fn degree(&self) -> u64 {
        self.terms.keys().flat_map(|w| w.iter().map(|k| k.unsigned_abs())).max().unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (w, (c, s)) in &self.terms {
            let t = 2.0 * core::f64::consts::PI * w.iter().zip(x).map(|(k, v)| *k as f64 * v).sum::<f64>();
            out += c * t.cos() + s * t.sin();
        }
        out
    }

    /// `Σ_{ω≠0} ‖f̂(ω)‖_op`, both signs of `ω` included.
    pub fn coefficient_norm_sum(&self) -> f64 {
        let n = self.n;
        self.terms
            .iter()
            .filter(|(w, _)| w.iter().any(|&k| k != 0))
            .map(|(_, (c, s))| {
                // ‖C − iS‖_op through its real form [[C, S], [−S, C]].
                let mut r = DMatrix::zeros(2 * n, 2 * n);
                r.view_mut((0, 0), (n, n)).copy_from(c);
                r.view_mut((n, n), (n, n)).copy_from(c);
                r.view_mut((0, n), (n, n)).copy_from(s);
                r.view_mut((n, 0), (n, n)).copy_from(&(-s));
                let top = sym_eigen(&(r.transpose() * &r)).values.max();
                top.max(0.0).sqrt()
            })
            .sum()
    }

    /// Smallest eigenvalue of `f` over the grid `{k/grid_n}^d`.
    pub fn grid_min_eigenvalue(&self, grid_n: usize) -> f64 {
        let mut worst = f64::INFINITY;
        for x in grid(self.d, grid_n) {
            let m = self.evaluate(&x);
            let lmin = if self.n == 0 { 0.0 } else { sym_eigen(&((&m + m.transpose()) * 0.5)).values[0] };
            worst = worst.min(lmin);
        }
        worst
    }

    fn map_coefficients(&self, mut f: impl FnMut(&[i64]) -> Result<f64>) -> Result<Self> {
        let mut out = Self::zero(self.d, self.n);
        for (w, (c, s)) in &self.terms {
            let a = f(w)?;
            if a != 0.0 {
                out.terms.insert(w.clone(), (c * a, s * a));
            }
        }
        Ok(out)
    }
}

fn grid(d: usize, n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(d)];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |k| {
                    let mut q = p.clone();
                    q.push(k as f64 / n as f64);
                    q
                })
            })
            .collect();
    }
    out
}

/// `T h`: every Fourier coefficient multiplied by `(q̂ ∗ q̂)(ω)`.
pub fn sos_project(h: &MatrixTrigPoly, s: u32) -> Result<MatrixTrigPoly> {
    let q = FejerKernel::new(h.d, s)?;
    h.map_coefficients(|w| Ok(q.autocorrelation(w)))
}

/// `T⁻¹ f`: every Fourier coefficient divided by `(q̂ ∗ q̂)(ω)`.
pub fn sos_preimage(f: &MatrixTrigPoly, s: u32) -> Result<MatrixTrigPoly> {
    let q = FejerKernel::new(f.d, s)?;
    f.map_coefficients(|w| {
        let a = q.autocorrelation(w);
        if a == 0.0 {
            bail!(Domain, "frequency {w:?} is outside the range of the degree-{s} smoothing");
        }
        Ok(1.0 / a)
    })
}

/// `min_x λ_min(f(x)) − ε(s) Σ_{ω≠0} ‖f̂(ω)‖_op` on a grid: when positive
/// (and the grid is fine enough), `f` is a matrix sum of squares of degree `s`.
pub fn hypothesis_margin(f: &MatrixTrigPoly, r: u32, s: u32, grid_n: usize) -> Result<f64> {
    if f.degree() > 2 * u64::from(r) {
        bail!(Argument, "polynomial has degree {} > 2r = {}", f.degree(), 2 * r);
    }
    let eps = epsilon_bound(f.d as u32, r, s)?;
    Ok(f.grid_min_eigenvalue(grid_n) - eps * f.coefficient_norm_sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct `d`-dimensional autocorrelation of the unnormalized triangle.
    fn brute_autocorrelation(d: usize, s: u32, w: &[i64]) -> f64 {
        let s = s as i64;
        let tri = |v: &[i64]| v.iter().map(|&k| ((s - k.abs()).max(0)) as f64 / s as f64).product::<f64>();
        let pts = box_points(d, s);
        let raw = |w: &[i64]| {
            pts.iter()
                .map(|k| {
                    let shifted: Vec<i64> = k.iter().zip(w).map(|(a, b)| b - a).collect();
                    tri(k) * tri(&shifted)
                })
                .sum::<f64>()
        };
        raw(w) / raw(&vec![0; d])
    }

    #[test]
    fn epsilon_values() {
        assert_eq!(epsilon_bound(1, 1, 6).unwrap(), 0.2);
        assert_eq!(epsilon_bound(1, 1, 3).unwrap(), 2.0);
        assert!((epsilon_bound(2, 1, 10).unwrap() - (1.0 / (0.94f64 * 0.94) - 1.0)).abs() < 1e-15);
        assert!(matches!(epsilon_bound(1, 1, 2), Err(crate::Error::Domain(_))));
        assert!(epsilon_bound(1, 0, 5).is_err());
    }

    #[test]
    fn autocorrelation_matches_direct_sum() {
        assert_eq!(fejer_autocorrelation(1, 1).unwrap().into_iter().collect::<Vec<_>>(), vec![(vec![0], 1.0)]);
        for (d, s) in [(1usize, 2u32), (1, 6), (2, 3), (2, 5)] {
            let ac = fejer_autocorrelation(d, s).unwrap();
            assert_eq!(ac[&vec![0; d]], 1.0);
            for (w, v) in &ac {
                assert!((v - brute_autocorrelation(d, s, w)).abs() < 1e-13, "{w:?}");
            }
        }
        let q = FejerKernel::new(1, 6).unwrap();
        let dev = (-2..=2).map(|w| (1.0 / q.autocorrelation(&[w]) - 1.0).abs()).fold(0.0, f64::max);
        assert!(dev <= 0.2);
        // a² Σ q̂² = 1.
        let total: f64 = (-6..=6).map(|w| q.coefficient(&[w]).powi(2)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bound_holds_on_grid() {
        for d in 1..=2 {
            for r in 1..=2 {
                for s in 3 * r..=12 {
                    let b = verify_bound(d, r, s).unwrap();
                    assert!(b.ok, "(d, r, s) = ({d}, {r}, {s}): {b:?}");
                }
            }
        }
        assert_eq!(verify_bound(1, 2, 6).unwrap().bound, 2.0);
    }

    #[test]
    fn asymptotic_rate() {
        for (d, r) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            let ratio = 200.0f64.powi(2) * epsilon_bound(d, r, 200).unwrap() / f64::from(6 * r * r * d);
            assert!((ratio - 1.0).abs() <= 0.05, "{ratio}");
        }
    }

    #[test]
    fn round_trip_and_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut f = MatrixTrigPoly::zero(2, 2);
        for w in box_points(2, 2) {
            let mut sym = || {
                let m = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
                &m + m.transpose()
            };
            let (c, s) = (sym(), sym());
            f.add_term(&w, c, s).unwrap();
        }
        let back = sos_project(&sos_preimage(&f, 6).unwrap(), 6).unwrap();
        for (w, (c, s)) in f.terms() {
            let (c2, s2) = &back.terms()[w];
            assert!((c - c2).amax() <= 1e-12 && (s - s2).amax() <= 1e-12);
        }
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let mut k = MatrixTrigPoly::zero(1, 2);
        k.add_term(&[0], m.clone(), DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(sos_project(&k, 4).unwrap().evaluate(&[0.3]), m);
    }

    #[test]
    fn negative_frequencies_fold() {
        let a = MatrixTrigPoly::scalar(1, &[(vec![-2], 0.5, 0.25)]).unwrap();
        let b = MatrixTrigPoly::scalar(1, &[(vec![2], 0.5, -0.25)]).unwrap();
        assert_eq!(a, b);
        assert!((a.evaluate(&[0.1])[(0, 0)] - (0.5 * (0.4 * core::f64::consts::PI).cos() - 0.25 * (0.4 * core::f64::consts::PI).sin())).abs() < 1e-14);
        // f̂(±2) = (0.5 ± 0.25i)/2.
        assert!((a.coefficient_norm_sum() - (0.25f64 + 0.0625).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn shifted_cosine_preimage_is_nonnegative() {
        let f = MatrixTrigPoly::scalar(1, &[(vec![0], 1.3, 0.0), (vec![2], 1.0, 0.0)]).unwrap();
        assert!((f.coefficient_norm_sum() - 1.0).abs() < 1e-12);
        assert!(hypothesis_margin(&f, 1, 6, 10_000).unwrap() >= 0.1 - 1e-9);
        let h = sos_preimage(&f, 6).unwrap();
        assert!(h.grid_min_eigenvalue(10_000) >= -1e-9);
        // 1 + cos 4πx violates the hypothesis.
        let g = MatrixTrigPoly::scalar(1, &[(vec![0], 1.0, 0.0), (vec![2], 1.0, 0.0)]).unwrap();
        assert!(hypothesis_margin(&g, 1, 6, 10_000).unwrap() < 0.0);
    }

    #[test]
    fn matrix_preimage_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut accepted = 0;
        for _ in 0..40 {
            let mut f = MatrixTrigPoly::zero(1, 2);
            for w in 1..=2i64 {
                let mut sym = || {
                    let m = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-0.3..0.3));
                    &m + m.transpose()
                };
                let (c, s) = (sym(), sym());
                f.add_term(&[w], c, s).unwrap();
            }
            let shift = rng.random_range(1.0..3.0);
            f.add_term(&[0], DMatrix::identity(2, 2) * shift, DMatrix::zeros(2, 2)).unwrap();
            let eps = epsilon_bound(1, 1, 6).unwrap();
            let need = (eps + 0.05) * f.coefficient_norm_sum();
            if f.grid_min_eigenvalue(2000) < need {
                continue;
            }
            accepted += 1;
            let h = sos_preimage(&f, 6).unwrap();
            assert!(h.grid_min_eigenvalue(2000) >= -1e-9);
        }
        assert!(accepted >= 5, "{accepted}");
    }

    #[test]
    fn bad_inputs() {
        assert!(FejerKernel::new(1, 0).is_err());
        let mut f = MatrixTrigPoly::zero(1, 2);
        assert!(f.add_term(&[1], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]), DMatrix::zeros(2, 2)).is_err());
        assert!(f.add_term(&[1, 0], DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)).is_err());
        let g = MatrixTrigPoly::scalar(1, &[(vec![4], 1.0, 0.0)]).unwrap();
        assert!(matches!(sos_preimage(&g, 2), Err(crate::Error::Domain(_))));
        assert!(hypothesis_margin(&g, 1, 6, 10).is_err());
    }
}
