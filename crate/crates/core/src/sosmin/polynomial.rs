use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[allow(unused_imports)] // float math outside std
use num_traits::Float as _;

use crate::error::{bail, Result};
use crate::simpleset::{SetKind, SimpleSet};

/// `cos·cos(2π ωᵀx) + sin·sin(2π ωᵀx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub freq: Vec<i32>,
    pub cos: f64,
    pub sin: f64,
}

/// `coef · Π x_i^{exp_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoTerm {
    pub exp: Vec<u32>,
    pub coef: f64,
}

pub type Oracle = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Basis {
    Trig(Vec<TrigTerm>),
    Monomial(Vec<MonoTerm>),
    /// Evaluation oracle; no degree information is available.
    Tabulated(Oracle),
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Trig(t) => f.debug_tuple("Trig").field(t).finish(),
            Basis::Monomial(t) => f.debug_tuple("Monomial").field(t).finish(),
            Basis::Tabulated(_) => f.write_str("Tabulated(..)"),
        }
    }
}

/// A real function on a simple set, given by coefficients or by an oracle.
#[derive(Debug, Clone)]
pub struct Polynomial {
    basis: Basis,
    domain: SimpleSet,
    offset: f64,
    scale: f64,
}

impl Polynomial {
    pub fn trig(domain: &SimpleSet, terms: Vec<TrigTerm>) -> Result<Self> {
        let n = domain.ambient_dim();
        if let Some(t) = terms.iter().find(|t| t.freq.len() != n) {
            bail!(Dimension, "frequency {:?} does not have {n} components", t.freq);
        }
        if terms.iter().any(|t| !(t.cos.is_finite() && t.sin.is_finite())) {
            bail!(Argument, "non-finite trigonometric coefficient");
        }
        Ok(Self::wrap(Basis::Trig(terms), domain))
    }

    pub fn monomial(domain: &SimpleSet, terms: Vec<MonoTerm>) -> Result<Self> {
        let n = domain.ambient_dim();
        if let Some(t) = terms.iter().find(|t| t.exp.len() != n) {
            bail!(Dimension, "exponent {:?} does not have {n} components", t.exp);
        }
        if terms.iter().any(|t| !t.coef.is_finite()) {
            bail!(Argument, "non-finite monomial coefficient");
        }
        Ok(Self::wrap(Basis::Monomial(terms), domain))
    }

    pub fn tabulated(domain: &SimpleSet, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::wrap(Basis::Tabulated(Arc::new(f)), domain)
    }

    pub fn constant(domain: &SimpleSet, c: f64) -> Self {
        Self { offset: c, ..Self::wrap(Basis::Monomial(Vec::new()), domain) }
    }

    fn wrap(basis: Basis, domain: &SimpleSet) -> Self {
        Self { basis, domain: domain.clone(), offset: 0.0, scale: 1.0 }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn domain(&self) -> &SimpleSet {
        &self.domain
    }

    /// `self + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { offset: self.offset + c, ..self.clone() }
    }

    /// `a · self`.
    pub fn scaled(&self, a: f64) -> Self {
        Self { offset: self.offset * a, scale: self.scale * a, ..self.clone() }
    }

    /// Same function seen on another domain with the same coordinates, for
    /// instance the domain at a different hierarchy level.
    pub fn on_domain(&self, domain: &SimpleSet) -> Result<Self> {
        if domain.ambient_dim() != self.domain.ambient_dim() {
            bail!(Dimension, "domain has {} coordinates, expected {}", domain.ambient_dim(), self.domain.ambient_dim());
        }
        Ok(Self { domain: domain.clone(), ..self.clone() })
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.domain.check_member(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let raw = match &self.basis {
            Basis::Trig(terms) => terms
                .iter()
                .map(|t| {
                    let phase: f64 = t.freq.iter().zip(x).map(|(w, v)| *w as f64 * v).sum();
                    let a = 2.0 * PI * phase;
                    t.cos * a.cos() + t.sin * a.sin()
                })
                .sum(),
            Basis::Monomial(terms) => terms
                .iter()
                .map(|t| t.coef * t.exp.iter().zip(x).map(|(e, v)| v.powi(*e as i32)).product::<f64>())
                .sum(),
            Basis::Tabulated(f) => f(x),
        };
        self.scale * raw + self.offset
    }

    /// Checks that the function is of the form `φ(x)ᵀ F φ(x)` for the
    /// domain's kernel at its hierarchy level (per factor for products).
    pub fn check_representable(&self) -> Result<()> {
        let blocks = coordinate_blocks(&self.domain);
        match &self.basis {
            Basis::Tabulated(_) => Ok(()),
            Basis::Trig(terms) => {
                for t in terms {
                    for &(kind, ref range, level) in &blocks {
                        let w = t.freq[range.clone()].iter().map(|w| w.unsigned_abs()).max().unwrap_or(0);
                        if w == 0 {
                            continue;
                        }
                        match kind {
                            BlockKind::Trig if w <= 2 * level => {}
                            BlockKind::Trig => bail!(
                                Argument,
                                "frequency {:?} exceeds the representable bound {} at level {level}",
                                t.freq,
                                2 * level
                            ),
                            _ => bail!(Argument, "trigonometric terms need a torus domain"),
                        }
                    }
                }
                Ok(())
            }
            Basis::Monomial(terms) => {
                for t in terms {
                    for &(kind, ref range, level) in &blocks {
                        let e = &t.exp[range.clone()];
                        let deg: u32 = match kind {
                            BlockKind::Cube => e.iter().map(|v| v % 2).sum(),
                            _ => e.iter().sum(),
                        };
                        match kind {
                            BlockKind::Discrete => {}
                            BlockKind::Trig if deg > 0 => {
                                bail!(Argument, "monomial terms are not supported on the torus")
                            }
                            _ if deg > 2 * level => bail!(
                                Argument,
                                "monomial {:?} has degree {deg} above {} at level {level}",
                                t.exp,
                                2 * level
                            ),
                            _ => {}
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Effective monomial terms with the scale and offset folded in, or
    /// `None` for trigonometric and tabulated functions.
    pub fn monomial_terms(&self) -> Option<Vec<MonoTerm>> {
        let Basis::Monomial(terms) = &self.basis else { return None };
        let n = self.domain.ambient_dim();
        let mut out: Vec<MonoTerm> =
            terms.iter().map(|t| MonoTerm { exp: t.exp.clone(), coef: self.scale * t.coef }).collect();
        if self.offset != 0.0 {
            out.push(MonoTerm { exp: alloc::vec![0; n], coef: self.offset });
        }
        Some(out)
    }

    /// Largest per-coordinate frequency or total degree of the terms.
    pub fn degree(&self) -> Option<u32> {
        match &self.basis {
            Basis::Trig(t) => Some(t.iter().flat_map(|t| t.freq.iter().map(|w| w.unsigned_abs())).max().unwrap_or(0)),
            Basis::Monomial(t) => Some(t.iter().map(|t| t.exp.iter().sum()).max().unwrap_or(0)),
            Basis::Tabulated(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BlockKind {
    Trig,
    Cube,
    Discrete,
    Real,
}

type CoordBlock = (BlockKind, core::ops::Range<usize>, u32);

fn coordinate_blocks(set: &SimpleSet) -> Vec<CoordBlock> {
    fn walk(set: &SimpleSet, off: &mut usize, out: &mut Vec<CoordBlock>) {
        let kind = match set.kind() {
            SetKind::Product(fs) => {
                for f in fs {
                    walk(f, off, out);
                }
                return;
            }
            SetKind::Trig { .. } => BlockKind::Trig,
            SetKind::BooleanCube { .. } => BlockKind::Cube,
            SetKind::Discrete { .. } => BlockKind::Discrete,
            SetKind::Sphere { .. } | SetKind::Ball { .. } => BlockKind::Real,
        };
        let n = set.ambient_dim();
        out.push((kind, *off..*off + n, set.level()));
        *off += n;
    }
    let mut out = Vec::new();
    walk(set, &mut 0, &mut out);
    out
}
