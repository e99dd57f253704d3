use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // float math outside std
use num_traits::Float as _;

use crate::error::{bail, Result};
use crate::simpleset::{SetKind, SimpleSet};
use crate::sosmin::{solve_min_values, Polynomial};

/// The inner variable of a min-max problem.
#[derive(Debug, Clone)]
pub enum Inner {
    /// `max_j g_j(x)` over a list of functions of `x`.
    Finite(Vec<Polynomial>),
    /// `max_{y ∈ set} g(x, y)` with `g` defined on the product `X × Y`
    /// (coordinates of `x` first).
    Set { set: SimpleSet, g: Polynomial },
}

/// `g(x, y)` together with the outer and inner domains.
#[derive(Debug, Clone)]
pub struct BilinearObjective {
    set_x: SimpleSet,
    inner: Inner,
}

impl BilinearObjective {
    pub fn finite(set_x: &SimpleSet, g_list: Vec<Polynomial>) -> Result<Self> {
        if g_list.is_empty() {
            bail!(Argument, "at least one function is required");
        }
        let g_list = g_list.iter().map(|g| g.on_domain(set_x)).collect::<Result<_>>()?;
        Ok(Self { set_x: set_x.clone(), inner: Inner::Finite(g_list) })
    }

    pub fn general(set_x: &SimpleSet, set_y: &SimpleSet, g: Polynomial) -> Result<Self> {
        let prod = SimpleSet::product(vec![set_x.clone(), set_y.clone()])?;
        let g = g.on_domain(&prod)?;
        Ok(Self { set_x: set_x.clone(), inner: Inner::Set { set: set_y.clone(), g } })
    }

    pub fn set_x(&self) -> &SimpleSet {
        &self.set_x
    }

    pub fn inner(&self) -> &Inner {
        &self.inner
    }

    pub fn set_y(&self) -> Option<&SimpleSet> {
        match &self.inner {
            Inner::Finite(_) => None,
            Inner::Set { set, .. } => Some(set),
        }
    }

    /// Number of functions for a finite inner set.
    pub fn p(&self) -> Option<usize> {
        match &self.inner {
            Inner::Finite(g) => Some(g.len()),
            Inner::Set { .. } => None,
        }
    }

    /// Same problem with the outer (and optionally inner) hierarchy levels
    /// changed.
    pub fn with_hierarchy(&self, sx: u32, sy: Option<u32>) -> Result<Self> {
        let set_x = self.set_x.with_hierarchy(sx)?;
        match &self.inner {
            Inner::Finite(g) => Self::finite(&set_x, g.clone()),
            Inner::Set { set, g } => {
                let set_y = match sy {
                    Some(s) => set.with_hierarchy(s)?,
                    None => set.clone(),
                };
                Self::general(&set_x, &set_y, g.clone())
            }
        }
    }

    /// Applies `f` to every function of the problem.
    pub fn map(&self, f: impl Fn(&Polynomial) -> Polynomial) -> Self {
        let inner = match &self.inner {
            Inner::Finite(g) => Inner::Finite(g.iter().map(f).collect()),
            Inner::Set { set, g } => Inner::Set { set: set.clone(), g: f(g) },
        };
        Self { set_x: self.set_x.clone(), inner }
    }

    pub fn check_representable(&self) -> Result<()> {
        match &self.inner {
            Inner::Finite(g) => g.iter().try_for_each(|g| g.check_representable()),
            Inner::Set { g, .. } => g.check_representable(),
        }
    }

    /// `g(x, y)`; for a finite inner set `y` holds the index.
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.set_x.check_member(x)?;
        match &self.inner {
            Inner::Finite(g) => {
                let j = y.first().copied().unwrap_or(f64::NAN);
                if !(j >= 0.0 && j.fract() == 0.0 && (j as usize) < g.len()) {
                    bail!(Domain, "index {j} out of range for {} functions", g.len());
                }
                Ok(g[j as usize].eval_unchecked(x))
            }
            Inner::Set { g, .. } => g.evaluate(&concat(x, y)),
        }
    }

    /// `[g_j(x_k)]` (finite) or `[g(x_k, y_j)]` (general), one row per `x_k`.
    /// Points are assumed to belong to the sets.
    pub fn eval_table(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> DMatrix<f64> {
        match &self.inner {
            Inner::Finite(g) => DMatrix::from_fn(xs.len(), g.len(), |k, j| g[j].eval_unchecked(&xs[k])),
            Inner::Set { g, .. } => DMatrix::from_fn(xs.len(), ys.len(), |k, j| g.eval_unchecked(&concat(&xs[k], &ys[j]))),
        }
    }

    /// Values `g_j(x)` of the functions of a finite inner set.
    pub fn values_at(&self, x: &[f64]) -> Option<Vec<f64>> {
        match &self.inner {
            Inner::Finite(g) => Some(g.iter().map(|g| g.eval_unchecked(x)).collect()),
            Inner::Set { .. } => None,
        }
    }

    /// `max_y g(x, y)`: by enumeration for a finite inner set, otherwise by
    /// the sum-of-squares relaxation on `Y` (exact in the cases listed in
    /// [`BilinearObjective::inner_relaxation_exact`]).
    pub fn inner_max(&self, x: &[f64], seed: u64) -> Result<f64> {
        match &self.inner {
            Inner::Finite(g) => Ok(g.iter().map(|g| g.eval_unchecked(x)).fold(f64::NEG_INFINITY, f64::max)),
            Inner::Set { set, g } => {
                let (_, p1, _) = set.dims();
                let pts = set.sample_points(p1, seed)?;
                let vals: Vec<f64> = pts.points().iter().map(|y| -g.eval_unchecked(&concat(x, y))).collect();
                let r = solve_min_values(set, pts.points(), &vals, seed)?;
                if !r.solution.is_optimal() {
                    bail!(Solver, "inner maximization ended with status {:?}", r.status);
                }
                Ok(-r.value)
            }
        }
    }

    /// Whether the relaxed set of inner moment matrices coincides with the
    /// convex hull of the true ones, so that the maximization over `y` is not
    /// relaxed: finite sets, the circle, and spheres and balls at level one.
    pub fn inner_relaxation_exact(&self) -> bool {
        match &self.inner {
            Inner::Finite(_) => true,
            Inner::Set { set, .. } => match set.kind() {
                SetKind::Discrete { .. } => true,
                SetKind::Trig { d } => *d == 1,
                SetKind::Sphere { .. } | SetKind::Ball { .. } => set.level() == 1,
                _ => false,
            },
        }
    }
}

pub(crate) fn concat(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(x.len() + y.len());
    z.extend_from_slice(x);
    z.extend_from_slice(y);
    z
}
